//! The screening loop: train the ensemble, evaluate a composite design,
//! fit and prune a quadratic surface, drop the PSFs it no longer uses, and
//! repeat until nothing more is dropped.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use log::info;

use crate::ann::{config_entries, metrics, train_on_observations, MetricReport, TrainedPredictor, TrainingConfig};
use crate::dataset::{bundled_table4, fmt_f64, load_design, save_design, DesignTable, ObservationSet};
use crate::error::{invalid, Error, Result};
use crate::psf::PsfId;
use crate::rsm::{
    backward_eliminate, evaluate_design, fit_with_anova, generate_ccd, screen_psfs, AnovaTable, EliminationStep,
    FactorCoding, FitResult, ModelSpec, ScreeningReport, Source, DEFAULT_AXIAL,
};

/// Where each iteration's design comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignSource {
    /// A fixed composite design over the initial factors. Its coding is
    /// inferred from the table; later iterations regenerate a composite
    /// design over the survivors with that coding and the same number of
    /// center runs.
    Table {
        design: DesignTable,
        /// Use the responses stored in the table (when complete) for the
        /// first iteration instead of re-evaluating with the trained network.
        use_recorded_responses: bool,
    },
    /// A generated composite design in every iteration.
    Generated {
        coding: FactorCoding,
        n_center: usize,
        axial: f64,
    },
}

impl DesignSource {
    pub fn bundled() -> Self {
        DesignSource::Table {
            design: bundled_table4(),
            use_recorded_responses: true,
        }
    }

    pub fn generated_default() -> Self {
        DesignSource::Generated {
            coding: FactorCoding::uniform(&PsfId::ALL, 0.5, 0.3).expect("valid uniform coding"),
            n_center: 6,
            axial: DEFAULT_AXIAL,
        }
    }
}

/// How the reduced surface model is chosen each iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSelection {
    /// Hierarchical backward elimination from the full quadratic.
    BackwardElimination,
    /// A fixed term set, restricted each iteration to the active factors.
    Fixed(ModelSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub training: TrainingConfig,
    pub alpha: f64,
    pub design: DesignSource,
    pub selection: ModelSelection,
    pub response_power: f64,
    pub max_iterations: usize,
    /// The loop stops rather than keep fewer PSFs than this.
    pub min_psfs: usize,
    pub initial_psfs: Vec<PsfId>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            training: TrainingConfig::default(),
            alpha: 0.05,
            design: DesignSource::bundled(),
            selection: ModelSelection::BackwardElimination,
            response_power: 3.0,
            max_iterations: 8,
            min_psfs: 2,
            initial_psfs: PsfId::ALL.to_vec(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if !(self.response_power.is_finite() && self.response_power > 0.0) {
            return Err(invalid("power must be > 0"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be >= 1"));
        }
        if self.min_psfs < 2 {
            return Err(invalid("min_psfs must be >= 2"));
        }
        if self.initial_psfs.len() < self.min_psfs {
            return Err(invalid(format!(
                "need at least {} active PSFs, got {}",
                self.min_psfs,
                self.initial_psfs.len()
            )));
        }
        let mut seen = self.initial_psfs.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.initial_psfs.len() {
            return Err(invalid("active PSFs must be distinct"));
        }
        Ok(())
    }

    /// Applies one `key=value` setting. Training keys are forwarded to
    /// [`TrainingConfig::set`]. Relative design paths resolve against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<bool> {
        let bad = |e: String| invalid(format!("{key}: {e}"));
        if self.training.set(key, value)? {
            return Ok(true);
        }
        match key {
            "alpha" => self.alpha = value.parse().map_err(|e| bad(format!("{e}")))?,
            "power" => self.response_power = value.parse().map_err(|e| bad(format!("{e}")))?,
            "max_iterations" => self.max_iterations = value.parse().map_err(|e| bad(format!("{e}")))?,
            "min_psfs" => self.min_psfs = value.parse().map_err(|e| bad(format!("{e}")))?,
            "psfs" => {
                self.initial_psfs = value
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<PsfId>())
                    .collect::<Result<_>>()?
            }
            "model" => {
                self.selection = match value {
                    "elimination" => ModelSelection::BackwardElimination,
                    "case-study" => ModelSelection::Fixed(ModelSpec::case_study()),
                    spec => ModelSelection::Fixed(spec.parse()?),
                }
            }
            "design" => {
                self.design = match value {
                    "bundled" => DesignSource::bundled(),
                    "generate" => DesignSource::generated_default(),
                    path => {
                        let p = match base {
                            Some(b) => b.join(path),
                            None => path.into(),
                        };
                        DesignSource::Table {
                            design: load_design(fs::File::open(&p)?)?,
                            use_recorded_responses: true,
                        }
                    }
                }
            }
            "recorded_responses" => {
                let flag: bool = value.parse().map_err(|e| bad(format!("{e}")))?;
                match &mut self.design {
                    DesignSource::Table {
                        use_recorded_responses, ..
                    } => *use_recorded_responses = flag,
                    DesignSource::Generated { .. } => return Err(bad("only applies to a tabulated design".into())),
                }
            }
            "center_runs" | "axial" => match &mut self.design {
                DesignSource::Generated { n_center, axial, .. } => {
                    if key == "axial" {
                        *axial = value.parse().map_err(|e| bad(format!("{e}")))?;
                    } else {
                        *n_center = value.parse().map_err(|e| bad(format!("{e}")))?;
                    }
                }
                DesignSource::Table { .. } => return Err(bad("only applies to a generated design".into())),
            },
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Parses a flat `key=value` file on top of the defaults.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for entry in config_entries(text) {
            let (line, k, v) = entry?;
            let known = cfg.set(k, v, base).map_err(|e| Error::Parse {
                line,
                column: k.to_string(),
                message: e.to_string(),
            })?;
            if !known {
                return Err(Error::Parse {
                    line,
                    column: k.to_string(),
                    message: "unknown key".into(),
                });
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl FromStr for PipelineConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        PipelineConfig::parse(text, None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceReason {
    NoElimination,
    MaxIterations,
    MinPsfs,
}

impl fmt::Display for ConvergenceReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConvergenceReason::NoElimination => "no-elimination",
            ConvergenceReason::MaxIterations => "max-iterations",
            ConvergenceReason::MinPsfs => "min-psfs",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub index: usize,
    pub active: Vec<PsfId>,
    pub predictor: TrainedPredictor,
    /// Ensemble fit on the training observations.
    pub training_metrics: MetricReport,
    pub predicted_heps: Vec<f64>,
    /// The design with the responses that were fitted.
    pub design: DesignTable,
    pub coding: FactorCoding,
    pub recorded_responses: bool,
    pub full_model: ModelSpec,
    pub reduced_model: ModelSpec,
    pub elimination: Vec<EliminationStep>,
    pub fit: FitResult,
    pub anova: AnovaTable,
    pub screening: ScreeningReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub iterations: Vec<IterationRecord>,
    pub retained: Vec<PsfId>,
    pub reason: ConvergenceReason,
}

impl PipelineResult {
    pub fn final_predictor(&self) -> &TrainedPredictor {
        &self.iterations.last().expect("at least one iteration").predictor
    }

    /// Screening outcome of the whole run.
    pub fn converged(&self) -> bool {
        self.reason != ConvergenceReason::MaxIterations
    }
}

/// A failed run together with the iterations that completed.
#[derive(Debug)]
pub struct PipelineFailure {
    pub error: Error,
    pub partial: Vec<IterationRecord>,
}

impl fmt::Display for PipelineFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} completed iterations)", self.error, self.partial.len())
    }
}

impl std::error::Error for PipelineFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

fn center_run_count(design: &DesignTable) -> usize {
    let k = design.factors().len();
    let center: Vec<f64> = (0..k)
        .map(|j| {
            let mut levels: Vec<f64> = design.rows().iter().map(|r| r.levels[j]).collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            levels[levels.len() / 2]
        })
        .collect();
    design.rows().iter().filter(|r| r.levels == center).count()
}

/// Design and coding for one iteration, before evaluation.
fn iteration_design(source: &DesignSource, active: &[PsfId], first: bool) -> Result<(DesignTable, FactorCoding, bool)> {
    match source {
        DesignSource::Table {
            design,
            use_recorded_responses,
        } => {
            let coding = FactorCoding::infer(design)?;
            let mut sorted_design = design.factors().to_vec();
            let mut sorted_active = active.to_vec();
            sorted_design.sort();
            sorted_active.sort();
            if first && sorted_design == sorted_active {
                let recorded = *use_recorded_responses && design.responses().is_ok();
                Ok((design.clone(), coding, recorded))
            } else {
                let coding = coding.restrict(active)?;
                let d = generate_ccd(active, &coding, center_run_count(design), DEFAULT_AXIAL)?;
                Ok((d, coding, false))
            }
        }
        DesignSource::Generated {
            coding,
            n_center,
            axial,
        } => {
            let coding = coding.restrict(active)?;
            let d = generate_ccd(active, &coding, *n_center, *axial)?;
            Ok((d, coding, false))
        }
    }
}

fn run_iteration(
    obs: &ObservationSet,
    config: &PipelineConfig,
    index: usize,
    active: &[PsfId],
) -> Result<IterationRecord> {
    let predictor = train_on_observations(obs, active, &config.training)?;
    let predicted_heps: Vec<f64> = predictor.predict_observations(obs)?.iter().map(|p| p.value()).collect();
    let training_metrics = metrics(&predicted_heps, &obs.heps())?;
    let (design, coding, recorded) = iteration_design(&config.design, active, index == 1)?;
    let design = if recorded {
        design
    } else {
        evaluate_design(&design, &predictor)?
    };
    let full_model = match &config.selection {
        ModelSelection::BackwardElimination => ModelSpec::full_quadratic(active, config.response_power)?,
        ModelSelection::Fixed(spec) => ModelSpec::new(
            spec.terms()
                .copied()
                .filter(|t| t.factors().iter().all(|f| active.contains(f))),
            config.response_power,
        )?,
    };
    let (reduced_model, elimination) = match &config.selection {
        ModelSelection::BackwardElimination => backward_eliminate(&design, &full_model, config.alpha, &coding)?,
        ModelSelection::Fixed(_) => (full_model.clone(), Vec::new()),
    };
    let (fit, anova) = fit_with_anova(&design, &reduced_model, &coding)?;
    let screening = screen_psfs(&reduced_model, active, Some(&anova));
    Ok(IterationRecord {
        index,
        active: active.to_vec(),
        predictor,
        training_metrics,
        predicted_heps,
        design,
        coding,
        recorded_responses: recorded,
        full_model,
        reduced_model,
        elimination,
        fit,
        anova,
        screening,
    })
}

/// Runs the screening loop. Deterministic for a fixed config.
pub fn run(obs: &ObservationSet, config: &PipelineConfig) -> std::result::Result<PipelineResult, PipelineFailure> {
    let fail = |error, partial| PipelineFailure { error, partial };
    if let Err(e) = config.validate() {
        return Err(fail(e, Vec::new()));
    }
    if obs.is_empty() {
        return Err(fail(invalid("no observations"), Vec::new()));
    }
    let mut active = config.initial_psfs.clone();
    let mut iterations: Vec<IterationRecord> = Vec::new();
    for index in 1..=config.max_iterations {
        let record = match run_iteration(obs, config, index, &active) {
            Ok(r) => r,
            Err(e) => return Err(fail(e, iterations)),
        };
        let eliminated = record.screening.eliminated.clone();
        let retained = record.screening.retained.clone();
        info!(
            "iteration {index}: {} active, eliminated [{}]",
            active.len(),
            letters(&eliminated)
        );
        iterations.push(record);
        let reason = if eliminated.is_empty() {
            Some(ConvergenceReason::NoElimination)
        } else if retained.len() < config.min_psfs {
            Some(ConvergenceReason::MinPsfs)
        } else {
            active = retained;
            (index == config.max_iterations).then_some(ConvergenceReason::MaxIterations)
        };
        if let Some(reason) = reason {
            return Ok(PipelineResult {
                iterations,
                retained: active,
                reason,
            });
        }
    }
    unreachable!("the final iteration always sets a reason")
}

fn letters(psfs: &[PsfId]) -> String {
    psfs.iter().map(|p| p.letter()).collect()
}

/// Per-instance squared errors of two predictors on the same observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub id: String,
    pub observed: f64,
    pub predicted_before: f64,
    pub predicted_after: f64,
    pub se_before: f64,
    pub se_after: f64,
}

impl ComparisonRow {
    pub fn delta(&self) -> f64 {
        self.se_after - self.se_before
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub mse_before: f64,
    pub mse_after: f64,
}

impl Comparison {
    pub fn from_predictions(ids: &[String], observed: &[f64], before: &[f64], after: &[f64]) -> Result<Self> {
        let n = ids.len();
        for len in [observed.len(), before.len(), after.len()] {
            if len != n {
                return Err(Error::Dimension { expected: n, got: len });
            }
        }
        let mb = metrics(before, observed)?;
        let ma = metrics(after, observed)?;
        let rows = (0..n)
            .map(|i| ComparisonRow {
                id: ids[i].clone(),
                observed: observed[i],
                predicted_before: before[i],
                predicted_after: after[i],
                se_before: mb.squared_errors[i],
                se_after: ma.squared_errors[i],
            })
            .collect();
        Ok(Comparison {
            rows,
            mse_before: mb.mse,
            mse_after: ma.mse,
        })
    }

    pub fn delta(&self) -> f64 {
        self.mse_after - self.mse_before
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record([
            "id",
            "observed_hep",
            "predicted_before",
            "predicted_after",
            "se_before",
            "se_after",
            "delta",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.id.clone(),
                fmt_f64(r.observed),
                fmt_f64(r.predicted_before),
                fmt_f64(r.predicted_after),
                fmt_f64(r.se_before),
                fmt_f64(r.se_after),
                fmt_f64(r.delta()),
            ])?;
        }
        w.write_record([
            "MSE".to_string(),
            String::new(),
            String::new(),
            String::new(),
            fmt_f64(self.mse_before),
            fmt_f64(self.mse_after),
            fmt_f64(self.delta()),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Squared errors of both predictors against the observed HEPs.
pub fn compare_before_after(
    obs: &ObservationSet,
    before: &TrainedPredictor,
    after: &TrainedPredictor,
) -> Result<Comparison> {
    let ids: Vec<String> = obs.instances().iter().map(|i| i.id.clone()).collect();
    let b: Vec<f64> = before.predict_observations(obs)?.iter().map(|p| p.value()).collect();
    let a: Vec<f64> = after.predict_observations(obs)?.iter().map(|p| p.value()).collect();
    Comparison::from_predictions(&ids, &obs.heps(), &b, &a)
}

/// Writes `bytes` to a sibling temporary file, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| invalid(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Directory name of an iteration, e.g. `iterations/01`.
pub fn iteration_dir(index: usize) -> String {
    format!("iterations/{index:02}")
}

fn write_iteration(record: &IterationRecord, obs: &ObservationSet, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;

    let metrics_csv = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["id", "observed_hep", "predicted_hep", "squared_error"])?;
        for (i, inst) in obs.instances().iter().enumerate() {
            w.write_record([
                inst.id.clone(),
                fmt_f64(inst.observed_hep.value()),
                fmt_f64(record.predicted_heps[i]),
                fmt_f64(record.training_metrics.squared_errors[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    write_atomic(&dir.join("metrics.csv"), &metrics_csv)?;

    let training_csv = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["seed", "final_loss", "status"])?;
        let p = &record.predictor;
        let mut rows: Vec<(u64, String, &str)> = p
            .ensemble()
            .iter()
            .map(|m| (m.seed, fmt_f64(m.final_loss), "trained"))
            .collect();
        rows.extend(p.diverged().iter().map(|(s, e)| (*s, format!("epoch {e}"), "diverged")));
        rows.sort_by_key(|r| r.0);
        for (s, l, st) in rows {
            w.write_record([s.to_string(), l, st.to_string()])?;
        }
        w.write_record([
            "ensemble_mse".to_string(),
            fmt_f64(record.training_metrics.mse),
            String::new(),
        ])?;
        w.write_record([
            "ensemble_r2".to_string(),
            opt(record.training_metrics.r_squared),
            String::new(),
        ])?;
        w.flush()?;
        Ok(())
    })?;
    write_atomic(&dir.join("training.csv"), &training_csv)?;

    write_atomic(&dir.join("predictor.txt"), record.predictor.to_text().as_bytes())?;
    write_atomic(
        &dir.join("design.csv"),
        &csv_bytes(|buf| save_design(&record.design, buf))?,
    )?;
    write_atomic(&dir.join("anova.csv"), &csv_bytes(|buf| record.anova.write_csv(buf))?)?;
    write_atomic(
        &dir.join("screening.csv"),
        &csv_bytes(|buf| record.screening.write_csv(buf))?,
    )?;

    let fit_csv = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record([
            "std",
            "run",
            "response",
            "fitted_response",
            "transformed",
            "fitted",
            "residual",
        ])?;
        let back = record.fit.fitted_response();
        for (i, row) in record.design.rows().iter().enumerate() {
            w.write_record([
                row.std_order.to_string(),
                row.run_order.to_string(),
                opt(row.response),
                fmt_f64(back[i]),
                fmt_f64(record.fit.transformed_response[i]),
                fmt_f64(record.fit.fitted[i]),
                fmt_f64(record.fit.residuals[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    write_atomic(&dir.join("fit.csv"), &fit_csv)?;

    let elim_csv = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["step", "removed", "p_value", "sse_after"])?;
        for (i, s) in record.elimination.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                s.removed.to_string(),
                fmt_f64(s.p_value),
                fmt_f64(s.sse_after),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    write_atomic(&dir.join("elimination.csv"), &elim_csv)?;

    let coding: Vec<String> = record
        .coding
        .factors()
        .iter()
        .map(|f| {
            let (c, h) = record.coding.get(*f).expect("coded factor");
            format!("{}:{}:{}", f.letter(), fmt_f64(c), fmt_f64(h))
        })
        .collect();
    let model_txt = format!(
        "active={}\nresponses={}\ncoding={}\nfull={}\nreduced={}\nequation={}\n",
        letters(&record.active),
        if record.recorded_responses {
            "recorded"
        } else {
            "evaluated"
        },
        coding.join(" "),
        record.full_model,
        record.reduced_model,
        record.fit.actual_equation(),
    );
    write_atomic(&dir.join("model.txt"), model_txt.as_bytes())?;
    Ok(())
}

fn summary_csv(iterations: &[IterationRecord]) -> Result<Vec<u8>> {
    csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record([
            "iteration",
            "active",
            "eliminated",
            "retained",
            "eliminated_names",
            "model_terms",
            "ensemble_mse",
            "ensemble_r2",
            "model_f",
            "model_p",
            "lack_of_fit_f",
            "r_squared",
        ])?;
        for r in iterations {
            let model = r.anova.get(Source::Model);
            let names: Vec<&str> = r.screening.eliminated.iter().map(|p| p.display_name()).collect();
            w.write_record([
                r.index.to_string(),
                letters(&r.active),
                letters(&r.screening.eliminated),
                letters(&r.screening.retained),
                names.join("; "),
                r.reduced_model.len().to_string(),
                fmt_f64(r.training_metrics.mse),
                opt(r.training_metrics.r_squared),
                opt(model.and_then(|m| m.f_value)),
                opt(model.and_then(|m| m.p_value)),
                opt(r.anova.get(Source::LackOfFit).and_then(|m| m.f_value)),
                fmt_f64(r.fit.r_squared),
            ])?;
        }
        w.flush()?;
        Ok(())
    })
}

/// Serializes a trail of iterations into `dir`: `iterations/NN/` per
/// iteration plus a top-level `summary.csv`.
pub fn write_iterations(iterations: &[IterationRecord], obs: &ObservationSet, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for r in iterations {
        write_iteration(r, obs, &dir.join(iteration_dir(r.index)))?;
    }
    write_atomic(&dir.join("summary.csv"), &summary_csv(iterations)?)
}

/// Writes the full result directory: the iteration trail, `status.txt`
/// and, with two or more iterations, `comparison.csv` (first vs last
/// predictor).
pub fn write_result_dir(result: &PipelineResult, obs: &ObservationSet, dir: &Path) -> Result<()> {
    write_iterations(&result.iterations, obs, dir)?;
    let first = &result.iterations[0];
    let last = result.iterations.last().expect("non-empty");
    let cmp = compare_before_after(obs, &first.predictor, &last.predictor)?;
    write_atomic(&dir.join("comparison.csv"), &csv_bytes(|buf| cmp.write_csv(buf))?)?;
    let status = format!(
        "status=complete\nreason={}\niterations={}\nretained={}\n",
        result.reason,
        result.iterations.len(),
        letters(&result.retained)
    );
    write_atomic(&dir.join("status.txt"), status.as_bytes())
}

/// Writes whatever completed before a failure, with a failure status.
pub fn write_failure_dir(failure: &PipelineFailure, obs: &ObservationSet, dir: &Path) -> Result<()> {
    write_iterations(&failure.partial, obs, dir)?;
    let status = format!(
        "status=failed\niterations={}\nerror={}\n",
        failure.partial.len(),
        failure.error.to_string().replace('\n', " ")
    );
    write_atomic(&dir.join("status.txt"), status.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{bundled_table2, Instance};
    use crate::psf::{Probability, PsfVector};

    fn fast_training() -> TrainingConfig {
        TrainingConfig {
            max_epochs: 3_000,
            n_replications: 2,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn config_parsing() {
        let cfg: PipelineConfig = "alpha=0.1\nseed=9\nmodel=case-study\nmax_iterations=2 # two\n"
            .parse()
            .unwrap();
        assert_eq!(cfg.alpha, 0.1);
        assert_eq!(cfg.training.seed, 9);
        assert_eq!(cfg.max_iterations, 2);
        assert_eq!(cfg.selection, ModelSelection::Fixed(ModelSpec::case_study()));
        assert!("max_iterations=0".parse::<PipelineConfig>().is_err());
        assert!("alpha=1.5".parse::<PipelineConfig>().is_err());
        let err = "bogus=1".parse::<PipelineConfig>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let g: PipelineConfig = "design=generate\ncenter_runs=3".parse().unwrap();
        assert!(matches!(g.design, DesignSource::Generated { n_center: 3, .. }));
        assert!("center_runs=3".parse::<PipelineConfig>().is_err());
    }

    #[test]
    fn identical_predictors_compare_to_zero_delta() {
        let obs = bundled_table2();
        let p = train_on_observations(&obs, &PsfId::ALL, &fast_training()).unwrap();
        let c = compare_before_after(&obs, &p, &p).unwrap();
        assert_eq!(c.rows.len(), obs.len());
        assert!(c.rows.iter().all(|r| r.delta() == 0.0));
        assert_eq!(c.delta(), 0.0);
    }

    #[test]
    fn single_iteration_stops() {
        let cfg = PipelineConfig {
            training: fast_training(),
            max_iterations: 1,
            ..PipelineConfig::default()
        };
        let r = run(&bundled_table2(), &cfg).unwrap();
        assert_eq!(r.iterations.len(), 1);
        assert!(matches!(
            r.reason,
            ConvergenceReason::MaxIterations | ConvergenceReason::NoElimination
        ));
        assert!(r.iterations[0].recorded_responses);
        assert!(r.iterations[0].screening.eliminated.contains(&PsfId::Procedures));
    }

    #[test]
    fn case_study_model_drops_procedures_then_settles() {
        let cfg = PipelineConfig {
            training: fast_training(),
            selection: ModelSelection::Fixed(ModelSpec::case_study()),
            ..PipelineConfig::default()
        };
        let r = run(&bundled_table2(), &cfg).unwrap();
        assert_eq!(r.iterations[0].screening.eliminated, vec![PsfId::Procedures]);
        assert_eq!(r.iterations[1].active.len(), 7);
        assert!(!r.iterations[1].active.contains(&PsfId::Procedures));
        assert_eq!(r.reason, ConvergenceReason::NoElimination);
        assert_eq!(r.iterations[1].design.factors().len(), 7);
        assert!(!r.iterations[1].recorded_responses);
    }

    #[test]
    fn min_psfs_stops_without_applying() {
        // intercept-only keeps nothing, which would leave fewer than two
        let cfg = PipelineConfig {
            training: fast_training(),
            selection: ModelSelection::Fixed(ModelSpec::intercept_only(3.0).unwrap()),
            ..PipelineConfig::default()
        };
        let r = run(&bundled_table2(), &cfg).unwrap();
        assert_eq!(r.reason, ConvergenceReason::MinPsfs);
        assert_eq!(r.iterations.len(), 1);
        assert_eq!(r.retained, PsfId::ALL.to_vec());
    }

    #[test]
    fn failures_keep_the_partial_trail() {
        // one instance with a target of exactly 1 cannot be trained on
        let inst = Instance {
            id: "x".into(),
            psfs: PsfVector::nominal(),
            observed_hep: Probability::ONE,
            trials: None,
        };
        let obs = ObservationSet::new(vec![inst]).unwrap();
        let err = run(&obs, &PipelineConfig::default()).unwrap_err();
        assert!(err.partial.is_empty());
    }
}
