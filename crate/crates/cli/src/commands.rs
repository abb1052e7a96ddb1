use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use hra_core::ann::{metrics, train_on_observations};
use hra_core::dataset::{
    bundled_table2, bundled_table4, fmt_f64, load_design, load_observations, save_design, DesignTable, ObservationSet,
};
use hra_core::pipeline::{self, write_atomic, DesignSource, PipelineConfig};
use hra_core::psf::{composite_hep, nominal_hep, total_psf_impact, ErrorTally, Mode, MultiplierConfig, PsfId};
use hra_core::rsm::{
    backward_eliminate, evaluate_design, fit_with_anova, generate_ccd, screen_psfs, AnovaTable, FactorCoding,
    ModelSpec, DEFAULT_AXIAL,
};
use hra_core::Error;

use crate::{AnovaArgs, DesignArgs, DesignSourceFlags, PipelineArgs, QuantifyArgs, ScreenArgs, TrainArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

/// Maps an error chain onto the exit-code contract.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Diverged { .. } | Error::AllDiverged(_) | Error::RankDeficient { .. } => EXIT_NUMERICAL,
                _ => EXIT_INPUT,
            };
        }
    }
    EXIT_INPUT
}

/// Four significant digits for console output.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-4..6).contains(&e) {
        format!("{:.*}", (3 - e).max(0) as usize, x)
    } else {
        format!("{x:.3e}")
    }
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path)
        .map_err(Error::from)
        .with_context(|| format!("cannot open {}", path.display()))
}

fn read_observations(path: Option<&Path>) -> Result<ObservationSet> {
    match path {
        Some(p) => load_observations(open(p)?).with_context(|| format!("reading {}", p.display())),
        None => Ok(bundled_table2()),
    }
}

fn read_design(path: Option<&Path>) -> Result<DesignTable> {
    match path {
        Some(p) => load_design(open(p)?).with_context(|| format!("reading {}", p.display())),
        None => Ok(bundled_table4()),
    }
}

fn parse_letters(s: &str) -> Result<Vec<PsfId>> {
    let mut out = Vec::new();
    for c in s.chars().filter(|c| !c.is_whitespace() && *c != ',') {
        let p = PsfId::from_letter(c.to_ascii_uppercase())
            .ok_or_else(|| Error::InvalidValue(format!("unknown PSF letter {c:?}")))?;
        if out.contains(&p) {
            return Err(Error::InvalidValue(format!("PSF letter {c} listed twice")).into());
        }
        out.push(p);
    }
    Ok(out)
}

fn letters(psfs: &[PsfId]) -> String {
    psfs.iter().map(|p| p.letter()).collect()
}

/// Parses a model argument; `--power` applies unless the text sets its own.
fn parse_model(text: &str, power: f64) -> Result<ModelSpec> {
    let spec: ModelSpec = text.parse()?;
    if text.contains("power") {
        Ok(spec)
    } else {
        Ok(ModelSpec::new(spec.terms().copied(), power)?)
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> hra_core::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(Error::from)
        .with_context(|| format!("cannot create {}", dir.display()))
}

pub fn quantify(a: QuantifyArgs) -> Result<u8> {
    let config = match &a.multipliers {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(Error::from)
                .with_context(|| format!("cannot read {}", p.display()))?;
            MultiplierConfig::parse(&text).with_context(|| format!("reading {}", p.display()))?
        }
        None => MultiplierConfig::bundled(),
    };
    let mode: Mode = a.mode.parse()?;
    let mut levels = Vec::new();
    for spec in &a.levels {
        let (k, v) = spec
            .split_once('=')
            .ok_or_else(|| Error::InvalidValue(format!("--level expects PSF=LABEL, got {spec:?}")))?;
        let psf: PsfId = k.trim().parse()?;
        levels.push((psf, v.trim().trim_matches('"').to_string()));
    }
    let nominal = nominal_hep(ErrorTally::new(a.occurred, a.potential)?);
    println!("nominal_hep={}", nominal.value());
    match config.psf_vector(&levels, mode)? {
        Some(v) => {
            let total = total_psf_impact(&v);
            println!("psf_total={total}");
            println!("composite_hep={}", composite_hep(nominal, total)?.value());
        }
        None => {
            println!("psf_total=failure-certain");
            println!("composite_hep=1");
        }
    }
    Ok(EXIT_OK)
}

fn pipeline_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(Error::from)
                .with_context(|| format!("cannot read {}", p.display()))?;
            PipelineConfig::parse(&text, p.parent()).with_context(|| format!("reading {}", p.display()))
        }
        None => Ok(PipelineConfig::default()),
    }
}

pub fn train(a: TrainArgs) -> Result<u8> {
    let obs = read_observations(a.observations.as_deref())?;
    let mut cfg = pipeline_config(a.training.config.as_deref())?.training;
    if let Some(s) = a.training.seed {
        cfg.seed = s;
    }
    if let Some(r) = a.training.replications {
        cfg.n_replications = r;
    }
    let active = match &a.psfs {
        Some(s) => parse_letters(s)?,
        None => PsfId::ALL.to_vec(),
    };
    let predictor = train_on_observations(&obs, &active, &cfg)?;
    let predicted: Vec<f64> = predictor
        .predict_observations(&obs)?
        .iter()
        .map(|p| p.value())
        .collect();
    let m = metrics(&predicted, &obs.heps())?;

    create_dir(&a.out)?;
    write_atomic(&a.out.join("predictor.txt"), predictor.to_text().as_bytes())?;
    let table = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["id", "observed_hep", "predicted_hep", "squared_error"])?;
        for (i, inst) in obs.instances().iter().enumerate() {
            w.write_record([
                inst.id.clone(),
                fmt_f64(inst.observed_hep.value()),
                fmt_f64(predicted[i]),
                fmt_f64(m.squared_errors[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    write_atomic(&a.out.join("metrics.csv"), &table)?;

    println!(
        "trained {} of {} replications on {} instances ({} inputs)",
        predictor.ensemble().len(),
        cfg.n_replications,
        obs.len(),
        active.len()
    );
    println!("MSE {}", sig4(m.mse));
    match m.r_squared {
        Some(r) => println!("R^2 {}", sig4(r)),
        None => println!("R^2 undefined"),
    }
    Ok(EXIT_OK)
}

pub fn design(a: DesignArgs) -> Result<u8> {
    let mut design = match (&a.source, &a.psfs) {
        (DesignSourceFlags { generate: true, .. }, psfs) => {
            let factors = match psfs {
                Some(s) => parse_letters(s)?,
                None => PsfId::ALL.to_vec(),
            };
            let coding = FactorCoding::uniform(&factors, 0.5, 0.3)?;
            generate_ccd(&factors, &coding, a.center_runs, DEFAULT_AXIAL)?
        }
        (src, _) => read_design(src.design.as_deref())?,
    };
    if let Some(p) = &a.predictor {
        let text = fs::read_to_string(p)
            .map_err(Error::from)
            .with_context(|| format!("cannot read {}", p.display()))?;
        let predictor = hra_core::ann::TrainedPredictor::from_text(&text)?;
        design = evaluate_design(&design, &predictor)?;
    }
    create_dir(&a.out)?;
    write_atomic(&a.out.join("design.csv"), &csv_bytes(|buf| save_design(&design, buf))?)?;
    println!("{} runs over factors {}", design.len(), letters(design.factors()));
    Ok(EXIT_OK)
}

fn print_anova(table: &AnovaTable) {
    println!(
        "{:<12} {:>12} {:>4} {:>12} {:>10} {:>10}",
        "source", "SS", "df", "MS", "F", "p"
    );
    let o = |v: Option<f64>| v.map(sig4).unwrap_or_default();
    for r in &table.rows {
        println!(
            "{:<12} {:>12} {:>4} {:>12} {:>10} {:>10}",
            r.source.to_string(),
            sig4(r.sum_of_squares),
            r.df,
            o(r.mean_square),
            o(r.f_value),
            o(r.p_value)
        );
    }
}

fn write_fit_outputs(
    dir: &Path,
    fit: &hra_core::rsm::FitResult,
    table: &AnovaTable,
    design: &DesignTable,
) -> Result<()> {
    create_dir(dir)?;
    write_atomic(&dir.join("anova.csv"), &csv_bytes(|buf| table.write_csv(buf))?)?;
    let back = fit.fitted_response();
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
        for (i, row) in design.rows().iter().enumerate() {
            w.write_record([
                row.std_order.to_string(),
                row.run_order.to_string(),
                row.response.map(fmt_f64).unwrap_or_default(),
                fmt_f64(back[i]),
                fmt_f64(fit.transformed_response[i]),
                fmt_f64(fit.fitted[i]),
                fmt_f64(fit.residuals[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    write_atomic(&dir.join("fit.csv"), &fit_csv)?;
    let model = format!("model={}\nequation={}", fit.spec, fit.actual_equation());
    write_atomic(&dir.join("model.txt"), model.as_bytes())?;
    Ok(())
}

pub fn anova(a: AnovaArgs) -> Result<u8> {
    let design = read_design(a.design.as_deref())?;
    let spec = match &a.model {
        Some(m) => parse_model(m, a.power)?,
        None => ModelSpec::new(ModelSpec::case_study().terms().copied(), a.power)?,
    };
    let coding = FactorCoding::infer(&design)?;
    let (fit, table) = fit_with_anova(&design, &spec, &coding)?;
    println!("model: {spec}");
    print_anova(&table);
    println!("R^2 {}", sig4(fit.r_squared));
    if let Some(dir) = &a.out {
        write_fit_outputs(dir, &fit, &table, &design)?;
    }
    Ok(EXIT_OK)
}

pub fn screen(a: ScreenArgs) -> Result<u8> {
    let design = read_design(a.design.as_deref())?;
    let coding = FactorCoding::infer(&design)?;
    let factors = design.factors().to_vec();
    let (reduced, steps) = match &a.model {
        Some(m) => (parse_model(m, a.power)?, Vec::new()),
        None => {
            let full = ModelSpec::full_quadratic(&factors, a.power)?;
            backward_eliminate(&design, &full, a.alpha, &coding)?
        }
    };
    let (fit, table) = fit_with_anova(&design, &reduced, &coding)?;
    let report = screen_psfs(&reduced, &factors, Some(&table));
    for s in &steps {
        println!("removed {:<5} p = {}", s.removed.to_string(), sig4(s.p_value));
    }
    println!("model: {reduced}");
    let names = |ps: &[PsfId]| ps.iter().map(|p| p.display_name()).collect::<Vec<_>>().join(", ");
    println!("eliminated: {}", names(&report.eliminated));
    println!("retained: {}", names(&report.retained));
    if let Some(dir) = &a.out {
        write_fit_outputs(dir, &fit, &table, &design)?;
        write_atomic(&dir.join("screening.csv"), &csv_bytes(|buf| report.write_csv(buf))?)?;
        let elim = csv_bytes(|buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["step", "removed", "p_value", "sse_after"])?;
            for (i, s) in steps.iter().enumerate() {
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
        write_atomic(&dir.join("elimination.csv"), &elim)?;
    }
    Ok(EXIT_OK)
}

pub fn pipeline(a: PipelineArgs) -> Result<u8> {
    let obs = read_observations(a.observations.as_deref())?;
    let mut cfg = pipeline_config(a.training.config.as_deref())?;
    if let Some(p) = &a.source.design {
        cfg.design = DesignSource::Table {
            design: read_design(Some(p))?,
            use_recorded_responses: true,
        };
    } else if a.source.generate {
        cfg.design = DesignSource::generated_default();
    }
    if let Some(s) = a.training.seed {
        cfg.training.seed = s;
    }
    if let Some(r) = a.training.replications {
        cfg.training.n_replications = r;
    }
    if let Some(x) = a.alpha {
        cfg.alpha = x;
    }
    if let Some(x) = a.power {
        cfg.response_power = x;
    }
    if let Some(x) = a.max_iterations {
        cfg.max_iterations = x;
    }
    cfg.validate()?;
    create_dir(&a.out)?;
    match pipeline::run(&obs, &cfg) {
        Ok(result) => {
            pipeline::write_result_dir(&result, &obs, &a.out)?;
            for it in &result.iterations {
                let elim: Vec<&str> = it.screening.eliminated.iter().map(|p| p.display_name()).collect();
                println!(
                    "iteration {}: {} active, MSE {}, eliminated [{}]",
                    it.index,
                    it.active.len(),
                    sig4(it.training_metrics.mse),
                    elim.join(", ")
                );
            }
            println!("stopped: {}; retained {}", result.reason, letters(&result.retained));
            Ok(if result.converged() {
                EXIT_OK
            } else {
                EXIT_NOT_CONVERGED
            })
        }
        Err(failure) => {
            pipeline::write_failure_dir(&failure, &obs, &a.out)
                .with_context(|| format!("writing partial trail to {}", a.out.display()))?;
            Err(failure.into())
        }
    }
}
