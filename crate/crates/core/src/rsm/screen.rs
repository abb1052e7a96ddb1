//! Hierarchical backward elimination and PSF screening.

use std::io::Write;

use rayon::prelude::*;

use crate::dataset::DesignTable;
use crate::error::{invalid, Result};
use crate::psf::PsfId;

use super::anova::{anova, AnovaTable};
use super::design::FactorCoding;
use super::fit::{fit, FitResult};
use super::model::{ModelSpec, ModelTerm};

#[derive(Debug, Clone, PartialEq)]
pub struct EliminationStep {
    pub removed: ModelTerm,
    pub p_value: f64,
    /// Residual SS of the refitted model after the removal.
    pub sse_after: f64,
}

/// p-value of every removable term; terms with an undefined test sort as 1.
fn removable_p_values(spec: &ModelSpec, table: &AnovaTable) -> Vec<(ModelTerm, f64)> {
    spec.terms()
        .filter(|t| spec.is_removable(t))
        .map(|t| (*t, table.p_value(*t).unwrap_or(1.0)))
        .collect()
}

/// Repeatedly drops the removable term with the largest p-value above
/// `alpha`, refitting after each removal. Main effects are only removable
/// once no interaction or quadratic term uses them. Ties go to the term
/// latest in canonical order.
pub fn backward_eliminate(
    design: &DesignTable,
    full_spec: &ModelSpec,
    alpha: f64,
    coding: &FactorCoding,
) -> Result<(ModelSpec, Vec<EliminationStep>)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let mut spec = full_spec.clone();
    let mut steps = Vec::new();
    loop {
        let current = fit(design, &spec, coding)?;
        let table = anova(&current, design)?;
        let candidates = removable_p_values(&spec, &table);
        let worst = candidates
            .into_iter()
            .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        match worst {
            Some((term, p)) if p > alpha => {
                spec = spec.without(&term)?;
                let refit = fit(design, &spec, coding)?;
                steps.push(EliminationStep {
                    removed: term,
                    p_value: p,
                    sse_after: refit.sse,
                });
            }
            _ => return Ok((spec, steps)),
        }
    }
}

/// Candidate-refit variant: evaluates each removable term by refitting
/// without it (in parallel) instead of reading the ANOVA table. Yields the
/// same path as [`backward_eliminate`]; kept as an independent check.
pub fn backward_eliminate_by_refit(
    design: &DesignTable,
    full_spec: &ModelSpec,
    alpha: f64,
    coding: &FactorCoding,
) -> Result<ModelSpec> {
    let mut spec = full_spec.clone();
    loop {
        let current = fit(design, &spec, coding)?;
        let df_res = design.len() - spec.len();
        let ms_res = current.sse / df_res as f64;
        let removable: Vec<ModelTerm> = spec.terms().filter(|t| spec.is_removable(t)).copied().collect();
        let scored: Vec<(ModelTerm, f64)> = removable
            .par_iter()
            .map(|t| {
                let reduced = spec.without(t)?;
                let r = fit(design, &reduced, coding)?;
                let f = (r.sse - current.sse).max(0.0) / ms_res;
                Ok((*t, crate::stats::f_sf(f, 1.0, df_res as f64)))
            })
            .collect::<Result<_>>()?;
        let worst = scored
            .into_iter()
            .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        match worst {
            Some((term, p)) if p > alpha => spec = spec.without(&term)?,
            _ => return Ok(spec),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorEvidence {
    pub psf: PsfId,
    /// Surviving terms that involve this factor, with p-values when known.
    pub terms: Vec<(ModelTerm, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningReport {
    pub eliminated: Vec<PsfId>,
    pub retained: Vec<PsfId>,
    pub evidence: Vec<FactorEvidence>,
}

impl ScreeningReport {
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["psf", "letter", "status", "terms", "p_values"])?;
        for e in &self.evidence {
            let status = if self.eliminated.contains(&e.psf) {
                "eliminated"
            } else {
                "retained"
            };
            let terms: Vec<String> = e.terms.iter().map(|(t, _)| t.to_string()).collect();
            let ps: Vec<String> = e
                .terms
                .iter()
                .map(|(_, p)| p.map(crate::dataset::fmt_f64).unwrap_or_default())
                .collect();
            w.write_record([
                e.psf.display_name().to_string(),
                e.psf.letter().to_string(),
                status.to_string(),
                terms.join(" "),
                ps.join(" "),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A PSF is eliminated iff no term of the reduced model involves it.
pub fn screen_psfs(reduced: &ModelSpec, active: &[PsfId], table: Option<&AnovaTable>) -> ScreeningReport {
    let mut eliminated = Vec::new();
    let mut retained = Vec::new();
    let mut evidence = Vec::new();
    for &psf in active {
        let terms: Vec<(ModelTerm, Option<f64>)> = reduced
            .terms()
            .filter(|t| t.involves(psf))
            .map(|t| (*t, table.and_then(|a| a.p_value(*t))))
            .collect();
        if terms.is_empty() {
            eliminated.push(psf);
        } else {
            retained.push(psf);
        }
        evidence.push(FactorEvidence { psf, terms });
    }
    ScreeningReport {
        eliminated,
        retained,
        evidence,
    }
}

/// Fit plus ANOVA, the pair most callers need.
pub fn fit_with_anova(
    design: &DesignTable,
    spec: &ModelSpec,
    coding: &FactorCoding,
) -> Result<(FitResult, AnovaTable)> {
    let f = fit(design, spec, coding)?;
    let a = anova(&f, design)?;
    Ok((f, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rsm::design::{generate_ccd, DEFAULT_AXIAL};
    use PsfId::*;

    #[test]
    fn case_study_model_screens_out_procedures() {
        let r = screen_psfs(&ModelSpec::case_study(), &PsfId::ALL, None);
        assert_eq!(r.eliminated, vec![Procedures]);
        assert_eq!(r.retained.len(), 7);
    }

    #[test]
    fn intercept_only_and_full_models() {
        let r = screen_psfs(&ModelSpec::intercept_only(1.0).unwrap(), &PsfId::ALL, None);
        assert_eq!(r.eliminated, PsfId::ALL.to_vec());
        let full = ModelSpec::full_quadratic(&PsfId::ALL, 1.0).unwrap();
        assert!(screen_psfs(&full, &PsfId::ALL, None).eliminated.is_empty());
    }

    #[test]
    fn screening_follows_letter_permutation() {
        let spec: ModelSpec = "A, C, AC, C^2".parse().unwrap();
        let permuted: ModelSpec = "B, D, BD, D^2".parse().unwrap();
        let r = screen_psfs(&spec, &PsfId::ALL[..4], None);
        let q = screen_psfs(&permuted, &PsfId::ALL[..4], None);
        assert_eq!(r.eliminated, vec![Stress, ExperienceTraining]);
        assert_eq!(q.eliminated, vec![AvailableTime, Complexity]);
    }

    #[test]
    fn alpha_bounds_checked() {
        let fs = [AvailableTime, Stress];
        let coding = FactorCoding::uniform(&fs, 0.5, 0.3).unwrap();
        let d = generate_ccd(&fs, &coding, 3, DEFAULT_AXIAL).unwrap();
        let d = d.with_responses(&vec![1.0; d.len()]).unwrap();
        let spec = ModelSpec::full_quadratic(&fs, 1.0).unwrap();
        assert!(backward_eliminate(&d, &spec, 0.0, &coding).is_err());
        assert!(backward_eliminate(&d, &spec, 1.0, &coding).is_err());
    }
}
