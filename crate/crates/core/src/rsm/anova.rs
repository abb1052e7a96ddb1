//! ANOVA with partial sums of squares and a lack-of-fit split.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use crate::dataset::{fmt_f64, DesignTable};
use crate::error::{invalid, Result};
use crate::linalg::least_squares;
use crate::stats::f_sf;

use super::fit::{coded_levels, model_matrix, FitResult};
use super::model::ModelTerm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Model,
    Term(ModelTerm),
    Residual,
    LackOfFit,
    PureError,
    CorTotal,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Model => f.write_str("Model"),
            Source::Term(t) => write!(f, "{t}"),
            Source::Residual => f.write_str("Residual"),
            Source::LackOfFit => f.write_str("Lack of Fit"),
            Source::PureError => f.write_str("Pure Error"),
            Source::CorTotal => f.write_str("Cor Total"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaRow {
    pub source: Source,
    pub sum_of_squares: f64,
    pub df: usize,
    pub mean_square: Option<f64>,
    /// `None` when undefined (0/0 or no error degrees of freedom).
    pub f_value: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaTable {
    pub rows: Vec<AnovaRow>,
    /// False when the design has no replicated runs.
    pub lack_of_fit_available: bool,
}

impl AnovaTable {
    pub fn get(&self, source: Source) -> Option<&AnovaRow> {
        self.rows.iter().find(|r| r.source == source)
    }

    pub fn term(&self, t: ModelTerm) -> Option<&AnovaRow> {
        self.get(Source::Term(t))
    }

    pub fn p_value(&self, t: ModelTerm) -> Option<f64> {
        self.term(t).and_then(|r| r.p_value)
    }

    /// CSV with columns `source,sum_of_squares,df,mean_square,f_value,p_value`.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["source", "sum_of_squares", "df", "mean_square", "f_value", "p_value"])?;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.source.to_string(),
                fmt_f64(r.sum_of_squares),
                r.df.to_string(),
                opt(r.mean_square),
                opt(r.f_value),
                opt(r.p_value),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    if den > 0.0 {
        Some(num / den)
    } else if num > 0.0 {
        Some(f64::INFINITY)
    } else {
        None
    }
}

fn mean_square(ss: f64, df: usize) -> Option<f64> {
    (df > 0).then(|| ss / df as f64)
}

fn test(ms: Option<f64>, ms_err: Option<f64>, df: usize, df_err: usize) -> (Option<f64>, Option<f64>) {
    match (ms, ms_err) {
        (Some(m), Some(e)) if df > 0 && df_err > 0 => {
            let f = ratio(m, e);
            (f, f.map(|f| f_sf(f, df as f64, df_err as f64)))
        }
        _ => (None, None),
    }
}

/// Partial (type III) sum of squares for every non-intercept term: the
/// increase in residual SS when that single column is dropped.
pub fn partial_sums_of_squares(fit: &FitResult, design: &DesignTable) -> Result<Vec<(ModelTerm, f64)>> {
    let coded = coded_levels(design, &fit.coding)?;
    let full = model_matrix(design.factors(), &coded, &fit.terms)?;
    let y = &fit.transformed_response;
    fit.terms
        .iter()
        .enumerate()
        .filter(|(_, t)| **t != ModelTerm::Intercept)
        .map(|(k, t)| {
            let reduced = full.without_column(k);
            let ls = least_squares(&reduced, y)
                .map_err(|_| invalid(format!("reduced model without {t} is rank deficient")))?;
            Ok((*t, (ls.sse - fit.sse).max(0.0)))
        })
        .collect()
}

/// Builds the ANOVA table for a fit computed on `design`.
pub fn anova(fit: &FitResult, design: &DesignTable) -> Result<AnovaTable> {
    let y = &fit.transformed_response;
    let n = y.len();
    if design.len() != n {
        return Err(invalid("design does not match the fit"));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let ss_total: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let df_total = n - 1;
    let p = fit.terms.len() - 1;
    let ss_res = fit.sse;
    let df_res = n - fit.terms.len();
    let ss_model = ss_total - ss_res;
    let ms_res = mean_square(ss_res, df_res);

    let mut rows = Vec::new();
    let ms_model = mean_square(ss_model, p);
    let (f, pv) = test(ms_model, ms_res, p, df_res);
    rows.push(AnovaRow {
        source: Source::Model,
        sum_of_squares: ss_model,
        df: p,
        mean_square: ms_model,
        f_value: f,
        p_value: pv,
    });
    for (t, ss) in partial_sums_of_squares(fit, design)? {
        let (f, pv) = test(Some(ss), ms_res, 1, df_res);
        rows.push(AnovaRow {
            source: Source::Term(t),
            sum_of_squares: ss,
            df: 1,
            mean_square: Some(ss),
            f_value: f,
            p_value: pv,
        });
    }
    rows.push(AnovaRow {
        source: Source::Residual,
        sum_of_squares: ss_res,
        df: df_res,
        mean_square: ms_res,
        f_value: None,
        p_value: None,
    });

    // replicate groups: runs with identical actual levels
    let mut groups: BTreeMap<Vec<u64>, Vec<f64>> = BTreeMap::new();
    for (row, yi) in design.rows().iter().zip(y) {
        let key = row.levels.iter().map(|v| v.to_bits()).collect();
        groups.entry(key).or_default().push(*yi);
    }
    let mut ss_pe = 0.0;
    let mut df_pe = 0;
    for g in groups.values() {
        if g.len() > 1 {
            // identical replicates contribute exactly zero; the rounded
            // mean would otherwise leave a tiny positive residue
            if g.iter().any(|v| v.to_bits() != g[0].to_bits()) {
                let m = g.iter().sum::<f64>() / g.len() as f64;
                ss_pe += g.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
            }
            df_pe += g.len() - 1;
        }
    }
    let lack_of_fit_available = df_pe > 0 && df_res >= df_pe;
    if lack_of_fit_available {
        let df_lof = df_res - df_pe;
        let ss_lof = (ss_res - ss_pe).max(0.0);
        let ms_lof = mean_square(ss_lof, df_lof);
        let ms_pe = mean_square(ss_pe, df_pe);
        let (f, pv) = test(ms_lof, ms_pe, df_lof, df_pe);
        rows.push(AnovaRow {
            source: Source::LackOfFit,
            sum_of_squares: ss_lof,
            df: df_lof,
            mean_square: ms_lof,
            f_value: f,
            p_value: pv,
        });
        rows.push(AnovaRow {
            source: Source::PureError,
            sum_of_squares: ss_pe,
            df: df_pe,
            mean_square: ms_pe,
            f_value: None,
            p_value: None,
        });
    }
    rows.push(AnovaRow {
        source: Source::CorTotal,
        sum_of_squares: ss_total,
        df: df_total,
        mean_square: None,
        f_value: None,
        p_value: None,
    });
    Ok(AnovaTable {
        rows,
        lack_of_fit_available,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psf::PsfId;
    use crate::rsm::design::{generate_ccd, FactorCoding, DEFAULT_AXIAL};
    use crate::rsm::fit::fit;
    use crate::rsm::model::ModelSpec;

    #[test]
    fn no_replicates_means_no_lack_of_fit() {
        let fs = [PsfId::AvailableTime, PsfId::Stress];
        let coding = FactorCoding::uniform(&fs, 0.5, 0.3).unwrap();
        let d = generate_ccd(&fs, &coding, 1, DEFAULT_AXIAL).unwrap();
        let y: Vec<f64> = d
            .rows()
            .iter()
            .map(|r| 80.0 + 9.0 * r.levels[0] + (r.levels[1] * 13.0).sin())
            .collect();
        let d = d.with_responses(&y).unwrap();
        let spec: ModelSpec = "A, B; power=1".parse().unwrap();
        let f = fit(&d, &spec, &coding).unwrap();
        let t = anova(&f, &d).unwrap();
        assert!(!t.lack_of_fit_available);
        assert!(t.get(Source::LackOfFit).is_none());
        assert!(t.get(Source::PureError).is_none());
        assert_eq!(t.get(Source::Residual).unwrap().df, 9 - 3);
    }

    #[test]
    fn exact_replicates_make_lack_of_fit_infinite() {
        let fs = [PsfId::AvailableTime, PsfId::Stress];
        let coding = FactorCoding::uniform(&fs, 0.5, 0.3).unwrap();
        let d = generate_ccd(&fs, &coding, 4, DEFAULT_AXIAL).unwrap();
        let y: Vec<f64> = d
            .rows()
            .iter()
            .map(|r| 80.0 + 9.0 * r.levels[0] * r.levels[0])
            .collect();
        let d = d.with_responses(&y).unwrap();
        let spec: ModelSpec = "A, B; power=1".parse().unwrap();
        let t = anova(&fit(&d, &spec, &coding).unwrap(), &d).unwrap();
        let lof = t.get(Source::LackOfFit).unwrap();
        assert_eq!(lof.f_value, Some(f64::INFINITY));
        assert_eq!(lof.p_value, Some(0.0));
        assert_eq!(t.get(Source::PureError).unwrap().sum_of_squares, 0.0);
    }
}
