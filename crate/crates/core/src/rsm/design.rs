//! Factor coding, central composite designs and design evaluation.

use crate::ann::TrainedPredictor;
use crate::dataset::{DesignRow, DesignTable};
use crate::error::{invalid, Error, Result};

use super::model::FactorId;

/// Axial distance matching the 0.00/1.00 extremes of the bundled design.
pub const DEFAULT_AXIAL: f64 = 5.0 / 3.0;

/// Linear map from actual levels to coded units: `(actual - center) / half_range`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorCoding {
    entries: Vec<(FactorId, f64, f64)>,
}

impl FactorCoding {
    pub fn new(entries: Vec<(FactorId, f64, f64)>) -> Result<Self> {
        for (f, c, h) in &entries {
            if !(c.is_finite() && h.is_finite() && *h > 0.0) {
                return Err(invalid(format!(
                    "coding for {} needs finite center and half range > 0",
                    f.letter()
                )));
            }
        }
        Ok(FactorCoding { entries })
    }

    /// The same center and half range for every factor.
    pub fn uniform(factors: &[FactorId], center: f64, half_range: f64) -> Result<Self> {
        FactorCoding::new(factors.iter().map(|f| (*f, center, half_range)).collect())
    }

    pub fn get(&self, f: FactorId) -> Option<(f64, f64)> {
        self.entries.iter().find(|(g, ..)| *g == f).map(|(_, c, h)| (*c, *h))
    }

    pub fn factors(&self) -> Vec<FactorId> {
        self.entries.iter().map(|(f, ..)| *f).collect()
    }

    pub fn code(&self, f: FactorId, actual: f64) -> Result<f64> {
        let (c, h) = self.get(f).ok_or_else(|| missing(f))?;
        Ok((actual - c) / h)
    }

    pub fn decode(&self, f: FactorId, coded: f64) -> Result<f64> {
        let (c, h) = self.get(f).ok_or_else(|| missing(f))?;
        Ok(c + coded * h)
    }

    /// Restricts to the listed factors.
    pub fn restrict(&self, keep: &[FactorId]) -> Result<FactorCoding> {
        keep.iter()
            .map(|f| self.get(*f).map(|(c, h)| (*f, c, h)).ok_or_else(|| missing(*f)))
            .collect::<Result<Vec<_>>>()
            .and_then(FactorCoding::new)
    }

    /// Infers the coding from a composite design: the center row is the
    /// per-factor middle level, factorial rows are those away from the
    /// center in two or more factors, and each factor's two factorial
    /// levels map to -1 and +1.
    pub fn infer(design: &DesignTable) -> Result<FactorCoding> {
        let k = design.factors().len();
        if design.is_empty() || k == 0 {
            return Err(invalid("cannot infer coding from an empty design"));
        }
        let mut center = Vec::with_capacity(k);
        for j in 0..k {
            let mut levels: Vec<f64> = design.rows().iter().map(|r| r.levels[j]).collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            if levels.len().is_multiple_of(2) {
                return Err(invalid(format!(
                    "factor {} has {} distinct levels; cannot locate a center",
                    design.factors()[j].letter(),
                    levels.len()
                )));
            }
            center.push(levels[levels.len() / 2]);
        }
        let factorial: Vec<&DesignRow> = design
            .rows()
            .iter()
            .filter(|r| r.levels.iter().zip(&center).filter(|(a, b)| a != b).count() >= 2)
            .collect();
        let mut entries = Vec::with_capacity(k);
        for (j, f) in design.factors().iter().enumerate() {
            let mut levels: Vec<f64> = factorial.iter().map(|r| r.levels[j]).collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            if levels.len() != 2 {
                return Err(invalid(format!(
                    "factor {} has {} factorial levels; expected 2",
                    f.letter(),
                    levels.len()
                )));
            }
            entries.push((*f, (levels[0] + levels[1]) / 2.0, (levels[1] - levels[0]) / 2.0));
        }
        FactorCoding::new(entries)
    }

    /// Coded position of the center row for each factor. Zero for a
    /// symmetric design; nonzero when printed levels were rounded.
    pub fn center_offsets(&self, design: &DesignTable) -> Result<Vec<(FactorId, f64)>> {
        let mut out = Vec::new();
        for (j, f) in design.factors().iter().enumerate() {
            let mut levels: Vec<f64> = design.rows().iter().map(|r| r.levels[j]).collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            out.push((*f, self.code(*f, levels[levels.len() / 2])?));
        }
        Ok(out)
    }
}

fn missing(f: FactorId) -> Error {
    invalid(format!("no coding for factor {}", f.letter()))
}

/// Defining generators for a resolution-V (or higher) two-level fraction.
/// Each generated factor is the product of the listed base factors.
fn fraction_generators(k: usize) -> (usize, Vec<Vec<usize>>) {
    match k {
        2..=4 => (k, vec![]),
        5 => (4, vec![vec![0, 1, 2, 3]]),
        6 => (5, vec![vec![0, 1, 2, 3, 4]]),
        7 => (6, vec![vec![0, 1, 2, 3, 4, 5]]),
        8 => (6, vec![vec![0, 1, 2, 3], vec![0, 1, 4, 5]]),
        _ => unreachable!("factor count checked by caller"),
    }
}

/// Central composite design: a resolution-V two-level fraction at coded
/// +-1, axial points at coded +-`axial`, then `n_center` center runs.
/// Rows are in standard order; run order equals standard order.
pub fn generate_ccd(factors: &[FactorId], coding: &FactorCoding, n_center: usize, axial: f64) -> Result<DesignTable> {
    let k = factors.len();
    if !(2..=8).contains(&k) {
        return Err(invalid(format!(
            "central composite design needs 2..=8 factors, got {k}"
        )));
    }
    if !(axial.is_finite() && axial > 0.0) {
        return Err(invalid("axial distance must be > 0"));
    }
    let coding = coding.restrict(factors)?;
    let (n_base, generators) = fraction_generators(k);
    let mut coded_rows: Vec<Vec<f64>> = Vec::new();
    for i in 0..(1usize << n_base) {
        // first factor alternates fastest, starting low
        let mut z: Vec<f64> = (0..n_base)
            .map(|b| if (i >> b) & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        for g in &generators {
            z.push(g.iter().map(|&b| z[b]).product());
        }
        coded_rows.push(z);
    }
    for j in 0..k {
        for sign in [-1.0, 1.0] {
            let mut z = vec![0.0; k];
            z[j] = sign * axial;
            coded_rows.push(z);
        }
    }
    coded_rows.extend(std::iter::repeat_n(vec![0.0; k], n_center));

    let rows = coded_rows
        .into_iter()
        .enumerate()
        .map(|(i, z)| {
            let levels = factors
                .iter()
                .zip(&z)
                .map(|(f, zj)| coding.decode(*f, *zj))
                .collect::<Result<Vec<_>>>()?;
            Ok(DesignRow {
                std_order: i as u32 + 1,
                run_order: i as u32 + 1,
                levels,
                response: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DesignTable::new(factors.to_vec(), rows)
}

const LEVEL_SLACK: f64 = 1e-9;

/// Fills each run's response with `100 * (1 - HEP)` from the ensemble.
/// The design's factors must be exactly the predictor's active PSFs.
pub fn evaluate_design(design: &DesignTable, predictor: &TrainedPredictor) -> Result<DesignTable> {
    let active = predictor.active_psfs();
    let mut sorted_design = design.factors().to_vec();
    let mut sorted_active = active.to_vec();
    sorted_design.sort();
    sorted_active.sort();
    if sorted_design != sorted_active {
        return Err(invalid(format!(
            "design factors {:?} do not match predictor inputs {:?}",
            letters(design.factors()),
            letters(active)
        )));
    }
    let position: Vec<usize> = active
        .iter()
        .map(|p| design.factors().iter().position(|f| f == p).expect("same factor sets"))
        .collect();
    let mut responses = Vec::with_capacity(design.len());
    for row in design.rows() {
        let mut x = Vec::with_capacity(active.len());
        for (&j, p) in position.iter().zip(active) {
            let v = row.levels[j];
            if !(-LEVEL_SLACK..=1.0 + LEVEL_SLACK).contains(&v) {
                return Err(Error::LevelOutOfRange {
                    factor: p.letter(),
                    value: v,
                });
            }
            x.push(v.clamp(0.0, 1.0));
        }
        let hep = predictor.predict_normalized(&x)?;
        responses.push(100.0 * (1.0 - hep.value()));
    }
    design.with_responses(&responses)
}

fn letters(fs: &[FactorId]) -> String {
    fs.iter().map(|f| f.letter()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::bundled_table4;
    use crate::linalg::{least_squares, Matrix};
    use crate::psf::PsfId;

    #[test]
    fn infer_bundled_coding() {
        let d = bundled_table4();
        let c = FactorCoding::infer(&d).unwrap();
        let (ca, ha) = c.get(PsfId::AvailableTime).unwrap();
        assert!((ca - 0.5).abs() < 1e-12 && (ha - 0.3).abs() < 1e-12);
        // A's axial levels sit at +-5/3 coded units
        assert!((c.code(PsfId::AvailableTime, 0.0).unwrap() + DEFAULT_AXIAL).abs() < 1e-12);
        assert!((c.code(PsfId::AvailableTime, 1.0).unwrap() - DEFAULT_AXIAL).abs() < 1e-12);
        // factorial levels map to +-1 exactly
        for (j, f) in d.factors().iter().enumerate() {
            let factorial: Vec<f64> = d
                .rows()
                .iter()
                .filter(|r| {
                    let z: Vec<f64> = r
                        .levels
                        .iter()
                        .zip(d.factors())
                        .map(|(v, g)| c.code(*g, *v).unwrap())
                        .collect();
                    z.iter().filter(|v| v.abs() > 0.1).count() >= 2
                })
                .map(|r| c.code(*f, r.levels[j]).unwrap())
                .collect();
            assert!(factorial.iter().all(|z| (z.abs() - 1.0).abs() < 1e-9), "{f:?}");
        }
        let offsets = c.center_offsets(&d).unwrap();
        assert!(offsets.iter().all(|(_, o)| o.abs() < 0.02));
    }

    #[test]
    fn ccd_two_factor_row_count() {
        let fs = [PsfId::AvailableTime, PsfId::Stress];
        let coding = FactorCoding::uniform(&fs, 0.5, 0.3).unwrap();
        let d = generate_ccd(&fs, &coding, 4, DEFAULT_AXIAL).unwrap();
        assert_eq!(d.len(), 12);
    }

    #[test]
    fn ccd_eight_factor_axial_levels() {
        let coding = FactorCoding::uniform(&PsfId::ALL, 0.5, 0.3).unwrap();
        let d = generate_ccd(&PsfId::ALL, &coding, 6, DEFAULT_AXIAL).unwrap();
        assert_eq!(d.len(), 64 + 16 + 6);
        let a: Vec<f64> = d.rows().iter().map(|r| r.levels[0]).collect();
        let min = a.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(min.abs() < 1e-12 && (max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ccd_structure_and_resolution() {
        for k in 2..=8 {
            let fs = &PsfId::ALL[..k];
            let coding = FactorCoding::uniform(fs, 0.5, 0.3).unwrap();
            let d = generate_ccd(fs, &coding, 3, DEFAULT_AXIAL).unwrap();
            let coded: Vec<Vec<f64>> = d
                .rows()
                .iter()
                .map(|r| {
                    fs.iter()
                        .zip(&r.levels)
                        .map(|(f, v)| coding.code(*f, *v).unwrap())
                        .collect()
                })
                .collect();
            let mut factorial = Vec::new();
            for z in &coded {
                let nonzero = z.iter().filter(|v| v.abs() > 1e-9).count();
                let all_unit = z.iter().all(|v| (v.abs() - 1.0).abs() < 1e-9);
                assert!(nonzero == 0 || nonzero == 1 || all_unit, "k={k} row {z:?}");
                if nonzero == 1 {
                    assert!(z.iter().any(|v| (v.abs() - DEFAULT_AXIAL).abs() < 1e-9));
                }
                if all_unit {
                    factorial.push(z.clone());
                }
            }
            // mains and two-factor interactions are estimable and mutually
            // orthogonal on the factorial portion
            let n = factorial.len();
            let mut cols = vec![vec![1.0; n]];
            for a in 0..k {
                cols.push(factorial.iter().map(|z| z[a]).collect());
                for b in a + 1..k {
                    cols.push(factorial.iter().map(|z| z[a] * z[b]).collect());
                }
            }
            for i in 0..cols.len() {
                for j in i + 1..cols.len() {
                    let d: f64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x * y).sum();
                    assert!(d.abs() < 1e-9, "k={k}: columns {i} and {j} aliased");
                }
            }
            let y = vec![0.0; n];
            assert!(least_squares(&Matrix::from_columns(n, cols), &y).is_ok());
        }
    }

    #[test]
    fn ccd_factor_count_checked() {
        let coding = FactorCoding::uniform(&PsfId::ALL, 0.5, 0.3).unwrap();
        assert!(generate_ccd(&PsfId::ALL[..1], &coding, 1, DEFAULT_AXIAL).is_err());
    }

    #[test]
    fn coding_validation() {
        assert!(FactorCoding::new(vec![(PsfId::Stress, 0.5, 0.0)]).is_err());
        let c = FactorCoding::uniform(&[PsfId::Stress], 0.6, 0.24).unwrap();
        assert!((c.decode(PsfId::Stress, c.code(PsfId::Stress, 0.84).unwrap()).unwrap() - 0.84).abs() < 1e-12);
        assert!(c.code(PsfId::Complexity, 0.5).is_err());
    }
}
