//! Least-squares fitting of second-order models in coded units.

use std::collections::BTreeMap;

use crate::dataset::DesignTable;
use crate::error::{invalid, Error, Result};
use crate::linalg::{least_squares, Matrix};

use super::design::FactorCoding;
use super::model::{FactorId, ModelSpec, ModelTerm};

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub spec: ModelSpec,
    /// Design factors, in design column order.
    pub factors: Vec<FactorId>,
    pub coding: FactorCoding,
    /// Terms in canonical order, matching the coefficient vectors.
    pub terms: Vec<ModelTerm>,
    pub coded_coefficients: Vec<f64>,
    /// The same polynomial expanded in actual (uncoded) levels.
    pub actual_coefficients: Vec<(ModelTerm, f64)>,
    /// Response raised to the model's power.
    pub transformed_response: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub sse: f64,
    pub r_squared: f64,
    /// Per-factor coded range covered by the design.
    coded_bounds: Vec<(f64, f64)>,
}

pub(crate) fn coded_levels(design: &DesignTable, coding: &FactorCoding) -> Result<Vec<Vec<f64>>> {
    design
        .rows()
        .iter()
        .map(|r| {
            design
                .factors()
                .iter()
                .zip(&r.levels)
                .map(|(f, v)| coding.code(*f, *v))
                .collect()
        })
        .collect()
}

pub(crate) fn model_matrix(factors: &[FactorId], coded: &[Vec<f64>], terms: &[ModelTerm]) -> Result<Matrix> {
    for t in terms {
        for f in t.factors() {
            if !factors.contains(&f) {
                return Err(invalid(format!(
                    "term {t} uses factor {} absent from the design",
                    f.letter()
                )));
            }
        }
    }
    let idx = |f: FactorId| factors.iter().position(|g| *g == f).expect("checked above");
    let columns = terms
        .iter()
        .map(|t| coded.iter().map(|z| t.eval(|f| z[idx(f)])).collect())
        .collect();
    Ok(Matrix::from_columns(coded.len(), columns))
}

pub(crate) fn transform(y: f64, power: f64) -> f64 {
    if power == 1.0 {
        y
    } else if power.fract() == 0.0 && power.abs() <= 16.0 {
        y.powi(power as i32)
    } else {
        y.signum() * y.abs().powf(power)
    }
}

/// Ordinary least squares of `response^power` on the coded model columns.
pub fn fit(design: &DesignTable, spec: &ModelSpec, coding: &FactorCoding) -> Result<FitResult> {
    let responses = design.responses()?;
    let terms: Vec<ModelTerm> = spec.terms().copied().collect();
    if design.len() <= terms.len() {
        return Err(invalid(format!(
            "{} runs cannot fit {} model terms",
            design.len(),
            terms.len()
        )));
    }
    let coded = coded_levels(design, coding)?;
    let x = model_matrix(design.factors(), &coded, &terms)?;
    let y: Vec<f64> = responses.iter().map(|r| transform(*r, spec.response_power())).collect();
    let ls = least_squares(&x, &y).map_err(|dependent| Error::RankDeficient {
        terms: dependent.iter().map(|&k| terms[k].to_string()).collect(),
    })?;

    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let r_squared = if sst > 0.0 { 1.0 - ls.sse / sst } else { 1.0 };

    let mut coded_bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); design.factors().len()];
    for z in &coded {
        for (b, v) in coded_bounds.iter_mut().zip(z) {
            b.0 = b.0.min(*v);
            b.1 = b.1.max(*v);
        }
    }

    let actual_coefficients = expand_to_actual(&terms, &ls.coefficients, coding)?;
    Ok(FitResult {
        spec: spec.clone(),
        factors: design.factors().to_vec(),
        coding: coding.clone(),
        terms,
        coded_coefficients: ls.coefficients,
        actual_coefficients,
        transformed_response: y,
        fitted: ls.fitted,
        residuals: ls.residuals,
        sse: ls.sse,
        r_squared,
        coded_bounds,
    })
}

/// Substitutes `z = (x - c) / h` into each coded term and collects the
/// resulting polynomial in actual units.
fn expand_to_actual(terms: &[ModelTerm], coefs: &[f64], coding: &FactorCoding) -> Result<Vec<(ModelTerm, f64)>> {
    let mut acc: BTreeMap<ModelTerm, f64> = BTreeMap::new();
    let mut add = |t: ModelTerm, v: f64| *acc.entry(t).or_insert(0.0) += v;
    let ch = |f: FactorId| {
        coding
            .get(f)
            .ok_or_else(|| invalid(format!("no coding for {}", f.letter())))
    };
    for (t, &b) in terms.iter().zip(coefs) {
        match *t {
            ModelTerm::Intercept => add(ModelTerm::Intercept, b),
            ModelTerm::Main(a) => {
                let (c, h) = ch(a)?;
                add(ModelTerm::Main(a), b / h);
                add(ModelTerm::Intercept, -b * c / h);
            }
            ModelTerm::Interaction(a, d) => {
                let ((ca, ha), (cd, hd)) = (ch(a)?, ch(d)?);
                let s = b / (ha * hd);
                add(*t, s);
                add(ModelTerm::Main(a), -s * cd);
                add(ModelTerm::Main(d), -s * ca);
                add(ModelTerm::Intercept, s * ca * cd);
            }
            ModelTerm::Quadratic(a) => {
                let (c, h) = ch(a)?;
                let s = b / (h * h);
                add(*t, s);
                add(ModelTerm::Main(a), -2.0 * s * c);
                add(ModelTerm::Intercept, s * c * c);
            }
        }
    }
    Ok(acc.into_iter().collect())
}

/// A back-transformed response-surface prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponsePrediction {
    /// Percent-scale response after the inverse transform, clamped to [0, 100].
    pub value: f64,
    /// Polynomial value before the inverse transform.
    pub transformed: f64,
    /// The point lies outside the coded region spanned by the design.
    pub extrapolated: bool,
    /// The polynomial was negative and the root was clamped to 0.
    pub clamped_negative: bool,
}

impl FitResult {
    /// Evaluates the actual-unit polynomial at `point` (levels aligned with
    /// [`FitResult::factors`]) and inverts the response transform.
    pub fn predict_response(&self, point: &[f64]) -> Result<ResponsePrediction> {
        if point.len() != self.factors.len() {
            return Err(Error::Dimension {
                expected: self.factors.len(),
                got: point.len(),
            });
        }
        let value_of = |f: FactorId| {
            let k = self.factors.iter().position(|g| *g == f).expect("fit factors");
            point[k]
        };
        let transformed: f64 = self.actual_coefficients.iter().map(|(t, b)| b * t.eval(value_of)).sum();
        let mut extrapolated = false;
        for ((f, v), (lo, hi)) in self.factors.iter().zip(point).zip(&self.coded_bounds) {
            let z = self.coding.code(*f, *v)?;
            if z < lo - 1e-9 || z > hi + 1e-9 {
                extrapolated = true;
            }
        }
        let (value, clamped_negative) = inverse_transform(transformed, self.spec.response_power());
        Ok(ResponsePrediction {
            value: value.clamp(0.0, 100.0),
            transformed,
            extrapolated,
            clamped_negative,
        })
    }

    /// Fitted values mapped back to the response scale.
    pub fn fitted_response(&self) -> Vec<f64> {
        self.fitted
            .iter()
            .map(|t| inverse_transform(*t, self.spec.response_power()).0)
            .collect()
    }

    /// Actual-unit equation, one `+coef * term` per line.
    pub fn actual_equation(&self) -> String {
        let power = self.spec.response_power();
        let lhs = if power == 1.0 {
            "Reliability".to_string()
        } else {
            format!("Reliability^{power}")
        };
        let mut s = format!("{lhs} =\n");
        for (t, b) in &self.actual_coefficients {
            match t {
                ModelTerm::Intercept => s.push_str(&format!("  {b:+.5E}\n")),
                _ => {
                    let name = t
                        .factors()
                        .iter()
                        .map(|f| f.display_name())
                        .collect::<Vec<_>>()
                        .join(" * ");
                    let name = if matches!(t, ModelTerm::Quadratic(_)) {
                        format!("{name}^2")
                    } else {
                        name
                    };
                    s.push_str(&format!("  {b:+.5E} * {name}\n"));
                }
            }
        }
        s
    }
}

fn inverse_transform(t: f64, power: f64) -> (f64, bool) {
    if t < 0.0 {
        return (0.0, true);
    }
    let v = if power == 1.0 {
        t
    } else if power == 3.0 {
        t.cbrt()
    } else {
        t.powf(1.0 / power)
    };
    (v, false)
}
