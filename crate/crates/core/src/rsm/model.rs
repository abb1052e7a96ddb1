use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::psf::PsfId;

/// A factor in a response-surface model. Factors are identified with the
/// PSF they stand for, so letter `A` is always available time.
pub type FactorId = PsfId;

/// One column of a second-order polynomial model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelTerm {
    Intercept,
    Main(FactorId),
    /// Factors are distinct and in letter order.
    Interaction(FactorId, FactorId),
    Quadratic(FactorId),
}

impl ModelTerm {
    pub fn interaction(a: FactorId, b: FactorId) -> Result<ModelTerm> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(ModelTerm::Interaction(a, b)),
            std::cmp::Ordering::Greater => Ok(ModelTerm::Interaction(b, a)),
            std::cmp::Ordering::Equal => Err(invalid(format!(
                "interaction of {} with itself; use a quadratic term",
                a.letter()
            ))),
        }
    }

    pub fn factors(&self) -> Vec<FactorId> {
        match *self {
            ModelTerm::Intercept => vec![],
            ModelTerm::Main(a) | ModelTerm::Quadratic(a) => vec![a],
            ModelTerm::Interaction(a, b) => vec![a, b],
        }
    }

    pub fn involves(&self, f: FactorId) -> bool {
        self.factors().contains(&f)
    }

    fn rank(&self) -> u8 {
        match self {
            ModelTerm::Intercept => 0,
            ModelTerm::Main(_) => 1,
            ModelTerm::Interaction(..) => 2,
            ModelTerm::Quadratic(_) => 3,
        }
    }

    /// Value of this term's column given per-factor values.
    pub fn eval(&self, value_of: impl Fn(FactorId) -> f64) -> f64 {
        match *self {
            ModelTerm::Intercept => 1.0,
            ModelTerm::Main(a) => value_of(a),
            ModelTerm::Interaction(a, b) => value_of(a) * value_of(b),
            ModelTerm::Quadratic(a) => {
                let v = value_of(a);
                v * v
            }
        }
    }
}

impl PartialOrd for ModelTerm {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical order: intercept, mains, two-factor interactions, quadratics.
impl Ord for ModelTerm {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank()
            .cmp(&other.rank())
            .then_with(|| self.factors().cmp(&other.factors()))
    }
}

impl fmt::Display for ModelTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ModelTerm::Intercept => f.write_str("1"),
            ModelTerm::Main(a) => write!(f, "{}", a.letter()),
            ModelTerm::Interaction(a, b) => write!(f, "{}{}", a.letter(), b.letter()),
            ModelTerm::Quadratic(a) => write!(f, "{}^2", a.letter()),
        }
    }
}

impl FromStr for ModelTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || invalid(format!("cannot parse model term {s:?}"));
        let letter = |c: char| {
            if c.is_ascii_uppercase() {
                PsfId::from_letter(c).ok_or_else(bad)
            } else {
                Err(bad())
            }
        };
        if t == "1" {
            return Ok(ModelTerm::Intercept);
        }
        if let Some(base) = t.strip_suffix("^2") {
            let mut cs = base.chars();
            return match (cs.next(), cs.next()) {
                (Some(c), None) => Ok(ModelTerm::Quadratic(letter(c)?)),
                _ => Err(bad()),
            };
        }
        let cs: Vec<char> = t.chars().collect();
        match cs.as_slice() {
            [a] => Ok(ModelTerm::Main(letter(*a)?)),
            [a, b] => {
                let (a, b) = (letter(*a)?, letter(*b)?);
                if a == b {
                    Ok(ModelTerm::Quadratic(a))
                } else {
                    ModelTerm::interaction(a, b)
                }
            }
            _ => Err(bad()),
        }
    }
}

/// A hierarchical model: term set plus the power applied to the response
/// before fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    terms: BTreeSet<ModelTerm>,
    response_power: f64,
}

/// The reduced quadratic reported for the 60-run case-study design.
pub const CASE_STUDY_MODEL: &str = "1, A, B, C, D, F, G, H, AD, AF, BD, BF, BG, DF, C^2, D^2; power=3";

impl ModelSpec {
    pub fn new(terms: impl IntoIterator<Item = ModelTerm>, response_power: f64) -> Result<Self> {
        if !(response_power.is_finite() && response_power > 0.0) {
            return Err(invalid(format!("response power must be > 0, got {response_power}")));
        }
        let mut set: BTreeSet<ModelTerm> = terms.into_iter().collect();
        set.insert(ModelTerm::Intercept);
        for t in &set {
            let parents_ok = match *t {
                ModelTerm::Interaction(a, b) => set.contains(&ModelTerm::Main(a)) && set.contains(&ModelTerm::Main(b)),
                ModelTerm::Quadratic(a) => set.contains(&ModelTerm::Main(a)),
                _ => true,
            };
            if !parents_ok {
                return Err(invalid(format!(
                    "model is not hierarchical: {t} lacks a parent main effect"
                )));
            }
        }
        Ok(ModelSpec {
            terms: set,
            response_power,
        })
    }

    /// Intercept, mains, all two-factor interactions and all quadratics.
    pub fn full_quadratic(factors: &[FactorId], response_power: f64) -> Result<Self> {
        let mut terms = Vec::new();
        for (i, &a) in factors.iter().enumerate() {
            terms.push(ModelTerm::Main(a));
            terms.push(ModelTerm::Quadratic(a));
            for &b in &factors[i + 1..] {
                terms.push(ModelTerm::interaction(a, b)?);
            }
        }
        ModelSpec::new(terms, response_power)
    }

    pub fn intercept_only(response_power: f64) -> Result<Self> {
        ModelSpec::new([], response_power)
    }

    pub fn case_study() -> Self {
        CASE_STUDY_MODEL.parse().expect("case-study model is valid")
    }

    /// Terms in canonical order, intercept first.
    pub fn terms(&self) -> impl Iterator<Item = &ModelTerm> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, t: &ModelTerm) -> bool {
        self.terms.contains(t)
    }

    pub fn response_power(&self) -> f64 {
        self.response_power
    }

    pub fn factors(&self) -> BTreeSet<FactorId> {
        self.terms.iter().flat_map(|t| t.factors()).collect()
    }

    /// Whether removing `t` keeps the model hierarchical.
    pub fn is_removable(&self, t: &ModelTerm) -> bool {
        match *t {
            ModelTerm::Intercept => false,
            ModelTerm::Main(a) => !self
                .terms
                .iter()
                .any(|u| !matches!(u, ModelTerm::Main(_)) && u.involves(a)),
            _ => self.terms.contains(t),
        }
    }

    pub fn without(&self, t: &ModelTerm) -> Result<Self> {
        let mut terms = self.terms.clone();
        terms.remove(t);
        ModelSpec::new(terms, self.response_power)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        write!(f, "{}; power={}", terms.join(", "), self.response_power)
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// Parses `1, A, B, AD, C^2; power=3`. The power clause is optional (default 1).
    fn from_str(s: &str) -> Result<Self> {
        let (terms_part, power) = match s.split_once(';') {
            Some((t, p)) => {
                let p = p.trim();
                let v = p
                    .strip_prefix("power")
                    .map(str::trim_start)
                    .and_then(|r| r.strip_prefix('='))
                    .ok_or_else(|| invalid(format!("expected `power=<value>`, got {p:?}")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| invalid(format!("bad response power {v:?}")))?;
                (t, v)
            }
            None => (s, 1.0),
        };
        let terms = terms_part
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(ModelTerm::from_str)
            .collect::<Result<Vec<_>>>()?;
        ModelSpec::new(terms, power)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use PsfId::*;

    #[test]
    fn term_parse_and_display() {
        for s in ["1", "A", "AD", "C^2"] {
            assert_eq!(s.parse::<ModelTerm>().unwrap().to_string(), s);
        }
        assert_eq!(
            "DA".parse::<ModelTerm>().unwrap(),
            ModelTerm::Interaction(AvailableTime, ExperienceTraining)
        );
        assert_eq!("CC".parse::<ModelTerm>().unwrap(), ModelTerm::Quadratic(Complexity));
        assert!("Z".parse::<ModelTerm>().is_err());
        assert!("ABC".parse::<ModelTerm>().is_err());
        assert!("a".parse::<ModelTerm>().is_err());
    }

    #[test]
    fn canonical_order() {
        let spec = ModelSpec::case_study();
        let s: Vec<String> = spec.terms().map(|t| t.to_string()).collect();
        assert_eq!(s.join(" "), "1 A B C D F G H AD AF BD BF BG DF C^2 D^2");
        assert_eq!(spec.len(), 16);
        assert_eq!(spec.response_power(), 3.0);
        assert_eq!(spec.to_string().parse::<ModelSpec>().unwrap(), spec);
    }

    #[test]
    fn hierarchy_enforced() {
        assert!("1, A, AD".parse::<ModelSpec>().is_err());
        assert!("1, C^2".parse::<ModelSpec>().is_err());
        assert!("A, D, AD; power=0".parse::<ModelSpec>().is_err());
        let spec: ModelSpec = "A, D, AD".parse().unwrap();
        assert!(spec.contains(&ModelTerm::Intercept));
        assert!(!spec.is_removable(&ModelTerm::Main(AvailableTime)));
        assert!(spec.is_removable(&ModelTerm::Interaction(AvailableTime, ExperienceTraining)));
        assert!(!spec.is_removable(&ModelTerm::Intercept));
    }

    #[test]
    fn full_quadratic_size() {
        let spec = ModelSpec::full_quadratic(&PsfId::ALL, 3.0).unwrap();
        assert_eq!(spec.len(), 1 + 8 + 28 + 8);
    }
}
