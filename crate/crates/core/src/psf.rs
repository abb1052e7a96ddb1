//! Performance shaping factors and the closed-form HEP algebra.
//!
//! A work instance is described by eight PSF multipliers. Their product is
//! the total PSF impact, which adjusts a nominal error probability through
//! the saturating composite formula
//!
//! ```text
//! HEP_c = HEP_n * T / (HEP_n * (T - 1) + 1)
//! ```
//!
//! Multiplier tables map level labels to action/diagnosis multipliers. Rows
//! meaning "failure is certain" are kept as an explicit sentinel so callers
//! short-circuit instead of multiplying.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// The eight PSFs, in case-study column order (letters A..H).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PsfId {
    AvailableTime,
    Stress,
    Complexity,
    ExperienceTraining,
    Procedures,
    Ergonomics,
    FitnessForDuty,
    WorkProcess,
}

impl PsfId {
    pub const ALL: [PsfId; 8] = [
        PsfId::AvailableTime,
        PsfId::Stress,
        PsfId::Complexity,
        PsfId::ExperienceTraining,
        PsfId::Procedures,
        PsfId::Ergonomics,
        PsfId::FitnessForDuty,
        PsfId::WorkProcess,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        (b'A' + self as u8) as char
    }

    pub fn from_letter(c: char) -> Option<PsfId> {
        let c = c.to_ascii_uppercase();
        if ('A'..='H').contains(&c) {
            Some(Self::ALL[(c as u8 - b'A') as usize])
        } else {
            None
        }
    }

    /// Column name used in observation CSV files.
    pub fn column_name(self) -> &'static str {
        match self {
            PsfId::AvailableTime => "available_time",
            PsfId::Stress => "stress",
            PsfId::Complexity => "complexity",
            PsfId::ExperienceTraining => "experience_training",
            PsfId::Procedures => "procedures",
            PsfId::Ergonomics => "ergonomics",
            PsfId::FitnessForDuty => "fitness_for_duty",
            PsfId::WorkProcess => "work_process",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            PsfId::AvailableTime => "Available Time",
            PsfId::Stress => "Stress",
            PsfId::Complexity => "Complexity",
            PsfId::ExperienceTraining => "Experience And Training",
            PsfId::Procedures => "Procedures",
            PsfId::Ergonomics => "Ergonomics",
            PsfId::FitnessForDuty => "Fitness For Duty",
            PsfId::WorkProcess => "Work Process",
        }
    }
}

impl fmt::Display for PsfId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for PsfId {
    type Err = Error;

    /// Accepts a letter code, a CSV column name or a display name.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let mut chars = t.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            return PsfId::from_letter(c).ok_or_else(|| invalid(format!("unknown PSF {s:?}")));
        }
        PsfId::ALL
            .into_iter()
            .find(|p| p.column_name().eq_ignore_ascii_case(t) || p.display_name().eq_ignore_ascii_case(t))
            .ok_or_else(|| invalid(format!("unknown PSF {s:?}")))
    }
}

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(invalid(format!("probability {value} outside [0, 1]")))
        }
    }

    pub const ONE: Probability = Probability(1.0);

    pub fn value(self) -> f64 {
        self.0
    }

    /// Reliability, `1 - p`.
    pub fn complement(self) -> Probability {
        Probability(1.0 - self.0)
    }
}

/// Occurred and potential error counts for one task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorTally {
    occurred: u64,
    potential: u64,
}

impl ErrorTally {
    pub fn new(occurred: u64, potential: u64) -> Result<Self> {
        if potential == 0 {
            return Err(invalid("potential error count must be at least 1"));
        }
        if occurred > potential {
            return Err(invalid(format!(
                "occurred errors ({occurred}) exceed potential errors ({potential})"
            )));
        }
        Ok(ErrorTally { occurred, potential })
    }

    pub fn occurred(&self) -> u64 {
        self.occurred
    }

    pub fn potential(&self) -> u64 {
        self.potential
    }
}

/// Nominal HEP as the observed error frequency.
pub fn nominal_hep(tally: ErrorTally) -> Probability {
    Probability(tally.occurred as f64 / tally.potential as f64)
}

/// Eight strictly positive PSF multipliers, indexed by [`PsfId`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsfVector([f64; 8]);

impl PsfVector {
    pub fn new(values: [f64; 8]) -> Result<Self> {
        for (p, v) in PsfId::ALL.iter().zip(values) {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("multiplier for {p} must be finite and > 0, got {v}")));
            }
        }
        Ok(PsfVector(values))
    }

    pub fn nominal() -> Self {
        PsfVector([1.0; 8])
    }

    pub fn get(&self, psf: PsfId) -> f64 {
        self.0[psf.index()]
    }

    pub fn with(mut self, psf: PsfId, value: f64) -> Result<Self> {
        self.0[psf.index()] = value;
        PsfVector::new(self.0)
    }

    pub fn values(&self) -> &[f64; 8] {
        &self.0
    }

    /// Componentwise product.
    pub fn hadamard(&self, other: &PsfVector) -> PsfVector {
        let mut out = self.0;
        for (o, w) in out.iter_mut().zip(other.0) {
            *o *= w;
        }
        PsfVector(out)
    }
}

/// Product of all eight multipliers.
pub fn total_psf_impact(v: &PsfVector) -> f64 {
    v.0.iter().product()
}

/// Composite HEP from a nominal HEP and the total PSF impact.
pub fn composite_hep(nominal: Probability, psf_total: f64) -> Result<Probability> {
    if !(psf_total.is_finite() && psf_total > 0.0) {
        return Err(invalid(format!("PSF total must be finite and > 0, got {psf_total}")));
    }
    let n = nominal.value();
    let hep = n * psf_total / (n * (psf_total - 1.0) + 1.0);
    // The denominator is >= min(1, T) > 0, so the ratio stays in [0, 1] up to rounding.
    Ok(Probability(hep.clamp(0.0, 1.0)))
}

/// A table multiplier: a positive number or "failure certain".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Multiplier {
    Value(f64),
    FailureCertain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Action,
    Diagnosis,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "action" => Ok(Mode::Action),
            "diagnosis" => Ok(Mode::Diagnosis),
            _ => Err(invalid(format!("unknown mode {s:?} (expected action|diagnosis)"))),
        }
    }
}

/// A cell in a multiplier table before aliases are resolved.
#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Resolved(Multiplier),
    Alias(String),
}

#[derive(Debug, Clone, PartialEq)]
struct TableRow {
    label: String,
    action: Cell,
    diagnosis: Cell,
}

/// Level → multiplier table for one PSF.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierTable {
    psf: PsfId,
    rows: Vec<TableRow>,
}

impl MultiplierTable {
    pub fn new(psf: PsfId) -> Self {
        MultiplierTable { psf, rows: Vec::new() }
    }

    pub fn psf(&self) -> PsfId {
        self.psf
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|r| r.label.as_str())
    }

    fn push(&mut self, label: &str, action: Cell, diagnosis: Cell) -> Result<()> {
        if self.find(label).is_some() {
            return Err(invalid(format!("duplicate level {label:?} in table for {}", self.psf)));
        }
        self.rows.push(TableRow {
            label: label.to_string(),
            action,
            diagnosis,
        });
        Ok(())
    }

    /// Adds a level with numeric or sentinel multipliers.
    pub fn add_level(&mut self, label: &str, action: Multiplier, diagnosis: Multiplier) -> Result<()> {
        for m in [action, diagnosis] {
            if let Multiplier::Value(v) = m {
                if !(v.is_finite() && v > 0.0) {
                    return Err(invalid(format!("multiplier {v} for {label:?} must be > 0")));
                }
            }
        }
        self.push(label, Cell::Resolved(action), Cell::Resolved(diagnosis))
    }

    fn find(&self, label: &str) -> Option<&TableRow> {
        let label = label.trim();
        self.rows.iter().find(|r| r.label.eq_ignore_ascii_case(label))
    }

    pub fn lookup(&self, label: &str, mode: Mode) -> Result<Multiplier> {
        self.resolve(label, mode, 0)
    }

    fn resolve(&self, label: &str, mode: Mode, depth: usize) -> Result<Multiplier> {
        let row = self.find(label).ok_or_else(|| Error::UnknownLevel {
            table: format!("{} ({})", self.psf, self.psf.letter()),
            label: label.to_string(),
        })?;
        let cell = match mode {
            Mode::Action => &row.action,
            Mode::Diagnosis => &row.diagnosis,
        };
        match cell {
            Cell::Resolved(m) => Ok(*m),
            Cell::Alias(_) if depth >= self.rows.len() => Err(invalid(format!(
                "alias cycle at level {label:?} in table for {}",
                self.psf
            ))),
            Cell::Alias(target) => self.resolve(target, mode, depth + 1),
        }
    }

    fn validate_aliases(&self) -> Result<()> {
        for row in &self.rows {
            for mode in [Mode::Action, Mode::Diagnosis] {
                self.lookup(&row.label, mode)?;
            }
        }
        Ok(())
    }
}

/// Convenience wrapper for [`MultiplierTable::lookup`].
pub fn lookup_multiplier(table: &MultiplierTable, level_label: &str, mode: Mode) -> Result<Multiplier> {
    table.lookup(level_label, mode)
}

/// Multiplier tables for any subset of the eight PSFs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MultiplierConfig {
    tables: Vec<MultiplierTable>,
}

const DEFAULT_MULTIPLIERS: &str = include_str!("../data/multipliers.csv");

impl MultiplierConfig {
    /// The available-time table as published with SPAR-H.
    pub fn bundled() -> Self {
        Self::parse(DEFAULT_MULTIPLIERS).expect("bundled multiplier table is valid")
    }

    pub fn table(&self, psf: PsfId) -> Option<&MultiplierTable> {
        self.tables.iter().find(|t| t.psf == psf)
    }

    pub fn tables(&self) -> &[MultiplierTable] {
        &self.tables
    }

    pub fn insert(&mut self, table: MultiplierTable) {
        match self.tables.iter_mut().find(|t| t.psf == table.psf) {
            Some(t) => *t = table,
            None => {
                self.tables.push(table);
                self.tables.sort_by_key(|t| t.psf);
            }
        }
    }

    /// Parses `psf_letter,level_label,action,diagnosis` records. `FAIL` marks
    /// certain failure; a cell naming another level of the same table is an
    /// alias. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = MultiplierConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |column: &str, message: String| Error::Parse {
                line: i + 1,
                column: column.to_string(),
                message,
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(err("record", format!("expected 4 fields, got {}", fields.len())));
            }
            let psf = PsfId::from_str(fields[0]).map_err(|e| err("psf_letter", e.to_string()))?;
            if fields[1].is_empty() {
                return Err(err("level_label", "empty level label".into()));
            }
            let action = parse_cell(fields[2]).map_err(|m| err("action_multiplier", m))?;
            let diagnosis = parse_cell(fields[3]).map_err(|m| err("diagnosis_multiplier", m))?;
            if config.table(psf).is_none() {
                config.insert(MultiplierTable::new(psf));
            }
            let table = config
                .tables
                .iter_mut()
                .find(|t| t.psf == psf)
                .expect("table inserted above");
            table
                .push(fields[1], action, diagnosis)
                .map_err(|e| err("level_label", e.to_string()))?;
        }
        for t in &config.tables {
            t.validate_aliases()?;
        }
        Ok(config)
    }

    /// Builds a PSF vector from per-PSF level selections; unlisted PSFs are
    /// nominal (1). Returns `None` if any selected level is certain failure.
    pub fn psf_vector(&self, levels: &[(PsfId, String)], mode: Mode) -> Result<Option<PsfVector>> {
        let mut v = PsfVector::nominal();
        for (psf, label) in levels {
            let table = self
                .table(*psf)
                .ok_or_else(|| invalid(format!("no multiplier table configured for {psf}")))?;
            match table.lookup(label, mode)? {
                Multiplier::FailureCertain => return Ok(None),
                Multiplier::Value(m) => v = v.with(*psf, m)?,
            }
        }
        Ok(Some(v))
    }
}

fn parse_cell(s: &str) -> std::result::Result<Cell, String> {
    if s.eq_ignore_ascii_case("FAIL") {
        return Ok(Cell::Resolved(Multiplier::FailureCertain));
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(Cell::Resolved(Multiplier::Value(v))),
        Ok(v) => Err(format!("multiplier must be > 0, got {v}")),
        Err(_) if s.is_empty() => Err("empty multiplier".into()),
        Err(_) => Ok(Cell::Alias(s.to_string())),
    }
}

/// Per-PSF denominators for scaling multipliers into `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    maxima: [f64; 8],
}

impl Normalizer {
    /// Column maxima over a non-empty list of vectors.
    pub fn fit(vectors: &[PsfVector]) -> Result<Self> {
        if vectors.is_empty() {
            return Err(invalid("cannot normalize an empty list of PSF vectors"));
        }
        let mut maxima = [0.0_f64; 8];
        for v in vectors {
            for (m, x) in maxima.iter_mut().zip(v.0) {
                *m = m.max(x);
            }
        }
        Ok(Normalizer { maxima })
    }

    pub fn from_maxima(maxima: [f64; 8]) -> Result<Self> {
        if maxima.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(invalid("normalization maxima must be finite and > 0"));
        }
        Ok(Normalizer { maxima })
    }

    pub fn maxima(&self) -> &[f64; 8] {
        &self.maxima
    }

    pub fn max_of(&self, psf: PsfId) -> f64 {
        self.maxima[psf.index()]
    }

    pub fn apply(&self, v: &PsfVector) -> PsfVector {
        let mut out = v.0;
        for (o, m) in out.iter_mut().zip(self.maxima) {
            *o /= m;
        }
        PsfVector(out)
    }

    /// Normalized values for the listed PSFs only, in the given order.
    pub fn project(&self, v: &PsfVector, active: &[PsfId]) -> Vec<f64> {
        active.iter().map(|p| v.get(*p) / self.max_of(*p)).collect()
    }
}

/// Divides each component by its column maximum over the list.
pub fn normalize(vectors: &[PsfVector]) -> Result<(Vec<PsfVector>, Normalizer)> {
    let n = Normalizer::fit(vectors)?;
    Ok((vectors.iter().map(|v| n.apply(v)).collect(), n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table1() -> MultiplierTable {
        MultiplierConfig::bundled().table(PsfId::AvailableTime).unwrap().clone()
    }

    #[test]
    fn letters_are_ordered() {
        let letters: String = PsfId::ALL.iter().map(|p| p.letter()).collect();
        assert_eq!(letters, "ABCDEFGH");
        for p in PsfId::ALL {
            assert_eq!(PsfId::from_letter(p.letter()), Some(p));
            assert_eq!(p.column_name().parse::<PsfId>().unwrap(), p);
        }
        assert!(PsfId::from_letter('I').is_none());
    }

    #[test]
    fn nominal_hep_examples() {
        assert_eq!(nominal_hep(ErrorTally::new(10, 20).unwrap()).value(), 0.5);
        assert_eq!(nominal_hep(ErrorTally::new(0, 7).unwrap()).value(), 0.0);
        assert_eq!(nominal_hep(ErrorTally::new(3, 4).unwrap()).value(), 0.75);
    }

    #[test]
    fn invalid_tallies_rejected() {
        assert!(ErrorTally::new(1, 0).is_err());
        assert!(ErrorTally::new(0, 0).is_err());
        assert!(ErrorTally::new(5, 4).is_err());
    }

    #[test]
    fn probability_bounds() {
        assert!(Probability::new(-0.01).is_err());
        assert!(Probability::new(1.01).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        assert_eq!(Probability::new(0.2).unwrap().complement().value(), 0.8);
    }

    #[test]
    fn psf_vector_rejects_non_positive() {
        let mut v = [1.0; 8];
        v[3] = 0.0;
        assert!(PsfVector::new(v).is_err());
        v[3] = -2.0;
        assert!(PsfVector::new(v).is_err());
    }

    #[test]
    fn total_impact_examples() {
        assert_eq!(total_psf_impact(&PsfVector::nominal()), 1.0);
        let ins1 = PsfVector::new([0.1, 2.0, 5.0, 3.0, 20.0, 0.5, 5.0, 0.5]).unwrap();
        assert_relative_eq!(total_psf_impact(&ins1), 75.0, max_relative = 1e-12);
        let single = PsfVector::nominal().with(PsfId::Stress, 10.0).unwrap();
        assert_eq!(total_psf_impact(&single), 10.0);
    }

    #[test]
    fn composite_examples() {
        let p = |x| Probability::new(x).unwrap();
        assert_eq!(composite_hep(p(0.01), 1.0).unwrap().value(), 0.01);
        assert_relative_eq!(
            composite_hep(p(0.01), 10.0).unwrap().value(),
            0.1 / 1.09,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            composite_hep(p(0.5), 75.0).unwrap().value(),
            37.5 / 38.0,
            max_relative = 1e-14
        );
        assert_eq!(composite_hep(p(1.0), 5.0).unwrap().value(), 1.0);
        assert!(composite_hep(p(0.1), 0.0).is_err());
        assert!(composite_hep(p(0.1), -1.0).is_err());
    }

    #[test]
    fn table1_lookups() {
        let t = table1();
        assert_eq!(t.lookup("Nominal time", Mode::Action).unwrap(), Multiplier::Value(1.0));
        assert_eq!(
            t.lookup("Expansive time", Mode::Diagnosis).unwrap(),
            Multiplier::Value(0.01)
        );
        assert_eq!(
            t.lookup("Inadequate Time", Mode::Action).unwrap(),
            Multiplier::FailureCertain
        );
        assert_eq!(
            t.lookup("Insufficient information", Mode::Diagnosis).unwrap(),
            Multiplier::Value(1.0)
        );
        assert_eq!(
            t.lookup("barely adequate time", Mode::Action).unwrap(),
            Multiplier::Value(10.0)
        );
    }

    #[test]
    fn unknown_level_names_table_and_label() {
        let err = table1().lookup("Plenty of time", Mode::Action).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Plenty of time"), "{msg}");
        assert!(msg.contains("Available Time"), "{msg}");
    }

    #[test]
    fn config_parse_errors() {
        assert!(MultiplierConfig::parse("A,x,1").is_err());
        assert!(MultiplierConfig::parse("Z,x,1,1").is_err());
        assert!(MultiplierConfig::parse("A,x,0,1").is_err());
        assert!(MultiplierConfig::parse("A,x,1,1\nA,X,2,2").is_err());
        // alias to a missing level
        assert!(MultiplierConfig::parse("A,x,y,1").is_err());
        // alias cycle
        assert!(MultiplierConfig::parse("A,x,y,1\nA,y,x,1").is_err());
    }

    #[test]
    fn failure_certain_short_circuits_vector() {
        let cfg = MultiplierConfig::bundled();
        let v = cfg
            .psf_vector(&[(PsfId::AvailableTime, "Inadequate Time".into())], Mode::Action)
            .unwrap();
        assert!(v.is_none());
        let v = cfg
            .psf_vector(&[(PsfId::AvailableTime, "Extra time".into())], Mode::Action)
            .unwrap()
            .unwrap();
        assert_eq!(total_psf_impact(&v), 0.1);
    }

    #[test]
    fn normalize_examples() {
        let rows = [
            [0.1, 2.0, 5.0, 3.0, 20.0, 0.5, 5.0, 0.5],
            [10.0, 5.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        ];
        let vs: Vec<_> = rows.iter().map(|r| PsfVector::new(*r).unwrap()).collect();
        let (norm, n) = normalize(&vs).unwrap();
        assert_relative_eq!(norm[0].get(PsfId::AvailableTime), 0.01);
        assert_relative_eq!(norm[0].get(PsfId::Stress), 0.4);
        assert_eq!(n.max_of(PsfId::AvailableTime), 10.0);
        assert_eq!(norm[1].get(PsfId::AvailableTime), 1.0);

        let same = vec![vs[0]; 3];
        let (norm, _) = normalize(&same).unwrap();
        assert!(norm.iter().all(|v| v.values().iter().all(|x| *x == 1.0)));

        assert!(normalize(&[]).is_err());
    }

    fn psf_vec() -> impl Strategy<Value = PsfVector> {
        proptest::array::uniform8(0.01f64..50.0).prop_map(|a| PsfVector::new(a).unwrap())
    }

    proptest! {
        #[test]
        fn composite_identity(n in 1e-9f64..1.0) {
            let p = Probability::new(n).unwrap();
            prop_assert_eq!(composite_hep(p, 1.0).unwrap().value(), n);
        }

        #[test]
        fn composite_monotone(n in 0.001f64..0.99, t in 0.01f64..100.0, dt in 0.01f64..10.0) {
            let p = Probability::new(n).unwrap();
            let a = composite_hep(p, t).unwrap().value();
            let b = composite_hep(p, t + dt).unwrap().value();
            prop_assert!(b > a);
            let q = Probability::new(n + (0.999 - n) / 2.0).unwrap();
            prop_assert!(composite_hep(q, t).unwrap().value() > a);
            prop_assert!(a < 1.0);
        }

        #[test]
        fn impact_is_multiplicative(v in psf_vec(), w in psf_vec()) {
            let lhs = total_psf_impact(&v.hadamard(&w));
            let rhs = total_psf_impact(&v) * total_psf_impact(&w);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
        }

        #[test]
        fn impact_permutation_invariant(v in psf_vec(), shift in 0usize..8) {
            let mut a = *v.values();
            a.rotate_left(shift);
            let w = PsfVector::new(a).unwrap();
            let (x, y) = (total_psf_impact(&v), total_psf_impact(&w));
            prop_assert!((x - y).abs() <= 1e-12 * x);
        }

        #[test]
        fn normalize_idempotent(vs in proptest::collection::vec(psf_vec(), 1..10)) {
            let (once, _) = normalize(&vs).unwrap();
            prop_assert!(once.iter().all(|v| v.values().iter().all(|x| *x > 0.0 && *x <= 1.0)));
            let (twice, n2) = normalize(&once).unwrap();
            prop_assert_eq!(n2.maxima(), &[1.0; 8]);
            prop_assert_eq!(once, twice);
        }
    }
}
