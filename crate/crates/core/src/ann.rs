//! Single-hidden-layer feedforward regressor from normalized PSFs to HEP.
//!
//! Both layers use the logistic activation, so every prediction is a valid
//! probability. Training is full-batch gradient descent on the mean squared
//! error; several random restarts are trained and their outputs averaged.

use std::fmt::Write as _;
use std::str::FromStr;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{fmt_f64, ObservationSet};
use crate::error::{invalid, Error, Result};
use crate::psf::{Normalizer, Probability, PsfId, PsfVector};

/// Epoch window for the loss-improvement stopping rule.
pub const STALL_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    n_inputs: usize,
    n_hidden: usize,
}

impl Topology {
    pub fn new(n_inputs: usize, n_hidden: usize) -> Result<Self> {
        if n_inputs == 0 || n_hidden == 0 {
            return Err(invalid("topology needs at least one input and one hidden node"));
        }
        Ok(Topology { n_inputs, n_hidden })
    }

    /// As many hidden nodes as inputs.
    pub fn square(n_inputs: usize) -> Result<Self> {
        Self::new(n_inputs, n_inputs)
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn n_outputs(&self) -> usize {
        1
    }

    pub fn n_params(&self) -> usize {
        self.n_hidden * (self.n_inputs + 1) + self.n_hidden + 1
    }
}

/// Network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    topology: Topology,
    /// Row-major `n_hidden x n_inputs`.
    pub hidden_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

impl WeightSet {
    pub fn zeros(topology: Topology) -> Self {
        WeightSet {
            topology,
            hidden_weights: vec![0.0; topology.n_hidden * topology.n_inputs],
            hidden_bias: vec![0.0; topology.n_hidden],
            output_weights: vec![0.0; topology.n_hidden],
            output_bias: 0.0,
        }
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Flattens parameters: hidden weights, hidden biases, output weights, output bias.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.topology.n_params());
        v.extend_from_slice(&self.hidden_weights);
        v.extend_from_slice(&self.hidden_bias);
        v.extend_from_slice(&self.output_weights);
        v.push(self.output_bias);
        v
    }

    pub fn from_vec(topology: Topology, v: &[f64]) -> Result<Self> {
        if v.len() != topology.n_params() {
            return Err(Error::Dimension {
                expected: topology.n_params(),
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(invalid("weights must be finite"));
        }
        let (nh, ni) = (topology.n_hidden, topology.n_inputs);
        let (hw, rest) = v.split_at(nh * ni);
        let (hb, rest) = rest.split_at(nh);
        let (ow, rest) = rest.split_at(nh);
        Ok(WeightSet {
            topology,
            hidden_weights: hw.to_vec(),
            hidden_bias: hb.to_vec(),
            output_weights: ow.to_vec(),
            output_bias: rest[0],
        })
    }

    fn hidden_row(&self, j: usize) -> &[f64] {
        let ni = self.topology.n_inputs;
        &self.hidden_weights[j * ni..(j + 1) * ni]
    }

    fn raw_output(&self, x: &[f64], hidden: &mut [f64]) -> f64 {
        let mut z = self.output_bias;
        for (j, h) in hidden.iter_mut().enumerate() {
            let a: f64 = self.hidden_bias[j] + self.hidden_row(j).iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
            *h = logistic(a);
            z += self.output_weights[j] * *h;
        }
        logistic(z)
    }
}

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Uniform `[-0.5, 0.5]` initialization, deterministic in `(topology, seed)`.
pub fn init_weights(topology: Topology, seed: u64) -> WeightSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..topology.n_params()).map(|_| rng.random_range(-0.5..=0.5)).collect();
    WeightSet::from_vec(topology, &v).expect("generated weights have the right length")
}

const OUTPUT_FLOOR: f64 = 1e-15;

/// Network output for one normalized input vector.
pub fn forward(weights: &WeightSet, x: &[f64]) -> Result<Probability> {
    let t = weights.topology;
    if x.len() != t.n_inputs {
        return Err(Error::Dimension {
            expected: t.n_inputs,
            got: x.len(),
        });
    }
    let mut hidden = vec![0.0; t.n_hidden];
    let y = weights.raw_output(x, &mut hidden);
    // logistic saturates to exactly 0 or 1 in f64 for |z| > ~37
    Probability::new(y.clamp(OUTPUT_FLOOR, 1.0 - OUTPUT_FLOOR))
}

/// Normalized inputs paired with target HEPs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl TrainingData {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(invalid("training data needs at least one pair"));
        }
        if inputs.len() != targets.len() {
            return Err(Error::Dimension {
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        let width = inputs[0].len();
        if width == 0 {
            return Err(invalid("training inputs are empty vectors"));
        }
        for x in &inputs {
            if x.len() != width {
                return Err(Error::Dimension {
                    expected: width,
                    got: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(invalid("training inputs must be finite"));
            }
        }
        if targets.iter().any(|y| !(*y > 0.0 && *y < 1.0)) {
            return Err(invalid("training targets must lie in (0, 1)"));
        }
        Ok(TrainingData { inputs, targets })
    }

    /// Normalizes the active PSF columns of an observation set. The
    /// normalizer is fitted on all eight columns of `obs`.
    pub fn from_observations(obs: &ObservationSet, active: &[PsfId]) -> Result<(Self, Normalizer)> {
        let normalizer = Normalizer::fit(&obs.psf_vectors())?;
        let inputs = obs
            .instances()
            .iter()
            .map(|i| normalizer.project(&i.psfs, active))
            .collect();
        Ok((TrainingData::new(inputs, obs.heps())?, normalizer))
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs[0].len()
    }

    /// Deterministic shuffled split; `holdout_fraction` of the rows (at
    /// least one, at most `len - 1`) go to the second set.
    pub fn split_holdout(&self, holdout_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) || self.len() < 2 {
            return Err(invalid("holdout needs a fraction in (0, 1) and at least 2 rows"));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..idx.len()).rev() {
            let j = rng.random_range(0..=i);
            idx.swap(i, j);
        }
        let n_test = ((self.len() as f64 * holdout_fraction).round() as usize).clamp(1, self.len() - 1);
        let pick = |ids: &[usize]| {
            TrainingData::new(
                ids.iter().map(|&i| self.inputs[i].clone()).collect(),
                ids.iter().map(|&i| self.targets[i]).collect(),
            )
        };
        Ok((pick(&idx[n_test..])?, pick(&idx[..n_test])?))
    }
}

/// Mean squared error of the network over `data` and its gradient.
pub fn loss_and_gradient(weights: &WeightSet, data: &TrainingData) -> (f64, WeightSet) {
    let t = weights.topology;
    let ni = t.n_inputs;
    let n = data.len() as f64;
    let mut grad = WeightSet::zeros(t);
    let mut hidden = vec![0.0; t.n_hidden];
    let mut loss = 0.0;
    for (x, y) in data.inputs.iter().zip(&data.targets) {
        let out = weights.raw_output(x, &mut hidden);
        let r = out - y;
        loss += r * r;
        let d_out = 2.0 * r / n * out * (1.0 - out);
        grad.output_bias += d_out;
        for (j, h) in hidden.iter().enumerate() {
            grad.output_weights[j] += d_out * h;
            let d_hidden = d_out * weights.output_weights[j] * h * (1.0 - h);
            grad.hidden_bias[j] += d_hidden;
            let row = &mut grad.hidden_weights[j * ni..(j + 1) * ni];
            for (g, xi) in row.iter_mut().zip(x) {
                *g += d_hidden * xi;
            }
        }
    }
    (loss / n, grad)
}

pub fn loss(weights: &WeightSet, data: &TrainingData) -> f64 {
    let mut hidden = vec![0.0; weights.topology.n_hidden];
    data.inputs
        .iter()
        .zip(&data.targets)
        .map(|(x, y)| {
            let r = weights.raw_output(x, &mut hidden) - y;
            r * r
        })
        .sum::<f64>()
        / data.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub seed: u64,
    pub max_epochs: usize,
    /// Initial step size. A step that would raise the loss is rejected
    /// and the rate halved for the rest of the run.
    pub learning_rate: f64,
    /// Training stops once the loss improves by less than this over
    /// [`STALL_WINDOW`] accepted steps.
    pub loss_tolerance: f64,
    pub n_replications: usize,
    /// Hidden layer width; `None` means one hidden node per input.
    pub hidden_nodes: Option<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            seed: 1,
            max_epochs: 50_000,
            learning_rate: 10.0,
            loss_tolerance: 1e-12,
            n_replications: 5,
            hidden_nodes: None,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(invalid("epochs must be >= 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(invalid("learning_rate must be > 0"));
        }
        if !(self.loss_tolerance.is_finite() && self.loss_tolerance > 0.0) {
            return Err(invalid("tolerance must be > 0"));
        }
        if self.n_replications == 0 {
            return Err(invalid("replications must be >= 1"));
        }
        if self.hidden_nodes == Some(0) {
            return Err(invalid("hidden_nodes must be >= 1"));
        }
        Ok(())
    }

    pub fn topology(&self, n_inputs: usize) -> Result<Topology> {
        Topology::new(n_inputs, self.hidden_nodes.unwrap_or(n_inputs))
    }

    /// Applies one `key=value` setting. Returns `Ok(false)` for keys this
    /// config does not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let bad = |e: String| invalid(format!("{key}: {e}"));
        match key {
            "seed" => self.seed = value.parse().map_err(|e| bad(format!("{e}")))?,
            "epochs" => self.max_epochs = value.parse().map_err(|e| bad(format!("{e}")))?,
            "learning_rate" => self.learning_rate = value.parse().map_err(|e| bad(format!("{e}")))?,
            "tolerance" => self.loss_tolerance = value.parse().map_err(|e| bad(format!("{e}")))?,
            "replications" => self.n_replications = value.parse().map_err(|e| bad(format!("{e}")))?,
            "hidden_nodes" => self.hidden_nodes = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Iterates the non-comment `key=value` lines of a flat config file.
pub fn config_entries(text: &str) -> impl Iterator<Item = Result<(usize, &str, &str)>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        Some(match line.split_once('=') {
            Some((k, v)) => Ok((i + 1, k.trim(), v.trim())),
            None => Err(Error::Parse {
                line: i + 1,
                column: "key=value".into(),
                message: format!("expected key=value, got {line:?}"),
            }),
        })
    })
}

impl FromStr for TrainingConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = TrainingConfig::default();
        for entry in config_entries(text) {
            let (line, k, v) = entry?;
            let known = cfg.set(k, v).map_err(|e| Error::Parse {
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

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub weights: WeightSet,
    /// Initial loss, then the loss after each accepted step; non-increasing.
    pub loss_trace: Vec<f64>,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().expect("trace is never empty")
    }
}

/// Trains one network from the seed's initialization.
pub fn train_one(data: &TrainingData, topology: Topology, config: &TrainingConfig, seed: u64) -> Result<TrainOutcome> {
    config.validate()?;
    if data.n_inputs() != topology.n_inputs {
        return Err(Error::Dimension {
            expected: topology.n_inputs,
            got: data.n_inputs(),
        });
    }
    descend(data, init_weights(topology, seed), config, seed)
}

/// Full-batch gradient descent from explicit starting weights.
pub(crate) fn descend(
    data: &TrainingData,
    mut weights: WeightSet,
    config: &TrainingConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    let topology = weights.topology;
    let mut params = weights.to_vec();
    let mut rate = config.learning_rate;
    let (mut l, mut grad) = loss_and_gradient(&weights, data);
    if !l.is_finite() {
        return Err(Error::Diverged { seed, epoch: 0 });
    }
    let mut trace = Vec::with_capacity(config.max_epochs.min(1 << 16) + 1);
    trace.push(l);
    for epoch in 1..=config.max_epochs {
        let k = trace.len() - 1;
        if k >= STALL_WINDOW && trace[k - STALL_WINDOW] - l < config.loss_tolerance {
            break;
        }
        let proposal: Vec<f64> = params.iter().zip(grad.to_vec()).map(|(p, g)| p - rate * g).collect();
        if proposal.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { seed, epoch });
        }
        let next = WeightSet::from_vec(topology, &proposal)?;
        let (next_loss, next_grad) = loss_and_gradient(&next, data);
        if !next_loss.is_finite() {
            return Err(Error::Diverged { seed, epoch });
        }
        if next_loss <= l {
            params = proposal;
            weights = next;
            l = next_loss;
            grad = next_grad;
            trace.push(l);
        } else {
            // overshoot: keep the current weights and shrink the step
            rate *= 0.5;
        }
    }
    Ok(TrainOutcome {
        weights,
        loss_trace: trace,
    })
}

/// One trained restart.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub seed: u64,
    pub weights: WeightSet,
    pub final_loss: f64,
}

/// A replicated-restart ensemble together with the input scaling it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPredictor {
    topology: Topology,
    ensemble: Vec<Member>,
    active_psfs: Vec<PsfId>,
    normalizer: Normalizer,
    /// `(seed, epoch)` of replications dropped for divergence.
    diverged: Vec<(u64, usize)>,
}

impl TrainedPredictor {
    pub fn new(
        topology: Topology,
        ensemble: Vec<Member>,
        active_psfs: Vec<PsfId>,
        normalizer: Normalizer,
    ) -> Result<Self> {
        if ensemble.is_empty() {
            return Err(invalid("ensemble must not be empty"));
        }
        if active_psfs.len() != topology.n_inputs {
            return Err(Error::Dimension {
                expected: topology.n_inputs,
                got: active_psfs.len(),
            });
        }
        if ensemble.iter().any(|m| m.weights.topology != topology) {
            return Err(invalid("ensemble member topology mismatch"));
        }
        Ok(TrainedPredictor {
            topology,
            ensemble,
            active_psfs,
            normalizer,
            diverged: Vec::new(),
        })
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn ensemble(&self) -> &[Member] {
        &self.ensemble
    }

    pub fn active_psfs(&self) -> &[PsfId] {
        &self.active_psfs
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn diverged(&self) -> &[(u64, usize)] {
        &self.diverged
    }

    /// Ensemble-mean HEP for an already-normalized input over the active PSFs.
    pub fn predict_normalized(&self, x: &[f64]) -> Result<Probability> {
        let mut sum = 0.0;
        for m in &self.ensemble {
            sum += forward(&m.weights, x)?.value();
        }
        Probability::new(sum / self.ensemble.len() as f64)
    }

    /// Ensemble-mean HEP for raw PSF multipliers.
    pub fn predict(&self, psfs: &PsfVector) -> Result<Probability> {
        self.predict_normalized(&self.normalizer.project(psfs, &self.active_psfs))
    }

    pub fn predict_observations(&self, obs: &ObservationSet) -> Result<Vec<Probability>> {
        obs.instances().iter().map(|i| self.predict(&i.psfs)).collect()
    }

    /// Plain-text serialization at full precision.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let t = self.topology;
        let _ = writeln!(s, "hra-predictor 1");
        let _ = writeln!(s, "topology {} {} 1", t.n_inputs, t.n_hidden);
        let active: Vec<String> = self.active_psfs.iter().map(|p| p.letter().to_string()).collect();
        let _ = writeln!(s, "active {}", active.join(" "));
        let maxima: Vec<String> = self.normalizer.maxima().iter().map(|m| fmt_f64(*m)).collect();
        let _ = writeln!(s, "maxima {}", maxima.join(" "));
        let diverged: Vec<String> = self.diverged.iter().map(|(s, e)| format!("{s}:{e}")).collect();
        let _ = writeln!(s, "diverged {}", diverged.join(" ").trim_end());
        let _ = writeln!(s, "members {}", self.ensemble.len());
        for m in &self.ensemble {
            let _ = writeln!(s, "member {} {}", m.seed, fmt_f64(m.final_loss));
            for j in 0..t.n_hidden {
                let row: Vec<String> = m
                    .weights
                    .hidden_row(j)
                    .iter()
                    .chain(std::iter::once(&m.weights.hidden_bias[j]))
                    .map(|w| fmt_f64(*w))
                    .collect();
                let _ = writeln!(s, "hidden {}", row.join(" "));
            }
            let row: Vec<String> = m
                .weights
                .output_weights
                .iter()
                .chain(std::iter::once(&m.weights.output_bias))
                .map(|w| fmt_f64(*w))
                .collect();
            let _ = writeln!(s, "output {}", row.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        let mut next = |tag: &str| -> Result<(usize, Vec<String>)> {
            let (n, line) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                column: tag.to_string(),
                message: "unexpected end of predictor file".into(),
            })?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(tag) {
                return Err(Error::Parse {
                    line: n,
                    column: tag.to_string(),
                    message: format!("expected {tag:?} line"),
                });
            }
            Ok((n, parts.map(str::to_string).collect()))
        };
        let num = |n: usize, tag: &str, s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: n,
                column: tag.to_string(),
                message: format!("bad number {s:?}"),
            })
        };
        let count = |n: usize, tag: &str, s: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: n,
                column: tag.to_string(),
                message: format!("bad integer {s:?}"),
            })
        };

        let (n, v) = next("hra-predictor")?;
        if v != ["1"] {
            return Err(Error::Parse {
                line: n,
                column: "version".into(),
                message: format!("unsupported version {v:?}"),
            });
        }
        let (n, v) = next("topology")?;
        if v.len() != 3 || v[2] != "1" {
            return Err(Error::Parse {
                line: n,
                column: "topology".into(),
                message: "expected `topology <inputs> <hidden> 1`".into(),
            });
        }
        let topology = Topology::new(count(n, "topology", &v[0])?, count(n, "topology", &v[1])?)?;
        let (n, v) = next("active")?;
        let active_psfs = v
            .iter()
            .map(|s| s.parse::<PsfId>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Parse {
                line: n,
                column: "active".into(),
                message: e.to_string(),
            })?;
        let (n, v) = next("maxima")?;
        if v.len() != 8 {
            return Err(Error::Parse {
                line: n,
                column: "maxima".into(),
                message: "expected 8 maxima".into(),
            });
        }
        let mut maxima = [0.0; 8];
        for (m, s) in maxima.iter_mut().zip(&v) {
            *m = num(n, "maxima", s)?;
        }
        let normalizer = Normalizer::from_maxima(maxima)?;
        let (n, v) = next("diverged")?;
        let mut diverged = Vec::new();
        for item in &v {
            let (s, e) = item.split_once(':').ok_or_else(|| Error::Parse {
                line: n,
                column: "diverged".into(),
                message: format!("bad entry {item:?}"),
            })?;
            diverged.push((count(n, "diverged", s)? as u64, count(n, "diverged", e)?));
        }
        let (n, v) = next("members")?;
        let n_members = count(n, "members", v.first().map(String::as_str).unwrap_or(""))?;
        let mut ensemble = Vec::with_capacity(n_members);
        for _ in 0..n_members {
            let (n, v) = next("member")?;
            if v.len() != 2 {
                return Err(Error::Parse {
                    line: n,
                    column: "member".into(),
                    message: "expected `member <seed> <loss>`".into(),
                });
            }
            let seed = v[0].parse::<u64>().map_err(|_| Error::Parse {
                line: n,
                column: "member".into(),
                message: format!("bad seed {:?}", v[0]),
            })?;
            let final_loss = num(n, "member", &v[1])?;
            let mut w = WeightSet::zeros(topology);
            let ni = topology.n_inputs;
            for j in 0..topology.n_hidden {
                let (n, v) = next("hidden")?;
                if v.len() != ni + 1 {
                    return Err(Error::Dimension {
                        expected: ni + 1,
                        got: v.len(),
                    });
                }
                for (slot, s) in w.hidden_weights[j * ni..(j + 1) * ni].iter_mut().zip(&v[..ni]) {
                    *slot = num(n, "hidden", s)?;
                }
                w.hidden_bias[j] = num(n, "hidden", &v[ni])?;
            }
            let (n, v) = next("output")?;
            if v.len() != topology.n_hidden + 1 {
                return Err(Error::Dimension {
                    expected: topology.n_hidden + 1,
                    got: v.len(),
                });
            }
            for (slot, s) in w.output_weights.iter_mut().zip(&v[..topology.n_hidden]) {
                *slot = num(n, "output", s)?;
            }
            w.output_bias = num(n, "output", &v[topology.n_hidden])?;
            let weights = WeightSet::from_vec(topology, &w.to_vec())?;
            ensemble.push(Member {
                seed,
                weights,
                final_loss,
            });
        }
        let mut p = TrainedPredictor::new(topology, ensemble, active_psfs, normalizer)?;
        p.diverged = diverged;
        Ok(p)
    }
}

/// Trains `n_replications` restarts with seeds `seed, seed + 1, ...` and
/// keeps every one that did not diverge. Members stay in seed order.
pub fn train_replicated(
    data: &TrainingData,
    topology: Topology,
    config: &TrainingConfig,
    active_psfs: Vec<PsfId>,
    normalizer: Normalizer,
) -> Result<TrainedPredictor> {
    config.validate()?;
    let seeds: Vec<u64> = (0..config.n_replications as u64)
        .map(|k| config.seed.wrapping_add(k))
        .collect();
    let outcomes: Vec<(u64, Result<TrainOutcome>)> = seeds
        .par_iter()
        .map(|&s| (s, train_one(data, topology, config, s)))
        .collect();
    assemble(outcomes, topology, active_psfs, normalizer)
}

/// Keeps the converged replications, in seed order.
fn assemble(
    outcomes: Vec<(u64, Result<TrainOutcome>)>,
    topology: Topology,
    active_psfs: Vec<PsfId>,
    normalizer: Normalizer,
) -> Result<TrainedPredictor> {
    let n = outcomes.len();
    let mut ensemble = Vec::new();
    let mut diverged = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(o) => ensemble.push(Member {
                seed,
                final_loss: o.final_loss(),
                weights: o.weights,
            }),
            Err(Error::Diverged { seed, epoch }) => {
                warn!("replication with seed {seed} diverged at epoch {epoch}; dropped");
                diverged.push((seed, epoch));
            }
            Err(e) => return Err(e),
        }
    }
    if ensemble.is_empty() {
        return Err(Error::AllDiverged(n));
    }
    let mut p = TrainedPredictor::new(topology, ensemble, active_psfs, normalizer)?;
    p.diverged = diverged;
    Ok(p)
}

/// Normalizes the active columns of `obs`, then trains a replicated ensemble.
pub fn train_on_observations(
    obs: &ObservationSet,
    active: &[PsfId],
    config: &TrainingConfig,
) -> Result<TrainedPredictor> {
    let (data, normalizer) = TrainingData::from_observations(obs, active)?;
    let topology = config.topology(active.len())?;
    train_replicated(&data, topology, config, active.to_vec(), normalizer)
}

/// Squared errors, MSE and coefficient of determination.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub squared_errors: Vec<f64>,
    pub mse: f64,
    /// `None` when the observed values have zero variance.
    pub r_squared: Option<f64>,
}

pub fn metrics(predicted: &[f64], observed: &[f64]) -> Result<MetricReport> {
    if predicted.is_empty() || predicted.len() != observed.len() {
        return Err(Error::Dimension {
            expected: observed.len().max(1),
            got: predicted.len(),
        });
    }
    let squared_errors: Vec<f64> = predicted.iter().zip(observed).map(|(p, o)| (p - o) * (p - o)).collect();
    let sse: f64 = squared_errors.iter().sum();
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let sst: f64 = observed.iter().map(|o| (o - mean) * (o - mean)).sum();
    let r_squared = (sst > 0.0).then(|| 1.0 - sse / sst);
    Ok(MetricReport {
        mse: sse / n,
        squared_errors,
        r_squared,
    })
}
