//! Left-to-right HMMs with diagonal Gaussian spectral emissions and a
//! multi-space (voiced/unvoiced) log-F0 stream.
//!
//! All probabilities are handled in the log domain. [`LOG_ZERO`] stands for
//! log(0). A chain of `N` states enters at state 0 on the first frame and
//! leaves state `N-1` after the last frame with probability `1 - a_{N-1}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::features::{FeatureSequence, FrameVector, Lf0Obs};
use crate::textproc::{Phoneme, PhoneticSpec};

pub const LOG_ZERO: f64 = f64::NEG_INFINITY;
pub const DEFAULT_STATES: usize = 5;
/// Self-loop probabilities are kept inside [MIN_SELF_LOOP, 1 - MIN_SELF_LOOP].
pub const MIN_SELF_LOOP: f64 = 1e-6;

const MODEL_FORMAT: &str = "vozcr-modelset";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum HmmError {
    #[error("dimension mismatch: observation has {got} values, stream expects {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("infeasible alignment: {frames} frames for a {states}-state chain")]
    Infeasible { frames: usize, states: usize },
    #[error("observations have zero likelihood under the chain")]
    ZeroLikelihood,
    #[error("no model for phoneme '{0}'")]
    MissingPhoneme(Phoneme),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("model file: {0}")]
    Format(String),
}

/// ln(e^a + e^b) without overflow; `LOG_ZERO` is absorbing.
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == LOG_ZERO {
        LOG_ZERO
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

fn ln_or_zero(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        LOG_ZERO
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianStream {
    pub mean: Vec<f64>,
    /// Diagonal covariance.
    pub var: Vec<f64>,
}

impl GaussianStream {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self, HmmError> {
        if mean.len() != var.len() {
            return Err(HmmError::Dimension {
                got: var.len(),
                expected: mean.len(),
            });
        }
        if var.iter().any(|&v| !(v > 0.0)) {
            return Err(HmmError::Invalid("variances must be positive".into()));
        }
        Ok(Self { mean, var })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Log density over the first `dims` dimensions only (a diagonal
    /// Gaussian's marginal).
    fn logpdf_prefix(&self, o: &[f64], dims: usize) -> f64 {
        let mut acc = 0.0;
        for ((x, mu), var) in o.iter().zip(&self.mean).zip(&self.var).take(dims) {
            let d = x - mu;
            acc += (2.0 * PI * var).ln() + d * d / var;
        }
        -0.5 * acc
    }
}

/// −½·Σ_k [ln(2π σ²_k) + (o_k − μ_k)²/σ²_k].
pub fn gaussian_logpdf(o: &[f64], g: &GaussianStream) -> Result<f64, HmmError> {
    if o.len() != g.dim() {
        return Err(HmmError::Dimension {
            got: o.len(),
            expected: g.dim(),
        });
    }
    Ok(g.logpdf_prefix(o, o.len()))
}

/// Voiced weight plus a Gaussian over (lf0, Δlf0, Δ²lf0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsdStream {
    pub voiced_weight: f64,
    pub voiced_gauss: GaussianStream,
}

/// Unvoiced: ln(1−w). Voiced: ln(w) + Gaussian log density over the
/// dimensions present (the static value alone outside long voiced runs).
pub fn msd_logpdf(x: &Lf0Obs, s: &MsdStream) -> f64 {
    match *x {
        Lf0Obs::Unvoiced => ln_or_zero(1.0 - s.voiced_weight),
        Lf0Obs::Voiced { value, dynamics } => {
            let lw = ln_or_zero(s.voiced_weight);
            if lw == LOG_ZERO {
                return LOG_ZERO;
            }
            match dynamics {
                Some([d1, d2]) => lw + s.voiced_gauss.logpdf_prefix(&[value, d1, d2], 3),
                None => lw + s.voiced_gauss.logpdf_prefix(&[value], 1),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEmission {
    /// Over [c, Δc, Δ²c].
    pub spectral: GaussianStream,
    pub pitch: MsdStream,
}

/// One frame as seen by the models.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub spectral: Vec<f64>,
    pub lf0: Lf0Obs,
}

impl From<&FrameVector> for Observation {
    fn from(f: &FrameVector) -> Self {
        Self {
            spectral: f.spectral(),
            lf0: f.lf0,
        }
    }
}

pub fn observations(seq: &FeatureSequence) -> Vec<Observation> {
    seq.frames.iter().map(Observation::from).collect()
}

impl StateEmission {
    pub fn log_density(&self, o: &Observation) -> Result<f64, HmmError> {
        let spectral = gaussian_logpdf(&o.spectral, &self.spectral)?;
        Ok(spectral + msd_logpdf(&o.lf0, &self.pitch))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeftRightHmm {
    /// a_ii per state; a_{i,i+1} = 1 − a_ii.
    pub self_loop: Vec<f64>,
    pub emissions: Vec<StateEmission>,
}

impl LeftRightHmm {
    pub fn n_states(&self) -> usize {
        self.self_loop.len()
    }

    /// Dense (N+1)×(N+1) transition matrix; the last column is the exit.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n_states();
        let mut a = vec![vec![0.0; n + 1]; n + 1];
        for (i, &p) in self.self_loop.iter().enumerate() {
            a[i][i] = p;
            a[i][i + 1] = 1.0 - p;
        }
        a
    }

    fn log_stay(&self, i: usize) -> f64 {
        ln_or_zero(self.self_loop[i])
    }

    fn log_leave(&self, i: usize) -> f64 {
        ln_or_zero(1.0 - self.self_loop[i])
    }

    /// log b_i(o_t) for every frame and state.
    pub fn log_emissions(&self, obs: &[Observation]) -> Result<Vec<Vec<f64>>, HmmError> {
        obs.iter()
            .map(|o| self.emissions.iter().map(|e| e.log_density(o)).collect())
            .collect()
    }
}

/// Per-state occupancy statistics in frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationModel {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub order: usize,
    pub alpha: f64,
    pub frame_shift: f64,
    pub sample_rate: u32,
    pub n_states: usize,
}

/// Lower bounds applied to re-estimated variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceFloors {
    pub spectral: Vec<f64>,
    pub lf0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub models: BTreeMap<Phoneme, LeftRightHmm>,
    pub durations: BTreeMap<Phoneme, DurationModel>,
    pub meta: ModelMeta,
    pub floors: VarianceFloors,
}

/// Position of a chain state: phone index in the utterance, phoneme, and
/// state index inside the phoneme model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLabel {
    pub position: usize,
    pub phoneme: Phoneme,
    pub state: usize,
}

/// Utterance-level HMM built by concatenating phoneme models.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainedHmm {
    pub hmm: LeftRightHmm,
    pub labels: Vec<StateLabel>,
}

pub fn compose_phones(phones: &[Phoneme], models: &ModelSet) -> Result<ChainedHmm, HmmError> {
    let mut self_loop = Vec::new();
    let mut emissions = Vec::new();
    let mut labels = Vec::new();
    for (position, &phoneme) in phones.iter().enumerate() {
        let m = models
            .models
            .get(&phoneme)
            .ok_or(HmmError::MissingPhoneme(phoneme))?;
        self_loop.extend_from_slice(&m.self_loop);
        emissions.extend(m.emissions.iter().cloned());
        labels.extend((0..m.n_states()).map(|state| StateLabel {
            position,
            phoneme,
            state,
        }));
    }
    Ok(ChainedHmm {
        hmm: LeftRightHmm {
            self_loop,
            emissions,
        },
        labels,
    })
}

/// Concatenates the phoneme models of `spec`; leaving the last state of
/// phone k enters the first state of phone k+1.
pub fn compose_utterance_hmm(
    spec: &PhoneticSpec,
    models: &ModelSet,
) -> Result<ChainedHmm, HmmError> {
    compose_phones(&spec.phones, models)
}

fn check_feasible(hmm: &LeftRightHmm, frames: usize) -> Result<(), HmmError> {
    if frames < hmm.n_states() || hmm.n_states() == 0 {
        return Err(HmmError::Infeasible {
            frames,
            states: hmm.n_states(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// State index per frame, non-decreasing, starting at 0 and ending at N−1.
    pub path: Vec<usize>,
    pub log_likelihood: f64,
}

impl Alignment {
    /// Maximal runs as (state, start frame, end frame exclusive).
    pub fn segments(&self) -> Vec<(usize, usize, usize)> {
        let mut out: Vec<(usize, usize, usize)> = Vec::new();
        for (t, &s) in self.path.iter().enumerate() {
            match out.last_mut() {
                Some(last) if last.0 == s => last.2 = t + 1,
                _ => out.push((s, t, t + 1)),
            }
        }
        out
    }
}

/// Viterbi over precomputed log emissions (`log_b[t][i]`).
pub fn viterbi_with(hmm: &LeftRightHmm, log_b: &[Vec<f64>]) -> Result<Alignment, HmmError> {
    let (t_len, n) = (log_b.len(), hmm.n_states());
    check_feasible(hmm, t_len)?;
    let mut delta = vec![LOG_ZERO; n];
    let mut back = vec![vec![false; n]; t_len];
    delta[0] = log_b[0][0];
    for t in 1..t_len {
        let mut next = vec![LOG_ZERO; n];
        for j in 0..n.min(t + 1) {
            let stay = delta[j] + hmm.log_stay(j);
            let enter = if j > 0 {
                delta[j - 1] + hmm.log_leave(j - 1)
            } else {
                LOG_ZERO
            };
            let (best, from_left) = if enter > stay {
                (enter, true)
            } else {
                (stay, false)
            };
            next[j] = best + log_b[t][j];
            back[t][j] = from_left;
        }
        delta = next;
    }
    let log_likelihood = delta[n - 1] + hmm.log_leave(n - 1);
    if log_likelihood == LOG_ZERO || log_likelihood.is_nan() {
        return Err(HmmError::ZeroLikelihood);
    }
    let mut path = vec![0; t_len];
    let mut s = n - 1;
    for t in (0..t_len).rev() {
        path[t] = s;
        if t > 0 && back[t][s] {
            s -= 1;
        }
    }
    Ok(Alignment {
        path,
        log_likelihood,
    })
}

pub fn viterbi(hmm: &LeftRightHmm, obs: &[Observation]) -> Result<Alignment, HmmError> {
    check_feasible(hmm, obs.len())?;
    viterbi_with(hmm, &hmm.log_emissions(obs)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Posteriors {
    /// γ_t(i).
    pub gamma: Vec<Vec<f64>>,
    /// Σ_t ξ_t(i, i): expected number of self transitions per state.
    pub self_transitions: Vec<f64>,
    pub log_likelihood: f64,
}

/// Forward-backward over precomputed log emissions.
pub fn forward_backward_with(
    hmm: &LeftRightHmm,
    log_b: &[Vec<f64>],
) -> Result<Posteriors, HmmError> {
    let (t_len, n) = (log_b.len(), hmm.n_states());
    check_feasible(hmm, t_len)?;
    let stay: Vec<f64> = (0..n).map(|i| hmm.log_stay(i)).collect();
    let leave: Vec<f64> = (0..n).map(|i| hmm.log_leave(i)).collect();

    let mut alpha = vec![vec![LOG_ZERO; n]; t_len];
    alpha[0][0] = log_b[0][0];
    for t in 1..t_len {
        for j in 0..n.min(t + 1) {
            let enter = if j > 0 {
                alpha[t - 1][j - 1] + leave[j - 1]
            } else {
                LOG_ZERO
            };
            alpha[t][j] = log_add(alpha[t - 1][j] + stay[j], enter) + log_b[t][j];
        }
    }
    let total = alpha[t_len - 1][n - 1] + leave[n - 1];
    if total == LOG_ZERO || total.is_nan() {
        return Err(HmmError::ZeroLikelihood);
    }

    let mut beta = vec![vec![LOG_ZERO; n]; t_len];
    beta[t_len - 1][n - 1] = leave[n - 1];
    for t in (0..t_len - 1).rev() {
        let lowest = n.saturating_sub(t_len - t);
        for i in lowest..n {
            let s = stay[i] + log_b[t + 1][i] + beta[t + 1][i];
            let m = if i + 1 < n {
                leave[i] + log_b[t + 1][i + 1] + beta[t + 1][i + 1]
            } else {
                LOG_ZERO
            };
            beta[t][i] = log_add(s, m);
        }
    }

    let mut gamma = vec![vec![0.0; n]; t_len];
    let mut self_transitions = vec![0.0; n];
    for t in 0..t_len {
        for i in 0..n {
            let g = alpha[t][i] + beta[t][i] - total;
            if g > LOG_ZERO {
                gamma[t][i] = g.exp();
            }
            if t + 1 < t_len {
                let xi = alpha[t][i] + stay[i] + log_b[t + 1][i] + beta[t + 1][i] - total;
                if xi > LOG_ZERO {
                    self_transitions[i] += xi.exp();
                }
            }
        }
    }
    Ok(Posteriors {
        gamma,
        self_transitions,
        log_likelihood: total,
    })
}

pub fn forward_backward(hmm: &LeftRightHmm, obs: &[Observation]) -> Result<Posteriors, HmmError> {
    check_feasible(hmm, obs.len())?;
    forward_backward_with(hmm, &hmm.log_emissions(obs)?)
}

/// Sufficient statistics for one phoneme state. Moments are accumulated
/// around the current model mean (`shift`) for numerical stability.
#[derive(Debug, Clone, PartialEq)]
pub struct StateStats {
    pub occupancy: f64,
    pub self_transitions: f64,
    spectral_shift: Vec<f64>,
    spectral_sum: Vec<f64>,
    spectral_sq: Vec<f64>,
    pub voiced_occupancy: f64,
    lf0_shift: [f64; 3],
    lf0_occ: [f64; 3],
    lf0_sum: [f64; 3],
    lf0_sq: [f64; 3],
}

impl StateStats {
    fn new(e: &StateEmission) -> Self {
        let d = e.spectral.dim();
        let m = &e.pitch.voiced_gauss.mean;
        Self {
            occupancy: 0.0,
            self_transitions: 0.0,
            spectral_shift: e.spectral.mean.clone(),
            spectral_sum: vec![0.0; d],
            spectral_sq: vec![0.0; d],
            voiced_occupancy: 0.0,
            lf0_shift: [m[0], m[1], m[2]],
            lf0_occ: [0.0; 3],
            lf0_sum: [0.0; 3],
            lf0_sq: [0.0; 3],
        }
    }

    fn add_frame(&mut self, gamma: f64, o: &Observation) {
        self.occupancy += gamma;
        for k in 0..self.spectral_sum.len() {
            let d = o.spectral[k] - self.spectral_shift[k];
            self.spectral_sum[k] += gamma * d;
            self.spectral_sq[k] += gamma * d * d;
        }
        if let Lf0Obs::Voiced { value, dynamics } = o.lf0 {
            self.voiced_occupancy += gamma;
            let values = match dynamics {
                Some([d1, d2]) => vec![value, d1, d2],
                None => vec![value],
            };
            for (k, v) in values.into_iter().enumerate() {
                let d = v - self.lf0_shift[k];
                self.lf0_occ[k] += gamma;
                self.lf0_sum[k] += gamma * d;
                self.lf0_sq[k] += gamma * d * d;
            }
        }
    }

    fn merge(&mut self, other: &StateStats) {
        debug_assert_eq!(self.spectral_shift, other.spectral_shift);
        self.occupancy += other.occupancy;
        self.self_transitions += other.self_transitions;
        self.voiced_occupancy += other.voiced_occupancy;
        for k in 0..self.spectral_sum.len() {
            self.spectral_sum[k] += other.spectral_sum[k];
            self.spectral_sq[k] += other.spectral_sq[k];
        }
        for k in 0..3 {
            self.lf0_occ[k] += other.lf0_occ[k];
            self.lf0_sum[k] += other.lf0_sum[k];
            self.lf0_sq[k] += other.lf0_sq[k];
        }
    }
}

/// Statistics keyed by (phoneme, state), plus the corpus log-likelihood.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Accumulator {
    pub stats: BTreeMap<(Phoneme, usize), StateStats>,
    pub log_likelihood: f64,
    pub utterances: usize,
}

impl Accumulator {
    /// Adds one utterance's posteriors.
    pub fn add(
        &mut self,
        models: &ModelSet,
        chain: &ChainedHmm,
        post: &Posteriors,
        obs: &[Observation],
    ) {
        for (i, label) in chain.labels.iter().enumerate() {
            let key = (label.phoneme, label.state);
            let stats = self.stats.entry(key).or_insert_with(|| {
                StateStats::new(&models.models[&label.phoneme].emissions[label.state])
            });
            stats.self_transitions += post.self_transitions[i];
            for (t, o) in obs.iter().enumerate() {
                let g = post.gamma[t][i];
                if g > 0.0 {
                    stats.add_frame(g, o);
                }
            }
        }
        self.log_likelihood += post.log_likelihood;
        self.utterances += 1;
    }

    /// Folds `other` in; callers reduce in a fixed utterance order.
    pub fn merge(&mut self, other: &Accumulator) {
        for (key, s) in &other.stats {
            match self.stats.get_mut(key) {
                Some(mine) => mine.merge(s),
                None => {
                    self.stats.insert(*key, s.clone());
                }
            }
        }
        self.log_likelihood += other.log_likelihood;
        self.utterances += other.utterances;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub models: ModelSet,
    /// Phonemes with no occupancy; their parameters were kept.
    pub unobserved: Vec<Phoneme>,
}

/// M-step: occupancy-weighted means and floored variances, self-loops from
/// expected self transitions, voiced weights from voiced occupancy.
pub fn accumulate_and_update(models: &ModelSet, acc: &Accumulator) -> UpdateOutcome {
    let mut updated = models.clone();
    let floors = &models.floors;
    let mut unobserved = Vec::new();
    for (phoneme, hmm) in updated.models.iter_mut() {
        let mut seen = false;
        for (state, emission) in hmm.emissions.iter_mut().enumerate() {
            let Some(s) = acc.stats.get(&(*phoneme, state)) else {
                continue;
            };
            if s.occupancy <= 0.0 {
                continue;
            }
            seen = true;
            let occ = s.occupancy;
            for k in 0..emission.spectral.dim() {
                let m = s.spectral_sum[k] / occ;
                emission.spectral.mean[k] = s.spectral_shift[k] + m;
                emission.spectral.var[k] = (s.spectral_sq[k] / occ - m * m).max(floors.spectral[k]);
            }
            hmm.self_loop[state] =
                (s.self_transitions / occ).clamp(MIN_SELF_LOOP, 1.0 - MIN_SELF_LOOP);
            emission.pitch.voiced_weight = (s.voiced_occupancy / occ).clamp(0.0, 1.0);
            for k in 0..3 {
                if s.lf0_occ[k] > 0.0 {
                    let m = s.lf0_sum[k] / s.lf0_occ[k];
                    emission.pitch.voiced_gauss.mean[k] = s.lf0_shift[k] + m;
                    emission.pitch.voiced_gauss.var[k] =
                        (s.lf0_sq[k] / s.lf0_occ[k] - m * m).max(floors.lf0[k]);
                }
            }
        }
        if !seen {
            unobserved.push(*phoneme);
        }
    }
    UpdateOutcome {
        models: updated,
        unobserved,
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    meta: ModelMeta,
    floors: VarianceFloors,
    phoneme: Vec<PhonemeBlock>,
}

#[derive(Serialize, Deserialize)]
struct PhonemeBlock {
    symbol: String,
    state: Vec<StateBlock>,
}

#[derive(Serialize, Deserialize)]
struct StateBlock {
    self_loop: f64,
    duration_mean: f64,
    duration_var: f64,
    voiced_weight: f64,
    lf0_mean: Vec<f64>,
    lf0_var: Vec<f64>,
    spectral_mean: Vec<f64>,
    spectral_var: Vec<f64>,
}

impl ModelSet {
    pub fn n_states(&self) -> usize {
        self.meta.n_states
    }

    pub fn spectral_dim(&self) -> usize {
        3 * (self.meta.order + 1)
    }

    /// Structural checks: dimensions, probability ranges, durations.
    pub fn validate(&self) -> Result<(), HmmError> {
        let dim = self.spectral_dim();
        for (p, m) in &self.models {
            let bad = |what: &str| Err(HmmError::Invalid(format!("phoneme '{p}': {what}")));
            if m.n_states() != m.emissions.len() || m.n_states() == 0 {
                return bad("state count mismatch");
            }
            if m.self_loop.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
                return bad("self-loop outside (0, 1)");
            }
            for e in &m.emissions {
                if e.spectral.dim() != dim || e.spectral.var.len() != dim {
                    return bad("spectral dimension");
                }
                if e.pitch.voiced_gauss.dim() != 3 || e.pitch.voiced_gauss.var.len() != 3 {
                    return bad("log-F0 dimension");
                }
                if !(0.0..=1.0).contains(&e.pitch.voiced_weight) {
                    return bad("voiced weight outside [0, 1]");
                }
                let vars = e.spectral.var.iter().chain(&e.pitch.voiced_gauss.var);
                if vars.clone().any(|&v| !(v > 0.0) || !v.is_finite()) {
                    return bad("non-positive variance");
                }
            }
            match self.durations.get(p) {
                Some(d) if d.mean.len() == m.n_states() && d.var.len() == m.n_states() => {
                    if d.mean.iter().any(|&v| !(v >= 1.0)) || d.var.iter().any(|&v| !(v > 0.0)) {
                        return bad("duration mean < 1 or variance <= 0");
                    }
                }
                _ => return bad("duration model missing or mis-sized"),
            }
        }
        Ok(())
    }

    /// Versioned TOML: a header (format, version, meta, floors) followed by
    /// one `[[phoneme]]` block per model with a `[[phoneme.state]]` entry
    /// per emitting state.
    pub fn to_toml(&self) -> String {
        let phoneme = self
            .models
            .iter()
            .map(|(p, m)| {
                let dur = &self.durations[p];
                PhonemeBlock {
                    symbol: p.symbol().to_string(),
                    state: (0..m.n_states())
                        .map(|i| {
                            let e = &m.emissions[i];
                            StateBlock {
                                self_loop: m.self_loop[i],
                                duration_mean: dur.mean[i],
                                duration_var: dur.var[i],
                                voiced_weight: e.pitch.voiced_weight,
                                lf0_mean: e.pitch.voiced_gauss.mean.clone(),
                                lf0_var: e.pitch.voiced_gauss.var.clone(),
                                spectral_mean: e.spectral.mean.clone(),
                                spectral_var: e.spectral.var.clone(),
                            }
                        })
                        .collect(),
                }
            })
            .collect();
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            meta: self.meta,
            floors: self.floors.clone(),
            phoneme,
        };
        toml::to_string(&file).expect("model set serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, HmmError> {
        let file: ModelFile = toml::from_str(text).map_err(|e| HmmError::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(HmmError::Format(format!(
                "unexpected format '{}'",
                file.format
            )));
        }
        if file.version != MODEL_VERSION {
            return Err(HmmError::Format(format!(
                "unsupported version {}",
                file.version
            )));
        }
        let mut models = BTreeMap::new();
        let mut durations = BTreeMap::new();
        for block in file.phoneme {
            let p: Phoneme = block
                .symbol
                .parse()
                .map_err(|e| HmmError::Format(format!("{e}")))?;
            let mut self_loop = Vec::new();
            let mut emissions = Vec::new();
            let mut dur = DurationModel {
                mean: Vec::new(),
                var: Vec::new(),
            };
            for s in block.state {
                self_loop.push(s.self_loop);
                dur.mean.push(s.duration_mean);
                dur.var.push(s.duration_var);
                emissions.push(StateEmission {
                    spectral: GaussianStream::new(s.spectral_mean, s.spectral_var)?,
                    pitch: MsdStream {
                        voiced_weight: s.voiced_weight,
                        voiced_gauss: GaussianStream::new(s.lf0_mean, s.lf0_var)?,
                    },
                });
            }
            if models
                .insert(
                    p,
                    LeftRightHmm {
                        self_loop,
                        emissions,
                    },
                )
                .is_some()
            {
                return Err(HmmError::Format(format!("duplicate phoneme '{p}'")));
            }
            durations.insert(p, dur);
        }
        let set = ModelSet {
            models,
            durations,
            meta: file.meta,
            floors: file.floors,
        };
        set.validate()?;
        Ok(set)
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.phoneme, self.state + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss1(mean: f64, var: f64) -> GaussianStream {
        GaussianStream::new(vec![mean], vec![var]).unwrap()
    }

    fn emission(mean: f64, var: f64, w: f64) -> StateEmission {
        StateEmission {
            spectral: gauss1(mean, var),
            pitch: MsdStream {
                voiced_weight: w,
                voiced_gauss: GaussianStream::new(vec![5.0; 3], vec![0.1; 3]).unwrap(),
            },
        }
    }

    fn obs(x: f64) -> Observation {
        Observation {
            spectral: vec![x],
            lf0: Lf0Obs::Unvoiced,
        }
    }

    fn hmm(n: usize) -> LeftRightHmm {
        LeftRightHmm {
            self_loop: (0..n).map(|i| 0.3 + 0.1 * i as f64).collect(),
            emissions: (0..n)
                .map(|i| emission(i as f64, 1.0 + i as f64 * 0.5, 0.4))
                .collect(),
        }
    }

    #[test]
    fn gaussian_values() {
        let v = gaussian_logpdf(&[0.0], &gauss1(0.0, 1.0)).unwrap();
        assert!((v - (-0.918_938_533_204_672_7)).abs() < 1e-12);
        let g2 = GaussianStream::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let d = gaussian_logpdf(&[0.0, 0.0], &g2).unwrap().exp();
        assert!((d - 1.0 / (2.0 * PI)).abs() < 1e-12);
        assert!(matches!(
            gaussian_logpdf(&[0.0], &g2),
            Err(HmmError::Dimension {
                got: 1,
                expected: 2
            })
        ));
    }

    #[test]
    fn gaussian_peaks_at_mean() {
        let g = GaussianStream::new(vec![1.0, -2.0], vec![0.3, 2.0]).unwrap();
        let at_mean = gaussian_logpdf(&[1.0, -2.0], &g).unwrap();
        for o in [[1.1, -2.0], [1.0, -1.0], [0.0, 0.0]] {
            assert!(gaussian_logpdf(&o, &g).unwrap() < at_mean);
        }
    }

    #[test]
    fn msd_branches() {
        let s = MsdStream {
            voiced_weight: 0.3,
            voiced_gauss: GaussianStream::new(vec![4.8; 3], vec![0.2; 3]).unwrap(),
        };
        assert!((msd_logpdf(&Lf0Obs::Unvoiced, &s) - 0.7f64.ln()).abs() < 1e-15);
        let full = MsdStream {
            voiced_weight: 1.0,
            ..s.clone()
        };
        let at_mean = Lf0Obs::Voiced {
            value: 4.8,
            dynamics: Some([4.8, 4.8]),
        };
        let expected = gaussian_logpdf(&[4.8; 3], &full.voiced_gauss).unwrap();
        assert_eq!(msd_logpdf(&at_mean, &full), expected);
        let none = MsdStream {
            voiced_weight: 0.0,
            ..s
        };
        assert_eq!(msd_logpdf(&at_mean, &none), LOG_ZERO);
    }

    #[test]
    fn transitions_stay_left_to_right() {
        let a = hmm(4).transition_matrix();
        for (i, row) in a.iter().enumerate().take(4) {
            for (j, &p) in row.iter().enumerate() {
                if j != i && j != i + 1 {
                    assert_eq!(p, 0.0);
                }
            }
            assert!((row[i] + row[i + 1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn trivial_alignments() {
        let one = hmm(1);
        let o: Vec<_> = (0..6).map(|t| obs(t as f64 * 0.1)).collect();
        assert_eq!(viterbi(&one, &o).unwrap().path, vec![0; 6]);
        let fb = forward_backward(&one, &o).unwrap();
        assert!(fb.gamma.iter().all(|row| (row[0] - 1.0).abs() < 1e-12));

        let four = hmm(4);
        assert_eq!(viterbi(&four, &o[..4]).unwrap().path, vec![0, 1, 2, 3]);
        assert!(matches!(
            viterbi(&four, &o[..3]),
            Err(HmmError::Infeasible {
                frames: 3,
                states: 4
            })
        ));
        assert!(matches!(
            forward_backward(&four, &o[..3]),
            Err(HmmError::Infeasible { .. })
        ));
    }

    #[test]
    fn gamma_rows_normalized_and_forward_dominates_viterbi() {
        let h = hmm(3);
        let o: Vec<_> = [0.1, -0.3, 0.9, 1.4, 2.2, 1.8, 2.5, 3.0]
            .iter()
            .map(|&x| obs(x))
            .collect();
        let fb = forward_backward(&h, &o).unwrap();
        for row in &fb.gamma {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
        assert!(fb.log_likelihood >= viterbi(&h, &o).unwrap().log_likelihood);
    }

    #[test]
    fn two_frame_em_step_by_hand() {
        // One state, two frames: γ = 1 on both, one self transition.
        let mut set = single_state_set(0.0, 1.0);
        set.floors = VarianceFloors {
            spectral: vec![1e-4],
            lf0: vec![1e-4; 3],
        };
        let chain = compose_phones(&[Phoneme::A], &set).unwrap();
        let o = vec![
            Observation {
                spectral: vec![1.0],
                lf0: Lf0Obs::Voiced {
                    value: 5.0,
                    dynamics: None,
                },
            },
            Observation {
                spectral: vec![3.0],
                lf0: Lf0Obs::Unvoiced,
            },
        ];
        let post = forward_backward(&chain.hmm, &o).unwrap();
        let mut acc = Accumulator::default();
        acc.add(&set, &chain, &post, &o);
        let out = accumulate_and_update(&set, &acc).models;
        let m = &out.models[&Phoneme::A];
        assert!((m.emissions[0].spectral.mean[0] - 2.0).abs() < 1e-12);
        assert!((m.emissions[0].spectral.var[0] - 1.0).abs() < 1e-12);
        assert!((m.self_loop[0] - 0.5).abs() < 1e-12);
        assert!((m.emissions[0].pitch.voiced_weight - 0.5).abs() < 1e-12);
        assert!((m.emissions[0].pitch.voiced_gauss.mean[0] - 5.0).abs() < 1e-12);
        // Dynamics never observed: previous values kept.
        assert_eq!(m.emissions[0].pitch.voiced_gauss.mean[1], 5.0);
    }

    #[test]
    fn constant_frames_hit_the_floor() {
        let mut set = single_state_set(0.0, 1.0);
        set.floors = VarianceFloors {
            spectral: vec![0.01],
            lf0: vec![1e-4; 3],
        };
        let chain = compose_phones(&[Phoneme::A], &set).unwrap();
        let o = vec![obs(0.7); 5];
        let post = forward_backward(&chain.hmm, &o).unwrap();
        let mut acc = Accumulator::default();
        acc.add(&set, &chain, &post, &o);
        let out = accumulate_and_update(&set, &acc);
        let e = &out.models.models[&Phoneme::A].emissions[0];
        assert!((e.spectral.mean[0] - 0.7).abs() < 1e-12);
        assert_eq!(e.spectral.var[0], 0.01);
        assert_eq!(e.pitch.voiced_weight, 0.0);
        assert!(out.unobserved.contains(&Phoneme::E));
        assert_eq!(out.models.models[&Phoneme::E], set.models[&Phoneme::E]);
    }

    fn single_state_set(mean: f64, var: f64) -> ModelSet {
        let model = LeftRightHmm {
            self_loop: vec![0.6],
            emissions: vec![emission(mean, var, 0.4)],
        };
        let dur = DurationModel {
            mean: vec![3.0],
            var: vec![3.0],
        };
        ModelSet {
            models: [(Phoneme::A, model.clone()), (Phoneme::E, model)]
                .into_iter()
                .collect(),
            durations: [(Phoneme::A, dur.clone()), (Phoneme::E, dur)]
                .into_iter()
                .collect(),
            meta: ModelMeta {
                order: 0,
                alpha: 0.42,
                frame_shift: 0.005,
                sample_rate: 16000,
                n_states: 1,
            },
            floors: VarianceFloors {
                spectral: vec![1e-4],
                lf0: vec![1e-4; 3],
            },
        }
    }

    #[test]
    fn compose_chains_models() {
        let mut set = single_state_set(0.0, 1.0);
        let five = hmm(5);
        let five: LeftRightHmm = LeftRightHmm {
            self_loop: five.self_loop,
            emissions: five.emissions,
        };
        for p in [Phoneme::Sil, Phoneme::P, Phoneme::A, Phoneme::L] {
            set.models.insert(p, five.clone());
        }
        let single = compose_phones(&[Phoneme::P], &set).unwrap();
        assert_eq!(single.hmm, five);
        let spec = crate::textproc::phonetize("pala").unwrap();
        let chain = compose_utterance_hmm(&spec, &set).unwrap();
        assert_eq!(chain.hmm.n_states(), 30);
        assert_eq!(
            chain.labels[5],
            StateLabel {
                position: 1,
                phoneme: Phoneme::P,
                state: 0
            }
        );
        assert!(matches!(
            compose_phones(&[Phoneme::Ch], &set),
            Err(HmmError::MissingPhoneme(Phoneme::Ch))
        ));
    }

    #[test]
    fn model_file_roundtrip() {
        let mut set = single_state_set(0.0, 1.0);
        for m in set.models.values_mut() {
            m.emissions[0].spectral = GaussianStream::new(
                vec![0.123456789, -1e-9, 3.5e7],
                vec![0.987654321, 1e-10, 2.0],
            )
            .unwrap();
        }
        let text = set.to_toml();
        assert!(
            text.starts_with("format = \"vozcr-modelset\"\nversion = 1\n"),
            "{text}"
        );
        assert_eq!(ModelSet::from_toml(&text).unwrap(), set);
        assert!(ModelSet::from_toml(&text.replace("version = 1", "version = 9")).is_err());
    }

    #[test]
    fn segments_of_path() {
        let a = Alignment {
            path: vec![0, 0, 1, 2, 2, 2],
            log_likelihood: 0.0,
        };
        assert_eq!(a.segments(), vec![(0, 0, 2), (1, 2, 3), (2, 3, 6)]);
    }
}
