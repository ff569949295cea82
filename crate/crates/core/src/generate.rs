//! Parameter generation: state durations from the duration models, then
//! maximum-likelihood trajectories under static and dynamic constraints.

use crate::features::{voiced_runs, StaticFeatures, MIN_VOICED_RUN};
use crate::hmm::{HmmError, ModelSet, StateEmission};
use crate::textproc::{Phoneme, PhoneticSpec};

/// Frames a voicing weight must exceed to be voiced.
pub const VOICING_WEIGHT_THRESHOLD: f64 = 0.5;
/// Half-width of the band of the normal equations.
pub const BANDWIDTH: usize = 2;
/// Minimum plan length accepted by [`mlpg`].
pub const MIN_FRAMES: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error(transparent)]
    Hmm(#[from] HmmError),
    #[error("speaking-rate factor must be positive and finite, got {0}")]
    Rate(f64),
    #[error("trajectory needs at least {MIN_FRAMES} frames, plan has {0}")]
    TooShort(usize),
    #[error("normal equations are not positive definite at frame {0}")]
    NotPositiveDefinite(usize),
    #[error("means and variances differ in length")]
    Shape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannedState {
    pub phoneme: Phoneme,
    pub state: usize,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateTrajectoryPlan {
    pub states: Vec<PlannedState>,
    pub total_frames: usize,
}

impl StateTrajectoryPlan {
    pub fn new(states: Vec<PlannedState>) -> Self {
        let total_frames = states.iter().map(|s| s.frames).sum();
        Self {
            states,
            total_frames,
        }
    }

    /// (phoneme, state) for every frame.
    pub fn frame_states(&self) -> Vec<(Phoneme, usize)> {
        self.states
            .iter()
            .flat_map(|s| std::iter::repeat_n((s.phoneme, s.state), s.frames))
            .collect()
    }

    fn frame_emissions<'a>(
        &self,
        models: &'a ModelSet,
    ) -> Result<Vec<&'a StateEmission>, GenerateError> {
        self.frame_states()
            .into_iter()
            .map(|(p, s)| {
                let m = models.models.get(&p).ok_or(HmmError::MissingPhoneme(p))?;
                m.emissions.get(s).ok_or_else(|| {
                    HmmError::Invalid(format!("phoneme '{p}' has no state {s}")).into()
                })
            })
            .collect()
    }
}

/// max(1, round(factor · mean)) frames per state, halves rounded up.
pub fn state_frames(mean: f64, factor: f64) -> usize {
    ((factor * mean + 0.5).floor() as usize).max(1)
}

pub fn predict_durations(
    spec: &PhoneticSpec,
    models: &ModelSet,
    factor: f64,
) -> Result<StateTrajectoryPlan, GenerateError> {
    plan_phones(&spec.phones, models, factor)
}

/// Plan for an arbitrary phone sequence.
pub fn plan_phones(
    phones: &[Phoneme],
    models: &ModelSet,
    factor: f64,
) -> Result<StateTrajectoryPlan, GenerateError> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(GenerateError::Rate(factor));
    }
    let mut states = Vec::new();
    for &p in phones {
        let d = models
            .durations
            .get(&p)
            .ok_or(HmmError::MissingPhoneme(p))?;
        for (state, &mean) in d.mean.iter().enumerate() {
            states.push(PlannedState {
                phoneme: p,
                state,
                frames: state_frames(mean, factor),
            });
        }
    }
    Ok(StateTrajectoryPlan::new(states))
}

/// Rows of the window matrix for frame `t` of a `len`-frame track:
/// identity, Δ = ½(c[t+1] − c[t−1]) and Δ² = c[t+1] − 2c[t] + c[t−1], with
/// out-of-range neighbours replaced by the edge frame.
fn window_rows(t: usize, len: usize) -> [[(usize, f64); 3]; 3] {
    let prev = t.saturating_sub(1);
    let next = (t + 1).min(len - 1);
    [
        [(t, 1.0), (t, 0.0), (t, 0.0)],
        [(next, 0.5), (prev, -0.5), (t, 0.0)],
        [(next, 1.0), (t, -2.0), (prev, 1.0)],
    ]
}

/// Lower band of a symmetric matrix: `band[t][k]` holds A[t][t−k].
struct Band {
    rows: Vec<[f64; BANDWIDTH + 1]>,
}

impl Band {
    fn zeros(n: usize) -> Self {
        Self {
            rows: vec![[0.0; BANDWIDTH + 1]; n],
        }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        assert!(k <= BANDWIDTH, "window reach exceeds the band");
        self.rows[hi][k] += v;
    }

    /// In-place Cholesky factorization A = L·Lᵀ.
    fn cholesky(mut self) -> Result<Self, GenerateError> {
        let n = self.rows.len();
        for i in 0..n {
            for k in (1..=BANDWIDTH.min(i)).rev() {
                let j = i - k;
                let mut s = self.rows[i][k];
                for m in 1..=BANDWIDTH {
                    if k + m <= BANDWIDTH && m <= j {
                        s -= self.rows[i][k + m] * self.rows[j][m];
                    }
                }
                self.rows[i][k] = s / self.rows[j][0];
            }
            let d = self.rows[i][0]
                - (1..=BANDWIDTH.min(i))
                    .map(|k| self.rows[i][k].powi(2))
                    .sum::<f64>();
            if !(d > 0.0) {
                return Err(GenerateError::NotPositiveDefinite(i));
            }
            self.rows[i][0] = d.sqrt();
        }
        Ok(self)
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n {
            let mut s = b[i];
            for k in 1..=BANDWIDTH.min(i) {
                s -= self.rows[i][k] * b[i - k];
            }
            b[i] = s / self.rows[i][0];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in 1..=BANDWIDTH {
                if i + k < n {
                    s -= self.rows[i + k][k] * b[i + k];
                }
            }
            b[i] = s / self.rows[i][0];
        }
    }
}

fn precision(var: f64) -> f64 {
    if var.is_infinite() {
        0.0
    } else {
        1.0 / var
    }
}

/// Solves (WᵀΣ⁻¹W)c = WᵀΣ⁻¹μ for one track, where frame t carries means and
/// variances for (static, Δ, Δ²). Infinite variances drop a constraint.
pub fn mlpg_track(means: &[[f64; 3]], vars: &[[f64; 3]]) -> Result<Vec<f64>, GenerateError> {
    if means.len() != vars.len() {
        return Err(GenerateError::Shape);
    }
    let n = means.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = Band::zeros(n);
    let mut b = vec![0.0; n];
    for t in 0..n {
        for (w, row) in window_rows(t, n).iter().enumerate() {
            let p = precision(vars[t][w]);
            if p == 0.0 {
                continue;
            }
            // Collapse repeated indices so the row is a proper sparse vector.
            let mut coef: Vec<(usize, f64)> = Vec::with_capacity(3);
            for &(i, c) in row {
                match coef.iter_mut().find(|e| e.0 == i) {
                    Some(e) => e.1 += c,
                    None => coef.push((i, c)),
                }
            }
            for &(i, ci) in &coef {
                b[i] += p * ci * means[t][w];
                for &(j, cj) in &coef {
                    if i >= j {
                        a.add(i, j, p * ci * cj);
                    }
                }
            }
        }
    }
    a.cholesky()?.solve(&mut b);
    Ok(b)
}

/// Static cepstral trajectory, one vector of M+1 coefficients per frame.
pub fn mlpg(plan: &StateTrajectoryPlan, models: &ModelSet) -> Result<Vec<Vec<f64>>, GenerateError> {
    if plan.total_frames < MIN_FRAMES {
        return Err(GenerateError::TooShort(plan.total_frames));
    }
    let emissions = plan.frame_emissions(models)?;
    let dims = models.meta.order + 1;
    let mut out = vec![vec![0.0; dims]; plan.total_frames];
    for d in 0..dims {
        let pick = |v: &Vec<f64>| [v[d], v[dims + d], v[2 * dims + d]];
        let means: Vec<[f64; 3]> = emissions.iter().map(|e| pick(&e.spectral.mean)).collect();
        let vars: Vec<[f64; 3]> = emissions.iter().map(|e| pick(&e.spectral.var)).collect();
        for (t, c) in mlpg_track(&means, &vars)?.into_iter().enumerate() {
            out[t][d] = c;
        }
    }
    Ok(out)
}

/// Log-F0 per frame (`None` when unvoiced). Voicing follows the state
/// weight; runs of at least three voiced frames are smoothed, shorter ones
/// take the static means.
pub fn generate_lf0(
    plan: &StateTrajectoryPlan,
    models: &ModelSet,
) -> Result<Vec<Option<f64>>, GenerateError> {
    let emissions = plan.frame_emissions(models)?;
    let voiced: Vec<bool> = emissions
        .iter()
        .map(|e| e.pitch.voiced_weight > VOICING_WEIGHT_THRESHOLD)
        .collect();
    let mut out = vec![None; emissions.len()];
    for (start, end) in voiced_runs(&voiced) {
        let run = &emissions[start..end];
        if end - start >= MIN_VOICED_RUN {
            let means: Vec<[f64; 3]> = run
                .iter()
                .map(|e| as3(&e.pitch.voiced_gauss.mean))
                .collect();
            let vars: Vec<[f64; 3]> = run.iter().map(|e| as3(&e.pitch.voiced_gauss.var)).collect();
            for (i, v) in mlpg_track(&means, &vars)?.into_iter().enumerate() {
                out[start + i] = Some(v);
            }
        } else {
            for (i, e) in run.iter().enumerate() {
                out[start + i] = Some(e.pitch.voiced_gauss.mean[0]);
            }
        }
    }
    Ok(out)
}

fn as3(v: &[f64]) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

/// F0 in Hz per frame, `None` when unvoiced.
pub fn generate_f0(
    plan: &StateTrajectoryPlan,
    models: &ModelSet,
) -> Result<Vec<Option<f64>>, GenerateError> {
    Ok(generate_lf0(plan, models)?
        .into_iter()
        .map(|v| v.map(f64::exp))
        .collect())
}

/// Plan plus static parameters ready for the vocoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub plan: StateTrajectoryPlan,
    pub statics: StaticFeatures,
}

/// Durations, spectral trajectory and log-F0 for a phonetic specification.
/// `factor` scales the duration means (values below 1 shorten).
pub fn generate_parameters(
    spec: &PhoneticSpec,
    models: &ModelSet,
    factor: f64,
) -> Result<Generated, GenerateError> {
    let plan = predict_durations(spec, models, factor)?;
    let mcep = mlpg(&plan, models)?;
    let lf0 = generate_lf0(&plan, models)?;
    let statics = StaticFeatures {
        mcep,
        lf0,
        frame_shift: models.meta.frame_shift,
        sample_rate: models.meta.sample_rate,
        alpha: models.meta.alpha,
    };
    Ok(Generated { plan, statics })
}
