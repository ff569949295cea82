//! Flat start, embedded Baum-Welch re-estimation and duration estimation
//! over a corpus of monophone-labelled utterances.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::corpus::{self, Corpus, CorpusError, CANONICAL_SAMPLE_RATE};
use crate::features::{self, AnalysisConfig, FeatureError, FeatureSequence, Lf0Obs};
use crate::hmm::{
    self, compose_phones, Accumulator, DurationModel, GaussianStream, HmmError, LeftRightHmm,
    ModelMeta, ModelSet, MsdStream, Observation, StateEmission, VarianceFloors,
};
use crate::textproc::{self, Phoneme, PhoneticSpec, TextError};

pub const DEFAULT_ITERATIONS: usize = 20;
pub const FLAT_SELF_LOOP: f64 = 0.6;
/// Relative spectral variance floor (times the global variance).
pub const SPECTRAL_FLOOR_SCALE: f64 = 1e-4;
pub const MIN_SPECTRAL_FLOOR: f64 = 1e-10;
pub const LF0_FLOOR: f64 = 1e-4;
/// Lower bound on duration variances, in frames².
pub const DURATION_VAR_FLOOR: f64 = 1.0;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("no training data")]
    Empty,
    #[error("every utterance was skipped")]
    AllSkipped,
    #[error("utterance {id}: {source}")]
    Utterance { id: String, source: HmmError },
    #[error("inconsistent features: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Hmm(#[from] HmmError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One utterance ready for training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingUtterance {
    pub id: String,
    pub phones: Vec<Phoneme>,
    pub features: FeatureSequence,
    pub obs: Vec<Observation>,
}

impl TrainingUtterance {
    pub fn new(id: impl Into<String>, phones: Vec<Phoneme>, features: FeatureSequence) -> Self {
        let obs = hmm::observations(&features);
        Self {
            id: id.into(),
            phones,
            features,
            obs,
        }
    }

    pub fn from_spec(
        id: impl Into<String>,
        spec: &PhoneticSpec,
        features: FeatureSequence,
    ) -> Self {
        Self::new(id, spec.phones.clone(), features)
    }

    pub fn frames(&self) -> usize {
        self.obs.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, thiserror::Error)]
enum PrepareError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("sample rate {0} Hz, expected {CANONICAL_SAMPLE_RATE}")]
    Rate(u32),
}

/// Reads, analyzes and phonetizes every utterance. Failures are reported
/// per utterance rather than aborting.
pub fn prepare_corpus(
    corpus: &Corpus,
    config: &AnalysisConfig,
) -> (Vec<TrainingUtterance>, Vec<Skipped>) {
    let results: Vec<_> = corpus
        .utterances
        .par_iter()
        .map(|u| -> Result<TrainingUtterance, PrepareError> {
            let audio = corpus::read_wav(corpus.audio_path(u))?;
            if audio.sample_rate != CANONICAL_SAMPLE_RATE {
                return Err(PrepareError::Rate(audio.sample_rate));
            }
            let spec = textproc::phonetize(&u.text)?;
            let statics = features::analyze(&audio, config)?;
            Ok(TrainingUtterance::from_spec(
                &u.id,
                &spec,
                features::compute_deltas(&statics),
            ))
        })
        .collect();
    let mut ready = Vec::new();
    let mut skipped = Vec::new();
    for (u, r) in corpus.utterances.iter().zip(results) {
        match r {
            Ok(t) => ready.push(t),
            Err(e) => skipped.push(Skipped {
                id: u.id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    (ready, skipped)
}

fn mean_var(values: impl Iterator<Item = f64> + Clone) -> Option<(f64, f64)> {
    let (n, sum) = values
        .clone()
        .fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return None;
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    Some((mean, var))
}

/// Global statistics shared by every state of every phoneme.
pub fn flat_start(
    utts: &[TrainingUtterance],
    n_states: usize,
    alpha: f64,
) -> Result<ModelSet, TrainError> {
    let frames: Vec<&Observation> = utts.iter().flat_map(|u| &u.obs).collect();
    if frames.is_empty() || n_states == 0 {
        return Err(TrainError::Empty);
    }
    let first = &utts.iter().find(|u| !u.obs.is_empty()).unwrap().features;
    let dim = frames[0].spectral.len();
    if dim != 3 * (first.order + 1) || frames.iter().any(|o| o.spectral.len() != dim) {
        return Err(TrainError::Inconsistent(
            "spectral dimension differs between frames".into(),
        ));
    }
    if utts
        .iter()
        .any(|u| u.features.frame_shift != first.frame_shift)
    {
        return Err(TrainError::Inconsistent(
            "frame shift differs between utterances".into(),
        ));
    }

    let mut spectral_mean = Vec::with_capacity(dim);
    let mut spectral_var = Vec::with_capacity(dim);
    let mut spectral_floor = Vec::with_capacity(dim);
    for k in 0..dim {
        let (m, v) = mean_var(frames.iter().map(|o| o.spectral[k])).unwrap();
        let floor = (SPECTRAL_FLOOR_SCALE * v).max(MIN_SPECTRAL_FLOOR);
        spectral_mean.push(m);
        spectral_var.push(v.max(floor));
        spectral_floor.push(floor);
    }

    let lf0_dim = |o: &Observation, k: usize| -> Option<f64> {
        match o.lf0 {
            Lf0Obs::Voiced { value, .. } if k == 0 => Some(value),
            Lf0Obs::Voiced {
                dynamics: Some(d), ..
            } if k > 0 => Some(d[k - 1]),
            _ => None,
        }
    };
    let mut lf0_mean = [0.0; 3];
    let mut lf0_var = [1.0; 3];
    for k in 0..3 {
        if let Some((m, v)) = mean_var(frames.iter().filter_map(|o| lf0_dim(o, k))) {
            lf0_mean[k] = m;
            lf0_var[k] = v.max(LF0_FLOOR);
        }
    }
    let voiced = frames.iter().filter(|o| o.lf0.is_voiced()).count();
    let voiced_weight = voiced as f64 / frames.len() as f64;

    let emission = StateEmission {
        spectral: GaussianStream {
            mean: spectral_mean,
            var: spectral_var,
        },
        pitch: MsdStream {
            voiced_weight,
            voiced_gauss: GaussianStream {
                mean: lf0_mean.to_vec(),
                var: lf0_var.to_vec(),
            },
        },
    };
    let model = LeftRightHmm {
        self_loop: vec![FLAT_SELF_LOOP; n_states],
        emissions: vec![emission; n_states],
    };

    let n = utts.len() as f64;
    let avg_frames = utts.iter().map(|u| u.frames()).sum::<usize>() as f64 / n;
    let avg_states = utts
        .iter()
        .map(|u| u.phones.len() * n_states)
        .sum::<usize>() as f64
        / n;
    let d = if avg_states > 0.0 {
        (avg_frames / avg_states).max(1.0)
    } else {
        1.0
    };
    let duration = DurationModel {
        mean: vec![d; n_states],
        var: vec![d; n_states],
    };

    Ok(ModelSet {
        models: Phoneme::ALL.iter().map(|&p| (p, model.clone())).collect(),
        durations: Phoneme::ALL
            .iter()
            .map(|&p| (p, duration.clone()))
            .collect(),
        meta: ModelMeta {
            order: first.order,
            alpha,
            frame_shift: first.frame_shift,
            sample_rate: first.source_sample_rate,
            n_states,
        },
        floors: VarianceFloors {
            spectral: spectral_floor,
            lf0: vec![LF0_FLOOR; 3],
        },
    })
}

fn chain_length(models: &ModelSet, phones: &[Phoneme]) -> usize {
    phones
        .iter()
        .map(|p| models.models.get(p).map_or(0, LeftRightHmm::n_states))
        .sum()
}

/// Splits utterances into those long enough for their chain and the rest.
pub fn usable<'a>(
    models: &ModelSet,
    utts: &'a [TrainingUtterance],
) -> (Vec<&'a TrainingUtterance>, Vec<Skipped>) {
    let mut ok = Vec::new();
    let mut skipped = Vec::new();
    for u in utts {
        let states = chain_length(models, &u.phones);
        if u.frames() < states || states == 0 {
            skipped.push(Skipped {
                id: u.id.clone(),
                reason: format!("{} frames for a {states}-state chain", u.frames()),
            });
        } else {
            ok.push(u);
        }
    }
    (ok, skipped)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub models: ModelSet,
    /// Corpus log-likelihood before each re-estimation.
    pub trace: Vec<f64>,
    pub skipped: Vec<Skipped>,
    /// Phonemes without occupancy in the last iteration.
    pub unobserved: Vec<Phoneme>,
}

fn e_step(models: &ModelSet, u: &TrainingUtterance) -> Result<Accumulator, TrainError> {
    let wrap = |source| TrainError::Utterance {
        id: u.id.clone(),
        source,
    };
    let chain = compose_phones(&u.phones, models).map_err(wrap)?;
    let post = hmm::forward_backward(&chain.hmm, &u.obs).map_err(wrap)?;
    let mut acc = Accumulator::default();
    acc.add(models, &chain, &post, &u.obs);
    Ok(acc)
}

/// `n_iterations` rounds of chain composition, forward-backward and
/// re-estimation. Per-utterance E-steps run in parallel and are summed in
/// corpus order.
pub fn embedded_train(
    models: &ModelSet,
    utts: &[TrainingUtterance],
    n_iterations: usize,
) -> Result<TrainReport, TrainError> {
    if utts.is_empty() {
        return Err(TrainError::Empty);
    }
    let (ok, skipped) = usable(models, utts);
    if ok.is_empty() {
        return Err(TrainError::AllSkipped);
    }
    let mut current = models.clone();
    let mut trace = Vec::with_capacity(n_iterations);
    let mut unobserved = Vec::new();
    for _ in 0..n_iterations {
        let parts = ok
            .par_iter()
            .map(|u| e_step(&current, u))
            .collect::<Result<Vec<_>, _>>()?;
        let mut total = Accumulator::default();
        for p in &parts {
            total.merge(p);
        }
        trace.push(total.log_likelihood);
        let out = hmm::accumulate_and_update(&current, &total);
        current = out.models;
        unobserved = out.unobserved;
    }
    Ok(TrainReport {
        models: current,
        trace,
        skipped,
        unobserved,
    })
}

/// One aligned state run.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSegment {
    pub position: usize,
    pub phoneme: Phoneme,
    pub left: Option<Phoneme>,
    pub right: Option<Phoneme>,
    pub state: usize,
    pub start: usize,
    pub end: usize,
}

impl AlignedSegment {
    pub fn frames(&self) -> usize {
        self.end - self.start
    }

    /// `left-phone+right`, with `*` at the utterance edges.
    pub fn context_label(&self) -> String {
        let show =
            |p: Option<Phoneme>| p.map_or_else(|| "*".to_string(), |p| p.symbol().to_string());
        format!("{}-{}+{}", show(self.left), self.phoneme, show(self.right))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceAlignment {
    pub id: String,
    pub log_likelihood: f64,
    pub segments: Vec<AlignedSegment>,
}

pub fn align(models: &ModelSet, u: &TrainingUtterance) -> Result<UtteranceAlignment, TrainError> {
    let wrap = |source| TrainError::Utterance {
        id: u.id.clone(),
        source,
    };
    let chain = compose_phones(&u.phones, models).map_err(wrap)?;
    let a = hmm::viterbi(&chain.hmm, &u.obs).map_err(wrap)?;
    let segments = a
        .segments()
        .into_iter()
        .map(|(s, start, end)| {
            let label = chain.labels[s];
            let pos = label.position;
            AlignedSegment {
                position: pos,
                phoneme: label.phoneme,
                left: pos.checked_sub(1).map(|i| u.phones[i]),
                right: u.phones.get(pos + 1).copied(),
                state: label.state,
                start,
                end,
            }
        })
        .collect();
    Ok(UtteranceAlignment {
        id: u.id.clone(),
        log_likelihood: a.log_likelihood,
        segments,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DurationReport {
    pub models: ModelSet,
    /// Never aligned; flat-start durations kept.
    pub flagged: Vec<Phoneme>,
    pub alignments: Vec<UtteranceAlignment>,
    pub skipped: Vec<Skipped>,
}

/// Mean and population variance of the given run lengths, variance floored
/// at [`DURATION_VAR_FLOOR`].
pub fn run_statistics(runs: &[usize]) -> Option<(f64, f64)> {
    let (mean, var) = mean_var(runs.iter().map(|&r| r as f64))?;
    Some((mean, var.max(DURATION_VAR_FLOOR)))
}

/// Viterbi-aligns every utterance and sets per-state duration statistics
/// from the aligned run lengths.
pub fn estimate_durations(
    models: &ModelSet,
    utts: &[TrainingUtterance],
) -> Result<DurationReport, TrainError> {
    let (ok, skipped) = usable(models, utts);
    let alignments = ok
        .par_iter()
        .map(|u| align(models, u))
        .collect::<Result<Vec<_>, _>>()?;
    let mut runs: BTreeMap<(Phoneme, usize), Vec<usize>> = BTreeMap::new();
    for a in &alignments {
        for s in &a.segments {
            runs.entry((s.phoneme, s.state))
                .or_default()
                .push(s.frames());
        }
    }
    let mut out = models.clone();
    let mut flagged = Vec::new();
    for (p, dur) in out.durations.iter_mut() {
        let mut seen = false;
        for state in 0..dur.mean.len() {
            if let Some((m, v)) = runs.get(&(*p, state)).and_then(|r| run_statistics(r)) {
                dur.mean[state] = m;
                dur.var[state] = v;
                seen = true;
            }
        }
        if !seen {
            flagged.push(*p);
        }
    }
    Ok(DurationReport {
        models: out,
        flagged,
        alignments,
        skipped,
    })
}

/// CSV with columns `iteration,log_likelihood` (iterations from 1).
pub fn write_trace_csv<W: Write>(trace: &[f64], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "log_likelihood"])?;
    for (i, ll) in trace.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format!("{ll}")])?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with columns `utterance_id,position,phoneme,context,state,start_frame,end_frame`;
/// states are numbered from 1 and end frames are exclusive.
pub fn write_alignment_csv<W: Write>(
    alignments: &[UtteranceAlignment],
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "utterance_id",
        "position",
        "phoneme",
        "context",
        "state",
        "start_frame",
        "end_frame",
    ])?;
    for a in alignments {
        for s in &a.segments {
            w.write_record([
                a.id.clone(),
                s.position.to_string(),
                s.phoneme.symbol().to_string(),
                s.context_label(),
                (s.state + 1).to_string(),
                s.start.to_string(),
                s.end.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
