//! Acoustic analysis: mel-cepstrum, log-F0 with voicing, and dynamic features.
//!
//! Each frame carries a spectral stream (c0..cM plus Δ and Δ²) and a
//! multi-space log-F0 stream: either unvoiced, or voiced with a log-Hz value
//! and, inside voiced runs of three or more frames, its Δ and Δ².

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::corpus::AudioBuffer;

pub const DEFAULT_FRAME_LENGTH_S: f64 = 0.025;
pub const DEFAULT_FRAME_SHIFT_S: f64 = 0.005;
pub const DEFAULT_ORDER: usize = 24;
pub const DEFAULT_ALPHA: f64 = 0.42;
pub const DEFAULT_FMIN: f64 = 60.0;
pub const DEFAULT_FMAX: f64 = 400.0;
pub const FFT_SIZE: usize = 1024;

/// Log-spectrum floor relative to the frame's peak power (-60 dB).
pub const SPECTRAL_FLOOR_DB: f64 = -60.0;
/// c0 returned for an all-zero frame: ln(1e-5).
pub const SILENT_C0: f64 = -11.512925464970229;
pub const VOICING_THRESHOLD: f64 = 0.3;
pub const VOICING_MIN_RMS: f64 = 1e-4;

const MAGIC: &[u8; 4] = b"VZFS";
const FORMAT_VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("audio has {samples} samples, shorter than one {frame}-sample frame")]
    TooShort { samples: usize, frame: usize },
    #[error("invalid analysis setting: {0}")]
    InvalidConfig(String),
    #[error("feature file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub frame_length_s: f64,
    pub frame_shift_s: f64,
    pub order: usize,
    pub alpha: f64,
    pub fmin: f64,
    pub fmax: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            frame_length_s: DEFAULT_FRAME_LENGTH_S,
            frame_shift_s: DEFAULT_FRAME_SHIFT_S,
            order: DEFAULT_ORDER,
            alpha: DEFAULT_ALPHA,
            fmin: DEFAULT_FMIN,
            fmax: DEFAULT_FMAX,
        }
    }
}

impl AnalysisConfig {
    pub fn frame_length(&self, rate: u32) -> usize {
        (self.frame_length_s * rate as f64).round() as usize
    }

    pub fn frame_shift(&self, rate: u32) -> usize {
        (self.frame_shift_s * rate as f64).round() as usize
    }
}

pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
        .collect()
}

/// floor((N - L)/S) + 1, or `None` when N < L.
pub fn frame_count(samples: usize, length: usize, shift: usize) -> Option<usize> {
    (samples >= length).then(|| (samples - length) / shift + 1)
}

/// Splits a signal into Hamming-windowed frames starting every `shift`
/// samples.
pub fn frame_signal(
    samples: &[f64],
    sample_rate: u32,
    frame_length_s: f64,
    frame_shift_s: f64,
) -> Result<Vec<Vec<f64>>, FeatureError> {
    let length = (frame_length_s * sample_rate as f64).round() as usize;
    let shift = (frame_shift_s * sample_rate as f64).round() as usize;
    if shift == 0 || length < shift {
        return Err(FeatureError::InvalidConfig(format!(
            "frame length {length} must be >= frame shift {shift} > 0"
        )));
    }
    let count = frame_count(samples.len(), length, shift).ok_or(FeatureError::TooShort {
        samples: samples.len(),
        frame: length,
    })?;
    let window = hamming(length);
    Ok((0..count)
        .map(|t| {
            samples[t * shift..t * shift + length]
                .iter()
                .zip(&window)
                .map(|(x, w)| x * w)
                .collect()
        })
        .collect())
}

/// First-order all-pass frequency warping: maps ω to
/// ω + 2·atan(α·sin ω / (1 − α·cos ω)). The inverse map is `warp(·, -α)`.
pub fn warp_frequency(omega: f64, alpha: f64) -> f64 {
    omega + 2.0 * (alpha * omega.sin()).atan2(1.0 - alpha * omega.cos())
}

/// Spectral analysis with cached FFT plans and cosine tables.
pub struct CepstralAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    fft_size: usize,
    order: usize,
    alpha: f64,
    /// Linear-frequency bin position of each uniform warped-grid point.
    warped_positions: Vec<f64>,
    /// cos(2π·m·j/K) for m ≤ order, j ≤ K/2.
    cos_table: Vec<Vec<f64>>,
}

impl CepstralAnalyzer {
    pub fn new(order: usize, alpha: f64, fft_size: usize) -> Self {
        let half = fft_size / 2;
        let bin = 2.0 * PI / fft_size as f64;
        let warped_positions = (0..=half)
            .map(|j| (warp_frequency(j as f64 * bin, -alpha) / bin).clamp(0.0, half as f64))
            .collect();
        let cos_table = (0..=order)
            .map(|m| (0..=half).map(|j| (bin * (m * j) as f64).cos()).collect())
            .collect();
        Self {
            fft: FftPlanner::new().plan_fft_forward(fft_size),
            fft_size,
            order,
            alpha,
            warped_positions,
            cos_table,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Natural-log amplitude spectrum on bins 0..=K/2, floored at
    /// [`SPECTRAL_FLOOR_DB`] below the frame's peak. `None` for an all-zero
    /// frame.
    pub fn log_amplitude_spectrum(&self, frame: &[f64]) -> Option<Vec<f64>> {
        assert!(frame.len() <= self.fft_size, "frame longer than FFT size");
        let mut buf: Vec<Complex<f64>> = frame.iter().map(|&x| Complex::new(x, 0.0)).collect();
        buf.resize(self.fft_size, Complex::new(0.0, 0.0));
        self.fft.process(&mut buf);
        let power: Vec<f64> = buf[..=self.fft_size / 2]
            .iter()
            .map(|z| z.norm_sqr())
            .collect();
        let peak = power.iter().cloned().fold(0.0, f64::max);
        if peak <= 0.0 {
            return None;
        }
        let floor = peak * 10f64.powf(SPECTRAL_FLOOR_DB / 10.0);
        Some(power.iter().map(|&p| 0.5 * p.max(floor).ln()).collect())
    }

    /// Mel-cepstrum c0..cM of a windowed frame, with the convention
    /// log|H(ω)| = c0 + Σ_{m≥1} c_m cos(m·ω̃).
    pub fn mel_cepstrum(&self, frame: &[f64]) -> Vec<f64> {
        match self.log_amplitude_spectrum(frame) {
            Some(spec) => self.cepstrum_from_log_spectrum(&spec),
            None => {
                let mut c = vec![0.0; self.order + 1];
                c[0] = SILENT_C0;
                c
            }
        }
    }

    /// Resamples a bins-0..=K/2 log spectrum onto the warped grid and takes
    /// the inverse cosine transform.
    pub fn cepstrum_from_log_spectrum(&self, spec: &[f64]) -> Vec<f64> {
        let half = self.fft_size / 2;
        let warped: Vec<f64> = self
            .warped_positions
            .iter()
            .map(|&pos| {
                let lo = (pos.floor() as usize).min(half);
                let hi = (lo + 1).min(half);
                let frac = pos - lo as f64;
                spec[lo] * (1.0 - frac) + spec[hi] * frac
            })
            .collect();
        let k = self.fft_size as f64;
        self.cos_table
            .iter()
            .enumerate()
            .map(|(m, cos)| {
                let inner: f64 = (1..half).map(|j| warped[j] * cos[j]).sum();
                let sum = warped[0] + 2.0 * inner + warped[half] * cos[half];
                if m == 0 {
                    sum / k
                } else {
                    2.0 * sum / k
                }
            })
            .collect()
    }
}

/// One-shot mel-cepstral analysis of a windowed frame.
pub fn mel_cepstrum(frame: &[f64], order: usize, alpha: f64) -> Result<Vec<f64>, FeatureError> {
    if order < 1 || !(0.0..1.0).contains(&alpha) {
        return Err(FeatureError::InvalidConfig(format!(
            "order {order} must be >= 1 and alpha {alpha} in [0, 1)"
        )));
    }
    let fft_size = frame.len().next_power_of_two().max(FFT_SIZE);
    Ok(CepstralAnalyzer::new(order, alpha, fft_size).mel_cepstrum(frame))
}

fn check_f0_range(fmin: f64, fmax: f64, rate: u32) -> Result<(), FeatureError> {
    if !(fmin > 0.0 && fmin < fmax && fmax < rate as f64 / 2.0) {
        return Err(FeatureError::InvalidConfig(format!(
            "need 0 < fmin ({fmin}) < fmax ({fmax}) < {}",
            rate as f64 / 2.0
        )));
    }
    Ok(())
}

/// Per-frame F0 track on the default 25 ms / 5 ms grid.
pub fn extract_f0(
    audio: &AudioBuffer,
    fmin: f64,
    fmax: f64,
) -> Result<Vec<Option<f64>>, FeatureError> {
    let config = AnalysisConfig {
        fmin,
        fmax,
        ..AnalysisConfig::default()
    };
    extract_f0_with(audio, &config)
}

/// Normalized cross-correlation pitch tracker. Frame `t` is centred on the
/// same sample as the `t`-th spectral analysis frame.
pub fn extract_f0_with(
    audio: &AudioBuffer,
    config: &AnalysisConfig,
) -> Result<Vec<Option<f64>>, FeatureError> {
    let rate = audio.sample_rate;
    check_f0_range(config.fmin, config.fmax, rate)?;
    let length = config.frame_length(rate);
    let shift = config.frame_shift(rate);
    let Some(count) = frame_count(audio.len(), length, shift) else {
        return Ok(Vec::new());
    };
    let min_lag = ((rate as f64 / config.fmax).floor() as usize).max(2);
    let max_lag = (rate as f64 / config.fmin).ceil() as usize;
    let span = length + max_lag + 2;
    let x = &audio.samples;
    let sample = |i: isize| {
        if i >= 0 && (i as usize) < x.len() {
            x[i as usize]
        } else {
            0.0
        }
    };

    let mut raw: Vec<Option<f64>> = Vec::with_capacity(count);
    let mut seg = vec![0.0; span];
    let mut nccf = vec![0.0; max_lag + 2];
    for t in 0..count {
        let start = t * shift;
        let frame = &x[start..start + length];
        let rms = (frame.iter().map(|v| v * v).sum::<f64>() / length as f64).sqrt();
        if rms < VOICING_MIN_RMS {
            raw.push(None);
            continue;
        }
        let centre = (start + length / 2) as isize;
        let seg_start = centre - ((length + max_lag) / 2) as isize;
        for (i, s) in seg.iter_mut().enumerate() {
            *s = sample(seg_start + i as isize);
        }
        let e0: f64 = seg[..length].iter().map(|v| v * v).sum();
        let lo = min_lag - 1;
        let mut e_lag: f64 = seg[lo..lo + length].iter().map(|v| v * v).sum();
        for lag in lo..=max_lag + 1 {
            let cross: f64 = seg[..length]
                .iter()
                .zip(&seg[lag..lag + length])
                .map(|(a, b)| a * b)
                .sum();
            let denom = (e0 * e_lag).sqrt();
            nccf[lag] = if denom > 0.0 { cross / denom } else { 0.0 };
            if lag + length < span {
                e_lag += seg[lag + length] * seg[lag + length] - seg[lag] * seg[lag];
                e_lag = e_lag.max(0.0);
            }
        }
        let peaks: Vec<usize> = (min_lag..=max_lag)
            .filter(|&l| nccf[l] >= nccf[l - 1] && nccf[l] > nccf[l + 1])
            .collect();
        let best = peaks
            .iter()
            .map(|&l| nccf[l])
            .fold(f64::NEG_INFINITY, f64::max);
        if best < VOICING_THRESHOLD {
            raw.push(None);
            continue;
        }
        let lag = *peaks
            .iter()
            .find(|&&l| nccf[l] >= 0.85 * best)
            .expect("best peak exists");
        let (a, b, c) = (nccf[lag - 1], nccf[lag], nccf[lag + 1]);
        let curvature = a - 2.0 * b + c;
        let offset = if curvature < 0.0 {
            (0.5 * (a - c) / curvature).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        raw.push(Some(rate as f64 / (lag as f64 + offset)));
    }

    Ok((0..raw.len())
        .map(|t| {
            match (
                t.checked_sub(1).and_then(|p| raw[p]),
                raw[t],
                raw.get(t + 1).copied().flatten(),
            ) {
                (Some(a), Some(b), Some(c)) => {
                    let mut v = [a, b, c];
                    v.sort_by(f64::total_cmp);
                    Some(v[1])
                }
                (_, cur, _) => cur,
            }
        })
        .collect())
}

/// Static parameters of one utterance, before dynamic features.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticFeatures {
    pub mcep: Vec<Vec<f64>>,
    /// Natural log of F0 in Hz; `None` when unvoiced.
    pub lf0: Vec<Option<f64>>,
    pub frame_shift: f64,
    pub sample_rate: u32,
    pub alpha: f64,
}

impl StaticFeatures {
    pub fn len(&self) -> usize {
        self.mcep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mcep.is_empty()
    }

    pub fn order(&self) -> usize {
        self.mcep.first().map_or(0, |c| c.len().saturating_sub(1))
    }

    pub fn f0(&self) -> Vec<Option<f64>> {
        self.lf0.iter().map(|v| v.map(f64::exp)).collect()
    }
}

/// Mel-cepstra and log-F0 on a shared frame grid.
pub fn analyze(
    audio: &AudioBuffer,
    config: &AnalysisConfig,
) -> Result<StaticFeatures, FeatureError> {
    let frames = frame_signal(
        &audio.samples,
        audio.sample_rate,
        config.frame_length_s,
        config.frame_shift_s,
    )?;
    let fft_size = config
        .frame_length(audio.sample_rate)
        .next_power_of_two()
        .max(FFT_SIZE);
    let analyzer = CepstralAnalyzer::new(config.order, config.alpha, fft_size);
    let mcep = frames.iter().map(|f| analyzer.mel_cepstrum(f)).collect();
    let lf0 = extract_f0_with(audio, config)?
        .into_iter()
        .map(|f| f.map(f64::ln))
        .collect();
    Ok(StaticFeatures {
        mcep,
        lf0,
        frame_shift: config.frame_shift_s,
        sample_rate: audio.sample_rate,
        alpha: config.alpha,
    })
}

/// Δx_t = ½(x_{t+1} − x_{t−1}) and Δ²x_t = x_{t+1} − 2x_t + x_{t−1}, with
/// the edge values replicated past both ends.
pub fn delta_windows(xs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = xs.len();
    let at = |i: isize| xs[i.clamp(0, n as isize - 1) as usize];
    (0..n as isize)
        .map(|t| {
            (
                0.5 * (at(t + 1) - at(t - 1)),
                at(t + 1) - 2.0 * at(t) + at(t - 1),
            )
        })
        .unzip()
}

/// Multi-space log-F0 observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lf0Obs {
    Unvoiced,
    /// `dynamics` holds (Δ, Δ²) when the frame sits in a voiced run of at
    /// least three frames.
    Voiced {
        value: f64,
        dynamics: Option<[f64; 2]>,
    },
}

impl Lf0Obs {
    pub fn is_voiced(&self) -> bool {
        matches!(self, Lf0Obs::Voiced { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameVector {
    pub mcep: Vec<f64>,
    pub mcep_delta: Vec<f64>,
    pub mcep_delta2: Vec<f64>,
    pub lf0: Lf0Obs,
}

impl FrameVector {
    /// Spectral stream laid out as [c, Δc, Δ²c].
    pub fn spectral(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.mcep.len());
        v.extend_from_slice(&self.mcep);
        v.extend_from_slice(&self.mcep_delta);
        v.extend_from_slice(&self.mcep_delta2);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub frames: Vec<FrameVector>,
    pub frame_shift: f64,
    pub source_sample_rate: u32,
    /// Cepstral order M (frames carry M+1 coefficients).
    pub order: usize,
}

/// Minimum voiced-run length for log-F0 dynamics.
pub const MIN_VOICED_RUN: usize = 3;

/// Maximal runs of voiced frames as (start, end) half-open ranges.
pub fn voiced_runs(voiced: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut t = 0;
    while t < voiced.len() {
        if voiced[t] {
            let start = t;
            while t < voiced.len() && voiced[t] {
                t += 1;
            }
            runs.push((start, t));
        } else {
            t += 1;
        }
    }
    runs
}

/// Appends Δ and Δ² to both streams.
pub fn compute_deltas(statics: &StaticFeatures) -> FeatureSequence {
    let n = statics.len();
    let order = statics.order();
    let dims = order + 1;
    let mut delta = vec![vec![0.0; dims]; n];
    let mut delta2 = vec![vec![0.0; dims]; n];
    for d in 0..dims {
        let track: Vec<f64> = statics.mcep.iter().map(|c| c[d]).collect();
        let (d1, d2) = delta_windows(&track);
        for t in 0..n {
            delta[t][d] = d1[t];
            delta2[t][d] = d2[t];
        }
    }

    let mut lf0: Vec<Lf0Obs> = statics
        .lf0
        .iter()
        .map(|v| match v {
            Some(value) => Lf0Obs::Voiced {
                value: *value,
                dynamics: None,
            },
            None => Lf0Obs::Unvoiced,
        })
        .collect();
    let voiced: Vec<bool> = statics.lf0.iter().map(Option::is_some).collect();
    for (start, end) in voiced_runs(&voiced) {
        if end - start < MIN_VOICED_RUN {
            continue;
        }
        let track: Vec<f64> = statics.lf0[start..end].iter().map(|v| v.unwrap()).collect();
        let (d1, d2) = delta_windows(&track);
        for (i, obs) in lf0[start..end].iter_mut().enumerate() {
            if let Lf0Obs::Voiced { dynamics, .. } = obs {
                *dynamics = Some([d1[i], d2[i]]);
            }
        }
    }

    let frames = statics
        .mcep
        .iter()
        .zip(delta)
        .zip(delta2)
        .zip(lf0)
        .map(|(((mcep, mcep_delta), mcep_delta2), lf0)| FrameVector {
            mcep: mcep.clone(),
            mcep_delta,
            mcep_delta2,
            lf0,
        })
        .collect();
    FeatureSequence {
        frames,
        frame_shift: statics.frame_shift,
        source_sample_rate: statics.sample_rate,
        order,
    }
}

impl FeatureSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Drops the dynamic features.
    pub fn statics(&self, alpha: f64) -> StaticFeatures {
        StaticFeatures {
            mcep: self.frames.iter().map(|f| f.mcep.clone()).collect(),
            lf0: self
                .frames
                .iter()
                .map(|f| match f.lf0 {
                    Lf0Obs::Voiced { value, .. } => Some(value),
                    Lf0Obs::Unvoiced => None,
                })
                .collect(),
            frame_shift: self.frame_shift,
            sample_rate: self.source_sample_rate,
            alpha,
        }
    }

    /// Little-endian binary: magic `VZFS`, u16 version, u16 order, f64 frame
    /// shift, u32 sample rate, u32 frame count; then per frame 3·(M+1) f64
    /// spectral values, a u8 voicing code (0 unvoiced, 1 voiced, 2 voiced
    /// with dynamics) and three f64 log-F0 values (zero when absent).
    pub fn write_binary<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&(self.order as u16).to_le_bytes())?;
        out.write_all(&self.frame_shift.to_le_bytes())?;
        out.write_all(&self.source_sample_rate.to_le_bytes())?;
        out.write_all(&(self.frames.len() as u32).to_le_bytes())?;
        for f in &self.frames {
            for v in f.mcep.iter().chain(&f.mcep_delta).chain(&f.mcep_delta2) {
                out.write_all(&v.to_le_bytes())?;
            }
            let (code, vals) = match f.lf0 {
                Lf0Obs::Unvoiced => (0u8, [0.0; 3]),
                Lf0Obs::Voiced {
                    value,
                    dynamics: None,
                } => (1, [value, 0.0, 0.0]),
                Lf0Obs::Voiced {
                    value,
                    dynamics: Some([d1, d2]),
                } => (2, [value, d1, d2]),
            };
            out.write_all(&[code])?;
            for v in vals {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self, FeatureError> {
        fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N], FeatureError> {
            let mut b = [0u8; N];
            r.read_exact(&mut b).map_err(|e| match e.kind() {
                io::ErrorKind::UnexpectedEof => FeatureError::Format("truncated file".into()),
                _ => FeatureError::Io(e),
            })?;
            Ok(b)
        }
        let f64_of = |r: &mut R| take::<8, R>(r).map(f64::from_le_bytes);
        if &take::<4, R>(&mut input)? != MAGIC {
            return Err(FeatureError::Format("bad magic".into()));
        }
        let version = u16::from_le_bytes(take(&mut input)?);
        if version != FORMAT_VERSION {
            return Err(FeatureError::Format(format!(
                "unsupported version {version}"
            )));
        }
        let order = u16::from_le_bytes(take(&mut input)?) as usize;
        let frame_shift = f64_of(&mut input)?;
        let source_sample_rate = u32::from_le_bytes(take(&mut input)?);
        let count = u32::from_le_bytes(take(&mut input)?) as usize;
        let dims = order + 1;
        let mut frames = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let mut stream = || {
                (0..dims)
                    .map(|_| f64_of(&mut input))
                    .collect::<Result<Vec<_>, _>>()
            };
            let (mcep, mcep_delta, mcep_delta2) = (stream()?, stream()?, stream()?);
            let code = take::<1, R>(&mut input)?[0];
            let vals = [
                f64_of(&mut input)?,
                f64_of(&mut input)?,
                f64_of(&mut input)?,
            ];
            let lf0 = match code {
                0 => Lf0Obs::Unvoiced,
                1 => Lf0Obs::Voiced {
                    value: vals[0],
                    dynamics: None,
                },
                2 => Lf0Obs::Voiced {
                    value: vals[0],
                    dynamics: Some([vals[1], vals[2]]),
                },
                other => return Err(FeatureError::Format(format!("bad voicing code {other}"))),
            };
            frames.push(FrameVector {
                mcep,
                mcep_delta,
                mcep_delta2,
                lf0,
            });
        }
        Ok(Self {
            frames,
            frame_shift,
            source_sample_rate,
            order,
        })
    }

    /// One line per frame: index, F0 in Hz (0 when unvoiced), then c0..cM.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# frames={} order={} shift={} rate={}\n",
            self.len(),
            self.order,
            self.frame_shift,
            self.source_sample_rate
        );
        for (t, f) in self.frames.iter().enumerate() {
            let f0 = match f.lf0 {
                Lf0Obs::Voiced { value, .. } => value.exp(),
                Lf0Obs::Unvoiced => 0.0,
            };
            let _ = write!(out, "{t}\t{f0:.3}");
            for c in &f.mcep {
                let _ = write!(out, "\t{c:.6}");
            }
            out.push('\n');
        }
        out
    }
}
