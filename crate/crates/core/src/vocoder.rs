//! Source-filter synthesis: pulse/noise excitation shaped by minimum-phase
//! impulse responses reconstructed from mel-cepstra.

use std::f64::consts::{LN_10, PI};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::corpus::AudioBuffer;
use crate::features::{
    self, hamming, warp_frequency, AnalysisConfig, FeatureError, StaticFeatures, FFT_SIZE,
};

pub const PEAK_TARGET: f64 = 0.9;
/// Raw outputs quieter than this are left unnormalized.
pub const NORMALIZE_MIN_PEAK: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum VocoderError {
    #[error("excitation has {excitation} samples, trajectory needs {expected}")]
    LengthMismatch { excitation: usize, expected: usize },
    #[error("invalid vocoder setting: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Features(#[from] FeatureError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VocoderConfig {
    pub fmin: f64,
    pub fmax: f64,
    pub seed: u64,
    /// Analysis window length in seconds; sets the gain of the envelope.
    pub frame_length_s: f64,
}

impl Default for VocoderConfig {
    fn default() -> Self {
        Self {
            fmin: features::DEFAULT_FMIN,
            fmax: features::DEFAULT_FMAX,
            seed: 0,
            frame_length_s: features::DEFAULT_FRAME_LENGTH_S,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Excitation {
    pub samples: Vec<f64>,
    /// Voiced frames whose F0 had to be clamped into [fmin, fmax].
    pub clamped_frames: usize,
}

/// Pulse train in voiced frames, Gaussian noise in unvoiced ones, both with
/// unit mean power: a pulse of period P samples has amplitude √P. The pulse
/// phase runs continuously across voiced frames and holds during unvoiced
/// ones; the first voiced sample carries a pulse.
pub fn build_excitation(
    f0: &[Option<f64>],
    frame_shift: usize,
    sample_rate: u32,
    config: &VocoderConfig,
) -> Result<Excitation, VocoderError> {
    if frame_shift == 0 || !(config.fmin > 0.0 && config.fmin <= config.fmax) {
        return Err(VocoderError::InvalidConfig(format!(
            "frame shift {frame_shift}, F0 range [{}, {}]",
            config.fmin, config.fmax
        )));
    }
    let rate = sample_rate as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut samples = Vec::with_capacity(f0.len() * frame_shift);
    let mut clamped_frames = 0;
    let mut phase = 1.0;
    for &frame in f0 {
        match frame {
            Some(hz) => {
                let f = hz.clamp(config.fmin, config.fmax);
                if f != hz {
                    clamped_frames += 1;
                }
                let amplitude = (rate / f).sqrt();
                for _ in 0..frame_shift {
                    if phase >= 1.0 {
                        samples.push(amplitude);
                        phase -= 1.0;
                    } else {
                        samples.push(0.0);
                    }
                    phase += f / rate;
                }
            }
            None => {
                samples
                    .extend((0..frame_shift).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
            }
        }
    }
    Ok(Excitation {
        samples,
        clamped_frames,
    })
}

/// Builds minimum-phase impulse responses from mel-cepstra.
pub struct EnvelopeFilter {
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    size: usize,
    alpha: f64,
    /// cos(m·ω̃_k) for the warped image of every linear bin.
    cos_table: Vec<Vec<f64>>,
    log_gain: f64,
}

impl EnvelopeFilter {
    /// `window_len` is the analysis window length; its RMS gain is removed
    /// from c0 so a unit-power excitation reproduces the analyzed level.
    pub fn new(order: usize, alpha: f64, size: usize, window_len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let half = size / 2;
        let cos_table = (0..=half)
            .map(|k| {
                let w = warp_frequency(2.0 * PI * k as f64 / size as f64, alpha);
                (0..=order).map(|m| (m as f64 * w).cos()).collect()
            })
            .collect();
        let energy: f64 = hamming(window_len.max(1)).iter().map(|w| w * w).sum();
        Self {
            fft: planner.plan_fft_forward(size),
            ifft: planner.plan_fft_inverse(size),
            size,
            alpha,
            cos_table,
            log_gain: 0.5 * energy.ln(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Natural-log amplitude envelope on bins 0..=K/2.
    pub fn log_envelope(&self, mcep: &[f64]) -> Vec<f64> {
        self.cos_table
            .iter()
            .map(|cos| {
                let shape: f64 = mcep.iter().zip(cos).skip(1).map(|(c, k)| c * k).sum();
                mcep[0] - self.log_gain + shape
            })
            .collect()
    }

    /// Minimum-phase impulse response (K samples) whose magnitude response
    /// is the envelope, via the folded real cepstrum.
    pub fn impulse_response(&self, mcep: &[f64]) -> Vec<f64> {
        let k = self.size;
        let half = k / 2;
        let env = self.log_envelope(mcep);
        let mut buf: Vec<Complex<f64>> = (0..k)
            .map(|i| Complex::new(env[if i <= half { i } else { k - i }], 0.0))
            .collect();
        self.ifft.process(&mut buf);
        let scale = 1.0 / k as f64;
        for (n, z) in buf.iter_mut().enumerate() {
            let c = z.re * scale;
            let folded = match n {
                0 => c,
                n if n < half => 2.0 * c,
                n if n == half => c,
                _ => 0.0,
            };
            *z = Complex::new(folded, 0.0);
        }
        self.fft.process(&mut buf);
        for z in buf.iter_mut() {
            *z = z.exp();
        }
        self.ifft.process(&mut buf);
        buf.iter().map(|z| z.re * scale).collect()
    }
}

/// Filters each frame's excitation segment [tS, (t+1)S) with that frame's
/// impulse response and overlap-adds the results. No normalization, so the
/// output is linear in the excitation. Tails past the last segment are
/// dropped.
pub fn synthesize_raw(
    mcep: &[Vec<f64>],
    excitation: &[f64],
    alpha: f64,
    frame_shift: usize,
    window_len: usize,
) -> Result<Vec<f64>, VocoderError> {
    let expected = mcep.len() * frame_shift;
    if excitation.len() != expected {
        return Err(VocoderError::LengthMismatch {
            excitation: excitation.len(),
            expected,
        });
    }
    let mut out = vec![0.0; expected];
    let Some(first) = mcep.first() else {
        return Ok(out);
    };
    let filter = EnvelopeFilter::new(first.len() - 1, alpha, FFT_SIZE, window_len);
    for (t, c) in mcep.iter().enumerate() {
        let segment = &excitation[t * frame_shift..(t + 1) * frame_shift];
        if segment.iter().all(|&e| e == 0.0) {
            continue;
        }
        let h = filter.impulse_response(c);
        for (i, &e) in segment.iter().enumerate() {
            if e == 0.0 {
                continue;
            }
            let start = t * frame_shift + i;
            let reach = h.len().min(expected - start);
            for (o, &hk) in out[start..start + reach].iter_mut().zip(&h) {
                *o += e * hk;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub audio: AudioBuffer,
    pub raw_peak: f64,
    /// Factor applied to the raw output (1 when left unnormalized).
    pub gain: f64,
    pub clamped_frames: usize,
}

/// Peak-normalizes to [`PEAK_TARGET`] unless the raw peak is below
/// [`NORMALIZE_MIN_PEAK`].
pub fn normalize(raw: Vec<f64>, sample_rate: u32) -> Result<(AudioBuffer, f64, f64), VocoderError> {
    let peak = raw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let gain = if peak >= NORMALIZE_MIN_PEAK {
        PEAK_TARGET / peak
    } else {
        1.0
    };
    let samples = raw.into_iter().map(|x| x * gain).collect();
    let audio = AudioBuffer::new(samples, sample_rate)
        .map_err(|e| VocoderError::InvalidConfig(format!("synthesized signal rejected: {e}")))?;
    Ok((audio, peak, gain))
}

pub fn synthesize(
    mcep: &[Vec<f64>],
    excitation: &[f64],
    alpha: f64,
    frame_shift: usize,
    window_len: usize,
    sample_rate: u32,
) -> Result<Synthesis, VocoderError> {
    let raw = synthesize_raw(mcep, excitation, alpha, frame_shift, window_len)?;
    let (audio, raw_peak, gain) = normalize(raw, sample_rate)?;
    Ok(Synthesis {
        audio,
        raw_peak,
        gain,
        clamped_frames: 0,
    })
}

/// Excitation plus synthesis for a static parameter trajectory.
pub fn vocode(params: &StaticFeatures, config: &VocoderConfig) -> Result<Synthesis, VocoderError> {
    let rate = params.sample_rate;
    let shift = (params.frame_shift * rate as f64).round() as usize;
    let window = (config.frame_length_s * rate as f64).round() as usize;
    let excitation = build_excitation(&params.f0(), shift, rate, config)?;
    let mut s = synthesize(
        &params.mcep,
        &excitation.samples,
        params.alpha,
        shift,
        window,
        rate,
    )?;
    s.clamped_frames = excitation.clamped_frames;
    Ok(s)
}

/// Analysis followed directly by synthesis.
pub fn copy_synthesis(
    audio: &AudioBuffer,
    analysis: &AnalysisConfig,
    seed: u64,
) -> Result<Synthesis, VocoderError> {
    let params = features::analyze(audio, analysis)?;
    let config = VocoderConfig {
        fmin: analysis.fmin,
        fmax: analysis.fmax,
        seed,
        frame_length_s: analysis.frame_length_s,
    };
    vocode(&params, &config)
}

/// Mean over frames of (10/ln 10)·√(2·Σ_{m≥1} (a_m − b_m)²), in dB. The
/// energy term c0 is excluded; frames beyond the shorter input are ignored.
pub fn mel_cepstral_distortion(a: &[Vec<f64>], b: &[Vec<f64>]) -> Option<f64> {
    let n = a.len().min(b.len());
    if n == 0 {
        return None;
    }
    let total: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let sq: f64 = x.iter().zip(y).skip(1).map(|(p, q)| (p - q).powi(2)).sum();
            10.0 / LN_10 * (2.0 * sq).sqrt()
        })
        .sum();
    Some(total / n as f64)
}

/// Text dump with one `frame f0_hz gain` line per frame; `gain` is exp(c0)
/// and unvoiced frames show F0 0.
pub fn frame_report(params: &StaticFeatures) -> String {
    let mut out = String::from("# frame f0_hz gain\n");
    for (t, (c, f)) in params.mcep.iter().zip(params.f0()).enumerate() {
        out.push_str(&format!("{t} {:.3} {:.6e}\n", f.unwrap_or(0.0), c[0].exp()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn constant_pitch_pulses() {
        let f0 = vec![Some(100.0); 200];
        let e = build_excitation(&f0, 80, 16000, &VocoderConfig::default()).unwrap();
        assert_eq!(e.samples.len(), 16000);
        let pulses: Vec<usize> = e
            .samples
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > 0.0)
            .map(|(i, _)| i)
            .collect();
        assert!(
            (99..=101).contains(&pulses.len()),
            "{} pulses",
            pulses.len()
        );
        assert_eq!(pulses[0], 0);
        for w in pulses.windows(2) {
            assert!((159..=161).contains(&(w[1] - w[0])));
        }
        assert_eq!(e.clamped_frames, 0);
    }

    #[test]
    fn noise_matches_pulse_energy() {
        let voiced = build_excitation(
            &vec![Some(150.0); 400],
            80,
            16000,
            &VocoderConfig::default(),
        )
        .unwrap();
        let unvoiced =
            build_excitation(&vec![None; 400], 80, 16000, &VocoderConfig::default()).unwrap();
        let mean = unvoiced.samples.iter().sum::<f64>() / unvoiced.samples.len() as f64;
        assert!(mean.abs() < 0.05);
        let ratio = rms(&unvoiced.samples) / rms(&voiced.samples);
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn empty_and_clamped() {
        let cfg = VocoderConfig::default();
        assert!(build_excitation(&[], 80, 16000, &cfg)
            .unwrap()
            .samples
            .is_empty());
        let e = build_excitation(
            &[Some(20.0), Some(1000.0), Some(100.0), None],
            80,
            16000,
            &cfg,
        )
        .unwrap();
        assert_eq!(e.clamped_frames, 2);
        assert_eq!(e.samples.len(), 320);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let cfg = VocoderConfig {
            seed: 7,
            ..Default::default()
        };
        let a = build_excitation(&[None; 10], 80, 16000, &cfg).unwrap();
        let b = build_excitation(&[None; 10], 80, 16000, &cfg).unwrap();
        assert_eq!(a, b);
        let c =
            build_excitation(&[None; 10], 80, 16000, &VocoderConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn flat_cepstrum_gives_scaled_impulse() {
        let f = EnvelopeFilter::new(4, 0.42, 1024, 1);
        let h = f.impulse_response(&[2f64.ln(), 0.0, 0.0, 0.0, 0.0]);
        assert!((h[0] - 2.0).abs() < 1e-12);
        assert!(h[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn impulse_response_magnitude_matches_envelope() {
        let c = [0.3, 0.8, -0.4, 0.2, 0.1];
        let f = EnvelopeFilter::new(4, 0.42, 1024, 1);
        let h = f.impulse_response(&c);
        let env = f.log_envelope(&c);
        let mut buf: Vec<Complex<f64>> = h.iter().map(|&x| Complex::new(x, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(1024).process(&mut buf);
        for k in 0..=512 {
            assert!((buf[k].norm().ln() - env[k]).abs() < 1e-6, "bin {k}");
        }
        // Minimum phase: energy concentrated at the start.
        let early: f64 = h[..64].iter().map(|v| v * v).sum();
        let total: f64 = h.iter().map(|v| v * v).sum();
        assert!(early / total > 0.99);
    }

    #[test]
    fn synthesis_is_linear_and_c0_is_log_gain() {
        let frames = 6;
        let mcep: Vec<Vec<f64>> = (0..frames)
            .map(|t| vec![-1.0, 0.5, -0.2 + 0.05 * t as f64, 0.1])
            .collect();
        let f0: Vec<Option<f64>> = (0..frames)
            .map(|t| if t % 3 == 2 { None } else { Some(130.0) })
            .collect();
        let e = build_excitation(&f0, 80, 16000, &VocoderConfig::default())
            .unwrap()
            .samples;
        let y = synthesize_raw(&mcep, &e, 0.42, 80, 400).unwrap();
        let scaled: Vec<f64> = e.iter().map(|v| -2.5 * v).collect();
        let y2 = synthesize_raw(&mcep, &scaled, 0.42, 80, 400).unwrap();
        for (a, b) in y.iter().zip(&y2) {
            assert!((b - (-2.5) * a).abs() < 1e-10);
        }
        let louder: Vec<Vec<f64>> = mcep
            .iter()
            .map(|c| [vec![c[0] + 2f64.ln()], c[1..].to_vec()].concat())
            .collect();
        let y3 = synthesize_raw(&louder, &e, 0.42, 80, 400).unwrap();
        for (a, b) in y.iter().zip(&y3) {
            assert!((b - 2.0 * a).abs() < 1e-10);
        }
        let zero = synthesize_raw(&mcep, &vec![0.0; e.len()], 0.42, 80, 400).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        assert!(matches!(
            synthesize_raw(&mcep, &e[1..], 0.42, 80, 400),
            Err(VocoderError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn normalization_rules() {
        let (a, peak, gain) = normalize(vec![0.0, 3.0, -6.0], 16000).unwrap();
        assert_eq!(peak, 6.0);
        assert!((a.peak() - 0.9).abs() < 1e-15);
        assert!((gain - 0.15).abs() < 1e-15);
        let (quiet, _, gain) = normalize(vec![1e-5, -2e-5], 16000).unwrap();
        assert_eq!(gain, 1.0);
        assert_eq!(quiet.samples, vec![1e-5, -2e-5]);
    }

    #[test]
    fn distortion_ignores_energy() {
        let a = vec![vec![1.0, 0.5, 0.1]];
        let b = vec![vec![-3.0, 0.5, 0.1]];
        assert_eq!(mel_cepstral_distortion(&a, &b), Some(0.0));
        let c = vec![vec![1.0, 0.6, 0.1]];
        let d = mel_cepstral_distortion(&a, &c).unwrap();
        assert!((d - 10.0 / LN_10 * (2.0f64 * 0.01).sqrt()).abs() < 1e-12);
        assert_eq!(mel_cepstral_distortion(&[], &a), None);
    }
}
