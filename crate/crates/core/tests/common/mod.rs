//! Synthetic audio and a small seeded training corpus.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use vozcr::corpus::{write_wav, AudioBuffer};
use vozcr::textproc::{phonetize, Phoneme};

pub const RATE: u32 = 16_000;

pub const TOY_SENTENCES: [&str; 10] = [
    "pala",
    "tortuga",
    "pala tortuga",
    "la tortuga toma",
    "toma la pala",
    "pato",
    "una tortuga",
    "la papa",
    "tapa",
    "la gata",
];

pub fn sine(freq: f64, seconds: f64, amplitude: f64) -> AudioBuffer {
    let n = (seconds * RATE as f64) as usize;
    let samples = (0..n)
        .map(|i| amplitude * (2.0 * PI * freq * i as f64 / RATE as f64).sin())
        .collect();
    AudioBuffer::new(samples, RATE).unwrap()
}

/// Two-pole resonator applied in place.
fn resonate(x: &mut [f64], freq: f64, bandwidth: f64) {
    let r = (-PI * bandwidth / RATE as f64).exp();
    let theta = 2.0 * PI * freq / RATE as f64;
    let (a1, a2) = (2.0 * r * theta.cos(), -r * r);
    let gain = 1.0 - r;
    let (mut y1, mut y2) = (0.0, 0.0);
    for v in x.iter_mut() {
        let y = gain * *v + a1 * y1 + a2 * y2;
        y2 = y1;
        y1 = y;
        *v = y;
    }
}

fn pulses(n: usize, f0: f64, phase: &mut f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            *phase += f0 / RATE as f64;
            if *phase >= 1.0 {
                *phase -= 1.0;
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

fn peak_normalize(x: &mut [f64], peak: f64) {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m > 0.0 {
        x.iter_mut().for_each(|v| *v *= peak / m);
    }
}

/// Pulse train at `f0` through two formant resonators.
pub fn two_formant_vowel(f0: f64, f1: f64, f2: f64, seconds: f64) -> AudioBuffer {
    let n = (seconds * RATE as f64) as usize;
    let mut phase = 0.999;
    let mut x = pulses(n, f0, &mut phase);
    resonate(&mut x, f1, 90.0);
    resonate(&mut x, f2, 110.0);
    peak_normalize(&mut x, 0.5);
    AudioBuffer::new(x, RATE).unwrap()
}

struct Render<'a> {
    rng: &'a mut ChaCha8Rng,
    phase: f64,
    f0: f64,
}

impl Render<'_> {
    fn voiced(&mut self, ms: f64, formants: [(f64, f64); 2], level: f64) -> Vec<f64> {
        let n = (ms * 16.0) as usize;
        let mut x = pulses(n, self.f0, &mut self.phase);
        for (f, bw) in formants {
            resonate(&mut x, f, bw);
        }
        x.iter_mut().for_each(|v| *v *= level * 6.0);
        self.f0 *= 0.995;
        x
    }

    fn noise(&mut self, ms: f64, centre: f64, bandwidth: f64, level: f64) -> Vec<f64> {
        let n = (ms * 16.0) as usize;
        let mut x: Vec<f64> = (0..n)
            .map(|_| -> f64 { StandardNormal.sample(&mut *self.rng) })
            .collect();
        resonate(&mut x, centre, bandwidth);
        let rms = (x.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64)
            .sqrt()
            .max(1e-12);
        x.iter_mut().for_each(|v| *v *= level / rms);
        x
    }

    fn quiet(&mut self, ms: f64) -> Vec<f64> {
        let n = (ms * 16.0) as usize;
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut *self.rng);
                2e-4 * z
            })
            .collect()
    }

    fn phone(&mut self, p: Phoneme) -> Vec<f64> {
        let stretch = self.rng.random_range(0.8..1.25);
        let vowel = |f1: f64, f2: f64| [(f1, 80.0), (f2, 120.0)];
        match p {
            Phoneme::A => self.voiced(95.0 * stretch, vowel(750.0, 1300.0), 0.5),
            Phoneme::E => self.voiced(90.0 * stretch, vowel(450.0, 1900.0), 0.45),
            Phoneme::I => self.voiced(85.0 * stretch, vowel(300.0, 2300.0), 0.4),
            Phoneme::O => self.voiced(90.0 * stretch, vowel(480.0, 900.0), 0.45),
            Phoneme::U => self.voiced(85.0 * stretch, vowel(320.0, 800.0), 0.4),
            Phoneme::L => self.voiced(60.0 * stretch, vowel(360.0, 1300.0), 0.2),
            Phoneme::M | Phoneme::N | Phoneme::Ny => {
                self.voiced(60.0 * stretch, vowel(280.0, 1100.0), 0.15)
            }
            Phoneme::Tap => self.voiced(40.0 * stretch, vowel(420.0, 1500.0), 0.15),
            Phoneme::Trill => self.voiced(80.0 * stretch, vowel(420.0, 1500.0), 0.2),
            Phoneme::B | Phoneme::D | Phoneme::G => {
                self.voiced(50.0 * stretch, vowel(250.0, 900.0), 0.08)
            }
            Phoneme::P | Phoneme::T | Phoneme::K => {
                let burst = match p {
                    Phoneme::P => 800.0,
                    Phoneme::T => 3500.0,
                    _ => 2000.0,
                };
                let mut x = self.quiet(40.0 * stretch);
                x.extend(self.noise(18.0, burst, 1500.0, 0.08));
                x
            }
            Phoneme::S | Phoneme::F | Phoneme::X => {
                self.noise(90.0 * stretch, 5000.0, 2500.0, 0.05)
            }
            Phoneme::Sil => self.quiet(150.0 * stretch),
            Phoneme::Sp => self.quiet(35.0 * stretch),
            _ => self.voiced(70.0 * stretch, vowel(500.0, 1500.0), 0.3),
        }
    }
}

/// Renders the phone sequence of `text` with simple synthetic sources.
pub fn render_text(text: &str, rng: &mut ChaCha8Rng) -> AudioBuffer {
    let spec = phonetize(text).unwrap();
    let f0 = rng.random_range(110.0..140.0);
    let mut r = Render {
        rng,
        phase: 0.999,
        f0,
    };
    let mut samples = Vec::new();
    for &p in &spec.phones {
        samples.extend(r.phone(p));
    }
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.8 {
        samples.iter_mut().for_each(|v| *v *= 0.8 / peak);
    }
    AudioBuffer::new(samples, RATE).unwrap()
}

/// Writes ten WAV files and `manifest.tsv` into `dir`; returns the manifest
/// path.
pub fn write_toy_corpus(dir: &Path, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut manifest = String::from("# id\taudio\ttext\tspeaker\tage\tgender\n");
    std::fs::create_dir_all(dir.join("wav")).unwrap();
    for (i, text) in TOY_SENTENCES.iter().enumerate() {
        let id = format!("toy{:02}", i + 1);
        let audio = render_text(text, &mut rng);
        write_wav(&audio, dir.join("wav").join(format!("{id}.wav"))).unwrap();
        let (age, gender) = if i % 2 == 0 {
            ("child", "feminine")
        } else {
            ("child", "masculine")
        };
        writeln!(
            manifest,
            "{id}\twav/{id}.wav\t{text}\tspk{}\t{age}\t{gender}",
            i % 3
        )
        .unwrap();
    }
    let path = dir.join("manifest.tsv");
    std::fs::write(&path, manifest).unwrap();
    path
}
