//! Training inputs: audio + orthographic transcription pairs.
//!
//! Audio is mono 16-bit PCM at [`CANONICAL_SAMPLE_RATE`]. The manifest is a
//! UTF-8 TSV with one record per line:
//!
//! ```text
//! # id   audio_path   text   speaker_id   age_group   gender
//! u01    wav/u01.wav  pala   spk1         child       feminine
//! ```
//!
//! Lines starting with `#` and blank lines are skipped. Audio paths are
//! resolved relative to the manifest's directory.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::textproc;

pub const CANONICAL_SAMPLE_RATE: u32 = 16_000;

/// |sample| at or above this counts as clipped.
pub const CLIP_LEVEL: f64 = 0.999;
/// Fraction of clipped samples above which an utterance is flagged.
pub const MAX_CLIP_RATIO: f64 = 0.01;
/// Utterances shorter than this (seconds) are flagged.
pub const MIN_DURATION_S: f64 = 0.1;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: malformed RIFF/WAVE data: {reason}")]
    MalformedWav { path: PathBuf, reason: String },
    #[error("{path}: unsupported encoding ({reason}); only 16-bit integer PCM is accepted")]
    UnsupportedEncoding { path: PathBuf, reason: String },
    #[error("{path}: data chunk is empty")]
    EmptyData { path: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Manifest {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("duplicate utterance id '{0}'")]
    DuplicateId(String),
    #[error("invalid audio buffer: {0}")]
    InvalidBuffer(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, CorpusError> {
        if sample_rate == 0 {
            return Err(CorpusError::InvalidBuffer(
                "sample rate must be positive".into(),
            ));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(CorpusError::InvalidBuffer(format!(
                "sample {i} is not finite"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Fraction of samples whose magnitude reaches [`CLIP_LEVEL`].
    pub fn clipping_ratio(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let clipped = self
            .samples
            .iter()
            .filter(|s| s.abs() >= CLIP_LEVEL)
            .count();
        clipped as f64 / self.samples.len() as f64
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()))
    }
}

fn map_hound(path: &Path, err: hound::Error) -> CorpusError {
    match err {
        hound::Error::IoError(source) => CorpusError::Io {
            path: path.to_path_buf(),
            source,
        },
        hound::Error::FormatError(reason) => CorpusError::MalformedWav {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        },
        hound::Error::Unsupported => CorpusError::UnsupportedEncoding {
            path: path.to_path_buf(),
            reason: "format not understood".into(),
        },
        other => CorpusError::MalformedWav {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    }
}

/// Reads a 16-bit PCM WAV file. Multi-channel audio is mixed down by
/// averaging channels; samples are scaled by 1/32768.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, CorpusError> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(CorpusError::UnsupportedEncoding {
            path: path.to_path_buf(),
            reason: format!(
                "{:?} with {} bits per sample",
                spec.sample_format, spec.bits_per_sample
            ),
        });
    }
    if spec.channels == 0 {
        return Err(CorpusError::MalformedWav {
            path: path.to_path_buf(),
            reason: "zero channels".into(),
        });
    }
    let raw = reader
        .samples::<i16>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| map_hound(path, e))?;
    if raw.is_empty() {
        return Err(CorpusError::EmptyData {
            path: path.to_path_buf(),
        });
    }
    let channels = spec.channels as usize;
    let samples = raw
        .chunks(channels)
        .map(|frame| frame.iter().map(|&s| s as f64 / 32768.0).sum::<f64>() / channels as f64)
        .collect();
    Ok(AudioBuffer {
        samples,
        sample_rate: spec.sample_rate,
    })
}

fn quantize(sample: f64) -> i16 {
    (sample.clamp(-1.0, 1.0) * 32768.0)
        .round()
        .clamp(-32768.0, 32767.0) as i16
}

/// Writes mono 16-bit PCM. Values are clamped to [-1, 1] before quantization.
pub fn write_wav(buffer: &AudioBuffer, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in &buffer.samples {
        writer
            .write_sample(quantize(s))
            .map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgeGroup {
    Child,
    Adult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gender {
    Masculine,
    Feminine,
}

impl FromStr for AgeGroup {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_lowercase().as_str() {
            "child" => Ok(AgeGroup::Child),
            "adult" => Ok(AgeGroup::Adult),
            other => Err(format!(
                "unknown age group '{other}' (expected child|adult)"
            )),
        }
    }
}

impl FromStr for Gender {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_lowercase().as_str() {
            "masculine" => Ok(Gender::Masculine),
            "feminine" => Ok(Gender::Feminine),
            other => Err(format!(
                "unknown gender '{other}' (expected masculine|feminine)"
            )),
        }
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgeGroup::Child => "child",
            AgeGroup::Adult => "adult",
        })
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Masculine => "masculine",
            Gender::Feminine => "feminine",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    /// As written in the manifest; see [`Corpus::audio_path`].
    pub audio: PathBuf,
    pub text: String,
    pub speaker_id: String,
    pub age_group: AgeGroup,
    pub gender: Gender,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub utterances: Vec<Utterance>,
    pub root: PathBuf,
}

impl Corpus {
    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn audio_path(&self, utt: &Utterance) -> PathBuf {
        if utt.audio.is_absolute() {
            utt.audio.clone()
        } else {
            self.root.join(&utt.audio)
        }
    }
}

/// Parses manifest text. `origin` is used in error messages and as the
/// corpus root.
pub fn parse_manifest(text: &str, origin: &Path) -> Result<Corpus, CorpusError> {
    let root = origin.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut seen = HashSet::new();
    let mut utterances = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |reason: String| CorpusError::Manifest {
            path: origin.to_path_buf(),
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() < 6 {
            const NAMES: [&str; 6] = [
                "id",
                "audio_path",
                "text",
                "speaker_id",
                "age_group",
                "gender",
            ];
            return Err(err(format!("missing field '{}'", NAMES[fields.len()])));
        }
        if fields.len() > 6 {
            return Err(err(format!(
                "expected 6 tab-separated fields, found {}",
                fields.len()
            )));
        }
        if let Some(pos) = fields.iter().position(|f| f.is_empty()) {
            const NAMES: [&str; 6] = [
                "id",
                "audio_path",
                "text",
                "speaker_id",
                "age_group",
                "gender",
            ];
            return Err(err(format!("empty field '{}'", NAMES[pos])));
        }
        let age_group = fields[4].parse().map_err(err)?;
        let gender = fields[5].parse().map_err(err)?;
        let id = fields[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId(id));
        }
        utterances.push(Utterance {
            id,
            audio: PathBuf::from(fields[1]),
            text: fields[2].to_string(),
            speaker_id: fields[3].to_string(),
            age_group,
            gender,
        });
    }
    Ok(Corpus { utterances, root })
}

/// Loads a manifest. Referenced audio is not opened here; unreadable files
/// surface in [`validate_corpus`].
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_manifest(&text, path)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Flag {
    Unreadable(String),
    SampleRate(u32),
    Clipping(f64),
    TooShort(f64),
    Alphabet(Vec<char>),
}

impl Flag {
    /// Fatal flags make the utterance unusable for training.
    pub fn is_fatal(&self) -> bool {
        matches!(
            self,
            Flag::Unreadable(_) | Flag::SampleRate(_) | Flag::Alphabet(_)
        )
    }

    fn code(&self) -> &'static str {
        match self {
            Flag::Unreadable(_) => "unreadable",
            Flag::SampleRate(_) => "sample_rate",
            Flag::Clipping(_) => "clipping",
            Flag::TooShort(_) => "too_short",
            Flag::Alphabet(_) => "alphabet",
        }
    }

    fn detail(&self) -> String {
        match self {
            Flag::Unreadable(msg) => msg.clone(),
            Flag::SampleRate(r) => format!("{r} Hz (expected {CANONICAL_SAMPLE_RATE} Hz)"),
            Flag::Clipping(r) => format!("clipping ratio {r:.4}"),
            Flag::TooShort(d) => format!("duration {d:.3} s"),
            Flag::Alphabet(chars) => {
                let list: Vec<String> = chars.iter().map(|c| format!("'{c}'")).collect();
                format!("characters outside alphabet: {}", list.join(" "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceCheck {
    pub id: String,
    pub audio_path: PathBuf,
    pub duration_s: Option<f64>,
    pub clipping_ratio: Option<f64>,
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub entries: Vec<UtteranceCheck>,
}

impl ValidationReport {
    pub fn is_empty_corpus(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn has_fatal(&self) -> bool {
        self.is_empty_corpus()
            || self
                .entries
                .iter()
                .any(|e| e.flags.iter().any(Flag::is_fatal))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.is_empty_corpus() {
            out.push_str("empty corpus\n");
            return out;
        }
        for e in &self.entries {
            let status = if e.flags.iter().any(Flag::is_fatal) {
                "FAIL"
            } else if e.flags.is_empty() {
                "ok"
            } else {
                "warn"
            };
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                e.id,
                status,
                e.audio_path.display()
            ));
            for f in &e.flags {
                out.push_str(&format!("  {}: {}\n", f.code(), f.detail()));
            }
        }
        let fatal = self
            .entries
            .iter()
            .filter(|e| e.flags.iter().any(Flag::is_fatal))
            .count();
        out.push_str(&format!(
            "{} utterances, {} with fatal flags\n",
            self.entries.len(),
            fatal
        ));
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "id",
            "audio_path",
            "duration_s",
            "clipping_ratio",
            "flag",
            "fatal",
            "detail",
        ])?;
        for e in &self.entries {
            let dur = e.duration_s.map(|d| format!("{d:.4}")).unwrap_or_default();
            let clip = e
                .clipping_ratio
                .map(|c| format!("{c:.6}"))
                .unwrap_or_default();
            let path = e.audio_path.display().to_string();
            if e.flags.is_empty() {
                w.write_record([e.id.as_str(), &path, &dur, &clip, "", "false", ""])?;
            }
            for f in &e.flags {
                let fatal = f.is_fatal().to_string();
                w.write_record([
                    e.id.as_str(),
                    &path,
                    &dur,
                    &clip,
                    f.code(),
                    &fatal,
                    &f.detail(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the per-utterance quality checks. Never modifies the corpus.
pub fn validate_corpus(corpus: &Corpus) -> ValidationReport {
    let entries = corpus
        .utterances
        .iter()
        .map(|utt| {
            let audio_path = corpus.audio_path(utt);
            let mut flags = Vec::new();
            let (mut duration_s, mut clipping_ratio) = (None, None);
            match read_wav(&audio_path) {
                Ok(buf) => {
                    if buf.sample_rate != CANONICAL_SAMPLE_RATE {
                        flags.push(Flag::SampleRate(buf.sample_rate));
                    }
                    let clip = buf.clipping_ratio();
                    if clip > MAX_CLIP_RATIO {
                        flags.push(Flag::Clipping(clip));
                    }
                    let dur = buf.duration_s();
                    if dur < MIN_DURATION_S {
                        flags.push(Flag::TooShort(dur));
                    }
                    duration_s = Some(dur);
                    clipping_ratio = Some(clip);
                }
                Err(e) => flags.push(Flag::Unreadable(e.to_string())),
            }
            let outside = textproc::unsupported_chars(&utt.text);
            if !outside.is_empty() {
                flags.push(Flag::Alphabet(outside));
            }
            UtteranceCheck {
                id: utt.id.clone(),
                audio_path,
                duration_s,
                clipping_ratio,
                flags,
            }
        })
        .collect();
    ValidationReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn silence_roundtrip() {
        let dir = tmp();
        let p = dir.path().join("s.wav");
        write_wav(&AudioBuffer::silence(16000, 16000), &p).unwrap();
        let buf = read_wav(&p).unwrap();
        assert_eq!(buf.len(), 16000);
        assert_eq!(buf.sample_rate, 16000);
        assert!(buf.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn second_roundtrip_is_identity() {
        let dir = tmp();
        let (a, b) = (dir.path().join("a.wav"), dir.path().join("b.wav"));
        let samples = (0..1000).map(|i| ((i as f64) * 0.37).sin() * 0.8).collect();
        write_wav(&AudioBuffer::new(samples, 16000).unwrap(), &a).unwrap();
        let first = read_wav(&a).unwrap();
        write_wav(&first, &b).unwrap();
        assert_eq!(read_wav(&b).unwrap(), first);
    }

    #[test]
    fn sine_quantization_error_bound() {
        let dir = tmp();
        let p = dir.path().join("sine.wav");
        let samples: Vec<f64> = (0..16000)
            .map(|n| (2.0 * std::f64::consts::PI * 440.0 * n as f64 / 16000.0).sin())
            .collect();
        write_wav(&AudioBuffer::new(samples.clone(), 16000).unwrap(), &p).unwrap();
        let back = read_wav(&p).unwrap();
        let bound = 2f64.powi(-15) + f64::EPSILON;
        for (x, y) in samples.iter().zip(&back.samples) {
            assert!((x - y).abs() < bound, "{x} vs {y}");
        }
    }

    #[test]
    fn empty_buffer_writes_zero_byte_data_chunk() {
        let dir = tmp();
        let p = dir.path().join("e.wav");
        write_wav(&AudioBuffer::silence(0, 16000), &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[36..40], b"data");
        assert_eq!(u32::from_le_bytes(bytes[40..44].try_into().unwrap()), 0);
        assert!(matches!(read_wav(&p), Err(CorpusError::EmptyData { .. })));
    }

    #[test]
    fn data_chunk_is_two_bytes_per_sample() {
        let dir = tmp();
        let p = dir.path().join("d.wav");
        write_wav(&AudioBuffer::silence(16000, 16000), &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(u32::from_le_bytes(bytes[40..44].try_into().unwrap()), 32000);
        assert_eq!(bytes.len(), 44 + 32000);
    }

    #[test]
    fn clamps_before_quantizing() {
        assert_eq!(quantize(1.5), 32767);
        assert_eq!(quantize(1.0), 32767);
        assert_eq!(quantize(-1.5), -32768);
        assert_eq!(quantize(0.0), 0);
    }

    #[test]
    fn stereo_is_averaged() {
        let dir = tmp();
        let p = dir.path().join("st.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 16000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        for _ in 0..10 {
            w.write_sample(16384i16).unwrap();
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
        let buf = read_wav(&p).unwrap();
        assert_eq!(buf.len(), 10);
        assert!(buf.samples.iter().all(|&s| s == 0.25));
    }

    #[test]
    fn rejects_non_pcm16() {
        let dir = tmp();
        let p = dir.path().join("f.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        w.write_sample(0.5f32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(
            read_wav(&p),
            Err(CorpusError::UnsupportedEncoding { .. })
        ));
    }

    #[test]
    fn rejects_garbage_header() {
        let dir = tmp();
        let p = dir.path().join("g.wav");
        fs::write(&p, b"RIFX\0\0\0\0not a wave file at all").unwrap();
        assert!(matches!(
            read_wav(&p),
            Err(CorpusError::MalformedWav { .. })
        ));
    }

    #[test]
    fn manifest_parses_six_fields() {
        let c = parse_manifest(
            "u01 \t wav/u01.wav \t pala \t spk1 \t child \t feminine\n",
            Path::new("/data/m.tsv"),
        )
        .unwrap();
        assert_eq!(c.len(), 1);
        let u = &c.utterances[0];
        assert_eq!(u.id, "u01");
        assert_eq!(u.audio, PathBuf::from("wav/u01.wav"));
        assert_eq!(u.text, "pala");
        assert_eq!(u.speaker_id, "spk1");
        assert_eq!(u.age_group, AgeGroup::Child);
        assert_eq!(u.gender, Gender::Feminine);
        assert_eq!(c.audio_path(u), PathBuf::from("/data/wav/u01.wav"));
    }

    #[test]
    fn manifest_empty_and_comments() {
        let c = parse_manifest("# header\n\n", Path::new("m.tsv")).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn manifest_duplicate_id() {
        let text = "a\tx.wav\tpala\ts\tchild\tmasculine\na\ty.wav\tsilla\ts\tchild\tmasculine\n";
        match parse_manifest(text, Path::new("m.tsv")) {
            Err(CorpusError::DuplicateId(id)) => assert_eq!(id, "a"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn manifest_missing_field() {
        let err = parse_manifest("a\tx.wav\tpala\ts\tchild\n", Path::new("m.tsv")).unwrap_err();
        assert!(err.to_string().contains("gender"), "{err}");
    }

    #[test]
    fn manifest_preserves_order() {
        let text: String = (0..20)
            .rev()
            .map(|i| format!("u{i}\tu{i}.wav\tpala\ts\tadult\tmasculine\n"))
            .collect();
        let c = parse_manifest(&text, Path::new("m.tsv")).unwrap();
        let ids: Vec<_> = c.utterances.iter().map(|u| u.id.clone()).collect();
        let expected: Vec<_> = (0..20).rev().map(|i| format!("u{i}")).collect();
        assert_eq!(ids, expected);
    }

    fn corpus_with(dir: &Path, samples: Vec<f64>, text: &str) -> Corpus {
        write_wav(
            &AudioBuffer::new(samples, 16000).unwrap(),
            dir.join("a.wav"),
        )
        .unwrap();
        parse_manifest(
            &format!("a\ta.wav\t{text}\ts\tchild\tfeminine\n"),
            &dir.join("m.tsv"),
        )
        .unwrap()
    }

    #[test]
    fn validate_silence_is_clean() {
        let dir = tmp();
        let c = corpus_with(dir.path(), vec![0.0; 16000], "pala");
        let before = c.clone();
        let r = validate_corpus(&c);
        assert_eq!(c, before);
        assert_eq!(r.entries[0].clipping_ratio, Some(0.0));
        assert!(r.entries[0].flags.is_empty());
        assert!(!r.has_fatal());
    }

    #[test]
    fn validate_square_wave_clips() {
        let dir = tmp();
        let sq = (0..16000)
            .map(|n| if (n / 40) % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let r = validate_corpus(&corpus_with(dir.path(), sq, "pala"));
        match r.entries[0].flags.as_slice() {
            [Flag::Clipping(ratio)] => assert!(*ratio > 0.99),
            other => panic!("{other:?}"),
        }
        assert!(!r.has_fatal());
    }

    #[test]
    fn validate_alphabet_flag() {
        let dir = tmp();
        let r = validate_corpus(&corpus_with(dir.path(), vec![0.0; 16000], "k@t"));
        assert_eq!(r.entries[0].flags, vec![Flag::Alphabet(vec!['@'])]);
        assert!(r.has_fatal());
    }

    #[test]
    fn validate_short_and_missing() {
        let dir = tmp();
        let mut c = corpus_with(dir.path(), vec![0.0; 800], "pala");
        c.utterances.push(Utterance {
            id: "b".into(),
            audio: "nope.wav".into(),
            ..c.utterances[0].clone()
        });
        let r = validate_corpus(&c);
        assert!(matches!(r.entries[0].flags.as_slice(), [Flag::TooShort(_)]));
        assert!(matches!(
            r.entries[1].flags.as_slice(),
            [Flag::Unreadable(_)]
        ));
        assert!(r.to_text().contains("nope.wav"));
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().contains("unreadable"));
    }

    #[test]
    fn empty_report_is_fatal() {
        let r = validate_corpus(&Corpus {
            utterances: vec![],
            root: PathBuf::new(),
        });
        assert!(r.has_fatal());
        assert_eq!(r.to_text(), "empty corpus\n");
    }
}
