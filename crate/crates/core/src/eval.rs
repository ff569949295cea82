//! Listening-test scoring: per-audio tallies, per-voice-type summaries and
//! report files, plus the published result tables as reference data.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::corpus::{AgeGroup, Gender};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("unknown audio_id '{0}'")]
    UnknownAudio(String),
    #[error("audio '{audio_id}': answer '{answer}' is not valid for criterion {criterion}")]
    AnswerMismatch {
        audio_id: String,
        criterion: Criterion,
        answer: String,
    },
    #[error("audio '{audio_id}' has no truth for criterion {criterion}")]
    MissingTruth {
        audio_id: String,
        criterion: Criterion,
    },
    #[error("no responses")]
    NoResponses,
    #[error("duplicate audio_id '{0}' in items")]
    DuplicateItem(String),
    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VoiceType {
    Artificial,
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    Age,
    Gender,
    Transcription,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Age, Criterion::Gender, Criterion::Transcription];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Age => "age",
            Criterion::Gender => "gender",
            Criterion::Transcription => "transcription",
        }
    }

    /// Whether "undetermined" is a valid answer.
    pub fn has_undetermined(self) -> bool {
        self != Criterion::Transcription
    }
}

impl VoiceType {
    pub fn as_str(self) -> &'static str {
        match self {
            VoiceType::Artificial => "artificial",
            VoiceType::Natural => "natural",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl fmt::Display for VoiceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_lowercase().as_str() {
            "age" => Ok(Criterion::Age),
            "gender" => Ok(Criterion::Gender),
            "transcription" => Ok(Criterion::Transcription),
            other => Err(format!("unknown criterion '{other}'")),
        }
    }
}

impl FromStr for VoiceType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_lowercase().as_str() {
            "artificial" => Ok(VoiceType::Artificial),
            "natural" => Ok(VoiceType::Natural),
            other => Err(format!("unknown voice type '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalItem {
    pub audio_id: String,
    pub voice_type: VoiceType,
    pub truth_age: Option<AgeGroup>,
    pub truth_gender: Option<Gender>,
    pub truth_word: Option<String>,
}

/// A closed-set answer for the age and gender criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Child,
    Adult,
    Masculine,
    Feminine,
    Undetermined,
}

impl FromStr for Label {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_lowercase().as_str() {
            "child" => Ok(Label::Child),
            "adult" => Ok(Label::Adult),
            "masculine" => Ok(Label::Masculine),
            "feminine" => Ok(Label::Feminine),
            "undetermined" => Ok(Label::Undetermined),
            other => Err(format!("unknown answer '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    Label(Label),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListeningResponse {
    pub rater_id: String,
    pub audio_id: String,
    pub criterion: Criterion,
    pub answer: Answer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TallyRow {
    pub audio_id: String,
    pub hits: u32,
    pub misses: u32,
    /// `None` for transcription.
    pub undetermined: Option<u32>,
    pub voice_type: VoiceType,
}

impl TallyRow {
    pub fn total(&self) -> u32 {
        self.hits + self.misses + self.undetermined.unwrap_or(0)
    }
}

/// Lowercase, accents folded (ñ kept), punctuation removed, whitespace
/// collapsed.
pub fn normalize_word(s: &str) -> String {
    let folded: String = s
        .to_lowercase()
        .chars()
        .map(|c| match c {
            'á' | 'à' | 'ä' => 'a',
            'é' | 'è' | 'ë' => 'e',
            'í' | 'ì' | 'ï' => 'i',
            'ó' | 'ò' | 'ö' => 'o',
            'ú' | 'ù' | 'ü' => 'u',
            c if c.is_alphanumeric() || c.is_whitespace() => c,
            _ => ' ',
        })
        .collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Exact match after [`normalize_word`]; an empty answer is never correct.
pub fn score_transcription(truth_word: &str, answer: &str) -> bool {
    let a = normalize_word(answer);
    !a.is_empty() && a == normalize_word(truth_word)
}

fn truth_label(item: &EvalItem, criterion: Criterion) -> Result<Label, EvalError> {
    let missing = || EvalError::MissingTruth {
        audio_id: item.audio_id.clone(),
        criterion,
    };
    match criterion {
        Criterion::Age => match item.truth_age.ok_or_else(missing)? {
            AgeGroup::Child => Ok(Label::Child),
            AgeGroup::Adult => Ok(Label::Adult),
        },
        Criterion::Gender => match item.truth_gender.ok_or_else(missing)? {
            Gender::Masculine => Ok(Label::Masculine),
            Gender::Feminine => Ok(Label::Feminine),
        },
        Criterion::Transcription => Err(missing()),
    }
}

fn label_fits(label: Label, criterion: Criterion) -> bool {
    match criterion {
        Criterion::Age => matches!(label, Label::Child | Label::Adult | Label::Undetermined),
        Criterion::Gender => matches!(
            label,
            Label::Masculine | Label::Feminine | Label::Undetermined
        ),
        Criterion::Transcription => false,
    }
}

/// One row per item, in item order, counting the responses for `criterion`.
/// Items that the criterion does not apply to (no truth) are left out when
/// nobody answered them.
pub fn tally(
    items: &[EvalItem],
    responses: &[ListeningResponse],
    criterion: Criterion,
) -> Result<Vec<TallyRow>, EvalError> {
    let index: HashMap<&str, usize> = items
        .iter()
        .enumerate()
        .map(|(i, it)| (it.audio_id.as_str(), i))
        .collect();
    let mut counts = vec![(0u32, 0u32, 0u32); items.len()];
    let mut answered = vec![false; items.len()];
    for r in responses.iter().filter(|r| r.criterion == criterion) {
        let &i = index
            .get(r.audio_id.as_str())
            .ok_or_else(|| EvalError::UnknownAudio(r.audio_id.clone()))?;
        let item = &items[i];
        answered[i] = true;
        let mismatch = |answer: String| EvalError::AnswerMismatch {
            audio_id: r.audio_id.clone(),
            criterion,
            answer,
        };
        let c = &mut counts[i];
        match (&r.answer, criterion) {
            (Answer::Text(text), Criterion::Transcription) => {
                let truth = item
                    .truth_word
                    .as_deref()
                    .ok_or_else(|| EvalError::MissingTruth {
                        audio_id: item.audio_id.clone(),
                        criterion,
                    })?;
                if score_transcription(truth, text) {
                    c.0 += 1;
                } else {
                    c.1 += 1;
                }
            }
            (Answer::Label(label), _) if label_fits(*label, criterion) => {
                let truth = truth_label(item, criterion)?;
                if *label == Label::Undetermined {
                    c.2 += 1;
                } else if *label == truth {
                    c.0 += 1;
                } else {
                    c.1 += 1;
                }
            }
            (Answer::Label(label), _) => return Err(mismatch(format!("{label:?}").to_lowercase())),
            (Answer::Text(text), _) => return Err(mismatch(text.clone())),
        }
    }
    let applies = |it: &EvalItem| match criterion {
        Criterion::Age => it.truth_age.is_some(),
        Criterion::Gender => it.truth_gender.is_some(),
        Criterion::Transcription => it.truth_word.is_some(),
    };
    Ok(items
        .iter()
        .zip(counts)
        .zip(answered)
        .filter(|((it, _), seen)| *seen || applies(it))
        .map(|((it, (h, m, u)), _)| TallyRow {
            audio_id: it.audio_id.clone(),
            hits: h,
            misses: m,
            undetermined: criterion.has_undetermined().then_some(u),
            voice_type: it.voice_type,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeSummary {
    pub voice_type: VoiceType,
    pub responses: u32,
    pub hits: u32,
    pub misses: u32,
    pub undetermined: Option<u32>,
    pub hit_pct: f64,
    pub miss_pct: f64,
    pub undetermined_pct: Option<f64>,
}

/// Pooled counts and percentages per voice type (artificial first). Types
/// without responses are omitted.
pub fn summarize_by_type(rows: &[TallyRow]) -> Vec<TypeSummary> {
    let with_undetermined = rows.iter().any(|r| r.undetermined.is_some());
    [VoiceType::Artificial, VoiceType::Natural]
        .into_iter()
        .filter_map(|vt| {
            let sel: Vec<&TallyRow> = rows.iter().filter(|r| r.voice_type == vt).collect();
            let hits: u32 = sel.iter().map(|r| r.hits).sum();
            let misses: u32 = sel.iter().map(|r| r.misses).sum();
            let und: u32 = sel.iter().map(|r| r.undetermined.unwrap_or(0)).sum();
            let total = hits + misses + und;
            if total == 0 {
                return None;
            }
            let pct = |n: u32| 100.0 * n as f64 / total as f64;
            Some(TypeSummary {
                voice_type: vt,
                responses: total,
                hits,
                misses,
                undetermined: with_undetermined.then_some(und),
                hit_pct: pct(hits),
                miss_pct: pct(misses),
                undetermined_pct: with_undetermined.then(|| pct(und)),
            })
        })
        .collect()
}

/// Files written by [`export_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub tally: PathBuf,
    pub summary: PathBuf,
    pub plot: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> EvalError + '_ {
    move |e| EvalError::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

/// Writes `tally_<criterion>.csv`, `summary_<criterion>.csv` and
/// `plot_<criterion>.txt` (one `voice_type category percentage` line per
/// bar) into `dir`. Transcription files have no undetermined column.
pub fn export_report(
    dir: &Path,
    criterion: Criterion,
    rows: &[TallyRow],
    summaries: &[TypeSummary],
) -> Result<ReportFiles, EvalError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let und = criterion.has_undetermined();
    let files = ReportFiles {
        tally: dir.join(format!("tally_{criterion}.csv")),
        summary: dir.join(format!("summary_{criterion}.csv")),
        plot: dir.join(format!("plot_{criterion}.txt")),
    };

    let mut w = csv::Writer::from_path(&files.tally).map_err(csv_err(&files.tally))?;
    let mut header = vec!["audio_id", "hits", "misses"];
    if und {
        header.push("undetermined");
    }
    header.push("voice_type");
    w.write_record(&header).map_err(csv_err(&files.tally))?;
    for r in rows {
        let mut rec = vec![r.audio_id.clone(), r.hits.to_string(), r.misses.to_string()];
        if und {
            rec.push(r.undetermined.unwrap_or(0).to_string());
        }
        rec.push(r.voice_type.to_string());
        w.write_record(&rec).map_err(csv_err(&files.tally))?;
    }
    w.flush().map_err(io_err(&files.tally))?;

    let mut w = csv::Writer::from_path(&files.summary).map_err(csv_err(&files.summary))?;
    let mut header = vec!["voice_type", "responses", "hits", "misses"];
    if und {
        header.push("undetermined");
    }
    header.extend(["hit_pct", "miss_pct"]);
    if und {
        header.push("undetermined_pct");
    }
    w.write_record(&header).map_err(csv_err(&files.summary))?;
    let mut plot = String::from("# voice_type category percentage\n");
    for s in summaries {
        let mut rec = vec![
            s.voice_type.to_string(),
            s.responses.to_string(),
            s.hits.to_string(),
            s.misses.to_string(),
        ];
        if und {
            rec.push(s.undetermined.unwrap_or(0).to_string());
        }
        rec.extend([format!("{:.4}", s.hit_pct), format!("{:.4}", s.miss_pct)]);
        plot.push_str(&format!(
            "{} hits {:.2}\n{} misses {:.2}\n",
            s.voice_type, s.hit_pct, s.voice_type, s.miss_pct
        ));
        if und {
            let p = s.undetermined_pct.unwrap_or(0.0);
            rec.push(format!("{p:.4}"));
            plot.push_str(&format!("{} undetermined {p:.2}\n", s.voice_type));
        }
        w.write_record(&rec).map_err(csv_err(&files.summary))?;
    }
    w.flush().map_err(io_err(&files.summary))?;
    fs::write(&files.plot, plot).map_err(io_err(&files.plot))?;
    Ok(files)
}

#[derive(Deserialize)]
struct ItemRecord {
    audio_id: String,
    voice_type: String,
    truth_age: Option<String>,
    truth_gender: Option<String>,
    truth_word: Option<String>,
}

#[derive(Deserialize)]
struct ResponseRecord {
    rater_id: String,
    audio_id: String,
    criterion: String,
    answer: Option<String>,
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|v| v.trim().to_string()).filter(|v| !v.is_empty())
}

/// Items CSV: `audio_id,voice_type,truth_age,truth_gender,truth_word`; the
/// truth columns may be empty when a criterion does not apply.
pub fn read_items<R: Read>(input: R, path: &Path) -> Result<Vec<EvalItem>, EvalError> {
    let bad = |reason: String| EvalError::Parse {
        path: path.to_path_buf(),
        reason,
    };
    let mut items: Vec<EvalItem> = Vec::new();
    for (i, rec) in csv::Reader::from_reader(input)
        .deserialize::<ItemRecord>()
        .enumerate()
    {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let line = |e: String| bad(format!("row {}: {e}", i + 1));
        let item = EvalItem {
            audio_id: rec.audio_id.trim().to_string(),
            voice_type: rec.voice_type.parse().map_err(line)?,
            truth_age: non_empty(rec.truth_age)
                .map(|s| s.parse())
                .transpose()
                .map_err(line)?,
            truth_gender: non_empty(rec.truth_gender)
                .map(|s| s.parse())
                .transpose()
                .map_err(line)?,
            truth_word: non_empty(rec.truth_word),
        };
        if items.iter().any(|it| it.audio_id == item.audio_id) {
            return Err(EvalError::DuplicateItem(item.audio_id));
        }
        items.push(item);
    }
    Ok(items)
}

/// Responses CSV: `rater_id,audio_id,criterion,answer`. Transcription
/// answers are free text (possibly empty); the others are one of child,
/// adult, masculine, feminine, undetermined.
pub fn read_responses<R: Read>(input: R, path: &Path) -> Result<Vec<ListeningResponse>, EvalError> {
    let bad = |reason: String| EvalError::Parse {
        path: path.to_path_buf(),
        reason,
    };
    let mut out = Vec::new();
    for (i, rec) in csv::Reader::from_reader(input)
        .deserialize::<ResponseRecord>()
        .enumerate()
    {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let line = |e: String| bad(format!("row {}: {e}", i + 1));
        let criterion: Criterion = rec.criterion.parse().map_err(line)?;
        let raw = rec.answer.unwrap_or_default();
        let answer = match criterion {
            Criterion::Transcription => Answer::Text(raw),
            _ => Answer::Label(raw.parse().map_err(line)?),
        };
        out.push(ListeningResponse {
            rater_id: rec.rater_id,
            audio_id: rec.audio_id.trim().to_string(),
            criterion,
            answer,
        });
    }
    Ok(out)
}

pub fn load_items(path: &Path) -> Result<Vec<EvalItem>, EvalError> {
    read_items(fs::File::open(path).map_err(io_err(path))?, path)
}

pub fn load_responses(path: &Path) -> Result<Vec<ListeningResponse>, EvalError> {
    read_responses(fs::File::open(path).map_err(io_err(path))?, path)
}

/// Tallies, summaries and files for one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub criterion: Criterion,
    pub rows: Vec<TallyRow>,
    pub summaries: Vec<TypeSummary>,
    pub files: ReportFiles,
}

/// Runs every criterion that has responses and exports its report.
pub fn run_report(
    items: &[EvalItem],
    responses: &[ListeningResponse],
    out_dir: &Path,
) -> Result<Vec<CriterionReport>, EvalError> {
    if responses.is_empty() {
        return Err(EvalError::NoResponses);
    }
    let mut reports = Vec::new();
    for criterion in Criterion::ALL {
        if !responses.iter().any(|r| r.criterion == criterion) {
            continue;
        }
        let rows = tally(items, responses, criterion)?;
        let summaries = summarize_by_type(&rows);
        let files = export_report(out_dir, criterion, &rows, &summaries)?;
        reports.push(CriterionReport {
            criterion,
            rows,
            summaries,
            files,
        });
    }
    Ok(reports)
}

/// The published listening-test tables.
pub mod published {
    use super::*;

    /// Truth, hits, misses, undetermined (absent for transcription), voice.
    pub type Row = (&'static str, u32, u32, Option<u32>, VoiceType);

    use VoiceType::{Artificial as A, Natural as N};

    pub const AGE: [Row; 20] = [
        ("child", 5, 8, Some(16), A),
        ("child", 29, 0, Some(0), N),
        ("child", 29, 0, Some(0), N),
        ("child", 17, 3, Some(9), A),
        ("child", 10, 6, Some(13), A),
        ("adult", 29, 0, Some(0), N),
        ("child", 24, 4, Some(1), N),
        ("child", 17, 6, Some(6), A),
        ("adult", 18, 7, Some(4), N),
        ("child", 29, 0, Some(0), N),
        ("child", 10, 5, Some(14), A),
        ("adult", 25, 4, Some(0), N),
        ("child", 14, 1, Some(14), A),
        ("child", 14, 12, Some(3), N),
        ("child", 16, 1, Some(12), A),
        ("adult", 28, 0, Some(1), N),
        ("child", 29, 0, Some(0), N),
        ("adult", 28, 0, Some(1), N),
        ("adult", 29, 0, Some(0), N),
        ("adult", 24, 4, Some(1), N),
    ];

    pub const GENDER: [Row; 20] = [
        ("masculine", 2, 17, Some(10), A),
        ("feminine", 11, 11, Some(7), N),
        ("masculine", 27, 0, Some(2), N),
        ("feminine", 6, 6, Some(17), A),
        ("masculine", 2, 6, Some(21), A),
        ("masculine", 29, 0, Some(0), N),
        ("feminine", 11, 15, Some(3), N),
        ("feminine", 8, 6, Some(15), A),
        ("feminine", 26, 2, Some(1), N),
        ("feminine", 23, 1, Some(5), N),
        ("masculine", 3, 12, Some(14), A),
        ("feminine", 27, 2, Some(0), N),
        ("feminine", 8, 0, Some(21), A),
        ("feminine", 14, 11, Some(4), N),
        ("feminine", 4, 3, Some(22), A),
        ("masculine", 29, 0, Some(0), N),
        ("masculine", 23, 4, Some(2), N),
        ("masculine", 29, 0, Some(0), N),
        ("masculine", 29, 0, Some(0), N),
        ("feminine", 28, 0, Some(1), N),
    ];

    pub const TRANSCRIPTION: [Row; 20] = [
        ("Clavo", 14, 6, None, A),
        ("Pala", 20, 0, None, N),
        ("Tenis", 10, 10, None, A),
        ("Cuello", 20, 0, None, N),
        ("Tenis", 9, 11, None, A),
        ("Escoba", 20, 0, None, A),
        ("Basura", 20, 0, None, A),
        ("Dedos", 20, 0, None, N),
        ("Nariz", 12, 8, None, A),
        ("Diente", 18, 2, None, N),
        ("Globo", 12, 8, None, A),
        ("Silla", 10, 10, None, A),
        ("Pala", 20, 0, None, N),
        ("Gallina", 20, 0, None, N),
        ("Tortuga", 20, 0, None, A),
        ("Cisne", 20, 0, None, N),
        ("Pantalón", 9, 11, None, A),
        ("Nariz", 18, 2, None, N),
        ("Puerta", 20, 0, None, A),
        ("Oveja", 19, 1, None, N),
    ];

    pub fn rows(criterion: Criterion) -> &'static [Row; 20] {
        match criterion {
            Criterion::Age => &AGE,
            Criterion::Gender => &GENDER,
            Criterion::Transcription => &TRANSCRIPTION,
        }
    }

    /// Phrase audios (age and gender) are `f01`..`f20`, word audios
    /// `w01`..`w20`, both in listening order.
    pub fn audio_id(criterion: Criterion, index: usize) -> String {
        let prefix = if criterion == Criterion::Transcription {
            'w'
        } else {
            'f'
        };
        format!("{prefix}{:02}", index + 1)
    }

    pub fn items() -> Vec<EvalItem> {
        let phrases = (0..20).map(|i| EvalItem {
            audio_id: audio_id(Criterion::Age, i),
            voice_type: AGE[i].4,
            truth_age: Some(AGE[i].0.parse().unwrap()),
            truth_gender: Some(GENDER[i].0.parse().unwrap()),
            truth_word: None,
        });
        let words = (0..20).map(|i| EvalItem {
            audio_id: audio_id(Criterion::Transcription, i),
            voice_type: TRANSCRIPTION[i].4,
            truth_age: None,
            truth_gender: None,
            truth_word: Some(TRANSCRIPTION[i].0.to_string()),
        });
        phrases.chain(words).collect()
    }

    fn opposite(truth: &str) -> &'static str {
        match truth {
            "child" => "adult",
            "adult" => "child",
            "masculine" => "feminine",
            _ => "masculine",
        }
    }

    /// Per-rater answers consistent with the tables: the first raters
    /// answer correctly, then wrongly, then "undetermined". Wrong
    /// transcriptions alternate between a reversed word and no answer.
    pub fn responses() -> Vec<ListeningResponse> {
        let mut out = Vec::new();
        for criterion in Criterion::ALL {
            for (i, &(truth, hits, misses, und, _)) in rows(criterion).iter().enumerate() {
                let total = hits + misses + und.unwrap_or(0);
                for r in 0..total {
                    let answer = if r < hits {
                        match criterion {
                            Criterion::Transcription => Answer::Text(truth.to_lowercase()),
                            _ => Answer::Label(truth.parse().unwrap()),
                        }
                    } else if r < hits + misses {
                        match criterion {
                            Criterion::Transcription if (r - hits) % 2 == 0 => {
                                Answer::Text(truth.to_lowercase().chars().rev().collect())
                            }
                            Criterion::Transcription => Answer::Text(String::new()),
                            _ => Answer::Label(opposite(truth).parse().unwrap()),
                        }
                    } else {
                        Answer::Label(Label::Undetermined)
                    };
                    out.push(ListeningResponse {
                        rater_id: format!("r{:02}", r + 1),
                        audio_id: audio_id(criterion, i),
                        criterion,
                        answer,
                    });
                }
            }
        }
        out
    }

    pub fn items_csv() -> String {
        let mut s = String::from("audio_id,voice_type,truth_age,truth_gender,truth_word\n");
        for it in items() {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                it.audio_id,
                it.voice_type,
                it.truth_age.map(|a| a.to_string()).unwrap_or_default(),
                it.truth_gender.map(|g| g.to_string()).unwrap_or_default(),
                it.truth_word.unwrap_or_default()
            ));
        }
        s
    }

    pub fn responses_csv() -> String {
        let mut s = String::from("rater_id,audio_id,criterion,answer\n");
        for r in responses() {
            let answer = match r.answer {
                Answer::Text(t) => t,
                Answer::Label(l) => format!("{l:?}").to_lowercase(),
            };
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.rater_id, r.audio_id, r.criterion, answer
            ));
        }
        s
    }
}
