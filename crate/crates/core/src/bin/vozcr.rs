use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use vozcr::config::{Overrides, Settings};
use vozcr::corpus::{self, Flag};
use vozcr::eval;
use vozcr::features::compute_deltas;
use vozcr::generate::{self, GenerateError};
use vozcr::hmm::ModelSet;
use vozcr::textproc;
use vozcr::train;
use vozcr::vocoder::{self, VocoderConfig};

#[derive(Parser)]
#[command(name = "vozcr", version, about = "HMM-based speech synthesis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// TOML file with default settings (flags take precedence).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a corpus manifest and its audio files.
    CorpusValidate {
        manifest: PathBuf,
        /// Write the text report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write a per-flag CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Train phoneme models from a manifest.
    Train {
        manifest: PathBuf,
        out_model: PathBuf,
        #[arg(long)]
        states: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        /// Accepted for interface symmetry; training has no random component.
        #[arg(long)]
        seed: Option<u64>,
        /// Log-likelihood trace CSV [default: <out_model>.loglik.csv].
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Viterbi alignment CSV (written only when given).
        #[arg(long)]
        alignment: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Synthesize text with a trained model.
    Synth {
        model: PathBuf,
        out_wav: PathBuf,
        #[arg(long)]
        text: String,
        /// Speaking rate; 2.0 halves every state duration.
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Dump generated parameters in the binary feature format.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Per-frame F0 and gain listing.
        #[arg(long)]
        frame_report: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Analyze a WAV file and resynthesize it without models.
    Copysynth {
        in_wav: PathBuf,
        out_wav: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Tally listening-test responses and write report files.
    EvalReport {
        items: PathBuf,
        responses: PathBuf,
        out_dir: PathBuf,
    },
}

/// Failures that indicate a bug rather than bad input.
#[derive(Debug, thiserror::Error)]
#[error("internal error: {0}")]
struct Internal(String);

fn settings(common: &Common, flags: Overrides) -> Result<Settings> {
    let file = common.config.as_deref().map(Overrides::load).transpose()?;
    Ok(Settings::resolve(file.as_ref(), &flags)?)
}

fn corpus_validate(manifest: &Path, report: Option<&Path>, csv: Option<&Path>) -> Result<bool> {
    let corpus = corpus::load_manifest(manifest)?;
    let result = corpus::validate_corpus(&corpus);
    let text = result.to_text();
    eprint!("{text}");
    if let Some(p) = report {
        fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = csv {
        let f = fs::File::create(p).with_context(|| format!("writing {}", p.display()))?;
        result.write_csv(BufWriter::new(f))?;
    }
    Ok(!result.has_fatal())
}

fn trace_path(model: &Path) -> PathBuf {
    let mut name = model
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".loglik.csv");
    model.with_file_name(name)
}

fn run_train(
    manifest: &Path,
    out_model: &Path,
    s: &Settings,
    trace: Option<&Path>,
    alignment: Option<&Path>,
) -> Result<()> {
    let corpus = corpus::load_manifest(manifest)?;
    let validation = corpus::validate_corpus(&corpus);
    if validation.is_empty_corpus() {
        bail!("empty corpus");
    }
    let mut usable = corpus.clone();
    usable.utterances.retain(|u| {
        let entry = validation.entries.iter().find(|e| e.id == u.id);
        let fatal = entry.is_some_and(|e| e.flags.iter().any(Flag::is_fatal));
        if fatal {
            eprintln!("skipping {}: failed validation", u.id);
        }
        !fatal
    });
    let (utts, skipped) = train::prepare_corpus(&usable, &s.analysis());
    for sk in &skipped {
        eprintln!("skipping {}: {}", sk.id, sk.reason);
    }
    if utts.is_empty() {
        bail!("no usable utterances");
    }
    let flat = train::flat_start(&utts, s.states, s.alpha)?;
    let report = train::embedded_train(&flat, &utts, s.iters)?;
    for sk in &report.skipped {
        eprintln!("skipped {}: {}", sk.id, sk.reason);
    }
    for (i, ll) in report.trace.iter().enumerate() {
        eprintln!("iteration {:>3}  log-likelihood {ll:.3}", i + 1);
    }
    let models = if s.iters > 0 {
        let d = train::estimate_durations(&report.models, &utts)?;
        if let Some(p) = alignment {
            let f = fs::File::create(p).with_context(|| format!("writing {}", p.display()))?;
            train::write_alignment_csv(&d.alignments, BufWriter::new(f))?;
        }
        if !d.flagged.is_empty() {
            let names: Vec<String> = d.flagged.iter().map(|p| p.to_string()).collect();
            eprintln!("no training data for: {}", names.join(" "));
        }
        d.models
    } else {
        if let Some(p) = alignment {
            let d = train::estimate_durations(&flat, &utts)?;
            let f = fs::File::create(p).with_context(|| format!("writing {}", p.display()))?;
            train::write_alignment_csv(&d.alignments, BufWriter::new(f))?;
        }
        report.models
    };
    models.validate().map_err(|e| Internal(e.to_string()))?;
    fs::write(out_model, models.to_toml())
        .with_context(|| format!("writing {}", out_model.display()))?;
    let trace_file = trace
        .map(Path::to_path_buf)
        .unwrap_or_else(|| trace_path(out_model));
    let f = fs::File::create(&trace_file)
        .with_context(|| format!("writing {}", trace_file.display()))?;
    train::write_trace_csv(&report.trace, BufWriter::new(f))?;
    eprintln!("wrote {} and {}", out_model.display(), trace_file.display());
    Ok(())
}

fn run_synth(
    model: &Path,
    out_wav: &Path,
    text: &str,
    s: &Settings,
    features: Option<&Path>,
    frame_report: Option<&Path>,
) -> Result<()> {
    let toml = fs::read_to_string(model).with_context(|| format!("reading {}", model.display()))?;
    let models =
        ModelSet::from_toml(&toml).with_context(|| format!("loading {}", model.display()))?;
    let spec = textproc::phonetize(text)?;
    let generated = match generate::generate_parameters(&spec, &models, s.duration_factor()) {
        Err(e @ GenerateError::NotPositiveDefinite(_)) => {
            return Err(Internal(e.to_string()).into())
        }
        other => other?,
    };
    let config = VocoderConfig {
        fmin: s.fmin,
        fmax: s.fmax,
        seed: s.seed,
        ..Default::default()
    };
    let synth = vocoder::vocode(&generated.statics, &config)?;
    if synth.clamped_frames > 0 {
        eprintln!("warning: F0 clamped on {} frames", synth.clamped_frames);
    }
    corpus::write_wav(&synth.audio, out_wav)?;
    if let Some(p) = features {
        let f = fs::File::create(p).with_context(|| format!("writing {}", p.display()))?;
        compute_deltas(&generated.statics).write_binary(BufWriter::new(f))?;
    }
    if let Some(p) = frame_report {
        fs::write(p, vocoder::frame_report(&generated.statics))?;
    }
    eprintln!(
        "{}: {} frames, {:.3} s, raw peak {:.4e}, gain {:.4e}",
        spec.to_line(),
        generated.plan.total_frames,
        synth.audio.duration_s(),
        synth.raw_peak,
        synth.gain
    );
    Ok(())
}

fn run_copysynth(in_wav: &Path, out_wav: &Path, s: &Settings) -> Result<()> {
    let audio = corpus::read_wav(in_wav)?;
    let synth = vocoder::copy_synthesis(&audio, &s.analysis(), s.seed)?;
    corpus::write_wav(&synth.audio, out_wav)?;
    eprintln!(
        "{:.3} s in, {:.3} s out, gain {:.4e}",
        audio.duration_s(),
        synth.audio.duration_s(),
        synth.gain
    );
    Ok(())
}

fn run_eval(items: &Path, responses: &Path, out_dir: &Path) -> Result<()> {
    let items = eval::load_items(items)?;
    let responses = eval::load_responses(responses)?;
    let reports = eval::run_report(&items, &responses, out_dir)?;
    for r in &reports {
        for s in &r.summaries {
            let und = s
                .undetermined_pct
                .map(|p| format!(", undetermined {p:.1}%"))
                .unwrap_or_default();
            eprintln!(
                "{:<13} {:<10} hits {}/{} = {:.1}%, misses {:.1}%{und}",
                r.criterion, s.voice_type, s.hits, s.responses, s.hit_pct, s.miss_pct
            );
        }
        if let [a, n] = r.summaries.as_slice() {
            eprintln!(
                "{:<13} gap {:.1} points",
                r.criterion,
                n.hit_pct - a.hit_pct
            );
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::CorpusValidate {
            manifest,
            report,
            csv,
        } => {
            if !corpus_validate(&manifest, report.as_deref(), csv.as_deref())? {
                bail!("corpus has fatal problems");
            }
            Ok(())
        }
        Command::Train {
            manifest,
            out_model,
            states,
            iters,
            seed,
            trace,
            alignment,
            common,
        } => {
            let s = settings(
                &common,
                Overrides {
                    states,
                    iters,
                    seed,
                    ..Default::default()
                },
            )?;
            run_train(
                &manifest,
                &out_model,
                &s,
                trace.as_deref(),
                alignment.as_deref(),
            )
        }
        Command::Synth {
            model,
            out_wav,
            text,
            rate,
            seed,
            features,
            frame_report,
            common,
        } => {
            let s = settings(
                &common,
                Overrides {
                    rate,
                    seed,
                    ..Default::default()
                },
            )?;
            run_synth(
                &model,
                &out_wav,
                &text,
                &s,
                features.as_deref(),
                frame_report.as_deref(),
            )
        }
        Command::Copysynth {
            in_wav,
            out_wav,
            seed,
            common,
        } => {
            let s = settings(
                &common,
                Overrides {
                    seed,
                    ..Default::default()
                },
            )?;
            run_copysynth(&in_wav, &out_wav, &s)
        }
        Command::EvalReport {
            items,
            responses,
            out_dir,
        } => run_eval(&items, &responses, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Internal>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
        Err(_) => ExitCode::from(2),
    }
}
