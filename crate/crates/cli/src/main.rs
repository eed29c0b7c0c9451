use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bnmf_cli::commands::{self, Mode};
use bnmf_cli::config::Settings;
use bnmf_cli::CliError;

#[derive(Parser)]
#[command(
    name = "bnmf",
    version,
    about = "Bayesian NMF speech enhancement: train, enhance, classify, mix, evaluate",
    propagate_version = true
)]
struct Cli {
    /// Flat `key = value` config file (flags override it).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override a single config key, e.g. --set n1=40 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// RNG seed; every command is deterministic for a fixed seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Analysis frame length in samples (power of two).
    #[arg(long, global = true)]
    frame_len: Option<usize>,

    /// Analysis hop in samples (frame_len / 2).
    #[arg(long, global = true)]
    hop: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Supervised,
    Hmm,
    Online,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Supervised => Mode::Supervised,
            ModeArg::Hmm => Mode::Hmm,
            ModeArg::Online => Mode::Online,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a source model from 16 kHz mono WAV files.
    Train {
        /// Training WAVs, concatenated.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Number of basis vectors (speech: 60, per-noise: 100 typical).
        #[arg(long)]
        rank: usize,
        /// Source label stored in the model file.
        #[arg(long)]
        label: String,
        /// Output model path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Enhance a noisy recording.
    Enhance {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        speech_model: PathBuf,
        /// Noise model (repeatable; hmm mode takes several).
        #[arg(long = "noise-model")]
        noise_models: Vec<PathBuf>,
        /// File listing noise model paths, one per line.
        #[arg(long)]
        model_list: Option<PathBuf>,
        /// Noisy input WAV.
        input: PathBuf,
        /// Enhanced output WAV.
        #[arg(long)]
        output: PathBuf,
        /// Also write the smoothed per-frame class posteriors as CSV.
        #[arg(long)]
        class_trace: Option<PathBuf>,
    },
    /// Classify the noise type per frame (HMM forward posteriors).
    Classify {
        #[arg(long)]
        speech_model: PathBuf,
        #[arg(long = "noise-model")]
        noise_models: Vec<PathBuf>,
        #[arg(long)]
        model_list: Option<PathBuf>,
        input: PathBuf,
        /// Output CSV of smoothed class posteriors.
        #[arg(long)]
        out: PathBuf,
    },
    /// Mix speech with noise at a target long-term SNR.
    Mix {
        #[arg(long)]
        speech: PathBuf,
        #[arg(long)]
        noise: PathBuf,
        /// Target SNR in dB (whole-utterance powers).
        #[arg(long)]
        snr: f64,
        #[arg(long)]
        output: PathBuf,
        /// Optionally write the scaled noise for reference-based scoring.
        #[arg(long)]
        noise_output: Option<PathBuf>,
    },
    /// Evaluate an estimate against clean speech and scaled-noise references.
    Eval {
        #[arg(long)]
        estimate: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        noise_reference: PathBuf,
        /// Write the report as CSV.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Add per-window SDR (5-second windows).
        #[arg(long)]
        windowed: bool,
    },
    /// Self-contained online-adaptation demonstration on switching
    /// sinusoidal noise at 0 dB.
    ToyFig3 {
        /// Directory for the basis-trajectory CSV and audio outputs.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print the header of a model file.
    ModelInfo { model: PathBuf },
}

fn load_settings(cli: &Cli) -> Result<Settings, CliError> {
    let mut settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    for assignment in &cli.overrides {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(CliError::Argument(format!(
                "--set expects KEY=VALUE, got {assignment:?}"
            )));
        };
        settings.apply(key.trim(), value.trim())?;
    }
    if let Some(seed) = cli.seed {
        settings.seed = seed;
    }
    if let Some(frame_len) = cli.frame_len {
        settings.frame_len = frame_len;
    }
    if let Some(hop) = cli.hop {
        settings.hop = hop;
    }
    Ok(settings)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let settings = load_settings(&cli)?;
    match cli.command {
        Command::Train {
            inputs,
            rank,
            label,
            out,
        } => {
            let summary = commands::cmd_train(&inputs, rank, &label, &out, &settings)?;
            println!(
                "trained {:?}: {} bins × {} bases from {} frames in {:.2} s (activation shape {:.3})",
                summary.model_path,
                summary.bins,
                summary.rank,
                summary.frames,
                summary.runtime_secs,
                summary.activation_shape,
            );
        }
        Command::Enhance {
            mode,
            speech_model,
            noise_models,
            model_list,
            input,
            output,
            class_trace,
        } => {
            let noise_paths = commands::resolve_noise_models(&noise_models, model_list.as_deref())?;
            let summary = commands::cmd_enhance(
                mode.into(),
                &speech_model,
                &noise_paths,
                &input,
                &output,
                class_trace.as_deref(),
                &settings,
            )?;
            commands::print_enhance_summary(&summary);
        }
        Command::Classify {
            speech_model,
            noise_models,
            model_list,
            input,
            out,
        } => {
            let noise_paths = commands::resolve_noise_models(&noise_models, model_list.as_deref())?;
            let summary =
                commands::cmd_classify(&speech_model, &noise_paths, &input, &out, &settings)?;
            println!(
                "classified {} frames over {} classes in {:.2} s",
                summary.frames,
                summary.class_labels.len(),
                summary.runtime_secs
            );
        }
        Command::Mix {
            speech,
            noise,
            snr,
            output,
            noise_output,
        } => {
            let summary =
                commands::cmd_mix(&speech, &noise, snr, &output, noise_output.as_deref())?;
            println!(
                "mixed {} samples at {:.2} dB (requested {snr:.2} dB)",
                summary.samples, summary.measured_snr_db
            );
            if summary.clipped_samples > 0 {
                eprintln!(
                    "warning: {} mixture samples clipped to full scale",
                    summary.clipped_samples
                );
            }
        }
        Command::Eval {
            estimate,
            reference,
            noise_reference,
            report,
            windowed,
        } => {
            let summary = commands::cmd_eval(
                &estimate,
                &reference,
                &noise_reference,
                report.as_deref(),
                windowed,
                &settings,
            )?;
            let r = &summary.report;
            println!("metric      dB");
            println!("SDR     {:>8.2}", r.sdr_db);
            println!("SIR     {:>8.2}", r.sir_db);
            println!("SAR     {:>8.2}", r.sar_db);
            println!("SegSNR  {:>8.2}", r.segsnr_db);
            if let Some(windows) = &r.per_window {
                for (w, v) in windows {
                    println!("SDR[w{w}] {v:>7.2}");
                }
            }
        }
        Command::ToyFig3 { out_dir } => {
            let report = commands::cmd_toy_fig3(out_dir.as_deref(), &settings)?;
            println!(
                "SDR: noisy {:.2} dB -> enhanced {:.2} dB (improvement {:.2} dB)",
                report.sdr_noisy_db, report.sdr_enhanced_db, report.sdr_improvement_db
            );
            match report.adaptation_latency_frames {
                Some(frames) => println!(
                    "adaptation latency: {frames} frames after the switch at frame {}",
                    report.switch_frame
                ),
                None => println!("adaptation latency: not reached"),
            }
            match report.error_halving_latency_frames {
                Some(frames) => {
                    println!("new-noise reconstruction error halved after {frames} frames")
                }
                None => println!("new-noise reconstruction error never halved"),
            }
            println!("{} frames in {:.1} s", report.frames, report.runtime_secs);
            if let Some(path) = &report.trajectory_csv {
                println!("basis trajectory: {}", path.display());
            }
        }
        Command::ModelInfo { model } => {
            let info = commands::cmd_model_info(&model)?;
            println!("label:            {}", info.label);
            println!("bins (K):         {}", info.bins);
            println!("basis vectors:    {}", info.rank);
            println!("activation shape: {:.4}", info.activation_shape);
            println!("sample rate:      {} Hz", info.sample_rate);
            println!("frame length:     {}", info.frame_len);
            println!("target max:       {}", info.target_max);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
