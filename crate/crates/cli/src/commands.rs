//! Implementations behind the `bnmf` subcommands. Each returns a summary
//! struct so the acceptance suite can drive them as library calls.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bnmf_core::bnmf::train_model;
use bnmf_core::hmm::{enhance_file, HmmDenoiser};
use bnmf_core::mat::Mat;
use bnmf_core::metrics;
use bnmf_core::online::estimate_long_term_snr;
use bnmf_core::signal::{self, AudioSignal, MagnitudeSpectrogram};
use bnmf_core::Mat as CoreMat;

use crate::config::Settings;
use crate::model_file::{read_model, write_model};
use crate::synth;
use crate::wav::{read_wav, write_wav};
use crate::CliError;

/// Enhancement/classification operating mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One pre-trained noise model.
    Supervised,
    /// M pre-trained noise models with forward-recursion classification.
    Hmm,
    /// No noise model: the noise basis is learned online.
    Online,
}

pub struct TrainSummary {
    pub model_path: PathBuf,
    pub bins: usize,
    pub rank: usize,
    pub frames: usize,
    pub activation_shape: f64,
    pub runtime_secs: f64,
}

/// Train a source model on one or more WAV files: the spectrograms are
/// concatenated and quantized with a single shared gain.
pub fn cmd_train(
    inputs: &[PathBuf],
    rank: usize,
    label: &str,
    out_model: &Path,
    settings: &Settings,
) -> Result<TrainSummary, CliError> {
    if rank == 0 {
        return Err(CliError::Argument("--rank must be at least 1".into()));
    }
    if inputs.is_empty() {
        return Err(CliError::Argument(
            "at least one input WAV is required".into(),
        ));
    }
    let started = Instant::now();

    let mut specs = Vec::new();
    for path in inputs {
        let signal = read_wav(path)?;
        specs.push(signal::stft(&signal, settings.frame_len, settings.hop)?);
    }
    let bins = specs[0].bins;
    let total_frames: usize = specs.iter().map(|s| s.frames).sum();

    // Shared quantization gain across all training material.
    let mut peak = 0.0_f64;
    for spec in &specs {
        for k in 0..spec.bins {
            for t in 0..spec.frames {
                peak = peak.max(spec.at(k, t).norm());
            }
        }
    }
    let gain = if peak > 0.0 {
        settings.target_max / peak
    } else {
        1.0
    };
    let mut magnitudes = Mat::zeros(bins, total_frames);
    let mut offset = 0;
    for spec in &specs {
        for t in 0..spec.frames {
            for k in 0..bins {
                magnitudes[(k, offset + t)] = (spec.at(k, t).norm() * gain).round();
            }
        }
        offset += spec.frames;
    }
    let spectrogram = MagnitudeSpectrogram {
        phase: Mat::zeros(bins, total_frames),
        magnitudes,
        gain,
        frame_len: settings.frame_len,
        hop: settings.hop,
        sample_rate: signal::PIPELINE_SAMPLE_RATE,
    };

    if rank > bins.min(total_frames) {
        eprintln!(
            "warning: rank {rank} exceeds min(bins, frames) = {}; the factorization is overcomplete",
            bins.min(total_frames)
        );
    }
    let model = train_model(&spectrogram, rank, label, &settings.train_options())?;
    write_model(out_model, &model)?;

    Ok(TrainSummary {
        model_path: out_model.to_path_buf(),
        bins,
        rank,
        frames: total_frames,
        activation_shape: model.activation_shape,
        runtime_secs: started.elapsed().as_secs_f64(),
    })
}

/// Resolve the noise model set: explicit paths plus an optional list file
/// (one path per line, `#` comments).
pub fn resolve_noise_models(
    noise_models: &[PathBuf],
    model_list: Option<&Path>,
) -> Result<Vec<PathBuf>, CliError> {
    let mut paths: Vec<PathBuf> = noise_models.to_vec();
    if let Some(list) = model_list {
        let text = fs::read_to_string(list)
            .map_err(|e| CliError::Argument(format!("{}: {e}", list.display())))?;
        let base = list.parent().unwrap_or(Path::new(""));
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let p = PathBuf::from(line);
            paths.push(if p.is_absolute() { p } else { base.join(p) });
        }
    }
    Ok(paths)
}

pub struct EnhanceSummary {
    pub frames: usize,
    pub runtime_secs: f64,
    pub long_term_snr_db: Option<f64>,
    pub clipped_samples: usize,
    pub diverged_updates: usize,
    pub class_labels: Vec<String>,
}

fn build_denoiser(
    mode: Mode,
    speech_model: &Path,
    noise_model_paths: &[PathBuf],
    settings: &Settings,
) -> Result<HmmDenoiser, CliError> {
    let speech = read_model(speech_model)?;
    match mode {
        Mode::Supervised => {
            if noise_model_paths.len() != 1 {
                return Err(CliError::Argument(
                    "supervised mode takes exactly one noise model".into(),
                ));
            }
            let noise = read_model(&noise_model_paths[0])?;
            Ok(HmmDenoiser::new(
                speech,
                vec![noise],
                settings.transition_diag,
                settings.classifier_smoothing,
            )?)
        }
        Mode::Hmm => {
            if noise_model_paths.is_empty() {
                return Err(CliError::Argument(
                    "hmm mode needs at least one noise model (use --noise-model or --model-list)"
                        .into(),
                ));
            }
            let noises = noise_model_paths
                .iter()
                .map(|p| read_model(p))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(HmmDenoiser::new(
                speech,
                noises,
                settings.transition_diag,
                settings.classifier_smoothing,
            )?)
        }
        Mode::Online => {
            if !noise_model_paths.is_empty() {
                return Err(CliError::Argument(
                    "online mode learns its noise model; do not pass noise models".into(),
                ));
            }
            Ok(HmmDenoiser::for_online_learning(
                speech,
                &settings.online_config(),
                settings.online_phi_noise,
            )?)
        }
    }
}

fn write_class_trace(path: &Path, labels: &[String], trace: &CoreMat) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str("frame");
    for label in labels {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for t in 0..trace.cols() {
        out.push_str(&t.to_string());
        for x in 0..trace.rows() {
            out.push_str(&format!(",{:.6}", trace[(x, t)]));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Enhance `input` into `output`; optionally export the smoothed per-frame
/// class posteriors as CSV.
pub fn cmd_enhance(
    mode: Mode,
    speech_model: &Path,
    noise_model_paths: &[PathBuf],
    input: &Path,
    output: &Path,
    class_trace_out: Option<&Path>,
    settings: &Settings,
) -> Result<EnhanceSummary, CliError> {
    let denoiser = build_denoiser(mode, speech_model, noise_model_paths, settings)?;
    let noisy = read_wav(input)?;
    let config = settings.enhance_config(mode == Mode::Online);

    let started = Instant::now();
    let outcome = enhance_file(&denoiser, &noisy, &config)?;
    let runtime = started.elapsed().as_secs_f64();

    let info = write_wav(output, &outcome.enhanced)?;
    let labels: Vec<String> = denoiser
        .noise_models
        .iter()
        .map(|m| m.label.clone())
        .collect();
    if let Some(path) = class_trace_out {
        write_class_trace(path, &labels, &outcome.class_trace)?;
    }
    Ok(EnhanceSummary {
        frames: outcome.frames,
        runtime_secs: runtime,
        long_term_snr_db: outcome.long_term_snr_db,
        clipped_samples: info.clipped_samples,
        diverged_updates: outcome.diverged_updates,
        class_labels: labels,
    })
}

/// Run the HMM classifier only, writing the smoothed class posteriors.
pub fn cmd_classify(
    speech_model: &Path,
    noise_model_paths: &[PathBuf],
    input: &Path,
    trace_out: &Path,
    settings: &Settings,
) -> Result<EnhanceSummary, CliError> {
    let denoiser = build_denoiser(Mode::Hmm, speech_model, noise_model_paths, settings)?;
    let noisy = read_wav(input)?;
    let config = settings.enhance_config(false);

    let started = Instant::now();
    let outcome = enhance_file(&denoiser, &noisy, &config)?;
    let runtime = started.elapsed().as_secs_f64();

    let labels: Vec<String> = denoiser
        .noise_models
        .iter()
        .map(|m| m.label.clone())
        .collect();
    write_class_trace(trace_out, &labels, &outcome.class_trace)?;
    Ok(EnhanceSummary {
        frames: outcome.frames,
        runtime_secs: runtime,
        long_term_snr_db: outcome.long_term_snr_db,
        clipped_samples: 0,
        diverged_updates: outcome.diverged_updates,
        class_labels: labels,
    })
}

pub struct MixSummary {
    pub measured_snr_db: f64,
    pub samples: usize,
    pub clipped_samples: usize,
}

/// Mix speech and noise at the requested SNR (powers over the whole
/// utterance); optionally keep the scaled noise for reference scoring.
pub fn cmd_mix(
    speech_path: &Path,
    noise_path: &Path,
    snr_db: f64,
    output: &Path,
    noise_output: Option<&Path>,
) -> Result<MixSummary, CliError> {
    let speech = read_wav(speech_path)?;
    let noise = read_wav(noise_path)?;
    let (noisy, scaled) = metrics::mix_at_snr(&speech.samples, &noise.samples, snr_db)?;
    let p_s: f64 = speech.samples.iter().map(|v| v * v).sum();
    let p_n: f64 = scaled.iter().map(|v| v * v).sum();
    let measured = 10.0 * (p_s / p_n).log10();

    let info = write_wav(output, &AudioSignal::new(noisy, speech.sample_rate))?;
    if let Some(path) = noise_output {
        write_wav(path, &AudioSignal::new(scaled, speech.sample_rate))?;
    }
    Ok(MixSummary {
        measured_snr_db: measured,
        samples: speech.len(),
        clipped_samples: info.clipped_samples,
    })
}

pub struct EvalSummary {
    pub report: metrics::EvalReport,
}

/// Score an estimate against the clean speech and scaled noise references.
pub fn cmd_eval(
    estimate_path: &Path,
    reference_path: &Path,
    noise_reference_path: &Path,
    report_csv: Option<&Path>,
    windowed: bool,
    settings: &Settings,
) -> Result<EvalSummary, CliError> {
    let estimate = read_wav(estimate_path)?;
    let reference = read_wav(reference_path)?;
    let noise_ref = read_wav(noise_reference_path)?;
    if estimate.len() != reference.len() || estimate.len() != noise_ref.len() {
        return Err(CliError::Format(
            "estimate and references must have equal lengths".into(),
        ));
    }
    let (sdr, sir, sar) =
        metrics::bss_eval(&estimate.samples, &reference.samples, &noise_ref.samples)?;
    let segsnr = metrics::segsnr(
        &estimate.samples,
        &reference.samples,
        settings.frame_len,
        settings.hop,
    )?;
    let per_window = if windowed {
        // 5-second windows.
        let window = 5 * estimate.sample_rate as usize;
        Some(metrics::windowed_sdr(
            &estimate.samples,
            &reference.samples,
            &noise_ref.samples,
            window,
        )?)
    } else {
        None
    };
    let report = metrics::EvalReport {
        sdr_db: sdr,
        sir_db: sir,
        sar_db: sar,
        segsnr_db: segsnr,
        per_window,
    };
    if let Some(path) = report_csv {
        let mut out = String::from("metric,value_db\n");
        out.push_str(&format!("sdr,{sdr:.6}\n"));
        out.push_str(&format!("sir,{sir:.6}\n"));
        out.push_str(&format!("sar,{sar:.6}\n"));
        out.push_str(&format!("segsnr,{segsnr:.6}\n"));
        if let Some(windows) = &report.per_window {
            for (w, v) in windows {
                out.push_str(&format!("sdr_window_{w},{v:.6}\n"));
            }
        }
        fs::write(path, out)?;
    }
    Ok(EvalSummary { report })
}

pub struct ModelInfo {
    pub label: String,
    pub bins: usize,
    pub rank: usize,
    pub activation_shape: f64,
    pub sample_rate: u32,
    pub frame_len: usize,
    pub target_max: f64,
}

pub fn cmd_model_info(path: &Path) -> Result<ModelInfo, CliError> {
    let model = read_model(path)?;
    Ok(ModelInfo {
        label: model.label.clone(),
        bins: model.bins(),
        rank: model.num_basis(),
        activation_shape: model.activation_shape,
        sample_rate: model.sample_rate,
        frame_len: model.frame_len,
        target_max: model.target_max,
    })
}

/// Everything the toy adaptation experiment reports.
pub struct ToyReport {
    pub sdr_noisy_db: f64,
    pub sdr_enhanced_db: f64,
    pub sdr_improvement_db: f64,
    pub switch_frame: usize,
    /// Frames after the switch until a basis update was driven entirely by
    /// post-switch material (the quantity the promotion bound governs).
    pub adaptation_latency_frames: Option<usize>,
    /// Frames after the switch until the new-noise reconstruction error of
    /// the basis halved (trails the buffer fade-out).
    pub error_halving_latency_frames: Option<usize>,
    pub frames: usize,
    pub runtime_secs: f64,
    pub trajectory_csv: Option<PathBuf>,
}

/// Self-contained online-adaptation demonstration: synthetic speech plus a
/// two-harmonic sinusoidal noise whose frequencies switch halfway through,
/// mixed at 0 dB, enhanced online with a single noise basis vector.
pub fn cmd_toy_fig3(out_dir: Option<&Path>, settings: &Settings) -> Result<ToyReport, CliError> {
    let started = Instant::now();
    let mut toy_settings = settings.clone();
    toy_settings.noise_rank = 1;

    // A quick self-trained speech model keeps the command free-standing.
    let speech_train = synth::speech_like(15.0, toy_settings.seed.wrapping_add(101));
    let train_spec = signal::stft(&speech_train, toy_settings.frame_len, toy_settings.hop)?;
    let quantized = signal::quantize(&train_spec, toy_settings.target_max);
    let speech_model = train_model(&quantized, 16, "speech", &toy_settings.train_options())?;

    // Test material: 20 s of speech, noise harmonics switch at 10 s.
    let speech = synth::speech_like(20.0, toy_settings.seed.wrapping_add(202));
    let half = speech.len() / 2;
    let noise_a = synth::sinusoid_pair(10.0, 625.0, 1250.0, 0.5);
    let noise_b = synth::sinusoid_pair(10.0, 1562.5, 3125.0, 0.5);
    let mut noise_samples = noise_a.samples;
    noise_samples.extend_from_slice(&noise_b.samples);
    noise_samples.resize(speech.len(), 0.0);

    let (noisy_samples, scaled_noise) = metrics::mix_at_snr(&speech.samples, &noise_samples, 0.0)?;
    let noisy = AudioSignal::new(noisy_samples, speech.sample_rate);

    let denoiser = HmmDenoiser::for_online_learning(
        speech_model,
        &toy_settings.online_config(),
        toy_settings.online_phi_noise,
    )?;
    let config = toy_settings.enhance_config(true);
    let outcome = enhance_file(&denoiser, &noisy, &config)?;

    let (sdr_noisy, _, _) = metrics::bss_eval(&noisy.samples, &speech.samples, &scaled_noise)?;
    let (sdr_enhanced, _, _) =
        metrics::bss_eval(&outcome.enhanced.samples, &speech.samples, &scaled_noise)?;

    // Mean magnitude spectrum of the new noise alone, for the adaptation
    // latency readout.
    let switch_frame = half / toy_settings.hop;
    let pure_b = synth::sinusoid_pair(2.0, 1562.5, 3125.0, 0.5);
    let spec_b = signal::stft(&pure_b, toy_settings.frame_len, toy_settings.hop)?;
    let mut target = vec![0.0; spec_b.bins];
    for (k, tv) in target.iter_mut().enumerate() {
        for t in 0..spec_b.frames {
            *tv += spec_b.at(k, t).norm();
        }
        *tv /= spec_b.frames as f64;
    }

    let recon_error = |basis: &[f64]| -> f64 {
        let bb: f64 = basis.iter().map(|v| v * v).sum();
        let tb: f64 = basis.iter().zip(&target).map(|(b, t)| b * t).sum();
        let tt: f64 = target.iter().map(|v| v * v).sum();
        if bb <= 0.0 {
            return 1.0;
        }
        let c = tb / bb;
        let err: f64 = basis
            .iter()
            .zip(&target)
            .map(|(b, t)| {
                let d = t - c * b;
                d * d
            })
            .sum();
        err / tt
    };

    // Latency per the promotion bound: first accepted update whose newest
    // promoted frames all lie after the switch.
    let mut latency = None;
    for snap in &outcome.noise_basis_trace {
        if snap.frame > switch_frame
            && snap
                .newest_promotion_start
                .is_some_and(|s| s > switch_frame)
        {
            latency = Some(snap.frame - switch_frame);
            break;
        }
    }
    // Secondary readout: when the basis itself reconstructs the new noise
    // spectrum at half the error it had when the switch happened.
    let mut err_at_switch = 1.0;
    for snap in &outcome.noise_basis_trace {
        if snap.frame <= switch_frame {
            err_at_switch = recon_error(&snap.basis_mean);
        }
    }
    let mut err_half_latency = None;
    for snap in &outcome.noise_basis_trace {
        if snap.frame > switch_frame && recon_error(&snap.basis_mean) <= err_at_switch / 2.0 {
            err_half_latency = Some(snap.frame - switch_frame);
            break;
        }
    }

    let trajectory_csv = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join("toy_basis_trajectory.csv");
            let mut out = String::from("frame");
            for k in 0..target.len() {
                out.push_str(&format!(",bin_{k}"));
            }
            out.push('\n');
            for snap in &outcome.noise_basis_trace {
                out.push_str(&snap.frame.to_string());
                for v in &snap.basis_mean {
                    out.push_str(&format!(",{v:.6e}"));
                }
                out.push('\n');
            }
            fs::write(&path, out)?;
            let enhanced_path = dir.join("toy_enhanced.wav");
            write_wav(&enhanced_path, &outcome.enhanced)?;
            let noisy_path = dir.join("toy_noisy.wav");
            write_wav(&noisy_path, &noisy)?;
            Some(path)
        }
        None => None,
    };

    Ok(ToyReport {
        sdr_noisy_db: sdr_noisy,
        sdr_enhanced_db: sdr_enhanced,
        sdr_improvement_db: sdr_enhanced - sdr_noisy,
        switch_frame,
        adaptation_latency_frames: latency,
        error_halving_latency_frames: err_half_latency,
        frames: outcome.frames,
        runtime_secs: started.elapsed().as_secs_f64(),
        trajectory_csv,
    })
}

/// Print the one-line `enhance` summary (frames, runtime, long-term SNR).
pub fn print_enhance_summary(summary: &EnhanceSummary) {
    let snr = match summary.long_term_snr_db {
        Some(v) => format!("{v:.1} dB"),
        None => "n/a".to_string(),
    };
    println!(
        "frames: {}  runtime: {:.2} s  long-term SNR: {snr}",
        summary.frames, summary.runtime_secs
    );
    if summary.clipped_samples > 0 {
        eprintln!(
            "warning: {} output samples clipped to full scale",
            summary.clipped_samples
        );
    }
    if summary.diverged_updates > 0 {
        eprintln!(
            "warning: {} online basis updates diverged; the previous basis was kept",
            summary.diverged_updates
        );
    }
}

/// Long-term SNR of a WAV, as used by the enhance summary.
pub fn input_snr_estimate(path: &Path) -> Result<f64, CliError> {
    let sig = read_wav(path)?;
    Ok(estimate_long_term_snr(&sig))
}
