//! WAV reading and writing: RIFF, 16-bit PCM, mono, 16 kHz.

use std::path::Path;

use bnmf_core::signal::{AudioSignal, PIPELINE_SAMPLE_RATE};
use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::CliError;

const SCALE: f64 = 32768.0;

/// Read a 16-bit PCM mono WAV at the pipeline rate, normalizing samples to
/// `[-1, 1]`. Other encodings, channel counts, or rates are rejected
/// rather than silently converted.
pub fn read_wav(path: &Path) -> Result<AudioSignal, CliError> {
    let reader =
        WavReader::open(path).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(CliError::Format(format!(
            "{}: expected mono, found {} channels",
            path.display(),
            spec.channels
        )));
    }
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(CliError::Format(format!(
            "{}: expected 16-bit PCM, found {}-bit {:?}",
            path.display(),
            spec.bits_per_sample,
            spec.sample_format
        )));
    }
    if spec.sample_rate != PIPELINE_SAMPLE_RATE {
        return Err(CliError::Format(format!(
            "{}: sample rate {} Hz, the pipeline requires {} Hz (no resampling)",
            path.display(),
            spec.sample_rate,
            PIPELINE_SAMPLE_RATE
        )));
    }
    let samples: Result<Vec<i16>, _> = reader.into_samples().collect();
    let samples = samples.map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    Ok(AudioSignal::new(
        samples.iter().map(|&s| f64::from(s) / SCALE).collect(),
        spec.sample_rate,
    ))
}

/// Result of a WAV write: how many samples had to be clipped into range.
pub struct WavWriteInfo {
    pub clipped_samples: usize,
}

/// Write a signal as 16-bit PCM mono. Samples outside `[-1, 1]` saturate;
/// the count of clipped samples is returned so callers can warn.
pub fn write_wav(path: &Path, signal: &AudioSignal) -> Result<WavWriteInfo, CliError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    let mut clipped = 0usize;
    for &s in &signal.samples {
        debug_assert!(s.is_finite());
        let scaled = (s * SCALE).round();
        let value = if scaled > i16::MAX as f64 {
            clipped += 1;
            i16::MAX
        } else if scaled < i16::MIN as f64 {
            clipped += 1;
            i16::MIN
        } else {
            scaled as i16
        };
        writer
            .write_sample(value)
            .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    }
    writer
        .finalize()
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    Ok(WavWriteInfo {
        clipped_samples: clipped,
    })
}
