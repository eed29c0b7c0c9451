//! Audio frames, STFT analysis/synthesis, and integer quantization of
//! magnitude spectrograms for the Poisson observation model.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::fft::Fft;
use crate::mat::Mat;

/// Sample rate required at every pipeline entry point.
pub const PIPELINE_SAMPLE_RATE: u32 = 16_000;
/// Canonical analysis frame length in samples.
pub const DEFAULT_FRAME_LEN: usize = 512;
/// Canonical hop (50% overlap).
pub const DEFAULT_HOP: usize = 256;
/// Default quantization peak. Large enough that rounding error is at most
/// 0.005% of the spectral peak; small enough that log-domain Poisson terms
/// stay well inside `f64` range.
pub const DEFAULT_TARGET_MAX: f64 = 10_000.0;

#[derive(Debug, Clone, PartialEq)]
pub enum SignalError {
    /// Input shorter than one analysis frame.
    TooShort { len: usize, frame_len: usize },
    /// Unsupported analysis configuration.
    BadConfig(&'static str),
    /// Matrix dimensions disagree.
    ShapeMismatch,
}

impl fmt::Display for SignalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalError::TooShort { len, frame_len } => {
                write!(
                    f,
                    "signal too short: {len} samples < one frame of {frame_len}"
                )
            }
            SignalError::BadConfig(msg) => write!(f, "bad analysis config: {msg}"),
            SignalError::ShapeMismatch => write!(f, "spectrogram dimensions are inconsistent"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SignalError {}

/// A mono audio signal with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        AudioSignal {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Window function identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hann,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn samples(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n)
                .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos()))
                .collect(),
        }
    }
}

/// One-sided complex STFT: K×T with K = frame_len/2 + 1.
#[derive(Debug, Clone)]
pub struct ComplexSpectrogram {
    /// Row-major K×T complex values.
    values: Vec<Complex64>,
    pub bins: usize,
    pub frames: usize,
    pub frame_len: usize,
    pub hop: usize,
    pub window: Window,
    pub sample_rate: u32,
}

impl ComplexSpectrogram {
    #[inline]
    pub fn at(&self, bin: usize, frame: usize) -> Complex64 {
        self.values[bin * self.frames + frame]
    }

    /// Rebuild a complex spectrogram from real-valued magnitudes and phases
    /// (the Wiener use case: magnitude replaced, noisy phase kept).
    pub fn from_magnitude_phase(
        magnitudes: &Mat,
        phases: &Mat,
        frame_len: usize,
        hop: usize,
        sample_rate: u32,
    ) -> Result<Self, SignalError> {
        if magnitudes.shape() != phases.shape() {
            return Err(SignalError::ShapeMismatch);
        }
        let (bins, frames) = magnitudes.shape();
        if bins != frame_len / 2 + 1 {
            return Err(SignalError::ShapeMismatch);
        }
        let mut values = Vec::with_capacity(bins * frames);
        for k in 0..bins {
            for t in 0..frames {
                let m = magnitudes[(k, t)];
                let p = phases[(k, t)];
                values.push(Complex64::new(m * p.cos(), m * p.sin()));
            }
        }
        Ok(ComplexSpectrogram {
            values,
            bins,
            frames,
            frame_len,
            hop,
            window: Window::Hann,
            sample_rate,
        })
    }
}

/// Nonnegative integer-valued magnitude spectrogram plus the quantization
/// gain and the phase sidecar needed for resynthesis.
#[derive(Debug, Clone)]
pub struct MagnitudeSpectrogram {
    /// K×T integer-valued counts (stored as f64).
    pub magnitudes: Mat,
    /// Scale applied before rounding; original magnitude = count / gain.
    pub gain: f64,
    /// K×T phase angles of the underlying complex values.
    pub phase: Mat,
    pub frame_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

fn check_config(len: usize, frame_len: usize, hop: usize) -> Result<(), SignalError> {
    if !frame_len.is_power_of_two() || frame_len < 4 {
        return Err(SignalError::BadConfig(
            "frame length must be a power of two ≥ 4",
        ));
    }
    if hop * 2 != frame_len {
        return Err(SignalError::BadConfig("hop must equal frame_len / 2"));
    }
    if len < frame_len {
        return Err(SignalError::TooShort { len, frame_len });
    }
    Ok(())
}

/// Number of complete frames for a signal of `len` samples. Incomplete edge
/// frames are dropped, never zero-padded.
pub fn frame_count(len: usize, frame_len: usize, hop: usize) -> usize {
    if len < frame_len {
        0
    } else {
        (len - frame_len) / hop + 1
    }
}

/// Short-time Fourier transform with a periodic Hann analysis window.
pub fn stft(
    signal: &AudioSignal,
    frame_len: usize,
    hop: usize,
) -> Result<ComplexSpectrogram, SignalError> {
    check_config(signal.len(), frame_len, hop)?;
    let bins = frame_len / 2 + 1;
    let frames = frame_count(signal.len(), frame_len, hop);
    let window = Window::Hann.samples(frame_len);
    let plan = Fft::new(frame_len);

    let mut values = vec![Complex64::new(0.0, 0.0); bins * frames];
    let mut buf = vec![Complex64::new(0.0, 0.0); frame_len];
    for t in 0..frames {
        let start = t * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(signal.samples[start + i] * window[i], 0.0);
        }
        plan.forward(&mut buf);
        for k in 0..bins {
            values[k * frames + t] = buf[k];
        }
    }

    Ok(ComplexSpectrogram {
        values,
        bins,
        frames,
        frame_len,
        hop,
        window: Window::Hann,
        sample_rate: signal.sample_rate,
    })
}

/// Envelope floor for overlap-add normalization. Interior samples have an
/// accumulated window power of at least 0.5 and are divided exactly; edge
/// samples below the floor are attenuated rather than amplified, which
/// keeps modified-spectrum resynthesis (whose frames are no longer
/// window-shaped) from blowing up where coverage vanishes.
const OLA_ENVELOPE_FLOOR: f64 = 0.04;

/// Inverse STFT by weighted overlap-add: Hann on synthesis as well, with the
/// accumulated squared-window envelope divided out. For spectrograms produced
/// by [`stft`] this reconstructs interior samples to within 1e-10 relative.
pub fn istft(spec: &ComplexSpectrogram) -> Result<AudioSignal, SignalError> {
    if spec.bins != spec.frame_len / 2 + 1 || spec.hop * 2 != spec.frame_len {
        return Err(SignalError::ShapeMismatch);
    }
    let frame_len = spec.frame_len;
    let n_out = (spec.frames.saturating_sub(1)) * spec.hop + frame_len;
    let window = Window::Hann.samples(frame_len);
    let plan = Fft::new(frame_len);

    let mut out = vec![0.0; n_out];
    let mut envelope = vec![0.0; n_out];
    let mut buf = vec![Complex64::new(0.0, 0.0); frame_len];
    for t in 0..spec.frames {
        // Full spectrum from the one-sided half via conjugate symmetry.
        for k in 0..spec.bins {
            buf[k] = spec.at(k, t);
        }
        for k in spec.bins..frame_len {
            buf[k] = spec.at(frame_len - k, t).conj();
        }
        plan.inverse(&mut buf);
        let start = t * spec.hop;
        for i in 0..frame_len {
            out[start + i] += buf[i].re * window[i];
            envelope[start + i] += window[i] * window[i];
        }
    }
    for (o, &e) in out.iter_mut().zip(&envelope) {
        *o /= e.max(OLA_ENVELOPE_FLOOR);
    }
    Ok(AudioSignal::new(out, spec.sample_rate))
}

/// Scale magnitudes so the peak lands at `target_max`, then round to
/// integers. The gain and per-bin phases are retained for resynthesis.
pub fn quantize(spec: &ComplexSpectrogram, target_max: f64) -> MagnitudeSpectrogram {
    debug_assert!(target_max >= 100.0, "target_max below 100 loses precision");
    let mut peak = 0.0_f64;
    for v in &spec.values {
        peak = peak.max(v.norm());
    }
    let gain = if peak > 0.0 { target_max / peak } else { 1.0 };

    let mut magnitudes = Mat::zeros(spec.bins, spec.frames);
    let mut phase = Mat::zeros(spec.bins, spec.frames);
    for k in 0..spec.bins {
        for t in 0..spec.frames {
            let v = spec.at(k, t);
            magnitudes[(k, t)] = (gain * v.norm()).round();
            phase[(k, t)] = v.im.atan2(v.re);
        }
    }
    MagnitudeSpectrogram {
        magnitudes,
        gain,
        phase,
        frame_len: spec.frame_len,
        hop: spec.hop,
        sample_rate: spec.sample_rate,
    }
}

/// Quantize a single spectral column to integer counts with its own gain.
/// Used by the causal per-frame enhancement loop.
pub fn quantize_column(column: &[Complex64], target_max: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let peak = column.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    let gain = if peak > 0.0 { target_max / peak } else { 1.0 };
    let counts = column.iter().map(|v| (gain * v.norm()).round()).collect();
    let phases = column.iter().map(|v| v.im.atan2(v.re)).collect();
    (counts, phases, gain)
}
