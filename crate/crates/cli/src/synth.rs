//! Bundled synthetic test signals: speech-like harmonic complexes plus a
//! few noise generators, all deterministic under a seed. These stand in
//! for licensed speech/noise corpora so training and evaluation can run
//! self-contained.

use std::f64::consts::PI;

use bnmf_core::signal::{self, AudioSignal, PIPELINE_SAMPLE_RATE};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Speech-like signal: a pitched harmonic complex with slowly moving
/// formant-style resonances, syllabic amplitude modulation, short pauses,
/// and a faint breath-noise floor.
pub fn speech_like(duration_secs: f64, seed: u64) -> AudioSignal {
    let rate = PIPELINE_SAMPLE_RATE;
    let n = (duration_secs * rate as f64) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5feec4);
    let mut samples = vec![0.0f64; n];

    let mut pos = 0usize;
    let mut phase = 0.0f64;
    let mut f0 = rng.random_range(110.0..180.0);
    let mut syllables_left: u32 = rng.random_range(3..8);

    while pos < n {
        if syllables_left == 0 {
            // Inter-phrase pause.
            let pause = (rng.random_range(0.06..0.25) * rate as f64) as usize;
            pos += pause;
            syllables_left = rng.random_range(3..8);
            continue;
        }
        syllables_left -= 1;

        let syllable_len = (rng.random_range(0.12..0.30) * rate as f64) as usize;
        let f0_target = (f0 + rng.random_range(-40.0_f64..40.0)).clamp(90.0, 230.0);
        let peak = rng.random_range(0.35..0.85);
        // Three formant-style resonances, fixed per syllable.
        let formants = [
            rng.random_range(300.0..900.0),
            rng.random_range(1000.0..2300.0),
            rng.random_range(2500.0..3600.0),
        ];
        let bandwidths = [130.0, 220.0, 320.0];

        let f0_start = f0;
        for i in 0..syllable_len {
            if pos + i >= n {
                break;
            }
            let frac = i as f64 / syllable_len as f64;
            let f_inst = f0_start + (f0_target - f0_start) * frac;
            phase += 2.0 * PI * f_inst / rate as f64;
            // Raised-cosine syllable envelope.
            let envelope = peak * 0.5 * (1.0 - (2.0 * PI * frac).cos());

            let mut v = 0.0;
            let mut h = 1.0;
            while h * f_inst < 4200.0 {
                let freq = h * f_inst;
                let mut weight = 0.0;
                for (fc, bw) in formants.iter().zip(&bandwidths) {
                    let d = (freq - fc) / bw;
                    weight += (-0.5 * d * d).exp();
                }
                // Spectral tilt keeps high harmonics gentle.
                weight = (weight + 0.05) / h.sqrt();
                v += weight * (h * phase).sin();
                h += 1.0;
            }
            let breath: f64 = StandardNormal.sample(&mut rng);
            samples[pos + i] = envelope * (0.25 * v + 0.004 * breath);
        }
        pos += syllable_len;
        f0 = f0_target;
    }

    normalize_peak(&mut samples, 0.6);
    AudioSignal::new(samples, rate)
}

/// Zero-mean Gaussian noise scaled to the requested RMS.
pub fn white_noise(duration_secs: f64, rms: f64, seed: u64) -> AudioSignal {
    let rate = PIPELINE_SAMPLE_RATE;
    let n = (duration_secs * rate as f64) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0153);
    let mut samples: Vec<f64> = (0..n)
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            g
        })
        .collect();
    normalize_rms(&mut samples, rms);
    AudioSignal::new(samples, rate)
}

/// Gaussian noise restricted to `[lo_hz, hi_hz]` by spectral masking.
pub fn band_noise(duration_secs: f64, lo_hz: f64, hi_hz: f64, rms: f64, seed: u64) -> AudioSignal {
    assert!(lo_hz < hi_hz, "band edges out of order");
    let raw = white_noise(duration_secs + 0.1, 1.0, seed);
    let frame_len = 512;
    let hop = 256;
    let spec = signal::stft(&raw, frame_len, hop).expect("generator signal long enough");
    let bin_hz = PIPELINE_SAMPLE_RATE as f64 / frame_len as f64;

    let bins = spec.bins;
    let frames = spec.frames;
    let mut mags = bnmf_core::Mat::zeros(bins, frames);
    let mut phases = bnmf_core::Mat::zeros(bins, frames);
    for k in 0..bins {
        let freq = k as f64 * bin_hz;
        let keep = freq >= lo_hz && freq <= hi_hz;
        for t in 0..frames {
            let v = spec.at(k, t);
            mags[(k, t)] = if keep { v.norm() } else { 0.0 };
            phases[(k, t)] = v.im.atan2(v.re);
        }
    }
    let filtered = bnmf_core::signal::ComplexSpectrogram::from_magnitude_phase(
        &mags,
        &phases,
        frame_len,
        hop,
        PIPELINE_SAMPLE_RATE,
    )
    .expect("shapes match");
    let mut out = signal::istft(&filtered).expect("synthesis");
    out.samples
        .truncate((duration_secs * PIPELINE_SAMPLE_RATE as f64) as usize);
    normalize_rms(&mut out.samples, rms);
    out
}

/// Sum of two equal-amplitude sinusoids ("two harmonics").
pub fn sinusoid_pair(duration_secs: f64, f1_hz: f64, f2_hz: f64, peak: f64) -> AudioSignal {
    let rate = PIPELINE_SAMPLE_RATE;
    let n = (duration_secs * rate as f64) as usize;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            0.5 * peak * ((2.0 * PI * f1_hz * t).sin() + (2.0 * PI * f2_hz * t).sin())
        })
        .collect();
    AudioSignal::new(samples, rate)
}

fn normalize_peak(samples: &mut [f64], peak: f64) {
    let current = samples.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if current > 0.0 {
        let g = peak / current;
        for v in samples.iter_mut() {
            *v *= g;
        }
    }
}

fn normalize_rms(samples: &mut [f64], rms: f64) {
    let current = (samples.iter().map(|&v| v * v).sum::<f64>() / samples.len() as f64).sqrt();
    if current > 0.0 {
        let g = rms / current;
        for v in samples.iter_mut() {
            *v *= g;
        }
    }
}


/// Band noise with syllable-rate amplitude modulation (machinery-like
/// pulsing). Depth in [0, 1).
pub fn pulsed_band_noise(
    duration_secs: f64,
    lo_hz: f64,
    hi_hz: f64,
    mod_hz: f64,
    depth: f64,
    rms: f64,
    seed: u64,
) -> AudioSignal {
    let mut sig = band_noise(duration_secs, lo_hz, hi_hz, 1.0, seed);
    let rate = sig.sample_rate as f64;
    for (i, v) in sig.samples.iter_mut().enumerate() {
        let m = 1.0 - depth * 0.5 * (1.0 - (2.0 * PI * mod_hz * i as f64 / rate).cos());
        *v *= m;
    }
    normalize_rms(&mut sig.samples, rms);
    sig
}

/// Siren-like frequency-modulated tone sweeping between two frequencies.
pub fn siren(duration_secs: f64, lo_hz: f64, hi_hz: f64, sweep_hz: f64, rms: f64) -> AudioSignal {
    let rate = PIPELINE_SAMPLE_RATE;
    let n = (duration_secs * rate as f64) as usize;
    let mut phase = 0.0;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / rate as f64;
        let f = lo_hz + (hi_hz - lo_hz) * 0.5 * (1.0 - (2.0 * PI * sweep_hz * t).cos());
        phase += 2.0 * PI * f / rate as f64;
        samples.push(phase.sin());
    }
    let mut sig = AudioSignal::new(samples, rate);
    normalize_rms(&mut sig.samples, rms);
    sig
}
