//! Objective evaluation: SDR/SIR/SAR energy-ratio decomposition, segmental
//! SNR, and SNR-controlled mixing for experiment construction.
//!
//! The SDR/SIR/SAR decomposition uses time-invariant scalar least-squares
//! projections onto the reference spans (not the 512-tap time-varying
//! filters of the full BSS-Eval toolkit); values are comparable between
//! systems evaluated here, not bit-compatible with the toolkit.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;

/// Decibel cap standing in for infinite ratios (perfect estimates).
pub const DB_CAP: f64 = 100.0;
/// Per-frame clamp for segmental SNR, in dB.
pub const SEGSNR_CLAMP_DB: (f64, f64) = (-10.0, 30.0);

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    LengthMismatch,
    /// Reference has no energy (or no frames above the silence threshold).
    DegenerateReference,
    /// Mixing requires both signals to carry energy.
    ZeroPower,
    BadConfig(&'static str),
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::LengthMismatch => write!(f, "signal lengths do not match"),
            MetricsError::DegenerateReference => write!(f, "reference signal is degenerate"),
            MetricsError::ZeroPower => write!(f, "zero-power input"),
            MetricsError::BadConfig(msg) => write!(f, "bad metric config: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MetricsError {}

/// Evaluation summary for one estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub sdr_db: f64,
    pub sir_db: f64,
    pub sar_db: f64,
    pub segsnr_db: f64,
    /// Optional per-window SDR trace: (window_index, sdr_db).
    pub per_window: Option<Vec<(usize, f64)>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn energy(a: &[f64]) -> f64 {
    dot(a, a)
}

fn ratio_db(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        return -DB_CAP;
    }
    if den <= num * 1e-10 {
        return DB_CAP;
    }
    (10.0 * (num / den).log10()).clamp(-DB_CAP, DB_CAP)
}

/// BSS-Eval-style decomposition of `estimate = s_target + e_interf + e_artif`
/// via scalar projections onto the speech reference and the joint
/// speech+noise span. Returns `(sdr_db, sir_db, sar_db)`.
pub fn bss_eval(
    estimate: &[f64],
    reference_speech: &[f64],
    reference_noise: &[f64],
) -> Result<(f64, f64, f64), MetricsError> {
    let n = estimate.len();
    if reference_speech.len() != n || reference_noise.len() != n {
        return Err(MetricsError::LengthMismatch);
    }
    let ss = energy(reference_speech);
    let nn = energy(reference_noise);
    if ss <= 0.0 {
        return Err(MetricsError::DegenerateReference);
    }

    // Target: projection onto the speech reference.
    let target_coef = dot(estimate, reference_speech) / ss;

    // Joint projection: solve the 2x2 normal equations for a·s + b·n_ref.
    let sn = dot(reference_speech, reference_noise);
    let es = dot(estimate, reference_speech);
    let en = dot(estimate, reference_noise);
    let det = ss * nn - sn * sn;
    let (a, b) = if nn <= 0.0 || det.abs() <= 1e-12 * ss * nn.max(1.0) {
        (target_coef, 0.0)
    } else {
        ((es * nn - en * sn) / det, (en * ss - es * sn) / det)
    };

    let mut target_energy = 0.0;
    let mut interf_energy = 0.0;
    let mut artif_energy = 0.0;
    let mut target_plus_interf_energy = 0.0;
    let mut dist_energy = 0.0;
    for i in 0..n {
        let s_target = target_coef * reference_speech[i];
        let projected = a * reference_speech[i] + b * reference_noise[i];
        let e_interf = projected - s_target;
        let e_artif = estimate[i] - projected;
        target_energy += s_target * s_target;
        interf_energy += e_interf * e_interf;
        artif_energy += e_artif * e_artif;
        let tpi = s_target + e_interf;
        target_plus_interf_energy += tpi * tpi;
        let d = e_interf + e_artif;
        dist_energy += d * d;
    }

    let sdr = ratio_db(target_energy, dist_energy);
    let sir = ratio_db(target_energy, interf_energy);
    let sar = ratio_db(target_plus_interf_energy, artif_energy);
    Ok((sdr, sir, sar))
}

/// SDR over consecutive windows of `window_len` samples (trailing partial
/// window dropped). Windows whose speech reference is silent are skipped.
pub fn windowed_sdr(
    estimate: &[f64],
    reference_speech: &[f64],
    reference_noise: &[f64],
    window_len: usize,
) -> Result<Vec<(usize, f64)>, MetricsError> {
    if window_len == 0 {
        return Err(MetricsError::BadConfig("window length must be positive"));
    }
    if reference_speech.len() != estimate.len() || reference_noise.len() != estimate.len() {
        return Err(MetricsError::LengthMismatch);
    }
    let mut out = Vec::new();
    let mut w = 0;
    while (w + 1) * window_len <= estimate.len() {
        let lo = w * window_len;
        let hi = lo + window_len;
        match bss_eval(
            &estimate[lo..hi],
            &reference_speech[lo..hi],
            &reference_noise[lo..hi],
        ) {
            Ok((sdr, _, _)) => out.push((w, sdr)),
            Err(MetricsError::DegenerateReference) => {}
            Err(e) => return Err(e),
        }
        w += 1;
    }
    Ok(out)
}

/// Segmental SNR in dB: per-frame SNR clamped to [−10, 30], averaged over
/// frames whose reference energy exceeds 1e-6 of the mean frame energy.
pub fn segsnr(
    estimate: &[f64],
    reference: &[f64],
    frame_len: usize,
    hop: usize,
) -> Result<f64, MetricsError> {
    if estimate.len() != reference.len() {
        return Err(MetricsError::LengthMismatch);
    }
    if frame_len == 0 || hop == 0 {
        return Err(MetricsError::BadConfig("frame/hop must be positive"));
    }
    if reference.len() < frame_len {
        return Err(MetricsError::DegenerateReference);
    }

    let frames = (reference.len() - frame_len) / hop + 1;
    let mut frame_energies = vec![0.0; frames];
    let mut mean_energy = 0.0;
    for (t, fe) in frame_energies.iter_mut().enumerate() {
        let lo = t * hop;
        *fe = energy(&reference[lo..lo + frame_len]);
        mean_energy += *fe;
    }
    mean_energy /= frames as f64;
    let threshold = 1e-6 * mean_energy;

    let mut total = 0.0;
    let mut counted = 0;
    for t in 0..frames {
        if frame_energies[t] <= threshold {
            continue;
        }
        let lo = t * hop;
        let err: f64 = (lo..lo + frame_len)
            .map(|i| {
                let d = reference[i] - estimate[i];
                d * d
            })
            .sum();
        let snr = if err <= 0.0 {
            SEGSNR_CLAMP_DB.1
        } else {
            (10.0 * (frame_energies[t] / err).log10()).clamp(SEGSNR_CLAMP_DB.0, SEGSNR_CLAMP_DB.1)
        };
        total += snr;
        counted += 1;
    }
    if counted == 0 {
        return Err(MetricsError::DegenerateReference);
    }
    Ok(total / counted as f64)
}

/// Scale `noise` so the speech-to-noise power ratio over the whole
/// utterance equals `snr_db`, then mix. Noise shorter than the speech is
/// looped; longer noise is truncated. Returns `(noisy, scaled_noise)`.
pub fn mix_at_snr(
    speech: &[f64],
    noise: &[f64],
    snr_db: f64,
) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
    if speech.is_empty() || noise.is_empty() {
        return Err(MetricsError::ZeroPower);
    }
    let aligned: Vec<f64> = noise.iter().cycle().take(speech.len()).copied().collect();
    let p_speech = energy(speech) / speech.len() as f64;
    let p_noise = energy(&aligned) / aligned.len() as f64;
    if p_speech <= 0.0 || p_noise <= 0.0 {
        return Err(MetricsError::ZeroPower);
    }
    let gain = (p_speech / (p_noise * 10.0_f64.powf(snr_db / 10.0))).sqrt();
    let scaled: Vec<f64> = aligned.iter().map(|&v| v * gain).collect();
    let noisy: Vec<f64> = speech.iter().zip(&scaled).map(|(s, n)| s + n).collect();
    Ok((noisy, scaled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    /// Orthogonal pair: speech on even samples, noise on odd samples.
    fn orthogonal_pair(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut s = vec![0.0; n];
        let mut m = vec![0.0; n];
        for i in 0..n {
            let v = (0.3 + (i % 17) as f64 * 0.05) * if i % 3 == 0 { -1.0 } else { 1.0 };
            if i % 2 == 0 {
                s[i] = v;
            } else {
                m[i] = v;
            }
        }
        (s, m)
    }

    #[test]
    fn perfect_estimate_hits_the_cap() {
        let (s, n) = orthogonal_pair(4096);
        let (sdr, sir, sar) = bss_eval(&s, &s, &n).unwrap();
        assert_eq!(sdr, DB_CAP);
        assert_eq!(sir, DB_CAP);
        assert_eq!(sar, DB_CAP);
    }

    #[test]
    fn noise_estimate_has_dismal_sir() {
        let (s, n) = orthogonal_pair(4096);
        let (_, sir, _) = bss_eval(&n, &s, &n).unwrap();
        assert!(sir <= -20.0, "SIR {sir}");
    }

    #[test]
    fn additive_orthogonal_noise_sets_sdr_exactly() {
        // estimate = s + 0.1·n with ‖s‖ = ‖n‖ → SDR = 20 dB.
        let (mut s, mut n) = orthogonal_pair(4096);
        let es = energy(&s).sqrt();
        let en = energy(&n).sqrt();
        for v in s.iter_mut() {
            *v /= es;
        }
        for v in n.iter_mut() {
            *v /= en;
        }
        let estimate: Vec<f64> = s.iter().zip(&n).map(|(a, b)| a + 0.1 * b).collect();
        let (sdr, _, _) = bss_eval(&estimate, &s, &n).unwrap();
        assert!((sdr - 20.0).abs() < 0.1, "SDR {sdr}");
    }

    #[test]
    fn zero_reference_is_degenerate() {
        let z = vec![0.0; 128];
        let n = vec![1.0; 128];
        assert_eq!(
            bss_eval(&n, &z, &n).unwrap_err(),
            MetricsError::DegenerateReference
        );
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        assert_eq!(
            bss_eval(&[1.0], &[1.0, 2.0], &[1.0]).unwrap_err(),
            MetricsError::LengthMismatch
        );
    }

    #[test]
    fn segsnr_identity_clamps_high() {
        let x: Vec<f64> = (0..4096).map(|i| (i as f64 * 0.01).sin()).collect();
        assert_eq!(segsnr(&x, &x, 512, 256).unwrap(), 30.0);
    }

    #[test]
    fn segsnr_equal_power_noise_is_zero() {
        // Reference and error carry equal energy in every frame.
        let n = 8192;
        let reference: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / 64.0).sin()).collect();
        let estimate: Vec<f64> = (0..n)
            .map(|i| reference[i] + (2.0 * PI * i as f64 / 64.0).cos())
            .collect();
        let snr = segsnr(&estimate, &reference, 512, 256).unwrap();
        assert!(snr.abs() <= 0.2, "SegSNR {snr}");
    }

    #[test]
    fn segsnr_strong_error_clamps_low() {
        let n = 4096;
        let reference: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * i as f64 / 64.0).sin() * 0.1)
            .collect();
        // Error orthogonal-ish with 10x the reference power.
        let estimate: Vec<f64> = (0..n)
            .map(|i| reference[i] + (2.0 * PI * i as f64 / 50.0).cos())
            .collect();
        let snr = segsnr(&estimate, &reference, 512, 256).unwrap();
        assert_eq!(snr, -10.0);
    }

    #[test]
    fn segsnr_all_silent_reference_is_degenerate() {
        let z = vec![0.0; 4096];
        let e = vec![0.1; 4096];
        assert_eq!(
            segsnr(&e, &z, 512, 256).unwrap_err(),
            MetricsError::DegenerateReference
        );
    }

    #[test]
    fn mix_unit_power_at_zero_db_keeps_noise_gain_one() {
        let (mut s, mut n) = orthogonal_pair(4096);
        let ps = (energy(&s) / s.len() as f64).sqrt();
        let pn = (energy(&n) / n.len() as f64).sqrt();
        for v in s.iter_mut() {
            *v /= ps;
        }
        for v in n.iter_mut() {
            *v /= pn;
        }
        let (_, scaled) = mix_at_snr(&s, &n, 0.0).unwrap();
        for (a, b) in scaled.iter().zip(&n) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mix_snr_is_exact_by_construction() {
        let (s, n) = orthogonal_pair(8000);
        for snr in [-5.0, 0.0, 10.0, 17.3] {
            let (_, scaled) = mix_at_snr(&s, &n, snr).unwrap();
            let measured = 10.0 * (energy(&s) / energy(&scaled)).log10();
            assert!(
                (measured - snr).abs() < 1e-6,
                "requested {snr}, measured {measured}"
            );
        }
    }

    #[test]
    fn mix_plus_ten_db_means_tenth_power() {
        let (s, n) = orthogonal_pair(8000);
        let (_, scaled) = mix_at_snr(&s, &n, 10.0).unwrap();
        let ratio = energy(&scaled) / energy(&s);
        assert!((ratio - 0.1).abs() < 1e-9);
    }

    #[test]
    fn mix_loops_short_noise() {
        let s = vec![0.5; 1000];
        let n = vec![0.1, -0.1, 0.2];
        let (noisy, scaled) = mix_at_snr(&s, &n, 0.0).unwrap();
        assert_eq!(noisy.len(), 1000);
        assert_eq!(scaled.len(), 1000);
        // Looping preserves the period.
        assert!((scaled[0] - scaled[3]).abs() < 1e-12);
    }

    #[test]
    fn mix_zero_power_is_rejected() {
        let z = vec![0.0; 100];
        let n = vec![1.0; 100];
        assert_eq!(
            mix_at_snr(&z, &n, 0.0).unwrap_err(),
            MetricsError::ZeroPower
        );
        assert_eq!(
            mix_at_snr(&n, &z, 0.0).unwrap_err(),
            MetricsError::ZeroPower
        );
    }

    #[test]
    fn windowed_sdr_counts_full_windows() {
        let (s, n) = orthogonal_pair(10_000);
        let windows = windowed_sdr(&s, &s, &n, 4000).unwrap();
        assert_eq!(windows.len(), 2);
        assert_eq!(windows[0].0, 0);
        assert_eq!(windows[1].0, 1);
    }

    proptest! {
        #[test]
        fn sir_is_scale_invariant(scale in 0.01_f64..100.0, seed in 0usize..50) {
            let (s, n) = orthogonal_pair(2048 + seed);
            let estimate: Vec<f64> = s.iter().zip(&n).map(|(a, b)| 0.8 * a + 0.3 * b).collect();
            let scaled: Vec<f64> = estimate.iter().map(|v| v * scale).collect();
            let (_, sir_a, _) = bss_eval(&estimate, &s, &n).unwrap();
            let (_, sir_b, _) = bss_eval(&scaled, &s, &n).unwrap();
            prop_assert!((sir_a - sir_b).abs() < 1e-6);
        }
    }
}
