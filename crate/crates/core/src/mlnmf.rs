//! Maximum-likelihood KL-NMF via multiplicative updates.
//!
//! Serves two roles: the "Oracle ML" baseline enhancer (KL-NMF plus a
//! Wiener-type magnitude filter) and the initializer for variational Bayes
//! posterior means.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

use crate::mat::Mat;

/// Floor applied to denominators and division arguments.
const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum MlnmfError {
    ShapeMismatch,
    /// `num_basis` must be at least 1.
    InvalidRank,
}

impl fmt::Display for MlnmfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MlnmfError::ShapeMismatch => write!(f, "matrix shapes do not match"),
            MlnmfError::InvalidRank => write!(f, "number of basis vectors must be ≥ 1"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MlnmfError {}

/// A nonnegative factorization `y ≈ basis · activations`.
#[derive(Debug, Clone)]
pub struct NmfFactors {
    /// K×I basis (dictionary) matrix.
    pub basis: Mat,
    /// I×T activation matrix.
    pub activations: Mat,
}

impl NmfFactors {
    pub fn reconstruction(&self) -> Mat {
        self.basis.matmul(&self.activations)
    }
}

/// Result of a KL-NMF run: the factors plus the divergence after each
/// full multiplicative-update iteration.
#[derive(Debug, Clone)]
pub struct NmfFit {
    pub factors: NmfFactors,
    pub divergence_trace: Vec<f64>,
}

/// Generalized Kullback-Leibler divergence `D(y ‖ ŷ) = Σ y·ln(y/ŷ) − y + ŷ`
/// with the convention `0·ln 0 = 0`.
pub fn kl_divergence(y: &Mat, yhat: &Mat) -> Result<f64, MlnmfError> {
    if y.shape() != yhat.shape() {
        return Err(MlnmfError::ShapeMismatch);
    }
    let mut d = 0.0;
    for (&a, &b) in y.as_slice().iter().zip(yhat.as_slice()) {
        if a > 0.0 {
            d += a * (a / b.max(EPS)).ln() - a + b;
        } else {
            d += b;
        }
    }
    Ok(d)
}

fn uniform_01(rng: &mut ChaCha8Rng) -> f64 {
    // 53-bit mantissa from the top of the word.
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// KL-NMF by multiplicative updates, deterministic for a given `seed`.
///
/// When `fixed_basis` is given only the activations are updated. Otherwise
/// basis columns are renormalized to unit L1 after each iteration with the
/// activations rescaled inversely, fixing the scale indeterminacy.
pub fn kl_nmf(
    y: &Mat,
    num_basis: usize,
    iterations: usize,
    fixed_basis: Option<&Mat>,
    seed: u64,
) -> Result<NmfFit, MlnmfError> {
    if num_basis == 0 {
        return Err(MlnmfError::InvalidRank);
    }
    let (k_bins, frames) = y.shape();
    if let Some(b) = fixed_basis {
        if b.rows() != k_bins || b.cols() != num_basis {
            return Err(MlnmfError::ShapeMismatch);
        }
    }

    let y_mean = if y.is_empty() {
        0.0
    } else {
        y.sum() / (k_bins * frames) as f64
    };
    if y_mean == 0.0 {
        // Degenerate input: uniform basis, silent activations.
        let basis = match fixed_basis {
            Some(b) => b.clone(),
            None => Mat::filled(k_bins, num_basis, 1.0 / k_bins as f64),
        };
        return Ok(NmfFit {
            factors: NmfFactors {
                basis,
                activations: Mat::zeros(num_basis, frames),
            },
            divergence_trace: Vec::new(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis = match fixed_basis {
        Some(b) => b.clone(),
        None => {
            let mut b = Mat::from_fn(k_bins, num_basis, |_, _| 0.5 + uniform_01(&mut rng));
            normalize_columns(&mut b, None);
            b
        }
    };
    // Activation scale chosen so the initial reconstruction matches the data
    // mean: basis columns sum to 1, so mean(b·v) = I·mean(v)/K.
    let v_scale = y_mean * k_bins as f64 / num_basis as f64;
    let mut activations = Mat::from_fn(num_basis, frames, |_, _| {
        (0.5 + uniform_01(&mut rng)) * v_scale
    });

    let mut trace = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        update_activations(y, &basis, &mut activations);
        if fixed_basis.is_none() {
            update_basis(y, &mut basis, &activations);
            normalize_columns(&mut basis, Some(&mut activations));
        }
        let recon = basis.matmul(&activations);
        trace.push(kl_divergence(y, &recon)?);
    }

    Ok(NmfFit {
        factors: NmfFactors { basis, activations },
        divergence_trace: trace,
    })
}

/// `v_it ← v_it · (Σ_k b_ki y_kt/ŷ_kt) / (Σ_k b_ki)`
fn update_activations(y: &Mat, basis: &Mat, activations: &mut Mat) {
    let (k_bins, frames) = y.shape();
    let rank = basis.cols();
    let recon = basis.matmul(activations);
    let mut numer = Mat::zeros(rank, frames);
    for k in 0..k_bins {
        for t in 0..frames {
            let ratio = y[(k, t)] / recon[(k, t)].max(EPS);
            if ratio == 0.0 {
                continue;
            }
            for i in 0..rank {
                numer[(i, t)] += basis[(k, i)] * ratio;
            }
        }
    }
    let col_sums = basis.col_sums();
    for i in 0..rank {
        let denom = col_sums[i].max(EPS);
        for t in 0..frames {
            activations[(i, t)] *= numer[(i, t)] / denom;
        }
    }
}

/// `b_ki ← b_ki · (Σ_t y_kt/ŷ_kt v_it) / (Σ_t v_it)`
fn update_basis(y: &Mat, basis: &mut Mat, activations: &Mat) {
    let (k_bins, frames) = y.shape();
    let rank = basis.cols();
    let recon = basis.matmul(activations);
    let mut numer = Mat::zeros(k_bins, rank);
    for k in 0..k_bins {
        for t in 0..frames {
            let ratio = y[(k, t)] / recon[(k, t)].max(EPS);
            if ratio == 0.0 {
                continue;
            }
            for i in 0..rank {
                numer[(k, i)] += ratio * activations[(i, t)];
            }
        }
    }
    let row_sums = activations.row_sums();
    for k in 0..k_bins {
        for i in 0..rank {
            basis[(k, i)] *= numer[(k, i)] / row_sums[i].max(EPS);
        }
    }
}

/// Rescale each basis column to unit L1; the matching activation row is
/// scaled inversely so the product is unchanged.
fn normalize_columns(basis: &mut Mat, activations: Option<&mut Mat>) {
    let sums = basis.col_sums();
    let rank = basis.cols();
    for k in 0..basis.rows() {
        for i in 0..rank {
            if sums[i] > EPS {
                basis[(k, i)] /= sums[i];
            }
        }
    }
    if let Some(v) = activations {
        for i in 0..rank {
            if sums[i] > EPS {
                for t in 0..v.cols() {
                    v[(i, t)] *= sums[i];
                }
            }
        }
    }
}

/// Wiener-type magnitude filter: `ŝ = (bˢvˢ ⊘ (bˢvˢ + bⁿvⁿ)) ⊙ y`.
/// Bins whose reconstruction denominator is zero get zero gain.
pub fn wiener_enhance(
    y_t: &[f64],
    speech_basis: &Mat,
    noise_basis: &Mat,
    v_s: &[f64],
    v_n: &[f64],
) -> Result<Vec<f64>, MlnmfError> {
    let k_bins = y_t.len();
    if speech_basis.rows() != k_bins
        || noise_basis.rows() != k_bins
        || speech_basis.cols() != v_s.len()
        || noise_basis.cols() != v_n.len()
    {
        return Err(MlnmfError::ShapeMismatch);
    }
    let mut out = vec![0.0; k_bins];
    for k in 0..k_bins {
        let speech: f64 = speech_basis
            .row(k)
            .iter()
            .zip(v_s)
            .map(|(&b, &v)| b * v)
            .sum();
        let noise: f64 = noise_basis
            .row(k)
            .iter()
            .zip(v_n)
            .map(|(&b, &v)| b * v)
            .sum();
        let denom = speech + noise;
        let gain = if denom > 0.0 { speech / denom } else { 0.0 };
        out[k] = gain * y_t[k];
    }
    Ok(out)
}

/// Frame-by-frame maximum-likelihood enhancement: per frame, the
/// activations for the fixed concatenated `[speech | noise]` dictionary are
/// fitted by KL-NMF multiplicative updates and the Wiener-type gain is
/// applied to the noisy magnitudes. Resynthesis reuses the noisy phase.
pub fn ml_enhance_file(
    speech_basis: &Mat,
    noise_basis: &Mat,
    noisy: &crate::signal::AudioSignal,
    frame_len: usize,
    hop: usize,
    iterations: usize,
    seed: u64,
) -> Result<crate::signal::AudioSignal, MlnmfError> {
    use crate::signal;

    if speech_basis.rows() != noise_basis.rows() {
        return Err(MlnmfError::ShapeMismatch);
    }
    let spec = signal::stft(noisy, frame_len, hop).map_err(|_| MlnmfError::ShapeMismatch)?;
    if spec.bins != speech_basis.rows() {
        return Err(MlnmfError::ShapeMismatch);
    }
    let k_bins = spec.bins;
    let rank_s = speech_basis.cols();
    let rank_n = noise_basis.cols();
    let concat = Mat::from_fn(k_bins, rank_s + rank_n, |r, c| {
        if c < rank_s {
            speech_basis[(r, c)]
        } else {
            noise_basis[(r, c - rank_s)]
        }
    });

    let mut magnitudes = Mat::zeros(k_bins, spec.frames);
    let mut phases = Mat::zeros(k_bins, spec.frames);
    let mut enhanced = Mat::zeros(k_bins, spec.frames);
    for k in 0..k_bins {
        for t in 0..spec.frames {
            let v = spec.at(k, t);
            magnitudes[(k, t)] = v.norm();
            phases[(k, t)] = v.im.atan2(v.re);
        }
    }
    let mut column = vec![0.0; k_bins];
    for t in 0..spec.frames {
        for (k, c) in column.iter_mut().enumerate() {
            *c = magnitudes[(k, t)];
        }
        let y_col = Mat::column(&column);
        let fit = kl_nmf(
            &y_col,
            rank_s + rank_n,
            iterations,
            Some(&concat),
            seed.wrapping_add(t as u64),
        )?;
        let v = fit.factors.activations.col(0);
        let s_hat = wiener_enhance(
            &column,
            speech_basis,
            noise_basis,
            &v[..rank_s],
            &v[rank_s..],
        )?;
        for (k, s) in s_hat.iter().enumerate() {
            enhanced[(k, t)] = *s;
        }
    }

    let rebuilt = crate::signal::ComplexSpectrogram::from_magnitude_phase(
        &enhanced,
        &phases,
        frame_len,
        hop,
        noisy.sample_rate,
    )
    .map_err(|_| MlnmfError::ShapeMismatch)?;
    let mut out = signal::istft(&rebuilt).map_err(|_| MlnmfError::ShapeMismatch)?;
    out.samples.resize(noisy.len(), 0.0);
    Ok(out)
}
