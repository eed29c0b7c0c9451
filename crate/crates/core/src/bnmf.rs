//! Gamma-Poisson Bayesian NMF with mean-field variational inference.
//!
//! Observed integer counts are modeled as sums of latent Poisson variables,
//! `Y_kt = Σ_i Z_kit` with `Z_kit ~ Poisson(B_ki · V_it)`, and gamma priors
//! on the basis `B` and activations `V`. Inference alternates closed-form
//! mean-field updates: the latent-count posteriors are multinomial with
//! log-linear responsibilities in `E[log B] + E[log V]`, and the factor
//! posteriors stay gamma. A variational lower bound on the marginal
//! log-likelihood is tracked every iteration and must never decrease.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;

use crate::mat::Mat;
use crate::mlnmf::{self, MlnmfError, NmfFactors};
use crate::signal::MagnitudeSpectrogram;
use crate::special::{digamma, ln_factorial, ln_gamma};

/// Floor for gamma means when building posteriors from point initializers.
const MEAN_FLOOR: f64 = 1e-12;
/// Shape used when a point estimate seeds a gamma posterior.
const INIT_SHAPE: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub enum BnmfError {
    ShapeMismatch,
    /// Observations must be nonnegative integers (quantized counts).
    NonIntegerObservation,
    /// Update produced NaN/Inf at the given iteration.
    NumericalFailure {
        iteration: usize,
    },
    EmptyInput,
    /// All latent-weight exponents were -inf.
    UndefinedWeight,
    InvalidParameter(&'static str),
    Init(MlnmfError),
}

impl fmt::Display for BnmfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BnmfError::ShapeMismatch => write!(f, "matrix shapes do not match"),
            BnmfError::NonIntegerObservation => {
                write!(f, "observations must be nonnegative integer counts")
            }
            BnmfError::NumericalFailure { iteration } => {
                write!(
                    f,
                    "non-finite value in variational update at iteration {iteration}"
                )
            }
            BnmfError::EmptyInput => write!(f, "input spectrogram is empty"),
            BnmfError::UndefinedWeight => write!(f, "all latent-weight exponents are -inf"),
            BnmfError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            BnmfError::Init(e) => write!(f, "initializer failed: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BnmfError {}

impl From<MlnmfError> for BnmfError {
    fn from(e: MlnmfError) -> Self {
        BnmfError::Init(e)
    }
}

/// Elementwise gamma parameters (shape, scale) over a matrix of random
/// variables. Mean is `shape · scale`; `E[log X] = ψ(shape) + ln(scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMatrix {
    pub shape: Mat,
    pub scale: Mat,
}

impl GammaMatrix {
    pub fn new(shape: Mat, scale: Mat) -> Self {
        assert_eq!(
            shape.shape(),
            scale.shape(),
            "gamma parameter shape mismatch"
        );
        debug_assert!(shape.as_slice().iter().all(|&v| v > 0.0));
        debug_assert!(scale.as_slice().iter().all(|&v| v > 0.0));
        GammaMatrix { shape, scale }
    }

    /// Constant shape with scale chosen so every mean equals `mean`.
    pub fn broad(rows: usize, cols: usize, shape: f64, mean: f64) -> Self {
        GammaMatrix {
            shape: Mat::filled(rows, cols, shape),
            scale: Mat::filled(rows, cols, mean.max(MEAN_FLOOR) / shape),
        }
    }

    /// Sharp gamma posteriors centered on the entries of `means`.
    pub fn from_point(means: &Mat, shape: f64) -> Self {
        GammaMatrix {
            shape: Mat::filled(means.rows(), means.cols(), shape),
            scale: means.map(|m| m.max(MEAN_FLOOR) / shape),
        }
    }

    pub fn rows(&self) -> usize {
        self.shape.rows()
    }

    pub fn cols(&self) -> usize {
        self.shape.cols()
    }

    /// Elementwise posterior mean `shape · scale`.
    pub fn mean(&self) -> Mat {
        self.shape.zip_map(&self.scale, |a, s| a * s)
    }

    /// Elementwise `E[log X] = ψ(shape) + ln(scale)`.
    pub fn elog(&self) -> Mat {
        self.shape.zip_map(&self.scale, |a, s| digamma(a) + s.ln())
    }
}

/// Variational posterior over basis, activations, and (implicitly through
/// the responsibilities) the latent counts.
#[derive(Debug, Clone)]
pub struct VbPosterior {
    pub basis: GammaMatrix,
    pub activations: GammaMatrix,
    pub elog_basis: Mat,
    pub elog_activations: Mat,
    /// Variational lower bound recorded once per iteration.
    pub bound_trace: Vec<f64>,
}

/// How the basis is treated during inference.
pub enum BasisSpec<'a> {
    /// Infer the full basis posterior under this prior.
    Free { prior: &'a GammaMatrix },
    /// Keep the entire basis posterior fixed (per-frame enhancement).
    Fixed { posterior: &'a GammaMatrix },
    /// First columns fixed (trained speech model), remaining columns free
    /// under a prior (online noise-basis adaptation).
    PartiallyFixed {
        fixed_posterior: &'a GammaMatrix,
        free_prior: &'a GammaMatrix,
    },
}

#[derive(Debug, Clone)]
pub struct VbOptions {
    pub max_iter: usize,
    /// Relative change of the bound that counts as converged.
    pub tol: f64,
}

impl Default for VbOptions {
    fn default() -> Self {
        VbOptions {
            max_iter: 200,
            tol: 1e-5,
        }
    }
}

/// Gamma KL divergence in shape/rate form.
fn gamma_kl(a: f64, rate: f64, a0: f64, rate0: f64) -> f64 {
    (a - a0) * digamma(a) - ln_gamma(a)
        + ln_gamma(a0)
        + a0 * (rate.ln() - rate0.ln())
        + a * (rate0 - rate) / rate
}

struct FactorState {
    shape: Mat,
    rate: Mat,
    mean: Mat,
    elog: Mat,
}

impl FactorState {
    fn from_posterior(g: &GammaMatrix) -> Self {
        let rate = g.scale.map(|s| 1.0 / s);
        FactorState {
            mean: g.mean(),
            elog: g.elog(),
            shape: g.shape.clone(),
            rate,
        }
    }

    fn into_gamma(self) -> GammaMatrix {
        let scale = self.rate.map(|r| 1.0 / r);
        GammaMatrix::new(self.shape, scale)
    }

    fn refresh_moments(&mut self, row: usize, col: usize) {
        let a = self.shape[(row, col)];
        let r = self.rate[(row, col)];
        self.mean[(row, col)] = a / r;
        self.elog[(row, col)] = digamma(a) - r.ln();
    }
}

/// Mean-field variational inference for the gamma-Poisson model.
///
/// `y` must hold nonnegative integer counts. Each iteration refreshes the
/// latent-count responsibilities, records the variational bound, then
/// updates the activation posterior and (where free) the basis posterior.
/// Terminates when the relative bound change drops below `opts.tol` or
/// after `opts.max_iter` iterations.
pub fn vb_infer(
    y: &Mat,
    basis: BasisSpec<'_>,
    activation_prior: &GammaMatrix,
    init: Option<&NmfFactors>,
    opts: &VbOptions,
) -> Result<VbPosterior, BnmfError> {
    let (k_bins, frames) = y.shape();
    if k_bins == 0 || frames == 0 {
        return Err(BnmfError::EmptyInput);
    }
    for &v in y.as_slice() {
        if v < 0.0 || v.fract() != 0.0 || !v.is_finite() {
            return Err(BnmfError::NonIntegerObservation);
        }
    }

    let (fixed_cols, rank) = match &basis {
        BasisSpec::Free { prior } => (0, prior.cols()),
        BasisSpec::Fixed { posterior } => (posterior.cols(), posterior.cols()),
        BasisSpec::PartiallyFixed {
            fixed_posterior,
            free_prior,
        } => (
            fixed_posterior.cols(),
            fixed_posterior.cols() + free_prior.cols(),
        ),
    };
    if rank == 0 {
        return Err(BnmfError::InvalidParameter(
            "basis must have at least one column",
        ));
    }
    if activation_prior.rows() != rank || activation_prior.cols() != frames {
        return Err(BnmfError::ShapeMismatch);
    }
    match &basis {
        BasisSpec::Free { prior } if prior.rows() != k_bins => {
            return Err(BnmfError::ShapeMismatch)
        }
        BasisSpec::Fixed { posterior } if posterior.rows() != k_bins => {
            return Err(BnmfError::ShapeMismatch)
        }
        BasisSpec::PartiallyFixed {
            fixed_posterior,
            free_prior,
        } if fixed_posterior.rows() != k_bins || free_prior.rows() != k_bins => {
            return Err(BnmfError::ShapeMismatch)
        }
        _ => {}
    }

    // Assemble the initial basis state and the prior (rates) for free columns.
    let mut basis_state = initial_basis_state(&basis, y, init, k_bins, rank);
    let (basis_prior_shape, basis_prior_rate) = basis_prior_arrays(&basis, k_bins, rank);

    // Initial activation posterior: supplied point estimates, or a
    // moderate-shape point at the prior mean. Starting from the raw prior
    // moments would stall coordinate ascent whenever shapes differ across
    // rows: a shape ≪ 1 puts E[log V] near -100, the first responsibility
    // pass then starves that row of counts, and the zero-count fixed point
    // is self-sustaining.
    let mut act_state = match init {
        Some(f) if f.activations.shape() == (rank, frames) => {
            FactorState::from_posterior(&GammaMatrix::from_point(&f.activations, INIT_SHAPE))
        }
        _ => FactorState::from_posterior(&GammaMatrix::from_point(
            &activation_prior.mean(),
            INIT_SHAPE,
        )),
    };
    let act_prior_rate = activation_prior.scale.map(|s| 1.0 / s);

    // Constant part of the Poisson log-likelihood.
    let lgamma_sum: f64 = y.as_slice().iter().map(|&v| ln_factorial(v)).sum();

    let mut bound_trace = Vec::new();
    let mut act_counts = Mat::zeros(frames, rank); // transposed: T×I
    let mut basis_counts = Mat::zeros(k_bins, rank);
    let mut exponents = vec![0.0; rank];

    for iteration in 0..opts.max_iter {
        // (a) Latent responsibilities p_kit ∝ exp(E[log B_ki] + E[log V_it]),
        // accumulated as Σ_k E[Z] (activations) and Σ_t E[Z] (basis).
        act_counts.as_mut_slice().fill(0.0);
        basis_counts.as_mut_slice().fill(0.0);
        let mut data_term = 0.0;
        for t in 0..frames {
            for k in 0..k_bins {
                let count = y[(k, t)];
                if count == 0.0 {
                    continue;
                }
                let elb_row = basis_state.elog.row(k);
                let mut max_e = f64::NEG_INFINITY;
                for i in 0..rank {
                    let e = elb_row[i] + act_state.elog[(i, t)];
                    exponents[i] = e;
                    if e > max_e {
                        max_e = e;
                    }
                }
                if !max_e.is_finite() {
                    return Err(BnmfError::NumericalFailure { iteration });
                }
                let mut norm = 0.0;
                for e in exponents.iter_mut() {
                    *e = (*e - max_e).exp();
                    norm += *e;
                }
                data_term += count * (max_e + norm.ln());
                let inv_norm = count / norm;
                let act_row = act_counts.row_mut(t);
                let basis_row = basis_counts.row_mut(k);
                for i in 0..rank {
                    let ez = exponents[i] * inv_norm;
                    act_row[i] += ez;
                    basis_row[i] += ez;
                }
            }
        }

        // (b) Bound at the current posteriors (responsibilities aligned).
        let eb_col_sums = basis_state.mean.col_sums();
        let ev_row_sums = act_state.mean.row_sums();
        let cross: f64 = eb_col_sums
            .iter()
            .zip(&ev_row_sums)
            .map(|(&b, &v)| b * v)
            .sum();
        let mut kl = 0.0;
        for i in 0..rank * frames {
            kl += gamma_kl(
                act_state.shape.as_slice()[i],
                act_state.rate.as_slice()[i],
                activation_prior.shape.as_slice()[i],
                act_prior_rate.as_slice()[i],
            );
        }
        if let (Some(ps), Some(pr)) = (&basis_prior_shape, &basis_prior_rate) {
            for k in 0..k_bins {
                for i in fixed_cols..rank {
                    kl += gamma_kl(
                        basis_state.shape[(k, i)],
                        basis_state.rate[(k, i)],
                        ps[(k, i - fixed_cols)],
                        pr[(k, i - fixed_cols)],
                    );
                }
            }
        }
        let bound = data_term - lgamma_sum - cross - kl;
        if !bound.is_finite() {
            return Err(BnmfError::NumericalFailure { iteration });
        }
        let converged = bound_trace
            .last()
            .is_some_and(|prev: &f64| (bound - prev).abs() <= opts.tol * prev.abs().max(1.0));
        bound_trace.push(bound);
        if converged {
            break;
        }

        // (c) Activation posterior: shape = φ + Σ_k E[Z], rate = φ/θ + Σ_k E[B].
        for i in 0..rank {
            let col_b = eb_col_sums[i];
            for t in 0..frames {
                let a = activation_prior.shape[(i, t)] + act_counts[(t, i)];
                let r = act_prior_rate[(i, t)] + col_b;
                if !(a > 0.0 && r > 0.0 && a.is_finite() && r.is_finite()) {
                    return Err(BnmfError::NumericalFailure { iteration });
                }
                act_state.shape[(i, t)] = a;
                act_state.rate[(i, t)] = r;
                act_state.refresh_moments(i, t);
            }
        }

        // (d) Basis posterior for free columns: shape = ψ + Σ_t E[Z],
        // rate = ψ/γ + Σ_t E[V] (with the just-updated activations).
        if fixed_cols < rank {
            let (ps, pr) = (
                basis_prior_shape.as_ref().expect("free basis has a prior"),
                basis_prior_rate.as_ref().expect("free basis has a prior"),
            );
            let ev_row_sums = act_state.mean.row_sums();
            for k in 0..k_bins {
                for i in fixed_cols..rank {
                    let a = ps[(k, i - fixed_cols)] + basis_counts[(k, i)];
                    let r = pr[(k, i - fixed_cols)] + ev_row_sums[i];
                    if !(a > 0.0 && r > 0.0 && a.is_finite() && r.is_finite()) {
                        return Err(BnmfError::NumericalFailure { iteration });
                    }
                    basis_state.shape[(k, i)] = a;
                    basis_state.rate[(k, i)] = r;
                    basis_state.refresh_moments(k, i);
                }
            }
        }
    }

    let elog_basis = basis_state.elog.clone();
    let elog_activations = act_state.elog.clone();
    Ok(VbPosterior {
        basis: basis_state.into_gamma(),
        activations: act_state.into_gamma(),
        elog_basis,
        elog_activations,
        bound_trace,
    })
}

fn initial_basis_state(
    basis: &BasisSpec<'_>,
    y: &Mat,
    init: Option<&NmfFactors>,
    k_bins: usize,
    rank: usize,
) -> FactorState {
    match basis {
        BasisSpec::Fixed { posterior } => FactorState::from_posterior(posterior),
        BasisSpec::Free { prior } => match init {
            Some(f) if f.basis.shape() == (k_bins, rank) => {
                FactorState::from_posterior(&GammaMatrix::from_point(&f.basis, INIT_SHAPE))
            }
            _ => {
                // Seed from column-normalized data so early responsibilities
                // reflect the data rather than a flat prior.
                let norm = (y.sum() / rank as f64).max(MEAN_FLOOR);
                let seed = Mat::from_fn(k_bins, rank, |k, i| {
                    let col = (k + i) % y.cols().max(1);
                    (y[(k, col)] / norm).max(1.0 / k_bins as f64)
                });
                FactorState::from_posterior(&GammaMatrix::from_point(&seed, prior.shape[(0, 0)]))
            }
        },
        BasisSpec::PartiallyFixed {
            fixed_posterior,
            free_prior,
        } => {
            let mut shape = Mat::zeros(k_bins, rank);
            let mut rate = Mat::zeros(k_bins, rank);
            let fixed = fixed_posterior.cols();
            for k in 0..k_bins {
                for i in 0..rank {
                    let (a, s) = if i < fixed {
                        (fixed_posterior.shape[(k, i)], fixed_posterior.scale[(k, i)])
                    } else if let Some(f) = init {
                        debug_assert_eq!(f.basis.cols(), rank - fixed);
                        (
                            INIT_SHAPE,
                            f.basis[(k, i - fixed)].max(MEAN_FLOOR) / INIT_SHAPE,
                        )
                    } else {
                        (
                            free_prior.shape[(k, i - fixed)],
                            free_prior.scale[(k, i - fixed)],
                        )
                    };
                    shape[(k, i)] = a;
                    rate[(k, i)] = 1.0 / s;
                }
            }
            let mut st = FactorState {
                mean: Mat::zeros(k_bins, rank),
                elog: Mat::zeros(k_bins, rank),
                shape,
                rate,
            };
            for k in 0..k_bins {
                for i in 0..rank {
                    st.refresh_moments(k, i);
                }
            }
            st
        }
    }
}

/// Prior shape/rate arrays covering the free basis columns, if any.
fn basis_prior_arrays(
    basis: &BasisSpec<'_>,
    _k_bins: usize,
    _rank: usize,
) -> (Option<Mat>, Option<Mat>) {
    match basis {
        BasisSpec::Free { prior } => (
            Some(prior.shape.clone()),
            Some(prior.scale.map(|s| 1.0 / s)),
        ),
        BasisSpec::Fixed { .. } => (None, None),
        BasisSpec::PartiallyFixed { free_prior, .. } => (
            Some(free_prior.shape.clone()),
            Some(free_prior.scale.map(|s| 1.0 / s)),
        ),
    }
}

/// Share of a count expected to come from the speech bases: evaluates the
/// simplex weights `p_i ∝ exp(E[log B_ki] + E[log V_it])` in log-sum-exp
/// form and returns the total weight of the first `speech_count` entries
/// together with the per-basis weights.
pub fn expected_latent_weights(
    elog_basis_row: &[f64],
    elog_activation_col: &[f64],
    speech_count: usize,
) -> Result<(f64, Vec<f64>), BnmfError> {
    if elog_basis_row.len() != elog_activation_col.len() || elog_basis_row.is_empty() {
        return Err(BnmfError::ShapeMismatch);
    }
    let mut exponents: Vec<f64> = elog_basis_row
        .iter()
        .zip(elog_activation_col)
        .map(|(&b, &v)| b + v)
        .collect();
    let max_e = exponents.iter().fold(f64::NEG_INFINITY, |m, &e| m.max(e));
    if !max_e.is_finite() {
        return Err(BnmfError::UndefinedWeight);
    }
    let mut norm = 0.0;
    for e in exponents.iter_mut() {
        *e = (*e - max_e).exp();
        norm += *e;
    }
    for e in exponents.iter_mut() {
        *e /= norm;
    }
    let speech_weight = exponents[..speech_count.min(exponents.len())].iter().sum();
    Ok((speech_weight, exponents))
}

/// A trained source model: the basis posterior plus the metadata needed to
/// apply it consistently at enhancement time.
#[derive(Debug, Clone, PartialEq)]
pub struct BnmfModel {
    pub label: String,
    /// K×I posterior over the basis matrix.
    pub basis_posterior: GammaMatrix,
    /// Learned activation shape for this source (mean posterior shape).
    pub activation_shape: f64,
    pub sample_rate: u32,
    pub frame_len: usize,
    /// Quantization peak the training spectrogram was scaled to.
    pub target_max: f64,
}

impl BnmfModel {
    pub fn bins(&self) -> usize {
        self.basis_posterior.rows()
    }

    pub fn num_basis(&self) -> usize {
        self.basis_posterior.cols()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub seed: u64,
    /// KL-NMF iterations used to initialize the posterior means.
    pub kl_init_iterations: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Broad basis prior: shape ψ, mean 1/K.
    pub basis_prior_shape: f64,
    /// Broad activation prior: shape φ, mean scaled to the data.
    pub activation_prior_shape: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            seed: 0,
            kl_init_iterations: 30,
            max_iter: 200,
            tol: 1e-5,
            basis_prior_shape: 0.1,
            activation_prior_shape: 0.1,
        }
    }
}

/// Train a source model on a quantized spectrogram: sparse broad priors,
/// KL-NMF initialization of the posterior means, variational Bayes to
/// convergence. The learned activation shape is the mean posterior shape
/// over all NMF coefficients.
pub fn train_model(
    spectrogram: &MagnitudeSpectrogram,
    num_basis: usize,
    label: &str,
    opts: &TrainOptions,
) -> Result<BnmfModel, BnmfError> {
    let y = &spectrogram.magnitudes;
    if y.is_empty() {
        return Err(BnmfError::EmptyInput);
    }
    if num_basis == 0 {
        return Err(BnmfError::InvalidParameter("num_basis must be ≥ 1"));
    }
    let (k_bins, frames) = y.shape();
    let y_mean = y.sum() / (k_bins * frames) as f64;

    let basis_prior = GammaMatrix::broad(
        k_bins,
        num_basis,
        opts.basis_prior_shape,
        1.0 / k_bins as f64,
    );
    let activation_prior = GammaMatrix::broad(
        num_basis,
        frames,
        opts.activation_prior_shape,
        (y_mean * k_bins as f64 / num_basis as f64).max(MEAN_FLOOR),
    );

    let init = mlnmf::kl_nmf(y, num_basis, opts.kl_init_iterations, None, opts.seed)?;
    let vb_opts = VbOptions {
        max_iter: opts.max_iter,
        tol: opts.tol,
    };
    let mut posterior = vb_infer(
        y,
        BasisSpec::Free {
            prior: &basis_prior,
        },
        &activation_prior,
        Some(&init.factors),
        &vb_opts,
    )?;

    // Re-seed collapsed basis columns from the worst-reconstructed data
    // column, then refine once more.
    if let Some(fixed) = reseed_collapsed_columns(y, &posterior) {
        posterior = vb_infer(
            y,
            BasisSpec::Free {
                prior: &basis_prior,
            },
            &activation_prior,
            Some(&fixed),
            &vb_opts,
        )?;
    }

    let act_shape_mean = posterior.activations.shape.sum()
        / (posterior.activations.shape.rows() * posterior.activations.shape.cols()) as f64;

    Ok(BnmfModel {
        label: String::from(label),
        basis_posterior: posterior.basis,
        activation_shape: act_shape_mean,
        sample_rate: spectrogram.sample_rate,
        frame_len: spectrogram.frame_len,
        target_max: spectrogram.magnitudes.max().max(1.0),
    })
}

/// Detect basis columns whose posterior mean collapsed below 1e-10 of the
/// median column mean; return point initializers with those columns
/// replaced by the data column with the highest reconstruction error.
fn reseed_collapsed_columns(y: &Mat, posterior: &VbPosterior) -> Option<NmfFactors> {
    let basis_mean = posterior.basis.mean();
    let act_mean = posterior.activations.mean();
    let rank = basis_mean.cols();
    let col_means: Vec<f64> = basis_mean
        .col_sums()
        .iter()
        .map(|s| s / basis_mean.rows() as f64)
        .collect();
    let mut sorted = col_means.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite means"));
    let median = sorted[rank / 2];
    let collapsed: Vec<usize> = (0..rank)
        .filter(|&i| col_means[i] < 1e-10 * median)
        .collect();
    if collapsed.is_empty() {
        return None;
    }

    let recon = basis_mean.matmul(&act_mean);
    let mut worst_col = 0;
    let mut worst_err = -1.0;
    for t in 0..y.cols() {
        let err: f64 = (0..y.rows())
            .map(|k| {
                let d = y[(k, t)] - recon[(k, t)];
                d * d
            })
            .sum();
        if err > worst_err {
            worst_err = err;
            worst_col = t;
        }
    }
    let replacement = y.col(worst_col);
    let total: f64 = replacement.iter().sum::<f64>().max(1.0);
    let mut fixed_basis = basis_mean;
    for &i in &collapsed {
        for k in 0..y.rows() {
            fixed_basis[(k, i)] = (replacement[k] / total).max(1.0 / y.rows() as f64 * 1e-3);
        }
    }
    Some(NmfFactors {
        basis: fixed_basis,
        activations: act_mean,
    })
}
