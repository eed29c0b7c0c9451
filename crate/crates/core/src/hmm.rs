//! BNMF-HMM enhancement: each HMM state is one noise type whose output
//! density is a gamma-Poisson NMF model sharing a universal speech model.
//!
//! Per frame, every state runs fixed-basis variational inference on the
//! quantized magnitude column, yielding a state-conditional log-likelihood
//! (Poisson at the posterior means) and a state-conditional MMSE speech
//! estimate. A causal forward recursion weighs the per-state estimates and
//! doubles as the noise classifier. With a single state this reduces to the
//! supervised BNMF enhancer; adding an online learner adapts the noise
//! basis from the mixture itself.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::bnmf::{
    expected_latent_weights, vb_infer, BasisSpec, BnmfError, BnmfModel, GammaMatrix, VbOptions,
    VbPosterior,
};
use crate::mat::Mat;
use crate::online::{
    estimate_long_term_snr_samples, ActivationPriorState, AlphaCurve, OnlineConfig, OnlineError,
    OnlineLearner,
};
use crate::signal::{self, AudioSignal, ComplexSpectrogram, SignalError};
use crate::special::ln_factorial;

#[derive(Debug, Clone, PartialEq)]
pub enum HmmError {
    /// Models disagree on bins, sample rate, or frame length.
    ModelMismatch(&'static str),
    /// Transition matrix rows or the initial vector do not form simplexes.
    InvalidDistribution,
    /// Every state has zero posterior weight (all likelihoods -inf).
    AllStatesImpossible,
    DimensionMismatch,
    RateMismatch {
        expected: u32,
        got: u32,
    },
    Bnmf(BnmfError),
    Online(OnlineError),
    Signal(SignalError),
}

impl fmt::Display for HmmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HmmError::ModelMismatch(msg) => write!(f, "model mismatch: {msg}"),
            HmmError::InvalidDistribution => {
                write!(f, "transition rows and initial vector must sum to 1")
            }
            HmmError::AllStatesImpossible => write!(f, "all state posteriors vanished"),
            HmmError::DimensionMismatch => write!(f, "dimension mismatch"),
            HmmError::RateMismatch { expected, got } => {
                write!(
                    f,
                    "sample rate {got} Hz does not match models ({expected} Hz)"
                )
            }
            HmmError::Bnmf(e) => write!(f, "inference failed: {e}"),
            HmmError::Online(e) => write!(f, "online learning failed: {e}"),
            HmmError::Signal(e) => write!(f, "signal processing failed: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for HmmError {}

impl From<BnmfError> for HmmError {
    fn from(e: BnmfError) -> Self {
        HmmError::Bnmf(e)
    }
}

impl From<OnlineError> for HmmError {
    fn from(e: OnlineError) -> Self {
        HmmError::Online(e)
    }
}

impl From<SignalError> for HmmError {
    fn from(e: SignalError) -> Self {
        HmmError::Signal(e)
    }
}

/// M noise models plus the shared speech model and Markov-chain parameters.
#[derive(Debug, Clone)]
pub struct HmmDenoiser {
    pub speech_model: BnmfModel,
    pub noise_models: Vec<BnmfModel>,
    /// M×M row-stochastic transition matrix.
    pub transition: Mat,
    /// Initial state distribution.
    pub initial: Vec<f64>,
    /// Exponential smoothing coefficient for the classifier readout, in [0, 1).
    pub classifier_smoothing: f64,
}

impl HmmDenoiser {
    /// Build with the standard transition structure: `diagonal` on the
    /// diagonal, the rest spread evenly, uniform initial probabilities.
    pub fn new(
        speech_model: BnmfModel,
        noise_models: Vec<BnmfModel>,
        diagonal: f64,
        classifier_smoothing: f64,
    ) -> Result<Self, HmmError> {
        let m = noise_models.len();
        if m == 0 {
            return Err(HmmError::ModelMismatch("at least one noise model required"));
        }
        let transition = if m == 1 {
            Mat::filled(1, 1, 1.0)
        } else {
            if !(0.0..=1.0).contains(&diagonal) {
                return Err(HmmError::InvalidDistribution);
            }
            let off = (1.0 - diagonal) / (m - 1) as f64;
            Mat::from_fn(m, m, |r, c| if r == c { diagonal } else { off })
        };
        let initial = vec![1.0 / m as f64; m];
        Self::with_transition(
            speech_model,
            noise_models,
            transition,
            initial,
            classifier_smoothing,
        )
    }

    /// Build with explicit transition and initial distributions.
    pub fn with_transition(
        speech_model: BnmfModel,
        noise_models: Vec<BnmfModel>,
        transition: Mat,
        initial: Vec<f64>,
        classifier_smoothing: f64,
    ) -> Result<Self, HmmError> {
        let m = noise_models.len();
        if m == 0 {
            return Err(HmmError::ModelMismatch("at least one noise model required"));
        }
        for nm in &noise_models {
            if nm.bins() != speech_model.bins() {
                return Err(HmmError::ModelMismatch("frequency bins differ"));
            }
            if nm.sample_rate != speech_model.sample_rate {
                return Err(HmmError::ModelMismatch("sample rates differ"));
            }
            if nm.frame_len != speech_model.frame_len {
                return Err(HmmError::ModelMismatch("frame lengths differ"));
            }
        }
        if transition.shape() != (m, m) || initial.len() != m {
            return Err(HmmError::DimensionMismatch);
        }
        for r in 0..m {
            let s: f64 = transition.row(r).iter().sum();
            if (s - 1.0).abs() > 1e-12 || transition.row(r).iter().any(|&v| v < 0.0) {
                return Err(HmmError::InvalidDistribution);
            }
        }
        let init_sum: f64 = initial.iter().sum();
        if (init_sum - 1.0).abs() > 1e-12 || initial.iter().any(|&v| v < 0.0) {
            return Err(HmmError::InvalidDistribution);
        }
        if !(0.0..1.0).contains(&classifier_smoothing) {
            return Err(HmmError::InvalidDistribution);
        }
        Ok(HmmDenoiser {
            speech_model,
            noise_models,
            transition,
            initial,
            classifier_smoothing,
        })
    }

    /// Single-state denoiser whose noise basis starts flat and is adapted
    /// online; `phi_noise` is the activation shape for the online noise.
    pub fn for_online_learning(
        speech_model: BnmfModel,
        config: &OnlineConfig,
        phi_noise: f64,
    ) -> Result<Self, HmmError> {
        let k = speech_model.bins();
        let placeholder = BnmfModel {
            label: String::from("online-noise"),
            basis_posterior: GammaMatrix::broad(k, config.noise_rank, 0.1, 1.0 / k as f64),
            activation_shape: phi_noise,
            sample_rate: speech_model.sample_rate,
            frame_len: speech_model.frame_len,
            target_max: config.target_max,
        };
        Self::new(speech_model, vec![placeholder], 0.99, 0.95)
    }

    pub fn num_states(&self) -> usize {
        self.noise_models.len()
    }

    pub fn bins(&self) -> usize {
        self.speech_model.bins()
    }
}

/// Forward-recursion state: predictive and filtered state distributions
/// plus the accumulated log evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardState {
    /// f(x_t | y_1..t-1)
    pub predictive: Vec<f64>,
    /// f(x_t | y_1..t)
    pub posterior: Vec<f64>,
    /// Running log normalizer Σ_t ln f(y_t | y_1..t-1).
    pub log_scale: f64,
}

impl ForwardState {
    pub fn from_initial(initial: &[f64]) -> Self {
        ForwardState {
            predictive: initial.to_vec(),
            posterior: initial.to_vec(),
            log_scale: 0.0,
        }
    }
}

/// One forward step: `predictive = transitionᵀ · posterior_prev`, then
/// `posterior ∝ exp(log_likelihood) ⊙ predictive`, normalized in the log
/// domain.
pub fn forward_update(
    state: &ForwardState,
    per_state_log_likelihoods: &[f64],
    transition: &Mat,
) -> Result<ForwardState, HmmError> {
    let m = state.posterior.len();
    if per_state_log_likelihoods.len() != m || transition.shape() != (m, m) {
        return Err(HmmError::DimensionMismatch);
    }
    let mut predictive = vec![0.0; m];
    for i in 0..m {
        let p = state.posterior[i];
        if p == 0.0 {
            continue;
        }
        for (j, pred) in predictive.iter_mut().enumerate() {
            *pred += transition[(i, j)] * p;
        }
    }
    let mut log_weights = vec![0.0; m];
    let mut max_w = f64::NEG_INFINITY;
    for j in 0..m {
        let w = per_state_log_likelihoods[j] + predictive[j].ln();
        log_weights[j] = w;
        if w > max_w {
            max_w = w;
        }
    }
    if !max_w.is_finite() {
        return Err(HmmError::AllStatesImpossible);
    }
    let mut norm = 0.0;
    let mut posterior = vec![0.0; m];
    for j in 0..m {
        let w = (log_weights[j] - max_w).exp();
        posterior[j] = w;
        norm += w;
    }
    for p in posterior.iter_mut() {
        *p /= norm;
    }
    Ok(ForwardState {
        predictive,
        posterior,
        log_scale: state.log_scale + max_w + norm.ln(),
    })
}

/// Concatenate speech and noise basis posteriors (speech columns first).
pub fn concat_basis(speech: &GammaMatrix, noise: &GammaMatrix) -> Result<GammaMatrix, HmmError> {
    if speech.rows() != noise.rows() {
        return Err(HmmError::DimensionMismatch);
    }
    let k = speech.rows();
    let total = speech.cols() + noise.cols();
    let pick = |m_s: &Mat, m_n: &Mat, r: usize, c: usize| {
        if c < speech.cols() {
            m_s[(r, c)]
        } else {
            m_n[(r, c - speech.cols())]
        }
    };
    let shape = Mat::from_fn(k, total, |r, c| pick(&speech.shape, &noise.shape, r, c));
    let scale = Mat::from_fn(k, total, |r, c| pick(&speech.scale, &noise.scale, r, c));
    Ok(GammaMatrix::new(shape, scale))
}

/// State-conditional log-likelihood of one quantized frame, with the frame
/// posterior it was evaluated at.
///
/// Runs fixed-basis variational inference on the column, then evaluates the
/// independent-Poisson likelihood at the posterior means:
/// `ln f(y|x) = Σ_k [y_k ln λ_k − λ_k − ln(y_k!)]` with `λ = E[B]·E[V]`.
pub fn state_likelihood(
    y_t: &[f64],
    basis_posterior: &GammaMatrix,
    activation_prior: &GammaMatrix,
    vb: &VbOptions,
) -> Result<(f64, VbPosterior), HmmError> {
    if basis_posterior.rows() != y_t.len() {
        return Err(HmmError::DimensionMismatch);
    }
    let y = Mat::column(y_t);
    let posterior = vb_infer(
        &y,
        BasisSpec::Fixed {
            posterior: basis_posterior,
        },
        activation_prior,
        None,
        vb,
    )?;
    let basis_mean = posterior.basis.mean();
    let act_mean = posterior.activations.mean();
    let mut log_likelihood = 0.0;
    for k in 0..y_t.len() {
        let lambda: f64 = basis_mean
            .row(k)
            .iter()
            .zip(act_mean.as_slice())
            .map(|(&b, &v)| b * v)
            .sum();
        let count = y_t[k];
        if count > 0.0 {
            log_likelihood += count * lambda.max(1e-300).ln() - lambda - ln_factorial(count);
        } else {
            log_likelihood -= lambda;
        }
    }
    Ok((log_likelihood, posterior))
}

/// State-conditional MMSE estimate `ŝ_k = w_k · y_k` where `w_k` is the
/// speech share of the expected latent counts.
pub fn mmse_state_estimate(
    y_t: &[f64],
    frame_posterior: &VbPosterior,
    speech_count: usize,
) -> Result<Vec<f64>, HmmError> {
    if frame_posterior.elog_basis.rows() != y_t.len()
        || frame_posterior.elog_activations.cols() != 1
    {
        return Err(HmmError::DimensionMismatch);
    }
    let elog_act = frame_posterior.elog_activations.col(0);
    let mut out = vec![0.0; y_t.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let (w, _) =
            expected_latent_weights(frame_posterior.elog_basis.row(k), &elog_act, speech_count)?;
        *o = w * y_t[k];
    }
    Ok(out)
}

/// Noise activation shapes from training are only usable as enhancement
/// priors when they sit at a workable scale; posterior shapes grow with the
/// quantized count scale, so values outside this band are replaced by
/// [`PHI_NOISE_DEFAULT`].
pub const PHI_NOISE_BAND: (f64, f64) = (0.05, 50.0);
pub const PHI_NOISE_DEFAULT: f64 = 4.0;

/// Enhancement configuration shared by the supervised, HMM, and online modes.
#[derive(Debug, Clone)]
pub struct EnhanceConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub target_max: f64,
    /// Flat activation shape for the speech coefficients (≪ 1).
    pub phi_speech: f64,
    /// Overrides the per-model noise activation shape if set.
    pub phi_noise_override: Option<f64>,
    /// Per-frame variational inference budget.
    pub vb: VbOptions,
    pub alpha_curve: AlphaCurve,
    /// Long-term SNR assumed before the first windowed estimate.
    pub initial_snr_db: f64,
    /// Trailing window for SNR tracking, seconds.
    pub snr_window_secs: f64,
    /// How often the SNR estimate (hence α) is refreshed, seconds.
    pub snr_period_secs: f64,
    /// Enables causal online noise-basis learning (single-state only).
    pub online: Option<OnlineConfig>,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        EnhanceConfig {
            frame_len: signal::DEFAULT_FRAME_LEN,
            hop: signal::DEFAULT_HOP,
            target_max: signal::DEFAULT_TARGET_MAX,
            phi_speech: 0.01,
            phi_noise_override: None,
            vb: VbOptions {
                max_iter: 50,
                tol: 1e-5,
            },
            alpha_curve: AlphaCurve::default(),
            initial_snr_db: 0.0,
            snr_window_secs: 10.0,
            snr_period_secs: 1.0,
            online: None,
        }
    }
}

struct StateParams {
    basis: GammaMatrix,
    speech_count: usize,
}

/// Per-frame result of the enhancement loop.
pub struct FrameOutcome {
    /// MMSE speech magnitude estimate, in quantized count units.
    pub s_hat: Vec<f64>,
    /// Smoothed per-state posterior (classifier readout).
    pub class_posterior: Vec<f64>,
    /// Raw forward posterior for this frame.
    pub raw_posterior: Vec<f64>,
}

/// Causal per-frame enhancement state machine. Feed quantized magnitude
/// columns in order; the forward recursion, the per-state activation-prior
/// recursions, and the classifier smoothing all advance strictly frame by
/// frame.
pub struct EnhanceSession<'a> {
    denoiser: &'a HmmDenoiser,
    states: Vec<StateParams>,
    priors: Vec<ActivationPriorState>,
    forward: ForwardState,
    smoothed_class: Option<Vec<f64>>,
    vb: VbOptions,
    frames_processed: usize,
}

impl<'a> EnhanceSession<'a> {
    pub fn new(denoiser: &'a HmmDenoiser, config: &EnhanceConfig) -> Result<Self, HmmError> {
        if !(config.phi_speech > 0.0) {
            return Err(HmmError::ModelMismatch("phi_speech must be positive"));
        }
        let speech = &denoiser.speech_model;
        let mut states = Vec::with_capacity(denoiser.num_states());
        let mut priors = Vec::with_capacity(denoiser.num_states());
        let initial_alpha = config.alpha_curve.alpha_for_snr(config.initial_snr_db);
        for nm in &denoiser.noise_models {
            let basis = concat_basis(&speech.basis_posterior, &nm.basis_posterior)?;
            let speech_count = speech.num_basis();
            let phi_noise = config.phi_noise_override.unwrap_or(
                if (PHI_NOISE_BAND.0..=PHI_NOISE_BAND.1).contains(&nm.activation_shape) {
                    nm.activation_shape
                } else {
                    PHI_NOISE_DEFAULT
                },
            );
            if !(phi_noise > 0.0) {
                return Err(HmmError::ModelMismatch(
                    "noise activation shape must be positive",
                ));
            }
            let mut phi = vec![config.phi_speech; speech_count];
            phi.extend(vec![phi_noise; nm.num_basis()]);
            states.push(StateParams {
                basis,
                speech_count,
            });
            priors.push(ActivationPriorState::new(phi, speech_count, initial_alpha));
        }
        Ok(EnhanceSession {
            denoiser,
            states,
            priors,
            forward: ForwardState::from_initial(&denoiser.initial),
            smoothed_class: None,
            vb: config.vb.clone(),
            frames_processed: 0,
        })
    }

    /// Swap in a new noise basis posterior (online adaptation, M = 1).
    pub fn set_noise_basis(&mut self, noise_basis: &GammaMatrix) -> Result<(), HmmError> {
        if self.states.len() != 1 {
            return Err(HmmError::ModelMismatch(
                "online basis swapping requires a single state",
            ));
        }
        let speech = &self.denoiser.speech_model.basis_posterior;
        if noise_basis.cols() != self.states[0].basis.cols() - speech.cols() {
            return Err(HmmError::DimensionMismatch);
        }
        self.states[0].basis = concat_basis(speech, noise_basis)?;
        Ok(())
    }

    /// Update every state's prior-smoothing factor.
    pub fn set_alpha(&mut self, alpha: f64) {
        for p in self.priors.iter_mut() {
            p.set_alpha(alpha);
        }
    }

    pub fn frames_processed(&self) -> usize {
        self.frames_processed
    }

    pub fn forward_state(&self) -> &ForwardState {
        &self.forward
    }

    /// Process one quantized magnitude column (`gain` is its quantization
    /// gain) and return the MMSE estimate with the classifier posteriors.
    pub fn enhance_frame(&mut self, y_t: &[f64], gain: f64) -> Result<FrameOutcome, HmmError> {
        Ok(self.enhance_frame_detailed(y_t, gain)?.0)
    }

    /// [`EnhanceSession::enhance_frame`] plus the per-state frame posteriors,
    /// for diagnostics and classification research.
    pub fn enhance_frame_detailed(
        &mut self,
        y_t: &[f64],
        gain: f64,
    ) -> Result<(FrameOutcome, Vec<VbPosterior>), HmmError> {
        let k_bins = self.denoiser.bins();
        if y_t.len() != k_bins {
            return Err(HmmError::DimensionMismatch);
        }
        let m = self.states.len();

        // Seed the activation-prior recursions from the first frame's scale.
        if !self.priors[0].is_initialized() {
            let mean_count = y_t.iter().sum::<f64>() / k_bins as f64;
            for (state, prior) in self.states.iter().zip(self.priors.iter_mut()) {
                let rank = state.basis.cols();
                let theta = (mean_count * k_bins as f64 / rank as f64 / gain).max(1e-9);
                prior.initialize(vec![theta; rank]);
            }
        }

        let mut log_likelihoods = vec![0.0; m];
        let mut posteriors = Vec::with_capacity(m);
        for x in 0..m {
            let act_prior = self.priors[x].prior_for_frame(gain);
            let (ll, post) = state_likelihood(y_t, &self.states[x].basis, &act_prior, &self.vb)?;
            log_likelihoods[x] = ll;
            posteriors.push(post);
        }

        let new_forward =
            forward_update(&self.forward, &log_likelihoods, &self.denoiser.transition)?;
        let weights = &new_forward.posterior;

        let mut s_hat = vec![0.0; k_bins];
        for x in 0..m {
            if weights[x] == 0.0 {
                continue;
            }
            let estimate = mmse_state_estimate(y_t, &posteriors[x], self.states[x].speech_count)?;
            for (acc, e) in s_hat.iter_mut().zip(&estimate) {
                *acc += weights[x] * e;
            }
        }

        // Advance each state's activation-prior recursion with its own
        // state-conditional posterior, in de-quantized units.
        for (prior, post) in self.priors.iter_mut().zip(&posteriors) {
            let means: Vec<f64> = post
                .activations
                .mean()
                .col(0)
                .iter()
                .map(|&v| v / gain)
                .collect();
            prior.update(&means);
        }

        let gamma = self.denoiser.classifier_smoothing;
        let smoothed = match self.smoothed_class.take() {
            None => weights.clone(),
            Some(mut prev) => {
                let mut total = 0.0;
                for (p, &w) in prev.iter_mut().zip(weights) {
                    *p = gamma * *p + (1.0 - gamma) * w;
                    total += *p;
                }
                for p in prev.iter_mut() {
                    *p /= total;
                }
                prev
            }
        };
        self.smoothed_class = Some(smoothed.clone());
        self.forward = new_forward;
        self.frames_processed += 1;

        Ok((
            FrameOutcome {
                s_hat,
                class_posterior: smoothed,
                raw_posterior: self.forward.posterior.clone(),
            },
            posteriors,
        ))
    }
}

/// One accepted online basis update.
pub struct BasisSnapshot {
    /// Frame index from which this basis is in effect.
    pub frame: usize,
    /// Flattened K×Iⁿ posterior mean.
    pub basis_mean: Vec<f64>,
    /// Earliest source-frame index among the most recently promoted
    /// buffer columns (adaptation provenance).
    pub newest_promotion_start: Option<usize>,
}

/// Full enhancement result.
pub struct EnhanceOutcome {
    pub enhanced: AudioSignal,
    /// M×T smoothed class posteriors, one column per frame.
    pub class_trace: Mat,
    pub frames: usize,
    /// Most recent long-term SNR estimate, if one was made.
    pub long_term_snr_db: Option<f64>,
    /// Online basis updates skipped because inference failed (the previous
    /// basis was kept).
    pub diverged_updates: usize,
    /// Online mode only: the noise-basis posterior mean after each
    /// accepted update.
    pub noise_basis_trace: Vec<BasisSnapshot>,
}

/// Enhance a full 16 kHz signal with a causal frame loop:
/// quantize each STFT column, run the per-frame MMSE estimator, de-quantize,
/// and resynthesize with the noisy phase. The long-term SNR is re-estimated
/// every `snr_period_secs` over a trailing window and mapped to the
/// prior-smoothing factor α; with `config.online` set, the noise basis is
/// adapted from the buffered low-energy frames as the signal streams.
pub fn enhance_file(
    denoiser: &HmmDenoiser,
    noisy: &AudioSignal,
    config: &EnhanceConfig,
) -> Result<EnhanceOutcome, HmmError> {
    let expected_rate = denoiser.speech_model.sample_rate;
    if noisy.sample_rate != expected_rate {
        return Err(HmmError::RateMismatch {
            expected: expected_rate,
            got: noisy.sample_rate,
        });
    }
    if config.online.is_some() && denoiser.num_states() != 1 {
        return Err(HmmError::ModelMismatch(
            "online mode requires a single state",
        ));
    }

    let spec = signal::stft(noisy, config.frame_len, config.hop)?;
    if spec.bins != denoiser.bins() {
        return Err(HmmError::ModelMismatch(
            "frame length does not match the models",
        ));
    }
    let k_bins = spec.bins;
    let frames = spec.frames;

    // Raw magnitudes and phases, shared across the loop.
    let mut magnitudes = Mat::zeros(k_bins, frames);
    let mut phases = Mat::zeros(k_bins, frames);
    for k in 0..k_bins {
        for t in 0..frames {
            let v: Complex64 = spec.at(k, t);
            magnitudes[(k, t)] = v.norm();
            phases[(k, t)] = v.im.atan2(v.re);
        }
    }

    let mut session = EnhanceSession::new(denoiser, config)?;
    let mut noise_basis_trace: Vec<BasisSnapshot> = Vec::new();
    let mut learner = match &config.online {
        Some(online_cfg) => {
            let l = OnlineLearner::new(&denoiser.speech_model, online_cfg.clone())?;
            // The session must start from the same flat basis the learner
            // reports before its first update.
            session.set_noise_basis(l.noise_basis())?;
            noise_basis_trace.push(BasisSnapshot {
                frame: 0,
                basis_mean: l.noise_basis().mean().as_slice().to_vec(),
                newest_promotion_start: None,
            });
            Some(l)
        }
        None => None,
    };

    let samples_per_period = (config.snr_period_secs * expected_rate as f64) as usize;
    let window_samples = (config.snr_window_secs * expected_rate as f64) as usize;
    let min_snr_samples = expected_rate as usize; // 1 s
    let mut next_snr_boundary = samples_per_period.max(1);
    let mut last_snr: Option<f64> = None;

    let mut enhanced_mag = Mat::zeros(k_bins, frames);
    let mut class_trace = Mat::zeros(denoiser.num_states(), frames);
    let mut counts = vec![0.0; k_bins];
    let mut diverged_updates = 0usize;

    for t in 0..frames {
        // Causal α refresh: only samples strictly before this frame.
        let consumed = t * config.hop;
        while consumed >= next_snr_boundary {
            if next_snr_boundary >= min_snr_samples {
                let lo = next_snr_boundary.saturating_sub(window_samples);
                let snr = estimate_long_term_snr_samples(&noisy.samples[lo..next_snr_boundary]);
                session.set_alpha(config.alpha_curve.alpha_for_snr(snr));
                last_snr = Some(snr);
            }
            next_snr_boundary += samples_per_period.max(1);
        }

        let mut peak = 0.0_f64;
        for k in 0..k_bins {
            peak = peak.max(magnitudes[(k, t)]);
        }
        let gain = if peak > 0.0 {
            config.target_max / peak
        } else {
            1.0
        };
        for k in 0..k_bins {
            counts[k] = (magnitudes[(k, t)] * gain).round();
        }

        let outcome = session.enhance_frame(&counts, gain)?;
        for k in 0..k_bins {
            enhanced_mag[(k, t)] = outcome.s_hat[k] / gain;
        }
        for (x, &c) in outcome.class_posterior.iter().enumerate() {
            class_trace[(x, t)] = c;
        }

        if let Some(l) = learner.as_mut() {
            let raw_frame: Vec<f64> = (0..k_bins).map(|k| magnitudes[(k, t)]).collect();
            if l.push_frame(raw_frame)? {
                if l.update_noise_basis()? {
                    session.set_noise_basis(l.noise_basis())?;
                    noise_basis_trace.push(BasisSnapshot {
                        frame: t + 1,
                        basis_mean: l.noise_basis().mean().as_slice().to_vec(),
                        newest_promotion_start: l.buffers().newest_promotion_start(),
                    });
                } else {
                    diverged_updates += 1;
                }
            }
        }
    }

    let rebuilt = ComplexSpectrogram::from_magnitude_phase(
        &enhanced_mag,
        &phases,
        config.frame_len,
        config.hop,
        noisy.sample_rate,
    )?;
    let mut enhanced = signal::istft(&rebuilt)?;
    enhanced.samples.resize(noisy.len(), 0.0);

    Ok(EnhanceOutcome {
        enhanced,
        class_trace,
        frames,
        long_term_snr_db: last_snr,
        diverged_updates,
        noise_basis_trace,
    })
}
