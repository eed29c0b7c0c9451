//! Flat `key = value` configuration with CLI-flag override precedence.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; blank
//! lines are ignored. Keys are listed in [`Settings::apply`]. Unknown keys
//! are an error so typos fail loudly before any output is written.

use std::fs;
use std::path::Path;

use bnmf_core::bnmf::VbOptions;
use bnmf_core::hmm::EnhanceConfig;
use bnmf_core::online::{AlphaCurve, OnlineConfig};
use bnmf_core::signal;

use crate::CliError;

/// Every tunable of the pipeline, at its documented default.
#[derive(Debug, Clone)]
pub struct Settings {
    pub frame_len: usize,
    pub hop: usize,
    pub target_max: f64,
    pub seed: u64,
    // Training
    pub train_max_iter: usize,
    pub train_tol: f64,
    pub kl_init_iterations: usize,
    pub basis_prior_shape: f64,
    pub activation_prior_shape: f64,
    // Enhancement
    pub phi_speech: f64,
    pub phi_noise: Option<f64>,
    pub vb_max_iter: usize,
    pub vb_tol: f64,
    pub transition_diag: f64,
    pub classifier_smoothing: f64,
    pub initial_snr_db: f64,
    pub snr_window_secs: f64,
    pub snr_period_secs: f64,
    // Online learning
    pub n1: usize,
    pub n2: usize,
    pub q: usize,
    pub noise_rank: usize,
    pub psi_flatten: f64,
    pub online_phi_noise: f64,
    pub online_vb_max_iter: usize,
    pub online_vb_tol: f64,
    // α–SNR curve breakpoints
    pub alpha_snr_low: f64,
    pub alpha_low: f64,
    pub alpha_snr_high: f64,
    pub alpha_high: f64,
}

impl Default for Settings {
    fn default() -> Self {
        let alpha = AlphaCurve::default();
        let online = OnlineConfig::default();
        Settings {
            frame_len: signal::DEFAULT_FRAME_LEN,
            hop: signal::DEFAULT_HOP,
            target_max: signal::DEFAULT_TARGET_MAX,
            seed: 0,
            train_max_iter: 200,
            train_tol: 1e-5,
            kl_init_iterations: 30,
            basis_prior_shape: 0.1,
            activation_prior_shape: 0.1,
            phi_speech: 0.01,
            phi_noise: None,
            vb_max_iter: 50,
            vb_tol: 1e-5,
            transition_diag: 0.99,
            classifier_smoothing: 0.95,
            initial_snr_db: 0.0,
            snr_window_secs: 10.0,
            snr_period_secs: 1.0,
            n1: online.n1,
            n2: online.n2,
            q: online.q,
            noise_rank: online.noise_rank,
            psi_flatten: online.psi_flatten,
            online_phi_noise: 1.0,
            online_vb_max_iter: online.vb.max_iter,
            online_vb_tol: online.vb.tol,
            alpha_snr_low: alpha.snr_low,
            alpha_low: alpha.alpha_low,
            alpha_snr_high: alpha.snr_high,
            alpha_high: alpha.alpha_high,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Argument(format!("invalid value {value:?} for key {key:?}")))
}

impl Settings {
    /// Load a config file and apply it over the defaults.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut settings = Settings::default();
        settings.merge_file(path)?;
        Ok(settings)
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Argument(format!("{}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Argument(format!(
                    "{}:{}: expected `key = value`, found {raw:?}",
                    path.display(),
                    lineno + 1
                )));
            };
            self.apply(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Apply one `key = value` assignment.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "frame_len" => self.frame_len = parse(key, value)?,
            "hop" => self.hop = parse(key, value)?,
            "target_max" => self.target_max = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "train_max_iter" => self.train_max_iter = parse(key, value)?,
            "train_tol" => self.train_tol = parse(key, value)?,
            "kl_init_iterations" => self.kl_init_iterations = parse(key, value)?,
            "basis_prior_shape" => self.basis_prior_shape = parse(key, value)?,
            "activation_prior_shape" => self.activation_prior_shape = parse(key, value)?,
            "phi_speech" => self.phi_speech = parse(key, value)?,
            "phi_noise" => self.phi_noise = Some(parse(key, value)?),
            "vb_max_iter" => self.vb_max_iter = parse(key, value)?,
            "vb_tol" => self.vb_tol = parse(key, value)?,
            "transition_diag" => self.transition_diag = parse(key, value)?,
            "classifier_smoothing" => self.classifier_smoothing = parse(key, value)?,
            "initial_snr_db" => self.initial_snr_db = parse(key, value)?,
            "snr_window_secs" => self.snr_window_secs = parse(key, value)?,
            "snr_period_secs" => self.snr_period_secs = parse(key, value)?,
            "n1" => self.n1 = parse(key, value)?,
            "n2" => self.n2 = parse(key, value)?,
            "q" => self.q = parse(key, value)?,
            "noise_rank" => self.noise_rank = parse(key, value)?,
            "psi_flatten" => self.psi_flatten = parse(key, value)?,
            "online_phi_noise" => self.online_phi_noise = parse(key, value)?,
            "online_vb_max_iter" => self.online_vb_max_iter = parse(key, value)?,
            "online_vb_tol" => self.online_vb_tol = parse(key, value)?,
            "alpha_snr_low" => self.alpha_snr_low = parse(key, value)?,
            "alpha_low" => self.alpha_low = parse(key, value)?,
            "alpha_snr_high" => self.alpha_snr_high = parse(key, value)?,
            "alpha_high" => self.alpha_high = parse(key, value)?,
            _ => {
                return Err(CliError::Argument(format!("unknown config key {key:?}")));
            }
        }
        Ok(())
    }

    pub fn alpha_curve(&self) -> AlphaCurve {
        AlphaCurve {
            snr_low: self.alpha_snr_low,
            alpha_low: self.alpha_low,
            snr_high: self.alpha_snr_high,
            alpha_high: self.alpha_high,
        }
    }

    pub fn online_config(&self) -> OnlineConfig {
        OnlineConfig {
            n1: self.n1,
            n2: self.n2,
            q: self.q,
            noise_rank: self.noise_rank,
            psi_flatten: self.psi_flatten,
            kl_init_iterations: self.kl_init_iterations,
            vb: VbOptions {
                max_iter: self.online_vb_max_iter,
                tol: self.online_vb_tol,
            },
            target_max: self.target_max,
            seed: self.seed,
        }
    }

    /// Enhancement config; `online` enables online noise learning.
    pub fn enhance_config(&self, online: bool) -> EnhanceConfig {
        EnhanceConfig {
            frame_len: self.frame_len,
            hop: self.hop,
            target_max: self.target_max,
            phi_speech: self.phi_speech,
            phi_noise_override: self.phi_noise,
            vb: VbOptions {
                max_iter: self.vb_max_iter,
                tol: self.vb_tol,
            },
            alpha_curve: self.alpha_curve(),
            initial_snr_db: self.initial_snr_db,
            snr_window_secs: self.snr_window_secs,
            snr_period_secs: self.snr_period_secs,
            online: online.then(|| self.online_config()),
        }
    }

    pub fn train_options(&self) -> bnmf_core::bnmf::TrainOptions {
        bnmf_core::bnmf::TrainOptions {
            seed: self.seed,
            kl_init_iterations: self.kl_init_iterations,
            max_iter: self.train_max_iter,
            tol: self.train_tol,
            basis_prior_shape: self.basis_prior_shape,
            activation_prior_shape: self.activation_prior_shape,
        }
    }
}
