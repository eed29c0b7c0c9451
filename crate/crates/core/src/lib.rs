//! Single-channel speech enhancement built on gamma-Poisson Bayesian NMF.
//!
//! The crate factors integer-quantized magnitude spectrograms as sums of
//! Poisson-distributed latent counts with gamma priors on the basis and
//! activation matrices, inferred by mean-field variational Bayes. On top of
//! that sit three enhancement front ends:
//!
//! * a supervised enhancer using pre-trained speech and noise models,
//! * an HMM whose states are noise types, giving simultaneous noise
//!   classification and MMSE enhancement ([`hmm`]),
//! * a causal online learner that adapts the noise dictionary from the
//!   noisy mixture itself, without a voice activity detector ([`online`]).
//!
//! [`signal`] provides the STFT front end, [`mlnmf`] the maximum-likelihood
//! KL-NMF baseline, and [`metrics`] objective evaluation (SDR/SIR/SAR,
//! segmental SNR, SNR-controlled mixing).
//!
//! The crate is `no_std`-compatible (requires `alloc`); file I/O and the
//! command-line front end live in the companion `bnmf-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bnmf;
mod fft;
pub mod hmm;
pub mod mat;
pub mod metrics;
pub mod mlnmf;
pub mod online;
pub mod signal;
pub mod special;

pub use mat::Mat;
