//! Gradient-based optimisation of STFT analysis parameters.
//!
//! The crate provides a scalar reverse-mode tape ([`tape`]), a Gaussian
//! STFT that is differentiable in its window width ([`stft`]), sparsity
//! objectives ([`sparsity`]), joint window/classifier training
//! ([`classifier`]), adaptive trapezoid-window STFTs whose window positions
//! come from a monotonic network ([`adaptive`]), and signal generation and
//! file I/O ([`signals`]).

pub mod adaptive;
pub mod classifier;
pub mod cli;
pub mod error;
pub mod gradcheck;
pub mod history;
pub mod optim;
pub mod signals;
pub mod sparsity;
pub mod spectral;
pub mod stft;
pub mod tape;

pub use error::{Error, Result};
pub use stft::{GaussianStftConfig, Signal, Spectrogram};
pub use tape::{Gradients, Tape, Var};
