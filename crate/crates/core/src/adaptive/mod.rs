//! Time-varying STFT with trapezoid windows placed by two small networks.
//!
//! A monotone map sends window indices to flat-region starts `x_i`; a second
//! network places each rise start `y_i` between consecutive `x`. Training
//! moves both to minimise the clipped concentration loss of the resulting
//! spectrogram, which lengthens windows over stationary content and packs
//! them where the frequency content moves.

mod layout;
mod nets;
mod quadrature;
mod train;
mod transform;

pub use layout::{
    kendall_tau, layout_from_nets, trapezoid_window, widen_rise, Trapezoid, WindowLayout, DEFAULT_PAD, MIN_RAMP,
};
pub use nets::{
    mapping, FlatStartNet, Mlp, MonotonicMapNet, FLAT_WIDTHS, INTEGRAND_FLOOR, INTEGRAND_WIDTHS, NODES_PER_UNIT,
};
pub use quadrature::ClenshawCurtis;
pub use train::{train_adaptive, AdaptiveConfig, AdaptiveFit, AdaptiveModel, DEFAULT_GRID, DEFAULT_INITIAL_LENGTH};
pub use transform::{adaptive_frame, adaptive_stft, adaptive_stft_on, DftGrid, TapeLayout};
