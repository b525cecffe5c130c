//! Test-signal generators, WAV input and spectrogram export.

pub mod export;
pub mod generate;
pub mod wav;

pub use export::{export_spectrogram, ExportFormat};
pub use generate::{alternating_sines, chirp_sine, exponential_chirp};
pub use wav::load_wav;
