//! Gaussian-window STFT that is differentiable in the window width σ.
//!
//! The window `W[n] = exp(−(n/(2σ))²)` is truncated to
//! `|n| ≤ ⌊N/2⌋` with `N = ⌊6σ⌋`. The truncation length is a constant within
//! one forward pass; gradients with respect to σ flow through the window
//! sample values only.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::WindowedFrame;
use crate::tape::{Tape, Var};

/// Smallest DFT length the Gaussian STFT will use.
pub const MIN_LENGTH: usize = 4;

/// An audio signal. All arithmetic is in sample units; the sample rate is
/// carried for display only.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "signal must hold at least one sample"));
        }
        if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(*bad));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::invalid("sample_rate", format!("{sample_rate}")));
        }
        Ok(Signal {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Sample `i`, or zero outside `[0, M)`.
    #[inline]
    pub fn at(&self, i: i64) -> f64 {
        if i >= 0 && (i as usize) < self.samples.len() {
            self.samples[i as usize]
        } else {
            0.0
        }
    }

    pub fn is_silent(&self) -> bool {
        self.samples.iter().all(|&x| x == 0.0)
    }
}

/// `exp(−(n/(2σ))²)`.
pub fn gaussian_window(sigma: f64, n: i64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
    }
    let r = n as f64 / (2.0 * sigma);
    Ok((-(r * r)).exp())
}

/// Tape version of [`gaussian_window`].
pub fn gaussian_window_var<'t>(sigma: Var<'t>, n: i64) -> Var<'t> {
    let r = (n as f64 / 2.0) / sigma;
    (-r.square()).exp()
}

/// `N = ⌊6σ⌋`, clamped to at least [`MIN_LENGTH`].
pub fn effective_length(sigma: f64) -> usize {
    length_for(sigma, 3.0)
}

fn length_for(sigma: f64, truncation_multiple: f64) -> usize {
    let n = (2.0 * truncation_multiple * sigma).floor();
    if n.is_finite() && n > MIN_LENGTH as f64 {
        n as usize
    } else {
        MIN_LENGTH
    }
}

/// Constant-parameter Gaussian STFT settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianStftConfig {
    pub sigma: f64,
    /// Hop as a fraction of the window length.
    pub hop_ratio: f64,
    /// Window support is `|n| ≤ truncation_multiple · σ`.
    pub truncation_multiple: f64,
}

impl GaussianStftConfig {
    pub fn new(sigma: f64) -> Result<Self> {
        let cfg = GaussianStftConfig {
            sigma,
            hop_ratio: 0.5,
            truncation_multiple: 3.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_hop_ratio(mut self, hop_ratio: f64) -> Result<Self> {
        self.hop_ratio = hop_ratio;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be positive, got {}", self.sigma)));
        }
        if !(self.hop_ratio > 0.0 && self.hop_ratio <= 1.0) {
            return Err(Error::invalid("hop_ratio", format!("must lie in (0, 1], got {}", self.hop_ratio)));
        }
        if !(self.truncation_multiple > 0.0 && self.truncation_multiple.is_finite()) {
            return Err(Error::invalid(
                "truncation_multiple",
                format!("must be positive, got {}", self.truncation_multiple),
            ));
        }
        Ok(())
    }

    /// DFT length and window support size `N`.
    pub fn length(&self) -> usize {
        length_for(self.sigma, self.truncation_multiple)
    }

    pub fn hop(&self) -> usize {
        ((self.hop_ratio * self.length() as f64).round() as usize).max(1)
    }

    /// Frame centres `0, h, 2h, …` below `len`.
    pub fn centers(&self, len: usize) -> Vec<i64> {
        (0..len).step_by(self.hop()).map(|m| m as i64).collect()
    }
}

/// A sequence of complex spectra with their centre positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    frames: Vec<Vec<Complex64>>,
    centers: Vec<f64>,
}

impl Spectrogram {
    pub fn new(frames: Vec<Vec<Complex64>>, centers: Vec<f64>) -> Result<Self> {
        if frames.len() != centers.len() {
            return Err(Error::invalid("centers", "one centre per frame required"));
        }
        if frames.iter().any(Vec::is_empty) {
            return Err(Error::invalid("frames", "every frame needs at least one bin"));
        }
        if centers.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("centers", "must be strictly increasing"));
        }
        if frames.iter().flatten().any(|c| !c.norm().is_finite()) {
            return Err(Error::invalid("frames", "non-finite magnitude"));
        }
        Ok(Spectrogram { frames, centers })
    }

    pub fn frames(&self) -> &[Vec<Complex64>] {
        &self.frames
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn bin_counts(&self) -> Vec<usize> {
        self.frames.iter().map(Vec::len).collect()
    }

    pub fn magnitudes(&self, frame: usize) -> Vec<f64> {
        self.frames[frame].iter().map(|c| c.norm()).collect()
    }
}

/// Window values on `n = −⌊N/2⌋ ..= ⌊N/2⌋`, lifted onto the tape through σ.
pub struct GaussianWindow<'t> {
    length: usize,
    values: Vec<f64>,
    vars: Vec<Option<Var<'t>>>,
}

impl<'t> GaussianWindow<'t> {
    /// Window with `N` fixed at `length` and samples differentiable in `sigma`.
    pub fn on_tape(sigma: Var<'t>, length: usize) -> Result<Self> {
        if !(sigma.value() > 0.0) {
            return Err(Error::invalid("sigma", format!("must be positive, got {}", sigma.value())));
        }
        let half = (length / 2) as i64;
        let vars: Vec<Option<Var<'t>>> = (-half..=half)
            .map(|n| Some(gaussian_window_var(sigma, n)))
            .collect();
        let values = vars.iter().map(|v| v.unwrap().value()).collect();
        Ok(GaussianWindow {
            length,
            values,
            vars,
        })
    }

    /// Window without a tape.
    pub fn plain(sigma: f64, length: usize) -> Result<Self> {
        let half = (length / 2) as i64;
        let values = (-half..=half)
            .map(|n| gaussian_window(sigma, n))
            .collect::<Result<Vec<_>>>()?;
        let vars = vec![None; values.len()];
        Ok(GaussianWindow {
            length,
            values,
            vars,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Frame centred at sample `m`; out-of-range samples read as zero.
    pub fn frame(&self, signal: &Signal, m: i64) -> WindowedFrame<'t> {
        let half = (self.length / 2) as i64;
        let n_len = self.length as i64;
        let offsets = -half..=half;
        let samples = offsets.clone().map(|n| signal.at(m + n)).collect();
        let phase = offsets.map(|n| n.rem_euclid(n_len) as usize).collect();
        WindowedFrame::new(
            self.length,
            samples,
            phase,
            self.values.clone(),
            self.vars.clone(),
        )
    }
}

/// One differentiable frame `F[m, k]`, `k = 0..N`, with `N` taken from σ's
/// current value.
pub fn stft_frame<'t>(signal: &Signal, m: i64, sigma: Var<'t>) -> Result<WindowedFrame<'t>> {
    let window = GaussianWindow::on_tape(sigma, effective_length(sigma.value()))?;
    Ok(window.frame(signal, m))
}

/// Plain spectrum of one frame.
pub fn stft_frame_values(signal: &Signal, m: i64, sigma: f64) -> Result<Vec<Complex64>> {
    let window = GaussianWindow::plain(sigma, effective_length(sigma))?;
    Ok(window.frame(signal, m).into_spectrum())
}

/// Frames at `0, h, 2h, … < M`, all with `N` bins.
pub fn stft(signal: &Signal, config: &GaussianStftConfig) -> Result<Spectrogram> {
    config.validate()?;
    let window = GaussianWindow::plain(config.sigma, config.length())?;
    let centers = config.centers(signal.len());
    let frames = centers
        .iter()
        .map(|&m| window.frame(signal, m).into_spectrum())
        .collect();
    Spectrogram::new(frames, centers.iter().map(|&m| m as f64).collect())
}

/// Differentiable frames of [`stft`], sharing one window on `tape`.
pub fn stft_on_tape<'t>(
    tape: &'t Tape,
    signal: &Signal,
    config: &GaussianStftConfig,
) -> Result<(Var<'t>, Vec<WindowedFrame<'t>>)> {
    config.validate()?;
    let sigma = tape.lift(config.sigma)?;
    let window = GaussianWindow::on_tape(sigma, config.length())?;
    let frames = config
        .centers(signal.len())
        .into_iter()
        .map(|m| window.frame(signal, m))
        .collect();
    Ok((sigma, frames))
}
