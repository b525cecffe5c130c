//! Deterministic test signals. Frequencies are in cycles per sample.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::stft::Signal;

/// Sample rate attached to generated signals. Display metadata only.
pub const DEFAULT_SAMPLE_RATE: f64 = 8000.0;

fn check_frequency(name: &'static str, f: f64) -> Result<()> {
    if f > 0.0 && f < 0.5 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{f} is not in (0, 0.5) cycles/sample")))
    }
}

fn check_segment(len: usize, segments: usize) -> Result<()> {
    if len < 4 {
        return Err(Error::invalid("segment_len", format!("must be at least 4, got {len}")));
    }
    if segments == 0 {
        return Err(Error::invalid("segments", "must be positive"));
    }
    Ok(())
}

/// Alternating `f1`/`f2` sinusoids, each `len` samples with phase restarting
/// at zero. Returns the signal and the per-sample class (0 for `f1`).
pub fn alternating_sines(f1: f64, f2: f64, len: usize, segments: usize) -> Result<(Signal, Vec<usize>)> {
    check_frequency("f1", f1)?;
    check_frequency("f2", f2)?;
    if f1 == f2 {
        return Err(Error::invalid("f2", "must differ from f1"));
    }
    check_segment(len, segments)?;
    let mut samples = Vec::with_capacity(len * segments);
    let mut labels = Vec::with_capacity(len * segments);
    for s in 0..segments {
        let (f, class) = if s % 2 == 0 { (f1, 0) } else { (f2, 1) };
        samples.extend((0..len).map(|t| (2.0 * PI * f * t as f64).sin()));
        labels.extend(std::iter::repeat(class).take(len));
    }
    Ok((Signal::new(samples, DEFAULT_SAMPLE_RATE)?, labels))
}

/// Frequency of the constant segments of [`chirp_sine`].
pub fn chirp_sine_tone(f_lo: f64, f_hi: f64) -> f64 {
    0.5 * (f_lo + f_hi)
}

/// Even segments sweep linearly from `f_lo` to `f_hi`; odd segments hold a
/// tone at the mid frequency. Phase restarts at each segment.
pub fn chirp_sine(f_lo: f64, f_hi: f64, len: usize, segments: usize) -> Result<Signal> {
    check_frequency("f_lo", f_lo)?;
    check_frequency("f_hi", f_hi)?;
    if !(f_lo < f_hi) {
        return Err(Error::invalid("f_hi", "must exceed f_lo"));
    }
    check_segment(len, segments)?;
    let tone = chirp_sine_tone(f_lo, f_hi);
    let rate = (f_hi - f_lo) / len as f64;
    let mut samples = Vec::with_capacity(len * segments);
    for s in 0..segments {
        if s % 2 == 0 {
            samples.extend((0..len).map(|t| {
                let t = t as f64;
                (2.0 * PI * (f_lo * t + 0.5 * rate * t * t)).sin()
            }));
        } else {
            samples.extend((0..len).map(|t| (2.0 * PI * tone * t as f64).sin()));
        }
    }
    Signal::new(samples, DEFAULT_SAMPLE_RATE)
}

/// Instantaneous frequency of a chirp segment of [`chirp_sine`] at offset `t`.
pub fn linear_chirp_frequency(f_lo: f64, f_hi: f64, len: usize, t: f64) -> f64 {
    f_lo + (f_hi - f_lo) * t / len as f64
}

/// `sin φ[t]` with `φ[t] = 2π·f0·(rᵗ − 1)/ln r`, `r = (f1/f0)^(1/M)`.
pub fn exponential_chirp(f0: f64, f1: f64, len: usize) -> Result<Signal> {
    check_frequency("f0", f0)?;
    check_frequency("f1", f1)?;
    if !(f0 < f1) {
        return Err(Error::invalid("f1", "must exceed f0"));
    }
    if len < 4 {
        return Err(Error::invalid("len", format!("must be at least 4, got {len}")));
    }
    let ln_r = (f1 / f0).ln() / len as f64;
    let samples = (0..len)
        .map(|t| {
            let phase = 2.0 * PI * f0 * (ln_r * t as f64).exp_m1() / ln_r;
            phase.sin()
        })
        .collect();
    Signal::new(samples, DEFAULT_SAMPLE_RATE)
}

/// Instantaneous frequency `f0·rᵗ` of [`exponential_chirp`].
pub fn exponential_chirp_frequency(f0: f64, f1: f64, len: usize, t: f64) -> f64 {
    f0 * (f1 / f0).powf(t / len as f64)
}

/// `A·sin(2πft)` for `len` samples.
pub fn sinusoid(f: f64, len: usize, amplitude: f64) -> Result<Signal> {
    check_frequency("f", f)?;
    let samples = (0..len)
        .map(|t| amplitude * (2.0 * PI * f * t as f64).sin())
        .collect();
    Signal::new(samples, DEFAULT_SAMPLE_RATE)
}
