//! Concentration-based sparsity objectives.
//!
//! For a spectral frame `F`, `c_p = Σ_k |F[k]|^p` and the concentration is
//! `C = c₄ / c₂²`, which lies in `[1/K, 1]` for a nonzero frame of `K` bins.
//! The global objective over a Gaussian STFT is the ratio of sums
//! `L_S = Σ_i c₄(i) / Σ_i c₂(i)²`; the adaptive objective is the negated sum
//! of frame concentrations, each clipped to the 2-norm of the concentration
//! vector.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::history::{Failure, Record, TrainHistory};
use crate::optim::{safeguarded_step, Evaluation};
use crate::spectral::WindowedFrame;
use crate::stft::{effective_length, GaussianWindow, Signal, Spectrogram, MIN_LENGTH};
use crate::tape::{Tape, Var};

/// Convergence: `|Δσ|` below this for [`STALL_ITERATIONS`] iterations.
pub const SIGMA_TOLERANCE: f64 = 1e-4;
pub const STALL_ITERATIONS: usize = 20;

/// σ below which the window length would fall under the clamp.
pub const SIGMA_FLOOR: f64 = MIN_LENGTH as f64 / 6.0;

/// `Σ_k |F[k]|^p`.
pub fn frame_norm_p(frame: &[Complex64], p: u32) -> f64 {
    frame.iter().map(|c| c.norm().powi(p as i32)).sum()
}

/// `c₄ / c₂²`; an all-zero frame has concentration 0.
pub fn concentration(frame: &[Complex64]) -> f64 {
    let (c2, c4) = frame.iter().fold((0.0, 0.0), |(c2, c4), c| {
        let p = c.norm_sqr();
        (c2 + p, c4 + p * p)
    });
    if c2 == 0.0 {
        0.0
    } else {
        c4 / (c2 * c2)
    }
}

/// Differentiable concentration of a frame.
pub fn concentration_var<'t>(tape: &'t Tape, frame: &WindowedFrame<'t>) -> Var<'t> {
    if frame.is_silent() {
        return tape.fused(0.0, &[]);
    }
    let c2 = frame.power_sum(tape, 2);
    let c4 = frame.power_sum(tape, 4);
    c4 / c2.square()
}

/// Per-frame norms and concentrations of a spectrogram.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub c2: Vec<f64>,
    pub c4: Vec<f64>,
    pub concentration: Vec<f64>,
    /// `Σ c₄ / Σ c₂²` over all frames.
    pub aggregate: f64,
}

impl ConcentrationReport {
    pub fn new(spec: &Spectrogram) -> Self {
        let c2: Vec<f64> = spec.frames().iter().map(|f| frame_norm_p(f, 2)).collect();
        let c4: Vec<f64> = spec.frames().iter().map(|f| frame_norm_p(f, 4)).collect();
        let concentration = spec.frames().iter().map(|f| concentration(f)).collect();
        let den: f64 = c2.iter().map(|c| c * c).sum();
        let aggregate = if den > 0.0 {
            c4.iter().sum::<f64>() / den
        } else {
            0.0
        };
        ConcentrationReport {
            c2,
            c4,
            concentration,
            aggregate,
        }
    }
}

/// Frame grid of the global objective: spacing `round(3σ)`, indices
/// `0..=⌊M/(3σ)⌋`.
pub fn global_centers(len: usize, sigma: f64) -> Vec<i64> {
    let hop = ((3.0 * sigma).round() as i64).max(1);
    let count = (len as f64 / (3.0 * sigma)).floor() as i64 + 1;
    (0..count).map(|i| i * hop).collect()
}

/// `L_S(σ)` on the tape. The window length and frame grid are fixed from
/// σ's current value.
pub fn sparsity_loss_global<'t>(tape: &'t Tape, signal: &Signal, sigma: Var<'t>) -> Result<Var<'t>> {
    let s = sigma.value();
    if !(s > 0.0) {
        return Err(Error::invalid("sigma", format!("must be positive, got {s}")));
    }
    let window = GaussianWindow::on_tape(sigma, effective_length(s))?;
    let mut c4 = Vec::new();
    let mut c2sq = Vec::new();
    for m in global_centers(signal.len(), s) {
        let frame = window.frame(signal, m);
        if frame.is_silent() {
            continue;
        }
        c4.push(frame.power_sum(tape, 4));
        c2sq.push(frame.power_sum(tape, 2).square());
    }
    if c4.is_empty() {
        return Err(Error::Degenerate("every frame of the global objective is silent".into()));
    }
    Ok(tape.sum(&c4) / tape.sum(&c2sq))
}

/// Value of [`sparsity_loss_global`] without keeping the tape.
pub fn sparsity_loss_global_value(signal: &Signal, sigma: f64) -> Result<f64> {
    let tape = Tape::new();
    let s = tape.lift(sigma)?;
    Ok(sparsity_loss_global(&tape, signal, s)?.value())
}

fn global_eval(signal: &Signal, sigma: f64) -> Result<Evaluation> {
    let tape = Tape::new();
    let s = tape.lift(sigma)?;
    let loss = sparsity_loss_global(&tape, signal, s)?;
    let g = tape.backward(loss)?.wrt(s);
    // ascent on L_S is descent on −L_S
    Ok(Evaluation {
        loss: -loss.value(),
        grad: vec![-g],
    })
}

/// Result of [`optimize_sigma`].
#[derive(Debug, Clone)]
pub struct SigmaFit {
    pub sigma: f64,
    pub objective: f64,
    pub history: TrainHistory,
}

impl SigmaFit {
    pub fn length(&self) -> usize {
        effective_length(self.sigma)
    }
}

/// Gradient ascent of `L_S` in σ with the monotone safeguard.
///
/// Stops after `max_iters` updates, or once `|Δσ| < 1e-4` for 20 consecutive
/// iterations. Candidates outside `[SIGMA_FLOOR, M/6]` are clamped onto the
/// boundary; reaching it flags the run as failed.
pub fn optimize_sigma(signal: &Signal, sigma0: f64, learning_rate: f64, max_iters: usize) -> Result<SigmaFit> {
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(Error::invalid("sigma0", format!("must be positive, got {sigma0}")));
    }
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::invalid("learning_rate", format!("must be positive, got {learning_rate}")));
    }
    if max_iters == 0 {
        return Err(Error::invalid("max_iters", "must be positive"));
    }
    let ceiling = signal.len() as f64 / 6.0;
    if sigma0 > ceiling || sigma0 < SIGMA_FLOOR {
        return Err(Error::invalid(
            "sigma0",
            format!("{sigma0} outside [{SIGMA_FLOOR}, {ceiling}]"),
        ));
    }

    let record = |iteration: usize, sigma: f64, objective: f64| {
        let mut r = Record::new(iteration, objective);
        r.sigma = Some(sigma);
        r.length = Some(effective_length(sigma));
        r
    };

    let mut history = TrainHistory::default();
    let mut sigma = sigma0;
    let mut current = global_eval(signal, sigma)?;
    history.push(record(0, sigma, -current.loss));
    let mut stall = 0;

    for it in 1..=max_iters {
        if !current.grad[0].is_finite() {
            history.failure = Some(Failure::NonFinite);
            break;
        }
        let step = safeguarded_step(&[sigma], &current, learning_rate, |c| {
            let s = c[0].clamp(SIGMA_FLOOR, ceiling);
            global_eval(signal, s).map(Some)
        })?;
        let previous = sigma;
        if let Some(step) = step {
            sigma = step.params[0].clamp(SIGMA_FLOOR, ceiling);
            current = step.eval;
        }
        history.push(record(it, sigma, -current.loss));

        if sigma <= SIGMA_FLOOR {
            history.failure = Some(Failure::SigmaFloor);
            break;
        }
        if sigma >= ceiling {
            history.failure = Some(Failure::SigmaCeiling);
            break;
        }
        if (sigma - previous).abs() < SIGMA_TOLERANCE {
            stall += 1;
            if stall >= STALL_ITERATIONS {
                history.converged = true;
                break;
            }
        } else {
            stall = 0;
        }
    }

    Ok(SigmaFit {
        sigma,
        objective: -current.loss,
        history,
    })
}

/// Brute-force `L_S` over a σ grid; returns `(σ, L_S)` pairs.
pub fn sigma_grid(signal: &Signal, lo: f64, hi: f64, step: f64) -> Result<Vec<(f64, f64)>> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..count)
        .map(|i| {
            let s = lo + i as f64 * step;
            sparsity_loss_global_value(signal, s).map(|v| (s, v))
        })
        .collect()
}

/// `−Σ_m min(C_m, ‖C‖₂)` over differentiable frames. The clip level is
/// treated as a constant.
pub fn sparsity_loss_adaptive<'t>(tape: &'t Tape, frames: &[WindowedFrame<'t>]) -> Result<Var<'t>> {
    if frames.is_empty() {
        return Err(Error::Degenerate("adaptive objective needs at least one frame".into()));
    }
    let conc: Vec<Var<'t>> = frames.iter().map(|f| concentration_var(tape, f)).collect();
    let clip = conc.iter().map(|c| c.value() * c.value()).sum::<f64>().sqrt();
    let clipped: Vec<Var<'t>> = conc
        .into_iter()
        .map(|c| if c.value() > clip { tape.fused(clip, &[]) } else { c })
        .collect();
    Ok(-tape.sum(&clipped))
}

/// Value of the adaptive objective for concentrations `c`.
pub fn clipped_concentration_loss(c: &[f64]) -> Result<f64> {
    if c.is_empty() {
        return Err(Error::Degenerate("adaptive objective needs at least one frame".into()));
    }
    let clip = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(-c.iter().map(|v| v.min(clip)).sum::<f64>())
}

/// Adaptive objective of a finished spectrogram.
pub fn sparsity_loss_adaptive_value(spec: &Spectrogram) -> Result<f64> {
    let c: Vec<f64> = spec.frames().iter().map(|f| concentration(f)).collect();
    clipped_concentration_loss(&c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn norms() {
        let f = [c(3.0), c(0.0), c(0.0), c(0.0)];
        assert_eq!(frame_norm_p(&f, 2), 9.0);
        assert_eq!(frame_norm_p(&f, 4), 81.0);
        assert_eq!(frame_norm_p(&[c(1.0); 4], 4), 4.0);
    }

    #[test]
    fn concentration_cases() {
        assert_eq!(concentration(&[c(0.0), Complex64::new(0.0, -7.5), c(0.0)]), 1.0);
        assert!((concentration(&[c(2.0); 8]) - 1.0 / 8.0).abs() < 1e-15);
        assert!((concentration(&[c(2.0), c(1.0), c(0.0), c(0.0)]) - 0.68).abs() < 1e-15);
        assert_eq!(concentration(&[c(0.0); 3]), 0.0);
    }

    #[test]
    fn clipped_loss_examples() {
        assert_eq!(clipped_concentration_loss(&[0.5]).unwrap(), -0.5);
        assert!((clipped_concentration_loss(&[0.6, 0.8]).unwrap() + 1.4).abs() < 1e-15);
        assert!((clipped_concentration_loss(&[0.9, 0.1, 0.1]).unwrap() + 1.1).abs() < 1e-15);
        assert!(clipped_concentration_loss(&[]).is_err());
    }

    #[test]
    fn grid_spacing() {
        assert_eq!(global_centers(100, 5.0), vec![0, 15, 30, 45, 60, 75, 90]);
        assert_eq!(global_centers(10, 5.0), vec![0]);
    }

    #[test]
    fn silent_signal_is_degenerate() {
        let s = Signal::new(vec![0.0; 64], 1.0).unwrap();
        assert!(matches!(sparsity_loss_global_value(&s, 3.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn optimizer_argument_checks() {
        let s = Signal::new(vec![1.0; 64], 1.0).unwrap();
        assert!(optimize_sigma(&s, 0.0, 1.0, 10).is_err());
        assert!(optimize_sigma(&s, 2.0, -1.0, 10).is_err());
        assert!(optimize_sigma(&s, 2.0, 1.0, 0).is_err());
        assert!(optimize_sigma(&s, 20.0, 1.0, 10).is_err());
    }
}
