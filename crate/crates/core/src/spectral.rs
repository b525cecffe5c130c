//! Windowed DFT frames whose window samples may live on a tape.
//!
//! A frame is a set of support points, each carrying a signal sample, a
//! window value and the DFT phase index it folds onto. The spectrum is
//! `F[k] = Σ_j x_j·w_j·exp(−2πi·k·p_j/K)` with `p_j` the phase index and `K`
//! the bin count. Scalar reductions of the spectrum (power sums, linear
//! read-outs) are recorded as single fused tape nodes whose partials with
//! respect to the window samples come from one inverse FFT of the spectral
//! adjoint.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::tape::{Tape, Var};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Unnormalised forward DFT of folded real samples.
pub fn folded_dft(values: &[f64], phase: &[usize], bins: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); bins];
    for (&v, &p) in values.iter().zip(phase) {
        buf[p].re += v;
    }
    plan(bins, false).process(&mut buf);
    buf
}

/// `Σ_k g[k]·exp(+2πi·k·j/K)` for `j = 0..K`.
fn adjoint_dft(adjoint: &[Complex64]) -> Vec<Complex64> {
    let mut buf = adjoint.to_vec();
    plan(buf.len(), true).process(&mut buf);
    buf
}

/// A windowed DFT frame whose window samples may be tape variables.
#[derive(Debug, Clone)]
pub struct WindowedFrame<'t> {
    bins: usize,
    samples: Vec<f64>,
    phase: Vec<usize>,
    window: Vec<f64>,
    vars: Vec<Option<Var<'t>>>,
    spectrum: Vec<Complex64>,
}

impl<'t> WindowedFrame<'t> {
    /// `vars[j]`, when present, must carry the value `window[j]`.
    pub fn new(
        bins: usize,
        samples: Vec<f64>,
        phase: Vec<usize>,
        window: Vec<f64>,
        vars: Vec<Option<Var<'t>>>,
    ) -> Self {
        assert!(bins > 0);
        assert_eq!(samples.len(), phase.len());
        assert_eq!(samples.len(), window.len());
        assert_eq!(samples.len(), vars.len());
        debug_assert!(phase.iter().all(|&p| p < bins));
        let product: Vec<f64> = samples.iter().zip(&window).map(|(x, w)| x * w).collect();
        let spectrum = folded_dft(&product, &phase, bins);
        WindowedFrame {
            bins,
            samples,
            phase,
            window,
            vars,
            spectrum,
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    pub fn into_spectrum(self) -> Vec<Complex64> {
        self.spectrum
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn is_silent(&self) -> bool {
        self.spectrum.iter().all(|c| c.norm_sqr() == 0.0)
    }

    /// Records a scalar `value = φ(F)` given its spectral adjoint
    /// `g[k] = ∂φ/∂Re F[k] + i·∂φ/∂Im F[k]`. `extra` adds parents that φ
    /// depends on directly.
    pub fn pullback(
        &self,
        tape: &'t Tape,
        value: f64,
        adjoint: &[Complex64],
        extra: &[(Var<'t>, f64)],
    ) -> Var<'t> {
        assert_eq!(adjoint.len(), self.bins);
        let mut terms: Vec<(Var<'t>, f64)> = Vec::with_capacity(self.vars.len() + extra.len());
        if self.vars.iter().any(Option::is_some) {
            let back = adjoint_dft(adjoint);
            for ((var, &x), &p) in self.vars.iter().zip(&self.samples).zip(&self.phase) {
                if let Some(v) = var {
                    if x != 0.0 {
                        terms.push((*v, x * back[p].re));
                    }
                }
            }
        }
        terms.extend_from_slice(extra);
        tape.fused(value, &terms)
    }

    /// `Σ_k |F[k]|^p` for an even `p ≥ 2`.
    pub fn power_sum(&self, tape: &'t Tape, p: u32) -> Var<'t> {
        assert!(p >= 2 && p % 2 == 0, "power sums are defined for even p");
        let half = (p / 2) as i32;
        let mut value = 0.0;
        let adjoint: Vec<Complex64> = self
            .spectrum
            .iter()
            .map(|c| {
                let sq = c.norm_sqr();
                value += sq.powi(half);
                // ∂|F|^p/∂(re, im) = p·|F|^(p−2)·(re, im)
                *c * (p as f64 * sq.powi(half - 1))
            })
            .collect();
        self.pullback(tape, value, &adjoint, &[])
    }

    /// `|F[k]|²` for one bin.
    pub fn bin_power(&self, tape: &'t Tape, k: usize) -> Var<'t> {
        let mut adjoint = vec![Complex64::new(0.0, 0.0); self.bins];
        adjoint[k] = self.spectrum[k] * 2.0;
        self.pullback(tape, self.spectrum[k].norm_sqr(), &adjoint, &[])
    }

    /// Magnitudes `|F[k]|`.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.spectrum.iter().map(|c| c.norm()).collect()
    }

    /// `bias + Σ_k weights[k]·|F[k]|`, differentiable in the window and in
    /// the weights. `weights` may be longer than the bin count (zero padded
    /// input); the surplus weights see a zero feature.
    pub fn magnitude_readout(&self, tape: &'t Tape, weights: &[Var<'t>], bias: Var<'t>) -> Var<'t> {
        assert!(weights.len() >= self.bins);
        let mut value = bias.value();
        let mut extra = Vec::with_capacity(self.bins + 1);
        let adjoint: Vec<Complex64> = self
            .spectrum
            .iter()
            .zip(weights)
            .map(|(c, w)| {
                let mag = c.norm();
                value += w.value() * mag;
                extra.push((*w, mag));
                if mag > 0.0 {
                    *c * (w.value() / mag)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        extra.push((bias, 1.0));
        self.pullback(tape, value, &adjoint, &extra)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive(values: &[f64], phase: &[usize], bins: usize) -> Vec<Complex64> {
        (0..bins)
            .map(|k| {
                values
                    .iter()
                    .zip(phase)
                    .map(|(&v, &p)| {
                        let a = -2.0 * PI * (k * p) as f64 / bins as f64;
                        Complex64::new(v * a.cos(), v * a.sin())
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn folded_dft_matches_direct_sum() {
        let values = [0.3, -1.2, 2.0, 0.5, 0.7, -0.1, 0.9];
        let phase = [5, 0, 1, 2, 3, 4, 5];
        let got = folded_dft(&values, &phase, 6);
        for (a, b) in got.iter().zip(naive(&values, &phase, 6)) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn power_sum_gradient_matches_finite_difference() {
        let samples = vec![0.4, -0.3, 1.1, 0.8, -0.6];
        let phase = vec![0, 1, 2, 3, 4];
        let base = [0.2, 0.9, 1.0, 0.7, 0.1];
        let eval = |w: &[f64]| {
            let f = WindowedFrame::new(5, samples.clone(), phase.clone(), w.to_vec(), vec![None; 5]);
            let tape = Tape::new();
            f.power_sum(&tape, 4).value()
        };
        let tape = Tape::new();
        let vars = tape.lift_all(&base).unwrap();
        let frame = WindowedFrame::new(
            5,
            samples.clone(),
            phase.clone(),
            base.to_vec(),
            vars.iter().copied().map(Some).collect(),
        );
        let c4 = frame.power_sum(&tape, 4);
        let g = tape.backward(c4).unwrap();
        for j in 0..5 {
            let mut up = base;
            let mut dn = base;
            up[j] += 1e-6;
            dn[j] -= 1e-6;
            let fd = (eval(&up) - eval(&dn)) / 2e-6;
            let a = g.wrt(vars[j]);
            assert!((a - fd).abs() / a.abs().max(1e-9) < 1e-6, "{j}: {a} vs {fd}");
        }
    }
}
