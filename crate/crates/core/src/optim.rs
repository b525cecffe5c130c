//! Fixed-step gradient descent with a monotone backtracking safeguard.
//!
//! A proposed step `θ − lr·∇L` is accepted only if it does not increase the
//! loss; otherwise the step is halved and retried, up to
//! [`MAX_HALVINGS`] times. When every retry fails the parameters stay put.

use crate::error::Result;

pub const MAX_HALVINGS: usize = 10;

/// Loss and gradient at an accepted point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loss: f64,
    pub grad: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Step {
    pub params: Vec<f64>,
    pub eval: Evaluation,
    /// Step scale that was accepted, `1` for the full step.
    pub scale: f64,
}

/// Tries `params − lr·grad` with backtracking. `eval` returns `None` for an
/// infeasible candidate, which counts as a rejection.
pub fn safeguarded_step<F>(
    params: &[f64],
    current: &Evaluation,
    lr: f64,
    eval: F,
) -> Result<Option<Step>>
where
    F: FnMut(&[f64]) -> Result<Option<Evaluation>>,
{
    let direction: Vec<f64> = current.grad.iter().map(|g| -lr * g).collect();
    safeguarded_move(params, current, &direction, eval)
}

/// Tries `params + direction`, halving the move on rejection.
pub fn safeguarded_move<F>(
    params: &[f64],
    current: &Evaluation,
    direction: &[f64],
    mut eval: F,
) -> Result<Option<Step>>
where
    F: FnMut(&[f64]) -> Result<Option<Evaluation>>,
{
    let mut scale = 1.0;
    let mut candidate = vec![0.0; params.len()];
    for _ in 0..=MAX_HALVINGS {
        for ((c, p), d) in candidate.iter_mut().zip(params).zip(direction) {
            *c = p + scale * d;
        }
        if let Some(e) = eval(&candidate)? {
            if e.loss.is_finite() && e.loss <= current.loss {
                return Ok(Some(Step {
                    params: candidate,
                    eval: e,
                    scale,
                }));
            }
        }
        scale *= 0.5;
    }
    Ok(None)
}

/// Update rule for the trainers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    GradientDescent,
    Adam,
}

/// Adam moment estimates with the usual defaults `β₁ = 0.9`, `β₂ = 0.999`.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// Bias-corrected step for each coordinate, scaled by `lr[i]`.
    pub fn step(&mut self, grad: &[f64], lr: &[f64]) -> Vec<f64> {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        grad.iter()
            .zip(lr)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
            .map(|((&g, &lr), (m, v))| {
                *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
                *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
                -lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS)
            })
            .collect()
    }
}
