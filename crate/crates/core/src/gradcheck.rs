//! Central-difference gradient checking against tape gradients.

use crate::error::{Error, Result};
use crate::tape::{Tape, Var};

/// Relative-error floor in the denominator so two zero gradients compare equal.
pub const REL_EPS: f64 = 1e-12;

/// Analytic and numeric gradient of one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradPair {
    pub analytic: f64,
    pub numeric: f64,
}

impl GradPair {
    pub fn relative_error(&self) -> f64 {
        let denom = self.analytic.abs().max(self.numeric.abs()).max(REL_EPS);
        (self.analytic - self.numeric).abs() / denom
    }
}

/// Evaluates `f` on a fresh tape and returns its value.
pub fn evaluate<F>(f: &F, params: &[f64]) -> Result<f64>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
{
    let tape = Tape::new();
    let vars = tape.lift_all(params)?;
    Ok(f(&tape, &vars)?.value())
}

/// Tape gradient of `f` at `params`, with the value.
pub fn gradient<F>(f: &F, params: &[f64]) -> Result<(f64, Vec<f64>)>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
{
    let tape = Tape::new();
    let vars = tape.lift_all(params)?;
    let out = f(&tape, &vars)?;
    let grads = tape.backward(out)?;
    Ok((out.value(), grads.wrt_all(&vars)))
}

/// Analytic vs central-difference gradient for every parameter.
pub fn compare<F>(f: F, params: &[f64], step: f64) -> Result<Vec<GradPair>>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
{
    if !(step > 0.0) {
        return Err(Error::invalid("step", format!("must be positive, got {step}")));
    }
    let (_, analytic) = gradient(&f, params)?;
    let mut probe = params.to_vec();
    let mut out = Vec::with_capacity(params.len());
    for (i, a) in analytic.into_iter().enumerate() {
        probe[i] = params[i] + step;
        let up = evaluate(&f, &probe)?;
        probe[i] = params[i] - step;
        let down = evaluate(&f, &probe)?;
        probe[i] = params[i];
        out.push(GradPair {
            analytic: a,
            numeric: (up - down) / (2.0 * step),
        });
    }
    Ok(out)
}

/// Maximum over parameters of
/// `|analytic − numeric| / max(|analytic|, |numeric|, 1e-12)`.
pub fn grad_check<F>(f: F, params: &[f64], step: f64) -> Result<f64>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
{
    Ok(compare(f, params, step)?
        .iter()
        .map(GradPair::relative_error)
        .fold(0.0, f64::max))
}
