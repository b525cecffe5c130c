//! Small feed-forward networks behind the adaptive window layout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::quadrature::ClenshawCurtis;
use crate::error::{Error, Result};
use crate::tape::{softplus, sigmoid, Tape, Var};

/// Fully connected network with tanh hidden layers and one linear output.
///
/// Parameters are stored layer by layer, weights row-major (`out × in`)
/// followed by the biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    params: Vec<f64>,
}

impl Mlp {
    /// Glorot-uniform hidden layers from `seed`; the output layer starts at
    /// zero weights with bias `output_bias`, so the initial network is
    /// constant.
    pub fn new(widths: &[usize], output_bias: f64, seed: u64) -> Self {
        assert!(widths.len() >= 2 && widths.iter().all(|&w| w > 0));
        assert_eq!(*widths.last().unwrap(), 1, "single output expected");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = widths.len() - 1;
        let mut params = Vec::new();
        for l in 0..layers {
            let (fan_in, fan_out) = (widths[l], widths[l + 1]);
            if l + 1 == layers {
                params.extend(std::iter::repeat(0.0).take(fan_in * fan_out));
                params.push(output_bias);
            } else {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)));
                params.extend(std::iter::repeat(0.0).take(fan_out));
            }
        }
        Mlp {
            widths: widths.to_vec(),
            params,
        }
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::invalid(
                "params",
                format!("expected {} values, got {}", self.params.len(), params.len()),
            ));
        }
        if let Some(p) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::NonFinite(*p));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    pub fn eval(&self, input: &[f64]) -> f64 {
        assert_eq!(input.len(), self.widths[0]);
        let mut act = input.to_vec();
        let mut at = 0;
        let layers = self.widths.len() - 1;
        for l in 0..layers {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let (w, rest) = self.params[at..].split_at(n_in * n_out);
            let b = &rest[..n_out];
            act = (0..n_out)
                .map(|o| {
                    let z = b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(&act).map(|(w, a)| w * a).sum::<f64>();
                    if l + 1 == layers {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            at += n_in * n_out + n_out;
        }
        act[0]
    }

    /// Evaluates with parameters living on `tape`. The first layer is
    /// applied to constant inputs.
    pub fn eval_const_input<'t>(&self, tape: &'t Tape, params: &[Var<'t>], input: &[f64]) -> Var<'t> {
        assert_eq!(input.len(), self.widths[0]);
        let n_in = input.len();
        let n_out = self.widths[1];
        let (w, rest) = params.split_at(n_in * n_out);
        let mut coeffs = input.to_vec();
        coeffs.push(1.0);
        let first: Vec<Var<'t>> = (0..n_out)
            .map(|o| {
                let mut vars = w[o * n_in..(o + 1) * n_in].to_vec();
                vars.push(rest[o]);
                tape.linear(&vars, &coeffs, 0.0)
            })
            .collect();
        self.finish(tape, &params[n_in * n_out + n_out..], first, 1)
    }

    pub fn eval_var<'t>(&self, tape: &'t Tape, params: &[Var<'t>], input: &[Var<'t>]) -> Var<'t> {
        assert_eq!(input.len(), self.widths[0]);
        assert_eq!(params.len(), self.params.len());
        self.finish(tape, params, input.to_vec(), 0)
    }

    /// Applies layers `start..` to pre-activations (`start > 0`) or inputs.
    fn finish<'t>(&self, tape: &'t Tape, params: &[Var<'t>], mut act: Vec<Var<'t>>, start: usize) -> Var<'t> {
        let layers = self.widths.len() - 1;
        if start > 0 {
            if start == layers {
                return act[0];
            }
            act = act.into_iter().map(Var::tanh).collect();
        }
        let one = tape.fused(1.0, &[]);
        let mut at = 0;
        for l in start..layers {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let (w, rest) = params[at..].split_at(n_in * n_out);
            act.push(one);
            act = (0..n_out)
                .map(|o| {
                    let mut row = w[o * n_in..(o + 1) * n_in].to_vec();
                    row.push(rest[o]);
                    let z = tape.inner(&row, &act);
                    if l + 1 == layers {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            at += n_in * n_out + n_out;
        }
        act[0]
    }
}

/// Lower bound added to the softplus output of the integrand.
pub const INTEGRAND_FLOOR: f64 = 0.1;
pub const NODES_PER_UNIT: usize = 32;
pub const INTEGRAND_WIDTHS: [usize; 4] = [1, 32, 32, 1];
pub const FLAT_WIDTHS: [usize; 3] = [2, 16, 1];

/// Window index → sample position: `map(u) = center + hop·∫₀ᵘ g(t) dt`
/// with `g = softplus(net(t/index_scale)) + 0.1 > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicMapNet {
    pub integrand: Mlp,
    pub center: f64,
    pub hop: f64,
    pub index_scale: f64,
    rule: ClenshawCurtis,
}

impl MonotonicMapNet {
    /// Starts from `g ≡ 1`, i.e. uniform spacing `hop`.
    pub fn new(center: f64, hop: f64, index_scale: f64, seed: u64) -> Result<Self> {
        if !(hop > 0.0 && hop.is_finite()) {
            return Err(Error::invalid("hop", format!("must be positive, got {hop}")));
        }
        if !(index_scale > 0.0 && index_scale.is_finite()) {
            return Err(Error::invalid("index_scale", format!("must be positive, got {index_scale}")));
        }
        if !center.is_finite() {
            return Err(Error::NonFinite(center));
        }
        // softplus(b) = 1 − floor
        let bias = (1.0 - INTEGRAND_FLOOR).exp_m1().ln();
        Ok(MonotonicMapNet {
            integrand: Mlp::new(&INTEGRAND_WIDTHS, bias, seed),
            center,
            hop,
            index_scale,
            rule: ClenshawCurtis::new(NODES_PER_UNIT),
        })
    }

    pub fn with_nodes_per_unit(mut self, nodes: usize) -> Self {
        self.rule = ClenshawCurtis::new(nodes);
        self
    }

    pub fn nodes_per_unit(&self) -> usize {
        self.rule.len()
    }

    /// `g(t)`, always at least [`INTEGRAND_FLOOR`].
    pub fn integrand(&self, t: f64) -> f64 {
        softplus(self.integrand.eval(&[t / self.index_scale])) + INTEGRAND_FLOOR
    }

    fn piece(&self, a: f64, b: f64) -> f64 {
        self.rule.integrate(|t| self.integrand(t), a, b)
    }

    /// `∫₀ᵘ g(t) dt` over unit pieces, the last one partial.
    pub fn integral(&self, u: f64) -> f64 {
        let dir = if u < 0.0 { -1.0 } else { 1.0 };
        let mut acc = 0.0;
        let mut at = 0.0;
        while (u - at) * dir >= 1.0 {
            acc += dir * self.piece(at.min(at + dir), at.max(at + dir));
            at += dir;
        }
        if at != u {
            acc += dir * self.piece(at.min(u), at.max(u));
        }
        acc
    }

    pub fn map(&self, u: f64) -> f64 {
        self.center + self.hop * self.integral(u)
    }

    /// `map(i)` for `i = lo..=hi`.
    pub fn positions(&self, lo: i64, hi: i64) -> Vec<f64> {
        let (a, b) = (lo.min(0), hi.max(0));
        let pieces: Vec<f64> = (a..b).map(|k| self.piece(k as f64, k as f64 + 1.0)).collect();
        let mut x = vec![0.0; (b - a + 1) as usize];
        let zero = (-a) as usize;
        x[zero] = self.center;
        for k in zero..pieces.len() {
            x[k + 1] = x[k] + self.hop * pieces[k];
        }
        for k in (0..zero).rev() {
            x[k] = x[k + 1] - self.hop * pieces[k];
        }
        x[(lo - a) as usize..=(hi - a) as usize].to_vec()
    }

    /// [`positions`](Self::positions) on a tape with the integrand
    /// parameters `params`.
    pub fn positions_var<'t>(&self, tape: &'t Tape, params: &[Var<'t>], lo: i64, hi: i64) -> Vec<Var<'t>> {
        let (a, b) = (lo.min(0), hi.max(0));
        let pieces: Vec<Var<'t>> = (a..b)
            .map(|k| {
                let (g, w): (Vec<Var<'t>>, Vec<f64>) = self
                    .rule
                    .on(k as f64, k as f64 + 1.0)
                    .map(|(t, w)| {
                        let z = self.integrand.eval_const_input(tape, params, &[t / self.index_scale]);
                        (z.softplus(), w)
                    })
                    .unzip();
                // the floor integrates to exactly 0.1 over a unit piece
                tape.linear(&g, &w, INTEGRAND_FLOOR)
            })
            .collect();
        let mut x: Vec<Option<Var<'t>>> = vec![None; (b - a + 1) as usize];
        let zero = (-a) as usize;
        x[zero] = Some(tape.fused(self.center, &[]));
        for k in zero..pieces.len() {
            x[k + 1] = Some(x[k].unwrap() + self.hop * pieces[k]);
        }
        for k in (0..zero).rev() {
            x[k] = Some(x[k + 1].unwrap() - self.hop * pieces[k]);
        }
        x[(lo - a) as usize..=(hi - a) as usize]
            .iter()
            .map(|v| v.unwrap())
            .collect()
    }
}

/// Sample position of window index `u`.
pub fn mapping(net: &MonotonicMapNet, u: f64) -> f64 {
    net.map(u)
}

/// Fraction `s ∈ (0, 1)` placing the rise start between consecutive flat
/// starts: `y_i = x_{i−1} + s·(x_i − x_{i−1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatStartNet {
    pub net: Mlp,
    pub center: f64,
    pub scale: f64,
}

impl FlatStartNet {
    /// Starts at `s ≡ 0.5`. Inputs are `(x − center)/scale`.
    pub fn new(center: f64, scale: f64, seed: u64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid("scale", format!("must be positive, got {scale}")));
        }
        Ok(FlatStartNet {
            net: Mlp::new(&FLAT_WIDTHS, 0.0, seed),
            center,
            scale,
        })
    }

    pub fn fraction(&self, x_prev: f64, x: f64) -> f64 {
        let input = [(x_prev - self.center) / self.scale, (x - self.center) / self.scale];
        sigmoid(self.net.eval(&input))
    }

    pub fn fraction_var<'t>(&self, tape: &'t Tape, params: &[Var<'t>], x_prev: Var<'t>, x: Var<'t>) -> Var<'t> {
        let inv = 1.0 / self.scale;
        let input = [(x_prev - self.center) * inv, (x - self.center) * inv];
        self.net.eval_var(tape, params, &input).sigmoid()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn randomised(seed: u64) -> MonotonicMapNet {
        let mut net = MonotonicMapNet::new(1000.0, 50.0, 8.0, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let p: Vec<f64> = net
            .integrand
            .params()
            .iter()
            .map(|p| p + rng.random_range(-0.8..0.8))
            .collect();
        net.integrand.set_params(&p).unwrap();
        net
    }

    #[test]
    fn fresh_nets_are_uniform() {
        let net = MonotonicMapNet::new(500.0, 40.0, 10.0, 1).unwrap();
        for t in [-7.3, 0.0, 2.5, 9.0] {
            assert!((net.integrand(t) - 1.0).abs() < 1e-12);
        }
        assert_eq!(net.map(0.0), 500.0);
        assert!((net.map(3.0) - 620.0).abs() < 1e-9);
        assert!((net.map(-2.5) - 400.0).abs() < 1e-9);
        let flat = FlatStartNet::new(0.0, 100.0, 1).unwrap();
        assert_eq!(flat.fraction(-3.0, 50.0), 0.5);
    }

    #[test]
    fn positions_match_map_and_tape() {
        let net = randomised(4);
        let xs = net.positions(-5, 5);
        for (i, x) in (-5..=5).zip(&xs) {
            assert!((net.map(i as f64) - x).abs() < 1e-9);
        }
        let tape = Tape::new();
        let params = tape.lift_all(net.integrand.params()).unwrap();
        let vs = net.positions_var(&tape, &params, -5, 5);
        for (v, x) in vs.iter().zip(&xs) {
            assert!((v.value() - x).abs() < 1e-9);
        }
        let sub = net.positions(2, 4);
        assert_eq!(sub, xs[7..10].to_vec());
    }

    #[test]
    fn dense_trapezoid_oracle() {
        let net = randomised(9);
        let range = net.map(5.0) - net.map(-5.0);
        for i in -5..=5 {
            let u = i as f64;
            let n = 10_000;
            let h = u / n as f64;
            let mut acc = 0.5 * (net.integrand(0.0) + net.integrand(u));
            for k in 1..n {
                acc += net.integrand(k as f64 * h);
            }
            let oracle = net.center + net.hop * acc * h;
            assert!((net.map(u) - oracle).abs() < 1e-6 * range, "{i}");
        }
    }

    #[test]
    fn fractional_indices_interpolate_monotonically() {
        let net = randomised(2);
        let mut prev = net.map(-4.0);
        for k in 1..=80 {
            let x = net.map(-4.0 + k as f64 * 0.1);
            assert!(x > prev);
            prev = x;
        }
    }

    #[test]
    fn mlp_tape_agrees_with_plain() {
        let mlp = Mlp::new(&[2, 5, 3, 1], 0.3, 7);
        let mut p = mlp.params().to_vec();
        p.iter_mut().enumerate().for_each(|(i, v)| *v += 0.01 * i as f64);
        let mut mlp = mlp;
        mlp.set_params(&p).unwrap();
        let tape = Tape::new();
        let params = tape.lift_all(mlp.params()).unwrap();
        let input = tape.lift_all(&[0.4, -1.2]).unwrap();
        let a = mlp.eval_var(&tape, &params, &input).value();
        let b = mlp.eval_const_input(&tape, &params, &[0.4, -1.2]).value();
        let c = mlp.eval(&[0.4, -1.2]);
        assert!((a - c).abs() < 1e-14 && (b - c).abs() < 1e-14);
        assert!(mlp.set_params(&p[1..]).is_err());
    }

    #[test]
    fn invalid_construction() {
        assert!(MonotonicMapNet::new(0.0, 0.0, 1.0, 0).is_err());
        assert!(MonotonicMapNet::new(0.0, 1.0, -1.0, 0).is_err());
        assert!(FlatStartNet::new(0.0, 0.0, 0).is_err());
    }
}
