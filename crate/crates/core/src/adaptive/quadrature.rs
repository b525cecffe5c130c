//! Clenshaw–Curtis quadrature on Chebyshev extreme points.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct ClenshawCurtis {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ClenshawCurtis {
    /// Rule with `points ≥ 2` nodes on `[−1, 1]`, exact for polynomials of
    /// degree `points − 1`.
    pub fn new(points: usize) -> Self {
        assert!(points >= 2, "Clenshaw-Curtis needs at least two nodes");
        let n = points - 1;
        let nf = n as f64;
        let mut nodes = Vec::with_capacity(points);
        let mut weights = Vec::with_capacity(points);
        for j in 0..=n {
            let theta = j as f64 * PI / nf;
            nodes.push(theta.cos());
            let mut acc = 1.0;
            for k in 1..=n / 2 {
                let b = if 2 * k == n { 1.0 } else { 2.0 };
                let kf = k as f64;
                acc -= b / (4.0 * kf * kf - 1.0) * (2.0 * kf * theta).cos();
            }
            let c = if j == 0 || j == n { 1.0 } else { 2.0 };
            weights.push(c * acc / nf);
        }
        ClenshawCurtis { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        self.on(a, b).map(|(t, w)| w * f(t)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_interval_length() {
        for points in [2, 3, 8, 32, 33] {
            let q = ClenshawCurtis::new(points);
            assert!((q.integrate(|_| 1.0, -1.0, 1.0) - 2.0).abs() < 1e-14);
            assert!((q.integrate(|_| 1.0, 3.0, 4.5) - 1.5).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let q = ClenshawCurtis::new(32);
        for d in 0..32 {
            let exact = (1.0 - (-1.0f64).powi(d + 1)) / (d + 1) as f64;
            let got = q.integrate(|t| t.powi(d), -1.0, 1.0);
            assert!((got - exact).abs() < 1e-13, "degree {d}: {got} vs {exact}");
        }
    }

    #[test]
    fn smooth_integrand() {
        let q = ClenshawCurtis::new(32);
        let got = q.integrate(f64::exp, 0.0, 2.0);
        assert!((got - (2f64.exp() - 1.0)).abs() < 1e-13);
        let got = q.integrate(|t| (3.0 * t).tanh(), -0.5, 1.0);
        let exact = ((3.0f64).cosh().ln() - (1.5f64).cosh().ln()) / 3.0;
        assert!((got - exact).abs() < 1e-10);
    }
}
