//! Trapezoid windows and their layout along the signal.
//!
//! Window `i` rises on `[y_i, x_i)`, is flat on `[x_i, y_{i+1})` and falls
//! on `[y_{i+1}, x_{i+1})`. Its fall and the next window's rise share one
//! ramp, so neighbouring windows overlap-add to one.

use std::fmt::Write as _;

use super::nets::{FlatStartNet, MonotonicMapNet};
use crate::error::{Error, Result};

/// Zero padding on each side of the signal, in samples.
pub const DEFAULT_PAD: f64 = 1024.0;
/// Ramps narrower than this are widened.
pub const MIN_RAMP: f64 = 1.0;

/// Window value at `m` for abscissae `y_i ≤ x_i ≤ y_{i+1} ≤ x_{i+1}`.
/// A zero-width rise steps straight to 1.
pub fn trapezoid_window(m: f64, x_i: f64, y_i: f64, x_next: f64, y_next: f64) -> f64 {
    if m < y_i || m >= x_next {
        0.0
    } else if m < x_i {
        (m - y_i) / (x_i - y_i)
    } else if m < y_next {
        1.0
    } else {
        1.0 - (m - y_next) / (x_next - y_next)
    }
}

/// Rise start actually used: at least [`MIN_RAMP`] before `x`, never
/// before `x_prev`.
pub fn widen_rise(y: f64, x_prev: f64, x: f64) -> f64 {
    if x - y < MIN_RAMP {
        (x - MIN_RAMP).max(x_prev)
    } else {
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    pub index: i64,
    /// `y_i`
    pub rise: f64,
    /// `x_i`
    pub flat: f64,
    /// `y_{i+1}`
    pub fall: f64,
    /// `x_{i+1}`
    pub end: f64,
}

impl Trapezoid {
    pub fn value(&self, m: f64) -> f64 {
        trapezoid_window(m, self.flat, self.rise, self.end, self.fall)
    }

    /// Support length `x_{i+1} − y_i`.
    pub fn length(&self) -> f64 {
        self.end - self.rise
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.flat + self.fall)
    }

    pub fn first_sample(&self) -> i64 {
        self.rise.floor() as i64
    }

    /// DFT length `⌈x_{i+1}⌉ − ⌊y_i⌋`.
    pub fn bins(&self) -> usize {
        (self.end.ceil() as i64 - self.first_sample()).max(0) as usize
    }
}

/// Flat starts `x_i` for `i = first..=first+n−1` and rise starts `y_i` for
/// `i = first+1..`, with the windows that survive the domain check.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowLayout {
    first_index: i64,
    x: Vec<f64>,
    y: Vec<f64>,
    windows: Vec<Trapezoid>,
    signal_len: usize,
    pad: f64,
}

impl WindowLayout {
    /// `x` holds `x_first..`, `y` holds `y_{first+1}..` and must be one
    /// shorter. Windows whose support misses `[−pad, M+pad]` are dropped.
    pub fn new(first_index: i64, x: Vec<f64>, y: Vec<f64>, signal_len: usize, pad: f64) -> Result<Self> {
        if x.len() < 3 || y.len() + 1 != x.len() {
            return Err(Error::invalid("layout", "need n ≥ 3 flat starts and n − 1 rise starts"));
        }
        if let Some(v) = x.iter().chain(&y).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(*v));
        }
        for k in 0..y.len() {
            // y_{i} sits in [x_{i−1}, x_i]
            if !(x[k] <= y[k] && y[k] <= x[k + 1] && x[k] < x[k + 1]) {
                return Err(Error::Degenerate(format!(
                    "window boundaries out of order at index {}",
                    first_index + k as i64 + 1
                )));
            }
        }
        let (lo, hi) = (-pad, signal_len as f64 + pad);
        let windows: Vec<Trapezoid> = (0..y.len() - 1)
            .map(|k| Trapezoid {
                index: first_index + k as i64 + 1,
                rise: y[k],
                flat: x[k + 1],
                fall: y[k + 1],
                end: x[k + 2],
            })
            .filter(|t| t.end > lo && t.rise < hi)
            .collect();
        if windows.len() < 2 {
            return Err(Error::Degenerate(format!(
                "only {} window(s) fall inside the padded signal",
                windows.len()
            )));
        }
        Ok(WindowLayout {
            first_index,
            x,
            y,
            windows,
            signal_len,
            pad,
        })
    }

    /// Evenly spaced flat starts `hop` apart around the signal centre, rises
    /// halfway between.
    pub fn uniform(signal_len: usize, hop: f64, half_range: usize, pad: f64) -> Result<Self> {
        let c = 0.5 * signal_len as f64;
        let i = half_range as i64;
        let x: Vec<f64> = (-i..=i).map(|k| c + hop * k as f64).collect();
        let y = x.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        WindowLayout::new(-i, x, y, signal_len, pad)
    }

    pub fn first_index(&self) -> i64 {
        self.first_index
    }

    pub fn xs(&self) -> &[f64] {
        &self.x
    }

    pub fn ys(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self, i: i64) -> Option<f64> {
        usize::try_from(i - self.first_index).ok().and_then(|k| self.x.get(k).copied())
    }

    pub fn y(&self, i: i64) -> Option<f64> {
        usize::try_from(i - self.first_index - 1).ok().and_then(|k| self.y.get(k).copied())
    }

    /// Surviving windows in index order.
    pub fn windows(&self) -> &[Trapezoid] {
        &self.windows
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn pad(&self) -> f64 {
        self.pad
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.windows.iter().map(Trapezoid::length).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.windows.iter().map(Trapezoid::center).collect()
    }

    /// `Σ_i w_i(m)` over surviving windows.
    pub fn coverage(&self, m: f64) -> f64 {
        self.windows.iter().map(|t| t.value(m)).sum()
    }

    /// Rows `i,x_i,y_i,length,center`, one per surviving window.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,x_i,y_i,length,center\n");
        for t in &self.windows {
            let _ = writeln!(out, "{},{},{},{},{}", t.index, t.flat, t.rise, t.length(), t.center());
        }
        out
    }

    /// Rows `center,length` for plotting window extents.
    pub fn overlay_csv(&self) -> String {
        let mut out = String::from("center,length\n");
        for t in &self.windows {
            let _ = writeln!(out, "{},{}", t.center(), t.length());
        }
        out
    }
}

/// `x_i = map(i)` for `i ∈ [−I, I]`, `y_i = x_{i−1} + s_i·(x_i − x_{i−1})`.
pub fn layout_from_nets(
    map: &MonotonicMapNet,
    flat: &FlatStartNet,
    half_range: usize,
    signal_len: usize,
    pad: f64,
) -> Result<WindowLayout> {
    if half_range < 1 {
        return Err(Error::invalid("half_range", "must be at least 1"));
    }
    let i = half_range as i64;
    let x = map.positions(-i, i);
    let y = x
        .windows(2)
        .map(|w| {
            let s = flat.fraction(w[0], w[1]);
            widen_rise(w[0] + s * (w[1] - w[0]), w[0], w[1])
        })
        .collect();
    WindowLayout::new(-i, x, y, signal_len, pad)
}

/// Kendall's τ-b between two equally long samples.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (mut concordant, mut discordant, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let da = (a[i] - a[j]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            let db = (b[i] - b[j]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            match (da, db) {
                (0, 0) => {}
                (0, _) => ties_a += 1,
                (_, 0) => ties_b += 1,
                _ if da == db => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n1 = (concordant + discordant + ties_a) as f64;
    let n2 = (concordant + discordant + ties_b) as f64;
    if n1 == 0.0 || n2 == 0.0 {
        return 0.0;
    }
    (concordant - discordant) as f64 / (n1 * n2).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_regions() {
        // rise [0, 10), flat [10, 30), fall [30, 50)
        let w = |m| trapezoid_window(m, 10.0, 0.0, 50.0, 30.0);
        assert_eq!(w(-1.0), 0.0);
        assert_eq!(w(5.0), 0.5);
        assert_eq!(w(10.0), 1.0);
        assert_eq!(w(29.0), 1.0);
        assert_eq!(w(40.0), 0.5);
        assert_eq!(w(50.0), 0.0);
        // zero-width rise
        assert_eq!(trapezoid_window(10.0, 10.0, 10.0, 20.0, 15.0), 1.0);
        assert_eq!(trapezoid_window(9.99, 10.0, 10.0, 20.0, 15.0), 0.0);
    }

    #[test]
    fn neighbours_sum_to_one_on_shared_ramp() {
        let l = WindowLayout::uniform(1000, 37.3, 20, DEFAULT_PAD).unwrap();
        let w = l.windows();
        for pair in w.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let mut m = b.rise.ceil();
            while m < b.flat {
                assert!((a.value(m) + b.value(m) - 1.0).abs() < 1e-15);
                m += 1.0;
            }
        }
    }

    #[test]
    fn uniform_layout_is_symmetric() {
        let l = WindowLayout::uniform(600, 40.0, 5, 10_000.0).unwrap();
        assert_eq!(l.len(), 9);
        let lengths = l.lengths();
        assert!(lengths.iter().all(|&v| (v - 60.0).abs() < 1e-12));
        let t = l.windows()[0];
        // rise and flat both half a hop
        assert!((t.flat - t.rise - 20.0).abs() < 1e-12);
        assert!((t.fall - t.flat - 20.0).abs() < 1e-12);
        assert_eq!(l.x(0), Some(300.0));
        assert_eq!(l.y(0), Some(280.0));
        assert_eq!(l.y(-5), None);
    }

    #[test]
    fn windows_outside_padding_are_dropped() {
        let l = WindowLayout::uniform(100, 100.0, 20, 50.0).unwrap();
        assert!(l.windows().iter().all(|t| t.end > -50.0 && t.rise < 150.0));
        assert!(l.len() < 39);
        assert!(WindowLayout::uniform(10, 1000.0, 1, 0.0).is_err());
    }

    #[test]
    fn out_of_order_rejected() {
        let x = vec![0.0, 10.0, 20.0];
        assert!(WindowLayout::new(-1, x.clone(), vec![5.0, 25.0], 20, 100.0).is_err());
        assert!(WindowLayout::new(-1, x.clone(), vec![5.0], 20, 100.0).is_err());
        assert!(WindowLayout::new(-1, x, vec![5.0, 15.0], 20, 100.0).is_err()); // a single window
    }

    #[test]
    fn widening() {
        assert_eq!(widen_rise(9.5, 0.0, 10.0), 9.0);
        assert_eq!(widen_rise(3.0, 0.0, 10.0), 3.0);
        assert_eq!(widen_rise(10.0, 9.6, 10.0), 9.6);
    }

    #[test]
    fn csv_rows() {
        let l = WindowLayout::uniform(200, 50.0, 2, 100.0).unwrap();
        let csv = l.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("i,x_i,y_i,length,center"));
        assert_eq!(lines.next(), Some("-1,50,25,75,62.5"));
        assert_eq!(csv.lines().count(), 1 + l.len());
        assert!(l.overlay_csv().starts_with("center,length\n62.5,75\n"));
    }

    #[test]
    fn kendall_examples() {
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]), 4.0 / 6.0);
        assert_eq!(kendall_tau(&[1.0, 1.0], &[1.0, 2.0]), 0.0);
    }
}
