//! STFT over a trapezoid window layout.
//!
//! Frame `i` covers samples `⌊y_i⌋ .. ⌈x_{i+1}⌉`. Its DFT either has that
//! length or every frame is zero padded to one shared length. On a tape, only ramp samples carry window variables; each ramp
//! sample is a single node `r = (m − y)/(x − y)` shared by the rising window
//! (`r`) and the falling one (`1 − r`).

use std::collections::HashMap;

use num_complex::Complex64;

use super::layout::{widen_rise, Trapezoid, WindowLayout};
use crate::error::{Error, Result};
use crate::spectral::WindowedFrame;
use crate::stft::{Signal, Spectrogram, MIN_LENGTH};
use crate::tape::Var;

/// DFT length used for each frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DftGrid {
    /// The window's own support length.
    Support,
    /// Every frame zero padded to this many bins.
    Fixed(usize),
}

/// Support length and DFT length of a frame.
fn frame_size(t: &Trapezoid, grid: DftGrid) -> Result<(usize, usize)> {
    let k = t.bins();
    if k < MIN_LENGTH {
        return Err(Error::Degenerate(format!(
            "window {} spans {k} samples, fewer than {MIN_LENGTH}",
            t.index
        )));
    }
    match grid {
        DftGrid::Support => Ok((k, k)),
        DftGrid::Fixed(n) if k <= n => Ok((k, n)),
        DftGrid::Fixed(n) => Err(Error::Degenerate(format!(
            "window {} spans {k} samples, more than the {n}-point grid",
            t.index
        ))),
    }
}

/// Spectrum of one trapezoid frame.
pub fn adaptive_frame(signal: &Signal, t: &Trapezoid, grid: DftGrid) -> Result<Vec<Complex64>> {
    let (k, bins) = frame_size(t, grid)?;
    let m0 = t.first_sample();
    let samples: Vec<f64> = (0..k).map(|j| signal.at(m0 + j as i64)).collect();
    let window: Vec<f64> = (0..k).map(|j| t.value((m0 + j as i64) as f64)).collect();
    let frame = WindowedFrame::new(bins, samples, (0..k).collect(), window, vec![None; k]);
    Ok(frame.into_spectrum())
}

/// One frame per surviving window, each with a DFT as long as its
/// support, centred at `(x_i + y_{i+1})/2`.
pub fn adaptive_stft(signal: &Signal, layout: &WindowLayout) -> Result<Spectrogram> {
    adaptive_stft_on(signal, layout, DftGrid::Support)
}

pub fn adaptive_stft_on(signal: &Signal, layout: &WindowLayout, grid: DftGrid) -> Result<Spectrogram> {
    let frames = layout
        .windows()
        .iter()
        .map(|t| adaptive_frame(signal, t, grid))
        .collect::<Result<Vec<_>>>()?;
    Spectrogram::new(frames, layout.centers())
}

/// Window boundaries on a tape, indexed like [`WindowLayout`].
#[derive(Debug, Clone)]
pub struct TapeLayout<'t> {
    pub first_index: i64,
    pub x: Vec<Var<'t>>,
    pub y: Vec<Var<'t>>,
}

impl<'t> TapeLayout<'t> {
    /// Applies ramp widening to raw rise starts.
    pub fn new(first_index: i64, x: Vec<Var<'t>>, raw_y: Vec<Var<'t>>) -> Self {
        let y = raw_y
            .into_iter()
            .enumerate()
            .map(|(k, y)| {
                let (xp, xn) = (x[k], x[k + 1]);
                let widened = widen_rise(y.value(), xp.value(), xn.value());
                if widened == y.value() {
                    y
                } else if widened == xp.value() {
                    xp
                } else {
                    xn - super::layout::MIN_RAMP
                }
            })
            .collect();
        TapeLayout { first_index, x, y }
    }

    pub fn values(&self, signal_len: usize, pad: f64) -> Result<WindowLayout> {
        WindowLayout::new(
            self.first_index,
            self.x.iter().map(|v| v.value()).collect(),
            self.y.iter().map(|v| v.value()).collect(),
            signal_len,
            pad,
        )
    }

    /// Differentiable frames for the windows that survive in `layout`,
    /// which must be this layout's values.
    pub fn frames(&self, signal: &Signal, layout: &WindowLayout, grid: DftGrid) -> Result<Vec<WindowedFrame<'t>>> {
        let mut ramps: HashMap<i64, Vec<(i64, Var<'t>)>> = HashMap::new();
        let mut ramp = |i: i64| -> Vec<(i64, Var<'t>)> {
            ramps
                .entry(i)
                .or_insert_with(|| {
                    let k = (i - self.first_index) as usize;
                    let (x, y) = (self.x[k], self.y[k - 1]);
                    let width = x - y;
                    let mut m = y.value().ceil() as i64;
                    let mut out = Vec::new();
                    while (m as f64) < x.value() {
                        if signal.at(m) != 0.0 {
                            out.push((m, (m as f64 - y) / width));
                        }
                        m += 1;
                    }
                    out
                })
                .clone()
        };
        layout
            .windows()
            .iter()
            .map(|t| {
                let (k, bins) = frame_size(t, grid)?;
                let m0 = t.first_sample();
                let samples: Vec<f64> = (0..k).map(|j| signal.at(m0 + j as i64)).collect();
                let mut window: Vec<f64> = (0..k).map(|j| t.value((m0 + j as i64) as f64)).collect();
                let mut vars: Vec<Option<Var<'t>>> = vec![None; k];
                for (m, r) in ramp(t.index) {
                    let j = (m - m0) as usize;
                    window[j] = r.value();
                    vars[j] = Some(r);
                }
                for (m, r) in ramp(t.index + 1) {
                    let j = (m - m0) as usize;
                    let w = 1.0 - r;
                    window[j] = w.value();
                    vars[j] = Some(w);
                }
                Ok(WindowedFrame::new(bins, samples, (0..k).collect(), window, vars))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stft::{stft, GaussianStftConfig};
    use crate::tape::Tape;
    use std::f64::consts::PI;

    fn naive(signal: &Signal, t: &Trapezoid) -> Vec<Complex64> {
        let k = t.bins();
        let m0 = t.first_sample();
        (0..k)
            .map(|b| {
                (0..k)
                    .map(|j| {
                        let m = m0 + j as i64;
                        let v = signal.at(m) * t.value(m as f64);
                        Complex64::from_polar(v, -2.0 * PI * (b * j) as f64 / k as f64)
                    })
                    .sum()
            })
            .collect()
    }

    fn noise(len: usize) -> Signal {
        let s = (0..len).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        Signal::new(s, 1.0).unwrap()
    }

    #[test]
    fn frames_match_naive_dft() {
        let signal = noise(700);
        let x: Vec<f64> = (-4..=4).map(|k| 350.0 + 93.7 * k as f64 + 3.1 * (k * k) as f64).collect();
        let y: Vec<f64> = x.windows(2).map(|w| w[0] + 0.37 * (w[1] - w[0])).collect();
        let layout = WindowLayout::new(-4, x, y, 700, 1024.0).unwrap();
        let spec = adaptive_stft(&signal, &layout).unwrap();
        for (frame, t) in spec.frames().iter().zip(layout.windows()) {
            for (a, b) in frame.iter().zip(naive(&signal, t)) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_signal_gives_zero_frames() {
        let signal = Signal::new(vec![0.0; 300], 1.0).unwrap();
        let layout = WindowLayout::uniform(300, 40.0, 6, 100.0).unwrap();
        let spec = adaptive_stft(&signal, &layout).unwrap();
        assert!(spec.frames().iter().flatten().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn peak_bin_agrees_with_gaussian_stft() {
        // uniform hop 64 gives 96-sample supports: bin 12 of 96, bin 8 of 64
        let f = 8.0 / 64.0;
        let s: Vec<f64> = (0..2048).map(|t| (2.0 * PI * f * t as f64).sin()).collect();
        let signal = Signal::new(s, 1.0).unwrap();
        let layout = WindowLayout::uniform(2048, 64.0, 12, 0.0).unwrap();
        let spec = adaptive_stft(&signal, &layout).unwrap();
        let gauss = stft(&signal, &GaussianStftConfig::new(64.0 / 6.0 + 0.01).unwrap()).unwrap();
        let peak_freq = |mags: Vec<f64>| {
            let n = mags.len();
            let k = (0..n / 2).max_by(|&a, &b| mags[a].total_cmp(&mags[b])).unwrap();
            k as f64 / n as f64
        };
        let mid = spec.len() / 2;
        let a = peak_freq(spec.magnitudes(mid));
        let b = peak_freq(gauss.magnitudes(gauss.len() / 2));
        assert!((a - f).abs() <= 1.0 / 96.0, "{a}");
        assert!((b - f).abs() < 1e-12, "{b}");
    }

    #[test]
    fn short_support_is_rejected() {
        let t = Trapezoid {
            index: 0,
            rise: 0.0,
            flat: 1.0,
            fall: 1.5,
            end: 2.0,
        };
        assert!(adaptive_frame(&noise(10), &t, DftGrid::Support).is_err());
        let t = Trapezoid {
            end: 40.0,
            fall: 30.0,
            ..t
        };
        assert!(adaptive_frame(&noise(50), &t, DftGrid::Fixed(32)).is_err());
        assert_eq!(adaptive_frame(&noise(50), &t, DftGrid::Fixed(64)).unwrap().len(), 64);
    }

    #[test]
    fn tape_frames_match_plain() {
        let signal = noise(500);
        let tape = Tape::new();
        let xv: Vec<f64> = (-3..=3).map(|k| 250.0 + 120.0 * k as f64).collect();
        let yv: Vec<f64> = xv.windows(2).map(|w| w[0] + 0.6 * (w[1] - w[0])).collect();
        let tl = TapeLayout::new(-3, tape.lift_all(&xv).unwrap(), tape.lift_all(&yv).unwrap());
        let layout = tl.values(500, 1024.0).unwrap();
        for grid in [DftGrid::Support, DftGrid::Fixed(512)] {
            let frames = tl.frames(&signal, &layout, grid).unwrap();
            let spec = adaptive_stft_on(&signal, &layout, grid).unwrap();
            for (f, g) in frames.iter().zip(spec.frames()) {
                assert_eq!(f.bins(), g.len());
                for (a, b) in f.spectrum().iter().zip(g) {
                    assert!((a - b).norm() < 1e-9);
                }
            }
        }
    }
}
