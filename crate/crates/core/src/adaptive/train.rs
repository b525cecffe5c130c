//! Training the window layout against the clipped concentration loss.

use super::layout::{WindowLayout, DEFAULT_PAD};
use super::nets::{FlatStartNet, MonotonicMapNet};
use super::transform::{DftGrid, TapeLayout};
use crate::error::{Error, Result};
use crate::history::{Failure, LayoutSnapshot, Record, TrainHistory};
use crate::optim::{safeguarded_move, Adam, Evaluation, Optimizer, Step, MAX_HALVINGS};
use crate::sparsity::sparsity_loss_adaptive;
use crate::stft::Signal;
use crate::tape::{Tape, Var};

/// Initial support length of the uniform layout.
pub const DEFAULT_INITIAL_LENGTH: f64 = 512.0;
/// Shared DFT length for training frames.
pub const DEFAULT_GRID: usize = 8192;

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    /// Indices run over `[−I, I]`; `None` covers the padded signal with the
    /// initial uniform layout plus one spare index per side.
    pub half_range: Option<usize>,
    pub initial_length: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub pad: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Layout snapshots are kept every this many iterations (0: never).
    pub snapshot_every: usize,
    pub grid: DftGrid,
    /// Window indices are divided by this before entering the map network;
    /// `None` uses the half range.
    pub index_scale: Option<f64>,
    /// Reject moves that increase the loss. When off, every feasible step
    /// is taken and the best iterate is returned.
    pub monotone: bool,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            half_range: None,
            initial_length: DEFAULT_INITIAL_LENGTH,
            iterations: 200,
            learning_rate: 1e-3,
            pad: DEFAULT_PAD,
            seed: 0,
            optimizer: Optimizer::Adam,
            snapshot_every: 10,
            grid: DftGrid::Fixed(DEFAULT_GRID),
            index_scale: None,
            monotone: true,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_length >= 60.0 && self.initial_length.is_finite()) {
            return Err(Error::invalid(
                "initial_length",
                format!("must be at least 60 samples, got {}", self.initial_length),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", format!("must be positive, got {}", self.learning_rate)));
        }
        if !(self.pad >= 0.0 && self.pad.is_finite()) {
            return Err(Error::invalid("pad", format!("must be non-negative, got {}", self.pad)));
        }
        if let DftGrid::Fixed(n) = self.grid {
            if (n as f64) < self.initial_length {
                return Err(Error::invalid("grid", format!("{n} bins cannot hold the initial windows")));
            }
        }
        if self.half_range == Some(0) {
            return Err(Error::invalid("half_range", "must be at least 1"));
        }
        Ok(())
    }

    /// Spacing of the initial flat starts; rise and flat each take half.
    pub fn initial_hop(&self) -> f64 {
        self.initial_length / 1.5
    }

    pub fn resolved_half_range(&self, signal_len: usize) -> usize {
        self.half_range.unwrap_or_else(|| {
            let reach = 0.5 * signal_len as f64 + self.pad;
            (reach / self.initial_hop()).ceil() as usize + 1
        })
    }
}

/// Both networks plus the fixed geometry they are evaluated on.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveModel {
    pub map: MonotonicMapNet,
    pub flat: FlatStartNet,
    pub half_range: usize,
    pub signal_len: usize,
    pub pad: f64,
    pub grid: DftGrid,
}

impl AdaptiveModel {
    /// Uniform initial layout centred on the signal.
    pub fn new(signal_len: usize, config: &AdaptiveConfig) -> Result<Self> {
        config.validate()?;
        let half_range = config.resolved_half_range(signal_len);
        let center = 0.5 * signal_len as f64;
        let scale = config.index_scale.unwrap_or(half_range as f64);
        let map = MonotonicMapNet::new(center, config.initial_hop(), scale, config.seed)?;
        let flat = FlatStartNet::new(center, signal_len.max(1) as f64, config.seed.wrapping_add(1))?;
        Ok(AdaptiveModel {
            map,
            flat,
            half_range,
            signal_len,
            pad: config.pad,
            grid: config.grid,
        })
    }

    pub fn param_count(&self) -> usize {
        self.map.integrand.param_count() + self.flat.net.param_count()
    }

    /// Integrand parameters followed by flat-start parameters.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.map.integrand.params().to_vec();
        p.extend_from_slice(self.flat.net.params());
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::invalid("params", "length mismatch"));
        }
        let split = self.map.integrand.param_count();
        self.map.integrand.set_params(&params[..split])?;
        self.flat.net.set_params(&params[split..])
    }

    pub fn layout(&self) -> Result<WindowLayout> {
        super::layout::layout_from_nets(&self.map, &self.flat, self.half_range, self.signal_len, self.pad)
    }

    /// Layout boundaries on a tape for parameters `params`.
    pub fn tape_layout<'t>(&self, tape: &'t Tape, params: &[Var<'t>]) -> TapeLayout<'t> {
        let split = self.map.integrand.param_count();
        let i = self.half_range as i64;
        let x = self.map.positions_var(tape, &params[..split], -i, i);
        let y = x
            .windows(2)
            .map(|w| {
                let s = self.flat.fraction_var(tape, &params[split..], w[0], w[1]);
                w[0] + s * (w[1] - w[0])
            })
            .collect();
        TapeLayout::new(-i, x, y)
    }

    /// Clipped concentration loss of the layout given by `params`.
    pub fn loss_var<'t>(&self, tape: &'t Tape, params: &[Var<'t>], signal: &Signal) -> Result<(Var<'t>, WindowLayout)> {
        let tl = self.tape_layout(tape, params);
        let layout = tl.values(self.signal_len, self.pad)?;
        let frames = tl.frames(signal, &layout, self.grid)?;
        Ok((sparsity_loss_adaptive(tape, &frames)?, layout))
    }

    pub fn loss(&self, signal: &Signal) -> Result<f64> {
        let tape = Tape::new();
        let params = tape.lift_all(&self.params())?;
        Ok(self.loss_var(&tape, &params, signal)?.0.value())
    }

    fn evaluate(&self, params: &[f64], signal: &Signal) -> Result<(Evaluation, WindowLayout)> {
        let tape = Tape::new();
        let vars = tape.lift_all(params)?;
        let (loss, layout) = self.loss_var(&tape, &vars, signal)?;
        let grads = tape.backward(loss)?;
        Ok((
            Evaluation {
                loss: loss.value(),
                grad: grads.wrt_all(&vars),
            },
            layout,
        ))
    }
}

#[derive(Debug, Clone)]
pub struct AdaptiveFit {
    pub model: AdaptiveModel,
    pub layout: WindowLayout,
    pub history: TrainHistory,
}

fn snapshot(iteration: usize, layout: &WindowLayout) -> LayoutSnapshot {
    LayoutSnapshot {
        iteration,
        x: layout.xs().to_vec(),
        y: layout.ys().to_vec(),
    }
}

/// Halving search along `direction`. A monotone search also rejects
/// increases; otherwise only collapsed layouts are. `Err(true)` means every
/// candidate collapsed.
fn search(
    model: &AdaptiveModel,
    signal: &Signal,
    params: &[f64],
    current: &Evaluation,
    direction: &[f64],
    monotone: bool,
) -> Result<std::result::Result<(Step, WindowLayout), bool>> {
    let mut accepted = None;
    let mut collapsed = 0;
    let bar = if monotone { current.clone() } else { Evaluation { loss: f64::INFINITY, grad: Vec::new() } };
    let step = safeguarded_move(params, &bar, direction, |candidate| match model.evaluate(candidate, signal) {
        Ok((eval, l)) => {
            accepted = Some(l);
            Ok(Some(eval))
        }
        Err(Error::Degenerate(_)) | Err(Error::NonFinite(_)) => {
            collapsed += 1;
            Ok(None)
        }
        Err(e) => Err(e),
    })?;
    Ok(match step {
        // the last evaluated candidate is the accepted one
        Some(step) => Ok((step, accepted.expect("accepted step was evaluated"))),
        None => Err(collapsed == MAX_HALVINGS + 1),
    })
}

/// Descends the clipped concentration loss over both networks. With
/// `monotone` set every move is safeguarded: it is accepted only if the loss
/// does not increase, so the recorded loss is non-increasing. The returned
/// model is the best iterate seen.
pub fn train_adaptive(signal: &Signal, config: &AdaptiveConfig) -> Result<AdaptiveFit> {
    config.validate()?;
    if signal.is_silent() {
        return Err(Error::Degenerate("cannot adapt windows to a silent signal".into()));
    }
    let mut model = AdaptiveModel::new(signal.len(), config)?;
    let mut params = model.params();
    let (mut current, mut layout) = model.evaluate(&params, signal)?;
    let mut history = TrainHistory::default();
    let record = |it: usize, eval: &Evaluation, layout: &WindowLayout| {
        let mut r = Record::new(it, eval.loss);
        r.windows = Some(layout.len());
        r
    };
    history.push(record(0, &current, &layout));
    if config.snapshot_every > 0 {
        history.snapshots.push(snapshot(0, &layout));
    }
    let rates = vec![config.learning_rate; params.len()];
    let mut adam = (config.optimizer == Optimizer::Adam).then(|| Adam::new(params.len()));
    let mut best = (current.loss, params.clone(), layout.clone());

    for it in 1..=config.iterations {
        if current.grad.iter().any(|g| !g.is_finite()) {
            history.failure = Some(Failure::NonFinite);
            break;
        }
        let direction = match &mut adam {
            Some(adam) => adam.step(&current.grad, &rates),
            None => current.grad.iter().map(|g| -config.learning_rate * g).collect(),
        };
        let mut outcome = search(&model, signal, &params, &current, &direction, config.monotone)?;
        if outcome.is_err() && config.monotone {
            if let Some(adam) = &mut adam {
                // stale moments can point uphill; restart along the gradient
                *adam = Adam::new(params.len());
                let peak = current.grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
                if peak > 0.0 {
                    let fallback: Vec<f64> = current.grad.iter().map(|g| -config.learning_rate * g / peak).collect();
                    outcome = search(&model, signal, &params, &current, &fallback, true)?;
                }
            }
        }
        let (step, accepted) = match outcome {
            Ok(found) => found,
            Err(collapsed) => {
                if collapsed {
                    history.failure = Some(Failure::LayoutCollapsed);
                } else {
                    history.converged = true;
                }
                break;
            }
        };
        params = step.params;
        current = step.eval;
        layout = accepted;
        history.push(record(it, &current, &layout));
        if config.snapshot_every > 0 && it % config.snapshot_every == 0 {
            history.snapshots.push(snapshot(it, &layout));
        }
        if current.loss < best.0 {
            best = (current.loss, params.clone(), layout.clone());
        }
    }
    let (_, params, layout) = best;
    model.set_params(&params)?;
    Ok(AdaptiveFit {
        model,
        layout,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::compare;
    use crate::signals::generate::sinusoid;

    #[test]
    fn default_range_covers_padded_signal() {
        let c = AdaptiveConfig::default();
        let model = AdaptiveModel::new(8000, &c).unwrap();
        let l = model.layout().unwrap();
        let first = l.windows().first().unwrap();
        let last = l.windows().last().unwrap();
        assert!(first.rise <= -c.pad + 1e-9 || first.index == -(model.half_range as i64) + 1);
        assert!(last.end >= 8000.0 + c.pad - 1e-9);
        assert!(l.lengths().iter().all(|&v| (v - 512.0).abs() < 1e-9));
    }

    #[test]
    fn loss_gradient_matches_differences() {
        let signal = crate::signals::chirp_sine(0.02, 0.2, 600, 4).unwrap();
        let config = AdaptiveConfig {
            initial_length: 300.0,
            pad: 200.0,
            ..AdaptiveConfig::default()
        };
        let model = AdaptiveModel::new(signal.len(), &config).unwrap();
        let mut p = model.params();
        // move off the flat initial point deterministically
        for (k, v) in p.iter_mut().enumerate() {
            *v += 0.02 * ((k * 37 % 11) as f64 - 5.0) / 5.0;
        }
        let pairs = compare(|t, v| Ok(model.loss_var(t, v, &signal)?.0), &p, 1e-6).unwrap();
        let worst = pairs
            .iter()
            .filter(|g| g.analytic.abs() > 1e-6)
            .map(|g| g.relative_error())
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "worst relative error {worst}");
    }

    #[test]
    fn training_never_increases_loss() {
        let signal = sinusoid(0.05, 3000, 1.0).unwrap();
        let config = AdaptiveConfig {
            iterations: 5,
            pad: 256.0,
            initial_length: 300.0,
            ..AdaptiveConfig::default()
        };
        let fit = train_adaptive(&signal, &config).unwrap();
        let losses: Vec<f64> = fit.history.records.iter().map(|r| r.loss).collect();
        assert!(losses.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(fit.model.loss(&signal).unwrap(), *losses.last().unwrap());
    }

    #[test]
    fn silent_signal_rejected() {
        let s = Signal::new(vec![0.0; 100], 1.0).unwrap();
        assert!(train_adaptive(&s, &AdaptiveConfig::default()).is_err());
    }
}
