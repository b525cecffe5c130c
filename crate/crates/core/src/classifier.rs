//! Joint optimisation of the Gaussian window width and a linear softmax
//! frame classifier.
//!
//! Each STFT frame's magnitude spectrum, zero padded to `d_max` bins, feeds
//! a linear layer followed by a softmax. The loss is the summed
//! cross-entropy over frames plus `λ/σ`, which discourages short windows.
//! σ, the weights and the biases are updated together by gradient descent.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::history::{Failure, Record, TrainHistory};
use crate::optim::{Adam, Optimizer};
use crate::spectral::WindowedFrame;
use crate::stft::{effective_length, GaussianStftConfig, GaussianWindow, Signal, MIN_LENGTH};
use crate::tape::{Tape, Var};

pub const DEFAULT_D_MAX: usize = 128;
pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const INIT_SCALE: f64 = 0.01;

/// Linear layer `classes × d_max` plus bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl ClassifierParams {
    /// Uniform weights in `[−0.01, 0.01]` from `seed`, zero bias.
    pub fn init(classes: usize, d_max: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..classes)
            .map(|_| (0..d_max).map(|_| rng.random_range(-INIT_SCALE..=INIT_SCALE)).collect())
            .collect();
        ClassifierParams {
            weights,
            bias: vec![0.0; classes],
        }
    }

    pub fn zeros(classes: usize, d_max: usize) -> Self {
        ClassifierParams {
            weights: vec![vec![0.0; d_max]; classes],
            bias: vec![0.0; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.bias.len()
    }

    pub fn d_max(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn flat(&self) -> Vec<f64> {
        self.weights.iter().flatten().chain(&self.bias).copied().collect()
    }
}

/// Frame centres with their class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrames {
    pub centers: Vec<i64>,
    pub labels: Vec<usize>,
    /// Distance from each centre to the nearest label change, in samples.
    pub boundary_distance: Vec<usize>,
    pub classes: usize,
}

impl LabeledFrames {
    /// Labels each centre with the class of the sample it sits on.
    pub fn from_sample_labels(centers: &[i64], sample_labels: &[usize]) -> Result<Self> {
        if sample_labels.is_empty() {
            return Err(Error::invalid("labels", "no sample labels"));
        }
        let classes = sample_labels.iter().max().unwrap() + 1;
        let changes: Vec<usize> = (1..sample_labels.len())
            .filter(|&i| sample_labels[i] != sample_labels[i - 1])
            .collect();
        let mut labels = Vec::with_capacity(centers.len());
        let mut boundary_distance = Vec::with_capacity(centers.len());
        for &m in centers {
            let idx = usize::try_from(m)
                .ok()
                .filter(|&i| i < sample_labels.len())
                .ok_or_else(|| Error::invalid("centers", format!("centre {m} has no label")))?;
            labels.push(sample_labels[idx]);
            let d = changes
                .iter()
                .map(|&c| (c as i64 - m).unsigned_abs() as usize)
                .min()
                .unwrap_or(usize::MAX);
            boundary_distance.push(d);
        }
        Ok(LabeledFrames {
            centers: centers.to_vec(),
            labels,
            boundary_distance,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Frames whose centre is at least `margin` samples from a boundary.
    pub fn interior(&self, margin: usize) -> Vec<bool> {
        self.boundary_distance.iter().map(|&d| d >= margin).collect()
    }
}

/// Length of the shortest run of equal labels.
pub fn shortest_segment(sample_labels: &[usize]) -> usize {
    let mut best = usize::MAX;
    let mut run = 0;
    for (i, l) in sample_labels.iter().enumerate() {
        if i > 0 && *l != sample_labels[i - 1] {
            best = best.min(run);
            run = 0;
        }
        run += 1;
    }
    best.min(run)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub lambda: f64,
    pub sigma_learning_rate: f64,
    pub weight_learning_rate: f64,
    pub max_iters: usize,
    pub d_max: usize,
    pub seed: u64,
    /// Centres closer than this to a segment boundary are left out of the
    /// reported accuracy. `None` uses a quarter of the shortest segment.
    pub interior_margin: Option<usize>,
    pub optimizer: Optimizer,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            lambda: DEFAULT_LAMBDA,
            sigma_learning_rate: 0.05,
            weight_learning_rate: 0.001,
            max_iters: 3000,
            d_max: DEFAULT_D_MAX,
            seed: 0,
            interior_margin: None,
            optimizer: Optimizer::Adam,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be non-negative, got {}", self.lambda)));
        }
        for (name, lr) in [
            ("sigma_learning_rate", self.sigma_learning_rate),
            ("weight_learning_rate", self.weight_learning_rate),
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {lr}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be positive"));
        }
        if self.d_max < MIN_LENGTH {
            return Err(Error::invalid("d_max", format!("must be at least {MIN_LENGTH}")));
        }
        Ok(())
    }

    /// Largest σ whose window still fits in `d_max` bins.
    pub fn sigma_ceiling(&self) -> f64 {
        // ⌊6σ⌋ ≤ d_max  ⇔  σ < (d_max + 1)/6
        (self.d_max as f64 + 1.0) / 6.0 - 1e-9
    }

    pub fn sigma_floor(&self) -> f64 {
        MIN_LENGTH as f64 / 6.0
    }
}

/// `softmax(ℓ)` computed with the max-shift.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

/// Class probabilities for one frame: softmax of `W·|F| + b` with `|F|`
/// zero padded to `d_max`.
pub fn classify_frame(frame: &[Complex64], params: &ClassifierParams) -> Result<Vec<f64>> {
    Ok(softmax(&logits(frame, params)?))
}

fn logits(frame: &[Complex64], params: &ClassifierParams) -> Result<Vec<f64>> {
    if frame.len() > params.d_max() {
        return Err(Error::invalid(
            "frame",
            format!("{} bins exceed the classifier input size {}", frame.len(), params.d_max()),
        ));
    }
    Ok(params
        .weights
        .iter()
        .zip(&params.bias)
        .map(|(w, b)| b + frame.iter().zip(w).map(|(c, w)| c.norm() * w).sum::<f64>())
        .collect())
}

/// Differentiable logits for one frame.
pub fn frame_logits<'t>(
    tape: &'t Tape,
    frame: &WindowedFrame<'t>,
    weights: &[Vec<Var<'t>>],
    bias: &[Var<'t>],
) -> Result<Vec<Var<'t>>> {
    if frame.bins() > weights.first().map_or(0, Vec::len) {
        return Err(Error::invalid("frame", "more bins than classifier inputs"));
    }
    Ok(weights
        .iter()
        .zip(bias)
        .map(|(w, &b)| frame.magnitude_readout(tape, w, b))
        .collect())
}

/// Softmax on the tape; each output is one fused node over all logits.
pub fn softmax_var<'t>(tape: &'t Tape, logits: &[Var<'t>]) -> Vec<Var<'t>> {
    let values: Vec<f64> = logits.iter().map(|l| l.value()).collect();
    let z = softmax(&values);
    (0..z.len())
        .map(|i| {
            let terms: Vec<(Var<'t>, f64)> = logits
                .iter()
                .enumerate()
                .map(|(j, &l)| (l, z[i] * ((i == j) as u8 as f64 - z[j])))
                .collect();
            tape.fused(z[i], &terms)
        })
        .collect()
}

/// `−log softmax(ℓ)[target]`, recorded as one node.
pub fn cross_entropy_from_logits<'t>(tape: &'t Tape, logits: &[Var<'t>], target: usize) -> Var<'t> {
    let values: Vec<f64> = logits.iter().map(|l| l.value()).collect();
    let z = softmax(&values);
    let value = log_sum_exp(&values) - values[target];
    let terms: Vec<(Var<'t>, f64)> = logits
        .iter()
        .enumerate()
        .map(|(j, &l)| (l, z[j] - (j == target) as u8 as f64))
        .collect();
    tape.fused(value, &terms)
}

/// `−Σ_m Σ_i t_i[m]·log z_i[m] + λ/σ` for one-hot targets.
pub fn classification_loss<'t>(
    tape: &'t Tape,
    predictions: &[Vec<Var<'t>>],
    labels: &[usize],
    sigma: Var<'t>,
    lambda: f64,
) -> Result<Var<'t>> {
    if predictions.len() != labels.len() {
        return Err(Error::invalid("labels", "one label per prediction required"));
    }
    let mut terms = Vec::with_capacity(labels.len() + 1);
    for (z, &t) in predictions.iter().zip(labels) {
        let p = *z
            .get(t)
            .ok_or_else(|| Error::invalid("labels", format!("class {t} out of range")))?;
        terms.push(-p.ln()?);
    }
    terms.push(lambda / sigma);
    Ok(tape.sum(&terms))
}

/// Outcome of [`train_joint`].
#[derive(Debug, Clone)]
pub struct JointFit {
    pub sigma: f64,
    pub params: ClassifierParams,
    pub history: TrainHistory,
}

impl JointFit {
    pub fn length(&self) -> usize {
        effective_length(self.sigma)
    }

    pub fn final_accuracy(&self) -> f64 {
        self.history.last().and_then(|r| r.accuracy).unwrap_or(0.0)
    }

    /// First iteration after which the window length never leaves
    /// `[lo, hi]`, if it ends there.
    pub fn settled_within(&self, lo: usize, hi: usize) -> Option<usize> {
        let mut settled = None;
        for r in &self.history.records {
            let n = r.length?;
            if (lo..=hi).contains(&n) {
                settled.get_or_insert(r.iteration);
            } else {
                settled = None;
            }
        }
        settled
    }
}

struct Forward {
    loss: f64,
    sigma_grad: f64,
    param_grad: Vec<f64>,
    accuracy: f64,
}

fn forward(
    signal: &Signal,
    sample_labels: &[usize],
    sigma: f64,
    params: &ClassifierParams,
    config: &ClassifierConfig,
    margin: usize,
) -> Result<Forward> {
    let stft_config = GaussianStftConfig::new(sigma)?;
    let frames = LabeledFrames::from_sample_labels(&stft_config.centers(signal.len()), sample_labels)?;
    let interior = frames.interior(margin);

    let tape = Tape::new();
    let s = tape.lift(sigma)?;
    let weights: Vec<Vec<Var<'_>>> = params
        .weights
        .iter()
        .map(|w| tape.lift_all(w))
        .collect::<Result<_>>()?;
    let bias = tape.lift_all(&params.bias)?;
    let window = GaussianWindow::on_tape(s, stft_config.length())?;

    let mut terms = Vec::with_capacity(frames.len() + 1);
    let (mut correct, mut counted) = (0usize, 0usize);
    for ((&m, &label), &inside) in frames.centers.iter().zip(&frames.labels).zip(&interior) {
        let frame = window.frame(signal, m);
        let logits = frame_logits(&tape, &frame, &weights, &bias)?;
        if inside {
            let predicted = argmax(&logits.iter().map(|l| l.value()).collect::<Vec<_>>());
            correct += (predicted == label) as usize;
            counted += 1;
        }
        terms.push(cross_entropy_from_logits(&tape, &logits, label));
    }
    terms.push(config.lambda / s);
    let loss = tape.sum(&terms);
    let grads = tape.backward(loss)?;
    let param_grad = weights
        .iter()
        .flatten()
        .chain(&bias)
        .map(|&v| grads.wrt(v))
        .collect();
    Ok(Forward {
        loss: loss.value(),
        sigma_grad: grads.wrt(s),
        param_grad,
        accuracy: if counted > 0 { correct as f64 / counted as f64 } else { 0.0 },
    })
}

fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

/// Simultaneous gradient descent on `(σ, W, b)`.
///
/// `sample_labels` gives the class of every signal sample; frame labels are
/// regenerated from it whenever the frame grid changes with σ.
pub fn train_joint(
    signal: &Signal,
    sample_labels: &[usize],
    sigma0: f64,
    config: &ClassifierConfig,
) -> Result<JointFit> {
    config.validate()?;
    if sample_labels.len() != signal.len() {
        return Err(Error::invalid("labels", "one label per sample required"));
    }
    let (floor, ceiling) = (config.sigma_floor(), config.sigma_ceiling());
    if !(sigma0 >= floor && sigma0 <= ceiling) {
        return Err(Error::invalid("sigma0", format!("{sigma0} outside [{floor}, {ceiling}]")));
    }
    let classes = sample_labels.iter().max().unwrap() + 1;
    let margin = config
        .interior_margin
        .unwrap_or_else(|| (shortest_segment(sample_labels) / 4).max(1));

    let mut params = ClassifierParams::init(classes, config.d_max, config.seed);
    let mut sigma = sigma0;
    let mut history = TrainHistory::default();
    let record = |it: usize, sigma: f64, f: &Forward| {
        let mut r = Record::new(it, f.loss);
        r.sigma = Some(sigma);
        r.length = Some(effective_length(sigma));
        r.accuracy = Some(f.accuracy);
        r
    };

    let param_count = classes * (config.d_max + 1);
    let mut rates = vec![config.weight_learning_rate; 1 + param_count];
    rates[0] = config.sigma_learning_rate;
    let mut adam = (config.optimizer == Optimizer::Adam).then(|| Adam::new(1 + param_count));

    let mut current = forward(signal, sample_labels, sigma, &params, config, margin)?;
    history.push(record(0, sigma, &current));
    for it in 1..=config.max_iters {
        if !current.sigma_grad.is_finite() || current.param_grad.iter().any(|g| !g.is_finite()) {
            history.failure = Some(Failure::NonFinite);
            break;
        }
        let mut grad = Vec::with_capacity(1 + current.param_grad.len());
        grad.push(current.sigma_grad);
        grad.extend_from_slice(&current.param_grad);
        let delta = match &mut adam {
            Some(adam) => adam.step(&grad, &rates),
            None => grad.iter().zip(&rates).map(|(g, lr)| -lr * g).collect(),
        };
        sigma = (sigma + delta[0]).clamp(floor, ceiling);
        let mut flat = params.flat();
        for (p, d) in flat.iter_mut().zip(&delta[1..]) {
            *p += d;
        }
        let d = config.d_max;
        for (c, row) in params.weights.iter_mut().enumerate() {
            row.copy_from_slice(&flat[c * d..(c + 1) * d]);
        }
        params.bias.copy_from_slice(&flat[classes * d..]);

        current = forward(signal, sample_labels, sigma, &params, config, margin)?;
        history.push(record(it, sigma, &current));
        if sigma <= floor {
            history.failure = Some(Failure::SigmaFloor);
            break;
        }
        if sigma >= ceiling {
            history.failure = Some(Failure::SigmaCeiling);
            break;
        }
    }
    Ok(JointFit {
        sigma,
        params,
        history,
    })
}

/// Loss of fixed parameters, exposed for gradient checks.
pub fn joint_loss<'t>(
    tape: &'t Tape,
    signal: &Signal,
    sample_labels: &[usize],
    sigma: Var<'t>,
    length: usize,
    weights: &[Vec<Var<'t>>],
    bias: &[Var<'t>],
    lambda: f64,
) -> Result<Var<'t>> {
    let hop = ((0.5 * length as f64).round() as usize).max(1);
    let centers: Vec<i64> = (0..signal.len()).step_by(hop).map(|m| m as i64).collect();
    let frames = LabeledFrames::from_sample_labels(&centers, sample_labels)?;
    let window = GaussianWindow::on_tape(sigma, length)?;
    let mut terms = Vec::with_capacity(frames.len() + 1);
    for (&m, &label) in frames.centers.iter().zip(&frames.labels) {
        let frame = window.frame(signal, m);
        let logits = frame_logits(tape, &frame, weights, bias)?;
        terms.push(cross_entropy_from_logits(tape, &logits, label));
    }
    terms.push(lambda / sigma);
    Ok(tape.sum(&terms))
}
