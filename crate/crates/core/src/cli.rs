//! Experiment runner behind the `gradstft` binary.
//!
//! Every command reads one TOML config, writes its files into an output
//! directory and returns the list of paths written. Outputs depend only on
//! the config and the seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{adaptive_stft, train_adaptive, AdaptiveConfig, DftGrid, DEFAULT_GRID, DEFAULT_INITIAL_LENGTH};
use crate::classifier::{train_joint, ClassifierConfig, DEFAULT_D_MAX, DEFAULT_LAMBDA};
use crate::error::{Error, Result};
use crate::history::TrainHistory;
use crate::optim::Optimizer;
use crate::signals::export::{render_csv, spectrogram_pgm, write_atomic};
use crate::signals::generate::sinusoid;
use crate::signals::{alternating_sines, chirp_sine, exponential_chirp, load_wav};
use crate::sparsity::optimize_sigma;
use crate::stft::{stft, GaussianStftConfig, Signal};

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sparsity,
    Classify,
    Adaptive,
    Render,
}

/// Input signal. Frequencies are in cycles per sample.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SignalSpec {
    Sinusoid {
        frequency: f64,
        length: usize,
        #[serde(default = "unit")]
        amplitude: f64,
    },
    AlternatingSines {
        f1: f64,
        f2: f64,
        segment_length: usize,
        segments: usize,
    },
    ChirpSine {
        f_lo: f64,
        f_hi: f64,
        segment_length: usize,
        segments: usize,
    },
    ExponentialChirp {
        f0: f64,
        f1: f64,
        length: usize,
    },
    /// PCM16 file; a relative path is resolved against the config's directory.
    Wav { path: PathBuf },
}

fn unit() -> f64 {
    1.0
}

impl SignalSpec {
    /// Signal plus per-sample class labels when the kind has them.
    pub fn build(&self, base: &Path) -> Result<(Signal, Option<Vec<usize>>)> {
        Ok(match self {
            SignalSpec::Sinusoid {
                frequency,
                length,
                amplitude,
            } => (sinusoid(*frequency, *length, *amplitude)?, None),
            SignalSpec::AlternatingSines {
                f1,
                f2,
                segment_length,
                segments,
            } => {
                let (s, labels) = alternating_sines(*f1, *f2, *segment_length, *segments)?;
                (s, Some(labels))
            }
            SignalSpec::ChirpSine {
                f_lo,
                f_hi,
                segment_length,
                segments,
            } => (chirp_sine(*f_lo, *f_hi, *segment_length, *segments)?, None),
            SignalSpec::ExponentialChirp { f0, f1, length } => (exponential_chirp(*f0, *f1, *length)?, None),
            SignalSpec::Wav { path } => (load_wav(base.join(path))?, None),
        })
    }

    fn default_for(command: Command) -> SignalSpec {
        match command {
            Command::Classify => SignalSpec::AlternatingSines {
                f1: 0.1,
                f2: 0.2,
                segment_length: 40,
                segments: 20,
            },
            Command::Adaptive => SignalSpec::ChirpSine {
                f_lo: 0.02,
                f_hi: 0.2,
                segment_length: 2500,
                segments: 6,
            },
            _ => SignalSpec::Sinusoid {
                frequency: 0.0625,
                length: 4096,
                amplitude: 1.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerName {
    Adam,
    GradientDescent,
}

impl From<OptimizerName> for Optimizer {
    fn from(o: OptimizerName) -> Self {
        match o {
            OptimizerName::Adam => Optimizer::Adam,
            OptimizerName::GradientDescent => Optimizer::GradientDescent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparsitySettings {
    pub sigma0: Vec<f64>,
    pub learning_rate: f64,
    pub iterations: usize,
}

impl Default for SparsitySettings {
    fn default() -> Self {
        SparsitySettings {
            sigma0: vec![4.0, 24.0],
            learning_rate: 1.0,
            iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySettings {
    pub sigma0: Vec<f64>,
    pub lambda: f64,
    pub sigma_learning_rate: f64,
    pub weight_learning_rate: f64,
    pub iterations: usize,
    pub d_max: usize,
    pub optimizer: OptimizerName,
    pub interior_margin: Option<usize>,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        let c = ClassifierConfig::default();
        ClassifySettings {
            sigma0: vec![3.0, 12.0, 20.0],
            lambda: DEFAULT_LAMBDA,
            sigma_learning_rate: c.sigma_learning_rate,
            weight_learning_rate: c.weight_learning_rate,
            iterations: c.max_iters,
            d_max: DEFAULT_D_MAX,
            optimizer: OptimizerName::Adam,
            interior_margin: None,
        }
    }
}

/// DFT length of the training frames: a bin count, or `"support"` for
/// each window's own length.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum DftSetting {
    Bins(usize),
    Named(String),
}

impl DftSetting {
    fn grid(&self) -> Result<DftGrid> {
        match self {
            DftSetting::Bins(n) => Ok(DftGrid::Fixed(*n)),
            DftSetting::Named(s) if s == "support" => Ok(DftGrid::Support),
            DftSetting::Named(s) => Err(Error::Config(format!(
                "adaptive.dft: expected a bin count or \"support\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveSettings {
    pub iterations: usize,
    pub learning_rate: f64,
    pub initial_length: f64,
    pub pad: f64,
    pub half_range: Option<usize>,
    pub optimizer: OptimizerName,
    pub dft: DftSetting,
    pub snapshot_every: usize,
    pub index_scale: Option<f64>,
    pub monotone: bool,
}

impl Default for AdaptiveSettings {
    fn default() -> Self {
        let c = AdaptiveConfig::default();
        AdaptiveSettings {
            iterations: c.iterations,
            learning_rate: c.learning_rate,
            initial_length: DEFAULT_INITIAL_LENGTH,
            pad: c.pad,
            half_range: None,
            optimizer: OptimizerName::Adam,
            dft: DftSetting::Bins(DEFAULT_GRID),
            snapshot_every: c.snapshot_every,
            index_scale: c.index_scale,
            monotone: c.monotone,
        }
    }
}

/// Parsed config file. Sections not used by a command are ignored.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub signal: Option<SignalSpec>,
    pub sparsity: SparsitySettings,
    pub classify: ClassifySettings,
    pub adaptive: AdaptiveSettings,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
            let msg = e.message().replace('\n', " ");
            Error::Config(match line {
                Some(l) => format!("line {l}: {msg}"),
                None => msg,
            })
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn signal(&self, command: Command, base: &Path) -> Result<(Signal, Option<Vec<usize>>)> {
        self.signal
            .clone()
            .unwrap_or_else(|| SignalSpec::default_for(command))
            .build(base)
    }
}

fn fmt_failure(h: &TrainHistory) -> Option<String> {
    h.failure.map(|f| f.to_string())
}

fn write_file(dir: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    write_atomic(&path, bytes)?;
    written.push(path);
    Ok(())
}

fn write_summary<T: Serialize>(dir: &Path, summary: &T, written: &mut Vec<PathBuf>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    write_file(dir, SUMMARY_FILE, text.as_bytes(), written)
}

fn check_starts(name: &'static str, starts: &[f64]) -> Result<()> {
    if starts.is_empty() {
        return Err(Error::invalid(name, "needs at least one start"));
    }
    Ok(())
}

#[derive(Serialize)]
struct SparsityStart {
    sigma0: f64,
    sigma: f64,
    length: usize,
    objective: f64,
    iterations: usize,
    converged: bool,
    failure: Option<String>,
}

#[derive(Serialize)]
struct SparsitySummary {
    command: &'static str,
    seed: u64,
    signal_length: usize,
    best_start: usize,
    starts: Vec<SparsityStart>,
}

pub fn cmd_sparsity(config: &RunConfig, base: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let s = &config.sparsity;
    check_starts("sigma0", &s.sigma0)?;
    let (signal, _) = config.signal(Command::Sparsity, base)?;
    let fits = s
        .sigma0
        .par_iter()
        .map(|&sigma0| optimize_sigma(&signal, sigma0, s.learning_rate, s.iterations))
        .collect::<Result<Vec<_>>>()?;

    let mut csv = String::from("start,sigma0,iteration,sigma,length,objective\n");
    for (k, (fit, sigma0)) in fits.iter().zip(&s.sigma0).enumerate() {
        for r in &fit.history.records {
            let _ = writeln!(
                csv,
                "{k},{sigma0},{},{},{},{}",
                r.iteration,
                r.sigma.unwrap_or(f64::NAN),
                r.length.unwrap_or(0),
                r.loss
            );
        }
    }
    let best = (0..fits.len())
        .max_by(|&a, &b| fits[a].objective.total_cmp(&fits[b].objective).then(b.cmp(&a)))
        .unwrap_or(0);

    let before = stft(&signal, &GaussianStftConfig::new(s.sigma0[0])?)?;
    let after = stft(&signal, &GaussianStftConfig::new(fits[best].sigma)?)?;

    let summary = SparsitySummary {
        command: "sparsity",
        seed: config.seed,
        signal_length: signal.len(),
        best_start: best,
        starts: fits
            .iter()
            .zip(&s.sigma0)
            .map(|(f, &sigma0)| SparsityStart {
                sigma0,
                sigma: f.sigma,
                length: f.length(),
                objective: f.objective,
                iterations: f.history.records.len() - 1,
                converged: f.history.converged,
                failure: fmt_failure(&f.history),
            })
            .collect(),
    };

    let mut written = Vec::new();
    write_file(out, "history.csv", csv.as_bytes(), &mut written)?;
    write_file(out, "spectrogram_before.pgm", &spectrogram_pgm(&before)?, &mut written)?;
    write_file(out, "spectrogram_after.pgm", &spectrogram_pgm(&after)?, &mut written)?;
    write_summary(out, &summary, &mut written)?;
    Ok(written)
}

#[derive(Serialize)]
struct ClassifyStart {
    sigma0: f64,
    sigma: f64,
    length: usize,
    loss: f64,
    accuracy: f64,
    iterations: usize,
    failure: Option<String>,
}

#[derive(Serialize)]
struct ClassifySummary {
    command: &'static str,
    seed: u64,
    lambda: f64,
    unregularized: bool,
    starts: Vec<ClassifyStart>,
}

pub fn cmd_classify(config: &RunConfig, base: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let c = &config.classify;
    check_starts("sigma0", &c.sigma0)?;
    let (signal, labels) = config.signal(Command::Classify, base)?;
    let labels = labels.ok_or_else(|| Error::Config("classify needs a labelled signal (kind = \"alternating-sines\")".into()))?;
    let trainer = ClassifierConfig {
        lambda: c.lambda,
        sigma_learning_rate: c.sigma_learning_rate,
        weight_learning_rate: c.weight_learning_rate,
        max_iters: c.iterations,
        d_max: c.d_max,
        seed: config.seed,
        interior_margin: c.interior_margin,
        optimizer: c.optimizer.into(),
    };
    trainer.validate()?;
    let fits = c
        .sigma0
        .par_iter()
        .map(|&sigma0| train_joint(&signal, &labels, sigma0, &trainer))
        .collect::<Result<Vec<_>>>()?;

    let mut csv = String::from("start,sigma0,iteration,sigma,length,loss,accuracy\n");
    for (k, (fit, sigma0)) in fits.iter().zip(&c.sigma0).enumerate() {
        for r in &fit.history.records {
            let _ = writeln!(
                csv,
                "{k},{sigma0},{},{},{},{},{}",
                r.iteration,
                r.sigma.unwrap_or(f64::NAN),
                r.length.unwrap_or(0),
                r.loss,
                r.accuracy.unwrap_or(f64::NAN)
            );
        }
    }
    let summary = ClassifySummary {
        command: "classify",
        seed: config.seed,
        lambda: c.lambda,
        unregularized: c.lambda == 0.0,
        starts: fits
            .iter()
            .zip(&c.sigma0)
            .map(|(f, &sigma0)| ClassifyStart {
                sigma0,
                sigma: f.sigma,
                length: f.length(),
                loss: f.history.records.last().map_or(f64::NAN, |r| r.loss),
                accuracy: f.final_accuracy(),
                iterations: f.history.records.len() - 1,
                failure: fmt_failure(&f.history),
            })
            .collect(),
    };
    let mut written = Vec::new();
    write_file(out, "history.csv", csv.as_bytes(), &mut written)?;
    write_summary(out, &summary, &mut written)?;
    Ok(written)
}

#[derive(Serialize)]
struct AdaptiveSummary {
    command: &'static str,
    seed: u64,
    signal_length: usize,
    windows: usize,
    iterations: usize,
    initial_loss: f64,
    final_loss: f64,
    converged: bool,
    failure: Option<String>,
    min_length: f64,
    median_length: f64,
    max_length: f64,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

pub fn cmd_adaptive(config: &RunConfig, base: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let a = &config.adaptive;
    let (signal, _) = config.signal(Command::Adaptive, base)?;
    let trainer = AdaptiveConfig {
        half_range: a.half_range,
        initial_length: a.initial_length,
        iterations: a.iterations,
        learning_rate: a.learning_rate,
        pad: a.pad,
        seed: config.seed,
        optimizer: a.optimizer.into(),
        snapshot_every: a.snapshot_every,
        grid: a.dft.grid()?,
        index_scale: a.index_scale,
        monotone: a.monotone,
    };
    let fit = train_adaptive(&signal, &trainer)?;
    let spec = adaptive_stft(&signal, &fit.layout)?;

    let mut csv = String::from("iteration,loss,windows\n");
    for r in &fit.history.records {
        let _ = writeln!(csv, "{},{},{}", r.iteration, r.loss, r.windows.unwrap_or(0));
    }
    let lengths = fit.layout.lengths();
    let records = &fit.history.records;
    let summary = AdaptiveSummary {
        command: "adaptive",
        seed: config.seed,
        signal_length: signal.len(),
        windows: fit.layout.len(),
        iterations: records.len() - 1,
        initial_loss: records[0].loss,
        final_loss: records[records.len() - 1].loss,
        converged: fit.history.converged,
        failure: fmt_failure(&fit.history),
        min_length: lengths.iter().copied().fold(f64::INFINITY, f64::min),
        median_length: median(&lengths),
        max_length: lengths.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    let mut written = Vec::new();
    write_file(out, "layout.csv", fit.layout.to_csv().as_bytes(), &mut written)?;
    write_file(out, "history.csv", csv.as_bytes(), &mut written)?;
    write_file(out, "spectrogram.pgm", &spectrogram_pgm(&spec)?, &mut written)?;
    write_file(out, "window-overlay.csv", fit.layout.overlay_csv().as_bytes(), &mut written)?;
    write_summary(out, &summary, &mut written)?;
    Ok(written)
}

/// Renders an exported spectrogram CSV to `<out>/<stem>.pgm`.
pub fn cmd_render(input: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let pgm = render_csv(&text)?;
    let stem = input
        .file_stem()
        .ok_or_else(|| Error::invalid("input", "path has no file name"))?;
    let mut written = Vec::new();
    write_file(out, &format!("{}.pgm", stem.to_string_lossy()), &pgm, &mut written)?;
    Ok(written)
}

/// Runs `command` on `input`, a config file (a spectrogram CSV for
/// `Render`). `seed` overrides the config's seed.
pub fn run(command: Command, input: &Path, out: &Path, seed: Option<u64>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    if command == Command::Render {
        return cmd_render(input, out);
    }
    let mut config = RunConfig::load(input)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let base = input.parent().unwrap_or(Path::new("."));
    match command {
        Command::Sparsity => cmd_sparsity(&config, base, out),
        Command::Classify => cmd_classify(&config, base, out),
        Command::Adaptive => cmd_adaptive(&config, base, out),
        Command::Render => unreachable!(),
    }
}
