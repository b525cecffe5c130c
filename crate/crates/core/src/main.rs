use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gradstft::cli::{run, Command};

/// Differentiable STFT experiments.
///
/// Each experiment reads a TOML config. Every key is optional; defaults:
///
///   seed = 0
///
///   [signal]  kind = "sinusoid" | "alternating-sines" | "chirp-sine" |
///             "exponential-chirp" | "wav". Default per command:
///             sparsity  sinusoid, frequency = 0.0625, length = 4096
///             classify  alternating-sines, f1 = 0.1, f2 = 0.2,
///                       segment_length = 40, segments = 20
///             adaptive  chirp-sine, f_lo = 0.02, f_hi = 0.2,
///                       segment_length = 2500, segments = 6
///             Other fields: amplitude (sinusoid, 1.0), f0/f1/length
///             (exponential-chirp), path (wav, relative to the config).
///
///   [sparsity]  sigma0 = [4.0, 24.0], learning_rate = 1.0, iterations = 200
///
///   [classify]  sigma0 = [3.0, 12.0, 20.0], lambda = 0.1,
///               sigma_learning_rate = 0.05, weight_learning_rate = 0.001,
///               iterations = 3000, d_max = 128, optimizer = "adam"
///               ("adam" | "gradient-descent"), interior_margin = shortest
///               segment / 4
///
///   [adaptive]  iterations = 200, learning_rate = 0.001,
///               initial_length = 512, pad = 1024, half_range = covers the
///               padded signal, optimizer = "adam", dft = 8192 (bins, or
///               "support"), snapshot_every = 10, index_scale = half_range,
///               monotone = true (reject steps that raise the loss)
#[derive(Parser)]
#[command(name = "gradstft", version, verbatim_doc_comment)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Fit a Gaussian window length by maximising global sparsity.
    /// Writes history.csv, spectrogram_before.pgm, spectrogram_after.pgm, summary.json.
    Sparsity(Args),
    /// Jointly train window length and a linear frame classifier.
    /// Writes history.csv, summary.json.
    Classify(Args),
    /// Learn a variable trapezoid window layout.
    /// Writes layout.csv, history.csv, spectrogram.pgm, window-overlay.csv, summary.json.
    Adaptive(Args),
    /// Render an exported spectrogram CSV to <out>/<stem>.pgm.
    Render(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Config file (the spectrogram CSV for `render`)
    input: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config's seed
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Sparsity(a) => (Command::Sparsity, a),
        Sub::Classify(a) => (Command::Classify, a),
        Sub::Adaptive(a) => (Command::Adaptive, a),
        Sub::Render(a) => (Command::Render, a),
    };
    match run(command, &args.input, &args.out, args.seed) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
