use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hhsketch::harness::{run, Algorithm, ExperimentConfig, Report};
use hhsketch::Result;

/// Monte Carlo experiments for heavy-hitter sketches and sparse recovery.
#[derive(Parser)]
#[command(name = "hhsketch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count-Min list of ε-heavy hitters in strict streams.
    HhCm(Flags),
    /// Dyadic search over promise Count-Min levels.
    HhDyadic(Flags),
    /// ℓ2 heavy hitters (`--variant gm`) or Count-Sketch estimation (`--variant cs`).
    HhL2(Flags),
    /// Deterministic scheme over an explicit expander.
    HhDet(Flags),
    /// Non-adaptive ℓ2/ℓ2 recovery pipeline.
    SrPipeline(Flags),
    /// Adaptive sparse recovery (`--mode full|lowk|one-sparse`).
    SrAdaptive(Flags),
    /// Recovery under the spiked covariance model.
    Spiked(Flags),
    /// Numeric checks of Gaussian total variation and concentration facts.
    Facts(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// zipf, planted, spiked or adversarial.
    #[arg(long)]
    dist: Option<String>,
    /// CSV output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// File of key=value lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Required success rate, or `auto`.
    #[arg(long)]
    threshold: Option<String>,
    /// quadratic or fast.
    #[arg(long)]
    schedule: Option<String>,
    /// full, lowk or one-sparse.
    #[arg(long)]
    mode: Option<String>,
    /// gm or cs.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    exponent: Option<f64>,
    #[arg(long)]
    deletions: Option<f64>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    a: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
    #[arg(long)]
    h: Option<u64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    clist: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Print the resolved config and exit.
    #[arg(long)]
    dry_run: bool,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        macro_rules! push {
            ($($field:ident),+) => {
                $(if let Some(x) = &self.$field {
                    v.push((stringify!($field), x.to_string()));
                })+
            };
        }
        push!(n, k, eps, delta, trials, seed, dist, threshold, schedule, mode, variant, length, exponent, deletions, ratio, q, a, c, h, zeta, clist, samples);
        if let Some(p) = &self.out {
            v.push(("out", p.display().to_string()));
        }
        v
    }

    fn resolve(&self, algorithm: Algorithm) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(algorithm);
        if let Some(path) = &self.config {
            cfg.apply_text(&std::fs::read_to_string(path)?)?;
        }
        for (key, value) in self.pairs() {
            cfg.set(key, &value)?;
        }
        Ok(cfg)
    }
}

fn execute(algorithm: Algorithm, flags: &Flags) -> Result<bool> {
    let cfg = flags.resolve(algorithm)?;
    if flags.dry_run {
        print!("{}", cfg.to_text());
        return Ok(true);
    }
    let report = run(&cfg)?;
    emit(&report)?;
    Ok(report.passed())
}

fn emit(report: &Report) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &report.config.out {
        Some(path) => report.write_csv(BufWriter::new(File::create(path)?))?,
        None => report.write_csv(&mut out)?,
    }
    for t in &report.tables {
        t.write(&mut out)?;
    }
    writeln!(out, "{}", report.summary_line())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (algorithm, flags) = match &cli.command {
        Command::HhCm(f) => (Algorithm::HhCm, f),
        Command::HhDyadic(f) => (Algorithm::HhDyadic, f),
        Command::HhL2(f) => (Algorithm::HhL2, f),
        Command::HhDet(f) => (Algorithm::HhDet, f),
        Command::SrPipeline(f) => (Algorithm::SrPipeline, f),
        Command::SrAdaptive(f) => (Algorithm::SrAdaptive, f),
        Command::Spiked(f) => (Algorithm::Spiked, f),
        Command::Facts(f) => (Algorithm::Facts, f),
    };
    match execute(algorithm, flags) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
