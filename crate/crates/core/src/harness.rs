//! Monte Carlo experiment runner: seeded trials, oracle scoring, Wilson
//! intervals, CSV reports and numeric checks of Gaussian facts.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution as _, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erf;

use crate::adaptive::{
    adaptive_k_recover, low_sparsity_recover, one_sparse_recover, AdaptiveConstants, LowSparsityConstants,
    MeasurementOracle, OneSparseConstants, RoundAccount,
};
use crate::count_min::{CmConstants, CountMinG3, DyadicG3};
use crate::error::{invalid, Error, Result};
use crate::guv::{verify_expansion, DetHHSketch, ExpansionReport, GuvParams};
use crate::l2::{bad_estimates, CountSketchEst, CsConstants, GaussianMedianSketch, GmConstants};
use crate::pipeline::{error_sq, Pipeline, ScheduleConstants, ScheduleKind, SpikedConstants, SpikedRecovery};
use crate::stream::{
    exact_heavy_hitters, gen_heads_over_noise, gen_power_law_signal, gen_spiked, gen_zipf_with_deletions, head_eps,
    head_tail, StreamMode, TurnstileStream,
};
use crate::util::{mix, norm2_sq, rng, splitmix64, top_k_indices};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    HhCm,
    HhDyadic,
    HhL2,
    HhDet,
    SrPipeline,
    SrAdaptive,
    Spiked,
    Facts,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::HhCm,
        Algorithm::HhDyadic,
        Algorithm::HhL2,
        Algorithm::HhDet,
        Algorithm::SrPipeline,
        Algorithm::SrAdaptive,
        Algorithm::Spiked,
        Algorithm::Facts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::HhCm => "hh-cm",
            Algorithm::HhDyadic => "hh-dyadic",
            Algorithm::HhL2 => "hh-l2",
            Algorithm::HhDet => "hh-det",
            Algorithm::SrPipeline => "sr-pipeline",
            Algorithm::SrAdaptive => "sr-adaptive",
            Algorithm::Spiked => "spiked",
            Algorithm::Facts => "facts",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self {
                    $($name::$variant => $text),+
                })
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => invalid(format!(concat!("unknown ", stringify!($name), " `{}`"), s)),
                }
            }
        }
    };
}

keyword_enum!(Distribution { Zipf => "zipf", Planted => "planted", Spiked => "spiked", Adversarial => "adversarial" });
keyword_enum!(AdaptiveMode { Full => "full", LowK => "lowk", OneSparse => "one-sparse" });
keyword_enum!(L2Variant { Gm => "gm", Cs => "cs" });

/// Every parameter of an experiment. Serializes to flat `key=value` text
/// that parses back to an identical config.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub dist: Distribution,
    pub out: Option<PathBuf>,
    /// Required success rate; `None` selects the algorithm's default.
    pub threshold: Option<f64>,
    pub schedule: ScheduleKind,
    pub mode: AdaptiveMode,
    pub variant: L2Variant,
    /// Stream length for Zipf and planted streams.
    pub length: usize,
    pub exponent: f64,
    pub deletions: f64,
    /// Promise ratio `|x_j| / ‖x_{−j}‖₂` for one-sparse inputs.
    pub ratio: f64,
    pub q: u64,
    pub a: usize,
    pub c: usize,
    pub h: u64,
    pub zeta: f64,
    pub clist: f64,
    /// Monte Carlo sample count for the Gaussian facts.
    pub samples: usize,
}

pub const KEYS: [&str; 24] = [
    "algorithm", "n", "k", "eps", "delta", "trials", "seed", "dist", "out", "threshold", "schedule", "mode", "variant",
    "length", "exponent", "deletions", "ratio", "q", "a", "c", "h", "zeta", "clist", "samples",
];

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        let base = Self {
            algorithm,
            n: 1 << 16,
            k: 16,
            eps: 0.05,
            delta: 0.01,
            trials: 100,
            seed: 1,
            dist: Distribution::Zipf,
            out: None,
            threshold: None,
            schedule: ScheduleKind::Quadratic,
            mode: AdaptiveMode::Full,
            variant: L2Variant::Gm,
            length: 20_000,
            exponent: 1.1,
            deletions: 0.2,
            ratio: 10.0,
            q: 13,
            a: 2,
            c: 2,
            h: 2,
            zeta: 0.1,
            clist: 2.25,
            samples: 1_000_000,
        };
        match algorithm {
            Algorithm::HhCm => Self { trials: 500, ..base },
            Algorithm::HhDyadic => Self { trials: 500, ..base },
            Algorithm::HhL2 => Self { n: 1 << 12, k: 8, eps: 0.1, delta: 0.05, trials: 300, dist: Distribution::Planted, ..base },
            Algorithm::HhDet => Self { n: 169, eps: 0.75, trials: 1000, dist: Distribution::Adversarial, length: 400, ..base },
            Algorithm::SrPipeline => Self { n: 1 << 14, k: 16, eps: 0.1, trials: 200, dist: Distribution::Planted, ..base },
            Algorithm::SrAdaptive => Self { n: 1 << 14, k: 64, eps: 0.25, trials: 100, dist: Distribution::Planted, ..base },
            Algorithm::Spiked => Self { n: 1 << 16, k: 32, eps: 0.2, delta: 0.05, trials: 400, dist: Distribution::Spiked, ..base },
            Algorithm::Facts => Self { delta: 0.05, trials: 1, ..base },
        }
    }

    /// Sets one parameter from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| Error::InvalidParameter(format!("{key}: cannot parse `{value}`")))
        }
        match key {
            "algorithm" => {
                let a: Algorithm = value.parse()?;
                if a != self.algorithm {
                    return invalid(format!("config is for `{a}`, running `{}`", self.algorithm));
                }
            }
            "n" => self.n = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "eps" => self.eps = num(key, value)?,
            "delta" => self.delta = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "dist" => self.dist = value.parse()?,
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            "threshold" => self.threshold = if value == "auto" { None } else { Some(num(key, value)?) },
            "schedule" => self.schedule = value.parse()?,
            "mode" => self.mode = value.parse()?,
            "variant" => self.variant = value.parse()?,
            "length" => self.length = num(key, value)?,
            "exponent" => self.exponent = num(key, value)?,
            "deletions" => self.deletions = num(key, value)?,
            "ratio" => self.ratio = num(key, value)?,
            "q" => self.q = num(key, value)?,
            "a" => self.a = num(key, value)?,
            "c" => self.c = num(key, value)?,
            "h" => self.h = num(key, value)?,
            "zeta" => self.zeta = num(key, value)?,
            "clist" => self.clist = num(key, value)?,
            "samples" => self.samples = num(key, value)?,
            _ => return invalid(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Applies `key=value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: no + 1, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| parse_err("expected key=value".into()))?;
            self.set(key.trim(), value.trim()).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(())
    }

    /// Defaults for `algorithm` overridden by the text.
    pub fn from_text(algorithm: Algorithm, text: &str) -> Result<Self> {
        let mut c = Self::new(algorithm);
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "algorithm" => self.algorithm.to_string(),
            "n" => self.n.to_string(),
            "k" => self.k.to_string(),
            "eps" => self.eps.to_string(),
            "delta" => self.delta.to_string(),
            "trials" => self.trials.to_string(),
            "seed" => self.seed.to_string(),
            "dist" => self.dist.to_string(),
            "out" => self.out.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            "threshold" => self.threshold.map_or("auto".to_string(), |t| t.to_string()),
            "schedule" => self.schedule.to_string(),
            "mode" => self.mode.to_string(),
            "variant" => self.variant.to_string(),
            "length" => self.length.to_string(),
            "exponent" => self.exponent.to_string(),
            "deletions" => self.deletions.to_string(),
            "ratio" => self.ratio.to_string(),
            "q" => self.q.to_string(),
            "a" => self.a.to_string(),
            "c" => self.c.to_string(),
            "h" => self.h.to_string(),
            "zeta" => self.zeta.to_string(),
            "clist" => self.clist.to_string(),
            "samples" => self.samples.to_string(),
            _ => return None,
        })
    }

    pub fn to_text(&self) -> String {
        KEYS.iter().map(|k| format!("{k}={}\n", self.get(k).unwrap_or_default())).collect()
    }

    /// Success rate a run must reach for a zero exit status.
    pub fn effective_threshold(&self) -> f64 {
        if let Some(t) = self.threshold {
            return t;
        }
        let three_sigma = |p: f64| 3.0 * (p * (1.0 - p) / self.trials.max(1) as f64).sqrt();
        match self.algorithm {
            Algorithm::HhCm | Algorithm::HhDyadic => 1.0 - self.delta - three_sigma(self.delta),
            Algorithm::HhL2 if self.variant == L2Variant::Cs => 1.0 - self.delta - three_sigma(self.delta),
            Algorithm::HhDet | Algorithm::Facts => 1.0,
            Algorithm::SrAdaptive if self.mode == AdaptiveMode::OneSparse => 0.99,
            Algorithm::Spiked => 1.0 - self.delta - 0.03,
            _ => 0.95,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("n must be positive");
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return invalid("need eps in (0,1] and delta in (0,1)");
        }
        let allowed: &[Distribution] = match self.algorithm {
            Algorithm::HhCm | Algorithm::HhDyadic => &[Distribution::Zipf, Distribution::Planted],
            Algorithm::HhL2 => &[Distribution::Planted, Distribution::Zipf],
            Algorithm::HhDet => &[Distribution::Adversarial, Distribution::Planted, Distribution::Zipf],
            Algorithm::SrPipeline => &[Distribution::Planted, Distribution::Spiked],
            Algorithm::SrAdaptive => &[Distribution::Planted],
            Algorithm::Spiked => &[Distribution::Spiked],
            Algorithm::Facts => &[self.dist],
        };
        if !allowed.contains(&self.dist) {
            return invalid(format!("{} does not support dist={}", self.algorithm, self.dist));
        }
        Ok(())
    }
}

/// Seed of trial `trial` under base seed `base`.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    splitmix64(base.wrapping_add(trial as u64)).1
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    /// Input variant or check name, empty when there is only one kind.
    pub case: String,
    pub success: bool,
    /// Scored quantity: missed items, squared error, bad estimates or a gap.
    pub metric: f64,
    /// Bound the metric is compared against.
    pub bound: f64,
    pub measurements: usize,
    pub rounds: usize,
    pub wall: Duration,
}

/// Whitespace-separated table readable by gnuplot.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# {}", self.title)?;
        writeln!(w, "# {}", self.columns.join(" "))?;
        for r in &self.rows {
            writeln!(w, "{}", r.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub config: ExperimentConfig,
    /// Extra header lines such as the expansion certificate.
    pub notes: Vec<String>,
    pub trials: Vec<TrialReport>,
    pub tables: Vec<Table>,
}

/// Wilson score interval for `hits` successes in `n` Bernoulli trials at
/// normal quantile `z`. Returns `(0, 1)` when `n = 0`.
pub fn wilson_interval(hits: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Two-sided normal quantile for the given confidence level.
pub fn z_two_sided(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + confidence / 2.0)
}

impl Report {
    pub fn successes(&self) -> usize {
        self.trials.iter().filter(|t| t.success).count()
    }

    pub fn failures(&self) -> usize {
        self.trials.len() - self.successes()
    }

    pub fn failure_rate(&self) -> Option<f64> {
        (!self.trials.is_empty()).then(|| self.failures() as f64 / self.trials.len() as f64)
    }

    /// 95% Wilson interval on the failure rate.
    pub fn failure_interval(&self) -> (f64, f64) {
        wilson_interval(self.failures(), self.trials.len(), z_two_sided(0.95))
    }

    /// True when the success rate reaches the threshold; an empty run passes.
    pub fn passed(&self) -> bool {
        match self.trials.len() {
            0 => true,
            n => self.successes() as f64 >= self.config.effective_threshold() * n as f64 - 1e-9,
        }
    }

    pub fn max_rounds(&self) -> usize {
        self.trials.iter().map(|t| t.rounds).max().unwrap_or(0)
    }

    pub fn mean_measurements(&self) -> f64 {
        if self.trials.is_empty() {
            return 0.0;
        }
        self.trials.iter().map(|t| t.measurements as f64).sum::<f64>() / self.trials.len() as f64
    }

    pub fn wall(&self) -> Duration {
        self.trials.iter().map(|t| t.wall).sum()
    }

    /// Header comments followed by one CSV row per trial. Wall time is left
    /// out so that replays are byte-identical.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# hhsketch {}", self.config.algorithm)?;
        for line in self.config.to_text().lines() {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "# trial_seed = splitmix64(seed + trial)")?;
        for n in &self.notes {
            writeln!(w, "# {n}")?;
        }
        let mut cw = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        cw.write_record(["trial", "seed", "case", "success", "metric", "bound", "measurements", "rounds"])
            .map_err(io)?;
        for t in &self.trials {
            cw.write_record([
                t.trial.to_string(),
                t.seed.to_string(),
                t.case.clone(),
                (t.success as u8).to_string(),
                t.metric.to_string(),
                t.bound.to_string(),
                t.measurements.to_string(),
                t.rounds.to_string(),
            ])
            .map_err(io)?;
        }
        cw.flush()?;
        Ok(())
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn summary_line(&self) -> String {
        let (lo, hi) = self.failure_interval();
        let rate = self.failure_rate().map_or("na".to_string(), |r| format!("{r:.4}"));
        format!(
            "{} trials={} successes={} failure_rate={} wilson95=[{:.4},{:.4}] threshold={:.4} mean_measurements={:.1} max_rounds={} status={}",
            self.config.algorithm,
            self.trials.len(),
            self.successes(),
            rate,
            lo,
            hi,
            self.config.effective_threshold(),
            self.mean_measurements(),
            self.max_rounds(),
            if self.passed() { "PASS" } else { "FAIL" },
        )
    }
}

struct Outcome {
    case: String,
    success: bool,
    metric: f64,
    bound: f64,
    measurements: usize,
    rounds: usize,
    accounting: Vec<RoundAccount>,
}

impl Outcome {
    fn new(success: bool, metric: f64, bound: f64, measurements: usize) -> Self {
        Self { case: String::new(), success, metric, bound, measurements, rounds: 0, accounting: Vec::new() }
    }
}

/// State shared by all trials of a run.
enum Context {
    None,
    Det { sketch: DetHHSketch, certificate: ExpansionReport },
}

/// Runs every trial of the experiment and collects the report.
pub fn run(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let mut report = Report { config: config.clone(), notes: Vec::new(), trials: Vec::new(), tables: Vec::new() };
    if config.trials == 0 {
        return Ok(report);
    }
    if config.algorithm == Algorithm::Facts {
        return run_facts(report);
    }
    let ctx = prepare(config, &mut report.notes)?;
    let mut accounting = None;
    for t in 0..config.trials {
        let seed = trial_seed(config.seed, t);
        let start = Instant::now();
        let o = trial(config, &ctx, seed)?;
        let wall = start.elapsed();
        if accounting.is_none() && !o.accounting.is_empty() {
            accounting = Some(o.accounting);
        }
        report.trials.push(TrialReport {
            trial: t,
            seed,
            case: o.case,
            success: o.success,
            metric: o.metric,
            bound: o.bound,
            measurements: o.measurements,
            rounds: o.rounds,
            wall,
        });
    }
    if let Some(acc) = accounting {
        report.tables.push(accounting_table(&acc));
    }
    if config.algorithm == Algorithm::SrAdaptive && config.mode == AdaptiveMode::OneSparse {
        let ll = (config.n as f64).log2().max(2.0).log2();
        let rows = vec![vec![report.max_rounds().to_string(), format!("{ll:.4}"), format!("{:.4}", report.max_rounds() as f64 / ll)]];
        report.tables.push(Table {
            title: "one-sparse rounds versus log2 log2 n".into(),
            columns: vec!["max_rounds".into(), "loglog_n".into(), "c".into()],
            rows,
        });
    }
    Ok(report)
}

fn prepare(config: &ExperimentConfig, notes: &mut Vec<String>) -> Result<Context> {
    if config.algorithm != Algorithm::HhDet {
        return Ok(Context::None);
    }
    let params = GuvParams::with_first_irreducible(config.q, config.a, config.c, config.h)?;
    let n = config.n.min(params.left_vertices() as usize);
    let sketch = DetHHSketch::new(params.clone(), n, config.eps, config.zeta, config.clist)?;
    let set_size = sketch.required_set_size();
    let required = (1.0 - config.zeta) * params.degree() as f64;
    let certificate = verify_expansion(&params, set_size, required)?;
    notes.push(format!("graph {params}"));
    notes.push(format!(
        "expansion certificate: sets of size {set_size} need |N(S)| >= {required:.2}*{set_size}; checked {} sets, min neighborhood {}, {}",
        certificate.sets_checked,
        certificate.min_neighborhood,
        if certificate.passed { "passed" } else { "FAILED" }
    ));
    Ok(Context::Det { sketch, certificate })
}

fn accounting_table(acc: &[RoundAccount]) -> Table {
    let rows = acc
        .iter()
        .map(|a| {
            vec![
                a.stage.to_string(),
                a.round.to_string(),
                format!("{:.3}", a.k),
                format!("{:.4}", a.eps),
                a.reps.to_string(),
                a.buckets.to_string(),
                a.universe.to_string(),
                a.found.to_string(),
                a.measurements.to_string(),
                a.rounds.to_string(),
            ]
        })
        .collect();
    Table {
        title: "measurement and round accounting of the first trial".into(),
        columns: ["stage", "round", "k", "eps", "reps", "buckets", "universe", "found", "measurements", "rounds"]
            .map(String::from)
            .to_vec(),
        rows,
    }
}

fn trial(cfg: &ExperimentConfig, ctx: &Context, seed: u64) -> Result<Outcome> {
    let input_seed = mix(&[seed, 0x1d]);
    let algo_seed = mix(&[seed, 0xa1]);
    match cfg.algorithm {
        Algorithm::HhCm | Algorithm::HhDyadic => {
            let stream = hh_stream(cfg, input_seed)?;
            let x = stream.materialize()?;
            let (out, space) = if cfg.algorithm == Algorithm::HhCm {
                let mut s = CountMinG3::new(cfg.n, cfg.eps, cfg.delta, CmConstants::default(), algo_seed)?;
                s.ingest(&stream)?;
                (s.query(), s.rows() * s.buckets())
            } else {
                let mut s = DyadicG3::new(cfg.n, cfg.eps, cfg.delta, CmConstants::default(), algo_seed)?;
                s.ingest(&stream)?;
                (s.query(), s.space())
            };
            let missed = missed(&exact_heavy_hitters(&x, cfg.eps, 1), &out);
            let mut o = Outcome::new(missed == 0, missed as f64, 0.0, space);
            o.case = format!("list={}", out.len());
            Ok(o)
        }
        Algorithm::HhL2 => l2_trial(cfg, input_seed, algo_seed),
        Algorithm::HhDet => {
            let Context::Det { sketch, certificate } = ctx else { unreachable!("det context prepared in run") };
            let (stream, case) = match cfg.dist {
                Distribution::Adversarial => adversarial_stream(sketch, cfg.eps, input_seed),
                _ => (hh_stream(&ExperimentConfig { n: sketch.n(), ..cfg.clone() }, input_seed)?, cfg.dist.to_string()),
            };
            let x = stream.materialize()?;
            let mut s = sketch.clone();
            s.ingest(&stream)?;
            let missed = missed(&exact_heavy_hitters(&x, cfg.eps, 1), &s.query());
            let mut o = Outcome::new(missed == 0 && certificate.passed, missed as f64, 0.0, s.counters().len());
            o.case = case;
            Ok(o)
        }
        Algorithm::SrPipeline => {
            let x = match cfg.dist {
                Distribution::Spiked => gen_spiked(cfg.n, cfg.k, cfg.eps, input_seed)?.x,
                _ => planted_signal(cfg, input_seed),
            };
            let p = Pipeline::build(
                cfg.n,
                cfg.k,
                cfg.eps,
                cfg.schedule,
                ScheduleConstants::default(),
                crate::weak::WeakConstants::lean(),
                algo_seed,
            )?;
            let y = p.measure(&x)?;
            let (r, oracle) = p.recover_with_oracle(&x, &y)?;
            let err = error_sq(&x, &r.approx);
            let bound = (1.0 + cfg.eps) * head_tail(&x, cfg.k).tail_l2_sq();
            let mut o = Outcome::new(err <= bound && oracle.bookkeeping_gap <= 1e-9, err, bound, p.rows());
            o.case = format!("gap={:.3e}", oracle.bookkeeping_gap);
            Ok(o)
        }
        Algorithm::SrAdaptive => adaptive_trial(cfg, input_seed, algo_seed),
        Algorithm::Spiked => {
            let sig = gen_spiked(cfg.n, cfg.k, cfg.eps, input_seed)?;
            let s = SpikedRecovery::new(cfg.n, cfg.k, cfg.eps, cfg.delta, SpikedConstants::default(), algo_seed)?;
            let r = s.recover(&s.measure(&sig.x)?)?;
            let err = error_sq(&sig.x, &r.approx);
            let bound = (1.0 + cfg.eps) * head_tail(&sig.x, cfg.k).tail_l2_sq();
            Ok(Outcome::new(err <= bound, err, bound, s.rows()))
        }
        Algorithm::Facts => unreachable!("facts handled by run_facts"),
    }
}

fn missed(truth: &[usize], out: &[usize]) -> usize {
    let out: HashSet<usize> = out.iter().copied().collect();
    truth.iter().filter(|i| !out.contains(i)).count()
}

fn hh_stream(cfg: &ExperimentConfig, seed: u64) -> Result<TurnstileStream> {
    match cfg.dist {
        Distribution::Planted => Ok(planted_stream(cfg.n, cfg.eps, cfg.length, cfg.deletions, seed)),
        _ => gen_zipf_with_deletions(cfg.n, cfg.exponent, cfg.length, StreamMode::Strict, cfg.deletions, seed),
    }
}

/// Strict stream in which `⌊1/(2ε)⌋` planted items each draw a `1.5ε`
/// share of the insertions over a uniform background; a `deletions`
/// fraction of the updates removes a random live unit.
pub fn planted_stream(n: usize, eps: f64, length: usize, deletions: f64, seed: u64) -> TurnstileStream {
    let mut r = rng(seed);
    let m = ((0.5 / eps).floor() as usize).clamp(1, n);
    let heavy: Vec<usize> = rand::seq::index::sample(&mut r, n, m).into_vec();
    let heavy_share = (1.5 * eps * m as f64).min(0.9);
    let mut stream = TurnstileStream::new(n, StreamMode::Strict);
    let mut live = Vec::new();
    for _ in 0..length {
        if !live.is_empty() && r.random::<f64>() < deletions {
            let pos = r.random_range(0..live.len());
            stream.push(live.swap_remove(pos), -1.0);
            continue;
        }
        let i = if r.random::<f64>() < heavy_share { heavy[r.random_range(0..m)] } else { r.random_range(0..n) };
        live.push(i);
        stream.push(i, 1.0);
    }
    stream
}

/// Power-law heads of sparsity `k` over an `N(0, 1/n)` tail.
fn planted_signal(cfg: &ExperimentConfig, seed: u64) -> Vec<f64> {
    gen_power_law_signal(cfg.n, cfg.k, 0.5, 1.0 / (cfg.n as f64).sqrt(), seed)
}

fn l2_trial(cfg: &ExperimentConfig, input_seed: u64, algo_seed: u64) -> Result<Outcome> {
    let tail_sd = 1.0 / (cfg.n as f64).sqrt();
    match cfg.variant {
        L2Variant::Gm => {
            let k = (1.0 / cfg.eps).ceil() as usize;
            let x = match cfg.dist {
                Distribution::Zipf => hh_stream(cfg, input_seed)?.materialize()?,
                _ => gen_heads_over_noise(cfg.n, (k / 2).max(1), 0.6, tail_sd, input_seed),
            };
            let mut s = GaussianMedianSketch::new(cfg.n, cfg.eps, GmConstants::default(), algo_seed)?;
            s.measure(&x)?;
            let missed = missed(&head_eps(&x, k, 1.0), &s.query());
            Ok(Outcome::new(missed == 0, missed as f64, 0.0, s.measurements()))
        }
        L2Variant::Cs => {
            let c = CsConstants::default();
            let x = match cfg.dist {
                Distribution::Zipf => hh_stream(cfg, input_seed)?.materialize()?,
                _ => gen_heads_over_noise(cfg.n, cfg.k, 1.0, tail_sd, input_seed),
            };
            let mut s = CountSketchEst::new(cfg.n, cfg.k, cfg.eps, cfg.delta, c, algo_seed)?;
            s.measure(&x)?;
            let mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
            let t = top_k_indices(&mags, s.candidate_limit());
            let bad = bad_estimates(&x, &s.estimate(&t)?, cfg.k, cfg.eps);
            let budget = c.zeta * cfg.k as f64;
            Ok(Outcome::new(bad as f64 <= budget, bad as f64, budget, s.measurements()))
        }
    }
}

fn adaptive_trial(cfg: &ExperimentConfig, input_seed: u64, algo_seed: u64) -> Result<Outcome> {
    match cfg.mode {
        AdaptiveMode::OneSparse => {
            let mut x = gen_heads_over_noise(cfg.n, 0, 0.0, 1.0, input_seed);
            let j = (mix(&[input_seed, 0x51]) % cfg.n as u64) as usize;
            x[j] = 0.0;
            x[j] = cfg.ratio * norm2_sq(&x).sqrt();
            let mut oracle = MeasurementOracle::new(&x);
            let r = one_sparse_recover(&mut oracle, &OneSparseConstants::default(), algo_seed)?;
            let ok = r.index == Some(j) && oracle.violations() == 0;
            let mut o = Outcome::new(ok, oracle.violations() as f64, 0.0, r.measurements);
            o.rounds = r.rounds;
            o.case = format!("found={}", r.index.map_or("none".into(), |i| i.to_string()));
            Ok(o)
        }
        AdaptiveMode::Full | AdaptiveMode::LowK => {
            let x = planted_signal(cfg, input_seed);
            let mut oracle = MeasurementOracle::new(&x);
            let r = if cfg.mode == AdaptiveMode::Full {
                adaptive_k_recover(&mut oracle, cfg.k, cfg.eps, &AdaptiveConstants::default(), algo_seed)?
            } else {
                low_sparsity_recover(&mut oracle, cfg.k, cfg.eps, &LowSparsityConstants::default(), algo_seed)?
            };
            let err = error_sq(&x, &r.approx);
            let bound = (1.0 + cfg.eps) * head_tail(&x, cfg.k).tail_l2_sq();
            let mut ok = err <= bound && oracle.violations() == 0;
            if cfg.mode == AdaptiveMode::LowK {
                ok &= missed(&head_eps(&x, cfg.k, cfg.eps), &r.support()) == 0;
            }
            let mut o = Outcome::new(ok, err, bound, r.measurements);
            o.rounds = r.rounds;
            o.case = format!("violations={}", oracle.violations());
            o.accounting = r.accounting;
            Ok(o)
        }
    }
}

/// Strict stream for the deterministic scheme with a planted ε-heavy item
/// and the rest of the mass placed where it collides most with the heavy
/// item or with a decoy. Returns the stream and the strategy name.
pub fn adversarial_stream(sketch: &DetHHSketch, eps: f64, seed: u64) -> (TurnstileStream, String) {
    let n = sketch.n();
    let mut r = rng(seed);
    let heavy = r.random_range(0..n);
    let overlap = |a: usize, b: usize| {
        let na = sketch.neighbors_of(a);
        sketch.neighbors_of(b).iter().filter(|v| na.contains(v)).count()
    };
    let colliders_of = |t: usize| {
        let mut c: Vec<(usize, usize)> = (0..n).filter(|&i| i != t && i != heavy).map(|i| (overlap(t, i), i)).collect();
        c.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        c.into_iter().map(|p| p.1).collect::<Vec<_>>()
    };
    let rest_mass = r.random_range(5..200usize);
    let strategy = r.random_range(0..4);
    let targets: Vec<usize> = match strategy {
        0 => colliders_of(heavy).into_iter().take(1).collect(),
        1 => colliders_of(heavy).into_iter().take(6).collect(),
        2 => {
            let decoy = (heavy + 1 + r.random_range(0..n - 1)) % n;
            let mut t = colliders_of(decoy);
            t.truncate(8);
            t.push(decoy);
            t
        }
        _ => (0..12).map(|_| r.random_range(0..n)).filter(|&i| i != heavy).collect(),
    };
    let mut x = vec![0u64; n];
    if !targets.is_empty() {
        for _ in 0..rest_mass {
            x[targets[r.random_range(0..targets.len())]] += 1;
        }
    }
    let rest: u64 = x.iter().sum();
    x[heavy] = ((eps * rest as f64) / (1.0 - eps)).ceil().max(1.0) as u64;
    let mut inserts: Vec<usize> = x.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize)).collect();
    let churn: Vec<usize> = (0..r.random_range(0..50)).map(|_| targets.first().copied().unwrap_or(heavy)).collect();
    inserts.extend(&churn);
    inserts.shuffle(&mut r);
    let mut stream = TurnstileStream::new(n, StreamMode::Strict);
    for i in inserts {
        stream.push(i, 1.0);
    }
    for i in churn {
        stream.push(i, -1.0);
    }
    let name = ["max-collider", "top-colliders", "decoy", "scattered"][strategy];
    (stream, name.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvRow {
    pub tau: f64,
    pub analytic: f64,
    pub monte_carlo: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactRow {
    pub name: &'static str,
    pub n: usize,
    pub frequency: f64,
    pub bound: f64,
}

impl FactRow {
    pub fn passed(&self) -> bool {
        self.frequency >= self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactsReport {
    pub samples: usize,
    pub event_samples: usize,
    pub delta: f64,
    pub tv: Vec<TvRow>,
    pub events: Vec<FactRow>,
}

pub const MIN_FACT_SAMPLES: usize = 100_000;
pub const TV_GAP_LIMIT: f64 = 0.01;
const TV_DIM: usize = 3;
const TV_BIN: f64 = 0.25;

/// `D_TV(N(0, I), N(τ, I)) = P(|g| ≤ ‖τ‖/2)`.
pub fn analytic_tv(tau: f64) -> f64 {
    erf(tau / (2.0 * std::f64::consts::SQRT_2))
}

/// Total variation between `N(0, I_3)` and `N(τ, I_3)` estimated from
/// histograms of samples projected on the direction of `τ`. One bin edge
/// sits at the density crossing `‖τ‖/2`, so binning loses nothing.
pub fn monte_carlo_tv(tau: f64, samples: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let unit = 1.0 / (TV_DIM as f64).sqrt();
    let shift = tau * unit;
    let half_bins = ((6.0 + tau / 2.0) / TV_BIN).ceil() as i64;
    let width = (2 * half_bins) as usize;
    let bin = |p: f64| (((p - tau / 2.0) / TV_BIN).floor() as i64 + half_bins).clamp(0, width as i64 - 1) as usize;
    let mut a = vec![0i64; width];
    let mut b = vec![0i64; width];
    for _ in 0..samples {
        let mut pa = 0.0;
        let mut pb = 0.0;
        for _ in 0..TV_DIM {
            let g: f64 = StandardNormal.sample(&mut r);
            let h: f64 = StandardNormal.sample(&mut r);
            pa += g * unit;
            pb += (h + shift) * unit;
        }
        a[bin(pa)] += 1;
        b[bin(pb)] += 1;
    }
    0.5 * a.iter().zip(&b).map(|(p, q)| (p - q).abs() as f64).sum::<f64>() / samples as f64
}

fn event_frequency(n: usize, samples: usize, seed: u64, event: impl Fn(&[f64]) -> bool) -> f64 {
    let mut r = rng(seed);
    let mut v = vec![0.0; n];
    let mut hits = 0usize;
    for _ in 0..samples {
        for e in v.iter_mut() {
            *e = StandardNormal.sample(&mut r);
        }
        hits += event(&v) as usize;
    }
    hits as f64 / samples as f64
}

/// Analytic versus Monte Carlo total variation at each `‖τ‖`, and the
/// empirical frequencies of the ℓ1, ℓ2 and univariate Gaussian events at
/// failure parameter `delta`, each against its bound `1 − δ/3`.
pub fn gaussian_fact_check(taus: &[f64], samples: usize, delta: f64, seed: u64) -> Result<FactsReport> {
    if samples < MIN_FACT_SAMPLES {
        return invalid(format!("need at least {MIN_FACT_SAMPLES} samples"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return invalid("delta must lie in (0,1)");
    }
    let tv = taus
        .iter()
        .enumerate()
        .map(|(i, &tau)| {
            let analytic = analytic_tv(tau);
            let monte_carlo = monte_carlo_tv(tau, samples, mix(&[seed, 0x7e, i as u64]));
            TvRow { tau, analytic, monte_carlo, gap: (analytic - monte_carlo).abs() }
        })
        .collect();
    let bound = 1.0 - delta / 3.0;
    let ln6 = (6.0 / delta).ln();
    let event_samples = MIN_FACT_SAMPLES;
    let n1 = (32.0 * ln6).ceil() as usize;
    let l1 = event_frequency(n1, event_samples, mix(&[seed, 1]), |v| {
        let s: f64 = v.iter().map(|e| e.abs()).sum();
        let nf = v.len() as f64;
        nf / 8.0 <= s && s <= 0.75 * nf
    });
    let n2 = (18.0 * ln6).ceil() as usize;
    let l2 = event_frequency(n2, event_samples, mix(&[seed, 2]), |v| {
        let s = norm2_sq(v).sqrt();
        let rn = (v.len() as f64).sqrt();
        rn / 2.0 <= s && s <= 1.5 * rn
    });
    let limit = 4.0 * (1.0 / delta).ln().sqrt();
    let uni = event_frequency(1, event_samples, mix(&[seed, 3]), |v| v[0].abs() <= limit);
    let events = vec![
        FactRow { name: "l1-concentration", n: n1, frequency: l1, bound },
        FactRow { name: "l2-concentration", n: n2, frequency: l2, bound },
        FactRow { name: "univariate-tail", n: 1, frequency: uni, bound },
    ];
    Ok(FactsReport { samples, event_samples, delta, tv, events })
}

impl FactsReport {
    pub fn passed(&self) -> bool {
        self.tv.iter().all(|r| r.gap <= TV_GAP_LIMIT) && self.events.iter().all(FactRow::passed)
    }
}

fn run_facts(mut report: Report) -> Result<Report> {
    let cfg = &report.config;
    let start = Instant::now();
    let f = gaussian_fact_check(&[0.0, 1.0, 2.0], cfg.samples, cfg.delta, cfg.seed)?;
    let wall = start.elapsed();
    let mut rows = Vec::new();
    for r in &f.tv {
        rows.push((format!("tv:{}", r.tau), r.gap <= TV_GAP_LIMIT, r.gap, TV_GAP_LIMIT, f.samples));
    }
    for e in &f.events {
        rows.push((e.name.to_string(), e.passed(), e.frequency, e.bound, f.event_samples));
    }
    for (i, (case, success, metric, bound, samples)) in rows.into_iter().enumerate() {
        report.trials.push(TrialReport {
            trial: i,
            seed: cfg.seed,
            case,
            success,
            metric,
            bound,
            measurements: samples,
            rounds: 0,
            wall: wall / (f.tv.len() + f.events.len()) as u32,
        });
    }
    report.tables.push(Table {
        title: "total variation between N(0,I) and N(tau,I)".into(),
        columns: ["tau", "analytic", "monte_carlo", "gap"].map(String::from).to_vec(),
        rows: f.tv.iter().map(|r| vec![r.tau.to_string(), format!("{:.6}", r.analytic), format!("{:.6}", r.monte_carlo), format!("{:.6}", r.gap)]).collect(),
    });
    report.tables.push(Table {
        title: format!("event frequencies at delta={}", f.delta),
        columns: ["event", "n", "frequency", "bound"].map(String::from).to_vec(),
        rows: f.events.iter().map(|e| vec![e.name.to_string(), e.n.to_string(), format!("{:.6}", e.frequency), format!("{:.6}", e.bound)]).collect(),
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_text() {
        let mut c = ExperimentConfig::new(Algorithm::SrAdaptive);
        c.set("mode", "lowk").unwrap();
        c.set("k", "4").unwrap();
        c.set("threshold", "0.9").unwrap();
        c.set("out", "runs/a.csv").unwrap();
        let back = ExperimentConfig::from_text(Algorithm::SrAdaptive, &c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn malformed_config_reports_line() {
        let e = ExperimentConfig::from_text(Algorithm::HhCm, "n=10\n\nbogus\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = ExperimentConfig::from_text(Algorithm::HhCm, "# c\nwidth=3").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(ExperimentConfig::from_text(Algorithm::HhCm, "algorithm=spiked").is_err());
        assert!(matches!("hh-xx".parse::<Algorithm>(), Err(Error::UnknownAlgorithm(_))));
    }

    #[test]
    fn zero_trials_is_neutral() {
        for a in Algorithm::ALL {
            let mut c = ExperimentConfig::new(a);
            c.trials = 0;
            let r = run(&c).unwrap();
            assert!(r.trials.is_empty());
            assert!(r.passed());
            assert_eq!(r.failure_rate(), None);
        }
    }

    #[test]
    fn replay_is_byte_identical() {
        let mut c = ExperimentConfig::new(Algorithm::HhCm);
        c.n = 2000;
        c.eps = 0.2;
        c.length = 2000;
        c.trials = 5;
        let a = run(&c).unwrap().csv_string().unwrap();
        let b = run(&c).unwrap().csv_string().unwrap();
        assert_eq!(a, b);
        c.seed = 2;
        assert_ne!(a, run(&c).unwrap().csv_string().unwrap());
    }

    #[test]
    fn wilson_zero_failures_matches_rule_of_three() {
        let z = z_two_sided(0.90);
        for n in [2_000usize, 10_000, 1_000_000] {
            let (lo, hi) = wilson_interval(0, n, z);
            assert_eq!(lo, 0.0);
            let rule = 3.0 / n as f64;
            assert!((hi - rule).abs() <= 0.1 * rule, "n={n}: {hi} vs {rule}");
        }
    }

    #[test]
    fn wilson_is_symmetric_and_contains_estimate() {
        let z = z_two_sided(0.95);
        assert!((z - 1.959964).abs() < 1e-5);
        let (lo, hi) = wilson_interval(30, 100, z);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo2, hi2) = wilson_interval(70, 100, z);
        assert!((lo - (1.0 - hi2)).abs() < 1e-12 && (hi - (1.0 - lo2)).abs() < 1e-12);
    }

    #[test]
    fn deterministic_scheme_has_no_failures() {
        let mut c = ExperimentConfig::new(Algorithm::HhDet);
        c.trials = 60;
        let r = run(&c).unwrap();
        assert_eq!(r.failures(), 0);
        assert!(r.notes.iter().any(|n| n.contains("passed")));
    }

    #[test]
    fn analytic_tv_values() {
        assert_eq!(analytic_tv(0.0), 0.0);
        assert!((analytic_tv(2.0) - 0.682_689_492).abs() < 1e-8);
    }

    #[test]
    fn monte_carlo_tv_close_to_analytic() {
        for tau in [0.0, 2.0] {
            let mc = monte_carlo_tv(tau, 200_000, 5);
            assert!((mc - analytic_tv(tau)).abs() < 0.015, "tau={tau}: {mc}");
        }
    }

    #[test]
    fn facts_reject_small_sample_counts() {
        assert!(gaussian_fact_check(&[1.0], 1000, 0.05, 1).is_err());
    }

    #[test]
    fn unsupported_distribution_rejected() {
        let mut c = ExperimentConfig::new(Algorithm::Spiked);
        c.dist = Distribution::Zipf;
        assert!(run(&c).is_err());
    }

    #[test]
    fn planted_stream_is_strict_and_plants_heavy_items() {
        let s = planted_stream(1000, 0.1, 5000, 0.2, 3);
        let x = s.materialize().unwrap();
        assert_eq!(exact_heavy_hitters(&x, 0.1, 1).len(), 5);
    }

    #[test]
    fn adversarial_vectors_have_a_heavy_item() {
        let p = GuvParams::with_first_irreducible(13, 2, 2, 2).unwrap();
        let s = DetHHSketch::new(p, 169, 0.75, 0.1, 2.25).unwrap();
        for seed in 0..40 {
            let (stream, _) = adversarial_stream(&s, 0.75, seed);
            let x = stream.materialize().unwrap();
            assert_eq!(exact_heavy_hitters(&x, 0.75, 1).len(), 1);
        }
    }
}
