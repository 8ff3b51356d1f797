//! Turnstile streams, the exact frequency-vector oracle and the input
//! generators used by the experiments.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal, Zipf};

use crate::error::{invalid, Error, Result};
use crate::util::{rng, top_k_indices};

/// Update model of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamMode {
    /// Every prefix keeps all coordinates nonnegative.
    Strict,
    /// Arbitrary signed updates.
    General,
}

impl fmt::Display for StreamMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StreamMode::Strict => "strict",
            StreamMode::General => "general",
        })
    }
}

impl FromStr for StreamMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(StreamMode::Strict),
            "general" => Ok(StreamMode::General),
            other => invalid(format!("unknown stream mode `{other}`")),
        }
    }
}

/// A single turnstile update `(i, delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Update {
    pub index: usize,
    pub delta: f64,
}

impl Update {
    pub fn new(index: usize, delta: f64) -> Self {
        Self { index, delta }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnstileStream {
    pub n: usize,
    pub mode: StreamMode,
    pub updates: Vec<Update>,
}

impl TurnstileStream {
    pub fn new(n: usize, mode: StreamMode) -> Self {
        Self { n, mode, updates: Vec::new() }
    }

    pub fn from_updates(n: usize, mode: StreamMode, updates: Vec<Update>) -> Self {
        Self { n, mode, updates }
    }

    pub fn push(&mut self, index: usize, delta: f64) {
        self.updates.push(Update::new(index, delta));
    }

    pub fn len(&self) -> usize {
        self.updates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }

    /// Folds the stream into its frequency vector. In strict mode every
    /// prefix is checked; the reported position is 1-based.
    pub fn materialize(&self) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.n];
        for (pos, u) in self.updates.iter().enumerate() {
            if u.index >= self.n {
                return Err(Error::IndexOutOfRange { index: u.index as u64, n: self.n as u64 });
            }
            x[u.index] += u.delta;
            if self.mode == StreamMode::Strict && x[u.index] < 0.0 {
                return Err(Error::StrictViolation { position: pos + 1, index: u.index, value: x[u.index] });
            }
        }
        Ok(x)
    }

    /// Writes the line-oriented text form: a header `n=<int> mode=<mode>`
    /// followed by one `i delta` pair per line.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n={} mode={}", self.n, self.mode)?;
        for u in &self.updates {
            writeln!(w, "{} {:?}", u.index, u.delta)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })??;
        let (n, mode) = parse_header(&header)?;
        let mut stream = TurnstileStream::new(n, mode);
        for (no, line) in lines.enumerate() {
            let line = line?;
            let line_no = no + 2;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let mut parts = trimmed.split_whitespace();
            let bad = |msg: &str| Error::Parse { line: line_no, msg: msg.to_string() };
            let index = parts
                .next()
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| bad("expected an index"))?;
            let delta = parts
                .next()
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| bad("expected a delta"))?;
            if parts.next().is_some() {
                return Err(bad("trailing fields"));
            }
            if index >= n {
                return Err(bad("index outside the declared dimension"));
            }
            stream.push(index, delta);
        }
        Ok(stream)
    }
}

impl fmt::Display for TurnstileStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n={} mode={}", self.n, self.mode)?;
        for u in &self.updates {
            writeln!(f, "{} {:?}", u.index, u.delta)?;
        }
        Ok(())
    }
}

impl FromStr for TurnstileStream {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::read_from(s.as_bytes())
    }
}

fn parse_header(line: &str) -> Result<(usize, StreamMode)> {
    let bad = |msg: &str| Error::Parse { line: 1, msg: msg.to_string() };
    let mut n = None;
    let mut mode = None;
    for field in line.split_whitespace() {
        match field.split_once('=') {
            Some(("n", v)) => n = Some(v.parse::<usize>().map_err(|_| bad("bad dimension"))?),
            Some(("mode", v)) => mode = Some(v.parse::<StreamMode>().map_err(|_| bad("bad mode"))?),
            _ => return Err(bad("unexpected header field")),
        }
    }
    Ok((n.ok_or_else(|| bad("missing n"))?, mode.ok_or_else(|| bad("missing mode"))?))
}

pub fn norm_p(x: &[f64], p: u32) -> f64 {
    match p {
        1 => x.iter().map(|v| v.abs()).sum(),
        _ => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

fn pow_p(v: f64, p: u32) -> f64 {
    if p == 1 {
        v.abs()
    } else {
        v * v
    }
}

/// `{ i : |x_i|^p >= eps * ||x||_p^p }` for `p` in {1, 2}, in index order.
pub fn exact_heavy_hitters(x: &[f64], eps: f64, p: u32) -> Vec<usize> {
    assert!(p == 1 || p == 2, "norm order must be 1 or 2");
    let total: f64 = x.iter().map(|&v| pow_p(v, p)).sum();
    let threshold = eps * total;
    (0..x.len()).filter(|&i| x[i] != 0.0 && pow_p(x[i], p) >= threshold).collect()
}

/// The `k` largest-magnitude coordinates and the remaining tail.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadTail {
    /// `H_k(x)`, ordered by decreasing magnitude.
    pub head: Vec<usize>,
    /// `x` with the head coordinates zeroed.
    pub tail: Vec<f64>,
    pub tail_l1: f64,
    pub tail_l2: f64,
}

impl HeadTail {
    pub fn tail_l2_sq(&self) -> f64 {
        self.tail_l2 * self.tail_l2
    }
}

/// Splits `x` into `H_k(x)` and `x_{-k}`; ties prefer the lower index.
pub fn head_tail(x: &[f64], k: usize) -> HeadTail {
    let k = k.min(x.len());
    let mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let head = top_k_indices(&mags, k);
    let mut tail = x.to_vec();
    for &i in &head {
        tail[i] = 0.0;
    }
    let tail_l1 = norm_p(&tail, 1);
    let tail_l2 = norm_p(&tail, 2);
    HeadTail { head, tail, tail_l1, tail_l2 }
}

/// `H_{k,eps}(x) = { i : x_i^2 >= (eps/k) ||x_{-k}||_2^2 }`, excluding zero
/// coordinates.
pub fn head_eps(x: &[f64], k: usize, eps: f64) -> Vec<usize> {
    assert!(k >= 1 && eps > 0.0);
    let ht = head_tail(x, k);
    let threshold = eps / k as f64 * ht.tail_l2_sq();
    (0..x.len()).filter(|&i| x[i] != 0.0 && x[i] * x[i] >= threshold).collect()
}

/// Insert-only Zipf stream: item `i` is drawn with probability proportional
/// to `(i + 1)^-exponent`, each update adds one unit.
pub fn gen_zipf(n: usize, exponent: f64, length: usize, mode: StreamMode, seed: u64) -> Result<TurnstileStream> {
    gen_zipf_with_deletions(n, exponent, length, mode, 0.0, seed)
}

/// Zipf stream in which a `deletion_rate` fraction of the updates are unit
/// deletions. In strict mode a deletion removes a uniformly chosen live unit,
/// so every prefix stays nonnegative and the surviving frequencies keep the
/// Zipf shape; in general mode the deleted item is itself Zipf distributed.
pub fn gen_zipf_with_deletions(
    n: usize,
    exponent: f64,
    length: usize,
    mode: StreamMode,
    deletion_rate: f64,
    seed: u64,
) -> Result<TurnstileStream> {
    if !(exponent > 0.0) {
        return invalid("Zipf exponent must be positive");
    }
    if n == 0 {
        return invalid("dimension must be positive");
    }
    if !(0.0..1.0).contains(&deletion_rate) {
        return invalid("deletion rate must lie in [0, 1)");
    }
    let zipf = Zipf::new(n as f64, exponent).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut r = rng(seed);
    let mut stream = TurnstileStream::new(n, mode);
    let mut live: Vec<usize> = Vec::new();
    let draw = |r: &mut crate::util::Rng| (zipf.sample(r) as usize).clamp(1, n) - 1;
    for _ in 0..length {
        let delete = deletion_rate > 0.0 && r.random::<f64>() < deletion_rate;
        match (delete, mode) {
            (true, StreamMode::Strict) if !live.is_empty() => {
                let pos = r.random_range(0..live.len());
                let item = live.swap_remove(pos);
                stream.push(item, -1.0);
            }
            (true, StreamMode::General) => stream.push(draw(&mut r), -1.0),
            _ => {
                let item = draw(&mut r);
                if mode == StreamMode::Strict {
                    live.push(item);
                }
                stream.push(item, 1.0);
            }
        }
    }
    Ok(stream)
}

/// A draw from the spiked-covariance model `x = y + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikedSignal {
    pub x: Vec<f64>,
    /// Planted coordinates, in increasing order.
    pub support: Vec<usize>,
    /// Sign of each planted coordinate, aligned with `support`.
    pub signs: Vec<f64>,
    /// Magnitude `sqrt(eps / k)` of every planted coordinate of `y`.
    pub spike: f64,
}

impl SpikedSignal {
    /// The noiseless planted part `y`.
    pub fn planted(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.x.len()];
        for (&i, &s) in self.support.iter().zip(&self.signs) {
            y[i] = s * self.spike;
        }
        y
    }
}

/// `k` uniformly chosen coordinates get independent signs times
/// `sqrt(eps / k)`; every coordinate receives `N(0, 1/n)` noise.
pub fn gen_spiked(n: usize, k: usize, eps: f64, seed: u64) -> Result<SpikedSignal> {
    gen_spiked_scaled(n, k, eps, 1.0, seed)
}

/// As [`gen_spiked`] with the noise standard deviation multiplied by
/// `noise_scale` (0 gives the noiseless planted vector).
pub fn gen_spiked_scaled(n: usize, k: usize, eps: f64, noise_scale: f64, seed: u64) -> Result<SpikedSignal> {
    if k > n || n == 0 {
        return invalid("need 0 < n and k <= n");
    }
    if !(eps > 0.0 && eps < 1.0) {
        return invalid("eps must lie in (0, 1)");
    }
    let mut r = rng(seed);
    let mut support = sample(&mut r, n, k).into_vec();
    support.sort_unstable();
    let spike = if k == 0 { 0.0 } else { (eps / k as f64).sqrt() };
    let signs: Vec<f64> = (0..k).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let sd = noise_scale / (n as f64).sqrt();
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut r);
            g * sd
        })
        .collect();
    for (&i, &s) in support.iter().zip(&signs) {
        x[i] += s * spike;
    }
    Ok(SpikedSignal { x, support, signs, spike })
}

/// `k` distinct random coordinates of magnitude `head` with random signs;
/// every other coordinate is `N(0, noise_sd²)`.
pub fn gen_heads_over_noise(n: usize, k: usize, head: f64, noise_sd: f64, seed: u64) -> Vec<f64> {
    gen_signal(n, &vec![head; k.min(n)], noise_sd, seed)
}

/// Heads with power-law magnitudes `j^{−exponent}`, `j = 1..=k`, at random
/// coordinates with random signs, over an `N(0, tail_sd²)` tail.
pub fn gen_power_law_signal(n: usize, k: usize, exponent: f64, tail_sd: f64, seed: u64) -> Vec<f64> {
    let heads: Vec<f64> = (1..=k.min(n)).map(|j| (j as f64).powf(-exponent)).collect();
    gen_signal(n, &heads, tail_sd, seed)
}

fn gen_signal(n: usize, heads: &[f64], noise_sd: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let support = sample(&mut r, n, heads.len()).into_vec();
    let mut x: Vec<f64> = if noise_sd > 0.0 {
        (0..n)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut r);
                g * noise_sd
            })
            .collect()
    } else {
        vec![0.0; n]
    };
    for (&i, &h) in support.iter().zip(heads) {
        x[i] = if r.random::<bool>() { h } else { -h };
    }
    x
}
