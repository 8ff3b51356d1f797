//! Non-adaptive ℓ2/ℓ2 sparse recovery by stacking weak systems, and the
//! spiked-covariance recovery algorithm.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::count_min::ceil_tol;
use crate::error::{invalid, Error, Result};
use crate::l2::CountSketchEst;
use crate::stream::head_eps;
use crate::util::{mix, norm2_sq, top_k_pairs};
use crate::weak::{WeakConstants, WeakParams, WeakSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    /// `⌈log3 k⌉ + 1` weak levels with sparsity `k/3^i`.
    Quadratic,
    /// A few weak levels followed by a quadratic machine at `K = ⌈√k⌉`.
    Fast,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::Quadratic => "quadratic",
            ScheduleKind::Fast => "fast",
        })
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(ScheduleKind::Quadratic),
            "fast" => Ok(ScheduleKind::Fast),
            other => invalid(format!("unknown schedule '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConstants {
    /// Levels `i ≤ boundary·log2 log2 k` use `ε/2^i`.
    pub boundary: f64,
    /// Early levels target failure `exp(−fail·k/3^i)`.
    pub fail: f64,
    /// The fast schedule runs `⌊fast·½·log2 k⌋` weak levels, capped so the
    /// remaining sparsity stays near `√k`.
    pub fast: f64,
    /// Miss budget of every weak level.
    pub zeta: f64,
}

impl Default for ScheduleConstants {
    fn default() -> Self {
        Self { boundary: 3.0, fail: 0.125, fast: 0.5, zeta: 1.0 / 3.0 }
    }
}

/// Parameters of one weak level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSpec {
    pub k: usize,
    pub zeta: f64,
    pub eps: f64,
    pub delta: f64,
}

const MAX_LEVEL_DELTA: f64 = 0.5;

fn log3_ceil(k: usize) -> usize {
    let mut l = 0;
    let mut p = 1usize;
    while p < k {
        p *= 3;
        l += 1;
    }
    l
}

/// Level parameters of the quadratic schedule.
pub fn quadratic_schedule(k: usize, eps: f64, c: &ScheduleConstants) -> Vec<LevelSpec> {
    let levels = log3_ceil(k) + 1;
    let lg = (k as f64).log2();
    let boundary = if k > 2 { c.boundary * lg.log2() } else { 0.0 };
    let late_delta = if k > 2 { (-(k as f64) / lg.powi(3)).exp() } else { MAX_LEVEL_DELTA };
    (0..levels)
        .map(|i| {
            let ki = k.div_ceil(3usize.pow(i as u32)).max(1);
            let (e, d) = if i as f64 <= boundary {
                (eps / 2f64.powi(i as i32), (-c.fail * k as f64 / 3f64.powi(i as i32)).exp())
            } else {
                (eps / lg.max(1.0), late_delta)
            };
            LevelSpec { k: ki, zeta: c.zeta, eps: e, delta: d.clamp(f64::MIN_POSITIVE, MAX_LEVEL_DELTA) }
        })
        .collect()
}

/// Number of weak levels the fast schedule runs before the terminal
/// machine.
pub fn fast_weak_levels(k: usize, c: &ScheduleConstants) -> usize {
    let by_log = (c.fast * 0.5 * (k.max(1) as f64).log2()).floor() as usize;
    let sqrt_k = (k as f64).sqrt().ceil() as usize;
    let by_sparsity = log3_ceil(k.div_ceil(sqrt_k.max(1)));
    by_log.min(by_sparsity).max(1)
}

/// Level parameters of the fast schedule: `ℓ` levels `(k/3^i, ζ, ε/2^i)`,
/// then the quadratic schedule at `K = ⌈√k⌉` and `ε/2^ℓ`.
pub fn fast_schedule(k: usize, eps: f64, c: &ScheduleConstants) -> Vec<LevelSpec> {
    let l = fast_weak_levels(k, c);
    let mut out: Vec<LevelSpec> = (0..l)
        .map(|i| LevelSpec {
            k: k.div_ceil(3usize.pow(i as u32)).max(1),
            zeta: c.zeta,
            eps: eps / 2f64.powi(i as i32),
            delta: (-c.fail * k as f64 / 3f64.powi(i as i32)).exp().clamp(f64::MIN_POSITIVE, MAX_LEVEL_DELTA),
        })
        .collect();
    let big_k = (k as f64).sqrt().ceil() as usize;
    out.extend(quadratic_schedule(big_k, eps / 2f64.powi(l as i32), c));
    out
}

pub fn schedule(kind: ScheduleKind, k: usize, eps: f64, c: &ScheduleConstants) -> Vec<LevelSpec> {
    match kind {
        ScheduleKind::Quadratic => quadratic_schedule(k, eps, c),
        ScheduleKind::Fast => fast_schedule(k, eps, c),
    }
}

/// Per-level record of a recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDiagnostics {
    pub k: usize,
    pub eps: f64,
    pub rows: usize,
    pub candidates: usize,
    pub found: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// `(index, value)` pairs sorted by index.
    pub approx: Vec<(usize, f64)>,
    pub measurements: usize,
    pub levels: Vec<LevelDiagnostics>,
}

impl RecoveryResult {
    pub fn support(&self) -> Vec<usize> {
        self.approx.iter().map(|p| p.0).collect()
    }

    pub fn dense(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for &(i, v) in &self.approx {
            x[i] = v;
        }
        x
    }
}

/// Squared error `‖x − x̂‖²` of a sparse approximation.
pub fn error_sq(x: &[f64], approx: &[(usize, f64)]) -> f64 {
    let mut e = x.to_vec();
    for &(i, v) in approx {
        e[i] -= v;
    }
    e.iter().map(|v| v * v).sum()
}

/// Vertical stack of weak systems.
#[derive(Debug, Clone)]
pub struct Pipeline {
    n: usize,
    k: usize,
    eps: f64,
    kind: ScheduleKind,
    specs: Vec<LevelSpec>,
    levels: Vec<WeakSystem>,
}

impl Pipeline {
    pub fn build(
        n: usize,
        k: usize,
        eps: f64,
        kind: ScheduleKind,
        sc: ScheduleConstants,
        wc: WeakConstants,
        seed: u64,
    ) -> Result<Self> {
        if k == 0 || k > n || !(eps > 0.0 && eps < 1.0) {
            return invalid("need 1 <= k <= n and eps in (0,1)");
        }
        let specs = schedule(kind, k, eps, &sc);
        let levels = specs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let p = WeakParams { k: s.k, zeta: s.zeta, eps: s.eps, delta: s.delta };
                WeakSystem::new(n, p, wc, mix(&[seed, i as u64, 0x9197]))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, k, eps, kind, specs, levels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn specs(&self) -> &[LevelSpec] {
        &self.specs
    }

    pub fn levels(&self) -> &[WeakSystem] {
        &self.levels
    }

    /// Total number of linear measurements.
    pub fn rows(&self) -> usize {
        self.levels.iter().map(WeakSystem::rows).sum()
    }

    /// Measurements of `x` under every level.
    pub fn measure(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.levels.iter().map(|w| w.measure(x)).collect()
    }

    pub fn recover(&self, measurements: &[Vec<f64>]) -> Result<RecoveryResult> {
        self.recover_inspect(measurements, |_, _, _| {})
    }

    /// Recovery that also hands the maintained measurements of every level,
    /// together with the approximation subtracted so far, to `inspect`.
    pub fn recover_inspect(
        &self,
        measurements: &[Vec<f64>],
        mut inspect: impl FnMut(usize, &[f64], &[(usize, f64)]),
    ) -> Result<RecoveryResult> {
        if measurements.len() != self.levels.len() {
            return invalid("one measurement vector per level expected");
        }
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        let mut diags = Vec::with_capacity(self.levels.len());
        for (l, (w, y0)) in self.levels.iter().zip(measurements).enumerate() {
            let mut y = y0.clone();
            for (&i, &v) in &acc {
                w.add_column(i, -v, &mut y);
            }
            let sofar: Vec<(usize, f64)> = acc.iter().map(|(&i, &v)| (i, v)).collect();
            inspect(l, &y, &sofar);
            let out = w.recover(&y)?;
            for &(i, v) in &out.approx {
                *acc.entry(i).or_insert(0.0) += v;
            }
            let s = self.specs[l];
            diags.push(LevelDiagnostics { k: s.k, eps: s.eps, rows: w.rows(), candidates: out.candidates, found: out.approx.len() });
        }
        let approx = acc.into_iter().filter(|p| p.1 != 0.0).collect();
        Ok(RecoveryResult { approx, measurements: self.rows(), levels: diags })
    }

    /// Recovery checked against the hidden signal: at every level the
    /// maintained measurements are compared with a fresh measurement of
    /// `x − Σ_{j<i} r^{(j)}`, and the residual is scored against the head of
    /// `x`.
    pub fn recover_with_oracle(&self, x: &[f64], measurements: &[Vec<f64>]) -> Result<(RecoveryResult, OracleReport)> {
        if x.len() != self.n {
            return invalid("signal length differs from n");
        }
        let heads = head_eps(x, self.k, self.eps);
        let mut report = OracleReport::default();
        let res = self.recover_inspect(measurements, |l, y, sofar| {
            let mut resid = x.to_vec();
            for &(i, v) in sofar {
                resid[i] -= v;
            }
            let fresh = self.levels[l].measure(&resid).expect("dimension checked");
            let scale = fresh.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let gap = y.iter().zip(&fresh).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            report.bookkeeping_gap = report.bookkeeping_gap.max(gap / scale);
            report.residual_sq.push(norm2_sq(&resid));
            report.unrecovered_heads.push(unrecovered(&heads, x, &resid));
        })?;
        let mut resid = x.to_vec();
        for &(i, v) in &res.approx {
            resid[i] -= v;
        }
        report.residual_sq.push(norm2_sq(&resid));
        report.unrecovered_heads.push(unrecovered(&heads, x, &resid));
        Ok((res, report))
    }
}

fn unrecovered(heads: &[usize], x: &[f64], resid: &[f64]) -> usize {
    heads.iter().filter(|&&i| resid[i].abs() > 0.5 * x[i].abs()).count()
}

/// Oracle-side diagnostics of one recovery. Per-level vectors hold one
/// entry before each level plus one for the final output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleReport {
    /// Largest relative gap between maintained and recomputed measurements.
    pub bookkeeping_gap: f64,
    pub residual_sq: Vec<f64>,
    /// Heads of `x` whose residual still carries more than half their value.
    pub unrecovered_heads: Vec<usize>,
}

impl OracleReport {
    pub fn monotone(&self) -> bool {
        self.unrecovered_heads.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikedConstants {
    /// Buckets per repetition are `⌈c_b·k/ε⌉`.
    pub c_b: f64,
    /// Repetitions are `⌈c_r·(log2(εn/k) + log2(1/δ)/k)⌉`.
    pub c_r: f64,
    pub alpha: f64,
    pub eta: f64,
}

impl Default for SpikedConstants {
    fn default() -> Self {
        Self { c_b: 3.0, c_r: 2.0, alpha: 0.25, eta: 0.1 }
    }
}

/// Count-Sketch estimation of every coordinate, a magnitude window around
/// `√(ε/k)`, then the `k` largest surviving estimates.
#[derive(Debug, Clone)]
pub struct SpikedRecovery {
    n: usize,
    k: usize,
    eps: f64,
    gamma: f64,
    sketch: CountSketchEst,
}

impl SpikedRecovery {
    pub fn new(n: usize, k: usize, eps: f64, delta: f64, c: SpikedConstants, seed: u64) -> Result<Self> {
        if k == 0 || k > n || !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
            return invalid("need 1 <= k <= n, eps in (0,1), delta in (0,1)");
        }
        let buckets = ceil_tol(c.c_b * k as f64 / eps).max(1);
        let log_term = (eps * n as f64 / k as f64).log2().max(1.0);
        let rows = ceil_tol(c.c_r * (log_term + (1.0 / delta).log2() / k as f64)).max(1);
        let gamma = (c.alpha * ((1.0 + c.eta) * (1.0 - k as f64 / n as f64)).sqrt()).min(0.25);
        let sketch = CountSketchEst::with_sizes(n, buckets, rows, seed)?;
        Ok(Self { n, k, eps, gamma, sketch })
    }

    pub fn rows(&self) -> usize {
        self.sketch.measurements()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sketch(&self) -> &CountSketchEst {
        &self.sketch
    }

    pub fn measure(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut s = self.sketch.clone();
        s.measure(x)?;
        Ok(s.counters().to_vec())
    }

    pub fn recover(&self, y: &[f64]) -> Result<RecoveryResult> {
        if y.len() != self.rows() {
            return invalid("wrong number of measurements");
        }
        let mut s = self.sketch.clone();
        s.counters_mut().copy_from_slice(y);
        let est = s.estimate_all();
        let spike = (self.eps / self.k as f64).sqrt();
        let (lo, hi) = ((1.0 - self.gamma) * spike, (1.0 + self.gamma) * spike);
        let window: Vec<(usize, f64)> =
            est.iter().enumerate().filter(|(_, e)| (lo..=hi).contains(&e.abs())).map(|(i, e)| (i, e.abs())).collect();
        let mut approx: Vec<(usize, f64)> = top_k_pairs(window, self.k).into_iter().map(|(i, _)| (i, est[i])).collect();
        approx.sort_by_key(|p| p.0);
        let found = approx.len();
        Ok(RecoveryResult {
            approx,
            measurements: self.rows(),
            levels: vec![LevelDiagnostics { k: self.k, eps: self.eps, rows: self.rows(), candidates: self.n, found }],
        })
    }
}
