//! Adaptive sparse recovery: a measurement oracle that releases results only
//! at round boundaries, one-sparse recovery by preconditioning and geometric
//! shrinking, the three-phase k-sparse scheme and the low-sparsity scheme.

use std::cell::Cell;

use rand::seq::SliceRandom;

use crate::count_min::ceil_tol;
use crate::error::{invalid, Error, Result};
use crate::l2::{Partition, PartitionConstants, PartitionSketch};
use crate::util::{mix, rng};

/// Handle to a submitted measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ticket(usize);

/// Access to a hidden signal through linear measurements. Results of the
/// measurements submitted in a round become readable only after
/// [`end_round`](Self::end_round).
#[derive(Debug)]
pub struct MeasurementOracle<'a> {
    x: &'a [f64],
    values: Vec<f64>,
    released: usize,
    round_sizes: Vec<usize>,
    violations: Cell<usize>,
}

impl<'a> MeasurementOracle<'a> {
    pub fn new(x: &'a [f64]) -> Self {
        Self { x, values: Vec::new(), released: 0, round_sizes: Vec::new(), violations: Cell::new(0) }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Submits `Σ c·x_i` over the given `(i, c)` pairs.
    pub fn measure<I>(&mut self, coeffs: I) -> Result<Ticket>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let x = self.x;
        let v = coeffs.into_iter().try_fold(0.0, |acc, (i, c)| match x.get(i) {
            Some(&xi) => Ok(acc + c * xi),
            None => Err(Error::IndexOutOfRange { index: i as u64, n: x.len() as u64 }),
        })?;
        self.values.push(v);
        Ok(Ticket(self.values.len() - 1))
    }

    /// Submits the measurement `e_i`.
    pub fn observe(&mut self, i: usize) -> Result<Ticket> {
        self.measure([(i, 1.0)])
    }

    /// Closes the current round and releases its results. A round with no
    /// measurements is not counted.
    pub fn end_round(&mut self) {
        if self.values.len() > self.released {
            self.round_sizes.push(self.values.len() - self.released);
            self.released = self.values.len();
        }
    }

    pub fn value(&self, t: Ticket) -> Result<f64> {
        if t.0 >= self.released {
            self.violations.set(self.violations.get() + 1);
            return Err(Error::RoundViolation(format!("measurement {} read before its round ended", t.0)));
        }
        Ok(self.values[t.0])
    }

    pub fn measurements(&self) -> usize {
        self.values.len()
    }

    pub fn rounds(&self) -> usize {
        self.round_sizes.len()
    }

    /// Number of measurements in every completed round.
    pub fn round_sizes(&self) -> &[usize] {
        &self.round_sizes
    }

    pub fn pending(&self) -> usize {
        self.values.len() - self.released
    }

    /// Attempts to read an unreleased result.
    pub fn violations(&self) -> usize {
        self.violations.get()
    }
}

pub const MAX_MESSAGE_BITS: usize = 6;

/// Punctured Hadamard code: message `m` maps to the parities `⟨m, b⟩` for
/// every nonzero `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCode {
    message_bits: usize,
    codebook: Vec<u64>,
    min_distance: usize,
}

impl BinaryCode {
    pub fn hadamard(message_bits: usize) -> Result<Self> {
        if message_bits == 0 || message_bits > MAX_MESSAGE_BITS {
            return invalid(format!("message bits must be in 1..={MAX_MESSAGE_BITS}"));
        }
        let len = (1usize << message_bits) - 1;
        let codebook: Vec<u64> = (0..1u64 << message_bits)
            .map(|m| (0..len).fold(0u64, |w, b| w | ((((m & (b as u64 + 1)).count_ones() & 1) as u64) << b)))
            .collect();
        let mut min_distance = len;
        for a in 0..codebook.len() {
            for b in a + 1..codebook.len() {
                min_distance = min_distance.min((codebook[a] ^ codebook[b]).count_ones() as usize);
            }
        }
        Ok(Self { message_bits, codebook, min_distance })
    }

    pub fn message_bits(&self) -> usize {
        self.message_bits
    }

    pub fn codeword_bits(&self) -> usize {
        (1 << self.message_bits) - 1
    }

    /// Minimum pairwise distance, measured over the whole codebook.
    pub fn min_distance(&self) -> usize {
        self.min_distance
    }

    pub fn radius(&self) -> usize {
        (self.min_distance - 1) / 2
    }

    pub fn encode(&self, message: usize) -> u64 {
        self.codebook[message]
    }

    pub fn bit(&self, message: usize, b: usize) -> bool {
        (self.codebook[message] >> b) & 1 == 1
    }

    /// Nearest codeword, ties toward the smaller message.
    pub fn decode(&self, word: u64) -> usize {
        (0..self.codebook.len()).min_by_key(|&m| (self.codebook[m] ^ word).count_ones()).expect("nonempty codebook")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSparseConstants {
    /// The preconditioner uses `⌈α·log2 log2 n⌉` message bits.
    pub alpha: f64,
    /// Independent measurement pairs per code bit, decided by majority.
    pub pairs: usize,
    /// Shrink keeps `i` with circular `|u_i − û| ≤ window/B²`.
    pub window: f64,
    /// Universes smaller than this skip the preconditioner.
    pub precondition_min: usize,
}

impl Default for OneSparseConstants {
    fn default() -> Self {
        Self { alpha: 1.0, pairs: 15, window: 0.5, precondition_min: 256 }
    }
}

/// Message bits of the preconditioner on a universe of size `m`, or 0 when
/// it is skipped.
pub fn message_bits(m: usize, c: &OneSparseConstants) -> usize {
    if m < c.precondition_min.max(4) {
        return 0;
    }
    let lg = (m as f64).log2();
    let bits = ceil_tol(c.alpha * lg.log2()).max(1);
    bits.min(MAX_MESSAGE_BITS).min(lg.floor() as usize - 1)
}

/// Shrink parameters `B_1, B_2, …` with `B_0 = 2`, `B_i = B_{i−1}^{3/2}`,
/// ending at the first value `≥ m`.
pub fn shrink_schedule(m: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut b = 2.0f64;
    while m > 1 {
        b = b.powf(1.5);
        out.push(b);
        if b >= m as f64 {
            break;
        }
    }
    out
}

fn keyed_sign_unit(seed: u64, nonce: u64, i: usize) -> (f64, f64) {
    let h = mix(&[seed, nonce, i as u64]);
    let s = if h >> 63 == 1 { -1.0 } else { 1.0 };
    let u = ((h << 1) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (s, u)
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

#[derive(Debug, Clone)]
enum Pending {
    None,
    Precondition { code: BinaryCode, messages: Vec<usize>, tickets: Vec<Ticket> },
    Shrink { nonce: u64, y1: Ticket, y2: Ticket },
}

/// One-sparse recovery on a sub-universe, advanced one round at a time so
/// that many instances can share rounds.
#[derive(Debug, Clone)]
pub struct OneSparseRun {
    set: Vec<usize>,
    schedule: Vec<f64>,
    c: OneSparseConstants,
    seed: u64,
    precondition: bool,
    step: usize,
    spare: usize,
    nonce: u64,
    pending: Pending,
    done: bool,
    result: Option<usize>,
}

impl OneSparseRun {
    pub fn new(universe: Vec<usize>, c: OneSparseConstants, seed: u64) -> Self {
        let precondition = message_bits(universe.len(), &c) > 0;
        let schedule = shrink_schedule(universe.len());
        let mut run = Self {
            set: universe,
            schedule,
            c,
            seed,
            precondition,
            step: 0,
            spare: if precondition { 1 } else { 2 },
            nonce: 0,
            pending: Pending::None,
            done: false,
            result: None,
        };
        run.check_done();
        run
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn result(&self) -> Option<usize> {
        self.result
    }

    pub fn candidates(&self) -> &[usize] {
        &self.set
    }

    fn check_done(&mut self) {
        if self.precondition {
            return;
        }
        if self.set.len() <= 1 {
            self.done = true;
            self.result = self.set.first().copied();
        } else if self.step >= self.schedule.len() {
            if self.spare > 0 {
                self.spare -= 1;
                self.step = self.schedule.len() - 1;
            } else {
                self.done = true;
            }
        }
    }

    /// Submits this round's measurements.
    pub fn issue(&mut self, oracle: &mut MeasurementOracle<'_>) -> Result<()> {
        if self.done {
            return Ok(());
        }
        if self.precondition {
            self.issue_precondition(oracle)
        } else {
            self.nonce += 1;
            let nonce = self.nonce;
            let seed = self.seed;
            let y1 = oracle.measure(self.set.iter().map(|&i| (i, keyed_sign_unit(seed, nonce, i).0)))?;
            let y2 = oracle.measure(self.set.iter().map(|&i| {
                let (s, u) = keyed_sign_unit(seed, nonce, i);
                (i, s * u)
            }))?;
            self.pending = Pending::Shrink { nonce, y1, y2 };
            Ok(())
        }
    }

    fn issue_precondition(&mut self, oracle: &mut MeasurementOracle<'_>) -> Result<()> {
        let m = self.set.len();
        let code = BinaryCode::hadamard(message_bits(m, &self.c))?;
        let width = usize::BITS - (m - 1).leading_zeros();
        let shift = width as usize - code.message_bits();
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(&mut rng(mix(&[self.seed, 0x9e3c])));
        let messages: Vec<usize> = perm.iter().map(|&p| p >> shift).collect();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (messages[p], self.set[p]));
        let groups = 1usize << code.message_bits();
        let mut starts = vec![0usize; groups + 1];
        for &p in &order {
            starts[messages[p] + 1] += 1;
        }
        for g in 0..groups {
            starts[g + 1] += starts[g];
        }
        let members: Vec<usize> = order.iter().map(|&p| self.set[p]).collect();
        let mut tickets = Vec::with_capacity(self.c.pairs * code.codeword_bits() * 2);
        for t in 0..self.c.pairs {
            let signed: Vec<(usize, f64)> =
                members.iter().map(|&i| (i, keyed_sign_unit(self.seed, 0x5eed_0000 + t as u64, i).0)).collect();
            for b in 0..code.codeword_bits() {
                for q in [false, true] {
                    let coeffs = (0..groups)
                        .filter(|&g| code.bit(g, b) == q)
                        .flat_map(|g| signed[starts[g]..starts[g + 1]].iter().copied());
                    tickets.push(oracle.measure(coeffs)?);
                }
            }
        }
        self.pending = Pending::Precondition { code, messages, tickets };
        Ok(())
    }

    /// Reads this round's results and advances.
    pub fn absorb(&mut self, oracle: &MeasurementOracle<'_>) -> Result<()> {
        match std::mem::replace(&mut self.pending, Pending::None) {
            Pending::None => {}
            Pending::Precondition { code, messages, tickets } => {
                let bits = code.codeword_bits();
                let mut word = 0u64;
                for b in 0..bits {
                    let mut ones = 0;
                    for t in 0..self.c.pairs {
                        let base = 2 * (t * bits + b);
                        if oracle.value(tickets[base + 1])?.abs() > oracle.value(tickets[base])?.abs() {
                            ones += 1;
                        }
                    }
                    if 2 * ones > self.c.pairs {
                        word |= 1 << b;
                    }
                }
                let m = code.decode(word);
                self.set = self.set.iter().zip(&messages).filter(|p| *p.1 == m).map(|p| *p.0).collect();
                self.schedule = shrink_schedule(self.set.len());
                self.precondition = false;
                self.check_done();
            }
            Pending::Shrink { nonce, y1, y2 } => {
                let (v1, v2) = (oracle.value(y1)?, oracle.value(y2)?);
                if v1 == 0.0 {
                    if self.spare == 0 {
                        self.done = true;
                        return Ok(());
                    }
                    self.spare -= 1;
                    return Ok(());
                }
                let est = v2 / v1;
                let b = self.schedule[self.step];
                let w = self.c.window / (b * b);
                let seed = self.seed;
                self.set.retain(|&i| circular_distance(keyed_sign_unit(seed, nonce, i).1, est) <= w);
                self.step += 1;
                self.check_done();
            }
        }
        Ok(())
    }
}

/// Advances every run in shared rounds until all are done; returns the
/// number of rounds used.
pub fn run_lockstep(oracle: &mut MeasurementOracle<'_>, runs: &mut [OneSparseRun]) -> Result<usize> {
    let mut rounds = 0;
    while runs.iter().any(|r| !r.is_done()) {
        for r in runs.iter_mut() {
            r.issue(oracle)?;
        }
        oracle.end_round();
        for r in runs.iter_mut() {
            r.absorb(oracle)?;
        }
        rounds += 1;
    }
    Ok(rounds)
}

/// Preconditioning round on `universe`: returns the candidate set decoded
/// from the code-bit measurements.
pub fn precondition(
    oracle: &mut MeasurementOracle<'_>,
    universe: &[usize],
    c: &OneSparseConstants,
    seed: u64,
) -> Result<Vec<usize>> {
    let forced = OneSparseConstants { precondition_min: 0, ..*c };
    if message_bits(universe.len(), &forced) == 0 {
        return Ok(universe.to_vec());
    }
    let mut run = OneSparseRun::new(universe.to_vec(), forced, seed);
    run.issue(oracle)?;
    oracle.end_round();
    run.absorb(oracle)?;
    Ok(run.set)
}

/// One shrink round with parameter `b`. `None` when both attempts see a
/// zero first measurement.
pub fn shrink(
    oracle: &mut MeasurementOracle<'_>,
    set: &[usize],
    b: f64,
    c: &OneSparseConstants,
    seed: u64,
) -> Result<Option<Vec<usize>>> {
    let mut run = OneSparseRun::new(set.to_vec(), OneSparseConstants { precondition_min: usize::MAX, ..*c }, seed);
    run.schedule = vec![b];
    run.step = 0;
    run.done = false;
    for _ in 0..2 {
        run.issue(oracle)?;
        oracle.end_round();
        run.absorb(oracle)?;
        if run.step == 1 {
            return Ok(Some(run.set));
        }
        if run.done {
            break;
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneSparseOutcome {
    pub index: Option<usize>,
    pub measurements: usize,
    pub rounds: usize,
}

/// Finds the dominant coordinate of the whole signal.
pub fn one_sparse_recover(oracle: &mut MeasurementOracle<'_>, c: &OneSparseConstants, seed: u64) -> Result<OneSparseOutcome> {
    one_sparse_recover_in(oracle, (0..oracle.n()).collect(), c, seed)
}

pub fn one_sparse_recover_in(
    oracle: &mut MeasurementOracle<'_>,
    universe: Vec<usize>,
    c: &OneSparseConstants,
    seed: u64,
) -> Result<OneSparseOutcome> {
    let before = oracle.measurements();
    let mut runs = [OneSparseRun::new(universe, *c, seed)];
    let rounds = run_lockstep(oracle, &mut runs)?;
    Ok(OneSparseOutcome { index: runs[0].result(), measurements: oracle.measurements() - before, rounds })
}

/// `2↑↑r`, with `2↑↑0 = 1`.
pub fn tetration(r: u32) -> f64 {
    (0..r).fold(1.0, |acc, _| 2f64.powf(acc))
}

/// Number of times `log2` must be applied before the value drops to at
/// most 1.
pub fn log_star(mut x: f64) -> usize {
    let mut n = 0;
    while x > 1.0 {
        x = x.log2();
        n += 1;
    }
    n
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConstants {
    /// Repetition constant.
    pub c: f64,
    /// Buckets per repetition are `⌈c_prime·k_r/ε_r⌉`.
    pub c_prime: f64,
    pub gamma: f64,
    pub one_sparse: OneSparseConstants,
}

impl Default for AdaptiveConstants {
    fn default() -> Self {
        Self { c: 4.0, c_prime: 8.0, gamma: 0.2, one_sparse: OneSparseConstants::default() }
    }
}

/// Parameters of one hash-and-recover round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundPlan {
    pub phase: usize,
    pub round: usize,
    pub k: f64,
    pub eps: f64,
    pub reps: usize,
}

/// The three-phase schedule: `k/2^r` with `ε(3/4)^r` for `⌈log2 log2 k⌉`
/// rounds, then `k/((2↑↑r)·log2 k)` with `⌈C log2 k⌉` repetitions, then
/// `k^{γ_r}` with `⌈C·k^{1−γ_r}⌉` repetitions for `γ_r` stepping from
/// `1−γ` down to `γ`.
pub fn adaptive_plan(k: usize, eps: f64, c: &AdaptiveConstants) -> Vec<RoundPlan> {
    let kf = k as f64;
    let lg = kf.log2().max(1.0);
    let mut plan = Vec::new();
    let phase1 = if k > 2 { ceil_tol(lg.log2()) } else { 0 };
    for r in 0..phase1 {
        plan.push(RoundPlan {
            phase: 1,
            round: r,
            k: kf / 2f64.powi(r as i32),
            eps: eps * 0.75f64.powi(r as i32),
            reps: ceil_tol(c.c).max(1),
        });
    }
    for r in 0..=log_star(kf.powf(c.gamma)) {
        plan.push(RoundPlan {
            phase: 2,
            round: r,
            k: (kf / (tetration(r as u32) * lg)).max(1.0),
            eps,
            reps: ceil_tol(c.c * lg).max(1),
        });
    }
    let t = ceil_tol(1.0 / c.gamma).saturating_sub(1).max(1);
    for r in 0..=t {
        let g = (1.0 - c.gamma) - r as f64 * (1.0 - 2.0 * c.gamma) / t as f64;
        plan.push(RoundPlan { phase: 3, round: r, k: kf.powf(g), eps, reps: ceil_tol(c.c * kf.powf(1.0 - g)).max(1) });
    }
    plan
}

/// Measurement and round usage of one stage of an adaptive recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundAccount {
    pub stage: &'static str,
    pub round: usize,
    pub k: f64,
    pub eps: f64,
    pub reps: usize,
    pub buckets: usize,
    pub universe: usize,
    pub found: usize,
    pub measurements: usize,
    pub rounds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRecovery {
    /// Directly observed `(index, value)` pairs sorted by index.
    pub approx: Vec<(usize, f64)>,
    pub measurements: usize,
    pub rounds: usize,
    pub accounting: Vec<RoundAccount>,
}

impl AdaptiveRecovery {
    pub fn support(&self) -> Vec<usize> {
        self.approx.iter().map(|p| p.0).collect()
    }
}

/// One-sparse recovery in every bucket of `reps` independent hashings of
/// `universe` into `buckets` buckets, all in shared rounds.
pub fn hash_and_recover(
    oracle: &mut MeasurementOracle<'_>,
    universe: &[usize],
    buckets: usize,
    reps: usize,
    c: &OneSparseConstants,
    seed: u64,
) -> Result<Vec<usize>> {
    if buckets == 0 {
        return invalid("need at least one bucket");
    }
    let mut runs = Vec::new();
    for j in 0..reps {
        let hseed = mix(&[seed, j as u64, 0xb0c4]);
        let mut parts = vec![Vec::new(); buckets];
        for &i in universe {
            parts[(mix(&[hseed, i as u64]) % buckets as u64) as usize].push(i);
        }
        for (l, part) in parts.into_iter().enumerate() {
            if !part.is_empty() {
                runs.push(OneSparseRun::new(part, *c, mix(&[hseed, l as u64, 1])));
            }
        }
    }
    run_lockstep(oracle, &mut runs)?;
    let mut found: Vec<usize> = runs.iter().filter_map(OneSparseRun::result).collect();
    found.sort_unstable();
    found.dedup();
    Ok(found)
}

/// Reads every listed coordinate in one round.
pub fn observe_all(oracle: &mut MeasurementOracle<'_>, indices: &[usize]) -> Result<Vec<(usize, f64)>> {
    let tickets = indices.iter().map(|&i| oracle.observe(i)).collect::<Result<Vec<_>>>()?;
    oracle.end_round();
    indices.iter().zip(tickets).map(|(&i, t)| Ok((i, oracle.value(t)?))).collect()
}

struct Tracker {
    measurements: usize,
    rounds: usize,
}

impl Tracker {
    fn start(oracle: &MeasurementOracle<'_>) -> Self {
        Self { measurements: oracle.measurements(), rounds: oracle.rounds() }
    }

    fn delta(&self, oracle: &MeasurementOracle<'_>) -> (usize, usize) {
        (oracle.measurements() - self.measurements, oracle.rounds() - self.rounds)
    }
}

/// Three-phase adaptive k-sparse recovery. The output holds the directly
/// observed values of every recovered coordinate.
pub fn adaptive_k_recover(
    oracle: &mut MeasurementOracle<'_>,
    k: usize,
    eps: f64,
    c: &AdaptiveConstants,
    seed: u64,
) -> Result<AdaptiveRecovery> {
    let n = oracle.n();
    if k < 2 || k > n || !(eps > 0.0 && eps < 1.0) {
        return invalid("need 2 <= k <= n and eps in (0,1)");
    }
    let start = Tracker::start(oracle);
    let mut in_j = vec![false; n];
    let mut approx = Vec::new();
    let mut accounting = Vec::new();
    for (idx, p) in adaptive_plan(k, eps, c).into_iter().enumerate() {
        let t = Tracker::start(oracle);
        let universe: Vec<usize> = (0..n).filter(|&i| !in_j[i]).collect();
        if universe.is_empty() {
            break;
        }
        let buckets = ceil_tol(c.c_prime * p.k / p.eps).clamp(1, universe.len());
        let found = hash_and_recover(oracle, &universe, buckets, p.reps, &c.one_sparse, mix(&[seed, idx as u64]))?;
        let observed = observe_all(oracle, &found)?;
        for &(i, _) in &observed {
            in_j[i] = true;
        }
        approx.extend(observed);
        let (measurements, rounds) = t.delta(oracle);
        accounting.push(RoundAccount {
            stage: ["", "phase1", "phase2", "phase3"][p.phase],
            round: p.round,
            k: p.k,
            eps: p.eps,
            reps: p.reps,
            buckets,
            universe: universe.len(),
            found: found.len(),
            measurements,
            rounds,
        });
    }
    approx.sort_by_key(|p| p.0);
    let (measurements, rounds) = start.delta(oracle);
    Ok(AdaptiveRecovery { approx, measurements, rounds, accounting })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowSparsityConstants {
    /// Coordinates are hashed into `⌈log2(n)^c0⌉` classes, at most `n`.
    pub c0: f64,
    pub partition: PartitionConstants,
    pub one_sparse: OneSparseConstants,
}

impl Default for LowSparsityConstants {
    fn default() -> Self {
        Self { c0: 3.5, partition: PartitionConstants::default(), one_sparse: OneSparseConstants::default() }
    }
}

/// Random hash of `[n]` into `classes` labels, relabelled so that every
/// class is nonempty.
pub fn class_partition(n: usize, classes: usize, seed: u64) -> Result<Partition> {
    if classes == 0 {
        return invalid("need at least one class");
    }
    let raw: Vec<usize> = (0..n).map(|i| (mix(&[seed, i as u64, 0xc1a5]) % classes as u64) as usize).collect();
    let mut label = vec![usize::MAX; classes];
    let mut next = 0;
    let class_of = raw
        .into_iter()
        .map(|c| {
            if label[c] == usize::MAX {
                label[c] = next;
                next += 1;
            }
            label[c]
        })
        .collect();
    Partition::new(class_of, next)
}

/// Low-sparsity adaptive recovery: heavy classes of a hashed partition, one
/// one-sparse recovery per heavy class, then a direct observation round.
pub fn low_sparsity_recover(
    oracle: &mut MeasurementOracle<'_>,
    k: usize,
    eps: f64,
    c: &LowSparsityConstants,
    seed: u64,
) -> Result<AdaptiveRecovery> {
    let n = oracle.n();
    if k == 0 || k > n || !(eps > 0.0 && eps <= 1.0) {
        return invalid("need 1 <= k <= n and eps in (0,1]");
    }
    let lg = (n as f64).log2().max(1.0);
    if k as f64 / eps > lg.powi(4) {
        return invalid("low-sparsity regime needs k/eps <= log2(n)^4");
    }
    let start = Tracker::start(oracle);
    let classes = (ceil_tol(lg.powf(c.c0))).clamp(1, n);
    let partition = class_partition(n, classes, mix(&[seed, 1]))?;
    let mut sketch = PartitionSketch::new(partition, k, eps, c.partition, mix(&[seed, 2]))?;
    let mut accounting = Vec::new();

    let t = Tracker::start(oracle);
    let mut rows = vec![Vec::new(); sketch.measurements()];
    for r in 0..sketch.rows() {
        for i in 0..n {
            let (m, s) = sketch.cell(r, i);
            rows[m].push((i, s));
        }
    }
    let tickets = rows.into_iter().map(|row| oracle.measure(row)).collect::<Result<Vec<_>>>()?;
    oracle.end_round();
    let values = tickets.into_iter().map(|t| oracle.value(t)).collect::<Result<Vec<_>>>()?;
    sketch.set_values(values)?;
    let heavy = sketch.partition_hh();
    let (measurements, rounds) = t.delta(oracle);
    let u = sketch.partition().classes();
    accounting.push(RoundAccount {
        stage: "partition",
        round: 0,
        k: k as f64,
        eps,
        reps: sketch.rows(),
        buckets: sketch.buckets(),
        universe: u,
        found: heavy.len(),
        measurements,
        rounds,
    });

    let t = Tracker::start(oracle);
    let members = sketch.partition().members();
    let mut runs: Vec<OneSparseRun> = heavy
        .iter()
        .map(|&cl| OneSparseRun::new(members[cl].clone(), c.one_sparse, mix(&[seed, 3, cl as u64])))
        .collect();
    run_lockstep(oracle, &mut runs)?;
    let mut found: Vec<usize> = runs.iter().filter_map(OneSparseRun::result).collect();
    found.sort_unstable();
    let (measurements, rounds) = t.delta(oracle);
    accounting.push(RoundAccount {
        stage: "one-sparse",
        round: 0,
        k: k as f64,
        eps,
        reps: 1,
        buckets: heavy.len(),
        universe: n,
        found: found.len(),
        measurements,
        rounds,
    });

    let t = Tracker::start(oracle);
    let approx = observe_all(oracle, &found)?;
    let (measurements, rounds) = t.delta(oracle);
    accounting.push(RoundAccount {
        stage: "observe",
        round: 0,
        k: k as f64,
        eps,
        reps: 1,
        buckets: 0,
        universe: found.len(),
        found: found.len(),
        measurements,
        rounds,
    });
    let (measurements, rounds) = start.delta(oracle);
    Ok(AdaptiveRecovery { approx, measurements, rounds, accounting })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::error_sq;
    use crate::stream::{gen_heads_over_noise, head_eps, head_tail};
    use crate::util::norm2_sq;

    fn spike(n: usize, ratio: f64, seed: u64) -> (Vec<f64>, usize) {
        let mut x = gen_heads_over_noise(n, 1, 0.0, 1.0, seed);
        let j = (mix(&[seed, 77]) % n as u64) as usize;
        x[j] = 0.0;
        x[j] = ratio * norm2_sq(&x).sqrt();
        (x, j)
    }

    #[test]
    fn oracle_releases_at_boundary() {
        let x = [1.0, 2.0, 3.0];
        let mut o = MeasurementOracle::new(&x);
        let t = o.measure([(0, 1.0), (2, 2.0)]).unwrap();
        assert!(matches!(o.value(t), Err(Error::RoundViolation(_))));
        assert_eq!(o.violations(), 1);
        o.end_round();
        assert_eq!(o.value(t).unwrap(), 7.0);
        o.end_round();
        assert_eq!(o.rounds(), 1);
        assert!(o.observe(3).is_err());
    }

    #[test]
    fn hadamard_code_decodes_within_radius() {
        for bits in 1..=4 {
            let code = BinaryCode::hadamard(bits).unwrap();
            let len = code.codeword_bits();
            assert_eq!(code.min_distance(), 1 << (bits - 1));
            for m in 0..1usize << bits {
                for e in 0u64..1 << len {
                    if e.count_ones() as usize <= code.radius() {
                        assert_eq!(code.decode(code.encode(m) ^ e), m);
                    }
                }
            }
        }
    }

    #[test]
    fn schedule_and_tetration() {
        assert_eq!([0, 1, 2, 3].map(tetration), [1.0, 2.0, 4.0, 16.0]);
        assert_eq!(log_star(1.0), 0);
        assert_eq!(log_star(16.0), 3);
        let s = shrink_schedule(1 << 16);
        assert!(*s.last().unwrap() >= 65536.0 && s[s.len() - 2] < 65536.0);
        assert_eq!(s.len(), 7);
        assert!(shrink_schedule(1).is_empty());
    }

    #[test]
    fn message_bits_by_universe() {
        let c = OneSparseConstants::default();
        assert_eq!(message_bits(1 << 16, &c), 4);
        assert_eq!(message_bits(255, &c), 0);
        assert_eq!(message_bits(256, &c), 3);
    }

    #[test]
    fn noiseless_precondition_and_shrink() {
        let n = 1 << 12;
        let mut x = vec![0.0; n];
        x[1234] = -3.0;
        let c = OneSparseConstants::default();
        let universe: Vec<usize> = (0..n).collect();
        let mut o = MeasurementOracle::new(&x);
        let s = precondition(&mut o, &universe, &c, 5).unwrap();
        assert!(s.contains(&1234));
        assert_eq!(s.len(), n >> message_bits(n, &c));
        let s2 = shrink(&mut o, &universe, 64.0, &c, 9).unwrap().unwrap();
        assert_eq!(s2, vec![1234]);
        let out = one_sparse_recover(&mut o, &c, 3).unwrap();
        assert_eq!(out.index, Some(1234));
        assert!(out.rounds <= 2 + shrink_schedule(n).len());
        assert_eq!(o.violations(), 0);
    }

    #[test]
    fn one_sparse_with_noise() {
        let c = OneSparseConstants::default();
        let mut ok = 0;
        for seed in 0..100 {
            let (x, j) = spike(1 << 12, 10.0, seed);
            let mut o = MeasurementOracle::new(&x);
            if one_sparse_recover(&mut o, &c, seed).unwrap().index == Some(j) {
                ok += 1;
            }
        }
        assert!(ok >= 97, "{ok}");
    }

    #[test]
    fn two_equal_spikes_terminate() {
        let mut x = vec![0.0; 1024];
        x[3] = 1.0;
        x[700] = 1.0;
        let mut o = MeasurementOracle::new(&x);
        let out = one_sparse_recover(&mut o, &OneSparseConstants::default(), 1).unwrap();
        assert!(out.rounds <= 2 + shrink_schedule(1024).len());
    }

    #[test]
    fn plan_shape() {
        let p = adaptive_plan(64, 0.25, &AdaptiveConstants::default());
        let phase1: Vec<_> = p.iter().filter(|r| r.phase == 1).collect();
        assert_eq!(phase1.len(), 3);
        assert_eq!(phase1[2].k, 16.0);
        assert_eq!(phase1[2].eps, 0.25 * 0.5625);
        let phase3: Vec<_> = p.iter().filter(|r| r.phase == 3).collect();
        assert_eq!(phase3.len(), 5);
        assert!((phase3[0].k - 64f64.powf(0.8)).abs() < 1e-9);
        assert!((phase3[4].k - 64f64.powf(0.2)).abs() < 1e-9);
    }

    #[test]
    fn exactly_sparse_recovered() {
        let mut ok = 0;
        for seed in 0..10 {
            let x = gen_heads_over_noise(1 << 12, 16, 1.0, 0.0, seed);
            let mut o = MeasurementOracle::new(&x);
            let res = adaptive_k_recover(&mut o, 16, 0.25, &AdaptiveConstants::default(), seed).unwrap();
            assert_eq!(o.violations(), 0);
            assert_eq!(res.measurements, o.measurements());
            assert_eq!(res.rounds, o.rounds());
            for &(i, v) in &res.approx {
                assert_eq!(v, x[i]);
            }
            if error_sq(&x, &res.approx) == 0.0 {
                ok += 1;
            }
        }
        assert!(ok >= 9);
    }

    #[test]
    fn low_sparsity_finds_heads() {
        let mut ok = 0;
        for seed in 0..30 {
            let x = gen_heads_over_noise(1 << 12, 4, 1.0, 0.02, seed);
            let mut o = MeasurementOracle::new(&x);
            let res = low_sparsity_recover(&mut o, 4, 0.25, &LowSparsityConstants::default(), seed).unwrap();
            let sup = res.support();
            let heads = head_eps(&x, 4, 0.25);
            let bound = 1.25 * head_tail(&x, 4).tail_l2_sq();
            if heads.iter().all(|h| sup.contains(h)) && error_sq(&x, &res.approx) <= bound {
                ok += 1;
            }
        }
        assert!(ok >= 28, "{ok}");
    }

    #[test]
    fn low_sparsity_rejects_large_k() {
        let x = vec![0.0; 16];
        let mut o = MeasurementOracle::new(&x);
        assert!(low_sparsity_recover(&mut o, 16, 0.01, &LowSparsityConstants::default(), 0).is_err());
    }
}
