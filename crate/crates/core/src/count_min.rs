//! Count-Min with high-independence hashing for the ℓ1 "list of candidates"
//! guarantee, its promise variant, and the dyadic search built on top of it.
//!
//! Sizing (ε accuracy, δ failure probability, k = 1 unless stated):
//!
//! * rows `R = ⌈C_R·log2(ε·m) + ⌈ε·ln(1/δ)/C_δ⌉⌉` where `m = n`, or the
//!   promise-set size for the promise variant;
//! * buckets `B = ⌈C_B·k/ε⌉`;
//! * each row hash is `⌈C_0/ε⌉`-wise independent;
//! * queries return the `⌈(C_0+1)/ε⌉` candidates with the largest estimates.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{invalid, Error, Result};
use crate::field::{PolyHash, PrimeField};
use crate::stream::TurnstileStream;
use crate::util::{ln_binomial, rng};

/// Rows evaluated for every candidate before threshold pruning starts.
const PRUNE_ROWS: usize = 4;
/// Largest `rows * n` for which bucket indices are cached densely.
const CACHE_LIMIT: usize = 1 << 25;
const CHUNK: usize = 256;

/// Tunable constants of the sizing formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmConstants {
    pub c_r: f64,
    pub c_delta: f64,
    pub c_b: f64,
    pub c_0: f64,
}

impl Default for CmConstants {
    fn default() -> Self {
        Self { c_r: 5.0, c_delta: 10.0 * (4f64.ln() - 1.0), c_b: 20.0, c_0: 30.0 }
    }
}

impl CmConstants {
    /// All four constants set to the same value.
    pub fn uniform_value(v: f64) -> Self {
        Self { c_r: v, c_delta: v, c_b: v, c_0: v }
    }
}

/// Structure sizes derived from the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CmSizes {
    pub rows: usize,
    pub buckets: usize,
    pub independence: usize,
    pub list_size: usize,
}

/// Ceiling that ignores floating-point noise just above an integer.
pub(crate) fn ceil_tol(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r.max(0.0) as usize
    } else {
        x.ceil().max(0.0) as usize
    }
}

/// Sizes for a structure whose candidate universe has `m` elements, with
/// the failure term given as `ln(1/δ)`.
pub fn cm_sizes_ln(m: usize, eps: f64, ln_inv_delta: f64, k: usize, c: &CmConstants) -> CmSizes {
    let log_term = c.c_r * (eps * m as f64).log2().max(0.0);
    let delta_term = ceil_tol(eps * ln_inv_delta / c.c_delta) as f64;
    CmSizes {
        rows: ceil_tol(log_term + delta_term).max(1),
        buckets: ceil_tol(c.c_b * k as f64 / eps).max(1),
        independence: ceil_tol(c.c_0 / eps).max(1),
        list_size: ceil_tol((c.c_0 + 1.0) / eps).max(1),
    }
}

pub fn cm_sizes(m: usize, eps: f64, delta: f64, c: &CmConstants) -> CmSizes {
    cm_sizes_ln(m, eps, (1.0 / delta).ln(), 1, c)
}

/// `ln(1/δ)` for the uniform variant, `δ = 1 / C(n, ⌈1/ε⌉)`.
pub fn uniform_ln_inv_delta(n: usize, eps: f64) -> f64 {
    ln_binomial(n as u64, ceil_tol(1.0 / eps) as u64)
}

fn check_params(n: usize, eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 0.5) {
        return invalid(format!("eps = {eps} must lie in (0, 1/2]"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta = {delta} must lie in (0, 1)"));
    }
    if (n as f64) < 2.0 / eps - 1e-9 {
        return invalid(format!("n = {n} must be at least 2/eps"));
    }
    Ok(())
}

/// Dense per-row bucket cache, `u32::MAX` marking unknown entries.
#[derive(Debug, Clone)]
struct BucketCache {
    n: usize,
    data: Vec<u32>,
}

const UNKNOWN: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct CountMinG3 {
    n: usize,
    eps: f64,
    sizes: CmSizes,
    hashes: Vec<PolyHash>,
    counters: Vec<f64>,
    cache: Option<BucketCache>,
}

impl CountMinG3 {
    /// Structure over `[0, n)` with failure probability `delta`.
    pub fn new(n: usize, eps: f64, delta: f64, constants: CmConstants, seed: u64) -> Result<Self> {
        check_params(n, eps, delta)?;
        Self::build(n, eps, cm_sizes(n, eps, delta, &constants), seed)
    }

    /// Promise variant: heavy hitters are known to lie in a set of size
    /// `m`, so the row count uses `log(ε·m)`.
    pub fn promise(n: usize, m: usize, eps: f64, delta: f64, constants: CmConstants, seed: u64) -> Result<Self> {
        check_params(n, eps, delta)?;
        if m == 0 || m > n {
            return invalid(format!("promise size {m} must lie in [1, n]"));
        }
        Self::build(n, eps, cm_sizes(m, eps, delta, &constants), seed)
    }

    /// Variant whose failure probability `1 / C(n, ⌈1/ε⌉)` survives a
    /// union bound over every candidate heavy set.
    pub fn uniform(n: usize, eps: f64, constants: CmConstants, seed: u64) -> Result<Self> {
        check_params(n, eps, 0.5)?;
        let sizes = cm_sizes_ln(n, eps, uniform_ln_inv_delta(n, eps), 1, &constants);
        Self::build(n, eps, sizes, seed)
    }

    /// Structure with explicitly chosen sizes.
    pub fn with_sizes(n: usize, eps: f64, sizes: CmSizes, seed: u64) -> Result<Self> {
        if n == 0 || sizes.rows == 0 || sizes.buckets == 0 || sizes.independence == 0 {
            return invalid("all sizes must be positive");
        }
        Self::build(n, eps, sizes, seed)
    }

    fn build(n: usize, eps: f64, sizes: CmSizes, seed: u64) -> Result<Self> {
        if sizes.buckets > u32::MAX as usize - 1 {
            return invalid("too many buckets");
        }
        let mut r = rng(seed);
        let hashes = (0..sizes.rows)
            .map(|_| PolyHash::with_rng(PrimeField::default(), sizes.independence, n as u64, sizes.buckets as u64, &mut r))
            .collect::<Result<Vec<_>>>()?;
        let cache = (sizes.rows.saturating_mul(n) <= CACHE_LIMIT).then(|| BucketCache { n, data: Vec::new() });
        Ok(Self { n, eps, sizes, hashes, counters: vec![0.0; sizes.rows * sizes.buckets], cache })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn sizes(&self) -> CmSizes {
        self.sizes
    }

    pub fn rows(&self) -> usize {
        self.sizes.rows
    }

    pub fn buckets(&self) -> usize {
        self.sizes.buckets
    }

    pub fn hash(&self, row: usize) -> &PolyHash {
        &self.hashes[row]
    }

    /// Counter grid, row-major.
    pub fn counters(&self) -> &[f64] {
        &self.counters
    }

    pub fn counter(&self, row: usize, bucket: usize) -> f64 {
        self.counters[row * self.sizes.buckets + bucket]
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i as u64, n: self.n as u64 });
        }
        Ok(())
    }

    /// Adds `delta` to the counter `h_r(i)` of every row.
    pub fn update(&mut self, i: usize, delta: f64) -> Result<()> {
        self.check_index(i)?;
        self.fill_cache(&[i]);
        let b = self.sizes.buckets;
        for r in 0..self.sizes.rows {
            let bucket = self.bucket(r, i);
            self.counters[r * b + bucket] += delta;
        }
        Ok(())
    }

    /// Applies every update of a stream, hashing each distinct index once.
    pub fn ingest(&mut self, stream: &TurnstileStream) -> Result<()> {
        if let Some(u) = stream.updates.iter().find(|u| u.index >= self.n) {
            return Err(Error::IndexOutOfRange { index: u.index as u64, n: self.n as u64 });
        }
        let mut distinct: Vec<usize> = stream.updates.iter().map(|u| u.index).collect();
        distinct.sort_unstable();
        distinct.dedup();
        if self.cache.is_some() {
            self.fill_cache(&distinct);
            let b = self.sizes.buckets;
            for u in &stream.updates {
                for r in 0..self.sizes.rows {
                    let bucket = self.bucket(r, u.index);
                    self.counters[r * b + bucket] += u.delta;
                }
            }
        } else {
            let mut agg = std::collections::BTreeMap::new();
            for u in &stream.updates {
                *agg.entry(u.index).or_insert(0.0) += u.delta;
            }
            let idx: Vec<usize> = agg.keys().copied().collect();
            let mut buckets = vec![0u64; idx.len()];
            let b = self.sizes.buckets;
            for r in 0..self.sizes.rows {
                self.buckets_for(r, &idx, &mut buckets);
                for (j, (_, &d)) in agg.iter().enumerate() {
                    self.counters[r * b + buckets[j] as usize] += d;
                }
            }
        }
        Ok(())
    }

    fn fill_cache(&mut self, indices: &[usize]) {
        let rows = self.sizes.rows;
        let Some(cache) = self.cache.as_mut() else { return };
        if cache.data.is_empty() {
            cache.data = vec![UNKNOWN; rows * cache.n];
        }
        let n = cache.n;
        let missing: Vec<u64> = indices.iter().filter(|&&i| cache.data[i] == UNKNOWN).map(|&i| i as u64).collect();
        if missing.is_empty() {
            return;
        }
        let mut out = vec![0u64; missing.len()];
        for (r, h) in self.hashes.iter().enumerate() {
            h.buckets_of(&missing, &mut out);
            for (&i, &b) in missing.iter().zip(&out) {
                cache.data[r * n + i as usize] = b as u32;
            }
        }
    }

    #[inline]
    fn cached(&self, r: usize, i: usize) -> Option<usize> {
        let c = self.cache.as_ref()?;
        match c.data.get(r * c.n + i) {
            Some(&b) if b != UNKNOWN => Some(b as usize),
            _ => None,
        }
    }

    #[inline]
    fn bucket(&self, r: usize, i: usize) -> usize {
        self.cached(r, i).unwrap_or_else(|| self.hashes[r].eval_unchecked(i as u64) as usize)
    }

    /// Buckets of `idx` in row `r`, from the cache where possible.
    fn buckets_for(&self, r: usize, idx: &[usize], out: &mut [u64]) {
        let mut miss_pos = Vec::new();
        let mut miss_x = Vec::new();
        for (j, &i) in idx.iter().enumerate() {
            match self.cached(r, i) {
                Some(b) => out[j] = b as u64,
                None => {
                    miss_pos.push(j);
                    miss_x.push(i as u64);
                }
            }
        }
        if !miss_x.is_empty() {
            let mut vals = vec![0u64; miss_x.len()];
            self.hashes[r].buckets_of(&miss_x, &mut vals);
            for (&j, &v) in miss_pos.iter().zip(&vals) {
                out[j] = v;
            }
        }
    }

    /// `x̂_i = min_r C[r, h_r(i)]`.
    pub fn point_estimate(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        let b = self.sizes.buckets;
        Ok((0..self.sizes.rows).map(|r| self.counters[r * b + self.bucket(r, i)]).fold(f64::INFINITY, f64::min))
    }

    /// Point estimates of all coordinates (row tables built by multipoint
    /// evaluation).
    pub fn all_estimates(&self) -> Vec<f64> {
        let mut est = vec![f64::INFINITY; self.n];
        let b = self.sizes.buckets;
        for (r, h) in self.hashes.iter().enumerate() {
            let row = &self.counters[r * b..(r + 1) * b];
            for (e, &bk) in est.iter_mut().zip(h.table().iter()) {
                *e = e.min(row[bk as usize]);
            }
        }
        est
    }

    /// Number of indices a query returns over a candidate set of size `m`.
    pub fn list_len(&self, m: usize) -> usize {
        self.sizes.list_size.min(m)
    }

    /// The `⌈(C_0+1)/ε⌉` coordinates with the largest estimates, sorted by
    /// estimate (descending, ties toward the lower index); all of `[n]` if
    /// that list would not be shorter than `n`.
    pub fn query(&self) -> Vec<usize> {
        self.query_with_estimates().into_iter().map(|(i, _)| i).collect()
    }

    pub fn query_with_estimates(&self) -> Vec<(usize, f64)> {
        let all: Vec<usize> = (0..self.n).collect();
        self.top_estimates(&all, self.list_len(self.n), true)
    }

    /// As [`query`](Self::query), with estimates computed only over `p`.
    pub fn query_promise(&self, p: &[usize]) -> Result<Vec<usize>> {
        Ok(self.query_promise_with_estimates(p)?.into_iter().map(|(i, _)| i).collect())
    }

    pub fn query_promise_with_estimates(&self, p: &[usize]) -> Result<Vec<(usize, f64)>> {
        if let Some(&i) = p.iter().find(|&&i| i >= self.n) {
            return Err(Error::IndexOutOfRange { index: i as u64, n: self.n as u64 });
        }
        let mut cands = p.to_vec();
        cands.sort_unstable();
        cands.dedup();
        let contiguous = cands.len() == self.n;
        Ok(self.top_estimates(&cands, self.list_len(cands.len()), contiguous))
    }

    /// Exact top-`l` selection by estimate. Rows beyond the first few are
    /// only evaluated while a candidate can still beat the current `l`-th
    /// best estimate, which is a lower bound on the final cut-off.
    fn top_estimates(&self, cands: &[usize], l: usize, contiguous: bool) -> Vec<(usize, f64)> {
        let rows = self.sizes.rows;
        let b = self.sizes.buckets;
        let r0 = if l >= cands.len() { rows } else { PRUNE_ROWS.min(rows) };
        let mut partial = vec![f64::INFINITY; cands.len()];
        let mut buf = vec![0u64; cands.len()];
        for r in 0..r0 {
            let row = &self.counters[r * b..(r + 1) * b];
            if contiguous && self.cache.as_ref().map_or(true, |c| c.data.is_empty()) {
                let table = self.hashes[r].table();
                for (p, &i) in partial.iter_mut().zip(cands) {
                    *p = p.min(row[table[i] as usize]);
                }
            } else {
                self.buckets_for(r, cands, &mut buf);
                for (p, &bk) in partial.iter_mut().zip(&buf) {
                    *p = p.min(row[bk as usize]);
                }
            }
        }
        if r0 == rows {
            let pairs = cands.iter().copied().zip(partial).collect();
            return crate::util::top_k_pairs(pairs, l);
        }

        let mut order: Vec<usize> = (0..cands.len()).collect();
        order.sort_by(|&a, &c| partial[c].total_cmp(&partial[a]).then(cands[a].cmp(&cands[c])));

        let mut heap: BinaryHeap<Reverse<Key>> = BinaryHeap::with_capacity(l + 1);
        let mut pos = 0;
        let mut idx = Vec::with_capacity(CHUNK);
        let mut run = Vec::with_capacity(CHUNK);
        let mut out = vec![0u64; CHUNK];
        while pos < order.len() {
            let theta = if heap.len() == l { heap.peek().map(|k| k.0 .0) } else { None };
            if let Some(t) = theta {
                if partial[order[pos]] < t {
                    break;
                }
            }
            let end = (pos + CHUNK).min(order.len());
            idx.clear();
            run.clear();
            for &o in &order[pos..end] {
                if theta.map_or(true, |t| partial[o] >= t) {
                    idx.push(cands[o]);
                    run.push(partial[o]);
                }
            }
            pos = end;
            for r in r0..rows {
                if idx.is_empty() {
                    break;
                }
                let row = &self.counters[r * b..(r + 1) * b];
                self.buckets_for(r, &idx, &mut out[..idx.len()]);
                let mut keep = 0;
                for j in 0..idx.len() {
                    let v = run[j].min(row[out[j] as usize]);
                    if theta.map_or(true, |t| v >= t) {
                        idx[keep] = idx[j];
                        run[keep] = v;
                        keep += 1;
                    }
                }
                idx.truncate(keep);
                run.truncate(keep);
            }
            for (&i, &v) in idx.iter().zip(&run) {
                let key = Key(v, Reverse(i));
                if heap.len() < l {
                    heap.push(Reverse(key));
                } else if key > heap.peek().unwrap().0 {
                    heap.pop();
                    heap.push(Reverse(key));
                }
            }
        }
        let mut result: Vec<(usize, f64)> = heap.into_iter().map(|Reverse(Key(v, Reverse(i)))| (i, v)).collect();
        result.sort_by(|a, c| c.1.total_cmp(&a.1).then(a.0.cmp(&c.0)));
        result
    }
}

/// Ranking key: larger estimate first, then lower index.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64, Reverse<usize>);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Per-level failure budget constant: each level gets `δ / (c·log2(εn))`.
pub const DYADIC_LEVEL_BUDGET: f64 = 4.0;

/// Hierarchy of promise structures over dyadic intervals of `[0, n)`.
///
/// Level `l` partitions the (power-of-two padded) universe into `2^l`
/// intervals. The search starts at the deepest level whose node count does
/// not exceed twice the candidate width and descends to the leaves, keeping
/// at each level the best `width` nodes among the children of the previous
/// survivors.
#[derive(Debug, Clone)]
pub struct DyadicG3 {
    n: usize,
    depth: u32,
    first_level: u32,
    width: usize,
    levels: Vec<CountMinG3>,
    level_delta: f64,
}

/// Per-level record of a dyadic query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicTrace {
    pub level: u32,
    pub frontier: usize,
    pub kept: usize,
}

impl DyadicG3 {
    pub fn new(n: usize, eps: f64, delta: f64, constants: CmConstants, seed: u64) -> Result<Self> {
        check_params(n, eps, delta)?;
        let depth = (n as u64).next_power_of_two().trailing_zeros();
        let width = ceil_tol((constants.c_0 + 1.0) / eps).max(1);
        let promise = 2 * width;
        let first_level = ((promise as f64).log2().floor() as u32).min(depth);
        let level_delta = delta / (DYADIC_LEVEL_BUDGET * (eps * n as f64).log2().max(1.0));
        let mut levels = Vec::new();
        for (j, l) in (first_level..=depth).enumerate() {
            let nodes = level_nodes(n, depth, l);
            let m = promise.min(nodes);
            let mut sizes = cm_sizes(m, eps, level_delta, &constants);
            sizes.list_size = width;
            let s = crate::util::mix(&[seed, j as u64, 0xD1AD]);
            levels.push(CountMinG3::with_sizes(nodes, eps, sizes, s)?);
        }
        Ok(Self { n, depth, first_level, width, levels, level_delta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn levels(&self) -> impl Iterator<Item = (u32, &CountMinG3)> {
        (self.first_level..=self.depth).zip(self.levels.iter())
    }

    pub fn level_delta(&self) -> f64 {
        self.level_delta
    }

    /// Total number of counters over all levels.
    pub fn space(&self) -> usize {
        self.levels.iter().map(|c| c.rows() * c.buckets()).sum()
    }

    pub fn update(&mut self, i: usize, delta: f64) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i as u64, n: self.n as u64 });
        }
        for (l, s) in (self.first_level..=self.depth).zip(self.levels.iter_mut()) {
            s.update(i >> (self.depth - l), delta)?;
        }
        Ok(())
    }

    pub fn ingest(&mut self, stream: &TurnstileStream) -> Result<()> {
        if let Some(u) = stream.updates.iter().find(|u| u.index >= self.n) {
            return Err(Error::IndexOutOfRange { index: u.index as u64, n: self.n as u64 });
        }
        for (l, s) in (self.first_level..=self.depth).zip(self.levels.iter_mut()) {
            let shift = self.depth - l;
            let mut lifted = TurnstileStream::new(s.n(), stream.mode);
            lifted.updates = stream.updates.iter().map(|u| crate::stream::Update::new(u.index >> shift, u.delta)).collect();
            s.ingest(&lifted)?;
        }
        Ok(())
    }

    pub fn query(&self) -> Vec<usize> {
        self.query_traced().0
    }

    /// Breadth-first descent; also reports the frontier size per level.
    pub fn query_traced(&self) -> (Vec<usize>, Vec<DyadicTrace>) {
        let mut frontier: Vec<usize> = (0..self.levels[0].n()).collect();
        let mut trace = Vec::new();
        let mut survivors = Vec::new();
        for (j, (l, s)) in self.levels().enumerate() {
            survivors = s.query_promise(&frontier).expect("frontier lies inside the level");
            trace.push(DyadicTrace { level: l, frontier: frontier.len(), kept: survivors.len() });
            if j + 1 < self.levels.len() {
                let next_nodes = self.levels[j + 1].n();
                frontier = survivors.iter().flat_map(|&v| [2 * v, 2 * v + 1]).filter(|&c| c < next_nodes).collect();
            }
        }
        (survivors, trace)
    }
}

/// Number of nodes at level `l` for a universe of size `n` padded to
/// `2^depth`.
pub fn level_nodes(n: usize, depth: u32, l: u32) -> usize {
    let shift = depth - l;
    ((n - 1) >> shift) + 1
}

/// Exact mass of every level-`l` node.
pub fn level_masses(x: &[f64], depth: u32, l: u32) -> Vec<f64> {
    let mut m = vec![0.0; level_nodes(x.len(), depth, l)];
    for (i, &v) in x.iter().enumerate() {
        m[i >> (depth - l)] += v;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{gen_zipf_with_deletions, StreamMode};

    #[test]
    fn sizes_match_formulas() {
        let c = CmConstants::default();
        let s = cm_sizes(1 << 16, 0.05, 1e-3, &c);
        assert_eq!(s.buckets, 400);
        assert_eq!(s.independence, 600);
        assert_eq!(s.list_size, 620);
        let want = (5.0 * 3276.8f64.log2() + (0.05 * 1000f64.ln() / c.c_delta).ceil()).ceil() as usize;
        assert_eq!(s.rows, want);
        assert_eq!(s.rows, 60);
    }

    #[test]
    fn delta_term_shrinks_to_one_row() {
        let c = CmConstants::default();
        let near_one = cm_sizes(1 << 16, 0.05, 1.0 - 1e-12, &c);
        assert_eq!(near_one.rows, (5.0 * 3276.8f64.log2()).ceil() as usize);
        assert_eq!(cm_sizes_ln(1 << 16, 0.05, 0.0, 1, &c).rows, (5.0 * 3276.8f64.log2()).ceil() as usize);
    }

    #[test]
    fn unit_constants_by_hand() {
        let s = cm_sizes(64, 0.25, 0.5, &CmConstants::uniform_value(1.0));
        assert_eq!(s.rows, 4 + 1);
        assert_eq!(s.buckets, 4);
        assert_eq!(s.independence, 4);
        assert_eq!(s.list_size, 8);
    }

    #[test]
    fn rejects_bad_parameters() {
        let c = CmConstants::default();
        assert!(CountMinG3::new(100, 0.6, 0.1, c, 1).is_err());
        assert!(CountMinG3::new(100, 0.1, 1.0, c, 1).is_err());
        assert!(CountMinG3::new(10, 0.1, 0.1, c, 1).is_err());
        let s = CountMinG3::new(100, 0.1, 0.1, c, 1).unwrap();
        assert!(s.point_estimate(100).is_err());
    }

    #[test]
    fn uniform_variant_has_more_rows() {
        let c = CmConstants::default();
        let plain = CountMinG3::new(1 << 12, 0.1, 0.01, c, 1).unwrap();
        let uni = CountMinG3::uniform(1 << 12, 0.1, c, 1).unwrap();
        assert!(uni.rows() > plain.rows());
        let ln = uniform_ln_inv_delta(1 << 12, 0.1);
        assert!((ln - ln_binomial(4096, 10)).abs() < 1e-12);
    }

    fn injective(n: usize) -> CountMinG3 {
        let sizes = CmSizes { rows: 1, buckets: n, independence: 2, list_size: 3 };
        let mut s = CountMinG3::with_sizes(n, 0.5, sizes, 0).unwrap();
        s.hashes[0] = PolyHash::from_coefficients(PrimeField::default(), vec![0, 1], n as u64, n as u64).unwrap();
        s
    }

    #[test]
    fn injective_hash_is_exact() {
        let mut s = injective(16);
        s.update(3, 7.0).unwrap();
        assert_eq!(s.point_estimate(3).unwrap(), 7.0);
        s.update(3, 2.0).unwrap();
        assert_eq!(s.point_estimate(3).unwrap(), 9.0);
        assert_eq!(s.query()[0], 3);
    }

    #[test]
    fn single_bucket_sees_total_mass() {
        let sizes = CmSizes { rows: 1, buckets: 1, independence: 3, list_size: 2 };
        let mut s = CountMinG3::with_sizes(32, 0.5, sizes, 5).unwrap();
        s.update(1, 3.0).unwrap();
        s.update(30, 4.0).unwrap();
        for i in 0..32 {
            assert_eq!(s.point_estimate(i).unwrap(), 7.0);
        }
    }

    #[test]
    fn zero_stream_estimates_zero() {
        let s = CountMinG3::new(256, 0.1, 0.1, CmConstants::default(), 3).unwrap();
        assert!((0..256).all(|i| s.point_estimate(i).unwrap() == 0.0));
    }

    #[test]
    fn counters_match_exact_sums_and_overestimate() {
        let stream = gen_zipf_with_deletions(64, 1.0, 2000, StreamMode::Strict, 0.3, 9).unwrap();
        let x = stream.materialize().unwrap();
        let mut s = CountMinG3::new(64, 0.25, 0.1, CmConstants::default(), 4).unwrap();
        s.ingest(&stream).unwrap();
        for r in 0..s.rows() {
            let mut sums = vec![0.0; s.buckets()];
            for (i, &v) in x.iter().enumerate() {
                sums[s.hash(r).eval(i as u64).unwrap() as usize] += v;
            }
            for (bk, &want) in sums.iter().enumerate() {
                assert_eq!(s.counter(r, bk), want);
            }
        }
        for (i, &v) in x.iter().enumerate() {
            assert!(s.point_estimate(i).unwrap() >= v);
        }
    }

    #[test]
    fn ingest_equals_single_updates() {
        let stream = gen_zipf_with_deletions(500, 1.1, 3000, StreamMode::Strict, 0.2, 2).unwrap();
        let mut a = CountMinG3::new(500, 0.1, 0.05, CmConstants::default(), 8).unwrap();
        let mut b = a.clone();
        a.ingest(&stream).unwrap();
        for u in &stream.updates {
            b.update(u.index, u.delta).unwrap();
        }
        assert_eq!(a.counters(), b.counters());
    }

    fn brute_top(s: &CountMinG3, cands: &[usize]) -> Vec<usize> {
        let mut v: Vec<(usize, f64)> = cands.iter().map(|&i| (i, s.point_estimate(i).unwrap())).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.truncate(s.list_len(cands.len()));
        v.into_iter().map(|p| p.0).collect()
    }

    #[test]
    fn pruned_query_equals_brute_force() {
        for seed in 0..4 {
            let stream = gen_zipf_with_deletions(3000, 1.1, 4000, StreamMode::Strict, 0.2, seed).unwrap();
            let mut s = CountMinG3::new(3000, 0.2, 0.05, CmConstants::default(), seed + 10).unwrap();
            s.ingest(&stream).unwrap();
            let all: Vec<usize> = (0..3000).collect();
            assert_eq!(s.query(), brute_top(&s, &all));
            let p: Vec<usize> = (0..3000).step_by(7).collect();
            assert_eq!(s.query_promise(&p).unwrap(), brute_top(&s, &p));
            let est = s.all_estimates();
            assert!(all.iter().all(|&i| est[i] == s.point_estimate(i).unwrap()));
        }
    }

    #[test]
    fn query_is_sorted_and_dominates_rest() {
        let stream = gen_zipf_with_deletions(2000, 1.1, 3000, StreamMode::Strict, 0.2, 5).unwrap();
        let mut s = CountMinG3::new(2000, 0.2, 0.05, CmConstants::default(), 6).unwrap();
        s.ingest(&stream).unwrap();
        let q = s.query_with_estimates();
        assert_eq!(q.len(), 155);
        assert!(q.windows(2).all(|w| w[0].1 >= w[1].1));
        let min_in = q.last().unwrap().1;
        let chosen: std::collections::HashSet<usize> = q.iter().map(|p| p.0).collect();
        assert!((0..2000).filter(|i| !chosen.contains(i)).all(|i| s.point_estimate(i).unwrap() <= min_in));
    }

    #[test]
    fn list_covers_universe_when_large() {
        let s = CountMinG3::new(40, 0.05, 0.1, CmConstants::default(), 1).unwrap();
        let mut q = s.query();
        q.sort_unstable();
        assert_eq!(q, (0..40).collect::<Vec<_>>());
    }

    #[test]
    fn promise_with_heavy_set_returns_it() {
        let mut s = CountMinG3::promise(1000, 8, 0.25, 0.1, CmConstants::default(), 2).unwrap();
        for (j, i) in [5usize, 77, 300, 999].iter().enumerate() {
            s.update(*i, 10.0 + j as f64).unwrap();
        }
        let mut q = s.query_promise(&[5, 77, 300, 999]).unwrap();
        q.sort_unstable();
        assert_eq!(q, vec![5, 77, 300, 999]);
    }

    #[test]
    fn dyadic_single_heavy_item() {
        let mut d = DyadicG3::new(1 << 12, 0.25, 0.1, CmConstants::default(), 3).unwrap();
        d.update(2749, 50.0).unwrap();
        let (out, trace) = d.query_traced();
        assert!(out.contains(&2749));
        assert!(trace.iter().all(|t| t.frontier <= 2 * d.width()));
    }

    #[test]
    fn dyadic_counters_match_node_masses() {
        let n = 1 << 11;
        let stream = gen_zipf_with_deletions(n, 1.1, 3000, StreamMode::Strict, 0.2, 7).unwrap();
        let x = stream.materialize().unwrap();
        let mut d = DyadicG3::new(n, 0.25, 0.1, CmConstants::default(), 3).unwrap();
        d.ingest(&stream).unwrap();
        let depth = 11;
        for (l, s) in d.levels() {
            let masses = level_masses(&x, depth, l);
            if l < depth {
                let child = level_masses(&x, depth, l + 1);
                for (v, &m) in masses.iter().enumerate() {
                    let kids = child[2 * v] + child.get(2 * v + 1).copied().unwrap_or(0.0);
                    assert_eq!(m, kids);
                }
            }
            for r in 0..s.rows() {
                let mut sums = vec![0.0; s.buckets()];
                for (v, &m) in masses.iter().enumerate() {
                    sums[s.hash(r).eval(v as u64).unwrap() as usize] += m;
                }
                assert!((0..s.buckets()).all(|b| s.counter(r, b) == sums[b]));
            }
        }
    }
}
