//! Weak identification by bucketing plus per-bucket b-tree search, and the
//! weak ℓ2/ℓ2 system that pairs it with Count-Sketch estimation.

use std::fmt;
use std::sync::Arc;

use crate::count_min::ceil_tol;
use crate::error::{invalid, Error, Result};
use crate::field::{PolyHash, PrimeField, SignHash};
use crate::l2::{CountSketchEst, CsConstants};
use crate::stream::head_tail;
use crate::util::{lower_median, mix, rng};

/// Constants of the identification matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdConstants {
    pub c_r: f64,
    pub c_b: f64,
    /// Buckets whose preimage has at least `c_0·n/B` elements are big.
    pub c_0: f64,
    /// Branching factor of the per-bucket tree.
    pub branching: usize,
    /// Independent signed sums per tree level; the estimator is their
    /// median.
    pub sign_reps: usize,
    /// Independence of the bucket hash.
    pub independence: usize,
}

impl Default for IdConstants {
    fn default() -> Self {
        Self { c_r: 6.0, c_b: 24.0, c_0: 8.0, branching: 2, sign_reps: 3, independence: 8 }
    }
}

/// Measurements of one bucket's b-tree: for every sign repetition the
/// signed total and, per level, the signed sums of the ranks whose digit at
/// that level is `1..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BTreeIdentifier {
    pub branching: usize,
    pub levels: usize,
    pub sign_reps: usize,
}

impl BTreeIdentifier {
    /// Tree over a sub-universe of at most `universe` elements.
    pub fn new(universe: usize, branching: usize, sign_reps: usize) -> Result<Self> {
        if branching < 2 || sign_reps == 0 || universe == 0 {
            return invalid("need branching >= 2, sign_reps >= 1, nonempty universe");
        }
        let mut levels = 0;
        let mut cap = 1usize;
        while cap < universe {
            cap = cap.saturating_mul(branching);
            levels += 1;
        }
        Ok(Self { branching, levels, sign_reps })
    }

    /// Measurements per sign repetition.
    pub fn slots(&self) -> usize {
        1 + self.levels * (self.branching - 1)
    }

    pub fn measurements(&self) -> usize {
        self.sign_reps * self.slots()
    }

    /// Digit of `rank` at `level`, most significant first.
    #[inline]
    pub fn digit(&self, rank: usize, level: usize) -> usize {
        let shift = self.levels - 1 - level;
        (rank / self.branching.pow(shift as u32)) % self.branching
    }

    /// Adds `delta·sign` for an element of rank `rank` into the bucket's
    /// measurement block of sign repetition `s`.
    #[inline]
    pub fn add(&self, rank: usize, s: usize, signed: f64, block: &mut [f64]) {
        let base = s * self.slots();
        block[base] += signed;
        for l in 0..self.levels {
            let d = self.digit(rank, l);
            if d > 0 {
                block[base + 1 + l * (self.branching - 1) + d - 1] += signed;
            }
        }
    }

    /// Descends the tree: at each level keeps the child digit whose
    /// median-of-|signed sums| is largest. Returns the leaf rank, or `None`
    /// when every measurement is zero.
    pub fn identify(&self, block: &[f64]) -> Option<usize> {
        if block.iter().all(|&v| v == 0.0) {
            return None;
        }
        let slots = self.slots();
        let b = self.branching;
        let mut rank = 0;
        let mut vals = vec![0.0; self.sign_reps];
        for l in 0..self.levels {
            let mut best = (f64::NEG_INFINITY, 0);
            for d in 0..b {
                for (s, v) in vals.iter_mut().enumerate() {
                    let base = s * slots;
                    let lvl = &block[base + 1 + l * (b - 1)..base + 1 + (l + 1) * (b - 1)];
                    *v = if d == 0 { block[base] - lvl.iter().sum::<f64>() } else { lvl[d - 1] };
                    *v = v.abs();
                }
                let m = lower_median(&mut vals);
                if m > best.0 {
                    best = (m, d);
                }
            }
            rank = rank * b + best.1;
        }
        Some(rank)
    }
}

/// Identification half of a weak system: a linear measurement matrix and a
/// decoder returning candidate indices.
pub trait Identification: fmt::Debug + Send + Sync {
    fn rows(&self) -> usize;
    /// Adds `delta` times column `i` to `y`.
    fn add_column(&self, i: usize, delta: f64, y: &mut [f64]);
    fn identify(&self, y: &[f64]) -> Result<Vec<usize>>;
    /// Largest number of candidates `identify` can return.
    fn max_output(&self) -> usize;
}

impl Identification for WeakIdMatrix {
    fn rows(&self) -> usize {
        WeakIdMatrix::rows(self)
    }

    fn add_column(&self, i: usize, delta: f64, y: &mut [f64]) {
        WeakIdMatrix::add_column(self, i, delta, y)
    }

    fn identify(&self, y: &[f64]) -> Result<Vec<usize>> {
        WeakIdMatrix::identify(self, y)
    }

    fn max_output(&self) -> usize {
        2 * self.buckets
    }
}

/// `(k, c_1)`-weak identification matrix: `R` repetitions of hashing `[n]`
/// into `B` buckets, a b-tree per bucket, and a vote over repetitions.
#[derive(Debug, Clone)]
pub struct WeakIdMatrix {
    n: usize,
    reps: usize,
    buckets: usize,
    tree: BTreeIdentifier,
    bucket_of: Vec<Vec<u32>>,
    rank_of: Vec<Vec<u32>>,
    preimages: Vec<Vec<Vec<u32>>>,
    big: Vec<Vec<bool>>,
    signs: Vec<Vec<Vec<f64>>>,
}

impl WeakIdMatrix {
    /// `R = ⌈c_R·max(1, ⌈log2(1/δ)/k⌉)⌉`, `B = ⌈c_B·k/ε⌉`.
    pub fn new(n: usize, k: usize, eps: f64, delta: f64, c: IdConstants, seed: u64) -> Result<Self> {
        if n == 0 || k == 0 || k > n || !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
            return invalid("need 1 <= k <= n, eps in (0,1), delta in (0,1)");
        }
        let reps = ceil_tol(c.c_r * ceil_tol((1.0 / delta).log2() / k as f64).max(1) as f64).max(1);
        let buckets = ceil_tol(c.c_b * k as f64 / eps).max(1);
        Self::with_sizes(n, reps, buckets, c, seed)
    }

    pub fn with_sizes(n: usize, reps: usize, buckets: usize, c: IdConstants, seed: u64) -> Result<Self> {
        if n == 0 || reps == 0 || buckets == 0 || c.independence == 0 {
            return invalid("sizes must be positive");
        }
        let cutoff = c.c_0 * n as f64 / buckets as f64;
        let tree = BTreeIdentifier::new(cutoff.ceil().max(1.0) as usize, c.branching, c.sign_reps)?;
        let mut r = rng(seed);
        let mut bucket_of = Vec::with_capacity(reps);
        let mut rank_of = Vec::with_capacity(reps);
        let mut preimages = Vec::with_capacity(reps);
        let mut big = Vec::with_capacity(reps);
        let mut signs = Vec::with_capacity(reps);
        for _ in 0..reps {
            let h = PolyHash::with_rng(PrimeField::default(), c.independence, n as u64, buckets as u64, &mut r)?;
            let table = h.table();
            let mut pre = vec![Vec::new(); buckets];
            let mut ranks = vec![0u32; n];
            for (i, &b) in table.iter().enumerate() {
                ranks[i] = pre[b as usize].len() as u32;
                pre[b as usize].push(i as u32);
            }
            big.push(pre.iter().map(|p| p.len() as f64 >= cutoff).collect());
            let s = (0..c.sign_reps)
                .map(|_| SignHash::with_rng(2, n as u64, &mut r).map(|sh| sh.table()))
                .collect::<Result<Vec<_>>>()?;
            signs.push(s);
            bucket_of.push(table);
            rank_of.push(ranks);
            preimages.push(pre);
        }
        Ok(Self { n, reps, buckets, tree, bucket_of, rank_of, preimages, big, signs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reps(&self) -> usize {
        self.reps
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn tree(&self) -> BTreeIdentifier {
        self.tree
    }

    /// Total rows, `R·B·(tree measurements)`; big buckets keep their rows.
    pub fn rows(&self) -> usize {
        self.reps * self.buckets * self.tree.measurements()
    }

    pub fn is_big(&self, rep: usize, bucket: usize) -> bool {
        self.big[rep][bucket]
    }

    pub fn bucket_of(&self, rep: usize, i: usize) -> usize {
        self.bucket_of[rep][i] as usize
    }

    pub fn preimage(&self, rep: usize, bucket: usize) -> &[u32] {
        &self.preimages[rep][bucket]
    }

    fn block_range(&self, rep: usize, bucket: usize) -> std::ops::Range<usize> {
        let m = self.tree.measurements();
        let start = (rep * self.buckets + bucket) * m;
        start..start + m
    }

    pub fn add_column(&self, i: usize, delta: f64, y: &mut [f64]) {
        for rep in 0..self.reps {
            let b = self.bucket_of[rep][i] as usize;
            let rank = self.rank_of[rep][i] as usize;
            let range = self.block_range(rep, b);
            let block = &mut y[range];
            for s in 0..self.tree.sign_reps {
                self.tree.add(rank, s, self.signs[rep][s][i] * delta, block);
            }
        }
    }

    pub fn measure(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return invalid("vector length differs from n");
        }
        let mut y = vec![0.0; self.rows()];
        for (i, &v) in x.iter().enumerate() {
            if v != 0.0 {
                self.add_column(i, v, &mut y);
            }
        }
        Ok(y)
    }

    /// Coordinate found in one bucket, if any; big buckets yield nothing.
    pub fn identify_bucket(&self, y: &[f64], rep: usize, bucket: usize) -> Option<usize> {
        if self.big[rep][bucket] {
            return None;
        }
        let pre = &self.preimages[rep][bucket];
        if pre.is_empty() {
            return None;
        }
        let rank = self.tree.identify(&y[self.block_range(rep, bucket)])?;
        pre.get(rank).map(|&i| i as usize)
    }

    /// Indices found in at least `R/2` repetitions, in increasing order.
    pub fn identify(&self, y: &[f64]) -> Result<Vec<usize>> {
        if y.len() != self.rows() {
            return invalid("wrong number of measurements");
        }
        let mut votes: std::collections::BTreeMap<usize, usize> = Default::default();
        for rep in 0..self.reps {
            for b in 0..self.buckets {
                if let Some(i) = self.identify_bucket(y, rep, b) {
                    *votes.entry(i).or_insert(0) += 1;
                }
            }
        }
        Ok(votes.into_iter().filter(|&(_, v)| 2 * v >= self.reps).map(|(i, _)| i).collect())
    }
}

/// Constants of the weak system: identification and estimation parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WeakConstants {
    pub id: IdConstants,
    pub est: CsConstants,
}

impl WeakConstants {
    /// Smallest constants that still give a working system; these keep a
    /// stack of weak systems within a small multiple of `(k/ε)·log(n/(εk))`
    /// rows.
    pub fn lean() -> Self {
        Self {
            id: IdConstants { c_r: 1.0, c_b: 1.0, c_0: 8.0, branching: 2, sign_reps: 1, independence: 8 },
            est: CsConstants { c_b: 1.0, c_t: 1.0, c_r: 1.6, zeta: 0.5 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakParams {
    pub k: usize,
    pub zeta: f64,
    pub eps: f64,
    pub delta: f64,
}

/// A `(k, ζ, ε)` weak ℓ2/ℓ2 system: identification matrix stacked on a
/// Count-Sketch estimation matrix. Measurement vectors are laid out as the
/// identification rows followed by the estimation rows.
#[derive(Debug, Clone)]
pub struct WeakSystem {
    n: usize,
    params: WeakParams,
    parts: Option<(Arc<dyn Identification>, CountSketchEst)>,
}

/// Recovered sparse approximation with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakSystemOutput {
    /// `(index, value)` pairs sorted by index, at most `k` of them.
    pub approx: Vec<(usize, f64)>,
    pub candidates: usize,
    pub measurements: usize,
}

impl WeakSystem {
    pub fn new(n: usize, params: WeakParams, c: WeakConstants, seed: u64) -> Result<Self> {
        if !(params.zeta > 0.0 && params.zeta < 1.0) {
            return invalid("zeta must lie in (0,1)");
        }
        if params.k > n {
            return invalid("k must not exceed n");
        }
        if params.k == 0 {
            return Ok(Self { n, params, parts: None });
        }
        let id = WeakIdMatrix::new(n, params.k, params.eps, params.delta / 2.0, c.id, mix(&[seed, 1]))?;
        Self::with_identification(n, params, Arc::new(id), c.est, seed)
    }

    /// Weak system around any identification scheme.
    pub fn with_identification(
        n: usize,
        params: WeakParams,
        id: Arc<dyn Identification>,
        est: CsConstants,
        seed: u64,
    ) -> Result<Self> {
        if params.k == 0 || params.k > n {
            return invalid("need 1 <= k <= n");
        }
        let mut est = CountSketchEst::new(n, params.k, params.eps, params.delta / 2.0, est, mix(&[seed, 2]))?;
        est.set_candidate_limit(id.max_output());
        Ok(Self { n, params, parts: Some((id, est)) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> WeakParams {
        self.params
    }

    pub fn id_rows(&self) -> usize {
        self.parts.as_ref().map_or(0, |(id, _)| id.rows())
    }

    pub fn rows(&self) -> usize {
        self.parts.as_ref().map_or(0, |(id, est)| id.rows() + est.measurements())
    }

    pub fn identification(&self) -> Option<&dyn Identification> {
        self.parts.as_ref().map(|p| p.0.as_ref())
    }

    pub fn estimation(&self) -> Option<&CountSketchEst> {
        self.parts.as_ref().map(|p| &p.1)
    }

    pub fn add_column(&self, i: usize, delta: f64, y: &mut [f64]) {
        if let Some((id, est)) = &self.parts {
            let (a, b) = y.split_at_mut(id.rows());
            id.add_column(i, delta, a);
            est.add_column(i, delta, b);
        }
    }

    pub fn measure(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return invalid("vector length differs from n");
        }
        let mut y = vec![0.0; self.rows()];
        for (i, &v) in x.iter().enumerate() {
            if v != 0.0 {
                self.add_column(i, v, &mut y);
            }
        }
        Ok(y)
    }

    /// Identification, estimation of the candidates, truncation to the `k`
    /// largest estimates (ties toward the lower index, zeros dropped).
    pub fn recover(&self, y: &[f64]) -> Result<WeakSystemOutput> {
        if y.len() != self.rows() {
            return Err(Error::InvalidParameter(format!("expected {} measurements, got {}", self.rows(), y.len())));
        }
        let Some((id, est)) = &self.parts else {
            return Ok(WeakSystemOutput { approx: Vec::new(), candidates: 0, measurements: 0 });
        };
        let (yi, ye) = y.split_at(id.rows());
        let cands = id.identify(yi)?;
        let estimates: Vec<(usize, f64)> = cands.iter().map(|&i| (i, est.estimate_with(ye, i))).collect();
        let mut keep: Vec<(usize, f64)> = crate::util::top_k_pairs(
            estimates.iter().map(|&(i, v)| (i, v.abs())).collect(),
            self.params.k,
        )
        .into_iter()
        .filter(|p| p.1 > 0.0)
        .map(|(i, _)| (i, est.estimate_with(ye, i)))
        .collect();
        keep.sort_by_key(|p| p.0);
        Ok(WeakSystemOutput { approx: keep, candidates: cands.len(), measurements: self.rows() })
    }
}

/// Smallest number of residual entries that must be assigned to `ŷ` so the
/// rest has energy at most `(1+η)‖x_{−k}‖²`, removing the largest residual
/// magnitudes first.
pub fn residual_head_count(x: &[f64], approx: &[(usize, f64)], k: usize, eta: f64) -> usize {
    let mut e = x.to_vec();
    for &(i, v) in approx {
        e[i] -= v;
    }
    let budget = (1.0 + eta) * head_tail(x, k).tail_l2_sq();
    let mut sq: Vec<f64> = e.iter().map(|v| v * v).collect();
    sq.sort_by(|a, b| b.total_cmp(a));
    let mut rest: f64 = sq.iter().sum();
    let mut count = 0;
    for v in sq {
        if rest <= budget * (1.0 + 1e-12) {
            break;
        }
        rest -= v;
        count += 1;
    }
    count
}

/// Convenience wrapper: builds a weak system, measures `x` and recovers.
pub fn weak_recover(x: &[f64], params: WeakParams, c: WeakConstants, seed: u64) -> Result<WeakSystemOutput> {
    let sys = WeakSystem::new(x.len(), params, c, seed)?;
    let y = sys.measure(x)?;
    sys.recover(&y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{gen_heads_over_noise, head_eps};
    use crate::util::rng;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    #[test]
    fn btree_shape() {
        let t = BTreeIdentifier::new(100, 2, 3).unwrap();
        assert_eq!(t.levels, 7);
        assert_eq!(t.slots(), 8);
        assert_eq!(t.digit(0b1011010, 0), 1);
        assert_eq!(t.digit(0b1011010, 6), 0);
        let t3 = BTreeIdentifier::new(27, 3, 1).unwrap();
        assert_eq!(t3.levels, 3);
        assert_eq!(t3.slots(), 7);
    }

    #[test]
    fn btree_finds_lone_element() {
        for b in [2, 3, 4] {
            let t = BTreeIdentifier::new(50, b, 3).unwrap();
            for rank in 0..50 {
                let mut block = vec![0.0; t.measurements()];
                for s in 0..3 {
                    t.add(rank, s, if s == 1 { -2.5 } else { 2.5 }, &mut block);
                }
                assert_eq!(t.identify(&block), Some(rank));
            }
            assert_eq!(t.identify(&vec![0.0; t.measurements()]), None);
        }
    }

    #[test]
    fn btree_with_five_times_noise_energy() {
        let t = BTreeIdentifier::new(256, 2, 3).unwrap();
        let mut r = rng(11);
        let mut ok = 0;
        for _ in 0..1000 {
            let head = r.random_range(0..256);
            let noise: Vec<f64> = (0..256).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
            let noise_energy: f64 = noise.iter().enumerate().filter(|p| p.0 != head).map(|p| p.1 * p.1).sum();
            let mut block = vec![0.0; t.measurements()];
            for s in 0..3 {
                let signs: Vec<f64> = (0..256).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect();
                for i in 0..256 {
                    let v = if i == head { (5.0 * noise_energy).sqrt() } else { noise[i] };
                    t.add(i, s, signs[i] * v, &mut block);
                }
            }
            if t.identify(&block) == Some(head) {
                ok += 1;
            }
        }
        assert!(ok >= 900, "{ok}");
    }

    #[test]
    fn id_matrix_layout_and_big_buckets() {
        let c = IdConstants { c_0: 1.0, ..IdConstants::default() };
        let m = WeakIdMatrix::with_sizes(1000, 2, 10, c, 3).unwrap();
        assert_eq!(m.rows(), 2 * 10 * m.tree().measurements());
        for rep in 0..2 {
            let total: usize = (0..10).map(|b| m.preimage(rep, b).len()).sum();
            assert_eq!(total, 1000);
            for b in 0..10 {
                assert_eq!(m.is_big(rep, b), m.preimage(rep, b).len() >= 100);
            }
        }
        let mut x = vec![0.0; 1000];
        for rep in 0..2 {
            if let Some(b) = (0..10).find(|&b| m.is_big(rep, b)) {
                x[m.preimage(rep, b)[0] as usize] = 5.0;
                let y = m.measure(&x).unwrap();
                assert_eq!(m.identify_bucket(&y, rep, b), None);
                x.iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }

    #[test]
    fn id_measurements_recompute_from_vector() {
        let x = gen_heads_over_noise(2000, 5, 3.0, 0.05, 9);
        let m = WeakIdMatrix::new(2000, 5, 0.25, 0.1, IdConstants::default(), 4).unwrap();
        let y = m.measure(&x).unwrap();
        let mut z = vec![0.0; m.rows()];
        for (i, &v) in x.iter().enumerate() {
            m.add_column(i, v * 0.5, &mut z);
            m.add_column(i, v * 0.5, &mut z);
        }
        assert!(y.iter().zip(&z).all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0)));
    }

    #[test]
    fn id_finds_sparse_support() {
        let mut ok = 0;
        for seed in 0..50 {
            let x = gen_heads_over_noise(1 << 12, 8, 1.0, 0.0, seed);
            let m = WeakIdMatrix::new(1 << 12, 8, 0.05, 0.05, IdConstants::default(), seed + 100).unwrap();
            let found = m.identify(&m.measure(&x).unwrap()).unwrap();
            assert!(found.len() <= 2 * m.buckets());
            if (0..x.len()).filter(|&i| x[i] != 0.0).all(|i| found.binary_search(&i).is_ok()) {
                ok += 1;
            }
        }
        assert!(ok >= 49);
    }

    #[test]
    fn vote_threshold_excludes_rare_indices() {
        let c = IdConstants::default();
        let m = WeakIdMatrix::with_sizes(64, 4, 8, c, 1).unwrap();
        let mut x = vec![0.0; 64];
        x[7] = 1.0;
        let mut y = m.measure(&x).unwrap();
        for rep in 1..4 {
            let b = m.bucket_of(rep, 7);
            let range = m.block_range(rep, b);
            y[range].iter_mut().for_each(|v| *v = 0.0);
        }
        assert!(m.identify(&y).unwrap().is_empty());
    }

    #[test]
    fn weak_system_exact_on_sparse_inputs() {
        let params = WeakParams { k: 8, zeta: 1.0 / 3.0, eps: 0.25, delta: 0.05 };
        let mut exact = 0;
        for seed in 0..20 {
            let x = gen_heads_over_noise(1 << 11, 8, 1.0, 0.0, seed);
            let out = weak_recover(&x, params, WeakConstants::default(), seed).unwrap();
            assert!(out.approx.len() <= 8);
            let mut r = x.clone();
            for &(i, v) in &out.approx {
                r[i] -= v;
            }
            if r.iter().all(|v| v.abs() <= 1e-9) {
                exact += 1;
            }
        }
        assert!(exact >= 19);
    }

    #[test]
    fn weak_system_zero_k() {
        let params = WeakParams { k: 0, zeta: 0.5, eps: 0.25, delta: 0.05 };
        let out = weak_recover(&[1.0, 2.0, 3.0], params, WeakConstants::default(), 1).unwrap();
        assert!(out.approx.is_empty());
    }

    #[test]
    fn weak_system_noisy_inputs() {
        let params = WeakParams { k: 16, zeta: 1.0 / 3.0, eps: 0.2, delta: 0.05 };
        let mut ok = 0;
        for seed in 0..20 {
            let x = gen_heads_over_noise(1 << 12, 16, 1.0, 1.0 / 64.0, seed);
            let out = weak_recover(&x, params, WeakConstants::default(), seed).unwrap();
            if residual_head_count(&x, &out.approx, 16, 1.0) as f64 <= params.zeta * 16.0 {
                ok += 1;
            }
            assert!(head_eps(&x, 16, 0.2).len() >= 1);
        }
        assert!(ok >= 18);
    }

    #[test]
    fn residual_count_oracle() {
        let x = vec![5.0, 4.0, 0.1, 0.1];
        assert_eq!(residual_head_count(&x, &[], 2, 0.0), 2);
        assert_eq!(residual_head_count(&x, &[(0, 5.0)], 2, 0.0), 1);
        assert_eq!(residual_head_count(&x, &[(0, 5.0), (1, 4.0)], 2, 0.0), 0);
    }
}
