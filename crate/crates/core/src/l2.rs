//! Count-Sketch style ℓ2 machinery: the estimation sketch, the
//! Gaussian-median heavy-hitter sketch and the partition sketch.

use crate::count_min::ceil_tol;
use crate::error::{invalid, Error, Result};
use crate::field::{PolyHash, PrimeField, SignHash};
use crate::stream::{head_tail, TurnstileStream};
use crate::util::{keyed_gaussian, lower_median, mix, rng, top_k_indices, top_k_pairs};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsConstants {
    pub c_b: f64,
    pub c_t: f64,
    pub c_r: f64,
    pub zeta: f64,
}

impl Default for CsConstants {
    fn default() -> Self {
        Self { c_b: 16.0, c_t: 2.0, c_r: 8.0, zeta: 0.5 }
    }
}

/// Count-Sketch with pairwise bucket hashes and pairwise signs.
#[derive(Debug, Clone)]
pub struct CountSketchEst {
    n: usize,
    buckets: usize,
    rows: usize,
    candidate_limit: usize,
    hashes: Vec<PolyHash>,
    signs: Vec<SignHash>,
    counters: Vec<f64>,
}

impl CountSketchEst {
    /// `B = ⌈c_B(c_T+1)k/ε⌉`, `R = ⌈c_R(log2(1/ε) + log2(1/δ)/k)⌉`.
    pub fn new(n: usize, k: usize, eps: f64, delta: f64, c: CsConstants, seed: u64) -> Result<Self> {
        if k == 0 || !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
            return invalid("need k >= 1, eps in (0,1), delta in (0,1)");
        }
        let buckets = ceil_tol(c.c_b * (c.c_t + 1.0) * k as f64 / eps);
        let rows = ceil_tol(c.c_r * ((1.0 / eps).log2() + (1.0 / delta).log2() / k as f64)).max(1);
        let mut s = Self::with_sizes(n, buckets, rows, seed)?;
        s.candidate_limit = ceil_tol(c.c_t * k as f64 / eps);
        Ok(s)
    }

    pub fn with_sizes(n: usize, buckets: usize, rows: usize, seed: u64) -> Result<Self> {
        if n == 0 || buckets == 0 || rows == 0 {
            return invalid("n, buckets and rows must be positive");
        }
        let mut r = rng(seed);
        let field = PrimeField::default();
        let mut hashes = Vec::with_capacity(rows);
        let mut signs = Vec::with_capacity(rows);
        for _ in 0..rows {
            hashes.push(PolyHash::with_rng(field, 2, n as u64, buckets as u64, &mut r)?);
            signs.push(SignHash::with_rng(2, n as u64, &mut r)?);
        }
        Ok(Self { n, buckets, rows, candidate_limit: n, hashes, signs, counters: vec![0.0; rows * buckets] })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of linear measurements, `B·R`.
    pub fn measurements(&self) -> usize {
        self.buckets * self.rows
    }

    pub fn candidate_limit(&self) -> usize {
        self.candidate_limit
    }

    pub fn counters(&self) -> &[f64] {
        &self.counters
    }

    pub fn counters_mut(&mut self) -> &mut [f64] {
        &mut self.counters
    }

    /// Bucket and sign of coordinate `i` in repetition `r`.
    #[inline]
    pub fn cell(&self, r: usize, i: usize) -> (usize, f64) {
        (self.hashes[r].eval_unchecked(i as u64) as usize, self.signs[r].sign_f64(i as u64))
    }

    pub fn update(&mut self, i: usize, delta: f64) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i as u64, n: self.n as u64 });
        }
        let mut y = std::mem::take(&mut self.counters);
        self.add_column(i, delta, &mut y);
        self.counters = y;
        Ok(())
    }

    pub fn ingest(&mut self, stream: &TurnstileStream) -> Result<()> {
        stream.updates.iter().try_for_each(|u| self.update(u.index, u.delta))
    }

    /// Adds the measurements of a dense vector.
    pub fn measure(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return invalid("vector length differs from n");
        }
        for r in 0..self.rows {
            let row = &mut self.counters[r * self.buckets..(r + 1) * self.buckets];
            for (i, &v) in x.iter().enumerate() {
                if v != 0.0 {
                    let b = self.hashes[r].eval_unchecked(i as u64) as usize;
                    row[b] += self.signs[r].sign_f64(i as u64) * v;
                }
            }
        }
        Ok(())
    }

    /// Adds `delta` times column `i` of the measurement matrix to `y`.
    pub fn add_column(&self, i: usize, delta: f64, y: &mut [f64]) {
        for r in 0..self.rows {
            let (b, s) = self.cell(r, i);
            y[r * self.buckets + b] += s * delta;
        }
    }

    /// Lower median over repetitions of `σ_{i,r}·V_{h_r(i),r}`.
    pub fn estimate_one(&self, i: usize) -> f64 {
        self.estimate_with(&self.counters, i)
    }

    /// As [`estimate_one`](Self::estimate_one) with externally held
    /// measurement values.
    pub fn estimate_with(&self, y: &[f64], i: usize) -> f64 {
        let mut vals: Vec<f64> = (0..self.rows)
            .map(|r| {
                let (b, s) = self.cell(r, i);
                s * y[r * self.buckets + b]
            })
            .collect();
        lower_median(&mut vals)
    }

    pub(crate) fn set_candidate_limit(&mut self, limit: usize) {
        self.candidate_limit = limit;
    }

    /// Estimates over a candidate set of size at most `c_T·k/ε`.
    pub fn estimate(&self, t: &[usize]) -> Result<Vec<(usize, f64)>> {
        if t.len() > self.candidate_limit {
            return Err(Error::CandidateSetTooLarge { size: t.len(), limit: self.candidate_limit });
        }
        if let Some(&i) = t.iter().find(|&&i| i >= self.n) {
            return Err(Error::IndexOutOfRange { index: i as u64, n: self.n as u64 });
        }
        Ok(t.iter().map(|&i| (i, self.estimate_one(i))).collect())
    }

    /// Estimates of every coordinate, ignoring the candidate-size limit.
    pub fn estimate_all(&self) -> Vec<f64> {
        let mut per_row = vec![0.0; self.rows * self.n];
        for r in 0..self.rows {
            let row = &self.counters[r * self.buckets..(r + 1) * self.buckets];
            let b = self.hashes[r].table();
            let s = self.signs[r].table();
            for i in 0..self.n {
                per_row[i * self.rows + r] = s[i] * row[b[i] as usize];
            }
        }
        per_row.chunks_mut(self.rows).map(lower_median).collect()
    }
}

/// Members of `t` whose squared estimation error exceeds `ε/(16k)·‖x_{−k}‖²`.
pub fn bad_estimates(x: &[f64], estimates: &[(usize, f64)], k: usize, eps: f64) -> usize {
    let thr = eps / (16.0 * k as f64) * head_tail(x, k).tail_l2_sq();
    estimates.iter().filter(|&&(i, e)| (x[i] - e).powi(2) > thr).count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmConstants {
    pub c_d: f64,
    pub c_b: f64,
    pub c_l: f64,
}

impl Default for GmConstants {
    fn default() -> Self {
        let cs = CsConstants::default();
        Self { c_d: 8.0, c_b: cs.c_b, c_l: cs.c_t + 1.0 }
    }
}

/// ℓ2 heavy-hitter sketch: `d` rows of `B` buckets, each coordinate scaled
/// by an independent standard Gaussian per row.
#[derive(Debug, Clone)]
pub struct GaussianMedianSketch {
    n: usize,
    rows: usize,
    buckets: usize,
    list_len: usize,
    gauss_seed: u64,
    hashes: Vec<PolyHash>,
    y: Vec<f64>,
}

impl GaussianMedianSketch {
    /// `d = ⌈C_d·log2(εn)⌉`, `B = ⌈C_B/ε⌉`, list `⌈C_L·⌈1/ε⌉⌉`.
    pub fn new(n: usize, eps: f64, c: GmConstants, seed: u64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) || eps * (n as f64) < 2.0 {
            return invalid("need eps in (0,1) and eps*n >= 2");
        }
        let rows = ceil_tol(c.c_d * (eps * n as f64).log2()).max(1);
        let buckets = ceil_tol(c.c_b / eps).max(1);
        let list_len = ceil_tol(c.c_l * ceil_tol(1.0 / eps) as f64).min(n);
        let mut r = rng(seed);
        let hashes = (0..rows)
            .map(|_| PolyHash::with_rng(PrimeField::default(), 2, n as u64, buckets as u64, &mut r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, rows, buckets, list_len, gauss_seed: mix(&[seed, 0x6A55]), hashes, y: vec![0.0; rows * buckets] })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn measurements(&self) -> usize {
        self.rows * self.buckets
    }

    pub fn list_len(&self) -> usize {
        self.list_len
    }

    pub fn measurements_values(&self) -> &[f64] {
        &self.y
    }

    /// `g_{i,r}`, a pure function of the seed, `i` and `r`.
    pub fn coefficient(&self, i: usize, r: usize) -> f64 {
        keyed_gaussian(&[self.gauss_seed, i as u64, r as u64])
    }

    pub fn bucket(&self, r: usize, i: usize) -> usize {
        self.hashes[r].eval_unchecked(i as u64) as usize
    }

    pub fn update(&mut self, i: usize, delta: f64) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i as u64, n: self.n as u64 });
        }
        for r in 0..self.rows {
            let b = self.bucket(r, i);
            self.y[r * self.buckets + b] += self.coefficient(i, r) * delta;
        }
        Ok(())
    }

    pub fn ingest(&mut self, stream: &TurnstileStream) -> Result<()> {
        stream.updates.iter().try_for_each(|u| self.update(u.index, u.delta))
    }

    pub fn measure(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return invalid("vector length differs from n");
        }
        for (i, &v) in x.iter().enumerate() {
            if v != 0.0 {
                self.update(i, v)?;
            }
        }
        Ok(())
    }

    /// `x̂_i = median_r |y_{h_r(i),r}|` for every coordinate.
    pub fn estimates(&self) -> Vec<f64> {
        let mut per = vec![0.0; self.rows * self.n];
        for r in 0..self.rows {
            let row = &self.y[r * self.buckets..(r + 1) * self.buckets];
            for (i, &b) in self.hashes[r].table().iter().enumerate() {
                per[i * self.rows + r] = row[b as usize].abs();
            }
        }
        per.chunks_mut(self.rows).map(lower_median).collect()
    }

    /// The `C_L·⌈1/ε⌉` coordinates with the largest estimates.
    pub fn query(&self) -> Vec<usize> {
        top_k_indices(&self.estimates(), self.list_len)
    }
}

/// A partition of `[n]` into `U` nonempty classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    class_of: Vec<usize>,
    classes: usize,
}

impl Partition {
    pub fn new(class_of: Vec<usize>, classes: usize) -> Result<Self> {
        let n = class_of.len();
        if classes == 0 || n == 0 {
            return Err(Error::NotAPartition { n, reason: "empty universe or no classes".into() });
        }
        let mut seen = vec![false; classes];
        for &c in &class_of {
            if c >= classes {
                return Err(Error::NotAPartition { n, reason: format!("class label {c} is not below {classes}") });
            }
            seen[c] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::NotAPartition { n, reason: format!("class {c} is empty") });
        }
        Ok(Self { class_of, classes })
    }

    pub fn singletons(n: usize) -> Result<Self> {
        Self::new((0..n).collect(), n)
    }

    /// Classes `F_t = {i : class(i) = t}` given as member lists.
    pub fn from_classes(n: usize, classes: &[Vec<usize>]) -> Result<Self> {
        let mut class_of = vec![usize::MAX; n];
        for (t, members) in classes.iter().enumerate() {
            for &i in members {
                if i >= n || class_of[i] != usize::MAX {
                    return Err(Error::NotAPartition { n, reason: format!("index {i} missing from [n] or repeated") });
                }
                class_of[i] = t;
            }
        }
        if class_of.contains(&usize::MAX) {
            return Err(Error::NotAPartition { n, reason: "classes do not cover [n]".into() });
        }
        Self::new(class_of, classes.len())
    }

    pub fn n(&self) -> usize {
        self.class_of.len()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn class_of(&self, i: usize) -> usize {
        self.class_of[i]
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.classes];
        for (i, &c) in self.class_of.iter().enumerate() {
            m[c].push(i);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionConstants {
    /// Buckets per repetition are `⌈c_buckets·k/ε⌉`.
    pub c_buckets: f64,
    /// The output keeps `⌈c_list·k⌉` classes.
    pub c_list: f64,
}

impl Default for PartitionConstants {
    fn default() -> Self {
        Self { c_buckets: 4.0, c_list: 4.0 }
    }
}

/// Count-Sketch over the classes of a partition, with `⌈log2 U⌉`
/// repetitions.
#[derive(Debug, Clone)]
pub struct PartitionSketch {
    partition: Partition,
    k: usize,
    buckets: usize,
    rows: usize,
    list_len: usize,
    class_hashes: Vec<PolyHash>,
    signs: Vec<SignHash>,
    y: Vec<f64>,
}

impl PartitionSketch {
    pub fn new(partition: Partition, k: usize, eps: f64, c: PartitionConstants, seed: u64) -> Result<Self> {
        if k == 0 || !(eps > 0.0 && eps <= 1.0) {
            return invalid("need k >= 1 and eps in (0,1]");
        }
        let u = partition.classes();
        let rows = ceil_tol((u as f64).log2()).max(1);
        let buckets = ceil_tol(c.c_buckets * k as f64 / eps).max(1);
        let list_len = ceil_tol(c.c_list * k as f64).min(u);
        let mut r = rng(seed);
        let mut class_hashes = Vec::with_capacity(rows);
        let mut signs = Vec::with_capacity(rows);
        for _ in 0..rows {
            class_hashes.push(PolyHash::with_rng(PrimeField::default(), 2, u as u64, buckets as u64, &mut r)?);
            signs.push(SignHash::with_rng(2, partition.n() as u64, &mut r)?);
        }
        Ok(Self { partition, k, buckets, rows, list_len, class_hashes, signs, y: vec![0.0; rows * buckets] })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn measurements(&self) -> usize {
        self.rows * self.buckets
    }

    /// Measurement index (row-major) and sign of coordinate `i` in row `r`.
    pub fn cell(&self, r: usize, i: usize) -> (usize, f64) {
        let t = self.partition.class_of(i);
        let b = self.class_hashes[r].eval_unchecked(t as u64) as usize;
        (r * self.buckets + b, self.signs[r].sign_f64(i as u64))
    }

    pub fn update(&mut self, i: usize, delta: f64) -> Result<()> {
        let n = self.partition.n();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i as u64, n: n as u64 });
        }
        for r in 0..self.rows {
            let (m, s) = self.cell(r, i);
            self.y[m] += s * delta;
        }
        Ok(())
    }

    pub fn measure(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.partition.n() {
            return invalid("vector length differs from n");
        }
        for (i, &v) in x.iter().enumerate() {
            if v != 0.0 {
                self.update(i, v)?;
            }
        }
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Replaces the measurement values, e.g. with results obtained through
    /// an adaptive oracle.
    pub fn set_values(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.y.len() {
            return invalid("wrong number of measurement values");
        }
        self.y = values;
        Ok(())
    }

    /// `ẑ_t = median_r |y_{h_r(t),r}|` for every class.
    pub fn class_scores(&self) -> Vec<f64> {
        let u = self.partition.classes();
        let mut per = vec![0.0; u * self.rows];
        for t in 0..u {
            for r in 0..self.rows {
                let b = self.class_hashes[r].eval_unchecked(t as u64) as usize;
                per[t * self.rows + r] = self.y[r * self.buckets + b].abs();
            }
        }
        per.chunks_mut(self.rows).map(lower_median).collect()
    }

    /// The `⌈c_list·k⌉` classes with the largest scores.
    pub fn partition_hh(&self) -> Vec<usize> {
        let scores = self.class_scores();
        top_k_pairs(scores.into_iter().enumerate().collect(), self.list_len).into_iter().map(|p| p.0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::head_eps;
    use crate::util::rng;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    fn heads_over_noise(n: usize, k: usize, head: f64, seed: u64) -> Vec<f64> {
        let mut r = rng(seed);
        let mut x: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(StandardNormal) / (n as f64).sqrt()).collect();
        for j in 0..k {
            let i = r.random_range(0..n);
            x[i] = if j % 2 == 0 { head } else { -head };
        }
        x
    }

    #[test]
    fn cs_sizes() {
        let s = CountSketchEst::new(4096, 8, 0.25, 0.05, CsConstants::default(), 1).unwrap();
        assert_eq!(s.buckets(), 1536);
        assert_eq!(s.rows(), (8.0 * (2.0 + 20f64.log2() / 8.0)).ceil() as usize);
        assert_eq!(s.candidate_limit(), 64);
        let t: Vec<usize> = (0..65).collect();
        assert!(matches!(s.estimate(&t), Err(Error::CandidateSetTooLarge { .. })));
    }

    #[test]
    fn cs_isolated_spike_is_exact() {
        let mut s = CountSketchEst::with_sizes(16, 16, 3, 2).unwrap();
        for r in 0..3 {
            s.hashes[r] = PolyHash::from_coefficients(PrimeField::default(), vec![0, 1], 16, 16).unwrap();
        }
        s.update(5, 4.5).unwrap();
        assert_eq!(s.estimate(&[5, 6]).unwrap(), vec![(5, 4.5), (6, 0.0)]);
    }

    #[test]
    fn cs_counters_are_signed_sums() {
        let x = heads_over_noise(500, 5, 3.0, 3);
        let mut s = CountSketchEst::with_sizes(500, 40, 5, 9).unwrap();
        s.measure(&x).unwrap();
        let mut t = CountSketchEst::with_sizes(500, 40, 5, 9).unwrap();
        for (i, &v) in x.iter().enumerate() {
            t.update(i, v).unwrap();
        }
        for r in 0..5 {
            let mut want = vec![0.0; 40];
            for (i, &v) in x.iter().enumerate() {
                let (b, sg) = s.cell(r, i);
                want[b] += sg * v;
            }
            for b in 0..40 {
                let got = s.counters()[r * 40 + b];
                assert!((got - want[b]).abs() <= 1e-9 * want[b].abs().max(1.0));
                assert!((t.counters()[r * 40 + b] - got).abs() <= 1e-9 * got.abs().max(1.0));
            }
        }
        let all = s.estimate_all();
        assert!((0..500).all(|i| all[i] == s.estimate_one(i)));
    }

    #[test]
    fn cs_zero_vector_and_sign_flip() {
        let s = CountSketchEst::new(256, 2, 0.25, 0.1, CsConstants::default(), 4).unwrap();
        assert!(s.estimate_all().iter().all(|&e| e == 0.0));
        let x = heads_over_noise(256, 3, 2.0, 5);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let mut a = s.clone();
        let mut b = s.clone();
        a.measure(&x).unwrap();
        b.measure(&neg).unwrap();
        assert!(a.counters().iter().zip(b.counters()).all(|(p, q)| *p == -*q));
    }

    #[test]
    fn cs_estimation_budget_mostly_met() {
        let mut failures = 0;
        for trial in 0..20 {
            let x = heads_over_noise(1 << 12, 8, 1.0, 100 + trial);
            let mut s = CountSketchEst::new(1 << 12, 8, 0.25, 0.05, CsConstants::default(), trial).unwrap();
            s.measure(&x).unwrap();
            let t = top_k_indices(&x.iter().map(|v| v.abs()).collect::<Vec<_>>(), 64);
            let est = s.estimate(&t).unwrap();
            if bad_estimates(&x, &est, 8, 0.25) > 4 {
                failures += 1;
            }
        }
        assert!(failures <= 2);
    }

    #[test]
    fn gm_single_spike_ranks_first() {
        let mut s = GaussianMedianSketch::new(1024, 0.1, GmConstants::default(), 2).unwrap();
        s.update(700, 3.0).unwrap();
        assert_eq!(s.query()[0], 700);
        assert_eq!(s.query().len(), 30);
    }

    #[test]
    fn gm_measurements_are_weighted_sums_and_sign_invariant() {
        let x = heads_over_noise(512, 4, 2.0, 8);
        let mut s = GaussianMedianSketch::new(512, 0.1, GmConstants::default(), 3).unwrap();
        let base = s.clone();
        s.measure(&x).unwrap();
        for r in 0..s.rows() {
            let mut want = vec![0.0; s.buckets()];
            for (i, &v) in x.iter().enumerate() {
                want[s.bucket(r, i)] += s.coefficient(i, r) * v;
            }
            for b in 0..s.buckets() {
                let got = s.measurements_values()[r * s.buckets() + b];
                assert!((got - want[b]).abs() <= 1e-9 * want[b].abs().max(1.0));
            }
        }
        let mut neg = base.clone();
        neg.measure(&x.iter().map(|v| -v).collect::<Vec<_>>()).unwrap();
        assert_eq!(neg.query(), s.query());
    }

    #[test]
    fn gm_contains_heavy_set_usually() {
        let mut hits = 0;
        for trial in 0..20 {
            let x = heads_over_noise(1 << 12, 5, 0.6, 40 + trial);
            let mut s = GaussianMedianSketch::new(1 << 12, 0.1, GmConstants::default(), trial).unwrap();
            s.measure(&x).unwrap();
            let q: std::collections::HashSet<usize> = s.query().into_iter().collect();
            if head_eps(&x, 10, 1.0).iter().all(|i| q.contains(i)) {
                hits += 1;
            }
        }
        assert!(hits >= 18);
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![0, 1, 3], 3).is_err());
        assert!(Partition::new(vec![0, 0, 2], 3).is_err());
        assert!(Partition::from_classes(4, &[vec![0, 1], vec![1, 2, 3]]).is_err());
        assert!(Partition::from_classes(4, &[vec![0, 1], vec![2]]).is_err());
        let p = Partition::from_classes(4, &[vec![0, 3], vec![1, 2]]).unwrap();
        assert_eq!(p.class_of(3), 0);
        assert_eq!(p.members(), vec![vec![0, 3], vec![1, 2]]);
    }

    #[test]
    fn partition_mass_in_one_class_ranks_first() {
        let classes: Vec<Vec<usize>> = (0..64).map(|t| (4 * t..4 * t + 4).collect()).collect();
        let p = Partition::from_classes(256, &classes).unwrap();
        let mut s = PartitionSketch::new(p, 2, 0.5, PartitionConstants::default(), 6).unwrap();
        s.update(41, 5.0).unwrap();
        assert_eq!(s.partition_hh()[0], 10);
    }

    #[test]
    fn partition_measurements_match_definition() {
        let x = heads_over_noise(256, 3, 2.0, 2);
        let p = Partition::new((0..256).map(|i| (i * 7) % 32).collect(), 32).unwrap();
        let mut s = PartitionSketch::new(p.clone(), 2, 0.5, PartitionConstants::default(), 1).unwrap();
        s.measure(&x).unwrap();
        let mut want = vec![0.0; s.measurements()];
        for r in 0..s.rows() {
            for (i, &v) in x.iter().enumerate() {
                let (m, sg) = s.cell(r, i);
                want[m] += sg * v;
            }
        }
        assert!(want.iter().zip(s.values()).all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0)));
    }

    #[test]
    fn partition_singletons_track_heavy_coordinates() {
        let x = heads_over_noise(256, 2, 5.0, 12);
        let mut s = PartitionSketch::new(Partition::singletons(256).unwrap(), 2, 0.5, PartitionConstants::default(), 3).unwrap();
        s.measure(&x).unwrap();
        let t = s.partition_hh();
        assert!(head_eps(&x, 2, 0.5).iter().all(|i| t.contains(i)));
    }
}
