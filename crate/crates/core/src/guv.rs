//! Guruswami-Umans-Vadhan expander over a prime field and the deterministic
//! strict-turnstile heavy-hitter scheme that runs Count-Min style queries on
//! its neighbourhoods.

use std::fmt;

use crate::count_min::ceil_tol;
use crate::error::{invalid, Error, Result};
use crate::field::is_prime;
use crate::stream::TurnstileStream;
use crate::util::{ln_binomial, top_k_pairs};

/// Largest number of right vertices stored densely.
pub const MAX_RIGHT_VERTICES: u64 = 10_000_000;
/// Largest number of left sets `verify_expansion` will enumerate.
pub const MAX_ENUMERATION: f64 = 1e7;

/// Polynomials over `F_q` as little-endian coefficient vectors.
mod poly {
    pub fn trim(mut p: Vec<u64>) -> Vec<u64> {
        while p.last() == Some(&0) {
            p.pop();
        }
        p
    }

    pub fn mul(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x * y) % q;
            }
        }
        trim(out)
    }

    /// Remainder modulo a monic polynomial.
    pub fn rem_monic(mut a: Vec<u64>, m: &[u64], q: u64) -> Vec<u64> {
        let d = m.len() - 1;
        while a.len() > d {
            let lead = a.pop().unwrap();
            if lead != 0 {
                let off = a.len() - d;
                for (j, &c) in m[..d].iter().enumerate() {
                    a[off + j] = (a[off + j] + q - lead * c % q) % q;
                }
            }
        }
        trim(a)
    }

    pub fn mulmod(a: &[u64], b: &[u64], m: &[u64], q: u64) -> Vec<u64> {
        rem_monic(mul(a, b, q), m, q)
    }

    pub fn powmod(base: &[u64], mut e: u64, m: &[u64], q: u64) -> Vec<u64> {
        let mut acc = vec![1u64];
        let mut b = rem_monic(base.to_vec(), m, q);
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(&acc, &b, m, q);
            }
            b = mulmod(&b, &b, m, q);
            e >>= 1;
        }
        rem_monic(acc, m, q)
    }

    pub fn eval(p: &[u64], y: u64, q: u64) -> u64 {
        p.iter().rev().fold(0, |acc, &c| (acc * y + c) % q)
    }
}

/// Monic polynomial of degree `d` whose lower coefficients are the base-`q`
/// digits of `code`.
fn monic_from_code(code: u64, d: usize, q: u64) -> Vec<u64> {
    let mut p = digits(code, d, q);
    p.push(1);
    p
}

fn digits(mut v: u64, len: usize, q: u64) -> Vec<u64> {
    (0..len)
        .map(|_| {
            let d = v % q;
            v /= q;
            d
        })
        .collect()
}

/// Irreducibility of a monic polynomial by exhaustive search for monic
/// factors of degree at most half its degree.
pub fn is_irreducible(e: &[u64], q: u64) -> bool {
    let a = e.len() - 1;
    if a == 0 {
        return false;
    }
    for d in 1..=a / 2 {
        for code in 0..q.pow(d as u32) {
            let g = monic_from_code(code, d, q);
            if poly::rem_monic(e.to_vec(), &g, q).is_empty() {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuvParams {
    q: u64,
    a: usize,
    c: usize,
    h: u64,
    e: Vec<u64>,
}

impl GuvParams {
    /// Parameters with an explicit monic modulus `e` (little-endian, length
    /// `a + 1`, leading coefficient 1).
    pub fn new(q: u64, a: usize, c: usize, h: u64, e: Vec<u64>) -> Result<Self> {
        if !is_prime(q) || q > u32::MAX as u64 {
            return invalid(format!("q = {q} must be a prime below 2^32"));
        }
        if a == 0 || c == 0 || h < 2 {
            return invalid("need a >= 1, c >= 1, h >= 2");
        }
        if e.len() != a + 1 || e[a] != 1 || e.iter().any(|&v| v >= q) {
            return invalid("E must be monic of degree a with coefficients in F_q");
        }
        if (a as f64 / 2.0) * (q as f64).log10() > 7.0 {
            return invalid("irreducibility check would be too large");
        }
        if !is_irreducible(&e, q) {
            return invalid("E is reducible");
        }
        let p = Self { q, a, c, h, e };
        if p.right_vertices_f64() > MAX_RIGHT_VERTICES as f64 {
            return invalid(format!("q^(c+1) exceeds {MAX_RIGHT_VERTICES}"));
        }
        Ok(p)
    }

    /// Uses the lexicographically first monic irreducible of degree `a`.
    pub fn with_first_irreducible(q: u64, a: usize, c: usize, h: u64) -> Result<Self> {
        if !is_prime(q) || a == 0 || (a as f64) * (q as f64).log10() > 9.0 {
            return invalid("need prime q and a small search space");
        }
        for code in 0..q.pow(a as u32) {
            let e = monic_from_code(code, a, q);
            if is_irreducible(&e, q) {
                return Self::new(q, a, c, h, e);
            }
        }
        invalid("no irreducible polynomial found")
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn h(&self) -> u64 {
        self.h
    }

    pub fn modulus_poly(&self) -> &[u64] {
        &self.e
    }

    /// Number of left vertices, `q^a`.
    pub fn left_vertices(&self) -> u64 {
        self.q.pow(self.a as u32)
    }

    /// Left degree `D = q`.
    pub fn degree(&self) -> usize {
        self.q as usize
    }

    fn right_vertices_f64(&self) -> f64 {
        (self.q as f64).powi(self.c as i32 + 1)
    }

    pub fn right_vertices(&self) -> u64 {
        self.q.pow(self.c as u32 + 1)
    }

    /// Set size `h^c` and expansion `q − ahc` guaranteed by the theorem.
    pub fn claimed_expansion(&self) -> (u64, i64) {
        let k = self.h.saturating_pow(self.c as u32);
        (k, self.q as i64 - (self.a as u64 * self.h * self.c as u64) as i64)
    }

    /// Coefficients of the left vertex with index `i`.
    pub fn left_poly(&self, i: u64) -> Vec<u64> {
        digits(i, self.a, self.q)
    }

    /// `f_j = f^{h^j} mod E` for `j < c`.
    pub fn folded(&self, f: &[u64]) -> Result<Vec<Vec<u64>>> {
        let f = poly::trim(f.to_vec());
        if f.len() > self.a {
            return Err(Error::DegreeViolation { degree: f.len() - 1, bound: self.a - 1 });
        }
        let mut out = Vec::with_capacity(self.c);
        let mut cur = poly::rem_monic(f, &self.e, self.q);
        for _ in 0..self.c {
            out.push(cur.clone());
            cur = poly::powmod(&cur, self.h, &self.e, self.q);
        }
        Ok(out)
    }

    /// `Γ(f, y) = (y, f_0(y), …, f_{c−1}(y))`.
    pub fn neighbor(&self, f: &[u64], y: u64) -> Result<Vec<u64>> {
        if y >= self.q {
            return invalid(format!("y = {y} is not in F_{}", self.q));
        }
        let folded = self.folded(f)?;
        let mut v = vec![y];
        v.extend(folded.iter().map(|p| poly::eval(p, y, self.q)));
        Ok(v)
    }

    /// Dense index of a right vertex `(y, v_0, …, v_{c−1})`.
    pub fn right_index(&self, v: &[u64]) -> usize {
        v.iter().rev().fold(0u64, |acc, &d| acc * self.q + d) as usize
    }

    /// Right-vertex indices of every neighbour of left vertex `i`, one per
    /// `y ∈ F_q`.
    pub fn neighbors(&self, i: u64) -> Vec<usize> {
        let folded = self.folded(&self.left_poly(i)).expect("left index has degree below a");
        (0..self.q)
            .map(|y| {
                let mut idx = 0u64;
                for p in folded.iter().rev() {
                    idx = idx * self.q + poly::eval(p, y, self.q);
                }
                (idx * self.q + y) as usize
            })
            .collect()
    }
}

impl fmt::Display for GuvParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q={} a={} c={} h={} E={:?}", self.q, self.a, self.c, self.h, self.e)
    }
}

/// Smallest prime `q` such that `q^a ≥ n` (with `a` minimal) and
/// `q − ahc ≥ (1 − ζ)q`, where `c = ⌈log_h K⌉`.
pub fn guv_params_for(n: u64, set_size: u64, zeta: f64, h: u64) -> Result<GuvParams> {
    if n < 2 || set_size == 0 || !(zeta > 0.0 && zeta < 1.0) || h < 2 {
        return invalid("need n >= 2, K >= 1, zeta in (0,1), h >= 2");
    }
    let mut c = 1usize;
    while h.saturating_pow(c as u32) < set_size {
        c += 1;
    }
    let mut q = 2u64;
    loop {
        if is_prime(q) {
            let mut a = 1usize;
            while (q as f64).powi(a as i32) < n as f64 {
                a += 1;
            }
            if (a as f64) * (h as f64) * (c as f64) <= zeta * q as f64 {
                return GuvParams::with_first_irreducible(q, a, c, h);
            }
        }
        q += 1;
        if (q as f64).powi(c as i32 + 1) > MAX_RIGHT_VERTICES as f64 {
            return invalid("no parameters within the counter budget");
        }
    }
}

/// Result of an exhaustive expansion check.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub passed: bool,
    pub sets_checked: u64,
    pub min_neighborhood: usize,
    pub witness: Option<Vec<usize>>,
}

/// Checks `|Γ(S)| ≥ required·K` for every left set of size exactly `K`.
pub fn verify_expansion(params: &GuvParams, set_size: usize, required: f64) -> Result<ExpansionReport> {
    let left = params.left_vertices() as usize;
    let lists: Vec<Vec<usize>> = (0..left as u64).map(|i| params.neighbors(i)).collect();
    verify_expansion_graph(&lists, params.right_vertices() as usize, set_size, required)
}

/// Exhaustive expansion check for an arbitrary graph given by adjacency
/// lists into `[0, right)`.
pub fn verify_expansion_graph(lists: &[Vec<usize>], right: usize, set_size: usize, required: f64) -> Result<ExpansionReport> {
    let left = lists.len();
    if set_size == 0 || set_size > left {
        return invalid("set size must lie in [1, left vertices]");
    }
    let count = ln_binomial(left as u64, set_size as u64).exp();
    if count > MAX_ENUMERATION * (1.0 + 1e-9) {
        return Err(Error::EnumerationTooLarge { count, limit: MAX_ENUMERATION });
    }
    let need = required * set_size as f64;
    let mut stamp = vec![0u64; right];
    let mut epoch = 0u64;
    let mut comb: Vec<usize> = (0..set_size).collect();
    let mut report = ExpansionReport { passed: true, sets_checked: 0, min_neighborhood: usize::MAX, witness: None };
    loop {
        epoch += 1;
        let mut size = 0;
        for &i in &comb {
            for &v in &lists[i] {
                if stamp[v] != epoch {
                    stamp[v] = epoch;
                    size += 1;
                }
            }
        }
        report.sets_checked += 1;
        report.min_neighborhood = report.min_neighborhood.min(size);
        if (size as f64) < need - 1e-9 {
            report.passed = false;
            report.witness = Some(comb.clone());
            return Ok(report);
        }
        let mut j = set_size;
        while j > 0 && comb[j - 1] == left - set_size + j - 1 {
            j -= 1;
        }
        if j == 0 {
            return Ok(report);
        }
        comb[j - 1] += 1;
        for t in j..set_size {
            comb[t] = comb[t - 1] + 1;
        }
    }
}

/// Deterministic heavy-hitter sketch over `[0, n)` with `n ≤ q^a`:
/// one counter per right vertex, point estimates by minimum over the
/// neighbourhood, and a list of the `⌈(c+1)/ε⌉` largest estimates.
#[derive(Debug, Clone)]
pub struct DetHHSketch {
    params: GuvParams,
    n: usize,
    eps: f64,
    c_list: f64,
    neighbors: Vec<Vec<u32>>,
    counters: Vec<f64>,
}

impl DetHHSketch {
    /// `zeta` is the expansion slack the graph has been certified for and
    /// `c_list` the constant `c` of the scheme; requires `2/(1−ζ) < c`.
    pub fn new(params: GuvParams, n: usize, eps: f64, zeta: f64, c_list: f64) -> Result<Self> {
        if n == 0 || n as u64 > params.left_vertices() {
            return invalid(format!("n = {n} must lie in [1, q^a]"));
        }
        if !(eps > 0.0 && eps <= 1.0) || !(zeta >= 0.0 && zeta < 1.0) {
            return invalid("need eps in (0,1] and zeta in [0,1)");
        }
        if 2.0 / (1.0 - zeta) >= c_list {
            return invalid(format!("need 2/(1-zeta) < c, got zeta={zeta}, c={c_list}"));
        }
        let neighbors = (0..n as u64).map(|i| params.neighbors(i).into_iter().map(|v| v as u32).collect()).collect();
        let counters = vec![0.0; params.right_vertices() as usize];
        Ok(Self { params, n, eps, c_list, neighbors, counters })
    }

    pub fn params(&self) -> &GuvParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Size of sets the graph must expand on, `⌈c/ε⌉`.
    pub fn required_set_size(&self) -> usize {
        ceil_tol(self.c_list / self.eps)
    }

    pub fn list_len(&self) -> usize {
        ceil_tol((self.c_list + 1.0) / self.eps).min(self.n)
    }

    pub fn counters(&self) -> &[f64] {
        &self.counters
    }

    pub fn neighbors_of(&self, i: usize) -> &[u32] {
        &self.neighbors[i]
    }

    pub fn update(&mut self, i: usize, delta: f64) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i as u64, n: self.n as u64 });
        }
        for &v in &self.neighbors[i] {
            self.counters[v as usize] += delta;
        }
        Ok(())
    }

    pub fn ingest(&mut self, stream: &TurnstileStream) -> Result<()> {
        stream.updates.iter().try_for_each(|u| self.update(u.index, u.delta))
    }

    pub fn point_estimate(&self, i: usize) -> Result<f64> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i as u64, n: self.n as u64 });
        }
        Ok(self.neighbors[i].iter().map(|&v| self.counters[v as usize]).fold(f64::INFINITY, f64::min))
    }

    pub fn query(&self) -> Vec<usize> {
        let pairs = (0..self.n).map(|i| (i, self.point_estimate(i).unwrap())).collect();
        top_k_pairs(pairs, self.list_len()).into_iter().map(|p| p.0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::exact_heavy_hitters;
    use crate::util::rng;
    use rand::Rng as _;

    #[test]
    fn reed_solomon_case() {
        let p = GuvParams::with_first_irreducible(5, 2, 1, 2).unwrap();
        assert_eq!(p.neighbor(&[2, 3], 1).unwrap(), vec![1, 0]);
        assert_eq!(p.neighbor(&[0, 0], 3).unwrap(), vec![3, 0]);
    }

    #[test]
    fn zero_polynomial_maps_to_zero_values() {
        let p = GuvParams::with_first_irreducible(7, 2, 3, 2).unwrap();
        for y in 0..7 {
            assert_eq!(p.neighbor(&[0, 0], y).unwrap(), vec![y, 0, 0, 0]);
        }
    }

    #[test]
    fn degree_and_modulus_checks() {
        let p = GuvParams::with_first_irreducible(5, 2, 2, 2).unwrap();
        assert!(matches!(p.neighbor(&[1, 1, 1], 0), Err(Error::DegreeViolation { .. })));
        assert!(GuvParams::new(5, 2, 1, 2, vec![0, 0, 1]).is_err());
        assert!(GuvParams::new(6, 1, 1, 2, vec![0, 1]).is_err());
        assert!(is_irreducible(&[2, 0, 1], 5));
        assert!(!is_irreducible(&[1, 0, 1], 5));
    }

    /// Expands `f^{h^j}` without intermediate reduction, reduces once and
    /// evaluates.
    fn slow_neighbor(p: &GuvParams, f: &[u64], y: u64) -> Vec<u64> {
        let q = p.q();
        let mut v = vec![y];
        for j in 0..p.c() {
            let e = p.h().pow(j as u32);
            let mut acc = vec![1u64];
            for _ in 0..e {
                acc = poly::mul(&acc, f, q);
            }
            let r = poly::rem_monic(acc, p.modulus_poly(), q);
            let mut value = 0;
            let mut y_pow = 1;
            for &c in &r {
                value = (value + c * y_pow) % q;
                y_pow = y_pow * y % q;
            }
            v.push(value);
        }
        v
    }

    #[test]
    fn neighbor_matches_slow_oracle() {
        let p = GuvParams::with_first_irreducible(5, 2, 2, 2).unwrap();
        for i in 0..25 {
            let f = p.left_poly(i);
            let fast = p.neighbors(i);
            for y in 0..5 {
                let v = p.neighbor(&f, y).unwrap();
                assert_eq!(v, slow_neighbor(&p, &f, y));
                assert_eq!(fast[y as usize], p.right_index(&v));
            }
        }
    }

    #[test]
    fn singletons_expand_fully() {
        let p = GuvParams::with_first_irreducible(5, 2, 2, 2).unwrap();
        let r = verify_expansion(&p, 1, 5.0).unwrap();
        assert!(r.passed);
        assert_eq!(r.min_neighborhood, 5);
    }

    #[test]
    fn constant_graph_fails_with_witness() {
        let lists = vec![vec![0, 1, 2]; 6];
        let r = verify_expansion_graph(&lists, 3, 2, 2.0).unwrap();
        assert!(!r.passed);
        assert_eq!(r.witness, Some(vec![0, 1]));
    }

    #[test]
    fn enumeration_guard() {
        let lists = vec![vec![0]; 1000];
        assert!(matches!(verify_expansion_graph(&lists, 1, 4, 1.0), Err(Error::EnumerationTooLarge { .. })));
    }

    #[test]
    fn theorem_bound_holds_on_tiny_graph() {
        let p = GuvParams::with_first_irreducible(11, 2, 2, 2).unwrap();
        let (k, expansion) = p.claimed_expansion();
        assert_eq!((k, expansion), (4, 3));
        let r = verify_expansion(&p, k as usize, expansion as f64).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn param_helper_meets_slack() {
        let p = guv_params_for(100, 3, 0.5, 2).unwrap();
        assert!(p.left_vertices() >= 100);
        assert!((p.a() as u64 * p.h() * p.c() as u64) as f64 <= 0.5 * p.q() as f64);
        assert!(p.h().pow(p.c() as u32) >= 3);
    }

    #[test]
    fn det_sketch_contains_heavy_hitters() {
        let p = GuvParams::with_first_irreducible(13, 2, 2, 2).unwrap();
        let zeta = 0.1;
        let mut s = DetHHSketch::new(p.clone(), 169, 0.75, zeta, 2.25).unwrap();
        assert_eq!(s.required_set_size(), 3);
        assert!(verify_expansion(&p, 3, (1.0 - zeta) * 13.0).unwrap().passed);
        let mut r = rng(4);
        for _ in 0..200 {
            let base = s.clone();
            let mut x = vec![0.0; 169];
            for _ in 0..r.random_range(1..20) {
                x[r.random_range(0..169)] += r.random_range(1..5) as f64;
            }
            let heavy = r.random_range(0..169);
            x[heavy] += x.iter().sum::<f64>() * 4.0;
            for (i, &v) in x.iter().enumerate() {
                if v != 0.0 {
                    s.update(i, v).unwrap();
                }
            }
            let q = s.query();
            for h in exact_heavy_hitters(&x, 0.75, 1) {
                assert!(q.contains(&h));
            }
            for i in 0..169 {
                assert!(s.point_estimate(i).unwrap() >= x[i]);
            }
            s = base;
        }
    }

    #[test]
    fn det_sketch_rejects_weak_constant() {
        let p = GuvParams::with_first_irreducible(13, 2, 2, 2).unwrap();
        assert!(DetHHSketch::new(p, 169, 0.5, 0.2, 2.5).is_err());
    }
}
