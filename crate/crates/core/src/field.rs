//! Prime-field arithmetic and t-wise independent hash families built from
//! random polynomials.
//!
//! The default field is F_p with p = 2^61 - 1, which keeps the bias of the
//! final `mod B` reduction below 2^-40 for every range used in this crate.

use std::ops::Range;

use rand::Rng as _;

use crate::error::{invalid, Error, Result};
use crate::util::{rng, Rng};

/// The Mersenne prime 2^61 - 1.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// A prime field F_p with `p < 2^62`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u64,
}

impl Default for PrimeField {
    fn default() -> Self {
        Self::mersenne61()
    }
}

impl PrimeField {
    pub const fn mersenne61() -> Self {
        Self { p: MERSENNE_61 }
    }

    /// Builds F_p after checking that `p` is prime.
    pub fn new(p: u64) -> Result<Self> {
        if p >= 1 << 62 {
            return invalid(format!("modulus {p} must be below 2^62"));
        }
        if !is_prime(p) {
            return invalid(format!("modulus {p} is not prime"));
        }
        Ok(Self { p })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x % self.p
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        let prod = a as u128 * b as u128;
        if self.p == MERSENNE_61 {
            let lo = (prod as u64) & MERSENNE_61;
            let hi = (prod >> 61) as u64;
            self.add(lo, hi)
        } else {
            (prod % self.p as u128) as u64
        }
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a nonzero element.
    pub fn inv(&self, a: u64) -> u64 {
        assert!(a % self.p != 0, "zero has no inverse");
        self.pow(a, self.p - 2)
    }

    pub fn random_element(&self, rng: &mut Rng) -> u64 {
        rng.random_range(0..self.p)
    }
}

/// Deterministic Miller-Rabin, exact for every 64-bit input.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &q in &SMALL {
        if n % q == 0 {
            return n == q;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &SMALL {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A hash `h : [n] -> [B]` given by a random polynomial of degree `t - 1`
/// over F_p, followed by reduction modulo `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyHash {
    field: PrimeField,
    coeffs: Vec<u64>,
    domain: u64,
    range: u64,
}

impl PolyHash {
    /// Draws a fresh t-wise independent hash over the default field.
    pub fn new(t: usize, n: u64, range: u64, seed: u64) -> Result<Self> {
        Self::with_rng(PrimeField::default(), t, n, range, &mut rng(seed))
    }

    pub fn with_rng(field: PrimeField, t: usize, n: u64, range: u64, rng: &mut Rng) -> Result<Self> {
        check_params(&field, t, n, range)?;
        let coeffs = (0..t).map(|_| field.random_element(rng)).collect();
        Ok(Self { field, coeffs, domain: n, range })
    }

    /// Builds a hash from explicit coefficients, lowest degree first.
    pub fn from_coefficients(field: PrimeField, coeffs: Vec<u64>, n: u64, range: u64) -> Result<Self> {
        check_params(&field, coeffs.len(), n, range)?;
        let coeffs = coeffs.into_iter().map(|c| field.reduce(c)).collect();
        Ok(Self { field, coeffs, domain: n, range })
    }

    pub fn independence(&self) -> usize {
        self.coeffs.len()
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    pub fn range(&self) -> u64 {
        self.range
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coeffs
    }

    /// Polynomial value in F_p before the range reduction.
    #[inline]
    pub fn poly_value(&self, x: u64) -> u64 {
        let f = &self.field;
        let x = f.reduce(x);
        self.coeffs.iter().rev().fold(0, |acc, &c| f.add(f.mul(acc, x), c))
    }

    /// Polynomial values at many points, written to `out`.
    ///
    /// Points below 2^32 on the default field go through a lane-parallel
    /// Horner scheme that only needs 32x32-bit products.
    pub fn poly_values(&self, xs: &[u64], out: &mut [u64]) {
        assert_eq!(xs.len(), out.len());
        if self.field.modulus() == MERSENNE_61 && xs.iter().all(|&x| x < 1 << 32) {
            horner::run(&self.coeffs, xs, out);
        } else {
            for (o, &x) in out.iter_mut().zip(xs) {
                *o = self.poly_value(x);
            }
        }
    }

    /// Buckets of arbitrary (unchecked) points.
    pub(crate) fn buckets_of(&self, xs: &[u64], out: &mut [u64]) {
        self.poly_values(xs, out);
        for o in out.iter_mut() {
            *o %= self.range;
        }
    }

    pub fn eval(&self, i: u64) -> Result<u64> {
        if i >= self.domain {
            return Err(Error::IndexOutOfRange { index: i, n: self.domain });
        }
        Ok(self.eval_unchecked(i))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, i: u64) -> u64 {
        self.poly_value(i) % self.range
    }

    /// Buckets of every point in a contiguous range.
    ///
    /// Long ranges are evaluated with a forward-difference table: after an
    /// O(t^2) setup each further point costs t - 1 field additions.
    pub fn multipoint_eval(&self, points: Range<u64>) -> Result<Vec<u64>> {
        if points.start >= points.end {
            return Ok(Vec::new());
        }
        if points.end > self.domain {
            return Err(Error::IndexOutOfRange { index: points.end - 1, n: self.domain });
        }
        let mut out = Vec::with_capacity((points.end - points.start) as usize);
        self.for_each_value(points, |v| out.push(v % self.range));
        Ok(out)
    }

    /// Bucket table for the whole domain, stored compactly.
    pub fn table(&self) -> Vec<u32> {
        assert!(self.range <= u32::MAX as u64 + 1);
        let mut out = Vec::with_capacity(self.domain as usize);
        self.for_each_value(0..self.domain, |v| out.push((v % self.range) as u32));
        out
    }

    fn for_each_value(&self, points: Range<u64>, mut emit: impl FnMut(u64)) {
        let len = points.end - points.start;
        let t = self.coeffs.len() as u64;
        if len <= 4 * t || t == 1 {
            for x in points {
                emit(self.poly_value(x));
            }
            return;
        }
        let f = self.field;
        let d = self.coeffs.len() - 1;
        let mut diff: Vec<u64> = (0..=d as u64).map(|j| self.poly_value(points.start + j)).collect();
        for order in 1..=d {
            for j in (order..=d).rev() {
                diff[j] = f.sub(diff[j], diff[j - 1]);
            }
        }
        let p = f.modulus();
        if p == MERSENNE_61 {
            stepper::run_mersenne(&mut diff, len, |v| emit(if v >= p { v - p } else { v }));
        } else {
            for _ in 0..len {
                emit(diff[0]);
                step_differences(&mut diff, p);
            }
        }
    }
}

/// Advances a forward-difference table by one point: `D[j] += D[j+1]`.
#[inline]
fn step_differences(diff: &mut [u64], p: u64) {
    let d = diff.len() - 1;
    for j in 0..d {
        let s = diff[j] + diff[j + 1];
        diff[j] = if s >= p { s - p } else { s };
    }
}

/// Horner evaluation over F_(2^61 - 1) for points below 2^32, eight
/// independent points per pass.
mod horner {
    use super::MERSENNE_61 as P;

    const LANES: usize = 16;
    const LO32: u64 = 0xFFFF_FFFF;
    const LO29: u64 = (1 << 29) - 1;

    #[inline(always)]
    fn fold(s: u64) -> u64 {
        (s & P) + (s >> 61)
    }

    #[inline(always)]
    fn chunk(coeffs: &[u64], x: &[u64; LANES]) -> [u64; LANES] {
        let mut acc = [0u64; LANES];
        for &c in coeffs.iter().rev() {
            for l in 0..LANES {
                let xl = x[l] & LO32;
                let m_lo = (acc[l] & LO32) * xl;
                let m_hi = (acc[l] >> 32) * xl;
                let r_hi = ((m_hi & LO29) << 32) + (m_hi >> 29);
                acc[l] = fold(fold(m_lo) + r_hi + c);
            }
        }
        for a in acc.iter_mut() {
            while *a >= P {
                *a -= P;
            }
        }
        acc
    }

    #[inline(always)]
    fn run_generic(coeffs: &[u64], xs: &[u64], out: &mut [u64]) {
        let mut xc = xs.chunks_exact(LANES);
        let mut oc = out.chunks_exact_mut(LANES);
        for (x, o) in (&mut xc).zip(&mut oc) {
            o.copy_from_slice(&chunk(coeffs, x.try_into().unwrap()));
        }
        let rest = xc.remainder();
        if !rest.is_empty() {
            let mut x = [0u64; LANES];
            x[..rest.len()].copy_from_slice(rest);
            let v = chunk(coeffs, &x);
            let o = oc.into_remainder();
            o.copy_from_slice(&v[..o.len()]);
        }
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn run_avx2(coeffs: &[u64], xs: &[u64], out: &mut [u64]) {
        run_generic(coeffs, xs, out)
    }

    pub(super) fn run(coeffs: &[u64], xs: &[u64], out: &mut [u64]) {
        #[cfg(target_arch = "x86_64")]
        {
            if std::is_x86_feature_detected!("avx2") {
                // SAFETY: the CPU supports AVX2, checked just above.
                unsafe { run_avx2(coeffs, xs, out) };
                return;
            }
        }
        run_generic(coeffs, xs, out)
    }
}

/// Forward differences over F_(2^61 - 1) with entries kept in `[0, p]`
/// (`p` standing for zero), so that one step is a branch-free
/// add / mask / shift per entry.
mod stepper {
    use super::MERSENNE_61 as P;

    #[inline(always)]
    fn step(diff: &mut [u64]) {
        let d = diff.len() - 1;
        let mut j = 0;
        while j + 4 <= d {
            let a: [u64; 4] = diff[j..j + 4].try_into().unwrap();
            let b: [u64; 4] = diff[j + 1..j + 5].try_into().unwrap();
            for l in 0..4 {
                let s = a[l] + b[l];
                diff[j + l] = (s & P) + (s >> 61);
            }
            j += 4;
        }
        while j < d {
            let s = diff[j] + diff[j + 1];
            diff[j] = (s & P) + (s >> 61);
            j += 1;
        }
    }

    #[inline(always)]
    fn run_generic(diff: &mut [u64], len: u64, emit: &mut impl FnMut(u64)) {
        for _ in 0..len {
            emit(diff[0]);
            step(diff);
        }
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn run_avx2(diff: &mut [u64], len: u64, emit: &mut impl FnMut(u64)) {
        run_generic(diff, len, emit)
    }

    pub(super) fn run_mersenne(diff: &mut [u64], len: u64, mut emit: impl FnMut(u64)) {
        #[cfg(target_arch = "x86_64")]
        {
            if std::is_x86_feature_detected!("avx2") {
                // SAFETY: the CPU supports AVX2, checked just above.
                unsafe { run_avx2(diff, len, &mut emit) };
                return;
            }
        }
        run_generic(diff, len, &mut emit)
    }
}

fn check_params(field: &PrimeField, t: usize, n: u64, range: u64) -> Result<()> {
    if t == 0 {
        return invalid("independence t must be at least 1");
    }
    if range == 0 {
        return invalid("hash range B must be at least 1");
    }
    if n > field.modulus() {
        return invalid(format!("domain size {n} exceeds field size {}", field.modulus()));
    }
    Ok(())
}

/// `make_hash(t, n, B, seed)`: a t-wise independent hash on the default field.
pub fn make_hash(t: usize, n: u64, range: u64, seed: u64) -> Result<PolyHash> {
    PolyHash::new(t, n, range, seed)
}

/// Random signs derived from a range-2 polynomial hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignHash {
    inner: PolyHash,
}

impl SignHash {
    pub fn new(t: usize, n: u64, seed: u64) -> Result<Self> {
        Ok(Self { inner: PolyHash::new(t, n, 2, seed)? })
    }

    pub fn with_rng(t: usize, n: u64, rng: &mut Rng) -> Result<Self> {
        Ok(Self { inner: PolyHash::with_rng(PrimeField::default(), t, n, 2, rng)? })
    }

    pub fn from_hash(inner: PolyHash) -> Result<Self> {
        if inner.range() != 2 {
            return invalid("sign hash needs an underlying range of 2");
        }
        Ok(Self { inner })
    }

    pub fn hash(&self) -> &PolyHash {
        &self.inner
    }

    pub fn sign(&self, i: u64) -> Result<i8> {
        Ok(to_sign(self.inner.eval(i)?))
    }

    #[inline]
    pub(crate) fn sign_f64(&self, i: u64) -> f64 {
        if self.inner.eval_unchecked(i) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Signs for the whole domain as `+1.0` / `-1.0`.
    pub fn table(&self) -> Vec<f64> {
        self.inner.table().into_iter().map(|b| if b == 0 { 1.0 } else { -1.0 }).collect()
    }
}

fn to_sign(bucket: u64) -> i8 {
    if bucket == 0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mersenne_mul_matches_u128() {
        let f = PrimeField::mersenne61();
        let mut r = rng(1);
        for _ in 0..10_000 {
            let a = f.random_element(&mut r);
            let b = f.random_element(&mut r);
            let want = ((a as u128 * b as u128) % MERSENNE_61 as u128) as u64;
            assert_eq!(f.mul(a, b), want);
        }
        assert_eq!(f.mul(MERSENNE_61 - 1, MERSENNE_61 - 1), 1);
    }

    #[test]
    fn primality() {
        assert!(is_prime(MERSENNE_61));
        assert!(is_prime(5) && is_prime(7) && is_prime(13));
        assert!(!is_prime(1) && !is_prime(9) && !is_prime(561));
        assert!(PrimeField::new(8).is_err());
    }

    #[test]
    fn inverse_roundtrip() {
        let f = PrimeField::new(13).unwrap();
        for a in 1..13 {
            assert_eq!(f.mul(a, f.inv(a)), 1);
        }
    }

    #[test]
    fn constant_hash() {
        let h = PolyHash::from_coefficients(PrimeField::default(), vec![3], 100, 8).unwrap();
        for i in 0..100 {
            assert_eq!(h.eval(i).unwrap(), 3);
        }
    }

    #[test]
    fn identity_hash() {
        let h = PolyHash::from_coefficients(PrimeField::default(), vec![0, 1], 10, 4).unwrap();
        assert_eq!(h.eval(5).unwrap(), 1);
        let id = PolyHash::from_coefficients(PrimeField::default(), vec![0, 1], 8, 8).unwrap();
        assert_eq!(id.multipoint_eval(0..8).unwrap(), (0..8).collect::<Vec<_>>());
        assert!(id.multipoint_eval(3..3).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_hash(0, 10, 4, 1).is_err());
        assert!(make_hash(2, 10, 0, 1).is_err());
        assert!(make_hash(2, MERSENNE_61 + 1, 4, 1).is_err());
        let h = make_hash(2, 10, 4, 1).unwrap();
        assert_eq!(h.eval(10), Err(Error::IndexOutOfRange { index: 10, n: 10 }));
        assert!(h.multipoint_eval(5..11).is_err());
    }

    #[test]
    fn pairwise_uniform_over_f5() {
        let f = PrimeField::new(5).unwrap();
        let mut counts = [[0u32; 5]; 5];
        for c0 in 0..5 {
            for c1 in 0..5 {
                let h = PolyHash::from_coefficients(f, vec![c0, c1], 5, 5).unwrap();
                counts[h.eval(0).unwrap() as usize][h.eval(1).unwrap() as usize] += 1;
            }
        }
        assert!(counts.iter().flatten().all(|&c| c == 1));
    }

    #[test]
    fn degree_29_matches_power_sum() {
        let h = make_hash(30, 1 << 20, 1000, 7).unwrap();
        let f = h.field();
        for i in [0u64, 1, 2, 999, 123_456, (1 << 20) - 1] {
            let direct = h
                .coefficients()
                .iter()
                .enumerate()
                .fold(0, |acc, (j, &c)| f.add(acc, f.mul(c, f.pow(i, j as u64))));
            assert_eq!(h.eval(i).unwrap(), direct % 1000);
        }
    }

    #[test]
    fn multipoint_matches_pointwise() {
        for (t, seed) in [(1, 1), (2, 2), (7, 3), (64, 4)] {
            let h = make_hash(t, 5000, 97, seed).unwrap();
            let fast = h.multipoint_eval(0..1000).unwrap();
            let slow: Vec<u64> = (0..1000).map(|i| h.eval(i).unwrap()).collect();
            assert_eq!(fast, slow);
            let off = h.multipoint_eval(3777..5000).unwrap();
            assert!(off.iter().zip(3777..).all(|(&b, i)| b == h.eval(i).unwrap()));
        }
    }

    #[test]
    fn batched_values_match_horner() {
        let h = make_hash(600, 1 << 32, 400, 11).unwrap();
        let xs: Vec<u64> = (0..37u64).map(|i| i * 0x0F0F_1234 % (1 << 32)).chain([0, (1 << 32) - 1]).collect();
        let mut out = vec![0; xs.len()];
        h.poly_values(&xs, &mut out);
        for (&x, &v) in xs.iter().zip(&out) {
            assert_eq!(v, h.poly_value(x));
        }
    }

    #[test]
    fn signs_are_plus_minus_one() {
        let s = SignHash::new(2, 100, 9).unwrap();
        let table = s.table();
        for i in 0..100 {
            let v = s.sign(i).unwrap();
            assert!(v == 1 || v == -1);
            assert_eq!(v as f64, table[i as usize]);
        }
    }
}
