//! Small numeric helpers shared by the sketches and the harness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator used for every seeded construction in the crate.
pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One step of the splitmix64 sequence; returns the new state and its output.
pub fn splitmix64(state: u64) -> (u64, u64) {
    let s = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = s;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (s, z ^ (z >> 31))
}

/// Mixes several words into one seed.
pub fn mix(words: &[u64]) -> u64 {
    let mut state = 0x243F_6A88_85A3_08D3u64;
    let mut out = 0;
    for &w in words {
        let (s, o) = splitmix64(state ^ w);
        state = s;
        out = o;
    }
    out
}

/// Standard Gaussian that is a pure function of `key` (Box-Muller on two
/// hashed uniforms).
pub fn keyed_gaussian(key: &[u64]) -> f64 {
    let (s, a) = splitmix64(mix(key));
    let (_, b) = splitmix64(s);
    let u1 = ((a >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Lower median: the element of rank `(len - 1) / 2`. Reorders the slice.
pub fn lower_median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mid = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    *m
}

pub fn log2_pos(x: f64) -> f64 {
    if x <= 1.0 {
        0.0
    } else {
        x.log2()
    }
}

/// Indices of the `k` largest scores, ties broken toward the lower index,
/// returned in descending score order.
pub fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let cmp = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k, cmp);
        idx.truncate(k);
    }
    idx.sort_by(cmp);
    idx
}

/// Same as [`top_k_indices`] for `(index, score)` pairs.
pub fn top_k_pairs(mut pairs: Vec<(usize, f64)>, k: usize) -> Vec<(usize, f64)> {
    let cmp = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if k < pairs.len() {
        pairs.select_nth_unstable_by(k, cmp);
        pairs.truncate(k);
    }
    pairs.sort_by(cmp);
    pairs
}

/// Natural log of the binomial coefficient C(n, k).
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|j| ((n - j) as f64).ln() - ((j + 1) as f64).ln()).sum()
}

pub fn norm2_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyed_gaussian_moments() {
        let v: Vec<f64> = (0..200_000u64).map(|i| keyed_gaussian(&[7, i])).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.02);
        assert_eq!(keyed_gaussian(&[1, 2]), keyed_gaussian(&[1, 2]));
    }

    #[test]
    fn lower_median_of_even_length() {
        assert_eq!(lower_median(&mut [4.0, 1.0, 3.0, 2.0]), 2.0);
        assert_eq!(lower_median(&mut [5.0]), 5.0);
        assert_eq!(lower_median(&mut [3.0, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn top_k_breaks_ties_by_index() {
        assert_eq!(top_k_indices(&[1.0, 3.0, 3.0, 2.0], 2), vec![1, 2]);
        assert_eq!(top_k_indices(&[1.0, 1.0, 1.0], 2), vec![0, 1]);
        assert_eq!(top_k_indices(&[1.0, 2.0], 5), vec![1, 0]);
    }

    #[test]
    fn ln_binomial_small_values() {
        assert!((ln_binomial(10, 3).exp() - 120.0).abs() < 1e-9);
        assert_eq!(ln_binomial(5, 0), 0.0);
        assert_eq!(ln_binomial(3, 5), f64::NEG_INFINITY);
    }

    #[test]
    fn splitmix_known_first_output() {
        // First output of splitmix64 seeded with 0.
        assert_eq!(splitmix64(0).1, 0xE220_A839_7B1D_CDAF);
    }
}
