//! Exact Bernstein–Vazirani measurement sampling.
//!
//! Running the circuit on `f` and measuring the first register yields `w`
//! with probability `S_f(w)^2 = W(w)^2 / 4^m`. That distribution is
//! computed from the integer Walsh spectrum and sampled by drawing a
//! uniform integer below `4^m`, so no floating point is involved.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boolfn::{walsh_spectrum, BooleanComponent};
use crate::rng::Stream;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BvDistribution {
    m: u32,
    weights: Vec<u64>,
    // prefix[w] = weights[0] + ... + weights[w]
    prefix: Vec<u64>,
}

impl BvDistribution {
    pub fn m(&self) -> u32 {
        self.m
    }

    /// `weights[w] = W(w)^2`.
    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    /// Always `4^m`.
    pub fn total(&self) -> u64 {
        *self.prefix.last().expect("non-empty")
    }

    pub fn probability(&self, w: u32) -> f64 {
        self.weights[w as usize] as f64 / self.total() as f64
    }

    /// Outcome whose cumulative weight interval contains `r`, for
    /// `r < total()`.
    pub fn outcome_at(&self, r: u64) -> u32 {
        debug_assert!(r < self.total());
        self.prefix.partition_point(|&c| c <= r) as u32
    }
}

pub fn bv_distribution(f: &BooleanComponent) -> BvDistribution {
    let spectrum = walsh_spectrum(f);
    let weights: Vec<u64> = spectrum.coeffs().iter().map(|&c| (c as i64 * c as i64) as u64).collect();
    let prefix = weights
        .iter()
        .scan(0u64, |acc, &w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    BvDistribution { m: f.m(), weights, prefix }
}

/// One simulated run of the circuit.
pub fn bv_sample(dist: &BvDistribution, rng: &mut Stream) -> u32 {
    dist.outcome_at(rng.gen_range(0..dist.total()))
}

/// Outcomes of `p` runs, kept as a multiset in draw order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    m: u32,
    samples: Vec<u32>,
}

impl SampleSet {
    pub fn new(m: u32, samples: Vec<u32>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        if let Some(&w) = samples.iter().find(|&&w| (w as u64) >> m != 0) {
            return Err(Error::VectorTooWide { value: w as u64, bits: m });
        }
        Ok(SampleSet { m, samples })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn samples(&self) -> &[u32] {
        &self.samples
    }

    /// Number of runs.
    pub fn p(&self) -> usize {
        self.samples.len()
    }
}

pub fn bv_batch_from(dist: &BvDistribution, p: usize, rng: &mut Stream) -> Result<SampleSet> {
    if p == 0 {
        return Err(Error::ZeroRuns);
    }
    let samples = (0..p).map(|_| bv_sample(dist, rng)).collect();
    Ok(SampleSet { m: dist.m, samples })
}

pub fn bv_batch(f: &BooleanComponent, p: usize, rng: &mut Stream) -> Result<SampleSet> {
    if p == 0 {
        return Err(Error::ZeroRuns);
    }
    bv_batch_from(&bv_distribution(f), p, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::{fixture_sbox, linear_component, random_sbox};
    use crate::rng::stream;
    use proptest::prelude::*;

    #[test]
    fn linear_function_is_deterministic() {
        let f = linear_component(3, 5, 0).unwrap();
        let dist = bv_distribution(&f);
        assert_eq!(dist.weights(), &[0, 0, 0, 0, 0, 64, 0, 0]);
        let set = bv_batch(&f, 10, &mut stream(123)).unwrap();
        assert_eq!(set.samples(), &[5; 10]);
    }

    #[test]
    fn constant_function_always_yields_zero() {
        let one = BooleanComponent::new(2, vec![1; 4]).unwrap();
        let dist = bv_distribution(&one);
        assert_eq!(dist.weights(), &[16, 0, 0, 0]);
        let mut rng = stream(5);
        assert!((0..100).all(|_| bv_sample(&dist, &mut rng) == 0));
    }

    #[test]
    fn bent_distribution_is_uniform() {
        let bent = fixture_sbox("bent4").unwrap().component(1).unwrap();
        let dist = bv_distribution(&bent);
        assert_eq!(dist.weights(), &[16; 16]);
        assert_eq!(dist.total(), 256);
    }

    #[test]
    fn bent_sampling_is_close_to_uniform() {
        let bent = fixture_sbox("bent4").unwrap().component(1).unwrap();
        let set = bv_batch(&bent, 100_000, &mut stream(42)).unwrap();
        let mut counts = [0usize; 16];
        for &w in set.samples() {
            counts[w as usize] += 1;
        }
        let tv: f64 = counts.iter().map(|&c| (c as f64 / 1e5 - 1.0 / 16.0).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.02, "tv = {tv}");
    }

    #[test]
    fn outcome_at_walks_cumulative_weights() {
        let f = BooleanComponent::new(2, vec![0, 0, 0, 1]).unwrap();
        // W = [2, 2, 2, -2], weights all 4
        let dist = bv_distribution(&f);
        let hits: Vec<u32> = (0..16).map(|r| dist.outcome_at(r)).collect();
        assert_eq!(hits, [0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3]);
    }

    #[test]
    fn zero_runs_is_an_error() {
        let f = linear_component(2, 1, 0).unwrap();
        assert_eq!(bv_batch(&f, 0, &mut stream(1)), Err(Error::ZeroRuns));
    }

    #[test]
    fn batches_are_reproducible() {
        let f = fixture_sbox("ls4").unwrap().component(2).unwrap();
        let a = bv_batch(&f, 64, &mut stream(1)).unwrap();
        let b = bv_batch(&f, 64, &mut stream(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.p(), 64);
    }

    #[test]
    fn sample_set_json_is_integer_array() {
        let set = SampleSet::new(3, vec![5, 5, 1]).unwrap();
        assert_eq!(serde_json::to_string(set.samples()).unwrap(), "[5,5,1]");
        assert!(SampleSet::new(3, vec![]).is_err());
        assert!(SampleSet::new(3, vec![8]).is_err());
    }

    // Chi-square over 2^m bins at N = 1e5 against the exact distribution.
    #[test]
    fn chi_square_within_999_quantile() {
        for (m, seed) in [(3u32, 11u64), (5, 12), (6, 13)] {
            let f = random_sbox(m, 1, seed).unwrap().component(1).unwrap();
            let dist = bv_distribution(&f);
            let n = 100_000usize;
            let set = bv_batch_from(&dist, n, &mut stream(seed)).unwrap();
            let mut counts = vec![0usize; 1 << m];
            for &w in set.samples() {
                counts[w as usize] += 1;
            }
            let mut chi = 0.0;
            let mut bins = 0usize;
            for (w, &c) in counts.iter().enumerate() {
                let expected = n as f64 * dist.probability(w as u32);
                if expected > 0.0 {
                    chi += (c as f64 - expected).powi(2) / expected;
                    bins += 1;
                } else {
                    assert_eq!(c, 0);
                }
            }
            // Wilson–Hilferty approximation of the chi-square 0.999 quantile.
            let k = (bins - 1) as f64;
            let z = 3.090_232;
            let q = k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3);
            assert!(chi < q, "m={m}: chi2 {chi} >= {q} with {bins} bins");
        }
    }

    proptest! {
        #[test]
        fn distribution_sums_to_four_pow_m(m in 1u32..=10, seed in any::<u64>()) {
            let f = random_sbox(m, 1, seed).unwrap().component(1).unwrap();
            let dist = bv_distribution(&f);
            prop_assert_eq!(dist.weights().iter().sum::<u64>(), 1u64 << (2 * m));
            prop_assert_eq!(dist.total(), 1u64 << (2 * m));
        }

        #[test]
        fn impossible_outcomes_never_sampled(m in 1u32..=8, seed in any::<u64>()) {
            let f = random_sbox(m, 1, seed).unwrap().component(1).unwrap();
            let dist = bv_distribution(&f);
            let set = bv_batch_from(&dist, 200, &mut stream(seed)).unwrap();
            prop_assert!(set.samples().iter().all(|&w| dist.weights()[w as usize] > 0));
        }
    }
}
