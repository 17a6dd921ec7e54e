//! Candidate differentials from sampled component spectra.
//!
//! [`algorithm1`] samples every component `f_j` of a vectorial function
//! `p` times and solves the two systems per component. [`algorithm2_full`]
//! intersects the per-component solution sets into whole-output
//! differentials; [`algorithm2_partial`] keeps differentials that only some
//! components agree on, recording the known output bits in a mask.

use std::collections::BTreeSet;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolfn::TruthTable;
use crate::bvsim::{bv_batch, SampleSet};
use crate::gf2::{solve, BitMatrix, Rhs, SolutionSets, DEFAULT_CAP};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamConfig {
    /// Multiplier in `p(m) = c·m`.
    pub c: f64,
    /// `epsilon = 1 / (c1·n)`.
    pub c1: f64,
    /// Exponent constant; `1 + ln(n)/2` when unset.
    pub c2: Option<f64>,
    /// Explicit run count, bypassing [`choose_p`]'s rule.
    pub p_override: Option<usize>,
    /// Dimension cap for enumerating solution sets.
    pub cap: u32,
    /// Minimum number of known output bits for partial candidates.
    pub min_known: u32,
}

impl Default for ParamConfig {
    fn default() -> Self {
        ParamConfig { c: 2.0, c1: 2.0, c2: None, p_override: None, cap: DEFAULT_CAP, min_known: 1 }
    }
}

impl ParamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 2.0) {
            return Err(Error::InvalidParam(format!("c = {} must be at least 2", self.c)));
        }
        if !(self.c1 >= 2.0) {
            return Err(Error::InvalidParam(format!("c1 = {} must be at least 2", self.c1)));
        }
        if let Some(c2) = self.c2 {
            if !(c2 > 0.0) {
                return Err(Error::InvalidParam(format!("c2 = {c2} must be positive")));
            }
        }
        if self.p_override == Some(0) {
            return Err(Error::ZeroRuns);
        }
        if self.min_known == 0 {
            return Err(Error::InvalidParam("min_known must be at least 1".into()));
        }
        Ok(())
    }

    pub fn c2_for(&self, n: u32) -> f64 {
        self.c2.unwrap_or_else(|| default_c2(n))
    }

    pub fn epsilon(&self, n: u32) -> f64 {
        1.0 / (self.c1 * n as f64)
    }
}

/// Smallest admissible `c2` for `n` outputs: `1 + ln(n)/2`.
pub fn default_c2(n: u32) -> f64 {
    1.0 + (n as f64).ln() / 2.0
}

/// `p = max{c·m, ceil(c2·c1^2·n^2)}`, or the override when set.
pub fn choose_p(m: u32, n: u32, cfg: &ParamConfig) -> usize {
    if let Some(p) = cfg.p_override {
        return p;
    }
    let per_width = (cfg.c * m as f64).ceil() as usize;
    let n = n as f64;
    let joint = (cfg.c2_for(n as u32) * cfg.c1 * cfg.c1 * n * n).ceil() as usize;
    per_width.max(joint)
}

/// One component's share of [`algorithm1`].
#[derive(Debug, Clone, Serialize)]
pub struct ComponentRun {
    /// 1-based component index.
    pub j: usize,
    pub samples: SampleSet,
    pub rank: u32,
    pub sets: SolutionSets,
}

/// Sample and solve every component; component `j` draws from stream
/// `(seed, j)`.
pub fn algorithm1_runs(f: &TruthTable, p: usize, seed: u64) -> Result<Vec<ComponentRun>> {
    if p == 0 {
        return Err(Error::ZeroRuns);
    }
    (1..=f.n() as usize)
        .into_par_iter()
        .map(|j| {
            let component = f.component(j)?;
            let samples = bv_batch(&component, p, &mut rng::substream(seed, j as u64))?;
            let mat = BitMatrix::from_samples(&samples)?;
            let sets = solve(&mat);
            Ok(ComponentRun { j, samples, rank: mat.rank(), sets })
        })
        .collect()
}

/// `(A_j^0, A_j^1)` for `j = 1..=n`.
pub fn algorithm1(f: &TruthTable, p: usize, seed: u64) -> Result<Vec<SolutionSets>> {
    Ok(algorithm1_runs(f, p, seed)?.into_iter().map(|r| r.sets).collect())
}

/// `(dx, dy, mask)`: input difference `dx` maps to an output difference
/// that agrees with `dy` on the bits of `mask`. Output bit `j-1` holds
/// `i_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DifferentialCandidate {
    pub dx: u64,
    pub dy: u64,
    pub mask: u64,
}

impl DifferentialCandidate {
    pub fn known_bits(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn is_full(&self, n: u32) -> bool {
        self.mask == full_mask(n)
    }
}

fn full_mask(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn side_of(sets: &SolutionSets, a: u64) -> Option<u8> {
    Rhs::BOTH.into_iter().find(|&r| sets.contains(r, a)).map(Rhs::bit)
}

/// Whole-output differentials: `a` must lie in one of `A_j^0`, `A_j^1` for
/// every `j`. A vector missing from both sets for some `j` is dropped (the
/// `(0, 0)` sentinel). Output is ordered by ascending `a`.
pub fn algorithm2_full(sets: &[SolutionSets], cap: u32) -> Result<Vec<DifferentialCandidate>> {
    let Some(first) = sets.first() else {
        return Ok(Vec::new());
    };
    let n = sets.len() as u32;
    let mut starts: Vec<(u64, u8)> = Vec::new();
    for which in Rhs::BOTH {
        starts.extend(first.enumerate(which, cap)?.into_iter().map(|a| (a, which.bit())));
    }
    starts.sort_unstable();

    let mut out = Vec::new();
    let mut dropped = 0usize;
    'next: for (a, i1) in starts {
        if a == 0 {
            continue;
        }
        let mut dy = i1 as u64;
        for (j, s) in sets.iter().enumerate().skip(1) {
            match side_of(s, a) {
                Some(bit) => dy |= (bit as u64) << j,
                None => {
                    dropped += 1;
                    continue 'next;
                }
            }
        }
        out.push(DifferentialCandidate { dx: a, dy, mask: full_mask(n) });
    }
    debug!("algorithm2_full: {} candidates, {dropped} dropped at the sentinel", out.len());
    Ok(out)
}

/// Partial differentials: every non-zero `a` found in any `A_j^i` is
/// walked over all components; bit `j` is unknown when `a` is in neither
/// set. Candidates with fewer than `min_known` known bits are discarded.
pub fn algorithm2_partial(
    sets: &[SolutionSets],
    cap: u32,
    min_known: u32,
) -> Result<Vec<DifferentialCandidate>> {
    let mut starts = BTreeSet::new();
    for s in sets {
        for which in Rhs::BOTH {
            starts.extend(s.enumerate(which, cap)?);
        }
    }
    let out: Vec<DifferentialCandidate> = starts
        .into_iter()
        .filter(|&a| a != 0)
        .filter_map(|a| {
            let (mut dy, mut mask) = (0u64, 0u64);
            for (j, s) in sets.iter().enumerate() {
                if let Some(bit) = side_of(s, a) {
                    dy |= (bit as u64) << j;
                    mask |= 1 << j;
                }
            }
            (mask.count_ones() >= min_known).then_some(DifferentialCandidate { dx: a, dy, mask })
        })
        .collect();
    debug!("algorithm2_partial: {} candidates", out.len());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::fixture_sbox;
    use crate::gf2::BitMatrix;

    fn sets_from_rows(m: u32, rows: &[u64]) -> SolutionSets {
        solve(&BitMatrix::new(m, rows.to_vec()).unwrap())
    }

    #[test]
    fn choose_p_examples() {
        let cfg = ParamConfig::default();
        // c2 = 1 + ln 4 / 2 = 1.6931..., c2·4·16 = 108.36...
        assert_eq!(choose_p(4, 4, &cfg), 109);
        assert_eq!(choose_p(8, 4, &cfg), 109);
        let over = ParamConfig { p_override: Some(64), ..ParamConfig::default() };
        assert_eq!(choose_p(8, 1, &over), 64);
        // n = 1: c2 = 1, joint term = 4
        assert_eq!(choose_p(100, 1, &cfg), 200);
        assert_eq!(choose_p(1, 1, &cfg), 4);
    }

    #[test]
    fn config_validation() {
        assert!(ParamConfig::default().validate().is_ok());
        assert!(ParamConfig { c: 1.5, ..Default::default() }.validate().is_err());
        assert!(ParamConfig { c1: 1.0, ..Default::default() }.validate().is_err());
        assert!(ParamConfig { p_override: Some(0), ..Default::default() }.validate().is_err());
        assert!(ParamConfig { min_known: 0, ..Default::default() }.validate().is_err());
        assert!((ParamConfig::default().epsilon(4) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn linear_sbox_gives_hyperplanes() {
        let s = fixture_sbox("linear4").unwrap();
        let sets = algorithm1(&s, 12, 9).unwrap();
        for (j, sol) in sets.iter().enumerate() {
            for a in 0..16u64 {
                let bit = (s.eval(a as u32) >> j & 1) as u8;
                assert!(sol.contains(Rhs::from_bit(bit), a));
                assert!(!sol.contains(Rhs::from_bit(bit ^ 1), a));
            }
        }
    }

    #[test]
    fn constant_component_has_full_a0() {
        // f_1 = 0, f_2 = x0
        let s = TruthTable::from_fn(3, 2, |x| (x & 1) << 1).unwrap();
        let sets = algorithm1(&s, 20, 1).unwrap();
        assert_eq!(sets[0].dimension(), 3);
        assert!(sets[0].is_empty(Rhs::One));
    }

    #[test]
    fn algorithm1_is_reproducible() {
        let s = fixture_sbox("ls4").unwrap();
        assert_eq!(algorithm1(&s, 109, 3).unwrap(), algorithm1(&s, 109, 3).unwrap());
        assert_eq!(algorithm1(&s, 0, 3), Err(Error::ZeroRuns));
    }

    #[test]
    fn full_on_linear_map_is_its_graph() {
        let s = fixture_sbox("linear4").unwrap();
        let sets = algorithm1(&s, 12, 4).unwrap();
        let got = algorithm2_full(&sets, DEFAULT_CAP).unwrap();
        let expected: Vec<_> = (1..16u64)
            .map(|a| DifferentialCandidate { dx: a, dy: s.eval(a as u32) as u64, mask: 0xf })
            .collect();
        assert_eq!(got, expected);
        assert_eq!(algorithm2_partial(&sets, DEFAULT_CAP, 1).unwrap(), expected);
    }

    #[test]
    fn full_drops_vectors_missing_from_a_component() {
        // A_1^0 = {000, 111}; component 2 has A^0 = {0, 001}-span only, A^1 empty.
        let first = sets_from_rows(3, &[0b011, 0b110]);
        let second = sets_from_rows(3, &[0b010, 0b100, 0]);
        assert!(second.is_empty(Rhs::One));
        assert!(!second.contains(Rhs::Zero, 0b111));
        let sets = [first, second];
        let full = algorithm2_full(&sets, DEFAULT_CAP).unwrap();
        // 010 and 101 from A_1^1: 101 not in A_2^0 either, 010 neither.
        assert!(full.iter().all(|c| c.dx != 0b111 && c.dx != 0b101 && c.dx != 0b010));
        assert!(full.is_empty());
    }

    #[test]
    fn partial_keeps_single_known_bit() {
        let first = sets_from_rows(3, &[0b011, 0b110]);
        let second = sets_from_rows(3, &[0b010, 0b100, 0]);
        let sets = [first, second];
        let partial = algorithm2_partial(&sets, DEFAULT_CAP, 1).unwrap();
        assert!(partial.contains(&DifferentialCandidate { dx: 0b111, dy: 0, mask: 0b01 }));
        assert!(partial.contains(&DifferentialCandidate { dx: 0b001, dy: 0, mask: 0b10 }));
        for c in &partial {
            assert_ne!(c.mask, 0);
            assert_eq!(c.dy & !c.mask, 0);
            for (j, s) in sets.iter().enumerate() {
                if c.mask >> j & 1 == 1 {
                    assert!(s.contains(Rhs::from_bit((c.dy >> j) as u8), c.dx));
                }
            }
        }
        assert!(algorithm2_partial(&sets, DEFAULT_CAP, 2).unwrap().is_empty());
    }

    #[test]
    fn full_candidates_respect_every_component() {
        let s = fixture_sbox("ls4").unwrap();
        let sets = algorithm1(&s, 109, 3).unwrap();
        let full = algorithm2_full(&sets, DEFAULT_CAP).unwrap();
        assert!(full.contains(&DifferentialCandidate { dx: 1, dy: 2, mask: 0xf }));
        for c in &full {
            assert!(c.is_full(4));
            for (j, sol) in sets.iter().enumerate() {
                assert!(sol.contains(Rhs::from_bit((c.dy >> j) as u8), c.dx));
            }
        }
    }

    #[test]
    fn empty_input_sets() {
        assert!(algorithm2_full(&[], DEFAULT_CAP).unwrap().is_empty());
        assert!(algorithm2_partial(&[], DEFAULT_CAP, 1).unwrap().is_empty());
    }

    #[test]
    fn dimension_cap_propagates() {
        let wide = sets_from_rows(22, &[1]);
        assert!(matches!(
            algorithm2_full(std::slice::from_ref(&wide), DEFAULT_CAP),
            Err(Error::DimensionTooLarge { .. })
        ));
        assert!(matches!(algorithm2_partial(&[wide], DEFAULT_CAP, 1), Err(Error::DimensionTooLarge { .. })));
    }
}
