//! Brute-force ground truth: difference distribution tables, exact
//! differential probabilities, and Monte Carlo checks of the sampling
//! bounds.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolfn::{random_sbox, TruthTable};
use crate::differential::{algorithm1, algorithm2_full, choose_p, DifferentialCandidate, ParamConfig};
use crate::gf2::DEFAULT_CAP;
use crate::{rng, Error, Result};

/// Largest `m + n` for which a full table is built.
pub const MAX_DDT_BITS: u32 = 28;

/// `counts[a][b] = |{x : F(x ^ a) ^ F(x) = b}|`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ddt {
    m: u32,
    n: u32,
    counts: Vec<u32>,
}

impl Ddt {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn get(&self, a: u32, b: u32) -> u32 {
        self.counts[((a as usize) << self.n) | b as usize]
    }

    pub fn row(&self, a: u32) -> &[u32] {
        let width = 1usize << self.n;
        &self.counts[a as usize * width..(a as usize + 1) * width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.counts.chunks_exact(1 << self.n)
    }

    /// Largest entry outside row 0, with its position.
    pub fn max_nontrivial(&self) -> (u32, u32, u32) {
        let mut best = (0, 0, 0);
        for a in 1..1u32 << self.m {
            for (b, &c) in self.row(a).iter().enumerate() {
                if c > best.2 {
                    best = (a, b as u32, c);
                }
            }
        }
        best
    }

    /// `(a, b)` pairs with `a != 0` holding for every input.
    pub fn linear_structures(&self) -> Vec<(u32, u32)> {
        let full = 1u32 << self.m;
        (1..full).filter_map(|a| self.row(a).iter().position(|&c| c == full).map(|b| (a, b as u32))).collect()
    }
}

fn check_ddt_size(f: &TruthTable) -> Result<()> {
    if f.m() + f.n() > MAX_DDT_BITS {
        return Err(Error::WidthOutOfRange { what: "m+n", value: f.m() + f.n(), max: MAX_DDT_BITS });
    }
    Ok(())
}

/// Per-difference histogram: one pass over `x` for every `a`.
pub fn ddt(f: &TruthTable) -> Result<Ddt> {
    check_ddt_size(f)?;
    let size = 1usize << f.m();
    let width = 1usize << f.n();
    let mut counts = vec![0u32; size * width];
    let table = f.table();
    counts.par_chunks_mut(width).enumerate().for_each(|(a, row)| {
        for (x, &y) in table.iter().enumerate() {
            row[(table[x ^ a] ^ y) as usize] += 1;
        }
    });
    Ok(Ddt { m: f.m(), n: f.n(), counts })
}

/// Independent construction from every ordered input pair `(x, x')`.
pub fn ddt_pair_scan(f: &TruthTable) -> Result<Ddt> {
    check_ddt_size(f)?;
    let (m, n) = (f.m(), f.n());
    let mut counts = vec![0u32; 1usize << (m + n)];
    let table = f.table();
    for (x, &y) in table.iter().enumerate() {
        for (x2, &y2) in table.iter().enumerate() {
            counts[((x ^ x2) << n) | (y ^ y2) as usize] += 1;
        }
    }
    Ok(Ddt { m, n, counts })
}

/// `count / total` kept as integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExactProbability {
    pub count: u64,
    pub total: u64,
}

impl ExactProbability {
    pub fn value(&self) -> f64 {
        self.count as f64 / self.total as f64
    }

    /// `count/total > num/den` without rounding.
    pub fn exceeds(&self, num: u64, den: u64) -> bool {
        self.count as u128 * den as u128 > num as u128 * self.total as u128
    }
}

impl PartialOrd for ExactProbability {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactProbability {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.count as u128 * other.total as u128).cmp(&(other.count as u128 * self.total as u128))
    }
}

impl fmt::Display for ExactProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.count, self.total)
    }
}

/// Fraction of inputs `x` with `(F(x ^ dx) ^ F(x)) & mask == dy`.
pub fn differential_probability(f: &TruthTable, cand: &DifferentialCandidate) -> ExactProbability {
    let table = f.table();
    let (dx, dy, mask) = (cand.dx as usize, cand.dy as u32, cand.mask as u32);
    let count = table.iter().enumerate().filter(|&(x, &y)| (table[x ^ dx] ^ y) & mask == dy).count();
    ExactProbability { count: count as u64, total: table.len() as u64 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifiedCandidate {
    #[serde(flatten)]
    pub candidate: DifferentialCandidate,
    pub count: u64,
    pub total: u64,
    pub probability: f64,
    /// Probability strictly above 1/2.
    pub above_uniform: bool,
}

impl VerifiedCandidate {
    pub fn exact(&self) -> ExactProbability {
        ExactProbability { count: self.count, total: self.total }
    }
}

/// Exact probabilities for every candidate, most probable first; equal
/// probabilities keep their input order.
pub fn verify_candidates(f: &TruthTable, cands: &[DifferentialCandidate]) -> Vec<VerifiedCandidate> {
    let mut out: Vec<VerifiedCandidate> = cands
        .par_iter()
        .map(|c| {
            let prob = differential_probability(f, c);
            VerifiedCandidate {
                candidate: *c,
                count: prob.count,
                total: prob.total,
                probability: prob.value(),
                above_uniform: prob.exceeds(1, 2),
            }
        })
        .collect();
    out.sort_by(|a, b| b.exact().cmp(&a.exact()));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub m: u32,
    pub n: u32,
    pub trials: usize,
    /// Trials whose solution sets were too large to enumerate.
    pub skipped: usize,
    pub p: usize,
    pub epsilon: f64,
    /// A candidate violates when its probability is at most this value.
    pub threshold: f64,
    /// Non-zero differentials examined.
    pub checked: u64,
    pub violations: u64,
    /// `1 - exp(-2 p eps^2)`.
    pub bound: f64,
    /// `max(bound, 0)^n`; present for whole-S-box validation.
    pub joint_bound: Option<f64>,
    /// `1 - 1/e^2`, the floor reached when `c2 >= 1 + ln(n)/2`.
    pub joint_floor: Option<f64>,
    /// `1 - violations/checked`, or 1 when nothing was checked.
    pub empirical_rate: f64,
}

/// `1 - exp(-2 p eps^2)`.
pub fn hoeffding_bound(p: usize, epsilon: f64) -> f64 {
    1.0 - (-2.0 * p as f64 * epsilon * epsilon).exp()
}

/// Per-trial counts, summed across trials.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Tally {
    pub skipped: usize,
    pub checked: u64,
    pub violations: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;

    fn add(self, o: Tally) -> Tally {
        Tally {
            skipped: self.skipped + o.skipped,
            checked: self.checked + o.checked,
            violations: self.violations + o.violations,
        }
    }
}

// Violation iff count/2^m <= threshold.
fn is_violation(prob: ExactProbability, threshold: f64) -> bool {
    prob.value() <= threshold
}

/// One trial on a given table: sample, solve, intersect, and count the
/// full candidates whose exact probability is at most `threshold`.
pub fn check_trial(sbox: &TruthTable, p: usize, threshold: f64, cap: u32, trial_seed: u64) -> Result<Tally> {
    let sets = algorithm1(sbox, p, trial_seed)?;
    let cands = match algorithm2_full(&sets, cap) {
        Ok(c) => c,
        Err(Error::DimensionTooLarge { .. }) => return Ok(Tally { skipped: 1, ..Tally::default() }),
        Err(e) => return Err(e),
    };
    let violations =
        cands.iter().filter(|c| is_violation(differential_probability(sbox, c), threshold)).count() as u64;
    Ok(Tally { skipped: 0, checked: cands.len() as u64, violations })
}

fn run_trials(m: u32, n: u32, trials: usize, p: usize, threshold: f64, cap: u32, seed: u64) -> Result<Tally> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let trial_seed = rng::child_seed(seed, t);
            let sbox = random_sbox(m, n, trial_seed)?;
            check_trial(&sbox, p, threshold, cap, trial_seed)
        })
        .try_reduce(Tally::default, |a, b| Ok(a + b))
}

fn rate(t: &Tally) -> f64 {
    if t.checked == 0 {
        1.0
    } else {
        1.0 - t.violations as f64 / t.checked as f64
    }
}

/// Single-output check: random `f` on `m` bits, `p` samples, and every
/// `(a, i)` with `a != 0` found in `A^i` must have
/// `Pr[f(x ^ a) ^ f(x) = i] > 1 - epsilon`.
pub fn validate_theorem1(
    m: u32,
    trials: usize,
    p: usize,
    epsilon: f64,
    seed: u64,
) -> Result<ValidationReport> {
    validate_theorem1_capped(m, trials, p, epsilon, seed, DEFAULT_CAP)
}

pub fn validate_theorem1_capped(
    m: u32,
    trials: usize,
    p: usize,
    epsilon: f64,
    seed: u64,
    cap: u32,
) -> Result<ValidationReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Epsilon(epsilon));
    }
    if m > 12 {
        return Err(Error::WidthOutOfRange { what: "m", value: m, max: 12 });
    }
    if p == 0 {
        return Err(Error::ZeroRuns);
    }
    let threshold = 1.0 - epsilon;
    let tally = run_trials(m, 1, trials, p, threshold, cap, seed)?;
    Ok(ValidationReport {
        m,
        n: 1,
        trials,
        skipped: tally.skipped,
        p,
        epsilon,
        threshold,
        checked: tally.checked,
        violations: tally.violations,
        bound: hoeffding_bound(p, epsilon),
        joint_bound: None,
        joint_floor: None,
        empirical_rate: rate(&tally),
    })
}

/// Whole-S-box check: random `m -> n` tables, `p` from [`choose_p`],
/// `epsilon = 1/(c1 n)`, and every full candidate must have probability
/// above `1 - n·epsilon`.
pub fn validate_joint_bound(
    m: u32,
    n: u32,
    trials: usize,
    cfg: &ParamConfig,
    seed: u64,
) -> Result<ValidationReport> {
    cfg.validate()?;
    if m + n > MAX_DDT_BITS {
        return Err(Error::WidthOutOfRange { what: "m+n", value: m + n, max: MAX_DDT_BITS });
    }
    let p = choose_p(m, n, cfg);
    let epsilon = cfg.epsilon(n);
    let threshold = 1.0 - n as f64 * epsilon;
    let tally = run_trials(m, n, trials, p, threshold, cfg.cap, seed)?;
    let bound = hoeffding_bound(p, epsilon);
    Ok(ValidationReport {
        m,
        n,
        trials,
        skipped: tally.skipped,
        p,
        epsilon,
        threshold,
        checked: tally.checked,
        violations: tally.violations,
        bound,
        joint_bound: Some(bound.max(0.0).powi(n as i32)),
        joint_floor: Some(1.0 - (-2.0f64).exp()),
        empirical_rate: rate(&tally),
    })
}
