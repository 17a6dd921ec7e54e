//! Toy substitution–permutation cipher, its reduced keyed map `G`, and the
//! last-round subkey recovery.
//!
//! Rounds `1..r-1` are key XOR, S-box layer, bit permutation. Round `r` is
//! key XOR and S-box layer followed by a whitening XOR with
//! `round_keys[r]`, without a permutation. `G` maps a plaintext to the
//! state just before the last S-box layer, so
//! `encrypt(x) = sbox_layer(G(x)) ^ round_keys[r]`.
//!
//! The sampling step of [`method2_pipeline`] evaluates `G` with the real
//! key, modelling oracle access to a quantum circuit for `G`. It is not a
//! classical known-plaintext attack.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolfn::{fixture_sbox, TruthTable};
use crate::differential::{algorithm1, algorithm2_partial, choose_p, DifferentialCandidate, ParamConfig};
use crate::oracle::VerifiedCandidate;
use crate::{rng, Error, Result};

/// Widest block for which `G` is tabulated and sampled.
pub const MAX_SAMPLED_BLOCK: u32 = 20;

/// Default limit on guessed S-box groups in the key recovery.
pub const DEFAULT_MAX_GROUPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct SpnSpec {
    k: u32,
    l: u32,
    m: u32,
    sbox: TruthTable,
    sbox_inv: TruthTable,
    perm: Vec<u32>,
    perm_inv: Vec<u32>,
    rounds: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SboxRef {
    Table(Vec<u32>),
    Fixture(String),
    Full(TruthTable),
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    k: u32,
    l: u32,
    m: u32,
    sbox: SboxRef,
    perm: Vec<u32>,
    rounds: u32,
}

impl TryFrom<RawSpec> for SpnSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let sbox = match raw.sbox {
            SboxRef::Table(t) => TruthTable::new(raw.m, raw.m, t)?,
            SboxRef::Fixture(name) => fixture_sbox(&name)?,
            SboxRef::Full(t) => t,
        };
        SpnSpec::new(raw.l, sbox, raw.perm, raw.rounds).and_then(|s| {
            if s.k != raw.k || s.m != raw.m {
                Err(Error::InvalidSpn(format!(
                    "declared k={} m={} but S-box and l give k={} m={}",
                    raw.k, raw.m, s.k, s.m
                )))
            } else {
                Ok(s)
            }
        })
    }
}

impl From<SpnSpec> for RawSpec {
    fn from(s: SpnSpec) -> RawSpec {
        RawSpec {
            k: s.k,
            l: s.l,
            m: s.m,
            sbox: SboxRef::Table(s.sbox.table().to_vec()),
            perm: s.perm,
            rounds: s.rounds,
        }
    }
}

impl SpnSpec {
    /// `perm[i]` is the destination of state bit `i`.
    pub fn new(l: u32, sbox: TruthTable, perm: Vec<u32>, rounds: u32) -> Result<Self> {
        let m = sbox.m();
        if sbox.n() != m {
            return Err(Error::InvalidSpn(format!("S-box is {}x{}, must be square", m, sbox.n())));
        }
        let sbox_inv = sbox.inverse().ok_or_else(|| Error::InvalidSpn("S-box is not a bijection".into()))?;
        let k = l * m;
        if l == 0 || k > 64 {
            return Err(Error::InvalidSpn(format!("block width l*m = {k} must be in 1..=64")));
        }
        if rounds < 2 {
            return Err(Error::InvalidSpn(format!("{rounds} rounds, need at least 2")));
        }
        if perm.len() != k as usize {
            return Err(Error::InvalidSpn(format!("permutation has {} entries, expected {k}", perm.len())));
        }
        let mut perm_inv = vec![u32::MAX; k as usize];
        for (i, &d) in perm.iter().enumerate() {
            if d >= k || perm_inv[d as usize] != u32::MAX {
                return Err(Error::InvalidSpn("perm is not a bijection on block bits".into()));
            }
            perm_inv[d as usize] = i as u32;
        }
        Ok(SpnSpec { k, l, m, sbox, sbox_inv, perm, perm_inv, rounds })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn rounds(&self) -> u32 {
        self.rounds
    }

    pub fn sbox(&self) -> &TruthTable {
        &self.sbox
    }

    pub fn perm(&self) -> &[u32] {
        &self.perm
    }

    pub fn block_mask(&self) -> u64 {
        if self.k == 64 {
            u64::MAX
        } else {
            (1u64 << self.k) - 1
        }
    }

    pub fn group_mask(&self, g: u32) -> u64 {
        ((1u64 << self.m) - 1) << (g * self.m)
    }

    fn apply_groups(&self, state: u64, table: &TruthTable) -> u64 {
        let nib = (1u64 << self.m) - 1;
        (0..self.l).fold(0, |acc, g| {
            let shift = g * self.m;
            acc | (table.eval((state >> shift & nib) as u32) as u64) << shift
        })
    }

    pub fn sbox_layer(&self, state: u64) -> u64 {
        self.apply_groups(state, &self.sbox)
    }

    pub fn inv_sbox_layer(&self, state: u64) -> u64 {
        self.apply_groups(state, &self.sbox_inv)
    }

    fn move_bits(state: u64, to: &[u32]) -> u64 {
        to.iter().enumerate().fold(0, |acc, (i, &d)| acc | (state >> i & 1) << d)
    }

    pub fn permute(&self, state: u64) -> u64 {
        Self::move_bits(state, &self.perm)
    }

    pub fn inv_permute(&self, state: u64) -> u64 {
        Self::move_bits(state, &self.perm_inv)
    }

    pub fn inv_sbox(&self) -> &TruthTable {
        &self.sbox_inv
    }
}

/// Bit `i` of S-box `s` moves to bit `s` of S-box `i` (requires `l == m`).
pub fn transpose_permutation(m: u32) -> Vec<u32> {
    (0..m * m).map(|p| (p % m) * m + p / m).collect()
}

/// The 16-bit, 3-round, four-S-box cipher built on `ls4`.
pub fn reference_spn() -> SpnSpec {
    SpnSpec::new(4, fixture_sbox("ls4").expect("fixture"), transpose_permutation(4), 3)
        .expect("valid reference cipher")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpnKey {
    pub round_keys: Vec<u64>,
}

impl SpnKey {
    pub fn new(spec: &SpnSpec, round_keys: Vec<u64>) -> Result<Self> {
        if round_keys.len() != spec.rounds as usize + 1 {
            return Err(Error::InvalidSpn(format!(
                "{} round keys, expected {}",
                round_keys.len(),
                spec.rounds + 1
            )));
        }
        if round_keys.iter().any(|&w| w & !spec.block_mask() != 0) {
            return Err(Error::InvalidSpn("round key wider than the block".into()));
        }
        Ok(SpnKey { round_keys })
    }

    pub fn zero(spec: &SpnSpec) -> Self {
        SpnKey { round_keys: vec![0; spec.rounds as usize + 1] }
    }

    /// Independent uniform round keys.
    pub fn from_seed(spec: &SpnSpec, seed: u64) -> Self {
        let mut rng = rng::stream(seed);
        let round_keys = (0..=spec.rounds).map(|_| rng.gen::<u64>() & spec.block_mask()).collect();
        SpnKey { round_keys }
    }

    /// The whitening key XORed after the last S-box layer.
    pub fn final_key(&self) -> u64 {
        *self.round_keys.last().expect("at least three round keys")
    }
}

fn first_rounds(spec: &SpnSpec, key: &SpnKey, x: u64) -> u64 {
    let last = spec.rounds as usize - 1;
    let state = key.round_keys[..last]
        .iter()
        .fold(x & spec.block_mask(), |s, &rk| spec.permute(spec.sbox_layer(s ^ rk)));
    state ^ key.round_keys[last]
}

pub fn encrypt(spec: &SpnSpec, key: &SpnKey, x: u64) -> u64 {
    spec.sbox_layer(first_rounds(spec, key, x)) ^ key.final_key()
}

pub fn decrypt(spec: &SpnSpec, key: &SpnKey, c: u64) -> u64 {
    let last = spec.rounds as usize - 1;
    let state = spec.inv_sbox_layer((c & spec.block_mask()) ^ key.final_key()) ^ key.round_keys[last];
    key.round_keys[..last].iter().rev().fold(state, |s, &rk| spec.inv_sbox_layer(spec.inv_permute(s)) ^ rk)
}

/// A `k`-bit to `k`-bit map closed over a cipher and its key.
#[derive(Clone)]
pub struct KeyedFunction {
    k: u32,
    eval: Arc<dyn Fn(u64) -> u64 + Send + Sync>,
}

impl std::fmt::Debug for KeyedFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyedFunction").field("k", &self.k).finish_non_exhaustive()
    }
}

impl KeyedFunction {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn eval(&self, x: u64) -> u64 {
        (self.eval)(x)
    }

    pub fn to_truth_table(&self) -> Result<TruthTable> {
        TruthTable::from_fn(self.k, self.k, |x| self.eval(x as u64) as u32)
    }
}

/// `G`: plaintext to the input of the last S-box layer.
pub fn extract_g(spec: &SpnSpec, key: &SpnKey) -> KeyedFunction {
    let (spec, key) = (spec.clone(), key.clone());
    KeyedFunction { k: spec.k, eval: Arc::new(move |x| first_rounds(&spec, &key, x)) }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Method2Outcome {
    pub p: usize,
    pub candidates: Vec<DifferentialCandidate>,
}

/// Sample every component `g_j` of `G`, solve, and keep the partial
/// differentials with at least `cfg.min_known` known output bits.
pub fn method2_pipeline(
    spec: &SpnSpec,
    key: &SpnKey,
    cfg: &ParamConfig,
    seed: u64,
) -> Result<Method2Outcome> {
    cfg.validate()?;
    if spec.k > MAX_SAMPLED_BLOCK {
        return Err(Error::WidthOutOfRange { what: "k", value: spec.k, max: MAX_SAMPLED_BLOCK });
    }
    let g = extract_g(spec, key).to_truth_table()?;
    let p = choose_p(spec.k, spec.k, cfg);
    let sets = algorithm1(&g, p, seed)?;
    let candidates = algorithm2_partial(&sets, cfg.cap, cfg.min_known)?;
    Ok(Method2Outcome { p, candidates })
}

/// Last-round groups a candidate touches, split into groups whose key
/// nibble must be guessed and groups that only filter pairs.
///
/// A group whose bits are all known with zero difference has a zero
/// output difference under every key, so it is checked on the ciphertext
/// directly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActiveGroups {
    pub guessed: Vec<u32>,
    pub filters: Vec<u32>,
}

pub fn active_groups(spec: &SpnSpec, cand: &DifferentialCandidate) -> ActiveGroups {
    let mut out = ActiveGroups { guessed: Vec::new(), filters: Vec::new() };
    for g in 0..spec.l {
        let gm = spec.group_mask(g);
        if cand.mask & gm == 0 {
            continue;
        }
        if cand.mask & gm == gm && cand.dy & gm == 0 {
            out.filters.push(g);
        } else {
            out.guessed.push(g);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubkeyGuess {
    /// Guessed nibbles placed at their block positions; other bits zero.
    pub value: u64,
    /// `(group, nibble)` for each guessed group, ascending group.
    pub nibbles: Vec<(u32, u64)>,
    pub counter: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttackResult {
    pub groups: ActiveGroups,
    pub pairs: usize,
    /// Pairs surviving the zero-difference filter groups.
    pub filtered_pairs: usize,
    pub ranking: Vec<SubkeyGuess>,
}

/// Final-key nibbles of `key` restricted to `groups`, packed like
/// [`SubkeyGuess::value`].
pub fn key_nibbles(spec: &SpnSpec, key: &SpnKey, groups: &[u32]) -> u64 {
    groups.iter().fold(0, |acc, &g| acc | key.final_key() & spec.group_mask(g))
}

/// Count, for every assignment of the guessed final-key nibbles, the
/// plaintext pairs `(x, x ^ dx)` whose partially decrypted difference
/// agrees with `dy` on `mask`. Ranked by counter, then ascending value.
pub fn recover_last_round_subkey(
    spec: &SpnSpec,
    oracle: &(dyn Fn(u64) -> u64 + Sync),
    cand: &DifferentialCandidate,
    num_pairs: usize,
    seed: u64,
    max_groups: usize,
) -> Result<AttackResult> {
    if num_pairs == 0 {
        return Err(Error::ZeroPairs);
    }
    if cand.mask & spec.block_mask() == 0 {
        return Err(Error::EmptyMask);
    }
    let groups = active_groups(spec, cand);
    if groups.guessed.len() > max_groups {
        return Err(Error::GuessSpaceTooLarge { groups: groups.guessed.len(), max: max_groups });
    }
    if groups.guessed.is_empty() {
        return Err(Error::InvalidParam(
            "candidate has no last-round S-box with unknown key contribution".into(),
        ));
    }

    let mut rng = rng::stream(seed);
    let block = spec.block_mask();
    let filter_mask: u64 = groups.filters.iter().map(|&g| spec.group_mask(g)).sum();
    let pairs: Vec<(u64, u64)> = (0..num_pairs)
        .map(|_| {
            let x = rng.gen::<u64>() & block;
            (oracle(x), oracle(x ^ cand.dx))
        })
        .collect();
    let kept: Vec<(u64, u64)> = pairs.iter().copied().filter(|(c, c2)| (c ^ c2) & filter_mask == 0).collect();

    let m = spec.m;
    let nib = (1u64 << m) - 1;
    let inv = spec.inv_sbox();
    let guessed = &groups.guessed;
    let space = 1u64 << (m as usize * guessed.len());
    let mut ranking: Vec<SubkeyGuess> = (0..space)
        .into_par_iter()
        .map(|idx| {
            let nibbles: Vec<(u32, u64)> =
                guessed.iter().enumerate().map(|(i, &g)| (g, idx >> (i as u32 * m) & nib)).collect();
            let value = nibbles.iter().fold(0u64, |acc, &(g, v)| acc | v << (g * m));
            let counter = kept
                .iter()
                .filter(|&&(c, c2)| {
                    nibbles.iter().all(|&(g, v)| {
                        let shift = g * m;
                        let u = inv.eval(((c >> shift & nib) ^ v) as u32);
                        let u2 = inv.eval(((c2 >> shift & nib) ^ v) as u32);
                        let diff = ((u ^ u2) as u64) << shift;
                        let gm = spec.group_mask(g);
                        diff & cand.mask & gm == cand.dy & gm
                    })
                })
                .count();
            SubkeyGuess { value, nibbles, counter }
        })
        .collect();
    rank_guesses(&mut ranking, TieBreak::Ascending);
    Ok(AttackResult { groups, pairs: num_pairs, filtered_pairs: kept.len(), ranking })
}

/// Order among guesses with equal counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    #[default]
    Ascending,
    Descending,
}

/// Re-sort a ranking by counter descending, breaking ties by `tie`.
pub fn rank_guesses(ranking: &mut [SubkeyGuess], tie: TieBreak) {
    ranking.sort_by(|a, b| {
        let by_value = match tie {
            TieBreak::Ascending => a.value.cmp(&b.value),
            TieBreak::Descending => b.value.cmp(&a.value),
        };
        b.counter.cmp(&a.counter).then(by_value)
    });
}

/// `ceil(8 / probability)` plaintext pairs.
pub fn default_pairs(probability: f64) -> usize {
    if probability <= 0.0 {
        return usize::MAX;
    }
    (8.0 / probability).ceil() as usize
}

/// Most useful verified candidate for the key recovery: at least one and at
/// most `max_groups` guessed groups, highest probability first, then
/// fewest guessed groups, then most known bits inside them, then smallest
/// `dx`.
pub fn select_attack_candidate<'a>(
    spec: &SpnSpec,
    verified: &'a [VerifiedCandidate],
    max_groups: usize,
) -> Option<&'a VerifiedCandidate> {
    let known_in_guessed = |v: &VerifiedCandidate| {
        let g = active_groups(spec, &v.candidate);
        let bits: u32 = g.guessed.iter().map(|&g| (v.candidate.mask & spec.group_mask(g)).count_ones()).sum();
        (g.guessed.len(), bits)
    };
    verified
        .iter()
        .filter(|v| {
            let n = active_groups(spec, &v.candidate).guessed.len();
            n >= 1 && n <= max_groups
        })
        .min_by(|a, b| {
            let (ga, ba) = known_in_guessed(a);
            let (gb, bb) = known_in_guessed(b);
            b.exact()
                .cmp(&a.exact())
                .then(ga.cmp(&gb))
                .then(bb.cmp(&ba))
                .then(a.candidate.dx.cmp(&b.candidate.dx))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::verify_candidates;

    fn identity_spec(rounds: u32) -> SpnSpec {
        SpnSpec::new(4, fixture_sbox("identity4").unwrap(), (0..16).collect(), rounds).unwrap()
    }

    // Straight-line reference cipher: ls4, transpose wiring, 3 rounds.
    fn reference_encrypt_by_hand(keys: &[u64; 4], x: u64) -> u64 {
        const S: [u64; 16] = [2, 0, 3, 1, 10, 8, 7, 5, 12, 14, 15, 13, 11, 9, 4, 6];
        let sub = |s: u64| -> u64 {
            let mut out = 0;
            for g in 0..4 {
                out |= S[((s >> (4 * g)) & 15) as usize] << (4 * g);
            }
            out
        };
        let wire = |s: u64| -> u64 {
            let mut out = 0;
            for sbox in 0..4 {
                for bit in 0..4 {
                    if s >> (4 * sbox + bit) & 1 == 1 {
                        out |= 1 << (4 * bit + sbox);
                    }
                }
            }
            out
        };
        let mut s = x;
        s = wire(sub(s ^ keys[0]));
        s = wire(sub(s ^ keys[1]));
        s = sub(s ^ keys[2]);
        s ^ keys[3]
    }

    #[test]
    fn identity_cipher_with_zero_keys_is_identity() {
        let spec = identity_spec(2);
        let key = SpnKey::zero(&spec);
        for x in [0u64, 1, 0xbeef, 0xffff] {
            assert_eq!(encrypt(&spec, &key, x), x);
        }
    }

    #[test]
    fn decrypt_inverts_encrypt() {
        let spec = reference_spn();
        let key = SpnKey::from_seed(&spec, 17);
        let mut rng = rng::stream(18);
        for _ in 0..10_000 {
            let x = rng.gen::<u64>() & 0xffff;
            assert_eq!(decrypt(&spec, &key, encrypt(&spec, &key, x)), x);
        }
    }

    #[test]
    fn encryption_is_a_bijection() {
        let spec = reference_spn();
        let key = SpnKey::from_seed(&spec, 4);
        let mut seen = vec![false; 1 << 16];
        for x in 0..1u64 << 16 {
            let c = encrypt(&spec, &key, x) as usize;
            assert!(!seen[c]);
            seen[c] = true;
        }
    }

    #[test]
    fn matches_straight_line_cipher_and_golden_vector() {
        let spec = reference_spn();
        let keys = [0x3a94, 0xd63f, 0x0c17, 0x5be2];
        let key = SpnKey::new(&spec, keys.to_vec()).unwrap();
        let mut rng = rng::stream(2);
        for _ in 0..1000 {
            let x = rng.gen::<u64>() & 0xffff;
            assert_eq!(encrypt(&spec, &key, x), reference_encrypt_by_hand(&keys, x));
        }
        assert_eq!(encrypt(&spec, &key, 0x1234), 0x8c64);
    }

    #[test]
    fn g_decomposes_encryption() {
        let spec = reference_spn();
        let key = SpnKey::from_seed(&spec, 8);
        let g = extract_g(&spec, &key);
        for x in 0..1u64 << 16 {
            assert_eq!(encrypt(&spec, &key, x), spec.sbox_layer(g.eval(x)) ^ key.final_key());
        }
    }

    #[test]
    fn g_of_two_round_unkeyed_cipher_is_sbox_layer() {
        let spec = SpnSpec::new(4, fixture_sbox("present4").unwrap(), (0..16).collect(), 2).unwrap();
        let g = extract_g(&spec, &SpnKey::zero(&spec));
        for x in [0u64, 0x1234, 0xffff] {
            assert_eq!(g.eval(x), spec.sbox_layer(x));
        }
    }

    #[test]
    fn linear_sbox_differences_are_key_independent() {
        let spec = SpnSpec::new(4, fixture_sbox("linear4").unwrap(), transpose_permutation(4), 3).unwrap();
        let g1 = extract_g(&spec, &SpnKey::from_seed(&spec, 1));
        let g2 = extract_g(&spec, &SpnKey::from_seed(&spec, 2));
        for (x, dx) in [(0u64, 1u64), (0x1234, 0x8001), (0xfedc, 0x00f0)] {
            assert_eq!(g1.eval(x) ^ g1.eval(x ^ dx), g2.eval(x) ^ g2.eval(x ^ dx));
        }
    }

    #[test]
    fn spec_validation() {
        let s = fixture_sbox("ls4").unwrap();
        assert!(SpnSpec::new(4, s.clone(), (0..15).collect(), 3).is_err());
        assert!(SpnSpec::new(4, s.clone(), vec![0; 16], 3).is_err());
        assert!(SpnSpec::new(4, s.clone(), (0..16).collect(), 1).is_err());
        let not_bijective = TruthTable::new(4, 4, vec![0; 16]).unwrap();
        assert!(SpnSpec::new(4, not_bijective, (0..16).collect(), 3).is_err());
        assert!(SpnKey::new(&reference_spn(), vec![0; 3]).is_err());
        assert!(SpnKey::new(&reference_spn(), vec![0, 0, 0, 1 << 16]).is_err());
    }

    #[test]
    fn spec_json_forms() {
        let spec = reference_spn();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.starts_with(r#"{"k":16,"l":4,"m":4,"sbox":[2,0,3,1,"#));
        assert_eq!(serde_json::from_str::<SpnSpec>(&text).unwrap(), spec);
        let named =
            r#"{"k":16,"l":4,"m":4,"sbox":"ls4","perm":[0,4,8,12,1,5,9,13,2,6,10,14,3,7,11,15],"rounds":3}"#;
        assert_eq!(serde_json::from_str::<SpnSpec>(named).unwrap(), spec);
        let wrong_k = named.replace(r#""k":16"#, r#""k":12"#);
        assert!(serde_json::from_str::<SpnSpec>(&wrong_k).is_err());
    }

    #[test]
    fn transpose_wiring() {
        let p = transpose_permutation(4);
        assert_eq!(p[1], 4);
        assert_eq!(p[4], 1);
        assert_eq!(p[15], 15);
    }

    #[test]
    fn identity_sbox_pipeline_finds_certain_differentials() {
        let spec = identity_spec(3);
        let key = SpnKey::from_seed(&spec, 3);
        let cfg = ParamConfig { p_override: Some(64), ..ParamConfig::default() };
        let out = method2_pipeline(&spec, &key, &cfg, 1).unwrap();
        let g = extract_g(&spec, &key).to_truth_table().unwrap();
        let verified = verify_candidates(&g, &out.candidates);
        assert_eq!(verified.len(), 0xffff);
        assert!(verified.iter().all(|v| v.count == v.total && v.candidate.mask == 0xffff));
    }

    #[test]
    fn pipeline_is_deterministic_and_survives_empty_output() {
        let spec = reference_spn();
        let key = SpnKey::from_seed(&spec, 5);
        let cfg = ParamConfig::default();
        let a = method2_pipeline(&spec, &key, &cfg, 5).unwrap();
        let b = method2_pipeline(&spec, &key, &cfg, 5).unwrap();
        assert_eq!(a.candidates, b.candidates);
        assert_eq!(a.p, 2444);
        let strict = ParamConfig { min_known: 17, ..ParamConfig::default() };
        assert!(method2_pipeline(&spec, &key, &strict, 5).unwrap().candidates.is_empty());
        let wide = SpnSpec::new(6, fixture_sbox("ls4").unwrap(), (0..24).collect(), 3).unwrap();
        assert!(method2_pipeline(&wide, &SpnKey::zero(&wide), &cfg, 1).is_err());
    }

    #[test]
    fn active_group_split() {
        let spec = reference_spn();
        let c = DifferentialCandidate { dx: 1, dy: 0x0020, mask: 0xffff };
        assert_eq!(active_groups(&spec, &c), ActiveGroups { guessed: vec![1], filters: vec![0, 2, 3] });
        let partial = DifferentialCandidate { dx: 1, dy: 0, mask: 0x0f03 };
        assert_eq!(active_groups(&spec, &partial), ActiveGroups { guessed: vec![0], filters: vec![2] });
    }

    #[test]
    fn attack_errors() {
        let spec = reference_spn();
        let key = SpnKey::from_seed(&spec, 1);
        let enc = |x| encrypt(&spec, &key, x);
        let c = DifferentialCandidate { dx: 1, dy: 0x0020, mask: 0xffff };
        assert!(matches!(recover_last_round_subkey(&spec, &enc, &c, 0, 1, 3), Err(Error::ZeroPairs)));
        let empty = DifferentialCandidate { dx: 1, dy: 0, mask: 0 };
        assert!(matches!(recover_last_round_subkey(&spec, &enc, &empty, 8, 1, 3), Err(Error::EmptyMask)));
        let wide = DifferentialCandidate { dx: 1, dy: 0x1111, mask: 0xffff };
        assert!(matches!(
            recover_last_round_subkey(&spec, &enc, &wide, 8, 1, 3),
            Err(Error::GuessSpaceTooLarge { groups: 4, max: 3 })
        ));
    }

    #[test]
    fn certain_differential_puts_true_key_in_top_class() {
        let spec = reference_spn();
        let key = SpnKey::from_seed(&spec, 21);
        let enc = |x| encrypt(&spec, &key, x);
        // S(x ^ 1) = S(x) ^ 2 in group 0 twice through the transpose wiring.
        let c = DifferentialCandidate { dx: 1, dy: 0x0020, mask: 0xffff };
        let res = recover_last_round_subkey(&spec, &enc, &c, 64, 3, 3).unwrap();
        let truth = key_nibbles(&spec, &key, &[1]);
        let top = &res.ranking[..2];
        assert!(top.iter().all(|g| g.counter == 64));
        assert!(top.iter().any(|g| g.value == truth));
        // The twin differs by the S-box's linear-structure output.
        assert_eq!(top[0].value ^ top[1].value, 2 << 4);
        assert!(res.ranking[2].counter < 64);
        assert_eq!(res.filtered_pairs, 64);
    }

    #[test]
    fn identity_sbox_attack_with_zero_final_key() {
        let spec = identity_spec(3);
        let mut key = SpnKey::from_seed(&spec, 2);
        *key.round_keys.last_mut().unwrap() = 0;
        let enc = |x| encrypt(&spec, &key, x);
        let c = DifferentialCandidate { dx: 0x0030, dy: 0x0030, mask: 0xffff };
        let res = recover_last_round_subkey(&spec, &enc, &c, 16, 1, 3).unwrap();
        assert_eq!(res.groups.guessed, vec![1]);
        assert_eq!(res.ranking[0].value, 0);
        assert_eq!(res.ranking[0].counter, 16);
    }

    #[test]
    fn ranking_is_sorted_and_deterministic() {
        let spec = reference_spn();
        let key = SpnKey::from_seed(&spec, 30);
        let enc = |x| encrypt(&spec, &key, x);
        let c = DifferentialCandidate { dx: 0x0006, dy: 0, mask: 0xff2f };
        let a = recover_last_round_subkey(&spec, &enc, &c, 32, 4, 3).unwrap();
        let b = recover_last_round_subkey(&spec, &enc, &c, 32, 4, 3).unwrap();
        assert_eq!(a.ranking, b.ranking);
        assert!(a.ranking.windows(2).all(
            |w| w[0].counter > w[1].counter || (w[0].counter == w[1].counter && w[0].value < w[1].value)
        ));
    }

    #[test]
    fn descending_tie_break_swaps_twins() {
        let spec = reference_spn();
        let key = SpnKey::from_seed(&spec, 21);
        let enc = |x| encrypt(&spec, &key, x);
        let c = DifferentialCandidate { dx: 1, dy: 0x0020, mask: 0xffff };
        let mut res = recover_last_round_subkey(&spec, &enc, &c, 64, 3, 3).unwrap();
        let (first, second) = (res.ranking[0].value, res.ranking[1].value);
        rank_guesses(&mut res.ranking, TieBreak::Descending);
        assert_eq!((res.ranking[0].value, res.ranking[1].value), (second, first));
        assert!(res.ranking.windows(2).all(|w| w[0].counter >= w[1].counter));
    }

    #[test]
    fn default_pair_count() {
        assert_eq!(default_pairs(1.0), 8);
        assert_eq!(default_pairs(0.75), 11);
        assert_eq!(default_pairs(0.3), 27);
    }
}
