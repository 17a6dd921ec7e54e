//! Vectorial Boolean functions, their component functions and exact Walsh
//! spectra.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Result};

/// Largest supported input or output width.
pub const MAX_WIDTH: u32 = 24;

/// Names accepted by [`fixture_sbox`].
pub const FIXTURES: &[&str] = &["identity4", "linear4", "ls4", "present4", "bent4"];

fn check_width(what: &'static str, value: u32) -> Result<()> {
    if value == 0 || value > MAX_WIDTH {
        return Err(Error::WidthOutOfRange { what, value, max: MAX_WIDTH });
    }
    Ok(())
}

#[inline]
pub fn parity(x: u64) -> u8 {
    (x.count_ones() & 1) as u8
}

/// A map from `m`-bit inputs to `n`-bit outputs stored as its full table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct TruthTable {
    m: u32,
    n: u32,
    table: Vec<u32>,
}

#[derive(Deserialize)]
struct RawTable {
    m: u32,
    n: u32,
    table: Vec<u64>,
}

impl TryFrom<RawTable> for TruthTable {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        check_width("m", raw.m)?;
        check_width("n", raw.n)?;
        if let Some((index, &value)) = raw.table.iter().enumerate().find(|(_, &v)| v >> raw.n != 0) {
            return Err(Error::EntryTooWide { index, value, bits: raw.n });
        }
        let table = raw.table.into_iter().map(|v| v as u32).collect();
        TruthTable::new(raw.m, raw.n, table)
    }
}

impl TruthTable {
    pub fn new(m: u32, n: u32, table: Vec<u32>) -> Result<Self> {
        check_width("m", m)?;
        check_width("n", n)?;
        let expected = 1usize << m;
        if table.len() != expected {
            return Err(Error::TableLength { got: table.len(), expected });
        }
        if let Some((index, &value)) = table.iter().enumerate().find(|(_, &v)| v >> n != 0) {
            return Err(Error::EntryTooWide { index, value: value as u64, bits: n });
        }
        Ok(TruthTable { m, n, table })
    }

    pub fn from_fn(m: u32, n: u32, f: impl FnMut(u32) -> u32) -> Result<Self> {
        check_width("m", m)?;
        check_width("n", n)?;
        Self::new(m, n, (0..1u32 << m).map(f).collect())
    }

    pub fn identity(m: u32) -> Result<Self> {
        Self::from_fn(m, m, |x| x)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    #[inline]
    pub fn eval(&self, x: u32) -> u32 {
        self.table[x as usize]
    }

    pub fn input_mask(&self) -> u32 {
        ((1u64 << self.m) - 1) as u32
    }

    pub fn output_mask(&self) -> u32 {
        ((1u64 << self.n) - 1) as u32
    }

    pub fn is_permutation(&self) -> bool {
        if self.m != self.n {
            return false;
        }
        let mut seen = vec![false; self.table.len()];
        self.table.iter().all(|&y| !std::mem::replace(&mut seen[y as usize], true))
    }

    /// Inverse table of a bijection.
    pub fn inverse(&self) -> Option<TruthTable> {
        if !self.is_permutation() {
            return None;
        }
        let mut inv = vec![0u32; self.table.len()];
        for (x, &y) in self.table.iter().enumerate() {
            inv[y as usize] = x as u32;
        }
        Some(TruthTable { m: self.m, n: self.n, table: inv })
    }

    /// Component function `f_j`, 1-based; `f_1` is the least significant
    /// output bit.
    pub fn component(&self, j: usize) -> Result<BooleanComponent> {
        if j == 0 || j > self.n as usize {
            return Err(Error::ComponentIndex { index: j, n: self.n });
        }
        let shift = j - 1;
        let bits = self.table.iter().map(|&y| ((y >> shift) & 1) as u8).collect();
        Ok(BooleanComponent { m: self.m, bits })
    }

    pub fn components(&self) -> Vec<BooleanComponent> {
        (1..=self.n as usize).map(|j| self.component(j).expect("index in range")).collect()
    }

    /// Reassemble a table from its components, `parts[0]` becoming bit 0.
    pub fn recompose(parts: &[BooleanComponent]) -> Result<Self> {
        let n = parts.len() as u32;
        check_width("n", n)?;
        let m = parts[0].m;
        if let Some(p) = parts.iter().find(|p| p.m != m) {
            return Err(Error::InvalidParam(format!("components of mixed widths {m} and {}", p.m)));
        }
        Self::from_fn(m, n, |x| {
            parts.iter().enumerate().fold(0, |acc, (j, p)| acc | (p.bits[x as usize] as u32) << j)
        })
    }
}

/// A single-output Boolean function on `m` bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanComponent {
    m: u32,
    bits: Vec<u8>,
}

impl BooleanComponent {
    pub fn new(m: u32, bits: Vec<u8>) -> Result<Self> {
        check_width("m", m)?;
        let expected = 1usize << m;
        if bits.len() != expected {
            return Err(Error::TableLength { got: bits.len(), expected });
        }
        if let Some((index, &value)) = bits.iter().enumerate().find(|(_, &b)| b > 1) {
            return Err(Error::EntryTooWide { index, value: value as u64, bits: 1 });
        }
        Ok(BooleanComponent { m, bits })
    }

    pub fn from_fn(m: u32, f: impl Fn(u32) -> bool) -> Result<Self> {
        check_width("m", m)?;
        Self::new(m, (0..1u32 << m).map(|x| f(x) as u8).collect())
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn eval(&self, x: u32) -> u8 {
        self.bits[x as usize]
    }
}

/// `x -> parity(v & x) ^ c`.
pub fn linear_component(m: u32, v: u32, c: u8) -> Result<BooleanComponent> {
    check_width("m", m)?;
    if (v as u64) >> m != 0 {
        return Err(Error::VectorTooWide { value: v as u64, bits: m });
    }
    if c > 1 {
        return Err(Error::InvalidParam(format!("constant term {c} is not a bit")));
    }
    BooleanComponent::from_fn(m, |x| (parity((v & x) as u64) ^ c) == 1)
}

/// Unnormalized Walsh coefficients `W(w) = sum_x (-1)^(f(x) ^ w·x)`.
///
/// The normalized transform is `W(w) / 2^m`; keeping the integer form makes
/// every downstream probability an exact rational over `4^m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalshSpectrum {
    m: u32,
    coeffs: Vec<i32>,
}

impl WalshSpectrum {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn coeffs(&self) -> &[i32] {
        &self.coeffs
    }

    /// `sum_w W(w)^2`, always `4^m`.
    pub fn energy(&self) -> u64 {
        self.coeffs.iter().map(|&c| (c as i64 * c as i64) as u64).sum()
    }

    /// `S_f(w)` as a float, for reports only.
    pub fn normalized(&self, w: u32) -> f64 {
        self.coeffs[w as usize] as f64 / (1u64 << self.m) as f64
    }
}

/// In-place fast Walsh–Hadamard butterfly over a power-of-two slice.
pub fn fwht_in_place(data: &mut [i32]) {
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

pub fn walsh_spectrum(f: &BooleanComponent) -> WalshSpectrum {
    let mut coeffs: Vec<i32> = f.bits.iter().map(|&b| 1 - 2 * b as i32).collect();
    fwht_in_place(&mut coeffs);
    WalshSpectrum { m: f.m, coeffs }
}

/// Uniformly random table: each of the `2^m` entries is an independent
/// uniform `n`-bit word.
pub fn random_sbox(m: u32, n: u32, seed: u64) -> Result<TruthTable> {
    check_width("m", m)?;
    check_width("n", n)?;
    let mut rng = rng::stream(seed);
    let bound = 1u64 << n;
    TruthTable::from_fn(m, n, |_| rng.gen_range(0..bound) as u32)
}

/// Uniformly random bijection on `m` bits.
pub fn random_permutation(m: u32, seed: u64) -> Result<TruthTable> {
    use rand::seq::SliceRandom;
    check_width("m", m)?;
    let mut table: Vec<u32> = (0..1u32 << m).collect();
    table.shuffle(&mut rng::stream(seed));
    TruthTable::new(m, m, table)
}

// Column images of an upper unitriangular 4x4 matrix.
const LINEAR4_COLUMNS: [u32; 4] = [0b0001, 0b0011, 0b0110, 0b1100];

// Bijection with the single linear structure S(x ^ 1) = S(x) ^ 2.
const LS4: [u32; 16] = [0x2, 0x0, 0x3, 0x1, 0xa, 0x8, 0x7, 0x5, 0xc, 0xe, 0xf, 0xd, 0xb, 0x9, 0x4, 0x6];

// PRESENT block cipher S-box.
const PRESENT4: [u32; 16] = [0xc, 0x5, 0x6, 0xb, 0x9, 0x0, 0xa, 0xd, 0x3, 0xe, 0xf, 0x8, 0x4, 0x7, 0x1, 0x2];

/// Named S-boxes used by tests and the CLI:
///
/// * `identity4`: `x -> x` on 4 bits
/// * `linear4`: an invertible linear map on 4 bits
/// * `ls4`: a 4-bit bijection with the linear structure `S(x^1) = S(x)^2`
/// * `present4`: the PRESENT S-box
/// * `bent4`: the 4 -> 1 bent function `x0 x1 ^ x2 x3`
pub fn fixture_sbox(name: &str) -> Result<TruthTable> {
    match name {
        "identity4" => TruthTable::identity(4),
        "linear4" => TruthTable::from_fn(4, 4, |x| {
            (0..4).filter(|i| x >> i & 1 == 1).fold(0, |acc, i| acc ^ LINEAR4_COLUMNS[i])
        }),
        "ls4" => TruthTable::new(4, 4, LS4.to_vec()),
        "present4" => TruthTable::new(4, 4, PRESENT4.to_vec()),
        "bent4" => TruthTable::from_fn(4, 1, |x| (x & 1) & (x >> 1 & 1) ^ (x >> 2 & 1) & (x >> 3 & 1)),
        other => Err(Error::UnknownFixture(other.to_string())),
    }
}
