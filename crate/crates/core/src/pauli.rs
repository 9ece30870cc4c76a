//! Pauli strings, sparse Pauli-basis operators and operator-size bookkeeping.
//!
//! A [`PauliString`] of width `N` packs one two-bit symbol per site
//! (`0 = I, 1 = X, 2 = Y, 3 = Z`). The packed code *is* the quaternary index
//! of the string: site 1 is the most significant digit, so `X_1 I_2` has
//! index 4 and `Z_1 X_2` has index 13.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest width a packed `u64` code can hold.
pub const MAX_WIDTH: usize = 32;

/// Coefficients smaller than this are not stored in a [`PauliOperator`].
pub const DROP_TOLERANCE: f64 = 1e-14;

/// Tolerance on `Σ|C_k|² = 1` accepted by the size reductions.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// Single-site Pauli matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_symbol(symbol: u8) -> Result<Self> {
        match symbol {
            0 => Ok(Pauli::I),
            1 => Ok(Pauli::X),
            2 => Ok(Pauli::Y),
            3 => Ok(Pauli::Z),
            other => Err(Error::InvalidSymbol(other)),
        }
    }

    #[inline]
    pub fn symbol(self) -> u8 {
        self as u8
    }

    #[inline]
    pub fn is_identity(self) -> bool {
        self == Pauli::I
    }

    /// Single-site product `self · other`.
    pub fn mul(self, other: Pauli) -> (Phase, Pauli) {
        let (a, b) = (self.symbol(), other.symbol());
        let product = Pauli::from_symbol(a ^ b).expect("xor of two symbols is a symbol");
        (Phase(single_site_phase(a, b)), product)
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Pauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "i" => Ok(Pauli::I),
            "X" | "x" => Ok(Pauli::X),
            "Y" | "y" => Ok(Pauli::Y),
            "Z" | "z" => Ok(Pauli::Z),
            other => Err(Error::InvalidParameter(format!("unknown Pauli '{other}'"))),
        }
    }
}

/// Exponent of `i` picked up by the single-site product of symbols `a·b`.
#[inline]
fn single_site_phase(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 || a == b {
        0
    } else if (b + 3 - a) % 3 == 1 {
        // XY = iZ, YZ = iX, ZX = iY
        1
    } else {
        3
    }
}

/// A power of `i`, stored as its exponent mod 4.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(exponent: u8) -> Self {
        Phase(exponent % 4)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// Tensor product of single-site Paulis over `width` sites.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    // Field order makes the derived `Ord` sort by width, then quaternary index.
    width: u8,
    code: u64,
}

impl PauliString {
    pub fn identity(width: usize) -> Result<Self> {
        check_width(width)?;
        Ok(Self {
            width: width as u8,
            code: 0,
        })
    }

    /// A single non-identity Pauli at 1-based `site`.
    pub fn single(width: usize, site: usize, pauli: Pauli) -> Result<Self> {
        let mut p = Self::identity(width)?;
        p.set(site, pauli)?;
        Ok(p)
    }

    /// Builds a string from symbols `k_1 .. k_N` in site order.
    pub fn from_symbols(symbols: &[u8]) -> Result<Self> {
        check_width(symbols.len())?;
        let mut code = 0u64;
        for &s in symbols {
            Pauli::from_symbol(s)?;
            code = (code << 2) | u64::from(s);
        }
        Ok(Self {
            width: symbols.len() as u8,
            code,
        })
    }

    pub fn from_paulis(paulis: &[Pauli]) -> Result<Self> {
        let symbols: Vec<u8> = paulis.iter().map(|p| p.symbol()).collect();
        Self::from_symbols(&symbols)
    }

    /// Inverse of [`PauliString::quaternary_index`].
    pub fn from_quaternary_index(width: usize, index: u64) -> Result<Self> {
        check_width(width)?;
        if width < MAX_WIDTH && index >> (2 * width) != 0 {
            return Err(Error::IndexOutOfRange { index, width });
        }
        Ok(Self {
            width: width as u8,
            code: index,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        usize::from(self.width)
    }

    /// Index `k ∈ [0, 4^N)` with `k_1` the most significant base-4 digit.
    #[inline]
    pub fn quaternary_index(&self) -> u64 {
        self.code
    }

    #[inline]
    fn shift(&self, offset: usize) -> usize {
        2 * (self.width() - 1 - offset)
    }

    /// Pauli at 0-based position `offset`.
    #[inline]
    pub fn at(&self, offset: usize) -> Pauli {
        let s = ((self.code >> self.shift(offset)) & 3) as u8;
        Pauli::from_symbol(s).expect("two-bit symbol")
    }

    /// Pauli at 1-based `site`.
    pub fn get(&self, site: usize) -> Result<Pauli> {
        self.check_site(site)?;
        Ok(self.at(site - 1))
    }

    pub fn set(&mut self, site: usize, pauli: Pauli) -> Result<()> {
        self.check_site(site)?;
        let shift = self.shift(site - 1);
        self.code = (self.code & !(3u64 << shift)) | (u64::from(pauli.symbol()) << shift);
        Ok(())
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.width() {
            return Err(Error::SiteOutOfRange {
                site,
                width: self.width(),
            });
        }
        Ok(())
    }

    /// Symbols `k_1 .. k_N`.
    pub fn symbols(&self) -> Vec<u8> {
        (0..self.width()).map(|i| self.at(i).symbol()).collect()
    }

    pub fn paulis(&self) -> impl Iterator<Item = Pauli> + '_ {
        (0..self.width()).map(move |i| self.at(i))
    }

    /// Number of non-identity sites.
    pub fn size(&self) -> usize {
        // a site is non-identity iff either of its two bits is set
        let lo = self.code & 0x5555_5555_5555_5555;
        let hi = (self.code >> 1) & 0x5555_5555_5555_5555;
        (lo | hi).count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.code == 0
    }

    /// Bit masks over qubits (site `n` ↔ bit `n-1`) of the sites carrying an
    /// X-type (X or Y) and a Z-type (Y or Z) factor, plus the number of Y's.
    pub fn xz_masks(&self) -> (u64, u64, u32) {
        let (mut x, mut z, mut ny) = (0u64, 0u64, 0u32);
        for i in 0..self.width() {
            match self.at(i) {
                Pauli::I => {}
                Pauli::X => x |= 1 << i,
                Pauli::Y => {
                    x |= 1 << i;
                    z |= 1 << i;
                    ny += 1;
                }
                Pauli::Z => z |= 1 << i,
            }
        }
        (x, z, ny)
    }

    /// Product `self · other` as a phase and a string.
    pub fn multiply(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        if self.width != other.width {
            return Err(Error::WidthMismatch {
                left: self.width(),
                right: other.width(),
            });
        }
        let exponent = (0..self.width()).fold(0u8, |acc, i| {
            acc + single_site_phase(self.at(i).symbol(), other.at(i).symbol())
        });
        Ok((
            Phase::from_exponent(exponent),
            PauliString {
                width: self.width,
                code: self.code ^ other.code,
            },
        ))
    }

    /// All `4^width` strings in quaternary-index order.
    pub fn enumerate(width: usize) -> Result<impl Iterator<Item = PauliString>> {
        check_width(width)?;
        if width > 16 {
            return Err(Error::TooLarge {
                what: "sites to enumerate",
                requested: width,
                cap: 16,
            });
        }
        let w = width as u8;
        Ok((0..1u64 << (2 * width)).map(move |code| PauliString { width: w, code }))
    }
}

fn check_width(width: usize) -> Result<()> {
    if width == 0 || width > MAX_WIDTH {
        Err(Error::InvalidWidth(width))
    } else {
        Ok(())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.paulis() {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let paulis = s
            .trim()
            .chars()
            .map(|c| c.to_string().parse::<Pauli>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_paulis(&paulis)
    }
}

/// Sparse expansion `O = Σ_k C_k P_k` in the Pauli basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliOperator {
    width: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliOperator {
    pub fn new(width: usize) -> Result<Self> {
        check_width(width)?;
        Ok(Self {
            width,
            terms: BTreeMap::new(),
        })
    }

    pub fn from_terms<I>(width: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, Complex64)>,
    {
        let mut op = Self::new(width)?;
        for (p, c) in terms {
            op.add(p, c)?;
        }
        Ok(op)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn check(&self, p: &PauliString) -> Result<()> {
        if p.width() != self.width {
            return Err(Error::WidthMismatch {
                left: self.width,
                right: p.width(),
            });
        }
        Ok(())
    }

    /// Sets the coefficient of `p`, removing the term if it is negligible.
    pub fn insert(&mut self, p: PauliString, coefficient: Complex64) -> Result<()> {
        self.check(&p)?;
        if coefficient.norm() < DROP_TOLERANCE {
            self.terms.remove(&p);
        } else {
            self.terms.insert(p, coefficient);
        }
        Ok(())
    }

    /// Adds `coefficient` to the coefficient of `p`.
    pub fn add(&mut self, p: PauliString, coefficient: Complex64) -> Result<()> {
        let current = self.coefficient(&p);
        self.insert(p, current + coefficient)
    }

    pub fn coefficient(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ_k |C_k|²`.
    pub fn total_weight(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    /// Copy rescaled so that `Σ_k |C_k|² = 1`.
    pub fn normalized(&self) -> Result<Self> {
        let w = self.total_weight();
        if w <= 0.0 || !w.is_finite() {
            return Err(Error::NotNormalized(w));
        }
        let scale = 1.0 / w.sqrt();
        Self::from_terms(self.width, self.terms.iter().map(|(p, c)| (*p, c * scale)))
    }

    fn check_normalized(&self) -> Result<()> {
        let w = self.total_weight();
        if (w - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(w));
        }
        Ok(())
    }

    /// Probability mass `Σ_{k: size(P_k) = l} |C_k|²` for each size `l`.
    pub fn size_distribution(&self) -> Result<SizeDistribution> {
        self.check_normalized()?;
        let mut probs = vec![0.0; self.width + 1];
        for (p, c) in &self.terms {
            probs[p.size()] += c.norm_sqr();
        }
        Ok(SizeDistribution { probs })
    }

    /// Averaged operator size `Σ_k |C_k|² l(P_k)`.
    pub fn average_size(&self) -> Result<f64> {
        self.check_normalized()?;
        Ok(self
            .terms
            .iter()
            .map(|(p, c)| c.norm_sqr() * p.size() as f64)
            .sum())
    }

    /// Weight carried by strings that are non-identity at 1-based `site`.
    pub fn operator_density(&self, site: usize) -> Result<f64> {
        if site == 0 || site > self.width {
            return Err(Error::SiteOutOfRange {
                site,
                width: self.width,
            });
        }
        self.check_normalized()?;
        Ok(self
            .terms
            .iter()
            .filter(|(p, _)| !p.at(site - 1).is_identity())
            .map(|(_, c)| c.norm_sqr())
            .sum())
    }

    /// Densities for sites `1..=width`.
    pub fn operator_densities(&self) -> Result<Vec<f64>> {
        self.check_normalized()?;
        let mut out = vec![0.0; self.width];
        for (p, c) in &self.terms {
            let w = c.norm_sqr();
            for (i, slot) in out.iter_mut().enumerate() {
                if !p.at(i).is_identity() {
                    *slot += w;
                }
            }
        }
        Ok(out)
    }
}

/// Probability of each operator size `0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeDistribution {
    probs: Vec<f64>,
}

impl SizeDistribution {
    /// Tolerance on the total probability.
    pub const TOLERANCE: f64 = 1e-10;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty size distribution".into()));
        }
        if let Some(&bad) = probs.iter().find(|&&p| !(p >= -Self::TOLERANCE)) {
            return Err(Error::InvalidParameter(format!(
                "negative probability {bad}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self { probs })
    }

    /// Point mass at `size` over sizes `0..=max_size`.
    pub fn point(max_size: usize, size: usize) -> Self {
        let mut probs = vec![0.0; max_size + 1];
        probs[size] = 1.0;
        Self { probs }
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, size: usize) -> f64 {
        self.probs.get(size).copied().unwrap_or(0.0)
    }

    /// Largest representable size, i.e. `N`.
    pub fn max_size(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(l, p)| l as f64 * p)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}
