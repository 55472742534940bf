//! Signed Pauli strings over `n` qubits, bit-packed into 64-bit words.
//!
//! Internally an operator is stored as `i^e · ∏_j X_j^{x_j} Z_j^{z_j}` with a
//! two-bit exponent `e`. This makes products cheap: moving every `Z` of the
//! left factor past every `X` of the right factor costs a sign per overlap,
//! so `e = e_a + e_b + 2·|z_a ∧ x_b| (mod 4)`.
//!
//! The public sign is defined relative to the Hermitian form
//! `± ∏_j σ_j` where `σ_j = Y` whenever both bits are set (`Y = iXZ`). An
//! operator is Hermitian iff `e ≡ |x ∧ z| (mod 2)`.

use std::fmt;
use std::str::FromStr;

use super::StabilizerError;

/// A ±1 sign; doubles as a measurement outcome.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    /// `true` for `Minus`.
    pub fn bit(self) -> bool {
        self == Sign::Minus
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    // Signs multiply by adding their bits mod 2.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Sign) -> Sign {
        Sign::from_bit(self.bit() ^ rhs.bit())
    }
}

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    /// Exponent of `i` in the `X^x Z^z` ordering, mod 4.
    exp: u8,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        let w = words_for(n);
        Self {
            n,
            x: vec![0; w],
            z: vec![0; w],
            exp: 0,
        }
    }

    /// Product of `X` on every listed site.
    pub fn x_string(n: usize, sites: &[usize]) -> Self {
        let mut op = Self::identity(n);
        for &s in sites {
            op.set_x(s, !op.x_bit(s));
        }
        op
    }

    /// Product of `Z` on every listed site.
    pub fn z_string(n: usize, sites: &[usize]) -> Self {
        let mut op = Self::identity(n);
        for &s in sites {
            op.set_z(s, !op.z_bit(s));
        }
        op
    }

    /// `∏_j X_j`, the global Z2 generator.
    pub fn parity(n: usize) -> Self {
        let sites: Vec<usize> = (0..n).collect();
        Self::x_string(n, &sites)
    }

    /// Builds a Hermitian operator from per-site letters and a sign.
    pub fn from_letters(sign: Sign, letters: &[Letter]) -> Self {
        let mut op = Self::identity(letters.len());
        for (j, l) in letters.iter().enumerate() {
            let (x, z) = l.bits();
            op.set_x(j, x);
            op.set_z(j, z);
        }
        op.set_sign(sign);
        op
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    #[inline]
    pub fn x_bit(&self, site: usize) -> bool {
        assert!(
            site < self.n,
            "site {site} out of range for {} qubits",
            self.n
        );
        (self.x[site >> 6] >> (site & 63)) & 1 == 1
    }

    #[inline]
    pub fn z_bit(&self, site: usize) -> bool {
        assert!(
            site < self.n,
            "site {site} out of range for {} qubits",
            self.n
        );
        (self.z[site >> 6] >> (site & 63)) & 1 == 1
    }

    /// Sets the `x` bit of `site` while keeping the public sign unchanged.
    pub fn set_x(&mut self, site: usize, value: bool) {
        let sign = self.sign_unchecked();
        let (w, b) = (site >> 6, site & 63);
        assert!(site < self.n);
        self.x[w] = (self.x[w] & !(1 << b)) | ((value as u64) << b);
        self.set_sign(sign);
    }

    /// Sets the `z` bit of `site` while keeping the public sign unchanged.
    pub fn set_z(&mut self, site: usize, value: bool) {
        let sign = self.sign_unchecked();
        let (w, b) = (site >> 6, site & 63);
        assert!(site < self.n);
        self.z[w] = (self.z[w] & !(1 << b)) | ((value as u64) << b);
        self.set_sign(sign);
    }

    fn y_count(&self) -> u32 {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x & z).count_ones())
            .sum()
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    pub fn is_hermitian(&self) -> bool {
        (self.exp as u32 + self.y_count()) % 2 == 0
    }

    /// Raw phase exponent `e` of the `i^e X^x Z^z` form.
    pub fn phase_exponent(&self) -> u8 {
        self.exp
    }

    /// Sign relative to the Hermitian `±∏σ` form, or `None` for `±i` phases.
    pub fn sign(&self) -> Option<Sign> {
        self.is_hermitian().then(|| self.sign_unchecked())
    }

    #[inline]
    fn sign_unchecked(&self) -> Sign {
        let rel = (self.exp as u32 + 4 - self.y_count() % 4) % 4;
        Sign::from_bit(rel >= 2)
    }

    pub fn set_sign(&mut self, sign: Sign) {
        let y = self.y_count() % 4;
        self.exp = ((y + if sign.bit() { 2 } else { 0 }) % 4) as u8;
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.set_sign(sign);
        self
    }

    pub fn negate(&mut self) {
        self.exp = (self.exp + 2) % 4;
    }

    /// `true` iff both masks are empty except for the listed kind.
    pub fn is_x_type(&self) -> bool {
        self.z.iter().all(|&w| w == 0)
    }

    pub fn is_z_type(&self) -> bool {
        self.x.iter().all(|&w| w == 0)
    }

    /// Symplectic product parity: `true` iff the operators anticommute.
    #[inline]
    pub(crate) fn anticommutes_unchecked(&self, other: &PauliOperator) -> bool {
        let mut acc = 0u32;
        for w in 0..self.x.len() {
            acc ^= (self.x[w] & other.z[w]).count_ones() ^ (self.z[w] & other.x[w]).count_ones();
        }
        acc & 1 == 1
    }

    pub fn commutes(&self, other: &PauliOperator) -> Result<bool, StabilizerError> {
        self.check_size(other)?;
        Ok(!self.anticommutes_unchecked(other))
    }

    pub(crate) fn check_size(&self, other: &PauliOperator) -> Result<(), StabilizerError> {
        if self.n != other.n {
            return Err(StabilizerError::SizeMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    /// In-place right multiplication `self ← self · rhs`, tracking `i` phases.
    #[inline]
    pub(crate) fn mul_assign_unchecked(&mut self, rhs: &PauliOperator) {
        let mut cross = 0u32;
        for w in 0..self.x.len() {
            cross += (self.z[w] & rhs.x[w]).count_ones();
            self.x[w] ^= rhs.x[w];
            self.z[w] ^= rhs.z[w];
        }
        self.exp = ((self.exp as u32 + rhs.exp as u32 + 2 * cross) % 4) as u8;
    }

    /// Product `self · rhs` with the full four-valued phase retained.
    pub fn compose(&self, rhs: &PauliOperator) -> Result<PauliOperator, StabilizerError> {
        self.check_size(rhs)?;
        let mut out = self.clone();
        out.mul_assign_unchecked(rhs);
        Ok(out)
    }

    /// Product of two Hermitian operators that must itself be Hermitian.
    pub fn multiply(&self, rhs: &PauliOperator) -> Result<PauliOperator, StabilizerError> {
        let out = self.compose(rhs)?;
        if !out.is_hermitian() {
            return Err(StabilizerError::NonHermitian);
        }
        Ok(out)
    }

    /// Iterator over sites where the operator acts non-trivially.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.x_bit(j) || self.z_bit(j))
    }

    pub fn letter(&self, site: usize) -> Letter {
        match (self.x_bit(site), self.z_bit(site)) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    /// Reads the four bits `(x_a, z_a)` of `site` packed as `x | z << 1`.
    #[inline]
    pub(crate) fn local_bits(&self, site: usize) -> u32 {
        let (w, b) = (site >> 6, site & 63);
        (((self.x[w] >> b) & 1) | (((self.z[w] >> b) & 1) << 1)) as u32
    }

    #[inline]
    pub(crate) fn write_local_bits(&mut self, site: usize, bits: u32) {
        let (w, b) = (site >> 6, site & 63);
        self.x[w] = (self.x[w] & !(1 << b)) | (((bits & 1) as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((((bits >> 1) & 1) as u64) << b);
    }

    #[inline]
    pub(crate) fn add_phase(&mut self, e: u8) {
        self.exp = (self.exp + e) % 4;
    }

    /// Bit at column `c` of the `x‖z` layout.
    #[inline]
    pub(crate) fn column(&self, c: usize) -> bool {
        if c < self.n {
            (self.x[c >> 6] >> (c & 63)) & 1 == 1
        } else {
            let c = c - self.n;
            (self.z[c >> 6] >> (c & 63)) & 1 == 1
        }
    }

    /// Appends `(site, x | z << 1)` for every non-trivial site, in site order.
    pub(crate) fn push_terms(&self, out: &mut Vec<(usize, u8)>) {
        for w in 0..self.x.len() {
            let mut m = self.x[w] | self.z[w];
            while m != 0 {
                let site = w * 64 + m.trailing_zeros() as usize;
                m &= m - 1;
                out.push((site, self.local_bits(site) as u8));
            }
        }
    }

    pub(crate) fn words_mut(&mut self) -> (&mut [u64], &mut [u64]) {
        (&mut self.x, &mut self.z)
    }

    pub(crate) fn clear(&mut self) {
        self.x.fill(0);
        self.z.fill(0);
        self.exp = 0;
    }

    #[inline]
    pub(crate) fn set_exp(&mut self, e: u8) {
        self.exp = e % 4;
    }

    pub(crate) fn masks_equal(&self, other: &PauliOperator) -> bool {
        self.x == other.x && self.z == other.z
    }
}

/// Single-site Pauli letter.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign() {
            Some(Sign::Plus) => write!(f, "+")?,
            Some(Sign::Minus) => write!(f, "-")?,
            None => match self.sign_unchecked_imag() {
                Sign::Plus => write!(f, "+i")?,
                Sign::Minus => write!(f, "-i")?,
            },
        }
        for j in 0..self.n {
            write!(f, "{}", self.letter(j).as_char())?;
        }
        Ok(())
    }
}

impl PauliOperator {
    fn sign_unchecked_imag(&self) -> Sign {
        // e - |y| is odd here; +i for 1, -i for 3.
        let rel = (self.exp as u32 + 4 - self.y_count() % 4) % 4;
        Sign::from_bit(rel == 3)
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliOperator({self})")
    }
}

impl FromStr for PauliOperator {
    type Err = StabilizerError;

    /// Parses strings such as `"+XIZ"`, `"-YY"` or `"ZZI"` (sign optional).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (sign, body) = match s.chars().next() {
            Some('+') => (Sign::Plus, &s[1..]),
            Some('-') => (Sign::Minus, &s[1..]),
            _ => (Sign::Plus, s),
        };
        if body.is_empty() {
            return Err(StabilizerError::Parse(s.to_string()));
        }
        let letters = body
            .chars()
            .map(|c| match c {
                'I' | '_' | '.' => Ok(Letter::I),
                'X' => Ok(Letter::X),
                'Y' => Ok(Letter::Y),
                'Z' => Ok(Letter::Z),
                _ => Err(StabilizerError::Parse(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PauliOperator::from_letters(sign, &letters))
    }
}
