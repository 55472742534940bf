//! Local Clifford gates given by their Pauli-transfer table.

use super::pauli::{PauliOperator, Sign};
use super::StabilizerError;

/// Largest gate width for which conjugation goes through a lookup table.
const MAX_LUT_QUBITS: usize = 4;

/// A Clifford unitary `U` on `k` qubits, specified by the signed images
/// `U X_j U†` and `U Z_j U†`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CliffordAction {
    k: usize,
    x_images: Vec<PauliOperator>,
    z_images: Vec<PauliOperator>,
    /// Image of every local `X^x Z^z` pattern: (new bits, phase exponent).
    lut: Vec<(u16, u8)>,
}

impl std::fmt::Debug for CliffordAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CliffordAction")
            .field("x_images", &self.x_images)
            .field("z_images", &self.z_images)
            .finish()
    }
}

impl CliffordAction {
    /// Validates that the images are Hermitian and satisfy the canonical
    /// commutation relations of `{X_j, Z_j}`.
    pub fn new(
        x_images: Vec<PauliOperator>,
        z_images: Vec<PauliOperator>,
    ) -> Result<Self, StabilizerError> {
        let k = x_images.len();
        if k == 0 || z_images.len() != k {
            return Err(StabilizerError::InvalidClifford(
                "need one X image and one Z image per qubit".into(),
            ));
        }
        if k > MAX_LUT_QUBITS {
            return Err(StabilizerError::InvalidClifford(format!(
                "gates wider than {MAX_LUT_QUBITS} qubits are not supported"
            )));
        }
        let all: Vec<&PauliOperator> = x_images.iter().chain(&z_images).collect();
        for img in &all {
            if img.n_sites() != k {
                return Err(StabilizerError::InvalidClifford(format!(
                    "image {img} does not act on {k} qubits"
                )));
            }
            if !img.is_hermitian() || img.is_identity() {
                return Err(StabilizerError::InvalidClifford(format!(
                    "image {img} must be a non-identity Hermitian Pauli"
                )));
            }
        }
        for a in 0..2 * k {
            for b in a + 1..2 * k {
                // X_j and Z_j (indices j and k+j) anticommute, all else commute.
                let should_anticommute = b == a + k && a < k;
                if all[a].anticommutes_unchecked(all[b]) != should_anticommute {
                    return Err(StabilizerError::InvalidClifford(format!(
                        "images {} and {} break the commutation relations",
                        all[a], all[b]
                    )));
                }
            }
        }
        let mut lut = Vec::with_capacity(1 << (2 * k));
        for pattern in 0..(1u32 << (2 * k)) {
            let mut img = PauliOperator::identity(k);
            for j in 0..k {
                if (pattern >> (2 * j)) & 1 == 1 {
                    img.mul_assign_unchecked(&x_images[j]);
                }
                if (pattern >> (2 * j + 1)) & 1 == 1 {
                    img.mul_assign_unchecked(&z_images[j]);
                }
            }
            let mut bits = 0u16;
            for j in 0..k {
                bits |= (img.local_bits(j) as u16) << (2 * j);
            }
            lut.push((bits, img.phase_exponent()));
        }
        Ok(Self {
            k,
            x_images,
            z_images,
            lut,
        })
    }

    pub fn identity(k: usize) -> Self {
        let xs = (0..k).map(|j| PauliOperator::x_string(k, &[j])).collect();
        let zs = (0..k).map(|j| PauliOperator::z_string(k, &[j])).collect();
        Self::new(xs, zs).expect("identity is a valid Clifford")
    }

    /// Parses images written as Pauli strings, e.g. `(["+XX","+IX"], ["+ZI","+ZZ"])`.
    pub fn from_strings(x_images: &[&str], z_images: &[&str]) -> Result<Self, StabilizerError> {
        let parse = |v: &[&str]| -> Result<Vec<PauliOperator>, StabilizerError> {
            v.iter().map(|s| s.parse()).collect()
        };
        Self::new(parse(x_images)?, parse(z_images)?)
    }

    pub fn swap() -> Self {
        Self::from_strings(&["IX", "XI"], &["IZ", "ZI"]).unwrap()
    }

    /// CNOT with control on the first qubit.
    pub fn cnot() -> Self {
        Self::from_strings(&["XX", "IX"], &["ZI", "ZZ"]).unwrap()
    }

    pub fn hadamard() -> Self {
        Self::from_strings(&["Z"], &["X"]).unwrap()
    }

    pub fn phase_s() -> Self {
        Self::from_strings(&["Y"], &["Z"]).unwrap()
    }

    /// `√X = e^{iπX/4}`: `X → X`, `Z → Y`.
    pub fn sqrt_x() -> Self {
        Self::from_strings(&["X"], &["Y"]).unwrap()
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &CliffordAction) -> Result<Self, StabilizerError> {
        let k = self.k + other.k;
        let embed = |op: &PauliOperator, offset: usize| {
            let mut out = PauliOperator::identity(k);
            for j in 0..op.n_sites() {
                out.write_local_bits(j + offset, op.local_bits(j));
            }
            out.with_sign(op.sign().expect("images are Hermitian"))
        };
        let xs = self
            .x_images
            .iter()
            .map(|p| embed(p, 0))
            .chain(other.x_images.iter().map(|p| embed(p, self.k)))
            .collect();
        let zs = self
            .z_images
            .iter()
            .map(|p| embed(p, 0))
            .chain(other.z_images.iter().map(|p| embed(p, self.k)))
            .collect();
        Self::new(xs, zs)
    }

    pub fn n_qubits(&self) -> usize {
        self.k
    }

    pub fn x_image(&self, j: usize) -> &PauliOperator {
        &self.x_images[j]
    }

    pub fn z_image(&self, j: usize) -> &PauliOperator {
        &self.z_images[j]
    }

    /// Conjugates `op` in place on the listed sites: `op ← U op U†`.
    #[inline]
    /// Image `(bits, phase)` of every local pattern, indexed by pattern.
    pub(crate) fn lut(&self) -> &[(u16, u8)] {
        &self.lut
    }

    pub(crate) fn conjugate_unchecked(&self, op: &mut PauliOperator, sites: &[usize]) {
        let mut pattern = 0usize;
        for (j, &s) in sites.iter().enumerate() {
            pattern |= (op.local_bits(s) as usize) << (2 * j);
        }
        if pattern == 0 {
            return;
        }
        let (bits, phase) = self.lut[pattern];
        for (j, &s) in sites.iter().enumerate() {
            op.write_local_bits(s, ((bits >> (2 * j)) & 3) as u32);
        }
        op.add_phase(phase);
    }

    /// Returns `U op U†` for `op` acting on the full register.
    pub fn conjugate(
        &self,
        op: &PauliOperator,
        sites: &[usize],
    ) -> Result<PauliOperator, StabilizerError> {
        self.check_sites(op.n_sites(), sites)?;
        let mut out = op.clone();
        self.conjugate_unchecked(&mut out, sites);
        Ok(out)
    }

    pub(crate) fn check_sites(&self, n: usize, sites: &[usize]) -> Result<(), StabilizerError> {
        if sites.len() != self.k {
            return Err(StabilizerError::InvalidClifford(format!(
                "gate acts on {} qubits but {} sites were given",
                self.k,
                sites.len()
            )));
        }
        for (i, &s) in sites.iter().enumerate() {
            if s >= n || sites[..i].contains(&s) {
                return Err(StabilizerError::InvalidClifford(format!(
                    "invalid site list {sites:?} for {n} qubits"
                )));
            }
        }
        Ok(())
    }

    /// `true` iff `U from U† = to` exactly, sign included.
    pub fn maps_to(&self, from: &PauliOperator, to: &PauliOperator) -> bool {
        let sites: Vec<usize> = (0..self.k).collect();
        match self.conjugate(from, &sites) {
            Ok(img) => img.masks_equal(to) && img.sign() == to.sign(),
            Err(_) => false,
        }
    }

    /// `true` iff the gate commutes with `X^{⊗k}`.
    pub fn preserves_parity(&self) -> bool {
        let parity = PauliOperator::parity(self.k);
        self.maps_to(&parity, &parity.clone().with_sign(Sign::Plus))
    }
}
