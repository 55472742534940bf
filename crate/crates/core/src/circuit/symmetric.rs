//! Two-qubit Clifford group and its subgroup commuting with `X⊗X`.
//!
//! The 11520 elements (up to global phase) are enumerated once as 720
//! symplectic images of `(X₁, Z₁, X₂, Z₂)` times 16 sign choices. Local
//! patterns use the layout of [`CliffordAction`]: bit `2j` is `x_j`, bit
//! `2j + 1` is `z_j`.

use std::sync::OnceLock;

use rand::Rng;

use crate::stabilizer::{CliffordAction, PauliOperator, Sign};

/// Number of elements of the two-qubit Clifford group modulo phases.
pub const CLIFFORD_2Q_ORDER: usize = 11520;

/// Symplectic image of one generator set, as local patterns of `(X₁, Z₁, X₂, Z₂)`.
pub type SymplecticImage = [u8; 4];

struct Tables {
    symplectic: Vec<SymplecticImage>,
    /// For each group index, the position in `symmetric` if the element
    /// commutes with `X⊗X`.
    accepted: Vec<Option<u16>>,
    symmetric: Vec<CliffordAction>,
    symmetric_images: Vec<SymplecticImage>,
}

fn omega(a: u8, b: u8) -> bool {
    // x bits are even positions, z bits odd positions.
    let ax = a & 0b0101;
    let az = (a >> 1) & 0b0101;
    let bx = b & 0b0101;
    let bz = (b >> 1) & 0b0101;
    ((ax & bz) ^ (az & bx)).count_ones() % 2 == 1
}

fn local_op(pattern: u8, sign: Sign) -> PauliOperator {
    let mut op = PauliOperator::identity(2);
    op.write_local_bits(0, (pattern & 3) as u32);
    op.write_local_bits(1, ((pattern >> 2) & 3) as u32);
    op.with_sign(sign)
}

fn action(images: SymplecticImage, signs: u8) -> CliffordAction {
    let sign = |k: u8| Sign::from_bit((signs >> k) & 1 == 1);
    let xs = vec![local_op(images[0], sign(0)), local_op(images[2], sign(2))];
    let zs = vec![local_op(images[1], sign(1)), local_op(images[3], sign(3))];
    CliffordAction::new(xs, zs).expect("enumerated images are symplectic")
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut symplectic = Vec::with_capacity(720);
        for x1 in 1..16u8 {
            for z1 in 1..16u8 {
                if !omega(x1, z1) {
                    continue;
                }
                for x2 in 1..16u8 {
                    if omega(x1, x2) || omega(z1, x2) {
                        continue;
                    }
                    for z2 in 1..16u8 {
                        if omega(x2, z2) && !omega(x1, z2) && !omega(z1, z2) {
                            symplectic.push([x1, z1, x2, z2]);
                        }
                    }
                }
            }
        }
        debug_assert_eq!(symplectic.len() * 16, CLIFFORD_2Q_ORDER);

        let parity = PauliOperator::parity(2);
        let mut accepted = Vec::with_capacity(CLIFFORD_2Q_ORDER);
        let mut symmetric = Vec::new();
        let mut symmetric_images = Vec::new();
        for images in &symplectic {
            // X⊗X maps to the product of the two X images; skip the
            // construction unless the masks already match.
            if images[0] ^ images[2] != 0b0101 {
                accepted.extend(std::iter::repeat(None).take(16));
                continue;
            }
            for signs in 0..16u8 {
                let gate = action(*images, signs);
                if gate.maps_to(&parity, &parity) {
                    accepted.push(Some(symmetric.len() as u16));
                    symmetric.push(gate);
                    symmetric_images.push(*images);
                } else {
                    accepted.push(None);
                }
            }
        }
        Tables {
            symplectic,
            accepted,
            symmetric,
            symmetric_images,
        }
    })
}

/// Element `index` of the two-qubit Clifford group, `index < 11520`.
pub fn clifford_2q(index: usize) -> CliffordAction {
    let t = tables();
    action(t.symplectic[index / 16], (index % 16) as u8)
}

/// All two-qubit Cliffords commuting with `X⊗X`, in a fixed order.
pub fn symmetric_cliffords_2q() -> &'static [CliffordAction] {
    &tables().symmetric
}

/// Symplectic images of the gates in [`symmetric_cliffords_2q`].
pub fn symmetric_images_2q() -> &'static [SymplecticImage] {
    &tables().symmetric_images
}

/// Uniform element of the two-qubit Clifford group, as an index.
pub fn sample_clifford_2q_index<R: Rng + ?Sized>(rng: &mut R) -> usize {
    rng.random_range(0..CLIFFORD_2Q_ORDER)
}

/// Draws uniform two-qubit Cliffords until one commutes with `X⊗X`.
/// Returns the index into [`symmetric_cliffords_2q`] and the number of draws.
pub fn sample_symmetric_clifford_2q<R: Rng + ?Sized>(rng: &mut R) -> (u16, u32) {
    let t = tables();
    let mut draws = 0;
    loop {
        draws += 1;
        if let Some(id) = t.accepted[sample_clifford_2q_index(rng)] {
            return (id, draws);
        }
    }
}
