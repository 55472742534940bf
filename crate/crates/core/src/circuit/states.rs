use rand::Rng;
use serde::{Deserialize, Serialize};

use super::symmetric::{sample_symmetric_clifford_2q, symmetric_cliffords_2q, symmetric_images_2q};
use super::CircuitError;
use crate::stabilizer::{LocalOp, PauliOperator, Sign, StabilizerState};

/// Initial states of the circuits. `Psi*(r)` carry an `r`-qubit GHZ block
/// centred in the chain with every other qubit in `|+⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    GhzPlus,
    GhzMinus,
    PsiPlus(usize),
    PsiMinus(usize),
    ProductPlusX,
}

impl InitialState {
    /// GHZ kinds become block states of width `r`; others are unchanged.
    pub fn with_block(self, r: usize) -> Self {
        match self {
            InitialState::GhzPlus => InitialState::PsiPlus(r),
            InitialState::GhzMinus => InitialState::PsiMinus(r),
            other => other,
        }
    }
}

/// Stabilizers `{X_j outside} ∪ {Z_j Z_{j+1} inside} ∪ {±∏_{block} X_j}`.
/// Block widths must be even; full GHZ states may have any size.
pub fn initial_state(kind: InitialState, n_sites: usize) -> Result<StabilizerState, CircuitError> {
    let (r, sign) = match kind {
        InitialState::GhzPlus => (n_sites, Sign::Plus),
        InitialState::GhzMinus => (n_sites, Sign::Minus),
        InitialState::PsiPlus(r) => (r, Sign::Plus),
        InitialState::PsiMinus(r) => (r, Sign::Minus),
        InitialState::ProductPlusX => return Ok(StabilizerState::plus(n_sites)),
    };
    let is_block = matches!(kind, InitialState::PsiPlus(_) | InitialState::PsiMinus(_));
    if r == 0 || r > n_sites || (is_block && r % 2 != 0) {
        return Err(CircuitError::InvalidState(format!(
            "block width {r} must be even, positive and at most {n_sites}"
        )));
    }
    let start = (n_sites - r) / 2;
    let block = start..start + r;
    let mut gens: Vec<PauliOperator> = (0..n_sites)
        .filter(|j| !block.contains(j))
        .map(|j| PauliOperator::x_string(n_sites, &[j]))
        .collect();
    gens.extend((start..start + r - 1).map(|j| PauliOperator::z_string(n_sites, &[j, j + 1])));
    let sites: Vec<usize> = block.collect();
    gens.push(PauliOperator::x_string(n_sites, &sites).with_sign(sign));
    StabilizerState::from_generators(n_sites, gens)
        .map_err(|e| CircuitError::InvalidState(e.to_string()))
}

/// Applies `depth` layers of open brickwork symmetric gates.
pub fn scramble<R: Rng + ?Sized>(state: &mut StabilizerState, depth: usize, rng: &mut R) {
    let n = state.n_sites();
    let gates = symmetric_cliffords_2q();
    for s in 0..depth {
        for i in (s % 2..n.saturating_sub(1)).step_by(2) {
            let (id, _) = sample_symmetric_clifford_2q(rng);
            state
                .apply_clifford(&gates[id as usize], &[i, i + 1])
                .expect("brickwork sites are valid");
        }
    }
}

/// `true` iff some element of the group generated by `images` has an
/// all-ones X part, i.e. the all-ones vector lies in the GF(2) span of the
/// images' x masks.
pub fn leak_check(images: &[PauliOperator], n_sites: usize) -> bool {
    let words = n_sites.div_ceil(64);
    let mut target = vec![u64::MAX; words];
    if n_sites % 64 != 0 {
        target[words - 1] = (1u64 << (n_sites % 64)) - 1;
    }
    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let reduce = |v: &mut Vec<u64>, basis: &[(usize, Vec<u64>)]| {
        for (pivot, row) in basis {
            if (v[pivot / 64] >> (pivot % 64)) & 1 == 1 {
                for (a, b) in v.iter_mut().zip(row) {
                    *a ^= b;
                }
            }
        }
    };
    for img in images {
        let mut v = img.x_words().to_vec();
        reduce(&mut v, &basis);
        if let Some(w) = v.iter().position(|&w| w != 0) {
            let pivot = w * 64 + v[w].trailing_zeros() as usize;
            for (_, row) in basis.iter_mut() {
                if (row[pivot / 64] >> (pivot % 64)) & 1 == 1 {
                    for (a, b) in row.iter_mut().zip(&v) {
                        *a ^= b;
                    }
                }
            }
            basis.push((pivot, v));
        }
    }
    reduce(&mut target, &basis);
    target.iter().all(|&w| w == 0)
}

/// Images (up to sign) of the `L − 1` generators `Z_j Z_{j+1}` under a
/// random depth-`depth` symmetric brickwork.
///
/// Signs do not matter for [`leak_check`], so only the symplectic part of
/// each gate is applied, column-wise: every qubit holds its `x` and `z`
/// columns as bitsets over the generators.
pub fn sample_scrambler_images<R: Rng + ?Sized>(
    n_sites: usize,
    depth: usize,
    rng: &mut R,
) -> Vec<PauliOperator> {
    let rows = n_sites - 1;
    let words = rows.div_ceil(64);
    // Column `j` occupies `x[j * words..(j + 1) * words]`.
    let mut x = vec![0u64; n_sites * words];
    let mut z = vec![0u64; n_sites * words];
    for j in 0..rows {
        z[j * words + j / 64] |= 1 << (j % 64);
        z[(j + 1) * words + j / 64] |= 1 << (j % 64);
    }
    let images = symmetric_images_2q();
    for s in 0..depth {
        for i in (s % 2..n_sites - 1).step_by(2) {
            let (id, _) = sample_symmetric_clifford_2q(rng);
            let img = images[id as usize];
            for w in 0..words {
                let (a, b) = (i * words + w, (i + 1) * words + w);
                // Generators X_a, Z_a, X_b, Z_b; output bit k of an image is
                // 0 = x_a, 1 = z_a, 2 = x_b, 3 = z_b.
                let old = [x[a], z[a], x[b], z[b]];
                let mut new = [0u64; 4];
                for (g, col) in old.into_iter().enumerate() {
                    for (k, out) in new.iter_mut().enumerate() {
                        if (img[g] >> k) & 1 == 1 {
                            *out ^= col;
                        }
                    }
                }
                [x[a], z[a], x[b], z[b]] = new;
            }
        }
    }
    (0..rows)
        .map(|r| {
            let mut op = PauliOperator::identity(n_sites);
            let bit = |c: &[u64], j: usize| (c[j * words + r / 64] >> (r % 64)) & 1 == 1;
            for j in 0..n_sites {
                op.set_x(j, bit(&x, j));
                op.set_z(j, bit(&z, j));
            }
            op.with_sign(Sign::Plus)
        })
        .collect()
}

/// Trajectory of the bit-flip channel `ρ → ρ/2 + XρX/2` on `site`: applies
/// `X_site` with probability 1/2 and reports whether it did.
pub fn apply_noise_slot<R: Rng + ?Sized>(
    state: &mut StabilizerState,
    site: usize,
    rng: &mut R,
) -> bool {
    let flip = rng.random::<bool>();
    if flip {
        state
            .apply_pauli_local(LocalOp::x(site))
            .expect("site lies in the register");
    }
    flip
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stabilizer::{CliffordAction, Membership};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    #[test]
    fn state_examples() {
        let ghz = initial_state(InitialState::GhzMinus, 2).unwrap();
        assert!(
            ghz.same_group(&StabilizerState::from_generators(2, vec![p("ZZ"), p("-XX")]).unwrap())
        );
        let psi = initial_state(InitialState::PsiPlus(2), 4).unwrap();
        let expect = ["XIII", "IZZI", "IXXI", "IIIX"].map(p).to_vec();
        assert!(psi.same_group(&StabilizerState::from_generators(4, expect).unwrap()));
        for l in [2, 4, 8] {
            let ghz = initial_state(InitialState::GhzPlus, l).unwrap();
            assert!(ghz.is_pure());
            assert_eq!(
                ghz.contains_up_to_sign(&PauliOperator::parity(l)).unwrap(),
                Membership::Plus
            );
        }
        assert!(initial_state(InitialState::PsiPlus(3), 4).is_err());
        assert!(initial_state(InitialState::PsiPlus(6), 4).is_err());
    }

    #[test]
    fn scrambling_conserves_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = PauliOperator::parity(8);
        assert!({
            let mut s = initial_state(InitialState::GhzPlus, 8).unwrap();
            scramble(&mut s, 0, &mut rng);
            s.same_group(&initial_state(InitialState::GhzPlus, 8).unwrap())
        });
        for _ in 0..100 {
            let mut s = initial_state(InitialState::GhzMinus, 8).unwrap();
            scramble(&mut s, 8, &mut rng);
            assert_eq!(s.rank(), 8);
            assert_eq!(s.contains_up_to_sign(&g).unwrap(), Membership::Minus);
        }
    }

    #[test]
    fn leak_examples() {
        let zz: Vec<PauliOperator> = (0..3)
            .map(|j| PauliOperator::z_string(4, &[j, j + 1]))
            .collect();
        assert!(!leak_check(&zz, 4));

        let sx = CliffordAction::sqrt_x()
            .tensor(&CliffordAction::sqrt_x())
            .unwrap();
        let img = sx.conjugate(&p("ZZ"), &[0, 1]).unwrap();
        assert!(img.x_words()[0] == 0b11);
        assert!(leak_check(&[img], 2));

        // Re-choosing the generating set leaves the answer unchanged.
        let a = p("XZXI");
        let b = p("IXZX");
        let ab = a.compose(&b).unwrap();
        assert!(leak_check(&[a.clone(), b.clone()], 4));
        assert!(leak_check(&[ab.clone().with_sign(Sign::Plus), b], 4));
        assert!(!leak_check(&[a], 4));
    }

    #[test]
    fn column_images_match_tableau_conjugation() {
        // Replays the same gate sequence on full operators.
        let (n, depth) = (6, 6);
        let images = sample_scrambler_images(n, depth, &mut ChaCha8Rng::seed_from_u64(8));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let gates = symmetric_cliffords_2q();
        let mut ops: Vec<PauliOperator> = (0..n - 1)
            .map(|j| PauliOperator::z_string(n, &[j, j + 1]))
            .collect();
        for s in 0..depth {
            for i in (s % 2..n - 1).step_by(2) {
                let (id, _) = sample_symmetric_clifford_2q(&mut rng);
                for op in ops.iter_mut() {
                    *op = gates[id as usize].conjugate(op, &[i, i + 1]).unwrap();
                }
            }
        }
        for (a, b) in ops.iter().zip(&images) {
            assert_eq!(a.x_words(), b.x_words());
            assert_eq!(a.z_words(), b.z_words());
        }
    }

    #[test]
    fn noise_flips_only_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut flips = 0;
        for _ in 0..1000 {
            let mut s = StabilizerState::zeros(1);
            if apply_noise_slot(&mut s, 0, &mut rng) {
                flips += 1;
                assert_eq!(s.contains_up_to_sign(&p("Z")).unwrap(), Membership::Minus);
            }
            let mut plus = StabilizerState::plus(1);
            apply_noise_slot(&mut plus, 0, &mut rng);
            assert!(plus.same_group(&StabilizerState::plus(1)));
        }
        assert!((flips as f64 - 500.0).abs() < 3.0 * 250f64.sqrt());

        let mut ghz = initial_state(InitialState::GhzPlus, 3).unwrap();
        while !apply_noise_slot(&mut ghz, 0, &mut rng) {}
        assert_eq!(
            ghz.contains_up_to_sign(&p("ZZI")).unwrap(),
            Membership::Minus
        );
        assert_eq!(
            ghz.contains_up_to_sign(&p("XXX")).unwrap(),
            Membership::Plus
        );
    }
}
