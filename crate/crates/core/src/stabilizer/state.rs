//! Mixed-state stabilizer groups without destabilizers.
//!
//! Generators live in up to `n` row slots, stored column-major: for every
//! site there is an x bit plane and a z bit plane over the slots, and the
//! exponent of `i` of each row is kept as two further planes. The rows that
//! anticommute with a local operator are then the XOR of a few planes, and
//! multiplying a set of rows by one generator costs one word operation per
//! site of that generator's support.
//!
//! The generators are kept in *pivot form* at all times: every row owns a
//! distinct column of the `x‖z` layout where it is the only row with a set
//! bit. Pivot form certifies independence and makes the membership test a
//! product of the few rows pivoted on the columns of the operator. All
//! mutations preserve it:
//!
//! * multiplying rows by the removed row `g` never touches the pivot
//!   columns of the remaining rows, because `g` is zero there;
//! * a new row is reduced against the existing pivots, given its first set
//!   column as pivot, and eliminated from every other row;
//! * after a gate only rows pivoted on a touched column need repair, and they
//!   always find a new pivot among the touched columns.
//!
//! The stabilizer *group* after any operation is unique, so the particular
//! generator choice never affects outcomes or signs.

use rand::Rng;

use super::clifford::CliffordAction;
use super::pauli::{PauliOperator, Sign};
use super::StabilizerError;

/// Result of testing whether `±op` belongs to a stabilizer group.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    Plus,
    Minus,
    Absent,
}

/// Outcome of a projective measurement.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Measurement {
    pub outcome: Sign,
    pub was_random: bool,
}

/// A positive Pauli string on one or two sites, usable without allocating.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalOp {
    terms: [(usize, u8); 2],
    len: u8,
}

impl LocalOp {
    const X: u8 = 1;
    const Z: u8 = 2;

    pub fn x(site: usize) -> Self {
        Self::one(site, Self::X)
    }

    pub fn z(site: usize) -> Self {
        Self::one(site, Self::Z)
    }

    pub fn xx(a: usize, b: usize) -> Self {
        Self::two(a, b, Self::X)
    }

    pub fn zz(a: usize, b: usize) -> Self {
        Self::two(a, b, Self::Z)
    }

    fn one(site: usize, bits: u8) -> Self {
        Self {
            terms: [(site, bits), (0, 0)],
            len: 1,
        }
    }

    fn two(a: usize, b: usize, bits: u8) -> Self {
        assert_ne!(a, b, "a two-site operator needs distinct sites");
        Self {
            terms: [(a, bits), (b, bits)],
            len: 2,
        }
    }

    fn terms(&self) -> &[(usize, u8)] {
        &self.terms[..self.len as usize]
    }

    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms().iter().map(|t| t.0)
    }

    pub fn to_operator(&self, n: usize) -> PauliOperator {
        let mut op = PauliOperator::identity(n);
        for &(s, b) in self.terms() {
            op.write_local_bits(s, b as u32);
        }
        op
    }
}

const NONE: u32 = u32::MAX;
const EMPTY: (usize, usize) = (usize::MAX, 0);

fn bounds(terms: &[(usize, u8)]) -> (usize, usize) {
    terms
        .iter()
        .fold(EMPTY, |(lo, hi), &(j, _)| (lo.min(j), hi.max(j)))
}

#[inline]
fn bit(words: &[u64], i: usize) -> bool {
    (words[i >> 6] >> (i & 63)) & 1 == 1
}

fn first_set(words: &[u64]) -> Option<usize> {
    words
        .iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// Exponent of `i` of `sign · ∏ σ` in the `X^x Z^z` ordering.
fn exponent(terms: &[(usize, u8)], sign: Sign) -> u8 {
    let y = terms.iter().filter(|t| t.1 == 3).count() as u8;
    (y + if sign == Sign::Minus { 2 } else { 0 }) % 4
}

#[derive(Clone, Debug)]
struct Scratch {
    mask: Vec<u64>,
    row_terms: Vec<(usize, u8)>,
    new_terms: Vec<(usize, u8)>,
    op_terms: Vec<(usize, u8)>,
    acc: PauliOperator,
    row: PauliOperator,
}

#[derive(Clone, Debug)]
pub struct StabilizerState {
    n: usize,
    /// Words per plane, one bit per row slot.
    rw: usize,
    /// `x[j * rw + w]`: x bits of site `j` over the row slots.
    x: Vec<u64>,
    z: Vec<u64>,
    /// Low and high bit of each row's exponent of `i`.
    lo: Vec<u64>,
    hi: Vec<u64>,
    active: Vec<u64>,
    pivot_of_row: Vec<u32>,
    row_of_pivot: Vec<u32>,
    /// Inclusive site range containing each row's support. It only grows,
    /// which keeps row extraction proportional to the range.
    reach: Vec<(usize, usize)>,
    rank: usize,
    scratch: Scratch,
}

impl StabilizerState {
    /// The maximally mixed state (rank 0).
    pub fn maximally_mixed(n: usize) -> Self {
        assert!(n > 0, "a register needs at least one qubit");
        let rw = n.div_ceil(64);
        Self {
            n,
            rw,
            x: vec![0; n * rw],
            z: vec![0; n * rw],
            lo: vec![0; rw],
            hi: vec![0; rw],
            active: vec![0; rw],
            pivot_of_row: vec![NONE; n],
            row_of_pivot: vec![NONE; 2 * n],
            reach: vec![EMPTY; n],
            rank: 0,
            scratch: Scratch {
                mask: vec![0; rw],
                row_terms: Vec::new(),
                new_terms: Vec::new(),
                op_terms: Vec::new(),
                acc: PauliOperator::identity(n),
                row: PauliOperator::identity(n),
            },
        }
    }

    /// Builds a state from generators, checking Hermiticity, commutation and
    /// independence.
    pub fn from_generators(
        n: usize,
        generators: Vec<PauliOperator>,
    ) -> Result<Self, StabilizerError> {
        let mut state = Self::maximally_mixed(n);
        for (i, g) in generators.iter().enumerate() {
            state.check_operator(g)?;
            for h in &generators[..i] {
                if g.anticommutes_unchecked(h) {
                    return Err(StabilizerError::InvalidGenerators(format!(
                        "{g} and {h} anticommute"
                    )));
                }
            }
            if state.contains_up_to_sign(g)? != Membership::Absent {
                return Err(StabilizerError::InvalidGenerators(format!(
                    "{g} is dependent on earlier generators"
                )));
            }
            let mut terms = Vec::new();
            g.push_terms(&mut terms);
            let slot = state.free_slot();
            state.insert(slot, &terms, g.phase_exponent());
        }
        state.debug_check();
        Ok(state)
    }

    /// `|0…0⟩`.
    pub fn zeros(n: usize) -> Self {
        let gens = (0..n).map(|j| PauliOperator::z_string(n, &[j])).collect();
        Self::from_generators(n, gens).expect("single-site Z generators are valid")
    }

    /// `|+…+⟩`.
    pub fn plus(n: usize) -> Self {
        let gens = (0..n).map(|j| PauliOperator::x_string(n, &[j])).collect();
        Self::from_generators(n, gens).expect("single-site X generators are valid")
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_pure(&self) -> bool {
        self.rank == self.n
    }

    /// Current generators in slot order (in pivot form).
    pub fn generators(&self) -> Vec<PauliOperator> {
        (0..self.n)
            .filter(|&i| bit(&self.active, i))
            .map(|i| {
                let mut row = PauliOperator::identity(self.n);
                self.load_row(i, &mut row);
                row
            })
            .collect()
    }

    fn check_operator(&self, op: &PauliOperator) -> Result<(), StabilizerError> {
        if op.n_sites() != self.n {
            return Err(StabilizerError::SizeMismatch {
                expected: self.n,
                found: op.n_sites(),
            });
        }
        if !op.is_hermitian() {
            return Err(StabilizerError::NonHermitian);
        }
        Ok(())
    }

    fn check_measurable(&self, op: &PauliOperator) -> Result<(), StabilizerError> {
        self.check_operator(op)?;
        if op.is_identity() {
            return Err(StabilizerError::IdentityOperator);
        }
        Ok(())
    }

    fn check_local(&self, op: &LocalOp) -> Result<(), StabilizerError> {
        match op.sites().find(|&s| s >= self.n) {
            Some(s) => Err(StabilizerError::InvalidClifford(format!(
                "site {s} outside a register of {} qubits",
                self.n
            ))),
            None => Ok(()),
        }
    }

    /// Column `c` of the `x‖z` layout as a bit plane over row slots.
    #[inline]
    fn plane(&self, c: usize) -> &[u64] {
        let rw = self.rw;
        if c < self.n {
            &self.x[c * rw..(c + 1) * rw]
        } else {
            &self.z[(c - self.n) * rw..(c - self.n + 1) * rw]
        }
    }

    fn free_slot(&self) -> usize {
        (0..self.n)
            .find(|&i| !bit(&self.active, i))
            .expect("a full-rank state has no free slot")
    }

    #[inline]
    fn row_exp(&self, i: usize) -> u8 {
        bit(&self.lo, i) as u8 | ((bit(&self.hi, i) as u8) << 1)
    }

    /// Transposes row `i` out of the planes into site-indexed words.
    fn row_words(&self, i: usize, xs: &mut [u64], zs: &mut [u64]) {
        xs.fill(0);
        zs.fill(0);
        let (lo, hi) = self.reach[i];
        if lo > hi {
            return;
        }
        let (w, b) = (i >> 6, i & 63);
        let rw = self.rw;
        if rw == 1 {
            let planes = self.x[lo..=hi].iter().zip(&self.z[lo..=hi]);
            for (j, (&xw, &zw)) in (lo..).zip(planes) {
                xs[j >> 6] |= ((xw >> b) & 1) << (j & 63);
                zs[j >> 6] |= ((zw >> b) & 1) << (j & 63);
            }
        } else {
            for j in lo..=hi {
                xs[j >> 6] |= ((self.x[j * rw + w] >> b) & 1) << (j & 63);
                zs[j >> 6] |= ((self.z[j * rw + w] >> b) & 1) << (j & 63);
            }
        }
    }

    /// Writes the support of row `i` into `out` and returns its exponent.
    fn row_terms(&self, i: usize, out: &mut Vec<(usize, u8)>) -> u8 {
        out.clear();
        let mut buf = [0u64; 8];
        let sw = self.rw;
        if sw <= 4 {
            let (xs, zs) = buf.split_at_mut(4);
            self.row_words(i, &mut xs[..sw], &mut zs[..sw]);
            for k in 0..sw {
                let mut m = xs[k] | zs[k];
                while m != 0 {
                    let b = m.trailing_zeros() as usize;
                    m &= m - 1;
                    let bits = ((xs[k] >> b) & 1) | (((zs[k] >> b) & 1) << 1);
                    out.push((k * 64 + b, bits as u8));
                }
            }
        } else {
            let mut row = PauliOperator::identity(self.n);
            self.load_row(i, &mut row);
            row.push_terms(out);
        }
        self.row_exp(i)
    }

    fn load_row(&self, i: usize, out: &mut PauliOperator) {
        let (xs, zs) = out.words_mut();
        self.row_words(i, xs, zs);
        out.set_exp(self.row_exp(i));
    }

    /// Slots anticommuting with `terms`, written to `mask`.
    fn anticommuting(&self, terms: &[(usize, u8)], mask: &mut [u64]) -> Option<usize> {
        mask.fill(0);
        for &(j, b) in terms {
            let o = j * self.rw;
            if b & 1 != 0 {
                for (m, &zw) in mask.iter_mut().zip(&self.z[o..o + self.rw]) {
                    *m ^= zw;
                }
            }
            if b & 2 != 0 {
                for (m, &xw) in mask.iter_mut().zip(&self.x[o..o + self.rw]) {
                    *m ^= xw;
                }
            }
        }
        first_set(mask)
    }

    /// Adds the constant exponent `e` to the rows in word mask `m`.
    #[inline]
    fn add_exp(&mut self, w: usize, m: u64, e: u8) {
        if e & 1 != 0 {
            let carry = self.lo[w] & m;
            self.lo[w] ^= m;
            self.hi[w] ^= carry;
        }
        if e & 2 != 0 {
            self.hi[w] ^= m;
        }
    }

    /// Right-multiplies every row in `mask` by the commuting row `i^e·terms`.
    fn mul_rows_by(&mut self, mask: &[u64], terms: &[(usize, u8)], e: u8) {
        let rw = self.rw;
        for (w, &m) in mask.iter().enumerate() {
            if m == 0 {
                continue;
            }
            // (X^a Z^b)(X^c Z^d) = (-1)^{b·c} X^{a+c} Z^{b+d}
            let mut cross = 0u64;
            for &(j, b) in terms {
                if b & 1 != 0 {
                    cross ^= self.z[j * rw + w];
                }
            }
            for &(j, b) in terms {
                if b & 1 != 0 {
                    self.x[j * rw + w] ^= m;
                }
                if b & 2 != 0 {
                    self.z[j * rw + w] ^= m;
                }
            }
            self.hi[w] ^= cross & m;
            self.add_exp(w, m, e);
        }
        let (tlo, thi) = bounds(terms);
        for (w, &m) in mask.iter().enumerate() {
            let mut m = m;
            while m != 0 {
                let r = w * 64 + m.trailing_zeros() as usize;
                m &= m - 1;
                let (lo, hi) = self.reach[r];
                self.reach[r] = (lo.min(tlo), hi.max(thi));
            }
        }
    }

    fn remove_row(&mut self, i: usize, terms: &[(usize, u8)]) {
        let (w, clear) = (i >> 6, !(1u64 << (i & 63)));
        for &(j, _) in terms {
            self.x[j * self.rw + w] &= clear;
            self.z[j * self.rw + w] &= clear;
        }
        self.lo[w] &= clear;
        self.hi[w] &= clear;
        self.active[w] &= clear;
        let pivot = self.pivot_of_row[i];
        self.row_of_pivot[pivot as usize] = NONE;
        self.pivot_of_row[i] = NONE;
        self.reach[i] = EMPTY;
        self.rank -= 1;
    }

    fn set_pivot(&mut self, row: usize, column: usize) {
        self.pivot_of_row[row] = column as u32;
        self.row_of_pivot[column] = row as u32;
    }

    /// Rows pivoted on a column where `terms` has a set bit.
    fn pivot_rows<'a>(&'a self, terms: &'a [(usize, u8)]) -> impl Iterator<Item = usize> + 'a {
        let n = self.n;
        terms
            .iter()
            .flat_map(move |&(j, b)| [(b & 1 != 0).then_some(j), (b & 2 != 0).then_some(n + j)])
            .flatten()
            .map(|c| self.row_of_pivot[c])
            .filter(|&r| r != NONE)
            .map(|r| r as usize)
    }

    /// `acc ← i^e·terms · ∏ rows pivoted on its columns`. The result is zero
    /// on every pivot column because each row is zero on the others' pivots.
    fn reduce_into(&mut self, terms: &[(usize, u8)], e: u8) -> bool {
        let mut acc = std::mem::replace(&mut self.scratch.acc, PauliOperator::identity(0));
        let mut row = std::mem::replace(&mut self.scratch.row, PauliOperator::identity(0));
        acc.clear();
        for &(j, b) in terms {
            acc.write_local_bits(j, b as u32);
        }
        acc.set_exp(e);
        let mut any = false;
        for r in self.pivot_rows(terms) {
            self.load_row(r, &mut row);
            acc.mul_assign_unchecked(&row);
            any = true;
        }
        self.scratch.acc = acc;
        self.scratch.row = row;
        any
    }

    /// Inserts the Hermitian row `i^e·terms` into the free slot `slot`. The row
    /// must commute with the group and be independent of it.
    fn insert(&mut self, slot: usize, terms: &[(usize, u8)], e: u8) {
        let mut new_terms = std::mem::take(&mut self.scratch.new_terms);
        let e = if self.reduce_into(terms, e) {
            new_terms.clear();
            self.scratch.acc.push_terms(&mut new_terms);
            self.scratch.acc.phase_exponent()
        } else {
            new_terms.clear();
            new_terms.extend_from_slice(terms);
            e
        };
        let pivot = new_terms
            .iter()
            .filter(|t| t.1 & 1 != 0)
            .map(|t| t.0)
            .min()
            .or_else(|| new_terms.iter().map(|t| self.n + t.0).min())
            .expect("inserted row must be independent of the group");
        let (w, b) = (slot >> 6, 1u64 << (slot & 63));
        for &(j, bits) in &new_terms {
            if bits & 1 != 0 {
                self.x[j * self.rw + w] |= b;
            }
            if bits & 2 != 0 {
                self.z[j * self.rw + w] |= b;
            }
        }
        self.add_exp(w, b, e);
        self.active[w] |= b;
        self.reach[slot] = bounds(&new_terms);
        self.rank += 1;
        self.set_pivot(slot, pivot);
        let mut mask = std::mem::take(&mut self.scratch.mask);
        mask.copy_from_slice(self.plane(pivot));
        mask[w] &= !b;
        self.mul_rows_by(&mask, &new_terms, e);
        self.scratch.mask = mask;
        self.scratch.new_terms = new_terms;
    }

    /// Folds the lowest anticommuting row `g` into every other anticommuting
    /// row and removes it. Returns the freed slot, or `None` if `terms`
    /// commutes with the whole group.
    fn eliminate_anticommuting(&mut self, terms: &[(usize, u8)]) -> Option<usize> {
        let mut mask = std::mem::take(&mut self.scratch.mask);
        let found = self.anticommuting(terms, &mut mask);
        if let Some(g) = found {
            let mut g_terms = std::mem::take(&mut self.scratch.row_terms);
            let e = self.row_terms(g, &mut g_terms);
            mask[g >> 6] &= !(1u64 << (g & 63));
            self.mul_rows_by(&mask, &g_terms, e);
            self.remove_row(g, &g_terms);
            self.scratch.row_terms = g_terms;
        }
        self.scratch.mask = mask;
        found
    }

    /// Sign of `i^e·terms` in the group, assuming it commutes with every row.
    fn membership(&mut self, terms: &[(usize, u8)], e: u8) -> Membership {
        if !self.reduce_into(terms, e) || !self.scratch.acc.is_identity() {
            return Membership::Absent;
        }
        // residue = op · g for the group element g with op's masks, so
        // g = sign(residue) · op.
        match self.scratch.acc.sign() {
            Some(Sign::Plus) => Membership::Plus,
            Some(Sign::Minus) => Membership::Minus,
            None => unreachable!("commuting Hermitian product is Hermitian"),
        }
    }

    pub fn contains_up_to_sign(&self, op: &PauliOperator) -> Result<Membership, StabilizerError> {
        self.check_operator(op)?;
        if op.is_identity() {
            return Ok(if op.sign() == Some(Sign::Plus) {
                Membership::Plus
            } else {
                Membership::Minus
            });
        }
        let mut terms = Vec::new();
        op.push_terms(&mut terms);
        let mut mask = vec![0; self.rw];
        if self.anticommuting(&terms, &mut mask).is_some() {
            return Ok(Membership::Absent);
        }
        let mut acc = op.clone();
        let mut row = PauliOperator::identity(self.n);
        let rows: Vec<usize> = self.pivot_rows(&terms).collect();
        for r in rows {
            self.load_row(r, &mut row);
            acc.mul_assign_unchecked(&row);
        }
        if !acc.is_identity() {
            return Ok(Membership::Absent);
        }
        Ok(match acc.sign() {
            Some(Sign::Plus) => Membership::Plus,
            Some(Sign::Minus) => Membership::Minus,
            None => unreachable!("commuting Hermitian product is Hermitian"),
        })
    }

    fn measure_terms(
        &mut self,
        terms: &[(usize, u8)],
        sign: Sign,
        forced: Option<Sign>,
        coin: impl FnOnce() -> Sign,
    ) -> Result<Measurement, StabilizerError> {
        if let Some(g) = self.eliminate_anticommuting(terms) {
            let outcome = forced.unwrap_or_else(coin);
            self.insert(g, terms, exponent(terms, sign * outcome));
            self.debug_check();
            return Ok(Measurement {
                outcome,
                was_random: true,
            });
        }
        let relative = match self.membership(terms, exponent(terms, sign)) {
            Membership::Plus => Some(Sign::Plus),
            Membership::Minus => Some(Sign::Minus),
            Membership::Absent => None,
        };
        match relative {
            Some(outcome) => {
                if forced.is_some_and(|f| f != outcome) {
                    return Err(StabilizerError::Incompatible {
                        deterministic: outcome,
                    });
                }
                Ok(Measurement {
                    outcome,
                    was_random: false,
                })
            }
            None => {
                let outcome = forced.unwrap_or_else(coin);
                let slot = self.free_slot();
                self.insert(slot, terms, exponent(terms, sign * outcome));
                self.debug_check();
                Ok(Measurement {
                    outcome,
                    was_random: true,
                })
            }
        }
    }

    fn measure_operator(
        &mut self,
        op: &PauliOperator,
        forced: Option<Sign>,
        coin: impl FnOnce() -> Sign,
    ) -> Result<Measurement, StabilizerError> {
        self.check_measurable(op)?;
        let mut terms = std::mem::take(&mut self.scratch.op_terms);
        terms.clear();
        op.push_terms(&mut terms);
        let sign = op.sign().expect("checked Hermitian");
        let result = self.measure_terms(&terms, sign, forced, coin);
        self.scratch.op_terms = terms;
        result
    }

    /// Projective measurement of `op`. A random outcome is `forced` if given,
    /// otherwise a fair coin from `rng`. Forcing a sign that contradicts a
    /// deterministic outcome returns [`StabilizerError::Incompatible`] and
    /// leaves the state unchanged.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        op: &PauliOperator,
        forced: Option<Sign>,
        rng: &mut R,
    ) -> Result<Measurement, StabilizerError> {
        self.measure_operator(op, forced, || Sign::from_bit(rng.random::<bool>()))
    }

    /// Measurement whose random branch is fixed to `outcome`.
    pub fn measure_forced(
        &mut self,
        op: &PauliOperator,
        outcome: Sign,
    ) -> Result<Measurement, StabilizerError> {
        self.measure_operator(op, Some(outcome), || outcome)
    }

    /// [`measure`](Self::measure) for a local operator.
    pub fn measure_local<R: Rng + ?Sized>(
        &mut self,
        op: LocalOp,
        forced: Option<Sign>,
        rng: &mut R,
    ) -> Result<Measurement, StabilizerError> {
        self.check_local(&op)?;
        self.measure_terms(op.terms(), Sign::Plus, forced, || {
            Sign::from_bit(rng.random::<bool>())
        })
    }

    /// [`measure_forced`](Self::measure_forced) for a local operator.
    pub fn measure_local_forced(
        &mut self,
        op: LocalOp,
        outcome: Sign,
    ) -> Result<Measurement, StabilizerError> {
        self.check_local(&op)?;
        self.measure_terms(op.terms(), Sign::Plus, Some(outcome), || outcome)
    }

    /// Dephasing channel `ρ → Π₊ρΠ₊ + Π₋ρΠ₋` for the projectors of `op`.
    pub fn dephase(&mut self, op: &PauliOperator) -> Result<(), StabilizerError> {
        self.check_measurable(op)?;
        let mut terms = Vec::new();
        op.push_terms(&mut terms);
        self.eliminate_anticommuting(&terms);
        self.debug_check();
        Ok(())
    }

    /// [`dephase`](Self::dephase) for a local operator.
    pub fn dephase_local(&mut self, op: LocalOp) -> Result<(), StabilizerError> {
        self.check_local(&op)?;
        self.eliminate_anticommuting(op.terms());
        self.debug_check();
        Ok(())
    }

    /// Conjugates every generator by the gate acting on `sites`.
    pub fn apply_clifford(
        &mut self,
        gate: &CliffordAction,
        sites: &[usize],
    ) -> Result<(), StabilizerError> {
        gate.check_sites(self.n, sites)?;
        let k = sites.len();
        assert!(k <= 8, "gates act on at most 8 qubits");
        let lut = gate.lut();
        let rw = self.rw;
        let mut old = [0u64; 16];
        let site_lo = *sites.iter().min().expect("gates act on at least one site");
        let site_hi = *sites.iter().max().expect("gates act on at least one site");
        for w in 0..rw {
            let act = self.active[w];
            if act == 0 {
                continue;
            }
            for (j, &s) in sites.iter().enumerate() {
                old[2 * j] = self.x[s * rw + w];
                old[2 * j + 1] = self.z[s * rw + w];
            }
            // Bits map linearly; the phase is tabulated per local pattern.
            for (pattern, &(_, e)) in lut.iter().enumerate().skip(1) {
                if e == 0 {
                    continue;
                }
                let mut m = act;
                for (g, &plane) in old[..2 * k].iter().enumerate() {
                    m &= if (pattern >> g) & 1 == 1 {
                        plane
                    } else {
                        !plane
                    };
                }
                if m != 0 {
                    self.add_exp(w, m, e);
                }
            }
            let mut hit = old[..2 * k].iter().fold(0, |a, p| a | p);
            while hit != 0 {
                let r = w * 64 + hit.trailing_zeros() as usize;
                hit &= hit - 1;
                let (lo, hi) = self.reach[r];
                self.reach[r] = (lo.min(site_lo), hi.max(site_hi));
            }
            for (j, &s) in sites.iter().enumerate() {
                let mut new = [0u64; 2];
                for (g, &plane) in old[..2 * k].iter().enumerate() {
                    let image = lut[1 << g].0 >> (2 * j);
                    if image & 1 != 0 {
                        new[0] ^= plane;
                    }
                    if image & 2 != 0 {
                        new[1] ^= plane;
                    }
                }
                self.x[s * rw + w] = new[0];
                self.z[s * rw + w] = new[1];
            }
        }
        // Rows pivoted on a touched column lose their pivot. Their
        // restrictions to the touched columns stay independent, so each finds
        // a new pivot there.
        let mut touched: Vec<usize> = sites.iter().flat_map(|&s| [s, self.n + s]).collect();
        touched.sort_unstable();
        let mut displaced: Vec<usize> = Vec::with_capacity(2 * k);
        for &c in &touched {
            let r = self.row_of_pivot[c];
            if r != NONE {
                displaced.push(r as usize);
                self.row_of_pivot[c] = NONE;
                self.pivot_of_row[r as usize] = NONE;
            }
        }
        displaced.sort_unstable();
        let mut terms = std::mem::take(&mut self.scratch.row_terms);
        let mut mask = std::mem::take(&mut self.scratch.mask);
        for d in displaced {
            let c = *touched
                .iter()
                .find(|&&c| self.row_of_pivot[c] == NONE && bit(self.plane(c), d))
                .expect("displaced rows stay independent on the touched columns");
            self.set_pivot(d, c);
            let e = self.row_terms(d, &mut terms);
            mask.copy_from_slice(self.plane(c));
            mask[d >> 6] &= !(1u64 << (d & 63));
            self.mul_rows_by(&mask, &terms, e);
        }
        self.scratch.row_terms = terms;
        self.scratch.mask = mask;
        self.debug_check();
        Ok(())
    }

    /// Conjugation by a Pauli operator: flips the sign of every
    /// anticommuting generator.
    pub fn apply_pauli(&mut self, op: &PauliOperator) -> Result<(), StabilizerError> {
        self.check_operator(op)?;
        let mut terms = Vec::new();
        op.push_terms(&mut terms);
        self.flip_anticommuting(&terms);
        Ok(())
    }

    /// [`apply_pauli`](Self::apply_pauli) for a local operator.
    pub fn apply_pauli_local(&mut self, op: LocalOp) -> Result<(), StabilizerError> {
        self.check_local(&op)?;
        self.flip_anticommuting(op.terms());
        Ok(())
    }

    fn flip_anticommuting(&mut self, terms: &[(usize, u8)]) {
        let mut mask = std::mem::take(&mut self.scratch.mask);
        self.anticommuting(terms, &mut mask);
        for (h, m) in self.hi.iter_mut().zip(&mask) {
            *h ^= m;
        }
        self.scratch.mask = mask;
    }

    /// `true` iff both states describe the same signed stabilizer group.
    pub fn same_group(&self, other: &StabilizerState) -> bool {
        self.n == other.n
            && self.rank() == other.rank()
            && other
                .generators()
                .iter()
                .all(|r| self.contains_up_to_sign(r) == Ok(Membership::Plus))
    }

    /// Residue of `op` against the pivots: `op` times the rows pivoted on
    /// its columns.
    fn reduce(&self, op: &PauliOperator) -> PauliOperator {
        let mut terms = Vec::new();
        op.push_terms(&mut terms);
        let mut acc = op.clone();
        let mut row = PauliOperator::identity(self.n);
        for r in self.pivot_rows(&terms) {
            self.load_row(r, &mut row);
            acc.mul_assign_unchecked(&row);
        }
        acc
    }

    /// Splits the group as `G_X × G_Z`: returns X-type and Z-type
    /// generators, or `None` if the group has no such decomposition.
    pub fn split_xz(&self) -> Option<(Vec<PauliOperator>, Vec<PauliOperator>)> {
        // Echelon form over the x columns; rows left without x bits span the
        // Z-type subgroup.
        let mut work = self.generators();
        let mut used = vec![false; work.len()];
        for c in 0..self.n {
            if let Some(i) = (0..work.len()).find(|&i| !used[i] && work[i].column(c)) {
                used[i] = true;
                let pivot = work[i].clone();
                for (j, row) in work.iter_mut().enumerate() {
                    if j != i && row.column(c) {
                        row.mul_assign_unchecked(&pivot);
                    }
                }
            }
        }
        let (x_rows, z_rows): (Vec<_>, Vec<_>) =
            work.into_iter().zip(used).partition(|(_, is_x)| *is_x);
        let z_rows: Vec<PauliOperator> = z_rows.into_iter().map(|(r, _)| r).collect();
        let z_group = StabilizerState::from_generators(self.n, z_rows.clone())
            .expect("subset of independent commuting generators");
        // Each remaining row must become X-type after multiplying by Z-type
        // elements, i.e. its z part must lie in the span of G_Z.
        let mut xs = Vec::with_capacity(x_rows.len());
        for (row, _) in x_rows {
            let reduced = z_group.reduce(&row);
            if !reduced.is_x_type() {
                return None;
            }
            xs.push(reduced);
        }
        Some((xs, z_rows))
    }

    /// Full invariant check: Hermitian rows, pairwise commutation, pivot
    /// form (which implies independence) and empty free slots.
    pub fn check_invariants(&self) -> Result<(), String> {
        let active: usize = self.active.iter().map(|w| w.count_ones() as usize).sum();
        if active != self.rank || self.rank > self.n {
            return Err(format!(
                "rank {} disagrees with {active} active slots",
                self.rank
            ));
        }
        let mut rows = Vec::new();
        for i in 0..self.n {
            let mut row = PauliOperator::identity(self.n);
            self.load_row(i, &mut row);
            if !bit(&self.active, i) {
                if !row.is_identity() || row.phase_exponent() != 0 || self.pivot_of_row[i] != NONE {
                    return Err(format!("free slot {i} is not empty"));
                }
                continue;
            }
            if !row.is_hermitian() {
                return Err(format!("row {row} is not Hermitian"));
            }
            let pivot = self.pivot_of_row[i];
            if pivot == NONE || self.row_of_pivot[pivot as usize] != i as u32 {
                return Err(format!("row {row} has no consistent pivot"));
            }
            let plane = self.plane(pivot as usize);
            for (w, &word) in plane.iter().enumerate() {
                let expected = if w == i >> 6 { 1u64 << (i & 63) } else { 0 };
                if word != expected {
                    return Err(format!("pivot column of {row} is not exclusive"));
                }
            }
            let (lo, hi) = self.reach[i];
            let outside = (0..self.n)
                .filter(|j| *j < lo || *j > hi)
                .any(|j| bit(&self.x[j * self.rw..], i) || bit(&self.z[j * self.rw..], i));
            if outside {
                return Err(format!("row {row} has support outside its recorded range"));
            }
            rows.push(row);
        }
        for (i, a) in rows.iter().enumerate() {
            for b in &rows[i + 1..] {
                if a.anticommutes_unchecked(b) {
                    return Err(format!("{a} and {b} anticommute"));
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn debug_check(&self) {
        #[cfg(test)]
        if let Err(e) = self.check_invariants() {
            panic!("stabilizer invariant violated: {e}");
        }
    }
}
