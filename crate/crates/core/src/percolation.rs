//! Bond-percolation picture of the ZzX circuit.
//!
//! Site `(t, i)` is qubit `i` after `t` steps, `t = 0..=T`. Step `t`
//! occupies the horizontal bond `(t, i)–(t, i+1)` when `Z_i Z_{i+1}` is
//! measured and the vertical bond `(t, i)–(t+1, i)` when `X_i` is *not*
//! measured. The `r` central sites of row 0 are joined before the first step,
//! standing in for the GHZ block of `Ψ±_r`. The block sign survives, and the
//! LXE indicator equals 1, exactly when this seed cluster reaches row `T`.
//! On the cylinder the same bottom-to-top criterion is used.

use rand::Rng;
use rayon::prelude::*;

use crate::circuit::{
    derive_seed, stream_rng, Boundary, CircuitRealization, EventKind, Model, Stream,
};
use crate::lxe::LxeEstimate;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PercolationError {
    #[error("bond mapping needs an unscrambled ZzX circuit, got {0}")]
    UnsupportedCircuit(String),
    #[error("invalid seed block: {0}")]
    InvalidBlock(String),
    #[error("need at least one sample")]
    NoSamples,
}

/// Disjoint sets with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] as usize != a {
            let grand = self.parent[self.parent[a] as usize];
            self.parent[a] = grand;
            a = grand as usize;
        }
        a
    }

    /// Joins the sets of `a` and `b`; `false` if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
        true
    }

    pub fn connected(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }
}

/// Occupied bonds of an `L × T` lattice, stored row by row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondConfiguration {
    n_sites: usize,
    n_steps: usize,
    boundary: Boundary,
    h_bonds: Vec<bool>,
    v_bonds: Vec<bool>,
}

impl BondConfiguration {
    pub fn empty(n_sites: usize, n_steps: usize, boundary: Boundary) -> Self {
        Self::filled(n_sites, n_steps, boundary, false)
    }

    pub fn full(n_sites: usize, n_steps: usize, boundary: Boundary) -> Self {
        Self::filled(n_sites, n_steps, boundary, true)
    }

    fn filled(n_sites: usize, n_steps: usize, boundary: Boundary, value: bool) -> Self {
        assert!(n_sites >= 2, "the lattice needs at least two columns");
        let width = h_width(n_sites, boundary);
        Self {
            n_sites,
            n_steps,
            boundary,
            h_bonds: vec![value; n_steps * width],
            v_bonds: vec![value; n_steps * n_sites],
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Horizontal bonds per row: `L − 1` open, `L` periodic.
    pub fn h_width(&self) -> usize {
        h_width(self.n_sites, self.boundary)
    }

    pub fn h_bond(&self, t: usize, i: usize) -> bool {
        self.h_bonds[t * self.h_width() + i]
    }

    pub fn set_h_bond(&mut self, t: usize, i: usize, value: bool) {
        let w = self.h_width();
        self.h_bonds[t * w + i] = value;
    }

    pub fn v_bond(&self, t: usize, i: usize) -> bool {
        self.v_bonds[t * self.n_sites + i]
    }

    pub fn set_v_bond(&mut self, t: usize, i: usize, value: bool) {
        self.v_bonds[t * self.n_sites + i] = value;
    }

    pub fn n_bonds(&self) -> usize {
        self.h_bonds.len() + self.v_bonds.len()
    }

    pub fn n_occupied(&self) -> usize {
        self.h_bonds
            .iter()
            .chain(&self.v_bonds)
            .filter(|&&b| b)
            .count()
    }
}

fn h_width(n_sites: usize, boundary: Boundary) -> usize {
    match boundary {
        Boundary::Open => n_sites - 1,
        Boundary::Periodic => n_sites,
    }
}

/// Reads the bond lattice off an unscrambled ZzX realization. Noise slots
/// are ignored.
pub fn circuit_to_bonds(
    circuit: &CircuitRealization,
) -> Result<BondConfiguration, PercolationError> {
    let params = &circuit.params;
    if params.model != Model::ZzX || params.scramble_depth > 0 {
        return Err(PercolationError::UnsupportedCircuit(format!(
            "{} with scramble depth {}",
            params.model.as_str(),
            params.scramble_depth
        )));
    }
    let mut bonds = BondConfiguration::empty(params.n_sites, params.n_steps, params.boundary);
    bonds.v_bonds.fill(true);
    for event in &circuit.events {
        let t = event.layer as usize / 2;
        match event.kind {
            EventKind::MeasureZz(i) => bonds.set_h_bond(t, i, true),
            EventKind::MeasureX(i) => bonds.set_v_bond(t, i, false),
            EventKind::NoiseSlot(_) => {}
            other => {
                return Err(PercolationError::UnsupportedCircuit(format!(
                    "unexpected event {other:?}"
                )))
            }
        }
    }
    Ok(bonds)
}

/// `true` iff the `r` central sites of row 0 connect to row `T`.
pub fn spans(bonds: &BondConfiguration, r: usize) -> Result<bool, PercolationError> {
    let (l, t_max) = (bonds.n_sites, bonds.n_steps);
    if r == 0 || r > l {
        return Err(PercolationError::InvalidBlock(format!(
            "r = {r} must lie in 1..={l}"
        )));
    }
    if bonds.boundary == Boundary::Periodic && r != l {
        return Err(PercolationError::InvalidBlock(format!(
            "periodic lattices need r = L = {l}, got {r}"
        )));
    }
    let site = |t: usize, i: usize| t * l + i;
    let mut uf = UnionFind::new((t_max + 1) * l);
    let start = (l - r) / 2;
    for i in start + 1..start + r {
        uf.union(site(0, start), site(0, i));
    }
    let width = bonds.h_width();
    for t in 0..t_max {
        for i in 0..width {
            if bonds.h_bond(t, i) {
                uf.union(site(t, i), site(t, (i + 1) % l));
            }
        }
        for i in 0..l {
            if bonds.v_bond(t, i) {
                uf.union(site(t, i), site(t + 1, i));
            }
        }
    }
    let seed = site(0, start);
    Ok((0..l).any(|i| uf.connected(seed, site(t_max, i))))
}

/// Monte Carlo spanning probability with every bond occupied w.p. `1 − p`.
/// Sample `k` uses its own derived seed, so the estimate is independent of
/// the thread count and samples are coupled monotonically across `p`.
pub fn crossing_probability_mc(
    n_sites: usize,
    n_steps: usize,
    p: f64,
    r: usize,
    boundary: Boundary,
    n_samples: u64,
    seed: u64,
) -> Result<LxeEstimate, PercolationError> {
    if n_samples == 0 {
        return Err(PercolationError::NoSamples);
    }
    let occupied = 1.0 - p.clamp(0.0, 1.0);
    let hits = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(derive_seed(seed, k), Stream::Structure);
            let mut bonds = BondConfiguration::empty(n_sites, n_steps, boundary);
            for b in bonds.h_bonds.iter_mut().chain(bonds.v_bonds.iter_mut()) {
                *b = rng.random::<f64>() < occupied;
            }
            spans(&bonds, r).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(LxeEstimate::from_counts(hits, n_samples))
}
