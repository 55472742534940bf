//! Seeded circuit ensembles, initial states, symmetric scramblers and the
//! bit-flip noise channel.
//!
//! A [`CircuitRealization`] is a flat list of [`Event`]s. Randomness is split
//! into independent ChaCha streams keyed by [`Stream`], so switching noise on
//! or off never perturbs the circuit layout or the measurement outcomes.

mod builders;
mod states;
mod symmetric;

use std::hash::{Hash, Hasher};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::stabilizer::{LocalOp, PauliOperator};

pub use builders::{build, build_hybrid, build_zizxx, build_zzx};
pub use states::{
    apply_noise_slot, initial_state, leak_check, sample_scrambler_images, scramble, InitialState,
};
pub use symmetric::{
    clifford_2q, sample_clifford_2q_index, sample_symmetric_clifford_2q, symmetric_cliffords_2q,
    symmetric_images_2q, SymplecticImage, CLIFFORD_2Q_ORDER,
};

/// Layer schedule of the ZIZ–XX ensemble, echoed into output metadata.
pub const ZIZXX_CONVENTION: &str = "per step: Z layer with ZZ(i,i+1) w.p. 1-p and ZIZ(i,i+2) w.p. 1-r_xx \
independently on every site; then X layer with X(i) w.p. p and XX(i,i+1) w.p. r_xx independently; periodic";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CircuitError {
    #[error("invalid ensemble parameters: {0}")]
    InvalidParams(String),
    #[error("invalid initial state: {0}")]
    InvalidState(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "zzx")]
    ZzX,
    #[serde(rename = "hybrid")]
    Hybrid,
    #[serde(rename = "zizxx")]
    ZizXx,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::ZzX => "zzx",
            Model::Hybrid => "hybrid",
            Model::ZizXx => "zizxx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleParams {
    pub model: Model,
    #[serde(rename = "L")]
    pub n_sites: usize,
    #[serde(rename = "T")]
    pub n_steps: usize,
    /// Probability of an X-type measurement.
    #[serde(default)]
    pub p: f64,
    /// Probability that a hybrid brick is a unitary.
    #[serde(default)]
    pub q: f64,
    /// Probability of a noise slot per qubit after every measurement layer.
    #[serde(default)]
    pub noise_rate: f64,
    /// ZIZ–XX model: probability of XX.
    #[serde(default)]
    pub r_xx: f64,
    pub boundary: Boundary,
    /// GHZ block width of the `Ψ±_r` states; defaults to `n_sites`.
    #[serde(default)]
    pub r_ghz: Option<usize>,
    /// Depth of the symmetric brickwork scrambler run before the circuit.
    #[serde(default)]
    pub scramble_depth: usize,
}

impl EnsembleParams {
    pub fn zzx(n_sites: usize, n_steps: usize, p: f64) -> Self {
        Self {
            model: Model::ZzX,
            n_sites,
            n_steps,
            p,
            q: 0.0,
            noise_rate: 0.0,
            r_xx: 0.0,
            boundary: Boundary::Open,
            r_ghz: None,
            scramble_depth: 0,
        }
    }

    pub fn hybrid(n_sites: usize, n_steps: usize, p: f64, q: f64) -> Self {
        Self {
            model: Model::Hybrid,
            q,
            ..Self::zzx(n_sites, n_steps, p)
        }
    }

    pub fn zizxx(n_sites: usize, n_steps: usize, p: f64, r_xx: f64) -> Self {
        Self {
            model: Model::ZizXx,
            r_xx,
            boundary: Boundary::Periodic,
            ..Self::zzx(n_sites, n_steps, p)
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_noise(mut self, noise_rate: f64) -> Self {
        self.noise_rate = noise_rate;
        self
    }

    pub fn with_r_ghz(mut self, r: usize) -> Self {
        self.r_ghz = Some(r);
        self
    }

    pub fn with_scramble_depth(mut self, depth: usize) -> Self {
        self.scramble_depth = depth;
        self
    }

    /// GHZ block width, `n_sites` unless overridden.
    pub fn block_width(&self) -> usize {
        self.r_ghz.unwrap_or(self.n_sites)
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        let bad = |m: String| Err(CircuitError::InvalidParams(m));
        for (name, v) in [
            ("p", self.p),
            ("q", self.q),
            ("noise_rate", self.noise_rate),
            ("r_xx", self.r_xx),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} is not a probability"));
            }
        }
        if self.n_sites < 2 || self.n_sites % 2 != 0 {
            return bad(format!("L = {} must be even and at least 2", self.n_sites));
        }
        let r = self.block_width();
        if r == 0 || r % 2 != 0 || r > self.n_sites {
            return bad(format!("r_ghz = {r} must be even, positive and at most L"));
        }
        match self.model {
            Model::Hybrid if self.boundary != Boundary::Open => {
                bad("the hybrid model uses open boundaries".into())
            }
            Model::ZizXx if self.boundary != Boundary::Periodic => {
                bad("the ZIZ-XX model uses periodic boundaries".into())
            }
            Model::ZizXx if self.n_sites < 4 => bad("the ZIZ-XX model needs L >= 4".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// `Z_i Z_{i+1}`.
    MeasureZz(usize),
    MeasureX(usize),
    /// `Z_i Z_{i+2}`.
    MeasureZiz(usize),
    /// `X_i X_{i+1}`.
    MeasureXx(usize),
    /// Symmetric gate `gate` on sites `(site, site + 1)`.
    Unitary {
        gate: u16,
        site: usize,
    },
    /// Candidate location of a bit-flip.
    NoiseSlot(usize),
}

/// Coarse event class used for record scopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KindTag {
    XType,
    ZType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub kind: EventKind,
    pub layer: u32,
}

impl Event {
    pub fn recordable(&self) -> bool {
        self.tag().is_some()
    }

    pub fn tag(&self) -> Option<KindTag> {
        match self.kind {
            EventKind::MeasureX(_) | EventKind::MeasureXx(_) => Some(KindTag::XType),
            EventKind::MeasureZz(_) | EventKind::MeasureZiz(_) => Some(KindTag::ZType),
            EventKind::Unitary { .. } | EventKind::NoiseSlot(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitRealization {
    pub params: EnsembleParams,
    pub seed: u64,
    pub events: Vec<Event>,
}

impl CircuitRealization {
    pub fn n_sites(&self) -> usize {
        self.params.n_sites
    }

    /// The measured operator of a recordable event.
    pub fn operator(&self, kind: EventKind) -> Option<PauliOperator> {
        self.local_operator(kind)
            .map(|op| op.to_operator(self.n_sites()))
    }

    /// [`operator`](Self::operator) in allocation-free form.
    pub fn local_operator(&self, kind: EventKind) -> Option<LocalOp> {
        let n = self.n_sites();
        let op = match kind {
            EventKind::MeasureZz(i) => LocalOp::zz(i, (i + 1) % n),
            EventKind::MeasureX(i) => LocalOp::x(i),
            EventKind::MeasureZiz(i) => LocalOp::zz(i, (i + 2) % n),
            EventKind::MeasureXx(i) => LocalOp::xx(i, (i + 1) % n),
            EventKind::Unitary { .. } | EventKind::NoiseSlot(_) => return None,
        };
        Some(op)
    }

    /// Stable hash of the event list for reproducibility checks.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv64::default();
        self.seed.hash(&mut h);
        self.events.hash(&mut h);
        h.finish()
    }

    pub fn count(&self, pred: impl Fn(&EventKind) -> bool) -> usize {
        self.events.iter().filter(|e| pred(&e.kind)).count()
    }
}

/// FNV-1a, used instead of `DefaultHasher` whose output may change between
/// toolchains.
struct Fnv64(u64);

impl Default for Fnv64 {
    fn default() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }
}

impl Hasher for Fnv64 {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

/// Purpose tags of the independent random streams of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Structure = 1,
    Gates = 2,
    NoisePlacement = 3,
    Outcomes = 4,
    NoiseBranches = 5,
}

/// Random stream `stream` of the realization with seed `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Seed of realization `index` under `master_seed` (splitmix64 finalizer).
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
