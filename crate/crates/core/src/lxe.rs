//! Linear cross-entropy through record compatibility.
//!
//! For stabilizer states `p_m^σ` is either zero or the same constant for
//! every compatible record, so `χ(ρ, σ)` equals the probability that a
//! record sampled from the `ρ` circuit is compatible with the `σ` circuit.
//! A record is replayed on `σ` with its random outcomes forced; a
//! contradiction with a deterministic outcome ends the replay with `χ = 0`.
//! Measurements outside the recorded scope are replaced by the dephasing
//! channel in the replay, and the `σ` circuit is noiseless.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    self, apply_noise_slot, derive_seed, initial_state, stream_rng, symmetric_cliffords_2q,
    CircuitError, CircuitRealization, EnsembleParams, EventKind, InitialState, KindTag, Stream,
};
use crate::stabilizer::{Sign, StabilizerError, StabilizerState};

/// Which measurement outcomes enter the record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    All,
    XOnly,
    ZOnly,
}

impl Scope {
    pub fn includes(self, tag: KindTag) -> bool {
        match self {
            Scope::All => true,
            Scope::XOnly => tag == KindTag::XType,
            Scope::ZOnly => tag == KindTag::ZType,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scope::All => "all",
            Scope::XOnly => "x_only",
            Scope::ZOnly => "z_only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordEntry {
    pub event_index: usize,
    pub outcome: Sign,
    pub tag: KindTag,
    pub was_random: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub scope: Scope,
    pub entries: Vec<RecordEntry>,
}

/// Random streams driving one sampled record.
pub struct RecordRngs {
    pub outcomes: ChaCha8Rng,
    pub noise: ChaCha8Rng,
}

impl RecordRngs {
    /// Streams of record `k` of the realization with seed `seed`.
    pub fn new(seed: u64, k: u64) -> Self {
        let s = derive_seed(seed, k);
        Self {
            outcomes: stream_rng(s, Stream::Outcomes),
            noise: stream_rng(s, Stream::NoiseBranches),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LxeEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

impl LxeEstimate {
    pub fn from_counts(successes: u64, n_samples: u64) -> Self {
        let mean = successes as f64 / n_samples as f64;
        Self {
            mean,
            stderr: (mean * (1.0 - mean) / n_samples as f64).sqrt(),
            n_samples,
        }
    }
}

fn check_sizes(
    circuit: &CircuitRealization,
    state: &StabilizerState,
) -> Result<(), StabilizerError> {
    if circuit.n_sites() != state.n_sites() {
        return Err(StabilizerError::SizeMismatch {
            expected: circuit.n_sites(),
            found: state.n_sites(),
        });
    }
    Ok(())
}

fn apply_unitary(state: &mut StabilizerState, gate: u16, site: usize) {
    state
        .apply_clifford(&symmetric_cliffords_2q()[gate as usize], &[site, site + 1])
        .expect("gate sites come from a validated builder");
}

/// Runs the circuit on `state`, recording in-scope outcomes. Out-of-scope
/// measurements still collapse the state; noise slots fire with
/// probability 1/2 each.
pub fn sample_record(
    circuit: &CircuitRealization,
    mut state: StabilizerState,
    scope: Scope,
    rngs: &mut RecordRngs,
) -> Result<MeasurementRecord, StabilizerError> {
    check_sizes(circuit, &state)?;
    let mut entries = Vec::new();
    for (event_index, event) in circuit.events.iter().enumerate() {
        match event.kind {
            EventKind::Unitary { gate, site } => apply_unitary(&mut state, gate, site),
            EventKind::NoiseSlot(site) => {
                apply_noise_slot(&mut state, site, &mut rngs.noise);
            }
            kind => {
                let op = circuit.local_operator(kind).expect("measurement event");
                let m = state.measure_local(op, None, &mut rngs.outcomes)?;
                let tag = event.tag().expect("measurement event");
                if scope.includes(tag) {
                    entries.push(RecordEntry {
                        event_index,
                        outcome: m.outcome,
                        tag,
                        was_random: m.was_random,
                    });
                }
            }
        }
    }
    Ok(MeasurementRecord { scope, entries })
}

/// `true` iff `record` has non-zero probability in the noiseless circuit
/// started from `sigma`.
pub fn replay_is_compatible(
    circuit: &CircuitRealization,
    mut sigma: StabilizerState,
    record: &MeasurementRecord,
) -> Result<bool, StabilizerError> {
    check_sizes(circuit, &sigma)?;
    let mut next = record.entries.iter().peekable();
    for (event_index, event) in circuit.events.iter().enumerate() {
        match event.kind {
            EventKind::Unitary { gate, site } => apply_unitary(&mut sigma, gate, site),
            EventKind::NoiseSlot(_) => {}
            kind => {
                let op = circuit.local_operator(kind).expect("measurement event");
                let tag = event.tag().expect("measurement event");
                if !record.scope.includes(tag) {
                    sigma.dephase_local(op)?;
                    continue;
                }
                let entry = match next.next() {
                    Some(e) if e.event_index == event_index => e,
                    _ => return Ok(false),
                };
                match sigma.measure_local_forced(op, entry.outcome) {
                    Ok(_) => {}
                    Err(StabilizerError::Incompatible { .. }) => return Ok(false),
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(next.peek().is_none())
}

/// Compatibility indicator of one record sampled from `rho`.
pub fn chi_for_realization(
    circuit: &CircuitRealization,
    rho: &StabilizerState,
    sigma: &StabilizerState,
    scope: Scope,
    rngs: &mut RecordRngs,
) -> Result<bool, StabilizerError> {
    let record = sample_record(circuit, rho.clone(), scope, rngs)?;
    replay_is_compatible(circuit, sigma.clone(), &record)
}

/// Specification of an LXE estimate over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct LxeRequest {
    pub params: EnsembleParams,
    pub rho: InitialState,
    pub sigma: InitialState,
    pub scope: Scope,
    pub n_circuits: u64,
    /// Records per circuit; only used when `noise_rate > 0`.
    pub records_per_circuit: u64,
    pub master_seed: u64,
}

impl LxeRequest {
    pub fn new(params: EnsembleParams, n_circuits: u64, master_seed: u64) -> Self {
        Self {
            params,
            rho: InitialState::GhzPlus,
            sigma: InitialState::GhzMinus,
            scope: Scope::All,
            n_circuits,
            records_per_circuit: 4,
            master_seed,
        }
    }

    pub fn states(mut self, rho: InitialState, sigma: InitialState) -> Self {
        self.rho = rho;
        self.sigma = sigma;
        self
    }

    pub fn scope(mut self, scope: Scope) -> Self {
        self.scope = scope;
        self
    }

    pub fn records_per_circuit(mut self, k: u64) -> Self {
        self.records_per_circuit = k;
        self
    }

    fn records(&self) -> u64 {
        if self.params.noise_rate > 0.0 {
            self.records_per_circuit.max(1)
        } else {
            1
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LxeError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Stabilizer(#[from] StabilizerError),
    #[error("need at least one circuit")]
    NoSamples,
}

/// Number of compatible records of circuit `index` of the ensemble.
pub fn realization_successes(req: &LxeRequest, index: u64) -> Result<u64, LxeError> {
    let seed = derive_seed(req.master_seed, index);
    let circuit = circuit::build(&req.params, seed)?;
    let r = req.params.block_width();
    let n = req.params.n_sites;
    let rho = initial_state(req.rho.with_block(r), n)?;
    let sigma = initial_state(req.sigma.with_block(r), n)?;
    let mut successes = 0;
    for k in 0..req.records() {
        let mut rngs = RecordRngs::new(seed, k);
        successes += chi_for_realization(&circuit, &rho, &sigma, req.scope, &mut rngs)? as u64;
    }
    Ok(successes)
}

/// Mean compatibility over `n_circuits` realizations (times
/// `records_per_circuit` noise trajectories when noisy). The result does not
/// depend on the rayon pool size.
pub fn estimate_lxe(req: &LxeRequest) -> Result<LxeEstimate, LxeError> {
    if req.n_circuits == 0 {
        return Err(LxeError::NoSamples);
    }
    req.params.validate()?;
    let successes = (0..req.n_circuits)
        .into_par_iter()
        .map(|i| realization_successes(req, i))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(LxeEstimate::from_counts(
        successes,
        req.n_circuits * req.records(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Event;

    fn handmade(n: usize, kinds: &[EventKind]) -> CircuitRealization {
        CircuitRealization {
            params: EnsembleParams::zzx(n.max(2), 1, 0.5),
            seed: 0,
            events: kinds.iter().map(|&kind| Event { kind, layer: 0 }).collect(),
        }
    }

    fn ghz(sign: Sign, n: usize) -> StabilizerState {
        let kind = if sign == Sign::Plus {
            InitialState::GhzPlus
        } else {
            InitialState::GhzMinus
        };
        initial_state(kind, n).unwrap()
    }

    #[test]
    fn record_examples() {
        let c = handmade(2, &[EventKind::MeasureZz(0)]);
        let rec = sample_record(
            &c,
            ghz(Sign::Plus, 2),
            Scope::All,
            &mut RecordRngs::new(1, 0),
        )
        .unwrap();
        assert_eq!(rec.entries.len(), 1);
        assert_eq!(rec.entries[0].outcome, Sign::Plus);
        assert!(!rec.entries[0].was_random);

        let c = handmade(2, &[EventKind::MeasureX(0), EventKind::MeasureX(1)]);
        let rec = sample_record(
            &c,
            StabilizerState::plus(2),
            Scope::All,
            &mut RecordRngs::new(1, 0),
        )
        .unwrap();
        assert!(rec
            .entries
            .iter()
            .all(|e| e.outcome == Sign::Plus && !e.was_random));

        for k in 0..20 {
            let rec = sample_record(
                &c,
                ghz(Sign::Plus, 2),
                Scope::All,
                &mut RecordRngs::new(1, k),
            )
            .unwrap();
            assert!(rec.entries[0].was_random && !rec.entries[1].was_random);
            assert_eq!(rec.entries[0].outcome * rec.entries[1].outcome, Sign::Plus);
        }
    }

    #[test]
    fn inconsistent_record_is_rejected() {
        let mut c = handmade(2, &[EventKind::MeasureX(0), EventKind::MeasureX(0)]);
        c.params.n_sites = 2;
        let rec = MeasurementRecord {
            scope: Scope::All,
            entries: vec![
                RecordEntry {
                    event_index: 0,
                    outcome: Sign::Plus,
                    tag: KindTag::XType,
                    was_random: true,
                },
                RecordEntry {
                    event_index: 1,
                    outcome: Sign::Minus,
                    tag: KindTag::XType,
                    was_random: false,
                },
            ],
        };
        for sigma in [
            ghz(Sign::Plus, 2),
            StabilizerState::zeros(2),
            StabilizerState::plus(2),
        ] {
            assert!(!replay_is_compatible(&c, sigma, &rec).unwrap());
        }
    }

    #[test]
    fn zz_only_circuits_are_compatible() {
        let c = handmade(
            4,
            &[
                EventKind::MeasureZz(0),
                EventKind::MeasureZz(2),
                EventKind::MeasureZz(1),
            ],
        );
        for k in 0..10 {
            assert!(chi_for_realization(
                &c,
                &ghz(Sign::Plus, 4),
                &ghz(Sign::Plus, 4),
                Scope::All,
                &mut RecordRngs::new(2, k)
            )
            .unwrap());
            assert!(chi_for_realization(
                &c,
                &ghz(Sign::Minus, 4),
                &ghz(Sign::Plus, 4),
                Scope::All,
                &mut RecordRngs::new(2, k)
            )
            .unwrap());
        }
    }

    #[test]
    fn full_x_layer_distinguishes_ghz_states() {
        let kinds: Vec<EventKind> = (0..4).map(EventKind::MeasureX).collect();
        let c = handmade(4, &kinds);
        for k in 0..10 {
            let chi = chi_for_realization(
                &c,
                &ghz(Sign::Plus, 4),
                &ghz(Sign::Minus, 4),
                Scope::All,
                &mut RecordRngs::new(3, k),
            )
            .unwrap();
            assert!(!chi);
        }
        // Dropping one X outcome from the record hides the parity.
        let c = handmade(4, &kinds);
        let mut rec = sample_record(
            &c,
            ghz(Sign::Plus, 4),
            Scope::All,
            &mut RecordRngs::new(3, 0),
        )
        .unwrap();
        rec.entries.pop();
        let mut short = c.clone();
        short.events.pop();
        assert!(replay_is_compatible(&short, ghz(Sign::Minus, 4), &rec).unwrap());
    }

    #[test]
    fn extremes_of_the_ensemble() {
        for l in [4, 16] {
            let zero =
                estimate_lxe(&LxeRequest::new(EnsembleParams::zzx(l, l, 0.0), 20, 1)).unwrap();
            assert_eq!((zero.mean, zero.stderr), (1.0, 0.0));
            let one =
                estimate_lxe(&LxeRequest::new(EnsembleParams::zzx(l, l, 1.0), 20, 1)).unwrap();
            assert_eq!((one.mean, one.stderr), (0.0, 0.0));
        }
    }

    #[test]
    fn identical_states_give_one() {
        for params in [
            EnsembleParams::zzx(8, 8, 0.5),
            EnsembleParams::hybrid(8, 8, 0.5, 0.5),
            EnsembleParams::zizxx(8, 8, 0.5, 0.5),
        ] {
            for scope in [Scope::All, Scope::XOnly, Scope::ZOnly] {
                let req = LxeRequest::new(params.clone(), 30, 5)
                    .states(InitialState::GhzMinus, InitialState::GhzMinus)
                    .scope(scope);
                assert_eq!(estimate_lxe(&req).unwrap().mean, 1.0);
            }
        }
    }

    #[test]
    fn noiseless_indicator_does_not_depend_on_the_record() {
        for (i, params) in [
            EnsembleParams::zzx(12, 12, 0.5),
            EnsembleParams::hybrid(12, 12, 0.4, 0.5),
            EnsembleParams::zizxx(12, 12, 0.5, 0.5),
            EnsembleParams::zzx(12, 12, 0.3).with_scramble_depth(12),
        ]
        .into_iter()
        .enumerate()
        {
            for s in 0..25u64 {
                let c = circuit::build(&params, s * 7 + i as u64).unwrap();
                let rho = ghz(Sign::Plus, 12);
                let sigma = ghz(Sign::Minus, 12);
                let a =
                    chi_for_realization(&c, &rho, &sigma, Scope::All, &mut RecordRngs::new(s, 0))
                        .unwrap();
                let b =
                    chi_for_realization(&c, &rho, &sigma, Scope::All, &mut RecordRngs::new(s, 1))
                        .unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn x_records_ignore_bit_flip_noise() {
        let clean = EnsembleParams::zzx(12, 12, 0.45);
        let noisy = clean.clone().with_noise(0.1);
        for s in 0..50 {
            let c0 = circuit::build(&clean, s).unwrap();
            let c1 = circuit::build(&noisy, s).unwrap();
            let rho = ghz(Sign::Plus, 12);
            let r0 =
                sample_record(&c0, rho.clone(), Scope::XOnly, &mut RecordRngs::new(s, 0)).unwrap();
            let r1 = sample_record(&c1, rho, Scope::XOnly, &mut RecordRngs::new(s, 0)).unwrap();
            let strip =
                |r: &MeasurementRecord, c: &CircuitRealization| -> Vec<(EventKind, Sign, bool)> {
                    r.entries
                        .iter()
                        .map(|e| (c.events[e.event_index].kind, e.outcome, e.was_random))
                        .collect()
                };
            assert_eq!(strip(&r0, &c0), strip(&r1, &c1));
        }
    }

    #[test]
    fn worker_count_does_not_matter() {
        let req = LxeRequest::new(EnsembleParams::zzx(16, 16, 0.5).with_noise(0.02), 40, 9);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let three = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let a = one.install(|| estimate_lxe(&req).unwrap());
        let b = three.install(|| estimate_lxe(&req).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.n_samples, 160);
    }

    #[test]
    fn size_mismatch_is_reported() {
        let c = circuit::build(&EnsembleParams::zzx(4, 2, 0.5), 0).unwrap();
        let err = sample_record(
            &c,
            StabilizerState::zeros(3),
            Scope::All,
            &mut RecordRngs::new(0, 0),
        );
        assert!(err.is_err());
    }
}
