//! Ensemble builders. Every slot consumes a fixed number of uniforms
//! whatever its outcome, so realizations with the same seed are coupled
//! monotonically across probabilities.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::symmetric::sample_symmetric_clifford_2q;
use super::{
    stream_rng, Boundary, CircuitError, CircuitRealization, EnsembleParams, Event, EventKind,
    Model, Stream,
};

struct Builder {
    events: Vec<Event>,
    structure: ChaCha8Rng,
    gates: ChaCha8Rng,
    noise: ChaCha8Rng,
    noise_rate: f64,
    n_sites: usize,
}

impl Builder {
    fn new(params: &EnsembleParams, seed: u64) -> Self {
        Self {
            events: Vec::new(),
            structure: stream_rng(seed, Stream::Structure),
            gates: stream_rng(seed, Stream::Gates),
            noise: stream_rng(seed, Stream::NoisePlacement),
            noise_rate: params.noise_rate,
            n_sites: params.n_sites,
        }
    }

    fn push(&mut self, kind: EventKind, layer: usize) {
        self.events.push(Event {
            kind,
            layer: layer as u32,
        });
    }

    fn coin(&mut self, prob: f64) -> bool {
        self.structure.random::<f64>() < prob
    }

    fn gate(&mut self, site: usize, layer: usize) {
        let (gate, _) = sample_symmetric_clifford_2q(&mut self.gates);
        self.push(EventKind::Unitary { gate, site }, layer);
    }

    /// Noise slots closing a measurement layer.
    fn noise_layer(&mut self, layer: usize) {
        if self.noise_rate == 0.0 {
            return;
        }
        for i in 0..self.n_sites {
            if self.noise.random::<f64>() < self.noise_rate {
                self.push(EventKind::NoiseSlot(i), layer);
            }
        }
    }

    /// Open brickwork of symmetric gates; layer `s` covers bonds `i ≡ s (mod 2)`.
    fn scrambler(&mut self, depth: usize) {
        for s in 0..depth {
            for i in (s % 2..self.n_sites - 1).step_by(2) {
                self.gate(i, s);
            }
        }
    }

    fn finish(self, params: &EnsembleParams, seed: u64) -> CircuitRealization {
        CircuitRealization {
            params: params.clone(),
            seed,
            events: self.events,
        }
    }
}

fn check_model(params: &EnsembleParams, model: Model) -> Result<(), CircuitError> {
    if params.model != model {
        return Err(CircuitError::InvalidParams(format!(
            "expected model {:?}, got {:?}",
            model, params.model
        )));
    }
    params.validate()
}

/// Nearest-neighbour ZZ layer (each bond w.p. `1 − p`) followed by an X
/// layer (each site w.p. `p`), `T` times.
pub fn build_zzx(params: &EnsembleParams, seed: u64) -> Result<CircuitRealization, CircuitError> {
    check_model(params, Model::ZzX)?;
    let mut b = Builder::new(params, seed);
    b.scrambler(params.scramble_depth);
    let l = params.n_sites;
    let bonds = match params.boundary {
        Boundary::Open => l - 1,
        Boundary::Periodic => l,
    };
    for t in 0..params.n_steps {
        let layer = params.scramble_depth + 2 * t;
        for i in 0..bonds {
            if b.coin(1.0 - params.p) {
                b.push(EventKind::MeasureZz(i), layer);
            }
        }
        b.noise_layer(layer);
        for i in 0..l {
            if b.coin(params.p) {
                b.push(EventKind::MeasureX(i), layer + 1);
            }
        }
        b.noise_layer(layer + 1);
    }
    Ok(b.finish(params, seed))
}

/// Open brickwork: each brick is a symmetric unitary w.p. `q`, otherwise X
/// on its left qubit w.p. `p` or ZZ. Odd layers also measure X on the last
/// qubit w.p. `p(1 − q)`.
pub fn build_hybrid(
    params: &EnsembleParams,
    seed: u64,
) -> Result<CircuitRealization, CircuitError> {
    check_model(params, Model::Hybrid)?;
    let mut b = Builder::new(params, seed);
    b.scrambler(params.scramble_depth);
    let l = params.n_sites;
    for t in 0..params.n_steps {
        let layer = params.scramble_depth + t;
        for i in (t % 2..l - 1).step_by(2) {
            let unitary = b.coin(params.q);
            let x = b.coin(params.p);
            if unitary {
                b.gate(i, layer);
            } else if x {
                b.push(EventKind::MeasureX(i), layer);
            } else {
                b.push(EventKind::MeasureZz(i), layer);
            }
        }
        if t % 2 == 1 && b.coin(params.p * (1.0 - params.q)) {
            b.push(EventKind::MeasureX(l - 1), layer);
        }
        b.noise_layer(layer);
    }
    Ok(b.finish(params, seed))
}

/// Periodic chain; see [`super::ZIZXX_CONVENTION`] for the schedule.
pub fn build_zizxx(params: &EnsembleParams, seed: u64) -> Result<CircuitRealization, CircuitError> {
    check_model(params, Model::ZizXx)?;
    let mut b = Builder::new(params, seed);
    b.scrambler(params.scramble_depth);
    let l = params.n_sites;
    for t in 0..params.n_steps {
        let layer = params.scramble_depth + 2 * t;
        for i in 0..l {
            if b.coin(1.0 - params.p) {
                b.push(EventKind::MeasureZz(i), layer);
            }
            if b.coin(1.0 - params.r_xx) {
                b.push(EventKind::MeasureZiz(i), layer);
            }
        }
        b.noise_layer(layer);
        for i in 0..l {
            if b.coin(params.p) {
                b.push(EventKind::MeasureX(i), layer + 1);
            }
            if b.coin(params.r_xx) {
                b.push(EventKind::MeasureXx(i), layer + 1);
            }
        }
        b.noise_layer(layer + 1);
    }
    Ok(b.finish(params, seed))
}

/// Dispatches on `params.model`.
pub fn build(params: &EnsembleParams, seed: u64) -> Result<CircuitRealization, CircuitError> {
    match params.model {
        Model::ZzX => build_zzx(params, seed),
        Model::Hybrid => build_hybrid(params, seed),
        Model::ZizXx => build_zizxx(params, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn is_x(k: &EventKind) -> bool {
        matches!(k, EventKind::MeasureX(_))
    }

    fn is_zz(k: &EventKind) -> bool {
        matches!(k, EventKind::MeasureZz(_))
    }

    fn is_unitary(k: &EventKind) -> bool {
        matches!(k, EventKind::Unitary { .. })
    }

    #[test]
    fn zzx_extremes() {
        let c = build_zzx(&EnsembleParams::zzx(4, 2, 0.0), 1).unwrap();
        assert_eq!(c.events.len(), 6);
        assert_eq!(c.count(is_zz), 6);
        let c = build_zzx(&EnsembleParams::zzx(4, 2, 1.0), 1).unwrap();
        assert_eq!(c.events.len(), 8);
        assert_eq!(c.count(is_x), 8);
        let periodic = EnsembleParams::zzx(4, 2, 0.0).with_boundary(Boundary::Periodic);
        assert_eq!(build_zzx(&periodic, 1).unwrap().events.len(), 8);
    }

    #[test]
    fn zzx_x_count_is_binomial() {
        let params = EnsembleParams::zzx(64, 64, 0.5);
        let n = 100;
        let total: usize = (0..n)
            .map(|s| build_zzx(&params, s).unwrap().count(is_x))
            .sum();
        let slots = (64 * 64 * n) as f64;
        let sigma = (slots * 0.25).sqrt();
        assert!((total as f64 - 0.5 * slots).abs() < 3.0 * sigma);
    }

    #[test]
    fn rebuild_is_identical() {
        for params in [
            EnsembleParams::zzx(16, 16, 0.5).with_noise(0.1),
            EnsembleParams::hybrid(16, 16, 0.4, 0.5),
            EnsembleParams::zizxx(16, 16, 0.5, 0.3),
        ] {
            let a = build(&params, 42).unwrap();
            let b = build(&params, 42).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.fingerprint(), b.fingerprint());
            assert_ne!(a.fingerprint(), build(&params, 43).unwrap().fingerprint());
        }
    }

    #[test]
    fn noise_does_not_move_measurements() {
        let clean = build_zzx(&EnsembleParams::zzx(16, 16, 0.5), 9).unwrap();
        let noisy = build_zzx(&EnsembleParams::zzx(16, 16, 0.5).with_noise(0.2), 9).unwrap();
        let strip: Vec<Event> = noisy
            .events
            .iter()
            .copied()
            .filter(|e| !matches!(e.kind, EventKind::NoiseSlot(_)))
            .collect();
        assert_eq!(strip, clean.events);
        assert!(strip.len() < noisy.events.len());
        assert!(clean.events.iter().all(|e| e.recordable()));
    }

    #[test]
    fn hybrid_extremes() {
        let c = build_hybrid(&EnsembleParams::hybrid(8, 4, 0.3, 1.0), 3).unwrap();
        assert!(c.events.iter().all(|e| is_unitary(&e.kind)));
        assert_eq!(c.events.len(), 4 + 3 + 4 + 3);
        let c = build_hybrid(&EnsembleParams::hybrid(8, 4, 0.0, 0.0), 3).unwrap();
        assert!(c.events.iter().all(|e| is_zz(&e.kind)));
    }

    #[test]
    fn hybrid_brick_frequencies() {
        let params = EnsembleParams::hybrid(32, 32, 0.5, 0.5);
        let (mut x, mut zz, mut u, mut edge) = (0usize, 0usize, 0usize, 0usize);
        for s in 0..50 {
            for e in build_hybrid(&params, s).unwrap().events {
                match e.kind {
                    EventKind::MeasureX(31) => edge += 1,
                    EventKind::MeasureX(_) => x += 1,
                    EventKind::MeasureZz(_) => zz += 1,
                    EventKind::Unitary { .. } => u += 1,
                    _ => unreachable!(),
                }
            }
        }
        let n = (x + zz + u) as f64;
        for (count, p) in [(x, 0.25), (zz, 0.25), (u, 0.5)] {
            let sigma = (n * p * (1.0 - p)).sqrt();
            assert!(
                (count as f64 - n * p).abs() < 3.0 * sigma,
                "{count} vs {}",
                n * p
            );
        }
        // 16 odd layers per circuit, each w.p. 1/4.
        let m = 50.0 * 16.0;
        assert!((edge as f64 - m / 4.0).abs() < 3.0 * (m * 0.1875).sqrt());
    }

    #[test]
    fn no_qubit_twice_in_a_brick_layer() {
        let params = EnsembleParams::hybrid(16, 16, 0.5, 0.5).with_scramble_depth(16);
        let c = build_hybrid(&params, 5).unwrap();
        let mut seen: HashSet<(u32, usize)> = HashSet::new();
        for e in &c.events {
            let sites = match e.kind {
                EventKind::MeasureX(i) => vec![i],
                EventKind::MeasureZz(i) | EventKind::Unitary { site: i, .. } => vec![i, i + 1],
                _ => unreachable!(),
            };
            for s in sites {
                assert!(
                    seen.insert((e.layer, s)),
                    "site {s} twice in layer {}",
                    e.layer
                );
            }
        }
    }

    #[test]
    fn no_duplicate_slots_in_measurement_layers() {
        let params = EnsembleParams::zizxx(16, 8, 0.5, 0.5);
        let c = build_zizxx(&params, 5).unwrap();
        let mut seen = HashSet::new();
        for e in &c.events {
            assert!(seen.insert(*e));
        }
    }

    #[test]
    fn zizxx_kinds_follow_marginals() {
        let c = build_zizxx(&EnsembleParams::zizxx(8, 4, 0.0, 0.0), 1).unwrap();
        assert!(c
            .events
            .iter()
            .all(|e| matches!(e.kind, EventKind::MeasureZz(_) | EventKind::MeasureZiz(_))));
        assert_eq!(c.events.len(), 2 * 8 * 4);
        let c = build_zizxx(&EnsembleParams::zizxx(8, 4, 1.0, 1.0), 1).unwrap();
        assert!(c
            .events
            .iter()
            .all(|e| matches!(e.kind, EventKind::MeasureX(_) | EventKind::MeasureXx(_))));
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(build_zzx(&EnsembleParams::zzx(5, 2, 0.5), 0).is_err());
        assert!(build_zzx(&EnsembleParams::zzx(4, 2, 1.5), 0).is_err());
        assert!(build_zzx(&EnsembleParams::zzx(4, 2, 0.5).with_r_ghz(3), 0).is_err());
        assert!(build_hybrid(&EnsembleParams::zzx(4, 2, 0.5), 0).is_err());
        let periodic_hybrid =
            EnsembleParams::hybrid(4, 2, 0.5, 0.5).with_boundary(Boundary::Periodic);
        assert!(build_hybrid(&periodic_hybrid, 0).is_err());
    }
}
