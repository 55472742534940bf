#![allow(dead_code)]

use lxe_core::circuit::{
    initial_state, Boundary, CircuitRealization, EnsembleParams, Event, EventKind, InitialState,
};
use lxe_core::lxe::{chi_for_realization, RecordRngs, Scope};
use lxe_core::percolation::{circuit_to_bonds, spans};
use lxe_core::stabilizer::StabilizerState;

/// ZzX circuit whose measurement placement is read from `bits`: per step,
/// one bit per ZZ bond, then one bit per X site.
pub fn zzx_from_pattern(l: usize, t: usize, boundary: Boundary, bits: u64) -> CircuitRealization {
    let width = if boundary == Boundary::Open { l - 1 } else { l };
    let mut events = Vec::new();
    let mut k = 0;
    for step in 0..t {
        for i in 0..width {
            if (bits >> k) & 1 == 1 {
                events.push(Event {
                    kind: EventKind::MeasureZz(i),
                    layer: 2 * step as u32,
                });
            }
            k += 1;
        }
        for i in 0..l {
            if (bits >> k) & 1 == 1 {
                events.push(Event {
                    kind: EventKind::MeasureX(i),
                    layer: 2 * step as u32 + 1,
                });
            }
            k += 1;
        }
    }
    CircuitRealization {
        params: EnsembleParams::zzx(l, t, 0.5).with_boundary(boundary),
        seed: bits,
        events,
    }
}

pub fn pattern_bits(l: usize, t: usize, boundary: Boundary) -> u32 {
    let width = if boundary == Boundary::Open { l - 1 } else { l };
    ((width + l) * t) as u32
}

pub fn psi_pair(l: usize, r: usize) -> (StabilizerState, StabilizerState) {
    (
        initial_state(InitialState::PsiPlus(r), l).unwrap(),
        initial_state(InitialState::PsiMinus(r), l).unwrap(),
    )
}

/// `(LXE indicator, spans)` for one realization.
pub fn both_indicators(
    circuit: &CircuitRealization,
    r: usize,
    states: &(StabilizerState, StabilizerState),
) -> (bool, bool) {
    let mut rngs = RecordRngs::new(circuit.seed, 0);
    let chi = chi_for_realization(circuit, &states.0, &states.1, Scope::All, &mut rngs).unwrap();
    let span = spans(&circuit_to_bonds(circuit).unwrap(), r).unwrap();
    (chi, span)
}

/// Number of placement patterns where the two indicators disagree.
pub fn exhaustive_mismatches(l: usize, t: usize, boundary: Boundary, r: usize) -> u64 {
    let states = psi_pair(l, r);
    let n = pattern_bits(l, t, boundary);
    (0..1u64 << n)
        .filter(|&bits| {
            let (chi, span) = both_indicators(&zzx_from_pattern(l, t, boundary, bits), r, &states);
            chi != span
        })
        .count() as u64
}
