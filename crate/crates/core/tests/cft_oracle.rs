//! Critical predictions against frozen high-precision references and
//! independent numerical oracles.

// Frozen references keep every digit they were computed with.
#![allow(clippy::excessive_precision)]

use lxe_core::cft::{
    cardy_chi_obc, cardy_crossing, chi_obc_small_r, chi_pbc, ellipf_sine, ellipk,
    ellipk_complement, fit_pbc_exponent, fit_scale, gamma, hyp2f1_third, hyp2f1_third_at_one,
    sc_map_w, solve_aspect_y, FitModel, SimPoint, DELTA_PBC,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// Values below were computed with 30-digit arithmetic.

#[test]
fn gamma_matches_references() {
    assert!(rel(gamma(1.0 / 3.0), 2.6789385347077476337) < 1e-14);
    assert!(rel(gamma(2.0 / 3.0), 1.3541179394264004169) < 1e-14);
    assert!(rel(gamma(4.0 / 3.0), 0.89297951156924921122) < 1e-14);
    assert!(rel(hyp2f1_third_at_one(), 1.7666387502854499573) < 1e-14);
}

#[test]
fn hypergeometric_matches_references() {
    let cases = [
        (0.1, 1.0175134692393876117),
        (0.3, 1.0588427864528826431),
        (0.5, 1.1129126745223053846),
        (0.7, 1.1913613386143152586),
        (0.9, 1.3406163291240483309),
        (0.99, 1.5560386698318517430),
        (0.999999, 1.7566393341654224011),
    ];
    for (z, want) in cases {
        assert!(rel(hyp2f1_third(z).unwrap(), want) < 1e-13, "z = {z}");
    }
}

/// Plain power series summed to many terms, valid away from `z = 1`.
fn series_oracle(z: f64) -> f64 {
    let (mut term, mut sum) = (1.0f64, 1.0f64);
    for k in 0..10_000 {
        let k = k as f64;
        term *= (1.0 / 3.0 + k) * (2.0 / 3.0 + k) / ((4.0 / 3.0 + k) * (k + 1.0)) * z;
        sum += term;
    }
    sum
}

#[test]
fn hypergeometric_matches_series_on_grid() {
    for i in 0..=90 {
        let z = i as f64 / 100.0;
        assert!(
            rel(hyp2f1_third(z).unwrap(), series_oracle(z)) < 1e-13,
            "z = {z}"
        );
    }
}

/// Carlson's symmetric integral `R_F(x, y, z)` by duplication.
fn carlson_rf(mut x: f64, mut y: f64, mut z: f64) -> f64 {
    loop {
        let mu = (x + y + z) / 3.0;
        let (dx, dy, dz) = (1.0 - x / mu, 1.0 - y / mu, 1.0 - z / mu);
        if dx.abs().max(dy.abs()).max(dz.abs()) < 1e-4 {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0)
                / mu.sqrt();
        }
        let l = x.sqrt() * y.sqrt() + y.sqrt() * z.sqrt() + z.sqrt() * x.sqrt();
        x = 0.25 * (x + l);
        y = 0.25 * (y + l);
        z = 0.25 * (z + l);
    }
}

#[test]
fn elliptic_integrals_match_references_and_carlson() {
    assert!(rel(ellipk(0.5).unwrap(), 1.8540746773013719184) < 1e-15);
    assert!(rel(ellipk(0.9).unwrap(), 2.5780921133481732927) < 1e-15);
    assert!(rel(ellipk(0.1).unwrap(), 1.6124413487202194007) < 1e-15);
    assert!(rel(ellipk_complement(1e-8).unwrap(), 10.596634757087660320) < 1e-14);
    for i in 0..=40 {
        let m = i as f64 / 41.0;
        assert!(
            rel(ellipk(m).unwrap(), carlson_rf(0.0, 1.0 - m, 1.0)) < 1e-13,
            "m = {m}"
        );
        for j in 1..=10 {
            let z = j as f64 / 10.5;
            let want = z * carlson_rf(1.0 - z * z, 1.0 - m * z * z, 1.0);
            assert!(
                rel(ellipf_sine(z, m).unwrap(), want) < 1e-12,
                "z = {z}, m = {m}"
            );
        }
    }
}

#[test]
fn sc_map_reference_and_monotonicity() {
    let w = sc_map_w(0.5, 2f64.sqrt(), 2.0).unwrap();
    assert!(rel(w, 0.28888951419422257316) < 1e-13);
    for y in [1.01, 1.5, 3.0, 30.0] {
        let ws: Vec<f64> = (0..=200)
            .map(|i| sc_map_w(i as f64 / 200.0, y, 1.0).unwrap())
            .collect();
        assert!(ws.windows(2).all(|p| p[1] > p[0]));
        assert!((ws[200] - 0.5).abs() < 1e-13);
    }
}

#[test]
fn aspect_solver_round_trips() {
    for k in 0..=60 {
        let aspect = 0.1 * 100f64.powf(k as f64 / 60.0);
        let y = solve_aspect_y(aspect).unwrap();
        let m = 1.0 / (y * y);
        let back = ellipk_complement(m).unwrap() / (2.0 * ellipk(m).unwrap());
        assert!(rel(back, aspect) < 1e-9, "aspect {aspect}: {back}");
    }
    let cases = [
        (0.25, 0.97056274847714058562),
        (0.5, 0.5),
        (1.0, 0.029437251522859414380),
        (2.0, 5.5795921049942373452e-5),
        (4.0, 1.9458490733161729128e-10),
    ];
    for (aspect, m) in cases {
        let y = solve_aspect_y(aspect).unwrap();
        assert!(rel(1.0 / (y * y), m) < 1e-10, "aspect {aspect}");
    }
}

#[test]
fn cardy_matches_references() {
    let full = [
        (0.25, 0.97836997090913324493),
        (0.5, 0.82435310619934476087),
        (1.0, 0.5),
        (1.7, 0.24047685025149846589),
        (2.0, 0.17564689380065523913),
        (4.0, 0.021630029090866755071),
    ];
    for (aspect, want) in full {
        assert!(
            rel(cardy_chi_obc(aspect, 1.0).unwrap(), want) < 1e-10,
            "aspect {aspect}"
        );
    }
    let partial = [
        (1.0 / 256.0, 0.091634745580731871690, 1.0000021),
        (1.0 / 64.0, 0.14545643969571006777, 1.0000341),
        (1.0 / 32.0, 0.18324487527492513894, 1.000136),
        (1.0 / 16.0, 0.23077955832062383559, 1.000546),
        (1.0 / 8.0, 0.29028771798746566139, 1.002188),
        (0.25, 0.36333971927130409628, 1.008807),
        (0.5, 0.44568736230851643923, 1.036177),
    ];
    for (r, want, ratio) in partial {
        let exact = cardy_chi_obc(1.0, r).unwrap();
        assert!(rel(exact, want) < 1e-10, "r/L = {r}");
        let approx = chi_obc_small_r(1.0, r).unwrap();
        assert!(rel(approx / exact, ratio) < 2e-6, "r/L = {r}");
    }
}

#[test]
fn cardy_duality_on_grid() {
    for i in 1..100 {
        let eta = i as f64 / 100.0;
        let s = cardy_crossing(eta).unwrap() + cardy_crossing(1.0 - eta).unwrap();
        assert!((s - 1.0).abs() < 1e-12, "eta {eta}");
    }
    // A rectangle and its rotation split the crossing probability.
    for aspect in [0.3, 0.8, 1.25, 2.5] {
        let s = cardy_chi_obc(aspect, 1.0).unwrap() + cardy_chi_obc(1.0 / aspect, 1.0).unwrap();
        assert!((s - 1.0).abs() < 1e-10, "aspect {aspect}");
    }
}

#[test]
fn pbc_reference_and_fits() {
    assert!(rel(chi_pbc(1.0, 1.0), 0.51990506300914942995) < 1e-13);
    let points: Vec<SimPoint> = [0.3, 0.6, 1.0, 1.5, 2.0]
        .iter()
        .map(|&a| SimPoint {
            aspect: a,
            chi: chi_pbc(0.8 * a, 0.7),
            stderr: 0.002,
        })
        .collect();
    let fit = fit_scale(&points, FitModel::Pbc { time_scale: 0.8 }).unwrap();
    assert!(rel(fit.amplitude.unwrap(), 0.7) < 1e-10);
    let exp = fit_pbc_exponent(&points, 0.8).unwrap();
    assert!((exp.delta - DELTA_PBC).abs() < 1e-10);
}
