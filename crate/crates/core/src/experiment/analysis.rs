//! Finite-size analysis of LXE curves.
//!
//! Crossings: for every pair of sizes the difference `χ_{L₁} − χ_{L₂}` is
//! scanned on the shared grid and each sign change is located by linear
//! interpolation. A run of exact zeros between opposite signs is reported at
//! its centre. The standard error comes from a parametric bootstrap that
//! redraws every point from `N(χ, stderr²)` and keeps the replica crossing
//! nearest to the original one.
//!
//! Collapse: points are mapped to `x = (p − p_c) L^{1/ν}`. For each point of
//! size `L`, every other size whose rescaled range covers `x` contributes its
//! piecewise-linear interpolant at `x`; the master value is their mean. The
//! residual is the mean squared deviation of all covered points.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::ExperimentError;

/// One point `(x, χ, stderr)` of a finite-size curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x: f64,
    pub chi: f64,
    pub stderr: f64,
}

/// Curves keyed by system size.
pub type Curves = BTreeMap<usize, Vec<CurvePoint>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub l_small: usize,
    pub l_large: usize,
    pub x_star: f64,
    pub stderr: f64,
}

/// Bootstrap replicas used by [`find_crossings`].
pub const BOOTSTRAP_REPLICAS: usize = 400;
const BOOTSTRAP_SEED: u64 = 0x5eed_c0de;

/// Sign changes of `a − b` over the shared grid `xs`.
fn sign_changes(xs: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(u, v)| u - v).collect();
    let nonzero: Vec<usize> = (0..d.len()).filter(|&i| d[i] != 0.0).collect();
    let mut out = Vec::new();
    for w in nonzero.windows(2) {
        let (i, j) = (w[0], w[1]);
        if d[i].signum() == d[j].signum() {
            continue;
        }
        if j == i + 1 {
            out.push(xs[i] + (xs[j] - xs[i]) * d[i] / (d[i] - d[j]));
        } else {
            out.push(0.5 * (xs[i + 1] + xs[j - 1]));
        }
    }
    out
}

fn shared_grid(a: &[CurvePoint], b: &[CurvePoint]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(u, v)| u.x == v.x)
}

/// All crossings of every pair of sizes, in grid order within each pair.
pub fn find_crossings(curves: &Curves) -> Result<Vec<Crossing>, ExperimentError> {
    if curves.len() < 2 {
        return Err(ExperimentError::Analysis(format!(
            "crossings need at least 2 sizes, got {}",
            curves.len()
        )));
    }
    let sizes: Vec<usize> = curves.keys().copied().collect();
    let mut out = Vec::new();
    for (k, &l1) in sizes.iter().enumerate() {
        for &l2 in &sizes[k + 1..] {
            let (c1, c2) = (&curves[&l1], &curves[&l2]);
            if !shared_grid(c1, c2) {
                return Err(ExperimentError::Analysis(format!(
                    "sizes {l1} and {l2} are not sampled on the same grid"
                )));
            }
            let xs: Vec<f64> = c1.iter().map(|p| p.x).collect();
            let chi = |c: &[CurvePoint]| c.iter().map(|p| p.chi).collect::<Vec<_>>();
            let found = sign_changes(&xs, &chi(c1), &chi(c2));
            for (n, &x_star) in found.iter().enumerate() {
                let seed = BOOTSTRAP_SEED ^ ((l1 as u64) << 20) ^ ((l2 as u64) << 40) ^ n as u64;
                let stderr = bootstrap_stderr(&xs, c1, c2, x_star, seed);
                out.push(Crossing {
                    l_small: l1,
                    l_large: l2,
                    x_star,
                    stderr,
                });
            }
        }
    }
    Ok(out)
}

fn bootstrap_stderr(
    xs: &[f64],
    c1: &[CurvePoint],
    c2: &[CurvePoint],
    x_star: f64,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |c: &[CurvePoint], rng: &mut ChaCha8Rng| -> Vec<f64> {
        c.iter()
            .map(|p| match Normal::new(p.chi, p.stderr.max(0.0)) {
                Ok(n) => n.sample(rng),
                Err(_) => p.chi,
            })
            .collect()
    };
    let mut found = Vec::with_capacity(BOOTSTRAP_REPLICAS);
    for _ in 0..BOOTSTRAP_REPLICAS {
        let (a, b) = (draw(c1, &mut rng), draw(c2, &mut rng));
        let nearest = sign_changes(xs, &a, &b)
            .into_iter()
            .min_by(|u, v| (u - x_star).abs().total_cmp(&(v - x_star).abs()));
        if let Some(x) = nearest {
            found.push(x);
        }
    }
    if found.len() < 2 {
        return f64::NAN;
    }
    let mean = found.iter().sum::<f64>() / found.len() as f64;
    (found.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (found.len() - 1) as f64).sqrt()
}

/// Linear interpolant of a curve sorted by `x`, `None` outside its range.
fn interpolate(curve: &[(f64, f64)], x: f64) -> Option<f64> {
    let (first, last) = (curve.first()?, curve.last()?);
    if x < first.0 || x > last.0 {
        return None;
    }
    let j = curve.partition_point(|p| p.0 < x);
    if j == 0 {
        return Some(first.1);
    }
    let (a, b) = (curve[j - 1], curve[j]);
    Some(a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0))
}

/// Mean squared deviation from the leave-one-size-out master curve.
pub fn collapse_residual(curves: &Curves, p_c: f64, nu: f64) -> Result<f64, ExperimentError> {
    if curves.len() < 2 || curves.values().any(|c| c.len() < 4) {
        return Err(ExperimentError::Analysis(
            "collapse needs at least 2 sizes with 4 points each".into(),
        ));
    }
    if nu.is_nan() || nu <= 0.0 {
        return Err(ExperimentError::Analysis(format!(
            "nu = {nu} must be positive"
        )));
    }
    let rescaled: Vec<(usize, Vec<(f64, f64)>)> = curves
        .iter()
        .map(|(&l, c)| {
            let s = (l as f64).powf(1.0 / nu);
            let mut pts: Vec<(f64, f64)> = c.iter().map(|p| ((p.x - p_c) * s, p.chi)).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            (l, pts)
        })
        .collect();
    let (mut sum, mut count) = (0.0, 0usize);
    for (l, pts) in &rescaled {
        for &(x, y) in pts {
            let others: Vec<f64> = rescaled
                .iter()
                .filter(|(m, _)| m != l)
                .filter_map(|(_, c)| interpolate(c, x))
                .collect();
            if others.is_empty() {
                continue;
            }
            let master = others.iter().sum::<f64>() / others.len() as f64;
            sum += (y - master).powi(2);
            count += 1;
        }
    }
    if count == 0 {
        return Err(ExperimentError::Analysis(
            "rescaled curves do not overlap".into(),
        ));
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curves(f: impl Fn(usize, f64) -> f64, sizes: &[usize], grid: &[f64]) -> Curves {
        sizes
            .iter()
            .map(|&l| {
                let pts = grid
                    .iter()
                    .map(|&x| CurvePoint {
                        x,
                        chi: f(l, x),
                        stderr: 0.01,
                    })
                    .collect();
                (l, pts)
            })
            .collect()
    }

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn linear_crossing_examples() {
        let g = grid(0.4, 0.6, 11);
        let c = curves(|l, p| 0.5 - l as f64 * 0.1 * (p - 0.5), &[16, 32], &g);
        let found = find_crossings(&c).unwrap();
        assert_eq!(found.len(), 1);
        assert!((found[0].x_star - 0.5).abs() < 1e-12);

        let off = grid(0.41, 0.59, 10);
        let c = curves(|l, p| 0.5 - l as f64 * 0.1 * (p - 0.5), &[16, 32], &off);
        assert!((find_crossings(&c).unwrap()[0].x_star - 0.5).abs() < 1e-12);

        let parallel = curves(|l, p| 0.5 - (p - 0.5) + l as f64 * 1e-3, &[16, 32], &g);
        assert!(find_crossings(&parallel).unwrap().is_empty());

        assert!(find_crossings(&curves(|_, _| 0.5, &[16], &g)).is_err());
    }

    #[test]
    fn crossings_survive_grid_refinement() {
        let f = |l: usize, p: f64| 0.3 + l as f64 * 0.02 * (0.47 - p);
        for n in [5, 9, 17, 33] {
            let c = curves(f, &[8, 16, 32], &grid(0.3, 0.7, n));
            let found = find_crossings(&c).unwrap();
            assert_eq!(found.len(), 3);
            assert!(found.iter().all(|c| (c.x_star - 0.47).abs() < 1e-12));
        }
    }

    #[test]
    fn zero_runs_and_multiple_crossings() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(
            sign_changes(&xs, &[1.0, 0.0, 0.0, 0.0, -1.0], &[0.0; 5]),
            vec![2.0]
        );
        assert!(sign_changes(&xs, &[1.0, 0.0, 1.0, 1.0, 1.0], &[0.0; 5]).is_empty());
        let two = sign_changes(&xs, &[1.0, -1.0, -1.0, 1.0, 1.0], &[0.0; 5]);
        assert_eq!(two, vec![0.5, 2.5]);
    }

    #[test]
    fn bootstrap_error_scales_with_noise() {
        let g = grid(0.4, 0.6, 11);
        let mut c = curves(|l, p| 0.5 - l as f64 * 0.1 * (p - 0.5), &[16, 32], &g);
        let small = find_crossings(&c).unwrap()[0].stderr;
        for pts in c.values_mut() {
            pts.iter_mut().for_each(|p| p.stderr = 0.05);
        }
        let large = find_crossings(&c).unwrap()[0].stderr;
        assert!(small > 0.0 && large > 2.0 * small, "{small} {large}");
    }

    #[test]
    fn exact_collapse_vanishes() {
        let g = grid(0.4, 0.6, 21);
        let master = |x: f64| 0.5 - 0.1 * x;
        let c = curves(
            |l, p| master((p - 0.5) * (l as f64).powf(0.75)),
            &[16, 32, 64],
            &g,
        );
        assert!(collapse_residual(&c, 0.5, 4.0 / 3.0).unwrap() <= 1e-20);
        let misfolded = collapse_residual(&c, 0.5, 1.0).unwrap();
        assert!(misfolded > 1e-6);

        let smooth = |x: f64| 0.5 * (1.0 - (0.8 * x).tanh());
        let c = curves(
            |l, p| smooth((p - 0.5) * (l as f64).powf(0.75)),
            &[16, 32, 64],
            &g,
        );
        let best = collapse_residual(&c, 0.5, 4.0 / 3.0).unwrap();
        assert!(best < collapse_residual(&c, 0.5, 1.0).unwrap());
        assert!(best < collapse_residual(&c, 0.5, 1.8).unwrap());
    }

    #[test]
    fn collapse_rejects_thin_data() {
        let c = curves(|_, p| p, &[16, 32], &grid(0.4, 0.6, 3));
        assert!(collapse_residual(&c, 0.5, 1.0).is_err());
        let c = curves(|_, p| p, &[16], &grid(0.4, 0.6, 5));
        assert!(collapse_residual(&c, 0.5, 1.0).is_err());
    }
}
