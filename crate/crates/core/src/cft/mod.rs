//! Critical predictions for the LXE of the ZzX model at `p = 1/2`.
//!
//! With open boundaries the LXE is a crossing probability of critical
//! percolation in an `L × T` rectangle. The rectangle is the image of the
//! upper half plane under the Schwarz–Christoffel map
//! `w(z) = L/(2K(1/y²)) ∫₀^z dt / √((1 − t²)(1 − t²/y²))`, which sends
//! `±1 → ±L/2` and `±y` to the top corners, so that
//! `L/T = 2K(1/y²) / K(1 − 1/y²)`. The GHZ block ends at `±x` with
//! `w(x) = r/2`, and Cardy's formula is evaluated at the cross ratio
//! `η = (x − y)²/(x + y)²`:
//!
//! `C(η) = 3Γ(2/3)/Γ(1/3)² · (1 − η)^{1/3} · ₂F₁(1/3, 2/3; 4/3; 1 − η)`.
//!
//! For `r ≪ L` this reduces to `C ≈ 3Γ(2/3)/Γ(1/3)² · (4K(1/y²) r/(L y))^{1/3}`.
//! With periodic boundaries the LXE decays as
//! `[2cosh(2πT/L) − 2]^{−5/48}` up to an amplitude.
//!
//! Lattice time and continuum time differ by a fitted factor, applied as
//! `aspect → time_scale · aspect`.

pub mod special;

use serde::{Deserialize, Serialize};

pub use special::{
    bisect, ellipf_sine, ellipk, ellipk_complement, gamma, hyp2f1_third, hyp2f1_third_at_one,
    integrate,
};

/// Correlation length exponent of 2D percolation.
pub const NU: f64 = 4.0 / 3.0;
/// Boundary scaling dimension governing `χ ∝ (r/L)^Δ` with open boundaries.
pub const DELTA_OBC: f64 = 1.0 / 3.0;
/// Exponent of the periodic prediction, twice the bulk scaling dimension.
pub const DELTA_PBC: f64 = 5.0 / 48.0;
/// Coupling of the Coulomb-gas description of percolation.
pub const COULOMB_G: f64 = 2.0 / 3.0;
/// Background-charge shift used alongside [`COULOMB_G`].
pub const COULOMB_DELTA: f64 = 1.0 / 3.0;

/// Smallest standard error used in fit weights, so exact 0/1 estimates do
/// not dominate.
pub const STDERR_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CftError {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("numerical method did not converge: {0}")]
    NoConvergence(String),
    #[error("degenerate fit input: {0}")]
    DegenerateFit(String),
}

/// Arguments of the critical scaling functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CftParams {
    /// `T/L` in lattice units.
    pub aspect: f64,
    pub r_over_l: f64,
    pub time_scale: f64,
    /// Prefactor of the periodic prediction.
    pub amplitude: f64,
}

impl CftParams {
    pub fn new(aspect: f64, r_over_l: f64) -> Self {
        Self {
            aspect,
            r_over_l,
            time_scale: 1.0,
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), CftError> {
        let ok = self.aspect > 0.0
            && self.r_over_l > 0.0
            && self.r_over_l <= 1.0
            && self.time_scale > 0.0
            && self.amplitude >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(CftError::Domain(format!("{self:?}")))
        }
    }

    pub fn chi_obc(&self) -> Result<f64, CftError> {
        self.validate()?;
        cardy_chi_obc(self.time_scale * self.aspect, self.r_over_l)
    }

    pub fn chi_pbc(&self) -> Result<f64, CftError> {
        self.validate()?;
        Ok(chi_pbc(self.time_scale * self.aspect, self.amplitude))
    }
}

/// Schwarz–Christoffel data of a rectangle. The complement `m1 = 1 − 1/y²`
/// is kept separately so it stays accurate when `y → 1`.
#[derive(Debug, Clone, Copy)]
struct Rectangle {
    m1: f64,
    y: f64,
    k: f64,
}

/// `K` of the parameter whose complement is `1/(1 + e^u)`. Past `u = 35`
/// the complement is below 1e-15 and `K = ln 4 + u/2` to double precision,
/// which keeps very thin rectangles out of underflow.
fn k_of_logit(u: f64) -> f64 {
    if u > 35.0 {
        4f64.ln() + 0.5 * u
    } else {
        std::f64::consts::PI / (2.0 * agm_sqrt(1.0 / (1.0 + u.exp())))
    }
}

fn rectangle(aspect: f64) -> Result<Rectangle, CftError> {
    if !(aspect > 0.0 && aspect.is_finite()) {
        return Err(CftError::Domain(format!(
            "aspect ratio {aspect} must be positive"
        )));
    }
    // m = 1/(1 + e^{−u}), so K(m) = k_of_logit(u) and K(1 − m) = k_of_logit(−u).
    let ratio = |u: f64| 2.0 * k_of_logit(u) / k_of_logit(-u);
    let target = 1.0 / aspect;
    let u = bisect(|u| Ok(ratio(u) - target), -1e4, 1e4, 1e-12)?;
    if (ratio(u) - target).abs() > 1e-9 * target.max(1.0) {
        return Err(CftError::NoConvergence(format!(
            "aspect equation residual {:e} at T/L = {aspect}",
            ratio(u) - target
        )));
    }
    let m1 = 1.0 / (1.0 + u.exp());
    Ok(Rectangle {
        m1,
        y: (1.0 + (-u).exp()).sqrt(),
        k: k_of_logit(u),
    })
}

/// Incomplete integral for the rectangle, written with `m1` so the integrand
/// `1/√(cos²θ + m1 sin²θ)` stays accurate when `m` rounds to 1.
fn rect_ellipf(x: f64, rect: &Rectangle) -> Result<f64, CftError> {
    if x >= 1.0 {
        return Ok(rect.k);
    }
    if rect.m1 < 1e-15 {
        return Ok(x.atanh());
    }
    let m1 = rect.m1;
    integrate(
        |th| {
            let (s, c) = th.sin_cos();
            1.0 / (c * c + m1 * s * s).sqrt()
        },
        0.0,
        x.asin(),
        1e-14,
    )
}

fn agm_sqrt(m: f64) -> f64 {
    let (mut a, mut b) = (1.0, m.sqrt());
    for _ in 0..64 {
        let next = (0.5 * (a + b), (a * b).sqrt());
        if (next.0 - next.1).abs() <= 1e-16 * next.0 {
            return next.0;
        }
        (a, b) = next;
    }
    a
}

/// The Schwarz–Christoffel map on the real segment `0 ≤ z ≤ 1`.
pub fn sc_map_w(z: f64, y: f64, l: f64) -> Result<f64, CftError> {
    if y.is_nan() || y <= 1.0 || !(0.0..=1.0).contains(&z) {
        return Err(CftError::Domain(format!("w(z) at z = {z}, y = {y}")));
    }
    let m = 1.0 / (y * y);
    Ok(l / (2.0 * ellipk(m)?) * ellipf_sine(z, m)?)
}

/// The `y > 1` whose rectangle has aspect ratio `T/L`.
pub fn solve_aspect_y(t_over_l: f64) -> Result<f64, CftError> {
    Ok(rectangle(t_over_l)?.y)
}

/// Cardy's crossing formula `C(η)` for `0 ≤ η ≤ 1`.
pub fn cardy_crossing(eta: f64) -> Result<f64, CftError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(CftError::Domain(format!(
            "cross ratio {eta} outside [0, 1]"
        )));
    }
    crossing_from_complement(1.0 - eta)
}

fn cardy_prefactor() -> f64 {
    3.0 * gamma(2.0 / 3.0) / gamma(1.0 / 3.0).powi(2)
}

fn crossing_from_complement(one_minus_eta: f64) -> Result<f64, CftError> {
    Ok(cardy_prefactor() * one_minus_eta.cbrt() * hyp2f1_third(one_minus_eta)?)
}

/// Critical LXE with open boundaries for block width `r/L`.
pub fn cardy_chi_obc(aspect: f64, r_over_l: f64) -> Result<f64, CftError> {
    if !(r_over_l > 0.0 && r_over_l <= 1.0) {
        return Err(CftError::Domain(format!("r/L = {r_over_l} outside (0, 1]")));
    }
    let rect = rectangle(aspect)?;
    let x = if r_over_l == 1.0 {
        1.0
    } else {
        let target = r_over_l * rect.k;
        if rect.m1 < 1e-15 {
            (target).tanh()
        } else {
            bisect(|x| Ok(rect_ellipf(x, &rect)? - target), 0.0, 1.0, 1e-15)?
        }
    };
    let y = rect.y;
    // 1 − η = 4xy/(x + y)² ≤ 1; clamp the rounding excess.
    crossing_from_complement((4.0 * x * y / ((x + y) * (x + y))).min(1.0))
}

/// Leading small-`r/L` behaviour of [`cardy_chi_obc`].
pub fn chi_obc_small_r(aspect: f64, r_over_l: f64) -> Result<f64, CftError> {
    if !(r_over_l > 0.0 && r_over_l <= 1.0) {
        return Err(CftError::Domain(format!("r/L = {r_over_l} outside (0, 1]")));
    }
    let rect = rectangle(aspect)?;
    Ok(cardy_prefactor() * (4.0 * rect.k * r_over_l / rect.y).cbrt())
}

/// `amplitude · [2cosh(2π·aspect) − 2]^{−5/48}`.
pub fn chi_pbc(aspect: f64, amplitude: f64) -> f64 {
    amplitude * pbc_base(aspect).powf(-DELTA_PBC)
}

/// `2cosh(2πa) − 2`, written as `4sinh²(πa)` to avoid cancellation.
pub fn pbc_base(aspect: f64) -> f64 {
    4.0 * (std::f64::consts::PI * aspect).sinh().powi(2)
}

/// A simulated point `(T/L, χ, stderr)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimPoint {
    pub aspect: f64,
    pub chi: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitModel {
    /// Fit the time scale against [`cardy_chi_obc`].
    Obc { r_over_l: f64 },
    /// Fit the amplitude of [`chi_pbc`] at a known time scale.
    Pbc { time_scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleFit {
    pub time_scale: f64,
    pub amplitude: Option<f64>,
    /// Unweighted root-mean-square residual.
    pub rms: f64,
    /// Inverse-variance weighted sum of squared residuals.
    pub chi2: f64,
}

fn weight(p: &SimPoint) -> f64 {
    1.0 / p.stderr.max(STDERR_FLOOR).powi(2)
}

fn residuals(
    points: &[SimPoint],
    model: impl Fn(f64) -> Result<f64, CftError>,
) -> Result<(f64, f64), CftError> {
    let (mut chi2, mut sq) = (0.0, 0.0);
    for p in points {
        let d = p.chi - model(p.aspect)?;
        chi2 += weight(p) * d * d;
        sq += d * d;
    }
    Ok((chi2, (sq / points.len() as f64).sqrt()))
}

/// Weighted least-squares fit of the time scale (open boundaries) or the
/// amplitude (periodic boundaries). The time scale is searched on a log grid
/// over `[e⁻³, e³]` and refined by golden section.
pub fn fit_scale(points: &[SimPoint], model: FitModel) -> Result<ScaleFit, CftError> {
    if points.len() < 3 {
        return Err(CftError::DegenerateFit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|p| p.aspect.is_nan() || p.aspect <= 0.0 || !p.chi.is_finite())
    {
        return Err(CftError::DegenerateFit(
            "aspects must be positive and χ finite".into(),
        ));
    }
    match model {
        FitModel::Obc { r_over_l } => {
            let cost = |ln_s: f64| {
                let s = ln_s.exp();
                residuals(points, |a| cardy_chi_obc(s * a, r_over_l)).map(|r| r.0)
            };
            let grid: Vec<f64> = (0..=60).map(|i| -3.0 + 0.1 * i as f64).collect();
            let mut best = (f64::INFINITY, 0);
            for (i, &g) in grid.iter().enumerate() {
                let c = cost(g)?;
                if c < best.0 {
                    best = (c, i);
                }
            }
            let lo = grid[best.1.saturating_sub(1)];
            let hi = grid[(best.1 + 1).min(grid.len() - 1)];
            let ln_s = golden_section(&cost, lo, hi, 1e-12)?;
            let s = ln_s.exp();
            let (chi2, rms) = residuals(points, |a| cardy_chi_obc(s * a, r_over_l))?;
            Ok(ScaleFit {
                time_scale: s,
                amplitude: None,
                rms,
                chi2,
            })
        }
        FitModel::Pbc { time_scale } => {
            if time_scale.is_nan() || time_scale <= 0.0 {
                return Err(CftError::Domain(format!("time scale {time_scale}")));
            }
            // Linear in the amplitude: closed-form weighted projection.
            let (mut num, mut den) = (0.0, 0.0);
            for p in points {
                let f = chi_pbc(time_scale * p.aspect, 1.0);
                num += weight(p) * p.chi * f;
                den += weight(p) * f * f;
            }
            if den == 0.0 {
                return Err(CftError::DegenerateFit(
                    "prediction vanishes at every point".into(),
                ));
            }
            let amplitude = num / den;
            let (chi2, rms) = residuals(points, |a| Ok(chi_pbc(time_scale * a, amplitude)))?;
            Ok(ScaleFit {
                time_scale,
                amplitude: Some(amplitude),
                rms,
                chi2,
            })
        }
    }
}

fn golden_section(
    f: &impl Fn(f64) -> Result<f64, CftError>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<f64, CftError> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            (d, fd) = (c, fc);
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            (c, fc) = (d, fd);
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Free-exponent fit of the periodic prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub delta: f64,
    pub delta_stderr: f64,
    pub amplitude: f64,
}

/// Weighted linear regression of `ln χ` on `ln[2cosh(2π s·aspect) − 2]`;
/// the slope is `−Δ`. Points with `χ = 0` carry no information and are
/// dropped.
pub fn fit_pbc_exponent(points: &[SimPoint], time_scale: f64) -> Result<ExponentFit, CftError> {
    let data: Vec<(f64, f64, f64)> = points
        .iter()
        .filter(|p| p.chi > 0.0)
        .map(|p| {
            let x = pbc_base(time_scale * p.aspect).ln();
            let w = (p.chi / p.stderr.max(STDERR_FLOOR)).powi(2);
            (x, p.chi.ln(), w)
        })
        .collect();
    if data.len() < 3 {
        return Err(CftError::DegenerateFit(format!(
            "need at least 3 points with χ > 0, got {}",
            data.len()
        )));
    }
    let sw: f64 = data.iter().map(|d| d.2).sum();
    let mx = data.iter().map(|d| d.2 * d.0).sum::<f64>() / sw;
    let my = data.iter().map(|d| d.2 * d.1).sum::<f64>() / sw;
    let sxx: f64 = data.iter().map(|d| d.2 * (d.0 - mx).powi(2)).sum();
    let sxy: f64 = data.iter().map(|d| d.2 * (d.0 - mx) * (d.1 - my)).sum();
    if sxx == 0.0 {
        return Err(CftError::DegenerateFit("all aspects coincide".into()));
    }
    let slope = sxy / sxx;
    Ok(ExponentFit {
        delta: -slope,
        delta_stderr: (1.0 / sxx).sqrt(),
        amplitude: (my - slope * mx).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aspect_solver_examples() {
        assert!((solve_aspect_y(0.5).unwrap() - 2f64.sqrt()).abs() < 1e-10);
        assert!(solve_aspect_y(5.0).unwrap() > 10.0);
        assert!(solve_aspect_y(0.0).is_err());
        for k in 0..=40 {
            let aspect = 0.1 * 100f64.powf(k as f64 / 40.0);
            let rect = rectangle(aspect).unwrap();
            let m = 1.0 / (rect.y * rect.y);
            let ratio = 2.0 * rect.k / ellipk_complement(m).unwrap();
            assert!(
                (ratio - 1.0 / aspect).abs() <= 1e-10 * (1.0 / aspect).max(1.0),
                "{aspect}"
            );
        }
    }

    #[test]
    fn sc_map_examples() {
        let y = 2f64.sqrt();
        assert_eq!(sc_map_w(0.0, y, 2.0).unwrap(), 0.0);
        assert!((sc_map_w(1.0, y, 2.0).unwrap() - 1.0).abs() < 1e-14);
        let mut last = -1.0;
        for i in 0..=1000 {
            let w = sc_map_w(i as f64 / 1000.0, 3.0, 1.0).unwrap();
            assert!(w > last);
            last = w;
        }
        assert!(sc_map_w(1.5, y, 1.0).is_err());
        assert!(sc_map_w(0.5, 0.9, 1.0).is_err());
    }

    #[test]
    fn cardy_limits_and_duality() {
        assert!(cardy_chi_obc(1e-3, 1.0).unwrap() > 0.999);
        assert!((cardy_chi_obc(1.0, 1.0).unwrap() - 0.5).abs() < 1e-10);
        assert!((cardy_crossing(0.5).unwrap() - 0.5).abs() < 1e-12);
        for k in 1..100 {
            let eta = k as f64 / 100.0;
            let sum = cardy_crossing(eta).unwrap() + cardy_crossing(1.0 - eta).unwrap();
            assert!((sum - 1.0).abs() < 1e-9, "eta {eta}");
        }
        let values: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&a| cardy_chi_obc(a, 0.5).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn small_r_is_a_pure_power() {
        let a = chi_obc_small_r(1.3, 0.1).unwrap();
        let b = chi_obc_small_r(1.3, 0.05).unwrap();
        assert!((b / a - 0.5f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn pbc_prediction() {
        assert!((chi_pbc(1.0, 1.0) - 0.519_905_063_009_149_4).abs() < 1e-13);
        assert_eq!(chi_pbc(1.0, 0.0), 0.0);
        let xs: Vec<f64> = (1..50).map(|k| chi_pbc(0.1 * k as f64, 1.0)).collect();
        assert!(xs.windows(2).all(|w| w[1] < w[0]));
        let (a1, a2) = (0.4, 1.1);
        let slope = (chi_pbc(a2, 1.0).ln() - chi_pbc(a1, 1.0).ln())
            / (pbc_base(a2).ln() - pbc_base(a1).ln());
        assert!((slope + DELTA_PBC).abs() < 1e-12);
    }

    #[test]
    fn fits_recover_synthetic_parameters() {
        let aspects = [0.25, 0.5, 1.0, 2.0, 4.0];
        let obc: Vec<SimPoint> = aspects
            .iter()
            .map(|&a| SimPoint {
                aspect: a,
                chi: cardy_chi_obc(1.7 * a, 1.0).unwrap(),
                stderr: 0.01,
            })
            .collect();
        let fit = fit_scale(&obc, FitModel::Obc { r_over_l: 1.0 }).unwrap();
        assert!((fit.time_scale - 1.7).abs() < 1e-6, "{fit:?}");
        assert!(fit.rms < 1e-8);

        let pbc: Vec<SimPoint> = aspects
            .iter()
            .map(|&a| SimPoint {
                aspect: a,
                chi: chi_pbc(1.2 * a, 0.9),
                stderr: 0.01,
            })
            .collect();
        let fit = fit_scale(&pbc, FitModel::Pbc { time_scale: 1.2 }).unwrap();
        assert!((fit.amplitude.unwrap() - 0.9).abs() < 1e-6);
        let exp = fit_pbc_exponent(&pbc, 1.2).unwrap();
        assert!((exp.delta - DELTA_PBC).abs() < 1e-10 && (exp.amplitude - 0.9).abs() < 1e-9);

        assert!(fit_scale(&obc[..2], FitModel::Obc { r_over_l: 1.0 }).is_err());
    }

    #[test]
    fn params_dispatch() {
        let mut p = CftParams::new(0.5, 1.0);
        assert!((p.chi_obc().unwrap() - 0.824_353_106_199_345).abs() < 1e-10);
        p.r_over_l = 1.5;
        assert!(p.chi_obc().is_err());
    }
}
