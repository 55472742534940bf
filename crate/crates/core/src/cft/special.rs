//! Gamma, the `₂F₁(1/3, 2/3; 4/3; z)` needed by Cardy's formula, complete and
//! incomplete elliptic integrals of the first kind, and adaptive
//! Gauss–Kronrod quadrature.
//!
//! Elliptic integrals take the *parameter* `m` (not the modulus `k = √m`):
//! `K(m) = ∫₀¹ dt / √((1 − t²)(1 − m t²))`.

use std::f64::consts::PI;

use super::CftError;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Lanczos approximation (`g = 7`, nine terms) with reflection below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    let series = LANCZOS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS[0], |acc, (i, c)| acc + c / (x + i as f64 + 1.0));
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * series
}

/// Gauss series of `₂F₁(a, b; c; x)`, used only for `|x| ≤ 1/2`.
fn gauss_series(a: f64, b: f64, c: f64, x: f64) -> f64 {
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 0..10_000 {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * x;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `Γ(4/3) Γ(1/3) / Γ(2/3)`, the value of `₂F₁(1/3, 2/3; 4/3; 1)`.
pub fn hyp2f1_third_at_one() -> f64 {
    gamma(4.0 / 3.0) * gamma(1.0 / 3.0) / gamma(2.0 / 3.0)
}

/// `₂F₁(1/3, 2/3; 4/3; z)` for `0 ≤ z ≤ 1`. Above 1/2 the `z → 1 − z`
/// connection formula keeps the series short; `z = 1` is Gauss's sum.
pub fn hyp2f1_third(z: f64) -> Result<f64, CftError> {
    let (a, b, c) = (1.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0);
    if !(0.0..=1.0).contains(&z) {
        return Err(CftError::Domain(format!("2F1 argument {z} outside [0, 1]")));
    }
    if z <= 0.5 {
        return Ok(gauss_series(a, b, c, z));
    }
    let w = 1.0 - z;
    // ₂F₁(a, b; b; x) = (1 − x)^(−a) collapses the first connection term.
    let first = hyp2f1_third_at_one() * z.powf(-a);
    if w == 0.0 {
        return Ok(first);
    }
    let second_coeff = gamma(c) * gamma(a + b - c) / (gamma(a) * gamma(b));
    let second = w.powf(c - a - b) * second_coeff * gauss_series(c - a, c - b, c - a - b + 1.0, w);
    Ok(first + second)
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let next = (0.5 * (a + b), (a * b).sqrt());
        if (next.0 - next.1).abs() <= 1e-16 * next.0 {
            return next.0;
        }
        (a, b) = next;
    }
    a
}

/// Complete elliptic integral `K(m)` by the arithmetic–geometric mean.
pub fn ellipk(m: f64) -> Result<f64, CftError> {
    if !(0.0..1.0).contains(&m) {
        return Err(CftError::Domain(format!("K parameter {m} outside [0, 1)")));
    }
    Ok(PI / (2.0 * agm(1.0, (1.0 - m).sqrt())))
}

/// `K(1 − m)`, accurate even when `1 − m` rounds to 1.
pub fn ellipk_complement(m: f64) -> Result<f64, CftError> {
    if !(m > 0.0 && m <= 1.0) {
        return Err(CftError::Domain(format!(
            "complementary parameter {m} outside (0, 1]"
        )));
    }
    Ok(PI / (2.0 * agm(1.0, m.sqrt())))
}

/// Incomplete integral `∫₀^z dt / √((1 − t²)(1 − m t²))` for `0 ≤ z ≤ 1`,
/// evaluated as `∫₀^{asin z} dθ / √(1 − m sin²θ)` so the `t = 1` endpoint
/// singularity disappears.
pub fn ellipf_sine(z: f64, m: f64) -> Result<f64, CftError> {
    if !(0.0..=1.0).contains(&z) || !(0.0..1.0).contains(&m) {
        return Err(CftError::Domain(format!(
            "incomplete integral at z = {z}, m = {m}"
        )));
    }
    if z == 1.0 {
        return ellipk(m);
    }
    let phi = z.asin();
    integrate(
        |th| 1.0 / (1.0 - m * th.sin().powi(2)).sqrt(),
        0.0,
        phi,
        1e-14,
    )
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point
/// Gauss rule.
fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let fc = f(c);
    let (mut k, mut g) = (WGK[7] * fc, WG[3] * fc);
    for j in 0..7 {
        let pair = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        k += WGK[j] * pair;
        if j % 2 == 1 {
            g += WG[j / 2] * pair;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, CftError> {
    let mut stack = vec![(a, b, tol, 0u32)];
    let mut total = 0.0;
    while let Some((lo, hi, eps, depth)) = stack.pop() {
        let (value, err) = kronrod(&f, lo, hi);
        if err <= eps.max(1e-300) || depth >= 60 || (hi - lo).abs() < 1e-15 * (1.0 + lo.abs()) {
            if err > eps.max(1e-300) && depth >= 60 {
                return Err(CftError::NoConvergence(format!(
                    "quadrature on [{lo}, {hi}] stalled with error {err:e}"
                )));
            }
            total += value;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        stack.push((lo, mid, 0.5 * eps, depth + 1));
        stack.push((mid, hi, 0.5 * eps, depth + 1));
    }
    Ok(total)
}

/// Bisection of a monotone `f` on `[lo, hi]` for `f = 0`.
pub fn bisect(
    f: impl Fn(f64) -> Result<f64, CftError>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64, CftError> {
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(CftError::NoConvergence(format!(
            "no sign change on [{lo}, {hi}]: f = {flo:e}, {fhi:e}"
        )));
    }
    let rising = fhi > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if (v > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= tol {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn gamma_values_and_reflection() {
        assert!(close(gamma(1.0 / 3.0), 2.678_938_534_707_747_6, 1e-13));
        assert!(close(gamma(2.0 / 3.0), 1.354_117_939_426_400_4, 1e-13));
        assert!(close(gamma(4.0 / 3.0), 0.892_979_511_569_249_2, 1e-13));
        assert!(close(gamma(5.0), 24.0, 1e-13));
        for k in 1..20 {
            let x = k as f64 / 20.0;
            let lhs = gamma(x) * gamma(1.0 - x);
            assert!(close(lhs, PI / (PI * x).sin(), 1e-13), "x = {x}");
        }
    }

    #[test]
    fn hypergeometric_endpoints() {
        assert_eq!(hyp2f1_third(0.0).unwrap(), 1.0);
        assert!(close(hyp2f1_third_at_one(), 1.766_638_750_285_45, 1e-13));
        assert_eq!(hyp2f1_third(1.0).unwrap(), hyp2f1_third_at_one());
        assert!(hyp2f1_third(1.5).is_err());
        assert!(hyp2f1_third(-0.1).is_err());
        // Both branches meet at 1/2.
        let below = hyp2f1_third(0.5).unwrap();
        let above = hyp2f1_third(0.5 + 1e-12).unwrap();
        assert!(close(below, above, 1e-11));
    }

    #[test]
    fn elliptic_basics() {
        assert!(close(ellipk(0.0).unwrap(), PI / 2.0, 1e-15));
        assert!(ellipk(1.0).is_err());
        assert!(close(
            ellipk_complement(0.5).unwrap(),
            ellipk(0.5).unwrap(),
            1e-15
        ));
        assert!(close(
            ellipf_sine(1.0, 0.3).unwrap(),
            ellipk(0.3).unwrap(),
            1e-15
        ));
        assert_eq!(ellipf_sine(0.0, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_integrates_smooth_functions() {
        let v = integrate(|x| x.powi(6), 0.0, 1.0, 1e-14).unwrap();
        assert!(close(v, 1.0 / 7.0, 1e-14));
        let v = integrate(f64::exp, -1.0, 2.0, 1e-13).unwrap();
        assert!(close(v, 2f64.exp() - (-1f64).exp(), 1e-13));
        let v = integrate(|x| 1.0 / (1.0 + x * x), 0.0, 1.0, 1e-14).unwrap();
        assert!(close(v, PI / 4.0, 1e-14));
    }

    #[test]
    fn bisection_finds_roots() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14).unwrap();
        assert!(close(r, 2f64.sqrt(), 1e-13));
        assert!(bisect(|x| Ok(x * x + 1.0), 0.0, 2.0, 1e-14).is_err());
    }
}
