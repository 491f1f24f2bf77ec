//! Chi-squared CDF and quantile via the regularized lower incomplete gamma.

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

// Lanczos approximation, g = 7, n = 9.
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

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`.
///
/// Series expansion for `x < a + 1`, Lentz continued fraction for the
/// complement otherwise.
pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64> {
    if a.is_nan() || a <= 0.0 || x.is_nan() || x < 0.0 {
        return Err(Error::InvalidInput(format!(
            "incomplete gamma needs a > 0 and x >= 0 (a = {a}, x = {x})"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                return Ok((sum.ln() + log_prefactor).exp().min(1.0));
            }
        }
        Err(Error::Numerical(format!(
            "incomplete gamma series did not converge (a = {a}, x = {x})"
        )))
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                let q = (h.ln() + log_prefactor).exp();
                return Ok((1.0 - q).max(0.0));
            }
        }
        Err(Error::Numerical(format!(
            "incomplete gamma continued fraction did not converge (a = {a}, x = {x})"
        )))
    }
}

pub fn chi2_cdf(x: f64, dof: usize) -> Result<f64> {
    if dof == 0 {
        return Err(Error::InvalidInput("chi-squared needs dof >= 1".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    regularized_gamma_p(dof as f64 / 2.0, x / 2.0)
}

/// Standard normal quantile (Acklam's rational approximation, relative
/// error below 1.2e-9). Only used to seed the chi-squared inversion.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Wilson-Hilferty approximation to the chi-squared quantile.
fn wilson_hilferty(p: f64, dof: f64) -> f64 {
    let k = 2.0 / (9.0 * dof);
    let base = 1.0 - k + normal_quantile(p) * k.sqrt();
    dof * base.max(1e-3).powi(3)
}

/// Returns `a` with `chi2_cdf(a, dof) = p`.
///
/// Bisection on a bracket grown around the Wilson-Hilferty guess; the cap of
/// 200 iterations covers both bracket expansion and bisection.
pub fn chi2_quantile(p: f64, dof: usize) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidInput(format!(
            "quantile level must be in (0, 1), got {p}"
        )));
    }
    if dof == 0 {
        return Err(Error::InvalidInput("chi-squared needs dof >= 1".into()));
    }
    let cdf = |x: f64| chi2_cdf(x, dof);
    let guess = wilson_hilferty(p, dof as f64).max(f64::MIN_POSITIVE);

    let mut iters = 0;
    let mut hi = guess;
    while cdf(hi)? < p {
        hi *= 2.0;
        iters += 1;
        if iters > MAX_ITER {
            return Err(Error::Numerical(format!(
                "chi-squared quantile bracket failed (p = {p}, dof = {dof})"
            )));
        }
    }
    let mut lo = guess;
    while lo > 0.0 && cdf(lo)? > p {
        lo *= 0.5;
        iters += 1;
        if lo < 1e-300 {
            lo = 0.0;
        }
        if iters > MAX_ITER {
            return Err(Error::Numerical(format!(
                "chi-squared quantile bracket failed (p = {p}, dof = {dof})"
            )));
        }
    }

    while iters <= MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let f = cdf(mid)? - p;
        if f.abs() < 1e-14 || hi - lo <= 4.0 * f64::EPSILON * mid {
            return Ok(mid);
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    let mid = 0.5 * (lo + hi);
    if (cdf(mid)? - p).abs() <= 1e-9 {
        Ok(mid)
    } else {
        Err(Error::Numerical(format!(
            "chi-squared quantile inversion did not converge (p = {p}, dof = {dof})"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ln_gamma_integers() {
        // ln((k-1)!)
        let mut fact = 1.0f64;
        for k in 1..20 {
            assert_abs_diff_eq!(ln_gamma(k as f64), fact.ln(), epsilon = 1e-12);
            fact *= k as f64;
        }
        assert_abs_diff_eq!(
            ln_gamma(0.5),
            std::f64::consts::PI.sqrt().ln(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn two_dof_closed_form() {
        // CDF of chi2_2 is 1 - exp(-x/2).
        for &x in &[0.01, 0.5, 1.0, 3.0, 10.0, 40.0] {
            assert_abs_diff_eq!(chi2_cdf(x, 2).unwrap(), 1.0 - (-x / 2.0).exp(), epsilon = 1e-14);
        }
        assert_abs_diff_eq!(chi2_quantile(0.01, 2).unwrap(), -2.0 * 0.99f64.ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(chi2_quantile(0.5, 2).unwrap(), -2.0 * 0.5f64.ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(chi2_quantile(0.01, 2).unwrap(), 0.020_100_7, epsilon = 1e-7);
        assert_abs_diff_eq!(chi2_quantile(0.5, 2).unwrap(), 1.386_294_4, epsilon = 1e-7);
    }

    #[test]
    fn round_trip() {
        for &p in &[0.001, 0.01, 0.5, 0.99] {
            for &d in &[1usize, 5, 50] {
                let a = chi2_quantile(p, d).unwrap();
                assert_abs_diff_eq!(chi2_cdf(a, d).unwrap(), p, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn extreme_levels_still_invert() {
        for &p in &[1e-10, 1e-6, 0.999_999, 1.0 - 1e-12] {
            for &d in &[1usize, 2, 10, 100, 500] {
                let a = chi2_quantile(p, d).unwrap();
                assert!(a > 0.0 && a.is_finite());
                assert_abs_diff_eq!(chi2_cdf(a, d).unwrap(), p, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_levels() {
        assert!(chi2_quantile(0.0, 3).is_err());
        assert!(chi2_quantile(1.0, 3).is_err());
        assert!(chi2_quantile(f64::NAN, 3).is_err());
        assert!(chi2_quantile(0.5, 0).is_err());
    }

    #[test]
    fn normal_quantile_symmetry() {
        assert_abs_diff_eq!(normal_quantile(0.5), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(normal_quantile(0.975), 1.959_963_985, epsilon = 1e-8);
        assert_abs_diff_eq!(normal_quantile(0.01), -normal_quantile(0.99), epsilon = 1e-9);
    }
}
