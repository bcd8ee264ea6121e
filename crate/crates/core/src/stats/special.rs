//! Special functions behind the t and F distributions.

use crate::error::{Error, Result};

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

/// Natural log of the gamma function for x > 0 (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let s = (std::f64::consts::PI * x).sin();
        return std::f64::consts::PI.ln() - s.abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const CF_MAX_ITER: usize = 10_000;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// Regularized incomplete beta function I_x(a, b).
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(format!("incomplete beta needs a, b > 0 (got a={a}, b={b})")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("incomplete beta needs x in [0, 1] (got {x})")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    // The continued fraction converges fast for x < (a+1)/(a+b+2); use the
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the other side.
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - beta_cf_scaled(b, a, 1.0 - x)?)
    } else {
        beta_cf_scaled(a, b, x)
    }
}

/// x^a (1-x)^b / (a B(a,b)) times the Lentz-evaluated continued fraction.
fn beta_cf_scaled(a: f64, b: f64, x: f64) -> Result<f64> {
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    let front = ln_front.exp() / a;

    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok((front * h).clamp(0.0, 1.0));
        }
    }
    Err(Error::Numerical(format!(
        "incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})"
    )))
}

/// Student t cumulative distribution function.
pub fn t_cdf(t: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) {
        return Err(Error::invalid(format!("t distribution needs df > 0 (got {df})")));
    }
    if t == 0.0 {
        return Ok(0.5);
    }
    if t.is_infinite() {
        return Ok(if t > 0.0 { 1.0 } else { 0.0 });
    }
    let tail = 0.5 * reg_inc_beta(0.5 * df, 0.5, df / (df + t * t))?;
    Ok(if t > 0.0 { 1.0 - tail } else { tail })
}

/// Two-sided p-value P(|T| >= |t|).
pub fn t_two_sided_p(t: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) {
        return Err(Error::invalid(format!("t distribution needs df > 0 (got {df})")));
    }
    if t.is_nan() {
        return Err(Error::undefined("t statistic is NaN"));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    reg_inc_beta(0.5 * df, 0.5, df / (df + t * t))
}

/// Upper quantile: the t with P(T <= t) = `prob`.
pub fn t_quantile(prob: f64, df: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::invalid(format!("quantile probability must be in (0, 1) (got {prob})")));
    }
    if prob == 0.5 {
        return Ok(0.0);
    }
    if prob < 0.5 {
        return Ok(-t_quantile(1.0 - prob, df)?);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while t_cdf(hi, df)? < prob {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Numerical("t quantile bracket overflow".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_cdf(mid, df)? < prob {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Survival function P(F >= f) of the F distribution with (d1, d2) df.
pub fn f_sf(f: f64, d1: f64, d2: f64) -> Result<f64> {
    if !(d1 > 0.0 && d2 > 0.0) {
        return Err(Error::invalid(format!("F distribution needs positive df (got {d1}, {d2})")));
    }
    if f <= 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    reg_inc_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series for I_x(a,b), independent of the continued fraction:
    /// I_x(a,b) = x^a (1-x)^b / (a B(a,b)) * sum_n B(a+1,n+1)/B(a+b,n+1) x^n,
    /// written as the hypergeometric-type recurrence below.
    fn series_inc_beta(a: f64, b: f64, x: f64) -> f64 {
        let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp() / a;
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 0..100_000 {
            let n = n as f64;
            term *= (a + b + n) / (a + 1.0 + n) * x;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        front * sum
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            fact *= n as f64;
            assert!((ln_gamma(n as f64 + 1.0) - fact.ln()).abs() < 1e-12, "n={n}");
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn endpoints() {
        for &(a, b) in &[(0.5, 0.5), (2.0, 3.0), (10.0, 0.5)] {
            assert_eq!(reg_inc_beta(a, b, 0.0).unwrap(), 0.0);
            assert_eq!(reg_inc_beta(a, b, 1.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn uniform_case_is_identity() {
        for &x in &[0.25, 0.5, 0.9] {
            assert!((reg_inc_beta(1.0, 1.0, x).unwrap() - x).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_midpoint_is_half() {
        for &a in &[0.5, 2.0, 7.0] {
            assert!((reg_inc_beta(a, a, 0.5).unwrap() - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn continued_fraction_agrees_with_series() {
        for &(a, b) in &[(0.5, 0.5), (1.5, 2.5), (3.0, 7.0), (10.0, 4.0), (21.5, 0.5), (0.7, 12.0)] {
            for i in 1..20 {
                let x = i as f64 / 20.0 * 0.6;
                let cf = reg_inc_beta(a, b, x).unwrap();
                let s = series_inc_beta(a, b, x);
                assert!((cf - s).abs() < 1e-12, "a={a} b={b} x={x}: {cf} vs {s}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(reg_inc_beta(0.0, 1.0, 0.5).is_err());
        assert!(reg_inc_beta(1.0, -1.0, 0.5).is_err());
        assert!(reg_inc_beta(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn t_cdf_is_half_at_zero_and_monotone() {
        for &df in &[1.0, 2.5, 10.0, 300.0] {
            assert_eq!(t_cdf(0.0, df).unwrap(), 0.5);
            let mut prev = 0.0;
            for i in -40..=40 {
                let c = t_cdf(i as f64 * 0.25, df).unwrap();
                assert!(c >= prev);
                prev = c;
            }
        }
    }

    #[test]
    fn cauchy_quantile() {
        // df = 1 is Cauchy: t_{0.975} = tan(0.475 pi)
        let q = t_quantile(0.975, 1.0).unwrap();
        assert!((q - (0.475 * std::f64::consts::PI).tan()).abs() < 1e-9, "{q}");
        assert!((q - 12.7062).abs() < 1e-4);
    }

    #[test]
    fn f_sf_matches_closed_form_for_d1_2() {
        // For d1 = 2: P(F > f) = (1 + 2 f / d2)^(-d2/2)
        for &d2 in &[3.0f64, 10.0, 40.0] {
            for &f in &[0.1, 1.0, 4.0] {
                let exact = (1.0 + 2.0 * f / d2).powf(-d2 / 2.0);
                assert!((f_sf(f, 2.0, d2).unwrap() - exact).abs() < 1e-13);
            }
        }
    }
}
