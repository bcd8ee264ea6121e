//! Statistical battery: descriptive helpers, Levene's test, Student and
//! Welch two-sample t-tests, the Levene-gated t-test and Pearson correlation.

mod special;

use serde::Serialize;

use crate::error::{Error, Result};

pub use special::{f_sf, ln_beta, ln_gamma, reg_inc_beta, t_cdf, t_quantile, t_two_sided_p};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance (n - 1 denominator).
pub fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Median with the midpoint convention for even counts; `None` when empty.
pub fn median(x: &[f64]) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Student,
    Welch,
    Levene,
    Pearson,
}

impl TestKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestKind::Student => "student",
            TestKind::Welch => "welch",
            TestKind::Levene => "levene",
            TestKind::Pearson => "pearson",
        }
    }
}

/// Outcome of the variance gate that picked the t-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gate {
    pub levene_p: f64,
    pub chosen: TestKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub test: TestKind,
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    pub gate: Option<Gate>,
    /// Set when the statistic hit a degenerate case (zero variance) and the
    /// reported values follow a convention rather than the formula.
    pub degenerate: bool,
}

impl TestReport {
    /// `*` for p < 0.05, `**` for p < 0.01.
    pub fn stars(&self) -> &'static str {
        significance_stars(self.p_value)
    }
}

pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

fn check_two_samples(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::invalid(format!(
            "two-sample tests need at least 2 observations per group (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples contain non-finite values"));
    }
    Ok(())
}

/// Result for a zero-variance comparison: equal means give t = 0, p = 1,
/// different means an infinite statistic with p = 0.
fn degenerate_t(test: TestKind, diff: f64, df: f64) -> TestReport {
    let (statistic, p_value) = if diff == 0.0 {
        (0.0, 1.0)
    } else {
        (diff.signum() * f64::INFINITY, 0.0)
    };
    TestReport {
        test,
        statistic,
        df,
        p_value,
        gate: None,
        degenerate: true,
    }
}

/// Two-sample Student t-test with pooled variance, two-sided.
pub fn student_t(x: &[f64], y: &[f64]) -> Result<TestReport> {
    check_two_samples(x, y)?;
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let diff = mean(x) - mean(y);
    let df = n1 + n2 - 2.0;
    let pooled = ((n1 - 1.0) * sample_variance(x) + (n2 - 1.0) * sample_variance(y)) / df;
    if pooled == 0.0 {
        return Ok(degenerate_t(TestKind::Student, diff, df));
    }
    let t = diff / (pooled * (1.0 / n1 + 1.0 / n2)).sqrt();
    Ok(TestReport {
        test: TestKind::Student,
        statistic: t,
        df,
        p_value: t_two_sided_p(t, df)?,
        gate: None,
        degenerate: false,
    })
}

/// Welch's unequal-variance t-test with Welch-Satterthwaite df, two-sided.
pub fn welch_t(x: &[f64], y: &[f64]) -> Result<TestReport> {
    check_two_samples(x, y)?;
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let diff = mean(x) - mean(y);
    let (q1, q2) = (sample_variance(x) / n1, sample_variance(y) / n2);
    let se2 = q1 + q2;
    if se2 == 0.0 {
        return Ok(degenerate_t(TestKind::Welch, diff, n1 + n2 - 2.0));
    }
    let df = se2 * se2 / (q1 * q1 / (n1 - 1.0) + q2 * q2 / (n2 - 1.0));
    let t = diff / se2.sqrt();
    Ok(TestReport {
        test: TestKind::Welch,
        statistic: t,
        df,
        p_value: t_two_sided_p(t, df)?,
        gate: None,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LeveneCenter {
    #[default]
    Mean,
    /// Brown-Forsythe variant.
    Median,
}

/// Levene's test for equal variances of two groups: one-way ANOVA on the
/// absolute deviations from each group's center. `df` holds the
/// denominator degrees of freedom (the numerator df is 1).
pub fn levene(x: &[f64], y: &[f64], center: LeveneCenter) -> Result<TestReport> {
    check_two_samples(x, y)?;
    let dev = |s: &[f64]| -> Vec<f64> {
        let c = match center {
            LeveneCenter::Mean => mean(s),
            LeveneCenter::Median => median(s).unwrap_or(0.0),
        };
        s.iter().map(|v| (v - c).abs()).collect()
    };
    let (zx, zy) = (dev(x), dev(y));
    let (n1, n2) = (zx.len() as f64, zy.len() as f64);
    let n = n1 + n2;
    let (m1, m2) = (mean(&zx), mean(&zy));
    let grand = (zx.iter().sum::<f64>() + zy.iter().sum::<f64>()) / n;
    let between = n1 * (m1 - grand).powi(2) + n2 * (m2 - grand).powi(2);
    let within: f64 = zx.iter().map(|z| (z - m1).powi(2)).sum::<f64>() + zy.iter().map(|z| (z - m2).powi(2)).sum::<f64>();
    let df2 = n - 2.0;
    if within == 0.0 {
        // Every deviation equals its group mean; with equal group means there
        // is no evidence against equal spread.
        let (statistic, p_value) = if between == 0.0 { (0.0, 1.0) } else { (f64::INFINITY, 0.0) };
        return Ok(TestReport {
            test: TestKind::Levene,
            statistic,
            df: df2,
            p_value,
            gate: None,
            degenerate: true,
        });
    }
    let w = df2 * between / within;
    Ok(TestReport {
        test: TestKind::Levene,
        statistic: w,
        df: df2,
        p_value: f_sf(w, 1.0, df2)?,
        gate: None,
        degenerate: false,
    })
}

pub const DEFAULT_GATE_ALPHA: f64 = 0.05;

/// Mean-centered Levene first; Welch when its p-value falls below
/// `gate_alpha`, Student otherwise.
pub fn gated_ttest(x: &[f64], y: &[f64], gate_alpha: f64) -> Result<TestReport> {
    gated_ttest_centered(x, y, gate_alpha, LeveneCenter::Mean)
}

/// [`gated_ttest`] with a chosen Levene center.
pub fn gated_ttest_centered(x: &[f64], y: &[f64], gate_alpha: f64, center: LeveneCenter) -> Result<TestReport> {
    let lev = levene(x, y, center)?;
    let chosen = if lev.p_value < gate_alpha {
        TestKind::Welch
    } else {
        TestKind::Student
    };
    let mut report = match chosen {
        TestKind::Welch => welch_t(x, y)?,
        _ => student_t(x, y)?,
    };
    report.gate = Some(Gate {
        levene_p: lev.p_value,
        chosen,
    });
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Pearson correlation with the two-sided t-based p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("pearson needs equal lengths ({} vs {})", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::invalid("pearson needs at least 3 pairs"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("pearson inputs contain non-finite values"));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::undefined("pearson correlation of a constant series"));
    }
    let rho = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(Correlation {
        rho,
        p_value: pearson_p_value(rho, x.len())?,
        n: x.len(),
    })
}

/// Two-sided p-value of a sample correlation `rho` over `n` pairs.
pub fn pearson_p_value(rho: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::invalid("correlation p-value needs n >= 3"));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!("correlation {rho} outside [-1, 1]")));
    }
    let df = n as f64 - 2.0;
    if rho.abs() == 1.0 {
        return Ok(0.0);
    }
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    t_two_sided_p(t, df)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn identical_samples_give_t_zero_p_one() {
        let x = [1.0, 2.0, 3.5, 4.0];
        for r in [student_t(&x, &x).unwrap(), welch_t(&x, &x).unwrap()] {
            assert_eq!(r.statistic, 0.0);
            assert_eq!(r.p_value, 1.0);
        }
        let g = gated_ttest(&x, &x, DEFAULT_GATE_ALPHA).unwrap();
        assert_eq!(g.gate.unwrap().levene_p, 1.0);
        assert_eq!(g.gate.unwrap().chosen, TestKind::Student);
        assert_eq!(g.p_value, 1.0);
    }

    #[test]
    fn swapping_samples_negates_t() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.0, 3.0, 4.0, 5.0, 6.0, 9.0];
        for f in [student_t, welch_t] {
            let a = f(&x, &y).unwrap();
            let b = f(&y, &x).unwrap();
            assert_eq!(a.statistic, -b.statistic);
            assert_eq!(a.p_value, b.p_value);
        }
    }

    #[test]
    fn welch_reduces_to_student_for_balanced_equal_variance() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [3.0, 4.0, 5.0, 6.0, 7.0];
        let s = student_t(&x, &y).unwrap();
        let w = welch_t(&x, &y).unwrap();
        assert_eq!(w.df, 8.0);
        assert_eq!(w.statistic, s.statistic);
        assert!((w.p_value - s.p_value).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_conventions() {
        let x = [2.0, 2.0, 2.0];
        let y = [3.0, 3.0];
        let r = student_t(&x, &y).unwrap();
        assert!(r.degenerate && r.p_value == 0.0 && r.statistic == f64::NEG_INFINITY);
        let l = levene(&x, &y, LeveneCenter::Mean).unwrap();
        assert!(l.degenerate && l.p_value == 1.0);
    }

    #[test]
    fn levene_is_shift_invariant() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| v + 10.0).collect();
        let r = levene(&x, &y, LeveneCenter::Mean).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn levene_median_equals_mean_on_symmetric_data() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [0.0, 5.0, 10.0];
        let a = levene(&x, &y, LeveneCenter::Mean).unwrap();
        let b = levene(&x, &y, LeveneCenter::Median).unwrap();
        assert_eq!(a.statistic, b.statistic);
        assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn pearson_affine_and_negation() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.7 + (i % 3) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let c = pearson(&x, &y).unwrap();
        assert!((c.rho - 1.0).abs() < 1e-12 && c.p_value < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap().rho + 1.0).abs() < 1e-12);
        assert!(pearson(&x, &vec![1.0; 10]).is_err());
        assert!(pearson(&x[..2], &y[..2]).is_err());
    }

    #[test]
    fn published_correlation_pairs() {
        assert!((pearson_p_value(0.396, 45).unwrap() - 0.007).abs() <= 0.001);
        assert!((pearson_p_value(0.608, 17).unwrap() - 0.010).abs() <= 0.002);
    }

    #[test]
    fn stars() {
        assert_eq!(significance_stars(0.004), "**");
        assert_eq!(significance_stars(0.03), "*");
        assert_eq!(significance_stars(0.05), "");
    }
}
