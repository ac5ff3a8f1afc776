//! Correlation and rank tests with the special functions they need.

#![allow(clippy::excessive_precision)]

use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Test statistic with its two-sided p-value and the sample sizes involved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Which route produced a Mann-Whitney p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PMethod {
    Exact,
    Normal,
}

/// Mann-Whitney result. `statistic` is `u1`, the count of `(a_i, b_j)` pairs
/// with `a_i > b_j` plus one half per tie.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    pub result: StatResult,
    pub u1: f64,
    pub u2: f64,
    pub method: PMethod,
}

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // The fraction converges fastest on the side of the mean.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-sided tail probability of Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    reg_inc_beta(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Regularized lower incomplete gamma `P(a, x)`.
fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        let mut ap = a;
        let mut sum = 1.0 / a;
        let mut del = sum;
        for _ in 0..10_000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * (-x + a * x.ln() - ln_gamma(a)).exp()
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Upper incomplete gamma `Q(a, x)` by continued fraction, for `x >= a + 1`.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=10_000 {
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
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    let z = x * x;
    if z < 1.5 {
        1.0 - gamma_p(0.5, z)
    } else {
        gamma_q_cf(0.5, z)
    }
}

/// Upper tail of the standard normal distribution.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample Pearson correlation with a two-sided t-test p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<StatResult, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(AnalysisError::TooFewSamples { needed: 3, got: n });
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
        return Err(AnalysisError::ZeroVariance);
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        student_t_two_sided(t, df)
    };
    Ok(StatResult {
        statistic: r,
        p_value: p,
        n1: n,
        n2: n,
    })
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<StatResult, AnalysisError> {
    pearson(&ranks(x), &ranks(y))
}

/// Bonferroni adjustment for `m` comparisons.
pub fn bonferroni(p: f64, m: usize) -> f64 {
    (p * m as f64).min(1.0)
}

/// Largest combined sample size for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 16;

/// Number of arrangements of `n1` + `n2` untied ranks giving each U value,
/// indexed `0..=n1*n2`.
fn u_distribution(n1: usize, n2: usize) -> Vec<f64> {
    // counts[m][n][u]; built up over m with a rolling table over n.
    let max_u = n1 * n2;
    let mut table: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.0; max_u + 1]; n2 + 1]; n1 + 1];
    for m in 0..=n1 {
        for n in 0..=n2 {
            if m == 0 || n == 0 {
                table[m][n][0] = 1.0;
                continue;
            }
            for u in 0..=m * n {
                // The largest value belongs to sample one (adds n to U) or sample two.
                let from_a = if u >= n { table[m - 1][n][u - n] } else { 0.0 };
                let from_b = table[m][n - 1][u];
                table[m][n][u] = from_a + from_b;
            }
        }
    }
    table.swap_remove(n1).swap_remove(n2)
}

/// Mann-Whitney U test, two-sided. Exact null distribution when there are no
/// ties and `n1 + n2 <= EXACT_LIMIT`; otherwise the normal approximation with
/// tie and continuity corrections.
pub fn mann_whitney(a: &[f64], b: &[f64]) -> Result<MannWhitney, AnalysisError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::TooFewSamples {
            needed: 1,
            got: a.len().min(b.len()),
        });
    }
    let (n1, n2) = (a.len(), b.len());
    let mut u1 = 0.0;
    let mut ties = false;
    for &x in a {
        for &y in b {
            if x > y {
                u1 += 1.0;
            } else if x == y {
                u1 += 0.5;
                ties = true;
            }
        }
    }
    let nn = (n1 * n2) as f64;
    let u2 = nn - u1;
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let any_tie = ties || pooled.windows(2).any(|w| w[0] == w[1]);
    let (p, method) = if !any_tie && n1 + n2 <= EXACT_LIMIT {
        let dist = u_distribution(n1, n2);
        let total: f64 = dist.iter().sum();
        let u = u1 as usize;
        let lower: f64 = dist[..=u].iter().sum::<f64>() / total;
        let upper: f64 = dist[u..].iter().sum::<f64>() / total;
        ((2.0 * lower.min(upper)).min(1.0), PMethod::Exact)
    } else {
        let n = (n1 + n2) as f64;
        let mut tie_term = 0.0;
        let mut i = 0;
        while i < pooled.len() {
            let mut j = i;
            while j + 1 < pooled.len() && pooled[j + 1] == pooled[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
        let var = nn / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
        let p = if var <= 0.0 {
            1.0
        } else {
            let z = ((u1 - nn / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
            (2.0 * normal_sf(z)).min(1.0)
        };
        (p, PMethod::Normal)
    };
    Ok(MannWhitney {
        result: StatResult {
            statistic: u1,
            p_value: p,
            n1,
            n2,
        },
        u1,
        u2,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ln_gamma_known_values() {
        assert_relative_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(ln_gamma(5.0), 24f64.ln(), epsilon = 1e-13);
        assert_relative_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), epsilon = 1e-14);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, b) = 1 - (1-x)^b and I_x(a, 1) = x^a
        for &x in &[0.01, 0.2, 0.5, 0.77, 0.99] {
            assert_relative_eq!(reg_inc_beta(1.0, 3.0, x), 1.0 - (1.0 - x).powi(3), epsilon = 1e-13);
            assert_relative_eq!(reg_inc_beta(2.5, 1.0, x), x.powf(2.5), epsilon = 1e-13);
        }
        assert_eq!(reg_inc_beta(2.0, 2.0, 0.0), 0.0);
        assert_eq!(reg_inc_beta(2.0, 2.0, 1.0), 1.0);
    }

    #[test]
    fn t_with_one_df_is_cauchy() {
        // two-sided Cauchy tail: 1 - 2 atan(t) / pi
        for &t in &[0.1, 1.0, 3.0, 25.0] {
            let expected = 1.0 - 2.0 * f64::atan(t) / std::f64::consts::PI;
            assert_relative_eq!(student_t_two_sided(t, 1.0), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn erfc_reference_points() {
        assert_relative_eq!(erfc(0.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(erfc(1.0), 0.157_299_207_050_285_13, epsilon = 1e-14);
        assert_relative_eq!(erfc(2.5), 4.069_520_174_449_589_7e-4, max_relative = 1e-12);
        assert_relative_eq!(erfc(-1.0), 2.0 - 0.157_299_207_050_285_13, epsilon = 1e-14);
        assert_relative_eq!(normal_sf(1.959_963_984_540_054), 0.025, epsilon = 1e-12);
    }

    #[test]
    fn pearson_examples() {
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert_relative_eq!(r.statistic, 1.0, epsilon = 1e-15);
        assert_eq!(r.p_value, 0.0);
        let r = pearson(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap();
        assert_relative_eq!(r.statistic, -1.0, epsilon = 1e-15);
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert_relative_eq!(r.statistic, 0.5, epsilon = 1e-15);
        // df = 1: p = 1 - 2 atan(t)/pi with t = 0.5 / sqrt(0.75)
        assert_relative_eq!(r.p_value, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn pearson_errors() {
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(AnalysisError::ZeroVariance));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(AnalysisError::TooFewSamples { .. })));
        assert!(matches!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(AnalysisError::LengthMismatch(3, 2))));
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn spearman_is_monotone_invariant() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.powi(3)).collect();
        assert_relative_eq!(spearman(&x, &y).unwrap().statistic, 1.0);
    }

    #[test]
    fn mann_whitney_separated_pair() {
        let mw = mann_whitney(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(mw.u1, 0.0);
        assert_eq!(mw.u2, 4.0);
        assert_eq!(mw.method, PMethod::Exact);
        assert_relative_eq!(mw.result.p_value, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn mann_whitney_identical_samples() {
        let a = [3.0, 1.0, 4.0, 1.0, 5.0];
        let mw = mann_whitney(&a, &a).unwrap();
        assert_eq!(mw.method, PMethod::Normal);
        assert_relative_eq!(mw.result.p_value, 1.0, epsilon = 1e-12);
        assert_eq!(mw.u1 + mw.u2, 25.0);
    }

    #[test]
    fn mann_whitney_interleaved() {
        let mw = mann_whitney(&[1.0, 3.0, 5.0], &[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(mw.u1, 3.0);
        assert!(mw.result.p_value > 0.5);
    }

    #[test]
    fn u_distribution_sums_to_binomial() {
        let d = u_distribution(4, 6);
        assert_eq!(d.iter().sum::<f64>(), 210.0);
        assert_eq!(d.len(), 25);
        // symmetric
        for u in 0..=24 {
            assert_eq!(d[u], d[24 - u]);
        }
    }

    #[test]
    fn bonferroni_caps_at_one() {
        assert_eq!(bonferroni(0.01, 18), 0.18);
        assert_eq!(bonferroni(0.2, 18), 1.0);
    }
}
