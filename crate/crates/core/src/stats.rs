//! Statistical machinery used by the test suites and the experiment runner:
//! χ² goodness of fit, two-sample Kolmogorov–Smirnov, Kuiper's test for
//! circular uniformity, and the two-sample energy distance.
//!
//! Everything is implemented here at the precision the acceptance suites
//! need (absolute p-value errors well below 1e-6), so no external special
//! function library is required.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Natural log of the gamma function (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return pi.ln() - (pi * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.999_999_999_999_809_93;
    for (i, c) in COEF.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(a, x) = γ(a,x)/Γ(a).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_p domain: a > 0, x >= 0");
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // series representation
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..500 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * (-x + a * x.ln() - ln_gamma(a)).exp()
    } else {
        // continued fraction for Q(a, x), modified Lentz
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        1.0 - (-x + a * x.ln() - ln_gamma(a)).exp() * h
    }
}

/// Error function via erf(x) = sgn(x) P(1/2, x²).
pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * gamma_p(0.5, x * x)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// CDF of the χ² distribution with `dof` degrees of freedom.
pub fn chi2_cdf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_p(dof as f64 / 2.0, x / 2.0)
    }
}

/// Result of a goodness-of-fit or uniformity test.
#[derive(Debug, Clone, Copy)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Pearson χ² goodness-of-fit test of observed bin counts against expected
/// bin probabilities. Degrees of freedom are `bins - 1`.
pub fn chi2_gof(observed: &[u64], expected_probs: &[f64]) -> Result<TestResult> {
    if observed.len() != expected_probs.len() {
        return Err(Error::DimensionMismatch {
            expected: observed.len(),
            got: expected_probs.len(),
        });
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(Error::invalid("chi2_gof: empty sample"));
    }
    let mut stat = 0.0;
    for (&obs, &p) in observed.iter().zip(expected_probs) {
        let exp = n as f64 * p;
        if exp <= 0.0 {
            if obs > 0 {
                return Err(Error::numeric(
                    "chi2_gof: observed counts in a zero-probability bin",
                ));
            }
            continue;
        }
        let d = obs as f64 - exp;
        stat += d * d / exp;
    }
    let dof = observed.len() - 1;
    Ok(TestResult {
        statistic: stat,
        p_value: 1.0 - chi2_cdf(stat, dof),
    })
}

/// Complementary CDF of the Kolmogorov distribution,
/// Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²).
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    if lambda < 0.4 {
        // dual series converges fast for small λ
        let pi = std::f64::consts::PI;
        let mut sum = 0.0;
        for k in 1..=20u32 {
            let m = (2 * k - 1) as f64;
            sum += (-m * m * pi * pi / (8.0 * lambda * lambda)).exp();
        }
        return (1.0 - (2.0 * pi).sqrt() / lambda * sum).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100u32 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        sign = -sign;
        if term.abs() < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov statistic (sup-distance of empirical CDFs).
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut a: Vec<f64> = a.to_vec();
    let mut b: Vec<f64> = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut d = 0.0f64;
    while ia < a.len() && ib < b.len() {
        let (va, vb) = (a[ia], b[ib]);
        if va <= vb {
            ia += 1;
        }
        if vb <= va {
            ib += 1;
        }
        d = d.max((ia as f64 / na - ib as f64 / nb).abs());
    }
    d
}

/// Two-sample KS test with the asymptotic p-value (Stephens correction).
pub fn ks_test(a: &[f64], b: &[f64]) -> TestResult {
    let d = ks_statistic(a, b);
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let sqrt_ne = ne.sqrt();
    let lambda = d * (sqrt_ne + 0.12 + 0.11 / sqrt_ne);
    TestResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    }
}

/// Kuiper test of angles (radians, any range) against the uniform law on the
/// circle. Invariant under rotations, which is what makes it the right test
/// for direction statistics.
pub fn kuiper_uniform(angles: &[f64]) -> TestResult {
    let n = angles.len();
    assert!(n > 0);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut u: Vec<f64> = angles
        .iter()
        .map(|&a| (a.rem_euclid(two_pi)) / two_pi)
        .collect();
    u.sort_by(|x, y| x.total_cmp(y));
    let nf = n as f64;
    let mut d_plus = f64::MIN;
    let mut d_minus = f64::MIN;
    for (i, &ui) in u.iter().enumerate() {
        d_plus = d_plus.max((i + 1) as f64 / nf - ui);
        d_minus = d_minus.max(ui - i as f64 / nf);
    }
    let v = d_plus + d_minus;
    let lambda = v * (nf.sqrt() + 0.155 + 0.24 / nf.sqrt());
    let mut p = 0.0;
    for k in 1..=100u32 {
        let k2l2 = (k * k) as f64 * lambda * lambda;
        let term = (4.0 * k2l2 - 1.0) * (-2.0 * k2l2).exp();
        p += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    TestResult {
        statistic: v,
        p_value: (2.0 * p).clamp(0.0, 1.0),
    }
}

/// Two-sample energy distance for point clouds in ℝ^dim stored row-major.
///
/// E = 2 E‖X−Y‖ − E‖X−X'‖ − E‖Y−Y'‖ ≥ 0, zero iff the laws coincide.
pub fn energy_distance(xs: &[f64], ys: &[f64], dim: usize) -> f64 {
    assert!(dim > 0 && xs.len() % dim == 0 && ys.len() % dim == 0);
    let n = xs.len() / dim;
    let m = ys.len() / dim;
    assert!(n > 1 && m > 1);
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt()
    };
    // per-row partial sums are collected and folded in index order so the
    // result does not depend on the rayon split (bit-reproducibility)
    let cross: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &xs[i * dim..(i + 1) * dim];
            (0..m).map(|j| dist(xi, &ys[j * dim..(j + 1) * dim])).sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let within = |zs: &[f64], k: usize| -> f64 {
        (0..k)
            .into_par_iter()
            .map(|i| {
                let zi = &zs[i * dim..(i + 1) * dim];
                ((i + 1)..k)
                    .map(|j| dist(zi, &zs[j * dim..(j + 1) * dim]))
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum()
    };
    let xx = within(xs, n);
    let yy = within(ys, m);
    2.0 * cross / (n as f64 * m as f64) - 2.0 * xx / (n as f64 * n as f64)
        - 2.0 * yy / (m as f64 * m as f64)
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Ordinary least-squares line fit; returns (slope, intercept).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn gamma_and_erf_reference_values() {
        assert_abs_diff_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(5.0), 24.0f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(erf(1.0), 0.8427007929497149, epsilon = 1e-12);
        assert_abs_diff_eq!(erf(-2.0), -0.9953222650189527, epsilon = 1e-12);
        assert_abs_diff_eq!(normal_cdf(1.96), 0.9750021048517795, epsilon = 1e-12);
        // χ²(2) CDF is 1 − exp(−x/2)
        assert_abs_diff_eq!(chi2_cdf(2.0, 2), 1.0 - (-1.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(chi2_cdf(10.0, 4), 1.0 - (-5.0f64).exp() * 6.0, epsilon = 1e-12);
    }

    #[test]
    fn kolmogorov_reference_values() {
        // dual-series branch (λ < 0.4)
        assert_abs_diff_eq!(kolmogorov_q(0.2), 0.9999999999994950, epsilon = 1e-12);
        assert_abs_diff_eq!(kolmogorov_q(0.399), 0.9972921335526176, epsilon = 1e-12);
        // alternating-series branch
        assert_abs_diff_eq!(kolmogorov_q(0.5), 0.9639452436648751, epsilon = 1e-12);
        assert_abs_diff_eq!(kolmogorov_q(1.0), 0.2699996716773545, epsilon = 1e-12);
        assert_abs_diff_eq!(kolmogorov_q(1.36), 0.04948587675537788, epsilon = 1e-12);
        assert_abs_diff_eq!(kolmogorov_q(1.63), 0.009846364888486531, epsilon = 1e-12);
    }

    #[test]
    fn ks_same_law_high_p_different_law_low_p() {
        let mut rng = crate::rng::stream_rng(11, 0);
        let a: Vec<f64> = (0..4000).map(|_| rng.gen::<f64>()).collect();
        let b: Vec<f64> = (0..4000).map(|_| rng.gen::<f64>()).collect();
        let c: Vec<f64> = (0..4000).map(|_| rng.gen::<f64>() * 0.8).collect();
        assert!(ks_test(&a, &b).p_value > 0.01);
        assert!(ks_test(&a, &c).p_value < 1e-6);
    }

    #[test]
    fn chi2_gof_uniform_counts() {
        let mut rng = crate::rng::stream_rng(12, 0);
        let mut counts = [0u64; 10];
        for _ in 0..10_000 {
            counts[rng.gen_range(0..10)] += 1;
        }
        let probs = [0.1; 10];
        let r = chi2_gof(&counts, &probs).unwrap();
        assert!(r.p_value > 0.001, "p = {}", r.p_value);
    }

    #[test]
    fn kuiper_uniform_angles() {
        let mut rng = crate::rng::stream_rng(13, 0);
        let angles: Vec<f64> = (0..2000)
            .map(|_| rng.gen::<f64>() * 2.0 * std::f64::consts::PI)
            .collect();
        assert!(kuiper_uniform(&angles).p_value > 0.001);
        // clustered angles are decisively rejected
        let clustered: Vec<f64> = (0..2000).map(|_| rng.gen::<f64>() * 0.5).collect();
        assert!(kuiper_uniform(&clustered).p_value < 1e-10);
    }

    #[test]
    fn energy_distance_separates_laws() {
        let mut rng = crate::rng::stream_rng(14, 0);
        let x: Vec<f64> = (0..6000).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = (0..6000).map(|_| rng.gen::<f64>()).collect();
        let z: Vec<f64> = (0..6000).map(|_| rng.gen::<f64>() + 0.5).collect();
        let same = energy_distance(&x, &y, 2);
        let diff = energy_distance(&x, &z, 2);
        assert!(same.abs() < 0.02);
        assert!(diff > 0.1);
    }

    #[test]
    fn linear_fit_recovers_slope() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 2.0).collect();
        let (slope, intercept) = linear_fit(&xs, &ys);
        assert_abs_diff_eq!(slope, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(intercept, -2.0, epsilon = 1e-12);
    }
}
