//! Small statistical helpers shared by the Monte Carlo estimators: sample
//! moments, binomial confidence intervals, chi-square goodness of fit and
//! the Hoeffding-style equitability bounds.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Pearson chi-square statistic with tail-merging so every expected count is
/// at least `min_expected`. Returns `(statistic, degrees_of_freedom)`;
/// `None` when fewer than two cells survive merging.
pub fn chi_square_merged(
    observed: &[u64],
    expected: &[f64],
    min_expected: f64,
) -> Option<(f64, usize)> {
    assert_eq!(observed.len(), expected.len());
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut acc_o, mut acc_e) = (0.0f64, 0.0f64);
    for (&o, &e) in observed.iter().zip(expected) {
        acc_o += o as f64;
        acc_e += e;
        if acc_e >= min_expected {
            cells.push((acc_o, acc_e));
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += acc_o;
                last.1 += acc_e;
            }
            None => cells.push((acc_o, acc_e)),
        }
    }
    if cells.len() < 2 {
        return None;
    }
    let stat = cells
        .iter()
        .map(|&(o, e)| (o - e).powi(2) / e)
        .sum::<f64>();
    Some((stat, cells.len() - 1))
}

/// Upper-tail p-value of a chi-square statistic.
pub fn chi_square_p_value(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("df > 0");
    1.0 - dist.cdf(stat)
}

/// Binomial pmf table `P(X = k)` for `k = 0..=n`, computed by recurrence.
pub fn binomial_pmf_table(n: usize, p: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if p <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if p >= 1.0 {
        out[n] = 1.0;
        return out;
    }
    // log-space start at k = 0.
    let q = 1.0 - p;
    out[0] = q.powi(n as i32);
    for k in 1..=n {
        out[k] = out[k - 1] * ((n - k + 1) as f64 / k as f64) * (p / q);
    }
    out
}

/// `2 r |V_{N+1}| exp(-c alpha |V_N| eps^2)`; `c = 2` is the exponent the
/// Hoeffding computation yields, `c = 1` the weaker stated form.
pub fn equitability_failure_bound(
    r: u64,
    next_level_size: usize,
    alpha: f64,
    level_size: usize,
    eps: f64,
    exponent_factor: f64,
) -> f64 {
    2.0 * r as f64
        * next_level_size as f64
        * (-exponent_factor * alpha * level_size as f64 * eps * eps).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_se_of_constant_is_exact() {
        let (m, se) = mean_se(&[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(m, 2.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson_interval(0, 100, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
    }

    #[test]
    fn chi_square_uniform_fit_is_unsurprising() {
        let observed = [102u64, 98, 95, 105];
        let expected = [100.0, 100.0, 100.0, 100.0];
        let (stat, df) = chi_square_merged(&observed, &expected, 5.0).unwrap();
        assert_eq!(df, 3);
        assert!(chi_square_p_value(stat, df) > 0.5);
    }

    #[test]
    fn binomial_pmf_sums_to_one() {
        let t = binomial_pmf_table(7, 0.3);
        let s: f64 = t.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!((t[0] - 0.7f64.powi(7)).abs() < 1e-12);
    }
}
