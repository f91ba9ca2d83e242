//! Estimators, confidence intervals and goodness-of-fit tests shared by the
//! simulation modules.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma_lr;

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;

/// Running mean and variance (Welford). Merging is associative.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MeanAccumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
        self.mean = mean;
        self.m2 = m2;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

impl FromIterator<f64> for MeanAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = MeanAccumulator::new();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// A proportion estimate with its confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Proportion {
    /// Degenerate interval for a value known without sampling error.
    pub fn exact(p: f64) -> Self {
        Proportion {
            successes: 0,
            trials: 0,
            estimate: p,
            lower: p,
            upper: p,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> Proportion {
    assert!(trials > 0, "wilson interval needs at least one trial");
    assert!(successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Proportion {
        successes,
        trials,
        estimate: p,
        lower: if successes == 0 { 0.0 } else { (centre - half).max(0.0) },
        upper: if successes == trials {
            1.0
        } else {
            (centre + half).min(1.0)
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit of observed counts against cell probabilities.
/// Cells with zero expected probability must have zero counts.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> ChiSquareOutcome {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    let mut statistic = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(probs) {
        if p <= 0.0 {
            if o > 0 {
                return ChiSquareOutcome {
                    statistic: f64::INFINITY,
                    dof: 0,
                    p_value: 0.0,
                };
            }
            continue;
        }
        let e = n * p;
        statistic += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    let dof = cells.saturating_sub(1);
    ChiSquareOutcome {
        statistic,
        dof,
        p_value: chi_square_survival(statistic, dof),
    }
}

/// Two-sample homogeneity test on paired count vectors.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> ChiSquareOutcome {
    assert_eq!(a.len(), b.len());
    let na: f64 = a.iter().sum::<u64>() as f64;
    let nb: f64 = b.iter().sum::<u64>() as f64;
    let n = na + nb;
    let mut statistic = 0.0;
    let mut cells = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        let ea = na * col / n;
        let eb = nb * col / n;
        statistic += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
        cells += 1;
    }
    let dof = cells.saturating_sub(1);
    ChiSquareOutcome {
        statistic,
        dof,
        p_value: chi_square_survival(statistic, dof),
    }
}

fn chi_square_survival(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return if statistic > 0.0 { 0.0 } else { 1.0 };
    }
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    dist.sf(statistic)
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let lo = f - i as f64 / n;
            let hi = (i + 1) as f64 / n - f;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at level 0.001.
pub fn ks_critical_001(n: usize) -> f64 {
    1.949 / (n as f64).sqrt()
}

/// `P(N > x)` for `N ~ Poisson(lambda)`.
pub fn poisson_survival(lambda: f64, x: u64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    if lambda.is_infinite() {
        return 1.0;
    }
    // Chernoff bounds settle both far tails.
    let k = x as f64 + 1.0;
    let rate = |k: f64| lambda - k + k * (k / lambda).ln();
    if k > lambda && rate(k) > 745.0 {
        return 0.0;
    }
    if (x as f64) < lambda && x > 0 && rate(x as f64) > 745.0 {
        return 1.0;
    }
    if k < 1e4 {
        return gamma_lr(k, lambda);
    }
    // Direct pmf sums; the incomplete gamma is very slow at large shape.
    let pmf = |k: f64| poisson_pmf_large(k, lambda);
    if k > lambda {
        let (mut term, mut sum, mut j) = (pmf(k), 0.0, k);
        while term * 1e17 > sum && term > f64::MIN_POSITIVE {
            sum += term;
            j += 1.0;
            term *= lambda / j;
        }
        sum
    } else {
        let (mut term, mut sum, mut j) = (pmf(k - 1.0), 0.0, k - 1.0);
        while j >= 0.0 && (term * 1e17 > sum && term > f64::MIN_POSITIVE) {
            sum += term;
            term *= j / lambda;
            j -= 1.0;
        }
        (1.0 - sum).max(0.0)
    }
}

/// Poisson pmf at `k >= 16` in saddle-point form, accurate to a few ulps
/// where `k ln(lambda) - ln(k!)` cancels badly.
fn poisson_pmf_large(k: f64, lambda: f64) -> f64 {
    let k2 = k * k;
    let stirlerr = (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / (1260.0 * k2)) / k2) / k;
    (-stirlerr - deviance(k, lambda)).exp() / (std::f64::consts::TAU * k).sqrt()
}

/// `x ln(x / m) + m - x`, by series when `x` is near `m`.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() >= 0.1 * (x + m) {
        return x * (x / m).ln() + m - x;
    }
    let v = (x - m) / (x + m);
    let mut s = (x - m) * v;
    let mut ej = 2.0 * x * v;
    let v2 = v * v;
    for j in 1..1000 {
        ej *= v2;
        let next = s + ej / (2 * j + 1) as f64;
        if next == s {
            break;
        }
        s = next;
    }
    s
}

/// `P(N > x)` for the count of a linear pure-birth process with rates
/// `c1 k + c2` at time `t`. For `c1 > 0` this is negative binomial with
/// `r = c2 / c1` and success probability `exp(-c1 t)`.
pub fn linear_birth_survival(c1: f64, c2: f64, t: f64, x: u64) -> f64 {
    if t <= 0.0 || c2 <= 0.0 {
        return 0.0;
    }
    if c1 <= 0.0 {
        return poisson_survival(c2 * t, x);
    }
    let r = c2 / c1;
    // 1 - exp(-c1 t) without cancellation.
    let q = -(-c1 * t).exp_m1();
    if q >= 1.0 {
        return 1.0;
    }
    // Far below the mean the lower tail is negligible; the incomplete beta
    // also loses accuracy for very large `r`.
    let mean = r * (c1 * t).exp_m1();
    let sd = (mean + mean * mean / r).sqrt();
    if mean - (x as f64 + 1.0) > 40.0 * sd {
        return 1.0;
    }
    beta_reg(x as f64 + 1.0, r, q)
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulator_merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.5).collect();
        let whole: MeanAccumulator = xs.iter().copied().collect();
        let mut left: MeanAccumulator = xs[..300].iter().copied().collect();
        let right: MeanAccumulator = xs[300..].iter().copied().collect();
        left.merge(&right);
        assert_eq!(left.count(), whole.count());
        assert!((left.mean() - whole.mean()).abs() < 1e-12);
        assert!((left.variance() - whole.variance()).abs() < 1e-9);
    }

    #[test]
    fn wilson_bounds() {
        let p = wilson(0, 10_000, Z99);
        assert_eq!(p.lower, 0.0);
        assert!(p.upper > 0.0 && p.upper < 1e-3);
        let p = wilson(10_000, 10_000, Z99);
        assert_eq!(p.upper, 1.0);
        let p = wilson(500, 1000, Z99);
        assert!(p.contains(0.5));
        assert!(p.lower > 0.45 && p.upper < 0.55);
    }

    #[test]
    fn chi_square_on_perfect_fit() {
        let out = chi_square_gof(&[250, 250, 500], &[0.25, 0.25, 0.5]);
        assert_eq!(out.statistic, 0.0);
        assert_eq!(out.dof, 2);
        assert!((out.p_value - 1.0).abs() < 1e-12);
        let out = chi_square_gof(&[1, 0], &[0.0, 1.0]);
        assert_eq!(out.p_value, 0.0);
    }

    #[test]
    fn poisson_survival_against_direct_sum() {
        let lambda: f64 = 1.7;
        let mut cdf = 0.0;
        let mut term = (-lambda).exp();
        for k in 0..6u64 {
            cdf += term;
            term *= lambda / (k + 1) as f64;
            assert!((poisson_survival(lambda, k) - (1.0 - cdf)).abs() < 1e-12);
        }
    }

    #[test]
    fn large_poisson_survival_is_continuous_across_methods() {
        // Both evaluation routes agree where they meet.
        for lambda in [9_000.0, 10_000.0, 10_300.0] {
            let a = gamma_lr(10_000.0, lambda);
            let b = poisson_survival(lambda, 9_999);
            assert!((a - b).abs() < 1e-9, "{lambda}: {a} {b}");
        }
        for (k, lambda) in [(20.0f64, 17.5f64), (1e4, 9_950.0), (3e5, 2.99e5)] {
            let direct = (k * lambda.ln() - lambda - statrs::function::gamma::ln_gamma(k + 1.0)).exp();
            let tol = 1e-13 + 1e-16 * k;
            assert!(
                (poisson_pmf_large(k, lambda) / direct - 1.0).abs() < tol.max(1e-10),
                "{k}"
            );
        }
        let mid = poisson_survival(2e6, 2_000_000);
        assert!((mid - 0.5).abs() < 1e-3, "{mid}");
    }

    #[test]
    fn geometric_case_of_linear_survival() {
        // c1 = c2: geometric with P(N > x) = (1 - e^{-c t})^{x+1}.
        let (c, t): (f64, f64) = (1.3, 0.8);
        for x in 0..10u64 {
            let exact = (1.0 - (-c * t).exp()).powi(x as i32 + 1);
            assert!((linear_birth_survival(c, c, t, x) - exact).abs() < 1e-12);
        }
    }
}
