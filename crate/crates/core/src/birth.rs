//! Pure-birth offspring processes `xi(t)`: closed forms for linear rates
//! `c1 k + c2` and simulation for general rate sequences `f(k, w)`.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fitness::{Coupling, FitnessModel, FitnessSpec, ScalarLaw, Weight, WeightSpec};
use crate::quadrature::integrate;
use crate::rng::{exponential, substream};
use crate::stats::{linear_birth_survival, poisson_survival, wilson, MeanAccumulator, Proportion, Z99};

/// Default number of births after which a simulation stops and reports saturation.
pub const DEFAULT_CAP: u64 = 1 << 20;

/// Below `c1 < POISSON_SWITCH * c2` the closed forms use their `c1 = 0` limits.
pub const POISSON_SWITCH: f64 = 1e-12;

/// Poisson means beyond this are returned as their mean when sampling counts.
const POISSON_DETERMINISTIC: f64 = 1e15;

/// Linear birth rates: state `k` jumps to `k + 1` at rate `c1 k + c2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirthRates {
    c1: f64,
    c2: f64,
}

impl BirthRates {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1.is_finite() && c1 >= 0.0) {
            return Err(Error::invalid(format!("c1 must be finite and >= 0, got {c1}")));
        }
        if !(c2.is_finite() && c2 > 0.0) {
            return Err(Error::invalid(format!("c2 must be finite and > 0, got {c2}")));
        }
        Ok(BirthRates { c1, c2 })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// `c2 / c1`, undefined for `c1 = 0`.
    pub fn r(&self) -> Option<f64> {
        (self.c1 > 0.0).then(|| self.c2 / self.c1)
    }

    fn poisson_limit(&self) -> bool {
        self.c1 < POISSON_SWITCH * self.c2
    }

    pub fn rate(&self, k: u64) -> f64 {
        self.c1 * k as f64 + self.c2
    }

    /// `E[xi(t)] = r (e^{c1 t} - 1)`, or `c2 t` for `c1 = 0`.
    pub fn mean(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if self.poisson_limit() {
            self.c2 * t
        } else {
            self.c2 * (self.c1 * t).exp_m1() / self.c1
        }
    }

    /// `E[xi(t)^2] = m + (r + 1)/r m^2`, or `(c2 t)^2 + c2 t` for `c1 = 0`.
    ///
    /// The count is negative binomial with size `r` and success probability
    /// `p = e^{-c1 t}`, so its variance is `m / p = m + m^2 / r`.
    pub fn second_moment(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let m = self.mean(t);
        if self.poisson_limit() {
            m * m + m
        } else {
            let r = self.c2 / self.c1;
            m + (r + 1.0) / r * m * m
        }
    }

    /// `E[z^{xi(t)}] = (e^{-c1 t} / (1 - z (1 - e^{-c1 t})))^r` for `c1 > 0`.
    pub fn pgf(&self, t: f64, z: f64) -> Result<f64> {
        check_unit(z)?;
        if self.c1 == 0.0 {
            return Err(Error::Domain("use Poisson PGF for c1 = 0".into()));
        }
        if t <= 0.0 || z == 1.0 {
            return Ok(1.0);
        }
        let q = -(-self.c1 * t).exp_m1();
        let r = self.c2 / self.c1;
        // ln of the base: -c1 t - ln(1 - z q)
        Ok((r * (-self.c1 * t - (-z * q).ln_1p())).exp())
    }

    /// PGF on either side of the Poisson boundary.
    pub fn pgf_any(&self, t: f64, z: f64) -> Result<f64> {
        if self.poisson_limit() {
            poisson_pgf(self.c2, t, z)
        } else {
            self.pgf(t, z)
        }
    }

    /// `P(xi(t) > x)`.
    pub fn survival(&self, t: f64, x: u64) -> f64 {
        linear_birth_survival(self.c1, self.c2, t, x)
    }
}

fn check_unit(z: f64) -> Result<()> {
    if (0.0..=1.0).contains(&z) {
        Ok(())
    } else {
        Err(Error::Domain(format!("z must lie in [0, 1], got {z}")))
    }
}

/// `E[z^N]` for `N ~ Poisson(c2 t)`.
pub fn poisson_pgf(c2: f64, t: f64, z: f64) -> Result<f64> {
    check_unit(z)?;
    Ok((c2 * t * (z - 1.0)).exp())
}

/// The offspring law of a single individual.
#[derive(Debug, Clone, PartialEq)]
pub enum OffspringModel {
    FixedRates(BirthRates),
    /// Each realization draws a weight `w` and uses rates `f(k, w)`.
    Mixed(FitnessModel),
}

impl OffspringModel {
    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> Realization<'_> {
        match self {
            OffspringModel::FixedRates(r) => Realization::Linear { u: r.c1, v: r.c2 },
            OffspringModel::Mixed(m) => {
                let w = m.sample_weight(rng);
                match m.fitness {
                    FitnessSpec::Linear => {
                        let (u, v) = w.components();
                        Realization::Linear { u, v }
                    }
                    _ => Realization::General {
                        fitness: &m.fitness,
                        weight: w,
                    },
                }
            }
        }
    }
}

/// A realized rate sequence `k -> rate(k)`.
#[derive(Debug, Clone)]
pub enum Realization<'a> {
    Linear { u: f64, v: f64 },
    General { fitness: &'a FitnessSpec, weight: Weight },
}

impl Realization<'_> {
    #[inline]
    pub fn rate(&self, k: u64) -> f64 {
        match self {
            Realization::Linear { u, v } => u * k as f64 + v,
            Realization::General { fitness, weight } => fitness.rate(k, weight),
        }
    }

    /// First index from which the rate is constant, with that rate.
    fn constant_from(&self) -> Option<(u64, f64)> {
        match self {
            Realization::Linear { u, v } => (*u == 0.0).then_some((0, *v)),
            Realization::General { fitness, weight } => fitness.constant_from(weight),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BirthCount {
    pub count: u64,
    pub saturated: bool,
}

/// Births by time `t`, by successive exponential waiting times with rates
/// `rate(0), rate(1), ...`. Stops with `saturated` once `cap` births occur.
pub fn count_births<R: Rng + ?Sized>(rate: impl Fn(u64) -> f64, t: f64, rng: &mut R, cap: u64) -> BirthCount {
    let mut k = 0;
    let mut clock = 0.0;
    while k < cap {
        let r = rate(k);
        if r <= 0.0 {
            return BirthCount {
                count: k,
                saturated: false,
            };
        }
        clock += exponential(rng, r);
        if clock > t {
            return BirthCount {
                count: k,
                saturated: false,
            };
        }
        k += 1;
    }
    BirthCount {
        count: k,
        saturated: true,
    }
}

/// One draw of `xi(t)`.
pub fn simulate_count<R: Rng + ?Sized>(model: &OffspringModel, t: f64, rng: &mut R, cap: u64) -> BirthCount {
    assert!(cap >= 1);
    let real = model.realize(rng);
    count_births(|k| real.rate(k), t, rng, cap)
}

fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    if lambda <= 0.0 {
        0.0
    } else if lambda > POISSON_DETERMINISTIC {
        lambda
    } else {
        Poisson::new(lambda).expect("finite positive mean").sample(rng)
    }
}

/// Exact draw of `xi(t)` for rates `u k + v` as a gamma-mixed Poisson
/// (negative binomial when `u > 0`). Returns a real because the count can
/// exceed any integer type for extreme weights.
pub fn sample_linear_count<R: Rng + ?Sized>(u: f64, v: f64, t: f64, rng: &mut R) -> f64 {
    if t <= 0.0 || v <= 0.0 {
        return 0.0;
    }
    if u == 0.0 {
        return sample_poisson(v * t, rng);
    }
    let odds = (u * t).exp_m1();
    if !odds.is_finite() {
        return f64::INFINITY;
    }
    let lambda = Gamma::new(v / u, odds).expect("positive shape and scale").sample(rng);
    if !lambda.is_finite() {
        return f64::INFINITY;
    }
    sample_poisson(lambda, rng)
}

/// Whether `xi(t) > x` for one realization. Linear rates are sampled from
/// their exact law; other rate sequences are stepped until `x + 1` births,
/// switching to a gamma waiting time once the rate becomes constant.
pub fn exceeds<R: Rng + ?Sized>(real: &Realization<'_>, t: f64, x: u64, rng: &mut R) -> bool {
    if t <= 0.0 {
        return false;
    }
    if let Realization::Linear { u, v } = *real {
        return sample_linear_count(u, v, t, rng) > x as f64;
    }
    let needed = x + 1;
    let constant = real.constant_from();
    let mut clock = 0.0;
    let mut k = 0;
    while k < needed {
        if let Some((start, c)) = constant {
            if k >= start {
                if c <= 0.0 {
                    return false;
                }
                let rest = (needed - k) as f64;
                clock += Gamma::new(rest, 1.0 / c).expect("positive").sample(rng);
                return clock <= t;
            }
        }
        let r = real.rate(k);
        if r <= 0.0 {
            return false;
        }
        clock += exponential(rng, r);
        if clock > t {
            return false;
        }
        k += 1;
    }
    true
}

/// Monte Carlo estimate of `P(xi(t) > x)` with a 99% Wilson interval.
pub fn tail_prob_mc<R: Rng + ?Sized>(model: &OffspringModel, t: f64, x: u64, nsamples: u64, rng: &mut R) -> Proportion {
    assert!(nsamples > 0);
    let mut hits = 0;
    for _ in 0..nsamples {
        let real = model.realize(rng);
        if exceeds(&real, t, x, rng) {
            hits += 1;
        }
    }
    wilson(hits, nsamples, Z99)
}

/// `P(xi(t) > x)` without sampling, when the model admits it: fixed linear
/// rates, and linear fitness whose pair is driven by a single scalar law.
pub fn tail_prob_exact(model: &OffspringModel, t: f64, x: u64) -> Option<f64> {
    match model {
        OffspringModel::FixedRates(r) => Some(r.survival(t, x)),
        OffspringModel::Mixed(m) => {
            if m.fitness != FitnessSpec::Linear {
                return None;
            }
            let (law, coupling) = match &m.weights {
                WeightSpec::Scalar(law) => (law, Coupling::UZero),
                WeightSpec::Pair(p) => match p.coupling {
                    Coupling::Independent => match p.u {
                        ScalarLaw::PointMass(u) => {
                            return Some(mixture_expectation(&p.v, |v| linear_birth_survival(u, v, t, x)));
                        }
                        _ => return None,
                    },
                    c => (&p.v, c),
                },
            };
            let conditional = |v: f64| -> f64 {
                if !v.is_finite() {
                    return 1.0;
                }
                match coupling {
                    Coupling::UZero => poisson_survival(v * t, x),
                    Coupling::UOne => linear_birth_survival(1.0, v, t, x),
                    Coupling::UEqualsV => linear_birth_survival(v, v, t, x),
                    Coupling::Independent => unreachable!(),
                }
            };
            Some(mixture_expectation(law, conditional))
        }
    }
}

/// `E[g(V)]` for `V ~ law` and `g` bounded, via the upper quantile under
/// `s = e^{-y}`, which resolves the heavy end of the law near `y = infinity`.
pub fn mixture_expectation(law: &ScalarLaw, g: impl Fn(f64) -> f64) -> f64 {
    if let ScalarLaw::PointMass(v) = *law {
        return g(v);
    }
    let h = |y: f64| g(law.upper_quantile((-y).exp())) * (-y).exp();
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut hi: f64 = 0.5;
    while lo < 745.0 {
        let top = hi.min(745.0);
        total += integrate(&h, lo, top, 1e-14);
        lo = top;
        hi *= 2.0;
    }
    total
}

/// Monte Carlo moments of `xi(t)`.
#[derive(Debug, Clone, Default)]
pub struct MomentEstimate {
    pub count: MeanAccumulator,
    pub square: MeanAccumulator,
    /// One accumulator of `z^{xi(t)}` per requested `z`.
    pub pgf: Vec<MeanAccumulator>,
    pub saturated: u64,
}

pub fn estimate_moments<R: Rng + ?Sized>(
    model: &OffspringModel,
    t: f64,
    zs: &[f64],
    nsamples: u64,
    rng: &mut R,
) -> MomentEstimate {
    let mut est = MomentEstimate {
        pgf: vec![MeanAccumulator::new(); zs.len()],
        ..Default::default()
    };
    for _ in 0..nsamples {
        let c = simulate_count(model, t, rng, DEFAULT_CAP);
        if c.saturated {
            est.saturated += 1;
        }
        let n = c.count as f64;
        est.count.push(n);
        est.square.push(n * n);
        for (acc, &z) in est.pgf.iter_mut().zip(zs) {
            acc.push(if c.count == 0 { 1.0 } else { z.powf(n) });
        }
    }
    est
}

/// One row of a moment comparison grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub c1: f64,
    pub c2: f64,
    pub t: f64,
    pub stat: String,
    pub analytic: f64,
    pub mc: f64,
    pub se: f64,
}

impl GridRow {
    /// `|mc - analytic|` in units of the standard error; exact agreement with
    /// zero standard error counts as 0.
    pub fn z_score(&self) -> f64 {
        let diff = (self.mc - self.analytic).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.se
        }
    }
}

/// Compares simulated mean, second moment and PGF values with the closed
/// forms on every `(c1, c2, t)` of the grid. Point `i` (in row-major order)
/// uses stream `i` split from `seed`.
pub fn moment_grid(c1s: &[f64], c2s: &[f64], ts: &[f64], zs: &[f64], nsamples: u64, seed: u64) -> Result<Vec<GridRow>> {
    let mut points = Vec::new();
    for &c1 in c1s {
        for &c2 in c2s {
            for &t in ts {
                points.push((BirthRates::new(c1, c2)?, t));
            }
        }
    }
    let rows: Vec<Vec<GridRow>> = points
        .par_iter()
        .enumerate()
        .map(|(i, &(rates, t))| {
            let mut rng = substream(seed, i as u64);
            let est = estimate_moments(&OffspringModel::FixedRates(rates), t, zs, nsamples, &mut rng);
            let row = |stat: String, analytic: f64, acc: &MeanAccumulator| GridRow {
                c1: rates.c1(),
                c2: rates.c2(),
                t,
                stat,
                analytic,
                mc: acc.mean(),
                se: acc.std_error(),
            };
            let mut out = vec![
                row("mean".into(), rates.mean(t), &est.count),
                row("second_moment".into(), rates.second_moment(t), &est.square),
            ];
            for (acc, &z) in est.pgf.iter().zip(zs) {
                let exact = rates.pgf_any(t, z).expect("z in [0, 1]");
                out.push(row(format!("pgf_z{z}"), exact, acc));
            }
            out
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// CSV with header `c1,c2,t,stat,analytic,mc,se`.
pub fn write_grid_csv<W: Write>(rows: &[GridRow], out: &mut W) -> io::Result<()> {
    writeln!(out, "c1,c2,t,stat,analytic,mc,se")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.c1, r.c2, r.t, r.stat, r.analytic, r.mc, r.se
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::TailRule;
    use crate::rng::stream;
    use std::f64::consts::LN_2;

    fn rates(c1: f64, c2: f64) -> BirthRates {
        BirthRates::new(c1, c2).unwrap()
    }

    #[test]
    fn domain() {
        assert!(BirthRates::new(-1.0, 1.0).is_err());
        assert!(BirthRates::new(1.0, 0.0).is_err());
        assert_eq!(rates(0.0, 2.0).r(), None);
        assert_eq!(rates(2.0, 1.0).r(), Some(0.5));
    }

    #[test]
    fn mean_examples() {
        assert!((rates(1.0, 1.0).mean(LN_2) - 1.0).abs() < 1e-15);
        assert_eq!(rates(0.0, 2.0).mean(1.5), 3.0);
        assert_eq!(rates(0.7, 2.0).mean(0.0), 0.0);
    }

    #[test]
    fn mean_continuous_at_zero_c1() {
        let (c2, t) = (1.3, 0.9);
        let m = rates(1e-8, c2).mean(t);
        assert!((m - c2 * t).abs() < 1e-6 * c2 * t);
        let m = rates(1e-13, c2).mean(t);
        assert_eq!(m, c2 * t);
    }

    #[test]
    fn second_moment_examples() {
        assert_eq!(rates(0.0, 2.0).second_moment(1.5), 12.0);
        assert_eq!(rates(1.0, 1.0).second_moment(0.0), 0.0);
        // c1 = c2 = 1 at t = ln 2: xi is geometric on {0, 1, ...} with success
        // probability 1/2, so E[xi^2] = var + mean^2 = 2 + 1.
        assert!((rates(1.0, 1.0).second_moment(LN_2) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn second_moment_matches_pgf_derivatives() {
        // E[X(X-1)] = G''(1), E[X] = G'(1), by central differences of the PGF.
        for (c1, c2, t) in [(0.5, 2.0, 0.7), (2.0, 0.5, 0.25), (1.0, 1.0, 1.5)] {
            let r = rates(c1, c2);
            let h = 1e-4;
            let g = |z: f64| r.pgf(t, z).unwrap();
            let g1 = (g(1.0) - g(1.0 - h)) / h;
            let g2 = (g(1.0) - 2.0 * g(1.0 - h) + g(1.0 - 2.0 * h)) / (h * h);
            let m = r.mean(t);
            assert!((g1 - m).abs() < 1e-3 * m.max(1.0));
            let sm = g2 + m;
            assert!((sm - r.second_moment(t)).abs() < 1e-2 * sm, "{c1} {c2} {t}");
        }
    }

    #[test]
    fn pgf_examples() {
        let r = rates(1.0, 1.0);
        assert!((r.pgf(LN_2, 0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.pgf(LN_2, 1.0).unwrap(), 1.0);
        let r = rates(0.5, 1.7);
        assert!((r.pgf(0.9, 0.0).unwrap() - (-1.7f64 * 0.9).exp()).abs() < 1e-14);
        assert!(matches!(rates(0.0, 1.0).pgf(1.0, 0.5), Err(Error::Domain(_))));
        assert!((poisson_pgf(2.0, 1.5, 0.0).unwrap() - (-3.0f64).exp()).abs() < 1e-15);
        assert!(r.pgf(1.0, 1.5).is_err());
    }

    #[test]
    fn zero_horizon_gives_no_births() {
        let mut rng = stream(1);
        let m = OffspringModel::FixedRates(rates(2.0, 2.0));
        for _ in 0..100 {
            assert_eq!(simulate_count(&m, 0.0, &mut rng, DEFAULT_CAP).count, 0);
        }
        assert_eq!(tail_prob_mc(&m, 0.0, 0, 1000, &mut rng).estimate, 0.0);
    }

    #[test]
    fn poisson_mean_by_simulation() {
        let mut rng = stream(2);
        let m = OffspringModel::FixedRates(rates(0.0, 2.0));
        let est = estimate_moments(&m, 1.5, &[], 100_000, &mut rng);
        assert!((est.count.mean() - 3.0).abs() < 4.0 * est.count.std_error());
    }

    #[test]
    fn zero_tail_rate_bounds_count() {
        let model = FitnessModel::tabulated(vec![5.0, 5.0, 5.0], TailRule::ZeroAfterEnd).unwrap();
        let m = OffspringModel::Mixed(model);
        let mut rng = stream(3);
        for _ in 0..1000 {
            assert!(simulate_count(&m, 100.0, &mut rng, DEFAULT_CAP).count <= 3);
        }
    }

    #[test]
    fn saturation_is_reported() {
        let model = FitnessModel::tabulated(vec![1e9], TailRule::ConstantLast).unwrap();
        let mut rng = stream(4);
        let c = simulate_count(&OffspringModel::Mixed(model), 1.0, &mut rng, 1000);
        assert_eq!(
            c,
            BirthCount {
                count: 1000,
                saturated: true
            }
        );
    }

    #[test]
    fn count_is_monotone_in_horizon() {
        let m = OffspringModel::FixedRates(rates(1.0, 0.5));
        for seed in 0..200 {
            let mut prev = 0;
            for t in [0.1, 0.3, 0.7, 1.2, 2.0] {
                let c = simulate_count(&m, t, &mut stream(seed), DEFAULT_CAP).count;
                assert!(c >= prev);
                prev = c;
            }
        }
    }

    #[test]
    fn tail_mc_examples() {
        let mut rng = stream(5);
        let p = tail_prob_mc(&OffspringModel::FixedRates(rates(0.0, 1.0)), 1.0, 0, 100_000, &mut rng);
        assert!(p.contains(1.0 - (-1.0f64).exp()), "{p:?}");
        let p = tail_prob_mc(&OffspringModel::FixedRates(rates(1.0, 1.0)), LN_2, 0, 100_000, &mut rng);
        assert!(p.contains(0.5), "{p:?}");
    }

    #[test]
    fn stepwise_exceedance_matches_exact_law() {
        // Tabulated rates 1, 2, 3, ... reproduce the Yule offspring law, for
        // which P(xi(t) > x) = (1 - e^{-t})^{x+1}.
        let table: Vec<f64> = (1..=64).map(|k| k as f64).collect();
        let model = FitnessModel::tabulated(table, TailRule::ConstantLast).unwrap();
        let mut rng = stream(6);
        let (t, x) = (0.8, 3);
        let p = tail_prob_mc(&OffspringModel::Mixed(model), t, x, 100_000, &mut rng);
        assert!(p.contains((1.0 - (-t).exp()).powi(4)), "{p:?}");
    }

    #[test]
    fn gamma_shortcut_matches_poisson() {
        // Constant-rate tail from index 1: rates 2, 3, 3, 3, ...
        let model = FitnessModel::tabulated(vec![2.0, 3.0], TailRule::ConstantLast).unwrap();
        let mut rng = stream(7);
        let (t, x) = (1.0, 4);
        // Oracle: P(xi > 4) = int_0^t 2 e^{-2s} P(Poisson(3 (t - s)) >= 4) ds.
        let oracle = integrate(
            &|s: f64| 2.0 * (-2.0 * s).exp() * poisson_survival(3.0 * (t - s), 3),
            0.0,
            t,
            1e-12,
        );
        let p = tail_prob_mc(&OffspringModel::Mixed(model), t, x, 200_000, &mut rng);
        assert!(p.contains(oracle), "{p:?} vs {oracle}");
    }

    #[test]
    fn exact_tail_for_mixtures() {
        let (t, x) = (0.5, 2);
        // Exponential(1) V with U = 0: xi is geometric-mixed Poisson,
        // P(xi > x) = (t / (1 + t))^{x + 1}.
        let m = OffspringModel::Mixed(FitnessModel::wrrt(ScalarLaw::exponential(1.0).unwrap()).unwrap());
        let exact = tail_prob_exact(&m, t, x).unwrap();
        assert!((exact - (t / (1.0 + t)).powi(3)).abs() < 1e-10, "{exact}");
        let mut rng = stream(8);
        let p = tail_prob_mc(&m, t, x, 200_000, &mut rng);
        assert!(p.contains(exact));

        let bb = OffspringModel::Mixed(FitnessModel::bianconi_barabasi(ScalarLaw::uniform(1.0, 2.0).unwrap()).unwrap());
        let exact = tail_prob_exact(&bb, t, x).unwrap();
        // (1/ (b-a)) int_a^b (1 - e^{-v t})^{x+1} dv
        let oracle = integrate(&|v: f64| (1.0 - (-v * t).exp()).powi(3), 1.0, 2.0, 1e-13);
        assert!((exact - oracle).abs() < 1e-10);
        let p = tail_prob_mc(&bb, t, x, 200_000, &mut rng);
        assert!(p.contains(exact), "{p:?} vs {exact}");
    }

    #[test]
    fn exact_tail_for_heavy_wrrt_matches_simulation() {
        let law = ScalarLaw::log_pareto_tail(1.0, std::f64::consts::E.powi(2)).unwrap();
        let m = OffspringModel::Mixed(FitnessModel::wrrt(law).unwrap());
        let (t, x) = (0.1, 1000);
        let exact = tail_prob_exact(&m, t, x).unwrap();
        let mut rng = stream(10);
        let p = tail_prob_mc(&m, t, x, 200_000, &mut rng);
        assert!(p.contains(exact), "{p:?} vs {exact}");
    }

    #[test]
    fn grid_csv_header() {
        let rows = moment_grid(&[1.0], &[1.0], &[0.5], &[0.5], 1000, 3).unwrap();
        assert_eq!(rows.len(), 3);
        let mut buf = Vec::new();
        write_grid_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("c1,c2,t,stat,analytic,mc,se\n1,1,0.5,mean,"));
    }
}
