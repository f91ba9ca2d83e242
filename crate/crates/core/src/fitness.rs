//! Weight laws and fitness functions for recursive trees with fitness.
//!
//! A node carries a random weight `W`, either a nonnegative scalar or a pair
//! `(U, V)`. Its attachment rate when it already has `k` children is
//! `f(k, W)`. The linear family `f(k, (U, V)) = U k + V` covers the weighted
//! random recursive tree (`U = 0`), additive preferential attachment
//! (`U = 1`) and the Bianconi-Barabasi model (`U = V`).

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::open01;

/// Law of a nonnegative scalar weight component.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarLaw {
    PointMass(f64),
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    Pareto { shape: f64, scale: f64 },
    LogParetoTail(LogParetoTail),
}

impl ScalarLaw {
    pub fn point_mass(value: f64) -> Result<Self> {
        let law = ScalarLaw::PointMass(value);
        law.validate()?;
        Ok(law)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        let law = ScalarLaw::Exponential { rate };
        law.validate()?;
        Ok(law)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let law = ScalarLaw::Uniform { lo, hi };
        law.validate()?;
        Ok(law)
    }

    pub fn pareto(shape: f64, scale: f64) -> Result<Self> {
        let law = ScalarLaw::Pareto { shape, scale };
        law.validate()?;
        Ok(law)
    }

    pub fn log_pareto_tail(nu: f64, x0: f64) -> Result<Self> {
        Ok(ScalarLaw::LogParetoTail(LogParetoTail::new(nu, x0)?))
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScalarLaw::PointMass(v) => v.is_finite() && v >= 0.0,
            ScalarLaw::Exponential { rate } => rate.is_finite() && rate > 0.0,
            ScalarLaw::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi,
            ScalarLaw::Pareto { shape, scale } => shape.is_finite() && shape > 0.0 && scale.is_finite() && scale > 0.0,
            ScalarLaw::LogParetoTail(ref l) => return LogParetoTail::new(l.nu, l.x0).map(|_| ()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("bad parameters for {self}")))
        }
    }

    /// Upper quantile: the `x` with `P(X > x) = s`, for `s` in (0, 1).
    pub fn upper_quantile(&self, s: f64) -> f64 {
        match *self {
            ScalarLaw::PointMass(v) => v,
            ScalarLaw::Exponential { rate } => -s.ln() / rate,
            ScalarLaw::Uniform { lo, hi } => hi - (hi - lo) * s,
            ScalarLaw::Pareto { shape, scale } => scale * s.powf(-1.0 / shape),
            ScalarLaw::LogParetoTail(ref l) => l.upper_quantile(s),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ScalarLaw::PointMass(v) => v,
            _ => self.upper_quantile(open01(rng)),
        }
    }

    /// `P(X > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            ScalarLaw::PointMass(v) => {
                if x < v {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarLaw::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            ScalarLaw::Uniform { lo, hi } => {
                if x < lo {
                    1.0
                } else if x >= hi {
                    0.0
                } else {
                    (hi - x) / (hi - lo)
                }
            }
            ScalarLaw::Pareto { shape, scale } => {
                if x <= scale {
                    1.0
                } else {
                    (scale / x).powf(shape)
                }
            }
            ScalarLaw::LogParetoTail(ref l) => l.survival(x),
        }
    }

    /// `E[X]`, possibly infinite.
    pub fn mean(&self) -> f64 {
        match *self {
            ScalarLaw::PointMass(v) => v,
            ScalarLaw::Exponential { rate } => 1.0 / rate,
            ScalarLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            ScalarLaw::Pareto { shape, scale } => {
                if shape > 1.0 {
                    shape * scale / (shape - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            ScalarLaw::LogParetoTail(_) => f64::INFINITY,
        }
    }

    /// Moment generating function `E[exp(t X)]` for `t >= 0`, possibly infinite.
    pub fn mgf(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 1.0;
        }
        match *self {
            ScalarLaw::PointMass(v) => (v * t).exp(),
            ScalarLaw::Exponential { rate } => {
                if t < rate {
                    rate / (rate - t)
                } else {
                    f64::INFINITY
                }
            }
            ScalarLaw::Uniform { lo, hi } => {
                if hi == lo {
                    (lo * t).exp()
                } else {
                    ((hi * t).exp() - (lo * t).exp()) / ((hi - lo) * t)
                }
            }
            ScalarLaw::Pareto { .. } | ScalarLaw::LogParetoTail(_) => f64::INFINITY,
        }
    }

    /// `E[X 1{X <= level}]`.
    pub fn truncated_mean(&self, level: f64) -> f64 {
        if level <= 0.0 {
            return 0.0;
        }
        match *self {
            ScalarLaw::PointMass(v) => {
                if v <= level {
                    v
                } else {
                    0.0
                }
            }
            ScalarLaw::Exponential { rate } => {
                let a = rate * level;
                (1.0 - (1.0 + a) * (-a).exp()) / rate
            }
            ScalarLaw::Uniform { lo, hi } => {
                if level < lo {
                    0.0
                } else if hi == lo {
                    lo
                } else {
                    let b = level.min(hi);
                    (b * b - lo * lo) / (2.0 * (hi - lo))
                }
            }
            ScalarLaw::Pareto { shape, scale } => {
                if level <= scale {
                    0.0
                } else if (shape - 1.0).abs() < 1e-12 {
                    scale * (level / scale).ln()
                } else {
                    shape * scale.powf(shape) / (1.0 - shape) * (level.powf(1.0 - shape) - scale.powf(1.0 - shape))
                }
            }
            ScalarLaw::LogParetoTail(ref l) => l.truncated_mean(level),
        }
    }

    /// Whether the law puts positive mass at zero.
    pub fn has_atom_at_zero(&self) -> bool {
        match *self {
            ScalarLaw::PointMass(v) => v == 0.0,
            ScalarLaw::Uniform { lo, hi } => lo == 0.0 && hi == 0.0,
            _ => false,
        }
    }

    /// Whether the support is bounded.
    pub fn is_bounded(&self) -> bool {
        matches!(self, ScalarLaw::PointMass(_) | ScalarLaw::Uniform { .. })
    }
}

impl fmt::Display for ScalarLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarLaw::PointMass(v) => write!(f, "PointMass({v})"),
            ScalarLaw::Exponential { rate } => write!(f, "Exponential(rate={rate})"),
            ScalarLaw::Uniform { lo, hi } => write!(f, "Uniform({lo},{hi})"),
            ScalarLaw::Pareto { shape, scale } => write!(f, "Pareto(alpha={shape},scale={scale})"),
            ScalarLaw::LogParetoTail(l) => write!(f, "LogParetoTail(nu={},x0={})", l.nu, l.x0),
        }
    }
}

/// Law with survival `P(V > x) = min(1, (x0/x) (ln x / ln x0)^(1+nu))` for
/// `x >= x0`, and 1 below.
///
/// For `x0 < e^(1+nu)` the raw expression rises above 1 just past `x0`; the
/// clamped survival equals 1 up to the crossover where the expression comes
/// back down to 1, and follows the expression beyond it.
#[derive(Debug, Clone, PartialEq)]
pub struct LogParetoTail {
    nu: f64,
    x0: f64,
    /// `ln` of the crossover point.
    log_crossover: f64,
}

impl LogParetoTail {
    pub fn new(nu: f64, x0: f64) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::invalid(format!("LogParetoTail: nu must be > 0, got {nu}")));
        }
        if !(x0.is_finite() && x0 > std::f64::consts::E) {
            return Err(Error::invalid(format!("LogParetoTail: x0 must exceed e, got {x0}")));
        }
        let mut law = LogParetoTail {
            nu,
            x0,
            log_crossover: x0.ln(),
        };
        law.log_crossover = law.find_crossover();
        Ok(law)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// Smallest `x >= x0` from which the unclamped expression stays at or below 1.
    pub fn crossover(&self) -> f64 {
        self.log_crossover.exp()
    }

    fn exponent(&self) -> f64 {
        1.0 + self.nu
    }

    /// `ln` of the unclamped survival expression at `x = e^y`.
    fn log_raw_survival(&self, y: f64) -> f64 {
        let a = self.exponent();
        self.x0.ln() - y + a * (y / self.x0.ln()).ln()
    }

    fn find_crossover(&self) -> f64 {
        let a = self.exponent();
        let l0 = self.x0.ln();
        if l0 >= a {
            return l0;
        }
        // The log expression is increasing below y = a and decreasing above,
        // positive at y = a; bisect for its zero on [a, hi].
        let mut lo = a;
        let mut hi = 2.0 * a;
        while self.log_raw_survival(hi) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.log_raw_survival(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let y = x.ln();
        if y <= self.log_crossover {
            1.0
        } else {
            self.log_raw_survival(y).exp().min(1.0)
        }
    }

    /// Solves `P(V > x) = s`. The log survival is concave and decreasing in
    /// `ln x` beyond the crossover, so Newton started to the right of the
    /// root decreases monotonically onto it.
    pub fn upper_quantile(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return self.crossover();
        }
        let target = s.ln();
        let a = self.exponent();
        let h = |y: f64| self.log_raw_survival(y) - target;
        let mut y = self.log_crossover + 1.0 - 2.0 * target + a;
        while h(y) > 0.0 {
            y *= 2.0;
        }
        for _ in 0..100 {
            let slope = -1.0 + a / y;
            let step = h(y) / slope;
            let next = y - step;
            if !(next.is_finite()) || next <= self.log_crossover {
                break;
            }
            if (next - y).abs() <= 1e-14 * y {
                y = next;
                break;
            }
            y = next;
        }
        y.exp()
    }

    /// `E[V 1{V <= level}] = int_0^level S - level S(level)`.
    pub fn truncated_mean(&self, level: f64) -> f64 {
        let xc = self.crossover();
        if level < xc {
            return 0.0;
        }
        let a = self.exponent();
        let l0 = self.x0.ln();
        let integral_tail =
            self.x0 * (level.ln().powf(a + 1.0) - self.log_crossover.powf(a + 1.0)) / ((a + 1.0) * l0.powf(a));
        xc + integral_tail - level * self.survival(level)
    }
}

/// How the two components of a pair weight are tied together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// `U` and `V` drawn independently from their own laws.
    Independent,
    /// `U = V` (Bianconi-Barabasi).
    UEqualsV,
    /// `U = 0` (weighted random recursive tree).
    UZero,
    /// `U = 1` (additive preferential attachment).
    UOne,
}

impl Coupling {
    pub fn as_str(&self) -> &'static str {
        match self {
            Coupling::Independent => "independent",
            Coupling::UEqualsV => "u-equals-v",
            Coupling::UZero => "u-zero",
            Coupling::UOne => "u-one",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "independent" => Coupling::Independent,
            "u-equals-v" => Coupling::UEqualsV,
            "u-zero" => Coupling::UZero,
            "u-one" => Coupling::UOne,
            _ => return None,
        })
    }
}

/// Law of a pair weight `(U, V)`. The `u` law is only consulted under
/// [`Coupling::Independent`].
#[derive(Debug, Clone, PartialEq)]
pub struct PairSpec {
    pub u: ScalarLaw,
    pub v: ScalarLaw,
    pub coupling: Coupling,
}

impl PairSpec {
    pub fn wrrt(v: ScalarLaw) -> Self {
        PairSpec {
            u: ScalarLaw::PointMass(0.0),
            v,
            coupling: Coupling::UZero,
        }
    }

    pub fn additive(v: ScalarLaw) -> Self {
        PairSpec {
            u: ScalarLaw::PointMass(1.0),
            v,
            coupling: Coupling::UOne,
        }
    }

    pub fn bianconi_barabasi(v: ScalarLaw) -> Self {
        PairSpec {
            u: v.clone(),
            v,
            coupling: Coupling::UEqualsV,
        }
    }

    pub fn independent(u: ScalarLaw, v: ScalarLaw) -> Self {
        PairSpec {
            u,
            v,
            coupling: Coupling::Independent,
        }
    }

    /// The law actually governing `U`.
    pub fn effective_u(&self) -> ScalarLaw {
        match self.coupling {
            Coupling::Independent => self.u.clone(),
            Coupling::UEqualsV => self.v.clone(),
            Coupling::UZero => ScalarLaw::PointMass(0.0),
            Coupling::UOne => ScalarLaw::PointMass(1.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match self.coupling {
            Coupling::Independent => {
                let u = self.u.sample(rng);
                let v = self.v.sample(rng);
                (u, v)
            }
            Coupling::UEqualsV => {
                let v = self.v.sample(rng);
                (v, v)
            }
            Coupling::UZero => (0.0, self.v.sample(rng)),
            Coupling::UOne => (1.0, self.v.sample(rng)),
        }
    }

    /// Whether `P((U, V) = (0, 0)) > 0`.
    pub fn can_vanish(&self) -> bool {
        let u_zero = match self.coupling {
            Coupling::UOne => false,
            Coupling::UZero => true,
            Coupling::UEqualsV => self.v.has_atom_at_zero(),
            Coupling::Independent => self.u.has_atom_at_zero(),
        };
        u_zero && self.v.has_atom_at_zero()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Scalar(ScalarLaw),
    Pair(PairSpec),
}

impl WeightSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightSpec::Scalar(l) => l.validate(),
            WeightSpec::Pair(p) => {
                p.v.validate()?;
                if p.coupling == Coupling::Independent {
                    p.u.validate()?;
                }
                Ok(())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Weight {
        match self {
            WeightSpec::Scalar(l) => Weight::Scalar(l.sample(rng)),
            WeightSpec::Pair(p) => {
                let (u, v) = p.sample(rng);
                Weight::Pair { u, v }
            }
        }
    }

    pub fn as_pair(&self) -> Option<&PairSpec> {
        match self {
            WeightSpec::Pair(p) => Some(p),
            WeightSpec::Scalar(_) => None,
        }
    }
}

/// A realized node weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Scalar(f64),
    Pair { u: f64, v: f64 },
}

impl Weight {
    /// `(U, V)` view; a scalar weight reads as `(0, w)`.
    pub fn components(&self) -> (f64, f64) {
        match *self {
            Weight::Scalar(w) => (0.0, w),
            Weight::Pair { u, v } => (u, v),
        }
    }
}

/// What happens past the end of a rate table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailRule {
    ZeroAfterEnd,
    ConstantLast,
}

impl TailRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            TailRule::ZeroAfterEnd => "zero-after-end",
            TailRule::ConstantLast => "constant-last",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zero-after-end" => Some(TailRule::ZeroAfterEnd),
            "constant-last" => Some(TailRule::ConstantLast),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitnessSpec {
    /// `f(k, (U, V)) = U k + V`.
    Linear,
    /// Weight-independent rates `f(k) = rates[k]`, extended by `tail`.
    Tabulated { rates: Vec<f64>, tail: TailRule },
}

impl FitnessSpec {
    pub fn tabulated(rates: Vec<f64>, tail: TailRule) -> Result<Self> {
        let spec = FitnessSpec::Tabulated { rates, tail };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FitnessSpec::Linear => Ok(()),
            FitnessSpec::Tabulated { rates, .. } => {
                if rates.is_empty() {
                    return Err(Error::invalid("tabulated fitness needs at least one rate"));
                }
                if let Some(bad) = rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
                    return Err(Error::invalid(format!(
                        "tabulated rate {bad} is not a finite nonnegative number"
                    )));
                }
                Ok(())
            }
        }
    }

    /// `f(k, w)`.
    #[inline]
    pub fn rate(&self, k: u64, w: &Weight) -> f64 {
        match self {
            FitnessSpec::Linear => {
                let (u, v) = w.components();
                u * k as f64 + v
            }
            FitnessSpec::Tabulated { rates, tail } => match rates.get(k as usize) {
                Some(&r) => r,
                None => match tail {
                    TailRule::ZeroAfterEnd => 0.0,
                    TailRule::ConstantLast => *rates.last().expect("nonempty table"),
                },
            },
        }
    }

    /// First index from which the rate is constant, with that rate.
    /// Past this index births arrive as a homogeneous Poisson stream.
    pub fn constant_from(&self, w: &Weight) -> Option<(u64, f64)> {
        match self {
            FitnessSpec::Linear => {
                let (u, v) = w.components();
                (u == 0.0).then_some((0, v))
            }
            FitnessSpec::Tabulated { rates, tail } => {
                let tail_rate = match tail {
                    TailRule::ZeroAfterEnd => 0.0,
                    TailRule::ConstantLast => *rates.last().expect("nonempty table"),
                };
                let mut start = rates.len();
                while start > 0 && rates[start - 1] == tail_rate {
                    start -= 1;
                }
                Some((start as u64, tail_rate))
            }
        }
    }
}

/// `sup { i : f(i, w) > 0 }`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegMax {
    /// `f(i, w) = 0` for every `i`: the node never reproduces.
    None,
    Finite(u64),
    Infinite,
}

pub fn deg_max(spec: &FitnessSpec, w: &Weight) -> DegMax {
    match spec {
        FitnessSpec::Linear => {
            let (u, v) = w.components();
            if u > 0.0 || v > 0.0 {
                DegMax::Infinite
            } else {
                DegMax::None
            }
        }
        FitnessSpec::Tabulated { rates, tail } => {
            let last = *rates.last().expect("nonempty table");
            if *tail == TailRule::ConstantLast && last > 0.0 {
                return DegMax::Infinite;
            }
            match rates.iter().rposition(|&r| r > 0.0) {
                Some(i) => DegMax::Finite(i as u64),
                None => DegMax::None,
            }
        }
    }
}

/// A fitness function together with the weight law it is evaluated on.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessModel {
    pub fitness: FitnessSpec,
    pub weights: WeightSpec,
}

impl FitnessModel {
    pub fn new(fitness: FitnessSpec, weights: WeightSpec) -> Result<Self> {
        fitness.validate()?;
        weights.validate()?;
        Ok(FitnessModel { fitness, weights })
    }

    pub fn linear(pair: PairSpec) -> Result<Self> {
        Self::new(FitnessSpec::Linear, WeightSpec::Pair(pair))
    }

    /// Weighted random recursive tree with `V ~ v`.
    pub fn wrrt(v: ScalarLaw) -> Result<Self> {
        Self::linear(PairSpec::wrrt(v))
    }

    /// Additive preferential attachment with `V ~ v`.
    pub fn additive(v: ScalarLaw) -> Result<Self> {
        Self::linear(PairSpec::additive(v))
    }

    pub fn bianconi_barabasi(v: ScalarLaw) -> Result<Self> {
        Self::linear(PairSpec::bianconi_barabasi(v))
    }

    /// `f(k) = k + 1`: the Yule tree.
    pub fn yule() -> Self {
        Self::additive(ScalarLaw::PointMass(1.0)).expect("valid")
    }

    pub fn tabulated(rates: Vec<f64>, tail: TailRule) -> Result<Self> {
        Self::new(
            FitnessSpec::tabulated(rates, tail)?,
            WeightSpec::Scalar(ScalarLaw::PointMass(1.0)),
        )
    }

    #[inline]
    pub fn rate(&self, k: u64, w: &Weight) -> f64 {
        self.fitness.rate(k, w)
    }

    pub fn sample_weight<R: Rng + ?Sized>(&self, rng: &mut R) -> Weight {
        self.weights.sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::{ks_critical_001, ks_statistic, MeanAccumulator};

    #[test]
    fn point_mass_sample() {
        let mut rng = stream(1);
        assert_eq!(ScalarLaw::point_mass(3.5).unwrap().sample(&mut rng), 3.5);
    }

    #[test]
    fn pair_coupling_equal() {
        let mut rng = stream(2);
        let spec = WeightSpec::Pair(PairSpec::bianconi_barabasi(ScalarLaw::PointMass(2.0)));
        assert_eq!(spec.sample(&mut rng), Weight::Pair { u: 2.0, v: 2.0 });
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(ScalarLaw::exponential(0.0).is_err());
        assert!(ScalarLaw::exponential(f64::INFINITY).is_err());
        assert!(ScalarLaw::uniform(2.0, 1.0).is_err());
        assert!(ScalarLaw::uniform(-1.0, 1.0).is_err());
        assert!(ScalarLaw::pareto(0.0, 1.0).is_err());
        assert!(ScalarLaw::point_mass(f64::INFINITY).is_err());
        assert!(ScalarLaw::log_pareto_tail(1.0, std::f64::consts::E).is_err());
        assert!(ScalarLaw::log_pareto_tail(0.0, 10.0).is_err());
        assert!(FitnessSpec::tabulated(vec![], TailRule::ZeroAfterEnd).is_err());
        assert!(FitnessSpec::tabulated(vec![1.0, -1.0], TailRule::ZeroAfterEnd).is_err());
    }

    #[test]
    fn linear_fitness_values() {
        let w = Weight::Pair { u: 2.0, v: 3.0 };
        assert_eq!(FitnessSpec::Linear.rate(4, &w), 11.0);
        let w = Weight::Pair { u: 0.0, v: 5.0 };
        for k in [0, 1, 17, 1000] {
            assert_eq!(FitnessSpec::Linear.rate(k, &w), 5.0);
        }
    }

    #[test]
    fn tabulated_tail_rules() {
        let w = Weight::Scalar(1.0);
        let zero = FitnessSpec::tabulated(vec![1.0, 0.5], TailRule::ZeroAfterEnd).unwrap();
        assert_eq!(zero.rate(2, &w), 0.0);
        let last = FitnessSpec::tabulated(vec![1.0, 0.5], TailRule::ConstantLast).unwrap();
        assert_eq!(last.rate(9, &w), 0.5);
        assert_eq!(last.constant_from(&w), Some((1, 0.5)));
        assert_eq!(zero.constant_from(&w), Some((2, 0.0)));
    }

    #[test]
    fn deg_max_cases() {
        let lin = FitnessSpec::Linear;
        assert_eq!(deg_max(&lin, &Weight::Pair { u: 1.0, v: 1.0 }), DegMax::Infinite);
        assert_eq!(deg_max(&lin, &Weight::Pair { u: 0.0, v: 0.0 }), DegMax::None);
        let tab = FitnessSpec::tabulated(vec![2.0, 3.0, 0.0, 0.0], TailRule::ZeroAfterEnd).unwrap();
        assert_eq!(deg_max(&tab, &Weight::Scalar(1.0)), DegMax::Finite(1));
        let tab = FitnessSpec::tabulated(vec![0.0], TailRule::ConstantLast).unwrap();
        assert_eq!(deg_max(&tab, &Weight::Scalar(1.0)), DegMax::None);
    }

    #[test]
    fn log_pareto_survival_shape() {
        let l = LogParetoTail::new(1.0, 3.0).unwrap();
        // x0 = 3 < e^2, so the clamp is active past x0.
        assert!(l.crossover() > 3.0);
        assert_eq!(l.survival(3.0), 1.0);
        assert_eq!(l.survival(l.crossover() * 0.999), 1.0);
        let mut prev = 1.0;
        let mut x = 1.0;
        while x < 1e12 {
            let s = l.survival(x);
            assert!(s <= prev + 1e-15, "nonincreasing at {x}");
            assert!((0.0..=1.0).contains(&s));
            prev = s;
            x *= 1.07;
        }
        assert!(l.survival(1e12) < 1e-8);
    }

    #[test]
    fn log_pareto_no_clamp_when_x0_large() {
        let x0 = (2.0f64).exp();
        let l = LogParetoTail::new(1.0, x0).unwrap();
        assert!((l.crossover() - x0).abs() < 1e-9);
        let x = 1e4;
        let expected = (x0 / x) * (x.ln() / x0.ln()).powi(2);
        assert!((l.survival(x) - expected).abs() < 1e-15);
    }

    #[test]
    fn log_pareto_quantile_inverts_survival() {
        let l = LogParetoTail::new(1.5, 5.0).unwrap();
        for s in [0.9, 0.5, 1e-3, 1e-9, 1e-15] {
            let x = l.upper_quantile(s);
            assert!((l.survival(x) - s).abs() < 1e-9 * s.max(1e-300) + 1e-15, "s={s}");
        }
    }

    #[test]
    fn log_pareto_ks_above_crossover() {
        // x0 = 3 exercises the numerically computed clamp.
        let law = ScalarLaw::log_pareto_tail(1.0, 3.0).unwrap();
        let mut rng = stream(11);
        let n = 200_000;
        let mut xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
        let d = ks_statistic(&mut xs, |x| 1.0 - law.survival(x));
        assert!(d < ks_critical_001(n), "KS distance {d}");
    }

    #[test]
    fn truncated_mean_matches_quadrature_of_survival() {
        let laws = [
            ScalarLaw::exponential(0.7).unwrap(),
            ScalarLaw::uniform(1.0, 4.0).unwrap(),
            ScalarLaw::pareto(1.0, 2.0).unwrap(),
            ScalarLaw::pareto(2.5, 1.0).unwrap(),
            ScalarLaw::log_pareto_tail(1.0, 3.0).unwrap(),
        ];
        for law in &laws {
            for level in [5.0, 50.0, 500.0] {
                let integral = crate::quadrature::integrate(&|x| law.survival(x), 0.0, level, 1e-10);
                let expected = integral - level * law.survival(level);
                let got = law.truncated_mean(level);
                assert!(
                    (got - expected).abs() < 1e-6 * expected.max(1.0),
                    "{law} at {level}: {got} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn exponential_mean_within_five_se() {
        let law = ScalarLaw::exponential(2.0).unwrap();
        let mut rng = stream(5);
        let acc: MeanAccumulator = (0..1_000_000).map(|_| law.sample(&mut rng)).collect();
        assert!((acc.mean() - 0.5).abs() < 5.0 * acc.std_error());
    }
}
