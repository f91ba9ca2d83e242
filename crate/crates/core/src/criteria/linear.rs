use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use super::report::{CriterionReport, Verdict};
use super::some_t_grid;
use super::summability::{point_row, tail_report, McConfig, TailGrid, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::fitness::{Coupling, PairSpec, ScalarLaw};
use crate::quadrature::integrate;
use crate::rng::substream;
use crate::stats::{median, wilson, Proportion, Z99};

/// `V (e^{U t} - 1) / U`, read as `V t` when `U = 0`.
pub fn linear_tail_variable(u: f64, v: f64, t: f64) -> f64 {
    if u == 0.0 {
        v * t
    } else {
        v * (u * t).exp_m1() / u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMethod {
    /// Closed form where the law admits one, sampling otherwise.
    Auto,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentConfig {
    pub method: MomentMethod,
    pub nsamples: u64,
    pub seed: u64,
}

impl Default for MomentConfig {
    fn default() -> Self {
        MomentConfig {
            method: MomentMethod::Auto,
            nsamples: 200_000,
            seed: 0,
        }
    }
}

/// Estimate of `E[Y 1{Y <= level}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPoint {
    pub level: f64,
    pub estimate: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MomentOutcome {
    Finite {
        value: f64,
        lower: f64,
        upper: f64,
        method: &'static str,
    },
    DivergenceSuspected {
        curve: Vec<TruncationPoint>,
        low_confidence: bool,
    },
}

impl MomentOutcome {
    pub fn is_finite(&self) -> bool {
        matches!(self, MomentOutcome::Finite { .. })
    }
}

impl fmt::Display for MomentOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentOutcome::Finite {
                value,
                lower,
                upper,
                method,
            } => {
                write!(f, "Finite({value} in [{lower}, {upper}], {method})")
            }
            MomentOutcome::DivergenceSuspected { curve, low_confidence } => {
                write!(f, "DivergenceSuspected({} truncation levels", curve.len())?;
                if *low_confidence {
                    write!(f, ", low confidence")?;
                }
                write!(f, ")")
            }
        }
    }
}

const STABLE_CHANGE: f64 = 0.01;
const GROWTH_PER_DOUBLING: f64 = 0.25;
const MIN_LEVELS: usize = 4;
const MIN_EXCEEDANCES: usize = 100;

/// `E[(e^{U t} - 1) / U]` for `U ~ law`.
fn u_factor(law: &ScalarLaw, t: f64) -> f64 {
    match *law {
        ScalarLaw::PointMass(u) => linear_tail_variable(u, 1.0, t),
        ScalarLaw::Exponential { rate } => {
            if t < rate {
                (rate / (rate - t)).ln()
            } else {
                f64::INFINITY
            }
        }
        ScalarLaw::Uniform { lo, hi } => {
            if hi == lo {
                linear_tail_variable(lo, 1.0, t)
            } else {
                let g = |u: f64| linear_tail_variable(u, 1.0, t);
                integrate(&g, lo, hi, 1e-13) / (hi - lo)
            }
        }
        ScalarLaw::Pareto { .. } | ScalarLaw::LogParetoTail(_) => f64::INFINITY,
    }
}

fn closed_form_mean(pair: &PairSpec, t: f64) -> f64 {
    let mean_v = pair.v.mean();
    match pair.coupling {
        Coupling::UZero => mean_v * t,
        Coupling::UOne => mean_v * t.exp_m1(),
        Coupling::UEqualsV => pair.v.mgf(t) - 1.0,
        Coupling::Independent => {
            if mean_v == 0.0 {
                0.0
            } else {
                mean_v * u_factor(&pair.u, t)
            }
        }
    }
}

/// Closed-form truncation curve, available when `Y` is `V` times a constant.
fn analytic_curve(pair: &PairSpec, t: f64) -> Option<Vec<TruncationPoint>> {
    let scale = match (pair.coupling, &pair.u) {
        (Coupling::UZero, _) => t,
        (Coupling::UOne, _) => t.exp_m1(),
        (Coupling::Independent, ScalarLaw::PointMass(u)) => linear_tail_variable(*u, 1.0, t),
        _ => return None,
    };
    let start = pair.v.upper_quantile(0.5).max(f64::MIN_POSITIVE);
    Some(
        (0..16)
            .map(|k| {
                let level_v = start * 2f64.powi(4 * k);
                TruncationPoint {
                    level: level_v * scale,
                    estimate: pair.v.truncated_mean(level_v) * scale,
                    se: 0.0,
                }
            })
            .collect(),
    )
}

fn sample_y<R: Rng + ?Sized>(pair: &PairSpec, t: f64, rng: &mut R) -> f64 {
    let (u, v) = pair.sample(rng);
    linear_tail_variable(u, v, t)
}

fn draw_samples(pair: &PairSpec, t: f64, n: u64, seed: u64) -> Vec<f64> {
    const BLOCK: u64 = 1 << 14;
    let blocks = n.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = substream(seed, b);
            let len = BLOCK.min(n - b * BLOCK);
            (0..len).map(move |_| sample_y(pair, t, &mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// Truncation-doubling heuristic on a sample of `Y`.
fn monte_carlo_moment(mut ys: Vec<f64>) -> MomentOutcome {
    let n = ys.len() as f64;
    if ys.iter().any(|y| !y.is_finite()) {
        return MomentOutcome::DivergenceSuspected {
            curve: Vec::new(),
            low_confidence: false,
        };
    }
    ys.sort_by(f64::total_cmp);
    let max = *ys.last().expect("empty sample");
    if max == 0.0 {
        return MomentOutcome::Finite {
            value: 0.0,
            lower: 0.0,
            upper: 0.0,
            method: "mc",
        };
    }
    let mut positive: Vec<f64> = ys.iter().copied().filter(|&y| y > 0.0).collect();
    let mut start = median(&mut positive);
    let mut levels = Vec::new();
    loop {
        levels.push(start);
        if start >= max && levels.len() >= MIN_LEVELS {
            break;
        }
        start *= 2.0;
    }
    let mut curve = Vec::with_capacity(levels.len());
    let mut reliable = 0;
    let mut idx = 0;
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for &level in &levels {
        while idx < ys.len() && ys[idx] <= level {
            sum += ys[idx];
            sumsq += ys[idx] * ys[idx];
            idx += 1;
        }
        if ys.len() - idx >= MIN_EXCEEDANCES {
            reliable += 1;
        }
        let mean = sum / n;
        let var = (sumsq / n - mean * mean).max(0.0) * n / (n - 1.0);
        curve.push(TruncationPoint {
            level,
            estimate: mean,
            se: (var / n).sqrt(),
        });
    }
    let k = curve.len();
    let last = curve[k - 1];
    let prev = curve[k - 2];
    if prev.estimate > 0.0 && (last.estimate - prev.estimate + 3.0 * last.se) / prev.estimate < STABLE_CHANGE {
        let half = Z99 * last.se;
        return MomentOutcome::Finite {
            value: last.estimate,
            lower: last.estimate - half,
            upper: last.estimate + half,
            method: "mc",
        };
    }
    // Growth is judged on levels still exceeded by enough samples to be stable.
    let growing = reliable >= MIN_LEVELS
        && curve[reliable - MIN_LEVELS..reliable]
            .windows(2)
            .all(|w| w[0].estimate > 0.0 && w[1].estimate > (1.0 + GROWTH_PER_DOUBLING) * w[0].estimate);
    MomentOutcome::DivergenceSuspected {
        curve,
        low_confidence: !growing,
    }
}

/// Decides whether `E[V (e^{U t} - 1) / U]` is finite.
pub fn linear_moment_test(pair: &PairSpec, t: f64, cfg: &MomentConfig) -> Result<MomentOutcome> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::invalid(format!("moment test needs t > 0, got {t}")));
    }
    pair.u.validate()?;
    pair.v.validate()?;
    if cfg.method == MomentMethod::Auto {
        let value = closed_form_mean(pair, t);
        if value.is_finite() {
            return Ok(MomentOutcome::Finite {
                value,
                lower: value,
                upper: value,
                method: "closed-form",
            });
        }
        if let Some(curve) = analytic_curve(pair, t) {
            return Ok(MomentOutcome::DivergenceSuspected {
                curve,
                low_confidence: false,
            });
        }
    }
    if cfg.nsamples < 2 * MIN_LEVELS as u64 {
        return Err(Error::invalid("moment test needs more samples"));
    }
    let outcome = monte_carlo_moment(draw_samples(pair, t, cfg.nsamples, cfg.seed));
    if cfg.method == MomentMethod::Auto {
        // The closed form is infinite; keep the sampled curve as the diagnostic.
        if let MomentOutcome::DivergenceSuspected { curve, .. } = outcome {
            return Ok(MomentOutcome::DivergenceSuspected {
                curve,
                low_confidence: false,
            });
        }
        return Ok(MomentOutcome::DivergenceSuspected {
            curve: Vec::new(),
            low_confidence: false,
        });
    }
    Ok(outcome)
}

/// `P(Y > x)` where the law of `Y` is a rescaling of one scalar law.
fn exact_tail(pair: &PairSpec, t: f64, x: f64) -> Option<f64> {
    match (pair.coupling, &pair.u) {
        (Coupling::UZero, _) => Some(pair.v.survival(x / t)),
        (Coupling::UOne, _) => Some(pair.v.survival(x / t.exp_m1())),
        (Coupling::UEqualsV, _) => Some(pair.v.survival(x.ln_1p() / t)),
        (Coupling::Independent, ScalarLaw::PointMass(u)) => Some(pair.v.survival(x / linear_tail_variable(*u, 1.0, t))),
        _ => None,
    }
}

/// Checks `P(Y > x) > x^{-1} (ln x)^{1+epsilon} t` for
/// `Y = V (e^{U t} - 1) / U` on every grid point.
pub fn linear_tail_test(pair: &PairSpec, grid: &TailGrid, cfg: &McConfig) -> Result<CriterionReport> {
    grid.validate()?;
    pair.u.validate()?;
    pair.v.validate()?;
    let pts = grid.points();
    let exact_available = pts.first().is_some_and(|&(t, x)| exact_tail(pair, t, x).is_some());
    if !(cfg.use_exact && exact_available) && cfg.nsamples < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_SAMPLES} samples per grid point"
        )));
    }
    let rows = pts
        .par_iter()
        .enumerate()
        .map(|(j, &(t, x))| {
            let (p, method) = match exact_tail(pair, t, x).filter(|_| cfg.use_exact) {
                Some(p) => (Proportion::exact(p), "exact"),
                None => {
                    let mut rng = substream(cfg.seed, j as u64);
                    let hits = (0..cfg.nsamples).filter(|_| sample_y(pair, t, &mut rng) > x).count() as u64;
                    (wilson(hits, cfg.nsamples, Z99), "mc")
                }
            };
            point_row(t, x, grid.epsilon, p, method)
        })
        .collect();
    Ok(tail_report("linear-tail", rows, grid))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    EveryNodeMaxDegree,
    LocallyFiniteUniquePath,
    /// Needs a non-linear fitness; never issued by [`classify_phase`].
    SingleInfiniteDegreeNode,
    Inconclusive,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::EveryNodeMaxDegree => "EveryNodeMaxDegree",
            Phase::LocallyFiniteUniquePath => "LocallyFiniteUniquePath",
            Phase::SingleInfiniteDegreeNode => "SingleInfiniteDegreeNode",
            Phase::Inconclusive => "Inconclusive",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyConfig {
    /// Times searched for a finite moment.
    pub moment_t: Vec<f64>,
    pub moment: MomentConfig,
    pub tail: TailGrid,
    pub mc: McConfig,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            moment_t: some_t_grid(),
            moment: MomentConfig::default(),
            tail: TailGrid {
                x_grid: vec![1e1, 1e2, 1e3],
                ..TailGrid::standard(0.5)
            },
            mc: McConfig::new(200_000, 0),
        }
    }
}

impl ClassifyConfig {
    /// Multiplies every time in both grids by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        ClassifyConfig {
            moment_t: self.moment_t.iter().map(|t| t * factor).collect(),
            tail: self.tail.scaled(factor),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseClassification {
    pub phase: Phase,
    pub rationale: String,
    pub moments: Vec<(f64, MomentOutcome)>,
    pub tail: Option<CriterionReport>,
}

/// Places a linear-fitness model in one of the structural phases.
pub fn classify_phase(pair: &PairSpec, cfg: &ClassifyConfig) -> Result<PhaseClassification> {
    pair.u.validate()?;
    pair.v.validate()?;
    if pair.can_vanish() {
        return Err(Error::invalid(
            "weights with P((U, V) = (0, 0)) > 0 are outside the linear phase result",
        ));
    }
    if cfg.moment_t.is_empty() {
        return Err(Error::invalid("classification needs at least one moment time"));
    }
    let mut moments = Vec::new();
    for (k, &t) in cfg.moment_t.iter().enumerate() {
        let mc = MomentConfig {
            seed: crate::rng::derive_seed(cfg.moment.seed, k as u64),
            ..cfg.moment
        };
        let outcome = linear_moment_test(pair, t, &mc)?;
        let finite = outcome.is_finite();
        moments.push((t, outcome));
        if finite {
            let rationale = format!("moment test finite at t = {t}: {}", moments.last().unwrap().1);
            return Ok(PhaseClassification {
                phase: Phase::EveryNodeMaxDegree,
                rationale,
                moments,
                tail: None,
            });
        }
    }
    let report = linear_tail_test(pair, &cfg.tail, &cfg.mc)?;
    let (phase, rationale) = match report.verdict {
        Verdict::SummableEvidence => (
            Phase::LocallyFiniteUniquePath,
            format!(
                "moment test not finite on {} times; tail condition holds on all {} grid points; \
                 sum of 1/(U i + V) diverges for finite U, V",
                cfg.moment_t.len(),
                report.points.len()
            ),
        ),
        v => (
            Phase::Inconclusive,
            format!(
                "moment test not finite on {} times; tail test gave {v}",
                cfg.moment_t.len()
            ),
        ),
    };
    Ok(PhaseClassification {
        phase,
        rationale,
        moments,
        tail: Some(report),
    })
}
