use rayon::prelude::*;

use super::report::{CriterionReport, PointRow, PointStatus, TermRow, Verdict};
use super::{small_t_grid, DEFAULT_EPSILON_PRIME};
use crate::birth::{tail_prob_exact, tail_prob_mc, OffspringModel};
use crate::error::{Error, Result};
use crate::plan::SequencePlan;
use crate::rng::substream;
use crate::stats::Proportion;

/// Sampling controls shared by the criterion evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub nsamples: u64,
    pub seed: u64,
    /// Use closed-form tail probabilities whenever the model admits them.
    pub use_exact: bool,
}

impl McConfig {
    pub fn new(nsamples: u64, seed: u64) -> Self {
        McConfig {
            nsamples,
            seed,
            use_exact: true,
        }
    }

    pub fn monte_carlo(nsamples: u64, seed: u64) -> Self {
        McConfig {
            nsamples,
            seed,
            use_exact: false,
        }
    }
}

/// Fewest Monte Carlo draws accepted per term or grid point.
pub const MIN_SAMPLES: u64 = 10_000;
const UNRESOLVED_RUN: usize = 3;
const TERM_WIDTH_FLOOR: f64 = 1e-6;
const CAUCHY_TAIL: f64 = 1e-3;
const DIVERGENT_FLOOR: f64 = 0.5;

/// `(1 - q)^m` evaluated as `exp(m log1p(-q))`.
fn power_term(q: f64, m: u64) -> f64 {
    if q >= 1.0 {
        0.0
    } else {
        (m as f64 * (-q).ln_1p()).exp()
    }
}

fn estimate_tail(model: &OffspringModel, t: f64, x: u64, cfg: &McConfig, stream: u64) -> (Proportion, &'static str) {
    if cfg.use_exact {
        if let Some(p) = tail_prob_exact(model, t, x) {
            return (Proportion::exact(p), "exact");
        }
    }
    let mut rng = substream(cfg.seed, stream);
    (tail_prob_mc(model, t, x, cfg.nsamples, &mut rng), "mc")
}

fn longest_run(flags: impl Iterator<Item = bool>) -> usize {
    let mut best = 0;
    let mut run = 0;
    for f in flags {
        run = if f { run + 1 } else { 0 };
        best = best.max(run);
    }
    best
}

/// Evaluates `sum_i P(xi(t_i) <= M_{i+1})^{M_i}` for `i = 1..=i_max`.
/// Term `i` draws from stream `i` split from the configured seed.
pub fn summability_test(model: &OffspringModel, plan: &SequencePlan, cfg: &McConfig) -> Result<CriterionReport> {
    plan.validate()?;
    let needs_mc = !cfg.use_exact || tail_prob_exact(model, plan.t(1), plan.m(2)).is_none();
    if needs_mc && cfg.nsamples < MIN_SAMPLES {
        return Err(Error::invalid(format!("need at least {MIN_SAMPLES} samples per term")));
    }
    let terms: Vec<TermRow> = (1..=plan.i_max)
        .into_par_iter()
        .map(|i| {
            let t = plan.t(i);
            let m = plan.m(i);
            let m_next = plan.m(i + 1);
            let (q, method) = estimate_tail(model, t, m_next, cfg, i as u64);
            let term = power_term(q.estimate, m);
            let term_lo = power_term(q.upper, m);
            let term_hi = power_term(q.lower, m);
            let resolved = m as f64 * q.width() <= 1.0 || term_hi - term_lo <= TERM_WIDTH_FLOOR;
            TermRow {
                i,
                t,
                m,
                m_next,
                q: q.estimate,
                q_lo: q.lower,
                q_hi: q.upper,
                term,
                term_lo,
                term_hi,
                resolved,
                method,
            }
        })
        .collect();
    let mut partial_sums = Vec::with_capacity(terms.len());
    let mut acc = (0.0, 0.0, 0.0);
    for r in &terms {
        acc.0 += r.term_lo;
        acc.1 += r.term;
        acc.2 += r.term_hi;
        partial_sums.push(acc);
    }
    let quartile = terms.len().div_ceil(4).max(1);
    let tail = &terms[terms.len() - quartile..];
    let unresolved_run = longest_run(terms.iter().map(|r| !r.resolved));
    let tail_upper: f64 = tail.iter().map(|r| r.term_hi).sum();
    let (verdict, note) = if unresolved_run >= UNRESOLVED_RUN {
        (
            Verdict::Inconclusive,
            format!("{unresolved_run} consecutive unresolved terms"),
        )
    } else if tail_upper < CAUCHY_TAIL {
        (
            Verdict::SummableEvidence,
            format!("upper tail sum over last {quartile} terms = {tail_upper:.3e}"),
        )
    } else if tail.iter().all(|r| r.term_lo >= DIVERGENT_FLOOR) {
        (
            Verdict::DivergentEvidence,
            format!("lower bounds of last {quartile} terms all >= {DIVERGENT_FLOOR}"),
        )
    } else {
        (
            Verdict::Inconclusive,
            format!("upper tail sum over last {quartile} terms = {tail_upper:.3e}"),
        )
    };
    Ok(CriterionReport {
        test: "summability",
        verdict,
        terms,
        partial_sums,
        points: Vec::new(),
        policy: format!(
            "plan: {}; 99% Wilson intervals on q_i; term unresolved if M_i * width(q_i) > 1 and term width > {TERM_WIDTH_FLOOR}; \
             {UNRESOLVED_RUN} consecutive unresolved -> Inconclusive; sum of upper terms over the last quartile < {CAUCHY_TAIL} -> SummableEvidence; \
             all lower terms over the last quartile >= {DIVERGENT_FLOOR} -> DivergentEvidence; otherwise Inconclusive",
            plan.describe()
        ),
        notes: vec![note],
    })
}

/// Grid and constants of a tail condition
/// `P(Y > x) > x^{-1} (ln x)^{1 + epsilon} t` for `t <= epsilon'`, `x >= x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailGrid {
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub x0: f64,
    pub t_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
}

impl TailGrid {
    pub fn standard(epsilon: f64) -> Self {
        TailGrid {
            epsilon,
            epsilon_prime: DEFAULT_EPSILON_PRIME,
            x0: 10.0,
            t_grid: small_t_grid(),
            x_grid: vec![1e1, 1e2, 1e3, 1e4],
        }
    }

    /// The same grid with every `t` (and `epsilon'`) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        TailGrid {
            epsilon_prime: self.epsilon_prime * factor,
            t_grid: self.t_grid.iter().map(|t| t * factor).collect(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon_prime > 0.0 && self.x0 > 1.0) {
            return Err(Error::invalid("tail grid needs epsilon > 0, epsilon' > 0, x0 > 1"));
        }
        if self.t_grid.iter().any(|&t| !(t > 0.0 && t <= self.epsilon_prime)) {
            return Err(Error::invalid("tail grid t values must lie in (0, epsilon']"));
        }
        if self.x_grid.iter().any(|&x| !(x >= self.x0 && x.is_finite())) {
            return Err(Error::invalid("tail grid x values must be finite and >= x0"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut pts = Vec::new();
        for &t in &self.t_grid {
            for &x in &self.x_grid {
                pts.push((t, x));
            }
        }
        pts
    }
}

/// `x^{-1} (ln x)^{1 + epsilon} t`.
pub fn tail_threshold(x: f64, t: f64, epsilon: f64) -> f64 {
    x.ln().powf(1.0 + epsilon) * t / x
}

pub(super) fn point_row(t: f64, x: f64, epsilon: f64, p: Proportion, method: &'static str) -> PointRow {
    let threshold = tail_threshold(x, t, epsilon);
    let status = if p.lower > threshold {
        PointStatus::Pass
    } else if p.upper < threshold {
        PointStatus::Fail
    } else {
        PointStatus::Unresolved
    };
    PointRow {
        t,
        x,
        threshold,
        p: p.estimate,
        p_lo: p.lower,
        p_hi: p.upper,
        status,
        method,
    }
}

pub(super) fn tail_report(test: &'static str, points: Vec<PointRow>, grid: &TailGrid) -> CriterionReport {
    let fails = points.iter().filter(|p| p.status == PointStatus::Fail).count();
    let unresolved_run = longest_run(points.iter().map(|p| p.status == PointStatus::Unresolved));
    let (verdict, note) = if fails > 0 {
        (
            Verdict::DivergentEvidence,
            format!("condition violated at {fails} grid points"),
        )
    } else if unresolved_run >= UNRESOLVED_RUN {
        (
            Verdict::Inconclusive,
            format!("{unresolved_run} consecutive unresolved grid points"),
        )
    } else {
        (
            Verdict::SummableEvidence,
            "no grid point has its upper bound below the threshold".to_string(),
        )
    };
    CriterionReport {
        test,
        verdict,
        terms: Vec::new(),
        partial_sums: Vec::new(),
        points,
        policy: format!(
            "epsilon = {}, epsilon' = {}, x0 = {}; point passes if the 99% lower bound exceeds x^-1 (ln x)^(1+epsilon) t, fails if the upper bound is below it; \
             any failing point -> DivergentEvidence (condition refuted); {UNRESOLVED_RUN} consecutive unresolved -> Inconclusive; otherwise SummableEvidence (condition supported)",
            grid.epsilon, grid.epsilon_prime, grid.x0
        ),
        notes: vec![note],
    }
}

/// Checks `P(xi(t) > x) > x^{-1} (ln x)^{1+epsilon} t` on every grid point.
/// Point `j` (row-major in `t`, then `x`) draws from stream `j`.
pub fn tail_criterion_test(model: &OffspringModel, grid: &TailGrid, cfg: &McConfig) -> Result<CriterionReport> {
    grid.validate()?;
    let pts = grid.points();
    let needs_mc = !cfg.use_exact
        || pts
            .first()
            .is_some_and(|&(t, x)| tail_prob_exact(model, t, x as u64).is_none());
    if needs_mc && cfg.nsamples < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_SAMPLES} samples per grid point"
        )));
    }
    let rows: Vec<PointRow> = pts
        .par_iter()
        .enumerate()
        .map(|(j, &(t, x))| {
            // xi is integer valued, so P(xi > x) = P(xi > floor(x)).
            let (p, method) = estimate_tail(model, t, x.floor() as u64, cfg, j as u64);
            point_row(t, x, grid.epsilon, p, method)
        })
        .collect();
    Ok(tail_report("tail-criterion", rows, grid))
}
