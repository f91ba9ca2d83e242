//! Event-driven simulation of the CMJ branching process whose individuals
//! give birth at rates `f(0, W), f(1, W), ...`, its skeleton tree, the
//! witness search for an infinite path of bounded birth time, and explosion
//! diagnostics on the population milestones `tau_k`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::fitness::{FitnessModel, FitnessSpec, Weight};
use crate::plan::SequencePlan;
use crate::rng::{exponential, open01};
use crate::tree::RecursiveTree;

/// Default population cap of a run.
pub const DEFAULT_POPULATION_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub id: usize,
    pub parent: Option<usize>,
    pub birth_time: f64,
    pub weight: Weight,
    pub children_born: u64,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    time: f64,
    seq: u64,
    id: usize,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Reversed so that the max-heap pops the earliest time, ties by insertion.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Pending birth clocks, one per individual, popped in time order.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Pending>,
    seq: u64,
    last: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: f64, id: usize) {
        self.heap.push(Pending {
            time,
            seq: self.seq,
            id,
        });
        self.seq += 1;
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|p| p.time)
    }

    pub fn pop(&mut self) -> Option<(f64, usize)> {
        let p = self.heap.pop()?;
        debug_assert!(p.time >= self.last, "event times must not decrease");
        self.last = p.time;
        Some((p.time, p.id))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stop {
    /// Stop once the population reaches `K`.
    Population(u64),
    /// Stop at time `T`; births at times `<= T` are included.
    Time(f64),
}

/// Population milestones of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplosionEstimate {
    /// `tau[k]` is the time the population reached `k`, for `k >= 1`;
    /// `tau[0] = tau[1] = 0`.
    pub tau: Vec<f64>,
    /// The population cap was hit before the stop condition.
    pub saturated: bool,
    /// Time up to which the process was followed.
    pub horizon: f64,
}

impl ExplosionEstimate {
    pub fn from_tau(tau: Vec<f64>) -> Self {
        let horizon = tau.last().copied().unwrap_or(0.0);
        ExplosionEstimate {
            tau,
            saturated: false,
            horizon,
        }
    }

    /// Largest `k` recorded.
    pub fn population(&self) -> u64 {
        (self.tau.len() as u64).saturating_sub(1)
    }

    /// CSV with header `k,tau_k` for `k >= 1`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "k,tau_k")?;
        for (k, t) in self.tau.iter().enumerate().skip(1) {
            writeln!(out, "{k},{t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CmjRun {
    /// Individuals in birth order; `individuals[i].id == i`.
    pub individuals: Vec<Individual>,
    pub estimate: ExplosionEstimate,
    /// Number of births processed.
    pub events: u64,
}

impl CmjRun {
    /// CSV with header `id,parent,birth_time,weight_u,weight_v`.
    pub fn write_genealogy_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "id,parent,birth_time,weight_u,weight_v")?;
        for ind in &self.individuals {
            let parent = ind.parent.map_or_else(|| "-1".to_string(), |p| p.to_string());
            let (u, v) = match ind.weight {
                Weight::Scalar(w) => (String::new(), w.to_string()),
                Weight::Pair { u, v } => (u.to_string(), v.to_string()),
            };
            writeln!(out, "{},{parent},{},{u},{v}", ind.id, ind.birth_time)?;
        }
        Ok(())
    }
}

fn arm<R: Rng + ?Sized>(queue: &mut EventQueue, model: &FitnessModel, ind: &Individual, now: f64, rng: &mut R) {
    let rate = model.rate(ind.children_born, &ind.weight);
    if rate > 0.0 {
        queue.push(now + exponential(rng, rate), ind.id);
    }
}

/// Runs the process from a single root born at time 0. Each individual
/// holds only the clock of its next child.
pub fn run_until<R: Rng + ?Sized>(model: &FitnessModel, rng: &mut R, stop: Stop, cap: u64) -> CmjRun {
    let root = Individual {
        id: 0,
        parent: None,
        birth_time: 0.0,
        weight: model.sample_weight(rng),
        children_born: 0,
    };
    let mut queue = EventQueue::new();
    arm(&mut queue, model, &root, 0.0, rng);
    let mut individuals = vec![root];
    let mut tau = vec![0.0, 0.0];
    let mut saturated = false;
    let mut now = 0.0;
    loop {
        let n = individuals.len() as u64;
        if let Stop::Population(k) = stop {
            if n >= k {
                break;
            }
        }
        if n >= cap {
            saturated = true;
            break;
        }
        let Some(next) = queue.peek_time() else { break };
        if let Stop::Time(t) = stop {
            if next > t {
                break;
            }
        }
        let (time, pid) = queue.pop().expect("peeked");
        now = time;
        let child = Individual {
            id: individuals.len(),
            parent: Some(pid),
            birth_time: time,
            weight: model.sample_weight(rng),
            children_born: 0,
        };
        arm(&mut queue, model, &child, time, rng);
        individuals.push(child);
        tau.push(time);
        let parent = &mut individuals[pid];
        parent.children_born += 1;
        let parent = parent.clone();
        arm(&mut queue, model, &parent, time, rng);
    }
    let horizon = match stop {
        Stop::Time(t) if !saturated => t,
        _ => now,
    };
    let events = individuals.len() as u64 - 1;
    CmjRun {
        individuals,
        estimate: ExplosionEstimate {
            tau,
            saturated,
            horizon,
        },
        events,
    }
}

/// The genealogy as a recursive tree; ids are already in birth order.
pub fn skeleton(run: &CmjRun) -> RecursiveTree {
    let root = &run.individuals[0];
    let mut tree = RecursiveTree::with_timed_root(root.weight);
    for ind in &run.individuals[1..] {
        tree.attach_at(ind.parent.expect("non-root"), ind.weight, ind.birth_time);
    }
    tree
}

/// Per-level record of the witness search.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelLog {
    pub level: usize,
    /// Candidates that exist at this level (at most `M_i`).
    pub available: u64,
    /// Candidates simulated before success or exhaustion.
    pub examined: u64,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessResult {
    /// Deepest `i` such that the events of levels `1..=i` were realized.
    pub depth: usize,
    /// Birth-time span of the path below the first vertex, plus the time the
    /// deepest vertex took to exceed its threshold.
    pub elapsed: f64,
    /// `sum_{i <= depth_target} t_i`.
    pub budget: f64,
    pub levels: Vec<LevelLog>,
}

/// Birth offsets (relative to the parent) of the first `m + 1` children if
/// they all arrive within `t`; `None` otherwise.
fn first_births<R: Rng + ?Sized>(model: &FitnessModel, w: &Weight, m: u64, t: f64, rng: &mut R) -> Option<Vec<f64>> {
    let needed = m + 1;
    let constant = match model.fitness {
        FitnessSpec::Linear => {
            let (u, v) = w.components();
            (u == 0.0).then_some((0, v))
        }
        _ => model.fitness.constant_from(w),
    };
    let mut times = Vec::new();
    let mut clock = 0.0;
    let mut k = 0;
    while k < needed {
        if let Some((start, c)) = constant {
            if k >= start {
                if c <= 0.0 {
                    return None;
                }
                // Arrival time of the last needed birth, then the earlier ones
                // as uniform order statistics below it.
                let rest = needed - k;
                let last = clock + Gamma::new(rest as f64, 1.0 / c).expect("positive").sample(rng);
                if last > t {
                    return None;
                }
                let mut between: Vec<f64> = (1..rest).map(|_| clock + (last - clock) * open01(rng)).collect();
                between.sort_by(|a, b| a.total_cmp(b));
                times.extend(between);
                times.push(last);
                return Some(times);
            }
        }
        let r = model.rate(k, w);
        if r <= 0.0 {
            return None;
        }
        clock += exponential(rng, r);
        if clock > t {
            return None;
        }
        times.push(clock);
        k += 1;
    }
    Some(times)
}

/// Number of children an individual of weight `w` ever has, capped at `limit`.
fn children_available(model: &FitnessModel, w: &Weight, limit: u64) -> u64 {
    let mut k = 0;
    while k < limit && model.rate(k, w) > 0.0 {
        k += 1;
    }
    k
}

/// Searches for a path `u_1 u_2 ...` with `u_i` among the first `M_i`
/// children of `u_{i-1}` and `xi^{(u_i)}(t_i) > M_{i+1}`. Candidates are
/// examined in birth order and the first success is followed.
pub fn greedy_path_witness<R: Rng + ?Sized>(
    model: &FitnessModel,
    plan: &SequencePlan,
    depth_target: usize,
    rng: &mut R,
) -> WitnessResult {
    assert!(depth_target >= 1);
    let budget = plan.time_budget(depth_target);
    let root_w = model.sample_weight(rng);
    let mut available = children_available(model, &root_w, plan.m(1));
    // Offsets of the current candidates relative to their parent; level 1
    // candidates are measured from their own birth.
    let mut offsets: Vec<f64> = vec![0.0; available as usize];
    let mut elapsed_path = 0.0;
    let mut depth = 0;
    let mut levels = Vec::new();
    let mut finish = 0.0;
    for level in 1..=depth_target {
        let t = plan.t(level);
        let next_m = plan.m(level + 1);
        let mut examined = 0;
        let mut found = None;
        for (idx, &offset) in offsets.iter().enumerate().take(available as usize) {
            examined += 1;
            let w = model.sample_weight(rng);
            if let Some(births) = first_births(model, &w, next_m, t, rng) {
                found = Some((idx, offset, births));
                break;
            }
        }
        let success = found.is_some();
        levels.push(LevelLog {
            level,
            available,
            examined,
            success,
        });
        let Some((_, offset, births)) = found else {
            break;
        };
        depth = level;
        elapsed_path += offset;
        finish = *births.last().expect("nonempty");
        available = next_m;
        offsets = births[..next_m as usize].to_vec();
    }
    WitnessResult {
        depth,
        elapsed: elapsed_path + finish,
        budget,
        levels,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplosionVerdict {
    ExplosionSuspected,
    GrowthUnbounded,
    Inconclusive,
}

impl ExplosionVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExplosionVerdict::ExplosionSuspected => "ExplosionSuspected",
            ExplosionVerdict::GrowthUnbounded => "GrowthUnbounded",
            ExplosionVerdict::Inconclusive => "Inconclusive",
        }
    }
}

/// Heuristic thresholds for [`diagnose_explosion`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosisConfig {
    /// Number of consecutive dyadic ratios examined.
    pub levels: usize,
    /// Fitted per-level ratio below which decay counts as geometric.
    pub decay_ratio: f64,
    /// Fitted ratio above which increments count as non-decaying...
    pub flat_ratio: f64,
    /// ...provided the smallest increment in the window is at least this
    /// fraction of the largest.
    pub floor_fraction: f64,
    pub min_entries: usize,
}

impl Default for DiagnosisConfig {
    fn default() -> Self {
        DiagnosisConfig {
            levels: 4,
            decay_ratio: 0.7,
            flat_ratio: 0.9,
            floor_fraction: 0.5,
            min_entries: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnosis {
    pub verdict: ExplosionVerdict,
    /// `(k, tau_{2k} - tau_k)` for dyadic `k`.
    pub increments: Vec<(u64, f64)>,
    /// Geometric per-level ratio fitted on the last window.
    pub fitted_ratio: f64,
    pub rationale: String,
}

/// Classifies the dyadic increments `tau_{2k} - tau_k`, `k = 1, 2, 4, ...`,
/// over the last `levels + 1` of them: a fitted ratio below `decay_ratio`
/// suggests `tau_k` converges; a ratio near 1 with increments bounded below
/// suggests unbounded growth.
pub fn diagnose_explosion(est: &ExplosionEstimate, cfg: &DiagnosisConfig) -> Diagnosis {
    let mut increments = Vec::new();
    let mut k = 1u64;
    while ((2 * k) as usize) < est.tau.len() {
        increments.push((k, est.tau[2 * k as usize] - est.tau[k as usize]));
        k *= 2;
    }
    let inconclusive = |increments: Vec<(u64, f64)>, why: String| Diagnosis {
        verdict: ExplosionVerdict::Inconclusive,
        increments,
        fitted_ratio: f64::NAN,
        rationale: why,
    };
    if est.tau.len() <= cfg.min_entries || increments.len() < cfg.levels + 1 {
        return inconclusive(
            increments,
            format!(
                "need {} dyadic increments and > {} milestones",
                cfg.levels + 1,
                cfg.min_entries
            ),
        );
    }
    let window = &increments[increments.len() - cfg.levels - 1..];
    let logs: Vec<f64> = window.iter().map(|&(_, d)| d.max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, _, _) = linear_fit(&(0..logs.len()).map(|j| j as f64).collect::<Vec<_>>(), &logs);
    let ratio = slope.exp();
    let lo = window.iter().map(|w| w.1).fold(f64::INFINITY, f64::min);
    let hi = window.iter().map(|w| w.1).fold(0.0, f64::max);
    let (verdict, rationale) = if ratio < cfg.decay_ratio {
        (
            ExplosionVerdict::ExplosionSuspected,
            format!(
                "dyadic increments decay with fitted ratio {ratio:.4} < {}",
                cfg.decay_ratio
            ),
        )
    } else if ratio > cfg.flat_ratio && lo >= cfg.floor_fraction * hi {
        (
            ExplosionVerdict::GrowthUnbounded,
            format!(
                "fitted ratio {ratio:.4} > {} and increments bounded below ({lo:.4e} >= {} x {hi:.4e})",
                cfg.flat_ratio, cfg.floor_fraction
            ),
        )
    } else {
        (
            ExplosionVerdict::Inconclusive,
            format!("fitted ratio {ratio:.4}, increment range [{lo:.4e}, {hi:.4e}]"),
        )
    };
    Diagnosis {
        verdict,
        increments,
        fitted_ratio: ratio,
        rationale,
    }
}

/// Least squares `y = a x + b`; returns `(a, b, r^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Fit of `tau_k` against `ln k` over `k >= 2`; returns `(slope, intercept, r^2)`.
pub fn log_fit(est: &ExplosionEstimate) -> (f64, f64, f64) {
    let x: Vec<f64> = (2..est.tau.len()).map(|k| (k as f64).ln()).collect();
    let y: Vec<f64> = est.tau[2..].to_vec();
    linear_fit(&x, &y)
}
