//! Experiment commands behind the `cmjlab` binary.
//!
//! Each command reads a [`Config`], writes its data files into an output
//! directory together with `summary.txt`, a `plot.py` script and a
//! `manifest.txt` listing the SHA-256 of every other file. Replicate `r`
//! draws from stream `r` split from the master seed, so outputs are
//! byte-identical for a fixed seed regardless of thread count.

use std::fmt::{self, Write as _};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::birth::{moment_grid, write_grid_csv, BirthRates, OffspringModel};
use crate::cmj::{
    diagnose_explosion, greedy_path_witness, log_fit, run_until, DiagnosisConfig, Stop, DEFAULT_POPULATION_CAP,
};
use crate::config::{at, parse_model, parse_pair, Config};
use crate::criteria::{
    classify_phase, condensation_sum, linear_tail_test, summability_test, tail_criterion_test, ClassifyConfig,
    CriterionReport, McConfig, MomentOutcome, Phase, PhaseClassification, PointStatus, TailGrid, MIN_SAMPLES,
};
use crate::error::{Error, Result};
use crate::fitness::{FitnessModel, PairSpec};
use crate::plan::SequencePlan;
use crate::rng::{derive_seed, substream};
use crate::stats::median;
use crate::tree::GrowthState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    TreeGrow,
    CmjRun,
    BirthMoments,
    Criterion,
    Classify,
    PhaseSweep,
    Witness,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::TreeGrow,
        Command::CmjRun,
        Command::BirthMoments,
        Command::Criterion,
        Command::Classify,
        Command::PhaseSweep,
        Command::Witness,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::TreeGrow => "tree-grow",
            Command::CmjRun => "cmj-run",
            Command::BirthMoments => "birth-moments",
            Command::Criterion => "criterion",
            Command::Classify => "classify",
            Command::PhaseSweep => "phase-sweep",
            Command::Witness => "witness",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Files written by a command, with their checksums.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    pub files: Vec<(String, String)>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push((name.to_string(), hex::encode(Sha256::digest(bytes))));
        Ok(())
    }

    fn write_with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }
}

/// What a finished command reports back.
#[derive(Debug)]
pub struct RunReport {
    pub summary: String,
    pub files: Vec<(String, String)>,
    pub events: u64,
    pub seconds: f64,
}

/// Key-value summary lines.
#[derive(Default)]
struct Summary(String);

impl Summary {
    fn put(&mut self, key: &str, value: impl fmt::Display) {
        let _ = writeln!(self.0, "{key} = {value}");
    }
}

struct Work {
    summary: Summary,
    events: u64,
}

/// Runs `command`. Config problems surface as [`Error::Config`] before any
/// simulation starts.
pub fn run(command: Command, cfg: &Config, out: &Path) -> Result<RunReport> {
    let start = Instant::now();
    let seed = cfg.seed()?;
    let job = prepare(command, cfg, seed)?;
    cfg.check_all_read()?;
    let mut outputs = Outputs::new(out)?;
    let work = job(&mut outputs)?;
    outputs.write("summary.txt", work.summary.0.as_bytes())?;
    outputs.write("plot.py", plot_script(command).as_bytes())?;
    let seconds = start.elapsed().as_secs_f64();
    let manifest = render_manifest(command, cfg, &outputs.files, work.events, seconds);
    fs::write(out.join("manifest.txt"), manifest)?;
    Ok(RunReport {
        summary: work.summary.0,
        files: outputs.files,
        events: work.events,
        seconds,
    })
}

type Job<'a> = Box<dyn FnOnce(&mut Outputs) -> Result<Work> + 'a>;

fn prepare<'a>(command: Command, cfg: &'a Config, seed: u64) -> Result<Job<'a>> {
    match command {
        Command::TreeGrow => tree_grow(cfg, seed),
        Command::CmjRun => cmj_run(cfg, seed),
        Command::BirthMoments => birth_moments(cfg, seed),
        Command::Criterion => criterion(cfg, seed),
        Command::Classify => classify(cfg, seed),
        Command::PhaseSweep => phase_sweep(cfg, seed),
        Command::Witness => witness(cfg, seed),
    }
}

fn render_manifest(command: Command, cfg: &Config, files: &[(String, String)], events: u64, seconds: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "command = {command}");
    let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "wall_clock_seconds = {seconds:.3}");
    let _ = writeln!(s, "events = {events}");
    let _ = writeln!(s, "\n[config]");
    s.push_str(&cfg.to_string());
    let _ = writeln!(s, "\n[files]");
    for (name, sum) in files {
        let _ = writeln!(s, "{sum}  {name}");
    }
    s
}

/// Recomputes every checksum listed in `dir/manifest.txt`.
pub fn verify_manifest(dir: &Path) -> Result<usize> {
    let text = fs::read_to_string(dir.join("manifest.txt"))?;
    let listed = text
        .split("[files]")
        .nth(1)
        .ok_or_else(|| Error::invalid("manifest has no [files] section"))?;
    let mut n = 0;
    for line in listed.lines().filter(|l| !l.trim().is_empty()) {
        let (sum, name) = line
            .split_once("  ")
            .ok_or_else(|| Error::invalid(format!("bad manifest line `{line}`")))?;
        let bytes = fs::read(dir.join(name))?;
        if hex::encode(Sha256::digest(&bytes)) != sum {
            return Err(Error::invalid(format!("checksum mismatch for {name}")));
        }
        n += 1;
    }
    Ok(n)
}

fn replicates(cfg: &Config, default: u64) -> Result<u64> {
    let r = cfg.value_or("replicates", default)?;
    if r == 0 {
        return Err(Error::config("replicates", "must be at least 1"));
    }
    Ok(r)
}

fn linear_pair(cfg: &Config) -> Result<PairSpec> {
    let kind = cfg.get("fitness.kind").unwrap_or("linear");
    if kind != "linear" {
        return Err(Error::config("fitness.kind", "this command needs linear fitness"));
    }
    let pair = parse_pair(cfg)?;
    at("weight", FitnessModel::linear(pair.clone()))?;
    Ok(pair)
}

fn plan_from(cfg: &Config, default_i_max: usize) -> Result<SequencePlan> {
    let eps = cfg.value_or("plan.epsilon", 1.0)?;
    let i_max = cfg.value_or("plan.i_max", default_i_max)?;
    at("plan", SequencePlan::standard(eps, i_max))
}

fn tail_grid_from(cfg: &Config, default: TailGrid) -> Result<TailGrid> {
    let grid = TailGrid {
        epsilon: cfg.value_or("tail.epsilon", default.epsilon)?,
        epsilon_prime: cfg.value_or("tail.epsilon_prime", default.epsilon_prime)?,
        x0: cfg.value_or("tail.x0", default.x0)?,
        t_grid: cfg.list_or("tail.t", default.t_grid)?,
        x_grid: cfg.list_or("tail.x", default.x_grid)?,
    };
    at("tail", grid.validate())?;
    Ok(grid)
}

fn tree_grow(cfg: &Config, seed: u64) -> Result<Job<'_>> {
    let model = parse_model(cfg)?;
    let n: u64 = cfg.value_or("tree.n", 10_000)?;
    if n == 0 {
        return Err(Error::config("tree.n", "must be at least 1"));
    }
    let reps = replicates(cfg, 1)?;
    let threshold: Option<f64> = cfg.value("tree.threshold")?;
    Ok(Box::new(move |out| {
        let results: Vec<_> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = substream(seed, r);
                let mut state = GrowthState::new(model.clone(), &mut rng);
                let steps = state.grow(n - 1, &mut rng);
                let halted = state.halted();
                let tree = state.into_tree();
                let stats = (tree.len(), tree.max_out_degree(), tree.height(), halted, steps);
                (stats, (r == 0).then_some(tree))
            })
            .collect();
        let first = results[0].1.as_ref().expect("replicate 0 keeps its tree");
        out.write_with("tree.csv", |w| first.write_csv(w))?;
        out.write_with("degree_histogram.csv", |w| first.degree_histogram().write_csv(w))?;
        out.write_with("edge_mass.csv", |w| {
            writeln!(w, "cap,mass")?;
            let mut cap = 0;
            loop {
                writeln!(w, "{cap},{}", first.edge_mass_below(cap))?;
                if cap >= first.max_out_degree() {
                    break;
                }
                cap = if cap == 0 { 1 } else { cap * 2 };
            }
            Ok(())
        })?;
        let mut ratios = Vec::new();
        let mut events = 0;
        out.write_with("replicates.csv", |w| {
            writeln!(w, "replicate,nodes,max_degree,max_degree_ratio,height,halted")?;
            for (r, ((nodes, maxd, height, halted, steps), _)) in results.iter().enumerate() {
                let ratio = *maxd as f64 / *nodes as f64;
                ratios.push(ratio);
                events += steps;
                writeln!(w, "{r},{nodes},{maxd},{ratio},{height},{halted}")?;
            }
            Ok(())
        })?;
        let mut s = Summary::default();
        s.put("nodes", n);
        s.put("replicates", reps);
        s.put("max_degree", first.max_out_degree());
        s.put("max_degree_ratio", ratios[0]);
        s.put("height", first.height());
        let med = median(&mut ratios);
        s.put("median_max_degree_ratio", med);
        if let Some(th) = threshold {
            s.put("threshold", th);
            s.put("median_exceeds_threshold", med > th);
        }
        Ok(Work { summary: s, events })
    }))
}

fn cmj_run(cfg: &Config, seed: u64) -> Result<Job<'_>> {
    let model = parse_model(cfg)?;
    let horizon: Option<f64> = cfg.value("cmj.horizon")?;
    let population: Option<u64> = cfg.value("cmj.population")?;
    let stop = match (horizon, population) {
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "cmj.horizon",
                "give either cmj.horizon or cmj.population",
            ))
        }
        (Some(t), None) if t.is_finite() && t >= 0.0 => Stop::Time(t),
        (Some(_), None) => return Err(Error::config("cmj.horizon", "must be finite and >= 0")),
        (None, p) => Stop::Population(p.unwrap_or(10_000).max(1)),
    };
    let cap = cfg.value_or("cmj.cap", DEFAULT_POPULATION_CAP)?;
    let reps = replicates(cfg, 1)?;
    Ok(Box::new(move |out| {
        let diag_cfg = DiagnosisConfig::default();
        let runs: Vec<_> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = substream(seed, r);
                let run = run_until(&model, &mut rng, stop, cap);
                let diag = diagnose_explosion(&run.estimate, &diag_cfg);
                let fit = (run.estimate.tau.len() > 3).then(|| log_fit(&run.estimate));
                let keep = (r == 0).then_some(run.clone());
                (
                    run.estimate.population(),
                    run.events,
                    run.estimate.horizon,
                    run.estimate.saturated,
                    diag,
                    fit,
                    keep,
                )
            })
            .collect();
        let first = runs[0].6.as_ref().expect("replicate 0 keeps its run");
        out.write_with("genealogy.csv", |w| first.write_genealogy_csv(w))?;
        out.write_with("tau.csv", |w| first.estimate.write_csv(w))?;
        out.write_with("increments.csv", |w| {
            writeln!(w, "k,increment")?;
            for (k, d) in &runs[0].4.increments {
                writeln!(w, "{k},{d}")?;
            }
            Ok(())
        })?;
        let mut events = 0;
        out.write_with("replicates.csv", |w| {
            writeln!(
                w,
                "replicate,population,events,horizon,saturated,verdict,fitted_ratio,log_slope,log_r2"
            )?;
            for (r, (pop, ev, hor, sat, diag, fit, _)) in runs.iter().enumerate() {
                events += ev;
                let (slope, r2) = fit.map_or((String::new(), String::new()), |f| (f.0.to_string(), f.2.to_string()));
                writeln!(
                    w,
                    "{r},{pop},{ev},{hor},{sat},{},{},{slope},{r2}",
                    diag.verdict.as_str(),
                    diag.fitted_ratio
                )?;
            }
            Ok(())
        })?;
        let mut s = Summary::default();
        s.put("replicates", reps);
        s.put("population", runs[0].0);
        s.put("horizon", runs[0].2);
        s.put("saturated", runs[0].3);
        s.put("verdict", runs[0].4.verdict.as_str());
        s.put("rationale", &runs[0].4.rationale);
        if let Some((slope, _, r2)) = runs[0].5 {
            s.put("log_fit_slope", slope);
            s.put("log_fit_r2", r2);
        }
        for v in ["ExplosionSuspected", "GrowthUnbounded", "Inconclusive"] {
            let count = runs.iter().filter(|x| x.4.verdict.as_str() == v).count();
            s.put(&format!("replicates_{v}"), count);
        }
        Ok(Work { summary: s, events })
    }))
}

fn birth_moments(cfg: &Config, seed: u64) -> Result<Job<'_>> {
    let c1s: Vec<f64> = cfg.list_or("birth.c1", vec![0.0, 0.5, 1.0, 2.0])?;
    let c2s: Vec<f64> = cfg.list_or("birth.c2", vec![0.5, 1.0, 2.0])?;
    let ts: Vec<f64> = cfg.list_or("birth.t", vec![0.25, 0.7, 1.5])?;
    let zs: Vec<f64> = cfg.list_or("birth.z", vec![0.0, 0.3, 0.7, 1.0])?;
    let nsamples = cfg.value_or("birth.samples", 100_000u64)?;
    if nsamples < 2 {
        return Err(Error::config("birth.samples", "must be at least 2"));
    }
    if let Some(z) = zs.iter().find(|z| !(0.0..=1.0).contains(*z)) {
        return Err(Error::config("birth.z", format!("{z} is outside [0, 1]")));
    }
    if let Some(t) = ts.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::config("birth.t", format!("{t} is not a finite time")));
    }
    let grid_points = (c1s.len() * c2s.len() * ts.len()) as u64;
    for &c1 in &c1s {
        for &c2 in &c2s {
            at("birth", BirthRates::new(c1, c2))?;
        }
    }
    Ok(Box::new(move |out| {
        let rows = moment_grid(&c1s, &c2s, &ts, &zs, nsamples, seed)?;
        out.write_with("moments.csv", |w| write_grid_csv(&rows, w))?;
        let mut s = Summary::default();
        s.put("rows", rows.len());
        s.put("samples_per_point", nsamples);
        let worst = rows.iter().map(|r| r.z_score()).fold(0.0, f64::max);
        s.put("max_abs_z", worst);
        s.put("rows_beyond_4se", rows.iter().filter(|r| r.z_score() > 4.0).count());
        for r in rows.iter().filter(|r| r.stat == "mean") {
            s.put(
                &format!("mean[c1={},c2={},t={}]", r.c1, r.c2, r.t),
                format!("analytic {} mc {} se {}", r.analytic, r.mc, r.se),
            );
        }
        Ok(Work {
            summary: s,
            events: grid_points * nsamples,
        })
    }))
}

fn write_report(out: &mut Outputs, rep: &CriterionReport) -> Result<()> {
    out.write_with("report.txt", |w| rep.write_text(w))?;
    if !rep.terms.is_empty() {
        out.write_with("terms.csv", |w| rep.write_terms_csv(w))?;
    }
    if !rep.points.is_empty() {
        out.write_with("points.csv", |w| rep.write_points_csv(w))?;
    }
    Ok(())
}

fn criterion(cfg: &Config, seed: u64) -> Result<Job<'_>> {
    let test = cfg.get("criterion.test").unwrap_or("summability").to_string();
    let nsamples = cfg.value_or("criterion.samples", 10_000u64)?;
    let mc = McConfig {
        nsamples,
        seed,
        use_exact: cfg.value_or("criterion.exact", true)?,
    };
    let default_grid = TailGrid::standard(0.5);
    if test != "condensation" && nsamples < MIN_SAMPLES {
        return Err(Error::config(
            "criterion.samples",
            format!("must be at least {MIN_SAMPLES}"),
        ));
    }
    match test.as_str() {
        "summability" => {
            let model = OffspringModel::Mixed(parse_model(cfg)?);
            let plan = plan_from(cfg, 20)?;
            Ok(Box::new(move |out| {
                let rep = summability_test(&model, &plan, &mc)?;
                write_report(out, &rep)?;
                Ok(report_work(&rep, plan.i_max as u64 * nsamples))
            }))
        }
        "tail" => {
            let model = OffspringModel::Mixed(parse_model(cfg)?);
            let grid = tail_grid_from(cfg, default_grid)?;
            Ok(Box::new(move |out| {
                let rep = tail_criterion_test(&model, &grid, &mc)?;
                write_report(out, &rep)?;
                Ok(report_work(&rep, rep.points.len() as u64 * nsamples))
            }))
        }
        "linear-tail" => {
            let pair = linear_pair(cfg)?;
            let grid = tail_grid_from(cfg, default_grid)?;
            Ok(Box::new(move |out| {
                let rep = linear_tail_test(&pair, &grid, &mc)?;
                write_report(out, &rep)?;
                Ok(report_work(&rep, rep.points.len() as u64 * nsamples))
            }))
        }
        "condensation" => {
            let model = parse_model(cfg)?;
            let lambda = cfg.require("condensation.lambda")?;
            let j_max = cfg.value_or("condensation.j_max", 1000usize)?;
            if !(lambda > 0.0 && f64::is_finite(lambda)) {
                return Err(Error::config("condensation.lambda", "must be positive"));
            }
            if j_max == 0 || nsamples < 2 {
                return Err(Error::config(
                    "condensation.j_max",
                    "needs j_max >= 1 and at least 2 samples",
                ));
            }
            Ok(Box::new(move |out| {
                let sum = condensation_sum(&model, lambda, j_max, nsamples, seed)?;
                out.write_with("condensation.csv", |w| sum.write_csv(w))?;
                let (est, se) = sum.total();
                let mut s = Summary::default();
                s.put("test", "condensation");
                s.put("lambda", lambda);
                s.put("j_max", j_max);
                s.put("samples", nsamples);
                s.put("sum", est);
                s.put("sum_se", se);
                Ok(Work {
                    summary: s,
                    events: nsamples * j_max as u64,
                })
            }))
        }
        other => Err(Error::config("criterion.test", format!("unknown test `{other}`"))),
    }
}

fn report_work(rep: &CriterionReport, events: u64) -> Work {
    let mut s = Summary::default();
    s.put("test", rep.test);
    s.put("verdict", rep.verdict);
    for n in &rep.notes {
        s.put("note", n);
    }
    if let Some(&(lo, est, hi)) = rep.partial_sums.last() {
        s.put("partial_sum", est);
        s.put("partial_sum_lower", lo);
        s.put("partial_sum_upper", hi);
    }
    if !rep.points.is_empty() {
        for status in [PointStatus::Pass, PointStatus::Fail, PointStatus::Unresolved] {
            let n = rep.points.iter().filter(|p| p.status == status).count();
            s.put(&format!("points_{}", status.as_str()), n);
        }
    }
    Work { summary: s, events }
}

fn classify_config(cfg: &Config, seed: u64) -> Result<ClassifyConfig> {
    let base = ClassifyConfig::default();
    let nsamples = cfg.value_or("classify.samples", base.mc.nsamples)?;
    if nsamples < MIN_SAMPLES {
        return Err(Error::config(
            "classify.samples",
            format!("must be at least {MIN_SAMPLES}"),
        ));
    }
    let mut c = ClassifyConfig {
        moment_t: cfg.list_or("classify.t", base.moment_t.clone())?,
        tail: tail_grid_from(cfg, base.tail.clone())?,
        ..base
    };
    c.moment.nsamples = nsamples;
    c.moment.seed = derive_seed(seed, 0);
    c.mc = McConfig::new(nsamples, derive_seed(seed, 1));
    if c.moment_t.iter().any(|t| !(t.is_finite() && *t > 0.0)) || c.moment_t.is_empty() {
        return Err(Error::config("classify.t", "needs positive times"));
    }
    Ok(c)
}

fn write_classification(out: &mut Outputs, c: &PhaseClassification) -> Result<()> {
    out.write_with("moments.csv", |w| {
        writeln!(w, "t,outcome,value,lower,upper,method,low_confidence")?;
        for (t, m) in &c.moments {
            match m {
                MomentOutcome::Finite {
                    value,
                    lower,
                    upper,
                    method,
                } => writeln!(w, "{t},Finite,{value},{lower},{upper},{method},false")?,
                MomentOutcome::DivergenceSuspected { low_confidence, .. } => {
                    writeln!(w, "{t},DivergenceSuspected,,,,,{low_confidence}")?
                }
            }
        }
        Ok(())
    })?;
    if let Some(rep) = &c.tail {
        out.write_with("points.csv", |w| rep.write_points_csv(w))?;
    }
    Ok(())
}

fn classify(cfg: &Config, seed: u64) -> Result<Job<'_>> {
    let pair = linear_pair(cfg)?;
    let ccfg = classify_config(cfg, seed)?;
    Ok(Box::new(move |out| {
        let c = at("weight", classify_phase(&pair, &ccfg))?;
        write_classification(out, &c)?;
        let mut s = Summary::default();
        s.put("phase", c.phase);
        s.put("rationale", &c.rationale);
        Ok(Work { summary: s, events: 0 })
    }))
}

fn csv_safe(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

fn phase_sweep(cfg: &Config, seed: u64) -> Result<Job<'_>> {
    let key: String = cfg.require("sweep.key")?;
    if !(key.starts_with("weight.") || key.starts_with("fitness.")) {
        return Err(Error::config("sweep.key", "must name a fitness.* or weight.* key"));
    }
    let values: Vec<String> = cfg
        .list("sweep.values")?
        .ok_or_else(|| Error::config("sweep.values", "missing"))?;
    let ccfg = classify_config(cfg, seed)?;
    cfg.mark_read("fitness.");
    cfg.mark_read("weight.");
    let base = cfg.clone();
    Ok(Box::new(move |out| {
        let mut rows = Vec::new();
        for (i, value) in values.iter().enumerate() {
            let mut point = base.clone();
            point.set(key.clone(), value);
            let point_cfg = ClassifyConfig {
                moment: crate::criteria::MomentConfig {
                    seed: derive_seed(ccfg.moment.seed, i as u64),
                    ..ccfg.moment
                },
                mc: McConfig::new(ccfg.mc.nsamples, derive_seed(ccfg.mc.seed, i as u64)),
                ..ccfg.clone()
            };
            let outcome = linear_pair(&point).and_then(|pair| classify_phase(&pair, &point_cfg));
            rows.push((value.clone(), outcome));
        }
        let mut counts = [0usize; 5];
        out.write_with("phase_diagram.csv", |w| {
            writeln!(
                w,
                "value,phase,finite_moment_t,finite_moment_value,tail_verdict,tail_pass,tail_fail,tail_unresolved,error"
            )?;
            for (value, outcome) in &rows {
                match outcome {
                    Ok(c) => {
                        counts[c.phase as usize] += 1;
                        let finite = c.moments.iter().find_map(|(t, m)| match m {
                            MomentOutcome::Finite { value, .. } => Some((*t, *value)),
                            _ => None,
                        });
                        let (ft, fv) =
                            finite.map_or((String::new(), String::new()), |(t, v)| (t.to_string(), v.to_string()));
                        let (tv, pass, fail, unres) = match &c.tail {
                            Some(rep) => {
                                let n = |st| rep.points.iter().filter(|p| p.status == st).count().to_string();
                                (
                                    rep.verdict.to_string(),
                                    n(PointStatus::Pass),
                                    n(PointStatus::Fail),
                                    n(PointStatus::Unresolved),
                                )
                            }
                            None => Default::default(),
                        };
                        writeln!(w, "{value},{},{ft},{fv},{tv},{pass},{fail},{unres},", c.phase)?;
                    }
                    Err(e) => {
                        counts[4] += 1;
                        writeln!(w, "{value},,,,,,,,{}", csv_safe(&e.to_string()))?;
                    }
                }
            }
            Ok(())
        })?;
        let mut s = Summary::default();
        s.put("sweep_key", &key);
        s.put("points", rows.len());
        for phase in [
            Phase::EveryNodeMaxDegree,
            Phase::LocallyFiniteUniquePath,
            Phase::SingleInfiniteDegreeNode,
            Phase::Inconclusive,
        ] {
            s.put(&format!("points_{phase}"), counts[phase as usize]);
        }
        s.put("points_failed", counts[4]);
        Ok(Work { summary: s, events: 0 })
    }))
}

fn witness(cfg: &Config, seed: u64) -> Result<Job<'_>> {
    let model = parse_model(cfg)?;
    let depth: usize = cfg.value_or("witness.depth", 10)?;
    if depth == 0 {
        return Err(Error::config("witness.depth", "must be at least 1"));
    }
    let plan = plan_from(cfg, depth)?;
    if plan.i_max < depth {
        return Err(Error::config("plan.i_max", "must be at least witness.depth"));
    }
    let reps = replicates(cfg, 200)?;
    Ok(Box::new(move |out| {
        let results: Vec<_> = (0..reps)
            .into_par_iter()
            .map(|r| greedy_path_witness(&model, &plan, depth, &mut substream(seed, r)))
            .collect();
        out.write_with("witness.csv", |w| {
            writeln!(w, "replicate,depth,elapsed,budget,within_budget")?;
            for (r, x) in results.iter().enumerate() {
                writeln!(
                    w,
                    "{r},{},{},{},{}",
                    x.depth,
                    x.elapsed,
                    x.budget,
                    x.elapsed <= x.budget
                )?;
            }
            Ok(())
        })?;
        out.write_with("levels.csv", |w| {
            writeln!(w, "replicate,level,available,examined,success")?;
            for (r, x) in results.iter().enumerate() {
                for l in &x.levels {
                    writeln!(w, "{r},{},{},{},{}", l.level, l.available, l.examined, l.success)?;
                }
            }
            Ok(())
        })?;
        let n = results.len() as f64;
        let mut s = Summary::default();
        s.put("replicates", reps);
        s.put("depth_target", depth);
        s.put("budget", plan.time_budget(depth));
        s.put(
            "fraction_depth_at_most_1",
            results.iter().filter(|x| x.depth <= 1).count() as f64 / n,
        );
        s.put(
            "fraction_reached_target",
            results.iter().filter(|x| x.depth >= depth).count() as f64 / n,
        );
        s.put("all_within_budget", results.iter().all(|x| x.elapsed <= x.budget));
        let events = results
            .iter()
            .map(|x| x.levels.iter().map(|l| l.examined).sum::<u64>())
            .sum();
        Ok(Work { summary: s, events })
    }))
}

fn plot_script(command: Command) -> String {
    let body = match command {
        Command::TreeGrow => {
            "rows = read('degree_histogram.csv')\n\
             k = [int(r['k']) for r in rows if int(r['count']) > 0 and int(r['k']) > 0]\n\
             n = [int(r['count']) for r in rows if int(r['count']) > 0 and int(r['k']) > 0]\n\
             plt.loglog(k, n, 'o', ms=3)\n\
             plt.xlabel('out-degree k'); plt.ylabel('N_k')\n"
        }
        Command::CmjRun => {
            "rows = read('tau.csv')[1:]\n\
             plt.semilogx([int(r['k']) for r in rows], [float(r['tau_k']) for r in rows])\n\
             plt.xlabel('population k'); plt.ylabel('tau_k')\n"
        }
        Command::BirthMoments => {
            "rows = [r for r in read('moments.csv') if r['stat'] == 'mean']\n\
             a = [float(r['analytic']) for r in rows]\n\
             m = [float(r['mc']) for r in rows]\n\
             e = [4 * float(r['se']) for r in rows]\n\
             plt.errorbar(a, m, yerr=e, fmt='o', ms=3)\n\
             plt.plot([0, max(a)], [0, max(a)], 'k--')\n\
             plt.xlabel('closed-form mean'); plt.ylabel('simulated mean')\n"
        }
        Command::Criterion => {
            "if os.path.exists('terms.csv'):\n\
             \x20   rows = read('terms.csv')\n\
             \x20   i = [int(r['i']) for r in rows]\n\
             \x20   plt.plot(i, [float(r['partial']) for r in rows], 'k-')\n\
             \x20   plt.fill_between(i, [float(r['partial_lo']) for r in rows], [float(r['partial_hi']) for r in rows], alpha=0.3)\n\
             \x20   plt.xlabel('i'); plt.ylabel('partial sum')\n\
             elif os.path.exists('points.csv'):\n\
             \x20   rows = read('points.csv')\n\
             \x20   plt.loglog([float(r['threshold']) for r in rows], [max(float(r['p']), 1e-300) for r in rows], 'o')\n\
             \x20   plt.xlabel('threshold'); plt.ylabel('P(X > x)')\n\
             else:\n\
             \x20   rows = read('condensation.csv')\n\
             \x20   plt.plot([int(r['j']) for r in rows], [float(r['partial']) for r in rows])\n\
             \x20   plt.xlabel('j'); plt.ylabel('partial sum')\n"
        }
        Command::Classify => {
            "rows = read('points.csv') if os.path.exists('points.csv') else []\n\
             if rows:\n\
             \x20   plt.loglog([float(r['threshold']) for r in rows], [max(float(r['p']), 1e-300) for r in rows], 'o')\n\
             \x20   plt.xlabel('threshold'); plt.ylabel('P(Y > x)')\n"
        }
        Command::PhaseSweep => {
            "rows = read('phase_diagram.csv')\n\
             names = sorted({r['phase'] for r in rows})\n\
             plt.plot([r['value'] for r in rows], [names.index(r['phase']) for r in rows], 'o')\n\
             plt.yticks(range(len(names)), names)\n\
             plt.xlabel('swept value')\n"
        }
        Command::Witness => {
            "rows = read('witness.csv')\n\
             plt.hist([int(r['depth']) for r in rows], bins=range(0, 2 + max(int(r['depth']) for r in rows)))\n\
             plt.xlabel('witness depth'); plt.ylabel('replicates')\n"
        }
    };
    format!(
        "import csv, os, sys\n\
         import matplotlib\n\
         matplotlib.use('Agg')\n\
         import matplotlib.pyplot as plt\n\
         \n\
         os.chdir(os.path.dirname(os.path.abspath(__file__)))\n\
         \n\
         def read(name):\n\
         \x20   with open(name, newline='') as f:\n\
         \x20       return list(csv.DictReader(f))\n\
         \n\
         {body}\
         plt.title('{command}')\n\
         plt.savefig(sys.argv[1] if len(sys.argv) > 1 else '{command}.png', dpi=120)\n"
    )
}
