#![allow(dead_code)]

use std::collections::BTreeMap;

/// Exact law of the parent vector `(p_1, ..., p_{n-1})` of an `n`-node tree
/// grown with weight-free rates `f(outdeg)`, by enumerating every history.
pub fn shape_law(n: usize, f: &dyn Fn(u64) -> f64) -> BTreeMap<Vec<usize>, f64> {
    let mut law = BTreeMap::new();
    fn go(
        parents: &mut Vec<usize>,
        outdeg: &mut Vec<u64>,
        prob: f64,
        n: usize,
        f: &dyn Fn(u64) -> f64,
        law: &mut BTreeMap<Vec<usize>, f64>,
    ) {
        if outdeg.len() == n {
            *law.entry(parents.clone()).or_insert(0.0) += prob;
            return;
        }
        let z: f64 = outdeg.iter().map(|&d| f(d)).sum();
        for j in 0..outdeg.len() {
            let w = f(outdeg[j]) / z;
            if w == 0.0 {
                continue;
            }
            parents.push(j);
            outdeg[j] += 1;
            outdeg.push(0);
            go(parents, outdeg, prob * w, n, f, law);
            outdeg.pop();
            outdeg[j] -= 1;
            parents.pop();
        }
    }
    go(&mut Vec::new(), &mut vec![0], 1.0, n, f, &mut law);
    law
}

/// Counts of each shape in `law` order, plus the matching probabilities.
pub fn tally(law: &BTreeMap<Vec<usize>, f64>, draws: impl IntoIterator<Item = Vec<usize>>) -> (Vec<u64>, Vec<f64>) {
    let index: BTreeMap<&Vec<usize>, usize> = law.keys().enumerate().map(|(i, k)| (k, i)).collect();
    let mut counts = vec![0u64; law.len()];
    for d in draws {
        counts[*index.get(&d).expect("shape outside the support")] += 1;
    }
    (counts, law.values().copied().collect())
}

/// One small, fast run per CLI command, with every CSV it should write and
/// that file's header.
pub struct Case {
    pub name: &'static str,
    pub command: cmjlab::harness::Command,
    pub config: &'static str,
    pub csvs: &'static [(&'static str, &'static str)],
}

pub fn cases() -> Vec<Case> {
    use cmjlab::harness::Command::*;
    vec![
        Case {
            name: "tree-grow",
            command: TreeGrow,
            config: "seed = 3\nweight.v.law = exponential\ntree.n = 2000\nreplicates = 3\ntree.threshold = 0.05\n",
            csvs: &[
                ("tree.csv", "node,parent,outdeg,weight_u,weight_v,birth_time"),
                ("degree_histogram.csv", "k,count"),
                ("edge_mass.csv", "cap,mass"),
                ("replicates.csv", "replicate,nodes,max_degree,max_degree_ratio,height,halted"),
            ],
        },
        Case {
            name: "cmj-run",
            command: CmjRun,
            config: "seed = 3\nfitness.kind = yule\ncmj.population = 500\nreplicates = 2\n",
            csvs: &[
                ("genealogy.csv", "id,parent,birth_time,weight_u,weight_v"),
                ("tau.csv", "k,tau_k"),
                ("increments.csv", "k,increment"),
                (
                    "replicates.csv",
                    "replicate,population,events,horizon,saturated,verdict,fitted_ratio,log_slope,log_r2",
                ),
            ],
        },
        Case {
            name: "birth-moments",
            command: BirthMoments,
            config: "seed = 3\nbirth.c1 = 0, 1\nbirth.c2 = 1\nbirth.t = 0.5\nbirth.z = 0.5\nbirth.samples = 2000\n",
            csvs: &[("moments.csv", "c1,c2,t,stat,analytic,mc,se")],
        },
        Case {
            name: "criterion-summability",
            command: Criterion,
            config: "seed = 3\nweight.v.law = pareto\nweight.v.shape = 0.5\ncriterion.test = summability\nplan.i_max = 8\n",
            csvs: &[(
                "terms.csv",
                "i,t,m,m_next,q,q_lo,q_hi,term,term_lo,term_hi,partial_lo,partial,partial_hi,resolved,method",
            )],
        },
        Case {
            name: "criterion-tail",
            command: Criterion,
            config: "seed = 3\nweight.v.law = log-pareto-tail\nweight.v.nu = 1\nweight.v.x0 = 8\n\
                     criterion.test = tail\ncriterion.samples = 10000\ncriterion.exact = false\ntail.x = 10, 100\n",
            csvs: &[("points.csv", "t,x,threshold,p,p_lo,p_hi,status,method")],
        },
        Case {
            name: "criterion-condensation",
            command: Criterion,
            config: "seed = 3\nfitness.kind = yule\ncriterion.test = condensation\ncondensation.lambda = 2\n\
                     condensation.j_max = 50\ncriterion.samples = 100\n",
            csvs: &[("condensation.csv", "j,term,term_se,partial,partial_se")],
        },
        Case {
            name: "classify",
            command: Classify,
            config: "seed = 3\nweight.v.law = log-pareto-tail\nweight.v.nu = 1\nweight.v.x0 = 8\nclassify.samples = 20000\n",
            csvs: &[
                ("moments.csv", "t,outcome,value,lower,upper,method,low_confidence"),
                ("points.csv", "t,x,threshold,p,p_lo,p_hi,status,method"),
            ],
        },
        Case {
            name: "phase-sweep",
            command: PhaseSweep,
            config: "seed = 3\nweight.v.law = pareto\nweight.v.shape = 1\nsweep.key = weight.v.shape\n\
                     sweep.values = 0.5, 1.5, -1\nclassify.samples = 20000\n",
            csvs: &[(
                "phase_diagram.csv",
                "value,phase,finite_moment_t,finite_moment_value,tail_verdict,tail_pass,tail_fail,tail_unresolved,error",
            )],
        },
        Case {
            name: "witness",
            command: Witness,
            config: "seed = 3\nweight.v.law = point\nweight.v.value = 1\nreplicates = 20\nwitness.depth = 4\nplan.i_max = 6\n",
            csvs: &[
                ("witness.csv", "replicate,depth,elapsed,budget,within_budget"),
                ("levels.csv", "replicate,level,available,examined,success"),
            ],
        },
    ]
}
