//! Sequential growth of recursive trees with fitness and their structural
//! statistics.
//!
//! Node `0` is the root. Step `n` inserts node `n`, so a tree with `m` nodes
//! has `m - 1` edges. At each step the parent of the new node is drawn with
//! probability `f(outdeg(j), W_j) / Z`, where `Z` sums the fitness of every
//! existing node; growth stops for good once `Z = 0`.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::fitness::{FitnessModel, Weight};
use crate::sampler::SumTree;

/// Steps between exact recomputations of the partition function.
pub const RESYNC_INTERVAL: u64 = 1 << 16;

/// Arena-style increasing tree; `parent[i] < i` for every non-root node.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveTree {
    parent: Vec<usize>,
    outdeg: Vec<u64>,
    weight: Vec<Weight>,
    birth_time: Option<Vec<f64>>,
}

impl RecursiveTree {
    pub fn with_root(weight: Weight) -> Self {
        RecursiveTree {
            parent: vec![0],
            outdeg: vec![0],
            weight: vec![weight],
            birth_time: None,
        }
    }

    /// Root with a recorded birth time of zero.
    pub fn with_timed_root(weight: Weight) -> Self {
        let mut tree = Self::with_root(weight);
        tree.birth_time = Some(vec![0.0]);
        tree
    }

    /// Builds a tree from a parent array; `parents[i - 1]` is the parent of node `i`.
    pub fn from_parents(parents: &[usize], weight: Weight) -> Result<Self> {
        let mut tree = Self::with_root(weight);
        for (i, &p) in parents.iter().enumerate() {
            if p > i {
                return Err(Error::invalid(format!("parent {p} of node {} is not older", i + 1)));
            }
            tree.attach(p, weight);
        }
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.len() - 1
    }

    /// Parent of node `i`, `None` for the root.
    pub fn parent(&self, i: usize) -> Option<usize> {
        (i > 0).then(|| self.parent[i])
    }

    pub fn parents(&self) -> &[usize] {
        &self.parent[1..]
    }

    pub fn outdeg(&self, i: usize) -> u64 {
        self.outdeg[i]
    }

    pub fn outdegrees(&self) -> &[u64] {
        &self.outdeg
    }

    pub fn weight(&self, i: usize) -> &Weight {
        &self.weight[i]
    }

    pub fn birth_times(&self) -> Option<&[f64]> {
        self.birth_time.as_deref()
    }

    /// Appends a new node under `parent` and returns its index.
    pub fn attach(&mut self, parent: usize, weight: Weight) -> usize {
        assert!(parent < self.len());
        assert!(self.birth_time.is_none(), "timed tree needs attach_at");
        self.outdeg[parent] += 1;
        self.parent.push(parent);
        self.outdeg.push(0);
        self.weight.push(weight);
        self.len() - 1
    }

    pub fn attach_at(&mut self, parent: usize, weight: Weight, time: f64) -> usize {
        assert!(parent < self.len());
        let times = self.birth_time.as_mut().expect("untimed tree needs attach");
        times.push(time);
        self.outdeg[parent] += 1;
        self.parent.push(parent);
        self.outdeg.push(0);
        self.weight.push(weight);
        self.len() - 1
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.outdeg.len() != n || self.weight.len() != n {
            return Err(Error::invalid("array lengths disagree"));
        }
        let mut counted = vec![0u64; n];
        for i in 1..n {
            let p = self.parent[i];
            if p >= i {
                return Err(Error::invalid(format!("parent[{i}] = {p} is not older")));
            }
            counted[p] += 1;
        }
        if counted != self.outdeg {
            return Err(Error::invalid("out-degrees disagree with parent links"));
        }
        if self.outdeg.iter().sum::<u64>() != (n - 1) as u64 {
            return Err(Error::invalid("degree sum differs from edge count"));
        }
        if let Some(times) = &self.birth_time {
            if times.len() != n {
                return Err(Error::invalid("birth time length mismatch"));
            }
            for i in 1..n {
                if times[i] < times[self.parent[i]] {
                    return Err(Error::invalid(format!("node {i} born before its parent")));
                }
            }
        }
        Ok(())
    }

    pub fn degree_histogram(&self) -> DegreeHistogram {
        let mut counts = BTreeMap::new();
        for &d in &self.outdeg {
            *counts.entry(d).or_insert(0u64) += 1;
        }
        DegreeHistogram { counts }
    }

    pub fn max_out_degree(&self) -> u64 {
        self.outdeg.iter().copied().max().unwrap_or(0)
    }

    /// Length of the longest root-to-leaf path.
    pub fn height(&self) -> u64 {
        let mut depth = vec![0u64; self.len()];
        let mut best = 0;
        for i in 1..self.len() {
            depth[i] = depth[self.parent[i]] + 1;
            best = best.max(depth[i]);
        }
        best
    }

    /// `sum_{k <= cap} k N_k / n`: edge mass held by nodes of degree at most `cap`.
    pub fn edge_mass_below(&self, cap: u64) -> f64 {
        let mass: u64 = self.outdeg.iter().filter(|&&d| d <= cap).sum();
        mass as f64 / self.len() as f64
    }

    /// CSV with header `node,parent,outdeg,weight_u,weight_v,birth_time`.
    /// The root's parent is written as `-1`; scalar weights leave `weight_u` empty.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "node,parent,outdeg,weight_u,weight_v,birth_time")?;
        for i in 0..self.len() {
            let parent = match self.parent(i) {
                Some(p) => p.to_string(),
                None => "-1".to_string(),
            };
            let (u, v) = match self.weight[i] {
                Weight::Scalar(w) => (String::new(), w.to_string()),
                Weight::Pair { u, v } => (u.to_string(), v.to_string()),
            };
            let time = match &self.birth_time {
                Some(t) => t[i].to_string(),
                None => String::new(),
            };
            writeln!(out, "{i},{parent},{},{u},{v},{time}", self.outdeg[i])?;
        }
        Ok(())
    }
}

/// Number of nodes `N_k` of each out-degree `k`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DegreeHistogram {
    pub counts: BTreeMap<u64, u64>,
}

impl DegreeHistogram {
    pub fn nodes(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn edges(&self) -> u64 {
        self.counts.iter().map(|(k, c)| k * c).sum()
    }

    /// CSV with header `k,count`, ascending in `k`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "k,count")?;
        for (k, c) in &self.counts {
            writeln!(out, "{k},{c}")?;
        }
        Ok(())
    }
}

/// A tree being grown step by step.
#[derive(Debug, Clone)]
pub struct GrowthState {
    model: FitnessModel,
    tree: RecursiveTree,
    sampler: SumTree,
    z: f64,
    halted: bool,
    since_resync: u64,
}

impl GrowthState {
    /// Single root with a freshly sampled weight.
    pub fn new<R: Rng + ?Sized>(model: FitnessModel, rng: &mut R) -> Self {
        let w = model.sample_weight(rng);
        let f0 = model.rate(0, &w);
        let mut sampler = SumTree::with_capacity(1024);
        sampler.push(f0);
        GrowthState {
            tree: RecursiveTree::with_root(w),
            sampler,
            z: f0,
            halted: f0 == 0.0,
            since_resync: 0,
            model,
        }
    }

    pub fn tree(&self) -> &RecursiveTree {
        &self.tree
    }

    pub fn into_tree(self) -> RecursiveTree {
        self.tree
    }

    pub fn model(&self) -> &FitnessModel {
        &self.model
    }

    /// Current partition function.
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn halted(&self) -> bool {
        self.halted
    }

    /// `f(outdeg(j), W_j)` for an existing node.
    pub fn fitness_of(&self, j: usize) -> f64 {
        self.sampler.get(j)
    }

    /// Exact `sum_j f(outdeg(j), W_j)` recomputed from scratch.
    pub fn exact_z(&self) -> f64 {
        (0..self.tree.len())
            .map(|j| self.model.rate(self.tree.outdeg(j), self.tree.weight(j)))
            .sum()
    }

    /// Performs up to `steps` attachments; fewer if the process halts.
    pub fn grow<R: Rng + ?Sized>(&mut self, steps: u64, rng: &mut R) -> u64 {
        let start_len = self.tree.len();
        let mut done = 0;
        while done < steps && !self.halted {
            let Some(j) = self.sampler.sample(rng) else {
                self.halted = true;
                break;
            };
            let wj = *self.tree.weight(j);
            let old = self.sampler.get(j);
            let w_new = self.model.sample_weight(rng);
            self.tree.attach(j, w_new);
            let updated = self.model.rate(self.tree.outdeg(j), &wj);
            let fresh = self.model.rate(0, &w_new);
            self.sampler.set(j, updated);
            self.sampler.push(fresh);
            self.z += updated - old + fresh;
            done += 1;
            self.since_resync += 1;
            if self.since_resync >= RESYNC_INTERVAL {
                self.z = self.exact_z();
                self.since_resync = 0;
            }
            if self.sampler.total() <= 0.0 {
                self.halted = true;
                self.z = 0.0;
            }
        }
        if cfg!(debug_assertions) {
            self.debug_check(start_len);
        }
        done
    }

    fn debug_check(&self, start_len: usize) {
        let tree = &self.tree;
        for i in start_len.max(1)..tree.len() {
            assert!(tree.parent[i] < i);
        }
        if tree.len() <= 1 << 14 {
            tree.validate().expect("tree invariants");
        }
    }

    /// Exact attachment law of the next step.
    pub fn attach_probabilities(&self) -> Result<Vec<f64>> {
        if self.halted {
            return Err(Error::ZeroPartition);
        }
        let fits: Vec<f64> = (0..self.tree.len())
            .map(|j| self.model.rate(self.tree.outdeg(j), self.tree.weight(j)))
            .collect();
        let z: f64 = fits.iter().sum();
        if z <= 0.0 {
            return Err(Error::ZeroPartition);
        }
        Ok(fits.into_iter().map(|f| f / z).collect())
    }
}
