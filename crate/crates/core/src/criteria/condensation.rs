use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fitness::FitnessModel;
use crate::rng::substream;
use crate::stats::MeanAccumulator;

/// Partial sums of `sum_{j>=1} E[prod_{i<j} f(i, W) / (f(i, W) + lambda)]`.
#[derive(Debug, Clone)]
pub struct CondensationSum {
    pub lambda: f64,
    pub nsamples: u64,
    /// `terms[j - 1]` estimates the `j`-th expectation.
    pub terms: Vec<MeanAccumulator>,
    /// `partial[j - 1]` estimates the sum of the first `j` terms.
    pub partial: Vec<MeanAccumulator>,
}

impl CondensationSum {
    pub fn j_max(&self) -> usize {
        self.terms.len()
    }

    /// Estimate and standard error of the sum up to `j_max`.
    pub fn total(&self) -> (f64, f64) {
        let last = self.partial.last().expect("empty condensation sum");
        (last.mean(), last.std_error())
    }

    /// CSV with header `j,term,term_se,partial,partial_se`.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "j,term,term_se,partial,partial_se")?;
        for (j, (t, p)) in self.terms.iter().zip(&self.partial).enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                j + 1,
                t.mean(),
                t.std_error(),
                p.mean(),
                p.std_error()
            )?;
        }
        Ok(())
    }
}

const BLOCK: u64 = 1024;

/// Averages the product terms over `nsamples` weight draws. Block `b` of
/// 1024 draws uses stream `b` split from `seed`.
pub fn condensation_sum(
    model: &FitnessModel,
    lambda: f64,
    j_max: usize,
    nsamples: u64,
    seed: u64,
) -> Result<CondensationSum> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    if j_max == 0 || nsamples < 2 {
        return Err(Error::invalid(
            "condensation sum needs j_max >= 1 and at least 2 samples",
        ));
    }
    let blocks = nsamples.div_ceil(BLOCK);
    let fresh = || (vec![MeanAccumulator::new(); j_max], vec![MeanAccumulator::new(); j_max]);
    let per_block: Vec<_> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b);
            let (mut terms, mut partial) = fresh();
            for _ in 0..BLOCK.min(nsamples - b * BLOCK) {
                let w = model.sample_weight(&mut rng);
                let mut prod = 1.0;
                let mut sum = 0.0;
                for j in 0..j_max {
                    let f = model.rate(j as u64, &w);
                    prod *= f / (f + lambda);
                    sum += prod;
                    terms[j].push(prod);
                    partial[j].push(sum);
                }
            }
            (terms, partial)
        })
        .collect();
    let (mut terms, mut partial) = fresh();
    for (t, p) in &per_block {
        for j in 0..j_max {
            terms[j].merge(&t[j]);
            partial[j].merge(&p[j]);
        }
    }
    Ok(CondensationSum {
        lambda,
        nsamples,
        terms,
        partial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::ScalarLaw;
    use crate::quadrature::integrate;

    #[test]
    fn constant_fitness_geometric() {
        let c = 3.0;
        let lambda = 2.0;
        let model = FitnessModel::wrrt(ScalarLaw::PointMass(c)).unwrap();
        let s = condensation_sum(&model, lambda, 1000, 16, 0).unwrap();
        let rho = c / (c + lambda);
        for j in [1usize, 10, 1000] {
            let oracle = c / lambda * (1.0 - rho.powi(j as i32));
            assert!((s.partial[j - 1].mean() - oracle).abs() < 1e-12);
        }
        assert_eq!(s.total().1, 0.0);
    }

    #[test]
    fn yule_telescopes() {
        let s = condensation_sum(&FitnessModel::yule(), 2.0, 1000, 4, 0).unwrap();
        for j in [1usize, 2, 50, 1000] {
            let term = 2.0 / ((j + 1) as f64 * (j + 2) as f64);
            assert!((s.terms[j - 1].mean() - term).abs() < 1e-15);
            assert!((s.partial[j - 1].mean() - (1.0 - 2.0 / (j as f64 + 2.0))).abs() < 1e-12);
        }
    }

    #[test]
    fn random_weights_match_quadrature() {
        let lambda = 1.0;
        let model = FitnessModel::wrrt(ScalarLaw::uniform(1.0, 2.0).unwrap()).unwrap();
        let s = condensation_sum(&model, lambda, 20, 50_000, 7).unwrap();
        let oracle = integrate(
            &|w: f64| {
                let rho: f64 = w / (w + lambda);
                rho * (1.0 - rho.powi(20)) / (1.0 - rho)
            },
            1.0,
            2.0,
            1e-12,
        );
        let (est, se) = s.total();
        assert!((est - oracle).abs() < 4.0 * se, "{est} {se} {oracle}");
    }

    #[test]
    fn large_lambda_vanishes() {
        let s = condensation_sum(&FitnessModel::yule(), 1e12, 10, 4, 0).unwrap();
        assert!(s.total().0 < 1e-11);
    }

    #[test]
    fn block_split_is_seed_stable() {
        let model = FitnessModel::wrrt(ScalarLaw::exponential(1.0).unwrap()).unwrap();
        let a = condensation_sum(&model, 1.0, 5, 3000, 11).unwrap();
        let b = condensation_sum(&model, 1.0, 5, 3000, 11).unwrap();
        assert_eq!(a.total(), b.total());
    }
}
