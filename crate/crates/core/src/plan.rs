//! Sequences `(t_i)` and `(M_i)` for the summability criterion and the
//! witness search.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum TimeRule {
    /// `t_i = i^{-(1 + epsilon / 2)}`.
    PolynomialDecay,
    /// `t_i = values[i - 1]`.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CountRule {
    /// `M_i = base^i`.
    Powers(u64),
    /// `M_i = values[i - 1]`.
    Explicit(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequencePlan {
    pub epsilon: f64,
    pub times: TimeRule,
    pub counts: CountRule,
    /// Terms `i = 1..=i_max` are evaluated; `M` is needed up to `i_max + 1`.
    pub i_max: usize,
}

impl SequencePlan {
    /// `M_i = 2^i`, `t_i = i^{-(1 + epsilon / 2)}`.
    pub fn standard(epsilon: f64, i_max: usize) -> Result<Self> {
        let plan = SequencePlan {
            epsilon,
            times: TimeRule::PolynomialDecay,
            counts: CountRule::Powers(2),
            i_max,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.i_max == 0 {
            return Err(Error::invalid("i_max must be at least 1"));
        }
        match &self.times {
            TimeRule::PolynomialDecay => {}
            TimeRule::Explicit(v) => {
                if v.len() < self.i_max {
                    return Err(Error::invalid("explicit t sequence shorter than i_max"));
                }
                if v.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                    return Err(Error::invalid("t_i must be finite and positive"));
                }
            }
        }
        match &self.counts {
            CountRule::Powers(base) => {
                if *base < 2 {
                    return Err(Error::invalid("M_i base must be at least 2"));
                }
                let bits = 64 - base.leading_zeros() as usize;
                if bits * (self.i_max + 1) > 62 {
                    return Err(Error::invalid("M_i overflows for this i_max"));
                }
            }
            CountRule::Explicit(v) => {
                if v.len() < self.i_max + 1 {
                    return Err(Error::invalid("explicit M sequence needs i_max + 1 entries"));
                }
                if v[0] == 0 || v.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid("M_i must be positive and strictly increasing"));
                }
            }
        }
        Ok(())
    }

    /// `t_i` for `i >= 1`.
    pub fn t(&self, i: usize) -> f64 {
        assert!(i >= 1);
        match &self.times {
            TimeRule::PolynomialDecay => (i as f64).powf(-(1.0 + self.epsilon / 2.0)),
            TimeRule::Explicit(v) => v[i - 1],
        }
    }

    /// `M_i` for `i >= 1`.
    pub fn m(&self, i: usize) -> u64 {
        assert!(i >= 1);
        match &self.counts {
            CountRule::Powers(base) => base.pow(i as u32),
            CountRule::Explicit(v) => v[i - 1],
        }
    }

    /// `sum_{i <= n} t_i`.
    pub fn time_budget(&self, n: usize) -> f64 {
        (1..=n).map(|i| self.t(i)).sum()
    }

    /// Upper bound on `sum_{i >= 1} t_i` for the polynomial rule:
    /// `1 + int_1^inf x^{-(1 + e/2)} dx = 1 + 2 / e`.
    pub fn total_time_bound(&self) -> Option<f64> {
        match self.times {
            TimeRule::PolynomialDecay => Some(1.0 + 2.0 / self.epsilon),
            TimeRule::Explicit(_) => None,
        }
    }

    pub fn describe(&self) -> String {
        let t = match &self.times {
            TimeRule::PolynomialDecay => format!("t_i = i^-(1+{}/2)", self.epsilon),
            TimeRule::Explicit(v) => format!("t_i explicit ({} values)", v.len()),
        };
        let m = match &self.counts {
            CountRule::Powers(b) => format!("M_i = {b}^i"),
            CountRule::Explicit(v) => format!("M_i explicit ({} values)", v.len()),
        };
        format!("{t}; {m}; i_max = {}", self.i_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_values() {
        let p = SequencePlan::standard(1.0, 10).unwrap();
        assert_eq!(p.m(1), 2);
        assert_eq!(p.m(11), 2048);
        assert_eq!(p.t(1), 1.0);
        assert!((p.t(4) - 4f64.powf(-1.5)).abs() < 1e-15);
        assert!(p.time_budget(10) < p.total_time_bound().unwrap());
    }

    #[test]
    fn rejects_bad_plans() {
        assert!(SequencePlan::standard(0.0, 10).is_err());
        assert!(SequencePlan::standard(1.0, 0).is_err());
        assert!(SequencePlan::standard(1.0, 61).is_err());
        let mut p = SequencePlan::standard(1.0, 2).unwrap();
        p.counts = CountRule::Explicit(vec![1, 3, 3]);
        assert!(p.validate().is_err());
        p.counts = CountRule::Explicit(vec![1, 3, 9]);
        assert!(p.validate().is_ok());
    }
}
