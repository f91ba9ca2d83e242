use std::fmt;
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    SummableEvidence,
    DivergentEvidence,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::SummableEvidence => "SummableEvidence",
            Verdict::DivergentEvidence => "DivergentEvidence",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One term `P(xi(t_i) <= M_{i+1})^{M_i}` of the summability series.
#[derive(Debug, Clone, PartialEq)]
pub struct TermRow {
    pub i: usize,
    pub t: f64,
    pub m: u64,
    pub m_next: u64,
    /// Estimate and interval for `q_i = P(xi(t_i) > M_{i+1})`.
    pub q: f64,
    pub q_lo: f64,
    pub q_hi: f64,
    pub term: f64,
    pub term_lo: f64,
    pub term_hi: f64,
    pub resolved: bool,
    /// `exact` or `mc`.
    pub method: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointStatus {
    Pass,
    Fail,
    Unresolved,
}

impl PointStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointStatus::Pass => "pass",
            PointStatus::Fail => "fail",
            PointStatus::Unresolved => "unresolved",
        }
    }
}

/// One `(t, x)` point of a tail-condition grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRow {
    pub t: f64,
    pub x: f64,
    pub threshold: f64,
    pub p: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub status: PointStatus,
    pub method: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub test: &'static str,
    pub verdict: Verdict,
    pub terms: Vec<TermRow>,
    /// `(lower, estimate, upper)` partial sums of the terms.
    pub partial_sums: Vec<(f64, f64, f64)>,
    pub points: Vec<PointRow>,
    /// Decision rule applied, in words.
    pub policy: String,
    pub notes: Vec<String>,
}

impl CriterionReport {
    /// Key-value header followed by the per-term and per-point CSV tables.
    pub fn write_text<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "test={}", self.test)?;
        writeln!(out, "verdict={}", self.verdict)?;
        writeln!(out, "policy={}", self.policy)?;
        for n in &self.notes {
            writeln!(out, "note={n}")?;
        }
        if !self.terms.is_empty() {
            writeln!(out)?;
            self.write_terms_csv(out)?;
        }
        if !self.points.is_empty() {
            writeln!(out)?;
            self.write_points_csv(out)?;
        }
        Ok(())
    }

    /// CSV with header
    /// `i,t,m,m_next,q,q_lo,q_hi,term,term_lo,term_hi,partial_lo,partial,partial_hi,resolved,method`.
    pub fn write_terms_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(
            out,
            "i,t,m,m_next,q,q_lo,q_hi,term,term_lo,term_hi,partial_lo,partial,partial_hi,resolved,method"
        )?;
        for (r, s) in self.terms.iter().zip(&self.partial_sums) {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.i,
                r.t,
                r.m,
                r.m_next,
                r.q,
                r.q_lo,
                r.q_hi,
                r.term,
                r.term_lo,
                r.term_hi,
                s.0,
                s.1,
                s.2,
                r.resolved,
                r.method
            )?;
        }
        Ok(())
    }

    /// CSV with header `t,x,threshold,p,p_lo,p_hi,status,method`.
    pub fn write_points_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "t,x,threshold,p,p_lo,p_hi,status,method")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                p.t,
                p.x,
                p.threshold,
                p.p,
                p.p_lo,
                p.p_hi,
                p.status.as_str(),
                p.method
            )?;
        }
        Ok(())
    }
}
