//! Joint tail-event factorization across minor pairs.
//!
//! For nested minors `N1 < N2` of one shared array, the gap class
//! `M = N2 - N1` measured in units of `N2^{2/3}` separates the strongly
//! correlated regime (`M` much smaller) from near-independence (`M` much
//! larger). The report carries factorization ratios
//! `P[A1 and A2] / (P[A1] P[A2])` for both right (`F`) and left (`E`) tail
//! events, with delta-method error bars, plus the Pearson correlation of the
//! scaled top eigenvalues themselves.

use crate::error::StatsError;
use crate::stats_lab::classify_tail_events;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EventFactorization {
    pub count1: u64,
    pub count2: u64,
    pub count_joint: u64,
    pub p1: f64,
    pub p2: f64,
    pub p_joint: f64,
    /// `p_joint / (p1 p2)`; undefined when a marginal count is zero.
    pub ratio: Option<f64>,
    /// Delta-method standard error of the ratio; needs a nonzero joint count.
    pub ratio_err: Option<f64>,
}

impl EventFactorization {
    fn from_counts(n: usize, c1: u64, c2: u64, c12: u64) -> Self {
        let nf = n as f64;
        let p1 = c1 as f64 / nf;
        let p2 = c2 as f64 / nf;
        let p12 = c12 as f64 / nf;
        let ratio = if c1 > 0 && c2 > 0 { Some(p12 / (p1 * p2)) } else { None };
        let ratio_err = match (ratio, c12 > 0) {
            (Some(r), true) => {
                // Var(ln R) ~ (1-p12)/(n p12) + (1-p1)/(n p1) + (1-p2)/(n p2)
                let v = (1.0 - p12) / (nf * p12) + (1.0 - p1) / (nf * p1) + (1.0 - p2) / (nf * p2);
                Some(r * v.sqrt())
            }
            _ => None,
        };
        EventFactorization { count1: c1, count2: c2, count_joint: c12, p1, p2, p_joint: p12, ratio, ratio_err }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecorrelationReport {
    pub n1: usize,
    pub n2: usize,
    pub x1: f64,
    pub x2: f64,
    pub pairs: usize,
    /// `(N2 - N1) / N2^{2/3}`.
    pub m_over_n23: f64,
    /// Right tail events.
    pub f: EventFactorization,
    /// Left tail events.
    pub e: EventFactorization,
    /// Pearson correlation of the scaled top-eigenvalue pair.
    pub pearson: f64,
}

/// Factorization report from paired samples `(lambda_1^(N1), lambda_1^(N2))`
/// in the Tracy-Widom scaling, drawn from the shared-array construction.
pub fn decorrelation_ratio(
    pairs: &[(f64, f64)],
    n1: usize,
    n2: usize,
    x1: f64,
    x2: f64,
) -> Result<DecorrelationReport, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::TooFewSamples { need: 1, got: 0 });
    }
    if n2 < n1 || n1 < 3 {
        return Err(StatsError::Invalid(format!("need 3 <= N1 <= N2, got {n1}, {n2}")));
    }
    if !(x1 > 0.0 && x2 > 0.0) {
        return Err(StatsError::Invalid("levels must be positive".into()));
    }
    let n = pairs.len();
    let (mut f1, mut f2, mut f12) = (0u64, 0u64, 0u64);
    let (mut e1, mut e2, mut e12) = (0u64, 0u64, 0u64);
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut s11 = 0.0;
    let mut s22 = 0.0;
    let mut s12 = 0.0;
    for &(l1, l2) in pairs {
        let (fa, ea) = classify_tail_events(l1, n1, x1);
        let (fb, eb) = classify_tail_events(l2, n2, x2);
        f1 += fa as u64;
        f2 += fb as u64;
        f12 += (fa && fb) as u64;
        e1 += ea as u64;
        e2 += eb as u64;
        e12 += (ea && eb) as u64;
        s1 += l1;
        s2 += l2;
        s11 += l1 * l1;
        s22 += l2 * l2;
        s12 += l1 * l2;
    }
    let nf = n as f64;
    let m1 = s1 / nf;
    let m2 = s2 / nf;
    let var1 = s11 / nf - m1 * m1;
    let var2 = s22 / nf - m2 * m2;
    let cov = s12 / nf - m1 * m2;
    let pearson = if var1 > 0.0 && var2 > 0.0 { cov / (var1 * var2).sqrt() } else { f64::NAN };
    Ok(DecorrelationReport {
        n1,
        n2,
        x1,
        x2,
        pairs: n,
        m_over_n23: (n2 - n1) as f64 / (n2 as f64).powf(2.0 / 3.0),
        f: EventFactorization::from_counts(n, f1, f2, f12),
        e: EventFactorization::from_counts(n, e1, e2, e12),
        pearson,
    })
}
