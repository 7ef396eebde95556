//! Statistical estimators and analytic utilities for the minor-process
//! experiments: Tracy-Widom scaling, tail events and exponent fits,
//! decorrelation ratios, extrema traces with the fractional-logarithm
//! reference constants, subsequence bookkeeping, semicircle and
//! Dyson-equation machinery, and goodness-of-fit diagnostics.

pub mod decorrelation;
pub mod dyson;
pub mod gof;
pub mod semicircle;
pub mod tails;
pub mod tw;

use crate::ensemble::Beta;
use crate::error::StatsError;
use crate::minor_engine::TrajectoryRecord;
use serde::{Deserialize, Serialize};

pub use decorrelation::{decorrelation_ratio, DecorrelationReport, EventFactorization};
pub use dyson::{solve_dyson, DysonSolution};
pub use gof::{chi_square_gof, ks_statistic, ks_two_sample, GofReport};
pub use semicircle::{
    m_sc, rigidity_residuals, semicircle_cdf, semicircle_density, semicircle_quantile,
    smoothed_edge_count,
};
pub use tails::{estimate_tail_curve, TailFit, TailLevel, TailSide};

/// Tracy-Widom scaling of the top eigenvalue: `n^{2/3} (lambda_raw - 2)`.
#[inline]
pub fn scale_top(lambda_raw: f64, n: usize) -> f64 {
    (n as f64).powf(2.0 / 3.0) * (lambda_raw - 2.0)
}

/// Moderate-deviation tail events at level `x > 0` for a scaled top
/// eigenvalue: the right event compares against `x (log N)^{2/3}`, the left
/// against `-x (log N)^{1/3}`; both boundaries inclusive.
#[inline]
pub fn classify_tail_events(lambda_scaled: f64, n: usize, x: f64) -> (bool, bool) {
    debug_assert!(x > 0.0 && n >= 3);
    let log_n = (n as f64).ln();
    let f = lambda_scaled >= x * log_n.powf(2.0 / 3.0);
    let e = lambda_scaled <= -x * log_n.powf(1.0 / 3.0);
    (f, e)
}

fn snap_or_ceil(p: f64) -> f64 {
    let r = p.round();
    if (p - r).abs() <= 1e-9 * p.abs().max(1.0) {
        r
    } else {
        p.ceil()
    }
}

/// Polynomial subsequence `N_k = ceil(k^alpha)`.
pub fn subsequence_nk(alpha: f64, k: u64) -> Result<u64, StatsError> {
    if !(alpha > 0.0) || k == 0 {
        return Err(StatsError::Invalid(format!("need alpha > 0 and k >= 1, got alpha={alpha}, k={k}")));
    }
    let p = (k as f64).powf(alpha);
    if !p.is_finite() || p >= 9.007199254740992e15 {
        return Err(StatsError::SubsequenceOverflow { k, alpha });
    }
    Ok(snap_or_ceil(p) as u64)
}

/// Partial sums of event indicators: the full sum `S_M` over `k <= M` and
/// the trailing-window sum over `k` from `ceil(M - M^{1-delta})` (clamped at
/// 1) to `M`.
pub fn partial_sums(indicators: &[bool], m: usize, delta: f64) -> Result<(u64, u64), StatsError> {
    if m == 0 || m > indicators.len() {
        return Err(StatsError::Invalid(format!(
            "M = {m} outside available indicator range 1..={}",
            indicators.len()
        )));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(StatsError::Invalid(format!("delta must lie in [0, 1], got {delta}")));
    }
    let s_m = indicators[..m].iter().filter(|&&b| b).count() as u64;
    let window = (m as f64).powf(1.0 - delta);
    let lo = snap_or_ceil(m as f64 - window).max(1.0) as usize;
    let s_m_delta = indicators[lo - 1..m].iter().filter(|&&b| b).count() as u64;
    Ok((s_m, s_m_delta))
}

/// Fixed-bin histogram with underflow/overflow buckets; merges bin-wise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub under: u64,
    pub over: u64,
}

impl Histogram {
    pub fn new(lo: f64, bin_width: f64, bins: usize) -> Self {
        Histogram { lo, bin_width, counts: vec![0; bins], under: 0, over: 0 }
    }

    pub fn record(&mut self, value: f64) {
        if value < self.lo {
            self.under += 1;
            return;
        }
        let idx = ((value - self.lo) / self.bin_width) as usize;
        if idx >= self.counts.len() {
            self.over += 1;
        } else {
            self.counts[idx] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.under + self.over + self.counts.iter().sum::<u64>()
    }

    pub fn same_shape(&self, other: &Histogram) -> bool {
        self.lo == other.lo && self.bin_width == other.bin_width && self.counts.len() == other.counts.len()
    }

    pub fn merge(&mut self, other: &Histogram) {
        debug_assert!(self.same_shape(other));
        self.under += other.under;
        self.over += other.over;
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += b;
        }
    }
}

/// Normalized top-eigenvalue sequences with running extrema and occupancy
/// histograms, against the beta-dependent fractional-logarithm reference
/// constants.
#[derive(Debug, Clone)]
pub struct ExtremaTrace {
    pub n: Vec<usize>,
    /// `lambda_1^(N) / (log N)^{2/3}`.
    pub norm23: Vec<f64>,
    /// `lambda_1^(N) / (log N)^{1/3}`.
    pub norm13: Vec<f64>,
    pub running_max23: Vec<f64>,
    pub running_min13: Vec<f64>,
    pub hist23: Histogram,
    pub hist13: Histogram,
    /// `(1/(2 beta))^{2/3}`.
    pub limsup_marker: f64,
    /// `-(8/beta)^{1/3}`.
    pub liminf_marker: f64,
}

/// Reference constant for the upper normalized extreme: `(1/(2 beta))^{2/3}`.
pub fn lfl_limsup_constant(beta: Beta) -> f64 {
    (1.0 / (2.0 * beta.value())).powf(2.0 / 3.0)
}

/// Reference constant for the lower normalized extreme: `-(8/beta)^{1/3}`.
pub fn lfl_liminf_constant(beta: Beta) -> f64 {
    -(8.0 / beta.value()).powf(1.0 / 3.0)
}

pub fn extrema_trace(traj: &TrajectoryRecord, beta: Beta) -> Result<ExtremaTrace, StatsError> {
    if traj.rows.is_empty() {
        return Err(StatsError::Invalid("empty trajectory".into()));
    }
    let len = traj.rows.len();
    let mut out = ExtremaTrace {
        n: Vec::with_capacity(len),
        norm23: Vec::with_capacity(len),
        norm13: Vec::with_capacity(len),
        running_max23: Vec::with_capacity(len),
        running_min13: Vec::with_capacity(len),
        hist23: Histogram::new(-4.0, 0.05, 160),
        hist13: Histogram::new(-4.0, 0.05, 160),
        limsup_marker: lfl_limsup_constant(beta),
        liminf_marker: lfl_liminf_constant(beta),
    };
    let mut run_max = f64::NEG_INFINITY;
    let mut run_min = f64::INFINITY;
    for row in &traj.rows {
        let log_n = (row.n as f64).ln();
        let v23 = row.lambda_scaled / log_n.powf(2.0 / 3.0);
        let v13 = row.lambda_scaled / log_n.powf(1.0 / 3.0);
        run_max = run_max.max(v23);
        run_min = run_min.min(v13);
        out.n.push(row.n);
        out.norm23.push(v23);
        out.norm13.push(v13);
        out.running_max23.push(run_max);
        out.running_min13.push(run_min);
        out.hist23.record(v23);
        out.hist13.record(v13);
    }
    Ok(out)
}

/// Per-window tally of extension events along the subsequence
/// `N_k = ceil(k^alpha)`: inside window `(N_{k-1}, N_k]`, the event requires
/// an interior exceedance of `(c + delta)(log n)^{2/3}` while the window
/// endpoint stays below `c (log N_k)^{2/3}`. Also records the in-window
/// maximum of the martingale series magnitude.
#[derive(Debug, Clone)]
pub struct WindowTally {
    pub k: u64,
    pub n_lo: usize,
    pub n_hi: usize,
    pub event: bool,
    pub max_abs_martingale: f64,
}

#[derive(Debug, Clone)]
pub struct ExtensionTally {
    pub windows: Vec<WindowTally>,
    pub event_count: usize,
}

pub fn extension_event_tally(
    traj: &TrajectoryRecord,
    alpha: f64,
    c: f64,
    delta: f64,
) -> Result<ExtensionTally, StatsError> {
    if traj.rows.is_empty() {
        return Err(StatsError::Invalid("empty trajectory".into()));
    }
    if !(c > 0.0) || !(delta >= 0.0) {
        return Err(StatsError::Invalid(format!("need c > 0, delta >= 0, got c={c}, delta={delta}")));
    }
    let n_start = traj.n_start();
    let n_end = traj.n_end();
    let mut windows = Vec::new();
    let mut k = 1u64;
    let mut n_prev = subsequence_nk(alpha, k)?;
    loop {
        k += 1;
        let n_k = subsequence_nk(alpha, k)?;
        if n_k as usize > n_end {
            break;
        }
        if n_prev + 1 >= n_start as u64 && n_k > n_prev {
            let n_lo = n_prev as usize;
            let n_hi = n_k as usize;
            let mut interior = false;
            let mut x_acc = 0.0;
            let mut max_abs_x = 0.0f64;
            let scale = (n_hi as f64).powf(2.0 / 3.0);
            for n in (n_lo + 1)..=n_hi {
                let row = traj.row_at(n).ok_or(StatsError::WindowOutOfRange {
                    lo: n_lo,
                    hi: n_hi,
                    traj_lo: n_start,
                    traj_hi: n_end,
                })?;
                let log_n = (n as f64).ln();
                if row.lambda_scaled >= (c + delta) * log_n.powf(2.0 / 3.0) {
                    interior = true;
                }
                x_acc += scale * (row.xi1_sq - 1.0) / n as f64;
                max_abs_x = max_abs_x.max(x_acc.abs());
            }
            let endpoint = traj.row_at(n_hi).unwrap();
            let end_low = endpoint.lambda_scaled <= c * ((n_hi as f64).ln()).powf(2.0 / 3.0);
            windows.push(WindowTally {
                k,
                n_lo,
                n_hi,
                event: interior && end_low,
                max_abs_martingale: max_abs_x,
            });
        }
        n_prev = n_k;
    }
    if windows.is_empty() {
        return Err(StatsError::Invalid(format!(
            "no complete windows with alpha={alpha} inside trajectory {n_start}..{n_end}"
        )));
    }
    let event_count = windows.iter().filter(|w| w.event).count();
    Ok(ExtensionTally { windows, event_count })
}
