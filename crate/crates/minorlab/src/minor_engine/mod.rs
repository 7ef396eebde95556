//! Incremental growth of the minor process.
//!
//! Growing from size `n` to `n+1` appends one border column and corner entry
//! to the shared array. In the basis `{w_1..w_n, e_{n+1}}` built from the
//! current eigenvectors, the enlarged matrix is exactly an arrowhead system,
//! so each step costs one set of border projections, one secular solve and
//! one basis back-transform. A periodic dense re-diagonalization bounds the
//! slow orthogonality drift of the assembled bases.

pub mod arrowhead;
pub mod edge;

use crate::dense::{eigh_desc, ensure_single_thread_blas, neumaier_sum, DenseEigh};
use crate::ensemble::{materialize_wigner, sample_border, seed::SeedContext, EnsembleSpec};
use crate::error::EngineError;
use crate::scalar::Scalar;
use crate::stats_lab::scale_top;
use ndarray::{s, Array1, Array2};

pub use arrowhead::{arrowhead_eigen, solve_secular_top, ArrowheadSystem};

/// Interlacing is required to hold at every accepted step within this
/// absolute tolerance.
pub const INTERLACING_TOL: f64 = 1e-10;
/// Orthonormality drift allowed between dense refreshes.
pub const ORTHO_DRIFT_TOL: f64 = 1e-8;
/// Default refresh cadence.
pub const DEFAULT_REFRESH_EVERY: usize = 64;
/// Default relative tolerance for the secular root finder.
pub const DEFAULT_SECULAR_TOL: f64 = 1e-13;

/// Eigendecomposition state of the current minor: size, descending
/// eigenvalues and the orthonormal eigenvector basis in original coordinates.
#[derive(Debug, Clone)]
pub struct MinorState<S: Scalar> {
    pub n: usize,
    pub lambdas: Array1<f64>,
    pub basis: Array2<S>,
    pub steps_since_refresh: usize,
}

impl<S: DenseEigh> MinorState<S> {
    /// Fresh state from a dense eigendecomposition of `H^(n)`.
    pub fn dense_init(n: usize, spec: &EnsembleSpec, ctx: &SeedContext) -> Result<Self, EngineError> {
        let h = materialize_wigner::<S>(n, spec, ctx)?;
        let (lambdas, basis) = eigh_desc(&h)?;
        Ok(MinorState { n, lambdas, basis, steps_since_refresh: 0 })
    }

    /// Max deviation of `basis^H basis` from the identity over a probe set of
    /// column pairs; cheap drift detector between refreshes.
    pub fn ortho_probe(&self, pairs: usize) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        let mut pick = 0x9e3779b97f4a7c15u64 ^ (n as u64);
        let mut next_idx = move || {
            pick ^= pick << 13;
            pick ^= pick >> 7;
            pick ^= pick << 17;
            (pick % n as u64) as usize
        };
        for t in 0..pairs {
            let a = if t == 0 { 0 } else { next_idx() };
            let b = next_idx();
            let mut acc_re = 0.0;
            let mut acc_im = 0.0;
            for i in 0..n {
                let p = self.basis[[i, a]].conj() * self.basis[[i, b]];
                acc_re += p.re();
                acc_im += p.im();
            }
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((acc_re - target).abs().max(acc_im.abs()));
        }
        worst
    }

    /// Max residual `||H w_a - lambda_a w_a||` over all columns; full check
    /// used at refresh points and in tests.
    pub fn residual(&self, spec: &EnsembleSpec, ctx: &SeedContext) -> Result<f64, EngineError> {
        let h = materialize_wigner::<S>(self.n, spec, ctx)?;
        let hv = h.dot(&self.basis);
        let mut worst: f64 = 0.0;
        for k in 0..self.n {
            let mut acc = 0.0;
            for i in 0..self.n {
                let diff = hv[[i, k]] - self.basis[[i, k]].scale_re(self.lambdas[k]);
                acc += diff.abs2();
            }
            worst = worst.max(acc.sqrt());
        }
        Ok(worst)
    }
}

/// Border entries of `H^(n_new)` (array entries divided by `sqrt(n_new)`)
/// and the corner value `h_{nn}`.
pub fn sample_border_scaled<S: Scalar>(
    n_new: usize,
    spec: &EnsembleSpec,
    ctx: &SeedContext,
) -> Result<(Array1<S>, f64), EngineError> {
    let (x_border, x_corner) = sample_border::<S>(n_new, spec, ctx)?;
    let inv_root = 1.0 / (n_new as f64).sqrt();
    Ok((x_border.mapv(|x| x.scale_re(inv_root)), x_corner * inv_root))
}

/// Border projections `xi_a = sqrt(n) <w_a, a>` onto the previous eigenbasis.
/// For unit-variance array entries these have `E |xi_a|^2 = 1` conditional on
/// the past, which is the source of the martingale structure.
pub fn xi_coefficients<S: Scalar>(
    basis: &Array2<S>,
    border_h_scale: &Array1<S>,
    n_new: usize,
) -> Result<Array1<S>, EngineError> {
    let m = basis.nrows();
    if basis.ncols() != m || border_h_scale.len() != m {
        return Err(EngineError::Dimension(format!(
            "basis {}x{}, border length {}",
            basis.nrows(),
            basis.ncols(),
            border_h_scale.len()
        )));
    }
    ensure_single_thread_blas();
    // xi = sqrt(n) * conj(W^T conj(a)) == sqrt(n) * W^H a
    let conj_a = border_h_scale.mapv(|x| x.conj());
    let mut xi = basis.t().dot(&conj_a);
    let root_n = (n_new as f64).sqrt();
    xi.mapv_inplace(|x| x.conj().scale_re(root_n));
    Ok(xi)
}

/// Assemble the bordered eigenproblem for the step `n -> n+1`.
///
/// `border_h_scale` and `h_corner` are entries of `H^(n+1)` (already divided
/// by `sqrt(n+1)`). In the basis `{w_a ⊕ 0, e_{n+1}}` the enlarged matrix is
/// exactly `[diag(d), b; b^*, c]` with `d = sqrt(n/(n+1)) lambda` and
/// `b = xi / sqrt(n+1)`.
pub fn build_arrowhead<S: Scalar>(
    state: &MinorState<S>,
    border_h_scale: &Array1<S>,
    h_corner: f64,
) -> Result<ArrowheadSystem<S>, EngineError> {
    let n = state.n;
    let n_new = n + 1;
    let xi = xi_coefficients(&state.basis, border_h_scale, n_new)?;
    let shrink = (n as f64 / n_new as f64).sqrt();
    let d = state.lambdas.mapv(|x| x * shrink);
    let b = xi.mapv(|x| x.scale_re(1.0 / (n_new as f64).sqrt()));
    ArrowheadSystem::new(d, b, h_corner)
}

/// Per-step observables recorded along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRow {
    pub n: usize,
    /// Top eigenvalue in the raw (unscaled) convention.
    pub lambda_raw: f64,
    /// `n^{2/3} (lambda_raw - 2)`.
    pub lambda_scaled: f64,
    /// Squared border projection onto the previous top eigenvector.
    pub xi1_sq: f64,
    /// Corner entry of `H^(n)`.
    pub h_nn: f64,
    /// Squared mass of the top eigenvector on the newest coordinate.
    pub corner_mass: f64,
}

/// Trajectory of per-step scalars plus reproducibility metadata.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub rows: Vec<StepRow>,
    pub spec_digest: String,
    pub master_seed: u64,
    pub refresh_every: usize,
}

impl TrajectoryRecord {
    pub fn n_start(&self) -> usize {
        self.rows.first().map_or(0, |r| r.n)
    }

    pub fn n_end(&self) -> usize {
        self.rows.last().map_or(0, |r| r.n)
    }

    pub fn row_at(&self, n: usize) -> Option<&StepRow> {
        let start = self.n_start();
        if n < start || n > self.n_end() {
            return None;
        }
        self.rows.get(n - start)
    }
}

/// Options controlling the incremental engine.
#[derive(Debug, Clone, Copy)]
pub struct AdvanceOptions {
    pub refresh_every: usize,
    pub secular_tol: f64,
}

impl Default for AdvanceOptions {
    fn default() -> Self {
        AdvanceOptions { refresh_every: DEFAULT_REFRESH_EVERY, secular_tol: DEFAULT_SECULAR_TOL }
    }
}

/// Outcome of one incremental step.
pub struct Advanced<S: Scalar> {
    pub state: MinorState<S>,
    pub row: StepRow,
}

/// Grow the minor by one row/column: sample the border, solve the arrowhead
/// system, back-transform the basis, and re-diagonalize densely every
/// `refresh_every` steps (or when the orthogonality probe trips).
pub fn advance<S: DenseEigh>(
    state: MinorState<S>,
    spec: &EnsembleSpec,
    ctx: &SeedContext,
    opts: &AdvanceOptions,
) -> Result<Advanced<S>, EngineError> {
    let (row, state) = advance_impl(state, spec, ctx, opts, true)?;
    Ok(Advanced { state: state.expect("basis assembly requested"), row })
}

/// Shared step body. With `assemble_basis = false` the per-step scalars are
/// produced without the `O(n^3)` basis back-transform and no successor state
/// is built (used for the final step of a trajectory).
fn advance_impl<S: DenseEigh>(
    state: MinorState<S>,
    spec: &EnsembleSpec,
    ctx: &SeedContext,
    opts: &AdvanceOptions,
    assemble_basis: bool,
) -> Result<(StepRow, Option<MinorState<S>>), EngineError> {
    let n = state.n;
    let n_new = n + 1;
    let (border, h_corner) = sample_border_scaled::<S>(n_new, spec, ctx)?;
    let sys = build_arrowhead(&state, &border, h_corner)?;
    let xi1_sq = sys.w[0] * n_new as f64;
    let (vals, q) = arrowhead_eigen(&sys, opts.secular_tol)?;

    // interlacing: d_a separates consecutive new eigenvalues
    for a in 0..sys.d.len() {
        if !(vals[a + 1] <= sys.d[a] + INTERLACING_TOL && sys.d[a] <= vals[a] + INTERLACING_TOL) {
            return Err(EngineError::InvariantViolation(format!(
                "interlacing broken at alpha={a}: {} !<= {} !<= {}",
                vals[a + 1],
                sys.d[a],
                vals[a]
            )));
        }
    }
    // trace is preserved by the similarity transform
    let trace_roots = neumaier_sum(vals.iter().copied());
    let trace_sys = neumaier_sum(sys.d.iter().copied().chain([sys.c]));
    if (trace_roots - trace_sys).abs() > 1e-8 * (1.0 + trace_sys.abs()) {
        return Err(EngineError::InvariantViolation(format!(
            "trace drift {} vs {}",
            trace_roots, trace_sys
        )));
    }

    let corner_mass = q[[n, 0]].abs2();
    let row = StepRow {
        n: n_new,
        lambda_raw: vals[0],
        lambda_scaled: scale_top(vals[0], n_new),
        xi1_sq,
        h_nn: h_corner,
        corner_mass,
    };
    if !assemble_basis {
        return Ok((row, None));
    }

    ensure_single_thread_blas();
    let q_upper = q.slice(s![..n, ..]);
    let top = state.basis.dot(&q_upper);
    let mut basis = Array2::<S>::zeros((n_new, n_new));
    basis.slice_mut(s![..n, ..]).assign(&top);
    basis.slice_mut(s![n, ..]).assign(&q.slice(s![n, ..]));

    let mut new_state =
        MinorState { n: n_new, lambdas: vals, basis, steps_since_refresh: state.steps_since_refresh + 1 };

    let due = new_state.steps_since_refresh >= opts.refresh_every;
    let drifted = !due && new_state.ortho_probe(6) > ORTHO_DRIFT_TOL;
    if due || drifted {
        let h = materialize_wigner::<S>(n_new, spec, ctx)?;
        let (lambdas, fresh) = eigh_desc(&h)?;
        new_state.lambdas = lambdas;
        new_state.basis = fresh;
        new_state.steps_since_refresh = 0;
    }
    Ok((row, Some(new_state)))
}

/// Run the incremental engine from `n_start` to `n_end` (inclusive),
/// initializing densely at `n_start - 1`.
pub fn run_trajectory<S: DenseEigh>(
    n_start: usize,
    n_end: usize,
    spec: &EnsembleSpec,
    ctx: &SeedContext,
    opts: &AdvanceOptions,
) -> Result<TrajectoryRecord, EngineError> {
    if n_start < 2 || n_end < n_start {
        return Err(EngineError::Dimension(format!(
            "need 2 <= n_start <= n_end, got {n_start}..{n_end}"
        )));
    }
    let mut state = MinorState::<S>::dense_init(n_start - 1, spec, ctx)?;
    let mut rows = Vec::with_capacity(n_end - n_start + 1);
    for n in n_start..=n_end {
        let want_state = n < n_end;
        let (row, next) = advance_impl(state, spec, ctx, opts, want_state).map_err(|e| e.at_step(n))?;
        rows.push(row);
        state = match next {
            Some(s) => s,
            None => break,
        };
    }
    Ok(TrajectoryRecord {
        rows,
        spec_digest: spec.digest(),
        master_seed: ctx.master_seed(),
        refresh_every: opts.refresh_every,
    })
}

/// Martingale series over one window `(n_lo, n_hi]`:
/// `X_n = n_hi^{2/3} sum_{l=n_lo+1}^{n} (1/l)(|xi_1^(l)|^2 - 1)`, together
/// with the defect `D_n = (lambda_hi - lambda_n) - (X_hi - X_n)` that
/// measures the slack of the martingale lower bound on eigenvalue
/// differences.
#[derive(Debug, Clone)]
pub struct MartingaleSeries {
    pub n_lo: usize,
    pub n_hi: usize,
    /// `X_n` for `n = n_lo..=n_hi`; the first entry is exactly zero.
    pub values: Vec<f64>,
    /// Increments `X_n - X_{n-1}` for `n = n_lo+1..=n_hi`.
    pub increments: Vec<f64>,
    /// Defects `D_n` for `n = n_lo..=n_hi`.
    pub defects: Vec<f64>,
}

pub fn martingale_series(
    traj: &TrajectoryRecord,
    window: (usize, usize),
) -> Result<MartingaleSeries, EngineError> {
    let (n_lo, n_hi) = window;
    if n_lo >= n_hi || traj.row_at(n_lo).is_none() || traj.row_at(n_hi).is_none() {
        return Err(EngineError::Dimension(format!(
            "window ({n_lo}, {n_hi}] not covered by trajectory {}..{}",
            traj.n_start(),
            traj.n_end()
        )));
    }
    let scale = (n_hi as f64).powf(2.0 / 3.0);
    let mut values = Vec::with_capacity(n_hi - n_lo + 1);
    let mut increments = Vec::with_capacity(n_hi - n_lo);
    values.push(0.0);
    let mut acc = 0.0;
    for n in (n_lo + 1)..=n_hi {
        let row = traj.row_at(n).expect("window coverage checked");
        let inc = scale * (row.xi1_sq - 1.0) / n as f64;
        acc += inc;
        increments.push(inc);
        values.push(acc);
    }
    let x_hi = acc;
    let lambda_hi = traj.row_at(n_hi).unwrap().lambda_scaled;
    let defects = (n_lo..=n_hi)
        .map(|n| {
            let row = traj.row_at(n).unwrap();
            let x_n = values[n - n_lo];
            (lambda_hi - row.lambda_scaled) - (x_hi - x_n)
        })
        .collect();
    Ok(MartingaleSeries { n_lo, n_hi, values, increments, defects })
}
