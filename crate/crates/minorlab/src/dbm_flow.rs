//! Time evolution of the ensemble.
//!
//! Matrix mode evolves the raw entry array under the Ornstein-Uhlenbeck flow
//! `dX = -X/2 dt + dB`, where the noise array carries the same second-order
//! structure as the static entries and is drawn from per-step streams shared
//! across all minor sizes. The upper-left block of a flowing array is then
//! bit-for-bit the flow of the smaller array, which couples all minors for
//! free. Eigenvalue (dbm) mode evolves the spectrum directly through the
//! eigenvalue SDE with an adaptive step that splits the Brownian increment
//! as a bridge near collisions, so ordering is preserved without biasing the
//! driving noise.

use crate::dense::{eigh_desc, DenseEigh};
use crate::ensemble::seed::{CounterRng, SeedContext, Stream};
use crate::ensemble::{materialize_array, Beta, EnsembleSpec};
use crate::error::FlowError;
use crate::scalar::Scalar;
use ndarray::{s, Array2};
use rand_distr::{Distribution, StandardNormal};

/// Maximum recursive halvings of one time step before reporting a collision.
const MAX_SPLIT_DEPTH: u32 = 48;
/// An accepted move may use at most this fraction of the local gap.
const GAP_FRACTION: f64 = 0.25;

/// Matrix-mode flow state: the raw array snapshot `X_t^(N)`.
#[derive(Debug, Clone)]
pub struct MatrixFlow<S: Scalar> {
    pub t: f64,
    pub x: Array2<S>,
    pub dt_last: f64,
    step_index: u64,
}

impl<S: Scalar> MatrixFlow<S> {
    /// Start the flow from the static array `X^(n)` of the spec.
    pub fn from_spec(n: usize, spec: &EnsembleSpec, ctx: &SeedContext) -> Result<Self, FlowError> {
        let x = materialize_array::<S>(n, spec, ctx)?;
        Ok(MatrixFlow { t: 0.0, x, dt_last: 0.0, step_index: 0 })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Wigner-normalized snapshot `H_t^(N) = N^{-1/2} X_t^(N)`.
    pub fn wigner(&self) -> Array2<S> {
        let inv = 1.0 / (self.n() as f64).sqrt();
        self.x.mapv(|v| v.scale_re(inv))
    }

    /// One Euler-Maruyama step `X <- X (1 - dt/2) + sqrt(dt) G`. The noise
    /// array for step `k` is addressed by `(k, i, j)`, independent of the
    /// matrix size, so nested flows stay exactly coupled.
    pub fn ou_step(&mut self, dt: f64, spec: &EnsembleSpec, ctx: &SeedContext) -> Result<(), FlowError> {
        if !dt.is_finite() || dt < 0.0 {
            return Err(FlowError::BadTimeStep(dt));
        }
        let n = self.n();
        let decay = 1.0 - 0.5 * dt;
        let root_dt = dt.sqrt();
        let stream = Stream::OuNoise(self.step_index);
        let diag_scale = if spec.beta.is_complex() { 1.0 } else { std::f64::consts::SQRT_2 };
        for i in 0..n {
            for j in i..n {
                let mut rng = ctx.rng_at(stream, i as u64, j as u64);
                let g = if i == j {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    S::from_re(z * diag_scale)
                } else {
                    S::standard_gaussian(&mut rng)
                };
                let v = self.x[[i, j]].scale_re(decay) + g.scale_re(root_dt);
                self.x[[i, j]] = v;
                if i != j {
                    self.x[[j, i]] = v.conj();
                }
            }
        }
        self.step_index += 1;
        self.t += dt;
        self.dt_last = dt;
        Ok(())
    }
}

/// Eigenvalue-mode flow state: strictly decreasing spectrum of `H_t^(N)`.
#[derive(Debug, Clone)]
pub struct DbmFlow {
    pub t: f64,
    pub lambdas: Vec<f64>,
    pub beta: Beta,
    pub dt_last: f64,
    noise_counter: u64,
    noise_lineage: u64,
}

impl DbmFlow {
    pub fn new(lambdas: Vec<f64>, beta: Beta, noise_lineage: u64) -> Result<Self, FlowError> {
        if lambdas.is_empty() {
            return Err(FlowError::Dimension("empty spectrum".into()));
        }
        for k in 1..lambdas.len() {
            if !(lambdas[k - 1] > lambdas[k]) {
                return Err(FlowError::Unordered);
            }
        }
        Ok(DbmFlow { t: 0.0, lambdas, beta, dt_last: 0.0, noise_counter: 0, noise_lineage })
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    fn drift(&self, lambdas: &[f64], out: &mut [f64]) {
        let n = lambdas.len();
        let inv_n = 1.0 / n as f64;
        for i in 0..n {
            let mut interaction = 0.0;
            for j in 0..n {
                if j != i {
                    interaction += 1.0 / (lambdas[i] - lambdas[j]);
                }
            }
            out[i] = inv_n * interaction - 0.5 * lambdas[i];
        }
    }

    fn fresh_noise(&mut self, ctx: &SeedContext, out: &mut [f64]) {
        let stream = Stream::DbmNoise(self.noise_counter);
        for (i, o) in out.iter_mut().enumerate() {
            let mut rng: CounterRng = ctx.rng_at(stream, self.noise_lineage, i as u64);
            *o = StandardNormal.sample(&mut rng);
        }
        self.noise_counter += 1;
    }

    /// Whether moving from `lam` by `moves` keeps strict ordering and stays
    /// within the allowed fraction of each local gap.
    fn acceptable(lam: &[f64], moves: &[f64]) -> bool {
        let n = lam.len();
        if n == 1 {
            return true;
        }
        for i in 0..n {
            let mut gap = f64::INFINITY;
            if i > 0 {
                gap = gap.min(lam[i - 1] - lam[i]);
            }
            if i + 1 < n {
                gap = gap.min(lam[i] - lam[i + 1]);
            }
            if moves[i].abs() > GAP_FRACTION * gap {
                return false;
            }
        }
        for i in 1..n {
            if !(lam[i - 1] + moves[i - 1] > lam[i] + moves[i]) {
                return false;
            }
        }
        true
    }

    fn min_gap(lam: &[f64]) -> f64 {
        lam.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
    }

    /// Advance over `dt` with the Brownian increment `w` (variance `dt` per
    /// coordinate), recursively splitting the increment as a bridge when the
    /// proposed move violates the ordering contract.
    fn step_with_increment(
        &mut self,
        ctx: &SeedContext,
        dt: f64,
        w: &[f64],
        depth: u32,
    ) -> Result<(), FlowError> {
        let n = self.n();
        let noise_scale = (self.beta.value() / (2.0 * n as f64)).sqrt();
        let mut drift = vec![0.0; n];
        self.drift(&self.lambdas.clone(), &mut drift);
        let moves: Vec<f64> = (0..n).map(|i| drift[i] * dt + noise_scale * w[i]).collect();
        if Self::acceptable(&self.lambdas, &moves) {
            for i in 0..n {
                self.lambdas[i] += moves[i];
            }
            debug_assert!(self.lambdas.windows(2).all(|p| p[0] > p[1]));
            return Ok(());
        }
        if depth >= MAX_SPLIT_DEPTH {
            return Err(FlowError::SubstepLimit { min_gap: Self::min_gap(&self.lambdas) });
        }
        // bridge split: W = W1 + W2 with W1 ~ N(W/2, dt/4)
        let mut z = vec![0.0; n];
        self.fresh_noise(ctx, &mut z);
        let half_sd = 0.5 * dt.sqrt();
        let w1: Vec<f64> = (0..n).map(|i| 0.5 * w[i] + half_sd * z[i]).collect();
        let w2: Vec<f64> = (0..n).map(|i| w[i] - w1[i]).collect();
        self.step_with_increment(ctx, 0.5 * dt, &w1, depth + 1)?;
        self.step_with_increment(ctx, 0.5 * dt, &w2, depth + 1)
    }

    /// One adaptive Euler-Maruyama step of the eigenvalue SDE
    /// `d lambda_i = sqrt(beta/(2N)) db_i + (1/N) sum_{j != i} dt/(lambda_i - lambda_j) - lambda_i/2 dt`.
    pub fn step(&mut self, dt: f64, ctx: &SeedContext) -> Result<(), FlowError> {
        if !dt.is_finite() || dt < 0.0 {
            return Err(FlowError::BadTimeStep(dt));
        }
        if dt == 0.0 {
            self.dt_last = 0.0;
            return Ok(());
        }
        let mut w = vec![0.0; self.n()];
        self.fresh_noise(ctx, &mut w);
        let root_dt = dt.sqrt();
        for v in w.iter_mut() {
            *v *= root_dt;
        }
        self.step_with_increment(ctx, dt, &w, 0)?;
        self.t += dt;
        self.dt_last = dt;
        Ok(())
    }
}

/// Absolute overlaps `|<pad(w_i^(N1)), w_j^(N2)>|` for `i, j < i_max`, the
/// shorter vectors zero-padded.
pub fn overlap_matrix<S: Scalar>(
    w1: &Array2<S>,
    w2: &Array2<S>,
    i_max: usize,
) -> Result<Array2<f64>, FlowError> {
    let n1 = w1.nrows();
    let n2 = w2.nrows();
    if n1 > n2 {
        return Err(FlowError::Dimension(format!("need N1 <= N2, got {n1} > {n2}")));
    }
    if i_max > w1.ncols() || i_max > w2.ncols() {
        return Err(FlowError::OverlapRange { i_max, cols: w1.ncols().min(w2.ncols()) });
    }
    let mut out = Array2::<f64>::zeros((i_max, i_max));
    for i in 0..i_max {
        for j in 0..i_max {
            let mut acc = S::zero();
            for k in 0..n1 {
                acc = acc + w1[[k, i]].conj() * w2[[k, j]];
            }
            out[[i, j]] = acc.abs2().sqrt();
        }
    }
    Ok(out)
}

/// Checkpoint diagnostics of a coupled pair of flowing minors.
#[derive(Debug, Clone)]
pub struct OverlapReport {
    pub t: f64,
    pub n1: usize,
    pub n2: usize,
    /// `|<w_i^(N1), w_j^(N2)>|` for `i, j < i_max`.
    pub overlaps: Array2<f64>,
    pub top_value_1: f64,
    pub top_value_2: f64,
    /// `|lambda_1^(N1) - lambda_1^(N2)|` in the raw convention.
    pub top_gap: f64,
}

/// Evolve the shared array in matrix mode and diagonalize both minors at
/// each checkpoint, reporting eigenvector overlaps and the top-eigenvalue
/// gap. Checkpoints must be nondecreasing within `[0, t_end]`.
pub fn run_coupled_minor_flow<S: DenseEigh>(
    n1: usize,
    n2: usize,
    spec: &EnsembleSpec,
    ctx: &SeedContext,
    t_end: f64,
    checkpoints: &[f64],
    dt: f64,
    i_max: usize,
) -> Result<Vec<OverlapReport>, FlowError> {
    if n1 == 0 || n1 > n2 {
        return Err(FlowError::Dimension(format!("need 1 <= N1 <= N2, got {n1}, {n2}")));
    }
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(FlowError::BadTimeStep(dt));
    }
    for w in checkpoints.windows(2) {
        if w[1] < w[0] {
            return Err(FlowError::Dimension("checkpoints must be sorted".into()));
        }
    }
    if let Some(&last) = checkpoints.last() {
        if last > t_end + 1e-12 {
            return Err(FlowError::Dimension("checkpoint beyond t_end".into()));
        }
    }
    let mut flow = MatrixFlow::<S>::from_spec(n2, spec, ctx)?;
    let mut reports = Vec::with_capacity(checkpoints.len());
    for &cp in checkpoints {
        while flow.t < cp - 1e-15 {
            let step = dt.min(cp - flow.t);
            flow.ou_step(step, spec, ctx)?;
        }
        let h2 = flow.wigner();
        let h1_block = flow.x.slice(s![..n1, ..n1]).mapv(|v| v.scale_re(1.0 / (n1 as f64).sqrt()));
        let (vals2, vecs2) = eigh_desc(&h2)?;
        let (vals1, vecs1) = eigh_desc(&h1_block)?;
        let overlaps = overlap_matrix(&vecs1, &vecs2, i_max)?;
        reports.push(OverlapReport {
            t: flow.t,
            n1,
            n2,
            overlaps,
            top_value_1: vals1[0],
            top_value_2: vals2[0],
            top_gap: (vals1[0] - vals2[0]).abs(),
        });
    }
    Ok(reports)
}
