//! Top-eigenpair solvers for large minors.
//!
//! The incremental engine carries the full eigenbasis, which is what the
//! bordered representation needs, but several experiments only consume the
//! top eigenvalue (and occasionally the top eigenvector) of many nested
//! minors. For those, a Lanczos iteration with full reorthogonalization is
//! much cheaper: a cold start costs `O(n^2)` per iteration with under a
//! hundred iterations at the sizes used here, and growing a minor by one row
//! warm-starts from the previous top eigenvector in a handful of iterations.
//! The tracker below shares the entry array with the full engine, so both
//! routes see identical matrices.

use crate::ensemble::{array_entry, seed::CounterRng, seed::SeedContext, EnsembleSpec};
use crate::error::EngineError;
use crate::minor_engine::StepRow;
use crate::scalar::Scalar;
use crate::stats_lab::scale_top;
use ndarray::Array1;

/// Result of a converged top-eigenpair iteration.
#[derive(Debug, Clone)]
pub struct TopEigenpair<S: Scalar> {
    pub value: f64,
    pub vector: Array1<S>,
    pub iterations: usize,
    pub residual: f64,
}

fn dstevd_full(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>), EngineError> {
    // eigenvalues ascending and the corresponding eigenvectors (column-major)
    let k = diag.len();
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.resize(k.saturating_sub(1).max(1), 0.0);
    let mut z = vec![0.0f64; k * k];
    let mut info = 0i32;
    let mut wkopt = [0.0f64];
    let mut iwkopt = [0i32];
    unsafe {
        lapack::dstevd(b'V', k as i32, &mut d, &mut e, &mut z, k as i32, &mut wkopt, -1, &mut iwkopt, -1, &mut info);
    }
    if info != 0 {
        return Err(EngineError::Lapack { routine: "dstevd(query)", info });
    }
    let lwork = wkopt[0] as usize;
    let liwork = iwkopt[0] as usize;
    let mut work = vec![0.0f64; lwork.max(1)];
    let mut iwork = vec![0i32; liwork.max(1)];
    unsafe {
        lapack::dstevd(
            b'V',
            k as i32,
            &mut d,
            &mut e,
            &mut z,
            k as i32,
            &mut work,
            lwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    if info != 0 {
        return Err(EngineError::Lapack { routine: "dstevd", info });
    }
    Ok((d, z))
}

#[inline]
fn dot_conj<S: Scalar>(a: &[S], b: &[S]) -> S {
    S::dot_conjugated(a, b)
}

#[inline]
fn norm<S: Scalar>(a: &[S]) -> f64 {
    a.iter().map(|x| x.abs2()).sum::<f64>().sqrt()
}

/// `y = scale * (B x)` for the leading `n x n` block of a row-major buffer
/// with row stride `stride`.
#[inline]
pub fn row_major_matvec<S: Scalar>(buf: &[S], stride: usize, n: usize, scale: f64, x: &[S], y: &mut [S]) {
    for i in 0..n {
        let row = &buf[i * stride..i * stride + n];
        y[i] = S::dot_plain(row, &x[..n]).scale_re(scale);
    }
}

/// Largest eigenpair of a Hermitian operator given through `matvec`.
///
/// Full reorthogonalization against the stored Krylov basis keeps the
/// iteration clean; the returned residual `||A y - theta y||` is measured
/// with one extra operator application.
pub fn lanczos_top<S: Scalar>(
    n: usize,
    mut matvec: impl FnMut(&[S], &mut [S]),
    v0: Option<&[S]>,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<TopEigenpair<S>, EngineError> {
    if n == 0 {
        return Err(EngineError::Dimension("empty operator".into()));
    }
    if n == 1 {
        let mut y = [S::zero()];
        matvec(&[S::one()], &mut y);
        return Ok(TopEigenpair {
            value: y[0].re(),
            vector: Array1::from_elem(1, S::one()),
            iterations: 0,
            residual: 0.0,
        });
    }
    let max_iter = max_iter.min(n);
    let warm = matches!(v0, Some(v) if v.len() == n);
    let mut q = match v0 {
        Some(v) if v.len() == n && norm(v) > 0.0 => v.to_vec(),
        _ => {
            let mut rng = CounterRng::from_key(seed ^ 0x5ca1ab1e_u64.wrapping_mul(0x9e3779b97f4a7c15));
            (0..n).map(|_| S::standard_gaussian(&mut rng)).collect()
        }
    };
    let inv = 1.0 / norm(&q);
    q.iter_mut().for_each(|x| *x = x.scale_re(inv));

    let mut basis: Vec<Vec<S>> = vec![q.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![S::zero(); n];
    let mut op_scale: f64 = 0.0;

    let finish = |theta: f64,
                  s: &[f64],
                  basis: &[Vec<S>],
                  matvec: &mut dyn FnMut(&[S], &mut [S]),
                  iterations: usize|
     -> Result<TopEigenpair<S>, EngineError> {
        let mut y = vec![S::zero(); n];
        for (coeff, qv) in s.iter().zip(basis.iter()) {
            for (yi, qi) in y.iter_mut().zip(qv.iter()) {
                *yi = *yi + qi.scale_re(*coeff);
            }
        }
        let inv = 1.0 / norm(&y);
        y.iter_mut().for_each(|x| *x = x.scale_re(inv));
        let mut ay = vec![S::zero(); n];
        matvec(&y, &mut ay);
        let rayleigh = dot_conj(&y, &ay).re();
        let mut res2 = 0.0;
        for (ai, yi) in ay.iter().zip(y.iter()) {
            let d = *ai - yi.scale_re(rayleigh);
            res2 += d.abs2();
        }
        let _ = theta;
        Ok(TopEigenpair {
            value: rayleigh,
            vector: Array1::from_vec(y),
            iterations,
            residual: res2.sqrt(),
        })
    };

    for k in 0..max_iter {
        matvec(&basis[k], &mut w);
        let alpha = dot_conj(&basis[k], &w).re();
        alphas.push(alpha);
        op_scale = op_scale.max(alpha.abs()).max(norm(&w));
        // subtract the tridiagonal part, then reorthogonalize twice
        for (wi, qi) in w.iter_mut().zip(basis[k].iter()) {
            *wi = *wi - qi.scale_re(alpha);
        }
        if k > 0 {
            let beta_prev = betas[k - 1];
            for (wi, qi) in w.iter_mut().zip(basis[k - 1].iter()) {
                *wi = *wi - qi.scale_re(beta_prev);
            }
        }
        for _ in 0..2 {
            for qv in basis.iter() {
                let c = dot_conj(qv, &w);
                if c.abs2() > 0.0 {
                    for (wi, qi) in w.iter_mut().zip(qv.iter()) {
                        *wi = *wi - *qi * c;
                    }
                }
            }
        }
        let beta = norm(&w);
        let breakdown = beta <= 1e-14 * op_scale.max(1.0);
        // warm starts are usually a few steps from convergence, so probe the
        // Ritz residual early and often; cold starts wait out the transient
        let periodic = if warm { k >= 1 && (k + 1) % 2 == 0 } else { k >= 7 && (k + 1) % 4 == 0 };
        let check = breakdown || k + 1 == max_iter || k + 1 == n || periodic;
        if check {
            let (vals, z) = dstevd_full(&alphas, &betas)?;
            let kk = alphas.len();
            let theta = vals[kk - 1];
            let s = &z[(kk - 1) * kk..kk * kk];
            let resid_est = if breakdown { 0.0 } else { beta * s[kk - 1].abs() };
            if resid_est <= tol * op_scale.max(1.0) || breakdown || k + 1 == n {
                return finish(theta, s, &basis, &mut matvec, k + 1);
            }
            if k + 1 == max_iter {
                // accept only if the true residual is already decent
                let out = finish(theta, s, &basis, &mut matvec, k + 1)?;
                if out.residual <= (tol * 100.0).max(1e-7) * op_scale.max(1.0) {
                    return Ok(out);
                }
                return Err(EngineError::LanczosNoConvergence { max_iter, residual: out.residual });
            }
        }
        betas.push(beta);
        let invb = 1.0 / beta;
        let next: Vec<S> = w.iter().map(|x| x.scale_re(invb)).collect();
        basis.push(next);
    }
    unreachable!("loop returns via convergence, breakdown, or the max_iter branch")
}

/// Symmetric matrix with f32 storage of the upper triangle; matvec
/// accumulates in f64. This keeps the working set small enough to sit in
/// cache for the large single-minor tail samplers.
pub struct PackedSymF32 {
    n: usize,
    data: Vec<f32>,
    scale: f64,
}

impl PackedSymF32 {
    /// Materialize the raw entry array `X^(n)` (unscaled). The matvec applies
    /// the Wigner normalization `1/sqrt(n)`. Real Rademacher ensembles fill
    /// whole 64-column sign words at a time.
    pub fn from_spec(n: usize, spec: &EnsembleSpec, ctx: &SeedContext) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        if spec.entry_dist == crate::ensemble::EntryDist::Rademacher && !spec.beta.is_complex() {
            for i in 0..n {
                let mut j = i;
                let mut word = 0u64;
                let mut have_word = usize::MAX;
                while j < n {
                    let w_idx = j >> 6;
                    if w_idx != have_word {
                        word = ctx.word_at(crate::ensemble::seed::Stream::EntryWord, i as u64, w_idx as u64);
                        have_word = w_idx;
                    }
                    let sign = if (word >> (j & 63)) & 1 == 1 { 1.0f32 } else { -1.0f32 };
                    data.push(if j == i { sign * std::f32::consts::SQRT_2 } else { sign });
                    j += 1;
                }
            }
        } else {
            for i in 0..n {
                for j in i..n {
                    data.push(array_entry::<f64>(spec, ctx, i, j) as f32);
                }
            }
        }
        PackedSymF32 { n, data, scale: 1.0 / (n as f64).sqrt() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Single-precision symmetric matvec on the packed triangle. Mixed-width
    /// arithmetic defeats the loop vectorizer, so the kernel stays in f32
    /// end to end.
    pub fn matvec_f32(&self, x: &[f32], y: &mut [f32]) {
        let n = self.n;
        y[..n].fill(0.0);
        let mut base = 0usize;
        for i in 0..n {
            let xi = x[i];
            let row = &self.data[base..base + (n - i)];
            let mut diag_plus = row[0] * xi;
            let tail = &row[1..];
            let xs = &x[i + 1..n];
            let mut acc = [0.0f32; 16];
            let mut ti = tail.chunks_exact(16);
            let mut si = xs.chunks_exact(16);
            for (tc, sc) in (&mut ti).zip(&mut si) {
                for l in 0..16 {
                    acc[l] += tc[l] * sc[l];
                }
            }
            for (a, b) in ti.remainder().iter().zip(si.remainder()) {
                diag_plus += a * b;
            }
            let mut fold = 0.0f32;
            for l in 0..16 {
                fold += acc[l];
            }
            y[i] += diag_plus + fold;
            let ys = &mut y[i + 1..n];
            let mut ti = tail.chunks_exact(16);
            let mut yi = ys.chunks_exact_mut(16);
            for (tc, yc) in (&mut ti).zip(&mut yi) {
                for l in 0..16 {
                    yc[l] += tc[l] * xi;
                }
            }
            for (a, yv) in ti.remainder().iter().zip(yi.into_remainder()) {
                *yv += a * xi;
            }
            base += n - i;
        }
        let s = self.scale as f32;
        for v in y[..n].iter_mut() {
            *v *= s;
        }
    }

    /// f64 boundary wrapper used by the Lanczos driver; conversion happens
    /// once per application, outside the hot loops.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let mut x32 = vec![0.0f32; self.n];
        let mut y32 = vec![0.0f32; self.n];
        for (dst, src) in x32.iter_mut().zip(x.iter()) {
            *dst = *src as f32;
        }
        self.matvec_f32(&x32, &mut y32);
        for (dst, src) in y.iter_mut().zip(y32.iter()) {
            *dst = *src as f64;
        }
    }
}

/// Top eigenvalue of `H^(n)` computed through the packed f32 representation;
/// used by the large-N real tail samplers. The single-precision operator
/// bounds the achievable residual near `1e-5 * ||H||`, which resolves the
/// eigenvalue to well below the tail-level granularity.
pub fn top_eigenvalue_packed(
    n: usize,
    spec: &EnsembleSpec,
    ctx: &SeedContext,
    tol: f64,
    max_iter: usize,
) -> Result<f64, EngineError> {
    let m = PackedSymF32::from_spec(n, spec, ctx);
    let mut x32 = vec![0.0f32; n];
    let mut y32 = vec![0.0f32; n];
    let out = lanczos_top::<f64>(
        n,
        |x, y| {
            for (dst, src) in x32.iter_mut().zip(x.iter()) {
                *dst = *src as f32;
            }
            m.matvec_f32(&x32, &mut y32);
            for (dst, src) in y.iter_mut().zip(y32.iter()) {
                *dst = *src as f64;
            }
        },
        None,
        tol.max(2e-5),
        max_iter,
        ctx.master_seed() ^ n as u64,
    )?;
    Ok(out.value)
}

/// Tracks `(lambda_1, w_1)` along the minor process by warm-started Lanczos
/// on the growing shared array. Produces the same per-step scalars as the
/// full engine without maintaining the complete eigenbasis.
pub struct MinorEdgeTracker<S: Scalar> {
    spec: EnsembleSpec,
    ctx: SeedContext,
    n_max: usize,
    n: usize,
    /// row-major `n_max x n_max` buffer holding raw array entries up to `n`
    buf: Vec<S>,
    top_value: f64,
    top_vec: Vec<S>,
    tol: f64,
}

impl<S: Scalar> MinorEdgeTracker<S> {
    pub fn new(
        n_start: usize,
        n_max: usize,
        spec: &EnsembleSpec,
        ctx: &SeedContext,
        tol: f64,
    ) -> Result<Self, EngineError> {
        if n_start < 1 || n_max < n_start {
            return Err(EngineError::Dimension(format!("need 1 <= n_start <= n_max, got {n_start}, {n_max}")));
        }
        spec.validate().map_err(EngineError::Ensemble)?;
        let mut buf = vec![S::zero(); n_max * n_max];
        for i in 0..n_start {
            for j in i..n_start {
                let v = array_entry::<S>(spec, ctx, i, j);
                buf[i * n_max + j] = v;
                buf[j * n_max + i] = v.conj();
            }
        }
        let mut tracker = MinorEdgeTracker {
            spec: spec.clone(),
            ctx: *ctx,
            n_max,
            n: n_start,
            buf,
            top_value: 0.0,
            top_vec: Vec::new(),
            tol,
        };
        let out = tracker.solve_top(None)?;
        tracker.top_value = out.value;
        tracker.top_vec = out.vector.to_vec();
        Ok(tracker)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn top_value(&self) -> f64 {
        self.top_value
    }

    pub fn top_vector(&self) -> &[S] {
        &self.top_vec
    }

    fn matvec(&self, x: &[S], y: &mut [S]) {
        let n = self.n;
        let scale = 1.0 / (n as f64).sqrt();
        row_major_matvec(&self.buf, self.n_max, n, scale, x, y);
    }

    fn solve_top(&self, v0: Option<&[S]>) -> Result<TopEigenpair<S>, EngineError> {
        let n = self.n;
        let max_iter = 600.min(n);
        lanczos_top::<S>(
            n,
            |x, y| self.matvec(x, y),
            v0,
            self.tol,
            max_iter,
            self.ctx.master_seed() ^ (n as u64).rotate_left(17),
        )
    }

    /// Grow the minor by one row/column and return the new step scalars.
    pub fn advance(&mut self) -> Result<StepRow, EngineError> {
        let n_new = self.n + 1;
        if n_new > self.n_max {
            return Err(EngineError::Dimension(format!("tracker capacity {} exceeded", self.n_max)));
        }
        let col = n_new - 1;
        // border projection onto the previous top eigenvector: the raw border
        // entries make xi = <w_1, x_col> directly
        let mut xi1 = S::zero();
        for i in 0..self.n {
            let x_i = array_entry::<S>(&self.spec, &self.ctx, i, col);
            self.buf[i * self.n_max + col] = x_i;
            self.buf[col * self.n_max + i] = x_i.conj();
            xi1 = xi1 + self.top_vec[i].conj() * x_i;
        }
        let diag = array_entry::<S>(&self.spec, &self.ctx, col, col);
        self.buf[col * self.n_max + col] = diag;
        self.n = n_new;

        // warm start from the padded previous eigenvector plus a whiff of
        // noise so the Krylov space always reaches the new coordinate
        let mut v0: Vec<S> = Vec::with_capacity(n_new);
        v0.extend_from_slice(&self.top_vec);
        v0.push(S::zero());
        let mut rng = CounterRng::from_key(self.ctx.master_seed() ^ (n_new as u64).wrapping_mul(0x2545f4914f6cdd1d));
        for v in v0.iter_mut() {
            *v = *v + S::standard_gaussian(&mut rng).scale_re(1e-6);
        }
        let out = self.solve_top(Some(&v0))?;
        self.top_value = out.value;
        self.top_vec = out.vector.to_vec();
        // same reciprocal-multiply form as the engine's border scaling, so
        // both routes record bit-identical corner entries
        let h_nn = diag.re() * (1.0 / (n_new as f64).sqrt());
        Ok(StepRow {
            n: n_new,
            lambda_raw: out.value,
            lambda_scaled: scale_top(out.value, n_new),
            xi1_sq: xi1.abs2(),
            h_nn,
            corner_mass: self.top_vec[n_new - 1].abs2(),
        })
    }
}

/// Top eigenvalues of the nested minors `H^(sizes[0]), H^(sizes[1]), ...`
/// of one shared array (sizes ascending), warm-starting each solve from the
/// zero-padded previous top eigenvector.
pub fn minor_top_values<S: Scalar>(
    spec: &EnsembleSpec,
    ctx: &SeedContext,
    sizes: &[usize],
    tol: f64,
) -> Result<Vec<f64>, EngineError> {
    if sizes.is_empty() {
        return Ok(Vec::new());
    }
    for k in 1..sizes.len() {
        if sizes[k] <= sizes[k - 1] {
            return Err(EngineError::Dimension("sizes must be strictly increasing".into()));
        }
    }
    let n_max = *sizes.last().unwrap();
    let mut buf = vec![S::zero(); n_max * n_max];
    for i in 0..n_max {
        for j in i..n_max {
            let v = array_entry::<S>(spec, ctx, i, j);
            buf[i * n_max + j] = v;
            buf[j * n_max + i] = v.conj();
        }
    }
    let mut out = Vec::with_capacity(sizes.len());
    let mut prev_vec: Option<Vec<S>> = None;
    for &n in sizes {
        let scale = 1.0 / (n as f64).sqrt();
        let matvec = |x: &[S], y: &mut [S]| row_major_matvec(&buf, n_max, n, scale, x, y);
        let v0: Option<Vec<S>> = prev_vec.as_ref().map(|v| {
            let mut padded = v.clone();
            padded.resize(n, S::zero());
            let mut rng = CounterRng::from_key(ctx.master_seed() ^ (n as u64).wrapping_mul(0x9e3779b97f4a7c15));
            for x in padded.iter_mut() {
                *x = *x + S::standard_gaussian(&mut rng).scale_re(1e-6);
            }
            padded
        });
        let solved = lanczos_top::<S>(
            n,
            matvec,
            v0.as_deref(),
            tol,
            600.min(n),
            ctx.master_seed() ^ (n as u64).rotate_left(23),
        )?;
        out.push(solved.value);
        prev_vec = Some(solved.vector.to_vec());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{eigh_desc, eigvalsh_desc};
    use crate::ensemble::{materialize_wigner, Beta, EntryDist};
    use num_complex::Complex64;

    fn gspec(beta: Beta, dist: EntryDist, seed: u64) -> EnsembleSpec {
        EnsembleSpec { beta, entry_dist: dist, profile: None, deformation: None, master_seed: seed }
    }

    #[test]
    fn lanczos_matches_dense_real() {
        let spec = gspec(Beta::One, EntryDist::Gaussian, 21);
        let ctx = spec.context();
        let h = materialize_wigner::<f64>(120, &spec, &ctx).unwrap();
        let dense_top = eigvalsh_desc(&h).unwrap()[0];
        let out = lanczos_top::<f64>(
            120,
            |x, y| {
                for i in 0..120 {
                    let mut acc = 0.0;
                    for j in 0..120 {
                        acc += h[[i, j]] * x[j];
                    }
                    y[i] = acc;
                }
            },
            None,
            1e-11,
            400,
            9,
        )
        .unwrap();
        assert!((out.value - dense_top).abs() < 1e-9, "{} vs {}", out.value, dense_top);
        assert!(out.residual < 1e-8);
    }

    #[test]
    fn lanczos_matches_dense_complex() {
        let spec = gspec(Beta::Two, EntryDist::Gaussian, 22);
        let ctx = spec.context();
        let n = 90;
        let h = materialize_wigner::<Complex64>(n, &spec, &ctx).unwrap();
        let (dense_vals, dense_vecs) = eigh_desc(&h).unwrap();
        let out = lanczos_top::<Complex64>(
            n,
            |x, y| {
                for i in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..n {
                        acc += h[[i, j]] * x[j];
                    }
                    y[i] = acc;
                }
            },
            None,
            1e-11,
            400,
            5,
        )
        .unwrap();
        assert!((out.value - dense_vals[0]).abs() < 1e-9);
        // vector agrees up to phase
        let mut overlap = Complex64::new(0.0, 0.0);
        for i in 0..n {
            overlap += dense_vecs[[i, 0]].conj() * out.vector[i];
        }
        assert!(overlap.norm() > 1.0 - 1e-8);
    }

    #[test]
    fn packed_matvec_matches_dense() {
        let spec = gspec(Beta::One, EntryDist::Rademacher, 33);
        let ctx = spec.context();
        let n = 60;
        let h = materialize_wigner::<f64>(n, &spec, &ctx).unwrap();
        let m = PackedSymF32::from_spec(n, &spec, &ctx);
        let x: Vec<f64> = (0..n).map(|i| ((i * 37 + 11) % 19) as f64 / 19.0 - 0.5).collect();
        let mut y = vec![0.0; n];
        m.matvec(&x, &mut y);
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += h[[i, j]] * x[j];
            }
            assert!((acc - y[i]).abs() < 1e-6, "row {i}: {acc} vs {}", y[i]);
        }
    }

    #[test]
    fn packed_top_matches_dense() {
        let spec = gspec(Beta::One, EntryDist::Rademacher, 44);
        let ctx = spec.context();
        let n = 200;
        let h = materialize_wigner::<f64>(n, &spec, &ctx).unwrap();
        let dense_top = eigvalsh_desc(&h).unwrap()[0];
        let fast = top_eigenvalue_packed(n, &spec, &ctx, 1e-9, 500).unwrap();
        // single-precision operator: accuracy floor near 1e-5 * ||H||
        assert!((fast - dense_top).abs() < 2e-4, "{fast} vs {dense_top}");
    }

    #[test]
    fn tracker_matches_dense_path() {
        let spec = gspec(Beta::Two, EntryDist::Gaussian, 55);
        let ctx = spec.context();
        let mut tracker = MinorEdgeTracker::<Complex64>::new(30, 48, &spec, &ctx, 1e-11).unwrap();
        for n in 31..=48usize {
            let step = tracker.advance().unwrap();
            assert_eq!(step.n, n);
            let h = materialize_wigner::<Complex64>(n, &spec, &ctx).unwrap();
            let dense_top = eigvalsh_desc(&h).unwrap()[0];
            assert!((step.lambda_raw - dense_top).abs() < 1e-8, "n {n}: {} vs {}", step.lambda_raw, dense_top);
            assert!(step.xi1_sq >= 0.0);
            assert!(step.corner_mass >= 0.0 && step.corner_mass <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn tracker_xi_matches_engine_definition() {
        // xi_1 from the tracker equals sqrt(n) <w_1, a> computed densely
        let spec = gspec(Beta::One, EntryDist::Gaussian, 66);
        let ctx = spec.context();
        let n0 = 25;
        let mut tracker = MinorEdgeTracker::<f64>::new(n0, n0 + 1, &spec, &ctx, 1e-12).unwrap();
        let h = materialize_wigner::<f64>(n0, &spec, &ctx).unwrap();
        let (_, vecs) = eigh_desc(&h).unwrap();
        let step = tracker.advance().unwrap();
        let (border, _) = crate::ensemble::sample_border::<f64>(n0 + 1, &spec, &ctx).unwrap();
        let mut xi = 0.0;
        for i in 0..n0 {
            xi += vecs[[i, 0]] * border[i];
        }
        assert!((step.xi1_sq - xi * xi).abs() < 1e-8, "{} vs {}", step.xi1_sq, xi * xi);
    }

    #[test]
    fn minor_top_values_warm_chain() {
        let spec = gspec(Beta::One, EntryDist::Gaussian, 77);
        let ctx = spec.context();
        let sizes = [40usize, 44, 60];
        let vals = minor_top_values::<f64>(&spec, &ctx, &sizes, 1e-10).unwrap();
        for (k, &n) in sizes.iter().enumerate() {
            let h = materialize_wigner::<f64>(n, &spec, &ctx).unwrap();
            let dense_top = eigvalsh_desc(&h).unwrap()[0];
            assert!((vals[k] - dense_top).abs() < 1e-8);
        }
    }
}
