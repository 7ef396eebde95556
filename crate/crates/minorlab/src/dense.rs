//! Dense Hermitian eigensolver used as the reference oracle and for basis
//! refreshes: LAPACK divide-and-conquer (`dsyevd` / `zheevd`) on column-major
//! copies. Eigenvalues are returned in descending order to match the engine
//! convention.

use crate::error::EngineError;
use crate::scalar::Scalar;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use std::sync::OnceLock;

extern "C" {
    fn openblas_set_num_threads(num: i32);
}

/// Pin BLAS to one thread; parallelism lives at the sample level.
pub fn ensure_single_thread_blas() {
    static ONCE: OnceLock<()> = OnceLock::new();
    ONCE.get_or_init(|| unsafe {
        openblas_set_num_threads(1);
    });
}

pub trait DenseEigh: Scalar {
    /// Eigendecomposition of a Hermitian matrix given in column-major order.
    /// `jobz_v` selects whether eigenvectors are computed in place.
    fn heevd(a: &mut [Self], n: usize, w: &mut [f64], vectors: bool) -> Result<(), EngineError>;
}

impl DenseEigh for f64 {
    fn heevd(a: &mut [f64], n: usize, w: &mut [f64], vectors: bool) -> Result<(), EngineError> {
        ensure_single_thread_blas();
        let jobz = if vectors { b'V' } else { b'N' };
        let ni = n as i32;
        let mut info = 0i32;
        // workspace query
        let mut wkopt = [0.0f64];
        let mut iwkopt = [0i32];
        unsafe {
            lapack::dsyevd(jobz, b'L', ni, a, ni, w, &mut wkopt, -1, &mut iwkopt, -1, &mut info);
        }
        if info != 0 {
            return Err(EngineError::Lapack { routine: "dsyevd(query)", info });
        }
        let lwork = wkopt[0] as usize;
        let liwork = iwkopt[0] as usize;
        let mut work = vec![0.0f64; lwork.max(1)];
        let mut iwork = vec![0i32; liwork.max(1)];
        unsafe {
            lapack::dsyevd(
                jobz,
                b'L',
                ni,
                a,
                ni,
                w,
                &mut work,
                lwork as i32,
                &mut iwork,
                liwork as i32,
                &mut info,
            );
        }
        if info != 0 {
            return Err(EngineError::Lapack { routine: "dsyevd", info });
        }
        Ok(())
    }
}

impl DenseEigh for Complex64 {
    fn heevd(a: &mut [Complex64], n: usize, w: &mut [f64], vectors: bool) -> Result<(), EngineError> {
        ensure_single_thread_blas();
        let jobz = if vectors { b'V' } else { b'N' };
        let ni = n as i32;
        let mut info = 0i32;
        let mut wkopt = [Complex64::new(0.0, 0.0)];
        let mut rwkopt = [0.0f64];
        let mut iwkopt = [0i32];
        unsafe {
            lapack::zheevd(
                jobz, b'L', ni, a, ni, w, &mut wkopt, -1, &mut rwkopt, -1, &mut iwkopt, -1,
                &mut info,
            );
        }
        if info != 0 {
            return Err(EngineError::Lapack { routine: "zheevd(query)", info });
        }
        let lwork = wkopt[0].re as usize;
        let lrwork = rwkopt[0] as usize;
        let liwork = iwkopt[0] as usize;
        let mut work = vec![Complex64::new(0.0, 0.0); lwork.max(1)];
        let mut rwork = vec![0.0f64; lrwork.max(1)];
        let mut iwork = vec![0i32; liwork.max(1)];
        unsafe {
            lapack::zheevd(
                jobz,
                b'L',
                ni,
                a,
                ni,
                w,
                &mut work,
                lwork as i32,
                &mut rwork,
                lrwork as i32,
                &mut iwork,
                liwork as i32,
                &mut info,
            );
        }
        if info != 0 {
            return Err(EngineError::Lapack { routine: "zheevd", info });
        }
        Ok(())
    }
}

fn to_col_major<S: Scalar>(h: &Array2<S>) -> (usize, Vec<S>) {
    let n = h.nrows();
    let mut buf = vec![S::zero(); n * n];
    for j in 0..n {
        for i in 0..n {
            buf[i + j * n] = h[[i, j]];
        }
    }
    (n, buf)
}

/// Full eigendecomposition, eigenvalues descending, eigenvector `k` in column `k`.
pub fn eigh_desc<S: DenseEigh>(h: &Array2<S>) -> Result<(Array1<f64>, Array2<S>), EngineError> {
    let (n, mut buf) = to_col_major(h);
    if n == 0 || h.ncols() != n {
        return Err(EngineError::Dimension(format!("{}x{}", h.nrows(), h.ncols())));
    }
    let mut w = vec![0.0f64; n];
    S::heevd(&mut buf, n, &mut w, true)?;
    // LAPACK is ascending; flip.
    let values = Array1::from_shape_fn(n, |k| w[n - 1 - k]);
    let vectors = Array2::from_shape_fn((n, n), |(i, k)| buf[i + (n - 1 - k) * n]);
    Ok((values, vectors))
}

/// Eigenvalues only, descending.
pub fn eigvalsh_desc<S: DenseEigh>(h: &Array2<S>) -> Result<Array1<f64>, EngineError> {
    let (n, mut buf) = to_col_major(h);
    if n == 0 || h.ncols() != n {
        return Err(EngineError::Dimension(format!("{}x{}", h.nrows(), h.ncols())));
    }
    let mut w = vec![0.0f64; n];
    S::heevd(&mut buf, n, &mut w, false)?;
    let values = Array1::from_shape_fn(n, |k| w[n - 1 - k]);
    Ok(values)
}

/// Compensated (Neumaier) summation; used where sums enter tight identities.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{materialize_wigner, Beta, EnsembleSpec, EntryDist};
    use num_complex::Complex64;

    fn residual<S: DenseEigh>(h: &Array2<S>, vals: &Array1<f64>, vecs: &Array2<S>) -> f64 {
        let hv = h.dot(vecs);
        let mut worst: f64 = 0.0;
        for k in 0..h.nrows() {
            let mut acc = 0.0f64;
            for i in 0..h.nrows() {
                let d = hv[[i, k]] - vecs[[i, k]].scale_re(vals[k]);
                acc += d.abs2();
            }
            worst = worst.max(acc.sqrt());
        }
        worst
    }

    #[test]
    fn real_eigh_residual_and_order() {
        let spec = EnsembleSpec {
            beta: Beta::One,
            entry_dist: EntryDist::Gaussian,
            profile: None,
            deformation: None,
            master_seed: 5,
        };
        let h = materialize_wigner::<f64>(40, &spec, &spec.context()).unwrap();
        let (vals, vecs) = eigh_desc(&h).unwrap();
        for k in 1..vals.len() {
            assert!(vals[k - 1] >= vals[k]);
        }
        assert!(residual(&h, &vals, &vecs) < 1e-12);
        let only = eigvalsh_desc(&h).unwrap();
        for k in 0..vals.len() {
            assert!((only[k] - vals[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_eigh_residual() {
        let spec = EnsembleSpec {
            beta: Beta::Two,
            entry_dist: EntryDist::Gaussian,
            profile: None,
            deformation: None,
            master_seed: 6,
        };
        let h = materialize_wigner::<Complex64>(40, &spec, &spec.context()).unwrap();
        let (vals, vecs) = eigh_desc(&h).unwrap();
        assert!(residual(&h, &vals, &vecs) < 1e-12);
        // eigenvalues of a Hermitian matrix are real and here descending
        for k in 1..vals.len() {
            assert!(vals[k - 1] >= vals[k]);
        }
    }

    #[test]
    fn one_by_one_matrix() {
        let h = Array2::from_elem((1, 1), 3.5f64);
        let (vals, vecs) = eigh_desc(&h).unwrap();
        assert_eq!(vals[0], 3.5);
        assert!((vecs[[0, 0]].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn neumaier_sums_cancelations() {
        let s = neumaier_sum([1e16, 1.0, -1e16]);
        assert_eq!(s, 1.0);
    }
}
