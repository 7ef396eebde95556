//! Seed-addressable sampling of the shared infinite entry array and its
//! finite minors.
//!
//! The array `X` is symmetric (`x_ij = conj(x_ji)`) with centered entries,
//! off-diagonal variance `E |x_ij|^2 = 1` and diagonal variance `2` in the
//! real class, `1` in the complex class. Minors are nested: `H^(N)` is the
//! rescaled upper-left `N x N` corner, so consecutive matrices share all but
//! one row and column. Entries are generated by address, never stored, which
//! makes concurrent samplers trivially consistent.

pub mod seed;

use crate::error::EnsembleError;
use crate::scalar::Scalar;
use ndarray::{Array1, Array2};
use seed::SeedContext;
use serde::{Deserialize, Serialize};

/// Symmetry class: real symmetric (`beta = 1`) or complex Hermitian (`beta = 2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Beta {
    One,
    Two,
}

impl Beta {
    pub fn value(self) -> f64 {
        match self {
            Beta::One => 1.0,
            Beta::Two => 2.0,
        }
    }

    pub fn is_complex(self) -> bool {
        matches!(self, Beta::Two)
    }
}

impl TryFrom<u8> for Beta {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Beta::One),
            2 => Ok(Beta::Two),
            other => Err(format!("beta must be 1 or 2, got {other}")),
        }
    }
}

impl From<Beta> for u8 {
    fn from(b: Beta) -> u8 {
        match b {
            Beta::One => 1,
            Beta::Two => 2,
        }
    }
}

/// Entry distribution family; every family is standardized to the exact
/// target variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryDist {
    Gaussian,
    Rademacher,
    Uniform,
}

/// Variance profile `Sigma` with entries in `[c, C]`, `c > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileSpec {
    Constant { value: f64 },
}

impl ProfileSpec {
    pub fn value_at(&self, _i: usize, _j: usize) -> f64 {
        match self {
            ProfileSpec::Constant { value } => *value,
        }
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        match self {
            ProfileSpec::Constant { value } => {
                if !value.is_finite() || *value <= 0.0 {
                    return Err(EnsembleError::InvalidProfile(format!(
                        "profile entries must be positive and finite, got {value}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Bounded diagonal deformation sequence `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DeformationSpec {
    Constant { value: f64 },
    /// `a_i = amplitude * (-1)^i`, i.e. `(+a, -a, +a, ...)`.
    Alternating { amplitude: f64 },
}

impl DeformationSpec {
    pub fn value_at(&self, i: usize) -> f64 {
        match self {
            DeformationSpec::Constant { value } => *value,
            DeformationSpec::Alternating { amplitude } => {
                if i % 2 == 0 {
                    *amplitude
                } else {
                    -*amplitude
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        let v = match self {
            DeformationSpec::Constant { value } => *value,
            DeformationSpec::Alternating { amplitude } => *amplitude,
        };
        if !v.is_finite() {
            return Err(EnsembleError::InvalidProfile(
                "deformation must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Generative contract for one realization of the doubly infinite array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub beta: Beta,
    pub entry_dist: EntryDist,
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
    #[serde(default)]
    pub deformation: Option<DeformationSpec>,
    pub master_seed: u64,
}

impl EnsembleSpec {
    pub fn gaussian(beta: Beta, master_seed: u64) -> Self {
        EnsembleSpec {
            beta,
            entry_dist: EntryDist::Gaussian,
            profile: None,
            deformation: None,
            master_seed,
        }
    }

    pub fn context(&self) -> SeedContext {
        SeedContext::new(self.master_seed)
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        if let Some(p) = &self.profile {
            p.validate()?;
        }
        if let Some(d) = &self.deformation {
            d.validate()?;
        }
        Ok(())
    }

    /// Short stable digest used in run manifests and trajectory metadata.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let repr = serde_json::to_string(self).expect("spec serializes");
        let hash = Sha256::digest(repr.as_bytes());
        hex_prefix(&hash, 8)
    }

    fn check_scalar<S: Scalar>(&self) -> Result<(), EnsembleError> {
        if self.beta.is_complex() != S::IS_COMPLEX {
            return Err(EnsembleError::SymmetryMismatch {
                beta: self.beta.value() as u8,
                complex_storage: S::IS_COMPLEX,
            });
        }
        Ok(())
    }
}

fn hex_prefix(bytes: &[u8], len: usize) -> String {
    bytes.iter().take(len).map(|b| format!("{b:02x}")).collect()
}

/// Unscaled array entry at 0-based position `(i, j)` of the upper triangle
/// (`i <= j`). Entries below the diagonal follow by conjugate symmetry.
#[inline]
pub fn array_entry<S: Scalar>(spec: &EnsembleSpec, ctx: &SeedContext, i: usize, j: usize) -> S {
    debug_assert!(i <= j);
    if i == j {
        let base = S::sample_diag_unit(spec.entry_dist, ctx, i as u64);
        let scale = if spec.beta.is_complex() { 1.0 } else { std::f64::consts::SQRT_2 };
        S::from_re(base * scale)
    } else {
        S::sample_offdiag(spec.entry_dist, ctx, i as u64, j as u64)
    }
}

/// Entries of row `n` of the array: the border column `x_{1,n}..x_{n-1,n}`
/// (0-based: positions `(k, n-1)` for `k < n-1`) and the diagonal `x_{n,n}`.
/// Values are unscaled array entries; deterministic in `(master_seed, n)`.
pub fn sample_border<S: Scalar>(
    n: usize,
    spec: &EnsembleSpec,
    ctx: &SeedContext,
) -> Result<(Array1<S>, f64), EnsembleError> {
    spec.check_scalar::<S>()?;
    if n == 0 {
        return Err(EnsembleError::EmptyMatrix);
    }
    let col = n - 1;
    let a = Array1::from_shape_fn(n - 1, |k| array_entry::<S>(spec, ctx, k, col));
    let d = array_entry::<S>(spec, ctx, col, col).re();
    Ok((a, d))
}

/// Unscaled upper-left `n x n` corner `X^(n)` of the array.
pub fn materialize_array<S: Scalar>(
    n: usize,
    spec: &EnsembleSpec,
    ctx: &SeedContext,
) -> Result<Array2<S>, EnsembleError> {
    spec.check_scalar::<S>()?;
    if n == 0 {
        return Err(EnsembleError::EmptyMatrix);
    }
    let mut x = Array2::<S>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = array_entry::<S>(spec, ctx, i, j);
            x[[i, j]] = v;
            if i != j {
                x[[j, i]] = v.conj();
            }
        }
    }
    Ok(x)
}

/// Wigner matrix `H^(n) = n^{-1/2} X^(n)`; exactly Hermitian by construction.
pub fn materialize_wigner<S: Scalar>(
    n: usize,
    spec: &EnsembleSpec,
    ctx: &SeedContext,
) -> Result<Array2<S>, EnsembleError> {
    let mut x = materialize_array::<S>(n, spec, ctx)?;
    let inv = 1.0 / (n as f64).sqrt();
    x.mapv_inplace(|v| v.scale_re(inv));
    Ok(x)
}

/// Deformed matrix `Sigma .* H + diag(a)`. With `Sigma == 1` and `a == 0`
/// this is the identity map. The input must be Hermitian and `Sigma`
/// symmetric with positive entries.
pub fn apply_deformation<S: Scalar>(
    h: &Array2<S>,
    sigma: &Array2<f64>,
    a: &[f64],
) -> Result<Array2<S>, EnsembleError> {
    let n = h.nrows();
    if h.ncols() != n || sigma.nrows() != n || sigma.ncols() != n || a.len() != n {
        return Err(EnsembleError::Dimension(format!(
            "H is {}x{}, Sigma {}x{}, a has {}",
            h.nrows(),
            h.ncols(),
            sigma.nrows(),
            sigma.ncols(),
            a.len()
        )));
    }
    for i in 0..n {
        for j in 0..n {
            let s = sigma[[i, j]];
            if !(s > 0.0) || !s.is_finite() {
                return Err(EnsembleError::InvalidProfile(format!(
                    "Sigma[{i},{j}] = {s} is not positive"
                )));
            }
            if (s - sigma[[j, i]]).abs() > 0.0 {
                return Err(EnsembleError::InvalidProfile("Sigma is not symmetric".into()));
            }
        }
    }
    let tol = 1e-12;
    for i in 0..n {
        if h[[i, i]].im().abs() > tol {
            return Err(EnsembleError::NotHermitian);
        }
        for j in (i + 1)..n {
            let diff = h[[i, j]] - h[[j, i]].conj();
            if diff.abs2().sqrt() > tol {
                return Err(EnsembleError::NotHermitian);
            }
        }
    }
    let mut out = Array2::<S>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] = h[[i, j]].scale_re(sigma[[i, j]]);
        }
        out[[i, i]] = out[[i, i]] + S::from_re(a[i]);
    }
    Ok(out)
}

/// Deformed Wigner matrix built from the spec's own profile and deformation.
pub fn materialize_deformed<S: Scalar>(
    n: usize,
    spec: &EnsembleSpec,
    ctx: &SeedContext,
) -> Result<Array2<S>, EnsembleError> {
    let h = materialize_wigner::<S>(n, spec, ctx)?;
    let sigma = Array2::from_shape_fn((n, n), |(i, j)| {
        spec.profile.as_ref().map_or(1.0, |p| p.value_at(i, j))
    });
    let a: Vec<f64> = (0..n)
        .map(|i| spec.deformation.as_ref().map_or(0.0, |d| d.value_at(i)))
        .collect();
    apply_deformation(&h, &sigma, &a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn spec(beta: Beta, dist: EntryDist) -> EnsembleSpec {
        EnsembleSpec {
            beta,
            entry_dist: dist,
            profile: None,
            deformation: None,
            master_seed: 0xC0FFEE,
        }
    }

    #[test]
    fn border_n1_is_empty_with_diag() {
        let s = spec(Beta::One, EntryDist::Gaussian);
        let ctx = s.context();
        let (a, d) = sample_border::<f64>(1, &s, &ctx).unwrap();
        assert_eq!(a.len(), 0);
        assert!(d.is_finite());
    }

    #[test]
    fn diag_variance_is_two_for_beta1_gaussian() {
        let s = spec(Beta::One, EntryDist::Gaussian);
        let n = 200_000;
        let mut acc = 0.0;
        let mut acc_sq = 0.0;
        for k in 0..n {
            let ctx = s.context().descend(9, k as u64);
            let (_, d) = sample_border::<f64>(1, &s, &ctx).unwrap();
            acc += d;
            acc_sq += d * d;
        }
        let mean = acc / n as f64;
        let var = acc_sq / n as f64 - mean * mean;
        // sd of the variance estimate for N(0,2): sqrt(2)*2/sqrt(n)
        assert!(mean.abs() < 4.0 * (2.0f64).sqrt() / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 2.0).abs() < 4.0 * 2.0 * (2.0f64).sqrt() / (n as f64).sqrt(), "var {var}");
    }

    #[test]
    fn rademacher_entries_are_signs() {
        let s = spec(Beta::One, EntryDist::Rademacher);
        let ctx = s.context();
        for j in 1..200 {
            let v: f64 = array_entry(&s, &ctx, 0, j);
            assert!(v == 1.0 || v == -1.0);
        }
        // diagonal carries the sqrt(2) scaling
        let d: f64 = array_entry(&s, &ctx, 3, 3);
        assert!((d.abs() - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn determinism_across_query_order() {
        let s = spec(Beta::Two, EntryDist::Gaussian);
        let ctx = s.context();
        let (a1, d1) = sample_border::<Complex64>(5, &s, &ctx).unwrap();
        // query something else in between
        let _ = materialize_array::<Complex64>(9, &s, &ctx).unwrap();
        let (a2, d2) = sample_border::<Complex64>(5, &s, &ctx).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(d1, d2);
    }

    #[test]
    fn materialize_matches_borders_bit_for_bit() {
        let s = spec(Beta::Two, EntryDist::Gaussian);
        let ctx = s.context();
        let n = 12;
        let x = materialize_array::<Complex64>(n, &s, &ctx).unwrap();
        for m in 1..=n {
            let (a, d) = sample_border::<Complex64>(m, &s, &ctx).unwrap();
            for k in 0..m - 1 {
                assert_eq!(x[[k, m - 1]], a[k]);
            }
            assert_eq!(x[[m - 1, m - 1]], Complex64::new(d, 0.0));
        }
    }

    #[test]
    fn minor_consistency_under_rescaling() {
        let s = spec(Beta::One, EntryDist::Uniform);
        let ctx = s.context();
        let (n1, n2) = (4usize, 8usize);
        let h1 = materialize_wigner::<f64>(n1, &s, &ctx).unwrap();
        let h2 = materialize_wigner::<f64>(n2, &s, &ctx).unwrap();
        let scale = ((n2 as f64) / (n1 as f64)).sqrt();
        for i in 0..n1 {
            for j in 0..n1 {
                let lhs = scale * h2[[i, j]];
                assert!((lhs - h1[[i, j]]).abs() <= 4.0 * f64::EPSILON * h1[[i, j]].abs().max(1.0));
            }
        }
    }

    #[test]
    fn complex_offdiag_second_moments() {
        let s = spec(Beta::Two, EntryDist::Gaussian);
        let n = 200_000;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut sum_sq = Complex64::new(0.0, 0.0);
        let mut sum_abs2 = 0.0;
        for k in 0..n {
            let ctx = s.context().descend(11, k as u64);
            let v: Complex64 = array_entry(&s, &ctx, 0, 1);
            sum += v;
            sum_sq += v * v;
            sum_abs2 += v.norm_sqr();
        }
        let inv = 1.0 / n as f64;
        let se = 4.0 / (n as f64).sqrt();
        assert!((sum * inv).norm() < se, "mean {}", sum * inv);
        assert!((sum_sq * inv).norm() < se, "E x^2 {}", sum_sq * inv);
        assert!((sum_abs2 * inv - 1.0).abs() < se, "E |x|^2 {}", sum_abs2 * inv);
    }

    #[test]
    fn deformation_identity_and_scaling() {
        let s = spec(Beta::One, EntryDist::Gaussian);
        let ctx = s.context();
        let h = materialize_wigner::<f64>(16, &s, &ctx).unwrap();
        let ones = Array2::from_elem((16, 16), 1.0);
        let zeros = vec![0.0; 16];
        let out = apply_deformation(&h, &ones, &zeros).unwrap();
        assert_eq!(out, h);

        let half = Array2::from_elem((16, 16), 0.5);
        let scaled = apply_deformation(&h, &half, &zeros).unwrap();
        for (x, y) in scaled.iter().zip(h.iter()) {
            assert!((x - 0.5 * y).abs() < 1e-15);
        }
    }

    #[test]
    fn deformation_rejects_bad_input() {
        let s = spec(Beta::One, EntryDist::Gaussian);
        let ctx = s.context();
        let mut h = materialize_wigner::<f64>(8, &s, &ctx).unwrap();
        let ones = Array2::from_elem((8, 8), 1.0);
        let zeros = vec![0.0; 8];
        h[[0, 1]] += 1.0; // break symmetry
        assert!(matches!(
            apply_deformation(&h, &ones, &zeros),
            Err(EnsembleError::NotHermitian)
        ));

        let h = materialize_wigner::<f64>(8, &s, &ctx).unwrap();
        let mut bad = ones.clone();
        bad[[2, 2]] = 0.0;
        assert!(apply_deformation(&h, &bad, &zeros).is_err());
    }
}
