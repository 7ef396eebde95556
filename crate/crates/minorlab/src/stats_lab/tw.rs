//! Tracy-Widom reference moments and a fast exact sampler for the Gaussian
//! ensembles.
//!
//! The reference moments are imported oracle constants (high-precision
//! tabulations). For GOE/GUE, the top eigenvalue can be sampled exactly from
//! the symmetric tridiagonal model obtained by Householder reduction: the
//! diagonal keeps the Gaussian diagonal law and the off-diagonals are chi
//! variables whose degrees of freedom shrink by one (by `beta`) per row.
//! That turns one top-eigenvalue draw into `O(N)` scalar samples plus a
//! Sturm bisection, which is what makes the moderate-deviation tail
//! experiments affordable.

use crate::ensemble::seed::CounterRng;
use crate::ensemble::Beta;
use crate::error::StatsError;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Mean of the Tracy-Widom beta=1 law.
pub const TW1_MEAN: f64 = -1.2065335745820;
/// Variance of the Tracy-Widom beta=1 law.
pub const TW1_VAR: f64 = 1.6077810345813;
/// Mean of the Tracy-Widom beta=2 law.
pub const TW2_MEAN: f64 = -1.7710868074110;
/// Variance of the Tracy-Widom beta=2 law.
pub const TW2_VAR: f64 = 0.8131947928329;

pub fn tw_mean(beta: Beta) -> f64 {
    match beta {
        Beta::One => TW1_MEAN,
        Beta::Two => TW2_MEAN,
    }
}

pub fn tw_var(beta: Beta) -> f64 {
    match beta {
        Beta::One => TW1_VAR,
        Beta::Two => TW2_VAR,
    }
}

/// chi_d sample: sqrt of Gamma(d/2, scale 2).
fn sample_chi(dof: f64, rng: &mut CounterRng) -> f64 {
    let gamma = Gamma::new(0.5 * dof, 2.0).expect("valid chi parameters");
    gamma.sample(rng).sqrt()
}

/// Largest eigenvalue of a symmetric tridiagonal matrix by Sturm bisection.
pub fn tridiagonal_top(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    debug_assert_eq!(off.len() + 1, n);
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = (if i > 0 { off[i - 1].abs() } else { 0.0 }) + (if i < n - 1 { off[i].abs() } else { 0.0 });
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let count_below = |x: f64| -> usize {
        // negative pivots of LDL^T of (T - x)
        let mut count = 0usize;
        let mut d = diag[0] - x;
        if d < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let denom = if d.abs() < 1e-300 { -1e-300 } else { d };
            d = (diag[i] - x) - off[i - 1] * off[i - 1] / denom;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let scale = lo.abs().max(hi.abs()).max(1.0);
    while hi - lo > 1e-14 * scale {
        let mid = 0.5 * (lo + hi);
        if count_below(mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One exact draw of the unscaled top eigenvalue of `H^(n)` for the Gaussian
/// ensemble of class `beta`.
pub fn sample_gaussian_top_raw(beta: Beta, n: usize, rng: &mut CounterRng) -> Result<f64, StatsError> {
    if n == 0 {
        return Err(StatsError::Invalid("need n >= 1".into()));
    }
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    match beta {
        Beta::One => {
            for _ in 0..n {
                let g: f64 = StandardNormal.sample(rng);
                diag.push(g * std::f64::consts::SQRT_2 * inv_sqrt_n);
            }
            for k in 1..n {
                off.push(sample_chi((n - k) as f64, rng) * inv_sqrt_n);
            }
        }
        Beta::Two => {
            for _ in 0..n {
                let g: f64 = StandardNormal.sample(rng);
                diag.push(g * inv_sqrt_n);
            }
            for k in 1..n {
                off.push(sample_chi(2.0 * (n - k) as f64, rng) * std::f64::consts::FRAC_1_SQRT_2 * inv_sqrt_n);
            }
        }
    }
    Ok(tridiagonal_top(&diag, &off))
}

/// One exact draw of the Tracy-Widom-scaled top eigenvalue
/// `n^{2/3}(lambda_raw - 2)` for the Gaussian ensemble.
pub fn sample_gaussian_top_scaled(beta: Beta, n: usize, rng: &mut CounterRng) -> Result<f64, StatsError> {
    Ok(crate::stats_lab::scale_top(sample_gaussian_top_raw(beta, n, rng)?, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::eigvalsh_desc;
    use crate::ensemble::{materialize_wigner, EnsembleSpec, EntryDist};
    use crate::stats_lab::gof::ks_two_sample;
    use num_complex::Complex64;

    #[test]
    fn tridiagonal_top_known_matrix() {
        // tridiag(1 on off-diagonal, 0 diagonal) of size n has top eigenvalue
        // 2 cos(pi/(n+1))
        let n = 25;
        let diag = vec![0.0; n];
        let off = vec![1.0; n - 1];
        let top = tridiagonal_top(&diag, &off);
        let expect = 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((top - expect).abs() < 1e-12, "{top} vs {expect}");
    }

    #[test]
    fn tridiagonal_model_matches_dense_goe() {
        // distributional identity checked by a two-sample KS test
        let n = 64;
        let m = 3000;
        let mut rng = CounterRng::from_key(0xabc);
        let mut fast: Vec<f64> = (0..m)
            .map(|_| sample_gaussian_top_raw(Beta::One, n, &mut rng).unwrap())
            .collect();
        let mut dense: Vec<f64> = (0..m)
            .map(|k| {
                let spec = EnsembleSpec {
                    beta: Beta::One,
                    entry_dist: EntryDist::Gaussian,
                    profile: None,
                    deformation: None,
                    master_seed: 10_000 + k as u64,
                };
                let h = materialize_wigner::<f64>(n, &spec, &spec.context()).unwrap();
                eigvalsh_desc(&h).unwrap()[0]
            })
            .collect();
        let d = ks_two_sample(&mut fast, &mut dense);
        // null expectation ~ 1.36 sqrt(2/m) = 0.035 at 5%
        assert!(d < 0.045, "ks {d}");
    }

    #[test]
    fn tridiagonal_model_matches_dense_gue() {
        let n = 48;
        let m = 2500;
        let mut rng = CounterRng::from_key(0xdef);
        let mut fast: Vec<f64> = (0..m)
            .map(|_| sample_gaussian_top_raw(Beta::Two, n, &mut rng).unwrap())
            .collect();
        let mut dense: Vec<f64> = (0..m)
            .map(|k| {
                let spec = EnsembleSpec {
                    beta: Beta::Two,
                    entry_dist: EntryDist::Gaussian,
                    profile: None,
                    deformation: None,
                    master_seed: 40_000 + k as u64,
                };
                let h = materialize_wigner::<Complex64>(n, &spec, &spec.context()).unwrap();
                eigvalsh_desc(&h).unwrap()[0]
            })
            .collect();
        let d = ks_two_sample(&mut fast, &mut dense);
        assert!(d < 0.05, "ks {d}");
    }

    #[test]
    fn scaled_sampler_tracks_tw_moments_loosely() {
        let n = 512;
        let m = 4000;
        let mut rng = CounterRng::from_key(0x7177);
        let samples: Vec<f64> = (0..m)
            .map(|_| sample_gaussian_top_scaled(Beta::Two, n, &mut rng).unwrap())
            .collect();
        let mean = samples.iter().sum::<f64>() / m as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m as f64;
        assert!((mean - TW2_MEAN).abs() < 0.12, "mean {mean}");
        assert!((var - TW2_VAR).abs() < 0.12, "var {var}");
    }
}
