//! Dyson equation for diagonally deformed ensembles with a flat variance
//! profile: the vector equation `-1/M_i = z - a_i + s^2 <M>`, whose solution
//! gives the self-consistent density of states `Im <M> / pi`.

use crate::error::StatsError;
use crate::stats_lab::semicircle::m_sc;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Residual target for the fixed point.
pub const DYSON_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 200_000;

#[derive(Debug, Clone)]
pub struct DysonSolution {
    pub z: Complex64,
    pub m: Vec<Complex64>,
    pub mean: Complex64,
    /// `Im <M> / pi`.
    pub density: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Solve the Dyson equation by damped fixed-point iteration from the
/// semicircle solution, preserving `Im M_i > 0`. `s2` is the flat variance
/// level (the entry-wise profile squared).
pub fn solve_dyson(z: Complex64, a: &[f64], s2: f64) -> Result<DysonSolution, StatsError> {
    if !(z.im > 0.0) {
        return Err(StatsError::Invalid(format!("need Im z > 0, got {z}")));
    }
    if !(s2 > 0.0) || a.is_empty() || a.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::Invalid("need s2 > 0 and a bounded, nonempty".into()));
    }
    let n = a.len();
    let s = s2.sqrt();
    // flat zero-deformation solution: M = m_sc(z / s) / s
    let init = m_sc(z / Complex64::new(s, 0.0)) / Complex64::new(s, 0.0);
    let mut m = vec![init; n];
    let mut damping = 0.5f64;
    let mut residual = f64::INFINITY;
    for iter in 0..MAX_ITERS {
        let mean = m.iter().sum::<Complex64>() / n as f64;
        let mut proposal = Vec::with_capacity(n);
        let mut ok = true;
        for i in 0..n {
            let denom = Complex64::new(a[i], 0.0) - z - s2 * mean;
            let target = 1.0 / denom;
            let next = m[i] * (1.0 - damping) + target * damping;
            if !(next.im > 0.0) || !next.re.is_finite() || !next.im.is_finite() {
                ok = false;
                break;
            }
            proposal.push(next);
        }
        if !ok {
            damping *= 0.5;
            if damping < 1e-4 {
                return Err(StatsError::DysonDiverged { residual });
            }
            continue;
        }
        m = proposal;
        let mean = m.iter().sum::<Complex64>() / n as f64;
        residual = 0.0f64;
        for i in 0..n {
            let lhs = -1.0 / m[i];
            let rhs = z - Complex64::new(a[i], 0.0) + s2 * mean;
            residual = residual.max((lhs - rhs).norm());
        }
        if residual < DYSON_TOL {
            return Ok(DysonSolution {
                z,
                m,
                mean,
                density: mean.im / PI,
                residual,
                iterations: iter + 1,
            });
        }
    }
    Err(StatsError::DysonDiverged { residual })
}

/// Density profile `Im <M(E + i eta)> / pi` over an energy grid.
pub fn dyson_density_grid(
    energies: &[f64],
    eta: f64,
    a: &[f64],
    s2: f64,
) -> Result<Vec<(f64, f64)>, StatsError> {
    energies
        .iter()
        .map(|&e| solve_dyson(Complex64::new(e, eta), a, s2).map(|sol| (e, sol.density)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_deformation_reduces_to_semicircle() {
        let a = vec![0.0; 32];
        for &re in &[-1.5, 0.0, 0.7, 1.9] {
            let z = Complex64::new(re, 0.05);
            let sol = solve_dyson(z, &a, 1.0).unwrap();
            let expect = m_sc(z);
            for mi in &sol.m {
                assert!((mi - expect).norm() < 1e-9, "z={z}: {mi} vs {expect}");
            }
            assert!(sol.residual < DYSON_TOL);
        }
    }

    #[test]
    fn constant_shift_translates_the_argument() {
        let t = 0.8;
        let a = vec![t; 16];
        let z = Complex64::new(0.3, 0.02);
        let sol = solve_dyson(z, &a, 1.0).unwrap();
        let expect = m_sc(z - Complex64::new(t, 0.0));
        for mi in &sol.m {
            assert!((mi - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn positivity_and_residual_contract() {
        let a: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let z = Complex64::new(1.1, 0.01);
        let sol = solve_dyson(z, &a, 0.16).unwrap();
        assert!(sol.m.iter().all(|m| m.im > 0.0));
        assert!(sol.residual < DYSON_TOL);
    }

    #[test]
    fn alternating_deformation_opens_two_bands() {
        // small flat variance with +-1 deformation: density concentrates in
        // two bands around +-1 with a gap at zero
        let a: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s2 = 0.16; // profile 0.4
        let rho_center = solve_dyson(Complex64::new(0.0, 1e-3), &a, s2).unwrap().density;
        let rho_band = solve_dyson(Complex64::new(1.0, 1e-3), &a, s2).unwrap().density;
        assert!(rho_band > 0.3, "band density {rho_band}");
        assert!(rho_center < 0.05, "gap density {rho_center}");
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(solve_dyson(Complex64::new(0.0, -0.1), &[0.0], 1.0).is_err());
        assert!(solve_dyson(Complex64::new(0.0, 0.1), &[], 1.0).is_err());
        assert!(solve_dyson(Complex64::new(0.0, 0.1), &[0.0], 0.0).is_err());
    }
}
