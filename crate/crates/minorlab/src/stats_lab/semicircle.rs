//! Semicircle-law utilities: Stieltjes transform, density/CDF/quantiles,
//! rigidity residuals against the classical eigenvalue locations, and the
//! mollified edge-counting functional.

use crate::error::StatsError;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Stieltjes transform of the semicircle law: the root of
/// `m^2 + z m + 1 = 0` with `Im m * Im z > 0`.
pub fn m_sc(z: Complex64) -> Complex64 {
    let disc = (z * z - Complex64::new(4.0, 0.0)).sqrt();
    let m_plus = (-z + disc) * 0.5;
    let want_positive_im = z.im >= 0.0;
    if (m_plus.im > 0.0) == want_positive_im && m_plus.im != 0.0 {
        m_plus
    } else {
        (-z - disc) * 0.5
    }
}

/// Semicircle density `rho(x) = sqrt(4 - x^2) / (2 pi)` on `[-2, 2]`.
pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

/// CDF of the semicircle law.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
    }
}

/// Quantile: the solution of `F(gamma) = q`, by bisection-safeguarded Newton.
pub fn semicircle_quantile(q: f64) -> Result<f64, StatsError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(StatsError::Invalid(format!("quantile level {q} outside [0,1]")));
    }
    if q == 0.0 {
        return Ok(-2.0);
    }
    if q == 1.0 {
        return Ok(2.0);
    }
    let mut lo = -2.0f64;
    let mut hi = 2.0f64;
    // sine start: roughly uniform in arc position
    let mut x = 2.0 * (PI * (q - 0.5)).sin() * 0.5 + 0.0;
    for _ in 0..200 {
        let f = semicircle_cdf(x) - q;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * 2.0 {
            return Ok(0.5 * (lo + hi));
        }
        let d = semicircle_density(x);
        let mut next = if d > 1e-12 { x - f / d } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x {
            return Ok(x);
        }
        x = next;
    }
    Err(StatsError::QuantileNoConvergence { index: 0 })
}

/// Classical eigenvalue location `gamma_i` solving the mass condition
/// `integral_{gamma_i}^{2} rho = i / N` (1-based `i`).
pub fn classical_location(i: usize, n: usize) -> Result<f64, StatsError> {
    if i == 0 || i > n {
        return Err(StatsError::Invalid(format!("index {i} outside 1..={n}")));
    }
    semicircle_quantile(1.0 - i as f64 / n as f64)
        .map_err(|_| StatsError::QuantileNoConvergence { index: i })
}

/// Rigidity residuals `|lambda_i - gamma_i| * N^{2/3} * min(i, N+1-i)^{1/3}`
/// for a full descending spectrum; diagnostic values, not hard assertions.
pub fn rigidity_residuals(spectrum_desc: &[f64]) -> Result<Vec<f64>, StatsError> {
    let n = spectrum_desc.len();
    if n == 0 {
        return Err(StatsError::Invalid("empty spectrum".into()));
    }
    let n23 = (n as f64).powf(2.0 / 3.0);
    let mut out = Vec::with_capacity(n);
    for (idx, &lam) in spectrum_desc.iter().enumerate() {
        let i = idx + 1;
        let gamma = classical_location(i, n)?;
        let side = (i.min(n + 1 - i)) as f64;
        out.push((lam - gamma).abs() * n23 * side.powf(1.0 / 3.0));
    }
    Ok(out)
}

/// Mollified count of eigenvalues in `[e, e_l]`:
/// `sum_i [arctan((e_l - lambda_i)/eta) - arctan((e - lambda_i)/eta)] / pi`,
/// the closed form of the resolvent integral `(N/pi) ∫ Im <G(y + i eta)> dy`.
pub fn smoothed_edge_count(spectrum: &[f64], e: f64, e_l: f64, eta: f64) -> Result<f64, StatsError> {
    if !(e < e_l) {
        return Err(StatsError::Invalid(format!("need E < E_L, got {e} >= {e_l}")));
    }
    if !(eta > 0.0) {
        return Err(StatsError::Invalid(format!("need eta > 0, got {eta}")));
    }
    let mut acc = 0.0;
    for &lam in spectrum {
        acc += ((e_l - lam) / eta).atan() - ((e - lam) / eta).atan();
    }
    Ok(acc / PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_sc_satisfies_defining_identity() {
        // grid over both half-planes
        let mut worst = 0.0f64;
        for kr in -15..=15 {
            for ki in 1..=15 {
                for sign in [1.0, -1.0] {
                    let z = Complex64::new(0.3 * kr as f64, sign * 0.2 * ki as f64);
                    let m = m_sc(z);
                    let resid = m * m + z * m + Complex64::new(1.0, 0.0);
                    worst = worst.max(resid.norm());
                    assert!(m.im * z.im > 0.0, "branch at z={z}");
                }
            }
        }
        assert!(worst < 1e-14, "worst residual {worst}");
    }

    #[test]
    fn m_sc_symmetry() {
        for k in 0..1000 {
            let z = Complex64::new(-3.0 + 0.006 * k as f64, 0.1 + 0.001 * k as f64);
            let lhs = m_sc(Complex64::new(-z.re, z.im));
            let rhs = -m_sc(z).conj();
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn m_sc_edge_and_center_limits() {
        let m = m_sc(Complex64::new(2.0, 1e-9));
        assert!((m - Complex64::new(-1.0, 0.0)).norm() < 1e-4);
        let m = m_sc(Complex64::new(0.0, 1e-9));
        assert!((m - Complex64::new(0.0, 1.0)).norm() < 1e-8);
    }

    #[test]
    fn quantiles_invert_cdf() {
        for k in 1..40 {
            let q = k as f64 / 40.0;
            let x = semicircle_quantile(q).unwrap();
            assert!((semicircle_cdf(x) - q).abs() < 1e-12);
        }
        // median of a 2-point spectrum sits at zero
        assert!(classical_location(1, 2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn rigidity_zero_on_exact_quantiles() {
        let n = 50;
        let spectrum: Vec<f64> = (1..=n).map(|i| classical_location(i, n).unwrap()).collect();
        let res = rigidity_residuals(&spectrum).unwrap();
        for r in res {
            assert!(r < 1e-9);
        }
    }

    #[test]
    fn edge_count_single_eigenvalue_limits() {
        // eigenvalue exactly at E contributes about 1/2
        let v = smoothed_edge_count(&[1.0], 1.0, 10.0, 1e-6).unwrap();
        assert!((v - 0.5).abs() < 1e-4, "{v}");
        // eigenvalue deep inside the window counts fully
        let v = smoothed_edge_count(&[5.0], 1.0, 10.0, 1e-6).unwrap();
        assert!((v - 1.0).abs() < 1e-5);
        // far outside: zero
        let v = smoothed_edge_count(&[-8.0], 1.0, 10.0, 1e-6).unwrap();
        assert!(v.abs() < 1e-6);
    }

    #[test]
    fn edge_count_matches_quadrature() {
        // oracle: adaptive Simpson quadrature of (N/pi) ∫ Im<G(y+i eta)> dy
        fn im_trace_g(spectrum: &[f64], y: f64, eta: f64) -> f64 {
            spectrum.iter().map(|l| eta / ((l - y) * (l - y) + eta * eta)).sum::<f64>()
        }
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, eps: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() < 15.0 * eps {
                left + right + (left + right - whole) / 15.0
            } else {
                simpson(f, a, m, fa, flm, fm, eps / 2.0, depth - 1)
                    + simpson(f, m, b, fm, frm, fb, eps / 2.0, depth - 1)
            }
        }
        let mut state = 0xfeedu64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for trial in 0..10 {
            let n = 24;
            let spectrum: Vec<f64> = (0..n).map(|_| 4.0 * next() - 2.0).collect();
            let e = 0.3;
            let e_l = 2.5;
            let eta = 0.05 + 0.1 * next();
            let closed = smoothed_edge_count(&spectrum, e, e_l, eta).unwrap();
            let f = |y: f64| im_trace_g(&spectrum, y, eta);
            let (fa, fm, fb) = (f(e), f(0.5 * (e + e_l)), f(e_l));
            let quad = simpson(&f, e, e_l, fa, fm, fb, 1e-13, 40) / std::f64::consts::PI;
            assert!((closed - quad).abs() < 1e-8, "trial {trial}: {closed} vs {quad}");
        }
    }

    #[test]
    fn edge_count_rejects_bad_window() {
        assert!(smoothed_edge_count(&[0.0], 2.0, 1.0, 0.1).is_err());
        assert!(smoothed_edge_count(&[0.0], 1.0, 2.0, 0.0).is_err());
    }
}
