//! Goodness-of-fit diagnostics: Kolmogorov-Smirnov machinery and the
//! chi-square law checks for the squared border projections (`chi^2(1)` in
//! the real class, `chi^2(2)/2`, i.e. a unit exponential, in the complex
//! one).

use crate::ensemble::Beta;
use crate::error::StatsError;

/// CDF of `|xi_1|^2` in symmetry class `beta`.
pub fn xi_sq_cdf(beta: Beta, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    match beta {
        Beta::One => libm::erf((x / 2.0).sqrt()),
        Beta::Two => 1.0 - (-x).exp(),
    }
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic Kolmogorov tail probability with Stephens' finite-sample
/// correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-1.0f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct GofReport {
    pub n: usize,
    pub ks: f64,
    pub p_value: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Kolmogorov-Smirnov check of `|xi_1|^2` samples against the asymptotic
/// chi-square law for class `beta`; diagnostic, not a hard invariant.
pub fn chi_square_gof(samples: &[f64], beta: Beta) -> Result<GofReport, StatsError> {
    if samples.len() < 1000 {
        return Err(StatsError::TooFewSamples { need: 1000, got: samples.len() });
    }
    let n = samples.len();
    let mut sorted = samples.to_vec();
    let ks = ks_statistic(&mut sorted, |x| xi_sq_cdf(beta, x));
    let mean = samples.iter().sum::<f64>() / n as f64;
    let variance = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    Ok(GofReport { n, ks, p_value: ks_p_value(ks, n), mean, variance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::seed::CounterRng;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn ks_null_calibration_chi1() {
        // exact chi^2(1) draws should look uniform in p-value; check that a
        // batch of tests produces unremarkable statistics
        let mut rng = CounterRng::from_key(12);
        let mut p_values = Vec::new();
        for _ in 0..40 {
            let samples: Vec<f64> = (0..2000)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    g * g
                })
                .collect();
            let rep = chi_square_gof(&samples, Beta::One).unwrap();
            p_values.push(rep.p_value);
        }
        let mean_p = p_values.iter().sum::<f64>() / p_values.len() as f64;
        assert!((mean_p - 0.5).abs() < 0.2, "mean p {mean_p}");
        assert!(p_values.iter().any(|&p| p > 0.5));
        assert!(p_values.iter().filter(|&&p| p < 0.001).count() <= 2);
    }

    #[test]
    fn exponential_matches_beta2_law() {
        let mut rng = CounterRng::from_key(5);
        let samples: Vec<f64> = (0..20_000).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
        let rep = chi_square_gof(&samples, Beta::Two).unwrap();
        assert!(rep.ks < 0.015, "ks {}", rep.ks);
        assert!((rep.mean - 1.0).abs() < 0.03);
        assert!((rep.variance - 1.0).abs() < 0.06);
    }

    #[test]
    fn chi1_moments() {
        let mut rng = CounterRng::from_key(6);
        let samples: Vec<f64> = (0..50_000)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g * g
            })
            .collect();
        let rep = chi_square_gof(&samples, Beta::One).unwrap();
        assert!((rep.mean - 1.0).abs() < 0.05);
        assert!((rep.variance - 2.0).abs() < 0.2);
    }

    #[test]
    fn two_sample_ks_detects_shift() {
        let mut rng = CounterRng::from_key(8);
        let mut a: Vec<f64> = (0..4000).map(|_| rng.gen::<f64>()).collect();
        let mut b: Vec<f64> = (0..4000).map(|_| rng.gen::<f64>() + 0.2).collect();
        let d_shift = ks_two_sample(&mut a, &mut b);
        assert!(d_shift > 0.15);
        let mut c: Vec<f64> = (0..4000).map(|_| rng.gen::<f64>()).collect();
        let mut e: Vec<f64> = (0..4000).map(|_| rng.gen::<f64>()).collect();
        let d_null = ks_two_sample(&mut c, &mut e);
        assert!(d_null < 0.05);
    }
}
