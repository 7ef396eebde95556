//! Empirical tail curves and moderate-deviation exponent fits.
//!
//! Survival probabilities of the scaled top eigenvalue decay like
//! `exp(-(2 beta / 3) x^{3/2})` on the right and `exp(-(beta/24) x^3)` on
//! the left, up to level-independent constants. The fit is a weighted least
//! squares of the empirical negative log-survival against the transformed
//! level (`x^{3/2}` or `x^3`) with an intercept absorbing the constant;
//! binomial variances supply the weights.

use crate::ensemble::Beta;
use crate::error::StatsError;
use serde::{Deserialize, Serialize};

/// Minimum tail hits for a level to participate in the fit.
pub const MIN_TAIL_HITS: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailSide {
    Right,
    Left,
}

impl TailSide {
    pub fn label(self) -> &'static str {
        match self {
            TailSide::Right => "right",
            TailSide::Left => "left",
        }
    }

    /// Transformed fit coordinate.
    pub fn transform(self, x: f64) -> f64 {
        match self {
            TailSide::Right => x.powf(1.5),
            TailSide::Left => x * x * x,
        }
    }

    /// Exponent coefficient the fit is compared against.
    pub fn target(self, beta: Beta) -> f64 {
        match self {
            TailSide::Right => 2.0 * beta.value() / 3.0,
            TailSide::Left => beta.value() / 24.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailLevel {
    pub x: f64,
    pub hits: u64,
    pub survival: f64,
    /// `-ln(survival)`; NaN when dropped.
    pub neg_log_survival: f64,
    /// Delta-method standard error of the negative log-survival.
    pub stderr: f64,
    pub dropped: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailFit {
    pub side: TailSide,
    pub beta: Beta,
    pub samples: usize,
    pub levels: Vec<TailLevel>,
    /// Fitted coefficient of the transformed level.
    pub coefficient: f64,
    pub coeff_stderr: f64,
    pub intercept: f64,
    /// `2 beta / 3` (right) or `beta / 24` (left).
    pub target: f64,
}

/// Fit the tail exponent from samples of the scaled top eigenvalue at fixed
/// `N`. Levels with fewer than [`MIN_TAIL_HITS`] exceedances are dropped and
/// flagged; at least two usable levels are required.
pub fn estimate_tail_curve(
    samples: &[f64],
    side: TailSide,
    levels: &[f64],
    beta: Beta,
) -> Result<TailFit, StatsError> {
    let n = samples.len();
    if n < 1000 {
        return Err(StatsError::TooFewSamples { need: 1000, got: n });
    }
    if levels.is_empty() {
        return Err(StatsError::BadLevels("empty level grid".into()));
    }
    for w in levels.windows(2) {
        if w[1] <= w[0] {
            return Err(StatsError::BadLevels("levels must be strictly increasing".into()));
        }
    }
    if levels[0] <= 0.0 {
        return Err(StatsError::BadLevels("levels must be positive".into()));
    }

    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut rows = Vec::with_capacity(levels.len());
    for &x in levels {
        let hits = match side {
            // count of lambda >= x
            TailSide::Right => (n - sorted.partition_point(|&v| v < x)) as u64,
            // count of lambda <= -x
            TailSide::Left => sorted.partition_point(|&v| v <= -x) as u64,
        };
        let p = hits as f64 / n as f64;
        let dropped = hits < MIN_TAIL_HITS;
        let (nls, se) = if dropped {
            (f64::NAN, f64::NAN)
        } else {
            (-p.ln(), ((1.0 - p) / (n as f64 * p)).sqrt())
        };
        rows.push(TailLevel { x, hits, survival: p, neg_log_survival: nls, stderr: se, dropped });
    }

    let kept: Vec<&TailLevel> = rows.iter().filter(|l| !l.dropped).collect();
    if kept.len() < 2 {
        return Err(StatsError::AllLevelsDropped { min_hits: MIN_TAIL_HITS as usize });
    }

    // weighted least squares with intercept
    let mut sw = 0.0;
    let mut su = 0.0;
    let mut sy = 0.0;
    for l in &kept {
        let w = 1.0 / (l.stderr * l.stderr);
        sw += w;
        su += w * side.transform(l.x);
        sy += w * l.neg_log_survival;
    }
    let u_bar = su / sw;
    let y_bar = sy / sw;
    let mut suu = 0.0;
    let mut suy = 0.0;
    for l in &kept {
        let w = 1.0 / (l.stderr * l.stderr);
        let du = side.transform(l.x) - u_bar;
        suu += w * du * du;
        suy += w * du * (l.neg_log_survival - y_bar);
    }
    if suu <= 0.0 {
        return Err(StatsError::BadLevels("degenerate design; levels too close".into()));
    }
    let slope = suy / suu;
    let intercept = y_bar - slope * u_bar;
    let slope_se = (1.0 / suu).sqrt();

    Ok(TailFit {
        side,
        beta,
        samples: n,
        levels: rows,
        coefficient: slope,
        coeff_stderr: slope_se,
        intercept,
        target: side.target(beta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::seed::CounterRng;
    use rand::Rng;

    /// Samples with exact right-tail survival `exp(-c x^{3/2})` for `x >= 0`.
    fn synthetic_right(c: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = CounterRng::from_key(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen::<f64>().max(1e-300);
                (-u.ln() / c).powf(2.0 / 3.0)
            })
            .collect()
    }

    #[test]
    fn recovers_synthetic_right_exponent() {
        let c = 4.0 / 3.0;
        let samples = synthetic_right(c, 200_000, 42);
        let levels: Vec<f64> = (0..8).map(|k| 1.0 + 0.2 * k as f64).collect();
        let fit = estimate_tail_curve(&samples, TailSide::Right, &levels, Beta::Two).unwrap();
        assert!(
            (fit.coefficient - c).abs() < 0.05 * c,
            "coefficient {} target {}",
            fit.coefficient,
            c
        );
        assert_eq!(fit.target, c);
    }

    #[test]
    fn recovers_synthetic_left_exponent() {
        // mirror image: left tail survival exp(-c x^3) at level x
        let c = 1.0 / 12.0;
        let mut rng = CounterRng::from_key(7);
        let samples: Vec<f64> = (0..200_000)
            .map(|_| {
                let u: f64 = rng.gen::<f64>().max(1e-300);
                -(-u.ln() / c).powf(1.0 / 3.0)
            })
            .collect();
        let levels: Vec<f64> = (0..9).map(|k| 2.0 + 0.2 * k as f64).collect();
        let fit = estimate_tail_curve(&samples, TailSide::Left, &levels, Beta::Two).unwrap();
        assert!((fit.coefficient - c).abs() < 0.05 * c, "coefficient {}", fit.coefficient);
    }

    #[test]
    fn survival_nonincreasing_and_drops_flagged() {
        let samples = synthetic_right(4.0 / 3.0, 5_000, 3);
        let levels = vec![0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0];
        let fit = estimate_tail_curve(&samples, TailSide::Right, &levels, Beta::Two).unwrap();
        for w in fit.levels.windows(2) {
            assert!(w[1].survival <= w[0].survival);
        }
        assert!(fit.levels.last().unwrap().dropped, "far level should drop");
    }

    #[test]
    fn rejects_small_or_bad_input() {
        let samples = vec![0.0; 10];
        assert!(matches!(
            estimate_tail_curve(&samples, TailSide::Right, &[1.0, 2.0], Beta::One),
            Err(StatsError::TooFewSamples { .. })
        ));
        let samples = synthetic_right(1.0, 2_000, 9);
        assert!(estimate_tail_curve(&samples, TailSide::Right, &[2.0, 1.0], Beta::One).is_err());
        assert!(estimate_tail_curve(&samples, TailSide::Right, &[-1.0, 1.0], Beta::One).is_err());
    }

    #[test]
    fn all_levels_dropped_is_an_error() {
        let samples = vec![0.0; 2_000];
        let err = estimate_tail_curve(&samples, TailSide::Right, &[5.0, 6.0], Beta::One);
        assert!(matches!(err, Err(StatsError::AllLevelsDropped { .. })));
    }
}
