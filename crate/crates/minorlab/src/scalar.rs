//! Scalar abstraction over the two symmetry classes: `f64` for real symmetric
//! ensembles and `Complex64` for Hermitian ones. The engine, flows and
//! estimators are generic over this trait so both classes share one code path.

use crate::ensemble::seed::{CounterRng, SeedContext, Stream};
use crate::ensemble::EntryDist;
use ndarray::LinalgScalar;
use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

const SQRT_3: f64 = 1.732_050_807_568_877_2;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub trait Scalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + std::fmt::Display
    + LinalgScalar
    + std::ops::Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    const IS_COMPLEX: bool;

    fn from_re(x: f64) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn conj(self) -> Self;
    /// Squared modulus.
    fn abs2(self) -> f64;
    fn scale_re(self, s: f64) -> Self;

    /// Unit-variance off-diagonal array entry (`E x = 0`, `E |x|^2 = 1`,
    /// and `E x^2 = 0` in the complex case), addressed by `(i, j)` with `i <= j`.
    fn sample_offdiag(dist: EntryDist, ctx: &SeedContext, i: u64, j: u64) -> Self;

    /// Unit-variance real diagonal base sample at index `i`; the ensemble
    /// layer rescales by sqrt(2) in the real symmetry class.
    fn sample_diag_unit(dist: EntryDist, ctx: &SeedContext, i: u64) -> f64;

    /// Standard real Gaussian scalar in this field: `N(0,1)` for `f64`,
    /// `(g1 + i g2)/sqrt(2)` for complex (so `E |x|^2 = 1`).
    fn standard_gaussian(rng: &mut CounterRng) -> Self;

    /// `sum_k a_k b_k` (no conjugation); hot path of the matvec kernels.
    fn dot_plain(a: &[Self], b: &[Self]) -> Self {
        let mut acc = [Self::zero(); 4];
        let chunks = a.len() / 4;
        for c in 0..chunks {
            let k = 4 * c;
            acc[0] = acc[0] + a[k] * b[k];
            acc[1] = acc[1] + a[k + 1] * b[k + 1];
            acc[2] = acc[2] + a[k + 2] * b[k + 2];
            acc[3] = acc[3] + a[k + 3] * b[k + 3];
        }
        let mut rest = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        for k in 4 * chunks..a.len() {
            rest = rest + a[k] * b[k];
        }
        rest
    }

    /// `sum_k conj(a_k) b_k`.
    fn dot_conjugated(a: &[Self], b: &[Self]) -> Self {
        let mut acc = [Self::zero(); 4];
        let chunks = a.len() / 4;
        for c in 0..chunks {
            let k = 4 * c;
            acc[0] = acc[0] + a[k].conj() * b[k];
            acc[1] = acc[1] + a[k + 1].conj() * b[k + 1];
            acc[2] = acc[2] + a[k + 2].conj() * b[k + 2];
            acc[3] = acc[3] + a[k + 3].conj() * b[k + 3];
        }
        let mut rest = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        for k in 4 * chunks..a.len() {
            rest = rest + a[k].conj() * b[k];
        }
        rest
    }
}

/// Eight-lane dot product; the fixed-width inner loop compiles to packed
/// fused multiply-adds.
#[inline]
fn dot_f64_wide(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let mut ai = a.chunks_exact(8);
    let mut bi = b.chunks_exact(8);
    for (ac, bc) in (&mut ai).zip(&mut bi) {
        for l in 0..8 {
            acc[l] += ac[l] * bc[l];
        }
    }
    let mut rest = 0.0;
    for (x, y) in ai.remainder().iter().zip(bi.remainder()) {
        rest += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + rest
}

#[inline(always)]
fn unit_uniform(rng: &mut CounterRng) -> f64 {
    // centered uniform with unit variance
    let u: f64 = rng.gen::<f64>();
    (2.0 * u - 1.0) * SQRT_3
}

#[inline(always)]
fn rademacher_bit(ctx: &SeedContext, i: u64, j: u64) -> f64 {
    let word = ctx.word_at(Stream::EntryWord, i, j >> 6);
    if (word >> (j & 63)) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn from_re(x: f64) -> Self {
        x
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn conj(self) -> Self {
        self
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn scale_re(self, s: f64) -> Self {
        self * s
    }

    fn sample_offdiag(dist: EntryDist, ctx: &SeedContext, i: u64, j: u64) -> Self {
        match dist {
            EntryDist::Gaussian => ctx.rng_at(Stream::Entry, i, j).sample(StandardNormal),
            // one bit per entry, 64 entries per generated word; keeps bulk
            // materialization of sign matrices cheap
            EntryDist::Rademacher => rademacher_bit(ctx, i, j),
            EntryDist::Uniform => unit_uniform(&mut ctx.rng_at(Stream::Entry, i, j)),
        }
    }

    fn sample_diag_unit(dist: EntryDist, ctx: &SeedContext, i: u64) -> f64 {
        match dist {
            EntryDist::Gaussian => ctx.rng_at(Stream::Entry, i, i).sample(StandardNormal),
            EntryDist::Rademacher => rademacher_bit(ctx, i, i),
            EntryDist::Uniform => unit_uniform(&mut ctx.rng_at(Stream::Entry, i, i)),
        }
    }

    fn standard_gaussian(rng: &mut CounterRng) -> Self {
        rng.sample(StandardNormal)
    }

    fn dot_plain(a: &[f64], b: &[f64]) -> f64 {
        dot_f64_wide(a, b)
    }

    fn dot_conjugated(a: &[f64], b: &[f64]) -> f64 {
        dot_f64_wide(a, b)
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn conj(self) -> Self {
        Complex64::new(self.re, -self.im)
    }
    fn abs2(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
    fn scale_re(self, s: f64) -> Self {
        Complex64::new(self.re * s, self.im * s)
    }

    fn sample_offdiag(dist: EntryDist, ctx: &SeedContext, i: u64, j: u64) -> Self {
        let mut rng = ctx.rng_at(Stream::Entry, i, j);
        // real and imaginary parts independent with variance 1/2 each, so
        // E |x|^2 = 1 and E x^2 = 0
        match dist {
            EntryDist::Gaussian => {
                let g1: f64 = rng.sample(StandardNormal);
                let g2: f64 = rng.sample(StandardNormal);
                Complex64::new(g1 * FRAC_1_SQRT_2, g2 * FRAC_1_SQRT_2)
            }
            EntryDist::Rademacher => {
                let w = rng.next_u64();
                let s1 = if w & 1 == 1 { 1.0 } else { -1.0 };
                let s2 = if (w >> 1) & 1 == 1 { 1.0 } else { -1.0 };
                Complex64::new(s1 * FRAC_1_SQRT_2, s2 * FRAC_1_SQRT_2)
            }
            EntryDist::Uniform => {
                let u1 = unit_uniform(&mut rng);
                let u2 = unit_uniform(&mut rng);
                Complex64::new(u1 * FRAC_1_SQRT_2, u2 * FRAC_1_SQRT_2)
            }
        }
    }

    fn sample_diag_unit(dist: EntryDist, ctx: &SeedContext, i: u64) -> f64 {
        let mut rng = ctx.rng_at(Stream::Entry, i, i);
        match dist {
            EntryDist::Gaussian => rng.sample(StandardNormal),
            EntryDist::Rademacher => {
                if rng.next_u64() & 1 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryDist::Uniform => unit_uniform(&mut rng),
        }
    }

    fn standard_gaussian(rng: &mut CounterRng) -> Self {
        let g1: f64 = rng.sample(StandardNormal);
        let g2: f64 = rng.sample(StandardNormal);
        Complex64::new(g1 * FRAC_1_SQRT_2, g2 * FRAC_1_SQRT_2)
    }
}
