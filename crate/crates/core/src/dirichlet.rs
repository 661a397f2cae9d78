//! Seedable Gamma and symmetric Dirichlet sampling.
//!
//! The base generator is xoshiro256++ seeded through SplitMix64, so a seed
//! reproduces the same stream on every platform. Gamma variates use the
//! Marsaglia-Tsang squeeze/rejection method for `shape >= 1` and the
//! `Gamma(a) = Gamma(a + 1) * U^(1/a)` boost for `shape < 1`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Consecutive degenerate Dirichlet vectors tolerated before giving up.
pub const MAX_DIRICHLET_RETRIES: usize = 100;

/// SplitMix64 finalizer. Used to decorrelate derived seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent seed for `stream` under `master`.
///
/// `derive_seed(m, s) = splitmix64(m ^ splitmix64(s))`; nest calls to key by
/// more than one index.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// A single-owner pseudo-random stream.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: Xoshiro256PlusPlus,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// Source for sub-stream `stream` of `master`; see [`derive_seed`].
    pub fn derived(master: u64, stream: u64) -> Self {
        Self::new(derive_seed(master, stream))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
    }

    /// Standard normal variate (Marsaglia polar method, second value discarded).
    pub fn standard_normal(&mut self) -> f64 {
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return u * (-2.0 * s.ln() / s).sqrt();
            }
        }
    }
}

/// Concentration `alpha * 1_K` of a symmetric Dirichlet over `k` components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    alpha: f64,
    k: usize,
}

impl DirichletParams {
    pub fn new(alpha: f64, k: usize) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidDirichlet(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if k == 0 {
            return Err(Error::InvalidDirichlet(
                "need at least one component".into(),
            ));
        }
        Ok(DirichletParams { alpha, k })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

fn check_shape(shape: f64) -> Result<()> {
    if shape.is_finite() && shape > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveShape(shape))
    }
}

// Marsaglia-Tsang, valid for shape >= 1.
fn marsaglia_tsang(shape: f64, source: &mut RandomSource) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = source.standard_normal();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = source.uniform_open();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Draws from `Gamma(shape, scale = 1)`.
///
/// For very small shapes the boosted variate can underflow to `0.0`;
/// [`sample_dirichlet`] avoids this by working with logarithms.
pub fn sample_gamma(shape: f64, source: &mut RandomSource) -> Result<f64> {
    check_shape(shape)?;
    if shape >= 1.0 {
        Ok(marsaglia_tsang(shape, source))
    } else {
        let g = marsaglia_tsang(shape + 1.0, source);
        Ok(g * source.uniform_open().powf(1.0 / shape))
    }
}

/// Natural log of a `Gamma(shape, 1)` variate, consuming the same random
/// numbers as [`sample_gamma`].
pub fn sample_ln_gamma(shape: f64, source: &mut RandomSource) -> Result<f64> {
    check_shape(shape)?;
    if shape >= 1.0 {
        Ok(marsaglia_tsang(shape, source).ln())
    } else {
        let g = marsaglia_tsang(shape + 1.0, source);
        Ok(g.ln() + source.uniform_open().ln() / shape)
    }
}

/// Draws `p ~ Dir(alpha * 1_K)` as normalized Gamma variates.
///
/// The ratio `g_k / sum_j g_j` is evaluated from log-variates shifted by their
/// maximum, which is the same quantity but cannot underflow to an all-zero
/// vector. A vector whose normalizer is still not finite and positive is
/// redrawn, up to [`MAX_DIRICHLET_RETRIES`] times.
pub fn sample_dirichlet(params: &DirichletParams, source: &mut RandomSource) -> Result<Vec<f64>> {
    let mut logs = vec![0.0; params.k];
    for _ in 0..MAX_DIRICHLET_RETRIES {
        for l in logs.iter_mut() {
            *l = sample_ln_gamma(params.alpha, source)?;
        }
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            continue;
        }
        let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            continue;
        }
        return Ok(weights.into_iter().map(|w| w / total).collect());
    }
    Err(Error::DegenerateDraw(MAX_DIRICHLET_RETRIES))
}
