use rand::distributions::Open01;
use rand::Rng;

use crate::error::{Error, Result};

/// Adding or removing one edge changes two entries of the cluster degree
/// matrix (one per endpoint) by one each.
pub const DEGREE_VECTOR_SENSITIVITY: f64 = 2.0;
/// One edge is one entry of the upper-triangular adjacency array.
pub const ADJACENCY_ENTRY_SENSITIVITY: f64 = 1.0;
/// The edge count moves by one.
pub const EDGE_COUNT_SENSITIVITY: f64 = 1.0;

/// Inverse CDF of Laplace(0, scale) at `u ∈ (0, 1)`.
#[inline]
pub fn laplace_from_uniform(u: f64, scale: f64) -> f64 {
    let d = u - 0.5;
    if d == 0.0 {
        return 0.0;
    }
    -scale * d.signum() * (1.0 - 2.0 * d.abs()).ln()
}

pub fn laplace_cdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}

/// One draw from Laplace(0, scale), consuming exactly one uniform.
pub fn laplace_sample<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    Ok(Laplace::new(scale)?.sample(rng))
}

/// A validated Laplace(0, scale) distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Laplace {
    scale: f64,
}

impl Laplace {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid(format!("Laplace scale must be positive and finite, got {scale}")));
        }
        Ok(Self { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        laplace_from_uniform(u, self.scale)
    }
}
