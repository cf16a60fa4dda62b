//! Gauss–Hermite quadrature for expectations over normally distributed
//! study effects.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_NODES: usize = 64;

/// Nodes and weights for ∫ f(x) e^{−x²} dx ≈ Σ wᵢ f(xᵢ).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermiteRule<R> {
    nodes: Vec<R>,
    weights: Vec<R>,
}

impl<R: Real> GaussHermiteRule<R> {
    /// Newton iteration on the orthonormal Hermite recurrence, seeded with
    /// the usual asymptotic guesses for the largest roots.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("Gauss-Hermite rule needs at least one node"));
        }
        let pim4 = R::PI().powf(R::c(-0.25));
        let n_r = R::from_usize_lossy(n);
        let mut nodes = vec![R::zero(); n];
        let mut weights = vec![R::zero(); n];
        let half = n.div_ceil(2);
        let mut z = R::zero();
        for i in 0..half {
            z = match i {
                0 => {
                    let t = R::c(2.0) * n_r + R::one();
                    t.sqrt() - R::c(1.85575) * t.powf(R::c(-1.0 / 6.0))
                }
                1 => z - R::c(1.14) * n_r.powf(R::c(0.426)) / z,
                2 => R::c(1.86) * z - R::c(0.86) * nodes[0],
                3 => R::c(1.91) * z - R::c(0.91) * nodes[1],
                _ => R::c(2.0) * z - nodes[i - 2],
            };
            let mut pp = R::one();
            for _ in 0..200 {
                let mut p1 = pim4;
                let mut p2 = R::zero();
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jr = R::from_usize_lossy(j);
                    p1 = z * (R::c(2.0) / (jr + R::one())).sqrt() * p2 - (jr / (jr + R::one())).sqrt() * p3;
                }
                pp = (R::c(2.0) * n_r).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= R::c(R::SERIES_EPS) * R::c(16.0) * z.abs().max(R::one()) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            let w = R::c(2.0) / (pp * pp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = R::zero();
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[R] {
        &self.nodes
    }

    pub fn weights(&self) -> &[R] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// E[f(X)] for X ~ N(mean, sd²). With `sd = 0` this is `f(mean)`.
    pub fn expect_normal(&self, mean: R, sd: R, mut f: impl FnMut(R) -> R) -> R {
        if sd == R::zero() {
            return f(mean);
        }
        let scale = R::SQRT_2() * sd;
        let total = self.nodes.iter().zip(&self.weights).fold(R::zero(), |acc, (&x, &w)| acc + w * f(mean + scale * x));
        total / R::PI().sqrt()
    }
}
