//! Standard normal distribution.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::special::ln_erfc;

/// Φ(x). Below about −37.5 the value is formed from the log-scale path so it
/// stays strictly positive (subnormal) instead of flushing to zero.
pub fn normal_cdf<R: Real>(x: R) -> R {
    let z = -x / R::SQRT_2();
    let v = R::c(0.5) * z.erfc();
    if v > R::c(1e-290) || x > R::zero() {
        v
    } else {
        log_normal_cdf(x).exp()
    }
}

/// 1 − Φ(x), computed directly.
#[inline]
pub fn normal_sf<R: Real>(x: R) -> R {
    normal_cdf(-x)
}

/// ln Φ(x), finite for every finite `x`.
pub fn log_normal_cdf<R: Real>(x: R) -> R {
    ln_erfc(-x / R::SQRT_2()) - R::LN_2()
}

/// Standard normal density.
#[inline]
pub fn normal_pdf<R: Real>(x: R) -> R {
    (-(x * x) * R::c(0.5)).exp() / (R::c(2.0) * R::PI()).sqrt()
}

/// Φ⁻¹(p) for `p` in (0, 1).
pub fn normal_quantile<R: Real>(p: R) -> Result<R> {
    if !(p > R::zero() && p < R::one()) {
        return Err(Error::domain(format!("normal quantile needs 0 < p < 1, got {p}")));
    }
    Ok(quantile_unchecked(p))
}

/// Upper-tail quantile: the `x` with 1 − Φ(x) = q.
pub fn normal_isf<R: Real>(q: R) -> Result<R> {
    normal_quantile(q).map(|x| -x)
}

const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.38357751867269e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00];

/// Rational initial guess refined by one Halley step against `normal_cdf`.
/// The upper half is handled by reflection so both tails keep relative
/// accuracy in the probability that is actually small.
pub(crate) fn quantile_unchecked<R: Real>(p: R) -> R {
    let half = R::c(0.5);
    if p > half {
        return -quantile_unchecked(R::one() - p);
    }
    let x0 = if p < R::c(0.02425) {
        let q = (R::c(-2.0) * p.ln()).sqrt();
        let num =
            ((((R::c(C[0]) * q + R::c(C[1])) * q + R::c(C[2])) * q + R::c(C[3])) * q + R::c(C[4])) * q + R::c(C[5]);
        let den = (((R::c(D[0]) * q + R::c(D[1])) * q + R::c(D[2])) * q + R::c(D[3])) * q + R::one();
        num / den
    } else {
        let q = p - half;
        let r = q * q;
        let num = (((((R::c(A[0]) * r + R::c(A[1])) * r + R::c(A[2])) * r + R::c(A[3])) * r + R::c(A[4])) * r
            + R::c(A[5]))
            * q;
        let den = ((((R::c(B[0]) * r + R::c(B[1])) * r + R::c(B[2])) * r + R::c(B[3])) * r + R::c(B[4])) * r + R::one();
        num / den
    };
    halley_step(x0, p)
}

fn halley_step<R: Real>(x: R, p: R) -> R {
    let e = normal_cdf(x) - p;
    if e == R::zero() {
        return x;
    }
    // u = e / φ(x), formed in logs so it cannot overflow deep in the tail.
    let ln_u = e.abs().ln() + x * x * R::c(0.5) + (R::c(2.0) * R::PI()).sqrt().ln();
    let u = ln_u.exp() * e.signum();
    x - u / (R::one() + x * u * R::c(0.5))
}
