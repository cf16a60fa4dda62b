//! Central and noncentral chi-square laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::special::{gamma_pq, ln_erfc, ln_gamma_q, poisson_mixture, solve_bracketed, TermTrend};

/// χ²_df(δ). `delta = 0` is the central law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareNoncentral<R> {
    df: u32,
    delta: R,
}

impl<R: Real> ChiSquareNoncentral<R> {
    pub fn new(df: u32, delta: R) -> Result<Self> {
        if df == 0 {
            return Err(Error::domain("chi-square degrees of freedom must be >= 1"));
        }
        if !(delta >= R::zero()) || delta.is_infinite() {
            return Err(Error::domain(format!("noncentrality must be finite and >= 0, got {delta}")));
        }
        Ok(Self { df, delta })
    }

    pub fn central(df: u32) -> Result<Self> {
        Self::new(df, R::zero())
    }

    pub fn df(&self) -> u32 {
        self.df
    }

    pub fn delta(&self) -> R {
        self.delta
    }

    pub fn cdf(&self, x: R) -> Result<R> {
        check_support(x)?;
        Ok(self.cdf_unchecked(x))
    }

    /// Upper tail, summed on the survival side (never `1 - cdf`).
    pub fn sf(&self, x: R) -> Result<R> {
        check_support(x)?;
        Ok(self.sf_unchecked(x))
    }

    pub(crate) fn cdf_unchecked(&self, x: R) -> R {
        if x <= R::zero() {
            return R::zero();
        }
        let half_x = x * R::c(0.5);
        let df = self.df;
        poisson_mixture(self.delta * R::c(0.5), TermTrend::Decreasing, |j| gamma_pq(half_df::<R>(df, j), half_x).0)
            .min(R::one())
    }

    pub(crate) fn sf_unchecked(&self, x: R) -> R {
        if x <= R::zero() {
            return R::one();
        }
        if self.delta == R::zero() {
            return central_sf(x, self.df);
        }
        let half_x = x * R::c(0.5);
        let df = self.df;
        poisson_mixture(self.delta * R::c(0.5), TermTrend::Increasing, |j| gamma_pq(half_df::<R>(df, j), half_x).1)
            .min(R::one())
    }
}

#[inline]
fn half_df<R: Real>(df: u32, j: usize) -> R {
    R::c(df as f64) * R::c(0.5) + R::from_usize_lossy(j)
}

fn check_support<R: Real>(x: R) -> Result<()> {
    if x >= R::zero() {
        Ok(())
    } else {
        Err(Error::domain(format!("chi-square argument must be >= 0, got {x}")))
    }
}

/// P(X ≤ x) for X ~ `dist`.
pub fn chisq_cdf<R: Real>(x: R, dist: &ChiSquareNoncentral<R>) -> Result<R> {
    dist.cdf(x)
}

/// P(X > x) for X ~ `dist`.
pub fn chisq_sf<R: Real>(x: R, dist: &ChiSquareNoncentral<R>) -> Result<R> {
    dist.sf(x)
}

/// Central upper tail with the df = 1 and df = 2 closed forms on the fast path.
#[inline]
pub fn central_sf<R: Real>(x: R, df: u32) -> R {
    if x <= R::zero() {
        return R::one();
    }
    match df {
        1 => (x * R::c(0.5)).sqrt().erfc(),
        2 => (-x * R::c(0.5)).exp(),
        _ => gamma_pq(R::c(df as f64) * R::c(0.5), x * R::c(0.5)).1,
    }
}

/// ln P(χ²_df > x); stays finite where the tail probability underflows.
#[inline]
pub fn central_ln_sf<R: Real>(x: R, df: u32) -> R {
    if x <= R::zero() {
        return R::zero();
    }
    match df {
        1 => ln_erfc((x * R::c(0.5)).sqrt()),
        2 => -x * R::c(0.5),
        _ => ln_gamma_q(R::c(df as f64) * R::c(0.5), x * R::c(0.5)),
    }
}

fn central_ln_cdf<R: Real>(x: R, df: u32) -> R {
    let (p, q) = gamma_pq(R::c(df as f64) * R::c(0.5), x * R::c(0.5));
    if p < R::c(0.5) {
        p.ln()
    } else {
        (-q).ln_1p()
    }
}

fn check_df(df: u32) -> Result<()> {
    if df == 0 {
        Err(Error::domain("chi-square degrees of freedom must be >= 1"))
    } else {
        Ok(())
    }
}

fn check_prob<R: Real>(p: R, what: &str) -> Result<()> {
    if p > R::zero() && p < R::one() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} needs a probability in (0, 1), got {p}")))
    }
}

/// Wilson–Hilferty starting point for the central quantile at upper tail `q`.
fn wilson_hilferty<R: Real>(q: R, df: u32) -> R {
    let k = R::c(df as f64);
    let z = super::normal::quantile_unchecked(R::one() - q.min(R::c(0.5))).max(R::zero());
    let h = R::c(2.0) / (R::c(9.0) * k);
    let base = (R::one() - h + z * h.sqrt()).max(R::c(0.05));
    (k * base * base * base).max(R::c(1e-3))
}

/// Central χ²_df quantile: the `x` with `cdf(x) = p`.
pub fn chisq_quantile<R: Real>(p: R, df: u32) -> Result<R> {
    check_df(df)?;
    check_prob(p, "chi-square quantile")?;
    if p > R::c(0.5) {
        return Ok(isf_upper(R::one() - p, df));
    }
    // Lower half: bracket from the guess downward, residual in log-CDF.
    let ln_p = p.ln();
    let f = |x: R| central_ln_cdf(x, df) - ln_p;
    let mut hi = wilson_hilferty(R::c(0.5), df).max(R::one());
    while f(hi) < R::zero() {
        hi = hi * R::c(2.0);
    }
    let mut lo = hi * R::c(0.5);
    while f(lo) > R::zero() {
        lo = lo * R::c(0.25);
        if lo < R::min_positive_value() * R::c(1e4) {
            break;
        }
    }
    Ok(solve_bracketed(lo, hi, f))
}

/// Central χ²_df upper quantile: the `x` with `sf(x) = q`. Solved on the
/// survival side so q = 1e-7 and smaller keep full precision.
pub fn chisq_isf<R: Real>(q: R, df: u32) -> Result<R> {
    check_df(df)?;
    check_prob(q, "chi-square upper quantile")?;
    if q > R::c(0.5) {
        return chisq_quantile(R::one() - q, df);
    }
    Ok(isf_upper(q, df))
}

fn isf_upper<R: Real>(q: R, df: u32) -> R {
    let ln_q = q.ln();
    // Increasing in x: ln q - ln sf(x).
    let f = |x: R| ln_q - central_ln_sf(x, df);
    let guess = wilson_hilferty(q, df);
    let mut hi = guess * R::c(1.5) + R::one();
    while f(hi) < R::zero() {
        hi = hi * R::c(2.0);
    }
    let mut lo = guess * R::c(0.5);
    while lo > R::zero() && f(lo) > R::zero() {
        lo = lo * R::c(0.5);
        if lo < R::c(1e-300) {
            lo = R::zero();
        }
    }
    solve_bracketed(lo, hi, f)
}
