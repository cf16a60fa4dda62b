//! Central and noncentral F laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::special::{beta_pq, poisson_mixture, solve_bracketed, TermTrend};

/// F_{df1,df2}(δ), noncentrality on the numerator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FNoncentral<R> {
    df1: u32,
    df2: u32,
    delta: R,
}

impl<R: Real> FNoncentral<R> {
    pub fn new(df1: u32, df2: u32, delta: R) -> Result<Self> {
        if df1 == 0 || df2 == 0 {
            return Err(Error::domain(format!("F degrees of freedom must be >= 1, got ({df1}, {df2})")));
        }
        if !(delta >= R::zero()) || delta.is_infinite() {
            return Err(Error::domain(format!("noncentrality must be finite and >= 0, got {delta}")));
        }
        Ok(Self { df1, df2, delta })
    }

    pub fn central(df1: u32, df2: u32) -> Result<Self> {
        Self::new(df1, df2, R::zero())
    }

    pub fn df1(&self) -> u32 {
        self.df1
    }

    pub fn df2(&self) -> u32 {
        self.df2
    }

    pub fn delta(&self) -> R {
        self.delta
    }

    pub fn cdf(&self, x: R) -> Result<R> {
        check_support(x)?;
        Ok(self.pq(x).0)
    }

    pub fn sf(&self, x: R) -> Result<R> {
        check_support(x)?;
        Ok(self.pq(x).1)
    }

    /// Mixture over Poisson(δ/2) of central beta terms
    /// I_y(df1/2 + j, df2/2), y = df1·x / (df1·x + df2).
    fn pq(&self, x: R) -> (R, R) {
        if x <= R::zero() {
            return (R::zero(), R::one());
        }
        let d1 = R::c(self.df1 as f64);
        let d2 = R::c(self.df2 as f64);
        let denom = d1 * x + d2;
        let y = d1 * x / denom;
        let y_c = d2 / denom;
        let a0 = d1 * R::c(0.5);
        let b = d2 * R::c(0.5);
        if self.delta == R::zero() {
            return beta_pq(y, y_c, a0, b);
        }
        let lambda = self.delta * R::c(0.5);
        let term = |j: usize| beta_pq(y, y_c, a0 + R::from_usize_lossy(j), b);
        let cdf = poisson_mixture(lambda, TermTrend::Decreasing, |j| term(j).0);
        let sf = poisson_mixture(lambda, TermTrend::Increasing, |j| term(j).1);
        (cdf.min(R::one()), sf.min(R::one()))
    }
}

fn check_support<R: Real>(x: R) -> Result<()> {
    if x >= R::zero() {
        Ok(())
    } else {
        Err(Error::domain(format!("F argument must be >= 0, got {x}")))
    }
}

pub fn f_cdf<R: Real>(x: R, dist: &FNoncentral<R>) -> Result<R> {
    dist.cdf(x)
}

pub fn f_sf<R: Real>(x: R, dist: &FNoncentral<R>) -> Result<R> {
    dist.sf(x)
}

/// Central F quantile: the `x` with `cdf(x) = p`.
pub fn f_quantile<R: Real>(p: R, df1: u32, df2: u32) -> Result<R> {
    if !(p > R::zero() && p < R::one()) {
        return Err(Error::domain(format!("F quantile needs 0 < p < 1, got {p}")));
    }
    let dist = FNoncentral::central(df1, df2)?;
    if p > R::c(0.5) {
        return Ok(upper(&dist, R::one() - p));
    }
    let ln_p = p.ln();
    let f = |x: R| dist.pq(x).0.ln() - ln_p;
    let mut hi = R::one();
    while f(hi) < R::zero() {
        hi = hi * R::c(2.0);
    }
    let mut lo = hi * R::c(0.5);
    while f(lo) > R::zero() && lo > R::c(1e-300) {
        lo = lo * R::c(0.25);
    }
    Ok(solve_bracketed(lo, hi, f))
}

/// Central F upper quantile: the `x` with `sf(x) = q`.
pub fn f_isf<R: Real>(q: R, df1: u32, df2: u32) -> Result<R> {
    if !(q > R::zero() && q < R::one()) {
        return Err(Error::domain(format!("F upper quantile needs 0 < q < 1, got {q}")));
    }
    if q > R::c(0.5) {
        return f_quantile(R::one() - q, df1, df2);
    }
    let dist = FNoncentral::central(df1, df2)?;
    Ok(upper(&dist, q))
}

fn upper<R: Real>(dist: &FNoncentral<R>, q: R) -> R {
    let ln_q = q.ln();
    let f = |x: R| ln_q - dist.pq(x).1.ln();
    let mut hi = R::c(2.0);
    while f(hi) < R::zero() {
        hi = hi * R::c(4.0);
    }
    let mut lo = hi * R::c(0.25);
    while lo > R::zero() && f(lo) > R::zero() {
        lo = lo * R::c(0.25);
        if lo < R::c(1e-300) {
            lo = R::zero();
        }
    }
    solve_bracketed(lo, hi, f)
}
