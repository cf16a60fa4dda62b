//! Regularized incomplete gamma and beta functions, log-scale complementary
//! error function, and the Poisson-mixture summation used by the noncentral
//! laws.

use crate::scalar::Real;

const MAX_ITER: usize = 100_000;

/// `ln erfc(x)`, finite for every finite `x` (no underflow to `-inf`).
pub fn ln_erfc<R: Real>(x: R) -> R {
    let e = x.erfc();
    if e > R::min_positive_value() * R::c(1e8) {
        return e.ln();
    }
    // Asymptotic expansion for the far right tail:
    // erfc(x) ~ exp(-x^2)/(x sqrt(pi)) * sum_k (-1)^k (2k-1)!! / (2x^2)^k
    let two_x2 = R::c(2.0) * x * x;
    let mut term = R::one();
    let mut sum = R::one();
    for k in 1..40 {
        let next = -term * R::c((2 * k - 1) as f64) / two_x2;
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum = sum + term;
        if term.abs() < sum.abs() * R::c(R::SERIES_EPS) {
            break;
        }
    }
    -x * x - (x * R::PI().sqrt()).ln() + sum.ln()
}

/// Lower and upper regularized incomplete gamma functions `(P(a,x), Q(a,x))`.
///
/// The smaller of the two is always computed directly, so either side keeps
/// full relative accuracy in its tail.
pub fn gamma_pq<R: Real>(a: R, x: R) -> (R, R) {
    debug_assert!(a > R::zero());
    if x <= R::zero() {
        return (R::zero(), R::one());
    }
    if x.is_infinite() {
        return (R::one(), R::zero());
    }
    if x < a + R::one() {
        let ln_p = ln_gamma_p_series(a, x);
        let p = ln_p.exp();
        (p, R::one() - p)
    } else {
        let ln_q = ln_gamma_q_cf(a, x);
        let q = ln_q.exp();
        (R::one() - q, q)
    }
}

/// `ln Q(a, x)` without forming `Q` when it would underflow.
pub fn ln_gamma_q<R: Real>(a: R, x: R) -> R {
    if x <= R::zero() {
        return R::zero();
    }
    if x < a + R::one() {
        (-ln_gamma_p_series(a, x).exp()).ln_1p()
    } else {
        ln_gamma_q_cf(a, x)
    }
}

fn ln_prefactor<R: Real>(a: R, x: R) -> R {
    a * x.ln() - x - a.ln_gamma()
}

fn ln_gamma_p_series<R: Real>(a: R, x: R) -> R {
    let eps = R::c(R::SERIES_EPS);
    let mut ap = a;
    let mut term = R::one() / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap = ap + R::one();
        term = term * x / ap;
        sum = sum + term;
        if term.abs() < sum.abs() * eps {
            break;
        }
    }
    ln_prefactor(a, x) + sum.ln()
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, x)`.
fn ln_gamma_q_cf<R: Real>(a: R, x: R) -> R {
    let eps = R::c(R::SERIES_EPS);
    let tiny = R::min_positive_value() / eps;
    let mut b = x + R::one() - a;
    let mut c = R::one() / tiny;
    let mut d = R::one() / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let i_r = R::from_usize_lossy(i);
        let an = -i_r * (i_r - a);
        b = b + R::c(2.0);
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = R::one() / d;
        let del = d * c;
        h = h * del;
        if (del - R::one()).abs() < eps {
            break;
        }
    }
    ln_prefactor(a, x) + h.ln()
}

/// `ln B(a, b)`.
pub fn ln_beta<R: Real>(a: R, b: R) -> R {
    a.ln_gamma() + b.ln_gamma() - (a + b).ln_gamma()
}

/// Regularized incomplete beta `(I_x(a,b), 1 - I_x(a,b))`.
///
/// Takes both `x` and `1 - x` so callers can pass a complement that was
/// formed without cancellation.
pub fn beta_pq<R: Real>(x: R, one_minus_x: R, a: R, b: R) -> (R, R) {
    if x <= R::zero() {
        return (R::zero(), R::one());
    }
    if one_minus_x <= R::zero() {
        return (R::one(), R::zero());
    }
    let ln_front = a * x.ln() + b * one_minus_x.ln() - ln_beta(a, b);
    if x < (a + R::one()) / (a + b + R::c(2.0)) {
        let i = (ln_front + betacf(x, a, b).ln() - a.ln()).exp();
        (i, R::one() - i)
    } else {
        let j = (ln_front + betacf(one_minus_x, b, a).ln() - b.ln()).exp();
        (R::one() - j, j)
    }
}

fn betacf<R: Real>(x: R, a: R, b: R) -> R {
    let eps = R::c(R::SERIES_EPS);
    let tiny = R::min_positive_value() / eps;
    let qab = a + b;
    let qap = a + R::one();
    let qam = a - R::one();
    let mut c = R::one();
    let mut d = R::one() - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = R::one() / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m_r = R::from_usize_lossy(m);
        let m2 = R::c(2.0) * m_r;
        let aa = m_r * (b - m_r) * x / ((qam + m2) * (a + m2));
        d = R::one() + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = R::one() + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = R::one() / d;
        h = h * d * c;
        let aa = -(a + m_r) * (qab + m_r) * x / ((a + m2) * (qap + m2));
        d = R::one() + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = R::one() + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = R::one() / d;
        let del = d * c;
        h = h * del;
        if (del - R::one()).abs() < eps {
            break;
        }
    }
    h
}

/// How the central-term probabilities move with the Poisson index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TermTrend {
    /// Survival-side terms: grow toward 1 as the index increases.
    Increasing,
    /// CDF-side terms: shrink toward 0 as the index increases.
    Decreasing,
}

/// Σ_j Pois(j; λ) · term(j), summed outward from the Poisson mode.
///
/// Each direction stops once a bound on its remaining contribution (remaining
/// Poisson mass times the largest central term it can still meet) falls below
/// `1e-16` of the running sum, which keeps relative accuracy in far tails.
pub(crate) fn poisson_mixture<R: Real>(lambda: R, trend: TermTrend, term: impl Fn(usize) -> R) -> R {
    if lambda <= R::zero() {
        return term(0);
    }
    let rel = R::c(1e-16);
    let floor = R::min_positive_value();
    let mode = lambda.floor().to_usize().unwrap_or(0);
    let mode_r = R::from_usize_lossy(mode);
    let w_mode = (-lambda + mode_r * lambda.ln() - (mode_r + R::one()).ln_gamma()).exp();

    let t_mode = term(mode);
    let mut sum = w_mode * t_mode;

    // Upward: w_{j+1} = w_j λ / (j+1).
    let mut w = w_mode;
    let mut j = mode;
    let mut last_term = t_mode;
    for _ in 0..MAX_ITER {
        let next = j + 1;
        let next_r = R::from_usize_lossy(next);
        let w_next = w * lambda / next_r;
        let ratio = lambda / (next_r + R::one());
        if ratio < R::one() {
            let mass = w_next / (R::one() - ratio);
            let cap = match trend {
                TermTrend::Increasing => R::one(),
                TermTrend::Decreasing => last_term,
            };
            if mass * cap <= rel * sum || mass * cap < floor {
                break;
            }
        }
        let t = term(next);
        sum = sum + w_next * t;
        w = w_next;
        j = next;
        last_term = t;
    }

    // Downward: w_{j-1} = w_j j / λ.
    let mut w = w_mode;
    let mut j = mode;
    let mut last_term = t_mode;
    while j > 0 {
        let j_r = R::from_usize_lossy(j);
        let w_prev = w * j_r / lambda;
        let ratio = (j_r - R::one()) / lambda;
        if ratio < R::one() {
            let mass = w_prev / (R::one() - ratio);
            let cap = match trend {
                TermTrend::Increasing => last_term,
                TermTrend::Decreasing => R::one(),
            };
            if mass * cap <= rel * sum || mass * cap < floor {
                break;
            }
        }
        let t = term(j - 1);
        sum = sum + w_prev * t;
        w = w_prev;
        j -= 1;
        last_term = t;
    }
    sum
}

/// Root of a monotone function bracketed by `[lo, hi]` (with `f(lo)` and
/// `f(hi)` of opposite sign), by Illinois-modified regula falsi with a
/// bisection safeguard.
pub(crate) fn solve_bracketed<R: Real>(mut lo: R, mut hi: R, f: impl Fn(R) -> R) -> R {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == R::zero() {
        return lo;
    }
    if f_hi == R::zero() {
        return hi;
    }
    let mut side = 0i8;
    let x_tol = R::c(R::SERIES_EPS) * R::c(4.0);
    for iter in 0..400 {
        let width = hi - lo;
        if width <= x_tol * (lo.abs() + hi.abs()) || width <= R::min_positive_value() {
            break;
        }
        let secant = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let mid = lo + width * R::c(0.5);
        // Every fourth step bisects, so slow secant progress cannot stall.
        let x = if iter % 4 == 3 || !(secant > lo && secant < hi) { mid } else { secant };
        let fx = f(x);
        if fx == R::zero() {
            return x;
        }
        if (fx < R::zero()) == (f_lo < R::zero()) {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi = f_hi * R::c(0.5);
            }
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo = f_lo * R::c(0.5);
            }
            side = 1;
        }
    }
    if f_lo.abs() < f_hi.abs() {
        lo
    } else {
        hi
    }
}
