//! Confluent hypergeometric function 1F1(N; NR; sigma) for positive integer
//! parameters, by direct power series or by integrating its second-order ODE
//! from a series-anchored starting point.

use crate::error::{Error, Result};
use crate::ode::{self, IntegratorSettings};

/// Magnitude at which a partial sum or term aborts a series evaluation.
pub const OVERFLOW_GUARD: f64 = 1e300;

/// Outcome of a truncated series evaluation. `converged` is one-directional:
/// when set, the last two terms were below `rel_tol * |value|`; when clear,
/// the value field holds the partial sum for diagnostics only.
#[derive(Debug, Clone, Copy)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: usize,
    pub converged: bool,
    pub last_term_magnitude: f64,
}

impl SeriesResult {
    /// Converts to the value, reporting non-convergence as an error.
    pub fn into_value(self) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::SeriesNotConverged {
                terms: self.terms_used,
                last_term: self.last_term_magnitude,
            })
        }
    }
}

/// Rising factorial (x)_n = x (x+1) ... (x+n-1), with (x)_0 = 1.
pub fn pochhammer(x: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    for k in 0..n {
        acc *= x + k as f64;
    }
    acc
}

fn check_params(n: u32, nr: u32) -> Result<()> {
    if n == 0 && nr == 0 {
        return Err(Error::domain("1F1 parameters must not both be zero"));
    }
    if nr == 0 {
        return Err(Error::domain("1F1 lower parameter must be positive"));
    }
    Ok(())
}

/// Power series for 1F1(N; NR; sigma): sum_n (N)_n/(NR)_n sigma^n/n!.
/// Terms are generated by the ratio recurrence, so each term is accurate to
/// a few ulp; stopping requires two consecutive terms below
/// `rel_tol * |partial sum|`.
pub fn hyp1f1_series(n: u32, nr: u32, sigma: f64, rel_tol: f64, n_max: usize) -> Result<SeriesResult> {
    check_params(n, nr)?;
    if !sigma.is_finite() {
        return Err(Error::domain("1F1 argument must be finite"));
    }
    let (nf, nrf) = (n as f64, nr as f64);
    let mut sum = 1.0f64;
    let mut term = 1.0f64;
    let mut consecutive_small = 0usize;
    for k in 0..n_max {
        term *= (nf + k as f64) / (nrf + k as f64) * sigma / (k as f64 + 1.0);
        sum += term;
        if !sum.is_finite() || sum.abs() > OVERFLOW_GUARD || term.abs() > OVERFLOW_GUARD {
            return Ok(SeriesResult {
                value: sum,
                terms_used: k + 2,
                converged: false,
                last_term_magnitude: term.abs(),
            });
        }
        if term.abs() <= rel_tol * sum.abs() {
            consecutive_small += 1;
            if consecutive_small >= 2 {
                return Ok(SeriesResult {
                    value: sum,
                    terms_used: k + 2,
                    converged: true,
                    last_term_magnitude: term.abs(),
                });
            }
        } else {
            consecutive_small = 0;
        }
    }
    Ok(SeriesResult {
        value: sum,
        terms_used: n_max + 1,
        converged: false,
        last_term_magnitude: term.abs(),
    })
}

/// Series for the derivative d/dsigma 1F1(N; NR; sigma), which equals
/// (N/NR) 1F1(N+1; NR+1; sigma).
pub fn hyp1f1_deriv_series(
    n: u32,
    nr: u32,
    sigma: f64,
    rel_tol: f64,
    n_max: usize,
) -> Result<SeriesResult> {
    check_params(n, nr)?;
    let scale = n as f64 / nr as f64;
    let inner = hyp1f1_series(n + 1, nr + 1, sigma, rel_tol, n_max)?;
    Ok(SeriesResult {
        value: scale * inner.value,
        last_term_magnitude: scale * inner.last_term_magnitude,
        ..inner
    })
}

/// Evaluates 1F1 and its derivative at `sigma` by integrating the companion
/// system of sigma f'' + (NR - sigma) f' - N f = 0 from `sigma0`, where the
/// series supplies the starting values. `sigma0` must lie strictly between
/// 0 and `sigma` (same sign, smaller magnitude).
pub fn hyp1f1_hgm(
    n: u32,
    nr: u32,
    sigma: f64,
    sigma0: f64,
    settings: &IntegratorSettings,
) -> Result<(f64, f64)> {
    check_params(n, nr)?;
    if sigma0 == 0.0 || sigma0.signum() != sigma.signum() || sigma0.abs() > sigma.abs() {
        return Err(Error::domain(
            "sigma0 must have the sign of sigma and magnitude in (0, |sigma|]",
        ));
    }
    let f0 = hyp1f1_series(n, nr, sigma0, 1e-13, 10_000)?.into_value()?;
    let f1 = hyp1f1_deriv_series(n, nr, sigma0, 1e-13, 10_000)?.into_value()?;
    let (nf, nrf) = (n as f64, nr as f64);
    let rhs = |s: f64, y: &[f64; 2]| [y[1], nf / s * y[0] + (1.0 - nrf / s) * y[1]];
    let y = ode::integrate(rhs, sigma0, sigma, [f0, f1], settings)?;
    Ok((y[0], y[1]))
}

/// 1F1 for production use: picks the evaluation route by argument size.
/// Nonnegative arguments use the series up to sigma = 40 and the ODE route
/// beyond; negative arguments go through the reflection
/// 1F1(N; NR; sigma) = e^sigma 1F1(NR-N; NR; -sigma), whose series has all
/// nonnegative terms and therefore no cancellation.
pub fn hyp1f1(n: u32, nr: u32, sigma: f64) -> Result<f64> {
    check_params(n, nr)?;
    if nr < n {
        return Err(Error::domain("1F1 requires NR >= N here"));
    }
    if sigma < 0.0 {
        return Ok((sigma.exp()) * hyp1f1(nr - n, nr, -sigma)?);
    }
    if sigma <= 40.0 {
        hyp1f1_series(n, nr, sigma, 1e-13, 10_000)?.into_value()
    } else {
        let settings = IntegratorSettings::default();
        Ok(hyp1f1_hgm(n, nr, sigma, 1e-2, &settings)?.0)
    }
}
