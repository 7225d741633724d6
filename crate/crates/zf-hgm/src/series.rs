//! Power-series model of the normalized stream-1 SNR density p(t, a) and its
//! first t-derivatives (scale parameter fixed at 1; callers rescale).
//!
//! The density is an infinite mixture indexed by n with weights
//! A_n(a) = (N)_n/(NR)_n a^n/n!, each contributing an alternating binomial
//! sum of t^k e^{-t}/k! terms. Every term is evaluated in log space, so a
//! term of huge magnitude carries relative rounding at that magnitude; when
//! the alternating sums cancel down many orders, the result silently loses
//! digits. `converged` therefore demands both tail decay (two consecutive
//! terms under rel_tol * |sum|) and a cancellation bound: the largest
//! intermediate magnitude, times machine epsilon, must stay within
//! 100 * rel_tol of the final sum. With the default policy this flags the
//! regime where the series loses more than ~11 digits, which is exactly the
//! large-a breakdown that motivates the ODE evaluation route.

use crate::error::{Error, Result};
use crate::special::{self, SeriesResult};

/// Truncation and abort policy for the density series.
#[derive(Debug, Clone, Copy)]
pub struct TruncationPolicy {
    pub rel_tol: f64,
    pub n_max: usize,
    pub overflow_guard: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            rel_tol: 1e-13,
            n_max: 10_000,
            overflow_guard: special::OVERFLOW_GUARD,
        }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::invalid("rel_tol must lie in (0, 1)"));
        }
        if self.n_max < 3 {
            return Err(Error::invalid("n_max must be at least 3"));
        }
        if !(self.overflow_guard > 1.0) {
            return Err(Error::invalid("overflow_guard must exceed 1"));
        }
        Ok(())
    }
}

/// Density value and first two t-derivatives at one point of the (t, a)
/// plane, in normalized units.
#[derive(Debug, Clone, Copy)]
pub struct StateVector {
    pub t: f64,
    pub a: f64,
    pub p: f64,
    pub p1: f64,
    pub p2: f64,
}

/// Ratio of tolerated cancellation error to rel_tol; see the module docs.
const CANCELLATION_SAFETY: f64 = 100.0;

/// Growing table of ln(k!).
struct LnFact(Vec<f64>);

impl LnFact {
    fn new() -> Self {
        LnFact(vec![0.0, 0.0])
    }

    #[inline]
    fn get(&mut self, k: usize) -> f64 {
        while self.0.len() <= k {
            let i = self.0.len();
            let prev = self.0[i - 1];
            self.0.push(prev + (i as f64).ln());
        }
        self.0[k]
    }
}

fn check_point(t: f64, a: f64, nr_ge_n: (u32, u32)) -> Result<()> {
    let (n, nr) = nr_ge_n;
    if n == 0 || nr == 0 {
        return Err(Error::domain("N and NR must be positive"));
    }
    if nr < n {
        return Err(Error::domain("NR must be at least N"));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain("t must be positive and finite"));
    }
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::domain("a must be nonnegative and finite"));
    }
    Ok(())
}

struct OuterSum {
    sum: f64,
    peak: f64,
    terms_used: usize,
    stopped: bool,
    overflowed: bool,
    last_term: f64,
}

/// Shared outer loop: sums A_n(a) * inner(n) with the stopping and abort
/// rules of `policy`. `inner` returns the inner alternating sum and its
/// intermediate peak magnitude.
fn outer_sum(
    n_start: usize,
    a: f64,
    n_param: f64,
    nr_param: f64,
    policy: &TruncationPolicy,
    mut inner: impl FnMut(usize, &mut LnFact) -> (f64, f64),
) -> OuterSum {
    let mut lf = LnFact::new();
    // A_{n_start} built directly; subsequent weights by recurrence.
    let mut weight = special::pochhammer(n_param, n_start as u32)
        / special::pochhammer(nr_param, n_start as u32)
        * a.powi(n_start as i32)
        / (1..=n_start).map(|k| k as f64).product::<f64>();
    let mut sum = 0.0f64;
    let mut peak = 0.0f64;
    let mut consecutive_small = 0usize;
    let mut last_term;
    let mut n = n_start;
    loop {
        let (inner_sum, inner_peak) = inner(n, &mut lf);
        let term = weight * inner_sum;
        let weighted_peak = weight.abs() * inner_peak;
        if weighted_peak > peak {
            peak = weighted_peak;
        }
        sum += term;
        last_term = term.abs();
        let blown = !sum.is_finite()
            || !term.is_finite()
            || sum.abs() > policy.overflow_guard
            || term.abs() > policy.overflow_guard
            || weighted_peak > policy.overflow_guard;
        if blown {
            return OuterSum {
                sum,
                peak,
                terms_used: n - n_start + 1,
                stopped: false,
                overflowed: true,
                last_term,
            };
        }
        if n > n_start && term.abs() <= policy.rel_tol * sum.abs() {
            consecutive_small += 1;
            if consecutive_small >= 2 {
                return OuterSum {
                    sum,
                    peak,
                    terms_used: n - n_start + 1,
                    stopped: true,
                    overflowed: false,
                    last_term,
                };
            }
        } else {
            consecutive_small = 0;
        }
        if n - n_start + 1 >= policy.n_max {
            return OuterSum {
                sum,
                peak,
                terms_used: n - n_start + 1,
                stopped: false,
                overflowed: false,
                last_term,
            };
        }
        weight *= (n_param + n as f64) / (nr_param + n as f64) * a / (n as f64 + 1.0);
        n += 1;
    }
}

fn finish(out: OuterSum, scale: f64, policy: &TruncationPolicy) -> SeriesResult {
    let cancellation_ok =
        f64::EPSILON * out.peak <= CANCELLATION_SAFETY * policy.rel_tol * out.sum.abs();
    SeriesResult {
        value: out.sum * scale,
        terms_used: out.terms_used,
        converged: out.stopped && !out.overflowed && cancellation_ok,
        last_term_magnitude: out.last_term * scale,
    }
}

/// Normalized density p(t, a) by direct series summation. Non-convergence
/// (term budget, overflow guard, or cancellation beyond the policy bound) is
/// reported through the `converged` flag, not as an error.
pub fn pdf_series(t: f64, a: f64, n: u32, nr: u32, policy: &TruncationPolicy) -> Result<SeriesResult> {
    check_point(t, a, (n, nr))?;
    policy.validate()?;
    let ln_t = t.ln();
    let nu = n as usize;
    let out = outer_sum(0, a, n as f64, nr as f64, policy, |nn, lf| {
        let mut s = 0.0f64;
        let mut ipeak = 0.0f64;
        for m in 0..=nn {
            let k = nu + nn - m - 1;
            let ln_mag = lf.get(nn) - lf.get(m) - lf.get(nn - m) + k as f64 * ln_t - lf.get(k);
            let mag = ln_mag.exp();
            s += if m % 2 == 0 { mag } else { -mag };
            if mag > ipeak {
                ipeak = mag;
            }
            if s.abs() > ipeak {
                ipeak = s.abs();
            }
        }
        (s, ipeak)
    });
    Ok(finish(out, (-t).exp(), policy))
}

/// Density value at t -> 0+: 1F1(N; NR; -a) when N = 1, zero otherwise.
pub fn pdf_boundary(a: f64, n: u32, nr: u32) -> Result<f64> {
    if n == 0 || nr == 0 || nr < n {
        return Err(Error::domain("need 0 < N <= NR"));
    }
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::domain("a must be nonnegative and finite"));
    }
    if n == 1 {
        special::hyp1f1(1, nr, -a)
    } else {
        Ok(0.0)
    }
}

/// q-th t-derivative of the auxiliary series g(t, a), where the
/// exponential-free part of the density factors as f = t^(N-1) g.
fn g_series(
    q: usize,
    t: f64,
    a: f64,
    n: u32,
    nr: u32,
    policy: &TruncationPolicy,
) -> Result<SeriesResult> {
    check_point(t, a, (n, nr))?;
    policy.validate()?;
    let ln_t = t.ln();
    let nu = n as usize;
    let out = outer_sum(q, a, n as f64, nr as f64, policy, |nn, lf| {
        let mut s = 0.0f64;
        let mut ipeak = 0.0f64;
        for r in q..=nn {
            let ln_mag = lf.get(nn) - lf.get(r) - lf.get(nn - r) + lf.get(r) - lf.get(r - q)
                + (r - q) as f64 * ln_t
                - lf.get(nu - 1 + r);
            let mag = ln_mag.exp();
            s += if (nn - r) % 2 == 0 { mag } else { -mag };
            if mag > ipeak {
                ipeak = mag;
            }
            if s.abs() > ipeak {
                ipeak = s.abs();
            }
        }
        (s, ipeak)
    });
    Ok(finish(out, 1.0, policy))
}

/// Derivatives f^(q) of f = t^(N-1) g via the product rule; the factor
/// t^(N-1) differentiates away after N-1 orders, which reproduces the
/// low-N special cases without separate branches.
fn f_derivs(t: f64, n: u32, g: &[f64]) -> Vec<f64> {
    let nm1 = (n - 1) as usize;
    let mut out = Vec::with_capacity(g.len());
    for q in 0..g.len() {
        let mut acc = 0.0;
        let mut binom = 1.0f64;
        let mut falling = 1.0f64;
        for k in 0..=q.min(nm1) {
            acc += binom * falling * t.powi((nm1 - k) as i32) * g[q - k];
            binom = binom * (q - k) as f64 / (k as f64 + 1.0);
            falling *= (nm1 - k) as f64;
        }
        out.push(acc);
    }
    out
}

/// Density and first two t-derivatives by series, for anchoring the ODE
/// system. Errors if any of the three series fails to converge.
pub fn pdf_derivatives_series(
    t: f64,
    a: f64,
    n: u32,
    nr: u32,
    policy: &TruncationPolicy,
) -> Result<StateVector> {
    let g: Vec<f64> = (0..3)
        .map(|q| g_series(q, t, a, n, nr, policy)?.into_value())
        .collect::<Result<_>>()?;
    let f = f_derivs(t, n, &g);
    let e = (-t).exp();
    Ok(StateVector {
        t,
        a,
        p: e * f[0],
        p1: e * (f[1] - f[0]),
        p2: e * (f[2] - 2.0 * f[1] + f[0]),
    })
}

/// Third t-derivative by series (one extra order of the same machinery);
/// used to check the density against its governing ODE.
pub fn pdf_dt3_series(t: f64, a: f64, n: u32, nr: u32, policy: &TruncationPolicy) -> Result<f64> {
    let g: Vec<f64> = (0..4)
        .map(|q| g_series(q, t, a, n, nr, policy)?.into_value())
        .collect::<Result<_>>()?;
    let f = f_derivs(t, n, &g);
    Ok((-t).exp() * (f[3] - 3.0 * f[2] + 3.0 * f[1] - f[0]))
}

/// Series-anchored starting state at t = u0 on the ray a = c t.
pub fn initial_state(u0: f64, c: f64, n: u32, nr: u32, policy: &TruncationPolicy) -> Result<StateVector> {
    if !(u0 > 0.0) || !u0.is_finite() {
        return Err(Error::domain("u0 must be positive and finite"));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::domain("c must be nonnegative and finite"));
    }
    pdf_derivatives_series(u0, c * u0, n, nr, policy)
}

/// Moment generating function of the stream-1 SNR on its real domain
/// s < 1/gamma1: (1 - gamma1 s)^(-N) 1F1(N; NR; a gamma1 s / (1 - gamma1 s)).
pub fn mgf_closed(s: f64, a: f64, n: u32, nr: u32, gamma1: f64) -> Result<f64> {
    if n == 0 || nr == 0 || nr < n {
        return Err(Error::domain("need 0 < N <= NR"));
    }
    if !(gamma1 > 0.0) || !gamma1.is_finite() {
        return Err(Error::domain("gamma1 must be positive and finite"));
    }
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::domain("a must be nonnegative and finite"));
    }
    if !(s < 1.0 / gamma1) || !s.is_finite() {
        return Err(Error::domain("mgf requires s < 1/gamma1"));
    }
    let base = (1.0 - gamma1 * s).powi(-(n as i32));
    let sigma = a * gamma1 * s / (1.0 - gamma1 * s);
    Ok(base * special::hyp1f1(n, nr, sigma)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const N: u32 = 5;
    const NR: u32 = 6;
    const A_K1: f64 = 6.687739605147513; // 12 K/(K+1) at K = 1 dB
    const A_K7: f64 = 10.003949630201257; // 12 K/(K+1) at K = 7 dB

    fn policy() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    #[test]
    fn central_case_is_gamma_density() {
        // a = 0 collapses to t^4 e^-t / 4!.
        let r = pdf_series(1.0, 0.0, N, NR, &policy()).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.value, (-1.0f64).exp() / 24.0, max_relative = 1e-13);
    }

    // Reference values computed with 60-digit arithmetic from the series.
    #[test]
    fn series_reference_values() {
        let r = pdf_series(1.0, 0.5, N, NR, &policy()).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.value, 0.010994725615653887903, max_relative = 1e-11);

        let r = pdf_series(2.0, 1.25, N, NR, &policy()).unwrap();
        assert_relative_eq!(r.value, 0.047932820543599106223, max_relative = 1e-11);

        let r = pdf_series(0.5, A_K1, N, NR, &policy()).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.value, 1.6948790359161848397e-5, max_relative = 1e-9);

        let r = pdf_series(12.0, A_K1, N, NR, &policy()).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.value, 0.080613346052779723171, max_relative = 1e-9);
    }

    #[test]
    fn large_noncentrality_trips_cancellation_flag() {
        let r = pdf_series(15.0, A_K7, N, NR, &policy()).unwrap();
        assert!(!r.converged);
        // A looser accuracy demand accepts the same evaluation.
        let loose = TruncationPolicy {
            rel_tol: 1e-6,
            ..policy()
        };
        let r = pdf_series(15.0, A_K7, N, NR, &loose).unwrap();
        assert!(r.converged);
    }

    #[test]
    fn boundary_value() {
        assert_relative_eq!(
            pdf_boundary(2.0, 1, 4).unwrap(),
            0.64849853757254048108,
            max_relative = 1e-12
        );
        assert_eq!(pdf_boundary(2.0, 5, 6).unwrap(), 0.0);
        assert_eq!(pdf_boundary(0.0, 1, 4).unwrap(), 1.0);
    }

    #[test]
    fn derivative_state_reference_values() {
        let s = pdf_derivatives_series(1.5, 0.3, N, NR, &policy()).unwrap();
        assert_relative_eq!(s.p, 0.039509205076155102828, max_relative = 1e-11);
        assert_relative_eq!(s.p1, 0.067789413824342698071, max_relative = 1e-11);
        assert_relative_eq!(s.p2, 0.046060405956798719826, max_relative = 1e-11);
        let p3 = pdf_dt3_series(1.5, 0.3, N, NR, &policy()).unwrap();
        assert_relative_eq!(p3, -0.068392877092502966566, max_relative = 1e-10);
    }

    #[test]
    fn central_derivatives_match_gamma_density() {
        // For a = 0: p = t^4 e^-t/24, p' = (4t^3 - t^4) e^-t/24,
        // p'' = (12t^2 - 8t^3 + t^4) e^-t/24.
        let t = 1.0;
        let s = pdf_derivatives_series(t, 0.0, N, NR, &policy()).unwrap();
        let e = (-t).exp();
        assert_relative_eq!(s.p, e / 24.0, max_relative = 1e-12);
        assert_relative_eq!(s.p1, 3.0 * e / 24.0, max_relative = 1e-12);
        assert_relative_eq!(s.p2, 5.0 * e / 24.0, max_relative = 1e-12);
    }

    #[test]
    fn low_order_antenna_counts_match_direct_product_rule() {
        // N = 1: f = g; N = 2: f = t g, f' = g + t g', f'' = 2 g' + t g''.
        let (t, a) = (1.2, 0.7);
        for (n, nr) in [(1u32, 4u32), (2, 4)] {
            let g0 = g_series(0, t, a, n, nr, &policy()).unwrap().value;
            let g1 = g_series(1, t, a, n, nr, &policy()).unwrap().value;
            let g2 = g_series(2, t, a, n, nr, &policy()).unwrap().value;
            let s = pdf_derivatives_series(t, a, n, nr, &policy()).unwrap();
            let e = (-t).exp();
            let (f0, f1, f2) = if n == 1 {
                (g0, g1, g2)
            } else {
                (t * g0, g0 + t * g1, 2.0 * g1 + t * g2)
            };
            assert_relative_eq!(s.p, e * f0, max_relative = 1e-12);
            assert_relative_eq!(s.p1, e * (f1 - f0), max_relative = 1e-12);
            assert_relative_eq!(s.p2, e * (f2 - 2.0 * f1 + f0), max_relative = 1e-12);
        }
    }

    #[test]
    fn state_derivatives_match_finite_differences() {
        let (t, a) = (2.0, 1.5);
        let h = 1e-5;
        let pm = |tt: f64| pdf_series(tt, a, N, NR, &policy()).unwrap().value;
        let s = pdf_derivatives_series(t, a, N, NR, &policy()).unwrap();
        let fd1 = (pm(t + h) - pm(t - h)) / (2.0 * h);
        let fd2 = (pm(t + h) - 2.0 * pm(t) + pm(t - h)) / (h * h);
        assert_relative_eq!(s.p1, fd1, max_relative = 1e-8);
        // Central second difference carries ~eps/h^2 roundoff, so the bound
        // is looser than for the first derivative.
        assert_relative_eq!(s.p2, fd2, max_relative = 5e-5);
    }

    #[test]
    fn initial_state_reference_values() {
        let s = initial_state(1e-3, 10.0, N, NR, &policy()).unwrap();
        assert_eq!(s.a, 1e-2);
        assert_relative_eq!(s.p, 4.1279696717437011522e-14, max_relative = 1e-10);
        assert_relative_eq!(s.p1, 1.6507757595611428175e-10, max_relative = 1e-10);
        assert_relative_eq!(s.p2, 4.9502671444240281762e-7, max_relative = 1e-10);
    }

    #[test]
    fn initial_state_leading_order() {
        // p ~ u0^(N-1)/(N-1)! for small u0.
        let u0 = 1e-4;
        let s = initial_state(u0, 0.5, N, NR, &policy()).unwrap();
        assert_relative_eq!(s.p, u0.powi(4) / 24.0, max_relative = 1e-3);
    }

    #[test]
    fn mgf_reference_value() {
        let m = mgf_closed(0.2, 10.0, N, NR, 1.0).unwrap();
        assert_relative_eq!(m, 25.873447228663719591, max_relative = 1e-12);
        assert_eq!(mgf_closed(0.0, 3.0, N, NR, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn mgf_domain_is_enforced() {
        assert!(mgf_closed(0.5, 1.0, N, NR, 2.0).is_err());
        assert!(mgf_closed(0.45, 1.0, N, NR, 2.0).is_ok());
        assert!(mgf_closed(0.2, -1.0, N, NR, 1.0).is_err());
        assert!(mgf_closed(0.2, 1.0, N, NR, 0.0).is_err());
    }

    #[test]
    fn mean_from_mgf_slope() {
        // E[snr] = gamma1 (N + a N / NR), checked by central difference at 0.
        let (a, g1) = (2.5, 1.7);
        let h = 1e-6;
        let m = |s: f64| mgf_closed(s, a, N, NR, g1).unwrap();
        let slope = (m(h) - m(-h)) / (2.0 * h);
        let expected = g1 * (N as f64 + a * N as f64 / NR as f64);
        assert_relative_eq!(slope, expected, max_relative = 1e-7);
    }

    #[test]
    fn mgf_noncentrality_scaling_identity() {
        // a d/da M = s(1-s) d/ds M - N s M at gamma1 = 1.
        for &a in &[0.5, 2.0] {
            let s = 0.2;
            let h = 1e-6;
            let lhs = a * (mgf_closed(s, a + h, N, NR, 1.0).unwrap()
                - mgf_closed(s, a - h, N, NR, 1.0).unwrap())
                / (2.0 * h);
            let dm_ds = (mgf_closed(s + h, a, N, NR, 1.0).unwrap()
                - mgf_closed(s - h, a, N, NR, 1.0).unwrap())
                / (2.0 * h);
            let rhs = s * (1.0 - s) * dm_ds - N as f64 * s * mgf_closed(s, a, N, NR, 1.0).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-6);
        }
    }

    #[test]
    fn rejects_out_of_domain_points() {
        assert!(pdf_series(0.0, 1.0, N, NR, &policy()).is_err());
        assert!(pdf_series(-1.0, 1.0, N, NR, &policy()).is_err());
        assert!(pdf_series(1.0, -0.1, N, NR, &policy()).is_err());
        assert!(pdf_series(1.0, 1.0, 0, NR, &policy()).is_err());
        assert!(pdf_series(1.0, 1.0, 7, 6, &policy()).is_err());
        assert!(initial_state(0.0, 1.0, N, NR, &policy()).is_err());
        assert!(initial_state(1e-3, -0.5, N, NR, &policy()).is_err());
    }

    #[test]
    fn truncation_policy_validation() {
        let bad = TruncationPolicy {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TruncationPolicy {
            n_max: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        // Density values are nonnegative wherever the series converges.
        #[test]
        fn density_nonnegative(t in 0.05f64..20.0, a in 0.0f64..6.0) {
            let r = pdf_series(t, a, N, NR, &policy()).unwrap();
            if r.converged {
                prop_assert!(r.value >= 0.0);
            }
        }

        // First derivative agrees with a central difference of the density.
        #[test]
        fn derivative_consistent_with_series(t in 0.5f64..8.0, a in 0.0f64..4.0) {
            let h = 1e-4;
            let s = pdf_derivatives_series(t, a, N, NR, &policy()).unwrap();
            let pp = pdf_series(t + h, a, N, NR, &policy()).unwrap().value;
            let pm = pdf_series(t - h, a, N, NR, &policy()).unwrap().value;
            let fd = (pp - pm) / (2.0 * h);
            prop_assert!((s.p1 - fd).abs() <= 1e-5 * s.p1.abs().max(1e-8));
        }
    }
}
