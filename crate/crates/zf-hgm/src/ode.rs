//! Embedded Dormand-Prince 5(4) integrator with adaptive step control.
//!
//! Small fixed-dimension systems only; the state is `[f64; D]` so the hot
//! loop stays allocation-free.

use crate::error::{Error, Result};

/// Tolerances and step limits for the adaptive integrator.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub min_step: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_steps: 10_000_000,
            min_step: 1e-13,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::invalid("rel_tol must be positive and finite"));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::invalid("abs_tol must be positive and finite"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be nonzero"));
        }
        if !(self.min_step > 0.0) {
            return Err(Error::invalid("min_step must be positive"));
        }
        Ok(())
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

/// 5th-order weights (also the a7j row; the method is FSAL).
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

/// Difference between the 5th- and embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const SAFETY: f64 = 0.9;
const FACTOR_MIN: f64 = 0.2;
const FACTOR_MAX: f64 = 10.0;

#[inline]
fn axpy<const D: usize>(y: &[f64; D], h: f64, coeffs: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (c, k) in coeffs {
        for i in 0..D {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `dy/du = f(u, y)` from `u0` to `u1` (either direction) and
/// returns the state at `u1`. Local error per step is held under
/// `abs_tol + rel_tol * |y|` component-wise in the RMS sense.
pub fn integrate<const D: usize>(
    f: impl Fn(f64, &[f64; D]) -> [f64; D],
    u0: f64,
    u1: f64,
    y0: [f64; D],
    settings: &IntegratorSettings,
) -> Result<[f64; D]> {
    settings.validate()?;
    if !(u0.is_finite() && u1.is_finite()) {
        return Err(Error::domain("integration bounds must be finite"));
    }
    let span = u1 - u0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();

    let mut u = u0;
    let mut y = y0;
    let mut k1 = f(u, &y);
    let mut h = dir * (span.abs() * 1e-4).max(settings.min_step * 10.0);

    for _ in 0..settings.max_steps {
        if (u1 - u) * dir <= 0.0 {
            return Ok(y);
        }
        if ((u + h) - u1) * dir > 0.0 {
            h = u1 - u;
        }

        let k2 = f(u + C[1] * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(u + C[2] * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(u + C[3] * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            u + C[4] * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            u + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(B[0], &k1), (B[2], &k3), (B[3], &k4), (B[4], &k5), (B[5], &k6)],
        );
        let k7 = f(u + h, &y_new);

        let mut err_sq = 0.0;
        for i in 0..D {
            let e_i = h
                * (E[0] * k1[i]
                    + E[2] * k3[i]
                    + E[3] * k4[i]
                    + E[4] * k5[i]
                    + E[5] * k6[i]
                    + E[6] * k7[i]);
            let scale = settings.abs_tol + settings.rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (e_i / scale) * (e_i / scale);
        }
        let err = (err_sq / D as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::NonFinite(u));
        }

        if err <= 1.0 {
            u += h;
            y = y_new;
            k1 = k7;
        }

        let factor = if err == 0.0 {
            FACTOR_MAX
        } else {
            (SAFETY * err.powf(-0.2)).clamp(FACTOR_MIN, FACTOR_MAX)
        };
        h *= factor;
        if h.abs() < settings.min_step {
            return Err(Error::StepUnderflow { u, step: h });
        }
    }

    if (u1 - u) * dir <= 0.0 {
        Ok(y)
    } else {
        Err(Error::MaxStepsExceeded(settings.max_steps))
    }
}
