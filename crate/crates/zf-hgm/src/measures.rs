//! Link-quality measures on top of a density evaluator: outage probability,
//! ergodic capacity, and cumulative curves, plus exact closed forms for the
//! central (Rayleigh) limit where the density is a pure Gamma shape.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hgm::{HgmDensity, PdfGrid};

/// Anything that can evaluate the stream-1 SNR density pointwise and bound
/// its own tail.
pub trait DensitySource: Sync {
    /// Density at t >= 0 in physical units.
    fn density(&self, t: f64) -> Result<f64>;
    /// (diversity order, scale, noncentrality) of the Gamma-form envelope
    /// used to pick integration cutoffs.
    fn tail_envelope(&self) -> (u32, f64, f64);
}

impl DensitySource for HgmDensity {
    fn density(&self, t: f64) -> Result<f64> {
        HgmDensity::density(self, t)
    }

    fn tail_envelope(&self) -> (u32, f64, f64) {
        let p = self.params();
        (p.dof, p.gamma1, p.noncentrality)
    }
}

/// Central-limit density: Gamma with integer shape `dof` and scale `gamma1`.
#[derive(Debug, Clone, Copy)]
pub struct RayleighDensity {
    pub dof: u32,
    pub gamma1: f64,
}

impl RayleighDensity {
    pub fn new(dof: u32, gamma1: f64) -> Result<Self> {
        if dof == 0 {
            return Err(Error::domain("diversity order must be at least 1"));
        }
        if !(gamma1 > 0.0 && gamma1.is_finite()) {
            return Err(Error::domain("gamma1 must be positive and finite"));
        }
        Ok(RayleighDensity { dof, gamma1 })
    }
}

impl DensitySource for RayleighDensity {
    fn density(&self, t: f64) -> Result<f64> {
        rayleigh_pdf(t, self.dof, self.gamma1)
    }

    fn tail_envelope(&self) -> (u32, f64, f64) {
        (self.dof, self.gamma1, 0.0)
    }
}

fn ln_factorial(m: u32) -> f64 {
    (2..=m as u64).map(|k| (k as f64).ln()).sum()
}

/// Gamma density with integer shape, evaluated in log space so large shapes
/// and deep tails stay finite.
pub fn rayleigh_pdf(t: f64, n: u32, gamma1: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("diversity order must be at least 1"));
    }
    if !(gamma1 > 0.0 && gamma1.is_finite()) {
        return Err(Error::domain("gamma1 must be positive and finite"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain("density argument must be nonnegative and finite"));
    }
    if t == 0.0 {
        return Ok(if n == 1 { 1.0 / gamma1 } else { 0.0 });
    }
    let u = t / gamma1;
    let ln_p = (n as f64 - 1.0) * u.ln() - u - ln_factorial(n - 1) - gamma1.ln();
    Ok(ln_p.exp())
}

/// Survival function of an integer-shape Gamma: Q(n, x) = P(X >= x) for X
/// the sum of n unit exponentials.
pub fn erlang_sf(n: u32, x: f64) -> f64 {
    assert!(n >= 1, "shape must be at least 1");
    if x <= 0.0 {
        return 1.0;
    }
    if x <= 700.0 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..n {
            term *= x / k as f64;
            sum += term;
        }
        (-x).exp() * sum
    } else {
        // Deep tail: sum in log space around the largest term.
        let ln_terms: Vec<f64> = (0..n)
            .map(|k| k as f64 * x.ln() - ln_factorial(k))
            .collect();
        let m = ln_terms.iter().cloned().fold(f64::MIN, f64::max);
        let s: f64 = ln_terms.iter().map(|&l| (l - m).exp()).sum();
        (m - x + s.ln()).exp()
    }
}

/// Complement of `erlang_sf`, computed without cancellation for small x.
pub fn erlang_cdf(n: u32, x: f64) -> f64 {
    assert!(n >= 1, "shape must be at least 1");
    if x <= 0.0 {
        return 0.0;
    }
    if x < n as f64 + 1.0 {
        // Ascending series for the regularized lower incomplete gamma.
        let mut term = 1.0 / n as f64;
        let mut sum = term;
        let mut k = 1u32;
        loop {
            term *= x / (n + k) as f64;
            sum += term;
            if term < sum * 1e-17 || k > 10_000 {
                break;
            }
            k += 1;
        }
        (n as f64 * x.ln() - x - ln_factorial(n - 1)).exp() * sum
    } else {
        1.0 - erlang_sf(n, x)
    }
}

/// Exact outage probability in the central limit.
pub fn rayleigh_outage(threshold: f64, n: u32, gamma1: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("diversity order must be at least 1"));
    }
    if !(gamma1 > 0.0 && gamma1.is_finite()) {
        return Err(Error::domain("gamma1 must be positive and finite"));
    }
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(Error::domain("threshold must be nonnegative and finite"));
    }
    Ok(erlang_cdf(n, threshold / gamma1))
}

// 15-point Kronrod extension of 7-point Gauss on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive bisection on the 15-point rule, absolute tolerance.
fn adaptive_gk(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let span = (hi - lo).abs();
    let mut stack = vec![(lo, hi, tol, 0u32)];
    let mut total = 0.0;
    while let Some((a, b, t, depth)) = stack.pop() {
        let (v, e) = gk15(f, a, b);
        if e <= t || (b - a) <= 1e-14 * span {
            total += v;
        } else if depth >= 60 {
            return Err(Error::Numerical("quadrature refinement stalled".into()));
        } else {
            let m = 0.5 * (a + b);
            stack.push((a, m, 0.5 * t, depth + 1));
            stack.push((m, b, 0.5 * t, depth + 1));
        }
    }
    Ok(total)
}

/// Exact-density ergodic capacity in the central limit, bits per channel use.
pub fn rayleigh_capacity(n: u32, gamma1: f64) -> Result<f64> {
    let d = RayleighDensity::new(n, gamma1)?;
    let (t_max, _) = tail_cutoff(&d, 1e-14)?;
    let f = |t: f64| rayleigh_pdf(t, n, gamma1).unwrap_or(0.0) * (1.0 + t).log2();
    let rough = gk15(&f, 0.0, t_max).0;
    adaptive_gk(&f, 0.0, t_max, (rough.abs() * 1e-13).max(1e-15))
}

/// Doubles a Gamma-envelope cutoff until the envelope tail mass drops below
/// `tail_tol`; returns (cutoff, tail mass at the cutoff).
pub fn tail_cutoff<S: DensitySource + ?Sized>(src: &S, tail_tol: f64) -> Result<(f64, f64)> {
    let (n, gamma1, a) = src.tail_envelope();
    envelope_cutoff(n, gamma1, a, tail_tol)
}

/// `tail_cutoff` on explicit envelope parameters.
pub fn envelope_cutoff(n: u32, gamma1: f64, a: f64, tail_tol: f64) -> Result<(f64, f64)> {
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::domain("tail tolerance must lie in (0, 1)"));
    }
    if n == 0 || !(gamma1 > 0.0 && gamma1.is_finite()) || !(a >= 0.0 && a.is_finite()) {
        return Err(Error::domain("bad envelope parameters"));
    }
    let cap = gamma1 * (1u64 << 20) as f64;
    let mut t_max = gamma1 * (n as f64 + a);
    loop {
        if t_max > cap {
            return Err(Error::Numerical(format!(
                "tail mass did not reach {tail_tol:e} below the cutoff cap"
            )));
        }
        let sf = erlang_sf(n, t_max / gamma1 - a);
        if sf < tail_tol {
            return Ok((t_max, sf));
        }
        t_max *= 2.0;
    }
}

/// P(SNR < threshold) by midpoint panels over [0, threshold].
pub fn outage_probability<S: DensitySource + ?Sized>(
    src: &S,
    threshold: f64,
    resolution: usize,
) -> Result<f64> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::domain("threshold must be positive and finite"));
    }
    if resolution < 100 {
        return Err(Error::domain("resolution must be at least 100"));
    }
    let h = threshold / resolution as f64;
    let vals: Vec<f64> = (0..resolution)
        .into_par_iter()
        .map(|i| src.density((i as f64 + 0.5) * h))
        .collect::<Result<_>>()?;
    Ok(vals.iter().sum::<f64>() * h)
}

/// Ergodic capacity and the envelope tail mass left out of the integral.
#[derive(Debug, Clone, Copy)]
pub struct CapacityResult {
    pub bpcu: f64,
    pub tail_mass_dropped: f64,
    pub t_max: f64,
}

/// E[log2(1 + SNR)] by midpoint panels up to an envelope-chosen cutoff.
pub fn ergodic_capacity<S: DensitySource + ?Sized>(
    src: &S,
    resolution: usize,
    tail_tol: f64,
) -> Result<CapacityResult> {
    if resolution < 100 {
        return Err(Error::domain("resolution must be at least 100"));
    }
    let (t_max, dropped) = tail_cutoff(src, tail_tol)?;
    let h = t_max / resolution as f64;
    let vals: Vec<f64> = (0..resolution)
        .into_par_iter()
        .map(|i| {
            let t = (i as f64 + 0.5) * h;
            src.density(t).map(|p| p * (1.0 + t).log2())
        })
        .collect::<Result<_>>()?;
    Ok(CapacityResult {
        bpcu: vals.iter().sum::<f64>() * h,
        tail_mass_dropped: dropped,
        t_max,
    })
}

/// Cumulative curve accumulated from a density grid.
#[derive(Debug, Clone)]
pub struct CdfGrid {
    /// (gamma, cumulative probability) pairs on the density grid.
    pub points: Vec<(f64, f64)>,
}

impl CdfGrid {
    /// Piecewise-linear read of the curve, zero at the origin and held flat
    /// beyond the last grid point.
    pub fn value_at(&self, t: f64) -> f64 {
        if self.points.is_empty() || t <= 0.0 {
            return 0.0;
        }
        let (t0, f0) = self.points[0];
        if t <= t0 {
            return f0 * t / t0;
        }
        let (tl, fl) = *self.points.last().unwrap();
        if t >= tl {
            return fl;
        }
        let idx = self.points.partition_point(|&(g, _)| g < t);
        let (ta, fa) = self.points[idx - 1];
        let (tb, fb) = self.points[idx];
        fa + (fb - fa) * (t - ta) / (tb - ta)
    }

    pub fn terminal(&self) -> f64 {
        self.points.last().map_or(0.0, |&(_, f)| f)
    }
}

/// Trapezoid accumulation of a density grid into a cumulative curve; the
/// panel down to zero pairs the boundary density with the first grid value.
/// Grid spacing controls the accuracy.
pub fn cdf_from_pdf(grid: &PdfGrid) -> Result<CdfGrid> {
    if grid.points.is_empty() {
        return Err(Error::domain("density grid is empty"));
    }
    let mut points = Vec::with_capacity(grid.points.len());
    let (t0, p0) = grid.points[0];
    let mut acc = 0.5 * (grid.boundary_density + p0) * t0;
    points.push((t0, acc));
    for w in grid.points.windows(2) {
        let ((ta, pa), (tb, pb)) = (w[0], w[1]);
        acc += 0.5 * (pa + pb) * (tb - ta);
        points.push((tb, acc));
    }
    Ok(CdfGrid { points })
}
