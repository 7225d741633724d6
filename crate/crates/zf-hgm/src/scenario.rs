//! Scenario description: antenna geometry, Rician K-factor, transmit
//! correlation, and the parameters derived from them. All dB-to-linear
//! conversion happens here; the math modules work in linear units only.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Transmit-side correlation model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorrelationSpec {
    Identity,
    /// Plain-text matrix file, one row per line, entries as "re+imj".
    File { path: PathBuf },
    /// Uniform linear array under a truncated Laplacian power azimuth
    /// spectrum centered at broadside.
    LaplacianUla { spacing_wavelengths: f64 },
}

/// User-facing scenario. `k_factor_db` may be -inf, which selects the pure
/// Rayleigh limit exactly (serialized as the string "-inf" since JSON has no
/// infinity literal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_rx: usize,
    pub n_tx: usize,
    #[serde(with = "db_maybe_neg_inf")]
    pub k_factor_db: f64,
    pub azimuth_spread_deg: f64,
    pub gamma_s_db: f64,
    pub constellation_size: u32,
    pub correlation: CorrelationSpec,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_rx: 6,
            n_tx: 2,
            k_factor_db: 7.0,
            azimuth_spread_deg: 51.0,
            gamma_s_db: 5.0,
            constellation_size: 4,
            correlation: CorrelationSpec::Identity,
        }
    }
}

mod db_maybe_neg_inf {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            Err(serde::ser::Error::custom("k_factor_db must be finite or -inf"))
        }
    }

    struct DbVisitor;

    impl Visitor<'_> for DbVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a number or the string \"-inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<f64, E> {
            match v.trim() {
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                other => other
                    .parse()
                    .map_err(|_| E::custom(format!("bad k_factor_db string {other:?}"))),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        d.deserialize_any(DbVisitor)
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("scenario json: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 {
            return Err(Error::invalid("n_tx must be at least 1"));
        }
        if self.n_rx < self.n_tx {
            return Err(Error::invalid("n_rx must be at least n_tx"));
        }
        if self.n_rx > 128 {
            return Err(Error::invalid("n_rx above 128 is not supported"));
        }
        if self.k_factor_db.is_nan() || self.k_factor_db == f64::INFINITY {
            return Err(Error::invalid("k_factor_db must be finite or -inf"));
        }
        if !(self.azimuth_spread_deg > 0.0 && self.azimuth_spread_deg <= 360.0) {
            return Err(Error::invalid("azimuth_spread_deg must lie in (0, 360]"));
        }
        if !self.gamma_s_db.is_finite() {
            return Err(Error::invalid("gamma_s_db must be finite"));
        }
        if self.constellation_size < 2 || !self.constellation_size.is_power_of_two() {
            return Err(Error::invalid(
                "constellation_size must be a power of two, at least 2",
            ));
        }
        match &self.correlation {
            CorrelationSpec::Identity => {}
            CorrelationSpec::File { path } => {
                if path.as_os_str().is_empty() {
                    return Err(Error::invalid("correlation file path is empty"));
                }
            }
            CorrelationSpec::LaplacianUla { spacing_wavelengths } => {
                if !(spacing_wavelengths.is_finite() && *spacing_wavelengths > 0.0) {
                    return Err(Error::invalid("antenna spacing must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn k_linear(&self) -> f64 {
        db_to_linear(self.k_factor_db)
    }
}

/// Quantities the evaluation pipeline actually consumes, all linear scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    /// Diversity order N = n_rx - n_tx + 1.
    pub dof: u32,
    pub k_linear: f64,
    /// Scale of the stream-1 SNR distribution.
    pub gamma1: f64,
    /// Noncentrality a; zero exactly in the Rayleigh limit.
    pub noncentrality: f64,
    /// Per-bit SNR implied by gamma_s_db and the constellation size.
    pub gamma_b_db: f64,
}

/// Validated transmit correlation matrix: Hermitian, positive semidefinite,
/// trace equal to its order.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    m: DMatrix<Complex64>,
}

const HERMITIAN_TOL: f64 = 1e-9;
const TRACE_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-12;
const SINGULAR_TOL: f64 = 1e-12;

impl CorrelationMatrix {
    /// Validates and stores a candidate matrix (symmetrizing away rounding-
    /// level asymmetry).
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(Error::invalid("correlation matrix must be square and nonempty"));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("correlation matrix has non-finite entries"));
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
        let asym = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if asym > HERMITIAN_TOL * scale {
            return Err(Error::invalid(format!(
                "correlation matrix is not Hermitian (asymmetry {asym:.3e})"
            )));
        }
        let m = (&m + m.adjoint()).scale(0.5);
        let trace = m.trace();
        if (trace.re - n as f64).abs() > TRACE_TOL * n as f64 || trace.im.abs() > TRACE_TOL {
            return Err(Error::invalid(format!(
                "correlation matrix trace {} must equal its order {n}",
                trace.re
            )));
        }
        let eig = m.clone().symmetric_eigenvalues();
        let max_eig = eig.iter().cloned().fold(f64::MIN, f64::max);
        let min_eig = eig.iter().cloned().fold(f64::MAX, f64::min);
        if min_eig < -PSD_TOL * max_eig.max(1.0) {
            return Err(Error::invalid(format!(
                "correlation matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(CorrelationMatrix { m })
    }

    pub fn identity(n: usize) -> Self {
        CorrelationMatrix {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn order(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    /// First diagonal entry of the inverse. Fails on numerically singular
    /// matrices (condition beyond ~1e12).
    pub fn inverse_11(&self) -> Result<f64> {
        let eig = self.m.clone().symmetric_eigenvalues();
        let max_eig = eig.iter().cloned().fold(f64::MIN, f64::max);
        let min_eig = eig.iter().cloned().fold(f64::MAX, f64::min);
        if min_eig <= SINGULAR_TOL * max_eig {
            return Err(Error::invalid(format!(
                "correlation matrix is numerically singular (eigenvalue range {min_eig:.3e}..{max_eig:.3e})"
            )));
        }
        let chol = self
            .m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::invalid("correlation matrix is not positive definite"))?;
        let mut e1 = DMatrix::<Complex64>::zeros(self.order(), 1);
        e1[(0, 0)] = Complex64::new(1.0, 0.0);
        let x = chol
            .l()
            .solve_lower_triangular(&e1)
            .ok_or_else(|| Error::invalid("correlation matrix solve failed"))?;
        Ok(x.iter().map(|z| z.norm_sqr()).sum())
    }

    /// Parses the plain-text matrix format: one row per line, whitespace-
    /// separated complex entries written as "re+imj" (or "re-imj"); blank
    /// lines and lines starting with '#' are skipped.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut row = Vec::new();
            for tok in line.split_whitespace() {
                row.push(parse_complex(tok).map_err(|e| {
                    Error::invalid(format!("{}:{}: {e}", path.display(), lineno + 1))
                })?);
            }
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid(format!("{}: no matrix rows", path.display())));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid(format!(
                "{}: matrix must be square ({} rows)",
                path.display(),
                n
            )));
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        CorrelationMatrix::new(m)
    }

    /// Correlation of a uniform linear array under a truncated Laplacian
    /// power azimuth spectrum with standard deviation `as_deg`, centered at
    /// broadside: entry (p, q) integrates exp(j 2 pi d (p-q) sin th) against
    /// the spectrum, then the diagonal is normalized to 1 so the trace is
    /// the array order.
    pub fn laplacian_ula(n_tx: usize, spacing_wavelengths: f64, as_deg: f64) -> Result<Self> {
        if n_tx == 0 {
            return Err(Error::invalid("n_tx must be at least 1"));
        }
        if !(spacing_wavelengths > 0.0 && spacing_wavelengths.is_finite()) {
            return Err(Error::invalid("antenna spacing must be positive"));
        }
        if !(as_deg > 0.0 && as_deg <= 360.0) {
            return Err(Error::invalid("azimuth spread must lie in (0, 360]"));
        }
        let sigma = as_deg.to_radians();
        let panels = (512 * n_tx.max(8)).next_power_of_two();
        // The spectrum has a kink at 0; integrate each smooth half separately.
        let mut lags = vec![Complex64::new(0.0, 0.0); n_tx];
        for half in [(-std::f64::consts::PI, 0.0), (0.0, std::f64::consts::PI)] {
            let (lo, hi) = half;
            let h = (hi - lo) / panels as f64;
            for k in 0..=panels {
                let th = lo + k as f64 * h;
                // Simpson weights 1,4,2,...,4,1 scaled by h/3.
                let w = if k == 0 || k == panels {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                } * h
                    / 3.0;
                let pas = (-std::f64::consts::SQRT_2 * th.abs() / sigma).exp();
                let phase = 2.0 * std::f64::consts::PI * spacing_wavelengths * th.sin();
                for (lag, acc) in lags.iter_mut().enumerate() {
                    let arg = phase * lag as f64;
                    *acc += Complex64::new(arg.cos(), arg.sin()).scale(w * pas);
                }
            }
        }
        let norm = lags[0].re;
        if !(norm > 0.0) {
            return Err(Error::Numerical("azimuth spectrum normalization failed".into()));
        }
        let m = DMatrix::from_fn(n_tx, n_tx, |p, q| {
            let lag = if p >= q { lags[p - q] } else { lags[q - p].conj() };
            lag.unscale(norm)
        });
        CorrelationMatrix::new(m)
    }
}

fn parse_complex(tok: &str) -> std::result::Result<Complex64, String> {
    let body = tok
        .strip_suffix('j')
        .ok_or_else(|| format!("entry {tok:?} must end with 'j'"))?;
    // Split at the sign of the imaginary part: the last +/- not following
    // an exponent marker and not leading.
    let split = body
        .char_indices()
        .rev()
        .find(|&(i, ch)| {
            (ch == '+' || ch == '-')
                && i > 0
                && !matches!(body.as_bytes()[i - 1], b'e' | b'E')
        })
        .map(|(i, _)| i)
        .ok_or_else(|| format!("entry {tok:?} is not of the form re+imj"))?;
    let re: f64 = body[..split]
        .parse()
        .map_err(|_| format!("bad real part in {tok:?}"))?;
    let im_str = &body[split..];
    let im: f64 = if im_str == "+" || im_str == "-" {
        format!("{im_str}1").parse().unwrap()
    } else {
        im_str.parse().map_err(|_| format!("bad imaginary part in {tok:?}"))?
    };
    Ok(Complex64::new(re, im))
}

/// Renders a matrix in the same plain-text format `from_file` reads.
pub fn format_correlation(m: &DMatrix<Complex64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(' ');
            }
            let z = m[(i, j)];
            let _ = write!(out, "{:+e}{:+e}j", z.re, z.im);
        }
        out.push('\n');
    }
    out
}

/// Builds the transmit correlation matrix a scenario asks for.
pub fn build_correlation(cfg: &ScenarioConfig) -> Result<CorrelationMatrix> {
    cfg.validate()?;
    let rt = match &cfg.correlation {
        CorrelationSpec::Identity => CorrelationMatrix::identity(cfg.n_tx),
        CorrelationSpec::File { path } => CorrelationMatrix::from_file(path)?,
        CorrelationSpec::LaplacianUla { spacing_wavelengths } => {
            CorrelationMatrix::laplacian_ula(cfg.n_tx, *spacing_wavelengths, cfg.azimuth_spread_deg)?
        }
    };
    if rt.order() != cfg.n_tx {
        return Err(Error::invalid(format!(
            "correlation matrix order {} does not match n_tx {}",
            rt.order(),
            cfg.n_tx
        )));
    }
    Ok(rt)
}

/// Maps a validated scenario and correlation matrix to the parameters of the
/// stream-1 SNR distribution.
pub fn derive_params(cfg: &ScenarioConfig, rt: &CorrelationMatrix) -> Result<DerivedParams> {
    cfg.validate()?;
    if rt.order() != cfg.n_tx {
        return Err(Error::invalid("correlation matrix order does not match n_tx"));
    }
    let inv_11 = rt.inverse_11()?;
    let k = cfg.k_linear();
    let gamma_s = db_to_linear(cfg.gamma_s_db);
    let rice_fraction = if k == 0.0 { 0.0 } else { k / (k + 1.0) };
    let bits = (cfg.constellation_size as f64).log2();
    Ok(DerivedParams {
        dof: (cfg.n_rx - cfg.n_tx + 1) as u32,
        k_linear: k,
        gamma1: gamma_s / inv_11,
        noncentrality: inv_11 * rice_fraction * (cfg.n_rx * cfg.n_tx) as f64,
        gamma_b_db: cfg.gamma_s_db - 10.0 * bits.log10(),
    })
}
