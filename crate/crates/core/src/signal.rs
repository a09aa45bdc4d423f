//! Causal finite-energy signals sampled on a uniform time grid.
//!
//! A [`CausalSignal`] stands in for a function in L²(ℝ₊): complex samples
//! `values[k] ≈ f(k dt)` on `[0, t_max]`, with everything after `t_max`
//! treated as zero.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{gregory_integral, support_start};

type C64 = Complex64;

/// Uniform sampling of `[0, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeGrid {
    dt: f64,
    n_samples: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_samples: usize) -> Result<TimeGrid> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        if n_samples < 2 {
            return Err(Error::Domain(format!("a time grid needs at least 2 samples, got {n_samples}")));
        }
        Ok(TimeGrid { dt, n_samples })
    }

    /// Grid with step `dt` covering `[0, t_max]`.
    pub fn with_t_max(dt: f64, t_max: f64) -> Result<TimeGrid> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::Domain(format!("t_max must be positive, got {t_max}")));
        }
        let steps = (t_max / dt + 1e-9).floor() as usize;
        TimeGrid::new(dt, steps + 1)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn t_max(&self) -> f64 {
        self.dt * (self.n_samples - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_samples).map(move |k| self.time(k))
    }

    pub fn is_compatible(&self, other: &TimeGrid) -> bool {
        self.n_samples == other.n_samples && (self.dt - other.dt).abs() <= 1e-12 * self.dt
    }

    pub(crate) fn check_compatible(&self, other: &TimeGrid) -> Result<()> {
        if self.is_compatible(other) {
            Ok(())
        } else {
            Err(Error::IncompatibleGrid(format!(
                "dt={} n={} vs dt={} n={}",
                self.dt, self.n_samples, other.dt, other.n_samples
            )))
        }
    }
}

/// Complex samples of a causal signal.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalSignal {
    grid: TimeGrid,
    values: Vec<C64>,
}

impl CausalSignal {
    pub fn new(grid: TimeGrid, values: Vec<C64>) -> Result<CausalSignal> {
        if values.len() != grid.n_samples() {
            return Err(Error::IncompatibleGrid(format!(
                "{} values for a grid of {} samples",
                values.len(),
                grid.n_samples()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Domain(format!("non-finite sample at index {k}")));
        }
        Ok(CausalSignal { grid, values })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> C64) -> CausalSignal {
        let values = grid.times().map(f).collect();
        CausalSignal { grid, values }
    }

    pub fn from_real_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> CausalSignal {
        CausalSignal::from_fn(grid, |t| C64::new(f(t), 0.0))
    }

    pub fn zeros(grid: TimeGrid) -> CausalSignal {
        CausalSignal { grid, values: vec![C64::new(0.0, 0.0); grid.n_samples()] }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn norm_sq(&self) -> f64 {
        inner_product(self, self).map(|v| v.re).unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().max(0.0).sqrt()
    }

    /// True when every sample is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn scaled(&self, c: C64) -> CausalSignal {
        CausalSignal { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }

    /// `sum_i c_i f_i` over signals on a common grid.
    pub fn linear_combination(terms: &[(C64, &CausalSignal)]) -> Result<CausalSignal> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::Domain("empty linear combination".into()));
        };
        let mut values = vec![C64::new(0.0, 0.0); first.values.len()];
        for (c, f) in terms {
            first.grid.check_compatible(&f.grid)?;
            for (acc, v) in values.iter_mut().zip(&f.values) {
                *acc += c * v;
            }
        }
        Ok(CausalSignal { grid: first.grid, values })
    }

    /// `‖self − other‖ / ‖reference‖`.
    pub fn relative_distance(&self, other: &CausalSignal, reference: &CausalSignal) -> Result<f64> {
        let diff = CausalSignal::linear_combination(&[(C64::new(1.0, 0.0), self), (C64::new(-1.0, 0.0), other)])?;
        let denom = reference.norm();
        if denom == 0.0 {
            return Err(Error::Domain("reference signal has zero norm".into()));
        }
        Ok(diff.norm() / denom)
    }

    /// Largest pointwise deviation on samples with `t <= t_limit`.
    pub fn sup_distance(&self, other: &CausalSignal, t_limit: f64) -> Result<f64> {
        self.grid.check_compatible(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .filter(|(k, _)| self.grid.time(*k) <= t_limit + 1e-12)
            .map(|(_, (a, b))| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Writes the `t,re,im` CSV format.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "re", "im"]).map_err(csv_io)?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([self.grid.time(k).to_string(), v.re.to_string(), v.im.to_string()])
                .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `t,re,im` CSV format, checking that `t` starts at 0 and is
    /// equispaced to relative tolerance 1e-9.
    pub fn read_csv<R: Read>(input: R) -> Result<CausalSignal> {
        let rows = read_triples(input, "t")?;
        if rows.len() < 2 {
            return Err(Error::Parse { line: rows.len() + 2, message: "need at least two samples".into() });
        }
        let (t0, _, _) = rows[0];
        if t0.abs() > 1e-12 {
            return Err(Error::Parse { line: 2, message: format!("t must start at 0, got {t0}") });
        }
        let first = rows[1].0 - t0;
        if !(first > 0.0) {
            return Err(Error::Parse { line: 3, message: "t must be strictly increasing".into() });
        }
        for (k, w) in rows.windows(2).enumerate() {
            let step = w[1].0 - w[0].0;
            if (step - first).abs() > 1e-9 * first {
                return Err(Error::Parse {
                    line: k + 3,
                    message: format!("t is not equispaced (step {step} vs {first})"),
                });
            }
        }
        let dt = (rows[rows.len() - 1].0 - t0) / (rows.len() - 1) as f64;
        let grid = TimeGrid::new(dt, rows.len())?;
        CausalSignal::new(grid, rows.into_iter().map(|(_, re, im)| C64::new(re, im)).collect())
    }
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Parses a three-column CSV with header `<first>,re,im`. Lines starting with
/// `#` are skipped.
pub(crate) fn read_triples<R: Read>(input: R, first: &str) -> Result<Vec<(f64, f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows = Vec::new();
    let mut header_seen = false;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if !header_seen {
            let fields: Vec<&str> = record.iter().collect();
            if fields != [first, "re", "im"] {
                return Err(Error::Parse { line, message: format!("expected header `{first},re,im`") });
            }
            header_seen = true;
            continue;
        }
        if record.len() != 3 {
            return Err(Error::Parse { line, message: format!("expected 3 fields, got {}", record.len()) });
        }
        let mut nums = [0.0; 3];
        for (i, field) in record.iter().enumerate() {
            nums[i] = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse { line, message: format!("invalid number `{field}`") })?;
        }
        rows.push((nums[0], nums[1], nums[2]));
    }
    if !header_seen {
        return Err(Error::Parse { line: 1, message: "empty input".into() });
    }
    Ok(rows)
}

/// `∫₀^∞ f(t) conj(g(t)) dt` by the end-corrected trapezoid rule.
///
/// Integration starts at the support start of the product, so translated
/// signals are integrated from their leading jump rather than across it.
pub fn inner_product(f: &CausalSignal, g: &CausalSignal) -> Result<C64> {
    f.grid.check_compatible(&g.grid)?;
    let prod: Vec<C64> = f.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).collect();
    let s = support_start(&prod);
    Ok(gregory_integral(&prod[s..], f.grid.dt))
}

/// Delay `T_τ f`: `f(t − τ)` for `t ≥ τ`, zero before. `τ` must be a
/// non-negative integer multiple of `dt`; samples pushed past `t_max` are
/// dropped.
pub fn translate(f: &CausalSignal, tau: f64) -> Result<CausalSignal> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!("shift must be non-negative, got {tau}")));
    }
    let dt = f.grid.dt;
    let steps = tau / dt;
    let k = steps.round();
    if (steps - k).abs() > 1e-9 * k.max(1.0) {
        return Err(Error::Quantization { tau, dt });
    }
    let k = k as usize;
    let n = f.values.len();
    let mut values = vec![C64::new(0.0, 0.0); n];
    if k < n {
        values[k..].copy_from_slice(&f.values[..n - k]);
    }
    Ok(CausalSignal { grid: f.grid, values })
}

/// Gauss-Legendre nodes and weights on [0, 1], exact through degree 5.
const GL3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// `∫_{x0}^{x1}` of the degree-`nodes-1` interpolant through `p[0..nodes]`
/// (local coordinates: node `i` at `x = i`).
fn local_integral(p: &[f64], x0: f64, x1: f64) -> f64 {
    let len = x1 - x0;
    GL3.iter()
        .map(|&(u, w)| {
            let x = x0 + u * len;
            let mut val = 0.0;
            for (i, &pi) in p.iter().enumerate() {
                let mut l = 1.0;
                for k in 0..p.len() {
                    if k != i {
                        l *= (x - k as f64) / (i as f64 - k as f64);
                    }
                }
                val += pi * l;
            }
            w * val
        })
        .sum::<f64>()
        * len
}

/// `∫₀^T |f(t)|² dt`.
///
/// Accumulated interval by interval from sixth-order local interpolants of
/// `|f|²`, with each increment clamped at zero, then rescaled so that the
/// value at `t_max` is `‖f‖²`. The result is nondecreasing in `T` even in
/// floating point.
pub fn partial_energy(f: &CausalSignal, t: f64) -> Result<f64> {
    let t_max = f.grid.t_max();
    let dt = f.grid.dt;
    if !(t >= 0.0) || t > t_max * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("T = {t} outside [0, {t_max}]")));
    }
    let p: Vec<f64> = f.values.iter().map(|v| v.norm_sqr()).collect();
    let s = support_start(&p);
    let n = p.len();
    let pos = (t / dt).min((n - 1) as f64);
    let mut whole = (pos + 1e-9).floor() as usize;
    whole = whole.min(n - 1);
    let frac = (pos - whole as f64).max(0.0);
    let frac = if frac < 1e-9 { 0.0 } else { frac };
    if whole < s || n - s < 2 {
        return Ok(0.0);
    }
    let count = n - s;
    let width = count.min(6);
    let window = |k: usize| -> usize {
        // Local window of `width` nodes around interval [k, k+1], kept inside the support.
        let lo = k.saturating_sub(2).max(s);
        lo.min(n - width)
    };
    let increment = |k: usize, upto: f64| {
        let a = window(k);
        let off = (k - a) as f64;
        local_integral(&p[a..a + width], off, off + upto).max(0.0)
    };
    let mut acc: f64 = (s..whole).map(|k| increment(k, 1.0)).sum();
    if frac > 0.0 && whole + 1 < n {
        acc += increment(whole, frac);
    }
    let total: f64 = (s..n - 1).map(|k| increment(k, 1.0)).sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok((acc / total).min(1.0) * f.norm_sq().max(0.0))
}

/// The probe signals from which an operator is identified.
pub mod probes {
    use super::{CausalSignal, TimeGrid};
    use std::f64::consts::SQRT_2;

    /// `√2 e^{−t}`.
    pub fn rho0(grid: TimeGrid) -> CausalSignal {
        CausalSignal::from_real_fn(grid, |t| SQRT_2 * (-t).exp())
    }

    /// `√2 e^{−t}(2t − 1)`.
    pub fn rho1(grid: TimeGrid) -> CausalSignal {
        CausalSignal::from_real_fn(grid, |t| SQRT_2 * (-t).exp() * (2.0 * t - 1.0))
    }

    /// `e^{−t}(1 − t)`.
    pub fn sigma0(grid: TimeGrid) -> CausalSignal {
        CausalSignal::from_real_fn(grid, |t| (-t).exp() * (1.0 - t))
    }

    /// `e^{−t} t`.
    pub fn sigma1(grid: TimeGrid) -> CausalSignal {
        CausalSignal::from_real_fn(grid, |t| (-t).exp() * t)
    }
}
