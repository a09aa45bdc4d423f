//! Maps between time signals and boundary or interior values of Hardy-space
//! functions on the right half-plane and the unit disk.
//!
//! Conventions:
//! * `L f(w) = (2π)^{-1/2} ∫₀^∞ f(t) e^{-wt} dt` for `Re w ≥ 0`.
//! * `m(z) = (1 − z)/(1 + z)` exchanges disk and half-plane; the circle point
//!   `e^{iθ}` corresponds to the axis point `iy` with `y = −tan(θ/2)`.
//! * `Φ F(z) = 2√π/(1 + z) · F(m(z))` and `H = Φ L`, so
//!   `H f(z) = (1 + m(z))/√2 · ∫₀^∞ f(t) e^{-m(z) t} dt`.

use std::f64::consts::{PI, TAU};
use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{chirp_sum, ExpKernel};
use crate::signal::{csv_io, read_triples, CausalSignal, TimeGrid};

type C64 = Complex64;

pub(crate) const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
pub(crate) const SQRT_PI: f64 = 1.772_453_850_905_516;

/// The Möbius involution `(1 − z)/(1 + z)`.
pub fn mobius(z: C64) -> C64 {
    (1.0 - z) / (1.0 + z)
}

/// Sample locations for boundary functions.
///
/// Uniform circle grids are half-offset, `θ_j = 2π(j + ½)/N`, so `z = −1`
/// is never a node. Uniform axis grids are symmetric,
/// `y_j = −Y + 2Yj/(n − 1)`. The two `*Image*` variants are the exact
/// Cayley images of the uniform grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrequencyGrid {
    UniformAxis { y_max: f64, n: usize },
    UniformCircle { n: usize },
    /// Axis nodes `y_j = −tan(θ_j/2)` of a uniform circle grid.
    AxisImageOfCircle { n: usize },
    /// Circle nodes `θ_j = −2 atan(y_j)` of a uniform axis grid.
    CircleImageOfAxis { y_max: f64, n: usize },
    AxisNodes { y: Vec<f64> },
    CircleNodes { theta: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryDomain {
    HalfPlaneAxis,
    DiskCircle,
}

impl BoundaryDomain {
    fn tag(self) -> &'static str {
        match self {
            BoundaryDomain::HalfPlaneAxis => "half_plane_axis",
            BoundaryDomain::DiskCircle => "disk_circle",
        }
    }
}

fn uniform_theta(j: usize, n: usize) -> f64 {
    TAU * (j as f64 + 0.5) / n as f64
}

fn uniform_y(j: usize, y_max: f64, n: usize) -> f64 {
    if n == 1 {
        return 0.0;
    }
    -y_max + 2.0 * y_max * j as f64 / (n - 1) as f64
}

impl FrequencyGrid {
    pub fn len(&self) -> usize {
        match self {
            FrequencyGrid::UniformAxis { n, .. }
            | FrequencyGrid::UniformCircle { n }
            | FrequencyGrid::AxisImageOfCircle { n }
            | FrequencyGrid::CircleImageOfAxis { n, .. } => *n,
            FrequencyGrid::AxisNodes { y } => y.len(),
            FrequencyGrid::CircleNodes { theta } => theta.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn domain(&self) -> BoundaryDomain {
        match self {
            FrequencyGrid::UniformAxis { .. } | FrequencyGrid::AxisImageOfCircle { .. } | FrequencyGrid::AxisNodes { .. } => {
                BoundaryDomain::HalfPlaneAxis
            }
            _ => BoundaryDomain::DiskCircle,
        }
    }

    /// `y_j` for axis grids.
    pub fn axis_values(&self) -> Option<Vec<f64>> {
        match self {
            FrequencyGrid::UniformAxis { y_max, n } => Some((0..*n).map(|j| uniform_y(j, *y_max, *n)).collect()),
            FrequencyGrid::AxisImageOfCircle { n } => {
                Some((0..*n).map(|j| -(uniform_theta(j, *n) / 2.0).tan()).collect())
            }
            FrequencyGrid::AxisNodes { y } => Some(y.clone()),
            _ => None,
        }
    }

    /// `θ_j` for circle grids.
    pub fn circle_angles(&self) -> Option<Vec<f64>> {
        match self {
            FrequencyGrid::UniformCircle { n } => Some((0..*n).map(|j| uniform_theta(j, *n)).collect()),
            FrequencyGrid::CircleImageOfAxis { y_max, n } => {
                Some((0..*n).map(|j| -2.0 * uniform_y(j, *y_max, *n).atan()).collect())
            }
            FrequencyGrid::CircleNodes { theta } => Some(theta.clone()),
            _ => None,
        }
    }

    /// Points in the complex plane: `iy_j` on the axis or `e^{iθ_j}` on the circle.
    pub fn points(&self) -> Vec<C64> {
        match self.domain() {
            BoundaryDomain::HalfPlaneAxis => {
                self.axis_values().unwrap().into_iter().map(|y| C64::new(0.0, y)).collect()
            }
            BoundaryDomain::DiskCircle => {
                self.circle_angles().unwrap().into_iter().map(|t| C64::from_polar(1.0, t)).collect()
            }
        }
    }

    /// Half-plane points `w_j` matching the nodes: the nodes themselves for
    /// axis grids, `m(e^{iθ_j}) = −i tan(θ_j/2)` for circle grids.
    pub fn half_plane_points(&self) -> Vec<C64> {
        match self {
            FrequencyGrid::CircleImageOfAxis { y_max, n } => {
                (0..*n).map(|j| C64::new(0.0, uniform_y(j, *y_max, *n))).collect()
            }
            g if g.domain() == BoundaryDomain::DiskCircle => g
                .circle_angles()
                .unwrap()
                .into_iter()
                .map(|t| C64::new(0.0, -(t / 2.0).tan()))
                .collect(),
            g => g.points(),
        }
    }

    /// The Cayley-linked grid in the other domain.
    pub fn cayley_image(&self) -> Result<FrequencyGrid> {
        Ok(match self {
            FrequencyGrid::UniformAxis { y_max, n } => FrequencyGrid::CircleImageOfAxis { y_max: *y_max, n: *n },
            FrequencyGrid::CircleImageOfAxis { y_max, n } => FrequencyGrid::UniformAxis { y_max: *y_max, n: *n },
            FrequencyGrid::UniformCircle { n } => FrequencyGrid::AxisImageOfCircle { n: *n },
            FrequencyGrid::AxisImageOfCircle { n } => FrequencyGrid::UniformCircle { n: *n },
            FrequencyGrid::AxisNodes { y } => {
                FrequencyGrid::CircleNodes { theta: y.iter().map(|y| -2.0 * y.atan()).collect() }
            }
            FrequencyGrid::CircleNodes { theta } => {
                let mut y = Vec::with_capacity(theta.len());
                for t in theta {
                    let half = (t / 2.0).rem_euclid(PI);
                    if (half - PI / 2.0).abs() < 1e-12 {
                        return Err(Error::Domain("circle grid contains z = -1, which has no axis image".into()));
                    }
                    y.push(-(t / 2.0).tan());
                }
                FrequencyGrid::AxisNodes { y }
            }
        })
    }

    /// `(y_max, n)` if this is a symmetric uniform axis grid.
    pub(crate) fn uniform_axis(&self) -> Option<(f64, usize)> {
        match self {
            FrequencyGrid::UniformAxis { y_max, n } => Some((*y_max, *n)),
            FrequencyGrid::AxisNodes { y } if y.len() >= 2 => {
                let n = y.len();
                let y_max = y[n - 1];
                let ok = (y[0] + y_max).abs() <= 1e-9 * y_max.abs()
                    && y.iter().enumerate().all(|(j, v)| (v - uniform_y(j, y_max, n)).abs() <= 1e-9 * y_max.abs());
                (ok && y_max > 0.0).then_some((y_max, n))
            }
            _ => None,
        }
    }
}

/// Samples of a Hardy-space function on its boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFunction {
    domain: BoundaryDomain,
    grid: FrequencyGrid,
    values: Vec<C64>,
}

impl BoundaryFunction {
    pub fn new(grid: FrequencyGrid, values: Vec<C64>) -> Result<BoundaryFunction> {
        if values.len() != grid.len() {
            return Err(Error::IncompatibleGrid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Domain(format!("non-finite boundary value at node {k}")));
        }
        Ok(BoundaryFunction { domain: grid.domain(), grid, values })
    }

    /// Samples a closed-form function at the grid points (`iy` or `e^{iθ}`).
    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(C64) -> C64) -> Result<BoundaryFunction> {
        let values = grid.points().into_iter().map(f).collect();
        BoundaryFunction::new(grid, values)
    }

    pub fn domain(&self) -> BoundaryDomain {
        self.domain
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `sup_j |self_j − other_j|` on a shared grid.
    pub fn sup_distance(&self, other: &BoundaryFunction) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::IncompatibleGrid("boundary functions live on different grids".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "#domain={}", self.domain.tag())?;
        let first = match self.domain {
            BoundaryDomain::HalfPlaneAxis => "y",
            BoundaryDomain::DiskCircle => "theta",
        };
        let coords = match self.domain {
            BoundaryDomain::HalfPlaneAxis => self.grid.axis_values().unwrap(),
            BoundaryDomain::DiskCircle => self.grid.circle_angles().unwrap(),
        };
        let mut w = csv::Writer::from_writer(out);
        w.write_record([first, "re", "im"]).map_err(csv_io)?;
        for (c, v) in coords.iter().zip(&self.values) {
            w.write_record([c.to_string(), v.re.to_string(), v.im.to_string()]).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`write_csv`](Self::write_csv). Uniform
    /// half-offset circle grids and symmetric uniform axis grids are
    /// recognised and restored as such.
    pub fn read_csv<R: Read>(input: R) -> Result<BoundaryFunction> {
        let mut reader = BufReader::new(input);
        let mut first = String::new();
        reader.read_line(&mut first)?;
        let domain = match first.trim().strip_prefix("#domain=") {
            Some("half_plane_axis") => BoundaryDomain::HalfPlaneAxis,
            Some("disk_circle") => BoundaryDomain::DiskCircle,
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "expected `#domain=half_plane_axis` or `#domain=disk_circle`".into(),
                })
            }
        };
        let coord = match domain {
            BoundaryDomain::HalfPlaneAxis => "y",
            BoundaryDomain::DiskCircle => "theta",
        };
        let rows = read_triples(reader, coord).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse { line: line + 1, message },
            other => other,
        })?;
        let coords: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let values: Vec<C64> = rows.iter().map(|r| C64::new(r.1, r.2)).collect();
        let grid = match domain {
            BoundaryDomain::HalfPlaneAxis => {
                let nodes = FrequencyGrid::AxisNodes { y: coords };
                match nodes.uniform_axis() {
                    Some((y_max, n)) => FrequencyGrid::UniformAxis { y_max, n },
                    None => nodes,
                }
            }
            BoundaryDomain::DiskCircle => {
                let n = coords.len();
                let uniform = n >= 2
                    && coords.iter().enumerate().all(|(j, t)| (t - uniform_theta(j, n)).abs() <= 1e-12 * TAU);
                if uniform {
                    FrequencyGrid::UniformCircle { n }
                } else {
                    FrequencyGrid::CircleNodes { theta: coords }
                }
            }
        };
        BoundaryFunction::new(grid, values)
    }
}

/// Taylor or Fourier coefficients `c_0, c_1, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficients {
    pub coeffs: Vec<C64>,
}

impl FourierCoefficients {
    pub fn new(coeffs: Vec<C64>) -> Result<FourierCoefficients> {
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Domain("non-finite coefficient".into()));
        }
        Ok(FourierCoefficients { coeffs })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `Σ |c_n|²`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Power-series values together with an estimate of the truncated tail.
#[derive(Debug, Clone, PartialEq)]
pub struct ZTransformValues {
    pub values: Vec<C64>,
    /// Per point, `max_{n ≥ M−4} |a_n| · |z|^M / (1 − |z|)`: the size of the
    /// neglected tail if the coefficients stopped decaying at the cut.
    pub tail_bound: Vec<f64>,
}

/// Evaluates `∫₀^T f(t) e^{-s t} dt` at many exponents.
///
/// Uniform purely imaginary exponent sets use the chirp-z path. Sets that are
/// within `2e-3` of such a set are handled by a Taylor expansion around it,
/// whose coefficients are again chirp-z transforms of `t^k f`. Everything else
/// is evaluated point by point.
pub(crate) fn exp_transform(values: &[C64], h: f64, s: &[C64]) -> Vec<C64> {
    let kernel = ExpKernel::new(values, h);
    if s.len() < 64 {
        return kernel.eval_many(s);
    }
    let n = s.len();
    let y0 = s[0].im;
    let dy = (s[n - 1].im - y0) / (n - 1) as f64;
    if dy == 0.0 {
        return kernel.eval_many(s);
    }
    let offsets: Vec<C64> = s.iter().enumerate().map(|(j, v)| v - C64::new(0.0, y0 + j as f64 * dy)).collect();
    let spread = offsets.iter().map(|d| d.norm()).fold(0.0, f64::max);
    let scale = s.iter().map(|v| v.norm()).fold(1.0, f64::max);
    if spread <= 1e-12 * scale {
        return kernel.eval_uniform_axis(y0, dy, n);
    }
    if spread > 2e-3 {
        return kernel.eval_many(s);
    }
    // e^{-(iy + d)t} = e^{-iyt} Σ_k (−d t)^k / k!
    let t_max = (values.len() - 1) as f64 * h;
    let x = spread * t_max;
    let mut order = 0;
    let mut term = 1.0;
    while term > 1e-17 && order < 30 {
        order += 1;
        term *= x / order as f64;
    }
    let mut out = kernel.eval_uniform_axis(y0, dy, n);
    let mut weighted: Vec<C64> = values.to_vec();
    let mut pow: Vec<C64> = vec![C64::new(1.0, 0.0); n];
    let mut fact = 1.0;
    for k in 1..=order {
        for (i, v) in weighted.iter_mut().enumerate() {
            *v *= i as f64 * h;
        }
        fact *= k as f64;
        let moments = ExpKernel::new(&weighted, h).eval_uniform_axis(y0, dy, n);
        for j in 0..n {
            pow[j] *= -offsets[j];
            out[j] += moments[j] * pow[j] / fact;
        }
    }
    out
}

fn check_half_plane(w: &[C64]) -> Result<()> {
    for v in w {
        if !(v.re.is_finite() && v.im.is_finite()) || v.re < -1e-12 * (1.0 + v.norm()) {
            return Err(Error::Domain(format!("Laplace transform needs Re w >= 0, got {v}")));
        }
    }
    Ok(())
}

/// `L f(w)` at each point (`Re w ≥ 0`).
pub fn laplace(f: &CausalSignal, w: &[C64]) -> Result<Vec<C64>> {
    check_half_plane(w)?;
    let h = f.grid().dt();
    Ok(exp_transform(f.values(), h, w).into_iter().map(|v| v / SQRT_2PI).collect())
}

/// Boundary values `L f(iy_j)` on an axis grid.
pub fn laplace_axis(f: &CausalSignal, grid: &FrequencyGrid) -> Result<BoundaryFunction> {
    if grid.domain() != BoundaryDomain::HalfPlaneAxis {
        return Err(Error::IncompatibleGrid("laplace_axis needs an axis grid".into()));
    }
    let values = laplace(f, &grid.points())?;
    BoundaryFunction::new(grid.clone(), values)
}

/// `H f` at circle grid nodes.
pub fn h_transform(f: &CausalSignal, grid: &FrequencyGrid) -> Result<BoundaryFunction> {
    if grid.domain() != BoundaryDomain::DiskCircle {
        return Err(Error::IncompatibleGrid("h_transform needs a circle grid".into()));
    }
    let s = grid.half_plane_points();
    let ints = exp_transform(f.values(), f.grid().dt(), &s);
    let values = ints.iter().zip(&s).map(|(i, s)| i * (1.0 + s) / std::f64::consts::SQRT_2).collect();
    BoundaryFunction::new(grid.clone(), values)
}

/// `H f(z)` at arbitrary points of the closed disk other than `z = −1`.
pub fn h_transform_at(f: &CausalSignal, z: &[C64]) -> Result<Vec<C64>> {
    let mut s = Vec::with_capacity(z.len());
    for &zi in z {
        if !(zi.norm() <= 1.0 + 1e-12) {
            return Err(Error::Domain(format!("H transform evaluated outside the closed disk at {zi}")));
        }
        if (zi + 1.0).norm() < 1e-300 {
            return Err(Error::Domain("H transform is not defined by quadrature at z = -1".into()));
        }
        let w = mobius(zi);
        s.push(C64::new(w.re.max(0.0), w.im));
    }
    let ints = exp_transform(f.values(), f.grid().dt(), &s);
    Ok(ints.iter().zip(&s).map(|(i, s)| i * (1.0 + s) / std::f64::consts::SQRT_2).collect())
}

/// Pointwise `Φ`: axis samples to samples on the Cayley-image circle grid.
pub fn cayley_to_disk(f: &BoundaryFunction) -> Result<BoundaryFunction> {
    if f.domain != BoundaryDomain::HalfPlaneAxis {
        return Err(Error::IncompatibleGrid("cayley_to_disk needs axis samples".into()));
    }
    let grid = f.grid.cayley_image()?;
    let ys = f.grid.axis_values().unwrap();
    // 2√π/(1 + z) = √π (1 + w) with w = iy.
    let values = f.values.iter().zip(&ys).map(|(v, y)| v * C64::new(1.0, *y) * SQRT_PI).collect();
    BoundaryFunction::new(grid, values)
}

/// Pointwise `Φ⁻¹`: circle samples to samples on the Cayley-image axis grid.
pub fn cayley_to_axis(g: &BoundaryFunction) -> Result<BoundaryFunction> {
    if g.domain != BoundaryDomain::DiskCircle {
        return Err(Error::IncompatibleGrid("cayley_to_axis needs circle samples".into()));
    }
    let grid = g.grid.cayley_image()?;
    let ws = g.grid.half_plane_points();
    let values = g.values.iter().zip(&ws).map(|(v, w)| v / ((1.0 + w) * SQRT_PI)).collect();
    BoundaryFunction::new(grid, values)
}

/// Unnormalised DFT `Σ_j v_j e^{-2πi jn/N}` for `n = 0..N`.
pub(crate) fn fft_forward(values: &[C64]) -> Vec<C64> {
    let mut buf = values.to_vec();
    FftPlanner::<f64>::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Unnormalised inverse DFT.
pub(crate) fn fft_inverse(values: &[C64]) -> Vec<C64> {
    let mut buf = values.to_vec();
    FftPlanner::<f64>::new().plan_fft_inverse(buf.len()).process(&mut buf);
    buf
}

/// All `N` discrete Fourier coefficients of samples on a uniform half-offset
/// circle grid, indexed `0..N` (index `k ≥ N/2` stands for `k − N`).
pub(crate) fn circle_coefficients(values: &[C64]) -> Vec<C64> {
    let n = values.len();
    let spec = fft_forward(values);
    spec.iter()
        .enumerate()
        .map(|(k, c)| {
            let freq = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
            c * C64::from_polar(1.0 / n as f64, -PI * freq / n as f64)
        })
        .collect()
}

/// Synthesises `Σ_n c_n e^{inθ_j}` on the half-offset grid; `coeffs` is
/// indexed like the output of [`circle_coefficients`].
pub(crate) fn circle_synthesis(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len();
    let shifted: Vec<C64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let freq = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
            c * C64::from_polar(1.0, PI * freq / n as f64)
        })
        .collect();
    fft_inverse(&shifted)
}

/// `c_n = (2π)^{-1} ∫ G(e^{iθ}) e^{-inθ} dθ` for `n < M`, by the trapezoid
/// rule on a uniform circle grid.
pub fn fourier_coeffs(g: &BoundaryFunction, m: usize) -> Result<FourierCoefficients> {
    let FrequencyGrid::UniformCircle { n } = g.grid else {
        return Err(Error::IncompatibleGrid("Fourier coefficients need a uniform circle grid".into()));
    };
    if m > n / 2 {
        return Err(Error::Resolution(format!("requested {m} coefficients from {n} nodes (max {})", n / 2)));
    }
    let all = circle_coefficients(&g.values);
    FourierCoefficients::new(all[..m].to_vec())
}

/// `Σ a_n z^n` at points of the open disk.
pub fn z_transform_eval(a: &FourierCoefficients, z: &[C64]) -> Result<ZTransformValues> {
    let m = a.coeffs.len();
    let trailing = a.coeffs[m.saturating_sub(4)..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut values = Vec::with_capacity(z.len());
    let mut tail_bound = Vec::with_capacity(z.len());
    for &zi in z {
        let r = zi.norm();
        if !(r < 1.0) {
            return Err(Error::Domain(format!("z-transform needs |z| < 1, got |z| = {r}")));
        }
        let v = a.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * zi + c);
        values.push(v);
        tail_bound.push(trailing * r.powi(m as i32) / (1.0 - r));
    }
    Ok(ZTransformValues { values, tail_bound })
}

/// Diagnostics from [`inverse_laplace_boundary_with_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionReport {
    /// Delay of the fitted tail model, in seconds.
    pub delay: f64,
    /// Number of `(1 + iy)^{-k}` terms in the tail model (0 if none was used).
    pub model_terms: usize,
    /// `max |F|` on the outer tenth of the axis grid relative to `max |F|`.
    pub tail_level: f64,
    /// Relative least-squares residual of the tail fit.
    pub fit_residual: f64,
}

const TAIL_TERMS: usize = 6;
const MAX_FIT_ROWS: usize = 600;

struct TailModel {
    delay: f64,
    coeffs: Vec<C64>,
    residual: f64,
}

impl TailModel {
    fn eval(&self, y: f64) -> C64 {
        let u = 1.0 / C64::new(1.0, y);
        let mut acc = C64::new(0.0, 0.0);
        let mut p = u;
        for b in &self.coeffs {
            acc += b * p;
            p *= u;
        }
        acc * C64::from_polar(1.0, -y * self.delay)
    }

    /// Inverse transform of the model: `√(2π) Σ b_k (t−δ)^{k−1} e^{−(t−δ)}/(k−1)!`.
    fn time_value(&self, t: f64) -> C64 {
        if t < self.delay {
            return C64::new(0.0, 0.0);
        }
        let x = t - self.delay;
        let mut acc = C64::new(0.0, 0.0);
        let mut p = 1.0;
        for (k, b) in self.coeffs.iter().enumerate() {
            if k > 0 {
                p *= x / k as f64;
            }
            acc += b * p;
        }
        acc * (-x).exp() * SQRT_2PI
    }
}

/// Least-squares fit of `e^{-iyδ} Σ_k c_k v^k`, `v = (Y/4)/(1 + iy)`, for a
/// fixed δ. Returns rescaled coefficients and the relative residual.
fn fit_for_delay(ys: &[f64], vals: &[C64], y_max: f64, delay: f64) -> Option<(Vec<C64>, f64)> {
    let rows = ys.len();
    let scale = y_max / 4.0;
    let a = DMatrix::from_fn(rows, TAIL_TERMS, |r, k| {
        let v = scale / C64::new(1.0, ys[r]);
        v.powi(k as i32 + 1) * C64::from_polar(1.0, -ys[r] * delay)
    });
    let b = DVector::from_column_slice(vals);
    let svd = a.clone().svd(true, true);
    let c = svd.solve(&b, 1e-14).ok()?;
    let resid = (&a * &c - &b).norm() / b.norm();
    let coeffs = (0..TAIL_TERMS).map(|k| c[k] * scale.powi(k as i32 + 1)).collect();
    Some((coeffs, resid))
}

/// Least-squares slope of the unwrapped phase over a run of nodes.
fn phase_slope(ys: &[f64], vals: &[C64]) -> Option<f64> {
    if ys.len() < 8 {
        return None;
    }
    let mut phase = Vec::with_capacity(vals.len());
    let mut prev = vals[0].arg();
    let mut offset = 0.0;
    phase.push(prev);
    for v in &vals[1..] {
        let a = v.arg();
        let mut d = a - prev;
        while d > PI {
            d -= TAU;
        }
        while d < -PI {
            d += TAU;
        }
        offset += d;
        phase.push(vals[0].arg() + offset);
        prev = a;
    }
    let n = ys.len() as f64;
    let my = ys.iter().sum::<f64>() / n;
    let mp = phase.iter().sum::<f64>() / n;
    let num: f64 = ys.iter().zip(&phase).map(|(y, p)| (y - my) * (p - mp)).sum();
    let den: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    Some(num / den)
}

fn fit_tail(ys: &[f64], vals: &[C64], y_max: f64, dt: f64) -> Option<TailModel> {
    let peak = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tail_idx: Vec<usize> = (0..ys.len()).filter(|&j| ys[j].abs() >= y_max / 4.0).collect();
    let tail_peak = tail_idx.iter().map(|&j| vals[j].norm()).fold(0.0, f64::max);
    if tail_idx.len() < 4 * TAIL_TERMS || tail_peak < 1e-13 * peak {
        return None;
    }
    let stride = tail_idx.len().div_ceil(MAX_FIT_ROWS);
    let rows: Vec<usize> = tail_idx.iter().copied().step_by(stride).collect();
    let fy: Vec<f64> = rows.iter().map(|&j| ys[j]).collect();
    let fv: Vec<C64> = rows.iter().map(|&j| vals[j]).collect();

    let side = |pos: bool| -> Option<f64> {
        let idx: Vec<usize> =
            (0..ys.len()).filter(|&j| ys[j].abs() >= y_max / 2.0 && (ys[j] > 0.0) == pos).collect();
        let y: Vec<f64> = idx.iter().map(|&j| ys[j]).collect();
        let v: Vec<C64> = idx.iter().map(|&j| vals[j]).collect();
        phase_slope(&y, &v)
    };
    let slopes: Vec<f64> = [side(true), side(false)].into_iter().flatten().collect();
    let estimate = if slopes.is_empty() { 0.0 } else { -slopes.iter().sum::<f64>() / slopes.len() as f64 };

    let resid = |d: f64| fit_for_delay(&fy, &fv, y_max, d).map(|r| r.1).unwrap_or(f64::INFINITY);
    let mut best = (0.0, resid(0.0));
    let width = 0.02;
    let step = 1e-3;
    let lo = (estimate - width).max(0.0);
    let count = ((estimate + width - lo) / step).ceil().max(0.0) as usize;
    for i in 0..=count {
        let d = lo + i as f64 * step;
        let r = resid(d);
        if r < best.1 {
            best = (d, r);
        }
    }
    // Golden-section refinement around the best grid point.
    let (mut a, mut b) = ((best.0 - step).max(0.0), best.0 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut rc, mut rd) = (resid(c), resid(d));
    for _ in 0..60 {
        if rc < rd {
            b = d;
            d = c;
            rd = rc;
            c = b - g * (b - a);
            rc = resid(c);
        } else {
            a = c;
            c = d;
            rc = rd;
            d = a + g * (b - a);
            rd = resid(d);
        }
    }
    let mut delay = if rc < rd { c } else { d };
    if resid(delay) > best.1 {
        delay = best.0;
    }
    let snapped = (delay / dt).round() * dt;
    if (delay - snapped).abs() < 1e-6 {
        delay = snapped;
    }
    if delay < 1e-6 {
        delay = 0.0;
    }
    let (coeffs, residual) = fit_for_delay(&fy, &fv, y_max, delay)?;
    (residual <= 0.5).then_some(TailModel { delay, coeffs, residual })
}

/// Inverts `L` from boundary samples on a symmetric uniform axis grid.
pub fn inverse_laplace_boundary(f: &BoundaryFunction, grid: TimeGrid) -> Result<CausalSignal> {
    inverse_laplace_boundary_with_report(f, grid).map(|r| r.0)
}

/// Inverse Laplace transform with diagnostics.
///
/// The samples are split as `F = M + R`, where the model
/// `M(iy) = e^{-iyδ} Σ_{k≤6} b_k (1 + iy)^{-k}` is fitted to the outer three
/// quarters of the grid and inverted in closed form. The remainder `R` decays
/// fast, so the truncated trapezoid sum `(2π)^{-1/2} Σ R(iy_j) e^{iy_j t} Δy`,
/// evaluated with a chirp-z transform, is accurate. Without the split, jumps
/// and delays would leave Gibbs ripples of order `1/Y`.
pub fn inverse_laplace_boundary_with_report(
    f: &BoundaryFunction,
    grid: TimeGrid,
) -> Result<(CausalSignal, InversionReport)> {
    if f.domain != BoundaryDomain::HalfPlaneAxis {
        return Err(Error::IncompatibleGrid("inverse Laplace transform needs axis samples".into()));
    }
    let Some((y_max, n)) = f.grid.uniform_axis() else {
        return Err(Error::Domain("inverse Laplace transform needs a symmetric uniform axis grid".into()));
    };
    let ys = f.grid.axis_values().unwrap();
    let vals = &f.values;
    let peak = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        let report = InversionReport { delay: 0.0, model_terms: 0, tail_level: 0.0, fit_residual: 0.0 };
        return Ok((CausalSignal::zeros(grid), report));
    }
    let outer = ys.iter().zip(vals).filter(|(y, _)| y.abs() >= 0.9 * y_max).map(|(_, v)| v.norm()).fold(0.0, f64::max);
    let model = fit_tail(&ys, vals, y_max, grid.dt());
    let dy = 2.0 * y_max / (n - 1) as f64;
    let weighted: Vec<C64> = ys
        .iter()
        .zip(vals)
        .enumerate()
        .map(|(j, (y, v))| {
            let r = match &model {
                Some(m) => v - m.eval(*y),
                None => *v,
            };
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            r * w
        })
        .collect();
    let dt = grid.dt();
    let sums = chirp_sum(&weighted, 0.0, dy * dt, grid.n_samples());
    let norm = dy / SQRT_2PI;
    let mut out: Vec<C64> = sums
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let t = grid.time(k);
            s * C64::from_polar(norm, -y_max * t)
        })
        .collect();
    if let Some(m) = &model {
        for (k, v) in out.iter_mut().enumerate() {
            *v += m.time_value(grid.time(k));
        }
        if m.delay > 0.0 {
            let first = ((m.delay / dt).round() as usize).min(out.len());
            let snapped = (first as f64 * dt - m.delay).abs() < 1e-9;
            let total = out.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let before = out[..first].iter().map(|v| v.norm()).fold(0.0, f64::max);
            if snapped && before < 1e-6 * total {
                for v in out[..first].iter_mut() {
                    *v = C64::new(0.0, 0.0);
                }
            }
        }
    }
    let report = InversionReport {
        delay: model.as_ref().map_or(0.0, |m| m.delay),
        model_terms: model.as_ref().map_or(0, |m| m.coeffs.len()),
        tail_level: outer / peak,
        fit_residual: model.as_ref().map_or(1.0, |m| m.residual),
    };
    Ok((CausalSignal::new(grid, out)?, report))
}
