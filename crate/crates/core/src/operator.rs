//! Product-composition operators `A = L⁻¹ M_κ C_ξ L = H⁻¹ M_ψ C_φ H`.
//!
//! An [`OperatorModel`] always carries the half-plane data `α, ξ` (from which
//! `κ = √(2π)(1 + ξ)α` is derived) and, when it was synthesized from disk
//! data, the pair `ψ, φ` as well. The two pictures are linked by
//! `ξ = m∘φ∘m` and `α(w) = ψ(m(w)) / (√(2π)(1 + w))`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::descriptor::{polynomial_roots, FunctionDescriptor};
use crate::error::{Error, Result};
use crate::factorization::{factorize_with_center, singular_pattern_deviation};
use crate::signal::CausalSignal;
use crate::transforms::{
    exp_transform, h_transform_at, inverse_laplace_boundary_with_report, mobius, BoundaryFunction,
    FrequencyGrid, InversionReport, SQRT_2PI, SQRT_PI,
};

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorForm {
    Disk,
    HalfPlane,
}

/// Whether the sufficient condition for preserving translated minimum-phase
/// signals could be confirmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preservation {
    /// `ψ` has a pure-delay inner part and `φ` is the identity or `1 + φ`
    /// has no zero on the closed disk.
    Verified,
    /// No violation found, but the sufficient condition does not apply.
    Unverified,
    /// Self-map or zero-freeness check failed.
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub self_map_ok: bool,
    /// `sup |φ|` over circle and interior samples, when `φ` is known.
    pub sup_phi: Option<f64>,
    /// `min Re ξ(iy)` over the axis grid.
    pub min_re_xi: f64,
    /// Delay of the singular inner factor of `ψ` (or of the pullback of `α`).
    pub psi_delay: Option<f64>,
    /// `sup |inner / (λ S_τ) − 1|` for that factor.
    pub inner_pattern_deviation: Option<f64>,
    /// `ψ` is zero-free with a pure-delay inner factor.
    pub pure_delay_inner: Option<bool>,
    pub preservation: Preservation,
    pub messages: Vec<String>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.preservation != Preservation::Violated
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorModel {
    pub form: OperatorForm,
    pub alpha: FunctionDescriptor,
    pub xi: FunctionDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<FunctionDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<FunctionDescriptor>,
    /// Axis grid that sampled descriptors refer to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<FrequencyGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<Validation>,
}

/// Diagnostics from [`apply_with_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplyReport {
    pub min_re_xi: f64,
    pub inversion: InversionReport,
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

impl OperatorModel {
    /// Half-plane operator from closed-form or sampled `α, ξ`.
    pub fn half_plane(
        alpha: FunctionDescriptor,
        xi: FunctionDescriptor,
        grid: Option<FrequencyGrid>,
    ) -> OperatorModel {
        OperatorModel { form: OperatorForm::HalfPlane, alpha, xi, psi: None, phi: None, grid, validation: None }
    }

    pub fn is_sampled(&self) -> bool {
        self.alpha.is_sampled() || self.xi.is_sampled()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<OperatorModel> {
        let op: OperatorModel = serde_json::from_str(text)?;
        if op.is_sampled() {
            match &op.grid {
                Some(g) if g.uniform_axis().is_some() => {}
                _ => {
                    return Err(Error::InvalidOperator(
                        "sampled operator data needs a symmetric uniform axis grid".into(),
                    ))
                }
            }
        }
        Ok(op)
    }

    /// Axis grid on which the operator is applied.
    pub fn axis_grid(&self, cfg: &Config) -> Result<FrequencyGrid> {
        match (&self.grid, self.is_sampled()) {
            (Some(g), _) if g.uniform_axis().is_some() => Ok(g.clone()),
            (_, true) => Err(Error::InvalidOperator("sampled operator without a uniform axis grid".into())),
            _ => Ok(cfg.axis_grid()),
        }
    }

    /// `ξ(w_j)` at the given half-plane points.
    pub fn xi_at(&self, w: &[C64]) -> Result<Vec<C64>> {
        self.xi.values_at(w)
    }

    pub fn alpha_at(&self, w: &[C64]) -> Result<Vec<C64>> {
        self.alpha.values_at(w)
    }

    /// `κ(w_j) = √(2π)(1 + ξ(w_j)) α(w_j)`.
    pub fn kappa_at(&self, w: &[C64]) -> Result<Vec<C64>> {
        let xi = self.xi_at(w)?;
        let alpha = self.alpha_at(w)?;
        Ok(xi.iter().zip(&alpha).map(|(x, a)| SQRT_2PI * (1.0 + x) * a).collect())
    }

    /// Boundary samples of `κ` on the operator's axis grid.
    pub fn kappa_boundary(&self, cfg: &Config) -> Result<BoundaryFunction> {
        let grid = self.axis_grid(cfg)?;
        BoundaryFunction::new(grid.clone(), self.kappa_at(&grid.points())?)
    }

    /// Boundary samples of `ξ` on the operator's axis grid.
    pub fn xi_boundary(&self, cfg: &Config) -> Result<BoundaryFunction> {
        let grid = self.axis_grid(cfg)?;
        BoundaryFunction::new(grid.clone(), self.xi_at(&grid.points())?)
    }
}

/// Builds both forms of `M_ψ C_φ` from disk descriptors and validates them.
pub fn synthesize(psi: FunctionDescriptor, phi: FunctionDescriptor, cfg: &Config) -> Result<OperatorModel> {
    if psi.is_sampled() || phi.is_sampled() {
        return Err(Error::InvalidOperator("synthesis needs closed-form descriptors".into()));
    }
    let m = FunctionDescriptor::cayley();
    let xi = FunctionDescriptor::compose(m.clone(), FunctionDescriptor::compose(phi.clone(), m.clone()));
    let alpha = FunctionDescriptor::Product(vec![
        FunctionDescriptor::compose(psi.clone(), m),
        FunctionDescriptor::Rational { num: vec![c(1.0 / SQRT_2PI)], den: vec![c(1.0), c(1.0)] },
    ]);
    let mut op = OperatorModel {
        form: OperatorForm::Disk,
        alpha,
        xi,
        psi: Some(psi),
        phi: Some(phi),
        grid: None,
        validation: None,
    };
    op.validation = Some(validate(&op, cfg)?);
    Ok(op)
}

fn xi_tolerance(xi: C64, cfg: &Config) -> f64 {
    cfg.xi_abs_tol + cfg.xi_rel_tol * xi.norm()
}

/// Disk points used for self-map checks: the circle grid and four interior rings.
fn disk_samples(cfg: &Config) -> Vec<C64> {
    let mut pts = cfg.circle_grid().points();
    for r in [0.0, 0.5, 0.9, 0.99] {
        for k in 0..64 {
            pts.push(C64::from_polar(r, std::f64::consts::TAU * k as f64 / 64.0));
        }
    }
    pts
}

/// Whether `1 + φ` has a zero in the closed disk: exactly for rational and
/// Möbius `φ`, by sampling otherwise.
fn one_plus_phi_vanishes(phi: &FunctionDescriptor, samples: &[C64], values: &[C64], n_circle: usize) -> bool {
    let closed_disk = |r: &C64| r.norm() <= 1.0 + 1e-9;
    match phi {
        FunctionDescriptor::Rational { num, den } => {
            let len = num.len().max(den.len());
            let sum: Vec<C64> = (0..len)
                .map(|k| num.get(k).copied().unwrap_or(c(0.0)) + den.get(k).copied().unwrap_or(c(0.0)))
                .collect();
            if sum.iter().all(|v| v.norm() == 0.0) {
                return true;
            }
            polynomial_roots(&sum).iter().any(closed_disk)
        }
        FunctionDescriptor::Mobius { a, b, c: cc, d } => {
            let sum = [b + d, a + cc];
            if sum.iter().all(|v| v.norm() == 0.0) {
                return true;
            }
            polynomial_roots(&sum).iter().any(closed_disk)
        }
        _ => {
            let spacing = std::f64::consts::TAU / n_circle as f64;
            let _ = samples;
            values.iter().map(|v| (1.0 + v).norm()).fold(f64::INFINITY, f64::min) < 10.0 * spacing
        }
    }
}

/// Checks the self-map property, zero-freeness and delay structure of `ψ`
/// (or of the pullback `√2 Φα` when only `α` is known), and the sufficient
/// condition for preservation.
pub fn validate(op: &OperatorModel, cfg: &Config) -> Result<Validation> {
    let mut messages = Vec::new();
    let axis = op.axis_grid(cfg)?;
    let w = axis.points();
    let xi = op.xi_at(&w)?;
    let min_re_xi = xi.iter().map(|x| x.re).fold(f64::INFINITY, f64::min);
    let xi_ok = xi.iter().all(|x| x.re >= -xi_tolerance(*x, cfg));
    if !xi_ok {
        messages.push(format!("Re xi(iy) reaches {min_re_xi:e}, below the tolerance"));
    }

    let mut sup_phi = None;
    let mut phi_is_identity = false;
    let mut phi_ok_for_preservation = false;
    let mut self_map_ok = xi_ok;
    if let Some(phi) = &op.phi {
        let pts = disk_samples(cfg);
        let vals = phi.eval_many(&pts)?;
        let sup = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        sup_phi = Some(sup);
        if sup > 1.0 + cfg.self_map_tol {
            self_map_ok = false;
            messages.push(format!("sup |phi| = {sup} exceeds 1"));
        }
        phi_is_identity = pts.iter().zip(&vals).all(|(z, v)| (z - v).norm() <= 1e-12);
        phi_ok_for_preservation = phi_is_identity || !one_plus_phi_vanishes(phi, &pts, &vals, cfg.n_circle);
    } else if !op.xi.is_sampled() {
        phi_is_identity = w.iter().zip(&xi).all(|(a, b)| (a - b).norm() <= 1e-9 * (1.0 + a.norm()));
        phi_ok_for_preservation = phi_is_identity;
    }

    let (mut psi_delay, mut inner_pattern_deviation, mut pure_delay_inner) = (None, None, None);
    let circle = cfg.circle_grid();
    let psi_data = if let Some(psi) = &op.psi {
        Some((psi.eval_many(&circle.points())?, psi.eval(c(0.0))?))
    } else if !op.alpha.is_sampled() {
        // ψ(z) = √(2π)(1 + w) α(w) with w = m(z).
        let ws = circle.half_plane_points();
        let vals = ws
            .iter()
            .map(|w| op.alpha.eval(*w).map(|a| SQRT_2PI * (1.0 + w) * a))
            .collect::<Result<Vec<C64>>>()?;
        Some((vals, 2.0 * SQRT_2PI * op.alpha.eval(c(1.0))?))
    } else {
        None
    };
    if let Some((vals, center)) = psi_data {
        let g = BoundaryFunction::new(circle, vals)?;
        match factorize_with_center(&g, center, cfg) {
            Ok(fac) => {
                let tau = if fac.delay_tau < cfg.delay_zero_tol { 0.0 } else { fac.delay_tau };
                let dev = singular_pattern_deviation(&fac, center, tau, cfg);
                psi_delay = Some(tau);
                inner_pattern_deviation = Some(dev);
                let ok = dev < cfg.inner_pattern_tol && fac.raw_delay > -cfg.delay_zero_tol;
                if !ok {
                    messages.push(format!(
                        "psi is not (singular inner) x (outer): pattern deviation {dev:e}, raw delay {:e}",
                        fac.raw_delay
                    ));
                }
                pure_delay_inner = Some(ok);
            }
            Err(e) => {
                messages.push(format!("psi could not be factorized: {e}"));
                pure_delay_inner = Some(false);
            }
        }
    }

    let preservation = if !self_map_ok || pure_delay_inner == Some(false) {
        Preservation::Violated
    } else if pure_delay_inner == Some(true) && phi_ok_for_preservation {
        Preservation::Verified
    } else {
        if !phi_is_identity {
            messages.push("sufficient condition for preservation does not apply".into());
        }
        Preservation::Unverified
    };
    Ok(Validation {
        self_map_ok,
        sup_phi,
        min_re_xi,
        psi_delay,
        inner_pattern_deviation,
        pure_delay_inner,
        preservation,
        messages,
    })
}

/// `A f = L⁻¹[κ · (L f)∘ξ]`.
pub fn apply(op: &OperatorModel, f: &CausalSignal, cfg: &Config) -> Result<CausalSignal> {
    apply_with_report(op, f, cfg).map(|r| r.0)
}

/// [`apply`] with diagnostics.
///
/// For each axis node, `L f` is evaluated by direct quadrature at the
/// interior point `ξ(iy_j)`, multiplied by `κ(iy_j)`, and the result is
/// inverted on the signal's own time grid.
pub fn apply_with_report(op: &OperatorModel, f: &CausalSignal, cfg: &Config) -> Result<(CausalSignal, ApplyReport)> {
    let axis = op.axis_grid(cfg)?;
    let w = axis.points();
    let xi = op.xi_at(&w)?;
    let kappa = op.kappa_at(&w)?;
    let mut min_re_xi = f64::INFINITY;
    let mut shifted = Vec::with_capacity(xi.len());
    for (j, x) in xi.iter().enumerate() {
        min_re_xi = min_re_xi.min(x.re);
        if x.re < -xi_tolerance(*x, cfg) {
            return Err(Error::InvalidOperator(format!(
                "Re xi(iy) = {:e} < 0 at y = {}; the operator does not map into the half-plane",
                x.re, w[j].im
            )));
        }
        shifted.push(C64::new(x.re.max(0.0), x.im));
    }
    let lf = exp_transform(f.values(), f.grid().dt(), &shifted);
    let values = lf.iter().zip(&kappa).map(|(l, k)| k * l / SQRT_2PI).collect();
    let out = BoundaryFunction::new(axis, values)?;
    let (signal, inversion) = inverse_laplace_boundary_with_report(&out, *f.grid())?;
    Ok((signal, ApplyReport { min_re_xi, inversion }))
}

/// `A f = H⁻¹[ψ · (H f)∘φ]`, evaluated as `L⁻¹ Φ⁻¹[ψ · (H f)∘φ]` on the
/// Cayley image of the axis grid.
pub fn apply_disk_route(op: &OperatorModel, f: &CausalSignal, cfg: &Config) -> Result<CausalSignal> {
    let (Some(psi), Some(phi)) = (&op.psi, &op.phi) else {
        return Err(Error::InvalidOperator("the disk route needs closed-form psi and phi".into()));
    };
    let axis = cfg.axis_grid();
    let w = axis.points();
    let z: Vec<C64> = w.iter().map(|&wi| mobius(wi)).collect();
    let mut zeta = phi.eval_many(&z)?;
    for v in zeta.iter_mut() {
        let r = v.norm();
        if r > 1.0 + cfg.self_map_tol {
            return Err(Error::NotSelfMap(format!("|phi| = {r} on the circle")));
        }
        if r > 1.0 {
            *v /= r;
        }
    }
    let hf = h_transform_at(f, &zeta)?;
    let psi_vals = psi.eval_many(&z)?;
    let values = hf
        .iter()
        .zip(&psi_vals)
        .zip(&w)
        .map(|((h, p), wi)| p * h / (SQRT_PI * (1.0 + wi)))
        .collect();
    let out = BoundaryFunction::new(axis, values)?;
    inverse_laplace_boundary_with_report(&out, *f.grid()).map(|r| r.0)
}
