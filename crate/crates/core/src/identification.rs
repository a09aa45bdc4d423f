//! Reconstruction of a product-composition operator from its responses to
//! two probe signals.
//!
//! With the `σ` probes the half-plane data come out nodewise on the axis:
//! `α = L Aσ₀ + L Aσ₁` and `ξ = L Aσ₀ / L Aσ₁`. With the `ρ` probes the disk
//! data come out instead: `ψ = H Aρ₀` and `φ = H Aρ₁ / H Aρ₀`, which are then
//! converted to `α, ξ`. In both cases the delay `ε` of `α` is read off the
//! singular inner factor of its Cayley pullback.

use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::descriptor::FunctionDescriptor;
use crate::error::{Error, Result};
use crate::factorization::{factorize_with_center, singular_pattern_deviation};
use crate::operator::{apply, OperatorModel, Preservation, Validation};
use crate::signal::CausalSignal;
use crate::transforms::{h_transform, h_transform_at, laplace_axis, BoundaryFunction, SQRT_2PI, SQRT_PI};

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeSet {
    /// `σ₀ = e^{−t}(1 − t)`, `σ₁ = t e^{−t}`.
    Sigma,
    /// `ρ₀ = √2 e^{−t}`, `ρ₁ = √2 e^{−t}(2t − 1)`.
    Rho,
}

/// Whether the operator is expected to preserve translated minimum-phase
/// signals or plain minimum-phase signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Translated,
    Plain,
}

impl FromStr for ProbeSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<ProbeSet> {
        match s {
            "sigma" => Ok(ProbeSet::Sigma),
            "rho" => Ok(ProbeSet::Rho),
            _ => Err(Error::Domain(format!("unknown probe set {s:?}; expected sigma or rho"))),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "translated" => Ok(Mode::Translated),
            "plain" => Ok(Mode::Plain),
            _ => Err(Error::Domain(format!("unknown mode {s:?}; expected translated or plain"))),
        }
    }
}

/// The measured responses `(A p₀, A p₁)` to one probe set.
#[derive(Debug, Clone)]
pub struct ProbeResponsePair {
    pub probe_set: ProbeSet,
    pub response0: CausalSignal,
    pub response1: CausalSignal,
    pub mode: Mode,
}

impl ProbeResponsePair {
    /// Checks that the responses share a grid and that `response0` is not
    /// zero. A zero `response1` is accepted for `ρ` probes, where it
    /// signals a constant `φ ≡ 0`.
    pub fn new(probe_set: ProbeSet, response0: CausalSignal, response1: CausalSignal, mode: Mode) -> Result<Self> {
        response0.grid().check_compatible(response1.grid())?;
        if response0.is_zero() {
            return Err(Error::Domain("response0 is identically zero".into()));
        }
        if response1.is_zero() && probe_set == ProbeSet::Sigma {
            return Err(Error::Domain("response1 is identically zero".into()));
        }
        Ok(ProbeResponsePair { probe_set, response0, response1, mode })
    }

    /// Responses of `op` to the chosen probes, computed with [`apply`].
    pub fn from_operator(op: &OperatorModel, probe_set: ProbeSet, mode: Mode, cfg: &Config) -> Result<Self> {
        let grid = cfg.time_grid()?;
        let (p0, p1) = probes(probe_set, grid);
        let r0 = apply(op, &p0, cfg)?;
        let r1 = apply(op, &p1, cfg)?;
        let r1 = if r1.norm() <= 1e-13 * r0.norm() { CausalSignal::zeros(grid) } else { r1 };
        ProbeResponsePair::new(probe_set, r0, r1, mode)
    }
}

fn probes(set: ProbeSet, grid: crate::signal::TimeGrid) -> (CausalSignal, CausalSignal) {
    use crate::signal::probes::*;
    match set {
        ProbeSet::Sigma => (sigma0(grid), sigma1(grid)),
        ProbeSet::Rho => (rho0(grid), rho1(grid)),
    }
}

/// Closed-form Laplace transforms of the probes.
fn probe_laplace(set: ProbeSet, w: C64) -> (C64, C64) {
    let q = (1.0 + w) * (1.0 + w);
    match set {
        ProbeSet::Sigma => (w / (SQRT_2PI * q), 1.0 / (SQRT_2PI * q)),
        ProbeSet::Rho => (1.0 / (SQRT_PI * (1.0 + w)), (1.0 - w) / (SQRT_PI * q)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationDiagnostics {
    pub probe_set: ProbeSet,
    pub mode: Mode,
    /// Extracted delay `ε` of `α`.
    pub epsilon: f64,
    /// `mean log|Φα| − log|Φα(0)|` before clamping.
    pub raw_delay: f64,
    /// `sup |inner / (λ S_ε) − 1|` of the pulled-back `α`.
    pub inner_pattern_deviation: f64,
    /// Denominator nodes below the division floor.
    pub floored_nodes: usize,
    pub min_re_xi: f64,
    /// `sup |κ (L p_k)∘ξ − L A p_k| / sup |L A p_k|` for `k = 0, 1`.
    pub consistency_residual: [f64; 2],
    /// `sup |φ|` on the circle (disk formulation only).
    pub sup_phi: Option<f64>,
    /// `A p₁` vanished, so `φ ≡ 0`.
    pub rank_one: bool,
    /// Plain mode only: `ε` exceeded `plain_delay_tol`.
    pub plain_violation: bool,
}

#[derive(Debug, Clone)]
pub struct IdentifiedOperator {
    /// Half-plane form with `α, ξ` sampled on the axis grid.
    pub op: OperatorModel,
    pub epsilon: f64,
    /// `α₀ = e^{εw} α` on the axis grid.
    pub alpha_outer: BoundaryFunction,
    /// `ψ` on the uniform circle (disk formulation only).
    pub psi: Option<BoundaryFunction>,
    /// `φ` on the uniform circle (disk formulation only).
    pub phi: Option<BoundaryFunction>,
    pub diagnostics: IdentificationDiagnostics,
}

impl IdentifiedOperator {
    pub fn xi(&self) -> &[C64] {
        match &self.op.xi {
            FunctionDescriptor::Samples { values } => values,
            _ => unreachable!("identified operators carry sampled xi"),
        }
    }

    pub fn alpha(&self) -> &[C64] {
        match &self.op.alpha {
            FunctionDescriptor::Samples { values } => values,
            _ => unreachable!("identified operators carry sampled alpha"),
        }
    }

    /// `κ = √(2π)(1 + ξ)α` on the axis grid.
    pub fn kappa(&self) -> Vec<C64> {
        self.xi().iter().zip(self.alpha()).map(|(x, a)| SQRT_2PI * (1.0 + x) * a).collect()
    }
}

/// Identifies with the formulation matching the pair's probe set.
pub fn identify(pair: &ProbeResponsePair, cfg: &Config) -> Result<IdentifiedOperator> {
    match pair.probe_set {
        ProbeSet::Sigma => identify_halfplane(pair, cfg),
        ProbeSet::Rho => identify_disk(pair, cfg),
    }
}

/// Identification under the assumption that `A` preserves (untranslated)
/// minimum-phase signals; a nonzero delay is reported as a violation.
pub fn identify_plain(pair: &ProbeResponsePair, cfg: &Config) -> Result<IdentifiedOperator> {
    let mut pair = pair.clone();
    pair.mode = Mode::Plain;
    identify(&pair, cfg)
}

/// Indices of nodes with `|d| < floor · max|d|`, after checking their count.
fn floored_nodes(d: &[C64], cfg: &Config, what: &str) -> Result<Vec<bool>> {
    let max = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let floored: Vec<bool> = d.iter().map(|v| v.norm() < cfg.division_floor * max).collect();
    let count = floored.iter().filter(|&&b| b).count();
    if max == 0.0 || count as f64 > cfg.max_floored_fraction * d.len() as f64 {
        return Err(Error::IllConditioned(format!(
            "{count} of {} nodes of {what} fall below the division floor",
            d.len()
        )));
    }
    Ok(floored)
}

/// `num / den` nodewise, with floored nodes filled by linear interpolation
/// between the nearest unfloored neighbours.
fn divide_with_floor(num: &[C64], den: &[C64], floored: &[bool]) -> Vec<C64> {
    let mut out: Vec<C64> = num.iter().zip(den).map(|(a, b)| a / b).collect();
    let good: Vec<usize> = (0..out.len()).filter(|&j| !floored[j]).collect();
    for j in (0..out.len()).filter(|&j| floored[j]) {
        let right = good.partition_point(|&g| g < j);
        out[j] = match (right.checked_sub(1).map(|i| good[i]), good.get(right).copied()) {
            (Some(l), Some(r)) => {
                let s = (j - l) as f64 / (r - l) as f64;
                out[l] * (1.0 - s) + out[r] * s
            }
            (Some(l), None) => out[l],
            (None, Some(r)) => out[r],
            (None, None) => unreachable!("at least one node is above the floor"),
        };
    }
    out
}

struct DelayInfo {
    epsilon: f64,
    raw: f64,
    pattern: f64,
}

/// Delay of a disk function given on the uniform circle with its center value.
fn pullback_delay(g: &BoundaryFunction, center: C64, cfg: &Config) -> Result<DelayInfo> {
    let fac = factorize_with_center(g, center, cfg)?;
    let epsilon = if fac.delay_tau < cfg.delay_zero_tol { 0.0 } else { fac.delay_tau };
    let pattern = singular_pattern_deviation(&fac, center, epsilon, cfg);
    Ok(DelayInfo { epsilon, raw: fac.raw_delay, pattern })
}

struct HalfPlaneData {
    alpha: Vec<C64>,
    xi: Vec<C64>,
    floored: usize,
    sup_phi: Option<f64>,
    rank_one: bool,
    psi: Option<BoundaryFunction>,
    phi: Option<BoundaryFunction>,
    delay: DelayInfo,
}

fn assemble(
    pair: &ProbeResponsePair,
    data: HalfPlaneData,
    transforms: [&BoundaryFunction; 2],
    cfg: &Config,
) -> Result<IdentifiedOperator> {
    let grid = transforms[0].grid().clone();
    let w = grid.points();
    let min_re_xi = data.xi.iter().map(|x| x.re).fold(f64::INFINITY, f64::min);
    if let Some((j, x)) = data
        .xi
        .iter()
        .enumerate()
        .find(|(_, x)| x.re < -(cfg.xi_abs_tol + cfg.xi_rel_tol * x.norm()))
    {
        return Err(Error::NotPreserving(format!("Re xi = {:e} at y = {}", x.re, w[j].im)));
    }

    let mut residual = [0.0; 2];
    for (k, f) in transforms.iter().enumerate() {
        let scale = f.sup_norm();
        let mut worst: f64 = 0.0;
        for j in 0..w.len() {
            let (l0, l1) = probe_laplace(pair.probe_set, data.xi[j]);
            let predicted = SQRT_2PI * (1.0 + data.xi[j]) * data.alpha[j] * if k == 0 { l0 } else { l1 };
            worst = worst.max((predicted - f.values()[j]).norm());
        }
        residual[k] = if scale > 0.0 { worst / scale } else { worst };
    }

    let epsilon = data.delay.epsilon;
    let alpha_outer = BoundaryFunction::new(
        grid.clone(),
        data.alpha.iter().zip(&w).map(|(a, wi)| a * (epsilon * wi).exp()).collect(),
    )?;
    let plain_violation = pair.mode == Mode::Plain && epsilon > cfg.plain_delay_tol;

    let pure_delay = data.delay.pattern < cfg.inner_pattern_tol && data.delay.raw > -cfg.delay_zero_tol;
    let self_map_ok = data.sup_phi.is_none_or(|s| s <= 1.0 + cfg.self_map_tol);
    let xi_is_identity = w.iter().zip(&data.xi).all(|(a, b)| (a - b).norm() <= 1e-6 * (1.0 + a.norm()));
    let mut messages = Vec::new();
    if !pure_delay {
        messages.push(format!(
            "alpha is not (delay) x (outer): pattern deviation {:e}, raw delay {:e}",
            data.delay.pattern, data.delay.raw
        ));
    }
    if plain_violation {
        messages.push(format!("plain mode, but alpha carries a delay of {epsilon} s"));
    }
    let preservation = if !self_map_ok || !pure_delay || plain_violation {
        Preservation::Violated
    } else if xi_is_identity {
        Preservation::Verified
    } else {
        Preservation::Unverified
    };
    let validation = Validation {
        self_map_ok,
        sup_phi: data.sup_phi,
        min_re_xi,
        psi_delay: Some(epsilon),
        inner_pattern_deviation: Some(data.delay.pattern),
        pure_delay_inner: Some(pure_delay),
        preservation,
        messages,
    };
    let mut op = OperatorModel::half_plane(
        FunctionDescriptor::Samples { values: data.alpha },
        FunctionDescriptor::Samples { values: data.xi },
        Some(grid),
    );
    op.validation = Some(validation);
    Ok(IdentifiedOperator {
        op,
        epsilon,
        alpha_outer,
        psi: data.psi,
        phi: data.phi,
        diagnostics: IdentificationDiagnostics {
            probe_set: pair.probe_set,
            mode: pair.mode,
            epsilon,
            raw_delay: data.delay.raw,
            inner_pattern_deviation: data.delay.pattern,
            floored_nodes: data.floored,
            min_re_xi,
            consistency_residual: residual,
            sup_phi: data.sup_phi,
            rank_one: data.rank_one,
            plain_violation,
        },
    })
}

/// Half-plane formulation from `(Aσ₀, Aσ₁)`.
pub fn identify_halfplane(pair: &ProbeResponsePair, cfg: &Config) -> Result<IdentifiedOperator> {
    if pair.probe_set != ProbeSet::Sigma {
        return Err(Error::Domain("half-plane identification needs sigma-probe responses".into()));
    }
    let axis = cfg.axis_grid();
    let f0 = laplace_axis(&pair.response0, &axis)?;
    let f1 = laplace_axis(&pair.response1, &axis)?;
    let floored = floored_nodes(f1.values(), cfg, "L A sigma1")?;
    let xi = divide_with_floor(f0.values(), f1.values(), &floored);
    let alpha: Vec<C64> = f0.values().iter().zip(f1.values()).map(|(a, b)| a + b).collect();

    let sum = CausalSignal::linear_combination(&[(C64::new(1.0, 0.0), &pair.response0), (C64::new(1.0, 0.0), &pair.response1)])?;
    let pullback = h_transform(&sum, &cfg.circle_grid())?;
    let center = h_transform_at(&sum, &[C64::new(0.0, 0.0)])?[0];
    let delay = pullback_delay(&pullback, center, cfg)?;

    let data = HalfPlaneData {
        alpha,
        xi,
        floored: floored.iter().filter(|&&b| b).count(),
        sup_phi: None,
        rank_one: false,
        psi: None,
        phi: None,
        delay,
    };
    assemble(pair, data, [&f0, &f1], cfg)
}

/// Disk formulation from `(Aρ₀, Aρ₁)`.
pub fn identify_disk(pair: &ProbeResponsePair, cfg: &Config) -> Result<IdentifiedOperator> {
    if pair.probe_set != ProbeSet::Rho {
        return Err(Error::Domain("disk identification needs rho-probe responses".into()));
    }
    let rank_one = pair.response1.norm() <= 1e-12 * pair.response0.norm();

    // ψ and φ on the uniform circle, for the self-map and delay checks.
    let circle = cfg.circle_grid();
    let psi = h_transform(&pair.response0, &circle)?;
    let psi_center = h_transform_at(&pair.response0, &[C64::new(0.0, 0.0)])?[0];
    let floored_circle = floored_nodes(psi.values(), cfg, "H A rho0")?;
    let phi_values = if rank_one {
        vec![C64::new(0.0, 0.0); circle.len()]
    } else {
        let h1 = h_transform(&pair.response1, &circle)?;
        divide_with_floor(h1.values(), psi.values(), &floored_circle)
    };
    let sup_phi = phi_values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if sup_phi > 1.0 + cfg.self_map_tol {
        return Err(Error::NotSelfMap(format!("sup |phi| = {sup_phi} on the circle")));
    }
    let phi = BoundaryFunction::new(circle, phi_values)?;
    let delay = pullback_delay(&psi, psi_center, cfg)?;

    // The same data on the Cayley image of the axis grid.
    let axis = cfg.axis_grid();
    let f0 = laplace_axis(&pair.response0, &axis)?;
    let f1 = laplace_axis(&pair.response1, &axis)?;
    let floored = floored_nodes(f0.values(), cfg, "L A rho0")?;
    let phi_axis = if rank_one {
        vec![C64::new(0.0, 0.0); axis.len()]
    } else {
        divide_with_floor(f1.values(), f0.values(), &floored)
    };
    let mut xi = Vec::with_capacity(phi_axis.len());
    for p in &phi_axis {
        if (1.0 + p).norm() == 0.0 {
            return Err(Error::IllConditioned("phi = -1 at an axis node".into()));
        }
        xi.push((1.0 - p) / (1.0 + p));
    }
    let alpha: Vec<C64> = f0.values().iter().map(|v| v / std::f64::consts::SQRT_2).collect();

    let data = HalfPlaneData {
        alpha,
        xi,
        floored: floored.iter().filter(|&&b| b).count(),
        sup_phi: Some(sup_phi),
        rank_one,
        psi: Some(psi),
        phi: Some(phi),
        delay,
    };
    assemble(pair, data, [&f0, &f1], cfg)
}

/// Errors of an identified operator against a known ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationReport {
    /// `‖apply(identified, f) − apply(truth, f)‖ / ‖f‖` per test signal.
    pub signal_errors: Vec<f64>,
    pub max_signal_error: f64,
    /// `sup |Δα|` on the axis grid.
    pub alpha_sup_error: f64,
    /// `sup |Δξ| / (1 + |ξ|)` on the axis grid.
    pub xi_sup_error: f64,
    /// `sup |Δκ|` on the axis grid.
    pub kappa_sup_error: f64,
}

pub fn cross_validate(
    identified: &IdentifiedOperator,
    truth: &OperatorModel,
    test_signals: &[CausalSignal],
    cfg: &Config,
) -> Result<CrossValidationReport> {
    let w = identified.op.axis_grid(cfg)?.points();
    let xi_true = truth.xi_at(&w)?;
    let alpha_true = truth.alpha_at(&w)?;
    let kappa_true = truth.kappa_at(&w)?;
    let sup = |a: &[C64], b: &[C64], rel: bool| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm() / if rel { 1.0 + y.norm() } else { 1.0 })
            .fold(0.0, f64::max)
    };
    let mut signal_errors = Vec::with_capacity(test_signals.len());
    for f in test_signals {
        let a = apply(&identified.op, f, cfg)?;
        let b = apply(truth, f, cfg)?;
        signal_errors.push(a.relative_distance(&b, f)?);
    }
    Ok(CrossValidationReport {
        max_signal_error: signal_errors.iter().copied().fold(0.0, f64::max),
        signal_errors,
        alpha_sup_error: sup(identified.alpha(), &alpha_true, false),
        xi_sup_error: sup(identified.xi(), &xi_true, true),
        kappa_sup_error: sup(&identified.kappa(), &kappa_true, false),
    })
}
