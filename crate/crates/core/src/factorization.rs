//! Inner-outer factorization on the unit circle, delay extraction and
//! minimum-phase classification.
//!
//! The outer factor is built from the Fourier coefficients `h_n` of
//! `log|G|` as `exp(h_0 + 2 Σ_{n≥1} h_n z^n)`, which fixes the unimodular
//! constant so that `outer(0) > 0`. Integer-order zeros of `|G|` at `z = ±1`
//! are divided out in closed form before the logarithm is sampled, since they
//! arise for every signal with zero mean or a continuous start and would
//! otherwise cost the mean-log integral most of its accuracy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::signal::CausalSignal;
use crate::transforms::{
    circle_coefficients, circle_synthesis, fourier_coeffs, h_transform, h_transform_at, BoundaryFunction,
    FourierCoefficients, FrequencyGrid,
};

type C64 = Complex64;

/// An inner-outer split `G = inner · outer` on a circle grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationResult {
    pub outer: BoundaryFunction,
    pub inner: BoundaryFunction,
    /// Delay `τ ≥ 0` of the singular inner factor `exp(τ(z−1)/(z+1))`.
    pub delay_tau: f64,
    /// `mean log|G| − log|G(0)|` before clamping at zero.
    pub raw_delay: f64,
    /// `sup |G − inner · outer|`.
    pub residual: f64,
    /// `sup ||inner| − 1|` over nodes that were not floored.
    pub inner_modulus_deviation: f64,
    /// Orders of the boundary zeros divided out at `z = 1` and `z = −1`.
    pub boundary_zero_orders: [u32; 2],
    pub floored_nodes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationSummary {
    pub tau: f64,
    pub raw_delay: f64,
    pub residual: f64,
    pub inner_modulus_deviation: f64,
    pub boundary_zero_orders: [u32; 2],
    pub floored_nodes: usize,
}

impl FactorizationResult {
    pub fn summary(&self) -> FactorizationSummary {
        FactorizationSummary {
            tau: self.delay_tau,
            raw_delay: self.raw_delay,
            residual: self.residual,
            inner_modulus_deviation: self.inner_modulus_deviation,
            boundary_zero_orders: self.boundary_zero_orders,
            floored_nodes: self.floored_nodes,
        }
    }
}

/// Outcome of a delay extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayEstimate {
    /// `max(raw, 0)`.
    pub tau: f64,
    pub raw: f64,
    /// Set when `raw` is negative beyond the zero tolerance, which no
    /// function of the form (singular inner) × (outer) can produce.
    pub negative: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum PhaseTag {
    MinimumPhase,
    TranslatedMinimumPhase { tau: f64 },
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseClass {
    pub tag: PhaseTag,
    /// Fitted delay (0 for minimum phase).
    pub tau: f64,
    /// `sup |inner / (λ S_τ) − 1|`.
    pub pattern_deviation: f64,
    pub inner_modulus_deviation: f64,
    pub residual: f64,
    pub raw_delay: f64,
}

struct LogModulus {
    /// `log|G|` with boundary zeros at `z = ±1` removed.
    smooth: Vec<f64>,
    orders: [u32; 2],
    floored: Vec<bool>,
}

fn uniform_circle_size(g: &BoundaryFunction) -> Result<usize> {
    match g.grid() {
        FrequencyGrid::UniformCircle { n } => Ok(*n),
        _ => Err(Error::IncompatibleGrid("factorization needs a uniform circle grid".into())),
    }
}

/// Estimated integer zero order from log-moduli at the nodes `±π/N` and
/// `±3π/N` around a point of the circle.
fn zero_order(near: [f64; 2], far: [f64; 2], floored: bool) -> u32 {
    if floored {
        return 0;
    }
    let n = near[0].min(near[1]);
    let f = far[0].min(far[1]);
    let slope = (f - n) / 3f64.ln();
    let k = slope.round();
    if k >= 1.0 && (slope - k).abs() < 0.1 {
        k as u32
    } else {
        0
    }
}

fn log_modulus(g: &BoundaryFunction, cfg: &Config) -> Result<LogModulus> {
    let n = uniform_circle_size(g)?;
    let mag: Vec<f64> = g.values().iter().map(|v| v.norm()).collect();
    let peak = mag.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::NotFactorizable("function vanishes on the whole grid".into()));
    }
    let floor = cfg.log_floor * peak;
    let floored: Vec<bool> = mag.iter().map(|&m| m < floor).collect();
    let count = floored.iter().filter(|&&b| b).count();
    if count as f64 > cfg.max_floored_fraction * n as f64 {
        return Err(Error::NotFactorizable(format!(
            "|G| is below the floor on {count} of {n} nodes; the function vanishes on a set of positive measure"
        )));
    }
    let mut ell: Vec<f64> = mag.iter().map(|&m| m.max(floor).ln()).collect();
    let h = n / 2;
    let at_one = zero_order(
        [ell[0], ell[n - 1]],
        [ell[1], ell[n - 2]],
        floored[0] || floored[1] || floored[n - 1] || floored[n - 2],
    );
    let at_minus_one = zero_order(
        [ell[h - 1], ell[h]],
        [ell[h - 2], ell[h + 1]],
        floored[h - 2] || floored[h - 1] || floored[h] || floored[h + 1],
    );
    let angles = g.grid().circle_angles().unwrap();
    for (l, t) in ell.iter_mut().zip(&angles) {
        // |1 − e^{iθ}| = 2|sin(θ/2)|, |1 + e^{iθ}| = 2|cos(θ/2)|.
        *l -= at_one as f64 * (2.0 * (t / 2.0).sin().abs()).ln();
        *l -= at_minus_one as f64 * (2.0 * (t / 2.0).cos().abs()).ln();
    }
    Ok(LogModulus { smooth: ell, orders: [at_one, at_minus_one], floored })
}

fn outer_from_log(g: &BoundaryFunction, lm: &LogModulus) -> Result<(BoundaryFunction, f64)> {
    let n = lm.smooth.len();
    let data: Vec<C64> = lm.smooth.iter().map(|&l| C64::new(l, 0.0)).collect();
    let c = circle_coefficients(&data);
    let mut analytic = vec![C64::new(0.0, 0.0); n];
    analytic[0] = C64::new(c[0].re, 0.0);
    for k in 1..n / 2 {
        analytic[k] = 2.0 * c[k];
    }
    analytic[n / 2] = c[n / 2];
    let logs = circle_synthesis(&analytic);
    let points = g.grid().points();
    let [k1, km1] = lm.orders;
    let values = logs
        .iter()
        .zip(&points)
        .map(|(l, z)| l.exp() * (1.0 - z).powi(k1 as i32) * (1.0 + z).powi(km1 as i32))
        .collect();
    Ok((BoundaryFunction::new(g.grid().clone(), values)?, c[0].re))
}

/// Outer factor with the same boundary modulus as `g`, normalised to
/// `outer(0) > 0`.
pub fn outer_factor(g: &BoundaryFunction, cfg: &Config) -> Result<BoundaryFunction> {
    let lm = log_modulus(g, cfg)?;
    outer_from_log(g, &lm).map(|r| r.0)
}

/// `(2π)^{-1} ∫ log|G| dθ` on a uniform circle grid, with the floor and
/// boundary-zero handling of [`outer_factor`].
pub fn mean_log_modulus(g: &BoundaryFunction, cfg: &Config) -> Result<f64> {
    let lm = log_modulus(g, cfg)?;
    Ok(lm.smooth.iter().sum::<f64>() / lm.smooth.len() as f64)
}

fn delay_from_mean(mean: f64, g0: C64, peak: f64, cfg: &Config) -> Result<DelayEstimate> {
    if !(g0.norm() > 1e-14 * peak) {
        return Err(Error::ZeroAtOrigin(format!(
            "|G(0)| = {:e} is zero relative to max|G| = {peak:e}; the function has a zero at the origin \
             (for example a Blaschke factor z), so no pure-delay factor can be extracted",
            g0.norm()
        )));
    }
    let raw = mean - g0.norm().ln();
    Ok(DelayEstimate { tau: raw.max(0.0), raw, negative: raw < -cfg.delay_zero_tol })
}

/// Delay of the singular inner factor, using `G(0) ≈ c_0`, the mean of the
/// boundary samples.
pub fn delay_of(g: &BoundaryFunction, cfg: &Config) -> Result<DelayEstimate> {
    let n = uniform_circle_size(g)?;
    let g0 = g.values().iter().sum::<C64>() / n as f64;
    delay_of_with_center(g, g0, cfg)
}

/// Delay of the singular inner factor with an externally supplied `G(0)`.
///
/// The sample mean converges slowly when a singular inner factor oscillates
/// near `z = −1`, so callers that can evaluate `G(0)` directly (by quadrature
/// of a time signal or from a closed form) should pass it here.
pub fn delay_of_with_center(g: &BoundaryFunction, g0: C64, cfg: &Config) -> Result<DelayEstimate> {
    let mean = mean_log_modulus(g, cfg)?;
    delay_from_mean(mean, g0, g.sup_norm(), cfg)
}

/// Inner-outer factorization with `G(0)` taken from the sample mean.
pub fn factorize(g: &BoundaryFunction, cfg: &Config) -> Result<FactorizationResult> {
    let n = uniform_circle_size(g)?;
    let g0 = g.values().iter().sum::<C64>() / n as f64;
    factorize_with_center(g, g0, cfg)
}

/// Inner-outer factorization with an externally supplied `G(0)`.
pub fn factorize_with_center(g: &BoundaryFunction, g0: C64, cfg: &Config) -> Result<FactorizationResult> {
    let lm = log_modulus(g, cfg)?;
    let (outer, mean) = outer_from_log(g, &lm)?;
    let inner_values: Vec<C64> = g.values().iter().zip(outer.values()).map(|(a, b)| a / b).collect();
    let residual = g
        .values()
        .iter()
        .zip(&inner_values)
        .zip(outer.values())
        .map(|((gv, i), o)| (gv - i * o).norm())
        .fold(0.0, f64::max);
    let inner_modulus_deviation = inner_values
        .iter()
        .zip(&lm.floored)
        .filter(|(_, &f)| !f)
        .map(|(i, _)| (i.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let (delay_tau, raw_delay) = match delay_from_mean(mean, g0, g.sup_norm(), cfg) {
        Ok(d) => (d.tau, d.raw),
        Err(Error::ZeroAtOrigin(_)) => (0.0, f64::INFINITY),
        Err(e) => return Err(e),
    };
    Ok(FactorizationResult {
        inner: BoundaryFunction::new(g.grid().clone(), inner_values)?,
        outer,
        delay_tau,
        raw_delay,
        residual,
        inner_modulus_deviation,
        boundary_zero_orders: lm.orders,
        floored_nodes: lm.floored.iter().filter(|&&b| b).count(),
    })
}

/// `sup_j |inner_j / (λ exp(−τ m(z_j))) − 1|` with the unimodular `λ` fixed by
/// the value of the inner factor at the origin.
pub(crate) fn singular_pattern_deviation(fac: &FactorizationResult, g0: C64, tau: f64, cfg: &Config) -> f64 {
    if !fac.raw_delay.is_finite() || g0.norm() == 0.0 {
        return f64::INFINITY;
    }
    let outer0 = (fac.raw_delay + g0.norm().ln()).exp();
    let lambda = g0 / outer0 * tau.exp();
    let lambda = lambda / lambda.norm();
    let peak = fac.outer.sup_norm();
    fac.inner
        .values()
        .iter()
        .zip(fac.outer.values())
        .zip(fac.inner.grid().half_plane_points())
        .filter(|((_, o), _)| o.norm() >= cfg.log_floor * peak)
        .map(|((i, _), s)| (i / (lambda * (-tau * s).exp()) - 1.0).norm())
        .fold(0.0, f64::max)
}

/// Classifies a signal as minimum phase, translated minimum phase, or other.
pub fn classify(f: &CausalSignal, cfg: &Config) -> Result<PhaseClass> {
    if f.is_zero() || f.norm() == 0.0 {
        return Err(Error::Domain("cannot classify the zero signal".into()));
    }
    let g = h_transform(f, &cfg.circle_grid())?;
    let g0 = h_transform_at(f, &[C64::new(0.0, 0.0)])?[0];
    classify_boundary(&g, g0, cfg)
}

/// Classification from boundary samples of `H f` and its value at the origin.
///
/// A zero at the origin rules out both minimum-phase classes; the result is
/// then `Other`, with infinite raw delay and pattern deviation.
pub fn classify_boundary(g: &BoundaryFunction, g0: C64, cfg: &Config) -> Result<PhaseClass> {
    let fac = factorize_with_center(g, g0, cfg)?;
    if !fac.raw_delay.is_finite() {
        return Ok(PhaseClass {
                tag: PhaseTag::Other,
                tau: 0.0,
                pattern_deviation: f64::INFINITY,
                inner_modulus_deviation: fac.inner_modulus_deviation,
                residual: fac.residual,
                raw_delay: f64::INFINITY,
            });
    }
    let tau = if fac.delay_tau < cfg.delay_zero_tol { 0.0 } else { fac.delay_tau };
    let pattern_deviation = singular_pattern_deviation(&fac, g0, tau, cfg);
    let tag = if pattern_deviation < cfg.inner_pattern_tol {
        if tau == 0.0 {
            PhaseTag::MinimumPhase
        } else {
            PhaseTag::TranslatedMinimumPhase { tau }
        }
    } else {
        PhaseTag::Other
    };
    Ok(PhaseClass {
        tag,
        tau,
        pattern_deviation,
        inner_modulus_deviation: fac.inner_modulus_deviation,
        residual: fac.residual,
        raw_delay: fac.raw_delay,
    })
}

/// Taylor coefficients `c_0..c_{N/2}` of the outer function whose boundary
/// modulus is `|mag|`.
pub fn min_phase_from_magnitude(mag: &BoundaryFunction, cfg: &Config) -> Result<FourierCoefficients> {
    let n = uniform_circle_size(mag)?;
    let modulus = BoundaryFunction::new(
        mag.grid().clone(),
        mag.values().iter().map(|v| C64::new(v.norm(), 0.0)).collect(),
    )?;
    let outer = outer_factor(&modulus, cfg)?;
    fourier_coeffs(&outer, n / 2)
}

/// Test inner functions with known Taylor coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerFactor {
    /// `z^k`.
    Monomial(usize),
    /// `(z − a)/(1 − ā z)` with `|a| < 1`.
    Blaschke(C64),
    /// `exp(τ(z − 1)/(z + 1))`.
    Singular(f64),
}

impl InnerFactor {
    pub fn eval(&self, z: C64) -> C64 {
        match *self {
            InnerFactor::Monomial(k) => z.powi(k as i32),
            InnerFactor::Blaschke(a) => (z - a) / (1.0 - a.conj() * z),
            InnerFactor::Singular(tau) => (tau * (z - 1.0) / (z + 1.0)).exp(),
        }
    }

    /// First `m` Taylor coefficients at the origin.
    pub fn taylor(&self, m: usize) -> Vec<C64> {
        let mut c = vec![C64::new(0.0, 0.0); m];
        match *self {
            InnerFactor::Monomial(k) => {
                if k < m {
                    c[k] = C64::new(1.0, 0.0);
                }
            }
            InnerFactor::Blaschke(a) => {
                // −a + (1 − |a|²) Σ_{n≥1} ā^{n−1} z^n
                if m > 0 {
                    c[0] = -a;
                }
                let mut p = C64::new(1.0 - a.norm_sqr(), 0.0);
                for slot in c.iter_mut().skip(1) {
                    *slot = p;
                    p *= a.conj();
                }
            }
            InnerFactor::Singular(tau) => {
                // (1 + z)² S' = 2τ S gives
                // (n+1) s_{n+1} = (2τ − 2n) s_n − (n − 1) s_{n−1}.
                if m > 0 {
                    c[0] = C64::new((-tau).exp(), 0.0);
                }
                if m > 1 {
                    c[1] = c[0] * 2.0 * tau;
                }
                for n in 1..m.saturating_sub(1) {
                    let nf = n as f64;
                    c[n + 1] = ((2.0 * tau - 2.0 * nf) * c[n] - (nf - 1.0) * c[n - 1]) / (nf + 1.0);
                }
            }
        }
        c
    }
}

/// Truncated Cauchy product of two coefficient sequences.
pub fn multiply_series(a: &[C64], b: &[C64], m: usize) -> Vec<C64> {
    (0..m)
        .map(|n| (0..=n).filter(|&k| k < a.len() && n - k < b.len()).map(|k| a[k] * b[n - k]).sum())
        .collect()
}

/// Cumulative energies `Σ_{n ≤ N} |c_n|²`.
pub fn partial_energies(c: &[C64]) -> Vec<f64> {
    c.iter()
        .scan(0.0, |acc, v| {
            *acc += v.norm_sqr();
            Some(*acc)
        })
        .collect()
}

/// `min_N (Σ_{n≤N}|a_n|² − Σ_{n≤N}|b_n|²)` where `b` are the coefficients of
/// `inner · Z a`. Nonnegative when `a` is front-loaded relative to `b`.
pub fn front_loading_slack(a: &FourierCoefficients, inner: &InnerFactor) -> f64 {
    let m = a.coeffs.len();
    let b = multiply_series(&inner.taylor(m), &a.coeffs, m);
    partial_energies(&a.coeffs)
        .iter()
        .zip(partial_energies(&b))
        .map(|(x, y)| x - y)
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize) -> FrequencyGrid {
        FrequencyGrid::UniformCircle { n }
    }

    #[test]
    fn outer_of_constant_is_constant() {
        let cfg = Config::default();
        let g = BoundaryFunction::from_fn(circle(64), |_| C64::new(1.0, 0.0)).unwrap();
        let o = outer_factor(&g, &cfg).unwrap();
        assert!(o.values().iter().all(|v| (v - 1.0).norm() < 1e-14));
    }

    #[test]
    fn outer_polynomial_is_reproduced() {
        let cfg = Config::default();
        let g = BoundaryFunction::from_fn(circle(1024), |z| 1.0 - z / 2.0).unwrap();
        let o = outer_factor(&g, &cfg).unwrap();
        assert!(o.sup_distance(&g).unwrap() < 1e-8);
    }

    #[test]
    fn boundary_zeros_are_divided_out() {
        let cfg = Config::default();
        // (1 + z)(1 − z)² (3 + z)/4: outer, zeros on the circle at ±1.
        let f = |z: C64| (1.0 + z) * (1.0 - z) * (1.0 - z) * (3.0 + z) / 4.0;
        let g = BoundaryFunction::from_fn(circle(512), f).unwrap();
        let fac = factorize_with_center(&g, f(C64::new(0.0, 0.0)), &cfg).unwrap();
        assert_eq!(fac.boundary_zero_orders, [2, 1]);
        assert!(fac.outer.sup_distance(&g).unwrap() < 1e-12);
        assert!(fac.raw_delay.abs() < 1e-13);
    }

    #[test]
    fn singular_factor_has_trivial_outer() {
        let cfg = Config::default();
        let tau = 1.0;
        let g = BoundaryFunction::from_fn(circle(4096), |z| (tau * (z - 1.0) / (z + 1.0)).exp()).unwrap();
        let o = outer_factor(&g, &cfg).unwrap();
        assert!(o.values().iter().all(|v| (v - 1.0).norm() < 1e-6));
        let d = delay_of_with_center(&g, C64::new((-tau).exp(), 0.0), &cfg).unwrap();
        assert!((d.tau - tau).abs() < 1e-12);
    }

    #[test]
    fn zero_at_origin_is_reported() {
        let cfg = Config::default();
        let g = BoundaryFunction::from_fn(circle(64), |z| z).unwrap();
        assert!(matches!(delay_of(&g, &cfg), Err(Error::ZeroAtOrigin(_))));
    }

    #[test]
    fn vanishing_function_is_not_factorizable() {
        let cfg = Config::default();
        let g = BoundaryFunction::from_fn(circle(64), |z| if z.re > 0.0 { z } else { C64::new(0.0, 0.0) }).unwrap();
        assert!(matches!(outer_factor(&g, &cfg), Err(Error::NotFactorizable(_))));
    }

    #[test]
    fn taylor_coefficients_sum_to_the_function() {
        let factors = [InnerFactor::Singular(0.7), InnerFactor::Blaschke(C64::new(0.3, 0.2)), InnerFactor::Monomial(3)];
        for f in factors {
            let c = f.taylor(400);
            for z in [C64::new(0.5, 0.0), C64::new(-0.3, 0.4), C64::new(0.0, -0.6)] {
                let sum = c.iter().rev().fold(C64::new(0.0, 0.0), |acc, cn| acc * z + cn);
                assert!((sum - f.eval(z)).norm() < 1e-12, "{f:?} at {z}");
            }
        }
    }
}
