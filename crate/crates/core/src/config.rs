//! Run configuration: grid sizes and numerical tolerances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::TimeGrid;
use crate::transforms::FrequencyGrid;

/// Grid parameters and tolerances shared by every pipeline stage.
///
/// Unknown keys are rejected when deserializing so that typos in a config
/// file surface as errors instead of silently falling back to defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Time step in seconds.
    pub dt: f64,
    /// Length of the time window in seconds.
    pub t_max: f64,
    /// Number of nodes on the unit circle (even).
    pub n_circle: usize,
    /// Half-width of the imaginary-axis grid.
    pub y_max: f64,
    /// Number of nodes on the imaginary-axis grid.
    pub n_freq: usize,
    /// Relative floor applied to |G| before taking logarithms.
    pub log_floor: f64,
    /// Sup-distance allowed between a numerical inner factor and its fitted pattern.
    pub inner_pattern_tol: f64,
    /// Delays below this value are treated as zero.
    pub delay_zero_tol: f64,
    /// Allowed overshoot of |phi| above 1.
    pub self_map_tol: f64,
    /// Absolute slack for Re xi(iy) >= 0.
    pub xi_abs_tol: f64,
    /// Relative slack (times |xi|) for Re xi(iy) >= 0.
    pub xi_rel_tol: f64,
    /// Relative floor for the denominator in xi = L(A s0) / L(A s1).
    pub division_floor: f64,
    /// Maximum fraction of floored denominator nodes before identification fails.
    pub max_floored_fraction: f64,
    /// Largest delay accepted from an operator identified in plain mode.
    pub plain_delay_tol: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            dt: 1.0 / 256.0,
            t_max: 40.0,
            n_circle: 4096,
            y_max: 512.0,
            n_freq: 16385,
            log_floor: 1e-12,
            inner_pattern_tol: 1e-3,
            delay_zero_tol: 1e-6,
            self_map_tol: 1e-6,
            xi_abs_tol: 1e-6,
            xi_rel_tol: 1e-4,
            division_floor: 1e-10,
            max_floored_fraction: 0.01,
            plain_delay_tol: 1e-3,
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("t_max", self.t_max),
            ("y_max", self.y_max),
            ("log_floor", self.log_floor),
            ("inner_pattern_tol", self.inner_pattern_tol),
            ("delay_zero_tol", self.delay_zero_tol),
            ("self_map_tol", self.self_map_tol),
            ("xi_abs_tol", self.xi_abs_tol),
            ("xi_rel_tol", self.xi_rel_tol),
            ("division_floor", self.division_floor),
            ("max_floored_fraction", self.max_floored_fraction),
            ("plain_delay_tol", self.plain_delay_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("config: {name} must be positive, got {v}")));
            }
        }
        if self.t_max < self.dt {
            return Err(Error::Domain("config: t_max must be at least dt".into()));
        }
        if self.n_circle < 16 || self.n_circle % 2 != 0 {
            return Err(Error::Domain("config: n_circle must be even and >= 16".into()));
        }
        if self.n_freq < 16 {
            return Err(Error::Domain("config: n_freq must be >= 16".into()));
        }
        if self.n_freq > (1 << 22) || self.n_circle > (1 << 22) {
            return Err(Error::Domain("config: grid sizes above 2^22 are not supported".into()));
        }
        Ok(())
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::with_t_max(self.dt, self.t_max)
    }

    pub fn axis_grid(&self) -> FrequencyGrid {
        FrequencyGrid::UniformAxis { y_max: self.y_max, n: self.n_freq }
    }

    pub fn circle_grid(&self) -> FrequencyGrid {
        FrequencyGrid::UniformCircle { n: self.n_circle }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        Config::default().validate().unwrap();
        let g = Config::default().time_grid().unwrap();
        assert_eq!(g.n_samples(), 10241);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::from_json(r#"{"dt": 0.01, "bogus": 1}"#).is_err());
        let cfg = Config::from_json(r#"{"dt": 0.0078125}"#).unwrap();
        assert_eq!(cfg.dt, 0.0078125);
        assert_eq!(cfg.n_circle, 4096);
    }

    #[test]
    fn nonpositive_tolerance_rejected() {
        assert!(Config::from_json(r#"{"log_floor": 0.0}"#).is_err());
        assert!(Config::from_json(r#"{"n_circle": 4097}"#).is_err());
    }
}
