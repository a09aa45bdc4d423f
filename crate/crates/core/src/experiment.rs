//! Synthetic round-trip experiments: synthesize each operator of a family,
//! record its probe responses, identify it back and cross-validate.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::descriptor::FunctionDescriptor;
use crate::error::{Error, Result};
use crate::identification::{cross_validate, identify, Mode, ProbeResponsePair, ProbeSet};
use crate::operator::synthesize;
use crate::signal::{csv_io, probes, CausalSignal, TimeGrid};

type C64 = Complex64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub name: String,
    pub psi: FunctionDescriptor,
    pub phi: FunctionDescriptor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default)]
    pub operators: Vec<FamilyMember>,
    /// Names accepted by [`builtin_signal`].
    #[serde(default = "default_signals")]
    pub test_signals: Vec<String>,
    #[serde(default = "default_probe_sets")]
    pub probe_sets: Vec<ProbeSet>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
}

fn default_signals() -> Vec<String> {
    ["exp2", "t_exp", "exp_sin"].iter().map(|s| s.to_string()).collect()
}

fn default_probe_sets() -> Vec<ProbeSet> {
    vec![ProbeSet::Sigma]
}

fn default_mode() -> Mode {
    Mode::Translated
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// The three `ψ` and three `φ` used throughout the test suite, as named pairs.
pub fn default_family() -> FamilySpec {
    let psis = [
        ("psi_one", FunctionDescriptor::constant(c(1.0))),
        ("psi_outer", FunctionDescriptor::polynomial(vec![c(1.0), c(-0.5)])),
        (
            "psi_delay",
            FunctionDescriptor::Product(vec![
                FunctionDescriptor::SingularInner { tau: 0.5 },
                FunctionDescriptor::polynomial(vec![c(1.0), c(-1.0 / 3.0)]),
            ]),
        ),
    ];
    let phis = [
        ("phi_id", FunctionDescriptor::identity()),
        ("phi_half", FunctionDescriptor::polynomial(vec![c(0.0), c(0.5)])),
        ("phi_mobius", FunctionDescriptor::Mobius { a: c(1.0), b: c(1.0 / 3.0), c: c(1.0 / 3.0), d: c(1.0) }),
    ];
    let mut operators = Vec::new();
    for (pn, psi) in &psis {
        for (fname, phi) in &phis {
            operators.push(FamilyMember { name: format!("{pn}.{fname}"), psi: psi.clone(), phi: phi.clone() });
        }
    }
    FamilySpec { operators, test_signals: default_signals(), probe_sets: default_probe_sets(), mode: default_mode() }
}

/// Named test signals: `exp2 = e^{−2t}`, `t_exp = t e^{−t}`,
/// `exp_sin = i e^{−t} sin t`, `t2_exp = t² e^{−t}`, and the four probes.
pub fn builtin_signal(name: &str, grid: TimeGrid) -> Result<CausalSignal> {
    Ok(match name {
        "exp2" => CausalSignal::from_real_fn(grid, |t| (-2.0 * t).exp()),
        "t_exp" => CausalSignal::from_real_fn(grid, |t| t * (-t).exp()),
        "exp_sin" => CausalSignal::from_fn(grid, |t| C64::new(0.0, (-t).exp() * t.sin())),
        "t2_exp" => CausalSignal::from_real_fn(grid, |t| t * t * (-t).exp()),
        "sigma0" => probes::sigma0(grid),
        "sigma1" => probes::sigma1(grid),
        "rho0" => probes::rho0(grid),
        "rho1" => probes::rho1(grid),
        _ => return Err(Error::Domain(format!("unknown test signal {name:?}"))),
    })
}

/// One line of the experiment table. Failed members carry `failure` and
/// leave the numeric columns empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub operator: String,
    pub probe_set: ProbeSet,
    pub signal: String,
    pub rel_error: Option<f64>,
    pub xi_error: Option<f64>,
    pub kappa_error: Option<f64>,
    pub epsilon: Option<f64>,
    pub failure: Option<String>,
}

pub fn run_experiment(spec: &FamilySpec, cfg: &Config) -> Result<Vec<ExperimentRow>> {
    let grid = cfg.time_grid()?;
    let signals = spec
        .test_signals
        .iter()
        .map(|n| builtin_signal(n, grid))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for member in &spec.operators {
        for &set in &spec.probe_sets {
            let outcome = (|| {
                let truth = synthesize(member.psi.clone(), member.phi.clone(), cfg)?;
                let pair = ProbeResponsePair::from_operator(&truth, set, spec.mode, cfg)?;
                let id = identify(&pair, cfg)?;
                let report = cross_validate(&id, &truth, &signals, cfg)?;
                Ok::<_, Error>((id.epsilon, report))
            })();
            match outcome {
                Ok((epsilon, report)) => {
                    for (name, err) in spec.test_signals.iter().zip(&report.signal_errors) {
                        rows.push(ExperimentRow {
                            operator: member.name.clone(),
                            probe_set: set,
                            signal: name.clone(),
                            rel_error: Some(*err),
                            xi_error: Some(report.xi_sup_error),
                            kappa_error: Some(report.kappa_sup_error),
                            epsilon: Some(epsilon),
                            failure: None,
                        });
                    }
                }
                Err(e) => rows.push(ExperimentRow {
                    operator: member.name.clone(),
                    probe_set: set,
                    signal: String::new(),
                    rel_error: None,
                    xi_error: None,
                    kappa_error: None,
                    epsilon: None,
                    failure: Some(e.to_string()),
                }),
            }
        }
    }
    Ok(rows)
}

pub fn write_table<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["operator", "probe_set", "signal", "rel_error", "xi_error", "kappa_error", "epsilon", "failure"])
        .map_err(csv_io)?;
    for r in rows {
        w.serialize(r).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}
