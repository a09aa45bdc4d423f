use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use minphase::descriptor::FunctionDescriptor;
use minphase::experiment::{default_family, run_experiment, write_table, FamilySpec};
use minphase::factorization::{classify, factorize, factorize_with_center, PhaseTag};
use minphase::identification::{identify, Mode, ProbeResponsePair, ProbeSet};
use minphase::operator::{apply, apply_disk_route, synthesize, OperatorModel, Preservation};
use minphase::signal::CausalSignal;
use minphase::transforms::{h_transform, h_transform_at, BoundaryFunction};
use minphase::{Complex64, Config, Error};
use serde_json::json;

#[derive(Parser)]
#[command(name = "minphase", version, about = "Minimum-phase analysis and operator identification")]
struct Cli {
    /// JSON file overriding default grid sizes and tolerances.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbeArg {
    Sigma,
    Rho,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Translated,
    Plain,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a signal CSV as minimum phase, translated minimum phase or other.
    Classify { signal: PathBuf },
    /// Inner-outer factorization of a signal CSV or a circle boundary CSV.
    Factor {
        input: PathBuf,
        /// Write the outer factor's boundary samples here.
        #[arg(long)]
        outer: Option<PathBuf>,
        /// Write the inner factor's boundary samples here.
        #[arg(long)]
        inner: Option<PathBuf>,
    },
    /// Identify an operator from its responses to two probe signals.
    Identify {
        response0: PathBuf,
        response1: PathBuf,
        #[arg(long, value_enum, default_value = "sigma")]
        probe_set: ProbeArg,
        #[arg(long, value_enum, default_value = "translated")]
        mode: ModeArg,
        /// Write identification diagnostics JSON here (stderr if omitted).
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Apply an operator JSON to a signal CSV.
    Apply {
        operator: PathBuf,
        signal: PathBuf,
        /// Evaluate through the disk form instead of the half-plane form.
        #[arg(long)]
        disk_route: bool,
    },
    /// Build an operator from disk descriptors psi and phi (inline JSON or file).
    Synth {
        #[arg(long)]
        psi: String,
        #[arg(long)]
        phi: String,
    },
    /// Run the synthesize, probe, identify, cross-validate loop over a family.
    Experiment {
        /// Family spec JSON; the built-in nine-member family if omitted.
        family: Option<PathBuf>,
    },
}

/// Failure of a command, mapped to an exit code.
enum Failure {
    Input(String),
    Math(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::IncompatibleGrid(_)
            | Error::Quantization { .. }
            | Error::Domain(_)
            | Error::InvalidOperator(_) => Failure::Input(e.to_string()),
            _ => Failure::Math(e.to_string()),
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_signal(path: &Path) -> Result<CausalSignal, Failure> {
    CausalSignal::read_csv(read_text(path)?.as_bytes())
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| Failure::Input(e.to_string())),
    }
}

fn to_json(v: &impl serde::Serialize) -> Result<Vec<u8>, Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::Input(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn write_boundary(path: &Path, g: &BoundaryFunction) -> Result<(), Failure> {
    let mut buf = Vec::new();
    g.write_csv(&mut buf)?;
    write_output(Some(path), &buf)
}

fn descriptor_arg(arg: &str) -> Result<FunctionDescriptor, Failure> {
    let text = if arg.trim_start().starts_with('{') { arg.to_string() } else { read_text(Path::new(arg))? };
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("descriptor: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(p) => Config::from_json(&read_text(p)?)?,
        None => Config::default(),
    };
    let out = cli.out.as_deref();
    match cli.command {
        Command::Classify { signal } => {
            let f = read_signal(&signal)?;
            let class = classify(&f, &cfg)?;
            let name = match class.tag {
                PhaseTag::MinimumPhase => "minimum_phase",
                PhaseTag::TranslatedMinimumPhase { .. } => "translated_minimum_phase",
                PhaseTag::Other => "other",
            };
            let report = json!({
                "class": name,
                "tau": class.tau,
                "raw_delay": class.raw_delay,
                "pattern_deviation": class.pattern_deviation,
                "inner_modulus_deviation": class.inner_modulus_deviation,
                "residual": class.residual,
            });
            write_output(out, &to_json(&report)?)
        }
        Command::Factor { input, outer, inner } => {
            let text = read_text(&input)?;
            let fac = if text.lines().any(|l| l.starts_with("#domain=")) {
                factorize(&BoundaryFunction::read_csv(text.as_bytes())?, &cfg)?
            } else {
                let f = CausalSignal::read_csv(text.as_bytes())?;
                let g = h_transform(&f, &cfg.circle_grid())?;
                let center = h_transform_at(&f, &[Complex64::new(0.0, 0.0)])?[0];
                factorize_with_center(&g, center, &cfg)?
            };
            if let Some(p) = outer {
                write_boundary(&p, &fac.outer)?;
            }
            if let Some(p) = inner {
                write_boundary(&p, &fac.inner)?;
            }
            write_output(out, &to_json(&fac.summary())?)
        }
        Command::Identify { response0, response1, probe_set, mode, diagnostics } => {
            let set = match probe_set {
                ProbeArg::Sigma => ProbeSet::Sigma,
                ProbeArg::Rho => ProbeSet::Rho,
            };
            let mode = match mode {
                ModeArg::Translated => Mode::Translated,
                ModeArg::Plain => Mode::Plain,
            };
            let pair = ProbeResponsePair::new(set, read_signal(&response0)?, read_signal(&response1)?, mode)?;
            let id = identify(&pair, &cfg)?;
            write_output(out, &to_json(&id.op)?)?;
            let diag = to_json(&json!({
                "diagnostics": id.diagnostics,
                "validation": id.op.validation,
            }))?;
            match diagnostics {
                Some(p) => write_output(Some(&p), &diag)?,
                None => {
                    let _ = std::io::stderr().write_all(&diag);
                }
            }
            match id.op.validation.as_ref().map(|v| v.preservation) {
                Some(Preservation::Violated) => Err(Failure::Math("identified operator failed validation".into())),
                _ => Ok(()),
            }
        }
        Command::Apply { operator, signal, disk_route } => {
            let op = OperatorModel::from_json(&read_text(&operator)?)?;
            let f = read_signal(&signal)?;
            let g = if disk_route { apply_disk_route(&op, &f, &cfg)? } else { apply(&op, &f, &cfg)? };
            let mut buf = Vec::new();
            g.write_csv(&mut buf)?;
            write_output(out, &buf)
        }
        Command::Synth { psi, phi } => {
            let op = synthesize(descriptor_arg(&psi)?, descriptor_arg(&phi)?, &cfg)?;
            write_output(out, &to_json(&op)?)?;
            match op.validation.as_ref().map(|v| v.preservation) {
                Some(Preservation::Violated) => {
                    let msgs = op.validation.map(|v| v.messages.join("; ")).unwrap_or_default();
                    Err(Failure::Math(format!("operator failed validation: {msgs}")))
                }
                _ => Ok(()),
            }
        }
        Command::Experiment { family } => {
            let spec: FamilySpec = match family {
                Some(p) => serde_json::from_str(&read_text(&p)?).map_err(|e| Failure::Input(format!("family: {e}")))?,
                None => default_family(),
            };
            let rows = run_experiment(&spec, &cfg)?;
            let mut buf = Vec::new();
            write_table(&rows, &mut buf)?;
            write_output(out, &buf)?;
            if rows.iter().any(|r| r.failure.is_some()) {
                return Err(Failure::Math("some family members failed".into()));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Math(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
