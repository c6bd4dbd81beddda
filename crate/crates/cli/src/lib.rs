//! Command-line front end: parses a run, executes the sweeps on the
//! simulator and writes CSV or JSON results.

use std::path::PathBuf;

use ambc::montecarlo::{analytic_curve, Analytic, BerCurve, Harness, SimParams};

pub mod args;
pub mod output;
pub mod reproduce;

pub use args::{parse_args, Format, RunSpec, SweepSpec};
pub use output::{write_results, Row, SCHEMA};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// `--help` or `--version` text; not a failure.
    #[error("{0}")]
    Help(String),
    #[error("{0}")]
    Usage(String),
    #[error("error: {flag}: {reason}")]
    Invalid { flag: String, reason: String },
    #[error("error: {0}")]
    Run(String),
    #[error("error: cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Help(_) => 0,
            CliError::Usage(_) | CliError::Invalid { .. } => 2,
            CliError::Run(_) | CliError::Io { .. } => 1,
        }
    }
}

/// Runs every sweep; simulated curves first, then the analytic overlays.
pub fn execute(spec: &RunSpec, mut progress: impl FnMut(&str)) -> Result<Vec<BerCurve>, CliError> {
    let harness = Harness::new(spec.workers)
        .map_err(|e| CliError::Run(e.to_string()))?
        .with_timing(spec.timing);
    let mut curves = Vec::new();
    for sweep in &spec.sweeps {
        for &scheme in &sweep.schemes {
            let params = SimParams {
                scheme,
                ..sweep.base.clone()
            };
            progress(&format!(
                "{} over {} ({} points, {} slots each)",
                scheme.name(),
                sweep.axis,
                sweep.values.len(),
                params.slots
            ));
            let curve = harness.sweep(&params, sweep.axis, &sweep.values).map_err(|e| {
                CliError::Run(format!("{} sweep over {}: {e}", scheme.name(), sweep.axis))
            })?;
            curves.push(curve);
        }
        if spec.analytic {
            for kind in [Analytic::CuifClosed, Analytic::Mixture] {
                let curve = analytic_curve(kind, &sweep.base, sweep.axis, &sweep.values)
                    .map_err(|e| CliError::Run(format!("{} over {}: {e}", kind.name(), sweep.axis)))?;
                curves.push(curve);
            }
        }
    }
    Ok(curves)
}

/// Parse, execute and write; returns the files written.
pub fn run<I, T>(argv: I, progress: impl FnMut(&str)) -> Result<Vec<PathBuf>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let spec = parse_args(argv)?;
    let curves = execute(&spec, progress)?;
    write_results(&curves, &spec)
}
