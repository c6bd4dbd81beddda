use std::ffi::OsString;
use std::path::{Path, PathBuf};

use ambc::montecarlo::{Axis, Scheme, SimParams};
use ambc::receiver::EmConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::reproduce::{reproduce_sweeps, REPRODUCE_SLOTS};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One axis swept for a set of schemes around a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub schemes: Vec<Scheme>,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub base: SimParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub sweeps: Vec<SweepSpec>,
    /// Emit ANALYTIC_CUIF and ANALYTIC_MIX rows on every sweep grid.
    pub analytic: bool,
    pub out: PathBuf,
    pub format: Format,
    pub emit_plot_script: bool,
    pub workers: usize,
    pub timing: bool,
}

#[derive(Debug, Parser)]
#[command(
    name = "ambc",
    version,
    about = "BER sweeps for ambient backscatter over OFDM",
    args_conflicts_with_subcommands = true,
    allow_negative_numbers = true
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    sweep: SweepArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the reference experiments: SNR, iteration, alpha2, L and P sweeps.
    Reproduce {
        /// Slots per point.
        #[arg(long, default_value_t = REPRODUCE_SLOTS)]
        slots: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated schemes: CAMF, CUIF, ENERGY, GENIE_CAMF, GENIE_CUIF.
    #[arg(long, value_delimiter = ',', default_value = "CAMF,CUIF")]
    scheme: Vec<Scheme>,
    /// Swept parameter: snr_db, L, P, alpha2 or niter.
    #[arg(long, default_value = "snr_db")]
    axis: Axis,
    /// Comma-separated axis values; defaults depend on the axis.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    /// Subcarriers per OFDM symbol.
    #[arg(long = "L", default_value_t = 32)]
    l: usize,
    /// OFDM symbols (BD bits) per slot.
    #[arg(long = "M", default_value_t = 100)]
    m: usize,
    /// Channel taps.
    #[arg(long = "P", default_value_t = 4)]
    p: usize,
    /// Reflection power |beta|^2.
    #[arg(long, default_value_t = 0.2)]
    alpha2: f64,
    /// SNR when it is not the swept axis.
    #[arg(long = "snr-db", default_value_t = 6.0, allow_hyphen_values = true)]
    snr_db: f64,
    /// Maximum EM iterations.
    #[arg(long, default_value_t = 5)]
    niter: usize,
    /// EM stopping threshold on the squared update.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Slots per point.
    #[arg(long, default_value_t = 1000)]
    slots: u64,
    /// Skip the analytic overlay rows.
    #[arg(long)]
    no_analytic: bool,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Data file to write.
    #[arg(long, default_value = "ambc_ber.csv")]
    out: PathBuf,
    /// Output format; inferred from the extension of --out when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also write a matplotlib script next to the data file.
    #[arg(long)]
    emit_plot_script: bool,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Record wall time per point (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

/// Default grid for an axis.
pub fn default_values(axis: Axis) -> Vec<f64> {
    match axis {
        Axis::SnrDb => (0..=8).map(f64::from).collect(),
        Axis::NIter => vec![1.0, 2.0, 3.0, 5.0, 10.0, 20.0],
        Axis::AlphaSq => vec![0.05, 0.1, 0.2, 0.3, 0.4],
        Axis::Subcarriers => vec![16.0, 32.0, 64.0, 128.0],
        Axis::Taps => vec![1.0, 2.0, 4.0, 8.0],
    }
}

/// Flag that sets the parameter reported by core validation.
fn flag_for(name: &str) -> &'static str {
    match name {
        "L" => "--L",
        "M" => "--M",
        "P" => "--P",
        "alpha2" | "alpha_sq" => "--alpha2",
        "snr_db" => "--snr-db",
        "niter" | "n_iter_max" => "--niter",
        "epsilon" => "--epsilon",
        "slots" => "--slots",
        "workers" => "--workers",
        "values" => "--values",
        _ => "--scheme",
    }
}

fn invalid(flag: &str, reason: impl Into<String>) -> CliError {
    CliError::Invalid {
        flag: flag.to_string(),
        reason: reason.into(),
    }
}

fn core_error(e: ambc::Error) -> CliError {
    match e {
        ambc::Error::InvalidParam { name, reason } => invalid(flag_for(name), reason),
        other => CliError::Run(other.to_string()),
    }
}

fn infer_format(out: &Path, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(|| match out.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
        _ => Format::Csv,
    })
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Parses a full argument vector, program name first.
pub fn parse_args<I, T>(argv: I) -> Result<RunSpec, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Help(e.to_string())
        }
        _ => CliError::Usage(e.to_string().lines().next().unwrap_or("").trim().to_string()),
    })?;
    let spec = match cli.command {
        Some(Command::Reproduce { slots, output }) => RunSpec {
            sweeps: reproduce_sweeps(output.seed, slots),
            analytic: true,
            format: infer_format(&output.out, output.format),
            out: output.out,
            emit_plot_script: output.emit_plot_script,
            workers: output.workers.unwrap_or_else(default_workers),
            timing: output.timing,
        },
        None => {
            let a = cli.sweep;
            let o = cli.output;
            let base = SimParams {
                subcarriers: a.l,
                symbols_per_slot: a.m,
                taps: a.p,
                alpha_sq: a.alpha2,
                snr_db: a.snr_db,
                scheme: a.scheme.first().copied().unwrap_or(Scheme::Camf),
                em: EmConfig {
                    n_iter_max: a.niter,
                    epsilon: a.epsilon,
                    ..EmConfig::default()
                },
                slots: a.slots,
                seed: o.seed,
            };
            RunSpec {
                sweeps: vec![SweepSpec {
                    schemes: a.scheme,
                    axis: a.axis,
                    values: a.values.unwrap_or_else(|| default_values(a.axis)),
                    base,
                }],
                analytic: !a.no_analytic,
                format: infer_format(&o.out, o.format),
                out: o.out,
                emit_plot_script: o.emit_plot_script,
                workers: o.workers.unwrap_or_else(default_workers),
                timing: o.timing,
            }
        }
    };
    spec.validate()?;
    Ok(spec)
}

impl RunSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.sweeps.is_empty() {
            return Err(invalid("--axis", "no sweep requested"));
        }
        if self.workers == 0 {
            return Err(invalid("--workers", "must be at least 1"));
        }
        for sweep in &self.sweeps {
            if sweep.schemes.is_empty() {
                return Err(invalid("--scheme", "no scheme given"));
            }
            if sweep.values.is_empty() {
                return Err(invalid("--values", "no values given"));
            }
            for &scheme in &sweep.schemes {
                let base = SimParams {
                    scheme,
                    ..sweep.base.clone()
                };
                base.validate().map_err(core_error)?;
                for &v in &sweep.values {
                    base.with_axis(sweep.axis, v).map_err(|e| {
                        invalid("--values", format!("{} = {v}: {}", sweep.axis, e))
                    })?;
                }
            }
        }
        let dir = match self.out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        if !dir.is_dir() {
            return Err(invalid(
                "--out",
                format!("directory {} does not exist", dir.display()),
            ));
        }
        Ok(())
    }
}
