//! Command-line front end: argument/config resolution, kernel dispatch and
//! result persistence.
//!
//! Every command executes exactly once per invocation, writes one output
//! table (CSV or a JSON envelope) and prints a short human-readable summary
//! to stdout. Exit codes: 0 success, 1 computation error, 2 usage or config
//! error. Flags win over the config file, which wins over defaults. All
//! production paths are deterministic; nothing here consumes randomness.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::asymptotics;
use crate::exactstate::{self, DrivenBranchParams, GridSpec, SystemParams};
use crate::liouville;
use crate::metrology;
use crate::scaling::{self, FitVariable, ObservableKind, SweepAxis, SweepOptions, SweepStatus};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "QVDP_OUTPUT_DIR";

const VERIFY_DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Compute(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// Argument grammar
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "qvdp",
    version,
    about = "Exact steady state, spectra and metrology of the quantum van der Pol oscillator"
)]
struct CliArgs {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Debug, Args, Default)]
struct CommonArgs {
    /// TOML config file; explicit flags override its values.
    #[arg(long, global = false)]
    config: Option<PathBuf>,
    /// One-photon pump rate.
    #[arg(long)]
    g: Option<f64>,
    /// One-photon emission rate (rate unit).
    #[arg(long)]
    kappa: Option<f64>,
    /// Two-photon emission rate.
    #[arg(long)]
    eta: Option<f64>,
    /// Cavity frequency (lab frame); 0 selects the rotating frame.
    #[arg(long)]
    omega0: Option<f64>,
    /// Output file path.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Debug, Subcommand)]
enum CommandArgs {
    /// Steady-state photon distribution and moments.
    Steady {
        #[command(flatten)]
        common: CommonArgs,
        /// Fock cutoff; automatic when omitted.
        #[arg(long)]
        trunc: Option<usize>,
        /// Highest factorial-moment order in the summary.
        #[arg(long)]
        max_order: Option<usize>,
    },
    /// Wigner function on a square phase-space grid.
    Wigner {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Leading Liouvillian eigenvalues per block, dissipative gap and decay rate.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        trunc: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// QFI, photon-number SNR and optimality gap at one parameter point.
    Metrology {
        #[command(flatten)]
        common: CommonArgs,
        /// Finite-difference step for d/dg, in units of kappa.
        #[arg(long)]
        fd_step: Option<f64>,
    },
    /// Sweep one axis and tabulate observables.
    Scan {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        axis: Option<ScanAxis>,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Comma-separated observables: na, eta_na, dna_dg, std_na, g2, qfi, snr, rdg, adr, T.
        #[arg(long, value_delimiter = ',')]
        observables: Vec<String>,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Power-law exponent fits for the scaling laws.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Which exponent: omega1, omega2, gap, adr, qfi-eta, qfi-na, fg-t.
        #[arg(long, value_enum)]
        exponent: Option<ExponentKind>,
        /// Eta grid for eta-driven fits (defaults scale with kappa).
        #[arg(long, value_delimiter = ',')]
        eta_grid: Vec<f64>,
        /// delta_g grid for the omega1 fit (defaults scale with kappa).
        #[arg(long, value_delimiter = ',')]
        delta_g_grid: Vec<f64>,
    },
    /// Eta-exponent matrix of dNa/dg, std(Na), S_g, Na (and T) in both regimes.
    Table1 {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',')]
        eta_grid: Vec<f64>,
        #[arg(long)]
        g_critical: Option<f64>,
        #[arg(long)]
        g_timecrystal: Option<f64>,
        /// Also fit the relaxation-time exponent (spectral, slower).
        #[arg(long)]
        with_relaxation: bool,
    },
    /// Cross-check the closed-form distribution against the Liouvillian oracle.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        trunc: Option<usize>,
        /// Maximum tolerated entrywise |p_closed - p_oracle|.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Driven g = 0 branch: normalized Wigner function on a grid.
    Driven {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        epsilon_re: Option<f64>,
        #[arg(long)]
        epsilon_im: Option<f64>,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanAxis {
    G,
    Eta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentKind {
    /// eta*Na vs delta_g at fixed eta (reference 1).
    Omega1,
    /// Na vs eta at g = kappa (reference -1/2).
    Omega2,
    /// Real dissipative gap vs eta (reference 1/2 at g = kappa).
    Gap,
    /// Asymptotic decay rate vs eta (reference 1/2 critical, 1 above).
    Adr,
    /// QFI vs eta (reference -1).
    QfiEta,
    /// QFI vs Na (reference 2 critical, 1 above).
    QfiNa,
    /// QFI vs relaxation time (reference 2 critical, 1 above).
    FgT,
}

// ---------------------------------------------------------------------------
// Config file schema (all keys optional; unknown keys rejected)
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    params: ConfigParams,
    #[serde(default)]
    output: ConfigOutput,
    #[serde(default)]
    steady: ConfigSteady,
    #[serde(default)]
    wigner: ConfigWigner,
    #[serde(default)]
    spectrum: ConfigSpectrum,
    #[serde(default)]
    metrology: ConfigMetrology,
    #[serde(default)]
    scan: ConfigScan,
    #[serde(default)]
    fit: ConfigFit,
    #[serde(default)]
    table1: ConfigTable1,
    #[serde(default)]
    verify: ConfigVerify,
    #[serde(default)]
    driven: ConfigDriven,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigParams {
    g: Option<f64>,
    kappa: Option<f64>,
    eta: Option<f64>,
    omega0: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigOutput {
    path: Option<PathBuf>,
    format: Option<OutputFormat>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigSteady {
    trunc: Option<usize>,
    max_order: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigWigner {
    half_width: Option<f64>,
    points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigSpectrum {
    trunc: Option<usize>,
    k_max: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigMetrology {
    fd_step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigScan {
    axis: Option<ScanAxis>,
    values: Option<Vec<f64>>,
    observables: Option<Vec<String>>,
    k_max: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFit {
    exponent: Option<ExponentKind>,
    eta_grid: Option<Vec<f64>>,
    delta_g_grid: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigTable1 {
    eta_grid: Option<Vec<f64>>,
    g_critical: Option<f64>,
    g_timecrystal: Option<f64>,
    with_relaxation: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigVerify {
    trunc: Option<usize>,
    tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDriven {
    delta: Option<f64>,
    epsilon_re: Option<f64>,
    epsilon_im: Option<f64>,
    half_width: Option<f64>,
    points: Option<usize>,
}

// ---------------------------------------------------------------------------
// Resolved run configuration
// ---------------------------------------------------------------------------

/// Fully resolved configuration; serializing this into the envelope makes a
/// run reproducible from its own output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandConfig,
    pub params: SystemParams,
    pub output_path: PathBuf,
    pub output_format: OutputFormat,
    /// Production paths consume no randomness.
    pub seedless: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum CommandConfig {
    Steady {
        trunc: Option<usize>,
        max_order: usize,
    },
    Wigner {
        half_width: Option<f64>,
        points: usize,
    },
    Spectrum {
        trunc: Option<usize>,
        k_max: usize,
    },
    Metrology {
        fd_step: f64,
    },
    Scan {
        axis: ScanAxis,
        values: Vec<f64>,
        observables: Vec<String>,
        k_max: usize,
    },
    Fit {
        exponent: ExponentKind,
        eta_grid: Vec<f64>,
        delta_g_grid: Vec<f64>,
    },
    Table1 {
        eta_grid: Vec<f64>,
        g_critical: f64,
        g_timecrystal: f64,
        with_relaxation: bool,
    },
    Verify {
        trunc: Option<usize>,
        tol: f64,
    },
    Driven {
        delta: f64,
        epsilon_re: f64,
        epsilon_im: f64,
        half_width: f64,
        points: usize,
    },
}

impl CommandConfig {
    fn name(&self) -> &'static str {
        match self {
            CommandConfig::Steady { .. } => "steady",
            CommandConfig::Wigner { .. } => "wigner",
            CommandConfig::Spectrum { .. } => "spectrum",
            CommandConfig::Metrology { .. } => "metrology",
            CommandConfig::Scan { .. } => "scan",
            CommandConfig::Fit { .. } => "fit",
            CommandConfig::Table1 { .. } => "table1",
            CommandConfig::Verify { .. } => "verify",
            CommandConfig::Driven { .. } => "driven",
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn resolve_params(
    common: &CommonArgs,
    file: &ConfigParams,
    default_g: Option<f64>,
    require_g: bool,
) -> Result<SystemParams, CliError> {
    let g = common
        .g
        .or(file.g)
        .or(default_g)
        .ok_or_else(|| CliError::Config("missing required parameter --g".into()))?;
    if require_g && !(g > 0.0) {
        return Err(CliError::Config(format!("--g must be positive, got {g}")));
    }
    let kappa = common.kappa.or(file.kappa).unwrap_or(1.0);
    let eta = common
        .eta
        .or(file.eta)
        .ok_or_else(|| CliError::Config("missing required parameter --eta".into()))?;
    let omega0 = common.omega0.or(file.omega0).unwrap_or(0.0);
    SystemParams::with_omega0(g, kappa, eta, omega0).map_err(|e| CliError::Config(e.to_string()))
}

fn resolve_output(
    common: &CommonArgs,
    file: &ConfigOutput,
    command_name: &str,
) -> (PathBuf, OutputFormat) {
    let format = common.format.or(file.format).unwrap_or(OutputFormat::Csv);
    let ext = match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    let path = common
        .output
        .clone()
        .or_else(|| file.path.clone())
        .unwrap_or_else(|| {
            let dir = std::env::var_os(OUTPUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("."));
            dir.join(format!("{command_name}.{ext}"))
        });
    (path, format)
}

/// Parses argv and merges flags over the config file over defaults.
///
/// `Ok(Err(code))` carries clap's own help/usage exits.
pub fn resolve(argv: &[String]) -> Result<Result<RunConfig, i32>, CliError> {
    let parsed = match CliArgs::try_parse_from(argv) {
        Ok(p) => p,
        Err(e) => {
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return Ok(Err(code));
        }
    };
    let config = build_config(parsed.command)?;
    Ok(Ok(config))
}

fn build_config(cmd: CommandArgs) -> Result<RunConfig, CliError> {
    let make = |common: &CommonArgs,
                command: CommandConfig,
                params: SystemParams,
                file: &ConfigFile|
     -> RunConfig {
        let (output_path, output_format) = resolve_output(common, &file.output, command.name());
        RunConfig {
            command,
            params,
            output_path,
            output_format,
            seedless: true,
        }
    };

    match cmd {
        CommandArgs::Steady {
            common,
            trunc,
            max_order,
        } => {
            let file = load_config(common.config.as_deref())?;
            let params = resolve_params(&common, &file.params, None, true)?;
            let command = CommandConfig::Steady {
                trunc: trunc.or(file.steady.trunc),
                max_order: max_order.or(file.steady.max_order).unwrap_or(2),
            };
            Ok(make(&common, command, params, &file))
        }
        CommandArgs::Wigner {
            common,
            half_width,
            points,
        } => {
            let file = load_config(common.config.as_deref())?;
            let params = resolve_params(&common, &file.params, None, true)?;
            let command = CommandConfig::Wigner {
                half_width: half_width.or(file.wigner.half_width),
                points: points.or(file.wigner.points).unwrap_or(201),
            };
            Ok(make(&common, command, params, &file))
        }
        CommandArgs::Spectrum {
            common,
            trunc,
            k_max,
        } => {
            let file = load_config(common.config.as_deref())?;
            let params = resolve_params(&common, &file.params, None, false)?;
            let command = CommandConfig::Spectrum {
                trunc: trunc.or(file.spectrum.trunc),
                k_max: k_max
                    .or(file.spectrum.k_max)
                    .unwrap_or(liouville::DEFAULT_K_MAX),
            };
            Ok(make(&common, command, params, &file))
        }
        CommandArgs::Metrology { common, fd_step } => {
            let file = load_config(common.config.as_deref())?;
            let params = resolve_params(&common, &file.params, None, true)?;
            let command = CommandConfig::Metrology {
                fd_step: fd_step
                    .or(file.metrology.fd_step)
                    .unwrap_or(metrology::DEFAULT_FD_STEP),
            };
            Ok(make(&common, command, params, &file))
        }
        CommandArgs::Scan {
            common,
            axis,
            values,
            observables,
            k_max,
        } => {
            let file = load_config(common.config.as_deref())?;
            let axis = axis
                .or(file.scan.axis)
                .ok_or_else(|| CliError::Config("scan requires --axis g|eta".into()))?;
            let values = if values.is_empty() {
                file.scan.values.clone().unwrap_or_default()
            } else {
                values
            };
            if values.is_empty() {
                return Err(CliError::Config("scan requires --values".into()));
            }
            let observables = if observables.is_empty() {
                file.scan.observables.clone().unwrap_or_default()
            } else {
                observables
            };
            if observables.is_empty() {
                return Err(CliError::Config("scan requires --observables".into()));
            }
            for name in &observables {
                name.parse::<ObservableKind>()
                    .map_err(|e| CliError::Config(e.to_string()))?;
            }
            // The swept axis takes its per-point values from --values; the
            // fixed params only need a placeholder on that axis.
            let g = common
                .g
                .or(file.params.g)
                .or(matches!(axis, ScanAxis::G).then_some(values[0]))
                .ok_or_else(|| CliError::Config("scan over eta requires --g".into()))?;
            let eta = common
                .eta
                .or(file.params.eta)
                .or(matches!(axis, ScanAxis::Eta).then_some(values[0]))
                .ok_or_else(|| CliError::Config("scan over g requires --eta".into()))?;
            let kappa = common.kappa.or(file.params.kappa).unwrap_or(1.0);
            let omega0 = common.omega0.or(file.params.omega0).unwrap_or(0.0);
            let params = SystemParams::with_omega0(g, kappa, eta, omega0)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let command = CommandConfig::Scan {
                axis,
                values,
                observables,
                k_max: k_max
                    .or(file.scan.k_max)
                    .unwrap_or(liouville::DEFAULT_K_MAX),
            };
            Ok(make(&common, command, params, &file))
        }
        CommandArgs::Fit {
            common,
            exponent,
            eta_grid,
            delta_g_grid,
        } => {
            let file = load_config(common.config.as_deref())?;
            let exponent = exponent
                .or(file.fit.exponent)
                .ok_or_else(|| CliError::Config("fit requires --exponent".into()))?;
            let kappa = common.kappa.or(file.params.kappa).unwrap_or(1.0);
            let eta_grid = if eta_grid.is_empty() {
                file.fit.eta_grid.clone().unwrap_or_else(|| {
                    default_eta_grid(exponent)
                        .into_iter()
                        .map(|e| e * kappa)
                        .collect()
                })
            } else {
                eta_grid
            };
            let delta_g_grid = if delta_g_grid.is_empty() {
                file.fit.delta_g_grid.clone().unwrap_or_else(|| {
                    scaling::OMEGA1_DELTA_GRID
                        .iter()
                        .map(|d| d * kappa)
                        .collect()
                })
            } else {
                delta_g_grid
            };
            // Regime-dependent fits default to the critical point; pass --g
            // to fit the time-crystal side.
            let g = common.g.or(file.params.g).unwrap_or(kappa);
            let default_eta = match exponent {
                ExponentKind::Omega1 => scaling::OMEGA1_ETA * kappa,
                _ => eta_grid[0],
            };
            let eta = common.eta.or(file.params.eta).unwrap_or(default_eta);
            let omega0 = common.omega0.or(file.params.omega0).unwrap_or(0.0);
            let params = SystemParams::with_omega0(g, kappa, eta, omega0)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let command = CommandConfig::Fit {
                exponent,
                eta_grid,
                delta_g_grid,
            };
            Ok(make(&common, command, params, &file))
        }
        CommandArgs::Table1 {
            common,
            eta_grid,
            g_critical,
            g_timecrystal,
            with_relaxation,
        } => {
            let file = load_config(common.config.as_deref())?;
            let kappa = common.kappa.or(file.params.kappa).unwrap_or(1.0);
            let eta_grid = if eta_grid.is_empty() {
                file.table1
                    .eta_grid
                    .clone()
                    .unwrap_or_else(|| scaling::QFI_ETA_GRID.iter().map(|e| e * kappa).collect())
            } else {
                eta_grid
            };
            let g_critical = g_critical.or(file.table1.g_critical).unwrap_or(kappa);
            let g_timecrystal = g_timecrystal
                .or(file.table1.g_timecrystal)
                .unwrap_or(2.0 * kappa);
            let params = SystemParams::new(g_critical, kappa, eta_grid[0])
                .map_err(|e| CliError::Config(e.to_string()))?;
            let command = CommandConfig::Table1 {
                eta_grid,
                g_critical,
                g_timecrystal,
                with_relaxation: with_relaxation || file.table1.with_relaxation.unwrap_or(false),
            };
            Ok(make(&common, command, params, &file))
        }
        CommandArgs::Verify { common, trunc, tol } => {
            let file = load_config(common.config.as_deref())?;
            let params = resolve_params(&common, &file.params, None, true)?;
            let command = CommandConfig::Verify {
                trunc: trunc.or(file.verify.trunc),
                tol: tol.or(file.verify.tol).unwrap_or(VERIFY_DEFAULT_TOLERANCE),
            };
            Ok(make(&common, command, params, &file))
        }
        CommandArgs::Driven {
            common,
            delta,
            epsilon_re,
            epsilon_im,
            half_width,
            points,
        } => {
            let file = load_config(common.config.as_deref())?;
            let kappa = common.kappa.or(file.params.kappa).unwrap_or(1.0);
            let eta = common
                .eta
                .or(file.params.eta)
                .ok_or_else(|| CliError::Config("missing required parameter --eta".into()))?;
            let omega0 = common.omega0.or(file.params.omega0).unwrap_or(0.0);
            // The driven branch exists only at g = 0.
            let params = SystemParams::with_omega0(0.0, kappa, eta, omega0)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let command = CommandConfig::Driven {
                delta: delta.or(file.driven.delta).unwrap_or(0.0),
                epsilon_re: epsilon_re.or(file.driven.epsilon_re).unwrap_or(0.0),
                epsilon_im: epsilon_im.or(file.driven.epsilon_im).unwrap_or(0.0),
                half_width: half_width.or(file.driven.half_width).unwrap_or(3.5),
                points: points.or(file.driven.points).unwrap_or(201),
            };
            Ok(make(&common, command, params, &file))
        }
    }
}

fn default_eta_grid(kind: ExponentKind) -> Vec<f64> {
    match kind {
        ExponentKind::Omega2 => scaling::OMEGA2_ETA_GRID.to_vec(),
        ExponentKind::Gap | ExponentKind::Adr | ExponentKind::FgT => scaling::GAP_ETA_GRID.to_vec(),
        ExponentKind::QfiEta | ExponentKind::QfiNa => scaling::QFI_ETA_GRID.to_vec(),
        ExponentKind::Omega1 => vec![scaling::OMEGA1_ETA],
    }
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// One table cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

/// Command output: a column-named table plus summary lines for stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct Payload {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, String)>,
    /// Nonzero turns into the process exit code (verify uses 1 on mismatch).
    pub exit_code: i32,
}

impl Payload {
    fn new(columns: &[&str]) -> Self {
        Payload {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
            exit_code: 0,
        }
    }

    fn push_summary(&mut self, key: &str, value: impl std::fmt::Display) {
        self.summary.push((key.to_string(), value.to_string()));
    }
}

/// Runs the configured command. Pure function of the config: re-running an
/// envelope's `config_echo` reproduces the payload bit for bit.
pub fn execute(config: &RunConfig) -> Result<Payload, CliError> {
    let compute = |e: &dyn std::fmt::Display| CliError::Compute(e.to_string());
    let params = &config.params;
    match &config.command {
        CommandConfig::Steady { trunc, max_order } => {
            let state = exactstate::photon_distribution(params, *trunc).map_err(|e| compute(&e))?;
            let report = exactstate::factorial_moments(params, (*max_order).max(2))
                .map_err(|e| compute(&e))?;
            let mut payload = Payload::new(&["n", "p_n"]);
            for (n, p) in state.probabilities().iter().enumerate() {
                payload
                    .rows
                    .push(vec![Cell::Int(n as i64), Cell::Float(*p)]);
            }
            payload.push_summary("truncation", state.truncation());
            payload.push_summary("Na", report.photon_number);
            payload.push_summary("std_Na", report.photon_std);
            payload.push_summary("g2", report.g2);
            for (m, v) in report.factorial_moments.iter().enumerate() {
                payload.push_summary(&format!("moment_{m}"), v);
            }
            Ok(payload)
        }
        CommandConfig::Wigner { half_width, points } => {
            let field = exactstate::wigner(
                params,
                &GridSpec {
                    half_width: *half_width,
                    points: *points,
                },
            )
            .map_err(|e| compute(&e))?;
            let mut payload = Payload::new(&["x", "y", "W"]);
            for (iy, y) in field.ys.iter().enumerate() {
                for (ix, x) in field.xs.iter().enumerate() {
                    payload.rows.push(vec![
                        Cell::Float(*x),
                        Cell::Float(*y),
                        Cell::Float(field.values[iy * field.xs.len() + ix]),
                    ]);
                }
            }
            payload.push_summary("grid_norm", field.grid_norm());
            if let Some(r) = field.mean_field_radius {
                payload.push_summary("mean_field_radius", r);
            }
            Ok(payload)
        }
        CommandConfig::Spectrum { trunc, k_max } => {
            let trunc = trunc.unwrap_or_else(|| liouville::default_spectral_trunc(params));
            let summary =
                liouville::asymptotic_decay_rate(params, trunc, *k_max).map_err(|e| compute(&e))?;
            let mut payload = Payload::new(&["k", "index", "re", "im"]);
            for (k, eigs) in &summary.leading_eigenvalues {
                for (i, l) in eigs.iter().enumerate() {
                    payload.rows.push(vec![
                        Cell::Int(*k as i64),
                        Cell::Int(i as i64),
                        Cell::Float(l.re),
                        Cell::Float(l.im),
                    ]);
                }
            }
            payload.push_summary("trunc", trunc);
            payload.push_summary("rdg", summary.rdg);
            payload.push_summary("adr", summary.adr);
            payload.push_summary("adr_block", summary.adr_block);
            payload.push_summary("relaxation_time", summary.relaxation_time);
            Ok(payload)
        }
        CommandConfig::Metrology { fd_step } => {
            let rep = metrology::metrology_report_with_step(params, fd_step * params.kappa())
                .map_err(|e| compute(&e))?;
            let gap = (rep.qfi - rep.snr_photon).abs() / rep.qfi;
            let mut payload = Payload::new(&[
                "g",
                "kappa",
                "eta",
                "qfi",
                "snr",
                "susceptibility",
                "std_na",
                "optimality_gap",
                "fd_step",
                "richardson_error",
                "discarded_mass",
            ]);
            payload.rows.push(vec![
                Cell::Float(params.g()),
                Cell::Float(params.kappa()),
                Cell::Float(params.eta()),
                Cell::Float(rep.qfi),
                Cell::Float(rep.snr_photon),
                Cell::Float(rep.susceptibility),
                Cell::Float(rep.photon_std),
                Cell::Float(gap),
                Cell::Float(rep.fd_step),
                Cell::Float(rep.richardson_error_estimate),
                Cell::Float(rep.discarded_probability_mass),
            ]);
            payload.push_summary("qfi", rep.qfi);
            payload.push_summary("snr", rep.snr_photon);
            payload.push_summary("optimality_gap", gap);
            Ok(payload)
        }
        CommandConfig::Scan {
            axis,
            values,
            observables,
            k_max,
        } => {
            let kinds: Vec<ObservableKind> = observables
                .iter()
                .map(|s| s.parse::<ObservableKind>())
                .collect::<Result<_, _>>()
                .map_err(|e| compute(&e))?;
            let sweep_axis = match axis {
                ScanAxis::G => SweepAxis::G,
                ScanAxis::Eta => SweepAxis::Eta,
            };
            let records = scaling::sweep(
                sweep_axis,
                values,
                params,
                &kinds,
                &SweepOptions {
                    k_max: *k_max,
                    spectral_trunc: None,
                },
            )
            .map_err(|e| compute(&e))?;
            let mut columns = vec!["g".to_string(), "kappa".to_string(), "eta".to_string()];
            columns.extend(kinds.iter().map(|k| k.name().to_string()));
            columns.push("status".to_string());
            let mut payload = Payload {
                columns,
                rows: Vec::new(),
                summary: Vec::new(),
                exit_code: 0,
            };
            let mut failures = 0usize;
            for rec in &records {
                let mut row = vec![
                    Cell::Float(rec.params.g()),
                    Cell::Float(rec.params.kappa()),
                    Cell::Float(rec.params.eta()),
                ];
                for k in &kinds {
                    match rec.observables.get(k) {
                        Some(v) => row.push(Cell::Float(*v)),
                        None => row.push(Cell::Text(String::new())),
                    }
                }
                row.push(match &rec.status {
                    SweepStatus::Ok => Cell::Text("ok".into()),
                    SweepStatus::Failed(msg) => {
                        failures += 1;
                        Cell::Text(format!("failed: {msg}"))
                    }
                });
                payload.rows.push(row);
            }
            payload.push_summary("points", records.len());
            payload.push_summary("failures", failures);
            Ok(payload)
        }
        CommandConfig::Fit {
            exponent,
            eta_grid,
            delta_g_grid,
        } => execute_fit(params, *exponent, eta_grid, delta_g_grid).map_err(|e| compute(&*e)),
        CommandConfig::Table1 {
            eta_grid,
            g_critical,
            g_timecrystal,
            with_relaxation,
        } => {
            let report = scaling::table1_report(
                eta_grid,
                params.kappa(),
                *g_critical,
                *g_timecrystal,
                *with_relaxation,
            )
            .map_err(|e| compute(&e))?;
            let mut payload = Payload::new(&[
                "regime",
                "g",
                "observable",
                "exponent",
                "std_error",
                "r_squared",
                "reference",
                "within_tolerance",
            ]);
            for row in &report.rows {
                for (obs, fit) in &row.fits {
                    payload.rows.push(vec![
                        Cell::Text(row.regime.to_string()),
                        Cell::Float(row.g),
                        Cell::Text(obs.name().to_string()),
                        Cell::Float(fit.exponent),
                        Cell::Float(fit.std_error),
                        Cell::Float(fit.r_squared),
                        Cell::Float(fit.reference_exponent.unwrap_or(f64::NAN)),
                        Cell::Bool(fit.within_tolerance.unwrap_or(false)),
                    ]);
                    payload.push_summary(
                        &format!("{}/{}", row.regime, obs.name()),
                        format!(
                            "{:+.4} (ref {:+.2}, {})",
                            fit.exponent,
                            fit.reference_exponent.unwrap_or(f64::NAN),
                            if fit.within_tolerance.unwrap_or(false) {
                                "ok"
                            } else {
                                "off"
                            }
                        ),
                    );
                }
            }
            Ok(payload)
        }
        CommandConfig::Verify { trunc, tol } => {
            let closed =
                exactstate::photon_distribution(params, *trunc).map_err(|e| compute(&e))?;
            let oracle = liouville::steady_state_oracle(params, closed.truncation())
                .map_err(|e| compute(&e))?;
            let mut payload = Payload::new(&["n", "p_closed", "p_oracle", "abs_diff"]);
            let mut max_diff = 0.0f64;
            for (n, (a, b)) in closed
                .probabilities()
                .iter()
                .zip(oracle.probabilities())
                .enumerate()
            {
                let d = (a - b).abs();
                max_diff = max_diff.max(d);
                payload.rows.push(vec![
                    Cell::Int(n as i64),
                    Cell::Float(*a),
                    Cell::Float(*b),
                    Cell::Float(d),
                ]);
            }
            let pass = max_diff < *tol;
            payload.push_summary("max_abs_diff", max_diff);
            payload.push_summary("tolerance", tol);
            payload.push_summary("verdict", if pass { "PASS" } else { "FAIL" });
            payload.exit_code = if pass { 0 } else { 1 };
            Ok(payload)
        }
        CommandConfig::Driven {
            delta,
            epsilon_re,
            epsilon_im,
            half_width,
            points,
        } => {
            let driven = DrivenBranchParams::new(*delta, Complex64::new(*epsilon_re, *epsilon_im))
                .map_err(|e| compute(&e))?;
            let n = *points;
            if n < 2 {
                return Err(CliError::Compute("driven grid needs >= 2 points".into()));
            }
            let step = 2.0 * half_width / (n - 1) as f64;
            let center = (n - 1) as f64 / 2.0;
            let axis: Vec<f64> = (0..n).map(|i| (i as f64 - center) * step).collect();
            let mut payload = Payload::new(&["x", "y", "W"]);
            let mut total = 0.0;
            for &y in &axis {
                for &x in &axis {
                    let w = exactstate::driven_branch_wigner(params, &driven, Complex64::new(x, y))
                        .map_err(|e| compute(&e))?;
                    total += w;
                    payload
                        .rows
                        .push(vec![Cell::Float(x), Cell::Float(y), Cell::Float(w)]);
                }
            }
            let w0 = exactstate::driven_branch_wigner(params, &driven, Complex64::ZERO)
                .map_err(|e| compute(&e))?;
            payload.push_summary("W(0)", w0);
            payload.push_summary("grid_norm", total * step * step);
            Ok(payload)
        }
    }
}

fn execute_fit(
    params: &SystemParams,
    kind: ExponentKind,
    eta_grid: &[f64],
    delta_g_grid: &[f64],
) -> Result<Payload, Box<dyn std::error::Error>> {
    use ExponentKind::*;
    let critical = asymptotics::Regime::classify(params).kind == asymptotics::RegimeKind::Critical;
    let (records, x_var, y_var, reference, tolerance): (
        Vec<scaling::SweepRecord>,
        FitVariable,
        ObservableKind,
        Option<f64>,
        f64,
    ) = match kind {
        Omega1 => {
            let gs: Vec<f64> = delta_g_grid.iter().map(|d| params.kappa() + d).collect();
            let recs = scaling::sweep(
                SweepAxis::G,
                &gs,
                params,
                &[ObservableKind::EtaNa],
                &SweepOptions::default(),
            )?;
            (
                recs,
                FitVariable::DeltaG,
                ObservableKind::EtaNa,
                Some(1.0),
                0.05,
            )
        }
        Omega2 => {
            let at_critical = params.with_g(params.kappa())?;
            let recs = scaling::sweep(
                SweepAxis::Eta,
                eta_grid,
                &at_critical,
                &[ObservableKind::Na],
                &SweepOptions::default(),
            )?;
            (recs, FitVariable::Eta, ObservableKind::Na, Some(-0.5), 0.03)
        }
        Gap => {
            let recs = scaling::sweep(
                SweepAxis::Eta,
                eta_grid,
                params,
                &[ObservableKind::Rdg],
                &SweepOptions::default(),
            )?;
            let reference = critical.then_some(0.5);
            (recs, FitVariable::Eta, ObservableKind::Rdg, reference, 0.05)
        }
        Adr => {
            let recs = scaling::sweep(
                SweepAxis::Eta,
                eta_grid,
                params,
                &[ObservableKind::Adr],
                &SweepOptions::default(),
            )?;
            let reference = Some(if critical { 0.5 } else { 1.0 });
            (recs, FitVariable::Eta, ObservableKind::Adr, reference, 0.05)
        }
        QfiEta => {
            let recs = scaling::sweep(
                SweepAxis::Eta,
                eta_grid,
                params,
                &[ObservableKind::Qfi],
                &SweepOptions::default(),
            )?;
            (
                recs,
                FitVariable::Eta,
                ObservableKind::Qfi,
                Some(-1.0),
                0.05,
            )
        }
        QfiNa => {
            let recs = scaling::sweep(
                SweepAxis::Eta,
                eta_grid,
                params,
                &[ObservableKind::Qfi, ObservableKind::Na],
                &SweepOptions::default(),
            )?;
            let reference = Some(if critical { 2.0 } else { 1.0 });
            (recs, FitVariable::Na, ObservableKind::Qfi, reference, 0.1)
        }
        FgT => {
            let recs = scaling::sweep(
                SweepAxis::Eta,
                eta_grid,
                params,
                &[ObservableKind::Qfi, ObservableKind::RelaxationTime],
                &SweepOptions::default(),
            )?;
            let reference = Some(if critical { 2.0 } else { 1.0 });
            (
                recs,
                FitVariable::RelaxationTime,
                ObservableKind::Qfi,
                reference,
                0.15,
            )
        }
    };
    let mut fit = scaling::fit_exponent(&records, x_var, y_var)?;
    if let Some(r) = reference {
        fit = fit.against_reference(r, tolerance);
    }

    let mut payload = Payload::new(&[
        "x",
        "y",
        "fit_exponent",
        "fit_intercept",
        "fit_r_squared",
        "fit_std_error",
        "reference_exponent",
        "within_tolerance",
    ]);
    for rec in &records {
        if rec.status != SweepStatus::Ok {
            continue;
        }
        let x = match x_var {
            FitVariable::Eta => rec.params.eta(),
            FitVariable::DeltaG => rec.params.delta_g(),
            FitVariable::Na => rec.observables[&ObservableKind::Na],
            FitVariable::RelaxationTime => rec.observables[&ObservableKind::RelaxationTime],
        };
        let y = rec.observables[&y_var];
        payload.rows.push(vec![
            Cell::Float(x),
            Cell::Float(y),
            Cell::Float(fit.exponent),
            Cell::Float(fit.intercept),
            Cell::Float(fit.r_squared),
            Cell::Float(fit.std_error),
            Cell::Float(fit.reference_exponent.unwrap_or(f64::NAN)),
            Cell::Bool(fit.within_tolerance.unwrap_or(false)),
        ]);
    }
    payload.push_summary("exponent", fit.exponent);
    payload.push_summary("std_error", fit.std_error);
    payload.push_summary("r_squared", fit.r_squared);
    if let Some(r) = fit.reference_exponent {
        payload.push_summary("reference", r);
        payload.push_summary("within_tolerance", fit.within_tolerance.unwrap_or(false));
    }
    Ok(payload)
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

/// Wall-clock phase timings, milliseconds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timings {
    pub config_ms: f64,
    pub compute_ms: f64,
    pub emit_ms: f64,
}

/// Everything a run produced, as serialized in JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct ResultEnvelope<'a> {
    pub config: &'a RunConfig,
    pub version: &'a str,
    pub timings: &'a Timings,
    pub rows: Vec<BTreeMap<&'a str, &'a Cell>>,
}

fn format_cell_csv(cell: &Cell) -> String {
    match cell {
        Cell::Int(v) => v.to_string(),
        // 17 significant digits round-trip any f64.
        Cell::Float(v) => format!("{v:.16e}"),
        Cell::Text(s) => s.replace(',', ";"),
        Cell::Bool(b) => b.to_string(),
    }
}

/// Writes the payload to `config.output_path` in the configured format.
pub fn emit(config: &RunConfig, payload: &Payload, timings: &Timings) -> Result<(), CliError> {
    let path = &config.output_path;
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
        }
    }
    let io_err = |source| CliError::Io {
        path: path.clone(),
        source,
    };
    match config.output_format {
        OutputFormat::Csv => {
            let mut text = String::new();
            let _ = writeln!(text, "{}", payload.columns.join(","));
            for row in &payload.rows {
                let line: Vec<String> = row.iter().map(format_cell_csv).collect();
                let _ = writeln!(text, "{}", line.join(","));
            }
            fs::write(path, text).map_err(io_err)?;
        }
        OutputFormat::Json => {
            let rows: Vec<BTreeMap<&str, &Cell>> = payload
                .rows
                .iter()
                .map(|row| {
                    payload
                        .columns
                        .iter()
                        .map(|c| c.as_str())
                        .zip(row.iter())
                        .collect()
                })
                .collect();
            let envelope = ResultEnvelope {
                config,
                version: env!("CARGO_PKG_VERSION"),
                timings,
                rows,
            };
            let file = fs::File::create(path).map_err(io_err)?;
            let mut w = std::io::BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, &envelope)
                .map_err(|e| CliError::Compute(format!("json serialization: {e}")))?;
            w.flush().map_err(io_err)?;
        }
    }
    Ok(())
}

/// Full CLI entry point; returns the process exit code.
pub fn run(argv: &[String]) -> i32 {
    let t0 = Instant::now();
    let config = match resolve(argv) {
        Ok(Ok(config)) => config,
        Ok(Err(code)) => return code,
        Err(e) => {
            eprintln!("qvdp: {e}");
            return 2;
        }
    };
    let config_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let payload = match execute(&config) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("qvdp: {e}");
            return 1;
        }
    };
    let compute_ms = t1.elapsed().as_secs_f64() * 1e3;

    // The envelope must carry its own emit time, so the serialization cost
    // is measured on a dry render first and the write happens after.
    let t2 = Instant::now();
    let rendered_bytes: usize = payload
        .rows
        .iter()
        .flat_map(|row| row.iter().map(|c| format_cell_csv(c).len()))
        .sum();
    std::hint::black_box(rendered_bytes);
    let timings = Timings {
        config_ms,
        compute_ms,
        emit_ms: t2.elapsed().as_secs_f64() * 1e3,
    };
    if let Err(e) = emit(&config, &payload, &timings) {
        eprintln!("qvdp: {e}");
        return 1;
    }

    println!(
        "qvdp {} ({} rows -> {})",
        config.command.name(),
        payload.rows.len(),
        config.output_path.display()
    );
    for (k, v) in &payload.summary {
        println!("  {k} = {v}");
    }
    payload.exit_code
}
