//! `sld` command-line front end.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use sld_core::io::{emit_outputs, load_job, read_text, result_document, run_job, OutputSelection, VerdictDoc};
use sld_core::stability::OperatingPoint;
use sld_core::tool_model::{modal_table_json, tool_modes, FemConfig, ToolFile, DEFAULT_DAMPING};
use sld_core::uncertainty::classify_probabilistic;
use sld_core::{units, ErrorKind, SldError};
use sld_service::{ServiceConfig, DEFAULT_CACHE_SIZE, DEFAULT_PORT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] SldError),
    #[error(transparent)]
    Service(#[from] sld_service::ServiceError),
    #[error("cannot write to stdout: {0}")]
    Stdout(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation | ErrorKind::NotFound | ErrorKind::OutOfRange => EXIT_VALIDATION,
                ErrorKind::Numeric => EXIT_NUMERIC,
                ErrorKind::Io => EXIT_IO,
            },
            CliError::Service(sld_service::ServiceError::Config(_)) => EXIT_VALIDATION,
            CliError::Service(sld_service::ServiceError::Core(e)) => CliError::exit_code_of(e),
            CliError::Service(sld_service::ServiceError::Io(_)) | CliError::Stdout(_) => EXIT_IO,
        }
    }

    fn exit_code_of(e: &SldError) -> i32 {
        match e.kind() {
            ErrorKind::Numeric => EXIT_NUMERIC,
            ErrorKind::Io => EXIT_IO,
            _ => EXIT_VALIDATION,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sld", version, about = "Milling stability lobe diagrams with uncertainty bands")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a job file and write the JSON, CSV and SVG artefacts.
    Compute {
        job: PathBuf,
        /// Write `<name>.json`, `<name>.csv` and `<name>.svg` here instead of
        /// the paths listed in the job.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Classify one operating point against the job's uncertainty band.
    Classify {
        job: PathBuf,
        /// Spindle speed, rpm.
        #[arg(long = "n")]
        n_rpm: f64,
        /// Axial depth of cut, mm.
        #[arg(long = "ap")]
        ap_mm: f64,
    },
    /// Print the FEM modal table of a tool description.
    ToolModes {
        toolfile: PathBuf,
        #[arg(long, default_value_t = 8)]
        elements_per_segment: usize,
        #[arg(long, default_value_t = 3)]
        n_modes: usize,
        #[arg(long, default_value_t = DEFAULT_DAMPING)]
        damping_ratio: f64,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, env = "SLD_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        /// Coefficient database; the built-in one is used when unset.
        #[arg(long, env = "SLD_COEFFICIENT_DB")]
        db: Option<PathBuf>,
        #[arg(long, env = "SLD_CACHE_SIZE", default_value_t = DEFAULT_CACHE_SIZE)]
        cache_size: usize,
        /// Origin allowed to call the API from a browser, `*` for any.
        #[arg(long, env = "SLD_ALLOWED_ORIGIN")]
        origin: Option<String>,
        /// Seconds.
        #[arg(long, env = "SLD_REQUEST_TIMEOUT", default_value_t = 120)]
        timeout: u64,
    },
}

fn default_outputs(dir: &Path, name: &str) -> OutputSelection {
    OutputSelection {
        json: Some(dir.join(format!("{name}.json"))),
        csv: Some(dir.join(format!("{name}.csv"))),
        svg: Some(dir.join(format!("{name}.svg"))),
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<(), CliError> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).map_err(|e| SldError::Numeric(e.to_string()))?;
    writeln!(std::io::stdout(), "{text}")?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Compute { job, out_dir } => {
            let spec = load_job(&job)?;
            let result = run_job(&spec)?;
            let doc = result_document(&result);
            let outputs = match out_dir {
                Some(dir) => default_outputs(&dir, &spec.name),
                None if spec.outputs == OutputSelection::default() => {
                    default_outputs(job.parent().unwrap_or(Path::new(".")), &spec.name)
                }
                None => spec.outputs.clone(),
            };
            emit_outputs(&doc, &outputs)?;
            let (lo, hi) = result.band.window();
            eprintln!(
                "{}: {} lobes, band {:.0}-{:.0} rpm, {} scenarios ({} failed)",
                spec.name,
                doc.lobes.len(),
                lo,
                hi,
                result.metadata.n_samples,
                result.metadata.failed_scenarios.len(),
            );
            for p in [&outputs.json, &outputs.csv, &outputs.svg].into_iter().flatten() {
                eprintln!("wrote {}", p.display());
            }
            for v in &doc.verdicts {
                eprintln!(
                    "  {:.0} rpm, {} mm: {:?} (p_stable {:.3})",
                    v.n_rpm, v.ap_mm, v.class, v.p_stable
                );
            }
            Ok(())
        }
        Command::Classify { job, n_rpm, ap_mm } => {
            let point = OperatingPoint::new(n_rpm, units::mm_to_m(ap_mm))?;
            let spec = load_job(&job)?;
            let result = run_job(&spec)?;
            let verdict = classify_probabilistic(&point, &result.band)?;
            print_json(&VerdictDoc {
                n_rpm,
                ap_mm,
                class: verdict.class,
                p_stable: verdict.p_stable,
                margin_mm: units::m_to_mm(verdict.margin),
            })
        }
        Command::ToolModes {
            toolfile,
            elements_per_segment,
            n_modes,
            damping_ratio,
        } => {
            let text = read_text(&toolfile)?;
            let tool = ToolFile::from_json(&text)?.to_tool()?;
            let config = FemConfig {
                elements_per_segment,
                n_modes,
                default_damping: damping_ratio,
            };
            let modes = tool_modes(&tool, &config).map_err(|e| e.in_module("tool-model"))?;
            print_json(&modal_table_json(&modes))
        }
        Command::Serve {
            port,
            db,
            cache_size,
            origin,
            timeout,
        } => {
            let config = ServiceConfig {
                port,
                coefficient_db: db,
                cache_size,
                allowed_origin: origin,
                request_timeout: std::time::Duration::from_secs(timeout),
                ..ServiceConfig::default()
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(sld_service::serve(config))?;
            Ok(())
        }
    }
}
