use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{parse_json, read_text};
use crate::cutting::{resolve_coefficients, CoefficientDb, CoefficientSet, CoefficientSource, CutSpec, MillingMode};
use crate::error::{Result, SldError};
use crate::stability::{
    OperatingPoint, SweepConfig, DEFAULT_DEPTH_CAP_FACTOR, DEFAULT_ENVELOPE_POINTS, DEFAULT_K_MAX, DEFAULT_N_FREQ,
};
use crate::tool_model::{
    import_frf_table, import_modal_table, tool_modes, FemConfig, Frf, ModeSet, Tool, ToolFile, DEFAULT_DAMPING,
};
use crate::uncertainty::{Distribution, ModeUncertainty, QuantilePair, UncertaintySpec};
use crate::units;

/// Coefficient database compiled into the library, used when a job names none.
pub const DEFAULT_COEFFICIENT_DB: &str = include_str!("../../../../data/coefficients.json");
pub const DEFAULT_N_SAMPLES: usize = 200;
const DEFAULT_GRID_SPEEDS: usize = 200;
const DEFAULT_GRID_DEPTHS: usize = 100;

/// A file path or an inline document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(String),
    Inline(T),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FemFile {
    pub elements_per_segment: Option<usize>,
    pub n_modes: Option<usize>,
    pub damping_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutFile {
    pub milling_mode: MillingMode,
    #[serde(default = "full_immersion")]
    pub radial_immersion: f64,
    /// Defaults to the tool's flute count.
    pub n_teeth: Option<u32>,
}

fn full_immersion() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub f_min_hz: Option<f64>,
    pub f_max_hz: Option<f64>,
    pub n_freq: Option<usize>,
    pub k_max: Option<u32>,
    pub depth_cap_factor: Option<f64>,
    pub envelope_points: Option<usize>,
}

/// Distribution as written in a job file. The relative forms and `nominal`
/// are resolved against the parameter's nominal value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionFile {
    Nominal,
    Fixed { value: f64 },
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, std: f64 },
    Choice { values: Vec<f64> },
    /// Uniform on `nominal·(1 ± rel)`.
    Relative { rel: f64 },
    /// Normal with `std = rel_std·nominal`.
    RelativeNormal { rel_std: f64 },
}

impl DistributionFile {
    /// `scale` converts file units to SI.
    fn resolve(&self, nominal: f64, scale: f64) -> Distribution {
        match self {
            DistributionFile::Nominal => Distribution::Fixed { value: nominal },
            DistributionFile::Fixed { value } => Distribution::Fixed { value: value * scale },
            DistributionFile::Uniform { lo, hi } => Distribution::Uniform {
                lo: lo * scale,
                hi: hi * scale,
            },
            DistributionFile::Normal { mean, std } => Distribution::Normal {
                mean: mean * scale,
                std: std * scale,
            },
            DistributionFile::Choice { values } => Distribution::Choice {
                values: values.iter().map(|v| v * scale).collect(),
            },
            DistributionFile::Relative { rel } => Distribution::relative_uniform(nominal, *rel),
            DistributionFile::RelativeNormal { rel_std } => Distribution::Normal {
                mean: nominal,
                std: rel_std * nominal,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeUncertaintyFile {
    pub natural_frequency_hz: Option<DistributionFile>,
    pub damping_ratio: Option<DistributionFile>,
    pub modal_stiffness_n_per_m: Option<DistributionFile>,
}

/// Unset coefficient entries inherit the spread recorded with the
/// coefficients; unset mode entries stay at their nominal value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyFile {
    pub kt_mpa: Option<DistributionFile>,
    pub kr: Option<DistributionFile>,
    #[serde(default)]
    pub modes: Vec<ModeUncertaintyFile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub quantiles: QuantilePair,
}

fn default_n_samples() -> usize {
    DEFAULT_N_SAMPLES
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            n_samples: DEFAULT_N_SAMPLES,
            seed: 0,
            quantiles: QuantilePair::MinMax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionGridFile {
    pub n_speed: Option<usize>,
    pub n_depth: Option<usize>,
    pub depth_max_mm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointFile {
    pub n_rpm: f64,
    pub ap_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsFile {
    pub json: Option<String>,
    pub csv: Option<String>,
    pub svg: Option<String>,
}

/// Job file as written by the user. Paths are relative to the job file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobFile {
    #[serde(default = "default_name")]
    pub name: String,
    pub tool: Option<Source<ToolFile>>,
    pub fem: Option<FemFile>,
    /// Measured modes: file path or inline rows `{direction, f_hz, zeta, k_n_per_m}`.
    pub modes: Option<Source<Vec<Value>>>,
    /// Measured FRF CSV path.
    pub frf: Option<String>,
    pub material: String,
    #[serde(default = "default_source")]
    pub coefficient_source: CoefficientSource,
    pub coefficient_db: Option<String>,
    pub cut: CutFile,
    #[serde(default)]
    pub sweep: SweepFile,
    pub uncertainty: Option<UncertaintyFile>,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    pub region_grid: Option<RegionGridFile>,
    #[serde(default)]
    pub points: Vec<PointFile>,
    #[serde(default)]
    pub outputs: OutputsFile,
}

fn default_name() -> String {
    "job".into()
}

fn default_source() -> CoefficientSource {
    CoefficientSource::Catalog
}

/// The dynamics that survive precedence resolution (FRF > measured modes > FEM).
#[derive(Debug, Clone, PartialEq)]
pub enum DynamicsSource {
    Frf(Frf),
    Ema(ModeSet),
    Fem(ModeSet),
}

impl DynamicsSource {
    pub fn label(&self) -> &'static str {
        match self {
            DynamicsSource::Frf(_) => "frf",
            DynamicsSource::Ema(_) => "ema",
            DynamicsSource::Fem(_) => "fem",
        }
    }

    pub fn modes(&self) -> Option<&ModeSet> {
        match self {
            DynamicsSource::Frf(_) => None,
            DynamicsSource::Ema(m) | DynamicsSource::Fem(m) => Some(m),
        }
    }

    /// `true` when damping ratios were measured rather than assumed.
    pub fn damping_measured(&self) -> bool {
        !matches!(self, DynamicsSource::Fem(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionGridConfig {
    pub n_speed: usize,
    pub n_depth: usize,
    /// m
    pub depth_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSelection {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

/// A validated job in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct JobSpec {
    pub name: String,
    pub tool: Option<Tool>,
    pub dynamics: DynamicsSource,
    /// How the dynamics source was chosen.
    pub provenance_note: String,
    pub material: String,
    pub coefficients: CoefficientSet,
    pub cut: CutSpec,
    pub sweep: SweepConfig,
    pub uncertainty: UncertaintySpec,
    pub monte_carlo: MonteCarloConfig,
    pub region_grid: RegionGridConfig,
    pub points: Vec<OperatingPoint>,
    pub outputs: OutputSelection,
}

fn schema(pointer: &str, message: impl Into<String>) -> SldError {
    SldError::Schema {
        pointer: pointer.into(),
        message: message.into(),
    }
}

/// Re-anchors a schema error from a nested document under `prefix`.
fn nest(prefix: &str, e: SldError) -> SldError {
    match e {
        SldError::Schema { pointer, message } => SldError::Schema {
            pointer: format!("{prefix}{pointer}"),
            message,
        },
        other => other,
    }
}

/// Reads and validates a job file. Relative paths inside it resolve against
/// its directory; without a `coefficient_db` entry the built-in database is used.
pub fn load_job(path: &Path) -> Result<JobSpec> {
    let text = read_text(path)?;
    let file: JobFile = parse_json(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let db = CoefficientDb::from_json(DEFAULT_COEFFICIENT_DB)?;
    file.resolve(Some(base), &db)
}

impl JobFile {
    pub fn from_json(text: &str) -> Result<Self> {
        parse_json(text)
    }

    /// Validates the job and converts it to SI. With `base = None` every
    /// file reference is rejected, so only self-contained jobs resolve.
    pub fn resolve(&self, base: Option<&Path>, default_db: &CoefficientDb) -> Result<JobSpec> {
        let locate = |pointer: &str, rel: &str| -> Result<PathBuf> {
            match base {
                Some(dir) => Ok(dir.join(rel)),
                None => Err(schema(pointer, "file references are not accepted; inline the document")),
            }
        };

        let tool = match &self.tool {
            None => None,
            Some(Source::Inline(t)) => Some(t.to_tool().map_err(|e| nest("/tool", e))?),
            Some(Source::Path(p)) => {
                let path = locate("/tool", p)?;
                let file = ToolFile::from_json(&read_text(&path)?)?;
                Some(file.to_tool()?)
            }
        };

        let frf = match &self.frf {
            None => None,
            Some(p) => {
                let path = locate("/frf", p)?;
                Some((import_frf_table(&read_text(&path)?)?, p.clone()))
            }
        };
        let measured_modes = match &self.modes {
            None => None,
            Some(Source::Path(p)) => {
                let path = locate("/modes", p)?;
                Some((import_modal_table(&read_text(&path)?)?, p.clone()))
            }
            Some(Source::Inline(rows)) => {
                let doc = serde_json::json!({ "modes": rows }).to_string();
                let modes = import_modal_table(&doc).map_err(|e| match e {
                    SldError::Parse { row, field, message } => {
                        schema(&format!("/modes/{row}/{field}"), message)
                    }
                    other => other,
                })?;
                Some((modes, "inline table".to_string()))
            }
        };

        let mut fem = FemConfig::default();
        if let Some(f) = &self.fem {
            if let Some(e) = f.elements_per_segment {
                if e == 0 {
                    return Err(schema("/fem/elements_per_segment", "must be positive"));
                }
                fem.elements_per_segment = e;
            }
            if let Some(n) = f.n_modes {
                if n == 0 {
                    return Err(schema("/fem/n_modes", "must be positive"));
                }
                fem.n_modes = n;
            }
            if let Some(z) = f.damping_ratio {
                if !(z > 0.0 && z < 1.0) {
                    return Err(schema("/fem/damping_ratio", "must lie in (0, 1)"));
                }
                fem.default_damping = z;
            }
        }

        let mut overridden = Vec::new();
        let (dynamics, provenance_note) = if let Some((frf, name)) = frf {
            if measured_modes.is_some() {
                overridden.push("modal table");
            }
            if tool.is_some() {
                overridden.push("FEM model");
            }
            (DynamicsSource::Frf(frf), format!("dynamics from measured FRF ({name})"))
        } else if let Some((modes, name)) = measured_modes {
            if tool.is_some() {
                overridden.push("FEM model");
            }
            (DynamicsSource::Ema(modes), format!("dynamics from measured modes ({name})"))
        } else if let Some(t) = &tool {
            let modes = tool_modes(t, &fem).map_err(|e| e.in_module("tool-model"))?;
            let damping = if fem.default_damping == DEFAULT_DAMPING {
                format!("default damping ratio {DEFAULT_DAMPING} assumed")
            } else {
                format!("damping ratio {} assumed", fem.default_damping)
            };
            (
                DynamicsSource::Fem(modes),
                format!("dynamics from FEM beam model of {:?}; {damping}", t.name),
            )
        } else {
            return Err(schema("", "one of tool, modes or frf is required"));
        };
        let provenance_note = if overridden.is_empty() {
            provenance_note
        } else {
            format!("{provenance_note}; overrides {}", overridden.join(" and "))
        };

        let db = match &self.coefficient_db {
            Some(p) => CoefficientDb::from_json(&read_text(&locate("/coefficient_db", p)?)?)
                .map_err(|e| nest("/coefficient_db", e))?,
            None => default_db.clone(),
        };
        let coefficients = resolve_coefficients(&self.material, self.coefficient_source, &db)
            .map_err(|e| e.in_module("cutting-mechanics"))?;

        let n_teeth = match (self.cut.n_teeth, &tool) {
            (Some(n), _) => n,
            (None, Some(t)) => t.geometry.n_flutes,
            (None, None) => return Err(schema("/cut/n_teeth", "required when no tool is given")),
        };
        let cut = CutSpec {
            milling_mode: self.cut.milling_mode,
            radial_immersion: self.cut.radial_immersion,
            n_teeth,
        };
        // validate() checks only these two fields
        let pointer = if n_teeth == 0 { "/cut/n_teeth" } else { "/cut/radial_immersion" };
        cut.validate().map_err(|e| schema(pointer, e.to_string()))?;

        let sweep = self.resolve_sweep(&dynamics)?;
        let uncertainty = self.resolve_uncertainty(&coefficients, dynamics.modes())?;

        if self.monte_carlo.n_samples == 0 {
            return Err(schema("/monte_carlo/n_samples", "must be at least 1"));
        }
        let grid = self.region_grid.unwrap_or(RegionGridFile {
            n_speed: None,
            n_depth: None,
            depth_max_mm: None,
        });
        let region_grid = RegionGridConfig {
            n_speed: grid.n_speed.unwrap_or(DEFAULT_GRID_SPEEDS),
            n_depth: grid.n_depth.unwrap_or(DEFAULT_GRID_DEPTHS),
            depth_max: grid.depth_max_mm.map(units::mm_to_m),
        };
        if region_grid.n_speed < 2 {
            return Err(schema("/region_grid/n_speed", "must be at least 2"));
        }
        if region_grid.n_depth < 1 {
            return Err(schema("/region_grid/n_depth", "must be at least 1"));
        }
        if region_grid.depth_max.is_some_and(|d| !(d > 0.0)) {
            return Err(schema("/region_grid/depth_max_mm", "must be positive"));
        }

        let points = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                OperatingPoint::new(p.n_rpm, units::mm_to_m(p.ap_mm))
                    .map_err(|e| schema(&format!("/points/{i}"), e.to_string()))
            })
            .collect::<Result<_>>()?;

        let output = |rel: &Option<String>| -> Option<PathBuf> {
            rel.as_ref().map(|r| match base {
                Some(dir) => dir.join(r),
                None => PathBuf::from(r),
            })
        };
        let outputs = OutputSelection {
            json: output(&self.outputs.json),
            csv: output(&self.outputs.csv),
            svg: output(&self.outputs.svg),
        };

        Ok(JobSpec {
            name: self.name.clone(),
            tool,
            dynamics,
            provenance_note,
            material: self.material.clone(),
            coefficients,
            cut,
            sweep,
            uncertainty,
            monte_carlo: self.monte_carlo,
            region_grid,
            points,
            outputs,
        })
    }

    fn resolve_sweep(&self, dynamics: &DynamicsSource) -> Result<SweepConfig> {
        let s = &self.sweep;
        let (def_lo, def_hi, dominant) = match dynamics {
            DynamicsSource::Frf(frf) => (frf.f_min().max(1e-3), frf.f_max(), None),
            DynamicsSource::Ema(m) | DynamicsSource::Fem(m) => {
                // spans every mode so the dominant one is never cut off
                let top = m.highest_frequency().unwrap_or(0.0);
                let bottom = m.modes.iter().map(|x| x.natural_frequency).fold(top, f64::min);
                let dominant = m.dominant_overall().map(|d| d.natural_frequency);
                (0.5 * bottom, 1.5 * top, dominant)
            }
        };
        let sweep = SweepConfig {
            f_min: s.f_min_hz.unwrap_or(def_lo),
            f_max: s.f_max_hz.unwrap_or(def_hi),
            n_freq: s.n_freq.unwrap_or(DEFAULT_N_FREQ),
            k_max: s.k_max.unwrap_or(DEFAULT_K_MAX),
            depth_cap_factor: s.depth_cap_factor.unwrap_or(DEFAULT_DEPTH_CAP_FACTOR),
            envelope_points: s.envelope_points.unwrap_or(DEFAULT_ENVELOPE_POINTS),
            dominant_frequency: dominant,
        };
        sweep.validate().map_err(|e| schema("/sweep", e.to_string()))?;
        if let DynamicsSource::Frf(frf) = dynamics {
            if sweep.f_min < frf.f_min() || sweep.f_max > frf.f_max() {
                return Err(schema(
                    "/sweep",
                    format!(
                        "sweep [{}, {}] Hz exceeds the measured FRF range [{}, {}] Hz",
                        sweep.f_min,
                        sweep.f_max,
                        frf.f_min(),
                        frf.f_max()
                    ),
                ));
            }
        }
        Ok(sweep)
    }

    fn resolve_uncertainty(&self, coeffs: &CoefficientSet, modes: Option<&ModeSet>) -> Result<UncertaintySpec> {
        let mut spec = UncertaintySpec::from_coefficients(coeffs);
        let Some(u) = &self.uncertainty else {
            return Ok(spec);
        };
        if let Some(d) = &u.kt_mpa {
            spec.kt = d.resolve(coeffs.kt, 1e6);
            spec.kt.validate().map_err(|e| schema("/uncertainty/kt_mpa", e.to_string()))?;
        }
        if let Some(d) = &u.kr {
            spec.kr = d.resolve(coeffs.kr, 1.0);
            spec.kr.validate().map_err(|e| schema("/uncertainty/kr", e.to_string()))?;
        }
        if !u.modes.is_empty() {
            let modes = modes.ok_or_else(|| {
                schema("/uncertainty/modes", "mode uncertainty needs modal dynamics, not a measured FRF")
            })?;
            if u.modes.len() != modes.len() {
                return Err(schema(
                    "/uncertainty/modes",
                    format!("{} entries for {} modes", u.modes.len(), modes.len()),
                ));
            }
            let nominal = |d: &Option<DistributionFile>, value: f64, ptr: String| -> Result<Distribution> {
                let dist = d
                    .as_ref()
                    .map_or(Distribution::Fixed { value }, |d| d.resolve(value, 1.0));
                dist.validate().map_err(|e| schema(&ptr, e.to_string()))?;
                Ok(dist)
            };
            spec.modes = u
                .modes
                .iter()
                .zip(&modes.modes)
                .enumerate()
                .map(|(i, (f, m))| {
                    Ok(ModeUncertainty {
                        natural_frequency: nominal(
                            &f.natural_frequency_hz,
                            m.natural_frequency,
                            format!("/uncertainty/modes/{i}/natural_frequency_hz"),
                        )?,
                        damping_ratio: nominal(
                            &f.damping_ratio,
                            m.damping_ratio,
                            format!("/uncertainty/modes/{i}/damping_ratio"),
                        )?,
                        modal_stiffness: nominal(
                            &f.modal_stiffness_n_per_m,
                            m.modal_stiffness,
                            format!("/uncertainty/modes/{i}/modal_stiffness_n_per_m"),
                        )?,
                    })
                })
                .collect::<Result<_>>()?;
        }
        Ok(spec)
    }
}
