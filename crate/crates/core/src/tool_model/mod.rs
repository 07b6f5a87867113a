//! Finite-element beam model of the cutting tool, its modal parameters and
//! tool-tip frequency response functions.
//!
//! The overhang is modelled as an Euler–Bernoulli cantilever clamped at the
//! holder face. Bending is solved once in a plane and the resulting modes are
//! replicated to the X and Y directions.

mod assembly;
mod frf;
mod mesh;
mod modal;

pub use assembly::{assemble_system, SystemMatrices};
pub use frf::{frf_to_csv, import_frf_table, synthesize_frf, Frf, FrfProvenance, FRF_CSV_HEADER};
pub use mesh::{build_beam_mesh, BeamElement, BeamMesh};
pub use modal::{import_modal_table, modal_table_json, solve_modes, Direction, Mode, ModeSet, ModeSource};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SldError};
use crate::units;

/// Default reduction applied to the nominal diameter of fluted sections.
pub const DEFAULT_D_EFF_FACTOR: f64 = 0.8;

/// Default modal damping ratio given to FEM modes.
pub const DEFAULT_DAMPING: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Shank,
    Fluted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// m
    pub length: f64,
    /// m
    pub outer_diameter: f64,
    pub kind: SegmentKind,
}

/// CAM-style tool description. Segments run from the shank end towards the tip;
/// the last `overhang_length` metres of the tool stick out of the holder.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolGeometry {
    pub segments: Vec<Segment>,
    pub overhang_length: f64,
    pub n_flutes: u32,
    /// Degrees. Carried as metadata, not used by the dynamic model.
    pub helix_angle: f64,
    pub d_eff_factor: f64,
}

impl ToolGeometry {
    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(SldError::InvalidGeometry("tool has no segments".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.length > 0.0 && s.length.is_finite()) {
                return Err(SldError::InvalidGeometry(format!(
                    "segment {i}: length must be positive"
                )));
            }
            if !(s.outer_diameter > 0.0 && s.outer_diameter.is_finite()) {
                return Err(SldError::InvalidGeometry(format!(
                    "segment {i}: diameter must be positive"
                )));
            }
        }
        if !(self.overhang_length > 0.0 && self.overhang_length.is_finite()) {
            return Err(SldError::InvalidGeometry(
                "overhang length must be positive".into(),
            ));
        }
        if self.n_flutes == 0 {
            return Err(SldError::InvalidGeometry(
                "tool needs at least one flute".into(),
            ));
        }
        if !(self.d_eff_factor > 0.0 && self.d_eff_factor <= 1.0) {
            return Err(SldError::InvalidGeometry(
                "d_eff_factor must lie in (0, 1]".into(),
            ));
        }
        let total = self.total_length();
        if self.overhang_length > total * (1.0 + 1e-12) {
            return Err(SldError::InvalidGeometry(format!(
                "overhang {:.3} mm exceeds tool length {:.3} mm",
                units::m_to_mm(self.overhang_length),
                units::m_to_mm(total)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolMaterial {
    pub name: String,
    /// Pa
    pub youngs_modulus: f64,
    /// kg/m³
    pub density: f64,
}

impl ToolMaterial {
    pub fn validate(&self) -> Result<()> {
        if !(self.youngs_modulus > 0.0 && self.youngs_modulus.is_finite()) {
            return Err(SldError::InvalidInput(
                "youngs_modulus must be positive".into(),
            ));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(SldError::InvalidInput("density must be positive".into()));
        }
        Ok(())
    }
}

/// On-disk tool description (mm, GPa).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolFile {
    pub name: String,
    pub n_flutes: u32,
    #[serde(default)]
    pub helix_angle_deg: f64,
    pub overhang_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_eff_factor: Option<f64>,
    pub segments: Vec<SegmentFile>,
    pub material: MaterialFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentFile {
    pub length_mm: f64,
    pub diameter_mm: f64,
    pub kind: SegmentKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialFile {
    pub name: String,
    pub youngs_modulus_gpa: f64,
    pub density_kg_m3: f64,
}

/// Tool description converted to SI, ready for meshing.
#[derive(Debug, Clone, PartialEq)]
pub struct Tool {
    pub name: String,
    pub geometry: ToolGeometry,
    pub material: ToolMaterial,
}

impl ToolFile {
    pub fn from_json(text: &str) -> Result<Self> {
        crate::io::parse_json(text)
    }

    /// Converts to SI and validates, reporting the offending field as a JSON pointer.
    pub fn to_tool(&self) -> Result<Tool> {
        let schema = |pointer: String, message: &str| SldError::Schema {
            pointer,
            message: message.to_string(),
        };
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.length_mm > 0.0) {
                return Err(schema(
                    format!("/segments/{i}/length_mm"),
                    "must be positive",
                ));
            }
            if !(s.diameter_mm > 0.0) {
                return Err(schema(
                    format!("/segments/{i}/diameter_mm"),
                    "must be positive",
                ));
            }
        }
        if !(self.overhang_mm > 0.0) {
            return Err(schema("/overhang_mm".into(), "must be positive"));
        }
        if !(self.material.youngs_modulus_gpa > 0.0) {
            return Err(schema(
                "/material/youngs_modulus_gpa".into(),
                "must be positive",
            ));
        }
        if !(self.material.density_kg_m3 > 0.0) {
            return Err(schema("/material/density_kg_m3".into(), "must be positive"));
        }
        let geometry = ToolGeometry {
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    length: units::mm_to_m(s.length_mm),
                    outer_diameter: units::mm_to_m(s.diameter_mm),
                    kind: s.kind,
                })
                .collect(),
            overhang_length: units::mm_to_m(self.overhang_mm),
            n_flutes: self.n_flutes,
            helix_angle: self.helix_angle_deg,
            d_eff_factor: self.d_eff_factor.unwrap_or(DEFAULT_D_EFF_FACTOR),
        };
        geometry.validate()?;
        let material = ToolMaterial {
            name: self.material.name.clone(),
            youngs_modulus: units::gpa_to_pa(self.material.youngs_modulus_gpa),
            density: self.material.density_kg_m3,
        };
        material.validate()?;
        Ok(Tool {
            name: self.name.clone(),
            geometry,
            material,
        })
    }
}

/// FEM settings for turning a tool into modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FemConfig {
    pub elements_per_segment: usize,
    pub n_modes: usize,
    pub default_damping: f64,
}

impl Default for FemConfig {
    fn default() -> Self {
        FemConfig {
            elements_per_segment: 8,
            n_modes: 3,
            default_damping: DEFAULT_DAMPING,
        }
    }
}

/// Mesh, assemble and solve in one go.
pub fn tool_modes(tool: &Tool, config: &FemConfig) -> Result<ModeSet> {
    let mesh = build_beam_mesh(&tool.geometry, config.elements_per_segment)?;
    let system = assemble_system(&mesh, &tool.material)?;
    let n_modes = config.n_modes.min(system.retained_dofs());
    solve_modes(&system, n_modes, config.default_damping)
}
