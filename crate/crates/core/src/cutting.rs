//! Cutting-force coefficients and milling engagement geometry.
//!
//! Angles follow the convention of the zero-order milling stability model:
//! the immersion angle φ is measured from the +Y axis in the direction of
//! cutter rotation, and a tooth is engaged while `φ_start ≤ φ < φ_exit`.
//! Swapping the convention mirrors the directional factors and moves the
//! lobes, so every consumer goes through [`engagement_angles`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SldError};
use crate::uncertainty::Distribution;
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MillingMode {
    Up,
    Down,
    Slot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutSpec {
    pub milling_mode: MillingMode,
    /// a_r / D
    pub radial_immersion: f64,
    pub n_teeth: u32,
}

impl CutSpec {
    pub fn slot(n_teeth: u32) -> Self {
        CutSpec {
            milling_mode: MillingMode::Slot,
            radial_immersion: 1.0,
            n_teeth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radial_immersion > 0.0 && self.radial_immersion <= 1.0) {
            return Err(SldError::InvalidInput(format!(
                "radial immersion {} outside (0, 1]",
                self.radial_immersion
            )));
        }
        if self.milling_mode == MillingMode::Slot && self.radial_immersion != 1.0 {
            return Err(SldError::InvalidInput(
                "slot milling requires radial immersion 1".into(),
            ));
        }
        if self.n_teeth == 0 {
            return Err(SldError::InvalidInput("n_teeth must be positive".into()));
        }
        Ok(())
    }
}

/// Entry and exit immersion angles (rad).
pub fn engagement_angles(cut: &CutSpec) -> Result<(f64, f64)> {
    cut.validate()?;
    let r = cut.radial_immersion;
    Ok(match cut.milling_mode {
        MillingMode::Slot => (0.0, PI),
        MillingMode::Up => (0.0, (1.0 - 2.0 * r).clamp(-1.0, 1.0).acos()),
        MillingMode::Down => ((2.0 * r - 1.0).clamp(-1.0, 1.0).acos(), PI),
    })
}

/// Time-averaged directional factors of the zero-order model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaMatrix {
    pub axx: f64,
    pub axy: f64,
    pub ayx: f64,
    pub ayy: f64,
}

impl std::ops::Add for AlphaMatrix {
    type Output = AlphaMatrix;
    fn add(self, o: AlphaMatrix) -> AlphaMatrix {
        AlphaMatrix {
            axx: self.axx + o.axx,
            axy: self.axy + o.axy,
            ayx: self.ayx + o.ayx,
            ayy: self.ayy + o.ayy,
        }
    }
}

impl AlphaMatrix {
    pub fn is_finite(&self) -> bool {
        [self.axx, self.axy, self.ayx, self.ayy]
            .iter()
            .all(|v| v.is_finite())
    }

    pub fn determinant(&self) -> f64 {
        self.axx * self.ayy - self.axy * self.ayx
    }
}

fn primitive(phi: f64, kr: f64) -> AlphaMatrix {
    let (s2, c2) = (2.0 * phi).sin_cos();
    AlphaMatrix {
        axx: 0.5 * (c2 - 2.0 * kr * phi + kr * s2),
        axy: 0.5 * (-s2 - 2.0 * phi + kr * c2),
        ayx: 0.5 * (-s2 + 2.0 * phi + kr * c2),
        ayy: 0.5 * (-c2 - 2.0 * kr * phi - kr * s2),
    }
}

/// Closed-form integral of the instantaneous directional coefficients over
/// `[phi_start, phi_exit]`.
pub fn directional_factors(phi_start: f64, phi_exit: f64, kr: f64) -> Result<AlphaMatrix> {
    if !(0.0 <= phi_start && phi_start < phi_exit && phi_exit <= PI) {
        return Err(SldError::InvalidInput(format!(
            "engagement angles must satisfy 0 <= start < exit <= pi, got ({phi_start}, {phi_exit})"
        )));
    }
    if !kr.is_finite() {
        return Err(SldError::InvalidInput("kr must be finite".into()));
    }
    let hi = primitive(phi_exit, kr);
    let lo = primitive(phi_start, kr);
    Ok(AlphaMatrix {
        axx: hi.axx - lo.axx,
        axy: hi.axy - lo.axy,
        ayx: hi.ayx - lo.ayx,
        ayy: hi.ayy - lo.ayy,
    })
}

/// Instantaneous directional coefficients of one engaged tooth at angle `phi`,
/// i.e. the integrands of [`directional_factors`].
pub fn instantaneous_factors(phi: f64, kr: f64) -> AlphaMatrix {
    let (s2, c2) = (2.0 * phi).sin_cos();
    AlphaMatrix {
        axx: -s2 - kr * (1.0 - c2),
        axy: -(1.0 + c2) - kr * s2,
        ayx: (1.0 - c2) - kr * s2,
        ayy: s2 - kr * (1.0 + c2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientSource {
    Catalog,
    Test,
}

/// Linear cutting-force coefficients with their uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    /// Pa
    pub kt: f64,
    pub kr: f64,
    pub provenance: CoefficientSource,
    pub kt_uncertainty: Distribution,
    pub kr_uncertainty: Distribution,
}

impl CoefficientSet {
    /// Coefficients without uncertainty.
    pub fn exact(kt: f64, kr: f64, provenance: CoefficientSource) -> Result<Self> {
        let set = CoefficientSet {
            kt,
            kr,
            provenance,
            kt_uncertainty: Distribution::Fixed { value: kt },
            kr_uncertainty: Distribution::Fixed { value: kr },
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kt > 0.0 && self.kt.is_finite()) {
            return Err(SldError::InvalidInput("kt must be positive".into()));
        }
        if !(self.kr > 0.0 && self.kr < 2.0) {
            return Err(SldError::InvalidInput(format!(
                "kr = {} outside (0, 2)",
                self.kr
            )));
        }
        self.kt_uncertainty.validate()?;
        self.kr_uncertainty.validate()
    }
}

/// Relative half-width of the uniform uncertainty put on catalog values.
pub const DEFAULT_CATALOG_REL_UNC: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub kt_mpa: f64,
    pub kr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kt_rel_unc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kr_rel_unc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestEntry {
    pub kt_mpa_mean: f64,
    pub kt_mpa_std: f64,
    pub kr_mean: f64,
    pub kr_std: f64,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<CatalogEntry>,
    #[serde(default)]
    pub tests: Vec<TestEntry>,
}

impl MaterialEntry {
    pub fn sources(&self) -> Vec<CoefficientSource> {
        let mut out = Vec::new();
        if self.catalog.is_some() {
            out.push(CoefficientSource::Catalog);
        }
        if !self.tests.is_empty() {
            out.push(CoefficientSource::Test);
        }
        out
    }
}

/// Cutting-coefficient database, immutable once loaded.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientDb {
    pub materials: Vec<MaterialEntry>,
}

impl CoefficientDb {
    pub fn from_json(text: &str) -> Result<Self> {
        crate::io::parse_json(text)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SldError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn get(&self, name: &str) -> Option<&MaterialEntry> {
        self.materials.iter().find(|m| m.name == name)
    }

    /// Material names in lexicographic order.
    pub fn names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.materials.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        names
    }
}

/// Looks up coefficients for a material. Catalog values get a uniform
/// relative band (default ±30%); test values carry their recorded normal
/// spread. With several recorded tests the first one is used.
pub fn resolve_coefficients(
    material_name: &str,
    source: CoefficientSource,
    database: &CoefficientDb,
) -> Result<CoefficientSet> {
    let entry = database.get(material_name).ok_or_else(|| {
        SldError::NotFound(format!(
            "material {material_name:?}; available: [{}]",
            database.names().join(", ")
        ))
    })?;
    let set = match source {
        CoefficientSource::Catalog => {
            let cat = entry.catalog.as_ref().ok_or_else(|| {
                SldError::NotFound(format!("no catalog coefficients for {material_name:?}"))
            })?;
            let kt = units::mpa_to_pa(cat.kt_mpa);
            let kt_rel = cat.kt_rel_unc.unwrap_or(DEFAULT_CATALOG_REL_UNC);
            let kr_rel = cat.kr_rel_unc.unwrap_or(DEFAULT_CATALOG_REL_UNC);
            CoefficientSet {
                kt,
                kr: cat.kr,
                provenance: CoefficientSource::Catalog,
                kt_uncertainty: Distribution::relative_uniform(kt, kt_rel),
                kr_uncertainty: Distribution::relative_uniform(cat.kr, kr_rel),
            }
        }
        CoefficientSource::Test => {
            let test = entry.tests.first().ok_or_else(|| {
                SldError::NotFound(format!("no cutting tests recorded for {material_name:?}"))
            })?;
            let kt = units::mpa_to_pa(test.kt_mpa_mean);
            CoefficientSet {
                kt,
                kr: test.kr_mean,
                provenance: CoefficientSource::Test,
                kt_uncertainty: Distribution::Normal {
                    mean: kt,
                    std: units::mpa_to_pa(test.kt_mpa_std),
                },
                kr_uncertainty: Distribution::Normal {
                    mean: test.kr_mean,
                    std: test.kr_std,
                },
            }
        }
    };
    set.validate()?;
    Ok(set)
}
