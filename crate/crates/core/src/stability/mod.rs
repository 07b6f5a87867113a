//! Deterministic stability lobe diagrams.
//!
//! [`zoa_lobes`] builds the lobes from the frequency-domain zero-order
//! solution; [`fdm_spectral_radius`] checks individual operating points in
//! the time domain with a full-discretisation Floquet map.

mod fdm;
mod zoa;
mod zones;

pub use fdm::{fdm_spectral_radius, FdmOptions, DEFAULT_M_INTERVALS};
pub use zoa::{
    chatter_eigenvalue, critical_depth, spindle_speeds, zoa_lobes, ChatterEigenvalue, SweepConfig,
    DEFAULT_DEPTH_CAP_FACTOR, DEFAULT_ENVELOPE_POINTS, DEFAULT_K_MAX, DEFAULT_N_FREQ,
};
pub use zones::{zone_annotate, zone_annotate_mode, Zone, ZoneRange, ZONE_HEURISTIC_NOTE};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SldError};

/// Candidate (spindle speed, axial depth) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// rpm
    pub spindle_speed: f64,
    /// m
    pub axial_depth: f64,
}

impl OperatingPoint {
    pub fn new(spindle_speed: f64, axial_depth: f64) -> Result<Self> {
        if !(spindle_speed > 0.0 && spindle_speed.is_finite()) {
            return Err(SldError::InvalidInput("spindle speed must be positive".into()));
        }
        if !(axial_depth > 0.0 && axial_depth.is_finite()) {
            return Err(SldError::InvalidInput("axial depth must be positive".into()));
        }
        Ok(OperatingPoint {
            spindle_speed,
            axial_depth,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LobePoint {
    /// rad/s
    pub chatter_frequency: f64,
    /// rpm
    pub spindle_speed: f64,
    /// m
    pub depth_limit: f64,
}

/// A contiguous run of one lobe family. A family may be split into several
/// curves where the depth cap or a root switch interrupts it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LobeCurve {
    pub lobe_index: u32,
    pub points: Vec<LobePoint>,
}

/// Piecewise-linear limiting depth over a uniform speed grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    /// rpm, strictly increasing
    pub speeds: Vec<f64>,
    /// m
    pub depths: Vec<f64>,
}

impl Envelope {
    pub fn window(&self) -> (f64, f64) {
        (self.speeds[0], *self.speeds.last().expect("non-empty envelope"))
    }

    pub fn contains(&self, speed: f64) -> bool {
        let (lo, hi) = self.window();
        speed >= lo && speed <= hi
    }

    /// Depth limit at `speed` by linear interpolation.
    pub fn at(&self, speed: f64) -> Result<f64> {
        if !self.contains(speed) {
            let (lo, hi) = self.window();
            return Err(SldError::OutOfRange(format!(
                "spindle speed {speed} rpm outside [{lo}, {hi}] rpm"
            )));
        }
        Ok(interpolate(&self.speeds, &self.depths, speed))
    }

    pub fn min_depth(&self) -> f64 {
        self.depths.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Linear interpolation on an increasing grid; `x` must lie inside it.
pub(crate) fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let hi = xs.partition_point(|&g| g < x);
    if hi == 0 {
        return ys[0];
    }
    if hi >= xs.len() {
        return ys[xs.len() - 1];
    }
    if xs[hi] == x {
        return ys[hi];
    }
    let lo = hi - 1;
    let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + (ys[hi] - ys[lo]) * t
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SldResult {
    pub lobes: Vec<LobeCurve>,
    pub envelope: Envelope,
    pub zone_labels: Vec<ZoneRange>,
    /// Points deeper than this were dropped (m).
    pub depth_cap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
}

/// Stable iff the depth lies strictly below the envelope; a point exactly on
/// the boundary counts as unstable.
pub fn classify_deterministic(point: &OperatingPoint, sld: &SldResult) -> Result<Stability> {
    classify_against(point, &sld.envelope)
}

pub fn classify_against(point: &OperatingPoint, envelope: &Envelope) -> Result<Stability> {
    let limit = envelope.at(point.spindle_speed)?;
    Ok(if point.axial_depth < limit {
        Stability::Stable
    } else {
        Stability::Unstable
    })
}
