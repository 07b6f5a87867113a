use serde::{Deserialize, Serialize};

use super::job::{DynamicsSource, JobSpec};
use crate::cutting::CoefficientSource;
use crate::error::Result;
use crate::stability::{OperatingPoint, SldResult, ZONE_HEURISTIC_NOTE};
use crate::uncertainty::{
    build_region_grid, classify_probabilistic, compute_band, draw_scenarios, BandConfig, DynamicsModel,
    NominalInputs, QuantilePair, RegionGrid, StabilityVerdict, UncertaintyBand,
};

/// Provenance block embedded in every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub job_name: String,
    pub tool_name: Option<String>,
    pub material: String,
    /// `frf`, `ema` or `fem`
    pub dynamics_source: String,
    /// `measured` or `assumed`
    pub damping_source: String,
    pub coefficient_provenance: CoefficientSource,
    pub provenance_note: String,
    pub seed: u64,
    pub n_samples: usize,
    pub quantiles: QuantilePair,
    pub failed_scenarios: Vec<usize>,
    pub zone_note: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobResult {
    pub metadata: Metadata,
    /// Deterministic SLD of the nominal inputs.
    pub sld: SldResult,
    pub band: UncertaintyBand,
    pub grid: RegionGrid,
    pub verdicts: Vec<(OperatingPoint, StabilityVerdict)>,
}

/// Runs the whole pipeline: scenarios, per-scenario SLDs, band, region grid
/// and verdicts for the listed points.
pub fn run_job(job: &JobSpec) -> Result<JobResult> {
    let nominal = NominalInputs {
        coefficients: job.coefficients.clone(),
        modes: job.dynamics.modes().cloned(),
    };
    let scenarios = draw_scenarios(&nominal, &job.uncertainty, job.monte_carlo.n_samples, job.monte_carlo.seed)
        .map_err(|e| e.in_module("uncertainty"))?;
    let dynamics = match &job.dynamics {
        DynamicsSource::Frf(frf) => DynamicsModel::Measured(frf.clone()),
        _ => DynamicsModel::Modal,
    };
    let config = BandConfig {
        quantiles: job.monte_carlo.quantiles,
        ..BandConfig::new(job.sweep)
    };
    let ensemble = compute_band(&scenarios, &job.cut, &dynamics, &config).map_err(|e| e.in_module("stability-core"))?;
    let grid = build_region_grid(
        &ensemble.band,
        job.region_grid.n_speed,
        job.region_grid.n_depth,
        job.region_grid.depth_max,
    )
    .map_err(|e| e.in_module("uncertainty"))?;
    let verdicts = job
        .points
        .iter()
        .map(|p| Ok((*p, classify_probabilistic(p, &ensemble.band).map_err(|e| e.in_module("uncertainty"))?)))
        .collect::<Result<_>>()?;

    let metadata = Metadata {
        job_name: job.name.clone(),
        tool_name: job.tool.as_ref().map(|t| t.name.clone()),
        material: job.material.clone(),
        dynamics_source: job.dynamics.label().into(),
        damping_source: if job.dynamics.damping_measured() { "measured" } else { "assumed" }.into(),
        coefficient_provenance: job.coefficients.provenance,
        provenance_note: job.provenance_note.clone(),
        seed: job.monte_carlo.seed,
        n_samples: job.monte_carlo.n_samples,
        quantiles: job.monte_carlo.quantiles,
        failed_scenarios: ensemble.band.failed.iter().map(|f| f.index).collect(),
        zone_note: ZONE_HEURISTIC_NOTE.into(),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    Ok(JobResult {
        metadata,
        sld: ensemble.nominal_sld,
        band: ensemble.band,
        grid,
        verdicts,
    })
}
