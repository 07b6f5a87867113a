//! Monte Carlo propagation of coefficient and modal uncertainty into a
//! three-region stability map.
//!
//! Every scenario's SLD is computed independently; scenario 0 is always the
//! nominal input set. Random draws come from ChaCha substreams keyed by
//! `(seed, parameter name, scenario index)`, so a scenario's realisation does
//! not depend on evaluation order, thread count, or which other parameters
//! are uncertain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutting::{CoefficientSet, CutSpec};
use crate::error::{Result, SldError};
use crate::stability::{interpolate, linspace, zoa_lobes, Envelope, OperatingPoint, SldResult, SweepConfig};
use crate::tool_model::{synthesize_frf, Frf, ModeSet};

/// Distribution of one uncertain scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Distribution {
    Fixed { value: f64 },
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, std: f64 },
    /// Equally likely discrete values.
    Choice { values: Vec<f64> },
}

impl Distribution {
    /// `value·(1 ± rel)` uniform; `rel = 0` gives a fixed value.
    pub fn relative_uniform(value: f64, rel: f64) -> Self {
        if rel == 0.0 {
            Distribution::Fixed { value }
        } else {
            Distribution::Uniform {
                lo: value * (1.0 - rel),
                hi: value * (1.0 + rel),
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Distribution::Fixed { value } => value.is_finite(),
            Distribution::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Distribution::Normal { mean, std } => mean.is_finite() && std.is_finite() && *std >= 0.0,
            Distribution::Choice { values } => {
                !values.is_empty() && values.iter().all(|v| v.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SldError::InvalidInput(format!("invalid distribution {self:?}")))
        }
    }

    pub fn is_fixed(&self) -> bool {
        match self {
            Distribution::Fixed { .. } => true,
            Distribution::Normal { std, .. } => *std == 0.0,
            Distribution::Choice { values } => values.iter().all(|v| *v == values[0]),
            Distribution::Uniform { .. } => false,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Distribution::Fixed { value } => *value,
            Distribution::Uniform { lo, hi } => {
                let u: f64 = rng.random();
                lo + u * (hi - lo)
            }
            Distribution::Normal { mean, std } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + std * z
            }
            Distribution::Choice { values } => values[rng.random_range(0..values.len())],
        }
    }
}

/// Uncertainty of one mode; entries align with the nominal mode list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeUncertainty {
    pub natural_frequency: Distribution,
    pub damping_ratio: Distribution,
    pub modal_stiffness: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySpec {
    pub kt: Distribution,
    pub kr: Distribution,
    #[serde(default)]
    pub modes: Vec<ModeUncertainty>,
}

impl UncertaintySpec {
    /// Coefficient uncertainty as carried by `coeffs`, modes fixed.
    pub fn from_coefficients(coeffs: &CoefficientSet) -> Self {
        UncertaintySpec {
            kt: coeffs.kt_uncertainty.clone(),
            kr: coeffs.kr_uncertainty.clone(),
            modes: Vec::new(),
        }
    }

    /// Everything pinned to the nominal inputs.
    pub fn fixed(nominal: &NominalInputs) -> Self {
        UncertaintySpec {
            kt: Distribution::Fixed { value: nominal.coefficients.kt },
            kr: Distribution::Fixed { value: nominal.coefficients.kr },
            modes: nominal
                .modes
                .iter()
                .flat_map(|m| &m.modes)
                .map(|m| ModeUncertainty {
                    natural_frequency: Distribution::Fixed { value: m.natural_frequency },
                    damping_ratio: Distribution::Fixed { value: m.damping_ratio },
                    modal_stiffness: Distribution::Fixed { value: m.modal_stiffness },
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kt.validate()?;
        self.kr.validate()?;
        for m in &self.modes {
            m.natural_frequency.validate()?;
            m.damping_ratio.validate()?;
            m.modal_stiffness.validate()?;
        }
        Ok(())
    }
}

/// Deterministic inputs the scenarios perturb.
#[derive(Debug, Clone, PartialEq)]
pub struct NominalInputs {
    pub coefficients: CoefficientSet,
    /// `None` when the dynamics come from a measured FRF.
    pub modes: Option<ModeSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub index: usize,
    pub coefficients: CoefficientSet,
    pub modes: Option<ModeSet>,
}

fn fnv1a(text: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in text.bytes() {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Words reserved per scenario within a parameter's stream.
const WORDS_PER_SCENARIO: u128 = 1 << 16;
const MAX_REDRAWS: usize = 1000;

fn substream(seed: u64, parameter: &str, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(parameter));
    rng.set_word_pos(index as u128 * WORDS_PER_SCENARIO);
    rng
}

/// Draws from `dist` on its own substream, redrawing until `accept` holds.
fn draw_param(
    dist: &Distribution,
    seed: u64,
    parameter: &str,
    index: usize,
    accept: impl Fn(f64) -> bool,
) -> Result<f64> {
    let mut rng = substream(seed, parameter, index);
    for _ in 0..MAX_REDRAWS {
        let v = dist.draw(&mut rng);
        if accept(v) {
            return Ok(v);
        }
    }
    Err(SldError::InvalidInput(format!(
        "{parameter}: no admissible sample in {MAX_REDRAWS} draws from {dist:?}"
    )))
}

/// Scenario 0 is the nominal input; scenarios `1..n_samples` are random draws.
pub fn draw_scenarios(
    nominal: &NominalInputs,
    spec: &UncertaintySpec,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Scenario>> {
    if n_samples == 0 {
        return Err(SldError::InvalidInput("n_samples must be at least 1".into()));
    }
    spec.validate()?;
    let n_modes = nominal.modes.as_ref().map_or(0, ModeSet::len);
    if !spec.modes.is_empty() && spec.modes.len() != n_modes {
        return Err(SldError::InvalidInput(format!(
            "{} mode uncertainties given for {n_modes} modes",
            spec.modes.len()
        )));
    }

    let positive = |v: f64| v > 0.0 && v.is_finite();
    (0..n_samples)
        .into_par_iter()
        .map(|index| {
            if index == 0 {
                return Ok(Scenario {
                    index,
                    coefficients: nominal.coefficients.clone(),
                    modes: nominal.modes.clone(),
                });
            }
            let mut coefficients = nominal.coefficients.clone();
            coefficients.kt = draw_param(&spec.kt, seed, "kt", index, positive)?;
            coefficients.kr = draw_param(&spec.kr, seed, "kr", index, |v| v > 0.0 && v < 2.0)?;
            let modes = match &nominal.modes {
                Some(set) if !spec.modes.is_empty() => {
                    let mut set = set.clone();
                    for (i, (mode, unc)) in set.modes.iter_mut().zip(&spec.modes).enumerate() {
                        mode.natural_frequency =
                            draw_param(&unc.natural_frequency, seed, &format!("mode{i}.f"), index, positive)?;
                        mode.damping_ratio = draw_param(
                            &unc.damping_ratio,
                            seed,
                            &format!("mode{i}.zeta"),
                            index,
                            |v| v > 0.0 && v < 1.0,
                        )?;
                        mode.modal_stiffness =
                            draw_param(&unc.modal_stiffness, seed, &format!("mode{i}.k"), index, positive)?;
                    }
                    Some(set)
                }
                other => other.clone(),
            };
            Ok(Scenario {
                index,
                coefficients,
                modes,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QuantilePair {
    /// All-scenario envelopes.
    #[default]
    MinMax,
    Q05Q95,
}

impl QuantilePair {
    fn levels(self) -> (f64, f64) {
        match self {
            QuantilePair::MinMax => (0.0, 1.0),
            QuantilePair::Q05Q95 => (0.05, 0.95),
        }
    }
}

/// Linear-interpolation quantile of already sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    }
}

/// Settings for [`compute_band`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandConfig {
    pub sweep: SweepConfig,
    pub quantiles: QuantilePair,
    /// Size of the common speed grid.
    pub grid_points: usize,
    /// Largest tolerated fraction of failed scenarios.
    pub max_failed_fraction: f64,
}

impl BandConfig {
    pub fn new(sweep: SweepConfig) -> Self {
        BandConfig {
            sweep,
            quantiles: QuantilePair::MinMax,
            grid_points: crate::stability::DEFAULT_ENVELOPE_POINTS,
            max_failed_fraction: 0.1,
        }
    }
}

/// Where the tool-tip dynamics of a scenario come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DynamicsModel {
    /// Synthesise each scenario's FRF from its realised modes on the sweep grid.
    Modal,
    /// One measured FRF shared by every scenario.
    Measured(Frf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedScenario {
    pub index: usize,
    pub reason: String,
}

/// Lower and upper stability boundaries across the scenario ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyBand {
    /// rpm
    pub speeds: Vec<f64>,
    /// Scenario-0 envelope on the common grid (m).
    pub nominal: Vec<f64>,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    pub quantiles: QuantilePair,
    /// Indices of the scenarios that produced an SLD, aligned with `scenario_envelopes`.
    pub scenario_indices: Vec<usize>,
    /// Every successful scenario's envelope resampled onto `speeds`.
    pub scenario_envelopes: Vec<Vec<f64>>,
    pub failed: Vec<FailedScenario>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionClass {
    UnconditionallyStable,
    Conditional,
    UnconditionallyUnstable,
}

impl UncertaintyBand {
    pub fn window(&self) -> (f64, f64) {
        (self.speeds[0], *self.speeds.last().expect("non-empty band"))
    }

    fn check_speed(&self, speed: f64) -> Result<()> {
        let (lo, hi) = self.window();
        if speed >= lo && speed <= hi {
            Ok(())
        } else {
            Err(SldError::OutOfRange(format!(
                "spindle speed {speed} rpm outside band window [{lo}, {hi}] rpm"
            )))
        }
    }

    /// (a_low, a_high) at `speed`.
    pub fn edges_at(&self, speed: f64) -> Result<(f64, f64)> {
        self.check_speed(speed)?;
        Ok((
            interpolate(&self.speeds, &self.low, speed),
            interpolate(&self.speeds, &self.high, speed),
        ))
    }

    pub fn region_at(&self, speed: f64, depth: f64) -> Result<RegionClass> {
        let (low, high) = self.edges_at(speed)?;
        Ok(region_class(depth, low, high))
    }

    pub fn nominal_envelope(&self) -> Envelope {
        Envelope {
            speeds: self.speeds.clone(),
            depths: self.nominal.clone(),
        }
    }

    pub fn max_width(&self) -> f64 {
        self.low
            .iter()
            .zip(&self.high)
            .map(|(l, h)| h - l)
            .fold(0.0, f64::max)
    }
}

fn region_class(depth: f64, low: f64, high: f64) -> RegionClass {
    if depth < low {
        RegionClass::UnconditionallyStable
    } else if depth >= high {
        RegionClass::UnconditionallyUnstable
    } else {
        RegionClass::Conditional
    }
}

/// Per-scenario SLDs plus the band derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub nominal_sld: SldResult,
    pub band: UncertaintyBand,
}

fn scenario_sld(
    scenario: &Scenario,
    cut: &CutSpec,
    dynamics: &DynamicsModel,
    sweep: &SweepConfig,
) -> Result<SldResult> {
    match dynamics {
        DynamicsModel::Measured(frf) => zoa_lobes(frf, cut, &scenario.coefficients, sweep),
        DynamicsModel::Modal => {
            let modes = scenario
                .modes
                .as_ref()
                .ok_or_else(|| SldError::InvalidInput("scenario has no modes".into()))?;
            let frf = synthesize_frf(modes, &sweep.frequencies())?;
            zoa_lobes(&frf, cut, &scenario.coefficients, sweep)
        }
    }
}

/// Runs the zero-order SLD for every scenario and reduces the envelopes to
/// a lower/upper band on a common speed grid.
pub fn compute_band(
    scenarios: &[Scenario],
    cut: &CutSpec,
    dynamics: &DynamicsModel,
    config: &BandConfig,
) -> Result<EnsembleResult> {
    if scenarios.is_empty() {
        return Err(SldError::InvalidInput("at least one scenario is required".into()));
    }
    if scenarios[0].index != 0 {
        return Err(SldError::InvalidInput("scenario 0 must be the nominal".into()));
    }
    if config.grid_points < 2 {
        return Err(SldError::InvalidInput("grid_points must be at least 2".into()));
    }

    let results: Vec<Result<SldResult>> = scenarios
        .par_iter()
        .map(|s| scenario_sld(s, cut, dynamics, &config.sweep))
        .collect();

    let mut slds = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (scenario, result) in scenarios.iter().zip(results) {
        match result {
            Ok(sld) => slds.push((scenario.index, sld)),
            Err(e) if scenario.index == 0 => return Err(e),
            Err(e) => failed.push(FailedScenario {
                index: scenario.index,
                reason: e.to_string(),
            }),
        }
    }
    let failed_fraction = failed.len() as f64 / scenarios.len() as f64;
    if failed_fraction > config.max_failed_fraction {
        return Err(SldError::Numeric(format!(
            "{} of {} scenarios produced no SLD (first: scenario {}: {})",
            failed.len(),
            scenarios.len(),
            failed[0].index,
            failed[0].reason
        )));
    }

    let lo = slds
        .iter()
        .map(|(_, s)| s.envelope.window().0)
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = slds
        .iter()
        .map(|(_, s)| s.envelope.window().1)
        .fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(SldError::Numeric(
            "scenario speed windows do not overlap".into(),
        ));
    }
    let speeds = linspace(lo, hi, config.grid_points);
    let scenario_envelopes: Vec<Vec<f64>> = slds
        .iter()
        .map(|(_, sld)| {
            speeds
                .iter()
                .map(|&n| interpolate(&sld.envelope.speeds, &sld.envelope.depths, n))
                .collect()
        })
        .collect();

    let nominal = scenario_envelopes[0].clone();
    let (q_lo, q_hi) = config.quantiles.levels();
    let mut low = Vec::with_capacity(speeds.len());
    let mut high = Vec::with_capacity(speeds.len());
    let mut column = Vec::with_capacity(scenario_envelopes.len());
    for (i, &nom) in nominal.iter().enumerate() {
        column.clear();
        column.extend(scenario_envelopes.iter().map(|e| e[i]));
        column.sort_by(f64::total_cmp);
        // the nominal curve always lies inside the band
        low.push(quantile(&column, q_lo).min(nom));
        high.push(quantile(&column, q_hi).max(nom));
    }

    let scenario_indices = slds.iter().map(|(i, _)| *i).collect();
    let nominal_sld = slds.swap_remove(0).1;
    Ok(EnsembleResult {
        nominal_sld,
        band: UncertaintyBand {
            speeds,
            nominal,
            low,
            high,
            quantiles: config.quantiles,
            scenario_indices,
            scenario_envelopes,
            failed,
        },
    })
}

/// Three-region classification on a speed × depth lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    /// rpm
    pub speeds: Vec<f64>,
    /// m; node depths, each the lower edge of its cell
    pub depths: Vec<f64>,
    /// `classes[i][j]` for `speeds[i]`, `depths[j]`
    pub classes: Vec<Vec<RegionClass>>,
}

impl RegionGrid {
    pub fn count(&self, class: RegionClass) -> usize {
        self.classes.iter().flatten().filter(|&&c| c == class).count()
    }
}

/// Classifies a lattice of `n_speed` speeds across the band window by
/// `n_depth` depths from `depth_max / n_depth` to `depth_max`
/// (default: 1.2 × the largest upper edge).
pub fn build_region_grid(
    band: &UncertaintyBand,
    n_speed: usize,
    n_depth: usize,
    depth_max: Option<f64>,
) -> Result<RegionGrid> {
    if n_speed < 2 || n_depth < 1 {
        return Err(SldError::InvalidInput(
            "region grid needs at least 2 speeds and 1 depth".into(),
        ));
    }
    let top = depth_max.unwrap_or_else(|| 1.2 * band.high.iter().copied().fold(0.0, f64::max));
    if !(top > 0.0 && top.is_finite()) {
        return Err(SldError::InvalidInput("depth_max must be positive".into()));
    }
    let (lo, hi) = band.window();
    let speeds = linspace(lo, hi, n_speed);
    let step = top / n_depth as f64;
    let depths: Vec<f64> = (1..=n_depth).map(|j| step * j as f64).collect();
    let classes = speeds
        .iter()
        .map(|&n| {
            let (low, high) = band.edges_at(n)?;
            Ok(depths.iter().map(|&a| region_class(a, low, high)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(RegionGrid {
        speeds,
        depths,
        classes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub class: RegionClass,
    /// Fraction of scenarios under which the point is stable.
    pub p_stable: f64,
    /// Signed distance (m) from the depth to the nearest band edge,
    /// positive when that edge lies above the point.
    pub margin: f64,
}

/// Classifies `point` against the band and counts the scenarios under which
/// it is stable.
///
/// With min/max quantiles an unconditionally stable point has `p_stable = 1`
/// and an unconditionally unstable one `p_stable = 0`; with q05/q95 the class
/// only bounds the stable fraction loosely.
pub fn classify_probabilistic(point: &OperatingPoint, band: &UncertaintyBand) -> Result<StabilityVerdict> {
    let n = point.spindle_speed;
    let a = point.axial_depth;
    let (low, high) = band.edges_at(n)?;
    let class = region_class(a, low, high);
    let stable = band
        .scenario_envelopes
        .iter()
        .filter(|env| a < interpolate(&band.speeds, env, n))
        .count();
    let p_stable = stable as f64 / band.scenario_envelopes.len() as f64;
    let margin = match class {
        RegionClass::UnconditionallyStable => low - a,
        RegionClass::UnconditionallyUnstable => high - a,
        RegionClass::Conditional => {
            if a - low <= high - a {
                low - a
            } else {
                high - a
            }
        }
    };
    Ok(StabilityVerdict {
        class,
        p_stable,
        margin,
    })
}
