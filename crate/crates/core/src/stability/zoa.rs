use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{interpolate, linspace, zone_annotate, Envelope, LobeCurve, LobePoint, SldResult};
use crate::cutting::{directional_factors, engagement_angles, AlphaMatrix, CoefficientSet, CutSpec};
use crate::error::{Result, SldError};
use crate::tool_model::Frf;

/// Eigenvalue Λ = Λ_R + iΛ_I of the oriented transfer function (N/m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChatterEigenvalue {
    pub lambda_re: f64,
    pub lambda_im: f64,
    /// Λ_I / Λ_R
    pub kappa: f64,
}

impl ChatterEigenvalue {
    pub fn from_complex(lambda: Complex64) -> Self {
        ChatterEigenvalue {
            lambda_re: lambda.re,
            lambda_im: lambda.im,
            kappa: lambda.im / lambda.re,
        }
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.lambda_re, self.lambda_im)
    }
}

/// Relative size of a₀ against a₁² below which the quadratic is treated as linear.
const DEGENERACY: f64 = 1e-14;

/// Roots of `a₀Λ² + a₁Λ + 1 = 0` with `a₀ = g_xx·g_yy·(α_xx·α_yy − α_xy·α_yx)` and
/// `a₁ = α_xx·g_xx + α_yy·g_yy`. Both roots are returned, whatever their sign.
pub fn chatter_eigenvalue(
    g_xx: Complex64,
    g_yy: Complex64,
    alpha: &AlphaMatrix,
) -> Result<Vec<ChatterEigenvalue>> {
    if g_xx == Complex64::new(0.0, 0.0) && g_yy == Complex64::new(0.0, 0.0) {
        return Err(SldError::Singular("both direct FRFs are zero".into()));
    }
    if !alpha.is_finite() {
        return Err(SldError::InvalidInput("directional factors not finite".into()));
    }
    let a0 = g_xx * g_yy * alpha.determinant();
    let a1 = g_xx * alpha.axx + g_yy * alpha.ayy;
    if a0.norm() <= DEGENERACY * a1.norm_sqr() {
        if a1 == Complex64::new(0.0, 0.0) {
            return Err(SldError::Singular(
                "oriented transfer function vanishes".into(),
            ));
        }
        return Ok(vec![ChatterEigenvalue::from_complex(-1.0 / a1)]);
    }
    // q = -(a1 + s·sqrt(a1² - 4a0))/2 with s chosen against cancellation;
    // the roots are q/a0 and 1/q
    let disc = (a1 * a1 - 4.0 * a0).sqrt();
    let plus = a1 + disc;
    let minus = a1 - disc;
    let q = if plus.norm() >= minus.norm() {
        -0.5 * plus
    } else {
        -0.5 * minus
    };
    Ok(vec![
        ChatterEigenvalue::from_complex(q / a0),
        ChatterEigenvalue::from_complex(1.0 / q),
    ])
}

/// Limiting axial depth `a = −2π·Λ_R/(N·Kt)·(1 + κ²)` in metres.
pub fn critical_depth(ev: &ChatterEigenvalue, n_teeth: u32, kt: f64) -> Result<f64> {
    if !(ev.lambda_re < 0.0) {
        return Err(SldError::InvalidInput(
            "eigenvalue real part must be negative for a positive depth".into(),
        ));
    }
    if !(kt > 0.0) || n_teeth == 0 {
        return Err(SldError::InvalidInput("kt and n_teeth must be positive".into()));
    }
    let a = -2.0 * PI * ev.lambda_re / (f64::from(n_teeth) * kt) * (1.0 + ev.kappa * ev.kappa);
    if !a.is_finite() {
        return Err(SldError::Numeric("depth limit is not finite".into()));
    }
    Ok(a)
}

/// Spindle speeds (rpm) of lobes `0..=k_max` for one chatter frequency.
pub fn spindle_speeds(omega_c: f64, kappa: f64, n_teeth: u32, k_max: u32) -> Result<Vec<f64>> {
    if !(omega_c > 0.0) {
        return Err(SldError::InvalidInput("chatter frequency must be positive".into()));
    }
    let psi = kappa.atan();
    let eps = PI - 2.0 * psi;
    let n = f64::from(n_teeth);
    (0..=k_max)
        .map(|k| {
            let phase = eps + 2.0 * PI * f64::from(k);
            if !(phase > 0.0) {
                return Err(SldError::InvalidInput("non-positive phase".into()));
            }
            let period = phase / omega_c;
            Ok(60.0 / (n * period))
        })
        .collect()
}

/// Frequency sweep and post-processing settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Hz
    pub f_min: f64,
    /// Hz
    pub f_max: f64,
    pub n_freq: usize,
    pub k_max: u32,
    /// Points deeper than this multiple of the shallowest limit are dropped.
    pub depth_cap_factor: f64,
    pub envelope_points: usize,
    /// Hz; falls back to the FRF peak when unset.
    pub dominant_frequency: Option<f64>,
}

pub const DEFAULT_N_FREQ: usize = 2000;
pub const DEFAULT_K_MAX: u32 = 5;
pub const DEFAULT_DEPTH_CAP_FACTOR: f64 = 10.0;
pub const DEFAULT_ENVELOPE_POINTS: usize = 1000;

impl SweepConfig {
    /// 0.5× to 1.5× the highest modal frequency.
    pub fn around(highest_mode_hz: f64) -> Self {
        SweepConfig {
            f_min: 0.5 * highest_mode_hz,
            f_max: 1.5 * highest_mode_hz,
            ..SweepConfig::new(0.0, 0.0)
        }
    }

    pub fn new(f_min: f64, f_max: f64) -> Self {
        SweepConfig {
            f_min,
            f_max,
            n_freq: DEFAULT_N_FREQ,
            k_max: DEFAULT_K_MAX,
            depth_cap_factor: DEFAULT_DEPTH_CAP_FACTOR,
            envelope_points: DEFAULT_ENVELOPE_POINTS,
            dominant_frequency: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_min > 0.0 && self.f_max > self.f_min && self.f_max.is_finite()) {
            return Err(SldError::InvalidInput(format!(
                "sweep window must satisfy 0 < f_min < f_max, got [{}, {}]",
                self.f_min, self.f_max
            )));
        }
        if self.n_freq < 2 {
            return Err(SldError::InvalidInput("n_freq must be at least 2".into()));
        }
        if !(self.depth_cap_factor >= 1.0) {
            return Err(SldError::InvalidInput("depth_cap_factor must be >= 1".into()));
        }
        if self.envelope_points < 2 {
            return Err(SldError::InvalidInput("envelope_points must be at least 2".into()));
        }
        Ok(())
    }

    pub fn frequencies(&self) -> Vec<f64> {
        linspace(self.f_min, self.f_max, self.n_freq)
    }
}

/// Selected root at one sweep frequency.
#[derive(Debug, Clone, Copy)]
struct SweepSample {
    omega: f64,
    kappa: f64,
    depth: f64,
    /// Continuity-tracked root branch.
    branch: usize,
}

/// Reorders each sample's roots so that index `b` follows the same branch
/// across the sweep. The closed-form root ordering can swap between
/// neighbouring frequencies, so branches are matched to their predecessors
/// by distance.
fn track_branches(roots: &mut [Vec<ChatterEigenvalue>]) {
    for i in 1..roots.len() {
        let (head, tail) = roots.split_at_mut(i);
        let prev = &head[i - 1];
        let cur = &mut tail[0];
        if prev.len() == 2 && cur.len() == 2 {
            let d = |a: &ChatterEigenvalue, b: &ChatterEigenvalue| (a.as_complex() - b.as_complex()).norm();
            let keep = d(&cur[0], &prev[0]) + d(&cur[1], &prev[1]);
            let swap = d(&cur[0], &prev[1]) + d(&cur[1], &prev[0]);
            if swap < keep {
                cur.swap(0, 1);
            }
        }
    }
}

/// Keeps the roots with Λ_R < 0 and picks the one with the smallest depth.
fn select_root(roots: &[ChatterEigenvalue], f_hz: f64, n_teeth: u32, kt: f64) -> Result<Option<SweepSample>> {
    let mut best: Option<SweepSample> = None;
    for (branch, ev) in roots.iter().enumerate() {
        if !(ev.lambda_re < 0.0) {
            continue;
        }
        let depth = critical_depth(ev, n_teeth, kt)?;
        if best.is_none_or(|b| depth < b.depth) {
            best = Some(SweepSample {
                omega: 2.0 * PI * f_hz,
                kappa: ev.kappa,
                depth,
                branch,
            });
        }
    }
    Ok(best)
}

/// Zero-order stability lobes over the sweep window.
pub fn zoa_lobes(
    frf: &Frf,
    cut: &CutSpec,
    coeffs: &CoefficientSet,
    sweep: &SweepConfig,
) -> Result<SldResult> {
    sweep.validate()?;
    coeffs.validate()?;
    let (phi_st, phi_ex) = engagement_angles(cut)?;
    let alpha = directional_factors(phi_st, phi_ex, coeffs.kr)?;
    let n_teeth = cut.n_teeth;

    let freqs = sweep.frequencies();
    // index-ordered collect keeps the result identical to a sequential loop
    let mut roots: Vec<Vec<ChatterEigenvalue>> = freqs
        .par_iter()
        .map(|&f| {
            let (g_xx, g_yy) = frf.at(f)?;
            chatter_eigenvalue(g_xx, g_yy, &alpha)
        })
        .collect::<Result<_>>()?;
    track_branches(&mut roots);
    let samples: Vec<Option<SweepSample>> = roots
        .iter()
        .zip(&freqs)
        .map(|(r, &f)| select_root(r, f, n_teeth, coeffs.kt))
        .collect::<Result<_>>()?;

    let min_depth = samples
        .iter()
        .flatten()
        .map(|s| s.depth)
        .fold(f64::INFINITY, f64::min);
    if !min_depth.is_finite() {
        return Err(SldError::EmptySld(format!(
            "no eigenvalue with negative real part in [{}, {}] Hz; widen the sweep",
            sweep.f_min, sweep.f_max
        )));
    }
    let depth_cap = sweep.depth_cap_factor * min_depth;

    let mut lobes = Vec::new();
    for k in 0..=sweep.k_max {
        let mut run: Vec<LobePoint> = Vec::new();
        let mut run_branch = usize::MAX;
        let mut direction = 0.0f64;
        let mut flush = |run: &mut Vec<LobePoint>| {
            if run.len() >= 2 {
                lobes.push(LobeCurve {
                    lobe_index: k,
                    points: std::mem::take(run),
                });
            } else {
                run.clear();
            }
        };
        for sample in &samples {
            let Some(s) = sample.filter(|s| s.depth <= depth_cap) else {
                flush(&mut run);
                continue;
            };
            let speed = spindle_speeds(s.omega, s.kappa, n_teeth, k)?[k as usize];
            let point = LobePoint {
                chatter_frequency: s.omega,
                spindle_speed: speed,
                depth_limit: s.depth,
            };
            if let Some(last) = run.last() {
                let step = (speed - last.spindle_speed).signum();
                let monotone = speed != last.spindle_speed
                    && (run.len() < 2 || step == direction);
                if s.branch != run_branch || !monotone {
                    flush(&mut run);
                } else {
                    direction = step;
                }
            }
            if run.is_empty() {
                run_branch = s.branch;
                direction = 0.0;
            }
            run.push(point);
        }
        flush(&mut run);
    }
    if lobes.is_empty() {
        return Err(SldError::EmptySld(
            "every lobe point lies above the depth cap; widen the sweep or raise the cap".into(),
        ));
    }

    let envelope = build_envelope(&lobes, sweep.envelope_points, depth_cap);
    let f_dominant = sweep
        .dominant_frequency
        .unwrap_or_else(|| frf.peak_frequency());
    let zone_labels = zone_annotate(envelope.window(), f_dominant, n_teeth);
    Ok(SldResult {
        lobes,
        envelope,
        zone_labels,
        depth_cap,
    })
}

/// Pointwise minimum of all lobe curves on a uniform speed grid. Speeds no
/// curve reaches take the depth cap.
fn build_envelope(lobes: &[LobeCurve], n_points: usize, depth_cap: f64) -> Envelope {
    // each curve sorted by speed for interpolation
    let curves: Vec<(Vec<f64>, Vec<f64>)> = lobes
        .iter()
        .map(|c| {
            let mut pts: Vec<(f64, f64)> = c
                .points
                .iter()
                .map(|p| (p.spindle_speed, p.depth_limit))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            pts.into_iter().unzip()
        })
        .collect();
    let lo = curves
        .iter()
        .map(|c| c.0[0])
        .fold(f64::INFINITY, f64::min);
    let hi = curves
        .iter()
        .map(|c| *c.0.last().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    let speeds = linspace(lo, hi, n_points);
    let depths = speeds
        .iter()
        .map(|&n| {
            curves
                .iter()
                .filter(|(s, _)| n >= s[0] && n <= *s.last().unwrap())
                .map(|(s, a)| interpolate(s, a, n))
                .fold(depth_cap, f64::min)
        })
        .collect();
    Envelope { speeds, depths }
}
