//! Full-discretisation Floquet check of a single operating point.
//!
//! The tool tip is reduced to its dominant (lowest-stiffness) mode in each
//! flexible direction, giving the periodic delay equation
//!
//! ```text
//! ẋ(t) = A₀·x(t) + B(t)·(x(t) − x(t − T))
//! ```
//!
//! with `x = [q; q̇]`, `T` the tooth period and `B(t)` the engagement-dependent
//! cutting stiffness. One period is split into `m` steps; on each step the
//! coefficient matrix, the present state and the delayed state are
//! interpolated linearly, which yields a linear map between augmented state
//! vectors. The product of those maps over one period is the Floquet
//! transition matrix, and its spectral radius decides stability.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur};

use super::OperatingPoint;
use crate::cutting::{engagement_angles, instantaneous_factors, CoefficientSet, CutSpec};
use crate::error::{Result, SldError};
use crate::tool_model::{Direction, Mode, ModeSet};

pub const DEFAULT_M_INTERVALS: usize = 40;
const MIN_M_INTERVALS: usize = 20;
const SCHUR_MAX_ITER: usize = 100_000;

/// Tuning knobs for [`fdm_spectral_radius`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdmOptions {
    pub m_intervals: usize,
}

impl Default for FdmOptions {
    fn default() -> Self {
        FdmOptions {
            m_intervals: DEFAULT_M_INTERVALS,
        }
    }
}

/// Spectral radius of the one-tooth-period transition matrix at `point`.
/// Values below 1 mean asymptotically stable cutting.
///
/// Depth zero is accepted here (free vibration), unlike [`OperatingPoint::new`].
pub fn fdm_spectral_radius(
    point: &OperatingPoint,
    modes: &ModeSet,
    cut: &CutSpec,
    coeffs: &CoefficientSet,
    m_intervals: usize,
) -> Result<f64> {
    if m_intervals < MIN_M_INTERVALS {
        return Err(SldError::InvalidInput(format!(
            "m_intervals must be at least {MIN_M_INTERVALS}"
        )));
    }
    if !(point.spindle_speed > 0.0) || !(point.axial_depth >= 0.0) {
        return Err(SldError::InvalidInput(
            "spindle speed must be positive and depth non-negative".into(),
        ));
    }
    let (phi_st, phi_ex) = engagement_angles(cut)?;
    let dominant: Vec<(usize, &Mode)> = [Direction::X, Direction::Y]
        .iter()
        .enumerate()
        .filter_map(|(axis, &d)| modes.dominant(d).map(|m| (axis, m)))
        .collect();
    if dominant.is_empty() {
        return Err(SldError::InvalidInput("no modes for the Floquet model".into()));
    }
    for (_, m) in &dominant {
        m.validate()?;
    }

    let d = dominant.len();
    let s = 2 * d;
    let n_teeth = cut.n_teeth;
    let period = 60.0 / (point.spindle_speed * f64::from(n_teeth));
    let h = period / m_intervals as f64;
    let spin = 2.0 * PI * point.spindle_speed / 60.0;

    // A₀ for decoupled modal oscillators
    let mut a0 = DMatrix::<f64>::zeros(s, s);
    for (i, (_, mode)) in dominant.iter().enumerate() {
        let w = mode.omega();
        a0[(i, d + i)] = 1.0;
        a0[(d + i, i)] = -w * w;
        a0[(d + i, d + i)] = -2.0 * mode.damping_ratio * w;
    }
    let inv_mass: Vec<f64> = dominant.iter().map(|(_, m)| 1.0 / m.modal_mass()).collect();
    let scale = 0.5 * point.axial_depth * coeffs.kt;

    // B(t): lower-left block M⁻¹·H(t)
    let cutting_matrix = |t: f64| -> DMatrix<f64> {
        let mut b = DMatrix::<f64>::zeros(s, s);
        if scale == 0.0 {
            return b;
        }
        let mut sum = [[0.0; 2]; 2];
        for j in 0..n_teeth {
            let phi = (spin * t + 2.0 * PI * f64::from(j) / f64::from(n_teeth)).rem_euclid(2.0 * PI);
            if phi >= phi_st && phi < phi_ex {
                let a = instantaneous_factors(phi, coeffs.kr);
                sum[0][0] += a.axx;
                sum[0][1] += a.axy;
                sum[1][0] += a.ayx;
                sum[1][1] += a.ayy;
            }
        }
        for (r, (axis_r, _)) in dominant.iter().enumerate() {
            for (c, (axis_c, _)) in dominant.iter().enumerate() {
                b[(d + r, c)] = inv_mass[r] * scale * sum[*axis_r][*axis_c];
            }
        }
        b
    };

    let (phi0, p0, p1, p2) = step_integrals(&a0, h);
    let identity = DMatrix::<f64>::identity(s, s);

    // augmented vector: [x_i (s); q_{i-1}; …; q_{i-m}] with q the d displacements
    let dim = s + m_intervals * d;
    let mut transition = DMatrix::<f64>::identity(dim, dim);
    let mut b_now = cutting_matrix(0.0);
    for i in 0..m_intervals {
        let b_next = cutting_matrix((i + 1) as f64 * h);
        let db = &b_next - &b_now;
        let c1 = &p1 * &b_now + &p2 * &db;
        let c0 = &p0 * &b_now + &p1 * &db - &p1 * &b_now - &p2 * &db;
        let lhs = (&identity - &c1)
            .try_inverse()
            .ok_or_else(|| SldError::Numeric("step matrix is singular".into()))?;

        let mut step = DMatrix::<f64>::zeros(dim, dim);
        let cur = &lhs * (&phi0 + &c0);
        step.view_mut((0, 0), (s, s)).copy_from(&cur);
        // delayed displacement columns: q_{i+1-m} sits in slot m-1, q_{i-m} in slot m
        let slot = |k: usize| s + (k - 1) * d;
        let lag_new = -(&lhs * c1.columns(0, d));
        let lag_old = -(&lhs * c0.columns(0, d));
        {
            let mut v = step.view_mut((0, slot(m_intervals - 1)), (s, d));
            v += &lag_new;
        }
        {
            let mut v = step.view_mut((0, slot(m_intervals)), (s, d));
            v += &lag_old;
        }
        // shift register: q_i enters slot 1, slot k moves to k+1
        for r in 0..d {
            step[(slot(1) + r, r)] = 1.0;
        }
        for k in 1..m_intervals {
            for r in 0..d {
                step[(slot(k + 1) + r, slot(k) + r)] = 1.0;
            }
        }
        transition = step * transition;
        b_now = b_next;
    }

    spectral_radius(transition)
}

/// e^{A h} together with ∫₀ʰ e^{A(h−τ)}·(τ/h)ᵖ dτ for p = 0, 1, 2, all read
/// off one block-triangular exponential.
fn step_integrals(a: &DMatrix<f64>, h: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let s = a.nrows();
    let mut big = DMatrix::<f64>::zeros(4 * s, 4 * s);
    big.view_mut((0, 0), (s, s)).copy_from(&(a * h));
    for blk in 0..3 {
        for r in 0..s {
            big[(blk * s + r, (blk + 1) * s + r)] = h;
        }
    }
    let e = big.exp();
    let phi0 = e.view((0, 0), (s, s)).into_owned();
    let p0 = e.view((0, s), (s, s)).into_owned();
    let p1 = e.view((0, 2 * s), (s, s)).into_owned() / h;
    let p2 = e.view((0, 3 * s), (s, s)).into_owned() * (2.0 / (h * h));
    (phi0, p0, p1, p2)
}

fn spectral_radius(m: DMatrix<f64>) -> Result<f64> {
    let dim = m.nrows();
    let schur = Schur::try_new(m, f64::EPSILON, SCHUR_MAX_ITER).ok_or_else(|| {
        SldError::Numeric(format!(
            "Schur iteration did not converge within {SCHUR_MAX_ITER} iterations ({dim}x{dim} matrix)"
        ))
    })?;
    let rho = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if !rho.is_finite() {
        return Err(SldError::Numeric("spectral radius is not finite".into()));
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutting::CoefficientSource;
    use crate::tool_model::ModeSource;

    fn modes() -> ModeSet {
        ModeSet::new(vec![
            Mode::new(800.0, 0.02, 2e7, Direction::X, ModeSource::Ema).unwrap(),
            Mode::new(800.0, 0.02, 2e7, Direction::Y, ModeSource::Ema).unwrap(),
        ])
    }

    fn coeffs() -> CoefficientSet {
        CoefficientSet::exact(6.0e8, 0.3, CoefficientSource::Catalog).unwrap()
    }

    #[test]
    fn step_integrals_match_scalar_closed_forms() {
        // for a scalar a: P0 = (e^{ah}-1)/a, P1 = (e^{ah}-1-ah)/(a²h),
        // P2 = 2(e^{ah}-1-ah-(ah)²/2)/(a³h²)
        let a = DMatrix::from_element(1, 1, -3.0);
        let h = 0.1;
        let (phi0, p0, p1, p2) = step_integrals(&a, h);
        let x: f64 = -0.3;
        let ex = x.exp();
        let an = -3.0f64;
        assert!((phi0[(0, 0)] - ex).abs() < 1e-14);
        assert!((p0[(0, 0)] - (ex - 1.0) / an).abs() < 1e-14);
        assert!((p1[(0, 0)] - (ex - 1.0 - x) / (an * an * h)).abs() < 1e-13);
        assert!((p2[(0, 0)] - 2.0 * (ex - 1.0 - x - x * x / 2.0) / (an.powi(3) * h * h)).abs() < 1e-12);
    }

    #[test]
    fn free_vibration_multiplier() {
        let point = OperatingPoint {
            spindle_speed: 9600.0,
            axial_depth: 0.0,
        };
        let rho = fdm_spectral_radius(&point, &modes(), &CutSpec::slot(2), &coeffs(), 40).unwrap();
        let t: f64 = 60.0 / (9600.0 * 2.0);
        assert!((t - 3.125e-3).abs() < 1e-15);
        let expect = (-0.02 * 2.0 * PI * 800.0 * t).exp();
        assert!((rho - expect).abs() <= 0.005 * expect, "{rho} vs {expect}");
        assert!((expect - 0.7304).abs() < 1e-4);
    }

    #[test]
    fn too_few_intervals_rejected() {
        let point = OperatingPoint {
            spindle_speed: 9600.0,
            axial_depth: 1e-3,
        };
        assert!(fdm_spectral_radius(&point, &modes(), &CutSpec::slot(2), &coeffs(), 10).is_err());
    }

    #[test]
    fn radius_grows_with_depth() {
        let at = |a: f64| {
            fdm_spectral_radius(
                &OperatingPoint {
                    spindle_speed: 9000.0,
                    axial_depth: a,
                },
                &modes(),
                &CutSpec::slot(2),
                &coeffs(),
                40,
            )
            .unwrap()
        };
        assert!(at(1e-4) < 1.0);
        assert!(at(2e-2) > 1.0);
    }
}
