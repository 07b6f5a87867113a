use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::SystemMatrices;
use crate::error::{Result, SldError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSource {
    Fem,
    Ema,
    Assumed,
}

/// One tool-tip vibration mode. Damping is carried per mode as a ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// Hz
    pub natural_frequency: f64,
    pub damping_ratio: f64,
    /// N/m at the tool tip
    pub modal_stiffness: f64,
    pub direction: Direction,
    pub source: ModeSource,
}

impl Mode {
    pub fn new(
        natural_frequency: f64,
        damping_ratio: f64,
        modal_stiffness: f64,
        direction: Direction,
        source: ModeSource,
    ) -> Result<Self> {
        let mode = Mode {
            natural_frequency,
            damping_ratio,
            modal_stiffness,
            direction,
            source,
        };
        mode.validate()?;
        Ok(mode)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.natural_frequency > 0.0 && self.natural_frequency.is_finite()) {
            return Err(SldError::InvalidInput(
                "natural_frequency must be positive".into(),
            ));
        }
        if !(self.damping_ratio > 0.0 && self.damping_ratio < 1.0) {
            return Err(SldError::InvalidInput("damping_ratio out of range".into()));
        }
        if !(self.modal_stiffness > 0.0 && self.modal_stiffness.is_finite()) {
            return Err(SldError::InvalidInput(
                "modal_stiffness must be positive".into(),
            ));
        }
        Ok(())
    }

    /// rad/s
    pub fn omega(&self) -> f64 {
        2.0 * PI * self.natural_frequency
    }

    /// kg
    pub fn modal_mass(&self) -> f64 {
        self.modal_stiffness / (self.omega() * self.omega())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModeSet {
    pub modes: Vec<Mode>,
}

impl ModeSet {
    pub fn new(modes: Vec<Mode>) -> Self {
        ModeSet { modes }
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn in_direction(&self, direction: Direction) -> impl Iterator<Item = &Mode> {
        self.modes.iter().filter(move |m| m.direction == direction)
    }

    /// Lowest-stiffness mode in `direction`; ties go to the lower frequency.
    pub fn dominant(&self, direction: Direction) -> Option<&Mode> {
        self.in_direction(direction).min_by(|a, b| {
            a.modal_stiffness
                .total_cmp(&b.modal_stiffness)
                .then(a.natural_frequency.total_cmp(&b.natural_frequency))
        })
    }

    /// Lowest-stiffness mode over both directions.
    pub fn dominant_overall(&self) -> Option<&Mode> {
        self.modes.iter().min_by(|a, b| {
            a.modal_stiffness
                .total_cmp(&b.modal_stiffness)
                .then(a.natural_frequency.total_cmp(&b.natural_frequency))
        })
    }

    pub fn highest_frequency(&self) -> Option<f64> {
        self.modes
            .iter()
            .map(|m| m.natural_frequency)
            .max_by(f64::total_cmp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(SldError::InvalidInput("no modes".into()));
        }
        self.modes.iter().try_for_each(Mode::validate)
    }
}

/// Largest normwise backward error accepted from the eigen-solution.
const RESIDUAL_TOL: f64 = 1e-10;

/// Lowest `n_modes` bending modes of the clamped beam, replicated to X and Y.
///
/// Each mode shape is scaled to unit tip translation, so that
/// `k = ω²·φᵀMφ` is the stiffness seen at the tool tip.
pub fn solve_modes(system: &SystemMatrices, n_modes: usize, default_damping: f64) -> Result<ModeSet> {
    let n = system.retained_dofs();
    if n_modes == 0 || n_modes > n {
        return Err(SldError::InvalidInput(format!(
            "n_modes must lie in 1..={n}, got {n_modes}"
        )));
    }
    if !(default_damping > 0.0 && default_damping < 1.0) {
        return Err(SldError::InvalidInput("damping_ratio out of range".into()));
    }

    let m = &system.mass;
    let k = &system.stiffness;
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| SldError::Numeric("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| SldError::Numeric("mass factor is singular".into()))?;
    // reduce K φ = λ M φ to the standard form  A y = λ y  with  φ = L⁻ᵀ y
    let a = &l_inv * k * l_inv.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 10_000)
        .ok_or_else(|| SldError::Numeric("symmetric eigen-solver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let tip = system.tip_translation();
    let mut planar = Vec::with_capacity(n_modes);
    for &idx in order.iter().take(n_modes) {
        let lambda = eig.eigenvalues[idx];
        if !(lambda > 0.0) {
            return Err(SldError::Numeric(format!(
                "non-positive eigenvalue {lambda:e}; stiffness not positive definite"
            )));
        }
        let y: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
        let mut phi = l_inv.transpose() * y;
        check_residual(k, m, &phi, lambda)?;
        let tip_disp = phi[tip];
        if tip_disp.abs() < 1e-300 {
            return Err(SldError::Numeric(
                "mode has a tip node; modal stiffness undefined".into(),
            ));
        }
        phi /= tip_disp;
        let modal_mass = (phi.transpose() * m * &phi)[(0, 0)];
        let omega = lambda.sqrt();
        planar.push((omega / (2.0 * PI), omega * omega * modal_mass));
    }

    let mut modes = Vec::with_capacity(2 * n_modes);
    for direction in [Direction::X, Direction::Y] {
        for &(f, stiffness) in &planar {
            modes.push(Mode::new(
                f,
                default_damping,
                stiffness,
                direction,
                ModeSource::Assumed,
            )?);
        }
    }
    Ok(ModeSet { modes })
}

fn check_residual(k: &DMatrix<f64>, m: &DMatrix<f64>, phi: &DVector<f64>, lambda: f64) -> Result<()> {
    let k_phi = k * phi;
    let r = &k_phi - (m * phi) * lambda;
    // ‖Kφ‖ alone is tiny for low modes of stiff, slender tools
    let rel = r.norm() / ((k.norm() + lambda * m.norm()) * phi.norm());
    if rel > RESIDUAL_TOL {
        return Err(SldError::Numeric(format!(
            "eigenpair residual {rel:.3e} exceeds {RESIDUAL_TOL:e}"
        )));
    }
    Ok(())
}

/// Parses an experimental modal table:
/// `{"modes": [{"direction": "X", "f_hz": .., "zeta": .., "k_n_per_m": ..}]}`.
pub fn import_modal_table(document: &str) -> Result<ModeSet> {
    let root: Value = serde_json::from_str(document).map_err(|e| SldError::Parse {
        row: 0,
        field: "document".into(),
        message: e.to_string(),
    })?;
    let rows = root
        .get("modes")
        .ok_or_else(|| SldError::Parse {
            row: 0,
            field: "modes".into(),
            message: "missing field".into(),
        })?
        .as_array()
        .ok_or_else(|| SldError::Parse {
            row: 0,
            field: "modes".into(),
            message: "expected an array".into(),
        })?;
    if rows.is_empty() {
        return Err(SldError::InvalidInput("no modes".into()));
    }

    let mut modes = Vec::with_capacity(rows.len());
    for (row, entry) in rows.iter().enumerate() {
        let parse_err = |field: &str, message: &str| SldError::Parse {
            row,
            field: field.to_string(),
            message: message.to_string(),
        };
        let number = |field: &str| -> Result<f64> {
            match entry.get(field) {
                None => Err(parse_err(field, "missing field")),
                Some(v) => v
                    .as_f64()
                    .ok_or_else(|| parse_err(field, "expected a number")),
            }
        };
        let direction = match entry.get("direction").and_then(Value::as_str) {
            Some("X") | Some("x") => Direction::X,
            Some("Y") | Some("y") => Direction::Y,
            Some(_) => return Err(parse_err("direction", "expected \"X\" or \"Y\"")),
            None => return Err(parse_err("direction", "missing field")),
        };
        let f = number("f_hz")?;
        let zeta = number("zeta")?;
        let k = number("k_n_per_m")?;
        if !(f > 0.0 && f.is_finite()) {
            return Err(parse_err("f_hz", "natural_frequency must be positive"));
        }
        if !(zeta > 0.0 && zeta < 1.0) {
            return Err(parse_err("zeta", "damping_ratio out of range"));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(parse_err("k_n_per_m", "modal_stiffness must be positive"));
        }
        modes.push(Mode {
            natural_frequency: f,
            damping_ratio: zeta,
            modal_stiffness: k,
            direction,
            source: ModeSource::Ema,
        });
    }
    Ok(ModeSet { modes })
}

/// Serialises a mode set in the modal-table format.
pub fn modal_table_json(modes: &ModeSet) -> Value {
    let rows: Vec<Value> = modes
        .modes
        .iter()
        .map(|m| {
            serde_json::json!({
                "direction": m.direction,
                "f_hz": m.natural_frequency,
                "zeta": m.damping_ratio,
                "k_n_per_m": m.modal_stiffness,
                "source": m.source,
            })
        })
        .collect();
    serde_json::json!({ "modes": rows })
}
