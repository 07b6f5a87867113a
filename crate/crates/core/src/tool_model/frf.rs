use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Direction, ModeSet};
use crate::error::{Result, SldError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrfProvenance {
    Synthesized,
    Measured,
}

/// Direct tool-tip compliance in X and Y (m/N) on a frequency grid (Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct Frf {
    pub frequencies: Vec<f64>,
    pub g_xx: Vec<Complex64>,
    pub g_yy: Vec<Complex64>,
    pub provenance: FrfProvenance,
}

impl Frf {
    pub fn new(
        frequencies: Vec<f64>,
        g_xx: Vec<Complex64>,
        g_yy: Vec<Complex64>,
        provenance: FrfProvenance,
    ) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(SldError::InvalidInput("no samples".into()));
        }
        if g_xx.len() != frequencies.len() || g_yy.len() != frequencies.len() {
            return Err(SldError::InvalidInput(
                "FRF columns differ in length".into(),
            ));
        }
        if !strictly_increasing(&frequencies) {
            return Err(SldError::InvalidInput(
                "frequencies not strictly increasing".into(),
            ));
        }
        Ok(Frf {
            frequencies,
            g_xx,
            g_yy,
            provenance,
        })
    }

    pub fn f_min(&self) -> f64 {
        self.frequencies[0]
    }

    pub fn f_max(&self) -> f64 {
        *self.frequencies.last().expect("non-empty grid")
    }

    /// Values at `f_hz`, linearly interpolated between grid points. Grid
    /// points return their stored values exactly.
    pub fn at(&self, f_hz: f64) -> Result<(Complex64, Complex64)> {
        let grid = &self.frequencies;
        if !(f_hz >= self.f_min() && f_hz <= self.f_max()) {
            return Err(SldError::OutOfRange(format!(
                "{f_hz} Hz outside FRF grid [{}, {}] Hz",
                self.f_min(),
                self.f_max()
            )));
        }
        let hi = grid.partition_point(|&g| g < f_hz);
        if grid[hi] == f_hz {
            return Ok((self.g_xx[hi], self.g_yy[hi]));
        }
        let lo = hi - 1;
        let t = (f_hz - grid[lo]) / (grid[hi] - grid[lo]);
        let lerp = |a: Complex64, b: Complex64| a + (b - a) * t;
        Ok((
            lerp(self.g_xx[lo], self.g_xx[hi]),
            lerp(self.g_yy[lo], self.g_yy[hi]),
        ))
    }

    /// Grid frequency of the largest direct compliance magnitude.
    pub fn peak_frequency(&self) -> f64 {
        let mut best = (0, f64::NEG_INFINITY);
        for i in 0..self.frequencies.len() {
            let mag = self.g_xx[i].norm().max(self.g_yy[i].norm());
            if mag > best.1 {
                best = (i, mag);
            }
        }
        self.frequencies[best.0]
    }

    /// Multiplies both diagonal terms by `c`.
    pub fn scaled(&self, c: f64) -> Frf {
        Frf {
            frequencies: self.frequencies.clone(),
            g_xx: self.g_xx.iter().map(|g| g * c).collect(),
            g_yy: self.g_yy.iter().map(|g| g * c).collect(),
            provenance: self.provenance,
        }
    }
}

fn strictly_increasing(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite()) && values.windows(2).all(|w| w[1] > w[0])
}

/// Modal superposition of the direct compliance in each direction:
/// `G(ω) = Σ (1/kᵢ)·ωᵢ² / (ωᵢ² − ω² + 2iζᵢωᵢω)`.
pub fn synthesize_frf(modes: &ModeSet, frequencies: &[f64]) -> Result<Frf> {
    if modes.is_empty() {
        return Err(SldError::InvalidInput("no modes".into()));
    }
    modes.validate()?;
    if frequencies.iter().any(|&f| f < 0.0) {
        return Err(SldError::InvalidInput(
            "frequencies must be non-negative".into(),
        ));
    }
    let direct = |direction: Direction| -> Vec<Complex64> {
        frequencies
            .iter()
            .map(|&f| {
                let w = 2.0 * std::f64::consts::PI * f;
                modes
                    .in_direction(direction)
                    .map(|m| {
                        let wn = m.omega();
                        let den = Complex64::new(wn * wn - w * w, 2.0 * m.damping_ratio * wn * w);
                        Complex64::new(wn * wn / m.modal_stiffness, 0.0) / den
                    })
                    .sum()
            })
            .collect()
    };
    Frf::new(
        frequencies.to_vec(),
        direct(Direction::X),
        direct(Direction::Y),
        FrfProvenance::Synthesized,
    )
}

pub const FRF_CSV_HEADER: [&str; 5] = ["freq_hz", "re_gxx", "im_gxx", "re_gyy", "im_gyy"];

/// Parses a measured FRF from CSV with header `freq_hz,re_gxx,im_gxx,re_gyy,im_gyy`.
pub fn import_frf_table(document: &str) -> Result<Frf> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(document.as_bytes());
    let headers = reader.headers().map_err(|e| SldError::Parse {
        row: 0,
        field: "header".into(),
        message: e.to_string(),
    })?;
    let mut columns = [0usize; 5];
    for (slot, name) in columns.iter_mut().zip(FRF_CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| SldError::Parse {
                row: 0,
                field: name.to_string(),
                message: "missing column".into(),
            })?;
    }

    let mut frequencies = Vec::new();
    let mut g_xx = Vec::new();
    let mut g_yy = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| SldError::Parse {
            row,
            field: "record".into(),
            message: e.to_string(),
        })?;
        let mut vals = [0.0; 5];
        for ((v, &col), name) in vals.iter_mut().zip(&columns).zip(FRF_CSV_HEADER) {
            let text = record.get(col).ok_or_else(|| SldError::Parse {
                row,
                field: name.into(),
                message: "missing value".into(),
            })?;
            *v = text.parse::<f64>().map_err(|_| SldError::Parse {
                row,
                field: name.into(),
                message: format!("not a number: {text:?}"),
            })?;
        }
        if let Some(&prev) = frequencies.last() {
            if !(vals[0] > prev) {
                return Err(SldError::Parse {
                    row,
                    field: "freq_hz".into(),
                    message: "frequencies not strictly increasing".into(),
                });
            }
        }
        frequencies.push(vals[0]);
        g_xx.push(Complex64::new(vals[1], vals[2]));
        g_yy.push(Complex64::new(vals[3], vals[4]));
    }
    if frequencies.is_empty() {
        return Err(SldError::InvalidInput("no samples".into()));
    }
    Frf::new(frequencies, g_xx, g_yy, FrfProvenance::Measured)
}

/// Writes an FRF in the CSV format accepted by [`import_frf_table`].
pub fn frf_to_csv(frf: &Frf) -> String {
    let mut out = FRF_CSV_HEADER.join(",");
    out.push('\n');
    for i in 0..frf.frequencies.len() {
        out.push_str(&format!(
            "{:?},{:?},{:?},{:?},{:?}\n",
            frf.frequencies[i], frf.g_xx[i].re, frf.g_xx[i].im, frf.g_yy[i].re, frf.g_yy[i].im
        ));
    }
    out
}
