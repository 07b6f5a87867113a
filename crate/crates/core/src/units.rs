//! Conversions between the file-format units (mm, MPa, GPa, rpm, Hz) and SI.
//!
//! Every boundary crossing goes through these helpers so that each value is
//! converted exactly once.

use std::f64::consts::PI;

pub fn mm_to_m(mm: f64) -> f64 {
    mm * 1e-3
}

pub fn m_to_mm(m: f64) -> f64 {
    m * 1e3
}

pub fn mpa_to_pa(mpa: f64) -> f64 {
    mpa * 1e6
}

pub fn gpa_to_pa(gpa: f64) -> f64 {
    gpa * 1e9
}

pub fn hz_to_rad_s(hz: f64) -> f64 {
    2.0 * PI * hz
}

pub fn rad_s_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// Tooth passing period in seconds.
pub fn tooth_period(spindle_rpm: f64, n_teeth: u32) -> f64 {
    60.0 / (spindle_rpm * f64::from(n_teeth))
}

/// Tooth passing frequency in Hz.
pub fn tooth_passing_hz(spindle_rpm: f64, n_teeth: u32) -> f64 {
    spindle_rpm * f64::from(n_teeth) / 60.0
}

/// Spindle speed whose tooth passing frequency equals `hz`.
pub fn rpm_for_tooth_passing(hz: f64, n_teeth: u32) -> f64 {
    60.0 * hz / f64::from(n_teeth)
}
