//! Python bindings: tool modes, zero-order lobes, the FDM check and whole
//! jobs with their uncertainty band.

use std::path::Path;

use pyo3::exceptions::{PyArithmeticError, PyLookupError, PyOSError, PyValueError};
use pyo3::prelude::*;
use sld_core::cutting::{self, CoefficientDb, CoefficientSet, CoefficientSource, CutSpec, MillingMode};
use sld_core::io::{self as sio, JobFile, JobResult, DEFAULT_COEFFICIENT_DB};
use sld_core::stability::{self, OperatingPoint, SldResult, Stability, SweepConfig};
use sld_core::tool_model::{self, Direction, FemConfig, ModeSource, ToolFile};
use sld_core::uncertainty::{classify_probabilistic, RegionClass};
use sld_core::{units, ErrorKind, SldError};

fn py_err(e: SldError) -> PyErr {
    let msg = e.to_string();
    match e.kind() {
        ErrorKind::Validation | ErrorKind::OutOfRange => PyValueError::new_err(msg),
        ErrorKind::NotFound => PyLookupError::new_err(msg),
        ErrorKind::Numeric => PyArithmeticError::new_err(msg),
        ErrorKind::Io => PyOSError::new_err(msg),
    }
}

/// One vibration mode at the tool tip.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Mode {
    /// Hz
    #[pyo3(get)]
    natural_frequency: f64,
    #[pyo3(get)]
    damping_ratio: f64,
    /// N/m
    #[pyo3(get)]
    modal_stiffness: f64,
    /// "X" or "Y"
    #[pyo3(get)]
    direction: String,
}

#[pymethods]
impl Mode {
    #[new]
    #[pyo3(signature = (natural_frequency, damping_ratio, modal_stiffness, direction = "X"))]
    fn new(natural_frequency: f64, damping_ratio: f64, modal_stiffness: f64, direction: &str) -> PyResult<Self> {
        let m = Mode {
            natural_frequency,
            damping_ratio,
            modal_stiffness,
            direction: direction.to_uppercase(),
        };
        m.to_core()?;
        Ok(m)
    }

    fn __repr__(&self) -> String {
        format!(
            "Mode({} Hz, zeta={}, k={} N/m, {})",
            self.natural_frequency, self.damping_ratio, self.modal_stiffness, self.direction
        )
    }
}

impl Mode {
    fn to_core(&self) -> PyResult<tool_model::Mode> {
        let direction = match self.direction.as_str() {
            "X" => Direction::X,
            "Y" => Direction::Y,
            other => return Err(PyValueError::new_err(format!("direction must be X or Y, got {other:?}"))),
        };
        tool_model::Mode::new(
            self.natural_frequency,
            self.damping_ratio,
            self.modal_stiffness,
            direction,
            ModeSource::Ema,
        )
        .map_err(py_err)
    }

    fn from_core(m: &tool_model::Mode) -> Self {
        Mode {
            natural_frequency: m.natural_frequency,
            damping_ratio: m.damping_ratio,
            modal_stiffness: m.modal_stiffness,
            direction: format!("{:?}", m.direction),
        }
    }
}

fn mode_set(modes: &[Mode]) -> PyResult<tool_model::ModeSet> {
    Ok(tool_model::ModeSet::new(
        modes.iter().map(Mode::to_core).collect::<PyResult<_>>()?,
    ))
}

fn cut_spec(milling_mode: &str, radial_immersion: f64, n_teeth: u32) -> PyResult<CutSpec> {
    let milling_mode = match milling_mode {
        "slot" => MillingMode::Slot,
        "up" => MillingMode::Up,
        "down" => MillingMode::Down,
        other => return Err(PyValueError::new_err(format!("unknown milling mode {other:?}"))),
    };
    let cut = CutSpec {
        milling_mode,
        radial_immersion,
        n_teeth,
    };
    cut.validate().map_err(py_err)?;
    Ok(cut)
}

/// FEM modes of a tool given as a JSON tool description (mm, GPa).
#[pyfunction]
#[pyo3(signature = (tool_json, elements_per_segment = 8, n_modes = 3, damping_ratio = 0.02))]
fn tool_modes(tool_json: &str, elements_per_segment: usize, n_modes: usize, damping_ratio: f64) -> PyResult<Vec<Mode>> {
    let tool = ToolFile::from_json(tool_json).and_then(|f| f.to_tool()).map_err(py_err)?;
    let config = FemConfig {
        elements_per_segment,
        n_modes,
        default_damping: damping_ratio,
    };
    let modes = tool_model::tool_modes(&tool, &config).map_err(py_err)?;
    Ok(modes.modes.iter().map(Mode::from_core).collect())
}

/// Averaged directional factors `(axx, axy, ayx, ayy)` over an engagement arc.
#[pyfunction]
fn directional_factors(phi_start: f64, phi_exit: f64, kr: f64) -> PyResult<(f64, f64, f64, f64)> {
    let a = cutting::directional_factors(phi_start, phi_exit, kr).map_err(py_err)?;
    Ok((a.axx, a.axy, a.ayx, a.ayy))
}

/// Deterministic stability lobes.
#[pyclass(frozen)]
struct Lobes {
    inner: SldResult,
}

#[pymethods]
impl Lobes {
    /// `[(k, [(n_rpm, a_lim_mm), ...]), ...]`
    #[getter]
    fn lobes(&self) -> Vec<(u32, Vec<(f64, f64)>)> {
        self.inner
            .lobes
            .iter()
            .map(|l| {
                let pts = l.points.iter().map(|p| (p.spindle_speed, units::m_to_mm(p.depth_limit))).collect();
                (l.lobe_index, pts)
            })
            .collect()
    }

    /// `(n_rpm, a_mm)` sample lists of the lower envelope.
    #[getter]
    fn envelope(&self) -> (Vec<f64>, Vec<f64>) {
        let e = &self.inner.envelope;
        (e.speeds.clone(), e.depths.iter().map(|&d| units::m_to_mm(d)).collect())
    }

    /// Envelope depth in mm at `n_rpm`.
    fn depth_at(&self, n_rpm: f64) -> PyResult<f64> {
        self.inner.envelope.at(n_rpm).map(units::m_to_mm).map_err(py_err)
    }

    /// `"stable"` or `"unstable"`; a point on the envelope counts as unstable.
    fn classify(&self, n_rpm: f64, ap_mm: f64) -> PyResult<&'static str> {
        let p = OperatingPoint::new(n_rpm, units::mm_to_m(ap_mm)).map_err(py_err)?;
        Ok(match stability::classify_deterministic(&p, &self.inner).map_err(py_err)? {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
        })
    }
}

/// Zero-order lobes for modal dynamics. `kt` in MPa.
#[pyfunction]
#[pyo3(signature = (
    modes, kt_mpa, kr, n_teeth, f_min_hz, f_max_hz,
    milling_mode = "slot", radial_immersion = 1.0, n_freq = 2000, k_max = 5
))]
#[allow(clippy::too_many_arguments)]
fn stability_lobes(
    modes: Vec<Mode>,
    kt_mpa: f64,
    kr: f64,
    n_teeth: u32,
    f_min_hz: f64,
    f_max_hz: f64,
    milling_mode: &str,
    radial_immersion: f64,
    n_freq: usize,
    k_max: u32,
) -> PyResult<Lobes> {
    let set = mode_set(&modes)?;
    let cut = cut_spec(milling_mode, radial_immersion, n_teeth)?;
    let coeffs = CoefficientSet::exact(units::mpa_to_pa(kt_mpa), kr, CoefficientSource::Catalog).map_err(py_err)?;
    let mut sweep = SweepConfig::new(f_min_hz, f_max_hz);
    sweep.n_freq = n_freq;
    sweep.k_max = k_max;
    let frf = tool_model::synthesize_frf(&set, &sweep.frequencies()).map_err(py_err)?;
    let inner = stability::zoa_lobes(&frf, &cut, &coeffs, &sweep).map_err(py_err)?;
    Ok(Lobes { inner })
}

/// Spectral radius of the full-discretization transition matrix; below 1 is stable.
#[pyfunction]
#[pyo3(signature = (
    modes, kt_mpa, kr, n_teeth, n_rpm, ap_mm,
    milling_mode = "slot", radial_immersion = 1.0, m_intervals = 40
))]
#[allow(clippy::too_many_arguments)]
fn fdm_spectral_radius(
    modes: Vec<Mode>,
    kt_mpa: f64,
    kr: f64,
    n_teeth: u32,
    n_rpm: f64,
    ap_mm: f64,
    milling_mode: &str,
    radial_immersion: f64,
    m_intervals: usize,
) -> PyResult<f64> {
    let set = mode_set(&modes)?;
    let cut = cut_spec(milling_mode, radial_immersion, n_teeth)?;
    let coeffs = CoefficientSet::exact(units::mpa_to_pa(kt_mpa), kr, CoefficientSource::Catalog).map_err(py_err)?;
    let point = OperatingPoint {
        spindle_speed: n_rpm,
        axial_depth: units::mm_to_m(ap_mm),
    };
    stability::fdm_spectral_radius(&point, &set, &cut, &coeffs, m_intervals).map_err(py_err)
}

/// Probabilistic verdict for one operating point.
#[pyclass(frozen, get_all)]
struct Verdict {
    /// "unconditionally_stable", "conditional" or "unconditionally_unstable"
    region: String,
    p_stable: f64,
    margin_mm: f64,
}

#[pymethods]
impl Verdict {
    fn __repr__(&self) -> String {
        format!("Verdict({}, p_stable={}, margin_mm={})", self.region, self.p_stable, self.margin_mm)
    }
}

fn class_name(c: RegionClass) -> &'static str {
    match c {
        RegionClass::UnconditionallyStable => "unconditionally_stable",
        RegionClass::Conditional => "conditional",
        RegionClass::UnconditionallyUnstable => "unconditionally_unstable",
    }
}

/// Result of a job: nominal lobes, the uncertainty band and the artefacts.
#[pyclass(frozen)]
struct Job {
    inner: JobResult,
}

#[pymethods]
impl Job {
    /// Band speed grid, rpm.
    #[getter]
    fn speeds(&self) -> Vec<f64> {
        self.inner.band.speeds.clone()
    }

    /// `(nominal, low, high)` depths in mm on the band grid.
    #[getter]
    fn band(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mm = |v: &[f64]| v.iter().map(|&d| units::m_to_mm(d)).collect();
        let b = &self.inner.band;
        (mm(&b.nominal), mm(&b.low), mm(&b.high))
    }

    #[getter]
    fn n_lobes(&self) -> usize {
        self.inner.sld.lobes.len()
    }

    fn classify(&self, n_rpm: f64, ap_mm: f64) -> PyResult<Verdict> {
        let p = OperatingPoint::new(n_rpm, units::mm_to_m(ap_mm)).map_err(py_err)?;
        let v = classify_probabilistic(&p, &self.inner.band).map_err(py_err)?;
        Ok(Verdict {
            region: class_name(v.class).to_string(),
            p_stable: v.p_stable,
            margin_mm: units::m_to_mm(v.margin),
        })
    }

    /// Result document as a JSON string.
    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&sio::result_document(&self.inner)).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_csv(&self) -> String {
        sio::band_csv(&sio::result_document(&self.inner))
    }

    fn to_svg(&self) -> String {
        sio::render_svg(&sio::result_document(&self.inner))
    }
}

/// Runs a self-contained job given as a JSON string.
#[pyfunction]
fn run_job(py: Python<'_>, job_json: &str) -> PyResult<Job> {
    let spec = JobFile::from_json(job_json)
        .and_then(|f| f.resolve(None, &CoefficientDb::from_json(DEFAULT_COEFFICIENT_DB)?))
        .map_err(py_err)?;
    let inner = py.detach(|| sio::run_job(&spec)).map_err(py_err)?;
    Ok(Job { inner })
}

/// Runs a job file; relative paths inside it resolve against its directory.
#[pyfunction]
fn run_job_file(py: Python<'_>, path: &str) -> PyResult<Job> {
    let spec = sio::load_job(Path::new(path)).map_err(py_err)?;
    let inner = py.detach(|| sio::run_job(&spec)).map_err(py_err)?;
    Ok(Job { inner })
}

#[pymodule]
fn sld(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Mode>()?;
    m.add_class::<Lobes>()?;
    m.add_class::<Verdict>()?;
    m.add_class::<Job>()?;
    m.add_function(wrap_pyfunction!(tool_modes, m)?)?;
    m.add_function(wrap_pyfunction!(directional_factors, m)?)?;
    m.add_function(wrap_pyfunction!(stability_lobes, m)?)?;
    m.add_function(wrap_pyfunction!(fdm_spectral_radius, m)?)?;
    m.add_function(wrap_pyfunction!(run_job, m)?)?;
    m.add_function(wrap_pyfunction!(run_job_file, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
