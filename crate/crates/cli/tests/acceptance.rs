//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report stays readable; the process
//! exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sld_core::cutting::{directional_factors, CoefficientSet, CoefficientSource, CutSpec};
use sld_core::stability::{
    fdm_spectral_radius, zoa_lobes, OperatingPoint, SldResult, SweepConfig, Zone,
};
use sld_core::tool_model::{
    synthesize_frf, tool_modes, Direction, FemConfig, Mode, ModeSet, ModeSource, Segment, SegmentKind, Tool,
    ToolGeometry, ToolMaterial,
};
use sld_core::uncertainty::{
    build_region_grid, classify_probabilistic, compute_band, draw_scenarios, BandConfig, Distribution,
    DynamicsModel, EnsembleResult, NominalInputs, RegionClass, UncertaintySpec,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || format!("{what} took {elapsed:?}, limit {limit:?}"))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// ---------------------------------------------------------------- scenario

const F_N: f64 = 800.0;
const ZETA: f64 = 0.02;
const K: f64 = 2.0e7;
const N_TEETH: u32 = 2;
const KT: f64 = 600.0e6;
const KR: f64 = 0.3;

fn canonical_modes() -> ModeSet {
    ModeSet::new(vec![
        Mode::new(F_N, ZETA, K, Direction::X, ModeSource::Ema).unwrap(),
        Mode::new(F_N, ZETA, K, Direction::Y, ModeSource::Ema).unwrap(),
    ])
}

fn canonical_sweep() -> SweepConfig {
    let mut sweep = SweepConfig::new(400.0, 1200.0);
    sweep.n_freq = 2000;
    sweep.k_max = 5;
    sweep.dominant_frequency = Some(F_N);
    sweep
}

fn coeffs(kt: f64) -> CoefficientSet {
    CoefficientSet::exact(kt, KR, CoefficientSource::Catalog).unwrap()
}

fn canonical_sld(kt: f64) -> sld_core::Result<SldResult> {
    let sweep = canonical_sweep();
    let frf = synthesize_frf(&canonical_modes(), &sweep.frequencies())?;
    zoa_lobes(&frf, &CutSpec::slot(N_TEETH), &coeffs(kt), &sweep)
}

fn band(spec: &UncertaintySpec, n: usize, seed: u64) -> sld_core::Result<EnsembleResult> {
    let nominal = NominalInputs {
        coefficients: coeffs(KT),
        modes: Some(canonical_modes()),
    };
    let scenarios = draw_scenarios(&nominal, spec, n, seed)?;
    compute_band(
        &scenarios,
        &CutSpec::slot(N_TEETH),
        &DynamicsModel::Modal,
        &BandConfig::new(canonical_sweep()),
    )
}

fn fixed_spec() -> UncertaintySpec {
    UncertaintySpec::fixed(&NominalInputs {
        coefficients: coeffs(KT),
        modes: Some(canonical_modes()),
    })
}

// ---------------------------------------------------------------- 1

fn fem_oracle() -> Outcome {
    let (d, l, e, rho) = (0.012, 0.080, 210.0e9, 7800.0);
    let tool = Tool {
        name: "steel rod".into(),
        geometry: ToolGeometry {
            segments: vec![Segment {
                length: l,
                outer_diameter: d,
                kind: SegmentKind::Shank,
            }],
            overhang_length: l,
            n_flutes: 2,
            helix_angle: 0.0,
            d_eff_factor: 1.0,
        },
        material: ToolMaterial {
            name: "steel".into(),
            youngs_modulus: e,
            density: rho,
        },
    };
    let config = FemConfig {
        elements_per_segment: 16,
        n_modes: 1,
        ..FemConfig::default()
    };
    let t = Instant::now();
    let modes = tool_modes(&tool, &config).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();

    // clamped-free Euler-Bernoulli beam, first root of 1 + cos(βL)cosh(βL) = 0
    let beta_l = first_cantilever_root();
    let area = PI * d * d / 4.0;
    let inertia = PI * d.powi(4) / 64.0;
    let f_exact = beta_l * beta_l / (2.0 * PI * l * l) * (e * inertia / (rho * area)).sqrt();
    let f_fem = modes
        .dominant(Direction::X)
        .ok_or("no X mode")?
        .natural_frequency;
    let err = rel_err(f_fem, f_exact);
    ensure(err <= 0.01, || format!("f1 = {f_fem:.2} Hz vs {f_exact:.2} Hz ({:.3}%)", 100.0 * err))?;
    within_time(elapsed, Duration::from_secs(1), "FEM solve")?;
    Ok(format!(
        "f1 = {f_fem:.2} Hz, analytic {f_exact:.2} Hz, error {:.4}%, {elapsed:.2?}",
        100.0 * err
    ))
}

fn first_cantilever_root() -> f64 {
    let g = |x: f64| 1.0 + x.cos() * x.cosh();
    let (mut a, mut b) = (1.0, 2.5);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(a) * g(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

// ---------------------------------------------------------------- 2

/// Instantaneous directional coefficients of a tooth at angle `phi`.
fn instantaneous(phi: f64, kr: f64) -> [f64; 4] {
    let (s2, c2) = (2.0 * phi).sin_cos();
    [
        -(s2 + kr * (1.0 - c2)),
        -((1.0 + c2) + kr * s2),
        (1.0 - c2) - kr * s2,
        s2 - kr * (1.0 + c2),
    ]
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn directional_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a: f64 = rng.random_range(0.0..PI);
        let b: f64 = rng.random_range(0.0..PI);
        let (st, ex) = if a < b { (a, b) } else { (b, a) };
        if ex - st < 1e-6 {
            continue;
        }
        let kr: f64 = rng.random_range(0.0..1.5);
        let closed = directional_factors(st, ex, kr).map_err(|e| e.to_string())?;
        let got = [closed.axx, closed.axy, closed.ayx, closed.ayy];
        for (i, g) in got.iter().enumerate() {
            let q = adaptive_simpson(&|phi| instantaneous(phi, kr)[i], st, ex, 1e-13);
            worst = worst.max((g - q).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("max |closed - quadrature| = {worst:.3e}"))?;

    let slot = directional_factors(0.0, PI, KR).map_err(|e| e.to_string())?;
    let expect = [-PI * KR, -PI, PI, -PI * KR];
    let got = [slot.axx, slot.axy, slot.ayx, slot.ayy];
    let slot_err = got.iter().zip(expect).map(|(g, e)| (g - e).abs()).fold(0.0, f64::max);
    ensure(slot_err <= 1e-12, || format!("slot factors off by {slot_err:.3e}: {got:?}"))?;
    Ok(format!("100 triples max error {worst:.2e}, slot error {slot_err:.2e}"))
}

// ---------------------------------------------------------------- 3

fn zoa_self_consistency() -> Outcome {
    let t = Instant::now();
    let sld = canonical_sld(KT).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure(!sld.lobes.is_empty(), || "no lobes".into())?;

    let mut n_points = 0;
    for lobe in &sld.lobes {
        for p in &lobe.points {
            n_points += 1;
            ensure(p.depth_limit > 0.0, || format!("non-positive depth in lobe {}", lobe.lobe_index))?;
        }
    }

    // same chatter frequency must map to a lower speed on the next lobe
    let mut pairs = 0;
    for lobe in &sld.lobes {
        for next in sld.lobes.iter().filter(|l| l.lobe_index == lobe.lobe_index + 1) {
            for p in &lobe.points {
                if let Some(q) = next.points.iter().find(|q| q.chatter_frequency == p.chatter_frequency) {
                    pairs += 1;
                    ensure(q.spindle_speed < p.spindle_speed, || {
                        format!("n_{} not above n_{} at {} rad/s", lobe.lobe_index, next.lobe_index, p.chatter_frequency)
                    })?;
                }
            }
        }
    }
    ensure(pairs > 0, || "no shared chatter frequencies between lobes".into())?;

    let doubled = canonical_sld(2.0 * KT).map_err(|e| e.to_string())?;
    ensure(doubled.lobes.len() == sld.lobes.len(), || "lobe structure changed with kt".into())?;
    let mut worst: f64 = 0.0;
    for (a, b) in sld.lobes.iter().zip(&doubled.lobes) {
        ensure(a.points.len() == b.points.len(), || "lobe length changed with kt".into())?;
        for (p, q) in a.points.iter().zip(&b.points) {
            ensure(p.spindle_speed == q.spindle_speed, || "speeds changed with kt".into())?;
            worst = worst.max(rel_err(2.0 * q.depth_limit, p.depth_limit));
        }
    }
    ensure(worst <= 1e-12, || format!("kt scaling error {worst:.3e}"))?;
    within_time(elapsed, Duration::from_secs(2), "2000-point sweep")?;
    Ok(format!(
        "{} lobes, {n_points} points, {pairs} lobe pairs ordered, kt scaling error {worst:.1e}, {elapsed:.2?}",
        sld.lobes.len()
    ))
}

// ---------------------------------------------------------------- 4

fn zoa_vs_fdm() -> Outcome {
    let t = Instant::now();
    let sld = canonical_sld(KT).map_err(|e| e.to_string())?;
    let modes = canonical_modes();
    let cut = CutSpec::slot(N_TEETH);
    let c = coeffs(KT);
    let zone_c: Vec<_> = sld.zone_labels.iter().filter(|z| z.zone == Zone::C).collect();
    ensure(!zone_c.is_empty(), || "no zone C in the window".into())?;
    let (c_lo, c_hi) = (zone_c[0].n_lo, zone_c.last().unwrap().n_hi);

    // five anchors across zone C, three speeds around each, both sides of the envelope
    let mut agree = 0;
    let mut total = 0;
    for i in 0..5 {
        let anchor = c_lo + (c_hi - c_lo) * (0.1 + 0.2 * i as f64);
        for offset in [-0.02, 0.0, 0.02] {
            let n = anchor * (1.0 + offset);
            let a = sld.envelope.at(n).map_err(|e| e.to_string())?;
            for (factor, want_stable) in [(0.7, true), (1.3, false)] {
                let p = OperatingPoint::new(n, factor * a).map_err(|e| e.to_string())?;
                let rho = fdm_spectral_radius(&p, &modes, &cut, &c, 40).map_err(|e| e.to_string())?;
                total += 1;
                if (rho < 1.0) == want_stable {
                    agree += 1;
                }
            }
        }
    }
    let share = agree as f64 / total as f64;
    ensure(total >= 25, || format!("only {total} probes"))?;
    ensure(share >= 0.8, || format!("agreement {agree}/{total}"))?;

    // at zero depth the transition matrix is free vibration over one tooth period
    let mut worst: f64 = 0.0;
    for n in [c_lo, 0.5 * (c_lo + c_hi), c_hi] {
        let p = OperatingPoint {
            spindle_speed: n,
            axial_depth: 0.0,
        };
        let rho = fdm_spectral_radius(&p, &modes, &cut, &c, 40).map_err(|e| e.to_string())?;
        let period = 60.0 / (n * N_TEETH as f64);
        let expect = (-ZETA * 2.0 * PI * F_N * period).exp();
        worst = worst.max(rel_err(rho, expect));
    }
    ensure(worst <= 0.005, || format!("free vibration error {:.3}%", 100.0 * worst))?;
    let elapsed = t.elapsed();
    within_time(elapsed, Duration::from_secs(60), "FDM cross-check")?;
    Ok(format!(
        "{agree}/{total} probes agree over {c_lo:.0}-{c_hi:.0} rpm, free vibration error {:.4}%, {elapsed:.2?}",
        100.0 * worst
    ))
}

// ---------------------------------------------------------------- 5

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn band_properties() -> Outcome {
    let zero = band(&fixed_spec(), 20, 1).map_err(|e| e.to_string())?.band;
    let mut zero_width: f64 = 0.0;
    for i in 0..zero.speeds.len() {
        let w = zero.high[i] - zero.low[i];
        ensure(w <= 1e-12 * zero.nominal[i], || format!("zero-variance width {w:e} at {}", zero.speeds[i]))?;
        zero_width = zero_width.max(w);
    }

    let mut two_point = fixed_spec();
    two_point.kt = Distribution::Choice {
        values: vec![0.5 * KT, KT],
    };
    let tp = band(&two_point, 32, 5).map_err(|e| e.to_string())?.band;
    let mut worst: f64 = 0.0;
    for i in 0..tp.speeds.len() {
        let env = zero.nominal[i];
        worst = worst.max(rel_err(tp.low[i], env)).max(rel_err(tp.high[i], 2.0 * env));
    }
    ensure(tp.speeds == zero.speeds, || "band grid depends on kt".into())?;
    ensure(worst <= 1e-10, || format!("two-point kt error {worst:.3e}"))?;

    let spec = canonical_uncertainty();
    let t = Instant::now();
    let first = band(&spec, 200, 42).map_err(|e| e.to_string())?.band;
    let elapsed = t.elapsed();
    let again = band(&spec, 200, 42).map_err(|e| e.to_string())?.band;
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| band(&spec, 200, 42))
        .map_err(|e| e.to_string())?
        .band;
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(7)
        .build()
        .unwrap()
        .install(|| band(&spec, 200, 42))
        .map_err(|e| e.to_string())?
        .band;
    for other in [&again, &single, &many] {
        ensure(
            bits(&first.low) == bits(&other.low)
                && bits(&first.high) == bits(&other.high)
                && bits(&first.speeds) == bits(&other.speeds),
            || "band not bitwise reproducible".into(),
        )?;
    }
    within_time(elapsed, Duration::from_secs(30), "200 x 2000 band")?;
    Ok(format!(
        "zero-variance width {zero_width:.1e} m, two-point error {worst:.1e}, bitwise equal on 1/7/default threads, 200x2000 in {elapsed:.2?}"
    ))
}

fn canonical_uncertainty() -> UncertaintySpec {
    let mut spec = fixed_spec();
    spec.kt = Distribution::relative_uniform(KT, 0.2);
    spec.kr = Distribution::relative_uniform(KR, 0.1);
    for m in &mut spec.modes {
        m.damping_ratio = Distribution::Uniform { lo: 0.015, hi: 0.025 };
    }
    spec
}

// ---------------------------------------------------------------- 6

fn region_semantics() -> Outcome {
    let b = band(&canonical_uncertainty(), 100, 9).map_err(|e| e.to_string())?.band;
    let grid = build_region_grid(&b, 200, 100, None).map_err(|e| e.to_string())?;
    let mut nodes = 0;
    for (i, &n) in grid.speeds.iter().enumerate() {
        for (j, &a) in grid.depths.iter().enumerate() {
            let v = classify_probabilistic(&OperatingPoint::new(n, a).unwrap(), &b).map_err(|e| e.to_string())?;
            ensure(v.class == grid.classes[i][j], || {
                format!("grid {:?} vs verdict {:?} at {n} rpm, {a} m", grid.classes[i][j], v.class)
            })?;
            nodes += 1;
        }
    }

    let (lo, hi) = b.window();
    let top = *grid.depths.last().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut counts = [0usize; 3];
    for _ in 0..1000 {
        let n = rng.random_range(lo..=hi);
        let a = rng.random_range(1e-7..top);
        let v = classify_probabilistic(&OperatingPoint::new(n, a).unwrap(), &b).map_err(|e| e.to_string())?;
        match v.class {
            RegionClass::UnconditionallyStable => {
                counts[0] += 1;
                ensure(v.p_stable == 1.0, || format!("stable point with p = {}", v.p_stable))?;
            }
            RegionClass::Conditional => counts[1] += 1,
            RegionClass::UnconditionallyUnstable => {
                counts[2] += 1;
                ensure(v.p_stable == 0.0, || format!("unstable point with p = {}", v.p_stable))?;
            }
        }
    }
    ensure(counts.iter().all(|&c| c > 0), || format!("probes missed a region: {counts:?}"))?;
    Ok(format!(
        "{nodes} grid nodes agree; 1000 probes stable/conditional/unstable = {}/{}/{}",
        counts[0], counts[1], counts[2]
    ))
}

// ---------------------------------------------------------------- 7

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run_cli(job: &Path, out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_sld"))
        .arg("compute")
        .arg(job)
        .arg("--out-dir")
        .arg(out)
        .stderr(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("sld compute exited with {status}"))
}

fn end_to_end() -> Outcome {
    let job = repo_root().join("data/canonical_job.json");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        run_cli(&job, d.path())?;
    }
    let read = |d: &tempfile::TempDir, ext: &str| std::fs::read(d.path().join(format!("canonical.{ext}"))).unwrap();
    ensure(read(&dirs[0], "json") == read(&dirs[1], "json"), || "JSON differs between runs".into())?;
    ensure(read(&dirs[0], "csv") == read(&dirs[1], "csv"), || "CSV differs between runs".into())?;

    let schema: serde_json::Value =
        serde_json::from_slice(&std::fs::read(repo_root().join("docs/result.schema.json")).unwrap()).unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&read(&dirs[0], "json")).unwrap();
    let validator = jsonschema::validator_for(&schema).map_err(|e| e.to_string())?;
    let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
    ensure(errors.is_empty(), || format!("schema errors: {errors:?}"))?;

    let svg = String::from_utf8(read(&dirs[0], "svg")).unwrap();
    let regions = svg.matches("<g class=\"region ").count();
    ensure(regions == 3, || format!("{regions} region groups in SVG"))?;
    Ok(format!(
        "JSON ({} bytes) and CSV identical across runs, schema valid, {regions} region groups",
        read(&dirs[0], "json").len()
    ))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 7] = [
        ("FEM cantilever frequency", fem_oracle),
        ("directional factors vs quadrature", directional_oracle),
        ("ZOA self-consistency", zoa_self_consistency),
        ("ZOA vs FDM", zoa_vs_fdm),
        ("uncertainty band properties", band_properties),
        ("region semantics", region_semantics),
        ("end-to-end determinism", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
