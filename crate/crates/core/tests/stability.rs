use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use sld_core::cutting::{directional_factors, CoefficientSet, CoefficientSource, CutSpec, MillingMode};
use sld_core::stability::{
    chatter_eigenvalue, fdm_spectral_radius, spindle_speeds, zoa_lobes, OperatingPoint, SldResult, SweepConfig,
    Zone,
};
use sld_core::tool_model::{synthesize_frf, Direction, Frf, Mode, ModeSet, ModeSource};

fn modes(rows: &[(f64, f64, f64, Direction)]) -> ModeSet {
    ModeSet::new(
        rows.iter()
            .map(|&(f, z, k, d)| Mode::new(f, z, k, d, ModeSource::Ema).unwrap())
            .collect(),
    )
}

fn canonical() -> ModeSet {
    modes(&[(800.0, 0.02, 2e7, Direction::X), (800.0, 0.02, 2e7, Direction::Y)])
}

fn coeffs(kt: f64, kr: f64) -> CoefficientSet {
    CoefficientSet::exact(kt, kr, CoefficientSource::Catalog).unwrap()
}

fn sweep(f_min: f64, f_max: f64, n_freq: usize) -> SweepConfig {
    let mut s = SweepConfig::new(f_min, f_max);
    s.n_freq = n_freq;
    s
}

fn lobes(frf: &Frf, cut: &CutSpec, kt: f64, s: &SweepConfig) -> SldResult {
    zoa_lobes(frf, cut, &coeffs(kt, 0.3), s).unwrap()
}

/// `speed_tol = 0` demands bitwise-equal speeds.
fn assert_same_speeds_scaled_depths(
    a: &SldResult,
    b: &SldResult,
    factor: f64,
    speed_tol: f64,
) -> Result<(), TestCaseError> {
    prop_assert_eq!(a.lobes.len(), b.lobes.len());
    for (la, lb) in a.lobes.iter().zip(&b.lobes) {
        prop_assert_eq!(la.points.len(), lb.points.len());
        for (p, q) in la.points.iter().zip(&lb.points) {
            prop_assert!((p.spindle_speed - q.spindle_speed).abs() <= speed_tol * p.spindle_speed);
            let rel = (q.depth_limit - factor * p.depth_limit).abs() / (factor * p.depth_limit);
            prop_assert!(rel <= 1e-12, "relative error {rel}");
        }
    }
    Ok(())
}

fn complex() -> impl Strategy<Value = Complex64> {
    (1e-9..1e-5f64, 0.0..2.0 * PI).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn mode_rows() -> impl Strategy<Value = Vec<(f64, f64, f64, Direction)>> {
    (300.0..3000.0f64, 0.01..0.06f64, 1e6..1e8f64, 0.7..1.4f64, 0.5..2.0f64).prop_map(|(f, z, k, fr, kr)| {
        vec![(f, z, k, Direction::X), (f * fr, z, k * kr, Direction::Y)]
    })
}

fn cuts() -> impl Strategy<Value = CutSpec> {
    (
        prop_oneof![Just(MillingMode::Up), Just(MillingMode::Down), Just(MillingMode::Slot)],
        0.1..=1.0f64,
        1u32..7,
    )
        .prop_map(|(milling_mode, r, n_teeth)| CutSpec {
            milling_mode,
            radial_immersion: if milling_mode == MillingMode::Slot { 1.0 } else { r },
            n_teeth,
        })
}

fn sweep_for(m: &ModeSet) -> SweepConfig {
    let lo = m.modes.iter().map(|x| x.natural_frequency).fold(f64::INFINITY, f64::min);
    sweep(0.5 * lo, 1.5 * m.highest_frequency().unwrap(), 400)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roots_satisfy_the_characteristic_quadratic(
        g_xx in complex(),
        g_yy in complex(),
        ends in prop::array::uniform2(0.0..=PI),
        kr in 0.0..2.0f64,
    ) {
        let (st, ex) = (ends[0].min(ends[1]), ends[0].max(ends[1]));
        prop_assume!(ex - st > 1e-3);
        let a = directional_factors(st, ex, kr).unwrap();
        let a0 = g_xx * g_yy * (a.axx * a.ayy - a.axy * a.ayx);
        let a1 = a.axx * g_xx + a.ayy * g_yy;
        let roots = chatter_eigenvalue(g_xx, g_yy, &a).unwrap();
        prop_assert!(!roots.is_empty());
        for r in roots {
            let l = r.as_complex();
            let terms = [a0 * l * l, a1 * l, Complex64::new(1.0, 0.0)];
            let scale: f64 = terms.iter().map(|t| t.norm()).sum();
            let residual = (terms[0] + terms[1] + terms[2]).norm();
            prop_assert!(residual <= 1e-10 * scale, "residual {residual} scale {scale}");
            prop_assert!((r.kappa - r.lambda_im / r.lambda_re).abs() <= 1e-12 * r.kappa.abs().max(1.0));
        }
    }

    #[test]
    fn lobe_speeds_decrease_with_k(
        omega in 100.0..30000.0f64,
        kappa in -50.0..50.0f64,
        n_teeth in 1u32..9,
    ) {
        let n = spindle_speeds(omega, kappa, n_teeth, 8).unwrap();
        prop_assert_eq!(n.len(), 9);
        for w in n.windows(2) {
            prop_assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn lobe_points_are_positive_finite_and_ordered(rows in mode_rows(), cut in cuts()) {
        let m = modes(&rows);
        let s = sweep_for(&m);
        let frf = synthesize_frf(&m, &s.frequencies()).unwrap();
        let sld = lobes(&frf, &cut, 8e8, &s);
        for lobe in &sld.lobes {
            for p in &lobe.points {
                prop_assert!(p.depth_limit > 0.0 && p.depth_limit.is_finite());
                prop_assert!(p.spindle_speed > 0.0 && p.spindle_speed.is_finite());
            }
            for next in sld.lobes.iter().filter(|l| l.lobe_index == lobe.lobe_index + 1) {
                for p in &lobe.points {
                    if let Some(q) = next.points.iter().find(|q| q.chatter_frequency == p.chatter_frequency) {
                        prop_assert!(q.spindle_speed < p.spindle_speed);
                    }
                }
            }
        }
    }

    #[test]
    fn depths_scale_inversely_with_kt(rows in mode_rows(), cut in cuts(), c in 0.1..10.0f64) {
        let m = modes(&rows);
        let s = sweep_for(&m);
        let frf = synthesize_frf(&m, &s.frequencies()).unwrap();
        let base = lobes(&frf, &cut, 8e8, &s);
        let scaled = lobes(&frf, &cut, 8e8 * c, &s);
        assert_same_speeds_scaled_depths(&base, &scaled, 1.0 / c, 0.0)?;
    }

    // kappa is invariant in exact arithmetic; rounding in Λ may move it by an ulp
    #[test]
    fn scaling_the_frf_scales_depths_only(rows in mode_rows(), cut in cuts(), c in 0.1..10.0f64) {
        let m = modes(&rows);
        let s = sweep_for(&m);
        let frf = synthesize_frf(&m, &s.frequencies()).unwrap();
        let base = lobes(&frf, &cut, 8e8, &s);
        let scaled = lobes(&frf.scaled(c), &cut, 8e8, &s);
        assert_same_speeds_scaled_depths(&base, &scaled, 1.0 / c, 1e-12)?;
    }
}

fn canonical_sld() -> SldResult {
    let mut s = sweep(400.0, 1200.0, 2000);
    s.dominant_frequency = Some(800.0);
    let frf = synthesize_frf(&canonical(), &s.frequencies()).unwrap();
    lobes(&frf, &CutSpec::slot(2), 6e8, &s)
}

#[test]
fn canonical_minimum_sits_on_the_dominant_mode_family() {
    let sld = canonical_sld();
    let lowest = sld
        .lobes
        .iter()
        .flat_map(|l| &l.points)
        .min_by(|a, b| a.depth_limit.total_cmp(&b.depth_limit))
        .unwrap();
    assert!(lowest.depth_limit > 0.0);
    // the envelope is resampled between lobe points, so it can only sit higher
    assert!(sld.envelope.min_depth() >= lowest.depth_limit * (1.0 - 1e-12));
    assert!(sld.envelope.min_depth() <= 1.05 * lowest.depth_limit);
    let f_c = lowest.chatter_frequency / (2.0 * PI);
    assert!((800.0..900.0).contains(&f_c), "chatter at {f_c} Hz");
}

#[test]
fn fdm_agrees_far_from_the_envelope() {
    let sld = canonical_sld();
    let zone_c = sld.zone_labels.iter().find(|z| z.zone == Zone::C).unwrap();
    let n = 0.5 * (zone_c.n_lo + zone_c.n_hi);
    let a = sld.envelope.at(n).unwrap();
    let rho = |factor: f64| {
        let p = OperatingPoint::new(n, factor * a).unwrap();
        fdm_spectral_radius(&p, &canonical(), &CutSpec::slot(2), &coeffs(6e8, 0.3), 40).unwrap()
    };
    assert!(rho(0.2) < 1.0);
    assert!(rho(5.0) > 1.0);
}

#[test]
fn envelope_classifies_both_sides() {
    let sld = canonical_sld();
    let n = 12000.0;
    let a = sld.envelope.at(n).unwrap();
    let below = OperatingPoint::new(n, 0.5 * a).unwrap();
    let above = OperatingPoint::new(n, 2.0 * a).unwrap();
    use sld_core::stability::{classify_deterministic, Stability};
    assert_eq!(classify_deterministic(&below, &sld).unwrap(), Stability::Stable);
    assert_eq!(classify_deterministic(&above, &sld).unwrap(), Stability::Unstable);
}
