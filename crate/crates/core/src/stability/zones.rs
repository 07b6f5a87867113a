use serde::{Deserialize, Serialize};

use crate::tool_model::Mode;
use crate::units;

/// Qualitative regions of a lobe diagram, from process-damping dominated low
/// speeds (A) to the ultra high-speed range above the last lobe (D).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Zone {
    A,
    B,
    C,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneRange {
    /// rpm
    pub n_lo: f64,
    /// rpm
    pub n_hi: f64,
    pub zone: Zone,
}

pub const ZONE_HEURISTIC_NOTE: &str = "heuristic zone thresholds on tooth-passing frequency f_tp: \
A f_tp <= f_d/10, B f_d/10 < f_tp <= f_d/4, C f_d/4 < f_tp <= f_d (lobes k = 0..3), D f_tp > f_d";

/// Splits the speed window `[n_lo, n_hi]` into zones by tooth-passing
/// frequency relative to the dominant mode frequency `f_dominant` (Hz).
pub fn zone_annotate(window: (f64, f64), f_dominant: f64, n_teeth: u32) -> Vec<ZoneRange> {
    let (lo, hi) = window;
    let cut = |hz: f64| units::rpm_for_tooth_passing(hz, n_teeth);
    let bounds = [
        (Zone::A, f64::NEG_INFINITY, cut(f_dominant / 10.0)),
        (Zone::B, cut(f_dominant / 10.0), cut(f_dominant / 4.0)),
        (Zone::C, cut(f_dominant / 4.0), cut(f_dominant)),
        (Zone::D, cut(f_dominant), f64::INFINITY),
    ];
    bounds
        .iter()
        .filter_map(|&(zone, a, b)| {
            let n_lo = a.max(lo);
            let n_hi = b.min(hi);
            (n_hi > n_lo).then_some(ZoneRange { n_lo, n_hi, zone })
        })
        .collect()
}

pub fn zone_annotate_mode(window: (f64, f64), dominant_mode: &Mode, n_teeth: u32) -> Vec<ZoneRange> {
    zone_annotate(window, dominant_mode.natural_frequency, n_teeth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zone_of(ranges: &[ZoneRange], n: f64) -> Zone {
        // upper edges are inclusive
        ranges
            .iter()
            .find(|r| n > r.n_lo && n <= r.n_hi || (n == r.n_lo && std::ptr::eq(*r, &ranges[0])))
            .unwrap()
            .zone
    }

    #[test]
    fn zone_d_starts_where_tooth_passing_meets_mode() {
        let z = zone_annotate((500.0, 60000.0), 800.0, 2);
        let d = z.iter().find(|r| r.zone == Zone::D).unwrap();
        assert_eq!(d.n_lo, 24000.0);
        assert_eq!(d.n_hi, 60000.0);
        let c = z.iter().find(|r| r.zone == Zone::C).unwrap();
        assert_eq!((c.n_lo, c.n_hi), (6000.0, 24000.0));
    }

    #[test]
    fn low_speed_is_process_damping_zone() {
        let z = zone_annotate((500.0, 60000.0), 800.0, 2);
        assert_eq!(zone_of(&z, 1000.0), Zone::A);
        assert_eq!(zone_of(&z, 3000.0), Zone::B);
        assert_eq!(zone_of(&z, 10000.0), Zone::C);
        assert_eq!(zone_of(&z, 30000.0), Zone::D);
    }

    #[test]
    fn zones_partition_the_window() {
        for window in [(500.0, 60000.0), (7000.0, 9000.0), (100.0, 2000.0), (20000.0, 90000.0)] {
            let z = zone_annotate(window, 800.0, 3);
            assert_eq!(z[0].n_lo, window.0);
            assert_eq!(z.last().unwrap().n_hi, window.1);
            for w in z.windows(2) {
                assert_eq!(w[0].n_hi, w[1].n_lo);
            }
        }
    }
}
