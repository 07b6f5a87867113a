use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::job::OutputSelection;
use super::run::{JobResult, Metadata};
use crate::error::{Result, SldError};
use crate::stability::Zone;
use crate::uncertainty::RegionClass;
use crate::units::m_to_mm;

pub const BAND_CSV_HEADER: &str = "speed_rpm,a_nominal_mm,a_low_mm,a_high_mm";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LobePointDoc {
    pub omega_c_rad_s: f64,
    pub n_rpm: f64,
    pub a_lim_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LobeDoc {
    pub k: u32,
    pub points: Vec<LobePointDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeDoc {
    pub n_rpm: Vec<f64>,
    pub a_mm: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDoc {
    pub n_rpm: Vec<f64>,
    pub a_nominal_mm: Vec<f64>,
    pub a_low_mm: Vec<f64>,
    pub a_high_mm: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneDoc {
    pub n_lo: f64,
    pub n_hi: f64,
    pub label: Zone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictDoc {
    pub n_rpm: f64,
    pub ap_mm: f64,
    pub class: RegionClass,
    pub p_stable: f64,
    pub margin_mm: f64,
}

/// Result document shared by the CLI and the HTTP service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub metadata: Metadata,
    pub lobes: Vec<LobeDoc>,
    pub envelope: EnvelopeDoc,
    pub band: BandDoc,
    pub zones: Vec<ZoneDoc>,
    pub verdicts: Vec<VerdictDoc>,
}

fn mm(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&v| m_to_mm(v)).collect()
}

pub fn result_document(result: &JobResult) -> ResultDocument {
    ResultDocument {
        metadata: result.metadata.clone(),
        lobes: result
            .sld
            .lobes
            .iter()
            .map(|l| LobeDoc {
                k: l.lobe_index,
                points: l
                    .points
                    .iter()
                    .map(|p| LobePointDoc {
                        omega_c_rad_s: p.chatter_frequency,
                        n_rpm: p.spindle_speed,
                        a_lim_mm: m_to_mm(p.depth_limit),
                    })
                    .collect(),
            })
            .collect(),
        envelope: EnvelopeDoc {
            n_rpm: result.sld.envelope.speeds.clone(),
            a_mm: mm(&result.sld.envelope.depths),
        },
        band: BandDoc {
            n_rpm: result.band.speeds.clone(),
            a_nominal_mm: mm(&result.band.nominal),
            a_low_mm: mm(&result.band.low),
            a_high_mm: mm(&result.band.high),
        },
        zones: result
            .sld
            .zone_labels
            .iter()
            .map(|z| ZoneDoc {
                n_lo: z.n_lo,
                n_hi: z.n_hi,
                label: z.zone,
            })
            .collect(),
        verdicts: result
            .verdicts
            .iter()
            .map(|(p, v)| VerdictDoc {
                n_rpm: p.spindle_speed,
                ap_mm: m_to_mm(p.axial_depth),
                class: v.class,
                p_stable: v.p_stable,
                margin_mm: m_to_mm(v.margin),
            })
            .collect(),
    }
}

/// One row per band grid speed, depths in mm.
pub fn band_csv(doc: &ResultDocument) -> String {
    let mut out = String::from(BAND_CSV_HEADER);
    out.push('\n');
    let b = &doc.band;
    for i in 0..b.n_rpm.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            b.n_rpm[i], b.a_nominal_mm[i], b.a_low_mm[i], b.a_high_mm[i]
        );
    }
    out
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 60.0;

/// Standalone SVG: the three stability regions, nominal lobes, zone labels
/// and probed points, speed on x and depth on y.
pub fn render_svg(doc: &ResultDocument) -> String {
    let b = &doc.band;
    let n_lo = b.n_rpm[0];
    let n_hi = *b.n_rpm.last().expect("non-empty band");
    let top = 1.2 * b.a_high_mm.iter().copied().fold(0.0, f64::max);
    let top = if top > 0.0 { top } else { 1.0 };
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x = |n: f64| MARGIN_L + (n - n_lo) / (n_hi - n_lo) * plot_w;
    let y = |a: f64| MARGIN_T + plot_h * (1.0 - a.min(top) / top);
    let path = |pts: &mut dyn Iterator<Item = (f64, f64)>| -> String {
        let mut s = String::new();
        for (i, (px, py)) in pts.enumerate() {
            let _ = write!(s, "{}{:.2},{:.2}", if i == 0 { "" } else { " " }, px, py);
        }
        s
    };

    let base = y(0.0);
    let ceiling = y(top);
    let low: Vec<(f64, f64)> = b.n_rpm.iter().zip(&b.a_low_mm).map(|(&n, &a)| (x(n), y(a))).collect();
    let high: Vec<(f64, f64)> = b.n_rpm.iter().zip(&b.a_high_mm).map(|(&n, &a)| (x(n), y(a))).collect();
    let stable = path(
        &mut std::iter::once((x(n_lo), base))
            .chain(low.iter().copied())
            .chain(std::iter::once((x(n_hi), base))),
    );
    let conditional = path(&mut high.iter().copied().chain(low.iter().rev().copied()));
    let unstable = path(
        &mut std::iter::once((x(n_lo), ceiling))
            .chain(high.iter().copied())
            .chain(std::iter::once((x(n_hi), ceiling))),
    );

    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"##
    );
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot"><rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}"/></clipPath></defs>"#
    );
    for (class, color, points) in [
        ("unconditionally-unstable", "#e74c3c", unstable),
        ("conditional", "#f39c12", conditional),
        ("unconditionally-stable", "#2ecc71", stable),
    ] {
        let _ = writeln!(
            s,
            r##"<g class="region {class}"><polygon points="{points}" fill="{color}" fill-opacity="0.6" stroke="none"/></g>"##
        );
    }
    let _ = writeln!(s, r##"<g class="lobes" clip-path="url(#plot)" fill="none" stroke="#1f3a93" stroke-width="1.2">"##);
    for lobe in &doc.lobes {
        let pts = path(&mut lobe.points.iter().map(|p| (x(p.n_rpm), y(p.a_lim_mm))));
        let _ = writeln!(s, r#"<polyline data-k="{}" points="{pts}"/>"#, lobe.k);
    }
    s.push_str("</g>\n");

    s.push_str("<g class=\"zones\" fill=\"#333\">\n");
    for z in &doc.zones {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:?}</text>"#,
            0.5 * (x(z.n_lo) + x(z.n_hi)),
            MARGIN_T - 10.0,
            z.label
        );
    }
    s.push_str("</g>\n");

    s.push_str("<g class=\"points\" stroke=\"#000\">\n");
    for v in &doc.verdicts {
        let fill = match v.class {
            RegionClass::UnconditionallyStable => "#2ecc71",
            RegionClass::Conditional => "#f39c12",
            RegionClass::UnconditionallyUnstable => "#e74c3c",
        };
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{fill}"><title>{:.0} rpm, {} mm: p_stable {:.2}</title></circle>"##,
            x(v.n_rpm),
            y(v.ap_mm),
            v.n_rpm,
            v.ap_mm,
            v.p_stable
        );
    }
    s.push_str("</g>\n");

    let _ = writeln!(
        s,
        r##"<g class="axes" stroke="#000"><line x1="{MARGIN_L}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}"/><line x1="{MARGIN_L}" y1="{base:.2}" x2="{MARGIN_L}" y2="{ceiling:.2}"/></g>"##,
        WIDTH - MARGIN_R
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Spindle speed [rpm]</text>"#,
        MARGIN_L + 0.5 * plot_w,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(20 {:.2}) rotate(-90)" text-anchor="middle">Axial depth of cut [mm]</text>"#,
        MARGIN_T + 0.5 * plot_h
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN_L}" y="{:.2}" text-anchor="middle">{:.0}</text><text x="{:.2}" y="{:.2}" text-anchor="middle">{:.0}</text>"#,
        base + 18.0,
        n_lo,
        WIDTH - MARGIN_R,
        base + 18.0,
        n_hi
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"#,
        MARGIN_L - 6.0,
        ceiling + 4.0,
        top
    );
    s.push_str("</svg>\n");
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| SldError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| SldError::io(path, e))
}

/// Writes the selected artefacts; JSON is pretty-printed with a trailing newline.
pub fn emit_outputs(doc: &ResultDocument, selection: &OutputSelection) -> Result<()> {
    if let Some(p) = &selection.json {
        let text = serde_json::to_string_pretty(doc).map_err(|e| SldError::Numeric(e.to_string()))?;
        write_file(p, &(text + "\n"))?;
    }
    if let Some(p) = &selection.csv {
        write_file(p, &band_csv(doc))?;
    }
    if let Some(p) = &selection.svg {
        write_file(p, &render_svg(doc))?;
    }
    Ok(())
}
