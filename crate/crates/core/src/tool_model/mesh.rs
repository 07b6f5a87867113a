use std::f64::consts::PI;

use super::{SegmentKind, ToolGeometry};
use crate::error::{Result, SldError};

#[derive(Debug, Clone, PartialEq)]
pub struct BeamElement {
    pub node_a: usize,
    pub node_b: usize,
    /// m²
    pub area: f64,
    /// m⁴
    pub second_moment: f64,
}

impl BeamElement {
    pub fn length(&self, nodes: &[f64]) -> f64 {
        nodes[self.node_b] - nodes[self.node_a]
    }
}

/// Axial discretisation of the overhang. Position 0 is the holder face.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamMesh {
    pub nodes: Vec<f64>,
    pub elements: Vec<BeamElement>,
    pub clamped_node: usize,
}

impl BeamMesh {
    pub fn tip_node(&self) -> usize {
        self.nodes.len() - 1
    }
}

// Segments shorter than this inside the overhang are ignored.
const MIN_PIECE: f64 = 1e-12;

fn section(diameter: f64) -> (f64, f64) {
    let area = PI * diameter * diameter / 4.0;
    let second_moment = PI * diameter.powi(4) / 64.0;
    (area, second_moment)
}

/// Meshes the overhanging portion of the tool with `elements_per_segment`
/// equal elements on every segment (or part of a segment) that sticks out.
pub fn build_beam_mesh(geometry: &ToolGeometry, elements_per_segment: usize) -> Result<BeamMesh> {
    geometry.validate()?;
    if elements_per_segment == 0 {
        return Err(SldError::InvalidInput(
            "elements_per_segment must be at least 1".into(),
        ));
    }

    let total = geometry.total_length();
    // distance from the shank end at which the holder face sits
    let cut = (total - geometry.overhang_length).max(0.0);

    let mut nodes = vec![0.0];
    let mut elements = Vec::new();
    let mut seg_start = 0.0;
    for seg in &geometry.segments {
        let seg_end = seg_start + seg.length;
        let lo = seg_start.max(cut);
        let piece = seg_end - lo;
        seg_start = seg_end;
        if piece <= MIN_PIECE {
            continue;
        }
        let d = match seg.kind {
            SegmentKind::Shank => seg.outer_diameter,
            SegmentKind::Fluted => seg.outer_diameter * geometry.d_eff_factor,
        };
        let (area, second_moment) = section(d);
        let x0 = lo - cut;
        let h = piece / elements_per_segment as f64;
        for e in 1..=elements_per_segment {
            let node_a = nodes.len() - 1;
            let x = if e == elements_per_segment {
                seg_end - cut
            } else {
                x0 + h * e as f64
            };
            nodes.push(x);
            elements.push(BeamElement {
                node_a,
                node_b: node_a + 1,
                area,
                second_moment,
            });
        }
    }

    // segment ends are accumulated sums; pin the tip to the exact overhang
    if let Some(last) = nodes.last_mut() {
        *last = geometry.overhang_length;
    }
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SldError::InvalidGeometry(
            "mesh nodes are not strictly increasing".into(),
        ));
    }

    Ok(BeamMesh {
        nodes,
        elements,
        clamped_node: 0,
    })
}
