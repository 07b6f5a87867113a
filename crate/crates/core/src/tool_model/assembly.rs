use nalgebra::{DMatrix, Matrix4};

use super::{BeamMesh, ToolMaterial};
use crate::error::Result;

/// Global mass and stiffness matrices with the clamped DOFs removed.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    /// Per node: (translation, rotation) row indices, `None` for the clamped node.
    pub dof_map: Vec<Option<(usize, usize)>>,
}

impl SystemMatrices {
    pub fn retained_dofs(&self) -> usize {
        self.mass.nrows()
    }

    /// Row of the tip translation DOF.
    pub fn tip_translation(&self) -> usize {
        self.dof_map
            .iter()
            .rev()
            .find_map(|d| d.map(|(t, _)| t))
            .expect("mesh has at least one free node")
    }
}

#[rustfmt::skip]
/// Euler–Bernoulli bending stiffness, DOF order (w_a, θ_a, w_b, θ_b).
fn element_stiffness(ei: f64, l: f64) -> Matrix4<f64> {
    let c = ei / l.powi(3);
    let l2 = l * l;
    Matrix4::new(
        12.0, 6.0 * l, -12.0, 6.0 * l,
        6.0 * l, 4.0 * l2, -6.0 * l, 2.0 * l2,
        -12.0, -6.0 * l, 12.0, -6.0 * l,
        6.0 * l, 2.0 * l2, -6.0 * l, 4.0 * l2,
    ) * c
}

#[rustfmt::skip]
/// Consistent mass matrix, same DOF order.
fn element_mass(rho_a: f64, l: f64) -> Matrix4<f64> {
    let c = rho_a * l / 420.0;
    let l2 = l * l;
    Matrix4::new(
        156.0, 22.0 * l, 54.0, -13.0 * l,
        22.0 * l, 4.0 * l2, 13.0 * l, -3.0 * l2,
        54.0, 13.0 * l, 156.0, -22.0 * l,
        -13.0 * l, -3.0 * l2, -22.0 * l, 4.0 * l2,
    ) * c
}

pub fn assemble_system(mesh: &BeamMesh, material: &ToolMaterial) -> Result<SystemMatrices> {
    material.validate()?;
    let n_nodes = mesh.nodes.len();

    let mut dof_map = Vec::with_capacity(n_nodes);
    let mut next = 0;
    for node in 0..n_nodes {
        if node == mesh.clamped_node {
            dof_map.push(None);
        } else {
            dof_map.push(Some((next, next + 1)));
            next += 2;
        }
    }

    let mut mass = DMatrix::zeros(next, next);
    let mut stiffness = DMatrix::zeros(next, next);
    for el in &mesh.elements {
        let l = el.length(&mesh.nodes);
        let ke = element_stiffness(material.youngs_modulus * el.second_moment, l);
        let me = element_mass(material.density * el.area, l);
        let dofs = |node: usize| dof_map[node].map(|(t, r)| [t, r]);
        let mut global = [None; 4];
        if let Some([t, r]) = dofs(el.node_a) {
            global[0] = Some(t);
            global[1] = Some(r);
        }
        if let Some([t, r]) = dofs(el.node_b) {
            global[2] = Some(t);
            global[3] = Some(r);
        }
        for (i, gi) in global.iter().enumerate() {
            let Some(gi) = *gi else { continue };
            for (j, gj) in global.iter().enumerate() {
                let Some(gj) = *gj else { continue };
                stiffness[(gi, gj)] += ke[(i, j)];
                mass[(gi, gj)] += me[(i, j)];
            }
        }
    }

    Ok(SystemMatrices {
        mass,
        stiffness,
        dof_map,
    })
}
