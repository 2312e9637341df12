//! Global numbering of velocity, pressure and multiplier unknowns.
//!
//! Full system: `[interior faces | element velocities | pressures | multiplier]`.
//! Condensed system: `[interior faces | element mean pressures | multiplier]`.
//! Boundary faces carry prescribed values and are never numbered.

use serde::Serialize;

use crate::mesh::PolygonalMesh;
use crate::polyspace::scalar_dim;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GlobalDofMap {
    pub k: usize,
    pub n_elements: usize,
    pub n_interior_faces: usize,
    face_slot: Vec<Option<usize>>,
}

impl GlobalDofMap {
    pub fn new(mesh: &PolygonalMesh, k: usize) -> Self {
        let mut next = 0;
        let face_slot = mesh
            .faces
            .iter()
            .map(|f| {
                if f.boundary {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect();
        Self { k, n_elements: mesh.n_elements(), n_interior_faces: next, face_slot }
    }

    pub fn face_dim(&self) -> usize {
        2 * (self.k + 1)
    }

    pub fn scalar_element_dim(&self) -> usize {
        scalar_dim(self.k)
    }

    /// First unknown of face `f`, `None` for eliminated boundary faces.
    pub fn face_offset(&self, f: usize) -> Option<usize> {
        self.face_slot[f].map(|s| s * self.face_dim())
    }

    pub fn is_eliminated(&self, f: usize) -> bool {
        self.face_slot[f].is_none()
    }

    pub fn n_face_dofs(&self) -> usize {
        self.n_interior_faces * self.face_dim()
    }

    pub fn element_velocity_offset(&self, e: usize) -> usize {
        self.n_face_dofs() + e * 2 * self.scalar_element_dim()
    }

    pub fn pressure_offset(&self, e: usize) -> usize {
        self.n_face_dofs() + self.n_elements * 2 * self.scalar_element_dim() + e * self.scalar_element_dim()
    }

    pub fn multiplier(&self) -> usize {
        self.pressure_offset(self.n_elements)
    }

    pub fn total(&self) -> usize {
        self.multiplier() + 1
    }

    pub fn condensed_pressure(&self, e: usize) -> usize {
        self.n_face_dofs() + e
    }

    pub fn condensed_multiplier(&self) -> usize {
        self.n_face_dofs() + self.n_elements
    }

    pub fn condensed_total(&self) -> usize {
        self.condensed_multiplier() + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cartesian, Rectangle};

    #[test]
    fn offsets_partition_the_unknowns() {
        let mesh = generate_cartesian(3, Rectangle::unit()).unwrap();
        let d = GlobalDofMap::new(&mesh, 1);
        assert_eq!(d.n_interior_faces, 12);
        let mut seen = vec![0u8; d.total()];
        for f in 0..mesh.n_faces() {
            if let Some(o) = d.face_offset(f) {
                for i in 0..d.face_dim() {
                    seen[o + i] += 1;
                }
            }
        }
        for e in 0..9 {
            for i in 0..6 {
                seen[d.element_velocity_offset(e) + i] += 1;
            }
            for i in 0..3 {
                seen[d.pressure_offset(e) + i] += 1;
            }
        }
        seen[d.multiplier()] += 1;
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(d.condensed_total(), 12 * 4 + 9 + 1);
    }
}
