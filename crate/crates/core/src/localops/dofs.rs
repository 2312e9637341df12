//! Layout of the local HHO space U_T^k.
//!
//! Local vectors are stored as `[v_T | v_F1 | v_F2 | ...]`, each block
//! component-major: `[x-component coefficients, y-component coefficients]`.

use nalgebra::DVector;

use crate::polyspace::scalar_dim;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalDofLayout {
    pub k: usize,
    pub n_faces: usize,
}

impl LocalDofLayout {
    pub fn new(k: usize, n_faces: usize) -> Self {
        Self { k, n_faces }
    }

    /// dim P^k(T).
    pub fn scalar_element_dim(&self) -> usize {
        scalar_dim(self.k)
    }

    /// dim P^k(F).
    pub fn scalar_face_dim(&self) -> usize {
        self.k + 1
    }

    pub fn element_dim(&self) -> usize {
        2 * self.scalar_element_dim()
    }

    pub fn face_dim(&self) -> usize {
        2 * self.scalar_face_dim()
    }

    pub fn total(&self) -> usize {
        self.element_dim() + self.n_faces * self.face_dim()
    }

    pub fn face_offset(&self, local_face: usize) -> usize {
        self.element_dim() + local_face * self.face_dim()
    }

    /// Index of element coefficient `i` of component `c`.
    pub fn element_index(&self, c: usize, i: usize) -> usize {
        c * self.scalar_element_dim() + i
    }

    /// Index of face coefficient `j` of component `c` on local face `f`.
    pub fn face_index(&self, f: usize, c: usize, j: usize) -> usize {
        self.face_offset(f) + c * self.scalar_face_dim() + j
    }

    /// Size of the scalar counterpart (one component).
    pub fn scalar_total(&self) -> usize {
        self.scalar_element_dim() + self.n_faces * self.scalar_face_dim()
    }

    /// Vector index of scalar DOF `s` in component `c`.
    pub fn vector_index(&self, c: usize, s: usize) -> usize {
        let ne = self.scalar_element_dim();
        if s < ne {
            self.element_index(c, s)
        } else {
            let s = s - ne;
            let nf = self.scalar_face_dim();
            self.face_index(s / nf, c, s % nf)
        }
    }
}

/// Coefficients of one element's block of U_h^k.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDofVector {
    pub layout: LocalDofLayout,
    pub coeffs: DVector<f64>,
}

impl LocalDofVector {
    pub fn new(layout: LocalDofLayout, coeffs: DVector<f64>) -> Self {
        assert_eq!(coeffs.len(), layout.total(), "coefficient vector does not match layout");
        Self { layout, coeffs }
    }

    pub fn zeros(layout: LocalDofLayout) -> Self {
        Self { layout, coeffs: DVector::zeros(layout.total()) }
    }

    pub fn element_block(&self) -> DVector<f64> {
        self.coeffs.rows(0, self.layout.element_dim()).into_owned()
    }

    pub fn face_block(&self, f: usize) -> DVector<f64> {
        self.coeffs.rows(self.layout.face_offset(f), self.layout.face_dim()).into_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_match_formula() {
        for k in 0..4 {
            for nf in 3..8 {
                let l = LocalDofLayout::new(k, nf);
                assert_eq!(l.total(), (k + 1) * (k + 2) + nf * 2 * (k + 1));
            }
        }
    }

    #[test]
    fn vector_index_is_a_bijection() {
        let l = LocalDofLayout::new(2, 5);
        let mut seen = vec![false; l.total()];
        for c in 0..2 {
            for s in 0..l.scalar_total() {
                let i = l.vector_index(c, s);
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert!(seen.into_iter().all(|b| b));
    }
}
