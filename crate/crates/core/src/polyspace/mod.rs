//! Polynomial spaces on elements and faces: bases, quadrature, projectors, and
//! the direct decomposition vP^m(T) = Goly^m(T) + cGoly^m(T).
//!
//! In two dimensions Goly^m(T) = grad P^{m+1}(T) and
//! cGoly^m(T) = (x - x_T)^perp P^{m-1}(T), where v^perp rotates v by -pi/2.

pub mod basis;
pub mod quadrature;

use nalgebra::{DMatrix, SymmetricEigen};

pub use basis::{
    eval_expansion, exponents, gram_matrix, l2_project, scalar_dim, scalar_dim_below, ElementBasis, FaceBasis,
    PolyBasis,
};
pub use quadrature::{element_quadrature, face_quadrature, gauss_legendre, polygon_rule, segment_rule, QuadRule};

use crate::error::{Error, Result};
use crate::mesh::Point;

/// Rotation by -pi/2.
pub fn perp(v: &Point) -> Point {
    Point::new(v.y, -v.x)
}

/// dim Goly^m = dim P^{m+1} - 1.
pub fn goly_dim(m: usize) -> usize {
    scalar_dim(m + 1) - 1
}

/// dim cGoly^m = dim P^{m-1}.
pub fn cgoly_dim(m: usize) -> usize {
    scalar_dim_below(m)
}

/// Values at `p` of the Goly^m basis {grad phi_i : 1 <= i < dim P^{m+1}} followed by the
/// cGoly^m basis {((x - x_T) / h_T)^perp phi_j : j < dim P^{m-1}}.
///
/// `basis` must have degree at least m + 1.
pub fn goly_cgoly_values(basis: &ElementBasis, m: usize, p: &Point) -> Vec<Point> {
    let (v, gx, gy) = basis.eval_with_gradients(p);
    let mut out = Vec::with_capacity(2 * scalar_dim(m));
    for i in 1..scalar_dim(m + 1) {
        out.push(Point::new(gx[i], gy[i]));
    }
    let r = perp(&((p - basis.center) / basis.scale));
    for j in 0..cgoly_dim(m) {
        out.push(r * v[j]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub degree: usize,
    pub goly_dim: usize,
    pub cgoly_dim: usize,
    pub vector_dim: usize,
    /// Extreme eigenvalues of the unit-diagonal joint Gram matrix.
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

/// Checks that Goly^m(T) and cGoly^m(T) jointly span vP^m(T).
pub fn decompose_check(element: usize, m: usize, basis: &ElementBasis, quad: &QuadRule) -> Result<DecompositionReport> {
    if basis.degree < m + 1 {
        return Err(Error::Config(format!("basis degree {} below {}", basis.degree, m + 1)));
    }
    let n = goly_dim(m) + cgoly_dim(m);
    let vector_dim = 2 * scalar_dim(m);
    if n != vector_dim {
        return Err(Error::Decomposition { element, reason: format!("dimension mismatch {n} != {vector_dim}") });
    }
    let mut g = DMatrix::<f64>::zeros(n, n);
    for (p, w) in quad.iter() {
        let vals = goly_cgoly_values(basis, m, p);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] += w * vals[i].dot(&vals[j]);
            }
        }
    }
    let d: Vec<f64> = (0..n).map(|i| g[(i, i)].sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] /= d[i] * d[j];
        }
    }
    let eig = SymmetricEigen::new(g).eigenvalues;
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(0.0, f64::max);
    if !(min > 1e-12 * max) {
        return Err(Error::Decomposition {
            element,
            reason: format!("joint Gram matrix rank deficient (eigenvalues {min:e}..{max:e})"),
        });
    }
    Ok(DecompositionReport {
        degree: m,
        goly_dim: goly_dim(m),
        cgoly_dim: cgoly_dim(m),
        vector_dim,
        min_eigenvalue: min,
        max_eigenvalue: max,
    })
}
