//! Per-element geometric and polynomial data shared by all local builders.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::dofs::{LocalDofLayout, LocalDofVector};
use super::DiscretisationConfig;
use crate::error::{Error, Result};
use crate::mesh::{Point, PolygonalMesh};
use crate::polyspace::{
    element_quadrature, face_quadrature, scalar_dim, ElementBasis, FaceBasis, PolyBasis, QuadRule,
};

/// `a^T diag(w) b` for tables of values at quadrature nodes (one row per node).
pub(crate) fn weighted_product(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut bw = b.clone();
    for (mut row, &wi) in bw.row_iter_mut().zip(w) {
        row *= wi;
    }
    a.transpose() * bw
}

fn table(basis: &impl PolyBasis, points: &[Point]) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(points.len(), basis.len());
    for (i, p) in points.iter().enumerate() {
        t.row_mut(i).copy_from(&basis.eval(p).transpose());
    }
    t
}

pub(crate) fn spd_inverse(m: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    Cholesky::new(m)
        .map(|c| c.solve(&DMatrix::identity(n, n)))
        .ok_or_else(|| Error::Numeric(format!("{what} mass matrix is not SPD")))
}

/// Basis of P^k(F) and the source-degree rule on face `f`; shared by both neighbours.
pub fn face_basis(mesh: &PolygonalMesh, f: usize, cfg: &DiscretisationConfig) -> Result<(FaceBasis, QuadRule)> {
    let face = &mesh.faces[f];
    let fq = face_quadrature(mesh, f, cfg.rhs_quad_degree());
    let fb = FaceBasis::new(face.midpoint, face.tangent, face.diameter, cfg.k, &fq, cfg.orthonormal_bases())?;
    Ok((fb, fq))
}

/// Face data seen from one element.
#[derive(Debug, Clone)]
pub struct FaceContext {
    pub face: usize,
    pub normal: Point,
    /// omega_TF.
    pub orientation: f64,
    pub boundary: bool,
    pub measure: f64,
    pub basis: FaceBasis,
    pub quad: QuadRule,
    /// Face basis values at `quad` nodes.
    pub(crate) psi: DMatrix<f64>,
    /// Element basis (degree k + 1) values at `quad` nodes.
    pub(crate) phi: DMatrix<f64>,
    /// Inverse face mass matrix of P^k(F).
    pub(crate) mass_inv: DMatrix<f64>,
}

impl FaceContext {
    pub fn mass(&self) -> DMatrix<f64> {
        weighted_product(&self.psi, &self.psi, &self.quad.weights)
    }
}

#[derive(Debug, Clone)]
pub struct ElementContext {
    pub element: usize,
    pub k: usize,
    pub diameter: f64,
    pub area: f64,
    pub center: Point,
    pub layout: LocalDofLayout,
    /// Hierarchical scalar basis of P^{k+1}(T).
    pub basis: ElementBasis,
    /// Rule of degree 2k + 3 used for operators.
    pub quad: QuadRule,
    /// Rule used for sources and interpolation of non-polynomial data.
    pub rhs_quad: QuadRule,
    pub faces: Vec<FaceContext>,
    pub(crate) phi: DMatrix<f64>,
    pub(crate) dphi_x: DMatrix<f64>,
    pub(crate) dphi_y: DMatrix<f64>,
    pub(crate) phi_rhs: DMatrix<f64>,
    pub(crate) mass_k_inv: DMatrix<f64>,
}

impl ElementContext {
    pub fn new(mesh: &PolygonalMesh, element: usize, cfg: &DiscretisationConfig) -> Result<Self> {
        let e = &mesh.elements[element];
        let k = cfg.k;
        let ortho = cfg.orthonormal_bases();
        let quad = element_quadrature(mesh, element, cfg.operator_quad_degree())?;
        let rhs_quad = element_quadrature(mesh, element, cfg.rhs_quad_degree())?;
        let basis = ElementBasis::new(e.center, e.diameter, k + 1, &quad, ortho)?;
        let nq = quad.len();
        let n1 = basis.len();
        let mut phi = DMatrix::zeros(nq, n1);
        let mut dphi_x = DMatrix::zeros(nq, n1);
        let mut dphi_y = DMatrix::zeros(nq, n1);
        for (i, p) in quad.points.iter().enumerate() {
            let (v, gx, gy) = basis.eval_with_gradients(p);
            phi.row_mut(i).copy_from(&v.transpose());
            dphi_x.row_mut(i).copy_from(&gx.transpose());
            dphi_y.row_mut(i).copy_from(&gy.transpose());
        }
        let phi_rhs = table(&basis, &rhs_quad.points);
        let nk = scalar_dim(k);
        let phik = phi.columns(0, nk).into_owned();
        let mass_k_inv = spd_inverse(weighted_product(&phik, &phik, &quad.weights), "element")?;

        let mut faces = Vec::with_capacity(e.n_faces());
        for (&f, &o) in e.faces.iter().zip(&e.orientations) {
            let face = &mesh.faces[f];
            let (fb, fq) = face_basis(mesh, f, cfg)?;
            let psi = table(&fb, &fq.points);
            let phi_f = table(&basis, &fq.points);
            let mass_inv = spd_inverse(weighted_product(&psi, &psi, &fq.weights), "face")?;
            faces.push(FaceContext {
                face: f,
                normal: face.normal,
                orientation: o,
                boundary: face.boundary,
                measure: face.measure,
                basis: fb,
                quad: fq,
                psi,
                phi: phi_f,
                mass_inv,
            });
        }
        Ok(Self {
            element,
            k,
            diameter: e.diameter,
            area: e.area,
            center: e.center,
            layout: LocalDofLayout::new(k, e.n_faces()),
            basis,
            quad,
            rhs_quad,
            faces,
            phi,
            dphi_x,
            dphi_y,
            phi_rhs,
            mass_k_inv,
        })
    }

    pub fn nk(&self) -> usize {
        scalar_dim(self.k)
    }

    pub fn nk1(&self) -> usize {
        scalar_dim(self.k + 1)
    }

    /// Columns `0..n` of the element value table.
    pub(crate) fn phi_cols(&self, n: usize) -> DMatrix<f64> {
        self.phi.columns(0, n).into_owned()
    }

    /// Element mass matrix of P^m(T) against P^n(T), both as prefixes of the basis.
    pub fn mass(&self, m: usize, n: usize) -> DMatrix<f64> {
        weighted_product(&self.phi_cols(m), &self.phi_cols(n), &self.quad.weights)
    }

    /// Integrals of the first `n` basis functions.
    pub fn basis_integrals(&self, n: usize) -> DVector<f64> {
        let w = DVector::from_column_slice(&self.quad.weights);
        self.phi_cols(n).transpose() * w
    }

    /// Moments `int_T f phi_i`, i < n, with the source rule.
    pub fn moments(&self, f: impl Fn(&Point) -> f64, n: usize) -> DVector<f64> {
        let mut m = DVector::zeros(n);
        for (i, (p, w)) in self.rhs_quad.iter().enumerate() {
            let fv = f(p);
            if fv != 0.0 {
                m.axpy(w * fv, &self.phi_rhs.row(i).columns(0, n).transpose(), 1.0);
            }
        }
        m
    }

    /// Coefficients of pi^k_T f in the scalar P^k basis.
    pub fn project_scalar(&self, f: impl Fn(&Point) -> f64) -> DVector<f64> {
        &self.mass_k_inv * self.moments(f, self.nk())
    }

    /// Local interpolate I_T^k v.
    pub fn interpolate(&self, v: impl Fn(&Point) -> Point) -> LocalDofVector {
        let l = self.layout;
        let nk = self.nk();
        let nf = l.scalar_face_dim();
        let mut out = DVector::zeros(l.total());
        for c in 0..2 {
            let pc = self.project_scalar(|p| v(p)[c]);
            out.rows_mut(l.element_index(c, 0), nk).copy_from(&pc);
        }
        for (f, fc) in self.faces.iter().enumerate() {
            let mut m0 = DVector::zeros(nf);
            let mut m1 = DVector::zeros(nf);
            for (i, (p, w)) in fc.quad.iter().enumerate() {
                let val = v(p);
                let row = fc.psi.row(i).transpose();
                m0.axpy(w * val.x, &row, 1.0);
                m1.axpy(w * val.y, &row, 1.0);
            }
            out.rows_mut(l.face_index(f, 0, 0), nf).copy_from(&(&fc.mass_inv * m0));
            out.rows_mut(l.face_index(f, 1, 0), nf).copy_from(&(&fc.mass_inv * m1));
        }
        LocalDofVector::new(l, out)
    }

    /// Matrix of I_T^k restricted to vP^m(T), m <= k + 1: maps component-major
    /// coefficients (size 2 dim P^m) to local DOFs.
    pub fn interpolation_matrix(&self, m: usize) -> DMatrix<f64> {
        let l = self.layout;
        let nk = self.nk();
        let nm = scalar_dim(m);
        let nf = l.scalar_face_dim();
        let mut out = DMatrix::zeros(l.total(), 2 * nm);
        let elem = &self.mass_k_inv * self.mass(nk, nm);
        for c in 0..2 {
            out.view_mut((l.element_index(c, 0), c * nm), (nk, nm)).copy_from(&elem);
        }
        for (f, fc) in self.faces.iter().enumerate() {
            let cross = weighted_product(&fc.psi, &fc.phi.columns(0, nm).into_owned(), &fc.quad.weights);
            let block = &fc.mass_inv * cross;
            for c in 0..2 {
                out.view_mut((l.face_index(f, c, 0), c * nm), (nf, nm)).copy_from(&block);
            }
        }
        out
    }

    /// Evaluates a component-major vector polynomial (coefficients over the first
    /// `coeffs.len() / 2` basis functions) at `p`.
    pub fn eval_vector(&self, coeffs: &DVector<f64>, p: &Point) -> Point {
        let n = coeffs.len() / 2;
        let v = self.basis.eval(p);
        let v = v.rows(0, n);
        Point::new(v.dot(&coeffs.rows(0, n)), v.dot(&coeffs.rows(n, n)))
    }

    pub fn eval_scalar(&self, coeffs: &DVector<f64>, p: &Point) -> f64 {
        self.basis.eval(p).rows(0, coeffs.len()).dot(coeffs)
    }

    /// Block-diagonal vector mass matrix of vP^k(T).
    pub fn vector_mass(&self) -> DMatrix<f64> {
        let nk = self.nk();
        let m = self.mass(nk, nk);
        let mut out = DMatrix::zeros(2 * nk, 2 * nk);
        for c in 0..2 {
            out.view_mut((c * nk, c * nk), (nk, nk)).copy_from(&m);
        }
        out
    }

    pub(crate) fn dphi(&self, b: usize) -> &DMatrix<f64> {
        if b == 0 {
            &self.dphi_x
        } else {
            &self.dphi_y
        }
    }
}

/// Extracts the element block of a local vector as a matrix `[I 0]`.
pub(crate) fn element_extraction(layout: &LocalDofLayout) -> DMatrix<f64> {
    let ne = layout.element_dim();
    let mut e = DMatrix::zeros(ne, layout.total());
    e.view_mut((0, 0), (ne, ne)).fill_with_identity();
    e
}
