//! Scaled monomial bases on elements and faces.
//!
//! Bases are hierarchical: the first `scalar_dim(m)` functions of an element
//! basis of degree `d >= m` span P^m(T), so lower-degree spaces are prefixes.
//! Element bases always start with a constant and, when not orthonormalised,
//! every other function has zero mean on the element.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::quadrature::QuadRule;
use crate::error::{Error, Result};
use crate::mesh::Point;

/// dim P^m in two variables.
pub fn scalar_dim(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

/// dim P^{k-1}, zero for k = 0.
pub fn scalar_dim_below(k: usize) -> usize {
    if k == 0 {
        0
    } else {
        scalar_dim(k - 1)
    }
}

/// Monomial exponents ordered by total degree, then by decreasing x power.
pub fn exponents(m: usize) -> Vec<(usize, usize)> {
    (0..=m).flat_map(|d| (0..=d).map(move |j| (d - j, j))).collect()
}

pub trait PolyBasis {
    fn len(&self) -> usize;

    fn degree(&self) -> usize;

    fn eval(&self, p: &Point) -> DVector<f64>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn powers(t: f64, m: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(m + 1);
    let mut acc = 1.0;
    for _ in 0..=m {
        v.push(acc);
        acc *= t;
    }
    v
}

fn gram_of(mono: impl Fn(&Point) -> DVector<f64>, n: usize, quad: &QuadRule) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(n, n);
    for (p, w) in quad.iter() {
        let v = mono(p);
        g.ger(w, &v, &v, 1.0);
    }
    g
}

/// Lower-triangular change of basis making the Gram matrix the identity.
fn hierarchical_orthonormalisation(gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = gram.nrows();
    let mut c = DMatrix::identity(n, n);
    // Two passes recover orthonormality lost to the conditioning of monomial Gram matrices.
    for _ in 0..2 {
        let g = &c * gram * c.transpose();
        let chol = Cholesky::new(g).ok_or_else(|| Error::Numeric("basis Gram matrix is not SPD".into()))?;
        let l = chol.l();
        let linv = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
        c = linv * c;
    }
    Ok(c)
}

/// Scalar basis of P^degree(T) built on ((x - x_T) / h_T)^alpha.
#[derive(Debug, Clone)]
pub struct ElementBasis {
    pub center: Point,
    pub scale: f64,
    pub degree: usize,
    exps: Vec<(usize, usize)>,
    /// Row i holds the monomial coefficients of basis function i.
    coeffs: DMatrix<f64>,
}

impl ElementBasis {
    pub fn new(center: Point, scale: f64, degree: usize, quad: &QuadRule, orthonormal: bool) -> Result<Self> {
        let exps = exponents(degree);
        let n = exps.len();
        let mut basis = Self { center, scale, degree, exps, coeffs: DMatrix::identity(n, n) };
        if orthonormal {
            let g = gram_of(|p| basis.monomials(p), n, quad);
            basis.coeffs = hierarchical_orthonormalisation(&g)?;
        } else {
            let area = quad.total_weight();
            let mut means = DVector::zeros(n);
            for (p, w) in quad.iter() {
                means.axpy(w / area, &basis.monomials(p), 1.0);
            }
            for i in 1..n {
                basis.coeffs[(i, 0)] = -means[i];
            }
        }
        Ok(basis)
    }

    fn monomials(&self, p: &Point) -> DVector<f64> {
        let x = (p.x - self.center.x) / self.scale;
        let y = (p.y - self.center.y) / self.scale;
        let px = powers(x, self.degree);
        let py = powers(y, self.degree);
        DVector::from_iterator(self.exps.len(), self.exps.iter().map(|&(a, b)| px[a] * py[b]))
    }

    /// Values and the two partial derivatives of every basis function.
    pub fn eval_with_gradients(&self, p: &Point) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let x = (p.x - self.center.x) / self.scale;
        let y = (p.y - self.center.y) / self.scale;
        let px = powers(x, self.degree);
        let py = powers(y, self.degree);
        let n = self.exps.len();
        let mut m = DVector::zeros(n);
        let mut mx = DVector::zeros(n);
        let mut my = DVector::zeros(n);
        for (i, &(a, b)) in self.exps.iter().enumerate() {
            m[i] = px[a] * py[b];
            if a > 0 {
                mx[i] = a as f64 * px[a - 1] * py[b] / self.scale;
            }
            if b > 0 {
                my[i] = b as f64 * px[a] * py[b - 1] / self.scale;
            }
        }
        (&self.coeffs * m, &self.coeffs * mx, &self.coeffs * my)
    }
}

impl PolyBasis for ElementBasis {
    fn len(&self) -> usize {
        self.exps.len()
    }

    fn degree(&self) -> usize {
        self.degree
    }

    fn eval(&self, p: &Point) -> DVector<f64> {
        &self.coeffs * self.monomials(p)
    }
}

/// Scalar basis of P^degree(F) built on ((s - s_mid) / h_F)^j, with s the arc length along F.
#[derive(Debug, Clone)]
pub struct FaceBasis {
    pub origin: Point,
    pub tangent: Point,
    pub scale: f64,
    pub degree: usize,
    coeffs: DMatrix<f64>,
}

impl FaceBasis {
    pub fn new(origin: Point, tangent: Point, scale: f64, degree: usize, quad: &QuadRule, orthonormal: bool) -> Result<Self> {
        let n = degree + 1;
        let mut basis = Self { origin, tangent, scale, degree, coeffs: DMatrix::identity(n, n) };
        if orthonormal {
            let g = gram_of(|p| basis.monomials(p), n, quad);
            basis.coeffs = hierarchical_orthonormalisation(&g)?;
        }
        Ok(basis)
    }

    fn monomials(&self, p: &Point) -> DVector<f64> {
        let s = (p - self.origin).dot(&self.tangent) / self.scale;
        DVector::from_vec(powers(s, self.degree))
    }
}

impl PolyBasis for FaceBasis {
    fn len(&self) -> usize {
        self.degree + 1
    }

    fn degree(&self) -> usize {
        self.degree
    }

    fn eval(&self, p: &Point) -> DVector<f64> {
        &self.coeffs * self.monomials(p)
    }
}

/// Gram matrix of the first `dim` functions of `basis`.
pub fn gram_matrix(basis: &impl PolyBasis, dim: usize, quad: &QuadRule) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(dim, dim);
    for (p, w) in quad.iter() {
        let v = basis.eval(p).rows(0, dim).into_owned();
        g.ger(w, &v, &v, 1.0);
    }
    g
}

/// L2-orthogonal projection of `f` onto the span of the first `dim` functions of `basis`.
pub fn l2_project(f: impl Fn(&Point) -> f64, basis: &impl PolyBasis, dim: usize, quad: &QuadRule) -> Result<DVector<f64>> {
    let mut gram = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    for (p, w) in quad.iter() {
        let v = basis.eval(p).rows(0, dim).into_owned();
        gram.ger(w, &v, &v, 1.0);
        rhs.axpy(w * f(p), &v, 1.0);
    }
    let chol = Cholesky::new(gram).ok_or_else(|| Error::Numeric("singular Gram matrix in L2 projection".into()))?;
    Ok(chol.solve(&rhs))
}

/// Evaluates sum_i c_i phi_i at `p` using the first `c.len()` basis functions.
pub fn eval_expansion(basis: &impl PolyBasis, c: &DVector<f64>, p: &Point) -> f64 {
    basis.eval(p).rows(0, c.len()).dot(c)
}
