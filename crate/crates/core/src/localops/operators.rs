//! Local reconstructions, bilinear forms and stabilisations on one element.

use nalgebra::{DMatrix, DVector};

use super::coefficients::Friction;
use super::context::{element_extraction, spd_inverse, weighted_product, ElementContext};
use super::dofs::LocalDofLayout;
use super::DiscretisationConfig;
use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::polyspace::{goly_cgoly_values, goly_dim, scalar_dim_below};

/// Every local operator of one element, as dense matrices acting on local DOFs.
///
/// Vector polynomials are stored component-major; the gradient stores the
/// (a, b) entry `d_b v_a` in row block `2 a + b`.
#[derive(Debug, Clone)]
pub struct LocalOperatorSet {
    pub element: usize,
    pub layout: LocalDofLayout,
    pub friction: Friction,
    pub mu: f64,
    pub nu: f64,
    /// G_T: U_T -> P^k(T)^{2x2}.
    pub gradient: DMatrix<f64>,
    /// D_T = tr G_T.
    pub divergence: DMatrix<f64>,
    /// P_S: U_T -> vP^{k+1}(T).
    pub stokes_potential: DMatrix<f64>,
    /// P_D: U_T -> vP^k(T).
    pub darcy_potential: DMatrix<f64>,
    /// Element extraction when Stokes-dominated, P_D otherwise.
    pub regime_potential: DMatrix<f64>,
    /// Local inner product inducing the U-norm.
    pub u_product: DMatrix<f64>,
    pub stokes_consistent: DMatrix<f64>,
    pub stokes_stabilisation: DMatrix<f64>,
    pub darcy_consistent: DMatrix<f64>,
    pub darcy_stabilisation: DMatrix<f64>,
    /// Row i: -int D_T v phi_i, with phi_i the pressure basis of P^k(T).
    pub coupling: DMatrix<f64>,
    pub mass_k: DMatrix<f64>,
}

impl LocalOperatorSet {
    pub fn stokes_form(&self) -> DMatrix<f64> {
        &self.stokes_consistent + &self.stokes_stabilisation
    }

    pub fn darcy_form(&self) -> DMatrix<f64> {
        &self.darcy_consistent + &self.darcy_stabilisation
    }

    /// mu A_S + nu A_D.
    pub fn velocity_matrix(&self) -> DMatrix<f64> {
        self.stokes_form() * self.mu + self.darcy_form() * self.nu
    }
}

/// Scalar gradient of one direction: P^k coefficients from scalar local DOFs
/// `[v_T | v_F1 | ...]`.
fn scalar_gradient(ctx: &ElementContext, b: usize) -> DMatrix<f64> {
    let l = ctx.layout;
    let nk = ctx.nk();
    let nf = l.scalar_face_dim();
    let mut rhs = DMatrix::zeros(nk, l.scalar_total());
    let dphi = ctx.dphi(b).columns(0, nk).into_owned();
    let vol = -weighted_product(&ctx.phi_cols(nk), &dphi, &ctx.quad.weights).transpose();
    rhs.view_mut((0, 0), (nk, nk)).copy_from(&vol);
    for (f, fc) in ctx.faces.iter().enumerate() {
        let phi = fc.phi.columns(0, nk).into_owned();
        let block = weighted_product(&phi, &fc.psi, &fc.quad.weights) * (fc.orientation * fc.normal[b]);
        rhs.view_mut((0, nk + f * nf), (nk, nf)).copy_from(&block);
    }
    &ctx.mass_k_inv * rhs
}

pub fn gradient_operator(ctx: &ElementContext) -> DMatrix<f64> {
    let l = ctx.layout;
    let nk = ctx.nk();
    let mut g = DMatrix::zeros(4 * nk, l.total());
    for b in 0..2 {
        let gs = scalar_gradient(ctx, b);
        for a in 0..2 {
            let row = (2 * a + b) * nk;
            for s in 0..l.scalar_total() {
                g.view_mut((row, l.vector_index(a, s)), (nk, 1)).copy_from(&gs.column(s));
            }
        }
    }
    g
}

/// P_S from the gradient: int grad P_a . grad w = int G_a . grad w for w in P^{k+1},
/// and int P_a = int v_{T,a}.
pub fn stokes_potential_operator(ctx: &ElementContext, gradient: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l = ctx.layout;
    let nk = ctx.nk();
    let n1 = ctx.nk1();
    let w = &ctx.quad.weights;
    let dx = ctx.dphi_x.columns(1, n1 - 1).into_owned();
    let dy = ctx.dphi_y.columns(1, n1 - 1).into_owned();
    let stiff = weighted_product(&dx, &dx, w) + weighted_product(&dy, &dy, w);
    let stiff_inv = spd_inverse(stiff, "stiffness")?;
    let phik = ctx.phi_cols(nk);
    let cross = [weighted_product(&dx, &phik, w), weighted_product(&dy, &phik, w)];
    let ints = ctx.basis_integrals(n1);
    let mut p = DMatrix::zeros(2 * n1, l.total());
    for a in 0..2 {
        let mut rhs = DMatrix::zeros(n1 - 1, l.total());
        for b in 0..2 {
            rhs += &cross[b] * gradient.rows((2 * a + b) * nk, nk);
        }
        let hi = &stiff_inv * rhs;
        // mean condition: sum_i c_i int phi_i = int v_{T,a}
        let mut c0 = DMatrix::zeros(1, l.total());
        for i in 0..nk {
            c0[(0, l.element_index(a, i))] += ints[i];
        }
        c0 -= ints.rows(1, n1 - 1).transpose() * &hi;
        c0 /= ints[0];
        p.view_mut((a * n1, 0), (1, l.total())).copy_from(&c0);
        p.view_mut((a * n1 + 1, 0), (n1 - 1, l.total())).copy_from(&hi);
    }
    Ok(p)
}

/// P_D: int P_D v . grad w = -int D_T v w + sum_F omega int_F (v_F . n) w for w in P^{k+1},
/// and int P_D v . z = int v_T . z for z in cGoly^k(T).
pub fn darcy_potential_operator(ctx: &ElementContext, divergence: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l = ctx.layout;
    let k = ctx.k;
    let nk = ctx.nk();
    let n = 2 * nk;
    let ng = goly_dim(k);
    let nc = scalar_dim_below(k);
    let w = &ctx.quad.weights;
    let mut sys = DMatrix::zeros(n, n);
    for (q, p) in ctx.quad.points.iter().enumerate() {
        let tests = goly_cgoly_values(&ctx.basis, k, p);
        for (t, tv) in tests.iter().enumerate() {
            for c in 0..2 {
                let s = w[q] * tv[c];
                for i in 0..nk {
                    sys[(t, c * nk + i)] += s * ctx.phi[(q, i)];
                }
            }
        }
    }
    let mut rhs = DMatrix::zeros(n, l.total());
    let phig = ctx.phi.columns(1, ng).into_owned();
    let m_gk = weighted_product(&phig, &ctx.phi_cols(nk), w);
    rhs.rows_mut(0, ng).copy_from(&(-&m_gk * divergence));
    let nf = l.scalar_face_dim();
    for (f, fc) in ctx.faces.iter().enumerate() {
        let phi = fc.phi.columns(1, ng).into_owned();
        let m = weighted_product(&phi, &fc.psi, &fc.quad.weights) * fc.orientation;
        for c in 0..2 {
            let block = &m * fc.normal[c];
            let mut view = rhs.view_mut((0, l.face_index(f, c, 0)), (ng, nf));
            view += block;
        }
    }
    // cGoly rows act on the element unknowns exactly as the system rows do.
    if nc > 0 {
        let cg = sys.rows(ng, nc).into_owned();
        rhs.view_mut((ng, 0), (nc, n)).copy_from(&cg);
    }
    let lu = sys.lu();
    lu.solve(&rhs)
        .ok_or_else(|| Error::Decomposition { element: ctx.element, reason: "Darcy potential system is singular".into() })
}

/// Local U-product: lambda_T (v_T, w_T)_T + h_T sum_F (v_F, w_F)_F, boundary faces
/// only contributing on Stokes-dominated elements.
pub fn u_product(ctx: &ElementContext, lambda: f64, stokes_dominated: bool) -> DMatrix<f64> {
    let l = ctx.layout;
    let mut m = DMatrix::zeros(l.total(), l.total());
    let ne = l.element_dim();
    m.view_mut((0, 0), (ne, ne)).copy_from(&(ctx.vector_mass() * lambda));
    let nf = l.scalar_face_dim();
    for (f, fc) in ctx.faces.iter().enumerate() {
        if fc.boundary && !stokes_dominated {
            continue;
        }
        let fm = fc.mass() * ctx.diameter;
        for c in 0..2 {
            let i = l.face_index(f, c, 0);
            m.view_mut((i, i), (nf, nf)).copy_from(&fm);
        }
    }
    m
}

fn symmetrise(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub fn build_local_operators(
    ctx: &ElementContext,
    mu: f64,
    nu: f64,
    friction: Friction,
    lambda: f64,
    cfg: &DiscretisationConfig,
) -> Result<LocalOperatorSet> {
    let l = ctx.layout;
    let nk = ctx.nk();
    let n = l.total();
    let h = ctx.diameter;
    let gradient = gradient_operator(ctx);
    let mut divergence = gradient.rows(0, nk).into_owned();
    divergence += gradient.rows(3 * nk, nk);
    let stokes_potential = stokes_potential_operator(ctx, &gradient)?;
    let darcy_potential = darcy_potential_operator(ctx, &divergence)?;
    let stokes = friction.stokes_dominated();
    let regime_potential = if stokes { element_extraction(&l) } else { darcy_potential.clone() };
    let mu_prod = u_product(ctx, lambda, stokes);

    let mass_k = ctx.mass(nk, nk);
    let mut mass_tensor = DMatrix::zeros(4 * nk, 4 * nk);
    for r in 0..4 {
        mass_tensor.view_mut((r * nk, r * nk), (nk, nk)).copy_from(&mass_k);
    }
    let stokes_consistent = symmetrise(gradient.transpose() * &mass_tensor * &gradient);
    let ds = DMatrix::identity(n, n) - ctx.interpolation_matrix(ctx.k + 1) * &stokes_potential;
    let stokes_stabilisation = symmetrise(
        ds.transpose() * &mu_prod * &ds * (cfg.stab_scale_stokes * friction.stokes_cutoff() / (h * h)),
    );

    let vmass = ctx.vector_mass();
    let darcy_consistent = symmetrise(regime_potential.transpose() * &vmass * &regime_potential);
    let dd = DMatrix::identity(n, n) - ctx.interpolation_matrix(ctx.k) * &darcy_potential;
    let darcy_stabilisation =
        symmetrise(dd.transpose() * &mu_prod * &dd * (cfg.stab_scale_darcy * friction.darcy_cutoff()));

    let coupling = -(&mass_k * &divergence);
    Ok(LocalOperatorSet {
        element: ctx.element,
        layout: l,
        friction,
        mu,
        nu,
        gradient,
        divergence,
        stokes_potential,
        darcy_potential,
        regime_potential,
        u_product: mu_prod,
        stokes_consistent,
        stokes_stabilisation,
        darcy_consistent,
        darcy_stabilisation,
        coupling,
        mass_k,
    })
}

/// Load vector `int f . P~_D v` for a source `f`.
pub fn load_vector(ctx: &ElementContext, ops: &LocalOperatorSet, f: impl Fn(&Point) -> Point) -> DVector<f64> {
    let nk = ctx.nk();
    let mut m = DVector::zeros(2 * nk);
    for (i, (p, w)) in ctx.rhs_quad.iter().enumerate() {
        let fv = f(p);
        let row = ctx.phi_rhs.row(i).columns(0, nk).transpose();
        m.rows_mut(0, nk).axpy(w * fv.x, &row, 1.0);
        m.rows_mut(nk, nk).axpy(w * fv.y, &row, 1.0);
    }
    ops.regime_potential.transpose() * m
}
