//! Element stage, global saddle-point systems, static condensation and solve.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::boundary::BoundaryData;
use super::dofmap::GlobalDofMap;
use super::sparse::{solve_direct, CscMatrix, SolveOutcome, SparseLu, TripletBuilder};
use crate::error::{Error, Result};
use crate::localops::context::face_basis;
use crate::localops::{
    element_operators, load_vector, CoefficientField, DiscretisationConfig, ElementContext, Friction, LocalDofLayout,
    RegimeCensus,
};
use crate::mesh::{Point, PolygonalMesh};
use crate::polyspace::l2_project;

pub type VectorField<'a> = &'a (dyn Fn(&Point) -> Point + Sync);
pub type ScalarField<'a> = &'a (dyn Fn(&Point) -> f64 + Sync);

/// Right-hand sides of the momentum (f) and mass (g) equations.
#[derive(Clone, Copy)]
pub struct Sources<'a> {
    pub f: VectorField<'a>,
    pub g: ScalarField<'a>,
}

/// Runs `op` on a dedicated pool of `workers` threads (0 = rayon default).
pub fn with_workers<T: Send>(workers: usize, op: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot create worker pool: {e}")))?;
    Ok(pool.install(op))
}

/// Everything the global stage needs from one element.
#[derive(Debug, Clone)]
pub struct ElementBlock {
    pub element: usize,
    pub faces: Vec<usize>,
    pub layout: LocalDofLayout,
    pub friction: Friction,
    pub mu: f64,
    pub nu: f64,
    /// a_{S,T} (without mu).
    pub stokes: DMatrix<f64>,
    /// a_{D,T} (without nu).
    pub darcy: DMatrix<f64>,
    /// Row i: -int D_T v phi_i.
    pub coupling: DMatrix<f64>,
    /// int f . P~_D v.
    pub load: DVector<f64>,
    /// int g phi_i.
    pub mass_moments: DVector<f64>,
    pub pressure_integrals: DVector<f64>,
    pub pressure_mass: DMatrix<f64>,
}

impl ElementBlock {
    pub fn velocity_matrix(&self) -> DMatrix<f64> {
        &self.stokes * self.mu + &self.darcy * self.nu
    }

    pub fn nk(&self) -> usize {
        self.coupling.nrows()
    }

    /// Symmetric local saddle-point matrix on `[u_T, u_F... | p]`.
    fn saddle_matrix(&self) -> DMatrix<f64> {
        let n = self.layout.total();
        let nk = self.nk();
        let mut l = DMatrix::zeros(n + nk, n + nk);
        l.view_mut((0, 0), (n, n)).copy_from(&self.velocity_matrix());
        l.view_mut((n, 0), (nk, n)).copy_from(&self.coupling);
        l.view_mut((0, n), (n, nk)).copy_from(&self.coupling.transpose());
        l
    }

    /// Right-hand side `[F_T | -G_T]`.
    fn saddle_rhs(&self) -> DVector<f64> {
        let n = self.layout.total();
        let nk = self.nk();
        let mut r = DVector::zeros(n + nk);
        r.rows_mut(0, n).copy_from(&self.load);
        r.rows_mut(n, nk).copy_from(&(-&self.mass_moments));
        r
    }
}

pub fn build_element_blocks(
    mesh: &PolygonalMesh,
    coeffs: &CoefficientField,
    sources: Sources<'_>,
    cfg: &DiscretisationConfig,
) -> Result<Vec<ElementBlock>> {
    (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let (ctx, ops) = element_operators(mesh, e, coeffs, cfg)?;
            let nk = ctx.nk();
            let load = load_vector(&ctx, &ops, sources.f);
            let mass_moments = ctx.moments(sources.g, nk);
            Ok(ElementBlock {
                element: e,
                faces: mesh.elements[e].faces.clone(),
                layout: ctx.layout,
                friction: ops.friction,
                mu: ops.mu,
                nu: ops.nu,
                stokes: ops.stokes_form(),
                darcy: ops.darcy_form(),
                coupling: ops.coupling,
                load,
                mass_moments,
                pressure_integrals: ctx.basis_integrals(nk),
                pressure_mass: ops.mass_k,
            })
        })
        .collect()
}

/// Velocity unknowns on every face and element.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityDofs {
    pub k: usize,
    pub faces: Vec<DVector<f64>>,
    pub elements: Vec<DVector<f64>>,
}

impl VelocityDofs {
    pub fn zeros(mesh: &PolygonalMesh, k: usize) -> Self {
        let nk = crate::polyspace::scalar_dim(k);
        Self {
            k,
            faces: vec![DVector::zeros(2 * (k + 1)); mesh.n_faces()],
            elements: vec![DVector::zeros(2 * nk); mesh.n_elements()],
        }
    }

    /// Local vector of element `e` in the `LocalDofLayout` ordering.
    pub fn local(&self, mesh: &PolygonalMesh, e: usize) -> DVector<f64> {
        let el = &mesh.elements[e];
        let l = LocalDofLayout::new(self.k, el.n_faces());
        let mut v = DVector::zeros(l.total());
        v.rows_mut(0, l.element_dim()).copy_from(&self.elements[e]);
        for (i, &f) in el.faces.iter().enumerate() {
            v.rows_mut(l.face_offset(i), l.face_dim()).copy_from(&self.faces[f]);
        }
        v
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            k: self.k,
            faces: self.faces.iter().zip(&other.faces).map(|(a, b)| a - b).collect(),
            elements: self.elements.iter().zip(&other.elements).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            k: self.k,
            faces: self.faces.iter().map(|a| a * s).collect(),
            elements: self.elements.iter().map(|a| a * s).collect(),
        }
    }
}

/// Global interpolate I_h^k u; with the pure-Darcy convention, boundary faces take the
/// prescribed boundary values instead of the trace of `u`.
pub fn interpolate_velocity(
    mesh: &PolygonalMesh,
    cfg: &DiscretisationConfig,
    u: VectorField<'_>,
    boundary: Option<&BoundaryData>,
) -> Result<VelocityDofs> {
    let k = cfg.k;
    let faces = (0..mesh.n_faces())
        .into_par_iter()
        .map(|f| {
            if let Some(b) = boundary.filter(|b| b.pure_darcy_convention && mesh.faces[f].boundary) {
                return Ok(b.face_values(f).cloned().unwrap_or_else(|| DVector::zeros(2 * (k + 1))));
            }
            let (fb, _) = face_basis(mesh, f, cfg)?;
            let fq = super::boundary::trace_quadrature(mesh, f, k);
            let cx = l2_project(|p| u(p).x, &fb, k + 1, &fq)?;
            let cy = l2_project(|p| u(p).y, &fb, k + 1, &fq)?;
            let mut v = DVector::zeros(2 * (k + 1));
            v.rows_mut(0, k + 1).copy_from(&cx);
            v.rows_mut(k + 1, k + 1).copy_from(&cy);
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let elements = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let ctx = ElementContext::new(mesh, e, cfg)?;
            let nk = ctx.nk();
            let mut v = DVector::zeros(2 * nk);
            v.rows_mut(0, nk).copy_from(&ctx.project_scalar(|p| u(p).x));
            v.rows_mut(nk, nk).copy_from(&ctx.project_scalar(|p| u(p).y));
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VelocityDofs { k, faces, elements })
}

/// Broken P^k pressure coefficients per element.
pub fn project_pressure(mesh: &PolygonalMesh, cfg: &DiscretisationConfig, p: ScalarField<'_>) -> Result<Vec<DVector<f64>>> {
    (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| Ok(ElementContext::new(mesh, e, cfg)?.project_scalar(p)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub velocity: VelocityDofs,
    pub pressure: Vec<DVector<f64>>,
    pub multiplier: f64,
}

/// Diagnostics of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveReport {
    pub unknowns: usize,
    pub nnz: usize,
    pub relative_residual: f64,
    pub refinement_steps: usize,
    pub condensed: bool,
    pub time_solve: f64,
}

/// Full symmetric saddle-point system `[[A, B^T, 0], [B, 0, m], [0, m^T, 0]]`.
///
/// The mass rows hold `B u = -G`, i.e. the negative of the second equation of the
/// skew formulation; `skew_matrix` restores it.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub dofs: GlobalDofMap,
    pub matrix: CscMatrix,
    pub rhs: DVector<f64>,
}

impl GlobalSystem {
    /// Matrix with pressure rows negated: `[[A, B^T], [-B, 0]]`.
    pub fn skew_matrix(&self) -> CscMatrix {
        let p0 = self.dofs.pressure_offset(0);
        let p1 = self.dofs.multiplier();
        let mut m = self.matrix.clone();
        for c in 0..m.n {
            for k in m.col_ptr[c]..m.col_ptr[c + 1] {
                if (p0..p1).contains(&m.row_idx[k]) {
                    m.values[k] = -m.values[k];
                }
            }
        }
        m
    }
}

/// Per-element data to recover eliminated unknowns from the kept ones.
#[derive(Debug, Clone)]
struct Recovery {
    /// L_EE^{-1} r_E.
    particular: DVector<f64>,
    /// L_EE^{-1} L_EK.
    coupling: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct CondensedSystem {
    pub dofs: GlobalDofMap,
    pub matrix: CscMatrix,
    pub rhs: DVector<f64>,
    recovery: Vec<Recovery>,
}

/// Assembled discrete problem.
#[derive(Debug, Clone)]
pub struct Discretisation {
    pub config: DiscretisationConfig,
    pub dofs: GlobalDofMap,
    pub blocks: Vec<ElementBlock>,
    pub boundary: BoundaryData,
    pub census: RegimeCensus,
    pub time_assembly: f64,
}

/// Builds every element block (in parallel on `workers` threads) for the given data.
pub fn discretise(
    mesh: &PolygonalMesh,
    coeffs: &CoefficientField,
    sources: Sources<'_>,
    boundary: BoundaryData,
    cfg: &DiscretisationConfig,
    workers: usize,
) -> Result<Discretisation> {
    cfg.validate()?;
    if coeffs.mu.len() != mesh.n_elements() {
        return Err(Error::Config(format!(
            "coefficient field has {} entries for {} elements",
            coeffs.mu.len(),
            mesh.n_elements()
        )));
    }
    if boundary.k != cfg.k {
        return Err(Error::Config(format!("boundary data of degree {} for k = {}", boundary.k, cfg.k)));
    }
    super::boundary::check_compatibility(mesh, sources.g, &boundary, cfg)?;
    let start = Instant::now();
    let blocks = with_workers(workers, || build_element_blocks(mesh, coeffs, sources, cfg))??;
    Ok(Discretisation {
        config: cfg.clone(),
        dofs: GlobalDofMap::new(mesh, cfg.k),
        blocks,
        boundary,
        census: coeffs.census(),
        time_assembly: start.elapsed().as_secs_f64(),
    })
}

/// Where a local velocity unknown lives globally.
enum Slot {
    Free(usize),
    Fixed(f64),
}

impl Discretisation {
    fn nk(&self) -> usize {
        self.dofs.scalar_element_dim()
    }

    /// Global slot of local velocity index `i` of `block` (face unknowns only).
    fn face_slot(&self, block: &ElementBlock, i: usize) -> Slot {
        let l = block.layout;
        let local_face = (i - l.element_dim()) / l.face_dim();
        let j = (i - l.element_dim()) % l.face_dim();
        let f = block.faces[local_face];
        match self.dofs.face_offset(f) {
            Some(o) => Slot::Free(o + j),
            None => Slot::Fixed(self.boundary.face_values(f).map_or(0.0, |v| v[j])),
        }
    }

    /// Uncondensed system with boundary faces lifted to the right-hand side.
    pub fn full_system(&self) -> GlobalSystem {
        let d = &self.dofs;
        let nk = self.nk();
        let mut t = TripletBuilder::new(d.total());
        let mut rhs = DVector::zeros(d.total());
        for b in &self.blocks {
            let l = b.layout;
            let n = l.total();
            let ne = l.element_dim();
            let mat = b.saddle_matrix();
            let r = b.saddle_rhs();
            let slot = |i: usize| -> Slot {
                if i < ne {
                    Slot::Free(d.element_velocity_offset(b.element) + i)
                } else if i < n {
                    self.face_slot(b, i)
                } else {
                    Slot::Free(d.pressure_offset(b.element) + i - n)
                }
            };
            let slots: Vec<Slot> = (0..n + nk).map(slot).collect();
            for (i, si) in slots.iter().enumerate() {
                let Slot::Free(gi) = *si else { continue };
                rhs[gi] += r[i];
                for (j, sj) in slots.iter().enumerate() {
                    let a = mat[(i, j)];
                    match *sj {
                        Slot::Free(gj) => t.push(gi, gj, a),
                        Slot::Fixed(v) => {
                            if a != 0.0 && v != 0.0 {
                                rhs[gi] -= a * v;
                            }
                        }
                    }
                }
            }
            let p0 = d.pressure_offset(b.element);
            t.push(p0, d.multiplier(), b.pressure_integrals[0]);
            t.push(d.multiplier(), p0, b.pressure_integrals[0]);
        }
        GlobalSystem { dofs: d.clone(), matrix: t.build(), rhs }
    }

    /// Eliminates element velocities and non-mean pressure modes element by element.
    pub fn condense(&self) -> Result<CondensedSystem> {
        let d = &self.dofs;
        let nk = self.nk();
        let locals = self
            .blocks
            .par_iter()
            .map(|b| {
                let l = b.layout;
                let n = l.total();
                let ne = l.element_dim();
                let elim: Vec<usize> = (0..ne).chain(n + 1..n + nk).collect();
                let kept: Vec<usize> = (ne..n + 1).collect();
                let mat = b.saddle_matrix();
                let r = b.saddle_rhs();
                let lee = mat.select_rows(&elim).select_columns(&elim);
                let lek = mat.select_rows(&elim).select_columns(&kept);
                let lke = mat.select_rows(&kept).select_columns(&elim);
                let lkk = mat.select_rows(&kept).select_columns(&kept);
                let re = r.select_rows(&elim);
                let rk = r.select_rows(&kept);
                let lu = lee.lu();
                let particular = lu.solve(&re).ok_or(Error::Condensation { element: b.element })?;
                let coupling = lu.solve(&lek).ok_or(Error::Condensation { element: b.element })?;
                if particular.iter().chain(coupling.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::Condensation { element: b.element });
                }
                let schur = &lkk - &lke * &coupling;
                let schur = (&schur + schur.transpose()) * 0.5;
                let rhs = &rk - &lke * &particular;
                Ok((schur, rhs, Recovery { particular, coupling }))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut t = TripletBuilder::new(d.condensed_total());
        let mut rhs = DVector::zeros(d.condensed_total());
        let mut recovery = Vec::with_capacity(locals.len());
        for (b, (s, r, rec)) in self.blocks.iter().zip(locals) {
            let l = b.layout;
            let ne = l.element_dim();
            let nkept = s.nrows();
            let slots: Vec<Slot> = (0..nkept)
                .map(|i| if i + 1 < nkept { self.face_slot(b, ne + i) } else { Slot::Free(d.condensed_pressure(b.element)) })
                .collect();
            for (i, si) in slots.iter().enumerate() {
                let Slot::Free(gi) = *si else { continue };
                rhs[gi] += r[i];
                for (j, sj) in slots.iter().enumerate() {
                    let a = s[(i, j)];
                    match *sj {
                        Slot::Free(gj) => t.push(gi, gj, a),
                        Slot::Fixed(v) => {
                            if a != 0.0 && v != 0.0 {
                                rhs[gi] -= a * v;
                            }
                        }
                    }
                }
            }
            let p0 = d.condensed_pressure(b.element);
            t.push(p0, d.condensed_multiplier(), b.pressure_integrals[0]);
            t.push(d.condensed_multiplier(), p0, b.pressure_integrals[0]);
            recovery.push(rec);
        }
        Ok(CondensedSystem { dofs: d.clone(), matrix: t.build(), rhs, recovery })
    }

    fn solver_error(&self, reason: String) -> Error {
        Error::Solver { reason, census: self.census.to_string() }
    }

    fn run_direct(&self, a: &CscMatrix, b: &DVector<f64>) -> Result<(SparseLu, SolveOutcome)> {
        solve_direct(a, b).map_err(|e| self.solver_error(e))
    }

    /// Face values of the full solution: unknowns for interior faces, data on the boundary.
    fn face_values(&self, mesh: &PolygonalMesh, x: &DVector<f64>) -> Vec<DVector<f64>> {
        let fd = self.dofs.face_dim();
        (0..mesh.n_faces())
            .map(|f| match self.dofs.face_offset(f) {
                Some(o) => x.rows(o, fd).into_owned(),
                None => self.boundary.face_values(f).cloned().unwrap_or_else(|| DVector::zeros(fd)),
            })
            .collect()
    }

    pub fn solve(&self, mesh: &PolygonalMesh, condense: bool) -> Result<(DiscreteSolution, SolveReport)> {
        let start = Instant::now();
        let d = &self.dofs;
        let nk = self.nk();
        if condense {
            let sys = self.condense()?;
            let (_, out) = self.run_direct(&sys.matrix, &sys.rhs)?;
            let faces = self.face_values(mesh, &out.x);
            let mut elements = Vec::with_capacity(self.blocks.len());
            let mut pressure = Vec::with_capacity(self.blocks.len());
            for (b, rec) in self.blocks.iter().zip(&sys.recovery) {
                let l = b.layout;
                let ne = l.element_dim();
                let mut xk = DVector::zeros(l.total() - ne + 1);
                for (i, &f) in b.faces.iter().enumerate() {
                    xk.rows_mut(i * l.face_dim(), l.face_dim()).copy_from(&faces[f]);
                }
                xk[l.total() - ne] = out.x[d.condensed_pressure(b.element)];
                let xe = &rec.particular - &rec.coupling * &xk;
                elements.push(xe.rows(0, ne).into_owned());
                let mut p = DVector::zeros(nk);
                p[0] = xk[l.total() - ne];
                p.rows_mut(1, nk - 1).copy_from(&xe.rows(ne, nk - 1));
                pressure.push(p);
            }
            let report = SolveReport {
                unknowns: sys.matrix.n,
                nnz: sys.matrix.nnz(),
                relative_residual: out.relative_residual,
                refinement_steps: out.refinement_steps,
                condensed: true,
                time_solve: start.elapsed().as_secs_f64(),
            };
            let velocity = VelocityDofs { k: d.k, faces, elements };
            Ok((DiscreteSolution { velocity, pressure, multiplier: out.x[d.condensed_multiplier()] }, report))
        } else {
            let sys = self.full_system();
            let (_, out) = self.run_direct(&sys.matrix, &sys.rhs)?;
            let faces = self.face_values(mesh, &out.x);
            let elements = (0..d.n_elements).map(|e| out.x.rows(d.element_velocity_offset(e), 2 * nk).into_owned()).collect();
            let pressure = (0..d.n_elements).map(|e| out.x.rows(d.pressure_offset(e), nk).into_owned()).collect();
            let report = SolveReport {
                unknowns: sys.matrix.n,
                nnz: sys.matrix.nnz(),
                relative_residual: out.relative_residual,
                refinement_steps: out.refinement_steps,
                condensed: false,
                time_solve: start.elapsed().as_secs_f64(),
            };
            let velocity = VelocityDofs { k: d.k, faces, elements };
            Ok((DiscreteSolution { velocity, pressure, multiplier: out.x[d.multiplier()] }, report))
        }
    }

    /// int_Omega p_h.
    pub fn pressure_mean(&self, pressure: &[DVector<f64>]) -> f64 {
        self.blocks.iter().zip(pressure).map(|(b, p)| b.pressure_integrals.dot(p)).sum()
    }

    /// b_h(v, q) with q given per element in the pressure basis.
    pub fn coupling_form(&self, mesh: &PolygonalMesh, v: &VelocityDofs, q: &[DVector<f64>]) -> f64 {
        self.blocks.iter().map(|b| (q[b.element].transpose() * &b.coupling * v.local(mesh, b.element))[0]).sum()
    }

    /// Per-element values of int_T D_T v phi_i.
    pub fn divergence_moments(&self, mesh: &PolygonalMesh, v: &VelocityDofs) -> Vec<DVector<f64>> {
        self.blocks.iter().map(|b| -(&b.coupling * v.local(mesh, b.element))).collect()
    }
}
