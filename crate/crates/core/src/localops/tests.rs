use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::context::weighted_product;
use super::*;
use crate::mesh::{generate_cartesian, generate_polygonal, Point, PolygonalKind, PolygonalMesh, Rectangle};
use crate::polyspace::{element_quadrature, exponents, face_quadrature, scalar_dim, scalar_dim_below, PolyBasis};

fn meshes() -> Vec<PolygonalMesh> {
    vec![
        generate_cartesian(2, Rectangle::unit()).unwrap(),
        generate_polygonal(4, PolygonalKind::PerturbedQuad, 3).unwrap(),
        generate_polygonal(4, PolygonalKind::Agglomerated, 3).unwrap(),
        generate_polygonal(3, PolygonalKind::Triangular, 3).unwrap(),
    ]
}

fn setup(mesh: &PolygonalMesh, e: usize, k: usize, mu: f64, nu: f64) -> (ElementContext, LocalOperatorSet) {
    let cfg = DiscretisationConfig::new(k);
    let coeffs = CoefficientField::uniform(mesh, mu, nu, cfg.epsilon).unwrap();
    element_operators(mesh, e, &coeffs, &cfg).unwrap()
}

/// Polynomial sum_i c_i x^a y^b with derivatives.
#[derive(Clone)]
struct Poly {
    terms: Vec<((usize, usize), f64)>,
}

impl Poly {
    fn random(m: usize, rng: &mut impl Rng) -> Self {
        Self { terms: exponents(m).into_iter().map(|e| (e, rng.gen_range(-1.0..1.0))).collect() }
    }

    fn eval(&self, p: &Point) -> f64 {
        self.terms.iter().map(|&((a, b), c)| c * p.x.powi(a as i32) * p.y.powi(b as i32)).sum()
    }

    fn deriv(&self, dir: usize, p: &Point) -> f64 {
        self.terms
            .iter()
            .map(|&((a, b), c)| {
                if dir == 0 {
                    if a == 0 { 0.0 } else { c * a as f64 * p.x.powi(a as i32 - 1) * p.y.powi(b as i32) }
                } else if b == 0 {
                    0.0
                } else {
                    c * b as f64 * p.x.powi(a as i32) * p.y.powi(b as i32 - 1)
                }
            })
            .sum()
    }
}

fn random_vector(n: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

fn interp(ctx: &ElementContext, f: impl Fn(&Point) -> Point) -> DVector<f64> {
    ctx.interpolate(f).coeffs
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn assert_sym_psd(m: &DMatrix<f64>) {
    let norm = m.norm();
    assert!((m - m.transpose()).norm() <= 1e-12 * norm);
    assert!(min_eig(m) >= -1e-10 * norm, "min eigenvalue {}", min_eig(m));
}

#[test]
fn config_presets() {
    let c = DiscretisationConfig::new(2);
    assert_eq!((c.stab_scale_stokes, c.stab_scale_darcy), (3.0, 0.3));
    assert!(c.orthonormal_bases());
    let d = DiscretisationConfig::degree_scaled(1);
    assert_eq!(d.stab_scale_stokes, 1.0);
    assert_relative_eq!(d.stab_scale_darcy, 1e-2);
    assert!(DiscretisationConfig { stab_scale_darcy: 0.0, ..c.clone() }.validate().is_err());
    assert!(DiscretisationConfig { epsilon: 1.0, ..c }.validate().is_err());
}

#[test]
fn u_product_on_unit_square() {
    let mesh = generate_cartesian(1, Rectangle::unit()).unwrap();
    let (ctx, ops) = setup(&mesh, 0, 0, 1.0, 0.0);
    assert_relative_eq!(mesh.lambda(0), 8.0, epsilon = 1e-12);
    assert_relative_eq!(ops.u_product[(0, 0)], 8.0, epsilon = 1e-12);
    assert_relative_eq!(ops.u_product[(1, 1)], 8.0, epsilon = 1e-12);
    // face blocks: h_T |F| with the constant face basis
    assert_relative_eq!(ops.u_product[(2, 2)], 2f64.sqrt(), epsilon = 1e-12);
    // Darcy-dominated boundary element: boundary face blocks vanish
    let (_, ops) = setup(&mesh, 0, 0, 1.0, 10.0);
    let ne = ctx.layout.element_dim();
    assert!(ops.u_product.view((ne, 0), (ctx.layout.total() - ne, ctx.layout.total())).amax() == 0.0);
}

#[test]
fn u_product_on_interior_element_ignores_regime() {
    let mesh = generate_cartesian(3, Rectangle::unit()).unwrap();
    let e = 4;
    assert!(mesh.elements[e].faces.iter().all(|&f| !mesh.faces[f].boundary));
    let (_, a) = setup(&mesh, e, 1, 1.0, 0.0);
    let (_, b) = setup(&mesh, e, 1, 0.0, 1.0);
    assert_eq!(a.u_product, b.u_product);
    assert_sym_psd(&a.u_product);
}

#[test]
fn interpolation_matches_dense_oracle() {
    for mesh in meshes() {
        let cfg = DiscretisationConfig::new(1);
        let ctx = ElementContext::new(&mesh, 1, &cfg).unwrap();
        let v = interp(&ctx, |p| Point::new(p.x.sin(), 0.0));
        let q = element_quadrature(&mesh, 1, 30).unwrap();
        let nk = ctx.nk();
        let mut gram = DMatrix::zeros(nk, nk);
        let mut rhs = DVector::zeros(nk);
        for (p, w) in q.iter() {
            let b = ctx.basis.eval(p).rows(0, nk).into_owned();
            gram.ger(w, &b, &b, 1.0);
            rhs.axpy(w * p.x.sin(), &b, 1.0);
        }
        let oracle = gram.cholesky().unwrap().solve(&rhs);
        assert!((v.rows(0, nk) - oracle).amax() < 1e-10);
        assert!(v.rows(nk, nk).amax() == 0.0);
        // constants are reproduced on every block
        let c = interp(&ctx, |_| Point::new(2.0, -1.0));
        for f in 0..ctx.layout.n_faces {
            let fc = &ctx.faces[f];
            let blk = c.rows(ctx.layout.face_offset(f), 4);
            let s = fc.basis.eval(&fc.quad.points[0]);
            assert_relative_eq!(s.dot(&blk.rows(0, 2)), 2.0, epsilon = 1e-12);
            assert_relative_eq!(s.dot(&blk.rows(2, 2)), -1.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn gradient_commutes_with_interpolation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for mesh in meshes() {
        for k in 0..=3 {
            for e in [0, 3] {
                let (ctx, ops) = setup(&mesh, e, k, 1.0, 1.0);
                let nk = ctx.nk();
                let comps = [Poly::random(k + 3, &mut rng), Poly::random(k + 3, &mut rng)];
                let v = interp(&ctx, |p| Point::new(comps[0].eval(p), comps[1].eval(p)));
                let g = &ops.gradient * &v;
                for a in 0..2 {
                    for b in 0..2 {
                        let oracle = ctx.project_scalar(|p| comps[a].deriv(b, p));
                        let got = g.rows((2 * a + b) * nk, nk);
                        let scale = oracle.amax().max(1.0);
                        assert!((got - &oracle).amax() < 1e-10 * scale, "k={k} e={e} ({a},{b})");
                    }
                }
            }
        }
    }
}

#[test]
fn gradient_commutes_for_smooth_fields() {
    let mesh = generate_polygonal(4, PolygonalKind::Agglomerated, 9).unwrap();
    let cfg = DiscretisationConfig { rhs_quad_degree: Some(30), ..DiscretisationConfig::new(2) };
    let coeffs = CoefficientField::uniform(&mesh, 1.0, 0.0, cfg.epsilon).unwrap();
    let (ctx, ops) = element_operators(&mesh, 2, &coeffs, &cfg).unwrap();
    let nk = ctx.nk();
    for s in 0..10 {
        let w = 1.0 + s as f64;
        let f = move |p: &Point| Point::new((w * p.x).sin() * p.y.exp(), (w * p.y).cos() + p.x * p.x);
        let df = move |a: usize, b: usize, p: &Point| match (a, b) {
            (0, 0) => w * (w * p.x).cos() * p.y.exp(),
            (0, _) => (w * p.x).sin() * p.y.exp(),
            (_, 0) => 2.0 * p.x,
            _ => -w * (w * p.y).sin(),
        };
        let g = &ops.gradient * interp(&ctx, f);
        for a in 0..2 {
            for b in 0..2 {
                let oracle = ctx.project_scalar(|p| df(a, b, p));
                let got = g.rows((2 * a + b) * nk, nk);
                assert!((got - &oracle).amax() < 1e-10 * oracle.amax().max(1.0), "s={s}");
            }
        }
    }
}

#[test]
fn gradient_of_simple_fields() {
    let mesh = generate_polygonal(4, PolygonalKind::PerturbedQuad, 1).unwrap();
    let (ctx, ops) = setup(&mesh, 5, 1, 1.0, 0.0);
    let nk = ctx.nk();
    let g = &ops.gradient * interp(&ctx, |_| Point::new(1.0, 3.0));
    assert!(g.amax() < 1e-11);
    let g = &ops.gradient * interp(&ctx, |p| Point::new(p.x, 0.0));
    let one = ctx.project_scalar(|_| 1.0);
    assert!((g.rows(0, nk) - &one).amax() < 1e-11);
    assert!(g.rows(nk, 3 * nk).amax() < 1e-11);
}

#[test]
fn divergence_is_trace_of_gradient() {
    for mesh in meshes() {
        let (ctx, ops) = setup(&mesh, 2, 2, 1.0, 0.0);
        let nk = ctx.nk();
        let tr = ops.gradient.rows(0, nk) + ops.gradient.rows(3 * nk, nk);
        assert_eq!(tr, ops.divergence);
        let d = &ops.divergence * interp(&ctx, |p| Point::new(p.x, p.y));
        assert!((d - ctx.project_scalar(|_| 2.0)).amax() < 1e-11);
        let d = &ops.divergence * interp(&ctx, |p| Point::new(-p.y, p.x));
        assert!(d.amax() < 1e-11);
        let d = &ops.divergence * interp(&ctx, |p| Point::new(p.x * p.x, p.y * p.y));
        assert!((d - ctx.project_scalar(|p| 2.0 * p.x + 2.0 * p.y)).amax() < 1e-11);
    }
}

#[test]
fn stokes_potential_reproduces_degree_k_plus_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for mesh in meshes() {
        for k in 0..=3 {
            let (ctx, ops) = setup(&mesh, 1, k, 1.0, 0.0);
            let comps = [Poly::random(k + 1, &mut rng), Poly::random(k + 1, &mut rng)];
            let v = interp(&ctx, |p| Point::new(comps[0].eval(p), comps[1].eval(p)));
            let ps = &ops.stokes_potential * &v;
            for p in ctx.quad.points.iter().step_by(3) {
                let got = ctx.eval_vector(&ps, p);
                assert!((got.x - comps[0].eval(p)).abs() < 1e-11, "k={k}");
                assert!((got.y - comps[1].eval(p)).abs() < 1e-11, "k={k}");
            }
            // constants
            let ps = &ops.stokes_potential * interp(&ctx, |_| Point::new(0.5, -2.0));
            let got = ctx.eval_vector(&ps, &ctx.center);
            assert_relative_eq!(got.x, 0.5, epsilon = 1e-12);
            assert_relative_eq!(got.y, -2.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn stokes_potential_gradient_is_a_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mesh = generate_polygonal(4, PolygonalKind::Agglomerated, 2).unwrap();
    let (ctx, ops) = setup(&mesh, 3, 1, 1.0, 0.0);
    let nk = ctx.nk();
    let n1 = ctx.nk1();
    let w = &ctx.quad.weights;
    let mk = ctx.mass(nk, nk);
    let st = weighted_product(&ctx.dphi_x, &ctx.dphi_x, w) + weighted_product(&ctx.dphi_y, &ctx.dphi_y, w);
    for _ in 0..100 {
        let v = random_vector(ctx.layout.total(), &mut rng);
        let g = &ops.gradient * &v;
        let gn: f64 = (0..4).map(|r| (g.rows(r * nk, nk).transpose() * &mk * g.rows(r * nk, nk))[0]).sum();
        let p = &ops.stokes_potential * &v;
        let pn: f64 = (0..2).map(|a| (p.rows(a * n1, n1).transpose() * &st * p.rows(a * n1, n1))[0]).sum();
        assert!(pn <= gn * (1.0 + 1e-12) + 1e-14);
    }
}

#[test]
fn darcy_potential_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for mesh in meshes() {
        for k in 0..=3 {
            let (ctx, ops) = setup(&mesh, 2, k, 0.0, 1.0);
            let nk = ctx.nk();
            let comps = [Poly::random(k, &mut rng), Poly::random(k, &mut rng)];
            let v = interp(&ctx, |p| Point::new(comps[0].eval(p), comps[1].eval(p)));
            let pd = &ops.darcy_potential * &v;
            assert!((&pd - v.rows(0, 2 * nk)).amax() < 1e-11, "k={k}");
            if k >= 1 {
                let nm = scalar_dim_below(k);
                let m = ctx.mass(nm, nk);
                for _ in 0..10 {
                    let v = random_vector(ctx.layout.total(), &mut rng);
                    let pd = &ops.darcy_potential * &v;
                    for c in 0..2 {
                        let lhs = &m * pd.rows(c * nk, nk);
                        let rhs = &m * v.rows(c * nk, nk);
                        assert!((lhs - rhs).amax() < 1e-11);
                    }
                }
            }
        }
    }
}

#[test]
fn darcy_potential_matches_dense_oracle_k0() {
    // Least-squares solution of int P . grad q = -int D v q + sum_F omega int_F (v_F . n) q
    // for q in {x, y}, assembled from raw monomials and independent quadrature.
    let mesh = generate_cartesian(1, Rectangle::unit()).unwrap();
    let (ctx, ops) = setup(&mesh, 0, 0, 0.0, 1.0);
    let v = interp(&ctx, |p| Point::new(-p.y, p.x));
    let el = &mesh.elements[0];
    let q = element_quadrature(&mesh, 0, 10).unwrap();
    let d = (&ops.divergence * &v)[0] * ctx.basis.eval(&el.center)[0];
    let mut a = DMatrix::zeros(2, 2);
    let mut b = DVector::zeros(2);
    let mono = [|p: &Point| p.x, |p: &Point| p.y];
    for r in 0..2 {
        for c in 0..2 {
            a[(r, c)] = if r == c { el.area } else { 0.0 };
        }
        b[r] = -q.integrate(|p| d * mono[r](p));
        for (lf, &f) in el.faces.iter().enumerate() {
            let face = &mesh.faces[f];
            let fq = face_quadrature(&mesh, f, 10);
            let off = ctx.layout.face_offset(lf);
            let fb = &ctx.faces[lf].basis;
            let vn = |p: &Point| {
                let s = fb.eval(p)[0];
                (v[off] * s) * face.normal.x + (v[off + 1] * s) * face.normal.y
            };
            b[r] += el.orientations[lf] * fq.integrate(|p| vn(p) * mono[r](p));
        }
    }
    let oracle = a.svd(true, true).solve(&b, 1e-14).unwrap();
    let pd = &ops.darcy_potential * &v;
    let phi0 = ctx.basis.eval(&el.center)[0];
    assert!((pd[0] * phi0 - oracle[0]).abs() < 1e-12);
    assert!((pd[1] * phi0 - oracle[1]).abs() < 1e-12);
}

#[test]
fn regime_potential_switches_at_unit_friction() {
    let mesh = generate_cartesian(2, Rectangle::unit()).unwrap();
    let h = mesh.elements[0].diameter;
    // Cf = nu h^2 / mu
    let (ctx, s) = setup(&mesh, 0, 1, 1.0, 0.5 / (h * h));
    assert!(s.friction.stokes_dominated());
    let ne = ctx.layout.element_dim();
    assert!(s.regime_potential.columns(ne, ctx.layout.total() - ne).amax() == 0.0);
    let (_, d) = setup(&mesh, 0, 1, 1.0, 2.0 / (h * h));
    assert_eq!(d.regime_potential, d.darcy_potential);
    let cfg = DiscretisationConfig::new(1);
    let ctx = ElementContext::new(&mesh, 0, &cfg).unwrap();
    let f = Friction { cf: 1.0, cf_hat: 1.0 };
    let ops = build_local_operators(&ctx, 1.0, 1.0, f, mesh.lambda(0), &cfg).unwrap();
    assert_eq!(ops.regime_potential, ops.darcy_potential);
}

#[test]
fn bilinear_forms_are_symmetric_psd() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ms = meshes();
    for _ in 0..20 {
        let mesh = &ms[rng.gen_range(0..ms.len())];
        let e = rng.gen_range(0..mesh.n_elements());
        let k = rng.gen_range(0..=3);
        let (mu, nu) = if rng.gen_bool(0.5) { (1.0, 0.1) } else { (1e-3, 100.0) };
        let (_, ops) = setup(mesh, e, k, mu, nu);
        assert_sym_psd(&ops.stokes_form());
        assert_sym_psd(&ops.darcy_form());
        assert_sym_psd(&ops.u_product);
    }
}

#[test]
fn stokes_kernel_is_constants() {
    for mesh in meshes() {
        for k in 0..=2 {
            let (ctx, ops) = setup(&mesh, 1, k, 1.0, 1.0);
            assert!(ops.friction.stokes_dominated());
            let a = ops.stokes_form();
            let eig = SymmetricEigen::new(a.clone()).eigenvalues;
            let max = eig.amax();
            let kernel = eig.iter().filter(|&&l| l.abs() < 1e-10 * max).count();
            assert_eq!(kernel, 2, "k={k}");
            let c = interp(&ctx, |_| Point::new(1.0, 2.0));
            assert!((&a * c).amax() < 1e-10 * max);
        }
    }
}

#[test]
fn stabilisations_vanish_on_polynomials() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for mesh in meshes() {
        for k in 0..=2 {
            let (ctx, ops) = setup(&mesh, 0, k, 1.0, 1.0);
            let c1 = [Poly::random(k + 1, &mut rng), Poly::random(k + 1, &mut rng)];
            let v = interp(&ctx, |p| Point::new(c1[0].eval(p), c1[1].eval(p)));
            let s = (v.transpose() * &ops.stokes_stabilisation * &v)[0];
            assert!(s.abs() < 1e-12 * ops.stokes_stabilisation.norm() * v.norm_squared());
            let c0 = [Poly::random(k, &mut rng), Poly::random(k, &mut rng)];
            let v = interp(&ctx, |p| Point::new(c0[0].eval(p), c0[1].eval(p)));
            let s = (v.transpose() * &ops.darcy_stabilisation * &v)[0];
            assert!(s.abs() < 1e-12 * ops.darcy_stabilisation.norm() * v.norm_squared());
            // Stokes-dominated: consistent Darcy part is the element mass
            let vt = v.rows(0, ctx.layout.element_dim()).into_owned();
            let m = (vt.transpose() * ctx.vector_mass() * &vt)[0];
            assert_relative_eq!((v.transpose() * &ops.darcy_consistent * &v)[0], m, max_relative = 1e-12);
        }
    }
}

#[test]
fn forms_scale_out_of_coefficients() {
    let mesh = generate_polygonal(4, PolygonalKind::PerturbedQuad, 4).unwrap();
    for &(mu, nu) in &[(1.0, 3.0), (0.2, 40.0), (0.0, 1.0)] {
        let (_, a) = setup(&mesh, 6, 1, mu, nu);
        let (_, b) = setup(&mesh, 6, 1, 8.0 * mu, 8.0 * nu);
        assert_eq!(a.friction.cf_hat, b.friction.cf_hat);
        assert_eq!(a.regime_potential, b.regime_potential);
        assert_eq!(a.stokes_form(), b.stokes_form());
        assert_eq!(a.darcy_form(), b.darcy_form());
    }
}

#[test]
fn coupling_examples_and_reformulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mesh = generate_cartesian(1, Rectangle::unit()).unwrap();
    let (ctx, ops) = setup(&mesh, 0, 1, 1.0, 0.0);
    let b = &ops.coupling * interp(&ctx, |p| Point::new(p.x, p.y));
    // q = 1 is the first (constant) basis function scaled by 1 / phi_0
    let phi0 = ctx.basis.eval(&ctx.center)[0];
    assert_relative_eq!(b[0] / phi0, -2.0, epsilon = 1e-12);

    for mesh in meshes() {
        for k in 0..=2 {
            let (ctx, ops) = setup(&mesh, 3, k, 1.0, 0.0);
            let nk = ctx.nk();
            let l = ctx.layout;
            // commutation with the continuous divergence
            let c = [Poly::random(k + 1, &mut rng), Poly::random(k + 1, &mut rng)];
            let bv = &ops.coupling * interp(&ctx, |p| Point::new(c[0].eval(p), c[1].eval(p)));
            let oracle = -ctx.moments(|p| c[0].deriv(0, p) + c[1].deriv(1, p), nk);
            assert!((bv - oracle).amax() < 1e-11);
            // int v_T . grad q - sum_F omega int_F (v_F . n) q
            let v = random_vector(l.total(), &mut rng);
            for i in 0..nk {
                let mut r = 0.0;
                for (p, w) in ctx.quad.iter() {
                    let (_, gx, gy) = ctx.basis.eval_with_gradients(p);
                    let vt = ctx.eval_vector(&v.rows(0, 2 * nk).into_owned(), p);
                    r += w * (vt.x * gx[i] + vt.y * gy[i]);
                }
                for (f, fc) in ctx.faces.iter().enumerate() {
                    for (p, w) in fc.quad.iter() {
                        let s = fc.basis.eval(p);
                        let vf = Point::new(
                            s.dot(&v.rows(l.face_index(f, 0, 0), k + 1)),
                            s.dot(&v.rows(l.face_index(f, 1, 0), k + 1)),
                        );
                        r -= fc.orientation * w * vf.dot(&fc.normal) * ctx.basis.eval(p)[i];
                    }
                }
                let b = (ops.coupling.row(i) * &v)[0];
                assert!((b - r).abs() < 1e-12 * v.amax().max(1.0) * 10.0, "{b} vs {r}");
            }
        }
    }
}

#[test]
fn load_vector_follows_regime() {
    let mesh = generate_polygonal(4, PolygonalKind::Agglomerated, 6).unwrap();
    let (ctx, ops) = setup(&mesh, 2, 1, 1.0, 0.0);
    assert_eq!(load_vector(&ctx, &ops, |_| Point::zeros()).amax(), 0.0);
    let r = load_vector(&ctx, &ops, |p| Point::new(p.x.exp(), p.y));
    let ne = ctx.layout.element_dim();
    assert!(r.rows(ne, r.len() - ne).amax() == 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (ctx, ops) = setup(&mesh, 2, 1, 0.0, 1.0);
    let c = [Poly::random(1, &mut rng), Poly::random(1, &mut rng)];
    let f = |p: &Point| Point::new(c[0].eval(p), c[1].eval(p));
    let r = load_vector(&ctx, &ops, f);
    let q = element_quadrature(&mesh, 2, 20).unwrap();
    for _ in 0..5 {
        let v = random_vector(ctx.layout.total(), &mut rng);
        let pd = &ops.darcy_potential * &v;
        let oracle = q.integrate(|p| f(p).dot(&ctx.eval_vector(&pd, p)));
        assert!((r.dot(&v) - oracle).abs() < 1e-12 * oracle.abs().max(1.0));
    }
}

#[test]
fn interpolator_is_bounded_in_u_norm() {
    // ||I v||_U / (||v||_L2 + h |v|_H1) is monitored; it must stay moderate.
    let mut worst: f64 = 0.0;
    for mesh in meshes() {
        for k in 0..=2 {
            for e in [0, 2] {
                let (ctx, ops) = setup(&mesh, e, k, 1.0, 0.0);
                let v = interp(&ctx, |p| Point::new((3.0 * p.x).sin(), p.x * p.y));
                let un = (v.transpose() * &ops.u_product * &v)[0].sqrt();
                let q = &ctx.rhs_quad;
                let l2 = q.integrate(|p| (3.0 * p.x).sin().powi(2) + (p.x * p.y).powi(2)).sqrt();
                let h1 = q
                    .integrate(|p| 9.0 * (3.0 * p.x).cos().powi(2) + p.y * p.y + p.x * p.x)
                    .sqrt();
                worst = worst.max(un / (l2 + ctx.diameter * h1));
            }
        }
    }
    assert!(worst < 50.0, "{worst}");
}

#[test]
fn layout_dimensions_match_bases() {
    let mesh = generate_polygonal(4, PolygonalKind::Agglomerated, 1).unwrap();
    let (ctx, ops) = setup(&mesh, 0, 2, 1.0, 0.0);
    assert_eq!(ctx.nk(), scalar_dim(2));
    assert_eq!(ops.gradient.ncols(), ctx.layout.total());
    assert_eq!(ops.darcy_potential.nrows(), 2 * scalar_dim(2));
}
