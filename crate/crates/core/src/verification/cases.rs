//! Manufactured solutions with closed-form derivatives.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::localops::{CoefficientField, Medium};
use crate::mesh::{Point, PolygonalMesh};

pub type VectorFn = Arc<dyn Fn(&Point) -> Point + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
/// Velocity gradient with entry (a, b) = d_b u_a.
pub type TensorFn = Arc<dyn Fn(&Point) -> Matrix2<f64> + Send + Sync>;
pub type LabelFn = Arc<dyn Fn(&Point) -> u32 + Send + Sync>;

/// Exact solution of the Brinkman problem with piecewise-constant coefficients.
///
/// The sources are derived from the stored derivatives:
/// f = -mu lap u + nu u + grad p and g = div u.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: String,
    pub u: VectorFn,
    pub grad_u: TensorFn,
    pub lap_u: VectorFn,
    pub p: ScalarFn,
    pub grad_p: VectorFn,
    pub media: BTreeMap<u32, Medium>,
    pub label: LabelFn,
    /// Vertical line x = x0 the mesh must resolve.
    pub interface_x: Option<f64>,
    pub regularity: &'static str,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase").field("name", &self.name).field("media", &self.media).finish()
    }
}

impl ManufacturedCase {
    pub fn medium_at(&self, p: &Point) -> Medium {
        self.media[&(self.label)(p)]
    }

    pub fn f(&self, p: &Point) -> Point {
        let m = self.medium_at(p);
        -(self.lap_u)(p) * m.mu + (self.u)(p) * m.nu + (self.grad_p)(p)
    }

    pub fn g(&self, p: &Point) -> f64 {
        (self.grad_u)(p).trace()
    }

    /// Labels mesh elements by subdomain after checking interface compatibility.
    pub fn prepare_mesh(&self, mesh: &mut PolygonalMesh) -> Result<()> {
        if let Some(x0) = self.interface_x {
            if !mesh.is_compatible_with_vertical_interface(x0) {
                return Err(Error::Config(format!("case `{}` needs a mesh resolving the interface x = {x0}", self.name)));
            }
        }
        let label = self.label.clone();
        mesh.relabel_subdomains(|c| label(c));
        Ok(())
    }

    pub fn coefficients(&self, mesh: &PolygonalMesh, epsilon: f64) -> Result<CoefficientField> {
        CoefficientField::from_subdomains(mesh, &self.media, epsilon)
    }

    /// Largest scaled residual of the strong equations at `n` random points of the unit
    /// square, with derivatives of `u` and `p` taken by eighth-order finite differences.
    /// Points closer than 0.05 to an interface are skipped.
    pub fn consistency_residual(&self, n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut taken = 0;
        while taken < n {
            let p = Point::new(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95));
            if self.interface_x.is_some_and(|x0| (p.x - x0).abs() < 0.05) {
                continue;
            }
            taken += 1;
            let m = self.medium_at(&p);
            let h = 1e-2;
            let lap = Point::new(
                fd_second(|q| (self.u)(q).x, &p, 0, h) + fd_second(|q| (self.u)(q).x, &p, 1, h),
                fd_second(|q| (self.u)(q).y, &p, 0, h) + fd_second(|q| (self.u)(q).y, &p, 1, h),
            );
            let gp = Point::new(fd_first(|q| (self.p)(q), &p, 0, h), fd_first(|q| (self.p)(q), &p, 1, h));
            let u = (self.u)(&p);
            let f = self.f(&p);
            let scale = 1.0 + (lap * m.mu).norm() + (u * m.nu).norm() + gp.norm();
            let r = (-lap * m.mu + u * m.nu + gp - f).norm() / scale;
            let div = fd_first(|q| (self.u)(q).x, &p, 0, h) + fd_first(|q| (self.u)(q).y, &p, 1, h);
            let gscale = 1.0 + self.g(&p).abs();
            worst = worst.max(r).max((div - self.g(&p)).abs() / gscale);
        }
        worst
    }
}

const FIRST: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const SECOND: [f64; 4] = [8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
const SECOND_CENTRE: f64 = -205.0 / 72.0;

fn shift(p: &Point, dir: usize, d: f64) -> Point {
    let mut q = *p;
    q[dir] += d;
    q
}

/// Eighth-order central first derivative.
pub fn fd_first(f: impl Fn(&Point) -> f64, p: &Point, dir: usize, h: f64) -> f64 {
    FIRST
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let s = (i + 1) as f64 * h;
            c * (f(&shift(p, dir, s)) - f(&shift(p, dir, -s)))
        })
        .sum::<f64>()
        / h
}

/// Eighth-order central second derivative.
pub fn fd_second(f: impl Fn(&Point) -> f64, p: &Point, dir: usize, h: f64) -> f64 {
    let sides: f64 = SECOND
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let s = (i + 1) as f64 * h;
            c * (f(&shift(p, dir, s)) + f(&shift(p, dir, -s)))
        })
        .sum();
    (sides + SECOND_CENTRE * f(p)) / (h * h)
}

fn single_medium(mu: f64, nu: f64) -> (BTreeMap<u32, Medium>, LabelFn) {
    (BTreeMap::from([(0, Medium { mu, nu })]), Arc::new(|_| 0))
}

/// sin(2 pi x) sin(2 pi y) and its gradient.
fn trig_pressure() -> (ScalarFn, VectorFn) {
    let tp = 2.0 * PI;
    (
        Arc::new(move |p: &Point| (tp * p.x).sin() * (tp * p.y).sin()),
        Arc::new(move |p: &Point| Point::new(tp * (tp * p.x).cos() * (tp * p.y).sin(), tp * (tp * p.x).sin() * (tp * p.y).cos())),
    )
}

/// Blend of the Stokes and Darcy limit velocities weighted by exp(-nu / mu).
pub fn regime_blend(mu: f64, nu: f64) -> Result<ManufacturedCase> {
    if !(mu >= 0.0 && nu >= 0.0) || (mu == 0.0 && nu == 0.0) {
        return Err(Error::InvalidCoefficients(format!("blend case needs mu, nu >= 0 not both zero (got {mu}, {nu})")));
    }
    let cf = if mu == 0.0 { f64::INFINITY } else { nu / mu };
    let chi = (-cf).exp();
    let inv_nu = if nu > 0.0 { 1.0 / nu } else { 0.0 };
    // u_D = -grad p / nu
    let w = 1.0 - chi;
    let tp = 2.0 * PI;
    let (p, grad_p) = trig_pressure();
    let u: VectorFn = Arc::new(move |q: &Point| {
        let (sx, cx, sy, cy) = ((tp * q.x).sin(), (tp * q.x).cos(), (tp * q.y).sin(), (tp * q.y).cos());
        let us = Point::new(sx * cy, -cx * sy);
        let ud = Point::new(-tp * cx * sy, -tp * sx * cy) * inv_nu;
        us * chi + ud * w
    });
    let grad_u: TensorFn = Arc::new(move |q: &Point| {
        let (sx, cx, sy, cy) = ((tp * q.x).sin(), (tp * q.x).cos(), (tp * q.y).sin(), (tp * q.y).cos());
        let gs = Matrix2::new(tp * cx * cy, -tp * sx * sy, tp * sx * sy, -tp * cx * cy);
        let t2 = tp * tp * inv_nu;
        let gd = Matrix2::new(t2 * sx * sy, -t2 * cx * cy, -t2 * cx * cy, t2 * sx * sy);
        gs * chi + gd * w
    });
    let u2 = u.clone();
    let lap_u: VectorFn = Arc::new(move |q: &Point| u2(q) * (-2.0 * tp * tp));
    let (media, label) = single_medium(mu, nu);
    Ok(ManufacturedCase {
        name: format!("blend(mu={mu},nu={nu})"),
        u,
        grad_u,
        lap_u,
        p,
        grad_p,
        media,
        label,
        interface_x: None,
        regularity: "analytic",
    })
}

/// cos(pi x)(x - 1/2) and its first two derivatives.
fn bump(x: f64) -> (f64, f64, f64) {
    let (s, c) = (PI * x).sin_cos();
    let d = x - 0.5;
    (c * d, -PI * s * d + c, -PI * PI * c * d - 2.0 * PI * s)
}

/// Velocity of the two-subdomain case, evaluated with the formula of one side.
pub fn discontinuous_velocity(p: &Point, stokes_side: bool) -> Point {
    let (b, _, _) = bump(p.x);
    let y = p.y;
    let u0 = Point::new((-y).exp(), (PI * y).sin());
    let part = if stokes_side { Point::new(y, y + (PI * y).cos()) } else { Point::new((PI * y).sin(), y * y) };
    u0 + part * b
}

/// Gradient (entry (a, b) = d_b u_a) of one side's velocity formula.
pub fn discontinuous_gradient(p: &Point, stokes_side: bool) -> Matrix2<f64> {
    let (b, db, _) = bump(p.x);
    let y = p.y;
    let (sy, cy) = (PI * y).sin_cos();
    let (part, dpart) = if stokes_side {
        (Point::new(y, y + cy), Point::new(1.0, 1.0 - PI * sy))
    } else {
        (Point::new(sy, y * y), Point::new(PI * cy, 2.0 * y))
    };
    let du0 = Point::new(-(-y).exp(), PI * cy);
    Matrix2::new(db * part.x, du0.x + b * dpart.x, db * part.y, du0.y + b * dpart.y)
}

fn discontinuous_laplacian(p: &Point, stokes_side: bool) -> Point {
    let (b, _, d2b) = bump(p.x);
    let y = p.y;
    let (sy, cy) = (PI * y).sin_cos();
    let (part, d2part) = if stokes_side {
        (Point::new(y, y + cy), Point::new(0.0, -PI * PI * cy))
    } else {
        (Point::new(sy, y * y), Point::new(-PI * PI * sy, 2.0))
    };
    let d2u0 = Point::new((-y).exp(), -PI * PI * sy);
    d2u0 + part * d2b + d2part * b
}

/// Stokes-dominated left half (mu, nu) = (1, 1e7) next to a pure Darcy right half (0, 1e2).
pub fn discontinuous() -> ManufacturedCase {
    let side = |p: &Point| p.x < 0.5;
    let (p, grad_p) = trig_pressure();
    ManufacturedCase {
        name: "discontinuous".into(),
        u: Arc::new(move |q| discontinuous_velocity(q, side(q))),
        grad_u: Arc::new(move |q| discontinuous_gradient(q, side(q))),
        lap_u: Arc::new(move |q| discontinuous_laplacian(q, side(q))),
        p,
        grad_p,
        media: BTreeMap::from([(0, Medium { mu: 1.0, nu: 1e7 }), (1, Medium { mu: 0.0, nu: 1e2 })]),
        label: Arc::new(move |q| u32::from(!side(q))),
        interface_x: Some(0.5),
        regularity: "H1 across x = 1/2, smooth on each side",
    }
}

/// Polynomial in (x - 1/2, y - 1/2) with closed-form derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    /// (a, b, c): c (x - 1/2)^a (y - 1/2)^b.
    pub terms: Vec<(i32, i32, f64)>,
}

fn pw(t: f64, a: i32) -> f64 {
    if a < 0 {
        0.0
    } else {
        t.powi(a)
    }
}

impl Polynomial {
    /// Full polynomial of degree `m` with deterministic coefficients, shifted to zero mean
    /// on the unit square when `zero_mean`.
    pub fn sample(m: usize, salt: f64, zero_mean: bool) -> Self {
        let mut terms = Vec::new();
        for d in 0..=m as i32 {
            for b in 0..=d {
                let a = d - b;
                let c = (1.3 * a as f64 + 0.7 * b as f64 + salt).sin();
                terms.push((a, b, c));
            }
        }
        let mut p = Self { terms };
        if zero_mean {
            // mean of t^a over t in [-1/2, 1/2]
            let mean1 = |a: i32| (0.5f64.powi(a + 1) - (-0.5f64).powi(a + 1)) / (a + 1) as f64;
            let mean: f64 = p.terms.iter().map(|&(a, b, c)| c * mean1(a) * mean1(b)).sum();
            p.terms.push((0, 0, -mean));
        }
        p
    }

    pub fn eval(&self, p: &Point) -> f64 {
        let (x, y) = (p.x - 0.5, p.y - 0.5);
        self.terms.iter().map(|&(a, b, c)| c * pw(x, a) * pw(y, b)).sum()
    }

    pub fn grad(&self, p: &Point) -> Point {
        let (x, y) = (p.x - 0.5, p.y - 0.5);
        self.terms.iter().fold(Point::zeros(), |g, &(a, b, c)| {
            g + Point::new(c * a as f64 * pw(x, a - 1) * pw(y, b), c * b as f64 * pw(x, a) * pw(y, b - 1))
        })
    }

    pub fn hessian(&self, p: &Point) -> Matrix2<f64> {
        let (x, y) = (p.x - 0.5, p.y - 0.5);
        self.terms.iter().fold(Matrix2::zeros(), |h, &(a, b, c)| {
            let (af, bf) = (a as f64, b as f64);
            let xx = c * af * (af - 1.0) * pw(x, a - 2) * pw(y, b);
            let xy = c * af * bf * pw(x, a - 1) * pw(y, b - 1);
            let yy = c * bf * (bf - 1.0) * pw(x, a) * pw(y, b - 2);
            h + Matrix2::new(xx, xy, xy, yy)
        })
    }
}

/// u in vP^{k+1}, p in P^k with zero mean, (mu, nu) = (1, 0).
pub fn polynomial_stokes(k: usize) -> ManufacturedCase {
    let ux = Arc::new(Polynomial::sample(k + 1, 0.3, false));
    let uy = Arc::new(Polynomial::sample(k + 1, 1.1, false));
    let pp = Arc::new(Polynomial::sample(k, 2.0, true));
    let (a, b, c, d, e, f) = (ux.clone(), uy.clone(), ux.clone(), uy.clone(), pp.clone(), pp.clone());
    let (media, label) = single_medium(1.0, 0.0);
    ManufacturedCase {
        name: format!("polynomial-stokes(k={k})"),
        u: Arc::new(move |q| Point::new(ux.eval(q), uy.eval(q))),
        grad_u: Arc::new(move |q| {
            let (gx, gy) = (a.grad(q), b.grad(q));
            Matrix2::new(gx.x, gx.y, gy.x, gy.y)
        }),
        lap_u: Arc::new(move |q| Point::new(c.hessian(q).trace(), d.hessian(q).trace())),
        p: Arc::new(move |q| e.eval(q)),
        grad_p: Arc::new(move |q| f.grad(q)),
        media,
        label,
        interface_x: None,
        regularity: "polynomial",
    }
}

/// p in P^{k+1} with zero mean, u = -grad p, (mu, nu) = (0, 1).
pub fn polynomial_darcy(k: usize) -> ManufacturedCase {
    let pp = Arc::new(Polynomial::sample(k + 1, 0.9, true));
    let (a, b, c, d) = (pp.clone(), pp.clone(), pp.clone(), pp.clone());
    let (media, label) = single_medium(0.0, 1.0);
    ManufacturedCase {
        name: format!("polynomial-darcy(k={k})"),
        u: Arc::new(move |q| -a.grad(q)),
        grad_u: Arc::new(move |q| -b.hessian(q)),
        // lap(grad p) is never used with mu = 0; keep it exact anyway for degree <= 3.
        lap_u: Arc::new(move |q| {
            let h = 1e-3;
            let g = |t: &Point| c.hessian(t).trace();
            -Point::new(fd_first(g, q, 0, h), fd_first(g, q, 1, h))
        }),
        p: Arc::new(move |q| pp.eval(q)),
        grad_p: Arc::new(move |q| d.grad(q)),
        media,
        label,
        interface_x: None,
        regularity: "polynomial",
    }
}

/// Vanishing solution with (mu, nu) = (1, 1).
pub fn zero_case() -> ManufacturedCase {
    let (media, label) = single_medium(1.0, 1.0);
    ManufacturedCase {
        name: "zero".into(),
        u: Arc::new(|_| Point::zeros()),
        grad_u: Arc::new(|_| Matrix2::zeros()),
        lap_u: Arc::new(|_| Point::zeros()),
        p: Arc::new(|_| 0.0),
        grad_p: Arc::new(|_| Point::zeros()),
        media,
        label,
        interface_x: None,
        regularity: "trivial",
    }
}

/// Built-in case by name: `blend`, `discontinuous`, `polynomial-stokes`, `polynomial-darcy`, `zero`.
pub fn builtin_case(name: &str, mu: f64, nu: f64, k: usize) -> Result<ManufacturedCase> {
    match name {
        "blend" => regime_blend(mu, nu),
        "discontinuous" => Ok(discontinuous()),
        "polynomial-stokes" => Ok(polynomial_stokes(k)),
        "polynomial-darcy" => Ok(polynomial_darcy(k)),
        "zero" => Ok(zero_case()),
        other => Err(Error::Config(format!("unknown case `{other}`"))),
    }
}
