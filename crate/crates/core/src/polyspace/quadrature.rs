//! Quadrature on segments, triangles and star-shaped polygons.
//!
//! Polygons are fan-triangulated from the star centre x_T; each triangle uses a
//! collapsed (Duffy) tensor Gauss-Legendre rule with positive weights.

use crate::error::{Error, Result};
use crate::mesh::{Point, PolygonalMesh};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            nodes[0] = 0.0;
            weights[0] = 2.0;
            break;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss-Legendre on the segment `[a, b]` with `ceil((degree + 1) / 2)` points.
pub fn segment_rule(a: &Point, b: &Point, degree: usize) -> QuadRule {
    let n = (degree + 2) / 2;
    let (x, w) = gauss_legendre(n);
    let len = (b - a).norm();
    QuadRule {
        points: x.iter().map(|&t| a + (b - a) * (0.5 * (t + 1.0))).collect(),
        weights: w.iter().map(|&wi| 0.5 * len * wi).collect(),
        degree,
    }
}

/// Collapsed Gauss rule on the triangle `(a, b, c)`, exact up to `degree`.
pub fn triangle_rule(a: &Point, b: &Point, c: &Point, degree: usize) -> Result<QuadRule> {
    let e1 = b - a;
    let e2 = c - a;
    let det = e1.x * e2.y - e1.y * e2.x;
    let scale = e1.norm().max(e2.norm());
    if !(det > 1e-14 * scale * scale) {
        return Err(Error::Geometry(format!("degenerate fan triangle (2|T| = {det:e})")));
    }
    // (1 - u) Jacobian factor raises the degree in u by one.
    let (xu, wu) = gauss_legendre((degree + 3) / 2);
    let (xv, wv) = gauss_legendre((degree + 2) / 2);
    let mut points = Vec::with_capacity(xu.len() * xv.len());
    let mut weights = Vec::with_capacity(xu.len() * xv.len());
    for (&su, &wu) in xu.iter().zip(&wu) {
        let u = 0.5 * (su + 1.0);
        for (&sv, &wv) in xv.iter().zip(&wv) {
            let v = 0.5 * (sv + 1.0);
            let xi = u;
            let eta = v * (1.0 - u);
            points.push(a + e1 * xi + e2 * eta);
            weights.push(0.25 * wu * wv * (1.0 - u) * det);
        }
    }
    Ok(QuadRule { points, weights, degree })
}

/// Fan triangulation of a polygon from `center`, each triangle integrated to `degree`.
pub fn polygon_rule(poly: &[Point], center: &Point, degree: usize) -> Result<QuadRule> {
    let mut rule = QuadRule { points: Vec::new(), weights: Vec::new(), degree };
    let n = poly.len();
    for i in 0..n {
        let t = triangle_rule(center, &poly[i], &poly[(i + 1) % n], degree)?;
        rule.points.extend(t.points);
        rule.weights.extend(t.weights);
    }
    Ok(rule)
}

pub fn element_quadrature(mesh: &PolygonalMesh, element: usize, degree: usize) -> Result<QuadRule> {
    polygon_rule(&mesh.element_polygon(element), &mesh.elements[element].center, degree)
}

pub fn face_quadrature(mesh: &PolygonalMesh, face: usize, degree: usize) -> QuadRule {
    let [a, b] = mesh.faces[face].endpoints(mesh);
    segment_rule(&a, &b, degree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cartesian, generate_polygonal, PolygonalKind, Rectangle};
    use approx::assert_relative_eq;

    /// Exact integral of x^a y^b over a triangle via the Dirichlet moment formula
    /// applied to the expansion in barycentric coordinates.
    fn triangle_monomial_oracle(p: [Point; 3], a: u32, b: u32) -> f64 {
        fn fact(n: u32) -> f64 {
            (1..=n).map(|i| i as f64).product()
        }
        // x = sum l_i x_i, y = sum l_i y_i; expand with multinomials
        let det = ((p[1] - p[0]).x * (p[2] - p[0]).y - (p[1] - p[0]).y * (p[2] - p[0]).x).abs();
        let mut total = 0.0;
        // x^a = sum_{i+j+k=a} a!/(i!j!k!) x0^i x1^j x2^k l0^i l1^j l2^k
        for i in 0..=a {
            for j in 0..=(a - i) {
                let k = a - i - j;
                let cx = fact(a) / (fact(i) * fact(j) * fact(k)) * p[0].x.powi(i as i32) * p[1].x.powi(j as i32) * p[2].x.powi(k as i32);
                for l in 0..=b {
                    for m in 0..=(b - l) {
                        let n = b - l - m;
                        let cy = fact(b) / (fact(l) * fact(m) * fact(n))
                            * p[0].y.powi(l as i32)
                            * p[1].y.powi(m as i32)
                            * p[2].y.powi(n as i32);
                        // int l0^e0 l1^e1 l2^e2 = 2|T| e0! e1! e2! / (e0+e1+e2+2)!
                        let (e0, e1, e2) = (i + l, j + m, k + n);
                        total += cx * cy * det * fact(e0) * fact(e1) * fact(e2) / fact(e0 + e1 + e2 + 2);
                    }
                }
            }
        }
        total
    }

    #[test]
    fn gauss_legendre_integrates_odd_degree() {
        for n in 1..9 {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
            for d in 0..(2 * n) {
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(d as i32)).sum();
                assert_relative_eq!(q, exact, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn unit_square_rules() {
        let m = generate_cartesian(1, Rectangle::unit()).unwrap();
        let q = element_quadrature(&m, 0, 0).unwrap();
        assert_relative_eq!(q.total_weight(), 1.0, epsilon = 1e-15);
        let sq = [Point::new(-0.5, -0.5), Point::new(0.5, -0.5), Point::new(0.5, 0.5), Point::new(-0.5, 0.5)];
        let q = polygon_rule(&sq, &Point::zeros(), 2).unwrap();
        assert_relative_eq!(q.integrate(|p| p.x * p.x), 1.0 / 12.0, epsilon = 1e-14);
    }

    #[test]
    fn face_rules() {
        let q = segment_rule(&Point::new(0.0, 0.0), &Point::new(1.0, 0.0), 1);
        assert_eq!(q.len(), 1);
        assert_relative_eq!(q.weights[0], 1.0);
        let q = segment_rule(&Point::new(0.0, 0.0), &Point::new(1.0, 0.0), 2);
        assert_relative_eq!(q.integrate(|p| p.x * p.x), 1.0 / 3.0, epsilon = 1e-15);
        let m = generate_polygonal(3, PolygonalKind::PerturbedQuad, 4).unwrap();
        for f in &m.faces {
            assert_relative_eq!(face_quadrature(&m, f.id, 5).total_weight(), f.measure, epsilon = 1e-14);
        }
    }

    #[test]
    fn polygon_rules_match_triangle_oracle() {
        let m = generate_polygonal(3, PolygonalKind::PerturbedQuad, 11).unwrap();
        let agg = generate_polygonal(4, PolygonalKind::Agglomerated, 0).unwrap();
        for mesh in [&m, &agg] {
            for e in &mesh.elements {
                for k in 0..=3usize {
                    let deg = 2 * k + 3;
                    let q = element_quadrature(mesh, e.id, deg).unwrap();
                    assert!(q.weights.iter().all(|&w| w > 0.0));
                    assert_relative_eq!(q.total_weight(), e.area, epsilon = 1e-13);
                    let poly = mesh.element_polygon(e.id);
                    for a in 0..=deg as u32 {
                        for b in 0..=(deg as u32 - a) {
                            let exact: f64 = (0..poly.len())
                                .map(|i| {
                                    triangle_monomial_oracle([e.center, poly[i], poly[(i + 1) % poly.len()]], a, b)
                                })
                                .sum();
                            let approx = q.integrate(|p| p.x.powi(a as i32) * p.y.powi(b as i32));
                            assert!(
                                (approx - exact).abs() <= 1e-12 * exact.abs().max(1e-3 * e.area),
                                "deg {deg} monomial ({a},{b}): {approx} vs {exact}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_triangle_is_error() {
        let p = Point::new(0.0, 0.0);
        assert!(triangle_rule(&p, &Point::new(1.0, 0.0), &Point::new(2.0, 0.0), 2).is_err());
    }
}
