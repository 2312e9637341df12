//! Polygonal meshes: topology, geometry and regularity checks.
//!
//! A mesh is built from a vertex list and counterclockwise cell loops. Faces
//! (edges) are derived and numbered lexicographically by their sorted vertex
//! pair; the face normal points from the lower to the higher adjacent element
//! id, or outward on the boundary. This numbering fixes the DOF ordering.

mod generate;
mod io;

use std::collections::BTreeMap;

use nalgebra::Vector2;
use serde::Serialize;

use crate::error::{Error, Result};

pub use generate::{
    generate_cartesian, generate_cartesian_grid, generate_mesh, generate_polygonal, MeshKind, PolygonalKind, Rectangle,
};
pub use io::{load_mesh, mesh_from_json, mesh_to_json, save_mesh, MeshFile};

pub type Point = Vector2<f64>;

/// Centroid is accepted as the star centre when its inscribed radius is at least this fraction of h_T.
pub const CENTROID_BALL_RATIO: f64 = 0.1;
/// Minimal admissible inscribed-ball ratio r_T / h_T.
pub const MIN_BALL_RATIO: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub id: usize,
    /// Sorted vertex pair.
    pub vertices: [usize; 2],
    /// Unit normal, fixed at construction.
    pub normal: Point,
    /// Unit tangent, `normal` rotated by +pi/2.
    pub tangent: Point,
    pub diameter: f64,
    pub measure: f64,
    pub midpoint: Point,
    pub boundary: bool,
    /// Lower adjacent element id first.
    pub elements: (usize, Option<usize>),
}

impl Face {
    pub fn adjacent(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.elements.0).chain(self.elements.1)
    }

    /// Endpoints in the order of the stored vertex pair.
    pub fn endpoints(&self, mesh: &PolygonalMesh) -> [Point; 2] {
        [mesh.vertices[self.vertices[0]].position, mesh.vertices[self.vertices[1]].position]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: usize,
    /// Counterclockwise vertex loop.
    pub vertices: Vec<usize>,
    /// Face `i` joins `vertices[i]` and `vertices[i + 1]`.
    pub faces: Vec<usize>,
    /// `orientations[i] * n_F` points out of the element.
    pub orientations: Vec<f64>,
    pub diameter: f64,
    pub area: f64,
    pub centroid: Point,
    /// Star centre x_T.
    pub center: Point,
    /// Radius of the largest ball centred at `center` w.r.t. which the cell is star-shaped.
    pub ball_radius: f64,
    pub subdomain: u32,
}

impl Element {
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn local_face_index(&self, face: usize) -> Option<usize> {
        self.faces.iter().position(|&f| f == face)
    }
}

/// Element-level geometric quantities of a single polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub diameter: f64,
    pub area: f64,
    pub centroid: Point,
    pub center: Point,
    pub ball_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalMesh {
    pub vertices: Vec<Vertex>,
    pub faces: Vec<Face>,
    pub elements: Vec<Element>,
    /// Largest element diameter.
    pub h: f64,
    pub boundary_faces: Vec<usize>,
}

/// Raw regularity indicators of a mesh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub n_elements: usize,
    pub n_faces: usize,
    pub n_boundary_faces: usize,
    pub h: f64,
    pub max_faces_per_element: usize,
    pub min_face_to_element_diameter: f64,
    pub min_ball_ratio: f64,
    pub closure_defect: f64,
    pub min_lambda: f64,
    pub max_lambda: f64,
    pub total_area: f64,
}

/// Signed distance from `p` to the line through `a`, `b`; positive on the left.
fn left_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let t = b - a;
    let len = t.norm();
    (t.x * (p.y - a.y) - t.y * (p.x - a.x)) / len
}

fn inscribed_radius(p: &Point, poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| left_distance(p, &poly[i], &poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn signed_area_and_centroid(poly: &[Point]) -> (f64, Point) {
    let n = poly.len();
    let mut area = 0.0;
    let mut c = Point::zeros();
    for i in 0..n {
        let a = &poly[i];
        let b = &poly[(i + 1) % n];
        let cross = a.x * b.y - b.x * a.y;
        area += cross;
        c += (a + b) * cross;
    }
    area *= 0.5;
    (area, c / (6.0 * area))
}

/// Geometry of a counterclockwise polygon, including the star centre x_T.
///
/// The centroid is used when its inscribed radius reaches `CENTROID_BALL_RATIO * h_T`;
/// otherwise the best point of a sampling grid over the bounding box is taken.
pub fn compute_element_geometry(cell: usize, poly: &[Point]) -> Result<ElementGeometry> {
    if poly.len() < 3 {
        return Err(Error::DegenerateCell { cell, reason: format!("{} vertices", poly.len()) });
    }
    let (area, centroid) = signed_area_and_centroid(poly);
    if !(area > 0.0) {
        return Err(Error::DegenerateCell {
            cell,
            reason: format!("non-positive signed area {area:e} (cell must be counterclockwise)"),
        });
    }
    let mut diameter: f64 = 0.0;
    for (i, a) in poly.iter().enumerate() {
        for b in &poly[i + 1..] {
            diameter = diameter.max((a - b).norm());
        }
    }
    let mut center = centroid;
    let mut ball_radius = inscribed_radius(&centroid, poly);
    if ball_radius < CENTROID_BALL_RATIO * diameter {
        let (mut lo, mut hi) = (poly[0], poly[0]);
        for p in poly {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        const SAMPLES: usize = 64;
        for i in 0..=SAMPLES {
            for j in 0..=SAMPLES {
                let p = Point::new(
                    lo.x + (hi.x - lo.x) * i as f64 / SAMPLES as f64,
                    lo.y + (hi.y - lo.y) * j as f64 / SAMPLES as f64,
                );
                let r = inscribed_radius(&p, poly);
                if r > ball_radius {
                    ball_radius = r;
                    center = p;
                }
            }
        }
    }
    if ball_radius < MIN_BALL_RATIO * diameter {
        return Err(Error::DegenerateCell {
            cell,
            reason: format!(
                "not star-shaped w.r.t. a ball: best r_T/h_T = {:.3e}",
                ball_radius / diameter
            ),
        });
    }
    Ok(ElementGeometry { diameter, area, centroid, center, ball_radius })
}

impl PolygonalMesh {
    /// Builds topology and geometry from counterclockwise cell loops.
    pub fn new(positions: Vec<Point>, cells: Vec<Vec<usize>>, subdomains: Vec<u32>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Parse { location: "cells".into(), reason: "empty cell list".into() });
        }
        if subdomains.len() != cells.len() {
            return Err(Error::Parse {
                location: "subdomains".into(),
                reason: format!("{} labels for {} cells", subdomains.len(), cells.len()),
            });
        }
        for (i, p) in positions.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(Error::Parse {
                    location: format!("vertex {i}"),
                    reason: "non-finite coordinate".into(),
                });
            }
        }
        let nv = positions.len();
        // sorted pair -> [(cell, local index, traversed forward)]
        let mut edges: BTreeMap<(usize, usize), Vec<(usize, usize, bool)>> = BTreeMap::new();
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(Error::Parse {
                    location: format!("cell {c}"),
                    reason: format!("{} vertices", cell.len()),
                });
            }
            for (i, &a) in cell.iter().enumerate() {
                let b = cell[(i + 1) % cell.len()];
                for v in [a, b] {
                    if v >= nv {
                        return Err(Error::Parse {
                            location: format!("cell {c}, face {i}"),
                            reason: format!("dangling vertex reference {v} (mesh has {nv} vertices)"),
                        });
                    }
                }
                if a == b {
                    return Err(Error::Parse {
                        location: format!("cell {c}, face {i}"),
                        reason: "repeated vertex".into(),
                    });
                }
                edges.entry((a.min(b), a.max(b))).or_default().push((c, i, a < b));
            }
        }

        let vertices: Vec<Vertex> =
            positions.into_iter().enumerate().map(|(id, position)| Vertex { id, position }).collect();

        let mut elements = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let poly: Vec<Point> = cell.iter().map(|&v| vertices[v].position).collect();
            let g = compute_element_geometry(c, &poly)?;
            elements.push(Element {
                id: c,
                vertices: cell.clone(),
                faces: vec![usize::MAX; cell.len()],
                orientations: vec![0.0; cell.len()],
                diameter: g.diameter,
                area: g.area,
                centroid: g.centroid,
                center: g.center,
                ball_radius: g.ball_radius,
                subdomain: subdomains[c],
            });
        }

        let mut faces = Vec::with_capacity(edges.len());
        let mut boundary_faces = Vec::new();
        for (id, ((a, b), adj)) in edges.into_iter().enumerate() {
            let location = format!("face {id} ({a}, {b})");
            match adj.len() {
                1 | 2 => {}
                n => {
                    return Err(Error::Parse { location, reason: format!("non-manifold face shared by {n} cells") })
                }
            }
            if adj.len() == 2 && adj[0].2 == adj[1].2 {
                return Err(Error::Parse {
                    location,
                    reason: format!("cells {} and {} have inconsistent orientation", adj[0].0, adj[1].0),
                });
            }
            if adj.len() == 2 && adj[0].0 == adj[1].0 {
                return Err(Error::Parse { location, reason: "face appears twice in the same cell".into() });
            }
            let pa = vertices[a].position;
            let pb = vertices[b].position;
            let d = pb - pa;
            let measure = d.norm();
            if !(measure > 0.0) {
                return Err(Error::Parse { location, reason: "zero-length face".into() });
            }
            let mut adj = adj;
            adj.sort_by_key(|e| e.0);
            let (low, _, low_forward) = adj[0];
            // Outward normal of the low cell: its traversal direction rotated by -pi/2.
            let dir = if low_forward { d } else { -d } / measure;
            let normal = Point::new(dir.y, -dir.x);
            let tangent = Point::new(-normal.y, normal.x);
            for (k, &(c, i, _)) in adj.iter().enumerate() {
                elements[c].faces[i] = id;
                elements[c].orientations[i] = if k == 0 { 1.0 } else { -1.0 };
            }
            let boundary = adj.len() == 1;
            if boundary {
                boundary_faces.push(id);
            }
            faces.push(Face {
                id,
                vertices: [a, b],
                normal,
                tangent,
                diameter: measure,
                measure,
                midpoint: (pa + pb) * 0.5,
                boundary,
                elements: (low, adj.get(1).map(|e| e.0)),
            });
        }
        let h = elements.iter().map(|e| e.diameter).fold(0.0, f64::max);
        Ok(Self { vertices, faces, elements, h, boundary_faces })
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_interior_faces(&self) -> usize {
        self.faces.len() - self.boundary_faces.len()
    }

    pub fn element_polygon(&self, element: usize) -> Vec<Point> {
        self.elements[element].vertices.iter().map(|&v| self.vertices[v].position).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.elements.iter().map(|e| e.area).sum()
    }

    /// |sum_F omega_TF |F| n_F| for one element.
    pub fn closure_defect(&self, element: usize) -> f64 {
        let e = &self.elements[element];
        let mut s = Point::zeros();
        for (&f, &o) in e.faces.iter().zip(&e.orientations) {
            let face = &self.faces[f];
            s += face.normal * (o * face.measure);
        }
        s.norm()
    }

    /// Weight lambda_T balancing element and face terms in the U-product.
    pub fn lambda(&self, element: usize) -> f64 {
        let e = &self.elements[element];
        e.diameter * e.diameter / e.area * e.n_faces() as f64
    }

    /// Regularity indicators; report-only.
    pub fn validate(&self) -> RegularityReport {
        let mut max_faces = 0;
        let mut min_face_ratio = f64::INFINITY;
        let mut min_ball = f64::INFINITY;
        let mut closure: f64 = 0.0;
        let mut min_lambda = f64::INFINITY;
        let mut max_lambda: f64 = 0.0;
        for e in &self.elements {
            max_faces = max_faces.max(e.n_faces());
            for &f in &e.faces {
                min_face_ratio = min_face_ratio.min(self.faces[f].diameter / e.diameter);
            }
            min_ball = min_ball.min(e.ball_radius / e.diameter);
            closure = closure.max(self.closure_defect(e.id));
            let l = self.lambda(e.id);
            min_lambda = min_lambda.min(l);
            max_lambda = max_lambda.max(l);
        }
        RegularityReport {
            n_elements: self.n_elements(),
            n_faces: self.n_faces(),
            n_boundary_faces: self.boundary_faces.len(),
            h: self.h,
            max_faces_per_element: max_faces,
            min_face_to_element_diameter: min_face_ratio,
            min_ball_ratio: min_ball,
            closure_defect: closure,
            min_lambda,
            max_lambda,
            total_area: self.total_area(),
        }
    }

    /// Relabels subdomains from element centroids.
    pub fn relabel_subdomains(&mut self, label: impl Fn(&Point) -> u32) {
        for e in &mut self.elements {
            e.subdomain = label(&e.centroid);
        }
    }

    pub fn subdomains(&self) -> Vec<u32> {
        self.elements.iter().map(|e| e.subdomain).collect()
    }

    /// True when no element straddles the vertical line x = `x0`.
    pub fn is_compatible_with_vertical_interface(&self, x0: f64) -> bool {
        let tol = 1e-12;
        self.elements.iter().all(|e| {
            let xs = e.vertices.iter().map(|&v| self.vertices[v].position.x);
            let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
            hi <= x0 + tol || lo >= x0 - tol
        })
    }

    /// Faces lying on the segment {x = x0} x [y0, y1].
    pub fn faces_on_vertical_line(&self, x0: f64, y0: f64, y1: f64) -> Vec<usize> {
        let tol = 1e-12;
        self.faces
            .iter()
            .filter(|f| {
                let [a, b] = f.endpoints(self);
                (a.x - x0).abs() < tol
                    && (b.x - x0).abs() < tol
                    && a.y.min(b.y) >= y0 - tol
                    && a.y.max(b.y) <= y1 + tol
            })
            .map(|f| f.id)
            .collect()
    }

    pub(crate) fn raw_cells(&self) -> Vec<Vec<usize>> {
        self.elements.iter().map(|e| e.vertices.clone()).collect()
    }
}
