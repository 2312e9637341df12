//! Structured and polygonal mesh generators on rectangles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Point, PolygonalMesh};
use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rectangle {
    pub fn unit() -> Self {
        Self { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }
    }

    fn grid_point(&self, n: usize, i: usize, j: usize) -> Point {
        Point::new(
            self.x0 + (self.x1 - self.x0) * i as f64 / n as f64,
            self.y0 + (self.y1 - self.y0) * j as f64 / n as f64,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolygonalKind {
    PerturbedQuad,
    Agglomerated,
    Triangular,
}

impl std::str::FromStr for PolygonalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perturbed-quad" => Ok(Self::PerturbedQuad),
            "agglomerated" => Ok(Self::Agglomerated),
            "triangular" => Ok(Self::Triangular),
            other => Err(Error::InvalidParameter { name: "kind", reason: format!("unknown mesh kind `{other}`") }),
        }
    }
}

fn grid_vertices(n: usize, domain: &Rectangle) -> Vec<Point> {
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            v.push(domain.grid_point(n, i, j));
        }
    }
    v
}

fn vid(n: usize, i: usize, j: usize) -> usize {
    j * (n + 1) + i
}

fn quad(n: usize, i: usize, j: usize) -> Vec<usize> {
    vec![vid(n, i, j), vid(n, i + 1, j), vid(n, i + 1, j + 1), vid(n, i, j + 1)]
}

/// Uniform `n x n` quadrilateral mesh.
pub fn generate_cartesian(n: usize, domain: Rectangle) -> Result<PolygonalMesh> {
    if n == 0 {
        return Err(Error::InvalidParameter { name: "n", reason: "cell count per side must be at least 1".into() });
    }
    let cells = (0..n).flat_map(|j| (0..n).map(move |i| quad(n, i, j))).collect::<Vec<_>>();
    let len = cells.len();
    PolygonalMesh::new(grid_vertices(n, &domain), cells, vec![0; len])
}

/// Uniform `nx x ny` quadrilateral mesh.
pub fn generate_cartesian_grid(nx: usize, ny: usize, domain: Rectangle) -> Result<PolygonalMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidParameter { name: "n", reason: "cell count per side must be at least 1".into() });
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point::new(
                domain.x0 + (domain.x1 - domain.x0) * i as f64 / nx as f64,
                domain.y0 + (domain.y1 - domain.y0) * j as f64 / ny as f64,
            ));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let cells: Vec<Vec<usize>> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]))
        .collect();
    let len = cells.len();
    PolygonalMesh::new(vertices, cells, vec![0; len])
}

/// Any generated family on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshKind {
    Cartesian,
    PerturbedQuad,
    Agglomerated,
    Triangular,
}

impl MeshKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Cartesian => "cartesian",
            Self::PerturbedQuad => "perturbed-quad",
            Self::Agglomerated => "agglomerated",
            Self::Triangular => "triangular",
        }
    }
}

impl std::str::FromStr for MeshKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartesian" => Ok(Self::Cartesian),
            other => other.parse::<PolygonalKind>().map(|k| match k {
                PolygonalKind::PerturbedQuad => Self::PerturbedQuad,
                PolygonalKind::Agglomerated => Self::Agglomerated,
                PolygonalKind::Triangular => Self::Triangular,
            }),
        }
    }
}

/// Generates an `n`-level mesh of the given kind on the unit square.
pub fn generate_mesh(kind: MeshKind, n: usize, seed: u64) -> Result<PolygonalMesh> {
    match kind {
        MeshKind::Cartesian => generate_cartesian(n, Rectangle::unit()),
        MeshKind::PerturbedQuad => generate_polygonal(n, PolygonalKind::PerturbedQuad, seed),
        MeshKind::Agglomerated => generate_polygonal(n, PolygonalKind::Agglomerated, seed),
        MeshKind::Triangular => generate_polygonal(n, PolygonalKind::Triangular, seed),
    }
}

/// Polygonal meshes of the unit square built from an `n x n` grid.
///
/// * `PerturbedQuad`: interior grid vertices displaced by up to 30% of the cell size.
/// * `Agglomerated`: horizontally adjacent cell pairs merged in a checkerboard
///   pattern, producing six-faced cells with hanging-node-free neighbours.
/// * `Triangular`: every grid cell split along its diagonal.
pub fn generate_polygonal(n: usize, kind: PolygonalKind, seed: u64) -> Result<PolygonalMesh> {
    if n < 2 {
        return Err(Error::InvalidParameter { name: "n", reason: "resolution must be at least 2".into() });
    }
    let domain = Rectangle::unit();
    let mut vertices = grid_vertices(n, &domain);
    let cells: Vec<Vec<usize>> = match kind {
        PolygonalKind::PerturbedQuad => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let amp = 0.3 / n as f64;
            for j in 1..n {
                for i in 1..n {
                    let dx: f64 = rng.gen_range(-amp..=amp);
                    let dy: f64 = rng.gen_range(-amp..=amp);
                    vertices[vid(n, i, j)] += Point::new(dx, dy);
                }
            }
            (0..n).flat_map(|j| (0..n).map(move |i| quad(n, i, j))).collect()
        }
        PolygonalKind::Agglomerated => {
            let mut cells = Vec::new();
            for j in 0..n {
                let mut i = 0;
                if j % 2 == 1 {
                    cells.push(quad(n, 0, j));
                    i = 1;
                }
                while i < n {
                    if i + 1 < n {
                        cells.push(vec![
                            vid(n, i, j),
                            vid(n, i + 1, j),
                            vid(n, i + 2, j),
                            vid(n, i + 2, j + 1),
                            vid(n, i + 1, j + 1),
                            vid(n, i, j + 1),
                        ]);
                        i += 2;
                    } else {
                        cells.push(quad(n, i, j));
                        i += 1;
                    }
                }
            }
            cells
        }
        PolygonalKind::Triangular => (0..n)
            .flat_map(|j| {
                (0..n).flat_map(move |i| {
                    let q = quad(n, i, j);
                    [vec![q[0], q[1], q[2]], vec![q[0], q[2], q[3]]]
                })
            })
            .collect(),
    };
    let len = cells.len();
    PolygonalMesh::new(vertices, cells, vec![0; len]).map_err(|e| match e {
        Error::DegenerateCell { cell, reason } => Error::GenerationFailure { cell, reason },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cartesian_counts() {
        let m = generate_cartesian(2, Rectangle::unit()).unwrap();
        assert_eq!(m.n_elements(), 4);
        assert_eq!(m.n_faces(), 12);
        assert_eq!(m.n_interior_faces(), 4);
        assert_eq!(m.boundary_faces.len(), 8);
        assert_eq!(m.vertices.len(), 9);
        assert_relative_eq!(m.h, 2f64.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn single_cell_closure() {
        let m = generate_cartesian(1, Rectangle::unit()).unwrap();
        assert_eq!(m.n_elements(), 1);
        assert_eq!(m.boundary_faces.len(), 4);
        assert!(m.closure_defect(0) < 1e-15);
    }

    #[test]
    fn cartesian_areas() {
        let m = generate_cartesian(4, Rectangle::unit()).unwrap();
        for e in &m.elements {
            assert_relative_eq!(e.area, 1.0 / 16.0, epsilon = 1e-15);
        }
        assert_relative_eq!(m.total_area(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_cells_rejected() {
        assert!(matches!(
            generate_cartesian(0, Rectangle::unit()),
            Err(Error::InvalidParameter { name: "n", .. })
        ));
        assert!(generate_polygonal(1, PolygonalKind::Agglomerated, 0).is_err());
    }

    #[test]
    fn agglomerated_has_hexagons() {
        let m = generate_polygonal(2, PolygonalKind::Agglomerated, 0).unwrap();
        assert!(m.elements.iter().any(|e| e.n_faces() >= 5));
        assert_relative_eq!(m.total_area(), 1.0, epsilon = 1e-14);
        let r = m.validate();
        assert!(r.min_face_to_element_diameter > 0.0);
        assert!(r.closure_defect < 1e-12);
    }

    #[test]
    fn perturbed_is_deterministic() {
        let a = generate_polygonal(4, PolygonalKind::PerturbedQuad, 1).unwrap();
        let b = generate_polygonal(4, PolygonalKind::PerturbedQuad, 1).unwrap();
        assert_eq!(a, b);
        let c = generate_polygonal(4, PolygonalKind::PerturbedQuad, 2).unwrap();
        assert_ne!(a, c);
        assert!(a.validate().closure_defect < 1e-12);
        assert_relative_eq!(a.total_area(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn triangular_counts() {
        let m = generate_polygonal(3, PolygonalKind::Triangular, 0).unwrap();
        assert_eq!(m.n_elements(), 18);
        assert!(m.elements.iter().all(|e| e.n_faces() == 3));
    }
}
