//! Structured P1 triangulations of the periodic unit cell `Y*` and of the
//! perforated unit square `G^ε`.
//!
//! Circular holes are replaced by regular polygons. The background grid
//! uses alternating ("checkerboard") diagonals so that a centered hole on an
//! even grid gives a mesh invariant under both axis reflections and the
//! diagonal swap.

mod cell;
mod io;
mod perforated;
mod validate;

pub use cell::build_cell_mesh;
pub use io::{read_mesh, write_mesh, write_vtk};
pub use perforated::{build_perforated_mesh, build_solid_mesh};
pub use validate::{validate_cell_mesh, validate_mesh, Issue, ValidationReport};

/// Tolerance for geometric identities.
pub const GEOM_TOL: f64 = 1e-12;

/// Geometry of one periodic cell with a single polygonal hole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub hole_center: [f64; 2],
    /// Circumradius of the hole polygon; zero means no hole.
    pub hole_radius: f64,
    pub hole_segments: usize,
    /// Grid subdivisions per cell edge.
    pub divisions: usize,
}

impl Default for CellGeometry {
    fn default() -> Self {
        CellGeometry {
            hole_center: [0.5, 0.5],
            hole_radius: 0.25,
            hole_segments: 16,
            divisions: 8,
        }
    }
}

impl CellGeometry {
    pub fn solid(divisions: usize) -> Self {
        CellGeometry {
            hole_radius: 0.0,
            divisions,
            ..CellGeometry::default()
        }
    }

    pub fn has_hole(&self) -> bool {
        self.hole_radius > 0.0
    }

    /// Area of the inscribed regular polygon.
    pub fn polygon_area(&self) -> f64 {
        if !self.has_hole() {
            return 0.0;
        }
        let s = self.hole_segments as f64;
        0.5 * s * self.hole_radius.powi(2) * (2.0 * std::f64::consts::PI / s).sin()
    }

    /// Perimeter of the inscribed regular polygon.
    pub fn polygon_perimeter(&self) -> f64 {
        if !self.has_hole() {
            return 0.0;
        }
        let s = self.hole_segments as f64;
        2.0 * s * self.hole_radius * (std::f64::consts::PI / s).sin()
    }

    /// `|Y*|` for the polygonal geometry.
    pub fn solid_area(&self) -> f64 {
        1.0 - self.polygon_area()
    }

    pub(crate) fn polygon_vertex(&self, k: usize) -> [f64; 2] {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / self.hole_segments as f64;
        [
            self.hole_center[0] + self.hole_radius * theta.cos(),
            self.hole_center[1] + self.hole_radius * theta.sin(),
        ]
    }

    pub fn check(&self) -> crate::Result<()> {
        use crate::Error::Geometry;
        if self.divisions == 0 {
            return Err(Geometry("divisions must be positive".into()));
        }
        let [cx, cy] = self.hole_center;
        if !(cx > 0.0 && cx < 1.0 && cy > 0.0 && cy < 1.0) {
            return Err(Geometry(format!("hole center ({cx}, {cy}) is not inside the cell")));
        }
        if !(self.hole_radius >= 0.0 && self.hole_radius < 0.5) {
            return Err(Geometry(format!(
                "hole radius {} is outside [0, 0.5)",
                self.hole_radius
            )));
        }
        if !self.has_hole() {
            return Ok(());
        }
        if self.hole_segments < 8 || !self.hole_segments.is_multiple_of(4) {
            return Err(Geometry(format!(
                "hole_segments = {} must be at least 8 and divisible by 4",
                self.hole_segments
            )));
        }
        let deviation =
            self.hole_radius * (1.0 - (std::f64::consts::PI / self.hole_segments as f64).cos());
        let clearance = cx.min(cy).min(1.0 - cx).min(1.0 - cy);
        if self.hole_radius + deviation >= clearance {
            return Err(Geometry(format!(
                "hole of radius {} around ({cx}, {cy}) touches the cell boundary",
                self.hole_radius
            )));
        }
        Ok(())
    }
}

/// Plain triangulation with tagged boundary edges.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub gamma_edges: Vec<[usize; 2]>,
    pub outer_edges: Vec<[usize; 2]>,
    pub areas: Vec<f64>,
}

/// Boundary tags understood by the assembly routines and the mesh file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Gamma,
    Outer,
}

impl Tag {
    pub fn parse(s: &str) -> crate::Result<Tag> {
        match s {
            "gamma" => Ok(Tag::Gamma),
            "outer" => Ok(Tag::Outer),
            other => Err(crate::Error::Tag(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tag::Gamma => "gamma",
            Tag::Outer => "outer",
        }
    }
}

pub(crate) fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

impl TriMesh {
    pub fn new(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        gamma_edges: Vec<[usize; 2]>,
        outer_edges: Vec<[usize; 2]>,
    ) -> Self {
        let areas = triangles
            .iter()
            .map(|t| signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]))
            .collect();
        TriMesh {
            vertices,
            triangles,
            gamma_edges,
            outer_edges,
            areas,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn edges(&self, tag: Tag) -> &[[usize; 2]] {
        match tag {
            Tag::Gamma => &self.gamma_edges,
            Tag::Outer => &self.outer_edges,
        }
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn edge_length(&self, e: [usize; 2]) -> f64 {
        let [a, b] = [self.vertices[e[0]], self.vertices[e[1]]];
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    pub fn boundary_length(&self, tag: Tag) -> f64 {
        self.edges(tag).iter().map(|&e| self.edge_length(e)).sum()
    }

    /// Vertex mask of all endpoints of edges carrying `tag`.
    pub fn tagged_vertices(&self, tag: Tag) -> Vec<bool> {
        let mut mask = vec![false; self.n_vertices()];
        for e in self.edges(tag) {
            mask[e[0]] = true;
            mask[e[1]] = true;
        }
        mask
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Gradients of the three barycentric basis functions on triangle `t`.
    pub fn gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        let two_area = 2.0 * self.areas[t];
        [
            [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area],
            [(c[1] - a[1]) / two_area, (a[0] - c[0]) / two_area],
            [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area],
        ]
    }

    /// Cheap structural fingerprint used to tie fields to meshes.
    pub fn fingerprint(&self) -> u64 {
        // FNV-1a over counts, connectivity and coordinate bits.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for byte in x.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.vertices.len() as u64);
        eat(self.triangles.len() as u64);
        for v in &self.vertices {
            eat(v[0].to_bits());
            eat(v[1].to_bits());
        }
        for t in &self.triangles {
            for &i in t {
                eat(i as u64);
            }
        }
        h
    }
}

/// Vertex pair identified by periodicity: `slave = master + shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicPair {
    pub slave: usize,
    pub master: usize,
    pub shift: [f64; 2],
}

/// Triangulation of the periodic cell `Y*`.
#[derive(Debug, Clone)]
pub struct CellMesh {
    pub geometry: CellGeometry,
    pub mesh: TriMesh,
    pub periodic_pairs: Vec<PeriodicPair>,
    /// Grid coordinates of background-grid vertices, `None` on the hole polygon.
    pub grid_index: Vec<Option<[usize; 2]>>,
    /// Hole polygon vertices in counter-clockwise order (empty without hole).
    pub hole_loop: Vec<usize>,
}

impl CellMesh {
    /// Representative unknown for every vertex after periodic identification.
    pub fn periodic_master(&self) -> Vec<usize> {
        let mut master: Vec<usize> = (0..self.mesh.n_vertices()).collect();
        for p in &self.periodic_pairs {
            master[p.slave] = p.master;
        }
        // Corners are chained through two identifications.
        for i in 0..master.len() {
            let mut m = master[i];
            while master[m] != m {
                m = master[m];
            }
            master[i] = m;
        }
        master
    }

    /// `|Y*|` measured on the mesh.
    pub fn area(&self) -> f64 {
        self.mesh.total_area()
    }

    /// `|Γ|` measured on the mesh.
    pub fn gamma_length(&self) -> f64 {
        self.mesh.boundary_length(Tag::Gamma)
    }
}

/// Interior triangulation of the holes, used by the harmonic extension.
#[derive(Debug, Clone)]
pub struct HoleFill {
    /// Extra vertices; their global index is `n_vertices + k`.
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

/// Triangulation of the perforated unit square `G^ε`.
#[derive(Debug, Clone)]
pub struct PerforatedMesh {
    pub geometry: CellGeometry,
    pub mesh: TriMesh,
    pub epsilon: f64,
    pub cells_per_side: usize,
    /// Cell `ξ` of every triangle.
    pub cell_index: Vec<[usize; 2]>,
    /// One counter-clockwise vertex loop per hole.
    pub holes: Vec<Vec<usize>>,
    /// Companion triangulation of the hole interiors.
    pub fill: Option<HoleFill>,
}

impl PerforatedMesh {
    /// The perforated mesh with its holes filled in.
    pub fn filled_mesh(&self) -> crate::Result<TriMesh> {
        let fill = self
            .fill
            .as_ref()
            .ok_or_else(|| crate::Error::Mesh("hole-filled companion mesh is missing".into()))?;
        let mut vertices = self.mesh.vertices.clone();
        vertices.extend_from_slice(&fill.vertices);
        let mut triangles = self.mesh.triangles.clone();
        triangles.extend_from_slice(&fill.triangles);
        Ok(TriMesh::new(
            vertices,
            triangles,
            Vec::new(),
            self.mesh.outer_edges.clone(),
        ))
    }

    /// Vertices on `∂G`.
    pub fn dirichlet_mask(&self) -> Vec<bool> {
        self.mesh.tagged_vertices(Tag::Outer)
    }

    /// Vertices on `Γ^ε`.
    pub fn gamma_mask(&self) -> Vec<bool> {
        self.mesh.tagged_vertices(Tag::Gamma)
    }

    /// Mesh width of the background grid.
    pub fn grid_width(&self) -> f64 {
        self.epsilon / self.geometry.divisions as f64
    }
}
