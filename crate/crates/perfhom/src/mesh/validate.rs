use std::collections::BTreeMap;
use std::fmt;

use super::{signed_area, CellMesh, PerforatedMesh, TriMesh, GEOM_TOL};

/// One violated mesh invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    FlippedTriangle { triangle: usize, area: f64 },
    NonConforming { edge: [usize; 2] },
    UntaggedBoundary { edge: [usize; 2] },
    OpenGammaLoop { vertex: usize },
    OuterEdgeOffBoundary { edge: [usize; 2] },
    PeriodicMismatch { pair: usize, slave: usize, master: usize, error: f64 },
    VertexInHole { vertex: usize, hole: usize },
    AreaMismatch { measured: f64, expected: f64 },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::FlippedTriangle { triangle, area } => {
                write!(f, "triangle {triangle} has non-positive area {area:e}")
            }
            Issue::NonConforming { edge } => write!(f, "edge {edge:?} is not conforming"),
            Issue::UntaggedBoundary { edge } => write!(f, "boundary edge {edge:?} carries no tag"),
            Issue::OpenGammaLoop { vertex } => write!(f, "gamma edges do not close at vertex {vertex}"),
            Issue::OuterEdgeOffBoundary { edge } => {
                write!(f, "outer edge {edge:?} is not on the unit square boundary")
            }
            Issue::PeriodicMismatch { pair, slave, master, error } => write!(
                f,
                "periodic pair {pair} ({slave} -> {master}) is off by {error:e}"
            ),
            Issue::VertexInHole { vertex, hole } => write!(f, "vertex {vertex} lies inside hole {hole}"),
            Issue::AreaMismatch { measured, expected } => {
                write!(f, "mesh area {measured} differs from {expected}")
            }
        }
    }
}

/// All invariant violations of a mesh; empty when the mesh is valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }
}

fn on_square_boundary(p: [f64; 2]) -> bool {
    p[0].abs() <= GEOM_TOL
        || p[1].abs() <= GEOM_TOL
        || (p[0] - 1.0).abs() <= GEOM_TOL
        || (p[1] - 1.0).abs() <= GEOM_TOL
}

fn check_topology(mesh: &TriMesh, faces_are_periodic: bool, issues: &mut Vec<Issue>) {
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = signed_area(
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        );
        if area <= 0.0 {
            issues.push(Issue::FlippedTriangle { triangle: t, area });
        }
    }

    // Directed half-edges: a conforming mesh uses each at most once and
    // every interior edge in both directions.
    let mut half: BTreeMap<[usize; 2], usize> = BTreeMap::new();
    for tri in &mesh.triangles {
        for k in 0..3 {
            *half.entry([tri[k], tri[(k + 1) % 3]]).or_default() += 1;
        }
    }
    let key = |e: [usize; 2]| [e[0].min(e[1]), e[0].max(e[1])];
    let tagged: BTreeMap<[usize; 2], ()> = mesh
        .gamma_edges
        .iter()
        .chain(&mesh.outer_edges)
        .map(|&e| (key(e), ()))
        .collect();
    for (&[a, b], &count) in &half {
        let twin = half.get(&[b, a]).copied().unwrap_or(0);
        if count > 1 || twin > 1 {
            if a < b {
                issues.push(Issue::NonConforming { edge: [a, b] });
            }
            continue;
        }
        if twin == 0 {
            let on_face = faces_are_periodic
                && on_square_boundary(mesh.vertices[a])
                && on_square_boundary(mesh.vertices[b]);
            if !on_face && !tagged.contains_key(&key([a, b])) {
                issues.push(Issue::UntaggedBoundary { edge: [a, b] });
            }
        }
    }

    let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
    for e in &mesh.gamma_edges {
        *degree.entry(e[0]).or_default() += 1;
        *degree.entry(e[1]).or_default() += 1;
    }
    for (&v, &d) in &degree {
        if d != 2 {
            issues.push(Issue::OpenGammaLoop { vertex: v });
        }
    }

    for e in &mesh.outer_edges {
        let (p, q) = (mesh.vertices[e[0]], mesh.vertices[e[1]]);
        let same_side = ((p[0] - q[0]).abs() <= GEOM_TOL
            && (p[0].abs() <= GEOM_TOL || (p[0] - 1.0).abs() <= GEOM_TOL))
            || ((p[1] - q[1]).abs() <= GEOM_TOL
                && (p[1].abs() <= GEOM_TOL || (p[1] - 1.0).abs() <= GEOM_TOL));
        if !same_side {
            issues.push(Issue::OuterEdgeOffBoundary { edge: *e });
        }
    }
}

fn check_area(measured: f64, expected: f64, issues: &mut Vec<Issue>) {
    if (measured - expected).abs() > GEOM_TOL * expected.abs().max(1.0) {
        issues.push(Issue::AreaMismatch { measured, expected });
    }
}

/// Checks a cell mesh, including its periodic identification.
pub fn validate_cell_mesh(cell: &CellMesh) -> ValidationReport {
    let mut issues = Vec::new();
    check_topology(&cell.mesh, true, &mut issues);
    for (k, p) in cell.periodic_pairs.iter().enumerate() {
        let s = cell.mesh.vertices[p.slave];
        let m = cell.mesh.vertices[p.master];
        let error = (s[0] - m[0] - p.shift[0])
            .abs()
            .max((s[1] - m[1] - p.shift[1]).abs());
        if error > GEOM_TOL {
            issues.push(Issue::PeriodicMismatch {
                pair: k,
                slave: p.slave,
                master: p.master,
                error,
            });
        }
    }
    check_area(cell.area(), cell.geometry.solid_area(), &mut issues);
    ValidationReport { issues }
}

/// Checks a perforated mesh of the unit square.
pub fn validate_mesh(mesh: &PerforatedMesh) -> ValidationReport {
    let mut issues = Vec::new();
    check_topology(&mesh.mesh, false, &mut issues);
    let holes = (mesh.cells_per_side * mesh.cells_per_side) as f64;
    let expected = 1.0 - holes * mesh.epsilon.powi(2) * mesh.geometry.polygon_area();
    check_area(mesh.mesh.total_area(), expected, &mut issues);
    if mesh.geometry.has_hole() {
        let r = mesh.epsilon
            * mesh.geometry.hole_radius
            * (std::f64::consts::PI / mesh.geometry.hole_segments as f64).cos();
        let m = mesh.cells_per_side as f64;
        let c = mesh.geometry.hole_center;
        for (v, p) in mesh.mesh.vertices.iter().enumerate() {
            let cx = ((p[0] * m).floor()).min(m - 1.0).max(0.0);
            let cy = ((p[1] * m).floor()).min(m - 1.0).max(0.0);
            let center = [(cx + c[0]) / m, (cy + c[1]) / m];
            if (p[0] - center[0]).hypot(p[1] - center[1]) < r - GEOM_TOL {
                issues.push(Issue::VertexInHole {
                    vertex: v,
                    hole: (cy * m + cx) as usize,
                });
            }
        }
    }
    ValidationReport { issues }
}
