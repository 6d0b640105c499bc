//! Indexed triangle meshes and their static topology.
//!
//! A [`TriMesh`] is validated on construction: every face references three
//! distinct in-range vertices, every edge is shared by one or two faces with
//! opposite orientation, every vertex is manifold and used by some face, and
//! no triangle is degenerate relative to the mean triangle area.

use std::collections::HashMap;

use thiserror::Error;

use crate::geom::{self, Vec3};

/// Triangles with area below this fraction of the mean area are degenerate.
pub const DEGENERATE_AREA_RATIO: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("topology error: {0}")]
    Topology(#[from] TopologyError),
    #[error("mesh has no vertices or no faces")]
    EmptyMesh,
    #[error("expected {expected} positions, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

impl MeshError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        MeshError::Parse {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("face {face} references vertex {vertex} but the mesh has {count} vertices")]
    IndexOutOfRange {
        face: usize,
        vertex: usize,
        count: usize,
    },
    #[error("face {face} repeats a vertex")]
    RepeatedVertex { face: usize },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinite { vertex: usize },
    #[error("edge ({a}, {b}) is shared by {count} faces")]
    NonManifoldEdge { a: usize, b: usize, count: usize },
    #[error("edge ({a}, {b}) has the same direction in both incident faces")]
    InconsistentOrientation { a: usize, b: usize },
    #[error("vertex {vertex} is non-manifold")]
    NonManifoldVertex { vertex: usize },
    #[error("vertex {vertex} is not referenced by any face")]
    IsolatedVertex { vertex: usize },
    #[error("face {face} is degenerate (area {area:e})")]
    DegenerateTriangle { face: usize, area: f64 },
}

/// A validated triangle surface with optional per-vertex tags.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    frozen: Vec<bool>,
}

impl TriMesh {
    /// Builds and validates a mesh. Boundary tags are derived from the
    /// connectivity.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if vertices.is_empty() || faces.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        let edges = validate_connectivity(vertices.len(), &faces)?;
        if let Some(vertex) = vertices
            .iter()
            .position(|v| !v.iter().all(|c| c.is_finite()))
        {
            return Err(TopologyError::NonFinite { vertex }.into());
        }
        let areas: Vec<f64> = faces
            .iter()
            .map(|&[a, b, c]| geom::triangle_area(vertices[a], vertices[b], vertices[c]))
            .collect();
        let mean = areas.iter().sum::<f64>() / areas.len() as f64;
        if let Some(face) = areas
            .iter()
            .position(|&a| !(a >= DEGENERATE_AREA_RATIO * mean) || a == 0.0)
        {
            return Err(TopologyError::DegenerateTriangle {
                face,
                area: areas[face],
            }
            .into());
        }

        let mut boundary = vec![false; vertices.len()];
        for e in edges.iter().filter(|e| e.faces[1].is_none()) {
            boundary[e.vertices[0]] = true;
            boundary[e.vertices[1]] = true;
        }
        let frozen = vec![false; vertices.len()];
        Ok(TriMesh {
            vertices,
            faces,
            boundary,
            frozen,
        })
    }

    /// Same connectivity and tags with new positions. The positions are not
    /// checked for degeneracy: evolved meshes may legitimately collapse.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Result<Self, MeshError> {
        if positions.len() != self.vertices.len() {
            return Err(MeshError::DimensionMismatch {
                expected: self.vertices.len(),
                actual: positions.len(),
            });
        }
        Ok(TriMesh {
            vertices: positions,
            faces: self.faces.clone(),
            boundary: self.boundary.clone(),
            frozen: self.frozen.clone(),
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_boundary(&self, vertex: usize) -> bool {
        self.boundary[vertex]
    }

    pub fn boundary_tags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn has_boundary(&self) -> bool {
        self.boundary.iter().any(|&b| b)
    }

    pub fn frozen_tags(&self) -> &[bool] {
        &self.frozen
    }

    /// Marks vertices whose positions a flow must keep fixed.
    pub fn set_frozen(&mut self, vertices: impl IntoIterator<Item = usize>) {
        for v in vertices {
            self.frozen[v] = true;
        }
    }

    pub fn face_area(&self, face: usize) -> f64 {
        face_area(&self.vertices, self.faces[face])
    }

    pub fn surface_area(&self) -> f64 {
        surface_area_of(&self.vertices, &self.faces)
    }

    /// Applies `f` to every vertex position.
    pub fn map_positions(&self, f: impl Fn(Vec3) -> Vec3) -> Self {
        let mut out = self.clone();
        out.vertices.iter_mut().for_each(|v| *v = f(*v));
        out
    }

    /// Axis-aligned bounding box diagonal length.
    pub fn bounding_box_diagonal(&self) -> f64 {
        bounding_box_diagonal(&self.vertices)
    }
}

pub fn face_area(positions: &[Vec3], [a, b, c]: [usize; 3]) -> f64 {
    geom::triangle_area(positions[a], positions[b], positions[c])
}

/// Sum of triangle areas.
pub fn surface_area(mesh: &TriMesh) -> f64 {
    mesh.surface_area()
}

pub fn surface_area_of(positions: &[Vec3], faces: &[[usize; 3]]) -> f64 {
    faces.iter().map(|&f| face_area(positions, f)).sum()
}

pub fn bounding_box_diagonal(positions: &[Vec3]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in positions {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    geom::norm(geom::sub(hi, lo))
}

/// Undirected edge with its one or two incident faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshEdge {
    /// Endpoints with `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// First entry is always present; the second is `None` on the boundary.
    pub faces: [Option<usize>; 2],
}

impl MeshEdge {
    pub fn is_boundary(&self) -> bool {
        self.faces[1].is_none()
    }
}

/// Static adjacency computed once from a validated mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshTopology {
    /// Sorted neighbor lists.
    pub neighbors: Vec<Vec<usize>>,
    /// Edges sorted by endpoints.
    pub edges: Vec<MeshEdge>,
    pub vertex_count: usize,
    pub face_count: usize,
    pub euler_characteristic: i64,
    pub components: usize,
    pub boundary_loops: usize,
    /// `(2c - b - χ) / 2` when that is a non-negative integer.
    pub genus: Option<usize>,
}

impl MeshTopology {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_loops == 0
    }
}

pub fn analyze_topology(mesh: &TriMesh) -> MeshTopology {
    let edges = collect_edges(mesh.faces());
    let n = mesh.vertex_count();
    let mut neighbors = vec![Vec::new(); n];
    for e in &edges {
        let [a, b] = e.vertices;
        neighbors[a].push(b);
        neighbors[b].push(a);
    }
    neighbors.iter_mut().for_each(|list| list.sort_unstable());

    let mut uf = UnionFind::new(n);
    for e in &edges {
        uf.union(e.vertices[0], e.vertices[1]);
    }
    let components = (0..n).filter(|&v| uf.find(v) == v).count();

    // Manifold vertices have exactly one outgoing boundary half-edge, so
    // boundary loops are the cycles of the successor map.
    let mut next: HashMap<usize, usize> = HashMap::new();
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let key = [a.min(b), a.max(b)];
            let idx = edges
                .binary_search_by(|e| e.vertices.cmp(&key))
                .expect("edge present");
            if edges[idx].is_boundary() {
                next.insert(a, b);
            }
        }
    }
    let mut visited: HashMap<usize, bool> = HashMap::new();
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut boundary_loops = 0;
    for start in starts {
        if visited.contains_key(&start) {
            continue;
        }
        boundary_loops += 1;
        let mut v = start;
        while visited.insert(v, true).is_none() {
            v = next[&v];
        }
    }

    let euler = n as i64 - edges.len() as i64 + mesh.face_count() as i64;
    let twice_genus = 2 * components as i64 - boundary_loops as i64 - euler;
    let genus = (twice_genus >= 0 && twice_genus % 2 == 0).then_some((twice_genus / 2) as usize);

    MeshTopology {
        neighbors,
        edges,
        vertex_count: n,
        face_count: mesh.face_count(),
        euler_characteristic: euler,
        components,
        boundary_loops,
        genus,
    }
}

fn collect_edges(faces: &[[usize; 3]]) -> Vec<MeshEdge> {
    let mut half: Vec<([usize; 2], usize)> = Vec::with_capacity(faces.len() * 3);
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            half.push(([a.min(b), a.max(b)], fi));
        }
    }
    half.sort_unstable();
    let mut edges: Vec<MeshEdge> = Vec::with_capacity(half.len() / 2 + 1);
    for (key, face) in half {
        match edges.last_mut() {
            Some(e) if e.vertices == key => e.faces[1] = Some(face),
            _ => edges.push(MeshEdge {
                vertices: key,
                faces: [Some(face), None],
            }),
        }
    }
    edges
}

fn validate_connectivity(
    vertex_count: usize,
    faces: &[[usize; 3]],
) -> Result<Vec<MeshEdge>, TopologyError> {
    for (face, f) in faces.iter().enumerate() {
        if let Some(&vertex) = f.iter().find(|&&v| v >= vertex_count) {
            return Err(TopologyError::IndexOutOfRange {
                face,
                vertex,
                count: vertex_count,
            });
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(TopologyError::RepeatedVertex { face });
        }
    }

    // Directed half-edges grouped by undirected key.
    let mut half: Vec<([usize; 2], bool)> = Vec::with_capacity(faces.len() * 3);
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            half.push(([a.min(b), a.max(b)], a < b));
        }
    }
    half.sort_unstable();
    for group in half.chunk_by(|x, y| x.0 == y.0) {
        let [a, b] = group[0].0;
        match group.len() {
            1 => {}
            2 if group[0].1 != group[1].1 => {}
            2 => return Err(TopologyError::InconsistentOrientation { a, b }),
            count => return Err(TopologyError::NonManifoldEdge { a, b, count }),
        }
    }

    let mut used = vec![false; vertex_count];
    faces.iter().flatten().for_each(|&v| used[v] = true);
    if let Some(vertex) = used.iter().position(|&u| !u) {
        return Err(TopologyError::IsolatedVertex { vertex });
    }

    // The link of a manifold vertex is a single path or cycle. Orientation
    // is already consistent, so each link vertex has at most one successor
    // and one predecessor; more than one component means a pinched fan.
    let mut link: Vec<Vec<(usize, usize)>> = vec![Vec::new(); vertex_count];
    for f in faces {
        for k in 0..3 {
            link[f[k]].push((f[(k + 1) % 3], f[(k + 2) % 3]));
        }
    }
    for (vertex, pairs) in link.iter().enumerate() {
        let mut nodes: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let mut uf = UnionFind::new(nodes.len());
        let idx = |x: usize| nodes.binary_search(&x).unwrap();
        for &(a, b) in pairs {
            uf.union(idx(a), idx(b));
        }
        let comps = (0..nodes.len()).filter(|&i| uf.find(i) == i).count();
        if comps != 1 {
            return Err(TopologyError::NonManifoldVertex { vertex });
        }
    }

    Ok(collect_edges(faces))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
