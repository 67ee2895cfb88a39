//! Triangular meshes of the hold-all domain with an embedded interface.
//!
//! A [`TriMesh`] carries region tags on its triangles and markers on its
//! boundary edges. Both are Lagrangian: they travel with the vertices when the
//! mesh is displaced and are never recomputed from geometry.

mod generate;
mod io;
mod quality;
mod validate;

pub use generate::{circle_in_box_vertex_count, generate_circle_in_box, CircleInBox};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};
pub use quality::{mesh_quality, triangle_quality, QualityReport};
pub use validate::{validate_mesh, Violation};

use std::collections::BTreeMap;
use std::fmt;

use crate::fem::VectorField;

pub type Point = [f64; 2];

/// Which side of the interface a triangle belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    In,
    Out,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::In => "IN",
            Region::Out => "OUT",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Selects the triangles an operator is assembled over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionFilter {
    In,
    Out,
    All,
}

impl RegionFilter {
    pub fn contains(self, region: Region) -> bool {
        match self {
            RegionFilter::All => true,
            RegionFilter::In => region == Region::In,
            RegionFilter::Out => region == Region::Out,
        }
    }
}

impl From<Region> for RegionFilter {
    fn from(region: Region) -> Self {
        match region {
            Region::In => RegionFilter::In,
            Region::Out => RegionFilter::Out,
        }
    }
}

/// Boundary edge marker: `Inner` edges form the shape, `Outer` edges the box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Marker {
    Inner,
    Outer,
}

impl Marker {
    pub fn as_str(self) -> &'static str {
        match self {
            Marker::Inner => "INNER",
            Marker::Outer => "OUTER",
        }
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub region: Region,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub marker: Marker,
}

/// Hold-all triangulation. Immutable once built; displacement produces a new
/// mesh sharing the same connectivity.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<Triangle>,
    boundary: Vec<BoundaryEdge>,
}

impl TriMesh {
    /// Builds a mesh without checking invariants; see [`validate_mesh`].
    pub fn new(vertices: Vec<Point>, triangles: Vec<Triangle>, boundary: Vec<BoundaryEdge>) -> Self {
        Self { vertices, triangles, boundary }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t].vertices;
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Same connectivity and tags, new coordinates.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> TriMesh {
        assert_eq!(vertices.len(), self.vertices.len(), "vertex count must not change");
        TriMesh {
            vertices,
            triangles: self.triangles.clone(),
            boundary: self.boundary.clone(),
        }
    }

    /// Sorted, deduplicated vertex indices touched by edges with `marker`.
    pub fn marked_vertices(&self, marker: Marker) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary
            .iter()
            .filter(|e| e.marker == marker)
            .flat_map(|e| e.vertices)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn count_region(&self, region: Region) -> usize {
        self.triangles.iter().filter(|t| t.region == region).count()
    }

    pub fn region_area(&self, filter: RegionFilter) -> f64 {
        self.triangles
            .iter()
            .enumerate()
            .filter(|(_, t)| filter.contains(t.region))
            .map(|(i, _)| signed_area(self.triangle_points(i)))
            .sum()
    }

    /// Per-vertex flag: vertex belongs to at least one triangle of `region`.
    pub fn vertex_in_region(&self, region: Region) -> Vec<bool> {
        let mut flags = vec![false; self.vertices.len()];
        for t in self.triangles.iter().filter(|t| t.region == region) {
            for &v in &t.vertices {
                flags[v] = true;
            }
        }
        flags
    }

    /// The INNER edges chained into one closed loop of vertex indices
    /// (first vertex not repeated). `None` if they do not form one simple cycle.
    pub fn inner_polyline(&self) -> Option<Vec<usize>> {
        let edges: Vec<[usize; 2]> = self
            .boundary
            .iter()
            .filter(|e| e.marker == Marker::Inner)
            .map(|e| e.vertices)
            .collect();
        chain_cycle(&edges)
    }

    /// Submesh made of the triangles with `region`, plus the map from submesh
    /// vertex index to parent vertex index.
    ///
    /// Edges on the boundary of the submesh keep their parent marker when they
    /// had one; former INNER interface edges become boundary edges of both
    /// submeshes.
    pub fn extract_region(&self, region: Region) -> (TriMesh, Vec<usize>) {
        let mut parent_to_sub = vec![usize::MAX; self.vertices.len()];
        let mut sub_to_parent = Vec::new();
        let mut triangles = Vec::new();
        for t in self.triangles.iter().filter(|t| t.region == region) {
            let mut local = [0usize; 3];
            for (k, &v) in t.vertices.iter().enumerate() {
                if parent_to_sub[v] == usize::MAX {
                    parent_to_sub[v] = sub_to_parent.len();
                    sub_to_parent.push(v);
                }
                local[k] = parent_to_sub[v];
            }
            triangles.push(Triangle { vertices: local, region });
        }
        let vertices = sub_to_parent.iter().map(|&v| self.vertices[v]).collect();

        let marker_of: BTreeMap<[usize; 2], Marker> = self
            .boundary
            .iter()
            .map(|e| (sorted_pair(e.vertices), e.marker))
            .collect();
        let boundary = boundary_edges_of(&triangles)
            .into_iter()
            .map(|[a, b]| {
                let parent = sorted_pair([sub_to_parent[a], sub_to_parent[b]]);
                let marker = marker_of.get(&parent).copied().unwrap_or(match region {
                    Region::In => Marker::Inner,
                    Region::Out => Marker::Outer,
                });
                BoundaryEdge { vertices: [a, b], marker }
            })
            .collect();
        (TriMesh { vertices, triangles, boundary }, sub_to_parent)
    }

    /// Vertices moved by `t * field`; connectivity and tags unchanged.
    /// The result is not validated.
    pub fn displace(&self, field: &VectorField, t: f64) -> TriMesh {
        assert_eq!(field.len(), self.vertices.len(), "field length must match vertex count");
        let vertices = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let w = field.get(i);
                [p[0] + t * w[0], p[1] + t * w[1]]
            })
            .collect();
        self.with_vertices(vertices)
    }

    /// Vertices flattened as `x0, y0, x1, y1, ...`.
    pub fn coordinates(&self) -> Vec<f64> {
        self.vertices.iter().flat_map(|p| *p).collect()
    }

    pub fn with_coordinates(&self, q: &[f64]) -> TriMesh {
        assert_eq!(q.len(), 2 * self.vertices.len());
        self.with_vertices(q.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
    }
}

/// Displaces `mesh` by `t * field`. Free-function form of [`TriMesh::displace`].
pub fn displace(mesh: &TriMesh, field: &VectorField, t: f64) -> TriMesh {
    mesh.displace(field, t)
}

/// Free-function form of [`TriMesh::extract_region`].
pub fn extract_region(mesh: &TriMesh, region: Region) -> (TriMesh, Vec<usize>) {
    mesh.extract_region(region)
}

pub fn signed_area([a, b, c]: [Point; 3]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub(crate) fn sorted_pair([a, b]: [usize; 2]) -> [usize; 2] {
    if a <= b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Edges used by exactly one triangle, oriented as in that triangle.
pub(crate) fn boundary_edges_of(triangles: &[Triangle]) -> Vec<[usize; 2]> {
    let mut count: BTreeMap<[usize; 2], (usize, [usize; 2])> = BTreeMap::new();
    for t in triangles {
        let [a, b, c] = t.vertices;
        for e in [[a, b], [b, c], [c, a]] {
            count.entry(sorted_pair(e)).or_insert((0, e)).0 += 1;
        }
    }
    count.into_values().filter(|(n, _)| *n == 1).map(|(_, e)| e).collect()
}

/// Chains undirected edges into a single closed cycle.
pub(crate) fn chain_cycle(edges: &[[usize; 2]]) -> Option<Vec<usize>> {
    if edges.len() < 3 {
        return None;
    }
    let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &[a, b] in edges {
        if a == b {
            return None;
        }
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    }
    if adjacency.values().any(|n| n.len() != 2) {
        return None;
    }
    let start = edges[0][0];
    let mut cycle = vec![start];
    let mut prev = start;
    let mut cur = edges[0][1];
    while cur != start {
        cycle.push(cur);
        let next = adjacency[&cur].iter().copied().find(|&n| n != prev)?;
        prev = cur;
        cur = next;
        if cycle.len() > edges.len() {
            return None;
        }
    }
    (cycle.len() == edges.len()).then_some(cycle)
}

/// Winding number of a closed polygon about `center`.
pub fn winding_number(polygon: &[Point], center: Point) -> i64 {
    let mut total = 0.0;
    for i in 0..polygon.len() {
        let a = polygon[i];
        let b = polygon[(i + 1) % polygon.len()];
        let a0 = (a[1] - center[1]).atan2(a[0] - center[0]);
        let b0 = (b[1] - center[1]).atan2(b[0] - center[0]);
        let mut d = b0 - a0;
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        total += d;
    }
    (total / (2.0 * std::f64::consts::PI)).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::VectorField;

    fn circle() -> TriMesh {
        generate_circle_in_box(&CircleInBox { resolution: 6, ..CircleInBox::default() }).unwrap()
    }

    #[test]
    fn displace_by_zero_is_identity() {
        let mesh = circle();
        let field = VectorField::from_fn(mesh.num_vertices(), |i| [i as f64, -(i as f64)]);
        assert_eq!(mesh.displace(&field, 0.0), mesh);
    }

    #[test]
    fn constant_translation_preserves_quality() {
        let mesh = circle();
        let field = VectorField::from_fn(mesh.num_vertices(), |_| [1.0, 0.0]);
        let moved = mesh.displace(&field, 0.37);
        for (p, q) in mesh.vertices().iter().zip(moved.vertices()) {
            assert_eq!(q[0], p[0] + 0.37);
            assert_eq!(q[1], p[1]);
        }
        for t in 0..mesh.num_triangles() {
            let a = triangle_quality(mesh.triangle_points(t));
            let b = triangle_quality(moved.triangle_points(t));
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(moved.triangles(), mesh.triangles());
        assert_eq!(moved.boundary_edges(), mesh.boundary_edges());
    }

    #[test]
    fn extract_in_gives_disk_bounded_by_interface() {
        let mesh = circle();
        let (disk, map) = mesh.extract_region(Region::In);
        assert_eq!(disk.num_triangles(), mesh.count_region(Region::In));
        for (i, &p) in map.iter().enumerate() {
            assert_eq!(disk.vertices()[i], mesh.vertices()[p]);
        }
        let loop_sub: Vec<usize> = disk.inner_polyline().unwrap().iter().map(|&v| map[v]).collect();
        let mut a = loop_sub.clone();
        let mut b = mesh.inner_polyline().unwrap();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
        assert!(disk.boundary_edges().iter().all(|e| e.marker == Marker::Inner));
    }

    #[test]
    fn region_counts_add_up() {
        let mesh = circle();
        let (a, _) = mesh.extract_region(Region::In);
        let (b, _) = mesh.extract_region(Region::Out);
        assert_eq!(a.num_triangles() + b.num_triangles(), mesh.num_triangles());
    }

    #[test]
    fn chain_cycle_rejects_branches() {
        assert!(chain_cycle(&[[0, 1], [1, 2], [2, 0]]).is_some());
        assert!(chain_cycle(&[[0, 1], [1, 2], [2, 0], [0, 3]]).is_none());
        assert!(chain_cycle(&[[0, 1], [1, 2], [2, 0], [3, 4], [4, 5], [5, 3]]).is_none());
    }
}
