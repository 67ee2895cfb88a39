use std::collections::BTreeMap;
use std::fmt;

use super::{chain_cycle, signed_area, sorted_pair, Marker, Point, Region, TriMesh};

/// One broken mesh invariant together with the entity that breaks it.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    IndexOutOfRange { triangle: usize, vertex: usize },
    RepeatedVertex { triangle: usize },
    InvertedElement { triangle: usize, signed_area: f64 },
    NonManifoldEdge { edge: [usize; 2], triangles: usize },
    InconsistentOrientation { edge: [usize; 2] },
    UnmarkedBoundaryEdge { edge: [usize; 2] },
    MarkedEdgeMissing { edge: [usize; 2], marker: Marker },
    DuplicateMarkedEdge { edge: [usize; 2] },
    InnerEdgeRegions { edge: [usize; 2] },
    OuterEdgeNotOnBoundary { edge: [usize; 2] },
    OuterEdgeRegion { edge: [usize; 2] },
    InterfaceNotClosed,
    InterfaceSelfIntersection { edges: [[usize; 2]; 2] },
}

impl Violation {
    /// Short name of the invariant.
    pub fn invariant(&self) -> &'static str {
        match self {
            Violation::IndexOutOfRange { .. } | Violation::RepeatedVertex { .. } => "connectivity",
            Violation::InvertedElement { .. } => "orientation",
            Violation::NonManifoldEdge { .. }
            | Violation::InconsistentOrientation { .. }
            | Violation::UnmarkedBoundaryEdge { .. } => "conforming",
            Violation::MarkedEdgeMissing { .. }
            | Violation::DuplicateMarkedEdge { .. }
            | Violation::InnerEdgeRegions { .. }
            | Violation::OuterEdgeNotOnBoundary { .. }
            | Violation::OuterEdgeRegion { .. } => "boundary-markers",
            Violation::InterfaceNotClosed | Violation::InterfaceSelfIntersection { .. } => "interface",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] ", self.invariant())?;
        match self {
            Violation::IndexOutOfRange { triangle, vertex } => {
                write!(f, "triangle {triangle} references missing vertex {vertex}")
            }
            Violation::RepeatedVertex { triangle } => write!(f, "triangle {triangle} repeats a vertex"),
            Violation::InvertedElement { triangle, signed_area } => {
                write!(f, "inverted element: triangle {triangle} has signed area {signed_area:e}")
            }
            Violation::NonManifoldEdge { edge, triangles } => {
                write!(f, "edge {edge:?} is shared by {triangles} triangles")
            }
            Violation::InconsistentOrientation { edge } => {
                write!(f, "edge {edge:?} is traversed in the same direction by both neighbours")
            }
            Violation::UnmarkedBoundaryEdge { edge } => {
                write!(f, "edge {edge:?} has one neighbour but no OUTER marker (hole or hanging node)")
            }
            Violation::MarkedEdgeMissing { edge, marker } => {
                write!(f, "{marker} edge {edge:?} is not an edge of any triangle")
            }
            Violation::DuplicateMarkedEdge { edge } => write!(f, "edge {edge:?} is marked twice"),
            Violation::InnerEdgeRegions { edge } => {
                write!(f, "INNER edge {edge:?} does not separate one IN and one OUT triangle")
            }
            Violation::OuterEdgeNotOnBoundary { edge } => {
                write!(f, "OUTER edge {edge:?} is interior to the mesh")
            }
            Violation::OuterEdgeRegion { edge } => write!(f, "OUTER edge {edge:?} belongs to an IN triangle"),
            Violation::InterfaceNotClosed => write!(f, "INNER edges do not form one closed polyline"),
            Violation::InterfaceSelfIntersection { edges } => {
                write!(f, "INNER edges {:?} and {:?} intersect", edges[0], edges[1])
            }
        }
    }
}

/// Checks every mesh invariant. An empty result means the mesh is valid.
pub fn validate_mesh(mesh: &TriMesh) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = mesh.num_vertices();

    // edge -> list of (triangle, directed edge)
    let mut edges: BTreeMap<[usize; 2], Vec<(usize, [usize; 2])>> = BTreeMap::new();
    for (ti, t) in mesh.triangles().iter().enumerate() {
        if let Some(&v) = t.vertices.iter().find(|&&v| v >= n) {
            out.push(Violation::IndexOutOfRange { triangle: ti, vertex: v });
            continue;
        }
        let [a, b, c] = t.vertices;
        if a == b || b == c || a == c {
            out.push(Violation::RepeatedVertex { triangle: ti });
            continue;
        }
        let area = signed_area(mesh.triangle_points(ti));
        if !(area > 0.0) {
            out.push(Violation::InvertedElement { triangle: ti, signed_area: area });
        }
        for e in [[a, b], [b, c], [c, a]] {
            edges.entry(sorted_pair(e)).or_default().push((ti, e));
        }
    }

    let mut marked: BTreeMap<[usize; 2], Marker> = BTreeMap::new();
    for e in mesh.boundary_edges() {
        let key = sorted_pair(e.vertices);
        if marked.insert(key, e.marker).is_some() {
            out.push(Violation::DuplicateMarkedEdge { edge: e.vertices });
        }
    }

    for (key, users) in &edges {
        match users.len() {
            1 => {
                if marked.get(key) != Some(&Marker::Outer) {
                    out.push(Violation::UnmarkedBoundaryEdge { edge: *key });
                }
            }
            2 => {
                if users[0].1 == users[1].1 {
                    out.push(Violation::InconsistentOrientation { edge: *key });
                }
            }
            k => out.push(Violation::NonManifoldEdge { edge: *key, triangles: k }),
        }
    }

    for (key, marker) in &marked {
        let Some(users) = edges.get(key) else {
            out.push(Violation::MarkedEdgeMissing { edge: *key, marker: *marker });
            continue;
        };
        let regions: Vec<Region> = users.iter().map(|(t, _)| mesh.triangles()[*t].region).collect();
        match marker {
            Marker::Inner => {
                let ok = regions.len() == 2 && regions.contains(&Region::In) && regions.contains(&Region::Out);
                if !ok {
                    out.push(Violation::InnerEdgeRegions { edge: *key });
                }
            }
            Marker::Outer => {
                if regions.len() != 1 {
                    out.push(Violation::OuterEdgeNotOnBoundary { edge: *key });
                } else if regions[0] != Region::Out {
                    out.push(Violation::OuterEdgeRegion { edge: *key });
                }
            }
        }
    }

    let inner: Vec<[usize; 2]> = mesh
        .boundary_edges()
        .iter()
        .filter(|e| e.marker == Marker::Inner)
        .map(|e| e.vertices)
        .collect();
    if inner.iter().flatten().any(|&v| v >= n) || chain_cycle(&inner).is_none() {
        out.push(Violation::InterfaceNotClosed);
    } else if let Some(edges) = first_crossing(mesh.vertices(), &inner) {
        out.push(Violation::InterfaceSelfIntersection { edges });
    }
    out
}

/// First pair of non-adjacent segments that intersect.
fn first_crossing(pts: &[Point], segs: &[[usize; 2]]) -> Option<[[usize; 2]; 2]> {
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            let [a, b] = segs[i];
            let [c, d] = segs[j];
            if a == c || a == d || b == c || b == d {
                continue;
            }
            if segments_intersect(pts[a], pts[b], pts[c], pts[d]) {
                return Some([segs[i], segs[j]]);
            }
        }
    }
    None
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    (d1 * d2 <= 0.0) && (d3 * d4 <= 0.0) && !(d1 == 0.0 && d2 == 0.0 && d3 == 0.0 && d4 == 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::VectorField;
    use crate::mesh::{generate_circle_in_box, CircleInBox, Triangle};

    fn mesh() -> TriMesh {
        generate_circle_in_box(&CircleInBox { resolution: 5, ..CircleInBox::default() }).unwrap()
    }

    #[test]
    fn generator_output_is_valid() {
        assert!(validate_mesh(&mesh()).is_empty());
    }

    #[test]
    fn swapped_indices_reported_as_orientation() {
        let m = mesh();
        let mut tris = m.triangles().to_vec();
        tris[7].vertices.swap(0, 1);
        let bad = TriMesh::new(m.vertices().to_vec(), tris, m.boundary_edges().to_vec());
        let v = validate_mesh(&bad);
        assert!(v.contains(&Violation::InvertedElement {
            triangle: 7,
            signed_area: signed_area(bad.triangle_points(7)),
        }));
        assert!(v.iter().any(|x| x.invariant() == "orientation"));
    }

    #[test]
    fn fold_across_opposite_edge_reported() {
        let m = mesh();
        // push vertex a of an interior IN triangle through the opposite edge bc
        let t = m.triangles().iter().position(|t| t.region == Region::In).unwrap();
        let Triangle { vertices: [a, b, c], .. } = m.triangles()[t];
        let [pa, pb, pc] = [m.vertices()[a], m.vertices()[b], m.vertices()[c]];
        let mid = [(pb[0] + pc[0]) / 2.0, (pb[1] + pc[1]) / 2.0];
        let target = [2.0 * mid[0] - pa[0], 2.0 * mid[1] - pa[1]];
        let field = VectorField::from_fn(m.num_vertices(), |i| {
            if i == a {
                [target[0] - pa[0], target[1] - pa[1]]
            } else {
                [0.0, 0.0]
            }
        });
        let folded = m.displace(&field, 1.0);
        let v = validate_mesh(&folded);
        assert!(v.iter().any(|x| matches!(x, Violation::InvertedElement { triangle, .. } if *triangle == t)));
    }

    #[test]
    fn missing_marker_and_broken_interface() {
        let m = mesh();
        let boundary: Vec<_> = m.boundary_edges().iter().copied().skip(1).collect();
        let bad = TriMesh::new(m.vertices().to_vec(), m.triangles().to_vec(), boundary);
        let v = validate_mesh(&bad);
        assert!(!v.is_empty());
    }

    #[test]
    fn crossing_detection() {
        assert!(segments_intersect([0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]));
        assert!(!segments_intersect([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]));
    }
}
