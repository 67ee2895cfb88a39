//! Deterministic circle-in-box triangulation.
//!
//! The disk is a Delaunay triangulation of the circle points, a staggered
//! ring just inside it, and a hexagonal lattice of the same spacing, relaxed by edge flips and Laplacian smoothing
//! of the lattice points. The region between the circle and the square is an O-grid:
//! each circle point is blended toward a matching point on the square, with
//! geometrically growing layer spacing so elements are finest at the interface.

use std::collections::HashMap;
use std::f64::consts::PI;

use spade::{DelaunayTriangulation, Point2, Triangulation};

use super::{triangle_quality, BoundaryEdge, Marker, Point, Region, TriMesh, Triangle};
use crate::error::{Error, Result};

/// Gap between the disk lattice and the circle, in lattice spacings.
const LATTICE_CLEARANCE: f64 = 0.6;
/// Ratio of radial to tangential spacing in the outer O-grid.
const RADIAL_ASPECT: f64 = 0.866_025_403_784_438_6;
/// Rounds of edge flipping and smoothing of the disk interior.
const SMOOTHING_ROUNDS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct CircleInBox {
    pub radius: f64,
    pub center: Point,
    /// The box is `[-h, h]^2`.
    pub box_half_width: f64,
    /// Circle points are `8 * resolution`.
    pub resolution: usize,
}

impl Default for CircleInBox {
    fn default() -> Self {
        Self { radius: 1.0, center: [0.0, 0.0], box_half_width: 3.0, resolution: 13 }
    }
}

impl CircleInBox {
    fn check(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::invalid("radius", "must be positive"));
        }
        if !(self.box_half_width > 0.0) || !self.box_half_width.is_finite() {
            return Err(Error::invalid("box_half_width", "must be positive"));
        }
        if self.radius >= self.box_half_width {
            return Err(Error::invalid("radius", "must be smaller than the box half width"));
        }
        let reach = self.center[0].abs().max(self.center[1].abs()) + self.radius;
        if !(reach < self.box_half_width) {
            return Err(Error::invalid("center", "circle must lie strictly inside the box"));
        }
        if self.resolution < 4 {
            return Err(Error::invalid("resolution", "must be at least 4"));
        }
        Ok(())
    }

    fn circle_points(&self) -> usize {
        8 * self.resolution
    }

    fn spacing(&self) -> f64 {
        2.0 * PI * self.radius / self.circle_points() as f64
    }

    fn layer_count(&self) -> usize {
        let ratio = self.box_half_width / self.radius;
        let growth = 1.0 + RADIAL_ASPECT * 2.0 * PI / self.circle_points() as f64;
        ((ratio.ln() / growth.ln()).round() as usize).max(1)
    }
}

pub fn generate_circle_in_box(params: &CircleInBox) -> Result<TriMesh> {
    params.check()?;
    let n = params.circle_points();
    let radius = params.radius;

    // Disk: Delaunay triangulation of the circle points and a hexagonal
    // lattice kept clear of the circle.
    let mut vertices = disk_lattice(params);
    let circle: Vec<usize> = (0..n).map(|i| vertices.len() + i).collect();
    vertices.extend((0..n).map(|i| circle_point(params, i as f64)));
    let mut triangles = delaunay(&vertices)?;
    let disk_vertices = vertices.len();
    let disk_triangles = triangles.len();

    // O-grid between the circle and the square.
    let layers = params.layer_count();
    let ratio = params.box_half_width / radius;
    let growth = ratio.powf(1.0 / layers as f64);
    let mut layer_ids = vec![circle.clone()];
    for j in 1..=layers {
        let blend = if j == layers { 1.0 } else { (growth.powi(j as i32) - 1.0) / (ratio - 1.0) };
        let shift = layer_shift(j, layers);
        let ids = (0..n)
            .map(|i| {
                let c = circle_point(params, i as f64 + shift);
                let s = square_point(params.box_half_width, i as f64 + shift, n);
                let id = vertices.len();
                vertices.push(if j == layers {
                    s
                } else {
                    [c[0] + blend * (s[0] - c[0]), c[1] + blend * (s[1] - c[1])]
                });
                id
            })
            .collect();
        layer_ids.push(ids);
    }
    for j in 0..layers {
        let (lo, hi) = (&layer_ids[j], &layer_ids[j + 1]);
        let staggered = (layer_shift(j, layers), layer_shift(j + 1, layers));
        for i in 0..n {
            let i1 = (i + 1) % n;
            if staggered.0 == staggered.1 {
                triangles.extend(split_quad(&vertices, [lo[i], lo[i1], hi[i1], hi[i]]));
            } else if staggered.1 > 0.0 {
                triangles.extend([[lo[i], lo[i1], hi[i]], [hi[i], lo[i1], hi[i1]]]);
            } else {
                triangles.extend([[lo[i], hi[i1], hi[i]], [lo[i], lo[i1], hi[i1]]]);
            }
        }
    }

    let mut triangles: Vec<Triangle> = triangles
        .into_iter()
        .enumerate()
        .map(|(idx, mut v)| {
            if super::signed_area([vertices[v[0]], vertices[v[1]], vertices[v[2]]]) < 0.0 {
                v.swap(1, 2);
            }
            let region = if idx < disk_triangles { Region::In } else { Region::Out };
            Triangle { vertices: v, region }
        })
        .collect();

    let mut pinned: Vec<bool> = (0..vertices.len()).map(|v| v >= disk_vertices).collect();
    for &v in &circle {
        pinned[v] = true;
    }
    for _ in 0..SMOOTHING_ROUNDS {
        flip_edges(&vertices, &mut triangles);
        smooth(&mut vertices, &triangles, &pinned);
    }
    flip_edges(&vertices, &mut triangles);

    let mut boundary = Vec::with_capacity(2 * n);
    for i in 0..n {
        boundary.push(BoundaryEdge { vertices: [circle[i], circle[(i + 1) % n]], marker: Marker::Inner });
    }
    let outer = &layer_ids[layers];
    for i in 0..n {
        boundary.push(BoundaryEdge { vertices: [outer[i], outer[(i + 1) % n]], marker: Marker::Outer });
    }
    Ok(TriMesh::new(vertices, triangles, boundary))
}

/// Vertex count the generator would produce, without building the mesh.
pub fn circle_in_box_vertex_count(params: &CircleInBox) -> Result<usize> {
    params.check()?;
    let n = params.circle_points();
    let disk = disk_lattice(params).len() + n;
    Ok(disk + n * params.layer_count())
}

/// Odd O-grid layers sit half a spacing off the circle points, so that
/// neighbouring layers form near-equilateral triangles. The circle and the
/// square are never shifted.
fn layer_shift(j: usize, layers: usize) -> f64 {
    if j % 2 == 1 && j < layers {
        0.5
    } else {
        0.0
    }
}

fn circle_point(params: &CircleInBox, i: f64) -> Point {
    let angle = 2.0 * PI * i / params.circle_points() as f64;
    [params.center[0] + params.radius * angle.cos(), params.center[1] + params.radius * angle.sin()]
}

/// Point at perimeter fraction `i / n` on the square, counter-clockwise from `(h, 0)`.
fn square_point(h: f64, i: f64, n: usize) -> Point {
    // n is a multiple of 8, so corners land on indices n/8, 3n/8, ...
    let s = 8.0 * h * i / n as f64;
    let side = 2.0 * h;
    if s <= h {
        [h, s]
    } else if s <= h + side {
        [h - (s - h), h]
    } else if s <= h + 2.0 * side {
        [-h, h - (s - h - side)]
    } else if s <= h + 3.0 * side {
        [-h + (s - h - 2.0 * side), -h]
    } else {
        [h, -h + (s - h - 3.0 * side)]
    }
}

/// Interior disk points: one ring a lattice row inside the circle, staggered
/// by half a spacing, then a hexagonal lattice with the circle spacing kept
/// `LATTICE_CLEARANCE` spacings inside that ring.
fn disk_lattice(params: &CircleInBox) -> Vec<Point> {
    let h = params.spacing();
    let row = h * 3f64.sqrt() / 2.0;
    let n = params.circle_points();
    let ring_radius = params.radius - row;
    let mut points: Vec<Point> = (0..n)
        .map(|i| {
            let angle = 2.0 * PI * (i as f64 + 0.5) / n as f64;
            [params.center[0] + ring_radius * angle.cos(), params.center[1] + ring_radius * angle.sin()]
        })
        .collect();
    let limit = ring_radius - LATTICE_CLEARANCE * h;
    let rows = (limit / row).floor() as i64;
    let cols = (limit / h).floor() as i64 + 1;
    for j in -rows..=rows {
        let shift = if j.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        for i in -cols..=cols {
            let (x, y) = (i as f64 * h + shift, j as f64 * row);
            if x.hypot(y) < limit {
                points.push([params.center[0] + x, params.center[1] + y]);
            }
        }
    }
    points
}

/// Delaunay triangles of a point set whose hull is the disk boundary.
fn delaunay(points: &[Point]) -> Result<Vec<[usize; 3]>> {
    let mut dt: DelaunayTriangulation<Point2<f64>> = DelaunayTriangulation::new();
    for (k, p) in points.iter().enumerate() {
        let handle = dt
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::InvalidMesh(format!("disk triangulation: {e:?}")))?;
        if handle.index() != k {
            return Err(Error::InvalidMesh("disk triangulation merged coincident points".into()));
        }
    }
    Ok(dt.inner_faces().map(|f| f.vertices().map(|v| v.fix().index())).collect())
}

/// Splits a quad along the diagonal that gives the better worst triangle.
fn split_quad(vertices: &[Point], [a, b, c, d]: [usize; 4]) -> [[usize; 3]; 2] {
    let q = |t: [usize; 3]| triangle_quality(t.map(|v| vertices[v]));
    let first = [[a, b, c], [a, c, d]];
    let second = [[a, b, d], [b, c, d]];
    let worst = |pair: &[[usize; 3]; 2]| q(pair[0]).min(q(pair[1]));
    if worst(&first) >= worst(&second) {
        first
    } else {
        second
    }
}

/// Flips interior edges between same-region triangles whenever that raises
/// the worse quality of the pair, until no flip helps.
fn flip_edges(vertices: &[Point], triangles: &mut [Triangle]) {
    let q = |t: [usize; 3]| triangle_quality(t.map(|v| vertices[v]));
    for _ in 0..50 {
        let mut edges: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri.vertices[k], tri.vertices[(k + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        let mut keys: Vec<_> = edges.keys().copied().collect();
        keys.sort_unstable();
        let mut touched = vec![false; triangles.len()];
        let mut flipped = 0;
        for key in keys {
            let ts = &edges[&key];
            let [t1, t2] = match ts.as_slice() {
                &[x, y] => [x, y],
                _ => continue,
            };
            if touched[t1] || touched[t2] || triangles[t1].region != triangles[t2].region {
                continue;
            }
            // rotate t1 to (a, b, c) with a->b the shared edge
            let v1 = triangles[t1].vertices;
            let k = (0..3).find(|&k| {
                let (x, y) = (v1[k], v1[(k + 1) % 3]);
                (x.min(y), x.max(y)) == key
            });
            let Some(k) = k else { continue };
            let (a, b, c) = (v1[k], v1[(k + 1) % 3], v1[(k + 2) % 3]);
            let Some(&d) = triangles[t2].vertices.iter().find(|&&v| v != a && v != b) else { continue };
            let n1 = [a, d, c];
            let n2 = [d, b, c];
            let area = |t: [usize; 3]| super::signed_area(t.map(|v| vertices[v]));
            if area(n1) <= 0.0 || area(n2) <= 0.0 {
                continue;
            }
            let before = q(v1).min(q(triangles[t2].vertices));
            let after = q(n1).min(q(n2));
            if after > before + 1e-9 {
                triangles[t1].vertices = n1;
                triangles[t2].vertices = n2;
                touched[t1] = true;
                touched[t2] = true;
                flipped += 1;
            }
        }
        if flipped == 0 {
            break;
        }
    }
}

/// Moves each unpinned vertex toward the mean of its neighbours when that
/// raises the worst quality among its triangles.
fn smooth(vertices: &mut [Point], triangles: &[Triangle], pinned: &[bool]) {
    let mut neighbours = vec![Vec::new(); vertices.len()];
    let mut incident = vec![Vec::new(); vertices.len()];
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri.vertices[k], tri.vertices[(k + 1) % 3]);
            neighbours[a].push(b);
            neighbours[b].push(a);
            incident[a].push(t);
        }
    }
    for v in 0..vertices.len() {
        if pinned[v] {
            continue;
        }
        let nb = &mut neighbours[v];
        nb.sort_unstable();
        nb.dedup();
        let mean = nb.iter().fold([0.0, 0.0], |m, &u| [m[0] + vertices[u][0], m[1] + vertices[u][1]]);
        let target = [mean[0] / nb.len() as f64, mean[1] / nb.len() as f64];
        let worst = |vertices: &[Point]| {
            incident[v].iter().fold(f64::INFINITY, |m, &t| {
                let pts = triangles[t].vertices.map(|u| vertices[u]);
                if super::signed_area(pts) > 0.0 {
                    m.min(triangle_quality(pts))
                } else {
                    f64::NEG_INFINITY
                }
            })
        };
        let old = vertices[v];
        let before = worst(vertices);
        // try the full Laplacian move, then shorter ones
        for fraction in [1.0, 0.5, 0.25] {
            vertices[v] = [old[0] + fraction * (target[0] - old[0]), old[1] + fraction * (target[1] - old[1])];
            if worst(vertices) > before {
                break;
            }
            vertices[v] = old;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{mesh_quality, validate_mesh, winding_number};

    #[test]
    fn minimum_resolution_is_valid() {
        let mesh = generate_circle_in_box(&CircleInBox { resolution: 4, ..Default::default() }).unwrap();
        assert!(validate_mesh(&mesh).is_empty(), "{:?}", validate_mesh(&mesh));
        assert!(mesh_quality(&mesh).min_quality >= 0.3);
    }

    #[test]
    fn interface_on_circle_and_wound_once() {
        let params = CircleInBox { radius: 0.8, center: [0.3, -0.2], resolution: 6, ..Default::default() };
        let mesh = generate_circle_in_box(&params).unwrap();
        assert!(validate_mesh(&mesh).is_empty());
        let loop_ids = mesh.inner_polyline().unwrap();
        for &v in &loop_ids {
            let p = mesh.vertices()[v];
            let r = (p[0] - 0.3).hypot(p[1] + 0.2);
            assert!((r - 0.8).abs() <= 1e-12 * 0.8);
        }
        let polygon: Vec<Point> = loop_ids.iter().map(|&v| mesh.vertices()[v]).collect();
        assert_eq!(winding_number(&polygon, [0.3, -0.2]).abs(), 1);
    }

    #[test]
    fn regions_tile_disk_and_complement() {
        let mesh = generate_circle_in_box(&CircleInBox { resolution: 8, ..Default::default() }).unwrap();
        let inner = mesh.region_area(super::super::RegionFilter::In);
        let total = mesh.region_area(super::super::RegionFilter::All);
        let n = 64.0;
        let polygon_area = 0.5 * n * (2.0 * PI / n).sin();
        assert!((inner - polygon_area).abs() < 1e-12);
        assert!((total - 36.0).abs() < 1e-10);
    }

    #[test]
    fn vertex_count_monotone_and_predicted() {
        let mut last = 0;
        for resolution in 4..=20 {
            let params = CircleInBox { resolution, ..Default::default() };
            let mesh = generate_circle_in_box(&params).unwrap();
            assert_eq!(mesh.num_vertices(), circle_in_box_vertex_count(&params).unwrap());
            assert!(mesh.num_vertices() > last);
            last = mesh.num_vertices();
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = [
            CircleInBox { radius: 3.0, ..Default::default() },
            CircleInBox { radius: 0.0, ..Default::default() },
            CircleInBox { resolution: 3, ..Default::default() },
            CircleInBox { center: [2.5, 0.0], ..Default::default() },
        ];
        for p in bad {
            assert!(generate_circle_in_box(&p).is_err(), "{p:?}");
        }
    }

    #[test]
    fn square_corners_are_vertices() {
        let n = 32;
        assert_eq!(square_point(3.0, 4.0, n), [3.0, 3.0]);
        assert_eq!(square_point(3.0, 12.0, n), [-3.0, 3.0]);
        assert_eq!(square_point(3.0, 20.0, n), [-3.0, -3.0]);
        assert_eq!(square_point(3.0, 28.0, n), [3.0, -3.0]);
    }
}
