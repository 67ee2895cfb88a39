//! Line-oriented text format:
//!
//! ```text
//! trimesh 1
//! vertices N
//! x y            (N lines)
//! triangles M
//! i j k TAG      (M lines, TAG in IN|OUT)
//! boundary K
//! i j MARKER     (K lines, MARKER in INNER|OUTER)
//! ```
//!
//! Indices are 0-based; coordinates carry 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{BoundaryEdge, Marker, Region, TriMesh, Triangle};
use crate::error::{Error, Result};

pub fn write_mesh(mesh: &TriMesh) -> String {
    let mut s = String::new();
    s.push_str("trimesh 1\n");
    let _ = writeln!(s, "vertices {}", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.16e} {:.16e}", p[0], p[1]);
    }
    let _ = writeln!(s, "triangles {}", mesh.num_triangles());
    for t in mesh.triangles() {
        let [a, b, c] = t.vertices;
        let _ = writeln!(s, "{a} {b} {c} {}", t.region);
    }
    let _ = writeln!(s, "boundary {}", mesh.boundary_edges().len());
    for e in mesh.boundary_edges() {
        let [a, b] = e.vertices;
        let _ = writeln!(s, "{a} {b} {}", e.marker);
    }
    s
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    parse_mesh(&fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, field: &'static str) -> Result<(usize, Vec<&'a str>)> {
        match self.inner.next() {
            Some((i, line)) => {
                self.last = i + 1;
                Ok((i + 1, line.split_whitespace().collect()))
            }
            None => Err(Error::Parse { line: self.last + 1, field, message: "unexpected end of file".into() }),
        }
    }

    fn section(&mut self, name: &'static str) -> Result<usize> {
        let (line, words) = self.next(name)?;
        match words.as_slice() {
            [w, n] if *w == name => parse_num(n, line, name),
            _ => Err(Error::Parse { line, field: name, message: format!("expected `{name} <count>`") }),
        }
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize, field: &'static str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| Error::Parse { line, field, message: format!("`{s}`: {e}") })
}

fn parse_index(s: &str, line: usize, field: &'static str, n: usize) -> Result<usize> {
    let i: usize = parse_num(s, line, field)?;
    if i >= n {
        return Err(Error::Parse { line, field, message: format!("index {i} out of range (vertices: {n})") });
    }
    Ok(i)
}

pub fn parse_mesh(text: &str) -> Result<TriMesh> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let (line, header) = lines.next("header")?;
    if header != ["trimesh", "1"] {
        return Err(Error::Parse { line, field: "header", message: "expected `trimesh 1`".into() });
    }

    let nv = lines.section("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, w) = lines.next("vertex")?;
        if w.len() != 2 {
            return Err(Error::Parse { line, field: "vertex", message: "expected `x y`".into() });
        }
        let x: f64 = parse_num(w[0], line, "x coordinate")?;
        let y: f64 = parse_num(w[1], line, "y coordinate")?;
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Parse { line, field: "vertex", message: "non-finite coordinate".into() });
        }
        vertices.push([x, y]);
    }

    let nt = lines.section("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, w) = lines.next("triangle")?;
        if w.len() != 4 {
            return Err(Error::Parse { line, field: "triangle", message: "expected `i j k tag`".into() });
        }
        let mut v = [0; 3];
        for k in 0..3 {
            v[k] = parse_index(w[k], line, "triangle index", nv)?;
        }
        let region = match w[3] {
            "IN" => Region::In,
            "OUT" => Region::Out,
            other => {
                return Err(Error::Parse { line, field: "region tag", message: format!("unknown tag `{other}`") })
            }
        };
        triangles.push(Triangle { vertices: v, region });
    }

    let nb = lines.section("boundary")?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (line, w) = lines.next("boundary edge")?;
        if w.len() != 3 {
            return Err(Error::Parse { line, field: "boundary edge", message: "expected `i j marker`".into() });
        }
        let a = parse_index(w[0], line, "boundary index", nv)?;
        let b = parse_index(w[1], line, "boundary index", nv)?;
        let marker = match w[2] {
            "INNER" => Marker::Inner,
            "OUTER" => Marker::Outer,
            other => {
                return Err(Error::Parse { line, field: "boundary marker", message: format!("unknown marker `{other}`") })
            }
        };
        boundary.push(BoundaryEdge { vertices: [a, b], marker });
    }

    for (i, rest) in lines.inner {
        if !rest.trim().is_empty() {
            return Err(Error::Parse { line: i + 1, field: "trailing data", message: "unexpected content".into() });
        }
    }
    Ok(TriMesh::new(vertices, triangles, boundary))
}
