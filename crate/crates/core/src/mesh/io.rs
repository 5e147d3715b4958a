//! Plain-text mesh format.
//!
//! ```text
//! afem-mesh v1
//! <nv>
//! x y            (nv lines)
//! <nt>
//! a b c e        (nt lines, e = local index of the refinement edge)
//! <nb>
//! v0 v1 label    (nb lines, label = dirichlet | neumann | robin)
//! ```
//!
//! Blank lines and text after `#` are ignored. Coordinates are written with
//! shortest round-trip precision.

use super::{BoundaryLabel, Mesh, Point};
use crate::error::MeshError;
use std::fmt::Write as _;

const HEADER: &str = "afem-mesh v1";

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "{}", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?}", p[0], p[1]);
    }
    let _ = writeln!(s, "{}", mesh.num_triangles());
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {} 0", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "{}", mesh.boundary_facets().len());
    for f in mesh.boundary_facets() {
        let _ = writeln!(s, "{} {} {}", f.vertices[0], f.vertices[1], f.label.as_str());
    }
    s
}

/// Parses a mesh; the result is a new initial mesh with the stored
/// refinement edges.
pub fn read_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let err = |line: usize, msg: &str| MeshError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut next = |what: &str| lines.next().ok_or_else(|| err(0, &format!("unexpected end of input, expected {what}")));
    let (line, header) = next("header")?;
    if header != HEADER {
        return Err(err(line, "expected `afem-mesh v1` header"));
    }
    let count = |(line, l): (usize, &str)| -> Result<usize, MeshError> {
        l.parse().map_err(|_| err(line, "expected a count"))
    };
    let nv = count(next("vertex count")?)?;
    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = next("vertex")?;
        let xs: Vec<f64> = l
            .split_whitespace()
            .map(|x| x.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| err(line, "expected two coordinates"))?;
        if xs.len() != 2 || !xs.iter().all(|x| x.is_finite()) {
            return Err(err(line, "expected two finite coordinates"));
        }
        vertices.push([xs[0], xs[1]]);
    }
    let nt = count(next("triangle count")?)?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, l) = next("triangle")?;
        let xs: Vec<u32> = l
            .split_whitespace()
            .map(|x| x.parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| err(line, "expected four non-negative integers"))?;
        if xs.len() != 4 {
            return Err(err(line, "expected `a b c e`"));
        }
        triangles.push(([xs[0], xs[1], xs[2]], xs[3].min(255) as u8));
    }
    let nb = count(next("boundary facet count")?)?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (line, l) = next("boundary facet")?;
        let xs: Vec<&str> = l.split_whitespace().collect();
        if xs.len() != 3 {
            return Err(err(line, "expected `v0 v1 label`"));
        }
        let a = xs[0].parse().map_err(|_| err(line, "bad vertex index"))?;
        let b = xs[1].parse().map_err(|_| err(line, "bad vertex index"))?;
        let label: BoundaryLabel = xs[2].parse().map_err(|e: String| err(line, &e))?;
        boundary.push((a, b, label));
    }
    if let Some((line, _)) = lines.next() {
        return Err(err(line, "trailing content"));
    }
    Mesh::with_refinement_edges(vertices, triangles, boundary)
}

#[cfg(test)]
mod tests {
    use super::super::{lshape, ElementSet};
    use super::*;

    #[test]
    fn round_trip_preserves_geometry_and_refinement_edges() {
        let m = lshape()
            .uniform_refine()
            .refine(&ElementSet::from_iter([0, 5, 9]))
            .unwrap();
        let text = write_mesh(&m);
        let r = read_mesh(&text).unwrap();
        assert_eq!(r.vertices(), m.vertices());
        assert_eq!(r.triangles(), m.triangles());
        assert_eq!(r.boundary_facets(), m.boundary_facets());
        assert_eq!(r.id(), m.id());
        assert_eq!(write_mesh(&r), text);
    }

    #[test]
    fn parse_errors_report_line_numbers() {
        let e = read_mesh("afem-mesh v1\n3\n0 0\n1 0\n0 x\n").unwrap_err();
        assert_eq!(e, MeshError::Parse { line: 5, msg: "expected two coordinates".into() });
        assert!(matches!(read_mesh("nope"), Err(MeshError::Parse { line: 1, .. })));
    }
}
