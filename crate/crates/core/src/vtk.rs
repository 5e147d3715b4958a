//! Legacy ASCII VTK output of triangulations with point and cell data.

use crate::mesh::Mesh;
use std::io::{self, Write};

pub fn write_vtk<W: Write>(
    out: &mut W,
    mesh: &Mesh,
    title: &str,
    point_data: &[(&str, &[f64])],
    cell_data: &[(&str, &[f64])],
) -> io::Result<()> {
    let nv = mesh.num_vertices();
    let nt = mesh.num_triangles();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.replace('\n', " "))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {nv} double")?;
    for p in mesh.vertices() {
        writeln!(out, "{:?} {:?} 0", p[0], p[1])?;
    }
    writeln!(out, "CELLS {nt} {}", 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "5")?;
    }
    write_fields(out, "POINT_DATA", nv, point_data)?;
    write_fields(out, "CELL_DATA", nt, cell_data)
}

fn write_fields<W: Write>(out: &mut W, section: &str, n: usize, fields: &[(&str, &[f64])]) -> io::Result<()> {
    if fields.is_empty() {
        return Ok(());
    }
    writeln!(out, "{section} {n}")?;
    for (name, values) in fields {
        if values.len() != n {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("field `{name}` has {} values, expected {n}", values.len()),
            ));
        }
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in *values {
            writeln!(out, "{v:?}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square;

    #[test]
    fn square_file_layout() {
        let m = unit_square();
        let mut buf = Vec::new();
        write_vtk(&mut buf, &m, "sq", &[("u", &[0.0, 1.0, 2.0, 3.0])], &[("eta", &[0.5, 0.25])]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[4], "POINTS 4 double");
        assert_eq!(lines[5], "0.0 0.0 0");
        assert_eq!(lines[9], "CELLS 2 8");
        let t = m.triangles()[0];
        assert_eq!(lines[10], format!("3 {} {} {}", t[0], t[1], t[2]));
        assert!(text.contains("POINT_DATA 4\nSCALARS u double 1\nLOOKUP_TABLE default\n0.0\n1.0"));
        assert!(text.ends_with("CELL_DATA 2\nSCALARS eta double 1\nLOOKUP_TABLE default\n0.5\n0.25\n"));
        assert!(write_vtk(&mut Vec::new(), &m, "sq", &[("u", &[0.0])], &[]).is_err());
    }
}
