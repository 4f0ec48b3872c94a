//! Plain-text mesh format.
//!
//! ```text
//! RMMESH 1
//! NODES n
//! x1 x2            (n lines)
//! TRIANGLES m
//! i j k E|D        (m lines)
//! BEDGES p
//! i j O|D          (p lines)
//! ```

use std::fmt::Write as _;

use super::{BoundaryEdge, BoundaryTag, Mesh, Point2, Region};
use crate::error::{Error, Result};

pub fn export_mesh(mesh: &Mesh) -> String {
    let mut s = String::from("RMMESH 1\n");
    let _ = writeln!(s, "NODES {}", mesh.n_nodes());
    for p in mesh.nodes() {
        let _ = writeln!(s, "{:?} {:?}", p.x, p.y);
    }
    let _ = writeln!(s, "TRIANGLES {}", mesh.n_triangles());
    for (t, r) in mesh.triangles().iter().zip(mesh.regions()) {
        let tag = match r {
            Region::Exterior => 'E',
            Region::Defect => 'D',
        };
        let _ = writeln!(s, "{} {} {} {tag}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "BEDGES {}", mesh.boundary_edges().len());
    for e in mesh.boundary_edges() {
        let tag = match e.tag {
            BoundaryTag::Outer => 'O',
            BoundaryTag::Defect => 'D',
        };
        let _ = writeln!(s, "{} {} {tag}", e.nodes[0], e.nodes[1]);
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_fields(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !fields.is_empty() {
                return Ok((i + 1, fields));
            }
        }
        Err(Error::MalformedMesh { line: self.last + 1, msg: "unexpected end of file".into() })
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let (line, f) = self.next_fields()?;
        match f.as_slice() {
            [key, n] if *key == name => n
                .parse()
                .map_err(|_| Error::MalformedMesh { line, msg: format!("bad {name} count '{n}'") }),
            _ => Err(Error::MalformedMesh { line, msg: format!("expected '{name} <count>'") }),
        }
    }
}

fn parse<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::MalformedMesh { line, msg: format!("cannot parse '{s}'") })
}

pub fn import_mesh(text: &str) -> Result<Mesh> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let (line, header) = lines.next_fields()?;
    if header != ["RMMESH", "1"] {
        return Err(Error::MalformedMesh { line, msg: "expected header 'RMMESH 1'".into() });
    }

    let n = lines.section("NODES")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, f) = lines.next_fields()?;
        if f.len() != 2 {
            return Err(Error::MalformedMesh { line, msg: "node line needs 2 coordinates".into() });
        }
        nodes.push(Point2::new(parse(f[0], line)?, parse(f[1], line)?));
    }

    let m = lines.section("TRIANGLES")?;
    let mut triangles = Vec::with_capacity(m);
    let mut regions = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, f) = lines.next_fields()?;
        if f.len() != 4 {
            return Err(Error::MalformedMesh { line, msg: "triangle line needs 3 indices and a region".into() });
        }
        triangles.push([parse(f[0], line)?, parse(f[1], line)?, parse(f[2], line)?]);
        regions.push(match f[3] {
            "E" => Region::Exterior,
            "D" => Region::Defect,
            r => return Err(Error::MalformedMesh { line, msg: format!("unknown region '{r}'") }),
        });
    }

    let p = lines.section("BEDGES")?;
    let mut edges = Vec::with_capacity(p);
    for _ in 0..p {
        let (line, f) = lines.next_fields()?;
        if f.len() != 3 {
            return Err(Error::MalformedMesh { line, msg: "edge line needs 2 indices and a tag".into() });
        }
        let tag = match f[2] {
            "O" => BoundaryTag::Outer,
            "D" => BoundaryTag::Defect,
            t => return Err(Error::MalformedMesh { line, msg: format!("unknown boundary tag '{t}'") }),
        };
        edges.push(BoundaryEdge { nodes: [parse(f[0], line)?, parse(f[1], line)?], tag });
    }
    if let Ok((line, _)) = lines.next_fields() {
        return Err(Error::MalformedMesh { line, msg: "trailing content".into() });
    }
    Mesh::new(nodes, triangles, regions, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_plate_mesh, DefectShape, DomainSpec};

    #[test]
    fn round_trip_square_with_hole() {
        let hole = DefectShape::Rectangle { center: Point2::new(0.5, 0.5), a: 0.2, b: 0.2 };
        let m = build_plate_mesh(&DomainSpec::unit_square(), Some(&hole), 0.1).unwrap();
        let back = import_mesh(&export_mesh(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn round_trip_keeps_irrational_coordinates() {
        let m = build_plate_mesh(&DomainSpec::disc(1.0), None, 0.2).unwrap();
        assert_eq!(import_mesh(&export_mesh(&m)).unwrap(), m);
    }

    #[test]
    fn rejects_negative_area() {
        let text = "RMMESH 1\nNODES 3\n0 0\n1 0\n0 1\nTRIANGLES 1\n0 2 1 E\nBEDGES 3\n0 1 O\n1 2 O\n2 0 O\n";
        let err = import_mesh(text).unwrap_err();
        assert!(err.to_string().contains("degenerate triangle"), "{err}");
    }

    #[test]
    fn rejects_open_defect_polyline() {
        let hole = DefectShape::Rectangle { center: Point2::new(0.5, 0.5), a: 0.5, b: 0.5 };
        let m = build_plate_mesh(&DomainSpec::unit_square(), Some(&hole), 0.25).unwrap();
        let text = export_mesh(&m);
        let mut out = Vec::new();
        let mut dropped = false;
        let mut count = 0;
        for l in text.lines() {
            if !dropped && l.ends_with(" D") && l.split_whitespace().count() == 3 {
                dropped = true;
                continue;
            }
            if l.starts_with("BEDGES") {
                count = l[7..].parse::<usize>().unwrap();
                out.push(format!("BEDGES {}", count - 1));
                continue;
            }
            out.push(l.to_string());
        }
        assert!(dropped && count > 0);
        let err = import_mesh(&out.join("\n")).unwrap_err();
        assert!(err.to_string().contains("boundary not closed"), "{err}");
    }

    #[test]
    fn malformed_text_reports_line() {
        let err = import_mesh("RMMESH 1\nNODES 2\n0 0\nx 1\n").unwrap_err();
        assert!(matches!(err, Error::MalformedMesh { line: 4, .. }), "{err}");
    }
}
