//! Plain-text mesh format, one record per line:
//!
//! ```text
//! nodes: <id> <x> <y> [<z>]
//! cells: <id> <v1> <v2> <v3> [<v4>]
//! bfacets: <id> <v1> <v2> [<v3>] <patch_tag>
//! ```
//!
//! A bare `nodes:` / `cells:` / `bfacets:` line opens a section whose
//! following lines omit the prefix. `#` starts a comment.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::mesh::{BoundaryFacet, Mesh};

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let d = mesh.dim;
    let _ = writeln!(s, "# simplicial mesh, dimension {d}");
    for (i, p) in mesh.nodes.iter().enumerate() {
        if d == 2 {
            let _ = writeln!(s, "nodes: {i} {:.17e} {:.17e}", p[0], p[1]);
        } else {
            let _ = writeln!(s, "nodes: {i} {:.17e} {:.17e} {:.17e}", p[0], p[1], p[2]);
        }
    }
    for (i, c) in mesh.cells.iter().enumerate() {
        let vs: Vec<String> = c[..=d].iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "cells: {i} {}", vs.join(" "));
    }
    for (i, f) in mesh.bfacets.iter().enumerate() {
        let vs: Vec<String> = f.verts[..d].iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "bfacets: {i} {} {}", vs.join(" "), f.tag);
    }
    s
}

pub fn read_mesh(text: &str, source_name: &str) -> Result<Mesh> {
    #[derive(Clone, Copy, PartialEq)]
    enum Sec {
        None,
        Nodes,
        Cells,
        Facets,
    }
    let perr = |line: usize, detail: String| Error::Parse { source_name: source_name.to_string(), line, detail };
    let mut sec = Sec::None;
    let mut nodes: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut cells: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut facets: Vec<(usize, Vec<usize>)> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut rest = line;
        for (key, s) in [("nodes:", Sec::Nodes), ("cells:", Sec::Cells), ("bfacets:", Sec::Facets)] {
            if let Some(r) = line.strip_prefix(key) {
                sec = s;
                rest = r.trim();
                break;
            }
        }
        if rest.is_empty() {
            continue;
        }
        let toks: Vec<&str> = rest.split_whitespace().collect();
        let id: usize = toks[0].parse().map_err(|_| perr(line_no, format!("bad record id '{}'", toks[0])))?;
        match sec {
            Sec::None => return Err(perr(line_no, "record outside of any section".into())),
            Sec::Nodes => {
                let xs: std::result::Result<Vec<f64>, _> = toks[1..].iter().map(|t| t.parse::<f64>()).collect();
                let xs = xs.map_err(|_| perr(line_no, "bad coordinate".into()))?;
                if xs.len() != 2 && xs.len() != 3 {
                    return Err(perr(line_no, "a node needs 2 or 3 coordinates".into()));
                }
                nodes.push((id, xs));
            }
            Sec::Cells | Sec::Facets => {
                let vs: std::result::Result<Vec<usize>, _> = toks[1..].iter().map(|t| t.parse::<usize>()).collect();
                let vs = vs.map_err(|_| perr(line_no, "bad vertex index".into()))?;
                if sec == Sec::Cells {
                    cells.push((id, vs));
                } else {
                    facets.push((id, vs));
                }
            }
        }
    }
    if nodes.is_empty() || cells.is_empty() {
        return Err(perr(0, "mesh needs nodes and cells".into()));
    }
    let dim = nodes[0].1.len();
    if nodes.iter().any(|(_, x)| x.len() != dim) {
        return Err(perr(0, "mixed node dimensions".into()));
    }
    nodes.sort_by_key(|n| n.0);
    if nodes.iter().enumerate().any(|(k, n)| n.0 != k) {
        return Err(perr(0, "node ids must be 0..n-1".into()));
    }
    let pts = nodes
        .iter()
        .map(|(_, x)| [x[0], x[1], if dim == 3 { x[2] } else { 0.0 }])
        .collect();
    cells.sort_by_key(|c| c.0);
    let mut cs = Vec::with_capacity(cells.len());
    for (id, v) in &cells {
        if v.len() != dim + 1 {
            return Err(perr(0, format!("cell {id} must have {} vertices", dim + 1)));
        }
        let mut c = [usize::MAX; 4];
        c[..=dim].copy_from_slice(v);
        cs.push(c);
    }
    let mut fs = Vec::with_capacity(facets.len());
    for (id, v) in &facets {
        if v.len() != dim + 1 {
            return Err(perr(0, format!("facet {id} must have {dim} vertices and a tag")));
        }
        let mut verts = [usize::MAX; 3];
        verts[..dim].copy_from_slice(&v[..dim]);
        fs.push(BoundaryFacet { verts, tag: v[dim] as u32 });
    }
    Mesh::from_parts(dim, pts, cs, fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;

    #[test]
    fn round_trip_preserves_mesh() {
        let m = Shape::Disk.mesh(0.25).unwrap();
        let back = read_mesh(&write_mesh(&m), "mem").unwrap();
        assert_eq!(back.cells, m.cells);
        assert_eq!(back.boundary_nodes, m.boundary_nodes);
        for (a, b) in back.nodes.iter().zip(&m.nodes) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn section_style_is_accepted() {
        let txt = "nodes:\n0 0 0\n1 1 0\n2 0 1\ncells:\n0 0 1 2\n";
        let m = read_mesh(txt, "mem").unwrap();
        assert_eq!(m.bfacets.len(), 3);
    }

    #[test]
    fn bad_lines_are_reported_with_position() {
        let err = read_mesh("nodes: 0 1 x\n", "file.msh").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            e => panic!("unexpected {e}"),
        }
    }
}
