//! Text mesh formats: the native `tetmesh` format and Gmsh MSH v2 (ASCII).

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::MeshError;
use crate::Vec3;

type RawMesh = (Vec<Vec3>, Vec<[usize; 4]>);

fn parse_err(line: usize, msg: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Content lines with their 1-based line numbers; blank lines and `#` comments skipped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_fields<T: std::str::FromStr>(line: usize, s: &str, n: usize) -> Result<Vec<T>, MeshError> {
    let fields: Vec<&str> = s.split_whitespace().collect();
    if fields.len() != n {
        return Err(parse_err(
            line,
            format!("expected {n} fields, found {}", fields.len()),
        ));
    }
    fields
        .iter()
        .map(|f| {
            f.parse()
                .map_err(|_| parse_err(line, format!("cannot parse `{f}`")))
        })
        .collect()
}

/// Parses `tetmesh <nverts> <ntets>` followed by vertex and 0-based tet lines.
pub fn parse_tetmesh(text: &str) -> Result<RawMesh, MeshError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut head = header.split_whitespace();
    if head.next() != Some("tetmesh") {
        return Err(parse_err(hline, "missing `tetmesh` header"));
    }
    let counts: Vec<usize> = parse_fields(hline, &head.collect::<Vec<_>>().join(" "), 2)?;
    let (nv, nt) = (counts[0], counts[1]);

    let mut positions = Vec::with_capacity(nv);
    for i in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(hline, format!("expected {nv} vertices, found {i}")))?;
        let c: Vec<f64> = parse_fields(ln, l, 3)?;
        if c.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(ln, "non-finite coordinate"));
        }
        positions.push(Vec3::new(c[0], c[1], c[2]));
    }
    let mut tets = Vec::with_capacity(nt);
    for i in 0..nt {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(hline, format!("expected {nt} tets, found {i}")))?;
        let t: Vec<usize> = parse_fields(ln, l, 4)?;
        if let Some(&bad) = t.iter().find(|&&v| v >= nv) {
            return Err(parse_err(ln, format!("vertex index {bad} out of range")));
        }
        tets.push([t[0], t[1], t[2], t[3]]);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing content"));
    }
    Ok((positions, tets))
}

/// Serializes to the `tetmesh` format with round-trip float precision.
pub fn write_tetmesh(positions: &[Vec3], tets: &[[usize; 4]]) -> String {
    let mut out = format!("tetmesh {} {}\n", positions.len(), tets.len());
    for p in positions {
        let _ = writeln!(out, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for t in tets {
        let _ = writeln!(out, "{} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    out
}

/// Parses the `$Nodes` and `$Elements` sections of a Gmsh MSH v2 ASCII file.
/// Only 4-node tetrahedra (element type 4) are kept.
pub fn parse_gmsh(text: &str) -> Result<RawMesh, MeshError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .collect();
    let find = |tag: &str| lines.iter().position(|(_, l)| *l == tag);

    if let Some(i) = find("$MeshFormat") {
        let (ln, l) = lines.get(i + 1).copied().unwrap_or((i + 1, ""));
        if !l.starts_with('2') {
            return Err(parse_err(ln, "only MSH version 2 is supported"));
        }
    }

    let ni = find("$Nodes").ok_or_else(|| parse_err(1, "missing $Nodes section"))?;
    let (ln, l) = lines[ni + 1];
    let nn: usize = parse_fields(ln, l, 1)?[0];
    let mut id_map = HashMap::with_capacity(nn);
    let mut positions = Vec::with_capacity(nn);
    for k in 0..nn {
        let (ln, l) = *lines
            .get(ni + 2 + k)
            .ok_or_else(|| parse_err(ln, "truncated $Nodes"))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 4 {
            return Err(parse_err(ln, "expected `id x y z`"));
        }
        let id: usize = f[0].parse().map_err(|_| parse_err(ln, "bad node id"))?;
        let c: Vec<f64> = parse_fields(ln, &f[1..].join(" "), 3)?;
        id_map.insert(id, positions.len());
        positions.push(Vec3::new(c[0], c[1], c[2]));
    }

    let ei = find("$Elements").ok_or_else(|| parse_err(1, "missing $Elements section"))?;
    let (ln, l) = lines[ei + 1];
    let ne: usize = parse_fields(ln, l, 1)?[0];
    let mut tets = Vec::new();
    for k in 0..ne {
        let (ln, l) = *lines
            .get(ei + 2 + k)
            .ok_or_else(|| parse_err(ln, "truncated $Elements"))?;
        let f: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| parse_err(ln, format!("bad integer `{s}`"))))
            .collect::<Result<_, _>>()?;
        if f.len() < 3 {
            return Err(parse_err(ln, "short element record"));
        }
        let (etype, ntags) = (f[1], f[2]);
        if etype != 4 {
            continue;
        }
        let nodes = f
            .get(3 + ntags..3 + ntags + 4)
            .ok_or_else(|| parse_err(ln, "tetrahedron needs 4 nodes"))?;
        let mut t = [0; 4];
        for (slot, id) in t.iter_mut().zip(nodes) {
            *slot = *id_map
                .get(id)
                .ok_or_else(|| parse_err(ln, format!("unknown node {id}")))?;
        }
        tets.push(t);
    }
    Ok((positions, tets))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tetmesh_roundtrip() {
        let pts = vec![
            Vec3::new(0.1, 0.0, 0.0),
            Vec3::new(1.0 / 3.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1e-7),
        ];
        let tets = vec![[0, 1, 2, 3]];
        let text = write_tetmesh(&pts, &tets);
        let (p2, t2) = parse_tetmesh(&text).unwrap();
        assert_eq!(p2, pts);
        assert_eq!(t2, tets);
    }

    #[test]
    fn tetmesh_errors_carry_line() {
        let err = parse_tetmesh("tetmesh 1 0\n0 0 x\n").unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 2, .. }), "{err}");
        let err = parse_tetmesh("tetmesh 4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 9\n").unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 6, .. }), "{err}");
        assert!(parse_tetmesh("mesh 1 1").is_err());
    }

    #[test]
    fn gmsh_v2_tets_only() {
        let text = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n7 0 0 1\n$EndNodes\n$Elements\n2\n1 2 2 0 1 1 2 3\n2 4 2 0 1 1 2 3 7\n$EndElements\n";
        let (p, t) = parse_gmsh(text).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(t, vec![[0, 1, 2, 3]]);
    }
}
