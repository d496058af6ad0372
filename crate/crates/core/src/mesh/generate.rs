//! Procedural tet meshes used by scenes and fixtures.

use super::TetMesh;
use crate::Vec3;

/// Six-tet (Kuhn) split of a hexahedral cell. Corner `i + 2j + 4k` sits at
/// local coordinates `(i, j, k)`. Neighbouring cells split conformingly.
pub fn hex_to_tets(c: [usize; 8]) -> [[usize; 4]; 6] {
    const PERMS: [[usize; 3]; 6] = [[1, 2, 4], [1, 4, 2], [2, 1, 4], [2, 4, 1], [4, 1, 2], [4, 2, 1]];
    PERMS.map(|[a, b, _]| [c[0], c[a], c[a + b], c[7]])
}

/// Hexahedral block with corners `corners[i + 2j + 4k]`, subdivided into
/// `cells` along each local axis by trilinear interpolation.
pub fn hex_block(corners: [Vec3; 8], cells: [usize; 3]) -> TetMesh {
    let (positions, tets) = hex_block_parts(corners, cells);
    TetMesh::new(positions, tets).expect("valid hex block")
}

/// Vertex positions and tets of [`hex_block`] without validation.
pub fn hex_block_parts(corners: [Vec3; 8], cells: [usize; 3]) -> (Vec<Vec3>, Vec<[usize; 4]>) {
    let [nx, ny, nz] = cells;
    let idx = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut positions = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                let (u, v, w) = (i as f64 / nx as f64, j as f64 / ny as f64, k as f64 / nz as f64);
                let mut p = Vec3::zeros();
                for (c, corner) in corners.iter().enumerate() {
                    let wu = if c & 1 == 1 { u } else { 1.0 - u };
                    let wv = if c & 2 == 2 { v } else { 1.0 - v };
                    let ww = if c & 4 == 4 { w } else { 1.0 - w };
                    p += corner * (wu * wv * ww);
                }
                positions.push(p);
            }
        }
    }
    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let c = [
                    idx(i, j, k),
                    idx(i + 1, j, k),
                    idx(i, j + 1, k),
                    idx(i + 1, j + 1, k),
                    idx(i, j, k + 1),
                    idx(i + 1, j, k + 1),
                    idx(i, j + 1, k + 1),
                    idx(i + 1, j + 1, k + 1),
                ];
                tets.extend(hex_to_tets(c));
            }
        }
    }
    (positions, tets)
}

/// Axis-aligned box of the given extent centred at the origin.
pub fn box_grid(extent: Vec3, cells: [usize; 3]) -> TetMesh {
    let h = extent / 2.0;
    let corners = std::array::from_fn(|c| {
        Vec3::new(
            if c & 1 == 1 { h.x } else { -h.x },
            if c & 2 == 2 { h.y } else { -h.y },
            if c & 4 == 4 { h.z } else { -h.z },
        )
    });
    hex_block(corners, cells)
}

/// Ball of radius `radius`: a `2n`-cell cube grid pushed onto concentric spheres.
pub fn sphere(radius: f64, n: usize) -> TetMesh {
    let cube = box_grid(Vec3::new(2.0, 2.0, 2.0), [2 * n; 3]);
    cube.transformed(|p| {
        let inf = p.amax();
        let two = p.norm();
        if two == 0.0 {
            *p
        } else {
            p * (radius * inf / two)
        }
    })
    .expect("valid sphere")
}

/// Unit cube split into five tets (four corners plus the central one).
pub fn five_tet_cube(size: f64) -> (Vec<Vec3>, Vec<[usize; 4]>) {
    let pts = (0..8)
        .map(|c| {
            Vec3::new(
                (c & 1) as f64 * size,
                ((c >> 1) & 1) as f64 * size,
                ((c >> 2) & 1) as f64 * size,
            )
        })
        .collect();
    let tets = vec![[0, 1, 2, 4], [3, 2, 1, 7], [5, 4, 7, 1], [6, 7, 4, 2], [1, 2, 4, 7]];
    (pts, tets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::RestData;

    #[test]
    fn box_volume_and_counts() {
        let m = box_grid(Vec3::new(1.0, 2.0, 3.0), [2, 2, 2]);
        assert_eq!(m.tets.len(), 48);
        assert_eq!(m.num_vertices(), 27);
        // 6 faces × 4 quads × 2 triangles
        assert_eq!(m.surface_tris.len(), 48);
        let rest = RestData::new(&m, &vec![1.0; m.tets.len()]);
        let v: f64 = rest.volumes.iter().sum();
        assert!((v - 6.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_is_valid_and_round() {
        let m = sphere(1.0, 3);
        for &v in &m.surface_verts {
            assert!((m.rest_positions[v].norm() - 1.0).abs() < 1e-12);
        }
        let rest = RestData::new(&m, &vec![1.0; m.tets.len()]);
        let v: f64 = rest.volumes.iter().sum();
        assert!(v > 3.0 && v < 4.0 * std::f64::consts::PI / 3.0);
    }
}
