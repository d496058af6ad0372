//! Tetrahedral meshes, rest-shape precomputation and lumped masses.

mod format;
pub mod generate;

use std::collections::HashMap;
use std::path::Path;

use crate::error::MeshError;
use crate::{Mat3, Row3, Vec3};

pub use format::{parse_gmsh, parse_tetmesh, write_tetmesh};

/// Relative volume below which a tetrahedron is rejected as degenerate.
pub const DEGENERATE_VOLUME_FRACTION: f64 = 1e-12;

/// Linear tetrahedral mesh together with its boundary surface.
#[derive(Clone, Debug)]
pub struct TetMesh {
    pub rest_positions: Vec<Vec3>,
    /// Vertex indices, oriented so that every rest volume is positive.
    pub tets: Vec<[usize; 4]>,
    /// Boundary faces, outward oriented.
    pub surface_tris: Vec<[usize; 3]>,
    /// Edges of `surface_tris`, each stored with `e[0] < e[1]`.
    pub surface_edges: Vec<[usize; 2]>,
    /// Vertices of `surface_tris`, sorted.
    pub surface_verts: Vec<usize>,
}

/// Boundary of a tet mesh.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Surface {
    pub tris: Vec<[usize; 3]>,
    pub edges: Vec<[usize; 2]>,
    pub verts: Vec<usize>,
    /// Edges shared by more than two boundary faces. They are kept in `edges`.
    pub non_manifold_edges: Vec<[usize; 2]>,
}

/// Per-element quantities derived from the rest configuration.
#[derive(Clone, Debug)]
pub struct RestData {
    /// Inverse of the rest shape matrix `[x1-x0, x2-x0, x3-x0]`.
    pub dm_inv: Vec<Mat3>,
    pub volumes: Vec<f64>,
    /// Rows `A_i` with `F = sum_i x_i A_i` (outer products).
    pub shape_rows: Vec<[Row3; 4]>,
    /// Lumped vertex masses.
    pub masses: Vec<f64>,
}

/// Signed volume of the tetrahedron `(a, b, c, d)`.
pub fn signed_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).dot(&(c - a).cross(&(d - a))) / 6.0
}

impl TetMesh {
    /// Builds a mesh, reordering inverted tetrahedra and extracting the surface.
    pub fn new(rest_positions: Vec<Vec3>, mut tets: Vec<[usize; 4]>) -> Result<Self, MeshError> {
        if tets.is_empty() {
            return Err(MeshError::Empty);
        }
        let nverts = rest_positions.len();
        for (index, t) in tets.iter().enumerate() {
            if let Some(&vertex) = t.iter().find(|&&v| v >= nverts) {
                return Err(MeshError::BadIndex {
                    index,
                    vertex,
                    nverts,
                });
            }
        }
        let vols: Vec<f64> = tets
            .iter()
            .map(|t| {
                signed_volume(
                    &rest_positions[t[0]],
                    &rest_positions[t[1]],
                    &rest_positions[t[2]],
                    &rest_positions[t[3]],
                )
            })
            .collect();
        let mean = vols.iter().map(|v| v.abs()).sum::<f64>() / vols.len() as f64;
        for (index, (t, &vol)) in tets.iter_mut().zip(&vols).enumerate() {
            if !(vol.abs() > DEGENERATE_VOLUME_FRACTION * mean) {
                return Err(MeshError::DegenerateTet { index, volume: vol });
            }
            if vol < 0.0 {
                t.swap(2, 3);
            }
        }
        let surface = extract_surface(&tets);
        for e in &surface.non_manifold_edges {
            log::warn!("non-manifold boundary edge ({}, {})", e[0], e[1]);
        }
        Ok(TetMesh {
            rest_positions,
            tets,
            surface_tris: surface.tris,
            surface_edges: surface.edges,
            surface_verts: surface.verts,
        })
    }

    /// Mesh without vertices, the union of zero bodies.
    pub fn empty() -> Self {
        TetMesh {
            rest_positions: Vec::new(),
            tets: Vec::new(),
            surface_tris: Vec::new(),
            surface_edges: Vec::new(),
            surface_verts: Vec::new(),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.rest_positions.len()
    }

    /// Concatenates meshes, offsetting indices. The surfaces stay disjoint.
    pub fn merge(parts: &[TetMesh]) -> Result<Self, MeshError> {
        if parts.is_empty() {
            return Ok(TetMesh::empty());
        }
        let mut positions = Vec::new();
        let mut tets = Vec::new();
        for part in parts {
            let offset = positions.len();
            positions.extend_from_slice(&part.rest_positions);
            tets.extend(part.tets.iter().map(|t| t.map(|v| v + offset)));
        }
        TetMesh::new(positions, tets)
    }

    /// Returns a copy with every rest position mapped through `f`.
    pub fn transformed(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<Self, MeshError> {
        let positions = self.rest_positions.iter().map(f).collect();
        TetMesh::new(positions, self.tets.clone())
    }
}

/// Boundary faces (incident to exactly one tet), their edges and vertices.
///
/// `tets` must be positively oriented for the faces to point outward.
pub fn extract_surface(tets: &[[usize; 4]]) -> Surface {
    // Outward faces of a positively oriented tet (0, 1, 2, 3).
    const FACES: [[usize; 3]; 4] = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];

    let mut count: HashMap<[usize; 3], (usize, [usize; 3])> = HashMap::new();
    let mut order = Vec::new();
    for t in tets {
        for f in FACES {
            let face = [t[f[0]], t[f[1]], t[f[2]]];
            let mut key = face;
            key.sort_unstable();
            let entry = count.entry(key).or_insert_with(|| {
                order.push(key);
                (0, face)
            });
            entry.0 += 1;
        }
    }
    let tris: Vec<[usize; 3]> = order
        .iter()
        .filter_map(|k| {
            let (n, face) = count[k];
            (n == 1).then_some(face)
        })
        .collect();

    let mut edge_faces: HashMap<[usize; 2], usize> = HashMap::new();
    let mut edges = Vec::new();
    for tri in &tris {
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            let key = [a.min(b), a.max(b)];
            let n = edge_faces.entry(key).or_insert(0);
            if *n == 0 {
                edges.push(key);
            }
            *n += 1;
        }
    }
    let non_manifold_edges = edges
        .iter()
        .copied()
        .filter(|e| edge_faces[e] > 2)
        .collect();

    let mut verts: Vec<usize> = tris.iter().flatten().copied().collect();
    verts.sort_unstable();
    verts.dedup();

    Surface {
        tris,
        edges,
        verts,
        non_manifold_edges,
    }
}

impl RestData {
    /// Rest-shape data with per-tet densities (kg/m³).
    pub fn new(mesh: &TetMesh, densities: &[f64]) -> Self {
        assert_eq!(densities.len(), mesh.tets.len());
        let x = &mesh.rest_positions;
        let mut dm_inv = Vec::with_capacity(mesh.tets.len());
        let mut volumes = Vec::with_capacity(mesh.tets.len());
        let mut shape_rows = Vec::with_capacity(mesh.tets.len());
        let mut masses = vec![0.0; x.len()];
        for (t, &rho) in mesh.tets.iter().zip(densities) {
            let dm = Mat3::from_columns(&[x[t[1]] - x[t[0]], x[t[2]] - x[t[0]], x[t[3]] - x[t[0]]]);
            let inv = dm.try_inverse().expect("non-degenerate tet");
            let vol = dm.determinant() / 6.0;
            let a1 = inv.row(0).into_owned();
            let a2 = inv.row(1).into_owned();
            let a3 = inv.row(2).into_owned();
            let a0 = -(a1 + a2 + a3);
            dm_inv.push(inv);
            volumes.push(vol);
            shape_rows.push([a0, a1, a2, a3]);
            let m = rho * vol / 4.0;
            for &v in t {
                masses[v] += m;
            }
        }
        RestData {
            dm_inv,
            volumes,
            shape_rows,
            masses,
        }
    }

    /// Deformation gradient of tet `e` at positions `x`.
    #[inline]
    pub fn deformation_gradient(&self, e: usize, tet: &[usize; 4], x: &[Vec3]) -> Mat3 {
        let a = &self.shape_rows[e];
        x[tet[0]] * a[0] + x[tet[1]] * a[1] + x[tet[2]] * a[2] + x[tet[3]] * a[3]
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// Loads a mesh file, dispatching on content (`tetmesh` header or Gmsh `$MeshFormat`).
pub fn load_mesh(path: impl AsRef<Path>, density: f64) -> Result<(TetMesh, RestData), MeshError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (positions, tets) = if text.trim_start().starts_with("$MeshFormat") {
        parse_gmsh(&text)?
    } else {
        parse_tetmesh(&text)?
    };
    let mesh = TetMesh::new(positions, tets)?;
    let rest = RestData::new(&mesh, &vec![density; mesh.tets.len()]);
    Ok((mesh, rest))
}
