use pfsim_core::mesh::generate::{box_grid, sphere};
use pfsim_core::mesh::{RestData, TetMesh};
use pfsim_core::{Mat3, Vec3};
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    [-r..r, -r..r, -r..r].prop_map(|[x, y, z]| Vec3::new(x, y, z))
}

/// A tet near the unit corner tet, so it is never degenerate.
fn tet() -> impl Strategy<Value = [Vec3; 4]> {
    [vec3(0.2), vec3(0.2), vec3(0.2), vec3(0.2)].prop_map(|d| {
        [Vec3::zeros() + d[0], Vec3::x() + d[1], Vec3::y() + d[2], Vec3::z() + d[3]]
    })
}

fn rotation() -> impl Strategy<Value = nalgebra::Rotation3<f64>> {
    vec3(3.0).prop_map(nalgebra::Rotation3::new)
}

proptest! {
    #[test]
    fn shape_rows_reproduce_the_deformation_gradient(rest in tet(), x in [vec3(2.0), vec3(2.0), vec3(2.0), vec3(2.0)]) {
        let mesh = TetMesh::new(rest.to_vec(), vec![[0, 1, 2, 3]]).unwrap();
        let data = RestData::new(&mesh, &[1.0]);
        let t = mesh.tets[0];
        let f = data.deformation_gradient(0, &t, &x);
        let ds = Mat3::from_columns(&[x[t[1]] - x[t[0]], x[t[2]] - x[t[0]], x[t[3]] - x[t[0]]]);
        let direct = ds * data.dm_inv[0];
        prop_assert!((f - direct).norm() <= 1e-12 * direct.norm().max(1.0));
    }

    #[test]
    fn lumped_masses_sum_to_body_mass(
        extent in [0.1f64..3.0, 0.1..3.0, 0.1..3.0],
        cells in [1usize..4, 1..4, 1..4],
        rho in 1.0f64..5000.0,
    ) {
        let mesh = box_grid(Vec3::from(extent), cells);
        let data = RestData::new(&mesh, &vec![rho; mesh.tets.len()]);
        let expected: f64 = data.volumes.iter().map(|v| rho * v).sum();
        prop_assert!((data.total_mass() - expected).abs() <= 1e-12 * expected);
        let box_volume = extent[0] * extent[1] * extent[2];
        prop_assert!((data.volumes.iter().sum::<f64>() - box_volume).abs() <= 1e-12 * box_volume);
    }

    #[test]
    fn closed_surfaces_have_zero_net_area(rot in rotation(), shift in vec3(5.0), n in 1usize..4, cells in [1usize..4, 1..4, 1..4]) {
        let meshes = [box_grid(Vec3::new(0.4, 1.0, 0.7), cells), sphere(0.5, n)];
        for m in meshes {
            let x: Vec<Vec3> = m.rest_positions.iter().map(|p| rot * p + shift).collect();
            let net: Vec3 = m
                .surface_tris
                .iter()
                .map(|t| (x[t[1]] - x[t[0]]).cross(&(x[t[2]] - x[t[0]])) * 0.5)
                .sum();
            prop_assert!(net.norm() <= 1e-10);
        }
    }
}
