use pfsim_core::elasticity::hessian::to_dense;
use pfsim_core::elasticity::{psd_block_hessian, Material, Model};
use pfsim_core::mesh::{RestData, TetMesh};
use pfsim_core::{Mat3, Vec3};
use proptest::prelude::*;

const MODELS: [Model; 3] = [Model::Corotated, Model::StableNeoHookean, Model::NeoHookean];

fn model() -> impl Strategy<Value = Model> {
    prop::sample::select(MODELS.to_vec())
}

/// Deformation gradient near identity with positive determinant.
fn deformation() -> impl Strategy<Value = Mat3> {
    prop::array::uniform9(-0.4f64..0.4).prop_map(|a| Mat3::identity() + Mat3::from_row_slice(&a))
        .prop_filter("inverted", |f| f.determinant() > 0.2)
}

fn material(m: Model) -> Material {
    Material::new(m, 1e5, 0.35).unwrap()
}

proptest! {
    #[test]
    fn energy_is_frame_invariant(m in model(), f in deformation(), axis in prop::array::uniform3(-3.0f64..3.0)) {
        let mat = material(m);
        let r = nalgebra::Rotation3::new(Vec3::from(axis)).into_inner();
        let (a, b) = (mat.psi(&f), mat.psi(&(r * f)));
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn psd_hessian_matches_differences_when_convex(
        m in model(),
        f in deformation(),
        corners in prop::array::uniform4(prop::array::uniform3(-0.1f64..0.1)),
    ) {
        let mat = material(m);
        let es = mat.eigen_system(&f);
        prop_assume!(es.eigenvalues().iter().all(|&l| l > 1e-6 * mat.mu));

        let rest: Vec<Vec3> = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
            .iter()
            .zip(&corners)
            .map(|(p, d)| Vec3::from(*p) + Vec3::from(*d))
            .collect();
        let mesh = TetMesh::new(rest.clone(), vec![[0, 1, 2, 3]]).unwrap();
        let data = RestData::new(&mesh, &[1.0]);
        let tet = mesh.tets[0];
        let (rows, vol) = (data.shape_rows[0], data.volumes[0]);
        let x: Vec<Vec3> = mesh.rest_positions.iter().map(|p| f * p).collect();
        let grad = |x: &[Vec3]| mat.gradient(&data.deformation_gradient(0, &tet, x), &rows, vol);

        let analytic = to_dense(&psd_block_hessian(&es, &rows, vol));
        let scale = analytic.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        let h = 1e-6;
        for j in 0..12 {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[tet[j / 3]][j % 3] += h;
            xm[tet[j / 3]][j % 3] -= h;
            let (gp, gm) = (grad(&xp), grad(&xm));
            for i in 0..12 {
                let fd = (gp[i / 3][i % 3] - gm[i / 3][i % 3]) / (2.0 * h);
                let a = analytic[i][j];
                prop_assert!((fd - a).abs() <= 1e-5 * scale, "entry ({i},{j}): {fd} vs {a}");
            }
        }
    }
}
