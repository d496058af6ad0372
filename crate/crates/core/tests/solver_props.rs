use pfsim_core::solver::BsrBuilder;
use pfsim_core::{Mat3, Vec3};
use proptest::prelude::*;

fn block() -> impl Strategy<Value = Mat3> {
    prop::array::uniform9(-1.0f64..1.0).prop_map(|a| Mat3::from_row_slice(&a))
}

/// A symmetric 2x2 block element.
fn element(n: usize) -> impl Strategy<Value = ([usize; 2], [[Mat3; 2]; 2])> {
    (0..n, 0..n, block(), block(), block())
        .prop_filter("distinct", |(a, b, ..)| a != b)
        .prop_map(|(a, b, d0, d1, off)| ([a, b], [[d0 + d0.transpose(), off], [off.transpose(), d1 + d1.transpose()]]))
}

proptest! {
    #[test]
    fn assembled_matrix_is_symmetric_and_multiplies_like_dense(
        (n, elems, x) in (2usize..12).prop_flat_map(|n| (
            Just(n),
            prop::collection::vec(element(n), 0..25),
            prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), n),
        ))
    ) {
        let mut b = BsrBuilder::with_capacity(n, elems.len() * 4);
        for (verts, blocks) in &elems {
            b.add_element(verts, blocks);
        }
        let m = b.build();
        let dense = m.to_dense();
        prop_assert_eq!(dense.nrows(), 3 * n);
        prop_assert!((&dense - dense.transpose()).amax() <= 1e-12);

        let x: Vec<Vec3> = x.into_iter().map(Vec3::from).collect();
        let mut y = vec![Vec3::zeros(); n];
        m.mul_vec(&x, &mut y);
        let flat = nalgebra::DVector::from_iterator(3 * n, x.iter().flat_map(|v| v.iter().copied()));
        let expect = &dense * flat;
        for i in 0..3 * n {
            prop_assert!((y[i / 3][i % 3] - expect[i]).abs() <= 1e-12);
        }
    }
}
