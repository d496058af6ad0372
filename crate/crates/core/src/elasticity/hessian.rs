//! PSD-projected element Hessians assembled directly as 3×3 vertex blocks.
//!
//! For vertices `i'`, `j'` with shape rows `A_i'`, `A_j'` the projected block
//! is `vol * U [sum_k lambda_k+ D_k a_i' a_j'^T D_k^T] U^T` with
//! `a = V^T A^T`. Scaling modes collapse to a Hadamard product with
//! `S = sum_k lambda_k+ d_k d_k^T`; each twist/flip pair touches four entries.

use super::eigen::{EigenSystem, PAIRS};
use super::scalar::Real;
use crate::{Mat3, Row3};

pub type ElementHessian = [[Mat3; 4]; 4];

type M3<T> = [[T; 3]; 3];

fn lift<T: Real>(m: &Mat3) -> M3<T> {
    std::array::from_fn(|r| std::array::from_fn(|c| T::from_f64(m[(r, c)])))
}

fn lower<T: Real>(m: &M3<T>) -> Mat3 {
    Mat3::from_fn(|r, c| m[r][c].to_f64())
}

/// Projected 4×4 block Hessian (upper blocks computed, lower mirrored).
pub fn psd_blocks<T: Real>(es: &EigenSystem, rows: &[Row3; 4], vol: f64) -> [[M3<T>; 4]; 4] {
    let u: M3<T> = lift(&es.u);
    let v: M3<T> = lift(&es.v);
    let vol = T::from_f64(vol);
    let clamp = |x: f64| T::from_f64(x.max(0.0));

    // a_i = V^T A_i^T
    let a: [[T; 3]; 4] = std::array::from_fn(|i| {
        let row: [T; 3] = std::array::from_fn(|c| T::from_f64(rows[i][c]));
        std::array::from_fn(|c| row[0] * v[0][c] + row[1] * v[1][c] + row[2] * v[2][c])
    });

    // S = vol * sum_k lambda_k+ d_k d_k^T (symmetric)
    let mut s = [[T::zero(); 3]; 3];
    for k in 0..3 {
        let lam = es.scaling_vals[k];
        if lam <= 0.0 {
            continue;
        }
        let lv = clamp(lam) * vol;
        let d: [T; 3] = std::array::from_fn(|r| T::from_f64(es.scaling_vecs[(r, k)]));
        for r in 0..3 {
            let ld = lv * d[r];
            for c in r..3 {
                s[r][c] += ld * d[c];
            }
        }
    }
    for r in 0..3 {
        for c in 0..r {
            s[r][c] = s[c][r];
        }
    }
    let half = T::from_f64(0.5);
    let coef: [(T, T); 3] = std::array::from_fn(|k| {
        let (t, f) = (clamp(es.twist[k]), clamp(es.flip[k]));
        (half * vol * (t + f), half * vol * (f - t))
    });

    let mut out = [[[[T::zero(); 3]; 3]; 4]; 4];
    for i in 0..4 {
        for j in i..4 {
            let mut m = [[T::zero(); 3]; 3];
            for r in 0..3 {
                for c in 0..3 {
                    m[r][c] = a[i][r] * a[j][c];
                }
            }
            let mut inner = [[T::zero(); 3]; 3];
            for r in 0..3 {
                for c in 0..3 {
                    inner[r][c] = m[r][c] * s[r][c];
                }
            }
            for (k, &(p, q)) in PAIRS.iter().enumerate() {
                let (ca, cb) = coef[k];
                inner[p][p] += ca * m[q][q];
                inner[q][q] += ca * m[p][p];
                inner[p][q] += cb * m[q][p];
                inner[q][p] += cb * m[p][q];
            }
            // U inner U^T
            let mut ui = [[T::zero(); 3]; 3];
            for r in 0..3 {
                for c in 0..3 {
                    ui[r][c] = u[r][0] * inner[0][c] + u[r][1] * inner[1][c] + u[r][2] * inner[2][c];
                }
            }
            let mut b = [[T::zero(); 3]; 3];
            for r in 0..3 {
                for c in 0..3 {
                    b[r][c] = ui[r][0] * u[c][0] + ui[r][1] * u[c][1] + ui[r][2] * u[c][2];
                }
            }
            out[i][j] = b;
            if i != j {
                out[j][i] = std::array::from_fn(|r| std::array::from_fn(|c| b[c][r]));
            }
        }
    }
    out
}

/// Reference construction: clamp, build the dense 9×9 from `Q_k`, then
/// `B^T H B` with `B = dvec(F)/dx` (9×12).
pub fn direct_psd_hessian<T: Real>(es: &EigenSystem, rows: &[Row3; 4], vol: f64) -> [[T; 12]; 12] {
    let u: M3<T> = lift(&es.u);
    let vt: M3<T> = lift(&es.v.transpose());
    let lams = es.eigenvalues();
    let mut h = [[T::zero(); 9]; 9];
    for (k, d) in es.d_matrices().iter().enumerate() {
        if lams[k] <= 0.0 {
            continue;
        }
        let d: M3<T> = lift(d);
        let mut ud = [[T::zero(); 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                ud[r][c] = u[r][0] * d[0][c] + u[r][1] * d[1][c] + u[r][2] * d[2][c];
            }
        }
        let mut q = [T::zero(); 9];
        for r in 0..3 {
            for c in 0..3 {
                q[r + 3 * c] = ud[r][0] * vt[0][c] + ud[r][1] * vt[1][c] + ud[r][2] * vt[2][c];
            }
        }
        let lam = T::from_f64(lams[k]);
        for a in 0..9 {
            let lq = lam * q[a];
            for b in 0..9 {
                h[a][b] += lq * q[b];
            }
        }
    }
    // B[r + 3c][3i + r] = A_i[c]
    let mut bmat = [[T::zero(); 12]; 9];
    for i in 0..4 {
        for r in 0..3 {
            for c in 0..3 {
                bmat[r + 3 * c][3 * i + r] = T::from_f64(rows[i][c]);
            }
        }
    }
    let mut hb = [[T::zero(); 12]; 9];
    for a in 0..9 {
        for col in 0..12 {
            let mut acc = T::zero();
            for k in 0..9 {
                acc += h[a][k] * bmat[k][col];
            }
            hb[a][col] = acc;
        }
    }
    let vol = T::from_f64(vol);
    let mut out = [[T::zero(); 12]; 12];
    for r in 0..12 {
        for c in 0..12 {
            let mut acc = T::zero();
            for k in 0..9 {
                acc += bmat[k][r] * hb[k][c];
            }
            out[r][c] = vol * acc;
        }
    }
    out
}

/// `f64` block assembly used by the solver.
pub fn psd_block_hessian(es: &EigenSystem, rows: &[Row3; 4], vol: f64) -> ElementHessian {
    let b = psd_blocks::<f64>(es, rows, vol);
    std::array::from_fn(|i| std::array::from_fn(|j| lower(&b[i][j])))
}

/// Flattens a block Hessian into a dense 12×12 array.
pub fn to_dense(h: &ElementHessian) -> [[f64; 12]; 12] {
    let mut out = [[0.0; 12]; 12];
    for i in 0..4 {
        for j in 0..4 {
            for r in 0..3 {
                for c in 0..3 {
                    out[3 * i + r][3 * j + c] = h[i][j][(r, c)];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elasticity::material::{Material, Model};
    use crate::elasticity::scalar::{mul_count, reset_mul_count, Counted};
    use crate::Vec3;
    use nalgebra::{SMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Mat12 = SMatrix<f64, 12, 12>;

    const MODELS: [Model; 4] = [Model::StableNeoHookean, Model::NeoHookean, Model::Corotated, Model::Linear];

    fn random_rows(rng: &mut ChaCha8Rng) -> [Row3; 4] {
        let x: [Vec3; 4] = std::array::from_fn(|i| {
            let base = if i == 0 { Vec3::zeros() } else { Vec3::ith(i - 1, 1.0) };
            base + Vec3::from_fn(|_, _| rng.gen_range(-0.2..0.2))
        });
        let dm = Mat3::from_columns(&[x[1] - x[0], x[2] - x[0], x[3] - x[0]]);
        let inv = dm.try_inverse().unwrap();
        let a1 = inv.row(0).into_owned();
        let a2 = inv.row(1).into_owned();
        let a3 = inv.row(2).into_owned();
        [-(a1 + a2 + a3), a1, a2, a3]
    }

    fn dense(a: &[[f64; 12]; 12]) -> Mat12 {
        Mat12::from_fn(|r, c| a[r][c])
    }

    #[test]
    fn blocks_match_direct_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 0..400 {
            let model = MODELS[n % 4];
            let m = Material::new(model, rng.gen_range(1.0..10.0), rng.gen_range(0.0..0.49)).unwrap();
            let mut f = Mat3::identity() + Mat3::from_fn(|_, _| rng.gen_range(-0.6..0.6));
            if model == Model::NeoHookean && f.determinant() <= 0.0 {
                f.column_mut(0).neg_mut();
            }
            let rows = random_rows(&mut rng);
            let es = m.eigen_system(&f);
            let fast = dense(&to_dense(&psd_block_hessian(&es, &rows, 0.7)));
            let direct = dense(&direct_psd_hessian::<f64>(&es, &rows, 0.7));
            let scale = direct.norm().max(1e-300);
            assert!((fast - direct).norm() <= 1e-10 * scale, "{model:?}");
            assert!((fast - fast.transpose()).norm() <= 1e-12 * scale);
            let min = SymmetricEigen::new(fast).eigenvalues.min();
            assert!(min >= -1e-8 * scale);
        }
    }

    #[test]
    fn all_negative_spectrum_gives_zero() {
        let m = Material::new(Model::Corotated, 1.0, 0.3).unwrap();
        let mut es = m.eigen_system(&Mat3::identity());
        es.scaling_vals = Vec3::repeat(-1.0);
        es.twist = Vec3::repeat(-1.0);
        es.flip = Vec3::repeat(0.0);
        let rows = random_rows(&mut ChaCha8Rng::seed_from_u64(0));
        let h = to_dense(&psd_block_hessian(&es, &rows, 1.0));
        assert!(h.iter().flatten().all(|x| *x == 0.0));
    }

    #[test]
    fn psd_input_is_reproduced_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = Material::new(Model::StableNeoHookean, 1.0, 0.3).unwrap();
        let mut checked = 0;
        while checked < 50 {
            let f = Mat3::identity() + Mat3::from_fn(|_, _| rng.gen_range(-0.05..0.05));
            let es = m.eigen_system(&f);
            if es.eigenvalues().iter().any(|l| *l <= 0.0) {
                continue;
            }
            let rows = random_rows(&mut rng);
            // Unprojected Hessian: B^T H B from the unclamped 9×9.
            let h9 = es.hessian(false);
            let mut b = SMatrix::<f64, 9, 12>::zeros();
            for i in 0..4 {
                for r in 0..3 {
                    for c in 0..3 {
                        b[(r + 3 * c, 3 * i + r)] = rows[i][c];
                    }
                }
            }
            let exact = b.transpose() * h9 * b;
            let fast = dense(&to_dense(&psd_block_hessian(&es, &rows, 1.0)));
            assert!((fast - exact).norm() <= 1e-10 * exact.norm());
            checked += 1;
        }
    }

    #[test]
    fn block_path_uses_fewer_multiplications() {
        let m = Material::new(Model::StableNeoHookean, 1.0, 0.3).unwrap();
        let f = Mat3::new(1.1, 0.1, 0.0, -0.2, 0.9, 0.1, 0.05, 0.0, 1.2);
        let es = m.eigen_system(&f);
        let rows = random_rows(&mut ChaCha8Rng::seed_from_u64(6));
        assert!(es.eigenvalues().iter().all(|l| *l > 0.0));
        reset_mul_count();
        let _ = psd_blocks::<Counted>(&es, &rows, 1.0);
        let fast = mul_count();
        reset_mul_count();
        let _ = direct_psd_hessian::<Counted>(&es, &rows, 1.0);
        let direct = mul_count();
        assert!(direct as f64 / fast as f64 >= 2.0, "{direct} / {fast}");
    }
}
