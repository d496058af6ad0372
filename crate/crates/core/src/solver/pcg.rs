//! Block-Jacobi preconditioned conjugate gradients.

use super::bsr::BlockSparseMatrix;
use crate::{Mat3, Vec3};

pub const RESTART_INTERVAL: usize = 250;

#[derive(Clone, Debug)]
pub struct PcgResult {
    pub x: Vec<Vec3>,
    pub iterations: usize,
    pub converged: bool,
    /// Final `|b - A x| / |b|`.
    pub relative_residual: f64,
}

fn dot(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn block_inverses(a: &BlockSparseMatrix) -> Vec<Mat3> {
    (0..a.num_block_rows())
        .map(|i| {
            let d = a.diagonal_block(i);
            d.try_inverse().unwrap_or_else(|| {
                let s = d.diagonal().amax();
                Mat3::identity() * if s > 0.0 { 1.0 / s } else { 1.0 }
            })
        })
        .collect()
}

/// Solves `A x = b` to `|r| <= rel_tol |b|`, starting from zero. The default
/// iteration cap is `10 * block rows`.
pub fn pcg_solve(a: &BlockSparseMatrix, b: &[Vec3], rel_tol: f64, max_iter: Option<usize>) -> PcgResult {
    let n = a.num_block_rows();
    let max_iter = max_iter.unwrap_or(10 * n.max(1));
    let mut x = vec![Vec3::zeros(); n];
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return PcgResult {
            x,
            iterations: 0,
            converged: true,
            relative_residual: 0.0,
        };
    }
    let pinv = block_inverses(a);
    let precondition = |r: &[Vec3], z: &mut [Vec3]| {
        for i in 0..n {
            z[i] = pinv[i] * r[i];
        }
    };
    let mut r = b.to_vec();
    let mut z = vec![Vec3::zeros(); n];
    precondition(&r, &mut z);
    let mut d = z.clone();
    let mut rz = dot(&r, &z);
    let mut ad = vec![Vec3::zeros(); n];
    let mut iterations = 0;
    let mut r_norm = b_norm;
    while iterations < max_iter {
        a.mul_vec(&d, &mut ad);
        let dad = dot(&d, &ad);
        if dad <= 0.0 || !dad.is_finite() {
            break;
        }
        let step = rz / dad;
        for i in 0..n {
            x[i] += d[i] * step;
            r[i] -= ad[i] * step;
        }
        iterations += 1;
        r_norm = dot(&r, &r).sqrt();
        if r_norm <= rel_tol * b_norm {
            break;
        }
        if iterations % RESTART_INTERVAL == 0 {
            a.mul_vec(&x, &mut ad);
            for i in 0..n {
                r[i] = b[i] - ad[i];
            }
            precondition(&r, &mut z);
            d.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            d[i] = z[i] + d[i] * beta;
        }
    }
    PcgResult {
        converged: r_norm <= rel_tol * b_norm,
        relative_residual: r_norm / b_norm,
        x,
        iterations,
    }
}
