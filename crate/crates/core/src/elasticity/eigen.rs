//! Rotation-variant SVD and the closed-form eigensystem of `d²Psi/dF²`.

use nalgebra::{Matrix3, SMatrix, SymmetricEigen};

use super::material::{Material, Model};
use crate::{Mat3, Vec3};

pub type Mat9 = SMatrix<f64, 9, 9>;

/// Index pairs of the twist/flip modes.
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (0, 2)];

/// Guard for the `1/(sigma_i + sigma_j)` factor of the corotated twist mode.
const TWIST_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub struct Svd3 {
    pub u: Mat3,
    pub sigma: Vec3,
    pub v: Mat3,
}

/// SVD with `det U = det V = +1`, `sigma_0 >= sigma_1 >= |sigma_2|`; a
/// reflection shows up as a negative last singular value.
pub fn rv_svd(f: &Mat3) -> Svd3 {
    let svd = f.svd(true, true);
    let mut u = svd.u.unwrap();
    let mut v = svd.v_t.unwrap().transpose();
    let mut s = svd.singular_values;
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    u = Mat3::from_columns(&[u.column(idx[0]), u.column(idx[1]), u.column(idx[2])]);
    v = Mat3::from_columns(&[v.column(idx[0]), v.column(idx[1]), v.column(idx[2])]);
    s = Vec3::new(s[idx[0]], s[idx[1]], s[idx[2]]);
    if u.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
        s[2] = -s[2];
    }
    if v.determinant() < 0.0 {
        v.column_mut(2).neg_mut();
        s[2] = -s[2];
    }
    Svd3 { u, sigma: s, v }
}

/// The nine eigenpairs of the energy density Hessian, stored as
/// `Q_k = U D_k V^T`.
///
/// Scaling modes use `D_k = diag(scaling_vecs[:, k])`. The twist and flip
/// modes of pair `(i, j)` use `(e_i e_j^T - e_j e_i^T)/sqrt 2` and
/// `(e_i e_j^T + e_j e_i^T)/sqrt 2`.
#[derive(Clone, Copy, Debug)]
pub struct EigenSystem {
    pub u: Mat3,
    pub sigma: Vec3,
    pub v: Mat3,
    pub scaling_vals: Vec3,
    pub scaling_vecs: Mat3,
    pub twist: Vec3,
    pub flip: Vec3,
}

impl EigenSystem {
    /// Eigenvalues ordered scaling, twist, flip.
    pub fn eigenvalues(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for k in 0..3 {
            out[k] = self.scaling_vals[k];
            out[3 + k] = self.twist[k];
            out[6 + k] = self.flip[k];
        }
        out
    }

    /// `D_k` matrices in the same order as [`eigenvalues`](Self::eigenvalues).
    pub fn d_matrices(&self) -> [Mat3; 9] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        std::array::from_fn(|k| match k {
            0..=2 => Mat3::from_diagonal(&self.scaling_vecs.column(k).into_owned()),
            _ => {
                let (i, j) = PAIRS[k % 3];
                let sgn = if k < 6 { -1.0 } else { 1.0 };
                let mut d = Mat3::zeros();
                d[(i, j)] = r;
                d[(j, i)] = sgn * r;
                d
            }
        })
    }

    pub fn q_matrices(&self) -> [Mat3; 9] {
        self.d_matrices().map(|d| self.u * d * self.v.transpose())
    }

    /// `sum_k lambda_k vec(Q_k) vec(Q_k)^T` with column-major `vec`, optionally clamped.
    pub fn hessian(&self, clamp: bool) -> Mat9 {
        let mut h = Mat9::zeros();
        for (lam, q) in self.eigenvalues().iter().zip(self.q_matrices()) {
            let lam = if clamp { lam.max(0.0) } else { *lam };
            let v = nalgebra::SVector::<f64, 9>::from_column_slice(q.as_slice());
            h += v * v.transpose() * lam;
        }
        h
    }
}

impl Material {
    pub fn eigen_system(&self, f: &Mat3) -> EigenSystem {
        let (mu, lambda) = (self.mu, self.lambda);
        if self.model == Model::Linear {
            // Constant Hessian: identity frames, symmetric shear 2mu, rotations 0.
            let a = Mat3::identity() * (2.0 * mu) + Mat3::repeat(lambda);
            let (vals, vecs) = sym_eigen(&a);
            return EigenSystem {
                u: Mat3::identity(),
                sigma: Vec3::repeat(1.0),
                v: Mat3::identity(),
                scaling_vals: vals,
                scaling_vecs: vecs,
                twist: Vec3::zeros(),
                flip: Vec3::repeat(2.0 * mu),
            };
        }
        let Svd3 { u, sigma: s, v } = rv_svd(f);
        let j = s[0] * s[1] * s[2];
        let mut a = Mat3::zeros();
        let mut twist = Vec3::zeros();
        let mut flip = Vec3::zeros();
        match self.model {
            Model::NeoHookean => {
                let lj = j.ln();
                for i in 0..3 {
                    a[(i, i)] = mu + (mu + lambda - lambda * lj) / (s[i] * s[i]);
                }
                for (k, &(i, jj)) in PAIRS.iter().enumerate() {
                    a[(i, jj)] = lambda / (s[i] * s[jj]);
                    a[(jj, i)] = a[(i, jj)];
                    let p = s[i] * s[jj];
                    twist[k] = mu + (lambda * lj - mu) / p;
                    flip[k] = mu + (mu - lambda * lj) / p;
                }
            }
            Model::StableNeoHookean => {
                let l = self.snh_lambda();
                let c = l * (j - 1.0) - mu;
                for (k, &(i, jj)) in PAIRS.iter().enumerate() {
                    let o = 3 - i - jj;
                    a[(o, o)] = mu + l * (s[i] * s[jj]).powi(2);
                    a[(i, jj)] = s[o] * (l * (2.0 * j - 1.0) - mu);
                    a[(jj, i)] = a[(i, jj)];
                    twist[k] = mu + c * s[o];
                    flip[k] = mu - c * s[o];
                }
            }
            Model::Corotated => {
                a = Mat3::identity() * (2.0 * mu) + Mat3::repeat(lambda);
                let tr = s.sum() - 3.0;
                for (k, &(i, jj)) in PAIRS.iter().enumerate() {
                    let denom = s[i] + s[jj];
                    let denom = if denom.abs() < TWIST_EPS { TWIST_EPS.copysign(denom) } else { denom };
                    twist[k] = 2.0 * mu + (2.0 * lambda * tr - 4.0 * mu) / denom;
                    flip[k] = 2.0 * mu;
                }
            }
            Model::Linear => unreachable!(),
        }
        let (vals, vecs) = sym_eigen(&a);
        EigenSystem {
            u,
            sigma: s,
            v,
            scaling_vals: vals,
            scaling_vecs: vecs,
            twist,
            flip,
        }
    }
}

fn sym_eigen(a: &Mat3) -> (Vec3, Mat3) {
    let e = SymmetricEigen::new(Matrix3::from(*a));
    (e.eigenvalues, e.eigenvectors)
}

/// Numeric `d²Psi/dF²` by fourth-order central differences of the stress.
pub fn numeric_hessian(m: &Material, f: &Mat3, h: f64) -> Mat9 {
    let mut out = Mat9::zeros();
    for c in 0..9 {
        let at = |t: f64| {
            let mut g = *f;
            g.as_mut_slice()[c] += t;
            m.stress(&g)
        };
        let d = (at(-2.0 * h) - at(2.0 * h) + (at(h) - at(-h)) * 8.0) / (12.0 * h);
        out.column_mut(c).copy_from_slice(d.as_slice());
    }
    out
}
