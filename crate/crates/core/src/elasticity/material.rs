use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Mat3, Row3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    /// Stable Neo-Hookean.
    #[serde(rename = "snh")]
    StableNeoHookean,
    #[serde(rename = "nh")]
    NeoHookean,
    #[serde(rename = "cor")]
    Corotated,
    #[serde(rename = "lin")]
    Linear,
}

#[derive(Debug, Error, PartialEq)]
pub enum MaterialError {
    #[error("Young's modulus must be positive, got {0}")]
    Young(f64),
    #[error("Poisson ratio must lie in [0, 0.5), got {0}")]
    Poisson(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material {
    pub model: Model,
    pub young: f64,
    pub poisson: f64,
    /// First Lamé parameter.
    pub lambda: f64,
    /// Shear modulus.
    pub mu: f64,
}

/// Cofactor matrix `det(F) F^{-T}`, well defined for singular `F`.
pub fn cofactor(f: &Mat3) -> Mat3 {
    let c0 = f.column(1).cross(&f.column(2));
    let c1 = f.column(2).cross(&f.column(0));
    let c2 = f.column(0).cross(&f.column(1));
    Mat3::from_columns(&[c0, c1, c2])
}

impl Material {
    pub fn new(model: Model, young: f64, poisson: f64) -> Result<Self, MaterialError> {
        if !(young > 0.0 && young.is_finite()) {
            return Err(MaterialError::Young(young));
        }
        if !(0.0..0.5).contains(&poisson) {
            return Err(MaterialError::Poisson(poisson));
        }
        Ok(Material {
            model,
            young,
            poisson,
            lambda: young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson)),
            mu: young / (2.0 * (1.0 + poisson)),
        })
    }

    /// Lamé parameter used inside the stable Neo-Hookean energy. The shift
    /// makes its small-strain response agree with linear elasticity.
    pub fn snh_lambda(&self) -> f64 {
        self.lambda + self.mu
    }

    pub fn is_invertible(&self) -> bool {
        self.model != Model::NeoHookean
    }

    /// Energy density. Neo-Hookean returns `+inf` for `det F <= 0`.
    pub fn psi(&self, f: &Mat3) -> f64 {
        let (mu, lambda) = (self.mu, self.lambda);
        match self.model {
            Model::Linear => {
                let eps = (f + f.transpose()) * 0.5 - Mat3::identity();
                let tr = eps.trace();
                mu * eps.norm_squared() + 0.5 * lambda * tr * tr
            }
            Model::NeoHookean => {
                let j = f.determinant();
                if j <= 0.0 {
                    return f64::INFINITY;
                }
                let lj = j.ln();
                0.5 * mu * (f.norm_squared() - 3.0) - mu * lj + 0.5 * lambda * lj * lj
            }
            Model::StableNeoHookean => {
                let j = f.determinant();
                let l = self.snh_lambda();
                0.5 * mu * (f.norm_squared() - 3.0) - mu * (j - 1.0) + 0.5 * l * (j - 1.0) * (j - 1.0)
            }
            Model::Corotated => {
                let s = super::eigen::rv_svd(f).sigma;
                let tr = s.sum() - 3.0;
                mu * (s - Vec3::repeat(1.0)).norm_squared() + 0.5 * lambda * tr * tr
            }
        }
    }

    pub fn energy(&self, f: &Mat3, rest_volume: f64) -> f64 {
        self.psi(f) * rest_volume
    }

    /// First Piola-Kirchhoff stress `dPsi/dF`.
    pub fn stress(&self, f: &Mat3) -> Mat3 {
        let (mu, lambda) = (self.mu, self.lambda);
        match self.model {
            Model::Linear => {
                let eps = (f + f.transpose()) * 0.5 - Mat3::identity();
                eps * (2.0 * mu) + Mat3::identity() * (lambda * eps.trace())
            }
            Model::NeoHookean => {
                let j = f.determinant();
                let f_it = cofactor(f) / j;
                (f - f_it) * mu + f_it * (lambda * j.ln())
            }
            Model::StableNeoHookean => {
                let j = f.determinant();
                f * mu + cofactor(f) * (self.snh_lambda() * (j - 1.0) - mu)
            }
            Model::Corotated => {
                let svd = super::eigen::rv_svd(f);
                let r = svd.u * svd.v.transpose();
                (f - r) * (2.0 * mu) + r * (lambda * (svd.sigma.sum() - 3.0))
            }
        }
    }

    /// Energy gradient with respect to the four tet vertices.
    pub fn gradient(&self, f: &Mat3, rows: &[Row3; 4], rest_volume: f64) -> [Vec3; 4] {
        let p = self.stress(f) * rest_volume;
        rows.map(|a| p * a.transpose())
    }
}
