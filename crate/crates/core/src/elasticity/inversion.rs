//! Step bounds that keep non-invertible elements from collapsing.

use rayon::prelude::*;

use super::material::Material;
use crate::{Mat3, Vec3};

/// Fraction of the current determinant that must remain along the step.
pub const C_INV: f64 = 0.2;
/// Safety factor applied to the first crossing.
pub const STEP_SCALE: f64 = 0.9;

fn adjugate(m: &Mat3) -> Mat3 {
    super::material::cofactor(m).transpose()
}

/// Coefficients `[c0, c1, c2, c3]` of `det(A + tB)`.
pub fn det_polynomial(a: &Mat3, b: &Mat3) -> [f64; 4] {
    [
        a.determinant(),
        (adjugate(a) * b).trace(),
        (adjugate(b) * a).trace(),
        b.determinant(),
    ]
}

fn eval(c: &[f64; 4], t: f64) -> f64 {
    ((c[3] * t + c[2]) * t + c[1]) * t + c[0]
}

/// Smallest root of the cubic `c` in `(0, t_max]`, if any.
pub fn smallest_positive_root(c: &[f64; 4], t_max: f64) -> Option<f64> {
    // Split [0, t_max] at the critical points so each piece is monotone.
    let mut knots = vec![0.0, t_max];
    let (a, b, cc) = (3.0 * c[3], 2.0 * c[2], c[1]);
    if a != 0.0 {
        let disc = b * b - 4.0 * a * cc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            knots.push((-b - sq) / (2.0 * a));
            knots.push((-b + sq) / (2.0 * a));
        }
    } else if b != 0.0 {
        knots.push(-cc / b);
    }
    knots.retain(|t| *t >= 0.0 && *t <= t_max);
    knots.sort_by(f64::total_cmp);
    for w in knots.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (eval(c, lo), eval(c, hi));
        if flo == 0.0 && lo > 0.0 {
            return Some(lo);
        }
        if flo.signum() == fhi.signum() && fhi != 0.0 {
            continue;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if (eval(c, mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Some(lo);
    }
    None
}

/// Largest step `alpha <= 1` along `p` from `x` that keeps every
/// non-invertible element above `C_INV` of its current volume.
pub fn inversion_safe_step(tets: &[[usize; 4]], materials: &[Material], x: &[Vec3], p: &[Vec3]) -> f64 {
    bounded_step(tets, materials, x, p, C_INV, 1.0 / STEP_SCALE)
}

/// Largest fraction of the segment `x -> x + p` along which no
/// non-invertible element changes orientation.
pub fn inversion_free_fraction(tets: &[[usize; 4]], materials: &[Material], x: &[Vec3], p: &[Vec3]) -> f64 {
    bounded_step(tets, materials, x, p, 0.0, 1.0)
}

fn bounded_step(tets: &[[usize; 4]], materials: &[Material], x: &[Vec3], p: &[Vec3], keep: f64, t_max: f64) -> f64 {
    tets.par_iter()
        .zip(materials.par_iter())
        .filter(|(_, m)| !m.is_invertible())
        .map(|(t, _)| {
            let a = Mat3::from_columns(&[x[t[1]] - x[t[0]], x[t[2]] - x[t[0]], x[t[3]] - x[t[0]]]);
            let b = Mat3::from_columns(&[p[t[1]] - p[t[0]], p[t[2]] - p[t[0]], p[t[3]] - p[t[0]]]);
            if b == Mat3::zeros() {
                return 1.0;
            }
            let mut c = det_polynomial(&a, &b);
            c[0] *= 1.0 - keep;
            match smallest_positive_root(&c, t_max) {
                Some(t) => (STEP_SCALE * t).min(1.0),
                None => 1.0,
            }
        })
        .reduce(|| 1.0, f64::min)
}
