//! Varimax (orthogonal) and Promax (oblique) rotation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Varimax {
    #[serde(with = "crate::serde_matrix")]
    pub loadings: DMatrix<f64>,
    /// Orthogonal `T` with `loadings = input · T`.
    #[serde(with = "crate::serde_matrix")]
    pub rotation: DMatrix<f64>,
    /// Criterion after each sweep (first entry: before rotating).
    pub criterion: Vec<f64>,
}

/// Raw varimax criterion `Σ_f [p Σ_j λ⁴ - (Σ_j λ²)²] / p²`.
pub fn varimax_criterion(lam: &DMatrix<f64>) -> f64 {
    let p = lam.nrows() as f64;
    lam.column_iter()
        .map(|c| {
            let s2: f64 = c.iter().map(|v| v * v).sum();
            let s4: f64 = c.iter().map(|v| v.powi(4)).sum();
            (p * s4 - s2 * s2) / (p * p)
        })
        .sum()
}

/// Kaiser-normalized varimax via pairwise planar rotations. Sweeps stop when
/// the criterion gains less than `tol`.
pub fn rotate_varimax(lam: &DMatrix<f64>, tol: f64, max_sweeps: usize) -> Varimax {
    let (p, k) = lam.shape();
    if k < 2 {
        return Varimax {
            loadings: lam.clone(),
            rotation: DMatrix::identity(k, k),
            criterion: vec![varimax_criterion(lam)],
        };
    }
    let h: Vec<f64> = (0..p)
        .map(|i| lam.row(i).norm().max(f64::MIN_POSITIVE))
        .collect();
    let mut x = DMatrix::from_fn(p, k, |i, j| lam[(i, j)] / h[i]);
    let mut t = DMatrix::<f64>::identity(k, k);
    let mut criterion = vec![varimax_criterion(&x)];
    let pf = p as f64;

    for _ in 0..max_sweeps {
        for a in 0..k - 1 {
            for b in a + 1..k {
                let (mut su, mut sv, mut suu, mut suv) = (0.0, 0.0, 0.0, 0.0);
                for i in 0..p {
                    let (xa, xb) = (x[(i, a)], x[(i, b)]);
                    let u = xa * xa - xb * xb;
                    let v = 2.0 * xa * xb;
                    su += u;
                    sv += v;
                    suu += u * u - v * v;
                    suv += u * v;
                }
                let num = 2.0 * suv - 2.0 * su * sv / pf;
                let den = suu - (su * su - sv * sv) / pf;
                let phi = 0.25 * num.atan2(den);
                if phi.abs() < 1e-15 {
                    continue;
                }
                let (s, c) = phi.sin_cos();
                for i in 0..p {
                    let (xa, xb) = (x[(i, a)], x[(i, b)]);
                    x[(i, a)] = c * xa + s * xb;
                    x[(i, b)] = -s * xa + c * xb;
                }
                for i in 0..k {
                    let (ta, tb) = (t[(i, a)], t[(i, b)]);
                    t[(i, a)] = c * ta + s * tb;
                    t[(i, b)] = -s * ta + c * tb;
                }
            }
        }
        let crit = varimax_criterion(&x);
        let gain = crit - criterion.last().copied().unwrap_or(0.0);
        criterion.push(crit);
        if gain.abs() < tol {
            break;
        }
    }
    Varimax {
        loadings: lam * &t,
        rotation: t,
        criterion,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Promax {
    #[serde(with = "crate::serde_matrix")]
    pub pattern: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub structure: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub phi: DMatrix<f64>,
    /// Full transform from the unrotated loadings: `pattern = input · transform`.
    #[serde(with = "crate::serde_matrix")]
    pub transform: DMatrix<f64>,
}

/// Promax: varimax, then a least-squares fit to the target `v·|v|^{κ-1}`
/// with columns rescaled so the factor correlations have a unit diagonal.
pub fn rotate_promax(
    lam: &DMatrix<f64>,
    kappa: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<Promax> {
    let k = lam.ncols();
    if k < 2 {
        return Ok(Promax {
            pattern: lam.clone(),
            structure: lam.clone(),
            phi: DMatrix::identity(k, k),
            transform: DMatrix::identity(k, k),
        });
    }
    let vm = rotate_varimax(lam, tol, max_sweeps);
    let v = &vm.loadings;
    let target = v.map(|x| x * x.abs().powf(kappa - 1.0));
    let normal = v.transpose() * v;
    let normal_inv = normal.try_inverse().ok_or(Error::DegenerateTarget)?;
    let u = &normal_inv * v.transpose() * &target;
    let utu_inv = (u.transpose() * &u)
        .try_inverse()
        .ok_or(Error::DegenerateTarget)?;
    let scale = DMatrix::from_diagonal(&utu_inv.diagonal().map(f64::sqrt));
    let u = u * scale;
    let u_inv = u.clone().try_inverse().ok_or(Error::DegenerateTarget)?;
    let phi = &u_inv * u_inv.transpose();
    let pattern = v * &u;
    let structure = &pattern * &phi;
    Ok(Promax {
        pattern,
        structure,
        phi,
        transform: &vm.rotation * u,
    })
}
