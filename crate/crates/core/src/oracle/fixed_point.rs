use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::numerics::{pinv_sym, solve_linear, Matrix};

/// Root of `A w + b = 0`.
pub fn td_fixed_point(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let neg_b: Vec<f64> = b.iter().map(|v| -v).collect();
    solve_linear(a, &neg_b)
}

/// Minimum-norm least-squares root of `A w + b = 0`, `w = −(AᵀA)⁺Aᵀb`, for
/// singular `A` (Baird's rank-deficient features).
pub fn td_fixed_point_min_norm(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    check_len(a.rows(), b.len())?;
    let ata = a.transpose().matmul(a)?;
    let atb = a.vec_mul(b)?;
    let w = pinv_sym(&ata, 1e-12)?.mul_vec(&atb)?;
    Ok(w.into_iter().map(|v| -v).collect())
}

/// Direct solve of `(I + scale · d dᵀ) w' = w + drift`, the defining equation
/// of every implicit update here. Used as the reference for the closed forms.
pub fn implicit_fixed_point_solve(w: &[f64], direction: &[f64], scale: f64, drift: &[f64]) -> Result<Vec<f64>> {
    check_len(w.len(), direction.len())?;
    check_len(w.len(), drift.len())?;
    if !(scale >= 0.0) {
        return Err(Error::InvalidArgument("implicit scale must be nonnegative"));
    }
    let n = w.len();
    let m = Matrix::identity(n).add(&Matrix::outer(direction, direction).scale(scale))?;
    let rhs: Vec<f64> = w.iter().zip(drift).map(|(a, b)| a + b).collect();
    solve_linear(&m, &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{vector, RngStream};
    use alloc::vec;

    #[test]
    fn trivial_fixed_points() {
        let a = Matrix::identity(2).scale(-1.0);
        assert_eq!(td_fixed_point(&a, &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        let a = Matrix::from_rows(&[[-2.0, 0.5], [0.1, -1.0]]).unwrap();
        assert!(td_fixed_point(&a, &[0.0, 0.0]).unwrap().iter().all(|v| *v == 0.0));
        let sing = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(td_fixed_point(&sing, &[1.0, 0.0]).is_err());
        assert_eq!(td_fixed_point_min_norm(&sing, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn degenerate_implicit_solves() {
        let w = [1.0, -2.0, 0.5];
        let drift = [0.1, 0.2, 0.3];
        let plain = [1.1, -1.8, 0.8];
        for got in [
            implicit_fixed_point_solve(&w, &[1.0, 2.0, 3.0], 0.0, &drift).unwrap(),
            implicit_fixed_point_solve(&w, &[0.0; 3], 4.0, &drift).unwrap(),
        ] {
            assert!(vector::distance(&got, &plain) < 1e-15);
        }
    }

    #[test]
    fn agrees_with_sherman_morrison_closed_form() {
        let mut rng = RngStream::new(6, 0);
        let d = 6;
        let w: Vec<f64> = (0..d).map(|_| rng.uniform() - 0.5).collect();
        let phi: Vec<f64> = (0..d).map(|_| rng.uniform() - 0.5).collect();
        let phi_next: Vec<f64> = (0..d).map(|_| rng.uniform() - 0.5).collect();
        let (alpha, r, g) = (3.0, 0.7, 0.9);
        let c = r + g * vector::dot(&phi_next, &w);
        let drift: Vec<f64> = phi.iter().map(|p| alpha * c * p).collect();
        let got = implicit_fixed_point_solve(&w, &phi, alpha, &drift).unwrap();
        let delta = c - vector::dot(&phi, &w);
        let eff = alpha / (1.0 + alpha * vector::norm_sq(&phi));
        let mut want = w.clone();
        vector::axpy(eff * delta, &phi, &mut want);
        assert!(vector::distance(&got, &want) <= 1e-12);
    }
}
