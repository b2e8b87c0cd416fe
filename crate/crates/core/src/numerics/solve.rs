use alloc::vec;
use alloc::vec::Vec;

use super::matrix::Matrix;
use super::vector::{dot, norm_inf};
use crate::error::{check_len, Error, Result};

const PIVOT_TOL: f64 = 1e-12;

/// Chains up to this many states use the direct balance-equation solve;
/// larger ones fall back to power iteration.
pub const DIRECT_STATIONARY_LIMIT: usize = 500;

struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    /// Gaussian elimination with scaled partial pivoting. A pivot smaller than
    /// `PIVOT_TOL` times the largest entry of its original row is singular.
    fn factor(a: &Matrix) -> Result<Lu> {
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale: Vec<f64> = (0..n).map(|i| norm_inf(a.row(i))).collect();
        for k in 0..n {
            let mut best = k;
            let mut best_ratio = -1.0;
            for i in k..n {
                let s = scale[perm[i]];
                let ratio = if s > 0.0 { lu[(i, k)].abs() / s } else { 0.0 };
                if ratio > best_ratio {
                    best_ratio = ratio;
                    best = i;
                }
            }
            if best_ratio < PIVOT_TOL {
                return Err(Error::SingularMatrix { column: k, pivot: lu[(best, k)] });
            }
            if best != k {
                perm.swap(best, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(best, j)];
                    lu[(best, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dot(&self.lu.row(i)[..i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot(&self.lu.row(i)[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }
}

/// Solves `a x = b` for square nonsingular `a`, with one step of iterative
/// refinement.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::InvalidDimension("solve_linear needs a square matrix"));
    }
    check_len(a.rows(), b.len())?;
    let lu = Lu::factor(a)?;
    let mut x = lu.solve(b);
    let ax = a.mul_vec(&x)?;
    let residual: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let dx = lu.solve(&residual);
    for (xi, d) in x.iter_mut().zip(&dx) {
        *xi += d;
    }
    if !super::vector::all_finite(&x) {
        return Err(Error::SingularMatrix { column: 0, pivot: 0.0 });
    }
    Ok(x)
}

/// `argmin_w ‖Φ w − target‖₂` by Householder QR.
///
/// Fails with `RankDeficient` when a diagonal entry of R (equivalently a pivot
/// of ΦᵀΦ) is negligible relative to the largest column norm.
pub fn least_squares(phi: &Matrix, target: &[f64]) -> Result<Vec<f64>> {
    let (m, d) = (phi.rows(), phi.cols());
    check_len(m, target.len())?;
    if m < d {
        return Err(Error::InvalidDimension("least_squares needs at least as many rows as columns"));
    }
    let mut r = phi.clone();
    let mut y = target.to_vec();
    let max_col = (0..d)
        .map(|j| (0..m).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>())
        .fold(0.0f64, f64::max);
    for k in 0..d {
        let col_norm = libm::sqrt((k..m).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>());
        if col_norm * col_norm <= PIVOT_TOL * max_col || col_norm == 0.0 {
            return Err(Error::RankDeficient { column: k });
        }
        let alpha = if r[(k, k)] > 0.0 { -col_norm } else { col_norm };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        if vnorm_sq > 0.0 {
            for j in k..d {
                let s: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum::<f64>() * 2.0 / vnorm_sq;
                for i in k..m {
                    r[(i, j)] -= s * v[i - k];
                }
            }
            let s: f64 = (k..m).map(|i| v[i - k] * y[i]).sum::<f64>() * 2.0 / vnorm_sq;
            for i in k..m {
                y[i] -= s * v[i - k];
            }
        }
    }
    let mut w = vec![0.0; d];
    for i in (0..d).rev() {
        let s: f64 = (i + 1..d).map(|j| r[(i, j)] * w[j]).sum();
        w[i] = (y[i] - s) / r[(i, i)];
    }
    Ok(w)
}

fn check_stochastic(p: &Matrix) -> Result<()> {
    if !p.is_square() {
        return Err(Error::InvalidDimension("transition matrix must be square"));
    }
    for i in 0..p.rows() {
        let row = p.row(i);
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || row.iter().any(|x| *x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidArgument("transition matrix rows must be probability vectors"));
        }
    }
    Ok(())
}

fn balance_residual(p: &Matrix, mu: &[f64]) -> f64 {
    let mp = p.vec_mul(mu).expect("square");
    mp.iter().zip(mu).map(|(a, b)| (a - b).abs()).sum()
}

/// Stationary distribution `μ` of a row-stochastic matrix, `μᵀP = μᵀ`.
///
/// Up to [`DIRECT_STATIONARY_LIMIT`] states this solves `(Pᵀ − I)μ = 0` with one
/// balance equation replaced by `Σμ = 1`. A chain without a unique stationary
/// distribution makes that system singular and is reported as `NoConvergence`.
pub fn stationary_distribution(p: &Matrix) -> Result<Vec<f64>> {
    check_stochastic(p)?;
    let n = p.rows();
    if n > DIRECT_STATIONARY_LIMIT {
        return stationary_distribution_power(p, 1_000_000);
    }
    let mut m = p.transpose().sub(&Matrix::identity(n))?;
    for j in 0..n {
        m[(n - 1, j)] = 1.0;
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let mut mu = solve_linear(&m, &rhs).map_err(|_| Error::NoConvergence { iterations: 0 })?;
    if mu.iter().any(|x| *x < -1e-12) {
        return Err(Error::NoConvergence { iterations: 0 });
    }
    for x in mu.iter_mut() {
        *x = x.max(0.0);
    }
    let total: f64 = mu.iter().sum();
    for x in mu.iter_mut() {
        *x /= total;
    }
    if balance_residual(p, &mu) > 1e-10 {
        return Err(Error::NoConvergence { iterations: 0 });
    }
    Ok(mu)
}

/// Power iteration `μ ← μP` started from the first state. Oscillating
/// (periodic) and slowly mixing chains exhaust `max_iter`.
pub fn stationary_distribution_power(p: &Matrix, max_iter: usize) -> Result<Vec<f64>> {
    check_stochastic(p)?;
    let n = p.rows();
    let mut mu = vec![0.0; n];
    mu[0] = 1.0;
    for _ in 0..max_iter {
        let next = p.vec_mul(&mu)?;
        let change: f64 = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        mu = next;
        if change < 1e-13 {
            let total: f64 = mu.iter().sum();
            mu.iter_mut().for_each(|x| *x /= total);
            return Ok(mu);
        }
    }
    Err(Error::NoConvergence { iterations: max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn random_matrix(rng: &mut RngStream, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| 2.0 * rng.uniform() - 1.0)
    }

    fn well_conditioned(rng: &mut RngStream, n: usize) -> Matrix {
        let mut a = random_matrix(rng, n, n);
        for i in 0..n {
            a[(i, i)] += n as f64;
        }
        a
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let x = solve_linear(&Matrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
        let a = Matrix::diagonal(&[2.0, 4.0]);
        assert_eq!(solve_linear(&a, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn solve_forward_constructed() {
        let mut rng = RngStream::new(11, 0);
        let a = well_conditioned(&mut rng, 5);
        let x0: Vec<f64> = (0..5).map(|_| rng.uniform() * 4.0 - 2.0).collect();
        let b = a.mul_vec(&x0).unwrap();
        let x = solve_linear(&a, &b).unwrap();
        for (u, v) in x.iter().zip(&x0) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn solve_residual_bound_on_many_systems() {
        let mut rng = RngStream::new(12, 0);
        for k in 0..1000 {
            let n = 1 + k % 20;
            let a = well_conditioned(&mut rng, n);
            let b: Vec<f64> = (0..n).map(|_| rng.uniform() * 10.0 - 5.0).collect();
            let x = solve_linear(&a, &b).unwrap();
            let ax = a.mul_vec(&x).unwrap();
            let res = norm_inf(&crate::numerics::vector::sub(&ax, &b));
            assert!(res <= 1e-9 * (1.0 + norm_inf(&b)), "n={n} residual {res}");
        }
    }

    #[test]
    fn singular_is_detected() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(matches!(solve_linear(&a, &[1.0, 1.0]), Err(Error::SingularMatrix { .. })));
        assert!(solve_linear(&Matrix::zeros(2, 2), &[0.0, 0.0]).is_err());
    }

    #[test]
    fn least_squares_cases() {
        let t = [0.3, -1.0, 2.5];
        let w = least_squares(&Matrix::identity(3), &t).unwrap();
        for (a, b) in w.iter().zip(&t) {
            assert!((a - b).abs() < 1e-14);
        }
        let ones = Matrix::new(3, 1, vec![1.0; 3]).unwrap();
        let w = least_squares(&ones, &[0.0, 1.0, 2.0]).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-14);

        let mut rng = RngStream::new(13, 0);
        let phi = random_matrix(&mut rng, 20, 5);
        let w0: Vec<f64> = (0..5).map(|_| rng.uniform()).collect();
        let w = least_squares(&phi, &phi.mul_vec(&w0).unwrap()).unwrap();
        for (a, b) in w.iter().zip(&w0) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn least_squares_residual_is_orthogonal() {
        let mut rng = RngStream::new(14, 0);
        for _ in 0..200 {
            let m = 20;
            let phi = random_matrix(&mut rng, m, 6);
            let t: Vec<f64> = (0..m).map(|_| rng.uniform() * 3.0).collect();
            let w = least_squares(&phi, &t).unwrap();
            let r = crate::numerics::vector::sub(&phi.mul_vec(&w).unwrap(), &t);
            let g = phi.vec_mul(&r).unwrap();
            assert!(norm_inf(&g) <= 1e-8 * m as f64);
        }
    }

    #[test]
    fn least_squares_rank_deficient() {
        let phi = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        assert!(matches!(least_squares(&phi, &[1.0, 2.0, 3.0]), Err(Error::RankDeficient { column: 1 })));
    }

    #[test]
    fn stationary_cases() {
        assert!(matches!(stationary_distribution(&Matrix::identity(2)), Err(Error::NoConvergence { .. })));

        let flip = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let mu = stationary_distribution(&flip).unwrap();
        assert!((mu[0] - 0.5).abs() < 1e-15 && (mu[1] - 0.5).abs() < 1e-15);
        assert!(matches!(stationary_distribution_power(&flip, 10_000), Err(Error::NoConvergence { .. })));

        // balance: 0.1 μ0 = 0.5 μ1 → μ = (5/6, 1/6)
        let p = Matrix::from_rows(&[[0.9, 0.1], [0.5, 0.5]]).unwrap();
        let mu = stationary_distribution(&p).unwrap();
        assert!((mu[0] - 5.0 / 6.0).abs() < 1e-14);
        assert!((mu[1] - 1.0 / 6.0).abs() < 1e-14);
        let mu_pow = stationary_distribution_power(&p, 10_000).unwrap();
        assert!((mu_pow[0] - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_rejects_non_stochastic() {
        let p = Matrix::from_rows(&[[0.5, 0.6], [0.5, 0.5]]).unwrap();
        assert!(matches!(stationary_distribution(&p), Err(Error::InvalidArgument(_))));
    }
}
