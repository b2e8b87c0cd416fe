use alloc::vec;
use alloc::vec::Vec;

use super::matrix::Matrix;
use crate::error::{Error, Result};

const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 200;
const SYMMETRY_TOL: f64 = 1e-10;

/// Eigen-decomposition of a symmetric matrix, `S = V diag(values) Vᵀ`.
/// Eigenvectors are the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

fn check_symmetric(s: &Matrix) -> Result<()> {
    let asym = s.asymmetry().ok_or(Error::InvalidDimension("symmetric matrix must be square"))?;
    if asym > SYMMETRY_TOL * s.max_abs().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// Cyclic Jacobi rotations until the off-diagonal mass falls below
/// `1e-12 · ‖S‖_F`.
pub fn symmetric_eigen(s: &Matrix) -> Result<SymmetricEigen> {
    check_symmetric(s)?;
    let n = s.rows();
    let mut a = s.clone();
    // symmetrize exactly so rotations act on a truly symmetric matrix
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    let mut converged = n <= 1 || scale == 0.0;
    let mut sweep = 0;
    while !converged && sweep < MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if libm::sqrt(off) <= JACOBI_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
        sweep += 1;
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: MAX_SWEEPS });
    }
    Ok(SymmetricEigen { values: (0..n).map(|i| a[(i, i)]).collect(), vectors: v })
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue_sym(s: &Matrix) -> Result<f64> {
    let eig = symmetric_eigen(s)?;
    eig.values.iter().copied().reduce(f64::min).ok_or(Error::EmptyInput)
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix. Eigenvalues at or
/// below `rel_tol · max|λ|` are treated as zero.
pub fn pinv_sym(s: &Matrix, rel_tol: f64) -> Result<Matrix> {
    let eig = symmetric_eigen(s)?;
    let n = s.rows();
    let cutoff = rel_tol * eig.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut out = Matrix::zeros(n, n);
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam.abs() <= cutoff {
            continue;
        }
        let vk = eig.vectors.column(k);
        out.add_scaled_assign(1.0 / lam, &Matrix::outer(&vk, &vk));
    }
    Ok(out)
}

/// Numerical rank: counts eigenvalues of the Gram matrix (squared singular
/// values) above `rel_tol` times the largest.
pub fn rank(m: &Matrix, rel_tol: f64) -> Result<usize> {
    let gram = if m.rows() <= m.cols() {
        m.matmul(&m.transpose())?
    } else {
        m.transpose().matmul(m)?
    };
    let eig = symmetric_eigen(&gram)?;
    let top = eig.values.iter().fold(0.0f64, |a, b| a.max(*b));
    Ok(eig.values.iter().filter(|s| **s > rel_tol * top && **s > 0.0).count())
}

/// Reduces a general square matrix to upper Hessenberg form by stabilized
/// elementary similarity transforms. Entries below the subdiagonal are zeroed.
fn hessenberg(a: &mut Matrix) {
    let n = a.rows();
    for m in 1..n.saturating_sub(1) {
        let mut x = 0.0f64;
        let mut piv = m;
        for j in m..n {
            if a[(j, m - 1)].abs() > x.abs() {
                x = a[(j, m - 1)];
                piv = j;
            }
        }
        if piv != m {
            for j in m - 1..n {
                let t = a[(piv, j)];
                a[(piv, j)] = a[(m, j)];
                a[(m, j)] = t;
            }
            for j in 0..n {
                let t = a[(j, piv)];
                a[(j, piv)] = a[(j, m)];
                a[(j, m)] = t;
            }
        }
        if x != 0.0 {
            for i in m + 1..n {
                let mut y = a[(i, m - 1)];
                if y != 0.0 {
                    y /= x;
                    a[(i, m - 1)] = y;
                    for j in m..n {
                        a[(i, j)] -= y * a[(m, j)];
                    }
                    for j in 0..n {
                        a[(j, m)] += y * a[(j, i)];
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..i.saturating_sub(1) {
            a[(i, j)] = 0.0;
        }
    }
}

#[inline]
fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix. Returns
/// `(re, im)` pairs; complex eigenvalues come in conjugate pairs.
fn hessenberg_qr(a: &mut Matrix) -> Result<Vec<(f64, f64)>> {
    let n = a.rows();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    let mut total_its = 0usize;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l >= 1 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() + s == s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[(nu, nu)];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[(nu - 1, nu - 1)];
            let mut w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = libm::sqrt(q.abs());
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nu - 1] = x + z;
                    wr[nu] = x + z;
                    if z != 0.0 {
                        wr[nu] = x - w / z;
                    }
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                nn -= 2;
                break;
            }
            if its == 60 {
                return Err(Error::NoConvergence { iterations: total_its });
            }
            if its == 10 || its == 20 || its == 40 {
                t += x;
                for i in 0..=nu {
                    a[(i, i)] -= x;
                }
                let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total_its += 1;
            let (mut p, mut q, mut r);
            let mut m = nu - 2;
            loop {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                a[(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[(i, i - 3)] = 0.0;
                }
            }
            let mut xk = 0.0;
            for k in m..nu {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k != nu - 1 { a[(k + 2, k - 1)] } else { 0.0 };
                    xk = p.abs() + q.abs() + r.abs();
                    if xk != 0.0 {
                        p /= xk;
                        q /= xk;
                        r /= xk;
                    }
                }
                let s = sign(libm::sqrt(p * p + q * q + r * r), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[(k, k - 1)] = -a[(k, k - 1)];
                        }
                    } else {
                        a[(k, k - 1)] = -s * xk;
                    }
                    p += s;
                    let x1 = p / s;
                    let y1 = q / s;
                    let z1 = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                        if k != nu - 1 {
                            pp += r * a[(k + 2, j)];
                            a[(k + 2, j)] -= pp * z1;
                        }
                        a[(k + 1, j)] -= pp * y1;
                        a[(k, j)] -= pp * x1;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x1 * a[(i, k)] + y1 * a[(i, k + 1)];
                        if k != nu - 1 {
                            pp += z1 * a[(i, k + 2)];
                            a[(i, k + 2)] -= pp * r;
                        }
                        a[(i, k + 1)] -= pp * q;
                        a[(i, k)] -= pp;
                    }
                }
            }
        }
    }
    Ok(wr.into_iter().zip(wi).collect())
}

/// All eigenvalues of a general square matrix as `(re, im)` pairs.
pub fn eigenvalues(c: &Matrix) -> Result<Vec<(f64, f64)>> {
    if !c.is_square() {
        return Err(Error::InvalidDimension("eigenvalues need a square matrix"));
    }
    let mut h = c.clone();
    hessenberg(&mut h);
    hessenberg_qr(&mut h)
}

/// `min |λ(c)|` over the spectrum of a square matrix. Symmetric input goes
/// through Jacobi; anything else through shifted QR.
pub fn min_abs_eigenvalue(c: &Matrix) -> Result<f64> {
    let asym = c.asymmetry().ok_or(Error::InvalidDimension("eigenvalues need a square matrix"))?;
    if c.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    if asym <= 1e-12 * c.max_abs().max(1.0) {
        let eig = symmetric_eigen(c)?;
        return Ok(eig.values.iter().fold(f64::INFINITY, |m, x| m.min(x.abs())));
    }
    let ev = eigenvalues(c)?;
    Ok(ev.iter().fold(f64::INFINITY, |m, (re, im)| m.min(libm::hypot(*re, *im))))
}
