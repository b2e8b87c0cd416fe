use alloc::vec::Vec;

use crate::environments::{FeatureMap, Transition};
use crate::error::{check_len, Error, Result};
use crate::numerics::{solve_linear, vector, Matrix};

/// `sqrt(Σ_x weights(x) (φ(x)ᵀw − v*(x))²)`.
pub fn rmsve(w: &[f64], features: &FeatureMap, v_star: &[f64], weights: &[f64]) -> Result<f64> {
    check_len(features.d(), w.len())?;
    check_len(features.n_states(), v_star.len())?;
    check_len(features.n_states(), weights.len())?;
    if weights.iter().any(|p| *p < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("value-error weights must be a probability vector"));
    }
    let mut acc = 0.0;
    for (x, (&p, &v)) in weights.iter().zip(v_star).enumerate() {
        if p > 0.0 {
            let e = vector::dot(features.phi(x), w) - v;
            acc += p * e * e;
        }
    }
    Ok(libm::sqrt(acc))
}

/// `sqrt((Aw + b)ᵀ Σ_b⁻¹ (Aw + b))`, with `Σ_b` the behavior feature
/// covariance. Fails when `Σ_b` is singular.
pub fn rmspbe(w: &[f64], a: &Matrix, b: &[f64], sigma_b: &Matrix) -> Result<f64> {
    let g = bellman_direction(w, a, b)?;
    let y = solve_linear(sigma_b, &g)?;
    Ok(libm::sqrt(vector::dot(&g, &y).max(0.0)))
}

/// [`rmspbe`] with a precomputed inverse or pseudo-inverse of `Σ_b`.
pub fn rmspbe_with_inverse(w: &[f64], a: &Matrix, b: &[f64], sigma_inv: &Matrix) -> Result<f64> {
    let g = bellman_direction(w, a, b)?;
    let y = sigma_inv.mul_vec(&g)?;
    Ok(libm::sqrt(vector::dot(&g, &y).max(0.0)))
}

fn bellman_direction(w: &[f64], a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    check_len(a.rows(), b.len())?;
    let mut g = a.mul_vec(w)?;
    for (gi, bi) in g.iter_mut().zip(b) {
        *gi += bi;
    }
    Ok(g)
}

/// `‖w − w*‖₂`
pub fn param_error(w: &[f64], w_star: &[f64]) -> Result<f64> {
    check_len(w_star.len(), w.len())?;
    Ok(vector::distance(w, w_star))
}

/// Root mean square of `δ = r + γφ(x')ᵀw − φ(x)ᵀw` over a batch of
/// transitions.
pub fn rmstde(w: &[f64], transitions: &[Transition], features: &FeatureMap, gamma: f64) -> Result<f64> {
    check_len(features.d(), w.len())?;
    if transitions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: f64 = transitions
        .iter()
        .map(|t| {
            let d = t.r + gamma * vector::dot(features.phi(t.x_next), w) - vector::dot(features.phi(t.x), w);
            d * d
        })
        .sum();
    Ok(libm::sqrt(sum / transitions.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::make_baird;
    use crate::numerics::{least_squares, RngStream};

    #[test]
    fn rmsve_cases() {
        let (_, phi) = make_baird();
        assert_eq!(rmsve(&[0.0; 8], &phi, &[0.0; 7], &[1.0 / 7.0; 7]).unwrap(), 0.0);

        let fm = FeatureMap::new(Matrix::from_rows(&[[1.0], [2.0]]).unwrap()).unwrap();
        // values (0.5, 1.0) vs (1, 0): errors (−0.5, 1.0), uniform → sqrt(0.625)
        let got = rmsve(&[0.5], &fm, &[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((got - 0.625f64.sqrt()).abs() < 1e-15);

        let mut rng = RngStream::new(1, 0);
        let m = Matrix::from_fn(8, 3, |_, _| rng.uniform());
        let w0 = [0.3, -0.1, 2.0];
        let v = m.mul_vec(&w0).unwrap();
        let fm = FeatureMap::new(m.clone()).unwrap();
        let w = least_squares(&m, &v).unwrap();
        assert!(rmsve(&w, &fm, &v, &[0.125; 8]).unwrap() < 1e-12);
        assert!(rmsve(&w, &fm, &v, &[0.2; 8]).is_err());
    }

    #[test]
    fn rmspbe_vanishes_at_fixed_point() {
        let a = Matrix::from_rows(&[[-1.0, 0.2], [0.1, -0.5]]).unwrap();
        let b = [0.3, -0.4];
        let w = crate::oracle::td_fixed_point(&a, &b).unwrap();
        let sigma = Matrix::from_rows(&[[0.6, 0.1], [0.1, 0.4]]).unwrap();
        assert!(rmspbe(&w, &a, &b, &sigma).unwrap() < 1e-12);
        assert_eq!(rmspbe(&[0.0, 0.0], &a, &[0.0, 0.0], &sigma).unwrap(), 0.0);
        assert!(rmspbe(&w, &a, &b, &Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn param_error_cases() {
        assert_eq!(param_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(param_error(&[4.0, 6.0], &[1.0, 2.0]).unwrap(), 5.0);
        assert!(param_error(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rmstde_cases() {
        let (env, phi) = make_baird();
        let mut rng = RngStream::new(2, 0);
        let ts: Vec<_> = (0..100).map(|k| env.sample_transition(k % 7, &mut rng)).collect();
        assert_eq!(rmstde(&[0.0; 8], &ts, &phi, 0.99).unwrap(), 0.0);
        assert_eq!(rmstde(&[0.0; 8], &[], &phi, 0.99), Err(Error::EmptyInput));
        let t = Transition { x: 0, r: 0.0, x_next: 6, rho: 7.0, terminal: false };
        let w = crate::environments::baird_initial_weights();
        // φ(0)ᵀw = 3, φ(6)ᵀw = 12 → δ = 0.99·12 − 3
        let got = rmstde(&w, &[t], &phi, 0.99).unwrap();
        assert!((got - (0.99 * 12.0 - 3.0)).abs() < 1e-12);
    }
}
