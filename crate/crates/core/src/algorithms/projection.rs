use alloc::vec::Vec;

use crate::numerics::vector;

/// Euclidean projection onto the ball of radius `radius`:
/// `R w / ‖w‖` when `‖w‖ > R`, otherwise `w`.
pub fn project(w: &[f64], radius: f64) -> Vec<f64> {
    let mut out = w.to_vec();
    project_in_place(&mut out, radius);
    out
}

/// In-place [`project`]. Returns whether the vector was rescaled.
pub fn project_in_place(w: &mut [f64], radius: f64) -> bool {
    debug_assert!(radius > 0.0);
    let norm = vector::norm(w);
    if norm > radius {
        let s = radius / norm;
        w.iter_mut().for_each(|v| *v *= s);
        true
    } else {
        false
    }
}
