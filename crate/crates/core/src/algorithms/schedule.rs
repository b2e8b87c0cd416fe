use crate::error::{Error, Result};

/// Closed-form step-size sequences indexed from `n = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "kind", rename_all = "snake_case")
)]
pub enum StepSizeSchedule {
    /// `α_n = c`
    Constant { c: f64 },
    /// `α_n = c / nˢ`
    Polynomial { c: f64, s: f64 },
    /// `α_n = α₁ / (α₁ · rate · (n − 1) + 1)`. With `rate = λ_min(Σ)(1 − γ)`
    /// this is the schedule under which implicit TD(0) enjoys an O(1/n)
    /// mean-square bound.
    RescaledHarmonic { alpha1: f64, rate: f64 },
}

impl StepSizeSchedule {
    pub fn rescaled_harmonic(alpha1: f64, lambda_min: f64, gamma: f64) -> Self {
        StepSizeSchedule::RescaledHarmonic { alpha1, rate: lambda_min * (1.0 - gamma) }
    }

    #[inline]
    pub fn value(&self, n: u64) -> f64 {
        debug_assert!(n >= 1);
        match *self {
            StepSizeSchedule::Constant { c } => c,
            StepSizeSchedule::Polynomial { c, s } => c / libm::pow(n as f64, s),
            StepSizeSchedule::RescaledHarmonic { alpha1, rate } => alpha1 / (alpha1 * rate * (n - 1) as f64 + 1.0),
        }
    }

    /// The leading constant (`c` or `α₁`).
    pub fn leading(&self) -> f64 {
        match *self {
            StepSizeSchedule::Constant { c } | StepSizeSchedule::Polynomial { c, .. } => c,
            StepSizeSchedule::RescaledHarmonic { alpha1, .. } => alpha1,
        }
    }

    /// Same shape with a different leading constant.
    pub fn with_leading(&self, value: f64) -> Self {
        match *self {
            StepSizeSchedule::Constant { .. } => StepSizeSchedule::Constant { c: value },
            StepSizeSchedule::Polynomial { s, .. } => StepSizeSchedule::Polynomial { c: value, s },
            StepSizeSchedule::RescaledHarmonic { rate, .. } => StepSizeSchedule::RescaledHarmonic { alpha1: value, rate },
        }
    }

    /// Positive and non-increasing in `n`.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSizeSchedule::Constant { c } => c.is_finite() && c > 0.0,
            StepSizeSchedule::Polynomial { c, s } => c.is_finite() && c > 0.0 && s.is_finite() && s >= 0.0,
            StepSizeSchedule::RescaledHarmonic { alpha1, rate } => {
                alpha1.is_finite() && alpha1 > 0.0 && rate.is_finite() && rate >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("step-size schedule must be positive and non-increasing"))
        }
    }
}
