use core::fmt;

use crate::error::Error;

/// Step-size sequence `a_n`, `n >= 1`.
///
/// Both forms are positive, non-increasing, not summable and square
/// summable. For `PolynomialDecay` the last two hold because `gamma` is
/// restricted to `(0.5, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `a_n = 1/n`
    Harmonic,
    /// `a_n = a0 / (n + n0)^gamma`
    PolynomialDecay { a0: f64, n0: u64, gamma: f64 },
}

impl StepSchedule {
    pub fn polynomial_decay(a0: f64, n0: u64, gamma: f64) -> Result<Self, Error> {
        let s = StepSchedule::PolynomialDecay { a0, n0, gamma };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if let StepSchedule::PolynomialDecay { a0, gamma, .. } = *self {
            if !(a0 > 0.0 && a0.is_finite()) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "step-size scale a0 must be positive, got {a0}"
                )));
            }
            if !(gamma > 0.5 && gamma <= 1.0) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "step-size exponent gamma must lie in (0.5, 1], got {gamma}"
                )));
            }
        }
        Ok(())
    }

    /// `a_n`. Panics if `n == 0`.
    #[inline]
    pub fn step_size(&self, n: u64) -> f64 {
        assert!(n >= 1, "step sizes are indexed from 1");
        match *self {
            StepSchedule::Harmonic => 1.0 / n as f64,
            StepSchedule::PolynomialDecay { a0, n0, gamma } => {
                let base = (n + n0) as f64;
                if gamma == 1.0 {
                    a0 / base
                } else {
                    a0 / libm::pow(base, gamma)
                }
            }
        }
    }
}

impl fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSchedule::Harmonic => f.write_str("harmonic"),
            StepSchedule::PolynomialDecay { a0, n0, gamma } => {
                write!(f, "polynomial-decay(a0={a0}, n0={n0}, gamma={gamma})")
            }
        }
    }
}
