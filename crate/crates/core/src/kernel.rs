//! Smoothing kernels and their bandwidth-scaled forms.
//!
//! A kernel `K` integrates to one; its scaled version is
//! `K_eps(x) = eps^-p * K(x / eps)`. The estimator only needs the gradient of
//! `K_eps`, the oracles need both.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_PI, PI};
use core::fmt;
use core::str::FromStr;

use crate::error::{check_dim, Error};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Below this |u| the Fejer kernel is evaluated from its Taylor series.
const FEJER_SERIES_CUTOFF: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    /// `exp(-x^2/2) / sqrt(2 pi)`
    Gaussian,
    /// `1 / (pi (1 + x^2))`
    Cauchy,
    /// `sin^2(x) / (pi x^2)`
    Fejer,
    /// `(2 pi)^(-p/2) exp(-x.x/2)`
    MultivariateGaussian,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 4] = [
        KernelFamily::Gaussian,
        KernelFamily::Cauchy,
        KernelFamily::Fejer,
        KernelFamily::MultivariateGaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Cauchy => "cauchy",
            KernelFamily::Fejer => "fejer",
            KernelFamily::MultivariateGaussian => "multivariate-gaussian",
        }
    }

    /// Whether the kernel has Gaussian tails (used to truncate quadrature).
    pub fn is_gaussian(self) -> bool {
        matches!(
            self,
            KernelFamily::Gaussian | KernelFamily::MultivariateGaussian
        )
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "gaussian" | "normal" => Ok(KernelFamily::Gaussian),
            "cauchy" => Ok(KernelFamily::Cauchy),
            "fejer" => Ok(KernelFamily::Fejer),
            "multivariate-gaussian" | "mvgaussian" | "mv-gaussian" => {
                Ok(KernelFamily::MultivariateGaussian)
            }
            other => Err(Error::InvalidParameter(alloc::format!(
                "unknown kernel family `{other}`"
            ))),
        }
    }
}

/// A kernel family with its bandwidth and dimension. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    epsilon: f64,
    dim: usize,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, epsilon: f64, dim: usize) -> Result<Self, Error> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "kernel bandwidth must be positive and finite, got {epsilon}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("kernel dimension must be >= 1".into()));
        }
        if dim != 1 && family != KernelFamily::MultivariateGaussian {
            return Err(Error::InvalidParameter(alloc::format!(
                "{family} kernel is univariate, got dimension {dim}"
            )));
        }
        Ok(KernelSpec {
            family,
            epsilon,
            dim,
        })
    }

    /// The Gaussian kernel for `dim = 1`, the multivariate Gaussian otherwise.
    pub fn gaussian(epsilon: f64, dim: usize) -> Result<Self, Error> {
        let family = if dim == 1 {
            KernelFamily::Gaussian
        } else {
            KernelFamily::MultivariateGaussian
        };
        KernelSpec::new(family, epsilon, dim)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `K_eps(x)`.
    pub fn value(&self, x: &[f64]) -> Result<f64, Error> {
        check_dim(self.dim, x.len())?;
        Ok(self.value_unchecked(x))
    }

    /// `grad K_eps(x)` as a fresh vector.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>, Error> {
        let mut out = vec![0.0; self.dim];
        self.grad_into(x, &mut out)?;
        Ok(out)
    }

    /// `grad K_eps(x)` written into `out`, for allocation-free hot loops.
    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), Error> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, out.len())?;
        self.grad_unchecked(x, out);
        Ok(())
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        let eps = self.epsilon;
        match self.family {
            KernelFamily::Gaussian | KernelFamily::MultivariateGaussian => {
                let sq: f64 = x.iter().map(|v| v * v).sum::<f64>() / (eps * eps);
                gaussian_norm(self.dim, eps) * libm::exp(-0.5 * sq)
            }
            KernelFamily::Cauchy => {
                let u = x[0] / eps;
                FRAC_1_PI / (eps * (1.0 + u * u))
            }
            KernelFamily::Fejer => fejer(x[0] / eps) / eps,
        }
    }

    pub(crate) fn grad_unchecked(&self, x: &[f64], out: &mut [f64]) {
        let eps = self.epsilon;
        match self.family {
            KernelFamily::Gaussian | KernelFamily::MultivariateGaussian => {
                let inv_eps2 = 1.0 / (eps * eps);
                let sq: f64 = x.iter().map(|v| v * v).sum::<f64>() * inv_eps2;
                let scale = -gaussian_norm(self.dim, eps) * libm::exp(-0.5 * sq) * inv_eps2;
                for (o, v) in out.iter_mut().zip(x) {
                    *o = scale * v;
                }
            }
            KernelFamily::Cauchy => {
                let u = x[0] / eps;
                let d = 1.0 + u * u;
                out[0] = -2.0 * u * FRAC_1_PI / (d * d) / (eps * eps);
            }
            KernelFamily::Fejer => out[0] = fejer_deriv(x[0] / eps) / (eps * eps),
        }
    }
}

/// `(2 pi)^(-p/2) eps^-p`
fn gaussian_norm(dim: usize, eps: f64) -> f64 {
    let mut c = 1.0;
    for _ in 0..dim {
        c *= INV_SQRT_2PI / eps;
    }
    c
}

fn fejer(u: f64) -> f64 {
    if u.abs() < FEJER_SERIES_CUTOFF {
        // sin^2(u)/u^2 = 1 - u^2/3 + 2u^4/45 - u^6/315 + 2u^8/14175
        let u2 = u * u;
        FRAC_1_PI * (1.0 + u2 * (-1.0 / 3.0 + u2 * (2.0 / 45.0 + u2 * (-1.0 / 315.0 + u2 * 2.0 / 14175.0))))
    } else {
        let s = libm::sin(u);
        s * s / (PI * u * u)
    }
}

fn fejer_deriv(u: f64) -> f64 {
    if u.abs() < FEJER_SERIES_CUTOFF {
        let u2 = u * u;
        FRAC_1_PI * u * (-2.0 / 3.0 + u2 * (8.0 / 45.0 + u2 * (-6.0 / 315.0 + u2 * 16.0 / 14175.0)))
    } else {
        let (s, c) = libm::sincos(u);
        2.0 * s * (u * c - s) / (PI * u * u * u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn peak_values() {
        let g = KernelSpec::new(KernelFamily::Gaussian, 1.0, 1).unwrap();
        assert!(close(g.value(&[0.0]).unwrap(), 0.398_942_280_401_432_7, 1e-15));
        let c = KernelSpec::new(KernelFamily::Cauchy, 1.0, 1).unwrap();
        assert!(close(c.value(&[0.0]).unwrap(), core::f64::consts::FRAC_1_PI, 1e-15));
        let g2 = KernelSpec::new(KernelFamily::Gaussian, 2.0, 1).unwrap();
        assert!(close(g2.value(&[0.0]).unwrap(), 0.199_471_140_200_716_35, 1e-15));
        let f = KernelSpec::new(KernelFamily::Fejer, 1.0, 1).unwrap();
        assert_eq!(f.value(&[0.0]).unwrap(), FRAC_1_PI);
        assert_eq!(f.grad(&[0.0]).unwrap(), [0.0]);
    }

    #[test]
    fn gaussian_gradients() {
        let g = KernelSpec::new(KernelFamily::Gaussian, 1.0, 1).unwrap();
        assert_eq!(g.grad(&[0.0]).unwrap(), [0.0]);
        // -exp(-1/2)/sqrt(2 pi)
        assert!(close(g.grad(&[1.0]).unwrap()[0], -0.241_970_724_519_143_35, 1e-15));
        let mv = KernelSpec::new(KernelFamily::MultivariateGaussian, 1.0, 2).unwrap();
        let d = mv.grad(&[1.0, 0.0]).unwrap();
        // -exp(-1/2)/(2 pi)
        assert!(close(d[0], -0.096_532_352_630_053_91, 1e-15));
        assert_eq!(d[1], 0.0);
    }

    #[test]
    fn multivariate_reduces_to_gaussian() {
        let g = KernelSpec::new(KernelFamily::Gaussian, 0.7, 1).unwrap();
        let mv = KernelSpec::new(KernelFamily::MultivariateGaussian, 0.7, 1).unwrap();
        for x in [-2.0, -0.3, 0.0, 0.9, 4.0] {
            assert_eq!(g.value(&[x]).unwrap(), mv.value(&[x]).unwrap());
            assert_eq!(g.grad(&[x]).unwrap(), mv.grad(&[x]).unwrap());
        }
    }

    #[test]
    fn fejer_series_branch_is_continuous() {
        let f = KernelSpec::new(KernelFamily::Fejer, 1.0, 1).unwrap();
        let below = FEJER_SERIES_CUTOFF * (1.0 - 1e-12);
        let above = FEJER_SERIES_CUTOFF * (1.0 + 1e-12);
        let (vb, va) = (f.value(&[below]).unwrap(), f.value(&[above]).unwrap());
        assert!((vb - va).abs() < 1e-14, "{vb} vs {va}");
        let (gb, ga) = (f.grad(&[below]).unwrap()[0], f.grad(&[above]).unwrap()[0]);
        assert!(((gb - ga) / gb).abs() < 1e-9, "{gb} vs {ga}");
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(KernelSpec::new(KernelFamily::Gaussian, 0.0, 1).is_err());
        assert!(KernelSpec::new(KernelFamily::Gaussian, -1.0, 1).is_err());
        assert!(KernelSpec::new(KernelFamily::Gaussian, f64::NAN, 1).is_err());
        assert!(KernelSpec::new(KernelFamily::Cauchy, 1.0, 2).is_err());
        assert!(KernelSpec::new(KernelFamily::MultivariateGaussian, 1.0, 0).is_err());
        assert!(KernelSpec::new(KernelFamily::MultivariateGaussian, 1.0, 3).is_ok());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mv = KernelSpec::new(KernelFamily::MultivariateGaussian, 1.0, 2).unwrap();
        assert_eq!(
            mv.value(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
        let mut out = [0.0; 3];
        assert!(mv.grad_into(&[1.0, 2.0], &mut out).is_err());
    }

    #[test]
    fn family_names_round_trip() {
        for fam in KernelFamily::ALL {
            assert_eq!(fam.name().parse::<KernelFamily>().unwrap(), fam);
        }
        assert!("epanechnikov".parse::<KernelFamily>().is_err());
    }
}
