//! Reference target densities with known modes.
//!
//! Each [`DistributionSpec`] validates its parameters against a unimodal
//! range, precomputes the analytic mode and can draw seeded samples,
//! evaluate its pdf and report a bounding box holding all but a negligible
//! amount of mass (used to truncate quadrature).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use crate::error::{check_dim, Error};
use crate::rng::SeededRng;

/// Off-simplex tolerance used by the Dirichlet density.
const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistributionFamily {
    Normal,
    Gamma,
    Exponential,
    Weibull,
    Beta,
    BivariateNormal,
    Dirichlet,
}

impl DistributionFamily {
    pub const ALL: [DistributionFamily; 7] = [
        DistributionFamily::Normal,
        DistributionFamily::Gamma,
        DistributionFamily::Exponential,
        DistributionFamily::Weibull,
        DistributionFamily::Beta,
        DistributionFamily::BivariateNormal,
        DistributionFamily::Dirichlet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistributionFamily::Normal => "normal",
            DistributionFamily::Gamma => "gamma",
            DistributionFamily::Exponential => "exponential",
            DistributionFamily::Weibull => "weibull",
            DistributionFamily::Beta => "beta",
            DistributionFamily::BivariateNormal => "bivariate-normal",
            DistributionFamily::Dirichlet => "dirichlet",
        }
    }

    /// Meaning of the flat parameter list accepted by [`DistributionSpec::from_params`].
    pub fn param_layout(self) -> &'static str {
        match self {
            DistributionFamily::Normal => "mean, sd",
            DistributionFamily::Gamma => "shape, scale",
            DistributionFamily::Exponential => "rate",
            DistributionFamily::Weibull => "shape, scale",
            DistributionFamily::Beta => "alpha, beta",
            DistributionFamily::BivariateNormal => "mean1, mean2, var1, cov12, var2",
            DistributionFamily::Dirichlet => "alpha1, ..., alphaK",
        }
    }
}

impl fmt::Display for DistributionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistributionFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        DistributionFamily::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .or(match key.as_str() {
                "gaussian" => Some(DistributionFamily::Normal),
                "exp" => Some(DistributionFamily::Exponential),
                "bvn" | "bivariatenormal" => Some(DistributionFamily::BivariateNormal),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown distribution `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Normal { mean: f64, sd: f64 },
    Gamma { shape: f64, scale: f64 },
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
    Beta { alpha: f64, beta: f64 },
    BivariateNormal(Bvn),
    Dirichlet { alpha: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
struct Bvn {
    mean: [f64; 2],
    cov: [[f64; 2]; 2],
    /// Lower Cholesky factor of `cov`.
    chol: [[f64; 2]; 2],
    det: f64,
}

/// A target density together with its analytic mode.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    kind: Kind,
    mode: Vec<f64>,
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

fn positive(name: &str, v: f64) -> Result<(), Error> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(alloc::format!("{name} must be positive and finite, got {v}")))
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

impl DistributionSpec {
    pub fn normal(mean: f64, sd: f64) -> Result<Self, Error> {
        if !mean.is_finite() {
            return Err(invalid(alloc::format!("normal mean must be finite, got {mean}")));
        }
        positive("normal sd", sd)?;
        Ok(DistributionSpec {
            kind: Kind::Normal { mean, sd },
            mode: vec![mean],
        })
    }

    /// Gamma with `shape >= 1` (mode `(shape - 1) * scale`).
    pub fn gamma(shape: f64, scale: f64) -> Result<Self, Error> {
        positive("gamma shape", shape)?;
        positive("gamma scale", scale)?;
        if shape < 1.0 {
            return Err(invalid(alloc::format!(
                "gamma shape {shape} < 1 has an unbounded density at 0"
            )));
        }
        Ok(DistributionSpec {
            kind: Kind::Gamma { shape, scale },
            mode: vec![(shape - 1.0) * scale],
        })
    }

    pub fn exponential(rate: f64) -> Result<Self, Error> {
        positive("exponential rate", rate)?;
        Ok(DistributionSpec {
            kind: Kind::Exponential { rate },
            mode: vec![0.0],
        })
    }

    /// Weibull with `shape >= 1`.
    pub fn weibull(shape: f64, scale: f64) -> Result<Self, Error> {
        positive("weibull shape", shape)?;
        positive("weibull scale", scale)?;
        if shape < 1.0 {
            return Err(invalid(alloc::format!(
                "weibull shape {shape} < 1 has an unbounded density at 0"
            )));
        }
        let mode = if shape == 1.0 {
            0.0
        } else {
            scale * libm::pow((shape - 1.0) / shape, 1.0 / shape)
        };
        Ok(DistributionSpec {
            kind: Kind::Weibull { shape, scale },
            mode: vec![mode],
        })
    }

    /// Beta with `alpha, beta >= 1`, not both equal to one.
    pub fn beta(alpha: f64, beta: f64) -> Result<Self, Error> {
        positive("beta alpha", alpha)?;
        positive("beta beta", beta)?;
        if alpha < 1.0 || beta < 1.0 {
            return Err(invalid(alloc::format!(
                "beta({alpha}, {beta}) has an unbounded density; both parameters must be >= 1"
            )));
        }
        if alpha == 1.0 && beta == 1.0 {
            return Err(invalid("beta(1, 1) is uniform and has no unique mode".into()));
        }
        let mode = (alpha - 1.0) / (alpha + beta - 2.0);
        Ok(DistributionSpec {
            kind: Kind::Beta { alpha, beta },
            mode: vec![mode],
        })
    }

    pub fn bivariate_normal(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self, Error> {
        if !mean.iter().all(|m| m.is_finite()) {
            return Err(invalid("bivariate normal mean must be finite".into()));
        }
        if cov[0][1] != cov[1][0] {
            return Err(invalid("bivariate normal covariance must be symmetric".into()));
        }
        let (a, b, c) = (cov[0][0], cov[0][1], cov[1][1]);
        let det = a * c - b * b;
        if !(a > 0.0 && det > 0.0 && det.is_finite()) {
            return Err(invalid("bivariate normal covariance must be positive definite".into()));
        }
        let l11 = libm::sqrt(a);
        let l21 = b / l11;
        let l22 = libm::sqrt(c - l21 * l21);
        Ok(DistributionSpec {
            kind: Kind::BivariateNormal(Bvn {
                mean,
                cov,
                chol: [[l11, 0.0], [l21, l22]],
                det,
            }),
            mode: mean.to_vec(),
        })
    }

    /// Dirichlet on the `K`-simplex, embedded in `R^K`. Requires `K >= 2`,
    /// every `alpha_i >= 1` and `sum(alpha) > K`.
    pub fn dirichlet(alpha: &[f64]) -> Result<Self, Error> {
        let k = alpha.len();
        if k < 2 {
            return Err(invalid("dirichlet needs at least two components".into()));
        }
        for &a in alpha {
            positive("dirichlet alpha", a)?;
            if a < 1.0 {
                return Err(invalid(alloc::format!(
                    "dirichlet alpha {a} < 1 has an unbounded density"
                )));
            }
        }
        let total: f64 = alpha.iter().sum();
        if total <= k as f64 {
            return Err(invalid("dirichlet with all alpha = 1 has no unique mode".into()));
        }
        let mode = alpha.iter().map(|a| (a - 1.0) / (total - k as f64)).collect();
        Ok(DistributionSpec {
            kind: Kind::Dirichlet {
                alpha: alpha.to_vec(),
            },
            mode,
        })
    }

    /// Build from a family and a flat parameter list (see
    /// [`DistributionFamily::param_layout`]).
    pub fn from_params(family: DistributionFamily, params: &[f64]) -> Result<Self, Error> {
        let need = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(invalid(alloc::format!(
                    "{family} takes {n} parameters ({}), got {}",
                    family.param_layout(),
                    params.len()
                )))
            }
        };
        match family {
            DistributionFamily::Normal => {
                need(2)?;
                Self::normal(params[0], params[1])
            }
            DistributionFamily::Gamma => {
                need(2)?;
                Self::gamma(params[0], params[1])
            }
            DistributionFamily::Exponential => {
                need(1)?;
                Self::exponential(params[0])
            }
            DistributionFamily::Weibull => {
                need(2)?;
                Self::weibull(params[0], params[1])
            }
            DistributionFamily::Beta => {
                need(2)?;
                Self::beta(params[0], params[1])
            }
            DistributionFamily::BivariateNormal => {
                need(5)?;
                Self::bivariate_normal(
                    [params[0], params[1]],
                    [[params[2], params[3]], [params[3], params[4]]],
                )
            }
            DistributionFamily::Dirichlet => Self::dirichlet(params),
        }
    }

    /// The parameter set used for each reference experiment: the simplest
    /// family member with the reference mode.
    pub fn reference(family: DistributionFamily) -> Self {
        let spec = match family {
            DistributionFamily::Normal => Self::normal(10.0, 1.0),
            DistributionFamily::Gamma => Self::gamma(6.0, 1.0),
            DistributionFamily::Exponential => Self::exponential(1.0),
            DistributionFamily::Weibull => Self::weibull(1.0, 1.0),
            DistributionFamily::Beta => Self::beta(9.0, 1.0),
            DistributionFamily::BivariateNormal => {
                Self::bivariate_normal([20.0, 15.0], [[1.0, 0.0], [0.0, 1.0]])
            }
            DistributionFamily::Dirichlet => Self::dirichlet(&[2.0, 2.0]),
        };
        spec.expect("reference parameters are valid")
    }

    pub fn family(&self) -> DistributionFamily {
        match self.kind {
            Kind::Normal { .. } => DistributionFamily::Normal,
            Kind::Gamma { .. } => DistributionFamily::Gamma,
            Kind::Exponential { .. } => DistributionFamily::Exponential,
            Kind::Weibull { .. } => DistributionFamily::Weibull,
            Kind::Beta { .. } => DistributionFamily::Beta,
            Kind::BivariateNormal(_) => DistributionFamily::BivariateNormal,
            Kind::Dirichlet { .. } => DistributionFamily::Dirichlet,
        }
    }

    /// Flat parameter list, inverse of [`DistributionSpec::from_params`].
    pub fn params(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Normal { mean, sd } => vec![*mean, *sd],
            Kind::Gamma { shape, scale } | Kind::Weibull { shape, scale } => vec![*shape, *scale],
            Kind::Exponential { rate } => vec![*rate],
            Kind::Beta { alpha, beta } => vec![*alpha, *beta],
            Kind::BivariateNormal(b) => {
                vec![b.mean[0], b.mean[1], b.cov[0][0], b.cov[0][1], b.cov[1][1]]
            }
            Kind::Dirichlet { alpha } => alpha.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mode.len()
    }

    pub fn analytic_mode(&self) -> &[f64] {
        &self.mode
    }

    pub fn mean(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Normal { mean, .. } => vec![*mean],
            Kind::Gamma { shape, scale } => vec![shape * scale],
            Kind::Exponential { rate } => vec![1.0 / rate],
            Kind::Weibull { shape, scale } => vec![scale * libm::tgamma(1.0 + 1.0 / shape)],
            Kind::Beta { alpha, beta } => vec![alpha / (alpha + beta)],
            Kind::BivariateNormal(b) => b.mean.to_vec(),
            Kind::Dirichlet { alpha } => {
                let total: f64 = alpha.iter().sum();
                alpha.iter().map(|a| a / total).collect()
            }
        }
    }

    /// Componentwise variance.
    pub fn variance(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Normal { sd, .. } => vec![sd * sd],
            Kind::Gamma { shape, scale } => vec![shape * scale * scale],
            Kind::Exponential { rate } => vec![1.0 / (rate * rate)],
            Kind::Weibull { shape, scale } => {
                let g1 = libm::tgamma(1.0 + 1.0 / shape);
                let g2 = libm::tgamma(1.0 + 2.0 / shape);
                vec![scale * scale * (g2 - g1 * g1)]
            }
            Kind::Beta { alpha, beta } => {
                let s = alpha + beta;
                vec![alpha * beta / (s * s * (s + 1.0))]
            }
            Kind::BivariateNormal(b) => vec![b.cov[0][0], b.cov[1][1]],
            Kind::Dirichlet { alpha } => {
                let total: f64 = alpha.iter().sum();
                alpha
                    .iter()
                    .map(|a| a * (total - a) / (total * total * (total + 1.0)))
                    .collect()
            }
        }
    }

    /// Probability density at `x`; zero outside the closed support.
    ///
    /// The Dirichlet density is taken with respect to Lebesgue measure on the
    /// first `K - 1` coordinates and is zero for points off the simplex.
    pub fn density(&self, x: &[f64]) -> Result<f64, Error> {
        check_dim(self.dim(), x.len())?;
        Ok(self.density_unchecked(x))
    }

    pub(crate) fn density_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            Kind::Normal { mean, sd } => {
                let z = (x[0] - mean) / sd;
                libm::exp(-0.5 * z * z) / (sd * libm::sqrt(2.0 * PI))
            }
            Kind::Gamma { shape, scale } => {
                let t = x[0];
                if t < 0.0 {
                    return 0.0;
                }
                if t == 0.0 {
                    return if *shape == 1.0 { 1.0 / scale } else { 0.0 };
                }
                libm::exp(
                    (shape - 1.0) * libm::log(t) - t / scale - libm::lgamma(*shape) - shape * libm::log(*scale),
                )
            }
            Kind::Exponential { rate } => {
                if x[0] < 0.0 {
                    0.0
                } else {
                    rate * libm::exp(-rate * x[0])
                }
            }
            Kind::Weibull { shape, scale } => {
                let t = x[0];
                if t < 0.0 {
                    return 0.0;
                }
                let z = t / scale;
                shape / scale * libm::pow(z, shape - 1.0) * libm::exp(-libm::pow(z, *shape))
            }
            Kind::Beta { alpha, beta } => {
                let t = x[0];
                if !(0.0..=1.0).contains(&t) {
                    return 0.0;
                }
                libm::pow(t, alpha - 1.0) * libm::pow(1.0 - t, beta - 1.0) / libm::exp(ln_beta(*alpha, *beta))
            }
            Kind::BivariateNormal(b) => {
                let d0 = x[0] - b.mean[0];
                let d1 = x[1] - b.mean[1];
                let (a, c, e) = (b.cov[0][0], b.cov[0][1], b.cov[1][1]);
                let q = (e * d0 * d0 - 2.0 * c * d0 * d1 + a * d1 * d1) / b.det;
                libm::exp(-0.5 * q) / (2.0 * PI * libm::sqrt(b.det))
            }
            Kind::Dirichlet { alpha } => {
                if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                    return 0.0;
                }
                let sum: f64 = x.iter().sum();
                if (sum - 1.0).abs() > SIMPLEX_TOL {
                    return 0.0;
                }
                let total: f64 = alpha.iter().sum();
                let ln_norm = libm::lgamma(total) - alpha.iter().map(|&a| libm::lgamma(a)).sum::<f64>();
                let mut p = libm::exp(ln_norm);
                for (&xi, &ai) in x.iter().zip(alpha) {
                    p *= libm::pow(xi, ai - 1.0);
                }
                p
            }
        }
    }

    /// Gradient of the density where it is differentiable (interior of the
    /// support). `None` for the Dirichlet, whose density lives on a
    /// lower-dimensional set.
    pub fn density_grad(&self, x: &[f64]) -> Result<Option<Vec<f64>>, Error> {
        check_dim(self.dim(), x.len())?;
        let f = self.density_unchecked(x);
        let g = match &self.kind {
            Kind::Normal { mean, sd } => vec![-(x[0] - mean) / (sd * sd) * f],
            Kind::Gamma { shape, scale } => {
                if x[0] <= 0.0 {
                    vec![0.0]
                } else {
                    vec![((shape - 1.0) / x[0] - 1.0 / scale) * f]
                }
            }
            Kind::Exponential { rate } => vec![if x[0] < 0.0 { 0.0 } else { -rate * f }],
            Kind::Weibull { shape, scale } => {
                if x[0] <= 0.0 {
                    vec![0.0]
                } else {
                    let t = x[0];
                    vec![((shape - 1.0) / t - shape * libm::pow(t / scale, shape - 1.0) / scale) * f]
                }
            }
            Kind::Beta { alpha, beta } => {
                let t = x[0];
                if t <= 0.0 || t >= 1.0 {
                    vec![0.0]
                } else {
                    vec![((alpha - 1.0) / t - (beta - 1.0) / (1.0 - t)) * f]
                }
            }
            Kind::BivariateNormal(b) => {
                let d0 = x[0] - b.mean[0];
                let d1 = x[1] - b.mean[1];
                let (a, c, e) = (b.cov[0][0], b.cov[0][1], b.cov[1][1]);
                vec![
                    -(e * d0 - c * d1) / b.det * f,
                    -(-c * d0 + a * d1) / b.det * f,
                ]
            }
            Kind::Dirichlet { .. } => return Ok(None),
        };
        Ok(Some(g))
    }

    /// Per-coordinate interval outside of which the density carries a
    /// negligible (< 1e-12 per coordinate) amount of mass. Closed supports
    /// are returned exactly.
    pub fn support_box(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            Kind::Normal { mean, sd } => vec![(mean - 8.0 * sd, mean + 8.0 * sd)],
            Kind::Gamma { shape, scale } => {
                // Chernoff-style bound: the tail past mean + 12 sd + 30 scale is far below 1e-12.
                let sd = libm::sqrt(*shape) * scale;
                vec![(0.0, shape * scale + 12.0 * sd + 30.0 * scale)]
            }
            Kind::Exponential { rate } => vec![(0.0, 30.0 / rate)],
            Kind::Weibull { shape, scale } => vec![(0.0, scale * libm::pow(30.0, 1.0 / shape))],
            Kind::Beta { .. } => vec![(0.0, 1.0)],
            Kind::BivariateNormal(b) => (0..2)
                .map(|i| {
                    let sd = libm::sqrt(b.cov[i][i]);
                    (b.mean[i] - 8.0 * sd, b.mean[i] + 8.0 * sd)
                })
                .collect(),
            Kind::Dirichlet { alpha } => vec![(0.0, 1.0); alpha.len()],
        }
    }

    /// Whether the density is continuous on the whole space, i.e. it has
    /// full-dimensional support and vanishes at the support boundary.
    pub fn is_continuous(&self) -> bool {
        match &self.kind {
            Kind::Normal { .. } | Kind::BivariateNormal(_) => true,
            Kind::Gamma { shape, .. } | Kind::Weibull { shape, .. } => *shape > 1.0,
            Kind::Beta { alpha, beta } => *alpha > 1.0 && *beta > 1.0,
            Kind::Exponential { .. } | Kind::Dirichlet { .. } => false,
        }
    }

    /// Whether the support is a lower-dimensional simplex.
    pub fn is_simplex(&self) -> bool {
        matches!(self.kind, Kind::Dirichlet { .. })
    }

    /// Draw one sample into `out` (length `dim()`).
    pub fn sample_into(&self, rng: &mut SeededRng, out: &mut [f64]) -> Result<(), Error> {
        check_dim(self.dim(), out.len())?;
        match &self.kind {
            Kind::Normal { mean, sd } => out[0] = mean + sd * rng.standard_normal(),
            Kind::Gamma { shape, scale } => out[0] = scale * rng.gamma(*shape),
            Kind::Exponential { rate } => out[0] = -libm::log(rng.uniform_open()) / rate,
            Kind::Weibull { shape, scale } => {
                out[0] = scale * libm::pow(-libm::log(rng.uniform_open()), 1.0 / shape)
            }
            Kind::Beta { alpha, beta } => {
                let x = rng.gamma(*alpha);
                let y = rng.gamma(*beta);
                out[0] = x / (x + y);
            }
            Kind::BivariateNormal(b) => {
                let z0 = rng.standard_normal();
                let z1 = rng.standard_normal();
                out[0] = b.mean[0] + b.chol[0][0] * z0;
                out[1] = b.mean[1] + b.chol[1][0] * z0 + b.chol[1][1] * z1;
            }
            Kind::Dirichlet { alpha } => {
                let mut total = 0.0;
                for (o, &a) in out.iter_mut().zip(alpha) {
                    *o = rng.gamma(a);
                    total += *o;
                }
                for o in out.iter_mut() {
                    *o /= total;
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut SeededRng) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out)
            .expect("buffer sized from dim()");
        out
    }
}
