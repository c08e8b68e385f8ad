//! Oracle checks for one distribution/kernel pair, as run by `verify`.

use serde::Serialize;
use streammode_core::oracle::{
    central_difference, convolved_density_grad, kernel_integral, regularized_argmax,
    smoothed_density, smoothed_grad, GridSpec,
};
use streammode_core::{DistributionSpec, Error, KernelSpec, SeededRng};

use crate::config::{ConfigDocument, Resolved};
use crate::error::Failure;

pub const NORMALIZATION_TOL: f64 = 1e-4;
pub const KERNEL_GRAD_REL_TOL: f64 = 1e-5;
pub const IDENTITY_TOL: f64 = 1e-6;
pub const SMOOTHED_GRAD_REL_TOL: f64 = 1e-4;
pub const NOISE_STANDARD_ERRORS: f64 = 3.0;
pub const NOISE_SAMPLES: usize = 100_000;
const PROBE_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    /// Worst observed discrepancy, in the units of `tolerance`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl Check {
    fn measured(name: &'static str, value: f64, tolerance: f64, detail: String) -> Check {
        Check {
            name,
            status: if value < tolerance { Status::Pass } else { Status::Fail },
            value: Some(value),
            tolerance: Some(tolerance),
            detail,
        }
    }

    fn errored(name: &'static str, err: &Error) -> Check {
        Check {
            name,
            status: Status::Fail,
            value: None,
            tolerance: None,
            detail: err.to_string(),
        }
    }

    fn skipped(name: &'static str, why: &str) -> Check {
        Check {
            name,
            status: Status::Skipped,
            value: None,
            tolerance: None,
            detail: why.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config: ConfigDocument,
    pub analytic_mode: Vec<f64>,
    /// Maximizer of `f_eps(m) - lambda/2 |m|^2`, if it was found.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regularized_argmax: Option<Vec<f64>>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Grid over the support (widened by a few bandwidths), always containing
/// the origin so heavily regularized maximizers stay inside it.
pub fn oracle_grid(dist: &DistributionSpec, kernel: &KernelSpec) -> GridSpec {
    let pad = 3.0 * kernel.epsilon();
    let (lo, hi) = dist
        .support_box()
        .into_iter()
        .map(|(l, h)| (l.min(0.0) - pad, h.max(0.0) + pad))
        .unzip();
    let points = if dist.dim() == 1 { 1201 } else { 41 };
    GridSpec::new(lo, hi, points).expect("support boxes are non-degenerate")
}

fn probe_points(dist: &DistributionSpec, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    (0..PROBE_POINTS).map(|_| dist.sample(rng)).collect()
}

fn kernel_checks(kernel: &KernelSpec, rng: &mut SeededRng, checks: &mut Vec<Check>) {
    checks.push(match kernel_integral(kernel) {
        Ok(mass) => Check::measured(
            "kernel_normalization",
            (mass - 1.0).abs(),
            NORMALIZATION_TOL,
            format!("integral of K_eps = {mass}"),
        ),
        Err(e) => Check::errored("kernel_normalization", &e),
    });

    let dim = kernel.dim();
    let spread = 4.0 * kernel.epsilon();
    let points: Vec<Vec<f64>> = (0..PROBE_POINTS)
        .map(|_| (0..dim).map(|_| spread * (2.0 * rng.uniform() - 1.0)).collect())
        .collect();
    let mut worst: f64 = 0.0;
    let mut asymmetry: f64 = 0.0;
    for x in &points {
        let g = kernel.grad(x).expect("dimension matches");
        let fd = central_difference(|p| kernel.value(p), x, 1e-6).expect("dimension matches");
        for (a, b) in g.iter().zip(&fd) {
            worst = worst.max((a - b).abs() / a.abs().max(1e-4));
        }
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let gn = kernel.grad(&neg).expect("dimension matches");
        asymmetry = asymmetry.max((kernel.value(x).unwrap() - kernel.value(&neg).unwrap()).abs());
        for (a, b) in g.iter().zip(&gn) {
            asymmetry = asymmetry.max((a + b).abs());
        }
    }
    checks.push(Check::measured(
        "kernel_gradient",
        worst,
        KERNEL_GRAD_REL_TOL,
        format!("max relative error against central differences at {PROBE_POINTS} points"),
    ));
    checks.push(Check {
        name: "kernel_symmetry",
        status: if asymmetry == 0.0 { Status::Pass } else { Status::Fail },
        value: Some(asymmetry),
        tolerance: Some(0.0),
        detail: "K(x) = K(-x) and grad K(x) = -grad K(-x) exactly".into(),
    });
}

fn identity_check(dist: &DistributionSpec, kernel: &KernelSpec, probes: &[Vec<f64>]) -> Check {
    const NAME: &str = "gradient_of_convolution";
    if !dist.is_continuous() {
        return Check::skipped(NAME, "density is discontinuous; the identity needs a continuous density");
    }
    let mut worst: f64 = 0.0;
    for m in probes {
        let lhs = smoothed_grad(dist, kernel, m);
        let rhs = convolved_density_grad(dist, kernel, m);
        match (lhs, rhs) {
            (Ok(l), Ok(r)) => {
                for (a, b) in l.iter().zip(&r) {
                    worst = worst.max((a - b).abs());
                }
            }
            (Err(e), _) | (_, Err(e)) => return Check::errored(NAME, &e),
        }
    }
    Check::measured(
        NAME,
        worst,
        IDENTITY_TOL,
        format!("max |E grad K(m - X) - (grad f * K)(m)| at {} points", probes.len()),
    )
}

fn smoothed_grad_check(dist: &DistributionSpec, kernel: &KernelSpec, probes: &[Vec<f64>]) -> Check {
    const NAME: &str = "smoothed_gradient";
    let mut worst: f64 = 0.0;
    for m in probes.iter().take(5) {
        let g = match smoothed_grad(dist, kernel, m) {
            Ok(g) => g,
            Err(e) => return Check::errored(NAME, &e),
        };
        let fd = match central_difference(|p| smoothed_density(dist, kernel, p), m, 1e-4) {
            Ok(fd) => fd,
            Err(e) => return Check::errored(NAME, &e),
        };
        for (a, b) in g.iter().zip(&fd) {
            worst = worst.max((a - b).abs() / a.abs().max(1e-3));
        }
    }
    Check::measured(
        NAME,
        worst,
        SMOOTHED_GRAD_REL_TOL,
        "max relative error of grad f_eps against differences of f_eps".into(),
    )
}

fn lambda_ordering_check(dist: &DistributionSpec, kernel: &KernelSpec, grid: &GridSpec) -> Check {
    const NAME: &str = "lambda_ordering";
    let target = match regularized_argmax(dist, kernel, 0.0, grid) {
        Ok(t) => t,
        Err(e) => return Check::errored(NAME, &e),
    };
    let mut gaps = Vec::new();
    for lambda in [1e-1, 1e-3, 1e-5] {
        match regularized_argmax(dist, kernel, lambda, grid) {
            Ok(m) => gaps.push(distance(&m, &target)),
            Err(e) => return Check::errored(NAME, &e),
        }
    }
    // Strong penalties can all collapse onto the origin, so ties are allowed.
    let ordered = gaps.windows(2).all(|w| w[1] <= w[0]) && gaps[2] < gaps[0];
    Check {
        name: NAME,
        status: if ordered { Status::Pass } else { Status::Fail },
        value: None,
        tolerance: None,
        detail: format!("distance to the lambda = 0 maximizer for lambda = 1e-1, 1e-3, 1e-5: {gaps:?}"),
    }
}

fn noise_check(dist: &DistributionSpec, kernel: &KernelSpec, lambda: f64, m: &[f64], seed: u64) -> Check {
    const NAME: &str = "mean_zero_noise";
    let oracle = match smoothed_grad(dist, kernel, m) {
        Ok(g) => g,
        Err(e) => return Check::errored(NAME, &e),
    };
    let dim = m.len();
    let mut rng = SeededRng::new(seed);
    let (mut sum, mut sq) = (vec![0.0; dim], vec![0.0; dim]);
    let mut diff = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    for _ in 0..NOISE_SAMPLES {
        dist.sample_into(&mut rng, &mut x).expect("dimension matches");
        for ((d, mi), xi) in diff.iter_mut().zip(m).zip(&x) {
            *d = mi - xi;
        }
        let g = kernel.grad(&diff).expect("dimension matches");
        for a in 0..dim {
            let d = g[a] - lambda * m[a];
            sum[a] += d;
            sq[a] += d * d;
        }
    }
    let n = NOISE_SAMPLES as f64;
    let mut worst: f64 = 0.0;
    for a in 0..dim {
        let mean = sum[a] / n;
        let var = (sq[a] / n - mean * mean) * n / (n - 1.0);
        let se = (var / n).sqrt();
        let residual = mean - (oracle[a] - lambda * m[a]);
        worst = worst.max(residual.abs() / se.max(f64::MIN_POSITIVE));
    }
    Check::measured(
        NAME,
        worst,
        NOISE_STANDARD_ERRORS,
        format!("residual of the update direction in standard errors over {NOISE_SAMPLES} draws"),
    )
}

/// Run every check for the configured distribution and kernel.
pub fn verify(resolved: &Resolved) -> Result<VerifyReport, Failure> {
    let dist = &resolved.dist;
    let config = resolved.estimator_config(dist.dim())?;
    let kernel = config.kernel;
    let mut rng = SeededRng::new(resolved.base_seed());
    let mut checks = Vec::new();

    kernel_checks(&kernel, &mut rng, &mut checks);
    let probes = probe_points(dist, &mut rng);
    checks.push(identity_check(dist, &kernel, &probes));
    checks.push(smoothed_grad_check(dist, &kernel, &probes));

    let grid = oracle_grid(dist, &kernel);
    let argmax = match regularized_argmax(dist, &kernel, config.lambda, &grid) {
        Ok(m) => {
            checks.push(Check {
                name: "regularized_argmax",
                status: Status::Pass,
                value: Some(distance(&m, dist.analytic_mode())),
                tolerance: None,
                detail: format!("found at {m:?}, |m| = {}; value is the distance to the analytic mode", norm(&m)),
            });
            Some(m)
        }
        Err(e) => {
            checks.push(Check::errored("regularized_argmax", &e));
            None
        }
    };
    checks.push(lambda_ordering_check(dist, &kernel, &grid));
    checks.push(match &argmax {
        Some(m) => noise_check(dist, &kernel, config.lambda, m, resolved.base_seed().wrapping_add(1)),
        None => Check::skipped("mean_zero_noise", "no maximizer to probe at"),
    });

    let passed = checks.iter().all(|c| c.status != Status::Fail);
    Ok(VerifyReport {
        config: resolved.document.clone(),
        analytic_mode: dist.analytic_mode().to_vec(),
        regularized_argmax: argmax,
        checks,
        passed,
    })
}
