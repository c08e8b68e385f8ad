//! Brute-force references for checking the estimator.
//!
//! Nothing in here is used by [`crate::ModeEstimator`]. The smoothed density
//! `f_eps = f * K_eps` and its gradient are computed by adaptive quadrature
//! (nested for two dimensions, a line integral for the 2-simplex), and the
//! maximizers the estimator should approach are found by an exhaustive grid
//! scan followed by golden-section refinement. Oracles are limited to one
//! and two dimensions.

use alloc::vec;
use alloc::vec::Vec;

use crate::distribution::DistributionSpec;
use crate::error::{check_dim, Error};
use crate::kernel::KernelSpec;
use crate::quad::{self, Tolerance};

/// Gaussian kernels are truncated this many bandwidths from their centre.
const GAUSSIAN_WINDOW: f64 = 12.0;

/// Heavy-tailed kernels are integrated out to this many bandwidths.
const HEAVY_TAIL_RADIUS: f64 = 1e5;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

const FINE: Tolerance = Tolerance {
    abs: 1e-15,
    rel: 1e-11,
    max_intervals: 4000,
};

/// Enough to rank grid nodes during the argmax scan.
const SCAN: Tolerance = Tolerance {
    abs: 1e-13,
    rel: 1e-7,
    max_intervals: 4000,
};

/// Axis-aligned grid, `points_per_dim` nodes per axis including both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    points_per_dim: usize,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, points_per_dim: usize) -> Result<Self, Error> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(Error::InvalidParameter("grid needs at least one axis".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::InvalidParameter("grid needs finite lo < hi on every axis".into()));
        }
        if points_per_dim < 3 {
            return Err(Error::InvalidParameter("grid needs at least 3 points per axis".into()));
        }
        Ok(GridSpec {
            lo,
            hi,
            points_per_dim,
        })
    }

    /// `center +- half_width` on every axis.
    pub fn around(center: &[f64], half_width: f64, points_per_dim: usize) -> Result<Self, Error> {
        GridSpec::new(
            center.iter().map(|c| c - half_width).collect(),
            center.iter().map(|c| c + half_width).collect(),
            points_per_dim,
        )
    }

    /// 4001 points over `mode +- 10` for one dimension, 81 per axis for two.
    pub fn default_for(mode: &[f64]) -> Self {
        let points = if mode.len() == 1 { 4001 } else { 81 };
        GridSpec::around(mode, 10.0, points).expect("valid default grid")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.points_per_dim - 1) as f64
    }

    fn node(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.points_per_dim {
            self.hi[axis]
        } else {
            self.lo[axis] + self.spacing(axis) * i as f64
        }
    }
}

fn integrate_1d<F: FnMut(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    split: f64,
    tol: Tolerance,
) -> Result<f64, Error> {
    if !(lo < hi) {
        return Ok(0.0);
    }
    let mut f = f;
    if lo < split && split < hi {
        let left = quad::integrate(&mut f, lo, split, tol)?.value;
        let right = quad::integrate(&mut f, split, hi, tol)?.value;
        Ok(left + right)
    } else {
        Ok(quad::integrate(f, lo, hi, tol)?.value)
    }
}

/// Integral of `g(t)` over the box `[lo, hi]` (dimension 1 or 2), splitting
/// each axis at `split`.
fn integrate_box<G: FnMut(&[f64]) -> f64>(
    mut g: G,
    lo: &[f64],
    hi: &[f64],
    split: &[f64],
    tol: Tolerance,
) -> Result<f64, Error> {
    match lo.len() {
        1 => integrate_1d(|t| g(&[t]), lo[0], hi[0], split[0], tol),
        2 => {
            let mut inner_err = None;
            let outer = integrate_1d(
                |t0| {
                    let r = integrate_1d(|t1| g(&[t0, t1]), lo[1], hi[1], split[1], tol);
                    r.unwrap_or_else(|e| {
                        inner_err.get_or_insert(e);
                        f64::NAN
                    })
                },
                lo[0],
                hi[0],
                split[0],
                tol,
            );
            match inner_err {
                Some(e) => Err(e),
                None => outer,
            }
        }
        d => Err(Error::Unsupported(alloc::format!(
            "quadrature oracles cover dimensions 1 and 2, got {d}"
        ))),
    }
}

fn check_pair(dist: &DistributionSpec, kernel: &KernelSpec, m: &[f64]) -> Result<(), Error> {
    check_dim(dist.dim(), kernel.dim())?;
    check_dim(dist.dim(), m.len())?;
    if dist.dim() > 2 {
        return Err(Error::Unsupported("oracles cover dimensions 1 and 2".into()));
    }
    Ok(())
}

/// Integration box: support intersected with the kernel window around `m`.
fn convolution_box(dist: &DistributionSpec, kernel: &KernelSpec, m: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let support = dist.support_box();
    let reach = if kernel.family().is_gaussian() {
        GAUSSIAN_WINDOW * kernel.epsilon()
    } else {
        f64::INFINITY
    };
    let lo = support.iter().zip(m).map(|(s, c)| s.0.max(c - reach)).collect();
    let hi = support.iter().zip(m).map(|(s, c)| s.1.min(c + reach)).collect();
    (lo, hi)
}

/// `integral f(t) w(m - t) dt` for a weight `w` built from the kernel.
fn convolve<W: FnMut(&[f64]) -> f64>(
    dist: &DistributionSpec,
    kernel: &KernelSpec,
    m: &[f64],
    tol: Tolerance,
    mut weight: W,
) -> Result<f64, Error> {
    check_pair(dist, kernel, m)?;
    let dim = dist.dim();
    let mut diff = vec![0.0; dim];
    if dist.is_simplex() {
        // Line integral over (b, 1 - b); the density is that of the first coordinate.
        let split = (0.5 * (m[0] - m[1] + 1.0)).clamp(0.0, 1.0);
        return integrate_1d(
            |b| {
                let t = [b, 1.0 - b];
                diff[0] = m[0] - t[0];
                diff[1] = m[1] - t[1];
                dist.density_unchecked(&t) * weight(&diff)
            },
            0.0,
            1.0,
            split,
            tol,
        );
    }
    let (lo, hi) = convolution_box(dist, kernel, m);
    integrate_box(
        |t| {
            for ((d, mi), ti) in diff.iter_mut().zip(m).zip(t) {
                *d = mi - ti;
            }
            dist.density_unchecked(t) * weight(&diff)
        },
        &lo,
        &hi,
        m,
        tol,
    )
}

/// `f_eps(m) = integral f(t) K_eps(m - t) dt`.
pub fn smoothed_density(dist: &DistributionSpec, kernel: &KernelSpec, m: &[f64]) -> Result<f64, Error> {
    convolve(dist, kernel, m, FINE, |d| kernel.value_unchecked(d))
}

/// `grad f_eps(m) = integral grad K_eps(m - t) f(t) dt = E[grad K_eps(m - X)]`.
pub fn smoothed_grad(dist: &DistributionSpec, kernel: &KernelSpec, m: &[f64]) -> Result<Vec<f64>, Error> {
    let mut g = vec![0.0; kernel.dim()];
    let mut out = Vec::with_capacity(kernel.dim());
    for axis in 0..kernel.dim() {
        out.push(convolve(dist, kernel, m, FINE, |d| {
            kernel.grad_unchecked(d, &mut g);
            g[axis]
        })?);
    }
    Ok(out)
}

/// `integral grad f(m - t) K_eps(t) dt`, the other side of the
/// gradient-of-convolution identity. Needs a differentiable density.
pub fn convolved_density_grad(
    dist: &DistributionSpec,
    kernel: &KernelSpec,
    m: &[f64],
) -> Result<Vec<f64>, Error> {
    check_pair(dist, kernel, m)?;
    if dist.is_simplex() {
        return Err(Error::Unsupported("density gradient of a simplex-supported law".into()));
    }
    let (lo, hi) = convolution_box(dist, kernel, m);
    let dim = dist.dim();
    let mut diff = vec![0.0; dim];
    let mut out = Vec::with_capacity(dim);
    for axis in 0..dim {
        // Substituting s = m - t: integral grad f(s) K_eps(m - s) ds.
        out.push(integrate_box(
            |s| {
                for ((d, mi), si) in diff.iter_mut().zip(m).zip(s) {
                    *d = mi - si;
                }
                let grad = dist
                    .density_grad(s)
                    .ok()
                    .flatten()
                    .map_or(f64::NAN, |g| g[axis]);
                grad * kernel.value_unchecked(&diff)
            },
            &lo,
            &hi,
            m,
            FINE,
        )?);
    }
    Ok(out)
}

/// Maximizer of `f_eps(m) - lambda/2 |m|^2` over `grid`, refined to well
/// below 1e-4.
pub fn regularized_argmax(
    dist: &DistributionSpec,
    kernel: &KernelSpec,
    lambda: f64,
    grid: &GridSpec,
) -> Result<Vec<f64>, Error> {
    check_dim(dist.dim(), grid.dim())?;
    check_pair(dist, kernel, &grid.lo)?;
    let mut g = vec![0.0; kernel.dim()];
    maximize(
        grid,
        |m, tol| {
            let sq: f64 = m.iter().map(|v| v * v).sum();
            Ok(convolve(dist, kernel, m, tol, |d| kernel.value_unchecked(d))? - 0.5 * lambda * sq)
        },
        |m, axis| {
            let slope = convolve(dist, kernel, m, FINE, |d| {
                kernel.grad_unchecked(d, &mut g);
                g[axis]
            })?;
            Ok(slope - lambda * m[axis])
        },
    )
}

/// Maximizer of the kernel density estimate `(1/n) sum K_eps(m - x_i)`.
pub fn kde_argmax<S: AsRef<[f64]>>(
    samples: &[S],
    kernel: &KernelSpec,
    grid: &GridSpec,
) -> Result<Vec<f64>, Error> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("kde_argmax needs at least one sample".into()));
    }
    check_dim(kernel.dim(), grid.dim())?;
    for s in samples {
        check_dim(kernel.dim(), s.as_ref().len())?;
    }
    let inv_n = 1.0 / samples.len() as f64;
    let dim = kernel.dim();
    let (mut diff, mut diff2, mut g) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    maximize(
        grid,
        |m, _| {
            let mut total = 0.0;
            for s in samples {
                for ((d, mi), xi) in diff.iter_mut().zip(m).zip(s.as_ref()) {
                    *d = mi - xi;
                }
                total += kernel.value_unchecked(&diff);
            }
            Ok(total * inv_n)
        },
        |m, axis| {
            let mut total = 0.0;
            for s in samples {
                for ((d, mi), xi) in diff2.iter_mut().zip(m).zip(s.as_ref()) {
                    *d = mi - xi;
                }
                kernel.grad_unchecked(&diff2, &mut g);
                total += g[axis];
            }
            Ok(total * inv_n)
        },
    )
}

/// Grid scan, boundary check, then coordinate-wise refinement.
///
/// The objective receives the quadrature tolerance to use: loose while
/// scanning, tight otherwise. Refinement bisects on the sign of `partial`
/// (the objective's derivative along one axis), which stays accurate at a
/// flat peak where objective values alone are swamped by quadrature noise;
/// golden-section search on the objective is the fallback when the
/// derivative does not change sign across the bracket.
fn maximize<F, G>(grid: &GridSpec, mut objective: F, mut partial: G) -> Result<Vec<f64>, Error>
where
    F: FnMut(&[f64], Tolerance) -> Result<f64, Error>,
    G: FnMut(&[f64], usize) -> Result<f64, Error>,
{
    let dim = grid.dim();
    let n = grid.points_per_dim;
    let mut best = (f64::NEG_INFINITY, vec![0usize; dim]);
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    loop {
        for (axis, (&i, p)) in idx.iter().zip(point.iter_mut()).enumerate() {
            *p = grid.node(axis, i);
        }
        let v = objective(&point, SCAN)?;
        if v > best.0 {
            best = (v, idx.clone());
        }
        // odometer increment
        let mut axis = 0;
        loop {
            if axis == dim {
                break;
            }
            idx[axis] += 1;
            if idx[axis] < n {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
        if axis == dim {
            break;
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Unsupported("objective is not finite on the grid".into()));
    }
    for (axis, &i) in best.1.iter().enumerate() {
        if i == 0 || i + 1 == n {
            return Err(Error::GridBoundary { axis });
        }
    }
    let mut x: Vec<f64> = best.1.iter().enumerate().map(|(a, &i)| grid.node(a, i)).collect();

    let steps: Vec<f64> = (0..dim).map(|a| grid.spacing(a)).collect();
    let cycles = if dim == 1 { 1 } else { 100 };
    let mut p = x.clone();
    for _ in 0..cycles {
        let mut moved: f64 = 0.0;
        for axis in 0..dim {
            let before = x[axis];
            let (mut lo, mut hi) = (before - steps[axis], before + steps[axis]);
            p.copy_from_slice(&x);
            p[axis] = lo;
            let rising = partial(&p, axis)? > 0.0;
            p[axis] = hi;
            let falling = partial(&p, axis)? < 0.0;
            x[axis] = if rising && falling {
                while hi - lo > 1e-13 * before.abs().max(1.0) {
                    p[axis] = 0.5 * (lo + hi);
                    let d = partial(&p, axis)?;
                    if d > 0.0 {
                        lo = p[axis];
                    } else if d < 0.0 {
                        hi = p[axis];
                    } else {
                        (lo, hi) = (p[axis], p[axis]);
                    }
                }
                0.5 * (lo + hi)
            } else {
                let mut line = |t: f64| {
                    p.copy_from_slice(&x);
                    p[axis] = t;
                    objective(&p, FINE)
                };
                golden_section(&mut line, lo, hi, 1e-9 * steps[axis].max(1.0))?
            };
            moved = moved.max((x[axis] - before).abs());
        }
        if moved < 1e-10 {
            break;
        }
    }
    Ok(x)
}

fn golden_section<F>(f: &mut F, mut a: f64, mut b: f64, tol: f64) -> Result<f64, Error>
where
    F: FnMut(f64) -> Result<f64, Error>,
{
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h` per axis.
pub fn central_difference<F>(mut f: F, x: &[f64], h: f64) -> Result<Vec<f64>, Error>
where
    F: FnMut(&[f64]) -> Result<f64, Error>,
{
    let mut p = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        p[i] = x[i] + h;
        let up = f(&p)?;
        p[i] = x[i] - h;
        let down = f(&p)?;
        p[i] = x[i];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Numerical integral of `K_eps` over its whole domain.
pub fn kernel_integral(kernel: &KernelSpec) -> Result<f64, Error> {
    let eps = kernel.epsilon();
    match kernel.dim() {
        1 if kernel.family().is_gaussian() => {
            let r = 40.0 * eps;
            integrate_1d(|x| kernel.value_unchecked(&[x]), -r, r, 0.0, FINE)
        }
        1 => {
            let r = HEAVY_TAIL_RADIUS * eps;
            let panels = (2.0 * HEAVY_TAIL_RADIUS) as usize;
            Ok(quad::composite(|x| kernel.value_unchecked(&[x]), -r, r, panels).value)
        }
        2 => {
            let r = 40.0 * eps;
            integrate_box(|x| kernel.value_unchecked(x), &[-r, -r], &[r, r], &[0.0, 0.0], FINE)
        }
        d => Err(Error::Unsupported(alloc::format!(
            "kernel quadrature covers dimensions 1 and 2, got {d}"
        ))),
    }
}

/// Numerical integral of `|K_eps|` over `|x| > delta`.
pub fn kernel_tail_mass(kernel: &KernelSpec, delta: f64) -> Result<f64, Error> {
    let eps = kernel.epsilon();
    let abs_k = |x: &[f64]| kernel.value_unchecked(x).abs();
    match kernel.dim() {
        1 if kernel.family().is_gaussian() => {
            let r = 40.0 * eps;
            if delta >= r {
                return Ok(0.0);
            }
            let left = integrate_1d(|x| abs_k(&[x]), -r, -delta, -delta, FINE)?;
            let right = integrate_1d(|x| abs_k(&[x]), delta, r, delta, FINE)?;
            Ok(left + right)
        }
        1 => {
            let r = HEAVY_TAIL_RADIUS * eps;
            let panels = HEAVY_TAIL_RADIUS as usize;
            let left = quad::composite(|x| abs_k(&[x]), -r, -delta, panels).value;
            let right = quad::composite(|x| abs_k(&[x]), delta, r, panels).value;
            Ok(left + right)
        }
        2 => {
            // Polar coordinates; no symmetry is assumed.
            let r = 40.0 * eps;
            if delta >= r {
                return Ok(0.0);
            }
            integrate_box(
                |p| {
                    let (rho, theta) = (p[0], p[1]);
                    let (s, c) = libm::sincos(theta);
                    abs_k(&[rho * c, rho * s]) * rho
                },
                &[delta, 0.0],
                &[r, core::f64::consts::TAU],
                &[delta, 0.0],
                FINE,
            )
        }
        d => Err(Error::Unsupported(alloc::format!(
            "kernel quadrature covers dimensions 1 and 2, got {d}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::DistributionFamily;
    use crate::kernel::KernelFamily;

    fn gauss(eps: f64) -> KernelSpec {
        KernelSpec::new(KernelFamily::Gaussian, eps, 1).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(vec![0.0], vec![0.0], 10).is_err());
        assert!(GridSpec::new(vec![0.0], vec![1.0], 2).is_err());
        assert!(GridSpec::new(vec![0.0, 0.0], vec![1.0], 10).is_err());
        let g = GridSpec::new(vec![0.0], vec![1.0], 11).unwrap();
        assert_eq!(g.node(0, 10), 1.0);
        assert!((g.spacing(0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn normal_smoothed_density_is_n_10_2() {
        let n = DistributionSpec::reference(DistributionFamily::Normal);
        let v = smoothed_density(&n, &gauss(1.0), &[10.0]).unwrap();
        assert!((v - 0.282_094_791_773_878_14).abs() < 1e-12);
        let g = smoothed_grad(&n, &gauss(1.0), &[10.0]).unwrap();
        assert!(g[0].abs() < 1e-14);
        let g = smoothed_grad(&n, &gauss(1.0), &[9.0]).unwrap();
        assert!((g[0] - 0.109_847_822_366_930_6).abs() < 1e-12);
    }

    #[test]
    fn exponential_far_from_support() {
        let e = DistributionSpec::reference(DistributionFamily::Exponential);
        let v = smoothed_density(&e, &gauss(1.0), &[-5.0]).unwrap();
        // mpmath: 2.41410037212e-7
        assert!((v - 2.414_100_372_122_811e-7).abs() < 1e-15);
    }

    #[test]
    fn boundary_maximum_is_an_error() {
        let n = DistributionSpec::reference(DistributionFamily::Normal);
        let grid = GridSpec::new(vec![0.0], vec![5.0], 101).unwrap();
        assert_eq!(
            regularized_argmax(&n, &gauss(1.0), 0.0, &grid),
            Err(Error::GridBoundary { axis: 0 })
        );
    }

    #[test]
    fn singleton_kde_peaks_at_the_sample() {
        let grid = GridSpec::around(&[5.0], 10.0, 401).unwrap();
        let m = kde_argmax(&[[5.0]], &gauss(1.0), &grid).unwrap();
        assert!((m[0] - 5.0).abs() < 1e-4);
        let empty: [[f64; 1]; 0] = [];
        assert!(kde_argmax(&empty, &gauss(1.0), &grid).is_err());
    }

    #[test]
    fn higher_dimensions_are_rejected() {
        let d = DistributionSpec::dirichlet(&[2.0, 2.0, 2.0]).unwrap();
        let k = KernelSpec::new(KernelFamily::MultivariateGaussian, 1.0, 3).unwrap();
        assert!(matches!(
            smoothed_density(&d, &k, &[0.3, 0.3, 0.4]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let x = golden_section(&mut |t: f64| Ok(-(t - 0.3) * (t - 0.3)), -1.0, 1.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-9);
    }
}
