//! The streaming mode estimator.
//!
//! An estimator starts either from an explicit point or by averaging its
//! first `warmup` samples. After that every sample triggers exactly one
//! update
//!
//! ```text
//! d     = grad K_eps(m_n - x) - lambda * m_n
//! m_n+1 = m_n + a_{n+1} * d
//! ```
//!
//! and is then dropped. Warm-up samples only form `m_0`; the update counter
//! starts at zero once the estimator is running.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{check_dim, Error};
use crate::kernel::KernelSpec;
use crate::schedule::StepSchedule;

/// Any component beyond this magnitude is reported as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e12;

pub const DEFAULT_EPSILON: f64 = 1.0;
pub const DEFAULT_LAMBDA: f64 = 1e-5;
pub const DEFAULT_WARMUP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub kernel: KernelSpec,
    pub lambda: f64,
    pub schedule: StepSchedule,
    pub warmup: usize,
}

impl EstimatorConfig {
    pub fn new(
        kernel: KernelSpec,
        lambda: f64,
        schedule: StepSchedule,
        warmup: usize,
    ) -> Result<Self, Error> {
        let config = EstimatorConfig {
            kernel,
            lambda,
            schedule,
            warmup,
        };
        config.validate()?;
        Ok(config)
    }

    /// Gaussian kernel (multivariate for `dim > 1`), `eps = 1`,
    /// `lambda = 1e-5`, `a_n = 1/n`, 1000 warm-up samples.
    pub fn default_for_dim(dim: usize) -> Result<Self, Error> {
        EstimatorConfig::new(
            KernelSpec::gaussian(DEFAULT_EPSILON, dim)?,
            DEFAULT_LAMBDA,
            StepSchedule::Harmonic,
            DEFAULT_WARMUP,
        )
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "regularization lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        self.schedule.validate()
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// `false` when `lambda == 0`: the iterates then lose their
    /// boundedness guarantee.
    pub fn is_regularized(&self) -> bool {
        self.lambda > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    WarmingUp,
    Running,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub phase: Phase,
    /// Current estimate `m_n`; meaningless while warming up.
    pub m: Vec<f64>,
    /// Number of gradient updates applied.
    pub n: u64,
    pub warmup_sum: Vec<f64>,
    pub warmup_count: usize,
}

#[derive(Debug, Clone)]
pub struct ModeEstimator {
    config: EstimatorConfig,
    state: EstimatorState,
    diff: Vec<f64>,
    grad: Vec<f64>,
}

impl ModeEstimator {
    /// `m0` must be given exactly when `config.warmup == 0`.
    pub fn new(config: EstimatorConfig, m0: Option<&[f64]>) -> Result<Self, Error> {
        config.validate()?;
        let dim = config.dim();
        let state = match (config.warmup, m0) {
            (0, None) => {
                return Err(Error::InitialEstimate(
                    "warmup = 0 requires an explicit initial estimate".into(),
                ))
            }
            (0, Some(m0)) => {
                check_dim(dim, m0.len())?;
                if !m0.iter().all(|v| v.is_finite()) {
                    return Err(Error::InitialEstimate("initial estimate must be finite".into()));
                }
                EstimatorState {
                    phase: Phase::Running,
                    m: m0.to_vec(),
                    n: 0,
                    warmup_sum: vec![0.0; dim],
                    warmup_count: 0,
                }
            }
            (_, Some(_)) => {
                return Err(Error::InitialEstimate(
                    "an initial estimate is only accepted with warmup = 0".into(),
                ))
            }
            (_, None) => EstimatorState {
                phase: Phase::WarmingUp,
                m: vec![0.0; dim],
                n: 0,
                warmup_sum: vec![0.0; dim],
                warmup_count: 0,
            },
        };
        Ok(ModeEstimator {
            config,
            state,
            diff: vec![0.0; dim],
            grad: vec![0.0; dim],
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn state(&self) -> &EstimatorState {
        &self.state
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    /// Current estimate, `None` until warm-up completes.
    pub fn estimate(&self) -> Option<&[f64]> {
        match self.state.phase {
            Phase::Running => Some(&self.state.m),
            Phase::WarmingUp => None,
        }
    }

    pub fn updates(&self) -> u64 {
        self.state.n
    }

    /// Feed one sample. On error the state is left untouched.
    pub fn observe(&mut self, sample: &[f64]) -> Result<(), Error> {
        check_dim(self.config.dim(), sample.len())?;
        if !sample.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteSample);
        }
        match self.state.phase {
            Phase::WarmingUp => {
                let st = &mut self.state;
                for (acc, x) in st.warmup_sum.iter_mut().zip(sample) {
                    *acc += x;
                }
                st.warmup_count += 1;
                if st.warmup_count == self.config.warmup {
                    let count = st.warmup_count as f64;
                    for (m, acc) in st.m.iter_mut().zip(&st.warmup_sum) {
                        *m = acc / count;
                    }
                    st.phase = Phase::Running;
                    st.n = 0;
                }
                Ok(())
            }
            Phase::Running => self.update(sample),
        }
    }

    fn update(&mut self, sample: &[f64]) -> Result<(), Error> {
        let m = &self.state.m;
        for ((d, mi), xi) in self.diff.iter_mut().zip(m).zip(sample) {
            *d = mi - xi;
        }
        self.config.kernel.grad_unchecked(&self.diff, &mut self.grad);
        let n = self.state.n + 1;
        let a = self.config.schedule.step_size(n);
        let lambda = self.config.lambda;
        // Stage the new point in `diff` so a failed guard leaves `m` intact.
        for ((next, mi), gi) in self.diff.iter_mut().zip(m).zip(&self.grad) {
            *next = mi + a * (gi - lambda * mi);
            if !(next.abs() <= DIVERGENCE_BOUND) {
                return Err(Error::Diverged { n });
            }
        }
        self.state.m.copy_from_slice(&self.diff);
        self.state.n = n;
        Ok(())
    }
}

/// One recorded iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub n: u64,
    pub m: Vec<f64>,
}

/// Keeps every `every`-th iterate plus the last one.
#[derive(Debug, Clone)]
pub struct TraceRecorder {
    every: u64,
    points: Vec<TracePoint>,
}

impl TraceRecorder {
    /// `every == 0` records nothing but the final point.
    pub fn new(every: u64) -> Self {
        TraceRecorder {
            every,
            points: Vec::new(),
        }
    }

    pub fn record(&mut self, n: u64, m: &[f64]) {
        if self.every > 0 && n.is_multiple_of(self.every) {
            self.points.push(TracePoint { n, m: m.to_vec() });
        }
    }

    /// Push the final iterate unless it was already recorded.
    pub fn finish(mut self, n: u64, m: &[f64]) -> Vec<TracePoint> {
        if self.points.last().map(|p| p.n) != Some(n) {
            self.points.push(TracePoint { n, m: m.to_vec() });
        }
        self.points
    }

    pub fn into_points(self) -> Vec<TracePoint> {
        self.points
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamOutcome {
    pub final_estimate: Vec<f64>,
    pub updates: u64,
    pub samples: usize,
    /// `(n, m_n)` every `trace_every` updates and at the end; empty if the
    /// stream ended exactly when warm-up did.
    pub trajectory: Vec<TracePoint>,
}

/// An estimator error tagged with the zero-based index of the sample that
/// caused it.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamError {
    pub index: usize,
    pub error: Error,
}

impl fmt::Display for StreamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sample {}: {}", self.index, self.error)
    }
}

impl core::error::Error for StreamError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Fold a whole stream through a fresh estimator.
pub fn run_stream<I>(
    config: EstimatorConfig,
    m0: Option<&[f64]>,
    samples: I,
    trace_every: u64,
) -> Result<StreamOutcome, StreamError>
where
    I: IntoIterator,
    I::Item: AsRef<[f64]>,
{
    let mut est =
        ModeEstimator::new(config, m0).map_err(|error| StreamError { index: 0, error })?;
    let mut trace = TraceRecorder::new(trace_every);
    let mut count = 0;
    for (index, x) in samples.into_iter().enumerate() {
        est.observe(x.as_ref())
            .map_err(|error| StreamError { index, error })?;
        if est.phase() == Phase::Running && est.updates() > 0 {
            trace.record(est.updates(), &est.state().m);
        }
        count = index + 1;
    }
    let Some(m) = est.estimate() else {
        return Err(StreamError {
            index: count,
            error: Error::IncompleteWarmup {
                seen: count,
                required: config.warmup,
            },
        });
    };
    let trajectory = if est.updates() == 0 {
        trace.into_points()
    } else {
        trace.finish(est.updates(), m)
    };
    Ok(StreamOutcome {
        final_estimate: m.to_vec(),
        updates: est.updates(),
        samples: count,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelFamily;

    fn gaussian_config(lambda: f64, warmup: usize) -> EstimatorConfig {
        EstimatorConfig::new(
            KernelSpec::new(KernelFamily::Gaussian, 1.0, 1).unwrap(),
            lambda,
            StepSchedule::Harmonic,
            warmup,
        )
        .unwrap()
    }

    #[test]
    fn explicit_start() {
        let est = ModeEstimator::new(gaussian_config(1e-5, 0), Some(&[5.0])).unwrap();
        assert_eq!(est.phase(), Phase::Running);
        assert_eq!(est.estimate(), Some(&[5.0][..]));
        assert_eq!(est.updates(), 0);
    }

    #[test]
    fn initial_estimate_contract() {
        assert!(matches!(
            ModeEstimator::new(gaussian_config(1e-5, 0), None),
            Err(Error::InitialEstimate(_))
        ));
        assert!(matches!(
            ModeEstimator::new(gaussian_config(1e-5, 3), Some(&[1.0])),
            Err(Error::InitialEstimate(_))
        ));
        assert!(ModeEstimator::new(gaussian_config(1e-5, 0), Some(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn warmup_average() {
        let mut est = ModeEstimator::new(gaussian_config(1e-5, 2), None).unwrap();
        est.observe(&[3.0]).unwrap();
        assert_eq!(est.estimate(), None);
        est.observe(&[5.0]).unwrap();
        assert_eq!(est.phase(), Phase::Running);
        assert_eq!(est.estimate(), Some(&[4.0][..]));
        assert_eq!(est.updates(), 0);
    }

    #[test]
    fn coincident_sample_only_shrinks() {
        let mut est = ModeEstimator::new(gaussian_config(1e-5, 0), Some(&[10.0])).unwrap();
        est.observe(&[10.0]).unwrap();
        assert_eq!(est.estimate().unwrap()[0], 10.0 * (1.0 - 1e-5));
        assert_eq!(est.updates(), 1);
    }

    #[test]
    fn first_step_moves_toward_sample() {
        let mut est = ModeEstimator::new(gaussian_config(0.0, 0), Some(&[0.0])).unwrap();
        est.observe(&[1.0]).unwrap();
        let m = est.estimate().unwrap()[0];
        assert!((m - 0.241_970_724_519_143_35).abs() < 1e-15);
    }

    #[test]
    fn tenth_update_uses_a_tenth() {
        let cfg = gaussian_config(0.0, 0);
        let mut est = ModeEstimator::new(cfg, Some(&[2.0])).unwrap();
        est.state.n = 9;
        est.observe(&[3.0]).unwrap();
        let expected = 2.0 + 0.1 * cfg.kernel.grad(&[-1.0]).unwrap()[0];
        assert_eq!(est.estimate().unwrap()[0], expected);
        assert_eq!(est.updates(), 10);
    }

    #[test]
    fn bad_samples_leave_state_unchanged() {
        let mut est = ModeEstimator::new(gaussian_config(1e-5, 0), Some(&[1.0])).unwrap();
        let before = est.state().clone();
        assert_eq!(est.observe(&[f64::NAN]), Err(Error::NonFiniteSample));
        assert_eq!(est.observe(&[f64::INFINITY]), Err(Error::NonFiniteSample));
        assert!(matches!(est.observe(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        assert_eq!(est.state(), &before);
    }

    #[test]
    fn divergence_guard_trips() {
        // A huge first step with a large ridge term overshoots the guard.
        let cfg = EstimatorConfig::new(
            KernelSpec::new(KernelFamily::Gaussian, 1.0, 1).unwrap(),
            1e6,
            StepSchedule::polynomial_decay(1e6, 0, 1.0).unwrap(),
            0,
        )
        .unwrap();
        let mut est = ModeEstimator::new(cfg, Some(&[10.0])).unwrap();
        let before = est.state().clone();
        assert_eq!(est.observe(&[0.0]), Err(Error::Diverged { n: 1 }));
        assert_eq!(est.state(), &before);
    }

    #[test]
    fn rejects_negative_lambda() {
        let k = KernelSpec::new(KernelFamily::Gaussian, 1.0, 1).unwrap();
        assert!(EstimatorConfig::new(k, -1e-3, StepSchedule::Harmonic, 0).is_err());
        let zero = EstimatorConfig::new(k, 0.0, StepSchedule::Harmonic, 0).unwrap();
        assert!(!zero.is_regularized());
    }

    #[test]
    fn stream_of_only_warmup() {
        let out = run_stream(gaussian_config(1e-5, 3), None, [[1.0], [2.0], [3.0]], 1).unwrap();
        assert_eq!(out.final_estimate, [2.0]);
        assert!(out.trajectory.is_empty());
        assert_eq!(out.updates, 0);
    }

    #[test]
    fn stream_errors_carry_the_index() {
        let err = run_stream(
            gaussian_config(1e-5, 1),
            None,
            [[1.0], [2.0], [f64::NAN]],
            1,
        )
        .unwrap_err();
        assert_eq!(err.index, 2);
        assert_eq!(err.error, Error::NonFiniteSample);

        let err = run_stream(gaussian_config(1e-5, 5), None, [[1.0], [2.0]], 1).unwrap_err();
        assert_eq!(
            err.error,
            Error::IncompleteWarmup {
                seen: 2,
                required: 5
            }
        );
    }

    #[test]
    fn trajectory_ends_at_final() {
        let samples: Vec<[f64; 1]> = (0..25).map(|i| [i as f64 * 0.1]).collect();
        let out = run_stream(gaussian_config(1e-5, 0), Some(&[1.0]), &samples, 10).unwrap();
        let ns: Vec<u64> = out.trajectory.iter().map(|p| p.n).collect();
        assert_eq!(ns, [10, 20, 25]);
        assert_eq!(out.trajectory.last().unwrap().m, out.final_estimate);

        let out = run_stream(gaussian_config(1e-5, 0), Some(&[1.0]), &samples[..20], 10).unwrap();
        let ns: Vec<u64> = out.trajectory.iter().map(|p| p.n).collect();
        assert_eq!(ns, [10, 20]);
    }
}
