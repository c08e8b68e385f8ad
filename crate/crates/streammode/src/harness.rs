//! Repeated seeded runs of the estimator on simulated streams.
//!
//! Run `i` of a plan draws its samples from `SeededRng::new(base_seed + i)`
//! (wrapping). With `initial_points` set (and `warmup = 0`) run `i` starts at
//! `initial_points[i % k]`, so the `k` trajectories of
//! [`trace_from_initials`] are exactly the first `k` runs of [`replicate`].

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use streammode_core::{
    run_stream, DistributionSpec, EstimatorConfig, SeededRng, StreamError, StreamOutcome,
    TracePoint,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid experiment plan: {0}")]
    InvalidPlan(String),
    #[error("run {index} (seed {seed}) failed at {source}")]
    Run {
        index: usize,
        seed: u64,
        source: StreamError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub dist: DistributionSpec,
    pub config: EstimatorConfig,
    /// Samples per run, warm-up included.
    pub n_samples: usize,
    pub n_runs: usize,
    pub base_seed: u64,
    pub initial_points: Vec<Vec<f64>>,
}

impl ExperimentPlan {
    pub fn new(
        dist: DistributionSpec,
        config: EstimatorConfig,
        n_samples: usize,
        n_runs: usize,
        base_seed: u64,
        initial_points: Vec<Vec<f64>>,
    ) -> Result<Self, HarnessError> {
        let invalid = |m: String| Err(HarnessError::InvalidPlan(m));
        if config.dim() != dist.dim() {
            return invalid(format!(
                "kernel dimension {} does not match distribution dimension {}",
                config.dim(),
                dist.dim()
            ));
        }
        if n_runs == 0 {
            return invalid("n_runs must be at least 1".into());
        }
        if n_samples <= config.warmup {
            return invalid(format!(
                "n_samples ({n_samples}) must exceed the warm-up length ({})",
                config.warmup
            ));
        }
        match (config.warmup, initial_points.is_empty()) {
            (0, true) => return invalid("warmup = 0 needs initial_points".into()),
            (w, false) if w > 0 => {
                return invalid("initial_points are only used with warmup = 0".into())
            }
            _ => {}
        }
        if let Some(p) = initial_points.iter().find(|p| p.len() != dist.dim()) {
            return invalid(format!(
                "initial point {p:?} has {} coordinates, expected {}",
                p.len(),
                dist.dim()
            ));
        }
        Ok(ExperimentPlan {
            dist,
            config,
            n_samples,
            n_runs,
            base_seed,
            initial_points,
        })
    }

    pub fn seed(&self, index: usize) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }

    pub fn initial_point(&self, index: usize) -> Option<&[f64]> {
        if self.initial_points.is_empty() {
            None
        } else {
            Some(&self.initial_points[index % self.initial_points.len()])
        }
    }

    /// One complete run. `trace_every = 0` records only the final point.
    pub fn run(&self, index: usize, trace_every: u64) -> Result<StreamOutcome, HarnessError> {
        let seed = self.seed(index);
        let mut rng = SeededRng::new(seed);
        let samples = (0..self.n_samples).map(|_| self.dist.sample(&mut rng));
        run_stream(self.config, self.initial_point(index), samples, trace_every)
            .map_err(|source| HarnessError::Run { index, seed, source })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationReport {
    pub per_run_final: Vec<Vec<f64>>,
    pub seeds: Vec<u64>,
    pub mean_estimate: Vec<f64>,
    /// Sample standard deviation (n - 1 denominator); zero for a single run.
    pub std_estimate: Vec<f64>,
    pub analytic_mode: Vec<f64>,
    /// Kept out of serialized reports so they stay byte-identical.
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Componentwise mean and sample standard deviation.
pub fn mean_and_std(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let dim = rows.first().map_or(0, Vec::len);
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..dim)
        .map(|a| rows.iter().map(|r| r[a]).sum::<f64>() / n)
        .collect();
    let std = (0..dim)
        .map(|a| {
            if rows.len() < 2 {
                return 0.0;
            }
            let ss: f64 = rows.iter().map(|r| (r[a] - mean[a]).powi(2)).sum();
            (ss / (n - 1.0)).sqrt()
        })
        .collect();
    (mean, std)
}

/// Run every replicate of `plan`. The result does not depend on `parallel`.
pub fn replicate(plan: &ExperimentPlan, parallel: bool) -> Result<ReplicationReport, HarnessError> {
    let started = Instant::now();
    let finals = |i: usize| plan.run(i, 0).map(|o| o.final_estimate);
    let per_run_final = if parallel {
        (0..plan.n_runs)
            .into_par_iter()
            .map(finals)
            .collect::<Result<Vec<_>, _>>()?
    } else {
        (0..plan.n_runs).map(finals).collect::<Result<Vec<_>, _>>()?
    };
    let (mean_estimate, std_estimate) = mean_and_std(&per_run_final);
    Ok(ReplicationReport {
        seeds: (0..plan.n_runs).map(|i| plan.seed(i)).collect(),
        per_run_final,
        mean_estimate,
        std_estimate,
        analytic_mode: plan.dist.analytic_mode().to_vec(),
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrajectory {
    pub label: String,
    pub seed: u64,
    /// Starts with `(0, m_0)`.
    pub points: Vec<TracePoint>,
}

impl LabeledTrajectory {
    pub fn final_point(&self) -> &[f64] {
        &self.points.last().expect("trajectories are never empty").m
    }
}

/// One trajectory per initial point, each on its own seed.
pub fn trace_from_initials(
    plan: &ExperimentPlan,
    trace_every: u64,
) -> Result<Vec<LabeledTrajectory>, HarnessError> {
    if plan.initial_points.is_empty() || plan.config.warmup != 0 {
        return Err(HarnessError::InvalidPlan(
            "tracing from initial points needs initial_points and warmup = 0".into(),
        ));
    }
    (0..plan.initial_points.len())
        .map(|i| {
            let start = &plan.initial_points[i];
            let outcome = plan.run(i, trace_every)?;
            let mut points = vec![TracePoint {
                n: 0,
                m: start.clone(),
            }];
            points.extend(outcome.trajectory);
            let label = start.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
            Ok(LabeledTrajectory {
                label: format!("m0={label}"),
                seed: plan.seed(i),
                points,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use streammode_core::{KernelSpec, StepSchedule};

    fn plan(n_samples: usize, n_runs: usize, warmup: usize, initials: Vec<Vec<f64>>) -> Result<ExperimentPlan, HarnessError> {
        let config = EstimatorConfig::new(
            KernelSpec::gaussian(1.0, 1).unwrap(),
            1e-5,
            StepSchedule::Harmonic,
            warmup,
        )
        .unwrap();
        ExperimentPlan::new(DistributionSpec::normal(10.0, 1.0).unwrap(), config, n_samples, n_runs, 0, initials)
    }

    #[test]
    fn plan_invariants() {
        assert!(plan(2000, 1, 1000, vec![]).is_ok());
        assert!(plan(1000, 1, 1000, vec![]).is_err());
        assert!(plan(2000, 0, 1000, vec![]).is_err());
        assert!(plan(2000, 1, 0, vec![]).is_err());
        assert!(plan(2000, 1, 1000, vec![vec![5.0]]).is_err());
        assert!(plan(2000, 1, 0, vec![vec![5.0, 1.0]]).is_err());
        assert!(plan(2000, 1, 0, vec![vec![5.0]]).is_ok());
    }

    #[test]
    fn single_run_has_zero_spread() {
        let p = plan(3000, 1, 1000, vec![]).unwrap();
        let r = replicate(&p, false).unwrap();
        assert_eq!(r.std_estimate, vec![0.0]);
        assert_eq!(r.mean_estimate, r.per_run_final[0]);
    }

    #[test]
    fn sample_std_uses_n_minus_one() {
        let (m, s) = mean_and_std(&[vec![1.0, 0.0], vec![3.0, 0.0]]);
        assert_eq!(m, vec![2.0, 0.0]);
        assert!((s[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s[1], 0.0);
    }

    #[test]
    fn trajectories_begin_at_their_initial_point() {
        let p = plan(1, 2, 0, vec![vec![5.0], vec![15.0]]).unwrap();
        let t = trace_from_initials(&p, 1).unwrap();
        assert_eq!(t[0].points[0], TracePoint { n: 0, m: vec![5.0] });
        assert_eq!(t[1].label, "m0=15");
        assert_eq!(t[0].points.len(), 2);
    }
}
