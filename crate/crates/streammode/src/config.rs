//! TOML configuration with command-line overrides.
//!
//! Every key is optional. A command line is turned into a second
//! [`ConfigDocument`] and laid over the file with [`ConfigDocument::overlay`],
//! so flags always win. [`ConfigDocument::resolve`] fills the remaining gaps
//! with defaults and validates everything up front. The resolved document is
//! itself a complete config file and is what output artifacts echo.
//!
//! ```toml
//! [kernel]
//! family = "gaussian"        # gaussian | cauchy | fejer | multivariate-gaussian
//! epsilon = 1.0
//!
//! [estimator]
//! lambda = 1e-5
//! schedule = "harmonic"      # or "polynomial-decay" with a0, n0, gamma
//! warmup = 1000
//!
//! [experiment]
//! distribution = "normal"
//! params = [10.0, 1.0]
//! n_samples = 1000000
//! n_runs = 100
//! base_seed = 0
//! initial_points = [[5.0], [10.0], [15.0]]   # needs warmup = 0
//! parallel = true
//!
//! [output]
//! dir = "out"
//! trace_every = 1000
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use streammode_core::estimator::{DEFAULT_EPSILON, DEFAULT_LAMBDA, DEFAULT_WARMUP};
use streammode_core::{
    DistributionFamily, DistributionSpec, EstimatorConfig, KernelFamily, KernelSpec, StepSchedule,
};

use crate::error::Failure;
use crate::harness::ExperimentPlan;

pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_RUNS: usize = 100;
pub const DEFAULT_TRACE_EVERY: u64 = 1000;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigDocument {
    pub kernel: KernelSection,
    pub estimator: EstimatorSection,
    pub experiment: ExperimentSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warmup: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_points: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parallel: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_every: Option<u64>,
}

fn pick<T>(base: Option<T>, over: Option<T>) -> Option<T> {
    over.or(base)
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        ConfigDocument::parse(&text)
            .map_err(|e| Failure::config(format!("{}: {}", path.display(), e.message)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config documents always serialize")
    }

    /// `other` wins wherever it sets a key.
    pub fn overlay(self, other: ConfigDocument) -> ConfigDocument {
        let (k, e, x, o) = (self.kernel, self.estimator, self.experiment, self.output);
        ConfigDocument {
            kernel: KernelSection {
                family: pick(k.family, other.kernel.family),
                epsilon: pick(k.epsilon, other.kernel.epsilon),
            },
            estimator: EstimatorSection {
                lambda: pick(e.lambda, other.estimator.lambda),
                schedule: pick(e.schedule, other.estimator.schedule),
                a0: pick(e.a0, other.estimator.a0),
                n0: pick(e.n0, other.estimator.n0),
                gamma: pick(e.gamma, other.estimator.gamma),
                warmup: pick(e.warmup, other.estimator.warmup),
            },
            experiment: ExperimentSection {
                distribution: pick(x.distribution, other.experiment.distribution),
                params: pick(x.params, other.experiment.params),
                n_samples: pick(x.n_samples, other.experiment.n_samples),
                n_runs: pick(x.n_runs, other.experiment.n_runs),
                base_seed: pick(x.base_seed, other.experiment.base_seed),
                initial_points: pick(x.initial_points, other.experiment.initial_points),
                parallel: pick(x.parallel, other.experiment.parallel),
            },
            output: OutputSection {
                dir: pick(o.dir, other.output.dir),
                trace_every: pick(o.trace_every, other.output.trace_every),
            },
        }
    }

    /// Fill defaults and validate.
    pub fn resolve(self) -> Result<Resolved, Failure> {
        let kernel_family: KernelFamily = self
            .kernel
            .family
            .as_deref()
            .unwrap_or("gaussian")
            .parse()
            .map_err(Failure::config)?;
        let epsilon = self.kernel.epsilon.unwrap_or(DEFAULT_EPSILON);

        let schedule = match self.estimator.schedule.as_deref().unwrap_or("harmonic") {
            "harmonic" => {
                if self.estimator.a0.is_some() || self.estimator.n0.is_some() || self.estimator.gamma.is_some() {
                    return Err(Failure::config(
                        "a0, n0 and gamma only apply to the polynomial-decay schedule",
                    ));
                }
                StepSchedule::Harmonic
            }
            "polynomial-decay" => StepSchedule::polynomial_decay(
                self.estimator.a0.unwrap_or(1.0),
                self.estimator.n0.unwrap_or(0),
                self.estimator.gamma.unwrap_or(1.0),
            )
            .map_err(Failure::config)?,
            other => {
                return Err(Failure::config(format!(
                    "unknown schedule '{other}' (expected harmonic or polynomial-decay)"
                )))
            }
        };
        let lambda = self.estimator.lambda.unwrap_or(DEFAULT_LAMBDA);
        let warmup = self.estimator.warmup.unwrap_or(DEFAULT_WARMUP);

        let family: DistributionFamily = self
            .experiment
            .distribution
            .as_deref()
            .unwrap_or("normal")
            .parse()
            .map_err(Failure::config)?;
        let dist = match &self.experiment.params {
            Some(p) => DistributionSpec::from_params(family, p).map_err(Failure::config)?,
            None => DistributionSpec::reference(family),
        };

        let trace_every = self.output.trace_every.unwrap_or(DEFAULT_TRACE_EVERY);
        if trace_every == 0 {
            return Err(Failure::config("trace_every must be at least 1"));
        }

        let resolved = Resolved {
            document: ConfigDocument {
                kernel: KernelSection {
                    family: Some(kernel_family.name().to_string()),
                    epsilon: Some(epsilon),
                },
                estimator: EstimatorSection {
                    lambda: Some(lambda),
                    schedule: Some(
                        match schedule {
                            StepSchedule::Harmonic => "harmonic",
                            StepSchedule::PolynomialDecay { .. } => "polynomial-decay",
                        }
                        .to_string(),
                    ),
                    a0: match schedule {
                        StepSchedule::PolynomialDecay { a0, .. } => Some(a0),
                        StepSchedule::Harmonic => None,
                    },
                    n0: match schedule {
                        StepSchedule::PolynomialDecay { n0, .. } => Some(n0),
                        StepSchedule::Harmonic => None,
                    },
                    gamma: match schedule {
                        StepSchedule::PolynomialDecay { gamma, .. } => Some(gamma),
                        StepSchedule::Harmonic => None,
                    },
                    warmup: Some(warmup),
                },
                experiment: ExperimentSection {
                    distribution: Some(family.name().to_string()),
                    params: Some(dist.params()),
                    n_samples: Some(self.experiment.n_samples.unwrap_or(DEFAULT_SAMPLES)),
                    n_runs: Some(self.experiment.n_runs.unwrap_or(DEFAULT_RUNS)),
                    base_seed: Some(self.experiment.base_seed.unwrap_or(0)),
                    initial_points: Some(self.experiment.initial_points.unwrap_or_default()),
                    parallel: Some(self.experiment.parallel.unwrap_or(true)),
                },
                // The destination is not part of what makes a run reproducible.
                output: OutputSection {
                    dir: None,
                    trace_every: Some(trace_every),
                },
            },
            output_dir: self.output.dir,
            kernel_family,
            epsilon,
            lambda,
            schedule,
            warmup,
            dist,
        };
        // Surface kernel/estimator problems now rather than mid-run.
        resolved.estimator_config(resolved.dist.dim())?;
        Ok(resolved)
    }
}

/// A fully-defaulted, validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    /// Complete document, echoed into every artifact. `output.dir` is left
    /// out so artifacts do not depend on where they were written.
    pub document: ConfigDocument,
    pub kernel_family: KernelFamily,
    pub epsilon: f64,
    pub lambda: f64,
    pub schedule: StepSchedule,
    pub warmup: usize,
    pub dist: DistributionSpec,
    pub output_dir: Option<PathBuf>,
}

impl Resolved {
    /// Estimator configuration for `dim`-dimensional samples. A Gaussian
    /// kernel becomes the multivariate Gaussian when `dim > 1`.
    pub fn estimator_config(&self, dim: usize) -> Result<EstimatorConfig, Failure> {
        let kernel = match self.kernel_family {
            KernelFamily::Gaussian => KernelSpec::gaussian(self.epsilon, dim),
            family => KernelSpec::new(family, self.epsilon, dim),
        }
        .map_err(Failure::config)?;
        EstimatorConfig::new(kernel, self.lambda, self.schedule, self.warmup).map_err(Failure::config)
    }

    pub fn n_samples(&self) -> usize {
        self.document.experiment.n_samples.expect("resolved")
    }

    pub fn n_runs(&self) -> usize {
        self.document.experiment.n_runs.expect("resolved")
    }

    pub fn base_seed(&self) -> u64 {
        self.document.experiment.base_seed.expect("resolved")
    }

    pub fn initial_points(&self) -> &[Vec<f64>] {
        self.document.experiment.initial_points.as_deref().unwrap_or_default()
    }

    pub fn parallel(&self) -> bool {
        self.document.experiment.parallel.unwrap_or(true)
    }

    pub fn trace_every(&self) -> u64 {
        self.document.output.trace_every.expect("resolved")
    }

    pub fn output_dir(&self) -> Option<&Path> {
        self.output_dir.as_deref()
    }

    pub fn plan(&self) -> Result<ExperimentPlan, Failure> {
        ExperimentPlan::new(
            self.dist.clone(),
            self.estimator_config(self.dist.dim())?,
            self.n_samples(),
            self.n_runs(),
            self.base_seed(),
            self.initial_points().to_vec(),
        )
        .map_err(Failure::config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_resolves_to_defaults() {
        let r = ConfigDocument::default().resolve().unwrap();
        assert_eq!(r.kernel_family, KernelFamily::Gaussian);
        assert_eq!((r.epsilon, r.lambda, r.warmup), (1.0, 1e-5, 1000));
        assert_eq!(r.schedule, StepSchedule::Harmonic);
        assert_eq!(r.dist, DistributionSpec::normal(10.0, 1.0).unwrap());
        assert_eq!((r.n_samples(), r.n_runs(), r.base_seed()), (1_000_000, 100, 0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ConfigDocument::parse("[kernel]\nbandwidth = 2.0\n").is_err());
        assert!(ConfigDocument::parse("[plotting]\nx = 1\n").is_err());
        assert!(ConfigDocument::parse("[kernel]\nepsilon = \"wide\"\n").is_err());
    }

    #[test]
    fn overlay_prefers_the_second_document() {
        let file = ConfigDocument::parse("[kernel]\nepsilon = 2.0\nfamily = \"cauchy\"\n").unwrap();
        let flags = ConfigDocument {
            kernel: KernelSection {
                epsilon: Some(0.5),
                family: None,
            },
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.kernel.epsilon, Some(0.5));
        assert_eq!(merged.kernel.family.as_deref(), Some("cauchy"));
    }

    #[test]
    fn resolved_document_round_trips_through_toml() {
        let doc = ConfigDocument::parse(
            "[estimator]\nschedule = \"polynomial-decay\"\na0 = 10.0\nn0 = 10\ngamma = 0.6\nwarmup = 0\n\
             [experiment]\ndistribution = \"bvn\"\ninitial_points = [[1.0, 2.0]]\n",
        )
        .unwrap();
        let r = doc.resolve().unwrap();
        let again = ConfigDocument::parse(&r.document.to_toml()).unwrap().resolve().unwrap();
        assert_eq!(again, r);
        assert_eq!(r.schedule, StepSchedule::polynomial_decay(10.0, 10, 0.6).unwrap());
    }

    #[test]
    fn invalid_values_fail_at_resolution() {
        for text in [
            "[kernel]\nfamily = \"box\"\n",
            "[kernel]\nepsilon = -1.0\n",
            "[estimator]\nschedule = \"constant\"\n",
            "[estimator]\na0 = 2.0\n",
            "[estimator]\nschedule = \"polynomial-decay\"\ngamma = 0.4\n",
            "[experiment]\ndistribution = \"beta\"\nparams = [1.0, 1.0]\n",
            "[experiment]\ndistribution = \"bivariate-normal\"\n[kernel]\nfamily = \"fejer\"\n",
            "[output]\ntrace_every = 0\n",
        ] {
            assert!(ConfigDocument::parse(text).unwrap().resolve().is_err(), "{text}");
        }
    }
}
