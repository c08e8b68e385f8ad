use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use streammode::config::{ConfigDocument, EstimatorSection, ExperimentSection, KernelSection, OutputSection, Resolved};
use streammode::harness::{replicate, trace_from_initials, HarnessError};
use streammode::io::{write_comments, write_labeled_trace_csv, write_row, write_trace_csv, InputError, SampleReader};
use streammode::report::{to_json, write_json, ReplicationRecord, RunRecord, TrajectorySummary};
use streammode::verify::verify;
use streammode::{Failure, FailureKind};
use streammode_core::{run_stream, SeededRng, StreamOutcome};

/// Online mode estimation by kernel-smoothed stochastic gradient ascent.
#[derive(Parser)]
#[command(name = "streammode", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the mode of samples read from a file or standard input.
    Estimate {
        /// Sample file, one observation per line; `-` reads standard input.
        #[arg(default_value = "-")]
        input: String,
    },
    /// Estimate the mode of one simulated stream.
    Simulate,
    /// Repeat simulated runs and summarize the final estimates.
    Replicate,
    /// Check the kernel and oracle identities for the configured setup.
    Verify,
    /// Write the simulated stream that `simulate` would consume.
    Sample {
        /// Destination file (default: standard output).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

/// Every flag overrides the matching config-file key.
#[derive(Args)]
struct Overrides {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Kernel family: gaussian, cauchy, fejer, multivariate-gaussian.
    #[arg(long, global = true)]
    kernel: Option<String>,
    /// Kernel bandwidth.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Regularization coefficient.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Step-size schedule: harmonic or polynomial-decay.
    #[arg(long, global = true)]
    schedule: Option<String>,
    #[arg(long, global = true)]
    a0: Option<f64>,
    #[arg(long, global = true)]
    n0: Option<u64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Samples averaged into the initial estimate.
    #[arg(long, global = true)]
    warmup: Option<usize>,
    /// Distribution family: normal, gamma, exponential, weibull, beta,
    /// bivariate-normal, dirichlet.
    #[arg(long, global = true)]
    distribution: Option<String>,
    /// Distribution parameters, comma-separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    params: Option<Vec<f64>>,
    /// Samples per run, warm-up included.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Initial estimate (comma-separated coordinates); repeat for several.
    #[arg(long = "initial", global = true, allow_hyphen_values = true)]
    initial: Vec<String>,
    /// Run replicates on one thread.
    #[arg(long, global = true)]
    serial: bool,
    /// Directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    trace_every: Option<u64>,
}

impl Overrides {
    fn document(&self) -> Result<ConfigDocument, Failure> {
        let initial_points = if self.initial.is_empty() {
            None
        } else {
            Some(
                self.initial
                    .iter()
                    .map(|s| {
                        s.split(',')
                            .map(|t| t.trim().parse::<f64>())
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|e| Failure::config(format!("--initial {s}: {e}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            )
        };
        Ok(ConfigDocument {
            kernel: KernelSection {
                family: self.kernel.clone(),
                epsilon: self.epsilon,
            },
            estimator: EstimatorSection {
                lambda: self.lambda,
                schedule: self.schedule.clone(),
                a0: self.a0,
                n0: self.n0,
                gamma: self.gamma,
                warmup: self.warmup,
            },
            experiment: ExperimentSection {
                distribution: self.distribution.clone(),
                params: self.params.clone(),
                n_samples: self.samples,
                n_runs: self.runs,
                base_seed: self.seed,
                initial_points,
                parallel: self.serial.then_some(false),
            },
            output: OutputSection {
                dir: self.out.clone(),
                trace_every: self.trace_every,
            },
        })
    }

    fn resolve(&self) -> Result<Resolved, Failure> {
        let file = match &self.config {
            Some(path) => ConfigDocument::load(path)?,
            None => ConfigDocument::default(),
        };
        file.overlay(self.document()?).resolve()
    }
}

fn output_dir(resolved: &Resolved) -> Result<Option<&Path>, Failure> {
    let Some(dir) = resolved.output_dir() else {
        return Ok(None);
    };
    fs::create_dir_all(dir).map_err(|e| Failure::output(format!("cannot create {}: {e}", dir.display())))?;
    Ok(Some(dir))
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), Failure> {
    let fail = |e: io::Error| Failure::output(format!("cannot write {}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(fail)?);
    write(&mut w).and_then(|_| w.flush()).map_err(fail)
}

fn harness_failure(err: HarnessError) -> Failure {
    match &err {
        HarnessError::InvalidPlan(_) => Failure::config(err),
        HarnessError::Run { source, .. } => Failure::from_stream(&err, &source.error),
    }
}

fn finish_run(resolved: &Resolved, record: RunRecord, outcome: &StreamOutcome) -> Result<(), Failure> {
    if let Some(dir) = output_dir(resolved)? {
        write_json(&dir.join("run.json"), &record)?;
        write_file(&dir.join("trace.csv"), |w| write_trace_csv(w, &outcome.trajectory))?;
    }
    print!("{}", to_json(&record));
    Ok(())
}

fn cmd_estimate(resolved: &Resolved, input: &str) -> Result<(), Failure> {
    let reader: Box<dyn io::BufRead> = if input == "-" {
        Box::new(io::stdin().lock())
    } else {
        let file = File::open(input).map_err(|e| Failure::data(format!("cannot open {input}: {e}")))?;
        Box::new(BufReader::new(file))
    };
    let mut rows = SampleReader::new(reader);
    let first = match rows.next() {
        None => return Err(Failure::data(format!("{input}: no samples"))),
        Some(Err(e)) => return Err(Failure::data(format!("{input}: {e}"))),
        Some(Ok(row)) => row,
    };
    let config = resolved.estimator_config(first.len())?;
    let m0 = match (config.warmup, resolved.initial_points()) {
        (0, [m0, ..]) => Some(m0.as_slice()),
        (0, []) => return Err(Failure::config("warmup = 0 needs an initial point (--initial)")),
        _ => None,
    };

    let mut bad_row: Option<InputError> = None;
    let stream = std::iter::once(first).chain(rows.map_while(|r| r.map_err(|e| bad_row = Some(e)).ok()));
    let outcome = run_stream(config, m0, stream, resolved.trace_every());
    if let Some(e) = bad_row {
        return Err(Failure::data(format!("{input}: {e}")));
    }
    let outcome = outcome.map_err(|e| Failure::from_stream(input, &e.error))?;
    let record = RunRecord {
        config: resolved.document.clone(),
        seed: None,
        input: Some(input.to_string()),
        final_estimate: outcome.final_estimate.clone(),
        updates: outcome.updates,
        samples: outcome.samples,
    };
    finish_run(resolved, record, &outcome)
}

fn cmd_simulate(resolved: &Resolved) -> Result<(), Failure> {
    let plan = resolved.plan()?;
    let outcome = plan.run(0, resolved.trace_every()).map_err(harness_failure)?;
    let record = RunRecord {
        config: resolved.document.clone(),
        seed: Some(plan.seed(0)),
        input: None,
        final_estimate: outcome.final_estimate.clone(),
        updates: outcome.updates,
        samples: outcome.samples,
    };
    finish_run(resolved, record, &outcome)
}

fn cmd_replicate(resolved: &Resolved) -> Result<(), Failure> {
    let plan = resolved.plan()?;
    let report = replicate(&plan, resolved.parallel()).map_err(harness_failure)?;
    eprintln!("replicate: {} runs in {:.3} s", plan.n_runs, report.wall_time_s);
    let traces = if plan.initial_points.is_empty() {
        Vec::new()
    } else {
        trace_from_initials(&plan, resolved.trace_every()).map_err(harness_failure)?
    };
    let record = ReplicationRecord {
        config: resolved.document.clone(),
        report,
        trajectories: traces.iter().map(TrajectorySummary::from).collect(),
    };
    if let Some(dir) = output_dir(resolved)? {
        write_json(&dir.join("report.json"), &record)?;
        if !traces.is_empty() {
            write_file(&dir.join("trace.csv"), |w| write_labeled_trace_csv(w, &traces))?;
        }
    }
    print!("{}", to_json(&record));
    Ok(())
}

fn cmd_verify(resolved: &Resolved) -> Result<(), Failure> {
    let report = verify(resolved)?;
    if let Some(dir) = output_dir(resolved)? {
        write_json(&dir.join("verify.json"), &report)?;
    }
    print!("{}", to_json(&report));
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| c.status == streammode::verify::Status::Fail)
            .map(|c| c.name)
            .collect();
        Err(Failure::new(FailureKind::VerifyFailed, format!("failed checks: {}", failed.join(", "))))
    }
}

fn cmd_sample(resolved: &Resolved, output: Option<&Path>) -> Result<(), Failure> {
    let plan = resolved.plan()?;
    let seed = plan.seed(0);
    let header = [
        format!("distribution {} {:?}", plan.dist.family(), plan.dist.params()),
        format!("seed {seed}"),
        format!("samples {}", plan.n_samples),
    ];
    let body = |w: &mut dyn Write| -> io::Result<()> {
        write_comments(&mut *w, &header)?;
        let mut rng = SeededRng::new(seed);
        let mut x = vec![0.0; plan.dist.dim()];
        for _ in 0..plan.n_samples {
            plan.dist.sample_into(&mut rng, &mut x).expect("dimension matches");
            write_row(&mut *w, &x)?;
        }
        Ok(())
    };
    match output {
        Some(path) => write_file(path, |w| body(w)),
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            body(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| Failure::output(format!("cannot write samples: {e}")))
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let resolved = cli.overrides.resolve()?;
    match &cli.command {
        Command::Estimate { input } => cmd_estimate(&resolved, input),
        Command::Simulate => cmd_simulate(&resolved),
        Command::Replicate => cmd_replicate(&resolved),
        Command::Verify => cmd_verify(&resolved),
        Command::Sample { output } => cmd_sample(&resolved, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
