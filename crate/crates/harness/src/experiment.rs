//! Monte Carlo experiment runner and CSV emitters.
//!
//! Trial `t` uses the network seed `derive_seed(master_seed, t)`; the pilot
//! length only truncates the pilot space, so every `tau` of a sweep sees the
//! same topology and fading. Trials run on the rayon pool and the results are
//! written afterwards in (trial, tau, algorithm) order by a single writer, so
//! the output does not depend on the number of workers.
//!
//! Every summary value is recomputed from the returned pilots through the
//! estimation module; no algorithm reports its own objective there.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{debug, info};
use pilotforge_core::estimation::{evaluate, weights, EstimationReport, WeightPreset};
use pilotforge_core::maxmin::{run_algorithm3, Algo3Options};
use pilotforge_core::nonorth::{
    run_algorithm1, run_algorithm1_correlated, Algo1Options, UpdateRule,
};
use pilotforge_core::orth::{run_algorithm2, run_algorithm2_correlated, Algo2Options, OrthStep};
use pilotforge_core::rng::derive_seed;
use pilotforge_core::{generate, CoreError, NetworkInstance, PilotConfiguration};
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{baseline_orthogonal, baseline_random, baseline_smart, lower_bound_mse};
use crate::config::{Algorithm, AlgorithmOptions, ConfigError, ExperimentSpec};

/// Pass limit of the greedy assignment baseline.
pub const SMART_PASSES: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure in trial {trial}, tau {tau}, {algorithm}: {source}")]
    Numerical {
        trial: usize,
        tau: usize,
        algorithm: Algorithm,
        source: CoreError,
    },
    #[error("network generation failed: {0}")]
    Network(CoreError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl HarnessError {
    /// Process exit code: 1 for configuration and I/O problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Numerical { .. } | HarnessError::Network(_) => 2,
            _ => 1,
        }
    }
}

/// Result of one algorithm on one instance.
#[derive(Clone, Debug)]
pub struct AlgoOutcome {
    /// `None` for the lower bound, which has no pilots.
    pub pilots: Option<PilotConfiguration>,
    pub report: EstimationReport,
    pub iterations: usize,
    /// Weighted sum MSE per iteration (min SINR `lambda'` for `maxmin_fp`),
    /// starting with the initial point. Empty for non-iterative methods.
    pub trace: Vec<f64>,
    /// Wall time since the start of the run for each `trace` entry.
    pub trace_elapsed_ms: Vec<f64>,
    /// Update option the iterative method ran with; empty otherwise.
    pub option: &'static str,
    pub wall_ms: f64,
}

/// Network realization of one trial with pilot length `tau`.
pub fn trial_instance(
    spec: &ExperimentSpec,
    trial: usize,
    tau: usize,
) -> Result<NetworkInstance, CoreError> {
    let mut cfg = spec.network.clone();
    cfg.seed = derive_seed(spec.seed, trial as u64);
    cfg.pilot_length = tau;
    generate(&cfg)
}

/// Orthogonal baseline when it exists, random pilots otherwise.
fn default_init(instance: &NetworkInstance) -> Result<PilotConfiguration, CoreError> {
    if instance.tau() >= instance.users_per_cell() {
        Ok(PilotConfiguration::Orthogonal(baseline_orthogonal(
            instance,
        )?))
    } else {
        Ok(baseline_random(instance))
    }
}

/// Runs one algorithm and evaluates its output.
pub fn run_algorithm(
    instance: &NetworkInstance,
    algorithm: Algorithm,
    preset: WeightPreset,
    options: &AlgorithmOptions,
) -> Result<AlgoOutcome, CoreError> {
    let w = weights(instance, preset);
    let start = Instant::now();
    let mut iterations = 0;
    let mut trace = Vec::new();
    let mut trace_elapsed_ms = Vec::new();
    let mut option = "";
    let pilots = match algorithm {
        Algorithm::LowerBound => None,
        Algorithm::BaselineOrthogonal => Some(PilotConfiguration::Orthogonal(baseline_orthogonal(
            instance,
        )?)),
        Algorithm::BaselineRandom => Some(baseline_random(instance)),
        Algorithm::SmartAssignment => Some(PilotConfiguration::Orthogonal(baseline_smart(
            instance,
            SMART_PASSES,
        )?)),
        Algorithm::NonorthFp => {
            let mut opts = Algo1Options::new(default_init(instance)?, w.clone());
            opts.update_rule = options.nonorth_update;
            opts.max_iters = options.nonorth_max_iters;
            opts.rel_tol = options.rel_tol;
            let (p, t) = if instance.is_correlated() {
                run_algorithm1_correlated(instance, &opts)?
            } else {
                run_algorithm1(instance, &opts)?
            };
            iterations = t.iterations_used;
            trace = t.objective;
            trace_elapsed_ms = t.elapsed_ms;
            option = match options.nonorth_update {
                UpdateRule::LagrangeBisection => "lagrange",
                UpdateRule::NoiselessScaling => "scaled",
            };
            Some(p)
        }
        Algorithm::OrthFp => {
            let mut opts = Algo2Options::new(baseline_orthogonal(instance)?, w.clone());
            opts.step = options.orth_step;
            opts.max_iters = options.orth_max_iters;
            opts.rel_tol = options.rel_tol;
            let (p, t) = if instance.is_correlated() {
                run_algorithm2_correlated(instance, &opts)?
            } else {
                run_algorithm2(instance, &opts)?
            };
            iterations = t.iterations_used;
            trace = t.objective;
            trace_elapsed_ms = t.elapsed_ms;
            option = match options.orth_step {
                OrthStep::Matching => "matching",
                OrthStep::LinearSearch => "linear_search",
            };
            Some(PilotConfiguration::Orthogonal(p))
        }
        Algorithm::MaxminFp => {
            let mut opts = Algo3Options::new(baseline_orthogonal(instance)?);
            opts.max_outer = options.maxmin_max_outer;
            opts.max_inner = options.maxmin_max_inner;
            opts.rel_tol = options.rel_tol;
            opts.assignment_passes = SMART_PASSES;
            let (p, t) = run_algorithm3(instance, &opts)?;
            iterations = t.inner_iterations;
            trace = t.lambda;
            trace_elapsed_ms = t.elapsed_ms;
            option = "dinkelbach";
            Some(PilotConfiguration::Orthogonal(p))
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let report = match &pilots {
        Some(p) => evaluate(instance, p, &w)?,
        None => lower_bound_mse(instance, &w),
    };
    Ok(AlgoOutcome {
        pilots,
        report,
        iterations,
        trace,
        trace_elapsed_ms,
        option,
        wall_ms,
    })
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// One line of `summary.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub trial: usize,
    pub tau: usize,
    pub algorithm: String,
    pub weighted_sum_mse: f64,
    pub weighted_sum_mse_db: f64,
    /// `weighted_sum_mse_db` minus the lower bound of the same trial and `tau`.
    pub db_above_lower_bound: f64,
    /// Minimum user rate: large-M rate for orthogonal pilots, finite-M rate
    /// otherwise; empty when no rate applies.
    pub min_rate: Option<f64>,
    /// Finite-M sum rate; empty for correlated fading and the lower bound.
    pub sum_rate: Option<f64>,
    pub iterations: usize,
    pub wall_ms: f64,
}

/// One line of `trace_<algorithm>.csv`; `iter` 0 is the initial point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub trial: usize,
    pub tau: usize,
    pub iter: usize,
    pub objective: f64,
    pub objective_db: f64,
    pub option: String,
    pub elapsed_ms: f64,
}

/// One line of `assignment_<algorithm>.csv`: the final orthogonal design.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssignmentRow {
    pub trial: usize,
    pub tau: usize,
    pub cell: usize,
    pub user: usize,
    pub pilot_index: usize,
    pub power_mw: f64,
    /// Large-M rate; capped for users without a co-pilot interferer.
    pub asymptotic_rate: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentResults {
    pub rows: Vec<ResultRow>,
    /// Per algorithm, in `spec.algorithms` order.
    pub traces: Vec<(Algorithm, Vec<TraceRow>)>,
    /// Per algorithm, in `spec.algorithms` order; empty unless the
    /// algorithm returns orthogonal pilots.
    pub assignments: Vec<(Algorithm, Vec<AssignmentRow>)>,
}

impl ExperimentResults {
    pub fn rows_for(&self, algorithm: Algorithm, tau: usize) -> impl Iterator<Item = &ResultRow> {
        self.rows
            .iter()
            .filter(move |r| r.algorithm == algorithm.name() && r.tau == tau)
    }
}

fn min_rate(report: &EstimationReport) -> Option<f64> {
    report
        .rate_asymptotic
        .as_ref()
        .or(report.rate_finite.as_ref())
        .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
}

struct TrialOutput {
    rows: Vec<ResultRow>,
    traces: Vec<Vec<TraceRow>>,
    assignments: Vec<Vec<AssignmentRow>>,
}

fn run_trial(spec: &ExperimentSpec, trial: usize) -> Result<TrialOutput, HarnessError> {
    let mut out = TrialOutput {
        rows: Vec::new(),
        traces: vec![Vec::new(); spec.algorithms.len()],
        assignments: vec![Vec::new(); spec.algorithms.len()],
    };
    for &tau in &spec.taus {
        let instance = trial_instance(spec, trial, tau).map_err(HarnessError::Network)?;
        if let Some(w) = &instance.layout_warning {
            debug!("trial {trial}: {w}");
        }
        let lb = lower_bound_mse(&instance, &weights(&instance, spec.weights)).weighted_sum_mse;
        for (i, &algorithm) in spec.algorithms.iter().enumerate() {
            let o = run_algorithm(&instance, algorithm, spec.weights, &spec.options).map_err(
                |source| HarnessError::Numerical {
                    trial,
                    tau,
                    algorithm,
                    source,
                },
            )?;
            let mse = o.report.weighted_sum_mse;
            out.rows.push(ResultRow {
                trial,
                tau,
                algorithm: algorithm.name().to_string(),
                weighted_sum_mse: mse,
                weighted_sum_mse_db: to_db(mse),
                db_above_lower_bound: to_db(mse) - to_db(lb),
                min_rate: min_rate(&o.report),
                sum_rate: o.report.rate_finite.as_ref().map(|r| r.iter().sum()),
                iterations: o.iterations,
                wall_ms: o.wall_ms,
            });
            out.traces[i].extend(o.trace.iter().zip(&o.trace_elapsed_ms).enumerate().map(
                |(iter, (&objective, &elapsed_ms))| TraceRow {
                    trial,
                    tau,
                    iter,
                    objective,
                    objective_db: to_db(objective),
                    option: o.option.to_string(),
                    elapsed_ms,
                },
            ));
            if let Some(PilotConfiguration::Orthogonal(p)) = &o.pilots {
                let k = instance.users_per_cell();
                out.assignments[i].extend((0..p.assignment.len()).map(|u| AssignmentRow {
                    trial,
                    tau,
                    cell: u / k,
                    user: u % k,
                    pilot_index: p.assignment[u],
                    power_mw: p.powers[u],
                    asymptotic_rate: o.report.rate_asymptotic.as_ref().map(|r| r[u]),
                }));
            }
        }
    }
    Ok(out)
}

/// Runs every trial (in parallel) without writing anything.
pub fn run_trials(spec: &ExperimentSpec) -> Result<ExperimentResults, HarnessError> {
    spec.validate()?;
    let outputs: Vec<TrialOutput> = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, t))
        .collect::<Result<_, _>>()?;
    let mut results = ExperimentResults {
        rows: Vec::new(),
        traces: spec.algorithms.iter().map(|&a| (a, Vec::new())).collect(),
        assignments: spec.algorithms.iter().map(|&a| (a, Vec::new())).collect(),
    };
    for o in outputs {
        results.rows.extend(o.rows);
        for (slot, t) in results.traces.iter_mut().zip(o.traces) {
            slot.1.extend(t);
        }
        for (slot, a) in results.assignments.iter_mut().zip(o.assignments) {
            slot.1.extend(a);
        }
    }
    Ok(results)
}

/// One line of `cdf_<metric>.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdfRow {
    pub algorithm: String,
    pub tau: usize,
    pub rank: usize,
    pub value: f64,
    /// `100 * rank / n`.
    pub percentile: f64,
}

/// Empirical CDF per (algorithm, tau) of one metric; missing values are skipped.
pub fn cdf_rows(
    results: &ExperimentResults,
    spec: &ExperimentSpec,
    metric: fn(&ResultRow) -> Option<f64>,
) -> Vec<CdfRow> {
    let mut out = Vec::new();
    for &algorithm in &spec.algorithms {
        for &tau in &spec.taus {
            let mut values: Vec<f64> = results
                .rows_for(algorithm, tau)
                .filter_map(metric)
                .collect();
            values.sort_by(f64::total_cmp);
            let n = values.len();
            out.extend(values.into_iter().enumerate().map(|(i, value)| CdfRow {
                algorithm: algorithm.name().to_string(),
                tau,
                rank: i + 1,
                value,
                percentile: 100.0 * (i + 1) as f64 / n as f64,
            }));
        }
    }
    out
}

pub const CDF_METRICS: [(&str, fn(&ResultRow) -> Option<f64>); 3] = [
    ("weighted_sum_mse_db", |r| Some(r.weighted_sum_mse_db)),
    ("min_rate", |r| r.min_rate),
    ("sum_rate", |r| r.sum_rate),
];

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `summary.csv`, `cdf_<metric>.csv`, `assignment_<algorithm>.csv` for
/// orthogonal designs and (if enabled) `trace_<algorithm>.csv` into `dir`,
/// returning the written paths.
pub fn write_outputs(
    spec: &ExperimentSpec,
    results: &ExperimentResults,
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let summary = dir.join("summary.csv");
    write_csv(&summary, &results.rows)?;
    written.push(summary);
    for (name, metric) in CDF_METRICS {
        let path = dir.join(format!("cdf_{name}.csv"));
        write_csv(&path, &cdf_rows(results, spec, metric))?;
        written.push(path);
    }
    for (algorithm, rows) in &results.assignments {
        if rows.is_empty() {
            continue;
        }
        let path = dir.join(format!("assignment_{}.csv", algorithm.name()));
        write_csv(&path, rows)?;
        written.push(path);
    }
    if spec.traces {
        for (algorithm, rows) in &results.traces {
            if rows.is_empty() {
                continue;
            }
            let path = dir.join(format!("trace_{}.csv", algorithm.name()));
            write_csv(&path, rows)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Runs the experiment and writes its CSV files into `spec.output`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResults, HarnessError> {
    info!(
        "running {} trials x {} tau values x {} algorithms",
        spec.trials,
        spec.taus.len(),
        spec.algorithms.len()
    );
    let results = run_trials(spec)?;
    for path in write_outputs(spec, &results, &spec.output)? {
        info!("wrote {}", path.display());
    }
    Ok(results)
}
