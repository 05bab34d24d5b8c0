//! Batch execution over environments × segment counts × modes, with
//! free and with-obstacle solves of identical goals, and CSV/JSONL output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use super::query::{generate_queries, Query};
use super::stats::{jeffreys_interval, mean_sd, MeanSd};
use crate::driver::{solve_ik, DriverOptions, IkResult, IkStatus};
use crate::environment::{make_environment, Environment, EnvironmentKind};
use crate::error::{Error, Result};
use crate::kinematics::{Configuration, Dim, RobotModel};
use crate::model::{GoalSpec, SpecMode};

pub const CONFIDENCE: f64 = 0.95;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteSpec {
    /// Obstacle scenes; an empty list runs free-space batches only.
    pub environments: Vec<EnvironmentKind>,
    pub n_values: Vec<usize>,
    pub modes: Vec<SpecMode>,
    pub batch_size: usize,
    pub seed: u64,
    pub dim: Dim,
    pub length_min: f64,
    pub length_max: f64,
    /// Overrides the `n / 3` environment scale.
    pub scale: Option<f64>,
    pub driver: DriverOptions,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self {
            environments: vec![EnvironmentKind::Octahedron],
            n_values: vec![3],
            modes: vec![SpecMode::FullPose],
            batch_size: 25,
            seed: 7,
            dim: Dim::Spatial,
            length_min: 0.15,
            length_max: 0.55,
            scale: None,
            driver: DriverOptions::default(),
        }
    }
}

impl SuiteSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.modes.is_empty() || self.batch_size == 0 {
            return Err(Error::Domain("suite needs segment counts, modes and a positive batch size".into()));
        }
        if self.n_values.contains(&0) {
            return Err(Error::Domain("segment counts must be positive".into()));
        }
        if self.dim == Dim::Planar && self.modes.contains(&SpecMode::FullPose) {
            return Err(Error::UnsupportedSpecification("roll cannot be specified for planar robots".into()));
        }
        self.driver.validate()?;
        RobotModel::uniform(1, self.dim, self.length_min, self.length_max).validate()
    }

    pub fn robot(&self, n: usize) -> RobotModel {
        RobotModel::uniform(n, self.dim, self.length_min, self.length_max)
    }
}

/// Outcome of one solve, flattened for reporting. Angles in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub status: Option<IkStatus>,
    pub converged: bool,
    pub valid: bool,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Sum of inner solve times, seconds.
    pub solver_time: f64,
    pub total_time: f64,
    pub lambda: Option<f64>,
    pub position_error: Option<f64>,
    pub rot_z_error: Option<f64>,
    pub rot_y_error: Option<f64>,
    pub lengths_valid: Option<bool>,
    pub min_clearance: Option<f64>,
    pub configuration: Option<Configuration>,
    pub error: Option<String>,
}

impl RunRecord {
    /// Rotation errors are kept only for the axes `mode` constrains.
    pub fn from_result(r: &IkResult, mode: SpecMode) -> Self {
        let v = r.validity.as_ref();
        Self {
            status: Some(r.status),
            converged: r.converged(),
            valid: r.success(),
            outer_iterations: r.outer_iterations,
            inner_iterations: r.inner_iterations,
            solver_time: r.timing.solver,
            total_time: r.timing.total,
            lambda: r.lambda,
            position_error: v.map(|v| v.ee_position_error),
            rot_z_error: v.and_then(|v| v.ee_rot_z_error).filter(|_| mode.constrains_tangent()),
            rot_y_error: v.and_then(|v| v.ee_rot_y_error).filter(|_| mode.constrains_roll()),
            lengths_valid: v.map(|v| v.lengths_valid()),
            min_clearance: v.and_then(|v| v.min_clearance),
            configuration: r.configuration.clone(),
            error: None,
        }
    }

    pub fn from_error(e: &Error) -> Self {
        Self {
            status: None,
            converged: false,
            valid: false,
            outer_iterations: 0,
            inner_iterations: 0,
            solver_time: 0.0,
            total_time: 0.0,
            lambda: None,
            position_error: None,
            rot_z_error: None,
            rot_y_error: None,
            lengths_valid: None,
            min_clearance: None,
            configuration: None,
            error: Some(e.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub environment: String,
    pub n: usize,
    pub mode: SpecMode,
    pub index: usize,
    pub seed: u64,
    pub ground_truth: Configuration,
    pub goal: GoalSpec,
    pub free: RunRecord,
    pub with_obs: Option<RunRecord>,
}

/// Success statistics for one column (free or with obstacles).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ColumnStats {
    pub trials: usize,
    pub converged: usize,
    /// Converged and valid.
    pub valid: usize,
    pub errors: usize,
    pub success_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub converged_rate: f64,
    /// Valid fraction among converged results; NaN when none converged.
    pub valid_given_converged: f64,
    pub outer_iterations: MeanSd,
    /// Seconds.
    pub solver_time: MeanSd,
    /// Over converged results.
    pub position_error: MeanSd,
    /// Degrees, over converged results.
    pub rot_z_error_deg: MeanSd,
    pub rot_y_error_deg: MeanSd,
}

impl ColumnStats {
    pub fn from_runs(runs: &[&RunRecord]) -> Result<Self> {
        let trials = runs.len();
        if trials == 0 {
            return Err(Error::Domain("no runs to summarize".into()));
        }
        let converged: Vec<&RunRecord> = runs.iter().copied().filter(|r| r.converged).collect();
        let valid = runs.iter().filter(|r| r.valid).count();
        let (ci_lo, ci_hi) = jeffreys_interval(valid, trials, CONFIDENCE)?;
        let collect = |f: &dyn Fn(&RunRecord) -> Option<f64>, rs: &[&RunRecord]| -> Vec<f64> {
            rs.iter().filter_map(|r| f(r)).collect()
        };
        let solved: Vec<&RunRecord> = runs.iter().copied().filter(|r| r.error.is_none()).collect();
        Ok(Self {
            trials,
            converged: converged.len(),
            valid,
            errors: trials - solved.len(),
            success_rate: valid as f64 / trials as f64,
            ci_lo,
            ci_hi,
            converged_rate: converged.len() as f64 / trials as f64,
            valid_given_converged: if converged.is_empty() {
                f64::NAN
            } else {
                converged.iter().filter(|r| r.valid).count() as f64 / converged.len() as f64
            },
            outer_iterations: mean_sd(&collect(&|r| Some(r.outer_iterations as f64), &solved)),
            solver_time: mean_sd(&collect(&|r| Some(r.solver_time), &solved)),
            position_error: mean_sd(&collect(&|r| r.position_error, &converged)),
            rot_z_error_deg: mean_sd(&collect(&|r| r.rot_z_error.map(f64::to_degrees), &converged)),
            rot_y_error_deg: mean_sd(&collect(&|r| r.rot_y_error.map(f64::to_degrees), &converged)),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub environment: String,
    pub n: usize,
    pub mode: SpecMode,
    pub free: ColumnStats,
    pub with_obs: Option<ColumnStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub suite: SuiteSpec,
    pub rows: Vec<ReportRow>,
    pub records: Vec<QueryRecord>,
}

fn run_once(robot: &RobotModel, goal: &GoalSpec, env: &Environment, opts: &DriverOptions) -> RunRecord {
    match solve_ik(robot, goal, env, opts) {
        Ok(r) => RunRecord::from_result(&r, goal.mode),
        Err(e) => RunRecord::from_error(&e),
    }
}

/// Solves every query of one batch free and, when an environment is given,
/// again with its obstacles. Queries run in parallel; order is preserved.
pub fn run_batch(
    robot: &RobotModel,
    env: Option<&Environment>,
    queries: &[Query],
    opts: &DriverOptions,
) -> Vec<(RunRecord, Option<RunRecord>)> {
    let free = Environment::empty();
    queries
        .par_iter()
        .map(|q| {
            let a = run_once(robot, &q.goal, &free, opts);
            let b = env.map(|e| run_once(robot, &q.goal, e, opts));
            (a, b)
        })
        .collect()
}

/// Runs the whole suite. Query generation failures abort; solve failures
/// are recorded per query.
pub fn run_benchmark(suite: &SuiteSpec) -> Result<BenchReport> {
    suite.validate()?;
    let kinds: Vec<Option<EnvironmentKind>> = if suite.environments.is_empty() {
        vec![None]
    } else {
        suite.environments.iter().copied().map(Some).collect()
    };
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for kind in &kinds {
        for &n in &suite.n_values {
            let robot = suite.robot(n);
            let env = kind.map(|k| make_environment(k, n, suite.scale)).transpose()?;
            let gen_env = env.clone().unwrap_or_else(Environment::empty);
            let name = kind.map_or_else(|| "free".to_string(), |k| k.name().to_string());
            for &mode in &suite.modes {
                let queries = generate_queries(&robot, &gen_env, mode, suite.batch_size, suite.seed)?;
                let runs = run_batch(&robot, env.as_ref(), &queries, &suite.driver);
                let free: Vec<&RunRecord> = runs.iter().map(|r| &r.0).collect();
                let obs: Vec<&RunRecord> = runs.iter().filter_map(|r| r.1.as_ref()).collect();
                rows.push(ReportRow {
                    environment: name.clone(),
                    n,
                    mode,
                    free: ColumnStats::from_runs(&free)?,
                    with_obs: if obs.is_empty() { None } else { Some(ColumnStats::from_runs(&obs)?) },
                });
                for (q, (a, b)) in queries.into_iter().zip(runs) {
                    records.push(QueryRecord {
                        environment: name.clone(),
                        n,
                        mode,
                        index: q.index,
                        seed: q.seed,
                        ground_truth: q.ground_truth,
                        goal: q.goal,
                        free: a,
                        with_obs: b,
                    });
                }
            }
        }
    }
    Ok(BenchReport {
        suite: suite.clone(),
        rows,
        records,
    })
}

#[derive(Serialize)]
struct SuccessLine<'a> {
    environment: &'a str,
    n: usize,
    mode: &'a str,
    trials: usize,
    free_success_pct: f64,
    free_ci_lo_pct: f64,
    free_ci_hi_pct: f64,
    free_converged_pct: f64,
    free_valid_given_converged_pct: f64,
    free_outer_mean: f64,
    free_outer_sd: f64,
    free_time_mean_s: f64,
    free_time_sd_s: f64,
    obs_success_pct: Option<f64>,
    obs_ci_lo_pct: Option<f64>,
    obs_ci_hi_pct: Option<f64>,
    obs_converged_pct: Option<f64>,
    obs_valid_given_converged_pct: Option<f64>,
    obs_outer_mean: Option<f64>,
    obs_outer_sd: Option<f64>,
    obs_time_mean_s: Option<f64>,
    obs_time_sd_s: Option<f64>,
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    environment: &'a str,
    n: usize,
    mode: &'a str,
    condition: &'a str,
    trials: usize,
    converged_pct: f64,
    valid_pct: f64,
    position_error_mean_m: f64,
    position_error_sd_m: f64,
    rot_z_error_mean_deg: f64,
    rot_z_error_sd_deg: f64,
    rot_y_error_mean_deg: f64,
    rot_y_error_sd_deg: f64,
}

fn pct(x: f64) -> f64 {
    100.0 * x
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Domain(format!("csv: {other:?}")),
    }
}

impl BenchReport {
    pub fn write_report_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            let o = r.with_obs.as_ref();
            w.serialize(SuccessLine {
                environment: &r.environment,
                n: r.n,
                mode: r.mode.name(),
                trials: r.free.trials,
                free_success_pct: pct(r.free.success_rate),
                free_ci_lo_pct: pct(r.free.ci_lo),
                free_ci_hi_pct: pct(r.free.ci_hi),
                free_converged_pct: pct(r.free.converged_rate),
                free_valid_given_converged_pct: pct(r.free.valid_given_converged),
                free_outer_mean: r.free.outer_iterations.mean,
                free_outer_sd: r.free.outer_iterations.sd,
                free_time_mean_s: r.free.solver_time.mean,
                free_time_sd_s: r.free.solver_time.sd,
                obs_success_pct: o.map(|c| pct(c.success_rate)),
                obs_ci_lo_pct: o.map(|c| pct(c.ci_lo)),
                obs_ci_hi_pct: o.map(|c| pct(c.ci_hi)),
                obs_converged_pct: o.map(|c| pct(c.converged_rate)),
                obs_valid_given_converged_pct: o.map(|c| pct(c.valid_given_converged)),
                obs_outer_mean: o.map(|c| c.outer_iterations.mean),
                obs_outer_sd: o.map(|c| c.outer_iterations.sd),
                obs_time_mean_s: o.map(|c| c.solver_time.mean),
                obs_time_sd_s: o.map(|c| c.solver_time.sd),
            })
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_errors_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            let columns = [("free", Some(&r.free)), ("with_obs", r.with_obs.as_ref())];
            for (condition, c) in columns {
                let Some(c) = c else { continue };
                w.serialize(ErrorLine {
                    environment: &r.environment,
                    n: r.n,
                    mode: r.mode.name(),
                    condition,
                    trials: c.trials,
                    converged_pct: pct(c.converged_rate),
                    valid_pct: pct(c.success_rate),
                    position_error_mean_m: c.position_error.mean,
                    position_error_sd_m: c.position_error.sd,
                    rot_z_error_mean_deg: c.rot_z_error_deg.mean,
                    rot_z_error_sd_deg: c.rot_z_error_deg.sd,
                    rot_y_error_mean_deg: c.rot_y_error_deg.mean,
                    rot_y_error_sd_deg: c.rot_y_error_deg.sd,
                })
                .map_err(csv_error)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `report.csv`, `errors.csv` and `results.jsonl` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.write_report_csv(BufWriter::new(File::create(dir.join("report.csv"))?))?;
        self.write_errors_csv(BufWriter::new(File::create(dir.join("errors.csv"))?))?;
        self.write_jsonl(BufWriter::new(File::create(dir.join("results.jsonl"))?))
    }
}
