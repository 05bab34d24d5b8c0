use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use continuum_ik::bench::{generate_queries, run_benchmark, Query, SuiteSpec};
use continuum_ik::driver::{solve_ik, validate, DriverOptions, IkResult, ValidityReport};
use continuum_ik::environment::{make_environment, Environment, EnvironmentKind};
use continuum_ik::kinematics::{Dim, RobotModel};
use continuum_ik::model::{GoalSpec, SpecMode};

/// Inverse kinematics for extensible constant-curvature continuum robots.
#[derive(Parser)]
#[command(name = "ccik", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Robot description files.
    Robot {
        #[command(subcommand)]
        action: RobotAction,
    },
    /// Obstacle environment files.
    Env {
        #[command(subcommand)]
        action: EnvAction,
    },
    /// Sample feasible queries from random ground-truth configurations.
    Gen {
        #[arg(long)]
        robot: PathBuf,
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long, default_value = "pose")]
        mode: SpecMode,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve one query.
    Solve {
        #[arg(long)]
        robot: PathBuf,
        #[arg(long)]
        env: Option<PathBuf>,
        /// A query, a list of queries, or a bare goal.
        #[arg(long)]
        query: PathBuf,
        /// Entry to solve when the query file holds a list.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Driver options as JSON; missing fields take their defaults.
        #[arg(long)]
        options: Option<PathBuf>,
        /// Record the recovered configuration at every outer iteration.
        #[arg(long)]
        trace: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a benchmark suite and write report.csv, errors.csv and results.jsonl.
    Bench {
        #[arg(long)]
        suite: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Re-check a result file against forward kinematics.
    Validate {
        #[arg(long)]
        result: PathBuf,
    },
}

#[derive(Subcommand)]
enum RobotAction {
    /// Write a robot with identical segments and the identity base pose.
    Emit {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 0.15)]
        min: f64,
        #[arg(long, default_value_t = 0.55)]
        max: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum EnvAction {
    /// Write one of the benchmark scenes.
    Emit {
        #[arg(long)]
        kind: EnvironmentKind,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum QueryFile {
    One(Box<Query>),
    Many(Vec<Query>),
    Goal(GoalSpec),
}

/// Everything needed to re-validate a solve.
#[derive(Serialize, Deserialize)]
struct ResultFile {
    robot: RobotModel,
    environment: Environment,
    goal: GoalSpec,
    result: IkResult,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn read_env(path: Option<&PathBuf>) -> Result<Environment> {
    path.map_or_else(|| Ok(Environment::empty()), |p| read_json(p))
}

fn select_goal(file: QueryFile, index: usize) -> Result<GoalSpec> {
    Ok(match file {
        QueryFile::One(q) => q.goal,
        QueryFile::Goal(g) => g,
        QueryFile::Many(qs) => {
            let n = qs.len();
            match qs.into_iter().nth(index) {
                Some(q) => q.goal,
                None => bail!("query index {index} out of range for {n} queries"),
            }
        }
    })
}

fn summarize(report: &ValidityReport) -> String {
    let deg = |v: Option<f64>| v.map_or("-".to_string(), |r| format!("{:.3}°", r.to_degrees()));
    format!(
        "valid={} position_error={:.3e} m rot_z={} rot_y={} lengths={:?} self_collision_free={} obstacles_ok={}",
        report.overall_valid,
        report.ee_position_error,
        deg(report.ee_rot_z_error),
        deg(report.ee_rot_y_error),
        report.segment_lengths_valid,
        report.self_collision_free,
        report.obstacle_clearance_ok
    )
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Robot {
            action: RobotAction::Emit { n, d, min, max, output },
        } => {
            let dim = Dim::try_from(d)?;
            let robot = RobotModel::uniform(n, dim, min, max);
            robot.validate()?;
            write_json(&output, &robot)
        }
        Command::Env {
            action: EnvAction::Emit { kind, n, scale, output },
        } => write_json(&output, &make_environment(kind, n, scale)?),
        Command::Gen {
            robot,
            env,
            mode,
            count,
            seed,
            output,
        } => {
            let robot: RobotModel = read_json(&robot)?;
            let env = read_env(env.as_ref())?;
            let queries = generate_queries(&robot, &env, mode, count, seed)?;
            write_json(&output, &queries)
        }
        Command::Solve {
            robot,
            env,
            query,
            index,
            options,
            trace,
            output,
        } => {
            let robot: RobotModel = read_json(&robot)?;
            let environment = read_env(env.as_ref())?;
            let goal = select_goal(read_json(&query)?, index)?;
            let mut opts: DriverOptions = match &options {
                Some(p) => read_json(p)?,
                None => DriverOptions::default(),
            };
            opts.record_trace |= trace;
            let result = solve_ik(&robot, &goal, &environment, &opts)?;
            println!(
                "status={:?} outer={} inner={} lambda={} solver_time={:.3}s",
                result.status,
                result.outer_iterations,
                result.inner_iterations,
                result.lambda.map_or("-".to_string(), |l| format!("{l:.3e}")),
                result.timing.solver
            );
            if let Some(v) = &result.validity {
                println!("{}", summarize(v));
            }
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            write_json(
                &output,
                &ResultFile {
                    robot,
                    environment,
                    goal,
                    result,
                },
            )
        }
        Command::Bench { suite, output } => {
            let suite: SuiteSpec = read_json(&suite)?;
            let report = run_benchmark(&suite)?;
            report.write_dir(&output)?;
            for row in &report.rows {
                let obs = row
                    .with_obs
                    .as_ref()
                    .map_or("-".to_string(), |c| format!("{:.1}%", 100.0 * c.success_rate));
                println!(
                    "{} n={} {}: free {:.1}% with obs {}",
                    row.environment,
                    row.n,
                    row.mode.name(),
                    100.0 * row.free.success_rate,
                    obs
                );
            }
            Ok(())
        }
        Command::Validate { result } => {
            let file: ResultFile = read_json(&result)?;
            let Some(config) = &file.result.configuration else {
                bail!("result holds no configuration");
            };
            let report = validate(config, &file.robot, &file.goal, &file.environment)?;
            println!("{}", summarize(&report));
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
