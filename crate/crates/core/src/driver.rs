//! Convex iteration: repeatedly solve the lifted SDP with a cost that
//! penalizes the trailing eigenvalues of the previous solution until `Z` has
//! rank `d`, then recover and validate a configuration.

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::conic::{sym_eigen, AdmmBackend, SdpBackend, SolveInfo, SolveStatus, SolverOptions, WarmStart};
use crate::bench::{query_rng, sample_configuration};
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::kinematics::{
    arc_from_triangle, end_effector, forward_kinematics, segment_pose, self_collision_free, ArcParams,
    Configuration, Dim, Pose, RobotModel, SegmentTriangle, STRAIGHT_TOL,
};
use crate::lift::{assemble, extract, lift, LiftIndex, LiftOptions};
use crate::model::{assignment_from_configuration, build_problem, p_index, q_index, DgOptions, GoalSpec, SpecMode};

/// Position tolerance as a fraction of the robot length at mid-extension.
pub const POSITION_FRACTION: f64 = 0.01;
/// Rotation tolerance in degrees.
pub const ROTATION_TOLERANCE_DEG: f64 = 2.0;
/// Allowed penetration of segment endpoints into obstacles, meters.
pub const CLEARANCE_TOLERANCE: f64 = 0.01;
/// Backbone samples per segment for self-collision checks.
pub const SELF_COLLISION_SAMPLES: usize = 10;
/// Inexact inner tolerance as a multiple of the previous `λ_{d+1}`.
pub const INEXACT_FACTOR: f64 = 1e-2;
/// Loosest inexact inner tolerance.
pub const INEXACT_CAP: f64 = 1e-5;
/// `λ_{d+1}` must fall below this fraction of its value one window earlier.
pub const STALL_RATIO: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    /// Cost and warm start from the straight chain at mid-extension.
    StraightMidExtension,
    /// Zero cost on the first solve, no warm start.
    ZeroCost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriverOptions {
    pub max_outer_iterations: usize,
    pub rank_eps: f64,
    /// Keep the configuration recovered at every outer iteration.
    pub record_trace: bool,
    pub init: Initialization,
    /// Isosceles defect above which a virtual joint is repaired.
    pub isosceles_tol: f64,
    /// Solve early outer iterations to a tolerance tied to `λ_{d+1}`;
    /// rank-`d` candidates are always re-solved at the full tolerance.
    pub inexact_inner: bool,
    /// Outer iterations without progress before the cost is reseeded from a
    /// random configuration; 0 disables restarts.
    pub restart_window: usize,
    pub restart_seed: u64,
    pub solver: SolverOptions,
    pub model: DgOptions,
    pub lift: LiftOptions,
}

impl Default for DriverOptions {
    fn default() -> Self {
        Self {
            max_outer_iterations: 200,
            rank_eps: 1e-7,
            record_trace: false,
            init: Initialization::StraightMidExtension,
            isosceles_tol: 1e-6,
            inexact_inner: true,
            restart_window: 20,
            restart_seed: 0,
            solver: SolverOptions::default(),
            model: DgOptions::default(),
            lift: LiftOptions::default(),
        }
    }
}

impl DriverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rank_eps > 0.0) || self.max_outer_iterations == 0 {
            return Err(Error::Domain("rank tolerance and iteration cap must be positive".into()));
        }
        self.solver.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IkStatus {
    Converged,
    MaxOuterIterations,
    SolverFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub ee_position_error: f64,
    pub position_threshold: f64,
    /// Radians; `None` when the goal carries no tangent.
    pub ee_rot_z_error: Option<f64>,
    /// Radians, up to the reflection allowed by the roll anchor; `None` when
    /// the goal carries no roll axis.
    pub ee_rot_y_error: Option<f64>,
    pub segment_lengths_valid: Vec<bool>,
    /// Smallest endpoint clearance over all obstacles; `None` without obstacles.
    pub min_clearance: Option<f64>,
    pub obstacle_clearance_ok: bool,
    pub self_collision_free: bool,
    pub overall_valid: bool,
}

impl ValidityReport {
    pub fn lengths_valid(&self) -> bool {
        self.segment_lengths_valid.iter().all(|v| *v)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Model building, lifting, factorization and warm start, seconds.
    pub setup: f64,
    /// Sum of inner solve times, seconds.
    pub solver: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IkResult {
    pub status: IkStatus,
    pub configuration: Option<Configuration>,
    /// Extracted points `q_1, p_1, …, q_n` in `R^d`.
    pub points: Vec<Vec<f64>>,
    pub scalars: Vec<f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// `λ_{d+1}` after every outer iteration.
    pub lambda_trace: Vec<f64>,
    /// `λ_{d+1}` of the reported iterate; `None` when no solve completed.
    pub lambda: Option<f64>,
    pub timing: Timing,
    pub validity: Option<ValidityReport>,
    /// Segments whose virtual joint was moved onto the bisector plane.
    pub repaired_segments: Vec<usize>,
    pub last_solve: Option<SolveInfo>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<Option<Configuration>>,
    pub warnings: Vec<String>,
}

impl IkResult {
    pub fn converged(&self) -> bool {
        self.status == IkStatus::Converged
    }

    pub fn valid(&self) -> bool {
        self.validity.as_ref().is_some_and(|v| v.overall_valid)
    }

    /// Converged and valid.
    pub fn success(&self) -> bool {
        self.converged() && self.valid()
    }
}

/// Inner tolerances for the next solve: loose while `Z` is far from rank
/// `d`, tightening in proportion to `λ_{d+1}`.
fn inner_options(opts: &DriverOptions, lambda_prev: f64) -> SolverOptions {
    let mut inner = opts.solver.clone();
    if opts.inexact_inner {
        let scale = (INEXACT_FACTOR * lambda_prev).min(INEXACT_CAP);
        inner.eps_primal = inner.eps_primal.max(scale);
        inner.eps_dual = inner.eps_dual.max(scale);
    }
    inner
}

/// Projector onto the eigenvectors of the `m - d` smallest eigenvalues of `Z`.
pub fn rank_cost(z: &DMatrix<f64>, d: usize) -> Result<DMatrix<f64>> {
    let m = z.nrows();
    if d >= m {
        return Err(Error::Domain(format!("rank target {d} must be below the size {m}")));
    }
    let (_, vectors) = sym_eigen(z)?;
    Ok(trailing_projector(&vectors, m - d))
}

fn trailing_projector(vectors: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let v = vectors.columns(0, k);
    let mut c = &v * v.transpose();
    let m = c.nrows();
    for i in 0..m {
        for j in i + 1..m {
            let s = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = s;
            c[(j, i)] = s;
        }
    }
    c
}

/// Lifted straight chain at mid-extension.
pub fn warm_start(robot: &RobotModel, mode: SpecMode) -> Result<DMatrix<f64>> {
    lift_configuration(&robot.mid_extension(), robot, mode)
}

fn lift_configuration(config: &Configuration, robot: &RobotModel, mode: SpecMode) -> Result<DMatrix<f64>> {
    let a = assignment_from_configuration(config, robot, mode)?;
    lift(&a.points, &a.scalars, &LiftIndex::for_robot(robot.n(), robot.d(), mode))
}

/// No relative decrease of `λ_{d+1}` beyond `STALL_RATIO` over the last
/// `window` outer iterations.
fn stalled(trace: &[f64], window: usize) -> bool {
    if window == 0 || trace.len() <= window {
        return false;
    }
    let recent = trace[trace.len() - 1];
    let earlier = trace[trace.len() - 1 - window];
    recent > STALL_RATIO * earlier
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recovery {
    pub configuration: Configuration,
    pub repaired_segments: Vec<usize>,
}

/// Walks the chain from the base, reading each segment's `(L, θ, δ)` off its
/// triangle `(p_{t-1}, q_t, p_t)` in the frame transported by the arcs
/// recovered so far.
pub fn recover_configuration(
    points: &DMatrix<f64>,
    robot: &RobotModel,
    goal: &GoalSpec,
    isosceles_tol: f64,
) -> Result<Recovery> {
    let n = robot.n();
    let dim = robot.dim;
    if points.nrows() != dim.value() || points.ncols() != 2 * n - 1 {
        return Err(Error::Shape("point matrix does not match the robot".into()));
    }
    let col = |i: usize| dim.embed(points.column(i).as_slice());
    let mut frame: Pose = robot.base;
    let mut prev = robot.base.position;
    let mut segments = Vec::with_capacity(n);
    let mut repaired = Vec::new();
    for t in 1..=n {
        let p = if t == n { goal.position } else { col(p_index(t)) };
        let mut q = col(q_index(t));
        let mut tri = SegmentTriangle { p_prev: prev, q, p };
        if tri.isosceles_defect() > isosceles_tol {
            let chord = p - prev;
            let e = chord.normalize();
            let mid = 0.5 * (p + prev);
            q -= (q - mid).dot(&e) * e;
            tri.q = q;
            repaired.push(t - 1);
        }
        let tangent = frame.tangent();
        let arc = arc_from_triangle(&tri, &tangent, None, f64::INFINITY).map_err(|e| e.in_segment(t - 1))?;
        let out = p - q;
        let bend = out - out.dot(&tangent) * tangent;
        let delta = if arc.theta < STRAIGHT_TOL || bend.norm() == 0.0 {
            0.0
        } else {
            let raw = bend.dot(&frame.axis(1)).atan2(bend.dot(&frame.axis(0)));
            match dim {
                Dim::Spatial => raw.rem_euclid(std::f64::consts::TAU),
                Dim::Planar => {
                    if raw.cos() >= 0.0 {
                        0.0
                    } else {
                        std::f64::consts::PI
                    }
                }
            }
        };
        let theta = if arc.theta < STRAIGHT_TOL { 0.0 } else { arc.theta };
        let params = ArcParams::new(arc.length, theta, delta);
        frame = frame.compose(&segment_pose(&params, dim).map_err(|e| e.in_segment(t - 1))?);
        frame.position = p;
        prev = p;
        segments.push(params);
    }
    Ok(Recovery {
        configuration: Configuration::new(segments),
        repaired_segments: repaired,
    })
}

fn angle(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Checks a configuration against the goal, length ranges, obstacles and
/// self-collision.
pub fn validate(
    config: &Configuration,
    robot: &RobotModel,
    goal: &GoalSpec,
    env: &Environment,
) -> Result<ValidityReport> {
    let poses = forward_kinematics(config, robot)?;
    let ee = poses.last().expect("n + 1 poses");
    let position_threshold = POSITION_FRACTION * robot.nominal_length();
    let ee_position_error = (ee.position - goal.position).norm();
    let ee_rot_z_error = goal.tangent.map(|t| angle(&ee.tangent(), &t));
    let ee_rot_y_error = goal.roll_axis.filter(|_| robot.dim == Dim::Spatial).map(|y| {
        let actual = ee.axis(1);
        // the roll anchor fixes the axis only up to reflection across the
        // plane through w, w′ and w″
        angle(&actual, &y).min(angle(&actual, &(-y)))
    });
    let mut rotation_ok = true;
    if goal.mode.constrains_tangent() {
        rotation_ok &= ee_rot_z_error.is_some_and(|e| e < ROTATION_TOLERANCE_DEG.to_radians());
    }
    if goal.mode.constrains_roll() {
        rotation_ok &= ee_rot_y_error.is_some_and(|e| e < ROTATION_TOLERANCE_DEG.to_radians());
    }
    let segment_lengths_valid: Vec<bool> = config
        .segments
        .iter()
        .zip(&robot.length_ranges)
        .map(|(a, r)| r.contains(a.length))
        .collect();
    let min_clearance = (!env.is_empty()).then(|| {
        poses[1..]
            .iter()
            .map(|p| env.clearance(robot.dim, &p.position))
            .fold(f64::INFINITY, f64::min)
    });
    let obstacle_clearance_ok = min_clearance.is_none_or(|c| c >= -CLEARANCE_TOLERANCE);
    let self_free = self_collision_free(config, robot, SELF_COLLISION_SAMPLES)?;
    let overall_valid = ee_position_error < position_threshold
        && rotation_ok
        && segment_lengths_valid.iter().all(|v| *v)
        && obstacle_clearance_ok
        && self_free;
    Ok(ValidityReport {
        ee_position_error,
        position_threshold,
        ee_rot_z_error,
        ee_rot_y_error,
        segment_lengths_valid,
        min_clearance,
        obstacle_clearance_ok,
        self_collision_free: self_free,
        overall_valid,
    })
}

pub fn solve_ik(robot: &RobotModel, goal: &GoalSpec, env: &Environment, opts: &DriverOptions) -> Result<IkResult> {
    solve_ik_with(&AdmmBackend, robot, goal, env, opts)
}

struct Iterate {
    z: DMatrix<f64>,
    lambda: f64,
}

pub fn solve_ik_with(
    backend: &dyn SdpBackend,
    robot: &RobotModel,
    goal: &GoalSpec,
    env: &Environment,
    opts: &DriverOptions,
) -> Result<IkResult> {
    opts.validate()?;
    let start = Instant::now();
    let problem = build_problem(robot, goal, env, &opts.model)?;
    let mut warnings = problem.warnings.clone();
    let sdp = assemble(&problem, &opts.lift);
    let layout = sdp.layout;
    let d = layout.d;
    let m = layout.m();
    let prepared = backend.prepare(&sdp)?;
    let z0 = warm_start(robot, goal.mode)?;
    let (mut cost, mut warm) = match opts.init {
        Initialization::StraightMidExtension => (
            rank_cost(&z0, d)?,
            Some(WarmStart {
                z: Some(z0),
                dual: None,
            }),
        ),
        Initialization::ZeroCost => (DMatrix::zeros(m, m), None),
    };
    let setup = start.elapsed().as_secs_f64();

    let mut solver_time = 0.0;
    let mut inner_iterations = 0;
    let mut lambda_trace = Vec::new();
    let mut trace = Vec::new();
    let mut best: Option<Iterate> = None;
    let mut last_solve = None;
    let mut status = IkStatus::MaxOuterIterations;
    let mut outer = 0;

    let mut lambda_prev = f64::INFINITY;
    let mut restarts = 0;
    let mut since_restart = 0;
    for _ in 0..opts.max_outer_iterations {
        outer += 1;
        let inner_opts = inner_options(opts, lambda_prev);
        let mut sol = prepared.solve(&cost, warm.as_ref(), &inner_opts)?;
        solver_time += sol.info.wall_time;
        inner_iterations += sol.info.iterations;
        if inner_opts != opts.solver && sol.info.status == SolveStatus::Optimal {
            let (values, _) = sym_eigen(&sol.z)?;
            if values[m - d - 1] < opts.rank_eps {
                // confirm a candidate rank-d solution at full accuracy
                let refine = WarmStart {
                    z: Some(sol.z.clone()),
                    dual: Some(sol.dual.clone()),
                };
                sol = prepared.solve(&cost, Some(&refine), &opts.solver)?;
                solver_time += sol.info.wall_time;
                inner_iterations += sol.info.iterations;
            }
        }
        let inner = sol.info.status;
        last_solve = Some(sol.info.clone());
        match inner {
            SolveStatus::NumericalFailure => {
                warnings.push(format!("inner solver failed at outer iteration {outer}"));
                status = IkStatus::SolverFailure;
                break;
            }
            SolveStatus::PrimalInfeasibleLikely => {
                warnings.push(format!("relaxation reported infeasible at outer iteration {outer}"));
                status = IkStatus::SolverFailure;
                break;
            }
            _ => {}
        }
        let (values, vectors) = sym_eigen(&sol.z)?;
        let lambda = values[m - d - 1];
        lambda_prev = lambda;
        lambda_trace.push(lambda);
        if opts.record_trace {
            let points = extract(&sol.z, &layout)?.points;
            trace.push(recover_configuration(&points, robot, goal, opts.isosceles_tol).ok().map(|r| r.configuration));
        }
        let converged = lambda < opts.rank_eps && inner == SolveStatus::Optimal;
        if converged || best.as_ref().is_none_or(|b| lambda < b.lambda) {
            best = Some(Iterate {
                z: sol.z.clone(),
                lambda,
            });
        }
        if converged {
            status = IkStatus::Converged;
            break;
        }
        if stalled(&lambda_trace[since_restart..], opts.restart_window) {
            restarts += 1;
            since_restart = lambda_trace.len();
            let mut rng = query_rng(opts.restart_seed, restarts);
            let z = lift_configuration(&sample_configuration(robot, &mut rng), robot, goal.mode)?;
            cost = rank_cost(&z, d)?;
            warm = Some(WarmStart {
                z: Some(sol.z),
                dual: None,
            });
            continue;
        }
        cost = trailing_projector(&vectors, m - d);
        warm = Some(WarmStart {
            z: Some(sol.z),
            dual: Some(sol.dual),
        });
    }

    let mut result = IkResult {
        status,
        configuration: None,
        points: Vec::new(),
        scalars: Vec::new(),
        outer_iterations: outer,
        inner_iterations,
        lambda_trace,
        lambda: None,
        timing: Timing {
            setup,
            solver: solver_time,
            total: 0.0,
        },
        validity: None,
        repaired_segments: Vec::new(),
        last_solve,
        trace,
        warnings,
    };
    if let Some(it) = best {
        let ex = extract(&it.z, &layout)?;
        if let Some(w) = &ex.warning {
            result.warnings.push(w.clone());
        }
        result.lambda = Some(it.lambda);
        result.points = ex.points.column_iter().map(|c| c.as_slice().to_vec()).collect();
        result.scalars = ex.scalars.clone();
        match recover_configuration(&ex.points, robot, goal, opts.isosceles_tol) {
            Ok(rec) => {
                result.validity = Some(validate(&rec.configuration, robot, goal, env)?);
                result.configuration = Some(rec.configuration);
                result.repaired_segments = rec.repaired_segments;
            }
            Err(e) => result.warnings.push(format!("configuration recovery failed: {e}")),
        }
    }
    result.timing.total = start.elapsed().as_secs_f64();
    Ok(result)
}

/// End-effector pose of a recovered configuration, for reporting.
pub fn result_pose(result: &IkResult, robot: &RobotModel) -> Option<Pose> {
    result.configuration.as_ref().and_then(|c| end_effector(c, robot).ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::rotation_between;
    use crate::model::{build_problem, eval_residuals, ConstraintTag};
    use approx::assert_abs_diff_eq;
    use nalgebra::{DVector, Matrix3};
    use std::f64::consts::PI;

    #[test]
    fn rank_cost_of_diagonal() {
        let z = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 4.0, 3.0, 2.0, 1.0, 0.0]));
        let c = rank_cost(&z, 3).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]));
        assert_abs_diff_eq!(c, expected, epsilon = 1e-12);
        assert_abs_diff_eq!((&c * &z).trace(), 3.0, epsilon = 1e-12);
        assert!(rank_cost(&z, 6).is_err());
    }

    #[test]
    fn warm_start_is_straight_and_rank_d() {
        let robot = RobotModel::uniform(3, Dim::Spatial, 0.15, 0.55);
        let z0 = warm_start(&robot, SpecMode::FullPose).unwrap();
        let layout = LiftIndex::for_robot(3, 3, SpecMode::FullPose);
        let ex = extract(&z0, &layout).unwrap();
        assert!(ex.lambda_next.abs() < 1e-12);
        for t in 1..=3 {
            assert_abs_diff_eq!(ex.points[(2, q_index(t))], 0.35 * t as f64 - 0.175, epsilon = 1e-12);
            if t < 3 {
                assert_abs_diff_eq!(ex.points[(2, p_index(t))], 0.35 * t as f64, epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(ex.scalars[0], 0.175, epsilon = 1e-15);
        assert_abs_diff_eq!(ex.scalars[1], 1.0, epsilon = 1e-15);

        let goal = GoalSpec::from_pose(
            &Pose::new(Vector3::new(0.4, 0.1, 0.7), Matrix3::identity()),
            Dim::Spatial,
            SpecMode::FullPose,
        );
        let pb = build_problem(&robot, &goal, &Environment::empty(), &DgOptions::default()).unwrap();
        let r = eval_residuals(&pb, &ex.points, &ex.scalars).unwrap();
        for (c, v) in pb.constraints().zip(&r) {
            if c.tag.is_body() && !(c.tag == ConstraintTag::Symmetry && c.index == 3) {
                assert!(v.abs() < 1e-9);
            }
        }
    }

    fn ground_truth() -> (RobotModel, Configuration) {
        let robot = RobotModel::uniform(4, Dim::Spatial, 0.15, 0.55);
        let config = Configuration::new(vec![
            ArcParams::new(0.3, 0.8, 0.3),
            ArcParams::new(0.42, 0.01, 5.0),
            ArcParams::new(0.2, 2.5, 2.0),
            ArcParams::new(0.5, 1.2, 4.4),
        ]);
        (robot, config)
    }

    #[test]
    fn recovery_round_trip() {
        let (robot, config) = ground_truth();
        let ee = end_effector(&config, &robot).unwrap();
        let goal = GoalSpec::from_pose(&ee, Dim::Spatial, SpecMode::FullPose);
        let a = assignment_from_configuration(&config, &robot, goal.mode).unwrap();
        let rec = recover_configuration(&a.points, &robot, &goal, 1e-6).unwrap();
        assert!(rec.repaired_segments.is_empty());
        for (x, y) in rec.configuration.segments.iter().zip(&config.segments) {
            assert_abs_diff_eq!(x.length, y.length, epsilon = 1e-9);
            assert_abs_diff_eq!(x.theta, y.theta, epsilon = 1e-9);
            assert_abs_diff_eq!(x.delta, y.delta, epsilon = 1e-9);
        }
        let report = validate(&rec.configuration, &robot, &goal, &Environment::empty()).unwrap();
        assert!(report.overall_valid);
        assert!(report.ee_position_error < 1e-9);
    }

    #[test]
    fn straight_and_quarter_recovery() {
        let robot = RobotModel::uniform(2, Dim::Spatial, 0.15, 0.55);
        let config = Configuration::new(vec![ArcParams::new(0.35, PI / 2.0, 0.0), ArcParams::straight(0.3)]);
        let ee = end_effector(&config, &robot).unwrap();
        let goal = GoalSpec::from_pose(&ee, Dim::Spatial, SpecMode::Position);
        let a = assignment_from_configuration(&config, &robot, goal.mode).unwrap();
        let rec = recover_configuration(&a.points, &robot, &goal, 1e-6).unwrap();
        let s = &rec.configuration.segments;
        assert_abs_diff_eq!(s[0].length, 0.35, epsilon = 1e-12);
        assert_abs_diff_eq!(s[0].theta, PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s[0].delta, 0.0, epsilon = 1e-12);
        assert_eq!(s[1].theta, 0.0);
        assert_eq!(s[1].delta, 0.0);
    }

    #[test]
    fn repairs_skewed_virtual_joint() {
        let (robot, config) = ground_truth();
        let ee = end_effector(&config, &robot).unwrap();
        let goal = GoalSpec::from_pose(&ee, Dim::Spatial, SpecMode::Position);
        let mut a = assignment_from_configuration(&config, &robot, goal.mode).unwrap();
        a.points[(0, q_index(2))] += 1e-3;
        let rec = recover_configuration(&a.points, &robot, &goal, 1e-6).unwrap();
        assert_eq!(rec.repaired_segments, vec![1]);
    }

    #[test]
    fn planar_recovery() {
        let robot = RobotModel::uniform(3, Dim::Planar, 0.15, 0.55);
        let config = Configuration::new(vec![
            ArcParams::new(0.3, 0.8, PI),
            ArcParams::new(0.4, 1.1, 0.0),
            ArcParams::new(0.25, 0.5, PI),
        ]);
        let ee = end_effector(&config, &robot).unwrap();
        let goal = GoalSpec::from_pose(&ee, Dim::Planar, SpecMode::PositionYawPitch);
        let a = assignment_from_configuration(&config, &robot, goal.mode).unwrap();
        let rec = recover_configuration(&a.points, &robot, &goal, 1e-6).unwrap();
        for (x, y) in rec.configuration.segments.iter().zip(&config.segments) {
            assert_abs_diff_eq!(x.length, y.length, epsilon = 1e-9);
            assert_abs_diff_eq!(x.theta, y.theta, epsilon = 1e-9);
            assert_abs_diff_eq!(x.delta.cos(), y.delta.cos(), epsilon = 1e-9);
        }
    }

    #[test]
    fn validation_thresholds_and_reflection() {
        let robot = RobotModel::uniform(4, Dim::Spatial, 0.15, 0.55);
        let config = robot.mid_extension();
        let ee = end_effector(&config, &robot).unwrap();
        let goal = GoalSpec::from_pose(&ee, Dim::Spatial, SpecMode::FullPose);
        let report = validate(&config, &robot, &goal, &Environment::empty()).unwrap();
        assert_abs_diff_eq!(report.position_threshold, 0.014, epsilon = 1e-15);
        assert_eq!(report.ee_rot_z_error, Some(0.0));
        assert_eq!(report.ee_rot_y_error, Some(0.0));
        assert!(report.overall_valid);

        // desired frame reflected across its x = 0 plane keeps z, y
        let mut flipped = goal.clone();
        flipped.roll_axis = Some(-ee.axis(1));
        let report = validate(&config, &robot, &flipped, &Environment::empty()).unwrap();
        assert_abs_diff_eq!(report.ee_rot_y_error.unwrap(), 0.0, epsilon = 1e-12);

        let tilted = rotation_between(&Vector3::z(), &Vector3::new(0.0, 0.1, 1.0).normalize());
        let mut off = goal.clone();
        off.tangent = Some(tilted * ee.tangent());
        off.roll_axis = Some(tilted * ee.axis(1));
        let report = validate(&config, &robot, &off, &Environment::empty()).unwrap();
        assert!(report.ee_rot_z_error.unwrap() > 5f64.to_radians());
        assert!(!report.overall_valid);
        let report = validate(&config, &robot, &off.with_mode(SpecMode::Position), &Environment::empty()).unwrap();
        assert!(report.overall_valid);
    }

    #[test]
    fn straight_ahead_goal_converges() {
        let robot = RobotModel::uniform(3, Dim::Spatial, 0.15, 0.55);
        let goal = GoalSpec::from_pose(
            &Pose::new(Vector3::new(0.0, 0.0, 1.05), Matrix3::identity()),
            Dim::Spatial,
            SpecMode::FullPose,
        );
        let res = solve_ik(&robot, &goal, &Environment::empty(), &DriverOptions::default()).unwrap();
        assert_eq!(res.status, IkStatus::Converged);
        let v = res.validity.unwrap();
        assert!(v.ee_position_error < 1e-4);
        assert!(v.ee_rot_z_error.unwrap() < 2f64.to_radians() && v.ee_rot_y_error.unwrap() < 2f64.to_radians());
        assert!(v.lengths_valid());
        assert!(res.lambda.unwrap() < 1e-7);
    }
}
