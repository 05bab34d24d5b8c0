mod common;

use common::feasible_sample;
use continuum_ik::environment::Environment;
use continuum_ik::kinematics::{Dim, Pose, RobotModel};
use continuum_ik::lift::{assemble, extract, lift, LiftIndex, LiftOptions};
use continuum_ik::model::{
    assignment_from_configuration, build_problem, eval_residuals, ConstraintTag, DgOptions, DgProblem, GoalSpec, Sense,
    SpecMode,
};
use std::collections::BTreeMap;
use nalgebra::{DMatrix, Rotation3, Unit, Vector3};
use proptest::prelude::*;

fn cases() -> Vec<(usize, Dim, SpecMode)> {
    let mut out = Vec::new();
    for n in [2, 3, 4] {
        for dim in [Dim::Planar, Dim::Spatial] {
            for mode in SpecMode::ALL {
                if !(dim == Dim::Planar && mode == SpecMode::FullPose) {
                    out.push((n, dim, mode));
                }
            }
        }
    }
    out
}

/// Norms of the residual groups that transform as a whole: coordinate rows
/// of one vector equation are rotated together, scalar rows stand alone.
fn grouped(pb: &DgProblem, residuals: &[f64]) -> BTreeMap<(String, usize), f64> {
    let mut out: BTreeMap<(String, usize), f64> = BTreeMap::new();
    for (c, r) in pb.constraints().zip(residuals) {
        let index = match c.tag {
            ConstraintTag::Base | ConstraintTag::EeTangent => 0,
            _ => c.index,
        };
        *out.entry((c.tag.name().to_string(), index)).or_default() += r * r;
    }
    out.values_mut().for_each(|v| *v = v.sqrt());
    out
}

fn case() -> impl Strategy<Value = (usize, Dim, SpecMode)> {
    prop::sample::select(cases())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_assignment_satisfies_model((n, dim, mode) in case(), index in 0usize..10_000) {
        let robot = RobotModel::uniform(n, dim, 0.15, 0.55);
        let (config, goal) = feasible_sample(&robot, mode, 17, index);
        let pb = build_problem(&robot, &goal, &Environment::empty(), &DgOptions::default()).unwrap();
        let a = assignment_from_configuration(&config, &robot, mode).unwrap();
        let res = eval_residuals(&pb, &a.points, &a.scalars).unwrap();
        for (c, r) in pb.constraints().zip(&res) {
            let ok = match c.sense {
                Sense::Eq => r.abs() < 1e-9,
                _ => *r <= 1e-9,
            };
            prop_assert!(ok, "{:?} {} residual {r}", c.tag, c.index);
        }
    }

    #[test]
    fn residuals_invariant_under_rigid_motion(
        (n, _, mode) in case(),
        index in 0usize..10_000,
        axis in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        angle in 0.0f64..3.0,
        shift in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        noise in prop::collection::vec(-0.05f64..0.05, 40),
    ) {
        let axis = Vector3::new(axis.0, axis.1, axis.2);
        prop_assume!(axis.norm() > 0.1);
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        let shift = Vector3::new(shift.0, shift.1, shift.2);
        let robot = RobotModel::uniform(n, Dim::Spatial, 0.15, 0.55);
        let (config, goal) = feasible_sample(&robot, mode, 23, index);
        let a = assignment_from_configuration(&config, &robot, mode).unwrap();
        let mut points = a.points.clone();
        for (k, v) in points.iter_mut().enumerate() {
            *v += noise[k % noise.len()];
        }
        let scalars: Vec<f64> = a.scalars.iter().enumerate().map(|(k, w)| w + noise[(k + 7) % noise.len()]).collect();
        let pb = build_problem(&robot, &goal, &Environment::empty(), &DgOptions::default()).unwrap();
        let before = eval_residuals(&pb, &points, &scalars).unwrap();

        let moved_robot = RobotModel {
            base: Pose::new(rot * robot.base.position + shift, rot.matrix() * robot.base.frame),
            ..robot.clone()
        };
        let moved_goal = GoalSpec {
            position: rot * goal.position + shift,
            tangent: goal.tangent.map(|t| rot * t),
            roll_axis: goal.roll_axis.map(|y| rot * y),
            ..goal.clone()
        };
        let mut moved = points.clone();
        for mut col in moved.column_iter_mut() {
            let x = Vector3::new(col[0], col[1], col[2]);
            col.copy_from(&(rot * x + shift));
        }
        let pb2 = build_problem(&moved_robot, &moved_goal, &Environment::empty(), &DgOptions::default()).unwrap();
        let after = eval_residuals(&pb2, &moved, &scalars).unwrap();
        prop_assert_eq!(before.len(), after.len());
        let (g1, g2) = (grouped(&pb, &before), grouped(&pb2, &after));
        prop_assert_eq!(g1.len(), g2.len());
        for ((k1, x), (k2, y)) in g1.iter().zip(&g2) {
            prop_assert_eq!(k1, k2);
            prop_assert!((x - y).abs() < 1e-10, "{k1:?}: {x} vs {y}");
        }
    }

    #[test]
    fn lifted_rows_are_linear_and_symmetric(
        (n, dim, mode) in case(),
        index in 0usize..10_000,
        alpha in -2.0f64..2.0,
        beta in -2.0f64..2.0,
    ) {
        let robot = RobotModel::uniform(n, dim, 0.15, 0.55);
        let (_, goal) = feasible_sample(&robot, mode, 5, index);
        let pb = build_problem(&robot, &goal, &Environment::empty(), &DgOptions::default()).unwrap();
        let sdp = assemble(&pb, &LiftOptions { scalar_cross_blocks: true });
        let m = sdp.m();
        let z1 = DMatrix::from_fn(m, m, |i, j| ((i * 7 + j * 3 + index) % 11) as f64 - 5.0);
        let z1 = &z1 + z1.transpose();
        let z2 = DMatrix::from_fn(m, m, |i, j| ((i * j + index) % 5) as f64 * 0.3);
        let z2 = &z2 + z2.transpose();
        let mix = &z1 * alpha + &z2 * beta;
        for row in sdp.rows() {
            let lhs = row.value(&mix);
            let rhs = alpha * row.value(&z1) + beta * row.value(&z2);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            let dense = row.a.to_dense(m);
            prop_assert_eq!(&dense, &dense.transpose());
        }
    }

    #[test]
    fn extract_inverts_lift((n, dim, mode) in case(), index in 0usize..10_000) {
        let robot = RobotModel::uniform(n, dim, 0.15, 0.55);
        let (config, _) = feasible_sample(&robot, mode, 9, index);
        let a = assignment_from_configuration(&config, &robot, mode).unwrap();
        let layout = LiftIndex::for_robot(n, robot.d(), mode);
        let z = lift(&a.points, &a.scalars, &layout).unwrap();
        let ex = extract(&z, &layout).unwrap();
        prop_assert!(ex.reliable());
        prop_assert!((&ex.points - &a.points).amax() < 1e-14);
        for (x, y) in ex.scalars.iter().zip(&a.scalars) {
            prop_assert!((x - y).abs() < 1e-14);
        }
    }
}
