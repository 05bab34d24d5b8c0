use continuum_ik::kinematics::{
    arc_from_triangle, chord_length, forward_kinematics, segment_pose, segment_triangle, ArcParams, Configuration,
    Dim, Pose, RobotModel,
};
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn arc() -> impl Strategy<Value = ArcParams> {
    (0.15f64..0.55, 0.0f64..179.5f64.to_radians(), 0.0f64..TAU).prop_map(|(l, t, d)| ArcParams::new(l, t, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn arc_triangle_round_trip(a in arc()) {
        let tri = segment_triangle(&a, &Pose::identity()).unwrap();
        let back = arc_from_triangle(&tri, &Vector3::z(), None, 1e-9).unwrap();
        prop_assert!((back.length - a.length).abs() < 1e-9, "{a:?} -> {back:?}");
        prop_assert!((back.theta - a.theta).abs() < 1e-9, "{a:?} -> {back:?}");
    }

    #[test]
    fn delta_rotates_tip_about_base_axis(a in arc(), phi in 0.0f64..TAU) {
        let tip = segment_pose(&a, Dim::Spatial).unwrap().position;
        let turned = segment_pose(&ArcParams::new(a.length, a.theta, a.delta + phi), Dim::Spatial).unwrap().position;
        let rotated = Rotation3::from_axis_angle(&Vector3::z_axis(), phi) * tip;
        prop_assert!((turned - rotated).norm() < 1e-10);
    }

    #[test]
    fn chord_ratio_bounds(theta in 0.0f64..PI - 1e-9, l in 0.1f64..1.0) {
        let ratio = chord_length(l, theta) / l;
        prop_assert!(ratio > 2.0 / PI && ratio <= 1.0 + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tangent_continuity(segs in prop::collection::vec(arc(), 1..7)) {
        let robot = RobotModel::uniform(segs.len(), Dim::Spatial, 0.15, 0.55);
        let config = Configuration::new(segs);
        let poses = forward_kinematics(&config, &robot).unwrap();
        for (t, a) in config.segments.iter().enumerate() {
            let tri = segment_triangle(a, &poses[t]).unwrap();
            let leg_out = (tri.p - tri.q).normalize();
            prop_assert!((leg_out - poses[t + 1].tangent()).norm() < 1e-10);
            let leg_in = (tri.q - tri.p_prev).normalize();
            prop_assert!((leg_in - poses[t].tangent()).norm() < 1e-10);
        }
        for p in &poses {
            prop_assert!(p.orthonormality_defect() < 1e-10);
        }
    }
}

#[test]
fn near_straight_limit() {
    for delta in [0.0, 1.0, PI, 5.0] {
        let bent = segment_pose(&ArcParams::new(0.35, 1e-9, delta), Dim::Spatial).unwrap();
        let straight = segment_pose(&ArcParams::new(0.35, 0.0, delta), Dim::Spatial).unwrap();
        assert!((bent.position - straight.position).norm() < 1e-8);
        assert!((bent.frame - straight.frame).norm() < 1e-8);
    }
}

#[test]
fn chord_sweep() {
    let mut last = 1.0;
    for k in 0..=10_000 {
        let theta = PI * k as f64 / 10_001.0;
        let ratio = chord_length(1.0, theta);
        assert!(ratio > 2.0 / PI && ratio <= 1.0);
        assert!(ratio <= last + 1e-15);
        last = ratio;
    }
}
