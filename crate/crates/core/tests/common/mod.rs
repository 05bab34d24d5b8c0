#![allow(dead_code)]

use continuum_ik::bench::{admissible, query_rng, sample_configuration};
use continuum_ik::environment::Environment;
use continuum_ik::kinematics::{end_effector, Configuration, RobotModel};
use continuum_ik::model::{GoalSpec, SpecMode};
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_k.
pub fn gauss_legendre(k: usize) -> Vec<(f64, f64)> {
    (0..k)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=k {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `∫_0^x t^{a-1} (1-t)^{b-1} dt` for `x ≤ ½`, substituting `t = u²` to
/// remove the endpoint singularity.
fn lower_integral(a: f64, b: f64, x: f64, rule: &[(f64, f64)], panels: usize) -> f64 {
    let top = x.sqrt();
    let h = top / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for &(node, weight) in rule {
            let u = mid + 0.5 * h * node;
            let t = u * u;
            sum += 0.5 * h * weight * 2.0 * u.powf(2.0 * a - 1.0) * (1.0 - t).powf(b - 1.0);
        }
    }
    sum
}

/// Regularized incomplete beta by quadrature, independent of any special
/// function library.
pub fn beta_cdf_oracle(a: f64, b: f64, x: f64) -> f64 {
    let rule = gauss_legendre(20);
    let panels = 16;
    let head = lower_integral(a, b, 0.5, &rule, panels);
    let tail = lower_integral(b, a, 0.5, &rule, panels);
    let total = head + tail;
    if x <= 0.5 {
        lower_integral(a, b, x, &rule, panels) / total
    } else {
        1.0 - lower_integral(b, a, 1.0 - x, &rule, panels) / total
    }
}

pub fn beta_quantile_oracle(a: f64, b: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if beta_cdf_oracle(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn jeffreys_oracle(s: usize, t: usize, conf: f64) -> (f64, f64) {
    let a = s as f64 + 0.5;
    let b = (t - s) as f64 + 0.5;
    let tail = 0.5 * (1.0 - conf);
    let lo = if s == 0 { 0.0 } else { beta_quantile_oracle(a, b, tail) };
    let hi = if s == t { 1.0 } else { beta_quantile_oracle(a, b, 1.0 - tail) };
    (lo, hi)
}

/// Whether every chord satisfies the model's length rows: `d ≥ L_min`
/// always, `d ≤ 2 L_max / π` in position mode.
pub fn chords_in_model(c: &Configuration, robot: &RobotModel, mode: SpecMode) -> bool {
    c.segments.iter().zip(&robot.length_ranges).all(|(a, r)| {
        let d = a.chord();
        d >= r.min && (mode != SpecMode::Position || d <= 2.0 * r.max / PI)
    })
}

/// Admissible random configuration that the model admits, and its goal.
pub fn feasible_sample(robot: &RobotModel, mode: SpecMode, seed: u64, index: usize) -> (Configuration, GoalSpec) {
    let mut rng = query_rng(seed, index);
    loop {
        let c = sample_configuration(robot, &mut rng);
        if !chords_in_model(&c, robot, mode) {
            continue;
        }
        if admissible(&c, robot, &Environment::empty()).unwrap() {
            let ee = end_effector(&c, robot).unwrap();
            return (c.clone(), GoalSpec::from_pose(&ee, robot.dim, mode));
        }
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}
