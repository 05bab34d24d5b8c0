//! Feasible-query generation by rejection sampling of ground-truth
//! configurations.

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::kinematics::{
    end_effector, sample_backbone, self_collision_free, ArcParams, Configuration, Dim, LengthRange, RobotModel,
};
use crate::model::{GoalSpec, SpecMode};

pub const MAX_ATTEMPTS: usize = 10_000;
pub const THETA_MAX_DEG: f64 = 179.5;
/// Standard deviation of sampled lengths as a fraction of the length range.
pub const LENGTH_SD_FRACTION: f64 = 0.1875;
/// Backbone samples per segment used for collision rejection.
pub const REJECTION_SAMPLES: usize = 10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Query {
    pub index: usize,
    pub seed: u64,
    pub mode: SpecMode,
    pub ground_truth: Configuration,
    pub goal: GoalSpec,
}

/// Independent stream per query so results do not depend on batch order.
pub fn query_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Normal draw centered on the range midpoint, truncated to the range.
pub fn sample_length<R: Rng + ?Sized>(rng: &mut R, range: &LengthRange) -> f64 {
    let sd = LENGTH_SD_FRACTION * (range.max - range.min);
    if sd == 0.0 {
        return range.min;
    }
    let normal = Normal::new(range.mid(), sd).expect("positive deviation");
    loop {
        let v = normal.sample(rng);
        if v >= range.min && v <= range.max {
            return v;
        }
    }
}

pub fn sample_configuration<R: Rng + ?Sized>(robot: &RobotModel, rng: &mut R) -> Configuration {
    let theta_max = THETA_MAX_DEG.to_radians();
    Configuration::new(
        robot
            .length_ranges
            .iter()
            .map(|r| {
                let length = sample_length(rng, r);
                let theta = rng.random_range(0.0..=theta_max);
                let delta = match robot.dim {
                    Dim::Spatial => rng.random_range(0.0..TAU),
                    Dim::Planar => {
                        if rng.random_bool(0.5) {
                            0.0
                        } else {
                            PI
                        }
                    }
                };
                ArcParams::new(length, theta, delta)
            })
            .collect(),
    )
}

/// Rejects self-collision, backbone samples inside obstacles and any part
/// of the body behind the base plane.
pub fn admissible(config: &Configuration, robot: &RobotModel, env: &Environment) -> Result<bool> {
    if !self_collision_free(config, robot, REJECTION_SAMPLES)? {
        return Ok(false);
    }
    let base = robot.base.position;
    let up: Vector3<f64> = robot.base.tangent();
    for seg in sample_backbone(config, robot, REJECTION_SAMPLES)? {
        for x in seg {
            if (x - base).dot(&up) < -1e-9 {
                return Ok(false);
            }
            if env.clearance(robot.dim, &x) < 0.0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn sample_query<R: Rng + ?Sized>(
    robot: &RobotModel,
    env: &Environment,
    mode: SpecMode,
    rng: &mut R,
) -> Result<(Configuration, GoalSpec)> {
    robot.validate()?;
    env.validate(robot.dim)?;
    if mode.constrains_roll() && robot.dim == Dim::Planar {
        return Err(Error::UnsupportedSpecification("roll cannot be specified for planar robots".into()));
    }
    for _ in 0..MAX_ATTEMPTS {
        let config = sample_configuration(robot, rng);
        if admissible(&config, robot, env)? {
            let ee = end_effector(&config, robot)?;
            return Ok((config, GoalSpec::from_pose(&ee, robot.dim, mode)));
        }
    }
    Err(Error::EnvironmentTooDense {
        attempts: MAX_ATTEMPTS,
    })
}

pub fn generate_queries(
    robot: &RobotModel,
    env: &Environment,
    mode: SpecMode,
    count: usize,
    seed: u64,
) -> Result<Vec<Query>> {
    (0..count)
        .map(|index| {
            let mut rng = query_rng(seed, index);
            let (ground_truth, goal) = sample_query(robot, env, mode, &mut rng)?;
            Ok(Query {
                index,
                seed,
                mode,
                ground_truth,
                goal,
            })
        })
        .collect()
}
