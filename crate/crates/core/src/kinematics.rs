//! Constant-curvature segment kinematics.
//!
//! All geometry is carried in three dimensions. Planar robots live in the
//! x–z plane (y = 0) with the backbone tangent along local z; [`Dim`]
//! converts between that embedding and the `R^d` coordinates used by the
//! distance-geometric model.
//!
//! Frame convention: a segment with arc parameters `(L, θ, δ)` first rotates
//! its frame by `δ` about the local z axis and then bends by `θ` about the new
//! local y axis, i.e. the tip frame is `Rz(δ)·Ry(θ)` relative to the segment
//! base. The tip frame's y axis is therefore always the normal of the
//! segment's bending plane.

use nalgebra::{DVector, Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Bending angles below this are treated as straight when recovering arcs.
pub const STRAIGHT_TOL: f64 = 1e-8;

/// Slack applied when testing a length against a segment's range.
pub const LENGTH_SLACK: f64 = 1e-6;

/// Ambient dimension of the robot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub enum Dim {
    Planar,
    Spatial,
}

impl Dim {
    pub fn value(self) -> usize {
        match self {
            Dim::Planar => 2,
            Dim::Spatial => 3,
        }
    }

    /// Coordinates of an embedded point in `R^d`.
    pub fn project(self, v: &Vector3<f64>) -> DVector<f64> {
        match self {
            Dim::Planar => DVector::from_vec(vec![v.x, v.z]),
            Dim::Spatial => DVector::from_column_slice(v.as_slice()),
        }
    }

    /// Embeds `R^d` coordinates into three dimensions.
    pub fn embed(self, v: &[f64]) -> Vector3<f64> {
        debug_assert_eq!(v.len(), self.value());
        match self {
            Dim::Planar => Vector3::new(v[0], 0.0, v[1]),
            Dim::Spatial => Vector3::new(v[0], v[1], v[2]),
        }
    }
}

impl TryFrom<usize> for Dim {
    type Error = Error;

    fn try_from(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Dim::Planar),
            3 => Ok(Dim::Spatial),
            _ => Err(Error::Domain(format!("dimension must be 2 or 3, got {d}"))),
        }
    }
}

impl From<Dim> for usize {
    fn from(d: Dim) -> usize {
        d.value()
    }
}

/// Arc parameters of one segment: length (m), bending angle and bending-plane
/// rotation (rad).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcParams {
    pub length: f64,
    pub theta: f64,
    pub delta: f64,
}

impl ArcParams {
    pub fn new(length: f64, theta: f64, delta: f64) -> Self {
        Self {
            length,
            theta,
            delta,
        }
    }

    pub fn straight(length: f64) -> Self {
        Self::new(length, 0.0, 0.0)
    }

    fn check(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::Domain(format!(
                "segment length must be positive, got {}",
                self.length
            )));
        }
        if !(self.theta >= 0.0 && self.theta < PI) {
            return Err(Error::Domain(format!(
                "bending angle must lie in [0, pi), got {}",
                self.theta
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::Domain("bending-plane rotation is not finite".into()));
        }
        Ok(())
    }

    fn check_in(&self, dim: Dim) -> Result<()> {
        self.check()?;
        if dim == Dim::Planar {
            let (s, c) = self.delta.sin_cos();
            if s.abs() > 1e-9 || (c.abs() - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!(
                    "planar segments need delta in {{0, pi}}, got {}",
                    self.delta
                )));
            }
        }
        Ok(())
    }

    /// Straight-line distance between base and tip.
    pub fn chord(&self) -> f64 {
        chord_length(self.length, self.theta)
    }

    /// Distance from either endpoint to the virtual joint.
    pub fn link_length(&self) -> f64 {
        link_length(self.length, self.theta)
    }
}

pub fn chord_length(length: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        length
    } else {
        2.0 * length / theta * (0.5 * theta).sin()
    }
}

pub fn link_length(length: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        0.5 * length
    } else {
        length / theta * (0.5 * theta).tan()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthRange {
    pub min: f64,
    pub max: f64,
}

impl LengthRange {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    pub fn contains(&self, length: f64) -> bool {
        length >= self.min - LENGTH_SLACK && length <= self.max + LENGTH_SLACK
    }
}

/// Position and orthonormal frame. Columns of `frame` are the local axes;
/// local z is the backbone tangent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub frame: Matrix3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            position: Vector3::zeros(),
            frame: Matrix3::identity(),
        }
    }

    pub fn new(position: Vector3<f64>, frame: Matrix3<f64>) -> Self {
        Self { position, frame }
    }

    pub fn tangent(&self) -> Vector3<f64> {
        self.frame.column(2).into_owned()
    }

    pub fn axis(&self, i: usize) -> Vector3<f64> {
        self.frame.column(i).into_owned()
    }

    pub fn transform_point(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.frame * local
    }

    /// `self ∘ local`: interprets `local` in this pose's frame.
    pub fn compose(&self, local: &Pose) -> Pose {
        Pose {
            position: self.transform_point(&local.position),
            frame: self.frame * local.frame,
        }
    }

    /// `‖FᵀF − I‖_max`.
    pub fn orthonormality_defect(&self) -> f64 {
        (self.frame.transpose() * self.frame - Matrix3::identity()).amax()
    }

    pub fn check(&self) -> Result<()> {
        let defect = self.orthonormality_defect();
        if defect > 1e-10 || (self.frame.determinant() - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!(
                "pose frame is not a rotation (orthonormality defect {defect:.2e})"
            )));
        }
        Ok(())
    }

    /// `R^d` representation: position and the local axes as columns.
    pub fn to_repr(&self, dim: Dim) -> PoseRepr {
        match dim {
            Dim::Spatial => PoseRepr {
                position: self.position.as_slice().to_vec(),
                frame: (0..3).map(|i| self.axis(i).as_slice().to_vec()).collect(),
            },
            Dim::Planar => {
                let t = dim.project(&self.tangent());
                PoseRepr {
                    position: dim.project(&self.position).as_slice().to_vec(),
                    frame: vec![vec![t[1], -t[0]], vec![t[0], t[1]]],
                }
            }
        }
    }

    pub fn from_repr(repr: &PoseRepr, dim: Dim) -> Result<Self> {
        let d = dim.value();
        if repr.position.len() != d || repr.frame.len() != d || repr.frame.iter().any(|c| c.len() != d)
        {
            return Err(Error::Shape(format!("pose must be given in R^{d}")));
        }
        let position = dim.embed(&repr.position);
        let frame = match dim {
            Dim::Spatial => Matrix3::from_columns(&[
                dim.embed(&repr.frame[0]),
                dim.embed(&repr.frame[1]),
                dim.embed(&repr.frame[2]),
            ]),
            Dim::Planar => {
                let x = dim.embed(&repr.frame[0]);
                let z = dim.embed(&repr.frame[1]);
                Matrix3::from_columns(&[x, z.cross(&x), z])
            }
        };
        let pose = Pose { position, frame };
        pose.check()?;
        Ok(pose)
    }
}

/// Serialized pose in `R^d`; `frame` lists the local axes (columns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseRepr {
    pub position: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
}

/// Ordered arc parameters, base segment first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub segments: Vec<ArcParams>,
}

impl Configuration {
    pub fn new(segments: Vec<ArcParams>) -> Self {
        Self { segments }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RobotRepr", into = "RobotRepr")]
pub struct RobotModel {
    pub dim: Dim,
    pub length_ranges: Vec<LengthRange>,
    pub base: Pose,
    pub body_radius: f64,
}

impl RobotModel {
    pub const DEFAULT_BODY_RADIUS: f64 = 0.01;

    /// `n` identical segments and the identity base pose.
    pub fn uniform(n: usize, dim: Dim, min: f64, max: f64) -> Self {
        Self {
            dim,
            length_ranges: vec![LengthRange::new(min, max); n],
            base: Pose::identity(),
            body_radius: Self::DEFAULT_BODY_RADIUS,
        }
    }

    pub fn n(&self) -> usize {
        self.length_ranges.len()
    }

    pub fn d(&self) -> usize {
        self.dim.value()
    }

    /// Total length with every segment at mid-extension.
    pub fn nominal_length(&self) -> f64 {
        self.length_ranges.iter().map(LengthRange::mid).sum()
    }

    pub fn mid_extension(&self) -> Configuration {
        Configuration::new(
            self.length_ranges
                .iter()
                .map(|r| ArcParams::straight(r.mid()))
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.length_ranges.is_empty() {
            return Err(Error::Domain("robot needs at least one segment".into()));
        }
        for (t, r) in self.length_ranges.iter().enumerate() {
            if !(r.min > 0.0 && r.min <= r.max) {
                return Err(Error::Domain(format!(
                    "segment {t}: invalid length range [{}, {}]",
                    r.min, r.max
                )));
            }
        }
        if !(self.body_radius >= 0.0) {
            return Err(Error::Domain("body radius must be nonnegative".into()));
        }
        self.base.check()?;
        if self.dim == Dim::Planar
            && (self.base.position.y != 0.0 || self.base.tangent().y.abs() > 1e-12)
        {
            return Err(Error::Domain("planar base pose must lie in the x-z plane".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RobotRepr {
    d: Dim,
    length_ranges: Vec<LengthRange>,
    base_pose: PoseRepr,
    #[serde(default = "default_body_radius")]
    body_radius: f64,
}

fn default_body_radius() -> f64 {
    RobotModel::DEFAULT_BODY_RADIUS
}

impl TryFrom<RobotRepr> for RobotModel {
    type Error = Error;

    fn try_from(r: RobotRepr) -> Result<Self> {
        let robot = RobotModel {
            dim: r.d,
            base: Pose::from_repr(&r.base_pose, r.d)?,
            length_ranges: r.length_ranges,
            body_radius: r.body_radius,
        };
        robot.validate()?;
        Ok(robot)
    }
}

impl From<RobotModel> for RobotRepr {
    fn from(r: RobotModel) -> Self {
        RobotRepr {
            d: r.dim,
            base_pose: r.base.to_repr(r.dim),
            length_ranges: r.length_ranges,
            body_radius: r.body_radius,
        }
    }
}

fn local_tip(arc: &ArcParams) -> Pose {
    let (st, ct) = arc.theta.sin_cos();
    let (sd, cd) = arc.delta.sin_cos();
    // in-plane offsets r(1 - cos θ) and r sin θ, written to stay finite at θ = 0
    let (lateral, axial) = if arc.theta == 0.0 {
        (0.0, arc.length)
    } else {
        let h = 0.5 * arc.theta;
        (
            arc.length * 2.0 * h.sin() * h.sin() / arc.theta,
            arc.length * st / arc.theta,
        )
    };
    let rz = Matrix3::new(cd, -sd, 0.0, sd, cd, 0.0, 0.0, 0.0, 1.0);
    let ry = Matrix3::new(ct, 0.0, st, 0.0, 1.0, 0.0, -st, 0.0, ct);
    Pose {
        position: Vector3::new(lateral * cd, lateral * sd, axial),
        frame: rz * ry,
    }
}

/// Tip pose of one segment relative to its base frame.
pub fn segment_pose(arc: &ArcParams, dim: Dim) -> Result<Pose> {
    arc.check_in(dim)?;
    Ok(local_tip(arc))
}

/// Segment end poses, base first; `n + 1` entries.
pub fn forward_kinematics(config: &Configuration, robot: &RobotModel) -> Result<Vec<Pose>> {
    if config.len() != robot.n() {
        return Err(Error::Shape(format!(
            "configuration has {} segments, robot has {}",
            config.len(),
            robot.n()
        )));
    }
    let mut poses = Vec::with_capacity(config.len() + 1);
    poses.push(robot.base);
    for (t, arc) in config.segments.iter().enumerate() {
        let local = segment_pose(arc, robot.dim).map_err(|e| e.in_segment(t))?;
        let next = poses[t].compose(&local);
        poses.push(next);
    }
    Ok(poses)
}

pub fn end_effector(config: &Configuration, robot: &RobotModel) -> Result<Pose> {
    Ok(*forward_kinematics(config, robot)?.last().expect("n + 1 poses"))
}

/// Base point, virtual joint and tip of one segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentTriangle {
    pub p_prev: Vector3<f64>,
    pub q: Vector3<f64>,
    pub p: Vector3<f64>,
}

impl SegmentTriangle {
    pub fn chord(&self) -> f64 {
        (self.p - self.p_prev).norm()
    }

    pub fn isosceles_defect(&self) -> f64 {
        ((self.p_prev - self.q).norm() - (self.p - self.q).norm()).abs()
    }
}

/// The isosceles triangle of a segment mounted at `base`. The virtual joint
/// is the intersection of the base and tip tangents; straight segments put it
/// at the midpoint.
pub fn segment_triangle(arc: &ArcParams, base: &Pose) -> Result<SegmentTriangle> {
    arc.check()?;
    let tip = base.compose(&local_tip(arc));
    Ok(SegmentTriangle {
        p_prev: base.position,
        q: base.position + arc.link_length() * base.tangent(),
        p: tip.position,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveredArc {
    pub length: f64,
    pub theta: f64,
    /// `false` when the length falls outside the supplied range.
    pub in_range: bool,
}

/// Inverse of [`segment_triangle`] for the arc length and bending angle.
pub fn arc_from_triangle(
    tri: &SegmentTriangle,
    tangent_in: &Vector3<f64>,
    range: Option<&LengthRange>,
    isosceles_tol: f64,
) -> Result<RecoveredArc> {
    let defect = tri.isosceles_defect();
    if defect > isosceles_tol {
        return Err(Error::MalformedTriangle {
            defect,
            tolerance: isosceles_tol,
        });
    }
    let out = tri.p - tri.q;
    if out.norm() == 0.0 {
        return Err(Error::Domain("degenerate triangle with zero legs".into()));
    }
    let theta = tangent_in.cross(&out).norm().atan2(tangent_in.dot(&out));
    if theta >= PI - 1e-9 {
        return Err(Error::Domain(format!("bending angle {theta} too close to pi")));
    }
    let chord = tri.chord();
    let length = if theta < STRAIGHT_TOL {
        chord
    } else {
        theta * chord / (2.0 * (0.5 * theta).sin())
    };
    Ok(RecoveredArc {
        length,
        theta,
        in_range: range.is_none_or(|r| r.contains(length)),
    })
}

/// Backbone points grouped by segment: `k` points per segment, evenly spaced
/// in arc length, both endpoints included.
pub fn sample_backbone(
    config: &Configuration,
    robot: &RobotModel,
    k: usize,
) -> Result<Vec<Vec<Vector3<f64>>>> {
    if k < 2 {
        return Err(Error::Domain(format!("need at least 2 samples per segment, got {k}")));
    }
    let poses = forward_kinematics(config, robot)?;
    Ok(config
        .segments
        .iter()
        .zip(&poses)
        .map(|(arc, base)| {
            (0..k)
                .map(|i| {
                    let f = i as f64 / (k - 1) as f64;
                    if i == 0 {
                        return base.position;
                    }
                    let partial = ArcParams::new(f * arc.length, f * arc.theta, arc.delta);
                    base.transform_point(&local_tip(&partial).position)
                })
                .collect()
        })
        .collect())
}

/// Minimum distance between backbone samples of non-adjacent segments.
/// `None` when the robot has fewer than three segments.
pub fn self_clearance(config: &Configuration, robot: &RobotModel, k: usize) -> Result<Option<f64>> {
    let samples = sample_backbone(config, robot, k)?;
    let mut best: Option<f64> = None;
    for s in 0..samples.len() {
        for t in s + 2..samples.len() {
            for a in &samples[s] {
                for b in &samples[t] {
                    let dist = (a - b).norm();
                    best = Some(best.map_or(dist, |v: f64| v.min(dist)));
                }
            }
        }
    }
    Ok(best)
}

pub fn self_collision_free(config: &Configuration, robot: &RobotModel, k: usize) -> Result<bool> {
    Ok(self_clearance(config, robot, k)?.is_none_or(|c| c >= 2.0 * robot.body_radius))
}

/// Rotation taking `from` onto `to` (both unit), used to build test poses.
pub fn rotation_between(from: &Vector3<f64>, to: &Vector3<f64>) -> Matrix3<f64> {
    Rotation3::rotation_between(from, to)
        .unwrap_or_else(|| Rotation3::from_axis_angle(&Vector3::x_axis(), PI))
        .into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const FRAC: f64 = 0.222_816_920_328_653_4; // 2 * 0.35 / pi

    #[test]
    fn straight_segment_translates() {
        let pose = segment_pose(&ArcParams::straight(0.35), Dim::Spatial).unwrap();
        assert_abs_diff_eq!(pose.position, Vector3::new(0.0, 0.0, 0.35), epsilon = 1e-15);
        assert_abs_diff_eq!(pose.frame, Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn quarter_arc_pose() {
        let pose = segment_pose(&ArcParams::new(0.35, PI / 2.0, 0.0), Dim::Spatial).unwrap();
        assert_abs_diff_eq!(pose.position, Vector3::new(FRAC, 0.0, FRAC), epsilon = 1e-12);
        assert_abs_diff_eq!(pose.tangent(), Vector3::x(), epsilon = 1e-12);

        let rotated = segment_pose(&ArcParams::new(0.35, PI / 2.0, PI / 2.0), Dim::Spatial).unwrap();
        assert_abs_diff_eq!(rotated.position, Vector3::new(0.0, FRAC, FRAC), epsilon = 1e-12);
    }

    #[test]
    fn bad_arcs_are_rejected() {
        assert!(segment_pose(&ArcParams::new(0.35, PI, 0.0), Dim::Spatial).is_err());
        assert!(segment_pose(&ArcParams::new(0.0, 0.1, 0.0), Dim::Spatial).is_err());
        assert!(segment_pose(&ArcParams::new(0.35, -0.1, 0.0), Dim::Spatial).is_err());
        assert!(segment_pose(&ArcParams::new(0.35, 0.5, 0.3), Dim::Planar).is_err());
        assert!(segment_pose(&ArcParams::new(0.35, 0.5, PI), Dim::Planar).is_ok());
    }

    #[test]
    fn near_straight_limit() {
        let a = local_tip(&ArcParams::new(0.35, 0.0, 0.7));
        let b = local_tip(&ArcParams::new(0.35, 1e-9, 0.7));
        assert!((a.position - b.position).norm() < 1e-8);
    }

    #[test]
    fn straight_chain() {
        let robot = RobotModel::uniform(3, Dim::Spatial, 0.15, 0.55);
        let config = robot.mid_extension();
        let poses = forward_kinematics(&config, &robot).unwrap();
        assert_eq!(poses.len(), 4);
        assert_abs_diff_eq!(poses[3].position, Vector3::new(0.0, 0.0, 1.05), epsilon = 1e-14);
        assert_abs_diff_eq!(poses[3].frame, Matrix3::identity(), epsilon = 1e-14);
    }

    #[test]
    fn single_segment_chain_matches_segment_pose() {
        let robot = RobotModel::uniform(1, Dim::Spatial, 0.15, 0.55);
        let arc = ArcParams::new(0.35, PI / 2.0, 0.0);
        let ee = end_effector(&Configuration::new(vec![arc]), &robot).unwrap();
        assert_eq!(ee, segment_pose(&arc, Dim::Spatial).unwrap());
    }

    #[test]
    fn opposite_planar_bends_cancel() {
        let robot = RobotModel::uniform(2, Dim::Planar, 0.15, 0.55);
        let config = Configuration::new(vec![
            ArcParams::new(0.35, PI / 2.0, 0.0),
            ArcParams::new(0.35, PI / 2.0, PI),
        ]);
        let poses = forward_kinematics(&config, &robot).unwrap();
        assert_abs_diff_eq!(poses[2].tangent(), Vector3::z(), epsilon = 1e-12);
        // composition oracle: first tip at (r, 0, r) heading +x, the second
        // arc curls back toward +z and adds (r, 0, r) again
        assert_abs_diff_eq!(
            poses[2].position,
            Vector3::new(2.0 * FRAC, 0.0, 2.0 * FRAC),
            epsilon = 1e-12
        );
        assert_eq!(forward_kinematics(&Configuration::new(vec![]), &robot).unwrap_err().to_string().contains("shape"), true);
    }

    #[test]
    fn triangles() {
        let base = Pose::identity();
        let tri = segment_triangle(&ArcParams::straight(0.35), &base).unwrap();
        assert_abs_diff_eq!(tri.q, Vector3::new(0.0, 0.0, 0.175), epsilon = 1e-15);
        assert_abs_diff_eq!(tri.p, Vector3::new(0.0, 0.0, 0.35), epsilon = 1e-15);

        let tri = segment_triangle(&ArcParams::new(0.35, PI / 2.0, 0.0), &base).unwrap();
        assert_abs_diff_eq!(tri.q, Vector3::new(0.0, 0.0, FRAC), epsilon = 1e-12);
        assert_abs_diff_eq!(tri.p, Vector3::new(FRAC, 0.0, FRAC), epsilon = 1e-12);
        assert_abs_diff_eq!(tri.chord(), 0.315_116, epsilon = 1e-5);
        assert_abs_diff_eq!((tri.q - tri.p_prev).norm(), tri.chord() / 2f64.sqrt(), epsilon = 1e-12);

        let arc = ArcParams::new(0.35, 2.0 * PI / 3.0, 0.0);
        assert_abs_diff_eq!(arc.link_length(), 0.289_450, epsilon = 1e-5);
        assert_abs_diff_eq!(arc.link_length(), arc.chord(), epsilon = 1e-12);
        assert!(segment_triangle(&ArcParams::new(0.35, PI, 0.0), &base).is_err());
    }

    #[test]
    fn recover_arcs() {
        let base = Pose::identity();
        let range = LengthRange::new(0.15, 0.55);
        let t = Vector3::z();

        let tri = segment_triangle(&ArcParams::straight(0.35), &base).unwrap();
        let rec = arc_from_triangle(&tri, &t, Some(&range), 1e-6).unwrap();
        assert_abs_diff_eq!(rec.length, 0.35, epsilon = 1e-15);
        assert_eq!(rec.theta, 0.0);
        assert!(rec.in_range);

        let tri = segment_triangle(&ArcParams::new(0.35, PI / 2.0, 0.0), &base).unwrap();
        let rec = arc_from_triangle(&tri, &t, Some(&range), 1e-6).unwrap();
        assert_abs_diff_eq!(rec.length, 0.35, epsilon = 1e-12);
        assert_abs_diff_eq!(rec.theta, PI / 2.0, epsilon = 1e-12);

        let scaled = SegmentTriangle {
            p_prev: tri.p_prev * 0.4,
            q: tri.q * 0.4,
            p: tri.p * 0.4,
        };
        let rec = arc_from_triangle(&scaled, &t, Some(&range), 1e-6).unwrap();
        assert_abs_diff_eq!(rec.length, 0.14, epsilon = 1e-12);
        assert!(!rec.in_range);

        let bent = SegmentTriangle {
            q: tri.q + Vector3::new(0.0, 0.0, 0.01),
            ..tri
        };
        assert!(matches!(
            arc_from_triangle(&bent, &t, None, 1e-6),
            Err(Error::MalformedTriangle { .. })
        ));
    }

    #[test]
    fn backbone_samples() {
        let robot = RobotModel::uniform(1, Dim::Spatial, 0.15, 0.55);
        let pts = sample_backbone(&robot.mid_extension(), &robot, 3).unwrap();
        assert_abs_diff_eq!(pts[0][1], Vector3::new(0.0, 0.0, 0.175), epsilon = 1e-15);

        let quarter = Configuration::new(vec![ArcParams::new(0.35, PI / 2.0, 0.0)]);
        let pts = sample_backbone(&quarter, &robot, 3).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(
            pts[0][1],
            Vector3::new(FRAC * (1.0 - h), 0.0, FRAC * h),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(pts[0][1], Vector3::new(0.065266, 0.0, 0.157556), epsilon = 1e-5);
        assert_abs_diff_eq!(pts[0][2], Vector3::new(FRAC, 0.0, FRAC), epsilon = 1e-12);
        assert!(sample_backbone(&quarter, &robot, 1).is_err());
    }

    #[test]
    fn self_collision_rule() {
        let robot = RobotModel::uniform(3, Dim::Planar, 0.15, 0.55);
        assert!(self_collision_free(&robot.mid_extension(), &robot, 10).unwrap());

        let curl = ArcParams::new(0.35, 175f64.to_radians(), 0.0);
        let folded = Configuration::new(vec![curl; 3]);
        // oracle: segments 1 and 3 trace nearly the same circle
        let samples = sample_backbone(&folded, &robot, 10).unwrap();
        let gap = samples[0]
            .iter()
            .flat_map(|a| samples[2].iter().map(move |b| (a - b).norm()))
            .fold(f64::INFINITY, f64::min);
        assert!(gap < 2.0 * robot.body_radius);
        assert!(!self_collision_free(&folded, &robot, 10).unwrap());

        let two = RobotModel::uniform(2, Dim::Planar, 0.15, 0.55);
        let folded2 = Configuration::new(vec![curl; 2]);
        assert!(self_collision_free(&folded2, &two, 10).unwrap());
    }

    #[test]
    fn robot_json_round_trip() {
        let mut robot = RobotModel::uniform(2, Dim::Planar, 0.15, 0.55);
        robot.base.position = Vector3::new(0.1, 0.0, -0.2);
        let json = serde_json::to_string(&robot).unwrap();
        assert!(json.contains("\"d\":2"));
        let back: RobotModel = serde_json::from_str(&json).unwrap();
        assert_abs_diff_eq!(back.base.frame, robot.base.frame, epsilon = 1e-15);
        assert_abs_diff_eq!(back.base.position, robot.base.position, epsilon = 1e-15);

        let bad = json.replace("\"d\":2", "\"d\":4");
        assert!(serde_json::from_str::<RobotModel>(&bad).is_err());
    }
}
