//! Distance-geometric feasibility problem: anchors, unanchored points and the
//! quadratic constraint list over points and nonnegative scalars.
//!
//! Unanchored points are ordered `q_1, p_1, q_2, …, p_{n-1}, q_n` (`j = 2n - 1`
//! columns). `p_0` and `p_n` are the anchors `b` and `w`. Scalars are
//! `ω_0, ω_1, …, ω_{n-1}` plus `ω_w'` when the end-effector tangent is
//! constrained.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, Configuration, Dim, Pose, RobotModel};

/// End-effector specification mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpecMode {
    /// Position only.
    #[serde(rename = "pos")]
    Position,
    /// Position plus backbone tangent (yaw and pitch).
    #[serde(rename = "pos-yp")]
    PositionYawPitch,
    /// Position, tangent and roll axis.
    #[serde(rename = "pose")]
    FullPose,
}

impl SpecMode {
    pub const ALL: [SpecMode; 3] = [SpecMode::Position, SpecMode::PositionYawPitch, SpecMode::FullPose];

    pub fn name(self) -> &'static str {
        match self {
            SpecMode::Position => "pos",
            SpecMode::PositionYawPitch => "pos-yp",
            SpecMode::FullPose => "pose",
        }
    }

    pub fn constrains_tangent(self) -> bool {
        self != SpecMode::Position
    }

    pub fn constrains_roll(self) -> bool {
        self == SpecMode::FullPose
    }

    pub fn anchor_count(self) -> usize {
        match self {
            SpecMode::Position => 3,
            SpecMode::PositionYawPitch => 4,
            SpecMode::FullPose => 5,
        }
    }
}

impl fmt::Display for SpecMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpecMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnsupportedSpecification(format!("unknown mode `{s}`")))
    }
}

/// End-effector goal. Tangent and roll axis may be present even when the
/// mode ignores them; they are then only used for error reporting.
#[derive(Clone, Debug, PartialEq)]
pub struct GoalSpec {
    pub dim: Dim,
    pub mode: SpecMode,
    pub position: Vector3<f64>,
    pub tangent: Option<Vector3<f64>>,
    /// Desired end-effector y axis, orthogonal to the tangent.
    pub roll_axis: Option<Vector3<f64>>,
}

impl GoalSpec {
    pub fn position(dim: Dim, position: Vector3<f64>) -> Self {
        Self {
            dim,
            mode: SpecMode::Position,
            position,
            tangent: None,
            roll_axis: None,
        }
    }

    /// Goal taken from a full end-effector pose. Planar poses are snapped
    /// onto the x-z plane.
    pub fn from_pose(pose: &Pose, dim: Dim, mode: SpecMode) -> Self {
        let (mut position, mut tangent) = (pose.position, pose.tangent());
        if dim == Dim::Planar {
            position.y = 0.0;
            tangent.y = 0.0;
            tangent.normalize_mut();
        }
        Self {
            dim,
            mode,
            position,
            tangent: Some(tangent),
            roll_axis: (dim == Dim::Spatial).then(|| pose.axis(1)),
        }
    }

    pub fn with_mode(&self, mode: SpecMode) -> Self {
        Self { mode, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode.constrains_roll() && self.dim == Dim::Planar {
            return Err(Error::UnsupportedSpecification(
                "roll cannot be specified for planar robots".into(),
            ));
        }
        if self.dim == Dim::Planar && self.position.y != 0.0 {
            return Err(Error::Domain("planar goal must lie in the x-z plane".into()));
        }
        if self.mode.constrains_tangent() {
            let t = self
                .tangent
                .ok_or_else(|| Error::UnsupportedSpecification("mode needs a tangent".into()))?;
            if (t.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::Domain("goal tangent must be unit".into()));
            }
        }
        if self.mode.constrains_roll() {
            let r = self
                .roll_axis
                .ok_or_else(|| Error::UnsupportedSpecification("mode needs a roll axis".into()))?;
            let t = self.tangent.expect("checked above");
            if (r.norm() - 1.0).abs() > 1e-10 || r.dot(&t).abs() > 1e-10 {
                return Err(Error::Domain(
                    "roll axis must be unit and orthogonal to the tangent".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct GoalRepr {
    mode: SpecMode,
    position: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tangent: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    roll_axis: Option<Vec<f64>>,
}

impl Serialize for GoalSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let p = |v: &Vector3<f64>| self.dim.project(v).as_slice().to_vec();
        GoalRepr {
            mode: self.mode,
            position: p(&self.position),
            tangent: self.tangent.as_ref().map(p),
            roll_axis: self.roll_axis.as_ref().map(p),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GoalSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = GoalRepr::deserialize(d)?;
        let dim = Dim::try_from(r.position.len()).map_err(D::Error::custom)?;
        let e = |v: &Vec<f64>| {
            if v.len() == dim.value() {
                Ok(dim.embed(v))
            } else {
                Err(D::Error::custom("goal vectors must share one dimension"))
            }
        };
        let goal = GoalSpec {
            dim,
            mode: r.mode,
            position: e(&r.position)?,
            tangent: r.tangent.as_ref().map(e).transpose()?,
            roll_axis: r.roll_axis.as_ref().map(e).transpose()?,
        };
        goal.validate().map_err(D::Error::custom)?;
        Ok(goal)
    }
}

/// Fixed points encoding the base pose and end-effector goal, in `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet {
    pub b: DVector<f64>,
    pub b_prime: DVector<f64>,
    pub w: DVector<f64>,
    pub w_prime: Option<DVector<f64>>,
    pub w_dprime: Option<DVector<f64>>,
}

impl AnchorSet {
    pub fn count(&self) -> usize {
        3 + usize::from(self.w_prime.is_some()) + usize::from(self.w_dprime.is_some())
    }
}

/// `b′` sits one unit behind the base along its tangent, `w′` one unit ahead
/// of the goal along the goal tangent and `w″` one unit along the roll axis.
pub fn build_anchors(base: &Pose, goal: &GoalSpec) -> Result<AnchorSet> {
    goal.validate()?;
    let dim = goal.dim;
    let p = |v: Vector3<f64>| dim.project(&v);
    Ok(AnchorSet {
        b: p(base.position),
        b_prime: p(base.position - base.tangent()),
        w: p(goal.position),
        w_prime: goal
            .mode
            .constrains_tangent()
            .then(|| p(goal.position + goal.tangent.expect("validated"))),
        w_dprime: goal
            .mode
            .constrains_roll()
            .then(|| p(goal.position + goal.roll_axis.expect("validated"))),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Eq => "eq",
            Sense::Le => "le",
            Sense::Ge => "ge",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintTag {
    Base,
    EeTangent,
    Roll,
    Symmetry,
    Continuity,
    LengthLo,
    LengthHi,
    Obstacle,
    HalfPlane,
    Nonnegative,
}

impl ConstraintTag {
    pub fn name(self) -> &'static str {
        match self {
            ConstraintTag::Base => "base",
            ConstraintTag::EeTangent => "ee_tangent",
            ConstraintTag::Roll => "roll",
            ConstraintTag::Symmetry => "symmetry",
            ConstraintTag::Continuity => "continuity",
            ConstraintTag::LengthLo => "length_lo",
            ConstraintTag::LengthHi => "length_hi",
            ConstraintTag::Obstacle => "obstacle",
            ConstraintTag::HalfPlane => "halfplane",
            ConstraintTag::Nonnegative => "nonnegative",
        }
    }

    /// Constraints describing the robot body alone (no goal, no environment).
    pub fn is_body(self) -> bool {
        matches!(
            self,
            ConstraintTag::Base
                | ConstraintTag::Symmetry
                | ConstraintTag::Continuity
                | ConstraintTag::LengthLo
                | ConstraintTag::LengthHi
                | ConstraintTag::Nonnegative
        )
    }
}

/// Quadratic form over unanchored points `x_i` and scalars `ω_s`:
///
/// `Σ g·(x_i·x_k) + Σ h·ω_s·x_i[c] + Σ a·x_i[c] + Σ e·ω_s  ⋈  rhs`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticConstraint {
    /// `(i, k, coef)` with `i <= k`.
    pub gram: Vec<(usize, usize, f64)>,
    /// `(s, i, c, coef)`.
    pub bilinear: Vec<(usize, usize, usize, f64)>,
    /// `(i, c, coef)`.
    pub linear_point: Vec<(usize, usize, f64)>,
    /// `(s, coef)`.
    pub linear_scalar: Vec<(usize, f64)>,
    pub rhs: f64,
    pub sense: Sense,
    pub tag: ConstraintTag,
    /// Segment, sphere or point index the row belongs to.
    pub index: usize,
}

impl QuadraticConstraint {
    pub fn lhs(&self, points: &DMatrix<f64>, scalars: &[f64]) -> f64 {
        let x = |i: usize| points.column(i);
        self.gram.iter().map(|&(i, k, g)| g * x(i).dot(&x(k))).sum::<f64>()
            + self
                .bilinear
                .iter()
                .map(|&(s, i, c, h)| h * scalars[s] * points[(c, i)])
                .sum::<f64>()
            + self.linear_point.iter().map(|&(i, c, a)| a * points[(c, i)]).sum::<f64>()
            + self.linear_scalar.iter().map(|&(s, e)| e * scalars[s]).sum::<f64>()
    }

    /// Equalities: `lhs - rhs`. Inequalities: amount of violation, 0 if met.
    pub fn residual(&self, points: &DMatrix<f64>, scalars: &[f64]) -> f64 {
        let gap = self.lhs(points, scalars) - self.rhs;
        match self.sense {
            Sense::Eq => gap,
            Sense::Le => gap.max(0.0),
            Sense::Ge => (-gap).max(0.0),
        }
    }

    fn has_terms(&self) -> bool {
        !(self.gram.is_empty()
            && self.bilinear.is_empty()
            && self.linear_point.is_empty()
            && self.linear_scalar.is_empty())
    }

    fn max_point(&self) -> Option<usize> {
        self.gram
            .iter()
            .map(|t| t.1.max(t.0))
            .chain(self.bilinear.iter().map(|t| t.1))
            .chain(self.linear_point.iter().map(|t| t.0))
            .max()
    }

    fn max_scalar(&self) -> Option<usize> {
        self.bilinear
            .iter()
            .map(|t| t.0)
            .chain(self.linear_scalar.iter().map(|t| t.0))
            .max()
    }
}

/// A point in a constraint: either a decision variable or a constant anchor.
#[derive(Clone, Debug)]
enum Pt {
    Var(usize),
    Const(DVector<f64>),
}

/// Accumulates terms of a [`QuadraticConstraint`], merging duplicates.
#[derive(Default)]
struct Form {
    gram: BTreeMap<(usize, usize), f64>,
    bilinear: BTreeMap<(usize, usize, usize), f64>,
    linear_point: BTreeMap<(usize, usize), f64>,
    linear_scalar: BTreeMap<usize, f64>,
    constant: f64,
}

impl Form {
    fn dot(&mut self, u: &Pt, v: &Pt, coef: f64) -> &mut Self {
        match (u, v) {
            (Pt::Var(i), Pt::Var(k)) => {
                *self.gram.entry(((*i).min(*k), (*i).max(*k))).or_default() += coef;
            }
            (Pt::Var(i), Pt::Const(c)) | (Pt::Const(c), Pt::Var(i)) => {
                for (dim, v) in c.iter().enumerate() {
                    self.point(*i, dim, coef * v);
                }
            }
            (Pt::Const(a), Pt::Const(b)) => self.constant += coef * a.dot(b),
        }
        self
    }

    /// `coef · ‖u − v‖²`.
    fn sq_dist(&mut self, u: &Pt, v: &Pt, coef: f64) -> &mut Self {
        self.dot(u, u, coef).dot(v, v, coef).dot(u, v, -2.0 * coef)
    }

    /// `coef · u[c]`.
    fn coord(&mut self, u: &Pt, c: usize, coef: f64) -> &mut Self {
        match u {
            Pt::Var(i) => self.point(*i, c, coef),
            Pt::Const(v) => self.constant += coef * v[c],
        }
        self
    }

    fn point(&mut self, i: usize, c: usize, coef: f64) {
        *self.linear_point.entry((i, c)).or_default() += coef;
    }

    /// `coef · ω_s · u[c]`.
    fn scaled_coord(&mut self, s: usize, u: &Pt, c: usize, coef: f64) -> &mut Self {
        match u {
            Pt::Var(i) => *self.bilinear.entry((s, *i, c)).or_default() += coef,
            Pt::Const(v) => *self.linear_scalar.entry(s).or_default() += coef * v[c],
        }
        self
    }

    fn scalar(&mut self, s: usize, coef: f64) -> &mut Self {
        *self.linear_scalar.entry(s).or_default() += coef;
        self
    }

    /// Moves the constant to the right-hand side: `form ⋈ rhs`.
    fn finish(&self, rhs: f64, sense: Sense, tag: ConstraintTag, index: usize) -> QuadraticConstraint {
        let nz = |v: &f64| *v != 0.0;
        QuadraticConstraint {
            gram: self.gram.iter().filter(|e| nz(e.1)).map(|(&(i, k), &v)| (i, k, v)).collect(),
            bilinear: self
                .bilinear
                .iter()
                .filter(|e| nz(e.1))
                .map(|(&(s, i, c), &v)| (s, i, c, v))
                .collect(),
            linear_point: self
                .linear_point
                .iter()
                .filter(|e| nz(e.1))
                .map(|(&(i, c), &v)| (i, c, v))
                .collect(),
            linear_scalar: self.linear_scalar.iter().filter(|e| nz(e.1)).map(|(&s, &v)| (s, v)).collect(),
            rhs: rhs - self.constant,
            sense,
            tag,
            index,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DgOptions {
    /// Add `ω ≥ 0` bounds.
    pub nonneg_scalars: bool,
    /// Keep the chord upper bound; `None` keeps it for position-only goals.
    pub chord_upper_bound: Option<bool>,
    /// Keep every unanchored point on the forward side of the base plane.
    pub base_half_plane: bool,
}

impl Default for DgOptions {
    fn default() -> Self {
        Self {
            nonneg_scalars: true,
            chord_upper_bound: None,
            base_half_plane: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DgProblem {
    pub dim: Dim,
    pub n: usize,
    pub mode: SpecMode,
    pub point_names: Vec<String>,
    pub scalar_names: Vec<String>,
    pub anchors: AnchorSet,
    pub eq: Vec<QuadraticConstraint>,
    pub ineq: Vec<QuadraticConstraint>,
    /// Inconsistencies noticed while building (the solve may still run).
    pub warnings: Vec<String>,
}

impl DgProblem {
    pub fn d(&self) -> usize {
        self.dim.value()
    }

    pub fn num_points(&self) -> usize {
        self.point_names.len()
    }

    pub fn num_scalars(&self) -> usize {
        self.scalar_names.len()
    }

    pub fn constraints(&self) -> impl Iterator<Item = &QuadraticConstraint> {
        self.eq.iter().chain(&self.ineq)
    }

    pub fn count(&self, tag: ConstraintTag) -> usize {
        self.constraints().filter(|c| c.tag == tag).count()
    }
}

/// Column of `q_t`, `t = 1..=n`.
pub fn q_index(t: usize) -> usize {
    debug_assert!(t >= 1);
    2 * (t - 1)
}

/// Column of `p_t`, `t = 1..n-1`.
pub fn p_index(t: usize) -> usize {
    debug_assert!(t >= 1);
    2 * t - 1
}

pub fn num_points(n: usize) -> usize {
    2 * n - 1
}

pub fn num_scalars(n: usize, mode: SpecMode) -> usize {
    n + usize::from(mode.constrains_tangent())
}

pub fn build_problem(
    robot: &RobotModel,
    goal: &GoalSpec,
    env: &Environment,
    opts: &DgOptions,
) -> Result<DgProblem> {
    let n = robot.n();
    if n == 0 {
        return Err(Error::Domain("robot has zero segments".into()));
    }
    robot.validate()?;
    if goal.dim != robot.dim {
        return Err(Error::Shape("goal and robot dimensions differ".into()));
    }
    env.validate(robot.dim)?;
    let anchors = build_anchors(&robot.base, goal)?;
    let dim = robot.dim;
    let d = dim.value();
    let mode = goal.mode;
    let mut warnings = Vec::new();

    let q = |t: usize| Pt::Var(q_index(t));
    let p = |t: usize| {
        if t == 0 {
            Pt::Const(anchors.b.clone())
        } else if t == n {
            Pt::Const(anchors.w.clone())
        } else {
            Pt::Var(p_index(t))
        }
    };
    let omega_ee = n;

    let mut eq = Vec::new();
    let mut ineq = Vec::new();
    let mut push = |c: QuadraticConstraint, warnings: &mut Vec<String>| {
        if c.has_terms() {
            if c.sense == Sense::Eq {
                eq.push(c);
            } else {
                ineq.push(c);
            }
        } else {
            let r = c.residual(&DMatrix::zeros(d, 0), &[]);
            if r.abs() > 1e-12 {
                warnings.push(format!(
                    "{} row {} involves only anchors and is violated by {r:.3e}",
                    c.tag.name(),
                    c.index
                ));
            }
        }
    };

    // q_1 = b + ω_0 (b − b′)
    let base_dir = &anchors.b - &anchors.b_prime;
    for c in 0..d {
        let mut f = Form::default();
        f.coord(&q(1), c, 1.0).scalar(0, -base_dir[c]);
        push(f.finish(anchors.b[c], Sense::Eq, ConstraintTag::Base, c), &mut warnings);
    }

    // q_n = w + ω_w′ (w − w′)
    if let Some(w_prime) = &anchors.w_prime {
        let ee_dir = &anchors.w - w_prime;
        for c in 0..d {
            let mut f = Form::default();
            f.coord(&q(n), c, 1.0).scalar(omega_ee, -ee_dir[c]);
            push(f.finish(anchors.w[c], Sense::Eq, ConstraintTag::EeTangent, c), &mut warnings);
        }
    }

    // (w″ − w)·(w − x) = 0 for x = q_n, p_{n−1}
    if let Some(w_dprime) = &anchors.w_dprime {
        let roll = Pt::Const(w_dprime - &anchors.w);
        let w = Pt::Const(anchors.w.clone());
        for (k, x) in [q(n), p(n - 1)].iter().enumerate() {
            let mut f = Form::default();
            f.dot(&roll, &w, 1.0).dot(&roll, x, -1.0);
            push(f.finish(0.0, Sense::Eq, ConstraintTag::Roll, k), &mut warnings);
        }
    }

    // ‖p_{t−1} − q_t‖² − ‖p_t − q_t‖² = 0
    for t in 1..=n {
        let mut f = Form::default();
        f.sq_dist(&p(t - 1), &q(t), 1.0).sq_dist(&p(t), &q(t), -1.0);
        push(f.finish(0.0, Sense::Eq, ConstraintTag::Symmetry, t), &mut warnings);
    }

    // q_{t+1} = p_t + ω_t (p_t − q_t)
    for t in 1..n {
        for c in 0..d {
            let mut f = Form::default();
            f.coord(&q(t + 1), c, 1.0)
                .coord(&p(t), c, -1.0)
                .scaled_coord(t, &p(t), c, -1.0)
                .scaled_coord(t, &q(t), c, 1.0);
            push(f.finish(0.0, Sense::Eq, ConstraintTag::Continuity, t), &mut warnings);
        }
    }

    // L_min² ≤ ‖p_t − p_{t−1}‖² ≤ (2 L_max / π)²
    let upper = opts.chord_upper_bound.unwrap_or(mode == SpecMode::Position);
    for t in 1..=n {
        let range = robot.length_ranges[t - 1];
        let mut f = Form::default();
        f.sq_dist(&p(t), &p(t - 1), 1.0);
        push(f.finish(range.min * range.min, Sense::Ge, ConstraintTag::LengthLo, t), &mut warnings);
        if upper {
            let hi = 2.0 * range.max / PI;
            push(f.finish(hi * hi, Sense::Le, ConstraintTag::LengthHi, t), &mut warnings);
        }
    }

    // ‖p_t − c‖² ≥ r² on segment endpoints
    for (g, sphere) in env.spheres.iter().enumerate() {
        let center = Pt::Const(DVector::from_column_slice(&sphere.center));
        let sense = if sphere.keep_inside { Sense::Le } else { Sense::Ge };
        for t in 1..n {
            let mut f = Form::default();
            f.sq_dist(&p(t), &center, 1.0);
            push(f.finish(sphere.radius * sphere.radius, sense, ConstraintTag::Obstacle, g), &mut warnings);
        }
        for (name, anchor) in [("base", &anchors.b), ("goal", &anchors.w)] {
            let inside = (anchor - DVector::from_column_slice(&sphere.center)).norm() < sphere.radius;
            if inside != sphere.keep_inside {
                warnings.push(format!("sphere {g} makes the {name} anchor infeasible"));
            }
        }
    }

    // x·n ≤ c on every unanchored point
    let mut planes: Vec<(DVector<f64>, f64)> = env
        .half_planes
        .iter()
        .map(|h| (DVector::from_column_slice(&h.normal), h.offset))
        .collect();
    if opts.base_half_plane {
        let up = dim.project(&robot.base.tangent());
        planes.push((-&up, -up.dot(&anchors.b)));
    }
    let j = num_points(n);
    for (h, (normal, offset)) in planes.iter().enumerate() {
        for i in 0..j {
            let mut f = Form::default();
            f.dot(&Pt::Var(i), &Pt::Const(normal.clone()), 1.0);
            push(f.finish(*offset, Sense::Le, ConstraintTag::HalfPlane, h), &mut warnings);
        }
    }

    let n_scalars = num_scalars(n, mode);
    if opts.nonneg_scalars {
        for s in 0..n_scalars {
            let mut f = Form::default();
            f.scalar(s, 1.0);
            push(f.finish(0.0, Sense::Ge, ConstraintTag::Nonnegative, s), &mut warnings);
        }
    }

    let mut point_names = Vec::with_capacity(j);
    for t in 1..=n {
        point_names.push(format!("q{t}"));
        if t < n {
            point_names.push(format!("p{t}"));
        }
    }
    let mut scalar_names: Vec<String> = (0..n).map(|t| format!("omega{t}")).collect();
    if mode.constrains_tangent() {
        scalar_names.push("omega_ee".into());
    }

    let problem = DgProblem {
        dim,
        n,
        mode,
        point_names,
        scalar_names,
        anchors,
        eq,
        ineq,
        warnings,
    };
    debug_assert!(problem
        .constraints()
        .all(|c| c.max_point().is_none_or(|i| i < j) && c.max_scalar().is_none_or(|s| s < n_scalars)));
    Ok(problem)
}

/// Residuals of every constraint, equalities first, in problem order.
pub fn eval_residuals(problem: &DgProblem, points: &DMatrix<f64>, scalars: &[f64]) -> Result<Vec<f64>> {
    if points.nrows() != problem.d() || points.ncols() != problem.num_points() {
        return Err(Error::Shape(format!(
            "expected a {}x{} point matrix, got {}x{}",
            problem.d(),
            problem.num_points(),
            points.nrows(),
            points.ncols()
        )));
    }
    if scalars.len() != problem.num_scalars() {
        return Err(Error::Shape(format!(
            "expected {} scalars, got {}",
            problem.num_scalars(),
            scalars.len()
        )));
    }
    Ok(problem.constraints().map(|c| c.residual(points, scalars)).collect())
}

/// Point and scalar assignment of a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `d × j`, columns in problem order.
    pub points: DMatrix<f64>,
    pub scalars: Vec<f64>,
}

/// Exact assignment of a configuration: virtual joints from segment
/// triangles, `ω_0 = l_1`, `ω_t = l_{t+1} / l_t`, `ω_w′ = l_n`.
pub fn assignment_from_configuration(
    config: &Configuration,
    robot: &RobotModel,
    mode: SpecMode,
) -> Result<Assignment> {
    let poses = forward_kinematics(config, robot)?;
    let n = robot.n();
    let dim = robot.dim;
    let mut points = DMatrix::zeros(dim.value(), num_points(n));
    let links: Vec<f64> = config.segments.iter().map(|a| a.link_length()).collect();
    for t in 1..=n {
        let q = poses[t - 1].position + links[t - 1] * poses[t - 1].tangent();
        points.set_column(q_index(t), &dim.project(&q));
        if t < n {
            points.set_column(p_index(t), &dim.project(&poses[t].position));
        }
    }
    let mut scalars = Vec::with_capacity(num_scalars(n, mode));
    scalars.push(links[0]);
    for t in 1..n {
        scalars.push(links[t] / links[t - 1]);
    }
    if mode.constrains_tangent() {
        scalars.push(links[n - 1]);
    }
    Ok(Assignment { points, scalars })
}
