//! Lifting of the distance-geometric problem to linear constraints on the PSD
//! matrix `Z = Mᵀ M`, `M = [X Ω I_d]`, `Ω = [ω_0 I_d … ω_s I_d]`, and
//! extraction of points back out of `Z`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{num_points, num_scalars, ConstraintTag, DgProblem, QuadraticConstraint, Sense, SpecMode};

/// Block layout of `Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftIndex {
    pub d: usize,
    pub j: usize,
    pub n_scalars: usize,
}

impl LiftIndex {
    pub fn new(d: usize, j: usize, n_scalars: usize) -> Self {
        Self { d, j, n_scalars }
    }

    pub fn for_robot(n: usize, d: usize, mode: SpecMode) -> Self {
        Self::new(d, num_points(n), num_scalars(n, mode))
    }

    pub fn of(problem: &DgProblem) -> Self {
        Self::new(problem.d(), problem.num_points(), problem.num_scalars())
    }

    pub fn m(&self) -> usize {
        self.j + (self.n_scalars + 1) * self.d
    }

    pub fn point(&self, i: usize) -> usize {
        i
    }

    pub fn scalar(&self, s: usize, c: usize) -> usize {
        self.j + s * self.d + c
    }

    pub fn identity(&self, c: usize) -> usize {
        self.m() - self.d + c
    }
}

/// Sparse symmetric matrix stored as upper-triangle entries `(i, j, v)` with
/// `i <= j`; `(i, j, v)` with `i < j` stands for both `A_ij` and `A_ji`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymSparse {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SymSparse {
    pub fn from_map(map: BTreeMap<(usize, usize), f64>) -> Self {
        Self {
            entries: map.into_iter().filter(|e| e.1 != 0.0).map(|((i, j), v)| (i, j, v)).collect(),
        }
    }

    /// `tr(A Z)` using only the upper triangle of `Z`.
    pub fn dot(&self, z: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * z[(i, i)] } else { 2.0 * v * z[(i, j)] })
            .sum()
    }

    pub fn to_dense(&self, m: usize) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(m, m);
        for &(i, j, v) in &self.entries {
            a[(i, j)] += v;
            if i != j {
                a[(j, i)] += v;
            }
        }
        a
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.iter().map(|e| e.1).max()
    }
}

/// Where a lifted row comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowTag {
    Model(ConstraintTag),
    /// Bottom-right block equals `I_d`.
    IdentityBlock,
    /// `Ωᵀ`-versus-identity block equals `ω I_d`.
    ScalarIdentity,
    /// Diagonal `ΩᵀΩ` block is a multiple of `I_d`.
    ScalarGram,
    /// Off-diagonal `ΩᵀΩ` block is a multiple of `I_d`.
    ScalarCross,
}

impl RowTag {
    pub fn name(self) -> &'static str {
        match self {
            RowTag::Model(t) => t.name(),
            RowTag::IdentityBlock => "identity_block",
            RowTag::ScalarIdentity => "scalar_identity",
            RowTag::ScalarGram => "scalar_gram",
            RowTag::ScalarCross => "scalar_cross",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let structural = [
            RowTag::IdentityBlock,
            RowTag::ScalarIdentity,
            RowTag::ScalarGram,
            RowTag::ScalarCross,
        ];
        use ConstraintTag::*;
        let model = [
            Base, EeTangent, Roll, Symmetry, Continuity, LengthLo, LengthHi, Obstacle, HalfPlane, Nonnegative,
        ];
        structural
            .into_iter()
            .chain(model.into_iter().map(RowTag::Model))
            .find(|t| t.name() == s)
    }

    pub fn is_structural(self) -> bool {
        !matches!(self, RowTag::Model(_))
    }
}

/// `tr(A Z) ⋈ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub a: SymSparse,
    pub rhs: f64,
    pub sense: Sense,
    pub tag: RowTag,
}

impl LinearRow {
    pub fn value(&self, z: &DMatrix<f64>) -> f64 {
        self.a.dot(z)
    }

    /// Equalities: `tr(AZ) - rhs`. Inequalities: violation, 0 if met.
    pub fn residual(&self, z: &DMatrix<f64>) -> f64 {
        let gap = self.value(z) - self.rhs;
        match self.sense {
            Sense::Eq => gap,
            Sense::Le => gap.max(0.0),
            Sense::Ge => (-gap).max(0.0),
        }
    }

    /// Signed slack of an inequality, positive when strictly satisfied.
    pub fn margin(&self, z: &DMatrix<f64>) -> f64 {
        let gap = self.value(z) - self.rhs;
        match self.sense {
            Sense::Eq => -gap.abs(),
            Sense::Le => -gap,
            Sense::Ge => gap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedSdp {
    pub layout: LiftIndex,
    pub eq: Vec<LinearRow>,
    pub ineq: Vec<LinearRow>,
}

impl LiftedSdp {
    pub fn m(&self) -> usize {
        self.layout.m()
    }

    pub fn rows(&self) -> impl Iterator<Item = &LinearRow> {
        self.eq.iter().chain(&self.ineq)
    }

    pub fn count(&self, tag: RowTag) -> usize {
        self.rows().filter(|r| r.tag == tag).count()
    }

    pub fn max_eq_residual(&self, z: &DMatrix<f64>) -> f64 {
        self.eq.iter().map(|r| r.residual(z).abs()).fold(0.0, f64::max)
    }

    pub fn min_ineq_margin(&self, z: &DMatrix<f64>) -> f64 {
        self.ineq.iter().map(|r| r.margin(z)).fold(f64::INFINITY, f64::min)
    }

    /// Writes the rows in a plain sparse-triplet format:
    ///
    /// ```text
    /// m <m> d <d> j <j> scalars <s>
    /// row <k> <eq|le|ge> <rhs> <tag> <nnz>
    /// <i> <j> <value>        (upper triangle, nnz lines)
    /// ```
    ///
    /// Off-diagonal entries stand for both symmetric positions.
    pub fn to_triplets(&self) -> String {
        let l = &self.layout;
        let mut out = format!("m {} d {} j {} scalars {}\n", l.m(), l.d, l.j, l.n_scalars);
        for (k, row) in self.rows().enumerate() {
            let _ = writeln!(
                out,
                "row {k} {} {:e} {} {}",
                row.sense.symbol(),
                row.rhs,
                row.tag.name(),
                row.a.entries.len()
            );
            for &(i, j, v) in &row.a.entries {
                let _ = writeln!(out, "{i} {j} {v:e}");
            }
        }
        out
    }

    pub fn from_triplets(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Shape(format!("triplet format: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty input"))?.split_whitespace().collect();
        let field = |name: &str, k: usize| -> Result<usize> {
            if header.get(k) != Some(&name) {
                return Err(bad("malformed header"));
            }
            header.get(k + 1).and_then(|v| v.parse().ok()).ok_or_else(|| bad("malformed header"))
        };
        let (m, d, j, s) = (field("m", 0)?, field("d", 2)?, field("j", 4)?, field("scalars", 6)?);
        let layout = LiftIndex::new(d, j, s);
        if layout.m() != m {
            return Err(bad("inconsistent layout"));
        }
        let mut sdp = LiftedSdp {
            layout,
            eq: Vec::new(),
            ineq: Vec::new(),
        };
        while let Some(line) = lines.next() {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 || f[0] != "row" {
                return Err(bad("expected a row header"));
            }
            let sense = match f[2] {
                "eq" => Sense::Eq,
                "le" => Sense::Le,
                "ge" => Sense::Ge,
                _ => return Err(bad("unknown sense")),
            };
            let rhs: f64 = f[3].parse().map_err(|_| bad("bad rhs"))?;
            let tag = RowTag::parse(f[4]).ok_or_else(|| bad("unknown tag"))?;
            let nnz: usize = f[5].parse().map_err(|_| bad("bad nnz"))?;
            let mut entries = Vec::with_capacity(nnz);
            for _ in 0..nnz {
                let e: Vec<&str> = lines.next().ok_or_else(|| bad("truncated row"))?.split_whitespace().collect();
                if e.len() != 3 {
                    return Err(bad("bad entry"));
                }
                let (i, jj): (usize, usize) = (
                    e[0].parse().map_err(|_| bad("bad index"))?,
                    e[1].parse().map_err(|_| bad("bad index"))?,
                );
                if i > jj || jj >= m {
                    return Err(bad("entry outside the upper triangle"));
                }
                entries.push((i, jj, e[2].parse().map_err(|_| bad("bad value"))?));
            }
            let row = LinearRow {
                a: SymSparse { entries },
                rhs,
                sense,
                tag,
            };
            if sense == Sense::Eq {
                sdp.eq.push(row);
            } else {
                sdp.ineq.push(row);
            }
        }
        Ok(sdp)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LiftOptions {
    /// Also force off-diagonal `ΩᵀΩ` blocks to be multiples of `I_d`.
    pub scalar_cross_blocks: bool,
}

fn lift_row(c: &QuadraticConstraint, l: &LiftIndex) -> LinearRow {
    let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut add = |a: usize, b: usize, v: f64| {
        *map.entry((a.min(b), a.max(b))).or_default() += v;
    };
    for &(i, k, g) in &c.gram {
        if i == k {
            add(l.point(i), l.point(i), g);
        } else {
            add(l.point(i), l.point(k), 0.5 * g);
        }
    }
    for &(s, i, cc, h) in &c.bilinear {
        add(l.point(i), l.scalar(s, cc), 0.5 * h);
    }
    for &(i, cc, a) in &c.linear_point {
        add(l.point(i), l.identity(cc), 0.5 * a);
    }
    let d = l.d as f64;
    for &(s, e) in &c.linear_scalar {
        for cc in 0..l.d {
            add(l.scalar(s, cc), l.identity(cc), 0.5 * e / d);
        }
    }
    LinearRow {
        a: SymSparse::from_map(map),
        rhs: c.rhs,
        sense: c.sense,
        tag: RowTag::Model(c.tag),
    }
}

fn entry_row(entries: &[(usize, usize, f64)], rhs: f64, tag: RowTag) -> LinearRow {
    let mut map = BTreeMap::new();
    for &(a, b, v) in entries {
        let (i, j) = (a.min(b), a.max(b));
        // A_ij = A_ji = v/2 picks out v·Z_ij for off-diagonal entries
        let w = if i == j { v } else { 0.5 * v };
        *map.entry((i, j)).or_default() += w;
    }
    LinearRow {
        a: SymSparse::from_map(map),
        rhs,
        sense: Sense::Eq,
        tag,
    }
}

/// Rows forcing the block with entries `Z[a(c), b(c')]` to be a multiple of `I_d`.
fn scalar_block(
    l: &LiftIndex,
    a: impl Fn(usize) -> usize,
    b: impl Fn(usize) -> usize,
    symmetric: bool,
    tag: RowTag,
    out: &mut Vec<LinearRow>,
) {
    for c in 0..l.d {
        for c2 in 0..l.d {
            if c != c2 && (!symmetric || c < c2) {
                out.push(entry_row(&[(a(c), b(c2), 1.0)], 0.0, tag));
            }
        }
    }
    for c in 1..l.d {
        out.push(entry_row(&[(a(c), b(c), 1.0), (a(0), b(0), -1.0)], 0.0, tag));
    }
}

pub fn assemble(problem: &DgProblem, opts: &LiftOptions) -> LiftedSdp {
    let l = LiftIndex::of(problem);
    let mut eq: Vec<LinearRow> = problem.eq.iter().map(|c| lift_row(c, &l)).collect();
    let ineq: Vec<LinearRow> = problem.ineq.iter().map(|c| lift_row(c, &l)).collect();

    for c in 0..l.d {
        for c2 in c..l.d {
            let target = if c == c2 { 1.0 } else { 0.0 };
            eq.push(entry_row(&[(l.identity(c), l.identity(c2), 1.0)], target, RowTag::IdentityBlock));
        }
    }
    for s in 0..l.n_scalars {
        scalar_block(&l, |c| l.scalar(s, c), |c| l.identity(c), false, RowTag::ScalarIdentity, &mut eq);
    }
    for s in 0..l.n_scalars {
        scalar_block(&l, |c| l.scalar(s, c), |c| l.scalar(s, c), true, RowTag::ScalarGram, &mut eq);
    }
    if opts.scalar_cross_blocks {
        for s in 0..l.n_scalars {
            for t in s + 1..l.n_scalars {
                scalar_block(&l, |c| l.scalar(s, c), |c| l.scalar(t, c), false, RowTag::ScalarCross, &mut eq);
            }
        }
    }
    LiftedSdp { layout: l, eq, ineq }
}

/// `M = [X Ω I_d]`, the rank-`d` factor of `Z`.
pub fn lift_factor(points: &DMatrix<f64>, scalars: &[f64], layout: &LiftIndex) -> Result<DMatrix<f64>> {
    let d = layout.d;
    if points.nrows() != d || points.ncols() != layout.j || scalars.len() != layout.n_scalars {
        return Err(Error::Shape(format!(
            "lift expects {}x{} points and {} scalars",
            d, layout.j, layout.n_scalars
        )));
    }
    let mut factor = DMatrix::zeros(d, layout.m());
    factor.columns_mut(0, layout.j).copy_from(points);
    for (s, w) in scalars.iter().enumerate() {
        for c in 0..d {
            factor[(c, layout.scalar(s, c))] = *w;
        }
    }
    for c in 0..d {
        factor[(c, layout.identity(c))] = 1.0;
    }
    Ok(factor)
}

pub fn lift(points: &DMatrix<f64>, scalars: &[f64], layout: &LiftIndex) -> Result<DMatrix<f64>> {
    let f = lift_factor(points, scalars, layout)?;
    Ok(f.transpose() * f)
}

/// Eigenvalues of a symmetric matrix in descending order.
pub fn eigenvalues_desc(z: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(z.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Identity-block deviation above which extraction is flagged unreliable.
pub const IDENTITY_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub points: DMatrix<f64>,
    pub scalars: Vec<f64>,
    /// `(d+1)`-th largest eigenvalue of `Z`.
    pub lambda_next: f64,
    /// Max deviation of the bottom-right block from `I_d`.
    pub identity_defect: f64,
    pub warning: Option<String>,
}

impl Extraction {
    pub fn reliable(&self) -> bool {
        self.warning.is_none()
    }
}

/// Reads `X` and `ω` from the identity-block rows of `Z`.
pub fn extract(z: &DMatrix<f64>, layout: &LiftIndex) -> Result<Extraction> {
    let m = layout.m();
    if z.nrows() != m || z.ncols() != m {
        return Err(Error::Shape(format!("expected a {m}x{m} matrix")));
    }
    let d = layout.d;
    let mut points = DMatrix::zeros(d, layout.j);
    for c in 0..d {
        for i in 0..layout.j {
            points[(c, i)] = z[(layout.identity(c), i)];
        }
    }
    let scalars = (0..layout.n_scalars)
        .map(|s| (0..d).map(|c| z[(layout.identity(c), layout.scalar(s, c))]).sum::<f64>() / d as f64)
        .collect();
    let mut identity_defect = 0.0f64;
    for c in 0..d {
        for c2 in 0..d {
            let target = if c == c2 { 1.0 } else { 0.0 };
            identity_defect = identity_defect.max((z[(layout.identity(c), layout.identity(c2))] - target).abs());
        }
    }
    let lambda_next = eigenvalues_desc(z).get(d).copied().unwrap_or(0.0);
    let warning = (identity_defect > IDENTITY_TOLERANCE)
        .then(|| format!("identity block deviates from I_d by {identity_defect:.3e}; extraction unreliable"));
    Ok(Extraction {
        points,
        scalars,
        lambda_next,
        identity_defect,
        warning,
    })
}

/// `tr(A_k Z)` for every row, equalities first.
pub fn row_values(sdp: &LiftedSdp, z: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(sdp.eq.len() + sdp.ineq.len(), sdp.rows().map(|r| r.value(z)))
}
