//! Operator-splitting solver. The decision vector `x = (svec Z, s)` is split
//! into an affine copy (all rows as equalities with nonnegative slacks `s`)
//! and a cone copy in `S_+ × R_+^p`; the two are reconciled by scaled dual
//! updates with over-relaxation.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::SQRT_2;
use std::time::Instant;

use super::psd::{clamp_reconstruct, sym_eigen};
use super::{DualState, IterationLog, PreparedSdp, SdpBackend, SdpSolution, SolveInfo, SolveStatus, SolverOptions, WarmStart};
use crate::error::{Error, Result};
use crate::lift::{LiftedSdp, LinearRow};
use crate::model::Sense;

const PINV_REL_TOL: f64 = 1e-10;
const INCONSISTENCY_TOL: f64 = 1e-9;
const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const RHO_INTERVAL: usize = 25;
const RHO_RATIO: f64 = 10.0;
const INFEASIBILITY_WINDOW: usize = 500;

fn svec_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

fn svec(z: &DMatrix<f64>) -> DVector<f64> {
    let m = z.nrows();
    let mut out = DVector::zeros(m * (m + 1) / 2);
    for j in 0..m {
        for i in 0..=j {
            let v = if i == j { z[(i, i)] } else { SQRT_2 * 0.5 * (z[(i, j)] + z[(j, i)]) };
            out[svec_index(i, j)] = v;
        }
    }
    out
}

fn smat(v: &[f64], m: usize) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(m, m);
    for j in 0..m {
        for i in 0..=j {
            let x = v[svec_index(i, j)];
            if i == j {
                z[(i, i)] = x;
            } else {
                z[(i, j)] = x / SQRT_2;
                z[(j, i)] = x / SQRT_2;
            }
        }
    }
    z
}

/// Compressed sparse rows over `svec` coordinates (and slacks).
#[derive(Clone, Debug, Default)]
struct Csr {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>) {
        if self.ptr.is_empty() {
            self.ptr.push(0);
        }
        for (i, v) in entries {
            self.idx.push(i);
            self.val.push(v);
        }
        self.ptr.push(self.idx.len());
    }

    fn rows(&self) -> usize {
        self.ptr.len().saturating_sub(1)
    }

    fn row(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.ptr[k]..self.ptr[k + 1];
        self.idx[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    fn row_dot(&self, k: usize, x: &[f64]) -> f64 {
        self.row(k).map(|(i, v)| v * x[i]).sum()
    }

    fn scale_row(&mut self, k: usize, s: f64) {
        for v in &mut self.val[self.ptr[k]..self.ptr[k + 1]] {
            *v *= s;
        }
    }

    fn row_norm(&self, k: usize) -> f64 {
        self.row(k).map(|(_, v)| v * v).sum::<f64>().sqrt()
    }
}

fn svec_row(row: &LinearRow, sign: f64) -> Vec<(usize, f64)> {
    row.a
        .entries
        .iter()
        .map(|&(i, j, v)| {
            let coef = if i == j { v } else { SQRT_2 * v };
            (svec_index(i, j), sign * coef)
        })
        .collect()
}

/// Backend factory for [`AdmmSolver`].
#[derive(Clone, Copy, Debug, Default)]
pub struct AdmmBackend;

impl SdpBackend for AdmmBackend {
    fn name(&self) -> &'static str {
        "admm"
    }

    fn prepare(&self, sdp: &LiftedSdp) -> Result<Box<dyn PreparedSdp>> {
        Ok(Box::new(AdmmSolver::new(sdp)?))
    }
}

/// ADMM solver with the affine projection factorized once per constraint set.
#[derive(Clone, Debug)]
pub struct AdmmSolver {
    m: usize,
    nz: usize,
    n_slack: usize,
    /// Normalized affine rows over `(svec Z, s)`.
    g: Csr,
    rhs: DVector<f64>,
    /// `(G Gᵀ)⁺`.
    h_pinv: DMatrix<f64>,
    /// Relative distance of `rhs` from the range of `G`.
    inconsistency: f64,
    /// Original-unit equality rows and inequality rows in `≤` form.
    eq: Csr,
    eq_rhs: Vec<f64>,
    le: Csr,
    le_rhs: Vec<f64>,
}

impl AdmmSolver {
    pub fn new(sdp: &LiftedSdp) -> Result<Self> {
        let m = sdp.m();
        if let Some(k) = sdp.rows().filter_map(|r| r.a.max_index()).find(|&k| k >= m) {
            return Err(Error::Shape(format!("row index {k} outside a {m}x{m} variable")));
        }
        let nz = m * (m + 1) / 2;
        let n_slack = sdp.ineq.len();
        let mut eq = Csr::default();
        let mut eq_rhs = Vec::new();
        for row in &sdp.eq {
            eq.push_row(svec_row(row, 1.0));
            eq_rhs.push(row.rhs);
        }
        let mut le = Csr::default();
        let mut le_rhs = Vec::new();
        for row in &sdp.ineq {
            let sign = if row.sense == Sense::Ge { -1.0 } else { 1.0 };
            le.push_row(svec_row(row, sign));
            le_rhs.push(sign * row.rhs);
        }

        let mut g = Csr::default();
        let mut rhs = Vec::new();
        for k in 0..eq.rows() {
            g.push_row(eq.row(k));
            rhs.push(eq_rhs[k]);
        }
        for k in 0..le.rows() {
            g.push_row(le.row(k).chain(std::iter::once((nz + k, 1.0))));
            rhs.push(le_rhs[k]);
        }
        let r = g.rows();
        for k in 0..r {
            let norm = g.row_norm(k);
            if norm > 0.0 {
                g.scale_row(k, 1.0 / norm);
                rhs[k] /= norm;
            }
        }
        let rhs = DVector::from_vec(rhs);

        let n = nz + n_slack;
        let mut dense = DMatrix::<f64>::zeros(r, n);
        for k in 0..r {
            for (i, v) in g.row(k) {
                dense[(k, i)] += v;
            }
        }
        let h = &dense * dense.transpose();
        let (values, vectors) = sym_eigen(&h)?;
        let cutoff = PINV_REL_TOL * values.iter().fold(1.0f64, |a, v| a.max(*v));
        let mut h_pinv = DMatrix::zeros(r, r);
        for (k, lam) in values.iter().enumerate() {
            if *lam > cutoff {
                let u = vectors.column(k);
                h_pinv += (&u * u.transpose()) / *lam;
            }
        }
        let projected = &h * (&h_pinv * &rhs);
        let inconsistency = (&rhs - projected).norm() / (1.0 + rhs.norm());
        Ok(Self {
            m,
            nz,
            n_slack,
            g,
            rhs,
            h_pinv,
            inconsistency,
            eq,
            eq_rhs,
            le,
            le_rhs,
        })
    }

    pub fn dimension(&self) -> usize {
        self.m
    }

    /// `x = v - Gᵀ μ` with `μ = H⁺ (G v - g)`; returns `μ`.
    fn project_affine(&self, v: &mut [f64], gv: &mut DVector<f64>) -> DVector<f64> {
        for k in 0..self.g.rows() {
            gv[k] = self.g.row_dot(k, v) - self.rhs[k];
        }
        let mu = &self.h_pinv * &*gv;
        for (k, coef) in mu.iter().enumerate() {
            for (i, a) in self.g.row(k) {
                v[i] -= a * coef;
            }
        }
        mu
    }

    /// Projects the matrix block onto `S_+` and the slacks onto `R_+`.
    fn project_cone(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        let z = smat(&w[..self.nz], self.m);
        let (values, vectors) = sym_eigen(&z)?;
        let p = clamp_reconstruct(&values, &vectors);
        out[..self.nz].copy_from_slice(svec(&p).as_slice());
        for k in 0..self.n_slack {
            out[self.nz + k] = w[self.nz + k].max(0.0);
        }
        Ok(())
    }

    fn primal_residual(&self, z: &[f64]) -> f64 {
        let (mut eq_sq, mut a_sq) = (0.0, 0.0);
        for k in 0..self.eq.rows() {
            eq_sq += (self.eq.row_dot(k, z) - self.eq_rhs[k]).powi(2);
            a_sq += self.eq_rhs[k].powi(2);
        }
        let (mut in_sq, mut b_sq) = (0.0, 0.0);
        for k in 0..self.le.rows() {
            in_sq += (self.le.row_dot(k, z) - self.le_rhs[k]).max(0.0).powi(2);
            b_sq += self.le_rhs[k].powi(2);
        }
        (eq_sq.sqrt() / (1.0 + a_sq.sqrt())).max(in_sq.sqrt() / (1.0 + b_sq.sqrt()))
    }

    fn initial_point(&self, warm: Option<&WarmStart>, opts: &SolverOptions) -> Result<(DVector<f64>, DVector<f64>, f64)> {
        let n = self.nz + self.n_slack;
        let mut y = DVector::zeros(n);
        let mut u = DVector::zeros(n);
        let mut rho = opts.rho;
        let Some(warm) = warm.filter(|_| opts.accept_warm_start) else {
            return Ok((y, u, rho));
        };
        if let Some(z0) = &warm.z {
            if z0.nrows() != self.m || z0.ncols() != self.m {
                return Err(Error::Shape(format!("warm start must be {0}x{0}", self.m)));
            }
            let sv = svec(z0);
            y.rows_mut(0, self.nz).copy_from(&sv);
            for k in 0..self.n_slack {
                y[self.nz + k] = (self.le_rhs[k] - self.le.row_dot(k, sv.as_slice())).max(0.0);
            }
        }
        if let Some(dual) = warm.dual.as_ref().filter(|_| opts.warm_dual) {
            if dual.u.len() == n && dual.rho > 0.0 {
                u.copy_from(&dual.u);
                rho = dual.rho;
            }
        }
        Ok((y, u, rho))
    }
}

impl PreparedSdp for AdmmSolver {
    fn solve(&self, cost: &DMatrix<f64>, warm: Option<&WarmStart>, opts: &SolverOptions) -> Result<SdpSolution> {
        opts.validate()?;
        let start = Instant::now();
        let m = self.m;
        if cost.nrows() != m || cost.ncols() != m {
            return Err(Error::Shape(format!("cost must be {m}x{m}")));
        }
        let nz = self.nz;
        let n = nz + self.n_slack;
        let mut c = DVector::zeros(n);
        c.rows_mut(0, nz).copy_from(&svec(cost));
        let c_norm = c.norm();

        let (mut y, mut u, mut rho) = self.initial_point(warm, opts)?;
        let finish = |z: &DVector<f64>, u: DVector<f64>, rho: f64, info: SolveInfo, log: Vec<IterationLog>| SdpSolution {
            z: smat(&z.as_slice()[..nz], m),
            info,
            dual: DualState { u, rho },
            log,
        };

        if self.inconsistency > INCONSISTENCY_TOL {
            let info = SolveInfo {
                status: SolveStatus::PrimalInfeasibleLikely,
                primal_residual: self.primal_residual(&y.as_slice()[..nz]),
                dual_residual: f64::NAN,
                duality_gap: f64::NAN,
                objective: c.dot(&y),
                iterations: 0,
                wall_time: start.elapsed().as_secs_f64(),
            };
            return Ok(finish(&y, u, rho, info, Vec::new()));
        }

        let mut x = DVector::zeros(n);
        let mut w = DVector::zeros(n);
        let mut y_next = DVector::zeros(n);
        let mut gv = DVector::zeros(self.g.rows());
        let mut log = Vec::new();
        let mut best: Option<(f64, DVector<f64>, SolveInfo)> = None;
        let mut window: Option<(usize, DVector<f64>, Option<DVector<f64>>)> = None;
        let mut mu = DVector::zeros(self.g.rows());
        let mut status = SolveStatus::MaxIterations;
        let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);
        let mut iterations = 0;

        for k in 1..=opts.max_inner_iterations {
            iterations = k;
            for i in 0..n {
                x[i] = y[i] - u[i] - c[i] / rho;
            }
            mu = self.project_affine(x.as_mut_slice(), &mut gv);
            for i in 0..n {
                w[i] = opts.alpha * x[i] + (1.0 - opts.alpha) * y[i] + u[i];
            }
            if self.project_cone(w.as_slice(), y_next.as_mut_slice()).is_err() {
                status = SolveStatus::NumericalFailure;
                break;
            }
            let mut dy_sq = 0.0;
            for i in 0..n {
                u[i] = w[i] - y_next[i];
                dy_sq += (y_next[i] - y[i]).powi(2);
            }
            std::mem::swap(&mut y, &mut y_next);
            if !u.iter().all(|v| v.is_finite()) {
                status = SolveStatus::NumericalFailure;
                break;
            }

            primal = self.primal_residual(&y.as_slice()[..nz]);
            dual = rho * dy_sq.sqrt() / (1.0 + c_norm);
            if opts.log_interval > 0 && k % opts.log_interval == 0 {
                log.push(IterationLog {
                    iteration: k,
                    primal,
                    dual,
                });
            }
            if primal <= opts.eps_primal && dual <= opts.eps_dual {
                status = SolveStatus::Optimal;
                break;
            }
            let score = (primal / opts.eps_primal).max(dual / opts.eps_dual);
            if best.as_ref().is_none_or(|b| score < b.0) && k % 10 == 0 {
                let info = SolveInfo {
                    status: SolveStatus::MaxIterations,
                    primal_residual: primal,
                    dual_residual: dual,
                    duality_gap: f64::NAN,
                    objective: c.dot(&y),
                    iterations: k,
                    wall_time: 0.0,
                };
                best = Some((score, y.clone(), info));
            }

            if opts.adaptive_rho && k % RHO_INTERVAL == 0 {
                let r = primal / opts.eps_primal;
                let s = dual / opts.eps_dual;
                let scale = if r > RHO_RATIO * s {
                    2.0
                } else if s > RHO_RATIO * r {
                    0.5
                } else {
                    1.0
                };
                let next = (rho * scale).clamp(RHO_MIN, RHO_MAX);
                if next != rho {
                    u *= rho / next;
                    rho = next;
                    window = None;
                }
            }

            // a persistent constant drift of the dual iterate certifies infeasibility
            if k % INFEASIBILITY_WINDOW == 0 {
                window = match window.take() {
                    None => Some((k, u.clone(), None)),
                    Some((_, u_prev, drift_prev)) => {
                        let drift = (&u - &u_prev) / INFEASIBILITY_WINDOW as f64;
                        let steady = drift_prev
                            .as_ref()
                            .is_some_and(|p| (&drift - p).norm() <= 1e-3 * drift.norm());
                        if steady && drift.norm() > 1e-9 && primal > 1e3 * opts.eps_primal {
                            status = SolveStatus::PrimalInfeasibleLikely;
                            break;
                        }
                        Some((k, u.clone(), Some(drift)))
                    }
                };
            }
        }

        let objective = c.dot(&y);
        let dual_objective = -rho * self.rhs.dot(&mu);
        let gap = (objective - dual_objective).abs() / (1.0 + objective.abs() + dual_objective.abs());
        let wall_time = start.elapsed().as_secs_f64();
        if status == SolveStatus::MaxIterations {
            if let Some((_, y_best, mut info)) = best.filter(|b| b.0 < (primal / opts.eps_primal).max(dual / opts.eps_dual)) {
                info.duality_gap = gap;
                info.iterations = iterations;
                info.wall_time = wall_time;
                return Ok(finish(&y_best, u, rho, info, log));
            }
        }
        let info = SolveInfo {
            status,
            primal_residual: primal,
            dual_residual: dual,
            duality_gap: gap,
            objective,
            iterations,
            wall_time,
        };
        Ok(finish(&y, u, rho, info, log))
    }
}
