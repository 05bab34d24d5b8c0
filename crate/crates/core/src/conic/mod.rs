//! Semidefinite programs `min tr(CZ)` over the lifted constraint rows and
//! `Z ⪰ 0`, behind a backend interface, plus the ADMM backend.

mod admm;
mod psd;

pub use admm::{AdmmBackend, AdmmSolver};
pub use psd::{project_psd, smallest_eigs, sym_eigen};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::lift::LiftedSdp;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Relative primal tolerance on equality residuals and inequality violations.
    pub eps_primal: f64,
    /// Relative dual tolerance.
    pub eps_dual: f64,
    pub max_inner_iterations: usize,
    /// Over-relaxation parameter in `(0, 2)`.
    pub alpha: f64,
    /// Initial penalty parameter.
    pub rho: f64,
    /// Rescale the penalty to balance primal and dual residuals.
    pub adaptive_rho: bool,
    /// Use a supplied warm start as the initial cone iterate.
    pub accept_warm_start: bool,
    /// Also reuse the dual iterate and penalty carried by a warm start.
    pub warm_dual: bool,
    /// Record `(iteration, primal, dual)` every this many iterations; 0 disables.
    pub log_interval: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps_primal: 1e-8,
            eps_dual: 1e-8,
            max_inner_iterations: 50_000,
            alpha: 1.6,
            rho: 1.0,
            adaptive_rho: true,
            accept_warm_start: true,
            warm_dual: true,
            log_interval: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_primal > 0.0 && self.eps_dual > 0.0) {
            return Err(Error::Domain("solver tolerances must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::Domain("over-relaxation must lie in (0, 2)".into()));
        }
        if !(self.rho > 0.0) || self.max_inner_iterations == 0 {
            return Err(Error::Domain("penalty and iteration limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    PrimalInfeasibleLikely,
    NumericalFailure,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::PrimalInfeasibleLikely => "primal_infeasible_likely",
            SolveStatus::NumericalFailure => "numerical_failure",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveInfo {
    pub status: SolveStatus,
    /// `max(‖𝒜(Z) − a‖ / (1 + ‖a‖), ‖viol(Z)‖ / (1 + ‖b‖))`.
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Relative gap between primal and dual objectives.
    pub duality_gap: f64,
    pub objective: f64,
    pub iterations: usize,
    /// Seconds.
    pub wall_time: f64,
}

/// Scaled dual iterate and penalty, reusable as a warm start.
#[derive(Clone, Debug, PartialEq)]
pub struct DualState {
    pub u: DVector<f64>,
    pub rho: f64,
}

#[derive(Clone, Debug, Default)]
pub struct WarmStart {
    pub z: Option<DMatrix<f64>>,
    pub dual: Option<DualState>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub primal: f64,
    pub dual: f64,
}

impl IterationLog {
    pub fn csv_line(&self) -> String {
        format!("{},{:e},{:e}", self.iteration, self.primal, self.dual)
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// Symmetric PSD, `m × m`.
    pub z: DMatrix<f64>,
    pub info: SolveInfo,
    pub dual: DualState,
    pub log: Vec<IterationLog>,
}

/// A problem with its constraint data factorized, solvable for many costs.
pub trait PreparedSdp: Send {
    fn solve(&self, cost: &DMatrix<f64>, warm: Option<&WarmStart>, opts: &SolverOptions) -> Result<SdpSolution>;
}

pub trait SdpBackend: Sync {
    fn name(&self) -> &'static str;
    fn prepare(&self, sdp: &LiftedSdp) -> Result<Box<dyn PreparedSdp>>;
}

/// One-shot solve with the ADMM backend.
pub fn solve(
    sdp: &LiftedSdp,
    cost: &DMatrix<f64>,
    warm: Option<&WarmStart>,
    opts: &SolverOptions,
) -> Result<SdpSolution> {
    AdmmSolver::new(sdp)?.solve(cost, warm, opts)
}
