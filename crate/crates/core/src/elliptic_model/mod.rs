//! Exactly solvable elliptic models: diagonal symbols on the torus, the
//! Dirichlet problem for `-u''` on an interval, cutoff experiments for
//! interior regularity and pointwise derivative bounds.

mod cp_check;
mod dirichlet;
mod local;
mod periodic;

use thiserror::Error;

use crate::spectral_model::SpectralError;

pub use cp_check::{cp_conclusion_check, hypothesis_verdict, CpConclusion};
pub use dirichlet::{
    solve_dirichlet_1d, Dirichlet1DProblem, DirichletSolution, GreenEvaluator, RhsProfile, Segment,
};
pub use local::{
    local_norm, local_regularity_experiment, periodized_norm, sampled_element, LocalNorm,
    LocalRegularityConfig, LocalRegularityReport, LocalRung, SmoothCutoff, ALIASING_THRESHOLD,
};
pub use periodic::{
    apriori_constant, solve_periodic, AprioriConstant, PeriodicEllipticOperator, PeriodicSolve,
};

#[derive(Debug, Error)]
pub enum EllipticError {
    #[error("operator order 2q needs q >= 1")]
    Order,
    #[error("ellipticity floor {found:e} is below the claimed {claimed:e}")]
    Floor { found: f64, claimed: f64 },
    #[error("{phi} fails the C^{p} criterion in dimension {n}")]
    HypothesisUnmet { phi: String, p: u32, n: usize },
    #[error("invalid cutoff: {0}")]
    Cutoff(String),
    #[error("invalid right-hand side: {0}")]
    Profile(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}
