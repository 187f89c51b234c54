//! Independent oracles for the kernels, the LP solver and region nesting.

mod gauss;
mod lpcheck;
mod oracle;

use thiserror::Error;

use crate::constraints::ConstraintError;
use crate::gkernels::KernelError;
use crate::model::ModelError;

pub use gauss::{cond_mi_logdet, mi_logdet, GaussBuilder, GaussSystem, Lin};
pub use lpcheck::{check_subset, lp_equivalence_check, vertex_enum_max, LpCheckReport};
pub use oracle::{
    degraded_bc_check, degraded_bc_grid, degraded_bc_residuals, kernel_oracle_check, reduction_check, OracleReport,
    ReductionReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidateError {
    #[error("covariance is {rows}x{cols} but there are {labels} labels")]
    Shape { labels: usize, rows: usize, cols: usize },
    #[error("duplicate label {0}")]
    DuplicateLabel(String),
    #[error("unknown label {0}")]
    UnknownLabel(String),
    #[error("covariance is not symmetric")]
    NotSymmetric,
    #[error("covariance has eigenvalue {0:e} below -1e-10")]
    NotPsd(f64),
    #[error("variable sets must be nonempty")]
    EmptySet,
    #[error("variable sets overlap")]
    Overlap,
    #[error("conditioning set determines the target")]
    InfiniteConditioning,
    #[error("at least one draw is required")]
    NoDraws,
    #[error("degraded check needs P_r > 0, h_r1 >= h_r2 > 0 and 0 < beta1 < 1")]
    DegradedPrecondition,
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}
