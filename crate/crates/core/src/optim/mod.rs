//! The eight optimizers (parameter-shift or SPSA gradients with SGD, BFGS or
//! Adam updates, plus COBYLA and Nelder-Mead) and the budgeted run loop.
//!
//! Every run is charged in function evaluations. Under [`Accounting::Paper`]
//! an iteration costs `2m + 1` for parameter-shift optimizers (even when the
//! gradient is actually computed by the adjoint method), `3` for SPSA and
//! COBYLA and `1` for Nelder-Mead. [`Accounting::True`] charges what the
//! simulator actually evaluated.

mod config;
mod direct;
mod record;
mod run;
mod steps;

pub use config::{Accounting, OptimizerConfig, OptimizerKind};
pub use direct::{
    cobyla_minimize, nelder_mead_minimize, simplex_offsets, simplex_spread, CobylaParams, NelderMeadParams,
    TracePoint, Trajectory,
};
pub use record::{Iterate, RunFooter, RunHeader, RunRecord, ThresholdCount, THRESHOLD_RATIO};
pub use run::{run_optimizer, RunOptions};
pub use steps::{
    adam_step, bfgs_step, sgd_step, AdamParams, AdamState, BfgsState, BfgsStep, Schedule, CURVATURE_GUARD,
};
