//! Phase-field solvers and the two model drivers.

mod dinkelbach;
mod driver;
mod ops;
mod rof;

pub use dinkelbach::{
    dinkelbach_h1, dinkelbach_tv_inner, operator_norm_bound, tv_phase_objective, InnerResult,
};
pub use driver::{
    effective_step, initial_phase, point_regularizer, run_ncash1, run_ncastv, run_pre_ncastv,
    similarity_graph, SegmentationResult, STABLE_STEP_FRACTION,
};
pub use ops::{laplacian_apply, project_orthogonal, threshold_labels};
pub use rof::{
    rof_denoise, rof_denoise_with, rof_dual_objective, rof_objective, RofOptions, RofSolution,
};
