//! Transition datasets, preprocessing, delta-state model training and
//! multi-step validation.

mod data;
mod model;
mod train;
mod validation;

pub use data::{
    augment_noise, compute_norm_stats, read_transitions_csv, slice_trajectories, write_transitions_csv, NormStats,
    Provenance, Trajectory, Transition, TransitionDataset, STD_FLOOR,
};
pub use model::{predict_next, rollout_open_loop, Dynamics, DynamicsModel, OracleModel, DIVERGENCE_LIMIT};
pub use train::{
    one_step_mse_raw, one_step_objective_raw, sample_batch_indices, train_dynamics, NoiseSpace, Split, TrainConfig,
    TrainReport,
};
pub use validation::h_step_validation;
