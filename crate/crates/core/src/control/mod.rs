//! Rewards and random-shooting model predictive control over any [`Dynamics`](crate::dynamics::Dynamics).

mod path;
mod reward;
mod shooting;

pub use path::{
    closest_segment, named_path, path_to_segments, project_point, read_waypoints_csv, trajectory_reward,
    write_waypoints_csv, PathReward, PathSpec, Projection, Segment,
};
pub use reward::{ForwardReward, NavigateReward, Reward, UprightReward, ZeroReward};
pub use shooting::{
    evaluate_candidates, mpc_run, mpc_run_noisy, plan_seed, random_shooting, sample_candidates, write_episode_csv,
    ActionSequence, CandidateSampler, MpcConfig, MpcEpisode, ShootingResult,
};
