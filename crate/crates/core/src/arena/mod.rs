//! A small MOBA-like arena: a square map with heroes, soldiers, towers,
//! neutral monsters and two bases; a scripted expert whose decisions depend
//! on at most a few units; dataset generation; scripted commands and
//! rollouts.

mod dataset;
mod dynamics;
mod expert;
mod rollout;
mod state;

pub use dataset::{
    expert_episode, generate_dataset, read_dataset, write_dataset, Dataset, DatasetHeader, DATASET_FORMAT,
    VALIDATION_FRACTION,
};
pub use dynamics::StepInfo;
pub use expert::{expert_action, DEFAULT_M_TRUE};
pub use rollout::{
    expert_frames, generate_commands, rollout, simulate, CommandRules, EpisodeResult, EpisodeStats,
};
pub use state::{
    cell_index, direction_vector, new_arena, quantize_bearing, ArenaConfig, ArenaState, Team, Unit, UnitKind,
    GLOBAL_FEATURES, UNIT_FEATURES,
};
