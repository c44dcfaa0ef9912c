//! The run-wise deletion channel, its memoryless symbol-channel equivalent,
//! and mesh attacks that report which vertices survived.

mod deletion;
mod simplify;
mod survival;

pub use deletion::{
    apply_deletion_channel, apply_deletion_channel_with, dmc_matrix, DeletionChannelSpec, DeletionOutcome, DmcModel,
};
pub use simplify::{simplify_mesh, Simplified};
pub use survival::{
    deletion_pattern, radius_for_fraction, region_delete, retain_vertices, DeletionPattern, SurvivalMap,
};
