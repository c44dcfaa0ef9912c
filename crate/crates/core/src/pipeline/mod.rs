//! End-to-end orchestration: embedding, attacks, blind and oracle-aligned
//! extraction, coded-channel sweeps, capacity grids and code generation.

mod config;
mod report;
mod sweep;
mod watermark;

pub use config::PipelineConfig;
pub use report::Report;
pub use sweep::{
    capacity_grid, codegen, frame_seed, run_sweep, write_capacity_csv, CapacityRow, SweepReport, SweepRow,
    CAPACITY_MAX_ITER, CAPACITY_TOL,
};
pub use watermark::{
    attack, embed, extract, frame_from_report, lattice_vertices, random_center, read_selection_csv,
    write_selection_csv, Attack, Embedded, ExtractMode, Extracted, WatermarkJob, LATTICE_TOLERANCE,
};
