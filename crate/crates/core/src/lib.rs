//! Watermarking of triangle meshes with sparse QIM on stable vertices,
//! protected against vertex deletion by runlength-modulated LDPC codes.
//!
//! The crate is organised bottom-up: [`mesh`] handles geometry and I/O,
//! [`stability`] ranks vertices, [`qim`] embeds bits, [`runlength`] and
//! [`ldpc`] provide the coding layers, [`channel`] models deletions and mesh
//! attacks, [`capacity`] evaluates the channel, and [`pipeline`] ties the
//! pieces together.

pub mod capacity;
pub mod channel;
pub mod error;
pub mod ldpc;
pub mod mesh;
pub mod pipeline;
pub mod qim;
pub mod runlength;
pub mod stability;
pub mod synth;

pub use error::{Error, Result};
pub use mesh::{Mesh, NormalizationFrame, SphericalCoord};
