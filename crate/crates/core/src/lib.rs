//! Bit-exact functional and cycle-approximate simulator of a
//! sparsity-aware, event-driven spiking CNN accelerator.
//!
//! The crate is organized the way the hardware is:
//!
//! - [`fxp`]: the Q3.29 datapath and its three-bit threshold comparator.
//! - [`model`]: topology, LIF parameters, weights and the design-time
//!   hardware configuration; [`manifest`] reads and writes them.
//! - [`codec`]: rate coding, PENC spike compression, population decoding.
//! - [`engine`]: event-driven convolution over output-channel-unrolled
//!   neural cores with OFM chunking, OR-gate pooling and dense layers.
//! - [`oracle`]: dense, sparsity-oblivious reference forward pass.
//! - [`perf`]: cycle and storage estimates from engine counters.
//! - [`partition`]: workload profiling and min-max core allocation.
//! - [`synth`]: random models and inputs for tests and calibration.

pub mod codec;
pub mod engine;
pub mod error;
pub mod fxp;
pub mod manifest;
pub mod model;
pub mod oracle;
pub mod partition;
pub mod perf;
pub mod synth;

pub use error::{Error, Result};
pub use fxp::Fx32;
