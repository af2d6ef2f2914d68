//! Single-qubit quantum process tomography.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod document;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod metrics;
pub mod process_tomography;
pub mod projection;
pub mod simulator;
pub mod state;
pub mod state_tomography;

pub use error::{QptError, Result};
