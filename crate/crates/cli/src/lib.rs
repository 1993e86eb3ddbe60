//! Command implementations behind the `tubqi` binary.

pub mod certificate;
pub mod commands;
pub mod witness;

pub use certificate::{Certificate, Verified};
pub use commands::{DecideFlags, Loaded, Outcome};
pub use witness::{witness_ball, BallReport};
