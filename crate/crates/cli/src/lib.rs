//! Library side of the `forge` binary: the review HTTP service and the
//! network clients used outside of replay mode.

pub mod commands;
pub mod live;
pub mod mock;
pub mod server;
