//! Library surface of the experiment driver: configuration schema, mode
//! implementations, CSV rendering, and the bounded deterministic parallel map.
//! The `calreg` binary is a thin wrapper over these.

pub mod config;
pub mod csvio;
pub mod modes;
pub mod parallel;
