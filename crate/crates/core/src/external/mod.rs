//! Adapters for provers running outside this process.

pub mod relay;
pub mod stdio;
