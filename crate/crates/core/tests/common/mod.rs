//! Helpers shared by the integration test targets.
#![allow(dead_code)]

pub mod checks;
pub mod fixtures;
pub mod gradcheck;
pub mod oracles;
