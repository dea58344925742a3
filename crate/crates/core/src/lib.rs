//! Simulation and verification toolkit for a communication-efficient nonlocal
//! measurement and the bipartite gate simulation built on it.

pub mod analysis;
pub mod cli;
pub mod linalg;
pub mod model;
pub mod protocols;
