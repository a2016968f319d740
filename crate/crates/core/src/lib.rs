//! Exact polyhedral and entropic tools for causal correlation scenarios with
//! relativistic (light-cone) causality constraints.

pub mod analyses;
pub mod entropy;
pub mod lightcone;
pub mod polytope;
pub mod scenario;
pub mod rational;

pub use rational::Q;
