//! Simulation, landscape analysis and optimization for a two-sensor
//! phototaxis vehicle whose sensor placement is under study.

pub mod analysis;
pub mod coopt;
pub mod landscape;
pub mod optimizers;
pub mod parallel;
pub mod rng;
pub mod trig;
pub mod vehicle;
