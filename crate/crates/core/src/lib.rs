//! Core of the Goldilocks scalar annotation technique: anchored continuous
//! scales, two-step range elicitation, and analysis of the resulting data.

pub mod analysis;
pub mod anchors;
pub mod cold_start;
pub mod exec;
pub mod model;
pub mod protocol;
pub mod simulation;
