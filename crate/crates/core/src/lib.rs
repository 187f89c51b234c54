//! Gaussian rate regions of a half-duplex relay serving one base station
//! and two terminals in both directions.

pub mod constraints;
pub mod gkernels;
pub mod model;
pub mod region;
pub mod validate;
