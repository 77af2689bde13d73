//! Finite-dimensional laboratory for odd Chern characters, eta forms and
//! adiabatic determinants of suspended families of smoothing operators.

pub mod linalg;
pub mod opcore;
pub mod quad;
pub mod suspend;
pub mod chern;
pub mod eta;
pub mod adiabatic;
pub mod bundles;
pub mod fixtures;
pub mod suite;
