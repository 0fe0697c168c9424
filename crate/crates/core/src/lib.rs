//! Simulation toolkit for the random quadratic form flow on the unit sphere
//! `dX = −P_X ∂Q X`, driven by a symmetrized matrix Brownian motion, together
//! with the scalar inner-product diffusion of coupled particles and the
//! statistics used to check them.

// NaN must fail the parameter checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod flows;
pub mod geometry;
pub mod integrators;
pub mod noise;
pub mod parallel;
pub mod zprocess;

pub use error::{Result, RqfError};
pub use geometry::{antipode, project_tangent, sphere_distance, SymmetricMatrix, TangentVector, UnitVector};
pub use noise::{generate_path, shift_path, symmetrize, IncrementSource, NoiseKey, NoisePath, NoiseStream, SymmetricIncrement};
