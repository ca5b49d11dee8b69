//! Forward scattering simulator and metric-space laboratory.
//!
//! The crate solves the Lippmann-Schwinger equation for compactly supported
//! potentials on a voxel grid, expands the resulting scattering amplitudes in
//! a double spherical-harmonic basis, and measures those amplitude matrices
//! in weighted norms. On top of that sit packing and covering constructions:
//! exponentially large families of nearby potentials on one side, and small
//! nets of amplitude matrices on the other, together with CLI experiments
//! that exhibit the resulting instability of the inverse map at desk scale.

pub mod error;
pub mod vec3;

pub mod amplitude_space;
pub mod cheb;
pub mod experiments;
pub mod fft3;
pub mod forward_solver;
pub mod metric_nets;
pub mod pipeline;
pub mod potential_model;
pub mod sphere_basis;

pub use error::{Result, ScatError};
pub use vec3::Vec3;
