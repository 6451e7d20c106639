//! Numerical workbench for winged Fabry-Perot cavities and the cavity-QED
//! systems built on them.
//!
//! The crate is organized along the physical pipeline:
//!
//! * [`geometry`] rasterizes a parameterized winged confocal cavity onto a
//!   uniform node lattice (permittivity, PEC mask, PML grading).
//! * [`fdfd`] assembles the scalar Helmholtz pencil with complex coordinate
//!   stretching and finds resonances near a target frequency by shift-invert
//!   Krylov-Schur iteration.
//! * [`modes`] reduces eigenmodes to quality factor, mode volume, mode orders
//!   and the field-maximum location.
//! * [`mirror`] evaluates quarter-wave dielectric stacks by characteristic
//!   matrices and maps mirror loss onto a cavity decay rate.
//! * [`qed`] simulates the dissipative Jaynes-Cummings model: Lindblad
//!   dynamics, steady states, photon statistics and cooperativity.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod consts;
pub mod dense;
pub mod fdfd;
pub mod geometry;
pub mod grid_file;
pub mod mirror;
pub mod modes;
pub mod qed;
pub mod sparse;

pub use num_complex::Complex64;
