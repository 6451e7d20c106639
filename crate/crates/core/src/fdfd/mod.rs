//! Frequency-domain eigenmode solver for the scalar out-of-plane field.
//!
//! The discrete pencil is `A x = lambda B x` with `lambda = (omega / c)^2`,
//! where `A` discretizes `-d/dx (s_y/s_x d/dx) - d/dy (s_x/s_y d/dy)` on the
//! 5-point stencil and `B = eps s_x s_y` is diagonal. Stretch factors
//! `s = 1 + i sigma / omega_ref` are frozen at a reference frequency, which
//! keeps the pencil linear in `lambda`. Time dependence is `exp(-i omega t)`,
//! so decaying modes have `Im(omega) < 0`.

mod krylov;
mod operator;
mod pml;
mod resonance;

pub use krylov::{solve_modes, KrylovSettings};
pub use operator::{assemble, eigen_residual, HelmholtzOperator};
pub use pml::PmlParams;
pub use resonance::{find_resonances, pml_energy_fraction, SolverSettings};

use num_complex::Complex64;
use thiserror::Error;

use crate::banded::BandedError;
use crate::dense::SchurError;

#[derive(Debug, Error, PartialEq)]
pub enum FdfdError {
    #[error("mass matrix has a zero diagonal entry at dof {0}")]
    Singularity(usize),
    #[error("assembly failed: {0}")]
    Assembly(String),
    #[error("invalid PML parameters: {0}")]
    Pml(String),
    #[error("shift {shift_hz:.6e} Hz is not resolvable: omega dx / c = {ratio:.4} exceeds 2 pi / ppw = {limit:.4}")]
    Unresolved { shift_hz: f64, ratio: f64, limit: f64 },
    #[error("shifted matrix is numerically singular ({0}); perturb the shift")]
    Factorization(BandedError),
    #[error("eigensolver did not converge: {restarts} restarts, {converged}/{wanted} pairs below tolerance, worst residual {worst:.3e}")]
    Convergence {
        restarts: usize,
        converged: usize,
        wanted: usize,
        worst: f64,
    },
    #[error("projected eigenproblem failed: {0}")]
    Projection(#[from] SchurError),
    #[error("mode layout {got:?} does not match operator layout {expected:?}")]
    Dimension {
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("no modes requested")]
    NoModes,
}

/// A resonance: complex angular frequency and its field on the node lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenMode {
    /// Complex angular frequency (rad/s), `Im <= 0` for decaying modes.
    pub omega: Complex64,
    /// Out-of-plane field, row-major `(nx, ny)`; zero on PEC nodes.
    /// Scaled so `max |field| = 1` with the maximum real and positive.
    pub field: Vec<Complex64>,
    pub residual: f64,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub origin: (f64, f64),
}

impl EigenMode {
    pub fn freq_hz(&self) -> f64 {
        crate::consts::ordinary(self.omega.re)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.field[j * self.nx + i]
    }

    /// Rescales so the largest-magnitude sample is exactly `1 + 0i`.
    pub(crate) fn normalize(&mut self) {
        let (mut best, mut arg) = (0.0, 0);
        for (k, v) in self.field.iter().enumerate() {
            let a = v.norm();
            if a > best {
                best = a;
                arg = k;
            }
        }
        if best == 0.0 {
            return;
        }
        let scale = self.field[arg].inv();
        self.field.iter_mut().for_each(|v| *v *= scale);
        self.field[arg] = Complex64::new(1.0, 0.0);
    }
}
