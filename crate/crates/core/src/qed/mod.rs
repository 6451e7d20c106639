//! Dissipative Jaynes-Cummings model: one cavity mode, one two-level atom.
//!
//! Basis state `|n, s>` (photon number `n`, atom `s = 0` ground, `1`
//! excited) has index `2 n + s`. Density matrices are stored as dense
//! `D x D` matrices with `D = 2 (n_max + 1)`. Superoperators act on the
//! row-major vectorization `vec(rho)[i D + j] = rho[(i, j)]`.

mod evolve;
mod figures;
mod liouvillian;
mod ops;
mod steady;

pub use evolve::{evolve, evolve_observed, ObservableSeries};
pub use figures::{
    atomic_volume, cooperativity, coupling_from_mode, effective_nonlinearity, t2_decoherence,
    EffectiveNonlinearity,
};
pub use liouvillian::{lindblad_rhs, liouvillian};
pub use ops::{annihilation, basis_index, dynamics_hamiltonian, hamiltonian, lowering};
pub use steady::{
    blockade_point, blockade_spectrum, g2_zero, locate_dip, mean_photon_number, steady_state,
    SpectrumPoint,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QedError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("density matrix is {got} x {got}, expected {expected} x {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("step size underflow at t = {t:.6e} s (h = {h:.3e} s)")]
    StepFailure { t: f64, h: f64 },
    #[error("Liouvillian null space is not one-dimensional (pivot ratio {pivot_ratio:.3e})")]
    SingularLiouvillian { pivot_ratio: f64 },
    #[error("steady-state residual {0:.3e} exceeds tolerance")]
    Residual(f64),
    #[error("mean photon number {0:.3e} too small for a correlation estimate")]
    Vacuum(f64),
    #[error("envelope fit failed: {0}")]
    Fit(String),
    #[error("photon-number truncation did not converge up to n_max = {n_max}")]
    Truncation { n_max: usize },
}

/// Model parameters. Rates and frequencies in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QedParams {
    pub omega_a: f64,
    pub omega_sigma: f64,
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
    /// Coherent cavity drive amplitude; zero leaves the system undriven.
    pub drive: f64,
    /// Detuning `omega_a - omega_d` of cavity and atom from the drive.
    pub delta: f64,
    pub n_max: usize,
}

impl QedParams {
    pub fn validate(&self) -> Result<(), QedError> {
        let bad = |m: &str| Err(QedError::Parameter(m.to_string()));
        let all = [
            self.omega_a,
            self.omega_sigma,
            self.g,
            self.kappa,
            self.gamma,
            self.drive,
            self.delta,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("all rates must be finite");
        }
        if self.kappa < 0.0 || self.gamma < 0.0 {
            return bad("kappa and gamma must be non-negative");
        }
        if self.drive < 0.0 {
            return bad("drive amplitude must be non-negative");
        }
        if self.n_max < 2 {
            return bad("n_max must be at least 2");
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    pub fn is_driven(&self) -> bool {
        self.drive > 0.0
    }
}

/// Density matrix at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub rho: DMatrix<Complex64>,
    pub t: f64,
}

impl DensityState {
    pub fn n_max(&self) -> usize {
        self.rho.nrows() / 2 - 1
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// Pure state `|psi><psi|`, normalized.
    pub fn from_pure(psi: &[Complex64]) -> Result<Self, QedError> {
        let d = psi.len();
        if d < 6 || !d.is_multiple_of(2) {
            return Err(QedError::Parameter(
                "state vector length must be 2 (n_max + 1) with n_max >= 2".into(),
            ));
        }
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        if !(norm > 0.0) {
            return Err(QedError::Parameter("zero state vector".into()));
        }
        let rho = DMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj() / norm);
        Ok(Self { rho, t: 0.0 })
    }

    /// `|n, s>` with `excited` selecting the atomic state.
    pub fn fock(n: usize, excited: bool, n_max: usize) -> Result<Self, QedError> {
        if n > n_max {
            return Err(QedError::Parameter("photon number exceeds n_max".into()));
        }
        let mut psi = vec![Complex64::new(0.0, 0.0); 2 * (n_max + 1)];
        psi[basis_index(n, excited)] = Complex64::new(1.0, 0.0);
        Self::from_pure(&psi)
    }

    /// Truncated coherent cavity state with the atom in its ground state.
    pub fn coherent(alpha: Complex64, n_max: usize) -> Result<Self, QedError> {
        let mut psi = vec![Complex64::new(0.0, 0.0); 2 * (n_max + 1)];
        let mut amp = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 0..=n_max {
            psi[basis_index(n, false)] = amp;
            amp *= alpha / ((n + 1) as f64).sqrt();
        }
        Self::from_pure(&psi)
    }

    /// Truncated thermal cavity state with mean occupation `nbar`, atom in
    /// its ground state.
    pub fn thermal(nbar: f64, n_max: usize) -> Result<Self, QedError> {
        if !(nbar >= 0.0) {
            return Err(QedError::Parameter("nbar must be non-negative".into()));
        }
        let d = 2 * (n_max + 1);
        let ratio = nbar / (1.0 + nbar);
        let weights: Vec<f64> = (0..=n_max).map(|n| ratio.powi(n as i32)).collect();
        let total: f64 = weights.iter().sum();
        let mut rho = DMatrix::zeros(d, d);
        for (n, w) in weights.iter().enumerate() {
            let k = basis_index(n, false);
            rho[(k, k)] = Complex64::new(w / total, 0.0);
        }
        Ok(Self { rho, t: 0.0 })
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// `|<n, s| rho |n, s>|`.
    pub fn population(&self, n: usize, excited: bool) -> f64 {
        let k = basis_index(n, excited);
        self.rho[(k, k)].re
    }

    /// Photon-number distribution, traced over the atom.
    pub fn photon_distribution(&self) -> Vec<f64> {
        (0..=self.n_max())
            .map(|n| self.population(n, false) + self.population(n, true))
            .collect()
    }

    /// Largest deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &DensityState) -> Result<f64, QedError> {
        if self.dim() != other.dim() {
            return Err(QedError::Dimension {
                got: other.dim(),
                expected: self.dim(),
            });
        }
        let diff = &self.rho - &other.rho;
        let h = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(0.5 * h.symmetric_eigenvalues().iter().map(|v| v.abs()).sum::<f64>())
    }

    pub(crate) fn check_dim(&self, p: &QedParams) -> Result<(), QedError> {
        if self.rho.nrows() != p.dim() || self.rho.ncols() != p.dim() {
            return Err(QedError::Dimension {
                got: self.rho.nrows(),
                expected: p.dim(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
