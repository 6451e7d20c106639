use num_complex::Complex64;

use super::FdfdError;
use crate::consts::SPEED_OF_LIGHT;

/// Polynomially graded complex coordinate stretching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlParams {
    /// Physical width of the absorbing band (m).
    pub width: f64,
    /// Grading exponent.
    pub order: f64,
    /// Design normal-incidence round-trip reflection.
    pub target_reflection: f64,
}

impl PmlParams {
    pub fn new(width: f64, order: f64, target_reflection: f64) -> Result<Self, FdfdError> {
        let p = Self {
            width,
            order,
            target_reflection,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FdfdError> {
        if !(self.order >= 1.0) {
            return Err(FdfdError::Pml("order must be at least 1".into()));
        }
        if !(self.target_reflection > 0.0 && self.target_reflection < 1.0) {
            return Err(FdfdError::Pml("target reflection must lie in (0, 1)".into()));
        }
        if !(self.width > 0.0) {
            return Err(FdfdError::Pml("width must be positive".into()));
        }
        Ok(())
    }

    /// Peak stretch rate (rad/s): the conductivity grading rule
    /// `-(m+1) ln R / (2 Z0 w)` divided by `eps0`, which turns the vacuum
    /// impedance `Z0` into the speed of light.
    pub fn sigma_max(&self) -> f64 {
        -(self.order + 1.0) * SPEED_OF_LIGHT * self.target_reflection.ln() / (2.0 * self.width)
    }

    /// Stretch factor at normalized depth `xi` in `[0, 1]`.
    pub fn stretch(&self, xi: f64, omega_ref: f64) -> Complex64 {
        if xi <= 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        Complex64::new(1.0, self.sigma_max() * xi.powf(self.order) / omega_ref)
    }
}
