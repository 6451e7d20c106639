//! Quarter-wave dielectric mirrors by the characteristic-matrix method, and
//! the mapping from mirror imperfection to a cavity decay rate.
//!
//! Time dependence is `exp(-i w t)`, so a lossy layer has complex index
//! `n + i k` with `k >= 0`. Incidence is normal; polarization does not enter.

use num_complex::Complex64;
use thiserror::Error;

use crate::consts::SPEED_OF_LIGHT;

#[derive(Debug, Error, PartialEq)]
pub enum MirrorError {
    #[error("invalid stack parameter: {0}")]
    Parameter(String),
    #[error("characteristic matrix product is not finite")]
    Numerical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub n: f64,
    pub k_abs: f64,
    /// Thickness (m).
    pub thickness: f64,
}

impl LayerSpec {
    pub fn index(&self) -> Complex64 {
        Complex64::new(self.n, self.k_abs)
    }

    /// Indices below one are allowed (metamaterial or plasma-like layers) but
    /// unusual for the mirrors modeled here.
    pub fn is_unusual(&self) -> bool {
        self.n < 1.0
    }
}

/// Layers ordered from the incidence side toward the substrate.
#[derive(Debug, Clone, PartialEq)]
pub struct StackSpec {
    pub layers: Vec<LayerSpec>,
    pub n_in: f64,
    pub n_sub: f64,
    /// Design wavelength (m).
    pub lambda0: f64,
}

impl StackSpec {
    pub fn validate(&self) -> Result<(), MirrorError> {
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.n > 0.0 && l.k_abs >= 0.0 && l.thickness > 0.0) {
                return Err(MirrorError::Parameter(format!(
                    "layer {i}: need n > 0, k >= 0, thickness > 0"
                )));
            }
            if l.is_unusual() {
                log::warn!("event=unusual_layer_index layer={i} n={}", l.n);
            }
        }
        if !(self.n_in > 0.0 && self.n_sub > 0.0 && self.lambda0 > 0.0) {
            return Err(MirrorError::Parameter(
                "n_in, n_sub and lambda0 must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn is_lossless(&self) -> bool {
        self.layers.iter().all(|l| l.k_abs == 0.0)
    }

    /// The same stack seen from the substrate side.
    pub fn reversed(&self) -> Self {
        Self {
            layers: self.layers.iter().rev().copied().collect(),
            n_in: self.n_sub,
            n_sub: self.n_in,
            lambda0: self.lambda0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorResponse {
    /// Complex amplitude reflectivity.
    pub r: Complex64,
    pub reflectance: f64,
    pub transmittance: f64,
    pub absorptance: f64,
    pub lambda: f64,
}

/// `n_pairs` high/low pairs, high index on the incidence side, each layer a
/// quarter wave thick at `lambda0`. Incidence from vacuum.
pub fn quarter_wave_stack(
    n_h: f64,
    k_h: f64,
    n_l: f64,
    k_l: f64,
    lambda0: f64,
    n_pairs: usize,
    n_sub: f64,
) -> Result<StackSpec, MirrorError> {
    if !(n_h > n_l) {
        return Err(MirrorError::Parameter(format!(
            "n_h = {n_h} must exceed n_l = {n_l} for a stopband"
        )));
    }
    if !(n_l >= 1.0 && k_h >= 0.0 && k_l >= 0.0 && lambda0 > 0.0 && n_sub > 0.0) {
        return Err(MirrorError::Parameter(
            "need n_l >= 1, k >= 0, lambda0 > 0, n_sub > 0".into(),
        ));
    }
    let high = LayerSpec {
        n: n_h,
        k_abs: k_h,
        thickness: lambda0 / (4.0 * n_h),
    };
    let low = LayerSpec {
        n: n_l,
        k_abs: k_l,
        thickness: lambda0 / (4.0 * n_l),
    };
    let layers = (0..n_pairs).flat_map(|_| [high, low]).collect();
    Ok(StackSpec {
        layers,
        n_in: 1.0,
        n_sub,
        lambda0,
    })
}

/// Reflectance, transmittance and absorptance of `stack` at `lambda`.
pub fn transfer_matrix(stack: &StackSpec, lambda: f64) -> Result<MirrorResponse, MirrorError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(MirrorError::Parameter("lambda must be positive".into()));
    }
    stack.validate()?;
    let i = Complex64::i();
    let k0 = 2.0 * std::f64::consts::PI / lambda;

    // [B; C] = prod M_j [1; n_sub], accumulated from the substrate outward.
    // A running power-of-two scale keeps the entries bounded.
    let mut b = Complex64::new(1.0, 0.0);
    let mut c = Complex64::new(stack.n_sub, 0.0);
    let mut log2_scale = 0i32;
    for layer in stack.layers.iter().rev() {
        let n = layer.index();
        let delta = n * k0 * layer.thickness;
        let (cos, sin) = (delta.cos(), delta.sin());
        let nb = cos * b - i * sin / n * c;
        let nc = -i * n * sin * b + cos * c;
        b = nb;
        c = nc;
        let mag = b.norm().max(c.norm());
        if !mag.is_finite() {
            return Err(MirrorError::Numerical);
        }
        if !(1e-100..=1e100).contains(&mag) {
            let e = mag.log2().floor() as i32;
            let f = 2f64.powi(-e);
            b *= f;
            c *= f;
            log2_scale += e;
        }
    }

    let n_in = stack.n_in;
    let denom = n_in * b + c;
    let r = (n_in * b - c) / denom;
    let reflectance = r.norm_sqr();
    let transmittance =
        4.0 * n_in * stack.n_sub / (denom.norm_sqr() * 2f64.powi(2 * log2_scale));
    if !(reflectance.is_finite() && transmittance.is_finite()) {
        return Err(MirrorError::Numerical);
    }
    let (reflectance, transmittance, absorptance) = if stack.is_lossless() {
        (reflectance.min(1.0), transmittance.min(1.0), 0.0)
    } else {
        let t = transmittance.clamp(0.0, 1.0);
        let rr = reflectance.clamp(0.0, 1.0);
        (rr, t, (1.0 - rr - t).max(0.0))
    };
    Ok(MirrorResponse {
        r,
        reflectance,
        transmittance,
        absorptance,
        lambda,
    })
}

/// Decay rate (rad/s) contributed by two identical mirrors of reflectance
/// `resp.reflectance` separated by `length` in a medium of index `eta`:
/// the round-trip fractional loss `2 (1 - R)` over the round-trip time
/// `2 eta L / c`.
pub fn mirror_loss_rate(resp: &MirrorResponse, length: f64, eta: f64) -> f64 {
    let r = resp.reflectance.clamp(0.0, 1.0);
    SPEED_OF_LIGHT * (1.0 - r) / (eta * length)
}

/// Total cavity decay rate (rad/s): geometric leakage `omega / q_geom` plus
/// mirror loss. `q_geom = inf` models a leak-free geometry.
pub fn total_decay(q_geom: f64, omega: f64, kappa_mirror: f64) -> f64 {
    omega / q_geom + kappa_mirror
}
