use num_complex::Complex64;

use super::{ObservableSeries, QedError, QedParams};
use crate::consts::SPEED_OF_LIGHT;

/// Characteristic atomic interaction volume `3 pi c^3 / (gamma omega_sigma^2)`.
pub fn atomic_volume(gamma: f64, omega_sigma: f64) -> f64 {
    3.0 * std::f64::consts::PI * SPEED_OF_LIGHT.powi(3) / (gamma * omega_sigma * omega_sigma)
}

/// `g = gamma sqrt(V_a / V)` (rad/s).
pub fn coupling_from_mode(volume: f64, gamma: f64, omega_sigma: f64) -> Result<f64, QedError> {
    if !(volume > 0.0 && gamma > 0.0 && omega_sigma > 0.0) {
        return Err(QedError::Parameter(
            "volume, gamma and omega_sigma must be positive".into(),
        ));
    }
    Ok(gamma * (atomic_volume(gamma, omega_sigma) / volume).sqrt())
}

/// `C = g^2 / (kappa gamma)`.
pub fn cooperativity(g: f64, kappa: f64, gamma: f64) -> Result<f64, QedError> {
    if !(kappa > 0.0 && gamma > 0.0) {
        return Err(QedError::Parameter("kappa and gamma must be positive".into()));
    }
    Ok(g * g / (kappa * gamma))
}

/// Ladder quantities of the `l`-th excitation manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveNonlinearity {
    /// `sqrt((kappa - gamma)^2 - 16 l g^2)`, principal branch.
    pub alpha: Complex64,
    /// `(2 l - 1) kappa + gamma`.
    pub beta: f64,
    /// `alpha / beta`.
    pub n_eff: Complex64,
    /// `l omega_a - i beta / 4 + i alpha / 4` and `... - i alpha / 4`.
    pub omega_eff: [Complex64; 2],
}

/// With the principal square root, `g = 0` gives `alpha = |kappa - gamma|`.
pub fn effective_nonlinearity(p: &QedParams, l: usize) -> Result<EffectiveNonlinearity, QedError> {
    if l < 1 {
        return Err(QedError::Parameter("ladder level must be at least 1".into()));
    }
    let lf = l as f64;
    let radicand = (p.kappa - p.gamma).powi(2) - 16.0 * lf * p.g * p.g;
    let alpha = Complex64::new(radicand, 0.0).sqrt();
    let beta = (2.0 * lf - 1.0) * p.kappa + p.gamma;
    if beta == 0.0 {
        return Err(QedError::Parameter("beta vanishes; N_eff undefined".into()));
    }
    let i = Complex64::new(0.0, 1.0);
    let base = Complex64::new(lf * p.omega_a, -beta / 4.0);
    Ok(EffectiveNonlinearity {
        alpha,
        beta,
        n_eff: alpha / beta,
        omega_eff: [base + i * alpha / 4.0, base - i * alpha / 4.0],
    })
}

#[derive(Clone, Copy)]
struct Extremum {
    t: f64,
    v: f64,
    peak: bool,
}

fn extrema(t: &[f64], x: &[f64]) -> Vec<Extremum> {
    let mut out = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
        let peak = b > a && b >= c;
        let trough = b < a && b <= c;
        if !(peak || trough) {
            continue;
        }
        // parabola through the three samples (uniform spacing)
        let denom = a - 2.0 * b + c;
        let (dt, v) = if denom != 0.0 {
            let s = 0.5 * (a - c) / denom;
            (s, b - 0.25 * (a - c) * s)
        } else {
            (0.0, b)
        };
        let h = t[i + 1] - t[i];
        out.push(Extremum {
            t: t[i] + dt * h,
            v,
            peak,
        });
    }
    out
}

/// Decoherence time from the `p_1g` oscillation envelope: amplitudes
/// `(peak - mean of the neighbouring troughs) / 2` are fitted to
/// `A0 exp(-t / T2)` by least squares on `ln A`. Returns infinity when the
/// envelope does not decay.
pub fn t2_decoherence(series: &ObservableSeries) -> Result<f64, QedError> {
    let ext = extrema(&series.times, &series.p_1g);
    if ext.len() < 10 {
        return Err(QedError::Fit(format!(
            "{} oscillation extrema found, need at least 10",
            ext.len()
        )));
    }
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for w in ext.windows(3) {
        if w[1].peak && !w[0].peak && !w[2].peak {
            let amp = 0.5 * (w[1].v - 0.5 * (w[0].v + w[2].v));
            if amp > 0.0 {
                pts.push((w[1].t, amp));
            }
        }
    }
    if pts.len() < 3 {
        return Err(QedError::Fit("fewer than 3 bracketed peaks".into()));
    }
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), p| (l.min(p.1), h.max(p.1)));
    if hi / lo - 1.0 < 1e-6 {
        return Ok(f64::INFINITY);
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(t, a) in &pts {
        let (dx, dy) = (t - mt, a.ln() - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    if slope >= 0.0 {
        return Ok(f64::INFINITY);
    }
    if r2 < 0.95 {
        return Err(QedError::Fit(format!("envelope R^2 = {r2:.4} below 0.95")));
    }
    Ok(-1.0 / slope)
}
