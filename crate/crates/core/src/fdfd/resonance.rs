use num_complex::Complex64;

use super::krylov::{solve_modes_with, solve_unchecked, KrylovSettings};
use super::{assemble, EigenMode, FdfdError, PmlParams};
use crate::consts::angular;
use crate::geometry::MaterialMap;

/// Knobs for [`find_resonances`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub n_modes: usize,
    pub seed: u64,
    pub pml_order: f64,
    pub pml_target_reflection: f64,
    /// Modes with a larger share of their energy inside the PML are dropped.
    pub max_pml_energy_fraction: f64,
    /// Relative frequency mismatch below which the stretch factors are not
    /// re-evaluated at the mode's own frequency.
    pub refine_tol: f64,
    pub krylov: KrylovSettings,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            n_modes: 6,
            seed: 1,
            pml_order: 3.0,
            pml_target_reflection: 1e-8,
            max_pml_energy_fraction: 0.2,
            refine_tol: 1e-4,
            krylov: KrylovSettings::default(),
        }
    }
}

/// Fraction of `sum eps |f|^2` carried by PML nodes.
pub fn pml_energy_fraction(map: &MaterialMap, mode: &EigenMode) -> f64 {
    let (mut inside, mut total) = (0.0, 0.0);
    for (k, f) in mode.field.iter().enumerate() {
        let w = map.eps[k].norm() * f.norm_sqr();
        total += w;
        if map.is_pml(k) {
            inside += w;
        }
    }
    if total > 0.0 {
        inside / total
    } else {
        0.0
    }
}

/// Resonances of `map` nearest `shift_hz`, after one fixed-point update of the
/// PML reference frequency and removal of PML-dominated modes. Sorted by
/// distance from the shift.
pub fn find_resonances(
    map: &MaterialMap,
    pml_width: f64,
    shift_hz: f64,
    settings: &SolverSettings,
) -> Result<Vec<EigenMode>, FdfdError> {
    let pml = PmlParams::new(pml_width, settings.pml_order, settings.pml_target_reflection)?;
    let omega_ref = angular(shift_hz);
    let shift = Complex64::new(omega_ref, 0.0);
    let op = assemble(map, Some(&pml), omega_ref)?;
    let first = solve_modes_with(&op, shift, settings.n_modes, settings.seed, &settings.krylov)?;

    let mut out = Vec::with_capacity(first.len());
    for mode in first {
        let mismatch = (mode.omega.re - omega_ref).abs() / omega_ref;
        let refined = if mismatch > settings.refine_tol {
            let op2 = assemble(map, Some(&pml), mode.omega.re)?;
            // perturb slightly off the previous eigenvalue so the factorization stays regular
            let target = mode.omega * Complex64::new(1.0 + 1e-7, 0.0);
            let again = solve_unchecked(&op2, target, 1, settings.seed, &settings.krylov)?;
            let best = again.into_iter().next().ok_or(FdfdError::NoModes)?;
            let moved = (best.omega - mode.omega).norm() / mode.omega.norm();
            if moved > settings.refine_tol {
                log::warn!(
                    "event=pml_refine_shift freq_hz={:.6e} relative_change={moved:.3e}",
                    best.freq_hz()
                );
            }
            best
        } else {
            mode
        };
        let frac = pml_energy_fraction(map, &refined);
        if frac > settings.max_pml_energy_fraction {
            log::debug!(
                "event=mode_rejected freq_hz={:.6e} pml_fraction={frac:.3}",
                refined.freq_hz()
            );
            continue;
        }
        out.push(refined);
    }
    out.sort_by(|a, b| {
        (a.omega - shift)
            .norm()
            .partial_cmp(&(b.omega - shift).norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.omega.re.partial_cmp(&b.omega.re).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(out)
}
