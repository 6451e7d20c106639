use nalgebra::DMatrix;
use num_complex::Complex64;

use super::liouvillian::liouvillian;
use super::{DensityState, QedError, QedParams};
use crate::banded::BandedLu;
use crate::sparse::{norm2, CsrMatrix};

const PIVOT_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-10;
const N_MAX_CAP: usize = 80;

/// Steady state of the master equation.
///
/// The population equation for `|0, g>` is redundant (the Liouvillian
/// preserves the trace), so it is replaced by a normalization row. Pinning
/// `rho_00` keeps the band structure of the superoperator intact; the result
/// is then rescaled to unit trace. If that system is ill-conditioned (a steady
/// state with vanishing ground population) the trace row is used instead with
/// a dense solve.
pub fn steady_state(p: &QedParams) -> Result<DensityState, QedError> {
    p.validate()?;
    if !p.is_driven() && p.kappa == 0.0 && p.gamma == 0.0 {
        return Err(QedError::Parameter(
            "undriven lossless system has no unique steady state".into(),
        ));
    }
    let d = p.dim();
    let l = liouvillian(p)?;
    let scale = l.max_abs();

    let x = match pinned_solve(&l, scale) {
        Some(x) => x,
        None => trace_row_solve(&l, d, scale)?,
    };
    let trace: Complex64 = (0..d).map(|i| x[i * d + i]).sum();
    let rho = DMatrix::from_fn(d, d, |i, j| x[i * d + j] / trace);
    let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);

    let v: Vec<Complex64> = (0..d * d).map(|k| rho[(k / d, k % d)]).collect();
    let residual = norm2(&l.mul_vec(&v)) / (infinity_norm(&l) * norm2(&v));
    if residual > RESIDUAL_TOL {
        return Err(QedError::Residual(residual));
    }
    Ok(DensityState { rho, t: f64::INFINITY })
}

fn infinity_norm(m: &CsrMatrix) -> f64 {
    (0..m.nrows)
        .map(|r| m.row(r).map(|(_, v)| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn pinned_solve(l: &CsrMatrix, scale: f64) -> Option<Vec<Complex64>> {
    let mut trips = Vec::with_capacity(l.nnz());
    for r in 1..l.nrows {
        trips.extend(l.row(r).map(|(c, v)| (r, c, v)));
    }
    trips.push((0, 0, Complex64::new(scale, 0.0)));
    let m = CsrMatrix::from_triplets(l.nrows, l.ncols, &trips);
    let lu = BandedLu::factor(&m).ok()?;
    if lu.min_pivot_ratio() < PIVOT_TOL {
        return None;
    }
    let mut b = vec![Complex64::new(0.0, 0.0); l.nrows];
    b[0] = Complex64::new(scale, 0.0);
    lu.solve_in_place(&mut b).ok()?;
    Some(b)
}

fn trace_row_solve(l: &CsrMatrix, d: usize, scale: f64) -> Result<Vec<Complex64>, QedError> {
    let n = l.nrows;
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for r in 1..n {
        for (c, v) in l.row(r) {
            m[(r, c)] = v;
        }
    }
    for i in 0..d {
        m[(0, i * d + i)] = Complex64::new(scale, 0.0);
    }
    let lu = m.lu();
    let diag: Vec<f64> = lu.u().diagonal().iter().map(|v| v.norm()).collect();
    let big = diag.iter().cloned().fold(0.0, f64::max);
    let small = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = if big > 0.0 { small / big } else { 0.0 };
    if ratio < PIVOT_TOL {
        return Err(QedError::SingularLiouvillian { pivot_ratio: ratio });
    }
    let mut b = nalgebra::DVector::<Complex64>::zeros(n);
    b[0] = Complex64::new(scale, 0.0);
    let x = lu
        .solve(&b)
        .ok_or(QedError::SingularLiouvillian { pivot_ratio: ratio })?;
    Ok(x.iter().cloned().collect())
}

/// `<a^dag a>`.
pub fn mean_photon_number(state: &DensityState) -> f64 {
    state
        .photon_distribution()
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum()
}

/// `<a^dag a^dag a a> / <a^dag a>^2`.
pub fn g2_zero(state: &DensityState) -> Result<f64, QedError> {
    let dist = state.photon_distribution();
    let mean: f64 = dist.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    if mean < 1e-12 {
        return Err(QedError::Vacuum(mean));
    }
    let pairs: f64 = dist
        .iter()
        .enumerate()
        .map(|(n, p)| (n * n.saturating_sub(1)) as f64 * p)
        .sum();
    Ok(pairs / (mean * mean))
}

/// One point of a drive-detuning spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub delta_over_gamma: f64,
    pub g2_0: f64,
    pub n_a: f64,
    /// Photon-number cutoff at which the point converged.
    pub n_max: usize,
}

fn observe(p: &QedParams) -> Result<(f64, f64), QedError> {
    let s = steady_state(p)?;
    Ok((g2_zero(&s)?, mean_photon_number(&s)))
}

/// Steady-state `g2(0)` and `n_a` at `p.delta`. The cutoff starts at
/// `p.n_max` and is raised in steps of two until both quantities change by
/// less than 1% under `n_max -> n_max + 2`.
pub fn blockade_point(p: &QedParams) -> Result<SpectrumPoint, QedError> {
    if !p.is_driven() {
        return Err(QedError::Parameter("blockade spectrum needs a drive".into()));
    }
    if !(p.gamma > 0.0) {
        return Err(QedError::Parameter("gamma must be positive to scale the detuning".into()));
    }
    let mut n = p.n_max;
    let mut cur = observe(p)?;
    loop {
        if n + 2 > N_MAX_CAP {
            return Err(QedError::Truncation { n_max: n });
        }
        let next = observe(&QedParams { n_max: n + 2, ..*p })?;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        if rel(cur.0, next.0) < 0.01 && rel(cur.1, next.1) < 0.01 {
            if n != p.n_max {
                log::info!("event=n_max_raised delta_over_gamma={:.6} n_max={n}", p.delta / p.gamma);
            }
            return Ok(SpectrumPoint {
                delta_over_gamma: p.delta / p.gamma,
                g2_0: cur.0,
                n_a: cur.1,
                n_max: n,
            });
        }
        n += 2;
        cur = next;
    }
}

/// [`blockade_point`] over a grid of detunings (rad/s).
pub fn blockade_spectrum(p_base: &QedParams, delta_grid: &[f64]) -> Result<Vec<SpectrumPoint>, QedError> {
    delta_grid
        .iter()
        .map(|&delta| blockade_point(&QedParams { delta, ..*p_base }))
        .collect()
}

/// Local minimum of `g2(0)` for detunings in `[lo, hi]` (rad/s): coarse grid
/// of `n_grid` points, then golden-section refinement around the best one.
pub fn locate_dip(p_base: &QedParams, lo: f64, hi: f64, n_grid: usize) -> Result<SpectrumPoint, QedError> {
    if !(hi > lo) || n_grid < 3 {
        return Err(QedError::Parameter("need lo < hi and at least 3 grid points".into()));
    }
    let at = |delta: f64| blockade_point(&QedParams { delta, ..*p_base });
    let step = (hi - lo) / (n_grid - 1) as f64;
    let mut best = (0, f64::INFINITY);
    for i in 0..n_grid {
        let v = at(lo + step * i as f64)?.g2_0;
        if v < best.1 {
            best = (i, v);
        }
    }
    let mut a = lo + step * best.0.saturating_sub(1) as f64;
    let mut b = (lo + step * (best.0 + 1) as f64).min(hi);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut e = a + ratio * (b - a);
    let mut fc = at(c)?.g2_0;
    let mut fe = at(e)?.g2_0;
    while (b - a) > 1e-7 * b.abs().max(a.abs()) {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - ratio * (b - a);
            fc = at(c)?.g2_0;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + ratio * (b - a);
            fe = at(e)?.g2_0;
        }
    }
    at(0.5 * (a + b))
}
