//! Adaptive Dormand-Prince 5(4) integration of the master equation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::liouvillian::liouvillian;
use super::ops::basis_index;
use super::{DensityState, QedError, QedParams};

/// Sampled observables of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    /// Population of `|0, e>`.
    pub p_0e: Vec<f64>,
    /// Population of `|1, g>`.
    pub p_1g: Vec<f64>,
    /// Mean photon number.
    pub n_a: Vec<f64>,
    pub final_state: DensityState,
    /// Set when the top Fock level held more than `1e-6` at some sample.
    pub truncation_warning: bool,
    pub steps: usize,
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates from `rho0` to `t_end` seconds. Samples are emitted at a
/// uniform spacing of at most `1/40` of the fastest coherent period (the
/// Rabi period `2 pi / g` when coupling dominates).
pub fn evolve(
    rho0: &DensityState,
    t_end: f64,
    p: &QedParams,
    rel_tol: f64,
) -> Result<ObservableSeries, QedError> {
    evolve_observed(rho0, t_end, p, rel_tol, |_| {})
}

/// As [`evolve`], handing every sampled state to `observer`.
pub fn evolve_observed<F: FnMut(&DensityState)>(
    rho0: &DensityState,
    t_end: f64,
    p: &QedParams,
    rel_tol: f64,
    mut observer: F,
) -> Result<ObservableSeries, QedError> {
    p.validate()?;
    rho0.check_dim(p)?;
    if !(1e-12..=1e-4).contains(&rel_tol) {
        return Err(QedError::Parameter("rel_tol must lie in [1e-12, 1e-4]".into()));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(QedError::Parameter("t_end must be positive".into()));
    }
    let d = p.dim();
    let l = liouvillian(p)?;
    let rhs = |y: &[Complex64], out: &mut [Complex64]| l.mul_vec_into(y, out);

    let fastest = [
        p.g,
        p.kappa,
        p.gamma,
        p.drive,
        p.delta.abs(),
        if p.is_driven() { 0.0 } else { (p.omega_a - p.omega_sigma).abs() },
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    let n_samples = if fastest > 0.0 {
        let period = 2.0 * std::f64::consts::PI / fastest;
        ((40.0 * t_end / period).ceil() as usize).max(100)
    } else {
        100
    };
    let dt_out = t_end / n_samples as f64;

    let mut y: Vec<Complex64> = (0..d * d).map(|k| rho0.rho[(k / d, k % d)]).collect();
    let t0 = rho0.t;
    let mut series = ObservableSeries {
        times: Vec::with_capacity(n_samples + 1),
        p_0e: Vec::with_capacity(n_samples + 1),
        p_1g: Vec::with_capacity(n_samples + 1),
        n_a: Vec::with_capacity(n_samples + 1),
        final_state: rho0.clone(),
        truncation_warning: false,
        steps: 0,
    };
    let mut record = |y: &[Complex64], t: f64, series: &mut ObservableSeries| {
        let state = DensityState {
            rho: DMatrix::from_fn(d, d, |i, j| y[i * d + j]),
            t,
        };
        let pop = |k: usize| y[k * d + k].re;
        series.times.push(t);
        series.p_0e.push(pop(basis_index(0, true)));
        series.p_1g.push(pop(basis_index(1, false)));
        series.n_a.push(
            (1..=p.n_max)
                .map(|n| n as f64 * (pop(basis_index(n, false)) + pop(basis_index(n, true))))
                .sum(),
        );
        let top = pop(basis_index(p.n_max, false)) + pop(basis_index(p.n_max, true));
        if top > 1e-6 && !series.truncation_warning {
            series.truncation_warning = true;
            log::warn!("event=truncation_warning t={t:.6e} top_level_population={top:.3e} n_max={}", p.n_max);
        }
        observer(&state);
        series.final_state = state;
    };
    record(&y, t0, &mut series);

    let n = y.len();
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    let mut y_new = vec![Complex64::new(0.0, 0.0); n];
    rhs(&y, &mut k[0]);
    let mut t = 0.0;
    let mut h = (0.01 / fastest.max(1.0 / t_end)).min(dt_out);
    let mut err_prev = 1e-4f64;
    let h_min = 1e-14 * t_end;

    for sample in 1..=n_samples {
        let t_target = sample as f64 * dt_out;
        while t < t_target {
            let remaining = t_target - t;
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };
            for s in 1..7 {
                for (idx, v) in tmp.iter_mut().enumerate() {
                    let mut acc = y[idx];
                    for (r, a) in A[s - 1].iter().take(s).enumerate() {
                        if *a != 0.0 {
                            acc += k[r][idx] * (step * a);
                        }
                    }
                    *v = acc;
                }
                rhs(&tmp, &mut k[s]);
                if s == 6 {
                    y_new.copy_from_slice(&tmp);
                }
            }
            // k[6] = f(y_new) by construction of the last stage
            let mut sum = 0.0;
            for idx in 0..n {
                let mut e = Complex64::new(0.0, 0.0);
                for (r, c) in E.iter().enumerate() {
                    if *c != 0.0 {
                        e += k[r][idx] * (step * c);
                    }
                }
                let scale = rel_tol + rel_tol * y[idx].norm().max(y_new[idx].norm());
                sum += (e.norm() / scale).powi(2);
            }
            let err = (sum / n as f64).sqrt();
            if err <= 1.0 {
                t = if clipped { t_target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                series.steps += 1;
                // PI step-size control
                let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
                let grown = step * fac.clamp(0.2, 5.0);
                h = if clipped { h.max(grown) } else { grown };
                err_prev = err.max(1e-4);
            } else {
                h = step * (0.9 * err.powf(-0.2)).max(0.2);
                if h < h_min {
                    return Err(QedError::StepFailure { t: t0 + t, h });
                }
            }
        }
        record(&y, t0 + t_target, &mut series);
    }
    Ok(series)
}
