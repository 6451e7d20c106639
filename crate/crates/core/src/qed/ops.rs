use nalgebra::DMatrix;
use num_complex::Complex64;

use super::QedParams;

#[inline]
pub fn basis_index(n: usize, excited: bool) -> usize {
    2 * n + excited as usize
}

/// Cavity annihilation operator `a`, truncated at `n_max`.
pub fn annihilation(n_max: usize) -> DMatrix<Complex64> {
    let d = 2 * (n_max + 1);
    let mut a = DMatrix::zeros(d, d);
    for n in 1..=n_max {
        for s in [false, true] {
            a[(basis_index(n - 1, s), basis_index(n, s))] = Complex64::new((n as f64).sqrt(), 0.0);
        }
    }
    a
}

/// Atomic lowering operator `sigma = |g><e|`.
pub fn lowering(n_max: usize) -> DMatrix<Complex64> {
    let d = 2 * (n_max + 1);
    let mut s = DMatrix::zeros(d, d);
    for n in 0..=n_max {
        s[(basis_index(n, false), basis_index(n, true))] = Complex64::new(1.0, 0.0);
    }
    s
}

/// Laboratory-frame Hamiltonian. Undriven:
/// `omega_a a^dag a + omega_sigma sigma^dag sigma + g (a^dag sigma + a sigma^dag)`.
/// Driven (already in the frame of the drive):
/// `delta (a^dag a + sigma^dag sigma) + g (a^dag sigma + a sigma^dag) + drive (a^dag + a)`.
pub fn hamiltonian(p: &QedParams) -> DMatrix<Complex64> {
    if p.is_driven() {
        build(p, p.delta, p.delta)
    } else {
        build(p, p.omega_a, p.omega_sigma)
    }
}

/// Hamiltonian used for time stepping. Undriven dynamics run in the frame
/// rotating at `omega_sigma` times the excitation number, which commutes with
/// the coupling; populations are unchanged and the optical frequency drops
/// out of the step-size control.
pub fn dynamics_hamiltonian(p: &QedParams) -> DMatrix<Complex64> {
    if p.is_driven() {
        build(p, p.delta, p.delta)
    } else {
        build(p, p.omega_a - p.omega_sigma, 0.0)
    }
}

fn build(p: &QedParams, w_cav: f64, w_atom: f64) -> DMatrix<Complex64> {
    let d = p.dim();
    let mut h = DMatrix::zeros(d, d);
    for n in 0..=p.n_max {
        for s in [false, true] {
            let k = basis_index(n, s);
            h[(k, k)] = Complex64::new(n as f64 * w_cav + if s { w_atom } else { 0.0 }, 0.0);
        }
        if n >= 1 {
            // g sqrt(n) couples |n, g> and |n-1, e>
            let (u, v) = (basis_index(n, false), basis_index(n - 1, true));
            let c = Complex64::new(p.g * (n as f64).sqrt(), 0.0);
            h[(u, v)] = c;
            h[(v, u)] = c;
            if p.is_driven() {
                let amp = Complex64::new(p.drive * (n as f64).sqrt(), 0.0);
                for s in [false, true] {
                    let (hi, lo) = (basis_index(n, s), basis_index(n - 1, s));
                    h[(hi, lo)] += amp;
                    h[(lo, hi)] += amp;
                }
            }
        }
    }
    h
}
