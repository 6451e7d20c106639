use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ops::{annihilation, dynamics_hamiltonian, lowering};
use super::{DensityState, QedError, QedParams};
use crate::sparse::CsrMatrix;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn nonzeros(m: &DMatrix<Complex64>) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != Complex64::new(0.0, 0.0) {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Sparse superoperator `L` with `d vec(rho)/dt = L vec(rho)`, built from
/// the dynamics Hamiltonian and the dissipators `kappa D[a] + gamma D[sigma]`.
pub fn liouvillian(p: &QedParams) -> Result<CsrMatrix, QedError> {
    p.validate()?;
    let d = p.dim();
    let h = nonzeros(&dynamics_hamiltonian(p));
    let mut trips: Vec<(usize, usize, Complex64)> = Vec::new();
    let at = |i: usize, j: usize| i * d + j;

    // -i [H, rho]
    for &(i, k, v) in &h {
        for j in 0..d {
            trips.push((at(i, j), at(k, j), -I * v));
        }
    }
    for &(l, j, v) in &h {
        for i in 0..d {
            trips.push((at(i, j), at(i, l), I * v));
        }
    }

    for (rate, c) in [(p.kappa, annihilation(p.n_max)), (p.gamma, lowering(p.n_max))] {
        if rate == 0.0 {
            continue;
        }
        let cdc = nonzeros(&(c.adjoint() * &c));
        let c = nonzeros(&c);
        for &(i, k, a) in &c {
            for &(j, l, b) in &c {
                trips.push((at(i, j), at(k, l), rate * a * b.conj()));
            }
        }
        let half = -0.5 * rate;
        for &(i, k, v) in &cdc {
            for j in 0..d {
                trips.push((at(i, j), at(k, j), half * v));
            }
        }
        for &(l, j, v) in &cdc {
            for i in 0..d {
                trips.push((at(i, j), at(i, l), half * v));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(d * d, d * d, &trips))
}

/// `d rho / dt = -i [H, rho] + kappa D[a] rho + gamma D[sigma] rho` with
/// `D[o] rho = o rho o^dag - (o^dag o rho + rho o^dag o) / 2`, evaluated
/// with dense products in the dynamics frame.
pub fn lindblad_rhs(state: &DensityState, p: &QedParams) -> Result<DMatrix<Complex64>, QedError> {
    p.validate()?;
    state.check_dim(p)?;
    let rho = &state.rho;
    let h = dynamics_hamiltonian(p);
    let mut out = (&h * rho - rho * &h) * (-I);
    for (rate, c) in [(p.kappa, annihilation(p.n_max)), (p.gamma, lowering(p.n_max))] {
        if rate == 0.0 {
            continue;
        }
        let cd = c.adjoint();
        let cdc = &cd * &c;
        let term = &c * rho * &cd - (&cdc * rho + rho * &cdc) * Complex64::new(0.5, 0.0);
        out += term * Complex64::new(rate, 0.0);
    }
    Ok(out)
}
