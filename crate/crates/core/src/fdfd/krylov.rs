//! Shift-invert Krylov-Schur iteration for interior eigenvalues of the
//! Helmholtz pencil.
//!
//! The transformed operator is `(A - sigma B)^-1 B`, whose dominant
//! eigenvalues `theta = 1 / (lambda - sigma)` belong to the pencil
//! eigenvalues `lambda` nearest the shift. The shifted matrix is factored once
//! by banded LU. Restarts keep an orthonormal basis of the wanted Schur
//! subspace, so converged directions are never discarded.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EigenMode, FdfdError, HelmholtzOperator};
use crate::banded::{BandedError, BandedLu};
use crate::consts::SPEED_OF_LIGHT;
use crate::dense::Schur;
use crate::sparse::{dot, norm2, CsrMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovSettings {
    /// Residual every wanted pair must reach before iteration stops.
    pub tol: f64,
    /// Residual at which pairs are still accepted once restarts run out.
    pub accept_tol: f64,
    pub max_restarts: usize,
    /// Basis size as a multiple of the number of wanted modes.
    pub basis_factor: usize,
    pub min_basis: usize,
}

impl Default for KrylovSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            accept_tol: 1e-8,
            max_restarts: 300,
            basis_factor: 3,
            min_basis: 12,
        }
    }
}

/// Up to `n_modes` modes nearest `shift` (rad/s), sorted by `|omega - shift|`.
/// `seed` fixes the start vector, so results are reproducible bit for bit.
pub fn solve_modes(
    op: &HelmholtzOperator,
    shift: Complex64,
    n_modes: usize,
    seed: u64,
) -> Result<Vec<EigenMode>, FdfdError> {
    solve_modes_with(op, shift, n_modes, seed, &KrylovSettings::default())
}

pub fn solve_modes_with(
    op: &HelmholtzOperator,
    shift: Complex64,
    n_modes: usize,
    seed: u64,
    settings: &KrylovSettings,
) -> Result<Vec<EigenMode>, FdfdError> {
    if n_modes == 0 {
        return Err(FdfdError::NoModes);
    }
    let ratio = shift.re * op.dx / SPEED_OF_LIGHT;
    let limit = 2.0 * std::f64::consts::PI / op.ppw_target;
    if ratio > limit * (1.0 + 1e-12) {
        return Err(FdfdError::Unresolved {
            shift_hz: crate::consts::ordinary(shift.re),
            ratio,
            limit,
        });
    }
    solve_unchecked(op, shift, n_modes, seed, settings)
}

/// As [`solve_modes_with`] without the resolvability precondition; used to
/// re-solve near modes already found.
pub(crate) fn solve_unchecked(
    op: &HelmholtzOperator,
    shift: Complex64,
    n_modes: usize,
    seed: u64,
    settings: &KrylovSettings,
) -> Result<Vec<EigenMode>, FdfdError> {
    let n = op.n_dof;
    let sigma = (shift / SPEED_OF_LIGHT).powi(2);
    let shifted = shifted_matrix(&op.a, &op.b, sigma);
    let lu = BandedLu::factor(&shifted).map_err(|e| match e {
        BandedError::Singular { .. } => FdfdError::Factorization(e),
        other => FdfdError::Assembly(other.to_string()),
    })?;
    let apply = |v: &[Complex64]| -> Vec<Complex64> {
        let mut w: Vec<Complex64> = v.iter().zip(&op.b).map(|(x, b)| x * b).collect();
        lu.solve_in_place(&mut w).expect("dimension checked at assembly");
        w
    };

    let n_want = n_modes.min(n);
    let m = (settings.basis_factor * n_want).max(settings.min_basis).min(n);
    let keep = if m > n_want { n_want + (m - n_want) / 2 } else { n_want };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    basis.push(normalized(random_vector(&mut rng, n)));
    // projected matrix; row m carries the coupling to the residual direction
    let mut g = DMatrix::<Complex64>::zeros(m + 1, m);
    let mut start = 0;
    let mut worst = f64::INFINITY;
    let mut converged = 0;

    for restart in 0..=settings.max_restarts {
        for j in start..m {
            let mut w = apply(&basis[j]);
            let w_norm0 = norm2(&w);
            let mut h = vec![ZERO; j + 1];
            for _ in 0..2 {
                for (i, v) in basis.iter().take(j + 1).enumerate() {
                    let c = dot(v, &w);
                    h[i] += c;
                    for (wk, vk) in w.iter_mut().zip(v) {
                        *wk -= c * vk;
                    }
                }
            }
            for (i, hi) in h.into_iter().enumerate() {
                g[(i, j)] = hi;
            }
            let beta = norm2(&w);
            let next = if beta > 1e-13 * w_norm0 && beta > 0.0 {
                g[(j + 1, j)] = Complex64::new(beta, 0.0);
                w.iter().map(|x| x / beta).collect()
            } else {
                // invariant subspace: continue with a fresh orthogonal direction
                g[(j + 1, j)] = ZERO;
                orthogonal_random(&basis, &mut rng, n)
            };
            basis.truncate(j + 1);
            basis.push(next);
        }

        let square = g.rows(0, m).into_owned();
        let mut schur = Schur::new(&square)?;
        let thetas = schur.eigenvalues();
        let mut ranked: Vec<usize> = (0..m).collect();
        ranked.sort_by(|&a, &b| {
            thetas[b]
                .norm()
                .partial_cmp(&thetas[a].norm())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        schur.reorder(&ranked[..keep]);

        // Ritz pairs for the wanted part
        let mut pairs = Vec::with_capacity(n_want);
        worst = 0.0;
        converged = 0;
        for p in 0..n_want {
            let theta = schur.t[(p, p)];
            let lambda = sigma + theta.inv();
            let y = schur.triangular_eigenvector(p);
            let z: Vec<Complex64> = (0..m)
                .map(|r| (0..=p).map(|c| schur.q[(r, c)] * y[c]).sum())
                .collect();
            let x = combine(&basis[..m], &z, n);
            let res = op.residual(lambda, &x);
            if res <= settings.tol {
                converged += 1;
            }
            worst = worst.max(res);
            pairs.push((lambda, x));
        }
        if converged == n_want || (restart == settings.max_restarts && worst <= settings.accept_tol) {
            log::debug!("event=krylov_converged restarts={restart} worst_residual={worst:.3e}");
            return Ok(finish(op, shift, pairs));
        }
        if restart == settings.max_restarts {
            break;
        }

        // Krylov-Schur restart onto the leading `keep` Schur vectors
        let mut new_basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        for c in 0..keep {
            let z: Vec<Complex64> = (0..m).map(|r| schur.q[(r, c)]).collect();
            new_basis.push(combine(&basis[..m], &z, n));
        }
        new_basis.push(basis[m].clone());
        let mut g_new = DMatrix::<Complex64>::zeros(m + 1, m);
        for c in 0..keep {
            for r in 0..=c {
                g_new[(r, c)] = schur.t[(r, c)];
            }
            let coupling: Complex64 = (0..m).map(|r| g[(m, r)] * schur.q[(r, c)]).sum();
            g_new[(keep, c)] = coupling;
        }
        basis = new_basis;
        g = g_new;
        start = keep;
    }
    Err(FdfdError::Convergence {
        restarts: settings.max_restarts,
        converged,
        wanted: n_want,
        worst,
    })
}

fn shifted_matrix(a: &CsrMatrix, b: &[Complex64], sigma: Complex64) -> CsrMatrix {
    let mut trips = Vec::with_capacity(a.nnz() + b.len());
    for r in 0..a.nrows {
        for (c, v) in a.row(r) {
            trips.push((r, c, v));
        }
        trips.push((r, r, -sigma * b[r]));
    }
    CsrMatrix::from_triplets(a.nrows, a.ncols, &trips)
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn normalized(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let s = norm2(&v);
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn orthogonal_random(basis: &[Vec<Complex64>], rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let mut w = random_vector(rng, n);
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, &w);
            for (wk, vk) in w.iter_mut().zip(v) {
                *wk -= c * vk;
            }
        }
    }
    normalized(w)
}

fn combine(basis: &[Vec<Complex64>], coeffs: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut x = vec![ZERO; n];
    for (v, &c) in basis.iter().zip(coeffs) {
        if c == ZERO {
            continue;
        }
        for (xk, vk) in x.iter_mut().zip(v) {
            *xk += c * vk;
        }
    }
    x
}

fn finish(
    op: &HelmholtzOperator,
    shift: Complex64,
    pairs: Vec<(Complex64, Vec<Complex64>)>,
) -> Vec<EigenMode> {
    // orthogonalize directions within (near-)degenerate clusters
    let mut done: Vec<(Complex64, Vec<Complex64>)> = Vec::with_capacity(pairs.len());
    for (lambda, mut x) in pairs {
        for (l2, x2) in &done {
            if (lambda - l2).norm() <= 1e-8 * lambda.norm() {
                let nrm = dot(x2, x2);
                let c = dot(x2, &x) / nrm;
                for (a, b) in x.iter_mut().zip(x2) {
                    *a -= c * b;
                }
            }
        }
        done.push((lambda, normalized(x)));
    }

    let mut modes: Vec<EigenMode> = done
        .into_iter()
        .map(|(lambda, x)| {
            let omega = SPEED_OF_LIGHT * lambda.sqrt();
            let residual = op.residual(lambda, &x);
            let mut mode = EigenMode {
                omega,
                field: op.to_field(&x),
                residual,
                nx: op.nx,
                ny: op.ny,
                dx: op.dx,
                origin: op.origin,
            };
            mode.normalize();
            mode
        })
        .collect();
    modes.sort_by(|a, b| {
        (a.omega - shift)
            .norm()
            .partial_cmp(&(b.omega - shift).norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.omega.re.partial_cmp(&b.omega.re).unwrap_or(std::cmp::Ordering::Equal))
    });
    modes
}
