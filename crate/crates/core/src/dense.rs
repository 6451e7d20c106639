//! Small dense complex eigen-solvers used by the Krylov projection.
//!
//! [`Schur`] computes `A = Q T Q^H` with `T` upper triangular by Householder
//! reduction to Hessenberg form followed by single-shift QR sweeps, and
//! supports reordering of the diagonal so a selected set of eigenvalues
//! leads the form.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SchurError {
    #[error("QR iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("matrix is not square")]
    NotSquare,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Plane rotation `[c s; -conj(s) c]` mapping `(f, g)` to `(r, 0)`.
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    if g == ZERO {
        return (1.0, ZERO);
    }
    if f == ZERO {
        return (0.0, g.conj() / g.norm());
    }
    let (af, ag) = (f.norm(), g.norm());
    let norm = af.hypot(ag);
    let phase = f / af;
    (af / norm, phase * g.conj() / norm)
}

/// Applies the rotation from the left to rows `r1`, `r2`.
fn rotate_rows(m: &mut DMatrix<Complex64>, r1: usize, r2: usize, c: f64, s: Complex64, cols: std::ops::Range<usize>) {
    for j in cols {
        let (a, b) = (m[(r1, j)], m[(r2, j)]);
        m[(r1, j)] = a * c + s * b;
        m[(r2, j)] = b * c - s.conj() * a;
    }
}

/// Applies the adjoint rotation from the right to columns `c1`, `c2`.
fn rotate_cols(m: &mut DMatrix<Complex64>, c1: usize, c2: usize, c: f64, s: Complex64, rows: std::ops::Range<usize>) {
    for i in rows {
        let (a, b) = (m[(i, c1)], m[(i, c2)]);
        m[(i, c1)] = a * c + b * s.conj();
        m[(i, c2)] = b * c - a * s;
    }
}

#[derive(Debug, Clone)]
pub struct Schur {
    /// Unitary Schur vectors.
    pub q: DMatrix<Complex64>,
    /// Upper triangular factor.
    pub t: DMatrix<Complex64>,
}

impl Schur {
    pub fn new(a: &DMatrix<Complex64>) -> Result<Self, SchurError> {
        if a.nrows() != a.ncols() {
            return Err(SchurError::NotSquare);
        }
        let n = a.nrows();
        let mut h = a.clone();
        let mut q = DMatrix::<Complex64>::identity(n, n);
        hessenberg(&mut h, &mut q);
        qr_sweeps(&mut h, &mut q)?;
        for j in 0..n {
            for i in j + 1..n {
                h[(i, j)] = ZERO;
            }
        }
        Ok(Self { q, t: h })
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|i| self.t[(i, i)]).collect()
    }

    /// Swaps diagonal entries `k` and `k + 1` by a unitary similarity.
    pub fn swap(&mut self, k: usize) {
        let n = self.dim();
        let (t11, t22) = (self.t[(k, k)], self.t[(k + 1, k + 1)]);
        let (c, s) = givens(self.t[(k, k + 1)], t22 - t11);
        if k + 2 < n {
            rotate_rows(&mut self.t, k, k + 1, c, s, k + 2..n);
        }
        rotate_cols(&mut self.t, k, k + 1, c, s, 0..k);
        self.t[(k, k)] = t22;
        self.t[(k + 1, k + 1)] = t11;
        rotate_cols(&mut self.q, k, k + 1, c, s, 0..n);
    }

    /// Reorders the form so that the entries currently at `positions` occupy
    /// the leading diagonal slots, in the given order.
    pub fn reorder(&mut self, positions: &[usize]) {
        let mut slots: Vec<usize> = (0..self.dim()).collect();
        for (target, &want) in positions.iter().enumerate() {
            let mut p = slots.iter().position(|&s| s == want).expect("unknown position");
            while p > target {
                self.swap(p - 1);
                slots.swap(p - 1, p);
                p -= 1;
            }
        }
    }

    /// Eigenvector of `T` for the diagonal entry `p`, supported on `0..=p`.
    pub fn triangular_eigenvector(&self, p: usize) -> Vec<Complex64> {
        let n = self.dim();
        let lambda = self.t[(p, p)];
        let scale = self.t.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let floor = f64::EPSILON * scale;
        let mut y = vec![ZERO; n];
        y[p] = Complex64::new(1.0, 0.0);
        for j in (0..p).rev() {
            let mut acc = ZERO;
            for l in j + 1..=p {
                acc += self.t[(j, l)] * y[l];
            }
            let mut d = self.t[(j, j)] - lambda;
            if d.norm() < floor {
                d = Complex64::new(floor, 0.0);
            }
            y[j] = -acc / d;
        }
        let norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        y
    }
}

fn hessenberg(h: &mut DMatrix<Complex64>, q: &mut DMatrix<Complex64>) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let alpha = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let phase = if v[0] == ZERO { Complex64::new(1.0, 0.0) } else { v[0] / v[0].norm() };
        v[0] += phase * alpha;
        let vnorm2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;
        // H <- P H, P = I - tau v v^H acting on rows k+1..n
        for j in 0..n {
            let s: Complex64 = v.iter().enumerate().map(|(r, vr)| vr.conj() * h[(k + 1 + r, j)]).sum();
            let s = s * tau;
            for (r, vr) in v.iter().enumerate() {
                h[(k + 1 + r, j)] -= vr * s;
            }
        }
        // H <- H P, Q <- Q P
        for m in [&mut *h, &mut *q] {
            for i in 0..n {
                let s: Complex64 = v.iter().enumerate().map(|(r, vr)| m[(i, k + 1 + r)] * vr).sum();
                let s = s * tau;
                for (r, vr) in v.iter().enumerate() {
                    m[(i, k + 1 + r)] -= s * vr.conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

fn qr_sweeps(h: &mut DMatrix<Complex64>, q: &mut DMatrix<Complex64>) -> Result<(), SchurError> {
    let n = h.nrows();
    if n < 2 {
        return Ok(());
    }
    let max_sweeps = 100 * n;
    let mut sweeps = 0;
    let mut since_deflation = 0;
    let mut hi = n - 1;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if sub <= f64::EPSILON * diag || sub < f64::MIN_POSITIVE {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        sweeps += 1;
        since_deflation += 1;
        if sweeps > max_sweeps {
            return Err(SchurError::NoConvergence(sweeps));
        }

        let shift = if since_deflation % 11 == 10 {
            // exceptional shift breaks rare cycles
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        for k in lo..hi {
            let (f, g) = if k == lo {
                (h[(lo, lo)] - shift, h[(lo + 1, lo)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s) = givens(f, g);
            let first_col = if k == lo { lo } else { k - 1 };
            rotate_rows(h, k, k + 1, c, s, first_col..n);
            if k > lo {
                h[(k + 1, k - 1)] = ZERO;
            }
            let last_row = (k + 2).min(hi) + 1;
            rotate_cols(h, k, k + 1, c, s, 0..last_row);
            rotate_cols(q, k, k + 1, c, s, 0..n);
        }
    }
    Ok(())
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mu1 = (a + d) * 0.5 + disc;
    let mu2 = (a + d) * 0.5 - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random(n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn check(a: &DMatrix<Complex64>, s: &Schur) {
        let n = a.nrows();
        let recon = &s.q * &s.t * s.q.adjoint();
        assert!((recon - a).norm() < 1e-12 * a.norm().max(1.0) * n as f64);
        let qq = s.q.adjoint() * &s.q;
        assert!((qq - DMatrix::identity(n, n)).norm() < 1e-12 * n as f64);
        for j in 0..n {
            for i in j + 1..n {
                assert_eq!(s.t[(i, j)], ZERO);
            }
        }
    }

    #[test]
    fn decomposes_random_matrices() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (30, 4), (60, 5)] {
            let a = random(n, seed);
            let s = Schur::new(&a).unwrap();
            check(&a, &s);
            let trace: Complex64 = (0..n).map(|i| a[(i, i)]).sum();
            let sum: Complex64 = s.eigenvalues().iter().sum();
            assert!((trace - sum).norm() < 1e-10);
        }
    }

    #[test]
    fn handles_real_matrices_with_complex_pairs() {
        // rotation generator has eigenvalues +-i
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 2.0].map(|v| Complex64::new(v, 0.0)),
        );
        let s = Schur::new(&a).unwrap();
        check(&a, &s);
        let mut ev = s.eigenvalues();
        ev.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        assert!((ev[0] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((ev[2] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn reorder_preserves_decomposition() {
        let a = random(12, 9);
        let mut s = Schur::new(&a).unwrap();
        let before = s.eigenvalues();
        s.reorder(&[7, 3, 11]);
        check(&a, &s);
        let after = s.eigenvalues();
        assert!((after[0] - before[7]).norm() < 1e-12);
        assert!((after[1] - before[3]).norm() < 1e-12);
        assert!((after[2] - before[11]).norm() < 1e-12);
    }

    #[test]
    fn triangular_eigenvectors_are_eigenvectors() {
        let a = random(10, 11);
        let s = Schur::new(&a).unwrap();
        for p in 0..10 {
            let y = nalgebra::DVector::from_vec(s.triangular_eigenvector(p));
            let x = &s.q * y;
            let r = &a * &x - &x * s.t[(p, p)];
            assert!(r.norm() < 1e-11, "p = {p}: {}", r.norm());
        }
    }
}
