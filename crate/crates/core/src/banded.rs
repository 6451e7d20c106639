//! Direct LU factorization of complex banded matrices with partial pivoting.
//!
//! Row `r` stores columns `r - kl ..= r + kl + ku`; the extra `kl`
//! superdiagonals hold fill-in created by row interchanges.

use num_complex::Complex64;
use thiserror::Error;

use crate::sparse::CsrMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum BandedError {
    #[error("matrix is not square ({0} x {1})")]
    NotSquare(usize, usize),
    #[error("zero pivot at row {row}: matrix is numerically singular")]
    Singular { row: usize },
    #[error("right-hand side has length {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<Complex64>,
    multipliers: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Factors `a`, using its own sparsity pattern to size the band.
    pub fn factor(a: &CsrMatrix) -> Result<Self, BandedError> {
        if a.nrows != a.ncols {
            return Err(BandedError::NotSquare(a.nrows, a.ncols));
        }
        let (kl, ku) = a.bandwidths();
        let n = a.nrows;
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            data: vec![Complex64::new(0.0, 0.0); n * width],
            multipliers: vec![Complex64::new(0.0, 0.0); n * kl],
            pivots: vec![0; n],
        };
        for r in 0..n {
            for (c, v) in a.row(r) {
                *lu.at_mut(r, c) = v;
            }
        }
        lu.eliminate(a.max_abs())?;
        Ok(lu)
    }

    #[inline]
    fn pos(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c + self.kl < r + self.width);
        r * self.width + (c + self.kl - r)
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[self.pos(r, c)]
    }

    #[inline]
    fn at_mut(&mut self, r: usize, c: usize) -> &mut Complex64 {
        let p = self.pos(r, c);
        &mut self.data[p]
    }

    fn eliminate(&mut self, scale: f64) -> Result<(), BandedError> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let tiny = 1e-15 * scale.max(f64::MIN_POSITIVE);
        for i in 0..n {
            let last_row = (i + kl).min(n - 1);
            let last_col = (i + kl + ku).min(n - 1);
            let mut p = i;
            let mut best = self.at(i, i).norm();
            for r in i + 1..=last_row {
                let v = self.at(r, i).norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > tiny) {
                return Err(BandedError::Singular { row: i });
            }
            self.pivots[i] = p;
            if p != i {
                for c in i..=last_col {
                    let (a, b) = (self.pos(i, c), self.pos(p, c));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.at(i, i);
            let inv = pivot.inv();
            let row_start = self.pos(i, i);
            for r in i + 1..=last_row {
                let m = self.at(r, i) * inv;
                self.multipliers[i * kl + (r - i - 1)] = m;
                *self.at_mut(r, i) = Complex64::new(0.0, 0.0);
                if m == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let dst = self.pos(r, i);
                for off in 1..=(last_col - i) {
                    let u = self.data[row_start + off];
                    self.data[dst + off] -= m * u;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ratio of the smallest to the largest pivot magnitude.
    pub fn min_pivot_ratio(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..self.n {
            let v = self.at(i, i).norm();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi == 0.0 {
            0.0
        } else {
            lo / hi
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>, BandedError> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [Complex64]) -> Result<(), BandedError> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        if x.len() != n {
            return Err(BandedError::Dimension {
                got: x.len(),
                expected: n,
            });
        }
        for i in 0..n {
            let p = self.pivots[i];
            if p != i {
                x.swap(i, p);
            }
            let xi = x[i];
            let last_row = (i + kl).min(n - 1);
            for r in i + 1..=last_row {
                x[r] -= self.multipliers[i * kl + (r - i - 1)] * xi;
            }
        }
        for i in (0..n).rev() {
            let last_col = (i + kl + ku).min(n - 1);
            let start = self.pos(i, i);
            let mut acc = x[i];
            for off in 1..=(last_col - i) {
                acc -= self.data[start + off] * x[i + off];
            }
            x[i] = acc / self.data[start];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn needs_pivoting() {
        // zero leading entry forces a row interchange
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[
                (0, 1, c(1.0, 0.0)),
                (1, 0, c(2.0, 0.0)),
                (1, 1, c(1.0, 1.0)),
                (1, 2, c(1.0, 0.0)),
                (2, 1, c(3.0, 0.0)),
                (2, 2, c(1.0, 0.0)),
            ],
        );
        let lu = BandedLu::factor(&a).unwrap();
        let b = vec![c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 0.5)];
        let x = lu.solve(&b).unwrap();
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            &[
                (0, 0, c(1.0, 0.0)),
                (0, 1, c(2.0, 0.0)),
                (1, 0, c(2.0, 0.0)),
                (1, 1, c(4.0, 0.0)),
            ],
        );
        assert!(matches!(
            BandedLu::factor(&a),
            Err(BandedError::Singular { .. })
        ));
    }

    proptest! {
        #[test]
        fn solves_random_banded_systems(
            n in 2usize..40,
            kl in 0usize..5,
            ku in 0usize..5,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut trips = Vec::new();
            for r in 0..n {
                for cidx in r.saturating_sub(kl)..(r + ku + 1).min(n) {
                    let v = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    // diagonal boost keeps the system well conditioned
                    let v = if r == cidx { v + c(4.0, 0.0) } else { v };
                    trips.push((r, cidx, v));
                }
            }
            let a = CsrMatrix::from_triplets(n, n, &trips);
            let b: Vec<Complex64> = (0..n).map(|i| c(i as f64, 1.0)).collect();
            let x = BandedLu::factor(&a).unwrap().solve(&b).unwrap();
            let r = a.mul_vec(&x);
            for (ri, bi) in r.iter().zip(&b) {
                prop_assert!((ri - bi).norm() < 1e-10 * (1.0 + bi.norm()));
            }
        }
    }
}
