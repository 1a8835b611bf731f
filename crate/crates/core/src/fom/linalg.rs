//! Banded LU factorization with partial pivoting for the block-tridiagonal
//! Newton systems (LAPACK gbtrf/gbtrs layout, unblocked).

/// Band matrix with `kl` sub- and `ku` super-diagonals. Storage includes
/// `kl` extra super-diagonals for pivoting fill-in; element `(i, j)` lives
/// at row `kl + ku + i - j` of column `j`.
#[derive(Debug, Clone)]
pub(crate) struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Column-major band storage, `(2 kl + ku + 1) x n`.
    data: Vec<f64>,
    rows: usize,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let rows = 2 * kl + ku + 1;
        Self { n, kl, ku, data: vec![0.0; rows * n], rows }
    }

    pub fn reset(&mut self) {
        self.data.fill(0.0);
    }

    #[inline]
    fn idx(&self, band_row: usize, col: usize) -> usize {
        col * self.rows + band_row
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i.max(j) - i.min(j) <= self.kl.max(self.ku));
        let r = self.kl + self.ku + i - j;
        let idx = self.idx(r, j);
        self.data[idx] = value;
    }

    #[inline]
    fn at(&self, band_row: usize, col: usize) -> f64 {
        self.data[self.idx(band_row, col)]
    }

    #[inline]
    fn at_mut(&mut self, band_row: usize, col: usize) -> &mut f64 {
        let idx = self.idx(band_row, col);
        &mut self.data[idx]
    }

    /// In-place LU factorization with partial pivoting. Returns the pivot
    /// vector or `None` on exact singularity.
    pub fn factorize(&mut self) -> Option<Vec<usize>> {
        let n = self.n;
        let kl = self.kl;
        let kv = self.kl + self.ku;
        let mut pivots = vec![0usize; n];
        let mut ju = 0usize;

        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // Pivot search in column j, rows j..=j+km (band rows kv..=kv+km).
            let mut jp = 0;
            let mut best = self.at(kv, j).abs();
            for k in 1..=km {
                let v = self.at(kv + k, j).abs();
                if v > best {
                    best = v;
                    jp = k;
                }
            }
            pivots[j] = j + jp;
            let pivot = self.at(kv + jp, j);
            if pivot == 0.0 || !pivot.is_finite() {
                return None;
            }
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                // Swap rows j and j+jp across columns j..=ju.
                for jj in j..=ju {
                    let a = self.idx(kv + jp + j - jj, jj);
                    let b = self.idx(kv + j - jj, jj);
                    self.data.swap(a, b);
                }
            }
            if km > 0 {
                let inv = 1.0 / self.at(kv, j);
                for k in 1..=km {
                    *self.at_mut(kv + k, j) *= inv;
                }
                for jj in (j + 1)..=ju {
                    let u = self.at(kv + j - jj, jj);
                    if u != 0.0 {
                        for k in 1..=km {
                            let l = self.at(kv + k, j);
                            *self.at_mut(kv + k + j - jj, jj) -= l * u;
                        }
                    }
                }
            }
        }
        Some(pivots)
    }

    /// Solves `A x = b` in place using a previous [`Self::factorize`].
    pub fn solve(&self, pivots: &[usize], b: &mut [f64]) {
        let n = self.n;
        let kl = self.kl;
        let kv = self.kl + self.ku;
        // Forward elimination with row swaps.
        for j in 0..n {
            let p = pivots[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            for k in 1..=km {
                b[j + k] -= self.at(kv + k, j) * b[j];
            }
        }
        // Back substitution with the banded U.
        for j in (0..n).rev() {
            b[j] /= self.at(kv, j);
            let start = j.saturating_sub(kv);
            for i in start..j {
                b[i] -= self.at(kv + i - j, j) * b[j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(n: usize, kl: usize, ku: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let within = j + kl >= i && i + ku >= j;
                if within {
                    a[(i, j)] = rng.gen_range(-1.0..1.0);
                }
            }
            // Keep it comfortably nonsingular.
            a[(i, i)] += 3.0_f64.copysign(a[(i, i)]);
        }
        a
    }

    #[test]
    fn matches_dense_lu_on_random_banded_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for &(n, kl, ku) in &[(5usize, 1usize, 1usize), (16, 3, 2), (40, 7, 7), (160, 7, 7)] {
            let dense = random_banded(n, kl, ku, &mut rng);
            let b = DVector::from_fn(n, |i, _| (i as f64 * 0.37).sin());

            let mut banded = BandedMatrix::zeros(n, kl, ku);
            for i in 0..n {
                for j in 0..n {
                    if dense[(i, j)] != 0.0 {
                        banded.set(i, j, dense[(i, j)]);
                    }
                }
            }
            let pivots = banded.factorize().expect("nonsingular");
            let mut x = b.as_slice().to_vec();
            banded.solve(&pivots, &mut x);

            let x_ref = dense.clone().lu().solve(&b).expect("dense solve");
            for i in 0..n {
                assert!(
                    (x[i] - x_ref[i]).abs() < 1e-9 * (1.0 + x_ref[i].abs()),
                    "n={n} kl={kl} ku={ku} i={i}: {} vs {}",
                    x[i],
                    x_ref[i]
                );
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] requires a row swap.
        let mut m = BandedMatrix::zeros(3, 1, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 0.0);
        m.set(1, 2, 2.0);
        m.set(2, 1, 3.0);
        m.set(2, 2, 1.0);
        m.set(0, 0, 0.0);
        let pivots = m.factorize().expect("solvable with pivoting");
        // A = [[0,1,0],[1,0,2],[0,3,1]], b = [1, 3, 5] -> x = ?
        // From row1: y = 1. Row2: x + 2z = 3. Row3: 3y + z = 5 -> z = 2 -> x = -1.
        let mut b = vec![1.0, 3.0, 5.0];
        m.solve(&pivots, &mut b);
        assert!((b[0] + 1.0).abs() < 1e-12);
        assert!((b[1] - 1.0).abs() < 1e-12);
        assert!((b[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_detected() {
        let mut m = BandedMatrix::zeros(3, 1, 1);
        // Column of zeros.
        m.set(0, 0, 1.0);
        m.set(2, 2, 1.0);
        assert!(m.factorize().is_none());
    }
}
