//! Symmetric banded storage and a banded Cholesky factorization.
//!
//! Only the lower band is stored, row-major: entry `A(k, k - d)` for
//! `d = 0..=bw` lives at `data[k * (bw + 1) + d]`. Rows may be a permutation
//! of the caller's ordering; `perm[k]` is the caller's index of banded row `k`.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
    perm: Option<Vec<usize>>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bw: usize) -> BandedMatrix {
        BandedMatrix {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
            perm: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Sets A(k, k - d) (and by symmetry A(k - d, k)) in banded ordering.
    pub fn set(&mut self, k: usize, d: usize, value: f64) {
        debug_assert!(d <= self.bw && d <= k);
        self.data[k * (self.bw + 1) + d] = value;
    }

    pub fn get(&self, k: usize, d: usize) -> f64 {
        self.data[k * (self.bw + 1) + d]
    }

    pub fn set_permutation(&mut self, perm: Vec<usize>) {
        assert_eq!(perm.len(), self.n);
        self.perm = Some(perm);
    }

    /// Dense copy in the caller's ordering (tests and small problems only).
    pub fn to_dense_original_order(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        let idx = |k: usize| self.perm.as_ref().map_or(k, |p| p[k]);
        for k in 0..self.n {
            for d in 0..=self.bw.min(k) {
                let v = self.get(k, d);
                m[(idx(k), idx(k - d))] = v;
                m[(idx(k - d), idx(k))] = v;
            }
        }
        m
    }

    /// Cholesky factor of A − shift·I. Fails unless the shifted matrix is positive definite.
    pub fn cholesky_shifted(&self, shift: f64) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut l = self.data.clone();
        for i in 0..n {
            l[i * w] -= shift;
        }
        for i in 0..n {
            let kmin_i = i.saturating_sub(bw);
            for j in kmin_i..=i {
                let len = j - kmin_i;
                let s = {
                    let ri = &l[i * w + (i - j + 1)..i * w + (i - j + 1) + len];
                    let rj = &l[j * w + 1..j * w + 1 + len];
                    dot(ri, rj)
                };
                let aij = l[i * w + (i - j)] - s;
                if i == j {
                    if !(aij > 0.0) {
                        return Err(Error::Numeric(format!(
                            "shifted matrix not positive definite at row {i} (pivot {aij:.3e}, shift {shift})"
                        )));
                    }
                    l[i * w] = aij.sqrt();
                } else {
                    l[i * w + (i - j)] = aij / l[j * w];
                }
            }
        }
        // Reverse each row's off-diagonal part so that row i holds
        // L(i, kmin..i) in ascending column order for the triangular solves.
        for i in 0..n {
            let len = i - i.saturating_sub(bw);
            l[i * w + 1..i * w + 1 + len].reverse();
        }
        Ok(BandedCholesky {
            n,
            bw,
            l,
            perm: self.perm.clone(),
        })
    }
}

/// Dot product with independent partial sums so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// L Lᵀ factor; row i stores L(i, i) followed by L(i, kmin..i) ascending.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
    perm: Option<Vec<usize>>,
}

impl BandedCholesky {
    /// x = (L Lᵀ)⁻¹ b, both in the caller's ordering. `work` must have length n.
    pub fn solve(&self, b: &[f64], x: &mut [f64], work: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        match &self.perm {
            Some(p) => {
                for k in 0..n {
                    work[k] = b[p[k]];
                }
            }
            None => work.copy_from_slice(b),
        }
        // forward: L y = b
        for i in 0..n {
            let kmin = i.saturating_sub(bw);
            let len = i - kmin;
            let row = &self.l[i * w + 1..i * w + 1 + len];
            work[i] = (work[i] - dot(row, &work[kmin..i])) / self.l[i * w];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let xi = work[i] / self.l[i * w];
            work[i] = xi;
            let kmin = i.saturating_sub(bw);
            let len = i - kmin;
            let row = &self.l[i * w + 1..i * w + 1 + len];
            for (wv, lv) in work[kmin..i].iter_mut().zip(row) {
                *wv -= lv * xi;
            }
        }
        match &self.perm {
            Some(p) => {
                for k in 0..n {
                    x[p[k]] = work[k];
                }
            }
            None => x.copy_from_slice(work),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd_band(n: usize, bw: usize) -> BandedMatrix {
        let mut m = BandedMatrix::zeros(n, bw);
        for k in 0..n {
            m.set(k, 0, 4.0 + (k % 3) as f64);
            for d in 1..=bw.min(k) {
                m.set(k, d, -0.5 / d as f64);
            }
        }
        m
    }

    #[test]
    fn cholesky_solve_matches_dense() {
        for (n, bw) in [(12, 3), (9, 1), (20, 6)] {
            let m = spd_band(n, bw);
            let dense = m.to_dense_original_order();
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
            let f = m.cholesky_shifted(0.5).unwrap();
            let mut x = vec![0.0; n];
            let mut w = vec![0.0; n];
            f.solve(&b, &mut x, &mut w);
            let shifted = dense - nalgebra::DMatrix::identity(n, n) * 0.5;
            let r = shifted * nalgebra::DVector::from_vec(x) - nalgebra::DVector::from_vec(b);
            assert!(r.amax() < 1e-12, "residual {}", r.amax());
        }
    }

    #[test]
    fn permuted_solve() {
        let n = 10;
        let mut m = spd_band(n, 2);
        let perm: Vec<usize> = (0..n).rev().collect();
        m.set_permutation(perm);
        let dense = m.to_dense_original_order();
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let f = m.cholesky_shifted(0.0).unwrap();
        let (mut x, mut w) = (vec![0.0; n], vec![0.0; n]);
        f.solve(&b, &mut x, &mut w);
        let r = dense * nalgebra::DVector::from_vec(x) - nalgebra::DVector::from_vec(b);
        assert!(r.amax() < 1e-12);
    }

    #[test]
    fn indefinite_shift_rejected() {
        let m = spd_band(8, 2);
        assert!(matches!(m.cholesky_shifted(100.0), Err(Error::Numeric(_))));
    }
}
