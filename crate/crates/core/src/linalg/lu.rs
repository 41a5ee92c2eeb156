use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField};

use super::{CMat, CVec, C64};

/// LU factorization with partial pivoting of a square complex matrix,
/// stored in place (unit lower triangle below the diagonal, upper triangle on and above).
#[derive(Debug, Clone)]
pub struct ComplexLu {
    lu: CMat,
    perm: Vec<usize>,
    norm1: f64,
}

impl ComplexLu {
    /// Factors `a`. Returns `None` when an exactly zero pivot is met.
    pub fn factor(mut a: CMat) -> Option<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU of a non-square matrix");
        let norm1 = super::norm1_complex(&a);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut piv = k;
            let mut best = a[(k, k)].modulus();
            for i in (k + 1)..n {
                let v = a[(i, k)].modulus();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 {
                return None;
            }
            if piv != k {
                a.swap_rows(k, piv);
                perm.swap(k, piv);
            }
            let inv = Complex::new(1.0, 0.0) / a[(k, k)];
            for i in (k + 1)..n {
                a[(i, k)] *= inv;
            }
            for j in (k + 1)..n {
                let akj = a[(k, j)];
                if akj.re == 0.0 && akj.im == 0.0 {
                    continue;
                }
                for i in (k + 1)..n {
                    let lik = a[(i, k)];
                    a[(i, j)] -= lik * akj;
                }
            }
        }
        Some(Self { lu: a, perm, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// 1-norm of the factored matrix.
    pub fn norm1(&self) -> f64 {
        self.norm1
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.dim();
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj.re == 0.0 && xj.im == 0.0 {
                continue;
            }
            for i in (j + 1)..n {
                x[i] -= self.lu[(i, j)] * xj;
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.lu[(j, j)];
            let xj = x[j];
            for i in 0..j {
                x[i] -= self.lu[(i, j)] * xj;
            }
        }
        b.copy_from_slice(&x);
    }

    /// Solves `Aᴴ x = b` in place.
    pub fn solve_adjoint_in_place(&self, b: &mut [C64]) {
        let n = self.dim();
        // Uᴴ z = b
        let mut z = b.to_vec();
        for j in 0..n {
            let mut s = z[j];
            for i in 0..j {
                s -= self.lu[(i, j)].conj() * z[i];
            }
            z[j] = s / self.lu[(j, j)].conj();
        }
        // Lᴴ w = z
        for j in (0..n).rev() {
            let mut s = z[j];
            for i in (j + 1)..n {
                s -= self.lu[(i, j)].conj() * z[i];
            }
            z[j] = s;
        }
        // x = Pᵀ w
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = z[k];
        }
    }

    pub fn solve_vec(&self, b: &CVec) -> CVec {
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }

    pub fn solve_adjoint_vec(&self, b: &CVec) -> CVec {
        let mut x = b.clone();
        self.solve_adjoint_in_place(x.as_mut_slice());
        x
    }

    pub fn solve(&self, b: &CMat) -> CMat {
        let mut x = b.clone();
        for j in 0..x.ncols() {
            let mut col: Vec<C64> = x.column(j).iter().copied().collect();
            self.solve_in_place(&mut col);
            x.column_mut(j).copy_from_slice(&col);
        }
        x
    }

    pub fn solve_adjoint(&self, b: &CMat) -> CMat {
        let mut x = b.clone();
        for j in 0..x.ncols() {
            let mut col: Vec<C64> = x.column(j).iter().copied().collect();
            self.solve_adjoint_in_place(&mut col);
            x.column_mut(j).copy_from_slice(&col);
        }
        x
    }

    /// Hager–Higham estimate of `‖A⁻¹‖₁`.
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let mut x = vec![Complex::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for iter in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(&mut y);
            let ynorm: f64 = y.iter().map(|z| z.modulus()).sum();
            if iter > 0 && ynorm <= est {
                break;
            }
            est = ynorm;
            let mut xi: Vec<C64> = y
                .iter()
                .map(|z| {
                    let m = z.modulus();
                    if m == 0.0 {
                        Complex::new(1.0, 0.0)
                    } else {
                        *z / m
                    }
                })
                .collect();
            self.solve_adjoint_in_place(&mut xi);
            let (j, zmax) = xi
                .iter()
                .enumerate()
                .map(|(i, z)| (i, z.modulus()))
                .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let ztx: f64 = xi.iter().zip(x.iter()).map(|(a, b)| (a.conj() * b).re).sum();
            if iter > 0 && (zmax <= ztx || j == last_j) {
                break;
            }
            last_j = j;
            x.iter_mut().for_each(|v| *v = Complex::new(0.0, 0.0));
            x[j] = Complex::new(1.0, 0.0);
        }
        // Higham's alternating-sign safeguard.
        let mut alt: Vec<C64> = (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let mag = if n > 1 { 1.0 + i as f64 / (n - 1) as f64 } else { 1.0 };
                Complex::new(sign * mag, 0.0)
            })
            .collect();
        self.solve_in_place(&mut alt);
        let alt_est = 2.0 * alt.iter().map(|z| z.modulus()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt_est)
    }

    /// Reciprocal 1-norm condition number estimate.
    pub fn rcond(&self) -> f64 {
        let inv = self.inverse_norm1_estimate();
        if self.norm1 == 0.0 || inv == 0.0 || !inv.is_finite() {
            return 0.0;
        }
        1.0 / (self.norm1 * inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn sample(n: usize, seed: u64) -> CMat {
        let mut s = seed;
        CMat::from_fn(n, n, |i, j| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            c(a + if i == j { 2.0 } else { 0.0 }, b)
        })
    }

    #[test]
    fn solves_and_adjoint_solves_match_dense_products() {
        let a = sample(12, 3);
        let lu = ComplexLu::factor(a.clone()).unwrap();
        let b = CVec::from_fn(12, |i, _| c(i as f64, 1.0 - i as f64));
        let x = lu.solve_vec(&b);
        assert!((&a * &x - &b).norm() < 1e-12 * b.norm());
        let y = lu.solve_adjoint_vec(&b);
        assert!((a.adjoint() * &y - &b).norm() < 1e-12 * b.norm());
    }

    #[test]
    fn rcond_tracks_true_condition_number() {
        let a = sample(10, 7);
        let lu = ComplexLu::factor(a.clone()).unwrap();
        let inv = a.clone().try_inverse().unwrap();
        let exact = 1.0 / (crate::linalg::norm1_complex(&a) * crate::linalg::norm1_complex(&inv));
        let est = lu.rcond();
        // The estimator is a lower bound on ‖A⁻¹‖₁, so rcond is an upper bound, usually tight.
        assert!(est >= exact * (1.0 - 1e-12));
        assert!(est <= 10.0 * exact);
    }

    #[test]
    fn singular_matrix_reports_tiny_rcond_or_none() {
        let mut a = sample(5, 11);
        let r0: CVec = a.row(0).transpose();
        a.set_row(4, &(r0 * c(2.0, 0.0)).transpose());
        match ComplexLu::factor(a) {
            None => {}
            Some(lu) => assert!(lu.rcond() < 1e-14),
        }
    }
}
