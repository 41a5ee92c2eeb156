//! Dense linear-algebra kernels shared by the model, reduction and norm code.

mod eig;
mod lu;
mod orth;
mod svd;

pub use eig::{eigenvalues_complex, eigenvalues_real};
pub use lu::ComplexLu;
pub use orth::{orthonormalize_against, OrthStatus};
pub use svd::{singular_triplets, SingularTriplets};

use nalgebra::{Complex, ComplexField, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const I: C64 = Complex { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// `|re| + |im|`, the cheap modulus used in deflation tests.
#[inline]
pub(crate) fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

#[inline]
pub fn modulus(z: C64) -> f64 {
    z.modulus()
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Complex::new(x, 0.0))
}

pub fn to_complex_vec(v: &RVec) -> CVec {
    v.map(|x| Complex::new(x, 0.0))
}

/// Largest absolute entry.
pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Largest absolute entry of `m - mᵀ`.
pub fn asymmetry(m: &RMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn norm1_complex(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn norm2_vec(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectral norm via the largest singular value.
pub fn norm2_complex(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    singular_triplets(m).values[0]
}
