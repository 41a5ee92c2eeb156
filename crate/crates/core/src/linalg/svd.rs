use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, SVD};

use super::{CMat, CVec};

/// Singular values in decreasing order with matching left/right vectors.
///
/// The phase of each pair is fixed so that the largest-modulus entry of the
/// right vector is real and positive; `vᴴ F u = σ` then holds with σ real.
#[derive(Debug, Clone)]
pub struct SingularTriplets {
    pub values: Vec<f64>,
    /// Left singular vectors (columns), length ℓ each.
    pub left: CMat,
    /// Right singular vectors (columns), length m each.
    pub right: CMat,
}

impl SingularTriplets {
    pub fn sigma_max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn second(&self) -> f64 {
        self.values.get(1).copied().unwrap_or(0.0)
    }

    pub fn left_vec(&self, i: usize) -> CVec {
        self.left.column(i).into_owned()
    }

    pub fn right_vec(&self, i: usize) -> CVec {
        self.right.column(i).into_owned()
    }
}

pub fn singular_triplets(m: &CMat) -> SingularTriplets {
    let (rows, cols) = m.shape();
    let r = rows.min(cols);
    if r == 1 && rows == 1 && cols == 1 {
        let z = m[(0, 0)];
        let s = z.modulus();
        let left = if s > 0.0 { z / s } else { Complex::new(1.0, 0.0) };
        return SingularTriplets {
            values: alloc::vec![s],
            left: CMat::from_element(1, 1, left),
            right: CMat::from_element(1, 1, Complex::new(1.0, 0.0)),
        };
    }
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut left = CMat::zeros(rows, r);
    let mut right = CMat::zeros(cols, r);
    let mut values = Vec::with_capacity(r);
    for (dst, &src) in order.iter().enumerate() {
        values.push(svd.singular_values[src]);
        let rv: CVec = v_t.row(src).adjoint();
        let lv: CVec = u.column(src).into_owned();
        let (mut best, mut idx) = (-1.0, 0);
        for (i, z) in rv.iter().enumerate() {
            let a = z.modulus();
            if a > best * (1.0 + 1e-12) {
                best = a;
                idx = i;
            }
        }
        let phase = if best > 0.0 { rv[idx].conj() / best } else { Complex::new(1.0, 0.0) };
        right.set_column(dst, &(rv * phase));
        left.set_column(dst, &(lv * phase));
    }
    SingularTriplets { values, left, right }
}
