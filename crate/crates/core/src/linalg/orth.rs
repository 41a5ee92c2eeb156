use nalgebra::Complex;

use super::{norm2_vec, CMat, CVec};

#[derive(Debug, Clone, PartialEq)]
pub enum OrthStatus {
    /// Unit-norm component orthogonal to the basis.
    Accepted(CVec),
    /// Residual fell below the rank tolerance.
    Dependent { residual: f64 },
}

/// Modified Gram–Schmidt of `v` against the orthonormal columns of `basis`,
/// with one reorthogonalization pass. `v` counts as dependent when the
/// remaining norm is below `tol * reference_norm`.
pub fn orthonormalize_against(basis: &CMat, v: &CVec, reference_norm: f64, tol: f64) -> OrthStatus {
    let mut w = v.clone();
    for _pass in 0..2 {
        for j in 0..basis.ncols() {
            let q = basis.column(j);
            let mut h = Complex::new(0.0, 0.0);
            for (qi, wi) in q.iter().zip(w.iter()) {
                h += qi.conj() * wi;
            }
            for (wi, qi) in w.iter_mut().zip(q.iter()) {
                *wi -= h * qi;
            }
        }
    }
    let residual = norm2_vec(&w);
    let scale = if reference_norm > 0.0 { reference_norm } else { norm2_vec(v) };
    if !(residual > tol * scale) || residual == 0.0 {
        return OrthStatus::Dependent {
            residual: if scale > 0.0 { residual / scale } else { 0.0 },
        };
    }
    w.unscale_mut(residual);
    OrthStatus::Accepted(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn dependent_vector_is_rejected() {
        let basis = CMat::from_column_slice(3, 1, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let v = CVec::from_vec(vec![c(0.0, 2.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(orthonormalize_against(&basis, &v, 2.0, 1e-10), OrthStatus::Dependent { .. }));
        let u = CVec::from_vec(vec![c(1.0, 0.0), c(1.0, 1.0), c(0.0, 0.0)]);
        match orthonormalize_against(&basis, &u, 1.0, 1e-10) {
            OrthStatus::Accepted(q) => {
                assert!((norm2_vec(&q) - 1.0).abs() < 1e-15);
                assert!(q[0].norm_sqr() < 1e-30);
            }
            other => panic!("{other:?}"),
        }
    }
}
