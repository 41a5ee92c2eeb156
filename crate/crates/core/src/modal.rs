//! Modal coordinates, critical damping and the pole-dominance heuristic for
//! initial interpolation frequencies.

use alloc::vec::Vec;

use nalgebra::{Cholesky, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{RMat, RVec};
use crate::model::{check_symmetric, GainVector, VibrationalSystem};

/// Floor applied to real-part estimates before division.
pub const RE_ESTIMATE_FLOOR: f64 = 1e-30;

/// Mass-normalized modes, natural frequencies sorted decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalData {
    pub phi: RMat,
    pub omega: RVec,
}

/// Solves `K φ = ω² M φ` with `ΦᵀMΦ = I`.
pub fn modal_transform(mass: &RMat, stiffness: &RMat) -> Result<ModalData> {
    let n = mass.nrows();
    if !mass.is_square() || stiffness.shape() != (n, n) {
        return Err(Error::Dimension { what: "stiffness", expected: n, actual: stiffness.nrows() });
    }
    check_symmetric("mass", mass)?;
    check_symmetric("stiffness", stiffness)?;
    let l = Cholesky::new(mass.clone()).ok_or(Error::NotPositiveDefinite { what: "mass" })?.unpack();
    let linv = l.clone().solve_lower_triangular(&RMat::identity(n, n)).ok_or(Error::Singular)?;
    let mut s = &linv * stiffness * linv.transpose();
    s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps eigensolver order on ties.
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(core::cmp::Ordering::Equal));
    let mut omega = RVec::zeros(n);
    let mut u = RMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let lam = eig.eigenvalues[i];
        if !(lam > 0.0) {
            return Err(Error::NotPositiveDefinite { what: "stiffness" });
        }
        omega[k] = lam.sqrt();
        u.set_column(k, &eig.eigenvectors.column(i));
    }
    let phi = linv.transpose() * u;
    Ok(ModalData { phi, omega })
}

/// `2 M Φ diag(Ω) Φᵀ M`.
pub fn critical_damping(mass: &RMat, stiffness: &RMat) -> Result<RMat> {
    let md = modal_transform(mass, stiffness)?;
    let mut scaled = md.phi.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= md.omega[j];
    }
    let c = mass * scaled * md.phi.transpose() * mass * 2.0;
    Ok((&c + c.transpose()) * 0.5)
}

/// `½ ωᵢ⁻¹ ‖H₁φᵢ‖₂ ‖E₂ᵀφᵢ‖₂`.
pub fn undamped_residue_norms(md: &ModalData, output_map: &RMat, input_map: &RMat) -> Result<RVec> {
    let n = md.phi.nrows();
    if output_map.ncols() != n {
        return Err(Error::Dimension { what: "output_map columns", expected: n, actual: output_map.ncols() });
    }
    if input_map.nrows() != n {
        return Err(Error::Dimension { what: "input_map rows", expected: n, actual: input_map.nrows() });
    }
    let hp = output_map * &md.phi;
    let ep = input_map.transpose() * &md.phi;
    Ok(RVec::from_fn(n, |i, _| 0.5 / md.omega[i] * hp.column(i).norm() * ep.column(i).norm()))
}

/// `½ φᵢᵀ C φᵢ`, first-order estimates of `|Re λᵢ±|`.
pub fn real_part_estimates(md: &ModalData, damping: &RMat) -> RVec {
    let cp = damping * &md.phi;
    RVec::from_fn(md.phi.ncols(), |i, _| (0.5 * md.phi.column(i).dot(&cp.column(i))).max(0.0))
}

/// Per-mode dominance data, rows in modal order.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceTable {
    pub omega: Vec<f64>,
    pub residue_norm: Vec<f64>,
    pub re_estimate: Vec<f64>,
    pub score: Vec<f64>,
    /// `rank[i]` is the position of mode i after sorting scores descending.
    pub rank: Vec<usize>,
    /// Mode indices sorted by score descending.
    pub order: Vec<usize>,
}

/// Selected initial frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialFrequencies {
    pub omegas: Vec<f64>,
    /// Some selected mode had a zero real-part estimate with nonzero residue.
    pub infinite_dominance: bool,
}

/// Caches the gain-independent modal quantities of a system.
#[derive(Debug, Clone)]
pub struct DominanceEstimator {
    modal: ModalData,
    residues: RVec,
    /// `φᵢᵀ C_int φᵢ`.
    internal: RVec,
    /// `(bⱼᵀ φᵢ)²`, i over rows, j over columns.
    damper_weights: RMat,
}

impl DominanceEstimator {
    pub fn new(sys: &VibrationalSystem) -> Result<Self> {
        let modal = modal_transform(sys.mass(), sys.stiffness())?;
        let residues = undamped_residue_norms(&modal, sys.output_map(), sys.input_map())?;
        let internal = real_part_estimates(&modal, sys.internal_damping()) * 2.0;
        let bp = sys.damper_geometry().transpose() * &modal.phi;
        let damper_weights = RMat::from_fn(modal.phi.ncols(), bp.nrows(), |i, j| bp[(j, i)] * bp[(j, i)]);
        Ok(Self { modal, residues, internal, damper_weights })
    }

    pub fn modal(&self) -> &ModalData {
        &self.modal
    }

    pub fn table(&self, gains: &GainVector) -> Result<DominanceTable> {
        let p = self.damper_weights.ncols();
        if gains.len() != p {
            return Err(Error::Dimension { what: "gains", expected: p, actual: gains.len() });
        }
        let n = self.residues.len();
        let g = RVec::from_column_slice(gains.as_slice());
        let re_estimate: Vec<f64> =
            (0..n).map(|i| 0.5 * (self.internal[i] + self.damper_weights.row(i).transpose().dot(&g))).collect();
        let score: Vec<f64> =
            (0..n).map(|i| self.residues[i] / re_estimate[i].max(RE_ESTIMATE_FLOOR)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| score[b].partial_cmp(&score[a]).unwrap_or(core::cmp::Ordering::Equal));
        let mut rank = alloc::vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            rank[i] = pos;
        }
        Ok(DominanceTable {
            omega: self.modal.omega.iter().copied().collect(),
            residue_norm: self.residues.iter().copied().collect(),
            re_estimate,
            score,
            rank,
            order,
        })
    }

    /// The ωᵢ of the `count` highest dominance scores at gains `g`.
    pub fn initial_frequencies(&self, gains: &GainVector, count: usize) -> Result<InitialFrequencies> {
        let n = self.residues.len();
        if count > n {
            return Err(Error::InvalidConfig(alloc::format!("count {count} exceeds dimension {n}")));
        }
        let t = self.table(gains)?;
        let chosen = &t.order[..count];
        let infinite_dominance =
            chosen.iter().any(|&i| t.re_estimate[i] <= RE_ESTIMATE_FLOOR && t.residue_norm[i] > 0.0);
        if infinite_dominance {
            log::warn!("zero real-part estimate for a mode with nonzero residue");
        }
        Ok(InitialFrequencies { omegas: chosen.iter().map(|&i| t.omega[i]).collect(), infinite_dominance })
    }
}

/// One-shot version of [`DominanceEstimator::initial_frequencies`].
pub fn initial_frequencies(sys: &VibrationalSystem, gains: &GainVector, count: usize) -> Result<InitialFrequencies> {
    DominanceEstimator::new(sys)?.initial_frequencies(gains, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pair_sorted_decreasing() {
        let md = modal_transform(&RMat::identity(2, 2), &RMat::from_diagonal(&RVec::from_vec(alloc::vec![4.0, 1.0])))
            .unwrap();
        assert!((md.omega[0] - 2.0).abs() < 1e-14 && (md.omega[1] - 1.0).abs() < 1e-14);
        assert!((md.phi[(0, 0)].abs() - 1.0).abs() < 1e-14 && md.phi[(1, 0)].abs() < 1e-14);
    }

    #[test]
    fn scalar_mass_normalization() {
        let md = modal_transform(&RMat::from_element(1, 1, 4.0), &RMat::from_element(1, 1, 9.0)).unwrap();
        assert!((md.phi[(0, 0)].abs() - 0.5).abs() < 1e-15);
        assert!((md.omega[0] - 1.5).abs() < 1e-15);
        let c = critical_damping(&RMat::from_element(1, 1, 4.0), &RMat::from_element(1, 1, 9.0)).unwrap();
        assert!((c[(0, 0)] - 12.0).abs() < 1e-12);
    }

    #[test]
    fn identity_critical_damping() {
        let c = critical_damping(&RMat::identity(3, 3), &RMat::identity(3, 3)).unwrap();
        assert!((c - RMat::identity(3, 3) * 2.0).amax() < 1e-14);
    }

    #[test]
    fn scalar_residue_and_real_part() {
        let one = RMat::from_element(1, 1, 1.0);
        let md = modal_transform(&one, &one).unwrap();
        let r = undamped_residue_norms(&md, &one, &one).unwrap();
        assert!((r[0] - 0.5).abs() < 1e-15);
        let re = real_part_estimates(&md, &RMat::from_element(1, 1, 0.1));
        assert!((re[0] - 0.05).abs() < 1e-15);
        assert_eq!(real_part_estimates(&md, &RMat::zeros(1, 1))[0], 0.0);
    }

    #[test]
    fn non_spd_rejected() {
        let m = RMat::from_diagonal(&RVec::from_vec(alloc::vec![1.0, -1.0]));
        assert!(modal_transform(&m, &RMat::identity(2, 2)).is_err());
        assert!(modal_transform(&RMat::identity(2, 2), &m).is_err());
    }
}
