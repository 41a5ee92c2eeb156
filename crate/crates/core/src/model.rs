//! Second-order vibrational systems and their closed-loop transfer function
//!
//! ```text
//! F(g, s) = H₁ (s²M + s C(g) + K)⁻¹ E₂,   C(g) = C_int + B₂ diag(g) B₂ᵀ
//! ```
//!
//! with the equivalent first-order pencil `D(g, s) = sE − A₀ + Σⱼ gⱼ Lⱼ` of
//! dimension 2n. All evaluations go through the n×n second-order matrix;
//! the 2n form is only materialized on request (dense oracles, small models).

use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::{self, singular_triplets, CMat, CVec, ComplexLu, RMat, RVec, C64};

/// Reciprocal condition threshold below which a shift is treated as a pole.
pub const POLE_RCOND_THRESHOLD: f64 = 1e-14;

const SYMMETRY_TOL: f64 = 1e-10;

/// Mass, stiffness and damping data of `M q̈ + C_int q̇ + K q = B₂ u + E₂ w`, `z = H₁ q`.
#[derive(Debug, Clone, PartialEq)]
pub struct VibrationalSystem {
    mass: RMat,
    stiffness: RMat,
    internal_damping: RMat,
    damper_geometry: RMat,
    input_map: RMat,
    output_map: RMat,
}

fn check_square(what: &'static str, m: &RMat, n: usize) -> Result<()> {
    if m.nrows() != n {
        return Err(Error::Dimension { what, expected: n, actual: m.nrows() });
    }
    if m.ncols() != n {
        return Err(Error::Dimension { what, expected: n, actual: m.ncols() });
    }
    Ok(())
}

pub(crate) fn check_symmetric(what: &'static str, m: &RMat) -> Result<()> {
    let asym = linalg::asymmetry(m);
    if asym > SYMMETRY_TOL * linalg::max_abs(m).max(1.0) {
        return Err(Error::NotSymmetric { what, asymmetry: asym });
    }
    Ok(())
}

pub(crate) fn check_positive_definite(what: &'static str, m: &RMat) -> Result<()> {
    check_symmetric(what, m)?;
    if m.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite { what });
    }
    Ok(())
}

impl VibrationalSystem {
    /// Validates and stores the system matrices.
    ///
    /// `damper_geometry` is n×p, `input_map` n×m, `output_map` ℓ×n.
    pub fn new(
        mass: RMat,
        internal_damping: RMat,
        stiffness: RMat,
        damper_geometry: RMat,
        input_map: RMat,
        output_map: RMat,
    ) -> Result<Self> {
        let n = mass.nrows();
        check_square("mass matrix", &mass, n)?;
        check_square("stiffness matrix", &stiffness, n)?;
        check_square("internal damping matrix", &internal_damping, n)?;
        if damper_geometry.nrows() != n {
            return Err(Error::Dimension {
                what: "damper geometry rows",
                expected: n,
                actual: damper_geometry.nrows(),
            });
        }
        if input_map.nrows() != n {
            return Err(Error::Dimension { what: "input map rows", expected: n, actual: input_map.nrows() });
        }
        if output_map.ncols() != n {
            return Err(Error::Dimension {
                what: "output map columns",
                expected: n,
                actual: output_map.ncols(),
            });
        }
        check_positive_definite("mass matrix", &mass)?;
        check_positive_definite("stiffness matrix", &stiffness)?;
        check_symmetric("internal damping matrix", &internal_damping)?;
        if n > 0 {
            let scale = linalg::max_abs(&internal_damping);
            if scale > 0.0 {
                let min_eig = internal_damping
                    .clone()
                    .symmetric_eigenvalues()
                    .iter()
                    .fold(f64::INFINITY, |a, &b| a.min(b));
                if min_eig < -SYMMETRY_TOL * scale * n as f64 {
                    return Err(Error::NotPositiveSemidefinite { what: "internal damping matrix", min_eig });
                }
            }
        }
        Ok(Self { mass, stiffness, internal_damping, damper_geometry, input_map, output_map })
    }

    pub fn dim(&self) -> usize {
        self.mass.nrows()
    }

    /// Number of dampers p.
    pub fn dampers(&self) -> usize {
        self.damper_geometry.ncols()
    }

    /// Number of disturbance inputs m.
    pub fn inputs(&self) -> usize {
        self.input_map.ncols()
    }

    /// Number of performance outputs ℓ.
    pub fn outputs(&self) -> usize {
        self.output_map.nrows()
    }

    pub fn mass(&self) -> &RMat {
        &self.mass
    }

    pub fn stiffness(&self) -> &RMat {
        &self.stiffness
    }

    pub fn internal_damping(&self) -> &RMat {
        &self.internal_damping
    }

    pub fn damper_geometry(&self) -> &RMat {
        &self.damper_geometry
    }

    pub fn input_map(&self) -> &RMat {
        &self.input_map
    }

    pub fn output_map(&self) -> &RMat {
        &self.output_map
    }

    /// `C(g) = C_int + B₂ diag(g) B₂ᵀ`.
    pub fn damping(&self, gains: &GainVector) -> Result<RMat> {
        self.check_gains(gains)?;
        let mut c = self.internal_damping.clone();
        for (j, &g) in gains.as_slice().iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let b = self.damper_geometry.column(j);
            c.ger(g, &b, &b, 1.0);
        }
        Ok(c)
    }

    pub(crate) fn check_gains(&self, gains: &GainVector) -> Result<()> {
        if gains.len() != self.dampers() {
            return Err(Error::Dimension { what: "gain vector", expected: self.dampers(), actual: gains.len() });
        }
        Ok(())
    }
}

/// Nonnegative damper gains.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector(Vec<f64>);

impl GainVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::NegativeGain { index, value });
            }
        }
        Ok(Self(values))
    }

    pub fn zeros(p: usize) -> Self {
        Self(alloc::vec![0.0; p])
    }

    /// Clamps negative entries to zero.
    pub fn projected(values: &[f64]) -> Self {
        Self(values.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// The affine first-order pencil `D(g, s) = sE − A₀ + Σⱼ gⱼ Lⱼ` with
/// `E = diag(I, M)`, `A₀ = [0 I; −K −C_int]`, `Lⱼ = lⱼ lⱼᵀ`, `lⱼ = [0; bⱼ]`,
/// `cB = [0; E₂]` and `cC = [H₁ 0]`.
///
/// The blocks are kept in second-order form. Every factorization of the
/// shifted n×n matrix is counted, which is how the benchmark compares cost.
#[derive(Debug)]
pub struct AffineClosedLoop {
    sys: VibrationalSystem,
    damper_vectors: Vec<RVec>,
    factorizations: AtomicUsize,
}

impl Clone for AffineClosedLoop {
    fn clone(&self) -> Self {
        Self {
            sys: self.sys.clone(),
            damper_vectors: self.damper_vectors.clone(),
            factorizations: AtomicUsize::new(self.factorizations.load(Ordering::Relaxed)),
        }
    }
}

pub fn assemble_closed_loop(sys: &VibrationalSystem) -> AffineClosedLoop {
    let damper_vectors = (0..sys.dampers()).map(|j| sys.damper_geometry.column(j).into_owned()).collect();
    AffineClosedLoop { sys: sys.clone(), damper_vectors, factorizations: AtomicUsize::new(0) }
}

impl AffineClosedLoop {
    pub fn system(&self) -> &VibrationalSystem {
        &self.sys
    }

    pub fn dim(&self) -> usize {
        self.sys.dim()
    }

    /// bⱼ = B₂ eⱼ.
    pub fn damper_vectors(&self) -> &[RVec] {
        &self.damper_vectors
    }

    /// Number of n×n factorizations performed so far.
    pub fn factorization_count(&self) -> usize {
        self.factorizations.load(Ordering::Relaxed)
    }

    pub fn reset_factorization_count(&self) {
        self.factorizations.store(0, Ordering::Relaxed);
    }

    /// `E = diag(I_n, M)`.
    pub fn pencil_e(&self) -> RMat {
        let n = self.dim();
        let mut e = RMat::zeros(2 * n, 2 * n);
        for i in 0..n {
            e[(i, i)] = 1.0;
        }
        e.view_mut((n, n), (n, n)).copy_from(&self.sys.mass);
        e
    }

    /// `A₀ = [0 I; −K −C_int]`.
    pub fn pencil_a0(&self) -> RMat {
        let n = self.dim();
        let mut a = RMat::zeros(2 * n, 2 * n);
        for i in 0..n {
            a[(i, n + i)] = 1.0;
        }
        a.view_mut((n, 0), (n, n)).copy_from(&(-&self.sys.stiffness));
        a.view_mut((n, n), (n, n)).copy_from(&(-&self.sys.internal_damping));
        a
    }

    /// `lⱼ = [0; bⱼ]`, so that `Lⱼ = lⱼ lⱼᵀ`.
    pub fn selector(&self, j: usize) -> RVec {
        let n = self.dim();
        let mut l = RVec::zeros(2 * n);
        l.rows_mut(n, n).copy_from(&self.damper_vectors[j]);
        l
    }

    /// `cB = [0; E₂]`.
    pub fn input_block(&self) -> RMat {
        let n = self.dim();
        let mut b = RMat::zeros(2 * n, self.sys.inputs());
        b.view_mut((n, 0), (n, self.sys.inputs())).copy_from(&self.sys.input_map);
        b
    }

    /// `cC = [H₁ 0]`.
    pub fn output_block(&self) -> RMat {
        let n = self.dim();
        let mut c = RMat::zeros(self.sys.outputs(), 2 * n);
        c.view_mut((0, 0), (self.sys.outputs(), n)).copy_from(&self.sys.output_map);
        c
    }

    /// Dense `D(g, s)`, only for small-n oracles.
    pub fn pencil(&self, gains: &GainVector, s: C64) -> Result<CMat> {
        self.sys.check_gains(gains)?;
        let mut d = linalg::to_complex(&self.pencil_e()) * s - linalg::to_complex(&self.pencil_a0());
        for (j, &g) in gains.as_slice().iter().enumerate() {
            let l = linalg::to_complex_vec(&self.selector(j));
            d += &l * l.transpose() * Complex::new(g, 0.0);
        }
        Ok(d)
    }

    /// `s²M + s C(g) + K`.
    pub fn second_order_matrix(&self, damping: &RMat, s: C64) -> CMat {
        let n = self.dim();
        let s2 = s * s;
        CMat::from_fn(n, n, |i, j| {
            s2 * self.sys.mass[(i, j)] + s * damping[(i, j)] + Complex::new(self.sys.stiffness[(i, j)], 0.0)
        })
    }

    /// Factors the shifted second-order matrix at `(g, s)`.
    pub fn resolvent(&self, gains: &GainVector, s: C64) -> Result<Resolvent<'_>> {
        let damping = self.sys.damping(gains)?;
        let q = self.second_order_matrix(&damping, s);
        self.factorizations.fetch_add(1, Ordering::Relaxed);
        let lu = ComplexLu::factor(q).ok_or(Error::PoleProximity { s, rcond: 0.0 })?;
        let rcond = lu.rcond();
        if !(rcond >= POLE_RCOND_THRESHOLD) {
            return Err(Error::PoleProximity { s, rcond });
        }
        Ok(Resolvent { acl: self, lu, s, damping })
    }

    /// Dense first-order realization `(E, A(g), cB, cC)` at fixed gains.
    pub fn realization(&self, gains: &GainVector) -> Result<crate::linf::DescriptorModel<f64>> {
        let damping = self.sys.damping(gains)?;
        let n = self.dim();
        let mut a = self.pencil_a0();
        a.view_mut((n, n), (n, n)).copy_from(&(-damping));
        Ok(crate::linf::DescriptorModel::new(self.pencil_e(), a, self.input_block(), self.output_block()))
    }
}

/// One factorization of `Q(s) = s²M + sC(g) + K`, reused for right and left solves.
///
/// `Q(s)` is complex symmetric, so `Q⁻ᴴ z = conj(Q⁻¹ conj(z))`; the adjoint
/// solve is used directly.
#[derive(Debug, Clone)]
pub struct Resolvent<'a> {
    acl: &'a AffineClosedLoop,
    lu: ComplexLu,
    s: C64,
    damping: RMat,
}

impl<'a> Resolvent<'a> {
    pub fn shift(&self) -> C64 {
        self.s
    }

    pub fn rcond(&self) -> f64 {
        self.lu.rcond()
    }

    /// `F(g, s) = H₁ Q⁻¹ E₂`.
    pub fn transfer(&self) -> CMat {
        let sys = &self.acl.sys;
        let x = self.lu.solve(&linalg::to_complex(&sys.input_map));
        linalg::to_complex(&sys.output_map) * x
    }

    /// `X = Q⁻¹ E₂ d` (position block of `D⁻¹ cB d`).
    pub fn solve_positions(&self, d: &CVec) -> CVec {
        let e2d = linalg::to_complex(&self.acl.sys.input_map) * d;
        self.lu.solve_vec(&e2d)
    }

    /// `y₂ = Q⁻ᴴ H₁ᵀ e` (velocity block of `D⁻ᴴ cCᴴ e`).
    pub fn solve_adjoint_velocities(&self, e: &CVec) -> CVec {
        let h1te = linalg::to_complex(&self.acl.sys.output_map.transpose()) * e;
        self.lu.solve_adjoint_vec(&h1te)
    }

    /// `D(g, s)⁻¹ cB d = [X; sX]`.
    pub fn right_state(&self, d: &CVec) -> CVec {
        let x = self.solve_positions(d);
        stack(&x, &(&x * self.s))
    }

    /// `D(g, s)⁻ᴴ cCᴴ e = [(s̄M + C) y₂; y₂]`.
    pub fn left_state(&self, e: &CVec) -> CVec {
        let y2 = self.solve_adjoint_velocities(e);
        let sys = &self.acl.sys;
        let y1 = linalg::to_complex(&sys.mass) * &y2 * self.s.conj() + linalg::to_complex(&self.damping) * &y2;
        stack(&y1, &y2)
    }

    /// `∂/∂ω σ` along the singular pair `(u, v)` at `s = iω`: `Im(y₂ᴴ (2sM + C) X)`.
    pub fn sigma_frequency_derivative(&self, u: &CVec, v: &CVec) -> f64 {
        let x = self.solve_positions(u);
        let y2 = self.solve_adjoint_velocities(v);
        let sys = &self.acl.sys;
        let t = linalg::to_complex(&sys.mass) * &x * (self.s * 2.0) + linalg::to_complex(&self.damping) * &x;
        y2.dotc(&t).im
    }

    /// `∂σ/∂gⱼ = −Re(conj(bⱼᵀ y₂) · s · bⱼᵀ X)` for the singular pair `(u, v)`.
    pub fn sigma_gain_gradient(&self, u: &CVec, v: &CVec) -> Vec<f64> {
        let x = self.solve_positions(u);
        let y2 = self.solve_adjoint_velocities(v);
        self.acl
            .damper_vectors
            .iter()
            .map(|b| {
                let bx: C64 = b.iter().zip(x.iter()).map(|(bi, xi)| *xi * *bi).sum();
                let by: C64 = b.iter().zip(y2.iter()).map(|(bi, yi)| *yi * *bi).sum();
                -(by.conj() * self.s * bx).re
            })
            .collect()
    }
}

fn stack(top: &CVec, bottom: &CVec) -> CVec {
    let n = top.len();
    CVec::from_fn(n + bottom.len(), |i, _| if i < n { top[i] } else { bottom[i - n] })
}

/// `F(g, iω)` with its dominant singular triplet.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponseSample {
    pub gains: GainVector,
    pub omega: f64,
    pub value: CMat,
    pub sigma_max: f64,
    /// All singular values, decreasing.
    pub singular_values: Vec<f64>,
    /// Right singular vector (length m).
    pub u: CVec,
    /// Left singular vector (length ℓ).
    pub v: CVec,
}

impl FrequencyResponseSample {
    pub fn from_value(gains: GainVector, omega: f64, value: CMat) -> Self {
        let t = singular_triplets(&value);
        Self {
            gains,
            omega,
            sigma_max: t.sigma_max(),
            u: t.right_vec(0),
            v: t.left_vec(0),
            singular_values: t.values,
            value,
        }
    }

    /// `σ₁ − σ₂`, or `σ₁` when there is a single singular value.
    pub fn singular_gap(&self) -> f64 {
        self.sigma_max - self.singular_values.get(1).copied().unwrap_or(0.0)
    }
}

/// `F(g, s)` through the second-order solve.
pub fn eval_transfer(acl: &AffineClosedLoop, gains: &GainVector, s: C64) -> Result<CMat> {
    Ok(acl.resolvent(gains, s)?.transfer())
}

pub fn eval_sigma_max(acl: &AffineClosedLoop, gains: &GainVector, omega: f64) -> Result<FrequencyResponseSample> {
    let f = eval_transfer(acl, gains, Complex::new(0.0, omega))?;
    Ok(FrequencyResponseSample::from_value(gains.clone(), omega, f))
}

/// `σ_max(F(g, iω))` and its ω-derivative from one factorization.
pub fn sigma_and_derivative(
    acl: &AffineClosedLoop,
    gains: &GainVector,
    omega: f64,
) -> Result<(FrequencyResponseSample, f64)> {
    let r = acl.resolvent(gains, Complex::new(0.0, omega))?;
    let sample = FrequencyResponseSample::from_value(gains.clone(), omega, r.transfer());
    let d = r.sigma_frequency_derivative(&sample.u, &sample.v);
    Ok((sample, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use alloc::vec;

    pub(crate) fn scalar_system(m: f64, c_int: f64, k: f64) -> VibrationalSystem {
        VibrationalSystem::new(
            RMat::from_element(1, 1, m),
            RMat::from_element(1, 1, c_int),
            RMat::from_element(1, 1, k),
            RMat::from_element(1, 1, 1.0),
            RMat::from_element(1, 1, 1.0),
            RMat::from_element(1, 1, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn scalar_blocks_are_substituted_directly() {
        let sys = scalar_system(2.0, 0.1, 3.0);
        let acl = assemble_closed_loop(&sys);
        assert_eq!(acl.pencil_e(), RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]));
        assert_eq!(acl.pencil_a0(), RMat::from_row_slice(2, 2, &[0.0, 1.0, -3.0, -0.1]));
        assert_eq!(acl.damper_vectors()[0], RVec::from_element(1, 1.0));
    }

    #[test]
    fn no_dampers_makes_pencil_gain_independent() {
        let sys = VibrationalSystem::new(
            RMat::identity(2, 2),
            RMat::zeros(2, 2),
            RMat::identity(2, 2) * 2.0,
            RMat::zeros(2, 0),
            RMat::identity(2, 2),
            RMat::identity(2, 2),
        )
        .unwrap();
        let acl = assemble_closed_loop(&sys);
        let d = acl.pencil(&GainVector::zeros(0), c(0.3, 1.0)).unwrap();
        let expected = linalg::to_complex(&acl.pencil_e()) * c(0.3, 1.0) - linalg::to_complex(&acl.pencil_a0());
        assert_eq!(d, expected);
    }

    #[test]
    fn static_gain_is_inverse_stiffness() {
        let sys = VibrationalSystem::new(
            RMat::identity(1, 1),
            RMat::zeros(1, 1),
            RMat::identity(1, 1),
            RMat::zeros(1, 0),
            RMat::identity(1, 1),
            RMat::identity(1, 1),
        )
        .unwrap();
        let acl = assemble_closed_loop(&sys);
        let f = eval_transfer(&acl, &GainVector::zeros(0), c(0.0, 0.0)).unwrap();
        assert!((f[(0, 0)] - c(1.0, 0.0)).norm_sqr() < 1e-30);
    }

    #[test]
    fn scalar_resonance_sample() {
        let sys = scalar_system(1.0, 0.1, 1.0);
        let acl = assemble_closed_loop(&sys);
        let s = eval_sigma_max(&acl, &GainVector::zeros(1), 0.0).unwrap();
        assert!((s.sigma_max - 1.0).abs() < 1e-15);
        assert!((s.u[0] - c(1.0, 0.0)).norm_sqr() < 1e-30);
        assert!((s.v[0] - c(1.0, 0.0)).norm_sqr() < 1e-30);
        let far = eval_sigma_max(&acl, &GainVector::zeros(1), 1e6).unwrap();
        assert!(far.sigma_max < 1e-6);
    }

    #[test]
    fn pole_on_the_axis_is_reported() {
        let sys = VibrationalSystem::new(
            RMat::identity(1, 1),
            RMat::zeros(1, 1),
            RMat::identity(1, 1),
            RMat::zeros(1, 1),
            RMat::identity(1, 1),
            RMat::identity(1, 1),
        )
        .unwrap();
        let acl = assemble_closed_loop(&sys);
        let err = eval_transfer(&acl, &GainVector::zeros(1), c(0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::PoleProximity { .. }));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let bad = VibrationalSystem::new(
            RMat::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]),
            RMat::zeros(2, 2),
            RMat::identity(2, 2),
            RMat::zeros(2, 1),
            RMat::zeros(2, 1),
            RMat::zeros(1, 2),
        );
        assert!(matches!(bad, Err(Error::NotSymmetric { .. })));
        let indefinite = VibrationalSystem::new(
            RMat::identity(2, 2),
            RMat::zeros(2, 2),
            RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            RMat::zeros(2, 1),
            RMat::zeros(2, 1),
            RMat::zeros(1, 2),
        );
        assert!(matches!(indefinite, Err(Error::NotPositiveDefinite { .. })));
        let dims = VibrationalSystem::new(
            RMat::identity(2, 2),
            RMat::zeros(2, 2),
            RMat::identity(2, 2),
            RMat::zeros(3, 1),
            RMat::zeros(2, 1),
            RMat::zeros(1, 2),
        );
        assert!(matches!(dims, Err(Error::Dimension { .. })));
        assert!(GainVector::new(vec![1.0, -0.5]).is_err());
    }
}
