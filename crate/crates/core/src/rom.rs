//! Interpolatory projection bases and the reduced parametric model.

use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField};

use crate::error::{Error, Result};
use crate::linalg::{self, orthonormalize_against, singular_triplets, CMat, CVec, ComplexLu, OrthStatus, C64};
use crate::linf::DescriptorModel;
use crate::model::{AffineClosedLoop, FrequencyResponseSample, GainVector, Resolvent};

/// Rank tolerance for accepting a new basis column.
pub const RANK_TOL: f64 = 1e-10;

/// Which directions of `F(g, iω)` are interpolated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpolationMode {
    /// All m right and ℓ left directions; falls back to `Padded` when m ≠ ℓ.
    Full,
    /// min(m, ℓ) directions, the larger side through columns of F.
    Padded,
    /// The dominant singular pair.
    Tangential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordStatus {
    Added,
    /// Candidate columns were already in the span.
    Stagnation,
}

/// One interpolation event.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationRecord {
    pub gains: GainVector,
    pub omega: f64,
    pub mode: InterpolationMode,
    /// Index of the singular pair used, for tangential records.
    pub singular_index: usize,
    pub right: Vec<CVec>,
    pub left: Vec<CVec>,
    pub columns_added: usize,
    pub status: RecordStatus,
}

/// Orthonormal `V`, `W` of equal width with the log of interpolation points.
#[derive(Debug, Clone)]
pub struct ProjectionBasisPair {
    v: CMat,
    w: CMat,
    log: Vec<InterpolationRecord>,
}

impl ProjectionBasisPair {
    pub fn new(rows: usize) -> Self {
        Self { v: CMat::zeros(rows, 0), w: CMat::zeros(rows, 0), log: Vec::new() }
    }

    /// Wraps externally built bases; `v` and `w` must have equal shape.
    pub fn from_parts(v: CMat, w: CMat, log: Vec<InterpolationRecord>) -> Result<Self> {
        if v.shape() != w.shape() {
            return Err(Error::Dimension { what: "W basis columns", expected: v.ncols(), actual: w.ncols() });
        }
        Ok(Self { v, w, log })
    }

    pub fn dim(&self) -> usize {
        self.v.ncols()
    }

    pub fn v(&self) -> &CMat {
        &self.v
    }

    pub fn w(&self) -> &CMat {
        &self.w
    }

    pub fn log(&self) -> &[InterpolationRecord] {
        &self.log
    }

    /// `max(‖VᴴV − I‖_max, ‖WᴴW − I‖_max)`.
    pub fn orthonormality_error(&self) -> f64 {
        let dev = |m: &CMat| {
            let g = m.adjoint() * m;
            let mut worst = 0.0_f64;
            for i in 0..g.nrows() {
                for j in 0..g.ncols() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((g[(i, j)] - Complex::new(target, 0.0)).modulus());
                }
            }
            worst
        };
        dev(&self.v).max(dev(&self.w))
    }

    /// Appends candidate pairs whose right and left parts both survive orthogonalization.
    fn append_pairs(&mut self, right: &[CVec], left: &[CVec]) -> usize {
        let ref_v = right.iter().map(linalg::norm2_vec).fold(0.0, f64::max);
        let ref_w = left.iter().map(linalg::norm2_vec).fold(0.0, f64::max);
        let mut added = 0;
        for (x, y) in right.iter().zip(left) {
            let nv = orthonormalize_against(&self.v, x, ref_v, RANK_TOL);
            let nw = orthonormalize_against(&self.w, y, ref_w, RANK_TOL);
            if let (OrthStatus::Accepted(a), OrthStatus::Accepted(b)) = (nv, nw) {
                let k = self.v.ncols();
                self.v = self.v.clone().insert_column(k, Complex::new(0.0, 0.0));
                self.v.set_column(k, &a);
                self.w = self.w.clone().insert_column(k, Complex::new(0.0, 0.0));
                self.w.set_column(k, &b);
                added += 1;
            }
        }
        added
    }
}

/// Right directions (length m) and left directions (length ℓ) to interpolate.
pub fn interpolation_directions(sample: &FrequencyResponseSample, mode: InterpolationMode) -> (Vec<CVec>, Vec<CVec>) {
    let f = &sample.value;
    let (l, m) = f.shape();
    match mode {
        InterpolationMode::Tangential => (alloc::vec![sample.u.clone()], alloc::vec![sample.v.clone()]),
        InterpolationMode::Full if l == m => (units(m), units(l)),
        InterpolationMode::Full | InterpolationMode::Padded => {
            if l > m {
                let left = (0..m).map(|j| f.column(j).into_owned()).collect();
                (units(m), left)
            } else if l < m {
                let fh = f.adjoint();
                let right = (0..l).map(|i| fh.column(i).into_owned()).collect();
                (right, units(l))
            } else {
                (units(m), units(l))
            }
        }
    }
}

/// The `index`-th singular pair of `F` as `(right, left)`.
pub fn singular_directions(sample: &FrequencyResponseSample, index: usize) -> Option<(CVec, CVec)> {
    let t = singular_triplets(&sample.value);
    if index < t.values.len() {
        Some((t.right_vec(index), t.left_vec(index)))
    } else {
        None
    }
}

fn units(n: usize) -> Vec<CVec> {
    (0..n)
        .map(|i| {
            let mut e = CVec::zeros(n);
            e[i] = Complex::new(1.0, 0.0);
            e
        })
        .collect()
}

/// Outcome of one expansion.
#[derive(Debug, Clone)]
pub struct ExpandOutcome {
    pub added: usize,
    pub stagnation: bool,
    /// Full-model sample at the interpolation point.
    pub sample: FrequencyResponseSample,
}

/// Interpolates `F(g, iω)` along `mode` directions (one factorization).
pub fn expand(
    bases: &mut ProjectionBasisPair,
    acl: &AffineClosedLoop,
    gains: &GainVector,
    omega: f64,
    mode: InterpolationMode,
) -> Result<ExpandOutcome> {
    let r = acl.resolvent(gains, Complex::new(0.0, omega))?;
    let sample = FrequencyResponseSample::from_value(gains.clone(), omega, r.transfer());
    let (right, left) = interpolation_directions(&sample, mode);
    Ok(expand_with(bases, &r, sample, right, left, mode, 0))
}

/// Adds the `index`-th singular pair at an already sampled point.
pub fn expand_singular_pair(
    bases: &mut ProjectionBasisPair,
    acl: &AffineClosedLoop,
    gains: &GainVector,
    omega: f64,
    index: usize,
) -> Result<ExpandOutcome> {
    let r = acl.resolvent(gains, Complex::new(0.0, omega))?;
    let sample = FrequencyResponseSample::from_value(gains.clone(), omega, r.transfer());
    let Some((u, v)) = singular_directions(&sample, index) else {
        return Ok(ExpandOutcome { added: 0, stagnation: true, sample });
    };
    Ok(expand_with(bases, &r, sample, alloc::vec![u], alloc::vec![v], InterpolationMode::Tangential, index))
}

fn expand_with(
    bases: &mut ProjectionBasisPair,
    r: &Resolvent<'_>,
    sample: FrequencyResponseSample,
    right: Vec<CVec>,
    left: Vec<CVec>,
    mode: InterpolationMode,
    singular_index: usize,
) -> ExpandOutcome {
    let xs: Vec<CVec> = right.iter().map(|d| r.right_state(d)).collect();
    let ys: Vec<CVec> = left.iter().map(|e| r.left_state(e)).collect();
    let added = bases.append_pairs(&xs, &ys);
    let status = if added == 0 { RecordStatus::Stagnation } else { RecordStatus::Added };
    if added == 0 {
        log::debug!("interpolation at omega = {} added no columns", sample.omega);
    }
    bases.log.push(InterpolationRecord {
        gains: sample.gains.clone(),
        omega: sample.omega,
        mode,
        singular_index,
        right,
        left,
        columns_added: added,
        status,
    });
    ExpandOutcome { added, stagnation: added == 0, sample }
}

/// Builds bases interpolating at every `(g, ω)` pair; pole-proximate points are skipped.
pub fn initial_bases(
    acl: &AffineClosedLoop,
    points: &[(GainVector, Vec<f64>)],
    mode: InterpolationMode,
) -> Result<ProjectionBasisPair> {
    let mut bases = ProjectionBasisPair::new(2 * acl.dim());
    for (g, freqs) in points {
        for &omega in freqs {
            match expand(&mut bases, acl, g, omega, mode) {
                Ok(_) => {}
                Err(Error::PoleProximity { s, .. }) => log::warn!("skipping interpolation point at s = {s}"),
                Err(e) => return Err(e),
            }
        }
    }
    if bases.dim() == 0 {
        return Err(Error::InvalidConfig("no usable interpolation points".into()));
    }
    Ok(bases)
}

/// `D̃(g, s) = s Ẽ − Ã₀ + Σⱼ gⱼ w̃ⱼ ṽⱼᵀ`, `F̃ = C̃ D̃⁻¹ B̃`.
#[derive(Debug, Clone)]
pub struct ReducedParametricModel {
    pub e: CMat,
    pub a0: CMat,
    /// `Wᴴ lⱼ`.
    pub w_vecs: Vec<CVec>,
    /// `Vᵀ lⱼ`.
    pub v_vecs: Vec<CVec>,
    pub b: CMat,
    pub c: CMat,
}

/// Projects the affine pencil onto the bases.
pub fn reduce(acl: &AffineClosedLoop, bases: &ProjectionBasisPair) -> ReducedParametricModel {
    let sys = acl.system();
    let n = acl.dim();
    let v1 = bases.v.rows(0, n).into_owned();
    let v2 = bases.v.rows(n, n).into_owned();
    let w1h = bases.w.rows(0, n).adjoint();
    let w2h = bases.w.rows(n, n).adjoint();
    let mass = linalg::to_complex(sys.mass());
    let stiff = linalg::to_complex(sys.stiffness());
    let cint = linalg::to_complex(sys.internal_damping());
    let e = &w1h * &v1 + &w2h * (&mass * &v2);
    let a0 = &w1h * &v2 - &w2h * (&stiff * &v1 + &cint * &v2);
    let mut w_vecs = Vec::with_capacity(sys.dampers());
    let mut v_vecs = Vec::with_capacity(sys.dampers());
    for b in acl.damper_vectors() {
        let bc = linalg::to_complex_vec(b);
        w_vecs.push(&w2h * &bc);
        v_vecs.push(v2.transpose() * &bc);
    }
    let b = &w2h * linalg::to_complex(sys.input_map());
    let c = linalg::to_complex(sys.output_map()) * &v1;
    ReducedParametricModel { e, a0, w_vecs, v_vecs, b, c }
}

/// One factorization of the reduced pencil.
pub struct ReducedResolvent<'a> {
    rom: &'a ReducedParametricModel,
    lu: ComplexLu,
}

impl ReducedResolvent<'_> {
    pub fn transfer(&self) -> CMat {
        &self.rom.c * self.lu.solve(&self.rom.b)
    }

    fn states(&self, u: &CVec, v: &CVec) -> (CVec, CVec) {
        let x = self.lu.solve_vec(&(&self.rom.b * u));
        let y = self.lu.solve_adjoint_vec(&(self.rom.c.adjoint() * v));
        (x, y)
    }

    /// `−Re((ỹᴴ w̃ⱼ)(ṽⱼᵀ x̃))`.
    pub fn gain_gradient(&self, u: &CVec, v: &CVec) -> Vec<f64> {
        let (x, y) = self.states(u, v);
        self.rom
            .w_vecs
            .iter()
            .zip(&self.rom.v_vecs)
            .map(|(w, vv)| -(y.dotc(w) * vv.dot(&x)).re)
            .collect()
    }

    /// `Im(ỹᴴ Ẽ x̃)`.
    pub fn frequency_derivative(&self, u: &CVec, v: &CVec) -> f64 {
        let (x, y) = self.states(u, v);
        y.dotc(&(&self.rom.e * x)).im
    }
}

impl ReducedParametricModel {
    pub fn order(&self) -> usize {
        self.e.nrows()
    }

    pub fn dampers(&self) -> usize {
        self.w_vecs.len()
    }

    pub fn pencil(&self, gains: &GainVector, s: C64) -> CMat {
        let mut d = &self.e * s - &self.a0;
        for ((w, v), &g) in self.w_vecs.iter().zip(&self.v_vecs).zip(gains.as_slice()) {
            d += w * v.transpose() * Complex::new(g, 0.0);
        }
        d
    }

    pub fn resolvent(&self, gains: &GainVector, s: C64) -> Result<ReducedResolvent<'_>> {
        if gains.len() != self.dampers() {
            return Err(Error::Dimension { what: "gains", expected: self.dampers(), actual: gains.len() });
        }
        let lu = ComplexLu::factor(self.pencil(gains, s)).ok_or(Error::PoleProximity { s, rcond: 0.0 })?;
        Ok(ReducedResolvent { rom: self, lu })
    }

    pub fn transfer(&self, gains: &GainVector, s: C64) -> Result<CMat> {
        Ok(self.resolvent(gains, s)?.transfer())
    }

    pub fn sample(&self, gains: &GainVector, omega: f64) -> Result<FrequencyResponseSample> {
        let f = self.transfer(gains, Complex::new(0.0, omega))?;
        Ok(FrequencyResponseSample::from_value(gains.clone(), omega, f))
    }

    /// `(Ẽ, Ã₀ − Σⱼ gⱼ w̃ⱼ ṽⱼᵀ, B̃, C̃)` at fixed gains.
    pub fn at_gains(&self, gains: &GainVector) -> Result<DescriptorModel<C64>> {
        if gains.len() != self.dampers() {
            return Err(Error::Dimension { what: "gains", expected: self.dampers(), actual: gains.len() });
        }
        let mut a = self.a0.clone();
        for ((w, v), &g) in self.w_vecs.iter().zip(&self.v_vecs).zip(gains.as_slice()) {
            a -= w * v.transpose() * Complex::new(g, 0.0);
        }
        Ok(DescriptorModel::new(self.e.clone(), a, self.b.clone(), self.c.clone()))
    }
}

/// Interpolation residuals at one logged point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteReport {
    /// Relative mismatch of the interpolated values (`F`, or `F u` / `vᴴF` for tangential records).
    pub value_residual: f64,
    /// `|σ̃ − σ| / σ`.
    pub sigma_residual: f64,
    /// `|∂ω σ − ∂ω σ̃| / max(|∂ω σ|, σ)` from the resolvent formulas of both models.
    pub derivative_residual: f64,
}

impl HermiteReport {
    pub fn passes(&self, tol: f64, derivative_tol: f64) -> bool {
        self.value_residual <= tol && self.sigma_residual <= tol && self.derivative_residual <= derivative_tol
    }
}

/// Value-level residuals of `rom` against a full-model sample.
pub fn interpolation_residuals(
    rom: &ReducedParametricModel,
    sample: &FrequencyResponseSample,
    record: &InterpolationRecord,
) -> Result<(f64, f64)> {
    let reduced = rom.sample(&sample.gains, sample.omega)?;
    let diff = &sample.value - &reduced.value;
    let value_residual = match record.mode {
        InterpolationMode::Tangential => {
            let (u, v) = (&record.right[0], &record.left[0]);
            let fr = &sample.value * u;
            let fl = v.adjoint() * &sample.value;
            let r = linalg::norm2_vec(&(&diff * u)) / linalg::norm2_vec(&fr).max(f64::MIN_POSITIVE);
            let lres = (v.adjoint() * &diff).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let lref = fl.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            r.max(lres / lref)
        }
        _ => linalg::norm2_complex(&diff) / sample.sigma_max.max(f64::MIN_POSITIVE),
    };
    let sigma_residual = (reduced.sigma_max - sample.sigma_max).abs() / sample.sigma_max.max(f64::MIN_POSITIVE);
    Ok((value_residual, sigma_residual))
}

/// Checks value, σ_max and ω-derivative interpolation at a logged point.
pub fn check_hermite(
    acl: &AffineClosedLoop,
    rom: &ReducedParametricModel,
    record: &InterpolationRecord,
) -> Result<HermiteReport> {
    let g = &record.gains;
    let omega = record.omega;
    let full = acl.resolvent(g, Complex::new(0.0, omega))?;
    let sample = FrequencyResponseSample::from_value(g.clone(), omega, full.transfer());
    let (value_residual, sigma_residual) = interpolation_residuals(rom, &sample, record)?;
    let d_full = full.sigma_frequency_derivative(&sample.u, &sample.v);
    let reduced = rom.sample(g, omega)?;
    let d_red = rom.resolvent(g, Complex::new(0.0, omega))?.frequency_derivative(&reduced.u, &reduced.v);
    let derivative_residual = (d_full - d_red).abs() / d_full.abs().max(sample.sigma_max).max(f64::MIN_POSITIVE);
    Ok(HermiteReport { value_residual, sigma_residual, derivative_residual })
}
