//! Gradient of `g ↦ ‖F(g, ·)‖_H∞` and the smoothness diagnostics behind it.

use alloc::vec::Vec;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::{self, CVec, ComplexLu};
use crate::linf::NormResult;
use crate::model::{AffineClosedLoop, FrequencyResponseSample, GainVector};

/// Relative threshold on the singular and peak gaps.
pub const GAP_TOL: f64 = 1e-6;

/// Resolvent products at the norm-attaining point.
#[derive(Debug, Clone)]
pub struct GradientContext {
    pub sample: FrequencyResponseSample,
    /// `D(g, iω₀)⁻¹ cB u₀`.
    pub x: CVec,
    /// `D(g, iω₀)⁻ᴴ cCᴴ v₀`.
    pub y: CVec,
    pub singular_gap: f64,
    pub second_peak_gap: f64,
}

impl GradientContext {
    /// One factorization at `(g, iω*)` of `norm`.
    pub fn new(acl: &AffineClosedLoop, gains: &GainVector, norm: &NormResult) -> Result<Self> {
        let r = acl.resolvent(gains, Complex::new(0.0, norm.omega_star))?;
        let sample = FrequencyResponseSample::from_value(gains.clone(), norm.omega_star, r.transfer());
        let x = r.right_state(&sample.u);
        let y = r.left_state(&sample.v);
        let singular_gap = sample.singular_gap();
        let second_peak_gap = second_peak_gap(norm);
        Ok(Self { sample, x, y, singular_gap, second_peak_gap })
    }

    /// `NonsmoothPoint` when either relative gap is below [`GAP_TOL`].
    pub fn check_smooth(&self) -> Result<()> {
        let s = self.sample.sigma_max.max(f64::MIN_POSITIVE);
        if self.singular_gap / s < GAP_TOL || self.second_peak_gap / s < GAP_TOL {
            return Err(Error::NonsmoothPoint { singular_gap: self.singular_gap, peak_gap: self.second_peak_gap });
        }
        Ok(())
    }
}

/// `∂/∂gⱼ = −Re((lⱼᴴ y)ᴴ (lⱼᵀ x))` with `lⱼ = [0; bⱼ]`.
///
/// At a nonsmooth point the gradient of the selected branch is returned with a warning.
pub fn hinf_gradient(acl: &AffineClosedLoop, ctx: &GradientContext) -> Vec<f64> {
    if let Err(e) = ctx.check_smooth() {
        log::warn!("gradient at a nonsmooth point: {e}");
    }
    let n = acl.dim();
    acl.damper_vectors()
        .iter()
        .map(|b| {
            let mut ly = Complex::new(0.0, 0.0);
            let mut lx = Complex::new(0.0, 0.0);
            for i in 0..n {
                ly += ctx.y[n + i] * b[i];
                lx += ctx.x[n + i] * b[i];
            }
            -(ly.conj() * lx).re
        })
        .collect()
}

/// The paper's per-j formula `−Re(v₀ᴴ cC D⁻¹ Lⱼ D⁻¹ cB u₀)` on the dense 2n pencil.
pub fn hinf_gradient_literal(
    acl: &AffineClosedLoop,
    gains: &GainVector,
    omega: f64,
    u: &CVec,
    v: &CVec,
) -> Result<Vec<f64>> {
    let d = acl.pencil(gains, Complex::new(0.0, omega))?;
    let lu = ComplexLu::factor(d).ok_or(Error::Singular)?;
    let cb = linalg::to_complex(&acl.input_block());
    let cc = linalg::to_complex(&acl.output_block());
    (0..acl.damper_vectors().len())
        .map(|j| {
            let l = linalg::to_complex_vec(&acl.selector(j));
            let right = lu.solve_vec(&(&cb * u));
            let lj_right = &l * l.transpose() * right;
            let t = lu.solve_vec(&lj_right);
            let val = (v.adjoint() * (&cc * t))[(0, 0)];
            Ok(-val.re)
        })
        .collect()
}

/// Assumption 1 diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessReport {
    /// `σ₁ − σ₂` at the maximizer.
    pub singular_gap: f64,
    /// Global maximum minus the best value away from the maximizer.
    pub second_peak_gap: f64,
    /// Distinct local peaks seen in the evaluation census.
    pub peak_count: usize,
    /// Local peaks within 10 % of the maximum, the global one included.
    pub near_peaks: usize,
    pub nonsmooth: bool,
}

pub fn smoothness_diagnostics(norm: &NormResult) -> SmoothnessReport {
    smoothness_diagnostics_with(norm, &[])
}

/// As [`smoothness_diagnostics`], with extra `(ω, σ_max)` samples (e.g. a
/// frequency grid from [`peak_census`]) merged into the census.
pub fn smoothness_diagnostics_with(norm: &NormResult, census: &[(f64, f64)]) -> SmoothnessReport {
    let s = norm.value.max(f64::MIN_POSITIVE);
    let mut samples = norm.peaks.clone();
    samples.extend_from_slice(census);
    samples.push((norm.omega_star, norm.value));
    let peaks = local_peaks(&samples);
    let singular_gap = norm.sample.singular_gap();
    let second_peak_gap = peak_gap(norm.omega_star, norm.value, &peaks);
    SmoothnessReport {
        singular_gap,
        second_peak_gap,
        peak_count: peaks.len(),
        near_peaks: peaks.iter().filter(|p| p.1 >= 0.9 * norm.value).count(),
        nonsmooth: singular_gap / s < GAP_TOL || second_peak_gap / s < GAP_TOL,
    }
}

/// `(ω, σ_max(F(g, iω)))` at each of `omegas`.
pub fn peak_census(acl: &AffineClosedLoop, gains: &GainVector, omegas: &[f64]) -> Result<Vec<(f64, f64)>> {
    omegas.iter().map(|&w| Ok((w, crate::model::eval_sigma_max(acl, gains, w)?.sigma_max))).collect()
}

/// Local maxima of the sampled `(ω, σ)` census, sorted by ω.
pub fn local_peaks(samples: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = samples.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
    pts.dedup_by(|a, b| a.0 == b.0);
    let mut out = Vec::new();
    for i in 0..pts.len() {
        let left = i == 0 || pts[i - 1].1 < pts[i].1;
        let right = i + 1 == pts.len() || pts[i + 1].1 < pts[i].1;
        if left && right {
            out.push(pts[i]);
        }
    }
    out
}

fn second_peak_gap(norm: &NormResult) -> f64 {
    peak_gap(norm.omega_star, norm.value, &local_peaks(&norm.peaks))
}

/// Gap to the highest peak separated from ω* by more than 1 %.
fn peak_gap(w: f64, value: f64, peaks: &[(f64, f64)]) -> f64 {
    let sep = 1e-2 * w.abs().max(1e-12);
    let second = peaks.iter().filter(|p| (p.0 - w).abs() > sep).map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if second.is_finite() {
        (value - second).max(0.0)
    } else {
        value
    }
}
