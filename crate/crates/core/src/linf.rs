//! L∞ norms: a dense level-set solver for small models and the greedy
//! interpolatory solver for the full closed loop at fixed gains.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, DMatrix};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues_complex, eigenvalues_real, CMat, ComplexLu, C64};
use crate::model::{sigma_and_derivative, AffineClosedLoop, FrequencyResponseSample, GainVector};
use crate::rom::{expand, reduce, InterpolationMode, ProjectionBasisPair};

/// Scalars a dense model can be stored in.
pub trait ModelScalar: ComplexField<RealField = f64> + Copy {
    fn eigenvalues(m: &DMatrix<Self>) -> Result<Vec<C64>>;
    fn to_c64(self) -> C64;
}

impl ModelScalar for f64 {
    fn eigenvalues(m: &DMatrix<Self>) -> Result<Vec<C64>> {
        eigenvalues_real(m)
    }

    fn to_c64(self) -> C64 {
        Complex::new(self, 0.0)
    }
}

impl ModelScalar for C64 {
    fn eigenvalues(m: &DMatrix<Self>) -> Result<Vec<C64>> {
        eigenvalues_complex(m)
    }

    fn to_c64(self) -> C64 {
        self
    }
}

/// `G(s) = C (sE − A)⁻¹ B` without feedthrough.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorModel<T: ModelScalar> {
    pub e: DMatrix<T>,
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub c: DMatrix<T>,
}

impl<T: ModelScalar> DescriptorModel<T> {
    pub fn new(e: DMatrix<T>, a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>) -> Self {
        Self { e, a, b, c }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Folds `E⁻¹` into `A` and `B`.
    pub fn to_standard(&self) -> Result<StandardModel<T>> {
        let lu = self.e.clone().lu();
        let a = lu.solve(&self.a).ok_or(Error::Singular)?;
        let b = lu.solve(&self.b).ok_or(Error::Singular)?;
        Ok(StandardModel::new(a, b, self.c.clone()))
    }
}

/// `G(s) = C (sI − A)⁻¹ B`.
#[derive(Debug, Clone)]
pub struct StandardModel<T: ModelScalar> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    ac: CMat,
    bc: CMat,
    cc: CMat,
}

impl<T: ModelScalar> StandardModel<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>) -> Self {
        let ac = a.map(T::to_c64);
        let bc = b.map(T::to_c64);
        let cc = c.map(T::to_c64);
        Self { a, b, c, ac, bc, cc }
    }

    fn shifted_lu(&self, omega: f64) -> Result<ComplexLu> {
        let n = self.ac.nrows();
        let mut m = -self.ac.clone();
        for i in 0..n {
            m[(i, i)] += Complex::new(0.0, omega);
        }
        ComplexLu::factor(m).ok_or(Error::PoleProximity { s: Complex::new(0.0, omega), rcond: 0.0 })
    }

    pub fn eval(&self, omega: f64) -> Result<CMat> {
        let lu = self.shifted_lu(omega)?;
        Ok(&self.cc * lu.solve(&self.bc))
    }

    pub fn sample(&self, omega: f64) -> Result<FrequencyResponseSample> {
        Ok(FrequencyResponseSample::from_value(GainVector::zeros(0), omega, self.eval(omega)?))
    }

    /// σ_max and `∂σ_max/∂ω = Im(yᴴ x)` with `x = R B u`, `y = Rᴴ Cᴴ v`, `R = (iωI − A)⁻¹`.
    pub fn sigma_and_derivative(&self, omega: f64) -> Result<(FrequencyResponseSample, f64)> {
        let lu = self.shifted_lu(omega)?;
        let value = &self.cc * lu.solve(&self.bc);
        let sample = FrequencyResponseSample::from_value(GainVector::zeros(0), omega, value);
        let x = lu.solve_vec(&(&self.bc * &sample.u));
        let y = lu.solve_adjoint_vec(&(self.cc.adjoint() * &sample.v));
        Ok((sample, y.dotc(&x).im))
    }

    pub fn poles(&self) -> Result<Vec<C64>> {
        T::eigenvalues(&self.a)
    }

    /// `[A, BBᴴ/γ; −CᴴC/γ, −Aᴴ]`; `iω` is an eigenvalue iff γ is a singular value of `G(iω)`.
    pub fn hamiltonian(&self, gamma: f64) -> DMatrix<T> {
        let n = self.a.nrows();
        let inv = T::from_real(1.0 / gamma);
        let mut h = DMatrix::<T>::zeros(2 * n, 2 * n);
        h.view_mut((0, 0), (n, n)).copy_from(&self.a);
        h.view_mut((0, n), (n, n)).copy_from(&(&self.b * self.b.adjoint() * inv));
        h.view_mut((n, 0), (n, n)).copy_from(&(-(self.c.adjoint() * &self.c) * inv));
        h.view_mut((n, n), (n, n)).copy_from(&(-self.a.adjoint()));
        h
    }
}

/// Outcome of an L∞ computation.
#[derive(Debug, Clone)]
pub struct NormResult {
    pub value: f64,
    /// Maximizing frequency; `f64::INFINITY` when the supremum is the limit at ∞.
    pub omega_star: f64,
    pub sample: FrequencyResponseSample,
    pub iterations: usize,
    pub converged: bool,
    /// Per-iteration `(ω, value)`.
    pub history: Vec<(f64, f64)>,
    /// Every `(ω, σ_max)` evaluated while bracketing peaks; feeds the peak census.
    pub peaks: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseNormConfig {
    /// Relative tolerance of the level-set iteration.
    pub tol: f64,
    pub max_iter: usize,
    /// Polish the maximizer with a derivative-based local search.
    pub polish: bool,
}

impl Default for DenseNormConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 60, polish: true }
    }
}

/// Dense L∞ norm with default settings.
pub fn linf_dense<T: ModelScalar>(model: &DescriptorModel<T>, tol: f64) -> Result<NormResult> {
    linf_dense_with(model, &DenseNormConfig { tol, ..DenseNormConfig::default() }, &[])
}

/// Level-set (Boyd–Balakrishnan / Bruinsma–Steinbuch) iteration over ω ≥ 0.
///
/// `hints` are extra frequencies at which the lower bound is seeded.
pub fn linf_dense_with<T: ModelScalar>(
    model: &DescriptorModel<T>,
    cfg: &DenseNormConfig,
    hints: &[f64],
) -> Result<NormResult> {
    let sys = model.to_standard()?;
    let poles = sys.poles()?;
    for p in &poles {
        if p.re.abs() <= 1e-13 * (1.0 + p.modulus()) {
            return Err(Error::Unbounded);
        }
    }

    let mut peaks: Vec<(f64, f64)> = Vec::new();
    let mut best: Option<FrequencyResponseSample> = None;
    let consider = |omega: f64, best: &mut Option<FrequencyResponseSample>, peaks: &mut Vec<(f64, f64)>| {
        if let Ok(s) = sys.sample(omega) {
            peaks.push((omega, s.sigma_max));
            if best.as_ref().map_or(true, |b| s.sigma_max > b.sigma_max) {
                *best = Some(s);
            }
        }
    };

    consider(0.0, &mut best, &mut peaks);
    for &h in hints {
        if h.is_finite() && h >= 0.0 {
            consider(h, &mut best, &mut peaks);
        }
    }
    // Most resonant poles first.
    let mut resonant: Vec<(f64, f64)> = poles
        .iter()
        .filter(|p| p.im > 0.0)
        .map(|p| (p.im.abs() / p.re.abs().max(f64::MIN_POSITIVE), p.im.abs()))
        .collect();
    if resonant.is_empty() {
        resonant = poles.iter().map(|p| (p.im.abs() / p.re.abs().max(f64::MIN_POSITIVE), p.im.abs())).collect();
    }
    resonant.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(core::cmp::Ordering::Equal));
    for &(_, omega) in resonant.iter().take(20) {
        consider(omega, &mut best, &mut peaks);
    }

    let mut best = match best {
        Some(b) => b,
        None => return Err(Error::Unbounded),
    };
    if best.sigma_max == 0.0 {
        return Ok(NormResult {
            value: 0.0,
            omega_star: best.omega,
            sample: best,
            iterations: 0,
            converged: true,
            history: Vec::new(),
            peaks,
        });
    }

    let mut history = vec![(best.omega, best.sigma_max)];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let gamma = best.sigma_max * (1.0 + 2.0 * cfg.tol);
        let eigs = T::eigenvalues(&sys.hamiltonian(gamma))?;
        let scale = eigs.iter().fold(0.0_f64, |a, z| a.max(z.modulus())).max(f64::MIN_POSITIVE);
        let mut crossings: Vec<f64> = eigs
            .iter()
            .filter(|z| z.re.abs() <= 1e-7 * scale && z.im >= -1e-7 * scale)
            .map(|z| z.im.max(0.0))
            .collect();
        crossings.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        crossings.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
        if crossings.is_empty() {
            converged = true;
            break;
        }
        let mut points: Vec<f64> = crossings.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        if crossings.len() == 1 {
            points.push(crossings[0]);
        }
        let before = best.sigma_max;
        for &omega in &points {
            if let Ok(s) = sys.sample(omega) {
                peaks.push((omega, s.sigma_max));
                if s.sigma_max > best.sigma_max {
                    best = s;
                }
            }
        }
        history.push((best.omega, best.sigma_max));
        if best.sigma_max <= before * (1.0 + cfg.tol) {
            converged = true;
            break;
        }
    }

    if cfg.polish {
        let width = best.omega.abs().max(scale_hint(&poles));
        let refined = refine_peak(|w| sys.sigma_and_derivative(w), best.omega, width, 0.0);
        if refined.sigma > best.sigma_max {
            if let Ok(s) = sys.sample(refined.omega) {
                if s.sigma_max > best.sigma_max {
                    best = s;
                }
            }
        }
    }

    Ok(NormResult {
        value: best.sigma_max,
        omega_star: best.omega,
        sample: best,
        iterations,
        converged,
        history,
        peaks,
    })
}

fn scale_hint(poles: &[C64]) -> f64 {
    let m = poles.iter().fold(0.0_f64, |a, p| a.max(p.modulus()));
    if m > 0.0 {
        1e-3 * m
    } else {
        1e-3
    }
}

/// Result of a one-dimensional peak search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOutcome {
    pub omega: f64,
    pub sigma: f64,
    pub evaluations: usize,
    /// False when no sign change of the derivative could be bracketed.
    pub bracketed: bool,
}

/// Local maximizer of σ(ω) on `[lower, ∞)` from `(σ, ∂σ/∂ω)` evaluations.
///
/// Brackets a sign change of the derivative by geometric steps uphill, then
/// runs Illinois false position on the derivative. `width` sets the first step.
pub fn refine_peak<F>(mut f: F, omega0: f64, width: f64, lower: f64) -> RefineOutcome
where
    F: FnMut(f64) -> Result<(FrequencyResponseSample, f64)>,
{
    let mut evaluations = 0usize;
    let mut eval = |w: f64, evaluations: &mut usize| -> Option<(f64, f64)> {
        *evaluations += 1;
        f(w).ok().map(|(s, d)| (s.sigma_max, d))
    };
    let (s0, d0) = match eval(omega0, &mut evaluations) {
        Some(v) => v,
        None => return RefineOutcome { omega: omega0, sigma: f64::NAN, evaluations, bracketed: false },
    };
    let mut best = (omega0, s0);
    if d0 == 0.0 || !d0.is_finite() {
        return RefineOutcome { omega: omega0, sigma: s0, evaluations, bracketed: d0 == 0.0 };
    }
    let dir = d0.signum();
    let mut step = 1e-6 * width.max(1e-300);
    // (ω, σ, σ') on the uphill side and the far side.
    let mut near = (omega0, s0, d0);
    let mut far = None;
    for _ in 0..80 {
        let mut w = near.0 + dir * step;
        if w < lower {
            w = lower;
        }
        if w == near.0 {
            // Maximum sits on the lower boundary.
            return RefineOutcome { omega: best.0, sigma: best.1, evaluations, bracketed: true };
        }
        let (s, d) = match eval(w, &mut evaluations) {
            Some(v) => v,
            None => break,
        };
        if s > best.1 {
            best = (w, s);
        }
        if d * dir <= 0.0 || s < near.1 {
            far = Some((w, s, d));
            break;
        }
        near = (w, s, d);
        step *= 4.0;
    }
    let Some(far) = far else {
        return RefineOutcome { omega: best.0, sigma: best.1, evaluations, bracketed: false };
    };
    // Illinois iteration on the derivative inside [near, far].
    let (mut a, mut b) = (near, far);
    let mut side = 0i32;
    for _ in 0..60 {
        if (b.0 - a.0).abs() <= 1e-14 * (1.0 + a.0.abs()) {
            break;
        }
        let mut w = if a.2 != b.2 && a.2 * b.2 < 0.0 {
            a.0 - a.2 * (b.0 - a.0) / (b.2 - a.2)
        } else {
            0.5 * (a.0 + b.0)
        };
        let lo = a.0.min(b.0);
        let hi = a.0.max(b.0);
        if !(w > lo && w < hi) {
            w = 0.5 * (a.0 + b.0);
        }
        let (s, d) = match eval(w, &mut evaluations) {
            Some(v) => v,
            None => break,
        };
        if s > best.1 {
            best = (w, s);
        }
        if d == 0.0 {
            break;
        }
        if d * a.2 > 0.0 {
            a = (w, s, d);
            if side == -1 {
                b.2 *= 0.5;
            }
            side = -1;
        } else {
            b = (w, s, d);
            if side == 1 {
                a.2 *= 0.5;
            }
            side = 1;
        }
    }
    RefineOutcome { omega: best.0, sigma: best.1, evaluations, bracketed: true }
}

/// Local maximizer of `ω ↦ σ_max(F(g, iω))` on the full model near `omega0`.
pub fn sigma_max_local_refine(acl: &AffineClosedLoop, gains: &GainVector, omega0: f64) -> RefineOutcome {
    let width = omega0.abs().max(1e-3);
    refine_peak(|w| sigma_and_derivative(acl, gains, w), omega0, width, 0.0)
}

/// Settings of the greedy subspace H∞ solver.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyConfig {
    /// Relative stagnation tolerance on successive reduced L∞ values.
    pub tol: f64,
    pub max_iter: usize,
    pub mode: InterpolationMode,
    pub dense: DenseNormConfig,
    /// Polish the final maximizer on the full model.
    pub refine_full: bool,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50,
            mode: InterpolationMode::Tangential,
            dense: DenseNormConfig { tol: 1e-10, ..DenseNormConfig::default() },
            refine_full: true,
        }
    }
}

/// H∞ norm of `F(g, ·)` by greedy interpolation at the maximizers of
/// successive reduced models.
pub fn hinf_greedy(
    acl: &AffineClosedLoop,
    gains: &GainVector,
    init_freqs: &[f64],
    cfg: &GreedyConfig,
) -> Result<NormResult> {
    let mut bases = ProjectionBasisPair::new(2 * acl.dim());
    for &omega in init_freqs {
        match expand(&mut bases, acl, gains, omega, cfg.mode) {
            Ok(_) | Err(Error::PoleProximity { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if bases.dim() == 0 {
        // Fall back to the static gain direction.
        expand(&mut bases, acl, gains, 0.0, cfg.mode)?;
    }

    let mut history: Vec<(f64, f64)> = Vec::new();
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    let mut last_omega = init_freqs.first().copied().unwrap_or(0.0);
    let mut prev: Option<f64> = None;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let rom = reduce(acl, &bases);
        let model = rom.at_gains(gains)?;
        let res = match linf_dense_with(&model, &cfg.dense, &[last_omega]) {
            Ok(r) => r,
            Err(Error::Unbounded) | Err(Error::EigenNoConvergence { .. }) | Err(Error::Singular) => {
                let perturbed = last_omega * (1.0 + 1e-3) + 1e-3;
                log::debug!("reduced model unusable, expanding at perturbed frequency {perturbed}");
                let out = expand(&mut bases, acl, gains, perturbed, cfg.mode)?;
                last_omega = perturbed;
                if out.added == 0 {
                    break;
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        peaks.extend(res.peaks.iter().copied());
        history.push((res.omega_star, res.value));
        last_omega = res.omega_star;
        if let Some(p) = prev {
            if (res.value - p).abs() <= cfg.tol * res.value {
                converged = true;
                break;
            }
        }
        prev = Some(res.value);
        match expand(&mut bases, acl, gains, res.omega_star, cfg.mode) {
            Ok(out) if out.added == 0 => {
                converged = true;
                break;
            }
            Ok(_) => {}
            Err(Error::PoleProximity { .. }) => break,
            Err(e) => return Err(e),
        }
    }

    // Report the full-model value at the maximizer.
    let mut omega_star = last_omega;
    if cfg.refine_full {
        let r = sigma_max_local_refine(acl, gains, omega_star);
        if r.sigma.is_finite() {
            omega_star = r.omega;
        }
    }
    let (sample, _) = sigma_and_derivative(acl, gains, omega_star)?;
    Ok(NormResult {
        value: sample.sigma_max,
        omega_star,
        sample,
        iterations,
        converged,
        history,
        peaks,
    })
}

/// Dense reference: level-set solver on the 2n first-order realization.
pub fn hinf_dense_full(acl: &AffineClosedLoop, gains: &GainVector, cfg: &DenseNormConfig) -> Result<NormResult> {
    let model = acl.realization(gains)?;
    let mut r = linf_dense_with(&model, cfg, &[])?;
    r.sample.gains = gains.clone();
    Ok(r)
}
