//! Bound-constrained nonsmooth minimization and the outer greedy loop.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linf::{hinf_greedy, linf_dense_with, DenseNormConfig, GreedyConfig, NormResult};
use crate::modal::DominanceEstimator;
use crate::model::{assemble_closed_loop, AffineClosedLoop, GainVector, VibrationalSystem};
use crate::rom::{
    expand, expand_singular_pair, initial_bases, interpolation_residuals, reduce, InterpolationMode,
    ProjectionBasisPair, ReducedParametricModel,
};

/// Settings of the inner bound-constrained solver.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub stationarity_tol: f64,
    pub max_inner_iter: usize,
    /// Armijo constant.
    pub wolfe_c1: f64,
    /// Curvature constant of the weak Wolfe condition.
    pub wolfe_c2: f64,
    pub max_line_search: usize,
    /// Initial gradient-sampling radius relative to `max(‖g‖∞, 1)`.
    pub sampling_radius: f64,
    pub sampling_radius_min: f64,
    pub sampling_shrink: f64,
    /// Extra sampled gradients per round, on top of `p + 1`.
    pub sampling_extra: usize,
    pub upper_bounds: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            stationarity_tol: 1e-12,
            max_inner_iter: 200,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            max_line_search: 40,
            sampling_radius: 1e-4,
            sampling_radius_min: 1e-10,
            sampling_shrink: 0.1,
            sampling_extra: 1,
            upper_bounds: None,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self, p: usize) -> Result<()> {
        let positive = [
            ("stationarity_tol", self.stationarity_tol),
            ("sampling_radius", self.sampling_radius),
            ("sampling_radius_min", self.sampling_radius_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if !(self.wolfe_c1 > 0.0 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return Err(Error::InvalidConfig("need 0 < c1 < c2 < 1".into()));
        }
        if !(self.sampling_shrink > 0.0 && self.sampling_shrink < 1.0) {
            return Err(Error::InvalidConfig("sampling_shrink must lie in (0, 1)".into()));
        }
        if let Some(ub) = &self.upper_bounds {
            if ub.len() != p || ub.iter().any(|&u| !(u >= 0.0)) {
                return Err(Error::InvalidConfig("upper bounds must be nonnegative, one per damper".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerTermination {
    Stationary,
    /// Gradient sampling shrank its radius to the minimum without progress.
    SamplingStationary,
    MaxIter,
    /// No decrease possible along any tried direction.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub gains: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub stationarity: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: InnerTermination,
}

struct Bounds<'a> {
    upper: Option<&'a [f64]>,
}

impl Bounds<'_> {
    fn project(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let v = v.max(0.0);
                match self.upper {
                    Some(u) => v.min(u[i]),
                    None => v,
                }
            })
            .collect()
    }

    /// `‖P(x − ∇f) − x‖₂`.
    fn stationarity(&self, x: &[f64], g: &[f64]) -> f64 {
        let step: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
        let p = self.project(&step);
        norm(&sub(&p, x))
    }

    /// Coordinates held at a bound by the sign of the gradient.
    fn active(&self, x: &[f64], g: &[f64]) -> Vec<bool> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let at_lower = v <= 0.0 && g[i] > 0.0;
                let at_upper = self.upper.map_or(false, |u| v >= u[i] && g[i] < 0.0);
                at_lower || at_upper
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn axpy(x: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

/// Minimizes `f` over `{x ≥ 0}` (and optional upper bounds) by projected BFGS
/// with a weak-Wolfe line search and a gradient-sampling fallback.
///
/// Evaluation errors are treated as `+∞`, which shrinks the step.
pub fn minimize_bound_constrained<F>(mut f: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<InnerResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let p = x0.len();
    cfg.validate(p)?;
    let bounds = Bounds { upper: cfg.upper_bounds.as_deref() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| -> Option<(f64, Vec<f64>)> {
        *evaluations += 1;
        match f(x) {
            Ok((v, g)) if v.is_finite() && g.iter().all(|c| c.is_finite()) => Some((v, g)),
            Ok(_) => None,
            Err(e) => {
                log::debug!("objective failed at {x:?}: {e}");
                None
            }
        }
    };

    let mut x = bounds.project(x0);
    let (mut fx, mut gx) = eval(&x, &mut evaluations)
        .ok_or_else(|| Error::Optimization(format!("objective not finite at the starting point {x:?}")))?;
    let mut h = DMatrix::<f64>::identity(p, p);
    let mut h_scaled = false;
    let mut radius = cfg.sampling_radius;
    let mut iterations = 0;
    let mut termination = InnerTermination::MaxIter;

    while iterations < cfg.max_inner_iter {
        let stat = bounds.stationarity(&x, &gx);
        if stat <= cfg.stationarity_tol {
            termination = InnerTermination::Stationary;
            break;
        }
        iterations += 1;
        if !h_scaled {
            let scale = 0.1 * x.iter().fold(1.0_f64, |a, v| a.max(v.abs())) / norm(&gx).max(f64::MIN_POSITIVE);
            h = DMatrix::identity(p, p) * scale;
        }

        let active = bounds.active(&x, &gx);
        let d = quasi_newton_direction(&h, &gx, &active);
        let step = if dot(&d, &gx) < 0.0 {
            weak_wolfe(&mut eval, &mut evaluations, &bounds, &x, fx, &gx, &d, cfg)
        } else {
            None
        };

        let accepted = match step {
            Some(s) => Some(s),
            None => {
                // Fallback: descent along the min-norm element of sampled gradients.
                let mut out = None;
                while radius >= cfg.sampling_radius_min {
                    let scale = x.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
                    let eps = radius * scale;
                    let mut grads = vec![gx.clone()];
                    for _ in 0..(p + 1 + cfg.sampling_extra) {
                        let pt: Vec<f64> = x.iter().map(|&v| v + eps * rng.random_range(-1.0..=1.0)).collect();
                        let pt = bounds.project(&pt);
                        if let Some((_, g)) = eval(&pt, &mut evaluations) {
                            grads.push(g);
                        }
                    }
                    let grads: Vec<Vec<f64>> = grads
                        .into_iter()
                        .map(|g| g.iter().zip(&active).map(|(&c, &a)| if a { 0.0 } else { c }).collect())
                        .collect();
                    let gmin = min_norm_convex(&grads);
                    if norm(&gmin) <= cfg.stationarity_tol {
                        radius *= cfg.sampling_shrink;
                        continue;
                    }
                    let d: Vec<f64> = gmin.iter().map(|c| -c).collect();
                    if let Some(s) = armijo(&mut eval, &mut evaluations, &bounds, &x, fx, &d, norm(&gmin).powi(2), cfg) {
                        out = Some(s);
                        break;
                    }
                    radius *= cfg.sampling_shrink;
                }
                if out.is_none() {
                    termination = InnerTermination::SamplingStationary;
                }
                h = DMatrix::identity(p, p);
                h_scaled = false;
                out
            }
        };
        let Some((x_new, f_new, g_new)) = accepted else {
            break;
        };
        if !(f_new < fx) {
            termination = InnerTermination::Stalled;
            break;
        }

        let s = sub(&x_new, &x);
        let y = sub(&g_new, &gx);
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if !h_scaled {
                h = DMatrix::identity(p, p) * (sy / dot(&y, &y));
                h_scaled = true;
            }
            bfgs_update(&mut h, &s, &y, sy);
        }
        let decrease = fx - f_new;
        x = x_new;
        fx = f_new;
        gx = g_new;
        if decrease <= 4.0 * f64::EPSILON * fx.abs() && norm(&s) <= 4.0 * f64::EPSILON * norm(&x).max(1.0) {
            termination = InnerTermination::Stalled;
            break;
        }
    }

    let stationarity = bounds.stationarity(&x, &gx);
    Ok(InnerResult { gains: x, value: fx, gradient: gx, stationarity, iterations, evaluations, termination })
}

fn quasi_newton_direction(h: &DMatrix<f64>, g: &[f64], active: &[bool]) -> Vec<f64> {
    let p = g.len();
    let free: Vec<usize> = (0..p).filter(|&i| !active[i]).collect();
    let mut d = vec![0.0; p];
    for &i in &free {
        d[i] = -free.iter().map(|&j| h[(i, j)] * g[j]).sum::<f64>();
    }
    d
}

fn bfgs_update(h: &mut DMatrix<f64>, s: &[f64], y: &[f64], sy: f64) {
    let p = s.len();
    let rho = 1.0 / sy;
    let sv = DVector::from_column_slice(s);
    let yv = DVector::from_column_slice(y);
    let v = DMatrix::identity(p, p) - &sv * yv.transpose() * rho;
    *h = &v * &*h * v.transpose() + &sv * sv.transpose() * rho;
}

type Step = (Vec<f64>, f64, Vec<f64>);

/// Weak-Wolfe bracketing on the projected path `P(x + t d)`.
#[allow(clippy::too_many_arguments)]
fn weak_wolfe<E>(
    eval: &mut E,
    evaluations: &mut usize,
    bounds: &Bounds<'_>,
    x: &[f64],
    fx: f64,
    gx: &[f64],
    d: &[f64],
    cfg: &OptimizerConfig,
) -> Option<Step>
where
    E: FnMut(&[f64], &mut usize) -> Option<(f64, Vec<f64>)>,
{
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut t = 1.0;
    let mut best: Option<Step> = None;
    for _ in 0..cfg.max_line_search {
        let xt = bounds.project(&axpy(x, t, d));
        let moved = sub(&xt, x);
        let slope0 = dot(gx, &moved);
        if norm(&moved) == 0.0 || slope0 >= 0.0 {
            hi = t;
            t = 0.5 * (lo + hi);
            continue;
        }
        match eval(&xt, evaluations) {
            Some((ft, gt)) if ft <= fx + cfg.wolfe_c1 * slope0 => {
                let better = best.as_ref().map_or(true, |b| ft < b.1);
                if better {
                    best = Some((xt.clone(), ft, gt.clone()));
                }
                if dot(&gt, &moved) >= cfg.wolfe_c2 * slope0 {
                    return best;
                }
                lo = t;
            }
            _ => hi = t,
        }
        t = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo };
    }
    best
}

/// Backtracking Armijo search along `d` with predicted decrease `c1·t·dec`.
#[allow(clippy::too_many_arguments)]
fn armijo<E>(
    eval: &mut E,
    evaluations: &mut usize,
    bounds: &Bounds<'_>,
    x: &[f64],
    fx: f64,
    d: &[f64],
    dec: f64,
    cfg: &OptimizerConfig,
) -> Option<Step>
where
    E: FnMut(&[f64], &mut usize) -> Option<(f64, Vec<f64>)>,
{
    let mut t = 1.0;
    for _ in 0..cfg.max_line_search {
        let xt = bounds.project(&axpy(x, t, d));
        if let Some((ft, gt)) = eval(&xt, evaluations) {
            if ft < fx - cfg.wolfe_c1 * t * dec {
                return Some((xt, ft, gt));
            }
        }
        t *= 0.5;
    }
    None
}

/// Minimum-norm element of the convex hull of `grads`.
pub fn min_norm_convex(grads: &[Vec<f64>]) -> Vec<f64> {
    let k = grads.len();
    let p = grads[0].len();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&grads[i], &grads[j]));
    let lip = (0..k).map(|i| gram[(i, i)]).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut lam = DVector::from_element(k, 1.0 / k as f64);
    for _ in 0..2000 {
        let grad = &gram * &lam;
        let next = project_simplex(&(&lam - grad / lip));
        let change = (&next - &lam).amax();
        lam = next;
        if change <= 1e-15 {
            break;
        }
    }
    (0..p).map(|c| (0..k).map(|i| lam[i] * grads[i][c]).sum()).collect()
}

fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// `(‖F̃(g, ·)‖_L∞, ∇_g)` on the reduced model.
pub fn reduced_objective(
    rom: &ReducedParametricModel,
    gains: &[f64],
    dense: &DenseNormConfig,
    hints: &[f64],
) -> Result<(NormResult, Vec<f64>)> {
    let g = GainVector::projected(gains);
    let model = rom.at_gains(&g)?;
    let norm = linf_dense_with(&model, dense, hints)?;
    let r = rom.resolvent(&g, Complex::new(0.0, norm.omega_star))?;
    let s = &norm.sample;
    let grad = r.gain_gradient(&s.u, &s.v);
    Ok((norm, grad))
}

/// Algorithm 1 line 7 on a fixed reduced model.
pub fn minimize_reduced(
    rom: &ReducedParametricModel,
    g0: &GainVector,
    cfg: &OptimizerConfig,
    dense: &DenseNormConfig,
) -> Result<InnerResult> {
    let mut last_omega: Option<f64> = None;
    minimize_bound_constrained(
        |g| {
            let hints: Vec<f64> = last_omega.into_iter().collect();
            let (norm, grad) = reduced_objective(rom, g, dense, &hints)?;
            last_omega = Some(norm.omega_star);
            Ok((norm.value, grad))
        },
        g0.as_slice(),
        cfg,
    )
}

/// How the initial reduced model is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Equidistant samples on `[0, ω_max]` per initial gain.
    Mode1,
    /// One interpolation point per initial gain at its full-model H∞ maximizer.
    Mode3,
}

/// Settings of Algorithm 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmConfig {
    pub mode: InitMode,
    pub optimizer: OptimizerConfig,
    pub dense: DenseNormConfig,
    pub greedy: GreedyConfig,
    /// Dominant-pole frequencies per greedy H∞ call.
    pub heuristic_count: usize,
    /// Samples per initial gain in Mode i.
    pub mode1_samples: usize,
    /// Directions used for the Mode i samples.
    pub mode1_directions: InterpolationMode,
    pub tol_gains: f64,
    pub tol_value: f64,
    pub max_outer: usize,
    /// Relative σ mismatch at the newest point that triggers a Hermite repair.
    pub hermite_tol: f64,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self {
            mode: InitMode::Mode3,
            optimizer: OptimizerConfig::default(),
            dense: DenseNormConfig::default(),
            greedy: GreedyConfig::default(),
            heuristic_count: 30,
            mode1_samples: 30,
            mode1_directions: InterpolationMode::Tangential,
            tol_gains: 1e-6,
            tol_value: 1e-6,
            max_outer: 30,
            hermite_tol: 1e-8,
        }
    }
}

impl AlgorithmConfig {
    pub fn validate(&self, p: usize) -> Result<()> {
        self.optimizer.validate(p)?;
        for (name, v) in [
            ("tol_gains", self.tol_gains),
            ("tol_value", self.tol_value),
            ("dense tol", self.dense.tol),
            ("greedy tol", self.greedy.tol),
            ("hermite_tol", self.hermite_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.max_outer == 0 || self.heuristic_count == 0 || self.mode1_samples == 0 {
            return Err(Error::InvalidConfig("iteration and sample counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GainsTol,
    ValueTol,
    MaxIter,
    /// The inner solve failed from every starting point.
    InnerFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::GainsTol => "gains-tol",
            Termination::ValueTol => "value-tol",
            Termination::MaxIter => "max-iter",
            Termination::InnerFailure => "inner-failure",
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub gains: Vec<f64>,
    pub omega: f64,
    pub reduced_value: f64,
    pub full_value: f64,
    pub rom_dimension: usize,
    pub inner_iterations: usize,
    pub hermite_repairs: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DampingOptResult {
    pub g_star: GainVector,
    /// Full-model H∞ value at `g_star`.
    pub hinf_value: f64,
    pub omega_star: f64,
    pub outer_iterations: usize,
    pub rom_dimension_final: usize,
    pub trace: Vec<TraceEntry>,
    pub termination: Termination,
    /// Full-order n×n factorizations performed.
    pub full_factorizations: usize,
    /// Full-order H∞ norm evaluations performed.
    pub full_norm_evaluations: usize,
}

fn initial_gains(init: &[Vec<f64>], p: usize) -> Result<Vec<GainVector>> {
    if init.is_empty() {
        return Err(Error::InvalidConfig("no initial gains".into()));
    }
    init.iter()
        .map(|g| {
            if g.len() != p {
                return Err(Error::Dimension { what: "initial gains", expected: p, actual: g.len() });
            }
            GainVector::new(g.clone())
        })
        .collect()
}

/// Algorithm 1.
pub fn optimize_damping(
    sys: &VibrationalSystem,
    init: &[Vec<f64>],
    cfg: &AlgorithmConfig,
) -> Result<DampingOptResult> {
    let acl = assemble_closed_loop(sys);
    optimize_damping_on(&acl, init, cfg)
}

/// Algorithm 1 on an assembled closed loop; resets and reports its factorization count.
pub fn optimize_damping_on(
    acl: &AffineClosedLoop,
    init: &[Vec<f64>],
    cfg: &AlgorithmConfig,
) -> Result<DampingOptResult> {
    let sys = acl.system();
    let p = sys.dampers();
    cfg.validate(p)?;
    let init = initial_gains(init, p)?;
    acl.reset_factorization_count();
    let est = DominanceEstimator::new(sys)?;
    let count = cfg.heuristic_count.min(sys.dim());
    let mut norm_evals = 0usize;

    let greedy_norm = |g: &GainVector, extra: Option<f64>, evals: &mut usize| -> Result<NormResult> {
        let mut freqs = est.initial_frequencies(g, count)?.omegas;
        if let Some(w) = extra {
            freqs.push(w);
        }
        *evals += 1;
        hinf_greedy(acl, g, &freqs, &cfg.greedy)
    };

    // Lines 1-4.
    let (mut bases, mut g_prev, mut omega_prev, mut best) = match cfg.mode {
        InitMode::Mode1 => {
            let wmax = est.modal().omega[0];
            let k = cfg.mode1_samples;
            let freqs: Vec<f64> =
                (0..k).map(|i| if k == 1 { 0.0 } else { wmax * i as f64 / (k - 1) as f64 }).collect();
            let points: Vec<(GainVector, Vec<f64>)> = init.iter().map(|g| (g.clone(), freqs.clone())).collect();
            let bases = initial_bases(acl, &points, cfg.mode1_directions)?;
            (bases, init[0].clone(), None, None)
        }
        InitMode::Mode3 => {
            let mut bases = ProjectionBasisPair::new(2 * acl.dim());
            let mut best: Option<(GainVector, f64, f64)> = None;
            for g in &init {
                let r = greedy_norm(g, None, &mut norm_evals)?;
                expand(&mut bases, acl, g, r.omega_star, InterpolationMode::Tangential)?;
                if best.as_ref().map_or(true, |b| r.value < b.1) {
                    best = Some((g.clone(), r.value, r.omega_star));
                }
            }
            let (g0, v0, w0) = best.expect("nonempty initial gains");
            (bases, g0.clone(), Some(w0), Some((g0, v0, w0)))
        }
    };

    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut termination = Termination::MaxIter;
    let mut prev_reduced: Option<f64> = None;
    let mut repairs_pending: Option<(GainVector, f64)> = None;

    for j in 1..=cfg.max_outer {
        // Hermite check at the newest point, repaired with further singular pairs.
        let mut repairs = 0;
        let mut rom = reduce(acl, &bases);
        if let Some((g, w)) = repairs_pending.take() {
            let max_repairs = sys.inputs().min(sys.outputs()).saturating_sub(1);
            while repairs < max_repairs {
                let record = bases.log().last().expect("logged point").clone();
                let full = crate::model::eval_sigma_max(acl, &g, w)?;
                let (_, sigma_res) = interpolation_residuals(&rom, &full, &record)?;
                if sigma_res <= cfg.hermite_tol {
                    break;
                }
                repairs += 1;
                log::debug!("Hermite repair {repairs} at omega = {w}, sigma residual {sigma_res:.3e}");
                let out = expand_singular_pair(&mut bases, acl, &g, w, repairs)?;
                rom = reduce(acl, &bases);
                if out.added == 0 {
                    break;
                }
            }
        }

        // Line 7.
        let inner = match minimize_reduced(&rom, &g_prev, &cfg.optimizer, &cfg.dense) {
            Ok(r) => Ok(r),
            Err(e) => {
                log::debug!("inner solve from warm start failed: {e}");
                let mut out = Err(e);
                for g in &init {
                    if let Ok(r) = minimize_reduced(&rom, g, &cfg.optimizer, &cfg.dense) {
                        out = Ok(r);
                        break;
                    }
                }
                out
            }
        };
        let inner = match inner {
            Ok(r) => r,
            Err(e) => {
                log::warn!("inner solve failed at outer iteration {j}: {e}");
                termination = Termination::InnerFailure;
                break;
            }
        };
        let g_hat = GainVector::projected(&inner.gains);

        // Line 8: full-model H∞ at ĝ, warm-started with the previous maximizer.
        let full = greedy_norm(&g_hat, omega_prev, &mut norm_evals)?;
        trace.push(TraceEntry {
            iteration: j,
            gains: g_hat.as_slice().to_vec(),
            omega: full.omega_star,
            reduced_value: inner.value,
            full_value: full.value,
            rom_dimension: bases.dim(),
            inner_iterations: inner.iterations,
            hermite_repairs: repairs,
            note: None,
        });
        log::info!(
            "outer {j}: g = {:?}, reduced {:.12e}, full {:.12e} at omega {:.6e}, k = {}",
            g_hat.as_slice(),
            inner.value,
            full.value,
            full.omega_star,
            bases.dim()
        );
        if best.as_ref().map_or(true, |b| full.value < b.1) {
            best = Some((g_hat.clone(), full.value, full.omega_star));
        }

        if j >= 2 {
            let a = g_hat.as_slice();
            let b = g_prev.as_slice();
            let diff = norm(&sub(a, b));
            let sum = norm(&a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<f64>>());
            let pv = prev_reduced.unwrap_or(f64::NAN);
            if diff < 0.5 * cfg.tol_gains * sum {
                termination = Termination::GainsTol;
                break;
            }
            if (inner.value - pv).abs() < 0.5 * cfg.tol_value * (inner.value + pv).abs() {
                termination = Termination::ValueTol;
                break;
            }
        }
        if j == cfg.max_outer {
            break;
        }

        // Line 9.
        match expand(&mut bases, acl, &g_hat, full.omega_star, InterpolationMode::Tangential) {
            Ok(out) => {
                if out.stagnation {
                    if let Some(t) = trace.last_mut() {
                        t.note = Some("stagnation".into());
                    }
                } else {
                    repairs_pending = Some((g_hat.clone(), full.omega_star));
                }
            }
            Err(e) => {
                if let Some(t) = trace.last_mut() {
                    t.note = Some(format!("{e}"));
                }
            }
        }
        prev_reduced = Some(inner.value);
        g_prev = g_hat;
        omega_prev = Some(full.omega_star);
    }

    let (g_star, hinf_value, omega_star) = match best {
        Some(b) => b,
        None => {
            let r = greedy_norm(&init[0], None, &mut norm_evals)?;
            (init[0].clone(), r.value, r.omega_star)
        }
    };
    Ok(DampingOptResult {
        g_star,
        hinf_value,
        omega_star,
        outer_iterations: trace.len(),
        rom_dimension_final: bases.dim(),
        trace,
        termination,
        full_factorizations: acl.factorization_count(),
        full_norm_evaluations: norm_evals,
    })
}
