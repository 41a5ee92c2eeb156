//! The n-mass oscillator benchmark family and the naive full-order oracle.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grad::{hinf_gradient, GradientContext};
use crate::linalg::{RMat, RVec};
use crate::linf::{hinf_dense_full, DenseNormConfig};
use crate::modal::critical_damping;
use crate::model::{assemble_closed_loop, GainVector, VibrationalSystem};
use crate::optim::{minimize_bound_constrained, DampingOptResult, InnerTermination, OptimizerConfig, Termination};

/// Largest n the naive oracle accepts without an explicit override.
pub const NAIVE_SIZE_LIMIT: usize = 200;

/// Internal-damping regime of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Problem {
    /// α_c = 10⁻⁵.
    A,
    /// α_c = 10⁻².
    B,
    Custom(f64),
}

impl Problem {
    pub fn alpha_c(self) -> f64 {
        match self {
            Problem::A => 1e-5,
            Problem::B => 1e-2,
            Problem::Custom(a) => a,
        }
    }

    /// The four initial parameters; the first is also the naive starting point.
    pub fn initial_gains(self) -> Vec<Vec<f64>> {
        let (lo, hi) = match self {
            Problem::A => (10.0, 100.0),
            _ => (100.0, 1000.0),
        };
        vec![vec![lo, lo], vec![lo, hi], vec![hi, lo], vec![hi, hi]]
    }

    pub fn label(self) -> alloc::string::String {
        match self {
            Problem::A => "a".into(),
            Problem::B => "b".into(),
            Problem::Custom(a) => format!("custom:{a}"),
        }
    }
}

/// `E₂(r₀ .. r₀+len, c₀ .. c₀+len) = diag(weights)`, 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationBlock {
    pub first_row: usize,
    pub first_col: usize,
    pub weights: Vec<f64>,
}

/// An n-mass chain with n+1 springs, grounded at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorSpec {
    pub n: usize,
    /// k₁ … k_{n+1}.
    pub stiffness: Vec<f64>,
    /// m₁ … m_n.
    pub masses: Vec<f64>,
    pub alpha_c: f64,
    /// 1-based damper positions; damper at j couples masses j and j+1.
    pub dampers: Vec<usize>,
    /// 1-based inclusive range of observed masses.
    pub outputs: (usize, usize),
    pub inputs: usize,
    pub excitation: Vec<ExcitationBlock>,
}

impl OscillatorSpec {
    /// The n = 700 configuration.
    pub fn paper(problem: Problem, j: usize, k: usize) -> Self {
        let n = 700;
        let masses = (1..=n).map(|i| paper_mass(i as f64)).collect();
        Self {
            n,
            stiffness: vec![10.0; n + 1],
            masses,
            alpha_c: problem.alpha_c(),
            dampers: vec![j, k],
            outputs: (290, 309),
            inputs: 10,
            excitation: vec![
                ExcitationBlock { first_row: 1, first_col: 1, weights: vec![5.0, 4.0, 3.0, 2.0, 1.0] },
                ExcitationBlock { first_row: 696, first_col: 6, weights: vec![5.0, 4.0, 3.0, 2.0, 1.0] },
            ],
        }
    }

    /// Desk-scale analog on n masses: the n = 700 mass profile sampled at
    /// x = i·700/n, four observed masses around the profile break, and
    /// weights (2, 1) on the first and last two masses.
    pub fn desk(n: usize, problem: Problem, j: usize, k: usize) -> Self {
        let masses = (1..=n).map(|i| paper_mass(i as f64 * 700.0 / n as f64)).collect();
        let brk = 3 * n / 7;
        Self {
            n,
            stiffness: vec![10.0; n + 1],
            masses,
            alpha_c: problem.alpha_c(),
            dampers: vec![j, k],
            outputs: (brk.saturating_sub(1).max(1), (brk + 2).min(n)),
            inputs: 4,
            excitation: vec![
                ExcitationBlock { first_row: 1, first_col: 1, weights: vec![2.0, 1.0] },
                ExcitationBlock { first_row: n - 1, first_col: 3, weights: vec![2.0, 1.0] },
            ],
        }
    }

    /// The default n = 50 analog.
    pub fn desk50(problem: Problem, j: usize, k: usize) -> Self {
        Self::desk(50, problem, j, k)
    }

    /// Maps an n = 700 damper position to this spec's scale.
    pub fn scale_position(&self, p: usize) -> usize {
        let s = (p as f64 * self.n as f64 / 700.0 + 0.5) as usize;
        s.clamp(1, self.n - 1)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if n < 2 {
            return bad(format!("oscillator needs at least two masses, got {n}"));
        }
        if self.stiffness.len() != n + 1 || self.masses.len() != n {
            return bad(format!("expected {} stiffnesses and {n} masses", n + 1));
        }
        if let Some(i) = self.stiffness.iter().position(|&k| !(k > 0.0)) {
            return bad(format!("stiffness k{} must be positive", i + 1));
        }
        if let Some(i) = self.masses.iter().position(|&m| !(m > 0.0)) {
            return bad(format!("mass m{} must be positive", i + 1));
        }
        if !(self.alpha_c >= 0.0) {
            return bad(format!("alpha_c must be nonnegative, got {}", self.alpha_c));
        }
        if self.dampers.is_empty() {
            return bad("no damper positions".into());
        }
        for &j in &self.dampers {
            if j < 1 || j + 1 > n {
                return bad(format!("damper position {j} outside 1..{}", n - 1));
            }
        }
        let (a, b) = self.outputs;
        if a < 1 || b > n || a > b {
            return bad(format!("output range {a}..{b} outside 1..{n}"));
        }
        for blk in &self.excitation {
            let len = blk.weights.len();
            if blk.first_row < 1 || blk.first_row + len - 1 > n || blk.first_col < 1 || blk.first_col + len - 1 > self.inputs
            {
                return bad("excitation block out of range".into());
            }
        }
        Ok(())
    }
}

fn paper_mass(x: f64) -> f64 {
    if x <= 300.0 {
        200.3 - 0.6 * x
    } else {
        0.4 * x - 100.2
    }
}

/// Tridiagonal stiffness from the spring stencil.
pub fn chain_stiffness(k: &[f64]) -> RMat {
    let n = k.len() - 1;
    let mut m = RMat::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = k[i] + k[i + 1];
        if i + 1 < n {
            m[(i, i + 1)] = -k[i + 1];
            m[(i + 1, i)] = -k[i + 1];
        }
    }
    m
}

pub fn build_oscillator(spec: &OscillatorSpec) -> Result<VibrationalSystem> {
    spec.validate()?;
    let n = spec.n;
    let mass = RMat::from_diagonal(&RVec::from_column_slice(&spec.masses));
    let stiffness = chain_stiffness(&spec.stiffness);
    let cint = critical_damping(&mass, &stiffness)? * spec.alpha_c;
    let mut b2 = RMat::zeros(n, spec.dampers.len());
    for (c, &j) in spec.dampers.iter().enumerate() {
        b2[(j - 1, c)] += 1.0;
        b2[(j, c)] -= 1.0;
    }
    let mut e2 = RMat::zeros(n, spec.inputs);
    for blk in &spec.excitation {
        for (t, &w) in blk.weights.iter().enumerate() {
            e2[(blk.first_row - 1 + t, blk.first_col - 1 + t)] = w;
        }
    }
    let (a, b) = spec.outputs;
    let mut h1 = RMat::zeros(b - a + 1, n);
    for (r, col) in (a - 1..b).enumerate() {
        h1[(r, col)] = 1.0;
    }
    VibrationalSystem::new(mass, cint, stiffness, b2, e2, h1)
}

/// Optimizes the full-order objective directly, with dense L∞ norms of the
/// 2n first-order realization, starting from `g0`.
pub fn naive_optimize(
    sys: &VibrationalSystem,
    g0: &[f64],
    cfg: &OptimizerConfig,
    dense: &DenseNormConfig,
    allow_large: bool,
) -> Result<DampingOptResult> {
    if sys.dim() > NAIVE_SIZE_LIMIT && !allow_large {
        return Err(Error::SizeGuard { n: sys.dim(), limit: NAIVE_SIZE_LIMIT });
    }
    let acl = assemble_closed_loop(sys);
    let start = GainVector::new(g0.to_vec())?;
    sys.check_gains(&start)?;
    let mut evaluations = 0usize;
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let inner = minimize_bound_constrained(
        |g| {
            evaluations += 1;
            let gv = GainVector::projected(g);
            let norm = hinf_dense_full(&acl, &gv, dense)?;
            let ctx = GradientContext::new(&acl, &gv, &norm)?;
            if best.as_ref().map_or(true, |b| norm.value < b.1) {
                best = Some((g.to_vec(), norm.value, norm.omega_star));
            }
            Ok((norm.value, hinf_gradient(&acl, &ctx)))
        },
        start.as_slice(),
        cfg,
    )?;
    let (g, value, omega) = best.expect("at least one evaluation");
    Ok(DampingOptResult {
        g_star: GainVector::projected(&g),
        hinf_value: value,
        omega_star: omega,
        outer_iterations: inner.iterations,
        rom_dimension_final: 2 * sys.dim(),
        trace: Vec::new(),
        termination: match inner.termination {
            InnerTermination::MaxIter => Termination::MaxIter,
            _ => Termination::ValueTol,
        },
        full_factorizations: acl.factorization_count(),
        full_norm_evaluations: evaluations,
    })
}
