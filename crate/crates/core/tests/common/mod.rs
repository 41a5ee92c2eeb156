#![allow(dead_code)]

use dampopt_core::linalg::{RMat, RVec};
use dampopt_core::model::{GainVector, VibrationalSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> RMat {
    RMat::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// `AᵀA / n + shift·I`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> RMat {
    let a = random_matrix(rng, n, n);
    a.transpose() * &a / n as f64 + RMat::identity(n, n) * shift
}

/// Random SPD mass and stiffness, PD internal damping of size `c_scale`.
pub fn random_system(rng: &mut ChaCha8Rng, n: usize, p: usize, m: usize, l: usize, c_scale: f64) -> VibrationalSystem {
    let mass = random_spd(rng, n, 0.5);
    let stiffness = random_spd(rng, n, 0.5);
    let cint = random_spd(rng, n, 0.1) * c_scale;
    VibrationalSystem::new(
        mass,
        cint,
        stiffness,
        random_matrix(rng, n, p),
        random_matrix(rng, n, m),
        random_matrix(rng, l, n),
    )
    .unwrap()
}

pub fn random_gains(rng: &mut ChaCha8Rng, p: usize, lo: f64, hi: f64) -> GainVector {
    GainVector::new((0..p).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// Single-mass system `m q̈ + (c + g) q̇ + k q = w`, `z = q`.
pub fn scalar_system(m: f64, c: f64, k: f64) -> VibrationalSystem {
    let one = RMat::from_element(1, 1, 1.0);
    VibrationalSystem::new(
        RMat::from_element(1, 1, m),
        RMat::from_element(1, 1, c),
        RMat::from_element(1, 1, k),
        one.clone(),
        one.clone(),
        one,
    )
    .unwrap()
}

pub fn diag(v: &[f64]) -> RMat {
    RMat::from_diagonal(&RVec::from_column_slice(v))
}

/// Maximum of `f` over `points` log-spaced samples of `[lo, hi]` plus ω = 0,
/// polished by golden section between the neighbouring samples.
pub fn grid_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect();
    grid.insert(0, 0.0);
    let vals: Vec<f64> = grid.iter().map(|&w| f(w)).collect();
    let i = (0..vals.len()).max_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap()).unwrap();
    let l = grid[i.saturating_sub(1)];
    let r = grid[(i + 1).min(grid.len() - 1)];
    let (w, v) = golden_max(&f, l, r, 200);
    if v > vals[i] {
        (w, v)
    } else {
        (grid[i], vals[i])
    }
}

pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

pub fn golden_min(f: impl Fn(f64) -> f64, a: f64, b: f64, iters: usize) -> (f64, f64) {
    let (x, v) = golden_max(|x| -f(x), a, b, iters);
    (x, -v)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
