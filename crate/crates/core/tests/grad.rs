mod common;

use common::*;
use dampopt_core::bench::{build_oscillator, OscillatorSpec, Problem};
use dampopt_core::grad::{
    hinf_gradient, hinf_gradient_literal, peak_census, smoothness_diagnostics, smoothness_diagnostics_with,
    GradientContext,
};
use dampopt_core::linalg::RMat;
use dampopt_core::linf::{hinf_dense_full, DenseNormConfig};
use dampopt_core::model::{assemble_closed_loop, AffineClosedLoop, GainVector, VibrationalSystem};

fn dense() -> DenseNormConfig {
    DenseNormConfig { tol: 1e-12, ..DenseNormConfig::default() }
}

fn norm(acl: &AffineClosedLoop, g: &[f64]) -> f64 {
    hinf_dense_full(acl, &GainVector::new(g.to_vec()).unwrap(), &dense()).unwrap().value
}

fn fd_gradient(acl: &AffineClosedLoop, g: &[f64]) -> Vec<f64> {
    (0..g.len())
        .map(|j| {
            let h = 1e-6 * (1.0 + g[j].abs());
            let mut gp = g.to_vec();
            let mut gm = g.to_vec();
            gp[j] += h;
            gm[j] -= h;
            (norm(acl, &gp) - norm(acl, &gm)) / (2.0 * h)
        })
        .collect()
}

fn analytic(acl: &AffineClosedLoop, g: &[f64]) -> (Vec<f64>, GradientContext) {
    let gv = GainVector::new(g.to_vec()).unwrap();
    let n = hinf_dense_full(acl, &gv, &dense()).unwrap();
    let ctx = GradientContext::new(acl, &gv, &n).unwrap();
    (hinf_gradient(acl, &ctx), ctx)
}

#[test]
fn collocated_damper_lowers_the_peak() {
    let sys = scalar_system(1.0, 0.05, 1.0);
    let acl = assemble_closed_loop(&sys);
    let (grad, _) = analytic(&acl, &[0.01]);
    assert!(grad[0] < 0.0);
    let fd = fd_gradient(&acl, &[0.01]);
    assert!((grad[0] - fd[0]).abs() <= 1e-5 * fd[0].abs(), "{grad:?} vs {fd:?}");
}

#[test]
fn decoupled_damper_has_zero_component() {
    // Mass 2 is disconnected from inputs and outputs; damper 2 acts on it alone.
    let sys = VibrationalSystem::new(
        diag(&[1.0, 2.0]),
        diag(&[0.05, 0.05]),
        diag(&[1.0, 3.0]),
        RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
        RMat::from_row_slice(2, 1, &[1.0, 0.0]),
        RMat::from_row_slice(1, 2, &[1.0, 0.0]),
    )
    .unwrap();
    let acl = assemble_closed_loop(&sys);
    let (grad, _) = analytic(&acl, &[0.1, 0.7]);
    assert!(grad[0] < 0.0);
    assert_eq!(grad[1], 0.0);
}

#[test]
fn oscillator_gradient_matches_finite_differences_and_literal_formula() {
    let mut r = rng(31);
    let sys = build_oscillator(&OscillatorSpec::desk(10, Problem::B, 2, 7)).unwrap();
    let acl = assemble_closed_loop(&sys);
    let mut checked = 0;
    for _ in 0..6 {
        let g = random_gains(&mut r, 2, 1.0, 50.0);
        let (grad, ctx) = analytic(&acl, g.as_slice());
        if ctx.check_smooth().is_err() {
            continue;
        }
        let fd = fd_gradient(&acl, g.as_slice());
        let scale = fd.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        for j in 0..2 {
            assert!((grad[j] - fd[j]).abs() <= 1e-5 * scale, "{grad:?} vs {fd:?}");
        }
        let lit = hinf_gradient_literal(&acl, &g, ctx.sample.omega, &ctx.sample.u, &ctx.sample.v).unwrap();
        for j in 0..2 {
            assert!((grad[j] - lit[j]).abs() <= 1e-10 * scale, "{grad:?} vs {lit:?}");
        }
        checked += 1;
    }
    assert!(checked >= 3);
}

#[test]
fn scalar_system_is_smooth_in_the_singular_values() {
    let sys = scalar_system(1.0, 0.1, 1.0);
    let acl = assemble_closed_loop(&sys);
    let n = hinf_dense_full(&acl, &GainVector::zeros(1), &dense()).unwrap();
    let rep = smoothness_diagnostics(&n);
    assert_eq!(rep.singular_gap, n.value);
    assert!(!rep.nonsmooth);
}

#[test]
fn identical_decoupled_resonators_are_nonsmooth() {
    let sys = VibrationalSystem::new(
        diag(&[1.0, 1.0]),
        diag(&[0.1, 0.1]),
        diag(&[1.0, 1.0]),
        RMat::from_row_slice(2, 1, &[1.0, -1.0]),
        RMat::identity(2, 2),
        RMat::identity(2, 2),
    )
    .unwrap();
    let acl = assemble_closed_loop(&sys);
    let gv = GainVector::zeros(1);
    let n = hinf_dense_full(&acl, &gv, &dense()).unwrap();
    assert!(smoothness_diagnostics(&n).nonsmooth);
    assert!(GradientContext::new(&acl, &gv, &n).unwrap().check_smooth().is_err());
}

#[test]
fn light_internal_damping_shows_many_peaks() {
    let g = GainVector::new(vec![100.0, 100.0]).unwrap();
    let omegas: Vec<f64> = (0..8_000).map(|i| 1.5 * i as f64 / 8_000.0).collect();
    let report = |problem| {
        let sys = build_oscillator(&OscillatorSpec::desk50(problem, 10, 24)).unwrap();
        let acl = assemble_closed_loop(&sys);
        let n = hinf_dense_full(&acl, &g, &DenseNormConfig::default()).unwrap();
        smoothness_diagnostics_with(&n, &peak_census(&acl, &g, &omegas).unwrap())
    };
    let (a, b) = (report(Problem::A), report(Problem::B));
    assert!(a.peak_count >= 20, "{a:?}");
    assert!(a.peak_count > b.peak_count + 10, "{a:?} {b:?}");
    assert!(a.near_peaks >= 1 && a.second_peak_gap > 0.0);
}
