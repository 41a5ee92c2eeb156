mod common;

use common::*;
use dampopt_core::bench::{build_oscillator, OscillatorSpec, Problem};
use dampopt_core::linalg::{c, modulus, CMat, CVec, C64};
use dampopt_core::model::{assemble_closed_loop, eval_sigma_max, eval_transfer, GainVector};
use dampopt_core::rom::{
    check_hermite, expand, initial_bases, interpolation_directions, reduce, InterpolationMode, ProjectionBasisPair,
    RecordStatus,
};
use nalgebra::Complex;
use rand::Rng;

fn random_orthonormal(r: &mut rand_chacha::ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    let m = CMat::from_fn(rows, cols, |_, _| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
    m.qr().q()
}

#[test]
fn one_point_full_mode_siso_gives_one_column() {
    let sys = scalar_system(2.0, 0.1, 3.0);
    let acl = assemble_closed_loop(&sys);
    let mut bases = ProjectionBasisPair::new(2);
    let out = expand(&mut bases, &acl, &GainVector::new(vec![0.5]).unwrap(), 0.8, InterpolationMode::Full).unwrap();
    assert_eq!(out.added, 1);
    assert_eq!(bases.dim(), 1);
    assert!(bases.orthonormality_error() < 1e-14);
}

#[test]
fn duplicate_point_stagnates() {
    let mut r = rng(21);
    let sys = random_system(&mut r, 6, 2, 2, 2, 0.1);
    let acl = assemble_closed_loop(&sys);
    let g = random_gains(&mut r, 2, 0.1, 1.0);
    let mut bases = ProjectionBasisPair::new(12);
    assert_eq!(expand(&mut bases, &acl, &g, 0.5, InterpolationMode::Tangential).unwrap().added, 1);
    let again = expand(&mut bases, &acl, &g, 0.5, InterpolationMode::Tangential).unwrap();
    assert!(again.stagnation);
    assert_eq!(bases.dim(), 1);
    assert_eq!(bases.log()[1].status, RecordStatus::Stagnation);
    let full = expand(&mut bases, &acl, &g, 0.5, InterpolationMode::Full).unwrap();
    assert_eq!(full.added, 1);
    assert_eq!(bases.dim(), 2);
}

#[test]
fn four_gains_many_frequencies_tangential() {
    let sys = build_oscillator(&OscillatorSpec::desk(100, Problem::B, 20, 48)).unwrap();
    let acl = assemble_closed_loop(&sys);
    let wmax = dampopt_core::modal::modal_transform(sys.mass(), sys.stiffness()).unwrap().omega[0];
    let gains: Vec<GainVector> =
        Problem::B.initial_gains().into_iter().map(|g| GainVector::new(g).unwrap()).collect();
    // For fixed ω and u the right states X(g) lie in span{Q₀⁻¹E₂u, Q₀⁻¹b₁, Q₀⁻¹b₂},
    // so p + 1 = 3 gains per frequency is the most that is generically independent.
    let few: Vec<f64> = (1..=5).map(|i| wmax * i as f64 / 5.0).collect();
    let pts: Vec<_> = gains[..3].iter().map(|g| (g.clone(), few.clone())).collect();
    assert_eq!(initial_bases(&acl, &pts, InterpolationMode::Tangential).unwrap().dim(), 15);
    // 120 candidates exceed the numerical rank of the family; the dependent ones are deflated.
    let many: Vec<f64> = (0..30).map(|i| wmax * i as f64 / 29.0).collect();
    let pts: Vec<_> = gains.iter().map(|g| (g.clone(), many.clone())).collect();
    let bases = initial_bases(&acl, &pts, InterpolationMode::Tangential).unwrap();
    assert_eq!(bases.log().len(), 120);
    let added = bases.log().iter().filter(|r| r.status == RecordStatus::Added).count();
    assert_eq!(bases.dim(), added);
    assert!(bases.dim() > 60 && bases.dim() <= 120);
    assert!(bases.orthonormality_error() < 1e-12);
}

#[test]
fn direction_counts() {
    let mut r = rng(22);
    let sys = random_system(&mut r, 30, 1, 10, 20, 0.1);
    let acl = assemble_closed_loop(&sys);
    let s = eval_sigma_max(&acl, &GainVector::new(vec![0.3]).unwrap(), 0.7).unwrap();
    let (right, left) = interpolation_directions(&s, InterpolationMode::Padded);
    assert_eq!((right.len(), left.len()), (10, 10));
    assert!(right.iter().all(|d| d.len() == 10) && left.iter().all(|d| d.len() == 20));
    // Full mode with ℓ ≠ m falls back to the padded directions.
    let (right, left) = interpolation_directions(&s, InterpolationMode::Full);
    assert_eq!((right.len(), left.len()), (10, 10));
    let (right, left) = interpolation_directions(&s, InterpolationMode::Tangential);
    assert_eq!((right.len(), left.len()), (1, 1));

    let sys = random_system(&mut r, 8, 1, 3, 3, 0.1);
    let acl = assemble_closed_loop(&sys);
    let s = eval_sigma_max(&acl, &GainVector::new(vec![0.3]).unwrap(), 0.7).unwrap();
    let (right, left) = interpolation_directions(&s, InterpolationMode::Full);
    assert_eq!((right.len(), left.len()), (3, 3));
}

#[test]
fn tangential_expand_adds_one_column_and_interpolates() {
    let mut r = rng(23);
    let sys = random_system(&mut r, 10, 2, 3, 2, 0.1);
    let acl = assemble_closed_loop(&sys);
    let mut bases = ProjectionBasisPair::new(20);
    for k in 0..5 {
        let g = random_gains(&mut r, 2, 0.0, 2.0);
        let w = r.random_range(0.1..2.0);
        let out = expand(&mut bases, &acl, &g, w, InterpolationMode::Tangential).unwrap();
        assert_eq!(bases.dim(), k + 1);
        let rom = reduce(&acl, &bases);
        let ft = rom.transfer(&g, c(0.0, w)).unwrap();
        let f = &out.sample.value;
        let u = &out.sample.u;
        let v = &out.sample.v;
        assert!((f * u - &ft * u).norm() <= 1e-8 * (f * u).norm());
        assert!((v.adjoint() * f - v.adjoint() * &ft).norm() <= 1e-8 * (v.adjoint() * f).norm());
    }
    assert!(bases.orthonormality_error() < 1e-12);
}

#[test]
fn identity_bases_reproduce_the_full_model() {
    let mut r = rng(24);
    let sys = random_system(&mut r, 4, 2, 2, 3, 0.1);
    let acl = assemble_closed_loop(&sys);
    let id = CMat::identity(8, 8);
    let bases = ProjectionBasisPair::from_parts(id.clone(), id, Vec::new()).unwrap();
    let rom = reduce(&acl, &bases);
    for _ in 0..4 {
        let g = random_gains(&mut r, 2, 0.0, 3.0);
        let s = c(r.random_range(-0.5..0.5), r.random_range(-3.0..3.0));
        let f = eval_transfer(&acl, &g, s).unwrap();
        let ft = rom.transfer(&g, s).unwrap();
        assert!((&f - &ft).norm() <= 1e-12 * f.norm());
    }
}

fn dense_projection_oracle(
    acl: &dampopt_core::model::AffineClosedLoop,
    v: &CMat,
    w: &CMat,
    g: &GainVector,
    s: C64,
) -> CMat {
    let d = w.adjoint() * acl.pencil(g, s).unwrap() * v;
    let b = w.adjoint() * acl.input_block().map(|x| c(x, 0.0));
    let cv = acl.output_block().map(|x| c(x, 0.0)) * v;
    cv * d.lu().solve(&b).unwrap()
}

#[test]
fn random_bases_match_dense_projection() {
    let mut r = rng(25);
    let sys = random_system(&mut r, 6, 3, 2, 2, 0.1);
    let acl = assemble_closed_loop(&sys);
    for k in [1, 3, 7] {
        let v = random_orthonormal(&mut r, 12, k);
        let w = random_orthonormal(&mut r, 12, k);
        let rom = reduce(&acl, &ProjectionBasisPair::from_parts(v.clone(), w.clone(), Vec::new()).unwrap());
        assert_eq!(rom.order(), k);
        let g = random_gains(&mut r, 3, 0.0, 2.0);
        let s = c(0.2, 1.1);
        let want = dense_projection_oracle(&acl, &v, &w, &g, s);
        let got = rom.transfer(&g, s).unwrap();
        assert!((&got - &want).norm() <= 1e-10 * want.norm(), "k = {k}");
    }
}

#[test]
fn one_dimensional_rom_is_a_scalar_rational() {
    let mut r = rng(26);
    let sys = random_system(&mut r, 5, 2, 1, 1, 0.1);
    let acl = assemble_closed_loop(&sys);
    let v = random_orthonormal(&mut r, 10, 1);
    let w = random_orthonormal(&mut r, 10, 1);
    let rom = reduce(&acl, &ProjectionBasisPair::from_parts(v.clone(), w.clone(), Vec::new()).unwrap());
    let g = random_gains(&mut r, 2, 0.0, 1.0);
    let s = c(0.0, 0.9);
    let e = (w.adjoint() * acl.pencil_e().map(|x| c(x, 0.0)) * &v)[(0, 0)];
    let mut a = (w.adjoint() * acl.pencil_a0().map(|x| c(x, 0.0)) * &v)[(0, 0)];
    for (j, &gj) in g.as_slice().iter().enumerate() {
        let l: CVec = acl.selector(j).map(|x| c(x, 0.0));
        a -= (w.adjoint() * &l)[(0, 0)] * (l.transpose() * &v)[(0, 0)] * gj;
    }
    let bt = (w.adjoint() * acl.input_block().map(|x| c(x, 0.0)))[(0, 0)];
    let ct = (acl.output_block().map(|x| c(x, 0.0)) * &v)[(0, 0)];
    let want = ct * bt / (s * e - a);
    let got = rom.transfer(&g, s).unwrap()[(0, 0)];
    assert!(modulus(got - want) <= 1e-12 * modulus(want));
}

#[test]
fn hermite_conditions_at_logged_points() {
    let sys = build_oscillator(&OscillatorSpec::desk(20, Problem::B, 4, 13)).unwrap();
    let acl = assemble_closed_loop(&sys);
    let mut bases = ProjectionBasisPair::new(40);
    let g = GainVector::new(vec![50.0, 120.0]).unwrap();
    expand(&mut bases, &acl, &g, 0.4, InterpolationMode::Full).unwrap();
    expand(&mut bases, &acl, &g, 0.9, InterpolationMode::Tangential).unwrap();
    let rom = reduce(&acl, &bases);
    let full = check_hermite(&acl, &rom, &bases.log()[0]).unwrap();
    assert!(full.value_residual <= 1e-8, "{full:?}");
    assert!(full.derivative_residual <= 1e-4, "{full:?}");
    let tang = check_hermite(&acl, &rom, &bases.log()[1]).unwrap();
    assert!(tang.value_residual <= 1e-8 && tang.sigma_residual <= 1e-8, "{tang:?}");
    assert!(tang.derivative_residual <= 1e-4, "{tang:?}");
    assert!(tang.passes(1e-8, 1e-4));

    // Finite-difference oracle for the derivative match at the tangential point.
    let h = 1e-7;
    let fd = |f: &dyn Fn(f64) -> f64| (f(0.9 + h) - f(0.9 - h)) / (2.0 * h);
    let d_full = fd(&|w| eval_sigma_max(&acl, &g, w).unwrap().sigma_max);
    let d_red = fd(&|w| rom.sample(&g, w).unwrap().sigma_max);
    assert!((d_full - d_red).abs() <= 1e-4 * d_full.abs().max(1.0), "{d_full} vs {d_red}");
}

#[test]
fn reduced_gain_gradient_matches_full_at_tangential_point() {
    let sys = build_oscillator(&OscillatorSpec::desk(20, Problem::B, 4, 13)).unwrap();
    let acl = assemble_closed_loop(&sys);
    let mut bases = ProjectionBasisPair::new(40);
    let g = GainVector::new(vec![50.0, 120.0]).unwrap();
    let out = expand(&mut bases, &acl, &g, 0.3, InterpolationMode::Tangential).unwrap();
    let (u, v) = (&out.sample.u, &out.sample.v);
    let full = acl.resolvent(&g, c(0.0, 0.3)).unwrap();
    let want = full.sigma_gain_gradient(u, v);
    let want_w = full.sigma_frequency_derivative(u, v);
    let rom = reduce(&acl, &bases);
    let red = rom.resolvent(&g, c(0.0, 0.3)).unwrap();
    let got = red.gain_gradient(u, v);
    let scale = want.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() <= 1e-8 * scale, "{got:?} vs {want:?}");
    }
    assert!((red.frequency_derivative(u, v) - want_w).abs() <= 1e-8 * want_w.abs().max(out.sample.sigma_max));
}

#[test]
fn corrupted_basis_fails_the_check() {
    let sys = build_oscillator(&OscillatorSpec::desk(20, Problem::B, 4, 13)).unwrap();
    let acl = assemble_closed_loop(&sys);
    let mut bases = ProjectionBasisPair::new(40);
    let g = GainVector::new(vec![50.0, 120.0]).unwrap();
    for w in [0.2, 0.5, 0.9] {
        expand(&mut bases, &acl, &g, w, InterpolationMode::Full).unwrap();
    }
    let rom = reduce(&acl, &bases);
    assert!(check_hermite(&acl, &rom, &bases.log()[1]).unwrap().passes(1e-8, 1e-4));
    let mut v = bases.v().clone();
    v.column_mut(bases.dim() - 3).fill(Complex::new(0.0, 0.0));
    let broken = ProjectionBasisPair::from_parts(v, bases.w().clone(), bases.log().to_vec()).unwrap();
    let rom = reduce(&acl, &broken);
    let failed = bases.log().iter().any(|rec| match check_hermite(&acl, &rom, rec) {
        Ok(rep) => !rep.passes(1e-8, 1e-4),
        Err(_) => true,
    });
    assert!(failed);
    assert!(broken.orthonormality_error() > 0.5);
}
