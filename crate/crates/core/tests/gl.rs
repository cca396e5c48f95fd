use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use num_complex::Complex64;
use proptest::prelude::*;
use vortexlab::canonical::build_ustar;
use vortexlab::error::Error;
use vortexlab::geometry::{self, SurfaceModel};
use vortexlab::gl::*;
use vortexlab::greens::GreenEvaluator;
use vortexlab::harmonic::{harmonic_basis, VortexConfig};
use vortexlab::renorm::w_quadrature;
use vortexlab::vortex::{ball_construction, flux_integrals, BallOptions};

fn poles() -> VortexConfig {
    VortexConfig::new(vec![Vector3::z(), -Vector3::z()], vec![1, 1]).unwrap()
}

fn sphere_ustar(s: &SurfaceModel) -> DiscreteField {
    let gev = GreenEvaluator::new(s);
    let hb = harmonic_basis(s).unwrap();
    DiscreteField::new(s, build_ustar(&gev, &hb, &poles(), &[]).unwrap().field).unwrap()
}

fn plane_wave(s: &SurfaceModel) -> DiscreteField {
    DiscreteField::new(s, s.mesh.positions.iter().map(|p| Complex64::from_polar(1.0, TAU * p.x)).collect()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn potentials_vanish_on_the_unit_circle() {
    for pot in [Potential::Gl, Potential::Mm, Potential::Power { exponent: 1.5 }] {
        assert_eq!(pot.value(1.0), 0.0);
        assert!(pot.value(0.0) > 0.0);
        assert!(pot.growth_constant() > 0.0);
        assert_eq!(Potential::from_name(&pot.name()).unwrap(), pot);
    }
    assert_eq!(Potential::Gl.value(0.5), 0.25);
    assert_eq!(Potential::Mm.value(0.5), 0.5);
    assert!(Potential::from_name("power:3").is_err());
    assert!(Potential::from_name("cubic").is_err());
}

#[test]
fn growth_constant_bounds_potential() {
    for pot in [Potential::Gl, Potential::Mm, Potential::Power { exponent: 1.3 }] {
        let c = pot.growth_constant();
        for k in 0..=400 {
            let s = 2.0 * k as f64 / 400.0;
            assert!(pot.value(s) >= c * (1.0 - s).powi(2) - 1e-12, "{} at {s}", pot.name());
        }
    }
}

proptest! {
    #[test]
    fn potential_derivative_matches_difference(s in 0.0f64..2.0, p in 1.0f64..2.0) {
        let pot = Potential::Power { exponent: p };
        prop_assume!((s - 1.0).abs() > 1e-3);
        let h = 1e-6;
        let fd = (pot.value(s + h) - pot.value(s - h)) / (2.0 * h);
        prop_assert!((fd - pot.derivative(s)).abs() < 1e-5 * (1.0 + fd.abs()));
    }
}

#[test]
fn plane_wave_dirichlet_on_torus() {
    let s = geometry::flat_torus(7).unwrap();
    let e = energy_in(&s, &plane_wave(&s), 0.1, &Potential::Gl).unwrap();
    assert!(rel(e.dirichlet, 2.0 * PI * PI) < 0.01, "{}", e.dirichlet);
    assert!(e.potential.abs() < 1e-12);
}

#[test]
fn constant_unit_field_on_torus_has_zero_energy() {
    let s = geometry::flat_torus(4).unwrap();
    let u = DiscreteField::constant(&s, Complex64::new(0.6, 0.8));
    let e = energy_in(&s, &u, 0.05, &Potential::Gl).unwrap();
    assert!(e.total.abs() < 1e-12);
}

#[test]
fn halving_epsilon_quadruples_potential() {
    let s = geometry::unit_sphere(3).unwrap();
    let u = random_field(&s, 3);
    let a = energy_in(&s, &u, 0.2, &Potential::Gl).unwrap();
    let b = energy_in(&s, &u, 0.1, &Potential::Gl).unwrap();
    assert!(rel(b.potential, 4.0 * a.potential) < 1e-14);
    assert!(rel(b.dirichlet, a.dirichlet) < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn energy_is_gauge_invariant(beta in -PI..PI, seed in 0u64..1000) {
        let s = geometry::unit_sphere(2).unwrap();
        let u = random_field(&s, seed);
        let v = u.scaled(Complex64::from_polar(1.0, beta));
        let a = energy_in(&s, &u, 0.1, &Potential::Gl).unwrap();
        let b = energy_in(&s, &v, 0.1, &Potential::Gl).unwrap();
        prop_assert!((a.total - b.total).abs() < 1e-12 * a.total);
        let a = energy_ex(&s, &u, 0.1, &Potential::Gl).unwrap();
        let b = energy_ex(&s, &v, 0.1, &Potential::Gl).unwrap();
        prop_assert!((a.total - b.total).abs() < 1e-12 * a.total);
    }
}

#[test]
fn shape_term_of_unit_field_on_sphere_is_half_area() {
    let s = geometry::unit_sphere(4).unwrap();
    let u = sphere_ustar(&s);
    let ei = energy_in(&s, &u, 0.1, &Potential::Gl).unwrap();
    let ee = energy_ex(&s, &u, 0.1, &Potential::Gl).unwrap();
    assert!(rel(ee.total - ei.total, TAU) < 0.005, "{}", ee.total - ei.total);
    assert!(rel(ee.shape, TAU) < 0.005);
    let half = energy_ex(&s, &u.scaled(Complex64::new(0.5, 0.0)), 0.1, &Potential::Gl).unwrap();
    assert!(rel(half.shape, 0.25 * ee.shape) < 1e-14);
}

#[test]
fn zero_field_has_no_dirichlet_term() {
    let s = geometry::unit_sphere(3).unwrap();
    let z = DiscreteField::constant(&s, Complex64::new(0.0, 0.0));
    let ei = energy_in(&s, &z, 0.1, &Potential::Gl).unwrap();
    let ee = energy_ex(&s, &z, 0.1, &Potential::Gl).unwrap();
    assert_eq!(ei.dirichlet, 0.0);
    assert_eq!(ee.total, ei.total);
    let area: f64 = s.dec.star0.iter().sum();
    assert!(rel(ei.potential, area / (4.0 * 0.01)) < 1e-12);
}

#[test]
fn extrinsic_energy_needs_an_embedding() {
    let s = geometry::flat_torus(3).unwrap();
    let u = DiscreteField::constant(&s, Complex64::new(1.0, 0.0));
    assert!(matches!(energy_ex(&s, &u, 0.1, &Potential::Gl), Err(Error::Unsupported(_))));
}

#[test]
fn normal_magnetization_on_sphere() {
    let s = geometry::unit_sphere(5).unwrap();
    let e = energy_mm(&s, &MmField::normal(&s), 0.1, &Potential::Gl).unwrap();
    assert!(rel(e.dirichlet, 4.0 * PI) < 0.005, "{}", e.dirichlet);
    let area: f64 = s.dec.star0.iter().sum();
    assert!(rel(e.potential, area / (4.0 * 0.01)) < 1e-12);
}

#[test]
fn tangential_magnetization_matches_extrinsic() {
    let s = geometry::unit_sphere(5).unwrap();
    let u = sphere_ustar(&s);
    let mm = energy_mm(&s, &MmField::from_tangent(u.clone()), 0.1, &Potential::Gl).unwrap();
    let ex = energy_ex(&s, &u, 0.1, &Potential::Gl).unwrap();
    assert!(rel(mm.total, ex.total) < 0.005, "{} {}", mm.total, ex.total);
    assert!(rel(mm.decomposed, ex.total) < 1e-12);
}

#[test]
fn magnetization_constraint_is_enforced() {
    let s = geometry::unit_sphere(2).unwrap();
    let mut mf = MmField::normal(&s);
    mf.mperp[0] = 0.5;
    assert!(matches!(energy_mm(&s, &mf, 0.1, &Potential::Gl), Err(Error::InvalidInput(_))));
    assert!(MmField::new(&s, mf.m.clone(), mf.mperp.clone()).is_err());
}

#[test]
fn field_checks_reject_bad_input() {
    let s = geometry::unit_sphere(2).unwrap();
    let t = geometry::flat_torus(3).unwrap();
    let u = random_field(&s, 1);
    assert!(energy_in(&t, &u, 0.1, &Potential::Gl).is_err());
    assert!(energy_in(&s, &u, 0.0, &Potential::Gl).is_err());
    assert!(energy_in(&s, &u, -0.1, &Potential::Gl).is_err());
    let mut bad = u.clone();
    bad.values[3] = Complex64::new(f64::NAN, 0.0);
    assert!(energy_in(&s, &bad, 0.1, &Potential::Gl).is_err());
    assert!(DiscreteField::new(&s, vec![Complex64::new(1.0, 0.0); 5]).is_err());
    assert!(energy_in(&s, &u, 0.1, &Potential::Power { exponent: 3.0 }).is_err());
}

#[test]
fn discrete_dirichlet_of_canonical_field_matches_quadrature() {
    let s = geometry::unit_sphere(5).unwrap();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let u = sphere_ustar(&s);
    let cfg = poles();
    let sigma = 0.3;
    let mut dir = 0.0;
    for (k, e) in s.mesh.edges.iter().enumerate() {
        let mid = ((s.mesh.positions[e[0]] + s.mesh.positions[e[1]]) / 2.0).normalize();
        if cfg.points.iter().all(|a| s.geodesic_dist(a, &mid) > sigma) {
            let z = u.values[e[1]] * Complex64::from_polar(1.0, -s.frames.rho[k]) - u.values[e[0]];
            dir += 0.5 * s.dec.star1[k] * z.norm_sqr();
        }
    }
    let reference = w_quadrature(&gev, &hb, &cfg, &[], sigma).unwrap() - 2.0 * PI * sigma.ln();
    assert!(rel(dir, reference) < 0.03, "{dir} {reference}");
}

#[test]
fn minimizer_trace_is_monotone() {
    let s = geometry::unit_sphere(3).unwrap();
    let r = minimize_energy(&s, Functional::Intrinsic, &random_field(&s, 11), 0.2, &Potential::Gl, &GlOptions::default())
        .unwrap();
    assert!(r.converged);
    for w in r.trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
    }
    assert!(r.field.max_modulus() <= 1.0 + 1e-12);
    let e = energy_in(&s, &r.field, 0.2, &Potential::Gl).unwrap();
    assert!(rel(e.total, r.energy) < 1e-10);
}

#[test]
fn sphere_minimizer_has_two_antipodal_vortices() {
    let s = geometry::unit_sphere(6).unwrap();
    let opts = GlOptions::default();
    let coarse = minimize_energy(&s, Functional::Intrinsic, &random_field(&s, 7), 0.08, &Potential::Gl, &opts).unwrap();
    let r = minimize_energy(&s, Functional::Intrinsic, &coarse.field, 0.05, &Potential::Gl, &opts).unwrap();
    assert!(r.converged);
    let balls = ball_construction(&s, &r.field, 0.05, 0.2, &BallOptions::default()).unwrap();
    let degrees: Vec<i32> = balls.balls.iter().map(|b| b.degree).collect();
    assert_eq!(degrees, vec![1, 1]);
    let sep = s.geodesic_dist(&balls.balls[0].center, &balls.balls[1].center);
    assert!(sep >= 0.9 * PI, "{sep}");
}

#[test]
fn torus_minimizer_has_no_vortices() {
    let s = geometry::flat_torus(5).unwrap();
    let hb = harmonic_basis(&s).unwrap();
    let opts = GlOptions::default();
    let mut field = random_field(&s, 5);
    let mut energies = vec![];
    for eps in [0.1, 0.05] {
        let r = minimize_energy(&s, Functional::Intrinsic, &field, eps, &Potential::Gl, &opts).unwrap();
        assert!(r.converged);
        let balls = ball_construction(&s, &r.field, eps, 0.2, &BallOptions::default()).unwrap();
        assert!(balls.balls.is_empty(), "{:?}", balls.balls);
        let min = r.field.values.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        assert!(min > 0.9, "{min}");
        let phi = flux_integrals(&s, &r.field, &hb).unwrap();
        for x in &phi {
            let off = x - TAU * (x / TAU).round();
            assert!(off.abs() < 0.05, "{phi:?}");
        }
        energies.push(r.energy);
        field = r.field;
    }
    assert!(energies[1] <= energies[0] + 1e-9, "{energies:?}");
}

#[test]
fn micromagnetic_minimizer_keeps_unit_length() {
    let s = geometry::unit_sphere(3).unwrap();
    let r = minimize_energy_mm(&s, &random_magnetization(&s, 2), 0.2, &Potential::Gl, &GlOptions::default()).unwrap();
    let mf = MmField::new(&s, r.field.clone(), r.mperp.clone().unwrap()).unwrap();
    assert!(mf.constraint_violation() < 1e-8);
    for w in r.trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
    }
}

// F(s) = 1 − s penalizes M⊥² directly, which is what keeps ∫M⊥² small
#[test]
fn micromagnetic_decomposition_error_is_order_eps_log() {
    let s = geometry::unit_sphere(5).unwrap();
    let opts = GlOptions::default();
    let mut init = random_magnetization(&s, 4);
    let mut ratios = vec![];
    for eps in [0.1, 0.05, 0.025] {
        let r = minimize_energy_mm(&s, &init, eps, &Potential::Mm, &opts).unwrap();
        assert!(r.converged);
        let mf = MmField::new(&s, r.field.clone(), r.mperp.clone().unwrap()).unwrap();
        let e = energy_mm(&s, &mf, eps, &Potential::Mm).unwrap();
        assert!(rel(e.total, r.energy) < 1e-10);
        ratios.push((e.total - e.decomposed).abs() / (eps * eps.ln().abs()));
        init = mf;
    }
    for w in ratios.windows(2) {
        assert!(w[1] <= w[0], "{ratios:?}");
    }
}

#[test]
fn profile_is_monotone_and_bounded() {
    let sol = radial_profile_in(0.1, 1000, &Potential::Gl).unwrap();
    assert_eq!(*sol.values.last().unwrap(), 1.0);
    assert_eq!(sol.values[0], 0.0);
    for w in sol.values.windows(2) {
        assert!(w[1] >= w[0] - 1e-12);
    }
    assert!(sol.residual < 1e-8);
    let mm = radial_profile_mm(0.1, 1000, &Potential::Gl).unwrap();
    assert!((mm.values.last().unwrap().sin() - 1.0).abs() < 1e-14);
    assert!(mm.values.iter().all(|&p| (0.0..=PI / 2.0 + 1e-14).contains(&p)));
}

#[test]
fn profile_energy_is_finite_near_half() {
    let sol = radial_profile_in(0.49, 500, &Potential::Gl).unwrap();
    assert!(sol.i_value.is_finite());
    assert!(sol.i_value > PI * (1.0 / 0.49f64).ln());
    assert!(radial_profile_in(0.5, 500, &Potential::Gl).is_err());
    assert!(radial_profile_in(0.1, 5, &Potential::Gl).is_err());
}

#[test]
fn shifted_profile_energy_decreases_and_stabilizes() {
    let ts = [0.2, 0.1, 0.05, 0.025, 0.0125];
    let est = iota_estimate(ProfileKind::Intrinsic, &Potential::Gl, &ts, 2000).unwrap();
    for w in est.shifted.windows(2) {
        assert!(w[1] < w[0], "{:?}", est.shifted);
    }
    assert!(est.increment < 1e-3, "{}", est.increment);
    let mm = iota_estimate(ProfileKind::Micromagnetic, &Potential::Gl, &ts, 2000).unwrap();
    for w in mm.shifted.windows(2) {
        assert!(w[1] < w[0], "{:?}", mm.shifted);
    }
}

// With f = sin φ one has f′² = cos²φ φ′² ≤ φ′², and sin²φ/r² is shared, so
// every micromagnetic profile is dominated by an intrinsic competitor.
#[test]
fn micromagnetic_profile_energy_dominates_intrinsic() {
    for t in [0.2, 0.1, 0.05] {
        let a = radial_profile_in(t, 1000, &Potential::Gl).unwrap();
        let b = radial_profile_mm(t, 1000, &Potential::Gl).unwrap();
        assert!(b.i_value >= a.i_value, "{t} {} {}", a.i_value, b.i_value);
    }
}

#[test]
fn checkpoint_round_trip() {
    let s = geometry::unit_sphere(2).unwrap();
    let u = random_field(&s, 9);
    let pot = Potential::Power { exponent: 1.5 };
    let text = Checkpoint::from_field(&u, 0.07, &pot).to_text();
    let back = parse_checkpoint(text.as_bytes()).unwrap();
    assert_eq!(back.epsilon, 0.07);
    assert_eq!(back.potential, pot);
    assert_eq!(back.field(&s).unwrap().values, u.values);
    let t = geometry::flat_torus(3).unwrap();
    assert!(back.field(&t).is_err());

    let mf = random_magnetization(&s, 9);
    let text = Checkpoint::from_magnetization(&mf, 0.1, &Potential::Gl).to_text();
    let back = parse_checkpoint(text.as_bytes()).unwrap();
    assert_eq!(back.mperp.as_deref(), Some(&mf.mperp[..]));
}

#[test]
fn checkpoint_rejects_malformed_text() {
    let s = geometry::unit_sphere(1).unwrap();
    let text = Checkpoint::from_field(&random_field(&s, 1), 0.1, &Potential::Gl).to_text();
    assert!(parse_checkpoint(b"").is_err());
    assert!(parse_checkpoint(text.replace("# sites:", "# site:").as_bytes()).is_err());
    let truncated: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
    assert!(parse_checkpoint(truncated.as_bytes()).is_err());
    assert!(parse_checkpoint(text.replacen("e-", "x-", 1).as_bytes()).is_err());
    assert!(parse_checkpoint(&[0xff, 0xfe, 0x00]).is_err());
}

proptest! {
    #[test]
    fn checkpoint_parser_never_panics(data in proptest::collection::vec(any::<u8>(), 0..400)) {
        let _ = parse_checkpoint(&data);
    }
}

#[test]
fn torus_expansion_residual_is_small() {
    let s = geometry::flat_torus(5).unwrap();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let eps = 0.05;
    let r = minimize_energy(&s, Functional::Intrinsic, &random_field(&s, 5), eps, &Potential::Gl, &GlOptions::default())
        .unwrap();
    let row = expansion_report(&gev, &hb, &r.field, eps, &Potential::Gl, Functional::Intrinsic, 1.2, 0.2).unwrap();
    assert_eq!(row.n, 0);
    assert!(row.residual.abs() < 0.02 * (1.0 + row.w), "{row:?}");
}
