mod common;

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use num_complex::Complex64;
use vortexlab::canonical::*;
use vortexlab::error::Error;
use vortexlab::geometry::{self, mesh, wrap_angle};
use vortexlab::greens::{psi_field, GreenEvaluator};
use vortexlab::harmonic::{harmonic_basis, lattice, VortexConfig};

fn p(x: f64, y: f64) -> Vector3<f64> {
    Vector3::new(x, y, 0.0)
}

fn dipole() -> VortexConfig {
    VortexConfig::new(vec![p(0.25, 0.25), p(0.75, 0.75)], vec![1, -1]).unwrap()
}

fn poles() -> VortexConfig {
    VortexConfig::new(vec![Vector3::z(), -Vector3::z()], vec![1, 1]).unwrap()
}

fn row_loop(n: usize, j: usize) -> Vec<usize> {
    (0..=n).map(|i| j * n + i % n).collect()
}

/// Spherical excess of a geodesic triangle.
fn spherical_area(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    let (a, b, c) = (a.normalize(), b.normalize(), c.normalize());
    let num = a.dot(&b.cross(&c));
    let den = 1.0 + a.dot(&b) + b.dot(&c) + c.dot(&a);
    2.0 * num.atan2(den)
}

#[test]
fn latitude_circle_integral_on_sphere() {
    let s = geometry::unit_sphere(2).unwrap();
    let gev = GreenEvaluator::new(&s);
    let psi = psi_field(&gev, &poles()).unwrap();
    for &theta in &[0.3f64, 0.9, 1.4, 2.2] {
        let n = 400;
        let pt = |k: usize| {
            let ph = TAU * k as f64 / n as f64;
            Vector3::new(theta.sin() * ph.cos(), theta.sin() * ph.sin(), theta.cos())
        };
        let pieces: Vec<_> = (0..n).map(|k| (pt(k), pt(k + 1))).collect();
        let got = psi.line_integral(&pieces).unwrap();
        // counterclockwise about N encloses the N vortex and the polar cap
        let expected = TAU - TAU * (1.0 - theta.cos());
        assert!((got - expected).abs() < 0.01 * TAU, "θ={theta}: {got} vs {expected}");
    }
}

#[test]
fn flux_shifts_projection_onto_dx_by_one() {
    let s = geometry::flat_torus(4).unwrap();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let j0 = jstar(&gev, &hb, &dipole(), &[0.0, 0.0]).unwrap();
    let j1 = jstar(&gev, &hb, &dipole(), &[1.0, 0.0]).unwrap();
    let d = s.dec.inner1(&j1, &hb.forms[0]) - s.dec.inner1(&j0, &hb.forms[0]);
    assert!((d - 1.0).abs() < 1e-12, "{d}");
    let d2 = s.dec.inner1(&j1, &hb.forms[1]) - s.dec.inner1(&j0, &hb.forms[1]);
    assert!(d2.abs() < 1e-12);
}

#[test]
fn jstar_is_weakly_coclosed() {
    let s = geometry::flat_torus(5).unwrap();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let j = jstar(&gev, &hb, &dipole(), &[0.3, -0.2]).unwrap();
    // ∫ (j*, df) vol = 0 for smooth f
    let f: Vec<f64> = s.mesh.positions.iter().map(|q| (TAU * q.x).sin() * (TAU * q.y).cos()).collect();
    let df = s.dec.apply_d0(&f);
    let weak = s.dec.inner1(&j, &df);
    let scale = s.dec.inner1(&j, &j).sqrt() * s.dec.inner1(&df, &df).sqrt();
    assert!(weak.abs() < 1e-2 * scale, "{weak} vs {scale}");
}

#[test]
fn vorticity_weak_residual_against_bumps() {
    let s = geometry::unit_sphere(4).unwrap();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let cfg = VortexConfig::new(vec![Vector3::new(0.3, 0.2, 0.9), Vector3::new(-0.5, 0.1, -0.7)], vec![1, 1]).unwrap().validated(&s).unwrap();
    let j = jstar(&gev, &hb, &cfg, &[]).unwrap();
    let dj = s.dec.apply_d1(&j);
    for a in &cfg.points {
        let bump = |x: &Vector3<f64>| {
            let t = geometry::sphere_angle(a, &x.normalize()) / 0.4;
            if t < 1.0 { (1.0 - t * t).powi(3) } else { 0.0 }
        };
        let mut total = 0.0;
        for f in 0..s.mesh.num_faces() {
            let [x, y, z] = s.mesh.face_points(f);
            let w = bump(&s.mesh.face_barycenter(f));
            total += w * (dj[f] + spherical_area(&x, &y, &z));
        }
        assert!((total - TAU).abs() < 0.01 * TAU, "{total}");
    }
}

#[test]
fn transport_identity_on_flat_torus_with_zero_current() {
    let s = geometry::flat_torus(3).unwrap();
    let j = vec![0.0; s.mesh.num_edges()];
    let v0 = Complex64::from_polar(1.0, 0.7);
    let path = [0, 1, 2, 10, 18];
    let v = holonomy_transport(&s, &j, &path, v0, &[], 0.0).unwrap();
    assert!((v - v0).norm() < 1e-15);
    assert!(holonomy_transport(&s, &j, &[0, 5], v0, &[], 0.0).is_err());
}

#[test]
fn transport_quantized_on_loops_and_shifted_by_flux() {
    let s = geometry::flat_torus(4).unwrap();
    let n = 16;
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let cfg = dipole();
    let lat = lattice(&hb, &gev, &cfg).unwrap();
    let phi = lat.nearest_point(&[0.0, 0.0]).unwrap();
    let j = jstar(&gev, &hb, &cfg, &phi).unwrap();
    let v0 = Complex64::new(1.0, 0.0);
    // small contractible loop away from the vortices: a vertex ring
    let c = 8 * n + 8;
    let mut ring: Vec<usize> = s.mesh.rings[c].iter().map(|r| r.neighbor).collect();
    ring.push(ring[0]);
    let out = holonomy_transport(&s, &j, &ring, v0, &cfg.points, 1e-2).unwrap();
    assert!(wrap_angle(out.arg()).abs() < 1e-3);
    assert!((out.norm() - 1.0).abs() < 1e-15);
    // generator loop γ1 along a grid row far from both vortices
    let lp = row_loop(n, 0);
    let out = holonomy_transport(&s, &j, &lp, v0, &cfg.points, 1e-2).unwrap();
    assert!(wrap_angle(out.arg()).abs() < 1e-3);
    let eps = 0.1;
    let j2 = jstar(&gev, &hb, &cfg, &[phi[0] + eps, phi[1]]).unwrap();
    let out = holonomy_transport(&s, &j2, &lp, v0, &cfg.points, 1e-2).unwrap();
    assert!((wrap_angle(out.arg()) - eps).abs() < 1e-3, "{}", out.arg());
    // a path through a vortex is refused
    let near = s.nearest_vertex(&cfg.points[0]);
    assert!(matches!(
        holonomy_transport(&s, &j, &[near, s.mesh.rings[near][0].neighbor], v0, &cfg.points, 0.1),
        Err(Error::TooClose { .. })
    ));
}

#[test]
fn torus_dipole_audits_and_quantization_dichotomy() {
    let s = geometry::flat_torus(4).unwrap();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let cfg = dipole();
    let lat = lattice(&hb, &gev, &cfg).unwrap();
    let phi = lat.nearest_point(&[0.0, 0.0]).unwrap();
    let u = build_ustar(&gev, &hb, &cfg, &phi).unwrap();
    assert_eq!(u.audits.len(), AUDIT_LOOPS);
    assert!(u.audits.iter().all(|d| d.abs() < AUDIT_TOL));
    assert!(u.field.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    assert!(u.current_error < 0.05, "{}", u.current_error);
    let half = [phi[0] + PI, phi[1]];
    match build_ustar(&gev, &hb, &cfg, &half) {
        Err(Error::Quantization { row, defect }) => {
            assert_eq!(row, 0);
            assert!((defect.abs() - PI).abs() < 1e-9);
        }
        other => panic!("expected rejection, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn gauge_covariance() {
    let s = geometry::flat_torus(3).unwrap();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let cfg = dipole();
    let phi = lattice(&hb, &gev, &cfg).unwrap().nearest_point(&[0.0, 0.0]).unwrap();
    let u0 = build_ustar(&gev, &hb, &cfg, &phi).unwrap();
    let beta = 1.234;
    let u1 = build_ustar_gauged(&gev, &hb, &cfg, &phi, beta).unwrap();
    for (a, b) in u0.field.iter().zip(&u1.field) {
        assert!(wrap_angle(b.arg() - a.arg() - beta).abs() < 1e-10);
    }
}

#[test]
fn sphere_pole_field_is_rotationally_symmetric() {
    let s = geometry::unit_sphere(4).unwrap();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let u = build_ustar(&gev, &hb, &poles(), &[]).unwrap();
    assert!(u.audits.iter().all(|d| d.abs() < AUDIT_TOL));
    let vecs = u.vectors(&s);
    let mut diffs = Vec::new();
    for (x, v) in s.mesh.positions.iter().zip(&vecs) {
        if x.z.abs() > 0.9 {
            continue;
        }
        let rho = x.x.hypot(x.y);
        let e_theta = Vector3::new(x.x * x.z / rho, x.y * x.z / rho, -rho);
        diffs.push(e_theta.cross(v).dot(x).atan2(e_theta.dot(v)));
    }
    let mean = diffs.iter().map(|a| Complex64::from_polar(1.0, *a)).sum::<Complex64>().arg();
    let spread = diffs.iter().map(|a| wrap_angle(a - mean).abs()).fold(0.0, f64::max);
    assert!(spread < 0.05, "spread {spread}");
}

#[test]
fn revolution_torus_field_passes_audits() {
    let (v, f) = mesh::torus_of_revolution(2.0, 0.7, 32, 16);
    let s = geometry::tri_mesh(v, f).unwrap();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let pts = &s.mesh.positions;
    let cfg = VortexConfig::new(vec![pts[3], pts[200]], vec![1, -1]).unwrap();
    let lat = lattice(&hb, &gev, &cfg).unwrap();
    let phi = lat.nearest_point(&[0.0, 0.0]).unwrap();
    let u = build_ustar(&gev, &hb, &cfg, &phi).unwrap();
    assert!(u.audits.iter().all(|d| d.abs() < AUDIT_TOL));
    assert!(u.max_edge_defect(&s) < 1e-6);
}

#[test]
fn energy_density_matches_current_away_from_vortices() {
    let s = geometry::flat_torus(5).unwrap();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let cfg = dipole();
    let phi = lattice(&hb, &gev, &cfg).unwrap().nearest_point(&[0.0, 0.0]).unwrap();
    let u = build_ustar(&gev, &hb, &cfg, &phi).unwrap();
    let (mut du, mut jj, mut diff) = (0.0, 0.0, 0.0);
    for (e, &[a, b]) in s.mesh.edges.iter().enumerate() {
        let mid = s.mesh.edge_midpoint(e);
        if cfg.points.iter().any(|q| s.geodesic_dist(&mid, q) < 0.1) {
            continue;
        }
        let t = u.field[a] * Complex64::from_polar(1.0, s.frames.rho[e]);
        let d1 = 0.5 * s.dec.star1[e] * (u.field[b] - t).norm_sqr();
        let d2 = 0.5 * s.dec.star1[e] * u.jstar[e].powi(2);
        du += d1;
        jj += d2;
        diff += (d1 - d2).abs();
    }
    assert!(diff < 0.05 * jj, "{diff} vs {jj} ({du})");
}

