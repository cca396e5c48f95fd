mod common;

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use proptest::prelude::*;
use vortexlab::geometry::{self, mesh, SurfaceModel};
use vortexlab::greens::GreenEvaluator;
use vortexlab::harmonic::*;

fn p(x: f64, y: f64) -> Vector3<f64> {
    Vector3::new(x, y, 0.0)
}

fn dipole() -> VortexConfig {
    VortexConfig::new(vec![p(0.25, 0.25), p(0.75, 0.75)], vec![1, -1]).unwrap()
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn revolution_torus() -> SurfaceModel {
    let (v, f) = mesh::torus_of_revolution(2.0, 0.7, 40, 20);
    geometry::tri_mesh(v, f).unwrap()
}

#[test]
fn flat_torus_basis_is_dx_dy() {
    let s = geometry::flat_torus(4).unwrap();
    let hb = harmonic_basis(&s).unwrap();
    assert_eq!(hb.dim(), 2);
    assert_eq!(hb.alpha, nalgebra::DMatrix::identity(2, 2));
    for k in 0..2 {
        for l in 0..2 {
            let ip = s.dec.inner1(&hb.forms[k], &hb.forms[l]);
            assert!((ip - if k == l { 1.0 } else { 0.0 }).abs() < 1e-8, "{k}{l}: {ip}");
        }
        let d = s.dec.apply_d1(&hb.forms[k]);
        let ds = s.dec.codifferential1(&hb.forms[k]);
        assert!(d.iter().chain(&ds).all(|x| x.abs() < 1e-8));
    }
}

#[test]
fn sphere_basis_is_empty() {
    let s = geometry::unit_sphere(2).unwrap();
    let hb = harmonic_basis(&s).unwrap();
    assert_eq!(hb.dim(), 0);
    assert_eq!(hb.alpha.nrows(), 0);
    let gev = GreenEvaluator::new(&s);
    let cfg = VortexConfig::new(vec![Vector3::z(), -Vector3::z()], vec![1, 1]).unwrap();
    let l = lattice(&hb, &gev, &cfg).unwrap();
    assert!(l.contains(&[]).unwrap());
    assert!(l.nearest_point(&[]).unwrap().is_empty());
}

#[test]
fn revolution_torus_kernel_is_two_dimensional() {
    let s = revolution_torus();
    let hb = harmonic_basis(&s).unwrap();
    assert_eq!(hb.dim(), 2);
    let norm = |a: &[f64], w: &[f64]| a.iter().zip(w).map(|(x, w)| w * x * x).sum::<f64>().sqrt();
    for k in 0..2 {
        let d = s.dec.apply_d1(&hb.forms[k]);
        let ds = s.dec.codifferential1(&hb.forms[k]);
        let r = norm(&d, &s.dec.star2) + norm(&ds, &s.dec.star0);
        assert!(r < 1e-6, "residual {r}");
        for l in 0..2 {
            let ip = s.dec.inner1(&hb.forms[k], &hb.forms[l]);
            assert!((ip - if k == l { 1.0 } else { 0.0 }).abs() < 1e-8);
        }
        // independent check: the Hodge 1-Laplacian annihilates η
        let lap = s.dec.hodge_laplacian1(&hb.forms[k]);
        let scale = s.mesh.mean_edge_length().powi(-2);
        assert!(lap.iter().all(|x| x.abs() < 1e-6 * scale));
    }
    assert!(hb.alpha.determinant().abs() > 1e-6);
    assert!(hb.alpha_condition().is_finite());
    // periods of the two loops are integral combinations of ±1 for the cocycles,
    // so the harmonic periods stay finite and nonzero
    for l in &hb.loops {
        match l {
            Loop::Vertices(v) => assert_eq!(v.first(), v.last()),
            _ => panic!("mesh loops are vertex cycles"),
        }
    }
}

#[test]
fn discrete_basis_on_flat_grid_spans_dx_dy() {
    // linear functions are reproduced by the cotangent Laplacian, so the
    // discrete harmonic space of the periodic grid is exactly span{dx, dy}
    let s = geometry::flat_torus(3).unwrap();
    let hb = discrete_harmonic_basis(&s).unwrap();
    let analytic = harmonic_basis(&s).unwrap();
    for f in &hb.forms {
        let c: Vec<f64> = analytic.forms.iter().map(|a| s.dec.inner1(f, a)).collect();
        let resid: f64 = f
            .iter()
            .enumerate()
            .map(|(e, v)| (v - c[0] * analytic.forms[0][e] - c[1] * analytic.forms[1][e]).abs())
            .fold(0.0, f64::max);
        assert!(resid < 1e-9, "{resid}");
    }
    // α is integral in the (dx, dy) basis
    let coeffs = nalgebra::DMatrix::from_fn(2, 2, |k, j| s.dec.inner1(&hb.forms[k], &analytic.forms[j]));
    let ints = &hb.alpha * coeffs.try_inverse().unwrap();
    for v in ints.iter() {
        assert!((v - v.round()).abs() < 1e-9, "{ints}");
    }
}

#[test]
fn zeta_dipole_example() {
    let s = geometry::flat_torus(4).unwrap();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let z = zeta(&hb, &gev, &dipole()).unwrap();
    assert!((z[0] - PI).abs() < 1e-12 && (z[1] - PI).abs() < 1e-12, "{z:?}");
    for v in &z {
        assert!((0.0..TAU).contains(v));
    }
}

#[test]
fn zeta_vanishes_on_symmetric_orbit() {
    let s = geometry::flat_torus(3).unwrap();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    // Σ d_k a_k = (0.5+0.5, 0.5+0.5) − (0, 0) ∈ Z²
    let cfg = VortexConfig::new(vec![p(0.1, 0.2), p(0.9, 0.8), p(0.3, 0.6), p(0.7, 0.4)], vec![1, 1, -1, -1]).unwrap();
    let z = zeta(&hb, &gev, &cfg).unwrap();
    assert!(circ_dist(z[0], 0.0) < 1e-12 && circ_dist(z[1], 0.0) < 1e-12, "{z:?}");
}

#[test]
fn closed_form_zeta_matches_path_integral() {
    let s = geometry::flat_torus(3).unwrap();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let mut rng = common::Lcg(7);
    for _ in 0..6 {
        let pts: Vec<_> = (0..4).map(|_| rng.torus_point()).collect();
        let cfg = VortexConfig::new(pts, vec![2, -1, 1, -2]).unwrap();
        let z = zeta(&hb, &gev, &cfg).unwrap();
        let zp = zeta_by_path(&gev, &cfg, None).unwrap();
        for l in 0..2 {
            assert!(circ_dist(z[l], zp[l]) < 1e-4, "{z:?} vs {zp:?}");
        }
    }
}

#[test]
fn path_zeta_independent_of_loop_including_detours() {
    let s = geometry::flat_torus(3).unwrap();
    let gev = GreenEvaluator::new(&s);
    let cfg = VortexConfig::new(vec![p(0.31, 0.42), p(0.77, 0.13), p(0.52, 0.86)], vec![1, 1, -2]).unwrap();
    let base = zeta_by_path(&gev, &cfg, Some([0.6, 0.05])).unwrap();
    // loops passing within the detour radius of a vortex on either side
    for offs in [[0.425, 0.315], [0.415, 0.305], [0.135, 0.765], [0.9, 0.52 - 0.01]] {
        let z = zeta_by_path(&gev, &cfg, Some(offs)).unwrap();
        for l in 0..2 {
            assert!(circ_dist(z[l], base[l]) < 1e-4, "{offs:?}: {z:?} vs {base:?}");
        }
    }
}

#[test]
fn detour_loop_keeps_clearance_and_closes() {
    let cfg = VortexConfig::new(vec![p(0.5, 0.505), p(0.2, 0.3)], vec![1, -1]).unwrap();
    let pieces = torus_generator_loop(0, 0.5, &cfg, LOOP_CLEARANCE).unwrap();
    let start = pieces.first().unwrap().0;
    let end = pieces.last().unwrap().1;
    assert!(((end - start) - Vector3::x()).norm() < 1e-12);
    for w in pieces.windows(2) {
        assert!((w[0].1 - w[1].0).norm() < 1e-12);
    }
    // two vortices crowding the same line cannot both be avoided
    let crowded = VortexConfig::new(vec![p(0.5, 0.5), p(0.52, 0.5)], vec![1, -1]).unwrap();
    assert!(torus_generator_loop(0, 0.5, &crowded, LOOP_CLEARANCE).is_err());
}

#[test]
fn mesh_zeta_is_in_range_and_label_independent() {
    let s = revolution_torus();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let v = &s.mesh.positions;
    let cfg = VortexConfig::new(vec![v[5], v[403]], vec![1, -1]).unwrap();
    let z = zeta(&hb, &gev, &cfg).unwrap();
    assert_eq!(z.len(), 2);
    assert!(z.iter().all(|x| (0.0..TAU).contains(x)));
    // with no vortices the loop sums reduce to the Levi-Civita holonomy
    // of the loops; moving the dipole back onto itself gives the same ζ
    let cfg2 = VortexConfig::new(vec![v[403], v[5]], vec![-1, 1]).unwrap();
    let z2 = zeta(&hb, &gev, &cfg2).unwrap();
    for l in 0..2 {
        assert!(circ_dist(z[l], z2[l]) < 1e-10);
    }
}

#[test]
fn dipole_lattice_nearest_point() {
    let s = geometry::flat_torus(3).unwrap();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let l = lattice(&hb, &gev, &dipole()).unwrap();
    assert!(l.contains(&[PI, -PI]).unwrap());
    assert!(!l.contains(&[0.0, 0.0]).unwrap());
    let n = l.nearest_point(&[0.0, 0.0]).unwrap();
    assert!((n[0].abs() - PI).abs() < 1e-12 && (n[1].abs() - PI).abs() < 1e-12);
    assert!(((n[0] * n[0] + n[1] * n[1]).sqrt() - PI * 2f64.sqrt()).abs() < 1e-12);
    assert!(l.contains(&n).unwrap());
    assert!((l.generator() - nalgebra::DMatrix::identity(2, 2) * TAU).abs().max() < 1e-15);
}

#[test]
fn lattice_distance_examples() {
    let s = geometry::flat_torus(3).unwrap();
    let gev = GreenEvaluator::new(&s);
    let hb = harmonic_basis(&s).unwrap();
    let l1 = lattice(&hb, &gev, &dipole()).unwrap();
    assert!(lattice_distance(&l1, &l1).unwrap() < 1e-14);
    let relabeled = VortexConfig::new(vec![p(0.75, 0.75), p(0.25, 0.25)], vec![-1, 1]).unwrap();
    let l2 = lattice(&hb, &gev, &relabeled).unwrap();
    assert!(lattice_distance(&l1, &l2).unwrap() < 1e-12);

    // Lipschitz sweep: translating every vortex by δ moves the lattice by at
    // most C·2πΣ|d_k|·|δ|
    let cfg = VortexConfig::new(vec![p(0.1, 0.3), p(0.6, 0.2), p(0.4, 0.8)], vec![2, -1, -1]).unwrap();
    let l0 = lattice(&hb, &gev, &cfg).unwrap();
    let mut ratios = Vec::new();
    for k in 1..=5 {
        let delta = 0.001 * k as f64;
        let moved = VortexConfig::new(cfg.points.iter().map(|a| a + p(delta, 0.0)).collect(), cfg.degrees.clone()).unwrap();
        let lm = lattice(&hb, &gev, &moved).unwrap();
        let dist = lattice_distance(&l0, &lm).unwrap();
        ratios.push(dist / (TAU * cfg.abs_degree() as f64 * delta));
    }
    assert!(ratios.iter().all(|r| *r <= 1.0 + 1e-9), "{ratios:?}");

    let sphere = geometry::unit_sphere(1).unwrap();
    let hs = harmonic_basis(&sphere).unwrap();
    let ls = FluxLattice::new(&hs, vec![], 1e-6).unwrap();
    assert!(lattice_distance(&l0, &ls).is_err());
}

#[test]
fn w11_examples() {
    let s = geometry::flat_torus(3).unwrap();
    let cfg = dipole();
    assert_eq!(w11_vortex_distance(&s, &cfg, &cfg).unwrap(), 0.0);
    let a = VortexConfig::new(vec![p(0.2, 0.3)], vec![1]).unwrap();
    let b = VortexConfig::new(vec![p(0.2 + 0.03, 0.3 + 0.04)], vec![1]).unwrap();
    assert!((w11_vortex_distance(&s, &a, &b).unwrap() - TAU * 0.05).abs() < 1e-14);
    let c = VortexConfig::new(vec![p(0.2, 0.3), p(0.5, 0.5)], vec![1, 1]).unwrap();
    assert!(w11_vortex_distance(&s, &a, &c).is_err());
}

fn brute_force(cost: &[Vec<f64>]) -> f64 {
    fn rec(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
        if row == cost.len() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for j in 0..cost.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(cost[row][j] + rec(cost, row + 1, used));
                used[j] = false;
            }
        }
        best
    }
    rec(cost, 0, &mut vec![false; cost.len()])
}

#[test]
fn crossing_dipoles_match_brute_force() {
    let s = geometry::flat_torus(3).unwrap();
    // naive index pairing crosses; the optimal one does not
    let c1 = VortexConfig::new(vec![p(0.1, 0.1), p(0.4, 0.1)], vec![1, -1]).unwrap();
    let c2 = VortexConfig::new(vec![p(0.41, 0.12), p(0.12, 0.09)], vec![-1, 1]).unwrap();
    let w = w11_vortex_distance(&s, &c1, &c2).unwrap();
    let pts_plus = [p(0.1, 0.1), p(0.41, 0.12)];
    let pts_minus = [p(0.4, 0.1), p(0.12, 0.09)];
    let cost: Vec<Vec<f64>> = pts_plus.iter().map(|a| pts_minus.iter().map(|b| s.geodesic_dist(a, b)).collect()).collect();
    assert!((w - TAU * brute_force(&cost)).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hungarian_matches_enumeration(n in 1usize..=6, seed in any::<u64>()) {
        let mut rng = common::Lcg(seed);
        let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.next()).collect()).collect();
        let (total, assign) = assignment::min_cost_assignment(&cost);
        let mut seen = assign.clone();
        seen.sort();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        prop_assert!((total - brute_force(&cost)).abs() < 1e-12);
    }

    #[test]
    fn zeta_invariant_under_merging(x in 0.0f64..1.0, y in 0.0f64..1.0, d1 in -3i32..=3, d2 in -3i32..=3, bx in 0.0f64..1.0, by in 0.0f64..1.0) {
        prop_assume!(d1 != 0 && d2 != 0);
        prop_assume!((x - bx).abs() > 1e-3 || (y - by).abs() > 1e-3);
        let s = geometry::flat_torus(2).unwrap();
        let gev = GreenEvaluator::new(&s);
        let hb = harmonic_basis(&s).unwrap();
        let dup = VortexConfig { points: vec![p(x, y), p(x, y), p(bx, by)], degrees: vec![d1, d2, -(d1 + d2)] };
        let red = dup.reduced(&s);
        prop_assume!(!red.is_empty());
        let z = zeta(&hb, &gev, &red).unwrap();
        // closed form of the unreduced sum
        let sy: f64 = dup.points.iter().zip(&dup.degrees).map(|(a, &d)| d as f64 * a.y).sum();
        let sx: f64 = dup.points.iter().zip(&dup.degrees).map(|(a, &d)| d as f64 * a.x).sum();
        prop_assert!(circ_dist(z[0], -TAU * sy) < 1e-9);
        prop_assert!(circ_dist(z[1], TAU * sx) < 1e-9);
    }

    #[test]
    fn zeta_continuous_in_w11(x in 0.05f64..0.95, y in 0.05f64..0.95, dx in -0.02f64..0.02, dy in -0.02f64..0.02) {
        let s = geometry::flat_torus(2).unwrap();
        let gev = GreenEvaluator::new(&s);
        let hb = harmonic_basis(&s).unwrap();
        let c0 = VortexConfig::new(vec![p(x, y), p(0.5, 0.5)], vec![1, -1]).unwrap();
        prop_assume!(c0.min_separation(&s) > 0.05);
        let c1 = VortexConfig::new(vec![p(x + dx, y + dy), p(0.5, 0.5)], vec![1, -1]).unwrap();
        let z0 = zeta(&hb, &gev, &c0).unwrap();
        let z1 = zeta(&hb, &gev, &c1).unwrap();
        let w = w11_vortex_distance(&s, &c0, &c1).unwrap();
        let dz = (circ_dist(z0[0], z1[0]).powi(2) + circ_dist(z0[1], z1[1]).powi(2)).sqrt();
        prop_assert!(dz <= w + 1e-12);
    }

    #[test]
    fn nearest_point_idempotent_and_in_lattice(a in -20.0f64..20.0, b in -20.0f64..20.0, z0 in 0.0f64..TAU, z1 in 0.0f64..TAU) {
        let s = revolution_torus_small();
        let hb = harmonic_basis(&s).unwrap();
        let l = FluxLattice::new(&hb, vec![z0, z1], 1e-3).unwrap();
        let n = l.nearest_point(&[a, b]).unwrap();
        prop_assert!(l.contains(&n).unwrap());
        let nn = l.nearest_point(&n).unwrap();
        prop_assert!((nn[0] - n[0]).abs() < 1e-9 && (nn[1] - n[1]).abs() < 1e-9);
        // no other lattice point among the neighbours is closer
        let d0 = ((n[0] - a).powi(2) + (n[1] - b).powi(2)).sqrt();
        let g = l.generator();
        for i in -1i32..=1 {
            for j in -1i32..=1 {
                let q = [n[0] + g[(0, 0)] * i as f64 + g[(0, 1)] * j as f64, n[1] + g[(1, 0)] * i as f64 + g[(1, 1)] * j as f64];
                prop_assert!(((q[0] - a).powi(2) + (q[1] - b).powi(2)).sqrt() >= d0 - 1e-9);
            }
        }
    }
}

fn revolution_torus_small() -> SurfaceModel {
    let (v, f) = mesh::torus_of_revolution(2.0, 0.7, 16, 8);
    geometry::tri_mesh(v, f).unwrap()
}
