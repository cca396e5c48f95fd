use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::Potential;
use crate::error::{Error, Result};
use crate::quad;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// v = f(r) e^{iθ}
    Intrinsic,
    /// v = (sin φ(r) e^{iθ}, cos φ(r))
    Micromagnetic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileSolution {
    pub kind: ProfileKind,
    pub t: f64,
    /// Grid from 0 to 1, geometric away from 0.
    pub r: Vec<f64>,
    /// f (intrinsic) or φ (micromagnetic) at the grid points.
    pub values: Vec<f64>,
    pub i_value: f64,
    /// Largest projected gradient entry at exit.
    pub residual: f64,
    pub iterations: usize,
}

const SMALLEST_RADIUS: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-10;

/// I^in_F(t) = min π∫₀¹ [f′² + f²/r² + F(f²)/(2t²)] r dr with f(1) = 1.
pub fn radial_profile_in(t: f64, grid_size: usize, pot: &Potential) -> Result<ProfileSolution> {
    solve(ProfileKind::Intrinsic, t, grid_size, pot)
}

/// I^mm_F(t) = min π∫₀¹ [φ′² + sin²φ/r² + F(sin²φ)/(2t²)] r dr with φ(1) = π/2.
pub fn radial_profile_mm(t: f64, grid_size: usize, pot: &Potential) -> Result<ProfileSolution> {
    solve(ProfileKind::Micromagnetic, t, grid_size, pot)
}

struct Functional<'a> {
    kind: ProfileKind,
    r: Vec<f64>,
    /// Gauss nodes (fraction of the interval) and weights on [0, 1].
    rule: Vec<(f64, f64)>,
    k: f64,
    pot: &'a Potential,
    upper: f64,
}

impl Functional<'_> {
    /// Pointwise term h(v, r) and its first two derivatives in v.
    fn h(&self, v: f64, r: f64) -> (f64, f64, f64) {
        let p = self.pot;
        match self.kind {
            ProfileKind::Intrinsic => {
                let s = v * v;
                let (f, df, ddf) = (p.value(s), p.derivative(s), p.second_derivative(s));
                (
                    s / r + r * self.k * f,
                    2.0 * v / r + r * self.k * df * 2.0 * v,
                    2.0 / r + r * self.k * (df * 2.0 + ddf * 4.0 * s),
                )
            }
            ProfileKind::Micromagnetic => {
                let (sn, cs) = v.sin_cos();
                let s = sn * sn;
                let (s2, c2) = (2.0 * sn * cs, cs * cs - sn * sn);
                let (f, df, ddf) = (p.value(s), p.derivative(s), p.second_derivative(s));
                (
                    s / r + r * self.k * f,
                    s2 / r + r * self.k * df * s2,
                    2.0 * c2 / r + r * self.k * (ddf * s2 * s2 + df * 2.0 * c2),
                )
            }
        }
    }

    /// Energy (without the factor π), gradient and tridiagonal Hessian in
    /// all nodal values.
    fn eval(&self, v: &[f64], want: bool) -> (f64, Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = v.len();
        let (mut g, mut d, mut o) = if want { (vec![0.0; n], vec![0.0; n], vec![0.0; n - 1]) } else { (vec![], vec![], vec![]) };
        let mut e = 0.0;
        for i in 0..n - 1 {
            let (r0, r1) = (self.r[i], self.r[i + 1]);
            let dr = r1 - r0;
            let c = 0.5 * (r1 + r0) / dr;
            let dv = v[i + 1] - v[i];
            e += c * dv * dv;
            if want {
                g[i] -= 2.0 * c * dv;
                g[i + 1] += 2.0 * c * dv;
                d[i] += 2.0 * c;
                d[i + 1] += 2.0 * c;
                o[i] -= 2.0 * c;
            }
            for &(lam, w) in &self.rule {
                let rq = r0 + lam * dr;
                let vq = (1.0 - lam) * v[i] + lam * v[i + 1];
                let (h, h1, h2) = self.h(vq, rq);
                let wq = w * dr;
                e += wq * h;
                if want {
                    g[i] += wq * h1 * (1.0 - lam);
                    g[i + 1] += wq * h1 * lam;
                    d[i] += wq * h2 * (1.0 - lam) * (1.0 - lam);
                    d[i + 1] += wq * h2 * lam * lam;
                    o[i] += wq * h2 * lam * (1.0 - lam);
                }
            }
        }
        (e, g, d, o)
    }

    fn clamp(&self, v: f64) -> f64 {
        v.clamp(0.0, self.upper)
    }
}

/// Solve a tridiagonal system (diag d, off-diagonal o) by elimination;
/// None if a pivot is not positive.
fn solve_tridiagonal(d: &[f64], o: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = d.len();
    let mut c = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut piv = d[0];
    if !(piv > 0.0) {
        return None;
    }
    y[0] = b[0] / piv;
    for i in 1..n {
        c[i - 1] = o[i - 1] / piv;
        piv = d[i] - o[i - 1] * c[i - 1];
        if !(piv > 0.0) {
            return None;
        }
        y[i] = (b[i] - o[i - 1] * y[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        y[i] -= c[i] * y[i + 1];
    }
    Some(y)
}

fn solve(kind: ProfileKind, t: f64, grid_size: usize, pot: &Potential) -> Result<ProfileSolution> {
    if !(t > 0.0 && t < 0.5) {
        return Err(Error::InvalidInput(format!("profile ratio t = {t} outside (0, 0.5)")));
    }
    if grid_size < 10 {
        return Err(Error::InvalidInput("profile grid needs at least 10 points".into()));
    }
    pot.validate()?;
    let q = (1.0 / SMALLEST_RADIUS).powf(1.0 / (grid_size - 1) as f64);
    let mut r = vec![0.0];
    r.extend((0..grid_size).map(|k| if k + 1 == grid_size { 1.0 } else { SMALLEST_RADIUS * q.powi(k as i32) }));
    let upper = match kind {
        ProfileKind::Intrinsic => 1.0,
        ProfileKind::Micromagnetic => FRAC_PI_2,
    };
    let rule: Vec<(f64, f64)> = quad::gauss_legendre_on(4, 0.0, 1.0);
    let fun = Functional { kind, r, rule, k: 0.5 / (t * t), pot, upper };
    let n = fun.r.len();
    let mut v: Vec<f64> = fun
        .r
        .iter()
        .map(|&x| {
            let f = (x * (1.0 + t * t).sqrt() / (x * x + t * t).sqrt()).min(1.0);
            match kind {
                ProfileKind::Intrinsic => f,
                ProfileKind::Micromagnetic => f.asin(),
            }
        })
        .collect();
    v[0] = 0.0;
    v[n - 1] = upper;
    let free = 1..n - 1;
    let projected = |v: &[f64], g: &[f64]| -> f64 {
        free.clone()
            .map(|i| {
                let gi = g[i];
                if (v[i] <= 0.0 && gi > 0.0) || (v[i] >= upper && gi < 0.0) {
                    0.0
                } else {
                    gi.abs()
                }
            })
            .fold(0.0, f64::max)
    };
    let (mut e, mut g, mut d, mut o) = fun.eval(&v, true);
    let mut res = projected(&v, &g);
    let mut iterations = 0;
    while res > RESIDUAL_TOL && iterations < 500 {
        iterations += 1;
        let m = n - 2;
        // bound-active variables are held fixed
        let active: Vec<bool> =
            (1..n - 1).map(|i| (v[i] <= 0.0 && g[i] > 0.0) || (v[i] >= upper && g[i] < 0.0)).collect();
        let di: Vec<f64> = (0..m).map(|k| if active[k] { 1.0 } else { d[k + 1] }).collect();
        let oi: Vec<f64> = (0..m - 1).map(|k| if active[k] || active[k + 1] { 0.0 } else { o[k + 1] }).collect();
        let b: Vec<f64> = (0..m).map(|k| if active[k] { 0.0 } else { -g[k + 1] }).collect();
        let mut mu = 0.0;
        let step = loop {
            let shifted: Vec<f64> = di.iter().map(|x| x + mu * x.abs().max(1e-12)).collect();
            if let Some(s) = solve_tridiagonal(&shifted, &oi, &b) {
                break s;
            }
            mu = if mu == 0.0 { 1e-6 } else { mu * 4.0 };
            if mu > 1e12 {
                return Err(Error::NoConvergence { what: "profile Hessian shift".into(), residual: res });
            }
        };
        debug_assert_eq!(step.len(), m);
        let mut tau = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let mut trial = v.clone();
            for (k, s) in step.iter().enumerate() {
                trial[k + 1] = fun.clamp(v[k + 1] + tau * s);
            }
            let (et, gt, ..) = fun.eval(&trial, true);
            // near the minimum the energy is flat to round-off: accept a
            // step that reduces the residual
            if et <= e || (et <= e + 1e-13 * e.abs() && projected(&trial, &gt) < res) {
                let changed = trial.iter().zip(&v).any(|(a, b)| a != b);
                v = trial;
                moved = changed;
                break;
            }
            tau *= 0.5;
        }
        let out = fun.eval(&v, true);
        e = out.0;
        g = out.1;
        d = out.2;
        o = out.3;
        res = projected(&v, &g);
        if !moved {
            break;
        }
    }
    if res > RESIDUAL_TOL {
        return Err(Error::NoConvergence { what: "radial profile".into(), residual: res });
    }
    Ok(ProfileSolution { kind, t, r: fun.r, values: v, i_value: PI * e, residual: res, iterations })
}
