//! Discrete Ginzburg–Landau energies (intrinsic, extrinsic, micromagnetic),
//! their minimization, radial vortex profiles and the energy expansion check.

mod checkpoint;
mod expansion;
mod minimize;
mod profile;

pub use checkpoint::{parse_checkpoint, Checkpoint, FRAME_ID};
pub use expansion::{expansion_report, iota_estimate, ExpansionRow, IotaEstimate};
pub use minimize::{minimize_energy, minimize_energy_mm, random_field, random_magnetization, GlOptions, GlResult};
pub use profile::{radial_profile_in, radial_profile_mm, ProfileKind, ProfileSolution};

use nalgebra::{Matrix2, Vector2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, SurfaceKind, SurfaceModel};
use crate::renorm::fitted_shape;

/// Potential F with F(1) = 0, written F(s) = |1 − s|^p.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Potential {
    /// F(s) = (1 − s)²
    #[default]
    Gl,
    /// F(s) = |1 − s| (equal to 1 − s on [0, 1])
    Mm,
    /// F(s) = |1 − s|^p with 1 ≤ p ≤ 2
    Power { exponent: f64 },
}

impl Potential {
    pub fn name(&self) -> String {
        match self {
            Potential::Gl => "gl".into(),
            Potential::Mm => "mm".into(),
            Potential::Power { exponent } => format!("power:{exponent}"),
        }
    }

    /// Inverse of [`Potential::name`].
    pub fn from_name(name: &str) -> Result<Potential> {
        let p = match name {
            "gl" => Potential::Gl,
            "mm" => Potential::Mm,
            _ => match name.strip_prefix("power:").map(str::parse::<f64>) {
                Some(Ok(exponent)) => Potential::Power { exponent },
                _ => return Err(Error::InvalidInput(format!("unknown potential {name:?}"))),
            },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn exponent(&self) -> f64 {
        match self {
            Potential::Gl => 2.0,
            Potential::Mm => 1.0,
            Potential::Power { exponent } => *exponent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.exponent();
        if !(1.0..=2.0).contains(&p) {
            return Err(Error::InvalidInput(format!("potential exponent {p} outside [1, 2]")));
        }
        Ok(())
    }

    pub fn value(&self, s: f64) -> f64 {
        let d = (1.0 - s).abs();
        match self {
            Potential::Gl => d * d,
            Potential::Mm => d,
            Potential::Power { exponent } => d.powf(*exponent),
        }
    }

    /// F′(s); at the kink s = 1 of |1 − s| the left derivative.
    pub fn derivative(&self, s: f64) -> f64 {
        let x = 1.0 - s;
        let p = self.exponent();
        if p == 2.0 {
            return -2.0 * x;
        }
        let sg = if x >= 0.0 { 1.0 } else { -1.0 };
        -p * x.abs().powf(p - 1.0) * sg
    }

    /// F″(s) away from s = 1.
    pub fn second_derivative(&self, s: f64) -> f64 {
        let p = self.exponent();
        if p == 2.0 {
            return 2.0;
        }
        if p == 1.0 {
            return 0.0;
        }
        let x = (1.0 - s).abs().max(1e-300);
        p * (p - 1.0) * x.powf(p - 2.0)
    }

    /// Largest C with F(s²) ≥ C (1 − s)² on a grid of [0, 2].
    pub fn growth_constant(&self) -> f64 {
        (0..=2000)
            .map(|k| k as f64 / 1000.0)
            .filter(|s| (1.0 - s).abs() > 1e-9)
            .map(|s| self.value(s * s) / ((1.0 - s) * (1.0 - s)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Frame coefficients of a tangent field at the vertices of a surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteField {
    pub values: Vec<Complex64>,
    pub surface_hash: String,
}

impl DiscreteField {
    pub fn new(s: &SurfaceModel, values: Vec<Complex64>) -> Result<DiscreteField> {
        let f = DiscreteField { values, surface_hash: s.hash() };
        f.check(s)?;
        Ok(f)
    }

    pub fn constant(s: &SurfaceModel, z: Complex64) -> DiscreteField {
        DiscreteField { values: vec![z; s.mesh.num_vertices()], surface_hash: s.hash() }
    }

    /// Tangential parts of ambient vectors given per vertex.
    pub fn from_vectors(s: &SurfaceModel, vectors: &[Point]) -> Result<DiscreteField> {
        if vectors.len() != s.mesh.num_vertices() {
            return Err(Error::InvalidInput("one vector per vertex expected".into()));
        }
        let values = vectors.iter().enumerate().map(|(v, w)| s.frames.to_coeff(v, w)).collect();
        DiscreteField::new(s, values)
    }

    pub fn check(&self, s: &SurfaceModel) -> Result<()> {
        if self.values.len() != s.mesh.num_vertices() {
            return Err(Error::InvalidInput(format!(
                "field has {} sites, surface has {} vertices",
                self.values.len(),
                s.mesh.num_vertices()
            )));
        }
        if self.surface_hash != s.hash() {
            return Err(Error::InvalidInput("field belongs to a different surface".into()));
        }
        if self.values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite field amplitude".into()));
        }
        Ok(())
    }

    pub fn scaled(&self, c: Complex64) -> DiscreteField {
        DiscreteField { values: self.values.iter().map(|z| z * c).collect(), surface_hash: self.surface_hash.clone() }
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Largest accepted deviation of |m|² + M⊥² from 1.
pub const MM_CONSTRAINT_TOL: f64 = 1e-8;

/// Magnetization M = m + M⊥ N with |m|² + M⊥² = 1 at each vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmField {
    pub m: DiscreteField,
    pub mperp: Vec<f64>,
}

impl MmField {
    pub fn new(s: &SurfaceModel, m: DiscreteField, mperp: Vec<f64>) -> Result<MmField> {
        m.check(s)?;
        if mperp.len() != m.values.len() || mperp.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("normal component must be finite, one value per vertex".into()));
        }
        let mf = MmField { m, mperp };
        let viol = mf.constraint_violation();
        if !(viol <= MM_CONSTRAINT_TOL) {
            return Err(Error::InvalidInput(format!("|m|² + M⊥² deviates from 1 by {viol:e}")));
        }
        Ok(mf)
    }

    /// M ≡ N.
    pub fn normal(s: &SurfaceModel) -> MmField {
        MmField { m: DiscreteField::constant(s, Complex64::new(0.0, 0.0)), mperp: vec![1.0; s.mesh.num_vertices()] }
    }

    /// Tangential m (|m| ≤ 1) completed by M⊥ = √(1 − |m|²).
    pub fn from_tangent(m: DiscreteField) -> MmField {
        let mperp = m.values.iter().map(|z| (1.0 - z.norm_sqr()).max(0.0).sqrt()).collect();
        MmField { m, mperp }
    }

    pub fn constraint_violation(&self) -> f64 {
        self.m.values.iter().zip(&self.mperp).map(|(z, p)| (z.norm_sqr() + p * p - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Which of the three energies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    Intrinsic,
    Extrinsic,
    Micromagnetic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Energy {
    pub total: f64,
    pub dirichlet: f64,
    pub potential: f64,
    /// ½∫|S(m)|² (extrinsic only).
    pub shape: f64,
    /// Contribution of each vertex (edge terms split between endpoints).
    pub per_site: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MmEnergy {
    pub total: f64,
    /// ½∫|D̄M|² from the ambient differences of the 3-component field.
    pub dirichlet: f64,
    pub potential: f64,
    /// ½∫(|D̄m|² + |dM⊥|²) + potential, the decomposed form.
    pub decomposed: f64,
    pub per_site: Vec<f64>,
}

/// Per-edge transport factors and vertex data shared by energy evaluations.
pub(crate) struct Stencil<'s> {
    pub s: &'s SurfaceModel,
    /// e^{−iρ_e}
    pub rot: Vec<Complex64>,
    /// Shape operator in the vertex frame (embedded surfaces).
    pub shape: Option<Vec<Matrix2<f64>>>,
}

impl<'s> Stencil<'s> {
    pub fn new(s: &'s SurfaceModel, with_shape: bool) -> Result<Stencil<'s>> {
        let rot = s.frames.rho.iter().map(|&r| Complex64::from_polar(1.0, -r)).collect();
        let shape = if with_shape { Some(shape_matrices(s)?) } else { None };
        Ok(Stencil { s, rot, shape })
    }

    /// ½Σ w|u_b e^{−iρ} − u_a|² + ¼ε⁻² Σ ⋆0 F(|u|²) (+ ½Σ ⋆0 |S u|²), with
    /// gradient and per-site split.
    pub fn eval(
        &self,
        u: &[Complex64],
        eps: f64,
        pot: &Potential,
        grad: Option<&mut [Complex64]>,
        per_site: Option<&mut [f64]>,
    ) -> (f64, f64, f64) {
        let s = self.s;
        let mut g = grad;
        let mut ps = per_site;
        if let Some(g) = g.as_deref_mut() {
            g.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        }
        if let Some(p) = ps.as_deref_mut() {
            p.iter_mut().for_each(|x| *x = 0.0);
        }
        let mut dir = 0.0;
        for (e, &[a, b]) in s.mesh.edges.iter().enumerate() {
            let w = s.dec.star1[e];
            let z = u[b] * self.rot[e] - u[a];
            let t = 0.5 * w * z.norm_sqr();
            dir += t;
            if let Some(g) = g.as_deref_mut() {
                g[a] -= w * z;
                g[b] += w * z * self.rot[e].conj();
            }
            if let Some(p) = ps.as_deref_mut() {
                p[a] += 0.5 * t;
                p[b] += 0.5 * t;
            }
        }
        let k = 0.25 / (eps * eps);
        let mut potential = 0.0;
        let mut shape = 0.0;
        for v in 0..u.len() {
            let w = s.dec.star0[v];
            let n2 = u[v].norm_sqr();
            let t = k * w * pot.value(n2);
            potential += t;
            let mut site = t;
            if let Some(g) = g.as_deref_mut() {
                g[v] += k * w * pot.derivative(n2) * 2.0 * u[v];
            }
            if let Some(sm) = &self.shape {
                let x = Vector2::new(u[v].re, u[v].im);
                let sx = sm[v] * x;
                let t = 0.5 * w * sx.norm_squared();
                shape += t;
                site += t;
                if let Some(g) = g.as_deref_mut() {
                    let gx = w * sm[v].transpose() * sx;
                    g[v] += Complex64::new(gx.x, gx.y);
                }
            }
            if let Some(p) = ps.as_deref_mut() {
                p[v] += site;
            }
        }
        (dir, potential, shape)
    }

    /// Ambient vector of a magnetization at `v`.
    pub fn ambient(&self, v: usize, m: Complex64, perp: f64) -> Vector3<f64> {
        let f = &self.s.frames;
        m.re * f.e1[v] + m.im * f.e2[v] + perp * f.normals[v]
    }

    /// Micromagnetic energy from ambient differences. Gradients are with
    /// respect to (m, M⊥).
    pub fn eval_mm(
        &self,
        m: &[Complex64],
        perp: &[f64],
        eps: f64,
        pot: &Potential,
        grad: Option<(&mut [Complex64], &mut [f64])>,
        per_site: Option<&mut [f64]>,
    ) -> (f64, f64) {
        let s = self.s;
        let nv = m.len();
        let big: Vec<Vector3<f64>> = (0..nv).map(|v| self.ambient(v, m[v], perp[v])).collect();
        let mut gamb = grad.as_ref().map(|_| vec![Vector3::zeros(); nv]);
        let mut ps = per_site;
        if let Some(p) = ps.as_deref_mut() {
            p.iter_mut().for_each(|x| *x = 0.0);
        }
        let mut dir = 0.0;
        for (e, &[a, b]) in s.mesh.edges.iter().enumerate() {
            let w = s.dec.star1[e];
            let d = big[b] - big[a];
            let t = 0.5 * w * d.norm_squared();
            dir += t;
            if let Some(ga) = gamb.as_mut() {
                ga[b] += w * d;
                ga[a] -= w * d;
            }
            if let Some(p) = ps.as_deref_mut() {
                p[a] += 0.5 * t;
                p[b] += 0.5 * t;
            }
        }
        let k = 0.25 / (eps * eps);
        let mut potential = 0.0;
        for v in 0..nv {
            let w = s.dec.star0[v];
            let n2 = m[v].norm_sqr();
            let t = k * w * pot.value(n2);
            potential += t;
            if let Some(p) = ps.as_deref_mut() {
                p[v] += t;
            }
        }
        if let (Some((gm, gp)), Some(ga)) = (grad, gamb) {
            let f = &s.frames;
            for v in 0..nv {
                let w = s.dec.star0[v];
                let pg = k * w * pot.derivative(m[v].norm_sqr()) * 2.0;
                gm[v] = Complex64::new(ga[v].dot(&f.e1[v]), ga[v].dot(&f.e2[v])) + pg * m[v];
                gp[v] = ga[v].dot(&f.normals[v]);
            }
        }
        (dir, potential)
    }
}

/// Shape operator of each vertex in its frame (e1, e2).
pub fn shape_matrices(s: &SurfaceModel) -> Result<Vec<Matrix2<f64>>> {
    match s.kind {
        SurfaceKind::FlatTorus => Err(Error::Unsupported("the flat torus is not embedded".into())),
        SurfaceKind::UnitSphere => Ok(vec![-Matrix2::identity(); s.mesh.num_vertices()]),
        SurfaceKind::TriMesh => (0..s.mesh.num_vertices())
            .map(|v| {
                let (f1, f2, _, h) = fitted_shape(s, v)?;
                // change of basis from the fitted frame to the vertex frame
                let (e1, e2) = (s.frames.e1[v], s.frames.e2[v]);
                let r = Matrix2::new(e1.dot(&f1), e1.dot(&f2), e2.dot(&f1), e2.dot(&f2));
                Ok(r * h * r.transpose())
            })
            .collect(),
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("ε must be positive, got {eps}")));
    }
    Ok(())
}

/// E^in = ½∫|Du|² + ¼ε⁻²∫F(|u|²).
pub fn energy_in(s: &SurfaceModel, u: &DiscreteField, eps: f64, pot: &Potential) -> Result<Energy> {
    check_eps(eps)?;
    pot.validate()?;
    u.check(s)?;
    let st = Stencil::new(s, false)?;
    let mut per_site = vec![0.0; u.values.len()];
    let (dirichlet, potential, _) = st.eval(&u.values, eps, pot, None, Some(&mut per_site));
    Ok(Energy { total: dirichlet + potential, dirichlet, potential, shape: 0.0, per_site })
}

/// E^ex = E^in + ½∫|S(m)|².
pub fn energy_ex(s: &SurfaceModel, m: &DiscreteField, eps: f64, pot: &Potential) -> Result<Energy> {
    check_eps(eps)?;
    pot.validate()?;
    m.check(s)?;
    if !s.is_embedded() {
        return Err(Error::Unsupported("extrinsic energy needs an embedded surface".into()));
    }
    let st = Stencil::new(s, true)?;
    let mut per_site = vec![0.0; m.values.len()];
    let (dirichlet, potential, shape) = st.eval(&m.values, eps, pot, None, Some(&mut per_site));
    Ok(Energy { total: dirichlet + potential + shape, dirichlet, potential, shape, per_site })
}

/// E^mm = ½∫|D̄M|² + ¼ε⁻²∫F(1 − (M·N)²).
pub fn energy_mm(s: &SurfaceModel, mf: &MmField, eps: f64, pot: &Potential) -> Result<MmEnergy> {
    check_eps(eps)?;
    pot.validate()?;
    mf.m.check(s)?;
    if !s.is_embedded() {
        return Err(Error::Unsupported("micromagnetic energy needs an embedded surface".into()));
    }
    if mf.mperp.len() != mf.m.values.len() {
        return Err(Error::InvalidInput("normal component must have one value per vertex".into()));
    }
    let viol = mf.constraint_violation();
    if !(viol <= MM_CONSTRAINT_TOL) {
        return Err(Error::InvalidInput(format!("|m|² + M⊥² deviates from 1 by {viol:e}")));
    }
    let st = Stencil::new(s, true)?;
    let mut per_site = vec![0.0; mf.mperp.len()];
    let (dirichlet, potential) = st.eval_mm(&mf.m.values, &mf.mperp, eps, pot, None, Some(&mut per_site));
    let (d_in, _, sh) = st.eval(&mf.m.values, eps, pot, None, None);
    let d_perp: f64 = s
        .mesh
        .edges
        .iter()
        .enumerate()
        .map(|(e, &[a, b])| 0.5 * s.dec.star1[e] * (mf.mperp[b] - mf.mperp[a]).powi(2))
        .sum();
    Ok(MmEnergy { total: dirichlet + potential, dirichlet, potential, decomposed: d_in + sh + d_perp + potential, per_site })
}
