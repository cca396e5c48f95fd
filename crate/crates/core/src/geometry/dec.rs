//! Discrete exterior calculus on a triangle mesh.
//!
//! Primal k-forms are stored integrated over vertices, edges (reference
//! orientation low→high index) and faces. The Hodge stars are diagonal:
//! `star0` holds dual cell areas, `star1` the cotangent weights
//! (dual/primal length ratios), `star2` the inverse face areas.

use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::linalg::{self, Csr};

#[derive(Clone, Debug)]
pub struct Dec {
    pub d0: Csr,
    pub d1: Csr,
    pub star0: Vec<f64>,
    pub star1: Vec<f64>,
    pub star2: Vec<f64>,
    pub face_area: Vec<f64>,
    /// Cotangent stiffness d0ᵀ ⋆1 d0; the Laplace–Beltrami operator is −⋆0⁻¹ of it.
    pub lap0: Csr,
    /// Face Laplacian d1 ⋆1⁻¹ d1ᵀ acting on ⋆2-coefficients.
    pub lap_dual: Csr,
}

impl Dec {
    pub fn build(mesh: &Mesh) -> Result<Dec> {
        let (nv, ne, nf) = (mesh.num_vertices(), mesh.num_edges(), mesh.num_faces());

        let mut d0t = Vec::with_capacity(2 * ne);
        for (e, &[i, j]) in mesh.edges.iter().enumerate() {
            d0t.push((e, i, -1.0));
            d0t.push((e, j, 1.0));
        }
        let d0 = linalg::csr_from_triplets(ne, nv, &d0t);

        let mut d1t = Vec::with_capacity(3 * nf);
        for (f, fe) in mesh.face_edges.iter().enumerate() {
            for &(e, s) in fe {
                d1t.push((f, e, s));
            }
        }
        let d1 = linalg::csr_from_triplets(nf, ne, &d1t);

        let mut star0 = vec![0.0; nv];
        let mut star1 = vec![0.0; ne];
        let mut face_area = vec![0.0; nf];
        for f in 0..nf {
            let area = mesh.face_area(f);
            face_area[f] = area;
            let p = mesh.face_points(f);
            let ang = mesh.corner_angles(f);
            let obtuse = ang.iter().position(|&a| a > std::f64::consts::FRAC_PI_2);
            for k in 0..3 {
                // edge opposite corner k joins corners k+1 and k+2
                let (e, _) = mesh.face_edges[f][(k + 1) % 3];
                let cot = 1.0 / ang[k].tan();
                star1[e] += 0.5 * cot.max(0.0);
            }
            match obtuse {
                None => {
                    for k in 0..3 {
                        let (a, b) = ((k + 1) % 3, (k + 2) % 3);
                        let lab = (p[b] - p[k]).norm_squared();
                        let lac = (p[a] - p[k]).norm_squared();
                        star0[mesh.faces[f][k]] +=
                            (lab / ang[a].tan() + lac / ang[b].tan()) / 8.0;
                    }
                }
                Some(o) => {
                    for k in 0..3 {
                        star0[mesh.faces[f][k]] += if k == o { area / 2.0 } else { area / 4.0 };
                    }
                }
            }
        }
        let mean_w = star1.iter().sum::<f64>() / ne as f64;
        for w in star1.iter_mut() {
            *w = w.max(1e-9 * mean_w);
        }
        if star0.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::InvalidMesh("vertex with zero dual area".into()));
        }
        let star2: Vec<f64> = face_area.iter().map(|a| 1.0 / a).collect();

        let mut lt = Vec::with_capacity(4 * ne);
        for (e, &[i, j]) in mesh.edges.iter().enumerate() {
            let w = star1[e];
            lt.push((i, i, w));
            lt.push((j, j, w));
            lt.push((i, j, -w));
            lt.push((j, i, -w));
        }
        let lap0 = linalg::csr_from_triplets(nv, nv, &lt);

        let mut dt = Vec::with_capacity(4 * ne);
        for (e, ef) in mesh.edge_faces.iter().enumerate() {
            let w = 1.0 / star1[e];
            let (l, r) = (ef[0], ef[1]);
            dt.push((l, l, w));
            dt.push((r, r, w));
            dt.push((l, r, -w));
            dt.push((r, l, -w));
        }
        let lap_dual = linalg::csr_from_triplets(nf, nf, &dt);

        Ok(Dec { d0, d1, star0, star1, star2, face_area, lap0, lap_dual })
    }

    pub fn apply_d0(&self, f: &[f64]) -> Vec<f64> {
        linalg::mul(&self.d0, f)
    }

    pub fn apply_d1(&self, a: &[f64]) -> Vec<f64> {
        linalg::mul(&self.d1, a)
    }

    /// d* on 1-forms: ⋆0⁻¹ d0ᵀ ⋆1 (a 0-form; the discrete divergence up to sign).
    pub fn codifferential1(&self, a: &[f64]) -> Vec<f64> {
        let wa: Vec<f64> = a.iter().zip(&self.star1).map(|(a, w)| a * w).collect();
        let r = linalg::mul_t(&self.d0, &wa);
        r.iter().zip(&self.star0).map(|(r, m)| r / m).collect()
    }

    /// d* on 2-forms: ⋆1⁻¹ d1ᵀ ⋆2, the adjoint of d1 in the DEC inner products.
    pub fn codifferential2(&self, b: &[f64]) -> Vec<f64> {
        let sb: Vec<f64> = b.iter().zip(&self.star2).map(|(b, s)| b * s).collect();
        let r = linalg::mul_t(&self.d1, &sb);
        r.iter().zip(&self.star1).map(|(r, w)| r / w).collect()
    }

    /// Laplace–Beltrami of a 0-form (negative semidefinite).
    pub fn laplacian0(&self, f: &[f64]) -> Vec<f64> {
        let lf = linalg::mul(&self.lap0, f);
        lf.iter().zip(&self.star0).map(|(l, m)| -l / m).collect()
    }

    /// Hodge Laplacian dd* + d*d of a 1-form (positive semidefinite).
    pub fn hodge_laplacian1(&self, a: &[f64]) -> Vec<f64> {
        let dda = self.apply_d0(&self.codifferential1(a));
        let da = self.apply_d1(a);
        let dda2 = self.codifferential2(&da);
        dda.iter().zip(&dda2).map(|(x, y)| x + y).collect()
    }

    /// L² inner product of 1-forms.
    pub fn inner1(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.star1).map(|((a, b), w)| a * b * w).sum()
    }

    /// L² inner product of 0-forms.
    pub fn inner0(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.star0).map(|((a, b), m)| a * b * m).sum()
    }

    pub fn total_area(&self) -> f64 {
        self.face_area.iter().sum()
    }
}
