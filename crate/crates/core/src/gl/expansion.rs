use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{energy_ex, energy_in, DiscreteField, Functional, Potential, ProfileKind};
use crate::canonical::build_ustar;
use crate::error::{Error, Result};
use crate::greens::GreenEvaluator;
use crate::harmonic::{lattice, HarmonicBasis, VortexConfig};
use crate::renorm::{theta_minimize, w_closed_form, ThetaOptions};
use crate::vortex::{ball_construction, flux_integrals, BallOptions};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IotaEstimate {
    pub kind: ProfileKind,
    pub ts: Vec<f64>,
    pub i_values: Vec<f64>,
    /// I(t) + π log t.
    pub shifted: Vec<f64>,
    /// Value at the smallest t.
    pub iota: f64,
    /// Difference between the two smallest t.
    pub increment: f64,
}

/// ι_F (or ι̃_F) from I(t) + π log t on a decreasing sequence of t.
pub fn iota_estimate(kind: ProfileKind, pot: &Potential, ts: &[f64], grid_size: usize) -> Result<IotaEstimate> {
    if ts.len() < 2 {
        return Err(Error::InvalidInput("at least two ratios t are needed".into()));
    }
    let mut ts = ts.to_vec();
    ts.sort_by(|a, b| b.total_cmp(a));
    let i_values = ts
        .par_iter()
        .map(|&t| {
            Ok(match kind {
                ProfileKind::Intrinsic => super::radial_profile_in(t, grid_size, pot)?,
                ProfileKind::Micromagnetic => super::radial_profile_mm(t, grid_size, pot)?,
            }
            .i_value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let shifted: Vec<f64> = ts.iter().zip(&i_values).map(|(t, i)| i + PI * t.ln()).collect();
    let n = shifted.len();
    Ok(IotaEstimate { kind, iota: shifted[n - 1], increment: shifted[n - 2] - shifted[n - 1], ts, i_values, shifted })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpansionRow {
    pub epsilon: f64,
    pub energy: f64,
    /// Σ|d| of the detected vortices.
    pub n: i64,
    /// nπ log(1/ε)
    pub log_term: f64,
    pub w: f64,
    pub n_iota: f64,
    /// E − nπ log(1/ε) − W − nι
    pub residual: f64,
    /// W̃ of the detected configuration (extrinsic energy only).
    pub tilde_w: Option<f64>,
    pub vortices: VortexConfig,
    pub phi: Vec<f64>,
}

/// Compare the energy of a minimizer with nπ log(1/ε) + W(a, d, Φ) + nι,
/// with (a, d) detected by the ball construction at scale σ and Φ the
/// lattice point nearest the measured flux.
#[allow(clippy::too_many_arguments)]
pub fn expansion_report(
    gev: &GreenEvaluator,
    hb: &HarmonicBasis,
    field: &DiscreteField,
    eps: f64,
    pot: &Potential,
    functional: Functional,
    iota: f64,
    sigma: f64,
) -> Result<ExpansionRow> {
    let s = gev.surface();
    let energy = match functional {
        Functional::Intrinsic => energy_in(s, field, eps, pot)?,
        Functional::Extrinsic => energy_ex(s, field, eps, pot)?,
        Functional::Micromagnetic => {
            return Err(Error::Unsupported("expansion report for the micromagnetic energy".into()))
        }
    }
    .total;
    let balls = ball_construction(s, field, eps, sigma, &BallOptions { potential: pot.clone(), ..Default::default() })?;
    let vortices = balls.vortices();
    let n = vortices.abs_degree();
    if n != s.euler_char.abs() {
        return Err(Error::NoConvergence {
            what: format!("minimization not converged: detected Σ|d| = {n}, expected |χ| = {}", s.euler_char.abs()),
            residual: (n - s.euler_char.abs()).abs() as f64,
        });
    }
    let phi = if hb.dim() > 0 {
        lattice(hb, gev, &vortices)?.nearest_point(&flux_integrals(s, field, hb)?)?
    } else {
        vec![]
    };
    let w = w_closed_form(gev, hb, &vortices, &phi)?.w_closed;
    let log_term = n as f64 * PI * (1.0 / eps).ln();
    let n_iota = n as f64 * iota;
    let tilde_w = if functional == Functional::Extrinsic {
        let ustar = build_ustar(gev, hb, &vortices, &phi)?;
        Some(theta_minimize(s, &ustar, &ThetaOptions::default())?.tilde_w)
    } else {
        None
    };
    Ok(ExpansionRow { epsilon: eps, energy, n, log_term, w, n_iota, residual: energy - log_term - w - n_iota, tilde_w, vortices, phi })
}
