//! Text checkpoint of a discrete field:
//!
//! ```text
//! # vortexlab field checkpoint v1
//! # surface_hash: <sha-256 hex of the surface descriptor>
//! # epsilon: <ε>
//! # potential: <gl | mm | power:p>
//! # frame: vertex-frames-v1
//! # sites: <N>
//! # components: <2 | 3>
//! # config_hash: <hex>      (optional)
//! re,im[,mperp]      (N lines, one per vertex)
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{DiscreteField, MmField, Potential};
use crate::error::{Error, Result};
use crate::geometry::SurfaceModel;

pub const FRAME_ID: &str = "vertex-frames-v1";
const MAGIC: &str = "# vortexlab field checkpoint v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub surface_hash: String,
    pub epsilon: f64,
    pub potential: Potential,
    pub frame: String,
    pub values: Vec<Complex64>,
    pub mperp: Option<Vec<f64>>,
    /// Hash of the run configuration that produced the field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl Checkpoint {
    pub fn from_field(field: &DiscreteField, epsilon: f64, potential: &Potential) -> Checkpoint {
        Checkpoint {
            surface_hash: field.surface_hash.clone(),
            epsilon,
            potential: potential.clone(),
            frame: FRAME_ID.into(),
            values: field.values.clone(),
            mperp: None,
            config_hash: None,
        }
    }

    pub fn from_magnetization(field: &MmField, epsilon: f64, potential: &Potential) -> Checkpoint {
        Checkpoint { mperp: Some(field.mperp.clone()), ..Checkpoint::from_field(&field.m, epsilon, potential) }
    }

    /// Serialize with 17 significant digits, so values round-trip exactly.
    pub fn to_text(&self) -> String {
        let comps = if self.mperp.is_some() { 3 } else { 2 };
        let mut out = format!(
            "{MAGIC}\n# surface_hash: {}\n# epsilon: {:.16e}\n# potential: {}\n# frame: {}\n# sites: {}\n# components: {comps}\n",
            self.surface_hash,
            self.epsilon,
            self.potential.name(),
            self.frame,
            self.values.len()
        );
        if let Some(h) = &self.config_hash {
            out.push_str(&format!("# config_hash: {h}\n"));
        }
        for (k, z) in self.values.iter().enumerate() {
            match &self.mperp {
                Some(p) => out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", z.re, z.im, p[k])),
                None => out.push_str(&format!("{:.16e},{:.16e}\n", z.re, z.im)),
            }
        }
        out
    }

    /// The field on `s`; fails if the checkpoint was written for another surface.
    pub fn field(&self, s: &SurfaceModel) -> Result<DiscreteField> {
        if self.surface_hash != s.hash() {
            return Err(Error::InvalidInput("checkpoint surface hash does not match the surface".into()));
        }
        DiscreteField::new(s, self.values.clone())
    }
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    let (no, line) = lines.next().ok_or(Error::Parse { line: 0, msg: format!("missing header {key}") })?;
    let value = line
        .strip_prefix("# ")
        .and_then(|l| l.strip_prefix(key))
        .and_then(|l| l.strip_prefix(':'))
        .map(str::trim)
        .ok_or_else(|| Error::Parse { line: no, msg: format!("expected header {key:?}") })?;
    Ok((no, value))
}

fn number(s: &str, line: usize) -> Result<f64> {
    let x: f64 = s.trim().parse().map_err(|_| Error::Parse { line, msg: format!("not a number: {s:?}") })?;
    if !x.is_finite() {
        return Err(Error::Parse { line, msg: "non-finite value".into() });
    }
    Ok(x)
}

pub fn parse_checkpoint(data: &[u8]) -> Result<Checkpoint> {
    let text = std::str::from_utf8(data).map_err(|_| Error::Parse { line: 0, msg: "checkpoint is not UTF-8".into() })?;
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim_end_matches('\r'))).filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        Some((no, _)) => return Err(Error::Parse { line: no, msg: "not a field checkpoint".into() }),
        None => return Err(Error::Parse { line: 0, msg: "empty checkpoint".into() }),
    }
    let (_, hash) = header(&mut lines, "surface_hash")?;
    if hash.is_empty() || !hash.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(Error::Parse { line: 2, msg: "surface hash must be hexadecimal".into() });
    }
    let (no, eps) = header(&mut lines, "epsilon")?;
    let epsilon = number(eps, no)?;
    if !(epsilon > 0.0) {
        return Err(Error::Parse { line: no, msg: "ε must be positive".into() });
    }
    let (no, pot) = header(&mut lines, "potential")?;
    let potential = Potential::from_name(pot).map_err(|e| Error::Parse { line: no, msg: e.to_string() })?;
    let (no, frame) = header(&mut lines, "frame")?;
    if frame != FRAME_ID {
        return Err(Error::Parse { line: no, msg: format!("unknown frame {frame:?}") });
    }
    let (no, sites) = header(&mut lines, "sites")?;
    let sites: usize = sites.parse().map_err(|_| Error::Parse { line: no, msg: "bad site count".into() })?;
    let (no, comps) = header(&mut lines, "components")?;
    let comps: usize = match comps {
        "2" => 2,
        "3" => 3,
        _ => return Err(Error::Parse { line: no, msg: "components must be 2 or 3".into() }),
    };
    let cap = sites.min(1 << 20);
    let mut values = Vec::with_capacity(cap);
    let mut mperp = if comps == 3 { Some(Vec::with_capacity(cap)) } else { None };
    let mut config_hash = None;
    for (no, line) in lines {
        if let Some(rest) = line.strip_prefix("# config_hash:") {
            let h = rest.trim();
            if !values.is_empty() || config_hash.is_some() || h.is_empty() || !h.chars().all(|c| c.is_ascii_hexdigit()) {
                return Err(Error::Parse { line: no, msg: "misplaced or malformed config hash".into() });
            }
            config_hash = Some(h.to_string());
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != comps {
            return Err(Error::Parse { line: no, msg: format!("expected {comps} comma-separated values") });
        }
        values.push(Complex64::new(number(parts[0], no)?, number(parts[1], no)?));
        if let Some(p) = mperp.as_mut() {
            p.push(number(parts[2], no)?);
        }
        if values.len() > sites {
            return Err(Error::Parse { line: no, msg: "more rows than declared sites".into() });
        }
    }
    if values.len() != sites {
        return Err(Error::Parse { line: 0, msg: format!("{} rows, {sites} sites declared", values.len()) });
    }
    Ok(Checkpoint { surface_hash: hash.to_string(), epsilon, potential, frame: frame.to_string(), values, mperp, config_hash })
}
