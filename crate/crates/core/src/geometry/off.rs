//! ASCII OFF reader and writer (triangles only).

use std::fmt::Write as _;

use nalgebra::Vector3;

use super::mesh::Point;
use crate::error::{Error, Result};

const MAX_ELEMENTS: usize = 50_000_000;

/// Parses the subset: optional `#` comments, an `OFF` header line, a counts
/// line `V F [E]`, `V` vertex lines and `F` face lines `3 i j k`.
pub fn parse_off(text: &str) -> Result<(Vec<Point>, Vec<[usize; 3]>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "empty input".into() })?;
    let mut counts_inline: Option<&str> = None;
    if header != "OFF" {
        match header.strip_prefix("OFF") {
            Some(rest) if rest.starts_with(char::is_whitespace) => counts_inline = Some(rest.trim()),
            _ => return Err(Error::Parse { line, msg: "missing OFF header".into() }),
        }
    }
    let (line, counts) = match counts_inline {
        Some(c) => (line, c),
        None => lines.next().ok_or(Error::Parse { line, msg: "missing counts line".into() })?,
    };
    let nums: Vec<&str> = counts.split_whitespace().collect();
    if nums.len() < 2 || nums.len() > 3 {
        return Err(Error::Parse { line, msg: "counts line must be `V F [E]`".into() });
    }
    let parse_count = |s: &str| -> Result<usize> {
        let n: usize = s.parse().map_err(|_| Error::Parse { line, msg: format!("bad count `{s}`") })?;
        if n > MAX_ELEMENTS {
            return Err(Error::Parse { line, msg: format!("count {n} too large") });
        }
        Ok(n)
    };
    let nv = parse_count(nums[0])?;
    let nf = parse_count(nums[1])?;

    let mut verts = Vec::with_capacity(nv.min(1 << 16));
    for _ in 0..nv {
        let (line, l) = lines.next().ok_or(Error::Parse { line, msg: "unexpected end of vertices".into() })?;
        let c: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse { line, msg: "bad vertex coordinate".into() })?;
        if c.len() != 3 || c.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse { line, msg: "vertex needs three finite coordinates".into() });
        }
        verts.push(Vector3::new(c[0], c[1], c[2]));
    }
    let mut faces = Vec::with_capacity(nf.min(1 << 16));
    for _ in 0..nf {
        let (line, l) = lines.next().ok_or(Error::Parse { line, msg: "unexpected end of faces".into() })?;
        let ix: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse { line, msg: "bad face index".into() })?;
        if ix.len() != 4 || ix[0] != 3 {
            return Err(Error::Parse { line, msg: "only triangles `3 i j k` are supported".into() });
        }
        if ix[1..].iter().any(|&i| i >= nv) {
            return Err(Error::Parse { line, msg: "face index out of range".into() });
        }
        faces.push([ix[1], ix[2], ix[3]]);
    }
    Ok((verts, faces))
}

pub fn write_off(positions: &[Point], faces: &[[usize; 3]]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF\n{} {} 0", positions.len(), faces.len());
    for p in positions {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", p.x, p.y, p.z);
    }
    for f in faces {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}
