//! Plain-text curve snapshots: a header `N orientation t`, then `N` rows `m x y z`.
//!
//! Orientation is written as `1` (forward) or `-1` (reverse).

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use nalgebra::Vector3;

use super::{DiscreteCurve, Orientation};
use crate::error::{Error, Result};

pub fn to_string(curve: &DiscreteCurve, t: f64) -> String {
    let mut s = String::with_capacity(80 * (curve.len() + 1));
    let o = match curve.orientation() {
        Orientation::Forward => 1,
        Orientation::Reverse => -1,
    };
    let _ = writeln!(s, "{} {} {:e}", curve.len(), o, t);
    for (m, p) in curve.nodes().iter().enumerate() {
        let _ = writeln!(s, "{} {:e} {:e} {:e}", m, p.x, p.y, p.z);
    }
    s
}

pub fn write(path: &Path, curve: &DiscreteCurve, t: f64) -> Result<()> {
    std::fs::write(path, to_string(curve, t))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<(DiscreteCurve, f64)> {
    let file = std::fs::File::open(path)?;
    parse(file, path)
}

/// Parses a snapshot; `path` only labels errors.
pub fn parse(reader: impl Read, path: &Path) -> Result<(DiscreteCurve, f64)> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(reader)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty() && !l.starts_with('#')));

    let (hl, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    let header = header?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(err(
            hl,
            format!("header needs `N orientation t`, got {} fields", fields.len()),
        ));
    }
    let n: usize = fields[0].parse().map_err(|e| err(hl, format!("node count: {e}")))?;
    let orientation = match fields[1] {
        "1" | "+1" => Orientation::Forward,
        "-1" => Orientation::Reverse,
        other => return Err(err(hl, format!("orientation must be 1 or -1, got `{other}`"))),
    };
    let t: f64 = fields[2].parse().map_err(|e| err(hl, format!("time: {e}")))?;

    let mut nodes = Vec::with_capacity(n);
    for (ln, line) in lines {
        let line = line?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(err(ln, format!("expected `m x y z`, got {} fields", f.len())));
        }
        let m: usize = f[0].parse().map_err(|e| err(ln, format!("index: {e}")))?;
        if m != nodes.len() {
            return Err(err(ln, format!("expected index {}, got {m}", nodes.len())));
        }
        let mut v = [0.0; 3];
        for (c, s) in v.iter_mut().zip(&f[1..]) {
            *c = s.parse().map_err(|e| err(ln, format!("coordinate `{s}`: {e}")))?;
        }
        nodes.push(Vector3::from(v));
    }
    if nodes.len() != n {
        return Err(err(hl, format!("header declares {n} nodes, found {}", nodes.len())));
    }
    Ok((DiscreteCurve::new(nodes, orientation)?, t))
}
