//! Binding-pocket descriptors read from PDB ATOM/HETATM records.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PocketError {
    #[error("no ATOM or HETATM records")]
    NoAtoms,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Identifier of the form `POCKET001`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PocketId(String);

impl PocketId {
    pub fn from_index(n: usize) -> PocketId {
        PocketId(format!("POCKET{n:03}"))
    }

    pub fn parse(s: &str) -> Option<PocketId> {
        let digits = s.strip_prefix("POCKET")?;
        (digits.len() >= 3 && digits.bytes().all(|b| b.is_ascii_digit())).then(|| PocketId(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PocketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PocketDescriptor {
    pub id: PocketId,
    pub heavy_atom_count: usize,
    /// Per-axis (min, max) in Å.
    pub bounding_box: [(f64, f64); 3],
    pub center: [f64; 3],
    /// Rough ligand capacity in heavy atoms: a quarter of the pocket's heavy
    /// atoms, at least one. An arbitrary calibration; only ordering matters.
    pub capacity: usize,
    pub source_path: Option<PathBuf>,
}

fn field(line: &str, from: usize, to: usize) -> &str {
    line.get(from..to.min(line.len())).unwrap_or("").trim()
}

fn element_of(line: &str) -> String {
    let explicit = field(line, 76, 78);
    if !explicit.is_empty() {
        return explicit.to_ascii_uppercase();
    }
    // Fall back to the atom name, skipping leading digits (e.g. "1HB").
    field(line, 12, 16).trim_start_matches(|c: char| c.is_ascii_digit()).chars().take(1).collect::<String>().to_ascii_uppercase()
}

/// Parses fixed-width ATOM/HETATM coordinates. Other records are ignored.
pub fn parse_pocket(text: &str) -> Result<PocketDescriptor, PocketError> {
    let mut heavy: Vec<[f64; 3]> = Vec::new();
    let mut any = false;
    for (i, line) in text.lines().enumerate() {
        if !(line.starts_with("ATOM") || line.starts_with("HETATM")) {
            continue;
        }
        any = true;
        let lineno = i + 1;
        if line.len() < 54 {
            return Err(PocketError::Malformed { line: lineno, message: format!("record is {} columns, coordinates need 54", line.len()) });
        }
        let mut xyz = [0.0f64; 3];
        for (k, (from, to)) in [(30, 38), (38, 46), (46, 54)].into_iter().enumerate() {
            let s = field(line, from, to);
            xyz[k] = s.parse().map_err(|_| PocketError::Malformed {
                line: lineno,
                message: format!("bad coordinate {s:?} in columns {}-{}", from + 1, to),
            })?;
            if !xyz[k].is_finite() {
                return Err(PocketError::Malformed { line: lineno, message: "non-finite coordinate".into() });
            }
        }
        let element = element_of(line);
        if element != "H" && element != "D" {
            heavy.push(xyz);
        }
    }
    if !any || heavy.is_empty() {
        return Err(PocketError::NoAtoms);
    }

    let mut bbox = [(f64::INFINITY, f64::NEG_INFINITY); 3];
    let mut sum = [0.0; 3];
    for p in &heavy {
        for k in 0..3 {
            bbox[k].0 = bbox[k].0.min(p[k]);
            bbox[k].1 = bbox[k].1.max(p[k]);
            sum[k] += p[k];
        }
    }
    let n = heavy.len();
    let center = sum.map(|s| s / n as f64);
    // Degenerate axes (a single plane of atoms) get a 1 Å slab so min < max.
    for (lo, hi) in bbox.iter_mut() {
        if *hi - *lo < 1e-9 {
            *lo -= 0.5;
            *hi += 0.5;
        }
    }
    Ok(PocketDescriptor {
        id: PocketId::from_index(1),
        heavy_atom_count: n,
        bounding_box: bbox,
        center,
        capacity: ((n as f64 / 4.0).round() as usize).max(1),
        source_path: None,
    })
}

pub fn load_pocket(path: &Path) -> Result<PocketDescriptor, PocketError> {
    let text = std::fs::read_to_string(path).map_err(|e| PocketError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let mut p = parse_pocket(&text)?;
    p.source_path = Some(path.to_path_buf());
    Ok(p)
}

/// A synthetic pocket: `n` carbons on a line spaced 1.5 Å apart.
pub fn synthetic_pdb(n: usize) -> String {
    let mut out = String::new();
    for i in 0..n {
        out.push_str(&atom_record(i + 1, "C", [1.5 * i as f64, 0.0, 0.0]));
    }
    out.push_str("END\n");
    out
}

/// One ATOM line in PDB fixed-width layout.
pub fn atom_record(serial: usize, element: &str, xyz: [f64; 3]) -> String {
    format!(
        "ATOM  {serial:>5} {name:<4} ALA A   1    {x:>8.3}{y:>8.3}{z:>8.3}  1.00  0.00          {element:>2}\n",
        name = element,
        x = xyz[0],
        y = xyz[1],
        z = xyz[2],
    )
}
