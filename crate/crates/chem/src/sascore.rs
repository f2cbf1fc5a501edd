//! Synthetic accessibility score (1 = easy, 10 = hard).
//!
//! The fragment term averages per-environment log-frequency scores over the
//! radius-2 Morgan environments of the molecule; unknown environments score
//! -4. Complexity penalties cover size, stereocentres, spiro and bridgehead
//! atoms and macrocycles, followed by a symmetry correction and an affine
//! rescale onto [1, 10].

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::sync::OnceLock;

use flate2::read::GzDecoder;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::canon::canonical_ranks;
use crate::element::Element;
use crate::fingerprint::morgan_environments;
use crate::graph::{BondOrder, MolecularGraph};

const FRAGMENT_TABLE_GZ: &[u8] = include_bytes!("../data/sa_fragments.txt.gz");
const FRAGMENT_TABLE_SHA256: &str = include_str!("../data/sa_fragments.sha256");

const UNKNOWN_FRAGMENT: f64 = -4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SasError {
    #[error("synthetic accessibility is undefined for an empty molecule")]
    EmptyMolecule,
    #[error("fragment table: {0}")]
    Io(String),
    #[error("fragment table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("fragment table checksum mismatch: expected {expected}, got {actual}")]
    Checksum { expected: String, actual: String },
}

/// Morgan environment id → fragment score.
#[derive(Debug, Clone)]
pub struct FragmentScoreTable {
    scores: HashMap<u32, f64>,
    checksum: String,
}

impl FragmentScoreTable {
    /// The table shipped with the crate, verified against its checksum.
    pub fn builtin() -> &'static FragmentScoreTable {
        static TABLE: OnceLock<FragmentScoreTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            let table = FragmentScoreTable::from_gzip(FRAGMENT_TABLE_GZ).expect("built-in fragment table parses");
            let expected = FRAGMENT_TABLE_SHA256.split_whitespace().next().unwrap_or_default();
            assert_eq!(table.checksum, expected, "built-in fragment table checksum");
            table
        })
    }

    pub fn from_gzip(bytes: &[u8]) -> Result<FragmentScoreTable, SasError> {
        let mut text = String::new();
        GzDecoder::new(bytes).read_to_string(&mut text).map_err(|e| SasError::Io(e.to_string()))?;
        FragmentScoreTable::parse(&text)
    }

    /// Loads a table file, gzipped if the name ends in `.gz`, and checks it
    /// against `expected_sha256` (of the uncompressed text) when given.
    pub fn from_path(path: &std::path::Path, expected_sha256: Option<&str>) -> Result<FragmentScoreTable, SasError> {
        let bytes = std::fs::read(path).map_err(|e| SasError::Io(format!("{}: {e}", path.display())))?;
        let table = if path.extension().is_some_and(|e| e == "gz") {
            FragmentScoreTable::from_gzip(&bytes)?
        } else {
            FragmentScoreTable::parse(&String::from_utf8_lossy(&bytes))?
        };
        if let Some(expected) = expected_sha256 {
            if table.checksum != expected {
                return Err(SasError::Checksum { expected: expected.to_string(), actual: table.checksum });
            }
        }
        Ok(table)
    }

    /// Text format: `#` comments, then one line per score value:
    /// `<score> <first id> <delta> <delta> ...` with ids ascending.
    pub fn parse(text: &str) -> Result<FragmentScoreTable, SasError> {
        let mut scores = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| SasError::Table { line: i + 1, message };
            let mut fields = line.split_whitespace();
            let score: f64 = fields.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("missing score".into()))?;
            let mut id: u64 = 0;
            for (k, f) in fields.enumerate() {
                let v: u64 = f.parse().map_err(|_| bad(format!("bad id {f:?}")))?;
                id = if k == 0 { v } else { id + v };
                let id32 = u32::try_from(id).map_err(|_| bad(format!("id {id} out of range")))?;
                if scores.insert(id32, score).is_some() {
                    return Err(bad(format!("duplicate id {id32}")));
                }
            }
        }
        Ok(FragmentScoreTable { scores, checksum: hex::encode(Sha256::digest(text.as_bytes())) })
    }

    pub fn get(&self, id: u32) -> Option<f64> {
        self.scores.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// SHA-256 of the uncompressed table text.
    pub fn checksum(&self) -> &str {
        &self.checksum
    }
}

/// Tetrahedral centres: atoms written with a chirality mark, plus sp3
/// carbons with four pairwise-distinct substituents (at most one H).
pub fn stereocentre_count(g: &MolecularGraph) -> usize {
    let ranks = canonical_ranks(g);
    (0..g.atom_count())
        .filter(|&i| {
            let atom = g.atom(i);
            if atom.chirality.is_some() {
                return true;
            }
            if atom.element != Element::C || g.total_degree(i) != 4 || atom.hydrogens > 1 {
                return false;
            }
            if g.neighbors(i).iter().any(|&(_, b)| g.bond(b).order != BondOrder::Single) {
                return false;
            }
            let mut seen: Vec<usize> = g.neighbors(i).iter().map(|&(j, _)| ranks[j]).collect();
            seen.sort_unstable();
            seen.dedup();
            seen.len() == g.degree(i)
        })
        .count()
}

fn intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.contains(x)).collect()
}

fn ring_bond_lists(g: &MolecularGraph) -> Vec<Vec<usize>> {
    g.rings().iter().map(|r| (0..r.len()).filter_map(|k| g.bond_between(r[k], r[(k + 1) % r.len()])).collect()).collect()
}

/// Atoms shared by two rings that have exactly one atom in common.
pub fn spiro_atom_count(g: &MolecularGraph) -> usize {
    let rings = g.rings();
    let mut atoms: Vec<usize> = Vec::new();
    for i in 0..rings.len() {
        for j in 0..i {
            let shared = intersection(&rings[i], &rings[j]);
            if shared.len() == 1 && !atoms.contains(&shared[0]) {
                atoms.push(shared[0]);
            }
        }
    }
    atoms.len()
}

/// Ends of the shared path between two rings that share more than one bond.
pub fn bridgehead_atom_count(g: &MolecularGraph) -> usize {
    let bond_rings = ring_bond_lists(g);
    let mut atoms: Vec<usize> = Vec::new();
    for i in 0..bond_rings.len() {
        for j in 0..i {
            let shared = intersection(&bond_rings[i], &bond_rings[j]);
            if shared.len() < 2 {
                continue;
            }
            let mut counts: HashMap<usize, usize> = HashMap::new();
            for &b in &shared {
                *counts.entry(g.bond(b).a).or_default() += 1;
                *counts.entry(g.bond(b).b).or_default() += 1;
            }
            for (a, c) in counts {
                if c == 1 && !atoms.contains(&a) {
                    atoms.push(a);
                }
            }
        }
    }
    atoms.len()
}

/// Synthetic accessibility in [1, 10].
pub fn sa_score(g: &MolecularGraph, table: &FragmentScoreTable) -> Result<f64, SasError> {
    let n_atoms = g.heavy_atom_count();
    if n_atoms == 0 {
        return Err(SasError::EmptyMolecule);
    }
    let envs = morgan_environments(g, 2);
    // Ordered so the float sum below is reproducible.
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for e in &envs {
        *counts.entry(e.id).or_default() += 1;
    }
    let total: u32 = counts.values().sum();
    let fragment: f64 = counts.iter().map(|(&id, &c)| table.get(id).unwrap_or(UNKNOWN_FRAGMENT) * c as f64).sum::<f64>() / total as f64;

    let n = n_atoms as f64;
    let size_penalty = n.powf(1.005) - n;
    let stereo_penalty = ((stereocentre_count(g) + 1) as f64).log10();
    let spiro_penalty = ((spiro_atom_count(g) + 1) as f64).log10();
    let bridge_penalty = ((bridgehead_atom_count(g) + 1) as f64).log10();
    let macrocycle_penalty = if g.rings().iter().any(|r| r.len() > 8) { 2f64.log10() } else { 0.0 };
    let complexity = -size_penalty - stereo_penalty - spiro_penalty - bridge_penalty - macrocycle_penalty;

    let distinct = counts.len() as f64;
    let symmetry = if n > distinct { 0.5 * (n / distinct).ln() } else { 0.0 };

    let raw = fragment + complexity + symmetry;
    let (lo, hi) = (-4.0, 2.5);
    let mut s = 11.0 - (raw - lo + 1.0) / (hi - lo) * 9.0;
    if s > 8.0 {
        s = 8.0 + (s + 1.0 - 9.0).ln();
    }
    Ok(s.clamp(1.0, 10.0))
}
