//! Binding scores: a deterministic size-based surrogate, or an external
//! docking program driven through [`AdapterConfig`].

use std::fmt;

use molpilot_chem::descriptors::{lipinski_hba, lipinski_hbd};
use molpilot_chem::{write_smiles, MolecularGraph};
use serde::{Deserialize, Serialize};

use crate::adapter::{extract_affinity, run_command, shell_quote, substitute, AdapterConfig, AdapterError};
use crate::pocket::PocketDescriptor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Surrogate,
    External,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Surrogate => "surrogate",
            Engine::External => "external",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DockingResult {
    /// kcal/mol, lower is stronger binding.
    pub vna: f64,
    pub engine: Engine,
    pub raw_output: String,
}

/// Heavy-atom count the pocket is assumed to accommodate best.
pub fn optimal_size(p: &PocketDescriptor) -> usize {
    ((0.8 * p.capacity as f64).round() as usize).max(1)
}

/// Not physics. Rewards size up to the pocket's optimum, penalizes overshoot,
/// and adds a small desolvation-like penalty for more than eight polar atoms.
pub fn surrogate_vna(heavy_atoms: usize, polar: u32, p: &PocketDescriptor) -> f64 {
    let n = heavy_atoms as f64;
    let n_opt = optimal_size(p) as f64;
    -0.4 * n.min(n_opt) + 0.6 * (n - n_opt).max(0.0) + 0.1 * (polar as f64 - 8.0).max(0.0)
}

pub fn surrogate_score(g: &MolecularGraph, p: &PocketDescriptor) -> DockingResult {
    let polar = lipinski_hbd(g) + lipinski_hba(g);
    DockingResult { vna: surrogate_vna(g.heavy_atom_count(), polar, p), engine: Engine::Surrogate, raw_output: String::new() }
}

/// Writes the ligand as SMILES and the pocket (its source file, or the
/// descriptor as JSON) into a private temp directory, runs the configured
/// command and pulls the affinity out of stdout, then out of `{out}`.
pub fn dock_external(g: &MolecularGraph, p: &PocketDescriptor, cfg: &AdapterConfig) -> Result<DockingResult, AdapterError> {
    let dir = tempfile::tempdir().map_err(|e| AdapterError::Io(e.to_string()))?;
    let ligand = dir.path().join("ligand.smi");
    std::fs::write(&ligand, format!("{}\n", write_smiles(g))).map_err(|e| AdapterError::Io(e.to_string()))?;
    let pocket = match &p.source_path {
        Some(path) => path.clone(),
        None => {
            let path = dir.path().join("pocket.json");
            let json = serde_json::to_string(p).map_err(|e| AdapterError::Io(e.to_string()))?;
            std::fs::write(&path, json).map_err(|e| AdapterError::Io(e.to_string()))?;
            path
        }
    };
    let out = dir.path().join("out.txt");
    let command = substitute(
        &cfg.command_template,
        &[
            ("ligand", shell_quote(&ligand.to_string_lossy())),
            ("pocket", shell_quote(&pocket.to_string_lossy())),
            ("out", shell_quote(&out.to_string_lossy())),
        ],
    );
    let output = run_command(cfg, &command, dir.path())?;
    let mut affinity = extract_affinity(&cfg.affinity_pattern, &output.stdout)?;
    if affinity.is_none() {
        if let Ok(text) = std::fs::read_to_string(&out) {
            affinity = extract_affinity(&cfg.affinity_pattern, &text)?;
        }
    }
    match affinity {
        Some(vna) => Ok(DockingResult { vna, engine: Engine::External, raw_output: output.stdout }),
        None => Err(AdapterError::PatternNotFound { raw_output: output.stdout }),
    }
}

/// The configured docking backend.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "lowercase")]
pub enum Docker {
    #[default]
    Surrogate,
    External(AdapterConfig),
}

impl Docker {
    pub fn engine(&self) -> Engine {
        match self {
            Docker::Surrogate => Engine::Surrogate,
            Docker::External(_) => Engine::External,
        }
    }

    pub fn score(&self, g: &MolecularGraph, p: &PocketDescriptor) -> Result<DockingResult, AdapterError> {
        match self {
            Docker::Surrogate => Ok(surrogate_score(g, p)),
            Docker::External(cfg) => dock_external(g, p, cfg),
        }
    }

    /// Scores a batch, running up to `max_concurrency` external calls at once.
    /// Results keep input order.
    pub fn score_batch(&self, gs: &[&MolecularGraph], p: &PocketDescriptor) -> Vec<Result<DockingResult, AdapterError>> {
        let width = match self {
            Docker::Surrogate => 1,
            Docker::External(cfg) => cfg.max_concurrency.max(1),
        };
        if width == 1 {
            return gs.iter().map(|g| self.score(g, p)).collect();
        }
        let mut out = Vec::with_capacity(gs.len());
        for chunk in gs.chunks(width) {
            let results: Vec<_> = std::thread::scope(|s| {
                let handles: Vec<_> = chunk.iter().map(|g| s.spawn(move || self.score(g, p))).collect();
                handles.into_iter().map(|h| h.join().expect("docking thread")).collect()
            });
            out.extend(results);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pocket::{parse_pocket, synthetic_pdb};

    fn pocket(capacity_atoms: usize) -> PocketDescriptor {
        parse_pocket(&synthetic_pdb(capacity_atoms * 4)).unwrap()
    }

    #[test]
    fn surrogate_formula() {
        let p = pocket(30);
        assert_eq!(optimal_size(&p), 24);
        assert!((surrogate_vna(10, 0, &p) + 4.0).abs() < 1e-12);
        assert!((surrogate_vna(30, 8, &p) + 6.0).abs() < 1e-12);
        assert!((surrogate_vna(10, 10, &p) + 3.8).abs() < 1e-12);
    }

    #[test]
    fn surrogate_is_unimodal_in_size() {
        let p = pocket(30);
        let n_opt = optimal_size(&p);
        for n in 1..n_opt {
            assert!(surrogate_vna(n + 1, 0, &p) <= surrogate_vna(n, 0, &p));
        }
        for n in n_opt..80 {
            assert!(surrogate_vna(n + 1, 0, &p) >= surrogate_vna(n, 0, &p));
        }
    }
}
