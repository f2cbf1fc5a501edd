//! The GENERATE action: a seeded fragment sampler, or an external generative
//! model behind the adapter contract.

use std::collections::HashSet;

use molpilot_chem::smiles::parse_smiles_line;
use molpilot_chem::{canonical_key, parse_smiles, MolecularGraph};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::adapter::{run_command, shell_quote, substitute, AdapterConfig, AdapterError};
use crate::edit;
use crate::pocket::PocketDescriptor;

pub const DEFAULT_COUNT: usize = 100;
/// Attempts allowed per requested molecule before a batch is returned short.
pub const ATTEMPTS_PER_MOLECULE: usize = 50;

const BUILTIN_FRAGMENTS: &str = include_str!("../data/fragments.smi");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("fragment library is empty and no seed ligand was given")]
    NothingToBuildFrom,
    #[error("count must be at least 1")]
    ZeroCount,
    #[error("fragment library line {line}: {message}")]
    BadFragment { line: usize, message: String },
    #[error(transparent)]
    Adapter(#[from] AdapterError),
}

#[derive(Debug, Clone)]
pub struct FragmentLibrary {
    fragments: Vec<MolecularGraph>,
}

impl FragmentLibrary {
    pub fn parse(text: &str) -> Result<FragmentLibrary, GenerateError> {
        let mut fragments = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let Some((smiles, _)) = parse_smiles_line(line) else { continue };
            let g = parse_smiles(smiles).map_err(|e| GenerateError::BadFragment { line: i + 1, message: e.to_string() })?;
            fragments.push(g);
        }
        Ok(FragmentLibrary { fragments })
    }

    pub fn builtin() -> FragmentLibrary {
        FragmentLibrary::parse(BUILTIN_FRAGMENTS).expect("shipped fragment library parses")
    }

    pub fn empty() -> FragmentLibrary {
        FragmentLibrary { fragments: Vec::new() }
    }

    pub fn fragments(&self) -> &[MolecularGraph] {
        &self.fragments
    }

    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct GenerationRequest {
    pub pocket: PocketDescriptor,
    pub count: usize,
    pub seed_ligand: Option<MolecularGraph>,
    pub rng_seed: u64,
}

impl GenerationRequest {
    pub fn new(pocket: PocketDescriptor, rng_seed: u64) -> GenerationRequest {
        GenerationRequest { pocket, count: DEFAULT_COUNT, seed_ligand: None, rng_seed }
    }

    /// Largest molecule the sampler will emit for this pocket.
    pub fn max_heavy_atoms(&self) -> usize {
        (1.5 * self.pocket.capacity as f64).floor() as usize
    }
}

#[derive(Debug, Clone, Default)]
pub struct GenerationBatch {
    pub molecules: Vec<MolecularGraph>,
    /// Set when the sampler ran out of attempts before reaching the count.
    pub partial: bool,
    pub warnings: Vec<String>,
}

/// Draws molecules until `count` unique canonical forms fit the pocket. With a
/// seed ligand, every other draw mutates the seed one to three times; the rest
/// chain two to four random library fragments.
pub fn generate_builtin(req: &GenerationRequest, library: &FragmentLibrary) -> Result<GenerationBatch, GenerateError> {
    if req.count == 0 {
        return Err(GenerateError::ZeroCount);
    }
    if library.is_empty() && req.seed_ligand.is_none() {
        return Err(GenerateError::NothingToBuildFrom);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(req.rng_seed);
    let cap = req.max_heavy_atoms();
    let mut seen = HashSet::new();
    let mut batch = GenerationBatch::default();
    let frags = library.fragments();

    for attempt in 0..req.count * ATTEMPTS_PER_MOLECULE {
        if batch.molecules.len() >= req.count {
            break;
        }
        let from_seed = match (&req.seed_ligand, frags.is_empty()) {
            (Some(_), true) => true,
            (Some(_), false) => attempt % 2 == 0,
            (None, _) => false,
        };
        let candidate = if from_seed {
            let seed = req.seed_ligand.as_ref().expect("checked above");
            let rounds = rng.random_range(1..=3);
            let mut g = seed.clone();
            for _ in 0..rounds {
                g = edit::mutate(&g, frags, 1.0, &mut rng);
            }
            Some(g)
        } else {
            chain_fragments(frags, rng.random_range(2..=4), &mut rng)
        };
        let Some(g) = candidate else { continue };
        if g.is_empty() || g.heavy_atom_count() > cap || g.components().len() != 1 {
            continue;
        }
        if seen.insert(canonical_key(&g)) {
            batch.molecules.push(g);
        }
    }
    if batch.molecules.len() < req.count {
        batch.partial = true;
        batch.warnings.push(format!(
            "built-in sampler produced {} of {} molecules within {} attempts",
            batch.molecules.len(),
            req.count,
            req.count * ATTEMPTS_PER_MOLECULE
        ));
    }
    Ok(batch)
}

fn chain_fragments<R: Rng>(frags: &[MolecularGraph], k: usize, rng: &mut R) -> Option<MolecularGraph> {
    let mut g = frags.choose(rng)?.clone();
    for _ in 1..k {
        let next = frags.choose(rng)?;
        g = edit::join_random(&g, next, rng)?;
    }
    Some(g)
}

/// Runs the configured generator with `{pocket}`, `{count}` and `{out}`
/// substituted, then reads one SMILES per line from `{out}`.
pub fn generate_external(req: &GenerationRequest, cfg: &AdapterConfig) -> Result<GenerationBatch, GenerateError> {
    if req.count == 0 {
        return Err(GenerateError::ZeroCount);
    }
    let dir = tempfile::tempdir().map_err(|e| AdapterError::Io(e.to_string()))?;
    let pocket = match &req.pocket.source_path {
        Some(p) => p.clone(),
        None => {
            let path = dir.path().join("pocket.json");
            let json = serde_json::to_string(&req.pocket).map_err(|e| AdapterError::Io(e.to_string()))?;
            std::fs::write(&path, json).map_err(|e| AdapterError::Io(e.to_string()))?;
            path
        }
    };
    let out = dir.path().join("generated.smi");
    let command = substitute(
        &cfg.command_template,
        &[
            ("pocket", shell_quote(&pocket.to_string_lossy())),
            ("count", req.count.to_string()),
            ("out", shell_quote(&out.to_string_lossy())),
        ],
    );
    let output = run_command(cfg, &command, dir.path())?;
    let text = std::fs::read_to_string(&out).unwrap_or_default();

    let mut batch = GenerationBatch::default();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let Some((smiles, _)) = parse_smiles_line(line) else { continue };
        match parse_smiles(smiles) {
            Ok(g) if !g.is_empty() => {
                if seen.insert(canonical_key(&g)) {
                    batch.molecules.push(g);
                }
            }
            Ok(_) => batch.warnings.push(format!("line {}: empty molecule", i + 1)),
            Err(e) => batch.warnings.push(format!("line {}: skipped {smiles:?}: {e}", i + 1)),
        }
    }
    if batch.molecules.is_empty() {
        return Err(AdapterError::EmptyBatch { raw_output: output.stdout }.into());
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pocket::{parse_pocket, synthetic_pdb};
    use molpilot_chem::write_smiles;

    fn request(count: usize, seed: u64) -> GenerationRequest {
        let mut r = GenerationRequest::new(parse_pocket(&synthetic_pdb(120)).unwrap(), seed);
        r.count = count;
        r
    }

    #[test]
    fn builtin_library_loads() {
        assert!(FragmentLibrary::builtin().len() >= 200);
    }

    #[test]
    fn hundred_unique_molecules() {
        let batch = generate_builtin(&request(100, 3), &FragmentLibrary::builtin()).unwrap();
        assert!(!batch.partial);
        let keys: HashSet<_> = batch.molecules.iter().map(canonical_key).collect();
        assert_eq!(keys.len(), 100);
        assert!(batch.molecules.iter().all(|g| g.heavy_atom_count() <= 45));
    }

    #[test]
    fn seeded_single_molecule_is_reproducible() {
        let mut r = request(1, 7);
        r.seed_ligand = Some(parse_smiles("c1ccccc1").unwrap());
        let a = generate_builtin(&r, &FragmentLibrary::builtin()).unwrap();
        let b = generate_builtin(&r, &FragmentLibrary::builtin()).unwrap();
        assert_eq!(a.molecules.len(), 1);
        assert_eq!(write_smiles(&a.molecules[0]), write_smiles(&b.molecules[0]));
    }

    #[test]
    fn empty_library_without_seed_is_rejected() {
        assert_eq!(generate_builtin(&request(5, 1), &FragmentLibrary::empty()).unwrap_err(), GenerateError::NothingToBuildFrom);
    }

    #[test]
    fn tiny_pocket_gives_partial_batch() {
        let mut r = request(10, 1);
        r.pocket = parse_pocket(&synthetic_pdb(4)).unwrap();
        let batch = generate_builtin(&r, &FragmentLibrary::builtin()).unwrap();
        assert!(batch.partial);
        assert_eq!(batch.warnings.len(), 1);
    }
}
