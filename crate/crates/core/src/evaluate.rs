//! Computes the five-property profile of a molecule for one target.

use molpilot_chem::descriptors::{compute_descriptors, DescriptorError, DescriptorSet, DescriptorTables};
use molpilot_chem::qed::qed;
use molpilot_chem::sascore::{sa_score, FragmentScoreTable, SasError};
use molpilot_chem::scoring::{lipinski, novelty, PropertyProfile};
use molpilot_chem::{default_fingerprint, Fingerprint, MolecularGraph};
use thiserror::Error;

use crate::adapter::AdapterError;
use crate::docking::{Docker, DockingResult};
use crate::pocket::PocketDescriptor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error(transparent)]
    Sas(#[from] SasError),
    #[error("docking: {0}")]
    Docking(#[from] AdapterError),
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub descriptors: DescriptorSet,
    pub fingerprint: Fingerprint,
    pub profile: PropertyProfile,
    pub docking: Option<DockingResult>,
}

/// Everything needed to score molecules against one target.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub pocket: PocketDescriptor,
    pub references: Vec<Fingerprint>,
    pub docker: Docker,
}

impl Evaluator {
    pub fn new(pocket: PocketDescriptor, references: Vec<Fingerprint>, docker: Docker) -> Evaluator {
        Evaluator { pocket, references, docker }
    }

    /// Docking is the only step that can be slow.
    pub fn docking_is_expensive(&self) -> bool {
        matches!(self.docker, Docker::External(_))
    }

    /// Full profile. With `dock == false` the VNA field is NaN and must be
    /// filled in by the caller.
    pub fn evaluate(&self, g: &MolecularGraph, dock: bool) -> Result<Evaluation, EvalError> {
        let descriptors = compute_descriptors(g, DescriptorTables::builtin())?;
        let fingerprint = default_fingerprint(g);
        let refs: Vec<&Fingerprint> = self.references.iter().collect();
        let nvt = novelty(&fingerprint, &refs).expect("fingerprints share parameters");
        let sas = sa_score(g, FragmentScoreTable::builtin())?;
        let docking = if dock { Some(self.docker.score(g, &self.pocket)?) } else { None };
        let profile = PropertyProfile {
            qed: qed(&descriptors),
            lrf: lipinski(&descriptors),
            sas,
            vna: docking.as_ref().map_or(f64::NAN, |d| d.vna),
            nvt,
        };
        Ok(Evaluation { descriptors, fingerprint, profile, docking })
    }

    pub fn profile(&self, g: &MolecularGraph) -> Result<PropertyProfile, EvalError> {
        Ok(self.evaluate(g, true)?.profile)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pocket::{parse_pocket, synthetic_pdb};
    use molpilot_chem::parse_smiles;

    #[test]
    fn reference_molecule_has_zero_novelty() {
        let aspirin = parse_smiles("CC(=O)Oc1ccccc1C(=O)O").unwrap();
        let e = Evaluator::new(parse_pocket(&synthetic_pdb(120)).unwrap(), vec![default_fingerprint(&aspirin)], Docker::Surrogate);
        let p = e.profile(&aspirin).unwrap();
        assert_eq!(p.nvt, 0.0);
        assert_eq!(p.lrf, 4);
        assert!(p.qed > 0.0 && p.qed <= 1.0);
        assert!((p.vna + 0.4 * 13.0).abs() < 1e-9);
    }
}
