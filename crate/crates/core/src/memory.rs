//! Append-only agent memory and the rule-based evaluator gate.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use molpilot_chem::scoring::{
    diversity, is_high_quality, success_with, Candidate, MoleculeId, MoleculeSet, Property, PropertyProfile, TargetThresholds, DVS_MIN,
    MIN_COUNT,
};
use molpilot_chem::{Fingerprint, MolecularGraph};
use serde::{Deserialize, Serialize};

use crate::optimizer::GenerationStats;
use crate::pocket::PocketId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Requirements {
    pub min_count: usize,
    pub thresholds: TargetThresholds,
    pub dvs_min: f64,
}

impl Requirements {
    pub fn new(thresholds: TargetThresholds) -> Requirements {
        Requirements { min_count: MIN_COUNT, thresholds, dvs_min: DVS_MIN }
    }

    pub fn threshold_name(p: Property) -> &'static str {
        match p {
            Property::Qed => "qed_min",
            Property::Lrf => "lrf_min",
            Property::Sas => "sas_max",
            Property::Vna => "vna_max",
            Property::Nvt => "nvt_min",
        }
    }
}

impl fmt::Display for Requirements {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.thresholds;
        write!(
            f,
            "At least {} molecules, every one with QED >= {:.3}, Lipinski rules met >= {:.2}, SAScore <= {:.3}, \
             Vina Score <= {:.3} kcal/mol and Novelty >= {:.2}; the set's diversity must be >= {:.2}.",
            self.min_count, t.qed_min, t.lrf_min, t.sas_max, t.vna_max, t.nvt_min, self.dvs_min
        )
    }
}

/// Per-property count of pool members missing the threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub qed: usize,
    pub lrf: usize,
    pub sas: usize,
    pub vna: usize,
    pub nvt: usize,
}

impl FailureCounts {
    pub fn of(profiles: &[PropertyProfile], t: &TargetThresholds) -> FailureCounts {
        let mut c = FailureCounts::default();
        for p in profiles {
            for prop in Property::ALL {
                if !prop.passes(p, t) {
                    *c.get_mut(prop) += 1;
                }
            }
        }
        c
    }

    pub fn get(&self, p: Property) -> usize {
        match p {
            Property::Qed => self.qed,
            Property::Lrf => self.lrf,
            Property::Sas => self.sas,
            Property::Vna => self.vna,
            Property::Nvt => self.nvt,
        }
    }

    fn get_mut(&mut self, p: Property) -> &mut usize {
        match p {
            Property::Qed => &mut self.qed,
            Property::Lrf => &mut self.lrf,
            Property::Sas => &mut self.sas,
            Property::Vna => &mut self.vna,
            Property::Nvt => &mut self.nvt,
        }
    }

    /// The optimizable property (QED, SAS, VNA) failing most often; ties go
    /// to that order. `None` when none of the three fails.
    pub fn worst_optimizable(&self) -> Option<Property> {
        let mut best: Option<(Property, usize)> = None;
        for p in [Property::Qed, Property::Sas, Property::Vna] {
            let n = self.get(p);
            if n > 0 && best.is_none_or(|(_, m)| n > m) {
                best = Some((p, n));
            }
        }
        best.map(|(p, _)| p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub satisfied: bool,
    pub failing_reasons: Vec<String>,
    pub failures: FailureCounts,
    pub pool_size: usize,
    pub hq_count: usize,
    pub dvs: Option<f64>,
}

/// Authoritative check of a candidate pool against the requirements.
pub fn evaluator_gate(pool: &MoleculeSet, req: &Requirements) -> Verdict {
    let t = &req.thresholds;
    let profiles = pool.profiles();
    let n = profiles.len();
    let failures = FailureCounts::of(&profiles, t);
    let hq_count = profiles.iter().filter(|p| is_high_quality(p, t)).count();
    let dvs = diversity(&pool.fingerprints()).ok();

    let mut reasons = Vec::new();
    if n < req.min_count {
        reasons.push(format!("count {n} < {}", req.min_count));
    }
    for prop in Property::ALL {
        let name = Requirements::threshold_name(prop);
        let k = failures.get(prop);
        if n == 0 {
            reasons.push(format!("no molecules to meet {name}"));
        } else if k > 0 {
            let side = if prop.lower_is_better() { "above" } else { "below" };
            reasons.push(format!("{k} of {n} {side} {name}"));
        }
    }
    match dvs {
        Some(d) if d < req.dvs_min => reasons.push(format!("diversity {d:.3} < {}", req.dvs_min)),
        None if n < 2 && req.min_count >= 2 => reasons.push(format!("diversity undefined for {n} molecule(s)")),
        _ => {}
    }
    let satisfied = success_with(pool, t, req.min_count, req.dvs_min);
    debug_assert_eq!(satisfied, reasons.is_empty());
    Verdict { satisfied, failing_reasons: reasons, failures, pool_size: n, hq_count, dvs }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ActionKind {
    Generate,
    Optimize,
    Screen,
}

impl ActionKind {
    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Generate => "GENERATE",
            ActionKind::Optimize => "OPTIMIZE",
            ActionKind::Screen => "SCREEN",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionSource {
    Llm,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    /// 1-based position in the run.
    pub index: usize,
    pub action: ActionKind,
    pub inputs: Vec<String>,
    pub desc: Option<String>,
    pub source: ActionSource,
    pub ok: bool,
    pub error: Option<String>,
    pub new_molecules: Vec<MoleculeId>,
    /// SCREEN output, when this action was a successful SCREEN.
    pub screened: Option<Vec<MoleculeId>>,
    pub warnings: Vec<String>,
    pub ga_trace: Option<Vec<GenerationStats>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmVerdict {
    /// `None` when no parseable answer came back.
    pub answer: Option<bool>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub action_index: usize,
    pub pool: Vec<MoleculeId>,
    pub verdict: Verdict,
    pub llm: Option<LlmVerdict>,
}

#[derive(Debug, Clone)]
pub struct MemoryMolecule {
    pub id: MoleculeId,
    pub smiles: String,
    pub graph: MolecularGraph,
    pub fingerprint: Fingerprint,
    pub profile: PropertyProfile,
    pub provenance: usize,
}

impl MemoryMolecule {
    pub fn candidate(&self) -> Candidate {
        Candidate { id: self.id.clone(), graph: self.graph.clone(), fingerprint: self.fingerprint.clone(), profile: self.profile }
    }
}

/// Everything the agent has produced. Records are only ever appended.
#[derive(Debug, Clone)]
pub struct Memory {
    pub target_name: String,
    pub pockets: Vec<PocketId>,
    pub requirements: Requirements,
    molecules: BTreeMap<MoleculeId, MemoryMolecule>,
    by_smiles: HashMap<String, MoleculeId>,
    next_index: usize,
    history: Vec<ActionRecord>,
    evaluations: Vec<EvaluationRecord>,
}

impl Memory {
    pub fn new(target_name: String, pockets: Vec<PocketId>, requirements: Requirements) -> Memory {
        Memory {
            target_name,
            pockets,
            requirements,
            molecules: BTreeMap::new(),
            by_smiles: HashMap::new(),
            next_index: 1,
            history: Vec::new(),
            evaluations: Vec::new(),
        }
    }

    /// Stores a molecule unless its canonical SMILES is already known; either
    /// way returns its id and whether it was new.
    pub fn insert(
        &mut self,
        smiles: String,
        graph: MolecularGraph,
        fingerprint: Fingerprint,
        profile: PropertyProfile,
        provenance: usize,
    ) -> (MoleculeId, bool) {
        if let Some(id) = self.by_smiles.get(&smiles) {
            return (id.clone(), false);
        }
        let id = MoleculeId::from_index(self.next_index);
        self.next_index += 1;
        self.by_smiles.insert(smiles.clone(), id.clone());
        self.molecules.insert(id.clone(), MemoryMolecule { id: id.clone(), smiles, graph, fingerprint, profile, provenance });
        (id, true)
    }

    pub fn contains_smiles(&self, smiles: &str) -> bool {
        self.by_smiles.contains_key(smiles)
    }

    pub fn molecule(&self, id: &MoleculeId) -> Option<&MemoryMolecule> {
        self.molecules.get(id)
    }

    pub fn molecules(&self) -> impl Iterator<Item = &MemoryMolecule> {
        self.molecules.values()
    }

    pub fn molecule_count(&self) -> usize {
        self.molecules.len()
    }

    pub fn has_pocket(&self, id: &str) -> bool {
        self.pockets.iter().any(|p| p.as_str() == id)
    }

    pub fn commit_action(&mut self, record: ActionRecord) {
        self.history.push(record);
    }

    pub fn commit_evaluation(&mut self, record: EvaluationRecord) {
        self.evaluations.push(record);
    }

    pub fn history(&self) -> &[ActionRecord] {
        &self.history
    }

    pub fn evaluations(&self) -> &[EvaluationRecord] {
        &self.evaluations
    }

    /// The latest SCREEN output, or every molecule if nothing was screened.
    pub fn candidate_pool(&self) -> Vec<MoleculeId> {
        match self.history.iter().rev().find_map(|r| r.screened.clone()) {
            Some(ids) => ids,
            None => self.molecules.keys().cloned().collect(),
        }
    }

    pub fn set_of(&self, ids: &[MoleculeId]) -> MoleculeSet {
        ids.iter().filter_map(|id| self.molecules.get(id)).map(MemoryMolecule::candidate).collect()
    }

    /// Molecules ranked for display and for picking optimization inputs:
    /// most thresholds met first, then `score` descending, then id.
    pub fn ranked(&self, score: impl Fn(&PropertyProfile) -> f64) -> Vec<&MemoryMolecule> {
        let t = &self.requirements.thresholds;
        let met = |p: &PropertyProfile| Property::ALL.iter().filter(|x| x.passes(p, t)).count();
        let mut all: Vec<&MemoryMolecule> = self.molecules.values().collect();
        all.sort_by(|a, b| {
            met(&b.profile)
                .cmp(&met(&a.profile))
                .then_with(|| score(&b.profile).total_cmp(&score(&a.profile)))
                .then_with(|| a.id.cmp(&b.id))
        });
        all
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use molpilot_chem::fingerprint::Fingerprint;

    fn thresholds() -> TargetThresholds {
        TargetThresholds { qed_min: 0.5, lrf_min: 3.0, sas_max: 4.0, vna_max: -7.0, nvt_min: 0.8 }
    }

    fn set(n: usize, qed: f64) -> MoleculeSet {
        (0..n)
            .map(|i| Candidate {
                id: MoleculeId::from_index(i + 1),
                graph: molpilot_chem::parse_smiles("C").unwrap(),
                fingerprint: Fingerprint::from_bits(64, 2, [i]).unwrap(),
                profile: PropertyProfile { qed, lrf: 4, sas: 2.0, vna: -8.0, nvt: 0.9 },
            })
            .collect()
    }

    #[test]
    fn five_diverse_hq_satisfy() {
        let v = evaluator_gate(&set(5, 0.6), &Requirements::new(thresholds()));
        assert!(v.satisfied, "{:?}", v.failing_reasons);
        assert_eq!(v.hq_count, 5);
    }

    #[test]
    fn four_is_too_few() {
        let v = evaluator_gate(&set(4, 0.6), &Requirements::new(thresholds()));
        assert!(!v.satisfied);
        assert_eq!(v.failing_reasons, vec!["count 4 < 5".to_string()]);
    }

    #[test]
    fn property_failures_are_counted() {
        let v = evaluator_gate(&set(5, 0.4), &Requirements::new(thresholds()));
        assert_eq!(v.failing_reasons, vec!["5 of 5 below qed_min".to_string()]);
        assert_eq!(v.failures.worst_optimizable(), Some(Property::Qed));
    }

    #[test]
    fn empty_pool_lists_every_clause() {
        let v = evaluator_gate(&MoleculeSet::new(), &Requirements::new(thresholds()));
        assert!(!v.satisfied);
        assert_eq!(v.failing_reasons.len(), 7, "{:?}", v.failing_reasons);
    }
}
