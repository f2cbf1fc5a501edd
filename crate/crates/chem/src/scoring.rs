//! Candidate-level metrics: drug-likeness, rule-of-five count, novelty,
//! diversity, the high-quality predicate and per-target success.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::DescriptorSet;
use crate::fingerprint::{tanimoto, Fingerprint, FingerprintError};
use crate::graph::MolecularGraph;

/// Novelty floor shared by every target.
pub const NVT_MIN: f64 = 0.8;
/// Diversity floor of a successful set.
pub const DVS_MIN: f64 = 0.8;
/// Smallest successful set.
pub const MIN_COUNT: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("diversity undefined for fewer than two molecules (got {0})")]
    DiversityUndefined(usize),
    #[error("cannot derive thresholds from an empty drug set")]
    EmptyDrugSet,
    #[error("success rate undefined for zero targets")]
    NoTargets,
    #[error("duplicate molecule id {0}")]
    DuplicateId(MoleculeId),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
}

/// The five per-molecule properties judged against target thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyProfile {
    pub qed: f64,
    /// Lipinski rules satisfied, 0..=4.
    pub lrf: u8,
    pub sas: f64,
    /// Docking score in kcal/mol, lower is better.
    pub vna: f64,
    pub nvt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Property {
    Qed,
    Lrf,
    Sas,
    Vna,
    Nvt,
}

impl Property {
    pub const ALL: [Property; 5] = [Property::Qed, Property::Lrf, Property::Sas, Property::Vna, Property::Nvt];

    pub fn name(self) -> &'static str {
        match self {
            Property::Qed => "qed",
            Property::Lrf => "lrf",
            Property::Sas => "sas",
            Property::Vna => "vna",
            Property::Nvt => "nvt",
        }
    }

    pub fn value(self, p: &PropertyProfile) -> f64 {
        match self {
            Property::Qed => p.qed,
            Property::Lrf => p.lrf as f64,
            Property::Sas => p.sas,
            Property::Vna => p.vna,
            Property::Nvt => p.nvt,
        }
    }

    pub fn threshold(self, t: &TargetThresholds) -> f64 {
        match self {
            Property::Qed => t.qed_min,
            Property::Lrf => t.lrf_min,
            Property::Sas => t.sas_max,
            Property::Vna => t.vna_max,
            Property::Nvt => t.nvt_min,
        }
    }

    /// True when smaller values are better.
    pub fn lower_is_better(self) -> bool {
        matches!(self, Property::Sas | Property::Vna)
    }

    /// Non-strict comparison against the threshold.
    pub fn passes(self, p: &PropertyProfile, t: &TargetThresholds) -> bool {
        let (v, th) = (self.value(p), self.threshold(t));
        if self.lower_is_better() {
            v <= th
        } else {
            v >= th
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-target bar: means over the known drugs, plus the fixed novelty floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetThresholds {
    pub qed_min: f64,
    /// Mean rule count over the drugs (a count mean, not a pass rate).
    pub lrf_min: f64,
    pub sas_max: f64,
    pub vna_max: f64,
    pub nvt_min: f64,
}

/// Identifier of the form `MOL001`, assigned in creation order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MoleculeId(String);

impl MoleculeId {
    pub fn from_index(n: usize) -> MoleculeId {
        MoleculeId(format!("MOL{n:03}"))
    }

    /// Accepts `MOL` followed by at least three digits.
    pub fn parse(s: &str) -> Option<MoleculeId> {
        let digits = s.strip_prefix("MOL")?;
        (digits.len() >= 3 && digits.bytes().all(|b| b.is_ascii_digit())).then(|| MoleculeId(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MoleculeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub id: MoleculeId,
    pub graph: MolecularGraph,
    pub fingerprint: Fingerprint,
    pub profile: PropertyProfile,
}

/// Ordered molecules with unique ids.
#[derive(Debug, Clone, Default)]
pub struct MoleculeSet {
    items: Vec<Candidate>,
}

impl MoleculeSet {
    pub fn new() -> MoleculeSet {
        MoleculeSet::default()
    }

    pub fn push(&mut self, c: Candidate) -> Result<(), ScoringError> {
        if self.items.iter().any(|x| x.id == c.id) {
            return Err(ScoringError::DuplicateId(c.id));
        }
        self.items.push(c);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Candidate> {
        self.items.iter()
    }

    pub fn get(&self, id: &MoleculeId) -> Option<&Candidate> {
        self.items.iter().find(|c| &c.id == id)
    }

    pub fn fingerprints(&self) -> Vec<&Fingerprint> {
        self.items.iter().map(|c| &c.fingerprint).collect()
    }

    pub fn profiles(&self) -> Vec<PropertyProfile> {
        self.items.iter().map(|c| c.profile).collect()
    }
}

impl FromIterator<Candidate> for MoleculeSet {
    /// Later duplicates of an id are dropped.
    fn from_iter<I: IntoIterator<Item = Candidate>>(iter: I) -> Self {
        let mut set = MoleculeSet::new();
        for c in iter {
            let _ = set.push(c);
        }
        set
    }
}

impl<'a> IntoIterator for &'a MoleculeSet {
    type Item = &'a Candidate;
    type IntoIter = std::slice::Iter<'a, Candidate>;
    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

/// Number of satisfied rules among mw ≤ 500, logP ≤ 5, HBD ≤ 5, HBA ≤ 10.
pub fn lipinski(d: &DescriptorSet) -> u8 {
    [d.mw <= 500.0, d.logp <= 5.0, d.hbd <= 5, d.hba <= 10].iter().filter(|&&ok| ok).count() as u8
}

/// One minus the highest similarity to any reference; 1.0 with no references.
pub fn novelty(fp: &Fingerprint, refs: &[&Fingerprint]) -> Result<f64, FingerprintError> {
    let mut best: f64 = 0.0;
    for r in refs {
        best = best.max(tanimoto(fp, r)?);
    }
    Ok(1.0 - best)
}

/// One minus the mean similarity over all unordered pairs.
pub fn diversity(fps: &[&Fingerprint]) -> Result<f64, ScoringError> {
    let n = fps.len();
    if n < 2 {
        return Err(ScoringError::DiversityUndefined(n));
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += tanimoto(fps[i], fps[j])?;
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(1.0 - sum / pairs)
}

/// Arithmetic means of the drugs' profiles; the novelty floor is fixed.
pub fn target_thresholds(drugs: &[PropertyProfile]) -> Result<TargetThresholds, ScoringError> {
    if drugs.is_empty() {
        return Err(ScoringError::EmptyDrugSet);
    }
    let n = drugs.len() as f64;
    let mean = |f: fn(&PropertyProfile) -> f64| drugs.iter().map(f).sum::<f64>() / n;
    Ok(TargetThresholds {
        qed_min: mean(|p| p.qed),
        lrf_min: mean(|p| p.lrf as f64),
        sas_max: mean(|p| p.sas),
        vna_max: mean(|p| p.vna),
        nvt_min: NVT_MIN,
    })
}

pub fn is_high_quality(p: &PropertyProfile, t: &TargetThresholds) -> bool {
    Property::ALL.iter().all(|prop| prop.passes(p, t))
}

/// At least five molecules, all high quality, with diversity ≥ 0.8.
pub fn target_success(ms: &MoleculeSet, t: &TargetThresholds) -> bool {
    success_with(ms, t, MIN_COUNT, DVS_MIN)
}

pub fn success_with(ms: &MoleculeSet, t: &TargetThresholds, min_count: usize, dvs_min: f64) -> bool {
    if ms.len() < min_count.max(1) || !ms.iter().all(|c| is_high_quality(&c.profile, t)) {
        return false;
    }
    if ms.len() < 2 {
        return true;
    }
    diversity(&ms.fingerprints()).is_ok_and(|d| d >= dvs_min)
}

/// Percentage of successful targets.
pub fn tsr(results: &[bool]) -> Result<f64, ScoringError> {
    if results.is_empty() {
        return Err(ScoringError::NoTargets);
    }
    let wins = results.iter().filter(|&&r| r).count();
    Ok(100.0 * wins as f64 / results.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(qed: f64, lrf: u8, sas: f64, vna: f64, nvt: f64) -> PropertyProfile {
        PropertyProfile { qed, lrf, sas, vna, nvt }
    }

    fn fp(bits: &[usize]) -> Fingerprint {
        Fingerprint::from_bits(64, 2, bits.iter().copied()).unwrap()
    }

    #[test]
    fn thresholds_are_means() {
        let t = target_thresholds(&[profile(0.4, 4, 3.0, -8.0, 0.2), profile(0.6, 3, 2.0, -6.0, 0.9)]).unwrap();
        assert!((t.qed_min - 0.5).abs() < 1e-12);
        assert!((t.vna_max + 7.0).abs() < 1e-12);
        assert!((t.lrf_min - 3.5).abs() < 1e-12);
        assert_eq!(t.nvt_min, 0.8);
        assert_eq!(target_thresholds(&[]), Err(ScoringError::EmptyDrugSet));
    }

    #[test]
    fn boundary_profile_is_high_quality() {
        let t = TargetThresholds { qed_min: 0.5, lrf_min: 4.0, sas_max: 3.0, vna_max: -7.0, nvt_min: 0.8 };
        assert!(is_high_quality(&profile(0.5, 4, 3.0, -7.0, 0.8), &t));
        assert!(!is_high_quality(&profile(0.5, 4, 3.0, -7.0, 0.79), &t));
        assert!(!is_high_quality(&profile(0.5, 4, 3.01, -7.0, 0.8), &t));
    }

    #[test]
    fn novelty_and_diversity_edges() {
        let a = fp(&[1, 2]);
        let b = fp(&[3, 4]);
        assert_eq!(novelty(&a, &[]).unwrap(), 1.0);
        assert_eq!(novelty(&a, &[&b, &a]).unwrap(), 0.0);
        assert_eq!(diversity(&[&a, &b]).unwrap(), 1.0);
        assert_eq!(diversity(&[&a; 5]).unwrap(), 0.0);
        assert_eq!(diversity(&[&a]), Err(ScoringError::DiversityUndefined(1)));
    }

    #[test]
    fn success_rate_arithmetic() {
        let mut r = vec![true; 22];
        r.extend([false; 8]);
        assert!((tsr(&r).unwrap() - 73.3).abs() < 0.05);
        assert_eq!(tsr(&[false, false]).unwrap(), 0.0);
        assert_eq!(tsr(&[]), Err(ScoringError::NoTargets));
    }

    #[test]
    fn molecule_ids() {
        assert_eq!(MoleculeId::from_index(7).as_str(), "MOL007");
        assert_eq!(MoleculeId::from_index(1234).as_str(), "MOL1234");
        assert!(MoleculeId::parse("MOL012").is_some());
        assert!(MoleculeId::parse("MOL12").is_none());
        assert!(MoleculeId::parse("POCKET001").is_none());
    }
}
