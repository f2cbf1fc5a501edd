//! Target configuration: pocket file, reference ligand, known drugs and
//! optional threshold overrides, read from a JSON file.

use std::fmt;
use std::path::{Path, PathBuf};

use molpilot_chem::scoring::{target_thresholds, PropertyProfile, TargetThresholds, NVT_MIN};
use molpilot_chem::{default_fingerprint, parse_smiles, write_smiles, Fingerprint, MolecularGraph};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::evaluate::{EvalError, Evaluator};
use crate::pocket::{load_pocket, PocketDescriptor};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOverrides {
    pub qed_min: Option<f64>,
    pub lrf_min: Option<f64>,
    pub sas_max: Option<f64>,
    pub vna_max: Option<f64>,
}

impl ThresholdOverrides {
    pub fn complete(&self) -> bool {
        self.qed_min.is_some() && self.lrf_min.is_some() && self.sas_max.is_some() && self.vna_max.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct TargetSpec {
    pub name: String,
    pub pocket: PocketDescriptor,
    pub reference_ligand: Option<MolecularGraph>,
    /// Canonical SMILES and graph of each known drug, in file order.
    pub known_drugs: Vec<(String, MolecularGraph)>,
    pub overrides: ThresholdOverrides,
}

impl TargetSpec {
    pub fn drug_fingerprints(&self) -> Vec<Fingerprint> {
        self.known_drugs.iter().map(|(_, g)| default_fingerprint(g)).collect()
    }

    /// Drug profiles under `evaluator` and the thresholds they imply, with
    /// overrides applied on top.
    pub fn thresholds(&self, evaluator: &Evaluator) -> Result<(Vec<PropertyProfile>, TargetThresholds), TargetError> {
        let mut profiles = Vec::with_capacity(self.known_drugs.len());
        for (smiles, g) in &self.known_drugs {
            let p = evaluator.profile(g).map_err(|source| TargetError::DrugScoring { smiles: smiles.clone(), source })?;
            profiles.push(p);
        }
        let mut t = match target_thresholds(&profiles) {
            Ok(t) => t,
            Err(_) if self.overrides.complete() => {
                TargetThresholds { qed_min: 0.0, lrf_min: 0.0, sas_max: 10.0, vna_max: 0.0, nvt_min: NVT_MIN }
            }
            Err(_) => return Err(TargetError::NoDrugs),
        };
        let o = &self.overrides;
        t.qed_min = o.qed_min.unwrap_or(t.qed_min);
        t.lrf_min = o.lrf_min.unwrap_or(t.lrf_min);
        t.sas_max = o.sas_max.unwrap_or(t.sas_max);
        t.vna_max = o.vna_max.unwrap_or(t.vna_max);
        Ok((profiles, t))
    }

    /// Stable JSON summary used for config checksums.
    pub fn summary(&self) -> Value {
        serde_json::json!({
            "name": self.name,
            "pocket": self.pocket,
            "reference_ligand": self.reference_ligand.as_ref().map(write_smiles),
            "known_drugs": self.known_drugs.iter().map(|(s, _)| s).collect::<Vec<_>>(),
            "overrides": self.overrides,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TargetError {
    #[error("no known drugs and no complete threshold overrides")]
    NoDrugs,
    #[error("scoring known drug {smiles}: {source}")]
    DrugScoring { smiles: String, source: EvalError },
}

/// Every problem found in one config file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: PathBuf,
    pub issues: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} problem(s)", self.path.display(), self.issues.len())?;
        for i in &self.issues {
            write!(f, "\n  - {i}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

fn get_str<'a>(obj: &'a serde_json::Map<String, Value>, key: &str, issues: &mut Vec<String>, required: bool) -> Option<&'a str> {
    match obj.get(key) {
        Some(Value::String(s)) => Some(s),
        Some(Value::Null) | None => {
            if required {
                issues.push(format!("missing field {key:?}"));
            }
            None
        }
        Some(_) => {
            issues.push(format!("field {key:?} must be a string"));
            None
        }
    }
}

/// Reads and validates a target config. Relative pocket paths resolve
/// against the config file's directory.
pub fn load_target_config(path: &Path) -> Result<TargetSpec, ConfigError> {
    let fail = |issues: Vec<String>| ConfigError { path: path.to_path_buf(), issues };
    let text = std::fs::read_to_string(path).map_err(|e| fail(vec![format!("cannot read config: {e}")]))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_target_config(&text, base).map_err(fail)
}

pub fn parse_target_config(text: &str, base: &Path) -> Result<TargetSpec, Vec<String>> {
    let root: Value = serde_json::from_str(text).map_err(|e| vec![format!("invalid JSON: {e}")])?;
    let Value::Object(obj) = root else {
        return Err(vec!["config must be a JSON object".into()]);
    };
    let mut issues = Vec::new();

    let name = get_str(&obj, "name", &mut issues, true).unwrap_or_default().to_string();

    let pocket = get_str(&obj, "pocket_file", &mut issues, true).and_then(|p| {
        let full = base.join(p);
        load_pocket(&full).map_err(|e| issues.push(format!("pocket_file: {e}"))).ok()
    });

    let reference_ligand = get_str(&obj, "reference_ligand", &mut issues, false)
        .and_then(|s| parse_smiles(s).map_err(|e| issues.push(format!("reference_ligand: {e}"))).ok());

    let mut known_drugs = Vec::new();
    match obj.get("known_drugs") {
        None | Some(Value::Null) => {}
        Some(Value::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                match item.as_str().map(parse_smiles) {
                    Some(Ok(g)) => known_drugs.push((write_smiles(&g), g)),
                    Some(Err(e)) => issues.push(format!("known_drugs[{i}]: {e}")),
                    None => issues.push(format!("known_drugs[{i}]: must be a SMILES string")),
                }
            }
        }
        Some(_) => issues.push("field \"known_drugs\" must be an array of SMILES strings".into()),
    }

    let overrides = match obj.get("thresholds") {
        None | Some(Value::Null) => ThresholdOverrides::default(),
        Some(v) => match serde_json::from_value::<ThresholdOverrides>(v.clone()) {
            Ok(o) => o,
            Err(e) => {
                issues.push(format!("thresholds: {e}"));
                ThresholdOverrides::default()
            }
        },
    };
    if known_drugs.is_empty() && !overrides.complete() && !issues.iter().any(|i| i.starts_with("known_drugs")) {
        issues.push("need at least one known drug unless thresholds sets qed_min, lrf_min, sas_max and vna_max".into());
    }

    match (issues.is_empty(), pocket) {
        (true, Some(pocket)) => Ok(TargetSpec { name, pocket, reference_ligand, known_drugs, overrides }),
        _ => Err(issues),
    }
}
