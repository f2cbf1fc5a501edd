//! The plan/act/evaluate loop.
//!
//! Each step asks the policy for one action, executes it, scores any new
//! molecules, then runs the rule-based gate on the candidate pool (the latest
//! SCREEN output, or the whole inventory before any screen). The LLM policy
//! falls back to the deterministic one for a step after two failed retries.

use std::collections::BTreeMap;
use std::time::Instant;

use molpilot_chem::descriptors::DescriptorTables;
use molpilot_chem::sascore::FragmentScoreTable;
use molpilot_chem::scoring::{MoleculeId, Property, PropertyProfile, TargetThresholds};
use molpilot_chem::{canonical_key, default_fingerprint, MolecularGraph};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::action::{objective_properties, parse_action, parse_answer, ActionRequest};
use crate::adapter::AdapterConfig;
use crate::docking::Docker;
use crate::evaluate::Evaluator;
use crate::generator::{generate_builtin, generate_external, FragmentLibrary, GenerationRequest, DEFAULT_COUNT};
use crate::llm::{LlmClient, Message};
use crate::memory::{
    evaluator_gate, ActionKind, ActionRecord, ActionSource, EvaluationRecord, FailureCounts, LlmVerdict, Memory, MemoryMolecule,
    Requirements,
};
use crate::optimizer::{fitness, ga_optimize, GAConfig, GenerationStats, Objective};
use crate::prompt::{build_evaluator_prompt, build_reasoner_prompt, retry_note, DEFAULT_TOP_K};
use crate::runlog::{EventPayload, MoleculeRecord, Outcome, RunHeader, RunLog, SCHEMA_VERSION};
use crate::screener::{execute_plan, parse_plan, MoleculeTable, Row};
use crate::target::TargetSpec;

/// Hard cap on actions per run.
pub const MAX_BUDGET: usize = 10;
/// Reprompts allowed after an unusable reply.
pub const MAX_RETRIES: usize = 2;
/// Similarity threshold of the fallback policy's clustering stage.
pub const FALLBACK_CLUSTER_T: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorBackend {
    #[default]
    Builtin,
    External(AdapterConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub budget: usize,
    pub docker: Docker,
    pub generator: GeneratorBackend,
    pub generate_count: usize,
    /// The GA seed is replaced per action.
    pub ga: GAConfig,
    /// Molecules shown in a reasoner prompt.
    pub top_k: usize,
    /// Molecules the fallback policy hands to OPTIMIZE.
    pub optimize_inputs: usize,
    pub min_count: usize,
    pub dvs_min: f64,
    /// Ask the LLM for an advisory verdict after each action.
    pub llm_gate: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            budget: MAX_BUDGET,
            docker: Docker::Surrogate,
            generator: GeneratorBackend::Builtin,
            generate_count: DEFAULT_COUNT,
            ga: GAConfig::default(),
            top_k: DEFAULT_TOP_K,
            optimize_inputs: DEFAULT_TOP_K,
            min_count: molpilot_chem::scoring::MIN_COUNT,
            dvs_min: molpilot_chem::scoring::DVS_MIN,
            llm_gate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("budget must be between 1 and {MAX_BUDGET}, got {0}")]
    BadBudget(usize),
    #[error("the run has already terminated")]
    Terminated,
    #[error("no budget left")]
    NoBudget,
    #[error("setup failed: {0}")]
    Setup(String),
}

#[derive(Debug, Clone)]
pub struct AgentState {
    pub memory: Memory,
    pub budget_remaining: usize,
    pub iteration: usize,
    pub terminated: bool,
    pub outcome: Option<Outcome>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: Outcome,
    pub final_pool: Vec<MoleculeId>,
    pub log: RunLog,
    pub memory: Option<Memory>,
    pub thresholds: Option<TargetThresholds>,
}

impl RunResult {
    pub fn final_molecules(&self) -> Vec<&MemoryMolecule> {
        match &self.memory {
            Some(m) => self.final_pool.iter().filter_map(|id| m.molecule(id)).collect(),
            None => Vec::new(),
        }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for one action, independent across actions and runs.
fn action_seed(run_seed: u64, index: usize) -> u64 {
    splitmix(run_seed ^ splitmix(index as u64))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn data_checksums(library_text: &str) -> BTreeMap<String, String> {
    let mut out: BTreeMap<String, String> =
        DescriptorTables::builtin().checksums().iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    out.insert("sa_fragments".into(), FragmentScoreTable::builtin().checksum().to_string());
    out.insert("generator_fragments".into(), sha256_hex(library_text.as_bytes()));
    out
}

/// The canonical screen: every threshold as a filter, one representative
/// per similarity cluster, then the smallest successful set size.
pub fn fallback_plan(req: &Requirements) -> String {
    let t = &req.thresholds;
    format!(
        "filter QED >= {} | filter Lipinski >= {} | filter SAScore <= {} | filter VinaScore <= {} | filter Novelty >= {} | cluster {} best VinaScore asc | top {}",
        t.qed_min, t.lrf_min, t.sas_max, t.vna_max, t.nvt_min, FALLBACK_CLUSTER_T, req.min_count
    )
}

/// Property the fallback OPTIMIZE targets: the one failing most often in the
/// last verdict, else across the inventory, else QED.
pub fn fallback_objective(mem: &Memory) -> Property {
    if let Some(p) = mem.evaluations().last().and_then(|e| e.verdict.failures.worst_optimizable()) {
        return p;
    }
    let profiles: Vec<PropertyProfile> = mem.molecules().map(|m| m.profile).collect();
    FailureCounts::of(&profiles, &mem.requirements.thresholds).worst_optimizable().unwrap_or(Property::Qed)
}

/// GENERATE once, then alternate OPTIMIZE and SCREEN. GENERATE again only
/// if memory holds no molecules.
pub fn fallback_request(mem: &Memory, optimize_inputs: usize) -> ActionRequest {
    if mem.molecule_count() == 0 {
        let pocket = mem.pockets.first().map(|p| p.to_string()).unwrap_or_else(|| "POCKET001".into());
        return ActionRequest { action: ActionKind::Generate, inputs: vec![pocket], desc: None };
    }
    let last = mem.history().last().map(|r| r.action);
    if last == Some(ActionKind::Optimize) {
        let inputs = mem.molecules().map(|m| m.id.to_string()).collect();
        return ActionRequest { action: ActionKind::Screen, inputs, desc: Some(fallback_plan(&mem.requirements)) };
    }
    let property = fallback_objective(mem);
    let objective = Objective::single(property).expect("optimizable property");
    let inputs = mem.ranked(|p| fitness(&objective, p)).into_iter().take(optimize_inputs.max(1)).map(|m| m.id.to_string()).collect();
    ActionRequest { action: ActionKind::Optimize, inputs, desc: Some(property.name().to_ascii_uppercase()) }
}

struct Executed {
    new_molecules: Vec<MoleculeId>,
    batch: Vec<MoleculeRecord>,
    screened: Option<Vec<MoleculeId>>,
    warnings: Vec<String>,
    ga_trace: Option<Vec<GenerationStats>>,
    desc: Option<String>,
}

pub struct Agent<'c> {
    cfg: RunConfig,
    target: TargetSpec,
    evaluator: Evaluator,
    library: FragmentLibrary,
    pub state: AgentState,
    pub log: RunLog,
    client: Option<&'c mut dyn LlmClient>,
    started: Instant,
}

impl<'c> Agent<'c> {
    /// Scores the known drugs, derives thresholds and opens the log. With a
    /// client the LLM policy is used, otherwise the fallback policy.
    // The log travels with the error so failed setups are still recorded.
    #[allow(clippy::result_large_err)]
    pub fn new(target: TargetSpec, cfg: RunConfig, client: Option<&'c mut dyn LlmClient>) -> Result<Agent<'c>, (AgentError, RunLog)> {
        let library = FragmentLibrary::builtin();
        let policy = if client.is_some() { "llm" } else { "fallback" };
        let config_json = serde_json::json!({ "target": target.summary(), "run": cfg, "policy": policy });
        let config_checksum = sha256_hex(config_json.to_string().as_bytes());
        let header = RunHeader {
            schema_version: SCHEMA_VERSION,
            run_id: sha256_hex(format!("{config_checksum}:{}", cfg.seed).as_bytes())[..16].to_string(),
            target: target.name.clone(),
            seed: cfg.seed,
            policy: policy.into(),
            config_checksum,
            data_checksums: data_checksums(include_str!("../data/fragments.smi")),
        };
        let mut log = RunLog::new(header);
        let started = Instant::now();
        let fail = |mut log: RunLog, e: AgentError| {
            log.push(
                0,
                EventPayload::Outcome { outcome: Outcome::Error, actions_taken: 0, final_pool: vec![], error: Some(e.to_string()) },
            );
            (e, log)
        };
        if cfg.budget == 0 || cfg.budget > MAX_BUDGET {
            return Err(fail(log, AgentError::BadBudget(cfg.budget)));
        }
        let evaluator = Evaluator::new(target.pocket.clone(), target.drug_fingerprints(), cfg.docker.clone());
        let (drug_profiles, thresholds) = match target.thresholds(&evaluator) {
            Ok(x) => x,
            Err(e) => return Err(fail(log, AgentError::Setup(e.to_string()))),
        };
        let requirements = Requirements { min_count: cfg.min_count, thresholds, dvs_min: cfg.dvs_min };
        log.push(
            0,
            EventPayload::RunStarted { target: target.name.clone(), budget: cfg.budget, requirements: Some(requirements), drug_profiles },
        );
        let memory = Memory::new(target.name.clone(), vec![target.pocket.id.clone()], requirements);
        let state = AgentState { memory, budget_remaining: cfg.budget, iteration: 0, terminated: false, outcome: None };
        Ok(Agent { cfg, target, evaluator, library, state, log, client, started })
    }

    fn now(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }

    fn emit(&mut self, payload: EventPayload) {
        let t = self.now();
        self.log.push(t, payload);
    }

    fn llm_request(&mut self, index: usize) -> Option<ActionRequest> {
        let prompt = build_reasoner_prompt(&self.state.memory, self.state.budget_remaining, self.cfg.top_k);
        let mut note = String::new();
        for attempt in 0..=MAX_RETRIES {
            let client = self.client.as_mut()?;
            let text = format!("{prompt}{note}");
            let reply = client.complete(&[Message::user(text)]);
            let (reply, error, parsed) = match reply {
                Ok(r) => match parse_action(&r, &self.state.memory) {
                    Ok(req) => (Some(r), None, Some(req)),
                    Err(e) => {
                        note = retry_note(&e.to_string());
                        (Some(r), Some(e.to_string()), None)
                    }
                },
                Err(e) => (None, Some(e.to_string()), None),
            };
            self.emit(EventPayload::LlmExchange { action_index: index, role: "reasoner".into(), attempt, reply, error });
            if parsed.is_some() {
                return parsed;
            }
        }
        None
    }

    fn llm_verdict(&mut self, index: usize, pool: &[MoleculeId]) -> Option<LlmVerdict> {
        self.client.as_ref()?;
        let prompt = {
            let mols: Vec<&MemoryMolecule> = pool.iter().filter_map(|id| self.state.memory.molecule(id)).collect();
            build_evaluator_prompt(&mols, &self.state.memory.requirements)
        };
        for attempt in 0..=MAX_RETRIES {
            let client = self.client.as_mut()?;
            let reply = client.complete(&[Message::user(prompt.clone())]);
            let (text, parsed, error) = match reply {
                Ok(r) => {
                    let p = parse_answer(&r);
                    let err = p.is_none().then(|| "no YES/NO answer".to_string());
                    (Some(r), p, err)
                }
                Err(e) => (None, None, Some(e.to_string())),
            };
            self.emit(EventPayload::LlmExchange { action_index: index, role: "evaluator".into(), attempt, reply: text, error });
            if let Some((answer, reason)) = parsed {
                return Some(LlmVerdict { answer: Some(answer), reason });
            }
        }
        Some(LlmVerdict { answer: None, reason: "abstained".into() })
    }

    fn score_new(
        &self,
        graphs: Vec<MolecularGraph>,
        index: usize,
        warnings: &mut Vec<String>,
        known: &BTreeMap<String, PropertyProfile>,
    ) -> Vec<(String, MolecularGraph, PropertyProfile)> {
        let mut out = Vec::new();
        for g in graphs {
            let smiles = canonical_key(&g);
            if self.state.memory.contains_smiles(&smiles) {
                continue;
            }
            let profile = match known.get(&smiles) {
                Some(p) => *p,
                None => match self.evaluator.profile(&g) {
                    Ok(p) => p,
                    Err(e) => {
                        warnings.push(format!("action {index}: could not score {smiles}: {e}"));
                        continue;
                    }
                },
            };
            out.push((smiles, g, profile));
        }
        out
    }

    fn store(&mut self, scored: Vec<(String, MolecularGraph, PropertyProfile)>, index: usize) -> (Vec<MoleculeId>, Vec<MoleculeRecord>) {
        let mut ids = Vec::new();
        let mut batch = Vec::new();
        for (smiles, g, profile) in scored {
            let fp = default_fingerprint(&g);
            let (id, fresh) = self.state.memory.insert(smiles.clone(), g, fp, profile, index);
            if fresh {
                batch.push(MoleculeRecord { id: id.clone(), smiles, profile, provenance: index });
                ids.push(id);
            }
        }
        (ids, batch)
    }

    fn execute(&mut self, req: &ActionRequest, index: usize) -> Result<Executed, String> {
        let seed = action_seed(self.cfg.seed, index);
        let mut warnings = Vec::new();
        match req.action {
            ActionKind::Generate => {
                let mut greq = GenerationRequest::new(self.target.pocket.clone(), seed);
                greq.count = self.cfg.generate_count;
                greq.seed_ligand = self.target.reference_ligand.clone();
                let batch = match &self.cfg.generator {
                    GeneratorBackend::Builtin => generate_builtin(&greq, &self.library),
                    GeneratorBackend::External(cfg) => generate_external(&greq, cfg),
                }
                .map_err(|e| e.to_string())?;
                warnings.extend(batch.warnings);
                let scored = self.score_new(batch.molecules, index, &mut warnings, &BTreeMap::new());
                if scored.is_empty() {
                    return Err("no new molecules could be scored".into());
                }
                let (new_molecules, batch) = self.store(scored, index);
                Ok(Executed { new_molecules, batch, screened: None, warnings, ga_trace: None, desc: req.desc.clone() })
            }
            ActionKind::Optimize => {
                let named = req.desc.as_deref().map(objective_properties).unwrap_or_default();
                let objective = if named.is_empty() {
                    Objective::single(fallback_objective(&self.state.memory)).expect("optimizable")
                } else {
                    let has = |p| if named.contains(&p) { 1.0 } else { 0.0 };
                    Objective::weighted(has(Property::Qed), has(Property::Sas), has(Property::Vna)).map_err(|e| e.to_string())?
                };
                let initial: Vec<MolecularGraph> = req
                    .inputs
                    .iter()
                    .filter_map(|id| MoleculeId::parse(id).and_then(|m| self.state.memory.molecule(&m)).map(|m| m.graph.clone()))
                    .collect();
                let ga = GAConfig { rng_seed: seed, ..self.cfg.ga };
                let result =
                    ga_optimize(&initial, &objective, &ga, &self.evaluator, self.library.fragments()).map_err(|e| e.to_string())?;
                // Surrogate profiles from the GA are exact; external ones may
                // carry inherited VNA values and are rescored.
                let known: BTreeMap<String, PropertyProfile> = if self.evaluator.docking_is_expensive() {
                    BTreeMap::new()
                } else {
                    result.population.iter().map(|i| (i.key.clone(), i.profile)).collect()
                };
                let graphs = result.population.iter().map(|i| i.graph.clone()).collect();
                let scored = self.score_new(graphs, index, &mut warnings, &known);
                let (new_molecules, batch) = self.store(scored, index);
                Ok(Executed {
                    new_molecules,
                    batch,
                    screened: None,
                    warnings,
                    ga_trace: Some(result.trace),
                    desc: Some(objective.to_string()),
                })
            }
            ActionKind::Screen => {
                let text = req.desc.as_deref().ok_or("SCREEN needs a plan")?;
                let plan = parse_plan(text).map_err(|e| e.to_string())?;
                let rows = req
                    .inputs
                    .iter()
                    .filter_map(|id| MoleculeId::parse(id).and_then(|m| self.state.memory.molecule(&m)))
                    .map(|m| Row { id: m.id.clone(), smiles: m.smiles.clone(), profile: m.profile, fingerprint: m.fingerprint.clone() })
                    .collect();
                let out = execute_plan(&plan, &MoleculeTable { rows });
                Ok(Executed {
                    new_molecules: vec![],
                    batch: vec![],
                    screened: Some(out.ids()),
                    warnings,
                    ga_trace: None,
                    desc: Some(plan.to_string()),
                })
            }
        }
    }

    /// One action: choose, execute, record, gate.
    pub fn step(&mut self) -> Result<(), AgentError> {
        if self.state.terminated {
            return Err(AgentError::Terminated);
        }
        if self.state.budget_remaining == 0 {
            return Err(AgentError::NoBudget);
        }
        let index = self.state.memory.history().len() + 1;
        let (req, source) = match self.client.is_some().then(|| self.llm_request(index)).flatten() {
            Some(r) => (r, ActionSource::Llm),
            None => (fallback_request(&self.state.memory, self.cfg.optimize_inputs), ActionSource::Fallback),
        };
        let result = self.execute(&req, index);
        let record = match result {
            Ok(x) => {
                if !x.batch.is_empty() {
                    self.emit(EventPayload::Molecules { action_index: index, molecules: x.batch });
                }
                ActionRecord {
                    index,
                    action: req.action,
                    inputs: req.inputs,
                    desc: x.desc,
                    source,
                    ok: true,
                    error: None,
                    new_molecules: x.new_molecules,
                    screened: x.screened,
                    warnings: x.warnings,
                    ga_trace: x.ga_trace,
                }
            }
            Err(e) => ActionRecord {
                index,
                action: req.action,
                inputs: req.inputs,
                desc: req.desc,
                source,
                ok: false,
                error: Some(e),
                new_molecules: vec![],
                screened: None,
                warnings: vec![],
                ga_trace: None,
            },
        };
        self.emit(EventPayload::Action(record.clone()));
        self.state.memory.commit_action(record);
        self.state.budget_remaining -= 1;
        self.state.iteration += 1;

        let pool = self.state.memory.candidate_pool();
        let verdict = evaluator_gate(&self.state.memory.set_of(&pool), &self.state.memory.requirements);
        let llm = if self.cfg.llm_gate { self.llm_verdict(index, &pool) } else { None };
        let satisfied = verdict.satisfied;
        let record = EvaluationRecord { action_index: index, pool, verdict, llm };
        self.emit(EventPayload::Evaluation(record.clone()));
        self.state.memory.commit_evaluation(record);

        if satisfied {
            self.finish(Outcome::Success, None);
        } else if self.state.budget_remaining == 0 {
            self.finish(Outcome::BudgetExhausted, None);
        }
        Ok(())
    }

    fn finish(&mut self, outcome: Outcome, error: Option<String>) {
        self.state.terminated = true;
        self.state.outcome = Some(outcome);
        let final_pool = self.state.memory.candidate_pool();
        let actions_taken = self.state.memory.history().len();
        self.emit(EventPayload::Outcome { outcome, actions_taken, final_pool, error });
    }

    pub fn run_to_end(mut self) -> RunResult {
        while !self.state.terminated {
            if let Err(e) = self.step() {
                self.finish(Outcome::Error, Some(e.to_string()));
            }
        }
        let outcome = self.state.outcome.expect("terminated runs have an outcome");
        RunResult {
            outcome,
            final_pool: self.state.memory.candidate_pool(),
            thresholds: Some(self.state.memory.requirements.thresholds),
            memory: Some(self.state.memory),
            log: self.log,
        }
    }
}

/// Runs one target to completion. Setup failures produce an error outcome
/// with the partial log.
pub fn run(target: TargetSpec, cfg: RunConfig, client: Option<&mut dyn LlmClient>) -> RunResult {
    match Agent::new(target, cfg, client) {
        Ok(agent) => agent.run_to_end(),
        Err((_, log)) => RunResult { outcome: Outcome::Error, final_pool: vec![], log, memory: None, thresholds: None },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_per_action() {
        assert_ne!(action_seed(1, 1), action_seed(1, 2));
        assert_ne!(action_seed(1, 1), action_seed(2, 1));
        assert_eq!(action_seed(7, 3), action_seed(7, 3));
    }

    #[test]
    fn fallback_plan_parses() {
        let t = TargetThresholds { qed_min: 0.512345, lrf_min: 3.5, sas_max: 2.75, vna_max: -7.25, nvt_min: 0.8 };
        let plan = parse_plan(&fallback_plan(&Requirements::new(t))).unwrap();
        assert_eq!(plan.stages.len(), 7);
    }
}
