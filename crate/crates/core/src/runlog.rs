//! Append-only run logs stored as newline-delimited JSON, plus the analyses
//! built on them: replay and action transition matrices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use molpilot_chem::scoring::{MoleculeId, PropertyProfile};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{ActionKind, ActionRecord, EvaluationRecord, Requirements};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    BudgetExhausted,
    Error,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Success => "success",
            Outcome::BudgetExhausted => "budget_exhausted",
            Outcome::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub schema_version: u32,
    pub run_id: String,
    pub target: String,
    pub seed: u64,
    pub policy: String,
    pub config_checksum: String,
    pub data_checksums: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeRecord {
    pub id: MoleculeId,
    pub smiles: String,
    pub profile: PropertyProfile,
    /// Index of the action that produced the molecule.
    pub provenance: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventPayload {
    RunStarted { target: String, budget: usize, requirements: Option<Requirements>, drug_profiles: Vec<PropertyProfile> },
    Molecules { action_index: usize, molecules: Vec<MoleculeRecord> },
    Action(ActionRecord),
    Evaluation(EvaluationRecord),
    LlmExchange { action_index: usize, role: String, attempt: usize, reply: Option<String>, error: Option<String> },
    Outcome { outcome: Outcome, actions_taken: usize, final_pool: Vec<MoleculeId>, error: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: usize,
    /// Milliseconds since the run started.
    pub t_ms: u64,
    pub payload: EventPayload,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogError {
    #[error("empty log")]
    Empty,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("{0}")]
    Io(String),
    #[error("no logs given")]
    NoLogs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub header: RunHeader,
    pub events: Vec<Event>,
}

impl RunLog {
    pub fn new(header: RunHeader) -> RunLog {
        RunLog { header, events: Vec::new() }
    }

    /// Appends an event; timestamps never go backwards.
    pub fn push(&mut self, t_ms: u64, payload: EventPayload) {
        let t_ms = self.events.last().map_or(t_ms, |e| e.t_ms.max(t_ms));
        self.events.push(Event { seq: self.events.len(), t_ms, payload });
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<RunLog, LogError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(LogError::Empty)?;
        let header: RunHeader = serde_json::from_str(first).map_err(|e| LogError::Malformed { line: 1, message: e.to_string() })?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(LogError::Schema(header.schema_version));
        }
        let mut events = Vec::new();
        for (i, line) in lines {
            let e: Event = serde_json::from_str(line).map_err(|e| LogError::Malformed { line: i + 1, message: e.to_string() })?;
            events.push(e);
        }
        Ok(RunLog { header, events })
    }

    pub fn write(&self, path: &Path) -> Result<(), LogError> {
        std::fs::write(path, self.to_ndjson()).map_err(|e| LogError::Io(format!("{}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<RunLog, LogError> {
        let text = std::fs::read_to_string(path).map_err(|e| LogError::Io(format!("{}: {e}", path.display())))?;
        RunLog::from_ndjson(&text)
    }

    /// Serialized payloads without sequence numbers or timestamps, for
    /// comparing runs.
    pub fn payload_lines(&self) -> Vec<String> {
        self.events.iter().map(|e| serde_json::to_string(&e.payload).expect("payload serializes")).collect()
    }

    pub fn actions(&self) -> impl Iterator<Item = &ActionRecord> {
        self.events.iter().filter_map(|e| match &e.payload {
            EventPayload::Action(a) => Some(a),
            _ => None,
        })
    }

    pub fn evaluations(&self) -> impl Iterator<Item = &EvaluationRecord> {
        self.events.iter().filter_map(|e| match &e.payload {
            EventPayload::Evaluation(r) => Some(r),
            _ => None,
        })
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.events.iter().rev().find_map(|e| match &e.payload {
            EventPayload::Outcome { outcome, .. } => Some(*outcome),
            _ => None,
        })
    }

    pub fn requirements(&self) -> Option<Requirements> {
        self.events.iter().find_map(|e| match &e.payload {
            EventPayload::RunStarted { requirements, .. } => *requirements,
            _ => None,
        })
    }

    pub fn recorded_final_pool(&self) -> Option<&[MoleculeId]> {
        self.events.iter().rev().find_map(|e| match &e.payload {
            EventPayload::Outcome { final_pool, .. } => Some(final_pool.as_slice()),
            _ => None,
        })
    }
}

/// State rebuilt from the molecule and action records alone.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub molecules: BTreeMap<MoleculeId, MoleculeRecord>,
    pub pool: Vec<MoleculeId>,
    pub actions: usize,
}

impl Replay {
    pub fn pool_records(&self) -> Vec<&MoleculeRecord> {
        self.pool.iter().filter_map(|id| self.molecules.get(id)).collect()
    }
}

pub fn replay(log: &RunLog) -> Replay {
    let mut molecules = BTreeMap::new();
    let mut screened: Option<Vec<MoleculeId>> = None;
    let mut actions = 0;
    for e in &log.events {
        match &e.payload {
            EventPayload::Molecules { molecules: batch, .. } => {
                for m in batch {
                    molecules.insert(m.id.clone(), m.clone());
                }
            }
            EventPayload::Action(a) => {
                actions += 1;
                if let Some(s) = &a.screened {
                    screened = Some(s.clone());
                }
            }
            _ => {}
        }
    }
    let pool = screened.unwrap_or_else(|| molecules.keys().cloned().collect());
    Replay { molecules, pool, actions }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum State {
    Start,
    Generate,
    Optimize,
    Screen,
    Success,
    Fail,
}

impl State {
    pub const ALL: [State; 6] = [State::Start, State::Generate, State::Optimize, State::Screen, State::Success, State::Fail];

    fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            State::Start => "Start",
            State::Generate => "Generate",
            State::Optimize => "Optimize",
            State::Screen => "Screen",
            State::Success => "Success",
            State::Fail => "Fail",
        }
    }
}

impl From<ActionKind> for State {
    fn from(a: ActionKind) -> State {
        match a {
            ActionKind::Generate => State::Generate,
            ActionKind::Optimize => State::Optimize,
            ActionKind::Screen => State::Screen,
        }
    }
}

/// Start, each action in order, then Success or Fail.
pub fn state_path(log: &RunLog) -> Vec<State> {
    let mut path = vec![State::Start];
    path.extend(log.actions().map(|a| State::from(a.action)));
    path.push(if log.outcome() == Some(Outcome::Success) { State::Success } else { State::Fail });
    path
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub counts: [[usize; 6]; 6],
    pub probabilities: [[f64; 6]; 6],
    /// Rows with no outgoing transitions, left all zero.
    pub empty_rows: BTreeSet<State>,
}

impl TransitionMatrix {
    pub fn p(&self, from: State, to: State) -> f64 {
        self.probabilities[from.index()][to.index()]
    }

    pub fn count(&self, from: State, to: State) -> usize {
        self.counts[from.index()][to.index()]
    }
}

impl fmt::Display for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<10}", "from\\to")?;
        for s in State::ALL {
            write!(f, "{:>10}", s.name())?;
        }
        writeln!(f)?;
        for from in State::ALL {
            write!(f, "{:<10}", from.name())?;
            for to in State::ALL {
                write!(f, "{:>10.3}", self.p(from, to))?;
            }
            if self.empty_rows.contains(&from) {
                write!(f, "  (no transitions)")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Row-normalized counts of consecutive states over all logs.
pub fn transition_matrix(logs: &[RunLog]) -> Result<TransitionMatrix, LogError> {
    if logs.is_empty() {
        return Err(LogError::NoLogs);
    }
    let mut counts = [[0usize; 6]; 6];
    for log in logs {
        let path = state_path(log);
        for w in path.windows(2) {
            counts[w[0].index()][w[1].index()] += 1;
        }
    }
    let mut probabilities = [[0.0; 6]; 6];
    let mut empty_rows = BTreeSet::new();
    for (i, row) in counts.iter().enumerate() {
        let total: usize = row.iter().sum();
        if total == 0 {
            empty_rows.insert(State::ALL[i]);
            continue;
        }
        for (j, &c) in row.iter().enumerate() {
            probabilities[i][j] = c as f64 / total as f64;
        }
    }
    Ok(TransitionMatrix { counts, probabilities, empty_rows })
}
