//! Parsing the reasoner's reply into an action request.
//!
//! Replies follow the answer format set out in the prompt:
//!
//! ```text
//! Action: [name of action]
//! Input: ['MOL001', 'MOL002'] or ['POCKET001']
//! Desc: ...
//! ```
//!
//! Markdown decoration and surrounding prose are ignored. The first block
//! that parses and refers only to known ids wins.

use std::fmt;

use molpilot_chem::scoring::{MoleculeId, Property};
use serde::{Deserialize, Serialize};

use crate::memory::{ActionKind, Memory};
use crate::screener::{parse_plan, PlanError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRequest {
    pub action: ActionKind,
    pub inputs: Vec<String>,
    pub desc: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionParseError {
    NoAction,
    UnknownAction(String),
    MissingInput(ActionKind),
    UnknownId(String),
    WrongInputKind { action: ActionKind, id: String },
    MissingDesc,
    BadPlan(PlanError),
}

impl fmt::Display for ActionParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionParseError::NoAction => f.write_str("no line starting with \"Action:\" was found"),
            ActionParseError::UnknownAction(a) => write!(f, "unknown action {a:?}; use GENERATE, OPTIMIZE or CODE"),
            ActionParseError::MissingInput(a) => write!(f, "{a} needs an \"Input:\" line with at least one identifier"),
            ActionParseError::UnknownId(id) => write!(f, "identifier {id:?} does not exist"),
            ActionParseError::WrongInputKind { action, id } => match action {
                ActionKind::Generate => write!(f, "GENERATE takes pocket identifiers, not {id:?}"),
                _ => write!(f, "{action} takes molecule identifiers, not {id:?}"),
            },
            ActionParseError::MissingDesc => f.write_str("CODE needs a \"Desc:\" line holding a screening plan"),
            ActionParseError::BadPlan(e) => write!(f, "the screening plan in \"Desc:\" is invalid ({e})"),
        }
    }
}

impl std::error::Error for ActionParseError {}

/// Strips list markers, emphasis and code ticks from the start of a line.
fn clean(line: &str) -> String {
    let mut s = line.trim();
    loop {
        let before = s;
        s = s.trim_start_matches(['-', '>', '#']).trim_start();
        s = s.trim_start_matches("**").trim_start_matches("__").trim_start_matches('`').trim_start();
        if let Some(rest) = s.strip_prefix("* ") {
            s = rest.trim_start();
        }
        if s == before {
            break;
        }
    }
    s.replace("**", "").replace("__", "").trim().to_string()
}

/// `key: value` with a case-insensitive key.
fn field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let (k, v) = line.split_once(':')?;
    k.trim().eq_ignore_ascii_case(key).then(|| v.trim())
}

fn unwrap_brackets(s: &str) -> &str {
    let s = s.trim().trim_matches('`').trim();
    match s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        Some(inner) => inner.trim(),
        None => s,
    }
}

fn action_kind(raw: &str) -> Result<ActionKind, ActionParseError> {
    let word: String = unwrap_brackets(raw)
        .trim_matches(['"', '\'', '`', '.'])
        .split(|c: char| c.is_whitespace() || c == ',')
        .next()
        .unwrap_or("")
        .trim_matches(['"', '\'', '`', '.'])
        .to_string();
    match word.to_ascii_uppercase().as_str() {
        "GENERATE" => Ok(ActionKind::Generate),
        "OPTIMIZE" | "OPTIMISE" => Ok(ActionKind::Optimize),
        "SCREEN" | "CODE" => Ok(ActionKind::Screen),
        _ => Err(ActionParseError::UnknownAction(word)),
    }
}

fn input_ids(raw: &str) -> Vec<String> {
    unwrap_brackets(raw)
        .split([',', ' ', '\t'])
        .map(|t| t.trim().trim_matches(['\'', '"', '`', '[', ']', '.']).trim())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

struct Block {
    action: String,
    input: Option<String>,
    desc: Option<String>,
}

fn blocks(reply: &str) -> Vec<Block> {
    let mut out: Vec<Block> = Vec::new();
    for line in reply.lines() {
        let line = clean(line);
        if let Some(v) = field(&line, "action") {
            out.push(Block { action: v.to_string(), input: None, desc: None });
        } else if let Some(b) = out.last_mut() {
            if let Some(v) = field(&line, "input") {
                b.input.get_or_insert_with(|| v.to_string());
            } else if let Some(v) = field(&line, "desc") {
                b.desc.get_or_insert_with(|| v.to_string());
            }
        }
    }
    out
}

fn check_block(b: &Block, mem: &Memory) -> Result<ActionRequest, ActionParseError> {
    let action = action_kind(&b.action)?;
    let inputs = b.input.as_deref().map(input_ids).unwrap_or_default();
    if inputs.is_empty() {
        return Err(ActionParseError::MissingInput(action));
    }
    for id in &inputs {
        let is_pocket = id.starts_with("POCKET");
        let known = if is_pocket { mem.has_pocket(id) } else { MoleculeId::parse(id).is_some_and(|m| mem.molecule(&m).is_some()) };
        if !known {
            return Err(ActionParseError::UnknownId(id.clone()));
        }
        if is_pocket != (action == ActionKind::Generate) {
            return Err(ActionParseError::WrongInputKind { action, id: id.clone() });
        }
    }
    let desc = b.desc.as_deref().map(|d| unwrap_brackets(d).to_string()).filter(|d| !d.is_empty());
    if action == ActionKind::Screen {
        let plan = desc.as_deref().ok_or(ActionParseError::MissingDesc)?;
        parse_plan(plan).map_err(ActionParseError::BadPlan)?;
    }
    Ok(ActionRequest { action, inputs, desc })
}

/// Parses a reply against the ids currently in memory.
pub fn parse_action(reply: &str, mem: &Memory) -> Result<ActionRequest, ActionParseError> {
    let mut first_error = None;
    for b in blocks(reply) {
        match check_block(&b, mem) {
            Ok(req) => return Ok(req),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    Err(first_error.unwrap_or(ActionParseError::NoAction))
}

/// Properties named in an OPTIMIZE description, in QED, SAS, VNA order.
pub fn objective_properties(desc: &str) -> Vec<Property> {
    let words: Vec<String> =
        desc.split(|c: char| !c.is_ascii_alphanumeric()).filter(|w| !w.is_empty()).map(|w| w.to_ascii_uppercase()).collect();
    let has = |names: &[&str]| words.iter().any(|w| names.contains(&w.as_str()));
    let mut out = Vec::new();
    if has(&["QED", "DRUGLIKENESS"]) {
        out.push(Property::Qed);
    }
    if has(&["SAS", "SASCORE", "SA", "SYNTHESIZABILITY"]) {
        out.push(Property::Sas);
    }
    if has(&["VNA", "VINA", "VINASCORE", "AFFINITY", "DOCKING"]) {
        out.push(Property::Vna);
    }
    out
}

/// Pulls the `Answer:` and `Reason:` lines out of an evaluator reply.
pub fn parse_answer(reply: &str) -> Option<(bool, String)> {
    let mut reason = String::new();
    let mut answer = None;
    for line in reply.lines() {
        let line = clean(line);
        if let Some(v) = field(&line, "reason") {
            if reason.is_empty() {
                reason = v.trim_matches(['(', ')']).to_string();
            }
        } else if let Some(v) = field(&line, "answer") {
            if answer.is_none() {
                let w = v.trim_matches(['(', ')', '[', ']', '.', '"', '\'', ' ', '`']).to_ascii_uppercase();
                answer = match w.split_whitespace().next() {
                    Some("YES") => Some(true),
                    Some("NO") => Some(false),
                    _ => None,
                };
            }
        }
    }
    answer.map(|a| (a, reason))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::Requirements;
    use crate::pocket::PocketId;
    use molpilot_chem::scoring::{PropertyProfile, TargetThresholds};
    use molpilot_chem::{default_fingerprint, parse_smiles};

    fn memory(n: usize) -> Memory {
        let t = TargetThresholds { qed_min: 0.5, lrf_min: 3.0, sas_max: 4.0, vna_max: -7.0, nvt_min: 0.8 };
        let mut m = Memory::new("T".into(), vec![PocketId::from_index(1)], Requirements::new(t));
        for i in 0..n {
            let s = "C".repeat(i + 1);
            let g = parse_smiles(&s).unwrap();
            let p = PropertyProfile { qed: 0.5, lrf: 4, sas: 2.0, vna: -5.0, nvt: 1.0 };
            m.insert(s, g.clone(), default_fingerprint(&g), p, 1);
        }
        m
    }

    #[test]
    fn well_formed() {
        let m = memory(2);
        let r = parse_action("Action: GENERATE\nInput: ['POCKET001']", &m).unwrap();
        assert_eq!(r.action, ActionKind::Generate);
        assert_eq!(r.inputs, vec!["POCKET001"]);
        let r = parse_action("Action: CODE\nInput: ['MOL001','MOL002']\nDesc: filter QED >= 0.5 | top 5", &m).unwrap();
        assert_eq!(r.action, ActionKind::Screen);
        assert_eq!(r.desc.as_deref(), Some("filter QED >= 0.5 | top 5"));
    }

    #[test]
    fn chatter_and_markdown() {
        let m = memory(2);
        let reply = "Let me think.\nThe molecules are weak.\n\n**Action:** OPTIMIZE\n**Input:** [MOL002]\n**Desc:** improve the QED of MOL002\nThanks";
        let r = parse_action(reply, &m).unwrap();
        assert_eq!(r.action, ActionKind::Optimize);
        assert_eq!(r.inputs, vec!["MOL002"]);
        assert_eq!(objective_properties(r.desc.as_deref().unwrap()), vec![Property::Qed]);
    }

    #[test]
    fn errors_are_distinct() {
        let m = memory(1);
        assert_eq!(parse_action("Let me think...", &m), Err(ActionParseError::NoAction));
        assert_eq!(parse_action("Action: DANCE\nInput: ['MOL001']", &m), Err(ActionParseError::UnknownAction("DANCE".into())));
        assert_eq!(parse_action("Action: OPTIMIZE\nInput: ['MOL009']", &m), Err(ActionParseError::UnknownId("MOL009".into())));
        assert!(matches!(parse_action("Action: CODE\nInput: ['MOL001']\nDesc: keep the good ones", &m), Err(ActionParseError::BadPlan(_))));
        assert_eq!(parse_action("Action: CODE\nInput: ['MOL001']", &m), Err(ActionParseError::MissingDesc));
        assert!(matches!(parse_action("Action: GENERATE\nInput: ['MOL001']", &m), Err(ActionParseError::WrongInputKind { .. })));
        assert_eq!(parse_action("Action: GENERATE", &m), Err(ActionParseError::MissingInput(ActionKind::Generate)));
    }

    #[test]
    fn first_valid_block_wins() {
        let m = memory(1);
        let reply = "Action: OPTIMIZE\nInput: ['MOL404']\n\nAction: GENERATE\nInput: ['POCKET001']\n\nAction: OPTIMIZE\nInput: ['MOL001']";
        assert_eq!(parse_action(reply, &m).unwrap().action, ActionKind::Generate);
    }

    #[test]
    fn answers() {
        assert_eq!(parse_answer("Reason: all pass\nAnswer: YES"), Some((true, "all pass".into())));
        assert_eq!(parse_answer("Answer: NO"), Some((false, String::new())));
        assert_eq!(parse_answer("**Answer:** (YES)"), Some((true, String::new())));
        assert_eq!(parse_answer("maybe"), None);
    }
}
