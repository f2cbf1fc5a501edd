//! Prompt text for the reasoner and evaluator roles.
//!
//! The wording is our own; the reply format lines are fixed because the
//! parsers in [`crate::action`] depend on them.

use std::fmt::Write;

use molpilot_chem::scoring::PropertyProfile;

use crate::memory::{ActionRecord, Memory, MemoryMolecule, Requirements};
use crate::optimizer::{fitness, Objective};

/// Molecules listed in a reasoner prompt before truncation.
pub const DEFAULT_TOP_K: usize = 25;

pub const ACTIONS: &str = "\
GENERATE: design a fresh batch of candidate molecules for a pocket. Input: one pocket identifier.
OPTIMIZE: evolve the given molecules with a genetic algorithm to improve one property. Input: molecule identifiers. Desc (optional): the property to improve, one of QED, SAS or VNA; if omitted the property failing most often is chosen.
CODE: screen the given molecules with a pipeline of stages written in Desc, separated by '|'. Stages: 'filter COL OP VALUE' (OP one of < <= > >= ==), 'sort COL asc|desc', 'top N', 'cluster T best COL asc|desc' (groups molecules whose Tanimoto similarity is at least T and keeps the best of each group). COL is one of SMILES, QED, SAScore, Lipinski, Novelty, VinaScore. Example: filter QED >= 0.5 | cluster 0.6 best VinaScore asc | top 5
";

pub fn molecule_line(m: &MemoryMolecule) -> String {
    let p = &m.profile;
    format!(
        "{}: {} | QED {:.3} | SAScore {:.2} | Lipinski {} | Novelty {:.3} | Vina Score {:.2}",
        m.id, m.smiles, p.qed, p.sas, p.lrf, p.nvt, p.vna
    )
}

fn listing_score(p: &PropertyProfile) -> f64 {
    fitness(&Objective { qed: 1.0, sas: 1.0, vna: 1.0 }, p)
}

pub fn molecule_listing(mem: &Memory, top_k: usize) -> String {
    let ranked = mem.ranked(listing_score);
    if ranked.is_empty() {
        return "No molecules yet.\n".to_string();
    }
    let mut out = String::new();
    for m in ranked.iter().take(top_k) {
        out.push_str(&molecule_line(m));
        out.push('\n');
    }
    if ranked.len() > top_k {
        let _ = writeln!(
            out,
            "(Showing {top_k} of {} molecules: those meeting the most requirements first, then by combined QED, SAScore and Vina Score.)",
            ranked.len()
        );
    }
    out
}

pub fn history_line(r: &ActionRecord) -> String {
    let inputs = if r.inputs.len() > 6 {
        format!("[{} ... {}] ({} molecules)", r.inputs[..3].join(", "), r.inputs[r.inputs.len() - 1], r.inputs.len())
    } else {
        format!("{:?}", r.inputs)
    };
    let mut s = format!("{}. {} {inputs}", r.index, r.action);
    if let Some(d) = &r.desc {
        let _ = write!(s, " desc: {d}");
    }
    if !r.ok {
        let _ = write!(s, " -> failed: {}", r.error.as_deref().unwrap_or("unknown error"));
        return s;
    }
    match (&r.screened, r.new_molecules.len()) {
        (Some(kept), _) => {
            let ids: Vec<&str> = kept.iter().map(|i| i.as_str()).collect();
            let _ = write!(s, " -> kept {} molecule(s): {ids:?}", kept.len());
        }
        (None, 0) => s.push_str(" -> no new molecules"),
        (None, n) => {
            let _ = write!(s, " -> {n} new molecule(s), {} to {}", r.new_molecules[0], r.new_molecules[n - 1]);
        }
    }
    s
}

/// Reasoner prompt for the current memory and remaining budget.
pub fn build_reasoner_prompt(mem: &Memory, budget: usize, top_k: usize) -> String {
    let pockets: String = mem.pockets.iter().map(|p| format!("{p}: binding pocket of target {}\n", mem.target_name)).collect();
    let history = if mem.history().is_empty() {
        "No actions taken yet.\n".to_string()
    } else {
        mem.history().iter().map(|r| history_line(r) + "\n").collect()
    };
    let evaluation = match mem.evaluations().last() {
        None => "No evaluation yet.\n".to_string(),
        Some(e) if e.verdict.satisfied => format!("The pool of {} molecule(s) meets every requirement.\n", e.pool.len()),
        Some(e) => format!(
            "The current pool of {} molecule(s) does not meet the requirements: {}.\n",
            e.pool.len(),
            e.verdict.failing_reasons.join("; ")
        ),
    };
    let mut p = String::new();
    p.push_str("These pockets and molecules are available:\n");
    p.push_str(&pockets);
    p.push_str(&molecule_listing(mem, top_k));
    p.push_str("\nYou can take these actions:\n");
    p.push_str(ACTIONS);
    p.push_str("\nThe goal is a set of molecules meeting these requirements:\n");
    let _ = writeln!(p, "{}", mem.requirements);
    p.push_str("\nActions taken so far and their results:\n");
    p.push_str(&history);
    p.push_str("\nLatest evaluation:\n");
    p.push_str(&evaluation);
    p.push_str("\nWork through the situation carefully, then choose the single most useful next action and its input.\n");
    let plural = if budget == 1 { "" } else { "s" };
    let _ = writeln!(p, "Budget left: {budget} action{plural}. Only one action can be taken now.");
    p.push_str("\nReply in exactly this format:\n\n");
    p.push_str("Action: [name of action]\n");
    p.push_str("Input: [input of the action, should be the identifier like ['MOL001'] or ['POCKET001']]\n");
    p.push_str("\nFor the CODE action also add:\n\n");
    p.push_str("Desc: [the screening plan, using only the stages listed above]\n");
    p
}

/// Reply sentence appended when a reply could not be used.
pub fn retry_note(error: &str) -> String {
    format!("\nYour previous reply could not be used because {error}. Answer again in the required format.\n")
}

/// Evaluator prompt over the current candidate pool.
pub fn build_evaluator_prompt(pool: &[&MemoryMolecule], req: &Requirements) -> String {
    let mut p = String::from("This is the current pool of molecules:\n");
    if pool.is_empty() {
        p.push_str("(the pool is empty)\n");
    }
    for m in pool {
        p.push_str(&molecule_line(m));
        p.push('\n');
    }
    p.push_str("\nThe goal is a set of molecules meeting these requirements:\n");
    let _ = writeln!(p, "{req}");
    p.push_str("\nDoes the pool meet the requirements? Every molecule in it has to.\n");
    p.push_str("Think it through, then reply in this format:\n");
    p.push_str("Reason: (a compact and brief one-sentence reasoning)\n");
    p.push_str("Answer: (YES or NO)\n");
    p
}
