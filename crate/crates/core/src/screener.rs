//! The SCREEN action: a small pipeline language over the molecule table.
//!
//! ```text
//! plan   := stage ('|' stage)*
//! stage  := 'filter' COL OP VALUE
//!         | 'sort' COL ('asc'|'desc')
//!         | 'top' N
//!         | 'cluster' T 'best' COL ('asc'|'desc')
//! COL    := SMILES | QED | SAScore | Lipinski | Novelty | VinaScore
//! OP     := '<' | '<=' | '>' | '>=' | '=='
//! ```
//!
//! Keywords and column names are case-insensitive. Numeric columns compare
//! as floats; `SMILES` supports `==` against a SMILES string and sorts
//! lexicographically.

use std::cmp::Ordering;
use std::fmt;

use molpilot_chem::scoring::{MoleculeId, PropertyProfile};
use molpilot_chem::{canonical_key, parse_smiles, tanimoto, Fingerprint};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Column {
    Smiles,
    Qed,
    SaScore,
    Lipinski,
    Novelty,
    VinaScore,
}

impl Column {
    pub const ALL: [Column; 6] = [Column::Smiles, Column::Qed, Column::SaScore, Column::Lipinski, Column::Novelty, Column::VinaScore];

    /// Name used in plans.
    pub fn name(self) -> &'static str {
        match self {
            Column::Smiles => "SMILES",
            Column::Qed => "QED",
            Column::SaScore => "SAScore",
            Column::Lipinski => "Lipinski",
            Column::Novelty => "Novelty",
            Column::VinaScore => "VinaScore",
        }
    }

    /// Name used in CSV headers.
    pub fn header(self) -> &'static str {
        match self {
            Column::VinaScore => "Vina Score",
            c => c.name(),
        }
    }

    fn lookup(word: &str) -> Option<Column> {
        Column::ALL.into_iter().find(|c| c.name().eq_ignore_ascii_case(word))
    }

    pub fn numeric(self, row: &Row) -> Option<f64> {
        let p = &row.profile;
        match self {
            Column::Smiles => None,
            Column::Qed => Some(p.qed),
            Column::SaScore => Some(p.sas),
            Column::Lipinski => Some(p.lrf as f64),
            Column::Novelty => Some(p.nvt),
            Column::VinaScore => Some(p.vna),
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
        }
    }

    fn holds(self, o: Ordering) -> bool {
        match self {
            CmpOp::Lt => o == Ordering::Less,
            CmpOp::Le => o != Ordering::Greater,
            CmpOp::Gt => o == Ordering::Greater,
            CmpOp::Ge => o != Ordering::Less,
            CmpOp::Eq => o == Ordering::Equal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Number(f64),
    /// Canonical SMILES, for `filter SMILES == ...`.
    Smiles(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Asc,
    Desc,
}

impl Direction {
    fn name(self) -> &'static str {
        match self {
            Direction::Asc => "asc",
            Direction::Desc => "desc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stage {
    Filter { column: Column, op: CmpOp, value: Value },
    Sort { column: Column, direction: Direction },
    Top(usize),
    Cluster { threshold: f64, column: Column, direction: Direction },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenPlan {
    pub stages: Vec<Stage>,
}

impl fmt::Display for ScreenPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.stages.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            match s {
                Stage::Filter { column, op, value } => {
                    let v = match value {
                        Value::Number(x) => x.to_string(),
                        Value::Smiles(s) => s.clone(),
                    };
                    write!(f, "filter {column} {} {v}", op.symbol())?
                }
                Stage::Sort { column, direction } => write!(f, "sort {column} {}", direction.name())?,
                Stage::Top(n) => write!(f, "top {n}")?,
                Stage::Cluster { threshold, column, direction } => write!(f, "cluster {threshold} best {column} {}", direction.name())?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("empty plan")]
    Empty,
    #[error("offset {offset}: empty stage")]
    EmptyStage { offset: usize },
    #[error("offset {offset}: unknown stage {word:?}")]
    UnknownStage { offset: usize, word: String },
    #[error("offset {offset}: unknown column {word:?}")]
    UnknownColumn { offset: usize, word: String },
    #[error("offset {offset}: unknown operator {word:?}")]
    UnknownOperator { offset: usize, word: String },
    #[error("offset {offset}: malformed number {word:?}")]
    BadNumber { offset: usize, word: String },
    #[error("offset {offset}: expected {expected}")]
    Expected { offset: usize, expected: String },
    #[error("offset {offset}: unexpected {word:?}")]
    Trailing { offset: usize, word: String },
    #[error("offset {offset}: {message}")]
    Invalid { offset: usize, message: String },
}

impl PlanError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            PlanError::Empty => None,
            PlanError::EmptyStage { offset }
            | PlanError::UnknownStage { offset, .. }
            | PlanError::UnknownColumn { offset, .. }
            | PlanError::UnknownOperator { offset, .. }
            | PlanError::BadNumber { offset, .. }
            | PlanError::Expected { offset, .. }
            | PlanError::Trailing { offset, .. }
            | PlanError::Invalid { offset, .. } => Some(*offset),
        }
    }
}

/// Whitespace-separated words of one stage with their byte offsets.
struct Words<'a> {
    words: Vec<(usize, &'a str)>,
    pos: usize,
    end: usize,
}

impl<'a> Words<'a> {
    fn new(text: &'a str, base: usize) -> Words<'a> {
        let mut words = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices() {
            match (c.is_whitespace(), start) {
                (true, Some(s)) => {
                    words.push((base + s, &text[s..i]));
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        if let Some(s) = start {
            words.push((base + s, &text[s..]));
        }
        Words { words, pos: 0, end: base + text.len() }
    }

    fn next(&mut self, expected: &str) -> Result<(usize, &'a str), PlanError> {
        let w = self.words.get(self.pos).copied().ok_or_else(|| PlanError::Expected { offset: self.end, expected: expected.into() })?;
        self.pos += 1;
        Ok(w)
    }

    fn finish(&self) -> Result<(), PlanError> {
        match self.words.get(self.pos) {
            Some(&(offset, word)) => Err(PlanError::Trailing { offset, word: word.into() }),
            None => Ok(()),
        }
    }
}

fn column(w: (usize, &str)) -> Result<Column, PlanError> {
    Column::lookup(w.1).ok_or_else(|| PlanError::UnknownColumn { offset: w.0, word: w.1.into() })
}

fn number(w: (usize, &str)) -> Result<f64, PlanError> {
    match w.1.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(PlanError::BadNumber { offset: w.0, word: w.1.into() }),
    }
}

fn direction(w: (usize, &str)) -> Result<Direction, PlanError> {
    match w.1.to_ascii_lowercase().as_str() {
        "asc" => Ok(Direction::Asc),
        "desc" => Ok(Direction::Desc),
        _ => Err(PlanError::Expected { offset: w.0, expected: "asc or desc".into() }),
    }
}

/// Pads the first comparison operator with spaces so `filter QED>=0.5`
/// needs none. Later `=` signs belong to the value (SMILES double bonds).
fn split_operator(text: &str) -> String {
    let Some(i) = text.find(['<', '>', '=']) else { return text.to_string() };
    let len = if text[i + 1..].starts_with('=') { 2 } else { 1 };
    format!("{} {} {}", &text[..i], &text[i..i + len], &text[i + len..])
}

fn parse_stage(text: &str, base: usize) -> Result<Stage, PlanError> {
    let mut w = Words::new(text, base);
    let Ok(head) = w.next("a stage") else {
        return Err(PlanError::EmptyStage { offset: base });
    };
    let stage = match head.1.to_ascii_lowercase().as_str() {
        "filter" => {
            let col_word = w.next("a column")?;
            let column = column(col_word)?;
            let op_word = w.next("an operator")?;
            let op = match op_word.1 {
                "<" => CmpOp::Lt,
                "<=" => CmpOp::Le,
                ">" => CmpOp::Gt,
                ">=" => CmpOp::Ge,
                "==" => CmpOp::Eq,
                other => return Err(PlanError::UnknownOperator { offset: op_word.0, word: other.into() }),
            };
            let v = w.next("a value")?;
            let value = if column == Column::Smiles {
                if op != CmpOp::Eq {
                    return Err(PlanError::Invalid { offset: op_word.0, message: "SMILES only supports ==".into() });
                }
                let g = parse_smiles(v.1).map_err(|e| PlanError::Invalid { offset: v.0, message: e.to_string() })?;
                Value::Smiles(canonical_key(&g))
            } else {
                Value::Number(number(v)?)
            };
            Stage::Filter { column, op, value }
        }
        "sort" => {
            let column = column(w.next("a column")?)?;
            Stage::Sort { column, direction: direction(w.next("asc or desc")?)? }
        }
        "top" => {
            let n = w.next("a count")?;
            let k = n.1.parse::<usize>().map_err(|_| PlanError::BadNumber { offset: n.0, word: n.1.into() })?;
            Stage::Top(k)
        }
        "cluster" => {
            let t = w.next("a threshold")?;
            let threshold = number(t)?;
            if !(0.0..=1.0).contains(&threshold) {
                return Err(PlanError::Invalid { offset: t.0, message: format!("threshold {threshold} outside [0, 1]") });
            }
            let best = w.next("best")?;
            if !best.1.eq_ignore_ascii_case("best") {
                return Err(PlanError::Expected { offset: best.0, expected: "best".into() });
            }
            let column = column(w.next("a column")?)?;
            Stage::Cluster { threshold, column, direction: direction(w.next("asc or desc")?)? }
        }
        _ => return Err(PlanError::UnknownStage { offset: head.0, word: head.1.into() }),
    };
    w.finish()?;
    Ok(stage)
}

pub fn parse_plan(text: &str) -> Result<ScreenPlan, PlanError> {
    if text.trim().is_empty() {
        return Err(PlanError::Empty);
    }
    let mut stages = Vec::new();
    let mut base = 0;
    for piece in text.split('|') {
        // Operator splitting pads with spaces, which would shift offsets, so
        // map words back through the unpadded text for error reporting.
        let spaced = split_operator(piece);
        let stage = parse_stage(&spaced, 0).map_err(|e| shift(e, piece, &spaced, base))?;
        stages.push(stage);
        base += piece.len() + 1;
    }
    Ok(ScreenPlan { stages })
}

fn shift(e: PlanError, original: &str, spaced: &str, base: usize) -> PlanError {
    // Count non-whitespace characters before the spaced offset and find the
    // same position in the original.
    let fix = |off: usize| -> usize {
        let nonspace = spaced[..off.min(spaced.len())].chars().filter(|c| !c.is_whitespace()).count();
        let mut seen = 0;
        for (i, c) in original.char_indices() {
            if !c.is_whitespace() {
                if seen == nonspace {
                    return base + i;
                }
                seen += 1;
            }
        }
        base + original.len()
    };
    match e {
        PlanError::Empty => PlanError::Empty,
        PlanError::EmptyStage { offset } => PlanError::EmptyStage { offset: fix(offset) },
        PlanError::UnknownStage { offset, word } => PlanError::UnknownStage { offset: fix(offset), word },
        PlanError::UnknownColumn { offset, word } => PlanError::UnknownColumn { offset: fix(offset), word },
        PlanError::UnknownOperator { offset, word } => PlanError::UnknownOperator { offset: fix(offset), word },
        PlanError::BadNumber { offset, word } => PlanError::BadNumber { offset: fix(offset), word },
        PlanError::Expected { offset, expected } => PlanError::Expected { offset: fix(offset), expected },
        PlanError::Trailing { offset, word } => PlanError::Trailing { offset: fix(offset), word },
        PlanError::Invalid { offset, message } => PlanError::Invalid { offset: fix(offset), message },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub id: MoleculeId,
    pub smiles: String,
    pub profile: PropertyProfile,
    pub fingerprint: Fingerprint,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MoleculeTable {
    pub rows: Vec<Row>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl MoleculeTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ids(&self) -> Vec<MoleculeId> {
        self.rows.iter().map(|r| r.id.clone()).collect()
    }

    pub fn csv_header() -> String {
        Column::ALL.map(Column::header).join(",")
    }

    pub fn csv_line(row: &Row) -> String {
        let p = &row.profile;
        format!("{},{:.4},{:.4},{},{:.4},{:.3}", csv_field(&row.smiles), p.qed, p.sas, p.lrf, p.nvt, p.vna)
    }

    pub fn to_csv(&self) -> String {
        let mut out = MoleculeTable::csv_header();
        out.push('\n');
        for r in &self.rows {
            out.push_str(&MoleculeTable::csv_line(r));
            out.push('\n');
        }
        out
    }
}

/// Single-linkage components of the graph with an edge wherever Tanimoto
/// reaches `threshold`. Clusters are ordered by their smallest member.
pub fn cluster(fps: &[&Fingerprint], threshold: f64) -> Result<Vec<Vec<usize>>, PlanError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(PlanError::Invalid { offset: 0, message: format!("threshold {threshold} outside [0, 1]") });
    }
    let n = fps.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let s = tanimoto(fps[i], fps[j]).map_err(|e| PlanError::Invalid { offset: 0, message: e.to_string() })?;
            if s >= threshold {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    Ok(groups)
}

fn compare(column: Column, a: &Row, b: &Row) -> Ordering {
    match (column.numeric(a), column.numeric(b)) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        _ => a.smiles.cmp(&b.smiles),
    }
}

fn directed(column: Column, direction: Direction, a: &Row, b: &Row) -> Ordering {
    let o = compare(column, a, b);
    match direction {
        Direction::Asc => o,
        Direction::Desc => o.reverse(),
    }
}

fn keep(row: &Row, column: Column, op: CmpOp, value: &Value) -> bool {
    match (column.numeric(row), value) {
        (Some(x), Value::Number(v)) => !x.is_nan() && op.holds(x.total_cmp(v)),
        (None, Value::Smiles(s)) => op == CmpOp::Eq && row.smiles == *s,
        _ => false,
    }
}

/// Applies the stages in order. Rows are only dropped or reordered.
pub fn execute_plan(plan: &ScreenPlan, table: &MoleculeTable) -> MoleculeTable {
    let mut rows = table.rows.clone();
    for stage in &plan.stages {
        match stage {
            Stage::Filter { column, op, value } => rows.retain(|r| keep(r, *column, *op, value)),
            Stage::Sort { column, direction } => rows.sort_by(|a, b| directed(*column, *direction, a, b)),
            Stage::Top(k) => rows.truncate(*k),
            Stage::Cluster { threshold, column, direction } => {
                let fps: Vec<&Fingerprint> = rows.iter().map(|r| &r.fingerprint).collect();
                let groups = cluster(&fps, *threshold).expect("threshold validated at parse time");
                let mut picked = Vec::with_capacity(groups.len());
                for g in groups {
                    // First best member wins ties, keeping the choice stable.
                    let mut best = g[0];
                    for &i in &g[1..] {
                        if directed(*column, *direction, &rows[i], &rows[best]) == Ordering::Less {
                            best = i;
                        }
                    }
                    picked.push(rows[best].clone());
                }
                rows = picked;
            }
        }
    }
    MoleculeTable { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use molpilot_chem::fingerprint::Fingerprint;

    fn fp(bits: &[usize]) -> Fingerprint {
        Fingerprint::from_bits(64, 2, bits.iter().copied()).unwrap()
    }

    fn row(n: usize, qed: f64, bits: &[usize]) -> Row {
        Row {
            id: MoleculeId::from_index(n),
            smiles: "C".repeat(n),
            profile: PropertyProfile { qed, lrf: 4, sas: 2.0, vna: -(n as f64), nvt: 1.0 },
            fingerprint: fp(bits),
        }
    }

    #[test]
    fn grammar() {
        let p = parse_plan("filter QED >= 0.5 | top 5").unwrap();
        assert_eq!(p.stages.len(), 2);
        assert_eq!(p.stages[1], Stage::Top(5));
        let p = parse_plan("cluster 0.6 best VinaScore asc").unwrap();
        assert_eq!(p.stages, vec![Stage::Cluster { threshold: 0.6, column: Column::VinaScore, direction: Direction::Asc }]);
        let p = parse_plan("  FILTER qed>=0.5|sort sascore ASC ").unwrap();
        assert_eq!(p.to_string(), "filter QED >= 0.5 | sort SAScore asc");
        assert_eq!(parse_plan(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn errors_with_offsets() {
        assert_eq!(parse_plan("   "), Err(PlanError::Empty));
        assert_eq!(parse_plan("filter Banana > 1"), Err(PlanError::UnknownColumn { offset: 7, word: "Banana".into() }));
        assert_eq!(parse_plan("top 5 | filter QED >= x"), Err(PlanError::BadNumber { offset: 22, word: "x".into() }));
        assert_eq!(parse_plan("top 5 | filter QED>=x"), Err(PlanError::BadNumber { offset: 20, word: "x".into() }));
        assert_eq!(parse_plan("top 5 |"), Err(PlanError::EmptyStage { offset: 7 }));
        assert!(matches!(parse_plan("cluster 1.5 best QED desc"), Err(PlanError::Invalid { offset: 8, .. })));
        assert!(matches!(parse_plan("dance QED"), Err(PlanError::UnknownStage { offset: 0, .. })));
        assert!(matches!(parse_plan("top 5 6"), Err(PlanError::Trailing { offset: 6, .. })));
        assert!(matches!(parse_plan("filter QED ~ 1"), Err(PlanError::UnknownOperator { offset: 11, .. })));
    }

    #[test]
    fn filter_sort_top() {
        let t = MoleculeTable { rows: vec![row(1, 0.4, &[1]), row(2, 0.6, &[2]), row(3, 0.9, &[3])] };
        let out = execute_plan(&parse_plan("filter QED >= 0.5").unwrap(), &t);
        assert_eq!(out.len(), 2);
        let out = execute_plan(&parse_plan("sort QED desc | top 5").unwrap(), &t);
        assert_eq!(out.ids(), vec![MoleculeId::from_index(3), MoleculeId::from_index(2), MoleculeId::from_index(1)]);
        let out = execute_plan(&parse_plan("filter SMILES == CC").unwrap(), &t);
        assert_eq!(out.ids(), vec![MoleculeId::from_index(2)]);
        assert_eq!(parse_plan("filter SMILES==C=C").unwrap().to_string(), "filter SMILES == C=C");
    }

    #[test]
    fn clustering() {
        let a = fp(&[1, 2]);
        let b = fp(&[3, 4]);
        assert_eq!(cluster(&[&a, &a, &b, &b], 0.5).unwrap(), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(cluster(&[&a, &b, &a], 0.0).unwrap(), vec![vec![0, 1, 2]]);
        assert_eq!(cluster(&[&a, &b], 0.99).unwrap(), vec![vec![0], vec![1]]);
        assert_eq!(cluster(&[&a, &a, &b], 1.0).unwrap(), vec![vec![0, 1], vec![2]]);
        assert!(cluster(&[&a], 1.01).is_err());
    }

    #[test]
    fn cluster_keeps_best_per_group() {
        let t = MoleculeTable { rows: vec![row(1, 0.4, &[1, 2]), row(2, 0.6, &[1, 2]), row(3, 0.9, &[5])] };
        let out = execute_plan(&parse_plan("cluster 0.6 best QED desc").unwrap(), &t);
        assert_eq!(out.ids(), vec![MoleculeId::from_index(2), MoleculeId::from_index(3)]);
        let out = execute_plan(&parse_plan("cluster 0.6 best VinaScore asc").unwrap(), &t);
        assert_eq!(out.ids(), vec![MoleculeId::from_index(2), MoleculeId::from_index(3)]);
    }

    #[test]
    fn csv_uses_table_headers() {
        assert_eq!(MoleculeTable::csv_header(), "SMILES,QED,SAScore,Lipinski,Novelty,Vina Score");
    }
}
