//! A SMARTS subset for substructure queries, used by the descriptor tables
//! (atom typing, polar surface contributions, acceptors, structural alerts).
//!
//! Supported: element symbols (aliphatic upper case, aromatic lower case),
//! `*`, `a`, `A`, `#n`, `D`, `X`, `H`, `h`, `v`, `R`, `r`, `x`, charges,
//! isotopes, recursive `$(...)`, the logical operators `!`, `&`, `,`, `;`,
//! bond primitives `- = # : ~ @` with the same operators, branches, ring
//! closures and `.`-separated components. Chirality marks are accepted and
//! ignored.

use thiserror::Error;

use crate::element::Element;
use crate::graph::{BondOrder, MolecularGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmartsError {
    #[error("empty SMARTS pattern")]
    Empty,
    #[error("unexpected character {ch:?} at offset {offset} in SMARTS")]
    UnexpectedChar { ch: char, offset: usize },
    #[error("unexpected end of SMARTS pattern")]
    UnexpectedEnd,
    #[error("unknown element symbol at offset {offset} in SMARTS")]
    UnknownElement { offset: usize },
    #[error("unmatched ring closure {label} in SMARTS")]
    UnmatchedRingClosure { label: u32 },
    #[error("unbalanced parentheses at offset {offset} in SMARTS")]
    UnbalancedParentheses { offset: usize },
}

#[derive(Debug, Clone)]
enum AtomPrim {
    Any,
    Element { z: u8, aromatic: bool },
    AtomicNum(u8),
    Aromatic,
    Aliphatic,
    TotalH(u8),
    ImplicitH(u8),
    Degree(u8),
    Connectivity(u8),
    Valence(u8),
    RingCount(Option<u8>),
    RingSize(Option<u8>),
    RingBonds(Option<u8>),
    Charge(i8),
    Isotope(u16),
    Recursive(Box<Smarts>),
}

#[derive(Debug, Clone)]
enum Expr<P> {
    Prim(P),
    Not(Box<Expr<P>>),
    And(Vec<Expr<P>>),
    Or(Vec<Expr<P>>),
}

impl<P> Expr<P> {
    fn eval(&self, f: &mut dyn FnMut(&P) -> bool) -> bool {
        match self {
            Expr::Prim(p) => f(p),
            Expr::Not(e) => !e.eval(f),
            Expr::And(es) => es.iter().all(|e| e.eval(f)),
            Expr::Or(es) => es.iter().any(|e| e.eval(f)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondPrim {
    Single,
    Double,
    Triple,
    Aromatic,
    Any,
    Ring,
    /// No bond symbol written: single or aromatic.
    Implicit,
}

#[derive(Debug, Clone)]
struct QueryBond {
    a: usize,
    b: usize,
    expr: Expr<BondPrim>,
}

/// A parsed SMARTS query.
#[derive(Debug, Clone)]
pub struct Smarts {
    text: String,
    atoms: Vec<Expr<AtomPrim>>,
    bonds: Vec<QueryBond>,
    /// Per query atom: (neighbour query atom, bond index).
    adjacency: Vec<Vec<(usize, usize)>>,
}

/// Atom and bond properties a query is evaluated against. Built from a
/// molecular graph, optionally with hydrogens expanded into explicit atoms.
#[derive(Debug, Clone)]
pub struct MatchGraph {
    atoms: Vec<TargetAtom>,
    bonds: Vec<(BondOrder, bool)>,
    adjacency: Vec<Vec<(usize, usize)>>,
    heavy: usize,
}

#[derive(Debug, Clone)]
struct TargetAtom {
    z: u8,
    aromatic: bool,
    charge: i8,
    isotope: Option<u16>,
    total_h: u8,
    implicit_h: u8,
    valence: u8,
    ring_count: u8,
    min_ring: Option<u8>,
    ring_bonds: u8,
}

impl MatchGraph {
    /// Hydrogens stay implicit: `[H]` atoms never match, `H` counts still do.
    pub fn new(g: &MolecularGraph) -> MatchGraph {
        MatchGraph::build(g, false)
    }

    /// Every implicit hydrogen becomes an explicit neighbour atom appended
    /// after the heavy atoms, so `[#1]` patterns can match them.
    pub fn with_explicit_hydrogens(g: &MolecularGraph) -> MatchGraph {
        MatchGraph::build(g, true)
    }

    fn build(g: &MolecularGraph, explicit_h: bool) -> MatchGraph {
        let n = g.atom_count();
        let mut atoms = Vec::with_capacity(n);
        let mut bonds: Vec<(BondOrder, bool)> = g.bonds().iter().enumerate().map(|(i, b)| (b.order, g.is_ring_bond(i))).collect();
        let mut adjacency: Vec<Vec<(usize, usize)>> = (0..n).map(|i| g.neighbors(i).to_vec()).collect();
        for i in 0..n {
            let a = g.atom(i);
            let min_ring = g.rings().iter().filter(|r| r.contains(&i)).map(|r| r.len()).min();
            let ring_bonds = g.neighbors(i).iter().filter(|&&(_, b)| g.is_ring_bond(b)).count();
            let explicit_h_nbrs = g.neighbors(i).iter().filter(|&&(j, _)| g.atom(j).element == Element::H).count();
            atoms.push(TargetAtom {
                z: a.element.atomic_number(),
                aromatic: a.aromatic,
                charge: a.charge,
                isotope: a.isotope,
                total_h: a.hydrogens + explicit_h_nbrs as u8,
                implicit_h: if explicit_h { 0 } else { a.hydrogens },
                valence: g.valence(i),
                ring_count: g.ring_count_of(i) as u8,
                min_ring: min_ring.map(|s| s as u8),
                ring_bonds: ring_bonds as u8,
            });
        }
        if explicit_h {
            for i in 0..n {
                for _ in 0..g.atom(i).hydrogens {
                    let h = atoms.len();
                    atoms.push(TargetAtom {
                        z: 1,
                        aromatic: false,
                        charge: 0,
                        isotope: None,
                        total_h: 0,
                        implicit_h: 0,
                        valence: 1,
                        ring_count: 0,
                        min_ring: None,
                        ring_bonds: 0,
                    });
                    let b = bonds.len();
                    bonds.push((BondOrder::Single, false));
                    adjacency[i].push((h, b));
                    adjacency.push(vec![(i, b)]);
                }
            }
        }
        MatchGraph { atoms, bonds, adjacency, heavy: n }
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Number of atoms that come from the source graph (hydrogens appended
    /// by [`MatchGraph::with_explicit_hydrogens`] follow them).
    pub fn source_atom_count(&self) -> usize {
        self.heavy
    }

    pub fn atomic_number(&self, i: usize) -> u8 {
        self.atoms[i].z
    }

    fn degree(&self, i: usize) -> u8 {
        self.adjacency[i].len() as u8
    }
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<u8> {
        self.text.get(self.pos + k).copied()
    }

    fn unexpected(&self) -> SmartsError {
        match self.peek() {
            Some(c) => SmartsError::UnexpectedChar { ch: c as char, offset: self.pos },
            None => SmartsError::UnexpectedEnd,
        }
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        std::str::from_utf8(&self.text[start..self.pos]).ok()?.parse().ok()
    }

    fn parse_pattern(&mut self) -> Result<Smarts, SmartsError> {
        let mut atoms: Vec<Expr<AtomPrim>> = Vec::new();
        let mut bonds: Vec<QueryBond> = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        let mut prev: Option<usize> = None;
        let mut pending: Option<Expr<BondPrim>> = None;
        let mut open: Vec<(u32, usize, Option<Expr<BondPrim>>)> = Vec::new();

        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    let p = prev.ok_or_else(|| self.unexpected())?;
                    stack.push(p);
                    self.pos += 1;
                }
                b')' => {
                    prev = Some(stack.pop().ok_or(SmartsError::UnbalancedParentheses { offset: self.pos })?);
                    self.pos += 1;
                }
                b'.' => {
                    prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let label = if c == b'%' {
                        self.pos += 1;
                        self.number().ok_or_else(|| self.unexpected())?
                    } else {
                        self.pos += 1;
                        (c - b'0') as u32
                    };
                    let p = prev.ok_or_else(|| self.unexpected())?;
                    if let Some(k) = open.iter().position(|o| o.0 == label) {
                        let (_, other, first_bond) = open.remove(k);
                        let expr = pending.take().or(first_bond).unwrap_or(Expr::Prim(BondPrim::Implicit));
                        bonds.push(QueryBond { a: other, b: p, expr });
                    } else {
                        open.push((label, p, pending.take()));
                    }
                }
                b'-' | b'=' | b'#' | b':' | b'~' | b'@' | b'!' | b'/' | b'\\' if prev.is_some() => {
                    pending = Some(self.bond_expr()?);
                }
                _ => {
                    let atom = if c == b'[' {
                        self.pos += 1;
                        let e = self.atom_expr()?;
                        if self.peek() != Some(b']') {
                            return Err(self.unexpected());
                        }
                        self.pos += 1;
                        e
                    } else {
                        self.bare_atom()?
                    };
                    let idx = atoms.len();
                    atoms.push(atom);
                    if let Some(p) = prev {
                        let expr = pending.take().unwrap_or(Expr::Prim(BondPrim::Implicit));
                        bonds.push(QueryBond { a: p, b: idx, expr });
                    }
                    prev = Some(idx);
                }
            }
        }
        if !stack.is_empty() {
            return Err(SmartsError::UnbalancedParentheses { offset: self.pos });
        }
        if let Some((label, _, _)) = open.first() {
            return Err(SmartsError::UnmatchedRingClosure { label: *label });
        }
        if atoms.is_empty() {
            return Err(SmartsError::Empty);
        }
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (k, b) in bonds.iter().enumerate() {
            adjacency[b.a].push((b.b, k));
            adjacency[b.b].push((b.a, k));
        }
        Ok(Smarts { text: String::new(), atoms, bonds, adjacency })
    }

    fn bare_atom(&mut self) -> Result<Expr<AtomPrim>, SmartsError> {
        let start = self.pos;
        let c = self.peek().ok_or(SmartsError::UnexpectedEnd)?;
        let two = |p: &Self, s: &[u8]| p.text[p.pos..].starts_with(s);
        let prim = if two(self, b"Cl") {
            self.pos += 2;
            AtomPrim::Element { z: 17, aromatic: false }
        } else if two(self, b"Br") {
            self.pos += 2;
            AtomPrim::Element { z: 35, aromatic: false }
        } else {
            self.pos += 1;
            match c {
                b'*' => AtomPrim::Any,
                b'a' => AtomPrim::Aromatic,
                b'A' => AtomPrim::Aliphatic,
                b'B' | b'C' | b'N' | b'O' | b'S' | b'P' | b'F' | b'I' => {
                    let z = Element::from_symbol(&(c as char).to_string()).unwrap().atomic_number();
                    AtomPrim::Element { z, aromatic: false }
                }
                b'b' | b'c' | b'n' | b'o' | b's' | b'p' => {
                    let z = Element::from_symbol(&(c.to_ascii_uppercase() as char).to_string()).unwrap().atomic_number();
                    AtomPrim::Element { z, aromatic: true }
                }
                _ => return Err(SmartsError::UnexpectedChar { ch: c as char, offset: start }),
            }
        };
        Ok(Expr::Prim(prim))
    }

    fn atom_expr(&mut self) -> Result<Expr<AtomPrim>, SmartsError> {
        // ';' binds loosest, then ',', then '&' (explicit or implied).
        let mut parts = vec![self.atom_or()?];
        while self.peek() == Some(b';') {
            self.pos += 1;
            parts.push(self.atom_or()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::And(parts) })
    }

    fn atom_or(&mut self) -> Result<Expr<AtomPrim>, SmartsError> {
        let mut parts = vec![self.atom_and()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            parts.push(self.atom_and()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::Or(parts) })
    }

    fn atom_and(&mut self) -> Result<Expr<AtomPrim>, SmartsError> {
        let mut parts = Vec::new();
        let mut first = true;
        loop {
            match self.peek() {
                Some(b'&') => {
                    self.pos += 1;
                }
                Some(b']') | Some(b',') | Some(b';') | None => break,
                _ => {}
            }
            parts.push(self.atom_not(first)?);
            first = false;
        }
        if parts.is_empty() {
            return Err(self.unexpected());
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::And(parts) })
    }

    fn atom_not(&mut self, first: bool) -> Result<Expr<AtomPrim>, SmartsError> {
        if self.peek() == Some(b'!') {
            self.pos += 1;
            return Ok(Expr::Not(Box::new(self.atom_not(false)?)));
        }
        self.atom_prim(first)
    }

    fn optional_count(&mut self, default: u8) -> u8 {
        self.number().map_or(default, |n| n as u8)
    }

    fn atom_prim(&mut self, first: bool) -> Result<Expr<AtomPrim>, SmartsError> {
        let start = self.pos;
        let c = self.peek().ok_or(SmartsError::UnexpectedEnd)?;
        if c.is_ascii_digit() {
            let iso = self.number().unwrap_or(0) as u16;
            return Ok(Expr::Prim(AtomPrim::Isotope(iso)));
        }
        // A leading H not followed by a count is a hydrogen atom.
        if c == b'H' && first && !self.peek_at(1).is_some_and(|d| d.is_ascii_digit() || d.is_ascii_lowercase()) {
            self.pos += 1;
            return Ok(Expr::Prim(AtomPrim::AtomicNum(1)));
        }
        // Two-letter element symbols take precedence over one-letter ones.
        if c.is_ascii_uppercase() {
            if let Some(d) = self.peek_at(1).filter(|d| d.is_ascii_lowercase()) {
                let sym = [c as char, d as char].iter().collect::<String>();
                if let Some(e) = Element::from_symbol(&sym) {
                    self.pos += 2;
                    return Ok(Expr::Prim(AtomPrim::Element { z: e.atomic_number(), aromatic: false }));
                }
            }
        }
        if c.is_ascii_lowercase() {
            if let Some(d) = self.peek_at(1).filter(|d| d.is_ascii_lowercase()) {
                let sym: String = [c.to_ascii_uppercase() as char, d as char].iter().collect();
                if matches!(sym.as_str(), "Se" | "As" | "Te") {
                    self.pos += 2;
                    let z = Element::from_symbol(&sym).unwrap().atomic_number();
                    return Ok(Expr::Prim(AtomPrim::Element { z, aromatic: true }));
                }
            }
        }
        self.pos += 1;
        let prim = match c {
            b'*' => AtomPrim::Any,
            b'a' => AtomPrim::Aromatic,
            b'A' => AtomPrim::Aliphatic,
            b'#' => {
                let z = self.number().ok_or_else(|| self.unexpected())?;
                AtomPrim::AtomicNum(z as u8)
            }
            b'D' => AtomPrim::Degree(self.optional_count(1)),
            b'X' => AtomPrim::Connectivity(self.optional_count(1)),
            b'H' => AtomPrim::TotalH(self.optional_count(1)),
            b'h' => AtomPrim::ImplicitH(self.optional_count(1)),
            b'v' => AtomPrim::Valence(self.optional_count(1)),
            b'R' => AtomPrim::RingCount(self.number().map(|n| n as u8)),
            b'r' => AtomPrim::RingSize(self.number().map(|n| n as u8)),
            b'x' => AtomPrim::RingBonds(self.number().map(|n| n as u8)),
            b'+' | b'-' => {
                let sign: i8 = if c == b'+' { 1 } else { -1 };
                let mut magnitude = 1i8;
                if let Some(n) = self.number() {
                    magnitude = n as i8;
                } else {
                    while self.peek() == Some(c) {
                        self.pos += 1;
                        magnitude += 1;
                    }
                }
                AtomPrim::Charge(sign * magnitude)
            }
            b'@' => {
                while matches!(self.peek(), Some(b'@') | Some(b'?')) {
                    self.pos += 1;
                }
                AtomPrim::Any
            }
            b'$' => {
                if self.peek() != Some(b'(') {
                    return Err(self.unexpected());
                }
                self.pos += 1;
                let inner_start = self.pos;
                let mut depth = 1;
                while depth > 0 {
                    match self.peek() {
                        Some(b'(') => depth += 1,
                        Some(b')') => depth -= 1,
                        None => return Err(SmartsError::UnbalancedParentheses { offset: start }),
                        _ => {}
                    }
                    self.pos += 1;
                }
                let inner = &self.text[inner_start..self.pos - 1];
                let mut sub = Parser { text: inner, pos: 0 };
                let mut pattern = sub.parse_pattern().map_err(|e| shift(e, inner_start))?;
                pattern.text = String::from_utf8_lossy(inner).into_owned();
                AtomPrim::Recursive(Box::new(pattern))
            }
            b'B' | b'C' | b'N' | b'O' | b'S' | b'P' | b'F' | b'I' | b'K' | b'U' | b'V' | b'W' | b'Y' => {
                let z = Element::from_symbol(&(c as char).to_string()).unwrap().atomic_number();
                AtomPrim::Element { z, aromatic: false }
            }
            b'b' | b'c' | b'n' | b'o' | b's' | b'p' => {
                let z = Element::from_symbol(&(c.to_ascii_uppercase() as char).to_string()).unwrap().atomic_number();
                AtomPrim::Element { z, aromatic: true }
            }
            _ if c.is_ascii_alphabetic() => return Err(SmartsError::UnknownElement { offset: start }),
            _ => return Err(SmartsError::UnexpectedChar { ch: c as char, offset: start }),
        };
        Ok(Expr::Prim(prim))
    }

    fn bond_expr(&mut self) -> Result<Expr<BondPrim>, SmartsError> {
        let mut parts = vec![self.bond_or()?];
        while self.peek() == Some(b';') {
            self.pos += 1;
            parts.push(self.bond_or()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::And(parts) })
    }

    fn bond_or(&mut self) -> Result<Expr<BondPrim>, SmartsError> {
        let mut parts = vec![self.bond_and()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            parts.push(self.bond_and()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::Or(parts) })
    }

    fn bond_and(&mut self) -> Result<Expr<BondPrim>, SmartsError> {
        let mut parts = Vec::new();
        loop {
            if self.peek() == Some(b'&') {
                self.pos += 1;
            }
            match self.peek() {
                Some(b'-' | b'=' | b'#' | b':' | b'~' | b'@' | b'!' | b'/' | b'\\') => parts.push(self.bond_not()?),
                _ => break,
            }
        }
        if parts.is_empty() {
            return Err(self.unexpected());
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::And(parts) })
    }

    fn bond_not(&mut self) -> Result<Expr<BondPrim>, SmartsError> {
        let c = self.peek().ok_or(SmartsError::UnexpectedEnd)?;
        self.pos += 1;
        let prim = match c {
            b'!' => return Ok(Expr::Not(Box::new(self.bond_not()?))),
            b'-' | b'/' | b'\\' => BondPrim::Single,
            b'=' => BondPrim::Double,
            b'#' => BondPrim::Triple,
            b':' => BondPrim::Aromatic,
            b'~' => BondPrim::Any,
            b'@' => BondPrim::Ring,
            _ => return Err(SmartsError::UnexpectedChar { ch: c as char, offset: self.pos - 1 }),
        };
        Ok(Expr::Prim(prim))
    }
}

fn shift(e: SmartsError, by: usize) -> SmartsError {
    match e {
        SmartsError::UnexpectedChar { ch, offset } => SmartsError::UnexpectedChar { ch, offset: offset + by },
        SmartsError::UnknownElement { offset } => SmartsError::UnknownElement { offset: offset + by },
        SmartsError::UnbalancedParentheses { offset } => SmartsError::UnbalancedParentheses { offset: offset + by },
        other => other,
    }
}

/// Upper bound on enumerated matches per query, guarding against
/// combinatorial blow-up on highly symmetric targets.
const MATCH_LIMIT: usize = 10_000;

impl Smarts {
    pub fn parse(text: &str) -> Result<Smarts, SmartsError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(SmartsError::Empty);
        }
        let mut parser = Parser { text: text.as_bytes(), pos: 0 };
        let mut pattern = parser.parse_pattern()?;
        pattern.text = text.to_string();
        Ok(pattern)
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    fn atom_matches(&self, q: usize, t: &MatchGraph, i: usize) -> bool {
        let a = &t.atoms[i];
        self.atoms[q].eval(&mut |p| match p {
            AtomPrim::Any => true,
            AtomPrim::Element { z, aromatic } => a.z == *z && a.aromatic == *aromatic,
            AtomPrim::AtomicNum(z) => a.z == *z,
            AtomPrim::Aromatic => a.aromatic,
            AtomPrim::Aliphatic => !a.aromatic,
            AtomPrim::TotalH(n) => a.total_h == *n,
            AtomPrim::ImplicitH(n) => a.implicit_h == *n,
            AtomPrim::Degree(n) => t.degree(i) == *n,
            AtomPrim::Connectivity(n) => t.degree(i) + a.implicit_h == *n,
            AtomPrim::Valence(n) => a.valence == *n,
            AtomPrim::RingCount(None) => a.ring_count > 0,
            AtomPrim::RingCount(Some(n)) => a.ring_count == *n,
            AtomPrim::RingSize(None) => a.min_ring.is_some(),
            AtomPrim::RingSize(Some(n)) => a.min_ring == Some(*n),
            AtomPrim::RingBonds(None) => a.ring_bonds > 0,
            AtomPrim::RingBonds(Some(n)) => a.ring_bonds == *n,
            AtomPrim::Charge(c) => a.charge == *c,
            AtomPrim::Isotope(n) => a.isotope == Some(*n),
            AtomPrim::Recursive(sub) => sub.matches_at(t, i),
        })
    }

    fn bond_matches(&self, qb: usize, t: &MatchGraph, b: usize) -> bool {
        let (order, in_ring) = t.bonds[b];
        self.bonds[qb].expr.eval(&mut |p| match p {
            BondPrim::Single => order == BondOrder::Single,
            BondPrim::Double => order == BondOrder::Double,
            BondPrim::Triple => order == BondOrder::Triple,
            BondPrim::Aromatic => order == BondOrder::Aromatic,
            BondPrim::Any => true,
            BondPrim::Ring => in_ring,
            BondPrim::Implicit => matches!(order, BondOrder::Single | BondOrder::Aromatic),
        })
    }

    /// Does the query match with its first atom mapped onto target atom `i`?
    pub fn matches_at(&self, t: &MatchGraph, i: usize) -> bool {
        let mut found = false;
        let mut map = vec![usize::MAX; self.atoms.len()];
        let mut used = vec![false; t.atom_count()];
        if self.atom_matches(0, t, i) {
            map[0] = i;
            used[i] = true;
            self.extend(t, 1, &mut map, &mut used, &mut |_| {
                found = true;
                false
            });
        }
        found
    }

    pub fn has_match(&self, t: &MatchGraph) -> bool {
        (0..t.atom_count()).any(|i| self.matches_at(t, i))
    }

    /// All matches as query-atom → target-atom maps, de-duplicated by the
    /// set of target atoms covered.
    pub fn unique_matches(&self, t: &MatchGraph) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut seen: std::collections::HashSet<Vec<usize>> = std::collections::HashSet::new();
        let mut map = vec![usize::MAX; self.atoms.len()];
        let mut used = vec![false; t.atom_count()];
        let mut total = 0usize;
        for i in 0..t.atom_count() {
            if !self.atom_matches(0, t, i) {
                continue;
            }
            map[0] = i;
            used[i] = true;
            self.extend(t, 1, &mut map, &mut used, &mut |m| {
                total += 1;
                let mut key = m.to_vec();
                key.sort_unstable();
                if seen.insert(key) {
                    out.push(m.to_vec());
                }
                total < MATCH_LIMIT
            });
            used[i] = false;
            if total >= MATCH_LIMIT {
                break;
            }
        }
        out
    }

    pub fn count_unique_matches(&self, t: &MatchGraph) -> usize {
        self.unique_matches(t).len()
    }

    /// Backtracking extension of a partial map. `emit` returns whether to
    /// keep searching; the return value propagates that decision.
    fn extend(&self, t: &MatchGraph, q: usize, map: &mut Vec<usize>, used: &mut Vec<bool>, emit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if q == self.atoms.len() {
            return emit(map);
        }
        // The first earlier neighbour anchors candidate generation; a query
        // atom without one starts a new component and may go anywhere.
        let anchor = self.adjacency[q].iter().filter(|&&(p, _)| p < q).min_by_key(|&&(p, _)| p).copied();
        let candidates: Vec<usize> = match anchor {
            Some((p, _)) => t.adjacency[map[p]].iter().map(|&(j, _)| j).collect(),
            None => (0..t.atom_count()).collect(),
        };
        for c in candidates {
            if used[c] || !self.atom_matches(q, t, c) {
                continue;
            }
            let bonds_ok = self.adjacency[q]
                .iter()
                .filter(|&&(p, _)| p < q)
                .all(|&(p, qb)| t.adjacency[c].iter().find(|&&(j, _)| j == map[p]).is_some_and(|&(_, b)| self.bond_matches(qb, t, b)));
            if !bonds_ok {
                continue;
            }
            map[q] = c;
            used[c] = true;
            let keep_going = self.extend(t, q + 1, map, used, emit);
            used[c] = false;
            map[q] = usize::MAX;
            if !keep_going {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    fn count(pattern: &str, smiles: &str) -> usize {
        let q = Smarts::parse(pattern).unwrap();
        let t = MatchGraph::new(&parse_smiles(smiles).unwrap());
        q.count_unique_matches(&t)
    }

    #[test]
    fn element_and_aromaticity() {
        assert_eq!(count("c", "Cc1ccccc1"), 6);
        assert_eq!(count("C", "Cc1ccccc1"), 1);
        assert_eq!(count("[#6]", "Cc1ccccc1"), 7);
        assert_eq!(count("a", "c1ccncc1"), 6);
        assert_eq!(count("[n]", "c1ccncc1"), 1);
    }

    #[test]
    fn hydrogen_counts_and_degree() {
        assert_eq!(count("[CH3]", "CC(C)O"), 2);
        assert_eq!(count("[OH]", "CC(C)O"), 1);
        assert_eq!(count("[CX4]", "CC=C"), 1);
        assert_eq!(count("[D1]", "CC(C)O"), 3);
        assert_eq!(count("[!D1]", "CC(C)O"), 1);
    }

    #[test]
    fn bonds_and_rings() {
        assert_eq!(count("C=O", "CC(=O)O"), 1);
        assert_eq!(count("C-O", "CC(=O)O"), 1);
        assert_eq!(count("C~O", "CC(=O)O"), 2);
        assert_eq!(count("[R]", "C1CC1C"), 3);
        assert_eq!(count("[r3]", "C1CC1CC2CCCC2"), 3);
        assert_eq!(count("*-!@*", "C1CC1CC"), 2);
        assert_eq!(count("*1**1", "C1CC1"), 1);
    }

    #[test]
    fn charges_and_logic() {
        assert_eq!(count("[N+](=O)[O-]", "C[N+](=O)[O-]"), 1);
        assert_eq!(count("[N,O]", "CNCO"), 2);
        assert_eq!(count("[#7,#8;!H0]", "CNC(=O)O"), 2);
        assert_eq!(count("[C;!R]", "C1CC1C"), 1);
        assert_eq!(count("[+,-]", "[NH4+].[Cl-]"), 2);
    }

    #[test]
    fn recursive_queries() {
        assert_eq!(count("[$(C=O)]", "CC(=O)O"), 1);
        assert_eq!(count("[$([N;+0;X3;v3]);!$(N[C,S]=O)]", "CNC(C)=O"), 0);
        assert_eq!(count("[$([N;+0;X3;v3]);!$(N[C,S]=O)]", "CN(C)C"), 1);
    }

    #[test]
    fn explicit_hydrogens() {
        let g = parse_smiles("CO").unwrap();
        let t = MatchGraph::with_explicit_hydrogens(&g);
        assert_eq!(t.atom_count(), 6);
        assert_eq!(Smarts::parse("[#1][#6]").unwrap().count_unique_matches(&t), 3);
        assert_eq!(Smarts::parse("[#1]O").unwrap().count_unique_matches(&t), 1);
        assert_eq!(Smarts::parse("[CH3]").unwrap().count_unique_matches(&t), 1);
    }

    #[test]
    fn disconnected_components() {
        assert_eq!(count("F.F", "FCCF"), 1);
        assert_eq!(count("F.F.F", "FCCF"), 0);
    }

    #[test]
    fn malformed_patterns() {
        assert!(Smarts::parse("").is_err());
        assert!(Smarts::parse("C1CC").is_err());
        assert!(Smarts::parse("C(C").is_err());
        assert!(Smarts::parse("[C").is_err());
        assert!(Smarts::parse("[Qq]").is_err());
    }
}
