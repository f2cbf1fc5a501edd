//! SMILES reader.
//!
//! Supports the organic subset, bracket atoms (isotope, chirality, hydrogen
//! count, charge, atom class), branches, ring closures (`1`..`9`, `%nn`),
//! bond symbols `- = # : / \` and dot-disconnected components. Stereo marks
//! are recorded on the graph but not interpreted.

use std::collections::HashMap;

use thiserror::Error;

use crate::element::Element;
use crate::graph::{Atom, Bond, BondOrder, BondStereo, Chirality, GraphError, MolecularGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("empty SMILES string")]
    Empty,
    #[error("unmatched ring closure {label} at offset {offset}")]
    UnmatchedRingClosure { label: u32, offset: usize },
    #[error("unknown element '{symbol}' at offset {offset}")]
    UnknownElement { symbol: String, offset: usize },
    #[error("unbalanced parentheses at offset {offset}")]
    UnbalancedParentheses { offset: usize },
    #[error("unexpected character '{ch}' at offset {offset}")]
    UnexpectedChar { ch: char, offset: usize },
    #[error("unterminated bracket atom at offset {offset}")]
    UnterminatedBracket { offset: usize },
    #[error("conflicting ring-closure bond at offset {offset}")]
    RingBondConflict { offset: usize },
    #[error("{source} (at offset {offset})")]
    Graph { source: GraphError, offset: usize },
}

impl SmilesError {
    /// Byte offset into the input where the problem was detected.
    pub fn offset(&self) -> usize {
        match *self {
            SmilesError::Empty => 0,
            SmilesError::UnmatchedRingClosure { offset, .. }
            | SmilesError::UnknownElement { offset, .. }
            | SmilesError::UnbalancedParentheses { offset }
            | SmilesError::UnexpectedChar { offset, .. }
            | SmilesError::UnterminatedBracket { offset }
            | SmilesError::RingBondConflict { offset }
            | SmilesError::Graph { offset, .. } => offset,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct BondSymbol {
    order: Option<BondOrder>,
    stereo: Option<BondStereo>,
}

struct RingOpen {
    atom: usize,
    bond: Option<BondSymbol>,
    offset: usize,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    atom_offsets: Vec<usize>,
    bonds: Vec<Bond>,
    prev: Option<usize>,
    pending: Option<BondSymbol>,
    branches: Vec<(usize, usize)>,
    rings: HashMap<u32, RingOpen>,
}

/// Parses a SMILES string into a validated molecular graph.
pub fn parse_smiles(text: &str) -> Result<MolecularGraph, SmilesError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(SmilesError::Empty);
    }
    let lead = text.len() - text.trim_start().len();
    let mut p = Parser {
        text: trimmed.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        atom_offsets: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        pending: None,
        branches: Vec::new(),
        rings: HashMap::new(),
    };
    p.run().map_err(|e| shift(e, lead))?;
    let offsets = p.atom_offsets;
    MolecularGraph::new(p.atoms, p.bonds).map_err(|source| {
        let offset = source.atom().and_then(|a| offsets.get(a).copied()).unwrap_or(0) + lead;
        SmilesError::Graph { source, offset }
    })
}

fn shift(e: SmilesError, by: usize) -> SmilesError {
    if by == 0 {
        return e;
    }
    match e {
        SmilesError::UnmatchedRingClosure { label, offset } => SmilesError::UnmatchedRingClosure { label, offset: offset + by },
        SmilesError::UnknownElement { symbol, offset } => SmilesError::UnknownElement { symbol, offset: offset + by },
        SmilesError::UnbalancedParentheses { offset } => SmilesError::UnbalancedParentheses { offset: offset + by },
        SmilesError::UnexpectedChar { ch, offset } => SmilesError::UnexpectedChar { ch, offset: offset + by },
        SmilesError::UnterminatedBracket { offset } => SmilesError::UnterminatedBracket { offset: offset + by },
        SmilesError::RingBondConflict { offset } => SmilesError::RingBondConflict { offset: offset + by },
        other => other,
    }
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        while let Some(c) = self.peek() {
            let offset = self.pos;
            match c {
                b'(' => {
                    let prev = self.prev.ok_or(SmilesError::UnbalancedParentheses { offset })?;
                    self.branches.push((prev, offset));
                    self.pos += 1;
                }
                b')' => {
                    let (atom, _) = self.branches.pop().ok_or(SmilesError::UnbalancedParentheses { offset })?;
                    if self.pending.is_some() {
                        return Err(SmilesError::UnexpectedChar { ch: ')', offset });
                    }
                    self.prev = Some(atom);
                    self.pos += 1;
                }
                b'.' => {
                    if self.pending.is_some() {
                        return Err(SmilesError::UnexpectedChar { ch: '.', offset });
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.pending.is_some() || self.prev.is_none() {
                        return Err(SmilesError::UnexpectedChar { ch: c as char, offset });
                    }
                    self.pending = Some(match c {
                        b'-' => BondSymbol { order: Some(BondOrder::Single), stereo: None },
                        b'=' => BondSymbol { order: Some(BondOrder::Double), stereo: None },
                        b'#' => BondSymbol { order: Some(BondOrder::Triple), stereo: None },
                        b':' => BondSymbol { order: Some(BondOrder::Aromatic), stereo: None },
                        b'/' => BondSymbol { order: Some(BondOrder::Single), stereo: Some(BondStereo::Up) },
                        _ => BondSymbol { order: Some(BondOrder::Single), stereo: Some(BondStereo::Down) },
                    });
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom, offset);
                }
                _ => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom, offset);
                }
            }
        }
        if let Some(&(_, offset)) = self.branches.first() {
            return Err(SmilesError::UnbalancedParentheses { offset });
        }
        if self.pending.is_some() {
            return Err(SmilesError::UnexpectedChar { ch: self.text[self.pos - 1] as char, offset: self.pos - 1 });
        }
        if let Some((&label, open)) = self.rings.iter().min_by_key(|(_, o)| o.offset) {
            return Err(SmilesError::UnmatchedRingClosure { label, offset: open.offset });
        }
        Ok(())
    }

    fn add_atom(&mut self, atom: Atom, offset: usize) {
        let idx = self.atoms.len();
        let aromatic = atom.aromatic;
        self.atoms.push(atom);
        self.atom_offsets.push(offset);
        if let Some(prev) = self.prev {
            let sym = self.pending.take();
            let order = self.implicit_order(sym, prev, aromatic);
            self.bonds.push(Bond { a: prev, b: idx, order, stereo: sym.and_then(|s| s.stereo) });
        }
        self.prev = Some(idx);
    }

    fn implicit_order(&self, sym: Option<BondSymbol>, a: usize, b_aromatic: bool) -> BondOrder {
        match sym.and_then(|s| s.order) {
            Some(order) => order,
            None if self.atoms[a].aromatic && b_aromatic => BondOrder::Aromatic,
            None => BondOrder::Single,
        }
    }

    fn ring_closure(&mut self) -> Result<(), SmilesError> {
        let offset = self.pos;
        let label = if self.text[self.pos] == b'%' {
            let digits = self.text.get(self.pos + 1..self.pos + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    ((d[0] - b'0') as u32) * 10 + (d[1] - b'0') as u32
                }
                _ => return Err(SmilesError::UnexpectedChar { ch: '%', offset }),
            }
        } else {
            self.pos += 1;
            (self.text[offset] - b'0') as u32
        };
        let atom = self.prev.ok_or(SmilesError::UnexpectedChar { ch: self.text[offset] as char, offset })?;
        let sym = self.pending.take();
        match self.rings.remove(&label) {
            None => {
                self.rings.insert(label, RingOpen { atom, bond: sym, offset });
            }
            Some(open) => {
                let order = match (open.bond.and_then(|s| s.order), sym.and_then(|s| s.order)) {
                    (Some(x), Some(y)) if x != y => {
                        // `/` and `-` are both single; anything else must agree.
                        return Err(SmilesError::RingBondConflict { offset });
                    }
                    (Some(x), _) | (None, Some(x)) => x,
                    (None, None) => {
                        if self.atoms[open.atom].aromatic && self.atoms[atom].aromatic {
                            BondOrder::Aromatic
                        } else {
                            BondOrder::Single
                        }
                    }
                };
                let stereo = sym.and_then(|s| s.stereo).or(open.bond.and_then(|s| s.stereo));
                self.bonds.push(Bond { a: open.atom, b: atom, order, stereo });
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let offset = self.pos;
        let c = self.text[self.pos];
        let two = self.text.get(self.pos..self.pos + 2);
        let (element, aromatic, len) = match (c, two) {
            (b'C', Some(b"Cl")) => (Element::CL, false, 2),
            (b'B', Some(b"Br")) => (Element::BR, false, 2),
            (b'B', _) => (Element::B, false, 1),
            (b'C', _) => (Element::C, false, 1),
            (b'N', _) => (Element::N, false, 1),
            (b'O', _) => (Element::O, false, 1),
            (b'P', _) => (Element::P, false, 1),
            (b'S', _) => (Element::S, false, 1),
            (b'F', _) => (Element::F, false, 1),
            (b'I', _) => (Element::I, false, 1),
            (b'b', _) => (Element::B, true, 1),
            (b'c', _) => (Element::C, true, 1),
            (b'n', _) => (Element::N, true, 1),
            (b'o', _) => (Element::O, true, 1),
            (b'p', _) => (Element::P, true, 1),
            (b's', _) => (Element::S, true, 1),
            _ if c.is_ascii_alphabetic() => return Err(SmilesError::UnknownElement { symbol: (c as char).to_string(), offset }),
            _ => return Err(SmilesError::UnexpectedChar { ch: c as char, offset }),
        };
        self.pos += len;
        Ok(Atom { aromatic, ..Atom::new(element) })
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let start = self.pos;
        let end = self.text[start..]
            .iter()
            .position(|&b| b == b']')
            .map(|p| start + p)
            .ok_or(SmilesError::UnterminatedBracket { offset: start })?;
        let body = &self.text[start + 1..end];
        let mut i = 0;
        let at = |i: usize| body.get(i).copied();

        let mut isotope = None;
        let iso_start = i;
        while at(i).is_some_and(|b| b.is_ascii_digit()) {
            i += 1;
        }
        if i > iso_start {
            let digits = std::str::from_utf8(&body[iso_start..i]).unwrap();
            isotope = Some(
                digits
                    .parse::<u16>()
                    .map_err(|_| SmilesError::UnexpectedChar { ch: body[iso_start] as char, offset: start + 1 + iso_start })?,
            );
        }

        let sym_offset = start + 1 + i;
        let (element, aromatic) = match at(i) {
            Some(c) if c.is_ascii_uppercase() => {
                let two = at(i + 1).filter(|b| b.is_ascii_lowercase()).map(|b| format!("{}{}", c as char, b as char));
                match two.as_deref().and_then(Element::from_symbol) {
                    Some(e) => {
                        i += 2;
                        (e, false)
                    }
                    None => match Element::from_symbol(&(c as char).to_string()) {
                        Some(e) => {
                            i += 1;
                            (e, false)
                        }
                        None => {
                            let symbol = two.unwrap_or_else(|| (c as char).to_string());
                            return Err(SmilesError::UnknownElement { symbol, offset: sym_offset });
                        }
                    },
                }
            }
            Some(c) if c.is_ascii_lowercase() => {
                let pair = at(i + 1).map(|b| [c, b]);
                let (sym, len) = match pair {
                    Some(p) if &p == b"se" || &p == b"as" || &p == b"te" => (String::from_utf8(p.to_vec()).unwrap(), 2),
                    _ => ((c as char).to_string(), 1),
                };
                let mut upper = sym.clone();
                upper[..1].make_ascii_uppercase();
                match Element::from_symbol(&upper).filter(|e| e.can_be_aromatic()) {
                    Some(e) => {
                        i += len;
                        (e, true)
                    }
                    None => return Err(SmilesError::UnknownElement { symbol: sym, offset: sym_offset }),
                }
            }
            Some(b'*') => {
                return Err(SmilesError::UnknownElement { symbol: "*".into(), offset: sym_offset });
            }
            Some(c) => return Err(SmilesError::UnexpectedChar { ch: c as char, offset: sym_offset }),
            None => return Err(SmilesError::UnexpectedChar { ch: ']', offset: end }),
        };

        let mut chirality = None;
        if at(i) == Some(b'@') {
            i += 1;
            chirality = Some(Chirality::Anticlockwise);
            if at(i) == Some(b'@') {
                i += 1;
                chirality = Some(Chirality::Clockwise);
            } else {
                // Extended forms (@TH1, @SP2, @OH15 ...) are skipped.
                while at(i).is_some_and(|b| b.is_ascii_uppercase() && b != b'H') {
                    i += 1;
                }
                while at(i).is_some_and(|b| b.is_ascii_digit()) {
                    i += 1;
                }
            }
        }

        let mut hydrogens = 0u8;
        if at(i) == Some(b'H') {
            i += 1;
            hydrogens = 1;
            if let Some(d) = at(i).filter(u8::is_ascii_digit) {
                hydrogens = d - b'0';
                i += 1;
            }
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = at(i) {
            let s = if sign == b'+' { 1 } else { -1 };
            i += 1;
            let digit_start = i;
            while at(i).is_some_and(|b| b.is_ascii_digit()) {
                i += 1;
            }
            if i > digit_start {
                let mag: i32 = std::str::from_utf8(&body[digit_start..i]).unwrap().parse().unwrap_or(0);
                charge = s * mag;
            } else {
                charge = s;
                while at(i) == Some(sign) {
                    charge += s;
                    i += 1;
                }
            }
        }

        if at(i) == Some(b':') {
            i += 1;
            while at(i).is_some_and(|b| b.is_ascii_digit()) {
                i += 1;
            }
        }

        if i != body.len() {
            return Err(SmilesError::UnexpectedChar { ch: body[i] as char, offset: start + 1 + i });
        }
        self.pos = end + 1;
        Ok(Atom {
            element,
            charge: charge.clamp(i8::MIN as i32, i8::MAX as i32) as i8,
            isotope,
            hydrogens,
            aromatic,
            bracket: true,
            chirality,
            valence_override: false,
        })
    }
}

/// Parses one line of a SMILES file: `SMILES[<tab or space>name]`.
pub fn parse_smiles_line(line: &str) -> Option<(&str, Option<&str>)> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.trim().is_empty() || line.trim_start().starts_with('#') {
        return None;
    }
    let mut parts = line.splitn(2, ['\t', ' ']);
    let smiles = parts.next()?.trim();
    let name = parts.next().map(str::trim).filter(|s| !s.is_empty());
    Some((smiles, name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn methane_gets_four_hydrogens() {
        let g = parse_smiles("C").unwrap();
        assert_eq!(g.atom_count(), 1);
        assert_eq!(g.atom(0).hydrogens, 4);
    }

    #[test]
    fn benzene_ring_and_hydrogens() {
        let g = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(g.atom_count(), 6);
        assert!(g.atoms().iter().all(|a| a.aromatic && a.hydrogens == 1));
        assert_eq!(g.rings().len(), 1);
        assert_eq!(g.rings()[0].len(), 6);
    }

    #[test]
    fn unmatched_ring_closure_reports_offset() {
        assert_eq!(parse_smiles("C1CC").unwrap_err(), SmilesError::UnmatchedRingClosure { label: 1, offset: 1 });
    }

    #[test]
    fn unbalanced_parentheses() {
        assert!(matches!(parse_smiles("CC(C").unwrap_err(), SmilesError::UnbalancedParentheses { offset: 2 }));
        assert!(matches!(parse_smiles("CC)C").unwrap_err(), SmilesError::UnbalancedParentheses { offset: 2 }));
    }

    #[test]
    fn unknown_element() {
        assert!(matches!(parse_smiles("CXC").unwrap_err(), SmilesError::UnknownElement { offset: 1, .. }));
        assert!(matches!(parse_smiles("C[Xx]").unwrap_err(), SmilesError::UnknownElement { offset: 2, .. }));
    }

    #[test]
    fn valence_violation_carries_offset() {
        let err = parse_smiles("CC(C)(C)(C)(C)C").unwrap_err();
        assert!(matches!(err, SmilesError::Graph { source: GraphError::Valence { .. }, offset: 1 }), "{err:?}");
    }

    #[test]
    fn bracket_atoms() {
        let g = parse_smiles("[13CH3][NH3+]").unwrap();
        assert_eq!(g.atom(0).isotope, Some(13));
        assert_eq!(g.atom(0).hydrogens, 3);
        assert_eq!(g.atom(1).charge, 1);
        assert_eq!(g.atom(1).hydrogens, 3);
        let g = parse_smiles("[O-]C(=O)C").unwrap();
        assert_eq!(g.atom(0).charge, -1);
        let g = parse_smiles("[Fe++]").unwrap();
        assert_eq!(g.atom(0).charge, 2);
        let g = parse_smiles("[Cl-].[Na+]").unwrap();
        assert_eq!(g.components().len(), 2);
    }

    #[test]
    fn percent_ring_closures_and_stereo_marks() {
        let g = parse_smiles("C%12CCCCC%12").unwrap();
        assert_eq!(g.rings().len(), 1);
        let g = parse_smiles("F/C=C/F").unwrap();
        assert_eq!(g.bond(0).stereo, Some(BondStereo::Up));
        let g = parse_smiles("N[C@@H](C)C(=O)O").unwrap();
        assert_eq!(g.atom(1).chirality, Some(Chirality::Clockwise));
    }

    #[test]
    fn explicit_bond_orders() {
        let g = parse_smiles("C#N").unwrap();
        assert_eq!(g.bond(0).order, BondOrder::Triple);
        assert_eq!(g.atom(0).hydrogens, 1);
        let g = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        assert_eq!(g.bonds().iter().filter(|b| b.order == BondOrder::Single).count(), 1);
    }

    #[test]
    fn empty_and_whitespace() {
        assert_eq!(parse_smiles("").unwrap_err(), SmilesError::Empty);
        assert_eq!(parse_smiles("   ").unwrap_err(), SmilesError::Empty);
    }

    #[test]
    fn smiles_lines() {
        assert_eq!(parse_smiles_line("CCO\tethanol"), Some(("CCO", Some("ethanol"))));
        assert_eq!(parse_smiles_line("CCO"), Some(("CCO", None)));
        assert_eq!(parse_smiles_line("  "), None);
    }
}
