//! Canonical SMILES writer.
//!
//! Atoms are visited depth-first from the lowest canonical rank of each
//! component; neighbours are explored in rank order and ring-closure digits
//! are reused lowest-first. Output is aromatic (lowercase) where the graph is
//! aromatic and never carries stereo marks.

use std::fmt::Write;

use crate::aromatic::implied_aromatic_hydrogens;
use crate::canon::canonical_order;
use crate::graph::{Atom, BondOrder, MolecularGraph};

/// Writes the canonical SMILES of `g`. Isomorphic graphs yield identical strings.
pub fn write_smiles(g: &MolecularGraph) -> String {
    if g.is_empty() {
        return String::new();
    }
    let order = canonical_order(g);
    let n = g.atom_count();

    // Sorted neighbour lists by canonical order.
    let nbrs: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|i| {
            let mut v = g.neighbors(i).to_vec();
            v.sort_by_key(|&(j, _)| order[j]);
            v
        })
        .collect();

    // Pass 1: DFS spanning forest; non-tree bonds become ring closures,
    // recorded at both endpoints.
    let mut visited = vec![false; n];
    let mut tree_bond = vec![false; g.bond_count()];
    let mut roots: Vec<usize> = Vec::new();
    let mut start_order: Vec<usize> = (0..n).collect();
    start_order.sort_by_key(|&i| order[i]);
    for &s in &start_order {
        if visited[s] {
            continue;
        }
        roots.push(s);
        dfs_tree(s, &nbrs, &mut visited, &mut tree_bond);
    }

    // Visit order of atoms, used to decide where closures open.
    let mut out = String::new();
    let mut state = WriteState {
        g,
        nbrs: &nbrs,
        tree_bond: &tree_bond,
        visited: vec![false; n],
        open: Vec::new(),
        closure_at: vec![Vec::new(); n],
        free_digits: Vec::new(),
        next_digit: 1,
    };
    // Pre-compute closure bonds per atom in canonical neighbour order.
    for (i, list) in nbrs.iter().enumerate() {
        for &(j, b) in list {
            if !tree_bond[b] {
                state.closure_at[i].push((j, b));
            }
        }
    }
    for (k, &root) in roots.iter().enumerate() {
        if k > 0 {
            out.push('.');
        }
        state.emit(root, None, &mut out);
    }
    out
}

fn dfs_tree(start: usize, nbrs: &[Vec<(usize, usize)>], visited: &mut [bool], tree_bond: &mut [bool]) {
    let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
    visited[start] = true;
    while let Some(&mut (u, ref mut k)) = stack.last_mut() {
        if *k < nbrs[u].len() {
            let (v, b) = nbrs[u][*k];
            *k += 1;
            if !visited[v] {
                visited[v] = true;
                tree_bond[b] = true;
                stack.push((v, 0));
            }
        } else {
            stack.pop();
        }
    }
}

struct WriteState<'a> {
    g: &'a MolecularGraph,
    nbrs: &'a [Vec<(usize, usize)>],
    tree_bond: &'a [bool],
    visited: Vec<bool>,
    /// Open ring closures: (digit, bond).
    open: Vec<(u32, usize)>,
    closure_at: Vec<Vec<(usize, usize)>>,
    free_digits: Vec<u32>,
    next_digit: u32,
}

impl WriteState<'_> {
    fn take_digit(&mut self) -> u32 {
        if !self.free_digits.is_empty() {
            self.free_digits.sort_unstable();
            return self.free_digits.remove(0);
        }
        let d = self.next_digit;
        self.next_digit += 1;
        d
    }

    fn emit(&mut self, root: usize, _from: Option<usize>, out: &mut String) {
        // Iterative DFS would complicate branch emission; molecules are small
        // enough that recursion depth is bounded by atom count.
        self.emit_atom(root, None, out);
    }

    fn emit_atom(&mut self, u: usize, via: Option<usize>, out: &mut String) {
        let g = self.g;
        self.visited[u] = true;
        if let Some(b) = via {
            out.push_str(bond_symbol(g, b));
        }
        write_atom(g, u, out);

        // Ring closures at this atom: close ones already opened, open new ones.
        let closures = self.closure_at[u].clone();
        for (v, b) in closures {
            if let Some(pos) = self.open.iter().position(|&(_, ob)| ob == b) {
                let (digit, _) = self.open.remove(pos);
                out.push_str(bond_symbol(g, b));
                push_digit(digit, out);
                self.free_digits.push(digit);
            } else if !self.visited[v] {
                let digit = self.take_digit();
                push_digit(digit, out);
                self.open.push((digit, b));
            }
        }

        let children: Vec<(usize, usize)> = self.nbrs[u].iter().copied().filter(|&(v, b)| self.tree_bond[b] && !self.visited[v]).collect();
        let last = children.len().saturating_sub(1);
        for (k, (v, b)) in children.into_iter().enumerate() {
            if k < last {
                out.push('(');
                self.emit_atom(v, Some(b), out);
                out.push(')');
            } else {
                self.emit_atom(v, Some(b), out);
            }
        }
    }
}

fn push_digit(d: u32, out: &mut String) {
    if d < 10 {
        let _ = write!(out, "{d}");
    } else {
        let _ = write!(out, "%{d:02}");
    }
}

fn bond_symbol(g: &MolecularGraph, b: usize) -> &'static str {
    let bond = g.bond(b);
    match bond.order {
        BondOrder::Aromatic => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Single => {
            if g.atom(bond.a).aromatic && g.atom(bond.b).aromatic {
                "-"
            } else {
                ""
            }
        }
    }
}

/// Hydrogens the reader would assign to this atom if written without brackets.
fn implied_hydrogens(g: &MolecularGraph, i: usize, atom: &Atom) -> Option<u8> {
    if atom.aromatic {
        let bonded: u8 = g
            .neighbors(i)
            .iter()
            .map(|&(_, b)| match g.bond(b).order {
                BondOrder::Double => 2,
                BondOrder::Triple => 3,
                _ => 1,
            })
            .sum();
        implied_aromatic_hydrogens(atom.element, bonded)
    } else {
        let used: u8 = g.neighbors(i).iter().map(|&(_, b)| g.kekule_order(b)).sum();
        atom.element.default_valence_at_least(used).map(|v| v - used)
    }
}

fn write_atom(g: &MolecularGraph, i: usize, out: &mut String) {
    let atom = g.atom(i);
    let bare = atom.element.in_organic_subset()
        && atom.charge == 0
        && atom.isotope.is_none()
        && implied_hydrogens(g, i, atom) == Some(atom.hydrogens);
    let symbol = if atom.aromatic { atom.element.symbol().to_ascii_lowercase() } else { atom.element.symbol().to_string() };
    if bare {
        out.push_str(&symbol);
        return;
    }
    out.push('[');
    if let Some(iso) = atom.isotope {
        let _ = write!(out, "{iso}");
    }
    out.push_str(&symbol);
    match atom.hydrogens {
        0 => {}
        1 => out.push('H'),
        h => {
            let _ = write!(out, "H{h}");
        }
    }
    match atom.charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => {
            let _ = write!(out, "+{c}");
        }
        c => {
            let _ = write!(out, "-{}", -(c as i16));
        }
    }
    out.push(']');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    fn canon(s: &str) -> String {
        write_smiles(&parse_smiles(s).unwrap())
    }

    #[test]
    fn isomorphic_inputs_share_output() {
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("c1ccccc1C"), canon("Cc1ccccc1"));
        assert_eq!(canon("C1=CC=CC=C1"), canon("c1ccccc1"));
    }

    #[test]
    fn single_atom() {
        assert_eq!(canon("C"), "C");
        assert_eq!(canon("[NH4+]"), "[NH4+]");
    }

    #[test]
    fn round_trip_aspirin() {
        let g = parse_smiles("CC(=O)Oc1ccccc1C(=O)O").unwrap();
        let s = write_smiles(&g);
        let h = parse_smiles(&s).unwrap();
        assert_eq!(write_smiles(&h), s);
        assert_eq!(h.atom_count(), g.atom_count());
    }

    #[test]
    fn brackets_where_needed() {
        assert!(canon("c1cc[nH]c1").contains("[nH]"));
        assert!(canon("[13CH4]").starts_with("[13CH4]"));
        assert!(canon("C[O-]").contains("[O-]"));
        assert_eq!(canon("[CH3]"), "[CH3]");
    }

    #[test]
    fn biphenyl_keeps_explicit_single() {
        let s = canon("c1ccccc1-c1ccccc1");
        assert!(s.contains('-'), "{s}");
        assert_eq!(canon(&s), s);
    }

    #[test]
    fn disconnected_components() {
        let s = canon("[Na+].[Cl-]");
        assert_eq!(canon(&s), s);
        assert_eq!(s.matches('.').count(), 1);
    }

    #[test]
    fn many_ring_closures() {
        // coronene
        let s = canon("c1cc2ccc3ccc4ccc5ccc6ccc1c7c2c3c4c5c67");
        assert_eq!(canon(&s), s);
    }
}
