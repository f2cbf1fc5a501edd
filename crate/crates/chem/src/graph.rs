//! Molecular graph representation.
//!
//! A [`MolecularGraph`] is immutable once built. Construction goes through a
//! single pipeline ([`MolecularGraph::new`]) shared by the SMILES parser and
//! the structure-editing operators: bond validation, ring perception,
//! kekulization of aromatic systems, hydrogen assignment, valence checks and
//! Hückel aromaticity perception.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aromatic;
use crate::element::{isotope_mass, Element};
use crate::rings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Integer bond-type code (1, 2, 3, 12 for aromatic) used in hashed invariants.
    pub fn code(self) -> u32 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 12,
        }
    }

    pub fn from_kekule(order: u8) -> BondOrder {
        match order {
            2 => BondOrder::Double,
            3 => BondOrder::Triple,
            _ => BondOrder::Single,
        }
    }
}

/// Directional bond marker (`/` or `\`). Recorded, not interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BondStereo {
    Up,
    Down,
}

/// Tetrahedral marker (`@` / `@@`). Recorded, not interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chirality {
    Anticlockwise,
    Clockwise,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    pub isotope: Option<u16>,
    /// Total attached hydrogens. For bracket atoms this is the written count;
    /// otherwise it is filled in from the valence model during construction.
    pub hydrogens: u8,
    pub aromatic: bool,
    /// Hydrogen count is explicit (bracket atom) and must not be recomputed.
    pub bracket: bool,
    pub chirality: Option<Chirality>,
    /// Skip the valence check for this atom.
    pub valence_override: bool,
}

impl Atom {
    /// An uncharged, non-bracket atom whose hydrogens come from the valence model.
    pub fn new(element: Element) -> Atom {
        Atom { element, charge: 0, isotope: None, hydrogens: 0, aromatic: false, bracket: false, chirality: None, valence_override: false }
    }

    pub fn aromatic(element: Element) -> Atom {
        Atom { aromatic: true, ..Atom::new(element) }
    }

    /// Atomic mass including isotope labelling (hydrogens excluded).
    pub fn mass(&self) -> f64 {
        match self.isotope {
            Some(iso) => isotope_mass(self.element, iso),
            None => self.element.mass(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub stereo: Option<BondStereo>,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Bond {
        Bond { a, b, order, stereo: None }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("bond {bond} references missing atom {atom}")]
    MissingAtom { bond: usize, atom: usize },
    #[error("atom {atom} is bonded to itself")]
    SelfBond { atom: usize },
    #[error("duplicate bond between atoms {a} and {b}")]
    DuplicateBond { a: usize, b: usize },
    #[error("atom {atom} is marked aromatic but is not in a ring")]
    AromaticOutsideRing { atom: usize },
    #[error("aromatic bond between atoms {a} and {b} requires both atoms aromatic")]
    AromaticBond { a: usize, b: usize },
    #[error("cannot kekulize aromatic system at atom {atom}")]
    Kekulize { atom: usize },
    #[error("atom {atom} ({element}) has invalid valence {valence}")]
    Valence { atom: usize, element: Element, valence: u8 },
}

impl GraphError {
    /// Atom the error is anchored to, if any.
    pub fn atom(&self) -> Option<usize> {
        match *self {
            GraphError::MissingAtom { .. } => None,
            GraphError::SelfBond { atom }
            | GraphError::AromaticOutsideRing { atom }
            | GraphError::Kekulize { atom }
            | GraphError::Valence { atom, .. } => Some(atom),
            GraphError::DuplicateBond { b, .. } | GraphError::AromaticBond { b, .. } => Some(b),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MolecularGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// Kekulé bond orders (1..=3), parallel to `bonds`.
    kekule: Vec<u8>,
    adjacency: Vec<Vec<(usize, usize)>>,
    rings: Vec<Vec<usize>>,
    ring_bond: Vec<bool>,
}

impl PartialEq for MolecularGraph {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms && self.bonds == other.bonds
    }
}

impl MolecularGraph {
    /// Builds and validates a graph. Hydrogen counts of non-bracket atoms are
    /// recomputed; aromaticity is perceived on top of any flags already set.
    pub fn new(mut atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<MolecularGraph, GraphError> {
        let n = atoms.len();
        let mut seen = HashSet::new();
        let mut adjacency = vec![Vec::new(); n];
        for (i, bond) in bonds.iter().enumerate() {
            for atom in [bond.a, bond.b] {
                if atom >= n {
                    return Err(GraphError::MissingAtom { bond: i, atom });
                }
            }
            if bond.a == bond.b {
                return Err(GraphError::SelfBond { atom: bond.a });
            }
            let key = (bond.a.min(bond.b), bond.a.max(bond.b));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateBond { a: key.0, b: key.1 });
            }
            if bond.order == BondOrder::Aromatic && !(atoms[bond.a].aromatic && atoms[bond.b].aromatic) {
                return Err(GraphError::AromaticBond { a: bond.a, b: bond.b });
            }
            adjacency[bond.a].push((bond.b, i));
            adjacency[bond.b].push((bond.a, i));
        }

        let ring_bond = rings::ring_bonds(n, &bonds, &adjacency);
        let ring_list = rings::sssr(n, &bonds, &adjacency, &ring_bond);
        let mut in_ring = vec![false; n];
        for ring in &ring_list {
            for &a in ring {
                in_ring[a] = true;
            }
        }
        if let Some(atom) = (0..n).find(|&i| atoms[i].aromatic && !in_ring[i]) {
            return Err(GraphError::AromaticOutsideRing { atom });
        }

        let kekule = aromatic::kekulize(&atoms, &bonds, &adjacency)?;
        for (i, atom) in atoms.iter_mut().enumerate() {
            let used: u8 = adjacency[i].iter().map(|&(_, b)| kekule[b]).sum();
            if atom.bracket {
                let total = used + atom.hydrogens;
                if !atom.valence_override {
                    match atom.element.allowed_valences(atom.charge) {
                        Some(vals) if vals.iter().any(|&v| v >= total) => {}
                        Some(_) => return Err(GraphError::Valence { atom: i, element: atom.element, valence: total }),
                        None => atom.valence_override = true,
                    }
                }
            } else {
                let allowed = atom.element.allowed_valences(atom.charge);
                match allowed.and_then(|vals| vals.iter().copied().find(|&v| v >= used)) {
                    Some(v) => atom.hydrogens = v - used,
                    None if atom.valence_override || allowed.is_none() => {
                        atom.valence_override = true;
                        atom.hydrogens = 0;
                    }
                    None => return Err(GraphError::Valence { atom: i, element: atom.element, valence: used }),
                }
            }
        }

        let mut bonds = bonds;
        aromatic::perceive(&mut atoms, &mut bonds, &kekule, &adjacency, &ring_list);

        Ok(MolecularGraph { atoms, bonds, kekule, adjacency, rings: ring_list, ring_bond })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bond(&self, i: usize) -> &Bond {
        &self.bonds[i]
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Smallest set of smallest rings, each as an ordered atom cycle.
    pub fn rings(&self) -> &[Vec<usize>] {
        &self.rings
    }

    /// `(neighbour atom, bond index)` pairs for atom `i`.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    /// Number of explicit (heavy-atom graph) neighbours.
    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Neighbours plus attached hydrogens.
    pub fn total_degree(&self, i: usize) -> usize {
        self.adjacency[i].len() + self.atoms[i].hydrogens as usize
    }

    pub fn kekule_order(&self, bond: usize) -> u8 {
        self.kekule[bond]
    }

    /// Sum of Kekulé bond orders plus hydrogens.
    pub fn valence(&self, i: usize) -> u8 {
        self.adjacency[i].iter().map(|&(_, b)| self.kekule[b]).sum::<u8>() + self.atoms[i].hydrogens
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring_bond[bond]
    }

    pub fn in_ring(&self, atom: usize) -> bool {
        self.rings.iter().any(|r| r.contains(&atom))
    }

    /// Number of SSSR rings containing `atom`.
    pub fn ring_count_of(&self, atom: usize) -> usize {
        self.rings.iter().filter(|r| r.contains(&atom)).count()
    }

    pub fn in_ring_of_size(&self, atom: usize, size: usize) -> bool {
        self.rings.iter().any(|r| r.len() == size && r.contains(&atom))
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a].iter().find(|&&(n, _)| n == b).map(|&(_, bond)| bond)
    }

    /// Count of non-hydrogen atoms.
    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.element != Element::H).count()
    }

    pub fn hydrogen_count(&self) -> usize {
        self.atoms.iter().map(|a| a.hydrogens as usize).sum::<usize>() + self.atoms.iter().filter(|a| a.element == Element::H).count()
    }

    /// Connected components as sorted atom lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = id;
                        members.push(v);
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Atoms and bonds in Kekulé form with aromatic flags cleared, ready for
    /// editing and re-submission to [`MolecularGraph::new`].
    pub fn kekule_parts(&self) -> (Vec<Atom>, Vec<Bond>) {
        let atoms = self.atoms.iter().map(|a| Atom { aromatic: false, ..a.clone() }).collect();
        let bonds = self.bonds.iter().zip(&self.kekule).map(|(b, &k)| Bond { order: BondOrder::from_kekule(k), ..b.clone() }).collect();
        (atoms, bonds)
    }

    /// Relabels atoms: new index of old atom `i` is `perm[i]`. Atom records,
    /// bond orders and the Kekulé assignment carry over unchanged; only the
    /// ring set is recomputed under the new numbering.
    pub fn permuted(&self, perm: &[usize]) -> MolecularGraph {
        let n = self.atoms.len();
        assert_eq!(perm.len(), n);
        let mut slots = vec![None; n];
        for (old, &new) in perm.iter().enumerate() {
            slots[new] = Some(self.atoms[old].clone());
        }
        let atoms: Vec<Atom> = slots.into_iter().map(|a| a.expect("perm is a permutation")).collect();
        let bonds: Vec<Bond> = self.bonds.iter().map(|b| Bond { a: perm[b.a], b: perm[b.b], ..b.clone() }).collect();
        let mut adjacency = vec![Vec::new(); n];
        for (i, b) in bonds.iter().enumerate() {
            adjacency[b.a].push((b.b, i));
            adjacency[b.b].push((b.a, i));
        }
        let ring_bond = rings::ring_bonds(n, &bonds, &adjacency);
        let rings = rings::sssr(n, &bonds, &adjacency, &ring_bond);
        MolecularGraph { atoms, bonds, kekule: self.kekule.clone(), adjacency, rings, ring_bond }
    }
}
