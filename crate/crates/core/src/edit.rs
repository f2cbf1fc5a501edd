//! Graph edits shared by the generator and the genetic optimizer.
//!
//! Every edit starts from the Kekulé form of a valid graph and hands the
//! result back to [`MolecularGraph::new`], which recomputes implicit
//! hydrogens, re-perceives aromaticity and rejects valence violations. An
//! edit that does not survive that check yields `None`. Stereo marks are
//! dropped on edited products.

use molpilot_chem::{Atom, Bond, BondOrder, Element, MolecularGraph};
use rand::seq::IndexedRandom;
use rand::Rng;

#[derive(Debug, Clone)]
struct Parts {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
}

impl Parts {
    fn of(g: &MolecularGraph) -> Parts {
        let (mut atoms, mut bonds) = g.kekule_parts();
        for a in &mut atoms {
            a.chirality = None;
        }
        for b in &mut bonds {
            b.stereo = None;
        }
        Parts { atoms, bonds }
    }

    fn build(self) -> Option<MolecularGraph> {
        let g = MolecularGraph::new(self.atoms, self.bonds).ok()?;
        (!g.is_empty()).then_some(g)
    }

    /// Appends `other`, returning the index offset of its atoms.
    fn extend(&mut self, other: Parts) -> usize {
        let offset = self.atoms.len();
        self.atoms.extend(other.atoms);
        self.bonds.extend(other.bonds.into_iter().map(|b| Bond { a: b.a + offset, b: b.b + offset, ..b }));
        offset
    }

    /// Uses one hydrogen of atom `i` for a new bond. Non-bracket atoms get
    /// their hydrogens recomputed anyway; bracket atoms keep a written count.
    fn spend_hydrogen(&mut self, i: usize, n: u8) {
        let a = &mut self.atoms[i];
        if a.bracket {
            a.hydrogens = a.hydrogens.saturating_sub(n);
        }
    }

    fn give_hydrogen(&mut self, i: usize, n: u8) {
        let a = &mut self.atoms[i];
        if a.bracket {
            a.hydrogens += n;
        }
    }

    fn remove_atom(&mut self, i: usize) {
        let mut freed = Vec::new();
        self.bonds.retain(|b| {
            if b.a == i || b.b == i {
                freed.push((b.other(i), kekule_order(b.order)));
                false
            } else {
                true
            }
        });
        for (j, order) in freed {
            self.give_hydrogen(j, order);
        }
        self.atoms.remove(i);
        for b in &mut self.bonds {
            if b.a > i {
                b.a -= 1;
            }
            if b.b > i {
                b.b -= 1;
            }
        }
    }
}

fn kekule_order(order: BondOrder) -> u8 {
    match order {
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        _ => 1,
    }
}

fn is_heavy(a: &Atom) -> bool {
    a.element != Element::H
}

/// Heavy atoms carrying at least `n` hydrogens.
pub fn open_sites(g: &MolecularGraph, n: u8) -> Vec<usize> {
    (0..g.atom_count()).filter(|&i| is_heavy(g.atom(i)) && g.atom(i).hydrogens >= n).collect()
}

/// Bonds `a[ia]` to `b[ib]` with a single bond.
pub fn join(a: &MolecularGraph, ia: usize, b: &MolecularGraph, ib: usize) -> Option<MolecularGraph> {
    let mut parts = Parts::of(a);
    let offset = parts.extend(Parts::of(b));
    let jb = ib + offset;
    parts.spend_hydrogen(ia, 1);
    parts.spend_hydrogen(jb, 1);
    parts.bonds.push(Bond::new(ia, jb, BondOrder::Single));
    parts.build()
}

/// Joins at random open sites of each molecule.
pub fn join_random<R: Rng>(a: &MolecularGraph, b: &MolecularGraph, rng: &mut R) -> Option<MolecularGraph> {
    let ia = *open_sites(a, 1).choose(rng)?;
    let ib = *open_sites(b, 1).choose(rng)?;
    join(a, ia, b, ib)
}

const APPEND_ELEMENTS: [Element; 6] = [Element::C, Element::C, Element::N, Element::O, Element::F, Element::CL];

pub fn append_atom<R: Rng>(g: &MolecularGraph, rng: &mut R) -> Option<MolecularGraph> {
    let site = *open_sites(g, 1).choose(rng)?;
    let element = *APPEND_ELEMENTS.choose(rng)?;
    let mut parts = Parts::of(g);
    parts.spend_hydrogen(site, 1);
    parts.atoms.push(Atom::new(element));
    let new = parts.atoms.len() - 1;
    parts.bonds.push(Bond::new(site, new, BondOrder::Single));
    parts.build()
}

/// Removes a heavy atom with exactly one neighbour.
pub fn delete_terminal<R: Rng>(g: &MolecularGraph, rng: &mut R) -> Option<MolecularGraph> {
    if g.heavy_atom_count() < 2 {
        return None;
    }
    let terminals: Vec<usize> = (0..g.atom_count()).filter(|&i| is_heavy(g.atom(i)) && g.degree(i) == 1).collect();
    let victim = *terminals.choose(rng)?;
    let mut parts = Parts::of(g);
    parts.remove_atom(victim);
    parts.build()
}

fn other_multiple_bond(g: &MolecularGraph, atom: usize, except: usize) -> bool {
    g.neighbors(atom).iter().any(|&(_, b)| b != except && g.bond(b).order != BondOrder::Single)
}

/// Raises or lowers the order of a non-aromatic bond by one.
pub fn change_bond_order<R: Rng>(g: &MolecularGraph, rng: &mut R) -> Option<MolecularGraph> {
    let candidates: Vec<usize> = (0..g.bond_count())
        .filter(|&b| {
            let bond = g.bond(b);
            bond.order != BondOrder::Aromatic && is_heavy(g.atom(bond.a)) && is_heavy(g.atom(bond.b))
        })
        .collect();
    let b = *candidates.choose(rng)?;
    let (x, y) = (g.bond(b).a, g.bond(b).b);
    let current = g.kekule_order(b);
    // No cumulated double bonds and no triple bonds in rings.
    let can_raise = current < 3
        && g.atom(x).hydrogens >= 1
        && g.atom(y).hydrogens >= 1
        && !other_multiple_bond(g, x, b)
        && !other_multiple_bond(g, y, b)
        && !(current == 2 && g.is_ring_bond(b));
    let can_lower = current > 1;
    let raise = match (can_raise, can_lower) {
        (true, true) => rng.random_bool(0.5),
        (true, false) => true,
        (false, true) => false,
        (false, false) => return None,
    };
    let mut parts = Parts::of(g);
    let next = if raise { current + 1 } else { current - 1 };
    parts.bonds[b].order = BondOrder::from_kekule(next);
    if raise {
        parts.spend_hydrogen(x, 1);
        parts.spend_hydrogen(y, 1);
    } else {
        parts.give_hydrogen(x, 1);
        parts.give_hydrogen(y, 1);
    }
    parts.build()
}

/// Swap partners sharing a default valence. Silicon is left out: it
/// perceives as aromatic in rings but has no aromatic SMILES symbol.
const VALENCE_CLASSES: [&[Element]; 3] =
    [&[Element::N, Element::P], &[Element::O, Element::S], &[Element::F, Element::CL, Element::BR, Element::I]];

const AROMATIC_OK: [Element; 5] = [Element::C, Element::N, Element::O, Element::P, Element::S];

pub fn substitute_element<R: Rng>(g: &MolecularGraph, rng: &mut R) -> Option<MolecularGraph> {
    let candidates: Vec<(usize, &[Element])> = (0..g.atom_count())
        .filter(|&i| g.atom(i).charge == 0)
        .filter_map(|i| VALENCE_CLASSES.iter().find(|c| c.contains(&g.atom(i).element)).map(|c| (i, *c)))
        .collect();
    let &(i, class) = candidates.choose(rng)?;
    let current = g.atom(i).element;
    let aromatic = g.atom(i).aromatic;
    // Aromatic atoms may only become elements that have an aromatic symbol.
    let options: Vec<Element> = class.iter().copied().filter(|&e| e != current && (!aromatic || AROMATIC_OK.contains(&e))).collect();
    let element = *options.choose(rng)?;
    let mut parts = Parts::of(g);
    parts.atoms[i].element = element;
    parts.atoms[i].isotope = None;
    parts.build()
}

/// Attaches a library ring fragment at a random open site.
pub fn insert_fragment<R: Rng>(g: &MolecularGraph, library: &[MolecularGraph], rng: &mut R) -> Option<MolecularGraph> {
    let rings: Vec<&MolecularGraph> = library.iter().filter(|f| !f.rings().is_empty()).collect();
    let frag = *rings.choose(rng)?;
    join_random(g, frag, rng)
}

/// Acyclic single bonds between heavy atoms: the crossover cut sites.
pub fn cut_sites(g: &MolecularGraph) -> Vec<usize> {
    (0..g.bond_count())
        .filter(|&b| {
            let bond = g.bond(b);
            bond.order == BondOrder::Single && !g.is_ring_bond(b) && is_heavy(g.atom(bond.a)) && is_heavy(g.atom(bond.b))
        })
        .collect()
}

/// The side of `bond` containing `root`, with the bond removed. Returns the
/// fragment and the new index of `root`.
pub fn fragment_side(g: &MolecularGraph, bond: usize, root: usize) -> Option<(MolecularGraph, usize)> {
    let n = g.atom_count();
    let mut keep = vec![false; n];
    keep[root] = true;
    let mut stack = vec![root];
    while let Some(i) = stack.pop() {
        for &(j, b) in g.neighbors(i) {
            if b != bond && !keep[j] {
                keep[j] = true;
                stack.push(j);
            }
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut parts = Parts::of(g);
    let mut atoms = Vec::new();
    for i in 0..n {
        if keep[i] {
            index[i] = atoms.len();
            atoms.push(parts.atoms[i].clone());
        }
    }
    let cut = g.bond(bond);
    let mut bonds = Vec::new();
    for (k, b) in parts.bonds.drain(..).enumerate() {
        if k != bond && keep[b.a] && keep[b.b] {
            bonds.push(Bond { a: index[b.a], b: index[b.b], ..b });
        }
    }
    let mut side = Parts { atoms, bonds };
    let r = index[root];
    if cut.a == root || cut.b == root {
        side.give_hydrogen(r, 1);
    }
    Some((side.build()?, r))
}

/// Cuts one random acyclic single bond in each parent and joins one side of
/// each at the cut atoms. Gives up after 20 failed attempts.
pub fn crossover<R: Rng>(a: &MolecularGraph, b: &MolecularGraph, rng: &mut R) -> Option<MolecularGraph> {
    let (cuts_a, cuts_b) = (cut_sites(a), cut_sites(b));
    if cuts_a.is_empty() || cuts_b.is_empty() {
        return None;
    }
    for _ in 0..20 {
        let ba = *cuts_a.choose(rng)?;
        let bb = *cuts_b.choose(rng)?;
        let ra = if rng.random_bool(0.5) { a.bond(ba).a } else { a.bond(ba).b };
        let rb = if rng.random_bool(0.5) { b.bond(bb).a } else { b.bond(bb).b };
        let Some((fa, ia)) = fragment_side(a, ba, ra) else { continue };
        let Some((fb, ib)) = fragment_side(b, bb, rb) else { continue };
        if let Some(child) = join(&fa, ia, &fb, ib) {
            return Some(child);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    AppendAtom,
    DeleteTerminal,
    ChangeBondOrder,
    SubstituteElement,
    InsertFragment,
}

impl Mutation {
    pub const ALL: [Mutation; 5] =
        [Mutation::AppendAtom, Mutation::DeleteTerminal, Mutation::ChangeBondOrder, Mutation::SubstituteElement, Mutation::InsertFragment];

    pub fn apply<R: Rng>(self, g: &MolecularGraph, library: &[MolecularGraph], rng: &mut R) -> Option<MolecularGraph> {
        match self {
            Mutation::AppendAtom => append_atom(g, rng),
            Mutation::DeleteTerminal => delete_terminal(g, rng),
            Mutation::ChangeBondOrder => change_bond_order(g, rng),
            Mutation::SubstituteElement => substitute_element(g, rng),
            Mutation::InsertFragment => insert_fragment(g, library, rng),
        }
    }
}

/// With probability `p`, applies one uniformly chosen operator, retrying up
/// to ten times; otherwise, or if every try fails, returns the input.
pub fn mutate<R: Rng>(g: &MolecularGraph, library: &[MolecularGraph], p: f64, rng: &mut R) -> MolecularGraph {
    if p <= 0.0 || !rng.random_bool(p.min(1.0)) {
        return g.clone();
    }
    for _ in 0..10 {
        let op = Mutation::ALL[rng.random_range(0..Mutation::ALL.len())];
        if let Some(m) = op.apply(g, library, rng) {
            return m;
        }
    }
    g.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use molpilot_chem::{canonical_key, parse_smiles, write_smiles};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(s: &str) -> MolecularGraph {
        parse_smiles(s).unwrap()
    }

    #[test]
    fn ethane_crossover_gives_ethane() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let child = crossover(&g("CC"), &g("CC"), &mut rng).unwrap();
        assert_eq!(canonical_key(&child), "CC");
    }

    #[test]
    fn ring_only_parents_do_not_cross() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(crossover(&g("c1ccccc1"), &g("c1ccccc1"), &mut rng).is_none());
    }

    #[test]
    fn join_keeps_aromaticity() {
        let benzene = g("c1ccccc1");
        let m = join(&benzene, 0, &g("C"), 0).unwrap();
        assert_eq!(canonical_key(&m), canonical_key(&g("Cc1ccccc1")));
        let pyrrole = g("c1cc[nH]c1");
        let n = (0..pyrrole.atom_count()).find(|&i| pyrrole.atom(i).element == Element::N).unwrap();
        let m = join(&pyrrole, n, &g("C"), 0).unwrap();
        assert_eq!(canonical_key(&m), canonical_key(&g("Cn1cccc1")));
    }

    #[test]
    fn terminal_deletion_and_bond_change() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = delete_terminal(&g("CCO"), &mut rng).unwrap();
        assert_eq!(m.heavy_atom_count(), 2);
        assert!(delete_terminal(&g("C"), &mut rng).is_none());
        let m = change_bond_order(&g("CC"), &mut rng).unwrap();
        assert_eq!(canonical_key(&m), "C=C");
    }

    #[test]
    fn zero_probability_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = g("CC(=O)Oc1ccccc1C(=O)O");
        assert_eq!(write_smiles(&mutate(&x, &[], 0.0, &mut rng)), write_smiles(&x));
    }

    #[test]
    fn fragment_side_restores_hydrogen() {
        let x = g("CCO");
        let bond = x.bond_between(1, 2).unwrap();
        let (side, r) = fragment_side(&x, bond, 2).unwrap();
        assert_eq!(canonical_key(&side), "O");
        assert_eq!(side.atom(r).hydrogens, 2);
    }
}
