//! Kekulization of aromatic systems and Hückel aromaticity perception.
//!
//! A ring is aromatic if it was written with lowercase atoms, or if its
//! Kekulé form gives a 4n+2 π-electron count with every atom eligible.
//! Connected combinations of fused rings are tested as a unit as well.

use crate::element::Element;
use crate::graph::{Atom, Bond, BondOrder, GraphError};

/// Valence used by an aromatic atom before any π bond is placed: explicit
/// bond orders (aromatic bonds count 1) plus written hydrogens.
fn aromatic_base(atom: &Atom, i: usize, bonds: &[Bond], adjacency: &[Vec<(usize, usize)>]) -> u8 {
    let bonded: u8 = adjacency[i]
        .iter()
        .map(|&(_, b)| match bonds[b].order {
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            _ => 1,
        })
        .sum();
    bonded + if atom.bracket { atom.hydrogens } else { 0 }
}

/// Does an aromatic atom with `base` used valence need a π (double) bond?
///
/// Shared with the SMILES writer so bare aromatic atoms re-parse identically.
pub(crate) fn needs_pi(element: Element, charge: i8, base: u8, bracket: bool) -> Option<bool> {
    let vals = element.allowed_valences(charge)?;
    if vals.contains(&base) {
        return Some(false);
    }
    if bracket {
        return vals.contains(&(base + 1)).then_some(true);
    }
    vals.iter().any(|&v| v > base).then_some(true)
}

/// Hydrogens a bare (non-bracket) aromatic atom receives after kekulization.
pub(crate) fn implied_aromatic_hydrogens(element: Element, bonded: u8) -> Option<u8> {
    let pi = needs_pi(element, 0, bonded, false)?;
    let used = bonded + pi as u8;
    element.default_valence_at_least(used).map(|v| v - used)
}

/// Assigns Kekulé orders to every bond; aromatic bonds receive 1 or 2 so that
/// each π-requiring aromatic atom has exactly one double bond.
pub(crate) fn kekulize(atoms: &[Atom], bonds: &[Bond], adjacency: &[Vec<(usize, usize)>]) -> Result<Vec<u8>, GraphError> {
    let mut kekule: Vec<u8> = bonds
        .iter()
        .map(|b| match b.order {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        })
        .collect();
    if !bonds.iter().any(|b| b.order == BondOrder::Aromatic) {
        return Ok(kekule);
    }

    let n = atoms.len();
    let mut wants = vec![false; n];
    for (i, atom) in atoms.iter().enumerate() {
        if !atom.aromatic {
            continue;
        }
        let has_aromatic_bond = adjacency[i].iter().any(|&(_, b)| bonds[b].order == BondOrder::Aromatic);
        if !has_aromatic_bond {
            continue;
        }
        let base = aromatic_base(atom, i, bonds, adjacency);
        match needs_pi(atom.element, atom.charge, base, atom.bracket) {
            Some(w) => wants[i] = w,
            None if atom.valence_override => {}
            None => return Err(GraphError::Kekulize { atom: i }),
        }
    }

    let mut mate: Vec<Option<usize>> = vec![None; n];
    let mut budget = 200_000usize;
    if !match_pi(&wants, bonds, adjacency, &mut mate, &mut budget) {
        let atom = (0..n).find(|&i| wants[i] && mate[i].is_none()).unwrap_or(0);
        return Err(GraphError::Kekulize { atom });
    }
    for (i, m) in mate.iter().enumerate() {
        if let Some(bond) = m {
            if bonds[*bond].a == i {
                kekule[*bond] = 2;
            }
        }
    }
    Ok(kekule)
}

/// Backtracking perfect matching over π-requiring atoms along aromatic bonds.
/// `mate[i]` holds the bond index used by atom `i`.
fn match_pi(wants: &[bool], bonds: &[Bond], adjacency: &[Vec<(usize, usize)>], mate: &mut Vec<Option<usize>>, budget: &mut usize) -> bool {
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    // Most-constrained unmatched atom first.
    let mut best: Option<(usize, Vec<(usize, usize)>)> = None;
    for i in 0..wants.len() {
        if !wants[i] || mate[i].is_some() {
            continue;
        }
        let options: Vec<(usize, usize)> =
            adjacency[i].iter().copied().filter(|&(j, b)| bonds[b].order == BondOrder::Aromatic && wants[j] && mate[j].is_none()).collect();
        if options.is_empty() {
            return false;
        }
        if best.as_ref().is_none_or(|(_, o)| options.len() < o.len()) {
            let done = options.len() == 1;
            best = Some((i, options));
            if done {
                break;
            }
        }
    }
    let Some((i, options)) = best else { return true };
    for (j, b) in options {
        mate[i] = Some(b);
        mate[j] = Some(b);
        if match_pi(wants, bonds, adjacency, mate, budget) {
            return true;
        }
        mate[i] = None;
        mate[j] = None;
    }
    false
}

/// π electrons an atom contributes to a candidate ring, or `None` if the atom
/// cannot take part in an aromatic ring.
fn pi_electrons(atoms: &[Atom], i: usize, kekule: &[u8], adjacency: &[Vec<(usize, usize)>], ring_bond_set: &[bool]) -> Option<u32> {
    let atom = &atoms[i];
    if adjacency[i].len() + atom.hydrogens as usize > 3 {
        return None;
    }
    let mut ring_double = false;
    let mut exo_double_to_hetero = false;
    for &(j, b) in &adjacency[i] {
        match kekule[b] {
            3 => return None,
            2 if ring_bond_set[b] => ring_double = true,
            2 => {
                if matches!(atoms[j].element, Element::O | Element::N | Element::S) {
                    exo_double_to_hetero = true;
                } else {
                    return None;
                }
            }
            _ => {}
        }
    }
    if ring_double {
        return Some(1);
    }
    if exo_double_to_hetero {
        let vacant = atom.element == Element::C || (atom.element == Element::N && atom.charge == 1);
        return vacant.then_some(0);
    }
    let conn = adjacency[i].len() + atom.hydrogens as usize;
    match (atom.element, atom.charge) {
        (Element::C, -1) => Some(2),
        (Element::C, 1) => Some(0),
        (Element::N, 0) | (Element::P, 0) if conn <= 3 => Some(2),
        (Element::O, 0) | (Element::S, 0) | (Element::SE, 0) if conn == 2 => Some(2),
        (Element::N, -1) if conn == 2 => Some(2),
        _ => None,
    }
}

fn ring_bonds_of(cycle: &[usize], adjacency: &[Vec<(usize, usize)>]) -> Vec<usize> {
    (0..cycle.len())
        .filter_map(|k| {
            let (a, b) = (cycle[k], cycle[(k + 1) % cycle.len()]);
            adjacency[a].iter().find(|&&(n, _)| n == b).map(|&(_, bond)| bond)
        })
        .collect()
}

/// Largest number of SSSR rings combined into one fused candidate.
const MAX_FUSED: usize = 6;

/// Connected subsets (by shared bonds) of `system` with 2..=MAX_FUSED rings.
fn fused_subsets(system: &[usize], touches: &dyn Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut frontier: Vec<Vec<usize>> = system.iter().map(|&r| vec![r]).collect();
    for _ in 1..MAX_FUSED.min(system.len()) {
        let mut next: Vec<Vec<usize>> = Vec::new();
        for set in &frontier {
            for &r in system {
                if set.contains(&r) || !set.iter().any(|&s| touches(r, s)) {
                    continue;
                }
                let mut grown = set.clone();
                grown.push(r);
                grown.sort_unstable();
                if !next.contains(&grown) {
                    next.push(grown);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
        if out.len() > 5000 {
            break;
        }
    }
    out
}

/// Hückel perception over SSSR rings and fused ring combinations, using the
/// Kekulé form. Atoms of a qualifying ring (or combination) become aromatic;
/// for combinations only the perimeter bonds are converted, so a fusion bond
/// stays localized unless one of its own rings is aromatic.
pub(crate) fn perceive(atoms: &mut [Atom], bonds: &mut [Bond], kekule: &[u8], adjacency: &[Vec<(usize, usize)>], rings: &[Vec<usize>]) {
    if rings.is_empty() {
        return;
    }
    let mut ring_bond_set = vec![false; bonds.len()];
    let ring_bond_lists: Vec<Vec<usize>> = rings.iter().map(|r| ring_bonds_of(r, adjacency)).collect();
    for list in &ring_bond_lists {
        for &b in list {
            ring_bond_set[b] = true;
        }
    }

    let written_aromatic = |ring: usize| {
        ring_bond_lists[ring].iter().all(|&b| bonds[b].order == BondOrder::Aromatic) && rings[ring].iter().all(|&a| atoms[a].aromatic)
    };
    let electrons: Vec<Option<u32>> = (0..atoms.len()).map(|a| pi_electrons(atoms, a, kekule, adjacency, &ring_bond_set)).collect();
    let huckel = |members: &[usize]| -> bool {
        let mut total = 0;
        for &a in members {
            match electrons[a] {
                Some(e) => total += e,
                None => return false,
            }
        }
        total % 4 == 2
    };

    let mut aromatic_atom = vec![false; atoms.len()];
    let mut aromatic_bond = vec![false; bonds.len()];
    let mut ring_ok = vec![false; rings.len()];
    for (r, ring) in rings.iter().enumerate() {
        if written_aromatic(r) || huckel(ring) {
            ring_ok[r] = true;
            for &a in ring {
                aromatic_atom[a] = true;
            }
            for &b in &ring_bond_lists[r] {
                aromatic_bond[b] = true;
            }
        }
    }

    // Fused systems: rings connected through shared bonds. Rings containing
    // an atom that can never be aromatic are left out.
    let touches = |r: usize, s: usize| ring_bond_lists[r].iter().any(|b| ring_bond_lists[s].contains(b));
    let usable: Vec<usize> = (0..rings.len()).filter(|&r| rings[r].iter().all(|&a| electrons[a].is_some() || atoms[a].aromatic)).collect();
    let mut system_of = vec![usize::MAX; rings.len()];
    let mut systems: Vec<Vec<usize>> = Vec::new();
    for &r in &usable {
        if system_of[r] != usize::MAX {
            continue;
        }
        let id = systems.len();
        let mut members = vec![r];
        system_of[r] = id;
        let mut k = 0;
        while k < members.len() {
            let cur = members[k];
            for &s in &usable {
                if system_of[s] == usize::MAX && touches(cur, s) {
                    system_of[s] = id;
                    members.push(s);
                }
            }
            k += 1;
        }
        systems.push(members);
    }
    for system in systems.iter().filter(|s| s.len() > 1) {
        for subset in fused_subsets(system, &touches) {
            if subset.iter().all(|&r| ring_ok[r]) {
                continue;
            }
            let mut members: Vec<usize> = subset.iter().flat_map(|&r| rings[r].iter().copied()).collect();
            members.sort_unstable();
            members.dedup();
            if !huckel(&members) {
                continue;
            }
            for &a in &members {
                aromatic_atom[a] = true;
            }
            for &r in &subset {
                for &b in &ring_bond_lists[r] {
                    let shared = subset.iter().filter(|&&s| ring_bond_lists[s].contains(&b)).count();
                    if shared == 1 {
                        aromatic_bond[b] = true;
                    }
                }
            }
        }
    }

    for (a, atom) in atoms.iter_mut().enumerate() {
        if aromatic_atom[a] {
            atom.aromatic = true;
        }
    }
    for (b, bond) in bonds.iter_mut().enumerate() {
        if aromatic_bond[b] {
            bond.order = BondOrder::Aromatic;
        } else if bond.order == BondOrder::Aromatic {
            bond.order = BondOrder::from_kekule(kekule[b]);
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::graph::BondOrder;
    use crate::smiles::parse_smiles;

    fn aromatic_atoms(s: &str) -> usize {
        parse_smiles(s).unwrap().atoms().iter().filter(|a| a.aromatic).count()
    }

    #[test]
    fn kekule_benzene_is_perceived() {
        let g = parse_smiles("C1=CC=CC=C1").unwrap();
        assert!(g.atoms().iter().all(|a| a.aromatic && a.hydrogens == 1));
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
    }

    #[test]
    fn heteroaromatics_from_kekule_form() {
        assert_eq!(aromatic_atoms("C1=CNC=C1"), 5); // pyrrole
        assert_eq!(aromatic_atoms("C1=COC=C1"), 5); // furan
        assert_eq!(aromatic_atoms("C1=CC=NC=C1"), 6); // pyridine
        assert_eq!(aromatic_atoms("O=C1C=CC=CN1"), 6); // 2-pyridone
        assert_eq!(aromatic_atoms("C1=CC2=CC=CC=C2C=C1"), 10); // naphthalene
    }

    #[test]
    fn non_aromatic_rings_stay_aliphatic() {
        assert_eq!(aromatic_atoms("C1=CCC=C1"), 0); // cyclopentadiene
        assert_eq!(aromatic_atoms("C1=CC=CC=CC=C1"), 0); // cyclooctatetraene
        assert_eq!(aromatic_atoms("C1CCCCC1"), 0);
    }

    #[test]
    fn lowercase_hydrogen_assignment() {
        let g = parse_smiles("c1ccncc1").unwrap();
        let n = g.atoms().iter().find(|a| a.element == crate::element::Element::N).unwrap();
        assert_eq!(n.hydrogens, 0);
        let g = parse_smiles("c1cc[nH]c1").unwrap();
        assert_eq!(g.hydrogen_count(), 5);
        let g = parse_smiles("Cn1cccc1").unwrap();
        assert_eq!(g.hydrogen_count(), 7);
    }

    #[test]
    fn unkekulizable_input_is_rejected() {
        assert!(parse_smiles("c1cccc1").is_err());
        assert!(parse_smiles("c1ccnc1").is_err());
    }
}
