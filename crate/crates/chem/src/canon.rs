//! Canonical atom ranking, canonical SMILES keys and deduplication.

use std::collections::HashSet;

use crate::graph::MolecularGraph;
use crate::writer::write_smiles;

/// Dense ranks (0-based) of `keys`, equal keys sharing a rank.
fn dense_ranks<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0; keys.len()];
    let mut rank = 0;
    for w in 0..order.len() {
        if w > 0 && keys[order[w]] != keys[order[w - 1]] {
            rank += 1;
        }
        ranks[order[w]] = rank;
    }
    ranks
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().max().map_or(0, |m| m + 1)
}

/// Initial per-atom invariant used to seed refinement.
fn atom_invariant(g: &MolecularGraph, i: usize) -> (u8, u16, i8, usize, u8, bool, bool) {
    let a = g.atom(i);
    (a.element.atomic_number(), a.isotope.unwrap_or(0), a.charge, g.degree(i), a.hydrogens, a.aromatic, g.in_ring(i))
}

/// Iteratively refines `ranks` by sorted (bond code, neighbour rank) lists
/// until the partition stops splitting.
fn refine(g: &MolecularGraph, mut ranks: Vec<usize>) -> Vec<usize> {
    let n = g.atom_count();
    let mut classes = class_count(&ranks);
    loop {
        let keys: Vec<(usize, Vec<(u32, usize)>)> = (0..n)
            .map(|i| {
                let mut nb: Vec<(u32, usize)> = g.neighbors(i).iter().map(|&(j, b)| (g.bond(b).order.code(), ranks[j])).collect();
                nb.sort_unstable();
                (ranks[i], nb)
            })
            .collect();
        let next = dense_ranks(&keys);
        let next_classes = class_count(&next);
        if next_classes == classes {
            return next;
        }
        classes = next_classes;
        ranks = next;
    }
}

/// Symmetry-class ranks: atoms related by a graph automorphism share a rank.
/// Invariant under any relabelling of atom indices.
pub fn canonical_ranks(g: &MolecularGraph) -> Vec<usize> {
    if g.is_empty() {
        return Vec::new();
    }
    let inv: Vec<_> = (0..g.atom_count()).map(|i| atom_invariant(g, i)).collect();
    refine(g, dense_ranks(&inv))
}

/// A total canonical order: symmetry classes are split one atom at a time
/// (lowest tied class first) and re-refined until every rank is unique.
pub fn canonical_order(g: &MolecularGraph) -> Vec<usize> {
    let mut ranks = canonical_ranks(g);
    let n = ranks.len();
    while class_count(&ranks) < n {
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r] += 1;
        }
        let tied = (0..n).find(|&r| counts[r] > 1).expect("a tied class exists");
        let pick = (0..n).find(|&i| ranks[i] == tied).unwrap();
        let split: Vec<(usize, bool)> = (0..n).map(|i| (ranks[i], !(i == pick))).collect();
        ranks = refine(g, dense_ranks(&split));
    }
    ranks
}

/// Canonical string identity of a molecule (its canonical SMILES).
pub fn canonical_key(g: &MolecularGraph) -> String {
    write_smiles(g)
}

/// Keeps the first occurrence of each canonical form, preserving order.
pub fn dedupe(molecules: Vec<MolecularGraph>) -> Vec<MolecularGraph> {
    let mut seen = HashSet::new();
    molecules.into_iter().filter(|m| seen.insert(canonical_key(m))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    #[test]
    fn benzene_is_one_class() {
        let g = parse_smiles("c1ccccc1").unwrap();
        let r = canonical_ranks(&g);
        assert!(r.iter().all(|&x| x == r[0]));
    }

    #[test]
    fn toluene_methyl_differs() {
        let g = parse_smiles("Cc1ccccc1").unwrap();
        let r = canonical_ranks(&g);
        assert!(r[1..].iter().all(|&x| x != r[0]));
        // ortho/meta/para classes
        assert_eq!(r[2], r[6]);
        assert_eq!(r[3], r[5]);
        assert_ne!(r[2], r[4]);
    }

    #[test]
    fn ranks_follow_permutation() {
        let g = parse_smiles("CC(=O)Oc1ccccc1C(=O)O").unwrap();
        let n = g.atom_count();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
        let h = g.permuted(&perm);
        let rg = canonical_ranks(&g);
        let rh = canonical_ranks(&h);
        for i in 0..n {
            assert_eq!(rg[i], rh[perm[i]]);
        }
    }

    #[test]
    fn order_is_total() {
        let g = parse_smiles("c1ccccc1").unwrap();
        let mut o = canonical_order(&g);
        o.sort_unstable();
        assert_eq!(o, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn dedupe_examples() {
        let ms = |v: &[&str]| v.iter().map(|s| parse_smiles(s).unwrap()).collect::<Vec<_>>();
        assert_eq!(dedupe(ms(&["CCO", "OCC"])).len(), 1);
        assert_eq!(dedupe(ms(&["C", "CC"])).len(), 2);
        assert!(dedupe(Vec::new()).is_empty());
        let out = dedupe(ms(&["CC", "C", "CC", "O"]));
        let keys: Vec<String> = out.iter().map(canonical_key).collect();
        assert_eq!(keys, vec!["CC", "C", "O"]);
    }
}
