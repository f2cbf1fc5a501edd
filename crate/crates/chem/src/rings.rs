//! Ring perception: ring-bond detection and the smallest set of smallest rings.
//!
//! Candidate cycles come from shortest-path trees rooted at every ring atom
//! (Horton's construction), which always contains a minimum cycle basis. The
//! candidates are sorted by size, then by their sorted atom lists, and
//! selected greedily while linearly independent over GF(2).

use std::collections::{HashSet, VecDeque};

use crate::graph::Bond;

/// Marks bonds that lie on at least one cycle.
pub(crate) fn ring_bonds(n: usize, bonds: &[Bond], adjacency: &[Vec<(usize, usize)>]) -> Vec<bool> {
    // Bridges via DFS low-link; every non-bridge bond is a ring bond.
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_ring = vec![true; bonds.len()];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (atom, parent bond, next neighbour index)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (u, pbond, ref mut next)) = stack.last_mut() {
            if *next < adjacency[u].len() {
                let (v, b) = adjacency[u][*next];
                *next += 1;
                if b == pbond {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, b, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        is_ring[pbond] = false;
                    }
                }
            }
        }
    }
    is_ring
}

struct Candidate {
    atoms: Vec<usize>,
    bonds: Vec<u64>,
    sorted: Vec<usize>,
}

/// Smallest set of smallest rings. Each ring is returned as an ordered cycle
/// of atom indices starting at its smallest atom.
pub(crate) fn sssr(n: usize, bonds: &[Bond], adjacency: &[Vec<(usize, usize)>], ring_bond: &[bool]) -> Vec<Vec<usize>> {
    let ring_edges = ring_bond.iter().filter(|&&r| r).count();
    if ring_edges == 0 {
        return Vec::new();
    }
    let mut ring_atom = vec![false; n];
    for (i, b) in bonds.iter().enumerate() {
        if ring_bond[i] {
            ring_atom[b.a] = true;
            ring_atom[b.b] = true;
        }
    }
    // Cyclomatic number of the ring subgraph.
    let ring_atoms = ring_atom.iter().filter(|&&r| r).count();
    let components = ring_components(n, bonds, adjacency, ring_bond, &ring_atom);
    let target = ring_edges + components - ring_atoms;

    let words = bonds.len().div_ceil(64);
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut candidates: Vec<Candidate> = Vec::new();

    for root in (0..n).filter(|&i| ring_atom[i]) {
        // BFS tree restricted to ring bonds, parents chosen by smallest index.
        let mut dist = vec![usize::MAX; n];
        let mut parent = vec![(usize::MAX, usize::MAX); n];
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let mut nbrs: Vec<(usize, usize)> = adjacency[u].iter().copied().filter(|&(_, b)| ring_bond[b]).collect();
            nbrs.sort_unstable();
            for (v, b) in nbrs {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    parent[v] = (u, b);
                    queue.push_back(v);
                }
            }
        }
        let path = |mut x: usize| {
            let mut atoms = vec![x];
            let mut bs = Vec::new();
            while x != root {
                let (p, b) = parent[x];
                bs.push(b);
                atoms.push(p);
                x = p;
            }
            (atoms, bs)
        };
        for (bi, bond) in bonds.iter().enumerate() {
            if !ring_bond[bi] || dist[bond.a] == usize::MAX || dist[bond.b] == usize::MAX {
                continue;
            }
            if parent[bond.a].1 == bi || parent[bond.b].1 == bi {
                continue;
            }
            let (pa, ba) = path(bond.a);
            let (pb, bb) = path(bond.b);
            // Paths must meet only at the root.
            let set_a: HashSet<usize> = pa.iter().copied().collect();
            if pb.iter().filter(|x| set_a.contains(x)).count() != 1 {
                continue;
            }
            let mut cycle: Vec<usize> = pa.iter().rev().copied().collect();
            cycle.extend(pb[..pb.len() - 1].iter());
            let mut bits = vec![0u64; words];
            for &b in ba.iter().chain(bb.iter()).chain(std::iter::once(&bi)) {
                bits[b / 64] |= 1 << (b % 64);
            }
            if seen.insert(bits.clone()) {
                let mut sorted = cycle.clone();
                sorted.sort_unstable();
                candidates.push(Candidate { atoms: cycle, bonds: bits, sorted });
            }
        }
    }

    candidates.sort_by(|x, y| x.atoms.len().cmp(&y.atoms.len()).then_with(|| x.sorted.cmp(&y.sorted)));

    // Greedy GF(2) independence test with an incrementally reduced basis.
    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut chosen = Vec::new();
    for cand in candidates {
        if chosen.len() == target {
            break;
        }
        let mut v = cand.bonds.clone();
        for (pivot, row) in &basis {
            if v[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (w, r) in v.iter_mut().zip(row) {
                    *w ^= r;
                }
            }
        }
        if let Some(pivot) = first_bit(&v) {
            // Keep rows reduced so later checks need one pass.
            for (_, row) in basis.iter_mut() {
                if row[pivot / 64] >> (pivot % 64) & 1 == 1 {
                    for (w, r) in row.iter_mut().zip(&v) {
                        *w ^= r;
                    }
                }
            }
            basis.push((pivot, v));
            chosen.push(normalize_cycle(cand.atoms));
        }
    }
    chosen
}

fn first_bit(v: &[u64]) -> Option<usize> {
    v.iter().enumerate().find(|(_, &w)| w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// Rotates a cycle to start at its smallest atom, walking toward the smaller neighbour.
fn normalize_cycle(mut cycle: Vec<usize>) -> Vec<usize> {
    let (pos, _) = cycle.iter().enumerate().min_by_key(|(_, &a)| a).unwrap();
    cycle.rotate_left(pos);
    if cycle.len() > 2 && cycle[cycle.len() - 1] < cycle[1] {
        cycle[1..].reverse();
    }
    cycle
}

fn ring_components(n: usize, _bonds: &[Bond], adjacency: &[Vec<(usize, usize)>], ring_bond: &[bool], ring_atom: &[bool]) -> usize {
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if !ring_atom[s] || seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &(v, b) in &adjacency[u] {
                if ring_bond[b] && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    count
}
