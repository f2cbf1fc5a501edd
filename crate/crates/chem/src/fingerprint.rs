//! Morgan (ECFP-style) circular fingerprints and Tanimoto similarity.
//!
//! Environment identifiers are 32-bit hashes built with the classic
//! `hash_combine` mixing step. Radius-0 identifiers hash the atom invariant
//! (atomic number, total degree, total hydrogens, formal charge, isotope mass
//! shift, ring membership); each further layer combines the layer index, the
//! atom's previous identifier and its sorted (bond type, neighbour
//! identifier) pairs. An environment covering exactly the same bond set as
//! one already emitted is dropped, and its atom stops growing. The same
//! identifiers key the synthetic-accessibility fragment table.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::MolecularGraph;

pub const DEFAULT_RADIUS: u32 = 2;
pub const DEFAULT_NBITS: usize = 2048;

const GOLDEN: u64 = 0x9e37_79b9;

fn combine64(seed: u64, value: u64) -> u64 {
    seed ^ value.wrapping_add(GOLDEN).wrapping_add(seed << 6).wrapping_add(seed >> 2)
}

fn combine32(seed: u32, value: u64) -> u32 {
    let v = (value as u32).wrapping_add(GOLDEN as u32).wrapping_add(seed << 6).wrapping_add(seed >> 2);
    seed ^ v
}

fn hash_pair(bond_code: u32, nbr: u32) -> u64 {
    combine64(combine64(0, bond_code as u64), nbr as u64)
}

/// Radius-0 atom identifier.
pub fn atom_invariant(g: &MolecularGraph, i: usize) -> u32 {
    let atom = g.atom(i);
    let delta_mass = match atom.isotope {
        Some(_) => (atom.mass() - atom.element.mass()) as i32,
        None => 0,
    };
    let mut parts: Vec<u32> = vec![
        atom.element.atomic_number() as u32,
        g.total_degree(i) as u32,
        atom.hydrogens as u32,
        atom.charge as i32 as u32,
        delta_mass as u32,
    ];
    if g.in_ring(i) {
        parts.push(1);
    }
    parts.iter().fold(0u32, |seed, &p| combine32(seed, p as u64))
}

/// One emitted circular environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Environment {
    pub id: u32,
    pub atom: usize,
    pub radius: u32,
}

/// All retained environments up to `radius`, in emission order.
pub fn morgan_environments(g: &MolecularGraph, radius: u32) -> Vec<Environment> {
    let n = g.atom_count();
    let nb = g.bond_count();
    let words = nb.div_ceil(64).max(1);
    let mut current: Vec<u32> = (0..n).map(|i| atom_invariant(g, i)).collect();
    let mut out: Vec<Environment> = current.iter().enumerate().map(|(atom, &id)| Environment { id, atom, radius: 0 }).collect();

    let mut dead = vec![false; n];
    let mut neighborhoods: Vec<Vec<u64>> = vec![vec![0u64; words]; n];
    let mut seen: Vec<Vec<u64>> = Vec::new();

    for layer in 0..radius {
        let mut next = vec![0u32; n];
        let mut round_nbhd = neighborhoods.clone();
        let mut this_round: Vec<(Vec<u64>, u32, usize)> = Vec::new();
        for i in 0..n {
            if dead[i] {
                continue;
            }
            if g.degree(i) == 0 {
                dead[i] = true;
                continue;
            }
            let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(g.degree(i));
            for &(j, b) in g.neighbors(i) {
                round_nbhd[i][b / 64] |= 1 << (b % 64);
                for w in 0..words {
                    round_nbhd[i][w] |= neighborhoods[j][w];
                }
                pairs.push((g.bond(b).order.code(), current[j]));
            }
            pairs.sort_unstable();
            let mut id = combine32(layer, current[i] as u64);
            for &(code, nbr) in &pairs {
                id = combine32(id, hash_pair(code, nbr));
            }
            next[i] = id;
            this_round.push((round_nbhd[i].clone(), id, i));
            if seen.contains(&round_nbhd[i]) {
                dead[i] = true;
            }
        }
        this_round.sort();
        for (nbhd, id, atom) in this_round {
            if seen.contains(&nbhd) {
                dead[atom] = true;
            } else {
                out.push(Environment { id, atom, radius: layer + 1 });
                seen.push(nbhd);
            }
        }
        current = next;
        neighborhoods = round_nbhd;
    }
    out
}

/// Fixed-width fingerprint bit vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    bits: Vec<u64>,
    nbits: usize,
    radius: u32,
    popcount: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FingerprintError {
    #[error("fingerprint width {0} must be a power of two >= 64")]
    BadWidth(usize),
    #[error("fingerprint parameters differ: ({0} bits, radius {1}) vs ({2} bits, radius {3})")]
    ParameterMismatch(usize, u32, usize, u32),
}

impl Fingerprint {
    pub fn empty(nbits: usize, radius: u32) -> Result<Fingerprint, FingerprintError> {
        if nbits < 64 || !nbits.is_power_of_two() {
            return Err(FingerprintError::BadWidth(nbits));
        }
        Ok(Fingerprint { bits: vec![0; nbits / 64], nbits, radius, popcount: 0 })
    }

    /// Builds a fingerprint from explicit bit positions (taken modulo width).
    pub fn from_bits(nbits: usize, radius: u32, on: impl IntoIterator<Item = usize>) -> Result<Fingerprint, FingerprintError> {
        let mut fp = Fingerprint::empty(nbits, radius)?;
        for bit in on {
            fp.set(bit);
        }
        Ok(fp)
    }

    fn set(&mut self, bit: usize) {
        let bit = bit % self.nbits;
        let mask = 1u64 << (bit % 64);
        if self.bits[bit / 64] & mask == 0 {
            self.bits[bit / 64] |= mask;
            self.popcount += 1;
        }
    }

    pub fn get(&self, bit: usize) -> bool {
        let bit = bit % self.nbits;
        self.bits[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn nbits(&self) -> usize {
        self.nbits
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn popcount(&self) -> u32 {
        self.popcount
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    pub fn on_bits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nbits).filter(|&b| self.get(b))
    }
}

/// Folded Morgan fingerprint: each environment id sets bit `id % nbits`.
pub fn morgan_fingerprint(g: &MolecularGraph, radius: u32, nbits: usize) -> Result<Fingerprint, FingerprintError> {
    let mut fp = Fingerprint::empty(nbits, radius)?;
    for env in morgan_environments(g, radius) {
        fp.set(env.id as usize);
    }
    Ok(fp)
}

/// Morgan fingerprint with the default radius 2 / 2048 bits.
pub fn default_fingerprint(g: &MolecularGraph) -> Fingerprint {
    morgan_fingerprint(g, DEFAULT_RADIUS, DEFAULT_NBITS).expect("default width is valid")
}

/// |a ∧ b| / |a ∨ b|; two all-zero fingerprints compare as 1.0.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.nbits != b.nbits || a.radius != b.radius {
        return Err(FingerprintError::ParameterMismatch(a.nbits, a.radius, b.nbits, b.radius));
    }
    let (mut both, mut either) = (0u32, 0u32);
    for (x, y) in a.bits.iter().zip(&b.bits) {
        both += (x & y).count_ones();
        either += (x | y).count_ones();
    }
    if either == 0 {
        return Ok(1.0);
    }
    Ok(both as f64 / either as f64)
}
