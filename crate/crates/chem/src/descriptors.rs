//! Physicochemical descriptors: molecular weight, Crippen logP, polar surface
//! area, donor/acceptor counts, rotatable bonds, aromatic rings and
//! structural alerts.
//!
//! The atom-typing and contribution tables are plain-text files under
//! `data/`, compiled in by default; [`DescriptorTables::checksums`] reports
//! their SHA-256 digests so a run log can pin the exact tables used.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::element::Element;
use crate::graph::{BondOrder, MolecularGraph};
use crate::smarts::{MatchGraph, Smarts, SmartsError};

const CRIPPEN_TABLE: &str = include_str!("../data/crippen.tsv");
const TPSA_TABLE: &str = include_str!("../data/tpsa.tsv");
const ACCEPTOR_TABLE: &str = include_str!("../data/qed_acceptors.txt");
const ALERT_TABLE: &str = include_str!("../data/structural_alerts.txt");

const QED_DONOR: &str = "[N&!H0&v3,N&!H0&+1&v4,O&H1&+0,S&H1&+0,n&H1&+0]";
const QED_ALIPHATIC_RING: &str = "[$([A;R][!a])]";
// Stricter rotatable-bond rule used for the QED input: also skips amide-like
// and amidinium C-N bonds and bonds to CX3 / tert-butyl rotors.
const QED_ROTATABLE: &str = concat!(
    "[!$(*#*)&!D1&!$(C(F)(F)F)&!$(C(Cl)(Cl)Cl)&!$(C(Br)(Br)Br)&!$(C([CH3])([CH3])[CH3])",
    "&!$([CD3](=[N,O,S])-!@[#7,O,S!D1])&!$([#7,O,S!D1]-!@[CD3]=[N,O,S])",
    "&!$([CD3](=[N+])-!@[#7!D1])&!$([#7!D1]-!@[CD3]=[N+])]",
    "-,:;!@",
    "[!$(*#*)&!D1&!$(C(F)(F)F)&!$(C(Cl)(Cl)Cl)&!$(C(Br)(Br)Br)&!$(C([CH3])([CH3])[CH3])]",
);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DescriptorError {
    #[error("unparameterized atom {atom} ({element}): no logP atom type matches")]
    UnparameterizedAtom { atom: usize, element: String },
    #[error("{table} line {line}: {message}")]
    Table { table: &'static str, line: usize, message: String },
    #[error("{table} line {line}: bad pattern: {source}")]
    Pattern {
        table: &'static str,
        line: usize,
        #[source]
        source: SmartsError,
    },
}

/// Descriptor values for one molecule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorSet {
    /// Average molecular weight including implicit hydrogens (g/mol).
    pub mw: f64,
    pub logp: f64,
    /// Topological polar surface area from N and O contributions (Å²).
    pub tpsa: f64,
    /// N/O atoms bearing at least one hydrogen.
    pub hbd: u32,
    /// N plus O atom count.
    pub hba: u32,
    pub rotb: u32,
    /// SSSR rings whose bonds are all aromatic.
    pub arom: u32,
    /// Number of structural-alert patterns present.
    pub alerts: u32,
    pub heavy_atoms: u32,
    /// Donor count under the drug-likeness (QED) convention.
    pub qed_hbd: u32,
    /// Acceptor count under the drug-likeness (QED) convention.
    pub qed_hba: u32,
    /// Aromatic ring count under the drug-likeness (QED) convention: ring
    /// rank of the graph left after deleting aliphatic ring atoms that carry
    /// a non-aromatic neighbour.
    pub qed_arom: u32,
    /// Rotatable bonds under the stricter QED rule.
    pub qed_rotb: u32,
}

struct CrippenType {
    name: String,
    pattern: Smarts,
    logp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TpsaRule {
    element: Element,
    nbrs: u8,
    hs: u8,
    charge: i8,
    single: u8,
    double: u8,
    triple: u8,
    aromatic: u8,
    ring3: Option<bool>,
    value: f64,
}

/// Parsed parameter tables used by [`compute_descriptors`].
pub struct DescriptorTables {
    crippen: Vec<CrippenType>,
    tpsa: Vec<TpsaRule>,
    acceptors: Vec<Smarts>,
    alerts: Vec<Smarts>,
    donor: Smarts,
    aliphatic_ring: Smarts,
    rotatable: Smarts,
    checksums: Vec<(&'static str, String)>,
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_patterns(table: &'static str, text: &str) -> Result<Vec<Smarts>, DescriptorError> {
    data_lines(text).map(|(line, l)| Smarts::parse(l.trim()).map_err(|source| DescriptorError::Pattern { table, line, source })).collect()
}

impl DescriptorTables {
    /// Tables compiled into the crate.
    pub fn builtin() -> &'static DescriptorTables {
        static TABLES: OnceLock<DescriptorTables> = OnceLock::new();
        TABLES.get_or_init(|| {
            DescriptorTables::from_text(CRIPPEN_TABLE, TPSA_TABLE, ACCEPTOR_TABLE, ALERT_TABLE).expect("built-in descriptor tables parse")
        })
    }

    pub fn from_text(crippen: &str, tpsa: &str, acceptors: &str, alerts: &str) -> Result<DescriptorTables, DescriptorError> {
        let mut crippen_types = Vec::new();
        for (line, l) in data_lines(crippen) {
            let f: Vec<&str> = l.split('\t').collect();
            if f.len() < 3 {
                return Err(DescriptorError::Table { table: "crippen", line, message: "expected 3 columns".into() });
            }
            let pattern = Smarts::parse(f[1]).map_err(|source| DescriptorError::Pattern { table: "crippen", line, source })?;
            let logp = f[2].trim().parse().map_err(|_| DescriptorError::Table {
                table: "crippen",
                line,
                message: format!("bad logP {:?}", f[2]),
            })?;
            crippen_types.push(CrippenType { name: f[0].to_string(), pattern, logp });
        }

        let mut rules = Vec::new();
        for (line, l) in data_lines(tpsa) {
            let f: Vec<&str> = l.split_whitespace().collect();
            let bad = |message: String| DescriptorError::Table { table: "tpsa", line, message };
            if f.len() != 10 {
                return Err(bad("expected 10 columns".into()));
            }
            let int = |s: &str| s.parse::<i16>().map_err(|_| bad(format!("bad integer {s:?}")));
            rules.push(TpsaRule {
                element: Element::from_symbol(f[0]).ok_or_else(|| bad(format!("unknown element {:?}", f[0])))?,
                nbrs: int(f[1])? as u8,
                hs: int(f[2])? as u8,
                charge: int(f[3])? as i8,
                single: int(f[4])? as u8,
                double: int(f[5])? as u8,
                triple: int(f[6])? as u8,
                aromatic: int(f[7])? as u8,
                ring3: match f[8] {
                    "y" => Some(true),
                    "n" => Some(false),
                    "*" => None,
                    other => return Err(bad(format!("bad ring flag {other:?}"))),
                },
                value: f[9].parse().map_err(|_| bad(format!("bad value {:?}", f[9])))?,
            });
        }

        Ok(DescriptorTables {
            crippen: crippen_types,
            tpsa: rules,
            acceptors: parse_patterns("acceptors", acceptors)?,
            alerts: parse_patterns("alerts", alerts)?,
            donor: Smarts::parse(QED_DONOR).expect("donor pattern"),
            aliphatic_ring: Smarts::parse(QED_ALIPHATIC_RING).expect("ring pattern"),
            rotatable: Smarts::parse(QED_ROTATABLE).expect("rotatable pattern"),
            checksums: vec![
                ("crippen", sha256_hex(crippen)),
                ("tpsa", sha256_hex(tpsa)),
                ("acceptors", sha256_hex(acceptors)),
                ("alerts", sha256_hex(alerts)),
            ],
        })
    }

    /// (table name, SHA-256 hex) for every loaded table.
    pub fn checksums(&self) -> &[(&'static str, String)] {
        &self.checksums
    }

    pub fn alert_count(&self) -> usize {
        self.alerts.len()
    }
}

/// Average molecular weight, counting implicit hydrogens.
pub fn molecular_weight(g: &MolecularGraph) -> f64 {
    g.atoms().iter().map(|a| a.mass() + a.hydrogens as f64 * Element::H.mass()).sum()
}

/// Crippen atom-type name and contribution for every atom of the
/// hydrogen-expanded graph (heavy atoms first, then the added hydrogens).
pub fn crippen_contributions(g: &MolecularGraph, tables: &DescriptorTables) -> Result<Vec<(String, f64)>, DescriptorError> {
    let t = MatchGraph::with_explicit_hydrogens(g);
    (0..t.atom_count())
        .map(|i| {
            tables.crippen.iter().find(|ty| ty.pattern.matches_at(&t, i)).map(|ty| (ty.name.clone(), ty.logp)).ok_or_else(|| {
                let (atom, element) =
                    if i < t.source_atom_count() { (i, g.atom(i).element.symbol().to_string()) } else { (i, "H".to_string()) };
                DescriptorError::UnparameterizedAtom { atom, element }
            })
        })
        .collect()
}

pub fn crippen_logp(g: &MolecularGraph, tables: &DescriptorTables) -> Result<f64, DescriptorError> {
    Ok(crippen_contributions(g, tables)?.iter().map(|(_, v)| v).sum())
}

fn tpsa_contribution(g: &MolecularGraph, i: usize, rules: &[TpsaRule]) -> f64 {
    let atom = g.atom(i);
    if atom.element != Element::N && atom.element != Element::O {
        return 0.0;
    }
    let mut hs = atom.hydrogens;
    let mut nbrs = 0u8;
    let (mut single, mut double, mut triple, mut aromatic) = (0u8, 0u8, 0u8, 0u8);
    for &(j, b) in g.neighbors(i) {
        if g.atom(j).element == Element::H {
            hs += 1;
            continue;
        }
        nbrs += 1;
        match g.bond(b).order {
            BondOrder::Single => single += 1,
            BondOrder::Double => double += 1,
            BondOrder::Triple => triple += 1,
            BondOrder::Aromatic => aromatic += 1,
        }
    }
    let ring3 = g.in_ring_of_size(i, 3);
    let hit = rules.iter().find(|r| {
        r.element == atom.element
            && r.nbrs == nbrs
            && r.hs == hs
            && r.charge == atom.charge
            && r.single == single
            && r.double == double
            && r.triple == triple
            && r.aromatic == aromatic
            && r.ring3.is_none_or(|f| f == ring3)
    });
    match hit {
        Some(r) => r.value,
        None if atom.element == Element::N => (30.5 - 8.2 * nbrs as f64 + 1.5 * hs as f64).max(0.0),
        None => (28.5 - 8.6 * nbrs as f64 + 1.5 * hs as f64).max(0.0),
    }
}

pub fn tpsa(g: &MolecularGraph, tables: &DescriptorTables) -> f64 {
    (0..g.atom_count()).map(|i| tpsa_contribution(g, i, &tables.tpsa)).sum()
}

fn total_hydrogens(g: &MolecularGraph, i: usize) -> u32 {
    g.atom(i).hydrogens as u32 + g.neighbors(i).iter().filter(|&&(j, _)| g.atom(j).element == Element::H).count() as u32
}

fn heavy_degree(g: &MolecularGraph, i: usize) -> usize {
    g.neighbors(i).iter().filter(|&&(j, _)| g.atom(j).element != Element::H).count()
}

fn is_no(g: &MolecularGraph, i: usize) -> bool {
    matches!(g.atom(i).element, Element::N | Element::O)
}

/// N/O atoms carrying at least one hydrogen.
pub fn lipinski_hbd(g: &MolecularGraph) -> u32 {
    (0..g.atom_count()).filter(|&i| is_no(g, i) && total_hydrogens(g, i) > 0).count() as u32
}

/// Count of N and O atoms.
pub fn lipinski_hba(g: &MolecularGraph) -> u32 {
    (0..g.atom_count()).filter(|&i| is_no(g, i)).count() as u32
}

fn is_carbonyl_carbon(g: &MolecularGraph, i: usize) -> bool {
    g.atom(i).element == Element::C
        && g.neighbors(i).iter().any(|&(j, b)| g.bond(b).order == BondOrder::Double && g.atom(j).element == Element::O)
}

/// Non-ring single bonds between heavy atoms that both have at least two
/// heavy neighbours, excluding the C–N bond of amides.
pub fn rotatable_bonds(g: &MolecularGraph) -> u32 {
    g.bonds()
        .iter()
        .enumerate()
        .filter(|&(k, b)| {
            if b.order != BondOrder::Single || g.is_ring_bond(k) {
                return false;
            }
            let (x, y) = (b.a, b.b);
            if g.atom(x).element == Element::H || g.atom(y).element == Element::H {
                return false;
            }
            if heavy_degree(g, x) < 2 || heavy_degree(g, y) < 2 {
                return false;
            }
            let amide = |c: usize, n: usize| is_carbonyl_carbon(g, c) && g.atom(n).element == Element::N;
            !(amide(x, y) || amide(y, x))
        })
        .count() as u32
}

/// SSSR rings in which every bond is aromatic.
pub fn aromatic_ring_count(g: &MolecularGraph) -> u32 {
    g.rings()
        .iter()
        .filter(|ring| {
            (0..ring.len())
                .all(|k| g.bond_between(ring[k], ring[(k + 1) % ring.len()]).is_some_and(|b| g.bond(b).order == BondOrder::Aromatic))
        })
        .count() as u32
}

fn qed_aromatic_rings(g: &MolecularGraph, t: &MatchGraph, tables: &DescriptorTables) -> u32 {
    let n = g.atom_count();
    let keep: Vec<bool> = (0..n).map(|i| !tables.aliphatic_ring.matches_at(t, i)).collect();
    // Ring rank of the kept subgraph: edges - vertices + components.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    let mut cycles = 0u32;
    for b in g.bonds() {
        if !(keep[b.a] && keep[b.b]) {
            continue;
        }
        let (ra, rb) = (find(&mut parent, b.a), find(&mut parent, b.b));
        if ra == rb {
            cycles += 1;
        } else {
            parent[ra] = rb;
        }
    }
    cycles
}

/// Computes the full descriptor set.
pub fn compute_descriptors(g: &MolecularGraph, tables: &DescriptorTables) -> Result<DescriptorSet, DescriptorError> {
    let t = MatchGraph::new(g);
    let qed_hba = tables.acceptors.iter().map(|p| p.count_unique_matches(&t) as u32).sum();
    let qed_hbd = tables.donor.count_unique_matches(&t) as u32;
    let alerts = tables.alerts.iter().filter(|p| p.has_match(&t)).count() as u32;
    Ok(DescriptorSet {
        mw: molecular_weight(g),
        logp: crippen_logp(g, tables)?,
        tpsa: tpsa(g, tables),
        hbd: lipinski_hbd(g),
        hba: lipinski_hba(g),
        rotb: rotatable_bonds(g),
        arom: aromatic_ring_count(g),
        alerts,
        heavy_atoms: g.heavy_atom_count() as u32,
        qed_hbd,
        qed_hba,
        qed_arom: qed_aromatic_rings(g, &t, tables),
        qed_rotb: tables.rotatable.count_unique_matches(&t) as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    fn d(s: &str) -> DescriptorSet {
        compute_descriptors(&parse_smiles(s).unwrap(), DescriptorTables::builtin()).unwrap()
    }

    #[test]
    fn builtin_tables_load() {
        let t = DescriptorTables::builtin();
        assert_eq!(t.checksums().len(), 4);
        assert!(t.alert_count() > 100);
    }

    #[test]
    fn methane() {
        let x = d("C");
        assert!((x.mw - 16.043).abs() < 1e-3);
        assert_eq!((x.hbd, x.hba, x.rotb, x.arom), (0, 0, 0, 0));
        assert!((x.logp - 0.6361).abs() < 1e-4);
    }

    #[test]
    fn water() {
        let x = d("O");
        assert_eq!((x.hbd, x.hba), (1, 1));
        assert!((x.tpsa - 31.5).abs() < 1e-9);
    }

    #[test]
    fn amide_bond_is_not_rotatable() {
        assert_eq!(d("CCNC(C)=O").rotb, 1);
        assert_eq!(d("CCCNC(C)=O").rotb, 2);
        assert_eq!(d("CCCC").rotb, 1);
        assert_eq!(d("c1ccccc1-c1ccccc1").rotb, 1);
    }

    #[test]
    fn aromatic_rings() {
        assert_eq!(d("c1ccc2ccccc2c1").arom, 2);
        assert_eq!(d("C1CCc2ccccc2C1").arom, 1);
        assert_eq!(d("C1CCc2ccccc2C1").qed_arom, 1);
    }

    #[test]
    fn unparameterized_atom_is_reported() {
        let tables = DescriptorTables::from_text("C1\t[#6]\t0.1\n", TPSA_TABLE, ACCEPTOR_TABLE, ALERT_TABLE).unwrap();
        let err = crippen_logp(&parse_smiles("CO").unwrap(), &tables).unwrap_err();
        assert_eq!(err, DescriptorError::UnparameterizedAtom { atom: 1, element: "O".into() });
    }

    #[test]
    fn bad_table_lines_are_rejected() {
        assert!(DescriptorTables::from_text("C1\t[#6\t0.1\n", TPSA_TABLE, ACCEPTOR_TABLE, ALERT_TABLE).is_err());
        assert!(DescriptorTables::from_text(CRIPPEN_TABLE, "N 1 0\n", ACCEPTOR_TABLE, ALERT_TABLE).is_err());
    }
}
