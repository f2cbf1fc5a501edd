//! Chemistry primitives: molecular graphs, SMILES I/O, canonicalization,
//! Morgan fingerprints, physicochemical descriptors and drug-likeness scores.

pub mod aromatic;
pub mod canon;
pub mod descriptors;
pub mod element;
pub mod fingerprint;
pub mod graph;
pub mod qed;
pub mod rings;
pub mod sascore;
pub mod scoring;
pub mod smarts;
pub mod smiles;
pub mod writer;

pub use canon::{canonical_key, dedupe};
pub use element::Element;
pub use fingerprint::{default_fingerprint, morgan_fingerprint, tanimoto, Fingerprint, FingerprintError};
pub use graph::{Atom, Bond, BondOrder, GraphError, MolecularGraph};
pub use smiles::{parse_smiles, SmilesError};
pub use writer::write_smiles;
