//! Molecular graph model and the SMILES subset used throughout the crate.

mod canon;
mod descriptors;
mod element;
mod kekule;
mod mol;
mod parse;
mod valence;
mod write;

pub use canon::canonical_rank;
pub use descriptors::{descriptors, Descriptors};
pub use element::Element;
pub use kekule::{flippable_bonds, kekulize, KekulizeError};
pub use mol::{Atom, Bond, BondOrder, Molecule};
pub use parse::{parse_smiles, SmilesError};
pub use valence::{validate_valence, ValenceReport, ValenceViolation};
pub use write::{canonical_smiles, write_smiles, WriteMode};

/// Canonical text of a SMILES string, or the parse error.
pub fn canonicalize(text: &str) -> Result<String, SmilesError> {
    parse_smiles(text).map(|m| canonical_smiles(&m))
}
