use std::collections::BTreeSet;

use num_traits::Float;
use rayon::prelude::*;

use super::{skeleton, GenerationReport};
use crate::assemble::{
    decode, random_reconstruct, AssemblyError, DecodeError, FailReason, ReconstructError, SelectionPolicy,
    DEFAULT_RETRIES,
};
use crate::chem::{canonical_smiles, validate_valence, Molecule};
use crate::codec::{fragment, EncodeError, Scheme, TString};
use crate::fragment::CutRule;

/// Per-input results, in input order, with the summary over them.
#[derive(Debug, Clone)]
pub struct BatchOutcome<T, E> {
    pub results: Vec<Result<Molecule, E>>,
    pub report: GenerationReport<T>,
}

impl<T, E> BatchOutcome<T, E> {
    pub fn molecules(&self) -> impl Iterator<Item = &Molecule> {
        self.results.iter().filter_map(|r| r.as_ref().ok())
    }
}

fn checked<E>(m: Molecule, invalid: impl FnOnce() -> E) -> Result<Molecule, E> {
    if validate_valence(&m).ok {
        Ok(m)
    } else {
        Err(invalid())
    }
}

/// Decodes every line; a failing line is recorded and the batch goes on.
/// With a random policy, line `i` uses seed `seed + i`.
pub fn decode_batch<T: Float>(
    texts: &[TString],
    policy: SelectionPolicy<'_>,
    lenient: bool,
    reference: Option<&BTreeSet<String>>,
) -> BatchOutcome<T, DecodeError> {
    let results: Vec<Result<Molecule, DecodeError>> = texts
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let p = match policy {
                SelectionPolicy::Random(seed) => SelectionPolicy::Random(seed.wrapping_add(i as u64)),
                scored => scored,
            };
            let m = decode(t, p, lenient)?;
            checked(m, || {
                DecodeError::Assembly(AssemblyError {
                    stage: "validate",
                    parent: None,
                    child: None,
                    reason: FailReason::ValenceViolation,
                })
            })
        })
        .collect();
    let canon: Vec<String> = results.iter().filter_map(|r| r.as_ref().ok()).map(canonical_smiles).collect();
    let skeletons: Vec<String> =
        texts.iter().zip(&results).filter(|(_, r)| r.is_ok()).map(|(t, _)| skeleton(&t.text)).collect();
    let report = GenerationReport::tally(
        texts.len(),
        texts.len(),
        canon.iter().map(String::as_str),
        Some(skeletons.iter().map(String::as_str)),
        reference,
    );
    BatchOutcome { results, report }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReconstructEachError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
}

/// Per-molecule mode: each molecule is rebuilt from its own fragments in a
/// random tree with random joins (molecule `i` uses seed `seed + i`).
/// Novelty is measured against `reference` when given.
pub fn reconstruct_each<T: Float>(
    mols: &[Molecule],
    scheme: Scheme,
    rule: &CutRule,
    seed: u64,
    reference: Option<&BTreeSet<String>>,
) -> BatchOutcome<T, ReconstructEachError> {
    let results: Vec<Result<Molecule, ReconstructEachError>> = mols
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let frags = fragment(m, scheme, rule)?.fragments;
            let (out, _) = random_reconstruct(&frags, scheme, seed.wrapping_add(i as u64), DEFAULT_RETRIES)?;
            checked(out, || ReconstructError::ExhaustedRetries { attempts: DEFAULT_RETRIES, last: None }.into())
        })
        .collect();
    let canon: Vec<String> = results.iter().filter_map(|r| r.as_ref().ok()).map(canonical_smiles).collect();
    let report = GenerationReport::tally(
        mols.len(),
        mols.len(),
        canon.iter().map(String::as_str),
        None::<std::iter::Empty<&str>>,
        reference,
    );
    BatchOutcome { results, report }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;
    use crate::codec::{encode, Dialect};
    use crate::fragment::RootPolicy;

    const CORPUS: [&str; 5] = [
        "CC(=O)NC1=CC=C(O)C=C1",
        "CC1=CC=C(C=C1)C1=CC(C(F)(F)F)=NN1C1=CC=C(C=C1)S(N)(=O)=O",
        "CCN(CC)CCOC(=O)C1=CC=C(N)C=C1",
        "CC(C)CC1=CC=C(C=C1)C(C)C(O)=O",
        "OC1=CC=CC=C1",
    ];

    fn mols() -> Vec<Molecule> {
        CORPUS.iter().map(|s| parse_smiles(s).unwrap()).collect()
    }

    fn reference() -> BTreeSet<String> {
        mols().iter().map(canonical_smiles).collect()
    }

    #[test]
    fn self_reference_batch() {
        let texts: Vec<TString> = mols()
            .iter()
            .map(|m| {
                encode(m, Scheme::Tsid, &CutRule::mmpa_lite(), Dialect::Paper, RootPolicy::CanonicalFirst).unwrap()
            })
            .collect();
        let out = decode_batch::<f64>(&texts, SelectionPolicy::Random(0), false, Some(&reference()));
        assert_eq!(out.report.validity, 1.0);
        assert_eq!(out.report.novelty, Some(0.0));
        assert_eq!(out.report.distinct, 5);
    }

    #[test]
    fn malformed_line_counted() {
        let mut texts: Vec<TString> = mols()
            .iter()
            .map(|m| {
                encode(m, Scheme::Tsdy, &CutRule::mmpa_lite(), Dialect::Paper, RootPolicy::CanonicalFirst).unwrap()
            })
            .collect();
        texts[2].text = "^C(&&".to_string();
        let out = decode_batch::<f64>(&texts, SelectionPolicy::Random(0), false, None);
        assert_eq!(out.report.validity, 0.8);
        assert_eq!(out.report.rejected, 1);
        assert!(out.results[2].is_err());
        assert!(out.molecules().all(|m| validate_valence(m).ok));
    }

    #[test]
    fn per_molecule_novelty_ordering() {
        let r = reference();
        let tsid = reconstruct_each::<f64>(&mols(), Scheme::Tsid, &CutRule::mmpa_lite(), 1, Some(&r));
        let tssa = reconstruct_each::<f64>(&mols(), Scheme::Tssa, &CutRule::mmpa_lite(), 1, Some(&r));
        assert_eq!(tsid.report.novelty, Some(0.0));
        assert!(tssa.report.novelty > tsid.report.novelty);
        assert_eq!(tssa.report.validity, 1.0);
    }
}
