//! Small drug-like reference corpus shipped with the crate.

const CORPUS: &str = include_str!("../data/corpus.smi");

/// Lines of the bundled corpus, one SMILES each.
pub fn bundled_corpus() -> Vec<&'static str> {
    CORPUS.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}
