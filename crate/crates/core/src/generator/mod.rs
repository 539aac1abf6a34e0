//! Molecule generation: fragment pools for train-free reconstruction, an
//! n-gram model over t-SMILES texts, and batch decoding with summary rates.

mod batch;
mod ngram;
mod pool;

use std::collections::BTreeSet;

use num_traits::Float;
use serde::Serialize;
use thiserror::Error;

pub use batch::{decode_batch, reconstruct_each, BatchOutcome, ReconstructEachError};
pub use ngram::{perplexity, sample_ngram, train_ngram, NGramModel, BOS, EOS};
pub use pool::{build_pool, sample_pool, FragmentPool, PoolEntry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("fragment pool is empty")]
    EmptyPool,
    #[error("n-gram order {0} outside 2..=6")]
    InvalidOrder(usize),
    #[error("smoothing constant must be positive and finite")]
    InvalidSmoothing,
    #[error("corpus mixes schemes or dialects")]
    MixedCorpus,
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
}

impl GeneratorError {
    pub(crate) fn format(line: usize, reason: impl Into<String>) -> Self {
        GeneratorError::Format { line, reason: reason.into() }
    }
}

/// Validity, uniqueness and novelty of a batch of generated molecules.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationReport<T> {
    /// Draws or input lines.
    pub attempted: usize,
    /// Molecules emitted; each passed valence validation.
    pub valid: usize,
    /// Draws or lines that produced no molecule.
    pub rejected: usize,
    /// Distinct canonical texts among the emitted molecules.
    pub distinct: usize,
    /// Distinct texts absent from the reference set, when one was given.
    pub novel: Option<usize>,
    pub validity: T,
    pub uniqueness: T,
    pub novelty: Option<T>,
    /// Distinct tree skeletons: serialized texts with fragments erased.
    pub distinct_skeletons: Option<usize>,
}

fn ratio<T: Float>(a: usize, b: usize) -> T {
    if b == 0 {
        T::zero()
    } else {
        T::from(a).unwrap() / T::from(b).unwrap()
    }
}

impl<T: Float> GenerationReport<T> {
    /// `validity_base` is the denominator of the validity rate.
    pub(crate) fn tally<'a>(
        attempted: usize,
        validity_base: usize,
        canonical: impl IntoIterator<Item = &'a str>,
        skeletons: Option<impl IntoIterator<Item = &'a str>>,
        reference: Option<&BTreeSet<String>>,
    ) -> Self {
        let mut valid = 0;
        let mut distinct = BTreeSet::new();
        for c in canonical {
            valid += 1;
            distinct.insert(c);
        }
        let skeletons = skeletons.map(|s| s.into_iter().collect::<BTreeSet<&str>>().len());
        let novel = reference.map(|r| distinct.iter().filter(|c| !r.contains(**c)).count());
        GenerationReport {
            attempted,
            valid,
            rejected: attempted - valid,
            distinct: distinct.len(),
            novel,
            validity: ratio(valid, validity_base),
            uniqueness: ratio(distinct.len(), valid),
            novelty: novel.map(|k| ratio(k, distinct.len())),
            distinct_skeletons: skeletons,
        }
    }
}

impl<T: Float + std::fmt::Display> GenerationReport<T> {
    /// One `name<TAB>value` line per field.
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("attempted\t{}", self.attempted),
            format!("valid\t{}", self.valid),
            format!("rejected\t{}", self.rejected),
            format!("distinct\t{}", self.distinct),
            format!("validity\t{:.3}", self.validity),
            format!("uniqueness\t{:.3}", self.uniqueness),
        ];
        if let (Some(n), Some(r)) = (self.novel, self.novelty) {
            out.push(format!("novel\t{n}"));
            out.push(format!("novelty\t{r:.3}"));
        }
        if let Some(k) = self.distinct_skeletons {
            out.push(format!("distinct_skeletons\t{k}"));
        }
        out
    }
}

/// Marker characters of a t-SMILES text, in order.
pub fn skeleton(text: &str) -> String {
    text.chars().filter(|&c| c == '&' || c == '^').collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Set arithmetic done the slow way.
    fn brute(outputs: &[&str], reference: &[&str]) -> (usize, usize) {
        let mut distinct: Vec<&str> = Vec::new();
        for o in outputs {
            if !distinct.contains(o) {
                distinct.push(o);
            }
        }
        let novel = distinct.iter().filter(|d| !reference.contains(d)).count();
        (distinct.len(), novel)
    }

    #[test]
    fn tally_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let alphabet = ["C", "CC", "CO", "CN", "c1ccccc1", "O"];
        for _ in 0..50 {
            let n = rng.gen_range(0..100);
            let outs: Vec<&str> = (0..n).map(|_| alphabet[rng.gen_range(0..6)]).collect();
            let refs: Vec<&str> = (0..3).map(|_| alphabet[rng.gen_range(0..6)]).collect();
            let set: BTreeSet<String> = refs.iter().map(|s| s.to_string()).collect();
            let r: GenerationReport<f64> =
                GenerationReport::tally(n + 2, n + 2, outs.iter().copied(), Some(["&&"]), Some(&set));
            let (d, k) = brute(&outs, &refs);
            assert_eq!((r.valid, r.rejected, r.distinct, r.novel), (n, 2, d, Some(k)));
            if d > 0 {
                assert_eq!(r.novelty, Some(k as f64 / d as f64));
                assert_eq!(r.uniqueness, d as f64 / n as f64);
            }
        }
    }

    #[test]
    fn skeleton_keeps_markers() {
        assert_eq!(skeleton("[1*]C&[1*]C^&&"), "&^&&");
    }
}
