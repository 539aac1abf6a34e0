//! String statistics over SMILES / t-SMILES texts and descriptor distances.

use std::collections::BTreeMap;

use num_traits::Float;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::chem::{descriptors, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("unbalanced parenthesis on line {line}")]
    UnbalancedParen { line: usize },
    #[error("empty sample")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
}

/// Splits a text into tokens: bracket groups, `Cl`, `Br` and `%nn` ring
/// labels are single tokens, everything else is one character.
pub fn tokenize(text: &str) -> Vec<&str> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < text.len() {
        let len = match b[i] {
            b'[' => text[i..].find(']').map_or(text.len() - i, |e| e + 1),
            b'C' if b.get(i + 1) == Some(&b'l') => 2,
            b'B' if b.get(i + 1) == Some(&b'r') => 2,
            b'%' if b.len() >= i + 3 && b[i + 1].is_ascii_digit() && b[i + 2].is_ascii_digit() => 3,
            _ => text[i..].chars().next().map_or(1, char::len_utf8),
        };
        out.push(&text[i..i + len]);
        i += len;
    }
    out
}

/// Histogram category of a token from [`tokenize`].
pub fn token_category(token: &str) -> &str {
    match token {
        "Cl" | "Br" | "B" | "C" | "N" | "O" | "P" | "S" | "F" | "I" | "b" | "c" | "n" | "o" | "p" | "s" => token,
        "(" | ")" | "=" | "#" | "&" | "^" => token,
        t if t.starts_with('[') => "bracket",
        t if t.starts_with('%') || (t.len() == 1 && t.as_bytes()[0].is_ascii_digit()) => "digit",
        _ => "other",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenHistogram<T> {
    pub total: usize,
    /// category -> (count, fraction)
    pub entries: BTreeMap<String, (usize, T)>,
}

impl<T: Float> TokenHistogram<T> {
    fn from_counts(counts: BTreeMap<String, usize>) -> Self {
        let total: usize = counts.values().sum();
        let denom = T::from(total).unwrap();
        let entries = counts.into_iter().map(|(k, c)| (k, (c, T::from(c).unwrap() / denom))).collect();
        TokenHistogram { total, entries }
    }

    pub fn fraction(&self, category: &str) -> T {
        self.entries.get(category).map_or(T::zero(), |e| e.1)
    }

    pub fn count(&self, category: &str) -> usize {
        self.entries.get(category).map_or(0, |e| e.0)
    }

    /// Combined share of `(` and `)`.
    pub fn paren_fraction(&self) -> T {
        self.fraction("(") + self.fraction(")")
    }
}

fn merge_counts<K: Ord>(mut a: BTreeMap<K, usize>, b: BTreeMap<K, usize>) -> BTreeMap<K, usize> {
    for (k, v) in b {
        *a.entry(k).or_default() += v;
    }
    a
}

pub fn token_distribution<T: Float, S: AsRef<str> + Sync>(texts: &[S]) -> Result<TokenHistogram<T>, MetricsError> {
    let counts = texts
        .par_iter()
        .fold(BTreeMap::new, |mut acc, t| {
            for tok in tokenize(t.as_ref()) {
                *acc.entry(token_category(tok).to_string()).or_default() += 1;
            }
            acc
        })
        .reduce(BTreeMap::new, merge_counts);
    if counts.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    Ok(TokenHistogram::from_counts(counts))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthHistogram<T> {
    pub total: usize,
    /// depth -> (count, fraction)
    pub depths: BTreeMap<usize, (usize, T)>,
}

impl<T: Float> DepthHistogram<T> {
    pub fn fraction(&self, depth: usize) -> T {
        self.depths.get(&depth).map_or(T::zero(), |e| e.1)
    }

    fn range(&self, lo: usize, hi: usize) -> T {
        self.depths.range(lo..=hi).fold(T::zero(), |acc, (_, e)| acc + e.1)
    }

    pub fn bucket_0_2(&self) -> T {
        self.range(0, 2)
    }

    pub fn bucket_3_5(&self) -> T {
        self.range(3, 5)
    }

    pub fn bucket_6_plus(&self) -> T {
        self.range(6, usize::MAX)
    }
}

/// Depth of every character of `text`; an opening parenthesis counts at the
/// depth it opens. `&` and `^` are skipped.
fn depths_of(text: &str) -> Option<Vec<usize>> {
    let mut depth = 0usize;
    let mut out = Vec::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' | '^' => continue,
            '(' => {
                depth += 1;
                out.push(depth);
            }
            ')' => {
                out.push(depth);
                depth = depth.checked_sub(1)?;
            }
            _ => out.push(depth),
        }
    }
    (depth == 0).then_some(out)
}

/// Per-character parenthesis depth over all texts. Line numbers in errors
/// are 1-based positions in `texts`.
pub fn nesting_depth<T: Float, S: AsRef<str> + Sync>(texts: &[S]) -> Result<DepthHistogram<T>, MetricsError> {
    let counts = texts
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let d = depths_of(t.as_ref()).ok_or(MetricsError::UnbalancedParen { line: i + 1 })?;
            let mut acc = BTreeMap::new();
            for x in d {
                *acc.entry(x).or_default() += 1;
            }
            Ok(acc)
        })
        .try_reduce(BTreeMap::new, |a, b| Ok(merge_counts(a, b)))?;
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(MetricsError::EmptyCorpus);
    }
    let denom = T::from(total).unwrap();
    let depths = counts.into_iter().map(|(k, c)| (k, (c, T::from(c).unwrap() / denom))).collect();
    Ok(DepthHistogram { total, depths })
}

fn sorted<T: Float>(xs: &[T]) -> Result<Vec<T>, MetricsError> {
    if xs.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(v)
}

/// Wasserstein-1 distance between two empirical distributions, integrating
/// the absolute difference of their quantile functions.
pub fn wasserstein_1d<T: Float>(a: &[T], b: &[T]) -> Result<T, MetricsError> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (n, m) = (a.len(), b.len());
    let nm = T::from(n * m).unwrap();
    let (mut i, mut j) = (0, 0);
    // positions along [0, 1] scaled by n * m
    let mut t = 0usize;
    let mut acc = T::zero();
    while i < n && j < m {
        let (ea, eb) = ((i + 1) * m, (j + 1) * n);
        let next = ea.min(eb);
        acc = acc + T::from(next - t).unwrap() * (a[i] - b[j]).abs();
        t = next;
        if ea == next {
            i += 1;
        }
        if eb == next {
            j += 1;
        }
    }
    Ok(acc / nm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionReport<T> {
    pub heavy_atom_count: T,
    pub ring_count: T,
    pub mol_weight: T,
}

impl<T: Float + std::fmt::Display> DistributionReport<T> {
    /// One `name<TAB>value` line per descriptor.
    pub fn lines(&self) -> Vec<String> {
        vec![
            format!("w1_heavy_atom_count\t{}", self.heavy_atom_count),
            format!("w1_ring_count\t{}", self.ring_count),
            format!("w1_mol_weight\t{}", self.mol_weight),
        ]
    }
}

/// W1 distance per descriptor between generated and reference molecules.
pub fn distribution_report<T: Float + Send + Sync>(
    generated: &[Molecule],
    reference: &[Molecule],
) -> Result<DistributionReport<T>, MetricsError> {
    let columns = |mols: &[Molecule]| {
        let d: Vec<_> = mols.par_iter().map(descriptors::<T>).collect();
        (
            d.iter().map(|x| T::from(x.heavy_atom_count).unwrap()).collect::<Vec<T>>(),
            d.iter().map(|x| T::from(x.ring_count).unwrap()).collect::<Vec<T>>(),
            d.iter().map(|x| x.mol_weight).collect::<Vec<T>>(),
        )
    };
    let (ga, gr, gw) = columns(generated);
    let (ra, rr, rw) = columns(reference);
    Ok(DistributionReport {
        heavy_atom_count: wasserstein_1d(&ga, &ra)?,
        ring_count: wasserstein_1d(&gr, &rr)?,
        mol_weight: wasserstein_1d(&gw, &rw)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn tokens() {
        assert_eq!(tokenize("ClC[1*]Br%12c&^"), ["Cl", "C", "[1*]", "Br", "%12", "c", "&", "^"]);
        let cats: Vec<&str> = tokenize("[nH]1=#*").into_iter().map(token_category).collect();
        assert_eq!(cats, ["bracket", "digit", "=", "#", "other"]);
    }

    #[test]
    fn token_examples() {
        let h: TokenHistogram<f64> = token_distribution(&["CC"]).unwrap();
        assert_eq!(h.entries.len(), 1);
        assert_eq!(h.fraction("C"), 1.0);
        let h: TokenHistogram<f64> = token_distribution(&["C(C)C"]).unwrap();
        assert!((h.fraction("C") - 0.6).abs() < 1e-12);
        assert!((h.paren_fraction() - 0.4).abs() < 1e-12);
        let h: TokenHistogram<f64> = token_distribution(&["[1*]C&[1*]C^&"]).unwrap();
        assert_eq!((h.count("bracket"), h.count("&"), h.count("^")), (2, 2, 1));
        let sum: f64 = h.entries.values().map(|e| e.1).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        let empty: [&str; 0] = [];
        assert_eq!(token_distribution::<f64, _>(&empty), Err(MetricsError::EmptyCorpus));
    }

    #[test]
    fn depth_examples() {
        let h: DepthHistogram<f64> = nesting_depth(&["CC"]).unwrap();
        assert_eq!(h.fraction(0), 1.0);
        // C:0 (:1 C:1 (:2 C:2 ):2 ):1
        let h: DepthHistogram<f64> = nesting_depth(&["C(C(C))"]).unwrap();
        assert_eq!(h.total, 7);
        assert_eq!(h.depths[&0].0, 1);
        assert_eq!(h.depths[&1].0, 3);
        assert_eq!(h.depths[&2].0, 3);
        assert!((h.bucket_0_2() - 1.0).abs() < 1e-12);
        assert_eq!(nesting_depth::<f64, _>(&["CC", "C(C"]), Err(MetricsError::UnbalancedParen { line: 2 }));
        assert_eq!(nesting_depth::<f64, _>(&["C)C("]), Err(MetricsError::UnbalancedParen { line: 1 }));
        let deep: DepthHistogram<f64> = nesting_depth(&["C(C(C(C(C(C(C))))))"]).unwrap();
        let s = deep.bucket_0_2() + deep.bucket_3_5() + deep.bucket_6_plus();
        assert!((s - 1.0).abs() < 1e-12 && deep.bucket_6_plus() > 0.0);
    }

    #[test]
    fn markers_are_transparent() {
        let a: DepthHistogram<f64> = nesting_depth(&["CC(C)(F)F&&"]).unwrap();
        let b: DepthHistogram<f64> = nesting_depth(&["CC(C)(F)F"]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn w1_examples() {
        assert_eq!(wasserstein_1d(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(wasserstein_1d(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(wasserstein_1d(&[0.0, 1.0], &[0.0, 3.0]).unwrap(), 1.0);
        // point mass at 0 vs {0, 2}: half the mass moves by 2
        assert_eq!(wasserstein_1d(&[0.0], &[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(wasserstein_1d::<f64>(&[], &[1.0]), Err(MetricsError::EmptySample));
        assert_eq!(wasserstein_1d(&[f64::NAN], &[1.0]), Err(MetricsError::NonFinite));
        let w: f32 = wasserstein_1d(&[0.0f32, 1.0], &[2.0f32, 3.0]).unwrap();
        assert_eq!(w, 2.0);
    }

    #[test]
    fn report_examples() {
        let mols = |xs: &[&str]| -> Vec<Molecule> { xs.iter().map(|s| parse_smiles(s).unwrap()).collect() };
        let r = mols(&["c1ccccc1", "C1CC1", "CCO"]);
        let z: DistributionReport<f64> = distribution_report(&r, &r).unwrap();
        assert_eq!((z.heavy_atom_count, z.ring_count, z.mol_weight), (0.0, 0.0, 0.0));
        // drop the cyclopropane, duplicate ethanol: ring counts {1,1,0} vs {1,0,0}
        let g = mols(&["c1ccccc1", "CCO", "CCO"]);
        let d: DistributionReport<f64> = distribution_report(&g, &r).unwrap();
        assert!((d.ring_count - 1.0 / 3.0).abs() < 1e-12);
        // heavy atoms {6,3,3} vs {6,3,3}
        assert_eq!(d.heavy_atom_count, 0.0);
        assert_eq!(d.lines().len(), 3);
    }
}
