use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::GeneratorError;
use crate::codec::{Dialect, Scheme, TString};
use crate::metrics::tokenize;

const HEADER: &str = "#tsmiles-ngram v1";

/// Sentinel padding the context before the first token.
pub const BOS: &str = "<s>";
/// Sentinel ending a sequence.
pub const EOS: &str = "</s>";

/// Add-k smoothed n-gram model over t-SMILES tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel<T> {
    pub order: usize,
    pub smoothing: T,
    pub scheme: Scheme,
    pub dialect: Dialect,
    /// Index 0 is [`BOS`], index 1 is [`EOS`], the rest are sorted tokens.
    vocab: Vec<String>,
    /// context (order - 1 token ids) -> next token id -> count
    counts: BTreeMap<Vec<u32>, BTreeMap<u32, u64>>,
}

impl<T: Float> NGramModel<T> {
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    /// Number of possible next tokens (every token plus [`EOS`]).
    pub fn outcomes(&self) -> usize {
        self.vocab.len() - 1
    }

    pub fn contexts(&self) -> impl Iterator<Item = &[u32]> {
        self.counts.keys().map(Vec::as_slice)
    }

    fn id(&self, tok: &str) -> Option<u32> {
        match tok {
            BOS => Some(0),
            EOS => Some(1),
            _ => self.vocab[2..].binary_search_by(|v| v.as_str().cmp(tok)).ok().map(|i| i as u32 + 2),
        }
    }

    /// Smoothed probability of token id `next` after `context`.
    pub fn prob(&self, context: &[u32], next: u32) -> T {
        let k = self.smoothing;
        let v = T::from(self.outcomes()).unwrap();
        let (c, total) = match self.counts.get(context) {
            Some(row) => (row.get(&next).copied().unwrap_or(0), row.values().sum::<u64>()),
            None => (0, 0),
        };
        (T::from(c).unwrap() + k) / (T::from(total).unwrap() + k * v)
    }

    /// Full next-token distribution after `context`, indexed by id - 1.
    pub fn distribution(&self, context: &[u32]) -> Vec<T> {
        (1..self.vocab.len() as u32).map(|t| self.prob(context, t)).collect()
    }

    fn encode(&self, text: &str) -> Option<Vec<u32>> {
        tokenize(text).into_iter().map(|t| self.id(t)).collect()
    }

    /// Plain-text form; [`NGramModel::load`] reads it back unchanged.
    pub fn save(&self) -> String {
        let mut s = format!(
            "{HEADER}\norder\t{}\nsmoothing\t{:?}\nscheme\t{}\ndialect\t{}\nvocab",
            self.order,
            self.smoothing.to_f64().unwrap(),
            self.scheme.name(),
            self.dialect.name()
        );
        for t in &self.vocab[2..] {
            let _ = write!(s, "\t{t}");
        }
        s.push('\n');
        for (ctx, row) in &self.counts {
            let ctx: Vec<String> = ctx.iter().map(u32::to_string).collect();
            let row: Vec<String> = row.iter().map(|(t, c)| format!("{t}:{c}")).collect();
            let _ = writeln!(s, "ctx\t{}\t{}", ctx.join(" "), row.join(" "));
        }
        s
    }

    pub fn load(text: &str) -> Result<Self, GeneratorError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == HEADER => {}
            _ => return Err(GeneratorError::format(1, "missing n-gram header")),
        }
        let (mut order, mut smoothing, mut scheme, mut dialect, mut vocab) = (None, None, None, None, None);
        let mut counts = BTreeMap::new();
        for (i, line) in lines {
            let n = i + 1;
            let bad = |what: &str| GeneratorError::format(n, what);
            let f: Vec<&str> = line.split('\t').collect();
            match f.as_slice() {
                ["order", o] => order = Some(o.parse::<usize>().map_err(|_| bad("bad order"))?),
                ["smoothing", k] => smoothing = Some(k.parse::<f64>().map_err(|_| bad("bad smoothing"))?),
                ["scheme", s] => scheme = Some(s.parse::<Scheme>().map_err(|_| bad("unknown scheme"))?),
                ["dialect", d] => dialect = Some(d.parse::<Dialect>().map_err(|_| bad("unknown dialect"))?),
                ["vocab", toks @ ..] => {
                    let mut v = vec![BOS.to_string(), EOS.to_string()];
                    v.extend(toks.iter().map(|t| t.to_string()));
                    vocab = Some(v);
                }
                ["ctx", ctx, row] => {
                    let parse = |s: &str| s.parse::<u32>().map_err(|_| bad("bad token id"));
                    let ctx = ctx.split(' ').filter(|s| !s.is_empty()).map(parse).collect::<Result<Vec<_>, _>>()?;
                    let mut r = BTreeMap::new();
                    for cell in row.split(' ') {
                        let (t, c) = cell.split_once(':').ok_or_else(|| bad("bad count cell"))?;
                        r.insert(parse(t)?, c.parse::<u64>().map_err(|_| bad("bad count"))?);
                    }
                    counts.insert(ctx, r);
                }
                [""] => {}
                _ => return Err(bad("unrecognized record")),
            }
        }
        let missing = |what: &str| GeneratorError::format(0, format!("missing {what}"));
        let order = order.ok_or_else(|| missing("order"))?;
        if !(2..=6).contains(&order) {
            return Err(GeneratorError::InvalidOrder(order));
        }
        let vocab = vocab.ok_or_else(|| missing("vocab"))?;
        let limit = vocab.len() as u32;
        for (ctx, row) in &counts {
            if ctx.len() != order - 1 || ctx.iter().chain(row.keys()).any(|&t| t >= limit) {
                return Err(GeneratorError::format(0, "context does not fit the vocabulary"));
            }
        }
        let smoothing = smoothing.ok_or_else(|| missing("smoothing"))?;
        Ok(NGramModel {
            order,
            smoothing: T::from(smoothing).ok_or(GeneratorError::InvalidSmoothing)?,
            scheme: scheme.ok_or_else(|| missing("scheme"))?,
            dialect: dialect.ok_or_else(|| missing("dialect"))?,
            vocab,
            counts,
        })
    }
}

fn windows(ids: &[u32], order: usize) -> impl Iterator<Item = (&[u32], u32)> + '_ {
    (order - 1..ids.len()).map(move |i| (&ids[i + 1 - order..i], ids[i]))
}

fn padded(ids: impl IntoIterator<Item = u32>, order: usize) -> Vec<u32> {
    let mut v = vec![0; order - 1];
    v.extend(ids);
    v.push(1);
    v
}

pub fn train_ngram<T: Float>(texts: &[TString], order: usize, smoothing: T) -> Result<NGramModel<T>, GeneratorError> {
    if !(2..=6).contains(&order) {
        return Err(GeneratorError::InvalidOrder(order));
    }
    if !(smoothing > T::zero() && smoothing.is_finite()) {
        return Err(GeneratorError::InvalidSmoothing);
    }
    let first = texts.first().ok_or(GeneratorError::EmptyCorpus)?;
    if texts.iter().any(|t| t.scheme != first.scheme || t.dialect != first.dialect) {
        return Err(GeneratorError::MixedCorpus);
    }
    let mut tokens: Vec<String> = texts.iter().flat_map(|t| tokenize(&t.text)).map(str::to_string).collect();
    tokens.sort_unstable();
    tokens.dedup();
    let mut vocab = vec![BOS.to_string(), EOS.to_string()];
    vocab.extend(tokens);
    let mut model =
        NGramModel { order, smoothing, scheme: first.scheme, dialect: first.dialect, vocab, counts: BTreeMap::new() };
    for t in texts {
        let ids = padded(model.encode(&t.text).expect("token in vocabulary"), order);
        for (ctx, next) in windows(&ids, order) {
            *model.counts.entry(ctx.to_vec()).or_default().entry(next).or_default() += 1;
        }
    }
    Ok(model)
}

/// `n` sequences, each drawn from its own stream of `seed` until the end
/// sentinel or `max_len` tokens. Texts are returned as sampled.
pub fn sample_ngram<T: Float + Send + Sync>(model: &NGramModel<T>, seed: u64, n: usize, max_len: usize) -> Vec<String> {
    let cumulative: HashMap<&[u32], Vec<T>> =
        model.counts.keys().map(|ctx| (ctx.as_slice(), prefix_sums(model.distribution(ctx)))).collect();
    let unseen = prefix_sums(model.distribution(&[]));
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let mut ctx = vec![0u32; model.order - 1];
            let mut out = String::new();
            for _ in 0..max_len {
                let cum = cumulative.get(ctx.as_slice()).unwrap_or(&unseen);
                let u = T::from(rng.gen::<f64>()).unwrap() * *cum.last().unwrap();
                let pick = cum.partition_point(|&c| c <= u).min(cum.len() - 1) as u32 + 1;
                if pick == 1 {
                    break;
                }
                out.push_str(&model.vocab[pick as usize]);
                ctx.remove(0);
                ctx.push(pick);
            }
            out
        })
        .collect()
}

fn prefix_sums<T: Float>(p: Vec<T>) -> Vec<T> {
    let mut acc = T::zero();
    p.into_iter()
        .map(|x| {
            acc = acc + x;
            acc
        })
        .collect()
}

/// Per-token perplexity, end sentinels included. Texts containing tokens
/// unknown to the model give infinity.
pub fn perplexity<T: Float>(model: &NGramModel<T>, texts: &[&str]) -> T {
    let mut log_sum = T::zero();
    let mut n = 0usize;
    for t in texts {
        let Some(ids) = model.encode(t) else { return T::infinity() };
        let ids = padded(ids, model.order);
        for (ctx, next) in windows(&ids, model.order) {
            log_sum = log_sum - model.prob(ctx, next).ln();
            n += 1;
        }
    }
    if n == 0 {
        return T::one();
    }
    (log_sum / T::from(n).unwrap()).exp()
}
