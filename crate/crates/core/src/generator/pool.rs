use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use num_traits::Float;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{GenerationReport, GeneratorError};
use crate::amt::Amt;
use crate::assemble::{assemble, open_slots, SelectionPolicy, DEFAULT_RETRIES};
use crate::chem::{canonical_smiles, parse_smiles, validate_valence, BondOrder, Element, Molecule};
use crate::codec::{amt_to_fbt, encode_amt, serialize, Dialect, Scheme};
use crate::fragment::{CutRule, Fragment, FragmentKind, RootPolicy};

const HEADER: &str = "#tsmiles-pool v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolEntry {
    pub text: String,
    pub kind: FragmentKind,
    pub count: usize,
    /// Open attachment points: `<id><bond>` per dummy (`1-,2-` or `-,=`),
    /// or an element symbol per replaceable hydrogen for shared-atom nodes.
    pub profile: String,
}

/// Fragment inventory of a corpus with its tree shape statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentPool {
    pub scheme: Scheme,
    pub entries: Vec<PoolEntry>,
    /// tree node count -> molecules
    pub sizes: BTreeMap<usize, usize>,
    /// child count -> tree nodes
    pub branching: BTreeMap<usize, usize>,
    pub molecules: usize,
    /// Corpus lines that could not be fragmented (1-based line, reason).
    pub skipped: Vec<(usize, String)>,
}

fn kind_name(k: FragmentKind) -> &'static str {
    match k {
        FragmentKind::Dummy => "dummy",
        FragmentKind::Group => "group",
        FragmentKind::BondNode => "bond",
    }
}

fn kind_from(s: &str) -> Option<FragmentKind> {
    match s {
        "dummy" => Some(FragmentKind::Dummy),
        "group" => Some(FragmentKind::Group),
        "bond" => Some(FragmentKind::BondNode),
        _ => None,
    }
}

fn profile(f: &Fragment) -> String {
    let slots = open_slots(f);
    let parts: Vec<String> = slots
        .iter()
        .map(|&(id, order, atom)| match f.kind {
            FragmentKind::Dummy => format!("{}{}", id.map(|x| x.to_string()).unwrap_or_default(), order.symbol()),
            _ => f.mol.atom(atom).element.symbol().to_string(),
        })
        .collect();
    parts.join(",")
}

struct Decomposed {
    frags: Vec<(String, FragmentKind)>,
    size: usize,
    branching: Vec<usize>,
}

fn decompose(line: &str, scheme: Scheme, rule: &CutRule) -> Result<Decomposed, String> {
    let mol = parse_smiles(line).map_err(|e| e.to_string())?;
    if scheme == Scheme::Vanilla {
        return Ok(Decomposed {
            frags: vec![(canonical_smiles(&mol), FragmentKind::Dummy)],
            size: 1,
            branching: vec![0],
        });
    }
    let amt = encode_amt(&mol, scheme, rule, RootPolicy::CanonicalFirst).map_err(|e| e.to_string())?;
    Ok(Decomposed {
        frags: amt.nodes().iter().map(|f| (f.text(), f.kind)).collect(),
        size: amt.len(),
        branching: (0..amt.len()).map(|i| amt.children(i).len()).collect(),
    })
}

/// Aggregates the fragments of every corpus line. Lines that fail to parse
/// or fragment are recorded in `skipped`.
pub fn build_pool<S: AsRef<str> + Sync>(
    corpus: &[S],
    scheme: Scheme,
    rule: &CutRule,
) -> Result<FragmentPool, GeneratorError> {
    let parts: Vec<Result<Decomposed, String>> =
        corpus.par_iter().map(|l| decompose(l.as_ref(), scheme, rule)).collect();
    let mut counts: BTreeMap<(FragmentKind, String), usize> = BTreeMap::new();
    let mut pool = FragmentPool {
        scheme,
        entries: Vec::new(),
        sizes: BTreeMap::new(),
        branching: BTreeMap::new(),
        molecules: 0,
        skipped: Vec::new(),
    };
    for (i, p) in parts.into_iter().enumerate() {
        match p {
            Ok(d) => {
                pool.molecules += 1;
                *pool.sizes.entry(d.size).or_default() += 1;
                for b in d.branching {
                    *pool.branching.entry(b).or_default() += 1;
                }
                for (text, kind) in d.frags {
                    *counts.entry((kind, text)).or_default() += 1;
                }
            }
            Err(reason) => pool.skipped.push((i + 1, reason)),
        }
    }
    if pool.molecules == 0 {
        return Err(GeneratorError::EmptyCorpus);
    }
    for ((kind, text), count) in counts {
        let f = Fragment::from_mol(parse_smiles(&text).expect("fragment text parses"), kind);
        pool.entries.push(PoolEntry { profile: profile(&f), text, kind, count });
    }
    Ok(pool)
}

impl FragmentPool {
    pub fn total_count(&self) -> usize {
        self.entries.iter().map(|e| e.count).sum()
    }

    pub fn count(&self, text: &str) -> usize {
        self.entries.iter().filter(|e| e.text == text).map(|e| e.count).sum()
    }

    /// Plain-text form; [`FragmentPool::load`] reads it back unchanged.
    pub fn save(&self) -> String {
        let mut s = format!("{HEADER}\nscheme\t{}\nmolecules\t{}\n", self.scheme.name(), self.molecules);
        for (k, v) in &self.sizes {
            let _ = writeln!(s, "size\t{k}\t{v}");
        }
        for (k, v) in &self.branching {
            let _ = writeln!(s, "branch\t{k}\t{v}");
        }
        for (line, reason) in &self.skipped {
            let _ = writeln!(s, "skip\t{line}\t{}", reason.replace(['\t', '\n'], " "));
        }
        for e in &self.entries {
            let _ = writeln!(s, "frag\t{}\t{}\t{}\t{}", kind_name(e.kind), e.count, e.profile, e.text);
        }
        s
    }

    pub fn load(text: &str) -> Result<FragmentPool, GeneratorError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == HEADER => {}
            _ => return Err(GeneratorError::format(1, "missing pool header")),
        }
        let mut pool = FragmentPool {
            scheme: Scheme::Tsid,
            entries: Vec::new(),
            sizes: BTreeMap::new(),
            branching: BTreeMap::new(),
            molecules: 0,
            skipped: Vec::new(),
        };
        let mut have_scheme = false;
        for (i, line) in lines {
            let n = i + 1;
            let bad = |what: &str| GeneratorError::format(n, what);
            let f: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad number"));
            match f.as_slice() {
                ["scheme", s] => {
                    pool.scheme = s.parse().map_err(|_| bad("unknown scheme"))?;
                    have_scheme = true;
                }
                ["molecules", m] => pool.molecules = num(m)?,
                ["size", k, v] => {
                    pool.sizes.insert(num(k)?, num(v)?);
                }
                ["branch", k, v] => {
                    pool.branching.insert(num(k)?, num(v)?);
                }
                ["skip", k, reason] => pool.skipped.push((num(k)?, reason.to_string())),
                ["frag", kind, count, prof, text] => {
                    let kind = kind_from(kind).ok_or_else(|| bad("unknown fragment kind"))?;
                    let count = num(count)?;
                    if count == 0 {
                        return Err(bad("zero count"));
                    }
                    let mol = parse_smiles(text).map_err(|e| bad(&e.to_string()))?;
                    if !validate_valence(&mol).ok {
                        return Err(bad("fragment fails valence validation"));
                    }
                    let frag = Fragment::from_mol(mol, kind);
                    if profile(&frag) != *prof {
                        return Err(bad("profile does not match fragment"));
                    }
                    pool.entries.push(PoolEntry { text: text.to_string(), kind, count, profile: prof.to_string() });
                }
                [""] => {}
                _ => return Err(bad("unrecognized record")),
            }
        }
        if !have_scheme {
            return Err(GeneratorError::format(2, "missing scheme"));
        }
        Ok(pool)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum SlotKey {
    Id(u32),
    Order(BondOrder),
    Atom(FragmentKind, Element),
}

type Slot = (Option<u32>, BondOrder, usize);

fn key_of(scheme: Scheme, f: &Fragment, s: Slot) -> SlotKey {
    match scheme {
        Scheme::Tsid => SlotKey::Id(s.0.unwrap_or(0)),
        Scheme::Tsdy | Scheme::Vanilla => SlotKey::Order(s.1),
        Scheme::Tssa => SlotKey::Atom(f.kind, f.mol.atom(s.2).element),
    }
}

/// Key a fragment slot must have to plug into an open slot with key `k`.
fn partner(k: SlotKey) -> SlotKey {
    match k {
        SlotKey::Atom(FragmentKind::Group, e) => SlotKey::Atom(FragmentKind::BondNode, e),
        SlotKey::Atom(_, e) => SlotKey::Atom(FragmentKind::Group, e),
        other => other,
    }
}

/// Fragments that can plug into a slot, with sampling weights.
struct Choices {
    options: Vec<(usize, Vec<usize>)>,
    dist: WeightedIndex<usize>,
}

struct Sampler {
    scheme: Scheme,
    frags: Vec<Fragment>,
    slots: Vec<Vec<Slot>>,
    roots: (Vec<usize>, WeightedIndex<usize>),
    sizes: (Vec<usize>, WeightedIndex<usize>),
    any: HashMap<SlotKey, Choices>,
    terminal: HashMap<SlotKey, Choices>,
}

fn index(
    pool: &FragmentPool,
    scheme: Scheme,
    frags: &[Fragment],
    slots: &[Vec<Slot>],
    terminal: bool,
) -> HashMap<SlotKey, Choices> {
    let mut by_key: BTreeMap<usize, HashMap<SlotKey, Vec<usize>>> = BTreeMap::new();
    for (fi, f) in frags.iter().enumerate() {
        if terminal && slots[fi].len() != 1 && f.kind != FragmentKind::Group {
            continue;
        }
        for (si, &s) in slots[fi].iter().enumerate() {
            by_key.entry(fi).or_default().entry(key_of(scheme, f, s)).or_default().push(si);
        }
    }
    let mut grouped: HashMap<SlotKey, Vec<(usize, Vec<usize>)>> = HashMap::new();
    for (fi, keys) in by_key {
        for (k, s) in keys {
            grouped.entry(k).or_default().push((fi, s));
        }
    }
    grouped
        .into_iter()
        .map(|(k, options)| {
            let dist = WeightedIndex::new(options.iter().map(|o| pool.entries[o.0].count)).unwrap();
            (k, Choices { options, dist })
        })
        .collect()
}

impl Sampler {
    fn new(pool: &FragmentPool) -> Result<Self, GeneratorError> {
        if pool.entries.is_empty() || pool.sizes.is_empty() {
            return Err(GeneratorError::EmptyPool);
        }
        let scheme = pool.scheme;
        let frags: Vec<Fragment> = pool
            .entries
            .iter()
            .map(|e| Fragment::from_mol(parse_smiles(&e.text).expect("pool entries parse"), e.kind))
            .collect();
        let slots: Vec<Vec<Slot>> =
            frags.iter().map(|f| if scheme == Scheme::Vanilla { Vec::new() } else { open_slots(f) }).collect();
        let root_ids: Vec<usize> = (0..frags.len()).filter(|&i| frags[i].kind != FragmentKind::BondNode).collect();
        if root_ids.is_empty() {
            return Err(GeneratorError::EmptyPool);
        }
        let roots = WeightedIndex::new(root_ids.iter().map(|&i| pool.entries[i].count)).unwrap();
        let size_vals: Vec<usize> = pool.sizes.keys().copied().collect();
        let sizes = WeightedIndex::new(pool.sizes.values().copied()).map_err(|_| GeneratorError::EmptyPool)?;
        Ok(Sampler {
            any: index(pool, scheme, &frags, &slots, false),
            terminal: index(pool, scheme, &frags, &slots, true),
            scheme,
            frags,
            slots,
            roots: (root_ids, roots),
            sizes: (size_vals, sizes),
        })
    }

    /// A slot left open on a finished tree is only acceptable for
    /// shared-atom groups and for unlabeled dummies (they become hydrogen).
    fn must_close(&self, f: &Fragment) -> bool {
        match self.scheme {
            Scheme::Tsid => true,
            Scheme::Tssa => f.kind == FragmentKind::BondNode,
            _ => false,
        }
    }

    fn grow(&self, rng: &mut ChaCha8Rng) -> Option<Amt<Fragment>> {
        let target = self.sizes.0[self.sizes.1.sample(rng)];
        let root = self.roots.0[self.roots.1.sample(rng)];
        let mut amt = Amt::new(self.frags[root].clone());
        // (tree node, slot)
        let mut open: Vec<(usize, Slot)> = self.slots[root].iter().map(|&s| (0, s)).collect();
        let mut edges: Vec<(usize, usize, usize, usize)> = Vec::new();
        let cap = 4 * target + 8;
        loop {
            let closing = amt.len() >= target;
            let pending: Vec<usize> = (0..open.len())
                .filter(|&i| !closing || self.must_close(amt.node(open[i].0)) || self.scheme == Scheme::Tsdy)
                .collect();
            if pending.is_empty() || amt.len() >= cap {
                break;
            }
            let oi = pending[rng.gen_range(0..pending.len())];
            let (node, slot) = open[oi];
            let want = partner(key_of(self.scheme, amt.node(node), slot));
            let table = if closing { &self.terminal } else { &self.any };
            let Some(choices) = table.get(&want) else {
                if self.must_close(amt.node(node)) {
                    return None;
                }
                open.swap_remove(oi);
                continue;
            };
            let (fi, ref fslots) = choices.options[choices.dist.sample(rng)];
            let fs = fslots[rng.gen_range(0..fslots.len())];
            open.swap_remove(oi);
            let child = amt.add_child(node, self.frags[fi].clone(), None);
            edges.push((node, slot.2, child, self.slots[fi][fs].2));
            open.extend(self.slots[fi].iter().enumerate().filter(|&(j, _)| j != fs).map(|(_, &s)| (child, s)));
        }
        if open.iter().any(|&(n, _)| self.must_close(amt.node(n))) {
            return None;
        }
        if self.scheme == Scheme::Tsid {
            // ids only guided growth; number the edges so the tree is self-consistent
            for (e, &(p, pa, c, ca)) in edges.iter().enumerate() {
                amt.node_mut(p).mol.atom_mut(pa).attach_id = Some(e as u32 + 1);
                amt.node_mut(c).mol.atom_mut(ca).attach_id = Some(e as u32 + 1);
            }
        }
        Some(amt)
    }

    fn draw(&self, seed: u64, index: u64) -> Option<(Molecule, String)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        for _ in 0..DEFAULT_RETRIES {
            let Some(amt) = self.grow(&mut rng) else { continue };
            let skeleton = serialize(&amt_to_fbt(&amt.map(|_| ())), Dialect::Paper, |_| String::new());
            if let Ok((m, _)) = assemble(&amt, self.scheme, SelectionPolicy::Random(rng.gen())) {
                if validate_valence(&m).ok {
                    return Some((m, skeleton));
                }
            }
        }
        None
    }
}

/// `n` molecules grown from the pool: a tree size drawn from the corpus
/// shape statistics, fragments drawn by count among those fitting an open
/// slot, then random joins. Failed draws are retried and finally counted as
/// rejected. Novelty is measured against `reference` when given.
pub fn sample_pool<T: Float>(
    pool: &FragmentPool,
    seed: u64,
    n: usize,
    reference: Option<&BTreeSet<String>>,
) -> Result<(Vec<Molecule>, GenerationReport<T>), GeneratorError> {
    let sampler = Sampler::new(pool)?;
    let draws: Vec<Option<(Molecule, String)>> = (0..n as u64).into_par_iter().map(|i| sampler.draw(seed, i)).collect();
    let mut mols = Vec::with_capacity(n);
    let mut canon = Vec::with_capacity(n);
    let mut skeletons = Vec::with_capacity(n);
    for (m, s) in draws.into_iter().flatten() {
        canon.push(canonical_smiles(&m));
        skeletons.push(s);
        mols.push(m);
    }
    let report = GenerationReport::tally(
        n,
        mols.len(),
        canon.iter().map(String::as_str),
        Some(skeletons.iter().map(String::as_str)),
        reference,
    );
    Ok((mols, report))
}
