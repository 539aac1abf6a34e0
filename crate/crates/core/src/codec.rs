//! Full binary trees and the t-SMILES text grammar.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::amt::Amt;
use crate::chem::{canonical_smiles, parse_smiles, Molecule};
use crate::fragment::{
    build_amt, find_cut_bonds, fragment_dummy, fragment_shared, CutRule, Fragment, FragmentError, Fragmentation,
    RootPolicy,
};
use crate::UnknownName;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Scheme {
    #[serde(rename = "TSSA")]
    Tssa,
    #[serde(rename = "TSDY")]
    Tsdy,
    #[serde(rename = "TSID")]
    Tsid,
    #[serde(rename = "TS_Vanilla")]
    Vanilla,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Tssa, Scheme::Tsdy, Scheme::Tsid, Scheme::Vanilla];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Tssa => "tssa",
            Scheme::Tsdy => "tsdy",
            Scheme::Tsid => "tsid",
            Scheme::Vanilla => "vanilla",
        }
    }

    pub fn uses_dummies(self) -> bool {
        matches!(self, Scheme::Tsdy | Scheme::Tsid)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tssa" => Ok(Scheme::Tssa),
            "tsdy" => Ok(Scheme::Tsdy),
            "tsid" => Ok(Scheme::Tsid),
            "vanilla" | "ts_vanilla" => Ok(Scheme::Vanilla),
            _ => Err(UnknownName::new("scheme", s)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    /// '^' inside a level, '&' between fragments across a level boundary.
    #[default]
    Paper,
    /// '^' between any two adjacent fragments.
    Strict,
}

impl Dialect {
    pub fn name(self) -> &'static str {
        match self {
            Dialect::Paper => "paper",
            Dialect::Strict => "strict",
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dialect {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(Dialect::Paper),
            "strict" => Ok(Dialect::Strict),
            _ => Err(UnknownName::new("dialect", s)),
        }
    }
}

/// A t-SMILES text tagged with how it was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TString {
    pub text: String,
    pub scheme: Scheme,
    pub dialect: Dialect,
}

impl fmt::Display for TString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// File header recording scheme and dialect.
pub fn header_line(scheme: Scheme, dialect: Dialect) -> String {
    format!("#tsmiles scheme={scheme} dialect={dialect}")
}

pub fn parse_header(line: &str) -> Option<(Scheme, Dialect)> {
    let rest = line.trim().strip_prefix("#tsmiles")?;
    let (mut scheme, mut dialect) = (None, None);
    for kv in rest.split_whitespace() {
        match kv.split_once('=')? {
            ("scheme", v) => scheme = v.parse().ok(),
            ("dialect", v) => dialect = v.parse().ok(),
            _ => {}
        }
    }
    Some((scheme?, dialect?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FbtNode<T> {
    Frag { item: T, left: usize, right: usize },
    Empty,
}

/// Full binary tree: fragment nodes have two children, empty nodes none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fbt<T> {
    nodes: Vec<FbtNode<T>>,
    root: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("empty input")]
    EmptyInput,
    #[error("text starts with a marker")]
    LeadingMarker,
    #[error("text ends before the tree is complete ({missing} nodes missing)")]
    TruncatedTree { missing: usize },
    #[error("tokens left after the tree is complete (at offset {offset})")]
    SurplusTokens { offset: usize },
    #[error("{empties} empty markers for {frags} fragments")]
    CountMismatch { frags: usize, empties: usize },
    #[error("'^' at offset {offset} is not between two fragments")]
    MisplacedSeparator { offset: usize },
    #[error("malformed full binary tree: {0}")]
    MalformedFbt(&'static str),
    #[error("fragment {index} does not parse: {reason}")]
    ParseFailed { index: usize, reason: String },
}

impl<T> Fbt<T> {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, i: usize) -> &FbtNode<T> {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn frag_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, FbtNode::Frag { .. })).count()
    }

    pub fn empty_count(&self) -> usize {
        self.nodes.len() - self.frag_count()
    }

    /// Node indices per breadth-first level.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut level = vec![self.root];
        while !level.is_empty() {
            let next = level
                .iter()
                .flat_map(|&i| match &self.nodes[i] {
                    FbtNode::Frag { left, right, .. } => vec![*left, *right],
                    FbtNode::Empty => vec![],
                })
                .collect();
            out.push(level);
            level = next;
        }
        out
    }

    /// Checks that the node table forms one full binary tree.
    pub fn validate(&self) -> Result<(), CodecError> {
        let n = self.nodes.len();
        if self.root >= n {
            return Err(CodecError::MalformedFbt("root out of range"));
        }
        let mut refs = vec![0usize; n];
        for node in &self.nodes {
            if let FbtNode::Frag { left, right, .. } = node {
                if *left >= n || *right >= n {
                    return Err(CodecError::MalformedFbt("child out of range"));
                }
                refs[*left] += 1;
                refs[*right] += 1;
            }
        }
        if refs[self.root] != 0 || (0..n).any(|i| i != self.root && refs[i] != 1) {
            return Err(CodecError::MalformedFbt("node shared or unreachable"));
        }
        let reached: usize = self.levels().iter().map(Vec::len).sum();
        if reached != n {
            return Err(CodecError::MalformedFbt("cycle"));
        }
        if self.empty_count() != self.frag_count() + 1 {
            return Err(CodecError::MalformedFbt("empty count is not fragment count + 1"));
        }
        Ok(())
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Fbt<U> {
        Fbt {
            nodes: self
                .nodes
                .iter()
                .map(|n| match n {
                    FbtNode::Frag { item, left, right } => FbtNode::Frag { item: f(item), left: *left, right: *right },
                    FbtNode::Empty => FbtNode::Empty,
                })
                .collect(),
            root: self.root,
        }
    }

    /// Same shape with equal payloads, ignoring node numbering.
    pub fn same_shape(&self, other: &Fbt<T>) -> bool
    where
        T: PartialEq,
    {
        let mut stack = vec![(self.root, other.root)];
        while let Some((a, b)) = stack.pop() {
            match (&self.nodes[a], &other.nodes[b]) {
                (FbtNode::Empty, FbtNode::Empty) => {}
                (FbtNode::Frag { item: x, left: l1, right: r1 }, FbtNode::Frag { item: y, left: l2, right: r2 }) => {
                    if x != y {
                        return false;
                    }
                    stack.push((*l1, *l2));
                    stack.push((*r1, *r2));
                }
                _ => return false,
            }
        }
        self.len() == other.len()
    }

    /// Number of AMT children of fragment node `i` (length of the sibling
    /// chain hanging off its left child).
    fn amt_children(&self, i: usize) -> usize {
        let FbtNode::Frag { left, .. } = &self.nodes[i] else { return 0 };
        let mut c = *left;
        let mut count = 0;
        while let FbtNode::Frag { right, .. } = &self.nodes[c] {
            count += 1;
            c = *right;
        }
        count
    }
}

/// Left-child/right-sibling transform.
pub fn amt_to_fbt<T: Clone>(amt: &Amt<T>) -> Fbt<T> {
    let mut nodes: Vec<FbtNode<T>> = Vec::with_capacity(2 * amt.len() + 1);
    let mut index = vec![0usize; amt.len()];
    for &u in &amt.bfs_order() {
        index[u] = nodes.len();
        nodes.push(FbtNode::Empty);
    }
    for &u in &amt.bfs_order() {
        let left = match amt.children(u).first() {
            Some(&c) => index[c],
            None => {
                nodes.push(FbtNode::Empty);
                nodes.len() - 1
            }
        };
        let next = amt.parent(u).and_then(|p| {
            let sibs = amt.children(p);
            let pos = sibs.iter().position(|&s| s == u).unwrap();
            sibs.get(pos + 1).copied()
        });
        let right = match next {
            Some(s) => index[s],
            None => {
                nodes.push(FbtNode::Empty);
                nodes.len() - 1
            }
        };
        nodes[index[u]] = FbtNode::Frag { item: amt.node(u).clone(), left, right };
    }
    Fbt { nodes, root: index[amt.root()] }
}

/// Inverse of [`amt_to_fbt`]. Join records are not carried by the FBT.
pub fn fbt_to_amt<T: Clone>(fbt: &Fbt<T>) -> Result<Amt<T>, CodecError> {
    fbt.validate()?;
    let FbtNode::Frag { item, right, .. } = &fbt.nodes[fbt.root] else {
        return Err(CodecError::MalformedFbt("root is empty"));
    };
    if !matches!(fbt.nodes[*right], FbtNode::Empty) {
        return Err(CodecError::MalformedFbt("root has a right sibling"));
    }
    let mut amt = Amt::new(item.clone());
    let mut stack = vec![(fbt.root, 0usize)];
    while let Some((x, a)) = stack.pop() {
        let FbtNode::Frag { left, .. } = &fbt.nodes[x] else { unreachable!() };
        let mut c = *left;
        while let FbtNode::Frag { item, right, .. } = &fbt.nodes[c] {
            let id = amt.add_child(a, item.clone(), None);
            stack.push((c, id));
            c = *right;
        }
    }
    Ok(amt)
}

/// Breadth-first serialization. Empty nodes emit '&'; see [`Dialect`] for
/// the separator between adjacent fragments.
pub fn serialize<T>(fbt: &Fbt<T>, dialect: Dialect, text: impl Fn(&T) -> String) -> String {
    let mut out = String::new();
    // level of the previous token when it was a fragment
    let mut prev_frag_level: Option<usize> = None;
    for (depth, level) in fbt.levels().iter().enumerate() {
        for &i in level {
            match &fbt.nodes[i] {
                FbtNode::Frag { item, .. } => {
                    if let Some(pl) = prev_frag_level {
                        out.push(if dialect == Dialect::Paper && pl != depth { '&' } else { '^' });
                    }
                    out.push_str(&text(item));
                    prev_frag_level = Some(depth);
                }
                FbtNode::Empty => {
                    out.push('&');
                    prev_frag_level = None;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Frag { text: String, offset: usize },
    Amp { offset: usize },
    Caret { offset: usize },
}

/// Splits text into fragment runs and markers.
pub fn lex(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch == '&' || ch == '^' {
            if let Some(s) = start.take() {
                out.push(Token::Frag { text: text[s..i].to_string(), offset: s });
            }
            out.push(if ch == '&' { Token::Amp { offset: i } } else { Token::Caret { offset: i } });
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token::Frag { text: text[s..].to_string(), offset: s });
    }
    out
}

/// Expected number of AMT children for a fragment text, given whether it is
/// the root. Used to pick among readings of an ambiguous paper-dialect text.
pub type ArityHint<'a> = &'a dyn Fn(&str, bool) -> Option<usize>;

/// Arity hint for dummy-atom schemes: every non-root fragment spends one
/// dummy on its parent.
pub fn dummy_arity(text: &str, is_root: bool) -> Option<usize> {
    let d = text.matches('*').count();
    if is_root {
        Some(d)
    } else {
        d.checked_sub(1)
    }
}

#[derive(Clone, Copy, Default)]
pub struct ParseOptions<'a> {
    /// Pad a truncated stream with empty nodes instead of failing.
    pub lenient: bool,
    pub arity: Option<ArityHint<'a>>,
}

/// Upper bound on complete readings examined for one paper-dialect text.
const SEARCH_BUDGET: usize = 4096;

#[derive(Debug, Clone)]
struct Reading {
    items: Vec<Option<usize>>,
    padded: usize,
}

struct Search<'t, 'a> {
    toks: &'t [Token],
    paper: bool,
    opts: ParseOptions<'a>,
    budget: usize,
    found: Option<Reading>,
    first_complete: Option<Reading>,
    first_padded: Option<Reading>,
    padded_consistent: bool,
    surplus_at: Option<usize>,
    missing: Option<usize>,
}

impl Search<'_, '_> {
    fn done(&self) -> bool {
        self.found.is_some() || self.budget == 0
    }

    fn accept(&mut self, reading: Reading) {
        self.budget = self.budget.saturating_sub(1);
        let tree = build_fbt(self.toks, &reading);
        let consistent = self.opts.arity.is_none_or(|hint| {
            (0..tree.len()).all(|i| match &tree.nodes[i] {
                FbtNode::Frag { item, .. } => {
                    hint(item, i == tree.root).is_none_or(|want| want == tree.amt_children(i))
                }
                FbtNode::Empty => true,
            })
        });
        if reading.padded == 0 {
            if consistent {
                self.found = Some(reading);
            } else {
                self.first_complete.get_or_insert(reading);
            }
        } else if consistent && !self.padded_consistent {
            self.padded_consistent = true;
            self.first_padded = Some(reading);
        } else {
            self.first_padded.get_or_insert(reading);
        }
    }

    fn run(&mut self, mut pos: usize, mut items: Vec<Option<usize>>, mut level_left: usize, mut next_level: usize) {
        loop {
            if self.done() {
                return;
            }
            if level_left == 0 {
                if next_level == 0 {
                    match self.toks[pos..].iter().find(|t| !matches!(t, Token::Caret { .. })) {
                        None => self.accept(Reading { items, padded: 0 }),
                        Some(t) => {
                            self.surplus_at.get_or_insert(token_offset(t));
                        }
                    }
                    return;
                }
                level_left = next_level;
                next_level = 0;
            }
            if pos == self.toks.len() {
                // every unfilled slot becomes an empty leaf
                let missing = level_left + next_level;
                self.missing.get_or_insert(missing);
                if self.opts.lenient {
                    self.accept(Reading { items, padded: missing });
                }
                return;
            }
            match &self.toks[pos] {
                Token::Caret { .. } => pos += 1,
                Token::Amp { .. } => {
                    items.push(None);
                    pos += 1;
                    level_left -= 1;
                }
                Token::Frag { .. } => {
                    items.push(Some(pos));
                    pos += 1;
                    level_left -= 1;
                    next_level += 2;
                    let boundary = self.paper
                        && level_left == 0
                        && matches!(self.toks.get(pos), Some(Token::Amp { .. }))
                        && matches!(self.toks.get(pos + 1), Some(Token::Frag { .. }));
                    if boundary {
                        // first try the '&' as a level-boundary separator
                        self.run(pos + 1, items.clone(), level_left, next_level);
                    }
                }
            }
        }
    }
}

fn token_offset(t: &Token) -> usize {
    match t {
        Token::Frag { offset, .. } | Token::Amp { offset } | Token::Caret { offset } => *offset,
    }
}

fn build_fbt(toks: &[Token], reading: &Reading) -> Fbt<String> {
    let total = reading.items.len() + reading.padded;
    let mut nodes = Vec::with_capacity(total);
    let mut next_slot = 1;
    for item in reading.items.iter().copied().chain(std::iter::repeat_n(None, reading.padded)) {
        match item {
            Some(t) => {
                let Token::Frag { text, .. } = &toks[t] else { unreachable!() };
                nodes.push(FbtNode::Frag { item: text.clone(), left: next_slot, right: next_slot + 1 });
                next_slot += 2;
            }
            None => nodes.push(FbtNode::Empty),
        }
    }
    Fbt { nodes, root: 0 }
}

/// Parses t-SMILES text back into its full binary tree.
///
/// In the paper dialect a '&' between a level's last fragment and a
/// following fragment may be either a boundary separator or an empty node;
/// readings are tried separator-first and the first one consistent with the
/// arity hint wins, otherwise the first complete reading.
pub fn parse_tsmiles(text: &str, dialect: Dialect, opts: ParseOptions<'_>) -> Result<Fbt<String>, CodecError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(CodecError::EmptyInput);
    }
    if text.starts_with(['&', '^']) {
        return Err(CodecError::LeadingMarker);
    }
    let toks = lex(text);
    for (i, t) in toks.iter().enumerate() {
        if let Token::Caret { offset } = t {
            let before = matches!(toks.get(i.wrapping_sub(1)), Some(Token::Frag { .. }));
            let after = matches!(toks.get(i + 1), Some(Token::Frag { .. }) | None);
            if !before || !after {
                return Err(CodecError::MisplacedSeparator { offset: *offset });
            }
        }
    }
    let frags = toks.iter().filter(|t| matches!(t, Token::Frag { .. })).count();
    let amps = toks.iter().filter(|t| matches!(t, Token::Amp { .. })).count();
    if dialect == Dialect::Strict && amps > frags + 1 {
        return Err(CodecError::CountMismatch { frags, empties: amps });
    }
    let mut search = Search {
        toks: &toks,
        paper: dialect == Dialect::Paper,
        opts,
        budget: SEARCH_BUDGET,
        found: None,
        first_complete: None,
        first_padded: None,
        padded_consistent: false,
        surplus_at: None,
        missing: None,
    };
    search.run(0, Vec::new(), 1, 0);
    let reading = search.found.or(search.first_complete).or(search.first_padded);
    match reading {
        Some(r) => {
            let fbt = build_fbt(&toks, &r);
            if fbt.empty_count() != fbt.frag_count() + 1 {
                return Err(CodecError::CountMismatch { frags: fbt.frag_count(), empties: fbt.empty_count() });
            }
            Ok(fbt)
        }
        None => match (search.missing, search.surplus_at) {
            (Some(missing), _) if !opts.lenient => Err(CodecError::TruncatedTree { missing }),
            (_, Some(offset)) => Err(CodecError::SurplusTokens { offset }),
            (missing, None) => Err(CodecError::TruncatedTree { missing: missing.unwrap_or(0) }),
        },
    }
}

/// Replaces every attachment-id dummy with a bare '*'.
pub fn strip_ids(text: &str) -> Result<String, CodecError> {
    for (index, t) in lex(text.trim()).iter().enumerate() {
        if let Token::Frag { text, .. } = t {
            parse_smiles(text).map_err(|e| CodecError::ParseFailed { index, reason: e.to_string() })?;
        }
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('[') {
        out.push_str(&rest[..open]);
        let Some(close) = rest[open..].find(']') else {
            out.push_str(&rest[open..]);
            rest = "";
            break;
        };
        let inner = &rest[open + 1..open + close];
        let is_dummy = match inner.split_once('*') {
            Some((iso, class)) => {
                iso.bytes().all(|b| b.is_ascii_digit())
                    && (class.is_empty()
                        || class.strip_prefix(':').is_some_and(|c| c.bytes().all(|b| b.is_ascii_digit())))
            }
            None => false,
        };
        if is_dummy {
            out.push('*');
        } else {
            out.push_str(&rest[open..=open + close]);
        }
        rest = &rest[open + close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("fragment: molecule has {0} disconnected components")]
    MultiComponent(usize),
    #[error("fragment: {0}")]
    Fragment(#[from] FragmentError),
}

/// Fragments `mol` the way `scheme` requires.
pub fn fragment(mol: &Molecule, scheme: Scheme, rule: &CutRule) -> Result<Fragmentation, EncodeError> {
    let comps = mol.components().len();
    if comps > 1 {
        return Err(EncodeError::MultiComponent(comps));
    }
    let cuts = find_cut_bonds(mol, rule);
    Ok(match scheme {
        Scheme::Tssa => fragment_shared(mol, &cuts),
        Scheme::Tsid => fragment_dummy(mol, &cuts, true),
        Scheme::Tsdy | Scheme::Vanilla => fragment_dummy(mol, &cuts, false),
    })
}

/// Fragment tree of `mol` under `scheme`, with join records.
pub fn encode_amt(
    mol: &Molecule,
    scheme: Scheme,
    rule: &CutRule,
    root: RootPolicy,
) -> Result<Amt<Fragment>, EncodeError> {
    Ok(build_amt(&fragment(mol, scheme, rule)?, root)?)
}

pub fn serialize_amt(amt: &Amt<Fragment>, dialect: Dialect) -> String {
    serialize(&amt_to_fbt(&amt.map(Fragment::text)), dialect, String::clone)
}

pub fn encode(
    mol: &Molecule,
    scheme: Scheme,
    rule: &CutRule,
    dialect: Dialect,
    root: RootPolicy,
) -> Result<TString, EncodeError> {
    let text = if scheme == Scheme::Vanilla {
        canonical_smiles(mol)
    } else {
        serialize_amt(&encode_amt(mol, scheme, rule, root)?, dialect)
    };
    Ok(TString { text, scheme, dialect })
}

/// One encoding per choice of root fragment.
pub fn enumerate_roots(
    mol: &Molecule,
    scheme: Scheme,
    rule: &CutRule,
    dialect: Dialect,
) -> Result<Vec<TString>, EncodeError> {
    if scheme == Scheme::Vanilla {
        return Ok(vec![encode(mol, scheme, rule, dialect, RootPolicy::CanonicalFirst)?]);
    }
    let frag = fragment(mol, scheme, rule)?;
    (0..frag.fragments.len())
        .map(|i| {
            let amt = build_amt(&frag, RootPolicy::Index(i))?;
            Ok(TString { text: serialize_amt(&amt, dialect), scheme, dialect })
        })
        .collect()
}
