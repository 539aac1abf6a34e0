//! Reassembly of molecules from fragment trees.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::amt::Amt;
use crate::chem::{canonical_smiles, kekulize, parse_smiles, validate_valence, Atom, BondOrder, Molecule, SmilesError};
use crate::codec::{dummy_arity, fbt_to_amt, parse_tsmiles, CodecError, ParseOptions, Scheme, TString};
use crate::fragment::{Fragment, FragmentKind};

/// Scoring hook for goal-directed assembly; higher is better.
pub type ScoreFn = dyn Fn(&Molecule) -> f64 + Sync;

/// How one candidate join is chosen among several.
#[derive(Clone, Copy)]
pub enum SelectionPolicy<'a> {
    Random(u64),
    /// Greedy: each join keeps the candidate whose partial molecule scores
    /// highest (first on ties).
    Scored(&'a ScoreFn),
}

impl fmt::Debug for SelectionPolicy<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionPolicy::Random(seed) => write!(f, "Random({seed})"),
            SelectionPolicy::Scored(_) => f.write_str("Scored"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FailReason {
    NoCompatibleAttachment,
    IdMismatch,
    ValenceViolation,
    KekulizationFailed,
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FailReason::NoCompatibleAttachment => "no compatible attachment",
            FailReason::IdMismatch => "attachment id mismatch",
            FailReason::ValenceViolation => "valence violation",
            FailReason::KekulizationFailed => "kekulization failed",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{stage}: {reason} (nodes {parent:?} -> {child:?})")]
pub struct AssemblyError {
    pub stage: &'static str,
    pub parent: Option<usize>,
    pub child: Option<usize>,
    pub reason: FailReason,
}

impl AssemblyError {
    fn new(stage: &'static str, edge: Option<(usize, usize)>, reason: FailReason) -> Self {
        AssemblyError { stage, parent: edge.map(|e| e.0), child: edge.map(|e| e.1), reason }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JoinChoice {
    pub parent: usize,
    pub child: usize,
    pub candidates: usize,
    pub chosen: usize,
}

/// Per-molecule assembly record.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AssemblyReport {
    pub joins: Vec<JoinChoice>,
    /// Unused dummy atoms turned into hydrogens.
    pub hydrogenated: usize,
    pub retries: usize,
}

/// Disjoint union of all fragments; `offset[i]` is node `i`'s first atom.
struct Layout {
    offset: Vec<usize>,
    len: Vec<usize>,
}

impl Layout {
    fn range(&self, node: usize) -> std::ops::Range<usize> {
        self.offset[node]..self.offset[node] + self.len[node]
    }
}

#[derive(Clone)]
struct State {
    w: Molecule,
    dead: Vec<bool>,
    joins: Vec<JoinChoice>,
}

fn union(amt: &Amt<Fragment>) -> (State, Layout) {
    let mut w = Molecule::new();
    let mut offset = Vec::with_capacity(amt.len());
    let mut len = Vec::with_capacity(amt.len());
    for f in amt.nodes() {
        let base = w.atom_count();
        offset.push(base);
        len.push(f.mol.atom_count());
        for a in f.mol.atoms() {
            w.add_atom(a.clone());
        }
        for b in f.mol.bonds() {
            w.add_bond(base + b.a, base + b.b, b.order, b.aromatic);
        }
    }
    let n = w.atom_count();
    (State { w, dead: vec![false; n], joins: Vec::new() }, Layout { offset, len })
}

fn edges(amt: &Amt<Fragment>) -> Vec<(usize, usize)> {
    amt.bfs_order().into_iter().skip(1).map(|c| (amt.parent(c).unwrap(), c)).collect()
}

fn remove_bonds_of(w: &mut Molecule, atom: usize) -> Vec<(usize, BondOrder)> {
    let mut list: Vec<(usize, usize)> = w.neighbors(atom).to_vec();
    list.sort_by_key(|&(_, b)| std::cmp::Reverse(b));
    let out = list.iter().map(|&(v, b)| (v, w.bond(b).order)).collect();
    for (_, b) in list {
        w.remove_bond(b);
    }
    out
}

fn atom_ok(w: &Molecule, i: usize) -> bool {
    !validate_valence(w).violations.iter().any(|v| v.atom == i)
}

fn live_dummies(st: &State, range: std::ops::Range<usize>) -> Vec<usize> {
    range.filter(|&i| !st.dead[i] && st.w.atom(i).is_dummy() && st.w.degree(i) == 1).collect()
}

/// Replaces dummies `d1`, `d2` by a bond between their neighbors.
fn join_dummies(st: &State, d1: usize, d2: usize) -> Option<State> {
    let (a1, b1) = st.w.neighbors(d1)[0];
    let (a2, b2) = st.w.neighbors(d2)[0];
    let order = st.w.bond(b1).order;
    if order != st.w.bond(b2).order || a1 == a2 || st.w.bond_between(a1, a2).is_some() {
        return None;
    }
    if st.w.atom(a1).is_dummy() || st.w.atom(a2).is_dummy() {
        return None;
    }
    let mut next = st.clone();
    remove_bonds_of(&mut next.w, d1);
    remove_bonds_of(&mut next.w, d2);
    next.w.add_bond(a1, a2, order, false);
    next.dead[d1] = true;
    next.dead[d2] = true;
    (atom_ok(&next.w, a1) && atom_ok(&next.w, a2)).then_some(next)
}

/// Identifies placeholder `p` (a bond-node atom) with group atom `y`: `y`
/// takes over `p`'s bonds, giving up one hydrogen per bond order.
fn merge_shared(st: &State, p: usize, y: usize) -> Option<State> {
    let w = &st.w;
    if st.dead[p] || st.dead[y] || w.atom(p).element != w.atom(y).element {
        return None;
    }
    let nbrs = w.neighbors(p);
    if nbrs.iter().any(|&(q, _)| q == y || w.bond_between(y, q).is_some()) {
        return None;
    }
    let add: u8 = nbrs.iter().map(|&(_, b)| w.bond(b).valence()).sum();
    let h0 = w.total_h(y);
    if h0 < add {
        return None;
    }
    let mut next = st.clone();
    if next.w.atom(y).bracket {
        next.w.atom_mut(y).explicit_h -= add;
    }
    for (q, order) in remove_bonds_of(&mut next.w, p) {
        next.w.add_bond(y, q, order, false);
    }
    next.dead[p] = true;
    (next.w.total_h(y) == h0 - add && atom_ok(&next.w, y)).then_some(next)
}

fn has_shareable(st: &State, range: std::ops::Range<usize>, like: &Atom) -> bool {
    range.into_iter().any(|y| !st.dead[y] && st.w.atom(y).element == like.element && st.w.total_h(y) > 0)
}

fn tssa_candidates(
    amt: &Amt<Fragment>,
    layout: &Layout,
    st: &State,
    (p, c): (usize, usize),
) -> Result<Vec<State>, FailReason> {
    let (group, bond_node, bond_is_child) = match (amt.node(p).kind, amt.node(c).kind) {
        (FragmentKind::Group, FragmentKind::BondNode) => (p, c, true),
        (FragmentKind::BondNode, FragmentKind::Group) => (c, p, false),
        _ => return Err(FailReason::NoCompatibleAttachment),
    };
    let placeholders: Vec<usize> = layout.range(bond_node).filter(|&i| !st.dead[i]).collect();
    let recorded = amt.join(c).map(|j| {
        let (g_atom, b_atom) =
            if bond_is_child { (j.parent_atom, j.child_atom) } else { (j.child_atom, j.parent_atom) };
        (layout.offset[group] + g_atom, layout.offset[bond_node] + b_atom)
    });
    let mut out = Vec::new();
    for &x in &placeholders {
        if let Some((_, bx)) = recorded {
            if bx != x {
                continue;
            }
        }
        // the other atom must still find a partner in the bond node's child
        if bond_is_child {
            if let Some(&h) = amt.children(bond_node).first() {
                let rest: Vec<usize> = placeholders.iter().copied().filter(|&o| o != x).collect();
                if !rest.iter().any(|&o| has_shareable(st, layout.range(h), st.w.atom(o))) {
                    continue;
                }
            }
        }
        for y in layout.range(group) {
            if recorded.is_some_and(|(gy, _)| gy != y) {
                continue;
            }
            if let Some(next) = merge_shared(st, x, y) {
                out.push(next);
            }
        }
    }
    Ok(out)
}

fn dummy_candidates(layout: &Layout, st: &State, (p, c): (usize, usize)) -> Vec<State> {
    let mut out = Vec::new();
    for dp in live_dummies(st, layout.range(p)) {
        for dc in live_dummies(st, layout.range(c)) {
            if let Some(next) = join_dummies(st, dp, dc) {
                out.push(next);
            }
        }
    }
    out
}

fn candidates(
    amt: &Amt<Fragment>,
    scheme: Scheme,
    layout: &Layout,
    st: &State,
    edge: (usize, usize),
) -> Result<Vec<State>, FailReason> {
    match scheme {
        Scheme::Tssa => tssa_candidates(amt, layout, st, edge),
        _ => Ok(dummy_candidates(layout, st, edge)),
    }
}

/// Turns every remaining dummy into a hydrogen on its neighbor.
fn cap_dummies(w: &mut Molecule, dead: &mut [bool]) -> usize {
    let mut count = 0;
    for d in 0..w.atom_count() {
        if dead[d] || !w.atom(d).is_dummy() {
            continue;
        }
        for (a, order) in remove_bonds_of(w, d) {
            if w.atom(a).bracket {
                w.atom_mut(a).explicit_h += order.valence();
            }
        }
        dead[d] = true;
        count += 1;
    }
    count
}

fn finish(mut st: State, stage: &'static str) -> Result<(Molecule, usize), AssemblyError> {
    let hydrogenated = cap_dummies(&mut st.w, &mut st.dead);
    let dead: Vec<usize> = (0..st.w.atom_count()).filter(|&i| st.dead[i]).collect();
    st.w.remove_atoms(&dead);
    if !validate_valence(&st.w).ok {
        return Err(AssemblyError::new(stage, None, FailReason::ValenceViolation));
    }
    if st.w.has_aromatic() && kekulize(&st.w).is_err() {
        return Err(AssemblyError::new(stage, None, FailReason::KekulizationFailed));
    }
    Ok((st.w, hydrogenated))
}

/// Molecule grown so far from the root, open attachment points capped.
fn partial(st: &State, root_atom: usize) -> Molecule {
    let comp = st.w.components().into_iter().find(|c| c.contains(&root_atom)).unwrap_or_default();
    let (mut m, _) = st.w.subgraph(&comp);
    let mut dead = vec![false; m.atom_count()];
    cap_dummies(&mut m, &mut dead);
    let gone: Vec<usize> = (0..m.atom_count()).filter(|&i| dead[i]).collect();
    m.remove_atoms(&gone);
    m
}

fn stage_name(scheme: Scheme) -> &'static str {
    match scheme {
        Scheme::Tssa => "assemble_tssa",
        Scheme::Tsdy => "assemble_tsdy",
        Scheme::Tsid => "assemble_tsid",
        Scheme::Vanilla => "assemble",
    }
}

fn assemble_by_ids(amt: &Amt<Fragment>) -> Result<(Molecule, AssemblyReport), AssemblyError> {
    const STAGE: &str = "assemble_tsid";
    let (mut st, layout) = union(amt);
    let mut seen: std::collections::BTreeMap<u32, usize> = Default::default();
    for i in 0..st.w.atom_count() {
        let a = st.w.atom(i);
        if a.is_dummy() {
            match a.attach_id {
                Some(id) => *seen.entry(id).or_default() += 1,
                None => return Err(AssemblyError::new(STAGE, None, FailReason::IdMismatch)),
            }
        }
    }
    if seen.values().any(|&n| n != 2) {
        return Err(AssemblyError::new(STAGE, None, FailReason::IdMismatch));
    }
    let mut report = AssemblyReport::default();
    for (p, c) in edges(amt) {
        let ids = |node: usize| -> Vec<(u32, usize)> {
            live_dummies(&st, layout.range(node)).into_iter().map(|d| (st.w.atom(d).attach_id.unwrap(), d)).collect()
        };
        let (pi, ci) = (ids(p), ids(c));
        let shared: Vec<(usize, usize)> = pi
            .iter()
            .flat_map(|&(id, dp)| ci.iter().filter(move |&&(jd, _)| jd == id).map(move |&(_, dc)| (dp, dc)))
            .collect();
        let [(dp, dc)] = shared[..] else {
            return Err(AssemblyError::new(STAGE, Some((p, c)), FailReason::IdMismatch));
        };
        st = join_dummies(&st, dp, dc)
            .ok_or_else(|| AssemblyError::new(STAGE, Some((p, c)), FailReason::ValenceViolation))?;
        report.joins.push(JoinChoice { parent: p, child: c, candidates: 1, chosen: 0 });
    }
    if st.dead.iter().zip(st.w.atoms()).any(|(&d, a)| !d && a.is_dummy()) {
        return Err(AssemblyError::new(STAGE, None, FailReason::IdMismatch));
    }
    let (mol, _) = finish(st, STAGE)?;
    Ok((mol, report))
}

/// Assembles a fragment tree under `scheme`, reporting each join.
pub fn assemble(
    amt: &Amt<Fragment>,
    scheme: Scheme,
    policy: SelectionPolicy<'_>,
) -> Result<(Molecule, AssemblyReport), AssemblyError> {
    if scheme == Scheme::Tsid {
        return assemble_by_ids(amt);
    }
    let stage = stage_name(scheme);
    let (mut st, layout) = union(amt);
    let mut rng = match policy {
        SelectionPolicy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        SelectionPolicy::Scored(_) => None,
    };
    let root_atom = layout.offset[amt.root()];
    for (p, c) in edges(amt) {
        let cands =
            candidates(amt, scheme, &layout, &st, (p, c)).map_err(|r| AssemblyError::new(stage, Some((p, c)), r))?;
        if cands.is_empty() {
            return Err(AssemblyError::new(stage, Some((p, c)), FailReason::NoCompatibleAttachment));
        }
        let chosen = match (&mut rng, policy) {
            (Some(rng), _) => rng.gen_range(0..cands.len()),
            (None, SelectionPolicy::Scored(score)) => {
                let mut best = 0;
                let mut best_score = f64::NEG_INFINITY;
                for (i, s) in cands.iter().enumerate() {
                    let v = score(&partial(s, root_atom));
                    if v > best_score {
                        best = i;
                        best_score = v;
                    }
                }
                best
            }
            (None, SelectionPolicy::Random(_)) => unreachable!(),
        };
        let n = cands.len();
        st = cands.into_iter().nth(chosen).unwrap();
        st.joins.push(JoinChoice { parent: p, child: c, candidates: n, chosen });
    }
    let joins = std::mem::take(&mut st.joins);
    let (mol, hydrogenated) = finish(st, stage)?;
    Ok((mol, AssemblyReport { joins, hydrogenated, retries: 0 }))
}

/// Joins matching attachment ids; the result does not depend on join order.
pub fn assemble_tsid(amt: &Amt<Fragment>) -> Result<Molecule, AssemblyError> {
    assemble_by_ids(amt).map(|r| r.0)
}

pub fn assemble_tsdy(amt: &Amt<Fragment>, policy: SelectionPolicy<'_>) -> Result<Molecule, AssemblyError> {
    assemble(amt, Scheme::Tsdy, policy).map(|r| r.0)
}

pub fn assemble_tssa(amt: &Amt<Fragment>, policy: SelectionPolicy<'_>) -> Result<Molecule, AssemblyError> {
    assemble(amt, Scheme::Tssa, policy).map(|r| r.0)
}

/// Canonical texts of every molecule reachable through some sequence of
/// join choices, visiting at most `limit` complete assemblies.
pub fn enumerate_assemblies(amt: &Amt<Fragment>, scheme: Scheme, limit: usize) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    if scheme == Scheme::Tsid {
        if let Ok(m) = assemble_tsid(amt) {
            out.insert(canonical_smiles(&m));
        }
        return out;
    }
    let (st, layout) = union(amt);
    let edges = edges(amt);
    let mut stack = vec![(st, 0usize)];
    let mut visited = 0;
    while let Some((st, k)) = stack.pop() {
        if visited >= limit {
            break;
        }
        if k == edges.len() {
            visited += 1;
            if let Ok((m, _)) = finish(st, "enumerate") {
                out.insert(canonical_smiles(&m));
            }
            continue;
        }
        if let Ok(cands) = candidates(amt, scheme, &layout, &st, edges[k]) {
            stack.extend(cands.into_iter().rev().map(|s| (s, k + 1)));
        }
    }
    out
}

/// Group/bond-node roles for a shared-atom tree read from text: the depth
/// parity class made only of two-atom single-bond pieces is the bond-node
/// class (the smaller one if both qualify, odd depth on a tie).
pub fn infer_tssa_kinds(amt: &Amt<Molecule>) -> Option<Vec<FragmentKind>> {
    let n = amt.len();
    let mut depth = vec![0usize; n];
    for u in amt.bfs_order() {
        for &c in amt.children(u) {
            depth[c] = depth[u] + 1;
        }
    }
    if n == 1 {
        return Some(vec![FragmentKind::Group]);
    }
    let is_pair = |m: &Molecule| m.atom_count() == 2 && m.bond_count() == 1 && m.heavy_atom_count() == 2;
    let qualifies = |parity: usize| (0..n).filter(|&i| depth[i] % 2 == parity).all(|i| is_pair(amt.node(i)));
    let size = |parity: usize| (0..n).filter(|&i| depth[i] % 2 == parity).count();
    let parity = match (qualifies(0), qualifies(1)) {
        (true, true) if size(0) < size(1) => 0,
        (true, true) | (false, true) => 1,
        (true, false) => 0,
        (false, false) => return None,
    };
    Some((0..n).map(|i| if depth[i] % 2 == parity { FragmentKind::BondNode } else { FragmentKind::Group }).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("parse: {0}")]
    Parse(#[from] CodecError),
    #[error("fragment {index}: {error}")]
    Fragment { index: usize, error: SmilesError },
    #[error("assemble: cannot tell group nodes from bond nodes")]
    NodeRoles,
    #[error("{0}")]
    Assembly(#[from] AssemblyError),
}

/// Text to fragment tree, without joining.
pub fn decode_amt(text: &TString, lenient: bool) -> Result<Amt<Fragment>, DecodeError> {
    let arity: &dyn Fn(&str, bool) -> Option<usize> = &dummy_arity;
    let opts = ParseOptions { lenient, arity: text.scheme.uses_dummies().then_some(arity) };
    let fbt = parse_tsmiles(&text.text, text.dialect, opts)?;
    let texts = fbt_to_amt(&fbt)?;
    let mut mols = Vec::with_capacity(texts.len());
    for (index, t) in texts.nodes().iter().enumerate() {
        mols.push(parse_smiles(t).map_err(|error| DecodeError::Fragment { index, error })?);
    }
    let mut it = mols.into_iter();
    let mols = texts.map(|_| it.next().unwrap());
    let kinds = match text.scheme {
        Scheme::Tssa => infer_tssa_kinds(&mols).ok_or(DecodeError::NodeRoles)?,
        _ => vec![FragmentKind::Dummy; mols.len()],
    };
    let mut i = 0;
    Ok(mols.map(|m| {
        let f = Fragment::from_mol(m.clone(), kinds[i]);
        i += 1;
        f
    }))
}

pub fn decode_with_report(
    text: &TString,
    policy: SelectionPolicy<'_>,
    lenient: bool,
) -> Result<(Molecule, AssemblyReport), DecodeError> {
    if text.scheme == Scheme::Vanilla {
        let m = parse_smiles(&text.text).map_err(|error| DecodeError::Fragment { index: 0, error })?;
        return Ok((m, AssemblyReport::default()));
    }
    let amt = decode_amt(text, lenient)?;
    Ok(assemble(&amt, text.scheme, policy)?)
}

/// Parse, rebuild the tree and join, root outward.
pub fn decode(text: &TString, policy: SelectionPolicy<'_>, lenient: bool) -> Result<Molecule, DecodeError> {
    decode_with_report(text, policy, lenient).map(|r| r.0)
}

pub const DEFAULT_RETRIES: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconstructError {
    #[error("no valid molecule after {attempts} attempts")]
    ExhaustedRetries { attempts: usize, last: Option<AssemblyError> },
    #[error("no fragments to reconstruct from")]
    Empty,
}

/// Open attachment capacity of a fragment as seen by random tree growth.
pub(crate) fn open_slots(f: &Fragment) -> Vec<Slot> {
    let m = &f.mol;
    match f.kind {
        FragmentKind::Dummy => (0..m.atom_count())
            .filter(|&i| m.atom(i).is_dummy() && m.degree(i) == 1)
            .map(|i| (m.atom(i).attach_id, m.bond(m.neighbors(i)[0].1).order, i))
            .collect(),
        FragmentKind::BondNode => (0..m.atom_count()).map(|i| (None, BondOrder::Single, i)).collect(),
        // one slot per hydrogen an atom can give up
        FragmentKind::Group => (0..m.atom_count())
            .flat_map(|i| std::iter::repeat_n((None, BondOrder::Single, i), m.total_h(i) as usize))
            .collect(),
    }
}

pub(crate) fn slots_match(scheme: Scheme, a: &Fragment, sa: Slot, b: &Fragment, sb: Slot) -> bool {
    match scheme {
        Scheme::Tsid => sa.0.is_some() && sa.0 == sb.0,
        Scheme::Tsdy => sa.1 == sb.1,
        _ => a.kind != b.kind && a.mol.atom(sa.2).element == b.mol.atom(sb.2).element,
    }
}

type Slot = (Option<u32>, BondOrder, usize);

/// Work limit for one random tree search, in placement attempts.
const TREE_BUDGET: usize = 4096;

struct TreeSearch<'a> {
    fragments: &'a [Fragment],
    scheme: Scheme,
    slots: Vec<Vec<Slot>>,
    pending: Vec<usize>,
    /// fragment index and parent of every placed node
    placed: Vec<(usize, Option<usize>)>,
    open: Vec<Vec<Slot>>,
    budget: usize,
}

impl TreeSearch<'_> {
    /// Places all pending fragments, trying attachments in random order:
    /// first a uniformly chosen node with a fitting open slot, then what
    /// fits there. Dead ends are undone.
    fn place(&mut self, rng: &mut ChaCha8Rng) -> bool {
        if self.pending.is_empty() {
            return true;
        }
        if self.budget == 0 {
            return false;
        }
        self.budget -= 1;
        // (pending index, node, node slot, fragment slot), one per distinct atom pair
        let mut options: Vec<(usize, usize, usize, usize)> = Vec::new();
        let mut seen = HashSet::new();
        for (pi, &f) in self.pending.iter().enumerate() {
            for (node, open) in self.open.iter().enumerate() {
                let host = &self.fragments[self.placed[node].0];
                for (ns, &s) in open.iter().enumerate() {
                    for (fs, &t) in self.slots[f].iter().enumerate() {
                        if slots_match(self.scheme, host, s, &self.fragments[f], t) && seen.insert((pi, node, s.2, t.2))
                        {
                            options.push((pi, node, ns, fs));
                        }
                    }
                }
            }
        }
        let mut nodes: Vec<usize> = options.iter().map(|o| o.1).collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes.shuffle(rng);
        for node in nodes {
            let mut here: Vec<_> = options.iter().filter(|o| o.1 == node).copied().collect();
            here.shuffle(rng);
            for (pi, node, ns, fs) in here {
                let f = self.pending.remove(pi);
                let used = self.open[node].remove(ns);
                let mut rest = self.slots[f].clone();
                rest.remove(fs);
                self.placed.push((f, Some(node)));
                self.open.push(rest);
                if self.place(rng) {
                    return true;
                }
                self.open.pop();
                self.placed.pop();
                self.open[node].insert(ns, used);
                self.pending.insert(pi, f);
                if self.budget == 0 {
                    return false;
                }
            }
        }
        false
    }
}

/// Random tree over exactly these fragments: each next fragment hangs off a
/// uniformly chosen node that still has a compatible open slot, backing out
/// of choices that leave some fragment unplaceable.
pub fn random_tree(fragments: &[Fragment], scheme: Scheme, rng: &mut ChaCha8Rng) -> Option<Amt<Fragment>> {
    let mut roots: Vec<usize> = (0..fragments.len()).collect();
    roots.shuffle(rng);
    let root = *roots.first()?;
    let slots: Vec<Vec<Slot>> = fragments.iter().map(open_slots).collect();
    let mut search = TreeSearch {
        fragments,
        scheme,
        open: vec![slots[root].clone()],
        slots,
        pending: roots[1..].to_vec(),
        placed: vec![(root, None)],
        budget: TREE_BUDGET,
    };
    if !search.place(rng) {
        return None;
    }
    let mut amt = Amt::new(fragments[root].clone());
    for &(f, parent) in &search.placed[1..] {
        amt.add_child(parent.expect("non-root node has a parent"), fragments[f].clone(), None);
    }
    Some(amt)
}

/// Train-free generation: random tree over the given fragments, random
/// joins, retried with fresh draws until the result validates.
pub fn random_reconstruct(
    fragments: &[Fragment],
    scheme: Scheme,
    seed: u64,
    max_retries: usize,
) -> Result<(Molecule, AssemblyReport), ReconstructError> {
    if fragments.is_empty() {
        return Err(ReconstructError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = None;
    for attempt in 0..max_retries.max(1) {
        let Some(amt) = random_tree(fragments, scheme, &mut rng) else { continue };
        let prepared = if scheme == Scheme::Tsid { amt } else { strip_joins(amt) };
        match assemble(&prepared, scheme, SelectionPolicy::Random(rng.gen())) {
            Ok((m, mut report)) => {
                report.retries = attempt;
                return Ok((m, report));
            }
            Err(e) => last = Some(e),
        }
    }
    Err(ReconstructError::ExhaustedRetries { attempts: max_retries.max(1), last })
}

pub(crate) fn strip_joins(mut amt: Amt<Fragment>) -> Amt<Fragment> {
    for i in 0..amt.len() {
        amt.set_join(i, None);
    }
    amt
}
