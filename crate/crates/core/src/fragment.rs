//! Cut-bond selection, fragmentation and AMT construction.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::amt::{Amt, JoinRecord};
use crate::chem::{canonical_smiles, kekulize, write_smiles, Atom, BondOrder, Element, Molecule, WriteMode};
use crate::UnknownName;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    MmpaLite,
    Scaffold,
    BricsLite,
}

impl RuleKind {
    pub fn name(self) -> &'static str {
        match self {
            RuleKind::MmpaLite => "mmpa",
            RuleKind::Scaffold => "scaffold",
            RuleKind::BricsLite => "brics-lite",
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleKind {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "mmpa" | "mmpa-lite" => Ok(RuleKind::MmpaLite),
            "scaffold" => Ok(RuleKind::Scaffold),
            "brics" | "brics-lite" => Ok(RuleKind::BricsLite),
            _ => Err(UnknownName::new("rule", s)),
        }
    }
}

/// Cut rule plus its minimum fragment size (heavy atoms on each side).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutRule {
    pub kind: RuleKind,
    pub min_fragment_size: usize,
}

impl CutRule {
    pub fn new(kind: RuleKind) -> Self {
        CutRule { kind, min_fragment_size: 1 }
    }

    pub fn mmpa_lite() -> Self {
        Self::new(RuleKind::MmpaLite)
    }

    pub fn scaffold() -> Self {
        Self::new(RuleKind::Scaffold)
    }

    pub fn brics_lite() -> Self {
        Self::new(RuleKind::BricsLite)
    }

    pub fn with_min_fragment_size(mut self, n: usize) -> Self {
        self.min_fragment_size = n;
        self
    }
}

impl Default for CutRule {
    fn default() -> Self {
        Self::mmpa_lite()
    }
}

/// One cut bond; `u < v` are its atoms in the source molecule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cut {
    pub bond: usize,
    pub u: usize,
    pub v: usize,
    pub order: BondOrder,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CutSet {
    pub cuts: Vec<Cut>,
}

impl CutSet {
    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Cut> {
        self.cuts.iter()
    }
}

fn is_heavy(mol: &Molecule, i: usize) -> bool {
    !matches!(mol.atom(i).element, Element::Dummy | Element::H)
}

fn skeletal_degree(mol: &Molecule, i: usize) -> usize {
    mol.neighbors(i).iter().filter(|&&(v, _)| mol.atom(v).element != Element::H).count()
}

fn is_terminal(mol: &Molecule, i: usize) -> bool {
    skeletal_degree(mol, i) == 1
}

fn bridge_single(mol: &Molecule, ring: &[bool], b: usize) -> bool {
    let bond = mol.bond(b);
    !ring[b] && !bond.aromatic && bond.order == BondOrder::Single && is_heavy(mol, bond.a) && is_heavy(mol, bond.b)
}

fn has_acyclic_multiple_bond_to(mol: &Molecule, ring: &[bool], i: usize, hetero: impl Fn(Element) -> bool) -> bool {
    mol.neighbors(i).iter().any(|&(v, b)| {
        let bond = mol.bond(b);
        !ring[b] && !bond.aromatic && bond.order != BondOrder::Single && hetero(mol.atom(v).element)
    })
}

/// Neutral carbon without an exocyclic multiple bond to a heteroatom.
fn mmpa_carbon(mol: &Molecule, ring: &[bool], i: usize) -> bool {
    let a = mol.atom(i);
    a.element == Element::C
        && a.charge == 0
        && !has_acyclic_multiple_bond_to(mol, ring, i, |e| !matches!(e, Element::C | Element::H))
}

fn mmpa_candidates(mol: &Molecule, ring: &[bool]) -> Vec<usize> {
    let eligible: Vec<bool> = (0..mol.bond_count())
        .map(|b| {
            let bond = mol.bond(b);
            bridge_single(mol, ring, b) && (mmpa_carbon(mol, ring, bond.a) || mmpa_carbon(mol, ring, bond.b))
        })
        .collect();
    // of several terminal substituents on one atom, only the first is cut
    let first_terminal = |hub: usize| {
        mol.neighbors(hub).iter().filter(|&&(w, b)| eligible[b] && is_terminal(mol, w)).map(|&(w, _)| w).min()
    };
    (0..mol.bond_count())
        .filter(|&b| {
            if !eligible[b] {
                return false;
            }
            let (x, y) = (mol.bond(b).a, mol.bond(b).b);
            match (is_terminal(mol, x), is_terminal(mol, y)) {
                (false, true) => first_terminal(x) == Some(y),
                (true, false) => first_terminal(y) == Some(x),
                _ => true,
            }
        })
        .collect()
}

/// Bemis–Murcko scaffold: ring systems plus the linkers between them.
fn scaffold_atoms(mol: &Molecule) -> Vec<bool> {
    let ring_atoms = mol.ring_atoms();
    let mut alive: Vec<bool> = (0..mol.atom_count()).map(|i| mol.atom(i).element != Element::H).collect();
    loop {
        let mut changed = false;
        for i in 0..mol.atom_count() {
            if alive[i] && !ring_atoms[i] {
                let deg = mol.neighbors(i).iter().filter(|&&(v, _)| alive[v]).count();
                if deg <= 1 {
                    alive[i] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return alive;
        }
    }
}

fn scaffold_candidates(mol: &Molecule, ring: &[bool]) -> Vec<usize> {
    let scaffold = scaffold_atoms(mol);
    (0..mol.bond_count())
        .filter(|&b| bridge_single(mol, ring, b) && scaffold[mol.bond(b).a] != scaffold[mol.bond(b).b])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Env {
    Ring,
    Carbonyl,
    ChainC,
    ChainHetero,
    Other,
}

fn environment(mol: &Molecule, ring: &[bool], ring_atoms: &[bool], i: usize) -> Env {
    if ring_atoms[i] {
        return Env::Ring;
    }
    match mol.atom(i).element {
        Element::C
            if has_acyclic_multiple_bond_to(mol, ring, i, |e| matches!(e, Element::O | Element::S | Element::N)) =>
        {
            Env::Carbonyl
        }
        Element::C => Env::ChainC,
        Element::N | Element::O | Element::S => Env::ChainHetero,
        _ => Env::Other,
    }
}

const BRICS_PAIRS: [(Env, Env); 6] = [
    (Env::Ring, Env::Ring),
    (Env::Ring, Env::ChainC),
    (Env::Ring, Env::Carbonyl),
    (Env::Ring, Env::ChainHetero),
    (Env::ChainC, Env::ChainHetero),
    (Env::ChainC, Env::Carbonyl),
];

fn brics_candidates(mol: &Molecule, ring: &[bool]) -> Vec<usize> {
    let ring_atoms = mol.ring_atoms();
    mmpa_candidates(mol, ring)
        .into_iter()
        .filter(|&b| {
            let x = environment(mol, ring, &ring_atoms, mol.bond(b).a);
            let y = environment(mol, ring, &ring_atoms, mol.bond(b).b);
            BRICS_PAIRS.iter().any(|&(p, q)| (p, q) == (x, y) || (p, q) == (y, x))
        })
        .collect()
}

fn heavy_side(mol: &Molecule, removed: &[bool], start: usize) -> usize {
    let mut seen = vec![false; mol.atom_count()];
    seen[start] = true;
    let mut stack = vec![start];
    let mut count = 0;
    while let Some(u) = stack.pop() {
        if is_heavy(mol, u) {
            count += 1;
        }
        for &(v, b) in mol.neighbors(u) {
            if !removed[b] && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    count
}

/// Selects cut bonds. Only acyclic single bonds between heavy atoms are ever
/// chosen; output is ordered by (min atom index, max atom index).
pub fn find_cut_bonds(mol: &Molecule, rule: &CutRule) -> CutSet {
    let ring = mol.ring_bonds();
    let mut bonds = match rule.kind {
        RuleKind::MmpaLite => mmpa_candidates(mol, &ring),
        RuleKind::Scaffold => scaffold_candidates(mol, &ring),
        RuleKind::BricsLite => brics_candidates(mol, &ring),
    };
    let key = |b: usize| {
        let bond = mol.bond(b);
        (bond.a.min(bond.b), bond.a.max(bond.b))
    };
    bonds.sort_by_key(|&b| key(b));
    if rule.min_fragment_size > 1 {
        let mut removed = vec![false; mol.bond_count()];
        bonds.retain(|&b| {
            removed[b] = true;
            let (x, y) = (mol.bond(b).a, mol.bond(b).b);
            let ok = heavy_side(mol, &removed, x) >= rule.min_fragment_size
                && heavy_side(mol, &removed, y) >= rule.min_fragment_size;
            removed[b] = ok;
            ok
        });
    }
    CutSet {
        cuts: bonds
            .into_iter()
            .map(|b| {
                let (u, v) = key(b);
                Cut { bond: b, u, v, order: mol.bond(b).order }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FragmentKind {
    /// Fragment carrying dummy attachment atoms.
    Dummy,
    /// Shared-atom scheme: a connected piece of the molecule.
    Group,
    /// Shared-atom scheme: the two atoms of one cut bond.
    BondNode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub mol: Molecule,
    pub kind: FragmentKind,
    /// Source atom of each fragment atom; `None` for dummies and for
    /// fragments read back from text.
    pub origin: Vec<Option<usize>>,
    /// Cut a dummy atom stands for.
    pub dummy_cut: Vec<Option<usize>>,
}

impl Fragment {
    /// Fragment with no provenance, as read from a t-SMILES string.
    pub fn from_mol(mol: Molecule, kind: FragmentKind) -> Self {
        let n = mol.atom_count();
        Fragment { mol, kind, origin: vec![None; n], dummy_cut: vec![None; n] }
    }

    /// Text used inside t-SMILES: input order, kekulized when possible;
    /// bond nodes are written canonically.
    pub fn text(&self) -> String {
        if self.kind == FragmentKind::BondNode {
            return canonical_smiles(&self.mol);
        }
        write_smiles(&self.mol, WriteMode::InputOrder, true)
            .or_else(|_| write_smiles(&self.mol, WriteMode::InputOrder, false))
            .expect("aromatic writing does not kekulize")
    }

    /// Canonical text with attachment ids removed.
    pub fn canonical_text(&self) -> String {
        let mut m = self.mol.clone();
        for i in 0..m.atom_count() {
            m.atom_mut(i).attach_id = None;
        }
        canonical_smiles(&m)
    }

    pub fn min_origin(&self) -> Option<usize> {
        self.origin.iter().flatten().copied().min()
    }

    fn reorder(&mut self, order: &[usize]) {
        self.mol = self.mol.reordered(order);
        self.origin = order.iter().map(|&i| self.origin[i]).collect();
        self.dummy_cut = order.iter().map(|&i| self.dummy_cut[i]).collect();
    }
}

/// Undirected connection between two fragments: `(fragment, atom)` on each
/// end and the bond order of the cut it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub cut: usize,
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub order: BondOrder,
}

impl Link {
    fn end_in(&self, frag: usize) -> (usize, usize) {
        if self.a.0 == frag {
            (self.a.1, self.b.0)
        } else {
            (self.b.1, self.a.0)
        }
    }
}

/// Fragments of one molecule with the links between them, before rooting.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragmentation {
    pub fragments: Vec<Fragment>,
    pub links: Vec<Link>,
    pub with_ids: bool,
}

fn base_form(mol: &Molecule) -> Molecule {
    kekulize(mol).unwrap_or_else(|_| mol.clone())
}

/// Connected components once the cut bonds are removed, each sorted and
/// the list ordered by lowest atom.
fn pieces(mol: &Molecule, cuts: &CutSet) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut removed = vec![false; mol.bond_count()];
    for c in cuts.iter() {
        removed[c.bond] = true;
    }
    let mut comp_of = vec![usize::MAX; mol.atom_count()];
    let mut comps = Vec::new();
    for s in 0..mol.atom_count() {
        if comp_of[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        comp_of[s] = id;
        let mut members = vec![s];
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &(v, b) in mol.neighbors(u) {
                if !removed[b] && comp_of[v] == usize::MAX {
                    comp_of[v] = id;
                    members.push(v);
                    stack.push(v);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    (comps, comp_of)
}

/// Splits at every cut, capping both sides with a dummy atom.
///
/// Fragment atoms follow source order with each dummy right after the atom
/// it is bonded to, except that the dummy facing the parent (under the
/// default root) comes first. With ids, the two dummies of a cut share an
/// id numbered in tree order; [`build_amt`] redoes both steps for other
/// roots.
pub fn fragment_dummy(mol: &Molecule, cuts: &CutSet, with_ids: bool) -> Fragmentation {
    let base = base_form(mol);
    let (comps, comp_of) = pieces(&base, cuts);
    let mut fragments = Vec::with_capacity(comps.len());
    let mut local = vec![0usize; base.atom_count()];
    let mut dummy_at: Vec<[usize; 2]> = vec![[0, 0]; cuts.len()];
    let mut is_cut = vec![false; base.bond_count()];
    for c in cuts.iter() {
        is_cut[c.bond] = true;
    }
    for (ci, comp) in comps.iter().enumerate() {
        // (anchor atom, 0 for the atom itself / 1 for a dummy, cut, side)
        let mut items: Vec<(usize, u8, usize, usize)> = comp.iter().map(|&i| (i, 0, 0, 0)).collect();
        for (k, c) in cuts.iter().enumerate() {
            for (side, &end) in [c.u, c.v].iter().enumerate() {
                if comp_of[end] == ci {
                    items.push((end, 1, k, side));
                }
            }
        }
        items.sort_unstable();
        let mut m = Molecule::new();
        let mut origin = Vec::with_capacity(items.len());
        let mut dummy_cut = Vec::with_capacity(items.len());
        for &(anchor, is_dummy, k, side) in &items {
            let idx = if is_dummy == 0 {
                local[anchor] = m.atom_count();
                origin.push(Some(anchor));
                dummy_cut.push(None);
                m.add_atom(base.atom(anchor).clone())
            } else {
                dummy_at[k][side] = m.atom_count();
                origin.push(None);
                dummy_cut.push(Some(k));
                m.add_atom(Atom::dummy(with_ids.then_some(k as u32 + 1)))
            };
            debug_assert_eq!(idx + 1, m.atom_count());
        }
        for b in base.bonds().iter().zip(&is_cut).filter(|(_, &cut)| !cut).map(|(b, _)| b) {
            if comp_of[b.a] == ci && comp_of[b.b] == ci {
                m.add_bond(local[b.a], local[b.b], b.order, b.aromatic);
            }
        }
        for (k, c) in cuts.iter().enumerate() {
            for (side, &end) in [c.u, c.v].iter().enumerate() {
                if comp_of[end] == ci {
                    m.add_bond(local[end], dummy_at[k][side], c.order, false);
                }
            }
        }
        fragments.push(Fragment { mol: m, kind: FragmentKind::Dummy, origin, dummy_cut });
    }
    let links = cuts
        .iter()
        .enumerate()
        .map(|(k, c)| Link {
            cut: k,
            a: (comp_of[c.u], dummy_at[k][0]),
            b: (comp_of[c.v], dummy_at[k][1]),
            order: c.order,
        })
        .collect();
    let raw = Fragmentation { fragments, links, with_ids };
    match build_amt(&raw, RootPolicy::CanonicalFirst) {
        Ok(amt) => {
            let fragments = amt.into_nodes();
            let links = raw
                .links
                .iter()
                .map(|l| {
                    let at = |f: usize| fragments[f].dummy_cut.iter().position(|&c| c == Some(l.cut)).unwrap();
                    Link { a: (l.a.0, at(l.a.0)), b: (l.b.0, at(l.b.0)), ..*l }
                })
                .collect();
            Fragmentation { fragments, links, with_ids }
        }
        Err(_) => raw,
    }
}

fn bond_node_atom(src: &Atom, order: BondOrder) -> Atom {
    let mut a = Atom::new(src.element);
    a.charge = src.charge;
    a.isotope = src.isotope;
    a.bracket = src.bracket;
    if a.bracket {
        let used = order.valence();
        let fill = src.element.allowed_valences(src.charge).into_iter().find(|&v| v >= used).unwrap_or(used);
        a.explicit_h = fill - used;
    }
    a
}

/// Shared-atom split: group nodes are the pieces left after removing the
/// cut bonds (hydrogens fill the freed valence); each cut becomes a 2-atom
/// bond node linked to both groups through the atoms it shares with them.
pub fn fragment_shared(mol: &Molecule, cuts: &CutSet) -> Fragmentation {
    let base = base_form(mol);
    let (comps, comp_of) = pieces(&base, cuts);
    let mut local = vec![0usize; base.atom_count()];
    let mut fragments = Vec::with_capacity(comps.len() + cuts.len());
    for comp in &comps {
        let (mut m, map) = base.subgraph(comp);
        for (i, &src) in comp.iter().enumerate() {
            local[src] = map[src].unwrap();
            debug_assert_eq!(local[src], i);
        }
        let mut freed = vec![0u8; comp.len()];
        for c in cuts.iter() {
            for end in [c.u, c.v] {
                if comp.binary_search(&end).is_ok() {
                    freed[local[end]] += c.order.valence();
                }
            }
        }
        for (i, &src) in comp.iter().enumerate() {
            if freed[i] == 0 {
                continue;
            }
            let want = base.total_h(src) + freed[i];
            if m.atom(i).bracket || m.unbracketed_h(i) != want {
                let a = m.atom_mut(i);
                a.bracket = true;
                a.explicit_h = want;
            }
        }
        fragments.push(Fragment {
            mol: m,
            kind: FragmentKind::Group,
            origin: comp.iter().map(|&i| Some(i)).collect(),
            dummy_cut: vec![None; comp.len()],
        });
    }
    let mut links = Vec::with_capacity(2 * cuts.len());
    for (k, c) in cuts.iter().enumerate() {
        let mut m = Molecule::new();
        let a = m.add_atom(bond_node_atom(base.atom(c.u), c.order));
        let b = m.add_atom(bond_node_atom(base.atom(c.v), c.order));
        m.add_bond(a, b, c.order, false);
        let node = fragments.len();
        fragments.push(Fragment {
            mol: m,
            kind: FragmentKind::BondNode,
            origin: vec![Some(c.u), Some(c.v)],
            dummy_cut: vec![None, None],
        });
        links.push(Link { cut: k, a: (comp_of[c.u], local[c.u]), b: (node, a), order: c.order });
        links.push(Link { cut: k, a: (node, b), b: (comp_of[c.v], local[c.v]), order: c.order });
    }
    Fragmentation { fragments, links, with_ids: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootPolicy {
    /// Fragment with the smallest canonical text (ids ignored); ties go to
    /// the fragment holding the lowest source atom.
    #[default]
    CanonicalFirst,
    Index(usize),
}

impl FromStr for RootPolicy {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "canonical" || s == "canonical_first" {
            return Ok(RootPolicy::CanonicalFirst);
        }
        s.strip_prefix("index:")
            .and_then(|n| n.parse().ok())
            .map(RootPolicy::Index)
            .ok_or_else(|| UnknownName::new("root policy", s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FragmentError {
    #[error("fragment graph is disconnected ({components} components)")]
    DisconnectedFragments { components: usize },
    #[error("root index {index} out of range for {count} fragments")]
    RootOutOfRange { index: usize, count: usize },
    #[error("molecule has no atoms")]
    Empty,
}

fn find(uf: &mut [usize], mut x: usize) -> usize {
    while uf[x] != x {
        uf[x] = uf[uf[x]];
        x = uf[x];
    }
    x
}

/// Roots the fragment graph. Links are taken in cut order; any link closing
/// a cycle is dropped, which yields the minimum spanning tree under that
/// order. Dummy fragments are then normalized for the chosen root: ids are
/// renumbered in depth-first preorder of the tree edges and each fragment's
/// parent-side dummy (for the root, its first child's dummy) moves to
/// atom 0.
pub fn build_amt(frag: &Fragmentation, root: RootPolicy) -> Result<Amt<Fragment>, FragmentError> {
    let n = frag.fragments.len();
    if n == 0 {
        return Err(FragmentError::Empty);
    }
    let mut order: Vec<usize> = (0..frag.links.len()).collect();
    order.sort_by_key(|&i| (frag.links[i].cut, i));
    let mut uf: Vec<usize> = (0..n).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut tree_links = 0;
    for &li in &order {
        let l = &frag.links[li];
        let (x, y) = (find(&mut uf, l.a.0), find(&mut uf, l.b.0));
        if x != y {
            uf[x] = y;
            adj[l.a.0].push(li);
            adj[l.b.0].push(li);
            tree_links += 1;
        }
    }
    if tree_links + 1 != n {
        return Err(FragmentError::DisconnectedFragments { components: n - tree_links });
    }
    let root = match root {
        RootPolicy::Index(i) if i < n => i,
        RootPolicy::Index(i) => return Err(FragmentError::RootOutOfRange { index: i, count: n }),
        RootPolicy::CanonicalFirst => (0..n)
            .min_by_key(|&i| {
                let f = &frag.fragments[i];
                (f.canonical_text(), f.min_origin().unwrap_or(usize::MAX), i)
            })
            .unwrap(),
    };

    let mut parent = vec![None; n];
    let mut parent_link = vec![None; n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut bfs = vec![root];
    let mut i = 0;
    while i < bfs.len() {
        let u = bfs[i];
        i += 1;
        for &li in &adj[u] {
            let (_, v) = frag.links[li].end_in(u);
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some(u);
                parent_link[v] = Some(li);
                bfs.push(v);
            }
        }
    }
    let mut fragments = frag.fragments.clone();
    let shape = Amt::from_parents(vec![(); n], root, parent.clone(), vec![None; n], &bfs);
    let preorder = shape.preorder();
    let mut edge_id = vec![0u32; n];
    for (pos, &c) in preorder.iter().skip(1).enumerate() {
        edge_id[c] = pos as u32 + 1;
    }

    // (node, atom) -> new atom index after normalization
    let mut remap: Vec<Vec<usize>> = fragments.iter().map(|f| (0..f.mol.atom_count()).collect()).collect();
    if fragments.iter().all(|f| f.kind == FragmentKind::Dummy) {
        for u in 0..n {
            let front = match parent_link[u] {
                Some(li) => Some(frag.links[li].end_in(u).0),
                None => shape.children(u).first().map(|&c| frag.links[parent_link[c].unwrap()].end_in(u).0),
            };
            if let Some(front) = front {
                let mut new_order = vec![front];
                new_order.extend((0..fragments[u].mol.atom_count()).filter(|&a| a != front));
                for (new, &old) in new_order.iter().enumerate() {
                    remap[u][old] = new;
                }
                fragments[u].reorder(&new_order);
            }
        }
        for c in 0..n {
            if let Some(li) = parent_link[c] {
                let p = parent[c].unwrap();
                let id = frag.with_ids.then_some(edge_id[c]);
                let (pa, _) = frag.links[li].end_in(p);
                let (ca, _) = frag.links[li].end_in(c);
                fragments[p].mol.atom_mut(remap[p][pa]).attach_id = id;
                fragments[c].mol.atom_mut(remap[c][ca]).attach_id = id;
            }
        }
    }
    let joins = (0..n)
        .map(|c| {
            parent_link[c].map(|li| {
                let l = &frag.links[li];
                let p = parent[c].unwrap();
                JoinRecord { parent_atom: remap[p][l.end_in(p).0], child_atom: remap[c][l.end_in(c).0], order: l.order }
            })
        })
        .collect();
    Ok(Amt::from_parents(fragments, root, parent, joins, &bfs))
}
