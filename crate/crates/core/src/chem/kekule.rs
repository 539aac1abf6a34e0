use thiserror::Error;

use super::mol::{BondOrder, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KekulizeError {
    #[error("aromatic atom {atom} is not on a ring")]
    AromaticOutsideRing { atom: usize },
    #[error("no alternating single/double assignment exists for the aromatic system containing atom {atom}")]
    NoAssignment { atom: usize },
}

/// Step budget for the matching search; beyond it the system is treated as
/// not kekulizable.
const SEARCH_BUDGET: usize = 2_000_000;

/// Perfect matching over the `active` vertices of `adj` by backtracking,
/// always expanding the most constrained vertex first. `priority` orders
/// vertices and neighbors among equals (lower first).
pub(crate) fn perfect_matching(adj: &[Vec<usize>], active: &[bool], priority: &[usize]) -> Option<Vec<Option<usize>>> {
    let n = adj.len();
    let mut mate: Vec<Option<usize>> = vec![None; n];
    let mut sorted_adj: Vec<Vec<usize>> =
        adj.iter().map(|ns| ns.iter().copied().filter(|&v| active[v]).collect()).collect();
    for ns in &mut sorted_adj {
        ns.sort_by_key(|&v| (priority[v], v));
    }
    let mut budget = SEARCH_BUDGET;
    if search(&sorted_adj, active, priority, &mut mate, &mut budget) {
        Some(mate)
    } else {
        None
    }
}

fn search(
    adj: &[Vec<usize>],
    active: &[bool],
    priority: &[usize],
    mate: &mut Vec<Option<usize>>,
    budget: &mut usize,
) -> bool {
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    let mut best: Option<(usize, usize)> = None;
    for u in 0..adj.len() {
        if !active[u] || mate[u].is_some() {
            continue;
        }
        let free = adj[u].iter().filter(|&&v| mate[v].is_none()).count();
        if free == 0 {
            return false;
        }
        let better = match best {
            None => true,
            Some((b, bf)) => (free, priority[u], u) < (bf, priority[b], b),
        };
        if better {
            best = Some((u, free));
        }
    }
    let Some((u, _)) = best else {
        return true;
    };
    for i in 0..adj[u].len() {
        let v = adj[u][i];
        if mate[v].is_some() {
            continue;
        }
        mate[u] = Some(v);
        mate[v] = Some(u);
        if search(adj, active, priority, mate, budget) {
            return true;
        }
        mate[u] = None;
        mate[v] = None;
    }
    false
}

/// Assigns explicit single/double bonds to every aromatic bond and clears
/// the aromatic flags.
pub fn kekulize(mol: &Molecule) -> Result<Molecule, KekulizeError> {
    kekulize_with_priority(mol, &(0..mol.atom_count()).collect::<Vec<_>>())
}

pub(crate) fn kekulize_with_priority(mol: &Molecule, priority: &[usize]) -> Result<Molecule, KekulizeError> {
    if !mol.has_aromatic() {
        return Ok(mol.clone());
    }
    let ring_bonds = mol.ring_bonds();
    let ring_atoms = mol.ring_atoms();
    for (i, a) in mol.atoms().iter().enumerate() {
        if a.aromatic && !ring_atoms[i] {
            return Err(KekulizeError::AromaticOutsideRing { atom: i });
        }
    }
    for (i, b) in mol.bonds().iter().enumerate() {
        if b.aromatic && !ring_bonds[i] {
            let atom = if mol.atom(b.a).aromatic { b.a } else { b.b };
            return Err(KekulizeError::AromaticOutsideRing { atom });
        }
    }
    let n = mol.atom_count();
    let active: Vec<bool> = (0..n).map(|i| mol.needs_pi(i)).collect();
    let mut adj = vec![Vec::new(); n];
    for b in mol.bonds() {
        if b.aromatic && active[b.a] && active[b.b] {
            adj[b.a].push(b.b);
            adj[b.b].push(b.a);
        }
    }
    let mate = perfect_matching(&adj, &active, priority).ok_or_else(|| {
        let atom = (0..n).find(|&i| active[i]).unwrap_or(0);
        KekulizeError::NoAssignment { atom }
    })?;
    let mut out = mol.clone();
    for bi in 0..out.bond_count() {
        let b = out.bond(bi).clone();
        if !b.aromatic {
            continue;
        }
        let order = if mate[b.a] == Some(b.b) { BondOrder::Double } else { BondOrder::Single };
        let bm = out.bond_mut(bi);
        bm.order = order;
        bm.aromatic = false;
    }
    for i in 0..n {
        out.atom_mut(i).aromatic = false;
    }
    Ok(out)
}

/// For a Kekulé molecule, marks bonds whose order differs between Kekulé
/// structures (bonds on an alternating cycle). The marking does not depend
/// on which Kekulé structure is given.
pub fn flippable_bonds(mol: &Molecule) -> Vec<bool> {
    let n = mol.atom_count();
    let ring = mol.ring_bonds();
    let mut doubles = vec![0u8; n];
    let mut ring_double_partner: Vec<Option<usize>> = vec![None; n];
    for (i, b) in mol.bonds().iter().enumerate() {
        if !b.aromatic && b.order == BondOrder::Double {
            doubles[b.a] += 1;
            doubles[b.b] += 1;
            if ring[i] {
                ring_double_partner[b.a] = Some(b.b);
                ring_double_partner[b.b] = Some(b.a);
            }
        }
    }
    let cand: Vec<bool> = (0..n)
        .map(|i| doubles[i] == 1 && !mol.atom(i).is_dummy() && ring_double_partner[i].is_some_and(|p| doubles[p] == 1))
        .collect();
    let mut adj = vec![Vec::new(); n];
    let mut edges = Vec::new();
    for (i, b) in mol.bonds().iter().enumerate() {
        if ring[i] && !b.aromatic && cand[b.a] && cand[b.b] && b.order != BondOrder::Triple {
            adj[b.a].push(b.b);
            adj[b.b].push(b.a);
            edges.push(i);
        }
    }
    let mut flip = vec![false; mol.bond_count()];
    let mut atom_flip = vec![false; n];
    let prio: Vec<usize> = (0..n).collect();
    for &bi in &edges {
        let b = mol.bond(bi);
        if b.order == BondOrder::Double {
            continue;
        }
        let (u, v) = (b.a, b.b);
        // component of u in the candidate graph, without u and v
        let mut comp = vec![false; n];
        let mut stack = vec![u];
        comp[u] = true;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !comp[y] {
                    comp[y] = true;
                    stack.push(y);
                }
            }
        }
        comp[u] = false;
        comp[v] = false;
        if perfect_matching(&adj, &comp, &prio).is_some() {
            flip[bi] = true;
            atom_flip[u] = true;
            atom_flip[v] = true;
        }
    }
    for &bi in &edges {
        let b = mol.bond(bi);
        if b.order == BondOrder::Double && (atom_flip[b.a] || atom_flip[b.b]) {
            flip[bi] = true;
        }
    }
    flip
}
