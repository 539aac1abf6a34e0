use super::element::Element;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BondOrder {
    Single,
    Double,
    Triple,
}

impl BondOrder {
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub fn from_valence(v: u8) -> Option<BondOrder> {
        match v {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BondOrder::Single => "-",
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    pub isotope: Option<u16>,
    /// Hydrogens written inside brackets.
    pub explicit_h: u8,
    /// Bracket atoms never receive implicit hydrogens.
    pub bracket: bool,
    pub aromatic: bool,
    /// The `n` of `[n*]`; only dummy atoms carry one.
    pub attach_id: Option<u32>,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom { element, charge: 0, isotope: None, explicit_h: 0, bracket: false, aromatic: false, attach_id: None }
    }

    pub fn dummy(attach_id: Option<u32>) -> Self {
        Atom { bracket: attach_id.is_some(), attach_id, ..Atom::new(Element::Dummy) }
    }

    pub fn is_dummy(&self) -> bool {
        self.element == Element::Dummy
    }

    pub fn is_heavy(&self) -> bool {
        !matches!(self.element, Element::Dummy | Element::H)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub aromatic: bool,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }

    /// Valence contribution; aromatic bonds count as single here, the
    /// extra pi electron is accounted per atom.
    pub fn valence(&self) -> u8 {
        if self.aromatic {
            1
        } else {
            self.order.valence()
        }
    }
}

/// Undirected attributed molecular graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl Molecule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_atom(&mut self, atom: Atom) -> usize {
        self.atoms.push(atom);
        self.adj.push(Vec::new());
        self.atoms.len() - 1
    }

    /// Adds a bond and returns its index. Panics on self loops or duplicates.
    pub fn add_bond(&mut self, a: usize, b: usize, order: BondOrder, aromatic: bool) -> usize {
        assert!(a != b, "self bond on atom {a}");
        assert!(self.bond_between(a, b).is_none(), "duplicate bond {a}-{b}");
        let idx = self.bonds.len();
        self.bonds.push(Bond { a, b, order, aromatic });
        self.adj[a].push((b, idx));
        self.adj[b].push((a, idx));
        idx
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn atom_mut(&mut self, i: usize) -> &mut Atom {
        &mut self.atoms[i]
    }

    pub fn bond(&self, i: usize) -> &Bond {
        &self.bonds[i]
    }

    pub fn bond_mut(&mut self, i: usize) -> &mut Bond {
        &mut self.bonds[i]
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `(neighbor, bond index)` pairs in insertion order.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adj.get(a)?.iter().find(|&&(n, _)| n == b).map(|&(_, bi)| bi)
    }

    pub fn bond_valence_sum(&self, i: usize) -> u8 {
        self.adj[i].iter().map(|&(_, b)| self.bonds[b].valence()).sum()
    }

    fn has_aromatic_bond(&self, i: usize) -> bool {
        self.adj[i].iter().any(|&(_, b)| self.bonds[b].aromatic)
    }

    /// Whether an aromatic atom still needs a double bond when kekulized.
    pub fn needs_pi(&self, i: usize) -> bool {
        let atom = &self.atoms[i];
        self.needs_pi_as(i, atom.bracket, atom.explicit_h)
    }

    fn needs_pi_as(&self, i: usize, bracket: bool, explicit_h: u8) -> bool {
        let atom = &self.atoms[i];
        if !atom.aromatic || !self.has_aromatic_bond(i) {
            return false;
        }
        let used = self.bond_valence_sum(i) + explicit_h;
        let allowed = atom.element.allowed_valences(atom.charge);
        if bracket {
            allowed.contains(&(used + 1)) && !allowed.contains(&used)
        } else {
            allowed.first().is_some_and(|&v| v > used)
        }
    }

    pub fn implicit_h(&self, i: usize) -> u8 {
        let atom = &self.atoms[i];
        if atom.bracket {
            return 0;
        }
        self.unbracketed_h(i)
    }

    /// Hydrogens atom `i` would carry if written without brackets.
    pub fn unbracketed_h(&self, i: usize) -> u8 {
        let atom = &self.atoms[i];
        if !atom.element.is_organic_subset() || atom.is_dummy() {
            return 0;
        }
        let mut used = self.bond_valence_sum(i);
        if atom.aromatic && self.needs_pi_as(i, false, 0) {
            used += 1;
        }
        atom.element.allowed_valences(atom.charge).into_iter().find(|&v| v >= used).map_or(0, |v| v - used)
    }

    /// Whether an unbracketed atom `i` can carry its current bonds.
    pub fn fits_unbracketed(&self, i: usize) -> bool {
        let atom = &self.atoms[i];
        let used = self.bond_valence_sum(i) + u8::from(self.needs_pi_as(i, false, 0));
        atom.element.allowed_valences(0).last().is_some_and(|&m| used <= m)
    }

    pub fn total_h(&self, i: usize) -> u8 {
        self.atoms[i].explicit_h + self.implicit_h(i)
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.is_heavy()).count()
    }

    pub fn dummy_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.is_dummy()).count()
    }

    pub fn has_aromatic(&self) -> bool {
        self.atoms.iter().any(|a| a.aromatic) || self.bonds.iter().any(|b| b.aromatic)
    }

    /// Connected components as sorted atom lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut i = 0;
            while i < comp.len() {
                let u = comp[i];
                i += 1;
                for &(v, _) in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.atoms.len() <= 1 || self.components().len() == 1
    }

    /// Marks every bond that lies on a cycle (i.e. is not a bridge).
    pub fn ring_bonds(&self) -> Vec<bool> {
        let n = self.atoms.len();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut in_ring = vec![true; self.bonds.len()];
        let mut timer = 0;
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            // iterative Tarjan bridge search: (node, parent bond, next neighbor)
            let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            while let Some(&mut (u, pb, ref mut next)) = stack.last_mut() {
                if *next < self.adj[u].len() {
                    let (v, b) = self.adj[u][*next];
                    *next += 1;
                    if b == pb {
                        continue;
                    }
                    if disc[v] == usize::MAX {
                        disc[v] = timer;
                        low[v] = timer;
                        timer += 1;
                        stack.push((v, b, 0));
                    } else {
                        low[u] = low[u].min(disc[v]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[u]);
                        if low[u] > disc[p] {
                            in_ring[pb] = false;
                        }
                    }
                }
            }
        }
        in_ring
    }

    pub fn ring_atoms(&self) -> Vec<bool> {
        let rb = self.ring_bonds();
        let mut out = vec![false; self.atoms.len()];
        for (i, b) in self.bonds.iter().enumerate() {
            if rb[i] {
                out[b.a] = true;
                out[b.b] = true;
            }
        }
        out
    }

    /// Cycle rank, summed over components.
    pub fn ring_count(&self) -> usize {
        let comps = self.components().len();
        (self.bonds.len() + comps).saturating_sub(self.atoms.len())
    }

    /// Induced subgraph over `keep` (in the given order). Returns the new
    /// molecule and the old-to-new index map.
    pub fn subgraph(&self, keep: &[usize]) -> (Molecule, Vec<Option<usize>>) {
        let mut map = vec![None; self.atoms.len()];
        let mut out = Molecule::new();
        for &i in keep {
            map[i] = Some(out.add_atom(self.atoms[i].clone()));
        }
        for b in &self.bonds {
            if let (Some(a), Some(c)) = (map[b.a], map[b.b]) {
                out.add_bond(a, c, b.order, b.aromatic);
            }
        }
        (out, map)
    }

    /// Renumbers atoms: new index `i` holds old atom `order[i]`.
    pub fn reordered(&self, order: &[usize]) -> Molecule {
        assert_eq!(order.len(), self.atoms.len());
        self.subgraph(order).0
    }

    /// Copy with bonds re-inserted in a different order; used to check that
    /// nothing depends on bond insertion order.
    pub fn with_bond_order(&self, bond_order: &[usize]) -> Molecule {
        let mut out = Molecule::new();
        for a in &self.atoms {
            out.add_atom(a.clone());
        }
        for &bi in bond_order {
            let b = &self.bonds[bi];
            out.add_bond(b.a, b.b, b.order, b.aromatic);
        }
        out
    }

    pub fn remove_bond(&mut self, idx: usize) {
        let keep: Vec<Bond> =
            self.bonds.iter().enumerate().filter(|&(i, _)| i != idx).map(|(_, b)| b.clone()).collect();
        self.rebuild(keep);
    }

    fn rebuild(&mut self, bonds: Vec<Bond>) {
        self.bonds.clear();
        for a in &mut self.adj {
            a.clear();
        }
        for b in bonds {
            self.add_bond(b.a, b.b, b.order, b.aromatic);
        }
    }

    /// Removes the listed atoms; returns the old-to-new index map.
    pub fn remove_atoms(&mut self, remove: &[usize]) -> Vec<Option<usize>> {
        let mut drop = vec![false; self.atoms.len()];
        for &i in remove {
            drop[i] = true;
        }
        let keep: Vec<usize> = (0..self.atoms.len()).filter(|&i| !drop[i]).collect();
        let (m, map) = self.subgraph(&keep);
        *self = m;
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> Molecule {
        let mut m = Molecule::new();
        for _ in 0..n {
            m.add_atom(Atom::new(Element::C));
        }
        for i in 1..n {
            m.add_bond(i - 1, i, BondOrder::Single, false);
        }
        m
    }

    #[test]
    fn implicit_hydrogens() {
        let m = chain(3);
        assert_eq!(m.implicit_h(0), 3);
        assert_eq!(m.implicit_h(1), 2);
    }

    #[test]
    fn bridges_and_rings() {
        let mut m = chain(4);
        m.add_bond(0, 3, BondOrder::Single, false);
        let p = m.add_atom(Atom::new(Element::O));
        m.add_bond(3, p, BondOrder::Single, false);
        let rb = m.ring_bonds();
        assert_eq!(rb, vec![true, true, true, true, false]);
        assert_eq!(m.ring_count(), 1);
    }

    #[test]
    fn remove_atoms_remaps() {
        let mut m = chain(4);
        let map = m.remove_atoms(&[1]);
        assert_eq!(map, vec![Some(0), None, Some(1), Some(2)]);
        assert_eq!(m.bond_count(), 1);
        assert_eq!(m.components().len(), 2);
    }
}
