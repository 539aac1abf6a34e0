use std::fmt::Write as _;

use super::canon::{canonical_form, CanonicalForm};
use super::kekule::{kekulize, KekulizeError};
use super::mol::{BondOrder, Molecule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriteMode {
    /// Depth-first from atom 0, neighbors in ascending index order.
    InputOrder,
    /// Canonical atom ranking; identical text for isomorphic molecules.
    Canonical,
}

/// Serializes `mol`. With `kekulized` the aromatic flags are resolved into
/// explicit single/double bonds first (and failure is an error). Canonical
/// mode always writes a Kekulé form when one exists.
pub fn write_smiles(mol: &Molecule, mode: WriteMode, kekulized: bool) -> Result<String, KekulizeError> {
    match mode {
        WriteMode::InputOrder => {
            let m = if kekulized { kekulize(mol)? } else { mol.clone() };
            let prio: Vec<usize> = (0..m.atom_count()).collect();
            Ok(write_with_priority(&m, &prio))
        }
        WriteMode::Canonical => {
            let form = canonical_form(mol, kekulized)?;
            Ok(write_canonical_form(&form))
        }
    }
}

/// Canonical SMILES; falls back to the aromatic form when no Kekulé
/// structure exists.
pub fn canonical_smiles(mol: &Molecule) -> String {
    write_smiles(mol, WriteMode::Canonical, false).expect("non-kekulized canonical write cannot fail")
}

pub(crate) fn write_canonical_form(form: &CanonicalForm) -> String {
    write_with_priority(&form.mol, &form.ranks)
}

/// Depth-first writer. Each component starts at its lowest-priority atom and
/// neighbors are visited in ascending priority.
pub(crate) fn write_with_priority(mol: &Molecule, priority: &[usize]) -> String {
    let mut comps = mol.components();
    for c in &mut comps {
        c.sort_by_key(|&i| (priority[i], i));
    }
    comps.sort_by_key(|c| c.first().map(|&i| (priority[i], i)));
    let parts: Vec<String> =
        comps.iter().filter(|c| !c.is_empty()).map(|c| write_component(mol, priority, c[0])).collect();
    parts.join(".")
}

struct RingEvent {
    partner: usize,
    bond: usize,
}

fn write_component(mol: &Molecule, priority: &[usize], start: usize) -> String {
    let n = mol.atom_count();
    let mut nbrs: Vec<Vec<(usize, usize)>> = (0..n).map(|i| mol.neighbors(i).to_vec()).collect();
    for list in &mut nbrs {
        list.sort_by_key(|&(v, _)| (priority[v], v));
    }
    let mut disc = vec![usize::MAX; n];
    let mut on_stack = vec![false; n];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut events: Vec<Vec<RingEvent>> = (0..n).map(|_| Vec::new()).collect();
    let mut tree_bond = vec![false; mol.bond_count()];
    let mut seen_ring_bond = vec![false; mol.bond_count()];
    let mut time = 0;
    disc[start] = time;
    time += 1;
    on_stack[start] = true;
    let mut stack = vec![(start, 0usize)];
    while let Some(&mut (u, ref mut next)) = stack.last_mut() {
        if *next >= nbrs[u].len() {
            on_stack[u] = false;
            stack.pop();
            continue;
        }
        let (v, b) = nbrs[u][*next];
        *next += 1;
        if tree_bond[b] || seen_ring_bond[b] {
            continue;
        }
        if disc[v] == usize::MAX {
            disc[v] = time;
            time += 1;
            tree_bond[b] = true;
            children[u].push((v, b));
            on_stack[v] = true;
            stack.push((v, 0));
        } else if on_stack[v] {
            seen_ring_bond[b] = true;
            events[v].push(RingEvent { partner: u, bond: b });
            events[u].push(RingEvent { partner: v, bond: b });
        }
    }
    for ev in &mut events {
        ev.sort_by_key(|e| disc[e.partner]);
    }
    let mut out = String::new();
    let mut labels: Vec<Option<u32>> = vec![None; mol.bond_count()];
    let mut in_use: Vec<bool> = vec![false; 100];
    // explicit stack of pending writes to avoid deep recursion
    enum Step {
        Atom(usize),
        Text(&'static str),
        Bond(usize),
    }
    let mut work = vec![Step::Atom(start)];
    while let Some(step) = work.pop() {
        match step {
            Step::Text(t) => out.push_str(t),
            Step::Bond(b) => out.push_str(&bond_symbol(mol, b)),
            Step::Atom(u) => {
                out.push_str(&atom_symbol(mol, u));
                for ev in &events[u] {
                    if let Some(l) = labels[ev.bond] {
                        out.push_str(&bond_symbol(mol, ev.bond));
                        push_label(&mut out, l);
                        in_use[l as usize] = false;
                    } else {
                        let l = (1..100).find(|&l| !in_use[l]).unwrap_or(99);
                        in_use[l] = true;
                        labels[ev.bond] = Some(l as u32);
                        push_label(&mut out, l as u32);
                    }
                }
                let ch = &children[u];
                // pushed in reverse: branches first, main chain last
                if let Some(&(last, lb)) = ch.last() {
                    work.push(Step::Atom(last));
                    work.push(Step::Bond(lb));
                    for &(c, cb) in ch[..ch.len() - 1].iter().rev() {
                        work.push(Step::Text(")"));
                        work.push(Step::Atom(c));
                        work.push(Step::Bond(cb));
                        work.push(Step::Text("("));
                    }
                }
            }
        }
    }
    out
}

fn push_label(out: &mut String, l: u32) {
    if l < 10 {
        let _ = write!(out, "{l}");
    } else {
        let _ = write!(out, "%{l:02}");
    }
}

fn bond_symbol(mol: &Molecule, b: usize) -> String {
    let bond = mol.bond(b);
    let both_aromatic = mol.atom(bond.a).aromatic && mol.atom(bond.b).aromatic;
    if bond.aromatic {
        return if both_aromatic { String::new() } else { ":".into() };
    }
    match bond.order {
        BondOrder::Single if both_aromatic => "-".into(),
        BondOrder::Single => String::new(),
        o => o.symbol().into(),
    }
}

/// Hydrogen count an unbracketed version of atom `i` would receive.
fn bare_h(mol: &Molecule, i: usize) -> Option<u8> {
    let a = mol.atom(i);
    if !a.element.is_organic_subset() || a.is_dummy() || a.charge != 0 || a.isotope.is_some() {
        return None;
    }
    mol.fits_unbracketed(i).then(|| mol.unbracketed_h(i))
}

fn atom_symbol(mol: &Molecule, i: usize) -> String {
    let a = mol.atom(i);
    if a.is_dummy() {
        return match a.attach_id {
            Some(id) => format!("[{id}*]"),
            None => "*".into(),
        };
    }
    let sym = if a.aromatic { a.element.aromatic_symbol().unwrap_or(a.element.symbol()) } else { a.element.symbol() };
    let h = mol.total_h(i);
    if bare_h(mol, i) == Some(h) {
        return sym.into();
    }
    let mut s = String::from("[");
    if let Some(iso) = a.isotope {
        let _ = write!(s, "{iso}");
    }
    s.push_str(sym);
    match h {
        0 => {}
        1 => s.push('H'),
        k => {
            let _ = write!(s, "H{k}");
        }
    }
    match a.charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => {
            let _ = write!(s, "+{c}");
        }
        c => {
            let _ = write!(s, "-{}", -c);
        }
    }
    s.push(']');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse::parse_smiles;

    fn io(s: &str) -> String {
        write_smiles(&parse_smiles(s).unwrap(), WriteMode::InputOrder, false).unwrap()
    }

    fn canon(s: &str) -> String {
        canonical_smiles(&parse_smiles(s).unwrap())
    }

    #[test]
    fn input_order_reproduces_simple_text() {
        for s in [
            "C",
            "CCO",
            "[1*]C1=CC=C([2*])C=C1",
            "[2*]C1=CC([3*])=NN1[5*]",
            "[3*]C([4*])(F)F",
            "[6*]S(N)(=O)=O",
            "C[N+](=O)[O-]",
            "c1cc[nH]c1",
            "C#N",
            "ClCBr",
        ] {
            assert_eq!(io(s), s);
        }
    }

    #[test]
    fn methane_canonical() {
        assert_eq!(canon("C"), "C");
        assert_eq!(canon("OC"), "CO");
    }

    #[test]
    fn benzene_kekule() {
        let m = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(write_smiles(&m, WriteMode::InputOrder, true).unwrap(), "C1=CC=CC=C1");
        assert_eq!(canon("c1ccccc1"), canon("C1=CC=CC=C1"));
    }

    #[test]
    fn kekule_forms_share_canonical_text() {
        assert_eq!(canon("Cc1ccccc1"), canon("CC1=CC=CC=C1"));
        assert_eq!(canon("CC1=CC=CC=C1"), canon("CC1C=CC=CC=1"));
        assert_eq!(canon("c1ccc2ccccc2c1"), canon("C1=CC2=CC=CC=C2C=C1"));
    }

    #[test]
    fn canonical_text_reparses() {
        for s in ["CC(=O)Oc1ccccc1C(=O)O", "C1CC2CCC1C2", "O=c1[nH]cc(F)c(=O)[nH]1", "C%12CC%12"] {
            let c = canon(s);
            assert_eq!(canon(&c), c, "{s}");
        }
    }
}
