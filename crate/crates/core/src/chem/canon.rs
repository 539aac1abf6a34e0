use super::kekule::{flippable_bonds, kekulize, perfect_matching, KekulizeError};
use super::mol::{BondOrder, Molecule};

/// Bond classes seen by the ranking. Bonds whose order differs between
/// Kekulé structures collapse into one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum BondClass {
    Single,
    Double,
    Triple,
    Resonant,
}

type Invariant = (u8, i8, usize, u8, bool, Option<u16>, Option<u32>);

pub(crate) struct CanonicalForm {
    pub mol: Molecule,
    pub ranks: Vec<usize>,
}

fn bond_classes(mol: &Molecule, resonant: &[bool]) -> Vec<BondClass> {
    mol.bonds()
        .iter()
        .zip(resonant)
        .map(|(b, &r)| {
            if r || b.aromatic {
                BondClass::Resonant
            } else {
                match b.order {
                    BondOrder::Single => BondClass::Single,
                    BondOrder::Double => BondClass::Double,
                    BondOrder::Triple => BondClass::Triple,
                }
            }
        })
        .collect()
}

fn dense_ranks<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(k).unwrap()).collect()
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().copied().max().map_or(0, |m| m + 1)
}

fn refine(mol: &Molecule, classes: &[BondClass], mut ranks: Vec<usize>) -> Vec<usize> {
    loop {
        let keys: Vec<(usize, Vec<(usize, BondClass)>)> = (0..mol.atom_count())
            .map(|i| {
                let mut nb: Vec<(usize, BondClass)> =
                    mol.neighbors(i).iter().map(|&(v, b)| (ranks[v], classes[b])).collect();
                nb.sort();
                (ranks[i], nb)
            })
            .collect();
        let next = dense_ranks(&keys);
        if class_count(&next) == class_count(&ranks) {
            return next;
        }
        ranks = next;
    }
}

fn rank_with_classes(mol: &Molecule, classes: &[BondClass], resonant_atom: &[bool]) -> Vec<usize> {
    let n = mol.atom_count();
    let inv: Vec<Invariant> = (0..n)
        .map(|i| {
            let a = mol.atom(i);
            (
                a.element.atomic_number(),
                a.charge,
                mol.degree(i),
                mol.total_h(i),
                a.aromatic || resonant_atom[i],
                a.isotope,
                a.attach_id,
            )
        })
        .collect();
    let mut ranks = refine(mol, classes, dense_ranks(&inv));
    while class_count(&ranks) < n {
        // lowest tied class; keep its smallest index in place, push the rest up
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r] += 1;
        }
        let tied = (0..n).find(|&r| counts[r] > 1).unwrap();
        let pick = (0..n).find(|&i| ranks[i] == tied).unwrap();
        let split: Vec<usize> = (0..n).map(|i| 2 * ranks[i] + usize::from(ranks[i] == tied && i != pick)).collect();
        ranks = refine(mol, classes, dense_ranks(&split));
    }
    ranks
}

/// Canonical atom ranking: `ranks[i]` is the position of atom `i`.
///
/// Iterated neighborhood refinement over the invariant (element, charge,
/// degree, hydrogens, aromatic, isotope, attachment id); remaining ties are
/// broken at the smallest index and refined again.
pub fn canonical_rank(mol: &Molecule) -> Vec<usize> {
    let resonant = match kekulize(mol) {
        Ok(k) => flippable_bonds(&k),
        Err(_) => mol.bonds().iter().map(|b| b.aromatic).collect(),
    };
    let classes = bond_classes(mol, &resonant);
    let resonant_atom = resonant_atoms(mol, &resonant);
    rank_with_classes(mol, &classes, &resonant_atom)
}

fn resonant_atoms(mol: &Molecule, resonant: &[bool]) -> Vec<bool> {
    let mut out = vec![false; mol.atom_count()];
    for (b, &r) in mol.bonds().iter().zip(resonant) {
        if r {
            out[b.a] = true;
            out[b.b] = true;
        }
    }
    out
}

/// Kekulé-normalized molecule plus its canonical ranking. The Kekulé
/// structure itself is chosen from the ranking so the written text does
/// not depend on which structure the input used.
pub(crate) fn canonical_form(mol: &Molecule, require_kekule: bool) -> Result<CanonicalForm, KekulizeError> {
    let kek = match kekulize(mol) {
        Ok(k) => k,
        Err(e) if require_kekule => return Err(e),
        Err(_) => {
            let ranks = canonical_rank(mol);
            return Ok(CanonicalForm { mol: mol.clone(), ranks });
        }
    };
    let resonant = flippable_bonds(&kek);
    let classes = bond_classes(&kek, &resonant);
    let resonant_atom = resonant_atoms(&kek, &resonant);
    let ranks = rank_with_classes(&kek, &classes, &resonant_atom);
    let n = kek.atom_count();
    let mut adj = vec![Vec::new(); n];
    for (b, &r) in kek.bonds().iter().zip(&resonant) {
        if r {
            adj[b.a].push(b.b);
            adj[b.b].push(b.a);
        }
    }
    let mate = perfect_matching(&adj, &resonant_atom, &ranks)
        .expect("resonant subgraph of a Kekulé structure has a perfect matching");
    let mut out = kek;
    for bi in 0..out.bond_count() {
        if resonant[bi] {
            let (a, b) = (out.bond(bi).a, out.bond(bi).b);
            out.bond_mut(bi).order = if mate[a] == Some(b) { BondOrder::Double } else { BondOrder::Single };
        }
    }
    Ok(CanonicalForm { mol: out, ranks })
}
