use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tsmiles::chem::{
    canonical_smiles, kekulize, parse_smiles, validate_valence, write_smiles, BondOrder, Molecule, WriteMode,
};
use tsmiles::corpus::bundled_corpus;

fn permuted(m: &Molecule, rng: &mut ChaCha8Rng) -> Molecule {
    let mut order: Vec<usize> = (0..m.atom_count()).collect();
    order.shuffle(rng);
    let p = m.reordered(&order);
    let mut bonds: Vec<usize> = (0..p.bond_count()).collect();
    bonds.shuffle(rng);
    p.with_bond_order(&bonds)
}

#[test]
fn corpus_parses_and_validates() {
    for s in bundled_corpus() {
        let m = parse_smiles(s).unwrap_or_else(|e| panic!("{s}: {e}"));
        let r = validate_valence(&m);
        assert!(r.ok, "{s}: {:?}", r.violations);
        let k = kekulize(&m).unwrap_or_else(|e| panic!("{s}: {e}"));
        assert!(validate_valence(&k).ok, "{s}");
    }
}

#[test]
fn canonical_round_trip() {
    for s in bundled_corpus() {
        let m = parse_smiles(s).unwrap();
        let c = canonical_smiles(&m);
        let again = canonical_smiles(&parse_smiles(&c).unwrap());
        assert_eq!(c, again, "{s}");
        let io = write_smiles(&m, WriteMode::InputOrder, false).unwrap();
        assert_eq!(canonical_smiles(&parse_smiles(&io).unwrap()), c, "{s}");
        let kek = write_smiles(&m, WriteMode::InputOrder, true).unwrap();
        assert_eq!(canonical_smiles(&parse_smiles(&kek).unwrap()), c, "{s}");
    }
}

#[test]
fn canonical_invariant_under_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for s in bundled_corpus().iter().step_by(7) {
        let m = parse_smiles(s).unwrap();
        let c = canonical_smiles(&m);
        for _ in 0..10 {
            assert_eq!(canonical_smiles(&permuted(&m, &mut rng)), c, "{s}");
        }
    }
}

/// Every aromatic system of at most 7 bonds: the kekulizer's answer must be
/// one of the assignments found by enumerating all single/double choices.
#[test]
fn kekulization_matches_enumeration_on_small_systems() {
    let mut checked = 0;
    for s in bundled_corpus() {
        let m = parse_smiles(s).unwrap();
        let aro: Vec<usize> = (0..m.bond_count()).filter(|&i| m.bond(i).aromatic).collect();
        if aro.is_empty() || aro.len() > 7 {
            continue;
        }
        let k = kekulize(&m).unwrap();
        let mut admissible = Vec::new();
        for mask in 0u32..(1 << aro.len()) {
            let mut t = m.clone();
            for (j, &bi) in aro.iter().enumerate() {
                let b = t.bond_mut(bi);
                b.aromatic = false;
                b.order = if mask & (1 << j) != 0 { BondOrder::Double } else { BondOrder::Single };
            }
            // hydrogen counts must not change
            let same_h = (0..m.atom_count()).all(|i| {
                let before = m.total_h(i);
                let mut u = t.clone();
                u.atom_mut(i).aromatic = false;
                let after = u.atom(i).explicit_h + if u.atom(i).bracket { 0 } else { u.implicit_h(i) };
                before == after
            });
            for i in 0..t.atom_count() {
                t.atom_mut(i).aromatic = false;
            }
            if same_h && validate_valence(&t).ok {
                admissible.push(t);
            }
        }
        assert!(!admissible.is_empty(), "{s}");
        let orders: Vec<BondOrder> = aro.iter().map(|&bi| k.bond(bi).order).collect();
        assert!(admissible.iter().any(|t| aro.iter().zip(&orders).all(|(&bi, &o)| t.bond(bi).order == o)), "{s}");
        checked += 1;
    }
    assert!(checked > 20, "only {checked} small aromatic systems");
}
