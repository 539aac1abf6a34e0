use std::collections::BTreeMap;

use tsmiles::assemble::{assemble, decode, enumerate_assemblies, SelectionPolicy};
use tsmiles::chem::{canonical_smiles, parse_smiles, validate_valence, Molecule};
use tsmiles::codec::{encode, encode_amt, Dialect, Scheme};
use tsmiles::corpus::bundled_corpus;
use tsmiles::fragment::{CutRule, RootPolicy};

fn formula(m: &Molecule) -> BTreeMap<String, usize> {
    let mut f = BTreeMap::new();
    for i in 0..m.atom_count() {
        *f.entry(m.atom(i).element.symbol().to_string()).or_default() += 1;
        *f.entry("H".to_string()).or_default() += m.total_h(i) as usize;
    }
    f
}

fn corpus() -> Vec<Molecule> {
    bundled_corpus().iter().map(|s| parse_smiles(s).unwrap()).collect()
}

#[test]
fn tsid_text_round_trip() {
    let rule = CutRule::mmpa_lite();
    let mut failures = Vec::new();
    for m in corpus() {
        for dialect in [Dialect::Paper, Dialect::Strict] {
            let t = encode(&m, Scheme::Tsid, &rule, dialect, RootPolicy::CanonicalFirst).unwrap();
            match decode(&t, SelectionPolicy::Random(7), false) {
                Ok(out) if canonical_smiles(&out) == canonical_smiles(&m) => {}
                other => failures.push((t.text.clone(), format!("{other:?}"))),
            }
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn tssa_recorded_maps_round_trip() {
    let rule = CutRule::mmpa_lite();
    for m in corpus() {
        let amt = encode_amt(&m, Scheme::Tssa, &rule, RootPolicy::CanonicalFirst).unwrap();
        let (out, _) = assemble(&amt, Scheme::Tssa, SelectionPolicy::Random(1)).unwrap();
        assert_eq!(canonical_smiles(&out), canonical_smiles(&m));
    }
}

#[test]
fn decoded_outputs_are_valid_and_conserve_atoms() {
    let rule = CutRule::mmpa_lite();
    for (i, m) in corpus().into_iter().enumerate().step_by(3) {
        for scheme in [Scheme::Tsdy, Scheme::Tssa] {
            let t = encode(&m, scheme, &rule, Dialect::Paper, RootPolicy::CanonicalFirst).unwrap();
            let out =
                decode(&t, SelectionPolicy::Random(i as u64), false).unwrap_or_else(|e| panic!("{}: {e}", t.text));
            assert!(validate_valence(&out).ok, "{}", t.text);
            assert_eq!(formula(&out), formula(&m), "{}", t.text);
        }
    }
}

#[test]
fn tsdy_exhaustive_contains_source() {
    let rule = CutRule::mmpa_lite();
    let mut checked = 0;
    for m in corpus().into_iter().take(150) {
        let amt = encode_amt(&m, Scheme::Tsdy, &rule, RootPolicy::CanonicalFirst).unwrap();
        if amt.len() > 6 {
            continue;
        }
        let all = enumerate_assemblies(&amt, Scheme::Tsdy, usize::MAX);
        assert!(all.contains(&canonical_smiles(&m)), "{}", canonical_smiles(&m));
        checked += 1;
    }
    assert!(checked > 20);
}
