use std::collections::HashMap;

use proptest::prelude::*;

use tsmiles::amt::Amt;
use tsmiles::codec::{amt_to_fbt, dummy_arity, fbt_to_amt, parse_tsmiles, serialize, ArityHint, Dialect, ParseOptions};

fn tree_from_parents(parents: &[usize], label: impl Fn(usize, usize, bool) -> String) -> Amt<String> {
    // node i + 1 hangs under parents[i] % (i + 1)
    let n = parents.len() + 1;
    let par: Vec<usize> = parents.iter().enumerate().map(|(i, &p)| p % (i + 1)).collect();
    let mut kids = vec![0usize; n];
    for &p in &par {
        kids[p] += 1;
    }
    let mut t = Amt::new(label(0, kids[0], true));
    for (i, &p) in par.iter().enumerate() {
        let id = t.add_child(p, label(i + 1, kids[i + 1], false), None);
        assert_eq!(id, i + 1);
    }
    t
}

fn opaque(i: usize, _: usize, _: bool) -> String {
    format!("C{i}")
}

/// Dummy count equals child count (+1 for the parent unless root).
fn dummies(_: usize, children: usize, root: bool) -> String {
    let d = children + usize::from(!root);
    let mut s = "C".to_string();
    for _ in 0..d {
        s.push_str("(*)");
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn amt_fbt_round_trip(parents in prop::collection::vec(any::<usize>(), 0..20)) {
        let t = tree_from_parents(&parents, opaque);
        let fbt = amt_to_fbt(&t);
        prop_assert_eq!(fbt.empty_count(), fbt.frag_count() + 1);
        prop_assert_eq!(fbt.frag_count(), t.len());
        let back = fbt_to_amt(&fbt).unwrap();
        prop_assert!(back.same_shape(&t, |a, b| a == b));
    }

    #[test]
    fn strict_round_trip(parents in prop::collection::vec(any::<usize>(), 0..20)) {
        let fbt = amt_to_fbt(&tree_from_parents(&parents, opaque));
        let text = serialize(&fbt, Dialect::Strict, String::clone);
        let back = parse_tsmiles(&text, Dialect::Strict, ParseOptions::default()).unwrap();
        prop_assert!(back.same_shape(&fbt));
    }

    #[test]
    fn paper_round_trip_with_arity(parents in prop::collection::vec(any::<usize>(), 0..20)) {
        let fbt = amt_to_fbt(&tree_from_parents(&parents, dummies));
        let text = serialize(&fbt, Dialect::Paper, String::clone);
        let hint: ArityHint = &dummy_arity;
        let back = parse_tsmiles(&text, Dialect::Paper, ParseOptions { lenient: false, arity: Some(hint) }).unwrap();
        prop_assert!(back.same_shape(&fbt), "{}", text);
        let amps = text.matches('&').count();
        prop_assert!(amps >= back.empty_count());
    }
}

fn all_parent_vectors(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for i in 1..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..i).map(move |p| {
                    let mut w = v.clone();
                    w.push(p);
                    w
                })
            })
            .collect();
    }
    out
}

/// With identical opaque labels the paper dialect maps distinct trees to the
/// same text; the smallest such pair has five nodes.
#[test]
fn paper_dialect_is_ambiguous_without_arity() {
    let same = |_: usize, _: usize, _: bool| "C".to_string();
    for n in 1..=5 {
        let mut seen: HashMap<String, Amt<String>> = HashMap::new();
        let mut collisions = 0;
        for parents in all_parent_vectors(n) {
            let t = tree_from_parents(&parents, same);
            let text = serialize(&amt_to_fbt(&t), Dialect::Paper, String::clone);
            match seen.get(&text) {
                Some(other) if !other.same_shape(&t, |a, b| a == b) => collisions += 1,
                Some(_) => {}
                None => {
                    seen.insert(text, t);
                }
            }
        }
        assert_eq!(collisions > 0, n == 5, "n = {n}");
    }
}
