use serde::Serialize;

use super::mol::Molecule;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValenceViolation {
    pub atom: usize,
    pub observed: u8,
    pub allowed: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValenceReport {
    pub ok: bool,
    pub violations: Vec<ValenceViolation>,
}

/// Checks every atom against the charge-adjusted valence table after
/// implicit hydrogens are filled in.
///
/// Aromatic atoms are checked as if each carried its pending double bond.
pub fn validate_valence(mol: &Molecule) -> ValenceReport {
    let mut violations = Vec::new();
    for i in 0..mol.atom_count() {
        let atom = mol.atom(i);
        let allowed = atom.element.allowed_valences(atom.charge);
        let mut observed = mol.bond_valence_sum(i) + mol.total_h(i);
        if mol.needs_pi(i) {
            observed += 1;
        }
        let fits =
            if atom.is_dummy() { mol.degree(i) == 1 && mol.total_h(i) == 0 } else { allowed.contains(&observed) };
        if !fits {
            violations.push(ValenceViolation { atom: i, observed, allowed });
        }
    }
    ValenceReport { ok: violations.is_empty(), violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::mol::{Atom, BondOrder};
    use crate::chem::parse::parse_smiles;
    use crate::chem::Element;

    #[test]
    fn methane_ok() {
        assert!(validate_valence(&parse_smiles("C").unwrap()).ok);
    }

    #[test]
    fn trivalent_oxygen_flagged() {
        let mut m = Molecule::new();
        let o = m.add_atom(Atom::new(Element::O));
        for _ in 0..3 {
            let c = m.add_atom(Atom::new(Element::C));
            m.add_bond(o, c, BondOrder::Single, false);
        }
        let r = validate_valence(&m);
        assert!(!r.ok);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].atom, o);
        assert_eq!(r.violations[0].observed, 3);
    }

    #[test]
    fn ammonium_is_tetravalent() {
        assert!(validate_valence(&parse_smiles("[NH4+]").unwrap()).ok);
        assert!(!validate_valence(&parse_smiles("[NH4]").unwrap()).ok);
    }

    #[test]
    fn dummy_needs_exactly_one_neighbor() {
        assert!(validate_valence(&parse_smiles("[1*]C").unwrap()).ok);
        assert!(validate_valence(&parse_smiles("C=*").unwrap()).ok);
        assert!(!validate_valence(&parse_smiles("[*H]C").unwrap()).ok);
        assert!(!validate_valence(&parse_smiles("C*C").unwrap()).ok);
    }

    #[test]
    fn pentavalent_carbon_flagged() {
        assert!(!validate_valence(&parse_smiles("C(C)(C)(C)(C)C").unwrap()).ok);
        assert!(validate_valence(&parse_smiles("c1ccncc1").unwrap()).ok);
        assert!(validate_valence(&parse_smiles("CS(=O)(=O)N").unwrap()).ok);
        assert!(validate_valence(&parse_smiles("C[N+](=O)[O-]").unwrap()).ok);
    }
}
