use num_traits::Float;
use serde::Serialize;

use super::element::Element;
use super::mol::Molecule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Descriptors<T> {
    pub heavy_atom_count: usize,
    pub ring_count: usize,
    pub mol_weight: T,
}

/// Heavy atom count, cycle rank and average molecular weight (implicit and
/// explicit hydrogens included, dummy atoms weightless).
pub fn descriptors<T: Float>(mol: &Molecule) -> Descriptors<T> {
    let h_mass = T::from(Element::H.average_mass()).unwrap();
    let mut weight = T::zero();
    for i in 0..mol.atom_count() {
        let a = mol.atom(i);
        weight = weight + T::from(a.element.average_mass()).unwrap();
        weight = weight + h_mass * T::from(mol.total_h(i)).unwrap();
    }
    Descriptors { heavy_atom_count: mol.heavy_atom_count(), ring_count: mol.ring_count(), mol_weight: weight }
}
