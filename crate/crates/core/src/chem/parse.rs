use std::collections::BTreeMap;

use thiserror::Error;

use super::element::Element;
use super::mol::{Atom, BondOrder, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("empty SMILES")]
    Empty,
    #[error("unmatched ring closure {label} opened at byte {offset}")]
    UnbalancedRing { label: u32, offset: usize },
    #[error("unbalanced parenthesis at byte {offset}")]
    UnbalancedParen { offset: usize },
    #[error("unknown token {token:?} at byte {offset}")]
    UnknownToken { token: String, offset: usize },
    #[error("stereochemistry is not supported (byte {offset})")]
    StereoUnsupported { offset: usize },
    #[error("multi-component SMILES is not supported (byte {offset})")]
    MultiComponentUnsupported { offset: usize },
    #[error("bond at byte {offset} is invalid: {reason}")]
    BadBond { offset: usize, reason: &'static str },
    #[error("aromatic atom outside any ring at byte {offset}")]
    AromaticOutsideRing { offset: usize },
}

impl SmilesError {
    pub fn code(&self) -> &'static str {
        match self {
            SmilesError::Empty => "Empty",
            SmilesError::UnbalancedRing { .. } => "UnbalancedRing",
            SmilesError::UnbalancedParen { .. } => "UnbalancedParen",
            SmilesError::UnknownToken { .. } => "UnknownToken",
            SmilesError::StereoUnsupported { .. } => "StereoUnsupported",
            SmilesError::MultiComponentUnsupported { .. } => "MultiComponentUnsupported",
            SmilesError::BadBond { .. } => "BadBond",
            SmilesError::AromaticOutsideRing { .. } => "AromaticOutsideRing",
        }
    }

    pub fn offset(&self) -> Option<usize> {
        match *self {
            SmilesError::Empty => None,
            SmilesError::UnbalancedRing { offset, .. }
            | SmilesError::UnbalancedParen { offset }
            | SmilesError::UnknownToken { offset, .. }
            | SmilesError::StereoUnsupported { offset }
            | SmilesError::MultiComponentUnsupported { offset }
            | SmilesError::BadBond { offset, .. }
            | SmilesError::AromaticOutsideRing { offset } => Some(offset),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSym {
    Single,
    Double,
    Triple,
    Aromatic,
}

struct OpenRing {
    atom: usize,
    sym: Option<BondSym>,
    offset: usize,
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    mol: Molecule,
    atom_offsets: Vec<usize>,
    prev: Option<usize>,
    branches: Vec<(usize, usize)>,
    pending: Option<(BondSym, usize)>,
    rings: BTreeMap<u32, OpenRing>,
}

/// Parses the supported SMILES subset into a [`Molecule`].
pub fn parse_smiles(text: &str) -> Result<Molecule, SmilesError> {
    if text.is_empty() {
        return Err(SmilesError::Empty);
    }
    let mut p = Parser {
        s: text.as_bytes(),
        pos: 0,
        mol: Molecule::new(),
        atom_offsets: Vec::new(),
        prev: None,
        branches: Vec::new(),
        pending: None,
        rings: BTreeMap::new(),
    };
    p.run()?;
    p.finish()
}

impl Parser<'_> {
    fn unknown(&self, at: usize, len: usize) -> SmilesError {
        let end = (at + len).min(self.s.len());
        SmilesError::UnknownToken { token: String::from_utf8_lossy(&self.s[at..end]).into_owned(), offset: at }
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        while self.pos < self.s.len() {
            let at = self.pos;
            let c = self.s[at];
            match c {
                b'(' => {
                    let Some(prev) = self.prev else {
                        return Err(SmilesError::UnbalancedParen { offset: at });
                    };
                    if self.pending.is_some() {
                        return Err(SmilesError::BadBond { offset: at, reason: "bond before branch" });
                    }
                    self.branches.push((prev, at));
                    self.pos += 1;
                }
                b')' => {
                    let Some((atom, _)) = self.branches.pop() else {
                        return Err(SmilesError::UnbalancedParen { offset: at });
                    };
                    if self.pending.is_some() {
                        return Err(SmilesError::BadBond { offset: at, reason: "dangling bond" });
                    }
                    self.prev = Some(atom);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' => {
                    if self.pending.is_some() || self.prev.is_none() {
                        return Err(SmilesError::BadBond { offset: at, reason: "misplaced bond symbol" });
                    }
                    let sym = match c {
                        b'-' => BondSym::Single,
                        b'=' => BondSym::Double,
                        b'#' => BondSym::Triple,
                        _ => BondSym::Aromatic,
                    };
                    self.pending = Some((sym, at));
                    self.pos += 1;
                }
                b'/' | b'\\' => return Err(SmilesError::StereoUnsupported { offset: at }),
                b'.' => return Err(SmilesError::MultiComponentUnsupported { offset: at }),
                b'0'..=b'9' => {
                    self.pos += 1;
                    self.ring((c - b'0') as u32, at)?;
                }
                b'%' => {
                    let d = self.s.get(at + 1..at + 3).filter(|d| d.iter().all(u8::is_ascii_digit));
                    let Some(d) = d else {
                        return Err(self.unknown(at, 3));
                    };
                    let label = ((d[0] - b'0') * 10 + (d[1] - b'0')) as u32;
                    self.pos += 3;
                    self.ring(label, at)?;
                }
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.place(atom, at)?;
                }
                _ => {
                    let (atom, len) = self.organic_atom(at)?;
                    self.pos += len;
                    self.place(atom, at)?;
                }
            }
        }
        Ok(())
    }

    fn organic_atom(&self, at: usize) -> Result<(Atom, usize), SmilesError> {
        let two = self.s.get(at..at + 2).map(|b| String::from_utf8_lossy(b).into_owned());
        if let Some(t) = two.as_deref() {
            if t == "Cl" || t == "Br" {
                return Ok((Atom::new(Element::from_symbol(t).unwrap()), 2));
            }
        }
        let one = &self.s[at..at + 1];
        let sym = std::str::from_utf8(one).map_err(|_| self.unknown(at, 1))?;
        if let Some(e) = Element::from_symbol(sym).filter(|e| e.is_organic_subset()) {
            return Ok((Atom::new(e), 1));
        }
        if let Some(e) = Element::from_aromatic_symbol(sym) {
            let mut a = Atom::new(e);
            a.aromatic = true;
            return Ok((a, 1));
        }
        Err(self.unknown(at, 1))
    }

    fn read_number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        (self.pos > start).then(|| std::str::from_utf8(&self.s[start..self.pos]).unwrap().parse().unwrap_or(u32::MAX))
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        self.pos += 1;
        let isotope = self.read_number();
        let at = self.pos;
        let rest = &self.s[at..];
        let (mut atom, len) = if rest.first() == Some(&b'*') {
            (Atom::new(Element::Dummy), 1)
        } else if rest.len() >= 2
            && rest[0].is_ascii_uppercase()
            && rest[1].is_ascii_lowercase()
            && Element::from_symbol(std::str::from_utf8(&rest[..2]).unwrap()).is_some()
        {
            (Atom::new(Element::from_symbol(std::str::from_utf8(&rest[..2]).unwrap()).unwrap()), 2)
        } else if let Some(e) = rest.first().and_then(|c| Element::from_symbol(std::str::from_utf8(&[*c]).ok()?)) {
            (Atom::new(e), 1)
        } else if let Some(e) =
            rest.first().and_then(|c| Element::from_aromatic_symbol(std::str::from_utf8(&[*c]).ok()?))
        {
            let mut a = Atom::new(e);
            a.aromatic = true;
            (a, 1)
        } else {
            return Err(self.unknown(at, 1));
        };
        self.pos += len;
        atom.bracket = true;
        if self.s.get(self.pos) == Some(&b'@') {
            return Err(SmilesError::StereoUnsupported { offset: self.pos });
        }
        if self.s.get(self.pos) == Some(&b'H') {
            self.pos += 1;
            atom.explicit_h = self.read_number().map_or(1, |n| n.min(9) as u8);
        }
        while let Some(&c) = self.s.get(self.pos) {
            if c != b'+' && c != b'-' {
                break;
            }
            self.pos += 1;
            let sign: i8 = if c == b'+' { 1 } else { -1 };
            let mag = match self.read_number() {
                Some(n) => n.min(8) as i8,
                None => 1,
            };
            atom.charge = atom.charge.saturating_add(sign * mag);
        }
        let mut class = None;
        if self.s.get(self.pos) == Some(&b':') {
            self.pos += 1;
            class = self.read_number();
        }
        if self.s.get(self.pos) != Some(&b']') {
            return Err(self.unknown(open, self.pos + 1 - open));
        }
        self.pos += 1;
        if atom.is_dummy() {
            atom.attach_id = isotope.or(class).filter(|&n| n > 0);
        } else {
            atom.isotope = isotope.map(|n| n.min(u16::MAX as u32) as u16);
        }
        Ok(atom)
    }

    fn bond_from(&self, sym: Option<BondSym>, a: usize, b: usize) -> (BondOrder, bool) {
        match sym {
            Some(BondSym::Single) => (BondOrder::Single, false),
            Some(BondSym::Double) => (BondOrder::Double, false),
            Some(BondSym::Triple) => (BondOrder::Triple, false),
            Some(BondSym::Aromatic) => (BondOrder::Single, true),
            None => {
                let aro = self.mol.atom(a).aromatic && self.mol.atom(b).aromatic;
                (BondOrder::Single, aro)
            }
        }
    }

    fn place(&mut self, atom: Atom, at: usize) -> Result<(), SmilesError> {
        let idx = self.mol.add_atom(atom);
        self.atom_offsets.push(at);
        if let Some(prev) = self.prev {
            let sym = self.pending.take().map(|(s, _)| s);
            let (order, aro) = self.bond_from(sym, prev, idx);
            self.mol.add_bond(prev, idx, order, aro);
        } else if let Some((_, off)) = self.pending {
            return Err(SmilesError::BadBond { offset: off, reason: "bond without preceding atom" });
        } else if idx > 0 {
            return Err(SmilesError::MultiComponentUnsupported { offset: at });
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn ring(&mut self, label: u32, at: usize) -> Result<(), SmilesError> {
        let Some(cur) = self.prev else {
            return Err(SmilesError::UnbalancedRing { label, offset: at });
        };
        let sym = self.pending.take().map(|(s, _)| s);
        match self.rings.remove(&label) {
            None => {
                self.rings.insert(label, OpenRing { atom: cur, sym, offset: at });
            }
            Some(open) => {
                let s = match (open.sym, sym) {
                    (Some(x), Some(y)) if x != y => {
                        return Err(SmilesError::BadBond { offset: at, reason: "conflicting ring bond symbols" })
                    }
                    (x, y) => x.or(y),
                };
                if open.atom == cur || self.mol.bond_between(open.atom, cur).is_some() {
                    return Err(SmilesError::BadBond { offset: at, reason: "ring closure duplicates a bond" });
                }
                let (order, aro) = self.bond_from(s, open.atom, cur);
                self.mol.add_bond(open.atom, cur, order, aro);
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Molecule, SmilesError> {
        if let Some((&label, open)) = self.rings.iter().next() {
            return Err(SmilesError::UnbalancedRing { label, offset: open.offset });
        }
        if let Some(&(_, off)) = self.branches.last() {
            return Err(SmilesError::UnbalancedParen { offset: off });
        }
        if let Some((_, off)) = self.pending {
            return Err(SmilesError::BadBond { offset: off, reason: "dangling bond" });
        }
        if self.mol.is_empty() {
            return Err(SmilesError::Empty);
        }
        // an implicit bond between two aromatic atoms of different rings is a plain single bond
        let ring = self.mol.ring_bonds();
        for (i, r) in ring.iter().enumerate() {
            if !r && self.mol.bond(i).aromatic {
                self.mol.bond_mut(i).aromatic = false;
            }
        }
        let ring_atoms = self.mol.ring_atoms();
        for (i, a) in self.mol.atoms().iter().enumerate() {
            if a.aromatic && !ring_atoms[i] {
                return Err(SmilesError::AromaticOutsideRing { offset: self.atom_offsets[i] });
            }
        }
        Ok(self.mol)
    }
}
