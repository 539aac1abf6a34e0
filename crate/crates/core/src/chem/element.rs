use std::fmt;

/// Elements understood by the parser. `Dummy` is the `*` attachment atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Dummy,
    H,
    B,
    C,
    N,
    O,
    F,
    P,
    S,
    Cl,
    Br,
    I,
}

impl Element {
    pub fn atomic_number(self) -> u8 {
        match self {
            Element::Dummy => 0,
            Element::H => 1,
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::Br => 35,
            Element::I => 53,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Element::Dummy => "*",
            Element::H => "H",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    pub fn from_symbol(sym: &str) -> Option<Element> {
        Some(match sym {
            "*" => Element::Dummy,
            "H" => Element::H,
            "B" => Element::B,
            "C" => Element::C,
            "N" => Element::N,
            "O" => Element::O,
            "F" => Element::F,
            "P" => Element::P,
            "S" => Element::S,
            "Cl" => Element::Cl,
            "Br" => Element::Br,
            "I" => Element::I,
            _ => return None,
        })
    }

    /// Lowercase aromatic symbol, for the elements that have one.
    pub fn aromatic_symbol(self) -> Option<&'static str> {
        match self {
            Element::B => Some("b"),
            Element::C => Some("c"),
            Element::N => Some("n"),
            Element::O => Some("o"),
            Element::P => Some("p"),
            Element::S => Some("s"),
            _ => None,
        }
    }

    pub fn from_aromatic_symbol(sym: &str) -> Option<Element> {
        Some(match sym {
            "b" => Element::B,
            "c" => Element::C,
            "n" => Element::N,
            "o" => Element::O,
            "p" => Element::P,
            "s" => Element::S,
            _ => return None,
        })
    }

    /// Bare (unbracketed) SMILES atoms.
    pub fn is_organic_subset(self) -> bool {
        !matches!(self, Element::H)
    }

    /// Uncharged allowed valences, ascending.
    pub fn base_valences(self) -> &'static [u8] {
        match self {
            Element::Dummy => &[1],
            Element::H => &[1],
            Element::B => &[3],
            Element::C => &[4],
            Element::N => &[3, 5],
            Element::O => &[2],
            Element::P => &[3, 5],
            Element::S => &[2, 4, 6],
            Element::F | Element::Cl | Element::Br | Element::I => &[1],
        }
    }

    /// Allowed valences after applying a formal charge.
    ///
    /// Carbon loses one valence per unit of charge either way; boron gains
    /// one per unit of negative charge; everything else shifts with the sign.
    pub fn allowed_valences(self, charge: i8) -> Vec<u8> {
        let shifted = |v: u8, delta: i16| -> Option<u8> {
            let x = v as i16 + delta;
            (x >= 0).then_some(x as u8)
        };
        let c = charge as i16;
        let mut out: Vec<u8> = match self {
            Element::Dummy => vec![1],
            Element::C => self.base_valences().iter().filter_map(|&v| shifted(v, -c.abs())).collect(),
            Element::B => self.base_valences().iter().filter_map(|&v| shifted(v, -c)).collect(),
            _ => self.base_valences().iter().filter_map(|&v| shifted(v, c)).collect(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Standard average atomic mass in daltons.
    pub fn average_mass(self) -> f64 {
        match self {
            Element::Dummy => 0.0,
            Element::H => 1.008,
            Element::B => 10.81,
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::F => 18.998,
            Element::P => 30.974,
            Element::S => 32.06,
            Element::Cl => 35.45,
            Element::Br => 79.904,
            Element::I => 126.904,
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}
