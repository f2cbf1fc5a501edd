//! Periodic-table data: symbols, average atomic weights and default valences.

use std::fmt;

/// A chemical element, identified by atomic number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element(u8);

struct ElementData {
    symbol: &'static str,
    mass: f64,
    valences: &'static [u8],
}

macro_rules! el {
    ($sym:expr, $mass:expr) => {
        ElementData { symbol: $sym, mass: $mass, valences: &[] }
    };
    ($sym:expr, $mass:expr, $val:expr) => {
        ElementData { symbol: $sym, mass: $mass, valences: $val }
    };
}

// Index = atomic number. Valence lists cover the main-group elements; an empty
// list means the element has no fixed valence model (metals) and is accepted
// only with an explicit-valence override.
const TABLE: &[ElementData] = &[
    el!("*", 0.0),
    el!("H", 1.008, &[1]),
    el!("He", 4.003, &[0]),
    el!("Li", 6.941, &[1]),
    el!("Be", 9.012, &[2]),
    el!("B", 10.812, &[3]),
    el!("C", 12.011, &[4]),
    el!("N", 14.007, &[3]),
    el!("O", 15.999, &[2]),
    el!("F", 18.998, &[1]),
    el!("Ne", 20.18, &[0]),
    el!("Na", 22.99, &[1]),
    el!("Mg", 24.305, &[2]),
    el!("Al", 26.982, &[3]),
    el!("Si", 28.086, &[4]),
    el!("P", 30.974, &[3, 5]),
    el!("S", 32.067, &[2, 4, 6]),
    el!("Cl", 35.453, &[1]),
    el!("Ar", 39.948, &[0]),
    el!("K", 39.098, &[1]),
    el!("Ca", 40.078, &[2]),
    el!("Sc", 44.956),
    el!("Ti", 47.867),
    el!("V", 50.944),
    el!("Cr", 51.996),
    el!("Mn", 54.938),
    el!("Fe", 55.845),
    el!("Co", 58.933),
    el!("Ni", 58.693),
    el!("Cu", 63.546),
    el!("Zn", 65.39),
    el!("Ga", 69.723, &[3]),
    el!("Ge", 72.61, &[4]),
    el!("As", 74.922, &[3, 5]),
    el!("Se", 78.96, &[2, 4, 6]),
    el!("Br", 79.904, &[1]),
    el!("Kr", 83.8, &[0]),
    el!("Rb", 85.468, &[1]),
    el!("Sr", 87.62, &[2]),
    el!("Y", 88.906),
    el!("Zr", 91.224),
    el!("Nb", 92.906),
    el!("Mo", 95.94),
    el!("Tc", 98.0),
    el!("Ru", 101.07),
    el!("Rh", 102.906),
    el!("Pd", 106.42),
    el!("Ag", 107.868),
    el!("Cd", 112.412),
    el!("In", 114.818, &[3]),
    el!("Sn", 118.711, &[2, 4]),
    el!("Sb", 121.76, &[3, 5]),
    el!("Te", 127.6, &[2, 4, 6]),
    el!("I", 126.904, &[1, 3, 5]),
    el!("Xe", 131.29, &[0, 2, 4, 6]),
    el!("Cs", 132.905, &[1]),
    el!("Ba", 137.328, &[2]),
    el!("La", 138.906),
    el!("Ce", 140.116),
    el!("Pr", 140.908),
    el!("Nd", 144.24),
    el!("Pm", 145.0),
    el!("Sm", 150.36),
    el!("Eu", 151.964),
    el!("Gd", 157.25),
    el!("Tb", 158.925),
    el!("Dy", 162.5),
    el!("Ho", 164.93),
    el!("Er", 167.26),
    el!("Tm", 168.934),
    el!("Yb", 173.04),
    el!("Lu", 174.967),
    el!("Hf", 178.49),
    el!("Ta", 180.948),
    el!("W", 183.84),
    el!("Re", 186.207),
    el!("Os", 190.23),
    el!("Ir", 192.217),
    el!("Pt", 195.078),
    el!("Au", 196.967),
    el!("Hg", 200.59),
    el!("Tl", 204.383),
    el!("Pb", 207.2, &[2, 4]),
    el!("Bi", 208.98, &[3, 5]),
    el!("Po", 209.0, &[2, 4, 6]),
    el!("At", 210.0, &[1, 3, 5]),
    el!("Rn", 222.0, &[0]),
    el!("Fr", 223.0, &[1]),
    el!("Ra", 226.0, &[2]),
    el!("Ac", 227.0),
    el!("Th", 232.038),
    el!("Pa", 231.036),
    el!("U", 238.029),
    el!("Np", 237.0),
    el!("Pu", 244.0),
    el!("Am", 243.0),
    el!("Cm", 247.0),
    el!("Bk", 247.0),
    el!("Cf", 251.0),
    el!("Es", 252.0),
    el!("Fm", 257.0),
    el!("Md", 258.0),
    el!("No", 259.0),
    el!("Lr", 262.0),
    el!("Rf", 267.0),
    el!("Db", 268.0),
    el!("Sg", 269.0),
    el!("Bh", 270.0),
    el!("Hs", 269.0),
    el!("Mt", 278.0),
    el!("Ds", 281.0),
    el!("Rg", 281.0),
    el!("Cn", 285.0),
    el!("Nh", 284.0),
    el!("Fl", 289.0),
    el!("Mc", 288.0),
    el!("Lv", 293.0),
    el!("Ts", 292.0),
    el!("Og", 294.0),
];

/// Elements writable without brackets in SMILES.
const ORGANIC_SUBSET: &[u8] = &[5, 6, 7, 8, 9, 15, 16, 17, 35, 53];

impl Element {
    pub const H: Element = Element(1);
    pub const B: Element = Element(5);
    pub const C: Element = Element(6);
    pub const N: Element = Element(7);
    pub const O: Element = Element(8);
    pub const F: Element = Element(9);
    pub const SI: Element = Element(14);
    pub const P: Element = Element(15);
    pub const S: Element = Element(16);
    pub const CL: Element = Element(17);
    pub const SE: Element = Element(34);
    pub const BR: Element = Element(35);
    pub const I: Element = Element(53);

    pub fn from_atomic_number(z: u8) -> Option<Element> {
        (z >= 1 && (z as usize) < TABLE.len()).then_some(Element(z))
    }

    /// Looks up a case-sensitive element symbol ("Cl", not "CL").
    pub fn from_symbol(symbol: &str) -> Option<Element> {
        TABLE.iter().enumerate().skip(1).find(|(_, d)| d.symbol == symbol).map(|(z, _)| Element(z as u8))
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        TABLE[self.0 as usize].symbol
    }

    /// Standard (average) atomic weight in g/mol.
    pub fn mass(self) -> f64 {
        TABLE[self.0 as usize].mass
    }

    pub fn in_organic_subset(self) -> bool {
        ORGANIC_SUBSET.contains(&self.0)
    }

    /// May this element be written as a lowercase aromatic SMILES atom?
    pub fn can_be_aromatic(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 15 | 16 | 33 | 34 | 52)
    }

    /// Allowed total valences for this element carrying `charge`.
    ///
    /// Charged main-group atoms use the valences of their isoelectronic
    /// neighbour (N+ behaves like C, O- like F, Cl- like Ar). Returns `None`
    /// when no valence model applies.
    pub fn allowed_valences(self, charge: i8) -> Option<&'static [u8]> {
        let own = TABLE[self.0 as usize].valences;
        if own.is_empty() {
            return None;
        }
        if charge == 0 {
            return Some(own);
        }
        let shifted = self.0 as i16 - charge as i16;
        if shifted < 1 || shifted as usize >= TABLE.len() {
            return None;
        }
        let vals = TABLE[shifted as usize].valences;
        (!vals.is_empty()).then_some(vals)
    }

    /// Smallest allowed valence that is at least `used`, for uncharged atoms.
    pub fn default_valence_at_least(self, used: u8) -> Option<u8> {
        self.allowed_valences(0)?.iter().copied().find(|&v| v >= used)
    }
}

/// Monoisotopic masses for isotope-labelled atoms; falls back to the mass number.
pub fn isotope_mass(element: Element, isotope: u16) -> f64 {
    match (element.atomic_number(), isotope) {
        (1, 1) => 1.007825,
        (1, 2) => 2.014102,
        (1, 3) => 3.016049,
        (6, 12) => 12.0,
        (6, 13) => 13.003355,
        (6, 14) => 14.003242,
        (7, 14) => 14.003074,
        (7, 15) => 15.000109,
        (8, 16) => 15.994915,
        (8, 17) => 16.999132,
        (8, 18) => 17.99916,
        (9, 18) => 18.000938,
        (9, 19) => 18.998403,
        (15, 31) => 30.973762,
        (15, 32) => 31.973907,
        (16, 32) => 31.972071,
        (16, 34) => 33.967867,
        (16, 35) => 34.969032,
        (17, 35) => 34.968853,
        (17, 37) => 36.965903,
        (35, 79) => 78.918338,
        (35, 81) => 80.916291,
        (53, 123) => 122.905589,
        (53, 125) => 124.904630,
        (53, 127) => 126.904473,
        (53, 131) => 130.906125,
        _ => isotope as f64,
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}
