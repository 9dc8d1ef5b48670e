/// The twenty canonical amino-acid letters, in index order.
pub const CANONICAL: &str = "ACDEFGHIKLMNPQRSTVWY";

/// Printable stand-in for the padding symbol (never part of a residue string).
pub const PAD_CHAR: char = '_';

/// Letters that mark a sequence as non-standard.
pub const NON_STANDARD: &str = "UJZOBX";

/// Canonical residues plus a trailing PAD symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<char>,
    lookup: [Option<u8>; 128],
}

impl Default for Alphabet {
    fn default() -> Self {
        Self::protein()
    }
}

impl Alphabet {
    pub fn protein() -> Self {
        let mut symbols: Vec<char> = CANONICAL.chars().collect();
        symbols.push(PAD_CHAR);
        let mut lookup = [None; 128];
        for (i, c) in symbols.iter().enumerate() {
            lookup[*c as usize] = Some(i as u8);
        }
        Alphabet { symbols, lookup }
    }

    /// Number of symbols including PAD.
    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn pad_index(&self) -> usize {
        self.symbols.len() - 1
    }

    pub fn index(&self, c: char) -> Option<usize> {
        let i = c as usize;
        if i < 128 {
            self.lookup[i].map(usize::from)
        } else {
            None
        }
    }

    /// Index of a residue letter; PAD is not a residue.
    pub fn residue_index(&self, c: char) -> Option<usize> {
        self.index(c).filter(|&i| i != self.pad_index())
    }

    pub fn symbol(&self, i: usize) -> char {
        self.symbols[i]
    }

    pub fn canonical(&self) -> &[char] {
        &self.symbols[..self.pad_index()]
    }
}
