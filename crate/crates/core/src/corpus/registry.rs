use std::fmt;

/// Number of dialect classes.
pub const NUM_DIALECTS: usize = 23;

/// Full name, short code and sentence count in the source corpus, in
/// canonical class-index order.
const TABLE: [(&str, &str, u32); NUM_DIALECTS] = [
    ("Etelä-Häme", "EH", 1860),
    ("Etelä-Karjala", "EK", 813),
    ("Etelä-Pohjanmaa", "EP", 2684),
    ("Etelä-Satakunta", "ES", 848),
    ("Etelä-Savo", "ESa", 1744),
    ("Eteläinen Keski-Suomi", "EKS", 2168),
    ("Inkerinsuomalaismurteet", "IS", 4035),
    ("Kaakkois-Häme", "KH", 8026),
    ("Kainuu", "K", 3995),
    ("Keski-Karjala", "KK", 1640),
    ("Keski-Pohjanmaa", "KP", 900),
    ("Länsi-Satakunta", "LS", 1288),
    ("Länsi-Uusimaa", "LU", 1171),
    ("Länsipohja", "LP", 1026),
    ("Läntinen Keski-Suomi", "LKS", 857),
    ("Peräpohjola", "P", 1913),
    ("Pohjoinen Keski-Suomi", "PKS", 733),
    ("Pohjoinen Varsinais-Suomi", "PVS", 3885),
    ("Pohjois-Häme", "PH", 859),
    ("Pohjois-Karjala", "PK", 4292),
    ("Pohjois-Pohjanmaa", "PP", 1801),
    ("Pohjois-Satakunta", "PS", 2371),
    ("Pohjois-Savo", "PSa", 2344),
];

/// One of the 23 dialect regions. Cheap to copy; all instances come from the
/// static registry so equality is equality of class index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DialectLabel {
    index: u8,
}

impl DialectLabel {
    pub fn all() -> impl ExactSizeIterator<Item = DialectLabel> {
        (0..NUM_DIALECTS as u8).map(|index| DialectLabel { index })
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < NUM_DIALECTS).then_some(DialectLabel { index: index as u8 })
    }

    pub fn from_name(name: &str) -> Option<Self> {
        TABLE
            .iter()
            .position(|(n, _, _)| *n == name)
            .and_then(Self::from_index)
    }

    pub fn from_code(code: &str) -> Option<Self> {
        TABLE
            .iter()
            .position(|(_, c, _)| *c == code)
            .and_then(Self::from_index)
    }

    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn name(self) -> &'static str {
        TABLE[self.index()].0
    }

    pub fn code(self) -> &'static str {
        TABLE[self.index()].1
    }

    /// Sentence count of this dialect in the full source corpus (after the
    /// duration filter).
    pub fn reference_sentence_count(self) -> u32 {
        TABLE[self.index()].2
    }
}

impl fmt::Debug for DialectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DialectLabel({}, {})", self.index, self.code())
    }
}

impl fmt::Display for DialectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
