//! Parties, settings and measurement contexts.
//!
//! Setting `0` is written unprimed (`x`) and setting `1` primed (`x'`), so the
//! full context `(1, 0, 0)` prints as `x'yz`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
    C,
}

impl Party {
    pub const ALL: [Party; 3] = [Party::A, Party::B, Party::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Party {
        Party::ALL[index]
    }

    /// Setting symbol used in context labels.
    pub fn setting_symbol(self) -> char {
        ['x', 'y', 'z'][self.index()]
    }

    /// Response-function letter used in table headers (`u`, `v`, `w`).
    pub fn response_symbol(self) -> char {
        ['u', 'v', 'w'][self.index()]
    }

    pub fn letter(self) -> char {
        ['A', 'B', 'C'][self.index()]
    }

    pub fn parse(text: &str) -> Option<Party> {
        match text.trim() {
            "A" | "a" | "1" => Some(Party::A),
            "B" | "b" | "2" => Some(Party::B),
            "C" | "c" | "3" => Some(Party::C),
            _ => None,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Unordered pair of distinct parties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PartyPair {
    AB,
    BC,
    AC,
}

impl PartyPair {
    pub const ALL: [PartyPair; 3] = [PartyPair::AB, PartyPair::BC, PartyPair::AC];

    pub fn parties(self) -> (Party, Party) {
        match self {
            PartyPair::AB => (Party::A, Party::B),
            PartyPair::BC => (Party::B, Party::C),
            PartyPair::AC => (Party::A, Party::C),
        }
    }

    pub fn complement(self) -> Party {
        match self {
            PartyPair::AB => Party::C,
            PartyPair::BC => Party::A,
            PartyPair::AC => Party::B,
        }
    }

    pub fn of(first: Party, second: Party) -> Option<PartyPair> {
        match (first.min(second), first.max(second)) {
            (Party::A, Party::B) => Some(PartyPair::AB),
            (Party::B, Party::C) => Some(PartyPair::BC),
            (Party::A, Party::C) => Some(PartyPair::AC),
            _ => None,
        }
    }

    pub fn contains(self, party: Party) -> bool {
        let (p, q) = self.parties();
        p == party || q == party
    }

    pub fn parse(text: &str) -> Option<PartyPair> {
        match text.trim().to_ascii_uppercase().as_str() {
            "AB" | "BA" | "12" => Some(PartyPair::AB),
            "BC" | "CB" | "23" => Some(PartyPair::BC),
            "AC" | "CA" | "13" => Some(PartyPair::AC),
            _ => None,
        }
    }
}

impl fmt::Display for PartyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (p, q) = self.parties();
        write!(f, "{}{}", p, q)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ContextError {
    #[error("a context needs at least two specified settings")]
    TooFewSettings,
    #[error("setting {0} is not a bit")]
    NotABit(u8),
    #[error("cannot parse context label `{0}`")]
    BadLabel(String),
}

/// A measurement context: all three settings (full) or exactly two (pair).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Context {
    settings: [Option<u8>; 3],
}

impl Context {
    pub fn new(x: Option<u8>, y: Option<u8>, z: Option<u8>) -> Result<Context, ContextError> {
        let settings = [x, y, z];
        for s in settings.iter().flatten() {
            if *s > 1 {
                return Err(ContextError::NotABit(*s));
            }
        }
        if settings.iter().filter(|s| s.is_some()).count() < 2 {
            return Err(ContextError::TooFewSettings);
        }
        Ok(Context { settings })
    }

    /// Full context; panics if a setting is not a bit.
    pub fn full(x: u8, y: u8, z: u8) -> Context {
        Context::new(Some(x), Some(y), Some(z)).expect("settings are bits")
    }

    /// Pair context in which `absent` does not measure.
    pub fn pair(absent: Party, first: u8, second: u8) -> Context {
        let mut settings = [None; 3];
        let mut values = [first, second].into_iter();
        for party in Party::ALL {
            if party != absent {
                settings[party.index()] = values.next();
            }
        }
        Context::new(settings[0], settings[1], settings[2]).expect("settings are bits")
    }

    /// The eight full contexts, ordered by `4x + 2y + z`.
    pub fn all_full() -> [Context; 8] {
        std::array::from_fn(|i| Context::from_full_index(i))
    }

    pub fn from_full_index(index: usize) -> Context {
        assert!(index < 8, "full context index out of range");
        Context::full((index >> 2) as u8 & 1, (index >> 1) as u8 & 1, index as u8 & 1)
    }

    /// Index in [`Context::all_full`], for full contexts.
    pub fn full_index(&self) -> Option<usize> {
        match self.settings {
            [Some(x), Some(y), Some(z)] => Some(4 * x as usize + 2 * y as usize + z as usize),
            _ => None,
        }
    }

    pub fn setting(&self, party: Party) -> Option<u8> {
        self.settings[party.index()]
    }

    pub fn settings(&self) -> [Option<u8>; 3] {
        self.settings
    }

    pub fn is_full(&self) -> bool {
        self.settings.iter().all(Option::is_some)
    }

    pub fn is_pair(&self) -> bool {
        !self.is_full()
    }

    pub fn absent_party(&self) -> Option<Party> {
        Party::ALL
            .into_iter()
            .find(|p| self.settings[p.index()].is_none())
    }

    /// The two measuring parties of a pair context.
    pub fn present_pair(&self) -> Option<PartyPair> {
        self.absent_party().map(|absent| match absent {
            Party::A => PartyPair::BC,
            Party::B => PartyPair::AC,
            Party::C => PartyPair::AB,
        })
    }

    pub fn with_setting(&self, party: Party, setting: u8) -> Context {
        let mut settings = self.settings;
        settings[party.index()] = Some(setting);
        Context::new(settings[0], settings[1], settings[2]).expect("settings are bits")
    }

    /// Full contexts that agree with this one on every specified setting.
    pub fn extensions(&self) -> Vec<Context> {
        match self.absent_party() {
            None => vec![*self],
            Some(p) => vec![self.with_setting(p, 0), self.with_setting(p, 1)],
        }
    }

    /// Parties whose settings differ (both specified).
    pub fn differing_parties(&self, other: &Context) -> Vec<Party> {
        Party::ALL
            .into_iter()
            .filter(|p| {
                matches!((self.setting(*p), other.setting(*p)), (Some(a), Some(b)) if a != b)
            })
            .collect()
    }

    fn sort_key(&self) -> (u8, [u8; 3]) {
        let key = self.settings.map(|s| s.map_or(2, |v| v));
        (u8::from(self.is_pair()), key)
    }
}

impl Ord for Context {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Context {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for party in Party::ALL {
            if let Some(s) = self.setting(party) {
                write!(f, "{}", party.setting_symbol())?;
                if s == 1 {
                    write!(f, "'")?;
                }
            }
        }
        Ok(())
    }
}

impl FromStr for Context {
    type Err = ContextError;

    fn from_str(label: &str) -> Result<Self, Self::Err> {
        let bad = || ContextError::BadLabel(label.to_string());
        let mut settings: [Option<u8>; 3] = [None; 3];
        let mut last: Option<usize> = None;
        for ch in label.trim().chars() {
            match ch {
                'x' | 'y' | 'z' => {
                    let idx = (ch as u8 - b'x') as usize;
                    if settings[idx].is_some() || last.is_some_and(|l| l >= idx) {
                        return Err(bad());
                    }
                    settings[idx] = Some(0);
                    last = Some(idx);
                }
                '\'' | '′' => {
                    let idx = last.ok_or_else(bad)?;
                    if settings[idx] != Some(0) {
                        return Err(bad());
                    }
                    settings[idx] = Some(1);
                }
                _ => return Err(bad()),
            }
        }
        Context::new(settings[0], settings[1], settings[2]).map_err(|_| bad())
    }
}

impl Serialize for Context {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Context {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let label = String::deserialize(deserializer)?;
        label.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for ctx in Context::all_full() {
            let label = ctx.to_string();
            assert_eq!(label.parse::<Context>().unwrap(), ctx);
        }
        assert_eq!(Context::full(1, 0, 0).to_string(), "x'yz");
        assert_eq!(Context::full(1, 1, 1).to_string(), "x'y'z'");
        let yz = Context::pair(Party::A, 0, 1);
        assert_eq!(yz.to_string(), "yz'");
        assert_eq!("yz'".parse::<Context>().unwrap(), yz);
        assert_eq!("x′y".parse::<Context>().unwrap(), Context::pair(Party::C, 1, 0));
    }

    #[test]
    fn rejects_single_setting_and_bad_labels() {
        assert_eq!(
            Context::new(Some(0), None, None),
            Err(ContextError::TooFewSettings)
        );
        assert_eq!(Context::new(Some(2), Some(0), None), Err(ContextError::NotABit(2)));
        assert!("x".parse::<Context>().is_err());
        assert!("yx".parse::<Context>().is_err());
        assert!("x''y".parse::<Context>().is_err());
        assert!("xq".parse::<Context>().is_err());
    }

    #[test]
    fn full_index_matches_ordering() {
        let all = Context::all_full();
        for (i, ctx) in all.iter().enumerate() {
            assert_eq!(ctx.full_index(), Some(i));
        }
        let mut sorted = all.to_vec();
        sorted.push(Context::pair(Party::C, 0, 0));
        sorted.sort();
        assert_eq!(&sorted[..8], &all[..]);
        assert!(sorted[8].is_pair());
    }

    #[test]
    fn pair_context_structure() {
        let xz = Context::pair(Party::B, 0, 0);
        assert_eq!(xz.absent_party(), Some(Party::B));
        assert_eq!(xz.present_pair(), Some(PartyPair::AC));
        assert_eq!(
            xz.extensions(),
            vec![Context::full(0, 0, 0), Context::full(0, 1, 0)]
        );
        assert_eq!(
            Context::full(0, 0, 1).differing_parties(&Context::full(1, 0, 0)),
            vec![Party::A, Party::C]
        );
    }
}
