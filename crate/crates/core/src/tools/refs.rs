use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Session-unique handle `turn{m}search{n}` bound to one document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RefId {
    pub turn: u32,
    pub seq: u64,
}

impl fmt::Display for RefId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "turn{}search{}", self.turn, self.seq)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a reference id: {0:?}")]
pub struct ParseRefIdError(pub String);

impl FromStr for RefId {
    type Err = ParseRefIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRefIdError(s.to_owned());
        let rest = s.strip_prefix("turn").ok_or_else(err)?;
        let (turn, seq) = rest.split_once("search").ok_or_else(err)?;
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if !digits(turn) || !digits(seq) {
            return Err(err());
        }
        let turn: u32 = turn.parse().map_err(|_| err())?;
        let seq: u64 = seq.parse().map_err(|_| err())?;
        if turn == 0 || seq == 0 {
            return Err(err());
        }
        Ok(RefId { turn, seq })
    }
}

impl TryFrom<String> for RefId {
    type Error = ParseRefIdError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<RefId> for String {
    fn from(r: RefId) -> String {
        r.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefEntry {
    pub ref_id: RefId,
    pub doc_id: String,
    pub turn: u32,
    pub query: String,
}

/// Maps reference ids to documents for one session. The sequence counter is
/// global to the session and starts at 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceRegistry {
    entries: Vec<RefEntry>,
    by_id: HashMap<RefId, usize>,
    next_seq: u64,
    current_turn: u32,
}

impl Default for ReferenceRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl ReferenceRegistry {
    pub fn new() -> Self {
        ReferenceRegistry {
            entries: Vec::new(),
            by_id: HashMap::new(),
            next_seq: 1,
            current_turn: 1,
        }
    }

    pub fn current_turn(&self) -> u32 {
        self.current_turn
    }

    /// Advances to the next user turn. The sequence counter is untouched.
    pub fn begin_turn(&mut self) -> u32 {
        self.current_turn += 1;
        self.current_turn
    }

    pub fn set_turn(&mut self, turn: u32) {
        self.current_turn = turn.max(1);
    }

    pub fn allocate(&mut self, doc_id: &str, query: &str) -> RefId {
        let ref_id = RefId {
            turn: self.current_turn,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        self.by_id.insert(ref_id, self.entries.len());
        self.entries.push(RefEntry {
            ref_id,
            doc_id: doc_id.to_owned(),
            turn: self.current_turn,
            query: query.to_owned(),
        });
        ref_id
    }

    pub fn resolve(&self, ref_id: &RefId) -> Option<&RefEntry> {
        self.by_id.get(ref_id).map(|&i| &self.entries[i])
    }

    pub fn resolve_str(&self, s: &str) -> Option<&RefEntry> {
        s.trim().parse::<RefId>().ok().and_then(|r| self.resolve(&r))
    }

    pub fn contains(&self, ref_id: &RefId) -> bool {
        self.by_id.contains_key(ref_id)
    }

    /// Position in allocation order, used as a tie-breaker when ranking.
    pub fn allocation_index(&self, ref_id: &RefId) -> Option<usize> {
        self.by_id.get(ref_id).copied()
    }

    pub fn entries(&self) -> &[RefEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_and_formats() {
        let r: RefId = "turn2search14".parse().unwrap();
        assert_eq!(r, RefId { turn: 2, seq: 14 });
        assert_eq!(r.to_string(), "turn2search14");
        for bad in ["turn0search1", "turn1search0", "turn1search", "search1", "turn1search1x", "turn-1search2", "turn+1search2"] {
            assert!(bad.parse::<RefId>().is_err(), "{bad}");
        }
    }

    #[test]
    fn counter_spans_turns() {
        let mut reg = ReferenceRegistry::new();
        let a = reg.allocate("a", "q");
        let b = reg.allocate("b", "q");
        let c = reg.allocate("c", "q");
        assert_eq!([a, b, c].map(|r| r.to_string()), ["turn1search1", "turn1search2", "turn1search3"]);
        reg.begin_turn();
        let again = reg.allocate("a", "q2");
        assert_eq!(again.to_string(), "turn2search4");
        assert_eq!(reg.resolve(&a).unwrap().doc_id, "a");
        assert_eq!(reg.resolve(&again).unwrap().doc_id, "a");
        assert_eq!(reg.resolve_str("turn9search9"), None);
        assert_eq!(reg.allocation_index(&again), Some(3));
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(turn in 1u32..10_000, seq in 1u64..1_000_000) {
            let r = RefId { turn, seq };
            prop_assert_eq!(r.to_string().parse::<RefId>().unwrap(), r);
        }
    }
}
