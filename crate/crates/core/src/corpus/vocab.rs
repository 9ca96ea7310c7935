use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Reserved entry for out-of-vocabulary items. Always id 0.
pub const UNK: &str = "<unk>";

/// Dense string vocabulary with occurrence counts. Ids follow first-insertion order.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "Vec<(String, u64)>", into = "Vec<(String, u64)>")]
pub struct Vocab {
    items: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl PartialEq for Vocab {
    fn eq(&self, other: &Self) -> bool {
        self.items == other.items && self.counts == other.counts
    }
}

impl Default for Vocab {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocab {
    pub fn new() -> Self {
        let mut v = Vocab { items: Vec::new(), counts: Vec::new(), index: HashMap::new() };
        v.reserve_entry(UNK);
        v
    }

    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut v = Vocab::new();
        for t in tokens {
            v.add(t);
        }
        v
    }

    /// Adds a zero-count entry (e.g. a mask symbol) if absent.
    pub fn reserve_entry(&mut self, item: &str) -> usize {
        if let Some(&i) = self.index.get(item) {
            return i;
        }
        self.items.push(item.to_string());
        self.counts.push(0);
        self.index.insert(item.to_string(), self.items.len() - 1);
        self.items.len() - 1
    }

    pub fn add(&mut self, item: &str) -> usize {
        let i = self.reserve_entry(item);
        self.counts[i] += 1;
        i
    }

    pub fn id(&self, item: &str) -> Option<usize> {
        self.index.get(item).copied()
    }

    pub fn id_or_unk(&self, item: &str) -> usize {
        self.id(item).unwrap_or(0)
    }

    pub fn item(&self, id: usize) -> &str {
        &self.items[id]
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.len() <= 1
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &str, u64)> {
        self.items.iter().zip(&self.counts).enumerate().map(|(i, (s, &c))| (i, s.as_str(), c))
    }

    /// Copy keeping only entries with count >= `min_count` (plus UNK and zero-count reserved entries).
    pub fn pruned(&self, min_count: u64) -> Vocab {
        let mut v = Vocab::new();
        for (_, s, c) in self.iter() {
            if c == 0 || c >= min_count {
                let i = v.reserve_entry(s);
                v.counts[i] += c;
            }
        }
        v
    }
}

impl From<Vec<(String, u64)>> for Vocab {
    fn from(entries: Vec<(String, u64)>) -> Self {
        let mut v = Vocab { items: Vec::new(), counts: Vec::new(), index: HashMap::new() };
        for (s, c) in entries {
            let i = v.reserve_entry(&s);
            v.counts[i] += c;
        }
        v.reserve_entry(UNK);
        v
    }
}

impl From<Vocab> for Vec<(String, u64)> {
    fn from(v: Vocab) -> Self {
        v.items.into_iter().zip(v.counts).collect()
    }
}
