use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::hex::Deployment;
use super::MulticellError;
use crate::codec::CLUSTER_SLOTS;

/// `B(i, j)`: the cells of cluster `i` in slot `j`, keyed here as
/// `(slot, cluster)` with 1-based slots.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CodebookFile", into = "CodebookFile")]
pub struct Codebook {
    entries: BTreeMap<(u8, u16), Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct CodebookFile {
    entries: Vec<CodebookEntry>,
}

#[derive(Serialize, Deserialize)]
struct CodebookEntry {
    slot: u8,
    cluster: u16,
    cells: Vec<u32>,
}

impl TryFrom<CodebookFile> for Codebook {
    type Error = MulticellError;

    fn try_from(f: CodebookFile) -> Result<Self, Self::Error> {
        let mut entries = BTreeMap::new();
        for e in f.entries {
            if entries.insert((e.slot, e.cluster), e.cells).is_some() {
                return Err(MulticellError::Config(format!(
                    "duplicate codebook entry for slot {} cluster {}",
                    e.slot, e.cluster
                )));
            }
        }
        Codebook::new(entries)
    }
}

impl From<Codebook> for CodebookFile {
    fn from(c: Codebook) -> Self {
        CodebookFile {
            entries: c
                .entries
                .into_iter()
                .map(|((slot, cluster), cells)| CodebookEntry { slot, cluster, cells })
                .collect(),
        }
    }
}

const CANONICAL_VERSION: u8 = 1;

impl Codebook {
    /// Validates slots (1 to 6) and cluster sizes (1 to 3 distinct cells);
    /// member lists are stored sorted.
    pub fn new(entries: BTreeMap<(u8, u16), Vec<u32>>) -> Result<Self, MulticellError> {
        let mut out = BTreeMap::new();
        for ((slot, cluster), cells) in entries {
            if !(1..=CLUSTER_SLOTS as u8).contains(&slot) {
                return Err(MulticellError::Config(format!("slot {slot} outside 1..=6")));
            }
            let set: BTreeSet<u32> = cells.iter().copied().collect();
            if set.len() != cells.len() || set.is_empty() || set.len() > 3 {
                return Err(MulticellError::Config(format!(
                    "cluster {cluster} in slot {slot} must hold 1 to 3 distinct cells, got {cells:?}"
                )));
            }
            out.insert((slot, cluster), set.into_iter().collect());
        }
        Ok(Self { entries: out })
    }

    pub fn get(&self, slot: u8, cluster: u16) -> Option<&[u32]> {
        self.entries.get(&(slot, cluster)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((u8, u16), &[u32])> {
        self.entries.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn cells(&self) -> BTreeSet<u32> {
        self.entries.values().flatten().copied().collect()
    }

    /// Every member must be a cell of `dep`.
    pub fn check_against(&self, dep: &Deployment) -> Result<(), MulticellError> {
        let known: BTreeSet<u32> = dep.cells.iter().map(|c| c.id).collect();
        match self.cells().difference(&known).next() {
            Some(id) => Err(MulticellError::Config(format!("codebook names unknown cell {id}"))),
            None => Ok(()),
        }
    }

    /// Neighbour pairs of `dep` that share no cluster in any slot.
    pub fn uncovered_edges(&self, dep: &Deployment) -> Result<Vec<(u32, u32)>, MulticellError> {
        let mut covered = BTreeSet::new();
        for cells in self.entries.values() {
            for (i, &a) in cells.iter().enumerate() {
                for &b in &cells[i + 1..] {
                    covered.insert((a.min(b), a.max(b)));
                }
            }
        }
        Ok(dep
            .adjacent_pairs()?
            .into_iter()
            .filter(|p| !covered.contains(p))
            .collect())
    }

    /// Version byte, entry count (u32), then the entries row by row (cluster
    /// first, then slot): cluster (u16), slot (u8), member count (u8),
    /// sorted members (u32). Integers are big-endian.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = vec![CANONICAL_VERSION];
        out.extend_from_slice(&(self.entries.len() as u32).to_be_bytes());
        let mut rows: Vec<_> = self.entries.iter().collect();
        rows.sort_by_key(|(&(slot, cluster), _)| (cluster, slot));
        for (&(slot, cluster), cells) in rows {
            out.extend_from_slice(&cluster.to_be_bytes());
            out.push(slot);
            out.push(cells.len() as u8);
            for c in cells {
                out.extend_from_slice(&c.to_be_bytes());
            }
        }
        out
    }

    pub fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, MulticellError> {
        let bad = |what: &str| MulticellError::Config(format!("malformed codebook bytes: {what}"));
        let mut rest = bytes;
        let mut take = |n: usize| -> Result<&[u8], MulticellError> {
            if rest.len() < n {
                return Err(bad("truncated"));
            }
            let (head, tail) = rest.split_at(n);
            rest = tail;
            Ok(head)
        };
        if take(1)?[0] != CANONICAL_VERSION {
            return Err(bad("unknown version"));
        }
        let count = u32::from_be_bytes(take(4)?.try_into().unwrap());
        let mut entries = BTreeMap::new();
        let mut last = None;
        for _ in 0..count {
            let cluster = u16::from_be_bytes(take(2)?.try_into().unwrap());
            let slot = take(1)?[0];
            if last.is_some_and(|k| k >= (cluster, slot)) {
                return Err(bad("entries out of order"));
            }
            last = Some((cluster, slot));
            let n = take(1)?[0] as usize;
            if n > 3 {
                return Err(bad("cluster larger than 3"));
            }
            let mut cells = Vec::with_capacity(n);
            for _ in 0..n {
                cells.push(u32::from_be_bytes(take(4)?.try_into().unwrap()));
            }
            entries.insert((slot, cluster), cells);
        }
        if !rest.is_empty() {
            return Err(bad("trailing bytes"));
        }
        let cb = Self::new(entries)?;
        if cb.canonical_bytes() != bytes {
            return Err(bad("not in canonical form"));
        }
        Ok(cb)
    }

    pub fn sha256(&self) -> [u8; 32] {
        Sha256::digest(self.canonical_bytes()).into()
    }

    pub fn load_json(path: &Path) -> Result<Self, MulticellError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<(), MulticellError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multicell::{build_cluster_configurations, build_hex_deployment};

    fn plan_codebook(n: usize) -> (Deployment, Codebook) {
        let dep = build_hex_deployment(n, 50.0).unwrap();
        let cb = build_cluster_configurations(&dep).unwrap().codebook;
        (dep, cb)
    }

    #[test]
    fn every_edge_is_covered() {
        for n in [2, 3, 7, 19, 37, 100] {
            let (dep, cb) = plan_codebook(n);
            assert!(cb.uncovered_edges(&dep).unwrap().is_empty(), "{n} cells");
            cb.check_against(&dep).unwrap();
        }
    }

    #[test]
    fn canonical_roundtrip() {
        let (_, cb) = plan_codebook(100);
        let bytes = cb.canonical_bytes();
        assert_eq!(Codebook::from_canonical_bytes(&bytes).unwrap(), cb);
        assert!(Codebook::from_canonical_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Codebook::from_canonical_bytes(&extra).is_err());
    }

    #[test]
    fn json_roundtrip_and_checksum() {
        let (_, cb) = plan_codebook(19);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("codebook.json");
        cb.save_json(&path).unwrap();
        let back = Codebook::load_json(&path).unwrap();
        assert_eq!(back, cb);
        assert_eq!(back.sha256(), cb.sha256());
        let (_, other) = plan_codebook(7);
        assert_ne!(other.sha256(), cb.sha256());
    }

    #[test]
    fn rejects_bad_entries() {
        let e = |slot, cells: Vec<u32>| BTreeMap::from([((slot, 0u16), cells)]);
        assert!(Codebook::new(e(0, vec![1])).is_err());
        assert!(Codebook::new(e(7, vec![1])).is_err());
        assert!(Codebook::new(e(1, vec![])).is_err());
        assert!(Codebook::new(e(1, vec![1, 2, 3, 4])).is_err());
        assert!(Codebook::new(e(1, vec![1, 1])).is_err());
        assert!(Codebook::new(e(1, vec![3, 1, 2])).is_ok());
    }
}
