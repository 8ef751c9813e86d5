//! The temporal prefix index: one path-compressed binary trie per address
//! family whose nodes carry date-ranged origin attributions.
//!
//! The index is built by replaying daily prefix-to-AS snapshots in date
//! order through a [`TrieBuilder`], then sealed into an immutable
//! [`TemporalTrie`] with [`TrieBuilder::finalize`].

use ipnet::IpNet;
use serde::{Deserialize, Serialize};

use crate::asn::Origins;
use crate::day::Day;
use crate::error::BuildError;
use crate::ingest::Pfx2AsLine;
use crate::prefix::{key_of, net_from_key, Family};

const NIL: u32 = u32::MAX;

/// A maximal run of days during which a prefix was announced by a fixed
/// origin set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributionEpoch {
    pub first_seen: Day,
    /// `None` once sealed if the prefix is still visible in the newest snapshot.
    pub last_seen: Option<Day>,
    pub origins: Origins,
}

impl AttributionEpoch {
    pub fn covers(&self, day: Day) -> bool {
        self.first_seen <= day && self.last_seen.is_none_or(|last| day <= last)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixRecord {
    pub prefix: IpNet,
    /// Sorted by `first_seen`, non-overlapping.
    pub epochs: Vec<AttributionEpoch>,
    /// Set for statically seeded special-use blocks, which never carry epochs.
    pub reserved_label: Option<String>,
}

impl PrefixRecord {
    pub fn epoch_at(&self, day: Day) -> Option<&AttributionEpoch> {
        let idx = self.epochs.partition_point(|e| e.first_seen <= day);
        idx.checked_sub(1)
            .map(|i| &self.epochs[i])
            .filter(|e| e.covers(day))
    }

    /// Records one sighting on `day`. Days must arrive in non-decreasing
    /// order; several sightings on the same day are unioned.
    fn observe(&mut self, day: Day, origins: &Origins) {
        let fresh = |origins: Origins| AttributionEpoch {
            first_seen: day,
            last_seen: Some(day),
            origins,
        };
        let Some(last) = self.epochs.last_mut() else {
            self.epochs.push(fresh(origins.clone()));
            return;
        };
        let last_seen = last.last_seen.expect("unsealed epochs are closed");
        if last_seen == day {
            let merged = last.origins.union(origins);
            if merged == last.origins {
                return;
            }
            if last.first_seen == day {
                last.origins = merged;
                self.merge_tail(day);
            } else {
                last.last_seen = Some(day.pred());
                self.epochs.push(fresh(merged));
            }
        } else if last_seen == day.pred() && last.origins == *origins {
            last.last_seen = Some(day);
        } else {
            self.epochs.push(fresh(origins.clone()));
        }
    }

    // A same-day union can make the newest epoch equal to the one ending
    // the day before; fold them together.
    fn merge_tail(&mut self, day: Day) {
        let n = self.epochs.len();
        if n < 2 {
            return;
        }
        let (head, tail) = self.epochs.split_at_mut(n - 1);
        let prev = &mut head[n - 2];
        if prev.last_seen == Some(day.pred()) && prev.origins == tail[0].origins {
            prev.last_seen = Some(day);
            self.epochs.pop();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Node {
    key: u128,
    len: u8,
    children: [u32; 2],
    record: u32,
}

fn bit(key: u128, pos: u8) -> usize {
    ((key >> (127 - pos)) & 1) as usize
}

fn mask(key: u128, len: u8) -> u128 {
    if len == 0 {
        0
    } else {
        key & (u128::MAX << (128 - u32::from(len)))
    }
}

fn common_len(a: u128, b: u128, max: u8) -> u8 {
    ((a ^ b).leading_zeros() as u8).min(max)
}

/// Path-compressed binary trie over one address family. Every node
/// without a record has exactly two children, so the node count never
/// exceeds `2 * records - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixTree {
    family: Family,
    nodes: Vec<Node>,
    root: u32,
    records: Vec<PrefixRecord>,
}

impl PrefixTree {
    pub fn new(family: Family) -> PrefixTree {
        PrefixTree {
            family,
            nodes: Vec::new(),
            root: NIL,
            records: Vec::new(),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn records(&self) -> &[PrefixRecord] {
        &self.records
    }

    /// Records holding at least one attribution epoch.
    pub fn announced_count(&self) -> usize {
        self.records.iter().filter(|r| !r.epochs.is_empty()).count()
    }

    fn push_node(&mut self, key: u128, len: u8) -> u32 {
        self.nodes.push(Node {
            key: mask(key, len),
            len,
            children: [NIL, NIL],
            record: NIL,
        });
        (self.nodes.len() - 1) as u32
    }

    fn link(&mut self, parent: Option<(u32, usize)>, child: u32) {
        match parent {
            Some((p, dir)) => self.nodes[p as usize].children[dir] = child,
            None => self.root = child,
        }
    }

    fn find_or_insert_node(&mut self, key: u128, len: u8) -> u32 {
        let mut parent = None;
        let mut cur = self.root;
        loop {
            if cur == NIL {
                let n = self.push_node(key, len);
                self.link(parent, n);
                return n;
            }
            let (node_key, node_len) = {
                let n = &self.nodes[cur as usize];
                (n.key, n.len)
            };
            let common = common_len(key, node_key, len.min(node_len));
            if common == node_len && common == len {
                return cur;
            }
            if common == node_len {
                let dir = bit(key, node_len);
                parent = Some((cur, dir));
                cur = self.nodes[cur as usize].children[dir];
                continue;
            }
            if common == len {
                // the new prefix sits above `cur`
                let n = self.push_node(key, len);
                self.nodes[n as usize].children[bit(node_key, len)] = cur;
                self.link(parent, n);
                return n;
            }
            let branch = self.push_node(key, common);
            let leaf = self.push_node(key, len);
            self.nodes[branch as usize].children[bit(key, common)] = leaf;
            self.nodes[branch as usize].children[bit(node_key, common)] = cur;
            self.link(parent, branch);
            return leaf;
        }
    }

    fn record_mut(&mut self, net: &IpNet) -> &mut PrefixRecord {
        let (key, len) = key_of(net);
        let node = self.find_or_insert_node(key, len) as usize;
        if self.nodes[node].record == NIL {
            self.records.push(PrefixRecord {
                prefix: net_from_key(self.family, key, len),
                epochs: Vec::new(),
                reserved_label: None,
            });
            self.nodes[node].record = (self.records.len() - 1) as u32;
        }
        let idx = self.nodes[node].record as usize;
        &mut self.records[idx]
    }

    pub fn get(&self, net: &IpNet) -> Option<&PrefixRecord> {
        let (key, len) = key_of(net);
        self.path(key, len)
            .last()
            .map(|&i| &self.records[i as usize])
            .filter(|r| r.prefix.prefix_len() == len)
    }

    /// Indices of all records whose prefix contains `key/len`, from least
    /// to most specific.
    fn path(&self, key: u128, len: u8) -> Vec<u32> {
        let mut out = Vec::new();
        let mut cur = self.root;
        while cur != NIL {
            let n = &self.nodes[cur as usize];
            if n.len > len || mask(key, n.len) != n.key {
                break;
            }
            if n.record != NIL {
                out.push(n.record);
            }
            if n.len == len {
                break;
            }
            cur = n.children[bit(key, n.len)];
        }
        out
    }

    /// Records containing `net`, most specific first.
    pub fn covering(&self, net: &IpNet) -> impl Iterator<Item = &PrefixRecord> {
        let (key, len) = key_of(net);
        self.path(key, len)
            .into_iter()
            .rev()
            .map(move |i| &self.records[i as usize])
    }
}

/// Mutable build phase of the index.
#[derive(Debug, Clone)]
pub struct TrieBuilder {
    v4: PrefixTree,
    v6: PrefixTree,
    latest: Option<Day>,
}

impl Default for TrieBuilder {
    fn default() -> Self {
        TrieBuilder::new()
    }
}

impl TrieBuilder {
    pub fn new() -> TrieBuilder {
        TrieBuilder {
            v4: PrefixTree::new(Family::V4),
            v6: PrefixTree::new(Family::V6),
            latest: None,
        }
    }

    fn tree_mut(&mut self, net: &IpNet) -> &mut PrefixTree {
        match Family::of(net) {
            Family::V4 => &mut self.v4,
            Family::V6 => &mut self.v6,
        }
    }

    /// Replays one accepted announcement. Lines must arrive in
    /// non-decreasing snapshot date order. Announcements of seeded
    /// reserved prefixes are ignored.
    pub fn insert_day(&mut self, line: &Pfx2AsLine) -> Result<(), BuildError> {
        let day = line.snapshot_date;
        if let Some(latest) = self.latest {
            if day < latest {
                return Err(BuildError::OutOfOrder { day, latest });
            }
        }
        self.latest = Some(day);
        let record = self.tree_mut(&line.prefix).record_mut(&line.prefix);
        if record.reserved_label.is_none() {
            record.observe(day, &line.origins);
        }
        Ok(())
    }

    pub fn seed_reserved(&mut self, registry: &[(IpNet, String)]) {
        for (net, label) in registry {
            let net = net.trunc();
            let record = self.tree_mut(&net).record_mut(&net);
            record.reserved_label = Some(label.clone());
            record.epochs.clear();
        }
    }

    pub fn latest_day(&self) -> Option<Day> {
        self.latest
    }

    /// Opens every epoch last seen on `newest` and seals the index.
    pub fn finalize(mut self, newest: Day) -> TemporalTrie {
        for tree in [&mut self.v4, &mut self.v6] {
            for epoch in tree.records.iter_mut().flat_map(|r| r.epochs.iter_mut()) {
                if epoch.last_seen == Some(newest) {
                    epoch.last_seen = None;
                }
            }
        }
        TemporalTrie {
            v4: self.v4,
            v6: self.v6,
            newest: Some(newest),
        }
    }
}

/// What the upward walk found for a `(target, day)` query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrieHit<'a> {
    Found {
        record: &'a PrefixRecord,
        epoch: &'a AttributionEpoch,
    },
    Reserved(&'a PrefixRecord),
    NotFound,
}

/// The sealed, read-only index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalTrie {
    v4: PrefixTree,
    v6: PrefixTree,
    newest: Option<Day>,
}

impl TemporalTrie {
    pub fn empty() -> TemporalTrie {
        TrieBuilder::new().finalize_empty()
    }

    pub fn tree(&self, family: Family) -> &PrefixTree {
        match family {
            Family::V4 => &self.v4,
            Family::V6 => &self.v6,
        }
    }

    /// Date of the newest replayed snapshot.
    pub fn newest(&self) -> Option<Day> {
        self.newest
    }

    /// Most specific prefix containing `target` that either is reserved or
    /// has an epoch covering `day`, starting at `target`'s own length and
    /// walking toward the root.
    pub fn lookup(&self, target: &IpNet, day: Day) -> TrieHit<'_> {
        for record in self.tree(Family::of(target)).covering(target) {
            if record.reserved_label.is_some() {
                return TrieHit::Reserved(record);
            }
            if let Some(epoch) = record.epoch_at(day) {
                return TrieHit::Found { record, epoch };
            }
        }
        TrieHit::NotFound
    }
}

impl TrieBuilder {
    fn finalize_empty(self) -> TemporalTrie {
        TemporalTrie {
            v4: self.v4,
            v6: self.v6,
            newest: None,
        }
    }
}
