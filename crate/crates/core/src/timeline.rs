//! Continuous per-ASN and per-organization timelines interpolated from
//! quarterly AS2ORG snapshots.
//!
//! Between two adjacent snapshots `d1 < d2` a key is handled as follows:
//!
//! * same value in both: one epoch spanning both dates;
//! * present at `d1`, absent at `d2`: the epoch ends at `d1`;
//! * absent at `d1`, present at `d2`: a new epoch starts at `d2`;
//! * value differs: the old epoch ends at `d1` and the new one starts at
//!   `d1 + 1` with `change_guessed` set.
//!
//! Epochs still present in the newest snapshot are open-ended.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::day::Day;
use crate::error::BuildError;
use crate::ingest::As2OrgFileSnapshot;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Epoch<V> {
    pub valid_from: Day,
    /// Inclusive; `None` while the value is still present in the newest snapshot.
    pub valid_to: Option<Day>,
    pub change_guessed: bool,
    /// Snapshot dates on which this value was observed.
    pub seen: Vec<Day>,
    pub value: V,
}

impl<V> Epoch<V> {
    pub fn covers(&self, day: Day) -> bool {
        self.valid_from <= day && self.valid_to.is_none_or(|to| day <= to)
    }
}

/// What an ASN maps to in one snapshot. Any field change opens a new epoch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsMapping {
    pub as_name: String,
    pub source: String,
    pub opaque_id: String,
    /// Sorted, de-duplicated; empty when the record had no org_id.
    pub org_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Organization {
    pub org_id: String,
    pub org_name: String,
    pub country: String,
    pub sources: Vec<String>,
}

pub type AsOrgEpoch = Epoch<AsMapping>;
pub type OrgEpoch = Epoch<Organization>;

/// Interpolates keyed values observed on strictly increasing snapshot dates.
pub fn interpolate<K, V>(snapshots: Vec<(Day, BTreeMap<K, V>)>) -> Result<BTreeMap<K, Vec<Epoch<V>>>, BuildError>
where
    K: Ord,
    V: Eq,
{
    let mut timelines: BTreeMap<K, Vec<Epoch<V>>> = BTreeMap::new();
    let mut previous: Option<Day> = None;
    for (date, entries) in snapshots {
        if let Some(prev) = previous {
            if date <= prev {
                return Err(BuildError::UnorderedSnapshots { previous: prev, next: date });
            }
        }
        for (key, value) in entries {
            let epochs = timelines.entry(key).or_default();
            let last = epochs.last_mut().filter(|e| previous.is_some() && e.valid_to == previous);
            match last {
                Some(e) if e.value == value => {
                    e.valid_to = Some(date);
                    e.seen.push(date);
                }
                Some(_) => epochs.push(Epoch {
                    valid_from: previous.expect("checked above").succ(),
                    valid_to: Some(date),
                    change_guessed: true,
                    seen: vec![date],
                    value,
                }),
                None => epochs.push(Epoch {
                    valid_from: date,
                    valid_to: Some(date),
                    change_guessed: false,
                    seen: vec![date],
                    value,
                }),
            }
        }
        previous = Some(date);
    }
    if let Some(newest) = previous {
        for epoch in timelines.values_mut().flatten() {
            if epoch.valid_to == Some(newest) {
                epoch.valid_to = None;
            }
        }
    }
    Ok(timelines)
}

/// An organization reference of an AS mapping, resolved for one date.
#[derive(Debug, Clone, Copy)]
pub struct ResolvedOrg<'a> {
    pub org_id: &'a str,
    /// `None` for dangling references.
    pub org: Option<&'a OrgEpoch>,
}

#[derive(Debug, Clone)]
pub struct AsOrgAt<'a> {
    pub asn: u32,
    pub epoch: &'a AsOrgEpoch,
    pub orgs: Vec<ResolvedOrg<'a>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct As2OrgTimelines {
    pub asns: BTreeMap<u32, Vec<AsOrgEpoch>>,
    pub orgs: BTreeMap<String, Vec<OrgEpoch>>,
    pub snapshot_dates: Vec<Day>,
}

fn find_epoch<V>(epochs: &[Epoch<V>], day: Day) -> Option<&Epoch<V>> {
    // epochs are sorted and disjoint: the candidate is the last one starting on or before `day`
    let idx = epochs.partition_point(|e| e.valid_from <= day);
    idx.checked_sub(1).map(|i| &epochs[i]).filter(|e| e.covers(day))
}

impl As2OrgTimelines {
    pub fn build(snapshots: &[As2OrgFileSnapshot]) -> Result<As2OrgTimelines, BuildError> {
        if snapshots.is_empty() {
            return Err(BuildError::NoAs2OrgSnapshots);
        }
        let mut as_snaps = Vec::with_capacity(snapshots.len());
        let mut org_snaps = Vec::with_capacity(snapshots.len());
        for snap in snapshots {
            let mut ases: BTreeMap<u32, AsMapping> = BTreeMap::new();
            for e in &snap.as_entries {
                let mapping = ases.entry(e.asn).or_insert_with(|| AsMapping {
                    as_name: e.as_name.clone(),
                    source: e.source.clone(),
                    opaque_id: e.opaque_id.clone(),
                    org_ids: Vec::new(),
                });
                if !e.org_id.is_empty() && !mapping.org_ids.contains(&e.org_id) {
                    mapping.org_ids.push(e.org_id.clone());
                }
            }
            for m in ases.values_mut() {
                m.org_ids.sort();
            }
            let mut orgs: BTreeMap<String, Organization> = BTreeMap::new();
            for o in &snap.org_entries {
                orgs.entry(o.org_id.clone()).or_insert_with(|| Organization {
                    org_id: o.org_id.clone(),
                    org_name: o.org_name.clone(),
                    country: o.country.clone(),
                    sources: o.sources.clone(),
                });
            }
            as_snaps.push((snap.collection_date, ases));
            org_snaps.push((snap.collection_date, orgs));
        }
        Ok(As2OrgTimelines {
            snapshot_dates: snapshots.iter().map(|s| s.collection_date).collect(),
            asns: interpolate(as_snaps)?,
            orgs: interpolate(org_snaps)?,
        })
    }

    pub fn org_at(&self, asn: u32, day: Day) -> Option<AsOrgAt<'_>> {
        let epoch = find_epoch(self.asns.get(&asn)?, day)?;
        let orgs = epoch
            .value
            .org_ids
            .iter()
            .map(|id| ResolvedOrg {
                org_id: id,
                org: self.orgs.get(id).and_then(|e| find_epoch(e, day)),
            })
            .collect();
        Some(AsOrgAt { asn, epoch, orgs })
    }

    pub fn as_count(&self) -> usize {
        self.asns.len()
    }

    pub fn org_count(&self) -> usize {
        self.orgs.len()
    }
}
