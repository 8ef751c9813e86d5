//! Query answering: most-specific-with-covering-date-range semantics over
//! the sealed trie, joined with the AS2ORG timelines.

use std::collections::BTreeSet;

use ipnet::IpNet;
use serde::{Deserialize, Serialize};

use crate::asn::OriginKind;
use crate::day::Day;
use crate::error::InputError;
use crate::prefix::{parse_target, Family};
use crate::timeline::As2OrgTimelines;
use crate::trie::{TemporalTrie, TrieHit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LookupQuery {
    pub target: IpNet,
    pub qdate: Day,
}

impl LookupQuery {
    pub fn parse(target: &str, qdate: &str) -> Result<LookupQuery, InputError> {
        Ok(LookupQuery {
            target: parse_target(target)?,
            qdate: Day::parse_compact(qdate)?,
        })
    }

    /// Echo form of the target: a bare address for host routes, CIDR otherwise.
    pub fn target_text(&self) -> String {
        if self.target.prefix_len() == self.target.max_prefix_len() {
            self.target.addr().to_string()
        } else {
            self.target.to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LookupStatus {
    Found,
    NotFound,
    Reserved(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrgDetail {
    pub org_id: String,
    /// `None` when the org_id has no organization record at the query date.
    pub org: Option<OrgInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrgInfo {
    pub org_name: String,
    pub country: String,
    pub sources: Vec<String>,
    pub valid_from: Day,
    pub change_guessed: bool,
    pub seen: Vec<Day>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsInfo {
    pub as_name: String,
    pub source: String,
    pub opaque_id: String,
    pub org_ids: Vec<String>,
    pub valid_from: Day,
    pub valid_to: Option<Day>,
    pub change_guessed: bool,
    pub seen: Vec<Day>,
}

/// AS2ORG mapping of one origin ASN at the query date.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct As2OrgEntry {
    pub asn: u32,
    /// `None` when the ASN has no AS2ORG record at the query date.
    pub info: Option<AsInfo>,
    pub orgs: Vec<OrgDetail>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookupResult {
    pub query: String,
    pub qdate: Day,
    pub status: LookupStatus,
    pub prefix: Option<IpNet>,
    pub data_first: Option<Day>,
    pub data_last: Option<Day>,
    pub asns: Vec<u32>,
    pub origin_kind: Option<OriginKind>,
    pub as2org: Vec<As2OrgEntry>,
}

impl LookupResult {
    pub fn is_found(&self) -> bool {
        self.status == LookupStatus::Found
    }
}

/// Per-date answers merged for a set of dates (e.g. the 1st, 14th and
/// 28th of a month).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinedResult {
    pub per_date: Vec<LookupResult>,
    /// Union of the origin ASNs over all found dates.
    pub asns: Vec<u32>,
}

impl JoinedResult {
    pub fn is_found(&self) -> bool {
        self.per_date.iter().any(LookupResult::is_found)
    }

    /// More than one distinct (prefix, ASN list) answer across the dates.
    pub fn multi_state(&self) -> bool {
        let states: BTreeSet<_> = self
            .per_date
            .iter()
            .filter(|r| r.is_found())
            .map(|r| (r.prefix, &r.asns))
            .collect();
        states.len() > 1
    }
}

/// A sealed trie plus AS2ORG timelines, ready to answer queries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Engine {
    pub trie: TemporalTrie,
    pub timelines: As2OrgTimelines,
}

impl Engine {
    pub fn new(trie: TemporalTrie, timelines: As2OrgTimelines) -> Engine {
        Engine { trie, timelines }
    }

    /// Default query date: the newest replayed snapshot.
    pub fn newest_day(&self) -> Option<Day> {
        self.trie.newest()
    }

    pub fn prefix_count(&self, family: Family) -> usize {
        self.trie.tree(family).announced_count()
    }

    fn as2org_at(&self, asn: u32, day: Day) -> As2OrgEntry {
        let Some(at) = self.timelines.org_at(asn, day) else {
            return As2OrgEntry {
                asn,
                info: None,
                orgs: Vec::new(),
            };
        };
        let e = at.epoch;
        As2OrgEntry {
            asn,
            info: Some(AsInfo {
                as_name: e.value.as_name.clone(),
                source: e.value.source.clone(),
                opaque_id: e.value.opaque_id.clone(),
                org_ids: e.value.org_ids.clone(),
                valid_from: e.valid_from,
                valid_to: e.valid_to,
                change_guessed: e.change_guessed,
                seen: e.seen.clone(),
            }),
            orgs: at
                .orgs
                .iter()
                .map(|o| OrgDetail {
                    org_id: o.org_id.to_string(),
                    org: o.org.map(|oe| OrgInfo {
                        org_name: oe.value.org_name.clone(),
                        country: oe.value.country.clone(),
                        sources: oe.value.sources.clone(),
                        valid_from: oe.valid_from,
                        change_guessed: oe.change_guessed,
                        seen: oe.seen.clone(),
                    }),
                })
                .collect(),
        }
    }

    pub fn lookup(&self, query: &LookupQuery) -> LookupResult {
        let mut result = LookupResult {
            query: query.target_text(),
            qdate: query.qdate,
            status: LookupStatus::NotFound,
            prefix: None,
            data_first: None,
            data_last: None,
            asns: Vec::new(),
            origin_kind: None,
            as2org: Vec::new(),
        };
        match self.trie.lookup(&query.target, query.qdate) {
            TrieHit::NotFound => {}
            TrieHit::Reserved(record) => {
                result.status =
                    LookupStatus::Reserved(record.reserved_label.clone().unwrap_or_default());
                result.prefix = Some(record.prefix);
            }
            TrieHit::Found { record, epoch } => {
                result.status = LookupStatus::Found;
                result.prefix = Some(record.prefix);
                result.data_first = Some(epoch.first_seen);
                result.data_last = epoch.last_seen;
                result.asns = epoch.origins.asns().to_vec();
                result.origin_kind = Some(epoch.origins.kind());
                result.as2org = result
                    .asns
                    .iter()
                    .map(|&asn| self.as2org_at(asn, query.qdate))
                    .collect();
            }
        }
        result
    }

    pub fn lookup_joined(&self, target: &IpNet, dates: &[Day]) -> JoinedResult {
        let per_date: Vec<LookupResult> = dates
            .iter()
            .map(|&qdate| {
                self.lookup(&LookupQuery {
                    target: *target,
                    qdate,
                })
            })
            .collect();
        let asns: BTreeSet<u32> = per_date
            .iter()
            .filter(|r| r.is_found())
            .flat_map(|r| r.asns.iter().copied())
            .collect();
        JoinedResult {
            per_date,
            asns: asns.into_iter().collect(),
        }
    }
}
