use ipnet::IpNet;
use serde::{Deserialize, Serialize};

use crate::asn::{is_reserved_asn, RESERVED_ASN_RANGES};
use crate::ingest::Pfx2AsLine;
use crate::prefix::Family;
use crate::reserved::default_reserved_prefixes;

/// Noise filter applied to every announcement before it reaches the index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub v4_min_len: u8,
    pub v4_max_len: u8,
    pub v6_min_len: u8,
    pub v6_max_len: u8,
    pub reserved_asn_ranges: Vec<(u32, u32)>,
    pub reserved_prefixes: Vec<(IpNet, String)>,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            v4_min_len: 8,
            v4_max_len: 24,
            v6_min_len: 18,
            v6_max_len: 48,
            reserved_asn_ranges: RESERVED_ASN_RANGES.to_vec(),
            reserved_prefixes: default_reserved_prefixes(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    TooSpecific,
    TooBroad,
    ReservedAsn,
    /// The announced prefix lies inside a special-use block.
    ReservedPrefix,
}

impl RejectReason {
    pub const ALL: [RejectReason; 4] = [
        RejectReason::TooSpecific,
        RejectReason::TooBroad,
        RejectReason::ReservedAsn,
        RejectReason::ReservedPrefix,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterVerdict {
    Accept,
    Reject(RejectReason),
}

impl FilterPolicy {
    fn bounds(&self, family: Family) -> (u8, u8) {
        match family {
            Family::V4 => (self.v4_min_len, self.v4_max_len),
            Family::V6 => (self.v6_min_len, self.v6_max_len),
        }
    }
}

pub fn apply_filter(line: &Pfx2AsLine, policy: &FilterPolicy) -> FilterVerdict {
    let (min, max) = policy.bounds(Family::of(&line.prefix));
    let len = line.prefix.prefix_len();
    if len > max {
        return FilterVerdict::Reject(RejectReason::TooSpecific);
    }
    if len < min {
        return FilterVerdict::Reject(RejectReason::TooBroad);
    }
    if line
        .origins
        .asns()
        .iter()
        .any(|&asn| is_reserved_asn(asn, &policy.reserved_asn_ranges))
    {
        return FilterVerdict::Reject(RejectReason::ReservedAsn);
    }
    if policy
        .reserved_prefixes
        .iter()
        .any(|(net, _)| net.contains(&line.prefix))
    {
        return FilterVerdict::Reject(RejectReason::ReservedPrefix);
    }
    FilterVerdict::Accept
}
