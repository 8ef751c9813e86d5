//! AS numbers and origin sets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::InputError;

/// Private, documentation and otherwise reserved AS number ranges (inclusive).
pub const RESERVED_ASN_RANGES: &[(u32, u32)] = &[
    (0, 0),
    (23456, 23456),
    (64496, 64511),
    (64512, 65534),
    (65535, 65535),
    (65536, 65551),
    (65552, 131071),
    (4_200_000_000, 4_294_967_294),
    (4_294_967_295, 4_294_967_295),
];

/// Parses an AS number in asplain (`13335`) or asdot (`1.10`) notation.
/// Asdot values are normalized to asplain (`high * 65536 + low`).
pub fn parse_asn(s: &str) -> Result<u32, InputError> {
    let bad = || InputError::BadAsn(s.to_string());
    let s = s.trim();
    let s = s
        .strip_prefix("AS")
        .or_else(|| s.strip_prefix("as"))
        .unwrap_or(s);
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit() || b == b'.') {
        return Err(bad());
    }
    match s.split_once('.') {
        None => s.parse::<u32>().map_err(|_| bad()),
        Some((high, low)) => {
            let high: u16 = high.parse().map_err(|_| bad())?;
            let low: u16 = low.parse().map_err(|_| bad())?;
            Ok(u32::from(high) * 65536 + u32::from(low))
        }
    }
}

pub fn is_reserved_asn(asn: u32, ranges: &[(u32, u32)]) -> bool {
    ranges.iter().any(|&(lo, hi)| lo <= asn && asn <= hi)
}

/// How the origin of an announcement was expressed in the aggregate data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OriginKind {
    Single,
    /// Multiple ASes originate the prefix simultaneously.
    Moas,
    /// The origin is an aggregated AS-set; the true originator is unknown.
    AsSet,
}

impl OriginKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OriginKind::Single => "single",
            OriginKind::Moas => "moas",
            OriginKind::AsSet => "as_set",
        }
    }
}

/// A non-empty, sorted, de-duplicated set of origin ASNs plus its kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Origins {
    asns: Vec<u32>,
    kind: OriginKind,
}

impl Origins {
    pub fn single(asn: u32) -> Origins {
        Origins {
            asns: vec![asn],
            kind: OriginKind::Single,
        }
    }

    /// Builds an origin set. `as_set` marks aggregate origins; otherwise
    /// more than one member means MOAS. Returns `None` for an empty list.
    pub fn new(mut asns: Vec<u32>, as_set: bool) -> Option<Origins> {
        asns.sort_unstable();
        asns.dedup();
        if asns.is_empty() {
            return None;
        }
        let kind = match (asns.len(), as_set) {
            (1, _) => OriginKind::Single,
            (_, true) => OriginKind::AsSet,
            (_, false) => OriginKind::Moas,
        };
        Some(Origins { asns, kind })
    }

    /// Parses a pfx2as origin field: `_` separates MOAS members and `,`
    /// separates AS-set members; `4713_17676,2497` mixes both.
    pub fn parse(field: &str) -> Result<Origins, InputError> {
        let field = field.trim();
        let mut asns = Vec::new();
        for moas_member in field.split('_') {
            for member in moas_member.split(',') {
                asns.push(parse_asn(member)?);
            }
        }
        Origins::new(asns, field.contains(','))
            .ok_or_else(|| InputError::BadAsn(field.to_string()))
    }

    pub fn asns(&self) -> &[u32] {
        &self.asns
    }

    pub fn kind(&self) -> OriginKind {
        self.kind
    }

    pub fn is_subset_of(&self, other: &Origins) -> bool {
        self.asns.iter().all(|a| other.asns.binary_search(a).is_ok())
    }

    /// Union of two origin sets observed on the same day. The result is an
    /// AS-set if either side was one.
    pub fn union(&self, other: &Origins) -> Origins {
        let mut asns = self.asns.clone();
        asns.extend_from_slice(&other.asns);
        let as_set = self.kind == OriginKind::AsSet || other.kind == OriginKind::AsSet;
        Origins::new(asns, as_set).expect("union of non-empty sets")
    }
}

impl fmt::Display for Origins {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.kind == OriginKind::AsSet { "," } else { "_" };
        for (i, asn) in self.asns.iter().enumerate() {
            if i > 0 {
                f.write_str(sep)?;
            }
            write!(f, "{asn}")?;
        }
        Ok(())
    }
}
