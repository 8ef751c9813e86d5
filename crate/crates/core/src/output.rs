//! JSON renderings of lookup results.
//!
//! `JSON-SHORT` is the canonical schema (`IP`, `QDATE`, `results` with
//! `DATA_FIRST`, `DATA_LAST`, `asns`, `prefix`, `as2org`). The verbose
//! schema (`ipaddr`, `qdate`, `results` with `timestamp`, `until`,
//! `aslist`, `orgmapping`) additionally exposes raw AS2ORG records and
//! change bookkeeping. Compact output uses `", "` and `": "` separators;
//! pretty output indents by four spaces.

use std::io;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::lookup::{As2OrgEntry, LookupResult, LookupStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    JsonShort,
    JsonVerbose,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::JsonShort => "JSON-SHORT",
            OutputFormat::JsonVerbose => "JSON-VERBOSE",
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct SpacedCompact;

impl Formatter for SpacedCompact {
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if first {
            Ok(())
        } else {
            w.write_all(b", ")
        }
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if first {
            Ok(())
        } else {
            w.write_all(b", ")
        }
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(b": ")
    }
}

fn to_compact<T: Serialize>(value: &T) -> String {
    let mut out = Vec::with_capacity(256);
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SpacedCompact);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut out = Vec::with_capacity(1024);
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PrettyFormatter::with_indent(b"    "));
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Renders a result on one line (bulk mode) or pretty-printed.
pub fn render(result: &LookupResult, format: OutputFormat, pretty: bool) -> String {
    match (format, pretty) {
        (OutputFormat::JsonShort, false) => to_compact(&Short(result)),
        (OutputFormat::JsonShort, true) => to_pretty(&Short(result)),
        (OutputFormat::JsonVerbose, false) => to_compact(&Verbose(result)),
        (OutputFormat::JsonVerbose, true) => to_pretty(&Verbose(result)),
    }
}

pub fn to_json_short(result: &LookupResult) -> String {
    render(result, OutputFormat::JsonShort, false)
}

const EMPTY: [u8; 0] = [];

struct Short<'a>(&'a LookupResult);

#[derive(Serialize)]
#[allow(non_snake_case)]
struct ShortFound<'a> {
    DATA_FIRST: Option<u32>,
    DATA_LAST: Option<u32>,
    asns: &'a [u32],
    prefix: String,
    as2org: Vec<ShortAs2Org<'a>>,
    // only emitted for MOAS and AS-set origins
    #[serde(skip_serializing_if = "Option::is_none")]
    ORIGIN_KIND: Option<&'static str>,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct ShortReserved<'a> {
    prefix: String,
    RESERVED: &'a str,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct ShortAs2Org<'a> {
    ASN: u32,
    ASNAME: Option<&'a str>,
    RIR: Option<&'a str>,
    orgs: Vec<ShortOrg<'a>>,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct ShortOrg<'a> {
    CC: Option<&'a str>,
    RIR: Option<String>,
    ASORG: Option<&'a str>,
}

impl<'a> ShortAs2Org<'a> {
    fn new(e: &'a As2OrgEntry) -> Self {
        ShortAs2Org {
            ASN: e.asn,
            ASNAME: e.info.as_ref().map(|i| i.as_name.as_str()),
            RIR: e.info.as_ref().map(|i| i.source.as_str()),
            orgs: e
                .orgs
                .iter()
                .map(|o| ShortOrg {
                    CC: o.org.as_ref().map(|i| i.country.as_str()),
                    RIR: o.org.as_ref().map(|i| i.sources.join(",")),
                    ASORG: o.org.as_ref().map(|i| i.org_name.as_str()),
                })
                .collect(),
        }
    }
}

impl Serialize for Short<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let r = self.0;
        let mut map = s.serialize_map(Some(3))?;
        map.serialize_entry("IP", &r.query)?;
        map.serialize_entry("QDATE", &r.qdate.to_string())?;
        match &r.status {
            LookupStatus::NotFound => map.serialize_entry("results", &EMPTY)?,
            LookupStatus::Reserved(label) => map.serialize_entry(
                "results",
                &ShortReserved {
                    prefix: r.prefix.map(|p| p.to_string()).unwrap_or_default(),
                    RESERVED: label,
                },
            )?,
            LookupStatus::Found => map.serialize_entry(
                "results",
                &ShortFound {
                    DATA_FIRST: r.data_first.map(|d| d.as_number()),
                    DATA_LAST: r.data_last.map(|d| d.as_number()),
                    asns: &r.asns,
                    prefix: r.prefix.map(|p| p.to_string()).unwrap_or_default(),
                    as2org: r.as2org.iter().map(ShortAs2Org::new).collect(),
                    ORIGIN_KIND: r
                        .origin_kind
                        .filter(|k| *k != crate::asn::OriginKind::Single)
                        .map(|k| k.as_str()),
                },
            )?,
        }
        map.end()
    }
}

struct Verbose<'a>(&'a LookupResult);

#[derive(Serialize)]
struct VerboseFound<'a> {
    timestamp: Option<u32>,
    until: Option<u32>,
    prefix: String,
    origin_kind: &'static str,
    aslist: &'a [u32],
    orgmapping: OrgMapping<'a>,
}

#[derive(Serialize)]
struct VerboseReserved<'a> {
    prefix: String,
    reserved: &'a str,
}

struct OrgMapping<'a>(&'a [As2OrgEntry]);

impl Serialize for OrgMapping<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for entry in self.0 {
            map.serialize_entry(&entry.asn.to_string(), &[VerboseAs2Org::new(entry)])?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct VerboseAut<'a> {
    aut: u32,
    aut_name: &'a str,
    org_id: String,
    opaque_id: &'a str,
    source: &'a str,
}

#[derive(Serialize)]
struct VerboseAs2Org<'a> {
    asn: u32,
    aut: Option<VerboseAut<'a>>,
    seen: Vec<String>,
    changed: Option<String>,
    change_guessed: Option<bool>,
    orgs: Vec<VerboseOrgRef<'a>>,
}

#[derive(Serialize)]
struct VerboseOrg<'a> {
    org_id: &'a str,
    org_name: &'a str,
    country: &'a str,
    source: String,
}

#[derive(Serialize)]
struct VerboseOrgRef<'a> {
    org_id: &'a str,
    org: Option<VerboseOrg<'a>>,
    seen: Vec<String>,
    changed: Option<String>,
    change_guessed: Option<bool>,
}

fn dates(days: &[crate::day::Day]) -> Vec<String> {
    days.iter().map(|d| d.to_string()).collect()
}

impl<'a> VerboseAs2Org<'a> {
    fn new(e: &'a As2OrgEntry) -> Self {
        VerboseAs2Org {
            asn: e.asn,
            aut: e.info.as_ref().map(|i| VerboseAut {
                aut: e.asn,
                aut_name: &i.as_name,
                org_id: i.org_ids.join(","),
                opaque_id: &i.opaque_id,
                source: &i.source,
            }),
            seen: e.info.as_ref().map(|i| dates(&i.seen)).unwrap_or_default(),
            changed: e.info.as_ref().and_then(|i| i.seen.first()).map(|d| d.to_string()),
            change_guessed: e.info.as_ref().map(|i| i.change_guessed),
            orgs: e
                .orgs
                .iter()
                .map(|o| VerboseOrgRef {
                    org_id: &o.org_id,
                    org: o.org.as_ref().map(|i| VerboseOrg {
                        org_id: &o.org_id,
                        org_name: &i.org_name,
                        country: &i.country,
                        source: i.sources.join(","),
                    }),
                    seen: o.org.as_ref().map(|i| dates(&i.seen)).unwrap_or_default(),
                    changed: o.org.as_ref().and_then(|i| i.seen.first()).map(|d| d.to_string()),
                    change_guessed: o.org.as_ref().map(|i| i.change_guessed),
                })
                .collect(),
        }
    }
}

impl Serialize for Verbose<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let r = self.0;
        let mut map = s.serialize_map(Some(3))?;
        map.serialize_entry("ipaddr", &r.query)?;
        map.serialize_entry("qdate", &r.qdate.to_string())?;
        match &r.status {
            LookupStatus::NotFound => map.serialize_entry("results", &EMPTY)?,
            LookupStatus::Reserved(label) => map.serialize_entry(
                "results",
                &VerboseReserved {
                    prefix: r.prefix.map(|p| p.to_string()).unwrap_or_default(),
                    reserved: label,
                },
            )?,
            LookupStatus::Found => map.serialize_entry(
                "results",
                &VerboseFound {
                    timestamp: r.data_first.map(|d| d.as_number()),
                    until: r.data_last.map(|d| d.as_number()),
                    prefix: r.prefix.map(|p| p.to_string()).unwrap_or_default(),
                    origin_kind: r.origin_kind.map(|k| k.as_str()).unwrap_or(""),
                    aslist: &r.asns,
                    orgmapping: OrgMapping(&r.as2org),
                },
            )?,
        }
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_separators() {
        #[derive(Serialize)]
        struct T {
            a: Vec<u32>,
            b: Option<u32>,
            c: [u8; 0],
        }
        assert_eq!(to_compact(&T { a: vec![1, 2], b: None, c: [] }), r#"{"a": [1, 2], "b": null, "c": []}"#);
    }
}
