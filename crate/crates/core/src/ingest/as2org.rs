use std::collections::BTreeSet;
use std::io::{self, BufRead};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::asn::parse_asn;
use crate::day::Day;

/// An `aut` record: one ASN and the organization it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsEntry {
    pub asn: u32,
    pub as_name: String,
    pub org_id: String,
    pub opaque_id: String,
    pub source: String,
    /// `org_id` is empty or has no matching organization record.
    pub dangling: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrgEntry {
    pub org_id: String,
    pub org_name: String,
    pub country: String,
    pub sources: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct As2OrgFileSnapshot {
    pub collection_date: Day,
    pub as_entries: Vec<AsEntry>,
    pub org_entries: Vec<OrgEntry>,
    pub malformed: u64,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Unknown,
    Aut,
    Org,
}

fn split_sources(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

// aut|changed|aut_name|org_id|opaque_id|source; the name may contain '|'.
fn parse_aut_line(line: &str) -> Option<AsEntry> {
    let fields: Vec<&str> = line.split('|').collect();
    if fields.len() < 6 {
        return None;
    }
    let n = fields.len();
    Some(AsEntry {
        asn: parse_asn(fields[0]).ok()?,
        as_name: fields[2..n - 3].join("|"),
        org_id: fields[n - 3].trim().to_string(),
        opaque_id: fields[n - 2].trim().to_string(),
        source: fields[n - 1].trim().to_string(),
        dangling: false,
    })
}

// org_id|changed|org_name|country|source
fn parse_org_line(line: &str) -> Option<OrgEntry> {
    let fields: Vec<&str> = line.split('|').collect();
    if fields.len() < 5 {
        return None;
    }
    let n = fields.len();
    let org_id = fields[0].trim();
    if org_id.is_empty() {
        return None;
    }
    Some(OrgEntry {
        org_id: org_id.to_string(),
        org_name: fields[2..n - 2].join("|"),
        country: fields[n - 2].trim().to_string(),
        sources: split_sources(fields[n - 1]),
    })
}

enum JsonRecord {
    Aut(AsEntry),
    Org(OrgEntry),
}

fn parse_json_line(line: &str) -> Option<JsonRecord> {
    let v: Value = serde_json::from_str(line).ok()?;
    let text = |key: &str| -> String {
        match v.get(key) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => String::new(),
        }
    };
    let kind = text("type");
    if kind.eq_ignore_ascii_case("asn") || v.get("asn").is_some() {
        Some(JsonRecord::Aut(AsEntry {
            asn: parse_asn(&text("asn")).ok()?,
            as_name: text("name"),
            org_id: text("organizationId"),
            opaque_id: text("opaqueId"),
            source: text("source"),
            dangling: false,
        }))
    } else {
        let org_id = text("organizationId");
        if org_id.is_empty() {
            return None;
        }
        Some(JsonRecord::Org(OrgEntry {
            org_id,
            org_name: text("name"),
            country: text("country"),
            sources: split_sources(&text("source")),
        }))
    }
}

// true for JSON lines, false for the pipe layout
fn detect_layout(first_line: &str) -> io::Result<bool> {
    if first_line.trim_start().starts_with('{') {
        Ok(true)
    } else if first_line.starts_with('#') || first_line.contains('|') {
        Ok(false)
    } else {
        Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "unrecognized AS2ORG layout",
        ))
    }
}

/// Parses an AS2ORG file in either the pipe-delimited two-section layout or
/// the one-JSON-object-per-line layout, detected from the first non-empty
/// line. An unrecognized layout yields an `InvalidData` error.
pub fn parse_as2org<R: BufRead>(mut reader: R, collection_date: Day) -> io::Result<As2OrgFileSnapshot> {
    let mut snap = As2OrgFileSnapshot {
        collection_date,
        as_entries: Vec::new(),
        org_entries: Vec::new(),
        malformed: 0,
    };
    let mut json: Option<bool> = None;
    let mut section = Section::Unknown;
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let text = String::from_utf8_lossy(&buf);
        let line = text.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let is_json = match json {
            Some(layout) => layout,
            None => {
                let layout = detect_layout(line)?;
                json = Some(layout);
                layout
            }
        };
        if is_json {
            match parse_json_line(line) {
                Some(JsonRecord::Aut(a)) => snap.as_entries.push(a),
                Some(JsonRecord::Org(o)) => snap.org_entries.push(o),
                None => snap.malformed += 1,
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((_, format)) = comment.split_once("format:") {
                let format = format.trim();
                if format.starts_with("aut|") {
                    section = Section::Aut;
                } else if format.starts_with("org_id|") {
                    section = Section::Org;
                }
            }
            continue;
        }
        let current = match section {
            Section::Unknown if parse_asn(line.split('|').next().unwrap_or("")).is_ok() => Section::Aut,
            Section::Unknown => Section::Org,
            s => s,
        };
        match current {
            Section::Aut => match parse_aut_line(line) {
                Some(a) => snap.as_entries.push(a),
                None => snap.malformed += 1,
            },
            _ => match parse_org_line(line) {
                Some(o) => snap.org_entries.push(o),
                None => snap.malformed += 1,
            },
        }
    }
    let known: BTreeSet<&str> = snap.org_entries.iter().map(|o| o.org_id.as_str()).collect();
    for entry in &mut snap.as_entries {
        entry.dangling = entry.org_id.is_empty() || !known.contains(entry.org_id.as_str());
    }
    Ok(snap)
}
