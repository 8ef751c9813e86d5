use std::io::BufRead;
use std::net::IpAddr;

use ipnet::IpNet;
use serde::{Deserialize, Serialize};

use crate::asn::Origins;
use crate::day::Day;

/// One announcement from a daily prefix-to-AS aggregate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pfx2AsLine {
    pub prefix: IpNet,
    pub origins: Origins,
    pub snapshot_date: Day,
}

#[derive(Debug, Default)]
pub struct Pfx2AsParse {
    pub lines: Vec<Pfx2AsLine>,
    pub total: u64,
    pub malformed: u64,
}

/// Parses `base<TAB>len<TAB>origins`. Returns `None` for malformed lines,
/// including bases with host bits set.
pub fn parse_pfx2as_line(line: &str, snapshot_date: Day) -> Option<Pfx2AsLine> {
    let mut fields = line.split_ascii_whitespace();
    let base: IpAddr = fields.next()?.parse().ok()?;
    let len: u8 = fields.next()?.parse().ok()?;
    let origins = Origins::parse(fields.next()?).ok()?;
    if fields.next().is_some() {
        return None;
    }
    let prefix = IpNet::new(base, len).ok()?;
    if prefix.trunc() != prefix {
        return None;
    }
    Some(Pfx2AsLine {
        prefix,
        origins,
        snapshot_date,
    })
}

/// Parses a whole pfx2as stream. Blank lines and `#` comments are ignored
/// and not counted; every other line is either returned or counted as
/// malformed. An I/O or decompression error aborts the file.
pub fn parse_pfx2as<R: BufRead>(mut reader: R, snapshot_date: Day) -> std::io::Result<Pfx2AsParse> {
    let mut out = Pfx2AsParse::default();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let text = String::from_utf8_lossy(&buf);
        let text = text.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        out.total += 1;
        match parse_pfx2as_line(text, snapshot_date) {
            Some(line) => out.lines.push(line),
            None => out.malformed += 1,
        }
    }
    Ok(out)
}
