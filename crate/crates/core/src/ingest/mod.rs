//! Discovery, decompression and parsing of the raw datasets: daily
//! prefix-to-AS aggregates and quarterly AS-to-organization files.

mod as2org;
mod filter;
mod pfx2as;
mod report;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use log::warn;

use crate::day::Day;
use crate::error::IngestError;

pub use as2org::{parse_as2org, As2OrgFileSnapshot, AsEntry, OrgEntry};
pub use filter::{apply_filter, FilterPolicy, FilterVerdict, RejectReason};
pub use pfx2as::{parse_pfx2as, parse_pfx2as_line, Pfx2AsLine, Pfx2AsParse};
pub use report::{BuildReport, FileReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Pfx2AsV4,
    Pfx2AsV6,
    As2Org,
}

impl DatasetKind {
    fn matches(self, name: &str) -> bool {
        let name = name.to_ascii_lowercase();
        match self {
            DatasetKind::Pfx2AsV4 => name.contains("pfx2as") && !name.contains("rv6"),
            DatasetKind::Pfx2AsV6 => name.contains("pfx2as") && name.contains("rv6"),
            DatasetKind::As2Org => name.contains("org"),
        }
    }
}

/// Extracts the snapshot date from a file name: the first run of exactly
/// eight digits that forms a valid `YYYYMMDD` date.
pub fn date_from_file_name(name: &str) -> Option<Day> {
    let bytes = name.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i - start == 8 {
                if let Ok(day) = Day::parse_compact(&name[start..i]) {
                    return Some(day);
                }
            }
        } else {
            i += 1;
        }
    }
    None
}

/// Recursively lists the files of `kind` under `root`, ordered by snapshot
/// date. When several files carry the same date the one whose file name
/// sorts last is kept.
pub fn discover_files(root: &Path, kind: DatasetKind) -> io::Result<Vec<(Day, PathBuf)>> {
    let mut by_date: BTreeMap<Day, PathBuf> = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if !kind.matches(name) {
                continue;
            }
            let Some(day) = date_from_file_name(name) else {
                warn!("skipping {}: no YYYYMMDD date in file name", path.display());
                continue;
            };
            match by_date.get(&day) {
                Some(existing) if existing.file_name() >= path.file_name() => {}
                _ => {
                    by_date.insert(day, path);
                }
            }
        }
    }
    Ok(by_date.into_iter().collect())
}

/// Wraps a byte stream, transparently decompressing it when it starts with
/// the gzip magic bytes.
pub fn sniff_decompress<'a, R: Read + 'a>(reader: R) -> io::Result<Box<dyn BufRead + 'a>> {
    let mut buffered = BufReader::new(reader);
    let head = buffered.fill_buf()?;
    if head.starts_with(&[0x1f, 0x8b]) {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(buffered))))
    } else {
        Ok(Box::new(buffered))
    }
}

pub fn open_dataset(path: &Path) -> Result<Box<dyn BufRead>, IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    sniff_decompress(file).map_err(io_err)
}
