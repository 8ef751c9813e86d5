//! Building the index from raw dataset directories and persisting it.
//!
//! On-disk layout: 8-byte magic, little-endian `u32` format version,
//! little-endian `u64` payload length, bincode payload, SHA-256 of the
//! payload.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::day::Day;
use crate::error::{BuildError, SnapshotError};
use crate::ingest::{
    apply_filter, discover_files, open_dataset, parse_as2org, parse_pfx2as, As2OrgFileSnapshot,
    BuildReport, DatasetKind, FileReport, FilterPolicy, FilterVerdict, Pfx2AsParse,
};
use crate::lookup::Engine;
use crate::timeline::As2OrgTimelines;
use crate::trie::TrieBuilder;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"HWSNAP\r\n";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default)]
pub struct BuildConfig {
    pub pfx2as_v4: Option<PathBuf>,
    pub pfx2as_v6: Option<PathBuf>,
    pub as2org: PathBuf,
    /// Inclusive bounds on prefix-to-AS snapshot dates.
    pub from: Option<Day>,
    pub to: Option<Day>,
    pub policy: FilterPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub kind: String,
    pub date: Day,
    /// Relative to the dataset root it was discovered under.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub sources: Vec<SourceFile>,
    pub first_day: Day,
    pub last_day: Day,
    pub policy: FilterPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub meta: SnapshotMeta,
    pub engine: Engine,
}

fn relative(root: &Path, path: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).display().to_string()
}

fn parse_pfx2as_file(path: &Path, date: Day, policy: &FilterPolicy) -> (FileReport, Vec<crate::ingest::Pfx2AsLine>) {
    let mut report = FileReport {
        path: path.to_path_buf(),
        date: Some(date),
        ..FileReport::default()
    };
    let parsed = open_dataset(path).and_then(|r| {
        parse_pfx2as(r, date).map_err(|source| crate::error::IngestError::Io {
            path: path.to_path_buf(),
            source,
        })
    });
    let Pfx2AsParse { lines, total, malformed } = match parsed {
        Ok(p) => p,
        Err(e) => {
            warn!("{e}");
            report.error = Some(e.to_string());
            return (report, Vec::new());
        }
    };
    report.total = total;
    report.malformed = malformed;
    let mut accepted = Vec::with_capacity(lines.len());
    for line in lines {
        match apply_filter(&line, policy) {
            FilterVerdict::Accept => accepted.push(line),
            FilterVerdict::Reject(reason) => *report.rejected.entry(reason).or_default() += 1,
        }
    }
    report.accepted = accepted.len() as u64;
    (report, accepted)
}

fn load_as2org(root: &Path, report: &mut BuildReport, sources: &mut Vec<SourceFile>) -> Result<Vec<As2OrgFileSnapshot>, BuildError> {
    let files = discover_files(root, DatasetKind::As2Org)?;
    let parsed: Vec<_> = files
        .par_iter()
        .map(|(date, path)| {
            let result = open_dataset(path).and_then(|r| {
                parse_as2org(r, *date).map_err(|source| crate::error::IngestError::Io {
                    path: path.clone(),
                    source,
                })
            });
            (*date, path, result)
        })
        .collect();
    let mut snapshots = Vec::new();
    for (date, path, result) in parsed {
        let mut file = FileReport {
            path: path.clone(),
            date: Some(date),
            ..FileReport::default()
        };
        match result {
            Ok(snap) => {
                file.accepted = (snap.as_entries.len() + snap.org_entries.len()) as u64;
                file.malformed = snap.malformed;
                file.total = file.accepted + file.malformed;
                sources.push(SourceFile {
                    kind: "as2org".into(),
                    date,
                    path: relative(root, path),
                });
                snapshots.push(snap);
            }
            Err(e) => {
                warn!("{e}");
                file.error = Some(e.to_string());
                report.failed_files += 1;
            }
        }
        report.as2org_files.push(file);
    }
    Ok(snapshots)
}

/// Ingests, filters and replays the configured datasets into a sealed
/// snapshot. Unreadable files are reported, not fatal.
pub fn build_snapshot(config: &BuildConfig) -> Result<(Snapshot, BuildReport), BuildError> {
    if let (Some(from), Some(to)) = (config.from, config.to) {
        if from > to {
            return Err(BuildError::EmptyDateRange { from, to });
        }
    }
    let in_range = |d: &Day| config.from.is_none_or(|f| *d >= f) && config.to.is_none_or(|t| *d <= t);

    let mut report = BuildReport::default();
    let mut sources = Vec::new();

    let snapshots = load_as2org(&config.as2org, &mut report, &mut sources)?;
    let timelines = As2OrgTimelines::build(&snapshots)?;
    drop(snapshots);

    let mut by_day: BTreeMap<Day, Vec<(&'static str, &Path, PathBuf)>> = BTreeMap::new();
    for (kind, dataset, root) in [
        ("pfx2as-v4", DatasetKind::Pfx2AsV4, &config.pfx2as_v4),
        ("pfx2as-v6", DatasetKind::Pfx2AsV6, &config.pfx2as_v6),
    ] {
        let Some(root) = root else { continue };
        for (date, path) in discover_files(root, dataset)? {
            if in_range(&date) {
                by_day.entry(date).or_default().push((kind, root.as_path(), path));
            }
        }
    }
    if by_day.is_empty() {
        return Err(BuildError::NoPfx2AsFiles);
    }

    let mut builder = TrieBuilder::new();
    builder.seed_reserved(&config.policy.reserved_prefixes);
    let mut first_day = None;
    let mut last_day = None;
    for (date, files) in &by_day {
        let parsed: Vec<_> = files
            .par_iter()
            .map(|(_, _, path)| parse_pfx2as_file(path, *date, &config.policy))
            .collect();
        for ((kind, root, path), (file_report, lines)) in files.iter().zip(parsed) {
            if file_report.error.is_some() {
                report.failed_files += 1;
            } else {
                sources.push(SourceFile {
                    kind: (*kind).into(),
                    date: *date,
                    path: relative(root, path),
                });
                first_day.get_or_insert(*date);
                last_day = Some(*date);
            }
            for line in &lines {
                builder.insert_day(line)?;
            }
            report.pfx2as_files.push(file_report);
        }
        info!("replayed {date}");
    }
    let (Some(first_day), Some(last_day)) = (first_day, last_day) else {
        return Err(BuildError::NoPfx2AsFiles);
    };
    let trie = builder.finalize(last_day);
    let snapshot = Snapshot {
        meta: SnapshotMeta {
            sources,
            first_day,
            last_day,
            policy: config.policy.clone(),
        },
        engine: Engine::new(trie, timelines),
    };
    Ok((snapshot, report))
}

impl Snapshot {
    pub fn to_bytes(&self) -> Vec<u8> {
        let payload = bincode::serialize(self).expect("in-memory serialization");
        let mut out = Vec::with_capacity(payload.len() + 52);
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&payload);
        out.extend_from_slice(&Sha256::digest(&payload));
        out
    }

    pub fn from_reader<R: Read>(mut r: R) -> Result<Snapshot, SnapshotError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != SNAPSHOT_VERSION {
            return Err(SnapshotError::Version {
                found: version,
                expected: SNAPSHOT_VERSION,
            });
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let len = u64::from_le_bytes(len);
        let mut payload = Vec::new();
        r.by_ref().take(len).read_to_end(&mut payload)?;
        if payload.len() as u64 != len {
            return Err(SnapshotError::Io(std::io::ErrorKind::UnexpectedEof.into()));
        }
        let mut digest = [0u8; 32];
        r.read_exact(&mut digest)?;
        if Sha256::digest(&payload).as_slice() != digest {
            return Err(SnapshotError::Checksum);
        }
        Ok(bincode::deserialize(&payload)?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Snapshot, SnapshotError> {
        Snapshot::from_reader(bytes)
    }

    pub fn save(&self, path: &Path) -> Result<String, SnapshotError> {
        let bytes = self.to_bytes();
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&bytes)?;
        w.flush()?;
        Ok(checksum_of(&bytes))
    }

    pub fn load(path: &Path) -> Result<Snapshot, SnapshotError> {
        Snapshot::from_reader(BufReader::new(File::open(path)?))
    }

    /// Hex SHA-256 of the serialized payload.
    pub fn checksum(&self) -> String {
        checksum_of(&self.to_bytes())
    }
}

fn checksum_of(bytes: &[u8]) -> String {
    bytes[bytes.len() - 32..].iter().map(|b| format!("{b:02x}")).collect()
}
