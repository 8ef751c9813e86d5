use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::day::Day;

/// Malformed user input: query targets, dates, ASNs.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InputError {
    #[error("invalid date {0:?}, expected YYYYMMDD")]
    BadDate(String),
    #[error("invalid IP address or prefix {0:?}")]
    BadTarget(String),
    #[error("invalid AS number {0:?}")]
    BadAsn(String),
    #[error("empty query")]
    Empty,
    #[error("unexpected trailing input {0:?}")]
    Trailing(String),
}

/// A single input file could not be ingested. Never fatal to a build.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}: unrecognized AS2ORG layout")]
    UnknownLayout(PathBuf),
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("no usable prefix-to-AS files found")]
    NoPfx2AsFiles,
    #[error("empty date range {from}..={to}")]
    EmptyDateRange { from: Day, to: Day },
    #[error("no AS2ORG snapshots to build timelines from")]
    NoAs2OrgSnapshots,
    #[error("snapshot dates must strictly increase: {previous} then {next}")]
    UnorderedSnapshots { previous: Day, next: Day },
    #[error("replay out of order: {day} inserted after {latest}")]
    OutOfOrder { day: Day, latest: Day },
    #[error("trie is sealed")]
    Sealed,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a snapshot file")]
    BadMagic,
    #[error("unsupported snapshot version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("snapshot checksum mismatch")]
    Checksum,
    #[error("snapshot decode: {0}")]
    Decode(#[from] bincode::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}
