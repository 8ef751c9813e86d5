//! Historic IP-to-AS and organization attribution.
//!
//! Daily prefix-to-AS aggregates are replayed into a date-aware prefix
//! trie ([`trie`]), quarterly AS-to-organization snapshots are interpolated
//! into continuous timelines ([`timeline`]), and [`lookup::Engine`] answers
//! `(address, date)` queries against both. The [`server`] module exposes
//! the engine over a whois-style TCP line protocol; [`snapshot`],
//! [`query`] and [`eval`] back the operator CLI.

pub mod asn;
pub mod config;
pub mod day;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod lookup;
pub mod output;
pub mod prefix;
pub mod protocol;
pub mod query;
pub mod reserved;
pub mod server;
pub mod snapshot;
pub mod timeline;
pub mod trie;

pub use asn::{OriginKind, Origins};
pub use day::Day;
pub use error::{BuildError, IngestError, InputError, SnapshotError};
pub use lookup::{Engine, JoinedResult, LookupQuery, LookupResult, LookupStatus};
pub use output::OutputFormat;
pub use snapshot::{build_snapshot, BuildConfig, Snapshot};
pub use timeline::As2OrgTimelines;
pub use trie::{TemporalTrie, TrieBuilder};
