use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::day::Day;
use crate::ingest::RejectReason;

/// Per-file ingest counts. For a file that parsed, `accepted + rejected +
/// malformed == total`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileReport {
    pub path: PathBuf,
    pub date: Option<Day>,
    pub total: u64,
    pub accepted: u64,
    pub malformed: u64,
    pub rejected: BTreeMap<RejectReason, u64>,
    pub error: Option<String>,
}

impl FileReport {
    pub fn rejected_total(&self) -> u64 {
        self.rejected.values().sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub pfx2as_files: Vec<FileReport>,
    pub as2org_files: Vec<FileReport>,
    pub failed_files: u64,
}

impl BuildReport {
    /// Tab-separated summary, one row per file.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("kind\tdate\tpath\ttotal\taccepted\trejected\tmalformed\terror\n");
        let rows = self
            .pfx2as_files
            .iter()
            .map(|f| ("pfx2as", f))
            .chain(self.as2org_files.iter().map(|f| ("as2org", f)));
        for (kind, f) in rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                kind,
                f.date.map(|d| d.to_string()).unwrap_or_default(),
                f.path.display(),
                f.total,
                f.accepted,
                f.rejected_total(),
                f.malformed,
                f.error.as_deref().unwrap_or(""),
            ));
        }
        out
    }
}
