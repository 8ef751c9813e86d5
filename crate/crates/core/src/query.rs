//! Offline bulk lookups: the file-driven twin of the bulk protocol.

use std::io::{self, BufRead, Write};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::lookup::Engine;
use crate::output::OutputFormat;
use crate::protocol::bulk_answer;

const CHUNK: usize = 65_536;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QueryStats {
    pub queries: u64,
    pub errors: u64,
    pub elapsed: Duration,
}

impl QueryStats {
    pub fn per_second(&self) -> f64 {
        let secs = self.elapsed.as_secs_f64();
        if secs > 0.0 {
            self.queries as f64 / secs
        } else {
            0.0
        }
    }
}

/// Answers every `<target> [YYYYMMDD]` line of `input`, writing one output
/// line per non-blank input line in input order. Lookups within a chunk
/// run in parallel.
pub fn query_file<R: BufRead, W: Write>(engine: &Engine, input: R, mut output: W, format: OutputFormat) -> io::Result<QueryStats> {
    let start = Instant::now();
    let mut stats = QueryStats::default();
    let mut lines = input.lines();
    loop {
        let chunk: Vec<String> = lines.by_ref().take(CHUNK).collect::<io::Result<_>>()?;
        if chunk.is_empty() {
            break;
        }
        let answers: Vec<Option<String>> = chunk.par_iter().map(|l| bulk_answer(engine, l, format)).collect();
        for answer in answers.into_iter().flatten() {
            if answer.starts_with("# ERROR") {
                stats.errors += 1;
            } else {
                stats.queries += 1;
            }
            output.write_all(answer.as_bytes())?;
            output.write_all(b"\n")?;
        }
    }
    output.flush()?;
    stats.elapsed = start.elapsed();
    Ok(stats)
}
