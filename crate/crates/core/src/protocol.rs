//! The line protocol spoken by the whois frontend, independent of any
//! transport. `query_file` reuses [`answer_query`] so offline and online
//! answers are byte-identical.

use crate::error::InputError;
use crate::lookup::{Engine, LookupQuery};
use crate::output::{render, OutputFormat};
use crate::prefix::Family;

pub const GOODBYE: &str = "# goodbye";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Interactive,
    Bulk,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Limits {
    pub max_line_len: usize,
    pub max_bulk_lines: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_line_len: 1024,
            max_bulk_lines: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionState {
    pub mode: Mode,
    pub output_format: OutputFormat,
    pub lines_processed: u64,
    bulk_lines: u64,
}

impl Default for SessionState {
    fn default() -> Self {
        SessionState {
            mode: Mode::Interactive,
            output_format: OutputFormat::JsonShort,
            lines_processed: 0,
            bulk_lines: 0,
        }
    }
}

/// Text to send back for one input line. `close` asks the transport to end
/// the connection after writing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Reply {
    pub text: String,
    pub close: bool,
}

impl Reply {
    fn text(text: String) -> Reply {
        Reply { text, close: false }
    }

    fn error(reason: impl std::fmt::Display) -> Reply {
        Reply::text(format!("# ERROR: {reason}\n"))
    }
}

pub fn banner(engine: Option<&Engine>, contact: &str) -> String {
    let mut out = String::new();
    out.push_str("# This is the historic IP to AS mapping service\n");
    out.push_str(&format!("# Contact: <{contact}>\n"));
    match engine {
        Some(e) => {
            out.push_str(&format!(
                "# Trie Status: READY - loaded {} IPv4 and {} IPv6 prefixes\n",
                e.prefix_count(Family::V4),
                e.prefix_count(Family::V6)
            ));
            out.push_str(&format!(
                "# AS2Org Status: {} AS and {} organisations loaded\n",
                e.timelines.as_count(),
                e.timelines.org_count()
            ));
        }
        None => {
            out.push_str("# Trie Status: LOADING - no prefixes available yet\n");
            out.push_str("# AS2Org Status: LOADING\n");
        }
    }
    out.push_str("# Enter HELP to get basic usage information\n");
    out.push_str(&format!("# NOTICE: OUTPUT FORMAT: {}\n", OutputFormat::JsonShort.name()));
    out.push_str(if engine.is_some() { "# READY\n" } else { "# LOADING\n" });
    out
}

pub fn help_text(engine: Option<&Engine>) -> String {
    let newest = engine
        .and_then(Engine::newest_day)
        .map(|d| d.to_string())
        .unwrap_or_else(|| "unknown".into());
    format!(
        "# Usage: <ip-or-prefix> [YYYYMMDD]\n\
         #   Returns the most specific announced prefix covering the address on\n\
         #   that date, its origin ASes and their organizations.\n\
         #   Without a date the newest imported snapshot ({newest}) is used.\n\
         # Bulk mode: send 'begin', one query per line, then 'end'.\n\
         #   Bulk answers are one JSON object per line, in request order.\n\
         # 'format verbose' / 'format short' switches the JSON schema.\n\
         # Lines starting with '#' are comments.\n"
    )
}

/// Parses `<target> [YYYYMMDD]`, defaulting the date to the newest snapshot.
pub fn parse_query(line: &str, engine: &Engine) -> Result<LookupQuery, InputError> {
    let mut tokens = line.split_whitespace();
    let target = tokens.next().ok_or(InputError::Empty)?;
    let date = tokens.next();
    if let Some(extra) = tokens.next() {
        return Err(InputError::Trailing(extra.to_string()));
    }
    match date {
        Some(date) => LookupQuery::parse(target, date),
        None => {
            let qdate = engine
                .newest_day()
                .ok_or_else(|| InputError::BadDate("no snapshot date available".into()))?;
            Ok(LookupQuery {
                target: crate::prefix::parse_target(target)?,
                qdate,
            })
        }
    }
}

/// Answers one query line. `pretty` selects the interactive rendering.
pub fn answer_query(engine: &Engine, line: &str, format: OutputFormat, pretty: bool) -> Result<String, InputError> {
    let query = parse_query(line, engine)?;
    Ok(render(&engine.lookup(&query), format, pretty))
}

/// Offline twin of a bulk-mode line: `None` for blank and comment lines
/// and for the `begin`/`end` framing, an `# ERROR:` line for bad input,
/// otherwise one compact JSON line. Returned text carries no trailing
/// newline.
pub fn bulk_answer(engine: &Engine, line: &str, format: OutputFormat) -> Option<String> {
    let line = line.trim();
    if line.is_empty()
        || line.starts_with('#')
        || line.eq_ignore_ascii_case("begin")
        || line.eq_ignore_ascii_case("end")
    {
        return None;
    }
    Some(match answer_query(engine, line, format, false) {
        Ok(json) => json,
        Err(e) => format!("# ERROR: {e}"),
    })
}

impl SessionState {
    pub fn handle_line(&mut self, line: &str, engine: Option<&Engine>, limits: &Limits) -> Reply {
        self.lines_processed += 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return Reply::default();
        }
        if line.len() > limits.max_line_len {
            return Reply::error(format!("line exceeds {} bytes", limits.max_line_len));
        }
        let keyword = line.to_ascii_lowercase();
        match keyword.as_str() {
            "help" => return Reply::text(help_text(engine)),
            "begin" => {
                if self.mode == Mode::Bulk {
                    return Reply::error("already in bulk mode");
                }
                self.mode = Mode::Bulk;
                self.bulk_lines = 0;
                return Reply::default();
            }
            "end" => {
                if self.mode != Mode::Bulk {
                    return Reply::error("'end' without 'begin'");
                }
                self.mode = Mode::Interactive;
                return Reply {
                    text: format!("{GOODBYE}\n"),
                    close: true,
                };
            }
            "format short" | "format json-short" => {
                self.output_format = OutputFormat::JsonShort;
                return Reply::text(format!("# OUTPUT FORMAT: {}\n", self.output_format.name()));
            }
            "format verbose" | "format json-verbose" => {
                self.output_format = OutputFormat::JsonVerbose;
                return Reply::text(format!("# OUTPUT FORMAT: {}\n", self.output_format.name()));
            }
            _ => {}
        }
        if self.mode == Mode::Bulk {
            self.bulk_lines += 1;
            if self.bulk_lines > limits.max_bulk_lines {
                self.mode = Mode::Interactive;
                return Reply {
                    text: format!(
                        "# ERROR: bulk batch limit of {} lines exceeded\n{GOODBYE}\n",
                        limits.max_bulk_lines
                    ),
                    close: true,
                };
            }
        }
        let Some(engine) = engine else {
            return Reply::error("the service is still loading its dataset, please retry later");
        };
        match answer_query(engine, line, self.output_format, self.mode == Mode::Interactive) {
            Ok(json) => Reply::text(json + "\n"),
            Err(e) => Reply::error(e),
        }
    }
}
