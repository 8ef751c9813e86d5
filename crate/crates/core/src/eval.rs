//! Disagreement between historic attributions and a reference table of
//! current attributions, per /24 (IPv4) or /48 (IPv6) unit and month.
//!
//! A unit agrees only when both AS sets are exactly equal; a subset is a
//! disagreement. Units missing from either side are counted as
//! uncomparable and excluded from the percentage.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{self, BufRead};

use ipnet::IpNet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asn::parse_asn;
use crate::day::Day;
use crate::error::InputError;
use crate::lookup::Engine;
use crate::prefix::{parse_target, Family};

/// Days of the month whose joined state represents the month.
pub const SAMPLE_DAYS: [u32; 3] = [1, 14, 28];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Month {
    pub year: i32,
    pub month: u32,
}

impl Month {
    /// Accepts `YYYYMM` or a full `YYYYMMDD` date.
    pub fn parse(s: &str) -> Result<Month, InputError> {
        let s = s.trim();
        let day = match s.len() {
            6 => Day::parse_compact(&format!("{s}01"))?,
            _ => Day::parse_compact(s)?,
        };
        Ok(Month {
            year: day.year(),
            month: day.month(),
        })
    }

    pub fn sample_days(self) -> Vec<Day> {
        SAMPLE_DAYS
            .iter()
            .filter_map(|&d| Day::from_ymd(self.year, self.month, d))
            .collect()
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}{:02}", self.year, self.month)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Granularity {
    pub v4: u8,
    pub v6: u8,
}

impl Default for Granularity {
    fn default() -> Self {
        Granularity {
            v4: Family::V4.unit_len(),
            v6: Family::V6.unit_len(),
        }
    }
}

impl Granularity {
    pub fn unit_of(&self, net: &IpNet) -> IpNet {
        let len = match Family::of(net) {
            Family::V4 => self.v4,
            Family::V6 => self.v6,
        };
        IpNet::new(net.network(), len.min(net.prefix_len()))
            .expect("unit length within family")
            .trunc()
    }
}

/// Current attribution per unit, e.g. exported from a bulk whois service.
#[derive(Debug, Clone, Default)]
pub struct ReferenceTable {
    units: HashMap<IpNet, BTreeSet<u32>>,
}

impl ReferenceTable {
    /// Reads `unit<TAB>asn[,asn...]` lines (`|` or spaces also separate the
    /// columns, and `_` or spaces also separate ASNs). Units given as bare addresses
    /// or finer prefixes are widened to the granularity; repeated units
    /// accumulate.
    pub fn parse<R: BufRead>(reader: R, granularity: Granularity) -> io::Result<(ReferenceTable, u64)> {
        let mut table = ReferenceTable::default();
        let mut malformed = 0;
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match parse_reference_line(line) {
                Ok((net, asns)) => table
                    .units
                    .entry(granularity.unit_of(&net))
                    .or_default()
                    .extend(asns),
                Err(_) => malformed += 1,
            }
        }
        Ok((table, malformed))
    }

    pub fn insert(&mut self, unit: IpNet, asns: impl IntoIterator<Item = u32>) {
        self.units.entry(unit).or_default().extend(asns);
    }

    pub fn get(&self, unit: &IpNet) -> Option<&BTreeSet<u32>> {
        self.units.get(unit).filter(|s| !s.is_empty())
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

fn parse_reference_line(line: &str) -> Result<(IpNet, Vec<u32>), InputError> {
    let (unit, rest) = line
        .split_once(|c: char| c == '|' || c.is_whitespace())
        .ok_or_else(|| InputError::BadTarget(line.to_string()))?;
    let net = parse_target(unit)?;
    let asns = rest
        .split([',', '_', ' ', '\t', '|'])
        .filter(|s| !s.trim().is_empty())
        .map(parse_asn)
        .collect::<Result<Vec<_>, _>>()?;
    Ok((net, asns))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalQuery {
    pub target: IpNet,
    pub period: Month,
}

impl EvalQuery {
    /// Parses `<target> <YYYYMM|YYYYMMDD>`.
    pub fn parse(line: &str) -> Result<EvalQuery, InputError> {
        let mut tokens = line.split_whitespace();
        let target = parse_target(tokens.next().ok_or(InputError::Empty)?)?;
        let period = Month::parse(tokens.next().ok_or(InputError::BadDate(String::new()))?)?;
        if let Some(extra) = tokens.next() {
            return Err(InputError::Trailing(extra.to_string()));
        }
        Ok(EvalQuery { target, period })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TupleCount {
    pub reference: Vec<u32>,
    pub historic: Vec<u32>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodReport {
    pub period: String,
    pub compared: u64,
    pub disagreeing: u64,
    pub uncomparable: u64,
    pub percent: f64,
    /// Disagreeing units per (reference, historic) AS-set pair, most frequent first.
    pub tuples: Vec<TupleCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DisagreementReport {
    pub periods: Vec<PeriodReport>,
}

impl DisagreementReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("period\tcompared\tdisagreeing\tuncomparable\tpercent\n");
        for p in &self.periods {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.4}\n",
                p.period, p.compared, p.disagreeing, p.uncomparable, p.percent
            ));
        }
        out
    }

    /// `period, reference ASes, historic ASes, count` rows for plotting.
    pub fn tuples_tsv(&self) -> String {
        let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        let mut out = String::from("period\treference\thistoric\tcount\n");
        for p in &self.periods {
            for t in &p.tuples {
                out.push_str(&format!("{}\t{}\t{}\t{}\n", p.period, join(&t.reference), join(&t.historic), t.count));
            }
        }
        out
    }
}

#[derive(Default)]
struct Tally {
    compared: u64,
    disagreeing: u64,
    uncomparable: u64,
    tuples: BTreeMap<(Vec<u32>, Vec<u32>), u64>,
}

enum Outcome {
    Agree,
    Disagree(Vec<u32>, Vec<u32>),
    Uncomparable,
}

/// Compares, per (month, unit), the union of the historic joined-state AS
/// sets of every queried address in the unit against the reference set.
pub fn evaluate_disagreement(
    engine: &Engine,
    reference: &ReferenceTable,
    queries: &[EvalQuery],
    granularity: Granularity,
) -> DisagreementReport {
    let mut units: BTreeMap<(Month, IpNet), BTreeSet<IpNet>> = BTreeMap::new();
    for q in queries {
        units
            .entry((q.period, granularity.unit_of(&q.target)))
            .or_default()
            .insert(q.target);
    }
    let outcomes: Vec<(Month, Outcome)> = units
        .par_iter()
        .map(|((month, unit), targets)| {
            let days = month.sample_days();
            let mut historic = BTreeSet::new();
            let mut found = false;
            for target in targets {
                let joined = engine.lookup_joined(target, &days);
                found |= joined.is_found();
                historic.extend(joined.asns);
            }
            let outcome = match reference.get(unit) {
                Some(reference) if found && !historic.is_empty() => {
                    if *reference == historic {
                        Outcome::Agree
                    } else {
                        Outcome::Disagree(reference.iter().copied().collect(), historic.into_iter().collect())
                    }
                }
                _ => Outcome::Uncomparable,
            };
            (*month, outcome)
        })
        .collect();

    let mut per_month: BTreeMap<Month, Tally> = BTreeMap::new();
    for (month, outcome) in outcomes {
        let entry = per_month.entry(month).or_default();
        match outcome {
            Outcome::Agree => entry.compared += 1,
            Outcome::Disagree(r, h) => {
                entry.compared += 1;
                entry.disagreeing += 1;
                *entry.tuples.entry((r, h)).or_default() += 1;
            }
            Outcome::Uncomparable => entry.uncomparable += 1,
        }
    }
    let periods = per_month
        .into_iter()
        .map(|(month, Tally { compared, disagreeing, uncomparable, tuples })| {
            let mut tuples: Vec<TupleCount> = tuples
                .into_iter()
                .map(|((reference, historic), count)| TupleCount {
                    reference,
                    historic,
                    count,
                })
                .collect();
            tuples.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.cmp(b)));
            PeriodReport {
                period: month.to_string(),
                compared,
                disagreeing,
                uncomparable,
                percent: if compared == 0 {
                    0.0
                } else {
                    100.0 * disagreeing as f64 / compared as f64
                },
                tuples,
            }
        })
        .collect();
    DisagreementReport { periods }
}
