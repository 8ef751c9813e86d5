//! Python bindings: build or load an index, run lookups and bulk queries,
//! and evaluate disagreement against a reference table.

use std::path::PathBuf;

use histwhois::asn::parse_asn;
use histwhois::eval::{evaluate_disagreement, EvalQuery, Granularity, ReferenceTable};
use histwhois::ingest::FilterPolicy;
use histwhois::output::render;
use histwhois::prefix::Family;
use histwhois::protocol::{bulk_answer, parse_query};
use histwhois::{build_snapshot, BuildConfig, Day, OutputFormat, Snapshot};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_day(s: Option<&str>) -> PyResult<Option<Day>> {
    s.map(|s| Day::parse_compact(s).map_err(value_err)).transpose()
}

fn format_of(verbose: bool) -> OutputFormat {
    if verbose {
        OutputFormat::JsonVerbose
    } else {
        OutputFormat::JsonShort
    }
}

fn json_loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// A sealed, queryable attribution index.
#[pyclass(module = "histwhois", frozen)]
struct Index {
    snapshot: Snapshot,
    report: Option<String>,
}

#[pymethods]
impl Index {
    /// Builds an index from dataset directories.
    #[staticmethod]
    #[pyo3(signature = (as2org, pfx2as_v4=None, pfx2as_v6=None, from_date=None, to_date=None))]
    fn build(
        py: Python<'_>,
        as2org: PathBuf,
        pfx2as_v4: Option<PathBuf>,
        pfx2as_v6: Option<PathBuf>,
        from_date: Option<&str>,
        to_date: Option<&str>,
    ) -> PyResult<Index> {
        let config = BuildConfig {
            pfx2as_v4,
            pfx2as_v6,
            as2org,
            from: parse_day(from_date)?,
            to: parse_day(to_date)?,
            policy: FilterPolicy::default(),
        };
        let (snapshot, report) = py.detach(|| build_snapshot(&config)).map_err(value_err)?;
        Ok(Index {
            snapshot,
            report: Some(report.to_tsv()),
        })
    }

    #[staticmethod]
    fn load(py: Python<'_>, path: PathBuf) -> PyResult<Index> {
        let snapshot = py
            .detach(|| Snapshot::load(&path))
            .map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(Index { snapshot, report: None })
    }

    /// Writes the snapshot and returns its SHA-256 checksum.
    fn save(&self, py: Python<'_>, path: PathBuf) -> PyResult<String> {
        py.detach(|| self.snapshot.save(&path))
            .map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn checksum(&self) -> String {
        self.snapshot.checksum()
    }

    /// Per-file ingest counts as TSV, for freshly built indexes.
    #[getter]
    fn build_report(&self) -> Option<String> {
        self.report.clone()
    }

    #[getter]
    fn newest_day(&self) -> Option<String> {
        self.snapshot.engine.newest_day().map(|d| d.to_string())
    }

    /// `(ipv4, ipv6)` announced prefix counts.
    #[getter]
    fn prefix_counts(&self) -> (usize, usize) {
        let e = &self.snapshot.engine;
        (e.prefix_count(Family::V4), e.prefix_count(Family::V6))
    }

    /// JSON text for one lookup; the date defaults to the newest snapshot.
    #[pyo3(signature = (target, date=None, verbose=false))]
    fn lookup_json(&self, target: &str, date: Option<&str>, verbose: bool) -> PyResult<String> {
        let line = match date {
            Some(d) => format!("{target} {d}"),
            None => target.to_string(),
        };
        let query = parse_query(&line, &self.snapshot.engine).map_err(value_err)?;
        Ok(render(&self.snapshot.engine.lookup(&query), format_of(verbose), false))
    }

    /// Like `lookup_json`, decoded into Python objects.
    #[pyo3(signature = (target, date=None, verbose=false))]
    fn lookup<'py>(&self, py: Python<'py>, target: &str, date: Option<&str>, verbose: bool) -> PyResult<Bound<'py, PyAny>> {
        let text = self.lookup_json(target, date, verbose)?;
        json_loads(py, &text)
    }

    /// Bulk-mode answers, one per non-blank, non-comment line, in order.
    /// Bad lines come back as `# ERROR: ...`.
    #[pyo3(signature = (lines, verbose=false))]
    fn query_lines(&self, py: Python<'_>, lines: Vec<String>, verbose: bool) -> Vec<String> {
        let format = format_of(verbose);
        py.detach(|| {
            lines
                .iter()
                .filter_map(|l| bulk_answer(&self.snapshot.engine, l, format))
                .collect()
        })
    }

    /// Disagreement against a reference table file (`unit<TAB>asns`) for
    /// `"<target> <YYYYMM>"` queries. Returns the report as a dict.
    #[pyo3(signature = (reference, queries, v4_unit=24, v6_unit=48))]
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        reference: PathBuf,
        queries: Vec<String>,
        v4_unit: u8,
        v6_unit: u8,
    ) -> PyResult<Bound<'py, PyAny>> {
        let granularity = Granularity { v4: v4_unit, v6: v6_unit };
        let file = std::fs::File::open(&reference).map_err(|e| PyIOError::new_err(e.to_string()))?;
        let (table, _) = ReferenceTable::parse(std::io::BufReader::new(file), granularity)
            .map_err(|e| PyIOError::new_err(e.to_string()))?;
        let queries = queries
            .iter()
            .map(|q| EvalQuery::parse(q))
            .collect::<Result<Vec<_>, _>>()
            .map_err(value_err)?;
        let engine = &self.snapshot.engine;
        let report = py.detach(|| evaluate_disagreement(engine, &table, &queries, granularity));
        json_loads(py, &serde_json::to_string(&report).map_err(value_err)?)
    }

    fn __repr__(&self) -> String {
        let (v4, v6) = self.prefix_counts();
        format!(
            "Index(v4={v4}, v6={v6}, days={}..{})",
            self.snapshot.meta.first_day, self.snapshot.meta.last_day
        )
    }
}

/// Parses asplain or asdot notation.
#[pyfunction]
#[pyo3(name = "parse_asn")]
fn py_parse_asn(text: &str) -> PyResult<u32> {
    parse_asn(text).map_err(value_err)
}

#[pymodule]
#[pyo3(name = "histwhois")]
fn histwhois_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Index>()?;
    m.add_function(wrap_pyfunction!(py_parse_asn, m)?)?;
    Ok(())
}
