//! Report emission: CSV for row data, JSON for suite reports. Both carry a
//! header block with the config hash, the seed and the tolerance set, and
//! both are byte-stable for a fixed seed: no timestamps, no map iteration,
//! floats printed through the shortest round-trip formatter.

use serde::Serialize;

use finsler_core::tol;

#[derive(Debug, Clone, Serialize)]
pub struct ReportHeader {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    /// Pinned consistency tolerances, fixed order.
    pub tolerances: Vec<(String, f64)>,
}

impl ReportHeader {
    pub fn new(
        command: &str,
        config_hash: &str,
        seed: u64,
        samples: usize,
        tolerance: f64,
    ) -> ReportHeader {
        let tolerances = [
            ("gamma_symmetry", tol::GAMMA_SYMMETRY),
            ("compatibility", tol::COMPATIBILITY),
            ("rik_symmetry", tol::RIK_SYMMETRY),
            ("numata_spread", tol::NUMATA_SPREAD),
            ("numata_match", tol::NUMATA_MATCH),
            ("bridge_routes", tol::BRIDGE_ROUTES),
            ("constant_k", tol::CONSTANT_K),
            ("cocycle", tol::COCYCLE),
            ("fd_audit", tol::FD_AUDIT),
        ]
        .iter()
        .map(|(n, v)| (n.to_string(), *v))
        .collect();
        ReportHeader {
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            samples,
            tolerance,
            tolerances,
        }
    }
}

/// Decimal text for a cell; `None` prints as an empty field.
pub fn cell(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

/// CSV with `#`-prefixed header lines before the column row.
pub fn to_csv(header: &ReportHeader, columns: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# finsler {} report\n", header.command));
    out.push_str(&format!("# config_hash = {}\n", header.config_hash));
    out.push_str(&format!("# seed = {}\n", header.seed));
    out.push_str(&format!("# samples = {}\n", header.samples));
    out.push_str(&format!("# tolerance = {}\n", header.tolerance));
    for (name, value) in &header.tolerances {
        out.push_str(&format!("# tol_{name} = {value}\n"));
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(columns).expect("in-memory csv");
    for row in rows {
        wtr.write_record(row).expect("in-memory csv");
    }
    out.push_str(&String::from_utf8(wtr.into_inner().expect("csv flush")).expect("csv utf-8"));
    out
}

#[derive(Serialize)]
struct JsonReport<'a, T: Serialize> {
    header: &'a ReportHeader,
    rows: &'a [T],
}

/// Pretty JSON document with a trailing newline.
pub fn to_json<T: Serialize>(header: &ReportHeader, rows: &[T]) -> String {
    let mut s =
        serde_json::to_string_pretty(&JsonReport { header, rows }).expect("report serialization");
    s.push('\n');
    s
}

/// Write to the path, or to stdout when no path is given.
pub fn emit(text: &str, out: Option<&str>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    }
}
