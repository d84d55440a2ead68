//! The aggregated result table and its CSV form.

use std::io::{Read, Write};
use std::path::Path;

use arh_core::metrics::ErrorRecord;
use serde::{Deserialize, Serialize};

use crate::BenchError;

pub const COLUMNS: [&str; 11] =
    ["scenario", "method", "n", "k_n", "f_num", "f_den", "mean_err", "median_err", "mean_ub", "failures", "wall_ms"];

/// One (scenario, method, n) cell. Empty optionals are written as empty
/// fields; `f_num` and the error columns are empty when the cell was aborted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub method: String,
    pub n: usize,
    pub k_n: Option<usize>,
    pub f_num: Option<usize>,
    pub f_den: usize,
    pub mean_err: Option<f64>,
    pub median_err: Option<f64>,
    pub mean_ub: Option<f64>,
    pub failures: usize,
    pub wall_ms: Option<f64>,
}

impl ResultRow {
    pub fn f_value(&self) -> Option<f64> {
        self.f_num.map(|k| k as f64 / self.f_den as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.method) {
                out.push(r.method.clone());
            }
        }
        out
    }

    pub fn row(&self, method: &str, n: usize) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.method == method && r.n == n)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), BenchError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(COLUMNS)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, BenchError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header != COLUMNS {
            return Err(BenchError::Config(format!("unexpected csv header {header:?}")));
        }
        let rows = r.deserialize().collect::<Result<Vec<ResultRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn save(&self, path: &Path) -> Result<(), BenchError> {
        let f = std::fs::File::create(path).map_err(|e| BenchError::Io(path.to_path_buf(), e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let f = std::fs::File::open(path).map_err(|e| BenchError::Io(path.to_path_buf(), e))?;
        Self::read_csv(f)
    }
}

/// Per-replication records as CSV: `n,replication,method,k_n,error_norm,exceeded,ub`.
pub fn write_records<W: Write>(records: &[ErrorRecord], out: W) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["n", "replication", "method", "k_n", "error_norm", "exceeded", "ub"])?;
    for r in records {
        let k = if r.k_n == 0 { String::new() } else { r.k_n.to_string() };
        let ub = r.aux.get("ub").map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            r.n.to_string(),
            r.replication.to_string(),
            r.method.clone(),
            k,
            r.error_norm.to_string(),
            r.exceeded.to_string(),
            ub,
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ResultRow {
        ResultRow {
            scenario: "scenario2-desk".into(),
            method: "bosq".into(),
            n: 2000,
            k_n: Some(7),
            f_num: Some(3),
            f_den: 100,
            mean_err: Some(0.1 + 0.2),
            median_err: Some(1.0 / 3.0),
            mean_ub: None,
            failures: 0,
            wall_ms: None,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(ResultTable::default().to_csv_string(), format!("{}\n", COLUMNS.join(",")));
    }

    #[test]
    fn one_row_round_trip() {
        let t = ResultTable { rows: vec![row()] };
        let text = t.to_csv_string();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().ends_with(",,0,"));
        assert_eq!(ResultTable::read_csv(text.as_bytes()).unwrap(), t);
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(ResultTable::read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
