//! Competitive-ratio report rows.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;

/// Column order of the report CSV.
pub const REPORT_COLUMNS: [&str; 16] = [
    "instance_id",
    "generator",
    "params",
    "algorithm",
    "seed",
    "k",
    "alg_nw",
    "opt_nw",
    "fw_gap",
    "competitive_ratio",
    "lambda_star",
    "mu_star",
    "bound",
    "bound_satisfied",
    "wall_time_ms",
    "status",
];

/// Which way a theoretical bound points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    /// The ratio must not exceed this value.
    Upper(f64),
    /// The ratio must be at least this value.
    Lower(f64),
}

impl Bound {
    pub fn value(&self) -> f64 {
        match *self {
            Bound::Upper(b) | Bound::Lower(b) => b,
        }
    }

    pub fn satisfied_by(&self, ratio: f64) -> bool {
        match *self {
            Bound::Upper(b) => ratio <= b,
            Bound::Lower(b) => ratio >= b,
        }
    }
}

/// `4 ln(4 lambda^2 N^3)`: the finite bound on Half-and-Half's ratio when run with `lambda >= lambda*`.
pub fn half_and_half_bound(lambda: f64, num_agents: usize) -> f64 {
    let n = num_agents as f64;
    4.0 * (4.0 * lambda * lambda * n * n * n).ln()
}

/// `(n - 1) / e`: Myopic Greedy's ratio on the staircase instance of size `n` is at least this.
pub fn staircase_bound(n: usize) -> f64 {
    (n as f64 - 1.0) / std::f64::consts::E
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub instance_id: String,
    pub generator: String,
    pub params: String,
    pub algorithm: String,
    pub seed: Option<u64>,
    pub k: Option<u32>,
    pub alg_nw: f64,
    pub opt_nw: f64,
    pub fw_gap: f64,
    pub competitive_ratio: f64,
    pub lambda_star: f64,
    pub mu_star: f64,
    pub bound: Option<f64>,
    pub bound_satisfied: Option<bool>,
    pub wall_time_ms: Option<f64>,
    pub status: String,
}

impl ReportRow {
    /// Fills `bound` and `bound_satisfied` from the row's own ratio.
    pub fn with_bound(mut self, bound: Option<Bound>) -> Self {
        self.bound = bound.map(|b| b.value());
        self.bound_satisfied = bound.map(|b| b.satisfied_by(self.competitive_ratio));
        self
    }
}

pub struct ReportWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ReportWriter<W> {
    /// Writes the header immediately so an empty report is still a valid CSV.
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        inner.write_record(REPORT_COLUMNS)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, row: &ReportRow) -> Result<()> {
        self.inner.serialize(row)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| anyhow::anyhow!("flushing report: {}", e.error()))
    }
}

/// The whole report as a string.
pub fn render(rows: &[ReportRow]) -> Result<String> {
    let mut w = ReportWriter::new(Vec::new())?;
    for row in rows {
        w.write(row)?;
    }
    Ok(String::from_utf8(w.finish()?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ReportRow {
        ReportRow {
            instance_id: "abc".into(),
            generator: "hard-table2".into(),
            params: "n=3".into(),
            algorithm: "myopic".into(),
            seed: None,
            k: Some(2),
            alg_nw: 0.5,
            opt_nw: 1.0,
            fw_gap: 0.0,
            competitive_ratio: 2.0,
            lambda_star: 91.0,
            mu_star: 81.0,
            bound: None,
            bound_satisfied: None,
            wall_time_ms: None,
            status: "ok".into(),
        }
    }

    #[test]
    fn header_only_when_empty() {
        assert_eq!(render(&[]).unwrap(), format!("{}\n", REPORT_COLUMNS.join(",")));
    }

    #[test]
    fn row_layout() {
        let text = render(&[row().with_bound(Some(Bound::Lower(staircase_bound(3))))]).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert_eq!(line, "abc,hard-table2,n=3,myopic,,2,0.5,1.0,0.0,2.0,91.0,81.0,0.7357588823428847,true,,ok");
    }

    #[test]
    fn params_with_separators_are_quoted() {
        let mut r = row();
        r.params = "a,b".into();
        assert!(render(&[r]).unwrap().contains("\"a,b\""));
    }

    #[test]
    fn bounds() {
        assert!(Bound::Upper(2.0).satisfied_by(2.0));
        assert!(!Bound::Lower(2.0).satisfied_by(1.9));
        assert!((half_and_half_bound(1.0, 2) - 4.0 * 32f64.ln()).abs() < 1e-12);
        assert!((staircase_bound(5) - 1.4715177646857693).abs() < 1e-12);
    }
}
