//! Structured check records and their CSV/JSON serialisation.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Whether a failing check fails the run (`Hard`) or only annotates it (`Soft`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Hard,
    Soft,
}

/// One verified (or refuted) statement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// Stable identifier `module.check`; each identifier is produced by a single module.
    pub reference: String,
    #[serde(with = "float_repr")]
    pub observed: f64,
    pub criterion: String,
    pub pass: bool,
    pub kind: Kind,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub manifold: String,
    pub records: Vec<CheckRecord>,
    pub notes: Vec<String>,
    /// Grid resolutions, tolerances and similar run metadata.
    pub provenance: BTreeMap<String, String>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, manifold: impl Into<String>) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            manifold: manifold.into(),
            ..Default::default()
        }
    }

    pub fn check(
        &mut self,
        kind: Kind,
        reference: &str,
        name: impl Into<String>,
        observed: f64,
        criterion: impl Into<String>,
        pass: bool,
    ) -> bool {
        self.records.push(CheckRecord {
            name: name.into(),
            reference: reference.to_string(),
            observed,
            criterion: criterion.into(),
            pass,
            kind,
        });
        pass
    }

    pub fn hard(&mut self, reference: &str, name: impl Into<String>, observed: f64, criterion: impl Into<String>, pass: bool) -> bool {
        self.check(Kind::Hard, reference, name, observed, criterion, pass)
    }

    pub fn soft(&mut self, reference: &str, name: impl Into<String>, observed: f64, criterion: impl Into<String>, pass: bool) -> bool {
        self.check(Kind::Soft, reference, name, observed, criterion, pass)
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.provenance.insert(key.to_string(), value.to_string());
    }

    pub fn merge(&mut self, other: ExperimentReport) {
        self.records.extend(other.records);
        self.notes.extend(other.notes);
        for (k, v) in other.provenance {
            self.provenance.entry(k).or_insert(v);
        }
    }

    /// True when every hard record passed.
    pub fn hard_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass || r.kind == Kind::Soft)
    }

    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn find(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialisation")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub const CSV_HEADER: &'static str = "experiment,manifold,name,reference,observed,criterion,pass,kind";

    /// Records only, one per line, with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        self.append_csv_rows(&mut out);
        out
    }

    pub fn append_csv_rows(&self, out: &mut String) {
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                csv_field(&self.experiment),
                csv_field(&self.manifold),
                csv_field(&r.name),
                csv_field(&r.reference),
                fmt_num(r.observed),
                csv_field(&r.criterion),
                r.pass,
                match r.kind {
                    Kind::Hard => "hard",
                    Kind::Soft => "soft",
                }
            );
        }
    }

    /// One line per record: `PASS|FAIL [kind] name observed (criterion)`.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            let _ = writeln!(
                s,
                "{} [{}] {}/{}: {} ({})",
                if r.pass { "PASS" } else { "FAIL" },
                match r.kind {
                    Kind::Hard => "hard",
                    Kind::Soft => "soft",
                },
                self.experiment,
                r.name,
                fmt_num(r.observed),
                r.criterion
            );
        }
        s
    }
}

/// Shortest round-trip representation; deterministic across runs.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Column-oriented numeric table written as CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| fmt_num(v)).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    /// Parse a numeric column back (used by the plotter).
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| parse_num(&r[idx])).collect())
    }

    pub fn from_csv(s: &str) -> Option<Self> {
        let mut lines = s.lines();
        let columns: Vec<String> = lines.next()?.split(',').map(|c| c.to_string()).collect();
        let rows = lines
            .filter(|l| !l.is_empty())
            .map(|l| l.split(',').map(|c| c.to_string()).collect())
            .collect();
        Some(Table { columns, rows })
    }
}

pub fn parse_num(s: &str) -> f64 {
    match s {
        "inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        "true" => 1.0,
        "false" => 0.0,
        _ => s.parse().unwrap_or(f64::NAN),
    }
}

mod float_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::fmt_num(*x))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(match Repr::deserialize(d)? {
            Repr::Num(v) => v,
            Repr::Text(t) => super::parse_num(&t),
        })
    }
}
