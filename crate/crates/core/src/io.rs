//! CSV ingestion and report output.
//!
//! Two layouts are read: WIDE (one row per subject, one column per occasion)
//! and LONG (one row per subject and occasion). Groups and subjects keep the
//! order of their first appearance. The missing token applies to value
//! fields only, so a group called `NA` is an ordinary label.
//!
//! Ordinal scores are read as their numeric codes. Every procedure in this
//! crate depends on the data only through ranks, so any order-preserving
//! coding of the categories gives identical results.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bootstrap::TestReport;
use crate::contrasts::ContrastSpec;
use crate::data::{GroupData, IncompleteDataset};
use crate::error::{Error, Result};
use crate::harness::{SimulationResult, TestKind};
use crate::numerics::Matrix;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Wide,
    Long,
}

impl FromStr for TableFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wide" => Ok(TableFormat::Wide),
            "long" => Ok(TableFormat::Long),
            other => Err(Error::Schema(format!("unknown table format `{other}`"))),
        }
    }
}

/// Column layout of a dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSchema {
    pub format: TableFormat,
    pub group: String,
    pub subject: String,
    /// WIDE only. Empty means every column other than group and subject.
    pub occasions: Vec<String>,
    /// LONG only.
    pub occasion: String,
    /// LONG only.
    pub value: String,
    pub missing: String,
}

impl Default for TableSchema {
    fn default() -> Self {
        Self::wide()
    }
}

impl TableSchema {
    pub fn wide() -> Self {
        Self {
            format: TableFormat::Wide,
            group: "group".into(),
            subject: "subject".into(),
            occasions: Vec::new(),
            occasion: "occasion".into(),
            value: "value".into(),
            missing: "NA".into(),
        }
    }

    pub fn long() -> Self {
        Self {
            format: TableFormat::Long,
            ..Self::wide()
        }
    }
}

/// A dataset together with the labels it was read with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub group_labels: Vec<String>,
    pub subject_ids: Vec<Vec<String>>,
    pub occasion_labels: Vec<String>,
    pub data: IncompleteDataset,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Schema(format!("column `{name}` not found")))
}

fn parse_value(field: &str, missing: &str, row: usize, column: &str) -> Result<Option<f64>> {
    if field == missing {
        return Ok(None);
    }
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("`{field}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("`{field}` is not finite"),
        });
    }
    Ok(Some(v))
}

fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Parse {
            row: p.line() as usize,
            column: String::new(),
            message: e.to_string(),
        },
        None => Error::Io(e.to_string()),
    }
}

/// Groups in order of first appearance, each with subjects in order of first
/// appearance.
#[derive(Default)]
struct Collector {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    subjects: Vec<Vec<String>>,
    subject_index: Vec<HashMap<String, usize>>,
    rows: Vec<Vec<Vec<Option<f64>>>>,
    seen: Vec<Vec<Vec<bool>>>,
}

impl Collector {
    /// Returns (group, subject, newly created).
    fn slot(&mut self, group: &str, subject: &str, d: usize) -> (usize, usize, bool) {
        let g = *self.index.entry(group.to_string()).or_insert_with(|| {
            self.labels.push(group.to_string());
            self.subjects.push(Vec::new());
            self.subject_index.push(HashMap::new());
            self.rows.push(Vec::new());
            self.seen.push(Vec::new());
            self.labels.len() - 1
        });
        if let Some(&k) = self.subject_index[g].get(subject) {
            return (g, k, false);
        }
        let k = self.subjects[g].len();
        self.subjects[g].push(subject.to_string());
        self.subject_index[g].insert(subject.to_string(), k);
        self.rows[g].push(vec![None; d]);
        self.seen[g].push(vec![false; d]);
        (g, k, true)
    }

    fn finish(self, d: usize, occasion_labels: Vec<String>) -> Result<LabeledDataset> {
        if self.labels.is_empty() {
            return Err(Error::Schema("no data rows".into()));
        }
        let groups = self
            .rows
            .iter()
            .map(|r| GroupData::from_rows(d, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(LabeledDataset {
            group_labels: self.labels,
            subject_ids: self.subjects,
            occasion_labels,
            data: IncompleteDataset::new(d, groups)?,
        })
    }
}

/// Reads a dataset from CSV text.
pub fn parse_dataset(reader: impl Read, schema: &TableSchema) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let gcol = column(&headers, &schema.group)?;
    let scol = column(&headers, &schema.subject)?;
    match schema.format {
        TableFormat::Wide => {
            let occ: Vec<usize> = if schema.occasions.is_empty() {
                (0..headers.len()).filter(|&c| c != gcol && c != scol).collect()
            } else {
                schema
                    .occasions
                    .iter()
                    .map(|n| column(&headers, n))
                    .collect::<Result<_>>()?
            };
            if occ.is_empty() {
                return Err(Error::Schema("no occasion columns".into()));
            }
            let d = occ.len();
            let labels = occ.iter().map(|&c| headers[c].to_string()).collect();
            let mut col = Collector::default();
            for rec in rdr.records() {
                let rec = rec.map_err(csv_err)?;
                let row = rec.position().map_or(0, |p| p.line() as usize);
                let (g, k, fresh) = col.slot(&rec[gcol], &rec[scol], d);
                if !fresh {
                    return Err(Error::Parse {
                        row,
                        column: schema.subject.clone(),
                        message: format!("subject `{}` repeated in group `{}`", &rec[scol], &rec[gcol]),
                    });
                }
                for (j, &c) in occ.iter().enumerate() {
                    col.rows[g][k][j] = parse_value(&rec[c], &schema.missing, row, &headers[c])?;
                }
            }
            col.finish(d, labels)
        }
        TableFormat::Long => {
            let ocol = column(&headers, &schema.occasion)?;
            let vcol = column(&headers, &schema.value)?;
            // occasions are only known after the whole file is read
            let mut cells: Vec<(String, String, usize, Option<f64>, usize)> = Vec::new();
            for rec in rdr.records() {
                let rec = rec.map_err(csv_err)?;
                let row = rec.position().map_or(0, |p| p.line() as usize);
                let occasion: usize = rec[ocol].parse().ok().filter(|&o| o >= 1).ok_or_else(|| Error::Parse {
                    row,
                    column: schema.occasion.clone(),
                    message: format!("`{}` is not an occasion number ≥ 1", &rec[ocol]),
                })?;
                let v = parse_value(&rec[vcol], &schema.missing, row, &schema.value)?;
                cells.push((rec[gcol].to_string(), rec[scol].to_string(), occasion, v, row));
            }
            let d = cells.iter().map(|c| c.2).max().unwrap_or(0);
            let mut present = vec![false; d];
            for c in &cells {
                present[c.2 - 1] = true;
            }
            if let Some(j) = present.iter().position(|p| !p) {
                return Err(Error::Schema(format!("occasions must be contiguous 1..{d}; occasion {} is absent", j + 1)));
            }
            let mut col = Collector::default();
            for (group, subject, occasion, v, row) in cells {
                let (g, k, _) = col.slot(&group, &subject, d);
                let j = occasion - 1;
                if col.seen[g][k][j] {
                    return Err(Error::Parse {
                        row,
                        column: schema.occasion.clone(),
                        message: format!("occasion {occasion} repeated for subject `{subject}` in group `{group}`"),
                    });
                }
                col.seen[g][k][j] = true;
                col.rows[g][k][j] = v;
            }
            col.finish(d, (1..=d).map(|j| j.to_string()).collect())
        }
    }
}

pub fn read_dataset(path: impl AsRef<Path>, schema: &TableSchema) -> Result<LabeledDataset> {
    parse_dataset(File::open(path)?, schema)
}

/// Writes a dataset in the given layout; the result reads back identically.
pub fn write_dataset(out: impl Write, data: &LabeledDataset, schema: &TableSchema) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let fmt = |v: Option<f64>| v.map_or_else(|| schema.missing.clone(), |x| x.to_string());
    let d = data.data.occasions();
    match schema.format {
        TableFormat::Wide => {
            let occ: Vec<String> = if schema.occasions.is_empty() {
                data.occasion_labels.clone()
            } else {
                schema.occasions.clone()
            };
            if occ.len() != d {
                return Err(Error::Schema(format!("{} occasion columns for {d} occasions", occ.len())));
            }
            let mut header = vec![schema.group.clone(), schema.subject.clone()];
            header.extend(occ);
            w.write_record(&header).map_err(io)?;
            for (i, label) in data.group_labels.iter().enumerate() {
                let g = data.data.group(i);
                for (k, id) in data.subject_ids[i].iter().enumerate() {
                    let mut rec = vec![label.clone(), id.clone()];
                    rec.extend(g.row(k).iter().map(|&v| fmt(v)));
                    w.write_record(&rec).map_err(io)?;
                }
            }
        }
        TableFormat::Long => {
            w.write_record([&schema.group, &schema.subject, &schema.occasion, &schema.value])
                .map_err(io)?;
            for (i, label) in data.group_labels.iter().enumerate() {
                let g = data.data.group(i);
                for (k, id) in data.subject_ids[i].iter().enumerate() {
                    for j in 0..d {
                        w.write_record([label.clone(), id.clone(), (j + 1).to_string(), fmt(g.get(k, j))])
                            .map_err(io)?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Contrast matrix from headerless CSV, one contrast row per line.
pub fn parse_contrast(reader: impl Read, label: &str) -> Result<ContrastSpec> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let vals = rec
            .iter()
            .enumerate()
            .map(|(c, f)| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    row,
                    column: (c + 1).to_string(),
                    message: format!("`{f}` is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(vals);
    }
    let cols = rows.first().map(Vec::len).ok_or_else(|| Error::Schema("empty contrast file".into()))?;
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Schema("contrast rows differ in length".into()));
    }
    let c = Matrix::from_fn(rows.len(), cols, |r, k| rows[r][k]);
    ContrastSpec::custom(label, c)
}

pub fn read_contrast(path: impl AsRef<Path>) -> Result<ContrastSpec> {
    let path = path.as_ref();
    parse_contrast(File::open(path)?, &format!("custom:{}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub groups: Vec<String>,
    pub group_sizes: Vec<usize>,
    pub occasions: usize,
    pub observed: usize,
}

impl DesignSummary {
    pub fn of(data: &LabeledDataset) -> Self {
        Self {
            groups: data.group_labels.clone(),
            group_sizes: data.data.group_sizes(),
            occasions: data.data.occasions(),
            observed: data.data.observed(),
        }
    }
}

/// One cell of the p-value table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub test: TestKind,
    pub p: Option<f64>,
    pub reject: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisResult {
    #[serde(flatten)]
    pub report: TestReport,
    pub decisions: Vec<Decision>,
}

/// The document printed by the `test` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutput {
    pub schema_version: u32,
    pub alpha: f64,
    pub design: DesignSummary,
    pub results: Vec<HypothesisResult>,
}

impl TestOutput {
    pub fn new(design: DesignSummary, alpha: f64, reports: Vec<TestReport>) -> Self {
        let results = reports
            .into_iter()
            .map(|report| {
                let decisions = TestKind::ALL
                    .iter()
                    .filter_map(|&t| {
                        let s = report.get(t.statistic())?;
                        let p = if t.is_bootstrap() { s.p_bootstrap } else { s.p_asymptotic };
                        Some(Decision {
                            test: t,
                            p,
                            reject: p.map(|p| p <= alpha),
                        })
                    })
                    .collect();
                HypothesisResult { report, decisions }
            })
            .collect();
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            alpha,
            design,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// p-value table: rows are hypotheses, columns the test procedures, four
    /// decimals.
    pub fn to_table(&self) -> String {
        let tests: Vec<TestKind> = TestKind::ALL
            .iter()
            .copied()
            .filter(|t| self.results.iter().any(|r| r.decisions.iter().any(|d| d.test == *t)))
            .collect();
        let names: Vec<&str> = self.results.iter().map(|r| r.report.hypothesis.as_str()).collect();
        let w0 = names.iter().map(|n| n.chars().count()).max().unwrap_or(0).max("hypothesis".len());
        let mut out = format!("{:<w0$}", "hypothesis");
        for t in &tests {
            out.push_str(&format!("  {:>8}", t.label()));
        }
        out.push('\n');
        for r in &self.results {
            out.push_str(&format!("{:<w0$}", r.report.hypothesis));
            for t in &tests {
                let cell = r
                    .decisions
                    .iter()
                    .find(|d| d.test == *t)
                    .and_then(|d| d.p)
                    .map_or_else(|| "-".to_string(), |p| format!("{p:.4}"));
                out.push_str(&format!("  {cell:>8}"));
            }
            out.push('\n');
        }
        for r in &self.results {
            for w in &r.report.warnings {
                out.push_str(&format!("warning [{}]: {w}\n", r.report.hypothesis));
            }
        }
        out
    }
}

#[derive(Serialize)]
struct RecordRow<'a> {
    cell: usize,
    hypothesis: &'a str,
    zeta: f64,
    replication: usize,
    seed: u64,
    attempts: usize,
    p_wts: Option<f64>,
    p_ats: Option<f64>,
    p_wts_boot: Option<f64>,
    p_ats_boot: Option<f64>,
    p_mats_boot: Option<f64>,
    error: Option<&'a str>,
}

/// Long-format summary table.
pub fn write_summary_csv(out: impl Write, result: &SimulationResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in &result.summary {
        w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per replication, hypothesis and shift.
pub fn write_records_csv(out: impl Write, result: &SimulationResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &result.records {
        w.serialize(RecordRow {
            cell: r.cell,
            hypothesis: r.hypothesis.as_str(),
            zeta: r.zeta,
            replication: r.replication,
            seed: r.seed,
            attempts: r.attempts,
            p_wts: r.pvalues.wts,
            p_ats: r.pvalues.ats,
            p_wts_boot: r.pvalues.wts_boot,
            p_ats_boot: r.pvalues.ats_boot,
            p_mats_boot: r.pvalues.mats_boot,
            error: r.error.as_deref(),
        })
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn simulation_json(result: &SimulationResult) -> String {
    serde_json::to_string_pretty(result).expect("result serializes")
}

/// Writes `summary.csv`, `replications.csv` and `result.json` into `dir`.
pub fn write_simulation(dir: impl AsRef<Path>, result: &SimulationResult) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_summary_csv(File::create(dir.join("summary.csv"))?, result)?;
    write_records_csv(File::create(dir.join("replications.csv"))?, result)?;
    std::fs::write(dir.join("result.json"), simulation_json(result))?;
    Ok(())
}
