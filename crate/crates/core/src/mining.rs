//! Traffic data plumbing: CSV ingestion, min-max scaling, clustering items,
//! cluster re-indexing, supervised windowing, synthetic fixtures and the
//! forecast report.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::item::DataItem;
use crate::lgp::{correlation_coefficient, Case, Program};

/// Position of each field in the supervised input vector.
pub const INPUT_NAMES: [&str; 4] = ["index", "requests", "bytes", "cluster"];
pub const REQUESTS_INPUT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Index,
    Requests,
    Bytes,
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Column::Index => "index",
            Column::Requests => "requests",
            Column::Bytes => "bytes",
        })
    }
}

impl FromStr for Column {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "index" => Ok(Column::Index),
            "requests" => Ok(Column::Requests),
            "bytes" => Ok(Column::Bytes),
            _ => Err(Error::Config(format!("unknown column `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Traffic,
    LabeledTraffic,
    /// Accepts either header.
    Any,
}

impl Schema {
    fn accepts(self, header: &[&str]) -> Option<bool> {
        let plain = header == ["index", "requests", "bytes"];
        let labeled = header == ["index", "requests", "bytes", "label"];
        match self {
            Schema::Traffic if plain => Some(false),
            Schema::LabeledTraffic if labeled => Some(true),
            Schema::Any if plain || labeled => Some(labeled),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsRow {
    pub index: i64,
    pub requests: f64,
    pub bytes: f64,
    pub label: Option<u32>,
    pub cluster: Option<usize>,
    /// Index before any re-indexing.
    pub original_index: i64,
    /// Set by [`normalize`] for rows inside the training period.
    pub train: bool,
}

impl TsRow {
    pub fn new(index: i64, requests: f64, bytes: f64) -> Self {
        Self {
            index,
            requests,
            bytes,
            label: None,
            cluster: None,
            original_index: index,
            train: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub min: f64,
    pub max: f64,
}

impl ColumnStats {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        values.fold(
            Self {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            },
            |s, v| Self {
                min: s.min.min(v),
                max: s.max.max(v),
            },
        )
    }

    pub fn scale(&self, x: f64) -> f64 {
        if self.max > self.min {
            (x - self.min) / (self.max - self.min)
        } else {
            0.5
        }
    }

    pub fn unscale(&self, x: f64) -> f64 {
        if self.max > self.min {
            x * (self.max - self.min) + self.min
        } else {
            self.min
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    pub requests: ColumnStats,
    pub bytes: ColumnStats,
    pub train_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeriesDataset {
    pub rows: Vec<TsRow>,
    /// Present once the dataset has been normalized.
    pub stats: Option<NormStats>,
}

impl TimeSeriesDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let labeled = self.rows.iter().any(|r| r.label.is_some());
        let mut out = String::from(if labeled {
            "index,requests,bytes,label\n"
        } else {
            "index,requests,bytes\n"
        });
        for r in &self.rows {
            let _ = write!(out, "{},{},{}", r.index, r.requests, r.bytes);
            if labeled {
                out.push(',');
                if let Some(l) = r.label {
                    let _ = write!(out, "{l}");
                }
            }
            out.push('\n');
        }
        out
    }
}

fn parse_cell<T: FromStr>(path: &Path, row: usize, name: &str, cell: &str) -> Result<T> {
    cell.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        row,
        message: format!("{name}: cannot parse `{cell}`"),
    })
}

fn parse_finite(path: &Path, row: usize, name: &str, cell: &str) -> Result<f64> {
    let v: f64 = parse_cell(path, row, name, cell)?;
    if !v.is_finite() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row,
            message: format!("{name}: non-finite value `{cell}`"),
        });
    }
    Ok(v)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        path: path.to_path_buf(),
        row,
        message: e.to_string(),
    }
}

/// Reads `index,requests,bytes[,label]`. Row numbers in errors are file
/// line numbers, the header being line 1.
pub fn load_csv(path: &Path, schema: Schema) -> Result<TimeSeriesDataset> {
    let mut reader = csv_reader(path)?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let labeled = schema.accepts(&names).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        row: 1,
        message: format!("header `{}` does not match the expected schema", names.join(",")),
    })?;
    let mut rows: Vec<TsRow> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let index: i64 = parse_cell(path, line, "index", &record[0])?;
        let mut row = TsRow::new(
            index,
            parse_finite(path, line, "requests", &record[1])?,
            parse_finite(path, line, "bytes", &record[2])?,
        );
        if labeled && !record[3].trim().is_empty() {
            row.label = Some(parse_cell(path, line, "label", &record[3])?);
        }
        if let Some(prev) = rows.last() {
            if index <= prev.index {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: line,
                    message: format!("index {index} does not increase past {}", prev.index),
                });
            }
        }
        rows.push(row);
    }
    Ok(TimeSeriesDataset { rows, stats: None })
}

/// Min-max scales `requests` and `bytes` with statistics from the first
/// `ceil(train_fraction * N)` rows and marks those rows as training rows.
/// Later rows may fall outside `[0, 1]`.
pub fn normalize(dataset: &TimeSeriesDataset, train_fraction: f64) -> Result<TimeSeriesDataset> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("cannot normalize an empty dataset".into()));
    }
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1], got {train_fraction}"
        )));
    }
    let n = dataset.len();
    let n_train = ((train_fraction * n as f64).ceil() as usize).clamp(1, n);
    let head = &dataset.rows[..n_train];
    let stats = NormStats {
        requests: ColumnStats::of(head.iter().map(|r| r.requests)),
        bytes: ColumnStats::of(head.iter().map(|r| r.bytes)),
        train_rows: n_train,
    };
    let rows = dataset
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| TsRow {
            requests: stats.requests.scale(r.requests),
            bytes: stats.bytes.scale(r.bytes),
            train: i < n_train,
            ..r.clone()
        })
        .collect();
    Ok(TimeSeriesDataset {
        rows,
        stats: Some(stats),
    })
}

pub fn denormalize(dataset: &TimeSeriesDataset) -> Result<TimeSeriesDataset> {
    let stats = require_stats(dataset)?;
    let rows = dataset
        .rows
        .iter()
        .map(|r| TsRow {
            requests: stats.requests.unscale(r.requests),
            bytes: stats.bytes.unscale(r.bytes),
            ..r.clone()
        })
        .collect();
    Ok(TimeSeriesDataset { rows, stats: None })
}

fn require_stats(dataset: &TimeSeriesDataset) -> Result<NormStats> {
    dataset
        .stats
        .ok_or_else(|| Error::Precondition("dataset is not normalized".into()))
}

fn rank_feature(i: usize, n: usize) -> f64 {
    if n > 1 {
        i as f64 / (n - 1) as f64
    } else {
        0.5
    }
}

/// One clustering item per row. Features are clamped to `[0, 1]`; the
/// `index` column contributes the normalized row rank.
pub fn items_from_dataset(dataset: &TimeSeriesDataset, columns: &[Column]) -> Result<Vec<DataItem>> {
    if columns.is_empty() {
        return Err(Error::Config("no feature columns selected".into()));
    }
    require_stats(dataset)?;
    let n = dataset.len();
    Ok(dataset
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let features = columns
                .iter()
                .map(|c| match c {
                    Column::Index => rank_feature(i, n),
                    Column::Requests => r.requests,
                    Column::Bytes => r.bytes,
                })
                .map(|v| v.clamp(0.0, 1.0))
                .collect();
            DataItem::new(features, r.label, i)
        })
        .collect())
}

/// Fills the cluster column from `assignment` (one id per row, in row
/// order), stably sorts rows by `(cluster, original index)` and rewrites
/// `index` to the new rank.
pub fn reindex_with_clusters(dataset: &TimeSeriesDataset, assignment: &[usize]) -> Result<TimeSeriesDataset> {
    if assignment.len() != dataset.len() {
        return Err(Error::InvalidArgument(format!(
            "assignment covers {} of {} rows",
            assignment.len(),
            dataset.len()
        )));
    }
    let mut rows: Vec<TsRow> = dataset
        .rows
        .iter()
        .zip(assignment)
        .map(|(r, &c)| TsRow {
            cluster: Some(c),
            ..r.clone()
        })
        .collect();
    rows.sort_by_key(|r| (r.cluster, r.original_index));
    for (rank, r) in rows.iter_mut().enumerate() {
        r.index = rank as i64;
    }
    Ok(TimeSeriesDataset {
        rows,
        stats: dataset.stats,
    })
}

/// Restores the original time order, keeping the rewritten index and
/// cluster columns.
pub fn chronological(dataset: &TimeSeriesDataset) -> TimeSeriesDataset {
    let mut rows = dataset.rows.clone();
    rows.sort_by_key(|r| r.original_index);
    TimeSeriesDataset {
        rows,
        stats: dataset.stats,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedCases {
    pub cases: Vec<Case>,
    /// `(input row, target row)` per case.
    pub rows: Vec<(usize, usize)>,
    /// True when both rows of the case lie in the training period.
    pub train: Vec<bool>,
    pub horizon: usize,
}

impl SupervisedCases {
    pub fn split(&self) -> (Vec<Case>, Vec<Case>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (c, &t) in self.cases.iter().zip(&self.train) {
            if t {
                train.push(c.clone());
            } else {
                test.push(c.clone());
            }
        }
        (train, test)
    }
}

/// Case `t` reads row `t` (`[index rank, requests, bytes, cluster]`, all
/// normalized) and targets the requests of row `t + h`.
pub fn make_supervised(dataset: &TimeSeriesDataset, horizon: usize) -> Result<SupervisedCases> {
    require_stats(dataset)?;
    let n = dataset.len();
    if horizon == 0 || n <= horizon {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} needs at least {} rows, have {n}",
            horizon + 1
        )));
    }
    let max_cluster = dataset.rows.iter().filter_map(|r| r.cluster).max().unwrap_or(0).max(1);
    let index_span = n.max(2) - 1;
    let mut out = SupervisedCases {
        cases: Vec::with_capacity(n - horizon),
        rows: Vec::with_capacity(n - horizon),
        train: Vec::with_capacity(n - horizon),
        horizon,
    };
    for t in 0..n - horizon {
        let r = &dataset.rows[t];
        let target = &dataset.rows[t + horizon];
        let cluster = r.cluster.map_or(0.0, |c| c as f64 / max_cluster as f64);
        let index = r.index as f64 / index_span as f64;
        out.cases.push(Case::new(vec![index, r.requests, r.bytes, cluster], target.requests));
        out.rows.push((t, t + horizon));
        out.train.push(r.train && target.train);
    }
    Ok(out)
}

/// `k` labelled Gaussian blobs in two dimensions. Centers sit on a
/// `ceil(sqrt(k))`-wide lattice spanning `[0.2, 0.8]`.
pub fn synth_gaussian_classes<R: Rng + ?Sized>(
    k: usize,
    per_class: usize,
    spread: f64,
    rng: &mut R,
) -> Result<Vec<DataItem>> {
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one class".into()));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid spread {spread}")));
    }
    let g = (k as f64).sqrt().ceil() as usize;
    let coord = |j: usize| if g > 1 { 0.2 + 0.6 * j as f64 / (g - 1) as f64 } else { 0.5 };
    let mut items = Vec::with_capacity(k * per_class);
    for class in 0..k {
        let center = [coord(class % g), coord(class / g)];
        for _ in 0..per_class {
            let features = center
                .iter()
                .map(|&c| {
                    let z: f64 = StandardNormal.sample(rng);
                    (c + spread * z).clamp(0.0, 1.0)
                })
                .collect();
            let idx = items.len();
            items.push(DataItem::new(features, Some(class as u32), idx));
        }
    }
    Ok(items)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Hourly,
    Daily,
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hourly" => Ok(Granularity::Hourly),
            "daily" => Ok(Granularity::Daily),
            _ => Err(Error::Config(format!("unknown granularity `{s}`"))),
        }
    }
}

pub const BASE_REQUESTS: f64 = 1000.0;
pub const DAILY_AMPLITUDE: f64 = 2000.0;
pub const PEAK_HOUR: f64 = 14.0;
pub const WEEKDAY_GAIN: f64 = 1.3;
pub const BYTES_PER_REQUEST: f64 = 14_500.0;
pub const BYTES_OFFSET: f64 = 250_000.0;

/// Noise-free hourly request level. Hour 0 is Monday 00:00.
///
/// `(base + amp * s^2) * gain`, `s = (1 + cos(2 pi (hod - 14) / 24)) / 2`,
/// where `gain` applies Monday to Friday only.
pub fn traffic_level(hour: usize) -> f64 {
    let hod = (hour % 24) as f64;
    let dow = (hour / 24) % 7;
    let s = 0.5 * (1.0 + (2.0 * std::f64::consts::PI * (hod - PEAK_HOUR) / 24.0).cos());
    let gain = if dow < 5 { WEEKDAY_GAIN } else { 1.0 };
    (BASE_REQUESTS + DAILY_AMPLITUDE * s * s) * gain
}

/// Synthetic traffic for `weeks` weeks starting on a Monday.
///
/// Hourly requests are [`traffic_level`] plus Gaussian noise with standard
/// deviation `noise * BASE_REQUESTS`; bytes are an affine function of the
/// noise-free level with independent noise of the same relative size. The
/// daily series sums each day's hours.
pub fn synth_traffic<R: Rng + ?Sized>(
    weeks: usize,
    granularity: Granularity,
    noise: f64,
    rng: &mut R,
) -> Result<TimeSeriesDataset> {
    if weeks == 0 {
        return Err(Error::InvalidArgument("need at least one week".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid noise level {noise}")));
    }
    let hours = weeks * 7 * 24;
    let sd = noise * BASE_REQUESTS;
    let hourly: Vec<(f64, f64)> = (0..hours)
        .map(|h| {
            let level = traffic_level(h);
            let zr: f64 = StandardNormal.sample(rng);
            let zb: f64 = StandardNormal.sample(rng);
            let requests = (level + sd * zr).max(0.0);
            let bytes = (BYTES_PER_REQUEST * (level + sd * zb) + BYTES_OFFSET).max(0.0);
            (requests, bytes)
        })
        .collect();
    let values: Vec<(f64, f64)> = match granularity {
        Granularity::Hourly => hourly,
        Granularity::Daily => hourly
            .chunks(24)
            .map(|day| day.iter().fold((0.0, 0.0), |a, v| (a.0 + v.0, a.1 + v.1)))
            .collect(),
    };
    Ok(TimeSeriesDataset {
        rows: values
            .into_iter()
            .enumerate()
            .map(|(i, (r, b))| TsRow::new(i as i64, r, b))
            .collect(),
        stats: None,
    })
}

/// Items as `item_id,label,f0,f1,...`; an unknown label is left empty.
pub fn items_to_csv(items: &[DataItem]) -> String {
    let f = items.first().map_or(0, |i| i.features.len());
    let mut out = String::from("item_id,label");
    for j in 0..f {
        let _ = write!(out, ",f{j}");
    }
    out.push('\n');
    for (id, item) in items.iter().enumerate() {
        let _ = write!(out, "{id},");
        if let Some(l) = item.true_label {
            let _ = write!(out, "{l}");
        }
        for v in &item.features {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn load_items_csv(path: &Path) -> Result<Vec<DataItem>> {
    let mut reader = csv_reader(path)?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() < 3 || &header[0] != "item_id" || &header[1] != "label" {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 1,
            message: "expected header `item_id,label,f0,...`".into(),
        });
    }
    let mut items = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let id: usize = parse_cell(path, line, "item_id", &record[0])?;
        if id != items.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: line,
                message: format!("item ids must count up from 0, found {id}"),
            });
        }
        let label = match record[1].trim() {
            "" => None,
            s => Some(parse_cell(path, line, "label", s)?),
        };
        let features = (2..record.len())
            .map(|j| {
                let v = parse_finite(path, line, &header[j], &record[j])?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        row: line,
                        message: format!("{}: feature {v} outside [0, 1]", &header[j]),
                    });
                }
                Ok(v)
            })
            .collect::<Result<_>>()?;
        items.push(DataItem::new(features, label, id));
    }
    Ok(items)
}

/// Cases as named input columns followed by `target`.
pub fn cases_to_csv(cases: &[Case], input_names: &[&str]) -> String {
    let mut out = input_names.join(",");
    out.push_str(",target\n");
    for c in cases {
        for v in &c.inputs {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", c.target);
    }
    out
}

/// Reads a cases CSV; returns the input column names and the cases.
pub fn load_cases_csv(path: &Path) -> Result<(Vec<String>, Vec<Case>)> {
    let mut reader = csv_reader(path)?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let n = header.len();
    if n < 2 || &header[n - 1] != "target" {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 1,
            message: "expected input columns followed by `target`".into(),
        });
    }
    let names: Vec<String> = header.iter().take(n - 1).map(str::to_owned).collect();
    let mut cases = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let values = (0..n)
            .map(|j| parse_finite(path, line, &header[j], &record[j]))
            .collect::<Result<Vec<f64>>>()?;
        cases.push(Case::new(values[..n - 1].to_vec(), values[n - 1]));
    }
    Ok((names, cases))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub rmse_train: f64,
    pub rmse_test: f64,
    pub cc_test: f64,
    pub rmse_persistence: f64,
    pub seed: u64,
    pub config_digest: String,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report fields serialize");
        s.push('\n');
        s
    }
}

fn predictions(program: &Program, cases: &[Case]) -> Result<Vec<f64>> {
    let compiled = program.compile()?;
    let mut regs = compiled.registers(program);
    cases.iter().map(|c| compiled.run(&mut regs, &c.inputs)).collect()
}

fn rmse(pred: &[f64], cases: &[Case]) -> f64 {
    let sum: f64 = pred.iter().zip(cases).map(|(p, c)| (p - c.target).powi(2)).sum();
    (sum / cases.len() as f64).sqrt()
}

/// Train and test RMSE, test correlation (0 when undefined) and the test
/// RMSE of predicting `inputs[persistence_input]`. Seed and digest are left
/// for the caller.
pub fn report(program: &Program, train: &[Case], test: &[Case], persistence_input: usize) -> Result<Report> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidArgument("train and test sets must be non-empty".into()));
    }
    if persistence_input >= program.n_inputs {
        return Err(Error::InvalidArgument(format!(
            "persistence input {persistence_input} out of range"
        )));
    }
    let train_pred = predictions(program, train)?;
    let test_pred = predictions(program, test)?;
    let actual: Vec<f64> = test.iter().map(|c| c.target).collect();
    let cc_test = match correlation_coefficient(&test_pred, &actual) {
        Ok(cc) => cc,
        Err(Error::UndefinedCorrelation(_)) => 0.0,
        Err(e) => return Err(e),
    };
    let persistence: Vec<f64> = test.iter().map(|c| c.inputs[persistence_input]).collect();
    Ok(Report {
        rmse_train: rmse(&train_pred, train),
        rmse_test: rmse(&test_pred, test),
        cc_test,
        rmse_persistence: rmse(&persistence, test),
        seed: 0,
        config_digest: String::new(),
    })
}
