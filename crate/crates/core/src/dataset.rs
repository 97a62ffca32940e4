//! Graph files on disk, synthetic stochastic-block-model graphs and report
//! tables.
//!
//! File formats (UTF-8, `\n` line endings, `.` decimal separator, `#` starts
//! a comment line):
//!
//! * edges: one undirected edge per line, `u<TAB>v`;
//! * features: CSV without header, row `i` holds the `d` values of node `i`;
//! * labels: CSV `node,label`;
//! * splits: CSV `node,split` with `split` one of `train`, `val`, `test`.
//!
//! Label and split files may start with a header line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::{Graph, Splits};
use crate::sampler::rng_from_seed;

/// Paths of the four files describing a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphFiles {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub splits: PathBuf,
}

impl GraphFiles {
    /// `edges.tsv`, `features.csv`, `labels.csv` and `splits.csv` inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        GraphFiles {
            edges: dir.join("edges.tsv"),
            features: dir.join("features.csv"),
            labels: dir.join("labels.csv"),
            splits: dir.join("splits.csv"),
        }
    }
}

fn reader(path: &Path, delimiter: u8) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_error(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Reads every non-empty record, passing its line number along.
fn records(path: &Path, delimiter: u8) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut out = Vec::new();
    for rec in reader(path, delimiter)?.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn field<T: FromStr>(path: &Path, line: u64, rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec
        .get(i)
        .ok_or_else(|| parse_error(path, line, format!("expected at least {} fields", i + 1)))?;
    raw.parse()
        .map_err(|_| parse_error(path, line, format!("cannot parse `{raw}`")))
}

/// Drops a leading header row whose first field is not a node id.
fn skip_header(mut recs: Vec<(u64, csv::StringRecord)>) -> Vec<(u64, csv::StringRecord)> {
    if let Some((_, first)) = recs.first() {
        if first.get(0).is_some_and(|f| f.parse::<usize>().is_err()) {
            recs.remove(0);
        }
    }
    recs
}

/// Loads a graph from its four files. The node count is the number of
/// feature rows and the class count is one more than the largest label.
pub fn load_graph(files: &GraphFiles) -> Result<Graph> {
    let feature_rows = records(&files.features, b',')?;
    let n = feature_rows.len();
    let d = feature_rows.first().map_or(0, |(_, r)| r.len());
    let mut features = Array2::<f64>::zeros((n, d));
    for (i, (line, rec)) in feature_rows.iter().enumerate() {
        if rec.len() != d {
            return Err(parse_error(
                &files.features,
                *line,
                format!("expected {d} columns, found {}", rec.len()),
            ));
        }
        for j in 0..d {
            features[[i, j]] = field(&files.features, *line, rec, j)?;
        }
    }

    let mut edges = Vec::new();
    for (line, rec) in records(&files.edges, b'\t')? {
        let u: usize = field(&files.edges, line, &rec, 0)?;
        let v: usize = field(&files.edges, line, &rec, 1)?;
        edges.push((u, v));
    }

    let mut labels = vec![None; n];
    let mut num_classes = 0;
    for (line, rec) in skip_header(records(&files.labels, b',')?) {
        let node: usize = field(&files.labels, line, &rec, 0)?;
        let label: usize = field(&files.labels, line, &rec, 1)?;
        if node >= n {
            return Err(Error::NodeOutOfRange { node, n });
        }
        labels[node] = Some(label);
        num_classes = num_classes.max(label + 1);
    }

    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in skip_header(records(&files.splits, b',')?) {
        let node: usize = field(&files.splits, line, &rec, 0)?;
        let set = match rec.get(1).unwrap_or("") {
            "train" => &mut train,
            "val" => &mut val,
            "test" => &mut test,
            other => return Err(parse_error(&files.splits, line, format!("unknown split `{other}`"))),
        };
        set.push(node);
    }
    Graph::build(&edges, features, labels, num_classes, Splits::new(train, val, test))
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `g` in the format read by [`load_graph`]. Features use the
/// shortest decimal form that parses back to the same bits.
pub fn save_graph(g: &Graph, files: &GraphFiles) -> Result<()> {
    let mut w = create(&files.edges)?;
    for (u, v) in g.adjacency().edges() {
        writeln!(w, "{u}\t{v}").map_err(io(&files.edges))?;
    }
    w.flush().map_err(io(&files.edges))?;

    let mut w = create(&files.features)?;
    for row in g.features().rows() {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(io(&files.features))?;
    }
    w.flush().map_err(io(&files.features))?;

    let mut w = create(&files.labels)?;
    writeln!(w, "node,label").map_err(io(&files.labels))?;
    for (v, label) in g.labels().iter().enumerate() {
        if let Some(c) = label {
            writeln!(w, "{v},{c}").map_err(io(&files.labels))?;
        }
    }
    w.flush().map_err(io(&files.labels))?;

    let mut w = create(&files.splits)?;
    writeln!(w, "node,split").map_err(io(&files.splits))?;
    let s = g.splits();
    for (name, set) in [("train", &s.train), ("val", &s.val), ("test", &s.test)] {
        for v in set {
            writeln!(w, "{v},{name}").map_err(io(&files.splits))?;
        }
    }
    w.flush().map_err(io(&files.splits))
}

/// Stochastic block model with class-dependent Gaussian features.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmConfig {
    pub n: usize,
    pub classes: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub dim: usize,
    /// Mean offset on the class's own block of feature dimensions.
    pub signal: f64,
    pub noise_sd: f64,
    pub train_fraction: f64,
    pub seed: u64,
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.classes < 2 || self.n < self.classes {
            return fail(format!("need n >= classes >= 2, got n={} classes={}", self.n, self.classes));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.dim == 0 {
            return fail("feature dimension must be positive".into());
        }
        if !(self.signal >= 0.0 && self.signal.is_finite()) {
            return fail(format!("signal must be non-negative, got {}", self.signal));
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return fail(format!("noise_sd must be positive, got {}", self.noise_sd));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        Ok(())
    }

    /// Class of node `v`: contiguous blocks whose sizes differ by at most one.
    pub fn block_of(&self, v: usize) -> usize {
        let base = self.n / self.classes;
        let extra = self.n % self.classes;
        let big = extra * (base + 1);
        if v < big {
            v / (base + 1)
        } else {
            extra + (v - big) / base
        }
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let base = self.n / self.classes;
        let extra = self.n % self.classes;
        (0..self.classes).map(|c| base + usize::from(c < extra)).collect()
    }
}

/// Samples a labeled SBM graph. Every unordered pair is linked independently
/// with `p_in` inside a block and `p_out` across blocks. Class `c` has mean
/// `signal` on feature dims `[c·⌊d/s⌋, (c+1)·⌊d/s⌋)`. A stratified
/// `train_fraction` of each class goes to training, the rest to test.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<Graph> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let block: Vec<usize> = (0..cfg.n).map(|v| cfg.block_of(v)).collect();

    let mut edges = Vec::new();
    for u in 0..cfg.n {
        for v in u + 1..cfg.n {
            let p = if block[u] == block[v] { cfg.p_in } else { cfg.p_out };
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }

    let width = cfg.dim / cfg.classes;
    let noise = Normal::new(0.0, cfg.noise_sd).expect("validated noise_sd");
    let mut features = Array2::<f64>::zeros((cfg.n, cfg.dim));
    for (v, mut row) in features.rows_mut().into_iter().enumerate() {
        let c = block[v];
        for (j, x) in row.iter_mut().enumerate() {
            let mean = if j >= c * width && j < (c + 1) * width { cfg.signal } else { 0.0 };
            *x = mean + noise.sample(&mut rng);
        }
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut start = 0;
    for size in cfg.block_sizes() {
        let mut members: Vec<usize> = (start..start + size).collect();
        members.shuffle(&mut rng);
        let take = ((cfg.train_fraction * size as f64).round() as usize).clamp(1, size.saturating_sub(1).max(1));
        train.extend_from_slice(&members[..take]);
        test.extend_from_slice(&members[take..]);
        start += size;
    }

    let labels = block.into_iter().map(Some).collect();
    Graph::build(&edges, features, labels, cfg.classes, Splits::new(train, vec![], test))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// A table of metric records sharing one header.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReportTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ReportTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        ReportTable {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<S: ToString>(&mut self, row: impl IntoIterator<Item = S>) -> Result<()> {
        let row: Vec<String> = row.into_iter().map(|x| x.to_string()).collect();
        if row.len() != self.header.len() {
            return Err(Error::LengthMismatch {
                expected: self.header.len(),
                found: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    /// Column `name` of every row.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("| {} |\n", self.header.join(" | ")));
        out.push_str(&format!("|{}\n", " --- |".repeat(self.header.len())));
        for row in &self.rows {
            out.push_str(&format!("| {} |\n", row.join(" | ")));
        }
        out
    }
}

pub fn save_report(table: &ReportTable, path: &Path, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_path(path)
                .map_err(|e| csv_io(path, e))?;
            w.write_record(&table.header).map_err(|e| csv_io(path, e))?;
            for row in &table.rows {
                w.write_record(row).map_err(|e| csv_io(path, e))?;
            }
            w.flush().map_err(|e| Error::io(path, e))
        }
        ReportFormat::Markdown => {
            std::fs::write(path, table.to_markdown()).map_err(|e| Error::io(path, e))
        }
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Serialization(format!("{other:?}")),
    }
}

/// Reads a CSV report written by [`save_report`].
pub fn load_report(path: &Path) -> Result<ReportTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut table = ReportTable {
        header,
        rows: Vec::new(),
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        table.rows.push(rec.iter().map(String::from).collect());
    }
    Ok(table)
}
