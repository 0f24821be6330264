//! Tabular data model: manifests, CSV ingestion, one-hot / min-max encoding
//! and seeded train/test splitting.
//!
//! A dataset keeps a shared handle on the raw (decoded but unscaled) table it
//! came from, so that [`split`] can refit the encoding on the training rows
//! and apply it to the test rows.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

/// Tokens treated as a missing value (compared after trimming).
const MISSING_TOKENS: &[&str] = &["", "?", "NA", "N/A", "NaN", "nan", "null", "NULL"];

pub const TRAIN_FRACTION: f64 = 0.8;
pub const MIN_SPLIT_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtectedSpec {
    pub column: String,
    pub privileged_value: String,
}

/// Describes how to read one dataset CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    /// Relative paths resolve against the manifest's directory.
    pub csv_path: String,
    pub label_column: String,
    pub favorable_value: String,
    pub protected_specs: Vec<ProtectedSpec>,
    #[serde(default)]
    pub categorical_columns: Vec<String>,
    #[serde(default)]
    pub numeric_columns: Vec<String>,
    /// Field separator; a comma when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<char>,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn manifest_error(field: &str, message: impl Into<String>) -> Error {
    Error::Manifest {
        field: field.to_string(),
        message: message.into(),
    }
}

impl DatasetManifest {
    pub fn csv_delimiter(&self) -> Result<u8> {
        match self.delimiter {
            None => Ok(b','),
            Some(c) if c.is_ascii() && c != '"' && c != '\n' => Ok(c as u8),
            Some(c) => Err(manifest_error("delimiter", format!("unsupported delimiter {c:?}"))),
        }
    }

    pub fn resolved_csv_path(&self) -> PathBuf {
        let p = PathBuf::from(&self.csv_path);
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        }
    }

    pub fn protected_names(&self) -> Vec<String> {
        self.protected_specs.iter().map(|p| p.column.clone()).collect()
    }

    fn is_protected(&self, column: &str) -> bool {
        self.protected_specs.iter().any(|p| p.column == column)
    }

    /// Checks the invariants that do not need the CSV.
    pub fn validate_structure(&self) -> Result<()> {
        if self.protected_specs.is_empty() {
            return Err(manifest_error(
                "protected_specs",
                "at least one protected attribute is required",
            ));
        }
        if self.label_column.is_empty() {
            return Err(manifest_error("label_column", "must not be empty"));
        }
        let mut seen = BTreeSet::new();
        for p in &self.protected_specs {
            if !seen.insert(p.column.as_str()) {
                return Err(manifest_error(
                    "protected_specs",
                    format!("protected column `{}` listed twice", p.column),
                ));
            }
            if p.column == self.label_column {
                return Err(manifest_error(
                    "protected_specs",
                    "the label column cannot be protected",
                ));
            }
        }
        let cats: BTreeSet<&str> = self.categorical_columns.iter().map(String::as_str).collect();
        if let Some(both) = self
            .numeric_columns
            .iter()
            .find(|c| cats.contains(c.as_str()))
        {
            return Err(manifest_error(
                "numeric_columns",
                format!("`{both}` is also listed in categorical_columns"),
            ));
        }
        if let Some(c) = self
            .categorical_columns
            .iter()
            .chain(&self.numeric_columns)
            .find(|c| **c == self.label_column)
        {
            return Err(manifest_error(
                "categorical_columns",
                format!("label column `{c}` cannot be a feature"),
            ));
        }
        Ok(())
    }

    /// Checks the manifest against a CSV header.
    pub fn validate_header(&self, header: &[String]) -> Result<()> {
        let cols: BTreeSet<&str> = header.iter().map(String::as_str).collect();
        if !cols.contains(self.label_column.as_str()) {
            return Err(manifest_error(
                "label_column",
                format!("label column not found: `{}`", self.label_column),
            ));
        }
        for p in &self.protected_specs {
            if !cols.contains(p.column.as_str()) {
                return Err(manifest_error(
                    "protected_specs",
                    format!("protected column not found: `{}`", p.column),
                ));
            }
        }
        for (field, list) in [
            ("categorical_columns", &self.categorical_columns),
            ("numeric_columns", &self.numeric_columns),
        ] {
            if let Some(c) = list.iter().find(|c| !cols.contains(c.as_str())) {
                return Err(manifest_error(field, format!("column not found: `{c}`")));
            }
        }
        let declared: BTreeSet<&str> = self
            .categorical_columns
            .iter()
            .chain(&self.numeric_columns)
            .map(String::as_str)
            .collect();
        if let Some(c) = header.iter().find(|c| {
            **c != self.label_column && !self.is_protected(c) && !declared.contains(c.as_str())
        }) {
            return Err(manifest_error(
                "categorical_columns",
                format!("column `{c}` is neither categorical nor numeric"),
            ));
        }
        Ok(())
    }
}

/// Reads and validates a manifest. When the referenced CSV is present its
/// header is validated too; a missing CSV is reported later by [`ingest`].
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| Error::ManifestParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    manifest.base_dir = path.parent().map(Path::to_path_buf);
    manifest.validate_structure()?;
    let csv_path = manifest.resolved_csv_path();
    if csv_path.is_file() {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(manifest.csv_delimiter()?)
            .from_path(&csv_path)?;
        let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        manifest.validate_header(&header)?;
    }
    Ok(manifest)
}

/// A decoded column before scaling.
#[derive(Debug, Clone, PartialEq)]
pub enum RawColumn {
    Numeric { name: String, values: Vec<f64> },
    Categorical { name: String, values: Vec<String> },
    /// Binarized protected attribute, 1 = privileged.
    Protected { name: String, values: Vec<u8> },
}

impl RawColumn {
    pub fn name(&self) -> &str {
        match self {
            RawColumn::Numeric { name, .. }
            | RawColumn::Categorical { name, .. }
            | RawColumn::Protected { name, .. } => name,
        }
    }
}

/// Retained CSV rows with the label and protected columns binarized.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub name: String,
    pub columns: Vec<RawColumn>,
    pub labels: Vec<u8>,
    pub dropped_rows: usize,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    /// Writes the table as CSV. Label and protected columns are written with
    /// the given tokens so the file can be re-ingested with a manifest.
    pub fn write_csv<W: Write>(
        &self,
        out: W,
        label_column: &str,
        label_tokens: (&str, &str),
        protected_tokens: (&str, &str),
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.columns.iter().map(RawColumn::name).collect();
        header.push(label_column);
        w.write_record(&header)?;
        let (fav, unfav) = label_tokens;
        let (priv_tok, unpriv_tok) = protected_tokens;
        for r in 0..self.n_rows() {
            let mut rec: Vec<String> = Vec::with_capacity(header.len());
            for c in &self.columns {
                rec.push(match c {
                    RawColumn::Numeric { values, .. } => format!("{}", values[r]),
                    RawColumn::Categorical { values, .. } => values[r].clone(),
                    RawColumn::Protected { values, .. } => {
                        if values[r] == 1 { priv_tok } else { unpriv_tok }.to_string()
                    }
                });
            }
            rec.push(if self.labels[r] == 1 { fav } else { unfav }.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: PathBuf::from("<csv output>"),
            source,
        })?;
        Ok(())
    }
}

fn is_missing(token: &str) -> bool {
    MISSING_TOKENS.contains(&token)
}

/// Reads the manifest's CSV into a [`RawTable`], dropping rows with missing
/// values in declared columns.
pub fn read_raw(manifest: &DatasetManifest) -> Result<RawTable> {
    manifest.validate_structure()?;
    let path = manifest.resolved_csv_path();
    let file = fs::File::open(&path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .delimiter(manifest.csv_delimiter()?)
        .from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    manifest.validate_header(&header)?;
    let position = |name: &str| header.iter().position(|h| h == name).expect("validated");

    enum Slot {
        Numeric(usize),
        Categorical(usize),
        Protected(usize, String),
    }
    // Feature columns follow CSV header order.
    let mut slots = Vec::new();
    let mut names = Vec::new();
    for h in &header {
        if *h == manifest.label_column {
            continue;
        }
        let idx = position(h);
        if let Some(p) = manifest.protected_specs.iter().find(|p| p.column == *h) {
            slots.push(Slot::Protected(idx, p.privileged_value.clone()));
        } else if manifest.numeric_columns.contains(h) {
            slots.push(Slot::Numeric(idx));
        } else {
            slots.push(Slot::Categorical(idx));
        }
        names.push(h.clone());
    }
    let label_idx = position(&manifest.label_column);

    let mut numeric: Vec<Vec<f64>> = vec![Vec::new(); slots.len()];
    let mut categorical: Vec<Vec<String>> = vec![Vec::new(); slots.len()];
    let mut protected: Vec<Vec<u8>> = vec![Vec::new(); slots.len()];
    let mut labels = Vec::new();
    let mut dropped = 0usize;
    let mut pending_numeric: Vec<(usize, usize, String)> = Vec::new();

    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let label_tok = rec.get(label_idx).unwrap_or("");
        let missing = is_missing(label_tok)
            || slots.iter().any(|s| {
                let i = match s {
                    Slot::Numeric(i) | Slot::Categorical(i) | Slot::Protected(i, _) => *i,
                };
                is_missing(rec.get(i).unwrap_or(""))
            });
        if missing {
            dropped += 1;
            continue;
        }
        let row = labels.len();
        labels.push(u8::from(label_tok == manifest.favorable_value));
        for (k, s) in slots.iter().enumerate() {
            match s {
                Slot::Numeric(i) => {
                    let tok = &rec[*i];
                    match tok.parse::<f64>() {
                        Ok(v) if v.is_finite() => numeric[k].push(v),
                        _ => {
                            pending_numeric.push((k, line + 2, tok.to_string()));
                            numeric[k].push(f64::NAN);
                        }
                    }
                }
                Slot::Categorical(i) => categorical[k].push(rec[*i].to_string()),
                Slot::Protected(i, privileged) => {
                    protected[k].push(u8::from(&rec[*i] == privileged))
                }
            }
        }
        debug_assert_eq!(labels.len(), row + 1);
    }
    if let Some((k, row, token)) = pending_numeric.into_iter().next() {
        return Err(Error::NonNumeric {
            column: names[k].clone(),
            row,
            token,
        });
    }
    if dropped > 0 {
        log::warn!(
            "{}: dropped {dropped} row(s) with missing values",
            manifest.name
        );
    }

    let columns = slots
        .iter()
        .zip(names)
        .enumerate()
        .map(|(k, (s, name))| match s {
            Slot::Numeric(_) => RawColumn::Numeric {
                name,
                values: std::mem::take(&mut numeric[k]),
            },
            Slot::Categorical(_) => RawColumn::Categorical {
                name,
                values: std::mem::take(&mut categorical[k]),
            },
            Slot::Protected(..) => RawColumn::Protected {
                name,
                values: std::mem::take(&mut protected[k]),
            },
        })
        .collect();
    Ok(RawTable {
        name: manifest.name.clone(),
        columns,
        labels,
        dropped_rows: dropped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalEncoding {
    pub column: String,
    pub categories: Vec<String>,
    /// Feature index of each category's one-hot column.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericScaling {
    pub column: String,
    pub min: f64,
    pub max: f64,
    pub index: usize,
}

/// Fitted column encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Encoding {
    pub feature_names: Vec<String>,
    pub encoding_map: Vec<CategoricalEncoding>,
    pub scaling_map: Vec<NumericScaling>,
    /// Protected attribute name and its (binary) feature index.
    pub protected: Vec<(String, usize)>,
}

/// Which feature columns need repair after synthetic interpolation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureLayout {
    pub onehot_groups: Vec<Vec<usize>>,
    pub binary_columns: Vec<usize>,
    pub numeric_columns: Vec<usize>,
}

impl FeatureLayout {
    /// Restores valid one-hot groups (argmax, lowest index on ties) and
    /// rounds binary columns.
    pub fn repair(&self, row: &mut [f64]) {
        for group in &self.onehot_groups {
            let mut best = group[0];
            for &c in &group[1..] {
                if row[c] > row[best] {
                    best = c;
                }
            }
            for &c in group {
                row[c] = if c == best { 1.0 } else { 0.0 };
            }
        }
        for &c in &self.binary_columns {
            row[c] = if row[c] >= 0.5 { 1.0 } else { 0.0 };
        }
    }

    /// Restricts the layout to a column subset, renumbering indices.
    pub fn project(&self, keep: &[usize]) -> FeatureLayout {
        let remap = |c: usize| keep.iter().position(|&k| k == c);
        FeatureLayout {
            onehot_groups: self
                .onehot_groups
                .iter()
                .map(|g| g.iter().filter_map(|&c| remap(c)).collect::<Vec<_>>())
                .filter(|g| !g.is_empty())
                .collect(),
            binary_columns: self.binary_columns.iter().filter_map(|&c| remap(c)).collect(),
            numeric_columns: self.numeric_columns.iter().filter_map(|&c| remap(c)).collect(),
        }
    }
}

impl Encoding {
    /// Fits the encoding on the given rows of a raw table.
    pub fn fit(raw: &RawTable, rows: &[usize]) -> Encoding {
        let mut enc = Encoding::default();
        for col in &raw.columns {
            match col {
                RawColumn::Protected { name, .. } => {
                    enc.protected.push((name.clone(), enc.feature_names.len()));
                    enc.feature_names.push(name.clone());
                }
                RawColumn::Numeric { name, values } => {
                    let (min, max) = rows.iter().map(|&r| values[r]).fold(
                        (f64::INFINITY, f64::NEG_INFINITY),
                        |(lo, hi), v| (lo.min(v), hi.max(v)),
                    );
                    let (min, max) = if rows.is_empty() { (0.0, 0.0) } else { (min, max) };
                    enc.scaling_map.push(NumericScaling {
                        column: name.clone(),
                        min,
                        max,
                        index: enc.feature_names.len(),
                    });
                    enc.feature_names.push(name.clone());
                }
                RawColumn::Categorical { name, values } => {
                    let cats: BTreeSet<&str> = rows.iter().map(|&r| values[r].as_str()).collect();
                    let mut indices = Vec::with_capacity(cats.len());
                    for c in &cats {
                        indices.push(enc.feature_names.len());
                        enc.feature_names.push(format!("{name}={c}"));
                    }
                    enc.encoding_map.push(CategoricalEncoding {
                        column: name.clone(),
                        categories: cats.into_iter().map(str::to_string).collect(),
                        indices,
                    });
                }
            }
        }
        enc
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout {
            onehot_groups: self
                .encoding_map
                .iter()
                .filter(|c| !c.indices.is_empty())
                .map(|c| c.indices.clone())
                .collect(),
            binary_columns: self.protected.iter().map(|(_, i)| *i).collect(),
            numeric_columns: self.scaling_map.iter().map(|s| s.index).collect(),
        }
    }

    /// Encodes the given raw rows. Values outside the fitted range are clipped
    /// to [0, 1]; unseen categories encode as an all-zero group.
    pub fn transform(&self, raw: &RawTable, rows: &[usize]) -> Result<Matrix> {
        let mut x = Matrix::zeros(rows.len(), self.n_features());
        let mut num = self.scaling_map.iter();
        let mut cat = self.encoding_map.iter();
        let mut prot = self.protected.iter();
        for col in &raw.columns {
            match col {
                RawColumn::Protected { name, values } => {
                    let (pname, idx) = prot.next().ok_or_else(|| schema_mismatch(name))?;
                    if pname != name {
                        return Err(schema_mismatch(name));
                    }
                    for (i, &r) in rows.iter().enumerate() {
                        x.set(i, *idx, f64::from(values[r]));
                    }
                }
                RawColumn::Numeric { name, values } => {
                    let s = num.next().ok_or_else(|| schema_mismatch(name))?;
                    if s.column != *name {
                        return Err(schema_mismatch(name));
                    }
                    let span = s.max - s.min;
                    for (i, &r) in rows.iter().enumerate() {
                        let v = if span > 0.0 {
                            ((values[r] - s.min) / span).clamp(0.0, 1.0)
                        } else {
                            0.0
                        };
                        x.set(i, s.index, v);
                    }
                }
                RawColumn::Categorical { name, values } => {
                    let c = cat.next().ok_or_else(|| schema_mismatch(name))?;
                    if c.column != *name {
                        return Err(schema_mismatch(name));
                    }
                    for (i, &r) in rows.iter().enumerate() {
                        if let Ok(k) = c.categories.binary_search(&values[r]) {
                            x.set(i, c.indices[k], 1.0);
                        }
                    }
                }
            }
        }
        Ok(x)
    }
}

fn schema_mismatch(column: &str) -> Error {
    Error::Dimension(format!("encoding does not match raw column `{column}`"))
}

/// Encoded dataset: features in [0, 1], binary labels (1 = favorable) and
/// binary protected attributes (1 = privileged) stored as feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    pub name: String,
    pub x: Matrix,
    pub y: Vec<u8>,
    pub encoding: Encoding,
    source: Option<Arc<RawTable>>,
    row_ids: Vec<usize>,
}

impl TabularDataset {
    /// Encodes `rows` of a raw table, fitting the encoding on them unless one
    /// is supplied.
    pub fn from_raw(
        raw: Arc<RawTable>,
        rows: Vec<usize>,
        encoding: Option<&Encoding>,
    ) -> Result<Self> {
        let encoding = match encoding {
            Some(e) => e.clone(),
            None => Encoding::fit(&raw, &rows),
        };
        let x = encoding.transform(&raw, &rows)?;
        let y = rows.iter().map(|&r| raw.labels[r]).collect();
        Ok(Self {
            name: raw.name.clone(),
            x,
            y,
            encoding,
            source: Some(raw),
            row_ids: rows,
        })
    }

    /// Builds a dataset with no raw source (e.g. oversampled output).
    pub fn from_parts(name: String, x: Matrix, y: Vec<u8>, encoding: Encoding) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "{} rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if x.ncols() != encoding.n_features() {
            return Err(Error::Dimension(format!(
                "{} columns but {} feature names",
                x.ncols(),
                encoding.n_features()
            )));
        }
        let n = y.len();
        Ok(Self {
            name,
            x,
            y,
            encoding,
            source: None,
            row_ids: (0..n).collect(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.encoding.feature_names
    }

    /// Row indices into the raw source table.
    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn source(&self) -> Option<&Arc<RawTable>> {
        self.source.as_ref()
    }

    pub fn protected_names(&self) -> Vec<String> {
        self.encoding.protected.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn protected_index(&self, name: &str) -> Result<usize> {
        self.encoding
            .protected
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, i)| *i)
            .ok_or_else(|| Error::UnknownProtected(name.to_string()))
    }

    /// The protected attribute vector (1 = privileged).
    pub fn protected(&self, name: &str) -> Result<Vec<u8>> {
        let c = self.protected_index(name)?;
        Ok((0..self.n_rows())
            .map(|r| u8::from(self.x.get(r, c) >= 0.5))
            .collect())
    }

    /// All protected vectors keyed by attribute name.
    pub fn protected_map(&self) -> BTreeMap<String, Vec<u8>> {
        self.protected_names()
            .into_iter()
            .map(|n| {
                let v = self.protected(&n).expect("listed");
                (n, v)
            })
            .collect()
    }

    /// Copy with the named protected column replaced.
    pub fn with_protected(&self, name: &str, values: &[u8]) -> Result<Self> {
        let c = self.protected_index(name)?;
        if values.len() != self.n_rows() {
            return Err(Error::Dimension(format!(
                "{} protected values for {} rows",
                values.len(),
                self.n_rows()
            )));
        }
        let mut out = self.clone();
        let col: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
        out.x.set_column(c, &col);
        Ok(out)
    }

    /// Copy with the named protected column flipped (1 <-> 0).
    pub fn with_protected_flipped(&self, name: &str) -> Result<Self> {
        let flipped: Vec<u8> = self.protected(name)?.iter().map(|v| 1 - v).collect();
        self.with_protected(name, &flipped)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            encoding: self.encoding.clone(),
            source: self.source.clone(),
            row_ids: idx.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    pub fn layout(&self) -> FeatureLayout {
        self.encoding.layout()
    }
}

/// Reads and encodes the manifest's CSV. With `fit_encoding_on`, the fitted
/// encoding of that dataset is reused (test-time path).
pub fn ingest(
    manifest: &DatasetManifest,
    fit_encoding_on: Option<&TabularDataset>,
) -> Result<TabularDataset> {
    let raw = Arc::new(read_raw(manifest)?);
    let rows = (0..raw.n_rows()).collect();
    TabularDataset::from_raw(raw, rows, fit_encoding_on.map(|d| &d.encoding))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: TabularDataset,
    pub test: TabularDataset,
    pub seed: u64,
}

/// Seeded 80/20 split. The encoding is refit on the training rows and applied
/// to the test rows.
pub fn split(ds: &TabularDataset, seed: u64) -> Result<SplitPair> {
    let n = ds.n_rows();
    if n < MIN_SPLIT_ROWS {
        return Err(Error::InvalidInput(format!(
            "split needs at least {MIN_SPLIT_ROWS} rows, got {n}"
        )));
    }
    let raw = ds.source.clone().ok_or_else(|| {
        Error::InvalidInput("split requires a dataset backed by a raw table".into())
    })?;
    let mut order: Vec<usize> = ds.row_ids.clone();
    order.shuffle(&mut rng::rng_from_seed(seed));
    let n_train = (n as f64 * TRAIN_FRACTION).floor() as usize;
    let test_rows = order.split_off(n_train);
    let train = TabularDataset::from_raw(raw.clone(), order, None)?;
    let test = TabularDataset::from_raw(raw, test_rows, Some(&train.encoding))?;
    Ok(SplitPair { train, test, seed })
}

/// Parameters of the synthetic biased dataset generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub rows: usize,
    pub bias_strength: f64,
    pub seed: u64,
}

pub const SYNTH_PROTECTED: &str = "group";
pub const SYNTH_LABEL: &str = "label";
/// Features whose distribution depends on the protected attribute.
pub const SYNTH_PA_CORRELATED: &[&str] = &["num_proxy_a", "num_proxy_b", "num_tenure", "cat_region"];
/// Share of privileged rows.
const SYNTH_PRIVILEGED_SHARE: f64 = 0.6;

/// Generates the raw synthetic table.
///
/// Label rates are fixed per group: the top `round(rate * n_group)` rows of a
/// noisy merit score within each group are favorable, with rates
/// `0.5 + bias/2` (privileged) and `0.5 - bias/2` (unprivileged).
pub fn synth_raw(spec: &SynthSpec) -> Result<RawTable> {
    if spec.rows < 20 {
        return Err(Error::InvalidInput(format!(
            "synthetic dataset needs at least 20 rows, got {}",
            spec.rows
        )));
    }
    if !(0.0..=1.0).contains(&spec.bias_strength) {
        return Err(Error::InvalidInput(format!(
            "bias strength {} outside [0, 1]",
            spec.bias_strength
        )));
    }
    let n = spec.rows;
    let mut rng = rng::rng_from_seed(spec.seed);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };

    let mut group = Vec::with_capacity(n);
    let mut merit_latent = Vec::with_capacity(n);
    let mut merit = Vec::with_capacity(n);
    let mut proxy_a = Vec::with_capacity(n);
    let mut proxy_b = Vec::with_capacity(n);
    let mut tenure = Vec::with_capacity(n);
    let mut region = Vec::with_capacity(n);
    let mut grade = Vec::with_capacity(n);
    let mut score = Vec::with_capacity(n);
    let mut uniform = Vec::with_capacity(n);

    let mut urng = rng::stream_rng(spec.seed, 1);
    for _ in 0..n {
        uniform.push(urng.random::<f64>());
    }
    for &u in uniform.iter() {
        let pa = u8::from(u < SYNTH_PRIVILEGED_SHARE);
        let p = f64::from(pa);
        let z = normal();
        group.push(pa);
        merit_latent.push(z);
        merit.push(50.0 + 10.0 * (z + 0.3 * normal()));
        proxy_a.push(40.0 + 8.0 * (p + 0.45 * normal()));
        proxy_b.push(0.5 * z + 0.8 * p + 0.6 * normal());
        tenure.push(5.0 + 2.0 * p + 2.0 * normal());
        let g = z + 0.5 * normal();
        grade.push(
            if g < -0.5 {
                "low"
            } else if g < 0.5 {
                "mid"
            } else {
                "high"
            }
            .to_string(),
        );
        score.push(z + 0.5 * normal());
    }
    for &pa in &group {
        let r = urng.random::<f64>();
        let probs = if pa == 1 { [0.6, 0.25] } else { [0.15, 0.25] };
        region.push(
            if r < probs[0] {
                "north"
            } else if r < probs[0] + probs[1] {
                "south"
            } else {
                "east"
            }
            .to_string(),
        );
    }

    let mut labels = vec![0u8; n];
    for g in [0u8, 1] {
        let rate = if g == 1 {
            0.5 + spec.bias_strength / 2.0
        } else {
            0.5 - spec.bias_strength / 2.0
        };
        let mut members: Vec<usize> = (0..n).filter(|&i| group[i] == g).collect();
        members.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
        let k = (rate * members.len() as f64).round() as usize;
        for &i in &members[..k] {
            labels[i] = 1;
        }
    }

    Ok(RawTable {
        name: format!("synth-{}-{}-{}", spec.rows, spec.bias_strength, spec.seed),
        columns: vec![
            RawColumn::Protected {
                name: SYNTH_PROTECTED.into(),
                values: group,
            },
            RawColumn::Numeric {
                name: "num_merit".into(),
                values: merit,
            },
            RawColumn::Numeric {
                name: "num_proxy_a".into(),
                values: proxy_a,
            },
            RawColumn::Numeric {
                name: "num_proxy_b".into(),
                values: proxy_b,
            },
            RawColumn::Numeric {
                name: "num_tenure".into(),
                values: tenure,
            },
            RawColumn::Categorical {
                name: "cat_region".into(),
                values: region,
            },
            RawColumn::Categorical {
                name: "cat_grade".into(),
                values: grade,
            },
        ],
        labels,
        dropped_rows: 0,
    })
}

/// Synthetic biased dataset (encoding fit on all rows).
pub fn synth_dataset(spec: &SynthSpec) -> Result<TabularDataset> {
    let raw = Arc::new(synth_raw(spec)?);
    let rows = (0..raw.n_rows()).collect();
    TabularDataset::from_raw(raw, rows, None)
}

pub const SYNTH_FAVORABLE: &str = "yes";
pub const SYNTH_UNFAVORABLE: &str = "no";
pub const SYNTH_PRIVILEGED: &str = "A";
pub const SYNTH_UNPRIVILEGED: &str = "B";

/// Manifest describing a CSV written by [`write_synth`].
pub fn synth_manifest(name: &str, csv_path: &str) -> DatasetManifest {
    DatasetManifest {
        name: name.to_string(),
        csv_path: csv_path.to_string(),
        label_column: SYNTH_LABEL.into(),
        favorable_value: SYNTH_FAVORABLE.into(),
        protected_specs: vec![ProtectedSpec {
            column: SYNTH_PROTECTED.into(),
            privileged_value: SYNTH_PRIVILEGED.into(),
        }],
        categorical_columns: vec!["cat_region".into(), "cat_grade".into()],
        numeric_columns: vec![
            "num_merit".into(),
            "num_proxy_a".into(),
            "num_proxy_b".into(),
            "num_tenure".into(),
        ],
        delimiter: None,
        base_dir: None,
    }
}

/// Writes a synthetic dataset as `<stem>.csv` plus `<stem>.json` manifest.
/// Returns the manifest path.
pub fn write_synth(spec: &SynthSpec, csv_path: &Path) -> Result<PathBuf> {
    let raw = synth_raw(spec)?;
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = fs::File::create(csv_path).map_err(io_err(csv_path))?;
    raw.write_csv(
        std::io::BufWriter::new(file),
        SYNTH_LABEL,
        (SYNTH_FAVORABLE, SYNTH_UNFAVORABLE),
        (SYNTH_PRIVILEGED, SYNTH_UNPRIVILEGED),
    )?;
    let manifest_path = csv_path.with_extension("json");
    let file_name = csv_path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = csv_path
        .file_stem()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| "synth".into());
    let manifest = synth_manifest(&stem, &file_name);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json + "\n").map_err(io_err(&manifest_path))?;
    Ok(manifest_path)
}
