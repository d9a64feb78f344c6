//! Tabular data model, CSV ingestion and seeded row splitting.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Whether the outcome is a 0/1 label or a real value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Binary,
    Real,
}

/// Numeric features, a binary treatment and an outcome, stored column-major.
///
/// `row_ids` are stable identifiers that survive subsetting, so rows can be
/// tracked across honest splits and folds.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    columns: Vec<Vec<f64>>,
    treatment: Vec<u8>,
    outcome: Vec<f64>,
    outcome_kind: OutcomeKind,
    potential_outcomes: Option<Vec<(f64, f64)>>,
    row_ids: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset from feature columns, checking every invariant.
    ///
    /// `row_ids` defaults to `0..n` when `None`.
    pub fn new(
        feature_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        treatment: Vec<u8>,
        outcome: Vec<f64>,
        outcome_kind: OutcomeKind,
        potential_outcomes: Option<Vec<(f64, f64)>>,
        row_ids: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = treatment.len();
        if feature_names.len() != columns.len() {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                columns.len()
            )));
        }
        if outcome.len() != n {
            return Err(Error::InvalidDataset("outcome length differs from treatment".into()));
        }
        for (name, col) in feature_names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::InvalidDataset(format!("column `{name}` has wrong length")));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonNumeric {
                    row,
                    column: name.clone(),
                    value: col[row].to_string(),
                });
            }
        }
        if let Some(row) = treatment.iter().position(|&t| t > 1) {
            return Err(Error::TreatmentNotBinary {
                row,
                value: f64::from(treatment[row]),
            });
        }
        if let Some(row) = outcome.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonNumeric {
                row,
                column: "outcome".into(),
                value: outcome[row].to_string(),
            });
        }
        if outcome_kind == OutcomeKind::Binary {
            if let Some(row) = outcome.iter().position(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::OutcomeNotBinary {
                    row,
                    value: outcome[row],
                });
            }
        }
        if let Some(po) = &potential_outcomes {
            if po.len() != n {
                return Err(Error::InvalidDataset("potential outcomes have wrong length".into()));
            }
            if po.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
                return Err(Error::InvalidDataset("non-finite potential outcome".into()));
            }
        }
        let row_ids = row_ids.unwrap_or_else(|| (0..n).collect());
        if row_ids.len() != n {
            return Err(Error::InvalidDataset("row_ids have wrong length".into()));
        }
        let unique: HashSet<_> = row_ids.iter().collect();
        if unique.len() != n {
            return Err(Error::InvalidDataset("row_ids are not unique".into()));
        }
        Ok(Self {
            feature_names,
            columns,
            treatment,
            outcome,
            outcome_kind,
            potential_outcomes,
            row_ids,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.treatment.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn feature(&self, row: usize, j: usize) -> f64 {
        self.columns[j][row]
    }

    /// Feature values of one row.
    pub fn row(&self, row: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    pub fn treatment(&self) -> &[u8] {
        &self.treatment
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn outcome_kind(&self) -> OutcomeKind {
        self.outcome_kind
    }

    pub fn potential_outcomes(&self) -> Option<&[(f64, f64)]> {
        self.potential_outcomes.as_deref()
    }

    /// Per-row `y1 - y0` when potential outcomes are present.
    pub fn individual_effects(&self) -> Option<Vec<f64>> {
        self.potential_outcomes
            .as_ref()
            .map(|po| po.iter().map(|(y0, y1)| y1 - y0).collect())
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    /// Value of design column `col`, where columns `0..m` are features and
    /// column `m` is the treatment indicator.
    pub fn design_value(&self, row: usize, col: usize) -> f64 {
        if col == self.columns.len() {
            f64::from(self.treatment[row])
        } else {
            self.columns[col][row]
        }
    }

    /// Rows at the given positions, in the given order, keeping their ids.
    pub fn subset(&self, positions: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| positions.iter().map(|&p| c[p]).collect())
                .collect(),
            treatment: positions.iter().map(|&p| self.treatment[p]).collect(),
            outcome: positions.iter().map(|&p| self.outcome[p]).collect(),
            outcome_kind: self.outcome_kind,
            potential_outcomes: self
                .potential_outcomes
                .as_ref()
                .map(|po| positions.iter().map(|&p| po[p]).collect()),
            row_ids: positions.iter().map(|&p| self.row_ids[p]).collect(),
        }
    }

    /// Rows whose id is in `ids`, in dataset order.
    pub fn subset_by_ids(&self, ids: &BTreeSet<usize>) -> Dataset {
        let positions: Vec<usize> = (0..self.n_rows())
            .filter(|&p| ids.contains(&self.row_ids[p]))
            .collect();
        self.subset(&positions)
    }
}

/// Column roles for CSV ingestion. Every other column is a feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub treatment: String,
    pub outcome: String,
    pub potential_outcomes: Option<(String, String)>,
    /// `None` detects the kind: binary when every outcome is 0 or 1.
    pub outcome_kind: Option<OutcomeKind>,
}

impl Schema {
    pub fn new(treatment: &str, outcome: &str) -> Self {
        Self {
            treatment: treatment.to_owned(),
            outcome: outcome.to_owned(),
            potential_outcomes: None,
            outcome_kind: None,
        }
    }

    pub fn with_potential_outcomes(mut self, y0: &str, y1: &str) -> Self {
        self.potential_outcomes = Some((y0.to_owned(), y1.to_owned()));
        self
    }

    pub fn with_outcome_kind(mut self, kind: OutcomeKind) -> Self {
        self.outcome_kind = Some(kind);
        self
    }
}

/// Reads a headed, comma-separated file into a [`Dataset`].
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    read_csv(file, schema)
}

/// Column names of a headed CSV file.
pub fn read_header(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    Ok(rdr.headers()?.iter().map(|h| h.trim().to_owned()).collect())
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::EmptyFile);
    }
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    let t_col = find(&schema.treatment)?;
    let y_col = find(&schema.outcome)?;
    let po_cols = match &schema.potential_outcomes {
        Some((a, b)) => Some((find(a)?, find(b)?)),
        None => None,
    };
    let mut reserved = vec![t_col, y_col];
    if let Some((a, b)) = po_cols {
        reserved.extend([a, b]);
    }
    let feature_cols: Vec<usize> = (0..header.len()).filter(|c| !reserved.contains(c)).collect();

    let mut columns = vec![Vec::new(); feature_cols.len()];
    let mut treatment = Vec::new();
    let mut outcome = Vec::new();
    let mut po = po_cols.map(|_| Vec::new());
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let cell = |c: usize| -> Result<f64> {
            let raw = record.get(c).unwrap_or("").trim();
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::NonNumeric {
                    row,
                    column: header[c].clone(),
                    value: raw.to_owned(),
                }),
            }
        };
        for (dst, &c) in columns.iter_mut().zip(&feature_cols) {
            dst.push(cell(c)?);
        }
        let t = cell(t_col)?;
        if t != 0.0 && t != 1.0 {
            return Err(Error::TreatmentNotBinary { row, value: t });
        }
        treatment.push(t as u8);
        outcome.push(cell(y_col)?);
        if let (Some(dst), Some((a, b))) = (po.as_mut(), po_cols) {
            dst.push((cell(a)?, cell(b)?));
        }
    }
    if treatment.is_empty() {
        return Err(Error::EmptyFile);
    }
    let kind = schema.outcome_kind.unwrap_or_else(|| {
        if outcome.iter().all(|&v| v == 0.0 || v == 1.0) {
            OutcomeKind::Binary
        } else {
            OutcomeKind::Real
        }
    });
    let names = feature_cols.iter().map(|&c| header[c].clone()).collect();
    Dataset::new(names, columns, treatment, outcome, kind, po, None)
}

/// Writes `ds` in the layout [`read_csv`] expects: features, `t`, `y`, then
/// `y0,y1` when potential outcomes are present.
pub fn write_csv<W: std::io::Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ds.feature_names.clone();
    header.extend(["t".to_owned(), "y".to_owned()]);
    if ds.potential_outcomes.is_some() {
        header.extend(["y0".to_owned(), "y1".to_owned()]);
    }
    wtr.write_record(&header)?;
    for r in 0..ds.n_rows() {
        let mut rec: Vec<String> = ds.columns.iter().map(|c| c[r].to_string()).collect();
        rec.push(ds.treatment[r].to_string());
        rec.push(ds.outcome[r].to_string());
        if let Some(po) = &ds.potential_outcomes {
            rec.push(po[r].0.to_string());
            rec.push(po[r].1.to_string());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|source| Error::Io {
        path: "<csv output>".into(),
        source,
    })?;
    Ok(())
}

/// Disjoint training / estimation row-id sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train_rows: BTreeSet<usize>,
    pub estimate_rows: BTreeSet<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HonestSplitConfig {
    pub train_fraction: f64,
    pub stratify_by_treatment: bool,
}

impl Default for HonestSplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.5,
            stratify_by_treatment: true,
        }
    }
}

/// Randomly assigns rows to a training side and an estimation side.
///
/// With stratification each treatment arm is shuffled and cut separately, so
/// both arms appear on both sides whenever the fraction allows it.
pub fn honest_split(ds: &Dataset, config: HonestSplitConfig, seed: u64) -> Result<SplitAssignment> {
    let n = ds.n_rows();
    let f = config.train_fraction;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("honest split needs at least 2 rows, got {n}")));
    }
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidParameter(format!("train fraction {f} outside (0, 1)")));
    }
    let mut rng = rng_from_seed(seed);
    let strata: Vec<Vec<usize>> = if config.stratify_by_treatment {
        let arm = |want: u8| -> Vec<usize> {
            ds.row_ids.iter().zip(&ds.treatment).filter(|(_, &t)| t == want).map(|(&id, _)| id).collect()
        };
        let (treated, control) = (arm(1), arm(0));
        if treated.is_empty() || control.is_empty() {
            return Err(Error::InvalidParameter(
                "stratified split needs both treatment arms".into(),
            ));
        }
        vec![control, treated]
    } else {
        vec![ds.row_ids.clone()]
    };
    let mut train_rows = BTreeSet::new();
    let mut estimate_rows = BTreeSet::new();
    for mut stratum in strata {
        stratum.shuffle(&mut rng);
        let cut = (f * stratum.len() as f64).round() as usize;
        train_rows.extend(&stratum[..cut]);
        estimate_rows.extend(&stratum[cut..]);
    }
    if train_rows.is_empty() || estimate_rows.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "train fraction {f} leaves one side of the split empty"
        )));
    }
    Ok(SplitAssignment {
        train_rows,
        estimate_rows,
    })
}

/// Shuffles `rows` and deals them into `k` folds whose sizes differ by at most one.
pub fn kfold_indices(rows: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need k >= 2 folds, got {k}")));
    }
    if rows.len() < k {
        return Err(Error::InvalidParameter(format!(
            "{k} folds requested for {} rows",
            rows.len()
        )));
    }
    let mut shuffled = rows.to_vec();
    shuffled.shuffle(&mut rng_from_seed(seed));
    let mut folds = vec![Vec::with_capacity(rows.len() / k + 1); k];
    for (i, r) in shuffled.into_iter().enumerate() {
        folds[i % k].push(r);
    }
    Ok(folds)
}
