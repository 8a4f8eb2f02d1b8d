//! Dataset and target representations, delimited-text ingestion and column
//! statistics.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{self, Real};

/// Integer-valued columns with at most this many distinct values are read as
/// categorical unless a schema says otherwise.
pub const MAX_INFERRED_LEVELS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Categorical { level_count: usize },
}

impl ColumnKind {
    pub fn is_categorical(&self) -> bool {
        matches!(self, ColumnKind::Categorical { .. })
    }

    pub fn level_count(&self) -> Option<usize> {
        match self {
            ColumnKind::Categorical { level_count } => Some(*level_count),
            ColumnKind::Continuous => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column<T> {
    pub name: String,
    pub values: Vec<T>,
    pub kind: ColumnKind,
}

impl<T: Real> Column<T> {
    pub fn continuous(name: impl Into<String>, values: Vec<T>) -> Self {
        Column {
            name: name.into(),
            values,
            kind: ColumnKind::Continuous,
        }
    }

    /// Categorical column from level indices in `0..level_count`.
    pub fn categorical(name: impl Into<String>, levels: &[usize], level_count: usize) -> Self {
        Column {
            name: name.into(),
            values: levels.iter().map(|&l| T::from_count(l)).collect(),
            kind: ColumnKind::Categorical { level_count },
        }
    }
}

/// Immutable column-major table of predictors.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    columns: Vec<Column<T>>,
    n_rows: usize,
}

impl<T: Real> Dataset<T> {
    pub fn new(columns: Vec<Column<T>>) -> Result<Self> {
        let n_rows = columns.first().map(|c| c.values.len()).unwrap_or(0);
        let mut names = HashSet::new();
        for col in &columns {
            if col.name.is_empty() {
                return Err(Error::Schema("empty column name".into()));
            }
            if !names.insert(col.name.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate column name '{}'",
                    col.name
                )));
            }
            if col.values.len() != n_rows {
                return Err(Error::Dimension {
                    expected: n_rows,
                    got: col.values.len(),
                });
            }
            for (row, v) in col.values.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Missing {
                        row,
                        column: col.name.clone(),
                    });
                }
            }
            if let ColumnKind::Categorical { level_count } = col.kind {
                if level_count < 2 {
                    return Err(Error::Schema(format!(
                        "categorical column '{}' needs at least 2 levels",
                        col.name
                    )));
                }
                let bad = col.values.iter().position(|&v| {
                    v < T::zero() || v.fract() != T::zero() || v >= T::from_count(level_count)
                });
                if let Some(row) = bad {
                    return Err(Error::Data(format!(
                        "column '{}' row {row}: level outside 0..{level_count}",
                        col.name
                    )));
                }
            }
        }
        if !columns.is_empty() && n_rows == 0 {
            return Err(Error::Data("dataset has no rows".into()));
        }
        Ok(Dataset { columns, n_rows })
    }

    /// Convenience constructor for an all-continuous dataset with generated
    /// names `X1..Xp`.
    pub fn from_continuous(columns: Vec<Vec<T>>) -> Result<Self> {
        Self::new(
            columns
                .into_iter()
                .enumerate()
                .map(|(j, v)| Column::continuous(format!("X{}", j + 1), v))
                .collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn var_count(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty() || self.n_rows == 0
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.columns[j].values
    }

    pub fn kind(&self, j: usize) -> ColumnKind {
        self.columns[j].kind
    }

    pub fn name(&self, j: usize) -> &str {
        &self.columns[j].name
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn columns(&self) -> &[Column<T>] {
        &self.columns
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Level index of a categorical cell.
    pub fn level(&self, j: usize, row: usize) -> usize {
        self.columns[j].values[row].to_usize().unwrap_or(0)
    }

    pub fn all_continuous(&self) -> bool {
        self.columns
            .iter()
            .all(|c| c.kind == ColumnKind::Continuous)
    }

    pub fn all_categorical(&self) -> bool {
        self.columns.iter().all(|c| c.kind.is_categorical())
    }

    /// Continuous columns with zero sample variance.
    pub fn degenerate_columns(&self) -> Vec<usize> {
        (0..self.var_count())
            .filter(|&j| {
                self.kind(j) == ColumnKind::Continuous && {
                    let col = self.column(j);
                    col.iter().all(|&v| v == col[0])
                }
            })
            .collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Dataset {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    values: rows.iter().map(|&r| c.values[r]).collect(),
                    kind: c.kind,
                })
                .collect(),
            n_rows: rows.len(),
        }
    }

    /// Same data with every column replaced by a transformed copy; kinds are
    /// kept.
    pub fn map_columns(&self, f: impl Fn(&[T]) -> Vec<T>) -> Self {
        Dataset {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    values: f(&c.values),
                    kind: c.kind,
                })
                .collect(),
            n_rows: self.n_rows,
        }
    }
}

/// Outcome variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target<T> {
    Continuous(Vec<T>),
    Binary(Vec<u8>),
    Categorical {
        labels: Vec<usize>,
        level_count: usize,
    },
}

impl<T: Real> Target<T> {
    pub fn len(&self) -> usize {
        match self {
            Target::Continuous(v) => v.len(),
            Target::Binary(v) => v.len(),
            Target::Categorical { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Target::Continuous(_) => "continuous",
            Target::Binary(_) => "binary",
            Target::Categorical { .. } => "categorical",
        }
    }

    /// The target as a real vector (labels become their level index).
    pub fn values(&self) -> Vec<T> {
        match self {
            Target::Continuous(v) => v.clone(),
            Target::Binary(v) => v.iter().map(|&b| T::from_count(b as usize)).collect(),
            Target::Categorical { labels, .. } => {
                labels.iter().map(|&l| T::from_count(l)).collect()
            }
        }
    }

    /// Class labels for discrete targets.
    pub fn labels(&self) -> Option<Vec<usize>> {
        match self {
            Target::Continuous(_) => None,
            Target::Binary(v) => Some(v.iter().map(|&b| b as usize).collect()),
            Target::Categorical { labels, .. } => Some(labels.clone()),
        }
    }

    pub fn level_count(&self) -> Option<usize> {
        match self {
            Target::Continuous(_) => None,
            Target::Binary(_) => Some(2),
            Target::Categorical { level_count, .. } => Some(*level_count),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        match self {
            Target::Continuous(v) => Target::Continuous(rows.iter().map(|&r| v[r]).collect()),
            Target::Binary(v) => Target::Binary(rows.iter().map(|&r| v[r]).collect()),
            Target::Categorical {
                labels,
                level_count,
            } => Target::Categorical {
                labels: rows.iter().map(|&r| labels[r]).collect(),
                level_count: *level_count,
            },
        }
    }

    /// Checks length against the dataset and that binary targets carry both
    /// classes.
    pub fn validate_against(&self, ds: &Dataset<T>) -> Result<()> {
        if self.len() != ds.n_rows() {
            return Err(Error::Dimension {
                expected: ds.n_rows(),
                got: self.len(),
            });
        }
        if let Target::Binary(v) = self {
            let ones = v.iter().filter(|&&b| b == 1).count();
            if ones == 0 || ones == v.len() {
                return Err(Error::Data("binary target contains a single class".into()));
            }
            if v.iter().any(|&b| b > 1) {
                return Err(Error::Data("binary target labels must be 0/1".into()));
            }
        }
        Ok(())
    }
}

/// Declared role of a column in a schema sidecar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeclaredKind {
    Continuous,
    Categorical,
}

/// Column name to kind overrides, read from a JSON object such as
/// `{"age": "continuous", "stage": "categorical"}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema {
    pub columns: BTreeMap<String, DeclaredKind>,
}

impl Schema {
    pub fn from_reader(r: impl Read) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }
}

/// Which column of the table holds the outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetColumn {
    Name(String),
    Index(usize),
}

impl From<&str> for TargetColumn {
    fn from(s: &str) -> Self {
        TargetColumn::Name(s.to_string())
    }
}

fn detect_delimiter(header: &str) -> u8 {
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c == "NA"
}

/// Reads a delimited table with a header row and splits off the target.
///
/// Comma or tab delimiters are detected from the header line. Column kinds
/// are inferred (integer columns with 2 to 10 distinct values become
/// categorical, their sorted distinct values mapped to levels `0..L`) unless
/// `schema` overrides them.
pub fn load_dataset<T: Real>(
    mut source: impl Read,
    target_column: &TargetColumn,
    schema: Option<&Schema>,
) -> Result<(Dataset<T>, Target<T>)> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let header_line = text.lines().next().unwrap_or("");
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(header_line))
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Schema(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Schema("missing header row".into()));
    }
    let mut seen = HashSet::new();
    for h in &headers {
        if h.is_empty() {
            return Err(Error::Schema("empty column name in header".into()));
        }
        if !seen.insert(h.as_str()) {
            return Err(Error::Schema(format!("duplicate header '{h}'")));
        }
    }
    let target_idx = match target_column {
        TargetColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("target column '{name}' not found")))?,
        TargetColumn::Index(i) if *i < headers.len() => *i,
        TargetColumn::Index(i) => {
            return Err(Error::Schema(format!(
                "target column index {i} out of range"
            )))
        }
    };

    let mut raw: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Schema(e.to_string()))?;
        if record.len() != headers.len() {
            return Err(Error::Schema(format!(
                "row {row} has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            if is_missing(cell) {
                return Err(Error::Missing {
                    row,
                    column: headers[j].clone(),
                });
            }
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row,
                column: headers[j].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: headers[j].clone(),
                    value: cell.to_string(),
                });
            }
            raw[j].push(v);
        }
    }
    if raw[0].is_empty() {
        return Err(Error::Data("table has no data rows".into()));
    }

    let declared = |name: &str| schema.and_then(|s| s.columns.get(name).copied());

    let mut columns = Vec::with_capacity(headers.len() - 1);
    let mut target = None;
    for (j, (name, values)) in headers.iter().zip(raw).enumerate() {
        let levels = match declared(name) {
            Some(DeclaredKind::Continuous) => None,
            Some(DeclaredKind::Categorical) => Some(integer_levels(&values).ok_or_else(|| {
                Error::Schema(format!(
                    "column '{name}' declared categorical but is not integer-valued"
                ))
            })?),
            None => {
                integer_levels(&values).filter(|l| (2..=MAX_INFERRED_LEVELS).contains(&l.len()))
            }
        };
        if j == target_idx {
            target = Some(match levels {
                Some(l) if l.len() == 2 => {
                    Target::Binary(values.iter().map(|v| level_index(&l, *v) as u8).collect())
                }
                Some(l) if l.len() > 2 => Target::Categorical {
                    labels: values.iter().map(|v| level_index(&l, *v)).collect(),
                    level_count: l.len(),
                },
                Some(_) => {
                    return Err(Error::Schema(format!(
                        "target '{name}' declared categorical but has a single level"
                    )))
                }
                None => Target::Continuous(values.iter().map(|&v| T::lit(v)).collect()),
            });
            continue;
        }
        columns.push(match levels {
            Some(l) if l.len() >= 2 => {
                let idx: Vec<usize> = values.iter().map(|v| level_index(&l, *v)).collect();
                Column::categorical(name.clone(), &idx, l.len())
            }
            Some(_) => {
                return Err(Error::Schema(format!(
                    "column '{name}' declared categorical but has a single level"
                )))
            }
            None => Column::continuous(name.clone(), values.iter().map(|&v| T::lit(v)).collect()),
        });
    }
    let ds = Dataset::new(columns)?;
    let target = target.expect("target column resolved above");
    Ok((ds, target))
}

/// Sorted distinct values if every value is an integer.
fn integer_levels(values: &[f64]) -> Option<Vec<i64>> {
    let mut set = BTreeSet::new();
    for &v in values {
        if v.fract() != 0.0 || v.abs() > 1e15 {
            return None;
        }
        set.insert(v as i64);
        if set.len() > 1 << 16 {
            return None;
        }
    }
    Some(set.into_iter().collect())
}

fn level_index(levels: &[i64], v: f64) -> usize {
    levels
        .binary_search(&(v as i64))
        .expect("value drawn from levels")
}

/// Writes dataset and target as a comma-separated table with a header row.
/// Categorical cells are written as their level index.
pub fn write_csv<T: Real>(
    ds: &Dataset<T>,
    target: &Target<T>,
    target_name: &str,
    out: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = ds.names();
    header.push(target_name);
    w.write_record(&header).map_err(|e| Error::Io(e.into()))?;
    let t = target.values();
    let mut record = Vec::with_capacity(ds.var_count() + 1);
    for (row, tv) in t.iter().enumerate() {
        record.clear();
        for j in 0..ds.var_count() {
            record.push(format!("{}", ds.column(j)[row]));
        }
        record.push(format!("{tv}"));
        w.write_record(&record).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnStats<T> {
    Continuous {
        mean: T,
        variance: T,
    },
    /// Count per level, indexed by level.
    Categorical {
        histogram: Vec<usize>,
    },
}

pub fn column_stats<T: Real>(ds: &Dataset<T>, j: usize) -> ColumnStats<T> {
    match ds.kind(j) {
        ColumnKind::Continuous => {
            let col = ds.column(j);
            ColumnStats::Continuous {
                mean: scalar::mean(col),
                variance: scalar::sample_variance(col),
            }
        }
        ColumnKind::Categorical { level_count } => {
            let mut histogram = vec![0; level_count];
            for row in 0..ds.n_rows() {
                histogram[ds.level(j, row)] += 1;
            }
            ColumnStats::Categorical { histogram }
        }
    }
}
