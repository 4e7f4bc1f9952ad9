//! Categorical datasets: loading, writing, synthetic XOR generation,
//! stratified splitting and quantile binning of numeric tables.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

/// A categorical attribute and its ordered level vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub levels: Vec<String>,
}

impl Attribute {
    pub fn new(name: impl Into<String>, levels: Vec<String>) -> Self {
        Attribute {
            name: name.into(),
            levels,
        }
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, level: &str) -> Option<u32> {
        self.levels.iter().position(|l| l == level).map(|i| i as u32)
    }
}

/// Attribute and class vocabularies of a dataset, without its rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub attributes: Vec<Attribute>,
    pub class_name: String,
    pub class_levels: Vec<String>,
}

/// Sorted set of level indices of one attribute.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelSet(Vec<u32>);

impl LevelSet {
    pub fn new(mut levels: Vec<u32>) -> Self {
        levels.sort_unstable();
        levels.dedup();
        LevelSet(levels)
    }

    pub fn full(n_levels: usize) -> Self {
        LevelSet((0..n_levels as u32).collect())
    }

    pub fn contains(&self, level: u32) -> bool {
        self.0.binary_search(&level).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn levels(&self) -> &[u32] {
        &self.0
    }

    pub fn intersect(&self, other: &LevelSet) -> LevelSet {
        LevelSet(self.0.iter().copied().filter(|&l| other.contains(l)).collect())
    }

    /// Levels of `0..n_levels` not in the set.
    pub fn complement(&self, n_levels: usize) -> LevelSet {
        LevelSet((0..n_levels as u32).filter(|&l| !self.contains(l)).collect())
    }
}

/// Immutable table of level indices plus a class column.
///
/// Rows are stored row-major; `row(i)` yields one level index per attribute.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    attributes: Vec<Attribute>,
    class_name: String,
    class_levels: Vec<String>,
    values: Vec<u32>,
    labels: Vec<u32>,
}

/// Which column of a CSV file holds the class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    Last,
    Named(String),
}

impl std::str::FromStr for Target {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(if s == "last" {
            Target::Last
        } else {
            Target::Named(s.to_string())
        })
    }
}

impl Dataset {
    pub fn new(
        attributes: Vec<Attribute>,
        class_name: impl Into<String>,
        class_levels: Vec<String>,
        rows: Vec<Vec<u32>>,
        labels: Vec<u32>,
    ) -> Result<Self> {
        let p = attributes.len();
        let mut values = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: p,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(attributes, class_name.into(), class_levels, values, labels)
    }

    fn from_flat(
        attributes: Vec<Attribute>,
        class_name: String,
        class_levels: Vec<String>,
        values: Vec<u32>,
        labels: Vec<u32>,
    ) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidDataset(msg));
        if labels.is_empty() {
            return invalid("dataset has no rows".into());
        }
        if class_levels.len() < 2 {
            return invalid(format!("class needs at least 2 levels, found {}", class_levels.len()));
        }
        if has_duplicates(&class_levels) {
            return invalid("duplicate class level".into());
        }
        for a in &attributes {
            if a.levels.is_empty() {
                return invalid(format!("attribute {:?} has no levels", a.name));
            }
            if has_duplicates(&a.levels) {
                return invalid(format!("attribute {:?} has duplicate levels", a.name));
            }
        }
        let p = attributes.len();
        if values.len() != labels.len() * p {
            return invalid("value table does not match row count".into());
        }
        if p > 0 {
            for (i, row) in values.chunks(p).enumerate() {
                for (a, &v) in row.iter().enumerate() {
                    if v as usize >= attributes[a].levels.len() {
                        return invalid(format!(
                            "row {i}: level index {v} out of range for {:?}",
                            attributes[a].name
                        ));
                    }
                }
            }
        }
        if let Some(&bad) = labels.iter().find(|&&y| y as usize >= class_levels.len()) {
            return invalid(format!("class index {bad} out of range"));
        }
        Ok(Dataset {
            attributes,
            class_name,
            class_levels,
            values,
            labels,
        })
    }

    /// Builds a dataset from string records, creating vocabularies in
    /// first-appearance order.
    pub fn from_records(
        attribute_names: Vec<String>,
        class_name: impl Into<String>,
        records: &[Vec<String>],
        labels: &[String],
    ) -> Result<Self> {
        let p = attribute_names.len();
        let mut vocab: Vec<Vocab> = (0..p).map(|_| Vocab::default()).collect();
        let mut class_vocab = Vocab::default();
        let mut values = Vec::with_capacity(records.len() * p);
        for (i, rec) in records.iter().enumerate() {
            if rec.len() != p {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: p,
                    found: rec.len(),
                });
            }
            for (a, cell) in rec.iter().enumerate() {
                values.push(vocab[a].intern(cell));
            }
        }
        let labels = labels.iter().map(|l| class_vocab.intern(l)).collect();
        let attributes = attribute_names
            .into_iter()
            .zip(vocab)
            .map(|(name, v)| Attribute::new(name, v.levels))
            .collect();
        Self::from_flat(attributes, class_name.into(), class_vocab.levels, values, labels)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_levels.len()
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, a: usize) -> &Attribute {
        &self.attributes[a]
    }

    pub fn class_name(&self) -> &str {
        &self.class_name
    }

    pub fn class_levels(&self) -> &[String] {
        &self.class_levels
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let p = self.attributes.len();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn value(&self, i: usize, a: usize) -> u32 {
        self.values[i * self.attributes.len() + a]
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Per-class instance counts (n_c).
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_levels.len()];
        for &y in &self.labels {
            counts[y as usize] += 1;
        }
        counts
    }

    /// Sum of vocabulary sizes over all attributes.
    pub fn total_levels(&self) -> usize {
        self.attributes.iter().map(Attribute::n_levels).sum()
    }

    /// Majority class, ties to the lowest index.
    pub fn majority_class(&self) -> u32 {
        argmax_lowest(&self.class_counts()) as u32
    }

    /// Rows at `indices` (in that order), keeping every vocabulary.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let p = self.attributes.len();
        let mut values = Vec::with_capacity(indices.len() * p);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            attributes: self.attributes.clone(),
            class_name: self.class_name.clone(),
            class_levels: self.class_levels.clone(),
            values,
            labels,
        }
    }

    pub fn schema(&self) -> Schema {
        Schema {
            attributes: self.attributes.clone(),
            class_name: self.class_name.clone(),
            class_levels: self.class_levels.clone(),
        }
    }

    /// The same rows re-encoded with the vocabularies of `schema`.
    /// Attributes are matched by name.
    pub fn conform(&self, schema: &Schema) -> Result<Dataset> {
        if self.class_name != schema.class_name {
            return Err(Error::UnknownColumn(schema.class_name.clone()));
        }
        let cols: Vec<usize> = schema
            .attributes
            .iter()
            .map(|a| {
                self.attributes
                    .iter()
                    .position(|b| b.name == a.name)
                    .ok_or_else(|| Error::UnknownColumn(a.name.clone()))
            })
            .collect::<Result<_>>()?;
        let maps: Vec<Vec<u32>> = schema
            .attributes
            .iter()
            .zip(&cols)
            .map(|(a, &c)| self.attributes[c].levels.iter().map(|l| level_of(a, l)).collect())
            .collect::<Result<_>>()?;
        let classes: Vec<u32> = self
            .class_levels
            .iter()
            .map(|c| class_of(schema, c))
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.n() {
            let row = self.row(i);
            values.extend(cols.iter().zip(&maps).map(|(&c, map)| map[row[c] as usize]));
        }
        let labels = self.labels.iter().map(|&y| classes[y as usize]).collect();
        Dataset::from_flat(
            schema.attributes.clone(),
            schema.class_name.clone(),
            schema.class_levels.clone(),
            values,
            labels,
        )
    }

    /// True when both datasets share attribute and class vocabularies.
    pub fn same_schema(&self, other: &Dataset) -> bool {
        self.attributes == other.attributes && self.class_levels == other.class_levels
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
    }

    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.attributes.iter().map(|a| a.name.as_str()).collect();
        header.push(&self.class_name);
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec: Vec<&str> = self
                .row(i)
                .iter()
                .enumerate()
                .map(|(a, &v)| self.attributes[a].levels[v as usize].as_str())
                .collect();
            rec.push(&self.class_levels[self.labels[i] as usize]);
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

#[derive(Default)]
struct Vocab {
    levels: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        let i = self.levels.len() as u32;
        self.levels.push(s.to_string());
        self.index.insert(s.to_string(), i);
        i
    }
}

fn has_duplicates(v: &[String]) -> bool {
    let mut seen = std::collections::HashSet::new();
    v.iter().any(|s| !seen.insert(s))
}

pub(crate) fn argmax_lowest(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_raw<R: Read>(input: R) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 {
        return Err(Error::InvalidDataset(format!(
            "need at least 2 columns, found {}",
            header.len()
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::RaggedRow {
                row: i + 1,
                expected: header.len(),
                found: rec.len(),
            });
        }
        let row: Vec<String> = rec.iter().map(str::to_string).collect();
        if let Some(c) = row.iter().position(String::is_empty) {
            return Err(Error::EmptyCell {
                row: i + 1,
                column: header[c].clone(),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidDataset("no data rows".into()));
    }
    Ok(RawTable { header, rows })
}

fn target_index(header: &[String], target: &Target) -> Result<usize> {
    match target {
        Target::Last => Ok(header.len() - 1),
        Target::Named(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.clone())),
    }
}

/// Loads a categorical CSV file (header row required).
pub fn load_csv(path: impl AsRef<Path>, target: &Target) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_csv_from(file, target)
}

pub fn load_csv_from<R: Read>(input: R, target: &Target) -> Result<Dataset> {
    let raw = read_raw(input)?;
    let t = target_index(&raw.header, target)?;
    let names: Vec<String> = raw
        .header
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != t)
        .map(|(_, h)| h.clone())
        .collect();
    let mut records = Vec::with_capacity(raw.rows.len());
    let mut labels = Vec::with_capacity(raw.rows.len());
    for mut row in raw.rows {
        labels.push(row.remove(t));
        records.push(row);
    }
    Dataset::from_records(names, raw.header[t].clone(), &records, &labels)
}

/// Loads a CSV file encoded with the vocabularies of `schema`, so rules and
/// forests built on `schema` apply to it. Columns are matched by name; a
/// level or class absent from `schema` is an error.
pub fn load_csv_like(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_csv_from_like(file, schema)
}

pub fn load_csv_from_like<R: Read>(input: R, schema: &Schema) -> Result<Dataset> {
    let raw = read_raw(input)?;
    let col = |name: &str| {
        raw.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };
    let cols: Vec<usize> = schema.attributes.iter().map(|a| col(&a.name)).collect::<Result<_>>()?;
    let t = col(&schema.class_name)?;
    let mut values = Vec::with_capacity(raw.rows.len() * cols.len());
    let mut labels = Vec::with_capacity(raw.rows.len());
    for row in &raw.rows {
        for (attr, &c) in schema.attributes.iter().zip(&cols) {
            values.push(level_of(attr, &row[c])?);
        }
        labels.push(class_of(schema, &row[t])?);
    }
    Dataset::from_flat(
        schema.attributes.clone(),
        schema.class_name.clone(),
        schema.class_levels.clone(),
        values,
        labels,
    )
}

fn level_of(attr: &Attribute, level: &str) -> Result<u32> {
    attr.level_index(level)
        .ok_or_else(|| Error::InvalidDataset(format!("level {level:?} of {:?} is not in the schema", attr.name)))
}

fn class_of(schema: &Schema, class: &str) -> Result<u32> {
    schema
        .class_levels
        .iter()
        .position(|l| l == class)
        .map(|i| i as u32)
        .ok_or_else(|| Error::InvalidDataset(format!("class {class:?} is not in the schema")))
}

/// Synthetic XOR data over `A`, `B` (four levels each) and the derived `C`.
///
/// `Y = 1` on `A∈{A1,A3} & B∈{B1,B3}` and `A∈{A2,A4} & B∈{B2,B4}`, else `0`;
/// `C = C1` iff `A∈{A3,A4} & B∈{B3,B4}`. Each of the 16 `(A,B)` cells holds
/// `n/16` rows, with the remainder spread one row each over seeded cells.
pub fn generate_xor(seed: u64, n: usize) -> Result<Dataset> {
    if n < 16 {
        return Err(Error::InvalidParam(format!("XOR needs n >= 16, got {n}")));
    }
    let mut rng = seed::rng(seed);
    let mut counts = [n / 16; 16];
    let mut cells: Vec<usize> = (0..16).collect();
    cells.shuffle(&mut rng);
    for &c in cells.iter().take(n % 16) {
        counts[c] += 1;
    }
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (cell, &count) in counts.iter().enumerate() {
        let (a, b) = ((cell / 4) as u32, (cell % 4) as u32);
        for _ in 0..count {
            rows.push(vec![a, b, xor_c(a, b)]);
            labels.push(xor_label(a, b));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let rows = order.iter().map(|&i| rows[i].clone()).collect();
    let labels = order.iter().map(|&i| labels[i]).collect();
    let levels = |p: &str, k: usize| (1..=k).map(|i| format!("{p}{i}")).collect();
    Dataset::new(
        vec![
            Attribute::new("A", levels("A", 4)),
            Attribute::new("B", levels("B", 4)),
            Attribute::new("C", levels("C", 2)),
        ],
        "Y",
        vec!["0".into(), "1".into()],
        rows,
        labels,
    )
}

/// XOR class index for level indices `a`, `b` (0-based: A1 = 0).
pub fn xor_label(a: u32, b: u32) -> u32 {
    // A1,A3 / B1,B3 are the even indices
    u32::from(a.is_multiple_of(2) == b.is_multiple_of(2))
}

fn xor_c(a: u32, b: u32) -> u32 {
    if a >= 2 && b >= 2 {
        0
    } else {
        1
    }
}

/// Stratified random split. Per-class train counts stay within one
/// instance of `train_ratio × class size` while the train total equals
/// `round(train_ratio × n)`.
pub fn stratified_split(ds: &Dataset, train_ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::InvalidParam(format!(
            "train_ratio must lie in (0,1), got {train_ratio}"
        )));
    }
    let counts = ds.class_counts();
    if let Some(c) = counts.iter().position(|&c| c > 0 && c < 2) {
        return Err(Error::InvalidDataset(format!(
            "class {:?} has fewer than 2 instances",
            ds.class_levels()[c]
        )));
    }
    let target_total = (train_ratio * ds.n() as f64).round() as usize;
    let mut take: Vec<usize> = counts
        .iter()
        .map(|&c| (train_ratio * c as f64).floor() as usize)
        .collect();
    // largest remainder, ties to the lowest class index
    let mut order: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    order.sort_by(|&x, &y| {
        let fx = train_ratio * counts[x] as f64 - take[x] as f64;
        let fy = train_ratio * counts[y] as f64 - take[y] as f64;
        fy.partial_cmp(&fx).unwrap().then(x.cmp(&y))
    });
    let missing = target_total.saturating_sub(take.iter().sum());
    for &c in order.iter().take(missing) {
        take[c] += 1;
    }
    for (c, t) in take.iter_mut().enumerate() {
        if counts[c] >= 2 {
            *t = (*t).clamp(1, counts[c] - 1);
        }
    }

    let mut rng = seed::derived_rng(seed, "split", 0);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); counts.len()];
    for i in 0..ds.n() {
        by_class[ds.label(i) as usize].push(i);
    }
    let mut train = Vec::with_capacity(target_total);
    let mut test = Vec::with_capacity(ds.n() - target_total);
    for (c, mut idx) in by_class.into_iter().enumerate() {
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..take[c]]);
        test.extend_from_slice(&idx[take[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Numeric attribute table with a categorical class column.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericTable {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub class_name: String,
    pub labels: Vec<String>,
}

pub fn load_numeric_csv(path: impl AsRef<Path>, target: &Target) -> Result<NumericTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_numeric_csv_from(file, target)
}

pub fn load_numeric_csv_from<R: Read>(input: R, target: &Target) -> Result<NumericTable> {
    let raw = read_raw(input)?;
    let t = target_index(&raw.header, target)?;
    let cols: Vec<usize> = (0..raw.header.len()).filter(|&c| c != t).collect();
    let mut columns = vec![Vec::with_capacity(raw.rows.len()); cols.len()];
    let mut labels = Vec::with_capacity(raw.rows.len());
    for (i, row) in raw.rows.iter().enumerate() {
        for (k, &c) in cols.iter().enumerate() {
            let v: f64 = row[c].parse().map_err(|_| {
                Error::Parse(format!(
                    "row {}: {:?} in column {:?} is not a number",
                    i + 1,
                    row[c],
                    raw.header[c]
                ))
            })?;
            columns[k].push(v);
        }
        labels.push(row[t].clone());
    }
    Ok(NumericTable {
        names: cols.iter().map(|&c| raw.header[c].clone()).collect(),
        columns,
        class_name: raw.header[t].clone(),
        labels,
    })
}

/// Linear-interpolation empirical quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Interior cut points for one column: `bins - 1` quantiles, duplicates
/// merged, cuts at or above the maximum dropped.
pub fn quantile_cuts(column: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = column.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max = *sorted.last().unwrap();
    let mut cuts: Vec<f64> = (1..bins)
        .map(|k| quantile_sorted(&sorted, k as f64 / bins as f64))
        .filter(|&c| c < max)
        .collect();
    cuts.dedup();
    cuts
}

fn interval_labels(cuts: &[f64]) -> Vec<String> {
    if cuts.is_empty() {
        return vec!["(-inf,inf)".into()];
    }
    let mut labels = Vec::with_capacity(cuts.len() + 1);
    labels.push(format!("(-inf,{}]", cuts[0]));
    for w in cuts.windows(2) {
        labels.push(format!("({},{}]", w[0], w[1]));
    }
    labels.push(format!("({},inf)", cuts[cuts.len() - 1]));
    labels
}

/// Bins every numeric column at its empirical quantiles.
///
/// Levels are interval labels such as `(-inf,2.5]` in ascending interval
/// order; the class vocabulary follows first appearance.
pub fn quantile_discretize(table: &NumericTable, bins: usize) -> Result<Dataset> {
    if bins < 2 {
        return Err(Error::InvalidParam(format!("bins must be >= 2, got {bins}")));
    }
    let n = table.labels.len();
    if n == 0 {
        return Err(Error::InvalidDataset("numeric table has no rows".into()));
    }
    let mut attributes = Vec::with_capacity(table.columns.len());
    let mut coded: Vec<Vec<u32>> = Vec::with_capacity(table.columns.len());
    for (name, col) in table.names.iter().zip(&table.columns) {
        if col.len() != n {
            return Err(Error::Dimension(format!("column {name:?} has {} rows", col.len())));
        }
        if let Some(v) = col.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "column {name:?} holds non-finite value {v}"
            )));
        }
        let cuts = quantile_cuts(col, bins);
        if cuts.is_empty() {
            log::warn!("column {name:?} is constant; it becomes a single-level attribute");
        }
        // (c_{k-1}, c_k] intervals: index = number of cuts strictly below v
        coded.push(col.iter().map(|&v| cuts.partition_point(|&c| c < v) as u32).collect());
        attributes.push(Attribute::new(name.clone(), interval_labels(&cuts)));
    }
    let mut class_vocab = Vocab::default();
    let labels = table.labels.iter().map(|l| class_vocab.intern(l)).collect();
    let rows = (0..n).map(|i| coded.iter().map(|c| c[i]).collect()).collect();
    Dataset::new(attributes, table.class_name.clone(), class_vocab.levels, rows, labels)
}
