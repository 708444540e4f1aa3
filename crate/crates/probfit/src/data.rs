//! Batched data access: in-memory and streaming CSV/sequence sources.
//!
//! A `BatchSource` yields each row exactly once per epoch and supports
//! repeated epochs via `reset`. Sources are single-consumer; the engine
//! reads batches on one coordinator thread and hands them to workers.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Weighted rows of feature vectors, the unit of summarization.
///
/// Stored flat (row-major) behind an `Arc` so in-memory sources can hand
/// out batch views without copying.
#[derive(Clone, Debug)]
pub struct DataBatch {
    data: Arc<[f64]>,
    weights: Option<Arc<[f64]>>,
    labels: Option<Arc<[i64]>>,
    start: usize,
    rows: usize,
    cols: usize,
}

impl DataBatch {
    pub fn from_flat(data: Vec<f64>, cols: usize) -> Result<Self> {
        if cols == 0 || data.len() % cols != 0 {
            return Err(Error::ShapeMismatch(format!(
                "flat buffer of {} values is not a multiple of {} columns",
                data.len(),
                cols
            )));
        }
        for (i, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteData(format!(
                    "row {}, column {}",
                    i / cols,
                    i % cols
                )));
            }
        }
        let rows = data.len() / cols;
        Ok(DataBatch {
            data: data.into(),
            weights: None,
            labels: None,
            start: 0,
            rows,
            cols,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(1);
        let mut flat = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "ragged rows: {} vs {}",
                    r.len(),
                    cols
                )));
            }
            flat.extend_from_slice(r);
        }
        Self::from_flat(flat, cols)
    }

    /// 1-D convenience constructor.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::from_flat(values.to_vec(), 1)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.rows {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for {} rows",
                weights.len(),
                self.rows
            )));
        }
        for &w in &weights {
            if !w.is_finite() {
                return Err(Error::NonFiniteData(format!("weight {}", w)));
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight(w));
            }
        }
        self.weights = Some(weights.into());
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != self.rows {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                self.rows
            )));
        }
        self.labels = Some(labels.into());
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let off = (self.start + i) * self.cols;
        &self.data[off..off + self.cols]
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[self.start + i],
            None => 1.0,
        }
    }

    pub fn label(&self, i: usize) -> Option<i64> {
        self.labels.as_ref().map(|l| l[self.start + i])
    }

    pub fn has_labels(&self) -> bool {
        self.labels.is_some()
    }

    pub fn total_weight(&self) -> f64 {
        (0..self.rows).map(|i| self.weight(i)).sum()
    }

    /// Zero-copy view of a contiguous row range.
    pub fn slice(&self, start: usize, len: usize) -> DataBatch {
        assert!(start + len <= self.rows, "slice out of range");
        DataBatch {
            data: Arc::clone(&self.data),
            weights: self.weights.clone(),
            labels: self.labels.clone(),
            start: self.start + start,
            rows: len,
            cols: self.cols,
        }
    }
}

/// One observation sequence for sequence models (HMMs, Markov chains).
#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    data: Vec<f64>,
    dim: usize,
    weight: f64,
}

impl Sequence {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || data.is_empty() || data.len() % dim != 0 {
            return Err(Error::EmptySequence);
        }
        for v in &data {
            if !v.is_finite() {
                return Err(Error::NonFiniteData(format!("sequence value {}", v)));
            }
        }
        Ok(Sequence {
            data,
            dim,
            weight: 1.0,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "ragged sequence rows: {} vs {}",
                    r.len(),
                    dim
                )));
            }
            flat.extend_from_slice(r);
        }
        Sequence::new(flat, dim.max(1))
    }

    /// 1-D convenience constructor for symbol sequences.
    pub fn from_symbols(symbols: &[usize]) -> Result<Self> {
        Sequence::new(symbols.iter().map(|&s| s as f64).collect(), 1)
    }

    pub fn with_weight(mut self, weight: f64) -> Result<Self> {
        if weight < 0.0 {
            return Err(Error::NegativeWeight(weight));
        }
        self.weight = weight;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn obs(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Integer symbol at position t, for discrete sequence models.
    pub fn symbol(&self, t: usize) -> Result<usize> {
        let v = self.obs(t)[0];
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::NonFiniteData(format!(
                "expected a nonnegative integer symbol, got {}",
                v
            )));
        }
        Ok(v as usize)
    }
}

/// Pull-based producer of batches for out-of-core scans.
pub trait BatchSource {
    type Batch: Send + Sync + Clone;

    /// Rewind to the start of the data for a new epoch.
    fn reset(&mut self) -> Result<()>;

    /// Next batch, or None at the end of the epoch.
    fn next_batch(&mut self) -> Result<Option<Self::Batch>>;
}

/// In-memory source yielding fixed-size views of one backing batch.
pub struct MemorySource {
    batch: DataBatch,
    batch_size: usize,
    cursor: usize,
}

impl MemorySource {
    /// `batch_size = None` yields the whole dataset as a single batch.
    pub fn new(batch: DataBatch, batch_size: Option<usize>) -> Self {
        let batch_size = batch_size.unwrap_or(batch.n_rows().max(1));
        MemorySource {
            batch,
            batch_size: batch_size.max(1),
            cursor: 0,
        }
    }

    pub fn data(&self) -> &DataBatch {
        &self.batch
    }
}

impl BatchSource for MemorySource {
    type Batch = DataBatch;

    fn reset(&mut self) -> Result<()> {
        self.cursor = 0;
        Ok(())
    }

    fn next_batch(&mut self) -> Result<Option<DataBatch>> {
        if self.cursor >= self.batch.n_rows() {
            return Ok(None);
        }
        let len = self.batch_size.min(self.batch.n_rows() - self.cursor);
        let out = self.batch.slice(self.cursor, len);
        self.cursor += len;
        Ok(Some(out))
    }
}

/// Which column holds labels or weights in a CSV file.
#[derive(Clone, Debug)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

/// Column layout of a CSV source. Every column not claimed by the label
/// or weight designation is a feature column.
#[derive(Clone, Debug, Default)]
pub struct CsvSchema {
    pub label_column: Option<ColumnRef>,
    pub weight_column: Option<ColumnRef>,
}

/// Streaming CSV reader; memory use is bounded by one batch.
pub struct CsvSource {
    path: PathBuf,
    schema: CsvSchema,
    batch_size: usize,
    reader: Option<BufReader<File>>,
    line_no: usize,
    // resolved on first open
    label_idx: Option<usize>,
    weight_idx: Option<usize>,
    n_cols: Option<usize>,
}

impl CsvSource {
    pub fn open(path: impl AsRef<Path>, schema: CsvSchema, batch_size: usize) -> Result<Self> {
        let mut src = CsvSource {
            path: path.as_ref().to_path_buf(),
            schema,
            batch_size: batch_size.max(1),
            reader: None,
            line_no: 0,
            label_idx: None,
            weight_idx: None,
            n_cols: None,
        };
        src.reset()?;
        Ok(src)
    }

    fn resolve_column(
        colref: &ColumnRef,
        header: Option<&[String]>,
        width: usize,
        line: usize,
    ) -> Result<usize> {
        match colref {
            ColumnRef::Index(i) => {
                if *i >= width {
                    return Err(Error::Parse {
                        line,
                        message: format!("column index {} out of range (width {})", i, width),
                    });
                }
                Ok(*i)
            }
            ColumnRef::Name(name) => header
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("no column named {:?} in header", name),
                }),
        }
    }
}

fn split_csv_line(line: &str) -> Vec<String> {
    line.split(',').map(|s| s.trim().to_string()).collect()
}

fn looks_like_header(fields: &[String]) -> bool {
    fields.iter().any(|f| f.parse::<f64>().is_err())
}

impl BatchSource for CsvSource {
    type Batch = DataBatch;

    fn reset(&mut self) -> Result<()> {
        let file = File::open(&self.path)?;
        let mut reader = BufReader::new(file);
        self.line_no = 0;

        // Peek the first line to detect a header and fix the width.
        let mut first = String::new();
        let n = reader.read_line(&mut first)?;
        if n == 0 {
            return Err(Error::EmptySource);
        }
        self.line_no = 1;
        let fields = split_csv_line(first.trim_end());
        let width = fields.len();
        let header = if looks_like_header(&fields) {
            Some(fields)
        } else {
            // First line is data; reopen so next_batch sees it again.
            let file = File::open(&self.path)?;
            reader = BufReader::new(file);
            self.line_no = 0;
            None
        };

        self.label_idx = match &self.schema.label_column {
            Some(c) => Some(Self::resolve_column(c, header.as_deref(), width, 1)?),
            None => None,
        };
        self.weight_idx = match &self.schema.weight_column {
            Some(c) => Some(Self::resolve_column(c, header.as_deref(), width, 1)?),
            None => None,
        };
        if self.label_idx.is_some() && self.label_idx == self.weight_idx {
            return Err(Error::InvalidConfig(
                "label and weight columns coincide".into(),
            ));
        }
        self.n_cols = Some(width);
        self.reader = Some(reader);
        Ok(())
    }

    fn next_batch(&mut self) -> Result<Option<DataBatch>> {
        let width = self.n_cols.expect("reset before next_batch");
        let reader = self.reader.as_mut().expect("reset before next_batch");
        let feat_cols =
            width - self.label_idx.iter().count() - self.weight_idx.iter().count();

        let mut flat = Vec::with_capacity(self.batch_size.saturating_mul(feat_cols).min(1 << 20));
        let mut weights = Vec::new();
        let mut labels = Vec::new();
        let mut rows = 0;
        let mut line = String::new();
        while rows < self.batch_size {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                break;
            }
            self.line_no += 1;
            let trimmed = line.trim_end();
            if trimmed.is_empty() {
                continue;
            }
            let fields = split_csv_line(trimmed);
            if fields.len() != width {
                return Err(Error::Parse {
                    line: self.line_no,
                    message: format!("expected {} columns, got {}", width, fields.len()),
                });
            }
            for (i, f) in fields.iter().enumerate() {
                if Some(i) == self.label_idx {
                    let lab: i64 = f.parse().map_err(|_| Error::Parse {
                        line: self.line_no,
                        message: format!("non-integer label {:?}", f),
                    })?;
                    labels.push(lab);
                } else {
                    let v: f64 = f.parse().map_err(|_| Error::Parse {
                        line: self.line_no,
                        message: format!("non-numeric cell {:?}", f),
                    })?;
                    if Some(i) == self.weight_idx {
                        weights.push(v);
                    } else {
                        if !v.is_finite() {
                            return Err(Error::Parse {
                                line: self.line_no,
                                message: format!("non-finite value {:?}", f),
                            });
                        }
                        flat.push(v);
                    }
                }
            }
            rows += 1;
        }
        if rows == 0 {
            return Ok(None);
        }
        let mut batch = DataBatch::from_flat(flat, feat_cols)?;
        if self.weight_idx.is_some() {
            batch = batch.with_weights(weights)?;
        }
        if self.label_idx.is_some() {
            batch = batch.with_labels(labels)?;
        }
        Ok(Some(batch))
    }
}

/// In-memory sequence source; a batch is a set of whole sequences.
pub struct SequenceMemorySource {
    sequences: Arc<[Sequence]>,
    batch_size: usize,
    cursor: usize,
}

impl SequenceMemorySource {
    pub fn new(sequences: Vec<Sequence>, batch_size_in_sequences: Option<usize>) -> Self {
        let n = sequences.len().max(1);
        SequenceMemorySource {
            sequences: sequences.into(),
            batch_size: batch_size_in_sequences.unwrap_or(n).max(1),
            cursor: 0,
        }
    }

    pub fn sequences(&self) -> &[Sequence] {
        &self.sequences
    }
}

impl BatchSource for SequenceMemorySource {
    type Batch = Vec<Sequence>;

    fn reset(&mut self) -> Result<()> {
        self.cursor = 0;
        Ok(())
    }

    fn next_batch(&mut self) -> Result<Option<Vec<Sequence>>> {
        if self.cursor >= self.sequences.len() {
            return Ok(None);
        }
        let end = (self.cursor + self.batch_size).min(self.sequences.len());
        let out = self.sequences[self.cursor..end].to_vec();
        self.cursor = end;
        Ok(Some(out))
    }
}

/// Streaming reader for sequence files: blank-line-separated blocks, one
/// observation row per line, values separated by whitespace or commas.
pub struct SequenceFileSource {
    path: PathBuf,
    batch_size: usize,
    reader: Option<BufReader<File>>,
    line_no: usize,
}

impl SequenceFileSource {
    pub fn open(path: impl AsRef<Path>, batch_size_in_sequences: usize) -> Result<Self> {
        let mut src = SequenceFileSource {
            path: path.as_ref().to_path_buf(),
            batch_size: batch_size_in_sequences.max(1),
            reader: None,
            line_no: 0,
        };
        src.reset()?;
        Ok(src)
    }

    fn read_sequence(&mut self) -> Result<Option<Sequence>> {
        let reader = self.reader.as_mut().expect("reset before read");
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                break;
            }
            self.line_no += 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                if rows.is_empty() {
                    continue; // leading/duplicate blank lines
                }
                break;
            }
            let row: Vec<f64> = trimmed
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>().map_err(|_| Error::Parse {
                        line: self.line_no,
                        message: format!("non-numeric value {:?}", s),
                    })
                })
                .collect::<Result<_>>()?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::Parse {
                        line: self.line_no,
                        message: format!(
                            "ragged observation row: {} values, expected {}",
                            row.len(),
                            first.len()
                        ),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Ok(None);
        }
        Ok(Some(Sequence::from_rows(&rows)?))
    }
}

impl BatchSource for SequenceFileSource {
    type Batch = Vec<Sequence>;

    fn reset(&mut self) -> Result<()> {
        self.reader = Some(BufReader::new(File::open(&self.path)?));
        self.line_no = 0;
        Ok(())
    }

    fn next_batch(&mut self) -> Result<Option<Vec<Sequence>>> {
        let mut out = Vec::new();
        while out.len() < self.batch_size {
            match self.read_sequence()? {
                Some(seq) => out.push(seq),
                None => break,
            }
        }
        if out.is_empty() {
            Ok(None)
        } else {
            Ok(Some(out))
        }
    }
}
