//! Dataset containers.
//!
//! Each observation kind gets its own type so that models state their data
//! requirements in their signatures instead of checking tags at runtime.
//! All containers are immutable after construction and enforce their shape
//! invariants (nonempty, consistent dimension, in-range word ids) up front.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Nonnegative count observations.
#[derive(Debug, Clone, PartialEq)]
pub struct CountData {
    values: Vec<u64>,
}

impl CountData {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("count dataset must hold at least one observation"));
        }
        Ok(CountData { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }
}

/// Dense real-vector observations (rows of dimension `dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorData {
    rows: Vec<f64>, // row-major, len = n * dim
    dim: usize,
}

impl VectorData {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = match rows.first() {
            Some(r) if !r.is_empty() => r.len(),
            _ => return Err(Error::invalid("vector dataset must hold at least one nonempty row")),
        };
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::invalid(format!(
                    "row {i} has dimension {}, expected {dim}",
                    r.len()
                )));
            }
            flat.extend_from_slice(r);
        }
        Ok(VectorData { rows: flat, dim })
    }

    pub fn from_flat(rows: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || rows.is_empty() || rows.len() % dim != 0 {
            return Err(Error::invalid("flat vector data must be a nonempty multiple of dim"));
        }
        Ok(VectorData { rows, dim })
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks_exact(self.dim)
    }
}

/// Feature rows paired with a scalar target.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    rows: Vec<DVector<f64>>,
    targets: Vec<f64>,
}

impl RegressionData {
    pub fn new(rows: Vec<DVector<f64>>, targets: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("regression dataset must hold at least one row"));
        }
        if rows.len() != targets.len() {
            return Err(Error::invalid(format!(
                "{} feature rows but {} targets",
                rows.len(),
                targets.len()
            )));
        }
        let dim = rows[0].len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("all feature rows must share one nonzero dimension"));
        }
        Ok(RegressionData { rows, targets })
    }

    /// Standardizes raw feature columns to zero mean and unit variance,
    /// appends a constant intercept feature, and scales targets by
    /// `target_scale`. Constant columns are left unscaled.
    pub fn standardized(
        raw_rows: &[Vec<f64>],
        raw_targets: &[f64],
        target_scale: f64,
    ) -> Result<Self> {
        if raw_rows.is_empty() || raw_rows[0].is_empty() {
            return Err(Error::invalid("regression dataset must hold at least one row"));
        }
        let n = raw_rows.len();
        let d = raw_rows[0].len();
        let mut mean = vec![0.0; d];
        for row in raw_rows {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = vec![0.0; d];
        for row in raw_rows {
            for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let sd: Vec<f64> = var
            .iter()
            .map(|&s| {
                let sd = (s / n as f64).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        let rows = raw_rows
            .iter()
            .map(|row| {
                DVector::from_iterator(
                    d + 1,
                    row.iter()
                        .zip(&mean)
                        .zip(&sd)
                        .map(|((&v, &m), &s)| (v - m) / s)
                        .chain(std::iter::once(1.0)),
                )
            })
            .collect();
        let targets = raw_targets.iter().map(|&t| t * target_scale).collect();
        RegressionData::new(rows, targets)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn features(&self, i: usize) -> &DVector<f64> {
        &self.rows[i]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DVector<f64>, f64)> {
        self.rows.iter().zip(self.targets.iter().copied())
    }

    /// Rows selected by index, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let rows = idx.iter().map(|&i| self.rows[i].clone()).collect();
        let targets = idx.iter().map(|&i| self.targets[i]).collect();
        RegressionData::new(rows, targets)
    }
}

/// One bag-of-words document: sorted unique `(word_id, count)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    words: Vec<(u32, u32)>,
    total: u64,
}

impl Document {
    /// Builds a document, summing duplicate word ids. Counts must be
    /// positive and ids must be below `vocab`.
    pub fn new(mut pairs: Vec<(u32, u32)>, vocab: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid("document must hold at least one word"));
        }
        pairs.sort_unstable_by_key(|&(w, _)| w);
        let mut words: Vec<(u32, u32)> = Vec::with_capacity(pairs.len());
        for (w, c) in pairs {
            if c == 0 {
                return Err(Error::invalid(format!("word {w} has zero count")));
            }
            if w as usize >= vocab {
                return Err(Error::invalid(format!(
                    "word id {w} out of range for vocabulary size {vocab}"
                )));
            }
            match words.last_mut() {
                Some(last) if last.0 == w => last.1 += c,
                _ => words.push((w, c)),
            }
        }
        let total = words.iter().map(|&(_, c)| c as u64).sum();
        Ok(Document { words, total })
    }

    /// Unique words with their counts, sorted by word id.
    pub fn words(&self) -> &[(u32, u32)] {
        &self.words
    }

    pub fn n_unique(&self) -> usize {
        self.words.len()
    }

    /// Total token count.
    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A corpus of documents over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentData {
    docs: Vec<Document>,
    vocab: usize,
}

impl DocumentData {
    pub fn new(docs: Vec<Document>, vocab: usize) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::invalid("corpus must hold at least one document"));
        }
        if vocab == 0 {
            return Err(Error::invalid("vocabulary size must be positive"));
        }
        for (i, d) in docs.iter().enumerate() {
            if let Some(&(w, _)) = d.words().iter().find(|&&(w, _)| w as usize >= vocab) {
                return Err(Error::invalid(format!(
                    "document {i} holds word id {w} out of range for vocabulary size {vocab}"
                )));
            }
        }
        Ok(DocumentData { docs, vocab })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn doc(&self, i: usize) -> &Document {
        &self.docs[i]
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }
}
