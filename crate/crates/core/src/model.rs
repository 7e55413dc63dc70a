//! Trainable parameter tables and the published embedding table with its
//! text and binary file formats.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{parse_entity_key, EntityType};
use crate::error::{parse_error, Error, Result};

/// Which table(s) form the published vector of an index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Published {
    /// The center (input) table.
    #[default]
    Center,
    /// Center plus context table.
    Sum,
}

/// Center and context tables of shape `n x dim`, plus per-index biases for
/// GloVe.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    n: usize,
    dim: usize,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub bias: Option<Vec<f64>>,
    pub context_bias: Option<Vec<f64>>,
    pub published: Published,
}

impl EmbeddingModel {
    pub fn zeros(n: usize, dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        EmbeddingModel {
            n,
            dim,
            center: vec![0.0; n * dim],
            context: vec![0.0; n * dim],
            bias: None,
            context_bias: None,
            published: Published::Center,
        }
    }

    /// Center table uniform in `[-0.5/dim, 0.5/dim]`, context table zero.
    pub fn word2vec_init<R: Rng>(n: usize, dim: usize, rng: &mut R) -> Self {
        let mut model = Self::zeros(n, dim);
        let half = 0.5 / dim as f64;
        for v in &mut model.center {
            *v = rng.gen_range(-half..half);
        }
        model
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center_row(&self, i: usize) -> &[f64] {
        &self.center[i * self.dim..(i + 1) * self.dim]
    }

    pub fn center_row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.center[i * self.dim..(i + 1) * self.dim]
    }

    pub fn context_row(&self, i: usize) -> &[f64] {
        &self.context[i * self.dim..(i + 1) * self.dim]
    }

    pub fn context_row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.context[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        let tables = self.center.iter().chain(&self.context);
        let biases = self
            .bias
            .iter()
            .flatten()
            .chain(self.context_bias.iter().flatten());
        tables.chain(biases).all(|v| v.is_finite())
    }

    /// The published vector of index `i`.
    pub fn vector(&self, i: usize) -> Vec<f64> {
        match self.published {
            Published::Center => self.center_row(i).to_vec(),
            Published::Sum => self
                .center_row(i)
                .iter()
                .zip(self.context_row(i))
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Attaches keys to the published vectors.
    pub fn publish(&self, keys: &[String]) -> Result<Embeddings> {
        if keys.len() != self.n {
            return Err(Error::LengthMismatch(keys.len(), self.n));
        }
        let mut data = Vec::with_capacity(self.n * self.dim);
        for i in 0..self.n {
            data.extend(self.vector(i));
        }
        Embeddings::new(keys.to_vec(), self.dim, data)
    }
}

/// Summary of a training run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    /// Mean loss per update in each epoch (or per reporting interval).
    pub epoch_losses: Vec<f64>,
    pub updates: u64,
}

impl TrainStats {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

/// Keyed, read-only embedding table.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    keys: Vec<String>,
    dim: usize,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

impl Embeddings {
    pub fn new(keys: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != keys.len() * dim {
            return Err(Error::LengthMismatch(data.len(), keys.len() * dim));
        }
        let mut index = HashMap::with_capacity(keys.len());
        for (i, k) in keys.iter().enumerate() {
            if k.is_empty() || k.chars().any(char::is_whitespace) {
                return Err(Error::Validation(format!("invalid embedding key `{k}`")));
            }
            if index.insert(k.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate embedding key `{k}`")));
            }
        }
        Ok(Embeddings {
            keys,
            dim,
            data,
            index,
        })
    }

    pub fn from_rows(keys: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Validation("rows differ in length".into()));
        }
        Self::new(keys, dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn key(&self, i: usize) -> &str {
        &self.keys[i]
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.index_of(key).map(|i| self.row(i))
    }

    /// Entity type encoded in the key (`@PER:...`), if any.
    pub fn entity_type(&self, i: usize) -> Option<EntityType> {
        parse_entity_key(&self.keys[i]).map(|(t, _)| t)
    }

    /// Applies `f` to every vector (used for invariance checks).
    pub fn map_rows(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..self.len()).map(|i| f(self.row(i))).collect();
        Self::from_rows(self.keys.clone(), &rows)
    }

    /// Text format: header `<n> <dim>`, then `key v1 ... vdim` per line.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for i in 0..self.len() {
            w.write_all(self.keys[i].as_bytes())?;
            for v in self.row(i) {
                write!(w, " {v}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| parse_error(1, "missing header"))??;
        let (n, dim) = parse_header(&header).ok_or_else(|| parse_error(1, "bad header"))?;
        let mut keys = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * dim);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line_no = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split_ascii_whitespace();
            let key = cols.next().ok_or_else(|| parse_error(line_no, "missing key"))?;
            let before = data.len();
            for c in cols {
                data.push(
                    c.parse::<f64>()
                        .map_err(|_| parse_error(line_no, format!("bad value `{c}`")))?,
                );
            }
            if data.len() - before != dim {
                return Err(parse_error(
                    line_no,
                    format!("expected {dim} values, got {}", data.len() - before),
                ));
            }
            keys.push(key.to_string());
        }
        if keys.len() != n {
            return Err(parse_error(1, format!("header says {n} rows, found {}", keys.len())));
        }
        Self::new(keys, dim, data)
    }

    /// Binary format: text header line `<n> <dim>`, then per row the key,
    /// a space, `dim` little-endian f32 values and a newline.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for i in 0..self.len() {
            w.write_all(self.keys[i].as_bytes())?;
            w.write_all(b" ")?;
            for &v in self.row(i) {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_binary<R: BufRead>(mut reader: R) -> Result<Self> {
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let (n, dim) =
            parse_header(header.trim_end()).ok_or_else(|| parse_error(1, "bad header"))?;
        let mut keys = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * dim);
        let mut buf = vec![0u8; dim * 4];
        for row in 0..n {
            let mut key = Vec::new();
            reader.read_until(b' ', &mut key)?;
            if key.pop() != Some(b' ') {
                return Err(parse_error(row + 2, "truncated binary embedding file"));
            }
            while key.first() == Some(&b'\n') {
                key.remove(0);
            }
            let key = String::from_utf8(key).map_err(|_| parse_error(row + 2, "key not UTF-8"))?;
            reader.read_exact(&mut buf)?;
            data.extend(
                buf.chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64),
            );
            keys.push(key);
        }
        Self::new(keys, dim, data)
    }

    /// Writes text, or binary when `binary` is set.
    pub fn save(&self, path: &Path, binary: bool) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        if binary {
            self.write_binary(&mut w)?;
        } else {
            self.write_text(&mut w)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Loads a file; the binary format is assumed for a `.bin` extension.
    pub fn load(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        if path.extension().is_some_and(|e| e == "bin") {
            Self::read_binary(reader)
        } else {
            Self::read_text(reader)
        }
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut it = line.split_ascii_whitespace();
    let n = it.next()?.parse().ok()?;
    let dim = it.next()?.parse().ok()?;
    (dim > 0).then_some((n, dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Embeddings {
        Embeddings::from_rows(
            vec!["a".into(), "@PER:Q76".into()],
            &[vec![0.5, -1.25, 3.0], vec![1e-7, 0.1, -0.0]],
        )
        .unwrap()
    }

    #[test]
    fn text_round_trip_is_exact() {
        let e = sample();
        let mut buf = Vec::new();
        e.write_text(&mut buf).unwrap();
        assert!(buf.starts_with(b"2 3\na 0.5 -1.25 3\n"));
        assert_eq!(Embeddings::read_text(buf.as_slice()).unwrap(), e);
    }

    #[test]
    fn binary_round_trip_at_f32_precision() {
        let e = sample();
        let mut buf = Vec::new();
        e.write_binary(&mut buf).unwrap();
        let back = Embeddings::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.keys(), e.keys());
        for i in 0..e.len() {
            for (a, b) in back.row(i).iter().zip(e.row(i)) {
                assert!((a - b).abs() <= 1e-7 * b.abs().max(1e-30));
            }
        }
    }

    #[test]
    fn entity_type_from_key() {
        let e = sample();
        assert_eq!(e.entity_type(0), None);
        assert_eq!(e.entity_type(1), Some(EntityType::Per));
    }

    #[test]
    fn rejects_duplicate_keys() {
        let err = Embeddings::from_rows(vec!["a".into(), "a".into()], &[vec![1.0], vec![2.0]]);
        assert!(err.is_err());
    }

    #[test]
    fn sum_publication_adds_tables() {
        let mut m = EmbeddingModel::zeros(1, 2);
        m.center.copy_from_slice(&[1.0, 2.0]);
        m.context.copy_from_slice(&[0.5, 0.5]);
        assert_eq!(m.vector(0), [1.0, 2.0]);
        m.published = Published::Sum;
        assert_eq!(m.vector(0), [1.5, 2.5]);
    }
}
