use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::arxiv_id::ArxivId;

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FeatureMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(cols: usize, rows: Vec<Vec<f32>>) -> Result<Self, LearnError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(LearnError::Dimension { line: i + 1, expected: cols, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(FeatureMatrix { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Side-by-side concatenation of matrices with equal row counts.
    pub fn hconcat(parts: &[&FeatureMatrix]) -> Result<FeatureMatrix, LearnError> {
        let rows = parts.first().map_or(0, |p| p.rows);
        if let Some(p) = parts.iter().find(|p| p.rows != rows) {
            return Err(LearnError::Domain(format!(
                "cannot concatenate channels with {} and {} rows",
                rows, p.rows
            )));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for p in parts {
                data.extend_from_slice(p.row(i));
            }
        }
        Ok(FeatureMatrix { rows, cols, data })
    }
}

/// Width of the text embeddings.
pub const EMBED_DIM: usize = 512;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic stand-in for a sentence encoder: signed feature hashing
/// of lower-cased whitespace tokens into 512 buckets, L2-normalized.
/// Empty text maps to the zero vector.
pub fn fallback_embed(text: &str) -> Vec<f32> {
    let mut v = vec![0f32; EMBED_DIM];
    for token in text.split_whitespace() {
        let h = fnv1a(token.to_lowercase().as_bytes());
        let bucket = (h % EMBED_DIM as u64) as usize;
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        v[bucket] += sign;
    }
    let norm = v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x = (*x as f64 / norm) as f32;
        }
    }
    v
}

fn key(raw: &str) -> String {
    ArxivId::parse(raw).map(|id| id.canonical(false)).unwrap_or_else(|_| raw.trim().to_string())
}

/// Reads `id<TAB>f1,f2,...` rows into a matrix aligned with `ids`.
/// Ids without a row get zeros; rows for unknown ids are ignored.
pub fn load_embeddings(path: &Path, ids: &[String], dim: usize) -> Result<FeatureMatrix, LearnError> {
    let text = fs::read_to_string(path).map_err(|e| LearnError::io(path, e))?;
    parse_embeddings(&text, ids, dim)
}

pub fn parse_embeddings(text: &str, ids: &[String], dim: usize) -> Result<FeatureMatrix, LearnError> {
    let position: std::collections::HashMap<String, usize> =
        ids.iter().enumerate().map(|(i, s)| (key(s), i)).collect();
    let mut m = FeatureMatrix::zeros(ids.len(), dim);
    for (no, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        if line.trim().is_empty() {
            continue;
        }
        let (id, values) = line
            .split_once('\t')
            .ok_or_else(|| LearnError::Parse { line: no, message: "expected id<TAB>values".into() })?;
        let parsed: Vec<f32> = values
            .split(',')
            .map(|v| v.trim().parse::<f32>())
            .collect::<Result<_, _>>()
            .map_err(|e| LearnError::Parse { line: no, message: e.to_string() })?;
        if parsed.len() != dim {
            return Err(LearnError::Dimension { line: no, expected: dim, got: parsed.len() });
        }
        if let Some(&i) = position.get(&key(id)) {
            m.row_mut(i).copy_from_slice(&parsed);
        }
    }
    Ok(m)
}

pub fn render_embeddings(ids: &[String], m: &FeatureMatrix) -> String {
    let mut out = String::new();
    for (i, id) in ids.iter().enumerate() {
        out.push_str(id);
        out.push('\t');
        for (j, x) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{x}");
        }
        out.push('\n');
    }
    out
}

pub fn write_embeddings(path: &Path, ids: &[String], m: &FeatureMatrix) -> Result<(), LearnError> {
    fs::write(path, render_embeddings(ids, m)).map_err(|e| LearnError::io(path, e))
}
