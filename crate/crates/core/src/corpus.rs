//! Plaintext corpus: conversion, indexing and size statistics.
//!
//! Layout: `<root>/<yymm>/<stem>.txt`, where `stem` is the versionless
//! canonical identifier with `/` replaced by `_` (e.g.
//! `9901/hep-th_9901001.txt`). The index accepts a file in any shard
//! directory, but each identifier may appear only once.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::arxiv_id::ArxivId;
use crate::par::{self, Exec};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("duplicate documents for {id}: {first} and {second}")]
    Duplicate { id: String, first: PathBuf, second: PathBuf },
}

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error("converter template {0:?} is not a valid command line")]
    BadTemplate(String),
    #[error("could not start converter for {src}: {source}")]
    Spawn { src: PathBuf, source: io::Error },
    #[error("converter failed on {src} ({status}): {stderr}")]
    Failed { src: PathBuf, status: String, stderr: String },
    #[error("converter produced no text for {src}")]
    EmptyOutput { src: PathBuf },
}

/// Where the text for `id` lives under `root`.
pub fn text_path(root: &Path, id: &ArxivId) -> PathBuf {
    root.join(id.yymm()).join(format!("{}.txt", id.file_stem()))
}

/// Parses a file stem such as `hep-th_9901001` or `0704.0001v2`.
pub fn id_from_stem(stem: &str) -> Option<ArxivId> {
    ArxivId::parse(&stem.replace('_', "/")).ok()
}

/// Runs `template` (with `{in}` and `{out}` placeholders) on one document.
///
/// The template is split shell-style but not run through a shell.
pub fn convert_document(src: &Path, dst: &Path, template: &str) -> Result<PathBuf, ConvertError> {
    let words = shlex::split(template)
        .filter(|w| !w.is_empty())
        .ok_or_else(|| ConvertError::BadTemplate(template.to_string()))?;
    let fill = |w: &str| {
        w.replace("{in}", &src.to_string_lossy()).replace("{out}", &dst.to_string_lossy())
    };
    if let Some(parent) = dst.parent() {
        fs::create_dir_all(parent)
            .map_err(|source| ConvertError::Spawn { src: src.to_path_buf(), source })?;
    }
    let output = Command::new(fill(&words[0]))
        .args(words[1..].iter().map(|w| fill(w)))
        .output()
        .map_err(|source| ConvertError::Spawn { src: src.to_path_buf(), source })?;
    if !output.status.success() {
        return Err(ConvertError::Failed {
            src: src.to_path_buf(),
            status: output.status.to_string(),
            stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
        });
    }
    match fs::metadata(dst) {
        Ok(m) if m.len() > 0 => Ok(dst.to_path_buf()),
        _ => Err(ConvertError::EmptyOutput { src: src.to_path_buf() }),
    }
}

#[derive(Debug, Default, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ConvertReport {
    pub converted: Vec<String>,
    /// Documents whose converter produced no text.
    pub empty: Vec<String>,
    /// `(id, error message)`
    pub failed: Vec<(String, String)>,
    /// Source files whose names are not identifiers.
    pub skipped: Vec<String>,
}

/// Converts every identifier-named file under `src_dir` into the corpus layout under `dst_root`.
pub fn convert_tree(src_dir: &Path, dst_root: &Path, template: &str, exec: Exec) -> ConvertReport {
    let mut report = ConvertReport::default();
    let mut jobs: BTreeMap<String, (PathBuf, PathBuf)> = BTreeMap::new();
    for entry in WalkDir::new(src_dir).sort_by_file_name().into_iter().filter_map(Result::ok) {
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        match id_from_stem(&stem) {
            Some(id) => {
                let key = id.canonical(false);
                let dst = text_path(dst_root, &id);
                jobs.insert(key, (path.to_path_buf(), dst));
            }
            None => report.skipped.push(path.display().to_string()),
        }
    }
    let jobs: Vec<_> = jobs.into_iter().collect();
    let results = par::map(exec, &jobs, |(_, (src, dst))| convert_document(src, dst, template));
    for ((id, _), res) in jobs.into_iter().zip(results) {
        match res {
            Ok(_) => report.converted.push(id),
            Err(ConvertError::EmptyOutput { .. }) => {
                log::warn!("{id}: converter produced no text");
                report.empty.push(id)
            }
            Err(e) => {
                log::warn!("{e}");
                report.failed.push((id, e.to_string()))
            }
        }
    }
    report
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusIndex {
    /// Versionless canonical id to text file.
    pub docs: BTreeMap<String, PathBuf>,
    /// Metadata ids without a text file.
    pub missing: BTreeSet<String>,
}

impl CorpusIndex {
    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn path(&self, id: &str) -> Option<&Path> {
        self.docs.get(id).map(PathBuf::as_path)
    }
}

/// Indexes the `.txt` files under `root` against the metadata ids.
///
/// Files whose names are not identifiers are skipped with a warning; files
/// for ids outside the metadata are ignored.
pub fn build_index<'a, I>(root: &Path, metadata_ids: I) -> Result<CorpusIndex, CorpusError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut found: BTreeMap<String, PathBuf> = BTreeMap::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| CorpusError::Io {
            path: e.path().unwrap_or(root).to_path_buf(),
            source: e.into_io_error().unwrap_or_else(|| io::Error::other("directory loop")),
        })?;
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let Some(id) = id_from_stem(&stem) else {
            log::warn!("skipping {}: name is not an arXiv identifier", path.display());
            continue;
        };
        let key = id.canonical(false);
        if let Some(first) = found.get(&key) {
            return Err(CorpusError::Duplicate { id: key, first: first.clone(), second: path.to_path_buf() });
        }
        found.insert(key, path.to_path_buf());
    }

    let mut index = CorpusIndex::default();
    for raw in metadata_ids {
        let key = ArxivId::parse(raw).map(|id| id.canonical(false)).unwrap_or_else(|_| raw.to_string());
        match found.remove(&key) {
            Some(p) => {
                index.docs.insert(key, p);
            }
            None if !index.docs.contains_key(&key) => {
                index.missing.insert(key);
            }
            None => {}
        }
    }
    if !found.is_empty() {
        log::debug!("{} text files have no metadata record", found.len());
    }
    Ok(index)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub doc_count: u64,
    pub total_words: u64,
    pub total_bytes: u64,
}

/// Whitespace-delimited token count.
pub fn count_words(bytes: &[u8]) -> u64 {
    String::from_utf8_lossy(bytes).split_whitespace().count() as u64
}

pub fn corpus_stats(index: &CorpusIndex, exec: Exec) -> Result<CorpusStats, CorpusError> {
    let paths: Vec<&PathBuf> = index.docs.values().collect();
    let per_file = par::try_map(exec, &paths, |p| {
        fs::read(p)
            .map(|b| (count_words(&b), b.len() as u64))
            .map_err(|source| CorpusError::Io { path: p.to_path_buf(), source })
    })?;
    Ok(per_file.into_iter().fold(
        CorpusStats { doc_count: paths.len() as u64, ..Default::default() },
        |mut acc, (w, b)| {
            acc.total_words += w;
            acc.total_bytes += b;
            acc
        },
    ))
}
