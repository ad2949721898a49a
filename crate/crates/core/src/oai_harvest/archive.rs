//! Line-delimited JSON metadata archives and field-population counts.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::record::ArticleMetadata;

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

impl ArchiveError {
    fn io(path: &Path, source: io::Error) -> Self {
        ArchiveError::Io { path: path.to_path_buf(), source }
    }
}

/// Writes one JSON object per line. Returns the number of records written.
pub fn write_archive<'a, I>(records: I, path: &Path) -> Result<usize, ArchiveError>
where
    I: IntoIterator<Item = &'a ArticleMetadata>,
{
    let file = File::create(path).map_err(|e| ArchiveError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut n = 0;
    for r in records {
        serde_json::to_writer(&mut out, r)
            .map_err(|e| ArchiveError::io(path, io::Error::other(e)))?;
        out.write_all(b"\n").map_err(|e| ArchiveError::io(path, e))?;
        n += 1;
    }
    out.flush().map_err(|e| ArchiveError::io(path, e))?;
    Ok(n)
}

/// Streams records from an archive; blank lines are skipped.
pub struct ArchiveReader {
    path: PathBuf,
    lines: io::Lines<BufReader<File>>,
    line_no: usize,
}

impl ArchiveReader {
    pub fn open(path: &Path) -> Result<Self, ArchiveError> {
        let file = File::open(path).map_err(|e| ArchiveError::io(path, e))?;
        Ok(ArchiveReader { path: path.to_path_buf(), lines: BufReader::new(file).lines(), line_no: 0 })
    }
}

impl Iterator for ArchiveReader {
    type Item = Result<ArticleMetadata, ArchiveError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(ArchiveError::io(&self.path, e))),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| ArchiveError::Parse {
                path: self.path.clone(),
                line: self.line_no,
                message,
            };
            let rec = match serde_json::from_str::<ArticleMetadata>(&line) {
                Ok(r) => r,
                Err(e) => return Some(Err(parse_err(e.to_string()))),
            };
            return Some(rec.validate().map(|_| rec).map_err(|e| parse_err(e.to_string())));
        }
    }
}

pub fn read_archive(path: &Path) -> Result<Vec<ArticleMetadata>, ArchiveError> {
    ArchiveReader::open(path)?.collect()
}

/// Field names in archive order.
pub const FIELDS: [&str; 11] = [
    "id", "submitter", "authors", "title", "comments", "journal-ref", "doi", "report-no",
    "abstract", "categories", "versions",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsReport {
    pub total: u64,
    pub per_field: BTreeMap<String, u64>,
}

impl CountsReport {
    pub fn get(&self, field: &str) -> u64 {
        self.per_field.get(field).copied().unwrap_or(0)
    }

    pub fn render_table(&self) -> String {
        let mut out = format!("{:<12} {:>10}\n", "field", "count");
        out.push_str(&format!("{:<12} {:>10}\n", "total", self.total));
        for f in FIELDS {
            out.push_str(&format!("{:<12} {:>10}\n", f, self.get(f)));
        }
        out
    }
}

fn present(s: &Option<String>) -> bool {
    s.as_deref().is_some_and(|v| !v.trim().is_empty())
}

/// Counts records with each field present and non-empty.
pub fn field_counts<'a, I>(records: I) -> CountsReport
where
    I: IntoIterator<Item = &'a ArticleMetadata>,
{
    let mut counts = [0u64; FIELDS.len()];
    let mut total = 0;
    for r in records {
        total += 1;
        let flags = [
            !r.id.trim().is_empty(),
            present(&r.submitter),
            !r.authors.trim().is_empty(),
            !r.title.trim().is_empty(),
            present(&r.comments),
            present(&r.journal_ref),
            present(&r.doi),
            present(&r.report_no),
            !r.abstract_text.trim().is_empty(),
            !r.categories.is_empty(),
            !r.versions.is_empty(),
        ];
        for (c, f) in counts.iter_mut().zip(flags) {
            *c += f as u64;
        }
    }
    CountsReport {
        total,
        per_field: FIELDS.iter().map(|f| f.to_string()).zip(counts).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample(id: &str, doi: Option<&str>) -> ArticleMetadata {
        ArticleMetadata {
            id: id.to_string(),
            submitter: Some("A. Person".into()),
            authors: "A. Person and B. Person".into(),
            title: "A title".into(),
            comments: None,
            journal_ref: None,
            doi: doi.map(str::to_string),
            report_no: None,
            abstract_text: "Some abstract.".into(),
            categories: vec!["cs.IR".into()],
            versions: vec!["v1".into()],
        }
    }

    #[test]
    fn round_trip_three_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("meta.jsonl");
        let recs = vec![
            sample("0704.0001", None),
            sample("hep-th/9901001", Some("10.1/x")),
            sample("1501.00001", None),
        ];
        assert_eq!(write_archive(&recs, &path).unwrap(), 3);
        assert_eq!(read_archive(&path).unwrap(), recs);
    }

    #[test]
    fn empty_archive() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        assert_eq!(write_archive(&[], &path).unwrap(), 0);
        assert_eq!(std::fs::read(&path).unwrap().len(), 0);
        assert!(read_archive(&path).unwrap().is_empty());
    }

    #[test]
    fn corrupted_line_is_reported_by_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let recs: Vec<_> = (1..=10).map(|i| sample(&format!("0704.{i:04}"), None)).collect();
        write_archive(&recs, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        lines[6] = lines[6][..20].to_string();
        std::fs::write(&path, lines.join("\n")).unwrap();
        match read_archive(&path) {
            Err(ArchiveError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_record_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let mut r = sample("0704.0001", None);
        r.categories.clear();
        write_archive([&r], &path).unwrap();
        assert!(matches!(read_archive(&path), Err(ArchiveError::Parse { line: 1, .. })));
    }

    #[test]
    fn counts_two_records() {
        let recs = [sample("0704.0001", Some("10.1/x")), sample("0704.0002", None)];
        let c = field_counts(&recs);
        assert_eq!(c.total, 2);
        assert_eq!(c.get("doi"), 1);
        assert_eq!(c.get("id"), 2);
        assert_eq!(c.get("journal-ref"), 0);
        for f in ["id", "abstract", "authors", "versions", "categories"] {
            assert_eq!(c.get(f), c.total);
        }
    }
}
