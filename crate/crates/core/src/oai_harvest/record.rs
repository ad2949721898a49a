//! Typed article metadata and the arXivRaw record parser.

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use super::xml::{self, Element};
use crate::arxiv_id::ArxivId;

/// One harvested metadata record.
///
/// Serializes to a JSON object whose keys are, in order: `id`, `submitter`,
/// `authors`, `title`, `comments`, `journal-ref`, `doi`, `report-no`,
/// `abstract`, `categories`, `versions`. Absent optional fields are `null`.
/// Empty strings read back as absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleMetadata {
    pub id: String,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub submitter: Option<String>,
    pub authors: String,
    #[serde(default)]
    pub title: String,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub comments: Option<String>,
    #[serde(rename = "journal-ref", default, deserialize_with = "empty_as_none")]
    pub journal_ref: Option<String>,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub doi: Option<String>,
    #[serde(rename = "report-no", default, deserialize_with = "empty_as_none")]
    pub report_no: Option<String>,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub categories: Vec<String>,
    pub versions: Vec<String>,
}

impl ArticleMetadata {
    pub fn primary_category(&self) -> Option<&str> {
        self.categories.first().map(String::as_str)
    }

    pub fn arxiv_id(&self) -> Result<ArxivId, RecordError> {
        ArxivId::parse(&self.id)
            .map_err(|e| RecordError::InvalidField { field: "id", message: e.to_string() })
    }

    /// Checks the always-populated fields and the identifier.
    pub fn validate(&self) -> Result<(), RecordError> {
        self.arxiv_id()?;
        for (field, empty) in [
            ("authors", self.authors.trim().is_empty()),
            ("abstract", self.abstract_text.trim().is_empty()),
            ("categories", self.categories.is_empty()),
            ("versions", self.versions.is_empty()),
        ] {
            if empty {
                return Err(RecordError::MissingField(field));
            }
        }
        Ok(())
    }

    /// Turns empty optional strings into `None`.
    pub fn normalize(mut self) -> Self {
        for f in [
            &mut self.submitter,
            &mut self.comments,
            &mut self.journal_ref,
            &mut self.doi,
            &mut self.report_no,
        ] {
            if f.as_deref().is_some_and(|s| s.trim().is_empty()) {
                *f = None;
            }
        }
        self
    }
}

fn empty_as_none<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    let v: Option<String> = Option::deserialize(d)?;
    Ok(v.filter(|s| !s.trim().is_empty()))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("missing mandatory field {0:?}")]
    MissingField(&'static str),
    #[error("invalid field {field:?}: {message}")]
    InvalidField { field: &'static str, message: String },
    #[error("malformed record XML: {0}")]
    Xml(String),
}

impl RecordError {
    /// Name of the offending field, if any.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            RecordError::MissingField(f) | RecordError::InvalidField { field: f, .. } => Some(f),
            RecordError::Xml(_) => None,
        }
    }
}

/// A metadata format the harvester can request and decode.
pub trait MetadataFormat: Send + Sync {
    /// Value of the OAI `metadataPrefix` parameter.
    fn prefix(&self) -> &str;

    /// Decodes one `<record>` (or bare metadata payload).
    fn parse_record(&self, record_xml: &str) -> Result<ArticleMetadata, RecordError>;
}

/// The arXiv-native `arXivRaw` format; its fields line up with [`ArticleMetadata`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ArxivRaw;

impl MetadataFormat for ArxivRaw {
    fn prefix(&self) -> &str {
        "arXivRaw"
    }

    fn parse_record(&self, record_xml: &str) -> Result<ArticleMetadata, RecordError> {
        parse_record(record_xml)
    }
}

/// Parses an arXivRaw record.
pub fn parse_record(record_xml: &str) -> Result<ArticleMetadata, RecordError> {
    let root = xml::parse(record_xml).map_err(RecordError::Xml)?;
    let raw = root
        .find("arXivRaw")
        .ok_or_else(|| RecordError::Xml("no arXivRaw element".to_string()))?;
    from_element(raw)
}

pub(crate) fn from_element(raw: &Element) -> Result<ArticleMetadata, RecordError> {
    let text = |name: &str| raw.child(name).map(|e| e.all_text().trim().to_string());
    let line = |name: &str| text(name).map(|s| collapse(&s)).filter(|s| !s.is_empty());
    let required = |name: &'static str| line(name).ok_or(RecordError::MissingField(name));

    let id_raw = required("id")?;
    let id = ArxivId::parse(&id_raw)
        .map_err(|e| RecordError::InvalidField { field: "id", message: e.to_string() })?
        .canonical(false);
    let authors = required("authors")?;
    let abstract_text = text("abstract")
        .filter(|s| !s.is_empty())
        .ok_or(RecordError::MissingField("abstract"))?;
    let categories: Vec<String> =
        required("categories")?.split_whitespace().map(str::to_string).collect();
    let versions: Vec<String> = raw
        .children_named("version")
        .filter_map(|v| v.attr("version").map(|s| s.trim().to_string()))
        .filter(|s| !s.is_empty())
        .collect();
    if versions.is_empty() {
        return Err(RecordError::MissingField("versions"));
    }

    Ok(ArticleMetadata {
        id,
        submitter: line("submitter"),
        authors,
        title: line("title").unwrap_or_default(),
        comments: line("comments"),
        journal_ref: line("journal-ref"),
        doi: line("doi"),
        report_no: line("report-no"),
        abstract_text,
        categories,
        versions,
    })
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
