//! OAI-PMH `ListRecords` harvesting.
//!
//! [`Harvester`] is an iterator over records. It issues one request at a
//! time, follows resumption tokens until the endpoint returns an empty one,
//! sleeps `request_delay` between requests and retries transient failures
//! (network errors, 429, 5xx) with exponential backoff, honoring
//! `Retry-After` when the server sends it. Deleted-record tombstones are
//! skipped with a warning.

mod archive;
mod record;
pub mod xml;

use std::collections::VecDeque;
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;
use url::Url;

pub use archive::{
    field_counts, read_archive, write_archive, ArchiveError, ArchiveReader, CountsReport, FIELDS,
};
pub use record::{parse_record, ArticleMetadata, ArxivRaw, MetadataFormat, RecordError};

#[derive(Debug, Clone)]
pub struct HarvestConfig {
    pub endpoint_url: String,
    pub metadata_prefix: String,
    /// `YYYY-MM-DD`
    pub from_date: Option<String>,
    pub until_date: Option<String>,
    pub set: Option<String>,
    pub request_delay: Duration,
    pub max_retries: u32,
    /// First backoff interval; doubles on each retry.
    pub backoff_base: Duration,
    pub timeout: Duration,
}

impl HarvestConfig {
    pub fn new(endpoint_url: impl Into<String>) -> Self {
        HarvestConfig {
            endpoint_url: endpoint_url.into(),
            metadata_prefix: "arXivRaw".to_string(),
            from_date: None,
            until_date: None,
            set: None,
            request_delay: Duration::from_secs(5),
            max_retries: 5,
            backoff_base: Duration::from_secs(10),
            timeout: Duration::from_secs(120),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("malformed OAI response from {url}: {message}")]
    Malformed { url: String, message: String },
    #[error("record at position {position} has no header identifier")]
    MissingIdentifier { position: usize },
    #[error("endpoint rejected resumption token {token:?}: {message}")]
    BadResumptionToken { token: String, message: String },
    #[error("OAI error {code} from {url}: {message}")]
    Oai { code: String, url: String, message: String },
}

#[derive(Debug, Error)]
pub enum HarvestError {
    #[error("HTTP {status} from {url} after {attempts} attempt(s)")]
    Http { status: u16, url: String, attempts: u32 },
    #[error("request to {url} failed after {attempts} attempt(s): {message}")]
    Network { url: String, message: String, attempts: u32 },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("record at position {position}: {source}")]
    Record { position: usize, source: RecordError },
}

impl HarvestError {
    /// Last HTTP status seen, when the failure was an HTTP error.
    pub fn status(&self) -> Option<u16> {
        match self {
            HarvestError::Http { status, .. } => Some(*status),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: u16,
    pub retry_after: Option<Duration>,
    pub body: String,
}

/// Blocking GET. Non-2xx statuses are returned, not raised.
pub trait Transport {
    fn get(&mut self, url: &str) -> Result<HttpResponse, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .user_agent(concat!("arxivnet/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl Transport for UreqTransport {
    fn get(&mut self, url: &str) -> Result<HttpResponse, String> {
        let mut resp = self.agent.get(url).call().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let body = resp
            .body_mut()
            .with_config()
            .limit(1 << 30)
            .read_to_string()
            .map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, retry_after, body })
    }
}

enum Cursor {
    Start,
    Token(String),
    Done,
}

pub struct Harvester<T: Transport = UreqTransport> {
    config: HarvestConfig,
    transport: T,
    format: Box<dyn MetadataFormat>,
    cursor: Cursor,
    buffer: VecDeque<ArticleMetadata>,
    position: usize,
    requests: usize,
    last_request: Option<Instant>,
    pending_error: Option<HarvestError>,
    failed: bool,
}

impl Harvester<UreqTransport> {
    pub fn new(config: HarvestConfig) -> Self {
        let transport = UreqTransport::new(config.timeout);
        Harvester::with_transport(config, transport, Box::new(ArxivRaw))
    }
}

impl<T: Transport> Harvester<T> {
    pub fn with_transport(config: HarvestConfig, transport: T, format: Box<dyn MetadataFormat>) -> Self {
        Harvester {
            config,
            transport,
            format,
            cursor: Cursor::Start,
            buffer: VecDeque::new(),
            position: 0,
            requests: 0,
            last_request: None,
            pending_error: None,
            failed: false,
        }
    }

    /// Number of HTTP requests issued so far, retries included.
    pub fn requests(&self) -> usize {
        self.requests
    }

    fn page_url(&self) -> Result<String, HarvestError> {
        let mut url = Url::parse(&self.config.endpoint_url).map_err(|e| ProtocolError::Malformed {
            url: self.config.endpoint_url.clone(),
            message: format!("bad endpoint URL: {e}"),
        })?;
        {
            let mut q = url.query_pairs_mut();
            q.append_pair("verb", "ListRecords");
            match &self.cursor {
                Cursor::Token(token) => {
                    q.append_pair("resumptionToken", token);
                }
                _ => {
                    q.append_pair("metadataPrefix", &self.config.metadata_prefix);
                    if let Some(d) = &self.config.from_date {
                        q.append_pair("from", d);
                    }
                    if let Some(d) = &self.config.until_date {
                        q.append_pair("until", d);
                    }
                    if let Some(s) = &self.config.set {
                        q.append_pair("set", s);
                    }
                }
            }
        }
        Ok(url.into())
    }

    fn wait_politely(&self) {
        if let Some(last) = self.last_request {
            let elapsed = last.elapsed();
            if elapsed < self.config.request_delay {
                thread::sleep(self.config.request_delay - elapsed);
            }
        }
    }

    /// GET with retries; returns the body of a 2xx response.
    fn fetch(&mut self, url: &str) -> Result<String, HarvestError> {
        let mut attempt = 0u32;
        loop {
            self.wait_politely();
            self.requests += 1;
            let result = self.transport.get(url);
            self.last_request = Some(Instant::now());
            attempt += 1;

            let (retry_after, failure) = match result {
                Ok(resp) if (200..300).contains(&resp.status) => return Ok(resp.body),
                Ok(resp) if resp.status == 429 || resp.status >= 500 => (
                    resp.retry_after,
                    HarvestError::Http { status: resp.status, url: url.to_string(), attempts: attempt },
                ),
                Ok(resp) => {
                    return Err(HarvestError::Http {
                        status: resp.status,
                        url: url.to_string(),
                        attempts: attempt,
                    })
                }
                Err(message) => (
                    None,
                    HarvestError::Network { url: url.to_string(), message, attempts: attempt },
                ),
            };
            if attempt > self.config.max_retries {
                return Err(failure);
            }
            let backoff = retry_after
                .unwrap_or_else(|| self.config.backoff_base.saturating_mul(1 << (attempt - 1).min(16)));
            log::warn!("{failure}; retrying in {backoff:?}");
            thread::sleep(backoff);
        }
    }

    fn next_page(&mut self) -> Result<(), HarvestError> {
        let url = self.page_url()?;
        let body = self.fetch(&url)?;
        let page = parse_page(&body, &url, self.format.as_ref(), &mut self.position).map_err(
            |e| match (e, &self.cursor) {
                (HarvestError::Protocol(ProtocolError::Oai { code, message, .. }), Cursor::Token(t))
                    if code == "badResumptionToken" =>
                {
                    ProtocolError::BadResumptionToken { token: t.clone(), message }.into()
                }
                (e, _) => e,
            },
        )?;
        self.buffer.extend(page.records);
        if let Some(e) = page.error {
            self.pending_error = Some(e);
            self.cursor = Cursor::Done;
            return Ok(());
        }
        self.cursor = match page.token {
            Some(t) => Cursor::Token(t),
            None => Cursor::Done,
        };
        Ok(())
    }
}

impl<T: Transport> Iterator for Harvester<T> {
    type Item = Result<ArticleMetadata, HarvestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(r) = self.buffer.pop_front() {
                return Some(Ok(r));
            }
            if let Some(e) = self.pending_error.take() {
                self.failed = true;
                return Some(Err(e));
            }
            if self.failed || matches!(self.cursor, Cursor::Done) {
                return None;
            }
            if let Err(e) = self.next_page() {
                self.failed = true;
                return Some(Err(e));
            }
        }
    }
}

/// Convenience: harvest everything into memory.
pub fn harvest(config: HarvestConfig) -> Result<Vec<ArticleMetadata>, HarvestError> {
    Harvester::new(config).collect()
}

struct Page {
    records: Vec<ArticleMetadata>,
    token: Option<String>,
    /// Record-level failure; records before it are still delivered.
    error: Option<HarvestError>,
}

/// Decodes one `ListRecords` response. `position` counts records across pages.
fn parse_page(
    body: &str,
    url: &str,
    format: &dyn MetadataFormat,
    position: &mut usize,
) -> Result<Page, HarvestError> {
    let malformed = |message: String| ProtocolError::Malformed { url: url.to_string(), message };
    let root = xml::parse(body).map_err(malformed)?;
    if root.name != "OAI-PMH" {
        return Err(malformed(format!("unexpected root element <{}>", root.name)).into());
    }
    if let Some(err) = root.child("error") {
        let code = err.attr("code").unwrap_or("").to_string();
        if code == "noRecordsMatch" {
            return Ok(Page { records: Vec::new(), token: None, error: None });
        }
        return Err(ProtocolError::Oai { code, url: url.to_string(), message: err.all_text().trim().to_string() }
            .into());
    }
    let list = root
        .child("ListRecords")
        .ok_or_else(|| malformed("no ListRecords element".to_string()))?;

    let mut records = Vec::new();
    for rec in list.children_named("record") {
        *position += 1;
        let header = rec.child("header");
        if header.and_then(|h| h.attr("status")) == Some("deleted") {
            let id = header.and_then(|h| h.child("identifier")).map(|i| i.text.trim().to_string());
            log::warn!("skipping deleted record {}", id.unwrap_or_default());
            continue;
        }
        let has_id = header
            .and_then(|h| h.child("identifier"))
            .is_some_and(|i| !i.all_text().trim().is_empty());
        if !has_id {
            let error = ProtocolError::MissingIdentifier { position: *position }.into();
            return Ok(Page { records, token: None, error: Some(error) });
        }
        let slice = &body[rec.span.0..rec.span.1];
        match format.parse_record(slice) {
            Ok(parsed) => records.push(parsed),
            Err(source) => {
                let error = HarvestError::Record { position: *position, source };
                return Ok(Page { records, token: None, error: Some(error) });
            }
        }
    }

    let token = list
        .child("resumptionToken")
        .map(|t| t.all_text().trim().to_string())
        .filter(|t| !t.is_empty());
    Ok(Page { records, token, error: None })
}
