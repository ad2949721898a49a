//! arXiv identifiers in both generations.
//!
//! Old-scheme identifiers (before April 2007) look like `hep-th/9901001` or
//! `math.AG/0101001`: an archive name, an optional two-letter subject class,
//! then a seven digit `yymmnnn` block. New-scheme identifiers look like
//! `0704.0001` (four-digit number, through 2014) or `1501.00001` (five digits
//! from January 2015). Either form may carry a `vN` version suffix.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

/// Archive names that were valid prefixes of old-scheme identifiers.
pub const HISTORICAL_ARCHIVES: &[&str] = &[
    "acc-phys", "adap-org", "alg-geom", "ao-sci", "astro-ph", "atom-ph", "bayes-an", "chao-dyn",
    "chem-ph", "cmp-lg", "comp-gas", "cond-mat", "cs", "dg-ga", "funct-an", "gr-qc", "hep-ex",
    "hep-lat", "hep-ph", "hep-th", "math", "math-ph", "mtrl-th", "nlin", "nucl-ex", "nucl-th",
    "patt-sol", "physics", "plasm-ph", "q-alg", "q-bio", "quant-ph", "solv-int", "supr-con",
];

/// First month the service accepted submissions (1991-08).
const FIRST_MONTH: YearMonth = YearMonth { year: 1991, month: 8 };
/// First month of the new identifier scheme.
const NEW_SCHEME_START: YearMonth = YearMonth { year: 2007, month: 4 };
/// First month of five-digit sequence numbers.
const FIVE_DIGIT_START: YearMonth = YearMonth { year: 2015, month: 1 };

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("invalid identifier format: {0:?}")]
    InvalidFormat(String),
    #[error("invalid month in identifier: {0:?}")]
    InvalidMonth(String),
    #[error("sequence number width does not match the identifier date: {0:?}")]
    InvalidNumberWidth(String),
    #[error("unknown archive {archive:?} in identifier {id:?}")]
    UnknownArchive { id: String, archive: String },
    #[error("identifier date outside the accepted range: {0:?}")]
    ImplausibleDate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: u16,
    pub month: u8,
}

impl YearMonth {
    pub const fn new(year: u16, month: u8) -> Self {
        YearMonth { year, month }
    }

    /// Expands a `yymm` code. Two-digit years from 91 onward are 19xx.
    fn from_yymm(yy: u8, mm: u8) -> Self {
        let year = if yy >= 91 { 1900 + yy as u16 } else { 2000 + yy as u16 };
        YearMonth { year, month: mm }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Old,
    New,
}

/// Knobs for identifier validation.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Accept any archive-like prefix on old-scheme identifiers.
    pub lax_archives: bool,
    /// Latest year-month accepted.
    pub horizon: YearMonth,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { lax_archives: false, horizon: YearMonth::new(2040, 12) }
    }
}

/// A validated arXiv identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArxivId {
    scheme: Scheme,
    archive: Option<String>,
    subject_class: Option<String>,
    yymm: String,
    number: String,
    version: Option<u32>,
}

static NEW_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([0-9]{2})([0-9]{2})\.([0-9]{4,5})(?:v([0-9]+))?$").unwrap());
static OLD_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^([A-Za-z][A-Za-z-]*)(?:\.([A-Za-z]{2}))?/([0-9]{2})([0-9]{2})([0-9]{3})(?:v([0-9]+))?$")
        .unwrap()
});
/// Candidate shapes for scanning; validation happens afterwards.
static SCAN_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"[0-9]{4}\.[0-9]{4,5}(?:v[0-9]+)?|[A-Za-z][A-Za-z-]*(?:\.[A-Za-z]{2})?/[0-9]{7}(?:v[0-9]+)?",
    )
    .unwrap()
});

impl ArxivId {
    /// Parses with the default options.
    pub fn parse(s: &str) -> Result<Self, IdError> {
        Self::parse_with(s, &ParseOptions::default())
    }

    pub fn parse_with(s: &str, opts: &ParseOptions) -> Result<Self, IdError> {
        let trimmed = s.trim();
        let body = strip_prefix_ci(trimmed, "arxiv:").unwrap_or(trimmed);

        if let Some(caps) = NEW_RE.captures(body) {
            let (yy, mm) = (two_digits(&caps[1]), two_digits(&caps[2]));
            let ym = check_month(yy, mm, s)?;
            if ym < NEW_SCHEME_START {
                return Err(IdError::InvalidFormat(s.to_string()));
            }
            check_horizon(ym, opts, s)?;
            let number = caps[3].to_string();
            let want = if ym >= FIVE_DIGIT_START { 5 } else { 4 };
            if number.len() != want {
                return Err(IdError::InvalidNumberWidth(s.to_string()));
            }
            return Ok(ArxivId {
                scheme: Scheme::New,
                archive: None,
                subject_class: None,
                yymm: format!("{}{}", &caps[1], &caps[2]),
                number,
                version: parse_version(caps.get(4).map(|m| m.as_str()), s)?,
            });
        }

        if let Some(caps) = OLD_RE.captures(body) {
            let archive = caps[1].to_ascii_lowercase();
            if !opts.lax_archives && !HISTORICAL_ARCHIVES.contains(&archive.as_str()) {
                return Err(IdError::UnknownArchive { id: s.to_string(), archive });
            }
            let (yy, mm) = (two_digits(&caps[3]), two_digits(&caps[4]));
            let ym = check_month(yy, mm, s)?;
            if ym >= NEW_SCHEME_START {
                return Err(IdError::InvalidFormat(s.to_string()));
            }
            check_horizon(ym, opts, s)?;
            return Ok(ArxivId {
                scheme: Scheme::Old,
                archive: Some(archive),
                subject_class: caps.get(2).map(|m| m.as_str().to_ascii_uppercase()),
                yymm: format!("{}{}", &caps[3], &caps[4]),
                number: caps[5].to_string(),
                version: parse_version(caps.get(6).map(|m| m.as_str()), s)?,
            });
        }

        Err(IdError::InvalidFormat(s.to_string()))
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn archive(&self) -> Option<&str> {
        self.archive.as_deref()
    }

    pub fn subject_class(&self) -> Option<&str> {
        self.subject_class.as_deref()
    }

    /// The four-digit `yymm` code.
    pub fn yymm(&self) -> &str {
        &self.yymm
    }

    pub fn number(&self) -> &str {
        &self.number
    }

    pub fn version(&self) -> Option<u32> {
        self.version
    }

    pub fn year_month(&self) -> YearMonth {
        YearMonth::from_yymm(two_digits(&self.yymm[..2]), two_digits(&self.yymm[2..]))
    }

    /// The same identifier with no version.
    pub fn without_version(&self) -> ArxivId {
        ArxivId { version: None, ..self.clone() }
    }

    pub fn canonical(&self, with_version: bool) -> String {
        let mut out = match self.scheme {
            Scheme::New => format!("{}.{}", self.yymm, self.number),
            Scheme::Old => {
                let mut s = self.archive.clone().unwrap_or_default();
                if let Some(sc) = &self.subject_class {
                    s.push('.');
                    s.push_str(sc);
                }
                s.push('/');
                s.push_str(&self.yymm);
                s.push_str(&self.number);
                s
            }
        };
        if with_version {
            if let Some(v) = self.version {
                out.push_str(&format!("v{v}"));
            }
        }
        out
    }

    /// Filesystem-safe form: the versionless canonical id with `/` replaced by `_`.
    pub fn file_stem(&self) -> String {
        self.canonical(false).replace('/', "_")
    }
}

impl fmt::Display for ArxivId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical(true))
    }
}

impl FromStr for ArxivId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ArxivId::parse(s)
    }
}

/// One identifier found in running text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdMatch {
    pub id: ArxivId,
    /// Byte offset of the first byte of the identifier (after any `arXiv:` prefix).
    pub offset: usize,
}

/// Finds every valid identifier in `text`, in document order.
pub fn scan_text(text: &str) -> Vec<IdMatch> {
    scan_text_with(text, &ParseOptions::default())
}

pub fn scan_text_with(text: &str, opts: &ParseOptions) -> Vec<IdMatch> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    for m in SCAN_RE.find_iter(text) {
        let (start, end) = (m.start(), m.end());
        if start > 0 && is_word_char_before(text, start) {
            continue;
        }
        if end < bytes.len() && is_word_char_after(text, end) {
            continue;
        }
        if let Ok(id) = ArxivId::parse_with(m.as_str(), opts) {
            out.push(IdMatch { id, offset: start });
        }
    }
    out
}

fn is_word_char_before(text: &str, pos: usize) -> bool {
    text[..pos].chars().next_back().is_some_and(char::is_alphanumeric)
}

fn is_word_char_after(text: &str, pos: usize) -> bool {
    text[pos..].chars().next().is_some_and(char::is_alphanumeric)
}

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    let head = s.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix).then(|| &s[prefix.len()..])
}

fn two_digits(s: &str) -> u8 {
    s.parse().expect("regex guarantees two digits")
}

fn check_month(yy: u8, mm: u8, src: &str) -> Result<YearMonth, IdError> {
    if !(1..=12).contains(&mm) {
        return Err(IdError::InvalidMonth(src.to_string()));
    }
    Ok(YearMonth::from_yymm(yy, mm))
}

fn check_horizon(ym: YearMonth, opts: &ParseOptions, src: &str) -> Result<(), IdError> {
    if ym < FIRST_MONTH || ym > opts.horizon {
        return Err(IdError::ImplausibleDate(src.to_string()));
    }
    Ok(())
}

fn parse_version(v: Option<&str>, src: &str) -> Result<Option<u32>, IdError> {
    match v {
        None => Ok(None),
        Some(digits) => match digits.parse::<u32>() {
            Ok(0) | Err(_) => Err(IdError::InvalidFormat(src.to_string())),
            Ok(n) => Ok(Some(n)),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_first_new_scheme_id() {
        let id = ArxivId::parse("0704.0001").unwrap();
        assert_eq!(id.scheme(), Scheme::New);
        assert_eq!(id.yymm(), "0704");
        assert_eq!(id.number(), "0001");
        assert_eq!(id.version(), None);
    }

    #[test]
    fn parses_five_digit_id() {
        let id = ArxivId::parse("1904.99999").unwrap();
        assert_eq!(id.yymm(), "1904");
        assert_eq!(id.number(), "99999");
        assert_eq!(id.canonical(false), "1904.99999");
    }

    #[test]
    fn parses_old_scheme_with_version() {
        let id = ArxivId::parse("hep-th/9901001v2").unwrap();
        assert_eq!(id.scheme(), Scheme::Old);
        assert_eq!(id.archive(), Some("hep-th"));
        assert_eq!(id.yymm(), "9901");
        assert_eq!(id.number(), "001");
        assert_eq!(id.version(), Some(2));
        assert_eq!(id.canonical(true), "hep-th/9901001v2");
        assert_eq!(id.canonical(false), "hep-th/9901001");
    }

    #[test]
    fn month_thirteen_is_rejected() {
        assert_eq!(ArxivId::parse("0713.0001"), Err(IdError::InvalidMonth("0713.0001".into())));
        assert!(matches!(ArxivId::parse("0700.0001"), Err(IdError::InvalidMonth(_))));
    }

    #[test]
    fn number_width_follows_date() {
        assert!(matches!(ArxivId::parse("1412.00001"), Err(IdError::InvalidNumberWidth(_))));
        assert!(matches!(ArxivId::parse("1501.0001"), Err(IdError::InvalidNumberWidth(_))));
        assert!(ArxivId::parse("1412.0001").is_ok());
        assert!(ArxivId::parse("1501.00001").is_ok());
    }

    #[test]
    fn scheme_boundary_at_april_2007() {
        assert!(matches!(ArxivId::parse("0703.0001"), Err(IdError::InvalidFormat(_))));
        assert!(matches!(ArxivId::parse("hep-th/0704001"), Err(IdError::InvalidFormat(_))));
        assert!(ArxivId::parse("hep-th/0703001").is_ok());
    }

    #[test]
    fn date_plausibility() {
        assert!(matches!(ArxivId::parse("hep-th/9107001"), Err(IdError::ImplausibleDate(_))));
        assert!(ArxivId::parse("hep-th/9108001").is_ok());
        let opts = ParseOptions { horizon: YearMonth::new(2019, 3), ..Default::default() };
        assert!(ArxivId::parse_with("1903.00001", &opts).is_ok());
        assert!(matches!(ArxivId::parse_with("1904.00001", &opts), Err(IdError::ImplausibleDate(_))));
    }

    #[test]
    fn prefix_case_and_subject_class() {
        let id = ArxivId::parse("arXiv:HEP-TH/9901001").unwrap();
        assert_eq!(id.canonical(true), "hep-th/9901001");
        let id = ArxivId::parse("ARXIV:math.ag/0101001v3").unwrap();
        assert_eq!(id.subject_class(), Some("AG"));
        assert_eq!(id.canonical(true), "math.AG/0101001v3");
    }

    #[test]
    fn archive_allow_list() {
        assert!(matches!(ArxivId::parse("word/9901001"), Err(IdError::UnknownArchive { .. })));
        let lax = ParseOptions { lax_archives: true, ..Default::default() };
        assert_eq!(ArxivId::parse_with("word/9901001", &lax).unwrap().archive(), Some("word"));
    }

    #[test]
    fn zero_version_rejected() {
        assert!(ArxivId::parse("0704.0001v0").is_err());
    }

    #[test]
    fn scan_finds_both_schemes_in_order() {
        let text = "as shown in arXiv:0704.0001v1 and [hep-th/9901001]";
        let found = scan_text(text);
        assert_eq!(found.len(), 2);
        assert_eq!(found[0].id.canonical(true), "0704.0001v1");
        assert_eq!(found[0].offset, 18);
        assert_eq!(found[1].id.canonical(true), "hep-th/9901001");
        assert_eq!(found[1].offset, 35);
        for m in &found {
            assert!(text[m.offset..].starts_with(&m.id.canonical(true)));
        }
    }

    #[test]
    fn scan_rejects_non_identifiers() {
        assert!(scan_text("version 2.4.0001 of the software").is_empty());
        assert!(scan_text("").is_empty());
        assert!(scan_text("12345.67890").is_empty());
        assert!(scan_text("0704.000123").is_empty());
        assert!(scan_text("x0704.0001").is_empty());
        assert!(scan_text("0704.0001version").is_empty());
        assert!(scan_text("seehep-th/9901001").is_empty());
    }

    #[test]
    fn scan_keeps_duplicates() {
        let found = scan_text("1501.00001, 1501.00001v2; (1501.00001)");
        assert_eq!(found.len(), 3);
        assert_eq!(found[1].id.version(), Some(2));
    }

    #[test]
    fn scan_handles_multibyte_neighbours() {
        let found = scan_text("é 0704.0001 ü");
        assert_eq!(found.len(), 1);
        assert!(scan_text("é0704.0001").is_empty());
    }
}
