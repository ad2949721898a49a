//! Fixtures shared by the integration tests: random identifiers, a scripted
//! OAI-PMH server on a local socket, synthetic metadata and a generated
//! mini corpus with planted citations.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use arxivnet::oai_harvest::ArticleMetadata;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::Zeta;

// ---------------------------------------------------------------- identifiers

const OLD_ARCHIVES: &[(&str, &[&str])] = &[
    ("hep-th", &[]),
    ("astro-ph", &[]),
    ("cond-mat", &[]),
    ("math", &["AG", "GT", "CO", "PR"]),
    ("cs", &["AI", "LG", "DS"]),
    ("physics", &["OPTICS", "FLU-DYN"]),
    ("q-bio", &[]),
    ("quant-ph", &[]),
];

/// A random valid identifier in canonical form, covering both schemes,
/// every month, both new-scheme widths and optional versions.
pub fn random_id(rng: &mut impl Rng) -> String {
    let version = if rng.random_bool(0.4) { format!("v{}", rng.random_range(1..=12)) } else { String::new() };
    if rng.random_bool(0.35) {
        // old scheme: 1991-08 .. 2007-03
        let (year, month) = loop {
            let y = rng.random_range(1991..=2007);
            let m = rng.random_range(1..=12);
            if (y, m) >= (1991, 8) && (y, m) < (2007, 4) {
                break (y, m);
            }
        };
        let (archive, classes) = OLD_ARCHIVES.choose(rng).unwrap();
        // subject classes are two letters; skip the long physics ones
        let class = classes.iter().filter(|c| c.len() == 2).collect::<Vec<_>>();
        let sc = match class.choose(rng) {
            Some(c) if rng.random_bool(0.7) => format!(".{c}"),
            _ => String::new(),
        };
        format!("{archive}{sc}/{:02}{month:02}{:03}{version}", year % 100, rng.random_range(1..1000))
    } else {
        let (year, month) = loop {
            let y = rng.random_range(2007..=2040);
            let m = rng.random_range(1..=12);
            if (y, m) >= (2007, 4) {
                break (y, m);
            }
        };
        let number =
            if year >= 2015 { format!("{:05}", rng.random_range(1..100_000)) } else { format!("{:04}", rng.random_range(1..10_000)) };
        format!("{:02}{month:02}.{number}{version}", year % 100)
    }
}

// ---------------------------------------------------------------- OAI server

/// One scripted HTTP response.
#[derive(Clone)]
pub struct Reply {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

impl Reply {
    pub fn ok(body: String) -> Self {
        Reply { status: 200, headers: vec![("Content-Type".into(), "text/xml".into())], body }
    }
}

/// Serves the scripted replies in order, one per connection, then stops.
pub struct OaiServer {
    pub url: String,
    requests: Arc<Mutex<Vec<String>>>,
    handle: Option<JoinHandle<()>>,
}

impl OaiServer {
    pub fn start(replies: Vec<Reply>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/oai", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        let handle = thread::spawn(move || {
            for reply in replies {
                let Ok((stream, _)) = listener.accept() else { return };
                let mut reader = BufReader::new(stream);
                let mut line = String::new();
                if reader.read_line(&mut line).is_err() {
                    return;
                }
                log.lock().unwrap().push(line.split_whitespace().nth(1).unwrap_or("").to_string());
                loop {
                    let mut h = String::new();
                    if reader.read_line(&mut h).unwrap_or(0) == 0 || h == "\r\n" || h == "\n" {
                        break;
                    }
                }
                let mut stream = reader.into_inner();
                let mut head = format!(
                    "HTTP/1.1 {} X\r\nContent-Length: {}\r\nConnection: close\r\n",
                    reply.status,
                    reply.body.len()
                );
                for (k, v) in &reply.headers {
                    head += &format!("{k}: {v}\r\n");
                }
                head += "\r\n";
                let _ = stream.write_all(head.as_bytes());
                let _ = stream.write_all(reply.body.as_bytes());
                let _ = stream.flush();
            }
        });
        OaiServer { url, requests, handle: Some(handle) }
    }

    /// Request targets (path and query) seen so far.
    pub fn requests(&self) -> Vec<String> {
        self.requests.lock().unwrap().clone()
    }

    pub fn join(mut self) -> Vec<String> {
        if let Some(h) = self.handle.take() {
            h.join().unwrap();
        }
        self.requests()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn record_xml(m: &ArticleMetadata) -> String {
    let opt = |tag: &str, v: &Option<String>| match v {
        Some(v) => format!("<{tag}>{}</{tag}>", xml_escape(v)),
        None => String::new(),
    };
    let versions: String =
        m.versions.iter().map(|v| format!("<version version=\"{v}\"><date>Mon, 2 Apr 2007 19:18:42 GMT</date></version>")).collect();
    format!(
        "<record><header><identifier>oai:arXiv.org:{id}</identifier><datestamp>2020-01-01</datestamp></header>\
         <metadata><arXivRaw xmlns=\"http://arxiv.org/OAI/arXivRaw/\"><id>{id}</id>{submitter}{versions}\
         <title>{title}</title><authors>{authors}</authors><categories>{cats}</categories>{comments}{jref}{doi}{rno}\
         <abstract>{abs}</abstract></arXivRaw></metadata></record>",
        id = m.id,
        submitter = opt("submitter", &m.submitter),
        title = xml_escape(&m.title),
        authors = xml_escape(&m.authors),
        cats = m.categories.join(" "),
        comments = opt("comments", &m.comments),
        jref = opt("journal-ref", &m.journal_ref),
        doi = opt("doi", &m.doi),
        rno = opt("report-no", &m.report_no),
        abs = xml_escape(&m.abstract_text),
    )
}

/// One `ListRecords` page with an optional resumption token.
pub fn list_records_page(records: &[ArticleMetadata], token: Option<&str>) -> String {
    let body: String = records.iter().map(record_xml).collect();
    let token = match token {
        Some(t) => format!("<resumptionToken cursor=\"0\" completeListSize=\"0\">{t}</resumptionToken>"),
        None => "<resumptionToken cursor=\"0\"/>".to_string(),
    };
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<OAI-PMH xmlns=\"http://www.openarchives.org/OAI/2.0/\">\
         <responseDate>2020-01-01T00:00:00Z</responseDate><request verb=\"ListRecords\">x</request>\
         <ListRecords>{body}{token}</ListRecords></OAI-PMH>"
    )
}

/// Pages of `per_page` records chained by tokens `t1`, `t2`, ...
pub fn paged_replies(records: &[ArticleMetadata], per_page: usize) -> Vec<Reply> {
    let chunks: Vec<&[ArticleMetadata]> = records.chunks(per_page).collect();
    chunks
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let token = (i + 1 < chunks.len()).then(|| format!("t{}", i + 1));
            Reply::ok(list_records_page(c, token.as_deref()))
        })
        .collect()
}

// ---------------------------------------------------------------- metadata

pub const PRIMARIES: &[&str] = &["astro-ph.GA", "cond-mat.str-el", "cs.LG", "hep-th", "math.CO", "q-bio.NC"];

const TOPIC_WORDS: &[&[&str]] = &[
    &["galaxy", "halo", "redshift", "stellar", "cluster", "dust", "quasar", "disk"],
    &["spin", "lattice", "hubbard", "fermion", "magnon", "phase", "correlated", "insulator"],
    &["network", "training", "gradient", "neural", "dataset", "loss", "learning", "model"],
    &["string", "brane", "gauge", "duality", "holographic", "supersymmetry", "anomaly", "moduli"],
    &["graph", "partition", "coloring", "bijection", "polytope", "matroid", "tableau", "enumeration"],
    &["neuron", "cortex", "synaptic", "spike", "plasticity", "memory", "firing", "dendrite"],
];

const COMMON_WORDS: &[&str] =
    &["we", "study", "the", "of", "a", "new", "result", "show", "that", "this", "paper", "in", "and", "method"];

fn words(rng: &mut impl Rng, topic: usize, n: usize, signal: f64) -> String {
    (0..n)
        .map(|_| {
            if rng.random_bool(signal) {
                *TOPIC_WORDS[topic].choose(rng).unwrap()
            } else if rng.random_bool(0.2) {
                *TOPIC_WORDS[rng.random_range(0..TOPIC_WORDS.len())].choose(rng).unwrap()
            } else {
                *COMMON_WORDS.choose(rng).unwrap()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn maybe<R: Rng>(rng: &mut R, p: f64, f: impl FnOnce(&mut R) -> String) -> Option<String> {
    if rng.random_bool(p) {
        Some(f(rng))
    } else {
        None
    }
}

/// A valid record with `id`, primary category index `topic`, and random
/// optional fields.
pub fn synthetic_record(rng: &mut impl Rng, id: &str, topic: usize) -> ArticleMetadata {
    let mut categories = vec![PRIMARIES[topic].to_string()];
    if rng.random_bool(0.3) {
        categories.push(PRIMARIES[(topic + 1) % PRIMARIES.len()].to_string());
    }
    let n_authors = rng.random_range(1..=4);
    let surnames = ["Smith", "van der Berg", "O'Neil", "Garcia", "Chen", "Okafor"];
    let authors: Vec<String> = (0..n_authors)
        .map(|k| format!("{}. {}", (b'A' + k as u8) as char, surnames.choose(&mut *rng).unwrap()))
        .collect();
    let n_versions = rng.random_range(1..=3);
    ArticleMetadata {
        id: id.to_string(),
        submitter: maybe(rng, 0.9, |_| "A. Submitter".to_string()),
        authors: authors.join(", "),
        title: words(rng, topic, 8, 0.35),
        comments: maybe(rng, 0.6, |r| format!("{} pages", r.random_range(3..40))),
        journal_ref: maybe(rng, 0.3, |r| format!("J. Synth. {} ({})", r.random_range(1..99), r.random_range(1992..2020))),
        doi: maybe(rng, 0.4, |r| format!("10.{}/synth.{}", r.random_range(1000..9999), r.random_range(1..99999))),
        report_no: maybe(rng, 0.1, |r| format!("REP-{}", r.random_range(1..999))),
        abstract_text: words(rng, topic, 60, 0.3),
        categories,
        versions: (1..=n_versions).map(|v| format!("v{v}")).collect(),
    }
}

// ---------------------------------------------------------------- mini corpus

/// A generated corpus: metadata in archive order, and for each article the
/// set of articles its text cites (`None` if it has no text).
pub struct MiniArxiv {
    pub records: Vec<ArticleMetadata>,
    pub cites: Vec<Option<Vec<usize>>>,
}

/// `n` articles, `n_text` of which have full text. Out-degrees follow a
/// heavy-tailed plan and citations prefer popular and same-topic articles.
pub fn mini_arxiv(rng: &mut impl Rng, n: usize, n_text: usize) -> MiniArxiv {
    assert!(n < 10_000);
    let ids: Vec<String> = (1..=n).map(|i| format!("0801.{i:04}")).collect();
    let topics: Vec<usize> = (0..n).map(|_| rng.random_range(0..PRIMARIES.len())).collect();
    let records: Vec<ArticleMetadata> =
        ids.iter().zip(&topics).map(|(id, &t)| synthetic_record(rng, id, t)).collect();

    let zeta: Zeta<f64> = Zeta::new(2.2).unwrap();
    let popularity: Vec<f64> = (0..n).map(|_| zeta.sample(rng).min(200.0)).collect();
    let mut with_text: Vec<usize> = (0..n).collect();
    with_text.shuffle(rng);
    with_text.truncate(n_text);
    let mut cites: Vec<Option<Vec<usize>>> = vec![None; n];
    for &i in &with_text {
        let k = (zeta.sample(rng) as usize).min(60);
        let mut out = Vec::new();
        for _ in 0..k {
            let same = rng.random_bool(0.7);
            let pool: Vec<usize> = (0..n).filter(|&j| j != i && (!same || topics[j] == topics[i])).collect();
            let weights: Vec<f64> = pool.iter().map(|&j| popularity[j]).collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.random_range(0.0..total);
            let mut pick = pool[pool.len() - 1];
            for (&j, &w) in pool.iter().zip(&weights) {
                if u < w {
                    pick = j;
                    break;
                }
                u -= w;
            }
            out.push(pick);
        }
        cites[i] = Some(out);
    }
    MiniArxiv { records, cites }
}

impl MiniArxiv {
    /// Writes one `<yymm>/<id>.txt` file per article with text. Citations
    /// are written in a mix of styles; some repeat.
    pub fn write_corpus(&self, root: &Path, rng: &mut impl Rng) {
        for (i, cited) in self.cites.iter().enumerate() {
            let Some(cited) = cited else { continue };
            let r = &self.records[i];
            let topic = PRIMARIES.iter().position(|p| *p == r.categories[0]).unwrap();
            let mut text = words(rng, topic, 300, 0.25);
            text.push_str("\n\nReferences\n");
            for (k, &j) in cited.iter().enumerate() {
                let id = &self.records[j].id;
                let cite = match k % 4 {
                    0 => format!("[{}] A. Author, arXiv:{id} (2008).\n", k + 1),
                    1 => format!("[{}] see {id}v2.\n", k + 1),
                    2 => format!("[{}] preprint arXiv:{id}, cf. eq. (3).\n", k + 1),
                    _ => format!("[{}] ({id})\n", k + 1),
                };
                text.push_str(&cite);
            }
            let dir = root.join(&r.id[..4]);
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(dir.join(format!("{}.txt", r.id)), text).unwrap();
        }
    }

    /// Edges the extractor should find: versions ignored, self-citations
    /// and repeats dropped.
    pub fn expected_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .cites
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().flatten().filter(move |&&j| j != i).map(move |&j| (i, j)))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }
}
