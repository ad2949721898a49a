use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::GraphError;
use crate::arxiv_id::{scan_text, ArxivId};
use crate::corpus::CorpusIndex;
use crate::par::{self, Exec};

/// Directed citation graph (citing → cited) in compressed sparse row form,
/// with both out- and in-adjacency. No self-loops, no duplicate edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationGraph {
    nodes: Vec<String>,
    index: HashMap<String, u32>,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
}

impl CitationGraph {
    /// Builds a graph; self-loops and repeated edges are dropped.
    pub fn from_edges<I>(nodes: Vec<String>, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let n = nodes.len();
        let mut index = HashMap::with_capacity(n);
        for (i, id) in nodes.iter().enumerate() {
            if index.insert(id.clone(), i as u32).is_some() {
                return Err(GraphError::DuplicateNode(id.clone()));
            }
        }
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for (s, t) in edges {
            if s as usize >= n || t as usize >= n {
                return Err(GraphError::EdgeOutOfRange { citing: s, cited: t, n_nodes: n });
            }
            if s != t {
                pairs.push((s, t));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();

        let (out_offsets, out_targets) = csr(n, pairs.iter().copied());
        let mut reversed: Vec<(u32, u32)> = pairs.iter().map(|&(s, t)| (t, s)).collect();
        reversed.sort_unstable();
        let (in_offsets, in_sources) = csr(n, reversed.into_iter());
        Ok(CitationGraph { nodes, index, out_offsets, out_targets, in_offsets, in_sources })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.out_targets.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_id(&self, i: usize) -> &str {
        &self.nodes[i]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&i| i as usize)
    }

    pub fn out_neighbors(&self, i: usize) -> &[u32] {
        &self.out_targets[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    pub fn in_neighbors(&self, i: usize) -> &[u32] {
        &self.in_sources[self.in_offsets[i]..self.in_offsets[i + 1]]
    }

    pub fn out_degrees(&self) -> Vec<u64> {
        self.out_offsets.windows(2).map(|w| (w[1] - w[0]) as u64).collect()
    }

    pub fn in_degrees(&self) -> Vec<u64> {
        self.in_offsets.windows(2).map(|w| (w[1] - w[0]) as u64).collect()
    }

    /// Edges as `(citing, cited)` index pairs, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n_nodes()).flat_map(move |i| self.out_neighbors(i).iter().map(move |&j| (i as u32, j)))
    }
}

fn csr(n: usize, sorted: impl Iterator<Item = (u32, u32)>) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = vec![0usize; n + 1];
    let mut targets = Vec::new();
    for (s, t) in sorted {
        offsets[s as usize + 1] += 1;
        targets.push(t);
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    (offsets, targets)
}

/// Versionless canonical form used for node identity.
fn node_key(raw: &str) -> String {
    ArxivId::parse(raw).map(|id| id.canonical(false)).unwrap_or_else(|_| raw.to_string())
}

/// Builds the graph from per-article text supplied by `text_of(i)`.
///
/// Each identifier found in article `i`'s text that names another known
/// article `j` (versions ignored) becomes the edge `i → j`.
pub fn build_graph_with<F>(ids: &[String], exec: Exec, text_of: F) -> Result<CitationGraph, GraphError>
where
    F: Fn(usize) -> Option<String> + Sync + Send,
{
    let nodes: Vec<String> = ids.iter().map(|s| node_key(s)).collect();
    let lookup: HashMap<&str, u32> = nodes.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();
    let per_doc: Vec<Vec<u32>> = par::map_range(exec, nodes.len(), |i| {
        let Some(text) = text_of(i) else { return Vec::new() };
        let mut cited: Vec<u32> = scan_text(&text)
            .into_iter()
            .filter_map(|m| lookup.get(m.id.canonical(false).as_str()).copied())
            .filter(|&j| j as usize != i)
            .collect();
        cited.sort_unstable();
        cited.dedup();
        cited
    });
    let edges = per_doc
        .into_iter()
        .enumerate()
        .flat_map(|(i, cited)| cited.into_iter().map(move |j| (i as u32, j)));
    CitationGraph::from_edges(nodes, edges)
}

/// Builds the graph by scanning each indexed document. Unreadable
/// documents are logged and treated as empty.
pub fn build_graph(index: &CorpusIndex, ids: &[String], exec: Exec) -> Result<CitationGraph, GraphError> {
    build_graph_with(ids, exec, |i| {
        let path = index.path(&node_key(&ids[i]))?;
        match fs::read(path) {
            Ok(bytes) => Some(String::from_utf8_lossy(&bytes).into_owned()),
            Err(e) => {
                log::warn!("{}: {e}; treating as empty", path.display());
                None
            }
        }
    })
}

/// Renders the edge file: a `#nodes` block, an `#edges` line, then
/// `citing<TAB>cited` lines sorted by id.
pub fn render_edges(g: &CitationGraph) -> String {
    let mut out = String::from("#nodes\n");
    for id in g.nodes() {
        out.push_str(id);
        out.push('\n');
    }
    out.push_str("#edges\n");
    let mut lines: Vec<(&str, &str)> =
        g.edges().map(|(s, t)| (g.node_id(s as usize), g.node_id(t as usize))).collect();
    lines.sort_unstable();
    for (s, t) in lines {
        out.push_str(s);
        out.push('\t');
        out.push_str(t);
        out.push('\n');
    }
    out
}

pub fn write_edges(g: &CitationGraph, path: &Path, gzip: bool) -> Result<(), GraphError> {
    let text = render_edges(g);
    let io_err = |e| GraphError::Io { path: path.to_path_buf(), source: e };
    if gzip {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(text.as_bytes()).map_err(io_err)?;
        fs::write(path, enc.finish().map_err(io_err)?).map_err(io_err)
    } else {
        fs::write(path, text).map_err(io_err)
    }
}

/// Reads an edge file, plain or gzip (detected by magic bytes).
///
/// Files without a `#nodes` header are accepted; their node list is the
/// ids in order of first appearance.
pub fn read_edges(path: &Path) -> Result<CitationGraph, GraphError> {
    let io_err = |e| GraphError::Io { path: path.to_path_buf(), source: e };
    let raw = fs::read(path).map_err(io_err)?;
    let text = if raw.starts_with(&[0x1f, 0x8b]) {
        let mut s = String::new();
        GzDecoder::new(&raw[..]).read_to_string(&mut s).map_err(io_err)?;
        s
    } else {
        String::from_utf8(raw).map_err(|e| GraphError::Parse { line: 0, message: e.to_string() })?
    };
    parse_edges(&text)
}

pub fn parse_edges(text: &str) -> Result<CitationGraph, GraphError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
    let err = |line: usize, message: String| GraphError::Parse { line, message };

    let mut nodes: Vec<String> = Vec::new();
    let mut index: HashMap<String, u32> = HashMap::new();
    let has_header = lines.peek().is_some_and(|(_, l)| l.trim() == "#nodes");
    if has_header {
        lines.next();
        loop {
            let Some((no, line)) = lines.next() else {
                return Err(err(0, "missing #edges line".to_string()));
            };
            let line = line.trim();
            if line == "#edges" {
                break;
            }
            if line.is_empty() {
                continue;
            }
            if index.insert(line.to_string(), nodes.len() as u32).is_some() {
                return Err(err(no, format!("duplicate node {line}")));
            }
            nodes.push(line.to_string());
        }
    }

    let mut edges = Vec::new();
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
            return Err(err(no, format!("expected citing<TAB>cited, got {line:?}")));
        }
        let mut endpoint = |id: &str| -> Result<u32, GraphError> {
            if let Some(&i) = index.get(id) {
                return Ok(i);
            }
            if has_header {
                return Err(err(no, format!("{id} is not in the node list")));
            }
            let i = nodes.len() as u32;
            index.insert(id.to_string(), i);
            nodes.push(id.to_string());
            Ok(i)
        };
        let s = endpoint(fields[0])?;
        let t = endpoint(fields[1])?;
        if s == t {
            return Err(err(no, format!("self-loop on {}", fields[0])));
        }
        edges.push((s, t));
    }
    CitationGraph::from_edges(nodes, edges)
}
