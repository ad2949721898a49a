//! Intra-corpus citation graph and its summary statistics.
//!
//! Edges point from the citing article to the cited one. An edge `i → j`
//! exists when article `i`'s text contains an identifier of article `j`
//! (versions ignored, `i != j`). Identifiers of articles outside the
//! metadata set are dropped, so every node is a harvested article.

mod components;
mod graph;
mod powerlaw;

use std::io;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use components::{largest_wcc, UnionFind};
pub use graph::{
    build_graph, build_graph_with, parse_edges, read_edges, render_edges, write_edges, CitationGraph,
};
pub use powerlaw::{
    fit_power_law, fit_power_law_with, hurwitz_zeta, mle_alpha, FitError, PowerLawFit, ALPHA_MAX,
    ALPHA_MIN,
};

use crate::par::Exec;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph has no nodes")]
    Empty,
    #[error("duplicate node {0}")]
    DuplicateNode(String),
    #[error("edge {citing} -> {cited} outside a graph of {n_nodes} nodes")]
    EdgeOutOfRange { citing: u32, cited: u32, n_nodes: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// Average total degree, `2 E / N`.
pub fn mean_degree(g: &CitationGraph) -> Result<f64, GraphError> {
    if g.n_nodes() == 0 {
        return Err(GraphError::Empty);
    }
    Ok(2.0 * g.n_edges() as f64 / g.n_nodes() as f64)
}

/// Fraction of nodes with no in- or out-edges.
pub fn isolated_fraction(g: &CitationGraph) -> Result<f64, GraphError> {
    if g.n_nodes() == 0 {
        return Err(GraphError::Empty);
    }
    let isolated = (0..g.n_nodes())
        .filter(|&i| g.out_neighbors(i).is_empty() && g.in_neighbors(i).is_empty())
        .count();
    Ok(isolated as f64 / g.n_nodes() as f64)
}

/// Fraction of nodes in the largest weakly connected component.
pub fn wcc_fraction(g: &CitationGraph) -> Result<f64, GraphError> {
    if g.n_nodes() == 0 {
        return Err(GraphError::Empty);
    }
    Ok(largest_wcc(g) as f64 / g.n_nodes() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub mean_degree: f64,
    pub wcc_fraction: f64,
    pub isolated_fraction: f64,
    pub fit_in: Option<PowerLawFit>,
    pub fit_out: Option<PowerLawFit>,
}

/// Flat JSON shape of [`GraphStats`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub mean_degree: f64,
    pub wcc_fraction: f64,
    pub isolated_fraction: f64,
    pub alpha_in: Option<f64>,
    pub x_min_in: Option<u64>,
    pub ks_in: Option<f64>,
    pub alpha_out: Option<f64>,
    pub x_min_out: Option<u64>,
    pub ks_out: Option<f64>,
}

/// Column headers of the rendered table row.
pub const TABLE_COLUMNS: [&str; 7] =
    ["Dataset", "N_nodes", "N_edges", "<k>", "alpha_in", "alpha_out", "%WCC"];

impl GraphStats {
    pub fn row(&self) -> StatsRow {
        StatsRow {
            n_nodes: self.n_nodes,
            n_edges: self.n_edges,
            mean_degree: self.mean_degree,
            wcc_fraction: self.wcc_fraction,
            isolated_fraction: self.isolated_fraction,
            alpha_in: self.fit_in.map(|f| f.alpha),
            x_min_in: self.fit_in.map(|f| f.x_min),
            ks_in: self.fit_in.map(|f| f.ks),
            alpha_out: self.fit_out.map(|f| f.alpha),
            x_min_out: self.fit_out.map(|f| f.x_min),
            ks_out: self.fit_out.map(|f| f.ks),
        }
    }

    /// Header and one row in the column layout of [`TABLE_COLUMNS`],
    /// followed by a line with the cutoffs and the isolated fraction.
    pub fn render_table(&self, dataset: &str) -> String {
        let alpha = |f: &Option<PowerLawFit>| f.map_or("-".to_string(), |f| format!("{:.2}", f.alpha));
        let xmin = |f: &Option<PowerLawFit>| f.map_or("-".to_string(), |f| f.x_min.to_string());
        let cells = [
            dataset.to_string(),
            self.n_nodes.to_string(),
            self.n_edges.to_string(),
            format!("{:.3}", self.mean_degree),
            alpha(&self.fit_in),
            alpha(&self.fit_out),
            format!("{:.1}", 100.0 * self.wcc_fraction),
        ];
        let widths: Vec<usize> =
            TABLE_COLUMNS.iter().zip(&cells).map(|(h, c)| h.len().max(c.len())).collect();
        let line = |xs: &[String]| {
            xs.iter().zip(&widths).map(|(x, w)| format!("{x:>w$}")).collect::<Vec<_>>().join("  ")
        };
        let header: Vec<String> = TABLE_COLUMNS.iter().map(|s| s.to_string()).collect();
        format!(
            "{}\n{}\n# x_min_in={} x_min_out={} isolated={:.1}%\n",
            line(&header),
            line(&cells),
            xmin(&self.fit_in),
            xmin(&self.fit_out),
            100.0 * self.isolated_fraction
        )
    }
}

/// All summary statistics. Degree fits that fail are reported as absent.
pub fn stats_report(g: &CitationGraph, exec: Exec) -> Result<GraphStats, GraphError> {
    let mean = mean_degree(g)?;
    let (in_deg, out_deg) = (g.in_degrees(), g.out_degrees());
    let fit = |d: &[u64], which: &str| match powerlaw::fit_power_law_with(d, exec) {
        Ok(f) => Some(f),
        Err(e) => {
            log::info!("{which}-degree power-law fit unavailable: {e}");
            None
        }
    };
    let (fit_in, fit_out) = crate::par::join(exec, || fit(&in_deg, "in"), || fit(&out_deg, "out"));
    Ok(GraphStats {
        n_nodes: g.n_nodes(),
        n_edges: g.n_edges(),
        mean_degree: mean,
        wcc_fraction: wcc_fraction(g)?,
        isolated_fraction: isolated_fraction(g)?,
        fit_in,
        fit_out,
    })
}
