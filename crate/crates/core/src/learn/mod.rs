//! Primary-category classification from text embeddings and co-citation
//! features.
//!
//! Features per article: 512-d embeddings of title (T), abstract (A) and
//! full text (F), plus the co-citation counts `MC` (C). `M` is the binary
//! co-citation adjacency with train→test links removed from training rows,
//! `C` the one-hot category matrix. A multinomial logistic regression on
//! any concatenation of channels is scored by top-n accuracy and
//! perplexity on the held-out rows.

mod cocitation;
mod data;
mod features;
mod metrics;
mod model;
mod sgd;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use cocitation::{align_graph, build_cocitation_matrix, cocitation_features, propagate, CoCitation, CountMatrix};
pub use data::{build_category_matrix, CategoryMatrix, DatasetSplit, SplitFile};
pub use features::{
    fallback_embed, load_embeddings, parse_embeddings, render_embeddings, write_embeddings, FeatureMatrix, EMBED_DIM,
};
pub use metrics::{metrics_from_probs, perplexity, rank_of, top_n_accuracy, EvalMetrics, PROB_FLOOR};
pub use model::{
    ablation_run, evaluate, parse_ablation_spec, render_ablation_table, train, AblationRow, Channel,
    ChannelFeatures, ChannelSet, ClassifierModel,
};
pub use sgd::{fit, objective, softmax, Hyper, LinearParams, TrainSummary};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("{0}")]
    Domain(String),
    #[error("line {line}: expected {expected} values, found {got}")]
    Dimension { line: usize, expected: usize, got: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("training diverged in epoch {epoch} (non-finite loss)")]
    Divergence { epoch: usize },
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl LearnError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        LearnError::Io { path: path.to_path_buf(), source }
    }
}
