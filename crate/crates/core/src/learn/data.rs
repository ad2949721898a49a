use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, LearnError};
use crate::arxiv_id::ArxivId;
use crate::oai_harvest::ArticleMetadata;

/// One-hot assignment of articles to their primary category, stored as a
/// column index per article. Columns are the sorted distinct codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryMatrix {
    categories: Vec<String>,
    labels: Vec<usize>,
}

impl CategoryMatrix {
    pub fn from_primaries<'a, I>(primaries: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let primaries: Vec<&str> = primaries.into_iter().collect();
        let categories: Vec<String> =
            primaries.iter().copied().collect::<BTreeSet<_>>().into_iter().map(String::from).collect();
        let column: HashMap<&str, usize> =
            categories.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let labels = primaries.iter().map(|p| column[p]).collect();
        CategoryMatrix { categories, labels }
    }

    pub fn n_articles(&self) -> usize {
        self.labels.len()
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn column(&self, code: &str) -> Option<usize> {
        self.categories.binary_search_by(|c| c.as_str().cmp(code)).ok()
    }

    pub fn to_dense(&self) -> FeatureMatrix {
        let mut m = FeatureMatrix::zeros(self.n_articles(), self.n_categories());
        for (i, &l) in self.labels.iter().enumerate() {
            m.row_mut(i)[l] = 1.0;
        }
        m
    }
}

/// Records are expected to be validated, so every one has a primary
/// category. A record without one is an error rather than a silent row.
pub fn build_category_matrix(records: &[ArticleMetadata]) -> Result<CategoryMatrix, LearnError> {
    let primaries = records
        .iter()
        .map(|r| {
            r.primary_category()
                .ok_or_else(|| LearnError::Domain(format!("record {} has no categories", r.id)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CategoryMatrix::from_primaries(primaries))
}

/// Random permutation of article indices; the first `n_train` entries are
/// the training set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    seed: u64,
    n_train: usize,
    order: Vec<usize>,
    is_train: Vec<bool>,
}

impl DatasetSplit {
    pub fn new(n: usize, n_train: usize, seed: u64) -> Result<Self, LearnError> {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self::from_order(order, n_train, seed)
    }

    pub fn from_order(order: Vec<usize>, n_train: usize, seed: u64) -> Result<Self, LearnError> {
        let n = order.len();
        if n_train > n {
            return Err(LearnError::Config(format!("n_train {n_train} exceeds {n} articles")));
        }
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(LearnError::Domain(format!("split order is not a permutation (index {i})")));
            }
        }
        let mut is_train = vec![false; n];
        for &i in &order[..n_train] {
            is_train[i] = true;
        }
        Ok(DatasetSplit { seed, n_train, order, is_train })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn train(&self) -> &[usize] {
        &self.order[..self.n_train]
    }

    pub fn test(&self) -> &[usize] {
        &self.order[self.n_train..]
    }

    pub fn is_train(&self, i: usize) -> bool {
        self.is_train[i]
    }
}

/// On-disk form of a split: the permuted ids, so the file does not depend
/// on archive order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitFile {
    pub seed: u64,
    pub n_train: usize,
    pub order: Vec<String>,
}

impl SplitFile {
    pub fn new(split: &DatasetSplit, ids: &[String]) -> Self {
        SplitFile {
            seed: split.seed,
            n_train: split.n_train,
            order: split.order.iter().map(|&i| ids[i].clone()).collect(),
        }
    }

    /// Resolves the stored ids against `ids`; both must name the same set.
    pub fn resolve(&self, ids: &[String]) -> Result<DatasetSplit, LearnError> {
        let position: HashMap<String, usize> = ids.iter().enumerate().map(|(i, s)| (id_key(s), i)).collect();
        if self.order.len() != ids.len() {
            return Err(LearnError::Domain(format!(
                "split covers {} articles, metadata has {}",
                self.order.len(),
                ids.len()
            )));
        }
        let order = self
            .order
            .iter()
            .map(|s| {
                position
                    .get(&id_key(s))
                    .copied()
                    .ok_or_else(|| LearnError::Domain(format!("split id {s} is not in the metadata")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        DatasetSplit::from_order(order, self.n_train, self.seed)
    }
}

pub(crate) fn id_key(raw: &str) -> String {
    ArxivId::parse(raw).map(|id| id.canonical(false)).unwrap_or_else(|_| raw.trim().to_string())
}
