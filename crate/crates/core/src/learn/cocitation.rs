use super::data::id_key;
use super::{CategoryMatrix, DatasetSplit, FeatureMatrix, LearnError};
use crate::citegraph::CitationGraph;
use crate::par::{self, Exec};

/// Binary co-citation adjacency after leakage masking, one sorted neighbor
/// list per article.
///
/// Row `i` lists every `j` that `i` cites or is cited by. Rows of training
/// articles then drop neighbors in the test set; rows of test articles keep
/// everything. The matrix is therefore not symmetric across the split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoCitation {
    offsets: Vec<usize>,
    cols: Vec<u32>,
}

impl CoCitation {
    fn from_rows(rows: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut cols = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        for r in rows {
            cols.extend(r);
            offsets.push(cols.len());
        }
        CoCitation { offsets, cols }
    }

    pub fn n_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.cols[self.offsets[i]..self.offsets[i + 1]]
    }

    /// `M · P` for a dense `P` with one row per article.
    pub fn mul_dense(&self, p: &FeatureMatrix, exec: Exec) -> Result<FeatureMatrix, LearnError> {
        self.check_rows(p.rows())?;
        let rows = par::map_range(exec, self.n_rows(), |i| {
            let mut acc = vec![0f64; p.cols()];
            for &j in self.row(i) {
                for (a, &x) in acc.iter_mut().zip(p.row(j as usize)) {
                    *a += x as f64;
                }
            }
            acc.into_iter().map(|x| x as f32).collect()
        });
        FeatureMatrix::from_rows(p.cols(), rows)
    }

    fn check_rows(&self, n: usize) -> Result<(), LearnError> {
        if n != self.n_rows() {
            return Err(LearnError::Domain(format!("matrix has {n} rows, co-citation has {}", self.n_rows())));
        }
        Ok(())
    }
}

pub fn build_cocitation_matrix(g: &CitationGraph, split: &DatasetSplit, exec: Exec) -> Result<CoCitation, LearnError> {
    if g.n_nodes() != split.len() {
        return Err(LearnError::Domain(format!(
            "graph has {} nodes, split has {} articles",
            g.n_nodes(),
            split.len()
        )));
    }
    let rows = par::map_range(exec, g.n_nodes(), |i| {
        let mut r: Vec<u32> = g.out_neighbors(i).iter().chain(g.in_neighbors(i)).copied().collect();
        if split.is_train(i) {
            r.retain(|&j| split.is_train(j as usize));
        }
        r.sort_unstable();
        r.dedup();
        r
    });
    Ok(CoCitation::from_rows(rows))
}

/// Dense integer matrix of per-category neighbor counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl CountMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_features(&self) -> FeatureMatrix {
        let mut m = FeatureMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (d, &s) in m.row_mut(i).iter_mut().zip(self.row(i)) {
                *d = s as f32;
            }
        }
        m
    }
}

/// The product `M C`: row `i` counts, per category, the masked neighbors
/// of article `i`.
pub fn cocitation_features(m: &CoCitation, c: &CategoryMatrix, exec: Exec) -> Result<CountMatrix, LearnError> {
    m.check_rows(c.n_articles())?;
    let cols = c.n_categories();
    let rows = par::map_range(exec, m.n_rows(), |i| {
        let mut counts = vec![0u32; cols];
        for &j in m.row(i) {
            counts[c.label(j as usize)] += 1;
        }
        counts
    });
    Ok(CountMatrix { rows: rows.len(), cols, data: rows.concat() })
}

/// Higher-order propagation `MC + a M²C + b M³C + ...`, one coefficient per
/// extra order, by repeated sparse multiplication. Empty `coefficients`
/// gives `MC`.
pub fn propagate(m: &CoCitation, c: &CategoryMatrix, coefficients: &[f64], exec: Exec) -> Result<FeatureMatrix, LearnError> {
    let mut power = cocitation_features(m, c, exec)?.to_features();
    let mut out: Vec<f64> = (0..power.rows()).flat_map(|i| power.row(i).to_vec()).map(f64::from).collect();
    for &coef in coefficients {
        power = m.mul_dense(&power, exec)?;
        for i in 0..power.rows() {
            let cols = power.cols();
            for (o, &x) in out[i * cols..(i + 1) * cols].iter_mut().zip(power.row(i)) {
                *o += coef * x as f64;
            }
        }
    }
    let cols = c.n_categories();
    let rows = out.chunks(cols.max(1)).take(m.n_rows()).map(|r| r.iter().map(|&x| x as f32).collect()).collect();
    FeatureMatrix::from_rows(cols, rows)
}

/// Reorders `g` so node `i` is `ids[i]`. Both must name the same articles
/// (versions ignored).
pub fn align_graph(g: &CitationGraph, ids: &[String]) -> Result<CitationGraph, LearnError> {
    let keys: Vec<String> = ids.iter().map(|s| id_key(s)).collect();
    if keys.len() != g.n_nodes() {
        return Err(LearnError::Domain(format!(
            "graph has {} nodes, metadata has {} records",
            g.n_nodes(),
            keys.len()
        )));
    }
    let mut new_index = vec![0u32; g.n_nodes()];
    for (i, k) in keys.iter().enumerate() {
        let old = g
            .node_index(k)
            .ok_or_else(|| LearnError::Domain(format!("article {k} is not a graph node")))?;
        new_index[old] = i as u32;
    }
    let edges: Vec<(u32, u32)> =
        g.edges().map(|(s, t)| (new_index[s as usize], new_index[t as usize])).collect();
    CitationGraph::from_edges(keys, edges).map_err(|e| LearnError::Domain(e.to_string()))
}
