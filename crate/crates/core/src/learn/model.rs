use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{metrics_from_probs, EvalMetrics};
use super::sgd::{self, Hyper, LinearParams, TrainSummary};
use super::{CategoryMatrix, DatasetSplit, FeatureMatrix, LearnError};
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Channel {
    Title,
    Abstract,
    Fulltext,
    Cocitation,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Title, Channel::Abstract, Channel::Fulltext, Channel::Cocitation];

    pub fn letter(self) -> char {
        match self {
            Channel::Title => 'T',
            Channel::Abstract => 'A',
            Channel::Fulltext => 'F',
            Channel::Cocitation => 'C',
        }
    }

    pub fn from_letter(s: &str) -> Option<Channel> {
        Channel::ALL.into_iter().find(|c| s.len() == 1 && s.starts_with(c.letter()))
    }
}

/// A combination of channels, always concatenated in T, A, F, C order.
///
/// Parsed from `T`, `A+C`, `All`, or `All-X`; displayed in the same style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChannelSet([bool; 4]);

impl ChannelSet {
    pub fn channels(self) -> impl Iterator<Item = Channel> {
        Channel::ALL.into_iter().filter(move |c| self.0[*c as usize])
    }

    pub fn contains(self, c: Channel) -> bool {
        self.0[c as usize]
    }
}

impl FromStr for ChannelSet {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self, LearnError> {
        let s = s.trim();
        let bad = || LearnError::Config(format!("unknown feature channel spec {s:?}"));
        let mut set = [false; 4];
        if let Some(rest) = s.strip_prefix("All") {
            set = [true; 4];
            for part in rest.split('-').skip(1) {
                let c = Channel::from_letter(part.trim()).ok_or_else(bad)?;
                set[c as usize] = false;
            }
            if !rest.is_empty() && !rest.starts_with('-') {
                return Err(bad());
            }
        } else {
            for part in s.split('+') {
                let c = Channel::from_letter(part.trim()).ok_or_else(bad)?;
                set[c as usize] = true;
            }
        }
        if !set.contains(&true) {
            return Err(bad());
        }
        Ok(ChannelSet(set))
    }
}

impl fmt::Display for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.0.iter().filter(|&&b| b).count();
        if n == 4 {
            return f.write_str("All");
        }
        if n == 3 {
            let missing = Channel::ALL.into_iter().find(|c| !self.contains(*c)).unwrap();
            return write!(f, "All-{}", missing.letter());
        }
        let letters: Vec<String> = self.channels().map(|c| c.letter().to_string()).collect();
        f.write_str(&letters.join("+"))
    }
}

/// Comma-separated list of channel sets, e.g. `T,A,All,All-F`.
pub fn parse_ablation_spec(spec: &str) -> Result<Vec<ChannelSet>, LearnError> {
    spec.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// Per-article features of each available channel.
#[derive(Debug, Clone, Default)]
pub struct ChannelFeatures {
    pub title: Option<FeatureMatrix>,
    pub abstract_text: Option<FeatureMatrix>,
    pub fulltext: Option<FeatureMatrix>,
    pub cocitation: Option<FeatureMatrix>,
}

impl ChannelFeatures {
    pub fn get(&self, c: Channel) -> Option<&FeatureMatrix> {
        match c {
            Channel::Title => self.title.as_ref(),
            Channel::Abstract => self.abstract_text.as_ref(),
            Channel::Fulltext => self.fulltext.as_ref(),
            Channel::Cocitation => self.cocitation.as_ref(),
        }
    }

    pub fn set(&mut self, c: Channel, m: FeatureMatrix) {
        let slot = match c {
            Channel::Title => &mut self.title,
            Channel::Abstract => &mut self.abstract_text,
            Channel::Fulltext => &mut self.fulltext,
            Channel::Cocitation => &mut self.cocitation,
        };
        *slot = Some(m);
    }

    pub fn assemble(&self, set: ChannelSet) -> Result<FeatureMatrix, LearnError> {
        let parts = set
            .channels()
            .map(|c| self.get(c).ok_or_else(|| LearnError::Config(format!("channel {} was not computed", c.letter()))))
            .collect::<Result<Vec<_>, _>>()?;
        FeatureMatrix::hconcat(&parts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub channels: String,
    pub categories: Vec<String>,
    #[serde(flatten)]
    pub params: LinearParams,
    pub hyper: Hyper,
    pub summary: TrainSummary,
}

impl ClassifierModel {
    pub fn predict_proba(&self, x: &[f32]) -> Vec<f64> {
        self.params.predict_proba(x)
    }

    pub fn save(&self, path: &Path) -> Result<(), LearnError> {
        let json = serde_json::to_string(self).map_err(|e| LearnError::Parse { line: 0, message: e.to_string() })?;
        fs::write(path, json + "\n").map_err(|e| LearnError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, LearnError> {
        let text = fs::read_to_string(path).map_err(|e| LearnError::io(path, e))?;
        let m: ClassifierModel = serde_json::from_str(&text)
            .map_err(|e| LearnError::Parse { line: e.line(), message: e.to_string() })?;
        if m.params.weights.len() != m.params.n_classes * m.params.dim
            || m.params.biases.len() != m.params.n_classes
            || m.categories.len() != m.params.n_classes
        {
            return Err(LearnError::Domain(format!("{}: inconsistent model shape", path.display())));
        }
        Ok(m)
    }
}

/// Fits on the training rows of `split`.
pub fn train(
    x: &FeatureMatrix,
    c: &CategoryMatrix,
    split: &DatasetSplit,
    hyper: &Hyper,
    channels: &str,
) -> Result<ClassifierModel, LearnError> {
    check_rows(x, c, split)?;
    let (params, summary) = sgd::fit(x, c.labels(), c.n_categories(), split.train(), hyper)?;
    Ok(ClassifierModel {
        channels: channels.to_string(),
        categories: c.categories().to_vec(),
        params,
        hyper: *hyper,
        summary,
    })
}

/// Metrics on the test rows of `split`.
pub fn evaluate(
    model: &ClassifierModel,
    x: &FeatureMatrix,
    c: &CategoryMatrix,
    split: &DatasetSplit,
    exec: Exec,
) -> Result<EvalMetrics, LearnError> {
    check_rows(x, c, split)?;
    if x.cols() != model.params.dim {
        return Err(LearnError::Domain(format!("features have {} columns, model expects {}", x.cols(), model.params.dim)));
    }
    if c.categories() != model.categories {
        return Err(LearnError::Domain("category columns differ from the model's".into()));
    }
    let probs = par::map(exec, split.test(), |&i| model.predict_proba(x.row(i)));
    let truth: Vec<usize> = split.test().iter().map(|&i| c.label(i)).collect();
    Ok(metrics_from_probs(&probs, &truth))
}

fn check_rows(x: &FeatureMatrix, c: &CategoryMatrix, split: &DatasetSplit) -> Result<(), LearnError> {
    if x.rows() != c.n_articles() || split.len() != c.n_articles() {
        return Err(LearnError::Domain(format!(
            "{} feature rows, {} labels, {} split entries",
            x.rows(),
            c.n_articles(),
            split.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub features: String,
    pub dim: usize,
    #[serde(flatten)]
    pub metrics: EvalMetrics,
}

/// Trains and evaluates one model per channel set. Rows are independent
/// jobs; each model trains single-threaded, so the result does not depend
/// on `exec`.
pub fn ablation_run(
    features: &ChannelFeatures,
    c: &CategoryMatrix,
    split: &DatasetSplit,
    hyper: &Hyper,
    sets: &[ChannelSet],
    exec: Exec,
) -> Result<Vec<AblationRow>, LearnError> {
    par::try_map(exec, sets, |&set| {
        let x = features.assemble(set)?;
        let name = set.to_string();
        let model = train(&x, c, split, hyper, &name)?;
        let metrics = evaluate(&model, &x, c, split, Exec::Sequential)?;
        log::info!("{name}: top-1 {:.4}, perplexity {:.3}", metrics.top_1, metrics.perplexity);
        Ok(AblationRow { features: name, dim: x.cols(), metrics })
    })
}

pub fn render_ablation_table(rows: &[AblationRow]) -> String {
    let width = rows.iter().map(|r| r.features.len()).max().unwrap_or(0).max("Features".len());
    let mut out = format!("{:<width$}  {:>6}  {:>6}  {:>6}  {:>10}\n", "Features", "Top 1", "Top 3", "Top 5", "Perplexity");
    for r in rows {
        let m = &r.metrics;
        out += &format!(
            "{:<width$}  {:>5.1}%  {:>5.1}%  {:>5.1}%  {:>10.2}\n",
            r.features,
            100.0 * m.top_1,
            100.0 * m.top_3,
            100.0 * m.top_5,
            m.perplexity
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_spec_parsing() {
        let sets = parse_ablation_spec("T,A,F,C,All,All-T,All-A,All-F,All-C,T+A").unwrap();
        let names: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
        assert_eq!(names, ["T", "A", "F", "C", "All", "All-T", "All-A", "All-F", "All-C", "T+A"]);
        assert_eq!("A+T".parse::<ChannelSet>().unwrap().to_string(), "T+A");
        assert_eq!("All-T-A".parse::<ChannelSet>().unwrap().to_string(), "F+C");
        for bad in ["X", "All-Q", "Allx", "", "t", "All-T-A-F-C"] {
            assert!(matches!(bad.parse::<ChannelSet>(), Err(LearnError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn all_minus_f_dimension() {
        let n = 3;
        let mut f = ChannelFeatures::default();
        f.set(Channel::Title, FeatureMatrix::zeros(n, 512));
        f.set(Channel::Abstract, FeatureMatrix::zeros(n, 512));
        f.set(Channel::Cocitation, FeatureMatrix::zeros(n, 7));
        let x = f.assemble("All-F".parse().unwrap()).unwrap();
        assert_eq!(x.cols(), 512 + 512 + 7);
        assert!(matches!(f.assemble("All".parse().unwrap()), Err(LearnError::Config(_))));
    }

    #[test]
    fn model_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = CategoryMatrix::from_primaries(["a", "b", "a", "b"]);
        let x = FeatureMatrix::from_rows(1, vec![vec![1.0], vec![-1.0], vec![0.9], vec![-1.1]]).unwrap();
        let split = DatasetSplit::new(4, 4, 0).unwrap();
        let m = train(&x, &c, &split, &Hyper::default(), "T").unwrap();
        let path = dir.path().join("model.json");
        m.save(&path).unwrap();
        assert_eq!(ClassifierModel::load(&path).unwrap(), m);
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(json["n_classes"], 2);
        assert_eq!(json["dim"], 1);
    }

    #[test]
    fn table_layout() {
        let m = EvalMetrics { n: 10, top_1: 0.5, top_3: 0.8, top_5: 1.0, perplexity: 2.25 };
        let t = render_ablation_table(&[AblationRow { features: "All-F".into(), dim: 3, metrics: m }]);
        assert_eq!(t.lines().nth(1).unwrap().split_whitespace().collect::<Vec<_>>(), ["All-F", "50.0%", "80.0%", "100.0%", "2.25"]);
    }
}
