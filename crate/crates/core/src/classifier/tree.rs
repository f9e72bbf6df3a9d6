//! Greedy top-down CART induction with Gini impurity.
//!
//! Candidate thresholds are midpoints between consecutive distinct sorted
//! values of a feature. The best split minimises the size-weighted Gini of the
//! two children; ties go to the lowest feature index, then the lowest
//! threshold. Rows with `x[feature] <= threshold` go left.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PhysicalActivity;
use crate::signal::FeatureMatrix;
use crate::{Error, Result};

pub const TREE_FORMAT_VERSION: u32 = 1;

const K: usize = PhysicalActivity::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            max_depth: 12,
            min_samples_leaf: 5,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidParameter("min_samples_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        distribution: [f64; K],
    },
}

/// A trained tree stored as a flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub version: u32,
    pub criterion: String,
    pub hyperparams: Hyperparams,
    pub n_features: usize,
    pub schema_hash: String,
    pub nodes: Vec<Node>,
}

fn gini(counts: &[usize; K], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [usize],
    params: Hyperparams,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> [usize; K] {
        let mut c = [0usize; K];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }

    fn leaf(counts: &[usize; K], n: usize) -> Node {
        let mut distribution = [0.0; K];
        for (d, &c) in distribution.iter_mut().zip(counts) {
            *d = c as f64 / n as f64;
        }
        Node::Leaf { distribution }
    }

    fn best_split(&self, idx: &[usize], counts: &[usize; K]) -> Option<BestSplit> {
        let n = idx.len();
        let min_leaf = self.params.min_samples_leaf;
        let n_features = self.rows[idx[0]].len();
        let mut best: Option<BestSplit> = None;
        let mut order = idx.to_vec();
        for f in 0..n_features {
            order.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]).then(a.cmp(&b)));
            let mut left = [0usize; K];
            for pos in 0..n - 1 {
                left[self.labels[order[pos]]] += 1;
                let n_left = pos + 1;
                let (v, next) = (self.rows[order[pos]][f], self.rows[order[pos + 1]][f]);
                if v == next || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let mut right = *counts;
                for (r, l) in right.iter_mut().zip(&left) {
                    *r -= l;
                }
                let impurity = (n_left as f64 * gini(&left, n_left)
                    + (n - n_left) as f64 * gini(&right, n - n_left))
                    / n as f64;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = v + (next - v) / 2.0;
                    // midpoint of adjacent floats can round onto `next`
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = self.counts(&idx);
        let n = idx.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let split = if pure || depth >= self.params.max_depth || n < 2 * self.params.min_samples_leaf {
            None
        } else {
            self.best_split(&idx, &counts)
        };
        let Some(split) = split else {
            self.nodes.push(Self::leaf(&counts, n));
            return id;
        };
        self.nodes.push(Node::Leaf {
            distribution: [0.0; K],
        });
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.rows[i][split.feature] <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Trains a tree on a labelled feature matrix.
pub fn train_tree(data: &FeatureMatrix, params: Hyperparams) -> Result<TreeModel> {
    params.validate()?;
    let labels = data
        .labels
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("training data has no labels".into()))?;
    if data.rows.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if let Some(r) = data.rows.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidParameter(format!("row {r} has non-finite features")));
    }
    let labels: Vec<usize> = labels.iter().map(|l| l.index()).collect();
    let mut b = Builder {
        rows: &data.rows,
        labels: &labels,
        params,
        nodes: Vec::new(),
    };
    b.grow((0..data.rows.len()).collect(), 0);
    Ok(TreeModel {
        version: TREE_FORMAT_VERSION,
        criterion: "gini".into(),
        hyperparams: params,
        n_features: data.n_features(),
        schema_hash: data.schema.hash(),
        nodes: b.nodes,
    })
}

impl TreeModel {
    /// Leaf distribution reached by `x`.
    pub fn leaf_distribution(&self, x: &[f64]) -> Result<&[f64; K]> {
        if x.len() != self.n_features {
            return Err(Error::FeatureLength {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { distribution } => return Ok(distribution),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Most probable activity; ties go to the lowest label index.
    pub fn predict(&self, x: &[f64]) -> Result<(PhysicalActivity, [f64; K])> {
        let dist = *self.leaf_distribution(x)?;
        let mut best = 0;
        for (i, &p) in dist.iter().enumerate() {
            if p > dist[best] {
                best = i;
            }
        }
        Ok((PhysicalActivity::ALL[best], dist))
    }

    pub fn predict_matrix(&self, m: &FeatureMatrix) -> Result<Vec<PhysicalActivity>> {
        if m.n_features() != self.n_features {
            return Err(Error::FeatureLength {
                expected: self.n_features,
                got: m.n_features(),
            });
        }
        m.rows.iter().map(|r| Ok(self.predict(r)?.0)).collect()
    }

    /// Length of the longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TreeModel = serde_json::from_str(text)?;
        if model.version != TREE_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "tree model version {} unsupported",
                model.version
            )));
        }
        let n = model.nodes.len();
        if n == 0 {
            return Err(Error::Format("tree model has no nodes".into()));
        }
        for node in &model.nodes {
            if let Node::Split { left, right, feature, .. } = node {
                if *left >= n || *right >= n || *feature >= model.n_features {
                    return Err(Error::Format("tree node index out of range".into()));
                }
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TreeModel::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::json(path, j),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{FeatureMatrix, Schema};
    use PhysicalActivity::*;

    fn matrix(rows: Vec<Vec<f64>>, labels: Vec<PhysicalActivity>) -> FeatureMatrix {
        let schema = Schema(
            (0..rows[0].len())
                .map(|i| crate::signal::FeatureDescriptor {
                    feature: "f".into(),
                    source: i.to_string(),
                })
                .collect(),
        );
        FeatureMatrix::new(schema, rows, Some(labels)).unwrap()
    }

    fn accuracy(model: &TreeModel, m: &FeatureMatrix) -> f64 {
        let pred = model.predict_matrix(m).unwrap();
        let labels = m.labels.as_ref().unwrap();
        pred.iter().zip(labels).filter(|(a, b)| a == b).count() as f64 / labels.len() as f64
    }

    const LOOSE: Hyperparams = Hyperparams {
        max_depth: 12,
        min_samples_leaf: 1,
    };

    #[test]
    fn separable_pair() {
        let m = matrix(vec![vec![0.0, 5.0], vec![1.0, 5.0]], vec![Sit, Run]);
        let t = train_tree(&m, LOOSE).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(accuracy(&t, &m), 1.0);
        assert_eq!(t.predict(&[0.0, 5.0]).unwrap().0, Sit);
        assert_eq!(t.predict(&[1.0, 5.0]).unwrap().0, Run);
        match &t.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 0.5);
            }
            _ => panic!("expected split"),
        }
    }

    #[test]
    fn single_class_is_single_leaf() {
        let m = matrix(vec![vec![0.0], vec![3.0], vec![7.0]], vec![Walk; 3]);
        let t = train_tree(&m, LOOSE).unwrap();
        assert_eq!(t.nodes.len(), 1);
        let (a, d) = t.predict(&[100.0]).unwrap();
        assert_eq!(a, Walk);
        assert_eq!(d[Walk.index()], 1.0);
    }

    #[test]
    fn empty_or_unlabelled_rejected() {
        let m = FeatureMatrix::new(Schema::default(), vec![], Some(vec![])).unwrap();
        assert!(matches!(train_tree(&m, LOOSE), Err(Error::EmptyTrainingSet)));
        let mut m = matrix(vec![vec![1.0]], vec![Sit]);
        m.labels = None;
        assert!(train_tree(&m, LOOSE).is_err());
    }

    /// Enumerates every axis-aligned depth-2 tree on the XOR points and
    /// returns the best achievable training accuracy.
    fn best_depth2_accuracy(points: &[[f64; 2]], labels: &[usize]) -> f64 {
        let thresholds = [-1.0, 0.5, 2.0];
        let mut best = 0.0f64;
        for f0 in 0..2 {
            for &t0 in &thresholds {
                for f1 in 0..2 {
                    for &t1 in &thresholds {
                        for f2 in 0..2 {
                            for &t2 in &thresholds {
                                for leaves in 0..16u32 {
                                    let correct = points
                                        .iter()
                                        .zip(labels)
                                        .filter(|(p, &l)| {
                                            let slot = if p[f0] <= t0 {
                                                usize::from(p[f1] > t1)
                                            } else {
                                                2 + usize::from(p[f2] > t2)
                                            };
                                            (leaves >> slot) & 1 == l as u32
                                        })
                                        .count();
                                    best = best.max(correct as f64 / points.len() as f64);
                                }
                            }
                        }
                    }
                }
            }
        }
        best
    }

    #[test]
    fn xor_depth_two() {
        let pts = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let lab = [0usize, 1, 1, 0];
        assert_eq!(best_depth2_accuracy(&pts, &lab), 1.0);
        let m = matrix(
            pts.iter().map(|p| p.to_vec()).collect(),
            lab.iter().map(|&l| if l == 0 { Sit } else { Stand }).collect(),
        );
        let t = train_tree(
            &m,
            Hyperparams {
                max_depth: 2,
                min_samples_leaf: 1,
            },
        )
        .unwrap();
        assert!(t.depth() <= 2);
        assert_eq!(accuracy(&t, &m), 1.0);
    }

    #[test]
    fn tie_break_prefers_lowest_label() {
        let t = TreeModel {
            version: TREE_FORMAT_VERSION,
            criterion: "gini".into(),
            hyperparams: LOOSE,
            n_features: 1,
            schema_hash: String::new(),
            nodes: vec![Node::Leaf {
                distribution: [0.0, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, 0.0],
            }],
        };
        assert_eq!(t.predict(&[0.0]).unwrap().0, Sit);
        assert!(matches!(t.predict(&[0.0, 1.0]), Err(Error::FeatureLength { .. })));
    }

    #[test]
    fn min_samples_leaf_respected() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels = (0..20).map(|i| if i % 2 == 0 { Sit } else { Stand }).collect();
        let m = matrix(rows, labels);
        let t = train_tree(
            &m,
            Hyperparams {
                max_depth: 10,
                min_samples_leaf: 5,
            },
        )
        .unwrap();
        fn leaf_sizes(t: &TreeModel, m: &FeatureMatrix) -> Vec<usize> {
            let mut sizes = std::collections::HashMap::new();
            for r in &m.rows {
                let d = t.leaf_distribution(r).unwrap() as *const _ as usize;
                *sizes.entry(d).or_insert(0) += 1;
            }
            sizes.into_values().collect()
        }
        assert!(leaf_sizes(&t, &m).iter().all(|&s| s >= 5));
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let m = matrix(vec![vec![0.0], vec![1.0]], vec![Lie, Walk]);
        let t = train_tree(&m, LOOSE).unwrap();
        let back = TreeModel::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        let broken = t.to_json().unwrap().replace("\"version\": 1", "\"version\": 9");
        assert!(TreeModel::from_json(&broken).is_err());
    }
}
