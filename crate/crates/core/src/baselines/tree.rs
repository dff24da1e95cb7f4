use serde::{Deserialize, Serialize};

use super::{check_cols, normalized_weights};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { max_depth: 5 }
    }
}

/// Nodes live in an arena; children are indices into it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        /// Weighted favorable fraction.
        prob: f64,
        class: u8,
        weight: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub features: usize,
    pub nodes: Vec<Node>,
}

fn entropy(w0: f64, w1: f64) -> f64 {
    let t = w0 + w1;
    [w0, w1]
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / t;
            -p * p.log2()
        })
        .sum()
}

struct Builder<'a> {
    m: &'a Matrix,
    y: &'a [u8],
    w: &'a [f64],
    max_depth: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn class_weights(&self, rows: &[usize]) -> [f64; 2] {
        let mut cw = [0.0; 2];
        for &r in rows {
            cw[self.y[r] as usize] += self.w[r];
        }
        cw
    }

    /// Best `(gain, feature, threshold)`; zero-gain splits qualify. Strictly
    /// larger gains replace, so ties keep the lowest feature and threshold.
    fn best_split(&self, rows: &[usize], cw: [f64; 2]) -> Option<(f64, usize, f64)> {
        let total = cw[0] + cw[1];
        let parent = entropy(cw[0], cw[1]);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = rows.to_vec();
        for f in 0..self.m.cols() {
            order.sort_by(|&a, &b| self.m.get(a, f).total_cmp(&self.m.get(b, f)).then(a.cmp(&b)));
            let mut left = [0.0; 2];
            for k in 0..order.len() - 1 {
                let r = order[k];
                left[self.y[r] as usize] += self.w[r];
                let (x, next) = (self.m.get(r, f), self.m.get(order[k + 1], f));
                if x == next {
                    continue;
                }
                let right = [cw[0] - left[0], cw[1] - left[1]];
                let wl = left[0] + left[1];
                let child = (wl * entropy(left[0], left[1]) + (total - wl) * entropy(right[0], right[1])) / total;
                let gain = (parent - child).max(0.0);
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, f, x + 0.5 * (next - x)));
                }
            }
        }
        best
    }

    fn build(&mut self, rows: &[usize], depth: usize) -> usize {
        let cw = self.class_weights(rows);
        let total = cw[0] + cw[1];
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            prob: cw[1] / total,
            class: u8::from(cw[1] > cw[0]),
            weight: total,
        });
        if depth >= self.max_depth || cw[0] == 0.0 || cw[1] == 0.0 {
            return id;
        }
        let Some((gain, feature, threshold)) = self.best_split(rows, cw) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.m.get(i, feature) <= threshold);
        let left = self.build(&l, depth + 1);
        let right = self.build(&r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            gain,
            left,
            right,
        };
        id
    }
}

/// Greedy entropy tree. Leaves predict the weighted majority, ties to 0.
pub fn train_decision_tree(m: &Matrix, labels: &[u8], weights: Option<&[f64]>, cfg: TreeConfig) -> Result<DecisionTree> {
    if cfg.max_depth == 0 {
        return Err(Error::invalid("tree depth must be at least 1"));
    }
    let w = normalized_weights(m, labels, weights)?;
    let mut b = Builder {
        m,
        y: labels,
        w: &w,
        max_depth: cfg.max_depth,
        nodes: Vec::new(),
    };
    let rows: Vec<usize> = (0..m.rows()).collect();
    b.build(&rows, 0);
    Ok(DecisionTree {
        features: m.cols(),
        nodes: b.nodes,
    })
}

impl DecisionTree {
    fn leaf(&self, x: &[f64]) -> (f64, u8) {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { prob, class, .. } => return (prob, class),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    pub fn predict_proba(&self, m: &Matrix) -> Result<Vec<f64>> {
        check_cols(self.features, m)?;
        Ok((0..m.rows()).map(|i| self.leaf(m.row(i)).0).collect())
    }

    pub fn predict(&self, m: &Matrix) -> Result<Vec<u8>> {
        check_cols(self.features, m)?;
        Ok((0..m.rows()).map(|i| self.leaf(m.row(i)).1).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_depth_two() {
        let m = Matrix::from_vec(4, 2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        let y = [0, 1, 1, 0];
        let t = train_decision_tree(&m, &y, None, TreeConfig { max_depth: 2 }).unwrap();
        assert_eq!(t.predict(&m).unwrap(), y.to_vec());
        // Root gain is zero for both features; the lowest index wins.
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, threshold, .. } if threshold == 0.5));
    }

    #[test]
    fn pure_node_is_a_leaf() {
        let m = Matrix::from_vec(3, 1, vec![0.1, 0.5, 0.9]).unwrap();
        let t = train_decision_tree(&m, &[1, 1, 1], None, TreeConfig::default()).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn gain_tie_takes_lowest_feature() {
        // Two identical copies of a perfectly predictive column.
        let m = Matrix::from_vec(4, 2, vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let t = train_decision_tree(&m, &[0, 0, 1, 1], None, TreeConfig { max_depth: 1 }).unwrap();
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn depth_limit_and_zero_depth() {
        let m = Matrix::from_vec(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let t = train_decision_tree(&m, &[0, 1, 0, 1], None, TreeConfig { max_depth: 1 }).unwrap();
        assert_eq!(t.depth(), 1);
        assert!(train_decision_tree(&m, &[0, 1, 0, 1], None, TreeConfig { max_depth: 0 }).is_err());
    }
}
