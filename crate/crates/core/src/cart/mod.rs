//! Binary decision trees over the features plus the treatment indicator.
//!
//! Trees are grown greedily ([`grow_tree`]), reduced along the weakest-link
//! cost-complexity path ([`cost_complexity_path`], [`prune_at`]) and the
//! pruning level is chosen by k-fold cross-validation ([`cv_select_alpha`]).
//!
//! Design column `m` (one past the last feature) is the treatment. It is an
//! ordinary split candidate for the impurity criteria, with threshold 0.5.

mod document;
mod grow;
mod impurity;
mod prune;
mod split;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::tabular::{Dataset, OutcomeKind};

pub use document::{NodeDocument, SplitDocument, TreeDocument, TREE_FORMAT_VERSION};
pub use grow::{grow_by_criterion, grow_tree};
pub use impurity::{gini_impurity, mse_impurity};
pub use prune::{cost_complexity_path, cv_select_alpha, prune_at, CvSelection, PrunePath, PruneRule, PruneStep};
pub use split::best_split;

pub(crate) use grow::grow_with;
pub(crate) use split::SplitObjective;

/// Classification (0/1 outcome, misclassification risk) or regression (SSE risk).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

impl Task {
    pub fn for_outcome(kind: OutcomeKind) -> Self {
        match kind {
            OutcomeKind::Binary => Task::Classification,
            OutcomeKind::Real => Task::Regression,
        }
    }
}

/// Split criterion. `Gini` and `Mse` are the standard impurity criteria; the
/// other two score a split by the children's estimated treatment effects
/// (see [`crate::heuristics`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Gini,
    Mse,
    MaxChild,
    AbsDiff,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [Criterion::Gini, Criterion::Mse, Criterion::MaxChild, Criterion::AbsDiff];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Gini => "gini",
            Criterion::Mse => "mse",
            Criterion::MaxChild => "max-child",
            Criterion::AbsDiff => "abs-diff",
        }
    }

    pub fn is_causal(self) -> bool {
        matches!(self, Criterion::MaxChild | Criterion::AbsDiff)
    }

    /// The impurity criterion matching an outcome kind.
    pub fn default_for(kind: OutcomeKind) -> Self {
        match kind {
            OutcomeKind::Binary => Criterion::Gini,
            OutcomeKind::Real => Criterion::Mse,
        }
    }

    /// Task used for leaf statistics and pruning risk.
    pub fn task(self, kind: OutcomeKind) -> Task {
        match self {
            Criterion::Gini => Task::Classification,
            Criterion::Mse => Task::Regression,
            Criterion::MaxChild | Criterion::AbsDiff => Task::for_outcome(kind),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown criterion `{s}`")))
    }
}

/// Stopping rules for tree growth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowConfig {
    /// A node with fewer rows is never split.
    pub min_split: usize,
    /// Each child must keep at least this many rows.
    pub min_leaf: usize,
    /// Root has depth 0.
    pub max_depth: usize,
    /// Per-arm row floor for the effect-based criteria; ignored by Gini/MSE.
    pub min_arm_support: usize,
}

impl Default for GrowConfig {
    fn default() -> Self {
        Self {
            min_split: 20,
            min_leaf: 7,
            max_depth: 30,
            min_arm_support: 5,
        }
    }
}

/// `column <= threshold` goes left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub column: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NodeStats {
    Classification { counts: [usize; 2] },
    Regression { count: usize, sum: f64, sum_sq: f64 },
}

impl NodeStats {
    pub fn count(&self) -> usize {
        match self {
            NodeStats::Classification { counts } => counts[0] + counts[1],
            NodeStats::Regression { count, .. } => *count,
        }
    }

    /// Majority class (ties go to class 0) or mean outcome.
    pub fn prediction(&self) -> f64 {
        match self {
            NodeStats::Classification { counts } => {
                if counts[1] > counts[0] {
                    1.0
                } else {
                    0.0
                }
            }
            NodeStats::Regression { count, sum, .. } => sum / *count as f64,
        }
    }

    /// Loss of predicting [`Self::prediction`] for outcome `y`.
    pub fn loss(&self, y: f64) -> f64 {
        match self {
            NodeStats::Classification { .. } => f64::from(u8::from(self.prediction() != y)),
            NodeStats::Regression { .. } => (y - self.prediction()).powi(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    /// Training row ids that reach this node.
    pub rows: Vec<usize>,
    pub stats: NodeStats,
    /// Resubstitution loss of the node as a leaf: misclassified rows or SSE.
    pub risk: f64,
    pub depth: usize,
    pub split: Option<SplitSpec>,
    pub children: Option<(NodeId, NodeId)>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// A fitted tree. Nodes are stored in preorder; the root is `NodeId(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub(crate) nodes: Vec<TreeNode>,
    pub(crate) task: Task,
    pub(crate) criterion: Criterion,
    pub(crate) config: GrowConfig,
    pub(crate) feature_names: Vec<String>,
}

impl Tree {
    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &TreeNode)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    pub fn config(&self) -> &GrowConfig {
        &self.config
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Design-column index of the treatment indicator.
    pub fn treatment_column(&self) -> usize {
        self.feature_names.len()
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.nodes().filter(|(_, n)| n.is_leaf()).map(|(id, _)| id).collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Number of training rows the tree was grown on.
    pub fn n_train(&self) -> usize {
        self.nodes[0].stats.count()
    }

    /// Routes a row to its leaf: `value <= threshold` goes left.
    pub fn predict_leaf(&self, features: &[f64], treatment: u8) -> (NodeId, &NodeStats) {
        let id = self.route(|col| {
            if col == self.feature_names.len() {
                f64::from(treatment)
            } else {
                features[col]
            }
        });
        (id, &self.nodes[id.0].stats)
    }

    /// Leaf reached by row `pos` of `ds`.
    pub fn leaf_of(&self, ds: &Dataset, pos: usize) -> NodeId {
        self.route(|col| ds.design_value(pos, col))
    }

    fn route(&self, value: impl Fn(usize) -> f64) -> NodeId {
        self.route_until(value, |_| false)
    }

    /// Routes a row, stopping early at any node for which `stop` holds.
    pub(crate) fn route_until(&self, value: impl Fn(usize) -> f64, stop: impl Fn(NodeId) -> bool) -> NodeId {
        let mut id = NodeId(0);
        loop {
            let node = &self.nodes[id.0];
            match (node.split, node.children) {
                (Some(split), Some((left, right))) if !stop(id) => {
                    id = if value(split.column) <= split.threshold { left } else { right };
                }
                _ => return id,
            }
        }
    }
}

/// Running sufficient statistics of a set of rows: outcome moments overall and
/// within the treated arm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Accum {
    pub n: usize,
    pub sum: f64,
    pub sum_sq: f64,
    pub n_treated: usize,
    pub sum_treated: f64,
}

impl Accum {
    pub fn from_positions(ds: &Dataset, positions: &[usize]) -> Self {
        let mut a = Accum::default();
        for &p in positions {
            a.add(ds.outcome()[p], ds.treatment()[p]);
        }
        a
    }

    pub fn add(&mut self, y: f64, t: u8) {
        self.n += 1;
        self.sum += y;
        self.sum_sq += y * y;
        if t == 1 {
            self.n_treated += 1;
            self.sum_treated += y;
        }
    }

    pub fn minus(&self, other: &Accum) -> Accum {
        Accum {
            n: self.n - other.n,
            sum: self.sum - other.sum,
            sum_sq: self.sum_sq - other.sum_sq,
            n_treated: self.n_treated - other.n_treated,
            sum_treated: self.sum_treated - other.sum_treated,
        }
    }

    pub fn n_control(&self) -> usize {
        self.n - self.n_treated
    }

    /// Difference of arm means, if both arms meet the support floor.
    pub fn effect(&self, min_arm_support: usize) -> Option<f64> {
        let (nt, nc) = (self.n_treated, self.n_control());
        if nt < min_arm_support.max(1) || nc < min_arm_support.max(1) {
            return None;
        }
        Some(self.sum_treated / nt as f64 - (self.sum - self.sum_treated) / nc as f64)
    }

    pub fn impurity(&self, task: Task) -> f64 {
        match task {
            Task::Classification => {
                let ones = self.sum.round() as usize;
                gini_impurity(&[self.n - ones, ones]).unwrap_or(0.0)
            }
            Task::Regression => mse_impurity(self.n, self.sum, self.sum_sq).unwrap_or(0.0),
        }
    }

    pub fn stats(&self, task: Task) -> NodeStats {
        match task {
            Task::Classification => {
                let ones = self.sum.round() as usize;
                NodeStats::Classification {
                    counts: [self.n - ones, ones],
                }
            }
            Task::Regression => NodeStats::Regression {
                count: self.n,
                sum: self.sum,
                sum_sq: self.sum_sq,
            },
        }
    }
}
