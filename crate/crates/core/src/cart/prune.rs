//! Weakest-link cost-complexity pruning and cross-validated selection of the
//! complexity parameter.
//!
//! Risk is the resubstitution loss divided by the number of training rows,
//! so `alpha` is measured in loss per training row per leaf.

use serde::{Deserialize, Serialize};

use super::{grow_by_criterion, NodeId, Tree, TreeNode};
use crate::error::{Error, Result};
use crate::tabular::{kfold_indices, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneStep {
    pub alpha: f64,
    pub n_leaves: usize,
}

/// Nested subtrees of a grown tree, indexed by increasing `alpha`.
///
/// Entry `i` is the subtree `prune_at(tree, steps[i].alpha)`, optimal for
/// every `alpha` in `[steps[i].alpha, steps[i + 1].alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunePath {
    pub steps: Vec<PruneStep>,
}

impl PrunePath {
    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.alpha)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Equality slack when comparing costs, scaled to the root risk.
fn tolerance(tree: &Tree) -> f64 {
    1e-12 * (1.0 + tree.nodes[0].risk / tree.n_train() as f64)
}

/// For each node, whether it becomes a leaf in the optimal subtree at `alpha`.
/// Nodes below a collapsed node are left `false`; they are unreachable.
pub(crate) fn collapse_mask(tree: &Tree, alpha: f64) -> Vec<bool> {
    let n = tree.n_train() as f64;
    let tol = tolerance(tree);
    let mut cost = vec![0.0; tree.nodes.len()];
    let mut collapse = vec![false; tree.nodes.len()];
    // Preorder storage: children always follow their parent.
    for i in (0..tree.nodes.len()).rev() {
        let node = &tree.nodes[i];
        let as_leaf = node.risk / n + alpha;
        match node.children {
            None => cost[i] = as_leaf,
            Some((l, r)) => {
                let below = cost[l.0] + cost[r.0];
                if as_leaf <= below + tol {
                    collapse[i] = true;
                    cost[i] = as_leaf;
                } else {
                    cost[i] = below;
                }
            }
        }
    }
    collapse
}

/// The smallest subtree minimizing `R(T) + alpha * |leaves(T)|`.
pub fn prune_at(tree: &Tree, alpha: f64) -> Result<Tree> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidParameter(format!("pruning alpha must be >= 0, got {alpha}")));
    }
    let collapse = collapse_mask(tree, alpha);
    let mut nodes = Vec::with_capacity(tree.nodes.len());
    copy_subtree(tree, NodeId(0), &collapse, &mut nodes);
    Ok(Tree {
        nodes,
        ..tree.clone_header()
    })
}

fn copy_subtree(tree: &Tree, id: NodeId, collapse: &[bool], out: &mut Vec<TreeNode>) -> NodeId {
    let src = &tree.nodes[id.0];
    let new_id = NodeId(out.len());
    out.push(TreeNode {
        split: None,
        children: None,
        ..src.clone()
    });
    if let (Some(split), Some((l, r)), false) = (src.split, src.children, collapse[id.0]) {
        let nl = copy_subtree(tree, l, collapse, out);
        let nr = copy_subtree(tree, r, collapse, out);
        out[new_id.0].split = Some(split);
        out[new_id.0].children = Some((nl, nr));
    }
    new_id
}

impl Tree {
    fn clone_header(&self) -> Tree {
        Tree {
            nodes: Vec::new(),
            task: self.task,
            criterion: self.criterion,
            config: self.config,
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Weakest-link pruning sequence, starting from the optimal subtree at
/// `alpha = 0` and ending at the root-only tree.
pub fn cost_complexity_path(tree: &Tree) -> PrunePath {
    let n = tree.n_train() as f64;
    let mut current = prune_at(tree, 0.0).expect("alpha 0 is valid");
    let mut steps = vec![PruneStep {
        alpha: 0.0,
        n_leaves: current.n_leaves(),
    }];
    while current.n_leaves() > 1 {
        let (leaf_risk, leaves) = subtree_totals(&current);
        let alpha = current
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, node)| !node.is_leaf())
            .map(|(i, node)| (node.risk / n - leaf_risk[i] / n) / (leaves[i] - 1) as f64)
            .fold(f64::INFINITY, f64::min)
            .max(0.0);
        let mut alpha = alpha;
        let mut next = prune_at(tree, alpha).expect("alpha is non-negative");
        // Rounding can leave the weakest link a hair above its own g(t).
        while next.n_leaves() >= current.n_leaves() {
            alpha = alpha * (1.0 + 1e-9) + f64::MIN_POSITIVE;
            next = prune_at(tree, alpha).expect("alpha is non-negative");
        }
        current = next;
        steps.push(PruneStep {
            alpha,
            n_leaves: current.n_leaves(),
        });
    }
    PrunePath { steps }
}

/// Summed leaf risk and leaf count of the subtree under every node.
fn subtree_totals(tree: &Tree) -> (Vec<f64>, Vec<usize>) {
    let mut risk = vec![0.0; tree.nodes.len()];
    let mut leaves = vec![0; tree.nodes.len()];
    for i in (0..tree.nodes.len()).rev() {
        match tree.nodes[i].children {
            None => {
                risk[i] = tree.nodes[i].risk;
                leaves[i] = 1;
            }
            Some((l, r)) => {
                risk[i] = risk[l.0] + risk[r.0];
                leaves[i] = leaves[l.0] + leaves[r.0];
            }
        }
    }
    (risk, leaves)
}

/// How cross-validated risks pick a path entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PruneRule {
    /// Lowest mean risk.
    #[default]
    Min,
    /// Largest alpha whose mean risk is within one standard error of the lowest.
    OneSe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSelection {
    /// Selected entry of the master path.
    pub alpha: f64,
    pub index: usize,
    pub path: PrunePath,
    /// Alpha used to prune the fold trees for each path entry.
    pub eval_alphas: Vec<f64>,
    pub cv_risk: Vec<f64>,
    pub cv_se: Vec<f64>,
}

/// Chooses the pruning level of `tree` by k-fold cross-validation on `train`,
/// the data it was grown on.
///
/// Each path entry `i` is evaluated at the geometric midpoint
/// `sqrt(alpha_i * alpha_{i+1})` (infinity for the last entry). Fold trees are
/// regrown with the tree's own criterion and configuration.
pub fn cv_select_alpha(tree: &Tree, train: &Dataset, k: usize, seed: u64, rule: PruneRule) -> Result<CvSelection> {
    if train.n_rows() != tree.n_train() {
        return Err(Error::InvalidParameter(
            "cross-validation data must be the tree's training set".into(),
        ));
    }
    let path = cost_complexity_path(tree);
    let positions: Vec<usize> = (0..train.n_rows()).collect();
    let alphas: Vec<f64> = path.alphas().collect();
    let eval_alphas: Vec<f64> = (0..alphas.len())
        .map(|i| match alphas.get(i + 1) {
            Some(next) => (alphas[i] * next).sqrt(),
            None => f64::INFINITY,
        })
        .collect();
    if alphas.len() == 1 {
        return Ok(CvSelection {
            alpha: alphas[0],
            index: 0,
            path,
            eval_alphas,
            cv_risk: vec![f64::NAN],
            cv_se: vec![f64::NAN],
        });
    }

    let folds = kfold_indices(&positions, k, seed)?;
    let mut held_in = vec![true; train.n_rows()];
    let mut fold_risks = vec![Vec::with_capacity(k); alphas.len()];
    for fold in &folds {
        for &p in fold {
            held_in[p] = false;
        }
        let in_fold: Vec<usize> = positions.iter().copied().filter(|&p| held_in[p]).collect();
        let fold_tree = grow_by_criterion(&train.subset(&in_fold), tree.criterion, &tree.config)?;
        for (risks, &beta) in fold_risks.iter_mut().zip(&eval_alphas) {
            let collapse = collapse_mask(&fold_tree, beta);
            let loss: f64 = fold
                .iter()
                .map(|&p| {
                    let leaf = fold_tree.route_until(|col| train.design_value(p, col), |id| collapse[id.0]);
                    fold_tree.node(leaf).stats.loss(train.outcome()[p])
                })
                .sum();
            risks.push(loss / fold.len() as f64);
        }
        for &p in fold {
            held_in[p] = true;
        }
    }

    let kf = k as f64;
    let cv_risk: Vec<f64> = fold_risks.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let cv_se: Vec<f64> = fold_risks
        .iter()
        .zip(&cv_risk)
        .map(|(r, &m)| {
            let var = r.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (kf - 1.0);
            (var / kf).sqrt()
        })
        .collect();
    let lowest = cv_risk.iter().copied().fold(f64::INFINITY, f64::min);
    let tie = 1e-12 * (1.0 + lowest.abs());
    let min_index = (0..cv_risk.len())
        .rev()
        .find(|&i| cv_risk[i] <= lowest + tie)
        .expect("risk vector is non-empty");
    let index = match rule {
        PruneRule::Min => min_index,
        PruneRule::OneSe => {
            let bound = cv_risk[min_index] + cv_se[min_index] + tie;
            (0..cv_risk.len()).rev().find(|&i| cv_risk[i] <= bound).unwrap_or(min_index)
        }
    };
    Ok(CvSelection {
        alpha: alphas[index],
        index,
        path,
        eval_alphas,
        cv_risk,
        cv_se,
    })
}
