use super::split::{best_split_with, ImpurityObjective, SplitObjective};
use super::{Accum, Criterion, GrowConfig, NodeId, NodeStats, Task, Tree, TreeNode};
use crate::error::{Error, Result};
use crate::heuristics::CausalObjective;
use crate::tabular::{Dataset, OutcomeKind};

/// Grows a CART tree with the Gini (classification) or variance (regression)
/// criterion until no admissible split improves impurity.
pub fn grow_tree(train: &Dataset, task: Task, config: &GrowConfig) -> Result<Tree> {
    let criterion = match task {
        Task::Classification => Criterion::Gini,
        Task::Regression => Criterion::Mse,
    };
    grow_by_criterion(train, criterion, config)
}

/// Grows a tree with any supported criterion.
pub fn grow_by_criterion(train: &Dataset, criterion: Criterion, config: &GrowConfig) -> Result<Tree> {
    if criterion == Criterion::Gini && train.outcome_kind() != OutcomeKind::Binary {
        return Err(Error::InvalidParameter("gini criterion needs a binary outcome".into()));
    }
    let task = criterion.task(train.outcome_kind());
    match criterion {
        Criterion::Gini | Criterion::Mse => grow_with(train, config, &ImpurityObjective { task }, criterion),
        Criterion::MaxChild | Criterion::AbsDiff => {
            let objective = CausalObjective::new(criterion, config.min_arm_support);
            grow_with(train, config, &objective, criterion)
        }
    }
}

pub(crate) fn grow_with<O: SplitObjective + ?Sized>(
    train: &Dataset,
    config: &GrowConfig,
    objective: &O,
    criterion: Criterion,
) -> Result<Tree> {
    if train.n_rows() == 0 {
        return Err(Error::InvalidDataset("cannot grow a tree on an empty training set".into()));
    }
    let task = criterion.task(train.outcome_kind());
    let mut builder = Builder {
        ds: train,
        config,
        objective,
        task,
        nodes: Vec::new(),
    };
    let all: Vec<usize> = (0..train.n_rows()).collect();
    builder.build(all, 0);
    Ok(Tree {
        nodes: builder.nodes,
        task,
        criterion,
        config: *config,
        feature_names: train.feature_names().to_vec(),
    })
}

struct Builder<'a, O: ?Sized> {
    ds: &'a Dataset,
    config: &'a GrowConfig,
    objective: &'a O,
    task: Task,
    nodes: Vec<TreeNode>,
}

impl<O: SplitObjective + ?Sized> Builder<'_, O> {
    fn build(&mut self, positions: Vec<usize>, depth: usize) -> NodeId {
        let id = NodeId(self.nodes.len());
        let accum = Accum::from_positions(self.ds, &positions);
        let stats = accum.stats(self.task);
        let risk = leaf_risk(self.ds, &positions, &stats);
        let split = if depth < self.config.max_depth {
            best_split_with(self.ds, &positions, self.objective, self.config)
        } else {
            None
        };
        self.nodes.push(TreeNode {
            rows: positions.iter().map(|&p| self.ds.row_ids()[p]).collect(),
            stats,
            risk,
            depth,
            split: None,
            children: None,
        });
        if let Some((spec, _)) = split {
            let (left, right): (Vec<usize>, Vec<usize>) = positions
                .into_iter()
                .partition(|&p| self.ds.design_value(p, spec.column) <= spec.threshold);
            let l = self.build(left, depth + 1);
            let r = self.build(right, depth + 1);
            let node = &mut self.nodes[id.0];
            node.split = Some(spec);
            node.children = Some((l, r));
        }
        id
    }
}

/// Misclassified rows or sum of squared deviations from the node mean.
fn leaf_risk(ds: &Dataset, positions: &[usize], stats: &NodeStats) -> f64 {
    match stats {
        NodeStats::Classification { counts } => (counts[0].min(counts[1])) as f64,
        NodeStats::Regression { count, sum, .. } => {
            let mean = sum / *count as f64;
            positions.iter().map(|&p| (ds.outcome()[p] - mean).powi(2)).sum()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use rand::Rng;

    fn binary(columns: Vec<Vec<f64>>, t: Vec<u8>, y: Vec<f64>) -> Dataset {
        let names = (1..=columns.len()).map(|j| format!("x{j}")).collect();
        Dataset::new(names, columns, t, y, OutcomeKind::Binary, None, None).unwrap()
    }

    #[test]
    fn constant_outcome_gives_single_leaf() {
        let n = 100;
        let ds = binary(vec![(0..n).map(f64::from).collect()], vec![0; n as usize], vec![1.0; n as usize]);
        let tree = grow_tree(&ds, Task::Classification, &GrowConfig::default()).unwrap();
        assert_eq!(tree.n_nodes(), 1);
    }

    #[test]
    fn learns_xor() {
        let mut rng = rng_from_seed(11);
        let n = 2000;
        let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| f64::from(u8::from((*a > 0.0) ^ (*b > 0.0)))).collect();
        let t = (0..n).map(|i| (i % 2) as u8).collect();
        let ds = binary(vec![x1, x2], t, y.clone());
        let tree = grow_tree(&ds, Task::Classification, &GrowConfig::default()).unwrap();
        assert!(tree.depth() >= 2);
        let correct = (0..n)
            .filter(|&p| tree.node(tree.leaf_of(&ds, p)).stats.prediction() == y[p])
            .count();
        assert!(correct as f64 / n as f64 > 0.9);
    }

    #[test]
    fn structure_is_consistent() {
        let mut rng = rng_from_seed(5);
        let n = 400;
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let t: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<bool>())).collect();
        let y: Vec<f64> = x
            .iter()
            .zip(&t)
            .map(|(&x, &t)| f64::from(u8::from(rng.random::<f64>() < 0.2 + 0.6 * f64::from(u8::from(x > 0.5 && t == 1)))))
            .collect();
        let ds = binary(vec![x], t, y);
        let cfg = GrowConfig::default();
        let tree = grow_tree(&ds, Task::Classification, &cfg).unwrap();
        for (_, node) in tree.nodes() {
            assert_eq!(node.split.is_some(), node.children.is_some());
            assert!(node.depth <= cfg.max_depth);
            assert!(node.rows.len() >= cfg.min_leaf);
            if let Some((l, r)) = node.children {
                assert!(node.rows.len() >= cfg.min_split);
                let mut kids: Vec<usize> = tree.node(l).rows.iter().chain(&tree.node(r).rows).copied().collect();
                let mut mine = node.rows.clone();
                kids.sort_unstable();
                mine.sort_unstable();
                assert_eq!(kids, mine);
            }
        }
        assert_eq!(tree, grow_tree(&ds, Task::Classification, &cfg).unwrap());
    }

    #[test]
    fn gini_rejects_real_outcome() {
        let ds = Dataset::new(
            vec!["x1".into()],
            vec![vec![0.0, 1.0]],
            vec![0, 1],
            vec![0.5, 1.5],
            OutcomeKind::Real,
            None,
            None,
        )
        .unwrap();
        assert!(grow_by_criterion(&ds, Criterion::Gini, &GrowConfig::default()).is_err());
        let empty = ds.subset(&[]);
        assert!(grow_tree(&empty, Task::Regression, &GrowConfig::default()).is_err());
    }
}
