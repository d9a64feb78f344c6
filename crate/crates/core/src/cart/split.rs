use super::{Accum, GrowConfig, SplitSpec, Task};
use crate::tabular::Dataset;

/// Scores candidate splits during growth.
pub(crate) trait SplitObjective {
    /// Whether the treatment column is offered as a split candidate.
    fn uses_treatment(&self) -> bool;

    /// Gain of splitting `parent` into `left` and `right`; `None` when the
    /// candidate cannot be scored. Only positive gains are accepted.
    fn gain(&self, parent: &Accum, left: &Accum, right: &Accum) -> Option<f64>;

    /// Whether `parent` is worth searching at all.
    fn can_improve(&self, parent: &Accum) -> bool {
        parent.n > 0
    }
}

/// Weighted impurity decrease under Gini (classification) or variance (regression).
pub(crate) struct ImpurityObjective {
    pub task: Task,
}

impl SplitObjective for ImpurityObjective {
    fn uses_treatment(&self) -> bool {
        true
    }

    fn gain(&self, parent: &Accum, left: &Accum, right: &Accum) -> Option<f64> {
        let n = parent.n as f64;
        let ip = parent.impurity(self.task);
        let decrease = ip
            - (left.n as f64 / n) * left.impurity(self.task)
            - (right.n as f64 / n) * right.impurity(self.task);
        // Relative floor absorbs rounding in the running sums.
        (decrease > 1e-10 * ip).then_some(decrease)
    }

    fn can_improve(&self, parent: &Accum) -> bool {
        parent.n > 0 && parent.impurity(self.task) > 0.0
    }
}

/// Best split of the rows at `positions` under the impurity criterion for `task`.
///
/// Candidates are midpoints between consecutive distinct values of each
/// design column; both children must keep `config.min_leaf` rows. Returns the
/// split with the largest weighted impurity decrease, preferring the lower
/// column and then the lower threshold on exact ties.
pub fn best_split(ds: &Dataset, positions: &[usize], task: Task, config: &GrowConfig) -> Option<(SplitSpec, f64)> {
    best_split_with(ds, positions, &ImpurityObjective { task }, config)
}

pub(crate) fn best_split_with<O: SplitObjective + ?Sized>(
    ds: &Dataset,
    positions: &[usize],
    objective: &O,
    config: &GrowConfig,
) -> Option<(SplitSpec, f64)> {
    if positions.len() < config.min_split.max(2) {
        return None;
    }
    let y = ds.outcome();
    let first = y[positions[0]];
    if positions.iter().all(|&p| y[p] == first) {
        return None;
    }
    let parent = Accum::from_positions(ds, positions);
    if !objective.can_improve(&parent) {
        return None;
    }
    let n_cols = ds.n_features() + usize::from(objective.uses_treatment());
    let min_leaf = config.min_leaf.max(1);
    let mut best: Option<(SplitSpec, f64)> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(positions.len());
    for column in 0..n_cols {
        sorted.clear();
        sorted.extend(positions.iter().map(|&p| (ds.design_value(p, column), p)));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = Accum::default();
        for i in 0..sorted.len() - 1 {
            let (v, p) = sorted[i];
            left.add(ds.outcome()[p], ds.treatment()[p]);
            let next = sorted[i + 1].0;
            if v == next {
                continue;
            }
            let n_left = i + 1;
            if n_left < min_leaf || sorted.len() - n_left < min_leaf {
                continue;
            }
            let right = parent.minus(&left);
            let Some(gain) = objective.gain(&parent, &left, &right) else {
                continue;
            };
            // Gains equal up to rounding count as ties and keep the earlier candidate.
            if best.as_ref().is_none_or(|(_, g)| gain > *g + 1e-12 * g.abs()) {
                let mid = v + (next - v) / 2.0;
                let threshold = if mid < next { mid } else { v };
                best = Some((SplitSpec { column, threshold }, gain));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::OutcomeKind;

    fn data(x: &[f64], y: &[f64]) -> Dataset {
        Dataset::new(
            vec!["x1".into()],
            vec![x.to_vec()],
            vec![0; x.len()],
            y.to_vec(),
            OutcomeKind::Binary,
            None,
            None,
        )
        .unwrap()
    }

    fn cfg(min_leaf: usize) -> GrowConfig {
        GrowConfig {
            min_split: 2,
            min_leaf,
            ..GrowConfig::default()
        }
    }

    #[test]
    fn finds_step_boundary() {
        let ds = data(&[0.0, 1.0, 2.0, 3.0], &[0.0, 0.0, 1.0, 1.0]);
        let (split, gain) = best_split(&ds, &[0, 1, 2, 3], Task::Classification, &cfg(1)).unwrap();
        assert_eq!(split.column, 0);
        assert_eq!(split.threshold, 1.5);
        assert!((gain - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pure_node_has_no_split() {
        let ds = data(&[0.0, 1.0, 2.0, 3.0], &[1.0; 4]);
        assert!(best_split(&ds, &[0, 1, 2, 3], Task::Classification, &cfg(1)).is_none());
    }

    #[test]
    fn infeasible_min_leaf_has_no_split() {
        let ds = data(&[0.0, 1.0, 2.0, 3.0], &[0.0, 0.0, 1.0, 1.0]);
        assert!(best_split(&ds, &[0, 1, 2, 3], Task::Classification, &cfg(3)).is_none());
    }

    #[test]
    fn constant_column_is_skipped() {
        let ds = data(&[1.0; 4], &[0.0, 1.0, 0.0, 1.0]);
        assert!(best_split(&ds, &[0, 1, 2, 3], Task::Classification, &cfg(1)).is_none());
    }
}
