//! Effect-driven split criteria, kept for ablation against the impurity
//! criteria.
//!
//! Each child of a candidate split is treated as a subgroup and its effect is
//! estimated from the training rows it holds. `max-child` scores a split by
//! the larger child effect, `abs-diff` by the absolute difference of the two.
//! A candidate whose children lack `min_arm_support` rows in either arm
//! cannot be scored. The treatment column is never a split candidate.

use crate::cart::{grow_with, Accum, Criterion, GrowConfig, SplitObjective, Tree};
use crate::error::{Error, Result};
use crate::tabular::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CausalCriterion {
    MaxChild,
    AbsDiff,
}

impl From<CausalCriterion> for Criterion {
    fn from(c: CausalCriterion) -> Self {
        match c {
            CausalCriterion::MaxChild => Criterion::MaxChild,
            CausalCriterion::AbsDiff => Criterion::AbsDiff,
        }
    }
}

/// Criterion value for the split of `left_rows` / `right_rows` (positions in
/// `data`), or `None` if either child's effect is undefined.
pub fn causal_split_score(
    left_rows: &[usize],
    right_rows: &[usize],
    data: &Dataset,
    criterion: CausalCriterion,
    min_arm_support: usize,
) -> Option<f64> {
    let left = Accum::from_positions(data, left_rows);
    let right = Accum::from_positions(data, right_rows);
    score(criterion, &left, &right, min_arm_support)
}

fn score(criterion: CausalCriterion, left: &Accum, right: &Accum, min_arm_support: usize) -> Option<f64> {
    let l = left.effect(min_arm_support)?;
    let r = right.effect(min_arm_support)?;
    Some(match criterion {
        CausalCriterion::MaxChild => l.max(r),
        CausalCriterion::AbsDiff => (l - r).abs(),
    })
}

pub(crate) struct CausalObjective {
    criterion: CausalCriterion,
    min_arm_support: usize,
}

impl CausalObjective {
    pub(crate) fn new(criterion: Criterion, min_arm_support: usize) -> Self {
        let criterion = match criterion {
            Criterion::MaxChild => CausalCriterion::MaxChild,
            Criterion::AbsDiff => CausalCriterion::AbsDiff,
            other => panic!("{other} is not an effect-based criterion"),
        };
        Self {
            criterion,
            min_arm_support,
        }
    }
}

impl SplitObjective for CausalObjective {
    fn uses_treatment(&self) -> bool {
        false
    }

    /// `max-child` improves on the parent's own effect; `abs-diff` on zero.
    fn gain(&self, parent: &Accum, left: &Accum, right: &Accum) -> Option<f64> {
        let s = score(self.criterion, left, right, self.min_arm_support)?;
        let baseline = match self.criterion {
            CausalCriterion::MaxChild => parent.effect(self.min_arm_support)?,
            CausalCriterion::AbsDiff => 0.0,
        };
        let gain = s - baseline;
        (gain > 1e-12).then_some(gain)
    }
}

/// Grows a tree with the same search, stopping rules and tie-breaks as
/// [`crate::cart::grow_tree`], but scoring splits by `criterion`.
pub fn grow_causal_tree(train: &Dataset, config: &GrowConfig, criterion: CausalCriterion) -> Result<Tree> {
    if train.n_rows() == 0 {
        return Err(Error::InvalidDataset("cannot grow a tree on an empty training set".into()));
    }
    let criterion = Criterion::from(criterion);
    grow_with(train, config, &CausalObjective::new(criterion, config.min_arm_support), criterion)
}
