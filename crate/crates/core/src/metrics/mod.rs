//! Recovery measures for learned subgroups and the significance tests used to
//! compare methods.

mod significance;

use std::collections::BTreeSet;

pub use significance::{holm_adjust, wilcoxon_rank_sum, Alternative, RankSumTest, TestMethod, EXACT_MAX_SMALL_SAMPLE};

use crate::error::{Error, Result};
use crate::subgroup::Rule;
use crate::tabular::Dataset;

/// `|a ∩ b| / |a ∪ b|`, with two empty sets counting as identical.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn effect_gap(learned: f64, ground_truth: f64) -> f64 {
    (learned - ground_truth).abs()
}

/// Mean individual effect `y1 - y0` over the rows matched by `rule`.
pub fn ground_truth_subgroup_ate(rule: &Rule, ds: &Dataset) -> Result<f64> {
    let ite = ds.individual_effects().ok_or(Error::MissingPotentialOutcomes)?;
    let rows = rule.matching_positions(ds);
    if rows.is_empty() {
        return Err(Error::EmptySubgroup);
    }
    Ok(rows.iter().map(|&p| ite[p]).sum::<f64>() / rows.len() as f64)
}
