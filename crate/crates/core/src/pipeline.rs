//! End-to-end subgroup search on one dataset.
//!
//! The rows are split into a training half and an estimation half. A tree is
//! grown and cross-validation pruned on the training half only; its leaves
//! become candidate rules, whose effects are estimated on the estimation half,
//! and the rule with the largest estimate is reported.

use serde::{Deserialize, Serialize};

use crate::cart::{cv_select_alpha, grow_by_criterion, prune_at, Criterion, GrowConfig, PruneRule, Tree};
use crate::error::{Error, Result};
use crate::metrics::ground_truth_subgroup_ate;
use crate::seed::derive_seed;
use crate::subgroup::{estimate_effect, extract_subgroups, select_max_effect, EffectEstimate, Rule};
use crate::tabular::{honest_split, Dataset, HonestSplitConfig, SplitAssignment};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// `None` picks Gini for binary outcomes and MSE for real ones.
    pub criterion: Option<Criterion>,
    pub honest: HonestSplitConfig,
    pub folds: usize,
    /// Per-arm floor for effect estimates; also passed to the effect-based
    /// split criteria.
    pub min_arm_support: usize,
    pub grow: GrowConfig,
    pub prune_rule: PruneRule,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            criterion: None,
            honest: HonestSplitConfig::default(),
            folds: 10,
            min_arm_support: 5,
            grow: GrowConfig::default(),
            prune_rule: PruneRule::Min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSummary {
    pub grown_leaves: usize,
    pub grown_depth: usize,
    pub pruned_leaves: usize,
    pub pruned_depth: usize,
    pub alpha: f64,
    pub path_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub rule: Rule,
    pub description: String,
    /// `None` when an arm lacks support on the estimation rows.
    pub estimate: Option<EffectEstimate>,
}

/// Serializable record of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub criterion: Criterion,
    pub rule: Rule,
    pub description: String,
    pub estimate: EffectEstimate,
    /// Mean individual effect over the selected rule, when the data carry
    /// potential outcomes.
    pub ground_truth_ate: Option<f64>,
    pub n_train: usize,
    pub n_estimate: usize,
    pub tree: TreeSummary,
    pub candidates: Vec<CandidateReport>,
    pub config: FitConfig,
    pub seed: u64,
}

/// A fit with the pieces the report summarizes.
#[derive(Debug, Clone)]
pub struct Fit {
    pub report: FitReport,
    pub tree: Tree,
    pub split: SplitAssignment,
    pub estimation: Dataset,
}

/// Runs split, grow, prune, extract, estimate and select on `ds`.
pub fn fit(ds: &Dataset, config: &FitConfig, seed: u64) -> Result<Fit> {
    let criterion = config.criterion.unwrap_or_else(|| Criterion::default_for(ds.outcome_kind()));
    let grow = GrowConfig {
        min_arm_support: config.min_arm_support,
        ..config.grow
    };
    let split = honest_split(ds, config.honest, derive_seed(seed, "honest-split", 0))?;
    if !split.train_rows.is_disjoint(&split.estimate_rows) {
        return Err(Error::InvalidDataset("training and estimation rows overlap".into()));
    }
    let train = ds.subset_by_ids(&split.train_rows);
    let estimation = ds.subset_by_ids(&split.estimate_rows);

    let grown = grow_by_criterion(&train, criterion, &grow)?;
    let selection = cv_select_alpha(&grown, &train, config.folds, derive_seed(seed, "cv-folds", 0), config.prune_rule)?;
    let tree = prune_at(&grown, selection.alpha)?;

    let names = ds.feature_names();
    let candidates: Vec<CandidateReport> = extract_subgroups(&tree)
        .into_iter()
        .map(|c| CandidateReport {
            description: c.rule.describe(names),
            estimate: estimate_effect(&c.rule, &estimation, config.min_arm_support),
            rule: c.rule,
        })
        .collect();
    let admissible: Vec<(Rule, EffectEstimate)> = candidates
        .iter()
        .filter_map(|c| c.estimate.map(|e| (c.rule.clone(), e)))
        .collect();
    let (rule, estimate) = select_max_effect(&admissible)?;
    let ground_truth_ate = match ds.potential_outcomes() {
        Some(_) => Some(ground_truth_subgroup_ate(&rule, ds)?),
        None => None,
    };

    let report = FitReport {
        schema_version: REPORT_SCHEMA_VERSION,
        criterion,
        description: rule.describe(names),
        rule,
        estimate,
        ground_truth_ate,
        n_train: train.n_rows(),
        n_estimate: estimation.n_rows(),
        tree: TreeSummary {
            grown_leaves: grown.n_leaves(),
            grown_depth: grown.depth(),
            pruned_leaves: tree.n_leaves(),
            pruned_depth: tree.depth(),
            alpha: selection.alpha,
            path_length: selection.path.len(),
        },
        candidates,
        config: FitConfig {
            criterion: Some(criterion),
            grow,
            ..*config
        },
        seed,
    };
    Ok(Fit {
        report,
        tree,
        split,
        estimation,
    })
}
