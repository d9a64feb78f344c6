//! Subgroup rules read off tree leaves, honest effect estimates, and the
//! choice of the maximum-effect subgroup.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::cart::{NodeId, Tree};
use crate::error::{Error, Result};
use crate::tabular::Dataset;

/// `feature ∈ (lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Literal {
    pub feature: usize,
    #[serde(serialize_with = "ser_bound", deserialize_with = "de_bound")]
    pub lo: f64,
    #[serde(serialize_with = "ser_bound", deserialize_with = "de_bound")]
    pub hi: f64,
}

impl Literal {
    pub fn new(feature: usize, lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidParameter(format!("empty interval ({lo}, {hi}]")));
        }
        Ok(Self { feature, lo, hi })
    }

    /// `feature > lo`.
    pub fn above(feature: usize, lo: f64) -> Self {
        Self {
            feature,
            lo,
            hi: f64::INFINITY,
        }
    }

    /// `feature <= hi`.
    pub fn at_most(feature: usize, hi: f64) -> Self {
        Self {
            feature,
            lo: f64::NEG_INFINITY,
            hi,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lo < value && value <= self.hi
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        self.feature
            .cmp(&other.feature)
            .then(self.lo.total_cmp(&other.lo))
            .then(self.hi.total_cmp(&other.hi))
    }
}

fn ser_bound<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if *v == f64::INFINITY {
        s.serialize_str("inf")
    } else if *v == f64::NEG_INFINITY {
        s.serialize_str("-inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn de_bound<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Bound {
        Num(f64),
        Text(String),
    }
    match Bound::deserialize(d)? {
        Bound::Num(v) => Ok(v),
        Bound::Text(t) if t == "inf" => Ok(f64::INFINITY),
        Bound::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
        Bound::Text(t) => Err(de::Error::custom(format!("bad interval bound `{t}`"))),
    }
}

/// Conjunction of literals, at most one per feature, sorted by feature.
/// The empty rule is the whole feature space.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rule {
    literals: Vec<Literal>,
}

impl Rule {
    pub fn everything() -> Self {
        Self::default()
    }

    /// Canonical rule from arbitrary literals: same-feature intervals are
    /// intersected. Fails if an intersection is empty.
    pub fn from_literals(literals: impl IntoIterator<Item = Literal>) -> Result<Self> {
        let mut by_feature: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        for lit in literals {
            let e = by_feature
                .entry(lit.feature)
                .or_insert((f64::NEG_INFINITY, f64::INFINITY));
            e.0 = e.0.max(lit.lo);
            e.1 = e.1.min(lit.hi);
        }
        let literals = by_feature
            .into_iter()
            .filter(|(_, (lo, hi))| !(lo.is_infinite() && hi.is_infinite()))
            .map(|(f, (lo, hi))| Literal::new(f, lo, hi))
            .collect::<Result<_>>()?;
        Ok(Self { literals })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn is_everything(&self) -> bool {
        self.literals.is_empty()
    }

    /// Membership of a row given its feature values.
    pub fn contains(&self, features: &[f64]) -> bool {
        self.literals.iter().all(|l| l.contains(features[l.feature]))
    }

    /// Membership of row `pos` of `ds`.
    pub fn contains_row(&self, ds: &Dataset, pos: usize) -> bool {
        self.literals.iter().all(|l| l.contains(ds.feature(pos, l.feature)))
    }

    /// Positions of `ds` covered by the rule.
    pub fn matching_positions(&self, ds: &Dataset) -> Vec<usize> {
        (0..ds.n_rows()).filter(|&p| self.contains_row(ds, p)).collect()
    }

    /// Human-readable form using `names` for features.
    pub fn describe(&self, names: &[String]) -> String {
        if self.literals.is_empty() {
            return "(all)".to_owned();
        }
        self.literals
            .iter()
            .map(|l| {
                let name = &names[l.feature];
                match (l.lo.is_finite(), l.hi.is_finite()) {
                    (true, true) => format!("{} < {name} <= {}", l.lo, l.hi),
                    (true, false) => format!("{name} > {}", l.lo),
                    (false, true) => format!("{name} <= {}", l.hi),
                    (false, false) => format!("{name} any"),
                }
            })
            .collect::<Vec<_>>()
            .join(" & ")
    }
}

impl Eq for Rule {}

impl Ord for Rule {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.literals.iter().zip(&other.literals) {
            match a.cmp_key(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.literals.len().cmp(&other.literals.len())
    }
}

impl PartialOrd for Rule {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.literals.iter().map(|l| l.feature + 1).max().unwrap_or(0))
            .map(|j| format!("x{}", j + 1))
            .collect();
        f.write_str(&self.describe(&names))
    }
}

/// A candidate subgroup and the leaves whose paths produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub rule: Rule,
    pub leaves: Vec<NodeId>,
}

/// One candidate per distinct leaf rule, with treatment conditions removed.
///
/// Leaf paths that differ only in treatment conditions yield the same rule;
/// they are merged and their leaves listed together. Candidates come out in
/// canonical rule order.
pub fn extract_subgroups(tree: &Tree) -> Vec<Candidate> {
    let mut merged: BTreeMap<Rule, Vec<NodeId>> = BTreeMap::new();
    let m = tree.n_features();
    let mut stack = vec![(tree.root(), vec![(f64::NEG_INFINITY, f64::INFINITY); m])];
    while let Some((id, bounds)) = stack.pop() {
        let node = tree.node(id);
        match (node.split, node.children) {
            (Some(split), Some((l, r))) => {
                let (mut lb, mut rb) = (bounds.clone(), bounds);
                if split.column < m {
                    let c = split.column;
                    lb[c].1 = lb[c].1.min(split.threshold);
                    rb[c].0 = rb[c].0.max(split.threshold);
                }
                stack.push((r, rb));
                stack.push((l, lb));
            }
            _ => {
                let rule = Rule {
                    literals: bounds
                        .iter()
                        .enumerate()
                        .filter(|(_, (lo, hi))| lo.is_finite() || hi.is_finite())
                        .map(|(feature, &(lo, hi))| Literal { feature, lo, hi })
                        .collect(),
                };
                merged.entry(rule).or_default().push(id);
            }
        }
    }
    merged
        .into_iter()
        .map(|(rule, mut leaves)| {
            leaves.sort();
            Candidate { rule, leaves }
        })
        .collect()
}

/// Difference of arm means within a subgroup, with the arm sizes behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub effect: f64,
    pub mean_treated: f64,
    pub mean_control: f64,
    pub n_treated: usize,
    pub n_control: usize,
}

impl EffectEstimate {
    pub fn support(&self) -> usize {
        self.n_treated + self.n_control
    }
}

/// Plug-in effect of `rule` on the estimation rows: mean outcome of matching
/// treated rows minus that of matching control rows. `None` if either arm
/// has fewer than `min_arm_support` rows (or none at all).
pub fn estimate_effect(rule: &Rule, estimation: &Dataset, min_arm_support: usize) -> Option<EffectEstimate> {
    let (mut n1, mut s1, mut n0, mut s0) = (0usize, 0.0, 0usize, 0.0);
    for p in 0..estimation.n_rows() {
        if !rule.contains_row(estimation, p) {
            continue;
        }
        let y = estimation.outcome()[p];
        if estimation.treatment()[p] == 1 {
            n1 += 1;
            s1 += y;
        } else {
            n0 += 1;
            s0 += y;
        }
    }
    let floor = min_arm_support.max(1);
    if n1 < floor || n0 < floor {
        return None;
    }
    let (mean_treated, mean_control) = (s1 / n1 as f64, s0 / n0 as f64);
    Some(EffectEstimate {
        effect: mean_treated - mean_control,
        mean_treated,
        mean_control,
        n_treated: n1,
        n_control: n0,
    })
}

/// The candidate with the largest effect; ties go to the larger support,
/// then to the earlier rule in canonical order.
pub fn select_max_effect(candidates: &[(Rule, EffectEstimate)]) -> Result<(Rule, EffectEstimate)> {
    candidates
        .iter()
        .min_by(|(ra, a), (rb, b)| {
            b.effect
                .total_cmp(&a.effect)
                .then(b.support().cmp(&a.support()))
                .then(ra.cmp(rb))
        })
        .cloned()
        .ok_or(Error::NoEstimableSubgroup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cart::{GrowConfig, NodeStats, SplitSpec, Task, TreeNode};
    use crate::tabular::OutcomeKind;

    fn node(split: Option<(usize, f64)>, children: Option<(usize, usize)>) -> TreeNode {
        TreeNode {
            rows: vec![],
            stats: NodeStats::Classification { counts: [1, 1] },
            risk: 1.0,
            depth: 0,
            split: split.map(|(column, threshold)| SplitSpec { column, threshold }),
            children: children.map(|(l, r)| (NodeId(l), NodeId(r))),
        }
    }

    fn tree(nodes: Vec<TreeNode>, m: usize) -> Tree {
        Tree {
            nodes,
            task: Task::Classification,
            criterion: crate::cart::Criterion::Gini,
            config: GrowConfig::default(),
            feature_names: (1..=m).map(|j| format!("x{j}")).collect(),
        }
    }

    #[test]
    fn treatment_only_root_collapses_to_everything() {
        // Column 1 is the treatment when there is one feature.
        let t = tree(vec![node(Some((1, 0.5)), Some((1, 2))), node(None, None), node(None, None)], 1);
        let c = extract_subgroups(&t);
        assert_eq!(c.len(), 1);
        assert!(c[0].rule.is_everything());
        assert_eq!(c[0].leaves, vec![NodeId(1), NodeId(2)]);
    }

    #[test]
    fn path_literals_intersect_and_drop_treatment() {
        // x1 <= 1.5 -> T > 0.5 -> x1 <= 0.7
        let t = tree(
            vec![
                node(Some((0, 1.5)), Some((1, 6))),
                node(Some((1, 0.5)), Some((2, 3))),
                node(None, None),
                node(Some((0, 0.7)), Some((4, 5))),
                node(None, None),
                node(None, None),
                node(None, None),
            ],
            1,
        );
        let rules: Vec<Rule> = extract_subgroups(&t).into_iter().map(|c| c.rule).collect();
        assert!(rules.contains(&Rule::from_literals([Literal::at_most(0, 0.7)]).unwrap()));
        assert!(rules.contains(&Rule::from_literals([Literal::new(0, 0.7, 1.5).unwrap()]).unwrap()));
        assert!(rules.contains(&Rule::from_literals([Literal::at_most(0, 1.5)]).unwrap()));
        assert!(rules.contains(&Rule::from_literals([Literal::above(0, 1.5)]).unwrap()));
        assert_eq!(rules.len(), 4);
        let mut sorted = rules.clone();
        sorted.sort();
        assert_eq!(rules, sorted);
    }

    #[test]
    fn stump_gives_two_candidates() {
        let t = tree(vec![node(Some((0, 1.5)), Some((1, 2))), node(None, None), node(None, None)], 1);
        let c = extract_subgroups(&t);
        assert_eq!(c[0].rule.literals(), &[Literal::at_most(0, 1.5)]);
        assert_eq!(c[1].rule.literals(), &[Literal::above(0, 1.5)]);
    }

    #[test]
    fn membership() {
        assert!(Rule::everything().contains(&[42.0]));
        let r = Rule::from_literals([Literal::above(0, 1.0)]).unwrap();
        assert!(!r.contains(&[1.0]));
        assert!(r.contains(&[1.01]));
        assert!(Rule::from_literals([Literal::above(0, 2.0), Literal::at_most(0, 1.0)]).is_err());
        assert!(Literal::new(0, 1.0, 1.0).is_err());
    }

    fn est_data(t: &[u8], y: &[f64], kind: OutcomeKind) -> Dataset {
        Dataset::new(
            vec!["x1".into()],
            vec![vec![0.0; t.len()]],
            t.to_vec(),
            y.to_vec(),
            kind,
            None,
            None,
        )
        .unwrap()
    }

    #[test]
    fn arm_means() {
        let ds = est_data(&[1, 1, 1, 0, 0], &[1.0, 1.0, 0.0, 0.0, 0.0], OutcomeKind::Binary);
        let e = estimate_effect(&Rule::everything(), &ds, 2).unwrap();
        assert!((e.effect - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!((e.n_treated, e.n_control), (3, 2));

        let treated_only = est_data(&[1, 1, 1], &[1.0, 0.0, 1.0], OutcomeKind::Binary);
        assert_eq!(estimate_effect(&Rule::everything(), &treated_only, 1), None);

        let reg = est_data(&[1, 1, 0], &[2.0, 4.0, 1.0], OutcomeKind::Real);
        assert_eq!(estimate_effect(&Rule::everything(), &reg, 1).unwrap().effect, 2.0);
    }

    fn est(effect: f64, n: usize) -> EffectEstimate {
        EffectEstimate {
            effect,
            mean_treated: effect,
            mean_control: 0.0,
            n_treated: n / 2,
            n_control: n - n / 2,
        }
    }

    #[test]
    fn selection() {
        let r = |v: f64| Rule::from_literals([Literal::above(0, v)]).unwrap();
        let pick = select_max_effect(&[(r(1.0), est(0.6, 10)), (r(2.0), est(0.1, 10)), (r(3.0), est(-0.55, 10))]).unwrap();
        assert_eq!(pick.0, r(1.0));
        let pick = select_max_effect(&[(r(1.0), est(0.3, 50)), (r(2.0), est(0.3, 80))]).unwrap();
        assert_eq!(pick.0, r(2.0));
        let pick = select_max_effect(&[(r(2.0), est(0.3, 80)), (r(1.0), est(0.3, 80))]).unwrap();
        assert_eq!(pick.0, r(1.0));
        assert!(matches!(select_max_effect(&[]), Err(Error::NoEstimableSubgroup)));
    }

    #[test]
    fn json_sentinels() {
        let r = Rule::from_literals([Literal::above(0, 1.0), Literal::new(2, -1.0, 2.5).unwrap()]).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, r#"[{"feature":0,"lo":1.0,"hi":"inf"},{"feature":2,"lo":-1.0,"hi":2.5}]"#);
        assert_eq!(serde_json::from_str::<Rule>(&json).unwrap(), r);
    }
}
