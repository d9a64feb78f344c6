//! Exact subgroup effects on finite-domain causal models.
//!
//! A [`DiscreteScm`] has a finite set of feature points with probabilities
//! `P(X = x)`, an optional hidden confounder `U` independent of `X`, a
//! treatment `T` drawn from `P(T = 1 | x, u)`, and a binary outcome drawn
//! from `P(Y = 1 | t, cell(x), u)`: the outcome sees the features only
//! through the index of the partition cell that contains them.
//!
//! Interventional effects are computed by truncated factorization, the
//! observational contrast from the full joint distribution. Everything is a
//! finite sum, so the partition facts this crate leans on can be checked by
//! enumerating every subgroup of up to 20 points:
//!
//! * splitting a subgroup writes its effect as a convex mixture of the parts
//!   ([`check_decomposition`]);
//! * no subgroup beats the best partition cell ([`check_partition_optimality`]),
//!   with or without the hidden confounder;
//! * without the confounder the observational contrast equals the
//!   interventional effect ([`check_identifiability`]).

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

/// Largest point count [`enumerate_all_effects`] accepts.
pub const MAX_POINTS: usize = 20;

pub const DECOMPOSITION_TOL: f64 = 1e-12;
pub const OPTIMALITY_TOL: f64 = 1e-9;
pub const IDENTIFIABILITY_TOL: f64 = 1e-12;

/// Finite-domain partition model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteScm {
    /// Coordinates of each feature point (informational).
    pub x_points: Vec<Vec<f64>>,
    pub p_x: Vec<f64>,
    /// Cell index of each point.
    pub partition: Vec<usize>,
    /// Distribution of the hidden confounder; `None` for no confounder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_u: Option<Vec<f64>>,
    /// `p_t1[x][u] = P(T = 1 | x, u)`; a single column without confounder.
    pub p_t1: Vec<Vec<f64>>,
    /// `p_y1[t][cell][u] = P(Y = 1 | t, cell, u)`.
    pub p_y1: [Vec<Vec<f64>>; 2],
}

/// Bit mask over the points of a model; bit `i` selects point `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubgroupMask(pub u32);

impl SubgroupMask {
    pub fn contains(self, point: usize) -> bool {
        self.0 >> point & 1 == 1
    }

    pub fn points(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&i| self.contains(i))
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: SubgroupMask) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn minus(self, other: SubgroupMask) -> SubgroupMask {
        SubgroupMask(self.0 & !other.0)
    }
}

fn close_to_one(total: f64) -> bool {
    (total - 1.0).abs() <= 1e-12
}

fn is_prob(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

impl DiscreteScm {
    pub fn n_points(&self) -> usize {
        self.p_x.len()
    }

    pub fn n_cells(&self) -> usize {
        self.p_y1[0].len()
    }

    pub fn n_u(&self) -> usize {
        self.p_u.as_ref().map_or(1, Vec::len)
    }

    pub fn has_confounder(&self) -> bool {
        self.p_u.is_some()
    }

    fn u_weights(&self) -> Vec<f64> {
        self.p_u.clone().unwrap_or_else(|| vec![1.0])
    }

    /// Checks shapes, probability ranges and normalization.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        let m = self.n_points();
        if m == 0 || m > MAX_POINTS {
            return bad(format!("{m} points; need 1..={MAX_POINTS}"));
        }
        if self.x_points.len() != m || self.partition.len() != m || self.p_t1.len() != m {
            return bad("per-point tables disagree on the number of points".into());
        }
        if !self.p_x.iter().all(|&p| is_prob(p)) || !close_to_one(self.p_x.iter().sum()) {
            return bad("p_x is not a probability vector".into());
        }
        if let Some(pu) = &self.p_u {
            if pu.is_empty() || !pu.iter().all(|&p| is_prob(p)) || !close_to_one(pu.iter().sum()) {
                return bad("p_u is not a probability vector".into());
            }
        }
        let (cells, nu) = (self.n_cells(), self.n_u());
        if cells == 0 || self.p_y1[1].len() != cells {
            return bad("outcome tables must cover the same non-empty set of cells".into());
        }
        if let Some(&c) = self.partition.iter().find(|&&c| c >= cells) {
            return bad(format!("cell {c} has no outcome table"));
        }
        for row in &self.p_t1 {
            if row.len() != nu || !row.iter().all(|&p| is_prob(p)) {
                return bad("p_t1 rows must hold one probability per confounder value".into());
            }
        }
        for table in &self.p_y1 {
            for row in table {
                if row.len() != nu || !row.iter().all(|&p| is_prob(p)) {
                    return bad("p_y1 rows must hold one probability per confounder value".into());
                }
            }
        }
        Ok(())
    }

    pub fn full_mask(&self) -> SubgroupMask {
        SubgroupMask(((1u64 << self.n_points()) - 1) as u32)
    }

    pub fn probability(&self, q: SubgroupMask) -> f64 {
        q.points().filter(|&i| i < self.n_points()).map(|i| self.p_x[i]).sum()
    }

    /// Mask of the points in cell `c`.
    pub fn cell_mask(&self, c: usize) -> SubgroupMask {
        SubgroupMask(
            self.partition
                .iter()
                .enumerate()
                .filter(|(_, &cell)| cell == c)
                .fold(0, |m, (i, _)| m | 1 << i),
        )
    }

    /// `sum_u P(u) [P(Y=1 | 1, c, u) - P(Y=1 | 0, c, u)]`.
    pub fn cell_effect(&self, c: usize) -> f64 {
        self.u_weights()
            .iter()
            .enumerate()
            .map(|(u, pu)| pu * (self.p_y1[1][c][u] - self.p_y1[0][c][u]))
            .sum()
    }

    /// Effect of the single point `x`.
    pub fn pointwise_effect(&self, x: usize) -> f64 {
        self.cell_effect(self.partition[x])
    }

    fn check_mask(&self, q: SubgroupMask) -> Result<()> {
        if q.is_empty() || !q.is_subset_of(self.full_mask()) {
            return Err(Error::InvalidParameter(format!("mask {:#b} is not a subgroup of the model", q.0)));
        }
        if self.probability(q) <= 0.0 {
            return Err(Error::ZeroProbabilitySubgroup);
        }
        Ok(())
    }
}

/// `P(Y=1 | X in Q, do(T=1)) - P(Y=1 | X in Q, do(T=0))`.
///
/// Under `do(T = t)` the joint of `(X, U, Y)` is `P(x) P(u) P(y | t, cell(x), u)`;
/// each term is the ratio of the joint mass with `Y = 1` to the mass of `Q`.
pub fn do_effect(scm: &DiscreteScm, q: SubgroupMask) -> Result<f64> {
    scm.check_mask(q)?;
    let pu = scm.u_weights();
    let mut arm = [0.0f64; 2];
    let mut mass = 0.0;
    for x in q.points() {
        let c = scm.partition[x];
        for (u, &w) in pu.iter().enumerate() {
            let joint = scm.p_x[x] * w;
            mass += joint;
            for (t, a) in arm.iter_mut().enumerate() {
                *a += joint * scm.p_y1[t][c][u];
            }
        }
    }
    Ok(arm[1] / mass - arm[0] / mass)
}

/// `P(Y=1 | T=t, X=x)` from the observational joint, for both `t`.
fn observational_conditionals(scm: &DiscreteScm, x: usize) -> Result<[f64; 2]> {
    let pu = scm.u_weights();
    let c = scm.partition[x];
    // joint[t][y] = P(X=x, T=t, Y=y)
    let mut joint = [[0.0f64; 2]; 2];
    for (u, &w) in pu.iter().enumerate() {
        let pt1 = scm.p_t1[x][u];
        for (t, cell) in joint.iter_mut().enumerate() {
            let pt = if t == 1 { pt1 } else { 1.0 - pt1 };
            let py1 = scm.p_y1[t][c][u];
            let base = scm.p_x[x] * w * pt;
            cell[1] += base * py1;
            cell[0] += base * (1.0 - py1);
        }
    }
    let mut out = [0.0; 2];
    for t in 0..2 {
        let mass = joint[t][0] + joint[t][1];
        if mass <= 0.0 {
            let p_t1 = pu.iter().enumerate().map(|(u, w)| w * scm.p_t1[x][u]).sum();
            return Err(Error::PositivityViolation { point: x, p_t1 });
        }
        out[t] = joint[t][1] / mass;
    }
    Ok(out)
}

/// `E_{X | X in Q}[P(Y=1 | T=1, X) - P(Y=1 | T=0, X)]`, the observational
/// contrast. Requires no hidden confounder and `0 < P(T=1 | x) < 1` on `Q`.
pub fn observational_effect(scm: &DiscreteScm, q: SubgroupMask) -> Result<f64> {
    if scm.has_confounder() {
        return Err(Error::HiddenConfounder);
    }
    observational_contrast(scm, q)
}

fn observational_contrast(scm: &DiscreteScm, q: SubgroupMask) -> Result<f64> {
    scm.check_mask(q)?;
    let mut total = 0.0;
    let mut mass = 0.0;
    for x in q.points() {
        if scm.p_x[x] == 0.0 {
            continue;
        }
        let p = observational_conditionals(scm, x)?;
        total += scm.p_x[x] * (p[1] - p[0]);
        mass += scm.p_x[x];
    }
    Ok(total / mass)
}

/// Effects of all `2^m - 1` non-empty subgroups, indexed by mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgroupEffects {
    n_points: usize,
    effects: Vec<f64>,
}

impl SubgroupEffects {
    /// Effect of `q`; `None` for the empty or a zero-probability subgroup.
    pub fn get(&self, q: SubgroupMask) -> Option<f64> {
        self.effects.get(q.0 as usize).copied().filter(|v| !v.is_nan())
    }

    /// Number of subgroups with a defined effect.
    pub fn len(&self) -> usize {
        self.effects.iter().filter(|v| !v.is_nan()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (SubgroupMask, f64)> + '_ {
        self.effects
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .map(|(i, &v)| (SubgroupMask(i as u32), v))
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn max(&self) -> Option<(SubgroupMask, f64)> {
        self.iter().fold(None, |best, (q, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((q, v)),
        })
    }
}

/// Mass-weighted mixture over every mask via the lowest-set-bit recurrence.
fn enumerate_mixture(p_x: &[f64], pointwise: &[f64]) -> Vec<f64> {
    let m = p_x.len();
    let size = 1usize << m;
    let mut mass = vec![0.0; size];
    let mut weighted = vec![0.0; size];
    let mut effects = vec![f64::NAN; size];
    for mask in 1..size {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        mass[mask] = mass[rest] + p_x[low];
        weighted[mask] = weighted[rest] + p_x[low] * pointwise[low];
        if mass[mask] > 0.0 {
            effects[mask] = weighted[mask] / mass[mask];
        }
    }
    effects
}

/// Interventional effect of every non-empty subgroup.
pub fn enumerate_all_effects(scm: &DiscreteScm) -> Result<SubgroupEffects> {
    scm.validate()?;
    let pointwise: Vec<f64> = (0..scm.n_points()).map(|x| scm.pointwise_effect(x)).collect();
    Ok(SubgroupEffects {
        n_points: scm.n_points(),
        effects: enumerate_mixture(&scm.p_x, &pointwise),
    })
}

/// Checks the mixture identity `A(Q) = w A(Q') + (1 - w) A(Q \ Q')` with
/// `w = P(Q') / P(Q)`, the bounds `min <= A(Q) <= max` over the two parts,
/// and that `A(Q)` equals both parts when they agree.
pub fn check_decomposition(scm: &DiscreteScm, q: SubgroupMask, q_sub: SubgroupMask) -> Result<bool> {
    if q_sub.is_empty() || !q_sub.is_subset_of(q) || q_sub == q {
        return Err(Error::InvalidParameter("need a non-empty proper sub-subgroup".into()));
    }
    let rest = q.minus(q_sub);
    let a_q = do_effect(scm, q)?;
    let a_sub = do_effect(scm, q_sub)?;
    let a_rest = do_effect(scm, rest)?;
    let w = scm.probability(q_sub) / scm.probability(q);
    let tol = DECOMPOSITION_TOL;
    let identity = (a_q - (w * a_sub + (1.0 - w) * a_rest)).abs() <= tol;
    let (lo, hi) = (a_sub.min(a_rest), a_sub.max(a_rest));
    let sandwich = lo - tol <= a_q && a_q <= hi + tol;
    let equal_branch = (a_sub - a_rest).abs() > tol || (a_q - a_sub).abs() <= tol;
    Ok(identity && sandwich && equal_branch)
}

/// Whether the best subgroup effect is attained by a partition cell.
pub fn check_partition_optimality(scm: &DiscreteScm) -> Result<bool> {
    let all = enumerate_all_effects(scm)?;
    let best_any = all.max().map(|(_, v)| v).ok_or(Error::ZeroProbabilitySubgroup)?;
    let best_cell = (0..scm.n_cells())
        .filter_map(|c| all.get(scm.cell_mask(c)))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((best_any - best_cell).abs() <= OPTIMALITY_TOL)
}

/// Whether the observational contrast matches the interventional effect on
/// every subgroup. Requires a confounder-free, positive model.
pub fn check_identifiability(scm: &DiscreteScm) -> Result<bool> {
    if scm.has_confounder() {
        return Err(Error::HiddenConfounder);
    }
    let interventional = enumerate_all_effects(scm)?;
    let mut contrasts = Vec::with_capacity(scm.n_points());
    for x in 0..scm.n_points() {
        let p = observational_conditionals(scm, x)?;
        contrasts.push(p[1] - p[0]);
    }
    let observational = enumerate_mixture(&scm.p_x, &contrasts);
    let matches = interventional
        .iter()
        .all(|(q, v)| (v - observational[q.0 as usize]).abs() <= IDENTIFIABILITY_TOL);
    Ok(matches)
}

/// Shape of randomly generated models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomScmConfig {
    pub max_points: usize,
    pub max_cells: usize,
    /// Hidden-confounder support is drawn from `2..=max_u`; `None` for no confounder.
    pub max_u: Option<usize>,
    /// Every cell gets the same effect.
    pub tied_effects: bool,
}

impl Default for RandomScmConfig {
    fn default() -> Self {
        Self {
            max_points: 12,
            max_cells: 4,
            max_u: None,
            tied_effects: false,
        }
    }
}

/// Minimum distance between cell effects in untied random models.
pub const CELL_EFFECT_MARGIN: f64 = 0.01;

fn probability_vector<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// Draws a model with 2..=max_points points and 1..=max_cells non-empty
/// cells. Treatment probabilities stay in [0.05, 0.95] so positivity holds.
pub fn random_scm<R: Rng>(rng: &mut R, config: &RandomScmConfig) -> Result<DiscreteScm> {
    if config.max_points < 2 || config.max_points > MAX_POINTS || config.max_cells == 0 {
        return Err(Error::InvalidParameter(format!(
            "random models need 2..={MAX_POINTS} points and at least one cell"
        )));
    }
    if config.max_u.is_some_and(|u| u < 2) {
        return Err(Error::InvalidParameter("confounder needs at least 2 values".into()));
    }
    let m = rng.random_range(2..=config.max_points);
    let cells = rng.random_range(1..=config.max_cells.min(m));
    let nu = config.max_u.map_or(1, |u| rng.random_range(2..=u));

    let mut partition: Vec<usize> = (0..m).map(|i| if i < cells { i } else { rng.random_range(0..cells) }).collect();
    partition.shuffle(rng);
    let x_points = (0..m).map(|i| vec![i as f64, rng.random_range(-3.0..3.0f64).round()]).collect();
    let p_x = probability_vector(rng, m);
    let p_u = config.max_u.map(|_| probability_vector(rng, nu));
    let p_t1 = (0..m)
        .map(|_| (0..nu).map(|_| rng.random_range(0.05..0.95)).collect())
        .collect();

    let p_y1 = if config.tied_effects {
        let e: f64 = rng.random_range(-0.8..0.8);
        let mut control = vec![vec![0.0; nu]; cells];
        let mut treated = vec![vec![0.0; nu]; cells];
        for c in 0..cells {
            for u in 0..nu {
                let base = rng.random_range((-e).max(0.0)..=(1.0 - e).min(1.0));
                control[c][u] = base;
                treated[c][u] = (base + e).clamp(0.0, 1.0);
            }
        }
        [control, treated]
    } else {
        loop {
            let table = |rng: &mut R| -> Vec<Vec<f64>> {
                (0..cells).map(|_| (0..nu).map(|_| rng.random::<f64>()).collect()).collect()
            };
            let candidate = [table(rng), table(rng)];
            let effects: Vec<f64> = (0..cells)
                .map(|c| {
                    let w = p_u.clone().unwrap_or_else(|| vec![1.0]);
                    (0..nu).map(|u| w[u] * (candidate[1][c][u] - candidate[0][c][u])).sum()
                })
                .collect();
            let separated = effects
                .iter()
                .enumerate()
                .all(|(i, a)| effects[i + 1..].iter().all(|b| (a - b).abs() >= CELL_EFFECT_MARGIN));
            if separated {
                break candidate;
            }
        }
    };
    let scm = DiscreteScm {
        x_points,
        p_x,
        partition,
        p_u,
        p_t1,
        p_y1,
    };
    scm.validate()?;
    Ok(scm)
}

/// Pass count of one check over a batch of models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub passed: usize,
    pub total: usize,
}

impl Tally {
    fn record(&mut self, ok: bool) {
        self.total += 1;
        self.passed += usize::from(ok);
    }

    pub fn all_passed(&self) -> bool {
        self.passed == self.total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub count: usize,
    pub models: RandomScmConfig,
    /// Random nested pairs checked per model.
    pub pairs_per_model: usize,
    /// Every `tie_every`-th model has tied cell effects; 0 disables ties.
    pub tie_every: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            count: 200,
            models: RandomScmConfig::default(),
            pairs_per_model: 20,
            tie_every: 10,
        }
    }
}

/// Outcome of [`verify_random_models`]. A model counts as passing a check
/// only if every instance of that check on it passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub models: usize,
    pub confounded: bool,
    pub decomposition: Tally,
    /// Partition optimality; on confounded models this is the hidden-confounder case.
    pub partition_optimality: Tally,
    /// Skipped (`None`) for confounded models.
    pub identifiability: Option<Tally>,
    /// Interventional effects of every subgroup stay within the range of the
    /// cell effects they mix.
    pub convexity: Tally,
    pub seed: u64,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.decomposition.all_passed()
            && self.partition_optimality.all_passed()
            && self.identifiability.is_none_or(|t| t.all_passed())
            && self.convexity.all_passed()
    }
}

fn random_nested_pair<R: Rng>(rng: &mut R, full: SubgroupMask) -> (SubgroupMask, SubgroupMask) {
    let points: Vec<usize> = full.points().collect();
    loop {
        let q = points.iter().fold(0u32, |m, &i| if rng.random::<bool>() { m | 1 << i } else { m });
        if q.count_ones() < 2 {
            continue;
        }
        let members: Vec<usize> = SubgroupMask(q).points().collect();
        let sub = members.iter().fold(0u32, |m, &i| if rng.random::<bool>() { m | 1 << i } else { m });
        if sub != 0 && sub != q {
            return (SubgroupMask(q), SubgroupMask(sub));
        }
    }
}

fn convexity_holds(scm: &DiscreteScm, effects: &SubgroupEffects) -> bool {
    let cell_effects: Vec<f64> = (0..scm.n_cells()).map(|c| scm.cell_effect(c)).collect();
    effects.iter().all(|(q, v)| {
        let (lo, hi) = q
            .points()
            .map(|x| cell_effects[scm.partition[x]])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e), hi.max(e)));
        lo - DECOMPOSITION_TOL <= v && v <= hi + DECOMPOSITION_TOL
    })
}

/// Per-model check results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ModelChecks {
    decomposition: bool,
    partition_optimality: bool,
    identifiability: Option<bool>,
    convexity: bool,
}

fn check_model<R: Rng>(scm: &DiscreteScm, pairs: usize, rng: &mut R) -> Result<ModelChecks> {
    scm.validate()?;
    let full = scm.full_mask();
    let mut decomposition = true;
    if scm.n_points() >= 2 {
        for _ in 0..pairs {
            let (q, sub) = random_nested_pair(rng, full);
            if scm.probability(sub) > 0.0 && scm.probability(q.minus(sub)) > 0.0 {
                decomposition &= check_decomposition(scm, q, sub)?;
            }
        }
    }
    Ok(ModelChecks {
        decomposition,
        partition_optimality: check_partition_optimality(scm)?,
        identifiability: if scm.has_confounder() {
            None
        } else {
            Some(check_identifiability(scm)?)
        },
        convexity: convexity_holds(scm, &enumerate_all_effects(scm)?),
    })
}

fn empty_report(models: usize, confounded: bool, seed: u64) -> VerifyReport {
    VerifyReport {
        models,
        confounded,
        decomposition: Tally::default(),
        partition_optimality: Tally::default(),
        identifiability: (!confounded).then(Tally::default),
        convexity: Tally::default(),
        seed,
    }
}

impl VerifyReport {
    fn record(&mut self, checks: ModelChecks) {
        self.decomposition.record(checks.decomposition);
        self.partition_optimality.record(checks.partition_optimality);
        if let (Some(t), Some(ok)) = (self.identifiability.as_mut(), checks.identifiability) {
            t.record(ok);
        }
        self.convexity.record(checks.convexity);
    }
}

/// Runs every check on one given model; nested pairs are drawn from `seed`.
pub fn verify_model(scm: &DiscreteScm, pairs: usize, seed: u64) -> Result<VerifyReport> {
    let mut rng = rng_from_seed(derive_seed(seed, "verify-pairs", 0));
    let mut report = empty_report(1, scm.has_confounder(), seed);
    report.record(check_model(scm, pairs, &mut rng)?);
    Ok(report)
}

/// Draws `config.count` random models from `seed` and runs every check.
pub fn verify_random_models(config: &VerifyConfig, seed: u64) -> Result<VerifyReport> {
    if config.count == 0 {
        return Err(Error::InvalidParameter("verification needs at least one model".into()));
    }
    let mut report = empty_report(config.count, config.models.max_u.is_some(), seed);
    for i in 0..config.count {
        let mut rng = rng_from_seed(derive_seed(seed, "verify-model", i as u64));
        let models = RandomScmConfig {
            tied_effects: config.tie_every > 0 && i % config.tie_every == config.tie_every - 1,
            ..config.models
        };
        let scm = random_scm(&mut rng, &models)?;
        report.record(check_model(&scm, config.pairs_per_model, &mut rng)?);
    }
    Ok(report)
}
