//! Synthetic benchmarks with known maximum-effect subgroups.
//!
//! | sim | features | treatment | outcome |
//! |-----|----------|-----------|---------|
//! | 1 | `x1, x2 ~ N(0,1)` | `Ber(0.5)` | `Ber(0.8)` if `x1 > 1, T = 1`; `Ber(0.75)` if `x1 < -1, T = 0`; else `Ber(0.2)` |
//! | 2 | as 1 | `Ber(0.8)` if `x1 >= 0`, else `Ber(0.2)` | as 1 |
//! | 3 | `x1..x5 ~ N(0,1)` | `Ber(0.5)` | under `T = 1`: `Ber(0.8)` / `Ber(0.6)` / `Ber(0.4)` in rule 1 / 2 / 3; otherwise `Ber(0.2)` |
//!
//! with rule 1 = `x1 > -1 & x2 > -1 & x3 > -1`, rule 2 = `x1 > -1 & x2 > -1 & x3 <= -1`,
//! rule 3 = `x1 > -1 & x2 <= -1`.
//!
//! Rows are drawn sequentially from a [`rand_chacha::ChaCha8Rng`] seeded with
//! [`SimSpec::seed`]: the features in column order (standard normals via
//! `rand_distr`'s ziggurat sampler), then the treatment uniform, then the
//! outcome uniform. The `y0` / `y1` potential-outcome columns hold the
//! expected outcomes `P(Y = 1 | do(T = t), x)`, so `y1 - y0` is the pointwise
//! effect.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::subgroup::{Literal, Rule};
use crate::tabular::{Dataset, OutcomeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimSpec {
    pub sim_id: u8,
    pub n: usize,
    pub seed: u64,
}

/// The true maximum-effect subgroup of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub sim_id: u8,
    pub rule: Rule,
    pub max_effect: f64,
    /// Readable description of the true subgroup.
    pub description: String,
}

impl GroundTruth {
    /// `P(Y=1 | do(T=1), x) - P(Y=1 | do(T=0), x)`.
    pub fn pointwise_effect(&self, features: &[f64]) -> f64 {
        let (p0, p1) = regime_probabilities(self.sim_id, features);
        p1 - p0
    }
}

fn check_id(sim_id: u8) -> Result<()> {
    if (1..=3).contains(&sim_id) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("unknown simulation {sim_id}; expected 1, 2 or 3")))
    }
}

pub fn n_features(sim_id: u8) -> usize {
    if sim_id == 3 {
        5
    } else {
        2
    }
}

/// Which of the three rule-list regions a Simulation-3 point falls in, if any.
pub fn sim3_region(x: &[f64]) -> Option<u8> {
    match (x[0] > -1.0, x[1] > -1.0, x[2] > -1.0) {
        (true, true, true) => Some(1),
        (true, true, false) => Some(2),
        (true, false, _) => Some(3),
        (false, _, _) => None,
    }
}

/// `(P(Y=1 | do(T=0), x), P(Y=1 | do(T=1), x))`.
fn regime_probabilities(sim_id: u8, x: &[f64]) -> (f64, f64) {
    match sim_id {
        1 | 2 => {
            let p1 = if x[0] > 1.0 { 0.8 } else { 0.2 };
            let p0 = if x[0] < -1.0 { 0.75 } else { 0.2 };
            (p0, p1)
        }
        _ => {
            let p1 = match sim3_region(x) {
                Some(1) => 0.8,
                Some(2) => 0.6,
                Some(3) => 0.4,
                _ => 0.2,
            };
            (0.2, p1)
        }
    }
}

fn treatment_probability(sim_id: u8, x: &[f64]) -> f64 {
    match sim_id {
        2 if x[0] >= 0.0 => 0.8,
        2 => 0.2,
        _ => 0.5,
    }
}

pub fn ground_truth(sim_id: u8) -> Result<GroundTruth> {
    check_id(sim_id)?;
    let (rule, description) = match sim_id {
        1 | 2 => (Rule::from_literals([Literal::above(0, 1.0)])?, "x1 > 1"),
        _ => (
            Rule::from_literals((0..3).map(|j| Literal::above(j, -1.0)))?,
            "x1 > -1 & x2 > -1 & x3 > -1",
        ),
    };
    Ok(GroundTruth {
        sim_id,
        rule,
        max_effect: 0.6,
        description: description.to_owned(),
    })
}

pub fn simulate(spec: &SimSpec) -> Result<(Dataset, GroundTruth)> {
    check_id(spec.sim_id)?;
    if spec.n == 0 {
        return Err(Error::InvalidParameter("simulation size must be at least 1".into()));
    }
    let m = n_features(spec.sim_id);
    let mut rng = rng_from_seed(spec.seed);
    let mut columns = vec![Vec::with_capacity(spec.n); m];
    let mut treatment = Vec::with_capacity(spec.n);
    let mut outcome = Vec::with_capacity(spec.n);
    let mut po = Vec::with_capacity(spec.n);
    let mut x = vec![0.0; m];
    for _ in 0..spec.n {
        for (xj, col) in x.iter_mut().zip(columns.iter_mut()) {
            *xj = rng.sample(StandardNormal);
            col.push(*xj);
        }
        let t = u8::from(rng.random::<f64>() < treatment_probability(spec.sim_id, &x));
        let (p0, p1) = regime_probabilities(spec.sim_id, &x);
        let p = if t == 1 { p1 } else { p0 };
        outcome.push(f64::from(u8::from(rng.random::<f64>() < p)));
        treatment.push(t);
        po.push((p0, p1));
    }
    let names = (1..=m).map(|j| format!("x{j}")).collect();
    let ds = Dataset::new(names, columns, treatment, outcome, OutcomeKind::Binary, Some(po), None)?;
    Ok((ds, ground_truth(spec.sim_id)?))
}
