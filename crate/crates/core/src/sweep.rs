//! Repeated simulate-and-fit runs over a grid of simulations, sample sizes
//! and split criteria.
//!
//! Every repetition's seed is derived up front from the master seed and its
//! `(sim, n, rep)` coordinates, and all methods of a repetition see the same
//! data, so the output does not depend on the worker count.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cart::Criterion;
use crate::error::{Error, Result};
use crate::metrics::{effect_gap, holm_adjust, jaccard, wilcoxon_rank_sum, Alternative};
use crate::pipeline::{fit, FitConfig};
use crate::seed::derive_seed;
use crate::sim::{simulate, SimSpec};
use crate::subgroup::estimate_effect;

pub const AGGREGATE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub sims: Vec<u8>,
    pub ns: Vec<usize>,
    pub reps: usize,
    pub methods: Vec<Criterion>,
    pub seed: u64,
    /// Worker threads; 0 lets the thread pool decide.
    pub workers: usize,
    /// Fill the `runtime_ms` column. Off by default because timings differ
    /// between runs.
    pub timing: bool,
    pub significance: bool,
    /// Base fit settings; the criterion is overridden per method.
    pub fit: FitConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sims: vec![1, 2, 3],
            ns: vec![1000, 2000, 3000, 4000, 5000],
            reps: 50,
            methods: vec![Criterion::Gini, Criterion::MaxChild, Criterion::AbsDiff],
            seed: 0,
            workers: 0,
            timing: false,
            significance: false,
            fit: FitConfig::default(),
        }
    }
}

/// One line of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub sim_id: u8,
    pub n: usize,
    pub seed: u64,
    pub method: Criterion,
    /// 0 when the fit found no estimable subgroup.
    pub jaccard: f64,
    /// Blank when either effect is undefined.
    pub effect_gap: Option<f64>,
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub sim_id: u8,
    pub n: usize,
    pub method: Criterion,
    pub reps: usize,
    pub failures: usize,
    pub jaccard_mean: f64,
    pub jaccard_se: f64,
    /// Over the repetitions with a defined gap.
    pub effect_gap_mean: Option<f64>,
    pub effect_gap_se: Option<f64>,
    pub effect_gap_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub sim_id: u8,
    pub n: usize,
    pub metric: String,
    pub reference: Criterion,
    pub method: Criterion,
    pub alternative: Alternative,
    pub statistic: f64,
    pub p_value: f64,
    pub p_holm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub schema_version: u32,
    pub config: SweepConfig,
    pub groups: Vec<GroupSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub significance: Option<Vec<Comparison>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<MetricsRow>,
    pub aggregate: Aggregate,
}

/// Seed of repetition `rep` of simulation `sim_id` at size `n`.
pub fn repetition_seed(master: u64, sim_id: u8, n: usize, rep: usize) -> u64 {
    let s = derive_seed(master, "sim", u64::from(sim_id));
    let s = derive_seed(s, "n", n as u64);
    derive_seed(s, "rep", rep as u64)
}

fn run_repetition(config: &SweepConfig, sim_id: u8, n: usize, rep: usize) -> Result<Vec<MetricsRow>> {
    let seed = repetition_seed(config.seed, sim_id, n, rep);
    let (ds, truth) = simulate(&SimSpec {
        sim_id,
        n,
        seed: derive_seed(seed, "data", 0),
    })?;
    let fit_seed = derive_seed(seed, "fit", 0);
    let mut rows = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let cfg = FitConfig {
            criterion: Some(method),
            ..config.fit
        };
        let start = Instant::now();
        let result = fit(&ds, &cfg, fit_seed);
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let (jac, gap) = match result {
            Ok(f) => {
                let est = &f.estimation;
                let member = |rule: &crate::subgroup::Rule| -> BTreeSet<usize> {
                    (0..est.n_rows()).filter(|&p| rule.contains_row(est, p)).map(|p| est.row_ids()[p]).collect()
                };
                let jac = jaccard(&member(&f.report.rule), &member(&truth.rule));
                let gap = estimate_effect(&truth.rule, est, cfg.min_arm_support)
                    .map(|gt| effect_gap(f.report.estimate.effect, gt.effect));
                (jac, gap)
            }
            Err(Error::NoEstimableSubgroup) => (0.0, None),
            Err(e) => return Err(e),
        };
        rows.push(MetricsRow {
            sim_id,
            n,
            seed,
            method,
            jaccard: jac,
            effect_gap: gap,
            runtime_ms: config.timing.then_some(elapsed),
        });
    }
    Ok(rows)
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

type GroupKey = (u8, usize, Criterion);

fn group_rows(rows: &[MetricsRow]) -> BTreeMap<GroupKey, Vec<&MetricsRow>> {
    let mut groups: BTreeMap<GroupKey, Vec<&MetricsRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.sim_id, r.n, r.method)).or_default().push(r);
    }
    groups
}

fn summarize(rows: &[MetricsRow]) -> Vec<GroupSummary> {
    group_rows(rows)
        .into_iter()
        .map(|((sim_id, n, method), rs)| {
            let jac: Vec<f64> = rs.iter().map(|r| r.jaccard).collect();
            let gaps: Vec<f64> = rs.iter().filter_map(|r| r.effect_gap).collect();
            let (jaccard_mean, jaccard_se) = mean_se(&jac);
            let (gap_mean, gap_se) = if gaps.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_se(&gaps);
                (Some(m), Some(s))
            };
            GroupSummary {
                sim_id,
                n,
                method,
                reps: rs.len(),
                failures: rs.iter().filter(|r| r.effect_gap.is_none()).count(),
                jaccard_mean,
                jaccard_se,
                effect_gap_mean: gap_mean,
                effect_gap_se: gap_se,
                effect_gap_count: gaps.len(),
            }
        })
        .collect()
}

/// One-sided rank-sum tests of the reference method against every other
/// method per `(sim, n)`: higher Jaccard and lower effect gap. Holm's
/// adjustment runs over all comparisons of the same metric.
fn significance(rows: &[MetricsRow], methods: &[Criterion]) -> Result<Vec<Comparison>> {
    let reference = if methods.contains(&Criterion::Gini) {
        Criterion::Gini
    } else {
        methods[0]
    };
    let groups = group_rows(rows);
    let cells: BTreeSet<(u8, usize)> = groups.keys().map(|&(s, n, _)| (s, n)).collect();
    let mut out = Vec::new();
    for (metric, alternative) in [("jaccard", Alternative::Greater), ("effect_gap", Alternative::Less)] {
        let values = |key: &GroupKey| -> Vec<f64> {
            groups[key]
                .iter()
                .filter_map(|r| if metric == "jaccard" { Some(r.jaccard) } else { r.effect_gap })
                .collect()
        };
        let start = out.len();
        for &(sim_id, n) in &cells {
            let x = values(&(sim_id, n, reference));
            for &method in methods.iter().filter(|&&m| m != reference) {
                let y = values(&(sim_id, n, method));
                if x.is_empty() || y.is_empty() {
                    continue;
                }
                let test = wilcoxon_rank_sum(&x, &y, alternative)?;
                out.push(Comparison {
                    sim_id,
                    n,
                    metric: metric.to_owned(),
                    reference,
                    method,
                    alternative,
                    statistic: test.statistic,
                    p_value: test.p_value,
                    p_holm: f64::NAN,
                });
            }
        }
        let raw: Vec<f64> = out[start..].iter().map(|c| c.p_value).collect();
        for (c, adj) in out[start..].iter_mut().zip(holm_adjust(&raw)) {
            c.p_holm = adj;
        }
    }
    Ok(out)
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutput> {
    if config.sims.is_empty() || config.ns.is_empty() || config.methods.is_empty() || config.reps == 0 {
        return Err(Error::InvalidParameter(
            "a sweep needs at least one simulation, size, method and repetition".into(),
        ));
    }
    let mut tasks = Vec::new();
    for &sim in &config.sims {
        for &n in &config.ns {
            for rep in 0..config.reps {
                tasks.push((sim, n, rep));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<Vec<MetricsRow>>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(sim, n, rep)| run_repetition(config, sim, n, rep))
            .collect()
    });
    let mut rows = Vec::with_capacity(tasks.len() * config.methods.len());
    for r in results {
        rows.extend(r?);
    }
    let significance = if config.significance && config.methods.len() > 1 {
        Some(significance(&rows, &config.methods)?)
    } else {
        None
    };
    Ok(SweepOutput {
        aggregate: Aggregate {
            schema_version: AGGREGATE_SCHEMA_VERSION,
            config: config.clone(),
            groups: summarize(&rows),
            significance,
        },
        rows,
    })
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush().map_err(|source| Error::Io {
        path: "<metrics output>".into(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        SweepConfig {
            sims: vec![1, 3],
            ns: vec![400],
            reps: 3,
            significance: true,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn row_layout_and_worker_independence() {
        let one = run_sweep(&SweepConfig { workers: 1, ..small() }).unwrap();
        let four = run_sweep(&SweepConfig { workers: 4, ..small() }).unwrap();
        assert_eq!(one.rows.len(), 2 * 3 * 3);
        assert_eq!(one.rows, four.rows);
        assert_eq!(one.aggregate.groups.len(), 2 * 3);
        let mut a = Vec::new();
        write_metrics_csv(&one.rows, &mut a).unwrap();
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("sim_id,n,seed,method,jaccard,effect_gap,runtime_ms\n"));
        assert!(one.rows.iter().all(|r| r.runtime_ms.is_none() && (0.0..=1.0).contains(&r.jaccard)));
        let sig = one.aggregate.significance.unwrap();
        assert_eq!(sig.len(), 2 * 2 * 2);
        assert!(sig.iter().all(|c| c.p_holm >= c.p_value && c.p_holm <= 1.0));
    }

    #[test]
    fn rejects_empty_grid() {
        assert!(run_sweep(&SweepConfig { reps: 0, ..small() }).is_err());
    }
}
