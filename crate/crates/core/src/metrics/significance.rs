use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest smaller-sample size for which the exact null distribution is used.
pub const EXACT_MAX_SMALL_SAMPLE: usize = 10;

/// Direction of a one-sided test: whether `x` tends to be larger or smaller than `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    Greater,
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSumTest {
    /// Sum of the (mid)ranks of `x` in the pooled sample.
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
}

/// Midranks (1-based) of the pooled values, and `sum(t^3 - t)` over tie groups.
fn midranks(pooled: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Coefficients of the Gaussian binomial `[n choose k]_q`: entry `u` counts
/// the `k`-subsets of `{1..n}` whose rank sum is `k(k+1)/2 + u`. `None` on
/// overflow.
fn rank_sum_counts(n: usize, k: usize) -> Option<Vec<i128>> {
    let degree = k * (n - k);
    let mut c = vec![0i128; degree + 1];
    c[0] = 1;
    for i in 1..=k {
        let up = n - k + i;
        for j in (up..=degree).rev() {
            c[j] = c[j].checked_sub(c[j - up])?;
        }
        for j in i..=degree {
            c[j] = c[j].checked_add(c[j - i])?;
        }
    }
    Some(c)
}

fn exact_upper_tail(nx: usize, ny: usize, u_obs: usize) -> Option<f64> {
    let counts = rank_sum_counts(nx + ny, nx)?;
    let mut total = 0i128;
    let mut tail = 0i128;
    for (u, &c) in counts.iter().enumerate() {
        total = total.checked_add(c)?;
        if u >= u_obs {
            tail = tail.checked_add(c)?;
        }
    }
    Some(tail as f64 / total as f64)
}

/// One-sided Wilcoxon rank-sum (Mann-Whitney) test.
///
/// Exact when there are no ties and the smaller sample has at most
/// [`EXACT_MAX_SMALL_SAMPLE`] values; otherwise a normal approximation with
/// tie-corrected variance, the deviation from the null mean shrunk toward
/// zero by 0.5 as continuity correction.
pub fn wilcoxon_rank_sum(x: &[f64], y: &[f64], alternative: Alternative) -> Result<RankSumTest> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample);
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("rank-sum samples must not contain NaN".into()));
    }
    let (nx, ny) = (x.len(), y.len());
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let statistic: f64 = ranks[..nx].iter().sum();
    let u = statistic - (nx * (nx + 1)) as f64 / 2.0;

    if ties == 0.0 && nx.min(ny) <= EXACT_MAX_SMALL_SAMPLE {
        let u_obs = u.round() as usize;
        let tail = match alternative {
            Alternative::Greater => exact_upper_tail(nx, ny, u_obs),
            // P(U_x <= u) = P(U_y >= nx*ny - u)
            Alternative::Less => exact_upper_tail(ny, nx, nx * ny - u_obs),
        };
        if let Some(p) = tail {
            return Ok(RankSumTest {
                statistic,
                p_value: p,
                method: TestMethod::Exact,
            });
        }
    }

    let n = (nx + ny) as f64;
    let (fx, fy) = (nx as f64, ny as f64);
    let mean = fx * fy / 2.0;
    let tie_term = if n > 1.0 { ties / (n * (n - 1.0)) } else { 0.0 };
    let var = fx * fy / 12.0 * ((n + 1.0) - tie_term);
    let d = match alternative {
        Alternative::Greater => u - mean,
        Alternative::Less => mean - u,
    };
    let p = if var <= 0.0 {
        0.5
    } else {
        let shrunk = d.signum() * (d.abs() - 0.5).max(0.0);
        0.5 * erfc(shrunk / (2.0 * var).sqrt())
    };
    Ok(RankSumTest {
        statistic,
        p_value: p.clamp(f64::MIN_POSITIVE, 1.0),
        method: TestMethod::Normal,
    })
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_adjust(p_values: &[f64]) -> Vec<f64> {
    let k = p_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = vec![0.0; k];
    let mut running = 0.0f64;
    for (i, &idx) in order.iter().enumerate() {
        running = running.max(((k - i) as f64 * p_values[idx]).min(1.0));
        adjusted[idx] = running;
    }
    adjusted
}
