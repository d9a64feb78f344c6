use crate::error::{Error, Result};

/// Gini index `1 - sum_c p_c^2` of a node with the given class counts.
pub fn gini_impurity(class_counts: &[usize]) -> Result<f64> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("gini impurity of an empty node".into()));
    }
    let total = total as f64;
    Ok(1.0 - class_counts.iter().map(|&c| (c as f64 / total).powi(2)).sum::<f64>())
}

/// Within-node variance (divided by `count`) from running sums.
pub fn mse_impurity(count: usize, sum: f64, sum_sq: f64) -> Result<f64> {
    if count == 0 {
        return Err(Error::InvalidParameter("mse impurity of an empty node".into()));
    }
    let n = count as f64;
    Ok((sum_sq / n - (sum / n).powi(2)).max(0.0))
}
