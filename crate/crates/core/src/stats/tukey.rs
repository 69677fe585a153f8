//! Tukey HSD pairwise comparisons for balanced groups.

use serde::{Deserialize, Serialize};

use super::dist::studentized_range_cdf;
use super::describe::mean;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub group_i: String,
    pub group_j: String,
    /// `mean_i - mean_j`.
    pub mean_diff: f64,
    pub q_stat: f64,
    pub p_adj: f64,
    pub reject: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TukeyResult {
    pub comparisons: Vec<Comparison>,
    pub alpha: f64,
    pub ms_within: f64,
    pub df: f64,
    pub n_per_group: usize,
}

impl TukeyResult {
    pub fn find(&self, a: &str, b: &str) -> Option<&Comparison> {
        self.comparisons
            .iter()
            .find(|c| (c.group_i == a && c.group_j == b) || (c.group_i == b && c.group_j == a))
    }
}

/// `q = |mean_i - mean_j| / sqrt(MS_within / n)` with p from the studentized
/// range distribution on `k` groups and `N - k` degrees of freedom.
pub fn tukey_hsd(groups: &[(String, Vec<f64>)], alpha: f64) -> Result<TukeyResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::InsufficientData("Tukey HSD needs at least two groups".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let n = groups[0].1.len();
    if groups.iter().any(|(_, g)| g.len() != n) {
        return Err(Error::Unbalanced("Tukey HSD requires equal group sizes".into()));
    }
    if n < 2 {
        return Err(Error::InsufficientData("each group needs at least two observations".into()));
    }
    if groups.iter().flat_map(|(_, g)| g).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("observations must be finite".into()));
    }

    let means: Vec<f64> = groups.iter().map(|(_, g)| mean(g)).collect();
    let ss_within: f64 = groups
        .iter()
        .zip(&means)
        .map(|((_, g), m)| g.iter().map(|x| (x - m).powi(2)).sum::<f64>())
        .sum();
    let df = (k * n - k) as f64;
    let ms_within = ss_within / df;
    let se = (ms_within / n as f64).sqrt();

    let mut comparisons = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let diff = means[i] - means[j];
            let (q, p) = if diff == 0.0 {
                (0.0, 1.0)
            } else if se == 0.0 {
                (f64::INFINITY, 0.0)
            } else {
                let q = diff.abs() / se;
                (q, (1.0 - studentized_range_cdf(q, k, df)).clamp(0.0, 1.0))
            };
            comparisons.push(Comparison {
                group_i: groups[i].0.clone(),
                group_j: groups[j].0.clone(),
                mean_diff: diff,
                q_stat: q,
                p_adj: p,
                reject: p < alpha,
            });
        }
    }
    Ok(TukeyResult {
        comparisons,
        alpha,
        ms_within,
        df,
        n_per_group: n,
    })
}

/// Significance marks: `***` < 0.001, `**` < 0.01, `*` < 0.05, else `ns`.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        "ns"
    }
}
