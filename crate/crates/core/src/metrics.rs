//! Confusion counts, derived rates, empirical signal-missing rates, and
//! cross-replicate aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::screening::ScreeningResult;

/// Counts and rates for one labeled replicate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateMetrics {
    #[serde(rename = "tp")]
    pub true_pos: usize,
    #[serde(rename = "fp")]
    pub false_pos: usize,
    #[serde(rename = "fn")]
    pub false_neg: usize,
    #[serde(rename = "tn")]
    pub true_neg: usize,
    pub fn_prop: f64,
    pub fdp: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl ReplicateMetrics {
    pub fn k_star(&self) -> usize {
        self.true_pos + self.false_pos
    }
}

/// Score a selection against the true signal mask.
///
/// Conventions keep every rate in [0, 1]: denominators max(k, 1) and
/// max(s, 1), and F = 0 whenever TP = 0.
pub fn confusion(result: &ScreeningResult, labels: &[bool]) -> ReplicateMetrics {
    let m = labels.len();
    let s = labels.iter().filter(|&&b| b).count();
    let k = result.selected.len();
    debug_assert_eq!(k, result.k_star);

    let true_pos = result.selected.iter().filter(|&&i| labels[i]).count();
    let false_pos = k - true_pos;
    let false_neg = s - true_pos;
    let true_neg = m - s - false_pos;

    let fdp = false_pos as f64 / k.max(1) as f64;
    let fn_prop = false_neg as f64 / s.max(1) as f64;
    let precision = true_pos as f64 / k.max(1) as f64;
    let recall = true_pos as f64 / s.max(1) as f64;
    let f_measure = if true_pos == 0 {
        0.0
    } else {
        2.0 * true_pos as f64 / (2 * true_pos + false_pos + false_neg) as f64
    };

    ReplicateMetrics {
        true_pos,
        false_pos,
        false_neg,
        true_neg,
        fn_prop,
        fdp,
        precision,
        recall,
        f_measure,
    }
}

/// Fraction of replicates whose FN proportion strictly exceeds `epsilon`.
pub fn empirical_smr(fn_props: &[f64], epsilon: f64) -> Result<f64> {
    if fn_props.is_empty() {
        return Err(Error::invalid("fn_props", "needs at least one replicate"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(
            "epsilon",
            format!("{epsilon} is not in (0, 1)"),
        ));
    }
    let over = fn_props.iter().filter(|&&v| v > epsilon).count();
    Ok(over as f64 / fn_props.len() as f64)
}

/// Median / mean / standard deviation for one metric across replicates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub metric: String,
    pub median: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Aggregate the standard metric set (plus the implied cutoff position).
pub fn aggregate(metrics: &[ReplicateMetrics]) -> Result<Vec<SummaryRow>> {
    if metrics.is_empty() {
        return Err(Error::invalid("metrics", "needs at least one replicate"));
    }
    let pull = |f: &dyn Fn(&ReplicateMetrics) -> f64| -> Vec<f64> { metrics.iter().map(f).collect() };
    let columns: [(&str, Vec<f64>); 10] = [
        ("k_star", pull(&|m| m.k_star() as f64)),
        ("tp", pull(&|m| m.true_pos as f64)),
        ("fp", pull(&|m| m.false_pos as f64)),
        ("fn", pull(&|m| m.false_neg as f64)),
        ("tn", pull(&|m| m.true_neg as f64)),
        ("fn_prop", pull(&|m| m.fn_prop)),
        ("fdp", pull(&|m| m.fdp)),
        ("precision", pull(&|m| m.precision)),
        ("recall", pull(&|m| m.recall)),
        ("f_measure", pull(&|m| m.f_measure)),
    ];
    Ok(columns
        .into_iter()
        .map(|(name, values)| {
            let (mean, sd) = mean_sd(&values);
            SummaryRow {
                metric: name.to_string(),
                median: median(&values),
                mean,
                sd,
            }
        })
        .collect())
}

/// Median with the midpoint convention for even counts.
pub fn median(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Mean and sample standard deviation (n-1 denominator; sd = 0 for a single
/// replicate). Sums are pairwise for reproducibility under re-ordering.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    debug_assert!(!values.is_empty());
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, var.sqrt())
}

fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1..=8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}
