//! Cutoff rules on ranked p-values: the adaptive and conservative
//! signal-missing-rate procedures and the Benjamini-Hochberg comparator.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pvalues::PValueVector;
use crate::special::betainc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Procedure {
    AdSmr,
    CvSmr,
    Bh,
    Mdr,
}

/// Selection emitted by every screening rule.
///
/// `selected` holds the 0-based original indices of the top `k_star` ranked
/// variables (ranked by p-value, or by local fdr for the MDR rule).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScreeningResult {
    pub procedure: Procedure,
    pub k_star: usize,
    pub s_hat_used: usize,
    pub params: BTreeMap<String, serde_json::Value>,
    pub selected: Vec<usize>,
}

impl ScreeningResult {
    pub(crate) fn from_rank(
        procedure: Procedure,
        p: &PValueVector,
        k_star: usize,
        s_hat_used: usize,
        params: BTreeMap<String, serde_json::Value>,
    ) -> Self {
        Self {
            procedure,
            k_star,
            s_hat_used,
            params,
            selected: p.order()[..k_star].to_vec(),
        }
    }

    /// TSV listing of (rank, original index, p-value, selected flag).
    pub fn selection_tsv(&self, p: &PValueVector) -> String {
        let mut out = String::from("rank\tindex\tp_value\tselected\n");
        for (rank, &idx) in p.order().iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                rank + 1,
                idx,
                p.sorted()[rank],
                u8::from(rank < self.k_star)
            ));
        }
        out
    }
}

/// How the adaptive procedure's critical values b_j are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalMode {
    /// b_j is the median of Beta(j, m - s_hat - j + 1).
    #[serde(rename = "exact-beta-median")]
    ExactBetaMedian,
    /// b_j = j / (m - s_hat), the fast default.
    #[serde(rename = "ratio-approximation")]
    RatioApproximation,
}

/// Critical values indexed by offset j >= 1, for a given (m, s_hat).
#[derive(Debug, Clone)]
pub struct CriticalSequence {
    mode: CriticalMode,
    m: usize,
    s_hat: usize,
}

impl CriticalSequence {
    pub fn new(mode: CriticalMode, m: usize, s_hat: usize) -> Result<Self> {
        if s_hat >= m {
            return Err(Error::SHatOutOfRange { s_hat, m });
        }
        Ok(Self { mode, m, s_hat })
    }

    pub fn mode(&self) -> CriticalMode {
        self.mode
    }

    /// b_j for j >= 1; valid while j <= m - s_hat.
    pub fn value(&self, j: usize) -> f64 {
        debug_assert!(j >= 1 && j <= self.m - self.s_hat);
        match self.mode {
            CriticalMode::RatioApproximation => j as f64 / (self.m - self.s_hat) as f64,
            CriticalMode::ExactBetaMedian => beta_median(j, self.m - self.s_hat - j + 1),
        }
    }
}

/// Median of Beta(a, b) for integer shapes, solved as I_x(a, b) = 1/2 by
/// bisection to an absolute tolerance of 1e-12.
pub fn beta_median(a: usize, b: usize) -> f64 {
    debug_assert!(a >= 1 && b >= 1);
    let (af, bf) = (a as f64, b as f64);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if betainc(af, bf, mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// t1 guard: the number of sorted p-values strictly below alpha_m / m.
pub fn compute_t1(p: &PValueVector, alpha_m: f64) -> usize {
    let threshold = alpha_m / p.len() as f64;
    p.sorted().partition_point(|&v| v < threshold)
}

/// Adaptive cutoff: start at s_hat, stop at the first offset j with
/// p_(s_hat+j) <= b_j, never beyond floor(m/2).
///
/// When s_hat <= t1 the search is skipped and k* = min(s_hat, cap); when the
/// search exhausts the capped range (including s_hat >= cap on entry), k* is
/// the cap and the result carries `"cap_hit": true`.
pub fn adsmr_cutoff(
    p: &PValueVector,
    s_hat: usize,
    alpha_m: f64,
    seq: &CriticalSequence,
) -> Result<ScreeningResult> {
    let m = p.len();
    if s_hat >= m {
        return Err(Error::SHatOutOfRange { s_hat, m });
    }
    if seq.m != m || seq.s_hat != s_hat {
        return Err(Error::invalid(
            "critical_sequence",
            format!(
                "built for (m = {}, s_hat = {}), called with (m = {}, s_hat = {})",
                seq.m, seq.s_hat, m, s_hat
            ),
        ));
    }
    check_level("alpha_m", alpha_m)?;

    let cap = m / 2;
    let t1 = compute_t1(p, alpha_m);
    let sorted = p.sorted();

    let mut cap_hit = false;
    let k_star = if s_hat <= t1 {
        s_hat.min(cap)
    } else {
        let mut found = None;
        let mut j = 1usize;
        while s_hat + j <= cap {
            if sorted[s_hat + j - 1] <= seq.value(j) {
                found = Some(s_hat + j);
                break;
            }
            j += 1;
        }
        found.unwrap_or_else(|| {
            cap_hit = true;
            cap
        })
    };

    let mut params = BTreeMap::new();
    params.insert("alpha_m".into(), alpha_m.into());
    params.insert(
        "critical_mode".into(),
        serde_json::to_value(seq.mode).expect("serializable"),
    );
    params.insert("cap".into(), cap.into());
    params.insert("t1".into(), t1.into());
    params.insert("cap_hit".into(), cap_hit.into());
    Ok(ScreeningResult::from_rank(
        Procedure::AdSmr,
        p,
        k_star,
        s_hat,
        params,
    ))
}

/// Conservative cutoff: start at s_hat, stop at the first offset j with
/// p_(s_hat+j) <= (j/m) alpha. No cap; an exhausted search selects all m.
pub fn cvsmr_cutoff(
    p: &PValueVector,
    s_hat: usize,
    alpha: f64,
    alpha_m: f64,
) -> Result<ScreeningResult> {
    let m = p.len();
    if s_hat >= m {
        return Err(Error::SHatOutOfRange { s_hat, m });
    }
    check_level("alpha", alpha)?;
    check_level("alpha_m", alpha_m)?;

    let t1 = compute_t1(p, alpha_m);
    let sorted = p.sorted();
    let mf = m as f64;

    let k_star = if s_hat <= t1 {
        s_hat
    } else {
        let mut found = None;
        for j in 1..=(m - s_hat) {
            if sorted[s_hat + j - 1] <= (j as f64 / mf) * alpha {
                found = Some(s_hat + j);
                break;
            }
        }
        found.unwrap_or(m)
    };

    let mut params = BTreeMap::new();
    params.insert("alpha".into(), alpha.into());
    params.insert("alpha_m".into(), alpha_m.into());
    params.insert("t1".into(), t1.into());
    Ok(ScreeningResult::from_rank(
        Procedure::CvSmr,
        p,
        k_star,
        s_hat,
        params,
    ))
}

/// Benjamini-Hochberg step-up selection at nominal level q.
pub fn bh_select(p: &PValueVector, q: f64) -> Result<ScreeningResult> {
    check_level("q", q)?;
    let m = p.len();
    let mf = m as f64;
    let sorted = p.sorted();
    let mut k_star = 0;
    for i in (1..=m).rev() {
        if sorted[i - 1] <= i as f64 * q / mf {
            k_star = i;
            break;
        }
    }
    let mut params = BTreeMap::new();
    params.insert("q".into(), q.into());
    Ok(ScreeningResult::from_rank(
        Procedure::Bh,
        p,
        k_star,
        0,
        params,
    ))
}

fn check_level(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0 && value < 1.0) {
        return Err(Error::invalid(name, format!("{value} is not in (0, 1)")));
    }
    Ok(())
}
