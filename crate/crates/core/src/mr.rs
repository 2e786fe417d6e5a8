//! Signal-proportion estimation from the empirical p-value distribution.
//!
//! The goodness-of-fit statistic is the supremum of the standardized
//! deviation of the empirical CDF from uniform,
//!
//! ```text
//! V_m = sup_t (U_m(t) - t) / sqrt(t(1-t)),        t in (0, 1),
//! ```
//!
//! a bounding sequence `c_m` is its empirical `(1 - alpha_m)` quantile under
//! simulated nulls, and the proportion estimate is
//!
//! ```text
//! pi_hat = max(0, sup_t (F_m(t) - t - c_m sqrt(t(1-t))) / (1 - t)).
//! ```
//!
//! Both objectives are strictly decreasing between jumps of the empirical
//! CDF, so the jump points attain the supremum; a uniform interior grid of
//! max(1000, m) points is swept as well, keeping the candidate set dense when
//! the input has few distinct values.
//!
//! The goodness-of-fit statistic sweeps all of (0, 1). The proportion
//! objective is swept only over t in (0, 1/4]: its 1/(1-t) factor amplifies
//! an exceedance of the bounding term by sqrt(t/(1-t)), which is unbounded as
//! t -> 1, and under dependence the upper tail of the empirical CDF
//! fluctuates enough to turn that amplification into large spurious
//! estimates. Capping the domain bounds the amplification at sqrt(1/3) while
//! keeping every realistic argmax (the signal mass lives at small t).

use rand::Rng;
use rand_distr::Open01;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::Matrix;
use crate::pvalues::{PValueVector, P_CLAMP};
use crate::rng::{derive_rng, STREAM_NULL_CALIBRATION};

/// Minimum admissible number of null replicates for calibration.
pub const MIN_NULL_REPS: usize = 100;

/// Candidate grids have at least this many interior points.
const GRID_FLOOR: usize = 1000;

/// Upper end of the proportion objective's supremum domain.
pub const PI_SUP_DOMAIN_MAX: f64 = 0.25;

/// Where a bounding-sequence calibration came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CalibrationSource {
    #[serde(rename = "simulated-uniform")]
    SimulatedUniform,
    #[serde(rename = "permutation-matrix")]
    PermutationMatrix,
    /// All-noise draws from a simulation design, dependence included.
    #[serde(rename = "simulated-design-null")]
    SimulatedDesignNull,
}

/// The simulated bounding-sequence context for the proportion estimator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullCalibration {
    pub m: usize,
    pub alpha_m: f64,
    pub c_m: f64,
    pub n_reps: usize,
    pub seed: Option<u64>,
    pub source: CalibrationSource,
}

impl NullCalibration {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_m > 0.0 && self.alpha_m < 1.0) {
            return Err(Error::invalid(
                "alpha_m",
                format!("{} is not in (0, 1)", self.alpha_m),
            ));
        }
        if !(self.c_m >= 0.0 && self.c_m.is_finite()) {
            return Err(Error::invalid("c_m", format!("{} must be >= 0", self.c_m)));
        }
        if self.n_reps < 1 {
            return Err(Error::invalid("n_reps", "must be >= 1"));
        }
        Ok(())
    }
}

/// Output of the proportion estimator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PiEstimate {
    /// Estimated signal proportion, clipped below at 0.
    pub pi_hat: f64,
    /// Estimated signal count: round(m * pi_hat) clipped to [0, m-1].
    pub s_hat: usize,
    /// Argmax of the objective over the candidate set.
    pub t_star: f64,
    /// Raw objective value at `t_star` (may be negative under the null).
    pub objective: f64,
}

/// V_m over the candidate set {jump points} ∪ {uniform grid of
/// max(1000, m) interior points}. The value may be negative.
pub fn compute_vm(p: &PValueVector) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::EmptyPValues);
    }
    Ok(vm_of_sorted(p.sorted()))
}

/// Core V_m sweep; `sorted` must be nondecreasing and inside (0, 1).
fn vm_of_sorted(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    let mf = m as f64;
    let mut best = f64::NEG_INFINITY;

    // jump points: U_m(p_(i)) counts ties inclusively, so evaluate at the
    // last index of each tie run
    for i in 0..m {
        if i + 1 < m && sorted[i + 1] == sorted[i] {
            continue;
        }
        let t = sorted[i];
        let u = (i + 1) as f64 / mf;
        let v = (u - t) / (t * (1.0 - t)).sqrt();
        if v > best {
            best = v;
        }
    }

    // uniform interior grid, swept with a single merge pass
    let grid = GRID_FLOOR.max(m);
    let step = 1.0 / (grid + 1) as f64;
    let mut count = 0usize;
    for g in 1..=grid {
        let t = g as f64 * step;
        while count < m && sorted[count] <= t {
            count += 1;
        }
        let v = (count as f64 / mf - t) / (t * (1.0 - t)).sqrt();
        if v > best {
            best = v;
        }
    }
    best
}

/// Empirical `(1 - alpha_m)` quantile of V_m over `n_reps` simulated vectors
/// of `m` iid uniform p-values. Deterministic given `(m, alpha_m, n_reps,
/// seed)`; replicates run in parallel on independent derived streams.
pub fn calibrate_cm(m: usize, alpha_m: f64, n_reps: usize, seed: u64) -> Result<NullCalibration> {
    if m < 2 {
        return Err(Error::invalid("m", "calibration requires m >= 2"));
    }
    check_alpha_m(alpha_m)?;
    if n_reps < MIN_NULL_REPS {
        return Err(Error::InsufficientReplicates {
            got: n_reps,
            min: MIN_NULL_REPS,
        });
    }

    let mut samples: Vec<f64> = (0..n_reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = derive_rng(seed, STREAM_NULL_CALIBRATION, rep);
            let mut draw: Vec<f64> = (0..m)
                .map(|_| {
                    let u: f64 = rng.sample(Open01);
                    u.clamp(P_CLAMP, 1.0 - P_CLAMP)
                })
                .collect();
            draw.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            vm_of_sorted(&draw)
        })
        .collect();
    samples.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let c_m = type7_quantile(&samples, 1.0 - alpha_m);

    Ok(NullCalibration {
        m,
        alpha_m,
        c_m,
        n_reps,
        seed: Some(seed),
        source: CalibrationSource::SimulatedUniform,
    })
}

/// Same as [`calibrate_cm`] but with V_m computed on the rows of a matrix of
/// null p-values (e.g. from phenotype permutations).
pub fn calibrate_cm_from_matrix(null_pvals: &Matrix, alpha_m: f64) -> Result<NullCalibration> {
    check_alpha_m(alpha_m)?;
    if null_pvals.rows < MIN_NULL_REPS {
        return Err(Error::InsufficientReplicates {
            got: null_pvals.rows,
            min: MIN_NULL_REPS,
        });
    }
    if null_pvals.cols == 0 {
        return Err(Error::EmptyPValues);
    }
    for (index, &v) in null_pvals.data.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::PValueOutOfRange { index, value: v });
        }
    }

    let mut samples: Vec<f64> = (0..null_pvals.rows)
        .into_par_iter()
        .map(|b| {
            let mut row: Vec<f64> = null_pvals
                .row(b)
                .iter()
                .map(|v| v.clamp(P_CLAMP, 1.0 - P_CLAMP))
                .collect();
            row.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            vm_of_sorted(&row)
        })
        .collect();
    samples.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let c_m = type7_quantile(&samples, 1.0 - alpha_m);

    Ok(NullCalibration {
        m: null_pvals.cols,
        alpha_m,
        c_m,
        n_reps: null_pvals.rows,
        seed: None,
        source: CalibrationSource::PermutationMatrix,
    })
}

/// The proportion estimate for `p` under bounding sequence `cal`, with the
/// supremum over t in (0, [`PI_SUP_DOMAIN_MAX`]].
pub fn estimate_pi(p: &PValueVector, cal: &NullCalibration) -> Result<PiEstimate> {
    if cal.m != p.len() {
        return Err(Error::DimensionMismatch {
            expected: cal.m,
            actual: p.len(),
        });
    }
    cal.validate()?;

    let sorted = p.sorted();
    let m = sorted.len();
    let mf = m as f64;
    let c_m = cal.c_m;

    let objective = |t: f64, count: usize| -> f64 {
        (count as f64 / mf - t - c_m * (t * (1.0 - t)).sqrt()) / (1.0 - t)
    };

    let mut best = f64::NEG_INFINITY;
    let mut best_t = f64::NAN;

    for i in 0..m {
        if i + 1 < m && sorted[i + 1] == sorted[i] {
            continue;
        }
        let t = sorted[i];
        if t > PI_SUP_DOMAIN_MAX {
            break;
        }
        let v = objective(t, i + 1);
        if v > best {
            best = v;
            best_t = t;
        }
    }

    let grid = GRID_FLOOR.max(m);
    let step = 1.0 / (grid + 1) as f64;
    let mut count = 0usize;
    for g in 1..=grid {
        let t = g as f64 * step;
        if t > PI_SUP_DOMAIN_MAX {
            break;
        }
        while count < m && sorted[count] <= t {
            count += 1;
        }
        let v = objective(t, count);
        if v > best {
            best = v;
            best_t = t;
        }
    }

    let pi_hat = best.max(0.0);
    let s_hat = ((mf * pi_hat).round() as usize).min(m - 1);
    Ok(PiEstimate {
        pi_hat,
        s_hat,
        t_star: best_t,
        objective: best,
    })
}

fn check_alpha_m(alpha_m: f64) -> Result<()> {
    if !(alpha_m > 0.0 && alpha_m < 1.0) {
        return Err(Error::invalid(
            "alpha_m",
            format!("{alpha_m} is not in (0, 1)"),
        ));
    }
    Ok(())
}

/// Type-7 (linear interpolation) quantile of an ascending-sorted sample.
pub fn type7_quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}
