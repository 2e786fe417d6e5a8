//! Local false discovery rates under a theoretical standard-normal null,
//! and the missed-discovery-rate comparator built on them.
//!
//! The density of the observed z-scores is estimated with a Gaussian kernel
//! at Silverman bandwidth; this is a deliberately simple stand-in for heavier
//! empirical-null machinery and is labeled as such in outputs.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pvalues::{PValueVector, Sided};
use crate::screening::{Procedure, ScreeningResult};
use crate::special::{normal_pdf, normal_quantile};

/// Density estimation needs at least this many statistics.
pub const MIN_LFDR_INPUT: usize = 50;

const DENSITY_FLOOR: f64 = 1e-12;
const BANDWIDTH_FLOOR: f64 = 1e-3;

/// Per-variable local fdr estimates aligned with the input order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LfdrVector {
    pub z: Vec<f64>,
    pub lfdr: Vec<f64>,
    pub pi0: f64,
    pub bandwidth: f64,
}

/// Back out z-scores from p-values: one-sided z = Φ⁻¹(1-p), two-sided
/// z = Φ⁻¹(1 - p/2). Output is aligned with the original variable order.
pub fn zscores_from_pvalues(p: &PValueVector, sided: Sided) -> Vec<f64> {
    p.values()
        .iter()
        .map(|&pv| match sided {
            Sided::One => normal_quantile(1.0 - pv),
            Sided::Two => normal_quantile(1.0 - 0.5 * pv),
        })
        .collect()
}

/// lfdr_j = min(1, pi0 φ(z_j) / f̂(z_j)) with f̂ a Gaussian-kernel density
/// estimate at Silverman bandwidth 1.06 sd(z) n^(-1/5), floored at 1e-3;
/// the density itself is floored at 1e-12.
pub fn estimate_lfdr(z: &[f64], pi0: f64) -> Result<LfdrVector> {
    let n = z.len();
    if n < MIN_LFDR_INPUT {
        return Err(Error::TooFewStatistics {
            got: n,
            min: MIN_LFDR_INPUT,
        });
    }
    if !(pi0 > 0.0 && pi0 <= 1.0) {
        return Err(Error::invalid("pi0", format!("{pi0} is not in (0, 1]")));
    }
    if let Some(index) = z.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }

    let nf = n as f64;
    let mean = z.iter().sum::<f64>() / nf;
    let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let bandwidth = (1.06 * var.sqrt() * nf.powf(-0.2)).max(BANDWIDTH_FLOOR);

    let norm = 1.0 / (nf * bandwidth);
    let lfdr: Vec<f64> = z
        .par_iter()
        .map(|&zj| {
            let mut acc = 0.0;
            for &zk in z {
                acc += normal_pdf((zj - zk) / bandwidth);
            }
            let density = (acc * norm).max(DENSITY_FLOOR);
            (pi0 * normal_pdf(zj) / density).min(1.0)
        })
        .collect();

    Ok(LfdrVector {
        z: z.to_vec(),
        lfdr,
        pi0,
        bandwidth,
    })
}

/// MDR comparator: rank by lfdr ascending and pick the smallest k whose
/// estimated missed signal mass sum_{i>k} (1 - lfdr_(i)) is at most
/// beta * s_hat. s_hat = 0 selects nothing by convention.
pub fn mdr_cutoff(lfdr: &LfdrVector, s_hat: usize, beta: f64) -> Result<ScreeningResult> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid("beta", format!("{beta} is not in (0, 1)")));
    }
    let m = lfdr.lfdr.len();

    let mut ranked: Vec<usize> = (0..m).collect();
    ranked.sort_unstable_by(|&a, &b| {
        lfdr.lfdr[a]
            .partial_cmp(&lfdr.lfdr[b])
            .expect("lfdr values are finite")
            .then(a.cmp(&b))
    });

    let k_star = if s_hat == 0 {
        0
    } else {
        let bound = beta * s_hat as f64;
        let total: f64 = lfdr.lfdr.iter().map(|v| 1.0 - v).sum();
        let mut tail = total;
        let mut k = 0usize;
        while tail > bound && k < m {
            tail -= 1.0 - lfdr.lfdr[ranked[k]];
            k += 1;
        }
        k
    };

    let mut params = BTreeMap::new();
    params.insert("beta".into(), beta.into());
    params.insert("pi0".into(), lfdr.pi0.into());
    params.insert("bandwidth".into(), lfdr.bandwidth.into());
    Ok(ScreeningResult {
        procedure: Procedure::Mdr,
        k_star,
        s_hat_used: s_hat,
        params,
        selected: ranked[..k_star].to_vec(),
    })
}
