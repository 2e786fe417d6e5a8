//! The ranked p-value container every procedure consumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values exactly 0 or 1 are pulled inside the open interval before any
/// `sqrt(t(1-t))` division can blow up.
pub const P_CLAMP: f64 = 1e-12;

/// How a test statistic was converted to (or from) a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sided {
    One,
    Two,
}

/// An immutable collection of p-values with a stable sort order.
///
/// `order` maps sorted rank to original index; ties are broken by ascending
/// original index. Values are clamped to `[P_CLAMP, 1 - P_CLAMP]` on
/// construction.
#[derive(Debug, Clone)]
pub struct PValueVector {
    values: Vec<f64>,
    order: Vec<usize>,
    sorted: Vec<f64>,
}

impl PValueVector {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyPValues);
        }
        for (index, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if *v < 0.0 || *v > 1.0 {
                return Err(Error::PValueOutOfRange { index, value: *v });
            }
            *v = v.clamp(P_CLAMP, 1.0 - P_CLAMP);
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_unstable_by(|&a, &b| {
            values[a]
                .partial_cmp(&values[b])
                .expect("p-values are finite")
                .then(a.cmp(&b))
        });
        let sorted = order.iter().map(|&i| values[i]).collect();
        Ok(Self {
            values,
            order,
            sorted,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Clamped values in original input order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Nondecreasing values; `sorted()[rank]` is p_(rank+1).
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Permutation mapping sorted rank to original index.
    pub fn order(&self) -> &[usize] {
        &self.order
    }
}
