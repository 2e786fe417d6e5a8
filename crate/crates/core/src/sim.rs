//! Synthetic test statistics under the benchmark dependence designs, and
//! oracle diagnostics about where signals land in the ranking.
//!
//! Statistics are N(A, Σ) with A_j = mu at randomly placed signal positions
//! and 0 elsewhere. Σ comes in three flavors: exchangeable diagonal blocks
//! (sampled per block, so the dense matrix is never materialized), a shifted
//! sparse random matrix (dense Cholesky), and the sample correlation of a
//! two-factor model (sampled through its Gram factor).
//!
//! Determinism contract: replicate `r` of a config draws its signal mask from
//! stream (seed, STREAM_SIGNAL_MASK, r) and its noise from
//! (seed, STREAM_REPLICATE, r); covariance construction draws from
//! (seed, STREAM_COVARIANCE, 0) for the sparse design and
//! (seed, STREAM_COVARIANCE, 1) for the two-factor design. See [`crate::rng`].

use rand::Rng;
use rand_distr::StandardNormal;
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_in_place, lower_tri_mul, min_symmetric_eigenvalue};
use crate::pvalues::{PValueVector, Sided};
use crate::rng::{derive_rng, STREAM_COVARIANCE, STREAM_REPLICATE, STREAM_SIGNAL_MASK};
use crate::special::normal_sf;

/// Dense construction limit for the sparse design.
pub const SPARSE_MAX_M: usize = 5000;

/// Dependence structure of the simulated statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Design {
    /// Exchangeable blocks of size `l` with within-block correlation `rho`.
    Block { l: usize, rho: f64 },
    /// Random sparse correlations: off-diagonals are `rho` with probability
    /// `density`, then shifted into positive definiteness.
    Sparse { rho: f64, density: f64 },
    /// Sample correlation of `n_sample` draws from a two-factor model.
    TwoFactor { n_sample: usize },
}

impl Design {
    pub fn label(&self) -> String {
        match self {
            Design::Block { l, rho } => format!("block-l{l}-rho{rho}"),
            Design::Sparse { rho, density } => format!("sparse-rho{rho}-d{density}"),
            Design::TwoFactor { n_sample } => format!("two_factor-n{n_sample}"),
        }
    }
}

/// One simulation scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub m: usize,
    /// Signal proportion; the planted count is round(m * pi).
    pub pi: f64,
    /// Signal mean shift (>= 0; 0 degenerates to a pure-noise scenario).
    pub mu: f64,
    pub design: Design,
    pub sided: Sided,
    pub n_reps: usize,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn signal_count(&self) -> usize {
        (self.m as f64 * self.pi).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("m", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.pi) {
            return Err(Error::invalid("pi", format!("{} is not in [0, 1)", self.pi)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid("mu", format!("{} must be >= 0", self.mu)));
        }
        if self.n_reps == 0 {
            return Err(Error::invalid("n_reps", "must be >= 1"));
        }
        match self.design {
            Design::Block { l, rho } => {
                check_block_params(l, rho)?;
            }
            Design::Sparse { rho, density } => {
                if rho.abs() >= 1.0 {
                    return Err(Error::invalid("rho", format!("{rho} is not in (-1, 1)")));
                }
                if !(0.0..1.0).contains(&density) {
                    return Err(Error::invalid(
                        "density",
                        format!("{density} is not in [0, 1)"),
                    ));
                }
                if self.m > SPARSE_MAX_M {
                    return Err(Error::invalid(
                        "m",
                        format!("sparse design is dense; m is limited to {SPARSE_MAX_M}"),
                    ));
                }
            }
            Design::TwoFactor { n_sample } => {
                if n_sample < 3 {
                    return Err(Error::invalid("n_sample", "must be >= 3"));
                }
            }
        }
        Ok(())
    }

    /// Build the (immutable, shareable) sampler for this scenario's Σ.
    pub fn build_covariance(&self) -> Result<Covariance> {
        self.validate()?;
        match self.design {
            Design::Block { l, rho } => Ok(Covariance::Block(build_block_sigma(self.m, l, rho)?)),
            Design::Sparse { rho, density } => Ok(Covariance::Dense(build_sparse_sigma(
                self.m, rho, density, self.seed,
            )?)),
            Design::TwoFactor { n_sample } => Ok(Covariance::Gram(build_factor_sigma(
                self.m, n_sample, self.seed,
            )?)),
        }
    }
}

fn check_block_params(l: usize, rho: f64) -> Result<()> {
    if l == 0 {
        return Err(Error::invalid("l", "block size must be >= 1"));
    }
    if rho.abs() >= 1.0 {
        return Err(Error::invalid("rho", format!("{rho} is not in (-1, 1)")));
    }
    if l >= 2 && rho <= -1.0 / (l - 1) as f64 {
        return Err(Error::invalid(
            "rho",
            format!("{rho} makes an exchangeable block of size {l} non positive definite"),
        ));
    }
    Ok(())
}

/// A sampler for N(0, Σ).
#[derive(Debug, Clone)]
pub enum Covariance {
    Block(BlockSigma),
    Dense(DenseFactor),
    Gram(GramFactor),
}

impl Covariance {
    pub fn m(&self) -> usize {
        match self {
            Covariance::Block(b) => b.m,
            Covariance::Dense(d) => d.m,
            Covariance::Gram(g) => g.m,
        }
    }

    /// Fill `out` with one draw of N(0, Σ).
    pub fn sample_into(&self, rng: &mut Pcg64Mcg, out: &mut [f64]) {
        match self {
            Covariance::Block(b) => b.sample_into(rng, out),
            Covariance::Dense(d) => d.sample_into(rng, out),
            Covariance::Gram(g) => g.sample_into(rng, out),
        }
    }

    /// Materialize Σ (tests and small m only).
    pub fn dense(&self) -> Vec<f64> {
        match self {
            Covariance::Block(b) => b.dense(),
            Covariance::Dense(d) => d.dense(),
            Covariance::Gram(g) => g.dense(),
        }
    }
}

/// Block-diagonal exchangeable covariance, stored as one l x l Cholesky
/// factor shared by every block.
#[derive(Debug, Clone)]
pub struct BlockSigma {
    pub m: usize,
    pub l: usize,
    pub rho: f64,
    chol: Vec<f64>,
}

/// Factor the l x l exchangeable block once; a trailing partial block reuses
/// the leading rows of the same factor.
pub fn build_block_sigma(m: usize, l: usize, rho: f64) -> Result<BlockSigma> {
    check_block_params(l, rho)?;
    let l = l.min(m);
    let mut chol = vec![rho; l * l];
    for i in 0..l {
        chol[i * l + i] = 1.0;
    }
    cholesky_in_place(&mut chol, l)
        .map_err(|pivot| Error::Covariance(format!("exchangeable block fails at pivot {pivot}")))?;
    Ok(BlockSigma { m, l, rho, chol })
}

impl BlockSigma {
    fn sample_into(&self, rng: &mut Pcg64Mcg, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.m);
        let mut xi = vec![0.0; self.l];
        let mut start = 0;
        while start < self.m {
            let nb = self.l.min(self.m - start);
            for x in xi[..nb].iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            lower_tri_mul(&self.chol, self.l, nb, &xi, &mut out[start..start + nb]);
            start += nb;
        }
    }

    /// The block Cholesky factor (row-major l x l lower triangle).
    pub fn block_factor(&self) -> &[f64] {
        &self.chol
    }

    fn dense(&self) -> Vec<f64> {
        let m = self.m;
        let mut sigma = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                sigma[i * m + j] = if i == j {
                    1.0
                } else if i / self.l == j / self.l {
                    self.rho
                } else {
                    0.0
                };
            }
        }
        sigma
    }
}

/// Dense covariance held as its Cholesky factor.
#[derive(Debug, Clone)]
pub struct DenseFactor {
    pub m: usize,
    /// Smallest eigenvalue of the unshifted matrix.
    pub lambda_min_star: f64,
    /// Shift applied: Σ = (Σ* + delta I) / (1 + delta).
    pub delta: f64,
    chol: Vec<f64>,
}

/// Sparse random design: unit diagonal, off-diagonal `rho` with probability
/// `density` (upper triangle drawn row-major, then mirrored), shifted by
/// delta = |lambda_min| + 0.05 and rescaled back to unit diagonal.
pub fn build_sparse_sigma(m: usize, rho: f64, density: f64, seed: u64) -> Result<DenseFactor> {
    if m > SPARSE_MAX_M {
        return Err(Error::invalid(
            "m",
            format!("sparse design is dense; m is limited to {SPARSE_MAX_M}"),
        ));
    }
    let mut rng = derive_rng(seed, STREAM_COVARIANCE, 0);
    let mut star = vec![0.0; m * m];
    for i in 0..m {
        star[i * m + i] = 1.0;
        for j in (i + 1)..m {
            let v = if rng.random::<f64>() < density { rho } else { 0.0 };
            star[i * m + j] = v;
            star[j * m + i] = v;
        }
    }
    sparse_sigma_from_star(star, m)
}

/// The shift-and-factor step, exposed so tests can pin Σ* exactly.
pub fn sparse_sigma_from_star(mut star: Vec<f64>, m: usize) -> Result<DenseFactor> {
    debug_assert_eq!(star.len(), m * m);
    let lambda_min_star = min_symmetric_eigenvalue(&star, m, 1e-7);
    let delta = lambda_min_star.abs() + 0.05;
    let scale = 1.0 / (1.0 + delta);
    for i in 0..m {
        for j in 0..m {
            let v = if i == j { 1.0 + delta } else { star[i * m + j] };
            star[i * m + j] = v * scale;
        }
    }
    cholesky_in_place(&mut star, m)
        .map_err(|pivot| Error::Covariance(format!("shifted sparse matrix fails at pivot {pivot}")))?;
    Ok(DenseFactor {
        m,
        lambda_min_star,
        delta,
        chol: star,
    })
}

impl DenseFactor {
    fn sample_into(&self, rng: &mut Pcg64Mcg, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.m);
        let xi: Vec<f64> = (0..self.m).map(|_| rng.sample(StandardNormal)).collect();
        lower_tri_mul(&self.chol, self.m, self.m, &xi, out);
    }

    fn dense(&self) -> Vec<f64> {
        let m = self.m;
        let mut sigma = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let mut acc = 0.0;
                for k in 0..=i.min(j) {
                    acc += self.chol[i * m + k] * self.chol[j * m + k];
                }
                sigma[i * m + j] = acc;
            }
        }
        sigma
    }
}

/// Covariance given by a Gram factor B (m x r): Σ = B Bᵀ with unit-norm rows,
/// here the row-centered, row-normalized data of a two-factor sample.
#[derive(Debug, Clone)]
pub struct GramFactor {
    pub m: usize,
    pub r: usize,
    b: Vec<f64>,
}

/// Two-factor design: loadings iid U(-1, 1), `n_sample` observations of
/// X_j = rho1_j W1 + rho2_j W2 + H_j, and Σ = sample correlation of the data.
pub fn build_factor_sigma(m: usize, n_sample: usize, seed: u64) -> Result<GramFactor> {
    if n_sample < 3 {
        return Err(Error::invalid("n_sample", "must be >= 3"));
    }
    let mut rng = derive_rng(seed, STREAM_COVARIANCE, 1);
    let rho1: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rho2: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    factor_sigma_from_loadings(&rho1, &rho2, n_sample, &mut rng)
}

/// Observation-major draw order: per observation, (W1, W2, H_1..H_m).
pub fn factor_sigma_from_loadings(
    rho1: &[f64],
    rho2: &[f64],
    n_sample: usize,
    rng: &mut Pcg64Mcg,
) -> Result<GramFactor> {
    let m = rho1.len();
    if rho2.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: rho2.len(),
        });
    }
    if n_sample < 3 {
        return Err(Error::invalid("n_sample", "must be >= 3"));
    }
    // data rows are variables, columns observations
    let mut data = vec![0.0; m * n_sample];
    for k in 0..n_sample {
        let w1: f64 = rng.sample(StandardNormal);
        let w2: f64 = rng.sample(StandardNormal);
        for j in 0..m {
            let h: f64 = rng.sample(StandardNormal);
            data[j * n_sample + k] = rho1[j] * w1 + rho2[j] * w2 + h;
        }
    }
    for j in 0..m {
        let row = &mut data[j * n_sample..(j + 1) * n_sample];
        let mean = row.iter().sum::<f64>() / n_sample as f64;
        for v in row.iter_mut() {
            *v -= mean;
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Covariance(format!(
                "two-factor variable {j} has zero sample variance"
            )));
        }
        for v in row.iter_mut() {
            *v /= norm;
        }
    }
    Ok(GramFactor {
        m,
        r: n_sample,
        b: data,
    })
}

impl GramFactor {
    fn sample_into(&self, rng: &mut Pcg64Mcg, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.m);
        let xi: Vec<f64> = (0..self.r).map(|_| rng.sample(StandardNormal)).collect();
        for (j, slot) in out.iter_mut().enumerate() {
            let row = &self.b[j * self.r..(j + 1) * self.r];
            *slot = row.iter().zip(&xi).map(|(a, b)| a * b).sum();
        }
    }

    fn dense(&self) -> Vec<f64> {
        let m = self.m;
        let mut sigma = vec![0.0; m * m];
        for i in 0..m {
            sigma[i * m + i] = 1.0;
            let row_i = &self.b[i * self.r..(i + 1) * self.r];
            for j in 0..i {
                let row_j = &self.b[j * self.r..(j + 1) * self.r];
                let dot: f64 = row_i.iter().zip(row_j).map(|(a, b)| a * b).sum();
                let dot = dot.clamp(-1.0, 1.0);
                sigma[i * m + j] = dot;
                sigma[j * m + i] = dot;
            }
        }
        sigma
    }
}

/// Uniformly random s-subset of {0..m-1}, deterministic given the seed.
pub fn place_signals(m: usize, s: usize, seed: u64) -> Result<Vec<bool>> {
    let mut rng = derive_rng(seed, STREAM_SIGNAL_MASK, 0);
    place_signals_with(m, s, &mut rng)
}

fn place_signals_with(m: usize, s: usize, rng: &mut Pcg64Mcg) -> Result<Vec<bool>> {
    if s > m {
        return Err(Error::invalid("s", format!("{s} signals exceed m = {m}")));
    }
    // partial Fisher-Yates: the first s slots become the sample
    let mut idx: Vec<usize> = (0..m).collect();
    for i in 0..s {
        let j = i + rng.random_range(0..m - i);
        idx.swap(i, j);
    }
    let mut mask = vec![false; m];
    for &i in &idx[..s] {
        mask[i] = true;
    }
    Ok(mask)
}

/// One labeled replicate: raw statistics, p-values, and the signal mask.
#[derive(Debug, Clone)]
pub struct LabeledReplicate {
    pub stats: Vec<f64>,
    pub pvals: PValueVector,
    pub labels: Vec<bool>,
}

/// Draw replicate `rep_index` of the scenario: stats = A + Σ^{1/2} ξ, then
/// the sided conversion to p-values (one-sided upper tail by default).
pub fn draw_replicate(
    config: &SimulationConfig,
    cov: &Covariance,
    rep_index: u64,
) -> Result<LabeledReplicate> {
    if cov.m() != config.m {
        return Err(Error::DimensionMismatch {
            expected: config.m,
            actual: cov.m(),
        });
    }
    let s = config.signal_count();
    let mut mask_rng = derive_rng(config.seed, STREAM_SIGNAL_MASK, rep_index);
    let labels = place_signals_with(config.m, s, &mut mask_rng)?;

    let mut rng = derive_rng(config.seed, STREAM_REPLICATE, rep_index);
    let mut stats = vec![0.0; config.m];
    cov.sample_into(&mut rng, &mut stats);
    for (stat, &is_signal) in stats.iter_mut().zip(&labels) {
        if is_signal {
            *stat += config.mu;
        }
    }

    let raw: Vec<f64> = stats
        .iter()
        .map(|&t| match config.sided {
            Sided::One => normal_sf(t),
            Sided::Two => (2.0 * normal_sf(t.abs())).min(1.0),
        })
        .collect();
    let pvals = PValueVector::new(raw)?;
    Ok(LabeledReplicate {
        stats,
        pvals,
        labels,
    })
}

/// Where signals sit in the ranking: T1 is the length of the all-signal
/// prefix, T2 the rank of the last signal, L = T2 - s the noise interleaved
/// before T2. Undefined (None) when s = 0; the curves are always defined.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleDiagnostics {
    pub t1: Option<usize>,
    pub t2: Option<usize>,
    pub l: Option<usize>,
    /// `fn_curve[k]` = signals ranked after position k, for k = 0..=m.
    pub fn_curve: Vec<usize>,
    /// `fp_curve[k]` = noise ranked at or before position k, for k = 0..=m.
    pub fp_curve: Vec<usize>,
}

pub fn oracle_diagnostics(rep: &LabeledReplicate) -> OracleDiagnostics {
    let m = rep.labels.len();
    let s = rep.labels.iter().filter(|&&b| b).count();
    let ranked: Vec<bool> = rep.pvals.order().iter().map(|&i| rep.labels[i]).collect();

    let mut fn_curve = Vec::with_capacity(m + 1);
    let mut fp_curve = Vec::with_capacity(m + 1);
    let mut seen_signals = 0usize;
    fn_curve.push(s);
    fp_curve.push(0);
    for (k, &is_signal) in ranked.iter().enumerate() {
        if is_signal {
            seen_signals += 1;
        }
        fn_curve.push(s - seen_signals);
        fp_curve.push(k + 1 - seen_signals);
    }

    let (t1, t2, l) = if s == 0 {
        (None, None, None)
    } else {
        let t1 = ranked.iter().take_while(|&&b| b).count();
        let t2 = ranked.iter().rposition(|&b| b).map(|i| i + 1).unwrap();
        (Some(t1), Some(t2), Some(t2 - s))
    };

    OracleDiagnostics {
        t1,
        t2,
        l,
        fn_curve,
        fp_curve,
    }
}
