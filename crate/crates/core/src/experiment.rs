//! Scenario grid runner: simulate labeled replicates, apply the configured
//! screening procedures, and aggregate metrics per scenario.
//!
//! Each design gets one bounding-sequence calibration against its own
//! all-noise distribution, shared across the design's (pi, mu) cells. The
//! whole grid runs off a single root seed, so replicate r sees common random
//! numbers across scenarios; that sharpens cross-scenario comparisons without
//! coupling replicates to each other.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lfdr::{estimate_lfdr, mdr_cutoff, zscores_from_pvalues};
use crate::metrics::{aggregate, confusion, empirical_smr, ReplicateMetrics, SummaryRow};
use crate::mr::{
    compute_vm, estimate_pi, type7_quantile, CalibrationSource, NullCalibration, PiEstimate,
    MIN_NULL_REPS,
};
use crate::pvalues::{PValueVector, Sided};
use crate::rng::{derive_rng, STREAM_DESIGN_NULL};
use crate::screening::{
    adsmr_cutoff, bh_select, cvsmr_cutoff, CriticalMode, CriticalSequence, ScreeningResult,
};
use crate::sim::{draw_replicate, Covariance, Design, SimulationConfig};
use crate::special::normal_sf;

/// Default alpha_m rule, 1/sqrt(ln m); valid for m >= 3.
pub fn default_alpha_m(m: usize) -> Result<f64> {
    let v = 1.0 / (m as f64).ln().sqrt();
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::invalid(
            "m",
            format!("default alpha_m = 1/sqrt(ln m) is {v} at m = {m}; needs m >= 3"),
        ));
    }
    Ok(v)
}

/// Recommended level for the MDR comparator, 1/ln m.
pub fn default_mdr_beta(m: usize) -> f64 {
    1.0 / (m as f64).ln()
}

/// A screening procedure plus its level parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "procedure", rename_all = "lowercase")]
pub enum ProcedureSpec {
    AdSmr {
        #[serde(default)]
        exact_beta_median: bool,
    },
    CvSmr {
        alpha: f64,
    },
    Bh {
        q: f64,
    },
    Mdr {
        #[serde(default)]
        beta: Option<f64>,
    },
}

impl ProcedureSpec {
    pub fn label(&self) -> String {
        match self {
            ProcedureSpec::AdSmr {
                exact_beta_median: false,
            } => "adsmr".into(),
            ProcedureSpec::AdSmr {
                exact_beta_median: true,
            } => "adsmr-exact".into(),
            ProcedureSpec::CvSmr { alpha } => format!("cvsmr@{alpha}"),
            ProcedureSpec::Bh { q } => format!("bh@{q}"),
            ProcedureSpec::Mdr { beta: None } => "mdr".into(),
            ProcedureSpec::Mdr { beta: Some(b) } => format!("mdr@{b}"),
        }
    }
}

/// The full simulation grid: designs x pis x mus, all procedures per cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub schema_version: u32,
    pub m: usize,
    pub designs: Vec<Design>,
    pub pis: Vec<f64>,
    pub mus: Vec<f64>,
    #[serde(default = "default_sided")]
    pub sided: Sided,
    pub n_reps: usize,
    pub seed: u64,
    pub procedures: Vec<ProcedureSpec>,
    /// Defaults to 1/sqrt(ln m) when absent.
    #[serde(default)]
    pub alpha_m: Option<f64>,
    #[serde(default = "default_calibration_reps")]
    pub calibration_reps: usize,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    /// When set, the CLI also dumps raw replicate statistics per scenario.
    #[serde(default)]
    pub dump_replicates: bool,
}

fn default_sided() -> Sided {
    Sided::One
}

fn default_calibration_reps() -> usize {
    1000
}

fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.2, 0.3]
}

impl GridConfig {
    /// Collect every schema violation at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.schema_version != 1 {
            bad.push(format!(
                "schema_version: expected 1, got {}",
                self.schema_version
            ));
        }
        if self.m < 3 {
            bad.push(format!("m: {} is below the minimum of 3", self.m));
        }
        if self.designs.is_empty() {
            bad.push("designs: empty".into());
        }
        if self.pis.is_empty() {
            bad.push("pis: empty".into());
        }
        if self.mus.is_empty() {
            bad.push("mus: empty".into());
        }
        if self.procedures.is_empty() {
            bad.push("procedures: empty".into());
        }
        for (i, &pi) in self.pis.iter().enumerate() {
            if !(0.0..1.0).contains(&pi) {
                bad.push(format!("pis[{i}]: {pi} is not in [0, 1)"));
            }
        }
        for (i, &mu) in self.mus.iter().enumerate() {
            if !(mu >= 0.0 && mu.is_finite()) {
                bad.push(format!("mus[{i}]: {mu} must be >= 0"));
            }
        }
        if self.n_reps == 0 {
            bad.push("n_reps: must be >= 1".into());
        }
        if self.calibration_reps < crate::mr::MIN_NULL_REPS {
            bad.push(format!(
                "calibration_reps: {} is below the minimum of {}",
                self.calibration_reps,
                crate::mr::MIN_NULL_REPS
            ));
        }
        if let Some(a) = self.alpha_m {
            if !(a > 0.0 && a < 1.0) {
                bad.push(format!("alpha_m: {a} is not in (0, 1)"));
            }
        }
        for (i, &e) in self.epsilons.iter().enumerate() {
            if !(e > 0.0 && e < 1.0) {
                bad.push(format!("epsilons[{i}]: {e} is not in (0, 1)"));
            }
        }
        for (i, d) in self.designs.iter().enumerate() {
            let scratch = SimulationConfig {
                m: self.m,
                pi: 0.0,
                mu: 0.0,
                design: d.clone(),
                sided: self.sided,
                n_reps: 1,
                seed: self.seed,
            };
            if let Err(e) = scratch.validate() {
                bad.push(format!("designs[{i}]: {e}"));
            }
        }
        for (i, p) in self.procedures.iter().enumerate() {
            let level = match p {
                ProcedureSpec::CvSmr { alpha } => Some(("alpha", *alpha)),
                ProcedureSpec::Bh { q } => Some(("q", *q)),
                ProcedureSpec::Mdr { beta: Some(b) } => Some(("beta", *b)),
                _ => None,
            };
            if let Some((name, v)) = level {
                if !(v > 0.0 && v < 1.0) {
                    bad.push(format!("procedures[{i}].{name}: {v} is not in (0, 1)"));
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(bad.join("; ")))
        }
    }
}

/// Cross-replicate outcome of one procedure in one scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcedureOutcome {
    pub label: String,
    pub summary: Vec<SummaryRow>,
    /// (epsilon, empirical signal-missing rate) pairs.
    pub smr: Vec<(f64, f64)>,
    #[serde(skip)]
    pub metrics: Vec<ReplicateMetrics>,
}

impl ProcedureOutcome {
    pub fn stat(&self, metric: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.metric == metric)
    }

    pub fn mean_k_star(&self) -> f64 {
        self.stat("k_star").map(|r| r.mean).unwrap_or(f64::NAN)
    }

    pub fn median_fdp(&self) -> f64 {
        self.stat("fdp").map(|r| r.median).unwrap_or(f64::NAN)
    }

    pub fn median_fn_prop(&self) -> f64 {
        self.stat("fn_prop").map(|r| r.median).unwrap_or(f64::NAN)
    }

    pub fn smr_at(&self, epsilon: f64) -> Option<f64> {
        self.smr
            .iter()
            .find(|(e, _)| (*e - epsilon).abs() < 1e-12)
            .map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub design: Design,
    pub pi: f64,
    pub mu: f64,
    pub sided: Sided,
    /// Proportion estimates per replicate (procedure-independent).
    pub pi_hats: Vec<f64>,
    pub procedures: Vec<ProcedureOutcome>,
}

impl ScenarioResult {
    pub fn id(&self) -> String {
        let sided = match self.sided {
            Sided::One => "one",
            Sided::Two => "two",
        };
        format!(
            "{},pi={},mu={},sided={}",
            self.design.label(),
            self.pi,
            self.mu,
            sided
        )
    }

    pub fn procedure(&self, label: &str) -> Option<&ProcedureOutcome> {
        self.procedures.iter().find(|p| p.label == label)
    }
}

/// Bounding sequence calibrated against a design's own all-noise draws, so
/// dependence inflates c_m exactly as it inflates the data's V_m. For an
/// identity covariance this reduces (in distribution) to the iid-uniform
/// calibration of [`crate::mr::calibrate_cm`].
pub fn calibrate_cm_for_design(
    m: usize,
    alpha_m: f64,
    n_reps: usize,
    seed: u64,
    cov: &Covariance,
    sided: Sided,
) -> Result<NullCalibration> {
    if !(alpha_m > 0.0 && alpha_m < 1.0) {
        return Err(Error::invalid(
            "alpha_m",
            format!("{alpha_m} is not in (0, 1)"),
        ));
    }
    if n_reps < MIN_NULL_REPS {
        return Err(Error::InsufficientReplicates {
            got: n_reps,
            min: MIN_NULL_REPS,
        });
    }
    if cov.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: cov.m(),
        });
    }
    let mut samples: Vec<f64> = (0..n_reps as u64)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let mut rng = derive_rng(seed, STREAM_DESIGN_NULL, rep);
            let mut stats = vec![0.0; m];
            cov.sample_into(&mut rng, &mut stats);
            let raw: Vec<f64> = stats
                .iter()
                .map(|&t| match sided {
                    Sided::One => normal_sf(t),
                    Sided::Two => (2.0 * normal_sf(t.abs())).min(1.0),
                })
                .collect();
            compute_vm(&PValueVector::new(raw)?)
        })
        .collect::<Result<_>>()?;
    samples.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(NullCalibration {
        m,
        alpha_m,
        c_m: type7_quantile(&samples, 1.0 - alpha_m),
        n_reps,
        seed: Some(seed),
        source: CalibrationSource::SimulatedDesignNull,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridResult {
    pub alpha_m: f64,
    /// One calibration per design, labeled.
    pub calibrations: Vec<(String, NullCalibration)>,
    pub scenarios: Vec<ScenarioResult>,
}

impl GridResult {
    pub fn scenario(&self, design: &Design, pi: f64, mu: f64) -> Option<&ScenarioResult> {
        self.scenarios.iter().find(|s| {
            s.design == *design && (s.pi - pi).abs() < 1e-12 && (s.mu - mu).abs() < 1e-12
        })
    }

    /// TSV with one row per (scenario, procedure, metric).
    pub fn summary_tsv(&self) -> String {
        let mut out = String::from("scenario\tprocedure\tmetric\tmedian\tmean\tsd\n");
        for s in &self.scenarios {
            for p in &s.procedures {
                for row in &p.summary {
                    out.push_str(&format!(
                        "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\n",
                        s.id(),
                        p.label,
                        row.metric,
                        row.median,
                        row.mean,
                        row.sd
                    ));
                }
            }
        }
        out
    }

    /// TSV with one row per (scenario, procedure, epsilon).
    pub fn smr_tsv(&self) -> String {
        let mut out = String::from("scenario\tprocedure\tepsilon\tsmr\n");
        for s in &self.scenarios {
            for p in &s.procedures {
                for (eps, v) in &p.smr {
                    out.push_str(&format!("{}\t{}\t{}\t{:.6}\n", s.id(), p.label, eps, v));
                }
            }
        }
        out
    }
}

/// Apply one procedure to one replicate's p-values given the shared
/// proportion estimate.
pub fn run_procedure(
    spec: &ProcedureSpec,
    pvals: &PValueVector,
    est: &PiEstimate,
    alpha_m: f64,
    sided: Sided,
) -> Result<ScreeningResult> {
    match spec {
        ProcedureSpec::AdSmr { exact_beta_median } => {
            let mode = if *exact_beta_median {
                CriticalMode::ExactBetaMedian
            } else {
                CriticalMode::RatioApproximation
            };
            let seq = CriticalSequence::new(mode, pvals.len(), est.s_hat)?;
            adsmr_cutoff(pvals, est.s_hat, alpha_m, &seq)
        }
        ProcedureSpec::CvSmr { alpha } => cvsmr_cutoff(pvals, est.s_hat, *alpha, alpha_m),
        ProcedureSpec::Bh { q } => bh_select(pvals, *q),
        ProcedureSpec::Mdr { beta } => {
            let z = zscores_from_pvalues(pvals, sided);
            let lfdr = estimate_lfdr(&z, 1.0 - est.pi_hat)?;
            mdr_cutoff(&lfdr, est.s_hat, beta.unwrap_or(default_mdr_beta(pvals.len())))
        }
    }
}

/// Run the whole grid. Deterministic given the config; replicates run in
/// parallel on derived streams.
pub fn run_grid(config: &GridConfig) -> Result<GridResult> {
    config.validate()?;
    let alpha_m = match config.alpha_m {
        Some(a) => a,
        None => default_alpha_m(config.m)?,
    };

    let mut calibrations = Vec::new();
    let mut scenarios = Vec::new();
    for design in &config.designs {
        let cov = SimulationConfig {
            m: config.m,
            pi: 0.0,
            mu: 0.0,
            design: design.clone(),
            sided: config.sided,
            n_reps: config.n_reps,
            seed: config.seed,
        }
        .build_covariance()?;
        let calibration = calibrate_cm_for_design(
            config.m,
            alpha_m,
            config.calibration_reps,
            config.seed,
            &cov,
            config.sided,
        )?;
        calibrations.push((design.label(), calibration.clone()));

        for &pi in &config.pis {
            for &mu in &config.mus {
                let scen = SimulationConfig {
                    m: config.m,
                    pi,
                    mu,
                    design: design.clone(),
                    sided: config.sided,
                    n_reps: config.n_reps,
                    seed: config.seed,
                };
                let per_rep: Vec<(f64, Vec<ReplicateMetrics>)> = (0..config.n_reps as u64)
                    .into_par_iter()
                    .map(|rep| -> Result<(f64, Vec<ReplicateMetrics>)> {
                        let replicate = draw_replicate(&scen, &cov, rep)?;
                        let est = estimate_pi(&replicate.pvals, &calibration)?;
                        let mut row = Vec::with_capacity(config.procedures.len());
                        for spec in &config.procedures {
                            let result =
                                run_procedure(spec, &replicate.pvals, &est, alpha_m, config.sided)?;
                            row.push(confusion(&result, &replicate.labels));
                        }
                        Ok((est.pi_hat, row))
                    })
                    .collect::<Result<_>>()?;

                let pi_hats: Vec<f64> = per_rep.iter().map(|(p, _)| *p).collect();
                let mut procedures = Vec::with_capacity(config.procedures.len());
                for (idx, spec) in config.procedures.iter().enumerate() {
                    let metrics: Vec<ReplicateMetrics> =
                        per_rep.iter().map(|(_, row)| row[idx].clone()).collect();
                    let summary = aggregate(&metrics)?;
                    let fn_props: Vec<f64> = metrics.iter().map(|m| m.fn_prop).collect();
                    let smr = config
                        .epsilons
                        .iter()
                        .map(|&e| Ok((e, empirical_smr(&fn_props, e)?)))
                        .collect::<Result<Vec<_>>>()?;
                    procedures.push(ProcedureOutcome {
                        label: spec.label(),
                        summary,
                        smr,
                        metrics,
                    });
                }
                scenarios.push(ScenarioResult {
                    design: design.clone(),
                    pi,
                    mu,
                    sided: config.sided,
                    pi_hats,
                    procedures,
                });
            }
        }
    }

    Ok(GridResult {
        alpha_m,
        calibrations,
        scenarios,
    })
}

/// Scale presets for the canned benchmark grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReproScale {
    Paper,
    Desk,
}

/// Reference means for the cutoff-comparison benchmark (block design,
/// m = 5000, s = 250), used by `reproduce --table 2`.
pub const CUTOFF_BENCH_MUS: [f64; 3] = [3.5, 4.5, 5.5];
pub const CUTOFF_BENCH_ADSMR_MEANS: [f64; 3] = [348.0, 300.0, 288.0];
pub const CUTOFF_BENCH_CVSMR_MEANS: [f64; 3] = [5000.0, 5000.0, 4905.0];

/// Reference grid for the empirical signal-missing-rate benchmark
/// (block design, m = 5000, pi = 0.02), used by `reproduce --table 4`.
/// Rows follow `SMR_BENCH_EPSILONS`, columns follow `SMR_BENCH_MUS`.
pub const SMR_BENCH_MUS: [f64; 5] = [4.5, 5.0, 5.5, 6.0, 6.5];
pub const SMR_BENCH_EPSILONS: [f64; 3] = [0.1, 0.2, 0.3];
pub const SMR_BENCH_REFERENCE: [[f64; 5]; 3] = [
    [0.65, 0.43, 0.03, 0.0, 0.0],
    [0.29, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0],
];

/// Canned grid behind `reproduce --table 2`.
pub fn cutoff_bench_grid(scale: ReproScale, sided: Sided, seed: u64) -> GridConfig {
    let (m, n_reps) = match scale {
        ReproScale::Paper => (5000, 100),
        ReproScale::Desk => (2000, 50),
    };
    GridConfig {
        schema_version: 1,
        m,
        designs: vec![Design::Block { l: 50, rho: 0.7 }],
        pis: vec![0.05],
        mus: CUTOFF_BENCH_MUS.to_vec(),
        sided,
        n_reps,
        seed,
        procedures: vec![
            ProcedureSpec::AdSmr {
                exact_beta_median: false,
            },
            ProcedureSpec::CvSmr { alpha: 0.1 },
        ],
        alpha_m: None,
        calibration_reps: 1000,
        epsilons: default_epsilons(),
        dump_replicates: false,
    }
}

/// Canned grid behind `reproduce --table 4`.
pub fn smr_bench_grid(scale: ReproScale, sided: Sided, seed: u64) -> GridConfig {
    let (m, n_reps) = match scale {
        ReproScale::Paper => (5000, 100),
        ReproScale::Desk => (2000, 50),
    };
    GridConfig {
        schema_version: 1,
        m,
        designs: vec![Design::Block { l: 50, rho: 0.7 }],
        pis: vec![0.02],
        mus: SMR_BENCH_MUS.to_vec(),
        sided,
        n_reps,
        seed,
        procedures: vec![ProcedureSpec::AdSmr {
            exact_beta_median: false,
        }],
        alpha_m: None,
        calibration_reps: 1000,
        epsilons: SMR_BENCH_EPSILONS.to_vec(),
        dump_replicates: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> GridConfig {
        GridConfig {
            schema_version: 1,
            m: 120,
            designs: vec![Design::Block { l: 10, rho: 0.5 }],
            pis: vec![0.1],
            mus: vec![4.0],
            sided: Sided::One,
            n_reps: 4,
            seed: 5,
            procedures: vec![
                ProcedureSpec::AdSmr {
                    exact_beta_median: false,
                },
                ProcedureSpec::Bh { q: 0.5 },
            ],
            alpha_m: None,
            calibration_reps: 200,
            epsilons: vec![0.1],
            dump_replicates: false,
        }
    }

    #[test]
    fn grid_runs_and_is_deterministic() {
        let config = tiny_config();
        let a = run_grid(&config).unwrap();
        let b = run_grid(&config).unwrap();
        assert_eq!(a.summary_tsv(), b.summary_tsv());
        assert_eq!(a.smr_tsv(), b.smr_tsv());
        assert_eq!(a.scenarios.len(), 1);
        assert_eq!(a.scenarios[0].procedures.len(), 2);
        assert_eq!(a.scenarios[0].pi_hats.len(), 4);
    }

    #[test]
    fn validation_collects_all_violations() {
        let mut config = tiny_config();
        config.schema_version = 9;
        config.pis = vec![1.5];
        config.n_reps = 0;
        let err = config.validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("schema_version"), "{msg}");
        assert!(msg.contains("pis[0]"), "{msg}");
        assert!(msg.contains("n_reps"), "{msg}");
    }

    #[test]
    fn config_json_round_trip() {
        let config = tiny_config();
        let text = serde_json::to_string(&config).unwrap();
        let back: GridConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.m, config.m);
        assert_eq!(back.procedures, config.procedures);
        // unknown fields are schema violations
        let bad = text.replace("\"m\":120", "\"m\":120,\"bogus\":1");
        assert!(serde_json::from_str::<GridConfig>(&bad).is_err());
    }

    #[test]
    fn default_levels() {
        let a = default_alpha_m(5000).unwrap();
        assert!((a - 0.3427).abs() < 1e-3);
        assert!(default_alpha_m(2).is_err());
        assert!((default_mdr_beta(5000) - 1.0 / 5000.0_f64.ln()).abs() < 1e-15);
    }
}
