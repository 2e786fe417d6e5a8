//! Monte Carlo property tests: calibration frequency and monotonicity,
//! estimator consistency, generator distribution checks, and the
//! permutation-null pipeline's uniformity. Seeds are fixed; everything here
//! is deterministic.

mod common;

use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use rayon::prelude::*;

use smr_core::experiment::{calibrate_cm_for_design, default_alpha_m};
use smr_core::io::Matrix;
use smr_core::linalg::cholesky_in_place;
use smr_core::mr::{
    calibrate_cm, calibrate_cm_from_matrix, compute_vm, estimate_pi, CalibrationSource,
    NullCalibration,
};
use smr_core::regression::{permutation_null, DesignData};
use smr_core::rng::derive_rng;
use smr_core::screening::{adsmr_cutoff, CriticalMode, CriticalSequence};
use smr_core::sim::{
    build_block_sigma, draw_replicate, oracle_diagnostics, Covariance, Design, SimulationConfig,
};
use smr_core::{PValueVector, Sided};

/// Fresh null draws exceed the calibrated bound with frequency alpha_m.
#[test]
fn calibration_exceedance_frequency() {
    let m = 5000;
    let alpha_m = default_alpha_m(m).unwrap();
    let cal = calibrate_cm(m, alpha_m, 1000, 7).unwrap();
    assert!(cal.c_m > 0.0 && cal.c_m.is_finite());

    let exceed: usize = (0..10_000u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = derive_rng(991, 71, rep);
            let mut draw: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(Open01)).collect();
            draw.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            let p = PValueVector::new(draw).unwrap();
            usize::from(compute_vm(&p).unwrap() > cal.c_m)
        })
        .sum();
    let freq = exceed as f64 / 10_000.0;
    assert!(
        (freq - alpha_m).abs() <= 0.03,
        "exceedance {freq:.4} vs alpha_m {alpha_m:.4}"
    );
}

/// Matrix calibration on iid rows agrees with the direct simulation route.
#[test]
fn matrix_calibration_matches_iid_route() {
    let m = 500;
    let alpha_m = default_alpha_m(m).unwrap();
    let direct = calibrate_cm(m, alpha_m, 2000, 13).unwrap();

    let rows: Vec<Vec<f64>> = (0..2000u64)
        .map(|rep| {
            let mut rng = derive_rng(515, 72, rep);
            (0..m).map(|_| rng.sample(Open01)).collect()
        })
        .collect();
    let from_matrix =
        calibrate_cm_from_matrix(&Matrix::from_rows(rows).unwrap(), alpha_m).unwrap();
    assert_eq!(from_matrix.source, CalibrationSource::PermutationMatrix);
    assert!(
        (from_matrix.c_m - direct.c_m).abs() < 0.1 * direct.c_m,
        "matrix {:.5} vs direct {:.5}",
        from_matrix.c_m,
        direct.c_m
    );
}

/// m * c_m grows with m (2% slack), on the default alpha_m rule.
#[test]
fn scaled_bound_monotone_in_m() {
    let mut last = 0.0_f64;
    for &m in &[100usize, 1000, 10_000] {
        let alpha_m = default_alpha_m(m).unwrap();
        let cal = calibrate_cm(m, alpha_m, 10_000, 5).unwrap();
        let scaled = m as f64 * cal.c_m;
        assert!(
            scaled >= last * 0.98,
            "m = {m}: m*c_m = {scaled:.3} dropped from {last:.3}"
        );
        last = scaled;
    }
}

/// Under the iid global null the estimator picks up a positive proportion
/// with frequency at most alpha_m (plus binomial slack).
#[test]
fn global_null_positive_rate_bounded() {
    let m = 500;
    let alpha_m = default_alpha_m(m).unwrap();
    let cal = calibrate_cm(m, alpha_m, 1000, 3).unwrap();
    let positives: usize = (0..1000u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = derive_rng(313, 73, rep);
            let draw: Vec<f64> = (0..m).map(|_| rng.sample(Open01)).collect();
            let p = PValueVector::new(draw).unwrap();
            usize::from(estimate_pi(&p, &cal).unwrap().pi_hat > 0.0)
        })
        .sum();
    let bound = alpha_m + 3.0 * (alpha_m / 1000.0).sqrt();
    let freq = positives as f64 / 1000.0;
    assert!(freq <= bound, "positive rate {freq:.3} > {bound:.3}");
}

/// Spiked example: 20 near-zero p-values among 80 uniforms; the estimate is
/// positive, at most the planted fraction, and equals the dense-grid oracle.
#[test]
fn spiked_example_bounded_by_truth() {
    let alpha_m = 1.0 / (100.0_f64.ln()).sqrt();
    let cal = calibrate_cm(100, alpha_m, 1000, 41).unwrap();
    let mut rng = derive_rng(41, 74, 0);
    let values: Vec<f64> = (0..100)
        .map(|i| {
            if i < 20 {
                1e-8
            } else {
                rng.sample::<f64, _>(Open01)
            }
        })
        .collect();
    let p = PValueVector::new(values.clone()).unwrap();
    let est = estimate_pi(&p, &cal).unwrap();
    assert!(est.pi_hat > 0.0 && est.pi_hat <= 0.2, "pi_hat {}", est.pi_hat);
    let oracle = common::oracle_pi(&values, cal.c_m);
    assert!((est.pi_hat - oracle).abs() <= 1e-6);
}

/// Sparse-signal consistency on the strong-signal block design.
#[test]
fn sparse_signal_ratio_consistency() {
    let config = SimulationConfig {
        m: 5000,
        pi: 0.02,
        mu: 6.5,
        design: Design::Block { l: 50, rho: 0.7 },
        sided: Sided::One,
        n_reps: 100,
        seed: 37,
    };
    let cov = config.build_covariance().unwrap();
    let alpha_m = default_alpha_m(config.m).unwrap();
    let cal =
        calibrate_cm_for_design(config.m, alpha_m, 1000, config.seed, &cov, config.sided).unwrap();
    let ratios: Vec<f64> = (0..100u64)
        .into_par_iter()
        .map(|rep| {
            let r = draw_replicate(&config, &cov, rep).unwrap();
            estimate_pi(&r.pvals, &cal).unwrap().pi_hat / config.pi
        })
        .collect();
    let mut sorted = ratios.clone();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let median = 0.5 * (sorted[49] + sorted[50]);
    assert!(median > 0.5 && median <= 1.0, "median ratio {median:.3}");
    // at pi = 0.02 a dependence clump is a large fraction of the signal
    // mass, so the one-sided undershoot frequency sits near 3/4 here
    // (measured 74-77/100 across seeds), well below the ~4/5 seen at
    // pi = 0.1
    let below = ratios.iter().filter(|&&r| r <= 1.0).count();
    assert!(below >= 70, "pi_hat <= pi in only {below}/100");
}

/// Degenerate all-noise scenario: pooled p-values are uniform.
#[test]
fn null_pvalues_uniform_ks() {
    let config = SimulationConfig {
        m: 5000,
        pi: 0.0,
        mu: 0.0,
        design: Design::Block { l: 1, rho: 0.0 },
        sided: Sided::One,
        n_reps: 100,
        seed: 53,
    };
    let cov = config.build_covariance().unwrap();
    let mut pooled = Vec::with_capacity(500_000);
    for rep in 0..100u64 {
        let r = draw_replicate(&config, &cov, rep).unwrap();
        pooled.extend_from_slice(r.pvals.values());
    }
    let ks = common::ks_statistic(&pooled);
    assert!(ks < 0.01, "pooled KS = {ks:.5}");
}

/// Within-block correlation of drawn statistics sits at the target.
#[test]
fn block_correlation_moment_check() {
    let config = SimulationConfig {
        m: 200,
        pi: 0.0,
        mu: 0.0,
        design: Design::Block { l: 50, rho: 0.7 },
        sided: Sided::One,
        n_reps: 2000,
        seed: 61,
    };
    let cov = config.build_covariance().unwrap();
    let (mut sxy, mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let n = 2000u64;
    for rep in 0..n {
        let r = draw_replicate(&config, &cov, rep).unwrap();
        let (a, b) = (r.stats[7], r.stats[31]); // same block of 50
        sx += a;
        sy += b;
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    let nf = n as f64;
    let cov_ab = sxy / nf - (sx / nf) * (sy / nf);
    let va = sxx / nf - (sx / nf).powi(2);
    let vb = syy / nf - (sy / nf).powi(2);
    let corr = cov_ab / (va * vb).sqrt();
    assert!((corr - 0.7).abs() < 0.05, "within-block corr {corr:.4}");
}

/// Per-block sampling agrees with sampling through a dense factorization of
/// the same matrix: first two moments match within Monte Carlo error.
#[test]
fn per_block_equals_dense_factorization_in_moments() {
    let m = 100;
    let block = build_block_sigma(m, 10, 0.6).unwrap();
    let cov = Covariance::Block(block);
    let mut dense = cov.dense();
    cholesky_in_place(&mut dense, m).unwrap();

    let reps = 5000u64;
    let (mut mean_a, mut cov_a) = (vec![0.0; m], 0.0);
    let (mut mean_b, mut cov_b) = (vec![0.0; m], 0.0);
    let mut buf = vec![0.0; m];
    for rep in 0..reps {
        let mut rng = derive_rng(77, 75, rep);
        cov.sample_into(&mut rng, &mut buf);
        for (acc, v) in mean_a.iter_mut().zip(&buf) {
            *acc += v;
        }
        cov_a += buf[2] * buf[7]; // same block

        let mut rng = derive_rng(78, 75, rep);
        let xi: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        for i in 0..m {
            let mut acc = 0.0;
            for k in 0..=i {
                acc += dense[i * m + k] * xi[k];
            }
            buf[i] = acc;
        }
        for (acc, v) in mean_b.iter_mut().zip(&buf) {
            *acc += v;
        }
        cov_b += buf[2] * buf[7];
    }
    let nf = reps as f64;
    let max_mean_gap = mean_a
        .iter()
        .zip(&mean_b)
        .map(|(a, b)| ((a - b) / nf).abs())
        .fold(0.0, f64::max);
    // sd of a mean estimate is 1/sqrt(reps) ~ 0.014
    assert!(max_mean_gap < 0.06, "mean gap {max_mean_gap:.4}");
    assert!(
        (cov_a / nf - cov_b / nf).abs() < 0.06,
        "cov gap {:.4} vs {:.4}",
        cov_a / nf,
        cov_b / nf
    );
}

/// The shared per-block Cholesky factor matches a naive dense factorization
/// of one exchangeable block.
#[test]
fn block_factor_matches_dense_oracle() {
    let l = 50;
    let rho = 0.7;
    let sigma = build_block_sigma(200, l, rho).unwrap();
    let mut dense = vec![rho; l * l];
    for i in 0..l {
        dense[i * l + i] = 1.0;
    }
    // naive oracle factorization, written independently
    let mut oracle = vec![0.0; l * l];
    for i in 0..l {
        for j in 0..=i {
            let mut sum = dense[i * l + j];
            for k in 0..j {
                sum -= oracle[i * l + k] * oracle[j * l + k];
            }
            if i == j {
                oracle[i * l + i] = sum.sqrt();
            } else {
                oracle[i * l + j] = sum / oracle[j * l + j];
            }
        }
    }
    let factor = sigma.block_factor();
    let mut worst = 0.0_f64;
    for i in 0..l {
        for j in 0..=i {
            worst = worst.max((factor[i * l + j] - oracle[i * l + j]).abs());
        }
    }
    assert!(worst < 1e-10, "factor deviation {worst:.2e}");
}

/// The adaptive cutoff rarely overshoots far beyond the last signal.
#[test]
fn cutoff_stays_near_last_signal_rank() {
    let config = SimulationConfig {
        m: 2000,
        pi: 0.1,
        mu: 6.5,
        design: Design::Block { l: 50, rho: 0.7 },
        sided: Sided::One,
        n_reps: 50,
        seed: 67,
    };
    let cov = config.build_covariance().unwrap();
    let alpha_m = default_alpha_m(config.m).unwrap();
    let cal =
        calibrate_cm_for_design(config.m, alpha_m, 1000, config.seed, &cov, config.sided).unwrap();
    let ratios: Vec<f64> = (0..50u64)
        .into_par_iter()
        .map(|rep| {
            let r = draw_replicate(&config, &cov, rep).unwrap();
            let est = estimate_pi(&r.pvals, &cal).unwrap();
            let seq =
                CriticalSequence::new(CriticalMode::RatioApproximation, config.m, est.s_hat)
                    .unwrap();
            let k = adsmr_cutoff(&r.pvals, est.s_hat, alpha_m, &seq)
                .unwrap()
                .k_star as f64;
            k / oracle_diagnostics(&r).t2.unwrap() as f64
        })
        .collect();
    // the no-far-overshoot property holds for the bulk at this desk scale
    // (measured: 86-92% of replicates under 1.25 T2 across seeds)
    let within = ratios.iter().filter(|&&x| x <= 1.25).count();
    assert!(within >= 38, "k* <= 1.25 T2 in only {within}/50 replicates");
    let mut sorted = ratios;
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let median = 0.5 * (sorted[24] + sorted[25]);
    assert!(median <= 1.1, "median k*/T2 = {median:.3}");
}

/// Null p-values from phenotype permutations are uniform when the phenotype
/// is independent of every variable.
#[test]
fn permutation_null_rows_uniform() {
    let n = 100;
    let m = 200;
    let mut rng = derive_rng(83, 76, 0);
    let w_rows: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![1.0, rng.sample(StandardNormal)])
        .collect();
    let x_rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..m).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let data = DesignData::new(
        y,
        Matrix::from_rows(w_rows).unwrap(),
        Matrix::from_rows(x_rows).unwrap(),
    )
    .unwrap();
    let nulls = permutation_null(&data, 500, 19).unwrap();
    let ks = common::ks_statistic(&nulls.data);
    assert!(ks < 0.02, "pooled permutation-null KS = {ks:.5}");
}

/// The design-null calibration rejects mismatched dimensions and undersized
/// runs like the iid route does.
#[test]
fn design_calibration_validation() {
    let cov = Covariance::Block(build_block_sigma(100, 10, 0.5).unwrap());
    assert!(calibrate_cm_for_design(100, 0.3, 10, 1, &cov, Sided::One).is_err());
    assert!(calibrate_cm_for_design(50, 0.3, 200, 1, &cov, Sided::One).is_err());
    let cal = calibrate_cm_for_design(100, 0.3, 200, 1, &cov, Sided::One).unwrap();
    assert_eq!(cal.source, CalibrationSource::SimulatedDesignNull);
    assert!(cal.c_m > 0.0);
}

/// pi_hat always lands in [0, 1) and s_hat in [0, m-1].
#[test]
fn estimate_range_invariants() {
    let cal = NullCalibration {
        m: 40,
        alpha_m: 0.3,
        c_m: 0.05,
        n_reps: 1000,
        seed: Some(0),
        source: CalibrationSource::SimulatedUniform,
    };
    for seed in 0..50u64 {
        let mut rng = derive_rng(seed, 77, 0);
        let values: Vec<f64> = (0..40)
            .map(|i| {
                if i % 7 == 0 {
                    0.0
                } else {
                    rng.sample(Open01)
                }
            })
            .collect();
        let p = PValueVector::new(values).unwrap();
        let est = estimate_pi(&p, &cal).unwrap();
        assert!((0.0..1.0).contains(&est.pi_hat));
        assert!(est.s_hat < 40);
        assert!(est.t_star > 0.0 && est.t_star < 1.0);
        if est.pi_hat > 0.0 {
            assert_eq!(est.pi_hat, est.objective);
        }
    }
}
