//! `smr screen`: run one screening procedure over a p-value file.

use std::path::PathBuf;

use clap::{Args, ValueEnum};

use smr_core::experiment::default_mdr_beta;
use smr_core::io;
use smr_core::lfdr::{estimate_lfdr, mdr_cutoff, zscores_from_pvalues};
use smr_core::mr::{estimate_pi, NullCalibration};
use smr_core::screening::{
    adsmr_cutoff, bh_select, cvsmr_cutoff, CriticalMode, CriticalSequence,
};
use smr_core::PValueVector;

use crate::util::{resolve_alpha_m, usage, CliResult};
use crate::SidedArg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProcedureArg {
    Adsmr,
    Cvsmr,
    Bh,
    Mdr,
}

#[derive(Args)]
pub struct ScreenArgs {
    #[arg(long)]
    pvals: PathBuf,

    #[arg(long, value_enum)]
    procedure: ProcedureArg,

    /// NullCalibration JSON; required unless --force-s-hat is given or the
    /// procedure is bh
    #[arg(long)]
    cal: Option<PathBuf>,

    /// cvSMR control level
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,

    /// Step-up nominal level
    #[arg(long, default_value_t = 0.5)]
    q: f64,

    /// MDR level; defaults to 1/ln m
    #[arg(long)]
    beta: Option<f64>,

    /// t1-guard level; defaults to 1/sqrt(ln m)
    #[arg(long = "alpha-m")]
    alpha_m: Option<f64>,

    /// How the p-values were produced (drives the z-score bridge for mdr)
    #[arg(long, value_enum, default_value_t = SidedArg::Two)]
    sided: SidedArg,

    /// Use exact beta-median critical values instead of j/(m - s_hat)
    #[arg(long = "exact-beta-median", default_value_t = false)]
    exact_beta_median: bool,

    /// Bypass proportion estimation with a fixed signal count
    #[arg(long = "force-s-hat")]
    force_s_hat: Option<usize>,

    /// ScreeningResult JSON path (stdout when omitted)
    #[arg(long = "out-json")]
    out_json: Option<PathBuf>,

    /// Ranked selection TSV path
    #[arg(long = "out-tsv")]
    out_tsv: Option<PathBuf>,
}

pub fn run(args: ScreenArgs) -> CliResult {
    let values = io::read_pvalues(&args.pvals)?;
    let p = PValueVector::new(values)?;
    let m = p.len();
    let alpha_m = resolve_alpha_m(m, args.alpha_m)?;

    // s_hat: forced, or estimated against the calibration
    let (s_hat, pi_hat, s_hat_source) = match (args.force_s_hat, &args.cal) {
        (Some(s), _) => {
            if s >= m {
                return Err(usage(format!("--force-s-hat {s} must be < m = {m}")));
            }
            (s, None, "forced")
        }
        (None, Some(cal_path)) => {
            let cal: NullCalibration = io::read_json(cal_path)?;
            cal.validate()?;
            let est = estimate_pi(&p, &cal)?;
            (est.s_hat, Some(est.pi_hat), "mr-estimate")
        }
        (None, None) => {
            if args.procedure == ProcedureArg::Bh {
                (0, None, "unused")
            } else {
                return Err(usage(
                    "--cal is required unless --force-s-hat is given (or --procedure bh)",
                ));
            }
        }
    };

    let mut result = match args.procedure {
        ProcedureArg::Adsmr => {
            let mode = if args.exact_beta_median {
                CriticalMode::ExactBetaMedian
            } else {
                CriticalMode::RatioApproximation
            };
            let seq = CriticalSequence::new(mode, m, s_hat)?;
            adsmr_cutoff(&p, s_hat, alpha_m, &seq)?
        }
        ProcedureArg::Cvsmr => cvsmr_cutoff(&p, s_hat, args.alpha, alpha_m)?,
        ProcedureArg::Bh => bh_select(&p, args.q)?,
        ProcedureArg::Mdr => {
            let z = zscores_from_pvalues(&p, args.sided.into());
            let pi0 = 1.0 - pi_hat.unwrap_or(s_hat as f64 / m as f64);
            let lfdr = estimate_lfdr(&z, pi0.clamp(f64::MIN_POSITIVE, 1.0))?;
            mdr_cutoff(&lfdr, s_hat, args.beta.unwrap_or(default_mdr_beta(m)))?
        }
    };
    result
        .params
        .insert("s_hat_source".into(), s_hat_source.into());
    if let Some(pi) = pi_hat {
        result.params.insert("pi_hat".into(), pi.into());
    }

    match &args.out_json {
        Some(path) => {
            io::write_json(path, &result)?;
            println!(
                "{:?}: k_star={} selected={} -> {}",
                result.procedure,
                result.k_star,
                result.selected.len(),
                path.display()
            );
        }
        None => println!(
            "{}",
            serde_json::to_string_pretty(&result).expect("serializable")
        ),
    }
    if let Some(path) = &args.out_tsv {
        std::fs::write(path, result.selection_tsv(&p))
            .map_err(|e| crate::util::CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}
