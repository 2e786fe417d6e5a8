//! `smr calibrate`: simulate (or ingest) the bounding sequence c_m.

use std::path::PathBuf;

use clap::Args;

use smr_core::io;
use smr_core::mr::{calibrate_cm, calibrate_cm_from_matrix};

use crate::util::{resolve_alpha_m, usage, CliResult};

#[derive(Args)]
pub struct CalibrateArgs {
    /// Number of variables (required unless --null-matrix is given)
    #[arg(long)]
    m: Option<usize>,

    /// Quantile level; defaults to 1/sqrt(ln m)
    #[arg(long = "alpha-m")]
    alpha_m: Option<f64>,

    /// Null replicates to simulate
    #[arg(long, default_value_t = 1000)]
    reps: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Calibrate from a stored matrix of null p-values (binary + sidecar)
    /// instead of simulating iid uniforms
    #[arg(long = "null-matrix")]
    null_matrix: Option<PathBuf>,

    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: CalibrateArgs) -> CliResult {
    let cal = match &args.null_matrix {
        Some(path) => {
            let matrix = io::read_matrix(path)?;
            let alpha_m = resolve_alpha_m(matrix.cols, args.alpha_m)?;
            calibrate_cm_from_matrix(&matrix, alpha_m)?
        }
        None => {
            let m = args
                .m
                .ok_or_else(|| usage("either --m or --null-matrix is required"))?;
            let alpha_m = resolve_alpha_m(m, args.alpha_m)?;
            calibrate_cm(m, alpha_m, args.reps, args.seed)?
        }
    };
    io::write_json(&args.out, &cal)?;
    println!(
        "calibrated m={} alpha_m={:.6} c_m={:.6} -> {}",
        cal.m,
        cal.alpha_m,
        cal.c_m,
        args.out.display()
    );
    Ok(())
}
