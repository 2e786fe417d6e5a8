//! `smr estimate`: signal-proportion estimate for a p-value list.

use std::path::PathBuf;

use clap::Args;

use smr_core::io;
use smr_core::mr::{estimate_pi, NullCalibration};
use smr_core::PValueVector;

use crate::util::CliResult;

#[derive(Args)]
pub struct EstimateArgs {
    /// P-value file: one decimal per line, or single-column CSV with header p
    #[arg(long)]
    pvals: PathBuf,

    /// NullCalibration JSON from `smr calibrate`
    #[arg(long)]
    cal: PathBuf,

    /// Output JSON path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: EstimateArgs) -> CliResult {
    let values = io::read_pvalues(&args.pvals)?;
    let p = PValueVector::new(values)?;
    let cal: NullCalibration = io::read_json(&args.cal)?;
    cal.validate()?;
    let est = estimate_pi(&p, &cal)?;
    match &args.out {
        Some(path) => {
            io::write_json(path, &est)?;
            println!(
                "pi_hat={:.6} s_hat={} -> {}",
                est.pi_hat,
                est.s_hat,
                path.display()
            );
        }
        None => println!(
            "{}",
            serde_json::to_string_pretty(&est).expect("serializable")
        ),
    }
    Ok(())
}
