//! `smr permnull`: covariate-adjusted marginal scan plus a phenotype
//! permutation null matrix, ready for `calibrate --null-matrix`.

use std::path::PathBuf;

use clap::Args;

use smr_core::io;
use smr_core::regression::{
    load_design_csv, load_design_split, marginal_scan, permutation_null, residualize,
};
use smr_core::Sided;

use crate::manifest::ManifestBuilder;
use crate::util::{ensure_dir, usage, CliResult};

#[derive(Args)]
pub struct PermnullArgs {
    /// Single-file form: CSV with a y column, covariates by name, and every
    /// remaining column treated as a variable
    #[arg(long)]
    data: Option<PathBuf>,

    /// Two-file form: phenotype+covariate CSV ...
    #[arg(long)]
    pheno: Option<PathBuf>,

    /// ... plus the variables as a binary f64 matrix with JSON sidecar
    #[arg(long = "x-matrix")]
    x_matrix: Option<PathBuf>,

    /// Comma-separated covariate column names (the intercept is implicit)
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,

    /// Number of phenotype permutations
    #[arg(long, default_value_t = 1000)]
    b: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: PermnullArgs) -> CliResult {
    let data = match (&args.data, &args.pheno, &args.x_matrix) {
        (Some(path), None, None) => load_design_csv(path, &args.covariates)?,
        (None, Some(pheno), Some(x)) => load_design_split(pheno, &args.covariates, x)?,
        _ => {
            return Err(usage(
                "provide either --data, or both --pheno and --x-matrix",
            ))
        }
    };
    ensure_dir(&args.out)?;
    let mut manifest = ManifestBuilder::new(
        "permnull",
        Some(args.seed),
        serde_json::json!({
            "n": data.n(), "q": data.q(), "m": data.m(),
            "b": args.b, "covariates": args.covariates,
        }),
    );

    // observed covariate-adjusted scan (two-sided)
    let res = residualize(&data)?;
    let scan = marginal_scan(&res, Sided::Two)?;
    if !scan.degenerate.is_empty() {
        eprintln!(
            "warning: {} zero-information variable(s), p set to 1: {:?}",
            scan.degenerate.len(),
            &scan.degenerate[..scan.degenerate.len().min(10)]
        );
    }
    let pvals_path = args.out.join("observed_pvals.txt");
    let mut text = String::from("p\n");
    for v in scan.pvals.values() {
        text.push_str(&format!("{v}\n"));
    }
    std::fs::write(&pvals_path, text)
        .map_err(|e| crate::util::CliError::Runtime(e.to_string()))?;
    manifest.artifact(&pvals_path);

    let nulls = permutation_null(&data, args.b, args.seed)?;
    let matrix_path = args.out.join("null_pvals.bin");
    io::write_matrix(
        &matrix_path,
        &nulls,
        serde_json::json!({ "kind": "null-pvalues", "b": args.b, "seed": args.seed }),
    )?;
    manifest.artifact(&matrix_path);

    manifest.write(&args.out)?;
    println!(
        "scanned {} variables over {} samples; {} null rows -> {}",
        data.m(),
        data.n(),
        args.b,
        args.out.display()
    );
    Ok(())
}
