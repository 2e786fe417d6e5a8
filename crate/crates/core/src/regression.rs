//! Covariate-adjusted marginal association scan and its permutation null.
//!
//! The covariates are projected out of the phenotype and every variable once
//! (a single orthonormal decomposition of W); each marginal t statistic then
//! comes from the correlation of residualized vectors, t = r sqrt(df/(1-r²))
//! with df = n - q - 1. Permutations shuffle the raw phenotype and
//! re-residualize only it, which equals the shuffle-and-refit pipeline
//! exactly because the projection is linear in y; the residualized variable
//! matrix is computed once and shared read-only across permutations, so the
//! inter-variable correlation structure is preserved bit-for-bit.

use rand_pcg::Pcg64Mcg;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::Matrix;
use crate::linalg::orthonormal_columns;
use crate::pvalues::{PValueVector, Sided};
use crate::rng::{derive_rng, STREAM_PERMUTATION};
use crate::special::student_t_two_sided;

/// Minimum admissible number of permutations.
pub const MIN_PERMUTATIONS: usize = 100;

/// Residual norms at or below this fraction of the input norm mark a
/// degenerate (zero-information) variable.
const DEGENERATE_REL_NORM: f64 = 1e-8;

/// Phenotype, covariates (with leading intercept column), and variables.
#[derive(Debug, Clone)]
pub struct DesignData {
    pub y: Vec<f64>,
    /// n x q, first column all ones.
    pub w: Matrix,
    /// n x m, sample-major.
    pub x: Matrix,
}

impl DesignData {
    pub fn new(y: Vec<f64>, w: Matrix, x: Matrix) -> Result<Self> {
        let n = y.len();
        if w.rows != n || x.rows != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: if w.rows != n { w.rows } else { x.rows },
            });
        }
        if n <= w.cols + 1 {
            return Err(Error::invalid(
                "n",
                format!("need n > q + 1 (n = {}, q = {})", n, w.cols),
            ));
        }
        if let Some(index) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(index) = w.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(index) = x.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        for r in 0..n {
            if w.row(r)[0] != 1.0 {
                return Err(Error::invalid(
                    "w",
                    format!("column 0 must be an all-ones intercept (row {r})"),
                ));
            }
        }
        Ok(Self { y, w, x })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn q(&self) -> usize {
        self.w.cols
    }

    pub fn m(&self) -> usize {
        self.x.cols
    }
}

/// Output of [`residualize`]: everything downstream of the projection.
#[derive(Debug, Clone)]
pub struct ResidualizedDesign {
    pub y_res: Vec<f64>,
    /// m x n, variable-major (each row is one residualized variable).
    pub x_res: Matrix,
    /// Residual degrees of freedom, n - q - 1.
    pub df: usize,
    pub x_res_norms: Vec<f64>,
    pub x_orig_norms: Vec<f64>,
    /// Orthonormal basis of span(W), column-major (q vectors of length n).
    basis: Vec<f64>,
    n: usize,
    q: usize,
}

impl ResidualizedDesign {
    /// v minus its projection onto span(W).
    pub fn project_residual(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n);
        let mut out = v.to_vec();
        for c in 0..self.q {
            let b = &self.basis[c * self.n..(c + 1) * self.n];
            let proj: f64 = b.iter().zip(v).map(|(x, y)| x * y).sum();
            for (o, bi) in out.iter_mut().zip(b) {
                *o -= proj * bi;
            }
        }
        out
    }
}

/// Project the phenotype and every variable onto the orthogonal complement
/// of the covariate span. Errors name the first linearly dependent covariate
/// column.
pub fn residualize(data: &DesignData) -> Result<ResidualizedDesign> {
    let n = data.n();
    let q = data.q();
    let m = data.m();
    let basis =
        orthonormal_columns(&data.w.data, n, q).map_err(|column| Error::RankDeficient { column })?;

    let stub = ResidualizedDesign {
        y_res: Vec::new(),
        x_res: Matrix::zeros(0, 0),
        df: n - q - 1,
        x_res_norms: Vec::new(),
        x_orig_norms: Vec::new(),
        basis,
        n,
        q,
    };

    let y_res = stub.project_residual(&data.y);

    let mut x_res = Matrix::zeros(m, n);
    let mut x_res_norms = vec![0.0; m];
    let mut x_orig_norms = vec![0.0; m];
    let columns: Vec<(Vec<f64>, f64, f64)> = (0..m)
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = (0..n).map(|r| data.x.row(r)[j]).collect();
            let orig_norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            let res = stub.project_residual(&col);
            let res_norm = res.iter().map(|v| v * v).sum::<f64>().sqrt();
            (res, res_norm, orig_norm)
        })
        .collect();
    for (j, (res, rn, on)) in columns.into_iter().enumerate() {
        x_res.row_mut(j).copy_from_slice(&res);
        x_res_norms[j] = rn;
        x_orig_norms[j] = on;
    }

    Ok(ResidualizedDesign {
        y_res,
        x_res,
        x_res_norms,
        x_orig_norms,
        ..stub
    })
}

/// Marginal p-values plus t statistics and any degenerate-column flags.
#[derive(Debug, Clone)]
pub struct MarginalScan {
    pub pvals: PValueVector,
    pub t_stats: Vec<f64>,
    /// Variables whose residual carries no information; their p is set to 1.
    pub degenerate: Vec<usize>,
}

/// Per-variable t test of the residualized correlation, two-sided by default
/// in this pipeline. `x_res` is variable-major (m x n).
pub fn marginal_pvalues(
    y_res: &[f64],
    x_res: &Matrix,
    df: usize,
    sided: Sided,
) -> Result<MarginalScan> {
    if x_res.cols != y_res.len() {
        return Err(Error::DimensionMismatch {
            expected: y_res.len(),
            actual: x_res.cols,
        });
    }
    if df < 1 {
        return Err(Error::invalid("df", "needs df >= 1"));
    }
    let norms: Vec<f64> = (0..x_res.rows)
        .map(|j| x_res.row(j).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    // without the pre-projection norms, grade degeneracy against the largest
    // residual column
    let scale = norms.iter().cloned().fold(0.0, f64::max);
    let refs: Vec<f64> = vec![scale; x_res.rows];
    let (p, t, degenerate) = scan_rows(y_res, x_res, &norms, &refs, df, sided);
    Ok(MarginalScan {
        pvals: PValueVector::new(p)?,
        t_stats: t,
        degenerate,
    })
}

/// Fast path reusing the cached norms of a [`ResidualizedDesign`].
pub fn marginal_scan(res: &ResidualizedDesign, sided: Sided) -> Result<MarginalScan> {
    let (p, t, degenerate) = scan_rows(
        &res.y_res,
        &res.x_res,
        &res.x_res_norms,
        &res.x_orig_norms,
        res.df,
        sided,
    );
    Ok(MarginalScan {
        pvals: PValueVector::new(p)?,
        t_stats: t,
        degenerate,
    })
}

fn scan_rows(
    y_res: &[f64],
    x_res: &Matrix,
    x_norms: &[f64],
    ref_norms: &[f64],
    df: usize,
    sided: Sided,
) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let y_norm = y_res.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dff = df as f64;
    let pt: Vec<(f64, f64, bool)> = (0..x_res.rows)
        .into_par_iter()
        .map(|j| {
            let xn = x_norms[j];
            if xn <= DEGENERATE_REL_NORM * ref_norms[j] || xn == 0.0 || y_norm == 0.0 {
                return (1.0, 0.0, true);
            }
            let dot: f64 = x_res.row(j).iter().zip(y_res).map(|(a, b)| a * b).sum();
            let r = (dot / (xn * y_norm)).clamp(-1.0, 1.0);
            let denom = 1.0 - r * r;
            let t = if denom <= 0.0 {
                f64::INFINITY * r.signum()
            } else {
                r * (dff / denom).sqrt()
            };
            let p2 = student_t_two_sided(t, dff);
            let p = match sided {
                Sided::Two => p2,
                Sided::One => {
                    if t >= 0.0 {
                        0.5 * p2
                    } else {
                        1.0 - 0.5 * p2
                    }
                }
            };
            (p, t, false)
        })
        .collect();

    let mut p = Vec::with_capacity(pt.len());
    let mut t = Vec::with_capacity(pt.len());
    let mut degenerate = Vec::new();
    for (j, (pj, tj, bad)) in pt.into_iter().enumerate() {
        p.push(pj);
        t.push(tj);
        if bad {
            degenerate.push(j);
        }
    }
    (p, t, degenerate)
}

/// One null row: shuffle `y_raw` by `perm`, re-residualize it, and rescan
/// against the cached residualized variables.
pub fn permutation_row(
    res: &ResidualizedDesign,
    y_raw: &[f64],
    perm: &[usize],
    sided: Sided,
) -> Result<Vec<f64>> {
    let y_perm: Vec<f64> = perm.iter().map(|&i| y_raw[i]).collect();
    let y_perm_res = res.project_residual(&y_perm);
    let (p, _, _) = scan_rows(
        &y_perm_res,
        &res.x_res,
        &res.x_res_norms,
        &res.x_orig_norms,
        res.df,
        sided,
    );
    Ok(p)
}

/// B x m matrix of null p-values from phenotype permutations, two-sided,
/// deterministic given `(data, b, seed)`. Feeds
/// [`crate::mr::calibrate_cm_from_matrix`].
pub fn permutation_null(data: &DesignData, b: usize, seed: u64) -> Result<Matrix> {
    if b < MIN_PERMUTATIONS {
        return Err(Error::InsufficientReplicates {
            got: b,
            min: MIN_PERMUTATIONS,
        });
    }
    let res = residualize(data)?;
    let n = data.n();
    let rows: Vec<Vec<f64>> = (0..b as u64)
        .into_par_iter()
        .map(|idx| {
            let mut rng = derive_rng(seed, STREAM_PERMUTATION, idx);
            let perm = random_permutation(n, &mut rng);
            permutation_row(&res, &data.y, &perm, Sided::Two)
        })
        .collect::<Result<_>>()?;
    Matrix::from_rows(rows)
}

fn random_permutation(n: usize, rng: &mut Pcg64Mcg) -> Vec<usize> {
    use rand::Rng;
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    idx
}

/// Parse a CSV with a header row into a design: the `y` column is the
/// phenotype, `covariates` are taken by name, and every remaining column is
/// a variable. An intercept column is prepended to W. Missing cells are
/// rejected.
pub fn load_design_csv(path: &std::path::Path, covariates: &[String]) -> Result<DesignData> {
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path_str.clone(),
        line: 1,
        msg: "empty file".into(),
    })?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let col_of = |name: &str| names.iter().position(|n| n == name);

    let y_col = col_of("y").ok_or_else(|| Error::Schema("no column named \"y\"".into()))?;
    let mut cov_cols = Vec::with_capacity(covariates.len());
    for c in covariates {
        let idx = col_of(c).ok_or_else(|| Error::Schema(format!("no covariate column {c:?}")))?;
        cov_cols.push(idx);
    }
    let var_cols: Vec<usize> = (0..names.len())
        .filter(|i| *i != y_col && !cov_cols.contains(i))
        .collect();

    let mut y = Vec::new();
    let mut w_rows = Vec::new();
    let mut x_rows = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != names.len() {
            return Err(Error::Parse {
                path: path_str.clone(),
                line: lineno + 1,
                msg: format!("expected {} fields, got {}", names.len(), fields.len()),
            });
        }
        let row = lineno; // 1-based data row (header is line 1)
        let parse = |col: usize| -> Result<f64> {
            let raw = fields[col];
            if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("nan")
            {
                return Err(Error::MissingValue {
                    row,
                    column: names[col].clone(),
                });
            }
            let v: f64 = raw.parse().map_err(|e| Error::Parse {
                path: path_str.clone(),
                line: lineno + 1,
                msg: format!("column {:?}: {e}", names[col]),
            })?;
            if !v.is_finite() {
                return Err(Error::MissingValue {
                    row,
                    column: names[col].clone(),
                });
            }
            Ok(v)
        };

        y.push(parse(y_col)?);
        let mut w_row = Vec::with_capacity(1 + cov_cols.len());
        w_row.push(1.0);
        for &c in &cov_cols {
            w_row.push(parse(c)?);
        }
        w_rows.push(w_row);
        let mut x_row = Vec::with_capacity(var_cols.len());
        for &c in &var_cols {
            x_row.push(parse(c)?);
        }
        x_rows.push(x_row);
    }

    DesignData::new(y, Matrix::from_rows(w_rows)?, Matrix::from_rows(x_rows)?)
}

/// Two-file ingestion: phenotype + covariates CSV, variables as a binary
/// matrix with a JSON sidecar (rows = samples).
pub fn load_design_split(
    pheno_path: &std::path::Path,
    covariates: &[String],
    matrix_path: &std::path::Path,
) -> Result<DesignData> {
    let text = std::fs::read_to_string(pheno_path)?;
    let path_str = pheno_path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path_str.clone(),
        line: 1,
        msg: "empty file".into(),
    })?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let y_col = names
        .iter()
        .position(|n| n == "y")
        .ok_or_else(|| Error::Schema("no column named \"y\"".into()))?;
    let mut cov_cols = Vec::with_capacity(covariates.len());
    for c in covariates {
        let idx = names
            .iter()
            .position(|n| n == c)
            .ok_or_else(|| Error::Schema(format!("no covariate column {c:?}")))?;
        cov_cols.push(idx);
    }

    let mut y = Vec::new();
    let mut w_rows = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let row = lineno;
        let parse = |col: usize| -> Result<f64> {
            let raw = fields.get(col).copied().unwrap_or("");
            if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("nan")
            {
                return Err(Error::MissingValue {
                    row,
                    column: names[col].clone(),
                });
            }
            raw.parse().map_err(|e| Error::Parse {
                path: path_str.clone(),
                line: lineno + 1,
                msg: format!("column {:?}: {e}", names[col]),
            })
        };
        y.push(parse(y_col)?);
        let mut w_row = vec![1.0];
        for &c in &cov_cols {
            w_row.push(parse(c)?);
        }
        w_rows.push(w_row);
    }

    let x = crate::io::read_matrix(matrix_path)?;
    DesignData::new(y, Matrix::from_rows(w_rows)?, x)
}
