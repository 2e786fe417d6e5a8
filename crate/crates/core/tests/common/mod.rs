//! Independent oracles shared by the integration suites. Everything here is
//! deliberately written on separate numeric routes from the library: dense
//! grids with merge sweeps, quadratic-scan step-up selection, Stirling
//! log-gamma plus Simpson quadrature for distribution functions, and direct
//! normal-equation least squares.

#![allow(dead_code)]

const CLAMP: f64 = 1e-12;
const ORACLE_GRID: usize = 1_000_000;

/// Supremum of (U_m(t) - t)/sqrt(t(1-t)) over a dense grid plus the data
/// points themselves, via a single merge sweep with direct counting.
pub fn oracle_vm(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().map(|x| x.clamp(CLAMP, 1.0 - CLAMP)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() as f64;
    let mut best = f64::NEG_INFINITY;
    let mut idx = 0usize;
    for t in candidate_sweep(&v) {
        while idx < v.len() && v[idx] <= t {
            idx += 1;
        }
        let val = (idx as f64 / m - t) / (t * (1.0 - t)).sqrt();
        if val > best {
            best = val;
        }
    }
    best
}

/// Same sweep for the proportion objective
/// (F_m(t) - t - c sqrt(t(1-t)))/(1 - t), clipped below at zero. Mirrors the
/// estimator's supremum domain t in (0, 1/4].
pub fn oracle_pi(values: &[f64], c_m: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().map(|x| x.clamp(CLAMP, 1.0 - CLAMP)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() as f64;
    let mut best = f64::NEG_INFINITY;
    let mut idx = 0usize;
    for t in candidate_sweep(&v) {
        if t > 0.25 {
            break;
        }
        while idx < v.len() && v[idx] <= t {
            idx += 1;
        }
        let val = (idx as f64 / m - t - c_m * (t * (1.0 - t)).sqrt()) / (1.0 - t);
        if val > best {
            best = val;
        }
    }
    best.max(0.0)
}

/// Ascending candidate set: the million-point grid merged with the sorted
/// data values.
fn candidate_sweep(sorted_values: &[f64]) -> Vec<f64> {
    let mut cands: Vec<f64> = (1..=ORACLE_GRID)
        .map(|g| g as f64 / (ORACLE_GRID + 1) as f64)
        .collect();
    cands.extend_from_slice(sorted_values);
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cands
}

/// Step-up selection by quadratic scan: for every value x, c(x) = #{v <= x};
/// x is then the c-th ranked p-value and contributes c when x <= (c/m) q.
pub fn oracle_bh(values: &[f64], q: f64) -> usize {
    let m = values.len();
    let mut k = 0usize;
    for &x in values {
        let c = values.iter().filter(|&&v| v <= x).count();
        if x <= c as f64 * q / m as f64 && c > k {
            k = c;
        }
    }
    k
}

/// Kolmogorov-Smirnov distance of a sample from uniform(0,1).
pub fn ks_statistic(sample: &[f64]) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &u) in v.iter().enumerate() {
        let hi = (i + 1) as f64 / n - u;
        let lo = u - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Stirling-series log-gamma (independent of the library's Lanczos form),
/// good to ~1e-12 after lifting the argument above 10.
pub fn lgamma_stirling(mut x: f64) -> f64 {
    assert!(x > 0.0);
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv / 12.0 - inv * inv2 / 360.0 + inv * inv2 * inv2 / 1260.0
        - inv * inv2 * inv2 * inv2 / 1680.0;
    shift + 0.5 * ((2.0 * std::f64::consts::PI).ln() - x.ln()) + x * (x.ln() - 1.0) + series
}

/// Composite Simpson integral of `f` over [a, b].
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals.max(2) & !1; // even
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Two-sided Student-t p-value by quadrature of the density.
pub fn oracle_t_two_sided(t: f64, df: f64) -> f64 {
    let t = t.abs();
    if t == 0.0 {
        return 1.0;
    }
    let ln_const = lgamma_stirling(0.5 * (df + 1.0))
        - lgamma_stirling(0.5 * df)
        - 0.5 * (df * std::f64::consts::PI).ln();
    let density = |u: f64| (ln_const - 0.5 * (df + 1.0) * (1.0 + u * u / df).ln()).exp();
    let body = simpson(density, 0.0, t, 40_000);
    (1.0 - 2.0 * body).clamp(0.0, 1.0)
}

/// Regularized incomplete beta by quadrature (for inverting the beta CDF on
/// an independent route).
pub fn oracle_beta_cdf(a: f64, b: f64, x: f64) -> f64 {
    let ln_norm = lgamma_stirling(a) + lgamma_stirling(b) - lgamma_stirling(a + b);
    let density = |u: f64| {
        if u <= 0.0 || u >= 1.0 {
            0.0
        } else {
            ((a - 1.0) * u.ln() + (b - 1.0) * (1.0 - u).ln() - ln_norm).exp()
        }
    };
    simpson(density, 0.0, x, 40_000).clamp(0.0, 1.0)
}

/// Median of Beta(a, b) by bisection on the quadrature CDF.
pub fn oracle_beta_median(a: f64, b: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if oracle_beta_cdf(a, b, mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Full least squares of y on [w | x_col]: returns the two-sided p-value of
/// the x_col coefficient, with the t CDF evaluated by quadrature. `w` is
/// row-major n x q.
pub fn oracle_full_ls_pvalue(y: &[f64], w: &[f64], q: usize, x_col: &[f64]) -> f64 {
    let n = y.len();
    let p = q + 1;
    let design = |r: usize, c: usize| -> f64 {
        if c < q {
            w[r * q + c]
        } else {
            x_col[r]
        }
    };

    // normal equations
    let mut xtx = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    for r in 0..n {
        for i in 0..p {
            let di = design(r, i);
            xty[i] += di * y[r];
            for j in 0..p {
                xtx[i * p + j] += di * design(r, j);
            }
        }
    }
    let inv = invert(&xtx, p);
    let mut beta = vec![0.0; p];
    for i in 0..p {
        for j in 0..p {
            beta[i] += inv[i * p + j] * xty[j];
        }
    }
    let mut rss = 0.0;
    for r in 0..n {
        let mut fit = 0.0;
        for i in 0..p {
            fit += design(r, i) * beta[i];
        }
        rss += (y[r] - fit) * (y[r] - fit);
    }
    let df = (n - p) as f64;
    let sigma2 = rss / df;
    let se = (sigma2 * inv[(p - 1) * p + (p - 1)]).sqrt();
    let t = beta[p - 1] / se;
    oracle_t_two_sided(t, df)
}

/// Gauss-Jordan inverse with partial pivoting (small matrices only).
fn invert(a: &[f64], n: usize) -> Vec<f64> {
    let mut work = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if work[r * n + col].abs() > work[pivot * n + col].abs() {
                pivot = r;
            }
        }
        for c in 0..n {
            work.swap(col * n + c, pivot * n + c);
            inv.swap(col * n + c, pivot * n + c);
        }
        let d = work[col * n + col];
        assert!(d.abs() > 1e-300, "singular design in oracle");
        for c in 0..n {
            work[col * n + c] /= d;
            inv[col * n + c] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = work[r * n + col];
                for c in 0..n {
                    work[r * n + c] -= f * work[col * n + c];
                    inv[r * n + c] -= f * inv[col * n + c];
                }
            }
        }
    }
    inv
}

/// Count of strict increases along a sequence (for trend checks that allow
/// a bounded number of Monte Carlo inversions).
pub fn strict_increases(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0] + 1e-12).count()
}
