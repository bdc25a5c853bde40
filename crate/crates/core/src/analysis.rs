//! Seed aggregation and polynomial regression of accuracy against illusion
//! strength, with permutation significance and a pointwise confidence band.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::derive_seed;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("x and y lengths differ ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },
    #[error("unsupported polynomial degree {0}")]
    BadDegree(usize),
    #[error("design matrix is singular")]
    Singular,
    #[error("no values to aggregate")]
    Empty,
    #[error("non-finite input")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); zero for one seed.
    pub std: f64,
    pub max: f64,
    pub n: usize,
}

pub fn aggregate_seeds(values: &[f64]) -> Result<SeedSummary, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        libm::sqrt(ss / (n - 1) as f64)
    } else {
        0.0
    };
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SeedSummary { mean, std, max, n })
}

/// Number of label permutations used for p-values.
pub const PERMUTATIONS: usize = 100_000;
/// Smallest reportable p-value, `1 / PERMUTATIONS`.
pub const P_FLOOR: f64 = 1.0 / PERMUTATIONS as f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub degree: usize,
    /// Coefficients in increasing power of raw x.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    /// Pearson correlation, for straight-line fits.
    pub r: Option<f64>,
    /// Permutation p-value; for degree 1 of |r|, for degree 2 of R².
    pub p_value: f64,
    /// Location of the maximum, for downward-opening quadratics.
    pub vertex: Option<f64>,
    pub residual_std: f64,
    pub n_points: usize,
    /// Inverse of the scaled design Gram matrix, for the band.
    #[serde(skip)]
    gram_inverse: Vec<Vec<f64>>,
    #[serde(skip)]
    scale: (f64, f64),
}

impl Fit {
    pub fn predict(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Half-width of the pointwise band for the fitted mean at `x`:
    /// `t * sigma * sqrt(v' (Z'Z)^-1 v)` with `v` the scaled power vector of
    /// `x` and `Z` the scaled design matrix.
    pub fn band_half_width(&self, x: f64, confidence: f64) -> f64 {
        let nu = self.n_points.saturating_sub(self.degree + 1).max(1) as f64;
        let t = student_t_quantile(0.5 + confidence / 2.0, nu);
        let v = scaled_powers((x - self.scale.0) / self.scale.1, self.degree);
        let mut lev = 0.0;
        for (i, vi) in v.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                lev += vi * self.gram_inverse[i][j] * vj;
            }
        }
        t * self.residual_std * libm::sqrt(lev.max(0.0))
    }
}

fn scaled_powers(z: f64, degree: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(degree + 1);
    let mut p = 1.0;
    for _ in 0..=degree {
        v.push(p);
        p *= z;
    }
    v
}

/// Gauss-Jordan inverse with partial pivoting.
fn invert(mut a: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, AnalysisError> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| libm::fabs(a[i][col]).total_cmp(&libm::fabs(a[j][col])))
            .expect("non-empty range");
        if libm::fabs(a[pivot][col]) < 1e-12 {
            return Err(AnalysisError::Singular);
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[i][j] -= f * a[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Ok(inv)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

struct LeastSquares {
    scaled_coef: Vec<f64>,
    gram_inverse: Vec<Vec<f64>>,
    center: f64,
    spread: f64,
}

fn least_squares(x: &[f64], y: &[f64], degree: usize) -> Result<LeastSquares, AnalysisError> {
    let n = x.len() as f64;
    let center = x.iter().sum::<f64>() / n;
    let spread = {
        let s = x.iter().map(|v| libm::fabs(v - center)).fold(0.0, f64::max);
        if s > 0.0 { s } else { 1.0 }
    };
    let k = degree + 1;
    let mut gram = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for (&xi, &yi) in x.iter().zip(y) {
        let v = scaled_powers((xi - center) / spread, degree);
        for i in 0..k {
            rhs[i] += v[i] * yi;
            for j in 0..k {
                gram[i][j] += v[i] * v[j];
            }
        }
    }
    let gram_inverse = invert(gram)?;
    let scaled_coef = (0..k).map(|i| (0..k).map(|j| gram_inverse[i][j] * rhs[j]).sum()).collect();
    Ok(LeastSquares { scaled_coef, gram_inverse, center, spread })
}

fn r_squared_of(x: &[f64], y: &[f64], degree: usize) -> Result<(f64, Vec<f64>, LeastSquares), AnalysisError> {
    let ls = least_squares(x, y, degree)?;
    // b_j z^j with z = (x - c)/s expands into raw powers of x.
    let mut coef = vec![0.0; degree + 1];
    for (j, &b) in ls.scaled_coef.iter().enumerate() {
        let bj = b / libm::pow(ls.spread, j as f64);
        for m in 0..=j {
            coef[m] += bj * binomial(j, m) * libm::pow(-ls.center, (j - m) as f64);
        }
    }
    let mean_y = y.iter().sum::<f64>() / y.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let z = (xi - ls.center) / ls.spread;
        let fit: f64 = scaled_powers(z, degree).iter().zip(&ls.scaled_coef).map(|(a, b)| a * b).sum();
        ss_res += (yi - fit) * (yi - fit);
        ss_tot += (yi - mean_y) * (yi - mean_y);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((r2, coef, ls))
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / libm::sqrt(sxx * syy)
    }
}

/// Fraction of `permutations` label shuffles whose statistic is at least as
/// extreme as the observed one, floored at one permutation.
pub fn permutation_p_value(
    x: &[f64],
    y: &[f64],
    permutations: usize,
    seed: u64,
    stat: impl Fn(&[f64], &[f64]) -> f64,
) -> f64 {
    const CHUNK: usize = 4096;
    let observed = stat(x, y);
    let mut shuffled = y.to_vec();
    let mut count = 0usize;
    let mut done = 0usize;
    let mut chunk = 0u64;
    while done < permutations {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, chunk]));
        let todo = CHUNK.min(permutations - done);
        for _ in 0..todo {
            shuffled.copy_from_slice(y);
            shuffled.shuffle(&mut rng);
            if stat(x, &shuffled) >= observed - 1e-12 {
                count += 1;
            }
        }
        done += todo;
        chunk += 1;
    }
    count.max(1) as f64 / permutations as f64
}

/// Least-squares polynomial fit of degree 1 or 2.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize, seed: u64) -> Result<Fit, AnalysisError> {
    polyfit_with(x, y, degree, seed, PERMUTATIONS)
}

pub fn polyfit_with(x: &[f64], y: &[f64], degree: usize, seed: u64, permutations: usize) -> Result<Fit, AnalysisError> {
    if !(1..=2).contains(&degree) {
        return Err(AnalysisError::BadDegree(degree));
    }
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < degree + 2 {
        return Err(AnalysisError::TooFewPoints { needed: degree + 2, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let (r_squared, coefficients, ls) = r_squared_of(x, y, degree)?;
    let n = x.len();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let f = coefficients.iter().rev().fold(0.0, |acc, &c| acc * xi + c);
            (yi - f) * (yi - f)
        })
        .sum();
    let residual_std = libm::sqrt(ss_res / (n - degree - 1) as f64);

    let (r, p_value) = if degree == 1 {
        let r = pearson(x, y);
        let p = permutation_p_value(x, y, permutations, seed, |a, b| libm::fabs(pearson(a, b)));
        (Some(r), p)
    } else {
        let p = permutation_p_value(x, y, permutations, seed, |a, b| {
            r_squared_of(a, b, 2).map(|t| t.0).unwrap_or(0.0)
        });
        (None, p)
    };
    let vertex = (degree == 2 && coefficients[2] < 0.0).then(|| -coefficients[1] / (2.0 * coefficients[2]));
    Ok(Fit {
        degree,
        coefficients,
        r_squared,
        r,
        p_value,
        vertex,
        residual_std,
        n_points: n,
        gram_inverse: ls.gram_inverse,
        scale: (ls.center, ls.spread),
    })
}

/// Pointwise `(lower, upper)` band at each grid point.
pub fn confidence_band(fit: &Fit, grid: &[f64], confidence: f64) -> Vec<(f64, f64)> {
    grid.iter()
        .map(|&x| {
            let (f, h) = (fit.predict(x), fit.band_half_width(x, confidence));
            (f - h, f + h)
        })
        .collect()
}

/// Evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect(),
    }
}

/// A fitted curve with its band, sampled at the data's x values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub x: f64,
    pub y: f64,
    pub fit: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Rows sorted by x for plotting or export.
pub fn band_rows(fit: &Fit, x: &[f64], y: &[f64], confidence: f64) -> Vec<BandRow> {
    let mut rows: Vec<BandRow> = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let f = fit.predict(xi);
            let h = fit.band_half_width(xi, confidence);
            BandRow { x: xi, y: yi, fit: f, lo: f - h, hi: f + h }
        })
        .collect();
    rows.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    rows
}

/// Inverse standard normal CDF (Acklam's rational approximation, refined by
/// one Halley step).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1, 2.209460984245205e2, -2.759285104469687e2,
        1.383577518672690e2, -3.066479806614716e1, 2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2,
        6.680131188771972e1, -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3, -3.223964580411365e-1, -2.400758277161838,
        -2.549732539343734, 4.374664141464968, 2.938163982698783,
    ];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    const LOW: f64 = 0.02425;
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = if p < LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2) - p;
    let u = e * libm::sqrt(2.0 * core::f64::consts::PI) * libm::exp(x * x / 2.0);
    x - u / (1.0 + x * u / 2.0)
}

/// Student-t quantile via the Cornish-Fisher expansion around the normal
/// quantile. Within 0.25% of the exact value for `nu >= 4` at two-sided
/// levels up to 99%.
pub fn student_t_quantile(p: f64, nu: f64) -> f64 {
    let z = normal_quantile(p);
    let z2 = z * z;
    let z3 = z2 * z;
    let z5 = z3 * z2;
    let z7 = z5 * z2;
    let z9 = z7 * z2;
    z + (z3 + z) / (4.0 * nu)
        + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * nu * nu)
        + (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * nu * nu * nu)
        + (79.0 * z9 + 776.0 * z7 + 1482.0 * z5 - 1920.0 * z3 - 945.0 * z) / (92160.0 * nu * nu * nu * nu)
}

/// Whether `values` rise (weakly) to a single peak and then fall (weakly),
/// ignoring changes smaller than `tolerance`.
pub fn is_unimodal(values: &[f64], tolerance: f64) -> bool {
    let mut falling = false;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d < -tolerance {
            falling = true;
        } else if d > tolerance && falling {
            return false;
        }
    }
    true
}

/// Maximizer of `f` on an evenly spaced grid over `[lo, hi]`.
pub fn grid_argmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
    let steps = steps.max(1);
    let mut best = (lo, f(lo));
    for i in 1..=steps {
        let x = lo + (hi - lo) * i as f64 / steps as f64;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best.0
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}
