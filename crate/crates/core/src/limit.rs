//! Normal approximation of window functionals: replicate batches over
//! growing windows, distances to the standard normal law, and the
//! multivariate covariance check.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::covariance::{sigma_matrix, CovMatrix};
use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::process::{replicate_rng, sample_grains, ModelConfig};
use crate::union::{arrangement_measure, FunctionalVector, Window};

/// Smallest batch accepted by the distributional checks.
pub const MIN_REPLICATES: usize = 100;

/// Replicates of `φ(Z ∩ rW)` for one scale `r`. Replicate `k` uses the
/// random stream `k` of `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateBatch {
    pub scale: f64,
    pub window: Window,
    pub seed: u64,
    pub values: Vec<FunctionalVector>,
}

impl ReplicateBatch {
    pub fn reps(&self) -> usize {
        self.values.len()
    }

    /// `a · φ` per replicate.
    pub fn combination(&self, a: [f64; 3]) -> Vec<f64> {
        self.values.iter().map(|v| (0..3).map(|i| a[i] * v.get(i)).sum()).collect()
    }

    /// Sample covariance of the three functionals divided by the window area.
    pub fn covariance_per_area(&self) -> Result<[[f64; 3]; 3]> {
        let n = self.reps();
        if n < 2 {
            return Err(Error::Precondition(format!("need at least two replicates, got {n}")));
        }
        let mut mean = [0.0; 3];
        for v in &self.values {
            for i in 0..3 {
                mean[i] += v.get(i) / n as f64;
            }
        }
        let mut cov = [[0.0; 3]; 3];
        for v in &self.values {
            for i in 0..3 {
                for j in 0..3 {
                    cov[i][j] += (v.get(i) - mean[i]) * (v.get(j) - mean[j]);
                }
            }
        }
        let scale = (n - 1) as f64 * self.window.area();
        Ok(cov.map(|row| row.map(|c| c / scale)))
    }
}

/// Measures `n` replicates of the model observed in `r·W`.
pub fn run_batch(config: &ModelConfig, r: f64, n: usize, threads: usize) -> Result<ReplicateBatch> {
    let window = config.window.scaled(r)?;
    let scaled = config.with_window(window);
    let values = map_indexed(n as u64, threads, |k| arrangement_measure(&sample_grains(&scaled, k), &window))?;
    Ok(ReplicateBatch { scale: r, window, seed: config.seed, values })
}

/// Independent master seed for the `index`-th sub-experiment of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    replicate_rng(seed, u64::MAX - index).random()
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// `(x − mean) / sd` with the unbiased sample variance.
pub fn standardize(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.len() < 2 {
        return Err(Error::Precondition(format!("need at least two values, got {}", xs.len())));
    }
    let (mean, var) = mean_var(xs);
    if !(var > 0.0) {
        return Err(Error::Precondition(
            "sample variance is zero; normal approximation needs a nondegenerate functional".into(),
        ));
    }
    let centered: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    // second pass removes the rounding left in the mean
    let shift = centered.iter().sum::<f64>() / xs.len() as f64;
    let sd = var.sqrt();
    Ok(centered.iter().map(|c| (c - shift) / sd).collect())
}

/// `∫ Φ(t) dt` over `(−∞, x]`.
fn phi_antiderivative(n: &Normal, x: f64) -> f64 {
    x * n.cdf(x) + n.pdf(x)
}

/// `∫ |c − Φ(t)| dt` over `[a, b]`.
fn band(n: &Normal, c: f64, a: f64, b: f64) -> f64 {
    let signed = |a: f64, b: f64| c * (b - a) - (phi_antiderivative(n, b) - phi_antiderivative(n, a));
    let z = n.inverse_cdf(c);
    if z > a && z < b {
        signed(a, z).abs() + signed(z, b).abs()
    } else {
        signed(a, b).abs()
    }
}

/// `∫ |F_N(x) − Φ(x)| dx` for the empirical distribution function `F_N`,
/// integrated exactly between order statistics.
pub fn wasserstein_to_normal(sample: &[f64]) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::Precondition(format!("need at least two values, got {n}")));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition("sample contains non-finite values".into()));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let unit = standard_normal();
    let (first, last) = (xs[0], xs[n - 1]);
    let mut total = phi_antiderivative(&unit, first);
    total += unit.pdf(last) - last * unit.sf(last);
    for i in 1..n {
        if xs[i] > xs[i - 1] {
            total += band(&unit, i as f64 / n as f64, xs[i - 1], xs[i]);
        }
    }
    Ok(total)
}

/// `sup |F_N − Φ|`.
pub fn ks_to_normal(sample: &[f64]) -> Result<f64> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::Precondition("empty sample".into()));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let unit = standard_normal();
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let p = unit.cdf(x);
        d = d.max((i + 1) as f64 / n as f64 - p).max(p - i as f64 / n as f64);
    }
    Ok(d)
}

/// Distribution of the distance statistic for standardized normal samples
/// of a fixed size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalCalibration {
    pub sample_size: usize,
    /// Sorted statistics of the simulated batches.
    pub w1: Vec<f64>,
}

impl NormalCalibration {
    /// Simulates `batches` standardized samples of `sample_size` normals.
    pub fn simulate(sample_size: usize, batches: usize, seed: u64, threads: usize) -> Result<Self> {
        if batches == 0 {
            return Err(Error::Precondition("need at least one calibration batch".into()));
        }
        let mut w1 = map_indexed(batches as u64, threads, |k| {
            let mut rng = replicate_rng(seed, k);
            let xs: Vec<f64> = (0..sample_size).map(|_| rng.sample(StandardNormal)).collect();
            standardize(&xs).and_then(|z| wasserstein_to_normal(&z))
        })?
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        w1.sort_by(f64::total_cmp);
        Ok(Self { sample_size, w1 })
    }

    /// Empirical `level` quantile of the simulated statistics.
    pub fn threshold(&self, level: f64) -> f64 {
        let k = ((level * self.w1.len() as f64).ceil() as usize).clamp(1, self.w1.len());
        self.w1[k - 1]
    }
}

/// Normality diagnostics of one functional at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub scale: f64,
    pub reps: usize,
    pub mean: f64,
    pub variance: f64,
    pub variance_per_area: f64,
    pub w1: f64,
    pub ks: f64,
    #[serde(skip)]
    pub standardized: Vec<f64>,
}

/// A linear combination `a · (V₀, V₁, V₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Functional(pub [f64; 3]);

impl Functional {
    pub fn intrinsic(j: usize) -> Self {
        let mut a = [0.0; 3];
        a[j] = 1.0;
        Self(a)
    }
}

pub fn normality_report(batch: &ReplicateBatch, functional: Functional) -> Result<NormalityReport> {
    if batch.reps() < MIN_REPLICATES {
        return Err(Error::Precondition(format!(
            "distributional checks need at least {MIN_REPLICATES} replicates, got {}",
            batch.reps()
        )));
    }
    let xs = batch.combination(functional.0);
    let (mean, variance) = mean_var(&xs);
    if !(variance > 0.0) {
        return Err(Error::Precondition(format!(
            "variance of {:?} vanishes at scale {}; the limit theorem needs positive asymptotic variance",
            functional.0, batch.scale
        )));
    }
    let standardized = standardize(&xs)?;
    Ok(NormalityReport {
        scale: batch.scale,
        reps: batch.reps(),
        mean,
        variance,
        variance_per_area: variance / batch.window.area(),
        w1: wasserstein_to_normal(&standardized)?,
        ks: ks_to_normal(&standardized)?,
        standardized,
    })
}

/// Per-scale reports with the rate diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub functional: Functional,
    pub scales: Vec<NormalityReport>,
    /// Least-squares slope of `ln w1` against `ln r`.
    pub slope: f64,
    /// Rank correlation of `w1` with `r`.
    pub spearman: f64,
}

pub fn clt_from_batches(batches: &[ReplicateBatch], functional: Functional) -> Result<CltReport> {
    if batches.len() < 2 {
        return Err(Error::Precondition("the rate diagnostics need at least two scales".into()));
    }
    let scales = batches.iter().map(|b| normality_report(b, functional)).collect::<Result<Vec<_>>>()?;
    let r: Vec<f64> = scales.iter().map(|s| s.scale).collect();
    let w: Vec<f64> = scales.iter().map(|s| s.w1).collect();
    let slope = ols_slope(&r.iter().map(|x| x.ln()).collect::<Vec<_>>(), &w.iter().map(|x| x.ln()).collect::<Vec<_>>());
    Ok(CltReport { functional, slope, spearman: spearman(&r, &w), scales })
}

/// Runs one batch per scale, each under its own derived seed.
pub fn clt_experiment(
    config: &ModelConfig,
    functional: Functional,
    scales: &[f64],
    n: usize,
    threads: usize,
) -> Result<CltReport> {
    let batches = scale_batches(config, scales, n, threads)?;
    clt_from_batches(&batches, functional)
}

pub fn scale_batches(config: &ModelConfig, scales: &[f64], n: usize, threads: usize) -> Result<Vec<ReplicateBatch>> {
    scales
        .iter()
        .enumerate()
        .map(|(i, &r)| run_batch(&config.with_seed(derive_seed(config.seed, i as u64)), r, n, threads))
        .collect()
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Average ranks, ties sharing the mean rank.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            out[k] = 0.5 * (i + j) as f64 + 1.0;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Coefficient vectors used for the Cramér–Wold directions.
pub const DIRECTIONS: [[f64; 3]; 5] =
    [[0.0, 0.0, 1.0], [1.0, 1.0, 1.0], [1.0, 0.0, -1.0], [0.0, 1.0, 1.0], [1.0, -2.0, 0.5]];

/// One projected direction of the multivariate check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionCheck {
    pub coefficients: [f64; 3],
    pub theory_variance: f64,
    pub empirical_variance: f64,
    pub w1: f64,
    pub ks: f64,
}

impl DirectionCheck {
    pub fn variance_error(&self) -> f64 {
        (self.empirical_variance / self.theory_variance - 1.0).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateReport {
    pub scale: f64,
    pub reps: usize,
    pub empirical: [[f64; 3]; 3],
    pub theory: CovMatrix,
    /// `|empirical / theory − 1|` entrywise.
    pub relative_errors: [[f64; 3]; 3],
    pub max_relative_error: f64,
    pub directions: Vec<DirectionCheck>,
}

pub fn multivariate_from_batch(batch: &ReplicateBatch, sigma: &CovMatrix) -> Result<MultivariateReport> {
    let empirical = batch.covariance_per_area()?;
    let mut relative_errors = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            relative_errors[i][j] = (empirical[i][j] / sigma.get(i, j) - 1.0).abs();
        }
    }
    let max_relative_error = relative_errors.iter().flatten().fold(0.0, |m: f64, &e| m.max(e));
    let directions = DIRECTIONS
        .iter()
        .map(|&a| {
            let report = normality_report(batch, Functional(a))?;
            Ok(DirectionCheck {
                coefficients: a,
                theory_variance: sigma.quadratic_form(a),
                empirical_variance: report.variance_per_area,
                w1: report.w1,
                ks: report.ks,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultivariateReport {
        scale: batch.scale,
        reps: batch.reps(),
        empirical,
        theory: *sigma,
        relative_errors,
        max_relative_error,
        directions,
    })
}

/// Compares the empirical covariance at scale `r` with the asymptotic matrix.
pub fn multivariate_check(config: &ModelConfig, r: f64, n: usize, threads: usize) -> Result<MultivariateReport> {
    if !config.grains.is_isotropic() {
        return Err(Error::Precondition("the asymptotic covariance matrix needs an isotropic grain law".into()));
    }
    let sigma = sigma_matrix(config.gamma, &config.grains)?.sigma;
    multivariate_from_batch(&run_batch(config, r, n, threads)?, &sigma)
}
