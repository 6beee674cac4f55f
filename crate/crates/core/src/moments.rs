//! Mean-value theory: volume fraction, densities of intrinsic volumes,
//! finite-window means and the inverse problem of recovering the intensity.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::grain::GrainShape;
use crate::process::{poisson, replicate_rng, sample_grains, GermGrainSample, ModelConfig};
use crate::quad::{integrate, QuadResult, Tolerance};
use crate::union::{arrangement_measure, half_open_measure, FunctionalVector, Window};

/// Moments of the typical grain. `mixed` is the mixed translative moment
/// `E⊗E[V₂(K ⊕ M*) − V₂(K) − V₂(M)]` for independent `K, M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrainMoments {
    pub ev1: f64,
    pub ev2: f64,
    pub ev1sq: f64,
    pub ev2sq: f64,
    pub ev1v2: f64,
    pub mixed: Option<f64>,
}

impl GrainMoments {
    /// Mixed moment of an isotropic law, `2 (E V₁)² / π`.
    pub fn isotropic_mixed(&self) -> f64 {
        2.0 * self.ev1 * self.ev1 / PI
    }
}

/// Densities `(V̄₀, V̄₁, V̄₂)` of the union set per unit area.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DensityVector {
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
}

impl DensityVector {
    pub fn to_array(self) -> [f64; 3] {
        [self.d0, self.d1, self.d2]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { d0: a[0], d1: a[1], d2: a[2] }
    }
}

/// `p = 1 − exp(−γ E V₂)`.
pub fn volume_fraction(gamma: f64, ev2: f64) -> f64 {
    -(-gamma * ev2).exp_m1()
}

/// Planar densities. With `isotropic` the mixed moment is replaced by its
/// rotation average; otherwise `moments.mixed` is required.
pub fn miles_densities_2d(gamma: f64, moments: &GrainMoments, isotropic: bool) -> Result<DensityVector> {
    let mixed = if isotropic {
        moments.isotropic_mixed()
    } else {
        moments.mixed.ok_or_else(|| {
            Error::Precondition("anisotropic densities need the mixed translative moment".into())
        })?
    };
    let q = (-gamma * moments.ev2).exp();
    Ok(DensityVector {
        d0: q * (gamma - 0.5 * gamma * gamma * mixed),
        d1: q * gamma * moments.ev1,
        d2: -(-gamma * moments.ev2).exp_m1(),
    })
}

/// `c^i_j = i! κ_i / (j! κ_j)`.
pub fn c_const(i: usize, j: usize) -> f64 {
    factorial(i) * kappa(i) / (factorial(j) * kappa(j))
}

/// Volume of the unit ball in dimension `n`.
pub fn kappa(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * kappa(n - 2),
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// All ordered tuples of length `s` with entries in `lo..=hi` summing to `total`.
pub(crate) fn compositions(s: usize, lo: usize, hi: usize, total: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(buf: &mut Vec<usize>, s: usize, lo: usize, hi: usize, left: usize, f: &mut impl FnMut(&[usize])) {
        if buf.len() == s {
            if left == 0 {
                f(buf);
            }
            return;
        }
        let remaining = s - buf.len() - 1;
        for m in lo..=hi {
            if m > left || left - m < remaining * lo || left - m > remaining * hi {
                continue;
            }
            buf.push(m);
            rec(buf, s, lo, hi, left - m, f);
            buf.pop();
        }
    }
    if lo > hi {
        return;
    }
    rec(&mut Vec::with_capacity(s), s, lo, hi, total, f);
}

/// Mixed translative moment `E[V₂(K ⊕ (ϑK)*)] − 2 V₂(K)` of a fixed shape
/// and a uniformly rotated copy, averaged over the rotation by quadrature.
pub fn rotation_averaged_mixed(shape: &GrainShape, tol: Tolerance) -> Result<QuadResult> {
    let two_pi = 2.0 * PI;
    // the support point of the rotated copy jumps when outer normals align
    let normals: Vec<f64> = match shape.vertices() {
        Some(v) => (0..v.len())
            .map(|i| {
                let e = v[(i + 1) % v.len()] - v[i];
                e.y.atan2(e.x) - 0.5 * PI
            })
            .collect(),
        None => Vec::new(),
    };
    let mut breaks = Vec::new();
    for &a in &normals {
        for &b in &normals {
            breaks.push((a - b + PI).rem_euclid(two_pi));
        }
    }
    let area = shape.area();
    let res = integrate(|th| shape.minkowski_sum_area(&shape.rotated(th)) - 2.0 * area, 0.0, two_pi, &breaks, tol)?;
    Ok(res.scale(1.0 / two_pi))
}

/// Densities `V̄_j[Z]`, `j = 0..=d`, of a stationary isotropic Boolean model
/// in dimension `d` from the particle densities `V̄_j[Y] = γ E V_j`
/// (`particle[0] = γ`). Implements the triangular recursion for general `d`.
pub fn isotropic_densities(particle: &[f64]) -> Vec<f64> {
    let d = particle.len() - 1;
    let q = (-particle[d]).exp();
    let mut out = vec![0.0; d + 1];
    out[d] = -(-particle[d]).exp_m1();
    for j in 0..d {
        let mut corr = 0.0;
        for s in 2..=d - j {
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            let mut inner = 0.0;
            compositions(s, j + 1, d - 1, (s - 1) * d + j, &mut |ms| {
                inner += ms.iter().map(|&m| c_const(m, d) * particle[m]).product::<f64>();
            });
            corr += sign / factorial(s) * inner;
        }
        out[j] = q * (particle[j] - c_const(d, j) * corr);
    }
    out
}

/// Densities `(V̄₃, V̄₂, V̄₁, V̄₀)` of a Boolean model of balls in ℝ³ with
/// intensity `gamma` and radius moments `E R`, `E R²`, `E R³`.
pub fn ball_densities_3d(gamma: f64, er: f64, er2: f64, er3: f64) -> Result<[f64; 4]> {
    if [gamma, er, er2, er3].iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::InvalidDistribution("ball radius moments must be finite and nonnegative".into()));
    }
    let particle = [gamma, gamma * 4.0 * er, gamma * 2.0 * PI * er2, gamma * 4.0 * PI / 3.0 * er3];
    let z = isotropic_densities(&particle);
    Ok([z[3], z[2], z[1], z[0]])
}

/// Monte Carlo volume fraction of a ball model in a cube of side `side`:
/// each replicate places Poisson balls in the dilated cube and counts
/// covered uniform test points.
pub fn ball_volume_fraction_mc(
    gamma: f64,
    radius: f64,
    side: f64,
    points: usize,
    reps: u64,
    seed: u64,
    threads: usize,
) -> Result<(f64, f64)> {
    if reps < 2 {
        return Err(Error::Precondition("need at least two replicates".into()));
    }
    let fractions = map_indexed(reps, threads, |k| {
        let mut rng = replicate_rng(seed, k);
        let ext = side + 2.0 * radius;
        let n = poisson(&mut rng, gamma * ext * ext * ext);
        let balls: Vec<[f64; 3]> = (0..n)
            .map(|_| [0, 1, 2].map(|_| rng.random_range(-radius..side + radius)))
            .collect();
        let mut hit = 0usize;
        for _ in 0..points {
            let p = [0, 1, 2].map(|_| rng.random_range(0.0..side));
            if balls.iter().any(|b| (0..3).map(|i| (b[i] - p[i]).powi(2)).sum::<f64>() <= radius * radius) {
                hit += 1;
            }
        }
        hit as f64 / points as f64
    })?;
    let (mean, var) = mean_var(&fractions);
    Ok((mean, (var / reps as f64).sqrt()))
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Expected functionals of `Z ∩ W` for an isotropic model and a convex
/// window with area `area` and half-perimeter `half_perimeter`.
pub fn window_mean_2d(gamma: f64, moments: &GrainMoments, area: f64, half_perimeter: f64) -> FunctionalVector {
    let y1 = gamma * moments.ev1;
    let q = (-gamma * moments.ev2).exp();
    let p = 1.0 - q;
    FunctionalVector::new(
        p + q * (2.0 * half_perimeter * y1 / PI + area * (gamma - y1 * y1 / PI)),
        p * half_perimeter + q * y1 * area,
        p * area,
    )
}

/// Density estimate from replicate measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    /// Means of the half-open window estimator.
    pub densities: DensityVector,
    pub standard_errors: DensityVector,
    /// Covariance matrix of the three means.
    pub covariance: [[f64; 3]; 3],
    /// Means of the plain ratio `φ(Z ∩ W) / V₂(W)`.
    pub naive: DensityVector,
    pub reps: usize,
}

/// Densities from per-replicate half-open and closed-window measurements.
pub fn densities_from_measurements(
    half_open: &[FunctionalVector],
    closed: &[FunctionalVector],
    area: f64,
) -> Result<DensityEstimate> {
    let n = half_open.len();
    if n < 2 {
        return Err(Error::Precondition(format!("need at least two replicates, got {n}")));
    }
    let rows: Vec<[f64; 3]> = half_open.iter().map(|f| f.to_array().map(|x| x / area)).collect();
    let mut mean = [0.0; 3];
    for r in &rows {
        for i in 0..3 {
            mean[i] += r[i] / n as f64;
        }
    }
    let mut cov = [[0.0; 3]; 3];
    for r in &rows {
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / ((n - 1) * n) as f64;
            }
        }
    }
    let mut naive = [0.0; 3];
    for f in closed {
        for (i, x) in f.to_array().iter().enumerate() {
            naive[i] += x / area / closed.len().max(1) as f64;
        }
    }
    Ok(DensityEstimate {
        densities: DensityVector::from_array(mean),
        standard_errors: DensityVector::from_array([0, 1, 2].map(|i| cov[i][i].sqrt())),
        covariance: cov,
        naive: DensityVector::from_array(naive),
        reps: n,
    })
}

/// Measures each sample exactly and averages the per-area functionals.
pub fn estimate_densities(samples: &[GermGrainSample], threads: usize) -> Result<DensityEstimate> {
    if samples.len() < 2 {
        return Err(Error::Precondition(format!("need at least two replicates, got {}", samples.len())));
    }
    let window = samples[0].config.window;
    if samples.iter().any(|s| s.config.window != window) {
        return Err(Error::Precondition("all samples must share one window".into()));
    }
    let pairs = map_indexed(samples.len() as u64, threads, |k| {
        let g = &samples[k as usize].placed;
        (half_open_measure(g, &window), arrangement_measure(g, &window))
    })?;
    let (h, c): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    densities_from_measurements(&h, &c, window.area())
}

/// Simulates and measures `reps` replicates of `config` without keeping the
/// realizations.
pub fn simulate_densities(config: &ModelConfig, reps: usize, threads: usize) -> Result<DensityEstimate> {
    let window = config.window;
    let pairs = map_indexed(reps as u64, threads, |k| {
        let g = sample_grains(config, k);
        (half_open_measure(&g, &window), arrangement_measure(&g, &window))
    })?;
    let (h, c): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    densities_from_measurements(&h, &c, window.area())
}

/// Recovered intensity and mean grain characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityEstimate {
    pub gamma: f64,
    pub ev1: f64,
    pub ev2: f64,
}

/// Inverts the planar isotropic density formulas.
pub fn invert_intensity(observed: &DensityVector, isotropic: bool) -> Result<IntensityEstimate> {
    if !isotropic {
        return Err(Error::Precondition(
            "anisotropic inversion needs the mixed translative moment and is not supported".into(),
        ));
    }
    let DensityVector { d0, d1, d2 } = *observed;
    if !(0.0..1.0).contains(&d2) {
        return Err(Error::Estimation(format!("area density must lie in [0, 1), got {d2}")));
    }
    let t = -(-d2).ln_1p();
    let u = d1 / (1.0 - d2);
    let gamma = d0 / (1.0 - d2) + u * u / PI;
    if !(gamma > 0.0) {
        return Err(Error::Estimation(format!("recovered intensity {gamma} is not positive")));
    }
    Ok(IntensityEstimate { gamma, ev1: u / gamma, ev2: t / gamma })
}

/// Delta-method standard error of the recovered intensity.
pub fn intensity_standard_error(observed: &DensityVector, covariance: &[[f64; 3]; 3]) -> f64 {
    let DensityVector { d0, d1, d2 } = *observed;
    let q = 1.0 - d2;
    let grad = [1.0 / q, 2.0 * d1 / (PI * q * q), d0 / (q * q) + 2.0 * d1 * d1 / (PI * q * q * q)];
    let mut v = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            v += grad[i] * covariance[i][j] * grad[j];
        }
    }
    v.max(0.0).sqrt()
}

/// Half-width of the reported intensity interval in standard errors.
pub const INTERVAL_STANDARD_ERRORS: f64 = 3.0;

/// Recovered intensity with its delta-method interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityReport {
    pub estimate: IntensityEstimate,
    pub standard_error: f64,
    pub lower: f64,
    pub upper: f64,
}

impl IntensityReport {
    pub fn covers(&self, gamma: f64) -> bool {
        self.lower <= gamma && gamma <= self.upper
    }
}

pub fn intensity_report(densities: &DensityEstimate) -> Result<IntensityReport> {
    let estimate = invert_intensity(&densities.densities, true)?;
    let standard_error = intensity_standard_error(&densities.densities, &densities.covariance);
    let half = INTERVAL_STANDARD_ERRORS * standard_error;
    Ok(IntensityReport { estimate, standard_error, lower: estimate.gamma - half, upper: estimate.gamma + half })
}

/// Boundary bias of the plain ratio estimator on an isotropic model:
/// expected `φ(Z ∩ W)` minus `density · V₂(W)`.
pub fn naive_window_bias(gamma: f64, moments: &GrainMoments, window: &Window) -> Result<FunctionalVector> {
    let dens = miles_densities_2d(gamma, moments, true)?;
    let mean = window_mean_2d(gamma, moments, window.area(), 0.5 * window.perimeter());
    Ok(mean - FunctionalVector::new(dens.d0, dens.d1, dens.d2) * window.area())
}
