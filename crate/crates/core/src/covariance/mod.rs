//! Asymptotic covariances `σ(V_i, V_j)` of the intrinsic volumes of a planar
//! Boolean model observed in growing windows.
//!
//! Everything reduces to the two functions of [`CovariogramFunctions`]:
//! `ρ(V₂,V₂) = ∫(e^{c2} − 1)`, `ρ(V₁,V₂) = ∫ e^{c2} c1` and
//! `ρ(V₁,V₁) = ∫ e^{c2} c1² + γ E ¼∬_{∂K×∂K} e^{c2(y−z)} dy dz`. The Euler
//! characteristic row needs isotropy and comes from kinematic series in
//! closed form.

mod functions;
mod table;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grain::{GrainShape, ShapeKind};
use crate::moments::{c_const, compositions, volume_fraction, GrainMoments};
use crate::process::GrainDistribution;
use crate::quad::{self, QuadResult, Tolerance};
use crate::union::FunctionalVector;

pub use functions::CovariogramFunctions;
use functions::Slot;

/// Symmetric table `ρ(V_i, V_j)` with quadrature error estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoTable {
    pub values: [[f64; 3]; 3],
    pub errors: [[f64; 3]; 3],
}

/// Symmetric 3×3 matrix `σ(V_i, V_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovMatrix {
    pub values: [[f64; 3]; 3],
}

impl CovMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    /// Lower Cholesky factor, or `None` when the matrix is not positive definite.
    pub fn cholesky(&self) -> Option<[[f64; 3]; 3]> {
        let a = &self.values;
        let mut l = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..=i {
                let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
                if i == j {
                    let d = a[i][i] - s;
                    if !(d > 0.0) {
                        return None;
                    }
                    l[i][i] = d.sqrt();
                } else {
                    l[i][j] = (a[i][j] - s) / l[j][j];
                }
            }
        }
        Some(l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_some()
    }

    /// `aᵀ Σ a`.
    pub fn quadratic_form(&self, a: [f64; 3]) -> f64 {
        (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| a[i] * a[j] * self.values[i][j]).sum()
    }
}

/// One comparison between the general assembly and a direct formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub entry: (usize, usize),
    pub assembled: f64,
    pub direct: f64,
    pub relative: f64,
}

/// Relative disagreement tolerated between the two derivations.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub sigma: CovMatrix,
    pub rho: RhoTable,
    /// `P[i][k] = P_{i,k}` evaluated at the particle densities.
    pub polynomials: [[f64; 3]; 3],
    pub cross_checks: Vec<CrossCheck>,
    /// `∫ e^{c2} c1²` and the boundary-pair part of `ρ(V₁,V₁)`.
    pub rho11_parts: [QuadResult; 2],
}

impl CovariogramFunctions {
    /// Default outer tolerance: absolute `1e-10` relative to `c2(0)` times
    /// the area of the support.
    pub fn outer_tolerance(&self) -> Tolerance {
        let scale = self.gamma() * self.grains().moments().ev2 * PI * self.cutoff() * self.cutoff();
        Tolerance { abs: 1e-10 * scale.max(f64::MIN_POSITIVE), rel: 1e-10, max_steps: 4000 }
    }

    /// `ρ(V₂, V₂) = ∫ (e^{c2(y)} − 1) dy`.
    pub fn rho_22(&self) -> Result<QuadResult> {
        self.rho_22_with(self.outer_tolerance())
    }

    pub fn rho_22_with(&self, tol: Tolerance) -> Result<QuadResult> {
        if self.gamma() == 0.0 {
            return Ok(QuadResult::exact(0.0));
        }
        self.integrate_plane(|c2, _| c2.exp_m1(), true, tol)
    }

    /// Asymptotic variance of the area, `(1 − p)² ρ(V₂, V₂)`.
    pub fn sigma_volume(&self) -> Result<QuadResult> {
        let q = (-self.gamma() * self.grains().moments().ev2).exp();
        Ok(self.rho_22()?.scale(q * q))
    }

    /// `ρ(V₁, V₂) = ∫ e^{c2(t)} c1(t) dt`.
    pub fn rho_12(&self) -> Result<QuadResult> {
        if self.gamma() == 0.0 {
            return Ok(QuadResult::exact(0.0));
        }
        self.integrate_plane(|c2, c1| c2.exp() * c1, false, self.outer_tolerance())
    }

    /// The two parts of `ρ(V₁, V₁)`: the cross-grain term `∫ e^{c2} c1²` and
    /// the same-grain term `γ E ¼∬ e^{c2(y−z)}` over pairs of boundary points.
    pub fn rho_11_parts(&self) -> Result<[QuadResult; 2]> {
        let m = self.grains().moments();
        if !(m.ev2 > 0.0) {
            return Err(Error::Precondition("ρ(V₁,V₁) needs grains with nonempty interior".into()));
        }
        if self.gamma() == 0.0 {
            return Ok([QuadResult::exact(0.0); 2]);
        }
        let tol = self.outer_tolerance();
        let cross = self.integrate_plane(|c2, c1| c2.exp() * c1 * c1, false, tol)?;
        let mut slot = Slot::new();
        let mut err = 0.0;
        let same_excess = self.grains().expect_shape(
            |k| {
                let r = self.boundary_pairs(k, tol);
                slot.take(r.map(|q| {
                    err += q.error;
                    q.value
                }))
            },
            &[],
            tol,
        );
        let same_excess = slot.check(same_excess)??;
        let same = self.gamma() * (m.ev1sq + same_excess);
        Ok([cross, QuadResult { value: same, error: self.gamma() * err, evaluations: 0 }])
    }

    pub fn rho_11(&self) -> Result<QuadResult> {
        let [a, b] = self.rho_11_parts()?;
        Ok(a + b)
    }

    /// `¼∬_{∂K×∂K} (e^{c2(y−z)} − 1) dy dz`.
    fn boundary_pairs(&self, shape: &GrainShape, tol: Tolerance) -> Result<QuadResult> {
        let tol = Tolerance { abs: tol.abs * 1e-2, rel: tol.rel, max_steps: tol.max_steps };
        if let ShapeKind::Disk { radius } = shape.kind() {
            // chord length 2R sin(φ/2) at angular separation φ
            let radius = *radius;
            let breaks: Vec<f64> = self
                .radial_breaks()
                .iter()
                .filter(|&&b| b < 2.0 * radius)
                .map(|b| 2.0 * (b / (2.0 * radius)).asin())
                .collect();
            let mut slot = Slot::new();
            let r = quad::tanh_sinh_piecewise(
                |phi| slot.take(self.c2_radial(2.0 * radius * (0.5 * phi).sin()).map(f64::exp_m1)),
                0.0,
                PI,
                &breaks,
                tol,
            );
            return Ok(slot.check(r)??.scale(PI * radius * radius));
        }
        let vs = shape.vertices().expect("non-disk shapes are polygonal");
        let n = vs.len();
        let mut total = QuadResult::default();
        let mut slot = Slot::new();
        for i in 0..n {
            let (a, ea) = (vs[i], vs[(i + 1) % n] - vs[i]);
            let la = ea.norm();
            for j in i..n {
                let (b, eb) = (vs[j], vs[(j + 1) % n] - vs[j]);
                let lb = eb.norm();
                let outer = quad::integrate(
                    |s| {
                        let y = a + ea * s;
                        let breaks = if i == j { vec![s] } else { Vec::new() };
                        let inner = quad::integrate(
                            |u| slot.take(self.c2(y - (b + eb * u)).map(f64::exp_m1)),
                            0.0,
                            1.0,
                            &breaks,
                            Tolerance { abs: tol.abs * 1e-2, ..tol },
                        );
                        match inner {
                            Ok(q) => q.value,
                            Err(e) => slot.take(Err(e)),
                        }
                    },
                    0.0,
                    1.0,
                    &[],
                    tol,
                )?;
                let weight = if i == j { 0.25 } else { 0.5 };
                total = total + outer.scale(weight * la * lb);
            }
        }
        slot.check(total)
    }
}

/// `ρ(V₂, V₂)` for a model with intensity `gamma`.
pub fn rho_22(gamma: f64, grains: &GrainDistribution) -> Result<QuadResult> {
    CovariogramFunctions::new(gamma, grains)?.rho_22()
}

/// `σ(V₂, V₂) = (1 − p)² ∫ (e^{c2} − 1)`.
pub fn sigma_volume(gamma: f64, grains: &GrainDistribution) -> Result<QuadResult> {
    CovariogramFunctions::new(gamma, grains)?.sigma_volume()
}

pub fn rho_12(gamma: f64, grains: &GrainDistribution) -> Result<QuadResult> {
    CovariogramFunctions::new(gamma, grains)?.rho_12()
}

pub fn rho_11(gamma: f64, grains: &GrainDistribution) -> Result<QuadResult> {
    CovariogramFunctions::new(gamma, grains)?.rho_11()
}

/// `ρ(V₀, V_i)` in dimension `d = particle.len() − 1` from the particle
/// densities `particle[j] = γ E V_j` (`particle[0] = γ`). For `i < d` the
/// grain law must be isotropic.
pub fn rho_0i_general(i: usize, particle: &[f64]) -> Result<f64> {
    let d = particle.len().checked_sub(1).ok_or_else(|| Error::Precondition("no particle densities".into()))?;
    if i > d {
        return Err(Error::Precondition(format!("index {i} exceeds the dimension {d}")));
    }
    if i == d {
        return Ok(particle[d].exp_m1());
    }
    let mut sum = 0.0;
    let mut fact = 1.0;
    for l in 1..=d - i {
        fact *= l as f64;
        let mut inner = 0.0;
        compositions(l, i, d - 1, (l - 1) * d + i, &mut |ms| {
            inner += ms.iter().map(|&m| c_const(m, d) * particle[m]).product::<f64>();
        });
        sum += inner / fact;
    }
    Ok(particle[d].exp() * c_const(d, i) * sum)
}

/// Planar `ρ(V₀, V_i)`.
pub fn rho_0i(gamma: f64, moments: &GrainMoments, i: usize, isotropic: bool) -> Result<f64> {
    if i < 2 && !isotropic {
        return Err(Error::Precondition(format!("ρ(V₀,V{i}) is only available for isotropic grain laws")));
    }
    rho_0i_general(i, &particle_densities(gamma, moments))
}

/// `[γ, γ E V₁, γ E V₂]`.
pub fn particle_densities(gamma: f64, moments: &GrainMoments) -> [f64; 3] {
    [gamma, gamma * moments.ev1, gamma * moments.ev2]
}

/// The polynomial `P_{j,k}` in dimension `d` evaluated at `t[m]`,
/// `m = j..d` (entries below `j` are ignored).
pub fn p_polynomial(d: usize, j: usize, k: usize, t: &[f64]) -> Result<f64> {
    if !(j <= k && k <= d) {
        return Err(Error::Precondition(format!("P_(j,k) needs 0 ≤ j ≤ k ≤ d, got j = {j}, k = {k}, d = {d}")));
    }
    if j == d {
        return Ok(1.0);
    }
    if t.len() < d {
        return Err(Error::Precondition(format!("P_(j,k) needs {d} arguments, got {}", t.len())));
    }
    let mut sum = 0.0;
    let mut fact = 1.0;
    for s in 1..=k - j {
        fact *= s as f64;
        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
        let mut inner = 0.0;
        compositions(s, j, d - 1, s * d + j - k, &mut |ms| {
            inner += ms.iter().map(|&m| c_const(m, d) * t[m]).product::<f64>();
        });
        sum += sign / fact * inner;
    }
    Ok(if k == j { 1.0 } else { 0.0 } + c_const(k, j) * sum)
}

/// All planar `P_{i,k}` as an upper-triangular matrix.
pub fn polynomial_matrix(particle: &[f64; 3]) -> [[f64; 3]; 3] {
    let mut p = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in i..3 {
            p[i][k] = p_polynomial(2, i, k, particle).expect("indices in range");
        }
    }
    p
}

/// `V*_j(K) = E V_j(Z ∩ K) − V_j(K)` for a convex body with intrinsic
/// volumes `body` (all zero for the empty set).
pub fn phi_star(j: usize, body: FunctionalVector, gamma: f64, moments: &GrainMoments, isotropic: bool) -> Result<f64> {
    if j > 2 {
        return Err(Error::Precondition(format!("no intrinsic volume V{j} in the plane")));
    }
    if j < 2 && !isotropic {
        return Err(Error::Precondition(format!("V*{j} is only available for isotropic grain laws")));
    }
    let q = (-gamma * moments.ev2).exp();
    let particle = particle_densities(gamma, moments);
    let mut s = 0.0;
    for k in j..=2 {
        s += body.get(k) * p_polynomial(2, j, k, &particle)?;
    }
    Ok(-q * s)
}

fn relative_gap(a: f64, b: f64, scale: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(1e-12 * scale).max(f64::MIN_POSITIVE);
    (a - b).abs() / denom
}

/// Full asymptotic covariance matrix of `(V₀, V₁, V₂)` for an isotropic law.
///
/// Entries `(1,2)`, `(1,1)` and `(0,2)` are recomputed from their direct
/// expressions; a relative disagreement above [`CROSS_CHECK_TOLERANCE`] is
/// reported as [`Error::Consistency`].
pub fn sigma_matrix(gamma: f64, grains: &GrainDistribution) -> Result<CovarianceReport> {
    sigma_matrix_with(CovariogramFunctions::new(gamma, grains)?)
}

/// [`sigma_matrix`] with caller-built covariogram functions, e.g. with a
/// custom inner tolerance.
pub fn sigma_matrix_with(f: CovariogramFunctions) -> Result<CovarianceReport> {
    let (gamma, grains) = (f.gamma(), f.grains());
    if !grains.is_isotropic() {
        return Err(Error::Precondition(
            "the covariance matrix needs an isotropic grain law (disks or rotated shapes)".into(),
        ));
    }
    let m = grains.moments();
    let particle = particle_densities(gamma, &m);
    let [g, y1, y2] = particle;
    let q = (-y2).exp();
    let p = volume_fraction(gamma, m.ev2);

    let r22 = f.rho_22()?;
    let r12 = f.rho_12()?;
    let [j112, j11] = f.rho_11_parts()?;
    let r11 = j112 + j11;
    let r00 = rho_0i_general(0, &particle)?;
    let r01 = rho_0i_general(1, &particle)?;
    let r02 = rho_0i_general(2, &particle)?;
    let values = [[r00, r01, r02], [r01, r11.value, r12.value], [r02, r12.value, r22.value]];
    let errors = [[0.0, 0.0, 0.0], [0.0, r11.error, r12.error], [0.0, r12.error, r22.error]];
    let rho = RhoTable { values, errors };

    let pm = polynomial_matrix(&particle);
    let mut sigma = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let mut s = 0.0;
            for k in i..3 {
                for l in j..3 {
                    s += pm[i][k] * pm[j][l] * values[k][l];
                }
            }
            sigma[i][j] = q * q * s;
            sigma[j][i] = sigma[i][j];
        }
    }

    let q2 = q * q;
    let direct = [
        ((1, 2), q2 * (r12.value - y1 * r22.value), q2 * (r12.value.abs() + (y1 * r22.value).abs())),
        (
            (1, 1),
            q2 * (y1 * y1 * r22.value + j112.value - 2.0 * y1 * r12.value + j11.value),
            q2 * ((y1 * y1 * r22.value).abs() + j112.value.abs() + (2.0 * y1 * r12.value).abs() + j11.value.abs()),
        ),
        (
            (0, 2),
            p * (1.0 - p) - q2 * (g - y1 * y1 / PI) * r22.value - q2 * 2.0 * y1 / PI * r12.value,
            p * (1.0 - p) + q2 * ((g - y1 * y1 / PI) * r22.value).abs() + q2 * (2.0 * y1 / PI * r12.value).abs(),
        ),
    ];
    let mut cross_checks = Vec::new();
    for ((i, j), d, scale) in direct {
        let rel = relative_gap(sigma[i][j], d, scale);
        cross_checks.push(CrossCheck { entry: (i, j), assembled: sigma[i][j], direct: d, relative: rel });
        if rel > CROSS_CHECK_TOLERANCE {
            return Err(Error::Consistency(format!(
                "σ({i},{j}) assembled as {} but the direct formula gives {d} (relative gap {rel:.2e})",
                sigma[i][j]
            )));
        }
    }
    Ok(CovarianceReport {
        sigma: CovMatrix { values: sigma },
        rho,
        polynomials: pm,
        cross_checks,
        rho11_parts: [j112, j11],
    })
}

#[cfg(test)]
mod tests;
