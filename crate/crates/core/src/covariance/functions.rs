use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grain::{GrainShape, ShapeKind, Vec2};
use crate::process::{GrainDistribution, GrainFamily, ParamLaw};
use crate::quad::{self, QuadResult, Tolerance};

use super::table::ChebTable;

/// Error slot for fallible integrands inside infallible quadrature closures.
pub(crate) struct Slot(Option<Error>);

impl Slot {
    pub(crate) fn new() -> Self {
        Slot(None)
    }

    pub(crate) fn take(&mut self, r: Result<f64>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                self.0.get_or_insert(e);
                f64::NAN
            }
        }
    }

    pub(crate) fn check<T>(self, value: T) -> Result<T> {
        match self.0 {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }
}

/// Segments `S` such that the combinatorics of `K ∩ (K + t)` change when
/// `t` crosses `S`: a vertex of one copy meeting an edge of the other.
fn event_segments(vs: &[Vec2]) -> Vec<(Vec2, Vec2)> {
    let n = vs.len();
    let mut out = Vec::with_capacity(2 * n * n);
    for v in vs {
        for j in 0..n {
            let (a, b) = (vs[j], vs[(j + 1) % n]);
            out.push((a - *v, b - *v));
            out.push((*v - a, *v - b));
        }
    }
    out
}

/// Angles in `(0, 2π)` at which the circle of radius `r` crosses an event segment.
fn event_angles(segments: &[(Vec2, Vec2)], r: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for &(p, q) in segments {
        let d = q - p;
        let (a, b, c) = (d.dot(d), 2.0 * p.dot(d), p.dot(p) - r * r);
        if a == 0.0 {
            continue;
        }
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        for s in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
            if (-1e-12..=1.0 + 1e-12).contains(&s) {
                let x = p + d * s;
                let ang = x.y.atan2(x.x).rem_euclid(2.0 * PI);
                out.push(ang);
            }
        }
    }
    out
}

/// Radii at which the set of event angles changes combinatorially.
fn event_radii(segments: &[(Vec2, Vec2)]) -> Vec<f64> {
    let mut out = Vec::new();
    for &(p, q) in segments {
        out.push(p.norm());
        out.push(q.norm());
        let d = q - p;
        let len2 = d.dot(d);
        if len2 > 0.0 {
            let s = -p.dot(d) / len2;
            if s > 0.0 && s < 1.0 {
                out.push((p + d * s).norm());
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    out
}

/// Rotation averages of `t ↦ V₂(K ∩ (K + t))` and `t ↦ Φ₁(K, K° + t)` over
/// the circle `|t| = r`.
fn rotation_means(shape: &GrainShape, segments: &[(Vec2, Vec2)], r: f64, tol: Tolerance) -> Result<(f64, f64)> {
    if let ShapeKind::Disk { radius } = shape.kind() {
        let d = r.min(2.0 * radius);
        return Ok((shape.covariogram(Vec2::new(d, 0.0)), radius * (d / (2.0 * radius)).acos()));
    }
    if r == 0.0 {
        // each edge lies in K° + t for half of the directions
        return Ok((shape.area(), 0.25 * shape.perimeter()));
    }
    let mut breaks = event_angles(segments, r);
    breaks.sort_by(f64::total_cmp);
    let dir = |th: f64| Vec2::new(r * th.cos(), r * th.sin());
    let cov = quad::integrate(|th| shape.covariogram(dir(th)), 0.0, 2.0 * PI, &breaks, tol)?;
    let bnd = quad::integrate(|th| shape.boundary_covariogram(dir(th)), 0.0, 2.0 * PI, &breaks, tol)?;
    Ok((cov.value / (2.0 * PI), bnd.value / (2.0 * PI)))
}

fn law_breaks(law: &ParamLaw) -> Vec<f64> {
    match law {
        ParamLaw::Constant { value } => vec![2.0 * value],
        ParamLaw::Uniform { lo, hi } => vec![2.0 * lo, 2.0 * hi],
        ParamLaw::Discrete { values, .. } => values.iter().map(|v| 2.0 * v).collect(),
    }
}

#[derive(Debug, Clone)]
enum Profile {
    /// Disks of one radius: closed forms.
    Disk { radius: f64 },
    /// Isotropic law: tabulated rotation-averaged profiles, without the factor γ.
    Radial { cov: ChebTable, bnd: ChebTable },
    /// Direction-dependent law: evaluated on demand.
    Anisotropic,
}

/// The expected covariogram `c2(t) = γ E V₂(Z₀ ∩ (Z₀ + t))` and the boundary
/// analogue `c1(t) = γ E Φ₁(Z₀, Z₀° + t)` of the typical grain.
#[derive(Debug, Clone)]
pub struct CovariogramFunctions {
    gamma: f64,
    grains: GrainDistribution,
    cutoff: f64,
    profile: Profile,
    tol: Tolerance,
}

impl CovariogramFunctions {
    pub fn new(gamma: f64, grains: &GrainDistribution) -> Result<Self> {
        Self::with_tolerance(gamma, grains, Tolerance::new(1e-13, 1e-11))
    }

    /// `tol` governs the inner (per-point) evaluations.
    pub fn with_tolerance(gamma: f64, grains: &GrainDistribution, tol: Tolerance) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidConfig(format!("intensity must be finite and nonnegative, got {gamma}")));
        }
        let cutoff = 2.0 * grains.rmax();
        let profile = match grains.family() {
            GrainFamily::Disk { radius: ParamLaw::Constant { value } } => Profile::Disk { radius: *value },
            GrainFamily::Fixed { shape } if shape.is_disk() => Profile::Disk { radius: shape.circumradius() },
            _ if grains.is_isotropic() => Self::tabulate(grains, cutoff, tol)?,
            _ => Profile::Anisotropic,
        };
        Ok(Self { gamma, grains: grains.clone(), cutoff, profile, tol })
    }

    fn tabulate(grains: &GrainDistribution, cutoff: f64, tol: Tolerance) -> Result<Profile> {
        let (breaks, fixed_segments) = match grains.family() {
            GrainFamily::Fixed { shape } => {
                let segs = event_segments(&shape.vertices().expect("non-disk shapes are polygonal"));
                (event_radii(&segs), Some(segs))
            }
            GrainFamily::Disk { radius } => (law_breaks(radius), None),
            GrainFamily::Rect { halfwidth, halfheight } => {
                let mut b = law_breaks(halfwidth);
                b.extend(law_breaks(halfheight));
                (b, None)
            }
        };
        let scale = {
            let m = grains.moments();
            (m.ev2, m.ev1)
        };
        let means = |r: f64| -> Result<(f64, f64)> {
            match &fixed_segments {
                Some(segs) => {
                    let GrainFamily::Fixed { shape } = grains.family() else { unreachable!() };
                    rotation_means(shape, segs, r, tol)
                }
                None => {
                    let mut slot = Slot::new();
                    let mut bslot = Slot::new();
                    let cov = grains.expect_shape(
                        |k| slot.take(rotation_means(k, &polygon_segments(k), r, tol).map(|v| v.0)),
                        &[0.5 * r],
                        tol,
                    )?;
                    let bnd = grains.expect_shape(
                        |k| bslot.take(rotation_means(k, &polygon_segments(k), r, tol).map(|v| v.1)),
                        &[0.5 * r],
                        tol,
                    )?;
                    slot.check(())?;
                    bslot.check(())?;
                    Ok((cov, bnd))
                }
            }
        };
        let cov = ChebTable::build(|r| means(r).map(|v| v.0), 0.0, cutoff, &breaks, 1e-13 * scale.0)?;
        let bnd = ChebTable::build(|r| means(r).map(|v| v.1), 0.0, cutoff, &breaks, 1e-13 * scale.1)?;
        Ok(Profile::Radial { cov, bnd })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn grains(&self) -> &GrainDistribution {
        &self.grains
    }

    /// Both functions vanish for `|t| ≥ cutoff = 2 rmax`.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self.profile, Profile::Anisotropic)
    }

    /// Radii where the radial profiles may have kinks.
    pub(crate) fn radial_breaks(&self) -> Vec<f64> {
        match &self.profile {
            Profile::Disk { radius } => vec![2.0 * radius],
            Profile::Radial { cov, bnd } => {
                let mut b = cov.knots();
                b.extend(bnd.knots());
                b.sort_by(f64::total_cmp);
                b.dedup();
                b
            }
            Profile::Anisotropic => Vec::new(),
        }
    }

    fn require_radial(&self) -> Result<()> {
        if self.is_radial() {
            Ok(())
        } else {
            Err(Error::Precondition("radial profiles need an isotropic grain distribution".into()))
        }
    }

    /// `c2` at distance `r` for isotropic laws.
    pub fn c2_radial(&self, r: f64) -> Result<f64> {
        self.require_radial()?;
        Ok(self.gamma * self.cov_profile(r.abs()))
    }

    /// `c1` at distance `r` for isotropic laws.
    pub fn c1_radial(&self, r: f64) -> Result<f64> {
        self.require_radial()?;
        Ok(self.gamma * self.bnd_profile(r.abs()))
    }

    fn cov_profile(&self, r: f64) -> f64 {
        match &self.profile {
            Profile::Disk { radius } => crate::grain::disk_lens_area(*radius, r),
            Profile::Radial { cov, .. } => cov.eval(r),
            Profile::Anisotropic => unreachable!("checked by callers"),
        }
    }

    fn bnd_profile(&self, r: f64) -> f64 {
        match &self.profile {
            Profile::Disk { radius } => {
                if r >= 2.0 * radius {
                    0.0
                } else {
                    radius * (r / (2.0 * radius)).acos()
                }
            }
            Profile::Radial { bnd, .. } => bnd.eval(r),
            Profile::Anisotropic => unreachable!("checked by callers"),
        }
    }

    pub fn c2(&self, t: Vec2) -> Result<f64> {
        if self.is_radial() {
            return self.c2_radial(t.norm());
        }
        if t.norm() >= self.cutoff || self.gamma == 0.0 {
            return Ok(0.0);
        }
        let breaks = [0.5 * t.x.abs(), 0.5 * t.y.abs()];
        Ok(self.gamma * self.grains.expect_shape(|k| k.covariogram(t), &breaks, self.tol)?)
    }

    pub fn c1(&self, t: Vec2) -> Result<f64> {
        if self.is_radial() {
            return self.c1_radial(t.norm());
        }
        if t.norm() >= self.cutoff || self.gamma == 0.0 {
            return Ok(0.0);
        }
        let breaks = [0.5 * t.x.abs(), 0.5 * t.y.abs()];
        Ok(self.gamma * self.grains.expect_shape(|k| k.boundary_covariogram(t), &breaks, self.tol)?)
    }

    /// `∫ F(c2(t), c1(t)) dt` over the disk of radius `cutoff`. `F(0, 0)`
    /// must vanish. `even` halves the angular range when the integrand is
    /// symmetric under `t ↦ −t`.
    pub(crate) fn integrate_plane<F: Fn(f64, f64) -> f64>(&self, f: F, even: bool, tol: Tolerance) -> Result<QuadResult> {
        let mut slot = Slot::new();
        if self.is_radial() {
            let breaks = self.radial_breaks();
            let res = quad::integrate(
                |r| {
                    let v = self.c2_radial(r).and_then(|c2| Ok(f(c2, self.c1_radial(r)?)));
                    2.0 * PI * r * slot.take(v)
                },
                0.0,
                self.cutoff,
                &breaks,
                tol,
            );
            return slot.check(res)?;
        }
        let span = if even { PI } else { 2.0 * PI };
        let factor = if even { 2.0 } else { 1.0 };
        let inner_tol = Tolerance { abs: tol.abs * 1e-2 / span, rel: tol.rel * 1e-2, max_steps: tol.max_steps };
        let mut inner_slot = Slot::new();
        let res = quad::integrate(
            |th| {
                let u = Vec2::new(th.cos(), th.sin());
                let radial = quad::integrate(
                    |r| {
                        let t = u * r;
                        let v = self.c2(t).and_then(|c2| Ok(f(c2, self.c1(t)?)));
                        r * inner_slot.take(v)
                    },
                    0.0,
                    self.cutoff,
                    &[],
                    inner_tol,
                );
                slot.take(radial.map(|q| q.value))
            },
            0.0,
            span,
            &[0.5 * PI, PI, 1.5 * PI],
            tol,
        );
        inner_slot.check(())?;
        Ok(slot.check(res)??.scale(factor))
    }
}

fn polygon_segments(shape: &GrainShape) -> Vec<(Vec2, Vec2)> {
    shape.vertices().map(|vs| event_segments(&vs)).unwrap_or_default()
}
