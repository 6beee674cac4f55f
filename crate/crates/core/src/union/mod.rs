//! Intrinsic volumes of unions of placed grains observed in a window.
//!
//! Three engines compute `(V₀, V₁, V₂)` of `Z ∩ W`:
//! [`arrangement_measure`] walks the boundary arrangement and is the
//! workhorse, [`inclusion_exclusion_measure`] sums convex intersections over
//! subsets and serves as an oracle for small inputs, and [`pixel_measure`]
//! approximates all three from 2×2 pixel configurations.

mod arrangement;
mod cell;
pub(crate) mod curves;
mod raster;

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grain::{GrainShape, Vec2};

pub use arrangement::{arrangement_measure, arrangement_measure_in, half_open_measure};
pub use cell::{inclusion_exclusion_measure, intersect_convex, BoundaryPiece, ConvexCell, DEFAULT_CELL_CAP, IE_GRAIN_LIMIT};
pub use raster::{pixel_measure, render_pgm, PixelCounts};

/// `(V₀, V₁, V₂)` of a polyconvex set: Euler characteristic, half the
/// boundary length, area.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FunctionalVector {
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
}

impl FunctionalVector {
    pub const ZERO: FunctionalVector = FunctionalVector { v0: 0.0, v1: 0.0, v2: 0.0 };

    pub fn new(v0: f64, v1: f64, v2: f64) -> Self {
        Self { v0, v1, v2 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.v0, self.v1, self.v2]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { v0: a[0], v1: a[1], v2: a[2] }
    }

    /// Component by intrinsic-volume index.
    pub fn get(&self, i: usize) -> f64 {
        self.to_array()[i]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.v0 - other.v0).abs().max((self.v1 - other.v1).abs()).max((self.v2 - other.v2).abs())
    }
}

impl Add for FunctionalVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.v0 + o.v0, self.v1 + o.v1, self.v2 + o.v2)
    }
}

impl AddAssign for FunctionalVector {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for FunctionalVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.v0 - o.v0, self.v1 - o.v1, self.v2 - o.v2)
    }
}

impl Neg for FunctionalVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.v0, -self.v1, -self.v2)
    }
}

impl Mul<f64> for FunctionalVector {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.v0 * k, self.v1 * k, self.v2 * k)
    }
}

/// A grain translated to `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedGrain {
    pub center: Vec2,
    pub shape: GrainShape,
}

impl PlacedGrain {
    pub fn new(center: Vec2, shape: GrainShape) -> Self {
        Self { center, shape }
    }

    pub fn translated(&self, v: Vec2) -> Self {
        Self { center: self.center + v, shape: self.shape.clone() }
    }

    pub fn circumradius(&self) -> f64 {
        self.shape.circumradius()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.shape.contains(p - self.center)
    }
}

/// Axis-aligned observation window `[lo.x, hi.x] × [lo.y, hi.y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowRecord", into = "WindowRecord")]
pub struct Window {
    lo: Vec2,
    hi: Vec2,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowRecord {
    lo: Vec2,
    hi: Vec2,
}

impl TryFrom<WindowRecord> for Window {
    type Error = Error;
    fn try_from(r: WindowRecord) -> Result<Self> {
        Window::new(r.lo, r.hi)
    }
}

impl From<Window> for WindowRecord {
    fn from(w: Window) -> Self {
        WindowRecord { lo: w.lo, hi: w.hi }
    }
}

impl Window {
    pub fn new(lo: Vec2, hi: Vec2) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidWindow("corners must be finite".into()));
        }
        if !(lo.x < hi.x && lo.y < hi.y) {
            return Err(Error::InvalidWindow(format!(
                "need lo < hi componentwise, got lo = ({}, {}), hi = ({}, {})",
                lo.x, lo.y, hi.x, hi.y
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Window of the given size centred at the origin.
    pub fn centered(width: f64, height: f64) -> Result<Self> {
        Self::new(Vec2::new(-0.5 * width, -0.5 * height), Vec2::new(0.5 * width, 0.5 * height))
    }

    pub fn lo(&self) -> Vec2 {
        self.lo
    }

    pub fn hi(&self) -> Vec2 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi.x - self.lo.x
    }

    pub fn height(&self) -> f64 {
        self.hi.y - self.lo.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.width() + self.height())
    }

    pub fn center(&self) -> Vec2 {
        (self.lo + self.hi) * 0.5
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.lo.x && p.x <= self.hi.x && p.y >= self.lo.y && p.y <= self.hi.y
    }

    /// Area of `W ⊕ B(r)`.
    pub fn dilated_area(&self, r: f64) -> f64 {
        self.area() + self.perimeter() * r + std::f64::consts::PI * r * r
    }

    /// The window `r·W` (scaled about the origin).
    pub fn scaled(&self, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidWindow(format!("scale must be positive, got {r}")));
        }
        Self::new(self.lo * r, self.hi * r)
    }

    pub fn translated(&self, v: Vec2) -> Self {
        Self { lo: self.lo + v, hi: self.hi + v }
    }

    /// Counterclockwise corners starting at `lo`.
    pub fn corners(&self) -> [Vec2; 4] {
        [self.lo, Vec2::new(self.hi.x, self.lo.y), self.hi, Vec2::new(self.lo.x, self.hi.y)]
    }

    /// Distance from `p` to the closed window (0 inside).
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let dx = (self.lo.x - p.x).max(p.x - self.hi.x).max(0.0);
        let dy = (self.lo.y - p.y).max(p.y - self.hi.y).max(0.0);
        dx.hypot(dy)
    }

    /// Distance from an interior point to the window boundary.
    pub fn inner_distance(&self, p: Vec2) -> f64 {
        (p.x - self.lo.x).min(self.hi.x - p.x).min(p.y - self.lo.y).min(self.hi.y - p.y)
    }

    pub(crate) fn body(&self) -> curves::Body {
        curves::Body::Polygon { vs: self.corners().to_vec() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_validation() {
        assert!(Window::new(Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0)).is_err());
        assert!(Window::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, f64::INFINITY)).is_err());
        let w = Window::centered(4.0, 2.0).unwrap();
        assert_eq!(w.area(), 8.0);
        assert_eq!(w.perimeter(), 12.0);
        let back: Window = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert_eq!(back, w);
        assert!(serde_json::from_str::<Window>(r#"{"lo":[1,1],"hi":[0,2]}"#).is_err());
    }
}
