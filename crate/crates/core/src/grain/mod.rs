//! Exact geometry of single planar convex grains.
//!
//! Intrinsic volumes follow the Steiner normalization
//! `V₂(K ⊕ rB) = V₂(K) + 2r·V₁(K) + πr²`, so `V₁` is **half the perimeter**
//! and `V₀ = 1` for every nonempty convex body.

mod polygon;
mod vec2;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use polygon::{clip_convex, min_enclosing_circle, minkowski_sum, signed_area};
pub(crate) use polygon::{contains as polygon_contains, segment_in_open_polygon, VERTEX_EPS};
pub use vec2::Vec2;

/// `(V₀, V₁, V₂)` of a single convex body.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntrinsicVolumes2D {
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
}

/// Parameters of a grain shape. Obtain values through [`GrainShape`]'s
/// validating constructors.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeKind {
    Disk { radius: f64 },
    AlignedRect { halfwidth: f64, halfheight: f64 },
    /// Counterclockwise, strictly convex, circumcenter at the origin.
    ConvexPolygon { vertices: Vec<Vec2> },
}

/// A validated convex grain whose circumcenter is the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ShapeRecord", into = "ShapeRecord")]
pub struct GrainShape {
    kind: ShapeKind,
}

/// Structured text record used in configs and sample files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ShapeRecord {
    Disk { radius: f64 },
    Rect { halfwidth: f64, halfheight: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

impl TryFrom<ShapeRecord> for GrainShape {
    type Error = Error;
    fn try_from(r: ShapeRecord) -> Result<Self> {
        match r {
            ShapeRecord::Disk { radius } => GrainShape::disk(radius),
            ShapeRecord::Rect { halfwidth, halfheight } => GrainShape::rect(halfwidth, halfheight),
            ShapeRecord::Polygon { vertices } => {
                GrainShape::polygon(vertices.into_iter().map(Vec2::from).collect())
            }
        }
    }
}

impl From<GrainShape> for ShapeRecord {
    fn from(s: GrainShape) -> Self {
        match s.kind {
            ShapeKind::Disk { radius } => ShapeRecord::Disk { radius },
            ShapeKind::AlignedRect { halfwidth, halfheight } => ShapeRecord::Rect { halfwidth, halfheight },
            ShapeKind::ConvexPolygon { vertices } => {
                ShapeRecord::Polygon { vertices: vertices.into_iter().map(Into::into).collect() }
            }
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidShape(format!("{name} must be finite and positive, got {v}")))
    }
}

impl GrainShape {
    pub fn disk(radius: f64) -> Result<Self> {
        Ok(Self { kind: ShapeKind::Disk { radius: positive("radius", radius)? } })
    }

    /// Axis-aligned rectangle `[-halfwidth, halfwidth] × [-halfheight, halfheight]`.
    pub fn rect(halfwidth: f64, halfheight: f64) -> Result<Self> {
        Ok(Self {
            kind: ShapeKind::AlignedRect {
                halfwidth: positive("halfwidth", halfwidth)?,
                halfheight: positive("halfheight", halfheight)?,
            },
        })
    }

    /// Strictly convex polygon. Clockwise input is reversed; the result is
    /// translated so that its circumcenter is the origin.
    pub fn polygon(mut vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidShape(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidShape("polygon vertex is not finite".into()));
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        let mut turning = 0.0;
        for i in 0..n {
            let e0 = vertices[(i + 1) % n] - vertices[i];
            let e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
            let (l0, l1) = (e0.norm(), e1.norm());
            if l0 == 0.0 || l1 == 0.0 {
                return Err(Error::InvalidShape("polygon has repeated vertices".into()));
            }
            let c = e0.cross(e1);
            if c <= VERTEX_EPS * l0 * l1 {
                return Err(Error::InvalidShape(
                    "polygon is not strictly convex (collinear or reflex vertex)".into(),
                ));
            }
            turning += c.atan2(e0.dot(e1));
        }
        if (turning - 2.0 * PI).abs() > 1e-9 {
            return Err(Error::InvalidShape("polygon boundary is self-intersecting".into()));
        }
        let (center, radius) = min_enclosing_circle(&vertices);
        // already centred input (e.g. a serialized shape) is kept bit-for-bit
        if center.norm() > 1e-12 * radius {
            for v in &mut vertices {
                *v -= center;
            }
        }
        Ok(Self { kind: ShapeKind::ConvexPolygon { vertices } })
    }

    pub fn kind(&self) -> &ShapeKind {
        &self.kind
    }

    pub fn is_disk(&self) -> bool {
        matches!(self.kind, ShapeKind::Disk { .. })
    }

    /// Counterclockwise vertices for rectangles and polygons; `None` for disks.
    pub fn vertices(&self) -> Option<Vec<Vec2>> {
        match &self.kind {
            ShapeKind::Disk { .. } => None,
            &ShapeKind::AlignedRect { halfwidth: a, halfheight: b } => Some(vec![
                Vec2::new(-a, -b),
                Vec2::new(a, -b),
                Vec2::new(a, b),
                Vec2::new(-a, b),
            ]),
            ShapeKind::ConvexPolygon { vertices } => Some(vertices.clone()),
        }
    }

    pub fn area(&self) -> f64 {
        match &self.kind {
            ShapeKind::Disk { radius } => PI * radius * radius,
            ShapeKind::AlignedRect { halfwidth, halfheight } => 4.0 * halfwidth * halfheight,
            ShapeKind::ConvexPolygon { vertices } => signed_area(vertices),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match &self.kind {
            ShapeKind::Disk { radius } => 2.0 * PI * radius,
            ShapeKind::AlignedRect { halfwidth, halfheight } => 4.0 * (halfwidth + halfheight),
            ShapeKind::ConvexPolygon { vertices } => polygon::perimeter(vertices),
        }
    }

    pub fn intrinsic_volumes(&self) -> IntrinsicVolumes2D {
        IntrinsicVolumes2D { v0: 1.0, v1: 0.5 * self.perimeter(), v2: self.area() }
    }

    /// Area of the parallel body at distance `r`.
    pub fn steiner_area(&self, r: f64) -> Result<f64> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::Precondition(format!("dilation radius must be ≥ 0, got {r}")));
        }
        let iv = self.intrinsic_volumes();
        Ok(iv.v2 + 2.0 * r * iv.v1 + PI * r * r)
    }

    /// Radius of the smallest enclosing ball, which is centred at the origin.
    pub fn circumradius(&self) -> f64 {
        match &self.kind {
            ShapeKind::Disk { radius } => *radius,
            ShapeKind::AlignedRect { halfwidth, halfheight } => halfwidth.hypot(*halfheight),
            ShapeKind::ConvexPolygon { vertices } => {
                vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
            }
        }
    }

    /// Support function `h_K(u) = max_{x∈K} <x, u>`.
    pub fn support(&self, u: Vec2) -> f64 {
        match &self.kind {
            ShapeKind::Disk { radius } => radius * u.norm(),
            ShapeKind::AlignedRect { halfwidth, halfheight } => halfwidth * u.x.abs() + halfheight * u.y.abs(),
            ShapeKind::ConvexPolygon { vertices } => polygon::support(vertices, u),
        }
    }

    /// Closed containment of a point given in grain coordinates.
    pub fn contains(&self, p: Vec2) -> bool {
        match &self.kind {
            ShapeKind::Disk { radius } => p.norm_sq() <= radius * radius,
            ShapeKind::AlignedRect { halfwidth, halfheight } => p.x.abs() <= *halfwidth && p.y.abs() <= *halfheight,
            ShapeKind::ConvexPolygon { vertices } => polygon_contains(vertices, p, 0.0),
        }
    }

    /// The reflected body `K* = −K`.
    pub fn reflected(&self) -> GrainShape {
        match &self.kind {
            ShapeKind::ConvexPolygon { vertices } => GrainShape {
                kind: ShapeKind::ConvexPolygon { vertices: vertices.iter().map(|&v| -v).collect() },
            },
            _ => self.clone(),
        }
    }

    /// Rotation about the circumcenter. Rectangles become polygons unless the
    /// angle is zero.
    pub fn rotated(&self, angle: f64) -> GrainShape {
        if angle == 0.0 {
            return self.clone();
        }
        match &self.kind {
            ShapeKind::Disk { .. } => self.clone(),
            _ => {
                let vs = self.vertices().expect("non-disk shapes have vertices");
                GrainShape {
                    kind: ShapeKind::ConvexPolygon { vertices: vs.into_iter().map(|v| v.rotate(angle)).collect() },
                }
            }
        }
    }

    /// Set covariogram `V₂(K ∩ (K + t))`.
    pub fn covariogram(&self, t: Vec2) -> f64 {
        match &self.kind {
            ShapeKind::Disk { radius } => disk_lens_area(*radius, t.norm()),
            ShapeKind::AlignedRect { halfwidth, halfheight } => {
                (2.0 * halfwidth - t.x.abs()).max(0.0) * (2.0 * halfheight - t.y.abs()).max(0.0)
            }
            ShapeKind::ConvexPolygon { vertices } => {
                if t.norm() >= 2.0 * self.circumradius() {
                    return 0.0;
                }
                let shifted: Vec<Vec2> = vertices.iter().map(|&v| v + t).collect();
                signed_area(&clip_convex(vertices, &shifted))
            }
        }
    }

    /// Half the length of `∂K` lying in the open interior of `K + t`.
    /// At `t = 0` the whole boundary is counted, i.e. the value is `V₁(K)`.
    pub fn boundary_covariogram(&self, t: Vec2) -> f64 {
        let d = t.norm();
        if d == 0.0 {
            return 0.5 * self.perimeter();
        }
        match &self.kind {
            ShapeKind::Disk { radius } => {
                if d >= 2.0 * radius {
                    0.0
                } else {
                    radius * (d / (2.0 * radius)).acos()
                }
            }
            _ => {
                let vs = self.vertices().expect("non-disk shapes have vertices");
                let shifted: Vec<Vec2> = vs.iter().map(|&v| v + t).collect();
                let n = vs.len();
                let mut len = 0.0;
                for i in 0..n {
                    let (a, b) = (vs[i], vs[(i + 1) % n]);
                    if let Some((t0, t1)) = segment_in_open_polygon(a, b, &shifted) {
                        len += (t1 - t0) * a.distance(b);
                    }
                }
                0.5 * len
            }
        }
    }

    /// `V₂(K ⊕ M*)` where `M` is the probe and `M* = −M`.
    pub fn minkowski_sum_area(&self, probe: &GrainShape) -> f64 {
        let probe = probe.reflected();
        match (&self.kind, &probe.kind) {
            (ShapeKind::Disk { radius: r1 }, ShapeKind::Disk { radius: r2 }) => PI * (r1 + r2) * (r1 + r2),
            (ShapeKind::Disk { radius }, _) => probe.steiner_area(*radius).expect("radius is positive"),
            (_, ShapeKind::Disk { radius }) => self.steiner_area(*radius).expect("radius is positive"),
            (
                ShapeKind::AlignedRect { halfwidth: a1, halfheight: b1 },
                ShapeKind::AlignedRect { halfwidth: a2, halfheight: b2 },
            ) => 4.0 * (a1 + a2) * (b1 + b2),
            _ => {
                let p = self.vertices().expect("polygonal");
                let q = probe.vertices().expect("polygonal");
                signed_area(&minkowski_sum(&p, &q))
            }
        }
    }
}

/// Area of the lens `B(0, r) ∩ B(t, r)` with `|t| = d`.
pub fn disk_lens_area(r: f64, d: f64) -> f64 {
    if d >= 2.0 * r {
        return 0.0;
    }
    let x = d / (2.0 * r);
    2.0 * r * r * x.acos() - 0.5 * d * (4.0 * r * r - d * d).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn triangle() -> GrainShape {
        GrainShape::polygon(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn intrinsic_volume_examples() {
        let sq = GrainShape::rect(0.5, 0.5).unwrap().intrinsic_volumes();
        assert_eq!((sq.v0, sq.v1, sq.v2), (1.0, 2.0, 1.0));
        let d = GrainShape::disk(1.0).unwrap().intrinsic_volumes();
        assert!(close(d.v1, PI, 1e-15) && close(d.v2, PI, 1e-15));
        let t = triangle().intrinsic_volumes();
        assert!(close(t.v1, (2.0 + 2f64.sqrt()) / 2.0, 1e-14));
        assert!(close(t.v2, 0.5, 1e-14));
    }

    #[test]
    fn steiner_examples() {
        let sq = GrainShape::rect(0.5, 0.5).unwrap();
        assert_eq!(sq.steiner_area(0.0).unwrap(), 1.0);
        assert!(close(sq.steiner_area(1.0).unwrap(), 5.0 + PI, 1e-15));
        let d = GrainShape::disk(1.0).unwrap();
        assert!(close(d.steiner_area(1.0).unwrap(), 4.0 * PI, 1e-15));
        assert!(matches!(sq.steiner_area(-0.1), Err(Error::Precondition(_))));
    }

    #[test]
    fn covariogram_examples() {
        let d = GrainShape::disk(1.0).unwrap();
        assert!(close(d.covariogram(Vec2::ZERO), PI, 1e-15));
        assert_eq!(d.covariogram(Vec2::new(2.0, 0.0)), 0.0);
        let lens = 2.0 * 0.5f64.acos() - 0.5 * 3f64.sqrt();
        assert!(close(d.covariogram(Vec2::new(0.0, 1.0)), lens, 1e-14));
        assert!((lens - 1.22837).abs() < 1e-5);
        let t = triangle();
        assert!(close(t.covariogram(Vec2::ZERO), 0.5, 1e-14));
    }

    #[test]
    fn lens_matches_point_sampling() {
        // independent oracle: stratified point counting over the bounding box of the lens
        let n = 2000;
        let h = 2.0 / n as f64;
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                let p = Vec2::new(-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h);
                if p.norm_sq() <= 1.0 && (p - Vec2::new(1.0, 0.0)).norm_sq() <= 1.0 {
                    count += 1;
                }
            }
        }
        let estimate = count as f64 * h * h;
        let exact = disk_lens_area(1.0, 1.0);
        assert!((estimate - exact).abs() < 1e-4, "{estimate} vs {exact}");
    }

    #[test]
    fn boundary_covariogram_examples() {
        let d = GrainShape::disk(1.0).unwrap();
        assert!(close(d.boundary_covariogram(Vec2::ZERO), PI, 1e-15));
        assert_eq!(d.boundary_covariogram(Vec2::new(2.0, 0.0)), 0.0);
        assert!(close(d.boundary_covariogram(Vec2::new(1.0, 0.0)), PI / 3.0, 1e-15));
    }

    #[test]
    fn boundary_covariogram_matches_discretized_boundary() {
        // independent oracle: fine discretization of ∂K with interior tests
        let t = Vec2::new(0.6, -0.3);
        for shape in [GrainShape::disk(1.0).unwrap(), triangle(), GrainShape::rect(0.7, 0.4).unwrap()] {
            let m = 400_000;
            let mut inside = 0.0;
            let per = shape.perimeter();
            match shape.kind() {
                ShapeKind::Disk { radius } => {
                    for k in 0..m {
                        let p = Vec2::polar(2.0 * PI * (k as f64 + 0.5) / m as f64) * *radius;
                        if (p - t).norm() < *radius {
                            inside += per / m as f64;
                        }
                    }
                }
                _ => {
                    let vs = shape.vertices().unwrap();
                    let n = vs.len();
                    for i in 0..n {
                        let (a, b) = (vs[i], vs[(i + 1) % n]);
                        let len = a.distance(b);
                        let steps = (m as f64 * len / per) as usize;
                        for k in 0..steps {
                            let p = a + (b - a) * ((k as f64 + 0.5) / steps as f64);
                            let q = p - t;
                            if shape.contains(q) && polygon_contains(&vs, q, -1e-12) {
                                inside += len / steps as f64;
                            }
                        }
                    }
                }
            }
            let exact = shape.boundary_covariogram(t);
            assert!((0.5 * inside - exact).abs() < 1e-4, "{:?}: {} vs {}", shape.kind(), 0.5 * inside, exact);
        }
    }

    #[test]
    fn minkowski_examples() {
        let d = GrainShape::disk(1.0).unwrap();
        let sq = GrainShape::rect(0.5, 0.5).unwrap();
        assert!(close(d.minkowski_sum_area(&d), 4.0 * PI, 1e-15));
        assert!(close(sq.minkowski_sum_area(&sq), 4.0, 1e-15));
        assert!(close(d.minkowski_sum_area(&sq), PI + 5.0, 1e-15));
    }

    #[test]
    fn minkowski_disk_square_matches_rasterized_sum() {
        // independent oracle: grid points within distance 1 of the unit square
        let n = 3000;
        let h = 4.0 / n as f64;
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                let p = Vec2::new(-2.0 + (i as f64 + 0.5) * h, -2.0 + (j as f64 + 0.5) * h);
                let dx = (p.x.abs() - 0.5).max(0.0);
                let dy = (p.y.abs() - 0.5).max(0.0);
                if dx * dx + dy * dy <= 1.0 {
                    count += 1;
                }
            }
        }
        let area = count as f64 * h * h;
        assert!((area - (PI + 5.0)).abs() < 2e-4);
    }

    #[test]
    fn polygon_minkowski_sum_uses_reflection() {
        let t = triangle();
        // K ⊕ K* for a triangle is a hexagon of area 6·area(K)
        assert!(close(t.minkowski_sum_area(&t), 3.0, 1e-13));
        // rectangles through the polygon path agree with the closed form
        let r = GrainShape::rect(0.3, 0.8).unwrap();
        let rp = GrainShape::polygon(r.vertices().unwrap()).unwrap();
        assert!(close(r.minkowski_sum_area(&r), rp.minkowski_sum_area(&rp), 1e-13));
    }

    #[test]
    fn circumradius_examples() {
        assert_eq!(GrainShape::disk(2.5).unwrap().circumradius(), 2.5);
        assert!(close(GrainShape::rect(0.5, 0.5).unwrap().circumradius(), 0.5f64.sqrt(), 1e-15));
        let t = triangle();
        let vs = t.vertices().unwrap();
        for v in &vs {
            assert!(close(v.norm(), 0.5f64.sqrt(), 1e-14));
        }
    }

    #[test]
    fn degenerate_shapes_are_rejected() {
        assert!(GrainShape::disk(0.0).is_err());
        assert!(GrainShape::rect(1.0, f64::NAN).is_err());
        let collinear = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)];
        assert!(GrainShape::polygon(collinear).is_err());
        let with_straight = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(1.0, 1.0),
        ];
        assert!(GrainShape::polygon(with_straight).is_err());
        let reflex = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(1.0, 0.5),
            Vec2::new(2.0, 2.0),
            Vec2::new(0.0, 2.0),
        ];
        assert!(GrainShape::polygon(reflex).is_err());
        // clockwise input is accepted and normalized
        let cw = vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)];
        assert!((GrainShape::polygon(cw).unwrap().area() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn shape_records_round_trip_through_json() {
        let s: GrainShape = serde_json::from_str(r#"{"kind":"rect","halfwidth":0.5,"halfheight":0.25}"#).unwrap();
        assert_eq!(s, GrainShape::rect(0.5, 0.25).unwrap());
        let bad = serde_json::from_str::<GrainShape>(r#"{"kind":"disk","radius":-1}"#);
        assert!(bad.is_err());
        let t = triangle();
        let back: GrainShape = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert!((back.area() - t.area()).abs() < 1e-15);
    }

    fn arb_shape() -> impl Strategy<Value = GrainShape> {
        prop_oneof![
            (0.1f64..2.0).prop_map(|r| GrainShape::disk(r).unwrap()),
            (0.1f64..2.0, 0.1f64..2.0).prop_map(|(a, b)| GrainShape::rect(a, b).unwrap()),
            (3usize..8, 0.2f64..1.5, 0.0f64..6.3, 0.5f64..1.0).prop_map(|(n, r, phase, squash)| {
                let vs = (0..n)
                    .map(|k| {
                        let th = phase + 2.0 * PI * k as f64 / n as f64;
                        Vec2::new(r * th.cos(), squash * r * th.sin())
                    })
                    .collect();
                GrainShape::polygon(vs).unwrap()
            }),
        ]
    }

    proptest! {
        #[test]
        fn steiner_matches_dilated_disk(r0 in 0.05f64..3.0, r in 0.0f64..3.0) {
            let d = GrainShape::disk(r0).unwrap();
            let dilated = GrainShape::disk(r0 + r).unwrap();
            let a = d.steiner_area(r).unwrap();
            prop_assert!((a - dilated.area()).abs() <= 1e-12 * dilated.area());
        }

        #[test]
        fn covariogram_symmetry_support_and_bound(shape in arb_shape(), tx in -4.0f64..4.0, ty in -4.0f64..4.0) {
            let t = Vec2::new(tx, ty);
            let g = shape.covariogram(t);
            prop_assert!((g - shape.covariogram(-t)).abs() <= 1e-12 * (1.0 + g));
            if t.norm() >= 2.0 * shape.circumradius() {
                prop_assert_eq!(g, 0.0);
            }
            let area = shape.area();
            prop_assert!(g <= area * (1.0 + 1e-12));
            if t.norm() > 1e-9 {
                prop_assert!(g < area);
            }
        }

        #[test]
        fn minkowski_sum_is_symmetric_for_centrally_symmetric_shapes(
            r in 0.1f64..2.0, a in 0.1f64..2.0, b in 0.1f64..2.0, angle in 0.0f64..3.2
        ) {
            let d = GrainShape::disk(r).unwrap();
            let rect = GrainShape::rect(a, b).unwrap().rotated(angle);
            let x = d.minkowski_sum_area(&rect);
            let y = rect.minkowski_sum_area(&d);
            prop_assert!((x - y).abs() <= 1e-12 * x);
            let sq = GrainShape::rect(b, a).unwrap();
            let x = sq.minkowski_sum_area(&rect);
            let y = rect.minkowski_sum_area(&sq);
            prop_assert!((x - y).abs() <= 1e-12 * x);
        }
    }
}
