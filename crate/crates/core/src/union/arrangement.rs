//! Exact measurement of `Z ∩ W` from the arrangement of boundary curves.
//!
//! Each grain boundary curve keeps the pieces not covered by other grains
//! and lying inside the clip region; each clip curve keeps the pieces covered
//! by grains. Area follows from Green's theorem over all pieces, `V₁` from
//! their length, and `V₀` from Gauss–Bonnet: the total turning of the
//! boundary (arc curvature plus the exterior angle at every piece end) is
//! `2π·χ`.

use std::f64::consts::TAU;

use crate::grain::Vec2;

use super::curves::{complement, inside_spans, split_wrap, union_spans, Body, Curve, CurveId, Owner, Span};
use super::{FunctionalVector, PlacedGrain, Window};

/// Length tolerance used to identify arrangement vertices.
pub(crate) const ARR_EPS: f64 = 1e-9;

/// Exact `(V₀, V₁, V₂)` of the union of `grains` clipped to `window`.
pub fn arrangement_measure(grains: &[PlacedGrain], window: &Window) -> FunctionalVector {
    measure_clipped(grains, &window.body(), window.center())
}

/// Exact `(V₀, V₁, V₂)` of the union of `grains` clipped to a convex region.
pub fn arrangement_measure_in(grains: &[PlacedGrain], region: &PlacedGrain) -> FunctionalVector {
    measure_clipped(grains, &Body::from_placed(region), region.center)
}

/// Functionals of `Z ∩ [lo, hi)`: the window minus its top and right edges.
///
/// Additivity gives `φ(Z∩W) − φ(Z∩T) − φ(Z∩R) + φ(Z∩(T∩R))`. Because
/// half-open windows tile the plane, the expectation of this quantity is
/// exactly the density times the window area for any stationary model.
pub fn half_open_measure(grains: &[PlacedGrain], window: &Window) -> FunctionalVector {
    let full = arrangement_measure(grains, window);
    let [_, c1, c2, c3] = window.corners();
    let top = Curve::Segment { a: c2, b: c3 };
    let right = Curve::Segment { a: c1, b: c2 };
    let corner = if grains.iter().any(|g| g.contains(c2)) { 1.0 } else { 0.0 };
    full - segment_measure(grains, &top) - segment_measure(grains, &right) + FunctionalVector::new(corner, 0.0, 0.0)
}

/// `(components, covered length, 0)` of the union restricted to a segment.
fn segment_measure(grains: &[PlacedGrain], seg: &Curve) -> FunctionalVector {
    let Curve::Segment { a, b } = *seg else { unreachable!() };
    let mut spans = Vec::new();
    for (i, g) in grains.iter().enumerate() {
        let r = g.circumradius();
        if distance_to_segment(g.center, a, b) > r {
            continue;
        }
        inside_spans(seg, &Body::from_placed(g), Owner::Grain(i), true, false, 0.0, &mut spans);
    }
    let groups = union_spans(spans, seg, ARR_EPS);
    let len: f64 = groups.iter().map(|g| seg.length(g.s, g.e)).sum();
    FunctionalVector::new(groups.len() as f64, len, 0.0)
}

fn distance_to_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let t = ((p - a).dot(d) / d.norm_sq()).clamp(0.0, 1.0);
    p.distance(a + d * t)
}

struct Acc {
    origin: Vec2,
    length: f64,
    green: f64,
    turning: f64,
}

impl Acc {
    fn piece(&mut self, curve: &Curve, sp: &Span, next: Option<Curve>) {
        self.length += curve.length(sp.s, sp.e);
        self.green += curve.green(sp.s, sp.e, self.origin);
        self.turning += curve.turning(sp.s, sp.e);
        if let Some(next) = next {
            let p = curve.point(sp.e);
            let t1 = curve.tangent(sp.e);
            let t2 = next.tangent_at(p);
            self.turning += t1.cross(t2).atan2(t1.dot(t2));
        }
    }
}

pub(crate) fn measure_clipped(grains: &[PlacedGrain], clip: &Body, origin: Vec2) -> FunctionalVector {
    // grains whose bounding disk meets the clip region
    let mut bodies: Vec<Body> = Vec::new();
    let mut centers: Vec<Vec2> = Vec::new();
    let mut radii: Vec<f64> = Vec::new();
    let mut on_edge: Vec<bool> = Vec::new();
    for g in grains {
        let r = g.circumradius();
        let inside = clip.contains_closed(g.center, 0.0);
        let d = clip.boundary_distance(g.center);
        if !inside && d >= r {
            continue;
        }
        bodies.push(Body::from_placed(g));
        centers.push(g.center);
        radii.push(r);
        on_edge.push(d < r);
    }
    if bodies.is_empty() {
        return FunctionalVector::ZERO;
    }
    let neighbors = neighbor_lists(&centers, &radii);

    let curve_of = |id: CurveId| -> Curve {
        match id.owner {
            Owner::Grain(j) => bodies[j].curve(id.index),
            Owner::Clip => clip.curve(id.index),
        }
    };
    let mut acc = Acc { origin, length: 0.0, green: 0.0, turning: 0.0 };
    let mut spans: Vec<Span> = Vec::new();
    let mut tmp: Vec<Span> = Vec::new();

    let mut covered: Vec<Vec<Span>> = Vec::new();
    for (i, body) in bodies.iter().enumerate() {
        let n_curves = body.curve_count();
        covered.clear();
        for k in 0..n_curves {
            let curve = body.curve(k);
            spans.clear();
            if on_edge[i] {
                tmp.clear();
                inside_spans(&curve, clip, Owner::Clip, true, false, ARR_EPS, &mut tmp);
                let inside = union_spans(std::mem::take(&mut tmp), &curve, ARR_EPS);
                for sp in complement(&inside, &curve, ARR_EPS) {
                    if curve.is_closed() {
                        split_wrap(sp, TAU, &mut spans);
                    } else {
                        spans.push(sp);
                    }
                }
            }
            for &j in &neighbors[i] {
                inside_spans(&curve, &bodies[j], Owner::Grain(j), false, j < i, ARR_EPS, &mut spans);
            }
            covered.push(union_spans(std::mem::take(&mut spans), &curve, ARR_EPS));
        }
        for k in 0..n_curves {
            let curve = body.curve(k);
            for piece in complement(&covered[k], &curve, ARR_EPS) {
                let next = match piece.end {
                    Some(id) => Some(curve_of(id)),
                    None if curve.is_closed() => None,
                    // a vertex where the next edge is already covered hands
                    // the boundary to whatever covers it
                    None => {
                        let k1 = (k + 1) % n_curves;
                        let own = body.curve(k1);
                        match covered[k1].first() {
                            Some(g) if g.s * own.speed() <= ARR_EPS => g.start.map(curve_of).or(Some(own)),
                            _ => Some(own),
                        }
                    }
                };
                acc.piece(&curve, &piece, next);
            }
        }
    }

    let n_clip = clip.curve_count();
    for k in 0..n_clip {
        let curve = clip.curve(k);
        spans.clear();
        for (j, body) in bodies.iter().enumerate() {
            if on_edge[j] {
                inside_spans(&curve, body, Owner::Grain(j), false, false, ARR_EPS, &mut spans);
            }
        }
        let groups = union_spans(std::mem::take(&mut spans), &curve, ARR_EPS);
        for piece in &groups {
            let next = match piece.end {
                Some(id) => Some(curve_of(id)),
                None if curve.is_closed() => None,
                None => Some(clip.curve((k + 1) % n_clip)),
            };
            acc.piece(&curve, piece, next);
        }
    }

    let chi = acc.turning / TAU;
    debug_assert!((chi - chi.round()).abs() < 1e-6, "turning {chi} is not an integer multiple of 2π");
    FunctionalVector::new(chi.round(), 0.5 * acc.length, acc.green)
}

/// Pairs of grains whose bounding disks overlap, found through a uniform grid.
fn neighbor_lists(centers: &[Vec2], radii: &[f64]) -> Vec<Vec<usize>> {
    let n = centers.len();
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    let cell = 2.0 * rmax;
    let (mut lo, mut hi) = (centers[0], centers[0]);
    for c in centers {
        lo = Vec2::new(lo.x.min(c.x), lo.y.min(c.y));
        hi = Vec2::new(hi.x.max(c.x), hi.y.max(c.y));
    }
    let nx = (((hi.x - lo.x) / cell).floor() as usize + 1).max(1);
    let ny = (((hi.y - lo.y) / cell).floor() as usize + 1).max(1);
    let index = |c: Vec2| -> (usize, usize) {
        (
            (((c.x - lo.x) / cell) as usize).min(nx - 1),
            (((c.y - lo.y) / cell) as usize).min(ny - 1),
        )
    };
    let mut heads = vec![Vec::new(); nx * ny];
    for (i, &c) in centers.iter().enumerate() {
        let (ix, iy) = index(c);
        heads[iy * nx + ix].push(i);
    }
    let mut out = vec![Vec::new(); n];
    for (i, &c) in centers.iter().enumerate() {
        let (ix, iy) = index(c);
        for jy in iy.saturating_sub(1)..=(iy + 1).min(ny - 1) {
            for jx in ix.saturating_sub(1)..=(ix + 1).min(nx - 1) {
                for &j in &heads[jy * nx + jx] {
                    if j != i && c.distance(centers[j]) < radii[i] + radii[j] {
                        out[i].push(j);
                    }
                }
            }
        }
    }
    out
}
