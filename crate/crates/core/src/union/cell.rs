//! Convex intersections of placed grains and the inclusion–exclusion oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grain::Vec2;

use super::arrangement::ARR_EPS;
use super::curves::{inside_spans, intersect_spans, split_wrap, Body, Curve, Owner, Span};
use super::{FunctionalVector, PlacedGrain, Window};

pub const DEFAULT_CELL_CAP: usize = 20;
pub const IE_GRAIN_LIMIT: usize = 18;

/// One boundary piece of a convex cell, traversed counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoundaryPiece {
    Segment { from: Vec2, to: Vec2 },
    Arc { center: Vec2, radius: f64, from_angle: f64, to_angle: f64 },
}

impl BoundaryPiece {
    pub fn start(&self) -> Vec2 {
        match *self {
            BoundaryPiece::Segment { from, .. } => from,
            BoundaryPiece::Arc { center, radius, from_angle, .. } => center + Vec2::polar(from_angle) * radius,
        }
    }

    pub fn end(&self) -> Vec2 {
        match *self {
            BoundaryPiece::Segment { to, .. } => to,
            BoundaryPiece::Arc { center, radius, to_angle, .. } => center + Vec2::polar(to_angle) * radius,
        }
    }
}

/// A nonempty convex intersection with its boundary and functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexCell {
    pub boundary: Vec<BoundaryPiece>,
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
}

impl ConvexCell {
    pub fn functionals(&self) -> FunctionalVector {
        FunctionalVector::new(self.v0, self.v1, self.v2)
    }
}

/// Intersection of the grains and (optionally) the window. Intersections of
/// zero area are reported as empty.
pub fn intersect_convex(grains: &[PlacedGrain], window: Option<&Window>, cap: usize) -> Result<Option<ConvexCell>> {
    let count = grains.len() + usize::from(window.is_some());
    if count == 0 {
        return Err(Error::Precondition("intersect_convex needs at least one body".into()));
    }
    if count > cap {
        return Err(Error::CapExceeded { requested: count, cap });
    }
    let mut bodies: Vec<(Body, bool)> = grains.iter().map(|g| (Body::from_placed(g), false)).collect();
    if let Some(w) = window {
        bodies.push((w.body(), true));
    }
    Ok(intersect_bodies(&bodies, true))
}

/// Intersection of bodies; the flag marks bodies tested with closed
/// containment (the window), the others use their open interior.
fn intersect_bodies(bodies: &[(Body, bool)], keep_boundary: bool) -> Option<ConvexCell> {
    // cheap rejection on bounding disks
    let disks: Vec<(Vec2, f64)> = bodies.iter().map(|(b, _)| bounding_disk(b)).collect();
    for i in 0..disks.len() {
        for j in i + 1..disks.len() {
            if disks[i].0.distance(disks[j].0) >= disks[i].1 + disks[j].1 {
                return None;
            }
        }
    }
    let origin = disks[0].0;
    let mut boundary = Vec::new();
    let mut length = 0.0;
    let mut area = 0.0;
    let mut tmp = Vec::new();
    for (i, (body, closed_i)) in bodies.iter().enumerate() {
        for k in 0..body.curve_count() {
            let curve = body.curve(k);
            let mut spans = vec![Span { s: 0.0, e: curve.period(), start: None, end: None }];
            for (j, (other, closed)) in bodies.iter().enumerate() {
                if j == i {
                    continue;
                }
                tmp.clear();
                inside_spans(&curve, other, Owner::Grain(j), *closed, !*closed && !*closed_i && j > i, ARR_EPS, &mut tmp);
                let mut normalized = Vec::with_capacity(tmp.len());
                for &sp in &tmp {
                    split_wrap(sp, curve.period(), &mut normalized);
                }
                spans = intersect_spans(&spans, &normalized);
                if spans.is_empty() {
                    break;
                }
            }
            for sp in merge_wrapped(spans, &curve) {
                length += curve.length(sp.s, sp.e);
                area += curve.green(sp.s, sp.e, origin);
                if keep_boundary {
                    boundary.push(piece_of(&curve, &sp));
                }
            }
        }
    }
    let scale = disks.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
    if area <= ARR_EPS * scale {
        return None;
    }
    Some(ConvexCell { boundary: chain(boundary), v0: 1.0, v1: 0.5 * length, v2: area })
}

/// Rejoin circle spans cut at angle 0 so that each arc is reported once.
fn merge_wrapped(mut spans: Vec<Span>, curve: &Curve) -> Vec<Span> {
    if curve.is_closed() && spans.len() >= 2 {
        let p = curve.period();
        let last = spans[spans.len() - 1];
        if spans[0].s == 0.0 && last.e == p {
            spans[0].s = last.s - p;
            spans.pop();
        }
    }
    spans
}

fn piece_of(curve: &Curve, sp: &Span) -> BoundaryPiece {
    match *curve {
        Curve::Circle { c, r } => BoundaryPiece::Arc { center: c, radius: r, from_angle: sp.s, to_angle: sp.e },
        Curve::Segment { .. } => BoundaryPiece::Segment { from: curve.point(sp.s), to: curve.point(sp.e) },
    }
}

/// Order pieces so that each starts where the previous one ends.
fn chain(mut pieces: Vec<BoundaryPiece>) -> Vec<BoundaryPiece> {
    let mut out = Vec::with_capacity(pieces.len());
    if pieces.is_empty() {
        return out;
    }
    out.push(pieces.swap_remove(0));
    while !pieces.is_empty() {
        let end = out.last().expect("nonempty").end();
        let (k, _) = pieces
            .iter()
            .enumerate()
            .map(|(k, p)| (k, p.start().distance(end)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        out.push(pieces.swap_remove(k));
    }
    out
}

fn bounding_disk(b: &Body) -> (Vec2, f64) {
    match b {
        Body::Disk { c, r } => (*c, *r),
        Body::Polygon { vs } => {
            let c = b.centroid_hint();
            (c, vs.iter().map(|v| v.distance(c)).fold(0.0, f64::max))
        }
    }
}

/// `φ(∪ Kᵢ ∩ W)` by inclusion–exclusion over all subsets of grains hitting
/// the window. Subsets with an empty intersection prune all their supersets.
pub fn inclusion_exclusion_measure(grains: &[PlacedGrain], window: &Window) -> Result<FunctionalVector> {
    let wbody = (window.body(), true);
    let hitting: Vec<(Body, bool)> = grains
        .iter()
        .map(|g| (Body::from_placed(g), false))
        .filter(|b| intersect_bodies(&[b.clone(), wbody.clone()], false).is_some())
        .collect();
    if hitting.len() > IE_GRAIN_LIMIT {
        return Err(Error::TooManyGrains { count: hitting.len(), limit: IE_GRAIN_LIMIT });
    }
    let mut total = FunctionalVector::ZERO;
    let mut stack = vec![wbody];
    subsets(&hitting, 0, &mut stack, &mut total);
    Ok(total)
}

fn subsets(grains: &[(Body, bool)], from: usize, stack: &mut Vec<(Body, bool)>, total: &mut FunctionalVector) {
    for i in from..grains.len() {
        stack.push(grains[i].clone());
        if let Some(cell) = intersect_bodies(stack, false) {
            // the stack holds the window plus k grains
            let sign = if (stack.len() - 1) % 2 == 1 { 1.0 } else { -1.0 };
            *total += cell.functionals() * sign;
            subsets(grains, i + 1, stack, total);
        }
        stack.pop();
    }
}
