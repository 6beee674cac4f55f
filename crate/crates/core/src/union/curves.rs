//! Boundary curves of convex bodies and parameter spans along them.

use std::f64::consts::{PI, TAU};

use crate::grain::{ShapeKind, Vec2};

use super::PlacedGrain;

/// Parameter slack for crossings near segment endpoints.
const PARAM_EPS: f64 = 1e-12;

/// Relative gap below which two curves count as tangent rather than crossing.
const TANGENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Curve {
    /// Counterclockwise circle parametrized by angle in `[0, 2π)`.
    Circle { c: Vec2, r: f64 },
    /// Directed segment parametrized by `t ∈ [0, 1]`.
    Segment { a: Vec2, b: Vec2 },
}

impl Curve {
    pub fn is_closed(&self) -> bool {
        matches!(self, Curve::Circle { .. })
    }

    pub fn period(&self) -> f64 {
        match self {
            Curve::Circle { .. } => TAU,
            Curve::Segment { .. } => 1.0,
        }
    }

    pub fn point(&self, t: f64) -> Vec2 {
        match *self {
            Curve::Circle { c, r } => c + Vec2::polar(t) * r,
            Curve::Segment { a, b } => a + (b - a) * t,
        }
    }

    /// Unit tangent in the direction of increasing parameter.
    pub fn tangent(&self, t: f64) -> Vec2 {
        match *self {
            Curve::Circle { .. } => Vec2::new(-t.sin(), t.cos()),
            Curve::Segment { a, b } => (b - a) / a.distance(b),
        }
    }

    /// Unit tangent at a point lying on the curve.
    pub fn tangent_at(&self, p: Vec2) -> Vec2 {
        match *self {
            Curve::Circle { c, r } => (p - c).perp() / r,
            Curve::Segment { a, b } => (b - a) / a.distance(b),
        }
    }

    /// Scale converting parameter differences into arc length.
    pub fn speed(&self) -> f64 {
        match *self {
            Curve::Circle { r, .. } => r,
            Curve::Segment { a, b } => a.distance(b),
        }
    }

    pub fn length(&self, t0: f64, t1: f64) -> f64 {
        (t1 - t0) * self.speed()
    }

    /// `½ ∫ (x dy − y dx)` over the piece, coordinates taken relative to `origin`.
    pub fn green(&self, t0: f64, t1: f64, origin: Vec2) -> f64 {
        match *self {
            Curve::Circle { c, r } => {
                let c = c - origin;
                0.5 * (r * r * (t1 - t0) + r * c.x * (t1.sin() - t0.sin()) - r * c.y * (t1.cos() - t0.cos()))
            }
            Curve::Segment { .. } => {
                let p = self.point(t0) - origin;
                let q = self.point(t1) - origin;
                0.5 * p.cross(q)
            }
        }
    }

    /// Integrated geodesic curvature of the piece.
    pub fn turning(&self, t0: f64, t1: f64) -> f64 {
        match self {
            Curve::Circle { .. } => t1 - t0,
            Curve::Segment { .. } => 0.0,
        }
    }

    fn param_of(&self, p: Vec2) -> f64 {
        match *self {
            Curve::Circle { c, .. } => {
                let a = (p - c).angle();
                if a < 0.0 {
                    a + TAU
                } else {
                    a
                }
            }
            Curve::Segment { a, b } => {
                let d = b - a;
                (p - a).dot(d) / d.norm_sq()
            }
        }
    }
}

/// Parameters on `a` at which it meets `b`.
pub(crate) fn crossings(a: &Curve, b: &Curve, out: &mut Vec<f64>) {
    match (*a, *b) {
        (Curve::Circle { c: c1, r: r1 }, Curve::Circle { c: c2, r: r2 }) => {
            let dv = c2 - c1;
            let d = dv.norm();
            if d == 0.0 || d >= (r1 + r2) * (1.0 - TANGENT_EPS) || d <= (r1 - r2).abs() + TANGENT_EPS * r1.max(r2) {
                return;
            }
            let x = (d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1);
            let base = dv.angle();
            let delta = x.clamp(-1.0, 1.0).acos();
            out.push(wrap_angle(base - delta));
            out.push(wrap_angle(base + delta));
        }
        (Curve::Circle { .. }, Curve::Segment { a: p, b: q }) => {
            let mut ts = Vec::with_capacity(2);
            segment_circle_roots(p, q, a, &mut ts);
            for t in ts {
                out.push(a.param_of(p + (q - p) * t));
            }
        }
        (Curve::Segment { a: p, b: q }, Curve::Circle { .. }) => segment_circle_roots(p, q, b, out),
        (Curve::Segment { a: p, b: q }, Curve::Segment { a: u, b: v }) => {
            let e = q - p;
            let f = v - u;
            let denom = e.cross(f);
            if denom.abs() <= 1e-14 * e.norm() * f.norm() {
                return;
            }
            let w = u - p;
            let t = w.cross(f) / denom;
            let s = w.cross(e) / denom;
            if (-PARAM_EPS..=1.0 + PARAM_EPS).contains(&t) && (-PARAM_EPS..=1.0 + PARAM_EPS).contains(&s) {
                out.push(t.clamp(0.0, 1.0));
            }
        }
    }
}

fn segment_circle_roots(p: Vec2, q: Vec2, circle: &Curve, out: &mut Vec<f64>) {
    let Curve::Circle { c, r } = *circle else { unreachable!() };
    let d = q - p;
    let f = p - c;
    let a = d.norm_sq();
    if (d.cross(f).abs() / a.sqrt() - r).abs() <= TANGENT_EPS * r {
        return;
    }
    let b = f.dot(d);
    let cc = f.norm_sq() - r * r;
    let disc = b * b - a * cc;
    if disc <= 0.0 {
        return;
    }
    let sq = disc.sqrt();
    // numerically stable pair of roots
    let k = -(b + b.signum() * sq);
    let (t0, t1) = if k == 0.0 { (-sq / a, sq / a) } else { (k / a, cc / k) };
    for t in [t0, t1] {
        if (-PARAM_EPS..=1.0 + PARAM_EPS).contains(&t) {
            out.push(t.clamp(0.0, 1.0));
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// A convex body in absolute coordinates.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Body {
    Disk { c: Vec2, r: f64 },
    Polygon { vs: Vec<Vec2> },
}

impl Body {
    pub fn from_placed(g: &PlacedGrain) -> Body {
        match g.shape.kind() {
            ShapeKind::Disk { radius } => Body::Disk { c: g.center, r: *radius },
            _ => Body::Polygon { vs: g.shape.vertices().expect("polygonal").into_iter().map(|v| v + g.center).collect() },
        }
    }

    pub fn curve_count(&self) -> usize {
        match self {
            Body::Disk { .. } => 1,
            Body::Polygon { vs } => vs.len(),
        }
    }

    pub fn curve(&self, i: usize) -> Curve {
        match self {
            &Body::Disk { c, r } => Curve::Circle { c, r },
            Body::Polygon { vs } => Curve::Segment { a: vs[i], b: vs[(i + 1) % vs.len()] },
        }
    }

    /// Strict interior test.
    pub fn contains_open(&self, p: Vec2) -> bool {
        match self {
            Body::Disk { c, r } => (p - *c).norm_sq() < r * r,
            Body::Polygon { vs } => {
                let n = vs.len();
                (0..n).all(|i| (vs[(i + 1) % n] - vs[i]).cross(p - vs[i]) > 0.0)
            }
        }
    }

    /// Closed test with absolute slack `eps`.
    pub fn contains_closed(&self, p: Vec2, eps: f64) -> bool {
        match self {
            Body::Disk { c, r } => (p - *c).norm() <= r + eps,
            Body::Polygon { vs } => crate::grain::polygon_contains(vs, p, eps),
        }
    }

    pub fn contains(&self, p: Vec2, closed: bool, eps: f64) -> bool {
        if closed {
            self.contains_closed(p, eps)
        } else {
            self.contains_open(p)
        }
    }

    /// Distance from `p` to the boundary.
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        match self {
            Body::Disk { c, r } => ((p - *c).norm() - r).abs(),
            Body::Polygon { vs } => {
                let n = vs.len();
                (0..n)
                    .map(|i| {
                        let (a, b) = (vs[i], vs[(i + 1) % n]);
                        let d = b - a;
                        let t = ((p - a).dot(d) / d.norm_sq()).clamp(0.0, 1.0);
                        p.distance(a + d * t)
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn centroid_hint(&self) -> Vec2 {
        match self {
            Body::Disk { c, .. } => *c,
            Body::Polygon { vs } => vs.iter().fold(Vec2::ZERO, |s, &v| s + v) / vs.len() as f64,
        }
    }
}

/// Which body a curve belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Owner {
    Grain(usize),
    Clip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct CurveId {
    pub owner: Owner,
    pub index: usize,
}

/// A parameter interval together with the curves that bound it. `None`
/// marks a natural endpoint of the curve (or an artificial cut at angle 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Span {
    pub s: f64,
    pub e: f64,
    pub start: Option<CurveId>,
    pub end: Option<CurveId>,
}

/// Spans of `curve` lying inside `body`, normalized to the curve's
/// parameter range. Circle spans crossing angle 0 are cut there.
///
/// With `shared`, boundary stretches running along a boundary piece of
/// `body` in the same direction count as inside. Callers set it for exactly
/// one body of each coincident pair so the shared piece is kept once.
pub(crate) fn inside_spans(
    curve: &Curve,
    body: &Body,
    owner: Owner,
    closed: bool,
    shared: bool,
    eps: f64,
    out: &mut Vec<Span>,
) {
    let mut cuts: Vec<(f64, Option<CurveId>)> = Vec::new();
    let mut buf = Vec::with_capacity(4);
    for i in 0..body.curve_count() {
        buf.clear();
        let other = body.curve(i);
        crossings(curve, &other, &mut buf);
        collinear_ends(curve, &other, eps, &mut buf);
        cuts.extend(buf.iter().map(|&t| (t, Some(CurveId { owner, index: i }))));
    }
    let period = curve.period();
    let min_len = eps / curve.speed();
    let inside = |t: f64| {
        let p = curve.point(t);
        body.contains(p, closed, eps) || (shared && runs_along(curve, p, body, eps))
    };
    if curve.is_closed() {
        if cuts.is_empty() {
            if inside(0.0) {
                out.push(Span { s: 0.0, e: period, start: None, end: None });
            }
            return;
        }
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
        prefer_outgoing(&mut cuts, curve, body, min_len);
        let n = cuts.len();
        let mut raw: Vec<Span> = Vec::new();
        for k in 0..n {
            let (s, start) = cuts[k];
            let (mut e, end) = cuts[(k + 1) % n];
            if k + 1 == n {
                e += period;
            }
            if e - s < min_len {
                continue;
            }
            if inside(0.5 * (s + e)) {
                push_merged(&mut raw, Span { s, e, start, end }, min_len);
            }
        }
        // the wrap span may join the first one
        if raw.len() >= 2 {
            let last = raw[raw.len() - 1];
            if (last.e - period - raw[0].s).abs() < min_len {
                raw[0].s = last.s - period;
                raw[0].start = last.start;
                raw.pop();
            }
        }
        for sp in raw {
            split_wrap(sp, period, out);
        }
    } else {
        cuts.push((0.0, None));
        cuts.push((1.0, None));
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
        prefer_outgoing(&mut cuts, curve, body, min_len);
        let mut raw: Vec<Span> = Vec::new();
        for w in cuts.windows(2) {
            let (s, start) = w[0];
            let (e, end) = w[1];
            if e - s < min_len {
                continue;
            }
            if inside(0.5 * (s + e)) {
                push_merged(&mut raw, Span { s, e, start, end }, min_len);
            }
        }
        out.extend(raw);
    }
}

/// Parameters on segment `a` of the endpoints of a segment `b` lying on the
/// same line with the same direction.
fn collinear_ends(a: &Curve, b: &Curve, eps: f64, out: &mut Vec<f64>) {
    let (Curve::Segment { a: p, b: q }, Curve::Segment { a: u, b: v }) = (*a, *b) else { return };
    let e = q - p;
    let f = v - u;
    if e.cross(f).abs() > 1e-12 * e.norm() * f.norm() || e.dot(f) <= 0.0 {
        return;
    }
    if e.cross(u - p).abs() > eps.max(1e-12) * e.norm() {
        return;
    }
    for w in [u, v] {
        let t = a.param_of(w);
        if (-PARAM_EPS..=1.0 + PARAM_EPS).contains(&t) {
            out.push(t.clamp(0.0, 1.0));
        }
    }
}

/// Whether `p` on `curve` lies on a boundary piece of `body` running the
/// same way as `curve`.
fn runs_along(curve: &Curve, p: Vec2, body: &Body, eps: f64) -> bool {
    let tol = eps.max(1e-12);
    match (*curve, body) {
        (Curve::Circle { c, r }, &Body::Disk { c: c2, r: r2 }) => c.distance(c2) <= tol && (r - r2).abs() <= tol,
        (Curve::Segment { a, b }, Body::Polygon { vs }) => {
            let e = b - a;
            let n = vs.len();
            (0..n).any(|i| {
                let (u, v) = (vs[i], vs[(i + 1) % n]);
                let f = v - u;
                if e.cross(f).abs() > 1e-12 * e.norm() * f.norm() || e.dot(f) <= 0.0 {
                    return false;
                }
                let t = ((p - u).dot(f) / f.norm_sq()).clamp(0.0, 1.0);
                p.distance(u + f * t) <= tol
            })
        }
        _ => false,
    }
}

/// Label cuts at a vertex of `body` with the edge leaving that vertex, since
/// the boundary continues along it. Other coinciding cuts share one label,
/// preferring a curve of `body` over a natural endpoint.
fn prefer_outgoing(cuts: &mut [(f64, Option<CurveId>)], curve: &Curve, body: &Body, min_len: f64) {
    let mut a = 0;
    while a < cuts.len() {
        let mut b = a + 1;
        while b < cuts.len() && cuts[b].0 - cuts[b - 1].0 <= min_len {
            b += 1;
        }
        let p = curve.point(cuts[a].0);
        let ids = || cuts[a..b].iter().filter_map(|c| c.1);
        let tol = 1e-9 * (1.0 + p.norm());
        let m = body.curve_count();
        let leaving = ids().find_map(|id| match body.curve(id.index) {
            Curve::Segment { a: start, .. } if start.distance(p) <= tol => Some(id),
            Curve::Segment { b: end, .. } if end.distance(p) <= tol => {
                Some(CurveId { index: (id.index + 1) % m, ..id })
            }
            _ => None,
        });
        if let Some(id) = leaving.or_else(|| ids().next()) {
            for c in &mut cuts[a..b] {
                c.1 = Some(id);
            }
        }
        a = b;
    }
}

fn push_merged(raw: &mut Vec<Span>, sp: Span, min_len: f64) {
    if let Some(last) = raw.last_mut() {
        if sp.s - last.e < min_len {
            last.e = sp.e;
            last.end = sp.end;
            return;
        }
    }
    raw.push(sp);
}

/// Cut a circle span at multiples of the period so it lies in `[0, period]`.
pub(crate) fn split_wrap(sp: Span, period: f64, out: &mut Vec<Span>) {
    let mut s = sp.s;
    let mut e = sp.e;
    if e - s >= period {
        out.push(Span { s: 0.0, e: period, start: None, end: None });
        return;
    }
    while s < 0.0 {
        s += period;
        e += period;
    }
    while s >= period {
        s -= period;
        e -= period;
    }
    if e <= period {
        out.push(Span { s, e, ..sp });
    } else {
        out.push(Span { s, e: period, start: sp.start, end: None });
        out.push(Span { s: 0.0, e: e - period, start: None, end: sp.end });
    }
}

/// Union of spans. For closed curves the result may contain one span that
/// runs past the period (rejoined across angle 0); a fully covered circle is
/// returned as the single span `[0, 2π]` without causes.
pub(crate) fn union_spans(mut spans: Vec<Span>, curve: &Curve, eps: f64) -> Vec<Span> {
    if spans.is_empty() {
        return spans;
    }
    let min_len = eps / curve.speed();
    let period = curve.period();
    spans.sort_by(|a, b| a.s.total_cmp(&b.s));
    let mut groups: Vec<Span> = Vec::with_capacity(spans.len());
    for sp in spans {
        match groups.last_mut() {
            Some(g) if sp.s <= g.e + min_len => {
                if sp.e > g.e {
                    g.e = sp.e;
                    g.end = sp.end;
                }
            }
            _ => groups.push(sp),
        }
    }
    if curve.is_closed() {
        let first = groups[0];
        let last = groups[groups.len() - 1];
        if groups.len() == 1 {
            if first.s <= min_len && first.e >= period - min_len {
                return vec![Span { s: 0.0, e: period, start: None, end: None }];
            }
        } else if first.s <= min_len && last.e >= period - min_len {
            groups.remove(0);
            let g = groups.last_mut().expect("nonempty");
            if first.e + period > g.e {
                g.e = first.e + period;
                g.end = first.end;
            }
            if g.e - g.s >= period - min_len {
                return vec![Span { s: 0.0, e: period, start: None, end: None }];
            }
        }
    }
    groups
}

/// Gaps between the (united, sorted) groups. For closed curves gaps are
/// cyclic; with no groups the whole curve is one gap.
pub(crate) fn complement(groups: &[Span], curve: &Curve, eps: f64) -> Vec<Span> {
    let period = curve.period();
    let min_len = eps / curve.speed();
    let mut out = Vec::new();
    if groups.is_empty() {
        out.push(Span { s: 0.0, e: period, start: None, end: None });
        return out;
    }
    if curve.is_closed() {
        if groups.len() == 1 && groups[0].s == 0.0 && groups[0].e == period && groups[0].start.is_none() {
            return out;
        }
        let n = groups.len();
        for k in 0..n {
            let g = groups[k];
            let (next_s, next_start) =
                if k + 1 < n { (groups[k + 1].s, groups[k + 1].start) } else { (groups[0].s + period, groups[0].start) };
            if next_s - g.e > min_len {
                out.push(Span { s: g.e, e: next_s, start: g.end, end: next_start });
            }
        }
    } else {
        let mut cursor = 0.0;
        let mut cause = None;
        for g in groups {
            if g.s - cursor > min_len {
                out.push(Span { s: cursor, e: g.s, start: cause, end: g.start });
            }
            cursor = cursor.max(g.e);
            cause = g.end;
        }
        if 1.0 - cursor > min_len {
            out.push(Span { s: cursor, e: 1.0, start: cause, end: None });
        }
    }
    out
}

/// Intersection of two normalized span lists (causes are dropped).
pub(crate) fn intersect_spans(a: &[Span], b: &[Span]) -> Vec<Span> {
    let mut out = Vec::new();
    for x in a {
        for y in b {
            let s = x.s.max(y.s);
            let e = x.e.min(y.e);
            if e > s {
                out.push(Span { s, e, start: None, end: None });
            }
        }
    }
    out.sort_by(|p, q| p.s.total_cmp(&q.s));
    out
}

#[allow(dead_code)]
pub(crate) fn angle_between(u: Vec2, v: Vec2) -> f64 {
    let a = u.cross(v).atan2(u.dot(v));
    if a <= -PI {
        a + TAU
    } else {
        a
    }
}
