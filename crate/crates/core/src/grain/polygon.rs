//! Primitive operations on convex polygons stored as counterclockwise vertex
//! lists.

use super::Vec2;

/// Relative tolerance for vertex coincidence during clipping.
pub const VERTEX_EPS: f64 = 1e-12;

pub fn signed_area(vs: &[Vec2]) -> f64 {
    let n = vs.len();
    if n < 3 {
        return 0.0;
    }
    // shoelace relative to the first vertex for better conditioning
    let o = vs[0];
    let mut s = 0.0;
    for i in 1..n - 1 {
        s += (vs[i] - o).cross(vs[i + 1] - o);
    }
    0.5 * s
}

pub fn perimeter(vs: &[Vec2]) -> f64 {
    let n = vs.len();
    (0..n).map(|i| vs[i].distance(vs[(i + 1) % n])).sum()
}

pub fn scale_of(vs: &[Vec2]) -> f64 {
    vs.iter().fold(0.0f64, |m, v| m.max(v.x.abs()).max(v.y.abs())).max(1.0)
}

/// Maximum of `<v, u>` over the vertices.
pub fn support(vs: &[Vec2], u: Vec2) -> f64 {
    vs.iter().map(|v| v.dot(u)).fold(f64::NEG_INFINITY, f64::max)
}

/// Closed containment test with an absolute slack `eps`.
pub fn contains(vs: &[Vec2], p: Vec2, eps: f64) -> bool {
    let n = vs.len();
    (0..n).all(|i| {
        let a = vs[i];
        let e = vs[(i + 1) % n] - a;
        e.cross(p - a) >= -eps * e.norm()
    })
}

/// Intersection of two convex polygons (Sutherland–Hodgman against each
/// edge of `clipper`). Returns an empty vector when the overlap has no area.
pub fn clip_convex(subject: &[Vec2], clipper: &[Vec2]) -> Vec<Vec2> {
    let eps = VERTEX_EPS * scale_of(subject).max(scale_of(clipper));
    let mut out: Vec<Vec2> = subject.to_vec();
    let m = clipper.len();
    for i in 0..m {
        if out.len() < 3 {
            return Vec::new();
        }
        let a = clipper[i];
        let e = clipper[(i + 1) % m] - a;
        let len = e.norm();
        let side = |p: Vec2| e.cross(p - a) / len;
        let input = std::mem::take(&mut out);
        let k = input.len();
        for j in 0..k {
            let p = input[j];
            let q = input[(j + 1) % k];
            let sp = side(p);
            let sq = side(q);
            if sp >= -eps {
                out.push(p);
            }
            if (sp > eps && sq < -eps) || (sp < -eps && sq > eps) {
                let t = sp / (sp - sq);
                out.push(p + (q - p) * t);
            }
        }
        dedup_ring(&mut out, eps);
    }
    if out.len() < 3 || signed_area(&out) <= eps * eps {
        return Vec::new();
    }
    out
}

fn dedup_ring(vs: &mut Vec<Vec2>, eps: f64) {
    vs.dedup_by(|a, b| a.distance(*b) <= eps);
    while vs.len() > 1 && vs[0].distance(vs[vs.len() - 1]) <= eps {
        vs.pop();
    }
}

/// Minkowski sum of two convex counterclockwise polygons by merging their
/// edge sequences in slope order.
pub fn minkowski_sum(p: &[Vec2], q: &[Vec2]) -> Vec<Vec2> {
    fn bottom(vs: &[Vec2]) -> usize {
        let mut best = 0;
        for (i, v) in vs.iter().enumerate() {
            let b = vs[best];
            if v.y < b.y || (v.y == b.y && v.x < b.x) {
                best = i;
            }
        }
        best
    }
    let (n, m) = (p.len(), q.len());
    let (i0, j0) = (bottom(p), bottom(q));
    let mut out = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        out.push(p[(i0 + i) % n] + q[(j0 + j) % m]);
        let ep = p[(i0 + i + 1) % n] - p[(i0 + i) % n];
        let eq = q[(j0 + j + 1) % m] - q[(j0 + j) % m];
        let c = ep.cross(eq);
        if j == m || (i < n && c > 0.0) {
            i += 1;
        } else if i == n || c < 0.0 {
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    out
}

/// Smallest enclosing circle (incremental Welzl-style construction,
/// deterministic order). Returns `(center, radius)`.
pub fn min_enclosing_circle(pts: &[Vec2]) -> (Vec2, f64) {
    let scale = scale_of(pts);
    let eps = 1e-12 * scale;
    let inside = |c: Vec2, r: f64, p: Vec2| p.distance(c) <= r + eps;
    let mut c = pts[0];
    let mut r = 0.0;
    for i in 1..pts.len() {
        if inside(c, r, pts[i]) {
            continue;
        }
        c = pts[i];
        r = 0.0;
        for j in 0..i {
            if inside(c, r, pts[j]) {
                continue;
            }
            c = (pts[i] + pts[j]) * 0.5;
            r = pts[i].distance(c);
            for k in 0..j {
                if inside(c, r, pts[k]) {
                    continue;
                }
                if let Some(cc) = circumcenter(pts[i], pts[j], pts[k]) {
                    c = cc;
                    r = pts[i].distance(c);
                }
            }
        }
    }
    (c, r)
}

fn circumcenter(a: Vec2, b: Vec2, c: Vec2) -> Option<Vec2> {
    let ab = b - a;
    let ac = c - a;
    let d = 2.0 * ab.cross(ac);
    if d.abs() < 1e-300 {
        return None;
    }
    let ux = (ac.y * ab.norm_sq() - ab.y * ac.norm_sq()) / d;
    let uy = (ab.x * ac.norm_sq() - ac.x * ab.norm_sq()) / d;
    Some(a + Vec2::new(ux, uy))
}

/// Parameter interval of the segment `a + t (b - a)`, `t ∈ [0, 1]`, lying in
/// the open interior of the convex polygon. Segments lying on a supporting
/// line are outside the interior.
pub fn segment_in_open_polygon(a: Vec2, b: Vec2, vs: &[Vec2]) -> Option<(f64, f64)> {
    let eps = VERTEX_EPS * scale_of(vs);
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let n = vs.len();
    for i in 0..n {
        let p = vs[i];
        let e = vs[(i + 1) % n] - p;
        let len = e.norm();
        // inside ⇔ e × (x − p) > 0
        let f0 = e.cross(a - p) / len;
        let fd = e.cross(d) / len;
        if fd.abs() <= eps * d.norm().max(1e-300) {
            if f0 <= eps {
                return None;
            }
            continue;
        }
        let t = -f0 / fd;
        if fd > 0.0 {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
        if t0 >= t1 {
            return None;
        }
    }
    Some((t0, t1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(h: f64) -> Vec<Vec2> {
        vec![Vec2::new(-h, -h), Vec2::new(h, -h), Vec2::new(h, h), Vec2::new(-h, h)]
    }

    #[test]
    fn clipping_overlapping_squares() {
        let a = square(1.0);
        let b: Vec<Vec2> = square(1.0).into_iter().map(|v| v + Vec2::new(0.5, 0.25)).collect();
        let c = clip_convex(&a, &b);
        assert!((signed_area(&c) - 1.5 * 1.75).abs() < 1e-13);
        let far: Vec<Vec2> = square(1.0).into_iter().map(|v| v + Vec2::new(3.0, 0.0)).collect();
        assert!(clip_convex(&a, &far).is_empty());
        // edge contact has no area
        let touch: Vec<Vec2> = square(1.0).into_iter().map(|v| v + Vec2::new(2.0, 0.0)).collect();
        assert!(clip_convex(&a, &touch).is_empty());
    }

    #[test]
    fn minkowski_sum_of_squares_and_triangle() {
        let s = minkowski_sum(&square(0.5), &square(0.5));
        assert!((signed_area(&s) - 4.0).abs() < 1e-14);
        let tri = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let s = minkowski_sum(&square(0.5), &tri);
        // area(K) + area(M) + 2 V(K, M); V(square, tri) = ½ Σ h_tri(u_i) ℓ_i
        let mixed = 0.5 * (1.0 + 0.0 + 1.0 + 0.0);
        assert!((signed_area(&s) - (1.0 + 0.5 + 2.0 * mixed)).abs() < 1e-14);
    }

    #[test]
    fn enclosing_circle_of_triangle() {
        let tri = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let (c, r) = min_enclosing_circle(&tri);
        assert!(c.distance(Vec2::new(0.5, 0.5)) < 1e-14);
        assert!((r - 0.5f64.sqrt()).abs() < 1e-14);
        // obtuse triangle: diameter of the longest side
        let obtuse = [Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0), Vec2::new(2.0, 0.5)];
        let (c, r) = min_enclosing_circle(&obtuse);
        assert!(c.distance(Vec2::new(2.0, 0.0)) < 1e-14 && (r - 2.0).abs() < 1e-14);
    }

    #[test]
    fn open_interior_excludes_supporting_lines() {
        let sq = square(1.0);
        let (t0, t1) = segment_in_open_polygon(Vec2::new(-2.0, 0.0), Vec2::new(2.0, 0.0), &sq).unwrap();
        assert!((t0 - 0.25).abs() < 1e-15 && (t1 - 0.75).abs() < 1e-15);
        assert!(segment_in_open_polygon(Vec2::new(-2.0, 1.0), Vec2::new(2.0, 1.0), &sq).is_none());
    }
}
