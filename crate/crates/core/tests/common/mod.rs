//! Random instances and property checks shared by the integration suites.
#![allow(dead_code)]

use boolean_lab::grain::{min_enclosing_circle, GrainShape, Vec2};
use boolean_lab::limit::{run_batch, standardize};
use boolean_lab::process::ModelConfig;
use boolean_lab::union::{arrangement_measure, PlacedGrain, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Tolerance of exact-geometry identities.
pub const GEOMETRY_TOL: f64 = 1e-9;

pub fn random_shape(rng: &mut ChaCha8Rng) -> GrainShape {
    match rng.random_range(0..3) {
        0 => GrainShape::disk(rng.random_range(0.3..1.5)).unwrap(),
        1 => GrainShape::rect(rng.random_range(0.2..1.2), rng.random_range(0.2..1.2)).unwrap(),
        _ => {
            let n = rng.random_range(3..8);
            let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
            angles.sort_by(f64::total_cmp);
            let (a, b) = (rng.random_range(0.4..1.4), rng.random_range(0.4..1.4));
            let vs = angles.iter().map(|t| Vec2::new(a * t.cos(), b * t.sin())).collect();
            GrainShape::polygon(vs).unwrap_or_else(|_| GrainShape::rect(0.5, 0.3).unwrap().rotated(1.0))
        }
    }
}

/// Up to eight mixed grains around a 4×3 window.
pub fn random_instance(seed: u64) -> (Vec<PlacedGrain>, Window) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Window::new(Vec2::new(0.0, 0.0), Vec2::new(4.0, 3.0)).unwrap();
    let n = rng.random_range(1..=8);
    let grains = (0..n)
        .map(|_| {
            let c = Vec2::new(rng.random_range(-1.0..5.0), rng.random_range(-1.0..4.0));
            PlacedGrain::new(c, random_shape(&mut rng))
        })
        .collect();
    (grains, w)
}

/// `φ(Z ∩ (A ∪ B)) = φ(Z ∩ A) + φ(Z ∩ B) − φ(Z ∩ A ∩ B)` for two
/// overlapping windows splitting `window` at `s < t` along x.
pub fn check_additivity(grains: &[PlacedGrain], window: &Window, s: f64, t: f64) -> Result<(), String> {
    let (lo, hi) = (window.lo(), window.hi());
    let a = Window::new(lo, Vec2::new(t, hi.y)).unwrap();
    let b = Window::new(Vec2::new(s, lo.y), hi).unwrap();
    let ab = Window::new(Vec2::new(s, lo.y), Vec2::new(t, hi.y)).unwrap();
    let whole = arrangement_measure(grains, window);
    let sum = arrangement_measure(grains, &a) + arrangement_measure(grains, &b) - arrangement_measure(grains, &ab);
    let d = whole.max_abs_diff(&sum);
    if d <= GEOMETRY_TOL {
        Ok(())
    } else {
        Err(format!("additivity gap {d:.3e}: {whole:?} vs {sum:?}"))
    }
}

pub fn check_translation(grains: &[PlacedGrain], window: &Window, v: Vec2) -> Result<(), String> {
    let moved: Vec<PlacedGrain> = grains.iter().map(|g| g.translated(v)).collect();
    let a = arrangement_measure(grains, window);
    let b = arrangement_measure(&moved, &window.translated(v));
    let d = a.max_abs_diff(&b);
    if d <= GEOMETRY_TOL * (1.0 + v.norm()) {
        Ok(())
    } else {
        Err(format!("translation by {v:?} changes functionals by {d:.3e}"))
    }
}

/// Regular `n`-gon with circumradius `r`, symmetric for even `n`.
fn regular_polygon(n: usize, r: f64) -> GrainShape {
    let vs = (0..n).map(|k| Vec2::polar(std::f64::consts::TAU * k as f64 / n as f64) * r).collect();
    GrainShape::polygon(vs).unwrap()
}

/// The parallel body `K ⊕ B(r)` has area `V₂ + 2rV₁ + πr²`. A disk is
/// compared with the disk of radius `R + r`. A polygon is rebuilt as the
/// union of `K`, edge slabs reaching `r/2` back into `K` and vertex disks,
/// measured by the arrangement, and its area is also bracketed by the sums
/// with inscribed and circumscribed regular 64-gons.
pub fn check_steiner(shape: &GrainShape, r: f64) -> Result<(), String> {
    let area = shape.steiner_area(r).map_err(|e| e.to_string())?;
    let iv = shape.intrinsic_volumes();
    let Some(vs) = shape.vertices() else {
        let big = GrainShape::disk(shape.circumradius() + r).unwrap().intrinsic_volumes();
        let gap = (big.v2 - area).abs().max((big.v1 - iv.v1 - std::f64::consts::PI * r).abs());
        return if gap <= 1e-12 * area { Ok(()) } else { Err(format!("disk Steiner area {area} vs {big:?}")) };
    };
    let mut pieces = vec![PlacedGrain::new(Vec2::new(0.0, 0.0), shape.clone())];
    for (i, &p) in vs.iter().enumerate() {
        let q = vs[(i + 1) % vs.len()];
        let e = q - p;
        let n = Vec2::new(e.y, -e.x) * (r / e.norm());
        let corners = vec![p - n * 0.5, p + n, q + n, q - n * 0.5];
        let (center, _) = min_enclosing_circle(&corners);
        pieces.push(PlacedGrain::new(center, GrainShape::polygon(corners).map_err(|e| e.to_string())?));
        pieces.push(PlacedGrain::new(p, GrainShape::disk(r).unwrap()));
    }
    let big = shape.circumradius() + r + 1.0;
    let w = Window::centered(2.0 * big, 2.0 * big).unwrap();
    let f = arrangement_measure(&pieces, &w);
    let gaps = [(f.v0 - 1.0).abs(), (f.v1 - iv.v1 - std::f64::consts::PI * r).abs(), (f.v2 - area).abs()];
    if gaps.iter().any(|&g| g > GEOMETRY_TOL * (1.0 + area)) {
        return Err(format!("assembled parallel body {f:?} against Steiner area {area}"));
    }
    let n = 64;
    let inner = shape.minkowski_sum_area(&regular_polygon(n, r));
    let outer = shape.minkowski_sum_area(&regular_polygon(n, r / (std::f64::consts::PI / n as f64).cos()));
    if inner <= area * (1.0 + GEOMETRY_TOL) && area <= outer * (1.0 + GEOMETRY_TOL) {
        Ok(())
    } else {
        Err(format!("Steiner area {area} outside [{inner}, {outer}]"))
    }
}

/// `g(t) = g(−t)`, `0 ≤ g ≤ g(0) = V₂`, and `g = 0` beyond the diameter.
pub fn check_covariogram(shape: &GrainShape, t: Vec2) -> Result<(), String> {
    let g = shape.covariogram(t);
    let h = shape.covariogram(t * -1.0);
    let area = shape.area();
    if (g - h).abs() > GEOMETRY_TOL * area {
        return Err(format!("asymmetric covariogram at {t:?}: {g} vs {h}"));
    }
    if (shape.covariogram(Vec2::new(0.0, 0.0)) - area).abs() > GEOMETRY_TOL * area {
        return Err("covariogram at the origin differs from the area".into());
    }
    if g < -GEOMETRY_TOL || g > area * (1.0 + GEOMETRY_TOL) {
        return Err(format!("covariogram {g} outside [0, {area}]"));
    }
    if t.norm() > 2.0 * shape.circumradius() && g != 0.0 {
        return Err(format!("covariogram {g} beyond the diameter at {t:?}"));
    }
    Ok(())
}

pub fn check_standardization(xs: &[f64]) -> Result<(), String> {
    let z = standardize(xs).map_err(|e| e.to_string())?;
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    if mean.abs() <= 1e-12 && (var - 1.0).abs() <= 1e-12 {
        Ok(())
    } else {
        Err(format!("standardized mean {mean:e}, variance {var}"))
    }
}

/// Replicate values do not depend on how they are split over threads.
pub fn check_seed_split(config: &ModelConfig, r: f64, n: usize, threads: usize) -> Result<(), String> {
    let one = run_batch(config, r, n, 1).map_err(|e| e.to_string())?;
    let many = run_batch(config, r, n, threads).map_err(|e| e.to_string())?;
    let head = run_batch(config, r, n / 2, threads).map_err(|e| e.to_string())?;
    if one != many {
        return Err(format!("{threads} threads change the batch"));
    }
    if head.values[..] != one.values[..n / 2] {
        return Err("a shorter batch is not a prefix of the longer one".into());
    }
    Ok(())
}
