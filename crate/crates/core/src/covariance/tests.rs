use super::*;
use crate::grain::Vec2;
use crate::moments::window_mean_2d;
use crate::process::{sample_grains, GrainFamily, ModelConfig, ParamLaw};
use crate::union::{arrangement_measure_in, intersect_convex, PlacedGrain, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lens(r: f64, d: f64) -> f64 {
    if d >= 2.0 * r {
        0.0
    } else {
        2.0 * r * r * (d / (2.0 * r)).acos() - 0.5 * d * (4.0 * r * r - d * d).sqrt()
    }
}

fn arc_half(r: f64, d: f64) -> f64 {
    if d >= 2.0 * r {
        0.0
    } else {
        r * (d / (2.0 * r)).acos()
    }
}

fn disk_law() -> GrainDistribution {
    GrainDistribution::disk(1.0).unwrap()
}

fn square_law() -> GrainDistribution {
    let sq = GrainShape::rect(0.5, 0.5).unwrap();
    GrainDistribution::fixed(sq, true).unwrap()
}

fn triangle_law() -> GrainDistribution {
    let tri = GrainShape::polygon(vec![Vec2::new(0.0, 0.0), Vec2::new(1.5, 0.0), Vec2::new(0.3, 1.1)]).unwrap();
    GrainDistribution::fixed(tri, true).unwrap()
}

fn uniform_disk_law() -> GrainDistribution {
    GrainDistribution::new(GrainFamily::Disk { radius: ParamLaw::Uniform { lo: 0.5, hi: 1.2 } }, false).unwrap()
}

fn uniform_in_disk(rng: &mut impl Rng, r: f64) -> Vec2 {
    loop {
        let p = Vec2::new(rng.random_range(-r..r), rng.random_range(-r..r));
        if p.norm() < r {
            return p;
        }
    }
}

fn on_circle(rng: &mut impl Rng) -> Vec2 {
    let th = rng.random_range(0.0..2.0 * PI);
    Vec2::new(th.cos(), th.sin())
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn zero_intensity_gives_zero() {
    assert_eq!(sigma_volume(0.0, &disk_law()).unwrap().value, 0.0);
    assert_eq!(rho_12(0.0, &disk_law()).unwrap().value, 0.0);
    assert_eq!(rho_11(0.0, &square_law()).unwrap().value, 0.0);
}

#[test]
fn sigma_volume_against_grid_cubature() {
    let gamma = 0.3;
    let n = 4000;
    let h = 4.0 / n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let x = -2.0 + (i as f64 + 0.5) * h;
        for j in 0..n {
            let y = -2.0 + (j as f64 + 0.5) * h;
            s += (gamma * lens(1.0, x.hypot(y))).exp_m1();
        }
    }
    let q = (-gamma * PI).exp();
    let oracle = q * q * s * h * h;
    let v = sigma_volume(gamma, &disk_law()).unwrap();
    assert!(((v.value - oracle) / oracle).abs() < 2e-5, "{} vs {oracle}", v.value);
    assert!(v.error < 1e-8);
}

#[test]
fn aligned_rectangles_against_grid_cubature() {
    let law = GrainDistribution::new(
        GrainFamily::Rect { halfwidth: ParamLaw::constant(1.0), halfheight: ParamLaw::constant(0.5) },
        false,
    )
    .unwrap();
    let gamma = 0.4;
    // c2(t) = γ (2 − |x|)(1 − |y|) on [−2,2]×[−1,1]
    let (nx, ny) = (2000, 1000);
    let (hx, hy) = (4.0 / nx as f64, 2.0 / ny as f64);
    let mut s = 0.0;
    for i in 0..nx {
        let x = -2.0 + (i as f64 + 0.5) * hx;
        for j in 0..ny {
            let y = -1.0 + (j as f64 + 0.5) * hy;
            s += (gamma * (2.0 - x.abs()) * (1.0 - y.abs())).exp_m1();
        }
    }
    let oracle = s * hx * hy;
    let v = rho_22(gamma, &law).unwrap();
    assert!(((v.value - oracle) / oracle).abs() < 1e-6, "{} vs {oracle}", v.value);
    assert!(sigma_matrix(gamma, &law).is_err());
    // standalone ρ(V₁,V₂) is still available
    let r12 = rho_12(gamma, &law).unwrap().value;
    assert!(r12 > gamma * 3.0 * 2.0);
}

#[test]
fn first_order_limits() {
    let g = 1e-7;
    for law in [disk_law(), square_law(), uniform_disk_law()] {
        let m = law.moments();
        let r22 = rho_22(g, &law).unwrap().value / g;
        let r12 = rho_12(g, &law).unwrap().value / g;
        let r11 = rho_11(g, &law).unwrap().value / g;
        assert!((r22 / m.ev2sq - 1.0).abs() < 1e-5, "{r22} vs {}", m.ev2sq);
        assert!((r12 / m.ev1v2 - 1.0).abs() < 1e-5, "{r12} vs {}", m.ev1v2);
        assert!((r11 / m.ev1sq - 1.0).abs() < 1e-5, "{r11} vs {}", m.ev1sq);
        for (i, e) in [1.0, m.ev1, m.ev2].iter().enumerate() {
            let r = rho_0i(g, &m, i, true).unwrap() / g;
            assert!((r / e - 1.0).abs() < 1e-5);
        }
    }
}

#[test]
fn rho_12_against_monte_carlo() {
    let gamma = 0.3;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let xs: Vec<f64> = (0..1_000_000)
        .map(|_| {
            let y = on_circle(&mut rng);
            let z = uniform_in_disk(&mut rng, 1.0);
            (gamma * lens(1.0, y.distance(z))).exp()
        })
        .collect();
    let (m, se) = mean_se(&xs);
    let oracle = gamma * PI * PI * m;
    let v = rho_12(gamma, &disk_law()).unwrap().value;
    assert!((v - oracle).abs() < 4.0 * gamma * PI * PI * se, "{v} vs {oracle}");
    assert!(((v - oracle) / v).abs() < 1e-3);
}

#[test]
fn rho_11_against_monte_carlo() {
    let gamma = 0.3;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 1_000_000;
    let cross: Vec<f64> = (0..n)
        .map(|_| {
            let y = on_circle(&mut rng);
            let z = uniform_in_disk(&mut rng, 1.0);
            let d = y.distance(z);
            (gamma * lens(1.0, d)).exp() * gamma * arc_half(1.0, d)
        })
        .collect();
    let same: Vec<f64> = (0..n)
        .map(|_| {
            let y = on_circle(&mut rng);
            let z = on_circle(&mut rng);
            (gamma * lens(1.0, y.distance(z))).exp()
        })
        .collect();
    let (mc, sc) = mean_se(&cross);
    let (ms, ss) = mean_se(&same);
    let oracle = gamma * PI * PI * mc + gamma * PI * PI * ms;
    let se = gamma * PI * PI * (sc * sc + ss * ss).sqrt();
    let f = CovariogramFunctions::new(gamma, &disk_law()).unwrap();
    let [j112, j11] = f.rho_11_parts().unwrap();
    assert!((j112.value - gamma * PI * PI * mc).abs() < 4.0 * gamma * PI * PI * sc);
    assert!((j11.value - gamma * PI * PI * ms).abs() < 4.0 * gamma * PI * PI * ss);
    let v = j112.value + j11.value;
    assert!((v - oracle).abs() < 4.0 * se && ((v - oracle) / v).abs() < 1e-3, "{v} vs {oracle}");
}

#[test]
fn rho_0i_closed_forms() {
    let m = GrainMoments { ev1: 1.0, ev2: 1.0, ev1sq: 1.0, ev2sq: 1.0, ev1v2: 1.0, mixed: None };
    assert!((rho_0i(1.0, &m, 2, false).unwrap() - (1f64.exp() - 1.0)).abs() < 1e-15);
    assert!(rho_0i(1.0, &m, 1, false).is_err());
    let dm = disk_law().moments();
    let g = 0.3;
    let (y1, y2) = (g * dm.ev1, g * dm.ev2);
    assert!((rho_0i(g, &dm, 1, true).unwrap() - y2.exp() * y1).abs() < 1e-14);
    assert!((rho_0i(g, &dm, 0, true).unwrap() - y2.exp() * (g + y1 * y1 / PI)).abs() < 1e-14);
    assert!(rho_0i_general(4, &[1.0, 1.0, 1.0]).is_err());
}

#[test]
fn rho_01_against_translative_series() {
    // n-th term γⁿ/n! ∫ V₁(K ∩ (K + x₂) ∩ … ∩ (K + xₙ)) dx with unit disks;
    // nonempty intersections need |xᵢ| < 2
    let gamma = 0.3;
    let disk = GrainShape::disk(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let reps = 40_000;
    let mut total = 0.0;
    let mut var = 0.0f64;
    let mut fact = 1.0;
    for n in 1..=4usize {
        fact *= n as f64;
        let factor = f64::powi(gamma, n as i32) / fact * (4.0 * PI).powi(n as i32 - 1);
        let xs: Vec<f64> = (0..reps)
            .map(|_| {
                let mut grains = vec![PlacedGrain::new(Vec2::ZERO, disk.clone())];
                for _ in 1..n {
                    grains.push(PlacedGrain::new(uniform_in_disk(&mut rng, 2.0), disk.clone()));
                }
                intersect_convex(&grains, None, 8).unwrap().map_or(0.0, |c| c.functionals().v1)
            })
            .collect();
        let (m, se) = mean_se(&xs);
        let term = factor * m;
        let exact = gamma * PI * (gamma * PI).powi(n as i32 - 1) / (fact / n as f64);
        assert!((term - exact).abs() < 4.0 * factor * se + 1e-12, "term {n}: {term} vs {exact}");
        total += term;
        var += (factor * se).powi(2);
    }
    let (y1, y2) = (gamma * PI, gamma * PI);
    let rho = rho_0i(gamma, &disk_law().moments(), 1, true).unwrap();
    let head: f64 = (0..4).map(|k| y2.powi(k) / (1..=k).product::<i32>().max(1) as f64).sum();
    let tail = y1 * (y2.exp() - head);
    assert!((total - rho).abs() < 4.0 * var.sqrt() + tail, "{total} vs {rho} (tail {tail})");
}

#[test]
fn p_polynomials() {
    let t = [0.7, 0.4, 0.0];
    for j in 0..=2 {
        assert_eq!(p_polynomial(2, j, j, &t).unwrap(), 1.0);
    }
    assert!((p_polynomial(2, 1, 2, &t).unwrap() + 0.4).abs() < 1e-15);
    assert!((p_polynomial(2, 0, 1, &t).unwrap() + 2.0 * 0.4 / PI).abs() < 1e-15);
    assert!((p_polynomial(2, 0, 2, &t).unwrap() - (-0.7 + 0.16 / PI)).abs() < 1e-15);
    assert!(p_polynomial(2, 2, 1, &t).is_err());
    assert!(p_polynomial(2, 0, 3, &t).is_err());
    // three dimensions: P_{d−1,d} = −c^d_{d−1} c^{d−1}_d t_{d−1} = −t_{d−1}
    assert!((p_polynomial(3, 2, 3, &[0.0, 0.0, 0.9]).unwrap() + 0.9).abs() < 1e-15);
}

#[test]
fn phi_star_matches_window_means() {
    let law = disk_law();
    let m = law.moments();
    let g = 0.3;
    let p = volume_fraction(g, m.ev2);
    let body = FunctionalVector::new(1.0, 4.0, 3.5);
    assert!((phi_star(2, body, g, &m, false).unwrap() + (1.0 - p) * 3.5).abs() < 1e-15);
    assert_eq!(phi_star(1, FunctionalVector::ZERO, g, &m, true).unwrap(), 0.0);
    assert!(phi_star(1, body, g, &m, false).is_err());
    // convex K with area A and half-perimeter h
    let mean = window_mean_2d(g, &m, 3.5, 4.0);
    for j in 0..3 {
        let v = phi_star(j, body, g, &m, true).unwrap();
        assert!((v - (mean.get(j) - body.get(j))).abs() < 1e-13, "j = {j}");
    }
}

#[test]
fn phi_star_one_against_simulation() {
    let g = 0.3;
    let law = disk_law();
    let config = ModelConfig::new(g, law.clone(), Window::centered(4.0, 4.0).unwrap(), 404).unwrap();
    let k = PlacedGrain::new(Vec2::ZERO, GrainShape::disk(1.0).unwrap());
    let xs: Vec<f64> =
        (0..20_000).map(|rep| arrangement_measure_in(&sample_grains(&config, rep), &k).v1 - PI).collect();
    let (mean, se) = mean_se(&xs);
    let theory = phi_star(1, FunctionalVector::new(1.0, PI, PI), g, &law.moments(), true).unwrap();
    assert!((mean - theory).abs() < 3.0 * se, "{mean} ± {se} vs {theory}");
}

#[test]
fn sigma_matrix_for_unit_disks() {
    let g = 0.3;
    let rep = sigma_matrix(g, &disk_law()).unwrap();
    let s = rep.sigma;
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(s.get(i, j), s.get(j, i));
        }
    }
    assert_eq!(s.get(2, 2), sigma_volume(g, &disk_law()).unwrap().value);
    assert!(s.is_positive_definite());
    assert_eq!(rep.cross_checks.len(), 3);
    assert!(rep.cross_checks.iter().all(|c| c.relative <= CROSS_CHECK_TOLERANCE));
}

#[test]
fn small_intensity_slope_is_the_moment_gram_matrix() {
    let g = 1e-4;
    for law in [disk_law(), square_law()] {
        let m = law.moments();
        let gram = [[1.0, m.ev1, m.ev2], [m.ev1, m.ev1sq, m.ev1v2], [m.ev2, m.ev1v2, m.ev2sq]];
        let s = sigma_matrix(g, &law).unwrap().sigma;
        for i in 0..3 {
            for j in 0..3 {
                let rel = (s.get(i, j) / g - gram[i][j]) / gram[i][j];
                assert!(rel.abs() < 5e-3, "({i},{j}): {} vs {}", s.get(i, j) / g, gram[i][j]);
            }
        }
    }
}

#[test]
fn positive_definite_over_intensity_grid() {
    for law in [disk_law(), square_law(), triangle_law(), uniform_disk_law()] {
        let f = |g: f64| sigma_matrix(g, &law).unwrap().sigma;
        for g in [0.05, 0.1, 0.3, 0.5, 1.0] {
            let s = f(g);
            assert!(s.is_positive_definite(), "γ = {g}: {s:?}");
            for i in 0..3 {
                assert!(s.get(i, i) > 0.0);
            }
        }
    }
}

#[test]
fn halving_the_tolerance_stays_within_the_error_estimate() {
    for law in [disk_law(), square_law()] {
        let f = CovariogramFunctions::new(0.5, &law).unwrap();
        let tol = Tolerance::new(1e-7, 1e-7);
        let a = f.rho_22_with(tol).unwrap();
        let b = f.rho_22_with(tol.halved()).unwrap();
        assert!((a.value - b.value).abs() <= a.error.max(1e-15), "{a:?} vs {b:?}");
    }
}

#[test]
fn rotated_rectangle_law_is_isotropic() {
    let law = GrainDistribution::new(
        GrainFamily::Rect { halfwidth: ParamLaw::constant(0.5), halfheight: ParamLaw::constant(0.5) },
        true,
    )
    .unwrap();
    let a = sigma_matrix(0.3, &law).unwrap().sigma;
    let b = sigma_matrix(0.3, &square_law()).unwrap().sigma;
    for i in 0..3 {
        for j in 0..3 {
            assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-8 * b.get(i, j).abs().max(1e-3));
        }
    }
}
