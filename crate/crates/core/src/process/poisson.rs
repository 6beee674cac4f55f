//! Poisson variates: sequential inversion below [`INVERSION_LIMIT`], the
//! transformed rejection method with squeeze (PTRS) at and above it.

use rand::Rng;
use statrs::function::gamma::ln_gamma;

pub const INVERSION_LIMIT: f64 = 30.0;

pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < INVERSION_LIMIT {
        inversion(rng, mean)
    } else {
        ptrs(rng, mean)
    }
}

fn inversion<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
        if p == 0.0 && cdf < u {
            // round-off in the far tail
            break;
        }
    }
    k
}

fn ptrs<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    let smu = mean.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    let log_mean = mean.ln();
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln() <= -mean + k * log_mean - ln_gamma(k + 1.0) {
            return k as u64;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn check(mean: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| poisson(&mut rng, mean) as f64).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        let se = (mean / n as f64).sqrt();
        assert!((m - mean).abs() < 4.0 * se, "mean {m} vs {mean}");
        let rel_sd = ((1.0 / mean + 2.0) / n as f64).sqrt();
        assert!((v / mean - 1.0).abs() < 4.0 * rel_sd, "variance {v} vs {mean}");
    }

    #[test]
    fn moments_on_both_sides_of_the_switch() {
        for mean in [0.01, 2.5, 29.9, 30.0, 150.0, 4000.0] {
            check(mean);
        }
    }

    #[test]
    fn small_mean_pmf() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let mut hist = [0usize; 4];
        for _ in 0..n {
            let k = poisson(&mut rng, 1.0) as usize;
            if k < 4 {
                hist[k] += 1;
            }
        }
        let e = (-1.0f64).exp();
        for (k, expected) in [e, e, e / 2.0, e / 6.0].iter().enumerate() {
            let f = hist[k] as f64 / n as f64;
            assert!((f - expected).abs() < 4.0 * (expected / n as f64).sqrt());
        }
    }
}
