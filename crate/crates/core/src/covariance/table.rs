//! Piecewise Chebyshev interpolation of a function of one variable with
//! known kink locations.
//!
//! Each piece `[a, b]` is parametrized by `x = a + (b − a)(3s² − 2s³)`, which
//! turns endpoint behaviour like `√(x − a)` or `(b − x)^{3/2}` into analytic
//! functions of `s`.

use crate::error::{Error, Result};

const DEGREE: usize = 32;
const MAX_DEPTH: usize = 48;
/// Pieces narrower than this fraction of the range are accepted as they are.
const MIN_WIDTH: f64 = 1e-10;

fn smoothstep(s: f64) -> f64 {
    s * s * (3.0 - 2.0 * s)
}

fn smoothstep_inverse(x: f64) -> f64 {
    0.5 - (((1.0 - 2.0 * x).clamp(-1.0, 1.0)).asin() / 3.0).sin()
}

#[derive(Debug, Clone)]
struct Piece {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Piece {
    fn eval(&self, x: f64) -> f64 {
        let u = 2.0 * smoothstep_inverse((x - self.a) / (self.b - self.a)) - 1.0;
        // Clenshaw
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + 2.0 * u * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + u * b1 - b2
    }
}

/// Interpolant on `[lo, hi]`, zero outside.
#[derive(Debug, Clone)]
pub(crate) struct ChebTable {
    pieces: Vec<Piece>,
    lo: f64,
    hi: f64,
    pub(crate) error: f64,
}

fn fit(values: &[f64]) -> Vec<f64> {
    let n = values.len() - 1;
    (0..=n)
        .map(|j| {
            let mut s = 0.0;
            for (k, v) in values.iter().enumerate() {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                s += w * v * (std::f64::consts::PI * (j * k) as f64 / n as f64).cos();
            }
            let c = 2.0 * s / n as f64;
            if j == 0 || j == n {
                0.5 * c
            } else {
                c
            }
        })
        .collect()
}

impl ChebTable {
    /// Tabulates `f` on `[lo, hi]`, splitting at `breaks` and then bisecting
    /// until the trailing coefficients fall below `tol`.
    pub(crate) fn build<F: FnMut(f64) -> Result<f64>>(mut f: F, lo: f64, hi: f64, breaks: &[f64], tol: f64) -> Result<Self> {
        let mut points: Vec<f64> = std::iter::once(lo)
            .chain(breaks.iter().copied().filter(|&x| x > lo && x < hi))
            .chain(std::iter::once(hi))
            .collect();
        points.sort_by(f64::total_cmp);
        points.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * hi.abs().max(1.0));
        let mut table = ChebTable { pieces: Vec::new(), lo, hi, error: 0.0 };
        let mut stack: Vec<(f64, f64, usize)> = points.windows(2).rev().map(|w| (w[0], w[1], 0)).collect();
        while let Some((a, b, depth)) = stack.pop() {
            let values = (0..=DEGREE)
                .map(|k| {
                    let u = (std::f64::consts::PI * k as f64 / DEGREE as f64).cos();
                    f(a + (b - a) * smoothstep(0.5 * (u + 1.0)))
                })
                .collect::<Result<Vec<f64>>>()?;
            let coeffs = fit(&values);
            let tail = coeffs[DEGREE - 2..].iter().map(|c| c.abs()).fold(0.0, f64::max);
            if tail <= tol || b - a <= MIN_WIDTH * (hi - lo) {
                table.error = table.error.max(tail);
                table.pieces.push(Piece { a, b, coeffs });
            } else if depth >= MAX_DEPTH {
                return Err(Error::Quadrature { achieved: tail, requested: tol });
            } else {
                let mid = 0.5 * (a + b);
                stack.push((mid, b, depth + 1));
                stack.push((a, mid, depth + 1));
            }
        }
        Ok(table)
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        if !(x >= self.lo && x <= self.hi) {
            return 0.0;
        }
        let i = self.pieces.partition_point(|p| p.b < x).min(self.pieces.len() - 1);
        self.pieces[i].eval(x)
    }

    /// Interior piece boundaries, useful as quadrature breakpoints.
    pub(crate) fn knots(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.a).collect()
    }
}
