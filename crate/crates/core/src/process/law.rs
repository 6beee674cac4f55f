use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};

/// Law of a positive shape parameter with bounded support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase", deny_unknown_fields)]
pub enum ParamLaw {
    Constant { value: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Finite mixture of point masses; weights are normalized on use.
    Discrete { values: Vec<f64>, weights: Vec<f64> },
}

impl ParamLaw {
    pub fn constant(value: f64) -> Self {
        ParamLaw::Constant { value }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(format!("{name}: {msg}")));
        match self {
            ParamLaw::Constant { value } => {
                if !(value.is_finite() && *value > 0.0) {
                    return bad(format!("constant must be finite and positive, got {value}"));
                }
            }
            ParamLaw::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo > 0.0 && lo < hi) {
                    return bad(format!("uniform law needs 0 < lo < hi < ∞, got [{lo}, {hi}]"));
                }
            }
            ParamLaw::Discrete { values, weights } => {
                if values.is_empty() || values.len() != weights.len() {
                    return bad("discrete law needs matching nonempty values and weights".into());
                }
                if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return bad("discrete values must be finite and positive".into());
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
                    return bad("discrete weights must be nonnegative with a positive sum".into());
                }
            }
        }
        Ok(())
    }

    /// Upper end of the support.
    pub fn max(&self) -> f64 {
        match self {
            ParamLaw::Constant { value } => *value,
            ParamLaw::Uniform { hi, .. } => *hi,
            ParamLaw::Discrete { values, .. } => values.iter().cloned().fold(0.0, f64::max),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ParamLaw::Constant { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ParamLaw::Constant { value } => *value,
            ParamLaw::Uniform { lo, hi } => rng.random_range(*lo..*hi),
            ParamLaw::Discrete { values, weights } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                for (v, w) in values.iter().zip(weights) {
                    if u < *w {
                        return *v;
                    }
                    u -= w;
                }
                *values.last().expect("validated nonempty")
            }
        }
    }

    /// `E X^k` in closed form.
    pub fn moment(&self, k: i32) -> f64 {
        match self {
            ParamLaw::Constant { value } => value.powi(k),
            ParamLaw::Uniform { lo, hi } => (hi.powi(k + 1) - lo.powi(k + 1)) / ((k + 1) as f64 * (hi - lo)),
            ParamLaw::Discrete { values, weights } => {
                let total: f64 = weights.iter().sum();
                values.iter().zip(weights).map(|(v, w)| w * v.powi(k)).sum::<f64>() / total
            }
        }
    }

    /// `E f(X)` by adaptive quadrature on the support. Kinks of `f` inside
    /// the support should be passed as `breaks`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F, breaks: &[f64], tol: Tolerance) -> Result<f64> {
        match self {
            ParamLaw::Constant { value } => Ok(f(*value)),
            ParamLaw::Uniform { lo, hi } => {
                let r = quad::integrate(&mut f, *lo, *hi, breaks, tol)?;
                Ok(r.value / (hi - lo))
            }
            ParamLaw::Discrete { values, weights } => {
                let total: f64 = weights.iter().sum();
                Ok(values.iter().zip(weights).map(|(v, w)| w * f(*v)).sum::<f64>() / total)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn moments_in_closed_form() {
        let u = ParamLaw::Uniform { lo: 1.0, hi: 3.0 };
        assert!((u.moment(1) - 2.0).abs() < 1e-15);
        assert!((u.moment(2) - 13.0 / 3.0).abs() < 1e-14);
        let d = ParamLaw::Discrete { values: vec![1.0, 2.0], weights: vec![1.0, 3.0] };
        assert!((d.moment(2) - 3.25).abs() < 1e-15);
        let e = u.expect(|x| x * x, &[], Tolerance::default()).unwrap();
        assert!((e - 13.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_unbounded_or_degenerate_laws() {
        assert!(ParamLaw::Uniform { lo: 1.0, hi: f64::INFINITY }.validate("r").is_err());
        assert!(ParamLaw::Uniform { lo: 2.0, hi: 1.0 }.validate("r").is_err());
        assert!(ParamLaw::Constant { value: 0.0 }.validate("r").is_err());
        assert!(ParamLaw::Discrete { values: vec![1.0], weights: vec![0.0] }.validate("r").is_err());
    }

    #[test]
    fn discrete_sampling_frequencies() {
        let d = ParamLaw::Discrete { values: vec![1.0, 2.0], weights: vec![1.0, 3.0] };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 40_000;
        let twos = (0..n).filter(|_| d.sample(&mut rng) == 2.0).count() as f64 / n as f64;
        assert!((twos - 0.75).abs() < 3.0 * (0.75f64 * 0.25 / n as f64).sqrt());
    }
}
