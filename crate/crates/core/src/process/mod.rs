//! Stationary Poisson germ–grain processes observed through a window.
//!
//! Germs are drawn in `W ⊕ B(rmax)`, which contains every germ whose grain
//! can reach `W` because circumradii never exceed `rmax`. Restricting to
//! that set therefore loses nothing.
//!
//! Random streams: replicate `k` of a model with master seed `s` uses
//! ChaCha8 keyed by the little-endian bytes of `s` (remaining key bytes
//! zero), stream number `k`, and consumes words from position 0. Distinct
//! `(seed, replicate)` pairs address disjoint streams, and each draw within
//! a replicate has a unique word position.

mod law;
mod poisson;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grain::{GrainShape, ShapeKind, Vec2};
use crate::moments::GrainMoments;
use crate::parallel::map_indexed;
use crate::quad::Tolerance;
use crate::union::{intersect_convex, PlacedGrain, Window, DEFAULT_CELL_CAP};

pub use law::ParamLaw;
pub use poisson::{poisson, INVERSION_LIMIT};

/// Shape family of the typical grain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GrainFamily {
    /// Every grain is a copy of one shape.
    Fixed { shape: GrainShape },
    Disk { radius: ParamLaw },
    /// Axis-aligned rectangles with independent half-side laws.
    Rect { halfwidth: ParamLaw, halfheight: ParamLaw },
}

/// Law of the typical grain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRecord", into = "DistributionRecord")]
pub struct GrainDistribution {
    family: GrainFamily,
    rotate: bool,
    rmax: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionRecord {
    family: GrainFamily,
    #[serde(default)]
    rotate: bool,
    #[serde(default)]
    rmax: Option<f64>,
}

impl TryFrom<DistributionRecord> for GrainDistribution {
    type Error = Error;
    fn try_from(r: DistributionRecord) -> Result<Self> {
        match r.rmax {
            Some(rmax) => GrainDistribution::with_rmax(r.family, r.rotate, rmax),
            None => GrainDistribution::new(r.family, r.rotate),
        }
    }
}

impl From<GrainDistribution> for DistributionRecord {
    fn from(d: GrainDistribution) -> Self {
        DistributionRecord { family: d.family, rotate: d.rotate, rmax: Some(d.rmax) }
    }
}

impl GrainDistribution {
    /// Distribution with `rmax` equal to the largest possible circumradius.
    pub fn new(family: GrainFamily, rotate: bool) -> Result<Self> {
        Self::validate_family(&family)?;
        let rmax = Self::max_circumradius(&family);
        Ok(Self { family, rotate, rmax })
    }

    /// Distribution with an explicit circumradius bound, which must hold
    /// almost surely.
    pub fn with_rmax(family: GrainFamily, rotate: bool, rmax: f64) -> Result<Self> {
        Self::validate_family(&family)?;
        let needed = Self::max_circumradius(&family);
        if !(rmax.is_finite() && rmax >= needed * (1.0 - 1e-12)) {
            return Err(Error::InvalidDistribution(format!(
                "rmax = {rmax} is not a bound on the circumradius (largest possible value {needed})"
            )));
        }
        Ok(Self { family, rotate, rmax })
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Self::new(GrainFamily::Disk { radius: ParamLaw::constant(radius) }, false)
    }

    pub fn fixed(shape: GrainShape, rotate: bool) -> Result<Self> {
        Self::new(GrainFamily::Fixed { shape }, rotate)
    }

    fn validate_family(family: &GrainFamily) -> Result<()> {
        match family {
            GrainFamily::Fixed { .. } => Ok(()),
            GrainFamily::Disk { radius } => radius.validate("radius"),
            GrainFamily::Rect { halfwidth, halfheight } => {
                halfwidth.validate("halfwidth")?;
                halfheight.validate("halfheight")
            }
        }
    }

    fn max_circumradius(family: &GrainFamily) -> f64 {
        match family {
            GrainFamily::Fixed { shape } => shape.circumradius(),
            GrainFamily::Disk { radius } => radius.max(),
            GrainFamily::Rect { halfwidth, halfheight } => halfwidth.max().hypot(halfheight.max()),
        }
    }

    pub fn family(&self) -> &GrainFamily {
        &self.family
    }

    pub fn rotate(&self) -> bool {
        self.rotate
    }

    pub fn rmax(&self) -> f64 {
        self.rmax
    }

    /// True when the law is invariant under rotations.
    pub fn is_isotropic(&self) -> bool {
        self.rotate
            || match &self.family {
                GrainFamily::Disk { .. } => true,
                GrainFamily::Fixed { shape } => shape.is_disk(),
                GrainFamily::Rect { .. } => false,
            }
    }

    pub fn sample_shape<R: Rng + ?Sized>(&self, rng: &mut R) -> GrainShape {
        let shape = match &self.family {
            GrainFamily::Fixed { shape } => shape.clone(),
            GrainFamily::Disk { radius } => return GrainShape::disk(radius.sample(rng)).expect("validated law"),
            GrainFamily::Rect { halfwidth, halfheight } => {
                let a = halfwidth.sample(rng);
                let b = halfheight.sample(rng);
                GrainShape::rect(a, b).expect("validated law")
            }
        };
        if self.rotate && !shape.is_disk() {
            shape.rotated(rng.random_range(0.0..2.0 * PI))
        } else {
            shape
        }
    }

    /// First and second moments of `(V₁, V₂)` of the typical grain and the
    /// mixed translative moment.
    pub fn moments(&self) -> GrainMoments {
        let (ev1, ev2, ev1sq, ev2sq, ev1v2, aligned_mixed) = match &self.family {
            GrainFamily::Fixed { shape } => {
                let iv = shape.intrinsic_volumes();
                let mixed = shape.minkowski_sum_area(shape) - 2.0 * iv.v2;
                (iv.v1, iv.v2, iv.v1 * iv.v1, iv.v2 * iv.v2, iv.v1 * iv.v2, mixed)
            }
            GrainFamily::Disk { radius: r } => {
                let (m1, m2, m3, m4) = (r.moment(1), r.moment(2), r.moment(3), r.moment(4));
                (PI * m1, PI * m2, PI * PI * m2, PI * PI * m4, PI * PI * m3, 2.0 * PI * m1 * m1)
            }
            GrainFamily::Rect { halfwidth: a, halfheight: b } => {
                let (a1, a2, b1, b2) = (a.moment(1), a.moment(2), b.moment(1), b.moment(2));
                (
                    2.0 * (a1 + b1),
                    4.0 * a1 * b1,
                    4.0 * (a2 + 2.0 * a1 * b1 + b2),
                    16.0 * a2 * b2,
                    8.0 * (a2 * b1 + a1 * b2),
                    8.0 * a1 * b1,
                )
            }
        };
        let mixed = if self.rotate { 2.0 * ev1 * ev1 / PI } else { aligned_mixed };
        GrainMoments { ev1, ev2, ev1sq, ev2sq, ev1v2, mixed: Some(mixed) }
    }

    /// `E f(Z₀)` over the shape parameters (rotation is not averaged).
    /// `breaks` lists kinks of `f` as a function of the disk radius or of
    /// the rectangle half-sides.
    pub fn expect_shape<F: FnMut(&GrainShape) -> f64>(&self, mut f: F, breaks: &[f64], tol: Tolerance) -> Result<f64> {
        match &self.family {
            GrainFamily::Fixed { shape } => Ok(f(shape)),
            GrainFamily::Disk { radius } => radius.expect(|r| f(&GrainShape::disk(r).expect("positive")), breaks, tol),
            GrainFamily::Rect { halfwidth, halfheight } => {
                let mut err = None;
                let v = halfwidth.expect(
                    |a| match halfheight.expect(|b| f(&GrainShape::rect(a, b).expect("positive")), breaks, tol) {
                        Ok(v) => v,
                        Err(e) => {
                            err = Some(e);
                            f64::NAN
                        }
                    },
                    breaks,
                    tol,
                )?;
                match err {
                    Some(e) => Err(e),
                    None => Ok(v),
                }
            }
        }
    }
}

/// Full description of a Boolean model observed in a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigRecord", into = "ConfigRecord")]
pub struct ModelConfig {
    pub gamma: f64,
    pub grains: GrainDistribution,
    pub window: Window,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigRecord {
    gamma: f64,
    grains: GrainDistribution,
    window: Window,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<ConfigRecord> for ModelConfig {
    type Error = Error;
    fn try_from(r: ConfigRecord) -> Result<Self> {
        ModelConfig::new(r.gamma, r.grains, r.window, r.seed)
    }
}

impl From<ModelConfig> for ConfigRecord {
    fn from(c: ModelConfig) -> Self {
        ConfigRecord { gamma: c.gamma, grains: c.grains, window: c.window, seed: c.seed }
    }
}

impl ModelConfig {
    pub fn new(gamma: f64, grains: GrainDistribution, window: Window, seed: u64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidConfig(format!("gamma must be finite and nonnegative, got {gamma}")));
        }
        Ok(Self { gamma, grains, window, seed })
    }

    /// Expected number of germs in `W ⊕ B(rmax)`.
    pub fn expected_germs(&self) -> f64 {
        self.gamma * self.window.dilated_area(self.grains.rmax)
    }

    pub fn with_window(&self, window: Window) -> Self {
        Self { window, ..self.clone() }
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(gamma, self.grains.clone(), self.window, self.seed)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// One realization: every grain that can hit the window.
#[derive(Debug, Clone, PartialEq)]
pub struct GermGrainSample {
    pub placed: Vec<PlacedGrain>,
    pub config: ModelConfig,
    pub replicate: u64,
}

/// Random stream of replicate `replicate` under master seed `seed`.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replicate);
    rng
}

/// Grains of one replicate.
pub fn sample_grains(config: &ModelConfig, replicate: u64) -> Vec<PlacedGrain> {
    let mut rng = replicate_rng(config.seed, replicate);
    let rmax = config.grains.rmax;
    let w = config.window;
    let n = poisson(&mut rng, config.expected_germs());
    let (lo, hi) = (w.lo() - Vec2::new(rmax, rmax), w.hi() + Vec2::new(rmax, rmax));
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let center = loop {
            let p = Vec2::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y));
            if w.distance_to(p) <= rmax {
                break p;
            }
        };
        out.push(PlacedGrain::new(center, config.grains.sample_shape(&mut rng)));
    }
    out
}

pub fn sample(config: &ModelConfig, replicate: u64) -> GermGrainSample {
    GermGrainSample { placed: sample_grains(config, replicate), config: config.clone(), replicate }
}

/// Test set for the capacity functional, placed at the window centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Probe {
    Point,
    Body(GrainShape),
}

impl Probe {
    fn circumradius(&self) -> f64 {
        match self {
            Probe::Point => 0.0,
            Probe::Body(s) => s.circumradius(),
        }
    }
}

/// `E V₂(Z₀ ⊕ C*)` for the probe `C`.
pub fn mean_dilated_area(grains: &GrainDistribution, probe: &Probe) -> f64 {
    let m = grains.moments();
    let Probe::Body(c) = probe else { return m.ev2 };
    let civ = c.intrinsic_volumes();
    let mixed = if grains.is_isotropic() {
        2.0 * m.ev1 * civ.v1 / PI
    } else {
        match grains.family() {
            GrainFamily::Fixed { shape } => shape.minkowski_sum_area(c) - shape.area() - civ.v2,
            GrainFamily::Rect { halfwidth, halfheight } => {
                let wx = c.support(Vec2::new(1.0, 0.0)) + c.support(Vec2::new(-1.0, 0.0));
                let wy = c.support(Vec2::new(0.0, 1.0)) + c.support(Vec2::new(0.0, -1.0));
                2.0 * (halfwidth.moment(1) * wy + halfheight.moment(1) * wx)
            }
            GrainFamily::Disk { .. } => unreachable!("disk laws are isotropic"),
        }
    };
    m.ev2 + civ.v2 + mixed
}

/// `P(Z ∩ C = ∅) = exp(−γ E V₂(Z₀ ⊕ C*))`.
pub fn theory_capacity(config: &ModelConfig, probe: &Probe) -> f64 {
    (-config.gamma * mean_dilated_area(&config.grains, probe)).exp()
}

/// Monte Carlo estimate of a probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub reps: u64,
}

impl ProportionEstimate {
    pub fn from_counts(hits: u64, reps: u64) -> Self {
        let p = hits as f64 / reps as f64;
        Self { estimate: p, standard_error: (p * (1.0 - p) / reps as f64).sqrt(), reps }
    }
}

/// Fraction of replicates in which no grain meets the probe placed at the
/// window centre.
pub fn empirical_capacity(config: &ModelConfig, probe: &Probe, reps: u64, threads: usize) -> Result<ProportionEstimate> {
    if reps == 0 {
        return Err(Error::Precondition("need at least one replicate".into()));
    }
    let center = config.window.center();
    let clearance = config.window.inner_distance(center) - probe.circumradius();
    if clearance < config.grains.rmax {
        return Err(Error::Precondition(format!(
            "probe must stay at least rmax = {} from the window boundary (clearance {clearance})",
            config.grains.rmax
        )));
    }
    let placed_probe = match probe {
        Probe::Point => None,
        Probe::Body(s) => Some(PlacedGrain::new(center, s.clone())),
    };
    let empty = map_indexed(reps, threads, |k| {
        let grains = sample_grains(config, k);
        !grains.iter().any(|g| hits(g, center, placed_probe.as_ref()))
    })?;
    Ok(ProportionEstimate::from_counts(empty.iter().filter(|&&e| e).count() as u64, reps))
}

fn hits(g: &PlacedGrain, center: Vec2, probe: Option<&PlacedGrain>) -> bool {
    match probe {
        None => g.contains(center),
        Some(p) => {
            let d = g.center.distance(p.center);
            if d >= g.circumradius() + p.circumradius() {
                return false;
            }
            if let (ShapeKind::Disk { radius: r1 }, ShapeKind::Disk { radius: r2 }) = (g.shape.kind(), p.shape.kind()) {
                return d <= r1 + r2;
            }
            intersect_convex(&[g.clone(), p.clone()], None, DEFAULT_CELL_CAP).map(|c| c.is_some()).unwrap_or(false)
        }
    }
}

const SAMPLE_FORMAT: &str = "# format=boolean-lab-sample v1";

/// Line-oriented text form: a versioned header echoing the configuration and
/// replicate, then one `x y {shape}` line per grain.
pub fn write_sample(s: &GermGrainSample) -> String {
    let mut out = String::new();
    out.push_str(SAMPLE_FORMAT);
    out.push('\n');
    out.push_str(&format!("# config={}\n", serde_json::to_string(&s.config).expect("config serializes")));
    out.push_str(&format!("# seed={}\n# replicate={}\n", s.config.seed, s.replicate));
    for g in &s.placed {
        let shape = serde_json::to_string(&g.shape).expect("shape serializes");
        out.push_str(&format!("{} {} {}\n", g.center.x, g.center.y, shape));
    }
    out
}

pub fn parse_sample(text: &str) -> Result<GermGrainSample> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(SAMPLE_FORMAT) {
        return Err(Error::Parse(format!("missing header line `{SAMPLE_FORMAT}`")));
    }
    let mut config = None;
    let mut replicate = None;
    let mut placed = Vec::new();
    for (no, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# config=") {
            config = Some(serde_json::from_str::<ModelConfig>(rest).map_err(|e| Error::Parse(format!("config: {e}")))?);
        } else if let Some(rest) = line.strip_prefix("# replicate=") {
            replicate = Some(rest.parse::<u64>().map_err(|e| Error::Parse(format!("replicate: {e}")))?);
        } else if line.starts_with('#') {
            continue;
        } else {
            let mut parts = line.splitn(3, ' ');
            let mut num = |what: &str| -> Result<f64> {
                parts
                    .next()
                    .ok_or_else(|| Error::Parse(format!("line {}: missing {what}", no + 2)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {what}: {e}", no + 2)))
            };
            let x = num("x")?;
            let y = num("y")?;
            let shape_text = parts.next().ok_or_else(|| Error::Parse(format!("line {}: missing shape", no + 2)))?;
            let shape: GrainShape =
                serde_json::from_str(shape_text).map_err(|e| Error::Parse(format!("line {}: shape: {e}", no + 2)))?;
            placed.push(PlacedGrain::new(Vec2::new(x, y), shape));
        }
    }
    let config = config.ok_or_else(|| Error::Parse("missing `# config=` header".into()))?;
    let replicate = replicate.ok_or_else(|| Error::Parse("missing `# replicate=` header".into()))?;
    Ok(GermGrainSample { placed, config, replicate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_config(gamma: f64, side: f64) -> ModelConfig {
        ModelConfig::new(gamma, GrainDistribution::disk(1.0).unwrap(), Window::centered(side, side).unwrap(), 7).unwrap()
    }

    #[test]
    fn sampling_is_deterministic_per_replicate() {
        let c = disk_config(0.5, 10.0);
        assert_eq!(sample_grains(&c, 3), sample_grains(&c, 3));
        assert_ne!(sample_grains(&c, 3), sample_grains(&c, 4));
        assert_ne!(sample_grains(&c, 3), sample_grains(&c.with_seed(8), 3));
    }

    #[test]
    fn germs_lie_in_the_dilated_window() {
        let c = disk_config(2.0, 5.0);
        for k in 0..20 {
            for g in sample_grains(&c, k) {
                assert!(c.window.distance_to(g.center) <= 1.0);
            }
        }
    }

    #[test]
    fn mean_grain_count() {
        let c = disk_config(0.3, 6.0);
        let n = 10_000u64;
        let counts: Vec<f64> = (0..n).map(|k| sample_grains(&c, k).len() as f64).collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let expected = c.expected_germs();
        assert!((mean - expected).abs() < 3.0 * (expected / n as f64).sqrt(), "{mean} vs {expected}");
    }

    #[test]
    fn sparse_process_is_mostly_empty() {
        let w = Window::centered(1.0, 1.0).unwrap();
        let target = 0.01;
        let gamma = target / w.dilated_area(1.0);
        let c = ModelConfig::new(gamma, GrainDistribution::disk(1.0).unwrap(), w, 1).unwrap();
        let n = 10_000u64;
        let empty = (0..n).filter(|&k| sample_grains(&c, k).is_empty()).count() as f64 / n as f64;
        let p = (-target).exp();
        assert!((empty - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12);
    }

    #[test]
    fn capacity_closed_forms() {
        let c = disk_config(0.1, 10.0);
        let probe = Probe::Body(GrainShape::disk(1.0).unwrap());
        assert!((theory_capacity(&c, &probe) - (-0.4 * PI).exp()).abs() < 1e-15);
        assert!((theory_capacity(&c, &probe) - 0.28465).abs() < 5e-5);
        let unit = GrainDistribution::fixed(GrainShape::rect(0.5, 0.5).unwrap(), false).unwrap();
        let c = ModelConfig::new(1.0, unit, Window::centered(10.0, 10.0).unwrap(), 0).unwrap();
        assert!((theory_capacity(&c, &Probe::Point) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn aligned_rectangle_capacity_matches_exact_sum() {
        let fam = GrainFamily::Rect { halfwidth: ParamLaw::constant(0.7), halfheight: ParamLaw::constant(0.2) };
        let law = GrainDistribution::new(fam, false).unwrap();
        let fixed = GrainDistribution::fixed(GrainShape::rect(0.7, 0.2).unwrap(), false).unwrap();
        let tri = GrainShape::polygon(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.2), Vec2::new(0.3, 0.9)]).unwrap();
        let probe = Probe::Body(tri);
        let a = mean_dilated_area(&law, &probe);
        let b = mean_dilated_area(&fixed, &probe);
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn probe_too_close_to_the_boundary_is_refused() {
        let c = disk_config(0.1, 3.0);
        let probe = Probe::Body(GrainShape::disk(1.0).unwrap());
        assert!(matches!(empirical_capacity(&c, &probe, 10, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn rmax_must_bound_the_circumradius() {
        let fam = GrainFamily::Disk { radius: ParamLaw::Uniform { lo: 0.5, hi: 1.5 } };
        assert!(GrainDistribution::with_rmax(fam.clone(), false, 1.0).is_err());
        assert!(GrainDistribution::with_rmax(fam, false, 2.0).is_ok());
    }

    #[test]
    fn sample_text_round_trip() {
        let fam = GrainFamily::Rect { halfwidth: ParamLaw::Uniform { lo: 0.2, hi: 0.6 }, halfheight: ParamLaw::constant(0.3) };
        let law = GrainDistribution::new(fam, true).unwrap();
        let c = ModelConfig::new(0.4, law, Window::centered(6.0, 4.0).unwrap(), 99).unwrap();
        let s = sample(&c, 5);
        let back = parse_sample(&write_sample(&s)).unwrap();
        assert_eq!(back, s);
        assert!(parse_sample("garbage").is_err());
    }

    #[test]
    fn config_json_schema() {
        let text = r#"{"gamma":0.5,"grains":{"family":{"kind":"disk","radius":{"law":"constant","value":1.0}}},
            "window":{"lo":[0,0],"hi":[64,64]},"seed":42}"#;
        let c: ModelConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.grains.rmax(), 1.0);
        assert!(serde_json::from_str::<ModelConfig>(&text.replace("0.5", "-1")).is_err());
    }
}
