//! One function per subcommand. Each computes everything first and only
//! then hands its files to [`Staged`].

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use boolean_lab::covariance::{sigma_matrix_with, CovariogramFunctions};
use boolean_lab::limit::{
    clt_from_batches, derive_seed, multivariate_from_batch, scale_batches, Functional, NormalCalibration,
};
use boolean_lab::moments::{intensity_report, miles_densities_2d, simulate_densities, volume_fraction};
use boolean_lab::parallel::available_threads;
use boolean_lab::process::{empirical_capacity, parse_sample, sample, theory_capacity, write_sample};
use boolean_lab::union::{arrangement_measure, half_open_measure, render_pgm};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{comment_header, json_summary, num, Csv, Staged};

pub struct Run {
    pub config: ExperimentConfig,
    pub threads: usize,
    started: Instant,
}

impl Run {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let threads = config.threads.unwrap_or_else(available_threads);
        if threads == 0 {
            bail!("thread count must be at least 1");
        }
        Ok(Self { config, threads, started: Instant::now() })
    }

    fn seconds(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }

    fn summary<T: serde::Serialize>(&self, task: &str, result: &T) -> Result<Vec<u8>> {
        json_summary(task, &self.config, self.seconds(), result)
    }
}

pub fn simulate(run: &Run) -> Result<Staged> {
    let s = sample(&run.config.model, run.config.replicate);
    let mut out = Staged::default();
    out.add("sample.txt", write_sample(&s).into_bytes());
    Ok(out)
}

pub fn measure(run: &Run, inputs: &[PathBuf]) -> Result<Staged> {
    if inputs.is_empty() {
        bail!("measure needs at least one --input sample file");
    }
    let mut csv = Csv::new(
        "measure",
        &run.config,
        &["file", "replicate", "grains", "v0", "v1", "v2", "v0_half_open", "v1_half_open", "v2_half_open"],
    );
    for path in inputs {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let s = parse_sample(&text).with_context(|| format!("malformed sample {}", path.display()))?;
        let w = s.config.window;
        let closed = arrangement_measure(&s.placed, &w);
        let open = half_open_measure(&s.placed, &w);
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if name.contains(',') || name.contains('"') {
            bail!("sample file name {name:?} cannot be written as a bare CSV field");
        }
        let mut row = vec![name, s.replicate.to_string(), s.placed.len().to_string()];
        row.extend(closed.to_array().iter().chain(open.to_array().iter()).map(|&x| num(x)));
        csv.row(&row);
    }
    let mut out = Staged::default();
    out.add("measure.csv", csv.into_bytes());
    Ok(out)
}

pub fn predict(run: &Run) -> Result<Staged> {
    let m = &run.config.model;
    let moments = m.grains.moments();
    let d = miles_densities_2d(m.gamma, &moments, m.grains.is_isotropic())?;
    let mut csv = Csv::new("predict", &run.config, &["gamma", "ev1", "ev2", "d0", "d1", "d2"]);
    csv.row(&[m.gamma, moments.ev1, moments.ev2, d.d0, d.d1, d.d2].map(num));
    let mut out = Staged::default();
    out.add("predict.csv", csv.into_bytes());
    out.add("predict.json", run.summary("predict", &json!({ "moments": moments, "densities": d }))?);
    Ok(out)
}

pub fn estimate(run: &Run) -> Result<Staged> {
    let c = &run.config;
    let dens = simulate_densities(&c.model, c.reps, run.threads)?;
    let gamma = intensity_report(&dens)?;
    let columns = [
        "d0", "d1", "d2", "se_d0", "se_d1", "se_d2", "gamma_hat", "ev1_hat", "ev2_hat", "se_gamma", "gamma_lower",
        "gamma_upper",
    ];
    let mut csv = Csv::new("estimate", c, &columns);
    let d = dens.densities;
    let s = dens.standard_errors;
    let e = gamma.estimate;
    csv.row(
        &[d.d0, d.d1, d.d2, s.d0, s.d1, s.d2, e.gamma, e.ev1, e.ev2, gamma.standard_error, gamma.lower, gamma.upper]
            .map(num),
    );
    let mut out = Staged::default();
    out.add("estimate.csv", csv.into_bytes());
    out.add("estimate.json", run.summary("estimate", &json!({ "densities": dens, "intensity": gamma }))?);
    Ok(out)
}

pub fn covariance(run: &Run) -> Result<Staged> {
    let m = &run.config.model;
    let f = match run.config.quadrature {
        Some(q) => CovariogramFunctions::with_tolerance(m.gamma, &m.grains, q.tolerance())?,
        None => CovariogramFunctions::new(m.gamma, &m.grains)?,
    };
    let report = sigma_matrix_with(f)?;
    let mut csv = Csv::new("covariance", &run.config, &["i", "j", "sigma", "rho", "rho_error"]);
    for i in 0..3 {
        for j in 0..3 {
            csv.row(&[
                i.to_string(),
                j.to_string(),
                num(report.sigma.get(i, j)),
                num(report.rho.values[i][j]),
                num(report.rho.errors[i][j]),
            ]);
        }
    }
    let mut out = Staged::default();
    out.add("covariance.csv", csv.into_bytes());
    out.add("covariance.json", run.summary("covariance", &report)?);
    Ok(out)
}

pub fn clt(run: &Run) -> Result<Staged> {
    let c = &run.config;
    if c.functionals.is_empty() {
        bail!("clt needs at least one functional");
    }
    let batches = scale_batches(&c.model, &c.scales, c.reps, run.threads)?;
    let calibration =
        NormalCalibration::simulate(c.reps, c.calibration_batches, derive_seed(c.model.seed, 1 << 32), run.threads)?;
    let threshold = calibration.threshold(0.99);
    let mut csv =
        Csv::new("clt", c, &["a0", "a1", "a2", "r", "n", "mean", "var_per_area", "w1", "ks", "slope", "spearman"]);
    let mut reports = Vec::new();
    for &a in &c.functionals {
        let rep = clt_from_batches(&batches, Functional(a))?;
        for s in &rep.scales {
            let mut row: Vec<String> = a.iter().map(|&x| num(x)).collect();
            row.extend([num(s.scale), s.reps.to_string(), num(s.mean), num(s.variance_per_area)]);
            row.extend([num(s.w1), num(s.ks), num(rep.slope), num(rep.spearman)]);
            csv.row(&row);
        }
        reports.push(rep);
    }
    let multivariate = if c.model.grains.is_isotropic() {
        let sigma = sigma_matrix_with(CovariogramFunctions::new(c.model.gamma, &c.model.grains)?)?.sigma;
        let largest = batches.iter().max_by(|a, b| a.scale.total_cmp(&b.scale)).context("no scales given")?;
        Some(multivariate_from_batch(largest, &sigma)?)
    } else {
        None
    };
    let summary = json!({ "threshold_99": threshold, "reports": reports, "multivariate": multivariate });
    let mut out = Staged::default();
    out.add("clt.csv", csv.into_bytes());
    out.add("clt.json", run.summary("clt", &summary)?);
    Ok(out)
}

pub fn capacity(run: &Run) -> Result<Staged> {
    let c = &run.config;
    let theory = theory_capacity(&c.model, &c.probe);
    let mc = empirical_capacity(&c.model, &c.probe, c.reps as u64, run.threads)?;
    let mut csv = Csv::new("capacity", c, &["theory", "estimate", "standard_error", "reps"]);
    csv.row(&[num(theory), num(mc.estimate), num(mc.standard_error), mc.reps.to_string()]);
    let mut out = Staged::default();
    out.add("capacity.csv", csv.into_bytes());
    out.add("capacity.json", run.summary("capacity", &json!({ "theory": theory, "empirical": mc }))?);
    Ok(out)
}

pub fn render(run: &Run) -> Result<Staged> {
    let c = &run.config;
    let s = sample(&c.model, c.replicate);
    let pgm = render_pgm(&s.placed, &c.model.window, c.resolution)?;
    // comments go right after the magic number
    let mut bytes = b"P5\n".to_vec();
    bytes.extend(comment_header("render", c).into_bytes());
    bytes.extend_from_slice(&pgm[3..]);
    let mut out = Staged::default();
    out.add("render.pgm", bytes);
    out.add(
        "render.json",
        run.summary(
            "render",
            &json!({ "grains": s.placed.len(), "area_fraction_expected": volume_fraction(c.model.gamma, c.model.grains.moments().ev2) }),
        )?,
    );
    Ok(out)
}
