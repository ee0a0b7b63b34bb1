//! Experiment sweeps and their CSV output.

use std::io::Write;
use std::path::Path;

use serde::{Serialize, Serializer};

use crate::analytic::{
    closed_form_expected_tests, design_for_estimate, expected_total_tests, misspecification_inflation, optimize, Form,
    PoolCountRule,
};
use crate::error::{Error, Result};
use crate::seed::axis_seed;
use crate::simulate::run_replications;
use crate::types::{DesignParams, ProblemInstance, Scheme};

/// Parses `start:stop:step` (stop included when it lands on the grid) or a
/// single value.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::InvalidParams(format!("range `{spec}`: {why}"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad("not a number")))
        .collect::<Result<_>>()?;
    let (start, stop, step) = match parts[..] {
        [v] => (v, v, 1.0),
        [start, stop, step] => (start, stop, step),
        _ => return Err(bad("expected start:stop:step")),
    };
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() {
        return Err(bad("step must be positive"));
    }
    if stop < start {
        return Err(bad("empty range"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // Snap to 12 decimals so 0.01 + 5 * 0.01 prints as 0.06.
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Like [`parse_range`] but every value must be a whole number.
pub fn parse_count_range(spec: &str) -> Result<Vec<u64>> {
    parse_range(spec)?
        .into_iter()
        .map(|v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as u64)
            } else {
                Err(Error::InvalidParams(format!(
                    "range `{spec}` has non-integer value {v}"
                )))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelAxis {
    FixedK(Vec<u64>),
    Binomial(Vec<f64>),
}

impl ModelAxis {
    fn len(&self) -> usize {
        match self {
            ModelAxis::FixedK(v) => v.len(),
            ModelAxis::Binomial(v) => v.len(),
        }
    }

    fn instance(&self, n: u64, j: usize) -> Result<ProblemInstance> {
        match self {
            ModelAxis::FixedK(ks) => ProblemInstance::fixed_k(n, ks[j]),
            ModelAxis::Binomial(ps) => ProblemInstance::binomial(n, ps[j]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub schemes: Vec<Scheme>,
    pub n: u64,
    pub axis: ModelAxis,
    pub reps: usize,
    pub seed: u64,
    pub rule: PoolCountRule,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::InvalidParams("no schemes selected".into()));
        }
        if self.axis.len() == 0 {
            return Err(Error::InvalidParams("empty model axis".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidParams("reps must be at least 1".into()));
        }
        Ok(())
    }
}

fn display_number<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub n: u64,
    pub model: &'static str,
    #[serde(serialize_with = "display_number")]
    pub k_or_p: f64,
    pub m: u64,
    #[serde(serialize_with = "display_number")]
    pub secondary: f64,
    pub reps: usize,
    pub mean_total: f64,
    pub stderr_total: f64,
    /// Paper-approximation expected total at the realized `(m, secondary)`.
    pub theory_total: f64,
    pub theory_closed_form: f64,
    pub seed: u64,
    #[serde(skip)]
    pub identification_failures: usize,
}

impl SweepRow {
    pub fn instance(&self) -> Result<ProblemInstance> {
        match self.model {
            "fixedk" => ProblemInstance::fixed_k(self.n, self.k_or_p as u64),
            _ => ProblemInstance::binomial(self.n, self.k_or_p),
        }
    }

    pub fn params(&self) -> DesignParams {
        DesignParams::new(self.scheme, self.m as f64, self.secondary)
    }
}

/// Optimizes, integer-refines and simulates every (axis point, scheme).
///
/// Designs only see `kbar`, so binomial rows are designed from `n * p`.
/// Replication `r` of axis point `j` draws from
/// `replication_seed(axis_seed(seed, j), r)`.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.axis.len() * spec.schemes.len());
    for j in 0..spec.axis.len() {
        let inst = spec.axis.instance(spec.n, j)?;
        for &scheme in &spec.schemes {
            rows.push(sweep_point(&inst, scheme, spec, axis_seed(spec.seed, j as u64))?);
        }
    }
    Ok(rows)
}

fn sweep_point(inst: &ProblemInstance, scheme: Scheme, spec: &SweepSpec, seed: u64) -> Result<SweepRow> {
    let design = optimize(inst, scheme, spec.rule)?.realized;
    let theory = expected_total_tests(inst, &design, Form::PaperApprox)?;
    let summary = run_replications(inst, &design, spec.reps, seed)?;
    let (model, k_or_p) = match inst.model() {
        crate::types::InfectionModel::FixedK { k } => ("fixedk", k as f64),
        crate::types::InfectionModel::Binomial { p } => ("binomial", p),
    };
    Ok(SweepRow {
        scheme,
        n: inst.n(),
        model,
        k_or_p,
        m: design.m as u64,
        secondary: design.secondary,
        reps: spec.reps,
        mean_total: summary.mean_total,
        stderr_total: summary.stderr_total,
        theory_total: theory.expected_total_tests,
        theory_closed_form: closed_form_expected_tests(inst, scheme)?,
        seed: spec.seed,
        identification_failures: summary.identification_failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessRow {
    #[serde(serialize_with = "display_number")]
    pub k_est: f64,
    pub inflation_theoretical: f64,
    pub inflation_simulated: f64,
}

/// Inflation of expected tests when designing for each `k_est` instead of
/// the true `k`. Simulated inflation compares replication means of the two
/// designs under the same seed.
pub fn run_robustness(
    inst_true: &ProblemInstance,
    scheme: Scheme,
    k_estimates: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<RobustnessRow>> {
    if k_estimates.is_empty() {
        return Err(Error::InvalidParams("empty k estimate range".into()));
    }
    let fit = optimize(inst_true, scheme, PoolCountRule::ExactStationary)?.realized;
    k_estimates
        .iter()
        .enumerate()
        .map(|(j, &k_est)| {
            let stream = axis_seed(seed, j as u64);
            let misfit = design_for_estimate(inst_true.n(), scheme, k_est)?.realized;
            let misfit_mean = run_replications(inst_true, &misfit, reps, stream)?.mean_total;
            let fit_mean = run_replications(inst_true, &fit, reps, stream)?.mean_total;
            Ok(RobustnessRow {
                k_est,
                inflation_theoretical: misspecification_inflation(inst_true, scheme, k_est)?,
                inflation_simulated: misfit_mean / fit_mean,
            })
        })
        .collect()
}

/// Writes rows as CSV (header, comma separated, LF endings). The file is
/// first written next to `path` and renamed into place, so a failure never
/// leaves partial output.
pub fn write_csv_atomic<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(tmp.as_file_mut());
        for row in rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
    }
    tmp.as_file_mut().flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// CSV text of `rows`, as [`write_csv_atomic`] would write it.
pub fn to_csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
