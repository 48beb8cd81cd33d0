use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use saddle_h2::resource_allocation::table1_report;
use saddle_h2::simulate::{estimate_variance, simulate_trajectory};
use saddle_h2::{Error, H2Report, ProblemFile, Result, SimulationConfig, SimulationEstimate};

use crate::args::{AnalyzeArgs, Param, Scale, SimulateArgs, SweepArgs, Table1Args};
use crate::target::{self, Target};

pub const SWEEP_HEADER: [&str; 6] = ["index", "param", "value", "h2sq_numeric", "h2sq_formula", "h2sq_gap"];
pub const TABLE1_HEADER: [&str; 6] = ["formulation", "rho", "h2sq_numeric", "h2sq_formula", "formula_exact", "note"];

/// What a command produced: the primary document, extra files, and
/// human-readable lines for stderr.
pub struct Output {
    pub primary: String,
    pub files: Vec<(PathBuf, String)>,
    pub notes: Vec<String>,
}

impl Output {
    fn doc(primary: String) -> Self {
        Self { primary, files: Vec::new(), notes: Vec::new() }
    }
}

fn problem(value: Option<&Value>) -> Result<Option<ProblemFile>> {
    value.map(ProblemFile::from_value).transpose()
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn analyze(a: &AnalyzeArgs, value: Option<&Value>) -> Result<Output> {
    let t = target::resolve(&a.problem, &a.variant, problem(value)?.as_ref())?;
    Ok(Output::doc(json(&t.report()?)))
}

/// `start:stop:points`, evenly spaced on a linear or logarithmic scale.
pub fn parse_grid(spec: &str, scale: Scale) -> Result<Vec<f64>> {
    let bad = || Error::invalid(format!("grid `{spec}` is not start:stop:points"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, k] = parts[..] else { return Err(bad()) };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let k: usize = k.trim().parse().map_err(|_| bad())?;
    if k == 0 {
        return Err(Error::invalid("grid is empty"));
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(bad());
    }
    if scale == Scale::Log && !(a > 0.0 && b > 0.0) {
        return Err(Error::invalid("log grid needs positive endpoints"));
    }
    let frac = |i: usize| if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
    Ok((0..k)
        .map(|i| match (i, scale) {
            (0, _) => a,
            (i, _) if i == k - 1 => b,
            (i, Scale::Lin) => a + (b - a) * frac(i),
            (i, Scale::Log) => 10f64.powf(a.log10() + (b.log10() - a.log10()) * frac(i)),
        })
        .collect())
}

fn trend_note(name: &str, values: &[f64]) -> String {
    let up = values.windows(2).all(|w| w[1] >= w[0]);
    let down = values.windows(2).all(|w| w[1] <= w[0]);
    let shape = match (up, down) {
        (true, true) => "constant",
        (true, false) => "nondecreasing",
        (false, true) => "nonincreasing",
        (false, false) => "non-monotone",
    };
    let (imax, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    let at = if imax == 0 || imax + 1 == values.len() { "endpoint" } else { "interior" };
    format!("trend: {name} {shape}; maximum at index {imax} ({at})")
}

pub fn sweep(a: &SweepArgs, value: Option<&Value>) -> Result<Output> {
    let grid = parse_grid(&a.grid, a.scale)?;
    let mut variant = a.variant.clone();
    if a.param == Param::Eps {
        variant.eps.get_or_insert(grid[0].max(f64::MIN_POSITIVE));
    }
    let base = target::resolve(&a.problem, &variant, problem(value)?.as_ref())?;
    let cells: Vec<Target> = grid.iter().map(|&v| base.with_param(a.param, v)).collect::<Result<_>>()?;
    let reference = base.baseline(a.param)?.report()?.h2sq_numeric;
    let reports: Vec<H2Report> = cells.par_iter().map(Target::report).collect::<Vec<_>>().into_iter().collect::<Result<_>>()?;

    let param = match a.param {
        Param::Rho => "rho",
        Param::Eps => "eps",
    };
    let rows: Vec<Vec<String>> = reports
        .iter()
        .zip(&grid)
        .enumerate()
        .map(|(i, (r, &v))| {
            vec![i.to_string(), param.into(), num(v), num(r.h2sq_numeric), opt(r.h2sq_formula), num(reference - r.h2sq_numeric)]
        })
        .collect();
    let numeric: Vec<f64> = reports.iter().map(|r| r.h2sq_numeric).collect();
    let gap: Vec<f64> = numeric.iter().map(|v| reference - v).collect();
    Ok(Output {
        primary: csv_bytes(&SWEEP_HEADER, &rows),
        files: Vec::new(),
        notes: vec![trend_note("h2sq_numeric", &numeric), trend_note("h2sq_gap", &gap)],
    })
}

#[derive(Serialize)]
struct Agreement {
    h2sq_gramian: f64,
    difference: f64,
    /// `difference / standard_error`; `null` for a single trial.
    standard_errors: f64,
    within_three_standard_errors: bool,
}

#[derive(Serialize)]
struct SimulationReport {
    variant: String,
    config: SimulationConfig,
    estimate: SimulationEstimate,
    agreement: Agreement,
}

pub fn simulate(a: &SimulateArgs, value: Option<&Value>) -> Result<Output> {
    let t = target::resolve(&a.problem, &a.variant, problem(value)?.as_ref())?;
    let sys = t.build()?;
    let cfg = SimulationConfig {
        dt: a.sim.dt,
        horizon: a.sim.horizon,
        burn_in: a.sim.burn_in,
        trials: a.sim.trials,
        seed: a.sim.seed,
    };
    let estimate = estimate_variance(&sys, &cfg)?;
    let exact = sys.h2_norm_squared()?;
    let difference = estimate.variance_estimate - exact;
    let agreement = Agreement {
        h2sq_gramian: exact,
        difference,
        standard_errors: difference / estimate.standard_error,
        within_three_standard_errors: difference.abs() <= 3.0 * estimate.standard_error,
    };
    let variant = match &t {
        Target::Qp { spec, .. } => spec.name().to_string(),
        Target::Ra { formulation, .. } => formulation.name().to_string(),
    };
    let mut out = Output::doc(json(&SimulationReport { variant, config: cfg, estimate, agreement }));
    if let Some(path) = &a.trajectory {
        let traj = simulate_trajectory(&sys, &cfg, a.trial, a.stride)?;
        let header: Vec<&str> = std::iter::once("t")
            .chain(sys.state_labels.iter().map(String::as_str))
            .chain(sys.output_labels.iter().map(String::as_str))
            .collect();
        let rows: Vec<Vec<String>> = (0..traj.t.len())
            .map(|k| {
                std::iter::once(num(traj.t[k]))
                    .chain(traj.states[k].iter().map(|&v| num(v)))
                    .chain(traj.z[k].iter().map(|&v| num(v)))
                    .collect()
            })
            .collect();
        out.files.push((path.clone(), csv_bytes(&header, &rows)));
    }
    Ok(out)
}

pub fn parse_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::invalid(format!("`{s}` in rho grid is not a number"))))
        .collect()
}

pub fn table1(a: &Table1Args, value: Option<&Value>) -> Result<Output> {
    let ra = target::ra_problem(&a.problem, problem(value)?.as_ref())?;
    let report = table1_report(&ra, &parse_list(&a.rho_grid)?)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.formulation.name().into(),
                num(r.rho),
                opt(r.h2sq_numeric),
                opt(r.h2sq_formula),
                r.formula_applicable.to_string(),
                r.note.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let mut notes: Vec<String> = report.pretty().lines().map(String::from).collect();
    for t in &report.trends {
        notes.push(format!(
            "trend: {} nonincreasing={} nondecreasing={} increasing_at_end={}",
            t.formulation.name(),
            t.nonincreasing,
            t.nondecreasing,
            t.increasing_at_end
        ));
    }
    Ok(Output { primary: csv_bytes(&TABLE1_HEADER, &rows), files: Vec::new(), notes })
}
