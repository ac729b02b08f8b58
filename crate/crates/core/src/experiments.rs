//! Named experiments that turn a scenario into CSV/JSON artifacts.
//!
//! Every file is written to a temporary file in the output directory and
//! renamed into place, and `manifest.json` lists all of them.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::detection_sim::empirical_pd;
use crate::error::{Error, Result};
use crate::model::{beampattern, detection_probability, sample_covariance, BeamformingMatrix};
use crate::optimizer::{alternating_solve, IterationTrace, SolveReport};
use crate::scenario::{Scenario, SweepSpec, ASSUMED_KEYS};
use crate::units::{linear_to_db, mw_to_dbm};

/// Powers below this (mW) are written as this value so the dB columns stay
/// finite.
pub const POWER_FLOOR_MW: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Solve,
    ConvergenceTrace,
    Beampattern,
    PowerSweep,
    DetectionRoc,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Solve,
        Experiment::ConvergenceTrace,
        Experiment::Beampattern,
        Experiment::PowerSweep,
        Experiment::DetectionRoc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::ConvergenceTrace => "convergence-trace",
            Experiment::Beampattern => "beampattern",
            Experiment::PowerSweep => "power-sweep",
            Experiment::DetectionRoc => "detection-roc",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub experiment: Experiment,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Assumption {
    pub key: &'static str,
    pub value: String,
    pub note: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub scenario_hash: String,
    pub version: String,
    pub timestamp: String,
    pub seed: u64,
    pub files: Vec<String>,
    pub assumptions: Vec<Assumption>,
}

fn assumptions(s: &Scenario) -> Vec<Assumption> {
    let table = toml::Table::try_from(s).expect("scenario serializes to a table");
    ASSUMED_KEYS
        .iter()
        .map(|&key| Assumption {
            key,
            value: table[key].to_string(),
            note: "not fixed by the reference setup; chosen default",
        })
        .collect()
}

/// Write `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Beampattern sample in mW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeampatternRow {
    pub theta_deg: f64,
    pub overall: f64,
    pub comm: f64,
    pub tag: f64,
    pub probe: f64,
}

#[derive(Serialize)]
struct BeampatternCsv {
    theta_deg: f64,
    overall_db: f64,
    comm_db: f64,
    tag_db: f64,
    probe_db: f64,
}

fn power_db(mw: f64) -> f64 {
    mw_to_dbm(mw.max(POWER_FLOOR_MW))
}

/// Angles from −90° to 90° in steps of `step_deg`.
pub fn angle_grid(step_deg: f64) -> Vec<f64> {
    let count = (180.0 / step_deg + 1e-9).floor() as usize + 1;
    (0..count).map(|i| -90.0 + step_deg * i as f64).collect()
}

/// Overall pattern from `W Wᴴ` and the per-part patterns of `w_u`, `w_t`
/// and `W_s` at each angle.
pub fn emit_beampattern(w: &BeamformingMatrix, thetas_deg: &[f64]) -> Result<Vec<BeampatternRow>> {
    let rad: Vec<f64> = thetas_deg.iter().map(|d| d.to_radians()).collect();
    let overall = beampattern(&sample_covariance(w), &rad)?;
    let n = w.n_t();
    let part = |cols: std::ops::Range<usize>| -> Result<Vec<f64>> {
        let mut sub = BeamformingMatrix::zeros(n);
        for c in cols {
            sub.column_mut(c).copy_from(&w.column(c));
        }
        beampattern(&sample_covariance(&sub), &rad)
    };
    let comm = part(BeamformingMatrix::UE..BeamformingMatrix::UE + 1)?;
    let tag = part(BeamformingMatrix::TAG..BeamformingMatrix::TAG + 1)?;
    let probe = part(BeamformingMatrix::PROBE0..w.n_cols())?;
    Ok((0..thetas_deg.len())
        .map(|i| BeampatternRow {
            theta_deg: thetas_deg[i],
            overall: overall[i],
            comm: comm[i],
            tag: tag[i],
            probe: probe[i],
        })
        .collect())
}

fn beampattern_csv(rows: &[BeampatternRow]) -> Result<Vec<u8>> {
    let out: Vec<_> = rows
        .iter()
        .map(|r| BeampatternCsv {
            theta_deg: r.theta_deg,
            overall_db: power_db(r.overall),
            comm_db: power_db(r.comm),
            tag_db: power_db(r.tag),
            probe_db: power_db(r.probe),
        })
        .collect();
    csv_bytes(&out)
}

#[derive(Serialize)]
struct TraceCsv {
    iteration: usize,
    y: f64,
    #[serde(rename = "F")]
    f: f64,
    rate: f64,
    gamma_t: f64,
    gamma_ap: f64,
    power: f64,
}

fn trace_csv(trace: &IterationTrace) -> Result<Vec<u8>> {
    let rows: Vec<_> = trace
        .records
        .iter()
        .map(|r| TraceCsv {
            iteration: r.iteration,
            y: r.y,
            f: r.objective,
            rate: r.rate,
            gamma_t: r.gamma_t,
            gamma_ap: r.gamma_ap,
            power: r.power,
        })
        .collect();
    csv_bytes(&rows)
}

#[derive(Serialize)]
struct ScaTraceCsv {
    outer: usize,
    iteration: usize,
    y: f64,
    #[serde(rename = "F")]
    f: f64,
    rate: f64,
    gamma_t: f64,
    gamma_ap: f64,
    power: f64,
    solver_iterations: usize,
    delta: Option<f64>,
}

fn sca_trace_csv(traces: &[IterationTrace]) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for (k, t) in traces.iter().enumerate() {
        for r in &t.records {
            rows.push(ScaTraceCsv {
                outer: k + 1,
                iteration: r.iteration,
                y: r.y,
                f: r.objective,
                rate: r.rate,
                gamma_t: r.gamma_t,
                gamma_ap: r.gamma_ap,
                power: r.power,
                solver_iterations: r.inner_iterations,
                delta: r.delta,
            });
        }
    }
    csv_bytes(&rows)
}

#[derive(Serialize)]
struct SolutionFile<'a> {
    scenario_hash: String,
    gamma_u_db: f64,
    gamma_t_db: f64,
    gamma_ap_db: f64,
    power_dbm: f64,
    #[serde(flatten)]
    report: &'a SolveReport,
}

fn solution_json(s: &Scenario, report: &SolveReport) -> Result<Vec<u8>> {
    json_bytes(&SolutionFile {
        scenario_hash: s.hash(),
        gamma_u_db: linear_to_db(report.gamma_u),
        gamma_t_db: linear_to_db(report.gamma_t),
        gamma_ap_db: linear_to_db(report.gamma_ap),
        power_dbm: power_db(report.power),
        report,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub status: &'static str,
    pub rate: Option<f64>,
    pub gamma_u: Option<f64>,
    pub gamma_t: Option<f64>,
    pub gamma_ap: Option<f64>,
    pub p_d: Option<f64>,
    pub power: Option<f64>,
    pub outer_iterations: Option<usize>,
}

/// Solve at every sweep value in parallel; rows come back in sweep order.
/// A failing point is kept as a row with its error kind as status.
pub fn power_sweep(s: &Scenario, sweep: &SweepSpec) -> (Vec<SweepRow>, Option<Error>) {
    let results: Vec<(f64, Result<SolveReport>)> = sweep
        .values
        .par_iter()
        .map(|&v| {
            let r = s.with_override(&sweep.key, v).and_then(|sv| {
                let (cfg, ch) = sv.build()?;
                alternating_solve(&sv.stopping_rule(), &ch, &cfg).map(|(_, _, rep)| rep)
            });
            (v, r)
        })
        .collect();
    let mut first_err = None;
    let rows = results
        .into_iter()
        .map(|(value, r)| match r {
            Ok(rep) => SweepRow {
                value,
                status: if rep.converged { "converged" } else { "max-iterations" },
                rate: Some(rep.rate),
                gamma_u: Some(rep.gamma_u),
                gamma_t: Some(rep.gamma_t),
                gamma_ap: Some(rep.gamma_ap),
                p_d: Some(rep.detection_probability),
                power: Some(rep.power),
                outer_iterations: Some(rep.outer_iterations),
            },
            Err(e) => {
                let status = e.kind();
                first_err.get_or_insert(e);
                SweepRow {
                    value,
                    status,
                    rate: None,
                    gamma_u: None,
                    gamma_t: None,
                    gamma_ap: None,
                    p_d: None,
                    power: None,
                    outer_iterations: None,
                }
            }
        })
        .collect();
    (rows, first_err)
}

fn sweep_csv(key: &str, rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w =
        csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).has_headers(false).from_writer(Vec::new());
    w.write_record([key, "status", "rate", "gamma_u", "gamma_t", "gamma_ap", "p_d", "power", "outer_iterations"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

#[derive(Debug, Clone, Serialize)]
pub struct RocRow {
    pub p_f: f64,
    pub p_d_analytic: f64,
    pub p_d_empirical: f64,
    pub half_width: f64,
    pub false_alarm: f64,
    pub false_alarm_half_width: f64,
    pub eta: f64,
}

pub fn detection_roc(s: &Scenario, w: &BeamformingMatrix, gamma_ap: f64, seed: u64) -> Result<Vec<RocRow>> {
    let (cfg, ch) = s.build()?;
    s.roc_p_f
        .iter()
        .map(|&p_f| {
            let est = empirical_pd(w, &ch, &cfg, p_f, s.detection_trials, seed)?;
            Ok(RocRow {
                p_f,
                p_d_analytic: detection_probability(gamma_ap, p_f)?,
                p_d_empirical: est.p_d,
                half_width: est.half_width,
                false_alarm: est.false_alarm,
                false_alarm_half_width: est.false_alarm_half_width,
                eta: est.eta,
            })
        })
        .collect()
}

/// Run one experiment and write its artifacts plus `manifest.json`.
///
/// A sweep with failing points still writes every file; the first failure
/// is returned afterwards.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunManifest> {
    let mut s = scenario.clone();
    if let Some(seed) = opts.seed {
        s.seed = seed;
    }
    s.validate()?;
    std::fs::create_dir_all(&opts.out_dir)?;
    let dir = opts.out_dir.as_path();
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut deferred = None;

    if opts.sweep.is_some() && opts.experiment != Experiment::PowerSweep {
        return Err(Error::Parse(format!("--sweep is only accepted by {}", Experiment::PowerSweep)));
    }

    match opts.experiment {
        Experiment::PowerSweep => {
            let sweep = opts
                .sweep
                .clone()
                .unwrap_or_else(|| SweepSpec { key: "p_t_dbm".into(), values: s.p_t_sweep_dbm.clone() });
            s.with_override(&sweep.key, sweep.values.first().copied().unwrap_or(s.p_t_dbm))?;
            let (rows, err) = power_sweep(&s, &sweep);
            files.push(("sweep.csv".into(), sweep_csv(&sweep.key, &rows)?));
            deferred = err;
        }
        exp => {
            let (cfg, ch) = s.build()?;
            let (w, trace, report) = alternating_solve(&s.stopping_rule(), &ch, &cfg)?;
            files.push(("solution.json".into(), solution_json(&s, &report)?));
            match exp {
                Experiment::Solve => {
                    files.push(("trace.csv".into(), trace_csv(&trace)?));
                }
                Experiment::ConvergenceTrace => {
                    files.push(("trace.csv".into(), trace_csv(&trace)?));
                    files.push(("sca_trace.csv".into(), sca_trace_csv(&report.inner_traces)?));
                }
                Experiment::Beampattern => {
                    let rows = emit_beampattern(&w, &angle_grid(s.beampattern_step_deg))?;
                    files.push(("beampattern.csv".into(), beampattern_csv(&rows)?));
                }
                Experiment::DetectionRoc => {
                    let rows = detection_roc(&s, &w, report.gamma_ap, s.seed)?;
                    files.push(("roc.csv".into(), csv_bytes(&rows)?));
                }
                Experiment::PowerSweep => unreachable!(),
            }
        }
    }

    for (name, bytes) in &files {
        write_atomic(dir, name, bytes)?;
    }
    let mut names: Vec<String> = files.into_iter().map(|(n, _)| n).collect();
    names.push("manifest.json".into());
    let manifest = RunManifest {
        experiment: opts.experiment.name().into(),
        scenario_hash: s.hash(),
        version: env!("CARGO_PKG_VERSION").into(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        seed: s.seed,
        files: names,
        assumptions: assumptions(&s),
    };
    write_atomic(dir, "manifest.json", &json_bytes(&manifest)?)?;
    match deferred {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}
