use crate::config::{Command, ConfigError, RunConfig};
use serde_json::{json, Value};
use spinrs::dynamics::{
    compare_trajectories, drift_report, integrate, project_trajectory, Method, Termination, Trajectory,
};
use spinrs::phasespace::{gauge_invariant_observables, mixed_invariant, InvariantLedger, Letter, ReducedState};
use spinrs::poisson::{
    center_check, jacobi_residual_fd, jacobi_residual_poly, linearization_ladder, trace_power_poly, BracketTable,
    FnObservable, Poly,
};
use spinrs::sample::{random_borel, random_strict_upper, Rng64};
use spinrs::sutherland::{lax_limit_sweep, loglog_slope, scaling_limit_sweep, SweepRow};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerical(#[from] spinrs::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io { .. } => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            RunError::Config(e) => json!({"error": {"kind": "ConfigError", "violations": e.violations}}),
            RunError::Numerical(e) => json!({"error": {"kind": numerical_kind(e), "message": e.to_string()}}),
            RunError::Io { path, source } => {
                json!({"error": {"kind": "IoError", "path": path.display().to_string(), "message": source.to_string()}})
            }
        }
    }
}

fn numerical_kind(e: &spinrs::Error) -> &'static str {
    use spinrs::Error::*;
    match e {
        NotHermitian { .. } => "NotHermitian",
        NotUnitary { .. } => "NotUnitary",
        NotPositiveDefinite { .. } => "NotPositiveDefinite",
        NotUnipotent { .. } => "NotUnipotent",
        NotBorel(_) => "NotBorel",
        NonRegularTorus { .. } => "NonRegularTorus",
        DecompositionFailure(_) => "DecompositionFailure",
        IndexOutOfStructure { .. } => "IndexOutOfStructure",
        ToleranceExceeded { .. } => "ToleranceExceeded",
        InvalidInput(_) => "InvalidInput",
    }
}

/// Files written by a run, plus the summary and an error if the run stopped
/// early or failed a check after writing its outputs.
#[derive(Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: Value,
    pub failure: Option<RunError>,
}

struct Out {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Out {
    fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
        Ok(Out { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn csv(&mut self, name: &str, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let io = |e: csv::Error| RunError::Io {
            path: path.clone(),
            source: std::io::Error::other(e),
        };
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|source| RunError::Io { path: path.clone(), source })?;
        self.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        fs::write(&path, text + "\n").map_err(|source| RunError::Io { path: path.clone(), source })?;
        self.files.push(path);
        Ok(())
    }
}

/// Full-precision decimal: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn state_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|a| format!("q_{a}")));
    h.extend((1..=n).map(|a| format!("p_{a}")));
    for j in 1..=n {
        for k in (j + 1)..=n {
            h.push(format!("re_sigma_{j}_{k}"));
            h.push(format!("im_sigma_{j}_{k}"));
        }
    }
    h
}

fn state_row(t: f64, s: &ReducedState, ledger: &InvariantLedger) -> Vec<String> {
    let n = s.dim();
    let mut row = vec![num(t)];
    row.extend(s.q().values().iter().map(|x| num(*x)));
    row.extend(s.p().iter().map(|x| num(*x)));
    for j in 0..n {
        for k in (j + 1)..n {
            row.push(num(s.sigma()[(j, k)].re));
            row.push(num(s.sigma()[(j, k)].im));
        }
    }
    row.extend(ledger.values().into_iter().map(num));
    row
}

fn write_trajectory(out: &mut Out, name: &str, traj: &Trajectory, n: usize) -> Result<(), RunError> {
    let mut header = state_header(n);
    header.extend(traj.drift_labels.iter().cloned());
    let rows = traj
        .times
        .iter()
        .zip(&traj.states)
        .zip(&traj.ledgers)
        .map(|((t, s), l)| state_row(*t, s, l));
    out.csv(name, &header, rows)
}

fn ledger_json(ledger: &InvariantLedger) -> Value {
    let map: serde_json::Map<String, Value> = ledger
        .labels()
        .into_iter()
        .zip(ledger.values())
        .map(|(k, v)| (k, json!(v)))
        .collect();
    Value::Object(map)
}

fn termination_json(t: &Termination) -> Value {
    match t {
        Termination::Completed => json!({"reason": "completed"}),
        Termination::NonRegular { last_good_time, min_gap } => {
            json!({"reason": "non_regular_torus", "last_good_time": last_good_time, "min_gap": min_gap})
        }
        Termination::DriftExceeded { time, label, value, bound } => {
            json!({"reason": "drift_exceeded", "time": time, "label": label, "value": value, "bound": bound})
        }
    }
}

fn trajectory_json(traj: &Trajectory) -> Value {
    let drift: serde_json::Map<String, Value> = drift_report(traj).into_iter().map(|(k, v)| (k, json!(v))).collect();
    json!({
        "samples": traj.len(),
        "final_time": traj.times.last(),
        "termination": termination_json(&traj.termination),
        "drift": drift,
    })
}

fn termination_failure(traj: &Trajectory, tolerance: f64) -> Option<RunError> {
    traj.termination.to_error(tolerance).map(RunError::Numerical)
}

pub fn run(config: &RunConfig, command: Command, out_dir: &Path) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let mut out = Out::new(out_dir)?;
    let state = config.initial_state()?;
    let ledger0 = InvariantLedger::of_state(&state)?;
    let mut summary = json!({
        "command": command.name(),
        "config": config.echo(),
        "initial_ledger": ledger_json(&ledger0),
    });
    let n = state.dim();
    let tol = config.flow.regularity_tolerance;
    let mut failure = None;

    match command {
        Command::Simulate | Command::Project | Command::Compare => {
            let method = match command {
                Command::Project => Method::Projection,
                Command::Compare => Method::Both,
                _ => config.flow.method,
            };
            let rk = match method {
                Method::Rk4 | Method::Both => Some(integrate(&state, &config.flow)?),
                Method::Projection => None,
            };
            let proj = match method {
                Method::Projection | Method::Both => {
                    let times = rk.as_ref().map_or_else(|| config.flow.sample_times(), |t| t.times.clone());
                    Some(project_trajectory(&state, &times, tol, config.execution)?)
                }
                Method::Rk4 => None,
            };
            if let Some(t) = &rk {
                write_trajectory(&mut out, "trajectory.csv", t, n)?;
                summary["rk4"] = trajectory_json(t);
                failure = failure.or_else(|| termination_failure(t, tol));
            }
            if let Some(t) = &proj {
                let name = if rk.is_some() { "projection.csv" } else { "trajectory.csv" };
                write_trajectory(&mut out, name, t, n)?;
                summary["projection"] = trajectory_json(t);
                if let Some(bound) = config.flow.drift_bound {
                    if let Some((label, d)) = drift_report(t).into_iter().find(|(_, d)| *d > bound) {
                        failure = failure.or(Some(RunError::Numerical(spinrs::Error::ToleranceExceeded {
                            what: format!("drift of {label}"),
                            value: d,
                            bound,
                        })));
                    }
                }
                failure = failure.or_else(|| termination_failure(t, tol));
            }
            if let (Some(a), Some(b)) = (&rk, &proj) {
                let cmp = compare_trajectories(a, b)?;
                let rows = cmp.labels.iter().zip(&cmp.per_observable).map(|(l, d)| vec![l.clone(), num(*d)]);
                out.csv("comparison.csv", &["observable".into(), "max_abs_difference".into()], rows)?;
                summary["comparison"] = json!({"samples": cmp.samples, "max_discrepancy": cmp.max_discrepancy});
            }
        }
        Command::Invariants => {
            let mut rows: Vec<(String, f64)> = ledger0.labels().into_iter().zip(ledger0.values()).collect();
            for len in 1..=3usize {
                for mask in 0..(1u32 << len) {
                    let word: Vec<Letter> =
                        (0..len).map(|i| if mask >> i & 1 == 1 { Letter::B } else { Letter::A }).collect();
                    let name: String = word.iter().map(|l| if *l == Letter::A { 'A' } else { 'B' }).collect();
                    let v = mixed_invariant(&state, &word)?;
                    rows.push((format!("re_tr_{name}"), v.re));
                    rows.push((format!("im_tr_{name}"), v.im));
                }
            }
            let obs = gauge_invariant_observables(&state)?;
            rows.extend(obs.labels.into_iter().zip(obs.values));
            let csv_rows = rows.iter().map(|(k, v)| vec![k.clone(), num(*v)]);
            out.csv("invariants.csv", &["name".into(), "value".into()], csv_rows)?;
            summary["invariant_count"] = json!(rows.len());
        }
        Command::ScalingLimit => {
            let mut tables: Vec<(String, Vec<SweepRow>)> =
                vec![("hamiltonian".into(), scaling_limit_sweep(&state, &config.epsilons, config.execution)?)];
            for &k in &config.lax_powers {
                tables.push((format!("lax_trace_{k}"), lax_limit_sweep(&state, k, &config.epsilons, config.execution)?));
            }
            let rows = tables
                .iter()
                .flat_map(|(name, rows)| rows.iter().map(move |r| vec![name.clone(), num(r.eps), num(r.value), num(r.error)]));
            let header = ["quantity", "eps", "value", "error"].map(String::from);
            out.csv("scaling.csv", &header, rows)?;
            let slopes: serde_json::Map<String, Value> =
                tables.iter().map(|(name, rows)| (name.clone(), json!(loglog_slope(rows)))).collect();
            summary["loglog_slopes"] = Value::Object(slopes);
        }
        Command::PoissonCheck => {
            let checks = poisson_checks(config)?;
            let rows = checks
                .iter()
                .map(|c| vec![c.name.clone(), num(c.value), num(c.bound), c.pass().to_string()]);
            let header = ["check", "value", "bound", "pass"].map(String::from);
            out.csv("poisson.csv", &header, rows)?;
            summary["checks"] = json!(checks
                .iter()
                .map(|c| json!({"check": c.name, "value": c.value, "bound": c.bound, "pass": c.pass()}))
                .collect::<Vec<_>>());
            if let Some(c) = checks.iter().find(|c| !c.pass()) {
                failure = Some(RunError::Numerical(spinrs::Error::ToleranceExceeded {
                    what: c.name.clone(),
                    value: c.value,
                    bound: c.bound,
                }));
            }
        }
    }

    summary["wall_seconds"] = json!(start.elapsed().as_secs_f64());
    if let Some(e) = &failure {
        summary["failure"] = e.to_json()["error"].clone();
    }
    out.json("summary.json", &summary)?;
    Ok(RunOutcome { files: out.files, summary, failure })
}

struct Check {
    name: String,
    value: f64,
    bound: f64,
    /// Pass when `value >= bound` rather than `value < bound`.
    at_least: bool,
}

impl Check {
    fn below(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, at_least: false }
    }

    fn pass(&self) -> bool {
        if self.at_least {
            self.value >= self.bound
        } else {
            self.value < self.bound
        }
    }
}

fn poisson_checks(config: &RunConfig) -> Result<Vec<Check>, RunError> {
    let n = config.n;
    if n > 4 {
        return Err(RunError::Numerical(spinrs::Error::InvalidInput(format!(
            "poisson-check supports n <= 4, got {n}"
        ))));
    }
    let table = BracketTable::new(n)?;
    let vars = table.vars();
    let mut rng = Rng64::seeded(config.seed);
    let points: Vec<(Vec<f64>, [usize; 6])> = (0..config.poisson_samples)
        .map(|_| {
            let b = random_borel(&mut rng, n, 0.5, 0.8);
            let picks = [0; 6].map(|_| rng.below(vars));
            (table.coordinates(b.as_matrix()), picks)
        })
        .collect();
    let residuals = config.execution.map(&points, |(x, i)| {
        let quad = |a: usize, b: usize, c: usize| Poly::var(vars, a).mul(&Poly::var(vars, b)).add(&Poly::var(vars, c));
        let analytic = jacobi_residual_poly(&table, x, &quad(i[0], i[1], i[2]), &quad(i[3], i[4], i[5]), &quad(i[1], i[3], i[5]));
        let (a, b, c) = (i[0], i[2], i[4]);
        let f = FnObservable(move |y: &[f64]| y[a].sin() + y[b] * y[c]);
        let g = FnObservable(move |y: &[f64]| (0.5 * y[b]).exp() * y[c]);
        let h = FnObservable(move |y: &[f64]| (y[a] * y[c]).cos());
        (analytic, jacobi_residual_fd(&table, x, &f, &g, &h))
    });
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
    let mut checks = vec![
        Check::below("jacobi_analytic", max(&mut residuals.iter().map(|r| r.0)), 1e-10),
        Check::below("jacobi_finite_difference", max(&mut residuals.iter().map(|r| r.1)), 1e-6),
    ];
    for k in 1..=3 {
        let tk = trace_power_poly(&table, k);
        let worst = max(&mut points.iter().map(|(x, _)| center_check(&table, x, &tk)));
        checks.push(Check::below(&format!("center_trace_power_{k}"), worst, 1e-8));
    }
    let beta0: Vec<f64> = (0..n).map(|a| 0.3 * (a as f64 - (n - 1) as f64 / 2.0)).collect();
    let beta_plus = random_strict_upper(&mut rng, n, 1.0);
    let ladder = linearization_ladder(&beta0, &beta_plus, &[1e-1, 1e-2, 1e-3])?;
    checks.push(Check {
        name: "linearization_slope".into(),
        value: ladder.slope,
        bound: 1.8,
        at_least: true,
    });
    Ok(checks)
}
