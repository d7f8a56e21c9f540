//! Flat `key = value` run configuration.
//!
//! One assignment per line; `#` starts a comment; keys are case-sensitive and
//! may appear once. Lists are comma-separated. Recognized keys:
//!
//! | key | value | default |
//! |---|---|---|
//! | `command` | `simulate`, `project`, `compare`, `invariants`, `scaling-limit`, `poisson-check` | from the command line |
//! | `n` | integer ≥ 2 | length of `q`, else required |
//! | `seed` | unsigned integer | `0` |
//! | `initial` | `random` or `explicit` | `explicit` if `q` is given, else `random` |
//! | `q`, `p` | `n` reals each | |
//! | `sigma_J_K` | `re, im` for `1 ≤ J < K ≤ n` | `0, 0` |
//! | `min_gap`, `p_max`, `sigma_max` | random-state caps | `0.1`, `1`, `1` |
//! | `dt`, `t_end` | step and horizon | `1e-3`, `1` |
//! | `sample_stride` | steps between samples | `10` |
//! | `tolerance` | regularity tolerance | `1e-9` |
//! | `drift_bound` | optional bound on invariant drift | none |
//! | `method` | `rk4`, `projection`, `both` | `rk4` |
//! | `epsilons` | decreasing scaling ladder | `1e-1, 1e-2, 1e-3, 1e-4` |
//! | `lax_powers` | powers for the Lax limit | `2, 3` (capped at `n`) |
//! | `poisson_samples` | sample points for `poisson-check` | `50` |
//! | `execution` | `parallel` or `sequential` | `parallel` |
//! | `output_dir` | directory for outputs | `out` |

use spinrs::dynamics::{FlowConfig, Method};
use spinrs::matrix::{alcove_gaps, c, AlcovePoint, CMatrix, DEFAULT_REGULARITY_TOL};
use spinrs::par::Execution;
use spinrs::phasespace::ReducedState;
use spinrs::sample::{random_state, Rng64, StateCaps};
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Project,
    Compare,
    Invariants,
    ScalingLimit,
    PoissonCheck,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Simulate,
        Command::Project,
        Command::Compare,
        Command::Invariants,
        Command::ScalingLimit,
        Command::PoissonCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Project => "project",
            Command::Compare => "compare",
            Command::Invariants => "invariants",
            Command::ScalingLimit => "scaling-limit",
            Command::PoissonCheck => "poisson-check",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Random(StateCaps),
    Explicit { q: Vec<f64>, p: Vec<f64>, sigma: CMatrix },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub n: usize,
    pub seed: u64,
    pub initial: Initial,
    pub flow: FlowConfig,
    pub epsilons: Vec<f64>,
    pub lax_powers: Vec<usize>,
    pub poisson_samples: usize,
    pub execution: Execution,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// The initial state: explicit data as given, or drawn from `seed`.
    pub fn initial_state(&self) -> spinrs::Result<ReducedState> {
        match &self.initial {
            Initial::Random(caps) => Ok(random_state(&mut Rng64::seeded(self.seed), self.n, *caps)),
            Initial::Explicit { q, p, sigma } => {
                ReducedState::new(AlcovePoint::new(q.clone(), self.flow.regularity_tolerance)?, p.clone(), sigma.clone())
            }
        }
    }

    /// Normalized key-value echo, for run summaries.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", ");
        if let Some(cmd) = self.command {
            m.insert("command".into(), cmd.name().into());
        }
        m.insert("n".into(), self.n.to_string());
        m.insert("seed".into(), self.seed.to_string());
        match &self.initial {
            Initial::Random(caps) => {
                m.insert("initial".into(), "random".into());
                m.insert("min_gap".into(), format!("{:e}", caps.min_gap));
                m.insert("p_max".into(), format!("{:e}", caps.p_max));
                m.insert("sigma_max".into(), format!("{:e}", caps.sigma_max));
            }
            Initial::Explicit { q, p, sigma } => {
                m.insert("initial".into(), "explicit".into());
                m.insert("q".into(), list(q));
                m.insert("p".into(), list(p));
                for j in 0..self.n {
                    for k in (j + 1)..self.n {
                        let z = sigma[(j, k)];
                        m.insert(format!("sigma_{}_{}", j + 1, k + 1), format!("{:e}, {:e}", z.re, z.im));
                    }
                }
            }
        }
        m.insert("dt".into(), format!("{:e}", self.flow.dt));
        m.insert("t_end".into(), format!("{:e}", self.flow.t_end));
        m.insert("sample_stride".into(), self.flow.sample_stride.to_string());
        m.insert("tolerance".into(), format!("{:e}", self.flow.regularity_tolerance));
        if let Some(b) = self.flow.drift_bound {
            m.insert("drift_bound".into(), format!("{b:e}"));
        }
        let method = match self.flow.method {
            Method::Rk4 => "rk4",
            Method::Projection => "projection",
            Method::Both => "both",
        };
        m.insert("method".into(), method.into());
        m.insert("epsilons".into(), list(&self.epsilons));
        m.insert(
            "lax_powers".into(),
            self.lax_powers.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", "),
        );
        m.insert("poisson_samples".into(), self.poisson_samples.to_string());
        let exec = match self.execution {
            Execution::Parallel => "parallel",
            Execution::Sequential => "sequential",
        };
        m.insert("execution".into(), exec.into());
        m.insert("output_dir".into(), self.output_dir.display().to_string());
        m
    }
}

/// Every problem found in a configuration document.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid configuration: {}", .violations.join("; "))]
pub struct ConfigError {
    pub violations: Vec<String>,
}

const KEYS: &[&str] = &[
    "command",
    "n",
    "seed",
    "initial",
    "q",
    "p",
    "min_gap",
    "p_max",
    "sigma_max",
    "dt",
    "t_end",
    "sample_stride",
    "tolerance",
    "drift_bound",
    "method",
    "epsilons",
    "lax_powers",
    "poisson_samples",
    "execution",
    "output_dir",
];

struct Fields {
    values: BTreeMap<String, (usize, String)>,
    errors: Vec<String>,
}

impl Fields {
    fn take<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        let (line, raw) = self.values.remove(key)?;
        match parse(&raw) {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(format!("line {line}: {key}: {e}"));
                None
            }
        }
    }
}

fn real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{}` is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{}` is not finite", s.trim()))
    }
}

fn reals(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(real).collect()
}

fn count(s: &str) -> Result<usize, String> {
    s.trim().parse().map_err(|_| format!("`{}` is not a nonnegative integer", s.trim()))
}

fn sigma_index(key: &str) -> Option<(usize, usize)> {
    let rest = key.strip_prefix("sigma_")?;
    let (j, k) = rest.split_once('_')?;
    Some((j.parse().ok()?, k.parse().ok()?))
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut errors = Vec::new();
    let mut values = BTreeMap::new();
    let mut sigma_raw = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {line_no}: expected `key = value`"));
            continue;
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if let Some(idx) = sigma_index(&key) {
            sigma_raw.push((line_no, key, idx, value));
            continue;
        }
        if !KEYS.contains(&key.as_str()) {
            errors.push(format!("line {line_no}: unknown key `{key}`"));
            continue;
        }
        if values.insert(key.clone(), (line_no, value)).is_some() {
            errors.push(format!("line {line_no}: duplicate key `{key}`"));
        }
    }
    let mut f = Fields { values, errors };

    let command = f.take("command", |s| s.parse::<Command>());
    let q = f.take("q", reals);
    let p = f.take("p", reals);
    let n = match (f.take("n", count), &q) {
        (Some(n), _) => n,
        (None, Some(q)) => q.len(),
        (None, None) => {
            f.errors.push("n: required when q is not given".into());
            0
        }
    };
    if n < 2 && !f.errors.iter().any(|e| e.starts_with("n:")) {
        f.errors.push(format!("n: must be at least 2, got {n}"));
    }
    let seed = f
        .take("seed", |s| s.trim().parse::<u64>().map_err(|_| format!("`{}` is not an unsigned integer", s.trim())))
        .unwrap_or(0);
    let initial_kind = f.take("initial", |s| match s {
        "random" | "explicit" => Ok(s.to_string()),
        _ => Err(format!("expected `random` or `explicit`, got `{s}`")),
    });

    let defaults = FlowConfig::default();
    let flow = FlowConfig {
        dt: f.take("dt", real).unwrap_or(defaults.dt),
        t_end: f.take("t_end", real).unwrap_or(defaults.t_end),
        sample_stride: f.take("sample_stride", count).unwrap_or(defaults.sample_stride),
        regularity_tolerance: f.take("tolerance", real).unwrap_or(DEFAULT_REGULARITY_TOL),
        drift_bound: f.take("drift_bound", real),
        method: f
            .take("method", |s| match s {
                "rk4" => Ok(Method::Rk4),
                "projection" => Ok(Method::Projection),
                "both" => Ok(Method::Both),
                _ => Err(format!("expected `rk4`, `projection` or `both`, got `{s}`")),
            })
            .unwrap_or(defaults.method),
    };
    if let Err(e) = flow.validate() {
        f.errors.push(format!("flow: {e}"));
    }

    let caps_default = StateCaps::default();
    let caps = StateCaps {
        min_gap: f.take("min_gap", real).unwrap_or(caps_default.min_gap),
        p_max: f.take("p_max", real).unwrap_or(caps_default.p_max),
        sigma_max: f.take("sigma_max", real).unwrap_or(caps_default.sigma_max),
    };
    let epsilons = f.take("epsilons", reals).unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3, 1e-4]);
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) || epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        f.errors.push("epsilons: must be positive and strictly decreasing".into());
    }
    let lax_powers = f
        .take("lax_powers", |s| s.split(',').map(count).collect::<Result<Vec<_>, _>>())
        .unwrap_or_else(|| (2..=n.clamp(2, 3)).collect());
    if lax_powers.iter().any(|&k| k < 2 || k > n) {
        f.errors.push(format!("lax_powers: each power must lie in 2..={n}"));
    }
    let poisson_samples = f.take("poisson_samples", count).unwrap_or(50);
    let execution = f
        .take("execution", |s| match s {
            "parallel" => Ok(Execution::Parallel),
            "sequential" => Ok(Execution::Sequential),
            _ => Err(format!("expected `parallel` or `sequential`, got `{s}`")),
        })
        .unwrap_or_default();
    let output_dir = f.take("output_dir", |s| Ok(PathBuf::from(s))).unwrap_or_else(|| PathBuf::from("out"));

    let explicit = match initial_kind.as_deref() {
        Some("explicit") => true,
        Some(_) => false,
        None => q.is_some(),
    };
    let initial = if explicit {
        let mut sigma = CMatrix::zeros(n.max(1), n.max(1));
        for (line, key, (j, k), value) in &sigma_raw {
            if !(1 <= *j && j < k && *k <= n) {
                f.errors.push(format!("line {line}: {key}: indices must satisfy 1 <= j < k <= {n}"));
                continue;
            }
            match reals(value) {
                Ok(v) if v.len() == 2 => sigma[(j - 1, k - 1)] = c(v[0], v[1]),
                Ok(_) => f.errors.push(format!("line {line}: {key}: expected `re, im`")),
                Err(e) => f.errors.push(format!("line {line}: {key}: {e}")),
            }
        }
        let (q, p) = (q.unwrap_or_default(), p.unwrap_or_default());
        check_explicit(n, &q, &p, flow.regularity_tolerance, &mut f.errors);
        Initial::Explicit { q, p, sigma }
    } else {
        if q.is_some() || p.is_some() || !sigma_raw.is_empty() {
            f.errors.push("initial = random does not take q, p or sigma entries".into());
        }
        if !(caps.min_gap > 0.0 && caps.min_gap * n as f64 <= TAU) {
            f.errors.push(format!("min_gap: must be positive and at most 2*pi/n, got {}", caps.min_gap));
        }
        if !(caps.p_max >= 0.0) || !(caps.sigma_max >= 0.0) {
            f.errors.push("p_max and sigma_max must be nonnegative".into());
        }
        Initial::Random(caps)
    };

    for key in f.values.keys() {
        f.errors.push(format!("{key}: not used"));
    }
    if !f.errors.is_empty() {
        return Err(ConfigError { violations: f.errors });
    }
    Ok(RunConfig {
        command,
        n,
        seed,
        initial,
        flow,
        epsilons,
        lax_powers,
        poisson_samples,
        execution,
        output_dir,
    })
}

fn check_explicit(n: usize, q: &[f64], p: &[f64], tolerance: f64, errors: &mut Vec<String>) {
    if q.len() != n {
        errors.push(format!("q: expected {n} entries, got {}", q.len()));
    }
    if p.len() != n {
        errors.push(format!("p: expected {n} entries, got {}", p.len()));
    }
    if q.len() == n && n >= 2 {
        for a in 0..n - 1 {
            if !(q[a] > q[a + 1]) {
                errors.push(format!(
                    "q: ordering q_{} > q_{} violated ({} vs {})",
                    a + 1,
                    a + 2,
                    q[a],
                    q[a + 1]
                ));
            }
        }
        if !(q[0] - q[n - 1] < TAU) {
            errors.push(format!("q: width q_1 - q_n = {} must be below 2*pi", q[0] - q[n - 1]));
        }
        let sum: f64 = q.iter().sum();
        if sum.abs() > AlcovePoint::SUM_TOLERANCE {
            errors.push(format!("q: entries must sum to 0, got {sum:e}"));
        }
        let min_gap = alcove_gaps(q).into_iter().fold(f64::INFINITY, f64::min);
        if min_gap > 0.0 && min_gap <= tolerance {
            errors.push(format!("q: minimal gap {min_gap:e} is within the regularity tolerance {tolerance:e}"));
        }
    }
    if p.len() == n {
        let sum: f64 = p.iter().sum();
        if sum.abs() > 1e-9 {
            errors.push(format!("p: entries must sum to 0, got {sum:e}"));
        }
    }
}
