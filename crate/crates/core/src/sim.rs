//! Monte Carlo harness: single runs, parameter sweeps and CSV output.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::SimConfig;
use crate::fmt_f64;
use crate::matching::{
    build_candidates, is_stable, solve, solve_random, utilities, CandidateSet, Matching, SolveError, SolveOptions,
};
use crate::radio::{rate, PathLoss};
use crate::scenario::{generate_scenario, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Matching,
    Random,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Matching => "matching",
            Strategy::Random => "random",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "matching" => Ok(Strategy::Matching),
            "random" => Ok(Strategy::Random),
            other => Err(format!("unknown strategy `{other}` (expected matching or random)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    UserCount,
    Velocity,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::UserCount => "user_count",
            SweepVariable::Velocity => "velocity",
        }
    }

    /// `base` with the swept knob set to `value`.
    pub fn apply(self, base: &SimConfig, value: f64) -> SimConfig {
        let mut cfg = base.clone();
        match self {
            SweepVariable::UserCount => cfg.num_d2d_users = value.round() as usize,
            SweepVariable::Velocity => cfg.v_max = value,
        }
        cfg
    }
}

impl FromStr for SweepVariable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "user_count" => Ok(SweepVariable::UserCount),
            "velocity" => Ok(SweepVariable::Velocity),
            other => Err(format!(
                "unknown sweep variable `{other}` (expected user_count or velocity)"
            )),
        }
    }
}

/// Metrics of one simulated cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub seed: u64,
    pub strategy: Strategy,
    pub num_users: usize,
    /// Realized mean speed of the D2D-capable users.
    pub mean_velocity: f64,
    pub users_on_cellular: usize,
    pub users_offloaded: usize,
    pub offloaded_bits: f64,
    /// Bits each matched receiver gets over D2D (`offload_size`) spread over
    /// the observation window, averaged over links; 0 if none.
    pub mean_throughput_d2d: f64,
    /// Interference-free uplink rate averaged over channels, scaled by each
    /// cellular-tier user's time share of a channel.
    pub mean_throughput_cellular_ref: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Converged (always true for the random strategy) and no blocking pairs.
    pub stable: bool,
}

impl RunReport {
    pub fn offloaded_fraction(&self) -> f64 {
        if self.num_users == 0 {
            0.0
        } else {
            self.users_offloaded as f64 / self.num_users as f64
        }
    }
}

/// Everything one run produced, for callers that want to re-check it.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub scenario: Scenario,
    pub candidates: CandidateSet,
    pub matching: Matching,
}

/// Seed for the random strategy's own stream, distinct from the scenario's.
pub fn random_strategy_seed(run_seed: u64) -> u64 {
    run_seed ^ 0x5241_4e44_4f4d_0000
}

pub fn run_once(cfg: &SimConfig, strategy: Strategy) -> RunReport {
    run_once_detailed(cfg, strategy).report
}

pub fn run_once_detailed(cfg: &SimConfig, strategy: Strategy) -> RunOutcome {
    let scenario = generate_scenario(cfg);
    let candidates = build_candidates(&scenario, cfg);
    let (matching, iterations, converged) = match strategy {
        Strategy::Matching => {
            let opts = SolveOptions {
                max_outer_iterations: cfg.max_outer_iterations,
            };
            match solve(&candidates, &opts) {
                Ok(sol) => (sol.matching, sol.iterations, true),
                Err(SolveError::NotConverged(nc)) => (nc.best, nc.iterations, false),
            }
        }
        Strategy::Random => (solve_random(&candidates, random_strategy_seed(cfg.rng_seed)), 0, true),
    };
    let report = summarize(cfg, strategy, &scenario, &candidates, &matching, iterations, converged);
    RunOutcome {
        report,
        scenario,
        candidates,
        matching,
    }
}

fn summarize(
    cfg: &SimConfig,
    strategy: Strategy,
    scenario: &Scenario,
    candidates: &CandidateSet,
    matching: &Matching,
    iterations: usize,
    converged: bool,
) -> RunReport {
    let util = utilities(candidates, matching).expect("strategies only return candidate matchings");
    let (no_blocking, _) = is_stable(matching, candidates).expect("validated above");
    let num_users = scenario.d2d.len();
    let users_offloaded = 2 * matching.len();
    let users_on_cellular = num_users - users_offloaded;

    let mean_throughput_d2d = if matching.is_empty() {
        0.0
    } else {
        util.u_net / cfg.session_horizon / matching.len() as f64
    };
    let mean_velocity = if num_users == 0 {
        0.0
    } else {
        scenario.d2d.iter().map(|u| u.velocity.norm()).sum::<f64>() / num_users as f64
    };

    RunReport {
        seed: cfg.rng_seed,
        strategy,
        num_users,
        mean_velocity,
        users_on_cellular,
        users_offloaded,
        offloaded_bits: util.u_net,
        mean_throughput_d2d,
        mean_throughput_cellular_ref: cellular_reference_throughput(cfg, scenario, users_on_cellular),
        iterations,
        converged,
        stable: converged && no_blocking,
    }
}

/// Per-user throughput on the cellular tier: the mean interference-free
/// Shannon rate of the uplink channels, shared in time between the `N`
/// incumbents and the `extra_users` D2D-capable users left on cellular.
pub fn cellular_reference_throughput(cfg: &SimConfig, scenario: &Scenario, extra_users: usize) -> f64 {
    let n = scenario.cellular.len();
    if n == 0 {
        return 0.0;
    }
    let path_loss = PathLoss::from_config(cfg);
    let total: f64 = scenario
        .cellular
        .iter()
        .filter_map(|c| {
            let g = path_loss.gain(c.position.norm(), None).ok()?;
            Some(rate(
                g.value() * c.tx_power / cfg.noise_power,
                cfg.bandwidth_per_channel,
            ))
        })
        .sum();
    let share = n as f64 / (n + extra_users) as f64;
    total / n as f64 * share
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub replications: usize,
    pub base: SimConfig,
    pub strategies: Vec<Strategy>,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("nothing to write: empty table")]
    EmptyTable,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.values.is_empty() {
            return Err(SimError::InvalidSweep("no values".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SimError::InvalidSweep("values must be strictly increasing".into()));
        }
        if self.replications == 0 {
            return Err(SimError::InvalidSweep("replications must be >= 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(SimError::InvalidSweep("no strategies".into()));
        }
        for &v in &self.values {
            self.variable.apply(&self.base, v).validate()?;
        }
        Ok(())
    }
}

/// Mean and standard error of one metric over replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
}

impl Stat {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        let xs: Vec<f64> = xs.into_iter().collect();
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Stat { mean: 0.0, stderr: 0.0 };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let stderr = if xs.len() < 2 {
            0.0
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        Stat { mean, stderr }
    }
}

/// Aggregate over the replications of one (value, strategy) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variable: SweepVariable,
    pub value: f64,
    pub strategy: Strategy,
    pub replications: usize,
    pub mean_velocity: Stat,
    pub users_on_cellular: Stat,
    pub users_offloaded: Stat,
    pub offloaded_fraction: Stat,
    pub offloaded_bits: Stat,
    pub mean_throughput_d2d: Stat,
    pub mean_throughput_cellular_ref: Stat,
    pub iterations: Stat,
    pub stable_fraction: f64,
}

impl SweepRow {
    pub fn from_reports(variable: SweepVariable, value: f64, strategy: Strategy, reports: &[RunReport]) -> Self {
        let stat = |f: fn(&RunReport) -> f64| Stat::of(reports.iter().map(f));
        SweepRow {
            variable,
            value,
            strategy,
            replications: reports.len(),
            mean_velocity: stat(|r| r.mean_velocity),
            users_on_cellular: stat(|r| r.users_on_cellular as f64),
            users_offloaded: stat(|r| r.users_offloaded as f64),
            offloaded_fraction: stat(|r| r.offloaded_fraction()),
            offloaded_bits: stat(|r| r.offloaded_bits),
            mean_throughput_d2d: stat(|r| r.mean_throughput_d2d),
            mean_throughput_cellular_ref: stat(|r| r.mean_throughput_cellular_ref),
            iterations: stat(|r| r.iterations as f64),
            stable_fraction: reports.iter().filter(|r| r.stable).count() as f64 / reports.len().max(1) as f64,
        }
    }
}

/// Runs every (value, strategy, replication) job, replication `k` using
/// seed `base.rng_seed + k`, and returns one row per (value, strategy) in
/// input order. Jobs run in parallel; results are merged by index.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SimError> {
    Ok(sweep_reports(spec)?
        .into_iter()
        .map(|(value, strategy, reports)| SweepRow::from_reports(spec.variable, value, strategy, &reports))
        .collect())
}

/// The raw per-replication reports behind [`sweep`].
pub fn sweep_reports(spec: &SweepSpec) -> Result<Vec<(f64, Strategy, Vec<RunReport>)>, SimError> {
    spec.validate()?;
    let jobs: Vec<(usize, Strategy, usize)> = (0..spec.values.len())
        .flat_map(|v| {
            spec.strategies
                .iter()
                .flat_map(move |&s| (0..spec.replications).map(move |k| (v, s, k)))
        })
        .collect();
    let reports: Vec<RunReport> = jobs
        .par_iter()
        .map(|&(v, strategy, k)| {
            let mut cfg = spec.variable.apply(&spec.base, spec.values[v]);
            cfg.rng_seed = spec.base.rng_seed.wrapping_add(k as u64);
            run_once(&cfg, strategy)
        })
        .collect();
    Ok(reports
        .chunks(spec.replications)
        .zip(jobs.iter().step_by(spec.replications))
        .map(|(chunk, &(v, s, _))| (spec.values[v], s, chunk.to_vec()))
        .collect())
}

pub const SWEEP_CSV_COLUMNS: [&str; 21] = [
    "variable",
    "value",
    "strategy",
    "replications",
    "mean_velocity",
    "mean_velocity_se",
    "users_on_cellular",
    "users_on_cellular_se",
    "users_offloaded",
    "users_offloaded_se",
    "offloaded_fraction",
    "offloaded_fraction_se",
    "offloaded_bits",
    "offloaded_bits_se",
    "throughput_d2d",
    "throughput_d2d_se",
    "throughput_cellular_ref",
    "throughput_cellular_ref_se",
    "iterations",
    "iterations_se",
    "stable_fraction",
];

pub fn write_sweep_csv(rows: &[SweepRow], out: impl Write) -> std::io::Result<()> {
    let mut w = out;
    writeln!(w, "{}", SWEEP_CSV_COLUMNS.join(","))?;
    for r in rows {
        let mut fields = vec![
            r.variable.as_str().to_string(),
            fmt_f64(r.value),
            r.strategy.to_string(),
            r.replications.to_string(),
        ];
        for s in [
            r.mean_velocity,
            r.users_on_cellular,
            r.users_offloaded,
            r.offloaded_fraction,
            r.offloaded_bits,
            r.mean_throughput_d2d,
            r.mean_throughput_cellular_ref,
            r.iterations,
        ] {
            fields.push(fmt_f64(s.mean));
            fields.push(fmt_f64(s.stderr));
        }
        fields.push(fmt_f64(r.stable_fraction));
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()
}

pub fn emit_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<(), SimError> {
    let path = path.as_ref();
    if rows.is_empty() {
        return Err(SimError::EmptyTable);
    }
    let io_err = |source| SimError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_sweep_csv(rows, BufWriter::new(file)).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimConfig {
        SimConfig {
            num_channels: 20,
            num_d2d_users: 30,
            rng_seed: 5,
            ..SimConfig::default()
        }
    }

    #[test]
    fn no_users_nothing_offloaded() {
        let cfg = SimConfig {
            num_d2d_users: 0,
            ..small()
        };
        let r = run_once(&cfg, Strategy::Matching);
        assert_eq!(r.users_offloaded, 0);
        assert_eq!(r.offloaded_bits, 0.0);
        assert_eq!(r.mean_throughput_d2d, 0.0);
    }

    #[test]
    fn run_is_deterministic() {
        for s in [Strategy::Matching, Strategy::Random] {
            assert_eq!(run_once(&small(), s), run_once(&small(), s));
        }
    }

    #[test]
    fn report_partition_and_u_net() {
        for seed in 0..10 {
            let cfg = SimConfig {
                rng_seed: seed,
                ..small()
            };
            let out = run_once_detailed(&cfg, Strategy::Matching);
            let r = &out.report;
            assert_eq!(r.users_on_cellular + r.users_offloaded, r.num_users);
            let u = utilities(&out.candidates, &out.matching).unwrap();
            assert_eq!(r.offloaded_bits, u.u_net);
        }
    }

    #[test]
    fn stat_of_values() {
        let s = Stat::of([1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.stderr - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stat::of([4.0]).stderr, 0.0);
    }

    #[test]
    fn single_replication_row_equals_run() {
        let spec = SweepSpec {
            variable: SweepVariable::UserCount,
            values: vec![30.0],
            replications: 1,
            base: small(),
            strategies: vec![Strategy::Matching, Strategy::Random],
        };
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        for row in rows {
            let r = run_once(&small(), row.strategy);
            assert_eq!(row.users_on_cellular.mean, r.users_on_cellular as f64);
            assert_eq!(row.offloaded_bits.mean, r.offloaded_bits);
            assert_eq!(row.mean_throughput_d2d.mean, r.mean_throughput_d2d);
        }
    }

    #[test]
    fn sweep_rejects_bad_specs() {
        let mut spec = SweepSpec {
            variable: SweepVariable::Velocity,
            values: vec![1.0, 0.5],
            replications: 1,
            base: small(),
            strategies: vec![Strategy::Matching],
        };
        assert!(matches!(sweep(&spec), Err(SimError::InvalidSweep(_))));
        spec.values = vec![0.5];
        spec.replications = 0;
        assert!(matches!(sweep(&spec), Err(SimError::InvalidSweep(_))));
        spec.replications = 1;
        spec.values = vec![-1.0];
        assert!(matches!(sweep(&spec), Err(SimError::Config(_))));
    }

    #[test]
    fn csv_shape() {
        assert!(matches!(emit_csv(&[], "/nonexistent/x.csv"), Err(SimError::EmptyTable)));
        let spec = SweepSpec {
            variable: SweepVariable::UserCount,
            values: vec![10.0],
            replications: 2,
            base: small(),
            strategies: vec![Strategy::Matching],
        };
        let rows = sweep(&spec).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), SWEEP_CSV_COLUMNS.len());
        assert_eq!(lines[1].split(',').count(), SWEEP_CSV_COLUMNS.len());
        assert!(lines[1].starts_with("user_count,1.0000000000000000e1,matching,2,"));
    }
}
