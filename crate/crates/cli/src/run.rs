//! Subcommand dispatch: effective configuration, the trial-parallel run and
//! output files.

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use hailsim_core::estimators::{
    estimate_p_n, phase_sweep, range_profile, region_iv_growth_demo, tightness_probe, RegionIvDemo, TightnessTable,
};
use hailsim_core::model::SEED_RULE_ID;
use hailsim_core::{
    check_conditions, classify_region, evolve, sample_realization, EstimatorError, Limit, ModelParams, SeedInfo,
    TrialConfig,
};
use toml::{Table, Value};

use crate::config::{apply_override, echo, from_table, parse_text, Config, ConfigErrors, DemoSpec, FieldError};
use crate::oracle::run_oracle_suite;
use crate::output::{cell, num, write_outputs, CsvTable, RunManifest, TOOL_VERSION};

pub const SEED_ENV: &str = "HAILSIM_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Evolve,
    Oracle,
    Tightness,
    PnDecay,
    Range,
    UnstableDemo,
    CheckScales,
    Sweep,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Evolve => "evolve",
            Subcommand::Oracle => "oracle",
            Subcommand::Tightness => "tightness",
            Subcommand::PnDecay => "pn-decay",
            Subcommand::Range => "range",
            Subcommand::UnstableDemo => "unstable-demo",
            Subcommand::CheckScales => "check-scales",
            Subcommand::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Configuration text (TOML or JSON); `None` runs from an empty config.
    pub config_text: Option<String>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: PathBuf,
    /// Worker threads, 0 for the rayon default.
    pub threads: usize,
    pub overrides: Vec<String>,
    /// Job cap for `oracle`.
    pub jobs: Option<usize>,
    /// Value of the seed environment variable, if set.
    pub env_seed: Option<String>,
}

#[derive(Debug)]
pub enum RunError {
    Validation(ConfigErrors),
    OracleMismatch(usize),
    Other(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            RunError::OracleMismatch(_) => 3,
            RunError::Other(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Validation(e) => write!(f, "invalid configuration:\n{e}"),
            RunError::OracleMismatch(n) => write!(f, "{n} oracle mismatch(es)"),
            RunError::Other(e) => f.write_str(e),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigErrors> for RunError {
    fn from(e: ConfigErrors) -> Self {
        RunError::Validation(e)
    }
}

impl From<EstimatorError> for RunError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::Config(m) | EstimatorError::Size(m) => {
                RunError::Validation(ConfigErrors(vec![FieldError {
                    path: "<experiment>".into(),
                    message: m,
                }]))
            }
            other => RunError::Other(other.to_string()),
        }
    }
}

/// What a finished run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub csv_path: PathBuf,
    /// Human-readable summary for stdout.
    pub summary: String,
    pub manifest: RunManifest,
}

const DEFAULT_GRID: (f64, f64, i64) = (1.0, 1.5, 12);

fn section_mut<'a>(root: &'a mut Table, name: &str) -> Result<&'a mut Table, ConfigErrors> {
    let v = root.entry(name.to_string()).or_insert_with(|| Value::Table(Table::new()));
    let found = v.type_str();
    v.as_table_mut().ok_or_else(|| {
        ConfigErrors(vec![FieldError {
            path: name.into(),
            message: format!("expected a section, found {found}"),
        }])
    })
}

/// The configuration actually run: overrides and flags applied, seed and
/// default grid filled in.
pub fn effective_table(sub: Subcommand, opts: &RunOptions) -> Result<Table, RunError> {
    let mut root = parse_text(opts.config_text.as_deref().unwrap_or(""))?;
    for o in &opts.overrides {
        apply_override(&mut root, o)?;
    }
    if let Some(n) = opts.trials {
        let (section, key) = if sub == Subcommand::Oracle {
            ("oracle", "instances")
        } else {
            ("experiment", "trials")
        };
        section_mut(&mut root, section)?.insert(key.into(), Value::Integer(n as i64));
    }
    if let Some(j) = opts.jobs {
        section_mut(&mut root, "oracle")?.insert("max_jobs".into(), Value::Integer(j as i64));
    }
    let has_seed = root
        .get("experiment")
        .and_then(|e| e.as_table())
        .is_some_and(|e| e.contains_key("seed"));
    let seed = match (opts.seed, has_seed, &opts.env_seed) {
        (Some(s), _, _) => Some(s),
        (None, true, _) => None,
        (None, false, Some(raw)) => Some(raw.trim().parse::<u64>().map_err(|_| {
            ConfigErrors(vec![FieldError {
                path: SEED_ENV.into(),
                message: format!("'{raw}' is not an unsigned 64-bit integer"),
            }])
        })?),
        (None, false, None) => Some(0),
    };
    if let Some(s) = seed {
        let v = i64::try_from(s).map_err(|_| {
            ConfigErrors(vec![FieldError {
                path: "experiment.seed".into(),
                message: format!("{s} does not fit the configuration's integer range"),
            }])
        })?;
        section_mut(&mut root, "experiment")?.insert("seed".into(), Value::Integer(v));
    }
    let uses_grid = matches!(sub, Subcommand::Tightness | Subcommand::Range | Subcommand::Sweep)
        || (sub == Subcommand::UnstableDemo && !is_region_iv(&root));
    if uses_grid {
        let ex = section_mut(&mut root, "experiment")?;
        if !ex.contains_key("t_grid") {
            let mut g = Table::new();
            g.insert("start".into(), Value::Float(DEFAULT_GRID.0));
            g.insert("ratio".into(), Value::Float(DEFAULT_GRID.1));
            g.insert("count".into(), Value::Integer(DEFAULT_GRID.2));
            ex.insert("t_grid".into(), Value::Table(g));
        }
    }
    Ok(root)
}

fn is_region_iv(root: &Table) -> bool {
    root.get("demo")
        .and_then(|d| d.get("region"))
        .and_then(|r| r.as_str())
        == Some("IV")
}

const DISTRIBUTION_KEYS: &str = "kind = fixed (radius, duration) | pareto (alpha, beta; optional r_min, tau_min) | \
     discrete-scales (needs [scales]; optional c1, c2, truncation) | region-iv (alpha, beta; optional truncation)";

fn missing(errors: &mut Vec<FieldError>, path: &str, message: &str) {
    errors.push(FieldError {
        path: path.into(),
        message: message.into(),
    });
}

/// Sections and keys a subcommand needs beyond general validation.
pub fn check_requirements(sub: Subcommand, cfg: &Config) -> Result<(), ConfigErrors> {
    use Subcommand::*;
    let mut e = Vec::new();
    let region_ii = matches!(cfg.demo, Some(DemoSpec::RegionIi));
    let needs_model = matches!(sub, Evolve | Tightness | PnDecay | Range | Sweep) || (sub == UnstableDemo && region_ii);
    let needs_dist = matches!(sub, Evolve | Tightness | PnDecay | Range) || (sub == UnstableDemo && region_ii);
    let needs_trials = matches!(sub, Tightness | PnDecay | Range | Sweep | UnstableDemo);
    if needs_model && cfg.model.is_none() {
        missing(&mut e, "model", "missing section; required keys: dimension, lambda");
    }
    if needs_dist && cfg.distribution.is_none() && !cfg.source.contains_key("distribution") {
        missing(&mut e, "distribution", &format!("missing section; required keys: {DISTRIBUTION_KEYS}"));
    }
    if needs_trials && cfg.experiment.trials.is_none() {
        missing(&mut e, "experiment.trials", "missing required key (integer >= 1)");
    }
    match sub {
        Evolve if cfg.evolve.is_none() => missing(&mut e, "evolve", "missing section; required keys: times"),
        PnDecay if cfg.pn.is_none() => missing(&mut e, "pn", "missing section; required keys: targets, t, n"),
        UnstableDemo if cfg.demo.is_none() && !cfg.source.contains_key("demo") => missing(
            &mut e,
            "demo",
            "missing section; required keys: region = II | IV (IV also: alpha, beta, i, lambda, l, n_grid, half_width)",
        ),
        Sweep if cfg.sweep.is_none() => missing(&mut e, "sweep", "missing section; required keys: alphas, betas"),
        CheckScales if cfg.scales.is_none() => missing(
            &mut e,
            "scales",
            "missing section; required keys: alpha, beta, theta, A (or alpha, beta, spatial, temporal)",
        ),
        _ => {}
    }
    if e.is_empty() {
        Ok(())
    } else {
        Err(ConfigErrors(e))
    }
}

fn trial_config(cfg: &Config) -> TrialConfig {
    let model = cfg.model.expect("checked");
    TrialConfig {
        dimension: model.dimension,
        lambda: model.lambda,
        distribution: cfg.distribution.clone().expect("checked"),
        window: cfg.window,
        trials: cfg.experiment.trials.unwrap_or(1),
        master_seed: cfg.experiment.seed.expect("filled in"),
        boundary: cfg.boundary,
    }
}

fn with_trial_columns(columns: &[&str]) -> Vec<String> {
    let mut out: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
    out.extend(["trials", "seed", "boundary_discard_count"].map(String::from));
    out
}

fn tightness_rows(table: &TightnessTable, seed: u64, extra: &[(&str, String)]) -> CsvTable {
    let mut cols: Vec<&str> = extra.iter().map(|(k, _)| *k).collect();
    cols.extend([
        "t", "q50", "q50_lo", "q50_hi", "q90", "q90_lo", "q90_hi", "q99", "q99_lo", "q99_hi", "mean",
        "instability_score", "tainted",
    ]);
    let mut csv = CsvTable::new(&with_trial_columns(&cols));
    for r in &table.rows {
        let mut row: Vec<String> = extra.iter().map(|(_, v)| v.clone()).collect();
        row.push(num(r.t));
        for (q, (lo, hi)) in r.quantiles.iter().zip(&r.ci) {
            row.extend([num(*q), num(*lo), num(*hi)]);
        }
        row.extend([
            num(r.mean),
            num(table.score),
            table.tainted.to_string(),
            table.trials.to_string(),
            seed.to_string(),
            table.discarded.to_string(),
        ]);
        csv.push(row);
    }
    csv
}

struct Executed {
    csv: CsvTable,
    summary: String,
    mismatches: usize,
}

fn execute(sub: Subcommand, cfg: &Config) -> Result<Executed, RunError> {
    let seed = cfg.experiment.seed.expect("filled in");
    let mut summary = String::new();
    let mut mismatches = 0;
    let csv = match sub {
        Subcommand::Evolve => {
            let model = cfg.model.expect("checked");
            let spec = cfg.evolve.as_ref().expect("checked");
            let horizon = spec.times.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
            let params = ModelParams {
                dimension: model.dimension,
                lambda: model.lambda,
                horizon,
            };
            let r = sample_realization(
                &params,
                cfg.distribution.as_ref().expect("checked"),
                &cfg.window,
                SeedInfo {
                    master_seed: seed,
                    trial: spec.trial,
                },
            )
            .map_err(|e| RunError::Validation(ConfigErrors(vec![FieldError {
                path: "<model>".into(),
                message: e.to_string(),
            }])))?;
            let traj = evolve(&r, &spec.times, Limit::Right).map_err(|e| RunError::Other(e.to_string()))?;
            let mut csv = CsvTable::new(&with_trial_columns(&["time", "site", "workload", "boundary_contact"]));
            for s in &traj.snapshots {
                for (site, w) in &s.values {
                    csv.push(vec![
                        num(s.time),
                        cell(site),
                        num(*w),
                        traj.boundary_contact.to_string(),
                        "1".into(),
                        seed.to_string(),
                        "0".into(),
                    ]);
                }
            }
            summary.push_str(&format!(
                "{} jobs, {} snapshots, boundary contact: {}\n",
                r.len(),
                traj.snapshots.len(),
                traj.boundary_contact
            ));
            csv
        }
        Subcommand::Oracle => {
            let report = run_oracle_suite(&cfg.oracle, seed);
            let mut csv = CsvTable::new(&["check", "checked", "mismatches", "instances", "max_jobs", "seed"]);
            for (name, checked, kinds) in [
                ("workload", report.workload_checks, &["workload", "witness"][..]),
                ("tilde-w", report.tilde_checks, &["tilde-w"][..]),
                ("counts-connectivity", report.class_checks, &["counts", "connectivity"][..]),
            ] {
                let bad = report.mismatches.iter().filter(|m| kinds.contains(&m.check)).count();
                csv.push(vec![
                    name.into(),
                    checked.to_string(),
                    bad.to_string(),
                    report.instances.to_string(),
                    cfg.oracle.max_jobs.to_string(),
                    seed.to_string(),
                ]);
            }
            summary.push_str(&format!(
                "{} instances: {} workload, {} W~, {} class checks; max |error| {:e}; {} mismatches\n",
                report.instances,
                report.workload_checks,
                report.tilde_checks,
                report.class_checks,
                report.max_abs_error,
                report.mismatches.len()
            ));
            for m in &report.mismatches {
                summary.push_str(&format!("instance {} [{}]: {}\n{}\n", m.instance, m.check, m.detail, m.realization));
            }
            mismatches = report.mismatches.len();
            csv
        }
        Subcommand::Tightness => {
            let grid = cfg.experiment.t_grid.as_ref().expect("filled in");
            let table = tightness_probe(&trial_config(cfg), grid)?;
            summary.push_str(&format!(
                "instability score {} over {} kept trials ({} discarded)\n",
                table.score, table.trials, table.discarded
            ));
            tightness_rows(&table, seed, &[])
        }
        Subcommand::PnDecay => {
            let pn = cfg.pn.as_ref().expect("checked");
            let table = estimate_p_n(&trial_config(cfg), &pn.targets, pn.t, pn.n)?;
            for w in &table.warnings {
                summary.push_str(&format!("warning: {w}\n"));
            }
            let mut csv = CsvTable::new(&with_trial_columns(&["x", "t", "n", "hits", "p_hat", "stderr"]));
            for r in &table.rows {
                csv.push(vec![
                    cell(&r.x),
                    num(table.t),
                    table.n.to_string(),
                    r.hits.to_string(),
                    num(r.p_hat),
                    num(r.stderr),
                    r.trials.to_string(),
                    seed.to_string(),
                    table.discarded.to_string(),
                ]);
                summary.push_str(&format!("x = {}: p = {} ± {}\n", r.x, r.p_hat, r.stderr));
            }
            csv
        }
        Subcommand::Range => {
            let grid = cfg.experiment.t_grid.as_ref().expect("filled in");
            let table = range_profile(&trial_config(cfg), grid)?;
            let mut csv = CsvTable::new(&with_trial_columns(&[
                "t",
                "mean_width",
                "median_width",
                "q90_width",
                "mean_width_over_t",
                "mean_bound",
                "violations",
            ]));
            for r in &table.rows {
                csv.push(vec![
                    num(r.t),
                    num(r.mean_width),
                    num(r.median_width),
                    num(r.q90_width),
                    num(r.mean_width_over_t),
                    num(r.mean_bound),
                    r.violations.to_string(),
                    table.trials.to_string(),
                    seed.to_string(),
                    table.discarded.to_string(),
                ]);
            }
            summary.push_str(&format!(
                "bound violation fraction {} over {} trials\n",
                table.violation_fraction, table.trials
            ));
            csv
        }
        Subcommand::UnstableDemo => match cfg.demo.as_ref().expect("checked") {
            DemoSpec::RegionIv {
                alpha,
                beta,
                i,
                lambda,
                l,
                n_grid,
                half_width,
            } => {
                let demo = RegionIvDemo {
                    alpha: *alpha,
                    beta: *beta,
                    d: cfg.model.map_or(1, |m| m.dimension),
                    i: *i,
                    lambda: *lambda,
                    l: *l,
                    n_grid: n_grid.clone(),
                    half_width: *half_width,
                    trials: cfg.experiment.trials.expect("checked"),
                    master_seed: seed,
                };
                let table = region_iv_growth_demo(&demo)?;
                summary.push_str(&format!(
                    "class {i}: R = {}, tau = {}, class rate {}, block rate (closed form) {}\n",
                    table.radius, table.duration, table.class_rate, table.block_rate
                ));
                let mut csv = CsvTable::new(&with_trial_columns(&[
                    "n",
                    "t",
                    "threshold",
                    "hits",
                    "freq",
                    "stderr",
                    "tainted",
                    "radius",
                    "duration",
                    "class_rate",
                    "block_rate",
                ]));
                for r in &table.rows {
                    csv.push(vec![
                        r.n.to_string(),
                        num(r.t),
                        num(r.threshold),
                        r.hits.to_string(),
                        num(r.freq),
                        num(r.stderr),
                        r.tainted.to_string(),
                        num(table.radius),
                        num(table.duration),
                        num(table.class_rate),
                        num(table.block_rate),
                        r.trials.to_string(),
                        seed.to_string(),
                        "0".into(),
                    ]);
                    summary.push_str(&format!("n = {}: frequency {} ± {}\n", r.n, r.freq, r.stderr));
                }
                csv
            }
            DemoSpec::RegionIi => {
                let tc = trial_config(cfg);
                let (a, b) = hailsim_core::critical_exponents(&tc.distribution);
                let region = classify_region(a, b, tc.dimension);
                let grid = cfg.experiment.t_grid.as_ref().expect("filled in");
                let table = tightness_probe(&tc, grid)?;
                summary.push_str(&format!(
                    "region {region}: instability score {} over {} kept trials\n",
                    table.score, table.trials
                ));
                tightness_rows(&table, seed, &[("region", region.to_string())])
            }
        },
        Subcommand::CheckScales => {
            let report = check_conditions(cfg.scales.as_ref().expect("checked"));
            summary.push_str(&report.to_table());
            let mut csv = CsvTable::new(&["condition", "index", "margin_log2", "pass", "truncated"]);
            for r in &report.rows {
                csv.push(vec![
                    r.condition.to_string(),
                    r.index.to_string(),
                    num(r.margin),
                    r.pass.to_string(),
                    r.truncated.to_string(),
                ]);
            }
            csv
        }
        Subcommand::Sweep => {
            let sw = cfg.sweep.as_ref().expect("checked");
            let model = cfg.model.expect("checked");
            let base = TrialConfig {
                dimension: model.dimension,
                lambda: model.lambda,
                distribution: hailsim_core::SizeDistribution::fixed(1.0, 1.0).expect("positive sizes"),
                window: cfg.window,
                trials: cfg.experiment.trials.expect("checked"),
                master_seed: seed,
                boundary: cfg.boundary,
            };
            let points: Vec<(f64, f64)> = sw.alphas.iter().flat_map(|&a| sw.betas.iter().map(move |&b| (a, b))).collect();
            let rows = phase_sweep(&points, &base, cfg.experiment.t_grid.as_ref().expect("filled in"))?;
            let mut csv = CsvTable::new(&with_trial_columns(&["alpha", "beta", "region", "score", "final_median"]));
            for r in &rows {
                csv.push(vec![
                    num(r.alpha),
                    num(r.beta),
                    r.region.to_string(),
                    num(r.score),
                    num(r.final_median),
                    r.trials.to_string(),
                    seed.to_string(),
                    r.discarded.to_string(),
                ]);
                summary.push_str(&format!("({}, {}) region {}: score {}\n", r.alpha, r.beta, r.region, r.score));
            }
            csv
        }
    };
    Ok(Executed {
        csv,
        summary,
        mismatches,
    })
}

/// Run a subcommand end to end and write its CSV and manifest.
pub fn run(sub: Subcommand, opts: &RunOptions) -> Result<RunOutcome, (RunError, Option<Box<RunOutcome>>)> {
    let start = Instant::now();
    let root = effective_table(sub, opts).map_err(|e| (e, None))?;
    let cfg = from_table(root).map_err(|e| (RunError::Validation(e), None))?;
    check_requirements(sub, &cfg).map_err(|e| (RunError::Validation(e), None))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| (RunError::Other(e.to_string()), None))?;
    let done = pool.install(|| execute(sub, &cfg)).map_err(|e| (e, None))?;
    let mut manifest = RunManifest {
        tool: "hailsim".into(),
        version: TOOL_VERSION.into(),
        subcommand: sub.name().into(),
        master_seed: cfg.experiment.seed.expect("filled in"),
        seed_rule: SEED_RULE_ID.into(),
        threads: pool.current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        config: echo(&cfg.source),
        csv: String::new(),
    };
    let csv_path = write_outputs(&opts.out, &mut manifest, &done.csv).map_err(|e| (RunError::Other(e.to_string()), None))?;
    let outcome = RunOutcome {
        csv_path,
        summary: done.summary,
        manifest,
    };
    if done.mismatches > 0 {
        return Err((RunError::OracleMismatch(done.mismatches), Some(Box::new(outcome))));
    }
    Ok(outcome)
}
