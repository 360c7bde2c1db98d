//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Tolerances are fixed below.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use hailsim_cli::config::OracleSpec;
use hailsim_cli::oracle::{random_instance, run_oracle_suite, TOLERANCE};
use hailsim_cli::output::csv_body;
use hailsim_core::distributions::{DiscreteScales, IndependentPareto};
use hailsim_core::estimators::stats::{clopper_pearson, mann_whitney_greater, quantile};
use hailsim_core::estimators::{
    estimate_p_n, geometric_grid, instability_score, range_profile, region_iv_growth_demo, tilde_w_samples,
    RegionIvDemo,
};
use hailsim_core::model::{derive_seed, trial_rng};
use hailsim_core::paths::tilde_w_grid;
use hailsim_core::scales::ScaleSequences;
use hailsim_core::{
    build_scales, check_conditions, probe, BoundaryPolicy, Job, Realization, ScaleParams, Site, SizeDistribution,
    TrialConfig, Window,
};
use rand::Rng;

const MASTER_SEED: u64 = 20_240_601;

// Criterion 1.
const ORACLE_INSTANCES: usize = 200;
const ORACLE_MAX_JOBS: usize = 8;
const ORACLE_PROBES: usize = 10;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
// Criteria 2 and 3.
const COUPLED_PAIRS: usize = 200;
const MONOTONE_REALIZATIONS: usize = 500;
const MONOTONE_POINTS: usize = 20;
// Criterion 4.
const SCALE_BUDGET: Duration = Duration::from_secs(1);
// Criterion 5.
const PN_TRIALS: usize = 10_000;
const PN_LEVEL: f64 = 0.005;
const PN_RATIO: f64 = 0.9;
// Criterion 6.
const GROWTH_TRIALS: usize = 200;
const DEMO_TRIALS: usize = 2000;
const TREND_P: f64 = 0.01;
const STABLE_SCORE: f64 = 0.05;
const GROWTH_BUDGET: Duration = Duration::from_secs(600);
// Criterion 7.
const RANGE_TRIALS: usize = 10_000;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn random_probes<R: Rng>(r: &Realization, rng: &mut R, count: usize) -> Vec<(f64, Site)> {
    let h = r.window().half_width;
    (0..count)
        .map(|_| {
            let t = if !r.is_empty() && rng.random_range(0..3) == 0 {
                r.jobs()[rng.random_range(0..r.len())].arrival_time
            } else {
                rng.random_range(0.0..=r.horizon())
            };
            (t, Site::new((0..r.dimension()).map(|_| rng.random_range(-h..=h))))
        })
        .collect()
}

fn oracle_equivalence() -> Verdict {
    let spec = OracleSpec {
        instances: ORACLE_INSTANCES,
        max_jobs: ORACLE_MAX_JOBS,
        probes: ORACLE_PROBES,
    };
    let start = Instant::now();
    let report = run_oracle_suite(&spec, MASTER_SEED);
    let took = start.elapsed();
    verdict(
        report.mismatches.is_empty() && took < ORACLE_BUDGET,
        format!(
            "{} instances x {} probes, tolerance {TOLERANCE:e}: {} mismatches, max |error| {:e}, {:.1} s (budget {} s)",
            report.instances,
            ORACLE_PROBES,
            report.mismatches.len(),
            report.max_abs_error,
            took.as_secs_f64(),
            ORACLE_BUDGET.as_secs()
        ),
    )
}

fn coupled_violations(stream: u64, inflate: impl Fn(&Job, &mut rand_chacha::ChaCha8Rng) -> Job) -> (usize, usize) {
    let mut violations = 0;
    let mut checks = 0;
    for k in 0..COUPLED_PAIRS {
        let mut rng = trial_rng(derive_seed(MASTER_SEED, stream), k as u64);
        let base = random_instance(&mut rng, 12);
        let big = base.map_jobs(|j| inflate(j, &mut rng)).expect("inflated jobs are valid");
        let p = random_probes(&base, &mut rng, ORACLE_PROBES);
        let lo = probe(&base, &p).expect("probes lie in the horizon");
        let hi = probe(&big, &p).expect("probes lie in the horizon");
        checks += p.len();
        violations += lo.iter().zip(&hi).filter(|(a, b)| a > b).count();
    }
    (violations, checks)
}

fn monotonicity_couplings() -> Verdict {
    let (tv, tc) = coupled_violations(1, |j, rng| {
        Job::new(j.arrival_time, j.center.clone(), j.radius, j.duration * rng.random_range(1.0..3.0)).unwrap()
    });
    let (rv, rc) = coupled_violations(2, |j, rng| {
        Job::new(j.arrival_time, j.center.clone(), j.radius + rng.random_range(0.0..2.5), j.duration).unwrap()
    });
    verdict(
        tv == 0 && rv == 0,
        format!(
            "{COUPLED_PAIRS} pairs each: duration inflation {tv}/{tc} violating probes, radius inflation {rv}/{rc}"
        ),
    )
}

fn tilde_w_monotone() -> Verdict {
    let mut violations = 0;
    for k in 0..MONOTONE_REALIZATIONS {
        let mut rng = trial_rng(derive_seed(MASTER_SEED, 3), k as u64);
        let r = random_instance(&mut rng, 30);
        let mut grid: Vec<f64> = random_probes(&r, &mut rng, MONOTONE_POINTS).into_iter().map(|p| p.0).collect();
        grid.sort_by(f64::total_cmp);
        let w = tilde_w_grid(&r, &grid);
        violations += w.windows(2).filter(|p| p[1] < p[0]).count();
    }
    verdict(
        violations == 0,
        format!("{MONOTONE_REALIZATIONS} realizations x {MONOTONE_POINTS} points: {violations} decreases"),
    )
}

fn scale_conditions() -> Verdict {
    let start = Instant::now();
    let params = |a: f64| ScaleParams::new(0.5, 3.0, 0.1, a, 1).with_kappa(0.008).with_i_max(6);
    let report = |a: f64| check_conditions(&build_scales(&params(a)).expect("valid scale parameters"));
    let grid: Vec<f64> = (0..=120).map(|k| 10f64.powf(k as f64 / 20.0)).collect();
    let passes: Vec<bool> = grid.iter().map(|&a| report(a).pass).collect();
    let Some(first) = passes.iter().position(|p| *p) else {
        return verdict(false, "no A on the scan passes".into());
    };
    let all_above = passes[first..].iter().all(|p| *p);
    let (mut lo, mut hi) = (grid[first.saturating_sub(1)], grid[first]);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if report(mid).pass {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let reports: Vec<_> = grid[first..].iter().map(|&a| report(a)).collect();
    let mut flat = 0;
    for pair in reports.windows(2) {
        for (r0, r1) in pair[0].rows.iter().zip(&pair[1].rows) {
            if r0.margin.is_finite() && !(r1.margin > r0.margin) {
                flat += 1;
            }
        }
    }
    let took = start.elapsed();
    verdict(
        all_above && flat == 0 && took < SCALE_BUDGET,
        format!(
            "A0 = {hi:.2} (scan step 10^0.05, bisected); all {} scan points above pass: {all_above}; \
             non-increasing margins: {flat}; {:.3} s (budget {} s)",
            grid.len() - first,
            took.as_secs_f64(),
            SCALE_BUDGET.as_secs()
        ),
    )
}

fn pn_decay() -> Verdict {
    let scales = ScaleSequences::explicit(0.5, 3.0, 1, &[8.0, 64.0], &[4.0, 32.0], None).expect("toy scales");
    let toy_conditions = check_conditions(&scales).pass;
    let dist = SizeDistribution::DiscreteScales(DiscreteScales::new(scales, 1.0, 1.0, 8).expect("toy law"));
    let t = 64f64.sqrt();
    let mut rows = Vec::new();
    for i in 1..=4i64 {
        let cfg = TrialConfig {
            dimension: 1,
            lambda: 0.02,
            distribution: dist.clone(),
            window: Window::fixed(512),
            trials: PN_TRIALS,
            // Independent streams per distance.
            master_seed: derive_seed(MASTER_SEED, 100 + i as u64),
            boundary: BoundaryPolicy::Exclude,
        };
        let x = (2 * i + 1) * 32;
        let table = estimate_p_n(&cfg, &[Site::d1(x)], t, 2).expect("valid p_n query");
        let row = &table.rows[0];
        rows.push((x, row.hits, row.trials, row.p_hat, table.discarded));
    }
    let mut ok = true;
    let mut ratios = Vec::new();
    for w in rows.windows(2) {
        let (_, k0, n0, p0, _) = w[0];
        let (_, k1, n1, p1, _) = w[1];
        let (lower0, _) = clopper_pearson(k0, n0, PN_LEVEL);
        let (_, upper1) = clopper_pearson(k1, n1, PN_LEVEL);
        ok &= upper1 <= PN_RATIO * lower0;
        ratios.push(p1 / p0);
    }
    let listing: Vec<String> = rows
        .iter()
        .map(|(x, _, n, p, disc)| format!("x={x}: {p:.4} (n={n}, {disc} discarded)"))
        .collect();
    verdict(
        ok,
        format!(
            "t = 8, n = 2, {}; ratios {:.3?}; exact bounds at {PN_LEVEL} per side, ratio <= {PN_RATIO}; \
             toy scales satisfy the growth conditions: {toy_conditions}",
            listing.join(", "),
            ratios
        ),
    )
}

fn ratio_samples(batch: &[Vec<f64>], k: usize, t: f64) -> Vec<f64> {
    batch.iter().map(|v| v[k] / t).collect()
}

fn instability_trends() -> Verdict {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;

    let grid = geometric_grid(4.0, 1.5, 10);
    let unstable = TrialConfig {
        dimension: 1,
        lambda: 1.0,
        distribution: SizeDistribution::IndependentPareto(IndependentPareto::new(0.5, 0.5, 1).expect("pareto")),
        window: Window::fixed(256),
        trials: GROWTH_TRIALS,
        master_seed: derive_seed(MASTER_SEED, 200),
        boundary: BoundaryPolicy::Keep,
    };
    let batch = tilde_w_samples(&unstable, &grid).expect("valid growth run");
    let medians: Vec<f64> = (0..grid.len()).map(|k| quantile(&batch.kept.iter().map(|v| v[k]).collect::<Vec<_>>(), 0.5)).collect();
    let score_ii = instability_score(&grid, &medians);
    let last = grid.len() - 1;
    let p_ii = mann_whitney_greater(&ratio_samples(&batch.kept, last, grid[last]), &ratio_samples(&batch.kept, 0, grid[0]));
    ok &= score_ii > 0.0;
    notes.push(format!(
        "region II score {score_ii:.3} (> 0), W~/t last vs first p = {p_ii:.2e}, {} of {} trials tainted (kept)",
        batch.tainted, GROWTH_TRIALS
    ));

    let demo = RegionIvDemo {
        alpha: 0.5,
        beta: 1.2,
        d: 1,
        i: 1,
        lambda: 0.05,
        l: 4.0,
        n_grid: vec![1, 2, 4, 8, 16, 32],
        half_width: 256,
        trials: DEMO_TRIALS,
        master_seed: derive_seed(MASTER_SEED, 300),
    };
    let table = region_iv_growth_demo(&demo).expect("valid demo");
    let as_f64 = |v: &[bool]| v.iter().map(|b| *b as u8 as f64).collect::<Vec<_>>();
    let ind: Vec<Vec<f64>> = table.indicators.iter().map(|v| as_f64(v)).collect();
    let mut worst_drop = 1.0f64;
    for w in ind.windows(2) {
        worst_drop = worst_drop.min(mann_whitney_greater(&w[0], &w[1]));
    }
    let rise = mann_whitney_greater(ind.last().expect("non-empty grid"), &ind[0]);
    ok &= worst_drop >= TREND_P && rise < TREND_P;
    let freqs: Vec<String> = table.rows.iter().map(|r| format!("{:.3}", r.freq)).collect();
    notes.push(format!(
        "region IV frequencies [{}] for n = {:?}; smallest decrease p = {worst_drop:.3} (>= {TREND_P}), \
         increase p = {rise:.2e} (< {TREND_P})",
        freqs.join(", "),
        demo.n_grid
    ));

    let stable = TrialConfig {
        lambda: 0.05,
        distribution: SizeDistribution::fixed(1.0, 1.0).expect("fixed law"),
        master_seed: derive_seed(MASTER_SEED, 400),
        boundary: BoundaryPolicy::Exclude,
        ..unstable
    };
    let batch = tilde_w_samples(&stable, &grid).expect("valid stable run");
    let medians: Vec<f64> = (0..grid.len()).map(|k| quantile(&batch.kept.iter().map(|v| v[k]).collect::<Vec<_>>(), 0.5)).collect();
    let score_i = instability_score(&grid, &medians);
    ok &= score_i <= STABLE_SCORE;
    notes.push(format!("region I score {score_i:.3} (<= {STABLE_SCORE})"));

    let took = start.elapsed();
    ok &= took < GROWTH_BUDGET;
    notes.push(format!("{:.1} s (budget {} s)", took.as_secs_f64(), GROWTH_BUDGET.as_secs()));
    verdict(ok, notes.join("; "))
}

fn range_bound() -> Verdict {
    let scales = ScaleSequences::explicit(0.5, 3.0, 1, &[2.0, 32.0], &[1.0, 8.0], None).expect("toy scales");
    let cfg = TrialConfig {
        dimension: 1,
        lambda: 0.05,
        distribution: SizeDistribution::DiscreteScales(DiscreteScales::new(scales, 1.0, 1.0, 8).expect("toy law")),
        window: Window::fixed(400),
        trials: RANGE_TRIALS,
        master_seed: derive_seed(MASTER_SEED, 500),
        // The bound holds per realization, so tainted trials count too.
        boundary: BoundaryPolicy::Keep,
    };
    let table = range_profile(&cfg, &[2.0, 4.0, 8.0, 16.0, 32.0, 64.0]).expect("valid range run");
    verdict(
        table.trials >= RANGE_TRIALS && table.violation_fraction == 0.0,
        format!(
            "{} trials, violation fraction {}, median D(64) = {}",
            table.trials,
            table.violation_fraction,
            table.rows.last().expect("non-empty grid").median_width
        ),
    )
}

const REPLAY_CONFIG: &str = r#"
[experiment]
trials = 48
t_grid = [1.0, 2.0, 4.0, 8.0]

[model]
dimension = 1
lambda = 0.1

[window]
half_width = 48

[distribution]
kind = "discrete-scales"

[scales]
alpha = 0.5
beta = 3.0
spatial = [2.0, 8.0]
temporal = [1.0, 4.0]

[pn]
targets = [0, 8, 16]
t = 2.0
n = 2

[demo]
region = "IV"
alpha = 0.5
beta = 1.2
i = 1
lambda = 0.2
l = 3.0
n_grid = [1, 2, 4]
half_width = 32

[sweep]
alphas = [0.5, 2.0]
betas = [0.5, 2.0]

[evolve]
times = [1.0, 4.0, 8.0]
"#;

const CHECK_SCALES_CONFIG: &str = "[scales]\nalpha = 0.5\nbeta = 3.0\ntheta = 0.1\nA = 2000.0\n";

fn run_cli(dir: &Path, config: &Path, sub: &str, threads: &str) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_hailsim"))
        .args([sub, "--seed", "77", "--threads", threads, "--config"])
        .arg(config)
        .arg("--out")
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{sub} exited with {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    fs::read_to_string(dir.join(format!("{sub}.csv"))).map_err(|e| e.to_string())
}

fn cli_replay() -> Verdict {
    let work = std::env::temp_dir().join(format!("hailsim-replay-{}", std::process::id()));
    let _ = fs::remove_dir_all(&work);
    fs::create_dir_all(&work).expect("temp dir");
    let main_cfg = work.join("replay.toml");
    let scales_cfg = work.join("scales.toml");
    fs::write(&main_cfg, REPLAY_CONFIG).expect("write config");
    fs::write(&scales_cfg, CHECK_SCALES_CONFIG).expect("write config");
    let subs = ["evolve", "oracle", "tightness", "pn-decay", "range", "unstable-demo", "check-scales", "sweep"];
    let mut differing = Vec::new();
    let mut errors = Vec::new();
    for sub in subs {
        let cfg = if sub == "check-scales" { &scales_cfg } else { &main_cfg };
        let mut bodies = Vec::new();
        for (k, threads) in ["1", "4", "4"].iter().enumerate() {
            let dir = work.join(format!("{sub}-{k}"));
            match run_cli(&dir, cfg, sub, threads) {
                Ok(text) => bodies.push(csv_body(&text)),
                Err(e) => errors.push(e),
            }
        }
        if bodies.len() == 3 && !(bodies[0] == bodies[1] && bodies[1] == bodies[2]) {
            differing.push(sub);
        }
    }
    let _ = fs::remove_dir_all(&work);
    verdict(
        errors.is_empty() && differing.is_empty(),
        format!(
            "{} subcommands x threads 1/4/4: differing bodies {:?}, failed runs {:?}",
            subs.len(),
            differing,
            errors
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("monotonicity couplings", monotonicity_couplings),
        ("W~ monotone in t", tilde_w_monotone),
        ("scale conditions", scale_conditions),
        ("p_n decay", pn_decay),
        ("instability trends", instability_trends),
        ("range bound", range_bound),
        ("CLI replay", cli_replay),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        failed += !v.pass as usize;
        println!(
            "[{}] {}. {name}: {} [{:.1} s]",
            if v.pass { "PASS" } else { "FAIL" },
            k + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
