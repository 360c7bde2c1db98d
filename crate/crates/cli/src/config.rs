//! Experiment configuration: TOML (sectioned key-value) or JSON input,
//! `--set` overrides on dotted keys, and validation that reports every
//! problem with the path of the offending key.

use std::fmt;

use hailsim_core::distributions::{DiscreteScales, IndependentPareto, RegionIvCoupled, DEFAULT_TRUNCATION};
use hailsim_core::scales::{build_scales, ScaleParams, ScaleSequences};
use hailsim_core::{BoundaryPolicy, Site, SizeDistribution, Window, WindowMode};
use toml::{Table, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// All problems found in a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<FieldError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ConfigErrors {
    fn single(path: &str, message: impl Into<String>) -> Self {
        ConfigErrors(vec![FieldError {
            path: path.into(),
            message: message.into(),
        }])
    }
}

/// Experiment-wide settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub t_grid: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Model {
    pub dimension: usize,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PnSpec {
    pub targets: Vec<Site>,
    pub t: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DemoSpec {
    /// Growth frequency for the coupled construction's class `i`.
    RegionIv {
        alpha: f64,
        beta: f64,
        i: usize,
        lambda: f64,
        l: f64,
        n_grid: Vec<usize>,
        half_width: i64,
    },
    /// Median `W̃(t, 0) / t` and the instability score for the configured model.
    RegionIi,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSpec {
    pub instances: usize,
    pub max_jobs: usize,
    pub probes: usize,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            instances: 200,
            max_jobs: 8,
            probes: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveSpec {
    pub times: Vec<f64>,
    pub trial: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub experiment: Experiment,
    pub model: Option<Model>,
    pub window: Window,
    pub boundary: BoundaryPolicy,
    pub distribution: Option<SizeDistribution>,
    pub scales: Option<ScaleSequences>,
    pub pn: Option<PnSpec>,
    pub demo: Option<DemoSpec>,
    pub sweep: Option<SweepSpec>,
    pub oracle: OracleSpec,
    pub evolve: Option<EvolveSpec>,
    /// The validated input, re-emitted verbatim in output headers.
    pub source: Table,
}

const SECTIONS: &[&str] = &[
    "experiment",
    "model",
    "window",
    "distribution",
    "scales",
    "pn",
    "demo",
    "sweep",
    "oracle",
    "evolve",
];

/// Parse TOML, or JSON when the text starts with `{`.
pub fn parse_text(text: &str) -> Result<Table, ConfigErrors> {
    if text.trim_start().starts_with('{') {
        let json: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ConfigErrors::single("<input>", format!("invalid JSON: {e}")))?;
        match Value::try_from(json) {
            Ok(Value::Table(t)) => Ok(t),
            Ok(_) => Err(ConfigErrors::single("<input>", "top level must be an object")),
            Err(e) => Err(ConfigErrors::single("<input>", format!("unsupported JSON value: {e}"))),
        }
    } else {
        toml::from_str(text).map_err(|e| ConfigErrors::single("<input>", format!("invalid TOML: {}", e.message())))
    }
}

/// Apply `key.path=value`; the value is read as a TOML value, falling back to
/// a bare string.
pub fn apply_override(root: &mut Table, assignment: &str) -> Result<(), ConfigErrors> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigErrors::single(assignment, "override must look like key.path=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("just parsed"),
        Err(_) => Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigErrors::single(key, "empty key segment"));
    }
    let mut table = root;
    for (k, part) in parts.iter().enumerate() {
        if k + 1 == parts.len() {
            table.insert(part.to_string(), value);
            break;
        }
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        table = match entry {
            Value::Table(t) => t,
            _ => return Err(ConfigErrors::single(&parts[..=k].join("."), "not a section")),
        };
    }
    Ok(())
}

/// Serialize a configuration table back to TOML.
pub fn echo(table: &Table) -> String {
    toml::to_string(table).expect("tables always serialize")
}

/// Parse and validate text, reporting every problem at once.
pub fn parse_config(text: &str) -> Result<Config, ConfigErrors> {
    from_table(parse_text(text)?)
}

pub fn from_table(root: Table) -> Result<Config, ConfigErrors> {
    let mut r = Reader::default();
    r.unknown(&root, "", SECTIONS);
    let empty = Table::new();

    let ex = r.section(&root, "experiment").unwrap_or(&empty);
    r.unknown(ex, "experiment", &["trials", "seed", "t_grid"]);
    let trials = r.int(ex, "experiment", "trials").and_then(|v| r.at_least(v, 1, "experiment.trials"));
    let seed = r.int(ex, "experiment", "seed").and_then(|v| match u64::try_from(v) {
        Ok(s) => Some(s),
        Err(_) => {
            r.err("experiment.seed", "must be a non-negative integer");
            None
        }
    });
    let t_grid = r.t_grid(ex);
    let experiment = Experiment {
        trials: trials.map(|v| v as usize),
        seed,
        t_grid,
    };

    let model = r.section(&root, "model").and_then(|m| {
        r.unknown(m, "model", &["dimension", "lambda"]);
        let dimension = r.req_int(m, "model", "dimension").and_then(|d| r.at_least(d, 1, "model.dimension"));
        let lambda = r.req_num(m, "model", "lambda");
        if let Some(l) = lambda {
            if !(l >= 0.0) {
                r.err("model.lambda", format!("must be >= 0, got {l}"));
            }
        }
        Some(Model {
            dimension: dimension? as usize,
            lambda: lambda.filter(|l| *l >= 0.0)?,
        })
    });
    let dim = model.map_or(1, |m| m.dimension);

    let (window, boundary) = r.window(&root);
    let scales = r.scales(&root, dim);
    let distribution = r.distribution(&root, dim, scales.as_ref());
    let pn = r.pn(&root, dim);
    let demo = r.demo(&root);
    let sweep = r.section(&root, "sweep").and_then(|s| {
        r.unknown(s, "sweep", &["alphas", "betas"]);
        let alphas = r.req_num_list(s, "sweep", "alphas");
        let betas = r.req_num_list(s, "sweep", "betas");
        Some(SweepSpec {
            alphas: alphas?,
            betas: betas?,
        })
    });
    let oracle = match r.section(&root, "oracle") {
        None => OracleSpec::default(),
        Some(o) => {
            r.unknown(o, "oracle", &["instances", "max_jobs", "probes"]);
            let d = OracleSpec::default();
            let instances = r.int(o, "oracle", "instances").and_then(|v| r.at_least(v, 1, "oracle.instances"));
            let max_jobs = r.int(o, "oracle", "max_jobs").and_then(|v| r.at_least(v, 0, "oracle.max_jobs"));
            if let Some(m) = max_jobs {
                if m > 12 {
                    r.err("oracle.max_jobs", format!("exhaustive search is capped at 12 jobs, got {m}"));
                }
            }
            let probes = r.int(o, "oracle", "probes").and_then(|v| r.at_least(v, 1, "oracle.probes"));
            OracleSpec {
                instances: instances.map_or(d.instances, |v| v as usize),
                max_jobs: max_jobs.map_or(d.max_jobs, |v| v as usize),
                probes: probes.map_or(d.probes, |v| v as usize),
            }
        }
    };
    let evolve = r.section(&root, "evolve").and_then(|e| {
        r.unknown(e, "evolve", &["times", "trial"]);
        let times = r.req_num_list(e, "evolve", "times");
        if let Some(t) = &times {
            if t.windows(2).any(|w| w[0] > w[1]) || t.iter().any(|v| !(*v >= 0.0)) {
                r.err("evolve.times", "must be sorted and >= 0");
            }
        }
        let trial = r.int(e, "evolve", "trial").and_then(|v| r.at_least(v, 0, "evolve.trial"));
        Some(EvolveSpec {
            times: times?,
            trial: trial.unwrap_or(0) as u64,
        })
    });

    if !r.errors.is_empty() {
        return Err(ConfigErrors(r.errors));
    }
    Ok(Config {
        experiment,
        model,
        window,
        boundary,
        distribution,
        scales,
        pn,
        demo,
        sweep,
        oracle,
        evolve,
        source: root,
    })
}

#[derive(Default)]
struct Reader {
    errors: Vec<FieldError>,
}

fn join(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

impl Reader {
    fn err(&mut self, path: &str, message: impl Into<String>) {
        self.errors.push(FieldError {
            path: path.to_string(),
            message: message.into(),
        });
    }

    fn unknown(&mut self, t: &Table, section: &str, allowed: &[&str]) {
        for k in t.keys() {
            if !allowed.contains(&k.as_str()) {
                self.err(&join(section, k), format!("unknown key (expected one of: {})", allowed.join(", ")));
            }
        }
    }

    fn section<'a>(&mut self, root: &'a Table, name: &str) -> Option<&'a Table> {
        match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(v) => {
                self.err(name, format!("expected a section, found {}", type_name(v)));
                None
            }
        }
    }

    fn num(&mut self, t: &Table, section: &str, key: &str) -> Option<f64> {
        match t.get(key)? {
            Value::Float(f) if f.is_finite() => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            Value::Float(f) => {
                self.err(&join(section, key), format!("must be finite, got {f}"));
                None
            }
            v => {
                self.err(&join(section, key), format!("expected a number, found {}", type_name(v)));
                None
            }
        }
    }

    fn req_num(&mut self, t: &Table, section: &str, key: &str) -> Option<f64> {
        if !t.contains_key(key) {
            self.err(&join(section, key), "missing required key");
        }
        self.num(t, section, key)
    }

    fn int(&mut self, t: &Table, section: &str, key: &str) -> Option<i64> {
        match t.get(key)? {
            Value::Integer(i) => Some(*i),
            v => {
                self.err(&join(section, key), format!("expected an integer, found {}", type_name(v)));
                None
            }
        }
    }

    fn req_int(&mut self, t: &Table, section: &str, key: &str) -> Option<i64> {
        if !t.contains_key(key) {
            self.err(&join(section, key), "missing required key");
        }
        self.int(t, section, key)
    }

    fn at_least(&mut self, v: i64, min: i64, path: &str) -> Option<i64> {
        if v < min {
            self.err(path, format!("must be >= {min}, got {v}"));
            None
        } else {
            Some(v)
        }
    }

    fn string<'a>(&mut self, t: &'a Table, section: &str, key: &str) -> Option<&'a str> {
        match t.get(key)? {
            Value::String(s) => Some(s),
            v => {
                self.err(&join(section, key), format!("expected a string, found {}", type_name(v)));
                None
            }
        }
    }

    fn num_list(&mut self, t: &Table, section: &str, key: &str) -> Option<Vec<f64>> {
        let path = join(section, key);
        match t.get(key)? {
            Value::Array(a) => {
                let mut out = Vec::with_capacity(a.len());
                for (k, v) in a.iter().enumerate() {
                    match v {
                        Value::Integer(i) => out.push(*i as f64),
                        Value::Float(f) if f.is_finite() => out.push(*f),
                        v => {
                            self.err(&format!("{path}[{k}]"), format!("expected a finite number, found {v}"));
                            return None;
                        }
                    }
                }
                if out.is_empty() {
                    self.err(&path, "must not be empty");
                    return None;
                }
                Some(out)
            }
            v => {
                self.err(&path, format!("expected a list of numbers, found {}", type_name(v)));
                None
            }
        }
    }

    fn req_num_list(&mut self, t: &Table, section: &str, key: &str) -> Option<Vec<f64>> {
        if !t.contains_key(key) {
            self.err(&join(section, key), "missing required key");
        }
        self.num_list(t, section, key)
    }

    fn t_grid(&mut self, ex: &Table) -> Option<Vec<f64>> {
        let grid = match ex.get("t_grid")? {
            Value::Table(g) => {
                self.unknown(g, "experiment.t_grid", &["start", "ratio", "count"]);
                let start = self.req_num(g, "experiment.t_grid", "start");
                let ratio = self.num(g, "experiment.t_grid", "ratio").unwrap_or(hailsim_core::estimators::DEFAULT_GRID_RATIO);
                let count = self
                    .req_int(g, "experiment.t_grid", "count")
                    .and_then(|c| self.at_least(c, 1, "experiment.t_grid.count"));
                if !(ratio > 1.0) {
                    self.err("experiment.t_grid.ratio", format!("must be > 1, got {ratio}"));
                    return None;
                }
                hailsim_core::estimators::geometric_grid(start?, ratio, count? as usize)
            }
            _ => self.num_list(ex, "experiment", "t_grid")?,
        };
        if grid.windows(2).any(|w| w[0] > w[1]) || grid.iter().any(|t| !(*t >= 0.0)) {
            self.err("experiment.t_grid", "must be sorted and >= 0");
            return None;
        }
        Some(grid)
    }

    fn window(&mut self, root: &Table) -> (Window, BoundaryPolicy) {
        let default = (Window::fixed(64), BoundaryPolicy::Exclude);
        let Some(w) = self.section(root, "window") else {
            return default;
        };
        self.unknown(w, "window", &["half_width", "mode", "boundary"]);
        let half = self
            .int(w, "window", "half_width")
            .and_then(|h| self.at_least(h, 1, "window.half_width"))
            .unwrap_or(default.0.half_width);
        let mode = match self.string(w, "window", "mode") {
            None | Some("fixed") => WindowMode::Fixed,
            Some("adaptive-influence") => WindowMode::AdaptiveInfluence,
            Some(other) => {
                self.err("window.mode", format!("unknown mode '{other}' (fixed | adaptive-influence)"));
                WindowMode::Fixed
            }
        };
        let boundary = match self.string(w, "window", "boundary") {
            None | Some("exclude") => BoundaryPolicy::Exclude,
            Some("keep") => BoundaryPolicy::Keep,
            Some(other) => {
                self.err("window.boundary", format!("unknown policy '{other}' (exclude | keep)"));
                BoundaryPolicy::Exclude
            }
        };
        (
            Window {
                half_width: half,
                mode,
            },
            boundary,
        )
    }

    fn scales(&mut self, root: &Table, dim: usize) -> Option<ScaleSequences> {
        let s = self.section(root, "scales")?;
        let p = "scales";
        if s.contains_key("spatial") || s.contains_key("temporal") {
            self.unknown(s, p, &["alpha", "beta", "spatial", "temporal", "theta"]);
            let alpha = self.req_num(s, p, "alpha");
            let beta = self.req_num(s, p, "beta");
            let spatial = self.req_num_list(s, p, "spatial");
            let temporal = self.req_num_list(s, p, "temporal");
            let theta = self.num(s, p, "theta");
            return match ScaleSequences::explicit(alpha?, beta?, dim, &spatial?, &temporal?, theta) {
                Ok(sc) => Some(sc),
                Err(e) => {
                    self.err(p, e.to_string());
                    None
                }
            };
        }
        self.unknown(
            s,
            p,
            &["alpha", "beta", "theta", "A", "kappa", "i_max", "varrho", "summability_c"],
        );
        let alpha = self.req_num(s, p, "alpha");
        let beta = self.req_num(s, p, "beta");
        let theta = self.req_num(s, p, "theta");
        let a = self.req_num(s, p, "A");
        let kappa = self.num(s, p, "kappa");
        let i_max = self.int(s, p, "i_max").and_then(|v| self.at_least(v, 1, "scales.i_max"));
        let varrho = self.num(s, p, "varrho");
        let summability_c = self.num(s, p, "summability_c");
        let mut params = ScaleParams::new(alpha?, beta?, theta?, a?, dim);
        if let Some(k) = kappa {
            params.kappa = k;
        }
        if let Some(i) = i_max {
            params.i_max = i as usize;
        }
        params.varrho = varrho;
        if let Some(c) = summability_c {
            params.summability_c = c;
        }
        match build_scales(&params) {
            Ok(sc) => Some(sc),
            Err(e) => {
                self.err(p, e.to_string());
                None
            }
        }
    }

    fn distribution(&mut self, root: &Table, dim: usize, scales: Option<&ScaleSequences>) -> Option<SizeDistribution> {
        let p = "distribution";
        let t = self.section(root, p)?;
        let kind = match t.get("kind") {
            None => {
                self.err(
                    "distribution.kind",
                    "missing required key (fixed: radius, duration | pareto: alpha, beta | \
                     discrete-scales: [scales] section | region-iv: alpha, beta)",
                );
                return None;
            }
            Some(_) => self.string(t, p, "kind")?,
        };
        let built = match kind {
            "fixed" => {
                self.unknown(t, p, &["kind", "radius", "duration"]);
                let r = self.req_num(t, p, "radius");
                let tau = self.req_num(t, p, "duration");
                SizeDistribution::fixed(r?, tau?)
            }
            "pareto" => {
                self.unknown(t, p, &["kind", "alpha", "beta", "r_min", "tau_min"]);
                let a = self.req_num(t, p, "alpha");
                let b = self.req_num(t, p, "beta");
                let rm = self.num(t, p, "r_min").unwrap_or(1.0);
                let tm = self.num(t, p, "tau_min").unwrap_or(1.0);
                IndependentPareto::with_minima(a?, b?, rm, tm, dim).map(SizeDistribution::IndependentPareto)
            }
            "discrete-scales" => {
                self.unknown(t, p, &["kind", "c1", "c2", "truncation"]);
                let c1 = self.num(t, p, "c1").unwrap_or(1.0);
                let c2 = self.num(t, p, "c2").unwrap_or(1.0);
                let trunc = self
                    .int(t, p, "truncation")
                    .and_then(|v| self.at_least(v, 1, "distribution.truncation"))
                    .map_or(DEFAULT_TRUNCATION, |v| v as usize);
                let Some(sc) = scales else {
                    if !root.contains_key("scales") {
                        self.err("scales", "missing section required by distribution.kind = \"discrete-scales\"");
                    }
                    return None;
                };
                DiscreteScales::new(sc.clone(), c1, c2, trunc).map(SizeDistribution::DiscreteScales)
            }
            "region-iv" => {
                self.unknown(t, p, &["kind", "alpha", "beta", "truncation"]);
                let a = self.req_num(t, p, "alpha");
                let b = self.req_num(t, p, "beta");
                let trunc = self
                    .int(t, p, "truncation")
                    .and_then(|v| self.at_least(v, 1, "distribution.truncation"))
                    .map_or(DEFAULT_TRUNCATION, |v| v as usize);
                RegionIvCoupled::new(a?, b?, dim, trunc).map(SizeDistribution::RegionIvCoupled)
            }
            other => {
                self.err(
                    "distribution.kind",
                    format!("unknown kind '{other}' (fixed | pareto | discrete-scales | region-iv)"),
                );
                return None;
            }
        };
        match built {
            Ok(d) => Some(d),
            Err(e) => {
                self.err(p, e.to_string());
                None
            }
        }
    }

    fn pn(&mut self, root: &Table, dim: usize) -> Option<PnSpec> {
        let t = self.section(root, "pn")?;
        self.unknown(t, "pn", &["targets", "t", "n"]);
        let targets = match t.get("targets") {
            None => {
                self.err("pn.targets", "missing required key");
                None
            }
            Some(Value::Array(a)) => {
                let mut out = Vec::new();
                for (k, v) in a.iter().enumerate() {
                    let coords: Option<Vec<i64>> = match v {
                        Value::Integer(x) => Some(vec![*x]),
                        Value::Array(c) => c.iter().map(|x| x.as_integer()).collect(),
                        _ => None,
                    };
                    match coords {
                        Some(c) if c.len() == dim => out.push(Site::new(c)),
                        _ => self.err(
                            &format!("pn.targets[{k}]"),
                            format!("expected an integer site of dimension {dim}"),
                        ),
                    }
                }
                Some(out)
            }
            Some(v) => {
                self.err("pn.targets", format!("expected a list of sites, found {}", type_name(v)));
                None
            }
        };
        let time = self.req_num(t, "pn", "t");
        let n = self.req_int(t, "pn", "n").and_then(|v| self.at_least(v, 1, "pn.n"));
        Some(PnSpec {
            targets: targets?,
            t: time?,
            n: n? as usize,
        })
    }

    fn demo(&mut self, root: &Table) -> Option<DemoSpec> {
        let t = self.section(root, "demo")?;
        let p = "demo";
        match self.string(t, p, "region") {
            Some("II") => {
                self.unknown(t, p, &["region"]);
                Some(DemoSpec::RegionIi)
            }
            Some("IV") => {
                self.unknown(t, p, &["region", "alpha", "beta", "i", "lambda", "l", "n_grid", "half_width"]);
                let alpha = self.req_num(t, p, "alpha");
                let beta = self.req_num(t, p, "beta");
                let i = self.req_int(t, p, "i").and_then(|v| self.at_least(v, 0, "demo.i"));
                let lambda = self.req_num(t, p, "lambda");
                let l = self.req_num(t, p, "l");
                let n_grid = self.req_num_list(t, p, "n_grid");
                let n_grid = n_grid.and_then(|g| {
                    if g.iter().all(|n| *n >= 1.0 && n.fract() == 0.0) {
                        Some(g.iter().map(|n| *n as usize).collect::<Vec<_>>())
                    } else {
                        self.err("demo.n_grid", "entries must be positive integers");
                        None
                    }
                });
                let half_width = self.req_int(t, p, "half_width").and_then(|v| self.at_least(v, 1, "demo.half_width"));
                if let Some(lam) = lambda {
                    if !(lam > 0.0) {
                        self.err("demo.lambda", format!("must be > 0, got {lam}"));
                    }
                }
                Some(DemoSpec::RegionIv {
                    alpha: alpha?,
                    beta: beta?,
                    i: i? as usize,
                    lambda: lambda?,
                    l: l?,
                    n_grid: n_grid?,
                    half_width: half_width?,
                })
            }
            Some(other) => {
                self.err("demo.region", format!("unknown region '{other}' (II | IV)"));
                None
            }
            None => {
                if !t.contains_key("region") {
                    self.err("demo.region", "missing required key (II | IV)");
                }
                None
            }
        }
    }
}
