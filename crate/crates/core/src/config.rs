//! Line-oriented `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored; sections are expressed with
//! dotted keys (`theta.kind`, `eigencount.epsilon`). Every problem in a file
//! is collected and reported together, each tagged with its line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::estimators::{derived_seeds, Estimator, Plan, ZetaRule, MAX_MODE_BUDGET};
use crate::source::{Dispersion, ModelParams, Statistics};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Sample,
    Entropy,
    Matchlen,
    Lz,
    Aep,
    Eigencount,
    Sweep,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Sample,
        Experiment::Entropy,
        Experiment::Matchlen,
        Experiment::Lz,
        Experiment::Aep,
        Experiment::Eigencount,
        Experiment::Sweep,
    ];
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Sample => "sample",
            Experiment::Entropy => "entropy",
            Experiment::Matchlen => "matchlen",
            Experiment::Lz => "lz",
            Experiment::Aep => "aep",
            Experiment::Eigencount => "eigencount",
            Experiment::Sweep => "sweep",
        })
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .iter()
            .copied()
            .find(|e| e.to_string() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Seeds {
    /// `count` seeds derived from the base seed.
    Count(usize),
    List(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// Model at the first grid point; `l` and `zeta` vary per cell.
    pub model: ModelParams,
    pub l_grid: Vec<u64>,
    pub zeta_rule: ZetaRule,
    pub seed: u64,
    pub seeds: Seeds,
    pub output_dir: PathBuf,
    pub tail_tol: f64,
    pub quad_tol: f64,
    pub estimators: Vec<Estimator>,
    pub mode_budget: usize,
    pub epsilon: f64,
    pub dump: bool,
    pub wall_time: bool,
}

impl RunConfig {
    pub fn seed_list(&self) -> Vec<u64> {
        match &self.seeds {
            Seeds::Count(n) => derived_seeds(self.seed, *n),
            Seeds::List(v) => v.clone(),
        }
    }

    pub fn zeta_for(&self, l: u64) -> f64 {
        self.zeta_rule.zeta(l)
    }

    pub fn plan(&self, estimators: Vec<Estimator>) -> Plan {
        Plan {
            model: self.model.clone(),
            l_grid: self.l_grid.clone(),
            zeta_rule: self.zeta_rule,
            seeds: self.seed_list(),
            estimators,
            tail_tol: self.tail_tol,
            quad_tol: self.quad_tol,
            mode_budget: self.mode_budget,
            epsilon: self.epsilon,
            wall_time: self.wall_time,
        }
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let m = &self.model;
        let mut out = String::new();
        let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        put("experiment", self.experiment.to_string());
        put("statistics", m.statistics.to_string());
        put("beta", format!("{}", m.beta));
        put("mu", format!("{}", m.mu));
        put("dim", m.dim.to_string());
        match &m.dispersion {
            Dispersion::QuadraticPeriodic => put("theta.kind", "quadratic".into()),
            Dispersion::Tabulated(pts) => {
                put("theta.kind", "tabulated".into());
                put("theta.table", join(pts.iter().map(|(t, v)| format!("{t}:{v}")).collect()));
            }
        }
        put("L", join(self.l_grid.iter().map(|l| l.to_string()).collect()));
        match self.zeta_rule {
            ZetaRule::Fixed(z) => {
                put("zeta_rule", "fixed".into());
                put("zeta", format!("{z}"));
            }
            ZetaRule::SqrtLog => put("zeta_rule", "sqrt-log".into()),
        }
        put("seed", self.seed.to_string());
        match &self.seeds {
            Seeds::Count(n) => put("seeds", n.to_string()),
            Seeds::List(v) => put("seeds.list", join(v.iter().map(|s| s.to_string()).collect())),
        }
        put("output_dir", self.output_dir.display().to_string());
        put("tail_tol", format!("{:e}", self.tail_tol));
        put("quad_tol", format!("{:e}", self.quad_tol));
        put("estimators", join(self.estimators.iter().map(|e| e.to_string()).collect()));
        put("eigencount.mode_budget", self.mode_budget.to_string());
        put("eigencount.epsilon", format!("{}", self.epsilon));
        put("dump", self.dump.to_string());
        put("wall_time", self.wall_time.to_string());
        out
    }
}

/// A configuration problem and where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub origin: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.origin, self.message)
    }
}

const KEYS: &[&str] = &[
    "experiment",
    "statistics",
    "beta",
    "mu",
    "dim",
    "theta.kind",
    "theta.table",
    "L",
    "zeta",
    "zeta_rule",
    "seed",
    "seeds",
    "seeds.list",
    "output_dir",
    "tail_tol",
    "quad_tol",
    "estimators",
    "eigencount.mode_budget",
    "eigencount.epsilon",
    "dump",
    "wall_time",
];

pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigIssue>> {
    parse_config_with(text, &[])
}

/// Parses `text` and then applies `overrides` (`key=value`, later wins).
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig, Vec<ConfigIssue>> {
    let mut issues = Vec::new();
    let mut entries: BTreeMap<String, (String, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let origin = format!("line {}", i + 1);
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        match split_entry(line) {
            Some((k, v)) => {
                if let Some((_, first)) = entries.get(&k) {
                    issues.push(issue(&origin, format!("`{k}` already set on {first}")));
                } else {
                    entries.insert(k, (v, origin));
                }
            }
            None => issues.push(issue(&origin, format!("expected `key = value`, got `{line}`"))),
        }
    }
    for o in overrides {
        let origin = format!("--set {o}");
        match split_entry(o) {
            Some((k, v)) => {
                entries.insert(k, (v, origin));
            }
            None => issues.push(issue(&origin, "expected `key=value`".into())),
        }
    }
    for (k, (_, origin)) in &entries {
        if !KEYS.contains(&k.as_str()) {
            issues.push(issue(origin, format!("unknown key `{k}`")));
        }
    }

    let mut v = Validator {
        entries: &entries,
        issues,
    };
    let experiment = v.get("experiment", Experiment::Sweep, |s| s.parse());
    let statistics = v.required("statistics", |s| s.parse::<Statistics>().map_err(|e| e.to_string()));
    let beta = v.get("beta", 1.0, parse_f64);
    let mu = v.required("mu", parse_f64);
    let dim = v.get("dim", 1usize, |s| s.parse().map_err(|_| format!("`{s}` is not a dimension")));
    let kind = v.get("theta.kind", "quadratic".to_string(), |s| match s {
        "quadratic" | "tabulated" => Ok(s.to_string()),
        _ => Err(format!("theta.kind must be quadratic or tabulated, got `{s}`")),
    });
    let table = v.optional("theta.table", parse_table);
    let dispersion = match (kind.as_str(), table) {
        ("tabulated", Some(pts)) => match Dispersion::tabulated(pts) {
            Ok(d) => Some(d),
            Err(e) => {
                v.flag("theta.table", e.to_string());
                None
            }
        },
        ("tabulated", None) => {
            v.flag("theta.kind", "tabulated dispersion needs theta.table".into());
            None
        }
        (_, Some(_)) => {
            v.flag("theta.table", "theta.table is only used with theta.kind = tabulated".into());
            None
        }
        _ => Some(Dispersion::QuadraticPeriodic),
    };
    let l_grid = v.get("L", vec![4096], |s| parse_list(s, parse_size));
    let zeta_rule_kind = v.get("zeta_rule", "fixed".to_string(), |s| match s {
        "fixed" | "sqrt-log" => Ok(s.to_string()),
        _ => Err(format!("zeta_rule must be fixed or sqrt-log, got `{s}`")),
    });
    let zeta = v.get("zeta", 1.0, parse_f64);
    if zeta_rule_kind == "sqrt-log" && entries.contains_key("zeta") {
        v.flag("zeta", "zeta is set by the sqrt-log rule; remove it".into());
    }
    let zeta_rule = if zeta_rule_kind == "sqrt-log" {
        ZetaRule::SqrtLog
    } else {
        ZetaRule::Fixed(zeta)
    };
    let seed = v.get("seed", 1u64, |s| s.parse().map_err(|_| format!("`{s}` is not a 64-bit seed")));
    let count = v.optional("seeds", |s| s.parse::<usize>().map_err(|_| format!("`{s}` is not a count")));
    let list = v.optional("seeds.list", |s| {
        parse_list(s, |x| x.parse::<u64>().map_err(|_| format!("`{x}` is not a 64-bit seed")))
    });
    let seeds = match (count, list) {
        (Some(_), Some(_)) => {
            v.flag("seeds.list", "give either seeds or seeds.list, not both".into());
            Seeds::Count(1)
        }
        (_, Some(list)) => Seeds::List(list),
        (Some(0), None) => {
            v.flag("seeds", "need at least one seed".into());
            Seeds::Count(1)
        }
        (Some(n), None) => Seeds::Count(n),
        (None, None) => Seeds::Count(1),
    };
    let output_dir = v.get("output_dir", PathBuf::from("out"), |s| Ok(PathBuf::from(s)));
    let tail_tol = v.get("tail_tol", 1e-12, parse_positive);
    let quad_tol = v.get("quad_tol", 1e-9, parse_positive);
    let estimators = v.get("estimators", vec![Estimator::Grassberger], |s| {
        parse_list(s, |x| x.parse::<Estimator>().map_err(|e| e.to_string()))
    });
    let mode_budget = v.get("eigencount.mode_budget", 16usize, |s| {
        match s.parse::<usize>() {
            Ok(n) if (1..=MAX_MODE_BUDGET).contains(&n) => Ok(n),
            _ => Err(format!("mode budget must be an integer in 1..={MAX_MODE_BUDGET}, got `{s}`")),
        }
    });
    let epsilon = v.get("eigencount.epsilon", 0.1, |s| match parse_f64(s)? {
        e if e > 0.0 && e < 1.0 => Ok(e),
        e => Err(format!("epsilon must lie in (0, 1), got {e}")),
    });
    let dump = v.get("dump", false, parse_bool);
    let wall_time = v.get("wall_time", false, parse_bool);

    let mut model = None;
    if let (Some(statistics), Some(mu), Some(dispersion)) = (statistics, mu, dispersion) {
        for &l in &l_grid {
            let built = ModelParams::new(statistics, beta, mu, dim, dispersion.clone(), l, zeta_rule.zeta(l));
            match built {
                Ok(p) => {
                    model.get_or_insert(p);
                }
                Err(e) => {
                    let key = model_key(&e.to_string());
                    v.flag(key, e.to_string());
                    break;
                }
            }
        }
    }

    let mut issues = v.issues;
    issues.sort_by_key(|i| line_number(&i.origin));
    issues.dedup();
    match model {
        Some(model) if issues.is_empty() => Ok(RunConfig {
            experiment,
            model,
            l_grid,
            zeta_rule,
            seed,
            seeds,
            output_dir,
            tail_tol,
            quad_tol,
            estimators,
            mode_budget,
            epsilon,
            dump,
            wall_time,
        }),
        _ => Err(issues),
    }
}

fn line_number(origin: &str) -> usize {
    origin
        .strip_prefix("line ")
        .and_then(|n| n.parse().ok())
        .unwrap_or(usize::MAX)
}

fn model_key(message: &str) -> &'static str {
    if message.contains("mu") {
        "mu"
    } else if message.contains("beta") {
        "beta"
    } else if message.contains("L must") {
        "L"
    } else if message.contains("zeta") {
        "zeta"
    } else if message.contains("dimension") {
        "dim"
    } else {
        "theta.kind"
    }
}

fn issue(origin: &str, message: String) -> ConfigIssue {
    ConfigIssue {
        origin: origin.to_string(),
        message,
    }
}

fn split_entry(line: &str) -> Option<(String, String)> {
    let (k, v) = line.split_once('=')?;
    let k = k.trim();
    if k.is_empty() {
        return None;
    }
    Some((k.to_string(), v.trim().to_string()))
}

struct Validator<'a> {
    entries: &'a BTreeMap<String, (String, String)>,
    issues: Vec<ConfigIssue>,
}

impl Validator<'_> {
    fn origin(&self, key: &str) -> String {
        self.entries
            .get(key)
            .map_or_else(|| "config".to_string(), |(_, o)| o.clone())
    }

    fn flag(&mut self, key: &str, message: String) {
        let origin = self.origin(key);
        self.issues.push(issue(&origin, message));
    }

    fn optional<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        let (raw, origin) = self.entries.get(key)?;
        match parse(raw) {
            Ok(v) => Some(v),
            Err(m) => {
                self.issues.push(issue(origin, format!("{key}: {m}")));
                None
            }
        }
    }

    fn get<T>(&mut self, key: &str, default: T, parse: impl Fn(&str) -> Result<T, String>) -> T {
        self.optional(key, parse).unwrap_or(default)
    }

    fn required<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        if !self.entries.contains_key(key) {
            self.issues.push(issue("config", format!("missing required key `{key}`")));
            return None;
        }
        self.optional(key, parse)
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a finite number")),
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match parse_f64(s)? {
        x if x > 0.0 => Ok(x),
        x => Err(format!("must be positive, got {x}")),
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{s}` is not a boolean")),
    }
}

/// Integer, optionally written as a power of two (`2^12`).
fn parse_size(s: &str) -> Result<u64, String> {
    let bad = || format!("`{s}` is not a size");
    let n = match s.split_once('^') {
        Some((b, e)) => {
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            let e: u32 = e.trim().parse().map_err(|_| bad())?;
            b.checked_pow(e).ok_or_else(bad)?
        }
        None => s.parse().map_err(|_| bad())?,
    };
    Ok(n)
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect();
    if items.is_empty() {
        return Err("empty list".into());
    }
    items.into_iter().map(item).collect()
}

fn parse_table(s: &str) -> Result<Vec<(f64, f64)>, String> {
    parse_list(s, |pair| {
        let (t, v) = pair
            .split_once(':')
            .ok_or_else(|| format!("table entry `{pair}` is not `t:value`"))?;
        Ok((parse_f64(t.trim())?, parse_f64(v.trim())?))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config("statistics = bose\nmu = 1\n").unwrap();
        assert_eq!(c.experiment, Experiment::Sweep);
        assert_eq!(c.model, ModelParams::bose(1.0, 1.0, 1, 4096).unwrap());
        assert_eq!(c.l_grid, vec![4096]);
        assert_eq!(c.zeta_rule, ZetaRule::Fixed(1.0));
        assert_eq!(c.seeds, Seeds::Count(1));
        assert_eq!(c.estimators, vec![Estimator::Grassberger]);
        assert_eq!((c.tail_tol, c.quad_tol), (1e-12, 1e-9));
    }

    #[test]
    fn bose_mu_constraint_is_cited() {
        let issues = parse_config("statistics = bose\nmu = -1\n").unwrap_err();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].origin, "line 2");
        assert!(issues[0].message.contains("mu > 0"));
    }

    #[test]
    fn all_problems_reported_at_once() {
        let text = "statistics = quarks\nbeta = hot\ncolour = blue\nL = 2^12, x\nseeds = 0\n";
        let issues = parse_config(text).unwrap_err();
        let origins: Vec<&str> = issues.iter().map(|i| i.origin.as_str()).collect();
        for line in ["line 1", "line 2", "line 3", "line 4", "line 5", "config"] {
            assert!(origins.contains(&line), "{line} missing from {issues:?}");
        }
    }

    #[test]
    fn roundtrip_through_text() {
        let text = "experiment = sweep\nstatistics = fermi\nbeta = 2.5\nmu = -0.25\ndim = 2\n\
                    theta.kind = tabulated\ntheta.table = 0:0, 0.5:1.5, 1:6\nL = 2^5, 64\n\
                    zeta_rule = sqrt-log\nseeds.list = 3, 9\nestimators = grassberger, eigencount\n\
                    eigencount.epsilon = 0.01\nwall_time = true\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.l_grid, vec![32, 64]);
        let again = parse_config(&c.to_text()).unwrap();
        assert_eq!(again, c);
        let plain = parse_config("statistics = bose\nmu = 0.3\nseeds = 4\n").unwrap();
        assert_eq!(parse_config(&plain.to_text()).unwrap(), plain);
    }

    #[test]
    fn overrides_win() {
        let c = parse_config_with("statistics = bose\nmu = 1\nL = 64\n", &["L=128".into(), "seed=9".into()]).unwrap();
        assert_eq!((c.l_grid[0], c.seed), (128, 9));
        let issues = parse_config_with("statistics = bose\nmu = 1\n", &["mu=0".into()]).unwrap_err();
        assert_eq!(issues[0].origin, "--set mu=0");
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let issues = parse_config("statistics = bose\nmu = 1\nmu = 2\n").unwrap_err();
        assert_eq!(issues[0].origin, "line 3");
    }
}
