//! Entropy estimators built from sampled arrays, the eigenvalue-counting
//! oracle, and the convergence-experiment runner.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::entropy::{riemann_entropy, vn_entropy_box, vn_entropy_orthant, EntropyKind};
use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::lzparse::{lz_entropy_estimate, lz_parse};
use crate::matchlen::{sample_field, uniform_bound_constant, MarginPolicy, MatchLengthField};
use crate::rng::derive_seed;
use crate::source::{
    aep_region, aep_statistic, fermi_occupation, sample_array, site_entropy, ModelParams, Statistics,
};

pub const MAX_MODE_BUDGET: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Estimator {
    Grassberger,
    GrassbergerGrowingZeta,
    Lz,
    Reciprocal,
    Aep,
    EigenCount,
}

impl Estimator {
    pub const ALL: [Estimator; 6] = [
        Estimator::Grassberger,
        Estimator::GrassbergerGrowingZeta,
        Estimator::Lz,
        Estimator::Reciprocal,
        Estimator::Aep,
        Estimator::EigenCount,
    ];
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Grassberger => "grassberger",
            Estimator::GrassbergerGrowingZeta => "grassberger-growing",
            Estimator::Lz => "lz",
            Estimator::Reciprocal => "reciprocal",
            Estimator::Aep => "aep",
            Estimator::EigenCount => "eigencount",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .iter()
            .copied()
            .find(|e| e.to_string() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Parse(format!("unknown estimator `{s}`")))
    }
}

/// Grassberger sum `sum_u ln L / (zeta L R_u)^d`; unbounded lengths add 0.
///
/// This tends to the entropy of the cube `[0, zeta]^d` divided by `d` times
/// its volume; reports multiply by [`report_scale`] to compare with the
/// entropy itself.
pub fn grassberger_estimate(field: &MatchLengthField, l: u64, zeta: f64, d: usize) -> Result<f64> {
    refuse_saturated(field)?;
    let lf = l as f64;
    let scale = (zeta * lf).powi(d as i32);
    Ok(field
        .lengths()
        .iter()
        .flatten()
        .map(|&r| lf.ln() / (scale * (r as f64).powi(d as i32)))
        .sum())
}

/// `d zeta^d`, the factor between [`grassberger_estimate`] and the entropy.
pub fn report_scale(zeta: f64, d: usize) -> f64 {
    d as f64 * zeta.powi(d as i32)
}

/// `sum_u R_u / (L^d ln L)` over bounded sites; its reciprocal estimates the entropy.
pub fn reciprocal_estimate(field: &MatchLengthField, l: u64, d: usize) -> Result<f64> {
    refuse_saturated(field)?;
    let lf = l as f64;
    let total: f64 = field.lengths().iter().flatten().map(|&r| r as f64).sum();
    Ok(total / (lf.powi(d as i32) * lf.ln()))
}

fn refuse_saturated(field: &MatchLengthField) -> Result<()> {
    match field.saturation_count() {
        0 => Ok(()),
        count => Err(Error::Saturated { count }),
    }
}

/// Outcome of comparing the largest finite match length with `c (ln L)^(1/d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub constant: f64,
    pub bound: f64,
    pub max_length: u32,
    pub violations: usize,
}

pub fn uniform_bound_check(params: &ModelParams, field: &MatchLengthField) -> BoundCheck {
    let constant = uniform_bound_constant(params);
    let bound = constant * (params.l as f64).ln().powf(1.0 / params.dim as f64);
    let lengths = field.lengths().iter().flatten();
    BoundCheck {
        constant,
        bound,
        max_length: lengths.clone().copied().max().unwrap_or(0),
        violations: lengths.filter(|&&r| r as f64 > bound).count(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenCount {
    /// Number of largest eigenvalues needed to reach mass `1 - epsilon`.
    pub count: u64,
    /// `ln M / L^d`.
    pub value: f64,
    pub modes: Vec<Vec<i64>>,
}

/// The `mode_budget` sites of `B(1, L)` with the largest per-site entropy
/// (ties broken by row-major position).
pub fn select_modes(params: &ModelParams, mode_budget: usize) -> Result<Vec<Vec<i64>>> {
    let window = Region::cube(1, params.l as usize, params.dim);
    let mut scored = window
        .sites()
        .map(|s| site_entropy(params, &s).map(|h| (h, s)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored.truncate(mode_budget);
    Ok(scored.into_iter().map(|(_, s)| s).collect())
}

fn eigencount_setup(params: &ModelParams, mode_budget: usize, epsilon: f64) -> Result<(Vec<Vec<i64>>, Vec<f64>)> {
    if params.statistics != Statistics::Fermi {
        return Err(Error::OracleRefused("eigenvalue counting needs a finite spectrum (fermions only)".into()));
    }
    if mode_budget > MAX_MODE_BUDGET {
        return Err(Error::OracleRefused(format!(
            "mode budget {mode_budget} exceeds {MAX_MODE_BUDGET}"
        )));
    }
    if mode_budget == 0 {
        return Err(Error::InvalidArgument("mode budget must be positive".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let modes = select_modes(params, mode_budget)?;
    let occupied = modes.iter().map(|m| fermi_occupation(params.exponent(m))).collect();
    Ok((modes, occupied))
}

/// First count whose running (compensated) sum reaches `1 - epsilon`.
fn count_to_mass<I: Iterator<Item = f64>>(sorted: I, total: u64, epsilon: f64) -> u64 {
    let goal = 1.0 - epsilon;
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for (i, w) in sorted.enumerate() {
        let t = sum + w;
        carry += if sum.abs() >= w.abs() { (sum - t) + w } else { (w - t) + sum };
        sum = t;
        if sum + carry >= goal {
            return i as u64 + 1;
        }
    }
    total
}

/// Enumerates all `2^n` eigenvalues of the truncated fermion ensemble by
/// their weights, sorts them in decreasing order and counts how many carry
/// mass `1 - epsilon`.
pub fn eigencount_oracle(params: &ModelParams, mode_budget: usize, epsilon: f64) -> Result<EigenCount> {
    let (modes, occupied) = eigencount_setup(params, mode_budget, epsilon)?;
    let mut weights = vec![1.0f64];
    for &p in &occupied {
        let empty: Vec<f64> = weights.iter().map(|w| w * (1.0 - p)).collect();
        let full: Vec<f64> = weights.iter().map(|w| w * p).collect();
        weights = empty;
        weights.extend(full);
    }
    let total = weights.len() as u64;
    weights.sort_by(|a, b| b.total_cmp(a));
    let count = count_to_mass(weights.into_iter(), total, epsilon);
    Ok(EigenCount {
        count,
        value: (count as f64).ln() / params.volume(),
        modes,
    })
}

/// Same count, enumerating log-weights and sorting those instead.
pub fn eigencount_by_log_weights(params: &ModelParams, mode_budget: usize, epsilon: f64) -> Result<EigenCount> {
    let (modes, occupied) = eigencount_setup(params, mode_budget, epsilon)?;
    let mut logs = Vec::with_capacity(1 << modes.len());
    for mask in 0u64..(1u64 << modes.len()) {
        let lw: f64 = occupied
            .iter()
            .enumerate()
            .map(|(i, &p)| if mask >> i & 1 == 1 { p.ln() } else { (-p).ln_1p() })
            .sum();
        logs.push(lw);
    }
    let total = logs.len() as u64;
    logs.sort_by(|a, b| b.total_cmp(a));
    let count = count_to_mass(logs.into_iter().map(f64::exp), total, epsilon);
    Ok(EigenCount {
        count,
        value: (count as f64).ln() / params.volume(),
        modes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZetaRule {
    Fixed(f64),
    /// `zeta_L = sqrt(ln L)`.
    SqrtLog,
}

impl ZetaRule {
    pub fn zeta(&self, l: u64) -> f64 {
        match *self {
            ZetaRule::Fixed(z) => z,
            ZetaRule::SqrtLog => (l as f64).ln().sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    /// Model parameters; `l` and `zeta` are overridden per cell.
    pub model: ModelParams,
    pub l_grid: Vec<u64>,
    pub zeta_rule: ZetaRule,
    pub seeds: Vec<u64>,
    pub estimators: Vec<Estimator>,
    pub tail_tol: f64,
    pub quad_tol: f64,
    pub mode_budget: usize,
    pub epsilon: f64,
    pub wall_time: bool,
}

/// Seeds `derive_seed(base, i)` for `i < count`.
pub fn derived_seeds(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| derive_seed(base, i)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub estimator: Estimator,
    pub statistics: Statistics,
    pub d: usize,
    pub beta: f64,
    pub mu: f64,
    pub zeta: f64,
    pub l: u64,
    pub seed: u64,
    pub value: f64,
    pub target: f64,
    pub target_kind: EntropyKind,
    pub rel_error: f64,
    pub saturation_count: usize,
    pub wall_time: Option<f64>,
    pub failure: Option<String>,
}

pub const REPORT_HEADER: &str =
    "estimator,statistics,d,beta,mu,zeta,L,seed,value,target,rel_error,saturation_count,wall_time";

fn csv_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "NA".into()
    }
}

impl EstimateReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.estimator,
            self.statistics,
            self.d,
            self.beta,
            self.mu,
            self.zeta,
            self.l,
            self.seed,
            csv_number(self.value),
            csv_number(self.target),
            csv_number(self.rel_error),
            self.saturation_count,
            self.wall_time.map_or_else(|| "NA".to_string(), |t| format!("{t:.3}")),
        )
    }
}

pub fn write_reports<W: Write>(reports: &[EstimateReport], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in reports {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

pub fn relative_error(value: f64, target: f64) -> f64 {
    if target > 0.0 {
        (value - target).abs() / target
    } else {
        f64::NAN
    }
}

struct Outcome {
    value: f64,
    target: f64,
    target_kind: EntropyKind,
    zeta: f64,
    saturation_count: usize,
}

/// One (estimator, L, seed) cell.
pub fn run_cell(plan: &Plan, estimator: Estimator, l: u64, seed: u64) -> EstimateReport {
    let started = Instant::now();
    let zeta = match estimator {
        Estimator::GrassbergerGrowingZeta => ZetaRule::SqrtLog.zeta(l),
        _ => plan.zeta_rule.zeta(l),
    };
    let outcome = evaluate(plan, estimator, l, zeta, seed);
    let m = &plan.model;
    let mut report = EstimateReport {
        estimator,
        statistics: m.statistics,
        d: m.dim,
        beta: m.beta,
        mu: m.mu,
        zeta,
        l,
        seed,
        value: f64::NAN,
        target: f64::NAN,
        target_kind: EntropyKind::Box,
        rel_error: f64::NAN,
        saturation_count: 0,
        wall_time: None,
        failure: None,
    };
    match outcome {
        Ok(o) => {
            report.value = o.value;
            report.target = o.target;
            report.target_kind = o.target_kind;
            report.rel_error = relative_error(o.value, o.target);
            report.zeta = o.zeta;
            report.saturation_count = o.saturation_count;
        }
        Err(e) => {
            if let Error::Saturated { count } = e {
                report.saturation_count = count;
            }
            report.failure = Some(e.to_string());
        }
    }
    if plan.wall_time {
        report.wall_time = Some(started.elapsed().as_secs_f64());
    }
    report
}

fn evaluate(plan: &Plan, estimator: Estimator, l: u64, zeta: f64, seed: u64) -> Result<Outcome> {
    let params = plan.model.with_l(l)?.with_zeta(zeta)?;
    let d = params.dim;
    let policy = MarginPolicy::Support { tail_tol: plan.tail_tol };
    let box_target = || vn_entropy_box(&params, zeta, plan.quad_tol).map(|e| e.value);
    let outcome = |value, target, target_kind, saturation_count| Outcome {
        value,
        target,
        target_kind,
        zeta,
        saturation_count,
    };
    match estimator {
        Estimator::Grassberger => {
            let run = sample_field(&params, seed, policy)?;
            let value = grassberger_estimate(&run.field, l, zeta, d)? * report_scale(zeta, d);
            Ok(outcome(value, box_target()?, EntropyKind::Box, 0))
        }
        Estimator::GrassbergerGrowingZeta => {
            let run = sample_field(&params, seed, policy)?;
            let value = grassberger_estimate(&run.field, l, zeta, d)? * report_scale(zeta, d);
            let target = vn_entropy_orthant(&params, plan.quad_tol)?.value;
            Ok(outcome(value, target, EntropyKind::Box, 0))
        }
        Estimator::Reciprocal => {
            let run = sample_field(&params, seed, policy)?;
            let value = 1.0 / reciprocal_estimate(&run.field, l, d)?;
            Ok(outcome(value, box_target()?, EntropyKind::Box, 0))
        }
        Estimator::Lz => {
            if d != 1 {
                return Err(Error::InvalidArgument("the LZ estimator is one-dimensional".into()));
            }
            let window = params.window();
            let array = sample_array(&params, &window, seed)?;
            let value = lz_entropy_estimate(&lz_parse(array.values()), l);
            Ok(outcome(value, box_target()?, EntropyKind::Box, 0))
        }
        Estimator::Aep => {
            let region = aep_region(&params, plan.tail_tol)?;
            let array = sample_array(&params, &region, seed)?;
            let value = aep_statistic(&params, &array, plan.tail_tol)?;
            let target = riemann_entropy(&params, &region)?.value;
            Ok(outcome(value, target, EntropyKind::RiemannSum, 0))
        }
        Estimator::EigenCount => {
            let oracle = eigencount_oracle(&params, plan.mode_budget, plan.epsilon)?;
            let target: f64 = oracle
                .modes
                .iter()
                .map(|m| site_entropy(&params, m))
                .sum::<Result<f64>>()?
                / params.volume();
            Ok(outcome(oracle.value, target, EntropyKind::RiemannSum, 0))
        }
    }
}

/// Runs every (estimator, L, seed) cell of the plan in parallel and returns
/// the reports sorted by (estimator, L, seed). `GIBBSLZ_THREADS` caps the
/// worker count.
pub fn run_convergence(plan: &Plan) -> Result<Vec<EstimateReport>> {
    if plan.l_grid.is_empty() || plan.seeds.is_empty() || plan.estimators.is_empty() {
        return Err(Error::InvalidArgument("empty L grid, seed list or estimator set".into()));
    }
    let mut cells = Vec::new();
    for &e in &plan.estimators {
        for &l in &plan.l_grid {
            for &s in &plan.seeds {
                cells.push((e, l, s));
            }
        }
    }
    let work = || -> Vec<EstimateReport> { cells.par_iter().map(|&(e, l, s)| run_cell(plan, e, l, s)).collect() };
    let mut reports = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    reports.sort_by(|a, b| (a.estimator, a.l, a.seed).cmp(&(b.estimator, b.l, b.seed)));
    Ok(reports)
}

fn thread_cap() -> Option<usize> {
    std::env::var("GIBBSLZ_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Median of the finite values; `NaN` if there are none.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
