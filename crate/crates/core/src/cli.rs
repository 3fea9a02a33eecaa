//! Experiment execution: CSV, dump and summary emission for a [`RunConfig`].

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{Experiment, RunConfig};
use crate::entropy::{riemann_entropy, vn_entropy_box, vn_entropy_full, EntropyValue};
use crate::error::{Error, Result};
use crate::estimators::{
    grassberger_estimate, median, run_convergence, uniform_bound_check, write_reports, EstimateReport, Estimator,
};
use crate::lzparse::lz_parse;
use crate::matchlen::{sample_field, MarginPolicy};
use crate::source::{log_weight, sample_array};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("{}: {e}", path.display()));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

struct Sink {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Sink {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.files.push(path);
        Ok(())
    }
}

/// Runs the configured experiment, writing its outputs under `output_dir`.
/// Per-cell failures are recorded and give exit code 2; I/O failures abort.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    fs::create_dir_all(&config.output_dir)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", config.output_dir.display())))?;
    let mut sink = Sink {
        dir: config.output_dir.clone(),
        files: Vec::new(),
    };
    let mut summary = String::new();
    let m = &config.model;
    let _ = writeln!(
        summary,
        "experiment {} | {} d={} beta={} mu={} | L {:?} | seeds {}",
        config.experiment,
        m.statistics,
        m.dim,
        m.beta,
        m.mu,
        config.l_grid,
        config.seed_list().len()
    );
    let failures = match config.experiment {
        Experiment::Sample => run_sample(config, &mut sink, &mut summary)?,
        Experiment::Entropy => run_entropy(config, &mut sink, &mut summary)?,
        Experiment::Matchlen => run_matchlen(config, &mut sink, &mut summary)?,
        Experiment::Lz => run_reports(config, vec![Estimator::Lz], &mut sink, &mut summary)?,
        Experiment::Aep => run_reports(config, vec![Estimator::Aep], &mut sink, &mut summary)?,
        Experiment::Eigencount => run_reports(config, vec![Estimator::EigenCount], &mut sink, &mut summary)?,
        Experiment::Sweep => run_reports(config, config.estimators.clone(), &mut sink, &mut summary)?,
    };
    if failures > 0 {
        let _ = writeln!(summary, "{failures} cell(s) failed");
    }
    sink.put("summary.txt", summary.as_bytes())?;
    Ok(RunOutcome {
        exit_code: if failures > 0 { EXIT_PARTIAL } else { EXIT_OK },
        files: sink.files,
        summary,
    })
}

fn cells(config: &RunConfig) -> Vec<(u64, u64)> {
    let seeds = config.seed_list();
    config
        .l_grid
        .iter()
        .flat_map(|&l| seeds.iter().map(move |&s| (l, s)))
        .collect()
}

fn run_sample(config: &RunConfig, sink: &mut Sink, summary: &mut String) -> Result<usize> {
    let rows: Vec<(u64, u64, Result<(String, Option<String>)>)> = cells(config)
        .into_par_iter()
        .map(|(l, seed)| {
            let out = (|| {
                let params = config.model.with_l(l)?.with_zeta(config.zeta_for(l))?;
                let window = params.window();
                let array = sample_array(&params, &window, seed)?;
                let occupied: u64 = array.values().iter().map(|&k| k as u64).sum();
                let lw = log_weight(&params, &array, &window)?;
                let row = format!(
                    "{l},{seed},{},{occupied},{},{lw}",
                    window.len(),
                    occupied as f64 / window.len() as f64
                );
                Ok((row, config.dump.then(|| array.to_dump_string())))
            })();
            (l, seed, out)
        })
        .collect();
    let mut csv = String::from("L,seed,sites,total_occupation,mean_occupation,log_weight\n");
    let mut failures = 0;
    for (l, seed, row) in rows {
        match row {
            Ok((line, dump)) => {
                csv.push_str(&line);
                csv.push('\n');
                let _ = writeln!(summary, "{line}");
                if let Some(text) = dump {
                    sink.put(&format!("array_L{l}_seed{seed}.txt"), text.as_bytes())?;
                }
            }
            Err(e) => {
                failures += 1;
                let _ = writeln!(summary, "L={l} seed={seed} failed: {e}");
            }
        }
    }
    sink.put("sample.csv", csv.as_bytes())?;
    Ok(failures)
}

fn entropy_row(e: &EntropyValue, zeta: Option<f64>, l: Option<u64>) -> String {
    let opt = |x: Option<String>| x.unwrap_or_else(|| "NA".into());
    format!(
        "{},{},{},{},{}",
        e.kind,
        opt(zeta.map(|z| format!("{z}"))),
        opt(l.map(|l| l.to_string())),
        e.value,
        e.est_abs_error
    )
}

fn run_entropy(config: &RunConfig, sink: &mut Sink, summary: &mut String) -> Result<usize> {
    let mut csv = String::from("kind,zeta,L,value,est_abs_error\n");
    let mut failures = 0;
    let mut push = |row: Result<String>, summary: &mut String| match row {
        Ok(line) => {
            let _ = writeln!(summary, "{line}");
            csv.push_str(&line);
            csv.push('\n');
        }
        Err(e) => {
            failures += 1;
            let _ = writeln!(summary, "failed: {e}");
        }
    };
    let m = &config.model;
    push(vn_entropy_full(m, config.quad_tol).map(|e| entropy_row(&e, None, None)), summary);
    let mut zetas: Vec<f64> = config.l_grid.iter().map(|&l| config.zeta_for(l)).collect();
    zetas.sort_by(f64::total_cmp);
    zetas.dedup();
    for z in zetas {
        push(vn_entropy_box(m, z, config.quad_tol).map(|e| entropy_row(&e, Some(z), None)), summary);
    }
    for &l in &config.l_grid {
        let z = config.zeta_for(l);
        let row = m
            .with_l(l)
            .and_then(|p| p.with_zeta(z))
            .and_then(|p| riemann_entropy(&p, &p.window()))
            .map(|e| entropy_row(&e, Some(z), Some(l)));
        push(row, summary);
    }
    sink.put("entropy.csv", csv.as_bytes())?;
    Ok(failures)
}

fn run_matchlen(config: &RunConfig, sink: &mut Sink, summary: &mut String) -> Result<usize> {
    let policy = MarginPolicy::Support {
        tail_tol: config.tail_tol,
    };
    let rows: Vec<(u64, u64, Result<(String, Option<Vec<u8>>)>)> = cells(config)
        .into_par_iter()
        .map(|(l, seed)| {
            let out = (|| {
                let zeta = config.zeta_for(l);
                let params = config.model.with_l(l)?.with_zeta(zeta)?;
                let run = sample_field(&params, seed, policy)?;
                let f = &run.field;
                let check = uniform_bound_check(&params, f);
                let g = grassberger_estimate(f, l, zeta, params.dim)?;
                let row = format!(
                    "{l},{seed},{},{},{},{},{},{},{g}",
                    f.window().len(),
                    f.unbounded_count(),
                    f.saturation_count(),
                    check.max_length,
                    check.bound,
                    check.violations
                );
                let dump = if config.dump {
                    let mut buf = Vec::new();
                    f.write_csv(&mut buf).map_err(|e| Error::InvalidArgument(e.to_string()))?;
                    Some(buf)
                } else {
                    None
                };
                Ok((row, dump))
            })();
            (l, seed, out)
        })
        .collect();
    let mut csv = String::from("L,seed,sites,unbounded,saturated,max_R,bound,violations,grassberger\n");
    let mut failures = 0;
    for (l, seed, row) in rows {
        match row {
            Ok((line, dump)) => {
                csv.push_str(&line);
                csv.push('\n');
                let _ = writeln!(summary, "{line}");
                if let Some(bytes) = dump {
                    sink.put(&format!("field_L{l}_seed{seed}.csv"), &bytes)?;
                }
            }
            Err(e) => {
                failures += 1;
                let _ = writeln!(summary, "L={l} seed={seed} failed: {e}");
            }
        }
    }
    sink.put("matchlen.csv", csv.as_bytes())?;
    Ok(failures)
}

fn run_reports(config: &RunConfig, estimators: Vec<Estimator>, sink: &mut Sink, summary: &mut String) -> Result<usize> {
    let reports = run_convergence(&config.plan(estimators.clone()))?;
    let mut csv = Vec::new();
    write_reports(&reports, &mut csv).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    sink.put("report.csv", &csv)?;
    if config.dump && estimators.contains(&Estimator::Lz) && config.model.dim == 1 {
        for (l, seed) in cells(config) {
            let params = config.model.with_l(l)?.with_zeta(config.zeta_for(l))?;
            let array = sample_array(&params, &params.window(), seed)?;
            let mut buf = Vec::new();
            lz_parse(array.values())
                .write_csv(&mut buf)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            sink.put(&format!("parse_L{l}_seed{seed}.csv"), &buf)?;
        }
    }
    summary.push_str(&render_summary(&reports));
    Ok(reports.iter().filter(|r| r.failure.is_some()).count())
}

/// Per-cell values (formatted exactly as in the CSV) followed by a table of
/// median relative error against L for each estimator.
pub fn render_summary(reports: &[EstimateReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "estimator L seed value target rel_error");
    for r in reports {
        let row = r.csv_row();
        let f: Vec<&str> = row.split(',').collect();
        let _ = write!(out, "{} {} {} {} {} {}", f[0], f[6], f[7], f[8], f[9], f[10]);
        if let Some(why) = &r.failure {
            let _ = write!(out, "  FAILED: {why}");
        }
        out.push('\n');
    }
    let mut estimators: Vec<Estimator> = reports.iter().map(|r| r.estimator).collect();
    estimators.dedup();
    for e in estimators {
        let _ = writeln!(out, "\n{e}: median relative error by L (target {})", target_name(reports, e));
        let mut ls: Vec<u64> = reports.iter().filter(|r| r.estimator == e).map(|r| r.l).collect();
        ls.dedup();
        for l in ls {
            let errs: Vec<f64> = reports
                .iter()
                .filter(|r| r.estimator == e && r.l == l)
                .map(|r| r.rel_error)
                .collect();
            let med = median(&errs);
            let bar = if med.is_finite() {
                "#".repeat(((med * 50.0).round() as usize).min(60))
            } else {
                "?".into()
            };
            let _ = writeln!(out, "  L={l:>9}  {:>10}  |{bar}", format_error(med));
        }
    }
    out
}

fn target_name(reports: &[EstimateReport], e: Estimator) -> String {
    reports
        .iter()
        .find(|r| r.estimator == e && r.failure.is_none())
        .map_or_else(|| "n/a".into(), |r| r.target_kind.to_string())
}

fn format_error(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.4}")
    } else {
        "NA".into()
    }
}
