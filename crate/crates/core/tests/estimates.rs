use gibbslz::estimators::{derived_seeds, median, run_cell, run_convergence, Estimator, Plan, ZetaRule};
use gibbslz::source::ModelParams;

fn plan(model: ModelParams, l_grid: Vec<u64>, seeds: usize) -> Plan {
    Plan {
        model,
        l_grid,
        zeta_rule: ZetaRule::Fixed(1.0),
        seeds: derived_seeds(5, seeds),
        estimators: vec![Estimator::Grassberger],
        tail_tol: 1e-12,
        quad_tol: 1e-10,
        mode_budget: 16,
        epsilon: 0.1,
        wall_time: false,
    }
}

#[test]
fn two_dimensional_fermi_trend() {
    let p = plan(ModelParams::fermi(1.0, 0.0, 2, 32).unwrap(), vec![32, 64, 128], 5);
    let reports = run_convergence(&p).unwrap();
    assert!(reports.iter().all(|r| r.failure.is_none()));
    let errs: Vec<f64> = p
        .l_grid
        .iter()
        .map(|&l| median(&reports.iter().filter(|r| r.l == l).map(|r| r.rel_error).collect::<Vec<_>>()))
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[2] < 0.4, "{errs:?}");
}

#[test]
fn single_cell_grid_matches_run_cell() {
    let p = plan(ModelParams::bose(1.0, 1.0, 1, 1024).unwrap(), vec![1024], 1);
    let grid = run_convergence(&p).unwrap();
    let cell = run_cell(&p, Estimator::Grassberger, 1024, p.seeds[0]);
    assert_eq!(grid, vec![cell]);
}
