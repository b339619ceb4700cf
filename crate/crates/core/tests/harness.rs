use std::f64::consts::PI;

use mairs::harness::init::{bs_initial_positions, ura_positions};
use mairs::harness::{
    circle_packing, gain_landscape, generate_scenario, initialize_variables, run_scheme, run_sweep, RunOptions,
    ScenarioParams, SchemeName, SchemeSpec, SweepConfig, SweepParam, CSV_COLUMNS,
};
use mairs::solver::{RepStatus, SolverConfig};

fn small() -> ScenarioParams {
    ScenarioParams {
        irs_elements: 6,
        paths: 4,
        ..ScenarioParams::default()
    }
}

fn opts(seed: u64) -> RunOptions {
    RunOptions {
        seed,
        ..RunOptions::default()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + b.abs())
}

#[test]
fn fpa_keeps_the_initial_layout() {
    let s = generate_scenario(4, &small()).unwrap();
    let r = run_scheme(&s, &SchemeSpec::new(SchemeName::Fpa), &SolverConfig::default(), &opts(4)).unwrap();
    let lambda = s.wavelength();
    for (a, b) in r.bs_positions.iter().zip(bs_initial_positions(s.bs_antennas, lambda)) {
        assert!(close(*a, b), "{a} vs {b}");
    }
    let packed = circle_packing(s.irs_elements, s.irs_region(), lambda);
    for (a, b) in r.irs_positions.iter().zip(&packed) {
        assert!(close(a[0], b[0]) && close(a[1], b[1]), "{a:?} vs {b:?}");
    }
}

#[test]
fn fps_leaves_every_phase_at_one() {
    let s = generate_scenario(6, &small()).unwrap();
    let r = run_scheme(&s, &SchemeSpec::new(SchemeName::ProposedFps), &SolverConfig::default(), &opts(6)).unwrap();
    let phi = r.point.unwrap().phi;
    assert!(phi.iter().all(|z| z.re == 1.0 && z.im == 0.0));
}

#[test]
fn discrete_phases_land_on_the_grid() {
    let s = generate_scenario(8, &small()).unwrap();
    let scheme = SchemeSpec::parse("proposed-OPS-DPS").unwrap();
    let r = run_scheme(&s, &scheme, &SolverConfig::default(), &opts(8)).unwrap();
    let step = 2.0 * PI / 16.0;
    for z in r.point.unwrap().phi.iter() {
        assert!((z.norm() - 1.0).abs() < 1e-12);
        let q = z.arg().rem_euclid(2.0 * PI) / step;
        assert!((q - q.round()).abs() < 1e-9, "phase index {q}");
    }
}

#[test]
fn ura_uses_the_dense_half_wavelength_grid() {
    let params = ScenarioParams {
        irs_region_wl: 2.0,
        ..small()
    };
    let s = generate_scenario(2, &params).unwrap();
    let r = run_scheme(&s, &SchemeSpec::new(SchemeName::Ura), &SolverConfig::default(), &opts(2)).unwrap();
    assert_eq!(r.irs_positions.len(), 25);
    let lambda = s.wavelength();
    // boundary points are pulled in by the pre-image clip
    let tol = 1e-9 * s.irs_region();
    for (a, b) in r.irs_positions.iter().zip(ura_positions(2.0, lambda)) {
        assert!((a[0] - b[0]).abs() < tol && (a[1] - b[1]).abs() < tol, "{a:?} vs {b:?}");
    }
    // neighbours exactly half a wavelength apart
    let d = ((r.irs_positions[1][0] - r.irs_positions[0][0]).powi(2)
        + (r.irs_positions[1][1] - r.irs_positions[0][1]).powi(2))
    .sqrt();
    assert!((d - lambda / 2.0).abs() < tol);
}

#[test]
fn impossible_rate_target_is_labelled_infeasible() {
    let params = ScenarioParams {
        min_rate: 40.0,
        ..small()
    };
    let s = generate_scenario(1, &params).unwrap();
    let cfg = SolverConfig {
        max_outer_iters: 4,
        ..SolverConfig::default()
    };
    let r = run_scheme(&s, &SchemeSpec::new(SchemeName::ProposedOps), &cfg, &opts(1)).unwrap();
    assert_eq!(r.status, RepStatus::Infeasible);
    assert!(!r.feasible);
    assert!(r.max_violation > cfg.feasibility_tol);
    assert!(r.min_user_rate < 40.0);
}

#[test]
fn feasible_flag_matches_the_reported_violation() {
    let s = generate_scenario(12, &small()).unwrap();
    let cfg = SolverConfig::default();
    for name in ["proposed-OPS", "MA-FPA", "RPS"] {
        let r = run_scheme(&s, &SchemeSpec::parse(name).unwrap(), &cfg, &opts(12)).unwrap();
        assert_eq!(r.feasible, r.status.is_feasible() && r.max_violation <= cfg.feasibility_tol, "{name}");
        let total: f64 = r.per_user_rates.iter().sum();
        assert!((total - r.sum_rate).abs() < 1e-9 * (1.0 + total));
    }
}

#[test]
fn exact_fri_matches_the_unperturbed_run() {
    let s = generate_scenario(13, &small()).unwrap();
    let scheme = SchemeSpec::new(SchemeName::ProposedOps);
    let cfg = SolverConfig::default();
    let a = run_scheme(&s, &scheme, &cfg, &opts(13)).unwrap();
    let b = run_scheme(
        &s,
        &scheme,
        &cfg,
        &RunOptions {
            angle_error: 0.0,
            response_error: 0.0,
            ..opts(13)
        },
    )
    .unwrap();
    assert_eq!(a.sum_rate, b.sum_rate);
}

fn tiny_sweep() -> SweepConfig {
    SweepConfig {
        param: SweepParam::Power,
        values: vec![24.0, 30.0],
        trials: 2,
        schemes: vec!["proposed-OPS".into(), "FPA".into()],
        seed: 7,
        scenario: small(),
        ..SweepConfig::default()
    }
}

#[test]
fn csv_output_is_byte_reproducible() {
    let cfg = tiny_sweep();
    let mut a = Vec::new();
    let mut b = Vec::new();
    run_sweep(&cfg).unwrap().write_csv(&mut a).unwrap();
    run_sweep(&cfg).unwrap().write_csv(&mut b).unwrap();
    assert_eq!(a, b);

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(lines.count(), 2 * 2 * 2);
}

#[test]
fn single_cell_sweep_has_one_row() {
    let cfg = SweepConfig {
        values: vec![30.0],
        trials: 1,
        schemes: vec!["FPA".into()],
        ..tiny_sweep()
    };
    let table = run_sweep(&cfg).unwrap();
    assert_eq!(table.rows.len(), 1);
    let row = &table.rows[0];
    assert_eq!(row.sweep_param, "P_t");
    assert_eq!(row.sweep_value, 30.0);
    assert_eq!(row.scheme, "FPA");
    assert!(row.error.is_none());
}

#[test]
fn empty_grid_is_rejected() {
    let cfg = SweepConfig {
        values: vec![],
        ..tiny_sweep()
    };
    assert!(run_sweep(&cfg).is_err());
}

#[test]
fn single_path_landscape_is_flat() {
    let params = ScenarioParams {
        irs_elements: 1,
        paths: 1,
        ..ScenarioParams::default()
    };
    let s = generate_scenario(3, &params).unwrap();
    let x = initialize_variables(&s, &SchemeSpec::new(SchemeName::ProposedOps), 3).unwrap();
    let land = gain_landscape(&s, &x, 0, 0, 21).unwrap();
    let g0 = land.gain[0][0];
    for row in &land.gain {
        for &g in row {
            assert!((g - g0).abs() <= 1e-9 * g0, "{g} vs {g0}");
        }
    }
}

#[test]
fn richer_scattering_gives_more_local_maxima() {
    let count = |paths: usize| -> usize {
        (0..10)
            .map(|seed| {
                let params = ScenarioParams {
                    paths,
                    ..ScenarioParams::default()
                };
                let s = generate_scenario(seed, &params).unwrap();
                let x = initialize_variables(&s, &SchemeSpec::new(SchemeName::ProposedOps), seed).unwrap();
                gain_landscape(&s, &x, 0, 0, 60).unwrap().local_maxima()
            })
            .sum()
    };
    let (few, many) = (count(3), count(8));
    assert!(many > few, "L=8 gives {many} maxima, L=3 gives {few}");
}

#[test]
fn landscape_header_and_shape() {
    let s = generate_scenario(1, &small()).unwrap();
    let x = initialize_variables(&s, &SchemeSpec::new(SchemeName::ProposedOps), 1).unwrap();
    let land = gain_landscape(&s, &x, 1, 2, 7).unwrap();
    let mut buf = Vec::new();
    land.write_matrix(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# extent"));
    assert_eq!(lines[1], "# resolution 7");
    assert_eq!(lines.len(), 2 + 7);
    assert!(lines[2..].iter().all(|l| l.split_whitespace().count() == 7));
    assert!(gain_landscape(&s, &x, 5, 0, 7).is_err());
}
