use std::sync::OnceLock;

use tmfa_core::antenna::YagiGeometry;
use tmfa_core::circuit::ModulatedLadder;
use tmfa_core::hbsolver::{sparams, static_sparams};
use tmfa_core::optimizer::{
    evaluate_modulation, nelder_mead, optimize_modulation, tune_equiripple, ModulationBounds, ModulationPoint,
    ModulationWeights, OptimizationReport, SearchSettings, SimplexConfig,
};
use tmfa_core::synth::{design_ladder, FilterSpec};
use tmfa_core::system::{FilteringAntennaModel, SystemConfig};

const F0: f64 = 2.4e9;

fn nominal_start() -> ModulationPoint {
    ModulationPoint {
        fm: 75e6,
        delta_m: 0.09,
        delta_phi: 56f64.to_radians(),
    }
}

fn model() -> &'static FilteringAntennaModel {
    static MODEL: OnceLock<FilteringAntennaModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        FilteringAntennaModel::build(&SystemConfig::default(), &YagiGeometry::default_at(F0), None).unwrap()
    })
}

fn optimum() -> &'static OptimizationReport {
    static REPORT: OnceLock<OptimizationReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        optimize_modulation(
            &model().ladder,
            F0,
            nominal_start(),
            &ModulationBounds::default(),
            &ModulationWeights::default(),
            &SearchSettings::default(),
        )
        .unwrap()
    })
}

fn small_search() -> SearchSettings {
    SearchSettings {
        grid: [3, 3, 4],
        grid_starts: 1,
        restarts: 1,
        simplex: SimplexConfig {
            step_fractions: vec![0.5],
            max_iterations: 60,
            tolerance: 1e-9,
            ..SimplexConfig::default()
        },
        ..SearchSettings::default()
    }
}

#[test]
fn matched_tuning_meets_return_loss() {
    let spec = FilterSpec::default();
    for q in [f64::INFINITY, 200.0, 125.0] {
        let l = design_ladder(&spec, 0.86e-12, q).unwrap();
        let r = tune_equiripple(&l, &spec).unwrap();
        assert!(r.met, "q_u = {q}: {:?}", r.metrics);
        assert!(r.metrics.min_return_loss_db >= 13.0);
        assert_eq!(r.metrics.reflection_zeros, 3);
        assert!(r.ladder.is_mirror_symmetric(1e-9));
    }
}

#[test]
fn tuned_ladder_is_returned_unchanged() {
    let spec = FilterSpec::default();
    let l = design_ladder(&spec, 0.86e-12, 125.0).unwrap();
    let once = tune_equiripple(&l, &spec).unwrap().ladder;
    let twice = tune_equiripple(&once, &spec).unwrap();
    assert!(twice.unchanged);
    for (a, b) in once.capacitance_vector().iter().zip(twice.ladder.capacitance_vector()) {
        assert!((a - b).abs() <= 1e-6 * a);
    }
}

#[test]
fn antenna_loaded_tuning_meets_relaxed_return_loss() {
    let m = model();
    assert!(m.loaded.metrics.min_return_loss_db >= 11.0, "{:?}", m.loaded.metrics);
}

#[test]
fn search_from_nominal_values_reaches_twenty_db() {
    let best = &optimum().best;
    assert!(best.isolation_db >= 20.0, "{best:?}");
    assert!(best.il_mod_db - best.il_static_db <= 1.0, "{best:?}");
}

#[test]
fn penalty_is_consistent_at_the_optimum() {
    let w = ModulationWeights::default();
    let best = &optimum().best;
    let excess = best.il_mod_db - best.il_static_db;
    assert!(excess <= w.loss_guard_db + best.il_penalty_db / w.loss_weight + 1e-12);
    let expected = -best.isolation_db.min(w.isolation_cap_db) + best.il_penalty_db;
    assert_eq!(best.objective, expected);
}

#[test]
fn search_trace_never_worsens() {
    let trace = &optimum().trace;
    assert!(trace.windows(2).all(|w| w[1].objective <= w[0].objective));
    assert_eq!(trace.last().unwrap().objective, optimum().best.objective);
}

#[test]
fn truncation_converges_at_the_optimum() {
    let p = optimum().best.point;
    let l = model().ladder.with_modulation(p.fm, p.delta_m, p.delta_phi).unwrap();
    let a = sparams(&l, 5, F0).unwrap();
    let b = sparams(&l, 7, F0).unwrap();
    assert!((a.s21_db() - b.s21_db()).abs() <= 0.01);
    assert!((a.s12_db() - b.s12_db()).abs() <= 0.01);
}

#[test]
fn flipping_the_phase_swaps_directions() {
    let p = optimum().best.point;
    let ladder = &model().ladder;
    let plus = sparams(&ladder.with_modulation(p.fm, p.delta_m, p.delta_phi).unwrap(), 5, F0).unwrap();
    let minus = sparams(&ladder.with_modulation(p.fm, p.delta_m, -p.delta_phi).unwrap(), 5, F0).unwrap();
    // the antenna-loaded ladder is only approximately symmetric
    assert!((plus.isolation_db() + minus.isolation_db()).abs() < 0.05 * plus.isolation_db());
    let sym: ModulatedLadder = {
        let spec = FilterSpec::default();
        tune_equiripple(&design_ladder(&spec, 0.86e-12, 125.0).unwrap(), &spec).unwrap().ladder
    };
    let plus = sparams(&sym.with_modulation(p.fm, p.delta_m, p.delta_phi).unwrap(), 5, F0).unwrap();
    let minus = sparams(&sym.with_modulation(p.fm, p.delta_m, -p.delta_phi).unwrap(), 5, F0).unwrap();
    assert!((plus.s21_fund().norm() - minus.s12_fund().norm()).abs() <= 1e-10);
    assert!((plus.isolation_db() + minus.isolation_db()).abs() <= 1e-8);
}

#[test]
fn pinned_zero_phase_stays_reciprocal() {
    let spec = FilterSpec::default();
    let sym = tune_equiripple(&design_ladder(&spec, 0.86e-12, 125.0).unwrap(), &spec).unwrap().ladder;
    let bounds = ModulationBounds {
        delta_phi: (0.0, 0.0),
        ..ModulationBounds::default()
    };
    let start = ModulationPoint {
        delta_phi: 0.0,
        ..nominal_start()
    };
    let r = optimize_modulation(&sym, F0, start, &bounds, &ModulationWeights::default(), &small_search()).unwrap();
    assert!(r.best.isolation_db.abs() <= 0.01, "{:?}", r.best);
}

#[test]
fn unmodulated_baseline_has_no_isolation() {
    let l = &model().ladder;
    let il = -static_sparams(&l.without_modulation(), F0).unwrap().s21_db();
    let point = ModulationPoint {
        delta_m: 0.0,
        ..nominal_start()
    };
    let e = evaluate_modulation(l, F0, point, il, &ModulationWeights::default(), 5).unwrap();
    assert!(e.isolation_db.abs() <= 1e-10);
    assert!((e.il_mod_db - il).abs() <= 1e-10);
}

#[test]
fn search_is_deterministic() {
    let run = || {
        optimize_modulation(
            &model().ladder,
            F0,
            nominal_start(),
            &ModulationBounds::default(),
            &ModulationWeights::default(),
            &small_search(),
        )
        .unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn rosenbrock_from_several_starts() {
    let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
    let cfg = SimplexConfig {
        max_iterations: 500,
        ..SimplexConfig::default()
    };
    for x0 in [[-1.2, 1.0], [0.5, -0.5], [2.0, 2.0]] {
        let r = nelder_mead(rosen, &x0, &cfg).unwrap();
        assert!(r.value <= 1e-6, "{x0:?}: {}", r.value);
    }
}
