use std::sync::OnceLock;

use tmfa_core::antenna::YagiGeometry;
use tmfa_core::circuit::ModulationSpec;
use tmfa_core::hbsolver::linear_grid;
use tmfa_core::optimizer::{optimize_modulation, ModulationBounds, ModulationPoint, ModulationWeights, SearchSettings};
use tmfa_core::system::{
    boresight_sweep, pattern_cuts, peak_band, reference_cuts, FilteringAntennaModel, PatternCuts, State,
    SystemConfig,
};

const F0: f64 = 2.4e9;

fn modulated() -> &'static FilteringAntennaModel {
    static MODEL: OnceLock<FilteringAntennaModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let m = FilteringAntennaModel::build(&SystemConfig::default(), &YagiGeometry::default_at(F0), None).unwrap();
        let start = ModulationPoint {
            fm: 75e6,
            delta_m: 0.09,
            delta_phi: 56f64.to_radians(),
        };
        let r = optimize_modulation(
            &m.ladder,
            F0,
            start,
            &ModulationBounds::default(),
            &ModulationWeights::default(),
            &SearchSettings::default(),
        )
        .unwrap();
        let p = r.best.point;
        m.with_modulation(ModulationSpec::progressive(3, p.fm, p.delta_m, p.delta_phi).unwrap())
            .unwrap()
    })
}

fn rows_of(cuts: &PatternCuts) -> impl Iterator<Item = &tmfa_core::system::CutRow> {
    cuts.e_plane.iter().chain(&cuts.h_plane)
}

#[test]
fn lossless_filter_is_transparent_in_band() {
    let cfg = SystemConfig {
        unloaded_q: f64::INFINITY,
        ..SystemConfig::default()
    };
    let m = FilteringAntennaModel::build(&cfg, &YagiGeometry::default_at(F0), None).unwrap();
    let best = linear_grid(2.35e9, 2.45e9, 401)
        .into_iter()
        .map(|f| m.filter_gains(f, State::Static).unwrap().0)
        .fold(f64::MIN, f64::max);
    assert!(best.abs() < 1e-4, "{best}");
    let tx = m.tx_gain(F0, 90f64.to_radians(), 0.0, State::Static).unwrap();
    assert!(tx.abs() < 0.36, "{tx}");
}

#[test]
fn reference_reads_zero_at_boresight() {
    let m = modulated();
    let r = m.reference_gain(F0, 90f64.to_radians(), 0.0).unwrap();
    assert!(r.abs() < 1e-12);
    let row = boresight_sweep(m, &[F0]).unwrap().boresight[0];
    assert!(row.reference_db.abs() < 1e-12);
}

#[test]
fn static_curve_drops_about_three_db_and_rejects_out_of_band() {
    let m = modulated();
    let grid = linear_grid(2.0e9, 2.8e9, 801);
    let rows = boresight_sweep(m, &grid).unwrap().boresight;
    let tx: Vec<f64> = rows.iter().map(|r| r.static_tx_db).collect();
    let (_, _, _, peak) = peak_band(&grid, &tx, 3.0).unwrap();
    assert!((peak + 3.0).abs() <= 1.0, "{peak}");
    for f in [0.9 * F0, 1.1 * F0] {
        let g = m.tx_gain(f, 90f64.to_radians(), 0.0, State::Static).unwrap();
        assert!(g <= peak - 11.0, "f = {f}: {g} vs peak {peak}");
    }
}

#[test]
fn modulated_peak_sits_below_static() {
    let m = modulated();
    let grid = linear_grid(2.3e9, 2.5e9, 801);
    let rows = boresight_sweep(m, &grid).unwrap().boresight;
    let st = rows.iter().map(|r| r.static_tx_db).fold(f64::MIN, f64::max);
    let md = rows.iter().map(|r| r.mod_tx_db).fold(f64::MIN, f64::max);
    let drop = st - md;
    assert!((0.2..=1.5).contains(&drop), "{drop}");
}

#[test]
fn boresight_isolation_exceeds_twenty_db() {
    let row = boresight_sweep(modulated(), &[F0]).unwrap().boresight[0];
    assert!(row.mod_rx_db <= row.mod_tx_db - 20.0, "{row:?}");
    assert_eq!(row.isolation_db, row.mod_tx_db - row.mod_rx_db);
}

#[test]
fn static_state_is_reciprocal_everywhere() {
    let m = modulated();
    for f in [2.3e9, 2.38e9, 2.4e9, 2.45e9] {
        for (t, p) in [(90.0f64, 0.0f64), (45.0, 30.0), (120.0, 200.0)] {
            let (t, p) = (t.to_radians(), p.to_radians());
            let tx = m.tx_gain(f, t, p, State::Static).unwrap();
            let rx = m.rx_gain(f, t, p, State::Static).unwrap();
            assert!((tx - rx).abs() <= 1e-10);
        }
    }
    let off = m.with_modulation(ModulationSpec::progressive(3, 75e6, 0.0, 1.0).unwrap()).unwrap();
    let tx = off.tx_gain(F0, 1.0, 0.5, State::Modulated).unwrap();
    let rx = off.rx_gain(F0, 1.0, 0.5, State::Modulated).unwrap();
    assert!((tx - rx).abs() <= 1e-10);
}

#[test]
fn isolation_is_the_same_in_every_direction() {
    let m = modulated();
    let cuts = pattern_cuts(m, F0, State::Modulated).unwrap();
    assert_eq!(cuts.e_plane.len(), 360);
    assert_eq!(cuts.h_plane.len(), 360);
    let iso = boresight_sweep(m, &[F0]).unwrap().boresight[0].isolation_db;
    for r in rows_of(&cuts) {
        assert!((r.tx_db - r.rx_db - iso).abs() <= 1e-9, "{r:?}");
    }
    let (theta, phi) = (1.234, 4.321);
    let a = m.tx_gain(F0, theta, phi, State::Modulated).unwrap() - m.rx_gain(F0, theta, phi, State::Modulated).unwrap();
    assert!((a - iso).abs() <= 1e-9);
}

#[test]
fn modulated_beam_points_endfire() {
    let cuts = pattern_cuts(modulated(), F0, State::Modulated).unwrap();
    let argmax = |rows: &[tmfa_core::system::CutRow]| {
        rows.iter().max_by(|a, b| a.tx_db.total_cmp(&b.tx_db)).unwrap().angle_deg
    };
    assert_eq!(argmax(&cuts.e_plane), 90.0);
    assert_eq!(argmax(&cuts.h_plane), 0.0);
}

#[test]
fn static_cuts_are_shifted_reference_cuts() {
    let m = modulated();
    let s = pattern_cuts(m, F0, State::Static).unwrap();
    let r = reference_cuts(m, F0).unwrap();
    let shift = s.e_plane[0].tx_db - r.e_plane[0].tx_db;
    assert!(shift < 0.0);
    for (a, b) in rows_of(&s).zip(rows_of(&r)) {
        assert_eq!(a.angle_deg, b.angle_deg);
        assert!((a.tx_db - b.tx_db - shift).abs() <= 1e-9);
        assert!((a.rx_db - b.rx_db - shift).abs() <= 1e-9);
    }
}
