use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmfa_core::circuit::{CapacitorWaveform, ModulatedLadder};
use tmfa_core::hbsolver::{sparams, Port};
use tmfa_core::optimizer::tune_equiripple;
use tmfa_core::synth::{design_ladder, FilterSpec};
use tmfa_core::tdoracle::{
    integrate, oracle_sparams, power_balance, Drive, OracleConfig, State, TimeDomainNetwork,
};

const FM: f64 = 75e6;
const F0: f64 = 2.4e9;

fn tuned() -> ModulatedLadder {
    let spec = FilterSpec::default();
    let l = design_ladder(&spec, 0.86e-12, 125.0).unwrap();
    tune_equiripple(&l, &spec).unwrap().ladder
}

fn operating(dphi_deg: f64) -> ModulatedLadder {
    tuned().with_modulation(FM, 0.09, dphi_deg.to_radians()).unwrap()
}

fn compare(ladder: &ModulatedLadder, f: f64, cfg: &OracleConfig, tol_db: f64) {
    let hb = sparams(ladder, 5, f).unwrap();
    let td = oracle_sparams(ladder, f, cfg).unwrap();
    let d21 = (hb.s21_db() - td.s21_db()).abs();
    let d12 = (hb.s12_db() - td.s12_db()).abs();
    assert!(d21 <= tol_db && d12 <= tol_db, "f = {f}: ΔS21 {d21:.2e} dB, ΔS12 {d12:.2e} dB");
}

#[test]
fn operating_point_matches_harmonic_balance() {
    compare(&operating(56.0), F0, &OracleConfig::default(), 0.05);
}

#[test]
fn commensurate_offsets_match_harmonic_balance() {
    let l = operating(56.0);
    for f in [2.3625e9, 2.375e9, 2.425e9, 2.4375e9, 2.38125e9] {
        compare(&l, f, &OracleConfig::default(), 0.05);
    }
}

#[test]
fn static_ladder_matches_harmonic_balance() {
    compare(&tuned(), F0, &OracleConfig::default(), 0.01);
}

#[test]
fn halving_the_step_changes_little() {
    let l = operating(56.0);
    let coarse = oracle_sparams(&l, F0, &OracleConfig::default()).unwrap();
    let fine = oracle_sparams(
        &l,
        F0,
        &OracleConfig {
            steps_per_cycle: 400,
            ..OracleConfig::default()
        },
    )
    .unwrap();
    assert!((coarse.s21_db() - fine.s21_db()).abs() <= 0.005);
    assert!((coarse.s12_db() - fine.s12_db()).abs() <= 0.005);
}

#[test]
fn phase_sign_swaps_directions() {
    let cfg = OracleConfig::default();
    let plus = oracle_sparams(&operating(56.0), F0, &cfg).unwrap();
    let minus = oracle_sparams(&operating(-56.0), F0, &cfg).unwrap();
    assert!((plus.s21_db() - minus.s12_db()).abs() <= 0.05);
    assert!((plus.s12_db() - minus.s21_db()).abs() <= 0.05);
    assert!(plus.isolation_db() * minus.isolation_db() < 0.0);
}

#[test]
fn unmodulated_power_balances() {
    let net = TimeDomainNetwork::from_ladder(&tuned()).unwrap();
    let period_steps = 200;
    let dt = 1.0 / F0 / period_steps as f64;
    let drive = Drive {
        port: Port::One,
        amplitude: 1.0,
        frequency: F0,
    };
    let steps = 4000 * period_steps;
    let traj = integrate(&net, Some(drive), &State::zero(&net), dt, steps, steps - 200 * period_steps).unwrap();
    let pb = power_balance(&traj, 100 * period_steps).unwrap();
    assert_eq!(pb.pumped, 0.0);
    assert!(pb.relative_residual() <= 1e-6, "{pb:?}");
}

#[test]
fn modulated_power_balances() {
    let net = TimeDomainNetwork::from_ladder(&operating(56.0)).unwrap();
    let net = TimeDomainNetwork { fm: FM, ..net };
    let period_steps = 6400;
    let dt = 1.0 / FM / period_steps as f64;
    let drive = Drive {
        port: Port::One,
        amplitude: 1.0,
        frequency: F0,
    };
    let steps = 200 * period_steps;
    let traj = integrate(&net, Some(drive), &State::zero(&net), dt, steps, steps - 20 * period_steps).unwrap();
    let pb = power_balance(&traj, 10 * period_steps).unwrap();
    assert!(pb.pumped != 0.0);
    assert!(pb.relative_residual() <= 1e-6, "{pb:?}");
}

#[test]
fn modulated_capacitance_stays_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1_000_000 {
        let w = CapacitorWaveform {
            c0: rng.gen_range(1e-13..1e-11),
            delta_m: rng.gen_range(0.0..0.99),
            phase: rng.gen_range(-10.0..10.0),
        };
        let t = rng.gen_range(0.0..1e-6);
        assert!(w.capacitance_at(FM, t) > 0.0);
    }
}
