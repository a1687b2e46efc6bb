//! The six subcommands. Each computes everything in memory and returns the
//! finished files; nothing touches the disk until the command succeeded.

use tmfa_core::antenna::{impedance_table, pattern_with_grid, PatternGrid};
use tmfa_core::circuit::{ModulatedLadder, ModulationSpec};
use tmfa_core::hbsolver::{self, HarmonicResponse};
use tmfa_core::optimizer::{optimize_modulation, passband_metrics, tune_equiripple};
use tmfa_core::synth::design_ladder;
use tmfa_core::system::{
    boresight_sweep, crossing_band, pattern_cuts, peak_band, reference_cuts, CutRow, FilteringAntennaModel, State,
};
use tmfa_core::tdoracle::{common_period, oracle_sparams};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{fmt, Csv, OutputFile};

/// Which filter states a command covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Both,
    Static,
    Modulated,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<OutputFile>,
    pub summary: Vec<String>,
    /// Set when the results are complete but fail the command's gate.
    pub failure: Option<CliError>,
}

fn matched_ladder(cfg: &RunConfig) -> Result<(ModulatedLadder, tmfa_core::optimizer::TuneReport), CliError> {
    let spec = cfg.filter_spec();
    let initial = design_ladder(&spec, cfg.filter.resonator_capacitance, cfg.filter.unloaded_q)?;
    let report = tune_equiripple(&initial, &spec)?;
    Ok((report.ladder.clone(), report))
}

fn build_model(cfg: &RunConfig, modulation: Option<ModulationSpec>) -> Result<FilteringAntennaModel, CliError> {
    Ok(FilteringAntennaModel::build(&cfg.system_config(), &cfg.geometry(), modulation)?)
}

/// 10-dB return-loss band around the point nearest `f0`, as a fraction of
/// `f0`.
fn return_loss_band(freqs: &[f64], s11_db: &[f64], f0: f64) -> Option<f64> {
    let center = freqs
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - f0).abs().total_cmp(&(b.1 - f0).abs()))?
        .0;
    crossing_band(freqs, s11_db, center, -10.0, false).map(|(lo, hi)| (hi - lo) / f0)
}

pub fn synth(cfg: &RunConfig, toml: &str) -> Result<Outcome, CliError> {
    let spec = cfg.filter_spec();
    let (ladder, report) = matched_ladder(cfg)?;
    if !report.met {
        return Err(CliError::Tuner(format!(
            "tuned return loss {:.3} dB with {} reflection zeros misses rl = {} dB / {} zeros",
            report.metrics.min_return_loss_db, report.metrics.reflection_zeros, spec.rl, spec.order
        )));
    }
    let mut csv = Csv::new("synth", toml, &["element", "index", "value"]);
    let mut push = |name: &str, i: usize, v: f64| csv.raw_row(&[name.to_string(), i.to_string(), fmt(v)]);
    push("external_in_f", 0, ladder.external_in);
    for (i, r) in ladder.resonators.iter().enumerate() {
        push("inductance_h", i, r.inductance);
        push("capacitance_f", i, r.capacitance);
        push("conductance_s", i, r.conductance);
    }
    for (i, c) in ladder.coupling.iter().enumerate() {
        push("coupling_f", i, *c);
    }
    push("external_out_f", 0, ladder.external_out);
    let m = passband_metrics(&ladder, &spec)?;
    Ok(Outcome {
        files: vec![csv.finish("ladder.csv")],
        summary: vec![
            format!("resonators = {}", ladder.order()),
            format!("min_return_loss_db = {:.4}", m.min_return_loss_db),
            format!("reflection_zeros = {}", m.reflection_zeros),
            format!("tuner_evaluations = {}", report.evaluations),
        ],
        failure: None,
    })
}

fn sweep_file(
    name: &str,
    ladder: &ModulatedLadder,
    cfg: &RunConfig,
    toml: &str,
    summary: &mut Vec<String>,
) -> Result<OutputFile, CliError> {
    let grid = cfg.sweep_grid();
    let k_max = cfg.solver.k_max;
    let points = hbsolver::sweep(ladder, k_max, &grid)?;
    let mut responses: Vec<HarmonicResponse> = Vec::with_capacity(points.len());
    for p in points {
        let r = p
            .result
            .map_err(|e| CliError::Solver(format!("at f = {} Hz: {e}", p.frequency)))?;
        responses.push(r);
    }
    let mut columns: Vec<String> = ["f_hz", "s11_db", "s21_db", "s12_db", "iso_db"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let sidebands: Vec<i32> = if cfg.sweep.harmonics {
        (-(k_max as i32)..=k_max as i32).filter(|&k| k != 0).collect()
    } else {
        Vec::new()
    };
    for k in &sidebands {
        columns.push(format!("s21_k{k}_db"));
        columns.push(format!("s12_k{k}_db"));
    }
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut csv = Csv::new("sweep", toml, &cols);
    let db = |z: num_complex::Complex64| 20.0 * z.norm().log10();
    for r in &responses {
        let mut row = vec![r.frequency, r.s11_db(), r.s21_db(), r.s12_db(), r.isolation_db()];
        for &k in &sidebands {
            // static responses carry no sidebands
            let (a, b) = if (k.unsigned_abs() as usize) <= r.k_max {
                (db(r.s21[r.slot(k)]), db(r.s12[r.slot(k)]))
            } else {
                (f64::NEG_INFINITY, f64::NEG_INFINITY)
            };
            row.push(a);
            row.push(b);
        }
        csv.row(&row);
    }
    let s11: Vec<f64> = responses.iter().map(|r| r.s11_db()).collect();
    let label = name.trim_end_matches(".csv");
    match return_loss_band(&grid, &s11, cfg.filter.f0) {
        Some(b) => summary.push(format!("{label}_rl10_fbw = {:.5}", b)),
        None => summary.push(format!("{label}_rl10_fbw = none")),
    }
    Ok(csv.finish(name))
}

pub fn sweep(cfg: &RunConfig, toml: &str, mode: Mode) -> Result<Outcome, CliError> {
    let (ladder, _) = matched_ladder(cfg)?;
    let mut files = Vec::new();
    let mut summary = Vec::new();
    if mode != Mode::Modulated {
        files.push(sweep_file("sweep_static.csv", &ladder.without_modulation(), cfg, toml, &mut summary)?);
    }
    if mode != Mode::Static {
        let m = cfg
            .active_modulation()
            .ok_or_else(|| CliError::Validation("modulated sweep requested with modulation.enabled = false".into()))?;
        let l = ladder.with_modulation_spec(m)?;
        files.push(sweep_file("sweep_modulated.csv", &l, cfg, toml, &mut summary)?);
    }
    Ok(Outcome {
        files,
        summary,
        failure: None,
    })
}

pub fn boresight(cfg: &RunConfig, toml: &str) -> Result<Outcome, CliError> {
    let model = build_model(cfg, cfg.active_modulation())?;
    let grid = cfg.sweep_grid();
    let report = boresight_sweep(&model, &grid)?;
    let mut csv = Csv::new(
        "boresight",
        toml,
        &["f_hz", "ref_db", "static_tx_db", "mod_tx_db", "mod_rx_db", "iso_db"],
    );
    for r in &report.boresight {
        csv.row(&[r.frequency, r.reference_db, r.static_tx_db, r.mod_tx_db, r.mod_rx_db, r.isolation_db]);
    }
    let mut summary = Vec::new();
    let st: Vec<f64> = report.boresight.iter().map(|r| r.static_tx_db).collect();
    if let Some((lo, hi, fp, peak)) = peak_band(&grid, &st, 3.0) {
        summary.push(format!("static_peak_db = {peak:.4} at {fp} Hz"));
        summary.push(format!("static_fbw_3db = {:.5}", (hi - lo) / cfg.filter.f0));
    }
    let f0 = cfg.filter.f0;
    let (theta, phi) = (90f64.to_radians(), 0.0);
    let tx = model.tx_gain(f0, theta, phi, State::Modulated)?;
    let rx = model.rx_gain(f0, theta, phi, State::Modulated)?;
    summary.push(format!("f0_mod_tx_db = {tx:.4}"));
    summary.push(format!("f0_isolation_db = {:.4}", tx - rx));
    Ok(Outcome {
        files: vec![csv.finish("boresight.csv")],
        summary,
        failure: None,
    })
}

fn cut_file(name: &str, rows: &[CutRow], toml: &str) -> OutputFile {
    let mut csv = Csv::new("pattern", toml, &["angle_deg", "tx_db", "rx_db"]);
    for r in rows {
        csv.row(&[r.angle_deg, r.tx_db, r.rx_db]);
    }
    csv.finish(name)
}

pub fn pattern(cfg: &RunConfig, toml: &str, mode: Mode) -> Result<Outcome, CliError> {
    let f0 = cfg.filter.f0;
    let geom = cfg.geometry();
    let step = cfg.antenna.pattern_step_deg;
    let p = pattern_with_grid(
        &geom,
        f0,
        PatternGrid {
            theta_step_deg: step,
            phi_step_deg: step,
        },
    )?;
    let mut pat = Csv::new("pattern", toml, &["theta_deg", "phi_deg", "d_dbi"]);
    for (i, &t) in p.theta_deg.iter().enumerate() {
        for (j, &ph) in p.phi_deg.iter().enumerate() {
            pat.row(&[t, ph, p.at(i, j)]);
        }
    }
    let table = impedance_table(&geom, &cfg.sweep_grid())?;
    let mut imp = Csv::new("pattern", toml, &["f_hz", "re_z_ohm", "im_z_ohm"]);
    for (f, z) in table.table.frequencies().iter().zip(table.table.values()) {
        imp.row(&[*f, z.re, z.im]);
    }
    let state = match (mode, cfg.modulation.enabled) {
        (Mode::Static, _) | (Mode::Both, false) => State::Static,
        (Mode::Modulated, false) => {
            return Err(CliError::Validation(
                "modulated cuts requested with modulation.enabled = false".into(),
            ))
        }
        _ => State::Modulated,
    };
    let model = build_model(cfg, cfg.active_modulation())?;
    let cuts = pattern_cuts(&model, f0, state)?;
    let reference = reference_cuts(&model, f0)?;
    let label = match state {
        State::Static => "static",
        State::Modulated => "modulated",
    };
    Ok(Outcome {
        files: vec![
            pat.finish("pattern.csv"),
            imp.finish("impedance.csv"),
            cut_file("cuts_e.csv", &cuts.e_plane, toml),
            cut_file("cuts_h.csv", &cuts.h_plane, toml),
            cut_file("cuts_reference_e.csv", &reference.e_plane, toml),
            cut_file("cuts_reference_h.csv", &reference.h_plane, toml),
        ],
        summary: vec![
            format!("peak_dbi = {:.4} at theta {} phi {}", p.peak_dbi, p.peak_theta_deg, p.peak_phi_deg),
            format!("front_to_back_db = {:.3}", p.front_to_back_db),
            format!("normalization = {:.6}", p.normalization_integral()),
            format!("cuts_state = {label}"),
        ],
        failure: None,
    })
}

pub fn optimize(cfg: &RunConfig, toml: &str) -> Result<Outcome, CliError> {
    let model = build_model(cfg, None)?;
    let f0 = cfg.filter.f0;
    let report = optimize_modulation(
        &model.ladder,
        f0,
        cfg.start_point(),
        &cfg.modulation_bounds(),
        &cfg.modulation_weights(),
        &cfg.search_settings(),
    )?;
    let b = &report.best;
    let lines = [
        format!("fm_hz = {}", fmt(b.point.fm)),
        format!("delta_m = {}", fmt(b.point.delta_m)),
        format!("delta_phi_deg = {}", fmt(b.point.delta_phi.to_degrees())),
        format!("isolation_db = {}", fmt(b.isolation_db)),
        format!("il_static_db = {}", fmt(b.il_static_db)),
        format!("il_mod_db = {}", fmt(b.il_mod_db)),
        format!("extra_loss_db = {}", fmt(b.il_mod_db - b.il_static_db)),
        format!("il_penalty_db = {}", fmt(b.il_penalty_db)),
        format!("objective = {}", fmt(b.objective)),
        format!("evaluations = {}", report.evaluations),
        format!("seed = {}", cfg.optimizer.seed),
    ];
    let mut text = crate::output::header("optimize", toml);
    for l in &lines {
        text.push_str(l);
        text.push('\n');
    }
    let mut trace = Csv::new(
        "optimize",
        toml,
        &["stage", "iteration", "fm_hz", "delta_m", "delta_phi_deg", "objective"],
    );
    for t in &report.trace {
        trace.raw_row(&[
            t.stage.clone(),
            t.iteration.to_string(),
            fmt(t.point.fm),
            fmt(t.point.delta_m),
            fmt(t.point.delta_phi.to_degrees()),
            fmt(t.objective),
        ]);
    }
    let mut tuned = cfg.clone();
    tuned.modulation.enabled = true;
    tuned.modulation.fm = b.point.fm;
    tuned.modulation.delta_m = b.point.delta_m;
    tuned.modulation.delta_phi_deg = b.point.delta_phi.to_degrees();
    #[derive(serde::Serialize)]
    struct Fragment<'a> {
        modulation: &'a crate::config::ModulationBlock,
    }
    let fragment = toml::to_string(&Fragment {
        modulation: &tuned.modulation,
    })
    .expect("fragment serializes");
    let failure = (b.isolation_db < cfg.optimizer.min_isolation_db).then(|| {
        CliError::Isolation(format!(
            "best isolation {:.3} dB is below {} dB",
            b.isolation_db, cfg.optimizer.min_isolation_db
        ))
    });
    Ok(Outcome {
        files: vec![
            OutputFile {
                name: "optimize_report.txt".into(),
                contents: text,
            },
            trace.finish("optimize_trace.csv"),
            OutputFile {
                name: "modulation.toml".into(),
                contents: fragment,
            },
            OutputFile {
                name: "optimized.toml".into(),
                contents: tuned.to_toml(),
            },
        ],
        summary: lines.to_vec(),
        failure,
    })
}

pub fn oracle_check(cfg: &RunConfig, toml: &str, mode: Mode) -> Result<Outcome, CliError> {
    let (ladder, _) = matched_ladder(cfg)?;
    let ocfg = cfg.oracle_config();
    let f0 = cfg.filter.f0;
    let mut cases: Vec<(&str, ModulatedLadder, f64)> = Vec::new();
    if mode != Mode::Modulated {
        cases.push(("static", ladder.without_modulation(), f0));
    }
    if mode != Mode::Static {
        let m = cfg
            .active_modulation()
            .ok_or_else(|| CliError::Validation("modulated check requested with modulation.enabled = false".into()))?;
        let l = ladder.with_modulation_spec(m)?;
        for &f in &cfg.oracle.points {
            cases.push(("modulated", l.clone(), f));
        }
    }
    for (_, l, f) in &cases {
        let fm = if l.modulation.is_active() { l.modulation.fm } else { 0.0 };
        common_period(*f, fm, ocfg.max_denominator)?;
    }
    let mut csv = Csv::new(
        "oracle-check",
        toml,
        &[
            "state", "f_hz", "hb_s21_db", "td_s21_db", "d_s21_db", "hb_s12_db", "td_s12_db", "d_s12_db", "settling",
        ],
    );
    let mut worst: f64 = 0.0;
    for (state, l, f) in &cases {
        let hb = hbsolver::sparams(l, cfg.solver.k_max, *f)?;
        let td = oracle_sparams(l, *f, &ocfg)?;
        let d21 = hb.s21_db() - td.s21_db();
        let d12 = hb.s12_db() - td.s12_db();
        worst = worst.max(d21.abs()).max(d12.abs());
        csv.raw_row(&[
            state.to_string(),
            fmt(*f),
            fmt(hb.s21_db()),
            fmt(td.s21_db()),
            fmt(d21),
            fmt(hb.s12_db()),
            fmt(td.s12_db()),
            fmt(d12),
            fmt(td.settling_metric),
        ]);
    }
    let failure = (worst > cfg.oracle.tolerance_db).then(|| {
        CliError::Oracle(format!(
            "largest deviation {worst:.3e} dB exceeds {} dB",
            cfg.oracle.tolerance_db
        ))
    });
    Ok(Outcome {
        files: vec![csv.finish("oracle_check.csv")],
        summary: vec![format!("cases = {}", cases.len()), format!("max_deviation_db = {worst:.3e}")],
        failure,
    })
}
