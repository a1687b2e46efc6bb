//! The filter and the radiator composed into one device.
//!
//! The filter sees the antenna's driving-point impedance as its port-2
//! termination. Transmit gain is the filter's port-1 → port-2 transducer
//! gain plus the radiator directivity; receive gain uses the reverse
//! transducer gain with the same directivity (the radiator is reciprocal).
//! All gains are normalized so the reference antenna (the same radiator fed
//! directly from the 50 Ω source) reads 0 dB at boresight and `f0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::antenna::{self, AntennaImpedance, Radiator, YagiGeometry};
use crate::circuit::{ModulatedLadder, ModulationSpec};
use crate::error::{Error, Result};
use crate::hbsolver::{self, linear_grid};
use crate::optimizer::{mismatch_db, tune_equiripple, TuneReport};
use crate::synth::{design_ladder, FilterSpec, DEFAULT_RESONATOR_CAPACITANCE, DEFAULT_UNLOADED_Q};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub spec: FilterSpec,
    pub resonator_capacitance: f64,
    pub unloaded_q: f64,
    pub k_max: usize,
    /// The antenna table spans `f0·(1 ± table_span)`.
    pub table_span: f64,
    pub table_points: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            spec: FilterSpec::default(),
            resonator_capacitance: DEFAULT_RESONATOR_CAPACITANCE,
            unloaded_q: DEFAULT_UNLOADED_Q,
            k_max: hbsolver::DEFAULT_K_MAX,
            table_span: 0.6,
            table_points: 361,
        }
    }
}

/// Filter state for a gain query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum State {
    Static,
    Modulated,
}

#[derive(Debug, Clone)]
pub struct FilteringAntennaModel {
    pub config: SystemConfig,
    /// Tuned filter with the antenna as its load; carries the modulation.
    pub ladder: ModulatedLadder,
    /// The 50 Ω tuning result the antenna-loaded tuning started from.
    pub matched: TuneReport,
    pub loaded: TuneReport,
    pub geom: YagiGeometry,
    pub antenna: AntennaImpedance,
    /// Boresight directivity of the bare antenna at `f0`, dBi.
    pub reference_gain_dbi: f64,
    /// Mismatch of the bare antenna against the source at `f0`, dB.
    pub reference_mismatch_db: f64,
}

impl FilteringAntennaModel {
    /// Synthesizes and tunes the filter at 50 Ω, binds the antenna load,
    /// retunes, then applies `modulation`.
    pub fn build(config: &SystemConfig, geom: &YagiGeometry, modulation: Option<ModulationSpec>) -> Result<Self> {
        let spec = &config.spec;
        spec.validate()?;
        geom.validate()?;
        if !(config.table_span > 0.0 && config.table_span < 1.0) || config.table_points < 2 {
            return Err(Error::domain("antenna table", "0 < span < 1 and at least 2 points"));
        }
        let initial = design_ladder(spec, config.resonator_capacitance, config.unloaded_q)?;
        let matched = tune_equiripple(&initial, spec)?;
        let grid = linear_grid(
            spec.f0 * (1.0 - config.table_span),
            spec.f0 * (1.0 + config.table_span),
            config.table_points,
        );
        let antenna = antenna::impedance_table(geom, &grid)?;
        let bound = matched.ladder.with_load(antenna.termination());
        let loaded = tune_equiripple(&bound, spec)?;
        let ladder = match modulation {
            Some(m) => loaded.ladder.with_modulation_spec(m)?,
            None => loaded.ladder.without_modulation(),
        };
        let radiator = Radiator::new(geom, spec.f0)?;
        let source_r = ladder
            .source
            .as_resistance()
            .ok_or_else(|| Error::domain("source termination", "resistive"))?;
        Ok(Self {
            config: config.clone(),
            ladder,
            matched,
            loaded,
            geom: geom.clone(),
            reference_gain_dbi: radiator.boresight_dbi(),
            reference_mismatch_db: mismatch_db(radiator.z_in(), source_r),
            antenna,
        })
    }

    /// Same model with a different modulation.
    pub fn with_modulation(&self, modulation: ModulationSpec) -> Result<Self> {
        Ok(Self {
            ladder: self.ladder.with_modulation_spec(modulation)?,
            ..self.clone()
        })
    }

    pub fn anchor_db(&self) -> f64 {
        self.reference_gain_dbi + self.reference_mismatch_db
    }

    fn state_ladder(&self, state: State) -> ModulatedLadder {
        match state {
            State::Static => self.ladder.without_modulation(),
            State::Modulated => self.ladder.clone(),
        }
    }

    /// `(s21_db, s12_db)` of the antenna-loaded filter at `f`.
    pub fn filter_gains(&self, f: f64, state: State) -> Result<(f64, f64)> {
        let l = self.state_ladder(state);
        let r = if l.modulation.is_active() {
            hbsolver::sparams(&l, self.config.k_max, f)?
        } else {
            hbsolver::static_sparams(&l, f)?
        };
        Ok((r.s21_db(), r.s12_db()))
    }

    pub fn radiator(&self, f: f64) -> Result<Radiator> {
        Radiator::new(&self.geom, f)
    }

    /// Normalized transmit gain toward `(theta, phi)` (radians), dB.
    pub fn tx_gain(&self, f: f64, theta: f64, phi: f64, state: State) -> Result<f64> {
        let (s21, _) = self.filter_gains(f, state)?;
        Ok(s21 + self.radiator(f)?.directivity_dbi(theta, phi) - self.anchor_db())
    }

    /// Normalized receive gain from `(theta, phi)` (radians), dB.
    pub fn rx_gain(&self, f: f64, theta: f64, phi: f64, state: State) -> Result<f64> {
        let (_, s12) = self.filter_gains(f, state)?;
        Ok(s12 + self.radiator(f)?.directivity_dbi(theta, phi) - self.anchor_db())
    }

    /// Reference antenna gain (50 Ω feed, mismatch included), dB.
    pub fn reference_gain(&self, f: f64, theta: f64, phi: f64) -> Result<f64> {
        let r = self.radiator(f)?;
        let rs = self.ladder.source.as_resistance().unwrap_or(self.config.spec.z0);
        Ok(r.directivity_dbi(theta, phi) + mismatch_db(r.z_in(), rs) - self.anchor_db())
    }
}

fn boresight() -> (f64, f64) {
    (
        antenna::BORESIGHT_THETA_DEG.to_radians(),
        antenna::BORESIGHT_PHI_DEG.to_radians(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoresightRow {
    pub frequency: f64,
    pub reference_db: f64,
    pub static_tx_db: f64,
    pub static_rx_db: f64,
    pub mod_tx_db: f64,
    pub mod_rx_db: f64,
    /// `mod_tx_db − mod_rx_db`.
    pub isolation_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutRow {
    pub angle_deg: f64,
    pub tx_db: f64,
    pub rx_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCuts {
    pub frequency: f64,
    pub e_plane: Vec<CutRow>,
    pub h_plane: Vec<CutRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalGainReport {
    pub boresight: Vec<BoresightRow>,
    /// Cuts at `f0` in the modulated state.
    pub cuts: Option<PatternCuts>,
}

/// Reference, static and modulated boresight curves over `grid`.
pub fn boresight_sweep(model: &FilteringAntennaModel, grid: &[f64]) -> Result<DirectionalGainReport> {
    let (theta, phi) = boresight();
    let rows: Result<Vec<BoresightRow>> = grid
        .par_iter()
        .map(|&f| {
            let r = model.radiator(f)?;
            let d = r.directivity_dbi(theta, phi);
            let rs = model.ladder.source.as_resistance().unwrap_or(model.config.spec.z0);
            let anchor = model.anchor_db();
            let (s21, s12) = model.filter_gains(f, State::Static)?;
            let (m21, m12) = model.filter_gains(f, State::Modulated)?;
            let (mod_tx_db, mod_rx_db) = (m21 + d - anchor, m12 + d - anchor);
            Ok(BoresightRow {
                frequency: f,
                reference_db: d + mismatch_db(r.z_in(), rs) - anchor,
                static_tx_db: s21 + d - anchor,
                static_rx_db: s12 + d - anchor,
                mod_tx_db,
                mod_rx_db,
                isolation_db: mod_tx_db - mod_rx_db,
            })
        })
        .collect();
    Ok(DirectionalGainReport {
        boresight: rows?,
        cuts: None,
    })
}

/// `(angle_deg, theta_rad, phi_rad)` of one cut row.
pub type CutDirection = (f64, f64, f64);

/// Directions of the two principal cuts at 1° steps, 360 rows each.
/// E-plane (contains the wires): `φ = 0°` for `α ≤ 180°`, `φ = 180°`
/// beyond. H-plane: `θ = 90°`, `φ = α`.
pub fn cut_directions() -> (Vec<CutDirection>, Vec<CutDirection>) {
    let e = (0..360)
        .map(|a| {
            let a = a as f64;
            let (theta, phi) = if a <= 180.0 { (a, 0.0f64) } else { (360.0 - a, 180.0) };
            (a, theta.to_radians(), phi.to_radians())
        })
        .collect();
    let h = (0..360)
        .map(|a| {
            let a = a as f64;
            (a, 90f64.to_radians(), a.to_radians())
        })
        .collect();
    (e, h)
}

/// TX/RX cuts at `f` for the given filter state.
pub fn pattern_cuts(model: &FilteringAntennaModel, f: f64, state: State) -> Result<PatternCuts> {
    let (s21, s12) = model.filter_gains(f, state)?;
    let r = model.radiator(f)?;
    let anchor = model.anchor_db();
    let cut = |dirs: Vec<(f64, f64, f64)>| {
        dirs.into_iter()
            .map(|(a, t, p)| {
                let d = r.directivity_dbi(t, p);
                CutRow {
                    angle_deg: a,
                    tx_db: s21 + d - anchor,
                    rx_db: s12 + d - anchor,
                }
            })
            .collect()
    };
    let (e, h) = cut_directions();
    Ok(PatternCuts {
        frequency: f,
        e_plane: cut(e),
        h_plane: cut(h),
    })
}

/// Reference-antenna cuts (TX and RX identical).
pub fn reference_cuts(model: &FilteringAntennaModel, f: f64) -> Result<PatternCuts> {
    let r = model.radiator(f)?;
    let rs = model.ladder.source.as_resistance().unwrap_or(model.config.spec.z0);
    let offset = mismatch_db(r.z_in(), rs) - model.anchor_db();
    let cut = |dirs: Vec<(f64, f64, f64)>| {
        dirs.into_iter()
            .map(|(a, t, p)| {
                let g = r.directivity_dbi(t, p) + offset;
                CutRow {
                    angle_deg: a,
                    tx_db: g,
                    rx_db: g,
                }
            })
            .collect()
    };
    let (e, h) = cut_directions();
    Ok(PatternCuts {
        frequency: f,
        e_plane: cut(e),
        h_plane: cut(h),
    })
}

/// Band around the maximum of `values` where they stay within `drop_db` of
/// it, with linearly interpolated edges: `(f_lo, f_hi, f_peak, peak)`.
pub fn peak_band(freqs: &[f64], values: &[f64], drop_db: f64) -> Option<(f64, f64, f64, f64)> {
    if freqs.len() != values.len() || freqs.len() < 2 {
        return None;
    }
    let (ip, &peak) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let level = peak - drop_db;
    let (lo, hi) = crossing_band(freqs, values, ip, level, true)?;
    Some((lo, hi, freqs[ip], peak))
}

/// Contiguous band around index `center` where `values` stay above (or
/// below) `level`, with interpolated edges. `None` if the band reaches the
/// end of the data or `center` violates the condition.
pub fn crossing_band(freqs: &[f64], values: &[f64], center: usize, level: f64, above: bool) -> Option<(f64, f64)> {
    let inside = |v: f64| if above { v >= level } else { v <= level };
    if !inside(values[center]) {
        return None;
    }
    let mut i = center;
    while i > 0 && inside(values[i - 1]) {
        i -= 1;
    }
    let mut j = center;
    while j + 1 < values.len() && inside(values[j + 1]) {
        j += 1;
    }
    if i == 0 || j + 1 == values.len() {
        return None;
    }
    let edge = |a: usize, b: usize| {
        let t = (level - values[a]) / (values[b] - values[a]);
        freqs[a] + t * (freqs[b] - freqs[a])
    };
    Some((edge(i - 1, i), edge(j, j + 1)))
}
