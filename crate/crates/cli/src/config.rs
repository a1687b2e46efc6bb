//! Run configuration: one TOML document with nested blocks.
//!
//! Frequencies and capacitances may be written as numbers or as strings
//! with an SI suffix (`"2.4G"`, `"75M"`, `"0.86p"`). Angles are in degrees.
//! Unknown keys are rejected.

use serde::{Deserialize, Deserializer, Serialize};
use tmfa_core::antenna::{YagiGeometry, YagiLayout};
use tmfa_core::circuit::ModulationSpec;
use tmfa_core::hbsolver::linear_grid;
use tmfa_core::optimizer::{ModulationBounds, ModulationPoint, ModulationWeights, SearchSettings, SimplexConfig};
use tmfa_core::synth::FilterSpec;
use tmfa_core::system::SystemConfig;
use tmfa_core::tdoracle::OracleConfig;

use crate::error::CliError;

/// Parses `"2.4G"`-style values.
pub fn parse_si(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let (num, scale) = match t.char_indices().last() {
        Some((i, c)) if c.is_ascii_alphabetic() && !t.eq_ignore_ascii_case("inf") => {
            let scale = match c {
                'f' => 1e-15,
                'p' => 1e-12,
                'n' => 1e-9,
                'u' => 1e-6,
                'm' => 1e-3,
                'k' => 1e3,
                'M' => 1e6,
                'G' => 1e9,
                'T' => 1e12,
                _ => return Err(format!("unknown SI suffix '{c}' in \"{text}\"")),
            };
            (&t[..i], scale)
        }
        _ => (t, 1.0),
    };
    let v: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("not a number: \"{text}\""))?;
    Ok(v * scale)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Quantity {
    Number(f64),
    Integer(i64),
    Text(String),
}

impl Quantity {
    fn value<E: serde::de::Error>(self) -> Result<f64, E> {
        match self {
            Quantity::Number(v) => Ok(v),
            Quantity::Integer(v) => Ok(v as f64),
            Quantity::Text(s) => parse_si(&s).map_err(E::custom),
        }
    }
}

fn si<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Quantity::deserialize(d)?.value()
}

fn si_vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    Vec::<Quantity>::deserialize(d)?
        .into_iter()
        .map(Quantity::value)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterBlock {
    #[serde(deserialize_with = "si")]
    pub f0: f64,
    pub fbw: f64,
    pub rl: f64,
    pub order: usize,
    pub z0: f64,
    #[serde(deserialize_with = "si")]
    pub resonator_capacitance: f64,
    #[serde(deserialize_with = "si")]
    pub unloaded_q: f64,
}

impl Default for FilterBlock {
    fn default() -> Self {
        let s = FilterSpec::default();
        let sys = SystemConfig::default();
        Self {
            f0: s.f0,
            fbw: s.fbw,
            rl: s.rl,
            order: s.order,
            z0: s.z0,
            resonator_capacitance: sys.resonator_capacitance,
            unloaded_q: sys.unloaded_q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulationBlock {
    pub enabled: bool,
    #[serde(deserialize_with = "si")]
    pub fm: f64,
    pub delta_m: f64,
    pub delta_phi_deg: f64,
}

impl Default for ModulationBlock {
    fn default() -> Self {
        Self {
            enabled: true,
            fm: 75e6,
            delta_m: 0.09,
            delta_phi_deg: 56.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Calibrated,
    Nominal,
}

/// Yagi layout. Lengths and spacings are in wavelengths at
/// `design_frequency` (default `filter.f0`); any field left out comes from
/// the preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaBlock {
    pub preset: Preset,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub design_frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reflector: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub driver: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directors: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacings: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub pattern_step_deg: f64,
}

impl Default for AntennaBlock {
    fn default() -> Self {
        Self {
            preset: Preset::Calibrated,
            design_frequency: None,
            reflector: None,
            driver: None,
            directors: None,
            spacings: None,
            radius: None,
            pattern_step_deg: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    #[serde(deserialize_with = "si")]
    pub f_start: f64,
    #[serde(deserialize_with = "si")]
    pub f_stop: f64,
    pub points: usize,
    /// Adds `s21`/`s12` columns for every sideband.
    pub harmonics: bool,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            f_start: 2.2e9,
            f_stop: 2.6e9,
            points: 201,
            harmonics: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub k_max: usize,
    /// Antenna impedance table spans `f0·(1 ± table_span)`.
    pub table_span: f64,
    pub table_points: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let s = SystemConfig::default();
        Self {
            k_max: s.k_max,
            table_span: s.table_span,
            table_points: s.table_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleBlock {
    pub steps_per_cycle: u64,
    pub settle_periods: u64,
    pub window_periods: u64,
    pub settle_threshold: f64,
    pub k_range: usize,
    pub max_denominator: u64,
    /// Carriers checked in the modulated state.
    #[serde(deserialize_with = "si_vec")]
    pub points: Vec<f64>,
    pub tolerance_db: f64,
}

impl Default for OracleBlock {
    fn default() -> Self {
        let c = OracleConfig::default();
        Self {
            steps_per_cycle: c.steps_per_cycle,
            settle_periods: c.settle_periods,
            window_periods: c.window_periods,
            settle_threshold: c.settle_threshold,
            k_range: c.k_range,
            max_denominator: c.max_denominator,
            points: vec![2.3625e9, 2.375e9, 2.4e9, 2.425e9, 2.4375e9],
            tolerance_db: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerBlock {
    #[serde(deserialize_with = "si")]
    pub fm_min: f64,
    #[serde(deserialize_with = "si")]
    pub fm_max: f64,
    pub delta_m_min: f64,
    /// An upper bound below `delta_m_min` pins Δm at the upper bound.
    pub delta_m_max: f64,
    pub delta_phi_min_deg: f64,
    pub delta_phi_max_deg: f64,
    pub loss_weight: f64,
    pub loss_guard_db: f64,
    pub isolation_cap_db: f64,
    pub grid: [usize; 3],
    pub grid_starts: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Below this isolation the search counts as failed.
    pub min_isolation_db: f64,
}

impl Default for OptimizerBlock {
    fn default() -> Self {
        let b = ModulationBounds::default();
        let w = ModulationWeights::default();
        let s = SearchSettings::default();
        Self {
            fm_min: b.fm.0,
            fm_max: b.fm.1,
            delta_m_min: b.delta_m.0,
            delta_m_max: b.delta_m.1,
            delta_phi_min_deg: b.delta_phi.0.to_degrees(),
            delta_phi_max_deg: b.delta_phi.1.to_degrees(),
            loss_weight: w.loss_weight,
            loss_guard_db: w.loss_guard_db,
            isolation_cap_db: w.isolation_cap_db,
            grid: s.grid,
            grid_starts: s.grid_starts,
            restarts: s.restarts,
            seed: s.seed,
            max_iterations: s.simplex.max_iterations,
            min_isolation_db: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: String,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub filter: FilterBlock,
    pub modulation: ModulationBlock,
    pub antenna: AntennaBlock,
    pub sweep: SweepBlock,
    pub solver: SolverBlock,
    pub oracle: OracleBlock,
    pub optimizer: OptimizerBlock,
    pub output: OutputBlock,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn finite_positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and positive (got {v})")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Checks every block against the preconditions of the code it feeds.
    pub fn validate(&self) -> Result<(), CliError> {
        let core = |e: tmfa_core::Error| invalid(e.to_string());
        self.filter_spec().validate().map_err(core)?;
        finite_positive("filter.resonator_capacitance", self.filter.resonator_capacitance)?;
        if !(self.filter.unloaded_q > 0.0) {
            return Err(invalid("filter.unloaded_q must be positive (inf for lossless)"));
        }
        let m = &self.modulation;
        if m.enabled {
            self.modulation_spec().map_err(core)?;
        }
        self.geometry().validate().map_err(core)?;
        finite_positive("antenna.pattern_step_deg", self.antenna.pattern_step_deg)?;

        let s = &self.sweep;
        finite_positive("sweep.f_start", s.f_start)?;
        if !(s.f_stop >= s.f_start) || !s.f_stop.is_finite() {
            return Err(invalid("sweep.f_stop must be >= sweep.f_start"));
        }
        if s.points == 0 {
            return Err(invalid("sweep.points must be at least 1"));
        }
        let span = self.solver.table_span;
        if !(span > 0.0 && span < 1.0) || self.solver.table_points < 2 {
            return Err(invalid("solver.table_span must lie in (0, 1) with table_points >= 2"));
        }
        let (lo, hi) = (self.filter.f0 * (1.0 - span), self.filter.f0 * (1.0 + span));
        if s.f_start < lo || s.f_stop > hi {
            return Err(invalid(format!(
                "sweep range [{}, {}] Hz leaves the antenna table [{lo}, {hi}] Hz",
                s.f_start, s.f_stop
            )));
        }
        if self.solver.k_max == 0 {
            return Err(invalid("solver.k_max must be at least 1"));
        }

        let o = &self.oracle;
        if o.steps_per_cycle < 8 || o.window_periods == 0 || o.max_denominator == 0 {
            return Err(invalid("oracle: steps_per_cycle >= 8, window_periods >= 1, max_denominator >= 1"));
        }
        finite_positive("oracle.settle_threshold", o.settle_threshold)?;
        finite_positive("oracle.tolerance_db", o.tolerance_db)?;
        for &f in &o.points {
            finite_positive("oracle point", f)?;
        }

        let p = &self.optimizer;
        finite_positive("optimizer.fm_min", p.fm_min)?;
        if !(p.fm_max >= p.fm_min) {
            return Err(invalid("optimizer.fm_max must be >= fm_min"));
        }
        if !(p.delta_m_min >= 0.0 && p.delta_m_max >= 0.0 && p.delta_m_max < 1.0 && p.delta_m_min < 1.0) {
            return Err(invalid("optimizer Δm bounds must lie in [0, 1)"));
        }
        if !(p.delta_phi_max_deg >= p.delta_phi_min_deg) {
            return Err(invalid("optimizer.delta_phi_max_deg must be >= delta_phi_min_deg"));
        }
        if !(p.loss_weight >= 0.0 && p.loss_guard_db >= 0.0 && p.isolation_cap_db > 0.0) {
            return Err(invalid("optimizer weights must be non-negative (cap positive)"));
        }
        if p.grid.contains(&0) || p.max_iterations == 0 {
            return Err(invalid("optimizer.grid entries and max_iterations must be positive"));
        }
        if self.output.dir.is_empty() {
            return Err(invalid("output.dir must not be empty"));
        }
        Ok(())
    }

    pub fn filter_spec(&self) -> FilterSpec {
        FilterSpec {
            f0: self.filter.f0,
            fbw: self.filter.fbw,
            rl: self.filter.rl,
            order: self.filter.order,
            z0: self.filter.z0,
        }
    }

    pub fn system_config(&self) -> SystemConfig {
        SystemConfig {
            spec: self.filter_spec(),
            resonator_capacitance: self.filter.resonator_capacitance,
            unloaded_q: self.filter.unloaded_q,
            k_max: self.solver.k_max,
            table_span: self.solver.table_span,
            table_points: self.solver.table_points,
        }
    }

    pub fn modulation_spec(&self) -> tmfa_core::Result<ModulationSpec> {
        let m = &self.modulation;
        ModulationSpec::progressive(self.filter.order, m.fm, m.delta_m, m.delta_phi_deg.to_radians())
    }

    /// The configured modulation, or `None` when disabled.
    pub fn active_modulation(&self) -> Option<ModulationSpec> {
        if self.modulation.enabled {
            self.modulation_spec().ok()
        } else {
            None
        }
    }

    pub fn layout(&self) -> YagiLayout {
        let a = &self.antenna;
        let base = match a.preset {
            Preset::Calibrated => YagiLayout::calibrated(),
            Preset::Nominal => YagiLayout::nominal(),
        };
        YagiLayout {
            reflector: a.reflector.unwrap_or(base.reflector),
            driver: a.driver.unwrap_or(base.driver),
            directors: a.directors.clone().unwrap_or(base.directors),
            spacings: a.spacings.clone().unwrap_or(base.spacings),
            radius: a.radius.unwrap_or(base.radius),
        }
    }

    pub fn geometry(&self) -> YagiGeometry {
        let layout = self.layout();
        if layout.spacings.len() != layout.directors.len() + 1 {
            // caught by validation: an inconsistent layout yields no elements
            return YagiGeometry {
                elements: Vec::new(),
                driven: 0,
            };
        }
        layout.geometry(self.antenna.design_frequency.unwrap_or(self.filter.f0))
    }

    pub fn sweep_grid(&self) -> Vec<f64> {
        linear_grid(self.sweep.f_start, self.sweep.f_stop, self.sweep.points)
    }

    pub fn oracle_config(&self) -> OracleConfig {
        let o = &self.oracle;
        OracleConfig {
            steps_per_cycle: o.steps_per_cycle,
            settle_periods: o.settle_periods,
            window_periods: o.window_periods,
            settle_threshold: o.settle_threshold,
            k_range: o.k_range,
            max_denominator: o.max_denominator,
        }
    }

    pub fn modulation_bounds(&self) -> ModulationBounds {
        let p = &self.optimizer;
        ModulationBounds {
            fm: (p.fm_min, p.fm_max),
            delta_m: (p.delta_m_min.min(p.delta_m_max), p.delta_m_max),
            delta_phi: (p.delta_phi_min_deg.to_radians(), p.delta_phi_max_deg.to_radians()),
        }
    }

    pub fn modulation_weights(&self) -> ModulationWeights {
        let p = &self.optimizer;
        ModulationWeights {
            loss_weight: p.loss_weight,
            loss_guard_db: p.loss_guard_db,
            isolation_cap_db: p.isolation_cap_db,
        }
    }

    pub fn search_settings(&self) -> SearchSettings {
        let p = &self.optimizer;
        let base = SearchSettings::default();
        SearchSettings {
            k_max: self.solver.k_max,
            grid: p.grid,
            grid_starts: p.grid_starts,
            restarts: p.restarts,
            seed: p.seed,
            simplex: SimplexConfig {
                max_iterations: p.max_iterations,
                ..base.simplex
            },
        }
    }

    pub fn start_point(&self) -> ModulationPoint {
        let m = &self.modulation;
        ModulationPoint {
            fm: m.fm,
            delta_m: m.delta_m,
            delta_phi: m.delta_phi_deg.to_radians(),
        }
    }
}
