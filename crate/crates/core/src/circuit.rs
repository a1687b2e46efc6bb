//! Data model of the time-modulated coupled-resonator ladder.
//!
//! Topology (N resonators, N + 2 nodes):
//!
//! ```text
//!  src ──Ce_in── n1 ──Cc[0]── n2 ── … ──Cc[N-2]── nN ──Ce_out── load
//!   │            │             │                   │              │
//!  Zsrc        L1‖C1(t)‖G1   L2‖C2(t)‖G2         LN‖CN(t)‖GN     Zload
//! ```
//!
//! Node 0 is the source node, nodes 1..=N the resonators and node N + 1 the
//! load node. Only the resonator shunt capacitors are modulated.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-tone modulation applied to the resonator capacitors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationSpec {
    /// Modulation frequency, Hz.
    pub fm: f64,
    /// Modulation index `ΔC / C0`.
    pub delta_m: f64,
    /// Per-resonator phases, radians.
    pub phases: Vec<f64>,
    /// Progressive phase step that generated `phases`, if any.
    pub delta_phi: Option<f64>,
}

impl ModulationSpec {
    /// Modulation switched off for `n` resonators.
    pub fn off(n: usize) -> Self {
        Self {
            fm: 0.0,
            delta_m: 0.0,
            phases: vec![0.0; n],
            delta_phi: Some(0.0),
        }
    }

    /// `phases[i] = i * delta_phi`.
    pub fn progressive(n: usize, fm: f64, delta_m: f64, delta_phi: f64) -> Result<Self> {
        let spec = Self {
            fm,
            delta_m,
            phases: (0..n).map(|i| i as f64 * delta_phi).collect(),
            delta_phi: Some(delta_phi),
        };
        spec.validate(n)?;
        Ok(spec)
    }

    /// Arbitrary per-resonator phases.
    pub fn with_phases(fm: f64, delta_m: f64, phases: Vec<f64>) -> Result<Self> {
        let n = phases.len();
        let spec = Self {
            fm,
            delta_m,
            phases,
            delta_phi: None,
        };
        spec.validate(n)?;
        Ok(spec)
    }

    pub fn is_active(&self) -> bool {
        self.delta_m != 0.0
    }

    pub fn validate(&self, resonators: usize) -> Result<()> {
        if !(0.0..1.0).contains(&self.delta_m) {
            return Err(Error::domain(
                format!("modulation index delta_m = {}", self.delta_m),
                "0 <= delta_m < 1",
            ));
        }
        if !(self.fm >= 0.0) || !self.fm.is_finite() {
            return Err(Error::domain(
                format!("modulation frequency fm = {}", self.fm),
                "fm >= 0",
            ));
        }
        if self.delta_m > 0.0 && self.fm == 0.0 {
            return Err(Error::domain(
                "modulation frequency fm = 0 with delta_m > 0",
                "fm > 0 when modulated",
            ));
        }
        if self.phases.len() != resonators {
            return Err(Error::domain(
                format!("{} phases for {} resonators", self.phases.len(), resonators),
                "one phase per resonator",
            ));
        }
        if self.phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("non-finite modulation phase", "finite phases"));
        }
        Ok(())
    }
}

/// `C(t) = c0 * (1 + delta_m * cos(2π fm t + phase))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacitorWaveform {
    pub c0: f64,
    pub delta_m: f64,
    pub phase: f64,
}

impl CapacitorWaveform {
    pub fn capacitance_at(&self, fm: f64, t: f64) -> f64 {
        self.c0 * (1.0 + self.delta_m * (2.0 * PI * fm * t + self.phase).cos())
    }

    /// Time derivative of [`Self::capacitance_at`].
    pub fn derivative_at(&self, fm: f64, t: f64) -> f64 {
        let w = 2.0 * PI * fm;
        -self.c0 * self.delta_m * w * (w * t + self.phase).sin()
    }

    /// Complex amplitude `c1` of the `e^{+j ωm t}` component.
    pub fn first_harmonic(&self) -> Complex64 {
        Complex64::from_polar(0.5 * self.c0 * self.delta_m, self.phase)
    }
}

/// Complex impedance sampled on a frequency grid, linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceTable {
    frequencies: Vec<f64>,
    values: Vec<Complex64>,
}

impl ImpedanceTable {
    pub fn new(frequencies: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if frequencies.is_empty() || frequencies.len() != values.len() {
            return Err(Error::domain(
                "impedance table with mismatched or empty columns",
                "equal non-empty columns",
            ));
        }
        if frequencies.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain(
                "impedance table frequencies",
                "strictly increasing",
            ));
        }
        Ok(Self {
            frequencies,
            values,
        })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn range(&self) -> (f64, f64) {
        (self.frequencies[0], *self.frequencies.last().unwrap())
    }

    pub fn interpolate(&self, f: f64) -> Result<Complex64> {
        let (lo, hi) = self.range();
        if !(f >= lo && f <= hi) {
            return Err(Error::OutsideTable {
                frequency: f,
                lo,
                hi,
            });
        }
        let idx = self.frequencies.partition_point(|&x| x <= f);
        if idx == 0 {
            return Ok(self.values[0]);
        }
        let i = idx - 1;
        if self.frequencies[i] == f || i + 1 == self.frequencies.len() {
            return Ok(self.values[i]);
        }
        let (f0, f1) = (self.frequencies[i], self.frequencies[i + 1]);
        let w = (f - f0) / (f1 - f0);
        Ok(self.values[i] * (1.0 - w) + self.values[i + 1] * w)
    }
}

/// Port termination: fixed complex impedance or a tabulated `Z(f)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Fixed { impedance: Complex64 },
    Table { table: ImpedanceTable },
}

impl Termination {
    pub fn resistive(r: f64) -> Self {
        Termination::Fixed {
            impedance: Complex64::new(r, 0.0),
        }
    }

    /// Impedance at `f`, failing when it is not strictly passive.
    pub fn impedance_at(&self, f: f64) -> Result<Complex64> {
        let z = match self {
            Termination::Fixed { impedance } => *impedance,
            Termination::Table { table } => table.interpolate(f)?,
        };
        if !(z.re > 0.0) || !z.im.is_finite() {
            return Err(Error::NonPassiveTermination {
                frequency: f,
                resistance: z.re,
            });
        }
        Ok(z)
    }

    /// The resistance when the termination is a real, frequency-independent
    /// resistor.
    pub fn as_resistance(&self) -> Option<f64> {
        match self {
            Termination::Fixed { impedance } if impedance.im == 0.0 && impedance.re > 0.0 => {
                Some(impedance.re)
            }
            _ => None,
        }
    }
}

/// One shunt resonator: `L ‖ C0(t) ‖ G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonator {
    /// Henries.
    pub inductance: f64,
    /// Static shunt capacitance, farads.
    pub capacitance: f64,
    /// Loss conductance, siemens.
    pub conductance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulatedLadder {
    pub resonators: Vec<Resonator>,
    /// Series coupling capacitors between resonators `i` and `i + 1`.
    pub coupling: Vec<f64>,
    pub external_in: f64,
    pub external_out: f64,
    pub source: Termination,
    pub load: Termination,
    pub modulation: ModulationSpec,
}

impl ModulatedLadder {
    pub fn order(&self) -> usize {
        self.resonators.len()
    }

    /// Source node, resonator nodes, load node.
    pub fn node_count(&self) -> usize {
        self.resonators.len() + 2
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.resonators.len();
        if n == 0 {
            return Err(Error::domain("ladder without resonators", "order >= 1"));
        }
        if self.coupling.len() + 1 != n {
            return Err(Error::domain(
                format!("{} coupling capacitors for {} resonators", self.coupling.len(), n),
                "order - 1 coupling capacitors",
            ));
        }
        for (i, r) in self.resonators.iter().enumerate() {
            if !(r.inductance > 0.0) || !(r.capacitance > 0.0) {
                return Err(Error::domain(
                    format!("resonator {i}: L = {}, C = {}", r.inductance, r.capacitance),
                    "L > 0 and C > 0",
                ));
            }
            if !(r.conductance >= 0.0) || !r.conductance.is_finite() {
                return Err(Error::domain(
                    format!("resonator {i}: G = {}", r.conductance),
                    "G >= 0",
                ));
            }
        }
        let caps = self
            .coupling
            .iter()
            .chain([&self.external_in, &self.external_out]);
        for c in caps {
            if !(*c > 0.0) || !c.is_finite() {
                return Err(Error::domain(
                    format!("series capacitor {c}"),
                    "series capacitances > 0",
                ));
            }
        }
        self.modulation.validate(n)
    }

    /// Copy with progressive phases `φ_i = i · delta_phi` (0-based `i`).
    pub fn with_modulation(&self, fm: f64, delta_m: f64, delta_phi: f64) -> Result<Self> {
        let modulation = ModulationSpec::progressive(self.order(), fm, delta_m, delta_phi)?;
        Ok(Self {
            modulation,
            ..self.clone()
        })
    }

    pub fn with_modulation_spec(&self, modulation: ModulationSpec) -> Result<Self> {
        modulation.validate(self.order())?;
        Ok(Self {
            modulation,
            ..self.clone()
        })
    }

    pub fn without_modulation(&self) -> Self {
        Self {
            modulation: ModulationSpec::off(self.order()),
            ..self.clone()
        }
    }

    pub fn with_load(&self, load: Termination) -> Self {
        Self {
            load,
            ..self.clone()
        }
    }

    pub fn waveform(&self, i: usize) -> CapacitorWaveform {
        CapacitorWaveform {
            c0: self.resonators[i].capacitance,
            delta_m: self.modulation.delta_m,
            phase: self.modulation.phases[i],
        }
    }

    /// Total static capacitance hanging on resonator node `i`.
    pub fn node_capacitance(&self, i: usize) -> f64 {
        let n = self.order();
        let mut c = self.resonators[i].capacitance;
        if i > 0 {
            c += self.coupling[i - 1];
        }
        if i + 1 < n {
            c += self.coupling[i];
        }
        if i == 0 {
            c += self.external_in;
        }
        if i + 1 == n {
            c += self.external_out;
        }
        c
    }

    /// Element values read the same from either port within `rel_tol`.
    pub fn is_mirror_symmetric(&self, rel_tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs());
        let n = self.order();
        let res_ok = (0..n).all(|i| {
            let (a, b) = (self.resonators[i], self.resonators[n - 1 - i]);
            close(a.inductance, b.inductance)
                && close(a.capacitance, b.capacitance)
                && close(a.conductance, b.conductance)
        });
        let m = self.coupling.len();
        let cpl_ok = (0..m).all(|i| close(self.coupling[i], self.coupling[m - 1 - i]));
        res_ok
            && cpl_ok
            && close(self.external_in, self.external_out)
            && self.source == self.load
    }

    /// Element-wise log-space parameter vector used by the tuner:
    /// `[C0_1..C0_N, Cc_1..Cc_{N-1}, Ce_in, Ce_out]`.
    pub fn capacitance_vector(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.resonators.iter().map(|r| r.capacitance).collect();
        v.extend_from_slice(&self.coupling);
        v.push(self.external_in);
        v.push(self.external_out);
        v
    }

    pub fn with_capacitance_vector(&self, v: &[f64]) -> Self {
        let n = self.order();
        assert_eq!(v.len(), 2 * n + 1, "capacitance vector length");
        let mut out = self.clone();
        for (r, &c) in out.resonators.iter_mut().zip(&v[..n]) {
            r.capacitance = c;
        }
        out.coupling.copy_from_slice(&v[n..2 * n - 1]);
        out.external_in = v[2 * n - 1];
        out.external_out = v[2 * n];
        out
    }
}
