//! Chebyshev prototype synthesis and lumped ladder realization.
//!
//! The bandpass target is realized as shunt L-C resonators joined by series
//! coupling capacitors, with series capacitors to the terminations. The
//! closed-form values are narrowband approximations; the equi-ripple tuner
//! in [`crate::optimizer`] removes the residual detuning.

use std::f64::consts::{LN_10, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{ModulatedLadder, ModulationSpec, Resonator, Termination};
use crate::error::{Error, Result};

/// Varactor static capacitance used for every resonator, farads.
pub const DEFAULT_RESONATOR_CAPACITANCE: f64 = 0.86e-12;

/// Unloaded resonator quality factor.
pub const DEFAULT_UNLOADED_Q: f64 = 125.0;

pub const MAX_ORDER: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    /// Center frequency, Hz.
    pub f0: f64,
    /// Fractional (ripple) bandwidth.
    pub fbw: f64,
    /// In-band return loss, dB.
    pub rl: f64,
    pub order: usize,
    /// Reference impedance, ohms.
    pub z0: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            f0: 2.4e9,
            fbw: 0.04,
            rl: 13.0,
            order: 3,
            z0: 50.0,
        }
    }
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.f0 > 0.0) || !self.f0.is_finite() {
            return Err(Error::domain(format!("f0 = {}", self.f0), "f0 > 0"));
        }
        if !(self.fbw > 0.0 && self.fbw < 0.2) {
            return Err(Error::domain(format!("fbw = {}", self.fbw), "0 < fbw < 0.2"));
        }
        if !(self.rl > 3.0) || !self.rl.is_finite() {
            return Err(Error::domain(format!("rl = {} dB", self.rl), "rl > 3 dB"));
        }
        if self.order < 2 {
            return Err(Error::domain(format!("order = {}", self.order), "order >= 2"));
        }
        if self.order > MAX_ORDER {
            return Err(Error::domain(
                format!("order = {}", self.order),
                format!("order <= {MAX_ORDER}"),
            ));
        }
        if !(self.z0 > 0.0) || !self.z0.is_finite() {
            return Err(Error::domain(format!("z0 = {}", self.z0), "z0 > 0"));
        }
        Ok(())
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.f0
    }

    /// Ripple-band edges `(f_lo, f_hi)`, where the lowpass-to-bandpass
    /// variable `(f/f0 - f0/f)/fbw` equals ∓1.
    pub fn band_edges(&self) -> (f64, f64) {
        let half = self.fbw / 2.0;
        let root = (1.0 + half * half).sqrt();
        (self.f0 * (root - half), self.f0 * (root + half))
    }

    /// Lowpass prototype frequency corresponding to `f`.
    pub fn lowpass_frequency(&self, f: f64) -> f64 {
        (f / self.f0 - self.f0 / f) / self.fbw
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeValues {
    /// `g[0] ..= g[order + 1]`.
    pub g: Vec<f64>,
    pub ripple_db: f64,
    /// Inter-resonator coupling coefficients `k[i]`, `i = 0..order-1`.
    pub couplings: Vec<f64>,
    pub qe_in: f64,
    pub qe_out: f64,
}

/// Passband ripple `-10 log10(1 - 10^(-rl/10))` for a return loss in dB.
pub fn ripple_from_return_loss(rl_db: f64) -> f64 {
    -10.0 * (1.0 - 10f64.powf(-rl_db / 10.0)).log10()
}

/// Chebyshev lowpass element values `g[0] ..= g[n+1]` for `ripple_db`.
pub fn chebyshev_g_values(order: usize, ripple_db: f64) -> Vec<f64> {
    let n = order as f64;
    // ln(coth(Lr / 17.37...)), the 17.37 being 40 / ln(10)
    let beta = (1.0 / (ripple_db * LN_10 / 40.0).tanh()).ln();
    let gamma = (beta / (2.0 * n)).sinh();
    let a: Vec<f64> = (1..=order)
        .map(|k| ((2 * k - 1) as f64 * PI / (2.0 * n)).sin())
        .collect();
    let b: Vec<f64> = (1..=order)
        .map(|k| gamma * gamma + (k as f64 * PI / n).sin().powi(2))
        .collect();

    let mut g = Vec::with_capacity(order + 2);
    g.push(1.0);
    g.push(2.0 * a[0] / gamma);
    for k in 2..=order {
        let prev = g[k - 1];
        g.push(4.0 * a[k - 2] * a[k - 1] / (b[k - 2] * prev));
    }
    if order % 2 == 1 {
        g.push(1.0);
    } else {
        g.push(1.0 / (beta / 4.0).tanh().powi(2));
    }
    g
}

pub fn chebyshev_prototype(spec: &FilterSpec) -> Result<PrototypeValues> {
    spec.validate()?;
    let n = spec.order;
    let ripple_db = ripple_from_return_loss(spec.rl);
    let g = chebyshev_g_values(n, ripple_db);
    let couplings = (0..n - 1)
        .map(|i| spec.fbw / (g[i + 1] * g[i + 2]).sqrt())
        .collect();
    Ok(PrototypeValues {
        qe_in: g[0] * g[1] / spec.fbw,
        qe_out: g[n] * g[n + 1] / spec.fbw,
        g,
        ripple_db,
        couplings,
    })
}

/// Closed-form lumped realization of `proto` with resonator capacitance
/// `c_res` and unloaded quality factor `q_u` (`f64::INFINITY` for lossless).
///
/// Every resonator node carries a total capacitance of `c_res`; the shunt
/// capacitor is what remains after the adjacent series capacitors are
/// subtracted. Modulation starts switched off.
pub fn realize_ladder(
    proto: &PrototypeValues,
    spec: &FilterSpec,
    c_res: f64,
    q_u: f64,
) -> Result<ModulatedLadder> {
    spec.validate()?;
    if !(c_res > 0.0) || !c_res.is_finite() {
        return Err(Error::domain(format!("c_res = {c_res}"), "c_res > 0"));
    }
    if !(q_u > 0.0) {
        return Err(Error::domain(format!("q_u = {q_u}"), "q_u > 0 or infinite"));
    }
    let n = spec.order;
    if proto.g.len() != n + 2 || proto.couplings.len() != n - 1 {
        return Err(Error::domain(
            "prototype size does not match the filter order",
            "g has order + 2 entries, k has order - 1",
        ));
    }

    let w0 = spec.omega0();
    let external = |qe: f64| (c_res / (w0 * spec.z0 * qe)).sqrt();
    let external_in = external(proto.qe_in);
    let external_out = external(proto.qe_out);
    if external_in > c_res || external_out > c_res {
        return Err(Error::Synthesis(format!(
            "external capacitor ({:.4e} F / {:.4e} F) exceeds resonator capacitance {:.4e} F; \
             the request is outside narrowband validity",
            external_in, external_out, c_res
        )));
    }
    let coupling: Vec<f64> = proto.couplings.iter().map(|k| k * c_res).collect();

    let inductance = 1.0 / (w0 * w0 * c_res);
    let conductance = if q_u.is_infinite() { 0.0 } else { w0 * c_res / q_u };
    let mut resonators = Vec::with_capacity(n);
    for i in 0..n {
        let mut shunt = c_res;
        if i > 0 {
            shunt -= coupling[i - 1];
        }
        if i + 1 < n {
            shunt -= coupling[i];
        }
        if i == 0 {
            shunt -= external_in;
        }
        if i + 1 == n {
            shunt -= external_out;
        }
        if !(shunt > 0.0) {
            return Err(Error::Synthesis(format!(
                "resonator {i} shunt capacitance {shunt:.4e} F is not positive after \
                 absorbing the series capacitors"
            )));
        }
        resonators.push(Resonator {
            inductance,
            capacitance: shunt,
            conductance,
        });
    }

    let z0 = Termination::Fixed {
        impedance: Complex64::new(spec.z0, 0.0),
    };
    let ladder = ModulatedLadder {
        resonators,
        coupling,
        external_in,
        external_out,
        source: z0.clone(),
        load: z0,
        modulation: ModulationSpec::off(n),
    };
    ladder.validate()?;
    Ok(ladder)
}

/// Prototype plus realization in one call.
pub fn design_ladder(spec: &FilterSpec, c_res: f64, q_u: f64) -> Result<ModulatedLadder> {
    let proto = chebyshev_prototype(spec)?;
    realize_ladder(&proto, spec, c_res, q_u)
}
