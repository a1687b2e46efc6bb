//! Time-domain reference solution of the modulated ladder.
//!
//! The state is the set of node charges `Q = C(t)·v` plus inductor currents.
//! Node voltages follow from the tridiagonal nodal capacitance matrix at
//! each instant, so `dQ/dt` is exactly the non-capacitive current into each
//! node with no `dC/dt` term to approximate. Fixed-step RK4 runs over whole
//! common periods of the drive and the pump and the steady state is read by
//! projection onto `e^{-jω_k t}`.
//!
//! Three energy accumulators ride along with the state: work done by the
//! sources, energy dissipated in conductances and terminations, and work
//! done by the pump on the varying capacitors (`−½·Ċ·v²`).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{CapacitorWaveform, ModulatedLadder};
use crate::error::{Error, Result};
use crate::hbsolver::Port;
use crate::units::db20;

/// Linear network of nodes in a chain: series capacitors between
/// neighbours, a (possibly modulated) capacitor, an optional inductor and a
/// conductance from every node to ground. Ports sit at the first and last
/// node; `None` leaves a port open.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDomainNetwork {
    pub series: Vec<f64>,
    pub shunt: Vec<CapacitorWaveform>,
    pub inductance: Vec<Option<f64>>,
    pub conductance: Vec<f64>,
    pub port_resistance: [Option<f64>; 2],
    pub fm: f64,
}

impl TimeDomainNetwork {
    /// Resistively terminated ladder; complex terminations have no
    /// time-domain counterpart here.
    pub fn from_ladder(ladder: &ModulatedLadder) -> Result<Self> {
        ladder.validate()?;
        let rs = ladder.source.as_resistance();
        let rl = ladder.load.as_resistance();
        let (Some(rs), Some(rl)) = (rs, rl) else {
            return Err(Error::domain(
                "time-domain terminations",
                "purely resistive source and load",
            ));
        };
        let n = ladder.order();
        let open = CapacitorWaveform {
            c0: 0.0,
            delta_m: 0.0,
            phase: 0.0,
        };
        let mut series = vec![ladder.external_in];
        series.extend_from_slice(&ladder.coupling);
        series.push(ladder.external_out);
        let mut shunt = vec![open];
        let mut inductance = vec![None];
        let mut conductance = vec![0.0];
        for i in 0..n {
            let mut w = ladder.waveform(i);
            if !ladder.modulation.is_active() {
                w.delta_m = 0.0;
            }
            shunt.push(w);
            inductance.push(Some(ladder.resonators[i].inductance));
            conductance.push(ladder.resonators[i].conductance);
        }
        shunt.push(open);
        inductance.push(None);
        conductance.push(0.0);
        let net = Self {
            series,
            shunt,
            inductance,
            conductance,
            port_resistance: [Some(rs), Some(rl)],
            fm: ladder.modulation.fm,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn nodes(&self) -> usize {
        self.shunt.len()
    }

    pub fn port_node(&self, port: Port) -> usize {
        match port {
            Port::One => 0,
            Port::Two => self.nodes() - 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes();
        if n == 0 || self.series.len() + 1 != n {
            return Err(Error::domain("network shape", "nodes >= 1, nodes - 1 series capacitors"));
        }
        if self.inductance.len() != n || self.conductance.len() != n {
            return Err(Error::domain("network shape", "one inductor slot and conductance per node"));
        }
        if self.series.iter().any(|c| !(*c > 0.0)) {
            return Err(Error::domain("series capacitance", "> 0"));
        }
        if self.shunt.iter().any(|w| !(w.c0 >= 0.0) || !(0.0..1.0).contains(&w.delta_m)) {
            return Err(Error::domain("shunt capacitance", "C0 >= 0 and 0 <= delta_m < 1"));
        }
        if self.inductance.iter().flatten().any(|l| !(*l > 0.0)) {
            return Err(Error::domain("inductance", "> 0"));
        }
        if self.conductance.iter().any(|g| !(*g >= 0.0)) {
            return Err(Error::domain("conductance", ">= 0"));
        }
        if self.port_resistance.iter().flatten().any(|r| !(*r > 0.0)) {
            return Err(Error::domain("port resistance", "> 0"));
        }
        Ok(())
    }

    fn inductor_nodes(&self) -> Vec<(usize, f64)> {
        self.inductance
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|l| (i, l)))
            .collect()
    }
}

/// Sinusoidal Thevenin source `amplitude·cos(2πft)` behind a port resistance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pub port: Port,
    pub amplitude: f64,
    pub frequency: f64,
}

/// Energy bookkeeping, joules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub source: f64,
    pub dissipated: f64,
    pub pumped: f64,
}

/// Node charges, inductor currents (in node order) and the ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub charge: Vec<f64>,
    pub current: Vec<f64>,
    pub ledger: EnergyLedger,
}

impl State {
    pub fn zero(net: &TimeDomainNetwork) -> Self {
        Self {
            charge: vec![0.0; net.nodes()],
            current: vec![0.0; net.inductor_nodes().len()],
            ledger: EnergyLedger::default(),
        }
    }

    fn flatten(&self) -> Vec<f64> {
        let mut x = self.charge.clone();
        x.extend_from_slice(&self.current);
        x.extend([self.ledger.source, self.ledger.dissipated, self.ledger.pumped]);
        x
    }

    fn unflatten(x: &[f64], nodes: usize) -> Self {
        let m = x.len() - 3;
        Self {
            charge: x[..nodes].to_vec(),
            current: x[nodes..m].to_vec(),
            ledger: EnergyLedger {
                source: x[m],
                dissipated: x[m + 1],
                pumped: x[m + 2],
            },
        }
    }
}

/// Precomputed evaluation context for the state equations.
struct Dynamics<'a> {
    net: &'a TimeDomainNetwork,
    inductors: Vec<(usize, f64)>,
    drive: Option<(usize, f64, f64, f64)>,
    omega_m: f64,
    phase_cs: Vec<(f64, f64)>,
    // scratch
    diag: Vec<f64>,
    cdot: Vec<f64>,
    v: Vec<f64>,
    cp: Vec<f64>,
}

impl<'a> Dynamics<'a> {
    fn new(net: &'a TimeDomainNetwork, drive: Option<Drive>) -> Result<Self> {
        let drive = match drive {
            None => None,
            Some(d) => {
                let node = net.port_node(d.port);
                let r = net.port_resistance[d.port as usize].ok_or_else(|| {
                    Error::domain("driven port", "a port with a source resistance")
                })?;
                Some((node, r, d.amplitude, 2.0 * PI * d.frequency))
            }
        };
        let n = net.nodes();
        Ok(Self {
            net,
            inductors: net.inductor_nodes(),
            drive,
            omega_m: 2.0 * PI * net.fm,
            phase_cs: net.shunt.iter().map(|w| (w.phase.cos(), w.phase.sin())).collect(),
            diag: vec![0.0; n],
            cdot: vec![0.0; n],
            v: vec![0.0; n],
            cp: vec![0.0; n],
        })
    }

    /// Fills `diag` with the nodal self-capacitances and `cdot` with the
    /// shunt-capacitor derivatives at time `t`.
    fn capacitances(&mut self, t: f64) {
        let net = self.net;
        let (s, c) = (self.omega_m * t).sin_cos();
        let n = net.nodes();
        for i in 0..n {
            let w = &net.shunt[i];
            let (cp, sp) = self.phase_cs[i];
            let cosv = c * cp - s * sp;
            let sinv = s * cp + c * sp;
            let mut d = w.c0 * (1.0 + w.delta_m * cosv);
            if i > 0 {
                d += net.series[i - 1];
            }
            if i + 1 < n {
                d += net.series[i];
            }
            self.diag[i] = d;
            self.cdot[i] = -w.c0 * w.delta_m * self.omega_m * sinv;
        }
    }

    /// Solves the tridiagonal `C·v = Q` (Thomas algorithm; the matrix is
    /// diagonally dominant so no pivoting is needed).
    fn voltages(&mut self, q: &[f64]) {
        let n = self.net.nodes();
        let off = &self.net.series;
        let mut denom = self.diag[0];
        self.v[0] = q[0] / denom;
        for i in 1..n {
            self.cp[i - 1] = -off[i - 1] / denom;
            denom = self.diag[i] + off[i - 1] * self.cp[i - 1];
            self.v[i] = (q[i] + off[i - 1] * self.v[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            let next = self.v[i + 1];
            self.v[i] -= self.cp[i] * next;
        }
    }

    fn source_emf(&self, t: f64) -> Option<(usize, f64)> {
        self.drive
            .map(|(node, _, amp, w)| (node, amp * (w * t).cos()))
    }

    fn derivative(&mut self, t: f64, x: &[f64], dx: &mut [f64]) {
        let n = self.net.nodes();
        self.capacitances(t);
        self.voltages(&x[..n]);
        let emf = self.source_emf(t);
        let mut p_src = 0.0;
        let mut p_diss = 0.0;
        let mut p_pump = 0.0;
        for (i, d) in dx[..n].iter_mut().enumerate() {
            let v = self.v[i];
            let g = self.net.conductance[i];
            *d = -g * v;
            p_diss += g * v * v;
            p_pump -= 0.5 * self.cdot[i] * v * v;
        }
        for (p, r) in self.net.port_resistance.iter().enumerate() {
            if let Some(r) = r {
                let node = if p == 0 { 0 } else { n - 1 };
                let e = match emf {
                    Some((dn, e)) if dn == node => e,
                    _ => 0.0,
                };
                let i = (e - self.v[node]) / r;
                dx[node] += i;
                p_src += e * i;
                p_diss += i * i * r;
            }
        }
        for (j, &(node, l)) in self.inductors.iter().enumerate() {
            let il = x[n + j];
            dx[node] -= il;
            dx[n + j] = self.v[node] / l;
        }
        let m = x.len() - 3;
        dx[m] = p_src;
        dx[m + 1] = p_diss;
        dx[m + 2] = p_pump;
    }

    fn stored_energy(&mut self, t: f64, x: &[f64]) -> f64 {
        let n = self.net.nodes();
        self.capacitances(t);
        self.voltages(&x[..n]);
        let qv: f64 = x[..n].iter().zip(&self.v).map(|(q, v)| q * v).sum();
        let li: f64 = self
            .inductors
            .iter()
            .enumerate()
            .map(|(j, &(_, l))| l * x[n + j] * x[n + j])
            .sum();
        0.5 * (qv + li)
    }
}

/// Samples recorded from `record_from` onward: node voltages and the ledger
/// plus stored energy at every step boundary.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub nodes: usize,
    /// Time of the first recorded sample.
    pub t_start: f64,
    /// `samples × nodes`, row-major.
    pub voltages: Vec<f64>,
    pub ledger: Vec<EnergyLedger>,
    pub stored: Vec<f64>,
    pub final_state: State,
    pub final_time: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.stored.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stored.is_empty()
    }

    pub fn node_series(&self, node: usize) -> Vec<f64> {
        self.voltages.iter().skip(node).step_by(self.nodes).copied().collect()
    }
}

/// Fixed-step RK4 from `t = 0` for `steps` steps; samples are kept for the
/// step indices `record_from..steps` (the state before each step).
pub fn integrate(
    net: &TimeDomainNetwork,
    drive: Option<Drive>,
    initial: &State,
    dt: f64,
    steps: usize,
    record_from: usize,
) -> Result<Trajectory> {
    net.validate()?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::domain(format!("dt = {dt}"), "dt > 0"));
    }
    let nodes = net.nodes();
    let mut dynamics = Dynamics::new(net, drive)?;
    let mut x = initial.flatten();
    if x.len() != nodes + dynamics.inductors.len() + 3 {
        return Err(Error::domain("initial state length", "one charge per node, one current per inductor"));
    }
    let dim = x.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    let recorded = steps.saturating_sub(record_from);
    let mut traj = Trajectory {
        dt,
        nodes,
        t_start: record_from as f64 * dt,
        voltages: Vec::with_capacity(recorded * nodes),
        ledger: Vec::with_capacity(recorded),
        stored: Vec::with_capacity(recorded),
        final_state: initial.clone(),
        final_time: 0.0,
    };

    for step in 0..steps {
        let t = step as f64 * dt;
        if step >= record_from {
            let w = dynamics.stored_energy(t, &x);
            traj.voltages.extend_from_slice(&dynamics.v);
            traj.stored.push(w);
            traj.ledger.push(EnergyLedger {
                source: x[dim - 3],
                dissipated: x[dim - 2],
                pumped: x[dim - 1],
            });
        }
        dynamics.derivative(t, &x, &mut k1);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        dynamics.derivative(t + 0.5 * dt, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        dynamics.derivative(t + 0.5 * dt, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = x[i] + dt * k3[i];
        }
        dynamics.derivative(t + dt, &tmp, &mut k4);
        for i in 0..dim {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if step % 64 == 0 && x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration { time: t + dt });
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integration {
            time: steps as f64 * dt,
        });
    }
    traj.final_time = steps as f64 * dt;
    traj.final_state = State::unflatten(&x, nodes);
    Ok(traj)
}

/// Stored energy of a state at time `t`.
pub fn stored_energy(net: &TimeDomainNetwork, state: &State, t: f64) -> Result<f64> {
    let mut d = Dynamics::new(net, None)?;
    Ok(d.stored_energy(t, &state.flatten()))
}

/// Common period of `f` and `fm` as `(T, carrier cycles per T)`; `fm = 0`
/// gives the carrier period. Ratios need a denominator ≤ `max_denominator`.
pub fn common_period(f: f64, fm: f64, max_denominator: u64) -> Result<(f64, u64)> {
    if !(f > 0.0) {
        return Err(Error::domain(format!("f = {f}"), "f > 0"));
    }
    if fm == 0.0 {
        return Ok((1.0 / f, 1));
    }
    let r = f / fm;
    for q in 1..=max_denominator {
        let x = r * q as f64;
        let p = x.round();
        if p >= 1.0 && (x - p).abs() <= 1e-9 * x {
            // T holds p carrier cycles and q pump cycles
            return Ok((q as f64 / fm, p as u64));
        }
    }
    Err(Error::Incommensurate {
        frequency: f,
        modulation: fm,
    })
}

/// Phasor `(2/N)·Σ x_n e^{-jωt_n}` over the given samples.
pub fn project(samples: &[f64], t_start: f64, dt: f64, omega: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -omega * dt);
    let mut rot = Complex64::from_polar(1.0, -omega * t_start);
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &x) in samples.iter().enumerate() {
        // re-anchor periodically to keep the recurrence accurate
        if i % 1024 == 0 {
            rot = Complex64::from_polar(1.0, -omega * (t_start + i as f64 * dt));
        }
        acc += rot * x;
        rot *= step;
    }
    acc * (2.0 / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateExtract {
    pub k_range: usize,
    /// Amplitudes for `k = -k_range..=k_range` from the last window.
    pub amplitudes: Vec<Complex64>,
    pub settling_metric: f64,
}

impl SteadyStateExtract {
    pub fn amplitude(&self, k: i32) -> Complex64 {
        self.amplitudes[(k + self.k_range as i32) as usize]
    }
}

/// Projects the last two windows of `window_steps` samples of `node` onto
/// `f + k·fm`; the settling metric is the largest change between the two
/// windows relative to the largest amplitude.
pub fn extract_steady(
    traj: &Trajectory,
    node: usize,
    f: f64,
    fm: f64,
    k_range: usize,
    window_steps: usize,
    threshold: f64,
) -> Result<SteadyStateExtract> {
    if window_steps == 0 || traj.len() < 2 * window_steps {
        return Err(Error::domain(
            "recorded trajectory",
            "at least two extraction windows",
        ));
    }
    let series = traj.node_series(node);
    let len = series.len();
    let last_start = len - window_steps;
    let prev_start = len - 2 * window_steps;
    let k = k_range as i32;
    let mut last = Vec::with_capacity(2 * k_range + 1);
    let mut prev = Vec::with_capacity(2 * k_range + 1);
    for kk in -k..=k {
        let omega = 2.0 * PI * (f + kk as f64 * fm);
        last.push(project(
            &series[last_start..],
            traj.t_start + last_start as f64 * traj.dt,
            traj.dt,
            omega,
        ));
        prev.push(project(
            &series[prev_start..last_start],
            traj.t_start + prev_start as f64 * traj.dt,
            traj.dt,
            omega,
        ));
    }
    let scale = last.iter().map(|a| a.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let metric = last
        .iter()
        .zip(&prev)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale;
    if !(metric <= threshold) {
        return Err(Error::NotSettled { metric, threshold });
    }
    Ok(SteadyStateExtract {
        k_range,
        amplitudes: last,
        settling_metric: metric,
    })
}

/// Time-averaged powers over the last `window_steps` recorded samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBalance {
    pub source: f64,
    pub dissipated: f64,
    pub pumped: f64,
    pub stored_change: f64,
}

impl PowerBalance {
    /// `|source + pumped − dissipated − stored_change|` relative to the
    /// source power.
    pub fn relative_residual(&self) -> f64 {
        (self.source + self.pumped - self.dissipated - self.stored_change).abs()
            / self.source.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn power_balance(traj: &Trajectory, window_steps: usize) -> Result<PowerBalance> {
    let n = traj.len();
    if window_steps == 0 || n <= window_steps {
        return Err(Error::domain("recorded trajectory", "longer than the balance window"));
    }
    let (a, b) = (n - 1 - window_steps, n - 1);
    let span = window_steps as f64 * traj.dt;
    let (la, lb) = (traj.ledger[a], traj.ledger[b]);
    Ok(PowerBalance {
        source: (lb.source - la.source) / span,
        dissipated: (lb.dissipated - la.dissipated) / span,
        pumped: (lb.pumped - la.pumped) / span,
        stored_change: (traj.stored[b] - traj.stored[a]) / span,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// RK4 steps per cycle of the faster of carrier and pump.
    pub steps_per_cycle: u64,
    /// Settling time in pump cycles (carrier cycles when unmodulated).
    pub settle_periods: u64,
    /// Extraction window in the same unit, rounded up to whole common
    /// periods of carrier and pump.
    pub window_periods: u64,
    pub settle_threshold: f64,
    /// Sidebands extracted on each side.
    pub k_range: usize,
    pub max_denominator: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            steps_per_cycle: 200,
            settle_periods: 200,
            window_periods: 8,
            settle_threshold: 1e-6,
            k_range: 2,
            max_denominator: 64,
        }
    }
}

/// Scattering data from the time-domain runs, same power-wave convention
/// as the harmonic-balance solver. Vectors are indexed by `k + k_range`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResponse {
    pub frequency: f64,
    pub k_range: usize,
    pub s21: Vec<Complex64>,
    pub s12: Vec<Complex64>,
    pub s11: Vec<Complex64>,
    pub s22: Vec<Complex64>,
    pub settling_metric: f64,
    pub steps_per_period: u64,
}

impl OracleResponse {
    pub fn s21_db(&self) -> f64 {
        db20(self.s21[self.k_range].norm())
    }

    pub fn s12_db(&self) -> f64 {
        db20(self.s12[self.k_range].norm())
    }

    pub fn isolation_db(&self) -> f64 {
        self.s21_db() - self.s12_db()
    }
}

struct DirectionalRun {
    through: Vec<Complex64>,
    reflected: Vec<Complex64>,
    metric: f64,
}

fn run_direction(
    net: &TimeDomainNetwork,
    port: Port,
    f: f64,
    dt: f64,
    period_steps: u64,
    units_per_period: u64,
    cfg: &OracleConfig,
) -> Result<DirectionalRun> {
    let window = (cfg.window_periods.div_ceil(units_per_period).max(1) * period_steps) as usize;
    let settle = (cfg.settle_periods as f64 * period_steps as f64 / units_per_period as f64).round() as usize;
    let steps = settle + 2 * window;
    let drive = Drive {
        port,
        amplitude: 1.0,
        frequency: f,
    };
    let traj = integrate(net, Some(drive), &State::zero(net), dt, steps, settle)?;
    let rd = net.port_resistance[port as usize].expect("resistive port");
    let rf = net.port_resistance[port.other() as usize].expect("resistive port");
    let near = extract_steady(&traj, net.port_node(port), f, net.fm, cfg.k_range, window, cfg.settle_threshold)?;
    let far = extract_steady(
        &traj,
        net.port_node(port.other()),
        f,
        net.fm,
        cfg.k_range,
        window,
        cfg.settle_threshold,
    )?;
    let incident = drive.amplitude / (2.0 * rd.sqrt());
    let k = cfg.k_range as i32;
    let through = (-k..=k).map(|kk| far.amplitude(kk) / rf.sqrt() / incident).collect();
    let reflected = (-k..=k)
        .map(|kk| {
            let v = near.amplitude(kk);
            let e = if kk == 0 { drive.amplitude } else { 0.0 };
            (2.0 * v - e) / (2.0 * rd.sqrt()) / incident
        })
        .collect();
    Ok(DirectionalRun {
        through,
        reflected,
        metric: near.settling_metric.max(far.settling_metric),
    })
}

/// Drives each port in turn (concurrently) at carrier `f` and extracts the
/// steady-state scattering parameters. The ladder's pump frequency must be
/// commensurate with `f`.
pub fn oracle_sparams(ladder: &ModulatedLadder, f: f64, cfg: &OracleConfig) -> Result<OracleResponse> {
    let net = TimeDomainNetwork::from_ladder(ladder)?;
    let fm = if ladder.modulation.is_active() { ladder.modulation.fm } else { 0.0 };
    let net = TimeDomainNetwork { fm, ..net };
    let (period, carrier_cycles) = common_period(f, fm, cfg.max_denominator)?;
    // steps per common period: steps_per_cycle × cycles of the faster tone
    let fast_cycles = if fm > f {
        (period * fm).round() as u64
    } else {
        carrier_cycles
    };
    let period_steps = cfg.steps_per_cycle * fast_cycles;
    let dt = period / period_steps as f64;
    let units = if fm > 0.0 { (period * fm).round() as u64 } else { 1 };
    let (fwd, rev) = rayon::join(
        || run_direction(&net, Port::One, f, dt, period_steps, units, cfg),
        || run_direction(&net, Port::Two, f, dt, period_steps, units, cfg),
    );
    let (fwd, rev) = (fwd?, rev?);
    Ok(OracleResponse {
        frequency: f,
        k_range: cfg.k_range,
        s21: fwd.through,
        s11: fwd.reflected,
        s12: rev.through,
        s22: rev.reflected,
        settling_metric: fwd.metric.max(rev.metric),
        steps_per_period: period_steps,
    })
}

/// Oracle responses at several carriers, in input order.
pub fn oracle_sweep(ladder: &ModulatedLadder, freqs: &[f64], cfg: &OracleConfig) -> Vec<Result<OracleResponse>> {
    freqs.par_iter().map(|&f| oracle_sparams(ladder, f, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cap(c0: f64) -> CapacitorWaveform {
        CapacitorWaveform {
            c0,
            delta_m: 0.0,
            phase: 0.0,
        }
    }

    fn single_node(c: f64, l: Option<f64>, g: f64) -> TimeDomainNetwork {
        TimeDomainNetwork {
            series: vec![],
            shunt: vec![cap(c)],
            inductance: vec![l],
            conductance: vec![g],
            port_resistance: [None, None],
            fm: 0.0,
        }
    }

    #[test]
    fn lossless_lc_conserves_energy() {
        let (l, c) = (1e-9, 1e-12);
        let net = single_node(c, Some(l), 0.0);
        let period = 2.0 * PI * (l * c).sqrt();
        let mut s = State::zero(&net);
        s.charge[0] = 1e-12;
        let w0 = stored_energy(&net, &s, 0.0).unwrap();
        let steps = 10_000 * 500;
        let traj = integrate(&net, None, &s, period / 500.0, steps, steps).unwrap();
        let w1 = stored_energy(&net, &traj.final_state, traj.final_time).unwrap();
        assert!(((w1 - w0) / w0).abs() < 1e-6, "{w0} {w1}");
    }

    #[test]
    fn rc_discharge() {
        let (r, c) = (50.0, 2e-12);
        let net = single_node(c, None, 1.0 / r);
        let tau = r * c;
        let mut s = State::zero(&net);
        s.charge[0] = c;
        let traj = integrate(&net, None, &s, tau / 1000.0, 1000, 1000).unwrap();
        let v = traj.final_state.charge[0] / c;
        assert!((v - (-1.0f64).exp()).abs() < 1e-8, "{v}");
    }

    #[test]
    fn pure_tone_projection() {
        let (f, n) = (1e9, 400usize);
        let dt = 4.0 / f / n as f64;
        let x: Vec<f64> = (0..n)
            .map(|i| 0.7 * (2.0 * PI * f * i as f64 * dt + 0.3).cos())
            .collect();
        let a = project(&x, 0.0, dt, 2.0 * PI * f);
        assert!((a - Complex64::from_polar(0.7, 0.3)).norm() < 1e-10);
        for m in [0.25, 0.5, 0.75, 1.25, 2.0] {
            assert!(project(&x, 0.0, dt, 2.0 * PI * f * m).norm() < 1e-10);
        }
    }

    #[test]
    fn two_tone_projection() {
        let (f, fm) = (32.0, 1.0);
        let n = 6400usize;
        let dt = 1.0 / n as f64;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                (2.0 * PI * f * t).cos() + 0.25 * (2.0 * PI * (f + fm) * t - 1.0).cos()
            })
            .collect();
        assert!((project(&x, 0.0, dt, 2.0 * PI * f) - 1.0).norm() < 1e-10);
        let b = project(&x, 0.0, dt, 2.0 * PI * (f + fm));
        assert!((b - Complex64::from_polar(0.25, -1.0)).norm() < 1e-10);
        assert!(project(&x, 0.0, dt, 2.0 * PI * (f - fm)).norm() < 1e-10);
    }

    #[test]
    fn commensurate_ratios() {
        let (t, p) = common_period(2.4e9, 75e6, 64).unwrap();
        assert_eq!(p, 32);
        assert!((t - 1.0 / 75e6).abs() < 1e-20);
        let (_, p) = common_period(2.4e9, 2.4e9 / 31.0, 64).unwrap();
        assert_eq!(p, 31);
        let (t, p) = common_period(3.0, 2.0, 64).unwrap();
        assert_eq!((p, t), (3, 1.0));
        assert!(matches!(
            common_period(1.0, std::f64::consts::SQRT_2, 64),
            Err(Error::Incommensurate { .. })
        ));
    }

    #[test]
    fn unsettled_window_is_reported() {
        let (r, c) = (50.0, 2e-12);
        let net = single_node(c, None, 1.0 / r);
        let mut s = State::zero(&net);
        s.charge[0] = c;
        let tau = r * c;
        let traj = integrate(&net, None, &s, tau / 100.0, 400, 0).unwrap();
        let r = extract_steady(&traj, 0, 1.0 / tau, 0.0, 0, 100, 1e-6);
        assert!(matches!(r, Err(Error::NotSettled { .. })));
    }

    #[test]
    fn divergence_is_reported() {
        let net = single_node(1e-12, Some(1e-9), 0.0);
        let mut s = State::zero(&net);
        s.charge[0] = 1e-12;
        // dt far beyond the RK4 stability limit
        let r = integrate(&net, None, &s, 1e-6, 100_000, 100_000);
        assert!(matches!(r, Err(Error::Integration { .. })));
    }

    #[test]
    fn complex_termination_is_rejected() {
        use crate::circuit::Termination;
        let spec = crate::synth::FilterSpec::default();
        let l = crate::synth::design_ladder(&spec, 0.86e-12, 125.0).unwrap();
        let l = l.with_load(Termination::Fixed {
            impedance: Complex64::new(50.0, 5.0),
        });
        assert!(matches!(TimeDomainNetwork::from_ladder(&l), Err(Error::Domain { .. })));
    }
}
