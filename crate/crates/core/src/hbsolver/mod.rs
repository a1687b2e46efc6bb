//! Harmonic-balance analysis of the linear time-periodic ladder.
//!
//! The response to a carrier at `ω` contains the sidebands
//! `ω_k = ω + k·ω_m`, `k ∈ [-k_max, k_max]`. Unknowns are the node voltage
//! phasors `V[n, k]`, ordered harmonic-major: `index = (k + k_max)·nodes + n`.
//!
//! Time-invariant branches stamp block-diagonal admittances evaluated at
//! `ω_k`. A modulated capacitor `C(t) = C0 + c1·e^{jω_m t} + c1*·e^{-jω_m t}`
//! carries `I_k = jω_k (C0·V_k + c1·V_{k-1} + c1*·V_{k+1})`, which couples
//! neighbouring harmonics of the same node only.

mod lu;

pub use lu::{relative_residual, DenseMatrix, LuFactors, SingularPivot, PIVOT_FLOOR};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::ModulatedLadder;
use crate::error::{Error, Result};
use crate::units::{angular, db20};

pub const DEFAULT_K_MAX: usize = 5;

/// Thevenin source amplitude used for excitation, volts.
const DRIVE_AMPLITUDE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Port {
    One,
    Two,
}

impl Port {
    pub fn other(self) -> Port {
        match self {
            Port::One => Port::Two,
            Port::Two => Port::One,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicBasis {
    k_max: usize,
    omega: f64,
    omega_m: f64,
}

impl HarmonicBasis {
    pub fn new(k_max: usize, f: f64, fm: f64) -> Result<Self> {
        if k_max < 1 {
            return Err(Error::domain(format!("k_max = {k_max}"), "k_max >= 1"));
        }
        Self::unchecked(k_max, f, fm)
    }

    /// Single-harmonic basis; exact for unmodulated ladders.
    pub fn fundamental_only(f: f64) -> Result<Self> {
        Self::unchecked(0, f, 0.0)
    }

    fn unchecked(k_max: usize, f: f64, fm: f64) -> Result<Self> {
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::domain(format!("carrier f = {f}"), "f > 0"));
        }
        if !(fm >= 0.0) || !fm.is_finite() {
            return Err(Error::domain(format!("fm = {fm}"), "fm >= 0"));
        }
        let basis = Self {
            k_max,
            omega: angular(f),
            omega_m: angular(fm),
        };
        for k in basis.indices() {
            if basis.omega_k(k).abs() < basis.omega * 1e-9 {
                return Err(Error::HarmonicCollision { frequency: f, k });
            }
        }
        Ok(basis)
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn size(&self) -> usize {
        2 * self.k_max + 1
    }

    pub fn indices(&self) -> impl Iterator<Item = i32> {
        let k = self.k_max as i32;
        -k..=k
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn omega_m(&self) -> f64 {
        self.omega_m
    }

    pub fn omega_k(&self, k: i32) -> f64 {
        self.omega + f64::from(k) * self.omega_m
    }

    pub fn frequency_k(&self, k: i32) -> f64 {
        self.omega_k(k) / (2.0 * std::f64::consts::PI)
    }

    pub fn carrier(&self) -> f64 {
        self.frequency_k(0)
    }

    fn slot(&self, k: i32) -> usize {
        (k + self.k_max as i32) as usize
    }
}

/// Assembled block nodal system `Y·V = I` for one driven port.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub basis: HarmonicBasis,
    pub nodes: usize,
    pub driven_port: Port,
    pub matrix: DenseMatrix,
    pub rhs: Vec<Complex64>,
    pub source_z: Vec<Complex64>,
    pub load_z: Vec<Complex64>,
}

impl BlockSystem {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn index(&self, node: usize, k: i32) -> usize {
        self.basis.slot(k) * self.nodes + node
    }
}

/// Termination impedance at a signed harmonic frequency; a real network
/// has `Z(-ω) = Z(ω)*`.
fn termination_at(t: &crate::circuit::Termination, f: f64) -> Result<Complex64> {
    let z = t.impedance_at(f.abs())?;
    Ok(if f < 0.0 { z.conj() } else { z })
}

struct Assembly {
    matrix: DenseMatrix,
    source_z: Vec<Complex64>,
    load_z: Vec<Complex64>,
}

fn assemble_matrix(ladder: &ModulatedLadder, basis: &HarmonicBasis) -> Result<Assembly> {
    ladder.validate()?;
    let n_res = ladder.order();
    let nodes = ladder.node_count();
    let load_node = nodes - 1;
    let dim = nodes * basis.size();
    let mut y = DenseMatrix::zeros(dim);
    let mut source_z = Vec::with_capacity(basis.size());
    let mut load_z = Vec::with_capacity(basis.size());
    let modulated = ladder.modulation.is_active() && basis.k_max > 0;
    let j = Complex64::i();

    for k in basis.indices() {
        let w = basis.omega_k(k);
        let fk = basis.frequency_k(k);
        let base = basis.slot(k) * nodes;
        let zs = termination_at(&ladder.source, fk)?;
        let zl = termination_at(&ladder.load, fk)?;
        source_z.push(zs);
        load_z.push(zl);

        y[(base, base)] += zs.inv();
        y[(base + load_node, base + load_node)] += zl.inv();

        let mut series = |a: usize, b: usize, c: f64| {
            let adm = j * w * c;
            y[(base + a, base + a)] += adm;
            y[(base + b, base + b)] += adm;
            y[(base + a, base + b)] -= adm;
            y[(base + b, base + a)] -= adm;
        };
        series(0, 1, ladder.external_in);
        series(n_res, load_node, ladder.external_out);
        for (i, &c) in ladder.coupling.iter().enumerate() {
            series(i + 1, i + 2, c);
        }

        for (i, r) in ladder.resonators.iter().enumerate() {
            let node = i + 1;
            let row = base + node;
            y[(row, row)] += (j * w * r.inductance).inv() + r.conductance + j * w * r.capacitance;
            if modulated {
                let c1 = ladder.waveform(i).first_harmonic();
                if k > -(basis.k_max as i32) {
                    let col = basis.slot(k - 1) * nodes + node;
                    y[(row, col)] += j * w * c1;
                }
                if k < basis.k_max as i32 {
                    let col = basis.slot(k + 1) * nodes + node;
                    y[(row, col)] += j * w * c1.conj();
                }
            }
        }
    }
    Ok(Assembly {
        matrix: y,
        source_z,
        load_z,
    })
}

fn excitation(basis: &HarmonicBasis, nodes: usize, port: Port, a: &Assembly) -> Vec<Complex64> {
    let mut rhs = vec![Complex64::new(0.0, 0.0); nodes * basis.size()];
    let k0 = basis.slot(0);
    match port {
        Port::One => rhs[k0 * nodes] = DRIVE_AMPLITUDE / a.source_z[k0],
        Port::Two => rhs[k0 * nodes + nodes - 1] = DRIVE_AMPLITUDE / a.load_z[k0],
    }
    rhs
}

/// Builds the block system with a unit Thevenin source at `driven_port`
/// (harmonic 0 only); the other port is terminated passively.
pub fn assemble(
    ladder: &ModulatedLadder,
    basis: &HarmonicBasis,
    driven_port: Port,
) -> Result<BlockSystem> {
    let a = assemble_matrix(ladder, basis)?;
    let nodes = ladder.node_count();
    let rhs = excitation(basis, nodes, driven_port, &a);
    Ok(BlockSystem {
        basis: *basis,
        nodes,
        driven_port,
        matrix: a.matrix,
        rhs,
        source_z: a.source_z,
        load_z: a.load_z,
    })
}

/// Node voltage phasors `V[node, k]`.
#[derive(Debug, Clone)]
pub struct NodeVoltages {
    pub basis: HarmonicBasis,
    pub nodes: usize,
    pub values: Vec<Complex64>,
}

impl NodeVoltages {
    pub fn get(&self, node: usize, k: i32) -> Complex64 {
        self.values[self.basis.slot(k) * self.nodes + node]
    }
}

fn factor(matrix: DenseMatrix, frequency: f64) -> Result<LuFactors> {
    LuFactors::factor(matrix).map_err(|p| Error::SingularPivot {
        frequency,
        index: p.index,
        magnitude: p.magnitude,
    })
}

/// Solves `Y·x = b`, refining once if the relative residual exceeds 1e-12.
fn solve_factored(lu: &LuFactors, matrix: &DenseMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let mut x = lu.solve(b);
    if relative_residual(matrix, &x, b) > 1e-12 {
        let ax = matrix.mul_vec(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let dx = lu.solve(&r);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }
    x
}

pub fn solve_dense(system: &BlockSystem) -> Result<NodeVoltages> {
    let lu = factor(system.matrix.clone(), system.basis.carrier())?;
    let values = solve_factored(&lu, &system.matrix, &system.rhs);
    Ok(NodeVoltages {
        basis: system.basis,
        nodes: system.nodes,
        values,
    })
}

/// Direction-dependent scattering data at one carrier frequency.
///
/// Entries are indexed by harmonic slot `k + k_max`. `s21[k]` is the power
/// wave leaving port 2 at `ω_k` per unit incident power wave at port 1 and
/// `ω`; `s11[k]` the wave leaving port 1 at `ω_k` for the same drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicResponse {
    pub frequency: f64,
    pub k_max: usize,
    pub s21: Vec<Complex64>,
    pub s12: Vec<Complex64>,
    pub s11: Vec<Complex64>,
    pub s22: Vec<Complex64>,
}

impl HarmonicResponse {
    pub fn slot(&self, k: i32) -> usize {
        (k + self.k_max as i32) as usize
    }

    pub fn harmonics(&self) -> impl Iterator<Item = i32> {
        let k = self.k_max as i32;
        -k..=k
    }

    pub fn s21_fund(&self) -> Complex64 {
        self.s21[self.k_max]
    }

    pub fn s12_fund(&self) -> Complex64 {
        self.s12[self.k_max]
    }

    pub fn s11_fund(&self) -> Complex64 {
        self.s11[self.k_max]
    }

    pub fn s22_fund(&self) -> Complex64 {
        self.s22[self.k_max]
    }

    pub fn s21_db(&self) -> f64 {
        db20(self.s21_fund().norm())
    }

    pub fn s12_db(&self) -> f64 {
        db20(self.s12_fund().norm())
    }

    pub fn s11_db(&self) -> f64 {
        db20(self.s11_fund().norm())
    }

    pub fn s22_db(&self) -> f64 {
        db20(self.s22_fund().norm())
    }

    /// `s21_db − s12_db` at the fundamental.
    pub fn isolation_db(&self) -> f64 {
        self.s21_db() - self.s12_db()
    }

    /// Fraction of the incident port-1 power that leaves at harmonics other
    /// than the fundamental (both ports).
    pub fn conversion_fraction_forward(&self) -> f64 {
        self.harmonics()
            .filter(|&k| k != 0)
            .map(|k| {
                let s = self.slot(k);
                self.s21[s].norm_sqr() + self.s11[s].norm_sqr()
            })
            .sum()
    }
}

fn power_wave_out(v: Complex64, z: Complex64) -> Complex64 {
    // wave into a passive termination z seen from the network: V·√R / Z
    v * z.re.sqrt() / z
}

fn reflected_wave(v: Complex64, e: f64, z: Complex64) -> Complex64 {
    let i = (e - v) / z;
    (v - z.conj() * i) / (2.0 * z.re.sqrt())
}

/// Scattering response for a given basis. Both port drives share one
/// factorization since only the excitation differs.
pub fn sparams_with_basis(ladder: &ModulatedLadder, basis: &HarmonicBasis) -> Result<HarmonicResponse> {
    let a = assemble_matrix(ladder, basis)?;
    let nodes = ladder.node_count();
    let load_node = nodes - 1;
    let lu = factor(a.matrix.clone(), basis.carrier())?;
    let k0 = basis.slot(0);

    let mut out = HarmonicResponse {
        frequency: basis.carrier(),
        k_max: basis.k_max,
        s21: Vec::with_capacity(basis.size()),
        s12: Vec::with_capacity(basis.size()),
        s11: Vec::with_capacity(basis.size()),
        s22: Vec::with_capacity(basis.size()),
    };

    for port in [Port::One, Port::Two] {
        let rhs = excitation(basis, nodes, port, &a);
        let v = solve_factored(&lu, &a.matrix, &rhs);
        let (drive_node, far_node, drive_z, far_z) = match port {
            Port::One => (0, load_node, &a.source_z, &a.load_z),
            Port::Two => (load_node, 0, &a.load_z, &a.source_z),
        };
        let incident = DRIVE_AMPLITUDE / (2.0 * drive_z[k0].re.sqrt());
        for k in basis.indices() {
            let s = basis.slot(k);
            let e = if k == 0 { DRIVE_AMPLITUDE } else { 0.0 };
            let through = power_wave_out(v[s * nodes + far_node], far_z[s]) / incident;
            let refl = reflected_wave(v[s * nodes + drive_node], e, drive_z[s]) / incident;
            match port {
                Port::One => {
                    out.s21.push(through);
                    out.s11.push(refl);
                }
                Port::Two => {
                    out.s12.push(through);
                    out.s22.push(refl);
                }
            }
        }
    }
    Ok(out)
}

/// Scattering response at carrier `f` using the ladder's own modulation
/// frequency and `k_max` sidebands on each side.
pub fn sparams(ladder: &ModulatedLadder, k_max: usize, f: f64) -> Result<HarmonicResponse> {
    let basis = HarmonicBasis::new(k_max, f, ladder.modulation.fm)?;
    sparams_with_basis(ladder, &basis)
}

/// Fundamental-only response, exact when the ladder is unmodulated.
pub fn static_sparams(ladder: &ModulatedLadder, f: f64) -> Result<HarmonicResponse> {
    sparams_with_basis(ladder, &HarmonicBasis::fundamental_only(f)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub frequency: f64,
    pub result: Result<HarmonicResponse>,
}

/// Evaluates every grid point independently (in parallel); results keep
/// grid order. Per-point failures are reported in place.
pub fn sweep(ladder: &ModulatedLadder, k_max: usize, f_grid: &[f64]) -> Result<Vec<SweepPoint>> {
    if f_grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::domain("sweep grid", "monotone non-decreasing frequencies"));
    }
    Ok(f_grid
        .par_iter()
        .map(|&f| SweepPoint {
            frequency: f,
            result: sparams(ladder, k_max, f),
        })
        .collect())
}

/// Evenly spaced grid including both end points.
pub fn linear_grid(f_start: f64, f_stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![f_start],
        _ => (0..points)
            .map(|i| f_start + (f_stop - f_start) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}
