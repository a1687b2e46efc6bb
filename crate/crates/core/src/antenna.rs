//! Thin-wire Yagi-Uda model by the induced-EMF method.
//!
//! Elements are parallel to `z`, centred on `z = 0` and placed along the
//! `x` axis, so the endfire direction (reflector → directors) is
//! `θ = 90°, φ = 0°`. Every element carries the sinusoidal current
//! `I_m sin(k(h − |z|))`; impedances are referred to the base current.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{ImpedanceTable, Termination};
use crate::error::{Error, Result};
use crate::hbsolver::{DenseMatrix, LuFactors};
use crate::quadrature::{self, gauss_legendre, Tolerance};
use crate::units::{db10, wavelength, ETA0};

/// Boresight (endfire) direction, degrees.
pub const BORESIGHT_THETA_DEG: f64 = 90.0;
pub const BORESIGHT_PHI_DEG: f64 = 0.0;

pub const DIRECTIVITY_FLOOR_DBI: f64 = -300.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireElement {
    /// Half of the tip-to-tip length, meters.
    pub half_length: f64,
    /// Wire radius, meters.
    pub radius: f64,
    /// Coordinate along the endfire axis, meters.
    pub position: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YagiGeometry {
    pub elements: Vec<WireElement>,
    pub driven: usize,
}

/// Element lengths (full, in wavelengths) and spacings of a reflector +
/// driver + directors layout.
#[derive(Debug, Clone, PartialEq)]
pub struct YagiLayout {
    pub reflector: f64,
    pub driver: f64,
    pub directors: Vec<f64>,
    /// Gaps between consecutive elements, wavelengths.
    pub spacings: Vec<f64>,
    /// Wire radius, wavelengths.
    pub radius: f64,
}

impl YagiLayout {
    /// Textbook starting point: reflector 0.51λ, driver 0.47λ, two 0.43λ
    /// directors, spacings 0.20λ/0.25λ/0.25λ, radius λ/1000.
    pub fn nominal() -> Self {
        Self {
            reflector: 0.51,
            driver: 0.47,
            directors: vec![0.43, 0.43],
            spacings: vec![0.20, 0.25, 0.25],
            radius: 1e-3,
        }
    }

    /// The nominal layout after calibration at 2.4 GHz toward
    /// `Re Z_in ≈ 50 Ω`, `Im Z_in ≈ 0` and about 6 dBi endfire directivity
    /// (see [`crate::optimizer::calibrate_yagi`]).
    pub fn calibrated() -> Self {
        Self {
            reflector: CALIBRATED[0],
            driver: CALIBRATED[1],
            directors: vec![CALIBRATED[2], CALIBRATED[2]],
            spacings: vec![CALIBRATED[3], CALIBRATED[4], CALIBRATED[4]],
            radius: 1e-3,
        }
    }

    pub fn geometry(&self, f: f64) -> YagiGeometry {
        let lambda = wavelength(f);
        let mut lengths = vec![self.reflector, self.driver];
        lengths.extend_from_slice(&self.directors);
        let mut position = 0.0;
        let mut elements = Vec::with_capacity(lengths.len());
        for (i, l) in lengths.iter().enumerate() {
            if i > 0 {
                position += self.spacings[i - 1] * lambda;
            }
            elements.push(WireElement {
                half_length: 0.5 * l * lambda,
                radius: self.radius * lambda,
                position,
            });
        }
        YagiGeometry {
            elements,
            driven: 1,
        }
    }
}

/// `[reflector, driver, director, first gap, director gap]` in wavelengths.
pub(crate) const CALIBRATED: [f64; 5] = [0.54, 0.4666, 0.38, 0.1746, 0.3];

impl YagiGeometry {
    /// The calibrated four-element layout scaled for `f`.
    pub fn default_at(f: f64) -> Self {
        YagiLayout::calibrated().geometry(f)
    }

    /// One isolated dipole.
    pub fn dipole(half_length: f64, radius: f64) -> Self {
        Self {
            elements: vec![WireElement {
                half_length,
                radius,
                position: 0.0,
            }],
            driven: 0,
        }
    }

    /// A single element is accepted as the isolated-dipole case.
    pub fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::Geometry("no elements".into()));
        }
        if self.driven >= self.elements.len() {
            return Err(Error::Geometry(format!(
                "driven index {} out of range",
                self.driven
            )));
        }
        for (i, e) in self.elements.iter().enumerate() {
            if !(e.half_length > 0.0) || !(e.radius > 0.0) {
                return Err(Error::Geometry(format!("element {i} has non-positive size")));
            }
            if !(e.radius < e.half_length / 20.0) {
                return Err(Error::Geometry(format!(
                    "element {i}: radius {} is not thin relative to half-length {}",
                    e.radius, e.half_length
                )));
            }
        }
        for (i, w) in self.elements.windows(2).enumerate() {
            if !(w[1].position > w[0].position) {
                return Err(Error::Geometry(format!(
                    "element positions must increase strictly (elements {} and {})",
                    i,
                    i + 1
                )));
            }
            let gap = w[1].position - w[0].position;
            if !(gap > w[0].radius.max(w[1].radius)) {
                return Err(Error::Geometry(format!(
                    "elements {i} and {} overlap",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Reverses the element order about `x = 0`.
    pub fn mirrored(&self) -> Self {
        let n = self.elements.len();
        Self {
            elements: self
                .elements
                .iter()
                .rev()
                .map(|e| WireElement {
                    position: -e.position,
                    ..*e
                })
                .collect(),
            driven: n - 1 - self.driven,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            elements: self
                .elements
                .iter()
                .map(|e| WireElement {
                    half_length: e.half_length * s,
                    radius: e.radius * s,
                    position: e.position * s,
                })
                .collect(),
            driven: self.driven,
        }
    }
}

fn check_thin(half_length: f64, radius: f64) -> Result<()> {
    if !(half_length > 0.0 && radius > 0.0 && radius < half_length / 20.0) {
        return Err(Error::Geometry(format!(
            "thin-wire model needs 0 < radius < half_length/20 (radius {radius}, half-length {half_length})"
        )));
    }
    Ok(())
}

fn base_factor(k: f64, h: f64) -> Result<f64> {
    let s = (k * h).sin();
    if s.abs() < 1e-3 {
        return Err(Error::Geometry(format!(
            "element of half-length {h} m is near a full-wave multiple; base current vanishes"
        )));
    }
    Ok(s)
}

/// Mutual impedance (base-referred) of element `b` due to the current on
/// element `a`, integrated over `b`. Reciprocity makes the result symmetric
/// up to quadrature error; [`mutual_impedance`] returns an exactly
/// symmetric value.
pub fn mutual_impedance_directed(h_a: f64, h_b: f64, d: f64, f: f64) -> Result<Complex64> {
    let k = 2.0 * PI * f / crate::units::C0;
    let j = Complex64::i();
    let ckh = (k * h_a).cos();
    let field = |z: f64| {
        let r1 = (d * d + (z - h_a) * (z - h_a)).sqrt();
        let r2 = (d * d + (z + h_a) * (z + h_a)).sqrt();
        let r0 = (d * d + z * z).sqrt();
        (-j * k * r1).exp() / r1 + (-j * k * r2).exp() / r2 - 2.0 * ckh * (-j * k * r0).exp() / r0
    };
    // even integrand: ∫_{-h_b}^{h_b} = 2 ∫_0^{h_b}
    let integral = quadrature::integrate(
        |z| field(z) * (k * (h_b - z)).sin(),
        0.0,
        h_b,
        &[h_a],
        Tolerance::default(),
    )?;
    let loop_z = j * ETA0 / (4.0 * PI) * 2.0 * integral;
    Ok(loop_z / (base_factor(k, h_a)? * base_factor(k, h_b)?))
}

/// Self impedance of a centre-fed thin dipole.
pub fn self_impedance(half_length: f64, radius: f64, f: f64) -> Result<Complex64> {
    check_thin(half_length, radius)?;
    mutual_impedance_directed(half_length, half_length, radius, f)
}

/// Mutual impedance between two parallel side-by-side elements.
pub fn mutual_impedance(a: &WireElement, b: &WireElement, spacing: f64, f: f64) -> Result<Complex64> {
    check_thin(a.half_length, a.radius)?;
    check_thin(b.half_length, b.radius)?;
    if !(spacing > a.radius.max(b.radius)) {
        return Err(Error::Geometry(format!(
            "spacing {spacing} m does not exceed the wire radii"
        )));
    }
    let (lo, hi) = if a.half_length <= b.half_length {
        (a.half_length, b.half_length)
    } else {
        (b.half_length, a.half_length)
    };
    mutual_impedance_directed(lo, hi, spacing, f)
}

#[derive(Debug, Clone)]
pub struct ElementCurrents {
    pub frequency: f64,
    /// Base currents for 1 V at the driven element.
    pub currents: Vec<Complex64>,
    pub z_matrix: DenseMatrix,
    pub z_in: Complex64,
}

pub fn impedance_matrix(geom: &YagiGeometry, f: f64) -> Result<DenseMatrix> {
    geom.validate()?;
    let n = geom.elements.len();
    let mut z = DenseMatrix::zeros(n);
    for i in 0..n {
        let ei = &geom.elements[i];
        z[(i, i)] = self_impedance(ei.half_length, ei.radius, f)?;
        for j in i + 1..n {
            let ej = &geom.elements[j];
            let m = mutual_impedance(ei, ej, (ej.position - ei.position).abs(), f)?;
            z[(i, j)] = m;
            z[(j, i)] = m;
        }
    }
    Ok(z)
}

pub fn solve_currents(geom: &YagiGeometry, f: f64) -> Result<ElementCurrents> {
    let z = impedance_matrix(geom, f)?;
    let n = z.dim();
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    v[geom.driven] = Complex64::new(1.0, 0.0);
    let lu = LuFactors::factor(z.clone())
        .map_err(|_| Error::Geometry("singular impedance matrix".into()))?;
    let currents = lu.solve(&v);
    let z_in = currents[geom.driven].inv();
    Ok(ElementCurrents {
        frequency: f,
        currents,
        z_matrix: z,
        z_in,
    })
}

/// Solved radiator at one frequency: far field and its normalization.
#[derive(Debug, Clone)]
pub struct Radiator {
    k: f64,
    /// `(position, half_length, loop current I_m)` per element.
    sources: Vec<(f64, f64, Complex64)>,
    pub currents: ElementCurrents,
    /// Radiated power for 1 V at the driven port, watts.
    pub radiated_power: f64,
    driven: usize,
}

const POWER_THETA_NODES: usize = 96;
const POWER_PHI_NODES: usize = 128;

impl Radiator {
    pub fn new(geom: &YagiGeometry, f: f64) -> Result<Self> {
        let currents = solve_currents(geom, f)?;
        let k = 2.0 * PI * f / crate::units::C0;
        let mut sources = Vec::with_capacity(geom.elements.len());
        for (e, i) in geom.elements.iter().zip(&currents.currents) {
            sources.push((e.position, e.half_length, i / base_factor(k, e.half_length)?));
        }
        let mut r = Self {
            k,
            sources,
            currents,
            radiated_power: 0.0,
            driven: geom.driven,
        };
        r.radiated_power = r.integrate_intensity();
        Ok(r)
    }

    pub fn z_in(&self) -> Complex64 {
        self.currents.z_in
    }

    /// Far-field pattern function; `U = η/(8π²)·|F|²`.
    pub fn field(&self, theta: f64, phi: f64) -> Complex64 {
        let (st, ct) = theta.sin_cos();
        if st.abs() < 1e-12 {
            return Complex64::new(0.0, 0.0);
        }
        let proj = st * phi.cos();
        self.sources
            .iter()
            .map(|&(x, h, im)| {
                let shape = ((self.k * h * ct).cos() - (self.k * h).cos()) / st;
                im * shape * Complex64::from_polar(1.0, self.k * x * proj)
            })
            .sum()
    }

    /// Radiation intensity, W/sr.
    pub fn intensity(&self, theta: f64, phi: f64) -> f64 {
        ETA0 / (8.0 * PI * PI) * self.field(theta, phi).norm_sqr()
    }

    fn integrate_intensity(&self) -> f64 {
        let (x, w) = gauss_legendre(POWER_THETA_NODES);
        let dphi = 2.0 * PI / POWER_PHI_NODES as f64;
        let mut total = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            let theta = 0.5 * PI * (xi + 1.0);
            let ring: f64 = (0..POWER_PHI_NODES)
                .map(|m| self.intensity(theta, m as f64 * dphi))
                .sum();
            total += wi * 0.5 * PI * theta.sin() * ring * dphi;
        }
        total
    }

    /// Directivity (linear) toward `(theta, phi)` in radians.
    pub fn directivity(&self, theta: f64, phi: f64) -> f64 {
        4.0 * PI * self.intensity(theta, phi) / self.radiated_power
    }

    /// Directivity in dBi, floored at [`DIRECTIVITY_FLOOR_DBI`] so exact
    /// nulls stay finite.
    pub fn directivity_dbi(&self, theta: f64, phi: f64) -> f64 {
        db10(self.directivity(theta, phi)).max(DIRECTIVITY_FLOOR_DBI)
    }

    pub fn boresight_dbi(&self) -> f64 {
        self.directivity_dbi(BORESIGHT_THETA_DEG.to_radians(), BORESIGHT_PHI_DEG.to_radians())
    }

    /// Input power `½ Re(V·I*)` for the 1 V drive.
    pub fn input_power(&self) -> f64 {
        0.5 * self.currents.currents[self.driven].re
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternGrid {
    pub theta_step_deg: f64,
    pub phi_step_deg: f64,
}

impl Default for PatternGrid {
    fn default() -> Self {
        Self {
            theta_step_deg: 1.0,
            phi_step_deg: 1.0,
        }
    }
}

/// Directivity sampled on a regular grid: `θ ∈ [0°, 180°]`,
/// `φ ∈ [0°, 360°)`, stored θ-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiationPattern {
    pub frequency: f64,
    pub theta_deg: Vec<f64>,
    pub phi_deg: Vec<f64>,
    pub directivity_dbi: Vec<f64>,
    pub peak_theta_deg: f64,
    pub peak_phi_deg: f64,
    pub peak_dbi: f64,
    pub front_to_back_db: f64,
}

impl RadiationPattern {
    pub fn at(&self, i_theta: usize, i_phi: usize) -> f64 {
        self.directivity_dbi[i_theta * self.phi_deg.len() + i_phi]
    }

    /// `(1/4π) ∬ D dΩ` on the sampled grid (trapezoid in θ, periodic in φ).
    pub fn normalization_integral(&self) -> f64 {
        let nt = self.theta_deg.len();
        let np = self.phi_deg.len();
        let dphi = 2.0 * PI / np as f64;
        let mut total = 0.0;
        for it in 0..nt {
            let theta = self.theta_deg[it].to_radians();
            let ring: f64 = (0..np).map(|ip| 10f64.powf(self.at(it, ip) / 10.0)).sum();
            let w = if it == 0 || it + 1 == nt { 0.5 } else { 1.0 };
            let dtheta = (self.theta_deg[1] - self.theta_deg[0]).to_radians();
            total += w * theta.sin() * ring * dphi * dtheta;
        }
        total / (4.0 * PI)
    }
}

pub fn pattern(geom: &YagiGeometry, f: f64) -> Result<RadiationPattern> {
    pattern_with_grid(geom, f, PatternGrid::default())
}

pub fn pattern_with_grid(geom: &YagiGeometry, f: f64, grid: PatternGrid) -> Result<RadiationPattern> {
    let radiator = Radiator::new(geom, f)?;
    Ok(sample_pattern(&radiator, f, grid))
}

pub fn sample_pattern(radiator: &Radiator, f: f64, grid: PatternGrid) -> RadiationPattern {
    let nt = (180.0 / grid.theta_step_deg).round() as usize + 1;
    let np = (360.0 / grid.phi_step_deg).round() as usize;
    let theta_deg: Vec<f64> = (0..nt).map(|i| i as f64 * grid.theta_step_deg).collect();
    let phi_deg: Vec<f64> = (0..np).map(|i| i as f64 * grid.phi_step_deg).collect();
    let directivity_dbi: Vec<f64> = theta_deg
        .par_iter()
        .flat_map_iter(|&t| {
            phi_deg
                .iter()
                .map(move |&p| radiator.directivity_dbi(t.to_radians(), p.to_radians()))
        })
        .collect();

    let (mut best, mut bi) = (f64::NEG_INFINITY, 0);
    for (i, &d) in directivity_dbi.iter().enumerate() {
        if d > best {
            best = d;
            bi = i;
        }
    }
    let (pt, pp) = (theta_deg[bi / np], phi_deg[bi % np]);
    let back = radiator.directivity_dbi((180.0 - pt).to_radians(), (pp + 180.0).to_radians());
    RadiationPattern {
        frequency: f,
        theta_deg,
        phi_deg,
        directivity_dbi,
        peak_theta_deg: pt,
        peak_phi_deg: pp,
        peak_dbi: best,
        front_to_back_db: best - back,
    }
}

/// Driving-point impedance of the driven element with parasitics loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaImpedance {
    pub table: ImpedanceTable,
}

impl AntennaImpedance {
    pub fn termination(&self) -> Termination {
        Termination::Table {
            table: self.table.clone(),
        }
    }
}

pub fn impedance_table(geom: &YagiGeometry, f_grid: &[f64]) -> Result<AntennaImpedance> {
    geom.validate()?;
    let values: Result<Vec<Complex64>> = f_grid
        .par_iter()
        .map(|&f| solve_currents(geom, f).map(|c| c.z_in))
        .collect();
    Ok(AntennaImpedance {
        table: ImpedanceTable::new(f_grid.to_vec(), values?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const F: f64 = 2.4e9;

    #[test]
    fn half_wave_dipole_anchor() {
        let lambda = wavelength(F);
        let z = self_impedance(lambda / 4.0, lambda / 1000.0, F).unwrap();
        assert!((z - Complex64::new(73.0, 42.0)).norm() / Complex64::new(73.0, 42.0).norm() < 0.05, "{z}");
    }

    #[test]
    fn short_dipole_is_capacitive() {
        let lambda = wavelength(F);
        let z = self_impedance(0.2 * lambda, lambda / 1000.0, F).unwrap();
        assert!(z.im < 0.0, "{z}");
    }

    #[test]
    fn electrodynamic_similarity() {
        let lambda = wavelength(F);
        let a = self_impedance(0.23 * lambda, lambda / 800.0, F).unwrap();
        let s = 1.7;
        let b = self_impedance(0.23 * lambda / s, lambda / 800.0 / s, F * s).unwrap();
        assert!((a - b).norm() < 1e-8 * a.norm());
    }

    #[test]
    fn thin_wire_precondition() {
        assert!(matches!(self_impedance(0.01, 0.001, F), Err(Error::Geometry(_))));
    }

    #[test]
    fn mutual_is_symmetric() {
        let lambda = wavelength(F);
        let a = WireElement {
            half_length: 0.26 * lambda,
            radius: lambda / 1000.0,
            position: 0.0,
        };
        let b = WireElement {
            half_length: 0.21 * lambda,
            radius: lambda / 900.0,
            position: 0.3 * lambda,
        };
        let ab = mutual_impedance(&a, &b, 0.3 * lambda, F).unwrap();
        let ba = mutual_impedance(&b, &a, 0.3 * lambda, F).unwrap();
        assert_eq!(ab, ba);
        // reciprocity between the two integration directions
        let raw = mutual_impedance_directed(a.half_length, b.half_length, 0.3 * lambda, F).unwrap();
        assert!((raw - ab).norm() < 1e-6 * ab.norm(), "{raw} vs {ab}");
    }

    #[test]
    fn half_wave_pair_at_half_wavelength() {
        let lambda = wavelength(F);
        let e = WireElement {
            half_length: lambda / 4.0,
            radius: lambda / 1000.0,
            position: 0.0,
        };
        let zm = mutual_impedance(&e, &e, 0.5 * lambda, F).unwrap();
        let zs = self_impedance(lambda / 4.0, lambda / 1000.0, F).unwrap();
        assert!(zm.re < 0.0);
        assert!(zm.norm() < zs.norm());
    }

    #[test]
    fn single_dipole_matches_self_impedance() {
        let lambda = wavelength(F);
        let g = YagiGeometry::dipole(lambda / 4.0, lambda / 1000.0);
        let c = solve_currents(&g, F).unwrap();
        let zs = self_impedance(lambda / 4.0, lambda / 1000.0, F).unwrap();
        assert!((c.z_in - zs).norm() <= 1e-10 * zs.norm());
    }

    #[test]
    fn duplicate_element_rejected() {
        let mut g = YagiGeometry::default_at(F);
        let dup = g.elements[1];
        g.elements.insert(1, dup);
        assert!(matches!(solve_currents(&g, F), Err(Error::Geometry(_))));
    }

    #[test]
    fn z_matrix_symmetric() {
        let z = impedance_matrix(&YagiGeometry::default_at(F), F).unwrap();
        for i in 0..z.dim() {
            for j in 0..z.dim() {
                assert_eq!(z[(i, j)], z[(j, i)]);
            }
        }
    }
}
