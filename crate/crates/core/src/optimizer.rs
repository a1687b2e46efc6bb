//! Derivative-free search: Nelder-Mead, the equi-ripple ladder tuner, the
//! modulation-parameter search and the Yagi layout calibration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::antenna::{Radiator, YagiLayout};
use crate::circuit::ModulatedLadder;
use crate::error::{Error, Result};
use crate::hbsolver::{self, linear_grid};
use crate::synth::{ripple_from_return_loss, FilterSpec};
use crate::units::{db10, db20};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimplexConfig {
    /// Initial simplex offsets as a fraction of each coordinate (absolute
    /// when the coordinate is zero). Empty means 0.05 everywhere; a single
    /// entry applies to every coordinate.
    pub step_fractions: Vec<f64>,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub max_iterations: usize,
    /// Stop once `f_worst − f_best` falls to this value ...
    pub tolerance: f64,
    /// ... and no vertex lies farther than this from the best one
    /// (largest coordinate difference).
    pub x_tolerance: f64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            step_fractions: Vec::new(),
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            max_iterations: 1000,
            tolerance: 1e-12,
            x_tolerance: 1e-8,
        }
    }
}

impl SimplexConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.reflection, self.expansion, self.contraction, self.shrink]
            .iter()
            .all(|c| *c > 0.0 && c.is_finite());
        if !positive {
            return Err(Error::domain("simplex coefficients", "all positive"));
        }
        if !(self.expansion > self.reflection && self.reflection >= 1.0) {
            return Err(Error::domain("simplex coefficients", "expansion > reflection >= 1"));
        }
        if !(self.contraction < 1.0 && self.shrink < 1.0) {
            return Err(Error::domain("simplex coefficients", "0 < contraction, shrink < 1"));
        }
        if !(self.tolerance >= 0.0 && self.x_tolerance >= 0.0) {
            return Err(Error::domain("simplex tolerances", ">= 0"));
        }
        if self.step_fractions.iter().any(|s| !(*s != 0.0 && s.is_finite())) {
            return Err(Error::domain("simplex step fractions", "finite and non-zero"));
        }
        Ok(())
    }

    fn step(&self, i: usize, x: f64) -> f64 {
        let frac = match self.step_fractions.len() {
            0 => 0.05,
            1 => self.step_fractions[0],
            _ => self.step_fractions[i],
        };
        if x.abs() > 1e-12 {
            frac * x.abs()
        } else {
            frac
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best vertex after every iteration.
    pub trace: Vec<TracePoint>,
}

/// Minimizes `f` from `x0`. Non-finite objective values count as `+∞`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], cfg: &SimplexConfig) -> Result<SimplexReport>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    let n = x0.len();
    if n == 0 {
        return Err(Error::domain("start point", "at least one coordinate"));
    }
    if !cfg.step_fractions.is_empty() && cfg.step_fractions.len() != 1 && cfg.step_fractions.len() != n {
        return Err(Error::domain("simplex step fractions", "0, 1 or one per coordinate"));
    }
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let f0 = eval(x0);
    if !f0.is_finite() {
        return Err(Error::domain("objective at the start point", "finite"));
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += cfg.step(i, x0[i]);
        let v = eval(&x);
        simplex.push((x, v));
    }

    let small = |s: &[(Vec<f64>, f64)]| {
        let spread = s[n].1 - s[0].1;
        let diameter = s[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&s[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        (spread <= cfg.tolerance || s[0].1 == s[n].1) && diameter <= cfg.x_tolerance
    };
    let order = |s: &mut Vec<(Vec<f64>, f64)>| {
        // stable: ties keep insertion order
        s.sort_by(|a, b| a.1.total_cmp(&b.1));
    };
    order(&mut simplex);

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        if small(&simplex) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(cfg.reflection);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(cfg.reflection * cfg.expansion);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(cfg.reflection * cfg.contraction);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-cfg.contraction);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < fr.min(worst.1) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best
                        .iter()
                        .zip(&vertex.0)
                        .map(|(b, v)| b + cfg.shrink * (v - b))
                        .collect();
                    let v = eval(&x);
                    *vertex = (x, v);
                }
            }
        }
        order(&mut simplex);
        trace.push(TracePoint {
            iteration: iterations,
            x: simplex[0].0.clone(),
            value: simplex[0].1,
        });
    }
    if !converged {
        converged = small(&simplex);
    }
    Ok(SimplexReport {
        x: simplex[0].0.clone(),
        value: simplex[0].1,
        iterations,
        evaluations,
        converged,
        trace,
    })
}

/// Box constraints mapped to an unbounded search space through the logistic
/// function: `x = lo + (hi − lo)·σ(u)`. Equal bounds pin a coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::domain("bounds", "equal lengths"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::domain("bounds", "finite with lower <= upper"));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn squash(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, &ui)| {
                let s = 1.0 / (1.0 + (-ui).exp());
                self.lower[i] + (self.upper[i] - self.lower[i]) * s
            })
            .collect()
    }

    /// Inverse of [`Bounds::squash`]; points on or outside a bound are
    /// pulled just inside.
    pub fn unsquash(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                let w = self.upper[i] - self.lower[i];
                if w == 0.0 {
                    return 0.0;
                }
                let s = ((xi - self.lower[i]) / w).clamp(1e-9, 1.0 - 1e-9);
                (s / (1.0 - s)).ln()
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Equi-ripple tuning

/// Extra return loss targeted by the tuner so the achieved ripple clears the
/// specification.
pub const TUNER_MARGIN_DB: f64 = 0.5;
const TUNER_POINTS: usize = 61;
const TUNER_SPAN: f64 = 0.5;
const CHECK_POINTS: usize = 801;

#[derive(Debug, Clone, PartialEq)]
pub struct PassbandMetrics {
    /// Smallest return loss over the band, dB (positive).
    pub min_return_loss_db: f64,
    /// Local minima of |S11| inside the band.
    pub reflection_zeros: usize,
}

/// Chebyshev `T_n(x)` for any real `x`.
fn chebyshev_t(n: usize, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        (n as f64 * x.acos()).cos()
    } else {
        let s = x.signum().powi(n as i32);
        s * (n as f64 * x.abs().acosh()).cosh()
    }
}

/// Ideal `|S11|²` of the Chebyshev response with return loss `rl_db`.
pub fn chebyshev_reflection(spec: &FilterSpec, rl_db: f64, f: f64) -> f64 {
    let ripple = ripple_from_return_loss(rl_db);
    let eps2 = 10f64.powf(ripple / 10.0) - 1.0;
    let t = chebyshev_t(spec.order, spec.lowpass_frequency(f));
    let x = eps2 * t * t;
    x / (1.0 + x)
}

pub fn passband_metrics(ladder: &ModulatedLadder, spec: &FilterSpec) -> Result<PassbandMetrics> {
    let (lo, hi) = spec.band_edges();
    let grid = linear_grid(lo, hi, CHECK_POINTS);
    let s11: Result<Vec<f64>> = grid
        .iter()
        .map(|&f| hbsolver::static_sparams(ladder, f).map(|r| r.s11_fund().norm()))
        .collect();
    let s11 = s11?;
    let worst = s11.iter().copied().fold(0.0, f64::max);
    let zeros = (1..s11.len() - 1)
        .filter(|&i| s11[i] < s11[i - 1] && s11[i] <= s11[i + 1])
        .count();
    Ok(PassbandMetrics {
        min_return_loss_db: -db20(worst),
        reflection_zeros: zeros,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneReport {
    pub ladder: ModulatedLadder,
    pub metrics: PassbandMetrics,
    /// RL and zero-count targets met.
    pub met: bool,
    pub evaluations: usize,
    /// True when the input already met the targets and was returned as is.
    pub unchanged: bool,
}

/// Groups of capacitances tuned together. A mirror-symmetric ladder keeps
/// its symmetry by tying mirrored elements.
fn tuning_groups(ladder: &ModulatedLadder) -> Vec<Vec<usize>> {
    let n = ladder.order();
    let total = 2 * n + 1;
    if !ladder.is_mirror_symmetric(1e-9) {
        return (0..total).map(|i| vec![i]).collect();
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n.div_ceil(2) {
        let j = n - 1 - i;
        groups.push(if i == j { vec![i] } else { vec![i, j] });
    }
    let m = n - 1;
    for i in 0..m.div_ceil(2) {
        let j = m - 1 - i;
        groups.push(if i == j { vec![n + i] } else { vec![n + i, n + j] });
    }
    groups.push(vec![2 * n - 1, 2 * n]);
    groups
}

/// Adjusts `{C0_i, Cc_i, Ce}` in log space so the static `|S11|²` follows
/// the ideal equi-ripple profile (least squares over the passband).
/// Modulation is ignored during tuning and restored afterwards.
pub fn tune_equiripple(ladder: &ModulatedLadder, spec: &FilterSpec) -> Result<TuneReport> {
    spec.validate()?;
    ladder.validate()?;
    if ladder.order() != spec.order {
        return Err(Error::domain("ladder order", "equal to the specification order"));
    }
    let meets = |m: &PassbandMetrics| m.min_return_loss_db >= spec.rl && m.reflection_zeros == spec.order;
    let initial = passband_metrics(ladder, spec)?;
    if meets(&initial) {
        return Ok(TuneReport {
            ladder: ladder.clone(),
            metrics: initial,
            met: true,
            evaluations: 0,
            unchanged: true,
        });
    }

    let base = ladder.without_modulation();
    let caps0 = base.capacitance_vector();
    let groups = tuning_groups(&base);
    let grid = linear_grid(
        spec.f0 * (1.0 - TUNER_SPAN * spec.fbw),
        spec.f0 * (1.0 + TUNER_SPAN * spec.fbw),
        TUNER_POINTS,
    );
    let target: Vec<f64> = grid
        .iter()
        .map(|&f| chebyshev_reflection(spec, spec.rl + TUNER_MARGIN_DB, f))
        .collect();
    let build = |u: &[f64]| {
        let mut caps = caps0.clone();
        for (g, ui) in groups.iter().zip(u) {
            for &i in g {
                caps[i] = caps0[i] * ui.exp();
            }
        }
        base.with_capacitance_vector(&caps)
    };
    let objective = |u: &[f64]| -> f64 {
        let l = build(u);
        let mut acc = 0.0;
        for (f, t) in grid.iter().zip(&target) {
            match hbsolver::static_sparams(&l, *f) {
                Ok(r) => acc += (r.s11_fund().norm_sqr() - t).powi(2),
                Err(_) => return f64::INFINITY,
            }
        }
        acc
    };
    let cfg = SimplexConfig {
        step_fractions: vec![0.02],
        max_iterations: 4000,
        tolerance: 1e-16,
        ..SimplexConfig::default()
    };
    let mut u = vec![0.0; groups.len()];
    let mut best = f64::INFINITY;
    let mut evaluations = 0;
    for _ in 0..6 {
        let r = nelder_mead(objective, &u, &cfg)?;
        evaluations += r.evaluations;
        let improved = r.value < best * (1.0 - 1e-9);
        u = r.x;
        best = best.min(r.value);
        if !improved {
            break;
        }
    }
    let tuned = build(&u);
    let tuned = ModulatedLadder {
        modulation: ladder.modulation.clone(),
        ..tuned
    };
    let metrics = passband_metrics(&tuned, spec)?;
    Ok(TuneReport {
        met: meets(&metrics),
        ladder: tuned,
        metrics,
        evaluations,
        unchanged: false,
    })
}

// ---------------------------------------------------------------------------
// Modulation search

/// Search box for `(fm [Hz], Δm, Δφ [rad])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulationBounds {
    pub fm: (f64, f64),
    pub delta_m: (f64, f64),
    pub delta_phi: (f64, f64),
}

impl Default for ModulationBounds {
    fn default() -> Self {
        Self {
            fm: (10e6, 200e6),
            delta_m: (0.01, 0.3),
            delta_phi: (0.0, std::f64::consts::PI),
        }
    }
}

impl ModulationBounds {
    fn bounds(&self) -> Result<Bounds> {
        if !(self.fm.0 > 0.0) {
            return Err(Error::domain("fm lower bound", "> 0"));
        }
        if !(self.delta_m.0 >= 0.0 && self.delta_m.1 < 1.0) {
            return Err(Error::domain("delta_m bounds", "within [0, 1)"));
        }
        Bounds::new(
            vec![self.fm.0, self.delta_m.0, self.delta_phi.0],
            vec![self.fm.1, self.delta_m.1, self.delta_phi.1],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulationWeights {
    /// Penalty weight `w`.
    pub loss_weight: f64,
    /// Allowed extra insertion loss before the penalty applies, dB.
    pub loss_guard_db: f64,
    /// Isolation credited by the objective saturates here, dB. Exact
    /// transmission nulls otherwise outweigh any finite loss penalty.
    pub isolation_cap_db: f64,
}

impl Default for ModulationWeights {
    fn default() -> Self {
        Self {
            loss_weight: 10.0,
            loss_guard_db: 1.0,
            isolation_cap_db: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSettings {
    pub k_max: usize,
    /// Lattice points along `(fm, Δm, Δφ)`.
    pub grid: [usize; 3],
    /// Lattice points used as simplex starts.
    pub grid_starts: usize,
    /// Additional random starts drawn from `seed`.
    pub restarts: usize,
    pub seed: u64,
    pub simplex: SimplexConfig,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            k_max: hbsolver::DEFAULT_K_MAX,
            grid: [8, 8, 12],
            grid_starts: 3,
            restarts: 4,
            seed: 1,
            simplex: SimplexConfig {
                step_fractions: vec![0.5],
                max_iterations: 400,
                tolerance: 1e-9,
                ..SimplexConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationPoint {
    pub fm: f64,
    pub delta_m: f64,
    pub delta_phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationEvaluation {
    pub point: ModulationPoint,
    pub objective: f64,
    pub isolation_db: f64,
    pub il_mod_db: f64,
    pub il_static_db: f64,
    /// `w·max(0, il_mod − il_static − guard)`.
    pub il_penalty_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTracePoint {
    pub stage: String,
    pub iteration: usize,
    pub point: ModulationPoint,
    /// Best objective found so far over the whole search.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub best: ModulationEvaluation,
    pub evaluations: usize,
    pub trace: Vec<SearchTracePoint>,
}

/// Objective `J = −min(iso, cap) + w·max(0, il_mod − il_static − guard)`
/// at `f0`.
pub fn evaluate_modulation(
    ladder: &ModulatedLadder,
    f0: f64,
    point: ModulationPoint,
    il_static_db: f64,
    weights: &ModulationWeights,
    k_max: usize,
) -> Result<ModulationEvaluation> {
    let l = ladder.with_modulation(point.fm, point.delta_m, point.delta_phi)?;
    let r = hbsolver::sparams(&l, k_max, f0)?;
    let isolation_db = r.isolation_db();
    let il_mod_db = -r.s21_db();
    let il_penalty_db = weights.loss_weight * (il_mod_db - il_static_db - weights.loss_guard_db).max(0.0);
    Ok(ModulationEvaluation {
        point,
        objective: -isolation_db.min(weights.isolation_cap_db) + il_penalty_db,
        isolation_db,
        il_mod_db,
        il_static_db,
        il_penalty_db,
    })
}

fn lattice(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || lo == hi {
        return vec![0.5 * (lo + hi)];
    }
    // cell centres keep lattice points off the bounds
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}

/// Simplex runs from `start`, from the best points of a lattice pre-scan and
/// from seeded random starts; the first run to reach the best objective
/// wins. Deterministic for fixed inputs.
pub fn optimize_modulation(
    ladder: &ModulatedLadder,
    f0: f64,
    start: ModulationPoint,
    bounds: &ModulationBounds,
    weights: &ModulationWeights,
    settings: &SearchSettings,
) -> Result<OptimizationReport> {
    let b = bounds.bounds()?;
    settings.simplex.validate()?;
    let il_static_db = -hbsolver::static_sparams(&ladder.without_modulation(), f0)?.s21_db();
    let to_point = |x: &[f64]| ModulationPoint {
        fm: x[0],
        delta_m: x[1],
        delta_phi: x[2],
    };
    let eval = |x: &[f64]| evaluate_modulation(ladder, f0, to_point(x), il_static_db, weights, settings.k_max);
    let score = |x: &[f64]| eval(x).map(|e| e.objective).unwrap_or(f64::INFINITY);

    let axes: Vec<Vec<f64>> = (0..3).map(|i| lattice(b.lower[i], b.upper[i], settings.grid[i])).collect();
    let mut points = Vec::new();
    for &fm in &axes[0] {
        for &dm in &axes[1] {
            for &dp in &axes[2] {
                points.push([fm, dm, dp]);
            }
        }
    }
    let scores: Vec<f64> = points.par_iter().map(|p| score(p)).collect();
    let mut evaluations = points.len();
    let mut ranked: Vec<usize> = (0..points.len()).collect();
    ranked.sort_by(|&a, &c| scores[a].total_cmp(&scores[c]).then(a.cmp(&c)));

    let mut trace = Vec::new();
    let mut best_x = points[ranked[0]].to_vec();
    let mut best_j = scores[ranked[0]];
    trace.push(SearchTracePoint {
        stage: "grid".into(),
        iteration: 0,
        point: to_point(&best_x),
        objective: best_j,
    });

    let mut starts: Vec<(String, Vec<f64>)> = vec![("start".into(), vec![start.fm, start.delta_m, start.delta_phi])];
    starts.extend(ranked
        .iter()
        .take(settings.grid_starts.max(1))
        .enumerate()
        .map(|(i, &p)| (format!("grid-start-{i}"), points[p].to_vec())));
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    for r in 0..settings.restarts {
        let x: Vec<f64> = (0..3)
            .map(|i| {
                if b.upper[i] > b.lower[i] {
                    rng.gen_range(b.lower[i]..b.upper[i])
                } else {
                    b.lower[i]
                }
            })
            .collect();
        starts.push((format!("restart-{r}"), x));
    }

    for (stage, x0) in starts {
        let u0 = b.unsquash(&x0);
        let run = nelder_mead(|u| score(&b.squash(u)), &u0, &settings.simplex)?;
        evaluations += run.evaluations;
        for t in &run.trace {
            if t.value < best_j {
                best_j = t.value;
                best_x = b.squash(&t.x);
            }
            trace.push(SearchTracePoint {
                stage: stage.clone(),
                iteration: t.iteration,
                point: to_point(&best_x),
                objective: best_j,
            });
        }
    }
    let best = eval(&best_x)?;
    Ok(OptimizationReport {
        best,
        evaluations,
        trace,
    })
}

// ---------------------------------------------------------------------------
// Yagi calibration

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTargets {
    pub resistance: f64,
    pub directivity_dbi: f64,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self {
            resistance: 50.0,
            directivity_dbi: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub layout: YagiLayout,
    pub z_in: crate::Complex64,
    pub boresight_dbi: f64,
    pub objective: f64,
}

/// Search box for `[reflector, driver, director, first gap, director gap]`,
/// wavelengths.
pub const CALIBRATION_LOWER: [f64; 5] = [0.48, 0.44, 0.38, 0.10, 0.10];
pub const CALIBRATION_UPPER: [f64; 5] = [0.54, 0.50, 0.46, 0.30, 0.30];

fn layout_from(start: &YagiLayout, p: &[f64]) -> YagiLayout {
    YagiLayout {
        reflector: p[0],
        driver: p[1],
        directors: vec![p[2]; start.directors.len()],
        spacings: std::iter::once(p[3])
            .chain(std::iter::repeat_n(p[4], start.directors.len()))
            .collect(),
        radius: start.radius,
    }
}

/// Nudges element lengths and spacings of a reflector/driver/directors
/// layout (equal directors, equal director gaps) toward the target input
/// resistance, zero reactance and target endfire directivity at `f0`.
pub fn calibrate_yagi(start: &YagiLayout, f0: f64, targets: CalibrationTargets) -> Result<CalibrationReport> {
    if start.directors.is_empty() {
        return Err(Error::Geometry("calibration needs at least one director".into()));
    }
    let b = Bounds::new(CALIBRATION_LOWER.to_vec(), CALIBRATION_UPPER.to_vec())?;
    let x0 = [
        start.reflector,
        start.driver,
        start.directors[0],
        start.spacings[0],
        start.spacings.get(1).copied().unwrap_or(start.spacings[0]),
    ];
    let measure = |p: &[f64]| -> Result<(crate::Complex64, f64)> {
        let r = Radiator::new(&layout_from(start, p).geometry(f0), f0)?;
        Ok((r.z_in(), r.boresight_dbi()))
    };
    let cost = |p: &[f64]| match measure(p) {
        Ok((z, d)) => {
            ((z.re - targets.resistance) / 5.0).powi(2)
                + (z.im / 5.0).powi(2)
                + ((d - targets.directivity_dbi) / 0.25).powi(2)
        }
        Err(_) => f64::INFINITY,
    };
    let cfg = SimplexConfig {
        step_fractions: vec![0.5],
        max_iterations: 600,
        tolerance: 1e-10,
        ..SimplexConfig::default()
    };
    let mut u = b.unsquash(&x0);
    let mut best = f64::INFINITY;
    for _ in 0..4 {
        let r = nelder_mead(|u| cost(&b.squash(u)), &u, &cfg)?;
        let improved = r.value < best * (1.0 - 1e-6);
        u = r.x;
        best = best.min(r.value);
        if !improved {
            break;
        }
    }
    // four decimals: the frozen layout is quoted to 1e-4 λ
    let p: Vec<f64> = b.squash(&u).iter().map(|v| (v * 1e4).round() / 1e4).collect();
    let layout = layout_from(start, &p);
    let (z_in, boresight_dbi) = measure(&p)?;
    Ok(CalibrationReport {
        layout,
        z_in,
        boresight_dbi,
        objective: cost(&p),
    })
}

/// Mismatch factor `10·log10(1 − |Γ|²)` of `z` against a real reference.
pub fn mismatch_db(z: crate::Complex64, z0: f64) -> f64 {
    let g = (z - z0) / (z + z0);
    db10(1.0 - g.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimum() {
        let r = nelder_mead(|x| (x[0] - 3.0).powi(2), &[0.0], &SimplexConfig::default()).unwrap();
        assert!((r.x[0] - 3.0).abs() < 1e-6, "{:?}", r.x);
        assert!(r.converged);
    }

    #[test]
    fn rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let cfg = SimplexConfig {
            max_iterations: 500,
            ..SimplexConfig::default()
        };
        let r = nelder_mead(rosen, &[-1.2, 1.0], &cfg).unwrap();
        assert!(r.value <= 1e-6, "{}", r.value);
        assert!(r.iterations <= 500);
    }

    #[test]
    fn plateau_terminates() {
        let r = nelder_mead(|_| 4.0, &[1.0, 2.0], &SimplexConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.iterations < 100);
    }

    #[test]
    fn non_finite_points_are_rejected() {
        let f = |x: &[f64]| if x[0] > 2.0 { f64::NAN } else { (x[0] - 1.0).powi(2) };
        let r = nelder_mead(f, &[0.0], &SimplexConfig::default()).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn deterministic_trace() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + (x[1] + 0.5).powi(4) + x[0] * x[1];
        let a = nelder_mead(f, &[0.3, 0.2], &SimplexConfig::default()).unwrap();
        let b = nelder_mead(f, &[0.3, 0.2], &SimplexConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn best_so_far_trace_is_monotone() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(rosen, &[-1.2, 1.0], &SimplexConfig::default()).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].value <= w[0].value));
    }

    #[test]
    fn coefficient_ordering_is_enforced() {
        let cfg = SimplexConfig {
            expansion: 0.9,
            ..SimplexConfig::default()
        };
        assert!(nelder_mead(|x| x[0], &[0.0], &cfg).is_err());
    }

    #[test]
    fn bounds_round_trip() {
        let b = Bounds::new(vec![10e6, 0.01, 0.0], vec![200e6, 0.3, 0.0]).unwrap();
        let x = [75e6, 0.09, 0.0];
        let y = b.squash(&b.unsquash(&x));
        assert!((y[0] - x[0]).abs() < 1e-3);
        assert!((y[1] - x[1]).abs() < 1e-12);
        assert_eq!(y[2], 0.0);
        let far = b.squash(&[1e3, -1e3, 5.0]);
        assert!(far[0] <= 200e6 && far[1] >= 0.01);
    }

    #[test]
    fn chebyshev_profile_hits_ripple_at_band_edges() {
        let spec = FilterSpec::default();
        let (lo, hi) = spec.band_edges();
        for f in [lo, hi] {
            let r = chebyshev_reflection(&spec, 13.0, f);
            assert!((-db10(r) - 13.0).abs() < 1e-9);
        }
        assert!(chebyshev_reflection(&spec, 13.0, spec.f0) < 1e-20);
    }
}
