//! Inequality and scaling suites: uniform bounds, boundary traces, regularity constants, Kato
//! inequalities, commutators, smoothEV and interpolation.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{effective_potential, AmbientCurvature, Convention, CurveSpec, FiberKind, FrameChoice, MetricMode, Tube, TubeGrid};
use crate::operators::{
    assemble_a, assemble_horizontal, assemble_reference_family, assemble_reference_laplacian, assemble_vertical, e0_projection,
    DiscreteOperator, DiscreteState, Measure,
};
use crate::spectral::{discrete_fiber_spectrum, eigensolve, fiber_spectrum, smooth_ev_check, ModeLabel, SmoothEvReport, Verdict};

use super::evolve::Propagator;
use super::fit::{loglog_fit, LogFit};
use super::homog::{HomogLevel, StudyParams};
use super::norms::{interpolation_check, power_norm, sobolev_norm, stencil_h2_norm};

fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Relative round-off allowed when a bound is attained with equality.
pub const ROUNDOFF: f64 = 1e-12;

/// c_k(t) = (2k/t)^{2k} e^{−2k}, the maximum of x^{2k}e^{−tx} on x ≥ 0.
pub fn envelope(k: u32, t: f64) -> f64 {
    let k2 = 2.0 * k as f64;
    (k2 / t).powf(k2) * (-k2).exp()
}

/// Nodal state Σ c ψ_k(w) trig(2πm s/L) on a grid, from (fiber vector, m, sine, coefficient) terms.
fn product_state(grid: &TubeGrid, terms: &[(&[f64], usize, bool, f64)]) -> Vec<f64> {
    let nf = grid.fiber.len();
    let mut u = vec![0.0; grid.dim()];
    for &(psi, m, sine, c) in terms {
        let k = 2.0 * PI * m as f64 / grid.length;
        for j in 0..grid.ns {
            let s = j as f64 * grid.hs();
            let v = c * if sine { (k * s).sin() } else { (k * s).cos() };
            for i in 0..nf {
                u[j * nf + i] += v * psi[i];
            }
        }
    }
    u
}

/// Random smooth state: Fourier modes m ≤ `mmax`, fiber modes k < `kmax`, amplitudes ~ 1/((1+m²)(1+k²)).
fn random_smooth(grid: &TubeGrid, fiber: &[Vec<f64>], mmax: usize, kmax: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut terms = Vec::new();
    for m in 0..=mmax {
        for (k, psi) in fiber.iter().take(kmax).enumerate() {
            let damp = 1.0 / ((1 + m * m) * (1 + k * k)) as f64;
            terms.push((psi.as_slice(), m, false, damp * (2.0 * rng.random::<f64>() - 1.0)));
            if m > 0 {
                terms.push((psi.as_slice(), m, true, damp * (2.0 * rng.random::<f64>() - 1.0)));
            }
        }
    }
    product_state(grid, &terms)
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformCell {
    pub epsilon: f64,
    pub t: f64,
    pub k: u32,
    /// ‖Δ(ε)ᵏu(ε,t)‖² / ‖u_ε‖².
    pub ratio: f64,
    pub envelope: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquiCell {
    pub epsilon: f64,
    pub k: u32,
    pub t1: f64,
    pub t2: f64,
    /// ‖Δ(ε)ᵏ(u(t1) − u(t2))‖² / ‖u_ε‖².
    pub lhs: f64,
    /// |t1 − t2| c_{k+1}(min K).
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MaximizerCheck {
    pub epsilon: f64,
    pub k: u32,
    pub t: f64,
    pub ratio: f64,
    pub envelope: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformBoundReport {
    pub cells: Vec<UniformCell>,
    pub equicontinuity: Vec<EquiCell>,
    pub maximizers: Vec<MaximizerCheck>,
    /// ε whose initial state has spectral support below zero, with that support minimum.
    pub skipped: Vec<(f64, f64)>,
    pub violations: usize,
}

impl UniformBoundReport {
    pub fn passes(&self, maximizer_tol: f64) -> bool {
        self.violations == 0 && !self.cells.is_empty() && self.maximizers.iter().all(|m| m.relative_error <= maximizer_tol)
    }
}

/// Lowest positive eigenpair (nodal vector) of the propagator, in Fourier mode `mode` when modal.
fn positive_pair(prop: &Propagator, mode: usize) -> Option<(f64, Vec<f64>)> {
    match prop {
        Propagator::Modal(m) => {
            let mode = mode.min(m.mode_count() - 1);
            let (vals, _) = m.block(mode);
            let index = vals.iter().position(|v| *v > 0.0)?;
            Some((vals[index], m.op.from_sym(&m.vector_sym(ModeLabel { m: mode, sine: false, index }))))
        }
        Propagator::Expansion(e) => {
            let s = e.values.iter().position(|v| *v > 0.0)?;
            Some((e.values[s], e.vectors[s].clone()))
        }
    }
}

/// ‖Δ(ε)ᵏu(ε,t)‖² ≤ c_k(t)‖u_ε‖² and the equicontinuity bound, for k ∈ {1,2}, every t and ε.
///
/// All operator functions are applied by spectral calculus. An ε is skipped when the
/// eigencomponents carried by u_ε reach below zero. The maximizer check rescales Δ(ε) so that its
/// lowest positive eigenvalue equals 2k/t.
pub fn uniform_bound_suite(level: &HomogLevel, params: &StudyParams) -> Result<UniformBoundReport> {
    let mut cells = Vec::new();
    let mut equicontinuity = Vec::new();
    let mut maximizers = Vec::new();
    let mut skipped = Vec::new();
    let tmin = params.times.iter().cloned().fold(f64::INFINITY, f64::min);
    for &eps in &params.epsilons {
        let op = level.delta(eps)?;
        let prop = Propagator::new(&op, params.count, params.tol, params.seed)?;
        let u = level.initial_state(eps, params.mode, params.perturbation);
        let n2 = op.inner(&u.values, &u.values);
        let low = prop.support_min(&u, 1e-12);
        if low < 0.0 {
            skipped.push((eps, low));
            continue;
        }
        for &t in &params.times {
            for k in 1..=2u32 {
                let x = prop.apply_fn(&u, |l| l.powi(k as i32) * (-0.5 * t * l).exp());
                let ratio = op.inner(&x, &x) / n2;
                let env = envelope(k, t);
                cells.push(UniformCell { epsilon: eps, t, k, ratio, envelope: env, holds: ratio <= env * (1.0 + ROUNDOFF) });
            }
        }
        for (a, &t1) in params.times.iter().enumerate() {
            for &t2 in &params.times[a + 1..] {
                for k in 1..=2u32 {
                    let x = prop.apply_fn(&u, |l| l.powi(k as i32) * ((-0.5 * t1 * l).exp() - (-0.5 * t2 * l).exp()));
                    let lhs = op.inner(&x, &x) / n2;
                    let bound = (t1 - t2).abs() * envelope(k + 1, tmin);
                    equicontinuity.push(EquiCell { epsilon: eps, k, t1, t2, lhs, bound, holds: lhs <= bound * (1.0 + ROUNDOFF) });
                }
            }
        }
        if let Some((mu, v)) = positive_pair(&prop, params.mode as usize) {
            let v = DiscreteState::new(v, Measure::Reference);
            let nv = op.inner(&v.values, &v.values);
            for &t in &params.times {
                for k in 1..=2u32 {
                    let c = 2.0 * k as f64 / t / mu;
                    let x = prop.apply_fn(&v, |l| (c * l).powi(k as i32) * (-0.5 * t * c * l).exp());
                    let ratio = op.inner(&x, &x) / nv;
                    let env = envelope(k, t);
                    maximizers.push(MaximizerCheck { epsilon: eps, k, t, ratio, envelope: env, relative_error: (ratio - env).abs() / env });
                }
            }
        }
    }
    let violations = cells.iter().filter(|c| !c.holds).count() + equicontinuity.iter().filter(|c| !c.holds).count();
    Ok(UniformBoundReport { cells, equicontinuity, maximizers, skipped, violations })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryPoint {
    pub epsilon: f64,
    pub trace: f64,
    /// trace / |||u(ε,t)|||_{2n}.
    pub normalized: f64,
    pub certified: bool,
    pub dropped: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryReport {
    pub n: u32,
    pub t: f64,
    pub points: Vec<BoundaryPoint>,
    pub fit: Option<LogFit>,
    pub status: String,
}

impl BoundaryReport {
    pub fn slope_in(&self, lo: f64, hi: f64) -> bool {
        self.fit.as_ref().is_some_and(|f| f.slope >= lo && f.slope <= hi)
    }
}

/// One-sided second difference at a Dirichlet end, (2f_b − 5f₁ + 4f₂ − f₃)/h².
fn one_sided(fb: f64, f1: f64, f2: f64, f3: f64, h: f64) -> f64 {
    (2.0 * fb - 5.0 * f1 + 4.0 * f2 - f3) / (h * h)
}

/// Values of Δ₀f = −f_ss − f_ww on both boundary lines, given f on the unknowns and on the boundary.
fn boundary_image(grid: &TubeGrid, f: &[f64], fb: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let nf = grid.fiber.len();
    let h = grid.fiber.h;
    let mut out = vec![[0.0; 2]; grid.ns];
    for side in 0..2 {
        let line: Vec<f64> = fb.iter().map(|v| v[side]).collect();
        let fss = grid.line.second_derivative(&line);
        for j in 0..grid.ns {
            let at = |k: usize| if side == 0 { f[j * nf + k] } else { f[j * nf + nf - 1 - k] };
            out[j][side] = -fss[j] - one_sided(fb[j][side], at(0), at(1), at(2), h);
        }
    }
    out
}

/// L² norm over both boundary lines of Δ₀ⁿu, n ∈ {1, 2}, for u vanishing on the boundary.
pub fn boundary_trace(u: &[f64], n: u32, delta0: &DiscreteOperator) -> Result<f64> {
    let grid = &delta0.grid;
    if !matches!(grid.fiber.kind, FiberKind::Interval { .. }) {
        return Err(Error::Unsupported("boundary traces on disk fibers".into()));
    }
    if grid.fiber.len() < 3 {
        return Err(Error::Grid("one-sided stencils need three unknowns per fiber".into()));
    }
    let zero = vec![[0.0; 2]; grid.ns];
    let mut trace = boundary_image(grid, u, &zero);
    match n {
        1 => {}
        2 => {
            let f = delta0.apply(&DiscreteState::new(u.to_vec(), delta0.measure))?.values;
            trace = boundary_image(grid, &f, &trace);
        }
        _ => return Err(Error::Argument(format!("boundary traces are provided for n in {{1, 2}}, got {n}"))),
    }
    Ok((grid.hs() * trace.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum::<f64>()).sqrt())
}

/// Fitted log-log slope of the normalized boundary trace of Δ₀ⁿu(ε,t) against ε.
///
/// `certified[i]` marks the ε of `params.epsilons[i]` usable for fitting; at least four are needed.
pub fn boundary_scaling(level: &HomogLevel, params: &StudyParams, n: u32, t: f64, certified: &[bool]) -> Result<BoundaryReport> {
    if certified.len() != params.epsilons.len() {
        return Err(Error::Mismatch("one certification flag per epsilon is required".into()));
    }
    let mut points = Vec::new();
    for (&eps, &cert) in params.epsilons.iter().zip(certified) {
        let op = level.delta(eps)?;
        let prop = Propagator::new(&op, params.count, params.tol, params.seed)?;
        let u = level.initial_state(eps, params.mode, params.perturbation);
        let ut = prop.evolve(&u, t, params.tol * 1e-3)?.state;
        let trace = boundary_trace(&ut.values, n, &level.delta0)?;
        let normalized = trace / sobolev_norm(&ut.values, n, &level.delta0)?;
        points.push(BoundaryPoint { epsilon: eps, trace, normalized, certified: cert, dropped: !(normalized >= 1e-12) });
    }
    let used: Vec<&BoundaryPoint> = points.iter().filter(|p| p.certified && !p.dropped).collect();
    let (fit, status) = if used.len() < 4 {
        (None, "insufficient range".to_string())
    } else {
        let fit = loglog_fit(&used.iter().map(|p| p.epsilon).collect::<Vec<_>>(), &used.iter().map(|p| p.normalized).collect::<Vec<_>>());
        (fit, "ok".to_string())
    };
    Ok(BoundaryReport { n, t, points, fit, status })
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityPoint {
    pub epsilon: f64,
    /// sup ‖u‖_{H²} / (‖Δ(ε)u‖ + ‖u‖); `None` on disk fibers.
    pub k1: Option<f64>,
    /// sup |||u|||₂ / (‖u‖ + ‖Δ(ε)u‖).
    pub d1: f64,
    /// sup |||u|||₄ / (‖u‖ + ‖Δ(ε)u‖ + ‖Δ(ε)²u‖).
    pub d2: f64,
    pub panel: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub points: Vec<RegularityPoint>,
    /// max/min over ε of K₁, D₁, D₂.
    pub ratios: [Option<f64>; 3],
    /// Whether a constant grows steadily as ε decreases, see [`GROWTH_EXPONENT`].
    pub monotone_growth: [bool; 3],
}

impl RegularityReport {
    pub fn passes(&self, max_ratio: f64) -> bool {
        self.ratios.iter().all(|r| r.is_none_or(|r| r < max_ratio)) && !self.monotone_growth.iter().any(|g| *g)
    }
}

pub const MIN_PANEL: usize = 20;

/// A constant counts as growing when it increases at every step as ε decreases and its fitted
/// power law ε^{−p} has p above this.
pub const GROWTH_EXPONENT: f64 = 0.1;

fn spread(points: &[(f64, f64)]) -> (Option<f64>, bool) {
    if points.is_empty() {
        return (None, false);
    }
    let (lo, hi) = points.iter().fold((f64::INFINITY, 0.0f64), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let mut p = points.to_vec();
    p.sort_by(|a, b| b.0.total_cmp(&a.0));
    let steady = p.len() >= 3 && p.windows(2).all(|w| w[1].1 > w[0].1);
    let exponent = loglog_fit(&p.iter().map(|q| q.0).collect::<Vec<_>>(), &p.iter().map(|q| q.1).collect::<Vec<_>>()).map_or(0.0, |f| f.slope);
    (Some(hi / lo), steady && exponent < -GROWTH_EXPONENT)
}

/// Fits K₁, D₁, D₂ over a panel of evolved states for every ε.
pub fn regularity_suite(level: &HomogLevel, params: &StudyParams) -> Result<RegularityReport> {
    let grid = &level.tube.grid;
    let fiber = discrete_fiber_spectrum(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut initial: Vec<Vec<f64>> = Vec::new();
    for m in 0..=3 {
        initial.push(product_state(grid, &[(&level.ground, m, false, 1.0)]));
        if m > 0 {
            initial.push(product_state(grid, &[(&level.ground, m, true, 1.0)]));
        }
    }
    for m in 0..=2 {
        initial.push(product_state(grid, &[(&fiber.vectors[1], m, false, 1.0)]));
    }
    for _ in 0..4 {
        initial.push(random_smooth(grid, &fiber.vectors, 4, 3, &mut rng));
    }
    let stencil = matches!(grid.fiber.kind, FiberKind::Interval { .. });
    let mut points = Vec::new();
    for &eps in &params.epsilons {
        let op = level.delta(eps)?;
        let prop = Propagator::new(&op, params.count, params.tol, params.seed)?;
        let (mut k1, mut d1, mut d2) = (0.0f64, 0.0f64, 0.0f64);
        let mut panel = 0;
        for u0 in &initial {
            let state = DiscreteState::new(u0.clone(), Measure::Reference);
            let n0 = op.norm(u0);
            for &t in &params.times {
                let u = prop.evolve(&state, t, params.tol * n0)?.state.values;
                let n = op.norm(&u);
                if n < 1e-12 * n0 {
                    continue;
                }
                panel += 1;
                let a1 = power_norm(&u, 1, &op);
                let a2 = power_norm(&u, 2, &op);
                if stencil {
                    k1 = k1.max(stencil_h2_norm(&u, grid)? / (a1 + n));
                }
                d1 = d1.max(sobolev_norm(&u, 1, &level.delta0)? / (n + a1));
                d2 = d2.max(sobolev_norm(&u, 2, &level.delta0)? / (n + a1 + a2));
            }
        }
        if panel < MIN_PANEL {
            return Err(Error::Argument(format!("regularity panel has {panel} states at epsilon {eps}, need {MIN_PANEL}")));
        }
        points.push(RegularityPoint { epsilon: eps, k1: stencil.then_some(k1), d1, d2, panel });
    }
    let k1: Vec<(f64, f64)> = points.iter().filter_map(|p| p.k1.map(|k| (p.epsilon, k))).collect();
    let d1: Vec<(f64, f64)> = points.iter().map(|p| (p.epsilon, p.d1)).collect();
    let d2: Vec<(f64, f64)> = points.iter().map(|p| (p.epsilon, p.d2)).collect();
    let (s0, s1, s2) = (spread(&k1), spread(&d1), spread(&d2));
    Ok(RegularityReport { points, ratios: [s0.0, s1.0, s2.0], monotone_growth: [s0.1, s1.1, s2.1] })
}

/// Reference splitting on one tube: Δ₀, Δ₀ᵛ, Δ₀ᴴ and the discrete fiber levels.
struct Splitting {
    delta0: DiscreteOperator,
    vertical: DiscreteOperator,
    horizontal: DiscreteOperator,
    e0: DiscreteOperator,
    fiber: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Splitting {
    fn new(tube: &Tube) -> Result<Self> {
        let delta0 = assemble_reference_laplacian(tube)?;
        let vertical = assemble_vertical(&tube.grid);
        let horizontal = assemble_horizontal(&delta0, &vertical)?;
        let f = discrete_fiber_spectrum(&tube.grid)?;
        let e0 = e0_projection(&f.vectors[0], &tube.grid)?.op;
        Ok(Splitting { delta0, vertical, horizontal, e0, fiber: f.vectors, values: f.values })
    }
}

fn flat_tube(spec: CurveSpec, fiber: FiberKind) -> Result<Tube> {
    Tube::new(&spec, FrameChoice::Parallel, AmbientCurvature::Flat, fiber, MetricMode::Exact)
}

#[derive(Clone, Debug, Serialize)]
pub struct KatoCell {
    pub epsilon: f64,
    pub states: usize,
    pub hypothesis: bool,
    /// min over states of (lhs − rhs)/‖Δ₀u‖² for the lower bound of ‖Δ₀(ε)u‖².
    pub lower_margin: f64,
    /// min of ⟨Δ₀ᴴu⊥, Δ₀ᵛu⊥⟩/‖Δ₀u‖².
    pub cross_margin: f64,
    /// min of (‖Δ₀(ε)u‖² − bound²)/‖Δ₀u‖² for the three single-term bounds.
    pub single_margins: [f64; 3],
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct KatoReport {
    pub ns: usize,
    pub nw: usize,
    /// 1 − λ₀/λ₁ of the discrete fiber.
    pub threshold: f64,
    pub tolerance: f64,
    pub cells: Vec<KatoCell>,
}

impl KatoReport {
    pub fn passes(&self) -> bool {
        self.cells.iter().filter(|c| c.hypothesis).all(|c| c.violations == 0) && self.cells.iter().any(|c| c.hypothesis)
    }
}

/// Lower bounds for ‖Δ₀(ε)u‖ on the unit-circle cylinder over `states` random smooth states per ε.
pub fn kato_suite(epsilons: &[f64], ns: usize, nw: usize, states: usize, seed: u64) -> Result<KatoReport> {
    let tube = flat_tube(CurveSpec::cylinder(1.0, 2, ns), FiberKind::Interval { nw })?;
    let sp = Splitting::new(&tube)?;
    let lambda0 = sp.values[0];
    let threshold = 1.0 - lambda0 / sp.values[1];
    let tolerance = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let panel: Vec<Vec<f64>> = (0..states).map(|_| sp.delta0.to_sym(&random_smooth(&tube.grid, &sp.fiber, 8, 7, &mut rng))).collect();
    let mut cells = Vec::new();
    for &eps in epsilons {
        let d = assemble_reference_family(eps, &sp.vertical, &sp.horizontal, lambda0)?;
        let mut cell = KatoCell {
            epsilon: eps,
            states,
            hypothesis: eps <= threshold,
            lower_margin: f64::INFINITY,
            cross_margin: f64::INFINITY,
            single_margins: [f64::INFINITY; 3],
            violations: 0,
        };
        for x in &panel {
            let scale = euclid(&sp.delta0.apply_sym(x)).powi(2);
            let perp = sub(x, &sp.e0.apply_sym(x));
            let vp = sp.vertical.apply_sym(&perp);
            let hp = sp.horizontal.apply_sym(&perp);
            let hu = sp.horizontal.apply_sym(x);
            let lhs = euclid(&d.apply_sym(x)).powi(2);
            let cross = dot(&hp, &vp);
            let rhs = dot(&vp, &vp) / (eps * eps) + dot(&hu, &hu) + 2.0 / eps * cross;
            let singles = [dot(&vp, &vp) / (eps * eps), dot(&hu, &hu), 2.0 / eps * cross];
            let margins = [(lhs - rhs) / scale, cross / scale];
            cell.lower_margin = cell.lower_margin.min(margins[0]);
            cell.cross_margin = cell.cross_margin.min(margins[1]);
            let mut bad = margins.iter().any(|m| *m < -tolerance);
            for (slot, s) in cell.single_margins.iter_mut().zip(singles) {
                let m = (lhs - s) / scale;
                *slot = slot.min(m);
                bad |= m < -tolerance;
            }
            if bad {
                cell.violations += 1;
            }
        }
        cells.push(cell);
    }
    Ok(KatoReport { ns, nw, threshold, tolerance, cells })
}

#[derive(Clone, Debug, Serialize)]
pub struct NochnKatoReport {
    pub sectional: f64,
    pub ns: usize,
    pub disk: (usize, usize),
    pub panel: usize,
    /// (ε, C(ε)) with C(ε) = sup ‖Au‖/(ε‖Δ₀(ε)u‖ + ‖u‖).
    pub constants: Vec<(f64, f64)>,
    pub ratio: f64,
}

impl NochnKatoReport {
    pub fn passes(&self, max_ratio: f64) -> bool {
        self.ratio.is_finite() && self.ratio < max_ratio
    }
}

/// Fits C in ‖Au‖ ≤ C(ε‖Δ₀(ε)u‖ + ‖u‖) for a unit circle in R³ with a disk fiber, where A carries
/// a constant ambient sectional curvature and W_L of the flat embedding.
pub fn nochnkato_suite(epsilons: &[f64], sectional: f64, ns: usize, disk: (usize, usize), convention: Convention, seed: u64) -> Result<NochnKatoReport> {
    let tube = flat_tube(CurveSpec::circle(1.0, 3, ns), FiberKind::Disk { nr: disk.0, ntheta: disk.1 })?;
    let sp = Splitting::new(&tube)?;
    let probe = 0.05;
    let w_l = effective_potential(&tube.grid, &tube.density(probe)?, &tube.induced(probe)?, convention)?.w_l;
    let a = assemble_a(&AmbientCurvature::Constant { sectional }, &w_l, &tube.grid)?.full;
    let grid = &tube.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut panel: Vec<Vec<f64>> = Vec::new();
    for m in 0..=3 {
        panel.push(product_state(grid, &[(&sp.fiber[0], m, false, 1.0)]));
    }
    for k in 1..=5 {
        for m in [0, 2] {
            panel.push(product_state(grid, &[(&sp.fiber[k], m, false, 1.0)]));
        }
    }
    for _ in 0..6 {
        panel.push(random_smooth(grid, &sp.fiber, 3, 6, &mut rng));
    }
    let panel: Vec<Vec<f64>> = panel.iter().map(|u| sp.delta0.to_sym(u)).collect();
    let mut constants = Vec::new();
    for &eps in epsilons {
        let d = assemble_reference_family(eps, &sp.vertical, &sp.horizontal, sp.values[0])?;
        let c = panel
            .iter()
            .map(|x| euclid(&a.apply_sym(x)) / (eps * euclid(&d.apply_sym(x)) + euclid(x)))
            .fold(0.0, f64::max);
        constants.push((eps, c));
    }
    let (lo, hi) = constants.iter().fold((f64::INFINITY, 0.0f64), |(l, h), c| (l.min(c.1), h.max(c.1)));
    Ok(NochnKatoReport { sectional, ns, disk, panel: panel.len(), constants, ratio: hi / lo })
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutatorPoint {
    pub curve: String,
    pub nw: usize,
    /// ‖[Δ₀ᵛ, Δ₀ᴴ]u‖ / ‖Δ₀u‖.
    pub relative: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutatorReport {
    pub points: Vec<CommutatorPoint>,
    /// Observed order in the fiber mesh width per curve, when the values are above round-off.
    pub orders: Vec<(String, Option<f64>)>,
    pub floor: f64,
}

impl CommutatorReport {
    pub fn passes(&self) -> bool {
        self.orders.iter().all(|(name, order)| {
            let at_floor = self.points.iter().filter(|p| &p.curve == name).all(|p| p.relative <= self.floor);
            at_floor || order.is_some_and(|o| o >= 1.0)
        })
    }
}

/// Commutator of the vertical and horizontal reference Laplacians on a fiber-supported smooth state,
/// under fiber refinement, for the unit cylinder and the unit circle.
pub fn commutator_suite(ns: usize, nws: &[usize]) -> Result<CommutatorReport> {
    let floor = 1e-10;
    let mut points = Vec::new();
    let mut orders = Vec::new();
    for (name, spec) in [("cylinder", CurveSpec::cylinder(1.0, 2, ns)), ("circle", CurveSpec::circle(1.0, 2, ns))] {
        let mut hs = Vec::new();
        let mut vals = Vec::new();
        for &nw in nws {
            let tube = flat_tube(spec.clone(), FiberKind::Interval { nw })?;
            let sp = Splitting::new(&tube)?;
            let grid = &tube.grid;
            let bump: Vec<f64> = grid.fiber.interior.iter().map(|&n| (1.0 - grid.fiber.nodes[n][0].powi(2)).powi(3)).collect();
            let u = product_state(grid, &[(&bump, 1, false, 1.0), (&bump, 2, true, 0.5)]);
            let x = sp.delta0.to_sym(&u);
            let vh = sp.vertical.apply_sym(&sp.horizontal.apply_sym(&x));
            let hv = sp.horizontal.apply_sym(&sp.vertical.apply_sym(&x));
            let relative = euclid(&sub(&vh, &hv)) / euclid(&sp.delta0.apply_sym(&x));
            points.push(CommutatorPoint { curve: name.into(), nw, relative });
            hs.push(grid.fiber.h);
            vals.push(relative);
        }
        let order = if vals.iter().all(|v| *v > floor) { loglog_fit(&hs, &vals).map(|f| f.slope) } else { None };
        orders.push((name.to_string(), order));
    }
    Ok(CommutatorReport { points, orders, floor })
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothEvSuite {
    pub interval: SmoothEvReport,
    pub disk: SmoothEvReport,
}

impl SmoothEvSuite {
    pub fn passes(&self) -> bool {
        [self.interval.first, self.interval.second, self.disk.first, self.disk.second].iter().all(|v| *v == Verdict::Holds)
    }
}

/// Both eigenvalue inequalities on the analytic interval (ε = 0.75) and disk (ε = 0.6) spectra, k ≤ `levels`.
pub fn smooth_ev_suite(levels: usize) -> Result<SmoothEvSuite> {
    let interval = smooth_ev_check(&fiber_spectrum(1, levels + 1)?.values, 0.75)?;
    let disk = smooth_ev_check(&fiber_spectrum(2, levels + 1)?.values, 0.6)?;
    Ok(SmoothEvSuite { interval, disk })
}

#[derive(Clone, Debug, Serialize)]
pub struct InterpolationSuite {
    pub states: usize,
    pub modes: usize,
    /// Smallest slack per k (k = 1, 2 with n = 1).
    pub min_slack: [f64; 2],
    /// Smallest Young-form margin at α = 0.1, k = 1, n = 1, for the stated and the sharp coefficients.
    pub min_young_margin: [f64; 2],
}

impl InterpolationSuite {
    pub fn passes(&self) -> bool {
        self.min_slack.iter().chain(&self.min_young_margin).all(|s| *s >= -1e-12)
    }
}

/// Interpolation inequality on random states of `modes` eigenmodes of Δ₀ on a small cylinder.
pub fn interpolation_suite(states: usize, modes: usize, seed: u64) -> Result<InterpolationSuite> {
    let tube = flat_tube(CurveSpec::cylinder(1.0, 2, 32), FiberKind::Interval { nw: 21 })?;
    let delta0 = assemble_reference_laplacian(&tube)?;
    let eig = eigensolve(&delta0, modes, 1e-10, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = [f64::INFINITY; 2];
    let mut min_young = [f64::INFINITY; 2];
    for _ in 0..states {
        let coef: Vec<f64> = (0..eig.len()).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let u = eig.combine(&coef);
        for k in 1..=2u32 {
            let c = interpolation_check(&eig, &u, k, 1, 0.1)?;
            let scale = c.lhs.max(1.0);
            min_slack[k as usize - 1] = min_slack[k as usize - 1].min(c.slack.unwrap_or(0.0) / scale);
            if k == 1 {
                min_young[0] = min_young[0].min((c.young_rhs.unwrap() - c.lhs) / scale);
                min_young[1] = min_young[1].min((c.young_sharp_rhs.unwrap() - c.lhs) / scale);
            }
        }
    }
    Ok(InterpolationSuite { states, modes: eig.len(), min_slack, min_young_margin: min_young })
}
