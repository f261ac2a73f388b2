//! Dirichlet spectrum of a planar annulus from Bessel cross products, and the certification
//! of the effective-potential convention against it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{conjugation_potential, effective_potential, Convention, CurveKind, MetricKind, Tube};

fn cross(n: u32, k: f64, a: f64, b: f64) -> f64 {
    let (ja, ya) = puruspe::Jnu_Ynu(n as f64, k * a);
    let (jb, yb) = puruspe::Jnu_Ynu(n as f64, k * b);
    ja * yb - jb * ya
}

/// First `count` radial wavenumbers k with J_n(ka)Y_n(kb) = J_n(kb)Y_n(ka).
pub fn annulus_roots(n: u32, r_in: f64, r_out: f64, count: usize) -> Result<Vec<f64>> {
    if !(r_in > 0.0 && r_out > r_in) {
        return Err(Error::Argument(format!("annulus radii must satisfy 0 < a < b, got ({r_in}, {r_out})")));
    }
    let period = std::f64::consts::PI / (r_out - r_in);
    let dk = 0.02 * period;
    let mut k0 = 0.25 * period;
    let mut f0 = cross(n, k0, r_in, r_out);
    let mut roots = Vec::with_capacity(count);
    let limit = k0 + (count as f64 + 4.0) * period + 2.0 * n as f64 / r_in;
    while roots.len() < count {
        if k0 > limit {
            return Err(Error::Bracket { nu: n, k: roots.len() + 1, attempts: 1 });
        }
        let k1 = k0 + dk;
        let f1 = cross(n, k1, r_in, r_out);
        if f0 == 0.0 {
            roots.push(k0);
        } else if (f0 > 0.0) != (f1 > 0.0) {
            let (mut lo, mut hi, mut flo) = (k0, k1, f0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = cross(n, mid, r_in, r_out);
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        k0 = k1;
        f0 = f1;
    }
    Ok(roots)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnnulusLevel {
    pub n: u32,
    /// Radial index, from 1.
    pub k: usize,
    pub value: f64,
    pub multiplicity: usize,
}

/// Lowest `count` Dirichlet eigenvalues of the annulus a < r < b, repeated by multiplicity.
pub fn annulus_eigenvalues(r_in: f64, r_out: f64, count: usize) -> Result<(Vec<f64>, Vec<AnnulusLevel>)> {
    let mut levels = Vec::new();
    let mut n = 0u32;
    loop {
        let roots = annulus_roots(n, r_in, r_out, count)?;
        let first = roots[0] * roots[0];
        let enough = {
            let mut vals: Vec<f64> = levels.iter().flat_map(|l: &AnnulusLevel| std::iter::repeat_n(l.value, l.multiplicity)).collect();
            vals.sort_by(f64::total_cmp);
            vals.len() >= count && first > vals[count - 1]
        };
        if enough {
            break;
        }
        for (k, r) in roots.iter().enumerate() {
            levels.push(AnnulusLevel { n, k: k + 1, value: r * r, multiplicity: if n == 0 { 1 } else { 2 } });
        }
        n += 1;
    }
    levels.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut values = Vec::new();
    let mut kept = Vec::new();
    for l in levels {
        if values.len() >= count {
            break;
        }
        values.extend(std::iter::repeat_n(l.value, l.multiplicity));
        kept.push(l);
    }
    values.truncate(count);
    Ok((values, kept))
}

/// S_n(ε) = Λ_{n,1}(R−ε, R+ε) − λ₀/ε².
pub fn annulus_shift(n: u32, radius: f64, epsilon: f64, lambda0: f64) -> Result<f64> {
    let k = annulus_roots(n, radius - epsilon, radius + epsilon, 1)?[0];
    Ok(k * k - lambda0 / (epsilon * epsilon))
}

#[derive(Clone, Debug, Serialize)]
pub struct ShiftExtrapolation {
    pub n: u32,
    pub epsilons: Vec<f64>,
    pub shifts: Vec<f64>,
    /// Two-level Richardson limit assuming an even expansion in ε.
    pub limit: f64,
}

/// Extrapolates S_n(ε) to ε → 0 from ε, ε/2, ε/4.
pub fn extrapolate_shift(n: u32, radius: f64, epsilon: f64, lambda0: f64) -> Result<ShiftExtrapolation> {
    let epsilons = vec![epsilon, epsilon / 2.0, epsilon / 4.0];
    let shifts = epsilons.iter().map(|e| annulus_shift(n, radius, *e, lambda0)).collect::<Result<Vec<_>>>()?;
    let r1a = (4.0 * shifts[1] - shifts[0]) / 3.0;
    let r1b = (4.0 * shifts[2] - shifts[1]) / 3.0;
    let limit = (16.0 * r1b - r1a) / 15.0;
    Ok(ShiftExtrapolation { n, epsilons, shifts, limit })
}

#[derive(Clone, Debug, Serialize)]
pub struct Candidate {
    pub metric: MetricKind,
    pub convention: Convention,
    pub w_l: f64,
    /// n²/R² + W_L for each tested n.
    pub predicted: Vec<f64>,
    pub max_relative_error: f64,
    pub passes: bool,
    /// max |W − conjugation potential| over the grid.
    pub conjugation_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConventionCertificate {
    pub radius: f64,
    pub tolerance: f64,
    pub extrapolations: Vec<ShiftExtrapolation>,
    pub candidates: Vec<Candidate>,
    pub selected: Option<(MetricKind, Convention)>,
    /// More than one candidate matched the spectrum and the conjugation potential decided.
    pub tie_broken: bool,
}

impl ConventionCertificate {
    pub fn selected_candidate(&self) -> Option<&Candidate> {
        let (m, c) = self.selected?;
        self.candidates.iter().find(|x| x.metric == m && x.convention == c)
    }
}

/// Compares n²/R² + W_L for every (metric, sign) candidate with the extrapolated annulus shifts.
///
/// `tube` must be a circle in the plane; `probe` is the tube width at which W is tabulated and
/// `start` the coarsest annulus half-width used for extrapolation.
pub fn certify_convention(tube: &Tube, probe: f64, start: f64, ns: &[u32], tolerance: f64) -> Result<ConventionCertificate> {
    let radius = match tube.spec.kind {
        CurveKind::Circle { radius } if tube.codim() == 1 => radius,
        _ => return Err(Error::Unsupported("the annulus oracle needs a circle in the plane".into())),
    };
    let lambda0 = super::fiber::lambda0(1)?;
    let extrapolations = ns.iter().map(|&n| extrapolate_shift(n, radius, start, lambda0)).collect::<Result<Vec<_>>>()?;
    let density = tube.density(probe)?;
    let induced = tube.induced(probe)?;
    let reference = tube.reference(probe)?;
    let conj = conjugation_potential(&tube.grid, &density, &induced)?;
    let mut candidates = Vec::new();
    for (kind, metric) in [(MetricKind::Induced, &induced), (MetricKind::Reference, &reference)] {
        for convention in [Convention::Plus, Convention::Minus] {
            let field = effective_potential(&tube.grid, &density, metric, convention)?;
            let w_l = field.mean_w_l();
            let predicted: Vec<f64> = ns.iter().map(|&n| (n as f64 / radius).powi(2) + w_l).collect();
            let max_relative_error = predicted
                .iter()
                .zip(&extrapolations)
                .map(|(p, e)| (p - e.limit).abs() / e.limit.abs().max(1e-3))
                .fold(0.0, f64::max);
            let conjugation_deviation = field.w.iter().zip(&conj).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            candidates.push(Candidate {
                metric: kind,
                convention,
                w_l,
                predicted,
                max_relative_error,
                passes: max_relative_error <= tolerance,
                conjugation_deviation,
            });
        }
    }
    let passing: Vec<&Candidate> = candidates.iter().filter(|c| c.passes).collect();
    let tie_broken = passing.len() > 1;
    let selected = passing
        .iter()
        .min_by(|a, b| a.conjugation_deviation.total_cmp(&b.conjugation_deviation))
        .map(|c| (c.metric, c.convention));
    Ok(ConventionCertificate { radius, tolerance, extrapolations, candidates, selected, tie_broken })
}
