//! Joint eigenbasis check: band labels of Δ₀ eigenvectors by fiber-level overlap.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::TubeGrid;
use crate::operators::{DiscreteOperator, Measure};

use super::eigen::EigenSystem;
use super::fiber::DiscreteFiber;

pub const OVERLAP_THRESHOLD: f64 = 0.9;

#[derive(Clone, Debug, Serialize)]
pub struct BandEntry {
    pub index: usize,
    pub eigenvalue: f64,
    /// Fiber level with the largest overlap, `None` when below the threshold.
    pub band: Option<usize>,
    pub overlap: f64,
    /// ‖Δ₀ᵛu − λ_k u‖ for the chosen (or best) level.
    pub vertical_residual: f64,
    /// μ_s − λ_{k(s)}.
    pub horizontal_part: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BandReport {
    pub entries: Vec<BandEntry>,
    /// Distinct fiber levels λ_k used for labelling.
    pub levels: Vec<f64>,
    pub mixed: usize,
    pub min_horizontal: f64,
}

impl BandReport {
    /// Horizontal parts of labelled modes are ≥ −tol.
    pub fn nonnegative(&self, tol: f64) -> bool {
        self.entries.iter().filter(|e| e.band.is_some()).all(|e| e.horizontal_part >= -tol)
    }
}

/// Groups fiber eigenvalues whose relative spacing is below `gap`; returns (value, member indices).
fn levels(values: &[f64], gap: f64) -> Vec<(f64, Vec<usize>)> {
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        match out.last_mut() {
            Some((l, members)) if (v - *l).abs() <= gap * v.abs().max(1.0) => members.push(i),
            _ => out.push((*v, vec![i])),
        }
    }
    out
}

pub fn common_eigen_check(eig: &EigenSystem, vertical: &DiscreteOperator, fiber: &DiscreteFiber, grid: &TubeGrid) -> Result<BandReport> {
    if eig.measure != Measure::Reference || vertical.measure != Measure::Reference {
        return Err(Error::Mismatch("band check works in the reference measure".into()));
    }
    let nf = grid.fiber.len();
    let ns = grid.ns;
    if eig.weights.len() != ns * nf {
        return Err(Error::Mismatch("eigensystem and grid differ".into()));
    }
    let top = eig.values.iter().cloned().fold(f64::MIN, f64::max);
    let all = levels(&fiber.values, 1e-8);
    let lv: Vec<&(f64, Vec<usize>)> = all.iter().take_while(|(l, _)| *l <= top + 1.0).collect();
    let lv = if lv.is_empty() { vec![&all[0]] } else { lv };
    let hs = grid.hs();
    let mut entries = Vec::with_capacity(eig.len());
    for (s, u) in eig.vectors.iter().enumerate() {
        let norm2 = eig.inner(u, u);
        let overlaps: Vec<f64> = lv
            .iter()
            .map(|(_, members)| {
                let mut acc = 0.0;
                for &k in members {
                    let phi = &fiber.vectors[k];
                    for j in 0..ns {
                        let c: f64 = (0..nf).map(|i| grid.fiber.weight(i) * phi[i] * u[j * nf + i]).sum();
                        acc += hs * c * c;
                    }
                }
                acc / norm2
            })
            .collect();
        let (best, overlap) = overlaps.iter().enumerate().fold((0, f64::MIN), |a, (k, o)| if *o > a.1 { (k, *o) } else { a });
        let lambda = lv[best].0;
        let vu = vertical.apply(&crate::operators::DiscreteState::new(u.clone(), Measure::Reference))?;
        let r: Vec<f64> = vu.values.iter().zip(u).map(|(a, b)| a - lambda * b).collect();
        let vertical_residual = eig.inner(&r, &r).sqrt();
        entries.push(BandEntry {
            index: s,
            eigenvalue: eig.values[s],
            band: (overlap >= OVERLAP_THRESHOLD).then_some(best),
            overlap,
            vertical_residual,
            horizontal_part: eig.values[s] - lambda,
        });
    }
    let mixed = entries.iter().filter(|e| e.band.is_none()).count();
    let min_horizontal = entries.iter().filter(|e| e.band.is_some()).map(|e| e.horizontal_part).fold(f64::INFINITY, f64::min);
    Ok(BandReport { entries, levels: lv.iter().map(|l| l.0).collect(), mixed, min_horizontal })
}
