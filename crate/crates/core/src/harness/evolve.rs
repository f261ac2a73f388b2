//! Heat semigroup e^{−(t/2)A} by spectral expansion.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{DiscreteOperator, DiscreteState};
use crate::spectral::{eigensolve, EigenSystem, ModalSpectrum};

#[derive(Clone, Debug, Serialize)]
pub struct EvolutionResult {
    #[serde(skip)]
    pub state: DiscreteState,
    /// Eigenpairs kept (expansion) or Fourier modes kept (modal).
    pub modes_used: usize,
    /// Bound on the L² norm of everything dropped.
    pub truncation_bound: f64,
    pub wall_time: f64,
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Argument(format!("time must be nonnegative, got {t}")));
    }
    Ok(())
}

/// u(t) = Σ e^{−tλ_s/2}⟨u_s,u0⟩u_s over the stored eigenpairs.
///
/// Terms are dropped from the first s with e^{−tλ_s/2}‖u0‖ < tol on. The part of u0 outside the
/// stored span is damped at least by e^{−tλ_last/2}; if that leaves more than `tol` the call fails.
pub fn evolve(eig: &EigenSystem, u0: &DiscreteState, t: f64, tol: f64) -> Result<EvolutionResult> {
    let start = Instant::now();
    check_time(t)?;
    if u0.measure != eig.measure || u0.values.len() != eig.weights.len() {
        return Err(Error::Mismatch("initial state does not match the eigensystem".into()));
    }
    if eig.values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Argument("eigenvalues must be ascending".into()));
    }
    let norm0 = u0.norm(&eig.weights);
    let coef = eig.coefficients(&u0.values);
    let captured: f64 = coef.iter().map(|c| c * c).sum();
    let outside = (norm0 * norm0 - captured).max(0.0);
    let damp = |l: f64| (-0.5 * t * l).exp();
    let cut = eig.values.iter().position(|&l| damp(l) * norm0 < tol).unwrap_or(eig.len());
    let dropped: f64 = coef[cut..].iter().map(|c| c * c).sum();
    let outside_rate = eig.values.last().map(|&l| damp(l)).unwrap_or(1.0);
    let truncation_bound = if cut < eig.len() {
        damp(eig.values[cut]) * (dropped + outside).sqrt()
    } else if eig.len() == eig.weights.len() {
        0.0
    } else {
        outside_rate * outside.sqrt()
    };
    if truncation_bound > tol {
        return Err(Error::InsufficientModes { modes: eig.len(), tol, bound: truncation_bound });
    }
    let scaled: Vec<f64> = coef.iter().enumerate().map(|(s, c)| if s < cut { c * damp(eig.values[s]) } else { 0.0 }).collect();
    let values = eig.combine(&scaled);
    Ok(EvolutionResult {
        state: DiscreteState::new(values, u0.measure),
        modes_used: cut,
        truncation_bound,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Exact evolution by Fourier-modal blocks; Fourier modes whose whole block is damped below
/// tol/‖u0‖ are skipped.
pub fn evolve_modal(modal: &ModalSpectrum, u0: &DiscreteState, t: f64, tol: f64) -> Result<EvolutionResult> {
    let start = Instant::now();
    check_time(t)?;
    let op = &modal.op;
    if u0.measure != op.measure || u0.values.len() != op.dim() {
        return Err(Error::Mismatch("initial state does not match the operator".into()));
    }
    let x = op.to_sym(&u0.values);
    let norm0 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let cutoff = if norm0 > 0.0 { Some(tol / norm0) } else { None };
    let (y, used, skipped) = modal.apply_fn(&x, |l| (-0.5 * t * l).exp(), cutoff);
    Ok(EvolutionResult {
        state: DiscreteState::new(op.from_sym(&y), u0.measure),
        modes_used: used,
        truncation_bound: skipped * norm0,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Evolution engine for one operator: Fourier-modal when the operator is constant along the
/// curve, otherwise a truncated eigensystem.
#[derive(Debug)]
pub enum Propagator {
    Modal(ModalSpectrum),
    Expansion(EigenSystem),
}

impl Propagator {
    pub fn new(op: &DiscreteOperator, count: usize, tol: f64, seed: u64) -> Result<Self> {
        if op.is_invariant() {
            Ok(Propagator::Modal(ModalSpectrum::new(op)?))
        } else {
            Ok(Propagator::Expansion(eigensolve(op, count.min(op.dim()), tol, seed)?))
        }
    }

    pub fn op(&self) -> Option<&DiscreteOperator> {
        match self {
            Propagator::Modal(m) => Some(&m.op),
            Propagator::Expansion(_) => None,
        }
    }

    pub fn evolve(&self, u0: &DiscreteState, t: f64, tol: f64) -> Result<EvolutionResult> {
        match self {
            Propagator::Modal(m) => evolve_modal(m, u0, t, tol),
            Propagator::Expansion(e) => evolve(e, u0, t, tol),
        }
    }

    /// f(A)u by spectral calculus; an expansion only sees the part of u inside its span.
    pub fn apply_fn(&self, u: &DiscreteState, f: impl Fn(f64) -> f64) -> Vec<f64> {
        match self {
            Propagator::Modal(m) => m.op.from_sym(&m.apply_fn(&m.op.to_sym(&u.values), f, None).0),
            Propagator::Expansion(e) => {
                let c: Vec<f64> = e.coefficients(&u.values).iter().zip(&e.values).map(|(c, l)| c * f(*l)).collect();
                e.combine(&c)
            }
        }
    }

    /// Lowest eigenvalue carrying weight above `rel`·‖u‖ in the expansion of u.
    pub fn support_min(&self, u: &DiscreteState, rel: f64) -> f64 {
        match self {
            Propagator::Modal(m) => m.support_min(&m.op.to_sym(&u.values), rel),
            Propagator::Expansion(e) => {
                let n = u.norm(&e.weights);
                e.coefficients(&u.values)
                    .iter()
                    .zip(&e.values)
                    .filter(|(c, _)| c.abs() > rel * n)
                    .map(|(_, l)| *l)
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}
