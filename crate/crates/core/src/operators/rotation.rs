//! Fiber rotation fields L_{μα}, the perturbation A and the remainder εR(ε).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{AmbientCurvature, FiberKind, TubeGrid};

use super::discrete::{Coeff, DiscreteOperator, FiberMatrix, Measure, OperatorMeta, Term};

/// L_{μα} = w^α ∂_μ − w^μ ∂_α as a fiber matrix; `None` when the fiber is one dimensional.
fn rotation_matrix(mu: usize, alpha: usize, grid: &TubeGrid) -> Result<Option<FiberMatrix>> {
    let (nr, nt) = match grid.fiber.kind {
        FiberKind::Interval { .. } => return Ok(None),
        FiberKind::Disk { nr, ntheta } => (nr, ntheta),
    };
    if mu > 1 || alpha > 1 {
        return Err(Error::Argument(format!("normal index out of range: ({mu}, {alpha})")));
    }
    let nf = grid.fiber.len();
    let mut m = FiberMatrix::zeros(nf);
    if mu == alpha {
        return Ok(Some(m));
    }
    // L_{01} = w²∂₁ − w¹∂₂ = −∂_θ
    let sign = if mu == 0 { -1.0 } else { 1.0 };
    let ht = 2.0 * std::f64::consts::PI / nt as f64;
    let idx = |i: usize, k: usize| 1 + (i - 1) * nt + (k % nt);
    for i in 1..nr {
        for k in 0..nt {
            m.add_entry(idx(i, k), idx(i, k + 1), sign / (2.0 * ht));
            m.add_entry(idx(i, k), idx(i, k + nt - 1), -sign / (2.0 * ht));
        }
    }
    Ok(Some(m))
}

/// A rotation field on the tube; `degenerate` is set for one-dimensional fibers, where it is zero.
#[derive(Clone, Debug)]
pub struct RotationField {
    pub op: DiscreteOperator,
    pub degenerate: bool,
}

pub fn rotation_field(alpha: usize, mu: usize, grid: &Arc<TubeGrid>) -> Result<RotationField> {
    let m = rotation_matrix(mu, alpha, grid)?;
    let degenerate = m.is_none();
    let terms = m.map(|m| vec![Term::Fiber(vec![m])]).unwrap_or_default();
    let op = DiscreteOperator::new(
        grid.clone(),
        Measure::Reference,
        Arc::new(grid.weights()),
        terms,
        OperatorMeta { symbol: format!("L_{}{}", mu + 1, alpha + 1), epsilon: None, order: 1 },
    );
    Ok(RotationField { op, degenerate })
}

/// A = P_A + W_L∘π with P_A = −(1/12) R_{βνμα} L_{βν} L_{αμ}.
#[derive(Clone, Debug)]
pub struct AOperator {
    pub full: DiscreteOperator,
    pub principal: DiscreteOperator,
}

pub fn assemble_a(curvature: &AmbientCurvature, w_l: &[f64], grid: &Arc<TubeGrid>) -> Result<AOperator> {
    let nf = grid.fiber.len();
    if w_l.len() != grid.ns {
        return Err(Error::Mismatch(format!("W_L has {} values, grid has {} base nodes", w_l.len(), grid.ns)));
    }
    let d = grid.fiber.codim();
    let mut pa = FiberMatrix::zeros(nf);
    if d == 2 && !curvature.is_flat() {
        let l = |a: usize, b: usize| rotation_matrix(a, b, grid).map(|m| m.unwrap());
        for be in 0..2 {
            for nu in 0..2 {
                for mu in 0..2 {
                    for al in 0..2 {
                        let r = curvature.riemann(be + 1, nu + 1, mu + 1, al + 1);
                        if r != 0.0 {
                            pa = pa.plus(&l(be, nu)?.mul(&l(al, mu)?).scaled(-r / 12.0));
                        }
                    }
                }
            }
        }
    }
    let weights = Arc::new(grid.weights());
    let principal = DiscreteOperator::new(
        grid.clone(),
        Measure::Reference,
        weights.clone(),
        if pa.is_zero() { vec![] } else { vec![Term::Fiber(vec![pa])] },
        OperatorMeta { symbol: "P_A".into(), epsilon: None, order: 2 },
    );
    let (lo, hi) = w_l.iter().fold((f64::MAX, f64::MIN), |(a, b), x| (a.min(*x), b.max(*x)));
    let mean = w_l.iter().sum::<f64>() / w_l.len() as f64;
    let diag = if hi - lo <= 1e-12 * mean.abs().max(1.0) {
        Coeff(vec![mean; nf])
    } else {
        Coeff(w_l.iter().flat_map(|w| std::iter::repeat_n(*w, nf)).collect())
    };
    let full = principal.clone().add_term(Term::Diag(diag)).with_symbol("A", None);
    Ok(AOperator { full, principal })
}

/// εR(ε) = Δ(ε) − Δ₀(ε) − A with its action on a panel of states.
#[derive(Clone, Debug)]
pub struct Remainder {
    pub epsilon: f64,
    pub op: DiscreteOperator,
    /// ‖εR(ε)u‖₀ / |||u|||₂ per panel state.
    pub norms: Vec<f64>,
    /// norms / ε
    pub quotients: Vec<f64>,
}

pub fn residual_r(
    epsilon: f64,
    delta: &DiscreteOperator,
    delta0_eps: &DiscreteOperator,
    a: &DiscreteOperator,
    delta0: &DiscreteOperator,
    panel: &[Vec<f64>],
) -> Result<Remainder> {
    let op = delta.minus(delta0_eps)?.minus(a)?.with_symbol("eps R(eps)", Some(epsilon));
    let mut norms = Vec::with_capacity(panel.len());
    for u in panel {
        let su = op.to_sym(u);
        let r = op.apply_sym(&su).iter().map(|x| x * x).sum::<f64>().sqrt();
        let s2 = delta0.apply_sym(&su).iter().map(|x| x * x).sum::<f64>().sqrt();
        let s0 = su.iter().map(|x| x * x).sum::<f64>().sqrt();
        norms.push(r / (s0 + s2));
    }
    let quotients = norms.iter().map(|n| n / epsilon).collect();
    Ok(Remainder { epsilon, op, norms, quotients })
}
