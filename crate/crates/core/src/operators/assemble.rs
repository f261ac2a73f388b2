//! Assembly of the Laplace–Beltrami family, its vertical/horizontal splitting and E₀.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{DensityField, MetricField, MetricKind, Tube, TubeGrid};

use super::discrete::{Coeff, DiscreteOperator, DiscreteState, FiberMatrix, Measure, OperatorMeta, Term};

fn check_grid(metric: &MetricField, grid: &TubeGrid) -> Result<()> {
    if metric.ns != grid.ns || metric.nodes.len() != grid.fiber.node_count() || metric.codim() != grid.fiber.codim() {
        return Err(Error::Mismatch("metric field and grid differ".into()));
    }
    Ok(())
}

/// Flux-form fiber matrix −∇·(c ∇) with edge coefficient `coef(mid)`, in symmetric coordinates for
/// node weights ω_i μ_i.
fn fiber_block(grid: &TubeGrid, mu: &[f64], mut coef: impl FnMut([f64; 2]) -> f64) -> FiberMatrix {
    let f = &grid.fiber;
    let nf = f.len();
    let mut k = FiberMatrix::zeros(nf);
    for e in &f.edges {
        let c = e.conductance * coef(e.mid);
        k.add_entry(e.i, e.i, c);
        if let Some(j) = e.j {
            k.add_entry(j, j, c);
            k.add_entry(e.i, j, -c);
            k.add_entry(j, e.i, -c);
        }
    }
    let d: Vec<f64> = (0..nf).map(|i| (f.weight(i) * mu[i]).sqrt()).collect();
    for (i, row) in k.rows.iter_mut().enumerate() {
        for (j, v) in row.iter_mut() {
            *v /= d[i] * d[*j];
        }
        row.sort_by_key(|e| e.0);
    }
    k
}

/// Laplace–Beltrami operator of `metric`, symmetric in the chosen measure.
///
/// With `Measure::Induced` states are weighted by the metric's own volume; with `Measure::Reference`
/// the same matrix acts on the density-conjugated representation.
pub fn assemble_laplace_beltrami(metric: &MetricField, grid: &Arc<TubeGrid>, measure: Measure) -> Result<DiscreteOperator> {
    check_grid(metric, grid)?;
    if metric.has_connection() {
        return Err(Error::Unsupported(
            "assembly with nonzero connection coefficients (use a parallel frame on a planar curve)".into(),
        ));
    }
    let ns = grid.ns;
    let nf = grid.fiber.len();
    let rows = if metric.is_uniform() { 1 } else { ns };
    let mut mu = Vec::with_capacity(rows * nf);
    let mut alpha = Vec::with_capacity(rows * nf);
    let mut blocks = Vec::with_capacity(rows);
    for j in 0..rows {
        let mut mu_j = Vec::with_capacity(nf);
        for i in 0..nf {
            let bl = metric.at(j, grid.fiber.interior[i]);
            if !bl.is_positive() {
                return Err(Error::NotPositive {
                    at: format!("base node {j}, unknown {i}"),
                    detail: format!("a = {:.3e}", bl.a),
                });
            }
            let m = metric.relative_volume(bl);
            mu_j.push(m);
            alpha.push(m / bl.a);
        }
        let mut bad = None;
        let block = fiber_block(grid, &mu_j, |w| {
            let bl = metric.eval(j, w);
            match bl.scalar_b() {
                Some(beta) if bl.is_positive() => metric.relative_volume(&bl) / beta,
                _ => {
                    bad = Some(w);
                    f64::NAN
                }
            }
        });
        if let Some(w) = bad {
            return Err(Error::Unsupported(format!(
                "fiber metric must be a positive multiple of the identity (fails near ({:.3}, {:.3}))",
                w[0], w[1]
            )));
        }
        blocks.push(block);
        mu.extend(mu_j);
    }
    let hs = grid.hs();
    let weights: Vec<f64> = (0..ns * nf)
        .map(|u| {
            let (j, i) = (u / nf, u % nf);
            let m = if measure == Measure::Induced { mu[(j % rows) * nf + i] } else { 1.0 };
            hs * grid.fiber.weight(i) * m
        })
        .collect();
    let symbol = match metric.kind {
        MetricKind::Induced => "Delta_g",
        MetricKind::Reference => "Delta_g0",
    };
    Ok(DiscreteOperator::new(
        grid.clone(),
        measure,
        Arc::new(weights),
        vec![Term::SStiff { alpha: Coeff(alpha), mu: Coeff(mu) }, Term::Fiber(blocks)],
        OperatorMeta { symbol: symbol.into(), epsilon: Some(metric.epsilon), order: 2 },
    ))
}

/// Flat Dirichlet Laplacian on every fiber (block diagonal over base nodes).
pub fn assemble_vertical(grid: &Arc<TubeGrid>) -> DiscreteOperator {
    let nf = grid.fiber.len();
    let block = fiber_block(grid, &vec![1.0; nf], |_| 1.0);
    DiscreteOperator::new(
        grid.clone(),
        Measure::Reference,
        Arc::new(grid.weights()),
        vec![Term::Fiber(vec![block])],
        OperatorMeta { symbol: "Delta0_V".into(), epsilon: None, order: 2 },
    )
}

/// Δ₀ᴴ = Δ₀ − Δ₀ᵛ.
pub fn assemble_horizontal(delta0: &DiscreteOperator, vertical: &DiscreteOperator) -> Result<DiscreteOperator> {
    Ok(delta0.minus(vertical)?.with_symbol("Delta0_H", None))
}

/// Δ₀(ε) = ε⁻²(Δ₀ᵛ − λ₀) + Δ₀ᴴ.
pub fn assemble_reference_family(
    epsilon: f64,
    vertical: &DiscreteOperator,
    horizontal: &DiscreteOperator,
    lambda0: f64,
) -> Result<DiscreteOperator> {
    if !(epsilon > 0.0) {
        return Err(Error::Argument(format!("epsilon must be positive, got {epsilon}")));
    }
    let e2 = 1.0 / (epsilon * epsilon);
    let v = vertical.scaled(e2).add_term(Term::Identity(-lambda0 * e2));
    Ok(v.plus(horizontal)?.with_symbol("Delta0(eps)", Some(epsilon)))
}

/// The reference Laplacian Δ₀ of the unscaled reference metric.
pub fn assemble_reference_laplacian(tube: &Tube) -> Result<DiscreteOperator> {
    let g0 = tube.reference(1.0)?;
    Ok(assemble_laplace_beltrami(&g0, &tube.grid, Measure::Reference)?.with_symbol("Delta0", Some(1.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// m-normalized → m₀-normalized: multiply by ρ^{1/2}.
    In,
    /// m₀-normalized → m-normalized: multiply by ρ^{-1/2}.
    Out,
}

/// Unitary change of measure between m and m₀.
pub fn conjugate_by_density(u: &DiscreteState, rho: &DensityField, grid: &TubeGrid, direction: Direction) -> Result<DiscreteState> {
    let nf = grid.fiber.len();
    let nn = grid.fiber.node_count();
    if u.values.len() != grid.dim() || rho.rho.len() != grid.ns * nn {
        return Err(Error::Mismatch("state, density and grid sizes differ".into()));
    }
    let (expected, target, power) = match direction {
        Direction::In => (Measure::Induced, Measure::Reference, 0.5),
        Direction::Out => (Measure::Reference, Measure::Induced, -0.5),
    };
    if u.measure != expected {
        return Err(Error::Mismatch(format!("conjugation {direction:?} expects a {expected:?} state")));
    }
    let mut values = Vec::with_capacity(u.values.len());
    for (k, x) in u.values.iter().enumerate() {
        let r = rho.rho[(k / nf) * nn + grid.fiber.interior[k % nf]];
        if !(r > 0.0) {
            return Err(Error::NotPositive { at: format!("unknown {k}"), detail: format!("density {r:.3e}") });
        }
        values.push(x * r.powf(power));
    }
    Ok(DiscreteState { values, measure: target })
}

/// Δ(ε) = C_ρ (Δ_{g(ε)} − λ₀/ε²) C_ρ⁻¹ on m₀.
pub fn assemble_induced_family(epsilon: f64, tube: &Tube, lambda0: f64) -> Result<DiscreteOperator> {
    let g = tube.induced(epsilon)?;
    let lb = assemble_laplace_beltrami(&g, &tube.grid, Measure::Reference)?;
    Ok(lb.add_term(Term::Identity(-lambda0 / (epsilon * epsilon))).with_symbol("Delta(eps)", Some(epsilon)))
}

/// E₀ together with the normalized fiber ground state it projects on.
#[derive(Clone, Debug)]
pub struct E0Projection {
    pub op: DiscreteOperator,
    /// Nodal fiber ground state, unit in the fiber inner product.
    pub u0: Vec<f64>,
    /// True when the supplied state had to be renormalized.
    pub renormalized: bool,
}

impl E0Projection {
    /// Lifts a base function v(s) to u₀ ⊗ v.
    pub fn lift(&self, v: &[f64]) -> Vec<f64> {
        let nf = self.u0.len();
        let mut out = Vec::with_capacity(v.len() * nf);
        for vj in v {
            out.extend(self.u0.iter().map(|u| u * vj));
        }
        out
    }

    /// Fiber coefficient ⟨u₀, u(s,·)⟩ at every base node.
    pub fn coefficient(&self, grid: &TubeGrid, u: &[f64]) -> Vec<f64> {
        let nf = self.u0.len();
        (0..grid.ns)
            .map(|j| (0..nf).map(|i| grid.fiber.weight(i) * self.u0[i] * u[j * nf + i]).sum())
            .collect()
    }
}

/// (E₀u)(s,·) = u₀ ⟨u₀, u(s,·)⟩_fiber for nodal fiber values `u0` on the unknowns.
pub fn e0_projection(u0: &[f64], grid: &Arc<TubeGrid>) -> Result<E0Projection> {
    let nf = grid.fiber.len();
    if u0.len() != nf {
        return Err(Error::Mismatch(format!("ground state has {} values, fiber has {nf}", u0.len())));
    }
    let norm = (0..nf).map(|i| grid.fiber.weight(i) * u0[i] * u0[i]).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Argument("zero fiber ground state".into()));
    }
    let renormalized = (norm - 1.0).abs() > 1e-12;
    let u0: Vec<f64> = u0.iter().map(|x| x / norm).collect();
    let sym: Vec<f64> = (0..nf).map(|i| grid.fiber.weight(i).sqrt() * u0[i]).collect();
    let op = DiscreteOperator::new(
        grid.clone(),
        Measure::Reference,
        Arc::new(grid.weights()),
        vec![Term::Projector { u0: sym, coef: 1.0 }],
        OperatorMeta { symbol: "E0".into(), epsilon: None, order: 0 },
    );
    Ok(E0Projection { op, u0, renormalized })
}
