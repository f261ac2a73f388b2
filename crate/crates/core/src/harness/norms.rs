//! Operator-form Sobolev norms, spectral norms and the interpolation inequality.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{FiberKind, TubeGrid};
use crate::operators::DiscreteOperator;
use crate::spectral::EigenSystem;

fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// ‖Aᵏu‖ in the operator's measure, by repeated application.
pub fn power_norm(u: &[f64], k: u32, op: &DiscreteOperator) -> f64 {
    let mut x = op.to_sym(u);
    for _ in 0..k {
        x = op.apply_sym(&x);
    }
    euclid(&x)
}

/// |||u|||_{2k} = ‖u‖ + ‖Δ₀ᵏu‖, with Δ₀⁰ = I so that k = 0 gives 2‖u‖.
pub fn sobolev_norm(u: &[f64], k: u32, delta0: &DiscreteOperator) -> Result<f64> {
    if k > 3 {
        return Err(Error::Argument(format!("operator Sobolev norms are provided for k <= 3, got {k}")));
    }
    if u.len() != delta0.dim() {
        return Err(Error::Mismatch("state and operator sizes differ".into()));
    }
    Ok(power_norm(u, 0, delta0) + power_norm(u, k, delta0))
}

/// (Σ μ_sʲ c_s²)^{1/2} for expansion coefficients c and nonnegative eigenvalues μ.
pub fn spectral_norm(coef: &[f64], mu: &[f64], j: f64) -> Result<f64> {
    if let Some(m) = mu.iter().find(|m| **m < 0.0) {
        return Err(Error::Argument(format!("spectral norms need a nonnegative spectrum, found {m}")));
    }
    Ok(coef.iter().zip(mu).map(|(c, m)| if j == 0.0 { c * c } else { m.powf(j) * c * c }).sum::<f64>().sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct InterpolationCheck {
    pub k: u32,
    pub n: u32,
    pub lhs: f64,
    /// ‖u‖₀^{1−k/2n}‖u‖_{2n}^{k/2n}; `None` for k > 2n.
    pub rhs: Option<f64>,
    pub slack: Option<f64>,
    /// Young form with coefficients (1−θ)α^{−1/(1−θ)} and (2n/k)α.
    pub young_rhs: Option<f64>,
    /// Young form with the sharp coefficient θα^{1/θ}.
    pub young_sharp_rhs: Option<f64>,
}

/// ‖u‖_k ≤ ‖u‖₀^{1−θ}‖u‖_{2n}^θ with θ = k/2n, spectral norms of `eig`, and its Young forms at `alpha`.
///
/// `u` is expanded in the stored eigenvectors; anything outside their span is ignored.
pub fn interpolation_check(eig: &EigenSystem, u: &[f64], k: u32, n: u32, alpha: f64) -> Result<InterpolationCheck> {
    if n == 0 || k == 0 || k > 2 * n + 1 {
        return Err(Error::Argument(format!("need 1 <= k <= 2n+1, got k = {k}, n = {n}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Argument(format!("alpha must be in (0,1], got {alpha}")));
    }
    let c = eig.coefficients(u);
    let lhs = spectral_norm(&c, &eig.values, k as f64)?;
    if k > 2 * n {
        return Ok(InterpolationCheck { k, n, lhs, rhs: None, slack: None, young_rhs: None, young_sharp_rhs: None });
    }
    let theta = k as f64 / (2 * n) as f64;
    let n0 = spectral_norm(&c, &eig.values, 0.0)?;
    let n2 = spectral_norm(&c, &eig.values, (2 * n) as f64)?;
    let rhs = n0.powf(1.0 - theta) * n2.powf(theta);
    let first = if theta < 1.0 { (1.0 - theta) * alpha.powf(-1.0 / (1.0 - theta)) * n0 } else { 0.0 };
    let young = first + alpha / theta * n2;
    let sharp = first + theta * alpha.powf(1.0 / theta) * n2;
    Ok(InterpolationCheck {
        k,
        n,
        lhs,
        rhs: Some(rhs),
        slack: Some(rhs - lhs),
        young_rhs: Some(young),
        young_sharp_rhs: Some(sharp),
    })
}

/// Discrete H² norm from second differences across the fiber and spectral derivatives along the
/// curve, flat product metric, Hessian counted in full. Interval fibers only.
pub fn stencil_h2_norm(u: &[f64], grid: &TubeGrid) -> Result<f64> {
    let nw = match grid.fiber.kind {
        FiberKind::Interval { nw } => nw,
        FiberKind::Disk { .. } => return Err(Error::Unsupported("stencil H² norm on disk fibers".into())),
    };
    let nf = nw - 2;
    let ns = grid.ns;
    if u.len() != ns * nf {
        return Err(Error::Mismatch("state and grid sizes differ".into()));
    }
    let h = grid.fiber.h;
    let at = |j: usize, i: isize| if i < 0 || i >= nf as isize { 0.0 } else { u[j * nf + i as usize] };
    let mut uw = vec![0.0; ns * nf];
    let mut uww = vec![0.0; ns * nf];
    for j in 0..ns {
        for i in 0..nf as isize {
            uw[j * nf + i as usize] = (at(j, i + 1) - at(j, i - 1)) / (2.0 * h);
            uww[j * nf + i as usize] = (at(j, i + 1) - 2.0 * at(j, i) + at(j, i - 1)) / (h * h);
        }
    }
    let line = &grid.line;
    let column = |f: &[f64], i: usize| (0..ns).map(|j| f[j * nf + i]).collect::<Vec<f64>>();
    let hs = grid.hs();
    let mut total = 0.0;
    for i in 0..nf {
        let ui = column(u, i);
        let wi = column(&uw, i);
        let us = line.derivative(&ui);
        let uss = line.second_derivative(&ui);
        let usw = line.derivative(&wi);
        let weight = hs * grid.fiber.weight(i);
        for j in 0..ns {
            let k = j * nf + i;
            total += weight
                * (ui[j] * ui[j] + us[j] * us[j] + uw[k] * uw[k] + uss[j] * uss[j] + 2.0 * usw[j] * usw[j] + uww[k] * uww[k]);
        }
    }
    Ok(total.sqrt())
}
