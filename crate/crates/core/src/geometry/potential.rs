//! The effective potential W = ½Δ log ρ − ¼‖d log ρ‖² and its restriction to the core curve.

use serde::{Deserialize, Serialize};

use super::grid::{FiberGrid, FiberKind, TubeGrid};
use super::metric::{DensityField, MetricField, MetricKind};
use crate::error::{Error, Result};

/// Sign of the Laplacian inside the potential formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Δ = −div grad (the positive operator).
    Plus,
    /// Δ = +div grad.
    Minus,
}

impl Convention {
    pub fn sign(self) -> f64 {
        match self {
            Convention::Plus => -1.0,
            Convention::Minus => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Convention::Plus => "plus",
            Convention::Minus => "minus",
        }
    }
}

#[derive(Clone, Debug)]
pub struct PotentialField {
    pub convention: Convention,
    pub metric: MetricKind,
    pub epsilon: f64,
    /// W on every node, `w[j * nodes + node]`.
    pub w: Vec<f64>,
    /// W on the zero section.
    pub w_l: Vec<f64>,
}

impl PotentialField {
    pub fn mean_w_l(&self) -> f64 {
        self.w_l.iter().sum::<f64>() / self.w_l.len() as f64
    }
}

/// Fiber index of the zero section node.
pub fn center_node(fiber: &FiberGrid) -> usize {
    match fiber.kind {
        FiberKind::Interval { nw } => (nw - 1) / 2,
        FiberKind::Disk { .. } => 0,
    }
}

/// Cartesian gradient and flat Laplacian of a node field on one fiber.
pub(crate) fn fiber_derivatives(fiber: &FiberGrid, f: &[f64]) -> (Vec<[f64; 2]>, Vec<f64>) {
    let h = fiber.h;
    match fiber.kind {
        FiberKind::Interval { nw } => {
            let mut grad = vec![[0.0; 2]; nw];
            let mut lap = vec![0.0; nw];
            for i in 0..nw {
                let (d1, d2) = line_derivs(f, i, h);
                grad[i][0] = d1;
                lap[i] = d2;
            }
            (grad, lap)
        }
        FiberKind::Disk { nr, ntheta } => {
            let nn = fiber.node_count();
            let mut grad = vec![[0.0; 2]; nn];
            let mut lap = vec![0.0; nn];
            let ht = 2.0 * std::f64::consts::PI / ntheta as f64;
            let idx = |i: usize, k: usize| if i == 0 { 0 } else { 1 + (i - 1) * ntheta + (k % ntheta) };
            let ring1: Vec<f64> = (0..ntheta).map(|k| f[idx(1, k)]).collect();
            let mean1 = ring1.iter().sum::<f64>() / ntheta as f64;
            lap[0] = 4.0 / (h * h) * (mean1 - f[0]);
            let (mut gx, mut gy) = (0.0, 0.0);
            for (k, v) in ring1.iter().enumerate() {
                let th = k as f64 * ht;
                gx += v * th.cos();
                gy += v * th.sin();
            }
            grad[0] = [2.0 * gx / (ntheta as f64 * h), 2.0 * gy / (ntheta as f64 * h)];
            for k in 0..ntheta {
                let th = k as f64 * ht;
                let radial: Vec<f64> = (0..=nr).map(|i| f[idx(i, k)]).collect();
                for i in 1..=nr {
                    let r = i as f64 * h;
                    let (fr, frr) = line_derivs(&radial, i, h);
                    let (fp, fm, f0) = (f[idx(i, k + 1)], f[idx(i, k + ntheta - 1)], f[idx(i, k)]);
                    let ft = (fp - fm) / (2.0 * ht);
                    let ftt = (fp - 2.0 * f0 + fm) / (ht * ht);
                    let (s, c) = th.sin_cos();
                    grad[idx(i, k)] = [fr * c - ft * s / r, fr * s + ft * c / r];
                    lap[idx(i, k)] = frr + fr / r + ftt / (r * r);
                }
            }
            (grad, lap)
        }
    }
}

/// First and second derivative at `i` on a uniform line; one-sided within two nodes of either end.
fn line_derivs(f: &[f64], i: usize, h: f64) -> (f64, f64) {
    let n = f.len();
    if i >= 2 && i + 2 < n {
        ((f[i + 1] - f[i - 1]) / (2.0 * h), (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h))
    } else if i < 2 {
        let d1 = (-3.0 * f[i] + 4.0 * f[i + 1] - f[i + 2]) / (2.0 * h);
        let d2 = (2.0 * f[i] - 5.0 * f[i + 1] + 4.0 * f[i + 2] - f[i + 3]) / (h * h);
        (d1, d2)
    } else {
        let d1 = (3.0 * f[i] - 4.0 * f[i - 1] + f[i - 2]) / (2.0 * h);
        let d2 = (2.0 * f[i] - 5.0 * f[i - 1] + 4.0 * f[i - 2] - f[i - 3]) / (h * h);
        (d1, d2)
    }
}

/// div grad f and ‖df‖² for a node field f under `metric` (off-diagonal block must vanish,
/// fiber block a multiple of the identity).
pub(crate) fn calculus(grid: &TubeGrid, metric: &MetricField, f: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let ns = grid.ns;
    let nn = grid.fiber.node_count();
    if metric.ns != ns || metric.nodes.len() != nn || f.len() != ns * nn {
        return Err(Error::Mismatch("field, metric and grid sizes differ".into()));
    }
    if metric.has_connection() {
        return Err(Error::Unsupported("potential with nonzero connection coefficients".into()));
    }
    let mut beta = vec![0.0; ns * nn];
    for (u, bl) in metric.blocks.iter().enumerate() {
        beta[u] = bl.scalar_b().ok_or_else(|| Error::Unsupported("potential with anisotropic fiber metric".into()))?;
    }
    let a: Vec<f64> = metric.blocks.iter().map(|b| b.a).collect();
    let log_j: Vec<f64> = a.iter().map(|x| 0.5 * x.ln()).collect();

    let column = |v: &[f64], node: usize| -> Vec<f64> { (0..ns).map(|j| v[j * nn + node]).collect() };
    let mut divgrad = vec![0.0; ns * nn];
    let mut sq = vec![0.0; ns * nn];
    for node in 0..nn {
        let fs = grid.line.derivative(&column(f, node));
        let q: Vec<f64> = (0..ns).map(|j| a[j * nn + node].sqrt() / a[j * nn + node] * fs[j]).collect();
        let dq = grid.line.derivative(&q);
        for j in 0..ns {
            let u = j * nn + node;
            divgrad[u] = dq[j] / a[u].sqrt();
            sq[u] = fs[j] * fs[j] / a[u];
        }
    }
    for j in 0..ns {
        let fj = &f[j * nn..(j + 1) * nn];
        let lj = &log_j[j * nn..(j + 1) * nn];
        let (gf, lf) = fiber_derivatives(&grid.fiber, fj);
        let (gl, _) = fiber_derivatives(&grid.fiber, lj);
        for node in 0..nn {
            let u = j * nn + node;
            let dot = gf[node][0] * gl[node][0] + gf[node][1] * gl[node][1];
            let g2 = gf[node][0] * gf[node][0] + gf[node][1] * gf[node][1];
            divgrad[u] += (lf[node] + dot) / beta[u];
            sq[u] += g2 / beta[u];
        }
    }
    Ok((divgrad, sq))
}

/// W on the grid for the given density, metric and sign convention.
pub fn effective_potential(
    grid: &TubeGrid,
    density: &DensityField,
    metric: &MetricField,
    convention: Convention,
) -> Result<PotentialField> {
    if (density.epsilon - metric.epsilon).abs() > 0.0 {
        return Err(Error::Mismatch("density and metric rescaled by different epsilon".into()));
    }
    if density.rho.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::NotPositive { at: "density".into(), detail: "nonpositive density".into() });
    }
    let (divgrad, sq) = calculus(grid, metric, &density.log_rho)?;
    let w: Vec<f64> = divgrad
        .iter()
        .zip(&sq)
        .map(|(dg, s)| 0.5 * convention.sign() * dg - 0.25 * s)
        .collect();
    if let Some(u) = w.iter().position(|x| !x.is_finite()) {
        return Err(Error::NotPositive {
            at: format!("node {u}"),
            detail: "nonsmooth density produced a non-finite potential".into(),
        });
    }
    let nn = grid.fiber.node_count();
    let c = center_node(&grid.fiber);
    let eps = metric.epsilon;
    // W_ε(x, w) = W(x, εw) in rescaled coordinates; W_L is its value on the zero section
    let w_l = (0..grid.ns).map(|j| w[j * nn + c]).collect();
    Ok(PotentialField { convention, metric: metric.kind, epsilon: eps, w, w_l })
}

/// ρ^{1/2} (−div grad)(ρ^{−1/2}) under `metric`, the potential produced by the density conjugation.
pub fn conjugation_potential(grid: &TubeGrid, density: &DensityField, metric: &MetricField) -> Result<Vec<f64>> {
    let f: Vec<f64> = density.rho.iter().map(|r| r.powf(-0.5)).collect();
    let (divgrad, _) = calculus(grid, metric, &f)?;
    Ok(divgrad.iter().zip(&density.rho).map(|(d, r)| -d * r.sqrt()).collect())
}
