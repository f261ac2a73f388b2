//! Block metric data in Fermi coordinates, its rescalings, the dual perturbation and the density.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::frame::{AmbientCurvature, FermiFrame};
use super::grid::TubeGrid;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum MetricMode {
    /// Closed form of the tube map in flat ambient space.
    Exact,
    /// Taylor expansion in the fiber coordinate through `order` (1 or 2).
    Series { order: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Induced,
    Reference,
}

/// g_ss = a + c b⁻¹ cᵀ, g_sσ = c_σ, g_στ = b_στ. Only the leading `codim` entries are used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Blocks {
    pub a: f64,
    pub b: [[f64; 2]; 2],
    pub c: [f64; 2],
    pub codim: usize,
}

impl Blocks {
    pub fn det_b(&self) -> f64 {
        if self.codim == 1 {
            self.b[0][0]
        } else {
            self.b[0][0] * self.b[1][1] - self.b[0][1] * self.b[1][0]
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.det_b()
    }

    pub fn full(&self) -> DMatrix<f64> {
        let d = self.codim;
        let mut g = DMatrix::zeros(d + 1, d + 1);
        let binv = self.b_inverse();
        let mut cbc = 0.0;
        for s in 0..d {
            for t in 0..d {
                cbc += self.c[s] * binv[s][t] * self.c[t];
            }
        }
        g[(0, 0)] = self.a + cbc;
        for s in 0..d {
            g[(0, s + 1)] = self.c[s];
            g[(s + 1, 0)] = self.c[s];
            for t in 0..d {
                g[(s + 1, t + 1)] = self.b[s][t];
            }
        }
        g
    }

    pub fn b_inverse(&self) -> [[f64; 2]; 2] {
        if self.codim == 1 {
            [[1.0 / self.b[0][0], 0.0], [0.0, 0.0]]
        } else {
            let det = self.det_b();
            [[self.b[1][1] / det, -self.b[0][1] / det], [-self.b[1][0] / det, self.b[0][0] / det]]
        }
    }

    /// Dual metric g*.
    pub fn dual(&self) -> DMatrix<f64> {
        self.full().try_inverse().unwrap_or_else(|| DMatrix::from_element(self.codim + 1, self.codim + 1, f64::NAN))
    }

    pub fn is_positive(&self) -> bool {
        let ok_b = if self.codim == 1 { self.b[0][0] > 0.0 } else { self.b[0][0] > 0.0 && self.det_b() > 0.0 };
        self.a > 0.0 && ok_b && self.a.is_finite()
    }

    /// Fiber block as a multiple of the identity, if it is one.
    pub fn scalar_b(&self) -> Option<f64> {
        let beta = self.b[0][0];
        let tol = 1e-14 * beta.abs();
        if self.codim == 2 && ((self.b[1][1] - beta).abs() > tol || self.b[0][1].abs() > tol || self.b[1][0].abs() > tol) {
            return None;
        }
        Some(beta)
    }
}

#[derive(Debug)]
struct FrameData {
    codim: usize,
    kappa: Vec<Vec<f64>>,
    connection: Vec<Vec<f64>>,
    curvature: AmbientCurvature,
    uniform: bool,
}

/// Metric blocks tabulated on every fiber node (boundary included) of a unit tube grid.
#[derive(Clone, Debug)]
pub struct MetricField {
    pub kind: MetricKind,
    pub mode: MetricMode,
    pub epsilon: f64,
    pub ns: usize,
    pub nodes: Vec<[f64; 2]>,
    /// `blocks[j * nodes.len() + node]`
    pub blocks: Vec<Blocks>,
    frame: Arc<FrameData>,
}

impl MetricField {
    pub fn codim(&self) -> usize {
        self.frame.codim
    }

    pub fn at(&self, j: usize, node: usize) -> &Blocks {
        &self.blocks[j * self.nodes.len() + node]
    }

    /// Whether the underlying geometry is invariant along the curve.
    pub fn is_uniform(&self) -> bool {
        self.frame.uniform
    }

    pub fn curvature(&self) -> AmbientCurvature {
        self.frame.curvature
    }

    pub fn has_connection(&self) -> bool {
        self.frame.connection.iter().flatten().any(|c| *c != 0.0)
    }

    /// Unscaled blocks at base node `j` and fiber point `w` (unit tube coordinates).
    fn unscaled(&self, j: usize, w: [f64; 2]) -> Blocks {
        let d = self.frame.codim;
        let kap = &self.frame.kappa[j];
        let con = &self.frame.connection[j];
        let kw: f64 = (0..d).map(|a| kap[a] * w[a]).sum();
        let mut c = [0.0; 2];
        for (s, cs) in c.iter_mut().enumerate().take(d) {
            *cs = (0..d).map(|a| w[a] * con[s * d + a]).sum();
        }
        let mut b = [[0.0; 2]; 2];
        for (s, row) in b.iter_mut().enumerate().take(d) {
            row[s] = 1.0;
        }
        let a = match self.mode {
            MetricMode::Exact => (1.0 - kw).powi(2),
            MetricMode::Series { order } => {
                let mut a = 1.0 - 2.0 * kw;
                if order >= 2 {
                    let r = &self.frame.curvature;
                    let mut rww = 0.0;
                    for al in 0..d {
                        for be in 0..d {
                            rww += r.riemann(0, al + 1, 0, be + 1) * w[al] * w[be];
                        }
                    }
                    a += kw * kw - rww;
                    for (s, row) in b.iter_mut().enumerate().take(d) {
                        for (t, bst) in row.iter_mut().enumerate().take(d) {
                            let mut q = 0.0;
                            for al in 0..d {
                                for be in 0..d {
                                    q += r.riemann(s + 1, al + 1, t + 1, be + 1) * w[al] * w[be];
                                }
                            }
                            *bst -= q / 3.0;
                        }
                    }
                }
                a
            }
        };
        Blocks { a, b, c, codim: d }
    }

    /// Blocks of this field at an arbitrary fiber point.
    pub fn eval(&self, j: usize, w: [f64; 2]) -> Blocks {
        let e = self.epsilon;
        match self.kind {
            MetricKind::Induced => {
                let mut bl = self.unscaled(j, [e * w[0], e * w[1]]);
                for s in 0..2 {
                    bl.c[s] *= e;
                    for t in 0..2 {
                        bl.b[s][t] *= e * e;
                    }
                }
                bl
            }
            MetricKind::Reference => {
                let mut bl = self.unscaled(j, w);
                bl.a = 1.0;
                bl.b = [[0.0; 2]; 2];
                for s in 0..self.frame.codim {
                    bl.b[s][s] = e * e;
                    bl.c[s] *= e * e;
                }
                bl
            }
        }
    }

    fn tabulate(&mut self) {
        let nn = self.nodes.len();
        self.blocks = (0..self.ns * nn).map(|u| self.eval(u / nn, self.nodes[u % nn])).collect();
    }

    /// Rescaled field on the same grid; `which` selects the induced or reference family.
    pub fn rescale(&self, epsilon: f64, which: MetricKind) -> Result<MetricField> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::Argument(format!("epsilon must be in (0,1], got {epsilon}")));
        }
        if which == MetricKind::Induced {
            let kmax = self
                .frame
                .kappa
                .iter()
                .map(|k| k.iter().map(|x| x * x).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            if epsilon * kmax >= 1.0 {
                return Err(Error::NotPositive {
                    at: "tube width".into(),
                    detail: format!("epsilon * max|kappa| = {:.6} >= 1", epsilon * kmax),
                });
            }
        }
        let mut out = MetricField { kind: which, epsilon, blocks: vec![], ..self.clone() };
        out.tabulate();
        out.check_positive()?;
        Ok(out)
    }

    fn check_positive(&self) -> Result<()> {
        let nn = self.nodes.len();
        for (u, bl) in self.blocks.iter().enumerate() {
            let node = u % nn;
            let w = self.nodes[node];
            if !bl.is_positive() {
                return Err(Error::NotPositive {
                    at: format!("base node {}, fiber point ({:.4}, {:.4})", u / nn, w[0], w[1]),
                    detail: format!("a = {:.3e}, det b = {:.3e}", bl.a, bl.det_b()),
                });
            }
        }
        Ok(())
    }

    /// √det g relative to the reference volume √det g₀ at the same ε.
    pub fn relative_volume(&self, bl: &Blocks) -> f64 {
        let d = self.frame.codim as i32;
        (bl.det()).sqrt() / self.epsilon.powi(d)
    }
}

/// Tabulates the unscaled induced metric of `frame` on `grid`.
pub fn metric_blocks(frame: &FermiFrame, grid: &TubeGrid, mode: MetricMode) -> Result<MetricField> {
    if frame.codim != grid.fiber.codim() || frame.ns() != grid.ns {
        return Err(Error::Mismatch(format!(
            "frame (codim {}, ns {}) does not match grid (codim {}, ns {})",
            frame.codim,
            frame.ns(),
            grid.fiber.codim(),
            grid.ns
        )));
    }
    match mode {
        MetricMode::Exact if !frame.curvature.is_flat() => {
            return Err(Error::Unsupported("exact metric blocks require a flat ambient space".into()))
        }
        MetricMode::Series { order } if !(1..=2).contains(&order) => {
            return Err(Error::Unsupported(format!("series order {order} not implemented (1 or 2)")))
        }
        _ => {}
    }
    let data = FrameData {
        codim: frame.codim,
        kappa: frame.kappa.clone(),
        connection: frame.connection.clone(),
        curvature: frame.curvature,
        uniform: frame.is_uniform(1e-12),
    };
    let mut f = MetricField {
        kind: MetricKind::Induced,
        mode,
        epsilon: 1.0,
        ns: grid.ns,
        nodes: grid.fiber.nodes.clone(),
        blocks: vec![],
        frame: Arc::new(data),
    };
    f.tabulate();
    Ok(f)
}

/// H*(ε) = g*(ε) − g₀*(ε) on the grid together with its sup norms.
#[derive(Clone, Debug)]
pub struct DualPerturbation {
    pub epsilon: f64,
    /// Row-major (codim+1)² entries per node.
    pub values: Vec<Vec<f64>>,
    pub sup_norm: f64,
    /// sup ‖H*(ε) − H*(0)‖
    pub sup_deviation: f64,
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

fn check_pair(induced: &MetricField, reference: &MetricField) -> Result<()> {
    if induced.blocks.len() != reference.blocks.len()
        || induced.nodes.len() != reference.nodes.len()
        || induced.codim() != reference.codim()
    {
        return Err(Error::Mismatch("metric fields live on different grids".into()));
    }
    if (induced.epsilon - reference.epsilon).abs() > 0.0 {
        return Err(Error::Mismatch(format!(
            "epsilon differs: {} vs {}",
            induced.epsilon, reference.epsilon
        )));
    }
    Ok(())
}

/// Leading term H*(0): one third of the ambient curvature contracted twice with w, fiber block only.
pub fn dual_perturbation_limit(curvature: &AmbientCurvature, codim: usize, w: [f64; 2]) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(codim + 1, codim + 1);
    for s in 0..codim {
        for t in 0..codim {
            let mut q = 0.0;
            for al in 0..codim {
                for be in 0..codim {
                    q += curvature.riemann(s + 1, al + 1, t + 1, be + 1) * w[al] * w[be];
                }
            }
            h[(s + 1, t + 1)] = q / 3.0;
        }
    }
    h
}

pub fn dual_perturbation(induced: &MetricField, reference: &MetricField) -> Result<DualPerturbation> {
    check_pair(induced, reference)?;
    let nn = induced.nodes.len();
    let d = induced.codim();
    let mut values = Vec::with_capacity(induced.blocks.len());
    let (mut sup, mut dev) = (0.0f64, 0.0f64);
    for (u, (gi, g0)) in induced.blocks.iter().zip(&reference.blocks).enumerate() {
        let h = gi.dual() - g0.dual();
        let h0 = dual_perturbation_limit(&induced.curvature(), d, induced.nodes[u % nn]);
        sup = sup.max(spectral_norm(&h));
        dev = dev.max(spectral_norm(&(&h - h0)));
        values.push(h.transpose().iter().copied().collect());
    }
    Ok(DualPerturbation { epsilon: induced.epsilon, values, sup_norm: sup, sup_deviation: dev })
}

/// ρ_ε = √(det g(ε) / det g₀(ε)) on every grid node.
#[derive(Clone, Debug)]
pub struct DensityField {
    pub epsilon: f64,
    pub ns: usize,
    pub nodes: Vec<[f64; 2]>,
    pub rho: Vec<f64>,
    pub log_rho: Vec<f64>,
}

impl DensityField {
    pub fn at(&self, j: usize, node: usize) -> f64 {
        self.rho[j * self.nodes.len() + node]
    }

    /// ρ ≡ 1 on the given grid.
    pub fn unit(grid: &TubeGrid, epsilon: f64) -> Self {
        let n = grid.ns * grid.fiber.node_count();
        DensityField {
            epsilon,
            ns: grid.ns,
            nodes: grid.fiber.nodes.clone(),
            rho: vec![1.0; n],
            log_rho: vec![0.0; n],
        }
    }
}

pub fn density(induced: &MetricField, reference: &MetricField) -> Result<DensityField> {
    check_pair(induced, reference)?;
    let nn = induced.nodes.len();
    let mut rho = Vec::with_capacity(induced.blocks.len());
    for (u, (gi, g0)) in induced.blocks.iter().zip(&reference.blocks).enumerate() {
        let ratio = gi.det() / g0.det();
        if !(ratio > 0.0) || !ratio.is_finite() {
            let w = induced.nodes[u % nn];
            return Err(Error::NotPositive {
                at: format!("base node {}, fiber point ({:.4}, {:.4})", u / nn, w[0], w[1]),
                detail: format!("determinant ratio {ratio:.3e}"),
            });
        }
        rho.push(ratio.sqrt());
    }
    let log_rho = rho.iter().map(|r| r.ln()).collect();
    Ok(DensityField { epsilon: induced.epsilon, ns: induced.ns, nodes: induced.nodes.clone(), rho, log_rho })
}
