//! Tensor-product grids on the unit tube: periodic base nodes times a fiber grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::PeriodicLine;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FiberKind {
    /// Nodes w_i = −1 + i h on [−1, 1], `nw` odd.
    Interval { nw: usize },
    /// Center node plus rings r_i = i/nr, i = 1..=nr, each with `ntheta` nodes.
    Disk { nr: usize, ntheta: usize },
}

/// A conductance between two fiber unknowns; `j = None` couples to a Dirichlet node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: Option<usize>,
    pub conductance: f64,
    pub mid: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct FiberGrid {
    pub kind: FiberKind,
    pub h: f64,
    /// All nodes, Dirichlet boundary included.
    pub nodes: Vec<[f64; 2]>,
    pub boundary: Vec<bool>,
    /// Reference quadrature weights of all nodes.
    pub weights: Vec<f64>,
    /// Node index of each unknown.
    pub interior: Vec<usize>,
    pub edges: Vec<Edge>,
}

impl FiberGrid {
    pub fn new(kind: FiberKind) -> Result<Self> {
        match kind {
            FiberKind::Interval { nw } => Self::interval(nw),
            FiberKind::Disk { nr, ntheta } => Self::disk(nr, ntheta),
        }
    }

    fn interval(nw: usize) -> Result<Self> {
        if nw < 5 || nw % 2 == 0 {
            return Err(Error::Grid(format!("interval fiber needs an odd node count >= 5, got {nw}")));
        }
        let h = 2.0 / (nw - 1) as f64;
        let m = (nw - 1) as f64;
        let nodes: Vec<[f64; 2]> = (0..nw).map(|i| [(2.0 * i as f64 - m) / m, 0.0]).collect();
        let boundary: Vec<bool> = (0..nw).map(|i| i == 0 || i == nw - 1).collect();
        let weights = (0..nw).map(|i| if boundary[i] { 0.5 * h } else { h }).collect();
        let interior: Vec<usize> = (1..nw - 1).collect();
        let n = interior.len();
        let mut edges = Vec::with_capacity(n + 1);
        for e in 0..=n {
            // edge between nodes e and e + 1
            let mid = [(2.0 * e as f64 + 1.0 - m) / m, 0.0];
            let (i, j) = match e {
                0 => (0, None),
                _ if e == n => (n - 1, None),
                _ => (e - 1, Some(e)),
            };
            edges.push(Edge { i, j, conductance: 1.0 / h, mid });
        }
        Ok(FiberGrid { kind: FiberKind::Interval { nw }, h, nodes, boundary, weights, interior, edges })
    }

    fn disk(nr: usize, ntheta: usize) -> Result<Self> {
        if nr < 8 {
            return Err(Error::Grid(format!("polar axis stencil needs nr >= 8, got {nr}")));
        }
        if ntheta < 8 || ntheta % 2 == 1 {
            return Err(Error::Grid(format!("ntheta must be even and >= 8, got {ntheta}")));
        }
        let h = 1.0 / nr as f64;
        let ht = 2.0 * PI / ntheta as f64;
        let mut nodes = vec![[0.0, 0.0]];
        let mut weights = vec![PI * 0.25 * h * h];
        let mut boundary = vec![false];
        for i in 1..=nr {
            let r = i as f64 * h;
            for k in 0..ntheta {
                let th = k as f64 * ht;
                nodes.push([r * th.cos(), r * th.sin()]);
                boundary.push(i == nr);
                weights.push(if i == nr {
                    PI * (1.0 - (1.0 - 0.5 * h).powi(2)) / ntheta as f64
                } else {
                    r * h * ht
                });
            }
        }
        let n = 1 + (nr - 1) * ntheta;
        let interior: Vec<usize> = (0..n).collect();
        let idx = |i: usize, k: usize| 1 + (i - 1) * ntheta + (k % ntheta);
        let polar = |r: f64, th: f64| [r * th.cos(), r * th.sin()];
        let mut edges = Vec::new();
        for k in 0..ntheta {
            let th = k as f64 * ht;
            edges.push(Edge { i: 0, j: Some(idx(1, k)), conductance: 0.5 * ht, mid: polar(0.5 * h, th) });
        }
        for i in 1..nr {
            let r = i as f64 * h;
            let rp = r + 0.5 * h;
            for k in 0..ntheta {
                let th = k as f64 * ht;
                let outer = if i + 1 < nr { Some(idx(i + 1, k)) } else { None };
                edges.push(Edge { i: idx(i, k), j: outer, conductance: rp * ht / h, mid: polar(rp, th) });
                edges.push(Edge {
                    i: idx(i, k),
                    j: Some(idx(i, k + 1)),
                    conductance: h / (r * ht),
                    mid: polar(r, th + 0.5 * ht),
                });
            }
        }
        Ok(FiberGrid { kind: FiberKind::Disk { nr, ntheta }, h, nodes, boundary, weights, interior, edges })
    }

    pub fn codim(&self) -> usize {
        match self.kind {
            FiberKind::Interval { .. } => 1,
            FiberKind::Disk { .. } => 2,
        }
    }

    /// Number of unknowns per fiber.
    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Coordinates of unknown `i`.
    pub fn point(&self, i: usize) -> [f64; 2] {
        self.nodes[self.interior[i]]
    }

    /// Reference weight of unknown `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[self.interior[i]]
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Exact measure of the unit fiber.
    pub fn exact_volume(&self) -> f64 {
        match self.kind {
            FiberKind::Interval { .. } => 2.0,
            FiberKind::Disk { .. } => PI,
        }
    }

    /// Grid refined by `factor` in the mesh width.
    pub fn refined(&self, factor: f64) -> Result<Self> {
        match self.kind {
            FiberKind::Interval { nw } => {
                let mut m = ((nw - 1) as f64 * factor).round() as usize;
                m += m % 2;
                Self::interval(m + 1)
            }
            FiberKind::Disk { nr, ntheta } => {
                let mut nt = (ntheta as f64 * factor).round() as usize;
                nt += nt % 2;
                Self::disk((nr as f64 * factor).round() as usize, nt)
            }
        }
    }
}

/// The unit tube grid: `ns` periodic arclength nodes times a fiber grid.
#[derive(Clone, Debug)]
pub struct TubeGrid {
    pub ns: usize,
    pub length: f64,
    pub fiber: FiberGrid,
    pub line: PeriodicLine,
}

impl TubeGrid {
    pub fn new(ns: usize, length: f64, fiber: FiberKind) -> Result<Self> {
        if ns < 16 {
            return Err(Error::Grid(format!("need ns >= 16, got {ns}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Grid(format!("invalid curve length {length}")));
        }
        Ok(TubeGrid { ns, length, fiber: FiberGrid::new(fiber)?, line: PeriodicLine::new(ns, length) })
    }

    pub fn hs(&self) -> f64 {
        self.length / self.ns as f64
    }

    /// Number of unknowns, `ns * fiber.len()`.
    pub fn dim(&self) -> usize {
        self.ns * self.fiber.len()
    }

    pub fn index(&self, j: usize, i: usize) -> usize {
        j * self.fiber.len() + i
    }

    /// Reference quadrature weights of all unknowns.
    pub fn weights(&self) -> Vec<f64> {
        let hs = self.hs();
        let nf = self.fiber.len();
        (0..self.dim()).map(|u| hs * self.fiber.weight(u % nf)).collect()
    }

    /// Total reference volume, boundary nodes included.
    pub fn volume(&self) -> f64 {
        self.length * self.fiber.volume()
    }

    pub fn with_fiber(&self, fiber: FiberGrid) -> Self {
        TubeGrid { ns: self.ns, length: self.length, fiber, line: self.line.clone() }
    }

    pub fn same_shape(&self, other: &TubeGrid) -> bool {
        self.ns == other.ns && self.fiber.kind == other.fiber.kind && (self.length - other.length).abs() <= 1e-12 * self.length
    }
}
