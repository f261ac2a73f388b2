//! Operators on the weighted unit-tube grid, stored as term lists in symmetric coordinates.
//!
//! A nodal state u with quadrature weights W is represented by ũ = √W · u. Every term acts on ũ;
//! operators that are symmetric in the weighted inner product become symmetric matrices.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TubeGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// m₀, the volume of the reference metric.
    Reference,
    /// m = ρ m₀, the volume of the induced metric.
    Induced,
}

/// Sparse square matrix on one fiber, row lists of (column, value).
#[derive(Clone, Debug, PartialEq)]
pub struct FiberMatrix {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl FiberMatrix {
    pub fn zeros(n: usize) -> Self {
        FiberMatrix { n, rows: vec![Vec::new(); n] }
    }

    pub fn add_entry(&mut self, i: usize, j: usize, v: f64) {
        let row = &mut self.rows[i];
        match row.iter_mut().find(|(c, _)| *c == j) {
            Some(e) => e.1 += v,
            None => row.push((j, v)),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|(c, _)| *c == j).map_or(0.0, |e| e.1)
    }

    pub fn scaled(&self, f: f64) -> Self {
        FiberMatrix {
            n: self.n,
            rows: self.rows.iter().map(|r| r.iter().map(|&(c, v)| (c, v * f)).collect()).collect(),
        }
    }

    pub fn plus(&self, other: &FiberMatrix) -> Self {
        let mut out = self.clone();
        for (i, row) in other.rows.iter().enumerate() {
            for &(j, v) in row {
                out.add_entry(i, j, v);
            }
        }
        out.prune();
        out
    }

    pub fn mul(&self, other: &FiberMatrix) -> Self {
        let mut out = FiberMatrix::zeros(self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                for &(j, b) in &other.rows[k] {
                    out.add_entry(i, j, a * b);
                }
            }
        }
        out.prune();
        out
    }

    fn prune(&mut self) {
        for row in &mut self.rows {
            row.retain(|e| e.1 != 0.0);
            row.sort_by_key(|e| e.0);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|e| e.1 == 0.0))
    }

    /// y += f · A x
    pub fn matvec_add(&self, x: &[f64], y: &mut [f64], f: f64) {
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, v) in row {
                acc += v * x[j];
            }
            y[i] += f * acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] += v;
            }
        }
        m
    }

    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// A coefficient on the unknowns, either constant along the curve (`nf` values) or general (`ns * nf`).
#[derive(Clone, Debug, PartialEq)]
pub struct Coeff(pub Vec<f64>);

impl Coeff {
    pub fn is_uniform(&self, nf: usize) -> bool {
        self.0.len() == nf
    }

    pub fn at(&self, j: usize, i: usize, nf: usize) -> f64 {
        if self.0.len() == nf {
            self.0[i]
        } else {
            self.0[j * nf + i]
        }
    }

    fn scaled(&self, f: f64) -> Self {
        Coeff(self.0.iter().map(|x| x * f).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    /// G (D_sᵀ diag(α) D_s + k_Nyq² P diag(α) P) G with G = diag(μ^{-1/2}), D_s the spectral derivative.
    SStiff { alpha: Coeff, mu: Coeff },
    /// Fiber matrices per base node; a single block is shared by all nodes.
    Fiber(Vec<FiberMatrix>),
    Diag(Coeff),
    Identity(f64),
    /// coef · (u0 u0ᵀ) on every fiber, `u0` unit in symmetric coordinates.
    Projector { u0: Vec<f64>, coef: f64 },
}

impl Term {
    fn scaled(&self, f: f64) -> Term {
        match self {
            Term::SStiff { alpha, mu } => Term::SStiff { alpha: alpha.scaled(f), mu: mu.clone() },
            Term::Fiber(b) => Term::Fiber(b.iter().map(|m| m.scaled(f)).collect()),
            Term::Diag(d) => Term::Diag(d.scaled(f)),
            Term::Identity(c) => Term::Identity(c * f),
            Term::Projector { u0, coef } => Term::Projector { u0: u0.clone(), coef: coef * f },
        }
    }

    fn is_uniform(&self, nf: usize) -> bool {
        match self {
            Term::SStiff { alpha, mu } => alpha.is_uniform(nf) && mu.is_uniform(nf),
            Term::Fiber(b) => b.len() == 1,
            Term::Diag(d) => d.is_uniform(nf),
            Term::Identity(_) | Term::Projector { .. } => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorMeta {
    pub symbol: String,
    pub epsilon: Option<f64>,
    pub order: u8,
}

/// A state on the interior unknowns, nodal values tagged with the measure it is normalized in.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteState {
    pub values: Vec<f64>,
    pub measure: Measure,
}

impl DiscreteState {
    pub fn new(values: Vec<f64>, measure: Measure) -> Self {
        DiscreteState { values, measure }
    }

    pub fn norm(&self, weights: &[f64]) -> f64 {
        self.values.iter().zip(weights).map(|(u, w)| w * u * u).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub grid: Arc<TubeGrid>,
    pub measure: Measure,
    /// Quadrature weights of the measure on each unknown.
    pub weights: Arc<Vec<f64>>,
    pub terms: Vec<Term>,
    pub meta: OperatorMeta,
}

impl DiscreteOperator {
    pub fn new(grid: Arc<TubeGrid>, measure: Measure, weights: Arc<Vec<f64>>, terms: Vec<Term>, meta: OperatorMeta) -> Self {
        DiscreteOperator { grid, measure, weights, terms, meta }
    }

    /// The zero operator on the reference measure.
    pub fn zero(grid: Arc<TubeGrid>, symbol: &str) -> Self {
        let weights = Arc::new(grid.weights());
        DiscreteOperator {
            grid,
            measure: Measure::Reference,
            weights,
            terms: vec![],
            meta: OperatorMeta { symbol: symbol.into(), epsilon: None, order: 0 },
        }
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn nf(&self) -> usize {
        self.grid.fiber.len()
    }

    pub fn with_symbol(mut self, symbol: &str, epsilon: Option<f64>) -> Self {
        self.meta.symbol = symbol.into();
        self.meta.epsilon = epsilon;
        self
    }

    pub fn scaled(&self, f: f64) -> Self {
        DiscreteOperator { terms: self.terms.iter().map(|t| t.scaled(f)).collect(), ..self.clone() }
    }

    fn check_compatible(&self, other: &DiscreteOperator) -> Result<()> {
        if !self.grid.same_shape(&other.grid) {
            return Err(Error::Mismatch("operators live on different grids".into()));
        }
        if self.measure != other.measure || self.weights.len() != other.weights.len() {
            return Err(Error::Mismatch(format!(
                "operators use different measures ({:?} vs {:?})",
                self.measure, other.measure
            )));
        }
        let same = self
            .weights
            .iter()
            .zip(other.weights.iter())
            .all(|(a, b)| (a - b).abs() <= 1e-14 * a.abs().max(b.abs()));
        if !same {
            return Err(Error::Mismatch("operators use different quadrature weights".into()));
        }
        Ok(())
    }

    pub fn plus(&self, other: &DiscreteOperator) -> Result<Self> {
        self.check_compatible(other)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        let mut out = DiscreteOperator {
            terms,
            meta: OperatorMeta {
                symbol: format!("{} + {}", self.meta.symbol, other.meta.symbol),
                epsilon: self.meta.epsilon.or(other.meta.epsilon),
                order: self.meta.order.max(other.meta.order),
            },
            ..self.clone()
        };
        out.simplify();
        Ok(out)
    }

    pub fn minus(&self, other: &DiscreteOperator) -> Result<Self> {
        let mut out = self.plus(&other.scaled(-1.0))?;
        out.meta.symbol = format!("{} - ({})", self.meta.symbol, other.meta.symbol);
        Ok(out)
    }

    pub fn add_term(mut self, t: Term) -> Self {
        self.terms.push(t);
        self.simplify();
        self
    }

    /// Merges like terms so that exact cancellations drop out.
    pub fn simplify(&mut self) {
        let nf = self.nf();
        let mut fiber: Option<FiberMatrix> = None;
        let mut ident = 0.0;
        let mut diag: Option<Vec<f64>> = None;
        let mut stiff: Vec<(Coeff, Coeff)> = Vec::new();
        let mut rest = Vec::new();
        for t in self.terms.drain(..) {
            match t {
                Term::Fiber(b) if b.len() == 1 => {
                    let m = b.into_iter().next().unwrap();
                    fiber = Some(match fiber {
                        Some(f) => f.plus(&m),
                        None => m,
                    });
                }
                Term::Identity(c) => ident += c,
                Term::Diag(d) if d.is_uniform(nf) => {
                    diag = Some(match diag {
                        Some(v) => v.iter().zip(&d.0).map(|(a, b)| a + b).collect(),
                        None => d.0,
                    })
                }
                Term::SStiff { alpha, mu } => match stiff.iter_mut().find(|(a, m)| *m == mu && a.0.len() == alpha.0.len()) {
                    Some((a, _)) => {
                        for (x, y) in a.0.iter_mut().zip(&alpha.0) {
                            *x += y;
                        }
                    }
                    None => stiff.push((alpha, mu)),
                },
                other => rest.push(other),
            }
        }
        for (alpha, mu) in stiff {
            if alpha.0.iter().any(|x| *x != 0.0) {
                self.terms.push(Term::SStiff { alpha, mu });
            }
        }
        if let Some(f) = fiber {
            if !f.is_zero() {
                self.terms.push(Term::Fiber(vec![f]));
            }
        }
        if let Some(d) = diag {
            if d.iter().any(|x| *x != 0.0) {
                self.terms.push(Term::Diag(Coeff(d)));
            }
        }
        if ident != 0.0 {
            self.terms.push(Term::Identity(ident));
        }
        for t in rest {
            let zero = match &t {
                Term::Projector { coef, .. } => *coef == 0.0,
                Term::Fiber(b) => b.iter().all(|m| m.is_zero()),
                Term::Diag(d) => d.0.iter().all(|x| *x == 0.0),
                _ => false,
            };
            if !zero {
                self.terms.push(t);
            }
        }
    }

    /// Whether every term is constant along the curve, so the operator splits into Fourier modes.
    pub fn is_invariant(&self) -> bool {
        let nf = self.nf();
        self.terms.iter().all(|t| t.is_uniform(nf))
    }

    /// Whether every SStiff coefficient is nonnegative (modal blocks then grow with the wavenumber).
    pub fn has_monotone_modes(&self) -> bool {
        self.terms.iter().all(|t| match t {
            Term::SStiff { alpha, .. } => alpha.0.iter().all(|x| *x >= 0.0),
            _ => true,
        })
    }

    /// y = M x in symmetric coordinates.
    pub fn apply_sym(&self, x: &[f64]) -> Vec<f64> {
        let ns = self.grid.ns;
        let nf = self.nf();
        let line = &self.grid.line;
        let mut y = vec![0.0; x.len()];
        for t in &self.terms {
            match t {
                Term::SStiff { alpha, mu } => {
                    let kn = line.wavenumber(ns / 2);
                    for i in 0..nf {
                        let g: Vec<f64> = (0..ns).map(|j| mu.at(j, i, nf).powf(-0.5)).collect();
                        let v: Vec<f64> = (0..ns).map(|j| x[j * nf + i] * g[j]).collect();
                        let mut d = line.derivative(&v);
                        let mut amean = 0.0;
                        for (j, dj) in d.iter_mut().enumerate() {
                            let a = alpha.at(j, i, nf);
                            *dj *= a;
                            amean += a;
                        }
                        amean /= ns as f64;
                        let dd = line.derivative(&d);
                        let nyq = if line.has_nyquist() { kn * kn * amean * line.nyquist_coefficient(&v) } else { 0.0 };
                        for j in 0..ns {
                            let alt = if j % 2 == 0 { 1.0 } else { -1.0 };
                            y[j * nf + i] += g[j] * (-dd[j] + nyq * alt);
                        }
                    }
                }
                Term::Fiber(blocks) => {
                    for j in 0..ns {
                        let b = if blocks.len() == 1 { &blocks[0] } else { &blocks[j] };
                        b.matvec_add(&x[j * nf..(j + 1) * nf], &mut y[j * nf..(j + 1) * nf], 1.0);
                    }
                }
                Term::Diag(d) => {
                    for j in 0..ns {
                        for i in 0..nf {
                            y[j * nf + i] += d.at(j, i, nf) * x[j * nf + i];
                        }
                    }
                }
                Term::Identity(c) => {
                    for (yi, xi) in y.iter_mut().zip(x) {
                        *yi += c * xi;
                    }
                }
                Term::Projector { u0, coef } => {
                    for j in 0..ns {
                        let xs = &x[j * nf..(j + 1) * nf];
                        let p: f64 = xs.iter().zip(u0).map(|(a, b)| a * b).sum();
                        for (yi, ui) in y[j * nf..(j + 1) * nf].iter_mut().zip(u0) {
                            *yi += coef * p * ui;
                        }
                    }
                }
            }
        }
        y
    }

    pub fn to_sym(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(self.weights.iter()).map(|(x, w)| x * w.sqrt()).collect()
    }

    pub fn from_sym(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(self.weights.iter()).map(|(x, w)| x / w.sqrt()).collect()
    }

    /// Applies the operator to a nodal state normalized in this operator's measure.
    pub fn apply(&self, u: &DiscreteState) -> Result<DiscreteState> {
        if u.measure != self.measure || u.values.len() != self.dim() {
            return Err(Error::Mismatch(format!(
                "state ({:?}, {} values) does not match operator ({:?}, {} unknowns)",
                u.measure,
                u.values.len(),
                self.measure,
                self.dim()
            )));
        }
        Ok(DiscreteState { values: self.from_sym(&self.apply_sym(&self.to_sym(&u.values))), measure: self.measure })
    }

    /// Weighted inner product in this operator's measure.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(self.weights.iter()).map(|((a, b), w)| a * b * w).sum()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Dense nf × nf block of Fourier mode index `m`; requires an invariant operator.
    pub fn modal_block(&self, m: usize) -> Result<DMatrix<f64>> {
        if !self.is_invariant() {
            return Err(Error::Unsupported("modal blocks need an operator constant along the curve".into()));
        }
        let nf = self.nf();
        let k = self.grid.line.wavenumber(m);
        let mut b = DMatrix::zeros(nf, nf);
        for t in &self.terms {
            match t {
                Term::SStiff { alpha, mu } => {
                    for i in 0..nf {
                        b[(i, i)] += k * k * alpha.0[i] / mu.0[i];
                    }
                }
                Term::Fiber(blocks) => b += blocks[0].to_dense(),
                Term::Diag(d) => {
                    for i in 0..nf {
                        b[(i, i)] += d.0[i];
                    }
                }
                Term::Identity(c) => {
                    for i in 0..nf {
                        b[(i, i)] += c;
                    }
                }
                Term::Projector { u0, coef } => {
                    for i in 0..nf {
                        for l in 0..nf {
                            b[(i, l)] += coef * u0[i] * u0[l];
                        }
                    }
                }
            }
        }
        Ok(b)
    }

    /// Full symmetric-coordinate matrix, assembled column by column.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            let col = self.apply_sym(&e);
            e[c] = 0.0;
            for (r, v) in col.into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Relative symmetry residual |⟨Au,v⟩ − ⟨u,Av⟩| / (‖u‖‖v‖‖A‖-scale) for one pair of nodal states.
    pub fn symmetry_residual(&self, u: &[f64], v: &[f64]) -> f64 {
        let (su, sv) = (self.to_sym(u), self.to_sym(v));
        let (au, av) = (self.apply_sym(&su), self.apply_sym(&sv));
        let lhs: f64 = au.iter().zip(&sv).map(|(a, b)| a * b).sum();
        let rhs: f64 = su.iter().zip(&av).map(|(a, b)| a * b).sum();
        let nu = su.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nv = sv.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = (au.iter().map(|x| x * x).sum::<f64>().sqrt() * nv).max(av.iter().map(|x| x * x).sum::<f64>().sqrt() * nu);
        (lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE)
    }
}
