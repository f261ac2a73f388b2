//! Symmetric eigensolution of discrete operators: Fourier-modal, dense, or iterative.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{DiscreteOperator, Measure};

use super::iterative::shift_invert;

/// Below this many unknowns a non-invariant operator is diagonalized densely.
pub const DENSE_LIMIT: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Modal,
    Dense,
    Iterative,
}

/// Fourier mode of an eigenvector of a curve-invariant operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeLabel {
    pub m: usize,
    pub sine: bool,
    /// Position within the modal block spectrum.
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    /// Nodal eigenvectors, orthonormal in the operator's measure.
    pub vectors: Vec<Vec<f64>>,
    /// ‖Au − λu‖ in the operator's measure.
    pub residuals: Vec<f64>,
    pub modes: Option<Vec<ModeLabel>>,
    pub measure: Measure,
    pub weights: Arc<Vec<f64>>,
    pub method: Method,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(self.weights.iter()).map(|((a, b), w)| a * b * w).sum()
    }

    /// ⟨u_s, u⟩ for every stored eigenvector.
    pub fn coefficients(&self, u: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|v| self.inner(v, u)).collect()
    }

    pub fn combine(&self, coef: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.weights.len()];
        for (c, v) in coef.iter().zip(&self.vectors) {
            if *c != 0.0 {
                out.iter_mut().zip(v).for_each(|(o, x)| *o += c * x);
            }
        }
        out
    }

    /// max |⟨u_i,u_j⟩ − δ_ij|.
    pub fn gram_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            for j in 0..=i {
                let g = self.inner(&self.vectors[i], &self.vectors[j]);
                worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }
}

type Block = (DVector<f64>, DMatrix<f64>);

/// Per-mode spectra of a curve-invariant operator, diagonalized on first use.
#[derive(Debug)]
pub struct ModalSpectrum {
    pub op: DiscreteOperator,
    blocks: Vec<OnceLock<Block>>,
}

impl ModalSpectrum {
    pub fn new(op: &DiscreteOperator) -> Result<Self> {
        if !op.is_invariant() {
            return Err(Error::Unsupported("modal spectrum of an operator that varies along the curve".into()));
        }
        let count = op.grid.line.mode_count();
        Ok(ModalSpectrum { op: op.clone(), blocks: (0..count).map(|_| OnceLock::new()).collect() })
    }

    pub fn mode_count(&self) -> usize {
        self.blocks.len()
    }

    /// Ascending eigenvalues and column eigenvectors of block `m` (symmetric fiber coordinates).
    pub fn block(&self, m: usize) -> &Block {
        self.blocks[m].get_or_init(|| {
            let b = self.op.modal_block(m).expect("invariant operator");
            let b = (&b + b.transpose()) * 0.5;
            let eig = SymmetricEigen::new(b);
            let n = eig.eigenvalues.len();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|a, c| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*c]));
            let vals = DVector::from_iterator(n, order.iter().map(|&c| eig.eigenvalues[c]));
            let mut vecs = DMatrix::zeros(n, n);
            for (k, &c) in order.iter().enumerate() {
                vecs.set_column(k, &eig.eigenvectors.column(c));
            }
            (vals, vecs)
        })
    }

    /// Number of real Fourier basis functions carried by mode `m` (2 for cos/sin pairs).
    pub fn multiplicity(&self, m: usize) -> usize {
        if self.op.grid.line.has_sine(m) {
            2
        } else {
            1
        }
    }

    /// The lowest `count` eigenvalues with their labels, ascending.
    pub fn lowest(&self, count: usize) -> Vec<(f64, ModeLabel)> {
        let monotone = self.op.has_monotone_modes();
        let mut found: Vec<(f64, ModeLabel)> = Vec::new();
        for m in 0..self.mode_count() {
            let (vals, _) = self.block(m);
            if monotone && found.len() >= count && vals[0] >= found[count - 1].0 {
                break;
            }
            for (index, v) in vals.iter().enumerate() {
                if found.len() >= count && *v > found[count - 1].0 {
                    break;
                }
                found.push((*v, ModeLabel { m, sine: false, index }));
                if self.multiplicity(m) == 2 {
                    found.push((*v, ModeLabel { m, sine: true, index }));
                }
            }
            found.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1.m, a.1.sine, a.1.index).cmp(&(b.1.m, b.1.sine, b.1.index))));
            found.truncate(count);
        }
        found
    }

    /// Eigenvector in symmetric coordinates.
    pub fn vector_sym(&self, label: ModeLabel) -> Vec<f64> {
        let (_, vecs) = self.block(label.m);
        let b = self.op.grid.line.basis_vector(label.m, label.sine);
        let nf = self.op.nf();
        let mut out = Vec::with_capacity(b.len() * nf);
        for bj in &b {
            out.extend((0..nf).map(|i| bj * vecs[(i, label.index)]));
        }
        out
    }

    /// Real Fourier coefficients per fiber unknown: entry (m, sine) is a length-nf vector.
    pub fn analyze(&self, sym: &[f64]) -> Vec<[DVector<f64>; 2]> {
        let nf = self.op.nf();
        let ns = self.op.grid.ns;
        let mut out = vec![[DVector::zeros(nf), DVector::zeros(nf)]; self.mode_count()];
        for i in 0..nf {
            let col: Vec<f64> = (0..ns).map(|j| sym[j * nf + i]).collect();
            for (m, (c, s)) in self.op.grid.line.to_real_modes(&col).into_iter().enumerate() {
                out[m][0][i] = c;
                out[m][1][i] = s;
            }
        }
        out
    }

    pub fn synthesize(&self, modes: &[[DVector<f64>; 2]]) -> Vec<f64> {
        let nf = self.op.nf();
        let ns = self.op.grid.ns;
        let mut out = vec![0.0; ns * nf];
        for i in 0..nf {
            let coef: Vec<(f64, f64)> = modes.iter().map(|p| (p[0][i], p[1][i])).collect();
            for (j, v) in self.op.grid.line.from_real_modes(&coef).into_iter().enumerate() {
                out[j * nf + i] = v;
            }
        }
        out
    }

    /// Smallest eigenvalue among the eigencomponents of `sym` with weight above `rel` · ‖x‖.
    pub fn support_min(&self, sym: &[f64], rel: f64) -> f64 {
        let modes = self.analyze(sym);
        let scale = sym.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut low = f64::INFINITY;
        for (m, parts) in modes.iter().enumerate() {
            if parts.iter().all(|p| p.norm() <= rel * scale) {
                continue;
            }
            let (vals, vecs) = self.block(m);
            for p in parts {
                let c = vecs.tr_mul(p);
                for (k, ck) in c.iter().enumerate() {
                    if ck.abs() > rel * scale {
                        low = low.min(vals[k]);
                    }
                }
            }
        }
        low
    }

    /// f(A) applied to a symmetric-coordinate vector.
    ///
    /// Fourier modes carrying less than 1e-15 of ‖x‖ are dropped. With a `cutoff`, all modes from
    /// the first one whose bottom eigenvalue has |f| below it are skipped; for nonincreasing `f` and
    /// monotone modes the returned bound then limits the skipped part relative to ‖x‖. Also returns
    /// the number of modes kept.
    pub fn apply_fn(&self, sym: &[f64], f: impl Fn(f64) -> f64, cutoff: Option<f64>) -> (Vec<f64>, usize, f64) {
        let mut modes = self.analyze(sym);
        let scale = sym.iter().map(|x| x * x).sum::<f64>().sqrt();
        let monotone = self.op.has_monotone_modes();
        let mut used = self.mode_count();
        let mut skipped = 0.0;
        for m in 0..self.mode_count() {
            if let Some(c) = cutoff {
                if monotone && m > 0 {
                    let low = self.block(m).0[0];
                    if f(low).abs() < c {
                        used = m;
                        skipped = f(low).abs();
                        for p in modes.iter_mut().skip(m) {
                            p[0].fill(0.0);
                            p[1].fill(0.0);
                        }
                        break;
                    }
                }
            }
            if modes[m].iter().all(|p| p.norm() <= 1e-15 * scale) {
                modes[m][0].fill(0.0);
                modes[m][1].fill(0.0);
                continue;
            }
            let (vals, vecs) = self.block(m);
            for part in modes[m].iter_mut() {
                let mut c = vecs.tr_mul(part);
                for (k, ck) in c.iter_mut().enumerate() {
                    *ck *= f(vals[k]);
                }
                *part = vecs * c;
            }
        }
        (self.synthesize(&modes), used, skipped)
    }
}

fn finish(op: &DiscreteOperator, values: Vec<f64>, sym: Vec<Vec<f64>>, modes: Option<Vec<ModeLabel>>, method: Method) -> EigenSystem {
    let residuals = sym
        .iter()
        .zip(&values)
        .map(|(v, l)| op.apply_sym(v).iter().zip(v).map(|(a, b)| (a - l * b).powi(2)).sum::<f64>().sqrt())
        .collect();
    let vectors = sym.iter().map(|v| op.from_sym(v)).collect();
    EigenSystem { values, vectors, residuals, modes, measure: op.measure, weights: op.weights.clone(), method }
}

/// Jointly re-orthonormalizes eigenvectors whose eigenvalues differ by less than `gap`.
pub(crate) fn orthonormalize_clusters(values: &[f64], vecs: &mut [Vec<f64>], gap: f64) {
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && (values[end] - values[end - 1]).abs() < gap * values[end].abs().max(1.0) {
            end += 1;
        }
        for i in start..end {
            for k in start..i {
                let d: f64 = vecs[i].iter().zip(&vecs[k]).map(|(a, b)| a * b).sum();
                let (head, tail) = vecs.split_at_mut(i);
                tail[0].iter_mut().zip(&head[k]).for_each(|(a, b)| *a -= d * b);
            }
            let n = vecs[i].iter().map(|x| x * x).sum::<f64>().sqrt();
            vecs[i].iter_mut().for_each(|x| *x /= n);
        }
        start = end;
    }
}

/// Dense symmetric eigendecomposition of the whole operator, ascending.
pub fn dense_eigen(op: &DiscreteOperator) -> (Vec<f64>, DMatrix<f64>) {
    let m = op.to_dense();
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    let vals = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &c) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(c));
    }
    (vals, vecs)
}

/// Lowest `count` eigenpairs of a symmetric operator.
///
/// Curve-invariant operators split into Fourier modes; otherwise a dense solve is used below
/// [`DENSE_LIMIT`] unknowns and shift-invert subspace iteration above.
pub fn eigensolve(op: &DiscreteOperator, count: usize, tol: f64, seed: u64) -> Result<EigenSystem> {
    let dim = op.dim();
    if count == 0 || count > dim {
        return Err(Error::Argument(format!("requested {count} eigenpairs of a {dim}-dimensional operator")));
    }
    if op.is_invariant() {
        let modal = ModalSpectrum::new(op)?;
        let low = modal.lowest(count);
        let values = low.iter().map(|p| p.0).collect();
        let labels: Vec<ModeLabel> = low.iter().map(|p| p.1).collect();
        let sym = labels.iter().map(|l| modal.vector_sym(*l)).collect();
        return Ok(finish(op, values, sym, Some(labels), Method::Modal));
    }
    let (values, mut sym, method) = if dim < DENSE_LIMIT {
        let (vals, vecs) = dense_eigen(op);
        let sym: Vec<Vec<f64>> = (0..count).map(|k| vecs.column(k).iter().copied().collect()).collect();
        (vals[..count].to_vec(), sym, Method::Dense)
    } else {
        let (vals, vecs) = shift_invert(op, count, tol, seed)?;
        (vals, vecs, Method::Iterative)
    };
    orthonormalize_clusters(&values, &mut sym, 1e-8);
    Ok(finish(op, values, sym, None, method))
}
