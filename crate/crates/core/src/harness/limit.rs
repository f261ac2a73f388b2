//! The limit operator Δ_L + W_L on the core curve and its semigroup.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fourier::PeriodicLine;

/// Δ_L + W_L on the periodic base grid, diagonalized once.
#[derive(Clone, Debug)]
pub struct LimitOperator {
    pub w_l: Vec<f64>,
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors (columns) in the Euclidean inner product of nodal values.
    pub vectors: DMatrix<f64>,
}

impl LimitOperator {
    pub fn new(line: &PeriodicLine, w_l: &[f64]) -> Result<Self> {
        let n = line.len();
        if w_l.len() != n {
            return Err(Error::Mismatch(format!("W_L has {} values, base grid has {n}", w_l.len())));
        }
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = line.second_derivative(&e);
            for i in 0..n {
                m[(i, j)] = -col[i];
            }
            e[j] = 0.0;
            m[(j, j)] += w_l[j];
        }
        let m = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
        let values = DVector::from_iterator(n, order.iter().map(|&c| eig.eigenvalues[c]));
        let mut vectors = DMatrix::zeros(n, n);
        for (k, &c) in order.iter().enumerate() {
            vectors.set_column(k, &eig.eigenvectors.column(c));
        }
        Ok(LimitOperator { w_l: w_l.to_vec(), values, vectors })
    }

    /// e^{−(t/2)(Δ_L+W_L)} v0.
    pub fn evolve(&self, v0: &[f64], t: f64) -> Result<Vec<f64>> {
        if v0.len() != self.w_l.len() {
            return Err(Error::Mismatch("base state length differs from the limit operator".into()));
        }
        if !(t >= 0.0) {
            return Err(Error::Argument(format!("time must be nonnegative, got {t}")));
        }
        let mut c = self.vectors.tr_mul(&DVector::from_column_slice(v0));
        for (ck, l) in c.iter_mut().zip(self.values.iter()) {
            *ck *= (-0.5 * t * l).exp();
        }
        Ok((&self.vectors * c).as_slice().to_vec())
    }
}

/// One-shot form of [`LimitOperator::evolve`].
pub fn limit_semigroup(line: &PeriodicLine, w_l: &[f64], v0: &[f64], t: f64) -> Result<Vec<f64>> {
    LimitOperator::new(line, w_l)?.evolve(v0, t)
}
