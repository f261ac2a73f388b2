//! Shift-invert subspace iteration for operators too large to diagonalize densely.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::operators::{Coeff, DiscreteOperator, FiberMatrix, Term};

use super::eigen::ModalSpectrum;

const MAX_OUTER: usize = 300;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
}

/// Extreme Ritz values of `steps` Lanczos iterations (full reorthogonalization).
pub fn lanczos_extremes(op: &DiscreteOperator, steps: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = op.dim();
    let steps = steps.min(n);
    let mut q = random_vector(rng, n);
    let nq = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|x| *x /= nq);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for k in 0..steps {
        let mut w = op.apply_sym(&basis[k]);
        let a = dot(&w, &basis[k]);
        alpha.push(a);
        for b in &basis {
            let c = dot(&w, b);
            axpy(&mut w, -c, b);
        }
        let bn = dot(&w, &w).sqrt();
        if bn < 1e-12 * a.abs().max(1.0) || k + 1 == steps {
            break;
        }
        beta.push(bn);
        w.iter_mut().for_each(|x| *x /= bn);
        basis.push(w);
    }
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let ev = SymmetricEigen::new(t).eigenvalues;
    (ev.min(), ev.max())
}

enum Solve {
    Done(Vec<f64>),
    Indefinite,
    Stalled(f64),
}

/// Curve average of every coefficient; diagonal in Fourier modes.
fn averaged(op: &DiscreteOperator) -> DiscreteOperator {
    let ns = op.grid.ns;
    let nf = op.nf();
    let avg = |c: &Coeff| {
        if c.is_uniform(nf) {
            c.clone()
        } else {
            Coeff((0..nf).map(|i| (0..ns).map(|j| c.0[j * nf + i]).sum::<f64>() / ns as f64).collect())
        }
    };
    let terms = op
        .terms
        .iter()
        .map(|t| match t {
            Term::SStiff { alpha, mu } => Term::SStiff { alpha: avg(alpha), mu: avg(mu) },
            Term::Fiber(b) if b.len() > 1 => {
                let sum = b.iter().fold(FiberMatrix::zeros(nf), |acc, m| acc.plus(m));
                Term::Fiber(vec![sum.scaled(1.0 / ns as f64)])
            }
            Term::Diag(d) => Term::Diag(avg(d)),
            other => other.clone(),
        })
        .collect();
    DiscreteOperator { terms, ..op.clone() }
}

/// (M − σ)⁻¹ for the curve-averaged M, clipped to stay positive definite.
struct Preconditioner<'a> {
    modal: &'a ModalSpectrum,
    sigma: f64,
    floor: f64,
}

impl Preconditioner<'_> {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let (sigma, floor) = (self.sigma, self.floor);
        self.modal.apply_fn(r, |l| 1.0 / (l - sigma).max(floor), None).0
    }
}

/// Preconditioned CG for (A − σ) x = b; reports indefiniteness at the first nonpositive curvature.
fn pcg(op: &DiscreteOperator, pc: &Preconditioner, b: &[f64], guess: Option<Vec<f64>>, rtol: f64, max_iter: usize) -> Solve {
    let sigma = pc.sigma;
    let n = b.len();
    let b2 = dot(b, b);
    if b2 == 0.0 {
        return Solve::Done(vec![0.0; n]);
    }
    let (mut x, mut r) = match guess {
        Some(x0) => {
            let mut r = b.to_vec();
            let mut ax = op.apply_sym(&x0);
            axpy(&mut ax, -sigma, &x0);
            axpy(&mut r, -1.0, &ax);
            (x0, r)
        }
        None => (vec![0.0; n], b.to_vec()),
    };
    if dot(&r, &r) <= rtol * rtol * b2 {
        return Solve::Done(x);
    }
    let mut z = pc.apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        let mut ap = op.apply_sym(&p);
        axpy(&mut ap, -sigma, &p);
        let curv = dot(&p, &ap);
        if curv <= 0.0 {
            return Solve::Indefinite;
        }
        let a = rz / curv;
        axpy(&mut x, a, &p);
        axpy(&mut r, -a, &ap);
        if dot(&r, &r) <= rtol * rtol * b2 {
            return Solve::Done(x);
        }
        z = pc.apply(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Solve::Stalled((dot(&r, &r) / b2).sqrt())
}

/// Modified Gram–Schmidt, twice; returns false on rank loss.
fn orthonormalize(vs: &mut [Vec<f64>]) -> bool {
    for _ in 0..2 {
        for i in 0..vs.len() {
            for k in 0..i {
                let d = dot(&vs[i], &vs[k]);
                let (head, tail) = vs.split_at_mut(i);
                axpy(&mut tail[0], -d, &head[k]);
            }
            let n = dot(&vs[i], &vs[i]).sqrt();
            if !(n > 1e-300) {
                return false;
            }
            vs[i].iter_mut().for_each(|x| *x /= n);
        }
    }
    true
}

/// Lowest `count` eigenpairs (symmetric coordinates) by shift-invert subspace iteration.
///
/// The shift starts below a Lanczos estimate of the spectrum bottom; whenever CG meets
/// negative curvature the shift is lowered and the iteration restarted. Seeds are deterministic.
pub fn shift_invert(op: &DiscreteOperator, count: usize, tol: f64, seed: u64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = lanczos_extremes(op, 80, &mut rng);
    let spread = (hi - lo).abs().max(1.0);
    let p = (count + 8).min(n);
    let mut sigma = lo - 0.1 * spread.min(lo.abs().max(1.0)) - 1.0;
    let modal = ModalSpectrum::new(&averaged(op))?;
    let mut restarts = 0;
    let mut worst = f64::INFINITY;
    'restart: loop {
        let pc = Preconditioner { modal: &modal, sigma, floor: 0.5 * (lo - sigma).max(1e-3) };
        if restarts > 10 {
            return Err(Error::NoConvergence { iterations: restarts, residual: worst });
        }
        let mut x: Vec<Vec<f64>> = (0..p).map(|_| random_vector(&mut rng, n)).collect();
        orthonormalize(&mut x);
        let mut ritz: Option<Vec<f64>> = None;
        for outer in 0..MAX_OUTER {
            let mut y = Vec::with_capacity(p);
            for (k, v) in x.iter().enumerate() {
                // a Ritz pair (θ, v) gives (A − σ)⁻¹v ≈ v/(θ − σ)
                let guess = ritz.as_ref().map(|t| v.iter().map(|a| a / (t[k] - sigma)).collect());
                let inner = (1e-2 * worst).clamp(1e-13, 1e-6);
                match pcg(op, &pc, v, guess, inner, 20 * n) {
                    Solve::Done(s) => y.push(s),
                    Solve::Indefinite => {
                        sigma -= spread.min(lo.abs().max(1.0));
                        restarts += 1;
                        continue 'restart;
                    }
                    Solve::Stalled(r) => {
                        return Err(Error::NoConvergence { iterations: outer, residual: r });
                    }
                }
            }
            if !orthonormalize(&mut y) {
                restarts += 1;
                continue 'restart;
            }
            let ay: Vec<Vec<f64>> = y.iter().map(|v| op.apply_sym(v)).collect();
            let mut h = DMatrix::zeros(p, p);
            for i in 0..p {
                for j in 0..p {
                    h[(i, j)] = 0.5 * (dot(&y[i], &ay[j]) + dot(&y[j], &ay[i]));
                }
            }
            let eig = SymmetricEigen::new(h);
            let mut order: Vec<usize> = (0..p).collect();
            order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
            let mut vals = Vec::with_capacity(p);
            let mut next = Vec::with_capacity(p);
            let mut images = Vec::with_capacity(p);
            for &c in &order {
                let mut v = vec![0.0; n];
                let mut av = vec![0.0; n];
                for k in 0..p {
                    let coef = eig.eigenvectors[(k, c)];
                    axpy(&mut v, coef, &y[k]);
                    axpy(&mut av, coef, &ay[k]);
                }
                vals.push(eig.eigenvalues[c]);
                next.push(v);
                images.push(av);
            }
            worst = 0.0;
            for k in 0..count {
                let mut r = images[k].clone();
                axpy(&mut r, -vals[k], &next[k]);
                worst = worst.max(dot(&r, &r).sqrt() / vals[k].abs().max(1.0));
            }
            x = next;
            ritz = Some(vals.clone());
            if worst <= tol {
                x.truncate(count);
                vals.truncate(count);
                return Ok((vals, x));
            }
        }
        return Err(Error::NoConvergence { iterations: MAX_OUTER, residual: worst });
    }
}
