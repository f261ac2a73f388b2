//! Complementing-condition check for the boundary system of the operator Sobolev norms.
//!
//! With ‖ξ‖ = 1 the system of order 2k is L₊(τ) = (τ − i)ᵏ with boundary operators
//! B_l(τ) = ((τ + i)(τ − i))^{l−1}, l = 1..k. The condition asks the B_l to be linearly
//! independent modulo L₊.

use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Complex polynomial in τ, coefficients in ascending degree, no trailing zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyC {
    coeffs: Vec<C64>,
}

impl PolyC {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        PolyC { coeffs }
    }

    pub fn zero() -> Self {
        PolyC { coeffs: vec![] }
    }

    pub fn constant(c: C64) -> Self {
        PolyC::new(vec![c])
    }

    /// τ − root.
    pub fn linear(root: C64) -> Self {
        PolyC::new(vec![-root, C64::new(1.0, 0.0)])
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, n: usize) -> C64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    pub fn add(&self, other: &PolyC) -> PolyC {
        let n = self.coeffs.len().max(other.coeffs.len());
        PolyC::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &PolyC) -> PolyC {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> PolyC {
        PolyC::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, other: &PolyC) -> PolyC {
        if self.is_zero() || other.is_zero() {
            return PolyC::zero();
        }
        let mut out = vec![C64::default(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        PolyC::new(out)
    }

    pub fn pow(&self, n: u32) -> PolyC {
        (0..n).fold(PolyC::constant(C64::new(1.0, 0.0)), |acc, _| acc.mul(self))
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::default(), |acc, c| acc * z + c)
    }

    /// Quotient and remainder with deg r < deg d.
    pub fn div_rem(&self, d: &PolyC) -> Result<(PolyC, PolyC)> {
        let dd = d.degree().ok_or_else(|| Error::Argument("division by the zero polynomial".into()))?;
        let lead = d.coeffs[dd];
        let mut r = self.coeffs.clone();
        let n = r.len();
        if n <= dd {
            return Ok((PolyC::zero(), self.clone()));
        }
        let mut q = vec![C64::default(); n - dd];
        for k in (0..n - dd).rev() {
            let c = r[k + dd] / lead;
            q[k] = c;
            for (j, dj) in d.coeffs.iter().enumerate() {
                r[k + j] -= c * dj;
            }
            r[k + dd] = C64::default();
        }
        r.truncate(dd);
        Ok((PolyC::new(q), PolyC::new(r)))
    }

    /// max |coefficient|.
    pub fn sup(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySystem {
    pub k: usize,
    pub l_plus: PolyC,
    pub b: Vec<PolyC>,
}

pub const MAX_ORDER: usize = 8;

pub fn build_system(k: usize) -> Result<BoundarySystem> {
    if !(1..=MAX_ORDER).contains(&k) {
        return Err(Error::Argument(format!("k must be in 1..={MAX_ORDER}, got {k}")));
    }
    let l_plus = PolyC::linear(I).pow(k as u32);
    let pair = PolyC::linear(-I).mul(&PolyC::linear(I));
    let b = (1..=k).map(|l| pair.pow(l as u32 - 1)).collect();
    Ok(BoundarySystem { k, l_plus, b })
}

/// The system of order `k` with B₂ replaced by (τ − i)², which is 0 modulo L₊ for k = 2.
pub fn negative_control(k: usize) -> Result<BoundarySystem> {
    let mut s = build_system(k)?;
    if k < 2 {
        return Err(Error::Argument("the negative control needs k >= 2".into()));
    }
    s.b[1] = PolyC::linear(I).pow(2);
    Ok(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct IndependenceVerdict {
    pub k: usize,
    pub passes: bool,
    pub rank: usize,
    pub sigma_min: f64,
    /// Row l holds the coefficients of B_l mod L₊ in ascending degree.
    pub remainders: Vec<Vec<(f64, f64)>>,
    /// Orders of the B_l are distinct and below 2k.
    pub orders_valid: bool,
    /// max over l of the recombination residual of B_l = q L₊ + r.
    pub recombination_residual: f64,
}

pub const SIGMA_THRESHOLD: f64 = 1e-8;

pub fn check_independence(system: &BoundarySystem) -> Result<IndependenceVerdict> {
    let k = system.k;
    if system.b.len() != k || system.l_plus.degree() != Some(k) {
        return Err(Error::Argument("a system of order 2k needs k boundary operators and deg L₊ = k".into()));
    }
    let mut m = DMatrix::<C64>::zeros(k, k);
    let mut remainders = Vec::with_capacity(k);
    let mut residual: f64 = 0.0;
    for (l, b) in system.b.iter().enumerate() {
        let (q, r) = b.div_rem(&system.l_plus)?;
        residual = residual.max(q.mul(&system.l_plus).add(&r).sub(b).sup());
        for j in 0..k {
            m[(l, j)] = r.coeff(j);
        }
        remainders.push((0..k).map(|j| (r.coeff(j).re, r.coeff(j).im)).collect());
    }
    let degrees: Vec<Option<usize>> = system.b.iter().map(|b| b.degree()).collect();
    let orders_valid = degrees.iter().all(|d| d.is_some_and(|d| d < 2 * k))
        && (0..k).all(|a| (a + 1..k).all(|c| degrees[a] != degrees[c]));
    let sv = m.singular_values();
    let sigma_min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let rank = sv.iter().filter(|s| **s > SIGMA_THRESHOLD).count();
    Ok(IndependenceVerdict {
        k,
        passes: rank == k && sigma_min > SIGMA_THRESHOLD,
        rank,
        sigma_min,
        remainders,
        orders_valid,
        recombination_residual: residual,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub l0: usize,
    pub value: (f64, f64),
    /// (2i)^{l₀−1} a_{l₀}.
    pub closed_form: (f64, f64),
    pub error: f64,
    /// Remainder left by dividing Q_a by (τ − i)^{l₀−1}.
    pub division_residual: f64,
}

/// Evaluates Q_a = Σ a_l B_l divided by (τ − i)^{l₀−1} at τ = i, l₀ the first nonzero index (from 1).
pub fn lowest_order_witness(system: &BoundarySystem, a: &[C64]) -> Result<Witness> {
    if a.len() != system.b.len() {
        return Err(Error::Argument(format!("need {} coefficients, got {}", system.b.len(), a.len())));
    }
    let first = a.iter().position(|c| *c != C64::default()).ok_or_else(|| Error::Argument("coefficient vector is zero".into()))?;
    let q = a.iter().zip(&system.b).fold(PolyC::zero(), |acc, (c, b)| acc.add(&b.scale(*c)));
    let (reduced, rest) = q.div_rem(&PolyC::linear(I).pow(first as u32))?;
    let value = reduced.eval(I);
    let closed = (I * 2.0).powu(first as u32) * a[first];
    Ok(Witness {
        l0: first + 1,
        value: (value.re, value.im),
        closed_form: (closed.re, closed.im),
        error: (value - closed).norm() / closed.norm().max(1.0),
        division_residual: rest.sup(),
    })
}
