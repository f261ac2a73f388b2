//! Periodic spectral differentiation and real Fourier transforms along the core curve.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};

/// Spectral calculus on `n` equispaced periodic nodes of a loop of length `length`.
#[derive(Clone)]
pub struct PeriodicLine {
    n: usize,
    length: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PeriodicLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicLine").field("n", &self.n).field("length", &self.length).finish()
    }
}

impl PeriodicLine {
    pub fn new(n: usize, length: f64) -> Self {
        let mut planner = FftPlanner::new();
        PeriodicLine {
            n,
            length,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Angular wavenumber of real mode index `m` (0 ..= n/2).
    pub fn wavenumber(&self, m: usize) -> f64 {
        2.0 * PI * m as f64 / self.length
    }

    /// Number of real mode indices, 0 ..= n/2.
    pub fn mode_count(&self) -> usize {
        self.n / 2 + 1
    }

    /// Whether mode index `m` carries a sine partner.
    pub fn has_sine(&self, m: usize) -> bool {
        m > 0 && 2 * m != self.n
    }

    pub fn has_nyquist(&self) -> bool {
        self.n % 2 == 0
    }

    fn spectrum(&self, u: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = u.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    fn back(&self, mut buf: Vec<Complex<f64>>) -> Vec<f64> {
        self.inverse.process(&mut buf);
        let inv = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * inv).collect()
    }

    /// First derivative; the Nyquist component is annihilated.
    pub fn derivative(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut c = self.spectrum(u);
        let base = 2.0 * PI / self.length;
        for (k, ck) in c.iter_mut().enumerate() {
            let m = if 2 * k < n { k as f64 } else if 2 * k == n { 0.0 } else { k as f64 - n as f64 };
            *ck *= Complex::new(0.0, base * m);
        }
        self.back(c)
    }

    /// Second derivative including the Nyquist component.
    pub fn second_derivative(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut c = self.spectrum(u);
        let base = 2.0 * PI / self.length;
        for (k, ck) in c.iter_mut().enumerate() {
            let m = if 2 * k <= n { k as f64 } else { k as f64 - n as f64 };
            *ck *= -(base * m).powi(2);
        }
        self.back(c)
    }

    /// Mean of `u` against the alternating Nyquist vector, (1/n) Σ (-1)^j u_j.
    pub fn nyquist_coefficient(&self, u: &[f64]) -> f64 {
        if !self.has_nyquist() {
            return 0.0;
        }
        u.iter().enumerate().map(|(j, x)| if j % 2 == 0 { *x } else { -*x }).sum::<f64>() / self.n as f64
    }

    /// Coefficients in the orthonormal real basis
    /// 1/√n, √(2/n) cos, √(2/n) sin, (-1)^j/√n. Returns (cos, sin) per mode index.
    pub fn to_real_modes(&self, u: &[f64]) -> Vec<(f64, f64)> {
        let n = self.n;
        let c = self.spectrum(u);
        let r = (1.0 / n as f64).sqrt();
        let r2 = (2.0 / n as f64).sqrt();
        (0..self.mode_count())
            .map(|m| {
                if m == 0 || 2 * m == n {
                    (c[m].re * r, 0.0)
                } else {
                    (c[m].re * r2, -c[m].im * r2)
                }
            })
            .collect()
    }

    /// Inverse of [`PeriodicLine::to_real_modes`].
    pub fn from_real_modes(&self, modes: &[(f64, f64)]) -> Vec<f64> {
        let n = self.n;
        let mut c = vec![Complex::new(0.0, 0.0); n];
        let r = (n as f64).sqrt();
        let r2 = (n as f64 / 2.0).sqrt();
        for (m, &(a, b)) in modes.iter().enumerate() {
            if m == 0 || 2 * m == n {
                c[m] = Complex::new(a * r, 0.0);
            } else {
                c[m] = Complex::new(a * r2, -b * r2);
                c[n - m] = c[m].conj();
            }
        }
        self.back(c)
    }

    /// Orthonormal real basis vector for (mode index, sine flag).
    pub fn basis_vector(&self, m: usize, sine: bool) -> Vec<f64> {
        let n = self.n;
        let nf = n as f64;
        (0..n)
            .map(|j| {
                let phase = 2.0 * PI * (m * j) as f64 / nf;
                if m == 0 {
                    1.0 / nf.sqrt()
                } else if 2 * m == n {
                    (if j % 2 == 0 { 1.0 } else { -1.0 }) / nf.sqrt()
                } else if sine {
                    (2.0 / nf).sqrt() * phase.sin()
                } else {
                    (2.0 / nf).sqrt() * phase.cos()
                }
            })
            .collect()
    }
}
