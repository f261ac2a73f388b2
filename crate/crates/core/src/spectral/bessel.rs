//! Bessel functions of integer order and their positive zeros.

use crate::error::{Error, Result};

/// J_0 … J_nmax at `x` by Miller's backward recurrence, normalized with J₀ + 2ΣJ_{2k} = 1.
pub fn bessel_j_all(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = nmax.max(ax as usize);
    let mut start = top + 20 + (40.0 * (top as f64 + 1.0)).sqrt() as usize;
    start += start % 2;
    let (mut jp, mut j) = (0.0f64, 1e-300f64);
    let mut sum = 0.0;
    for k in (1..=start).rev() {
        let jm = 2.0 * k as f64 / ax * j - jp;
        jp = j;
        j = jm;
        // j now holds the unnormalized J_{k-1}
        if k - 1 <= nmax {
            out[k - 1] = j;
        }
        if (k - 1) % 2 == 0 && k > 1 {
            sum += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            sum *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    sum += j;
    for (n, v) in out.iter_mut().enumerate() {
        *v /= sum;
        if x < 0.0 && n % 2 == 1 {
            *v = -*v;
        }
    }
    out
}

pub fn bessel_j(n: u32, x: f64) -> f64 {
    bessel_j_all(n as usize + 1, x)[n as usize]
}

/// (J_n(x), J_n'(x)) with J_n' = (J_{n−1} − J_{n+1})/2.
fn j_and_derivative(n: u32, x: f64) -> (f64, f64) {
    let all = bessel_j_all(n as usize + 1, x);
    let n = n as usize;
    let d = if n == 0 { -all[1] } else { 0.5 * (all[n - 1] - all[n + 1]) };
    (all[n], d)
}

fn refine(nu: u32, mut a: f64, mut b: f64) -> f64 {
    let (mut fa, _) = j_and_derivative(nu, a);
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let (f, d) = j_and_derivative(nu, x);
        if f == 0.0 {
            return x;
        }
        if (f > 0.0) == (fa > 0.0) {
            a = x;
            fa = f;
        } else {
            b = x;
        }
        let newton = x - f / d;
        let next = if d != 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if (next - x).abs() <= 1e-15 * x.abs() || b - a <= 4.0 * f64::EPSILON * x.abs() {
            return next;
        }
        x = next;
    }
    x
}

/// The first `count` positive zeros of J_ν.
pub fn bessel_j_zeros(nu: u32, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Ok(vec![]);
    }
    let step = 0.5;
    for attempt in 0..10 {
        let upper = (nu as f64 + (count as f64 + 1.0) * std::f64::consts::PI + 10.0) * 2f64.powi(attempt);
        let mut zeros = Vec::with_capacity(count);
        let mut x0 = if nu == 0 { step } else { nu as f64 };
        let mut f0 = bessel_j(nu, x0);
        while x0 < upper && zeros.len() < count {
            let x1 = x0 + step;
            let f1 = bessel_j(nu, x1);
            if f1 == 0.0 {
                zeros.push(x1);
                x0 = x1 + 1e-9;
                f0 = bessel_j(nu, x0);
                continue;
            }
            if (f0 > 0.0) != (f1 > 0.0) && f0 != 0.0 {
                zeros.push(refine(nu, x0, x1));
            }
            x0 = x1;
            f0 = f1;
        }
        if zeros.len() == count {
            return Ok(zeros);
        }
    }
    Err(Error::Bracket { nu, k: count, attempts: 10 })
}

/// k-th positive zero (k ≥ 1) of J_ν.
pub fn bessel_j_zero(nu: u32, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Argument("zero index starts at 1".into()));
    }
    Ok(bessel_j_zeros(nu, k)?[k - 1])
}
