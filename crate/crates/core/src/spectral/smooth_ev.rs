//! Eigenvalue inequalities for the renormalized fiber spectrum.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    HypothesisNotMet,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothEvReport {
    pub epsilon: f64,
    /// 1 − λ₀/λ₁.
    pub threshold: f64,
    /// (λ_k − λ₀)/ε² ≥ λ_k/ε for all k ≥ 1, assuming ε ≤ threshold.
    pub first: Verdict,
    /// (λ_k − λ₀)/ε² ≥ λ_k, assuming ε² ≤ threshold.
    pub second: Verdict,
    /// min_k of (λ_k − λ₀)/ε² − λ_k/ε and of (λ_k − λ₀)/ε² − λ_k.
    pub margins: [f64; 2],
    pub levels_checked: usize,
}

/// Checks both inequalities over every supplied λ_k, k ≥ 1.
///
/// Each is decided in the equivalent form 1 − λ₀/λ_k ≥ ε (resp. ε²), which involves no
/// division by ε; the direct-form margins are reported alongside.
pub fn smooth_ev_check(lambda: &[f64], epsilon: f64) -> Result<SmoothEvReport> {
    if lambda.len() < 2 {
        return Err(Error::Argument("need λ₀ and at least one higher eigenvalue".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Argument(format!("epsilon must be positive, got {epsilon}")));
    }
    if lambda.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Argument("eigenvalues must be sorted".into()));
    }
    let l0 = lambda[0];
    if !(l0 > 0.0) {
        return Err(Error::Argument("λ₀ must be positive".into()));
    }
    let l1 = lambda[1];
    if l1 == l0 {
        return Err(Error::Argument("degenerate input λ₁ = λ₀".into()));
    }
    let threshold = 1.0 - l0 / l1;
    let e2 = epsilon * epsilon;
    let mut ok = [true, true];
    let mut margins = [f64::INFINITY, f64::INFINITY];
    for &lk in &lambda[1..] {
        let q = 1.0 - l0 / lk;
        ok[0] &= q >= epsilon;
        ok[1] &= q >= e2;
        let lhs = (lk - l0) / e2;
        margins[0] = margins[0].min(lhs - lk / epsilon);
        margins[1] = margins[1].min(lhs - lk);
    }
    let verdict = |hyp: bool, holds: bool| match (hyp, holds) {
        (false, _) => Verdict::HypothesisNotMet,
        (true, true) => Verdict::Holds,
        (true, false) => Verdict::Fails,
    };
    Ok(SmoothEvReport {
        epsilon,
        threshold,
        first: verdict(epsilon <= threshold, ok[0]),
        second: verdict(e2 <= threshold, ok[1]),
        margins,
        levels_checked: lambda.len() - 1,
    })
}
