use std::f64::consts::PI;
use std::sync::Arc;

use tubehom_core::geometry::{AmbientCurvature, CurveSpec, FiberKind, FrameChoice, MetricMode, Tube, TubeGrid};
use tubehom_core::operators::{
    assemble_induced_family, assemble_reference_laplacian, assemble_vertical, DiscreteOperator, FiberMatrix, Measure,
    OperatorMeta, Term,
};
use tubehom_core::spectral::*;

fn tube(spec: CurveSpec, fiber: FiberKind) -> Tube {
    Tube::new(&spec, FrameChoice::Parallel, AmbientCurvature::Flat, fiber, MetricMode::Exact).unwrap()
}

/// J_n by its ascending series, for small arguments.
fn series_j(n: u32, x: f64) -> f64 {
    let mut term = (x / 2.0).powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
    let mut sum = term;
    for m in 1..80 {
        term *= -(x * x / 4.0) / (m as f64 * (m + n) as f64);
        sum += term;
    }
    sum
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m
        } else {
            b = m
        }
    }
    0.5 * (a + b)
}

#[test]
fn bessel_zeros_match_series_bisection() {
    let j01 = bisect(|x| series_j(0, x), 2.0, 3.0);
    let j11 = bisect(|x| series_j(1, x), 3.5, 4.0);
    assert!((bessel_j_zero(0, 1).unwrap() - j01).abs() < 1e-12);
    assert!((bessel_j_zero(1, 1).unwrap() - j11).abs() < 1e-12);
    assert!((bessel_j_zero(0, 1).unwrap() - 2.404825557695773).abs() < 1e-12);
    assert!((bessel_j_zero(1, 1).unwrap() - 3.831705970207512).abs() < 1e-12);
    for nu in 0..6 {
        for z in bessel_j_zeros(nu, 8).unwrap() {
            assert!(bessel_j(nu, z).abs() < 1e-12, "J_{nu}({z}) = {}", bessel_j(nu, z));
        }
    }
}

#[test]
fn bessel_values_match_series() {
    for n in 0..5 {
        for x in [0.1, 1.0, 2.5, 5.0, 8.0] {
            assert!((bessel_j(n, x) - series_j(n, x)).abs() < 1e-13, "n={n} x={x}");
        }
    }
    assert!(bessel_j_zero(0, 0).is_err());
}

#[test]
fn fiber_spectra_are_analytic() {
    let s1 = fiber_spectrum(1, 3).unwrap();
    assert_eq!(s1.values, vec![PI * PI / 4.0, PI * PI, 9.0 * PI * PI / 4.0]);
    let s2 = fiber_spectrum(2, 3).unwrap();
    assert!((s2.values[0] - 5.7831859629).abs() < 1e-9);
    assert!((s2.values[1] - 14.6819706422).abs() < 1e-9);
    assert_eq!(s2.values[1], s2.values[2]);
    assert_eq!(s2.levels[1].multiplicity, 2);
    let s = fiber_spectrum(2, 60).unwrap();
    assert_eq!(s.values.len(), 60);
    assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn ground_state_is_normalized_and_radial() {
    // midpoint rule on (−1,1)
    let n = 20000;
    let s: f64 = (0..n).map(|i| ground_state(1, [-1.0 + (i as f64 + 0.5) * 2.0 / n as f64, 0.0]).unwrap().powi(2)).sum::<f64>() * 2.0 / n as f64;
    assert!((s - 1.0).abs() < 1e-8);
    // radial quadrature on the disk
    let d: f64 = (0..n)
        .map(|i| {
            let r = (i as f64 + 0.5) / n as f64;
            2.0 * PI * r * ground_state(2, [r, 0.0]).unwrap().powi(2)
        })
        .sum::<f64>()
        / n as f64;
    assert!((d - 1.0).abs() < 1e-8);
    let a = ground_state(2, [0.3, 0.4]).unwrap();
    let b = ground_state(2, [0.5, 0.0]).unwrap();
    assert!((a - b).abs() < 1e-15);
}

#[test]
fn discrete_fiber_ground_converges_at_order_two() {
    let mut errs = Vec::new();
    for nw in [21, 41, 81] {
        let g = Arc::new(TubeGrid::new(16, 1.0, FiberKind::Interval { nw }).unwrap());
        errs.push((discrete_fiber_spectrum(&g).unwrap().values[0] - PI * PI / 4.0).abs());
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }
    let mut derrs = Vec::new();
    for (nr, nt) in [(8, 16), (12, 24), (18, 36)] {
        let g = Arc::new(TubeGrid::new(16, 1.0, FiberKind::Disk { nr, ntheta: nt }).unwrap());
        derrs.push((discrete_fiber_spectrum(&g).unwrap().values[0] - lambda0(2).unwrap()).abs());
    }
    for w in derrs.windows(2) {
        let order = (w[0] / w[1]).ln() / 1.5f64.ln();
        assert!(order > 1.7, "disk order {order}, errors {derrs:?}");
    }
}

#[test]
fn cylinder_spectrum_separates() {
    let t = tube(CurveSpec::cylinder(1.0, 2, 64), FiberKind::Interval { nw: 101 });
    let d0 = assemble_reference_laplacian(&t).unwrap();
    let eig = eigensolve(&d0, 5, 1e-9, 1).unwrap();
    assert_eq!(eig.method, Method::Modal);
    let l0 = discrete_fiber_spectrum(&t.grid).unwrap().values[0];
    for (v, n2) in eig.values.iter().zip([0.0, 1.0, 1.0, 4.0, 4.0]) {
        assert!((v - (l0 + n2)).abs() < 1e-9 * v, "{v} vs {}", l0 + n2);
        assert!((v - (PI * PI / 4.0 + n2)).abs() < 1e-3);
    }
    assert!(eig.gram_defect() < 1e-10);
    assert!(eig.residuals.iter().zip(&eig.values).all(|(r, v)| *r <= 1e-9 * v.abs().max(1.0)));
}

#[test]
fn unit_square_fixture_converges_to_two_pi_squared() {
    let mut errs = Vec::new();
    for m in [7usize, 15, 31] {
        let grid = Arc::new(TubeGrid::new(16, 1.0, FiberKind::Interval { nw: m * m + 2 }).unwrap());
        let h = 1.0 / (m + 1) as f64;
        let mut block = FiberMatrix::zeros(m * m);
        for i in 0..m {
            for j in 0..m {
                let r = i * m + j;
                block.add_entry(r, r, 4.0 / (h * h));
                for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if a >= 0 && b >= 0 && a < m as i64 && b < m as i64 {
                        block.add_entry(r, a as usize * m + b as usize, -1.0 / (h * h));
                    }
                }
            }
        }
        let op = DiscreteOperator::new(
            grid.clone(),
            Measure::Reference,
            Arc::new(grid.weights()),
            vec![Term::Fiber(vec![block])],
            OperatorMeta { symbol: "square".into(), epsilon: None, order: 2 },
        );
        let eig = eigensolve(&op, 1, 1e-9, 0).unwrap();
        errs.push((eig.values[0] - 2.0 * PI * PI).abs());
    }
    assert!(errs[0] > errs[1] && errs[1] > errs[2]);
    assert!(errs[2] / (2.0 * PI * PI) < 1e-3);
}

#[test]
fn annulus_roots_match_direct_cross_product() {
    let (a, b) = (0.8, 1.2);
    let k = annulus_roots(0, a, b, 2).unwrap();
    let f = |k: f64| {
        let (ja, ya) = puruspe::Jnu_Ynu(0.0, k * a);
        let (jb, yb) = puruspe::Jnu_Ynu(0.0, k * b);
        ja * yb - jb * ya
    };
    for r in &k {
        assert!(f(*r).abs() < 1e-12);
    }
    // thin annulus: Λ ≈ π²/(b−a)² − 1/(4R²)
    let (vals, levels) = annulus_eigenvalues(a, b, 5).unwrap();
    assert_eq!(levels[0].n, 0);
    assert!((vals[0] - (PI * PI / 0.16 - 0.25)).abs() < 0.05);
    assert_eq!(vals[1], vals[2]);
}

#[test]
fn annulus_oracle_agrees_with_fermi_grid() {
    let eps = 0.2;
    let t = tube(CurveSpec::circle(1.0, 2, 64), FiberKind::Interval { nw: 201 });
    let (l0, _) = ground_pair(&t.grid, Renorm::Discrete).unwrap();
    let op = assemble_induced_family(eps, &t, l0).unwrap();
    let eig = eigensolve(&op, 5, 1e-9, 0).unwrap();
    let (oracle, _) = annulus_eigenvalues(1.0 - eps, 1.0 + eps, 5).unwrap();
    let la = lambda0(1).unwrap();
    for (mu, lam) in eig.values.iter().zip(&oracle) {
        let lhs = eps * eps * lam - la;
        let rhs = eps * eps * mu;
        assert!((lhs - rhs).abs() < 1e-3 * lhs.abs(), "{lhs} vs {rhs}");
        assert!((mu + l0 / (eps * eps) - lam).abs() < 1e-3 * lam);
    }
}

#[test]
fn convention_certificate_selects_minus_on_induced_metric() {
    let t = tube(CurveSpec::circle(1.0, 2, 64), FiberKind::Interval { nw: 201 });
    let cert = certify_convention(&t, 0.05, 0.1, &[0, 1, 2], 0.02).unwrap();
    for e in &cert.extrapolations {
        assert!((e.limit - (e.n as f64).powi(2) + 0.25).abs() < 1e-4, "{e:?}");
    }
    let passing: Vec<_> = cert.candidates.iter().filter(|c| c.passes).collect();
    assert_eq!(passing.len(), 2);
    assert!(cert.tie_broken);
    assert_eq!(cert.selected, Some((tubehom_core::geometry::MetricKind::Induced, tubehom_core::geometry::Convention::Minus)));
}

#[test]
fn shift_invert_matches_dense() {
    let t = tube(CurveSpec::ellipse(1.5, 1.0, 2, 32), FiberKind::Interval { nw: 33 });
    let l0 = lambda0(1).unwrap();
    let op = assemble_induced_family(0.3, &t, l0).unwrap();
    assert!(!op.is_invariant());
    let (dv, _) = dense_eigen(&op);
    let (vals, vecs) = shift_invert(&op, 6, 1e-10, 7).unwrap();
    for (a, b) in vals.iter().zip(&dv) {
        assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "{a} vs {b}");
    }
    assert_eq!(vecs.len(), 6);
}

#[test]
fn eigensolve_dispatch_on_large_ellipse() {
    let t = tube(CurveSpec::ellipse(1.5, 1.0, 2, 64), FiberKind::Interval { nw: 65 });
    let op = assemble_induced_family(0.3, &t, lambda0(1).unwrap()).unwrap();
    assert!(op.dim() >= DENSE_LIMIT);
    let eig = eigensolve(&op, 4, 1e-9, 3).unwrap();
    assert_eq!(eig.method, Method::Iterative);
    assert!(eig.gram_defect() < 1e-10);
    for (r, v) in eig.residuals.iter().zip(&eig.values) {
        assert!(*r <= 1e-8 * v.abs().max(1.0));
    }
    // same seed, same answer
    let again = eigensolve(&op, 4, 1e-9, 3).unwrap();
    assert_eq!(eig.values, again.values);
}

#[test]
fn bands_on_cylinder() {
    let t = tube(CurveSpec::cylinder(1.0, 2, 32), FiberKind::Interval { nw: 41 });
    let d0 = assemble_reference_laplacian(&t).unwrap();
    let eig = eigensolve(&d0, 12, 1e-9, 0).unwrap();
    let fiber = discrete_fiber_spectrum(&t.grid).unwrap();
    let rep = common_eigen_check(&eig, &assemble_vertical(&t.grid), &fiber, &t.grid).unwrap();
    assert_eq!(rep.mixed, 0);
    assert!(rep.entries.iter().all(|e| e.overlap > 0.999));
    assert!(rep.nonnegative(1e-8));
    let low: Vec<f64> = rep.entries.iter().filter(|e| e.band == Some(0)).map(|e| e.horizontal_part).take(5).collect();
    for (h, n2) in low.iter().zip([0.0, 1.0, 1.0, 4.0, 4.0]) {
        assert!((h - n2).abs() < 1e-9);
    }
}

#[test]
fn smooth_ev_examples() {
    let interval: Vec<f64> = (0..=50).map(|k| ((k + 1) as f64 * PI / 2.0).powi(2)).collect();
    let r = smooth_ev_check(&interval, 0.75).unwrap();
    assert_eq!(r.threshold, 0.75);
    assert_eq!(r.first, Verdict::Holds);
    assert_eq!(r.second, Verdict::Holds);
    assert!(r.margins[0] > -1e-12);
    let disk = fiber_spectrum(2, 51).unwrap().values;
    let r = smooth_ev_check(&disk, 0.6).unwrap();
    assert!((r.threshold - 0.6061).abs() < 1e-4);
    assert_eq!(r.first, Verdict::Holds);
    assert!(r.margins[0] >= 0.0);
    let r = smooth_ev_check(&interval, 0.8).unwrap();
    assert_eq!(r.first, Verdict::HypothesisNotMet);
    assert_eq!(r.second, Verdict::Holds);
    assert!(smooth_ev_check(&[1.0, 1.0], 0.5).is_err());
}
