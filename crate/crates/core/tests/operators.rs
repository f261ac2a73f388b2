use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tubehom_core::geometry::*;
use tubehom_core::operators::*;
use tubehom_core::spectral::{dense_eigen, ground_pair, Renorm};

fn tube(spec: CurveSpec, fiber: FiberKind) -> Tube {
    Tube::new(&spec, FrameChoice::Parallel, AmbientCurvature::Flat, fiber, MetricMode::Exact).unwrap()
}

fn fiber_w(grid: &TubeGrid) -> Vec<[f64; 2]> {
    grid.fiber.interior.iter().map(|&n| grid.fiber.nodes[n]).collect()
}

/// f(s_j) g(w_i) on the unknowns.
fn product(grid: &TubeGrid, f: impl Fn(f64) -> f64, g: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let w = fiber_w(grid);
    (0..grid.ns).flat_map(|j| w.iter().map(move |x| (j, *x))).map(|(j, x)| f(j as f64 * grid.hs()) * g(x)).collect()
}

fn max_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn diff(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(a, b)| a - b).collect()
}

fn apply(op: &DiscreteOperator, u: &[f64]) -> Vec<f64> {
    op.apply(&DiscreteState::new(u.to_vec(), Measure::Reference)).unwrap().values
}

fn splitting(t: &Tube) -> (DiscreteOperator, DiscreteOperator, DiscreteOperator) {
    let d0 = assemble_reference_laplacian(t).unwrap();
    let v = assemble_vertical(&t.grid);
    let h = assemble_horizontal(&d0, &v).unwrap();
    (d0, v, h)
}

#[test]
fn cylinder_ground_eigenvalue() {
    let t = tube(CurveSpec::cylinder(1.0, 2, 16), FiberKind::Interval { nw: 81 });
    let d0 = assemble_reference_laplacian(&t).unwrap();
    let (vals, _) = dense_eigen(&d0);
    let exact = PI * PI / 4.0;
    assert!((vals[0] - exact).abs() / exact < 1e-3, "{}", vals[0]);
    let u = product(&t.grid, |_| 1.0, |w| (PI * w[0] / 2.0).cos());
    let r = diff(&apply(&d0, &u), &u.iter().map(|x| exact * x).collect::<Vec<_>>());
    assert!(max_abs(&r) < 1e-3);
}

#[test]
fn operators_are_symmetric_on_random_pairs() {
    let t = tube(CurveSpec::circle(1.0, 2, 32), FiberKind::Interval { nw: 21 });
    let (lambda0, _) = ground_pair(&t.grid, Renorm::Discrete).unwrap();
    let ops = [
        assemble_reference_laplacian(&t).unwrap(),
        assemble_induced_family(0.2, &t, lambda0).unwrap(),
        assemble_induced_family(0.4, &t, lambda0).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for op in &ops {
        for _ in 0..20 {
            let u: Vec<f64> = (0..op.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..op.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert!(op.symmetry_residual(&u, &v) < 1e-10);
        }
    }
}

#[test]
fn vertical_operator_is_the_fiber_dirichlet_laplacian() {
    let t = tube(CurveSpec::cylinder(1.0, 2, 16), FiberKind::Interval { nw: 161 });
    let v = assemble_vertical(&t.grid);
    let block = v.modal_block(0).unwrap();
    let mut vals: Vec<f64> = block.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    for (k, got) in vals.iter().take(4).enumerate() {
        let exact = ((k + 1) as f64 * PI / 2.0).powi(2);
        assert!((got - exact).abs() / exact < 1e-3, "k={k}: {got}");
    }
    // no coupling across base nodes
    let nf = t.grid.fiber.len();
    let mut u = vec![0.0; t.grid.dim()];
    for x in &mut u[5 * nf..6 * nf] {
        *x = 1.0;
    }
    let out = apply(&v, &u);
    assert!(out.iter().enumerate().all(|(k, x)| k / nf == 5 || *x == 0.0));

    let d = tube(CurveSpec::circle(1.0, 3, 16), FiberKind::Disk { nr: 16, ntheta: 16 });
    let vd = assemble_vertical(&d.grid);
    let mut dv: Vec<f64> = vd.modal_block(0).unwrap().symmetric_eigenvalues().iter().copied().collect();
    dv.sort_by(f64::total_cmp);
    let j01 = 2.404825557695773f64;
    assert!((dv[0] - j01 * j01).abs() / (j01 * j01) < 0.02, "{}", dv[0]);
}

#[test]
fn horizontal_operator_on_the_cylinder() {
    let t = tube(CurveSpec::cylinder(1.0, 2, 32), FiberKind::Interval { nw: 41 });
    let (_, _, h) = splitting(&t);
    let phi = |w: [f64; 2]| (1.0 - w[0] * w[0]).powi(2);
    for n in 0..4 {
        let u = product(&t.grid, |s| (n as f64 * s).cos(), phi);
        let hu = apply(&h, &u);
        let target: Vec<f64> = u.iter().map(|x| (n * n) as f64 * x).collect();
        assert!(max_abs(&diff(&hu, &target)) < 1e-8 * (1.0 + (n * n) as f64), "n={n}");
    }
    let fiber_only = product(&t.grid, |_| 1.0, phi);
    assert!(max_abs(&apply(&h, &fiber_only)) < 1e-10);
}

#[test]
fn horizontal_part_is_nonnegative_on_basic_states() {
    let t = tube(CurveSpec::circle(1.0, 2, 32), FiberKind::Interval { nw: 41 });
    let (_, _, h) = splitting(&t);
    let (_, u0) = ground_pair(&t.grid, Renorm::Discrete).unwrap();
    let nf = t.grid.fiber.len();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let coef: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..t.grid.dim())
            .map(|k| {
                let s = (k / nf) as f64 * t.grid.hs();
                u0[k % nf] * coef.iter().enumerate().map(|(m, c)| c * (m as f64 * s).cos()).sum::<f64>()
            })
            .collect();
        assert!(h.inner(&u, &apply(&h, &u)) >= -1e-10);
    }
}

#[test]
fn reference_family_examples() {
    let t = tube(CurveSpec::cylinder(1.0, 2, 32), FiberKind::Interval { nw: 41 });
    let (d0, v, h) = splitting(&t);
    let (lambda0, u0) = ground_pair(&t.grid, Renorm::Discrete).unwrap();
    let d1 = assemble_reference_family(1.0, &v, &h, lambda0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u: Vec<f64> = (0..t.grid.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let want: Vec<f64> = apply(&d0, &u).iter().zip(&u).map(|(a, b)| a - lambda0 * b).collect();
    assert!(max_abs(&diff(&apply(&d1, &u), &want)) < 1e-9 * max_abs(&want));

    let nf = t.grid.fiber.len();
    let lifted: Vec<f64> = (0..t.grid.dim()).map(|k| u0[k % nf] * (2.0 * (k / nf) as f64 * t.grid.hs()).cos()).collect();
    for eps in [0.4, 0.1, 0.02] {
        let d = assemble_reference_family(eps, &v, &h, lambda0).unwrap();
        let r = diff(&apply(&d, &lifted), &lifted.iter().map(|x| 4.0 * x).collect::<Vec<_>>());
        assert!(max_abs(&r) < 1e-8, "eps={eps}: {}", max_abs(&r));
    }
}

#[test]
fn density_conjugation_is_unitary() {
    let t = tube(CurveSpec::circle(1.0, 2, 32), FiberKind::Interval { nw: 21 });
    let rho = t.density(0.2).unwrap();
    let nf = t.grid.fiber.len();
    let nn = t.grid.fiber.node_count();
    let weights = t.grid.weights();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let u: Vec<f64> = (0..t.grid.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = DiscreteState::new(u.clone(), Measure::Reference);
    let out = conjugate_by_density(&x, &rho, &t.grid, Direction::Out).unwrap();
    let induced: f64 = out
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| weights[k] * rho.rho[(k / nf) * nn + t.grid.fiber.interior[k % nf]] * v * v)
        .sum();
    assert!((induced - x.norm(&weights).powi(2)).abs() < 1e-12 * induced);
    let back = conjugate_by_density(&out, &rho, &t.grid, Direction::In).unwrap();
    assert!(max_abs(&diff(&back.values, &u)) < 1e-14);
    assert!(conjugate_by_density(&x, &rho, &t.grid, Direction::In).is_err());
}

#[test]
fn cylinder_induced_family_equals_reference_family() {
    let t = tube(CurveSpec::cylinder(1.0, 2, 16), FiberKind::Interval { nw: 11 });
    let (_, v, h) = splitting(&t);
    let (lambda0, _) = ground_pair(&t.grid, Renorm::Discrete).unwrap();
    for eps in [0.4, 0.1] {
        let a = assemble_induced_family(eps, &t, lambda0).unwrap().to_dense();
        let b = assemble_reference_family(eps, &v, &h, lambda0).unwrap().to_dense();
        assert!((&a - &b).amax() < 1e-9 * b.amax());
    }
}

#[test]
fn rotation_fields_on_the_disk() {
    let t = tube(CurveSpec::circle(1.0, 3, 16), FiberKind::Disk { nr: 8, ntheta: 16 });
    let l01 = rotation_field(1, 0, &t.grid).unwrap();
    assert!(!l01.degenerate);
    let radial = product(&t.grid, |s| s.cos(), |w| 1.0 - w[0] * w[0] - w[1] * w[1]);
    assert!(max_abs(&apply(&l01.op, &radial)) < 1e-12);
    let ht = 2.0 * PI / 16.0;
    let w1 = product(&t.grid, |_| 1.0, |w| w[0]);
    let w2 = product(&t.grid, |_| 1.0, |w| w[1] * ht.sin() / ht);
    assert!(max_abs(&diff(&apply(&l01.op, &w1), &w2)) < 1e-12);
    let l10 = rotation_field(0, 1, &t.grid).unwrap();
    assert!(max_abs(&diff(&apply(&l10.op, &w1), &w2.iter().map(|x| -x).collect::<Vec<_>>())) < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let u: Vec<f64> = (0..t.grid.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..t.grid.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let lhs = l01.op.inner(&apply(&l01.op, &u), &v);
    let rhs = l01.op.inner(&u, &apply(&l01.op, &v));
    assert!((lhs + rhs).abs() < 1e-12 * lhs.abs().max(1.0));

    let line = tube(CurveSpec::circle(1.0, 2, 16), FiberKind::Interval { nw: 11 });
    assert!(rotation_field(1, 0, &line.grid).unwrap().degenerate);
}

#[test]
fn curvature_operator_examples() {
    let line = tube(CurveSpec::circle(1.0, 2, 16), FiberKind::Interval { nw: 11 });
    let w_l = vec![-0.25; 16];
    let a = assemble_a(&AmbientCurvature::Constant { sectional: 1.0 }, &w_l, &line.grid).unwrap();
    assert_eq!(a.principal.to_dense().amax(), 0.0);
    let dense = a.full.to_dense();
    assert!((&dense - nalgebra::DMatrix::<f64>::identity(dense.nrows(), dense.ncols()) * -0.25).amax() < 1e-15);

    let disk = tube(CurveSpec::circle(1.0, 3, 16), FiberKind::Disk { nr: 8, ntheta: 12 });
    let flat = assemble_a(&AmbientCurvature::Flat, &w_l, &disk.grid).unwrap();
    assert_eq!(flat.principal.to_dense().amax(), 0.0);

    let curved = assemble_a(&AmbientCurvature::Constant { sectional: 1.0 }, &w_l, &disk.grid).unwrap();
    assert!(curved.principal.to_dense().amax() > 0.0);
    let (_, u0) = ground_pair(&disk.grid, Renorm::Discrete).unwrap();
    let nf = disk.grid.fiber.len();
    let u: Vec<f64> = (0..disk.grid.dim()).map(|k| u0[k % nf] * (1.0 + ((k / nf) as f64).sin())).collect();
    let q = curved.principal.inner(&u, &apply(&curved.principal, &u));
    assert!(q.abs() < 1e-10 * curved.principal.inner(&u, &u));
}

#[test]
fn remainder_vanishes_on_the_cylinder_and_is_order_epsilon_on_the_circle() {
    let cyl = tube(CurveSpec::cylinder(1.0, 2, 16), FiberKind::Interval { nw: 21 });
    let (d0, v, h) = splitting(&cyl);
    let (lambda0, u0) = ground_pair(&cyl.grid, Renorm::Discrete).unwrap();
    let nf = cyl.grid.fiber.len();
    let panel: Vec<Vec<f64>> = (0..4).map(|m| (0..cyl.grid.dim()).map(|k| u0[k % nf] * (m as f64 * (k / nf) as f64 * cyl.grid.hs()).cos()).collect()).collect();
    let a = assemble_a(&AmbientCurvature::Flat, &vec![0.0; 16], &cyl.grid).unwrap();
    for eps in [0.4, 0.1] {
        let delta = assemble_induced_family(eps, &cyl, lambda0).unwrap();
        let d = assemble_reference_family(eps, &v, &h, lambda0).unwrap();
        let r = residual_r(eps, &delta, &d, &a.full, &d0, &panel).unwrap();
        assert!(r.norms.iter().all(|n| *n < 1e-10), "{:?}", r.norms);
    }

    let circ = tube(CurveSpec::circle(1.0, 2, 32), FiberKind::Interval { nw: 81 });
    let (d0, v, h) = splitting(&circ);
    let (lambda0, u0) = ground_pair(&circ.grid, Renorm::Discrete).unwrap();
    let w_l = effective_potential(&circ.grid, &circ.density(0.05).unwrap(), &circ.induced(0.05).unwrap(), Convention::Plus)
        .unwrap()
        .w_l;
    let a = assemble_a(&AmbientCurvature::Flat, &w_l, &circ.grid).unwrap();
    let nf = circ.grid.fiber.len();
    let panel: Vec<Vec<f64>> = (0..3).map(|m| (0..circ.grid.dim()).map(|k| u0[k % nf] * (m as f64 * (k / nf) as f64 * circ.grid.hs()).cos()).collect()).collect();
    let mut sup = vec![];
    for eps in [0.4, 0.2, 0.1] {
        let delta = assemble_induced_family(eps, &circ, lambda0).unwrap();
        let d = assemble_reference_family(eps, &v, &h, lambda0).unwrap();
        let r = residual_r(eps, &delta, &d, &a.full, &d0, &panel).unwrap();
        sup.push(r.norms.iter().cloned().fold(0.0, f64::max));
    }
    let slope = (sup[0] / sup[2]).ln() / 4f64.ln();
    assert!(slope >= 0.9, "{sup:?}");
}

#[test]
fn e0_projection_examples() {
    let t = tube(CurveSpec::cylinder(1.0, 2, 16), FiberKind::Interval { nw: 21 });
    let (lambda0, u0) = ground_pair(&t.grid, Renorm::Discrete).unwrap();
    let e0 = e0_projection(&u0, &t.grid).unwrap();
    assert!(!e0.renormalized);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let u: Vec<f64> = (0..t.grid.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let pu = apply(&e0.op, &u);
    assert!(max_abs(&diff(&apply(&e0.op, &pu), &pu)) < 1e-12);
    let v: Vec<f64> = (0..16).map(|j| (j as f64 * t.grid.hs()).sin()).collect();
    let lifted = e0.lift(&v);
    assert!(max_abs(&diff(&apply(&e0.op, &lifted), &lifted)) < 1e-12);
    assert!(max_abs(&diff(&e0.coefficient(&t.grid, &lifted), &v)) < 1e-12);

    let (_, vert, h) = splitting(&t);
    let d = assemble_reference_family(0.2, &vert, &h, lambda0).unwrap();
    let c = diff(&apply(&d, &pu), &apply(&e0.op, &apply(&d, &u)));
    assert!(max_abs(&c) < 1e-8 * max_abs(&apply(&d, &u)));
}

#[test]
fn matrix_market_export_round_trips_the_entries() {
    let t = tube(CurveSpec::cylinder(1.0, 2, 16), FiberKind::Interval { nw: 7 });
    let d0 = assemble_reference_laplacian(&t).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d0.mtx");
    write_matrix_market(&d0, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('%'));
    let header: Vec<usize> = lines.next().unwrap().split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert_eq!(header[0], d0.dim());
    let dense = d0.to_dense();
    let mut count = 0;
    for l in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        let (r, c, v): (usize, usize, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap());
        assert!((dense[(r - 1, c - 1)] - v).abs() <= 1e-12 * v.abs().max(1.0));
        count += 1;
    }
    assert_eq!(count, header[2]);
}
