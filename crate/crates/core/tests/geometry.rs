use std::f64::consts::PI;

use tubehom_core::geometry::*;

fn tube(spec: CurveSpec, fiber: FiberKind, mode: MetricMode) -> Tube {
    Tube::new(&spec, FrameChoice::Parallel, AmbientCurvature::Flat, fiber, mode).unwrap()
}

fn circle(ns: usize, nw: usize) -> Tube {
    tube(CurveSpec::circle(1.0, 2, ns), FiberKind::Interval { nw }, MetricMode::Exact)
}

fn norm3(v: &Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[test]
fn circle_curvature_is_one() {
    let f = build_frame(&CurveSpec::circle(1.0, 2, 64), FrameChoice::Parallel, AmbientCurvature::Flat).unwrap();
    for k in &f.kappa {
        assert!((k[0].abs() - 1.0).abs() < 1e-10);
    }
    assert!((f.length() - 2.0 * PI).abs() < 1e-10);
    assert!(f.orthonormality_residual < 1e-12);
}

#[test]
fn ellipse_curvature_at_major_vertex() {
    let f = build_frame(&CurveSpec::ellipse(2.0, 1.0, 2, 256), FrameChoice::Parallel, AmbientCurvature::Flat).unwrap();
    let p = f.curve.position[0];
    assert!((p[0] - 2.0).abs() < 1e-10 && p[1].abs() < 1e-10);
    assert!((f.kappa[0][0].abs() - 2.0).abs() < 1e-8);
    // minor vertex: b / a²
    let q = f.ns() / 4;
    assert!((f.kappa[q][0].abs() - 0.25).abs() < 1e-8);
    for (t, d) in f.curve.tangent.iter().zip(&f.curve.dtangent) {
        assert!((norm3(t) - 1.0).abs() < 1e-12);
        assert!((t[0] * d[0] + t[1] * d[1] + t[2] * d[2]).abs() < 1e-8);
    }
}

#[test]
fn parallel_frame_of_space_circle_has_no_connection() {
    let f = build_frame(&CurveSpec::circle(1.0, 3, 64), FrameChoice::Parallel, AmbientCurvature::Flat).unwrap();
    assert_eq!(f.codim, 2);
    assert!(f.connection.iter().flatten().all(|c| c.abs() < 1e-10));
    assert!(f.orthonormality_residual < 1e-12);
    assert!((f.max_abs_kappa() - 1.0).abs() < 1e-10);
}

#[test]
fn degenerate_inputs_are_rejected() {
    assert!(CurveSpec::circle(1.0, 2, 8).validate().is_err());
    assert!(CurveSpec::ellipse(0.0, 1.0, 2, 64).validate().is_err());
    assert!(FiberGrid::new(FiberKind::Interval { nw: 10 }).is_err());
}

#[test]
fn plane_circle_metric_matches_closed_form() {
    let t = circle(32, 21);
    let c = center_node(&t.grid.fiber);
    for j in 0..32 {
        let b = t.metric.at(j, c);
        assert!((b.a - 1.0).abs() < 1e-12);
        assert!((b.b[0][0] - 1.0).abs() < 1e-12);
        for (node, w) in t.grid.fiber.nodes.iter().enumerate() {
            let k = t.frame.kappa[j][0];
            let a = t.metric.at(j, node).a;
            assert!((a - (1.0 - w[0] * k).powi(2)).abs() < 1e-12);
        }
    }
}

#[test]
fn series_metric_orders() {
    let spec = CurveSpec::circle(1.0, 2, 32);
    let fiber = FiberKind::Interval { nw: 21 };
    let exact = tube(spec.clone(), fiber, MetricMode::Exact);
    let s2 = tube(spec.clone(), fiber, MetricMode::Series { order: 2 });
    let s1 = tube(spec, fiber, MetricMode::Series { order: 1 });
    for (node, w) in exact.grid.fiber.nodes.iter().enumerate() {
        let (e, a2, a1) = (exact.metric.at(3, node).a, s2.metric.at(3, node).a, s1.metric.at(3, node).a);
        assert!((e - a2).abs() < 1e-12);
        assert!((e - a1 - w[0] * w[0]).abs() < 1e-12);
    }
}

#[test]
fn reference_metric_is_the_identity() {
    let t = circle(32, 21);
    let g0 = t.reference(1.0).unwrap();
    for b in &g0.blocks {
        assert_eq!((b.a, b.b[0][0], b.c[0].abs()), (1.0, 1.0, 0.0));
    }
    let g = t.reference(0.3).unwrap();
    for (x, y) in g.blocks.iter().zip(&g0.blocks) {
        assert_eq!(x.a, y.a);
        assert!((x.b[0][0] - 0.09).abs() < 1e-15);
    }
    let wide = tube(CurveSpec::circle(2.0, 2, 32), FiberKind::Interval { nw: 21 }, MetricMode::Exact);
    let g1 = wide.metric.rescale(1.0, MetricKind::Induced).unwrap();
    for (x, y) in g1.blocks.iter().zip(&wide.metric.blocks) {
        assert!((x.a - y.a).abs() < 1e-15 && (x.b[0][0] - y.b[0][0]).abs() < 1e-15);
    }
}

#[test]
fn rescaled_circle_metric_at_the_edge() {
    let t = circle(32, 21);
    let g = t.induced(0.2).unwrap();
    let last = t.grid.fiber.node_count() - 1;
    let edge = [g.at(0, 0).a, g.at(0, last).a];
    let lo = edge.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = edge.iter().cloned().fold(0.0, f64::max);
    assert!((lo - 0.64).abs() < 1e-12);
    assert!((hi - 1.44).abs() < 1e-12);
}

#[test]
fn dual_perturbation_cases() {
    let cyl = tube(CurveSpec::cylinder(1.0, 2, 32), FiberKind::Interval { nw: 21 }, MetricMode::Exact);
    let h = dual_perturbation(&cyl.induced(0.3).unwrap(), &cyl.reference(0.3).unwrap()).unwrap();
    assert!(h.sup_norm < 1e-14);

    let t = circle(32, 21);
    let mut sups = vec![];
    for eps in [0.4, 0.2, 0.1] {
        let h = dual_perturbation(&t.induced(eps).unwrap(), &t.reference(eps).unwrap()).unwrap();
        // flat ambient space: H*(0) = 0
        assert!((h.sup_norm - h.sup_deviation).abs() < 1e-14);
        assert!((h.sup_norm - ((1.0 - eps).powi(-2) - 1.0)).abs() < 1e-10);
        sups.push(h.sup_norm);
    }
    let slope = (sups[0] / sups[2]).ln() / 4f64.ln();
    assert!(slope >= 0.9, "slope {slope}");
}

#[test]
fn density_is_linear_in_the_fiber() {
    let t = circle(32, 21);
    let rho = t.density(0.3).unwrap();
    let c = center_node(&t.grid.fiber);
    for j in 0..32 {
        assert!((rho.at(j, c) - 1.0).abs() < 1e-14);
        for (node, w) in t.grid.fiber.nodes.iter().enumerate() {
            let expect = 1.0 - 0.3 * w[0] * t.frame.kappa[j][0];
            assert!((rho.at(j, node) - expect).abs() < 1e-12);
        }
    }
    let cyl = tube(CurveSpec::cylinder(1.0, 2, 32), FiberKind::Interval { nw: 21 }, MetricMode::Exact);
    assert!(cyl.density(0.3).unwrap().rho.iter().all(|r| (r - 1.0).abs() < 1e-14));
}

#[test]
fn effective_potential_examples() {
    let cyl = tube(CurveSpec::cylinder(1.0, 2, 32), FiberKind::Interval { nw: 41 }, MetricMode::Exact);
    let g = cyl.induced(0.2).unwrap();
    let p = effective_potential(&cyl.grid, &cyl.density(0.2).unwrap(), &g, Convention::Plus).unwrap();
    assert!(p.w.iter().all(|x| x.abs() < 1e-12));

    // circle: ρ = 1 − εw, so ½Δ log ρ − ¼|d log ρ|² on the zero section is −¼ in either sign
    let t = circle(64, 201);
    for conv in [Convention::Plus, Convention::Minus] {
        let p = effective_potential(&t.grid, &t.density(0.05).unwrap(), &t.induced(0.05).unwrap(), conv).unwrap();
        for w in &p.w_l {
            assert!((w - p.w_l[0]).abs() < 1e-10);
        }
        assert!((p.mean_w_l() + 0.25).abs() < 0.02 * 0.25, "{:?} {}", conv, p.mean_w_l());
    }

    let e = tube(CurveSpec::ellipse(2.0, 1.0, 2, 128), FiberKind::Interval { nw: 81 }, MetricMode::Exact);
    let p = effective_potential(&e.grid, &e.density(0.1).unwrap(), &e.induced(0.1).unwrap(), Convention::Plus).unwrap();
    assert!((p.w_l[0] - p.w_l[64]).abs() < 1e-8);
    assert!((p.w_l[0] - p.w_l[32]).abs() > 1e-3);
}

#[test]
fn grid_volume_is_length_times_fiber_volume() {
    let t = circle(64, 21);
    assert!((t.grid.volume() - 2.0 * PI * 2.0).abs() < 1e-10);
    for nr in [8, 16] {
        let d = tube(CurveSpec::circle(1.0, 3, 32), FiberKind::Disk { nr, ntheta: 16 }, MetricMode::Exact);
        assert!((d.grid.volume() - 2.0 * PI * d.grid.fiber.exact_volume()).abs() < 1e-10);
        assert!((d.grid.fiber.exact_volume() - PI).abs() < 1e-12);
    }
}
