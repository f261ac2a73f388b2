//! Fixtures shared by the benchmarks.

use tubehom_core::geometry::{AmbientCurvature, CurveSpec, FiberKind, FrameChoice, MetricMode, Tube};

/// Unit circle in the plane with an interval fiber.
pub fn circle(ns: usize, nw: usize) -> Tube {
    Tube::new(&CurveSpec::circle(1.0, 2, ns), FrameChoice::Parallel, AmbientCurvature::Flat, FiberKind::Interval { nw }, MetricMode::Exact)
        .expect("valid circle tube")
}

/// Ellipse with semi-axes 1.5 and 1, so operators vary along the curve.
pub fn ellipse(ns: usize, nw: usize) -> Tube {
    Tube::new(&CurveSpec::ellipse(1.5, 1.0, 2, ns), FrameChoice::Parallel, AmbientCurvature::Flat, FiberKind::Interval { nw }, MetricMode::Exact)
        .expect("valid ellipse tube")
}
