//! Curves, Fermi frames, tube grids, metric blocks, density and effective potential.

pub mod curve;
pub mod frame;
pub mod grid;
pub mod metric;
pub mod potential;

pub use curve::{ArclengthCurve, CurveKind, CurveSpec, Vec3};
pub use frame::{build_frame, AmbientCurvature, FermiFrame, FrameChoice};
pub use grid::{Edge, FiberGrid, FiberKind, TubeGrid};
pub use metric::{
    density, dual_perturbation, dual_perturbation_limit, metric_blocks, Blocks, DensityField, DualPerturbation,
    MetricField, MetricKind, MetricMode,
};
pub use potential::{center_node, conjugation_potential, effective_potential, Convention, PotentialField};

use std::sync::Arc;

use crate::error::Result;

/// A curve with its frame, unit tube grid and unscaled induced metric.
#[derive(Clone, Debug)]
pub struct Tube {
    pub spec: CurveSpec,
    pub frame: FermiFrame,
    pub grid: Arc<TubeGrid>,
    pub metric: MetricField,
}

impl Tube {
    pub fn new(
        spec: &CurveSpec,
        choice: FrameChoice,
        curvature: AmbientCurvature,
        fiber: FiberKind,
        mode: MetricMode,
    ) -> Result<Self> {
        let frame = build_frame(spec, choice, curvature)?;
        let grid = Arc::new(TubeGrid::new(spec.ns, frame.length(), fiber)?);
        let metric = metric_blocks(&frame, &grid, mode)?;
        Ok(Tube { spec: spec.clone(), frame, grid, metric })
    }

    /// Same geometry on a different fiber grid.
    pub fn with_fiber(&self, fiber: FiberGrid) -> Result<Self> {
        let grid = Arc::new(self.grid.with_fiber(fiber));
        let metric = metric_blocks(&self.frame, &grid, self.metric.mode)?;
        Ok(Tube { spec: self.spec.clone(), frame: self.frame.clone(), grid, metric })
    }

    pub fn codim(&self) -> usize {
        self.frame.codim
    }

    pub fn induced(&self, epsilon: f64) -> Result<MetricField> {
        self.metric.rescale(epsilon, MetricKind::Induced)
    }

    pub fn reference(&self, epsilon: f64) -> Result<MetricField> {
        self.metric.rescale(epsilon, MetricKind::Reference)
    }

    pub fn density(&self, epsilon: f64) -> Result<DensityField> {
        density(&self.induced(epsilon)?, &self.reference(epsilon)?)
    }
}
