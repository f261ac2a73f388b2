//! Semigroup evolution, the limit semigroup, the homogenization study and the inequality suites.

pub mod evolve;
pub mod fit;
pub mod homog;
pub mod limit;
pub mod norms;
pub mod suites;

pub use evolve::{evolve, evolve_modal, EvolutionResult, Propagator};
pub use fit::{loglog_fit, LogFit};
pub use homog::{homogenization_error, sweep, CellRecord, ErrorRecord, HomogLevel, RateSet, StudyParams, SweepReport};
pub use limit::{limit_semigroup, LimitOperator};
pub use norms::{interpolation_check, power_norm, sobolev_norm, spectral_norm, stencil_h2_norm, InterpolationCheck};
pub use suites::{
    boundary_scaling, boundary_trace, commutator_suite, envelope, interpolation_suite, kato_suite, nochnkato_suite,
    regularity_suite, smooth_ev_suite, uniform_bound_suite, BoundaryPoint, BoundaryReport, CommutatorPoint, CommutatorReport,
    EquiCell, InterpolationSuite, KatoCell, KatoReport, MaximizerCheck, NochnKatoReport, RegularityPoint, RegularityReport,
    SmoothEvSuite, UniformBoundReport, UniformCell, GROWTH_EXPONENT, MIN_PANEL, ROUNDOFF,
};
