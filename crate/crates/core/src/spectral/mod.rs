//! Eigensolvers, fiber spectra, Bessel zeros, band checks and eigenvalue inequalities.

pub mod annulus;
pub mod bands;
pub mod bessel;
pub mod eigen;
pub mod fiber;
pub mod iterative;
pub mod smooth_ev;

pub use annulus::{
    annulus_eigenvalues, annulus_roots, annulus_shift, certify_convention, extrapolate_shift, AnnulusLevel, Candidate,
    ConventionCertificate, ShiftExtrapolation,
};
pub use bands::{common_eigen_check, BandEntry, BandReport, OVERLAP_THRESHOLD};
pub use bessel::{bessel_j, bessel_j_all, bessel_j_zero, bessel_j_zeros};
pub use eigen::{dense_eigen, eigensolve, EigenSystem, Method, ModalSpectrum, ModeLabel, DENSE_LIMIT};
pub use fiber::{
    discrete_fiber_spectrum, fiber_spectrum, ground_pair, ground_state, interval_mode, lambda0, DiscreteFiber, FiberLevel,
    FiberSpectrum, Renorm,
};
pub use iterative::{lanczos_extremes, shift_invert};
pub use smooth_ev::{smooth_ev_check, SmoothEvReport, Verdict};
