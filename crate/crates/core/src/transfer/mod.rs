//! Transfer operators L0 and L1, Ulam discretization and exact step densities.

pub mod diagnostics;
pub mod exact;
pub mod grid;
pub mod hybrid;
pub mod iterate;
pub mod operators;
pub mod ulam;

pub use diagnostics::{lasota_yorke_fit, LasotaYorkeFit, LasotaYorkeRow};
pub use exact::{exact_from_orbit, invariant_density_exact_tent, PiecewiseConstantDensity};
pub use grid::GridFunction;
pub use hybrid::{heaviside, HybridBvFunction, Jump, Pairing};
pub use iterate::{invariant_density_hybrid, HybridDensity};
pub use operators::{apply_l0, apply_l0_n, apply_l1, apply_l1_n};
pub use ulam::{invariant_density_ulam, ulam_power_iteration, UlamDensity, UlamOperator};

/// Default cells of regular grids.
pub const DEFAULT_CELLS: usize = 1 << 14;
/// Default power-iteration cap.
pub const DEFAULT_MAX_ITERS: usize = 10_000;
/// Default L1 tolerance of power iterations.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Total variation of a hybrid function.
pub fn variation(phi: &HybridBvFunction) -> f64 {
    phi.variation()
}
