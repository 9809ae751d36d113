//! Susceptibility coefficients, the Markov meromorphic extension and the
//! non-Markov values Ψ₁ and Ψ̃.

mod markov;
mod nonmarkov;
mod series;

pub use markov::{
    jump_matrix, markov_extension, residue_fit, richardson, MarkovJumpSystem, Pole, ResidueFit,
    RESIDUE_NODES,
};
pub use nonmarkov::{
    abel_diagnostic, candidate_check, psi1_nonmarkov, regularized_at_one, regularized_psi,
    AbelDiagnostic, CandidateReport, PointMass, Psi1, RegularizedAtOne, RegularizedPsi,
};
pub use series::{
    coefficients_naive, coefficients_split, psi_partial, resolvent_argument,
    SusceptibilitySeries,
};
