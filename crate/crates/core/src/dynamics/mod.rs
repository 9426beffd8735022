//! Time evolution: the Lindblad master equation and the closed-form
//! geometric-phase propagator of the ideal protocol.

pub mod evolve;
pub mod geometric;
pub mod integrator;
pub mod lindblad;

pub use evolve::{
    build_liouvillian, collapse_operators, decoupling_check, evolve_master, evolve_with_retry,
    DecouplingReport, EvolutionResult, EvolutionSpec, Frame, Positivity, RunStatus,
};
pub use geometric::{
    alpha_of_t, apply_geometric_unitary, decoupling_time, ideal_state, lambda_from_theta,
    theta_of_t, twisted_spin_density, twisted_spin_state,
};
pub use integrator::{Dopri5, IntegratorStats, Tolerances};
pub use lindblad::{lindblad_rhs, Liouvillian};
