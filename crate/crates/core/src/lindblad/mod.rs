//! Truncated-Fock-space Lindblad engine: operators, Hamiltonians,
//! Liouvillians, steady states and the dispersive-vs-JC comparison.

pub mod compare;
pub mod hilbert;
pub mod liouvillian;
pub mod model;
pub mod operator;
pub mod solver;
pub mod state;

pub use compare::{
    choose_truncation, compare_on, convergence_check, dispersive_steady_state, hilbert_for, jc_steady_state,
    jc_vs_dispersive_error, ComparisonOptions, ConvergenceReport, JcComparison, CONVERGENCE_TOL, DEFAULT_KMAX,
    DEFAULT_N_MAX,
};
pub use hilbert::{HilbertConfig, Label, EXCITED, GROUND};
pub use liouvillian::{liouvillian, liouvillian_on, Dissipator, Liouvillian, Selection};
pub use model::{build_h_dispersive, build_h_dispersive_chi, build_h_jc, cavity_dissipators};
pub use operator::{identity, ladder, tensor, Modes, Operator};
pub use solver::{steady_state, steady_state_with, Method, SolverOptions, SteadyStateResult};
pub use state::{qubit_excited_population, state_fidelity, DensityMatrix};
