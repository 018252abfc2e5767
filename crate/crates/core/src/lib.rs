//! Simulator for linear-regression training via continuous-variable quantum
//! annealing on truncated bosonic Fock spaces.
//!
//! The pipeline: load a dataset and build the least-squares matrices
//! ([`regression`]), map them onto a multimode bosonic problem Hamiltonian
//! whose ground state is a coherent state encoding the regression parameters
//! ([`hamiltonian`]), integrate the time-dependent Schrödinger equation over
//! the annealing schedule and read the parameters out of the quadrature
//! expectations ([`dynamics`]). A binary-encoded QUBO baseline ([`qubo`])
//! quantifies what the discrete encoding loses.

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod hamiltonian;
mod lapack;
pub mod qubo;
pub mod regression;
pub mod sparse;

pub use dynamics::{
    adiabatic_diagnostic, converge_truncation, evolve, exact_spectrum, initial_state,
    AnnealResult, GapPoint, SpectrumReport, TrajectorySample,
};
pub use error::{Error, Result};
pub use fock::{
    build_annihilation, build_creation, expectation, lift_to_mode, number_operator, quadrature,
    HermitianOperator, ModeSpace, Operator, StateVector,
};
pub use hamiltonian::{
    build_driver_hamiltonian, build_kerr_hamiltonian, build_problem_hamiltonian,
    problem_hamiltonian_from_coefficients, AnnealSchedule, HamiltonianSet,
};
pub use qubo::{
    discretization_report, encode, solve_exact, DiscretizationRow, PrecisionVector, QuboProblem,
    QuboSolution,
};
pub use regression::{
    build_problem, least_squares_solution, load_csv, load_csv_where, predict, BasisFunction,
    ColumnTransform, Dataset, ModelSpec, RegressionProblem,
};
pub use sparse::SparseMatrix;
