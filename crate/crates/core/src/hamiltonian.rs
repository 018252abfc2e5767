//! Problem, driver, and Kerr-catalyst Hamiltonians, and the time-dependent
//! combination used over the annealing schedule:
//!
//! H(t) = (1 - t/T) H_d + (t/T) H_p + (1 - t/T)(t/T) H_ns
//!
//! H_p comes from the quadratic regression cost via the bosonic substitution
//! theta_m^2 -> a_m† a_m, theta_m -> (a_m + a_m†)/2,
//! theta_m theta_l -> (a_m a_l† + a_m† a_l)/2, so its ground state is a
//! coherent state whose real amplitudes are the least-squares parameters.

use crate::error::{Error, Result};
use crate::fock::{
    build_annihilation, lift_to_mode, number_operator, quadrature, HermitianOperator, ModeSpace,
    Operator,
};
use crate::regression::RegressionProblem;
use ndarray::{Array1, Array2};
use num_complex::Complex64;

/// Annealing-run parameters in dimensionless (hbar = 1) units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    total_time: f64,
    kerr_strength: f64,
    driver_frequency: f64,
    time_step: f64,
    omega_overridden: bool,
    step_cap_applied: bool,
}

/// Default upper bound on the integrator step.
pub const DEFAULT_MAX_TIME_STEP: f64 = 0.005;
/// Minimum step count implied by the dt = min(0.005, T/20000) rule.
pub const MIN_STEPS: f64 = 20_000.0;
/// Long-run cap: runs beyond this many steps get dt recomputed and a warning
/// flag instead of a refusal.
pub const MAX_STEPS: f64 = 2_000_000.0;

impl AnnealSchedule {
    /// Schedule with the default step rule dt = min(0.005, T/20000), the
    /// step count capped at 2e6, and the driver frequency fixed at 1.
    pub fn new(total_time: f64, kerr_strength: f64) -> Result<Self> {
        if !total_time.is_finite() || total_time <= 0.0 {
            return Err(Error::InvalidSchedule(format!(
                "annealing time must be positive, got {total_time}"
            )));
        }
        if !kerr_strength.is_finite() {
            return Err(Error::InvalidSchedule("Kerr strength must be finite".into()));
        }
        let mut time_step = DEFAULT_MAX_TIME_STEP.min(total_time / MIN_STEPS);
        let mut step_cap_applied = false;
        if total_time / time_step > MAX_STEPS {
            time_step = total_time / MAX_STEPS;
            step_cap_applied = true;
        }
        Ok(AnnealSchedule {
            total_time,
            kerr_strength,
            driver_frequency: 1.0,
            time_step,
            omega_overridden: false,
            step_cap_applied,
        })
    }

    /// Override the driver frequency (the override is recorded).
    pub fn with_driver_frequency(mut self, omega: f64) -> Result<Self> {
        if !omega.is_finite() || omega <= 0.0 {
            return Err(Error::InvalidDriverFrequency { omega });
        }
        self.driver_frequency = omega;
        self.omega_overridden = omega != 1.0;
        Ok(self)
    }

    /// Override the integrator step.
    pub fn with_time_step(mut self, time_step: f64) -> Result<Self> {
        if !time_step.is_finite() || time_step <= 0.0 || time_step > self.total_time {
            return Err(Error::InvalidSchedule(format!(
                "time step must satisfy 0 < dt <= T, got {time_step}"
            )));
        }
        self.time_step = time_step;
        self.step_cap_applied = false;
        Ok(self)
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn kerr_strength(&self) -> f64 {
        self.kerr_strength
    }

    pub fn driver_frequency(&self) -> f64 {
        self.driver_frequency
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    pub fn omega_overridden(&self) -> bool {
        self.omega_overridden
    }

    pub fn step_cap_applied(&self) -> bool {
        self.step_cap_applied
    }

    /// Schedule coefficients (c_d, c_p, c_ns) at time `t`.
    pub fn coefficients_at(&self, t: f64) -> Result<(f64, f64, f64)> {
        if !(0.0..=self.total_time).contains(&t) {
            return Err(Error::TimeOutOfRange { t, total_time: self.total_time });
        }
        let s = t / self.total_time;
        Ok((1.0 - s, s, s * (1.0 - s)))
    }
}

/// The immutable trio of operators a run interpolates between.
#[derive(Debug, Clone)]
pub struct HamiltonianSet {
    problem: HermitianOperator,
    driver: HermitianOperator,
    catalyst: HermitianOperator,
    space: ModeSpace,
}

impl HamiltonianSet {
    /// Validates that all three operators share the space and that the
    /// driver and catalyst are Fock-diagonal.
    pub fn new(
        problem: HermitianOperator,
        driver: HermitianOperator,
        catalyst: HermitianOperator,
    ) -> Result<Self> {
        let space = problem.space();
        if driver.space() != space || catalyst.space() != space {
            return Err(Error::DimensionMismatch(
                "problem, driver, and catalyst must share a mode space".into(),
            ));
        }
        if !driver.matrix().is_diagonal() || !catalyst.matrix().is_diagonal() {
            return Err(Error::DimensionMismatch(
                "driver and catalyst must be diagonal in the Fock basis".into(),
            ));
        }
        Ok(HamiltonianSet { problem, driver, catalyst, space })
    }

    /// Build all three operators for a regression problem. The problem
    /// Hamiltonian uses the per-sample coefficients A/N, B/N (see
    /// [`RegressionProblem::annealing_coefficients`]); theta* is unchanged
    /// and the energy scale stays comparable to the unit-frequency driver.
    pub fn for_problem(
        problem: &RegressionProblem,
        space: &ModeSpace,
        schedule: &AnnealSchedule,
    ) -> Result<Self> {
        let (a, b) = problem.annealing_coefficients();
        Self::from_coefficients(&a, &b, space, schedule)
    }

    /// Build from explicit quadratic-cost coefficients.
    pub fn from_coefficients(
        a: &Array2<f64>,
        b: &Array1<f64>,
        space: &ModeSpace,
        schedule: &AnnealSchedule,
    ) -> Result<Self> {
        Self::new(
            problem_hamiltonian_from_coefficients(a, b, space)?,
            build_driver_hamiltonian(space, schedule.driver_frequency())?,
            build_kerr_hamiltonian(space, schedule.kerr_strength())?,
        )
    }

    pub fn problem(&self) -> &HermitianOperator {
        &self.problem
    }

    pub fn driver(&self) -> &HermitianOperator {
        &self.driver
    }

    pub fn catalyst(&self) -> &HermitianOperator {
        &self.catalyst
    }

    pub fn space(&self) -> ModeSpace {
        self.space
    }

    /// H(t) = (1-s) H_d + s H_p + s(1-s) H_ns with s = t/T. Equals the
    /// driver exactly at t = 0 and the problem exactly at t = T.
    pub fn hamiltonian_at(&self, schedule: &AnnealSchedule, t: f64) -> Result<HermitianOperator> {
        let (c_d, c_p, c_ns) = schedule.coefficients_at(t)?;
        let matrix = crate::sparse::SparseMatrix::linear_combination(&[
            (c_d, self.driver.matrix()),
            (c_p, self.problem.matrix()),
            (c_ns, self.catalyst.matrix()),
        ]);
        Operator::new(self.space, matrix)?.into_hermitian()
    }
}

/// The bosonic problem Hamiltonian for quadratic-cost coefficients (A, B):
///
/// H_p = sum_{m != l} A_ml (a_m a_l† + a_m† a_l)/2
///     + sum_m A_mm a_m† a_m
///     - sum_m B_m (a_m + a_m†)/2
///
/// A is forced symmetric via (A + A')/2 before assembly. For M = 1 this
/// reduces to A_11 a†a - B_1 (a + a†)/2.
pub fn problem_hamiltonian_from_coefficients(
    a: &Array2<f64>,
    b: &Array1<f64>,
    space: &ModeSpace,
) -> Result<HermitianOperator> {
    let m = space.num_modes();
    if a.nrows() != m || a.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "gram matrix is {}x{} but the space has {m} modes",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.len() != m {
        return Err(Error::LengthMismatch { expected: m, got: b.len() });
    }
    let a_sym = (a + &a.t()) / 2.0;

    let single_a = build_annihilation(space.levels_per_mode())?;
    let lifted_a: Vec<Operator> = (0..m)
        .map(|mode| lift_to_mode(&single_a, mode, space))
        .collect::<Result<_>>()?;

    let mut total = Operator::zero(*space);
    for mode in 0..m {
        let number = number_operator(space, mode)?;
        total = total.add(&number.scaled(Complex64::new(a_sym[(mode, mode)], 0.0)))?;
        let x = quadrature(space, mode)?;
        total = total.add(&x.scaled(Complex64::new(-b[mode], 0.0)))?;
    }
    for mode in 0..m {
        for other in 0..m {
            if mode == other {
                continue;
            }
            let cross = lifted_a[mode]
                .matmul(&lifted_a[other].adjoint())?
                .add(&lifted_a[mode].adjoint().matmul(&lifted_a[other])?)?;
            total = total.add(&cross.scaled(Complex64::new(a_sym[(mode, other)] / 2.0, 0.0)))?;
        }
    }
    total.into_hermitian()
}

/// Problem Hamiltonian for a regression problem, built from the per-sample
/// coefficients A/N, B/N.
pub fn build_problem_hamiltonian(
    problem: &RegressionProblem,
    space: &ModeSpace,
) -> Result<HermitianOperator> {
    let (a, b) = problem.annealing_coefficients();
    problem_hamiltonian_from_coefficients(&a, &b, space)
}

/// H_d = omega * sum_m a_m† a_m: diagonal with entry omega * (n_1 + ... +
/// n_M), whose unique ground state is the multimode vacuum. Requires
/// omega > 0 (otherwise the ground state is not the trivial vacuum).
pub fn build_driver_hamiltonian(space: &ModeSpace, omega: f64) -> Result<HermitianOperator> {
    if !omega.is_finite() || omega <= 0.0 {
        return Err(Error::InvalidDriverFrequency { omega });
    }
    let triplets = (0..space.dim()).filter_map(|idx| {
        let total: usize = space.occupation(idx).iter().sum();
        (total > 0).then(|| (idx, idx, Complex64::new(omega * total as f64, 0.0)))
    });
    let matrix = crate::sparse::SparseMatrix::from_triplets(space.dim(), triplets);
    Operator::new(*space, matrix)?.into_hermitian()
}

/// H_ns = chi * sum_m (a_m† a_m)^2: diagonal with entry
/// chi * (n_1^2 + ... + n_M^2). The sum runs over the modes (the catalyst
/// acts on modes, not on data records).
pub fn build_kerr_hamiltonian(space: &ModeSpace, chi: f64) -> Result<HermitianOperator> {
    if !chi.is_finite() {
        return Err(Error::InvalidSchedule("Kerr strength must be finite".into()));
    }
    let triplets = (0..space.dim()).filter_map(move |idx| {
        let sum_sq: usize = space.occupation(idx).iter().map(|&n| n * n).sum();
        (chi != 0.0 && sum_sq > 0).then(|| (idx, idx, Complex64::new(chi * sum_sq as f64, 0.0)))
    });
    let matrix = crate::sparse::SparseMatrix::from_triplets(space.dim(), triplets);
    Operator::new(*space, matrix)?.into_hermitian()
}
