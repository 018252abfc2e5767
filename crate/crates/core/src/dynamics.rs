//! Time-dependent Schrödinger integration over the annealing schedule, exact
//! spectra for oracle comparisons, and adiabaticity diagnostics.
//!
//! The integrator is fixed-step fourth-order Runge-Kutta on
//! i dpsi/dt = H(t) psi, with H evaluated at the substep times the rule
//! requires. Fixed steps make runs bit-reproducible.

use crate::error::{Error, Result};
use crate::fock::{quadrature, HermitianOperator, ModeSpace, StateVector, STATE_NORM_TOL};
use crate::hamiltonian::{AnnealSchedule, HamiltonianSet};
use crate::lapack;
use crate::regression::RegressionProblem;
use crate::sparse::SparseMatrix;
use num_complex::Complex64;

/// A run whose norm drift reaches this bound is rejected as unstable.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
/// Dense eigensolves are refused above this dimension.
pub const DENSE_SOLVE_CAP: usize = 1 << 14;

/// One recorded trajectory checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub time: f64,
    pub quadratures: Vec<f64>,
    pub problem_energy: f64,
}

/// Outcome of an annealing run. Expectations are Rayleigh quotients
/// (norm-compensated); the stored final state itself is left unrenormalized,
/// so its norm is 1 +- `norm_drift`.
#[derive(Debug, Clone)]
pub struct AnnealResult {
    pub final_state: StateVector,
    pub quadratures: Vec<f64>,
    pub problem_energy: f64,
    pub norm_drift: f64,
    pub samples: Vec<TrajectorySample>,
}

/// The multimode vacuum, the unique ground state of the driver for
/// positive driver frequency.
pub fn initial_state(space: ModeSpace) -> StateVector {
    StateVector::vacuum(space)
}

struct RealCsr {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Schedule-aware application of H(t): one sparse pass for the problem term
/// plus an elementwise pass for the (diagonal) driver and catalyst terms.
struct Propagator {
    dim: usize,
    problem_real: Option<RealCsr>,
    problem_matrix: SparseMatrix,
    diag_driver: Vec<f64>,
    diag_catalyst: Vec<f64>,
}

impl Propagator {
    fn new(set: &HamiltonianSet) -> Self {
        let matrix = set.problem().matrix().clone();
        let problem_real = (matrix.max_abs_imag() == 0.0).then(|| {
            let (row_ptr, col_idx, values) = matrix.parts();
            RealCsr {
                row_ptr: row_ptr.to_vec(),
                col_idx: col_idx.to_vec(),
                values: values.iter().map(|v| v.re).collect(),
            }
        });
        let diag_driver = set.driver().matrix().diagonal().iter().map(|c| c.re).collect();
        let diag_catalyst = set.catalyst().matrix().diagonal().iter().map(|c| c.re).collect();
        Propagator {
            dim: set.space().dim(),
            problem_real,
            problem_matrix: matrix,
            diag_driver,
            diag_catalyst,
        }
    }

    /// out = -i H(s) x with s already clamped to [0, 1].
    fn rhs(&self, s: f64, x: &[Complex64], out: &mut [Complex64]) {
        let c_driver = 1.0 - s;
        let c_catalyst = s * (1.0 - s);
        match &self.problem_real {
            Some(csr) => {
                for r in 0..self.dim {
                    let mut acc_re = 0.0;
                    let mut acc_im = 0.0;
                    for k in csr.row_ptr[r]..csr.row_ptr[r + 1] {
                        let v = csr.values[k];
                        let xv = x[csr.col_idx[k]];
                        acc_re += v * xv.re;
                        acc_im += v * xv.im;
                    }
                    let diag =
                        c_driver * self.diag_driver[r] + c_catalyst * self.diag_catalyst[r];
                    let re = s * acc_re + diag * x[r].re;
                    let im = s * acc_im + diag * x[r].im;
                    out[r] = Complex64::new(im, -re);
                }
            }
            None => {
                self.problem_matrix.matvec(x, out);
                for r in 0..self.dim {
                    let diag =
                        c_driver * self.diag_driver[r] + c_catalyst * self.diag_catalyst[r];
                    let h = s * out[r] + diag * x[r];
                    out[r] = Complex64::new(h.im, -h.re);
                }
            }
        }
    }
}

/// Integrate i dpsi/dt = H(t) psi from t = 0 to t = T, recording quadrature
/// and problem-energy expectations at `num_checkpoints` evenly spaced times
/// (the last checkpoint is t = T). Fails with
/// [`Error::IntegrationUnstable`] if the norm drift reaches 1e-6.
pub fn evolve(
    set: &HamiltonianSet,
    schedule: &AnnealSchedule,
    psi0: &StateVector,
    num_checkpoints: usize,
) -> Result<AnnealResult> {
    let space = set.space();
    if psi0.space() != space {
        return Err(Error::DimensionMismatch(
            "initial state does not live on the Hamiltonian's mode space".into(),
        ));
    }
    let norm_defect = (1.0 - psi0.norm()).abs();
    if norm_defect > STATE_NORM_TOL {
        return Err(Error::NotNormalized { defect: norm_defect });
    }

    let dim = space.dim();
    let total_time = schedule.total_time();
    let steps = (total_time / schedule.time_step()).ceil() as usize;
    let steps = steps.max(1);
    let dt = total_time / steps as f64;

    let quadrature_ops: Vec<HermitianOperator> = (0..space.num_modes())
        .map(|m| quadrature(&space, m))
        .collect::<Result<_>>()?;
    let propagator = Propagator::new(set);

    let mut psi: Vec<Complex64> = psi0.amplitudes().to_vec();
    let mut k1 = vec![Complex64::ZERO; dim];
    let mut k2 = vec![Complex64::ZERO; dim];
    let mut k3 = vec![Complex64::ZERO; dim];
    let mut k4 = vec![Complex64::ZERO; dim];
    let mut stage = vec![Complex64::ZERO; dim];

    let checkpoint_steps: Vec<usize> = if num_checkpoints == 0 {
        Vec::new()
    } else {
        let mut marks: Vec<usize> = (1..=num_checkpoints)
            .map(|j| ((j * steps) as f64 / num_checkpoints as f64).round() as usize)
            .map(|s| s.clamp(1, steps))
            .collect();
        marks.dedup();
        marks
    };
    let mut samples = Vec::with_capacity(checkpoint_steps.len());
    let mut next_checkpoint = 0usize;

    let mut max_drift = 0.0f64;
    for step in 0..steps {
        let t0 = step as f64 * dt;
        let s0 = (t0 / total_time).min(1.0);
        let s_mid = ((t0 + 0.5 * dt) / total_time).min(1.0);
        let s_end = (((step + 1) as f64 * dt) / total_time).min(1.0);

        propagator.rhs(s0, &psi, &mut k1);
        for i in 0..dim {
            stage[i] = psi[i] + 0.5 * dt * k1[i];
        }
        propagator.rhs(s_mid, &stage, &mut k2);
        for i in 0..dim {
            stage[i] = psi[i] + 0.5 * dt * k2[i];
        }
        propagator.rhs(s_mid, &stage, &mut k3);
        for i in 0..dim {
            stage[i] = psi[i] + dt * k3[i];
        }
        propagator.rhs(s_end, &stage, &mut k4);

        let sixth = dt / 6.0;
        let mut norm_sqr = 0.0;
        for i in 0..dim {
            psi[i] += sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
            norm_sqr += psi[i].norm_sqr();
        }
        max_drift = max_drift.max((1.0 - norm_sqr.sqrt()).abs());

        if next_checkpoint < checkpoint_steps.len() && step + 1 == checkpoint_steps[next_checkpoint]
        {
            next_checkpoint += 1;
            let (quadratures, problem_energy) =
                measure(&psi, set.problem(), &quadrature_ops, &mut stage);
            samples.push(TrajectorySample {
                time: (step + 1) as f64 * dt,
                quadratures,
                problem_energy,
            });
        }
    }

    if max_drift >= NORM_DRIFT_LIMIT {
        return Err(Error::IntegrationUnstable { norm_drift: max_drift });
    }

    let (quadratures, problem_energy) = measure(&psi, set.problem(), &quadrature_ops, &mut stage);
    Ok(AnnealResult {
        final_state: StateVector::from_raw(space, psi),
        quadratures,
        problem_energy,
        norm_drift: max_drift,
        samples,
    })
}

/// Rayleigh-quotient expectations of the quadratures and the problem
/// Hamiltonian on a possibly slightly-unnormalized state.
fn measure(
    psi: &[Complex64],
    problem: &HermitianOperator,
    quadrature_ops: &[HermitianOperator],
    scratch: &mut [Complex64],
) -> (Vec<f64>, f64) {
    let norm_sqr: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
    let mut expect = |op: &HermitianOperator| -> f64 {
        op.matrix().matvec(psi, scratch);
        let value: Complex64 = psi.iter().zip(scratch.iter()).map(|(a, b)| a.conj() * b).sum();
        value.re / norm_sqr
    };
    let quadratures: Vec<f64> = quadrature_ops.iter().map(&mut expect).collect();
    let problem_energy = expect(problem);
    (quadratures, problem_energy)
}

/// The lowest levels of an exact (dense) diagonalization.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    energies: Vec<f64>,
    states: Vec<StateVector>,
}

impl SpectrumReport {
    /// Eigenvalues in ascending order.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn first_excited_energy(&self) -> Option<f64> {
        self.energies.get(1).copied()
    }

    pub fn ground_state(&self) -> &StateVector {
        &self.states[0]
    }

    /// E_1 - E_0, or zero when only one level was requested.
    pub fn gap(&self) -> f64 {
        if self.energies.len() < 2 {
            return 0.0;
        }
        self.energies[1] - self.energies[0]
    }
}

/// Lowest `num_levels` eigenpairs of a Hermitian operator by a dense
/// symmetric eigensolve. Real-symmetric operators (every operator this crate
/// builds) are solved directly; genuinely complex ones go through the
/// 2n-dimensional real embedding [[Re, -Im], [Im, Re]].
pub fn exact_spectrum(op: &HermitianOperator, num_levels: usize) -> Result<SpectrumReport> {
    let space = op.space();
    let dim = space.dim();
    if dim > DENSE_SOLVE_CAP {
        return Err(Error::Capacity(format!(
            "dimension {dim} exceeds the dense eigensolve cap {DENSE_SOLVE_CAP}"
        )));
    }
    let k = num_levels.clamp(1, dim);

    if op.matrix().max_abs_imag() == 0.0 {
        let mut dense = vec![0.0f64; dim * dim];
        for (r, c, v) in op.matrix().triplets() {
            dense[r * dim + c] = v.re;
        }
        let (energies, vectors) = lapack::lowest_eigenpairs(&mut dense, dim, k)?;
        let states = vectors
            .into_iter()
            .map(|v| {
                StateVector::new(space, v.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
            })
            .collect::<Result<_>>()?;
        return Ok(SpectrumReport { energies, states });
    }

    // Complex Hermitian: embed as a real symmetric matrix of twice the
    // dimension; every eigenvalue is doubled and the pair (x; y) maps back
    // to the complex eigenvector x + i y.
    let n2 = 2 * dim;
    if n2 > DENSE_SOLVE_CAP {
        return Err(Error::Capacity(format!(
            "embedded dimension {n2} exceeds the dense eigensolve cap {DENSE_SOLVE_CAP}"
        )));
    }
    let mut dense = vec![0.0f64; n2 * n2];
    for (r, c, v) in op.matrix().triplets() {
        dense[r * n2 + c] = v.re;
        dense[(r + dim) * n2 + (c + dim)] = v.re;
        dense[r * n2 + (c + dim)] = -v.im;
        dense[(r + dim) * n2 + c] = v.im;
    }
    let (all_energies, vectors) = lapack::lowest_eigenpairs(&mut dense, n2, 2 * k)?;
    let energies: Vec<f64> = all_energies.iter().step_by(2).copied().collect();
    let states = vectors
        .iter()
        .step_by(2)
        .map(|v| {
            let amps: Vec<Complex64> =
                (0..dim).map(|i| Complex64::new(v[i], v[i + dim])).collect();
            StateVector::normalized(space, amps)
        })
        .collect::<Result<_>>()?;
    Ok(SpectrumReport { energies, states })
}

/// One instantaneous-gap diagnostic point.
#[derive(Debug, Clone, PartialEq)]
pub struct GapPoint {
    pub time: f64,
    pub gap: f64,
    /// |<E_1| dH/dt |E_0>| / (E_1 - E_0)^2; infinite at a degenerate gap.
    pub adiabatic_ratio: f64,
}

/// dH/dt = (H_p - H_d)/T + ((1 - 2t/T)/T) H_ns.
pub(crate) fn schedule_derivative(
    set: &HamiltonianSet,
    schedule: &AnnealSchedule,
    t: f64,
) -> Result<SparseMatrix> {
    let total_time = schedule.total_time();
    if !(0.0..=total_time).contains(&t) {
        return Err(Error::TimeOutOfRange { t, total_time });
    }
    let s = t / total_time;
    Ok(SparseMatrix::linear_combination(&[
        (1.0 / total_time, set.problem().matrix()),
        (-1.0 / total_time, set.driver().matrix()),
        ((1.0 - 2.0 * s) / total_time, set.catalyst().matrix()),
    ]))
}

/// Evaluate the instantaneous gap and the adiabatic ratio on an evenly
/// spaced time grid over [0, T]. A gap below 1e-12 is reported as an
/// infinite ratio, never as an error.
pub fn adiabatic_diagnostic(
    set: &HamiltonianSet,
    schedule: &AnnealSchedule,
    grid_points: usize,
) -> Result<Vec<GapPoint>> {
    if grid_points < 2 {
        return Err(Error::InvalidSchedule("diagnostic grid needs at least 2 points".into()));
    }
    let total_time = schedule.total_time();
    let dim = set.space().dim();
    let mut out = Vec::with_capacity(grid_points);
    let mut applied = vec![Complex64::ZERO; dim];
    for i in 0..grid_points {
        let t = total_time * i as f64 / (grid_points - 1) as f64;
        let t = t.min(total_time);
        let hamiltonian = set.hamiltonian_at(schedule, t)?;
        let spectrum = exact_spectrum(&hamiltonian, 2.min(dim))?;
        let gap = spectrum.gap();
        let derivative = schedule_derivative(set, schedule, t)?;
        let ratio = if gap < 1e-12 {
            f64::INFINITY
        } else {
            derivative.matvec(spectrum.states()[0].amplitudes(), &mut applied);
            let element: Complex64 = spectrum.states()[1]
                .amplitudes()
                .iter()
                .zip(&applied)
                .map(|(a, b)| a.conj() * b)
                .sum();
            element.norm() / (gap * gap)
        };
        out.push(GapPoint { time: t, gap, adiabatic_ratio: ratio });
    }
    Ok(out)
}

/// Repeat the full build-and-evolve at increasing truncation (step +2) until
/// every quadrature changes by less than `tol` between consecutive
/// truncations; returns the first converged result (the smaller truncation
/// of the passing pair). An infinite `tol` accepts `d_start` immediately.
pub fn converge_truncation(
    problem: &RegressionProblem,
    schedule: &AnnealSchedule,
    d_start: usize,
    d_max: usize,
    tol: f64,
) -> Result<(usize, AnnealResult)> {
    if d_start < 2 {
        return Err(Error::InvalidDimension("d_start must be at least 2".into()));
    }
    if d_max < d_start {
        return Err(Error::InvalidDimension("d_max must be at least d_start".into()));
    }

    let run = |levels: usize| -> Result<AnnealResult> {
        let space = ModeSpace::new(problem.num_parameters(), levels)?;
        let set = HamiltonianSet::for_problem(problem, &space, schedule)?;
        evolve(&set, schedule, &initial_state(space), 0)
    };

    let mut prev_d = d_start;
    let mut prev = run(d_start)?;
    if tol.is_infinite() {
        return Ok((prev_d, prev));
    }

    let mut last_delta = f64::INFINITY;
    let mut d = d_start + 2;
    while d <= d_max {
        let current = run(d)?;
        last_delta = prev
            .quadratures
            .iter()
            .zip(&current.quadratures)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if last_delta < tol {
            return Ok((prev_d, prev));
        }
        prev_d = d;
        prev = current;
        d += 2;
    }
    Err(Error::TruncationNotConverged { d_max, last_delta })
}
