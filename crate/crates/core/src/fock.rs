//! Operators and states on truncated multi-mode bosonic Fock spaces.
//!
//! Each of the `M` modes keeps its lowest `d` number states, so the full
//! space has dimension `d^M`. Mode 0 is the leftmost Kronecker factor, i.e.
//! the slowest-varying index: the basis state |n_0, ..., n_{M-1}> sits at
//! flat index n_0 * d^{M-1} + n_1 * d^{M-2} + ... + n_{M-1}.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use num_complex::Complex64;
use std::ops::Deref;

/// Builders use exact arithmetic on sqrt(n); only rounding noise is expected.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Norm tolerance for state construction and renormalization checkpoints.
pub const STATE_NORM_TOL: f64 = 1e-9;
/// Imaginary residual allowed (and discarded) in a Hermitian expectation.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-9;

/// A register of `num_modes` bosonic modes, each truncated to
/// `levels_per_mode` Fock levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeSpace {
    num_modes: usize,
    levels_per_mode: usize,
}

impl ModeSpace {
    /// `levels_per_mode = 1` is permitted only for degenerate tests; any
    /// space used in dynamics should have at least two levels.
    pub fn new(num_modes: usize, levels_per_mode: usize) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::InvalidDimension("num_modes must be positive".into()));
        }
        if levels_per_mode == 0 {
            return Err(Error::InvalidDimension("levels_per_mode must be positive".into()));
        }
        let mut dim = 1usize;
        for _ in 0..num_modes {
            dim = dim.checked_mul(levels_per_mode).ok_or_else(|| {
                Error::InvalidDimension(format!(
                    "total dimension {levels_per_mode}^{num_modes} overflows usize"
                ))
            })?;
        }
        Ok(ModeSpace { num_modes, levels_per_mode })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn levels_per_mode(&self) -> usize {
        self.levels_per_mode
    }

    /// Total Hilbert-space dimension d^M.
    pub fn dim(&self) -> usize {
        self.levels_per_mode.pow(self.num_modes as u32)
    }

    /// Occupation numbers (n_0, ..., n_{M-1}) of the basis state at `index`.
    pub fn occupation(&self, index: usize) -> Vec<usize> {
        debug_assert!(index < self.dim());
        let d = self.levels_per_mode;
        let mut out = vec![0usize; self.num_modes];
        let mut rem = index;
        for m in (0..self.num_modes).rev() {
            out[m] = rem % d;
            rem /= d;
        }
        out
    }

    /// Flat index of the basis state with the given occupations.
    pub fn index_of(&self, occupation: &[usize]) -> Result<usize> {
        if occupation.len() != self.num_modes {
            return Err(Error::LengthMismatch {
                expected: self.num_modes,
                got: occupation.len(),
            });
        }
        let d = self.levels_per_mode;
        let mut index = 0usize;
        for &n in occupation {
            if n >= d {
                return Err(Error::InvalidDimension(format!(
                    "occupation {n} exceeds truncation {d}"
                )));
            }
            index = index * d + n;
        }
        Ok(index)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.num_modes {
            return Err(Error::ModeIndexOutOfRange { index: mode, num_modes: self.num_modes });
        }
        Ok(())
    }
}

/// A (not necessarily Hermitian) linear operator on a [`ModeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: ModeSpace,
    matrix: SparseMatrix,
}

impl Operator {
    pub fn new(space: ModeSpace, matrix: SparseMatrix) -> Result<Self> {
        if matrix.dim() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimension {} does not match space dimension {}",
                matrix.dim(),
                space.dim()
            )));
        }
        Ok(Operator { space, matrix })
    }

    pub fn identity(space: ModeSpace) -> Self {
        Operator { space, matrix: SparseMatrix::identity(space.dim()) }
    }

    pub fn zero(space: ModeSpace) -> Self {
        Operator { space, matrix: SparseMatrix::zeros(space.dim()) }
    }

    pub fn space(&self) -> ModeSpace {
        self.space
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Operator { space: self.space, matrix: self.matrix.adjoint() }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Operator { space: self.space, matrix: self.matrix.scaled(factor) }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_space(rhs)?;
        Ok(Operator { space: self.space, matrix: self.matrix.add(&rhs.matrix) })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_space(rhs)?;
        Ok(Operator { space: self.space, matrix: self.matrix.sub(&rhs.matrix) })
    }

    /// Operator product `self ∘ rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.check_space(rhs)?;
        Ok(Operator { space: self.space, matrix: self.matrix.matmul(&rhs.matrix) })
    }

    /// [self, rhs] = self·rhs − rhs·self.
    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        let ab = self.matmul(rhs)?;
        let ba = rhs.matmul(self)?;
        ab.sub(&ba)
    }

    /// Promote to a [`HermitianOperator`], verifying the invariant.
    pub fn into_hermitian(self) -> Result<HermitianOperator> {
        let defect = self.matrix.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(Error::NonHermitian { defect });
        }
        Ok(HermitianOperator(self))
    }

    fn check_space(&self, rhs: &Self) -> Result<()> {
        if self.space != rhs.space {
            return Err(Error::DimensionMismatch(
                "operators live on different mode spaces".into(),
            ));
        }
        Ok(())
    }
}

/// An operator whose matrix equals its own conjugate transpose to within
/// [`HERMITICITY_TOL`], checked at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(Operator);

impl HermitianOperator {
    pub fn as_operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }
}

impl Deref for HermitianOperator {
    type Target = Operator;

    fn deref(&self) -> &Operator {
        &self.0
    }
}

/// A pure state on a [`ModeSpace`].
#[derive(Debug, Clone)]
pub struct StateVector {
    space: ModeSpace,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Requires the amplitudes to be normalized within [`STATE_NORM_TOL`].
    pub fn new(space: ModeSpace, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::LengthMismatch { expected: space.dim(), got: amplitudes.len() });
        }
        let state = StateVector { space, amplitudes };
        let defect = (1.0 - state.norm()).abs();
        if defect > STATE_NORM_TOL {
            return Err(Error::NotNormalized { defect });
        }
        Ok(state)
    }

    /// Normalizes the amplitudes, then constructs.
    pub fn normalized(space: ModeSpace, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::LengthMismatch { expected: space.dim(), got: amplitudes.len() });
        }
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::NotNormalized { defect: 1.0 });
        }
        for c in &mut amplitudes {
            *c /= norm;
        }
        Ok(StateVector { space, amplitudes })
    }

    /// Bypasses the norm check; for integrator output, whose final state is
    /// deliberately left unrenormalized (the drift is a diagnostic).
    pub(crate) fn from_raw(space: ModeSpace, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), space.dim());
        StateVector { space, amplitudes }
    }

    /// The Fock basis state with the given occupations.
    pub fn fock_state(space: ModeSpace, occupation: &[usize]) -> Result<Self> {
        let index = space.index_of(occupation)?;
        let mut amplitudes = vec![Complex64::ZERO; space.dim()];
        amplitudes[index] = Complex64::ONE;
        Ok(StateVector { space, amplitudes })
    }

    /// The multimode vacuum |0...0>.
    pub fn vacuum(space: ModeSpace) -> Self {
        let mut amplitudes = vec![Complex64::ZERO; space.dim()];
        amplitudes[0] = Complex64::ONE;
        StateVector { space, amplitudes }
    }

    /// Product of truncated coherent states with real amplitudes, built from
    /// exp(-|a|^2/2) a^n / sqrt(n!) per mode and renormalized to absorb the
    /// truncated tail.
    pub fn coherent_state(space: ModeSpace, alphas: &[f64]) -> Result<Self> {
        if alphas.len() != space.num_modes() {
            return Err(Error::LengthMismatch {
                expected: space.num_modes(),
                got: alphas.len(),
            });
        }
        let d = space.levels_per_mode();
        let per_mode: Vec<Vec<f64>> = alphas
            .iter()
            .map(|&a| {
                let mut amps = Vec::with_capacity(d);
                let mut amp = (-a * a / 2.0).exp();
                for n in 0..d {
                    if n > 0 {
                        amp *= a / (n as f64).sqrt();
                    }
                    amps.push(amp);
                }
                amps
            })
            .collect();
        let amplitudes = (0..space.dim())
            .map(|idx| {
                let occ = space.occupation(idx);
                let prod: f64 = occ.iter().zip(&per_mode).map(|(&n, amps)| amps[n]).product();
                Complex64::new(prod, 0.0)
            })
            .collect();
        Self::normalized(space, amplitudes)
    }

    pub fn space(&self) -> ModeSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// <self|other>.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Single-mode annihilation operator on a `d`-level truncation:
/// entry sqrt(n) at (n-1, n), so a|n> = sqrt(n)|n-1> and a|0> = 0.
pub fn build_annihilation(levels: usize) -> Result<Operator> {
    let space = ModeSpace::new(1, levels)?;
    let matrix = SparseMatrix::from_triplets(
        levels,
        (1..levels).map(|n| (n - 1, n, Complex64::new((n as f64).sqrt(), 0.0))),
    );
    Operator::new(space, matrix)
}

/// Single-mode creation operator, the adjoint of [`build_annihilation`].
pub fn build_creation(levels: usize) -> Result<Operator> {
    Ok(build_annihilation(levels)?.adjoint())
}

/// Embed a single-mode operator into the full space at `mode_index`:
/// I^(⊗ m) ⊗ op ⊗ I^(⊗ M−1−m), with mode 0 the leftmost factor.
pub fn lift_to_mode(op: &Operator, mode_index: usize, space: &ModeSpace) -> Result<Operator> {
    space.check_mode(mode_index)?;
    if op.space().dim() != space.levels_per_mode() {
        return Err(Error::DimensionMismatch(format!(
            "single-mode operator dimension {} does not match levels_per_mode {}",
            op.space().dim(),
            space.levels_per_mode()
        )));
    }
    let d = space.levels_per_mode();
    let left = SparseMatrix::identity(d.pow(mode_index as u32));
    let right = SparseMatrix::identity(d.pow((space.num_modes() - 1 - mode_index) as u32));
    let lifted = left.kron(op.matrix()).kron(&right);
    Operator::new(*space, lifted)
}

/// The quadrature (a_m + a_m†)/2 lifted to the full space. Its expectation
/// on the annealed state reads out the m-th regression parameter.
pub fn quadrature(space: &ModeSpace, mode_index: usize) -> Result<HermitianOperator> {
    let a = build_annihilation(space.levels_per_mode())?;
    let x = a.add(&a.adjoint())?.scaled(Complex64::new(0.5, 0.0));
    lift_to_mode(&x, mode_index, space)?.into_hermitian()
}

/// The number operator a_m†a_m lifted to the full space.
pub fn number_operator(space: &ModeSpace, mode_index: usize) -> Result<HermitianOperator> {
    let d = space.levels_per_mode();
    let n = Operator::new(
        ModeSpace::new(1, d)?,
        SparseMatrix::from_triplets(d, (1..d).map(|n| (n, n, Complex64::new(n as f64, 0.0)))),
    )?;
    lift_to_mode(&n, mode_index, space)?.into_hermitian()
}

/// <psi|op|psi> for a Hermitian operator on a normalized state. The imaginary
/// residual is checked against [`EXPECTATION_IMAG_TOL`] and discarded.
pub fn expectation(op: &HermitianOperator, psi: &StateVector) -> Result<f64> {
    if op.space() != psi.space() {
        return Err(Error::DimensionMismatch(
            "operator and state live on different mode spaces".into(),
        ));
    }
    let value = raw_expectation(op.as_operator(), psi);
    if value.im.abs() > EXPECTATION_IMAG_TOL {
        return Err(Error::NonHermitianExpectation { imag: value.im });
    }
    Ok(value.re)
}

/// <psi|op|psi> without Hermiticity bookkeeping.
pub fn raw_expectation(op: &Operator, psi: &StateVector) -> Complex64 {
    let mut applied = vec![Complex64::ZERO; psi.amplitudes().len()];
    op.matrix().matvec(psi.amplitudes(), &mut applied);
    psi.amplitudes()
        .iter()
        .zip(&applied)
        .map(|(a, b)| a.conj() * b)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn annihilation_d1_is_zero() {
        let a = build_annihilation(1).unwrap();
        assert_eq!(a.matrix().nnz(), 0);
    }

    #[test]
    fn annihilation_d2() {
        let a = build_annihilation(2).unwrap();
        assert_eq!(a.matrix().get(0, 1), Complex64::ONE);
        assert_eq!(a.matrix().nnz(), 1);
    }

    #[test]
    fn annihilation_d3_ladder() {
        let a = build_annihilation(3).unwrap();
        assert_eq!(a.matrix().get(0, 1), Complex64::ONE);
        assert_abs_diff_eq!(a.matrix().get(1, 2).re, 2.0_f64.sqrt(), epsilon = 1e-15);
        assert_eq!(a.matrix().nnz(), 2);
    }

    #[test]
    fn annihilation_d0_rejected() {
        assert!(matches!(build_annihilation(0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn annihilation_lowers_fock_states() {
        // a|n> = sqrt(n)|n-1>, a|0> = 0, for every truncation.
        for d in 1..8 {
            let space = ModeSpace::new(1, d).unwrap();
            let a = build_annihilation(d).unwrap();
            for n in 0..d {
                let psi = StateVector::fock_state(space, &[n]).unwrap();
                let mut out = vec![Complex64::ZERO; d];
                a.matrix().matvec(psi.amplitudes(), &mut out);
                for (idx, &amp) in out.iter().enumerate() {
                    let expected = if n > 0 && idx == n - 1 { (n as f64).sqrt() } else { 0.0 };
                    assert_abs_diff_eq!(amp.re, expected, epsilon = 1e-15);
                    assert_eq!(amp.im, 0.0);
                }
            }
        }
    }

    #[test]
    fn truncated_commutator_is_identity_minus_top_level() {
        // [a, a†] = I except the (d-1, d-1) entry, which is 1-d.
        for d in 2..9 {
            let a = build_annihilation(d).unwrap();
            let comm = a.commutator(&a.adjoint()).unwrap();
            for r in 0..d {
                for c in 0..d {
                    let expected = if r == c {
                        if r == d - 1 {
                            1.0 - d as f64
                        } else {
                            1.0
                        }
                    } else {
                        0.0
                    };
                    assert_abs_diff_eq!(comm.matrix().get(r, c).re, expected, epsilon = 1e-12);
                    assert_eq!(comm.matrix().get(r, c).im, 0.0);
                }
            }
        }
    }

    #[test]
    fn lift_identity_gives_identity() {
        let space = ModeSpace::new(3, 2).unwrap();
        let id = Operator::identity(ModeSpace::new(1, 2).unwrap());
        for m in 0..3 {
            let lifted = lift_to_mode(&id, m, &space).unwrap();
            assert_eq!(lifted.matrix(), Operator::identity(space).matrix());
        }
    }

    #[test]
    fn lift_to_mode_zero_is_left_kron_factor() {
        let space = ModeSpace::new(2, 2).unwrap();
        let a = build_annihilation(2).unwrap();
        let lifted = lift_to_mode(&a, 0, &space).unwrap();
        let expected = a.matrix().kron(&SparseMatrix::identity(2));
        assert_eq!(lifted.matrix(), &expected);
    }

    #[test]
    fn lift_rejects_bad_mode_and_dimension() {
        let space = ModeSpace::new(2, 3).unwrap();
        let a = build_annihilation(3).unwrap();
        assert!(matches!(
            lift_to_mode(&a, 2, &space),
            Err(Error::ModeIndexOutOfRange { .. })
        ));
        let wrong = build_annihilation(2).unwrap();
        assert!(matches!(
            lift_to_mode(&wrong, 0, &space),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn distinct_mode_operators_commute() {
        let space = ModeSpace::new(2, 2).unwrap();
        let a = build_annihilation(2).unwrap();
        let a0 = lift_to_mode(&a, 0, &space).unwrap();
        let adag1 = lift_to_mode(&a.adjoint(), 1, &space).unwrap();
        let comm = a0.commutator(&adag1).unwrap();
        assert_eq!(comm.matrix().nnz(), 0);
    }

    #[test]
    fn quadrature_matrix_d2() {
        let space = ModeSpace::new(1, 2).unwrap();
        let x = quadrature(&space, 0).unwrap();
        assert_abs_diff_eq!(x.matrix().get(0, 1).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(x.matrix().get(1, 0).re, 0.5, epsilon = 1e-15);
        assert_eq!(x.matrix().get(0, 0), Complex64::ZERO);
    }

    #[test]
    fn quadrature_rejects_bad_mode() {
        let space = ModeSpace::new(1, 4).unwrap();
        assert!(quadrature(&space, 1).is_err());
    }

    #[test]
    fn vacuum_expectations() {
        let space = ModeSpace::new(2, 3).unwrap();
        let vac = StateVector::vacuum(space);
        for m in 0..2 {
            assert_eq!(expectation(&number_operator(&space, m).unwrap(), &vac).unwrap(), 0.0);
            assert_eq!(expectation(&quadrature(&space, m).unwrap(), &vac).unwrap(), 0.0);
        }
    }

    #[test]
    fn quadrature_on_fock_one_vanishes() {
        let space = ModeSpace::new(1, 3).unwrap();
        let psi = StateVector::fock_state(space, &[1]).unwrap();
        let x = quadrature(&space, 0).unwrap();
        assert_eq!(expectation(&x, &psi).unwrap(), 0.0);
    }

    #[test]
    fn coherent_state_quadrature_reads_amplitude() {
        // Oracle: the coherent amplitudes are constructed directly from
        // exp(-a^2/2) a^n / sqrt(n!), independent of any operator algebra.
        let space = ModeSpace::new(1, 16).unwrap();
        let psi = StateVector::coherent_state(space, &[0.5]).unwrap();
        let x = quadrature(&space, 0).unwrap();
        assert_abs_diff_eq!(expectation(&x, &psi).unwrap(), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn expectation_rejects_space_mismatch() {
        let s1 = ModeSpace::new(1, 3).unwrap();
        let s2 = ModeSpace::new(1, 4).unwrap();
        let x = quadrature(&s1, 0).unwrap();
        let psi = StateVector::vacuum(s2);
        assert!(expectation(&x, &psi).is_err());
    }

    #[test]
    fn mode_ordering_round_trip() {
        let space = ModeSpace::new(3, 4).unwrap();
        for idx in 0..space.dim() {
            let occ = space.occupation(idx);
            assert_eq!(space.index_of(&occ).unwrap(), idx);
        }
        // Mode 0 is the slowest-varying index.
        assert_eq!(space.index_of(&[1, 0, 0]).unwrap(), 16);
        assert_eq!(space.index_of(&[0, 0, 1]).unwrap(), 1);
    }

    #[test]
    fn non_hermitian_promotion_fails() {
        let a = build_annihilation(3).unwrap();
        assert!(matches!(a.into_hermitian(), Err(Error::NonHermitian { .. })));
    }

    proptest! {
        #[test]
        fn quadratures_hermitian_for_random_spaces(
            num_modes in 1usize..=3,
            levels in 2usize..=8,
        ) {
            let space = ModeSpace::new(num_modes, levels).unwrap();
            for m in 0..num_modes {
                let x = quadrature(&space, m).unwrap();
                prop_assert!(x.matrix().hermiticity_defect() <= HERMITICITY_TOL);
            }
        }

        #[test]
        fn lifted_distinct_modes_commute_exactly(
            levels in 2usize..=5,
            seed in 0u64..50,
        ) {
            let space = ModeSpace::new(2, levels).unwrap();
            let a = build_annihilation(levels).unwrap();
            let ops = [a.clone(), a.adjoint(), a.matmul(&a.adjoint()).unwrap()];
            let i = (seed % 3) as usize;
            let j = ((seed / 3) % 3) as usize;
            let lhs = lift_to_mode(&ops[i], 0, &space).unwrap();
            let rhs = lift_to_mode(&ops[j], 1, &space).unwrap();
            prop_assert_eq!(lhs.commutator(&rhs).unwrap().matrix().nnz(), 0);
        }

        #[test]
        fn hermitian_expectation_is_real_on_random_states(
            levels in 2usize..=6,
            seed in 0u64..100,
        ) {
            let space = ModeSpace::new(1, levels).unwrap();
            let amps: Vec<Complex64> = (0..levels)
                .map(|n| {
                    let phase = (seed as f64 + 1.0) * (n as f64 + 0.3);
                    Complex64::new(phase.sin(), phase.cos()) * (1.0 / (n as f64 + 1.0))
                })
                .collect();
            let psi = StateVector::normalized(space, amps).unwrap();
            let n_op = number_operator(&space, 0).unwrap();
            let x = quadrature(&space, 0).unwrap();
            prop_assert!(expectation(&n_op, &psi).is_ok());
            prop_assert!(expectation(&x, &psi).is_ok());
        }
    }
}
