//! Binary-encoded baseline: each regression parameter is approximated by a
//! weighted sum of bits, theta_m = sum_k p_k b_mk, with the weights taken
//! from a precision vector of signed powers of two. Substituting into the
//! quadratic cost gives a QUBO whose objective on any assignment equals the
//! regression cost of the decoded point exactly; the global minimum is found
//! by exhaustive enumeration, which removes solver noise from the
//! discretization-error comparison.

use crate::error::{Error, Result};
use crate::regression::RegressionProblem;
use ndarray::Array2;
use rayon::prelude::*;

/// Enumeration is capped at this many binary variables (~1.7e7 assignments).
pub const MAX_BITS: usize = 24;

/// The precision (accuracy) vector: the list of signed power-of-two weights
/// defining the discrete parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionVector {
    entries: Vec<f64>,
}

fn is_signed_power_of_two(p: f64) -> bool {
    if !p.is_finite() || p == 0.0 {
        return false;
    }
    let bits = p.abs().to_bits();
    let mantissa = bits & ((1u64 << 52) - 1);
    let exponent = bits >> 52;
    mantissa == 0 && exponent != 0 && exponent != 0x7ff
}

impl PrecisionVector {
    /// Every entry must have magnitude equal to an integer power of two
    /// (negative weights are allowed for signed parameters).
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidPrecision("precision vector must be non-empty".into()));
        }
        for &p in &entries {
            if !is_signed_power_of_two(p) {
                return Err(Error::InvalidPrecision(format!(
                    "entry {p} is not a (signed) integer power of two"
                )));
            }
        }
        Ok(PrecisionVector { entries })
    }

    /// The default family [2, 1, 1/2, ..., 2^(2-k)]: descending powers whose
    /// subset sums cover [0, 4) at resolution 2^(2-k).
    pub fn descending_family(bits: usize) -> Result<Self> {
        if bits == 0 {
            return Err(Error::InvalidPrecision("precision vector must be non-empty".into()));
        }
        Self::new((0..bits).map(|k| 2.0_f64.powi(1 - k as i32)).collect())
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn bits_per_parameter(&self) -> usize {
        self.entries.len()
    }
}

/// The binary quadratic objective obtained by substituting the bit expansion
/// into theta' A theta - B' theta. Stored as a symmetric matrix with the
/// linear terms folded onto the diagonal; variable (m, k) lives at flat
/// index m * K + k.
#[derive(Debug, Clone)]
pub struct QuboProblem {
    matrix: Array2<f64>,
    precision: PrecisionVector,
    num_parameters: usize,
}

/// Substitute the bit expansion into the cost of `problem`. Fails with a
/// capacity error when K * M exceeds [`MAX_BITS`].
pub fn encode(problem: &RegressionProblem, precision: &PrecisionVector) -> Result<QuboProblem> {
    let m = problem.num_parameters();
    let k = precision.bits_per_parameter();
    let bits = m * k;
    if bits > MAX_BITS {
        return Err(Error::Capacity(format!(
            "{m} parameters x {k} bits = {bits} binary variables exceeds the enumeration bound {MAX_BITS}"
        )));
    }
    let gram = problem.gram();
    let moment = problem.moment();
    let weights = precision.entries();

    let mut matrix = Array2::<f64>::zeros((bits, bits));
    for pm in 0..m {
        for pl in 0..m {
            for bk in 0..k {
                for bl in 0..k {
                    matrix[(pm * k + bk, pl * k + bl)] += gram[(pm, pl)] * weights[bk] * weights[bl];
                }
            }
        }
    }
    for pm in 0..m {
        for bk in 0..k {
            let i = pm * k + bk;
            matrix[(i, i)] -= moment[pm] * weights[bk];
        }
    }
    Ok(QuboProblem { matrix, precision: precision.clone(), num_parameters: m })
}

/// The enumeration result: the optimal assignment (one 0/1 per flat
/// variable), its objective, and the decoded parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboSolution {
    pub assignment: Vec<u8>,
    pub objective: f64,
    pub parameters: Vec<f64>,
}

impl QuboProblem {
    pub fn num_bits(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_parameters(&self) -> usize {
        self.num_parameters
    }

    pub fn precision(&self) -> &PrecisionVector {
        &self.precision
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// theta_m = sum_k p_k b_mk.
    pub fn decode(&self, assignment: &[u8]) -> Result<Vec<f64>> {
        if assignment.len() != self.num_bits() {
            return Err(Error::LengthMismatch {
                expected: self.num_bits(),
                got: assignment.len(),
            });
        }
        let k = self.precision.bits_per_parameter();
        let weights = self.precision.entries();
        Ok((0..self.num_parameters)
            .map(|m| {
                (0..k)
                    .map(|bk| f64::from(assignment[m * k + bk]) * weights[bk])
                    .sum()
            })
            .collect())
    }

    /// The binary objective at an assignment; equals the regression cost of
    /// the decoded point.
    pub fn objective(&self, assignment: &[u8]) -> Result<f64> {
        if assignment.len() != self.num_bits() {
            return Err(Error::LengthMismatch {
                expected: self.num_bits(),
                got: assignment.len(),
            });
        }
        let mut code = 0u32;
        for (i, &b) in assignment.iter().enumerate() {
            if b != 0 {
                code |= 1 << i;
            }
        }
        Ok(self.objective_of_code(code))
    }

    fn objective_of_code(&self, code: u32) -> f64 {
        let mut set = [0usize; MAX_BITS];
        let mut count = 0;
        let mut rest = code;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            set[count] = i;
            count += 1;
            rest &= rest - 1;
        }
        let mut acc = 0.0;
        for a in 0..count {
            let i = set[a];
            acc += self.matrix[(i, i)];
            for b in (a + 1)..count {
                acc += 2.0 * self.matrix[(i, set[b])];
            }
        }
        acc
    }

    fn assignment_of_code(&self, code: u32) -> Vec<u8> {
        (0..self.num_bits()).map(|i| ((code >> i) & 1) as u8).collect()
    }

    /// Global minimum over all 2^(K*M) assignments, ties broken by the
    /// lowest assignment code (bit i of the code is variable i). The
    /// enumeration is partitioned by assignment prefix across workers; the
    /// tie-break makes the reduction independent of the partitioning.
    pub fn solve_exact(&self) -> QuboSolution {
        let bits = self.num_bits();
        debug_assert!(bits <= MAX_BITS);
        let total: u64 = 1u64 << bits;

        let scan_range = |lo: u64, hi: u64| -> (f64, u32) {
            let mut best = (f64::INFINITY, 0u32);
            for code in lo..hi {
                let code = code as u32;
                let value = self.objective_of_code(code);
                if value < best.0 || (value == best.0 && code < best.1) {
                    best = (value, code);
                }
            }
            best
        };

        let serial_bits = 16u32;
        let (best_objective, best_code) = if bits as u32 <= serial_bits {
            scan_range(0, total)
        } else {
            let chunk = 1u64 << serial_bits;
            let partitions = total / chunk;
            (0..partitions)
                .into_par_iter()
                .map(|p| scan_range(p * chunk, (p + 1) * chunk))
                .reduce(
                    || (f64::INFINITY, u32::MAX),
                    |a, b| {
                        if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                            b
                        } else {
                            a
                        }
                    },
                )
        };

        let assignment = self.assignment_of_code(best_code);
        let parameters = self.decode(&assignment).expect("assignment length matches");
        QuboSolution { assignment, objective: best_objective, parameters }
    }
}

/// Free-function form of [`QuboProblem::solve_exact`].
pub fn solve_exact(qubo: &QuboProblem) -> QuboSolution {
    qubo.solve_exact()
}

/// One row of the discretization-error table.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationRow {
    pub bits_per_parameter: usize,
    pub parameters: Vec<f64>,
    pub objective: f64,
    /// solve_exact objective minus cost(theta*); nonnegative up to rounding.
    pub gap_vs_continuous: f64,
}

/// Solve the QUBO for each precision vector and tabulate the cost gap
/// against the continuous optimum, sorted by bits per parameter.
pub fn discretization_report(
    problem: &RegressionProblem,
    precisions: &[PrecisionVector],
) -> Result<Vec<DiscretizationRow>> {
    let theta_star = problem.least_squares_solution()?;
    let optimum = problem.cost(theta_star.as_slice().unwrap())?;
    let mut rows = Vec::with_capacity(precisions.len());
    for precision in precisions {
        let qubo = encode(problem, precision)?;
        let solution = qubo.solve_exact();
        rows.push(DiscretizationRow {
            bits_per_parameter: precision.bits_per_parameter(),
            parameters: solution.parameters,
            objective: solution.objective,
            gap_vs_continuous: solution.objective - optimum,
        });
    }
    rows.sort_by_key(|row| row.bits_per_parameter);
    Ok(rows)
}
