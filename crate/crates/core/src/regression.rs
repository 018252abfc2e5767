//! Dataset ingestion, design-matrix assembly, and the closed-form
//! least-squares solution that serves as the ground-truth oracle.
//!
//! The quadratic cost is kept in the form theta' A theta - B' theta with
//! A = design' * design and B = 2 * design' * targets; its unique minimizer
//! is theta* = A^{-1} B / 2.

use crate::error::{Error, Result};
use crate::lapack;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// Smallest admissible eigenvalue of the gram matrix.
pub const GRAM_MIN_EIGENVALUE: f64 = 1e-10;

/// A numeric table: named columns, one `Vec<f64>` row per record.
#[derive(Debug, Clone)]
pub struct Dataset {
    name: String,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    dropped_rows: usize,
}

impl Dataset {
    pub fn new(name: impl Into<String>, columns: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        Dataset { name: name.into(), columns, rows, dropped_rows: 0 }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Rows discarded during ingestion because a requested cell was missing
    /// or unparseable.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }
}

/// Load the named numeric columns from a headered CSV file. Rows with any
/// empty or unparseable requested cell are dropped and counted.
pub fn load_csv(path: impl AsRef<Path>, columns: &[&str]) -> Result<Dataset> {
    load_csv_impl(path.as_ref(), columns, None)
}

/// [`load_csv`] restricted to rows whose `filter_column` cell equals
/// `filter_value` (string comparison before numeric parsing). Rows excluded
/// by the filter are not counted as dropped.
pub fn load_csv_where(
    path: impl AsRef<Path>,
    columns: &[&str],
    filter_column: &str,
    filter_value: &str,
) -> Result<Dataset> {
    load_csv_impl(path.as_ref(), columns, Some((filter_column, filter_value)))
}

fn load_csv_impl(path: &Path, columns: &[&str], filter: Option<(&str, &str)>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header row: {e}")))?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Schema(format!(
                "column {name:?} not found; available: {:?}",
                headers.iter().collect::<Vec<_>>()
            ))
        })
    };
    let column_indices: Vec<usize> = columns.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let filter_index = match filter {
        Some((col, _)) => Some(find(col)?),
        None => None,
    };

    let mut rows = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Schema(format!("malformed CSV record: {e}")))?;
        if let (Some(idx), Some((_, want))) = (filter_index, filter) {
            if record.get(idx).map(str::trim) != Some(want) {
                continue;
            }
        }
        let parsed: Option<Vec<f64>> = column_indices
            .iter()
            .map(|&i| record.get(i).and_then(|cell| cell.trim().parse::<f64>().ok()))
            .collect();
        match parsed {
            Some(row) => rows.push(row),
            None => dropped += 1,
        }
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    if rows.is_empty() {
        return Err(Error::EmptyDataset { name, dropped });
    }
    Ok(Dataset {
        name,
        columns: columns.iter().map(|s| s.to_string()).collect(),
        rows,
        dropped_rows: dropped,
    })
}

/// One basis function of the linear model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFunction {
    /// Reads feature column `m` of the record unchanged.
    Feature(usize),
    /// The constant-one intercept column.
    Intercept,
}

impl BasisFunction {
    fn evaluate(&self, features: &[f64]) -> Result<f64> {
        match *self {
            BasisFunction::Feature(i) => features.get(i).copied().ok_or(Error::LengthMismatch {
                expected: i + 1,
                got: features.len(),
            }),
            BasisFunction::Intercept => Ok(1.0),
        }
    }
}

/// The model f(x) = sum_m theta_m phi_m(x), an ordered list of basis
/// functions with parameter labels.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    basis: Vec<BasisFunction>,
    parameter_names: Vec<String>,
}

impl ModelSpec {
    pub fn new(basis: Vec<BasisFunction>, parameter_names: Vec<String>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::Schema("model has no basis functions".into()));
        }
        if basis.len() != parameter_names.len() {
            return Err(Error::LengthMismatch {
                expected: basis.len(),
                got: parameter_names.len(),
            });
        }
        Ok(ModelSpec { basis, parameter_names })
    }

    /// f(x) = theta_1 * x.
    pub fn single_slope(feature_name: &str) -> Self {
        ModelSpec {
            basis: vec![BasisFunction::Feature(0)],
            parameter_names: vec![feature_name.to_string()],
        }
    }

    /// f(x) = theta_1 * x + theta_2.
    pub fn slope_intercept(feature_name: &str) -> Self {
        ModelSpec {
            basis: vec![BasisFunction::Feature(0), BasisFunction::Intercept],
            parameter_names: vec![feature_name.to_string(), "intercept".to_string()],
        }
    }

    /// f(x) = theta_1 * x_1 + theta_2 * x_2 + theta_3.
    pub fn two_slopes_intercept(feature_1: &str, feature_2: &str) -> Self {
        ModelSpec {
            basis: vec![
                BasisFunction::Feature(0),
                BasisFunction::Feature(1),
                BasisFunction::Intercept,
            ],
            parameter_names: vec![
                feature_1.to_string(),
                feature_2.to_string(),
                "intercept".to_string(),
            ],
        }
    }

    pub fn basis(&self) -> &[BasisFunction] {
        &self.basis
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.parameter_names
    }

    pub fn num_parameters(&self) -> usize {
        self.basis.len()
    }
}

/// Affine column transform: standardized = (raw - offset) / scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnTransform {
    pub offset: f64,
    pub scale: f64,
}

impl ColumnTransform {
    pub fn identity() -> Self {
        ColumnTransform { offset: 0.0, scale: 1.0 }
    }

    pub fn apply(&self, raw: f64) -> f64 {
        (raw - self.offset) / self.scale
    }

    pub fn invert(&self, standardized: f64) -> f64 {
        standardized * self.scale + self.offset
    }
}

/// The assembled least-squares problem: design matrix, targets, and the
/// quadratic-cost matrices A = design' design, B = 2 design' targets.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    design: Array2<f64>,
    targets: Array1<f64>,
    gram: Array2<f64>,
    moment: Array1<f64>,
    column_transforms: Vec<ColumnTransform>,
    target_transform: ColumnTransform,
    parameter_names: Vec<String>,
}

impl RegressionProblem {
    /// Assemble from an explicit design matrix and target vector, without
    /// standardization.
    pub fn from_design(design: Array2<f64>, targets: Array1<f64>) -> Result<Self> {
        let names = (1..=design.ncols()).map(|m| format!("theta_{m}")).collect();
        Self::assemble(design, targets, None, names)
    }

    fn assemble(
        design: Array2<f64>,
        targets: Array1<f64>,
        transforms: Option<(Vec<ColumnTransform>, ColumnTransform)>,
        parameter_names: Vec<String>,
    ) -> Result<Self> {
        if design.nrows() != targets.len() {
            return Err(Error::LengthMismatch { expected: design.nrows(), got: targets.len() });
        }
        if design.ncols() == 0 || design.nrows() == 0 {
            return Err(Error::Schema("empty design matrix".into()));
        }
        let gram = design.t().dot(&design);
        let moment = design.t().dot(&targets) * 2.0;
        let (column_transforms, target_transform) = transforms.unwrap_or_else(|| {
            (vec![ColumnTransform::identity(); design.ncols()], ColumnTransform::identity())
        });
        let problem = RegressionProblem {
            design,
            targets,
            gram,
            moment,
            column_transforms,
            target_transform,
            parameter_names,
        };
        let (min_eig, max_eig) = problem.gram_eigenvalue_range()?;
        if min_eig <= GRAM_MIN_EIGENVALUE {
            return Err(Error::IllConditioned {
                min_eigenvalue: min_eig,
                condition: if min_eig > 0.0 { max_eig / min_eig } else { f64::INFINITY },
            });
        }
        Ok(problem)
    }

    /// Seeded random problem with O(1) positive-definite gram matrix and
    /// |theta*| <= 1.2 per coordinate; the workhorse of the oracle tests.
    pub fn synthetic(num_parameters: usize, seed: u64) -> Self {
        assert!(num_parameters >= 1);
        let m = num_parameters;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        // A = G' D G with eigenvalues in [0.5, 1.5] and G a product of
        // random Givens rotations over all index pairs.
        let mut a = Array2::<f64>::zeros((m, m));
        for i in 0..m {
            a[(i, i)] = rng.random_range(0.5..1.5);
        }
        for i in 0..m {
            for j in (i + 1)..m {
                let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let (sin, cos) = angle.sin_cos();
                let mut g = Array2::<f64>::eye(m);
                g[(i, i)] = cos;
                g[(j, j)] = cos;
                g[(i, j)] = -sin;
                g[(j, i)] = sin;
                a = g.t().dot(&a).dot(&g);
            }
        }
        a = (&a + &a.t()) / 2.0;

        let theta: Array1<f64> =
            Array1::from_iter((0..m).map(|_| rng.random_range(-1.2..1.2)));
        let moment = a.dot(&theta) * 2.0;

        // design = L' with A = L L', so design' design = A exactly up to
        // rounding; targets solve design' y = B / 2.
        let lower = cholesky(&a).expect("synthetic gram matrix is positive definite");
        let design = lower.t().to_owned();
        let targets = forward_substitute(&lower, &(&moment / 2.0));
        Self::from_design(design, targets).expect("synthetic problem is well conditioned")
    }

    pub fn num_parameters(&self) -> usize {
        self.gram.nrows()
    }

    pub fn num_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn design(&self) -> &Array2<f64> {
        &self.design
    }

    pub fn targets(&self) -> &Array1<f64> {
        &self.targets
    }

    /// A = design' design.
    pub fn gram(&self) -> &Array2<f64> {
        &self.gram
    }

    /// B = 2 design' targets.
    pub fn moment(&self) -> &Array1<f64> {
        &self.moment
    }

    pub fn column_transforms(&self) -> &[ColumnTransform] {
        &self.column_transforms
    }

    pub fn target_transform(&self) -> ColumnTransform {
        self.target_transform
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.parameter_names
    }

    /// Per-sample quadratic-cost coefficients (A/N, B/N). The annealing
    /// Hamiltonian is built from these: dividing by the record count leaves
    /// theta* untouched but keeps the energy scale comparable to the
    /// unit-frequency driver, which the fixed integrator step assumes.
    pub fn annealing_coefficients(&self) -> (Array2<f64>, Array1<f64>) {
        let n = self.num_rows() as f64;
        (&self.gram / n, &self.moment / n)
    }

    /// theta' A theta - B' theta.
    pub fn cost(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.num_parameters() {
            return Err(Error::LengthMismatch {
                expected: self.num_parameters(),
                got: theta.len(),
            });
        }
        let theta = Array1::from_vec(theta.to_vec());
        Ok(theta.dot(&self.gram.dot(&theta)) - self.moment.dot(&theta))
    }

    /// The unique minimizer theta* = A^{-1} B / 2 of [`Self::cost`].
    pub fn least_squares_solution(&self) -> Result<Array1<f64>> {
        let lower = cholesky(&self.gram).ok_or_else(|| {
            let (min_eig, max_eig) = self.gram_eigenvalue_range().unwrap_or((0.0, 0.0));
            Error::IllConditioned {
                min_eigenvalue: min_eig,
                condition: if min_eig > 0.0 { max_eig / min_eig } else { f64::INFINITY },
            }
        })?;
        let half_moment = &self.moment / 2.0;
        let forward = forward_substitute(&lower, &half_moment);
        let theta = back_substitute(&lower, &forward);

        let residual = (self.gram.dot(&theta) - &half_moment)
            .iter()
            .map(|r| r * r)
            .sum::<f64>()
            .sqrt();
        let moment_norm = self.moment.dot(&self.moment).sqrt();
        if residual > 1e-10 * moment_norm {
            let (min_eig, max_eig) = self.gram_eigenvalue_range()?;
            return Err(Error::IllConditioned {
                min_eigenvalue: min_eig,
                condition: if min_eig > 0.0 { max_eig / min_eig } else { f64::INFINITY },
            });
        }
        Ok(theta)
    }

    /// Prediction in original (de-standardized) units for a raw feature
    /// record: basis values are pushed through the recorded column
    /// transforms, combined with `theta`, and mapped back through the target
    /// transform.
    pub fn predict_original_units(
        &self,
        spec: &ModelSpec,
        theta: &[f64],
        raw_features: &[f64],
    ) -> Result<f64> {
        if theta.len() != spec.num_parameters() || theta.len() != self.num_parameters() {
            return Err(Error::LengthMismatch {
                expected: self.num_parameters(),
                got: theta.len(),
            });
        }
        let mut standardized = 0.0;
        for ((basis, transform), &coeff) in
            spec.basis().iter().zip(&self.column_transforms).zip(theta)
        {
            standardized += coeff * transform.apply(basis.evaluate(raw_features)?);
        }
        Ok(self.target_transform.invert(standardized))
    }

    fn gram_eigenvalue_range(&self) -> Result<(f64, f64)> {
        let m = self.gram.nrows();
        let mut buf: Vec<f64> = self.gram.iter().copied().collect();
        let eigs = lapack::eigenvalues(&mut buf, m)?;
        Ok((eigs[0], eigs[m - 1]))
    }
}

/// Assemble the regression problem for a dataset and model. The dataset's
/// last column is the target; the preceding columns are the features that
/// [`BasisFunction::Feature`] indexes. With `standardize` set, non-intercept
/// design columns and the target are z-scored (zero mean, unit population
/// variance) and the affine transforms recorded.
pub fn build_problem(
    data: &Dataset,
    spec: &ModelSpec,
    standardize: bool,
) -> Result<RegressionProblem> {
    let m = spec.num_parameters();
    let n = data.num_rows();
    if data.columns().len() < 2 {
        return Err(Error::Schema(
            "dataset needs at least one feature column and one target column".into(),
        ));
    }
    if n < m + 1 {
        return Err(Error::Schema(format!(
            "need at least {} rows for {} parameters, got {n}",
            m + 1,
            m
        )));
    }
    let num_features = data.columns().len() - 1;
    for basis in spec.basis() {
        if let BasisFunction::Feature(i) = basis {
            if *i >= num_features {
                return Err(Error::Schema(format!(
                    "basis reads feature {i} but the dataset has {num_features} feature columns"
                )));
            }
        }
    }

    let mut design = Array2::<f64>::zeros((n, m));
    for (r, row) in data.rows().iter().enumerate() {
        let features = &row[..num_features];
        for (c, basis) in spec.basis().iter().enumerate() {
            design[(r, c)] = basis.evaluate(features)?;
        }
    }
    let mut targets = Array1::from_iter(data.rows().iter().map(|row| row[num_features]));

    let mut column_transforms = vec![ColumnTransform::identity(); m];
    let mut target_transform = ColumnTransform::identity();
    if standardize {
        for (c, basis) in spec.basis().iter().enumerate() {
            if matches!(basis, BasisFunction::Intercept) {
                continue;
            }
            let values: Vec<f64> = design.column(c).to_vec();
            let transform = zscore_transform(&values, data.columns()[c].as_str())?;
            design.column_mut(c).mapv_inplace(|v| transform.apply(v));
            column_transforms[c] = transform;
        }
        target_transform =
            zscore_transform(targets.as_slice().unwrap(), data.columns()[num_features].as_str())?;
        targets.mapv_inplace(|v| target_transform.apply(v));
    }

    RegressionProblem::assemble(
        design,
        targets,
        Some((column_transforms, target_transform)),
        spec.parameter_names().to_vec(),
    )
}

fn zscore_transform(values: &[f64], label: &str) -> Result<ColumnTransform> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = variance.sqrt();
    if std < 1e-12 {
        return Err(Error::Schema(format!("column {label:?} is constant; cannot standardize")));
    }
    Ok(ColumnTransform { offset: mean, scale: std })
}

/// f(x) = sum_m theta_m phi_m(x) on a feature record.
pub fn predict(spec: &ModelSpec, theta: &[f64], features: &[f64]) -> Result<f64> {
    if theta.len() != spec.num_parameters() {
        return Err(Error::LengthMismatch { expected: spec.num_parameters(), got: theta.len() });
    }
    let mut out = 0.0;
    for (basis, &coeff) in spec.basis().iter().zip(theta) {
        out += coeff * basis.evaluate(features)?;
    }
    Ok(out)
}

/// Free-function form of [`RegressionProblem::cost`].
pub fn cost(problem: &RegressionProblem, theta: &[f64]) -> Result<f64> {
    problem.cost(theta)
}

/// Free-function form of [`RegressionProblem::least_squares_solution`].
pub fn least_squares_solution(problem: &RegressionProblem) -> Result<Array1<f64>> {
    problem.least_squares_solution()
}

/// Lower-triangular L with A = L L', or None if A is not positive definite.
fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut lower = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= lower[(i, k)] * lower[(j, k)];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                lower[(i, j)] = sum.sqrt();
            } else {
                lower[(i, j)] = sum / lower[(j, j)];
            }
        }
    }
    Some(lower)
}

/// Solve L x = b for lower-triangular L.
fn forward_substitute(lower: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = lower.nrows();
    let mut x = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for j in 0..i {
            sum -= lower[(i, j)] * x[j];
        }
        x[i] = sum / lower[(i, i)];
    }
    x
}

/// Solve L' x = b for lower-triangular L.
fn back_substitute(lower: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = lower.nrows();
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut sum = b[i];
        for j in (i + 1)..n {
            sum -= lower[(j, i)] * x[j];
        }
        x[i] = sum / lower[(i, i)];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use std::io::Write;

    fn data_path(file: &str) -> std::path::PathBuf {
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(file)
    }

    fn iris_setosa() -> Dataset {
        load_csv_where(
            data_path("iris.csv"),
            &["sepal_width", "sepal_length"],
            "species",
            "setosa",
        )
        .unwrap()
    }

    fn penguins() -> Dataset {
        load_csv(
            data_path("penguins.csv"),
            &["body_mass_g", "bill_depth_mm", "flipper_length_mm"],
        )
        .unwrap()
    }

    #[test]
    fn iris_setosa_has_fifty_rows() {
        let data = iris_setosa();
        assert_eq!(data.num_rows(), 50);
        assert_eq!(data.dropped_rows(), 0);
    }

    #[test]
    fn penguins_drop_incomplete_rows() {
        let data = penguins();
        assert_eq!(data.num_rows(), 342);
        assert_eq!(data.dropped_rows(), 2);
    }

    #[test]
    fn missing_column_is_schema_error() {
        let err = load_csv(data_path("iris.csv"), &["sepal_width", "petal_width"]).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn header_only_file_is_empty_dataset() {
        let mut tmp = tempfile_like("header_only.csv");
        writeln!(tmp.1, "a,b").unwrap();
        drop(tmp.1);
        let err = load_csv(&tmp.0, &["a", "b"]).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset { .. }));
        std::fs::remove_file(&tmp.0).ok();
    }

    fn tempfile_like(name: &str) -> (std::path::PathBuf, std::fs::File) {
        let path = std::env::temp_dir().join(format!("cvanneal_test_{}_{name}", std::process::id()));
        let file = std::fs::File::create(&path).unwrap();
        (path, file)
    }

    #[test]
    fn trivial_gram_products() {
        let p = RegressionProblem::from_design(array![[1.0], [1.0]], array![1.0, 1.0]).unwrap();
        assert_eq!(p.gram()[(0, 0)], 2.0);
        assert_eq!(p.moment()[0], 4.0);

        let p = RegressionProblem::from_design(array![[1.0], [2.0]], array![2.0, 3.0]).unwrap();
        assert_eq!(p.gram()[(0, 0)], 5.0);
        assert_eq!(p.moment()[0], 16.0);
    }

    #[test]
    fn intercept_column_is_all_ones() {
        let data = iris_setosa();
        let spec = ModelSpec::slope_intercept("sepal_width");
        let p = build_problem(&data, &spec, true).unwrap();
        assert!(p.design().column(1).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn cost_examples() {
        let p = RegressionProblem::from_design(array![[1.0], [1.0]], array![1.0, 1.0]).unwrap();
        // A = [[2]], B = [4]
        assert_eq!(p.cost(&[0.0]).unwrap(), 0.0);

        // A = [[1]], B = [2] via a unit design with y = 1.
        let p = RegressionProblem::from_design(array![[1.0]], array![1.0]).unwrap();
        assert_eq!(p.gram()[(0, 0)], 1.0);
        assert_eq!(p.moment()[0], 2.0);
        assert_eq!(p.cost(&[1.0]).unwrap(), -1.0);

        assert!(matches!(p.cost(&[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn perturbed_cost_never_beats_optimum() {
        // Oracle: direct evaluation of the cost at coordinate perturbations.
        let p = RegressionProblem::synthetic(3, 11);
        let theta = p.least_squares_solution().unwrap();
        let base = p.cost(theta.as_slice().unwrap()).unwrap();
        for m in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut perturbed = theta.to_vec();
                perturbed[m] += sign * 0.01;
                assert!(p.cost(&perturbed).unwrap() >= base);
            }
        }
    }

    #[test]
    fn exact_fit_recovers_constant() {
        for c in [0.25, -1.5, 3.0] {
            let p =
                RegressionProblem::from_design(array![[1.0], [1.0]], array![c, c]).unwrap();
            let theta = p.least_squares_solution().unwrap();
            assert_abs_diff_eq!(theta[0], c, epsilon = 1e-12);
        }
    }

    #[test]
    fn hand_checkable_normal_equation() {
        // (1*2 + 2*3) / (1 + 4) = 1.6
        let p = RegressionProblem::from_design(array![[1.0], [2.0]], array![2.0, 3.0]).unwrap();
        let theta = p.least_squares_solution().unwrap();
        assert_abs_diff_eq!(theta[0], 1.6, epsilon = 1e-12);
    }

    // Reference values below come from an independent least-squares routine
    // (numpy lstsq) run on the vendored CSV files with the same z-scoring.
    const IRIS_M1_THETA: f64 = 0.7425466856651598;
    const PENGUINS_M3_THETA: [f64; 2] = [0.7663406588015496, -0.22220308842693967];

    #[test]
    fn iris_standardized_fit_matches_independent_solver() {
        let data = iris_setosa();
        let m1 = build_problem(&data, &ModelSpec::single_slope("sepal_width"), true).unwrap();
        let theta1 = m1.least_squares_solution().unwrap();
        assert_abs_diff_eq!(theta1[0], IRIS_M1_THETA, epsilon = 1e-6);

        let m2 = build_problem(&data, &ModelSpec::slope_intercept("sepal_width"), true).unwrap();
        let theta2 = m2.least_squares_solution().unwrap();
        assert_abs_diff_eq!(theta2[0], IRIS_M1_THETA, epsilon = 1e-6);
        assert!(theta2[1].abs() < 1e-9);
    }

    #[test]
    fn penguins_standardized_fit_matches_independent_solver() {
        let data = penguins();
        let spec = ModelSpec::two_slopes_intercept("body_mass_g", "bill_depth_mm");
        let p = build_problem(&data, &spec, true).unwrap();
        let theta = p.least_squares_solution().unwrap();
        assert_abs_diff_eq!(theta[0], PENGUINS_M3_THETA[0], epsilon = 1e-6);
        assert_abs_diff_eq!(theta[1], PENGUINS_M3_THETA[1], epsilon = 1e-6);
        assert!(theta[2].abs() < 1e-9);
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_variance() {
        let data = penguins();
        let spec = ModelSpec::two_slopes_intercept("body_mass_g", "bill_depth_mm");
        let p = build_problem(&data, &spec, true).unwrap();
        for c in 0..2 {
            let col = p.design().column(c);
            let n = col.len() as f64;
            let mean = col.sum() / n;
            let std = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 1e-9, "column {c} mean {mean}");
            assert!((std - 1.0).abs() < 1e-9, "column {c} std {std}");
        }
    }

    #[test]
    fn solution_invariant_under_row_reordering() {
        let data = iris_setosa();
        let spec = ModelSpec::slope_intercept("sepal_width");
        let p = build_problem(&data, &spec, true).unwrap();
        let theta = p.least_squares_solution().unwrap();

        let mut reversed_rows: Vec<Vec<f64>> = data.rows().to_vec();
        reversed_rows.reverse();
        let reversed = Dataset::new("iris_reversed", data.columns().to_vec(), reversed_rows);
        let p2 = build_problem(&reversed, &spec, true).unwrap();
        let theta2 = p2.least_squares_solution().unwrap();
        for m in 0..2 {
            assert_abs_diff_eq!(theta[m], theta2[m], epsilon = 1e-9);
        }
    }

    #[test]
    fn gram_is_symmetric() {
        let p = RegressionProblem::synthetic(3, 5);
        let a = p.gram();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[(i, j)] - a[(j, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn predict_examples() {
        let m1 = ModelSpec::single_slope("x");
        assert_eq!(predict(&m1, &[2.0], &[3.0]).unwrap(), 6.0);
        let m2 = ModelSpec::slope_intercept("x");
        assert_eq!(predict(&m2, &[1.0, 5.0], &[0.0]).unwrap(), 5.0);
    }

    #[test]
    fn residual_sum_of_squares_identity() {
        // RSS(theta) = cost(theta) + y'y: cost here is the doubled
        // (half-free) quadratic form, so this equals 2*(cost/2 + y'y/2).
        let data = iris_setosa();
        let spec = ModelSpec::slope_intercept("sepal_width");
        let p = build_problem(&data, &spec, true).unwrap();
        let theta = p.least_squares_solution().unwrap();
        let rss: f64 = p
            .design()
            .rows()
            .into_iter()
            .zip(p.targets())
            .map(|(row, &y)| {
                let pred: f64 = row.iter().zip(&theta).map(|(a, b)| a * b).sum();
                (pred - y) * (pred - y)
            })
            .sum();
        let yy = p.targets().dot(p.targets());
        let via_cost = p.cost(theta.as_slice().unwrap()).unwrap() + yy;
        assert_abs_diff_eq!(rss, via_cost, epsilon = 1e-9);
    }

    #[test]
    fn singular_gram_is_rejected() {
        // Duplicate columns make A singular.
        let design = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let err = RegressionProblem::from_design(design, array![1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }));
    }

    #[test]
    fn too_few_rows_rejected() {
        let data = Dataset::new(
            "tiny",
            vec!["x".into(), "y".into()],
            vec![vec![1.0, 2.0], vec![2.0, 3.0]],
        );
        let spec = ModelSpec::slope_intercept("x");
        assert!(matches!(build_problem(&data, &spec, false), Err(Error::Schema(_))));
    }

    #[test]
    fn destandardized_prediction_matches_manual_mapping() {
        let data = penguins();
        let spec = ModelSpec::two_slopes_intercept("body_mass_g", "bill_depth_mm");
        let p = build_problem(&data, &spec, true).unwrap();
        let theta = p.least_squares_solution().unwrap();
        let raw = &data.rows()[17][..2];

        let direct = p.predict_original_units(&spec, theta.as_slice().unwrap(), raw).unwrap();
        let std_features: Vec<f64> = (0..2).map(|c| p.column_transforms()[c].apply(raw[c])).collect();
        let std_pred = predict(&spec, theta.as_slice().unwrap(), &std_features).unwrap();
        let manual = p.target_transform().invert(std_pred);
        assert_abs_diff_eq!(direct, manual, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn quadratic_expansion_of_cost(seed in 0u64..200) {
            // cost(theta* + v) - cost(theta*) = v' A v >= 0.
            let p = RegressionProblem::synthetic(3, seed);
            let theta = p.least_squares_solution().unwrap();
            let v: Vec<f64> = (0..3)
                .map(|i| ((seed as f64 + 1.3) * (i as f64 + 0.7)).sin())
                .collect();
            let perturbed: Vec<f64> = theta.iter().zip(&v).map(|(t, d)| t + d).collect();
            let lhs = p.cost(&perturbed).unwrap() - p.cost(theta.as_slice().unwrap()).unwrap();
            let va = Array1::from_vec(v.clone());
            let rhs = va.dot(&p.gram().dot(&va));
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
            prop_assert!(rhs >= 0.0);
        }

        #[test]
        fn synthetic_solution_stays_bounded(m in 1usize..=3, seed in 0u64..300) {
            let p = RegressionProblem::synthetic(m, seed);
            let theta = p.least_squares_solution().unwrap();
            for &t in theta.iter() {
                prop_assert!(t.abs() <= 1.5);
            }
        }
    }
}
