//! Domain types shared by every clustering method.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{norm, Matrix};

/// Label carried by points that belong to no ground-truth class.
pub const OUTLIER: i64 = -1;

/// A point set: rows are samples, columns are features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Matrix,
    labels: Option<Vec<i64>>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Validates shape and finiteness. Labels are canonicalized: non-negative
    /// ids are remapped to `0..C` in increasing order, negative ids become
    /// [`OUTLIER`].
    pub fn new(points: Matrix, labels: Option<Vec<i64>>) -> Result<Self> {
        let (n, d) = points.shape();
        if n == 0 || d == 0 {
            return Err(Error::invalid(format!(
                "dataset must be non-empty, got {n}x{d}"
            )));
        }
        if let Some(idx) = points.as_slice().iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                idx / d,
                idx % d
            )));
        }
        let labels = match labels {
            Some(l) if l.len() != n => {
                return Err(Error::invalid(format!("{} labels for {n} points", l.len())))
            }
            Some(l) => Some(canonicalize_labels(&l)),
            None => None,
        };
        Ok(Dataset {
            points,
            labels,
            feature_names: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Dataset::new(Matrix::from_rows(rows)?, None)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::invalid(format!(
                "{} feature names for {} columns",
                names.len(),
                self.dim()
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.rows()
    }

    /// Always false for a constructed dataset.
    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Number of distinct non-outlier classes.
    pub fn n_classes(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().copied().max())
            .map_or(0, |m| (m + 1).max(0) as usize)
    }
}

fn canonicalize_labels(raw: &[i64]) -> Vec<i64> {
    let mut ids = BTreeMap::new();
    for &l in raw.iter().filter(|&&l| l >= 0) {
        let next = ids.len() as i64;
        ids.entry(l).or_insert(next);
    }
    // BTreeMap iteration is sorted, so renumber in key order
    for (rank, v) in ids.values_mut().enumerate() {
        *v = rank as i64;
    }
    raw.iter()
        .map(|l| ids.get(l).copied().unwrap_or(OUTLIER))
        .collect()
}

/// Maps each feature column affinely onto `[0, 1]`. Constant columns become
/// all zeros. Labels and feature names are carried through.
pub fn minmax_normalize(data: &Dataset) -> Result<Dataset> {
    if data.is_empty() {
        return Err(Error::invalid("cannot normalize an empty dataset"));
    }
    let (n, d) = data.points.shape();
    let mut out = Matrix::zeros(n, d);
    for j in 0..d {
        let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let x = data.points[(i, j)];
            (lo.min(x), hi.max(x))
        });
        let span = hi - lo;
        for i in 0..n {
            out[(i, j)] = if span > 0.0 {
                ((data.points[(i, j)] - lo) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
    }
    Ok(Dataset {
        points: out,
        labels: data.labels.clone(),
        feature_names: data.feature_names.clone(),
    })
}

/// Fitted plane geometry: one unit normal and one center per cluster.
///
/// Methods that parameterize planes as `x·v + b = 0` also fill `offsets`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneModel {
    pub normals: Matrix,
    pub centers: Matrix,
    pub offsets: Option<Vec<f64>>,
}

impl PlaneModel {
    pub fn new(normals: Matrix, centers: Matrix) -> Result<Self> {
        let model = PlaneModel {
            normals,
            centers,
            offsets: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn k(&self) -> usize {
        self.normals.rows()
    }

    pub fn dim(&self) -> usize {
        self.normals.cols()
    }

    pub fn normal(&self, k: usize) -> &[f64] {
        self.normals.row(k)
    }

    pub fn center(&self, k: usize) -> &[f64] {
        self.centers.row(k)
    }

    /// Offset `b` of plane `k` such that the plane is `x·v + b = 0`.
    pub fn offset(&self, k: usize) -> f64 {
        match &self.offsets {
            Some(b) => b[k],
            None => -crate::matrix::dot(self.normal(k), self.center(k)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k() == 0 {
            return Err(Error::invalid("plane model needs at least one cluster"));
        }
        if self.normals.shape() != self.centers.shape() {
            return Err(Error::invalid("normals and centers differ in shape"));
        }
        if !self.normals.is_finite() || !self.centers.is_finite() {
            return Err(Error::invalid("plane model has non-finite entries"));
        }
        for k in 0..self.k() {
            let n = norm(self.normal(k));
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("normal {k} has norm {n}")));
            }
        }
        if let Some(b) = &self.offsets {
            if b.len() != self.k() || b.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("offsets must be K finite values"));
            }
        }
        Ok(())
    }
}

/// Row-stochastic fuzzy membership matrix, `N x K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    u: Matrix,
}

impl Membership {
    pub fn new(u: Matrix) -> Result<Self> {
        if u.rows() == 0 || u.cols() == 0 {
            return Err(Error::invalid("membership must be non-empty"));
        }
        for (i, row) in u.row_iter().enumerate() {
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(Error::invalid(format!("membership row {i} leaves [0, 1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("membership row {i} sums to {s}")));
            }
        }
        Ok(Membership { u })
    }

    /// One-hot membership from a hard assignment.
    pub fn one_hot(assignment: &[usize], k: usize) -> Result<Self> {
        let mut u = Matrix::zeros(assignment.len(), k);
        for (i, &a) in assignment.iter().enumerate() {
            if a >= k {
                return Err(Error::invalid(format!(
                    "assignment {a} out of range for K = {k}"
                )));
            }
            u[(i, a)] = 1.0;
        }
        Membership::new(u)
    }

    pub(crate) fn from_matrix_unchecked(u: Matrix) -> Self {
        Membership { u }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.u
    }

    pub fn n(&self) -> usize {
        self.u.rows()
    }

    pub fn k(&self) -> usize {
        self.u.cols()
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.u[(i, k)]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.u.column(k)
    }
}

/// Per-row argmax, ties resolved to the lowest cluster index.
pub fn hard_labels(membership: &Membership) -> Vec<usize> {
    membership.u.row_iter().map(argmax_first).collect()
}

pub(crate) fn argmax_first(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = k;
        }
    }
    best
}

pub(crate) fn argmin_first(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in row.iter().enumerate().skip(1) {
        if x < row[best] {
            best = k;
        }
    }
    best
}

/// Hyperparameters of the robust fuzzy local k-plane objective and its solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub k: usize,
    /// Fuzzifier, `> 1`.
    pub m: f64,
    /// Weight of the squared projection against the absolute projection.
    pub alpha: f64,
    /// Weight of the locality term `||x - mu||^2`.
    pub lambda: f64,
    /// Outer stopping tolerance on `||U_new - U_old||_F`.
    pub eta: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Inner stopping tolerance on the change of the stacked normals.
    pub inner_tol: f64,
    /// Lower clamp on `|v·(x - mu)|` before taking its reciprocal.
    pub eps_proj: f64,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            k: 2,
            m: 2.0,
            alpha: 0.5,
            lambda: 1.0,
            eta: 1e-5,
            max_outer: 100,
            max_inner: 20,
            inner_tol: 1e-6,
            eps_proj: 1e-8,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn with_k(k: usize) -> Self {
        HyperParams {
            k,
            ..HyperParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid(format!("hyperparameter {what}")));
        if self.k == 0 {
            return bad("k must be >= 1");
        }
        if !(self.m > 1.0) || !self.m.is_finite() {
            return bad("m must be > 1");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad("lambda must be >= 0");
        }
        if !(self.eta > 0.0) {
            return bad("eta must be > 0");
        }
        if !(self.eps_proj > 0.0) {
            return bad("eps_proj must be > 0");
        }
        if !(self.inner_tol > 0.0) {
            return bad("inner_tol must be > 0");
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return bad("iteration caps must be >= 1");
        }
        Ok(())
    }
}

/// Outcome of one clustering run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: PlaneModel,
    pub membership: Membership,
    pub hard_labels: Vec<usize>,
    /// Objective value after each outer iteration.
    pub objective_trace: Vec<f64>,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub converged: bool,
    /// Number of times a collapsed cluster was re-seeded.
    pub reseeds: usize,
    /// Seconds.
    pub wall_time: f64,
}

impl FitReport {
    pub fn final_objective(&self) -> f64 {
        *self
            .objective_trace
            .last()
            .expect("fit reports always carry at least one objective value")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(values: &[f64]) -> Dataset {
        let rows: Vec<[f64; 1]> = values.iter().map(|&v| [v]).collect();
        Dataset::from_rows(&rows).unwrap()
    }

    #[test]
    fn normalize_single_column() {
        let out = minmax_normalize(&col(&[2.0, 4.0, 6.0])).unwrap();
        assert_eq!(out.points().as_slice(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn normalize_constant_column_is_zero() {
        let out = minmax_normalize(&col(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(out.points().as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_two_columns() {
        let data = Dataset::from_rows(&[[1.0, 10.0], [3.0, 20.0], [2.0, 30.0]]).unwrap();
        let out = minmax_normalize(&data).unwrap();
        let expect = [0.0, 0.0, 1.0, 0.5, 0.5, 1.0];
        for (a, b) in out.points().as_slice().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn normalize_keeps_labels() {
        let data = Dataset::new(
            Matrix::from_rows(&[[1.0], [2.0]]).unwrap(),
            Some(vec![7, 3]),
        )
        .unwrap();
        let out = minmax_normalize(&data).unwrap();
        assert_eq!(out.labels(), Some(&[1, 0][..]));
    }

    #[test]
    fn empty_and_nonfinite_rejected() {
        assert!(Dataset::new(Matrix::zeros(0, 2), None).is_err());
        assert!(Dataset::from_rows(&[[1.0, f64::NAN]]).is_err());
        assert!(Dataset::from_rows(&[[f64::INFINITY]]).is_err());
    }

    #[test]
    fn labels_canonicalized_with_outliers() {
        let data = Dataset::new(Matrix::zeros(5, 1), Some(vec![10, -1, 4, 10, -7])).unwrap();
        assert_eq!(data.labels(), Some(&[1, -1, 0, 1, -1][..]));
        assert_eq!(data.n_classes(), 2);
    }

    #[test]
    fn hard_label_examples() {
        let m = |rows: &[[f64; 2]]| Membership::new(Matrix::from_rows(rows).unwrap()).unwrap();
        assert_eq!(hard_labels(&m(&[[0.2, 0.8]])), vec![1]);
        assert_eq!(hard_labels(&m(&[[0.5, 0.5]])), vec![0]);
        assert_eq!(
            hard_labels(&m(&[[1.0, 0.0], [0.0, 1.0], [0.4, 0.6]])),
            vec![0, 1, 1]
        );
    }

    #[test]
    fn membership_rejects_bad_rows() {
        assert!(Membership::new(Matrix::from_rows(&[[0.5, 0.6]]).unwrap()).is_err());
        assert!(Membership::new(Matrix::from_rows(&[[1.5, -0.5]]).unwrap()).is_err());
    }

    #[test]
    fn plane_model_checks_unit_normals() {
        let n = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        let c = Matrix::zeros(1, 2);
        assert!(PlaneModel::new(n, c).is_err());
        let model = PlaneModel::new(
            Matrix::from_rows(&[[0.0, 1.0]]).unwrap(),
            Matrix::from_rows(&[[2.0, 3.0]]).unwrap(),
        )
        .unwrap();
        assert_eq!(model.offset(0), -3.0);
    }

    #[test]
    fn default_params_valid() {
        HyperParams::default().validate().unwrap();
        let bad = HyperParams {
            m: 1.0,
            ..HyperParams::default()
        };
        assert!(bad.validate().is_err());
    }

    fn dataset_strategy() -> impl Strategy<Value = Dataset> {
        (1usize..12, 1usize..4).prop_flat_map(|(n, d)| {
            proptest::collection::vec(-1e3f64..1e3, n * d)
                .prop_map(move |v| Dataset::new(Matrix::from_vec(n, d, v).unwrap(), None).unwrap())
        })
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(data in dataset_strategy()) {
            let once = minmax_normalize(&data).unwrap();
            let twice = minmax_normalize(&once).unwrap();
            for (a, b) in once.points().as_slice().iter().zip(twice.points().as_slice()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn normalize_preserves_column_order(data in dataset_strategy()) {
            let out = minmax_normalize(&data).unwrap();
            for j in 0..data.dim() {
                for a in 0..data.len() {
                    for b in 0..data.len() {
                        if data.point(a)[j] < data.point(b)[j] {
                            prop_assert!(out.point(a)[j] <= out.point(b)[j]);
                        }
                    }
                }
            }
        }

        #[test]
        fn hard_labels_scale_invariant(
            rows in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 3), 1..8),
            scale in 0.1f64..10.0,
        ) {
            let normalize = |r: &Vec<f64>, c: f64| {
                let s: f64 = r.iter().map(|x| x * c).sum();
                r.iter().map(|x| x * c / s).collect::<Vec<_>>()
            };
            let a: Vec<Vec<f64>> = rows.iter().map(|r| normalize(r, 1.0)).collect();
            let b: Vec<Vec<f64>> = rows.iter().map(|r| normalize(r, scale)).collect();
            let ma = Membership::from_matrix_unchecked(Matrix::from_rows(&a).unwrap());
            let mb = Membership::from_matrix_unchecked(Matrix::from_rows(&b).unwrap());
            prop_assert_eq!(hard_labels(&ma), hard_labels(&mb));
        }
    }
}
