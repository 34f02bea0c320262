//! Comparison methods: hard k-plane clustering (KPC), fuzzy k-plane
//! clustering (FkPC) and the fuzzy c-regression model (FCRM).

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::{centered_scatter, init_from_assignment, kmeans};
use crate::linalg::{frob_diff, smallest_eigenpair, solve_spd};
use crate::matrix::{dot, Matrix};
use crate::rflkpc::{reseed, update_membership, DEGENERATE_MASS, KMEANS_MAX_ITER};
use crate::types::{argmin_first, hard_labels, Dataset, FitReport, Membership, PlaneModel};

fn plane_residual(x: &[f64], v: &[f64], b: f64) -> f64 {
    let r = dot(x, v) + b;
    r * r
}

fn residual_matrix(data: &Dataset, normals: &Matrix, offsets: &[f64]) -> Matrix {
    let k = offsets.len();
    let mut out = Matrix::zeros(data.len(), k);
    for i in 0..data.len() {
        for c in 0..k {
            out[(i, c)] = plane_residual(data.point(i), normals.row(c), offsets[c]);
        }
    }
    out
}

/// Hard k-plane clustering seeded from k-means.
///
/// Alternates nearest-plane assignment (ties to the lower index) with a
/// per-cluster refit: the normal is the smallest eigenvector of the centered
/// scatter and `b = -mean(x . v)`. `objective_trace` holds the total squared
/// residual after each refit.
pub fn kpc_fit(data: &Dataset, k: usize, seed: u64, max_iter: usize) -> Result<FitReport> {
    let start = Instant::now();
    let n = data.len();
    if k == 0 || n < k {
        return Err(Error::invalid(format!(
            "KPC needs 1 <= K <= N, got K = {k}, N = {n}"
        )));
    }
    let d = data.dim();
    let mut assignment = kmeans(data, k, seed, KMEANS_MAX_ITER)?.assignment;
    let mut normals = Matrix::zeros(k, d);
    let mut centers = Matrix::zeros(k, d);
    let mut offsets = vec![0.0; k];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    for iter in 1..=max_iter.max(1) {
        iterations = iter;
        for c in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
            let mu = mean_of(data, &members);
            let (_, v) = smallest_eigenpair(&centered_scatter(data, &members, &mu))
                .map_err(|e| e.in_fit(c, iter))?;
            offsets[c] = -dot(&v, &mu);
            normals.row_mut(c).copy_from_slice(&v);
            centers.row_mut(c).copy_from_slice(&mu);
        }
        let res = residual_matrix(data, &normals, &offsets);
        trace.push((0..n).map(|i| res[(i, assignment[i])]).sum());

        let mut next: Vec<usize> = (0..n).map(|i| argmin_first(res.row(i))).collect();
        repair_empty(&res, &mut next, k);
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
    }

    let membership = Membership::one_hot(&assignment, k)?;
    let mut model = PlaneModel::new(normals, centers)?;
    model.offsets = Some(offsets);
    Ok(FitReport {
        model,
        hard_labels: assignment,
        membership,
        objective_trace: trace,
        outer_iters: iterations,
        inner_iters_total: 0,
        converged,
        reseeds: 0,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn mean_of(data: &Dataset, members: &[usize]) -> Vec<f64> {
    let mut mu = vec![0.0; data.dim()];
    for &i in members {
        for (m, x) in mu.iter_mut().zip(data.point(i)) {
            *m += x;
        }
    }
    mu.iter_mut().for_each(|m| *m /= members.len() as f64);
    mu
}

/// Hands each empty cluster the worst-fitting point of a cluster that can
/// spare one.
fn repair_empty(res: &Matrix, assignment: &mut [usize], k: usize) {
    let mut counts = vec![0usize; k];
    assignment.iter().for_each(|&a| counts[a] += 1);
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut donor: Option<(usize, f64)> = None;
        for (i, &a) in assignment.iter().enumerate() {
            if counts[a] > 1 && donor.is_none_or(|(_, r)| res[(i, a)] > r) {
                donor = Some((i, res[(i, a)]));
            }
        }
        if let Some((i, _)) = donor {
            counts[assignment[i]] -= 1;
            assignment[i] = c;
            counts[c] = 1;
        }
    }
}

/// `W = sum u^m x x^T - (sum u^m x)(sum u^m x)^T / sum u^m`, the FkPC
/// characteristic matrix, together with the weighted mean.
pub fn fkpc_characteristic(data: &Dataset, u_col: &[f64], m: f64) -> (Matrix, Vec<f64>) {
    let d = data.dim();
    let mut second = Matrix::zeros(d, d);
    let mut first = vec![0.0; d];
    let mut mass = 0.0;
    for i in 0..data.len() {
        let w = u_col[i].powf(m);
        if w == 0.0 {
            continue;
        }
        let x = data.point(i);
        mass += w;
        for a in 0..d {
            first[a] += w * x[a];
            for b in 0..d {
                second[(a, b)] += w * x[a] * x[b];
            }
        }
    }
    if mass > 0.0 {
        for a in 0..d {
            for b in 0..d {
                second[(a, b)] -= first[a] * first[b] / mass;
            }
        }
        first.iter_mut().for_each(|f| *f /= mass);
    }
    (second, first)
}

/// `sum_ik u_ik^m (x_i . v_k + b_k)^2`.
pub fn fkpc_objective(data: &Dataset, model: &PlaneModel, membership: &Membership, m: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..data.len() {
        for c in 0..model.k() {
            let u = membership.get(i, c);
            if u > 0.0 {
                total +=
                    u.powf(m) * plane_residual(data.point(i), model.normal(c), model.offset(c));
            }
        }
    }
    total
}

/// Fuzzy k-plane clustering seeded from k-means.
pub fn fkpc_fit(
    data: &Dataset,
    k: usize,
    m: f64,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<FitReport> {
    let start = Instant::now();
    let n = data.len();
    if k == 0 || n < k {
        return Err(Error::invalid(format!(
            "FkPC needs 1 <= K <= N, got K = {k}, N = {n}"
        )));
    }
    if !(m > 1.0) {
        return Err(Error::invalid(format!("fuzzifier must exceed 1, got {m}")));
    }
    let st = kmeans(data, k, seed, KMEANS_MAX_ITER)?;
    let (mut model, mut membership) = init_from_assignment(data, &st.assignment, k)?;
    let mut offsets = vec![0.0; k];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut reseeds = 0;

    for iter in 1..=max_iter.max(1) {
        iterations = iter;
        for c in 0..k {
            let u_col = membership.column(c);
            let mass: f64 = u_col.iter().map(|u| u.powf(m)).sum();
            if mass < DEGENERATE_MASS {
                let res = residual_matrix(data, &model.normals, &offsets);
                reseed(data, &mut model, c, &res).map_err(|e| e.in_fit(c, iter))?;
                offsets[c] = -dot(model.normal(c), model.center(c));
                reseeds += 1;
                continue;
            }
            let (w, mean) = fkpc_characteristic(data, &u_col, m);
            let (_, v) = smallest_eigenpair(&w).map_err(|e| e.in_fit(c, iter))?;
            offsets[c] = -dot(&v, &mean);
            model.normals.row_mut(c).copy_from_slice(&v);
            model.centers.row_mut(c).copy_from_slice(&mean);
        }
        let res = residual_matrix(data, &model.normals, &offsets);
        let next = update_membership(&res, m).map_err(|e| e.in_fit(0, iter))?;
        let delta = frob_diff(next.matrix(), membership.matrix())?;
        membership = next;
        model.offsets = Some(offsets.clone());
        trace.push(fkpc_objective(data, &model, &membership, m));
        if delta < tol {
            converged = true;
            break;
        }
    }

    model.offsets = Some(offsets);
    Ok(FitReport {
        model,
        hard_labels: hard_labels(&membership),
        membership,
        objective_trace: trace,
        outer_iters: iterations,
        inner_iters_total: 0,
        converged,
        reseeds,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Regression planes: row `k` is `beta_k`, the last entry the intercept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub betas: Matrix,
}

impl RegressionModel {
    pub fn predict(&self, k: usize, x_tilde: &[f64]) -> f64 {
        let beta = self.betas.row(k);
        let p = beta.len() - 1;
        dot(&beta[..p], x_tilde) + beta[p]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FcrmReport {
    pub model: RegressionModel,
    pub membership: Membership,
    pub hard_labels: Vec<usize>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

const RIDGE_JITTER: f64 = 1e-10;

/// Weighted least squares `beta = (X U X^T)^-1 X U y` with `U = diag(w)`.
/// `x_tilde` rows get a trailing 1 for the intercept.
pub fn weighted_least_squares(x_tilde: &Matrix, y: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let p = x_tilde.cols() + 1;
    let mut a = Matrix::zeros(p, p);
    let mut rhs = vec![0.0; p];
    let mut xi = vec![1.0; p];
    for i in 0..x_tilde.rows() {
        if w[i] == 0.0 {
            continue;
        }
        xi[..p - 1].copy_from_slice(x_tilde.row(i));
        for r in 0..p {
            rhs[r] += w[i] * xi[r] * y[i];
            for c in 0..p {
                a[(r, c)] += w[i] * xi[r] * xi[c];
            }
        }
    }
    match solve_spd(&a, &rhs) {
        Err(Error::Singular { .. }) => {
            let scale = (0..p).map(|r| a[(r, r)]).fold(1.0, f64::max);
            for r in 0..p {
                a[(r, r)] += RIDGE_JITTER * scale;
            }
            solve_spd(&a, &rhs)
        }
        other => other,
    }
}

/// Fuzzy c-regression: alternates weighted least squares per cluster with
/// the c-means membership update on squared regression residuals. Seeded by
/// k-means on `(x_tilde, y)`.
pub fn fcrm_fit(
    x_tilde: &Matrix,
    y: &[f64],
    k: usize,
    m: f64,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<FcrmReport> {
    let n = x_tilde.rows();
    let p = x_tilde.cols() + 1;
    if y.len() != n {
        return Err(Error::invalid(format!(
            "{} responses for {n} rows",
            y.len()
        )));
    }
    if k == 0 || n < p || n < k {
        return Err(Error::invalid(format!(
            "FCRM needs N >= D and N >= K, got N = {n}, D = {p}, K = {k}"
        )));
    }
    if !(m > 1.0) {
        return Err(Error::invalid(format!("fuzzifier must exceed 1, got {m}")));
    }
    let mut joined = Matrix::zeros(n, p);
    for i in 0..n {
        joined.row_mut(i)[..p - 1].copy_from_slice(x_tilde.row(i));
        joined[(i, p - 1)] = y[i];
    }
    let joined = Dataset::new(joined, None)?;
    let st = kmeans(&joined, k, seed, KMEANS_MAX_ITER)?;
    let (_, mut membership) = init_from_assignment(&joined, &st.assignment, k)?;

    let mut betas = Matrix::zeros(k, p);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    for iter in 1..=max_iter.max(1) {
        iterations = iter;
        for c in 0..k {
            let w: Vec<f64> = membership.column(c).iter().map(|u| u.powf(m)).collect();
            let beta = weighted_least_squares(x_tilde, y, &w).map_err(|e| e.in_fit(c, iter))?;
            betas.row_mut(c).copy_from_slice(&beta);
        }
        let model = RegressionModel {
            betas: betas.clone(),
        };
        let mut res = Matrix::zeros(n, k);
        for i in 0..n {
            for c in 0..k {
                let r = y[i] - model.predict(c, x_tilde.row(i));
                res[(i, c)] = r * r;
            }
        }
        let next = update_membership(&res, m).map_err(|e| e.in_fit(0, iter))?;
        let delta = frob_diff(next.matrix(), membership.matrix())?;
        membership = next;
        trace.push(fcrm_objective(&res, &membership, m));
        if delta < tol {
            converged = true;
            break;
        }
    }
    Ok(FcrmReport {
        model: RegressionModel { betas },
        hard_labels: hard_labels(&membership),
        membership,
        objective_trace: trace,
        iterations,
        converged,
    })
}

fn fcrm_objective(res: &Matrix, membership: &Membership, m: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..res.rows() {
        for c in 0..res.cols() {
            total += membership.get(i, c).powf(m) * res[(i, c)];
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::accuracy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_parallel_lines() -> (Dataset, Vec<i64>) {
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for i in 0..20 {
            let t = i as f64 / 19.0;
            rows.push([t, 0.0]);
            truth.push(0);
            rows.push([t, 5.0]);
            truth.push(1);
        }
        (Dataset::from_rows(&rows).unwrap(), truth)
    }

    #[test]
    fn kpc_parallel_lines() {
        let (data, truth) = two_parallel_lines();
        let rep = kpc_fit(&data, 2, 3, 50).unwrap();
        let pred: Vec<i64> = rep.hard_labels.iter().map(|&l| l as i64).collect();
        assert_eq!(accuracy(&truth, &pred).unwrap(), 1.0);
        assert!(rep.final_objective() < 1e-20);
        assert!(rep.converged);
    }

    #[test]
    fn kpc_single_cluster_is_global_scatter() {
        let data = Dataset::from_rows(&[[0.0, 0.0], [1.0, 0.2], [2.0, 0.1], [3.0, 0.5]]).unwrap();
        let rep = kpc_fit(&data, 1, 0, 10).unwrap();
        let all: Vec<usize> = (0..4).collect();
        let mu = mean_of(&data, &all);
        let (_, v) = smallest_eigenpair(&centered_scatter(&data, &all, &mu)).unwrap();
        assert_eq!(rep.model.normal(0), &v[..]);
    }

    #[test]
    fn kpc_residual_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<[f64; 2]> = (0..90)
            .map(|i| {
                let t: f64 = rng.gen_range(0.0..1.0);
                let e: f64 = rng.gen_range(-0.05..0.05);
                match i % 3 {
                    0 => [t, 0.5 * t + e],
                    1 => [t, 1.0 - t + e],
                    _ => [0.5 + e, t],
                }
            })
            .collect();
        let data = Dataset::from_rows(&rows).unwrap();
        for seed in 0..10 {
            let rep = kpc_fit(&data, 3, seed, 100).unwrap();
            assert!(rep
                .objective_trace
                .windows(2)
                .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15));
        }
    }

    #[test]
    fn fkpc_single_plane() {
        let rows: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 2.0 * i as f64 - 1.0]).collect();
        let data = Dataset::from_rows(&rows).unwrap();
        let rep = fkpc_fit(&data, 1, 2.0, 0, 1e-9, 50).unwrap();
        assert!(rep.membership.column(0).iter().all(|&u| u == 1.0));
        assert!(rep.final_objective() < 1e-20);
    }

    #[test]
    fn fkpc_one_hot_matches_kpc_scatter() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<Vec<f64>> = (0..25)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let data = Dataset::from_rows(&rows).unwrap();
        let assign: Vec<usize> = (0..25).map(|i| usize::from(i % 3 == 0)).collect();
        let members: Vec<usize> = (0..25).filter(|&i| assign[i] == 1).collect();
        let u_col: Vec<f64> = assign.iter().map(|&a| a as f64).collect();
        for m in [1.0001, 2.0, 3.0] {
            let (w, mean) = fkpc_characteristic(&data, &u_col, m);
            let scatter = centered_scatter(&data, &members, &mean_of(&data, &members));
            for (a, b) in w.as_slice().iter().zip(scatter.as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
            assert_eq!(smallest_eigenpair(&w).unwrap().1.len(), 3);
            let va = smallest_eigenpair(&w).unwrap().1;
            let vb = smallest_eigenpair(&scatter).unwrap().1;
            for (a, b) in va.iter().zip(&vb) {
                assert!((a - b).abs() < 1e-9);
            }
            assert!((mean[0] - mean_of(&data, &members)[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn fkpc_rows_and_normals_valid() {
        let (data, _) = two_parallel_lines();
        let rep = fkpc_fit(&data, 2, 2.0, 1, 1e-8, 100).unwrap();
        Membership::new(rep.membership.matrix().clone()).unwrap();
        rep.model.validate().unwrap();
    }

    #[test]
    fn fcrm_exact_line() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let y: Vec<f64> = (0..4).map(|i| 2.0 * i as f64 + 1.0).collect();
        let rep = fcrm_fit(&x, &y, 1, 2.0, 0, 1e-9, 20).unwrap();
        assert!((rep.model.betas[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((rep.model.betas[(0, 1)] - 1.0).abs() < 1e-12);
        assert!(rep.objective_trace.last().unwrap().abs() < 1e-20);
    }

    /// Normal-equations oracle solved by Cramer's rule on the 3x3 system.
    fn ols_oracle(x: &Matrix, y: &[f64]) -> [f64; 3] {
        let mut a = [[0.0; 3]; 3];
        let mut r = [0.0; 3];
        for i in 0..x.rows() {
            let xi = [x[(i, 0)], x[(i, 1)], 1.0];
            for p in 0..3 {
                r[p] += xi[p] * y[i];
                for q in 0..3 {
                    a[p][q] += xi[p] * xi[q];
                }
            }
        }
        let det3 = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d = det3(a);
        let mut out = [0.0; 3];
        for c in 0..3 {
            let mut m = a;
            for p in 0..3 {
                m[p][c] = r[p];
            }
            out[c] = det3(m) / d;
        }
        out
    }

    #[test]
    fn fcrm_single_cluster_is_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<[f64; 2]> = (0..40)
            .map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(0.0..3.0)])
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 0.7 * r[0] - 1.2 * r[1] + 0.3 + rng.gen_range(-0.2..0.2))
            .collect();
        let rep = fcrm_fit(&x, &y, 1, 2.0, 0, 1e-9, 20).unwrap();
        let oracle = ols_oracle(&x, &y);
        for (a, b) in rep.model.betas.row(0).iter().zip(oracle) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn uniform_memberships_give_identical_betas() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [4.0]]).unwrap();
        let y = [1.0, 0.0, 3.0, 2.0];
        let w = [0.25; 4];
        let a = weighted_least_squares(&x, &y, &w).unwrap();
        let b = weighted_least_squares(&x, &y, &[1.0; 4]).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn fcrm_objective_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let xs: Vec<[f64; 1]> = (0..80).map(|_| [rng.gen_range(0.0..1.0)]).collect();
        let y: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| if i % 2 == 0 { 2.0 * x[0] } else { 1.0 - x[0] } + rng.gen_range(-0.05..0.05))
            .collect();
        let x = Matrix::from_rows(&xs).unwrap();
        for seed in 0..5 {
            let rep = fcrm_fit(&x, &y, 2, 2.0, seed, 1e-9, 200).unwrap();
            for w in rep.objective_trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-8), "{:?}", rep.objective_trace);
            }
        }
    }

    #[test]
    fn singular_design_uses_jitter() {
        // duplicated x values make X U X^T rank deficient for this cluster
        let x = Matrix::from_rows(&[[1.0], [1.0], [1.0]]).unwrap();
        let beta = weighted_least_squares(&x, &[2.0, 2.0, 2.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!((beta[0] + beta[1] - 2.0).abs() < 1e-6);
    }
}
