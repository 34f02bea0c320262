//! Robust fuzzy local k-plane clustering.
//!
//! Each cluster is a bounded plane `(v_k, mu_k)`. A point's cost against
//! cluster `k` is
//!
//! ```text
//! D_ik = alpha * t^2 + (1 - alpha) * |t| + lambda * ||x_i - mu_k||^2,   t = v_k . (x_i - mu_k)
//! ```
//!
//! and the fit minimizes `sum_ik u_ik^m D_ik` over row-stochastic `U` and
//! unit normals. Memberships follow the fuzzy c-means closed form. Normals
//! and centers are refined by iterative reweighting: the absolute term is
//! replaced by `s_ik * t^2` with `s_ik = 1 / |t|` frozen at the current
//! model, which turns the normal update into a smallest-eigenvector problem
//! and the center update into a `D x D` SPD solve.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::{centered_scatter, init_from_assignment, kmeans};
use crate::linalg::{frob_diff, smallest_eigenpair, solve_spd};
use crate::matrix::{dot, norm, sq_dist, Matrix};
use crate::types::{
    argmin_first, hard_labels, Dataset, FitReport, HyperParams, Membership, PlaneModel,
};

/// Distances at or below this are treated as exact hits by the membership
/// update.
pub const EPS_ZERO: f64 = 1e-12;

/// Cluster mass `sum_i u_ik^m` below which a cluster counts as collapsed.
pub const DEGENERATE_MASS: f64 = 1e-12;

/// Lloyd iteration cap used when the fit seeds itself with k-means.
pub const KMEANS_MAX_ITER: usize = 100;

/// Per-point mixture cost against one bounded plane.
pub fn mixture_distance(x: &[f64], v: &[f64], mu: &[f64], alpha: f64, lambda: f64) -> Result<f64> {
    if x.len() != v.len() || mu.len() != v.len() {
        return Err(Error::invalid("mixture_distance: dimension mismatch"));
    }
    let len = norm(v);
    if (len - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!(
            "normal must be unit length, got norm {len}"
        )));
    }
    Ok(mixture_distance_unchecked(x, v, mu, alpha, lambda))
}

#[inline]
fn mixture_distance_unchecked(x: &[f64], v: &[f64], mu: &[f64], alpha: f64, lambda: f64) -> f64 {
    let mut t = 0.0;
    let mut r2 = 0.0;
    for ((xj, vj), mj) in x.iter().zip(v).zip(mu) {
        let r = xj - mj;
        t += vj * r;
        r2 += r * r;
    }
    alpha * t * t + (1.0 - alpha) * t.abs() + lambda * r2
}

/// `N x K` matrix of mixture costs.
pub fn distance_matrix(data: &Dataset, model: &PlaneModel, alpha: f64, lambda: f64) -> Matrix {
    let (n, k) = (data.len(), model.k());
    let mut out = Matrix::zeros(n, k);
    for i in 0..n {
        let x = data.point(i);
        for c in 0..k {
            out[(i, c)] =
                mixture_distance_unchecked(x, model.normal(c), model.center(c), alpha, lambda);
        }
    }
    out
}

/// Fuzzy c-means membership update from a cost matrix.
///
/// `u_ik = D_ik^(-1/(m-1)) / sum_c D_ic^(-1/(m-1))`. Rows with one or more
/// costs at or below [`EPS_ZERO`] split their mass evenly over those
/// clusters.
pub fn update_membership(distances: &Matrix, m: f64) -> Result<Membership> {
    if !(m > 1.0) {
        return Err(Error::invalid(format!("fuzzifier must exceed 1, got {m}")));
    }
    if distances.rows() == 0 || distances.cols() == 0 {
        return Err(Error::invalid("empty distance matrix"));
    }
    if let Some(&bad) = distances
        .as_slice()
        .iter()
        .find(|&&d| !(d >= 0.0) || !d.is_finite())
    {
        return Err(Error::invalid(format!(
            "distances must be finite and non-negative, got {bad}"
        )));
    }
    let exponent = 1.0 / (m - 1.0);
    let mut u = Matrix::zeros(distances.rows(), distances.cols());
    for (i, row) in distances.row_iter().enumerate() {
        let hits = row.iter().filter(|&&d| d <= EPS_ZERO).count();
        let out = u.row_mut(i);
        if hits > 0 {
            let share = 1.0 / hits as f64;
            for (o, &d) in out.iter_mut().zip(row) {
                *o = if d <= EPS_ZERO { share } else { 0.0 };
            }
            continue;
        }
        // scale by the row minimum so the largest ratio is exactly 1
        let dmin = row.iter().copied().fold(f64::INFINITY, f64::min);
        let mut total = 0.0;
        for (o, &d) in out.iter_mut().zip(row) {
            *o = (dmin / d).powf(exponent);
            total += *o;
        }
        out.iter_mut().for_each(|o| *o /= total);
    }
    Ok(Membership::from_matrix_unchecked(u))
}

/// Reweighting planes: `s_ik` (clamped reciprocal absolute projections) and
/// `g_ik = alpha + s_ik (1 - alpha)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    pub s: Matrix,
    pub g: Matrix,
}

pub fn reweight(data: &Dataset, model: &PlaneModel, alpha: f64, eps_proj: f64) -> Weights {
    let (n, k) = (data.len(), model.k());
    let mut s = Matrix::zeros(n, k);
    let mut g = Matrix::zeros(n, k);
    for i in 0..n {
        let x = data.point(i);
        for c in 0..k {
            let t = projection(x, model.normal(c), model.center(c));
            let sic = 1.0 / t.abs().max(eps_proj);
            s[(i, c)] = sic;
            g[(i, c)] = if alpha == 1.0 {
                1.0
            } else {
                alpha + sic * (1.0 - alpha)
            };
        }
    }
    Weights { s, g }
}

#[inline]
fn projection(x: &[f64], v: &[f64], mu: &[f64]) -> f64 {
    x.iter()
        .zip(v)
        .zip(mu)
        .map(|((xj, vj), mj)| vj * (xj - mj))
        .sum()
}

fn check_columns(data: &Dataset, u_col: &[f64], g_col: &[f64]) -> Result<()> {
    if u_col.len() != data.len() || g_col.len() != data.len() {
        return Err(Error::invalid(format!(
            "membership/weight columns must have {} entries",
            data.len()
        )));
    }
    Ok(())
}

/// `W = sum_i u_i^m g_i (x_i - mu)(x_i - mu)^T`.
pub fn characteristic_matrix(
    data: &Dataset,
    u_col: &[f64],
    g_col: &[f64],
    mu: &[f64],
    m: f64,
) -> Matrix {
    let d = data.dim();
    let mut w = Matrix::zeros(d, d);
    let mut r = vec![0.0; d];
    for i in 0..data.len() {
        let weight = u_col[i].powf(m) * g_col[i];
        if weight == 0.0 {
            continue;
        }
        for (rj, (x, c)) in r.iter_mut().zip(data.point(i).iter().zip(mu)) {
            *rj = x - c;
        }
        for a in 0..d {
            let wa = weight * r[a];
            for b in a..d {
                w[(a, b)] += wa * r[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            w[(a, b)] = w[(b, a)];
        }
    }
    w
}

/// Normal update: smallest eigenpair of the reweighted characteristic matrix.
/// Returns `(v, xi)`.
pub fn update_normal(
    data: &Dataset,
    u_col: &[f64],
    g_col: &[f64],
    mu: &[f64],
    m: f64,
) -> Result<(Vec<f64>, f64)> {
    check_columns(data, u_col, g_col)?;
    let mass: f64 = u_col.iter().zip(g_col).map(|(u, g)| u.powf(m) * g).sum();
    if !(mass > 0.0) {
        return Err(Error::DegenerateCluster { cluster: 0 });
    }
    let w = characteristic_matrix(data, u_col, g_col, mu, m);
    let (xi, v) = smallest_eigenpair(&w)?;
    Ok((v, xi))
}

/// Center update: solves `B mu = sum_i u_i^m (g_i v v^T + lambda I) x_i` with
/// `B = (sum_i u_i^m g_i) v v^T + lambda (sum_i u_i^m) I`.
///
/// With `lambda = 0` the system is singular along the plane; the returned
/// center is then the `lambda -> 0+` limit: the membership-weighted mean
/// moved along `v` onto the `g`-weighted plane offset.
pub fn update_center(
    data: &Dataset,
    u_col: &[f64],
    g_col: &[f64],
    v: &[f64],
    lambda: f64,
    m: f64,
) -> Result<Vec<f64>> {
    check_columns(data, u_col, g_col)?;
    let d = data.dim();
    let mut mass = 0.0; // sum u^m
    let mut gmass = 0.0; // sum u^m g
    let mut proj = 0.0; // sum u^m g v.x
    let mut sum_x = vec![0.0; d]; // sum u^m x
    for i in 0..data.len() {
        let um = u_col[i].powf(m);
        if um == 0.0 {
            continue;
        }
        let x = data.point(i);
        mass += um;
        gmass += um * g_col[i];
        proj += um * g_col[i] * dot(v, x);
        for (s, xj) in sum_x.iter_mut().zip(x) {
            *s += um * xj;
        }
    }
    if !(mass > 0.0) {
        return Err(Error::DegenerateCluster { cluster: 0 });
    }

    if lambda == 0.0 {
        if !(gmass > 0.0) {
            return Err(Error::Singular {
                pivot: 0,
                value: 0.0,
            });
        }
        let mean: Vec<f64> = sum_x.iter().map(|s| s / mass).collect();
        let shift = proj / gmass - dot(v, &mean);
        return Ok(mean.iter().zip(v).map(|(c, vj)| c + shift * vj).collect());
    }

    let mut b = Matrix::zeros(d, d);
    for a in 0..d {
        for c in 0..d {
            b[(a, c)] = gmass * v[a] * v[c];
        }
        b[(a, a)] += lambda * mass;
    }
    let rhs: Vec<f64> = (0..d).map(|a| v[a] * proj + lambda * sum_x[a]).collect();
    solve_spd(&b, &rhs)
}

/// Reweighted surrogate of one cluster with `(s, g)` frozen:
/// `sum_i u_i^m (g_i t_i^2 + lambda ||x_i - mu||^2)`.
pub fn surrogate(
    data: &Dataset,
    u_col: &[f64],
    g_col: &[f64],
    v: &[f64],
    mu: &[f64],
    lambda: f64,
    m: f64,
) -> f64 {
    (0..data.len())
        .map(|i| {
            let x = data.point(i);
            let t = projection(x, v, mu);
            u_col[i].powf(m) * (g_col[i] * t * t + lambda * sq_dist(x, mu))
        })
        .sum()
}

/// `sum_ik u_ik^m D_ik`.
pub fn objective(
    data: &Dataset,
    model: &PlaneModel,
    membership: &Membership,
    params: &HyperParams,
) -> f64 {
    let dist = distance_matrix(data, model, params.alpha, params.lambda);
    let mut total = 0.0;
    for i in 0..data.len() {
        for c in 0..model.k() {
            let u = membership.get(i, c);
            if u > 0.0 {
                total += u.powf(params.m) * dist[(i, c)];
            }
        }
    }
    total
}

/// One cluster's inner refinement step, reported to fit observers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerStep {
    pub outer: usize,
    pub inner: usize,
    pub cluster: usize,
    /// Surrogate before the normal and center updates.
    pub before: f64,
    /// Surrogate after both updates, same frozen weights.
    pub after: f64,
}

/// Fits the model. Without `init`, seeds from k-means with `params.seed`.
pub fn fit(
    data: &Dataset,
    params: &HyperParams,
    init: Option<(PlaneModel, Membership)>,
) -> Result<FitReport> {
    fit_observed(data, params, init, &mut |_| {})
}

/// [`fit`] with a callback invoked after every per-cluster inner step.
pub fn fit_observed(
    data: &Dataset,
    params: &HyperParams,
    init: Option<(PlaneModel, Membership)>,
    observer: &mut dyn FnMut(&InnerStep),
) -> Result<FitReport> {
    let start = Instant::now();
    params.validate()?;
    let (n, k) = (data.len(), params.k);
    if n < k {
        return Err(Error::invalid(format!(
            "need at least K = {k} points, got {n}"
        )));
    }
    let (mut model, mut membership) = match init {
        Some((model, membership)) => {
            model.validate()?;
            if model.k() != k
                || model.dim() != data.dim()
                || membership.n() != n
                || membership.k() != k
            {
                return Err(Error::invalid(
                    "initial model/membership do not match data and K",
                ));
            }
            (model, membership)
        }
        None => {
            let st = kmeans(data, k, params.seed, KMEANS_MAX_ITER)?;
            init_from_assignment(data, &st.assignment, k)?
        }
    };
    model.offsets = None;

    let mut trace = Vec::new();
    let mut inner_total = 0;
    let mut reseeds = 0;
    let mut converged = false;
    let mut outer_iters = 0;

    for outer in 1..=params.max_outer {
        outer_iters = outer;
        let dist = distance_matrix(data, &model, params.alpha, params.lambda);
        let next = update_membership(&dist, params.m).map_err(|e| e.in_fit(0, outer))?;
        let delta_u = frob_diff(next.matrix(), membership.matrix())?;
        membership = next;

        let columns: Vec<Vec<f64>> = (0..k).map(|c| membership.column(c)).collect();
        let mut live = vec![true; k];
        for c in 0..k {
            let mass: f64 = columns[c].iter().map(|u| u.powf(params.m)).sum();
            if mass < DEGENERATE_MASS {
                reseed(data, &mut model, c, &dist).map_err(|e| e.in_fit(c, outer))?;
                reseeds += 1;
                live[c] = false;
            }
        }

        for inner in 1..=params.max_inner {
            inner_total += 1;
            let weights = reweight(data, &model, params.alpha, params.eps_proj);
            let previous = model.normals.clone();
            for c in (0..k).filter(|&c| live[c]) {
                let g_col = weights.g.column(c);
                let u_col = &columns[c];
                let before = surrogate(
                    data,
                    u_col,
                    &g_col,
                    model.normal(c),
                    model.center(c),
                    params.lambda,
                    params.m,
                );
                let (v, _) = update_normal(data, u_col, &g_col, model.center(c), params.m)
                    .map_err(|e| e.in_fit(c, outer))?;
                let mu = update_center(data, u_col, &g_col, &v, params.lambda, params.m)
                    .map_err(|e| e.in_fit(c, outer))?;
                let after = surrogate(data, u_col, &g_col, &v, &mu, params.lambda, params.m);
                model.normals.row_mut(c).copy_from_slice(&v);
                model.centers.row_mut(c).copy_from_slice(&mu);
                observer(&InnerStep {
                    outer,
                    inner,
                    cluster: c,
                    before,
                    after,
                });
            }
            if frob_diff(&model.normals, &previous)? < params.inner_tol {
                break;
            }
        }

        trace.push(objective(data, &model, &membership, params));
        if delta_u < params.eta {
            converged = true;
            break;
        }
    }

    let labels = hard_labels(&membership);
    Ok(FitReport {
        model,
        membership,
        hard_labels: labels,
        objective_trace: trace,
        outer_iters,
        inner_iters_total: inner_total,
        converged,
        reseeds,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Re-seeds a collapsed cluster on the neighborhood of the worst-fit point.
pub(crate) fn reseed(
    data: &Dataset,
    model: &mut PlaneModel,
    cluster: usize,
    dist: &Matrix,
) -> Result<()> {
    let n = data.len();
    let worst = (0..n)
        .map(|i| (i, dist.row(i)[argmin_first(dist.row(i))]))
        .fold((0, f64::NEG_INFINITY), |best, (i, d)| {
            if d > best.1 {
                (i, d)
            } else {
                best
            }
        });
    let anchor = data.point(worst.0);
    let size = (2 * data.dim()).max(3).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        sq_dist(data.point(a), anchor)
            .total_cmp(&sq_dist(data.point(b), anchor))
            .then(a.cmp(&b))
    });
    let members = &order[..size];
    let d = data.dim();
    let mut mu = vec![0.0; d];
    for &i in members {
        for (m, x) in mu.iter_mut().zip(data.point(i)) {
            *m += x / size as f64;
        }
    }
    let (_, v) = smallest_eigenpair(&centered_scatter(data, members, &mu))?;
    model.normals.row_mut(cluster).copy_from_slice(&v);
    model.centers.row_mut(cluster).copy_from_slice(&mu);
    Ok(())
}
