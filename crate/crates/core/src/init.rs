//! Seeded Lloyd k-means and the plane/membership seed derived from a hard
//! assignment.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::smallest_eigenpair;
use crate::matrix::{sq_dist, Matrix};
use crate::types::{Dataset, Membership, PlaneModel};

/// Membership given to the assigned cluster when softening a hard assignment.
pub const SOFT_ASSIGNED: f64 = 0.9;

/// How initial centers are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Seeding {
    /// `k` distinct points sampled uniformly without replacement.
    #[default]
    Uniform,
    /// k-means++ D^2 sampling.
    PlusPlus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitState {
    pub centers: Matrix,
    pub assignment: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each Lloyd iteration.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
}

pub fn kmeans(data: &Dataset, k: usize, seed: u64, max_iter: usize) -> Result<InitState> {
    kmeans_with(data, k, seed, max_iter, Seeding::Uniform)
}

pub fn kmeans_with(
    data: &Dataset,
    k: usize,
    seed: u64,
    max_iter: usize,
    seeding: Seeding,
) -> Result<InitState> {
    let n = data.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "k-means needs 1 <= k <= N, got k = {k}, N = {n}"
        )));
    }
    let d = data.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = Matrix::zeros(k, d);
    match seeding {
        Seeding::Uniform => {
            let mut picks = sample(&mut rng, n, k).into_vec();
            picks.sort_unstable();
            for (c, &i) in picks.iter().enumerate() {
                centers.row_mut(c).copy_from_slice(data.point(i));
            }
        }
        Seeding::PlusPlus => plus_plus(data, k, &mut rng, &mut centers),
    }

    let mut assignment = vec![usize::MAX; n];
    let mut inertia_trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let mut next: Vec<usize> = (0..n).map(|i| nearest(data.point(i), &centers).0).collect();
        repair_empty(data, &centers, &mut next, k);
        let changed = next != assignment;
        assignment = next;
        centers = cluster_means(data, &assignment, k);
        inertia_trace.push(inertia(data, &centers, &assignment));
        if !changed {
            break;
        }
    }
    let inertia = *inertia_trace.last().unwrap_or(&0.0);
    Ok(InitState {
        centers,
        assignment,
        inertia,
        inertia_trace,
        iterations,
    })
}

fn plus_plus(data: &Dataset, k: usize, rng: &mut ChaCha8Rng, centers: &mut Matrix) {
    use rand::Rng;
    let n = data.len();
    let first = rng.gen_range(0..n);
    centers.row_mut(0).copy_from_slice(data.point(first));
    let mut dist: Vec<f64> = (0..n)
        .map(|i| sq_dist(data.point(i), centers.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in dist.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centers.row_mut(c).copy_from_slice(data.point(pick));
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min(sq_dist(data.point(i), centers.row(c)));
        }
    }
}

fn nearest(x: &[f64], centers: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centers.row_iter().enumerate() {
        let dd = sq_dist(x, row);
        if dd < best.1 {
            best = (c, dd);
        }
    }
    best
}

/// Gives each empty cluster the point farthest from its current center.
fn repair_empty(data: &Dataset, centers: &Matrix, assignment: &mut [usize], k: usize) {
    let mut counts = vec![0usize; k];
    for &a in assignment.iter() {
        counts[a] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let donor = (0..assignment.len())
            .filter(|&i| counts[assignment[i]] > 1)
            .map(|i| (i, sq_dist(data.point(i), centers.row(assignment[i]))))
            .fold(None::<(usize, f64)>, |best, (i, dd)| match best {
                Some((_, bd)) if bd >= dd => best,
                _ => Some((i, dd)),
            });
        if let Some((i, _)) = donor {
            counts[assignment[i]] -= 1;
            assignment[i] = c;
            counts[c] = 1;
        }
    }
}

fn cluster_means(data: &Dataset, assignment: &[usize], k: usize) -> Matrix {
    let d = data.dim();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &a) in assignment.iter().enumerate() {
        counts[a] += 1;
        for (s, x) in sums.row_mut(a).iter_mut().zip(data.point(i)) {
            *s += x;
        }
    }
    for (c, &cnt) in counts.iter().enumerate() {
        if cnt > 0 {
            sums.row_mut(c).iter_mut().for_each(|s| *s /= cnt as f64);
        }
    }
    sums
}

fn inertia(data: &Dataset, centers: &Matrix, assignment: &[usize]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &a)| sq_dist(data.point(i), centers.row(a)))
        .sum()
}

/// Per-cluster mean and best-fit plane normal from a hard assignment, plus a
/// softened membership (0.9 on the assigned cluster, the rest shared evenly).
pub fn init_from_assignment(
    data: &Dataset,
    assignment: &[usize],
    k: usize,
) -> Result<(PlaneModel, Membership)> {
    if assignment.len() != data.len() {
        return Err(Error::invalid(format!(
            "assignment has {} entries for {} points",
            assignment.len(),
            data.len()
        )));
    }
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    if let Some(&bad) = assignment.iter().find(|&&a| a >= k) {
        return Err(Error::invalid(format!(
            "assignment {bad} out of range for K = {k}"
        )));
    }
    let d = data.dim();
    let centers = cluster_means(data, assignment, k);
    let mut normals = Matrix::zeros(k, d);
    for c in 0..k {
        let members: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] == c).collect();
        if members.is_empty() {
            return Err(Error::invalid(format!("cluster {c} is empty")));
        }
        let scatter = centered_scatter(data, &members, centers.row(c));
        let (_, v) = smallest_eigenpair(&scatter)?;
        normals.row_mut(c).copy_from_slice(&v);
    }

    let mut u = Matrix::zeros(data.len(), k);
    let rest = if k > 1 {
        (1.0 - SOFT_ASSIGNED) / (k - 1) as f64
    } else {
        0.0
    };
    for (i, &a) in assignment.iter().enumerate() {
        for c in 0..k {
            u[(i, c)] = if k == 1 {
                1.0
            } else if c == a {
                SOFT_ASSIGNED
            } else {
                rest
            };
        }
    }
    let model = PlaneModel::new(normals, centers)?;
    Ok((model, Membership::from_matrix_unchecked(u)))
}

/// `sum_i (x_i - mu)(x_i - mu)^T` over the given members.
pub(crate) fn centered_scatter(data: &Dataset, members: &[usize], mu: &[f64]) -> Matrix {
    let d = data.dim();
    let mut s = Matrix::zeros(d, d);
    let mut r = vec![0.0; d];
    for &i in members {
        for (rj, (x, m)) in r.iter_mut().zip(data.point(i).iter().zip(mu)) {
            *rj = x - m;
        }
        for a in 0..d {
            for b in a..d {
                s[(a, b)] += r[a] * r[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            s[(a, b)] = s[(b, a)];
        }
    }
    s
}
