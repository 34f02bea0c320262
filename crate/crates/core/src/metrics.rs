//! External clustering scores over hard label vectors: ACC, NMI, ARI and
//! Purity. Every score is invariant to relabeling either argument.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class-by-cluster count table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contingency {
    /// `table[i][j]` = points of true class `i` in predicted cluster `j`.
    pub table: Vec<Vec<u64>>,
    pub n: u64,
}

impl Contingency {
    pub fn new<T: Copy + Ord, P: Copy + Ord>(truth: &[T], pred: &[P]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::invalid(format!(
                "label length mismatch: truth = {}, pred = {}",
                truth.len(),
                pred.len()
            )));
        }
        if truth.is_empty() {
            return Err(Error::invalid("cannot score empty labelings"));
        }
        let rows = dense_ids(truth);
        let cols = dense_ids(pred);
        let (r, c) = (rows.len(), cols.len());
        let mut table = vec![vec![0u64; c]; r];
        for (t, p) in truth.iter().zip(pred) {
            table[rows[t]][cols[p]] += 1;
        }
        Ok(Contingency {
            table,
            n: truth.len() as u64,
        })
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.table.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let c = self.table.first().map_or(0, Vec::len);
        (0..c)
            .map(|j| self.table.iter().map(|r| r[j]).sum())
            .collect()
    }
}

fn dense_ids<T: Copy + Ord>(labels: &[T]) -> BTreeMap<T, usize> {
    let mut ids = BTreeMap::new();
    for &l in labels {
        ids.entry(l).or_insert(0);
    }
    for (rank, v) in ids.values_mut().enumerate() {
        *v = rank;
    }
    ids
}

/// Best fraction of points matched under a one-to-one cluster-to-class map,
/// solved exactly with the Kuhn-Munkres algorithm on the padded table.
pub fn accuracy<T: Copy + Ord, P: Copy + Ord>(truth: &[T], pred: &[P]) -> Result<f64> {
    let c = Contingency::new(truth, pred)?;
    let rows = c.table.len();
    let cols = c.table[0].len();
    let size = rows.max(cols);
    let mut weights = pathfinding::matrix::Matrix::new(size, size, 0i64);
    for (i, row) in c.table.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            weights[(i, j)] = count as i64;
        }
    }
    let (matched, _) = pathfinding::kuhn_munkres::kuhn_munkres(&weights);
    Ok(matched as f64 / c.n as f64)
}

/// Normalization of mutual information.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NmiNorm {
    /// `sqrt(H(T) H(P))`
    #[default]
    Geometric,
    /// `(H(T) + H(P)) / 2`
    Arithmetic,
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information with natural-log entropies and geometric
/// normalization.
pub fn nmi<T: Copy + Ord, P: Copy + Ord>(truth: &[T], pred: &[P]) -> Result<f64> {
    nmi_with(truth, pred, NmiNorm::Geometric)
}

pub fn nmi_with<T: Copy + Ord, P: Copy + Ord>(
    truth: &[T],
    pred: &[P],
    norm: NmiNorm,
) -> Result<f64> {
    let c = Contingency::new(truth, pred)?;
    let n = c.n as f64;
    let a = c.row_sums();
    let b = c.col_sums();
    let ht = entropy(&a, n);
    let hp = entropy(&b, n);
    if ht == 0.0 && hp == 0.0 {
        return Ok(1.0);
    }
    if ht == 0.0 || hp == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in c.table.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (a[i] as f64 * b[j] as f64)).ln();
            }
        }
    }
    let denom = match norm {
        NmiNorm::Geometric => (ht * hp).sqrt(),
        NmiNorm::Arithmetic => 0.5 * (ht + hp),
    };
    Ok((mi / denom).clamp(0.0, 1.0))
}

fn comb2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index.
pub fn ari<T: Copy + Ord, P: Copy + Ord>(truth: &[T], pred: &[P]) -> Result<f64> {
    let c = Contingency::new(truth, pred)?;
    let index: f64 = c.table.iter().flatten().map(|&x| comb2(x)).sum();
    let sa: f64 = c.row_sums().into_iter().map(comb2).sum();
    let sb: f64 = c.col_sums().into_iter().map(comb2).sum();
    let total = comb2(c.n);
    let expected = if total > 0.0 { sa * sb / total } else { 0.0 };
    let max_index = 0.5 * (sa + sb);
    let denom = max_index - expected;
    if denom == 0.0 {
        return Ok(if same_partition(&c) { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

/// True when every class maps to exactly one cluster and vice versa.
fn same_partition(c: &Contingency) -> bool {
    let rows_ok = c
        .table
        .iter()
        .all(|r| r.iter().filter(|&&x| x > 0).count() == 1);
    let cols = c.table[0].len();
    let cols_ok = (0..cols).all(|j| c.table.iter().filter(|r| r[j] > 0).count() == 1);
    rows_ok && cols_ok
}

/// Fraction of points that belong to their cluster's majority class.
pub fn purity<T: Copy + Ord, P: Copy + Ord>(truth: &[T], pred: &[P]) -> Result<f64> {
    let c = Contingency::new(truth, pred)?;
    let cols = c.table[0].len();
    let majority: u64 = (0..cols)
        .map(|j| c.table.iter().map(|r| r[j]).max().unwrap_or(0))
        .sum();
    Ok(majority as f64 / c.n as f64)
}

/// All four scores for one labeling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub purity: f64,
}

impl Scores {
    pub fn compute<T: Copy + Ord, P: Copy + Ord>(
        truth: &[T],
        pred: &[P],
        norm: NmiNorm,
    ) -> Result<Self> {
        Ok(Scores {
            acc: accuracy(truth, pred)?,
            nmi: nmi_with(truth, pred, norm)?,
            ari: ari(truth, pred)?,
            purity: purity(truth, pred)?,
        })
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Acc => self.acc,
            Metric::Nmi => self.nmi,
            Metric::Ari => self.ari,
            Metric::Purity => self.purity,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Acc,
    Nmi,
    Ari,
    Purity,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Acc, Metric::Nmi, Metric::Ari, Metric::Purity];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Acc => "acc",
            Metric::Nmi => "nmi",
            Metric::Ari => "ari",
            Metric::Purity => "purity",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.5);
        assert!((accuracy(&[0, 1, 2], &[0, 0, 0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(accuracy(&[0, 1], &[0]).is_err());
        assert!(accuracy::<i64, i64>(&[], &[]).is_err());
    }

    #[test]
    fn nmi_examples() {
        assert!((nmi(&[0, 0, 1, 1, 2], &[5, 5, 3, 3, 1]).unwrap() - 1.0).abs() < 1e-15);
        assert!(nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap().abs() < 1e-15);
        // table [[2,0],[1,1]] by hand
        let ln = f64::ln;
        let ht = ln(2.0);
        let hp = 0.75 * ln(4.0 / 3.0) + 0.25 * ln(4.0);
        let mi =
            0.5 * ln(4.0 * 2.0 / (2.0 * 3.0)) + 0.25 * ln(4.0 / (2.0 * 3.0)) + 0.25 * ln(4.0 / 2.0);
        let want = mi / (ht * hp).sqrt();
        assert!((nmi(&[0, 0, 1, 1], &[0, 0, 0, 1]).unwrap() - want).abs() < 1e-15);
        assert_eq!(nmi(&[0, 0], &[1, 1]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 1], &[1, 1]).unwrap(), 0.0);
        let arith = nmi_with(&[0, 0, 1, 1], &[0, 0, 0, 1], NmiNorm::Arithmetic).unwrap();
        assert!((arith - mi / (0.5 * (ht + hp))).abs() < 1e-15);
    }

    #[test]
    fn ari_examples() {
        assert_eq!(ari(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert!((ari(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(ari(&[0, 0, 1, 2], &[7, 7, 3, 9]).unwrap(), 1.0);
        assert_eq!(ari(&[0], &[4]).unwrap(), 1.0);
        assert_eq!(ari(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
    }

    #[test]
    fn purity_examples() {
        assert_eq!(purity(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(purity(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap(), 0.5);
        assert_eq!(purity(&[0, 0, 1, 1], &[0, 1, 2, 3]).unwrap(), 1.0);
    }

    fn labels() -> impl Strategy<Value = (Vec<u8>, Vec<u8>, Vec<u8>)> {
        (1usize..40).prop_flat_map(|n| {
            (
                proptest::collection::vec(0u8..5, n),
                proptest::collection::vec(0u8..5, n),
                Just((0u8..5).rev().collect::<Vec<_>>()),
            )
        })
    }

    proptest! {
        #[test]
        fn relabeling_invariance((t, p, perm) in labels()) {
            let p2: Vec<u8> = p.iter().map(|&x| perm[x as usize]).collect();
            let t2: Vec<u8> = t.iter().map(|&x| perm[x as usize] + 10).collect();
            let a = Scores::compute(&t, &p, NmiNorm::Geometric).unwrap();
            let b = Scores::compute(&t2, &p2, NmiNorm::Geometric).unwrap();
            prop_assert!((a.acc - b.acc).abs() < 1e-12);
            prop_assert!((a.nmi - b.nmi).abs() < 1e-12);
            prop_assert!((a.ari - b.ari).abs() < 1e-12);
            prop_assert!((a.purity - b.purity).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a.nmi));
            prop_assert!(a.purity > 0.0 && a.purity <= 1.0);
            prop_assert!(a.ari <= 1.0 + 1e-12);
        }
    }
}
