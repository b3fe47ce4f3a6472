//! Greedy rounding of a fractional solution to consistent partial maps, and
//! the recovery metrics.
//!
//! The rows of `V = U Σ^{1/2}` (top `r` eigenpairs of `X̂`) act as point
//! embeddings. The first unfixed row becomes a pivot; a Householder
//! reflection sends its direction to `e_1`, and in every object the unfixed
//! row with the largest first coordinate joins the pivot's cluster if that
//! coordinate exceeds 0.5. The pivot always joins its own cluster, so every
//! round fixes at least one row.

use serde::Serialize;

use crate::eigen::{eig_sym, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::mapcore::{BlockMapMatrix, MembershipMatrix};

/// Inner-product threshold for joining a cluster (strict).
pub const JOIN_THRESHOLD: f64 = 0.5;
/// Pivot rows shorter than this form singleton clusters.
pub const DEGENERATE_ROW: f64 = 1e-12;

/// Point embeddings and cluster assignments during rounding.
#[derive(Debug, Clone)]
pub struct RoundingState {
    /// Row-major `N x r`.
    pub v: Vec<f64>,
    pub r: usize,
    pub assignment: Vec<Option<usize>>,
}

impl RoundingState {
    pub fn new(x_hat: &BlockMapMatrix, r: usize) -> Result<Self> {
        let order = x_hat.order();
        if r < 1 || r > order {
            return Err(Error::InvalidR { r, order });
        }
        let eig = eig_sym(&SymmetricMatrix::from_dense(order, x_hat.to_dense())?)?;
        let mut v = vec![0.0; order * r];
        for k in 0..r {
            let scale = eig.values()[k].max(0.0).sqrt();
            for (p, &u) in eig.vector(k).iter().enumerate() {
                v[p * r + k] = u * scale;
            }
        }
        Ok(Self {
            v,
            r,
            assignment: vec![None; order],
        })
    }

    fn row(&self, p: usize) -> &[f64] {
        &self.v[p * self.r..(p + 1) * self.r]
    }

    /// Applies the reflection `H = I - 2 w w^T / (w^T w)`, `w = u - e_1`,
    /// to every unfixed row, where `u` is the unit pivot direction.
    fn reflect(&mut self, pivot: usize) {
        let r = self.r;
        let norm = self.row(pivot).iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut w: Vec<f64> = self.row(pivot).iter().map(|x| x / norm).collect();
        w[0] -= 1.0;
        let ww: f64 = w.iter().map(|x| x * x).sum();
        if ww < 1e-30 {
            return;
        }
        for p in 0..self.assignment.len() {
            if self.assignment[p].is_some() {
                continue;
            }
            let row = &mut self.v[p * r..(p + 1) * r];
            let dot: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / ww;
            for (x, wi) in row.iter_mut().zip(&w) {
                *x -= f * wi;
            }
        }
    }
}

/// Rounds `X̂` to a binary, cycle-consistent block matrix.
pub fn round(x_hat: &BlockMapMatrix, r: usize) -> Result<BlockMapMatrix> {
    Ok(round_to_membership(x_hat, r)?.gram())
}

/// Same as [`round`] but returns the cluster labels.
pub fn round_to_membership(x_hat: &BlockMapMatrix, r: usize) -> Result<MembershipMatrix> {
    let mut state = RoundingState::new(x_hat, r)?;
    let layout = x_hat.layout().clone();
    let order = layout.order();
    let mut cluster = 0;
    while let Some(pivot) = (0..order).find(|&p| state.assignment[p].is_none()) {
        let norm = state.row(pivot).iter().map(|x| x * x).sum::<f64>().sqrt();
        state.assignment[pivot] = Some(cluster);
        if norm >= DEGENERATE_ROW {
            state.reflect(pivot);
            let (pivot_obj, _) = layout.locate(pivot);
            for obj in 0..layout.n() {
                if obj == pivot_obj {
                    continue;
                }
                let mut best: Option<(usize, f64)> = None;
                for p in layout.range(obj) {
                    if state.assignment[p].is_some() {
                        continue;
                    }
                    let score = state.row(p)[0];
                    if best.is_none_or(|(_, s)| score > s) {
                        best = Some((p, score));
                    }
                }
                if let Some((p, score)) = best {
                    if score > JOIN_THRESHOLD {
                        state.assignment[p] = Some(cluster);
                    }
                }
            }
        }
        cluster += 1;
    }
    let labels = (0..layout.n())
        .map(|i| layout.range(i).map(|p| state.assignment[p].expect("all rows fixed")).collect())
        .collect();
    MembershipMatrix::new(cluster, labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    /// Correct / recovered; 1 when nothing was recovered.
    pub precision: f64,
    /// Correct / true; 1 when the truth has no correspondences.
    pub recall: f64,
    pub exact: bool,
    pub recovered: usize,
    pub truth: usize,
    pub correct: usize,
}

/// Compares off-diagonal correspondences of a rounded matrix with the truth.
pub fn evaluate(rounded: &BlockMapMatrix, truth: &BlockMapMatrix) -> Result<Metrics> {
    if rounded.sizes() != truth.sizes() {
        return Err(Error::ShapeMismatch(format!(
            "object sizes {:?} vs {:?}",
            rounded.sizes(),
            truth.sizes()
        )));
    }
    if !rounded.is_binary() || !truth.is_binary() {
        return Err(Error::NotBinary);
    }
    let got = rounded.correspondences();
    let want = truth.correspondences();
    let want_set: std::collections::BTreeSet<_> = want.iter().collect();
    let correct = got.iter().filter(|c| want_set.contains(c)).count();
    let ratio = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
    Ok(Metrics {
        precision: ratio(correct, got.len()),
        recall: ratio(correct, want.len()),
        exact: got == want,
        recovered: got.len(),
        truth: want.len(),
        correct,
    })
}
