//! Universe-size estimation from the eigengap of the trimmed input matrix.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::eigen::{eig_sym, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::mapcore::{BlockMapMatrix, MapGraph};
use crate::seed;

/// Gaps at or below this are treated as zero.
pub const MIN_GAP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrimReport {
    /// Smallest degree among objects with at least one point.
    pub d_min: usize,
    pub overrepresented: Vec<usize>,
    pub zeroed_edges: Vec<(usize, usize)>,
    pub seed: u64,
}

/// Zeroes the blocks of edges dropped by over-represented vertices.
///
/// A vertex is over-represented when its degree exceeds `2 * d_min`; it
/// keeps a uniformly random subset of `2 * d_min` incident edges. An edge is
/// zeroed as soon as either endpoint drops it. The graph itself is not
/// modified. Empty objects are ignored when computing `d_min`.
pub fn trim(x_in: &BlockMapMatrix, graph: &MapGraph, seed: u64) -> Result<(BlockMapMatrix, TrimReport)> {
    if graph.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if graph.n() != x_in.n() {
        return Err(Error::ShapeMismatch(format!(
            "graph on {} vertices for {} objects",
            graph.n(),
            x_in.n()
        )));
    }
    let degrees = graph.degrees();
    let sizes = x_in.sizes();
    let d_min = degrees
        .iter()
        .zip(sizes)
        .filter(|&(_, &s)| s > 0)
        .map(|(&d, _)| d)
        .min()
        .or_else(|| degrees.iter().copied().min())
        .unwrap_or(0);
    let keep = 2 * d_min;
    let mut rng = seed::rng(seed);
    let mut overrepresented = Vec::new();
    let mut zeroed = BTreeSet::new();
    for (v, &degree) in degrees.iter().enumerate() {
        if degree <= keep {
            continue;
        }
        overrepresented.push(v);
        let nbrs = graph.neighbors(v);
        let kept: BTreeSet<usize> = rand::seq::index::sample(&mut rng, nbrs.len(), keep)
            .into_iter()
            .collect();
        for (k, &w) in nbrs.iter().enumerate() {
            if !kept.contains(&k) {
                zeroed.insert((v.min(w), v.max(w)));
            }
        }
    }
    let trimmed = x_in.with_blocks_zeroed(&zeroed);
    Ok((
        trimmed,
        TrimReport {
            d_min,
            overrepresented,
            zeroed_edges: zeroed.into_iter().collect(),
            seed,
        },
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralEstimate {
    pub m_hat: usize,
    /// Eigenvalues of the trimmed matrix, descending.
    pub spectrum: Vec<f64>,
    pub trim: TrimReport,
}

/// `m_hat = argmax_{M <= i < N} |w_i - w_{i+1}|` (1-based, descending
/// eigenvalues `w`) with `M = max(2, max_i m_i)`; ties go to the smallest `i`.
pub fn eigengap_argmax(spectrum: &[f64], max_object_size: usize) -> Result<usize> {
    let order = spectrum.len();
    let lower = max_object_size.max(2);
    let mut best: Option<(usize, f64)> = None;
    for i in lower..order {
        let gap = (spectrum[i - 1] - spectrum[i]).abs();
        if best.is_none_or(|(_, g)| gap > g) {
            best = Some((i, gap));
        }
    }
    match best {
        Some((i, gap)) if gap > MIN_GAP => Ok(i),
        _ => Err(Error::DegenerateSpectrum),
    }
}

pub fn estimate_m(x_in: &BlockMapMatrix, graph: &MapGraph, seed: u64) -> Result<SpectralEstimate> {
    let order = x_in.order();
    if order < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 points, got {order}")));
    }
    let (trimmed, report) = trim(x_in, graph, seed)?;
    let dense = SymmetricMatrix::from_dense(order, trimmed.to_dense())?;
    let spectrum = eig_sym(&dense)?.values().to_vec();
    let m_hat = eigengap_argmax(&spectrum, x_in.layout().max_size())?;
    Ok(SpectralEstimate {
        m_hat,
        spectrum,
        trim: report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapcore::{BlockMapMatrix, PartialMapBlock};

    #[test]
    fn regular_graph_is_untouched() {
        let x = BlockMapMatrix::assemble(
            vec![1, 1, 1],
            [
                ((0, 1), PartialMapBlock::identity(1)),
                ((1, 2), PartialMapBlock::identity(1)),
                ((0, 2), PartialMapBlock::identity(1)),
            ],
        )
        .unwrap();
        let (t, r) = trim(&x, &MapGraph::complete(3), 1).unwrap();
        assert_eq!(t, x);
        assert!(r.zeroed_edges.is_empty());
        assert!(r.overrepresented.is_empty());
    }

    #[test]
    fn empty_graph_rejected() {
        let x = BlockMapMatrix::diagonal(vec![1, 1]);
        assert!(matches!(trim(&x, &MapGraph::empty(2), 0), Err(Error::EmptyGraph)));
    }

    #[test]
    fn gap_tie_goes_to_smallest_index() {
        // gaps at i=2 and i=3 are both 1
        assert_eq!(eigengap_argmax(&[3.0, 2.0, 1.0, 0.0], 1).unwrap(), 2);
    }

    #[test]
    fn two_singletons_have_no_index_range() {
        let x = BlockMapMatrix::assemble(vec![1, 1], [((0, 1), PartialMapBlock::identity(1))]).unwrap();
        assert!(matches!(
            estimate_m(&x, &MapGraph::complete(2), 0),
            Err(Error::DegenerateSpectrum)
        ));
    }

    #[test]
    fn flat_spectrum_is_degenerate() {
        assert!(matches!(
            eigengap_argmax(&[1.0; 6], 2),
            Err(Error::DegenerateSpectrum)
        ));
    }
}
