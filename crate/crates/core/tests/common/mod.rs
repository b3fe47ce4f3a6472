#![allow(dead_code)]

use matchlift::mapcore::{BlockMapMatrix, MapGraph};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense symmetric matrix with entries uniform in `[-scale, scale]`.
pub fn random_symmetric(rng: &mut ChaCha8Rng, order: usize, scale: f64) -> Vec<f64> {
    let mut a = vec![0.0; order * order];
    for i in 0..order {
        for j in i..order {
            let v = rng.gen_range(-scale..=scale);
            a[i * order + j] = v;
            a[j * order + i] = v;
        }
    }
    a
}

/// Object index of every stacked point.
pub fn owners(sizes: &[usize]) -> Vec<usize> {
    sizes.iter().enumerate().flat_map(|(i, &s)| std::iter::repeat_n(i, s)).collect()
}

/// Objective of a consistent collection given by per-point cluster labels:
/// agreement with the input on observed ordered pairs minus `lambda` times
/// the number of ones in the block matrix.
pub fn labelled_objective(
    labels: &[usize],
    owners: &[usize],
    x_in: &[f64],
    graph: &MapGraph,
    lambda: f64,
) -> f64 {
    let order = labels.len();
    let mut agreement = 0.0;
    let mut ones = 0.0;
    for p in 0..order {
        for q in 0..order {
            if labels[p] != labels[q] {
                continue;
            }
            ones += 1.0;
            let (i, j) = (owners[p], owners[q]);
            if i != j && graph.contains(i.min(j), i.max(j)) {
                agreement += x_in[p * order + q];
            }
        }
    }
    agreement - lambda * ones
}

/// Same objective, computed from a block matrix.
pub fn matrix_objective(x: &BlockMapMatrix, x_in: &BlockMapMatrix, graph: &MapGraph, lambda: f64) -> f64 {
    let owners = owners(x.sizes());
    let order = x.order();
    let (xd, xi) = (x.to_dense(), x_in.to_dense());
    let mut total = 0.0;
    for p in 0..order {
        for q in 0..order {
            let (i, j) = (owners[p], owners[q]);
            if i != j && graph.contains(i.min(j), i.max(j)) {
                total += xi[p * order + q] * xd[p * order + q];
            }
            total -= lambda * xd[p * order + q];
        }
    }
    total
}

/// Calls `visit` with every partition of the points into at most `universe`
/// clusters holding at most one point per object, i.e. every
/// cycle-consistent collection over a universe of that size (up to
/// relabelling).
pub fn for_each_consistent_labelling(owners: &[usize], universe: usize, mut visit: impl FnMut(&[usize])) {
    fn go(
        p: usize,
        owners: &[usize],
        universe: usize,
        labels: &mut Vec<usize>,
        used: usize,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if p == owners.len() {
            visit(labels);
            return;
        }
        for c in 0..=used.min(universe - 1) {
            let clash = (0..p).any(|q| labels[q] == c && owners[q] == owners[p]);
            if clash {
                continue;
            }
            labels.push(c);
            go(p + 1, owners, universe, labels, used.max(c + 1), visit);
            labels.pop();
        }
    }
    let mut labels = Vec::with_capacity(owners.len());
    go(0, owners, universe, &mut labels, 0, &mut visit);
}

/// Consistency by exhaustive triangle enumeration: the relation "equal or
/// matched" must be transitive and never link two points of one object.
pub fn consistent_by_triangles(x: &BlockMapMatrix) -> bool {
    let order = x.order();
    let owners = owners(x.sizes());
    let linked = |p: usize, q: usize| p == q || x.get(p, q) == 1.0;
    for p in 0..order {
        for q in 0..order {
            if p != q && owners[p] == owners[q] && x.get(p, q) != 0.0 {
                return false;
            }
            if !linked(p, q) {
                continue;
            }
            for r in 0..order {
                if linked(q, r) && !linked(p, r) {
                    return false;
                }
            }
        }
    }
    true
}
