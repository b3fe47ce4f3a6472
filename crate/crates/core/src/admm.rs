//! The lifted semidefinite relaxation and its ADMM solver.
//!
//! The program is posed on the bordered variable
//!
//! ```text
//!        [ m   1^T ]
//!   X̄ =  [ 1   X   ]     minimize <W, X̄>  s.t.  A(X̄) = b,  X̄ >= 0,  X̄ ⪰ 0
//! ```
//!
//! where `W` carries `-X^in_ij + λ 1 1^T` on observed off-diagonal blocks
//! and `λ 1 1^T` on unobserved ones, and `A(X̄) = b` pins the border and the
//! identity diagonal blocks. Each iteration applies the four closed-form
//! updates for the dual vector `y`, the nonnegativity dual `Z`, the PSD dual
//! `S` and the primal `X̄`.
//!
//! Constraint convention: `A` reads `X̄_rr` for a diagonal position and
//! `X̄_rc + X̄_cr` for an off-diagonal one; `A*` writes `y_k` at both
//! `(r, c)` and `(c, r)`. With the Frobenius inner product this makes `A*`
//! the exact adjoint of `A`, and `A A*` is diagonal with entries 1 and 2.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::eigen::{eig_sym, proj_nonneg, spectral_split, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::mapcore::{BlockLayout, BlockMapMatrix, MapGraph};

/// `λ = sqrt(|E|) / (2n)`.
pub fn default_lambda(graph: &MapGraph) -> f64 {
    if graph.n() == 0 {
        return 0.0;
    }
    (graph.edge_count() as f64).sqrt() / (2.0 * graph.n() as f64)
}

/// Equality constraints on the upper triangle of `X̄`.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    order: usize,
    positions: Vec<(usize, usize)>,
    b: Vec<f64>,
}

impl ConstraintSystem {
    /// `(0,0) = m`, `(0,j) = 1` for every point `j`, and every position of
    /// every diagonal block fixed to the identity pattern. Index 0 of `X̄`
    /// is the border; point `p` sits at `p + 1`.
    pub fn new(layout: &BlockLayout, m: usize) -> Self {
        let n_points = layout.order();
        let mut positions = Vec::new();
        let mut b = Vec::new();
        positions.push((0, 0));
        b.push(m as f64);
        for j in 1..=n_points {
            positions.push((0, j));
            b.push(2.0);
        }
        for i in 0..layout.n() {
            let range = layout.range(i);
            for p in range.clone() {
                for q in p..range.end {
                    positions.push((p + 1, q + 1));
                    b.push(if p == q { 1.0 } else { 0.0 });
                }
            }
        }
        Self {
            order: n_points + 1,
            positions,
            b,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Order of the bordered matrix, `N + 1`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    fn check(&self, x: &SymmetricMatrix) -> Result<()> {
        if x.order() != self.order {
            return Err(Error::ShapeMismatch(format!(
                "matrix of order {} for a constraint system of order {}",
                x.order(),
                self.order
            )));
        }
        Ok(())
    }

    pub fn apply(&self, x: &SymmetricMatrix) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(self
            .positions
            .iter()
            .map(|&(r, c)| if r == c { x.get(r, r) } else { x.get(r, c) + x.get(c, r) })
            .collect())
    }

    pub fn apply_adjoint(&self, y: &[f64]) -> Result<SymmetricMatrix> {
        let mut out = SymmetricMatrix::zeros(self.order);
        self.add_adjoint(y, &mut out)?;
        Ok(out)
    }

    /// `target += A*(y)`.
    pub fn add_adjoint(&self, y: &[f64], target: &mut SymmetricMatrix) -> Result<()> {
        if y.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "dual vector of length {} for {} constraints",
                y.len(),
                self.len()
            )));
        }
        self.check(target)?;
        for (&(r, c), &v) in self.positions.iter().zip(y) {
            target.add_to(r, c, v);
        }
        Ok(())
    }

    /// Solves `(A A*) y = v`.
    pub fn solve_aat(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} for {} constraints",
                v.len(),
                self.len()
            )));
        }
        Ok(self
            .positions
            .iter()
            .zip(v)
            .map(|(&(r, c), &x)| if r == c { x } else { 0.5 * x })
            .collect())
    }

    /// `||A(X̄) - b||_inf`.
    pub fn residual(&self, x: &SymmetricMatrix) -> Result<f64> {
        Ok(self
            .apply(x)?
            .iter()
            .zip(&self.b)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Bordered embedding `[[m, 1^T], [1, X]]` of a block matrix.
pub fn lift(x: &BlockMapMatrix, m: usize) -> SymmetricMatrix {
    let n_points = x.order();
    let dense = x.to_dense();
    let mut out = SymmetricMatrix::zeros(n_points + 1);
    out.set(0, 0, m as f64);
    for p in 0..n_points {
        out.set(0, p + 1, 1.0);
        for q in p..n_points {
            out.set(p + 1, q + 1, dense[p * n_points + q]);
        }
    }
    out
}

/// Objective coefficients `W` on the bordered index space.
pub fn coefficient_matrix(x_in: &BlockMapMatrix, graph: &MapGraph, lambda: f64) -> Result<SymmetricMatrix> {
    if graph.n() != x_in.n() {
        return Err(Error::ShapeMismatch(format!(
            "graph on {} vertices for {} objects",
            graph.n(),
            x_in.n()
        )));
    }
    let layout = x_in.layout();
    let owners = layout.owners();
    let n_points = layout.order();
    let mut w = SymmetricMatrix::zeros(n_points + 1);
    for p in 0..n_points {
        for q in p + 1..n_points {
            if owners[p] != owners[q] {
                w.set(p + 1, q + 1, lambda);
            }
        }
    }
    for (p, q) in x_in.correspondences() {
        if graph.contains(owners[p], owners[q]) {
            w.set(p + 1, q + 1, lambda - x_in.get(p, q));
        }
    }
    Ok(w)
}

/// MatchLift objective `sum_{(i,j) in G} <X^in_ij, X_ij> - λ <1 1^T, X>`,
/// summing over both orientations of every observed pair.
pub fn objective(x: &BlockMapMatrix, x_in: &BlockMapMatrix, graph: &MapGraph, lambda: f64) -> f64 {
    let owners = x_in.layout().owners();
    let agreement: f64 = x_in
        .correspondences()
        .into_iter()
        .filter(|&(p, q)| graph.contains(owners[p], owners[q]))
        .map(|(p, q)| 2.0 * x_in.get(p, q) * x.get(p, q))
        .sum();
    let mass: f64 = x.to_dense().iter().sum();
    agreement - lambda * mass
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmmOptions {
    /// Penalty parameter, kept fixed over the run.
    pub mu: f64,
    pub max_iter: usize,
    pub tol_feas: f64,
    pub tol_change: f64,
    /// Wall-clock budget; exceeding it yields [`Error::Timeout`].
    #[serde(with = "opt_secs")]
    pub time_limit: Option<Duration>,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self {
            mu: 1.0,
            max_iter: 500,
            tol_feas: 1e-5,
            tol_change: 1e-5,
            time_limit: None,
        }
    }
}

mod opt_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_some(&d.as_secs_f64()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map(Duration::from_secs_f64))
    }
}

#[derive(Debug, Clone)]
pub struct AdmmState {
    pub x_bar: SymmetricMatrix,
    pub y: Vec<f64>,
    pub z: SymmetricMatrix,
    pub s: SymmetricMatrix,
    pub mu: f64,
    pub k: usize,
}

impl AdmmState {
    /// Feasible start: bordered identity-diagonal matrix, zero duals.
    pub fn initial(layout: &BlockLayout, m: usize, constraints: &ConstraintSystem, mu: f64) -> Self {
        let order = layout.order() + 1;
        Self {
            x_bar: lift(&BlockMapMatrix::diagonal(layout.sizes().to_vec()), m),
            y: vec![0.0; constraints.len()],
            z: SymmetricMatrix::zeros(order),
            s: SymmetricMatrix::zeros(order),
            mu,
            k: 0,
        }
    }
}

/// Diagnostics recorded after every iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `||A(X̄) - b||_inf`
    pub feasibility: f64,
    /// `max(0, -min_ij X̄_ij)`
    pub negativity: f64,
    pub min_eigenvalue: f64,
    /// `||X̄^{k+1} - X̄^k||_max`
    pub change: f64,
    /// Max gap between the incremental and projected forms of the X̄ update.
    pub identity_gap: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x_hat: BlockMapMatrix,
    pub trace: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub lambda: f64,
    pub m: usize,
    pub state: AdmmState,
    pub elapsed: Duration,
}

/// Compact JSON view of a [`SolveReport`]. Timing is left out so the
/// summary is reproducible.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub iterations: usize,
    pub converged: bool,
    pub lambda: f64,
    pub m: usize,
    pub mu: f64,
    pub order: usize,
    pub final_feasibility: f64,
    pub final_change: f64,
    pub final_negativity: f64,
    pub final_min_eigenvalue: f64,
    pub max_identity_gap: f64,
}

impl SolveReport {
    pub fn summary(&self) -> SolveSummary {
        let last = self.trace.last().copied();
        SolveSummary {
            iterations: self.iterations,
            converged: self.converged,
            lambda: self.lambda,
            m: self.m,
            mu: self.state.mu,
            order: self.x_hat.order(),
            final_feasibility: last.map_or(0.0, |r| r.feasibility),
            final_change: last.map_or(0.0, |r| r.change),
            final_negativity: last.map_or(0.0, |r| r.negativity),
            final_min_eigenvalue: last.map_or(0.0, |r| r.min_eigenvalue),
            max_identity_gap: self.trace.iter().map(|r| r.identity_gap).fold(0.0, f64::max),
        }
    }
}

pub fn admm_solve(
    x_in: &BlockMapMatrix,
    graph: &MapGraph,
    m: usize,
    lambda: f64,
    opts: &AdmmOptions,
) -> Result<SolveReport> {
    if m < 1 {
        return Err(Error::InvalidParams("universe size m must be at least 1".into()));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParams(format!("lambda = {lambda} must be finite and >= 0")));
    }
    if !(opts.mu > 0.0 && opts.mu.is_finite()) {
        return Err(Error::InvalidParams(format!("mu = {} must be finite and > 0", opts.mu)));
    }
    if x_in.order() == 0 {
        return Err(Error::InvalidParams("instance has no points".into()));
    }
    let start = Instant::now();
    let layout = x_in.layout();
    let constraints = ConstraintSystem::new(layout, m);
    let w = coefficient_matrix(x_in, graph, lambda)?;
    let mut state = AdmmState::initial(layout, m, &constraints, opts.mu);
    let mu = opts.mu;
    let b = constraints.b();
    let mut trace = Vec::new();
    let mut converged = false;

    for k in 0..opts.max_iter {
        // y = (A A*)^{-1} { A(-W + S + μX̄ + Z) - μ b }
        let rhs: Vec<f64> = constraints
            .positions()
            .iter()
            .zip(b)
            .map(|(&(r, c), &bk)| {
                let v = -w.get(r, c) + state.s.get(r, c) + mu * state.x_bar.get(r, c) + state.z.get(r, c);
                let a = if r == c { v } else { 2.0 * v };
                a - mu * bk
            })
            .collect();
        let y = constraints.solve_aat(&rhs)?;

        // T = W + A*(y)
        let mut t = w.clone();
        constraints.add_adjoint(&y, &mut t)?;

        let mu_x = state.x_bar.scaled(mu);
        let z = proj_nonneg(&t.axpy(-1.0, &state.s).axpy(-1.0, &mu_x));
        let v = t.axpy(-1.0, &z).axpy(-1.0, &mu_x);
        if !v.is_finite() {
            return Err(Error::NumericalBreakdown { iteration: k });
        }
        let split = spectral_split(&v)?;
        let s = split.psd;
        let x_next = split.nsd.scaled(-1.0 / mu);

        // X̄ + (Z + S - W - A*(y)) / μ, which must agree with -P_nsd(V) / μ
        let incremental = state.x_bar.axpy(1.0 / mu, &z.axpy(1.0, &s).axpy(-1.0, &t));
        let identity_gap = incremental.max_abs_diff(&x_next);

        if !x_next.is_finite() || !s.is_finite() {
            return Err(Error::NumericalBreakdown { iteration: k });
        }
        let feasibility = constraints.residual(&x_next)?;
        let change = x_next.max_abs_diff(&state.x_bar);
        let negativity = (-x_next.min_entry()).max(0.0);
        let largest_negative = split.values.iter().copied().filter(|&w| w < 0.0).fold(f64::NEG_INFINITY, f64::max);
        let min_eigenvalue = if split.values.iter().any(|&w| w >= 0.0) {
            0.0
        } else {
            -largest_negative / mu
        };
        trace.push(IterationRecord {
            iteration: k + 1,
            feasibility,
            negativity,
            min_eigenvalue,
            change,
            identity_gap,
        });
        state = AdmmState {
            x_bar: x_next,
            y,
            z,
            s,
            mu,
            k: k + 1,
        };
        if k % 50 == 0 {
            log::debug!("stage=admm iter={} feas={feasibility:.3e} change={change:.3e}", k + 1);
        }
        if feasibility < opts.tol_feas && change < opts.tol_change {
            converged = true;
            break;
        }
        if let Some(limit) = opts.time_limit {
            if start.elapsed() > limit {
                return Err(Error::Timeout { iterations: k + 1 });
            }
        }
    }

    let n_points = layout.order();
    let mut inner = Vec::with_capacity(n_points * n_points);
    for p in 0..n_points {
        inner.extend_from_slice(&state.x_bar.row(p + 1)[1..]);
    }
    let x_hat = BlockMapMatrix::from_dense(layout.sizes().to_vec(), inner)?;
    Ok(SolveReport {
        x_hat,
        iterations: state.k,
        trace,
        converged,
        lambda,
        m,
        state,
        elapsed: start.elapsed(),
    })
}

/// Optimality diagnostics of a primal/dual point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktReport {
    pub objective: f64,
    /// `<Z, X̄>`
    pub gap_nonneg: f64,
    /// `<S, X̄>`
    pub gap_psd: f64,
    pub equality_violation: f64,
    pub nonneg_violation: f64,
    pub psd_violation: f64,
    pub worst_violation: f64,
}

pub fn kkt_for_state(
    state: &AdmmState,
    m: usize,
    x_in: &BlockMapMatrix,
    graph: &MapGraph,
    lambda: f64,
) -> Result<KktReport> {
    let layout = x_in.layout();
    let constraints = ConstraintSystem::new(layout, m);
    let n_points = layout.order();
    let mut inner = Vec::with_capacity(n_points * n_points);
    for p in 0..n_points {
        inner.extend_from_slice(&state.x_bar.row(p + 1)[1..]);
    }
    let x = BlockMapMatrix::from_dense(layout.sizes().to_vec(), inner)?;
    let equality_violation = constraints.residual(&state.x_bar)?;
    let nonneg_violation = (-state.x_bar.min_entry()).max(0.0);
    let min_eig = eig_sym(&state.x_bar)?.values().last().copied().unwrap_or(0.0);
    let psd_violation = (-min_eig).max(0.0);
    Ok(KktReport {
        objective: objective(&x, x_in, graph, lambda),
        gap_nonneg: state.z.dot(&state.x_bar),
        gap_psd: state.s.dot(&state.x_bar),
        equality_violation,
        nonneg_violation,
        psd_violation,
        worst_violation: equality_violation.max(nonneg_violation).max(psd_violation),
    })
}

pub fn kkt_report(report: &SolveReport, x_in: &BlockMapMatrix, graph: &MapGraph, lambda: f64) -> Result<KktReport> {
    kkt_for_state(&report.state, report.m, x_in, graph, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_lambda_values() {
        assert!((default_lambda(&MapGraph::complete(100)) - 4950f64.sqrt() / 200.0).abs() < 1e-15);
        assert!((default_lambda(&MapGraph::complete(100)) - 0.35178).abs() < 1e-5);
        assert_eq!(default_lambda(&MapGraph::empty(5)), 0.0);
        let g = MapGraph::new(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(default_lambda(&g), 0.25);
    }

    #[test]
    fn constraint_count() {
        let layout = BlockLayout::new(vec![2, 3, 0]);
        let cs = ConstraintSystem::new(&layout, 4);
        assert_eq!(cs.len(), 1 + 5 + 3 + 6);
        assert_eq!(cs.order(), 6);
    }

    #[test]
    fn zero_mu_rejected() {
        let x = BlockMapMatrix::diagonal(vec![1, 1]);
        let opts = AdmmOptions {
            mu: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            admm_solve(&x, &MapGraph::complete(2), 1, 0.1, &opts),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn shape_mismatch_on_wrong_order() {
        let cs = ConstraintSystem::new(&BlockLayout::new(vec![2]), 1);
        assert!(cs.apply(&SymmetricMatrix::zeros(5)).is_err());
        assert!(cs.apply_adjoint(&[1.0]).is_err());
    }
}
