//! Random instances under the partial-similarity model.
//!
//! Each universe element joins each object independently with probability
//! `p_set`; each object pair is observed with probability `p_obs`; each
//! observed map is the ground truth with probability `p_true` and otherwise
//! the restriction of a uniformly random permutation of the universe to the
//! two objects, which has expectation `(1/m) 1 1^T` on the augmented block.
//!
//! Draw order is fixed: memberships object by object, then pairs `(i, j)`,
//! `i < j`, in lexicographic order, all from a single ChaCha8 stream.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapcore::{BlockMapMatrix, MapGraph, MembershipMatrix, PartialMapBlock};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub m: usize,
    pub n: usize,
    pub p_set: f64,
    pub p_obs: f64,
    /// Probability that an observed map is correct, `1 - p_false`.
    pub p_true: f64,
    pub seed: u64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidParams("m must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidParams("n must be at least 2".into()));
        }
        for (name, p) in [("p_set", self.p_set), ("p_obs", self.p_obs), ("p_true", self.p_true)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }

    pub fn p_false(&self) -> f64 {
        1.0 - self.p_true
    }
}

/// A generated problem together with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub params: ModelParams,
    pub truth: MembershipMatrix,
    pub x_gt: BlockMapMatrix,
    pub x_in: BlockMapMatrix,
    pub graph: MapGraph,
    /// Observed pairs whose map was replaced by a random one. A corrupted
    /// map may coincide with the truth by chance.
    pub corrupted: BTreeSet<(usize, usize)>,
}

pub fn generate(params: &ModelParams) -> Result<Instance> {
    params.validate()?;
    let ModelParams {
        m,
        n,
        p_set,
        p_obs,
        p_true,
        ..
    } = *params;
    let mut rng = seed::rng(seed::derive(params.seed, seed::TAG_SYNTH, 0));

    let members: Vec<Vec<usize>> = (0..n)
        .map(|_| (0..m).filter(|_| rng.gen_bool(p_set)).collect())
        .collect();
    let truth = MembershipMatrix::new(m, members)?;
    let x_gt = truth.gram();
    let sizes = truth.sizes();
    let position: Vec<BTreeMap<usize, usize>> = truth
        .labels()
        .iter()
        .map(|l| l.iter().enumerate().map(|(r, &s)| (s, r)).collect())
        .collect();

    let mut edges = Vec::new();
    let mut corrupted = BTreeSet::new();
    let mut blocks = Vec::new();
    let mut perm: Vec<usize> = (0..m).collect();
    for i in 0..n {
        for j in i + 1..n {
            if !rng.gen_bool(p_obs) {
                continue;
            }
            edges.push((i, j));
            let block = if rng.gen_bool(p_true) {
                x_gt.block(i, j)
            } else {
                corrupted.insert((i, j));
                perm.shuffle(&mut rng);
                let pairs = truth.labels()[i]
                    .iter()
                    .enumerate()
                    .filter_map(|(r, &s)| position[j].get(&perm[s]).map(|&c| (r, c)));
                PartialMapBlock::binary(sizes[i], sizes[j], pairs)?
            };
            blocks.push(((i, j), block));
        }
    }
    let x_in = BlockMapMatrix::assemble(sizes, blocks)?;
    let graph = MapGraph::new(n, edges)?;
    Ok(Instance {
        params: *params,
        truth,
        x_gt,
        x_in,
        graph,
        corrupted,
    })
}

/// Success count over a known number of Bernoulli draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Frequency {
    pub hits: u64,
    pub total: u64,
}

impl Frequency {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            f64::NAN
        } else {
            self.hits as f64 / self.total as f64
        }
    }

    fn record(&mut self, hit: bool) {
        self.total += 1;
        self.hits += u64::from(hit);
    }
}

/// Observed generator frequencies over several independent trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalStats {
    pub trials: usize,
    pub membership: Frequency,
    pub observation: Frequency,
    pub corruption: Frequency,
    /// `m x m` row-major; entry `(s, t)` counts corrupted pairs `(i, j)`
    /// with `s in S_i`, `t in S_j`, and hits where the corrupted map sends
    /// `s` to `t`.
    pub corrupted_entries: Vec<Frequency>,
}

impl EmpiricalStats {
    /// Largest `|rate - 1/m|` over universe entries with at least one draw.
    pub fn max_entry_deviation(&self, m: usize) -> f64 {
        let target = 1.0 / m as f64;
        self.corrupted_entries
            .iter()
            .filter(|f| f.total > 0)
            .map(|f| (f.rate() - target).abs())
            .fold(0.0, f64::max)
    }
}

/// Trial `t` uses seed `derive(params.seed, TAG_TRIAL, t)`.
pub fn empirical_stats(params: &ModelParams, trials: usize) -> Result<EmpiricalStats> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    params.validate()?;
    let m = params.m;
    let mut stats = EmpiricalStats {
        trials,
        membership: Frequency::default(),
        observation: Frequency::default(),
        corruption: Frequency::default(),
        corrupted_entries: vec![Frequency::default(); m * m],
    };
    for t in 0..trials {
        let trial = ModelParams {
            seed: seed::derive(params.seed, seed::TAG_TRIAL, t as u64),
            ..*params
        };
        let inst = generate(&trial)?;
        let labels = inst.truth.labels();
        for obj in labels {
            let set: BTreeSet<_> = obj.iter().collect();
            for s in 0..m {
                stats.membership.record(set.contains(&s));
            }
        }
        for i in 0..params.n {
            for j in i + 1..params.n {
                let observed = inst.graph.contains(i, j);
                stats.observation.record(observed);
                if !observed {
                    continue;
                }
                let bad = inst.corrupted.contains(&(i, j));
                stats.corruption.record(bad);
                if !bad {
                    continue;
                }
                let block = inst.x_in.block(i, j);
                for (r, &s) in labels[i].iter().enumerate() {
                    for (c, &u) in labels[j].iter().enumerate() {
                        stats.corrupted_entries[s * m + u].record(block.get(r, c) == 1.0);
                    }
                }
            }
        }
    }
    Ok(stats)
}
