//! Recursive tree frameworks: truncated evaluation, exact sampling on finite
//! Galton–Watson trees, coupling probes and direct process simulation.

mod brw;
mod frozen;

use std::sync::OnceLock;

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseDraw;
use crate::pool::{SamplePool, Sampler};
use crate::rde::{Children, EvalCx, Rde};
use crate::rng::{derive, mix, stream, Purpose};
use crate::value::Value;

pub use brw::{
    greedy_brw, greedy_replicas, simulate_brw, simulate_brw_replicas, BrwRun, BrwTracks, GreedyRun,
};
pub use frozen::{frozen_perc_local_stats, z_density_oracle, FrozenLocalStats, PRECHECK_KS};

/// Nodes evaluated per exact draw before it is discarded.
pub const NODE_BUDGET: usize = 10_000_000;

/// Children materialized per node when the arity is unbounded.
pub const DEFAULT_WIDTH: usize = 8;

/// Identifier of the root word `∅`.
pub const ROOT: u64 = 0x243F_6A88_85A3_08D3;

const TREE_TAG: u64 = 0x7EE;
const STACK_BYTES: usize = 256 << 20;

/// Identifier of the word `i j` given the identifier of `i`.
pub fn child_id(parent: u64, j: usize) -> u64 {
    mix(parent, j as u64 + 1)
}

/// Worker pool with deep stacks for recursive evaluation.
fn deep_pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        ThreadPoolBuilder::new()
            .num_threads(rayon::current_num_threads())
            .stack_size(STACK_BYTES)
            .thread_name(|i| format!("rdelab-tree-{i}"))
            .build()
            .expect("tree worker pool")
    })
}

/// A recursive tree framework cut at depth `depth`.
///
/// Nodes are materialized lazily. The noise at node `i` depends only on the
/// seed and the word `i`, so trees of different depths share their top part.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedRtf {
    pub depth: usize,
    pub width: usize,
    pub seed: u64,
    pub node_budget: usize,
}

impl TruncatedRtf {
    pub fn new(depth: usize, seed: u64) -> TruncatedRtf {
        TruncatedRtf {
            depth,
            width: DEFAULT_WIDTH,
            seed,
            node_budget: NODE_BUDGET,
        }
    }

    pub fn with_width(self, width: usize) -> TruncatedRtf {
        TruncatedRtf { width, ..self }
    }

    /// The same framework with an independent seed for trial `t`.
    pub fn trial(&self, t: u64) -> TruncatedRtf {
        TruncatedRtf {
            seed: derive(self.seed, t),
            ..*self
        }
    }
}

/// Root value with evaluation counters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootEval {
    pub value: Value,
    pub nodes: usize,
    /// Nodes whose unbounded child sequence was cut at the width.
    pub truncated: usize,
}

struct Walk<'a> {
    spec: &'a dyn Rde,
    boundary: Option<&'a dyn Sampler>,
    key: u64,
    depth: Option<usize>,
    width: usize,
    budget: usize,
    nodes: usize,
    truncated: usize,
    exceeded: bool,
    violation: Option<Value>,
}

impl<'a> Walk<'a> {
    fn new(
        spec: &'a dyn Rde,
        boundary: Option<&'a dyn Sampler>,
        seed: u64,
        depth: Option<usize>,
    ) -> Walk<'a> {
        Walk {
            spec,
            boundary,
            key: derive(seed, TREE_TAG),
            depth,
            width: DEFAULT_WIDTH,
            budget: NODE_BUDGET,
            nodes: 0,
            truncated: 0,
            exceeded: false,
            violation: None,
        }
    }

    fn node(&mut self, id: u64, level: usize) -> Value {
        if self.exceeded {
            return Value::ZERO;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exceeded = true;
            return Value::ZERO;
        }
        let spec = self.spec;
        let mut nd = NoiseDraw::new(self.key, id);
        spec.draw(&mut nd);
        let mut cx = EvalCx::new(None);
        cx.k_max = self.width;
        let v = {
            let mut kids = NodeKids {
                walk: self,
                id,
                level,
                memo: Vec::new(),
            };
            spec.eval(&mut nd, &mut kids, &mut cx)
        };
        if cx.capped {
            self.truncated += 1;
        }
        if !self.exceeded && self.violation.is_none() && !spec.state().contains(&v) {
            self.violation = Some(v);
        }
        v
    }

    fn finish(self, value: Value) -> Result<RootEval> {
        if self.exceeded {
            return Err(Error::Budget(self.budget));
        }
        if let Some(v) = self.violation {
            return Err(Error::StateSpace {
                value: v,
                space: self.spec.state().describe(),
                generation: 0,
            });
        }
        Ok(RootEval {
            value,
            nodes: self.nodes,
            truncated: self.truncated,
        })
    }
}

struct NodeKids<'w, 'a> {
    walk: &'w mut Walk<'a>,
    id: u64,
    level: usize,
    memo: Vec<Value>,
}

impl Children for NodeKids<'_, '_> {
    fn child(&mut self, j: usize) -> Value {
        while self.memo.len() <= j {
            let cid = child_id(self.id, self.memo.len());
            let level = self.level + 1;
            let v = match (self.walk.depth, self.walk.boundary) {
                (Some(d), Some(b)) if level >= d => {
                    b.sample(&mut stream(self.walk.key, cid, Purpose::Boundary))
                }
                _ => self.walk.node(cid, level),
            };
            self.memo.push(v);
        }
        self.memo[j]
    }
}

fn eval_tree(tree: &TruncatedRtf, spec: &dyn Rde, boundary: &dyn Sampler) -> Result<RootEval> {
    if tree.depth == 0 {
        return Err(Error::Config("tree depth must be at least 1".into()));
    }
    let mut walk = Walk::new(spec, Some(boundary), tree.seed, Some(tree.depth));
    walk.width = tree.width.max(1);
    walk.budget = tree.node_budget;
    let v = walk.node(ROOT, 0);
    walk.finish(v)
}

/// Root value of the tree with boundary values drawn from `boundary` at
/// depth `tree.depth`. With boundary `δ₀` this is one draw of `Tᵈ(δ₀)`.
pub fn evaluate_root(tree: &TruncatedRtf, spec: &dyn Rde, boundary: &dyn Sampler) -> Result<Value> {
    evaluate_root_stats(tree, spec, boundary).map(|r| r.value)
}

pub fn evaluate_root_stats(
    tree: &TruncatedRtf,
    spec: &dyn Rde,
    boundary: &dyn Sampler,
) -> Result<RootEval> {
    deep_pool().install(|| eval_tree(tree, spec, boundary))
}

/// Root values of `trials` independent trees built from `template`.
pub fn root_pool(
    template: &TruncatedRtf,
    spec: &dyn Rde,
    boundary: &dyn Sampler,
    trials: usize,
) -> Result<SamplePool> {
    let values = deep_pool().install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| eval_tree(&template.trial(t), spec, boundary).map(|r| r.value))
            .collect::<Result<Vec<Value>>>()
    })?;
    Ok(SamplePool::new(values))
}

fn check_subcritical(spec: &dyn Rde) -> Result<()> {
    match spec.offspring_mean() {
        Some(m) if m <= 1.0 + 1e-12 => Ok(()),
        Some(m) => Err(Error::Config(format!(
            "offspring mean {m} > 1: trees are not a.s. finite"
        ))),
        None => Err(Error::Config(format!(
            "`{}` has no Galton–Watson offspring law",
            spec.id()
        ))),
    }
}

fn exact_one(spec: &dyn Rde, seed: u64, budget: usize) -> Result<RootEval> {
    let mut walk = Walk::new(spec, None, seed, None);
    walk.budget = budget;
    let v = walk.node(ROOT, 0);
    walk.finish(v)
}

/// One exact draw from the unique fixed point, by growing the whole
/// Galton–Watson tree and evaluating it bottom-up.
pub fn exact_sample_finite(spec: &dyn Rde, seed: u64) -> Result<Value> {
    check_subcritical(spec)?;
    deep_pool()
        .install(|| exact_one(spec, seed, NODE_BUDGET))
        .map(|r| r.value)
}

/// Exact draws with the count of draws discarded at the node budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactBatch {
    pub pool: SamplePool,
    pub discarded: usize,
    pub max_nodes: usize,
}

/// `n` attempted exact draws; draws over `budget` nodes are dropped and
/// counted, which biases against large trees.
pub fn exact_samples(spec: &dyn Rde, n: usize, seed: u64, budget: usize) -> Result<ExactBatch> {
    check_subcritical(spec)?;
    let draws: Vec<Result<RootEval>> = deep_pool().install(|| {
        (0..n as u64)
            .into_par_iter()
            .map(|i| exact_one(spec, derive(seed, i), budget))
            .collect()
    });
    let mut values = Vec::with_capacity(n);
    let (mut discarded, mut max_nodes) = (0, 0);
    for d in draws {
        match d {
            Ok(r) => {
                max_nodes = max_nodes.max(r.nodes);
                values.push(r.value);
            }
            Err(Error::Budget(_)) => discarded += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(ExactBatch {
        pool: SamplePool::new(values),
        discarded,
        max_nodes,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub depth: usize,
    pub trials: usize,
    pub eq_tol: f64,
    pub fraction_equal: f64,
}

/// Fraction of trees whose root value does not depend on the boundary.
pub fn cftp_endogeny_probe(
    spec: &dyn Rde,
    depth: usize,
    a: &dyn Sampler,
    b: &dyn Sampler,
    trials: usize,
    seed: u64,
) -> Result<ProbeResult> {
    cftp_probe(spec, &TruncatedRtf::new(depth, seed), a, b, trials)
}

/// [`cftp_endogeny_probe`] on trees built from `template`.
pub fn cftp_probe(
    spec: &dyn Rde,
    template: &TruncatedRtf,
    a: &dyn Sampler,
    b: &dyn Sampler,
    trials: usize,
) -> Result<ProbeResult> {
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let tol = spec.eq_tol();
    let agree = deep_pool().install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let tree = template.trial(t);
                let x = eval_tree(&tree, spec, a)?.value;
                let y = eval_tree(&tree, spec, b)?.value;
                Ok(x == y || (spec.embed(&x) - spec.embed(&y)).abs() <= tol)
            })
            .collect::<Result<Vec<bool>>>()
    })?;
    let fraction_equal = agree.iter().filter(|&&e| e).count() as f64 / trials as f64;
    Ok(ProbeResult {
        depth: template.depth,
        trials,
        eq_tol: tol,
        fraction_equal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_spec, parse_params};
    use crate::law::Law;
    use crate::pool::Delta;

    fn spec(id: &str, kv: &[&str]) -> std::sync::Arc<dyn Rde> {
        build_spec(id, &parse_params(kv).unwrap()).unwrap()
    }

    #[test]
    fn depth_one_height_is_one_plus_boundary_max() {
        let s = spec("gw_height", &["N=binomial:2:0.5"]);
        let b = Delta(Value::Real(3.0));
        let mut saw_empty = false;
        let mut saw_kids = false;
        for t in 0..50 {
            let v = evaluate_root(&TruncatedRtf::new(1, t), s.as_ref(), &b)
                .unwrap()
                .x();
            if v == 1.0 {
                saw_empty = true;
            } else {
                assert_eq!(v, 4.0);
                saw_kids = true;
            }
        }
        assert!(saw_empty && saw_kids);
    }

    #[test]
    fn unary_lindley_is_running_max() {
        let s = spec("lindley", &["c=1.5"]);
        let tree = TruncatedRtf::new(6, 9);
        let v = evaluate_root(&tree, s.as_ref(), &Delta(Value::ZERO))
            .unwrap()
            .x();
        let key = derive(tree.seed, TREE_TAG);
        let mut id = ROOT;
        let mut steps = Vec::new();
        for _ in 0..6 {
            let mut nd = NoiseDraw::new(key, id);
            s.draw(&mut nd);
            steps.push(nd.extra[0] - 1.5);
            id = child_id(id, 0);
        }
        let mut best = 0.0f64;
        let mut sum = 0.0;
        for x in steps {
            sum += x;
            best = best.max(sum);
        }
        assert!((v - best).abs() < 1e-12, "{v} vs {best}");
    }

    #[test]
    fn exact_progeny_mean() {
        let s = spec("gw_progeny", &["N=bernoulli:0.5"]);
        let batch = exact_samples(s.as_ref(), 20_000, 3, NODE_BUDGET).unwrap();
        assert_eq!(batch.discarded, 0);
        let m = batch.pool.summary().mean;
        assert!((m - 2.0).abs() < 0.05, "{m}");
    }

    #[test]
    fn supercritical_is_rejected() {
        let s = spec("gw_height", &["N=binomial:2:0.8"]);
        assert!(exact_sample_finite(s.as_ref(), 1).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let s = spec("gw_progeny", &["N=poisson:1"]);
        let batch = exact_samples(s.as_ref(), 2000, 5, 50).unwrap();
        assert!(batch.discarded > 0);
        assert!(batch.max_nodes <= 50);
    }

    #[test]
    fn probe_agrees_once_trees_die_out() {
        let s = spec("gw_height", &["N=bernoulli:0.5"]);
        let a = Delta(Value::ZERO);
        let b = Law::Const(5.0);
        let shallow = cftp_endogeny_probe(s.as_ref(), 2, &a, &b, 2000, 1).unwrap();
        let deep = cftp_endogeny_probe(s.as_ref(), 12, &a, &b, 2000, 1).unwrap();
        assert!(shallow.fraction_equal < deep.fraction_equal);
        assert!(deep.fraction_equal > 0.99);
    }
}
