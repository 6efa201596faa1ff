//! Random generation and the variation operators.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::tree::{subtree_end, Node, PolicyTree};
use crate::fuzzy::SearchBox;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeLimits {
    /// Rules per action, drawn from `1..=max_rules`.
    pub max_rules: usize,
    /// Clauses per rule, drawn from `0..=max_dims` and capped at the state dimension.
    pub max_dims: usize,
}

fn draw<F: Scalar, R: Rng + ?Sized>(rng: &mut R, range: (F, F)) -> F {
    rng.random_range(range.0..=range.1)
}

/// A well-typed random forest with one tree per action.
pub fn random_tree<F: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    limits: TreeLimits,
    search: &SearchBox<F>,
    state_dim: usize,
    action_dim: usize,
) -> PolicyTree<F> {
    let max_rules = limits.max_rules.max(1);
    let max_dims = limits.max_dims.min(state_dim);
    let actions = (0..action_dim)
        .map(|_| {
            let mut nodes = vec![Node::Policy, Node::Const(draw(rng, search.alpha))];
            for _ in 0..rng.random_range(1..=max_rules) {
                nodes.push(Node::Rule);
                let dims = rng.random_range(0..=max_dims);
                let mut vars: Vec<usize> = (0..state_dim).collect();
                for k in 0..dims {
                    let pick = rng.random_range(k..state_dim);
                    vars.swap(k, pick);
                    nodes.extend([
                        Node::Dim,
                        Node::Var(vars[k]),
                        Node::Const(draw(rng, search.center)),
                        Node::Const(draw(rng, search.width)),
                    ]);
                }
                nodes.push(Node::DimEnd);
                nodes.push(Node::Const(draw(rng, search.consequent)));
            }
            nodes.push(Node::RuleEnd);
            nodes
        })
        .collect();
    PolicyTree { actions, fitness: None }
}

/// Swaps a random subtree of `a` with a random subtree of the same type in `b`.
///
/// Returns copies of the parents when `b` has no node of the chosen type.
pub fn crossover<F: Scalar, R: Rng + ?Sized>(
    a: &PolicyTree<F>,
    b: &PolicyTree<F>,
    rng: &mut R,
) -> (PolicyTree<F>, PolicyTree<F>) {
    let mut ca = a.clone();
    let mut cb = b.clone();
    ca.fitness = None;
    cb.fitness = None;
    if a.is_empty() {
        return (ca, cb);
    }
    let ia = rng.random_range(0..a.len());
    let kind = a.node(ia).node_type();
    let same: Vec<usize> = (0..b.len()).filter(|&j| b.node(j).node_type() == kind).collect();
    if same.is_empty() {
        ca.fitness = a.fitness;
        cb.fitness = b.fitness;
        return (ca, cb);
    }
    let ib = same[rng.random_range(0..same.len())];
    let (aa, pa) = a.locate(ia);
    let (ab, pb) = b.locate(ib);
    let ea = subtree_end(&a.actions[aa], pa);
    let eb = subtree_end(&b.actions[ab], pb);
    ca.actions[aa].splice(pa..ea, b.actions[ab][pb..eb].iter().cloned());
    cb.actions[ab].splice(pb..eb, a.actions[aa][pa..ea].iter().cloned());
    (ca, cb)
}

/// Perturbs every constant `z` with `N(z, max(0.1|z|, 1e-3))`.
pub fn gaussian_mutate<F: Scalar, R: Rng + ?Sized>(tree: &PolicyTree<F>, rng: &mut R) -> PolicyTree<F> {
    let mut out = tree.clone();
    let mut changed = false;
    for n in out.actions.iter_mut().flatten() {
        if let Node::Const(z) = n {
            let sd = (F::of(0.1) * z.abs()).max(F::of(1e-3));
            let e: f64 = rng.sample(StandardNormal);
            *z += sd * F::of(e);
            changed = true;
        }
    }
    if changed {
        out.fitness = None;
    }
    out
}

/// Drops every clause whose variable already appeared earlier in its rule.
pub fn tree_correction<F: Scalar>(tree: &PolicyTree<F>) -> PolicyTree<F> {
    let mut changed = false;
    let actions = tree
        .actions
        .iter()
        .map(|nodes| {
            let mut out = Vec::with_capacity(nodes.len());
            let mut seen: Vec<usize> = Vec::new();
            let mut i = 0;
            while i < nodes.len() {
                match &nodes[i] {
                    Node::Rule => seen.clear(),
                    Node::Dim => {
                        if let Node::Var(v) = nodes[i + 1] {
                            if seen.contains(&v) {
                                // skip d, s, c, σ; the clause's next-chain follows
                                changed = true;
                                i += 4;
                                continue;
                            }
                            seen.push(v);
                        }
                    }
                    _ => {}
                }
                out.push(nodes[i].clone());
                i += 1;
            }
            out
        })
        .collect();
    PolicyTree {
        actions,
        fitness: if changed { None } else { tree.fitness },
    }
}

/// True when no rule tests the same variable twice.
pub fn is_corrected<F: Scalar>(tree: &PolicyTree<F>) -> bool {
    tree.rules()
        .iter()
        .flat_map(|(_, rules)| rules)
        .all(|r| {
            let mut vars: Vec<usize> = r.clauses.iter().map(|c| c.0).collect();
            vars.sort_unstable();
            vars.windows(2).all(|w| w[0] != w[1])
        })
}
