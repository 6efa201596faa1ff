//! Typed fuzzy-policy trees stored as flat preorder node arrays.
//!
//! Grammar, one tree per action dimension:
//!
//! ```text
//! Policy    := π(alpha: Float, rules: RuleChain)
//! RuleChain := m(dims: DimChain, consequent: Float, next: RuleChain) | m̄
//! DimChain  := d(var: Variable, center: Float, width: Float, next: DimChain) | d̄
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{FuzzyPolicy, FuzzyRule, MembershipClause, PolicyContext, RuleBase};
use crate::scalar::Scalar;

/// Slot type shared by every node that may fill it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeType {
    Policy,
    RuleChain,
    DimChain,
    Variable,
    Float,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node<F> {
    Policy,
    Rule,
    RuleEnd,
    Dim,
    DimEnd,
    Var(usize),
    Const(F),
}

/// What a floating-point terminal means, given the slot it occupies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FloatRole {
    Alpha,
    Consequent,
    Center,
    Width,
}

impl<F> Node<F> {
    pub fn node_type(&self) -> NodeType {
        match self {
            Node::Policy => NodeType::Policy,
            Node::Rule | Node::RuleEnd => NodeType::RuleChain,
            Node::Dim | Node::DimEnd => NodeType::DimChain,
            Node::Var(_) => NodeType::Variable,
            Node::Const(_) => NodeType::Float,
        }
    }

    pub fn children(&self) -> &'static [NodeType] {
        use NodeType::*;
        match self {
            Node::Policy => &[Float, RuleChain],
            Node::Rule => &[DimChain, Float, RuleChain],
            Node::Dim => &[Variable, Float, Float, DimChain],
            _ => &[],
        }
    }

    pub fn arity(&self) -> usize {
        self.children().len()
    }

    /// Weight of the node in the complexity count.
    pub fn weight(&self) -> usize {
        match self {
            Node::Policy | Node::RuleEnd | Node::DimEnd => 0,
            Node::Var(_) | Node::Const(_) => 1,
            Node::Dim => 2,
            Node::Rule => 10,
        }
    }
}

/// Index one past the subtree rooted at `start`.
pub fn subtree_end<F>(nodes: &[Node<F>], start: usize) -> usize {
    let mut open = 1usize;
    let mut i = start;
    while open > 0 {
        open = open + nodes[i].arity() - 1;
        i += 1;
    }
    i
}

/// A policy individual: one typed tree per action dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: Deserialize<'de>"))]
pub struct PolicyTree<F> {
    pub actions: Vec<Vec<Node<F>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitness: Option<F>,
}

/// Plain clause list for building trees by hand.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleSpec<F> {
    pub clauses: Vec<(usize, F, F)>,
    pub consequent: F,
}

impl<F: Scalar> PolicyTree<F> {
    /// Builds a one-action-per-entry forest from `(alpha, rules)` pairs.
    pub fn from_rules(actions: &[(F, Vec<RuleSpec<F>>)]) -> Self {
        let actions = actions
            .iter()
            .map(|(alpha, rules)| {
                let mut nodes = vec![Node::Policy, Node::Const(*alpha)];
                for rule in rules {
                    nodes.push(Node::Rule);
                    for &(var, center, width) in &rule.clauses {
                        nodes.extend([Node::Dim, Node::Var(var), Node::Const(center), Node::Const(width)]);
                    }
                    nodes.push(Node::DimEnd);
                    nodes.push(Node::Const(rule.consequent));
                }
                nodes.push(Node::RuleEnd);
                nodes
            })
            .collect();
        Self { actions, fitness: None }
    }

    /// The tree with the same rules, alphas and clauses as `policy`.
    pub fn from_policy(policy: &FuzzyPolicy<F>) -> Self {
        let actions: Vec<(F, Vec<RuleSpec<F>>)> = policy
            .actions
            .iter()
            .map(|base| {
                let rules = base
                    .rules
                    .iter()
                    .map(|r| RuleSpec {
                        clauses: r.clauses.iter().map(|c| (c.state_index, c.center, c.sigma)).collect(),
                        consequent: r.consequent,
                    })
                    .collect();
                (base.alpha, rules)
            })
            .collect();
        Self::from_rules(&actions)
    }

    pub fn complexity(&self) -> usize {
        self.actions.iter().flatten().map(Node::weight).sum()
    }

    pub fn len(&self) -> usize {
        self.actions.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat position `i` as `(action, offset)`.
    pub fn locate(&self, mut i: usize) -> (usize, usize) {
        for (a, nodes) in self.actions.iter().enumerate() {
            if i < nodes.len() {
                return (a, i);
            }
            i -= nodes.len();
        }
        panic!("node index out of range");
    }

    pub fn node(&self, i: usize) -> &Node<F> {
        let (a, k) = self.locate(i);
        &self.actions[a][k]
    }

    /// Verifies the grammar, variable range and constant finiteness.
    pub fn type_check(&self, state_dim: usize) -> Result<()> {
        if self.actions.is_empty() {
            return Err(Error::structure("tree has no action roots"));
        }
        for (a, nodes) in self.actions.iter().enumerate() {
            let end = check_slot(nodes, 0, NodeType::Policy, state_dim)
                .map_err(|e| Error::structure(format!("action {a}: {e}")))?;
            if end != nodes.len() {
                return Err(Error::structure(format!("action {a}: trailing nodes after root")));
            }
        }
        Ok(())
    }

    /// Roles of the floating-point terminals, in preorder across actions.
    pub fn float_roles(&self) -> Vec<FloatRole> {
        let mut roles = Vec::new();
        for nodes in &self.actions {
            // stack of (parent kind, next child slot)
            let mut stack: Vec<(&Node<F>, usize)> = Vec::new();
            for node in nodes {
                if let Some((parent, slot)) = stack.last_mut() {
                    if let Node::Const(_) = node {
                        roles.push(match (parent, *slot) {
                            (Node::Policy, _) => FloatRole::Alpha,
                            (Node::Rule, _) => FloatRole::Consequent,
                            (Node::Dim, 1) => FloatRole::Center,
                            _ => FloatRole::Width,
                        });
                    }
                    *slot += 1;
                } else if let Node::Const(_) = node {
                    roles.push(FloatRole::Alpha);
                }
                if node.arity() > 0 {
                    stack.push((node, 0));
                }
                while let Some((parent, slot)) = stack.last() {
                    if *slot == parent.arity() {
                        stack.pop();
                    } else {
                        break;
                    }
                }
            }
        }
        roles
    }

    pub fn constants(&self) -> Vec<F> {
        self.actions
            .iter()
            .flatten()
            .filter_map(|n| match n {
                Node::Const(v) => Some(*v),
                _ => None,
            })
            .collect()
    }

    /// Overwrites the constants in preorder; `values` must match [`Self::constants`].
    pub fn set_constants(&mut self, values: &[F]) {
        let mut it = values.iter();
        for n in self.actions.iter_mut().flatten() {
            if let Node::Const(v) = n {
                *v = *it.next().expect("constant count mismatch");
            }
        }
        assert!(it.next().is_none(), "constant count mismatch");
    }

    /// Node kinds and variable indices with constant values erased.
    pub fn shape(&self) -> Vec<(u8, usize)> {
        self.actions
            .iter()
            .flat_map(|nodes| {
                nodes.iter().map(|n| match n {
                    Node::Policy => (0, 0),
                    Node::Rule => (1, 0),
                    Node::RuleEnd => (2, 0),
                    Node::Dim => (3, 0),
                    Node::DimEnd => (4, 0),
                    Node::Var(v) => (5, *v),
                    Node::Const(_) => (6, 0),
                })
            })
            .chain(std::iter::once((7, self.actions.len())))
            .collect()
    }

    /// Reads the tree as per-action `(alpha, rules)` with raw constants.
    pub fn rules(&self) -> Vec<(F, Vec<RuleSpec<F>>)> {
        self.actions.iter().map(|nodes| read_action(nodes)).collect()
    }

    /// Converts to the policy form evaluated by the fitness function.
    ///
    /// Widths enter as `clamp(|sigma|, 1e-3, 10)` and alpha as
    /// `max(|alpha|, 1e-3)`. An action without rules outputs its bound center.
    pub fn to_policy(&self, context: &PolicyContext<F>) -> Result<FuzzyPolicy<F>> {
        if self.actions.len() != context.action_dim() {
            return Err(Error::structure(format!(
                "tree has {} actions, context {}",
                self.actions.len(),
                context.action_dim()
            )));
        }
        let actions = self
            .rules()
            .into_iter()
            .map(|(alpha, rules)| {
                let mut rules: Vec<FuzzyRule<F>> = rules
                    .into_iter()
                    .map(|r| {
                        let clauses = r
                            .clauses
                            .into_iter()
                            .map(|(i, c, s)| MembershipClause::new(i, c, effective_width(s)))
                            .collect();
                        FuzzyRule::new(clauses, r.consequent)
                    })
                    .collect();
                if rules.is_empty() {
                    rules.push(FuzzyRule::new(Vec::new(), F::zero()));
                }
                RuleBase {
                    rules,
                    alpha: effective_alpha(alpha),
                }
            })
            .collect();
        FuzzyPolicy::new(actions, context.bounds.clone(), context.normalizer.clone())
    }
}

pub(crate) fn effective_width<F: Scalar>(sigma: F) -> F {
    sigma.abs().max(F::of(1e-3)).min(F::of(10.0))
}

pub(crate) fn effective_alpha<F: Scalar>(alpha: F) -> F {
    alpha.abs().max(F::of(1e-3))
}

fn check_slot<F: Scalar>(nodes: &[Node<F>], at: usize, expect: NodeType, state_dim: usize) -> Result<usize> {
    let node = nodes
        .get(at)
        .ok_or_else(|| Error::structure(format!("missing {expect:?} node at {at}")))?;
    if node.node_type() != expect {
        return Err(Error::structure(format!(
            "{:?} node at {at} in a {expect:?} slot",
            node.node_type()
        )));
    }
    match node {
        Node::Var(v) if *v >= state_dim => {
            return Err(Error::structure(format!("variable {v} out of range at {at}")));
        }
        Node::Const(c) if !c.is_finite() => {
            return Err(Error::structure(format!("non-finite constant at {at}")));
        }
        _ => {}
    }
    let mut next = at + 1;
    for child in node.children() {
        next = check_slot(nodes, next, *child, state_dim)?;
    }
    Ok(next)
}

fn read_action<F: Scalar>(nodes: &[Node<F>]) -> (F, Vec<RuleSpec<F>>) {
    let konst = |i: usize| match nodes[i] {
        Node::Const(v) => v,
        _ => panic!("expected constant at {i}; tree not type checked"),
    };
    let alpha = konst(1);
    let mut rules = Vec::new();
    let mut i = 2;
    while let Node::Rule = nodes[i] {
        i += 1;
        let mut clauses = Vec::new();
        while let Node::Dim = nodes[i] {
            let var = match nodes[i + 1] {
                Node::Var(v) => v,
                _ => panic!("expected variable at {}", i + 1),
            };
            clauses.push((var, konst(i + 2), konst(i + 3)));
            i += 4;
        }
        // DimEnd, then the consequent
        let consequent = konst(i + 1);
        i += 2;
        rules.push(RuleSpec { clauses, consequent });
    }
    (alpha, rules)
}

/// Evaluates the tree directly with products of Gaussian memberships.
///
/// Independent of [`FuzzyPolicy`]; used to cross-check conversion.
pub fn interpret<F: Scalar>(tree: &PolicyTree<F>, context: &PolicyContext<F>, state: &[F]) -> Vec<F> {
    let x: Vec<F> = match &context.normalizer {
        Some(n) => n.apply(state),
        None => state.to_vec(),
    };
    tree.rules()
        .into_iter()
        .zip(&context.bounds)
        .map(|((alpha, rules), bound)| {
            let (mut num, mut den) = (F::zero(), F::zero());
            for r in &rules {
                let mut w = F::one();
                for &(i, c, s) in &r.clauses {
                    let s = effective_width(s);
                    let z = (x[i] - c) / s;
                    w *= (-z * z / F::of(2.0)).exp();
                }
                num += w * r.consequent;
                den += w;
            }
            let avg = if rules.is_empty() { F::zero() } else { num / den };
            bound.from_unit((effective_alpha(alpha) * avg).tanh())
        })
        .collect()
}
