//! Takagi-Sugeno style fuzzy policies with Gaussian memberships.
//!
//! A policy holds one independent rule base per action dimension. Each rule
//! base produces `tanh(alpha * weighted_mean(consequents))` which is then
//! mapped affinely from `(-1, 1)` onto the action bounds. Rule premises act on
//! normalized state features (see [`Normalizer`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Closed interval of admissible values for one action dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionBound<F> {
    pub lo: F,
    pub hi: F,
}

impl<F: Scalar> ActionBound<F> {
    pub fn new(lo: F, hi: F) -> Self {
        Self { lo, hi }
    }

    pub fn symmetric(limit: F) -> Self {
        Self { lo: -limit, hi: limit }
    }

    pub fn center(&self) -> F {
        (self.lo + self.hi) / F::of(2.0)
    }

    pub fn half_range(&self) -> F {
        (self.hi - self.lo) / F::of(2.0)
    }

    /// Maps `u` in `[-1, 1]` onto `[lo, hi]`.
    #[inline]
    pub fn from_unit(&self, u: F) -> F {
        self.center() + u * self.half_range()
    }

    #[inline]
    pub fn clamp(&self, a: F) -> F {
        a.max(self.lo).min(self.hi)
    }

    pub fn contains(&self, a: F) -> bool {
        a >= self.lo && a <= self.hi
    }
}

/// Affine per-feature map from raw state units onto `[-1, 1]`.
///
/// Features whose observed range collapses to a point map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer<F> {
    pub lo: Vec<F>,
    pub hi: Vec<F>,
}

impl<F: Scalar> Normalizer<F> {
    pub fn new(lo: Vec<F>, hi: Vec<F>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::structure("normalizer bounds differ in length"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::structure("normalizer requires lo <= hi"));
        }
        Ok(Self { lo, hi })
    }

    /// Component-wise min/max over a set of states.
    pub fn fit<'a, I>(states: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [F]>,
    {
        let mut iter = states.into_iter();
        let first = iter.next().ok_or(Error::EmptyDataset)?;
        let mut lo = first.to_vec();
        let mut hi = first.to_vec();
        for s in iter {
            if s.len() != lo.len() {
                return Err(Error::structure("states of differing dimension"));
            }
            for (j, &v) in s.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    #[inline]
    pub fn apply_one(&self, index: usize, value: F) -> F {
        let (lo, hi) = (self.lo[index], self.hi[index]);
        let span = hi - lo;
        if span > F::zero() {
            F::of(2.0) * (value - lo) / span - F::one()
        } else {
            F::zero()
        }
    }

    pub fn apply(&self, state: &[F]) -> Vec<F> {
        state
            .iter()
            .enumerate()
            .map(|(j, &v)| self.apply_one(j, v))
            .collect()
    }
}

/// One Gaussian factor `exp(-(c - s[i])^2 / (2 sigma^2))` of a rule premise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipClause<F> {
    pub state_index: usize,
    pub center: F,
    pub sigma: F,
}

impl<F: Scalar> MembershipClause<F> {
    pub fn new(state_index: usize, center: F, sigma: F) -> Self {
        Self {
            state_index,
            center,
            sigma,
        }
    }

    /// Log of the membership degree for an already normalized feature value.
    #[inline]
    pub(crate) fn log_degree(&self, x: F) -> F {
        let z = (self.center - x) / self.sigma;
        -z * z / F::of(2.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule<F> {
    pub clauses: Vec<MembershipClause<F>>,
    pub consequent: F,
}

impl<F: Scalar> FuzzyRule<F> {
    pub fn new(clauses: Vec<MembershipClause<F>>, consequent: F) -> Self {
        Self {
            clauses,
            consequent,
        }
    }

    /// True when no two clauses test the same state feature.
    pub fn has_distinct_features(&self) -> bool {
        self.clauses
            .iter()
            .enumerate()
            .all(|(i, c)| self.clauses[..i].iter().all(|p| p.state_index != c.state_index))
    }
}

/// The rules and output slope driving one action dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleBase<F> {
    pub rules: Vec<FuzzyRule<F>>,
    pub alpha: F,
}

impl<F: Scalar> RuleBase<F> {
    /// Squashed defuzzified output in `(-1, 1)` for a raw state.
    ///
    /// Activations are combined in the log domain and shifted by their
    /// maximum, so the denominator never underflows to zero.
    pub fn unit_output(&self, state: &[F], normalizer: Option<&Normalizer<F>>) -> F {
        if self.rules.is_empty() {
            return F::zero();
        }
        let log_act = |rule: &FuzzyRule<F>| -> F {
            rule.clauses
                .iter()
                .map(|c| {
                    let raw = state[c.state_index];
                    let x = match normalizer {
                        Some(n) => n.apply_one(c.state_index, raw),
                        None => raw,
                    };
                    c.log_degree(x)
                })
                .fold(F::zero(), |acc, v| acc + v)
        };
        if self.rules.len() == 1 {
            return (self.alpha * self.rules[0].consequent).tanh();
        }
        // Small rule bases dominate in practice; avoid a heap allocation.
        let mut buf = [F::zero(); 16];
        let mut heap;
        let logs: &mut [F] = if self.rules.len() <= buf.len() {
            &mut buf[..self.rules.len()]
        } else {
            heap = vec![F::zero(); self.rules.len()];
            &mut heap
        };
        let mut max = F::neg_infinity();
        for (slot, rule) in logs.iter_mut().zip(&self.rules) {
            *slot = log_act(rule);
            max = max.max(*slot);
        }
        let (mut num, mut den) = (F::zero(), F::zero());
        for (l, rule) in logs.iter().zip(&self.rules) {
            let w = (*l - max).exp();
            num += w * rule.consequent;
            den += w;
        }
        (self.alpha * num / den).tanh()
    }
}

/// Evaluable state-to-action map.
pub trait Policy<F: Scalar>: Sync {
    fn action_dim(&self) -> usize;

    /// Writes the action for `state` into `action` (length `action_dim`).
    fn act(&self, state: &[F], action: &mut [F]);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: Deserialize<'de>"))]
pub struct FuzzyPolicy<F> {
    pub actions: Vec<RuleBase<F>>,
    pub bounds: Vec<ActionBound<F>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalizer: Option<Normalizer<F>>,
}

impl<F: Scalar> FuzzyPolicy<F> {
    pub fn new(
        actions: Vec<RuleBase<F>>,
        bounds: Vec<ActionBound<F>>,
        normalizer: Option<Normalizer<F>>,
    ) -> Result<Self> {
        let policy = Self {
            actions,
            bounds,
            normalizer,
        };
        policy.validate(None)?;
        Ok(policy)
    }

    /// Checks the structural invariants, optionally against a state dimension.
    pub fn validate(&self, state_dim: Option<usize>) -> Result<()> {
        if self.actions.is_empty() || self.actions.len() != self.bounds.len() {
            return Err(Error::structure(format!(
                "{} rule bases for {} action bounds",
                self.actions.len(),
                self.bounds.len()
            )));
        }
        let dim = state_dim.or_else(|| self.normalizer.as_ref().map(|n| n.dim()));
        for (a, base) in self.actions.iter().enumerate() {
            if base.rules.is_empty() {
                return Err(Error::structure(format!("action {a} has no rules")));
            }
            if !(base.alpha > F::zero()) {
                return Err(Error::structure(format!("action {a}: alpha must be > 0")));
            }
            for rule in &base.rules {
                for c in &rule.clauses {
                    if !(c.sigma > F::zero()) {
                        return Err(Error::structure("membership width must be > 0"));
                    }
                    if let Some(d) = dim {
                        if c.state_index >= d {
                            return Err(Error::structure(format!(
                                "state index {} out of range for dimension {d}",
                                c.state_index
                            )));
                        }
                    }
                }
            }
        }
        for b in &self.bounds {
            if !(b.lo < b.hi) {
                return Err(Error::structure("action bounds require lo < hi"));
            }
        }
        Ok(())
    }

    pub fn output(&self, state: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.actions.len()];
        self.act(state, &mut out);
        out
    }

    pub fn rule_count(&self) -> usize {
        self.actions.iter().map(|a| a.rules.len()).sum()
    }
}

impl<F: Scalar> Policy<F> for FuzzyPolicy<F> {
    fn action_dim(&self) -> usize {
        self.actions.len()
    }

    #[inline]
    fn act(&self, state: &[F], action: &mut [F]) {
        let norm = self.normalizer.as_ref();
        for ((out, base), bound) in action.iter_mut().zip(&self.actions).zip(&self.bounds) {
            *out = bound.from_unit(base.unit_output(state, norm));
        }
    }
}

/// A [`FuzzyPolicy`] flattened for repeated evaluation, with the state
/// normalization folded into each clause's center and width.
///
/// Agrees with [`FuzzyPolicy::output`] up to floating-point rounding.
#[derive(Clone, Debug)]
pub struct CompiledPolicy<F> {
    /// `(state index, raw-unit center, 1 / (sqrt(2) * raw-unit width))`
    terms: Vec<(usize, F, F)>,
    /// `(end of this rule's terms, constant log offset, consequent)`
    rules: Vec<(usize, F, F)>,
    /// `(end of this action's rules, alpha, bound)`
    actions: Vec<(usize, F, ActionBound<F>)>,
}

impl<F: Scalar> FuzzyPolicy<F> {
    pub fn compile(&self) -> CompiledPolicy<F> {
        let mut terms = Vec::new();
        let mut rules = Vec::new();
        let mut actions = Vec::with_capacity(self.actions.len());
        let root_half = F::of(std::f64::consts::FRAC_1_SQRT_2);
        for (base, bound) in self.actions.iter().zip(&self.bounds) {
            for rule in &base.rules {
                let mut offset = F::zero();
                for c in &rule.clauses {
                    let (gain, shift) = match &self.normalizer {
                        Some(n) => {
                            let span = n.hi[c.state_index] - n.lo[c.state_index];
                            if span > F::zero() {
                                let gain = F::of(2.0) / span;
                                (gain, -F::one() - gain * n.lo[c.state_index])
                            } else {
                                (F::zero(), F::zero())
                            }
                        }
                        None => (F::one(), F::zero()),
                    };
                    if gain == F::zero() {
                        offset += c.log_degree(F::zero());
                    } else {
                        terms.push((c.state_index, (c.center - shift) / gain, gain * root_half / c.sigma));
                    }
                }
                rules.push((terms.len(), offset, rule.consequent));
            }
            actions.push((rules.len(), base.alpha, *bound));
        }
        CompiledPolicy {
            terms,
            rules,
            actions,
        }
    }
}

impl<F: Scalar> Policy<F> for CompiledPolicy<F> {
    fn action_dim(&self) -> usize {
        self.actions.len()
    }

    #[inline]
    fn act(&self, state: &[F], action: &mut [F]) {
        let mut logs = [F::zero(); 32];
        let (mut rule_start, mut term_start) = (0, 0);
        for (out, &(rule_end, alpha, bound)) in action.iter_mut().zip(&self.actions) {
            let rules = &self.rules[rule_start..rule_end];
            let unit = if rules.len() == 1 {
                term_start = rules[0].0;
                (alpha * rules[0].2).tanh()
            } else if rules.len() > logs.len() {
                // rare: fall back to two passes without the buffer
                let mut max = F::neg_infinity();
                let mut t = term_start;
                for &(end, offset, _) in rules {
                    max = max.max(self.log_activation(state, t, end, offset));
                    t = end;
                }
                let (mut num, mut den) = (F::zero(), F::zero());
                for &(end, offset, o) in rules {
                    let w = (self.log_activation(state, term_start, end, offset) - max).exp();
                    num += w * o;
                    den += w;
                    term_start = end;
                }
                (alpha * num / den).tanh()
            } else {
                let mut max = F::neg_infinity();
                for (slot, &(end, offset, _)) in logs.iter_mut().zip(rules) {
                    *slot = self.log_activation(state, term_start, end, offset);
                    max = max.max(*slot);
                    term_start = end;
                }
                let (mut num, mut den) = (F::zero(), F::zero());
                for (l, &(_, _, o)) in logs.iter().zip(rules) {
                    let w = (*l - max).exp();
                    num += w * o;
                    den += w;
                }
                (alpha * num / den).tanh()
            };
            *out = bound.from_unit(unit);
            rule_start = rule_end;
        }
    }
}

impl<F: Scalar> CompiledPolicy<F> {
    #[inline]
    fn log_activation(&self, state: &[F], start: usize, end: usize, offset: F) -> F {
        let mut acc = F::zero();
        for &(idx, center, k) in &self.terms[start..end] {
            let z = (state[idx] - center) * k;
            acc += z * z;
        }
        offset - acc
    }
}

/// Action bounds and state normalization shared by every policy learned
/// for one system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyContext<F> {
    pub bounds: Vec<ActionBound<F>>,
    pub normalizer: Option<Normalizer<F>>,
}

impl<F: Scalar> PolicyContext<F> {
    pub fn new(bounds: Vec<ActionBound<F>>, normalizer: Option<Normalizer<F>>) -> Self {
        Self { bounds, normalizer }
    }

    pub fn action_dim(&self) -> usize {
        self.bounds.len()
    }
}

/// Gaussian membership degree of `state[clause.state_index]`.
pub fn membership<F: Scalar>(clause: &MembershipClause<F>, state: &[F]) -> F {
    clause.log_degree(state[clause.state_index]).exp()
}

/// Product of all clause memberships; an empty premise is fully active.
pub fn rule_activation<F: Scalar>(rule: &FuzzyRule<F>, state: &[F]) -> F {
    rule.clauses
        .iter()
        .fold(F::one(), |acc, c| acc * membership(c, state))
}

/// Action vector of `policy` at `state`.
pub fn policy_output<F: Scalar>(policy: &FuzzyPolicy<F>, state: &[F]) -> Vec<F> {
    policy.output(state)
}

/// Fixed rule structure of one action dimension: every rule tests the same
/// ordered `features`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionLayout {
    pub features: Vec<usize>,
    pub rules: usize,
}

impl ActionLayout {
    pub fn new(features: Vec<usize>, rules: usize) -> Self {
        Self { features, rules }
    }

    /// `(2D + 1) * C + 1`
    pub fn len(&self) -> usize {
        (2 * self.features.len() + 1) * self.rules + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Layout of the flat genome searched by the swarm: per action, per rule the
/// D centers, then the D widths, then the consequent; the action's slope last.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterLayout {
    pub actions: Vec<ActionLayout>,
}

impl ParameterLayout {
    pub fn new(actions: Vec<ActionLayout>) -> Self {
        Self { actions }
    }

    /// Single action testing `features` in each of `rules` rules.
    pub fn single(features: Vec<usize>, rules: usize) -> Self {
        Self::new(vec![ActionLayout::new(features, rules)])
    }

    pub fn len(&self) -> usize {
        self.actions.iter().map(ActionLayout::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Per-coordinate search bounds derived from `search`.
    pub fn bounds<F: Scalar>(&self, search: &SearchBox<F>) -> Vec<(F, F)> {
        let mut out = Vec::with_capacity(self.len());
        for a in &self.actions {
            let d = a.features.len();
            for _ in 0..a.rules {
                out.extend(std::iter::repeat_n(search.center, d));
                out.extend(std::iter::repeat_n(search.width, d));
                out.push(search.consequent);
            }
            out.push(search.alpha);
        }
        out
    }
}

/// Search ranges for each kind of fuzzy parameter, in normalized units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox<F> {
    pub center: (F, F),
    pub width: (F, F),
    pub consequent: (F, F),
    pub alpha: (F, F),
}

impl<F: Scalar> Default for SearchBox<F> {
    fn default() -> Self {
        Self {
            center: (F::of(-1.0), F::of(1.0)),
            width: (F::of(1e-3), F::of(2.0)),
            consequent: (F::of(-3.0), F::of(3.0)),
            alpha: (F::of(0.1), F::of(10.0)),
        }
    }
}

/// Widths are clamped into this interval when a genome is decoded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthClamp<F> {
    pub min: F,
    pub max: F,
}

impl<F: Scalar> Default for WidthClamp<F> {
    fn default() -> Self {
        Self {
            min: F::of(1e-3),
            max: F::of(10.0),
        }
    }
}

impl<F: Scalar> WidthClamp<F> {
    #[inline]
    pub fn apply(&self, sigma: F) -> F {
        sigma.max(self.min).min(self.max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector<F> {
    pub layout: ParameterLayout,
    pub values: Vec<F>,
}

/// Flattens a fixed-structure policy into its genome.
pub fn encode<F: Scalar>(policy: &FuzzyPolicy<F>) -> Result<ParameterVector<F>> {
    let mut layouts = Vec::with_capacity(policy.actions.len());
    let mut values = Vec::new();
    for (a, base) in policy.actions.iter().enumerate() {
        let first = base
            .rules
            .first()
            .ok_or_else(|| Error::structure(format!("action {a} has no rules")))?;
        let features: Vec<usize> = first.clauses.iter().map(|c| c.state_index).collect();
        for rule in &base.rules {
            let same = rule.clauses.len() == features.len()
                && rule.clauses.iter().zip(&features).all(|(c, &f)| c.state_index == f);
            if !same {
                return Err(Error::structure(format!(
                    "action {a}: rules do not share one feature list"
                )));
            }
            values.extend(rule.clauses.iter().map(|c| c.center));
            values.extend(rule.clauses.iter().map(|c| c.sigma));
            values.push(rule.consequent);
        }
        values.push(base.alpha);
        layouts.push(ActionLayout::new(features, base.rules.len()));
    }
    Ok(ParameterVector {
        layout: ParameterLayout::new(layouts),
        values,
    })
}

/// Rebuilds a policy from its genome, clamping widths into `widths`.
pub fn decode<F: Scalar>(
    vector: &ParameterVector<F>,
    bounds: &[ActionBound<F>],
    normalizer: Option<&Normalizer<F>>,
    widths: WidthClamp<F>,
) -> Result<FuzzyPolicy<F>> {
    decode_values(&vector.layout, &vector.values, bounds, normalizer, widths)
}

pub fn decode_values<F: Scalar>(
    layout: &ParameterLayout,
    values: &[F],
    bounds: &[ActionBound<F>],
    normalizer: Option<&Normalizer<F>>,
    widths: WidthClamp<F>,
) -> Result<FuzzyPolicy<F>> {
    if values.len() != layout.len() {
        return Err(Error::structure(format!(
            "parameter vector has length {}, layout requires {}",
            values.len(),
            layout.len()
        )));
    }
    if bounds.len() != layout.actions.len() {
        return Err(Error::structure("one action bound per action layout required"));
    }
    let mut rest = values;
    let mut actions = Vec::with_capacity(layout.actions.len());
    for a in &layout.actions {
        let d = a.features.len();
        let mut rules = Vec::with_capacity(a.rules);
        for _ in 0..a.rules {
            let (block, tail) = rest.split_at(2 * d + 1);
            rest = tail;
            let clauses = a
                .features
                .iter()
                .enumerate()
                .map(|(j, &f)| MembershipClause::new(f, block[j], widths.apply(block[d + j])))
                .collect();
            rules.push(FuzzyRule::new(clauses, block[2 * d]));
        }
        actions.push(RuleBase {
            rules,
            alpha: rest[0],
        });
        rest = &rest[1..];
    }
    Ok(FuzzyPolicy {
        actions,
        bounds: bounds.to_vec(),
        normalizer: normalizer.cloned(),
    })
}

/// Bookkeeping stored next to a serialized policy.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complexity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// On-disk JSON form of a policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: Deserialize<'de>"))]
pub struct PolicyDocument<F> {
    #[serde(flatten)]
    pub policy: FuzzyPolicy<F>,
    #[serde(default)]
    pub metadata: PolicyMetadata,
}

impl<F: Scalar> PolicyDocument<F> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        doc.policy.validate(None)?;
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn clause(i: usize, c: f64, s: f64) -> MembershipClause<f64> {
        MembershipClause::new(i, c, s)
    }

    fn single(rules: Vec<FuzzyRule<f64>>, alpha: f64) -> FuzzyPolicy<f64> {
        FuzzyPolicy::new(
            vec![RuleBase { rules, alpha }],
            vec![ActionBound::symmetric(1.0)],
            None,
        )
        .unwrap()
    }

    #[test]
    fn membership_values() {
        assert_eq!(membership(&clause(0, 1.2, 0.5), &[1.2]), 1.0);
        let v = membership(&clause(0, 0.0, 1.0), &[1.0]);
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        assert!((v - 0.606531).abs() < 1e-6);
        let tiny = membership(&clause(1, 2.0, 0.1), &[0.0, 3.0]);
        // exp(-50) = 1.9287498479639178e-22
        assert!(tiny > 0.0);
        assert!((tiny - 1.928_749_847_963_917_8e-22).abs() < 1e-34);
    }

    #[test]
    fn rule_activation_values() {
        assert_eq!(rule_activation(&FuzzyRule::<f64>::new(vec![], 1.0), &[3.0]), 1.0);
        let half_sigma = 1.0 / (2.0 * 2f64.ln()).sqrt();
        let r = FuzzyRule::new(vec![clause(0, 0.0, half_sigma), clause(1, 0.0, half_sigma)], 0.0);
        assert!((rule_activation(&r, &[1.0, 1.0]) - 0.25).abs() < 1e-15);
        let r = FuzzyRule::new(vec![clause(0, 0.0, 1.0), clause(1, 1.0, 2.0)], 0.0);
        assert!((rule_activation(&r, &[1.0, 1.0]) - 0.606_530_659_712_633_4).abs() < 1e-15);
    }

    #[test]
    fn policy_output_examples() {
        let zero = single(vec![FuzzyRule::new(vec![clause(0, 0.3, 0.2)], 0.0)], 4.0);
        assert_eq!(zero.output(&[0.7]), vec![0.0]);

        let mut p = single(vec![FuzzyRule::new(vec![clause(0, 0.3, 0.2)], 3.0)], 1.0);
        p.bounds = vec![ActionBound::symmetric(30.0)];
        let expect = 30.0 * 3f64.tanh();
        assert!((p.output(&[-5.0])[0] - expect).abs() < 1e-12);
        assert!((3f64.tanh() - 0.995055).abs() < 1e-6);

        let sym = single(
            vec![
                FuzzyRule::new(vec![clause(0, -1.0, 1.0)], -1.0),
                FuzzyRule::new(vec![clause(0, 1.0, 1.0)], 1.0),
            ],
            1.0,
        );
        assert_eq!(sym.output(&[0.0]), vec![0.0]);
    }

    #[test]
    fn far_states_do_not_divide_by_zero() {
        let p = single(
            vec![
                FuzzyRule::new(vec![clause(0, -1.0, 1e-3)], -2.0),
                FuzzyRule::new(vec![clause(0, 1.0, 1e-3)], 2.0),
            ],
            1.0,
        );
        let out = p.output(&[100.0])[0];
        assert!(out.is_finite());
        assert!((out - 2f64.tanh()).abs() < 1e-12);
    }

    #[test]
    fn output_rescaled_to_asymmetric_bounds() {
        let mut p = single(vec![FuzzyRule::new(vec![], 0.0)], 1.0);
        p.bounds = vec![ActionBound::new(2.0, 6.0)];
        assert_eq!(p.output(&[0.0]), vec![4.0]);
    }

    #[test]
    fn normalizer_maps_range() {
        let n = Normalizer::new(vec![0.0, 5.0], vec![10.0, 5.0]).unwrap();
        assert_eq!(n.apply(&[0.0, 5.0]), vec![-1.0, 0.0]);
        assert_eq!(n.apply(&[10.0, 7.0]), vec![1.0, 0.0]);
        assert_eq!(n.apply_one(0, 5.0), 0.0);
        assert!(Normalizer::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn layout_lengths() {
        assert_eq!(ParameterLayout::single(vec![0, 1, 2, 3], 2).len(), 19);
        assert_eq!(ParameterLayout::single(vec![0], 1).len(), 4);
        let v = ParameterVector {
            layout: ParameterLayout::single(vec![0], 1),
            values: vec![0.0f64; 5],
        };
        assert!(matches!(
            decode(&v, &[ActionBound::symmetric(1.0)], None, WidthClamp::default()),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn encode_rejects_mixed_structure() {
        let p = single(
            vec![
                FuzzyRule::new(vec![clause(0, 0.0, 1.0)], 0.0),
                FuzzyRule::new(vec![clause(1, 0.0, 1.0)], 0.0),
            ],
            1.0,
        );
        assert!(encode(&p).is_err());
    }

    #[test]
    fn decode_clamps_widths() {
        let layout = ParameterLayout::single(vec![0], 1);
        let p = decode_values(
            &layout,
            &[0.0, -4.0, 1.0, 1.0],
            &[ActionBound::symmetric(1.0)],
            None,
            WidthClamp::default(),
        )
        .unwrap();
        assert_eq!(p.actions[0].rules[0].clauses[0].sigma, 1e-3);
    }

    #[test]
    fn decode_follows_genome_order() {
        let layout = ParameterLayout::single(vec![2, 0], 2);
        let vals: Vec<f64> = (0..layout.len()).map(|i| 0.1 + i as f64 * 0.01).collect();
        let p = decode_values(&layout, &vals, &[ActionBound::symmetric(1.0)], None, WidthClamp::default())
            .unwrap();
        let r0 = &p.actions[0].rules[0];
        assert_eq!(r0.clauses[0].state_index, 2);
        assert_eq!(r0.clauses[1].state_index, 0);
        assert_eq!(r0.clauses[0].center, vals[0]);
        assert_eq!(r0.clauses[1].center, vals[1]);
        assert_eq!(r0.clauses[0].sigma, vals[2]);
        assert_eq!(r0.clauses[1].sigma, vals[3]);
        assert_eq!(r0.consequent, vals[4]);
        assert_eq!(p.actions[0].rules[1].consequent, vals[9]);
        assert_eq!(p.actions[0].alpha, vals[10]);
    }

    #[test]
    fn activations_positive_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100_000 {
            let d = rng.random_range(0..5usize);
            let clauses = (0..d)
                .map(|j| clause(j, rng.random_range(-1.0..1.0), rng.random_range(0.05..2.0)))
                .collect();
            let state: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert!(rule_activation(&FuzzyRule::new(clauses, 0.0), &state) > 0.0);
        }
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let p = FuzzyPolicy::new(
            vec![RuleBase {
                rules: vec![FuzzyRule::new(vec![clause(1, 0.1 + 0.2, 1.0 / 3.0)], -std::f64::consts::E)],
                alpha: std::f64::consts::PI,
            }],
            vec![ActionBound::symmetric(30.0)],
            Some(Normalizer::new(vec![-3.0, -7.1], vec![3.0, 9.9]).unwrap()),
        )
        .unwrap();
        let doc = PolicyDocument {
            policy: p,
            metadata: PolicyMetadata {
                complexity: Some(17),
                fitness: Some(-41.000000000000014),
                seed: Some(3),
                config_hash: Some("ab12".into()),
            },
        };
        let text = doc.to_json().unwrap();
        assert!(text.contains("\"state_index\""));
        assert!(text.contains("\"consequent\""));
        assert_eq!(PolicyDocument::from_json(&text).unwrap(), doc);
    }

    fn arb_policy() -> impl Strategy<Value = FuzzyPolicy<f64>> {
        (1usize..4, 1usize..5, 1usize..3).prop_flat_map(|(d, c, acts)| {
            let per_action = (2 * d + 1) * c + 1;
            (
                prop::collection::vec(-3.0f64..3.0, per_action * acts),
                Just((d, c, acts)),
            )
                .prop_map(|(mut vals, (d, c, acts))| {
                    let layout = ParameterLayout::new(
                        (0..acts).map(|a| ActionLayout::new((0..d).map(|j| (j + a) % 4).collect(), c)).collect(),
                    );
                    // keep widths and slopes inside their valid ranges
                    let bounds = layout.bounds(&SearchBox::default());
                    for (v, (lo, hi)) in vals.iter_mut().zip(bounds) {
                        *v = v.max(lo).min(hi);
                    }
                    decode_values(
                        &layout,
                        &vals,
                        &vec![ActionBound::symmetric(2.0); acts],
                        None,
                        WidthClamp::default(),
                    )
                    .unwrap()
                })
        })
    }

    #[test]
    fn compiled_policy_agrees_with_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let norm = Normalizer::new(vec![-3.0, -10.0, 2.0, -1.0], vec![3.0, 12.0, 2.0, 4.0]).unwrap();
        for _ in 0..300 {
            let acts = rng.random_range(1..3usize);
            let actions = (0..acts)
                .map(|_| RuleBase {
                    rules: (0..rng.random_range(1..6usize))
                        .map(|_| {
                            let clauses = (0..rng.random_range(0..4usize))
                                .map(|j| clause(j, rng.random_range(-1.0..1.0), rng.random_range(0.01..2.0)))
                                .collect();
                            FuzzyRule::new(clauses, rng.random_range(-3.0..3.0))
                        })
                        .collect(),
                    alpha: rng.random_range(0.1..10.0),
                })
                .collect();
            let p = FuzzyPolicy::new(actions, vec![ActionBound::new(-2.0, 5.0); acts], Some(norm.clone())).unwrap();
            let compiled = p.compile();
            let s: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
            let mut out = vec![0.0; acts];
            compiled.act(&s, &mut out);
            for (a, b) in out.iter().zip(p.output(&s)) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    proptest! {
        #[test]
        fn decode_encode_roundtrip(p in arb_policy()) {
            let v = encode(&p).unwrap();
            prop_assert_eq!(v.values.len(), v.layout.len());
            let back = decode(&v, &p.bounds, None, WidthClamp::default()).unwrap();
            prop_assert_eq!(back, p);
        }

        #[test]
        fn output_inside_bounds(p in arb_policy(), s in prop::collection::vec(-50.0f64..50.0, 4)) {
            for (a, b) in p.output(&s).iter().zip(&p.bounds) {
                prop_assert!(*a > b.lo - 1e-12 && *a < b.hi + 1e-12);
                prop_assert!(b.contains(*a));
            }
        }

        #[test]
        fn single_rule_output_is_state_independent(
            c in -1.0f64..1.0, sigma in 0.01f64..2.0, o in -3.0f64..3.0,
            s1 in -5.0f64..5.0, s2 in -5.0f64..5.0,
        ) {
            let p = single(vec![FuzzyRule::new(vec![clause(0, c, sigma)], o)], 1.5);
            prop_assert_eq!(p.output(&[s1]), p.output(&[s2]));
        }

        #[test]
        fn activation_scale_invariant(
            c in -2.0f64..2.0, sigma in 0.05f64..2.0, s in -2.0f64..2.0, k in 0.1f64..10.0,
        ) {
            let a = membership(&clause(0, c, sigma), &[s]);
            let b = membership(&clause(0, k * c, k * sigma), &[k * s]);
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300) + 1e-300);
        }
    }
}
