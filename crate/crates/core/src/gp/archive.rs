//! Best individual per complexity level and the nondominated front.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tree::PolicyTree;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry<F> {
    pub complexity: usize,
    pub fitness: F,
    pub generation_found: usize,
    pub tree: PolicyTree<F>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoArchive<F> {
    levels: BTreeMap<usize, ArchiveEntry<F>>,
}

impl<F: Scalar> ParetoArchive<F> {
    pub fn new() -> Self {
        Self { levels: BTreeMap::new() }
    }

    /// Stores `tree` if its level is empty or it strictly beats the incumbent.
    /// Non-finite fitness values are ignored. Returns whether it was stored.
    pub fn offer(&mut self, tree: &PolicyTree<F>, fitness: F, generation: usize) -> bool {
        if !fitness.is_finite() {
            return false;
        }
        let complexity = tree.complexity();
        match self.levels.get(&complexity) {
            Some(e) if !(fitness > e.fitness) => false,
            _ => {
                let mut tree = tree.clone();
                tree.fitness = Some(fitness);
                self.levels.insert(
                    complexity,
                    ArchiveEntry {
                        complexity,
                        fitness,
                        generation_found: generation,
                        tree,
                    },
                );
                true
            }
        }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn get(&self, complexity: usize) -> Option<&ArchiveEntry<F>> {
        self.levels.get(&complexity)
    }

    /// All levels in increasing complexity.
    pub fn entries(&self) -> impl Iterator<Item = &ArchiveEntry<F>> {
        self.levels.values()
    }

    /// `(complexity, fitness)` for every level.
    pub fn snapshot(&self) -> Vec<(usize, F)> {
        self.levels.values().map(|e| (e.complexity, e.fitness)).collect()
    }

    /// Levels that no simpler level matches or beats, in increasing complexity.
    pub fn front(&self) -> Vec<&ArchiveEntry<F>> {
        let mut out: Vec<&ArchiveEntry<F>> = Vec::new();
        for e in self.levels.values() {
            if out.last().is_none_or(|last| e.fitness > last.fitness) {
                out.push(e);
            }
        }
        out
    }

    pub fn best(&self) -> Option<&ArchiveEntry<F>> {
        self.front().last().copied()
    }
}

/// True when complexities and fitnesses both increase strictly.
pub fn is_nondominated<F: Scalar>(front: &[(usize, F)]) -> bool {
    front.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1)
}

#[cfg(test)]
mod tests {
    use super::super::tree::RuleSpec;
    use super::*;

    fn with_rules(n: usize) -> PolicyTree<f64> {
        PolicyTree::from_rules(&[(1.0, vec![RuleSpec { clauses: vec![], consequent: 0.0 }; n])])
    }

    #[test]
    fn keeps_strictly_better_per_level() {
        let mut a = ParetoArchive::new();
        assert!(a.offer(&with_rules(1), -10.0, 0));
        assert!(!a.offer(&with_rules(1), -10.0, 1));
        assert!(!a.offer(&with_rules(1), -11.0, 1));
        assert!(a.offer(&with_rules(1), -9.0, 2));
        assert!(!a.offer(&with_rules(2), f64::NEG_INFINITY, 2));
        assert_eq!(a.get(12).unwrap().generation_found, 2);
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn front_drops_dominated_levels() {
        let mut a = ParetoArchive::new();
        a.offer(&with_rules(1), -10.0, 0);
        a.offer(&with_rules(2), -12.0, 0);
        a.offer(&with_rules(3), -10.0, 0);
        a.offer(&with_rules(4), -5.0, 0);
        let front: Vec<(usize, f64)> = a.front().iter().map(|e| (e.complexity, e.fitness)).collect();
        assert_eq!(front, vec![(12, -10.0), (45, -5.0)]);
        assert!(is_nondominated(&front));
        assert!(!is_nondominated(&[(12, -1.0), (23, -1.0)]));
        assert_eq!(a.best().unwrap().complexity, 45);
    }
}
