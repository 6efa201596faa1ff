//! Strongly typed genetic programming over fuzzy-policy trees.

mod archive;
mod evolve;
mod operators;
mod tree;

pub use archive::{is_nondominated, ArchiveEntry, ParetoArchive};
pub use evolve::{evolve, tree_fitness, GpConfig, GpRatios, GpResult, GpTally, SlotCounts};
pub use operators::{crossover, gaussian_mutate, is_corrected, random_tree, tree_correction, TreeLimits};
pub use tree::{interpret, subtree_end, FloatRole, Node, NodeType, PolicyTree, RuleSpec};
