//! Group decision engine for fuzzy multi-criteria evaluation.
//!
//! Decision makers answer linguistic pairwise questions over a four-level
//! hierarchy (goal, criteria, sub-criteria, alternatives). Answers map to
//! triangular fuzzy numbers, each matrix yields local weights by row
//! geometric mean, local weights combine down the hierarchy, and the panel
//! is averaged. Every step runs three times, once per fuzzy component,
//! giving pessimistic, normal and optimistic results.

pub mod cli;
pub mod engine;
pub mod fuzzy;
pub mod hierarchy;
pub mod judgment;
pub mod report;
pub mod service;
pub mod workspace;

pub use engine::{evaluate, Mode, PanelReport, PerMode, Scorecard, Synthesis, WeightVector};
pub use fuzzy::{LinguisticTerm, ScaleTable, Tfn};
pub use hierarchy::{ComparisonSet, Hierarchy, NodeId};
pub use judgment::{Answer, Favored, PairwiseMatrix, ResponseSheet};
