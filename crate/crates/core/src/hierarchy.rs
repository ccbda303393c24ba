//! The four-level decision hierarchy: goal, criteria, sub-criteria and
//! alternatives, plus the pairwise comparison sets it induces.

use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Name of the built-in e-government security hierarchy.
pub const EGOV_PRESET: &str = "egov-security-v1";

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("invalid hierarchy: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("unknown preset {0:?} (available: {EGOV_PRESET})")]
    UnknownPreset(String),
}

/// Short identifier of a hierarchy node, e.g. `M`, `T1`, `ALT.C`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn is_well_formed(&self) -> bool {
        !self.0.is_empty() && !self.0.chars().any(char::is_whitespace)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl PartialEq<str> for NodeId {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for NodeId {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
}

impl Node {
    pub fn new(id: &str, label: &str) -> Self {
        Node {
            id: NodeId::new(id),
            label: label.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Hierarchy {
    pub goal: String,
    pub criteria: Vec<Node>,
    pub sub_criteria: IndexMap<NodeId, Vec<Node>>,
    pub alternatives: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    TooFewCriteria(usize),
    TooFewAlternatives(usize),
    NoSubCriteria(NodeId),
    DuplicateId(NodeId),
    MalformedId(NodeId),
    UnknownParent(NodeId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewCriteria(n) => write!(f, "criteria count < 2 (got {n})"),
            Violation::TooFewAlternatives(n) => write!(f, "alternatives count < 2 (got {n})"),
            Violation::NoSubCriteria(id) => write!(f, "criterion without sub-criteria: {id}"),
            Violation::DuplicateId(id) => write!(f, "duplicate node id: {id}"),
            Violation::MalformedId(id) => write!(f, "malformed node id: {id:?}"),
            Violation::UnknownParent(id) => {
                write!(f, "sub-criteria listed under unknown criterion: {id}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Level {
    Criteria,
    SubCriteria,
    Alternatives,
}

/// The node a comparison set is judged against.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Context {
    Goal,
    Node(NodeId),
}

impl Context {
    /// `"GOAL"` or the context node id.
    pub fn key(&self) -> &str {
        match self {
            Context::Goal => "GOAL",
            Context::Node(id) => id.as_str(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonSet {
    pub context: Context,
    pub level: Level,
    pub members: Vec<NodeId>,
}

impl ComparisonSet {
    pub fn pair_count(&self) -> usize {
        let n = self.members.len();
        n * n.saturating_sub(1) / 2
    }

    /// Unordered pairs in declaration order: (0,1), (0,2), ..., (1,2), ...
    pub fn pairs(&self) -> impl Iterator<Item = (&NodeId, &NodeId)> + '_ {
        self.members
            .iter()
            .enumerate()
            .flat_map(move |(i, a)| self.members[i + 1..].iter().map(move |b| (a, b)))
    }

    pub fn position(&self, id: &NodeId) -> Option<usize> {
        self.members.iter().position(|m| m == id)
    }
}

/// One pairwise question from the deterministic questionnaire order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Question {
    pub index: usize,
    pub set: usize,
    pub level: Level,
    pub context: Context,
    pub context_label: String,
    pub first: Node,
    pub second: Node,
}

impl Question {
    pub fn prompt(&self) -> String {
        format!(
            "How important is {} relative to {} with respect to {}?",
            self.first.label, self.second.label, self.context_label
        )
    }
}

impl Hierarchy {
    /// Look up a built-in hierarchy by name.
    pub fn preset(name: &str) -> Result<Hierarchy, HierarchyError> {
        match name {
            EGOV_PRESET => Ok(Self::preset_egov()),
            other => Err(HierarchyError::UnknownPreset(other.to_string())),
        }
    }

    /// E-government security strategy hierarchy: four criteria, ten
    /// sub-criteria and the CIA triangle as alternatives.
    pub fn preset_egov() -> Hierarchy {
        let criteria = vec![
            Node::new("M", "Management"),
            Node::new("T", "Technology"),
            Node::new("E", "Economy"),
            Node::new("C", "Culture"),
        ];
        let mut sub_criteria = IndexMap::new();
        sub_criteria.insert(
            NodeId::new("M"),
            vec![
                Node::new("M1", "comply with standard"),
                Node::new("M2", "regular review"),
                Node::new("M3", "commitment"),
            ],
        );
        sub_criteria.insert(
            NodeId::new("T"),
            vec![
                Node::new("T1", "end point security"),
                Node::new("T2", "network security"),
                Node::new("T3", "application security"),
            ],
        );
        sub_criteria.insert(
            NodeId::new("E"),
            vec![
                Node::new("E1", "security investment"),
                Node::new("E2", "cost of attack"),
            ],
        );
        sub_criteria.insert(
            NodeId::new("C"),
            vec![
                Node::new("C1", "reward & punishment"),
                Node::new("C2", "security education"),
            ],
        );
        Hierarchy {
            goal: "information security policy performance evaluation".to_string(),
            criteria,
            sub_criteria,
            alternatives: vec![
                Node::new("ALT.C", "Confidentiality"),
                Node::new("ALT.I", "Integrity"),
                Node::new("ALT.A", "Availability"),
            ],
        }
    }

    /// Every invariant violation, in a stable order. Empty means valid.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.criteria.len() < 2 {
            out.push(Violation::TooFewCriteria(self.criteria.len()));
        }
        if self.alternatives.len() < 2 {
            out.push(Violation::TooFewAlternatives(self.alternatives.len()));
        }
        let mut seen = HashSet::new();
        let mut check_id = |id: &NodeId, out: &mut Vec<Violation>| {
            if !id.is_well_formed() {
                out.push(Violation::MalformedId(id.clone()));
            }
            if !seen.insert(id.clone()) {
                out.push(Violation::DuplicateId(id.clone()));
            }
        };
        for c in &self.criteria {
            check_id(&c.id, &mut out);
        }
        for c in &self.criteria {
            for s in self.sub_criteria.get(&c.id).into_iter().flatten() {
                check_id(&s.id, &mut out);
            }
        }
        for a in &self.alternatives {
            check_id(&a.id, &mut out);
        }
        for c in &self.criteria {
            if self.sub_criteria.get(&c.id).is_none_or(Vec::is_empty) {
                out.push(Violation::NoSubCriteria(c.id.clone()));
            }
        }
        for parent in self.sub_criteria.keys() {
            if !self.criteria.iter().any(|c| &c.id == parent) {
                out.push(Violation::UnknownParent(parent.clone()));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), HierarchyError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(HierarchyError::Invalid(v))
        }
    }

    /// Sub-criteria of `criterion` in declaration order.
    pub fn children(&self, criterion: &NodeId) -> &[Node] {
        self.sub_criteria
            .get(criterion)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// All sub-criteria in criteria order, paired with their parent.
    pub fn all_sub_criteria(&self) -> impl Iterator<Item = (&NodeId, &Node)> + '_ {
        self.criteria
            .iter()
            .flat_map(move |c| self.children(&c.id).iter().map(move |s| (&c.id, s)))
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.criteria
            .iter()
            .chain(self.sub_criteria.values().flatten())
            .chain(&self.alternatives)
            .find(|n| &n.id == id)
    }

    pub fn context_label(&self, context: &Context) -> String {
        match context {
            Context::Goal => self.goal.clone(),
            Context::Node(id) => self
                .node(id)
                .map_or_else(|| id.to_string(), |n| n.label.clone()),
        }
    }

    /// The criteria set, then one set per criterion, then one alternatives
    /// set per sub-criterion.
    pub fn comparison_sets(&self) -> Result<Vec<ComparisonSet>, HierarchyError> {
        self.validate()?;
        let ids = |nodes: &[Node]| nodes.iter().map(|n| n.id.clone()).collect::<Vec<_>>();
        let mut sets = vec![ComparisonSet {
            context: Context::Goal,
            level: Level::Criteria,
            members: ids(&self.criteria),
        }];
        for c in &self.criteria {
            sets.push(ComparisonSet {
                context: Context::Node(c.id.clone()),
                level: Level::SubCriteria,
                members: ids(self.children(&c.id)),
            });
        }
        let alternatives = ids(&self.alternatives);
        for (_, s) in self.all_sub_criteria() {
            sets.push(ComparisonSet {
                context: Context::Node(s.id.clone()),
                level: Level::Alternatives,
                members: alternatives.clone(),
            });
        }
        Ok(sets)
    }

    pub fn question_count(&self) -> Result<usize, HierarchyError> {
        Ok(self
            .comparison_sets()?
            .iter()
            .map(ComparisonSet::pair_count)
            .sum())
    }

    /// The full questionnaire in its fixed order.
    pub fn questions(&self) -> Result<Vec<Question>, HierarchyError> {
        let sets = self.comparison_sets()?;
        let mut out = Vec::new();
        for (set_index, set) in sets.iter().enumerate() {
            let context_label = self.context_label(&set.context);
            for (a, b) in set.pairs() {
                out.push(Question {
                    index: out.len(),
                    set: set_index,
                    level: set.level,
                    context: set.context.clone(),
                    context_label: context_label.clone(),
                    first: self
                        .node(a)
                        .cloned()
                        .expect("member of a validated hierarchy"),
                    second: self
                        .node(b)
                        .cloned()
                        .expect("member of a validated hierarchy"),
                });
            }
        }
        Ok(out)
    }

    /// Hex SHA-256 over the canonical JSON encoding.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("hierarchy serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Whether `reference` names this hierarchy, either by content hash or
    /// by the name of a preset with identical content.
    pub fn matches_ref(&self, reference: &str) -> bool {
        reference == self.content_hash() || Hierarchy::preset(reference).is_ok_and(|p| &p == self)
    }
}
