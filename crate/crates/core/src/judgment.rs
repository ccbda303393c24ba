//! Questionnaire answers and the fuzzy pairwise matrices built from them.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::fuzzy::INDIFFERENCE;
use crate::fuzzy::{LinguisticTerm, ScaleTable, Tfn};
use crate::hierarchy::{ComparisonSet, Hierarchy, HierarchyError, NodeId};

#[derive(Debug, Error)]
pub enum JudgmentError {
    #[error("answer compares {0} with itself")]
    SameNode(NodeId),
    #[error("node {node} is not a member of comparison set {set}")]
    ForeignNode { set: usize, node: NodeId },
    #[error("comparison set {0} does not exist")]
    UnknownSet(usize),
    #[error("duplicate answer for {pair} in comparison set {set}")]
    Duplicate { set: usize, pair: PairRef },
    #[error("missing answers: {}", join(.0))]
    Missing(Vec<PairRef>),
    #[error("sheet refers to hierarchy {found:?}, expected {expected}")]
    HierarchyMismatch { expected: String, found: String },
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}

fn join(pairs: &[PairRef]) -> String {
    pairs
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Favored {
    First,
    Second,
}

/// One questionnaire response: which of two nodes is favored, and how much.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub set: usize,
    pub first: NodeId,
    pub second: NodeId,
    pub favored: Favored,
    pub term: LinguisticTerm,
}

impl Answer {
    pub fn pair(&self) -> PairRef {
        PairRef {
            set: self.set,
            first: self.first.clone(),
            second: self.second.clone(),
        }
    }

    /// `(a_first_second, a_second_first)` under `table`.
    pub fn entries(&self, table: &ScaleTable) -> (Tfn, Tfn) {
        let (scale, reverse) = (table.scale(self.term), table.reciprocal_scale(self.term));
        match self.favored {
            Favored::First => (scale, reverse),
            Favored::Second => (reverse, scale),
        }
    }
}

/// An unordered question pair within a comparison set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRef {
    pub set: usize,
    pub first: NodeId,
    pub second: NodeId,
}

impl PairRef {
    fn key(&self) -> (usize, NodeId, NodeId) {
        let (a, b) = if self.first <= self.second {
            (self.first.clone(), self.second.clone())
        } else {
            (self.second.clone(), self.first.clone())
        };
        (self.set, a, b)
    }

    pub fn same_pair(&self, other: &PairRef) -> bool {
        self.key() == other.key()
    }
}

impl fmt::Display for PairRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "set {}: {}/{}", self.set, self.first, self.second)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResponseSheet {
    pub decision_maker_id: String,
    pub hierarchy_ref: String,
    pub answers: Vec<Answer>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Completeness {
    pub answered: usize,
    pub total: usize,
    pub fraction: f64,
    pub unanswered: Vec<PairRef>,
}

impl Completeness {
    pub fn is_complete(&self) -> bool {
        self.answered == self.total
    }
}

/// Square matrix of fuzzy preferences among the members of one set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMatrix {
    members: Vec<NodeId>,
    entries: Vec<Vec<Tfn>>,
}

impl PairwiseMatrix {
    /// Matrix with every entry set to indifference.
    pub fn uniform(members: Vec<NodeId>) -> Self {
        let n = members.len();
        PairwiseMatrix {
            members,
            entries: vec![vec![INDIFFERENCE; n]; n],
        }
    }

    /// Wrap raw entries. Only squareness is checked.
    pub fn from_entries(members: Vec<NodeId>, entries: Vec<Vec<Tfn>>) -> Option<Self> {
        let n = members.len();
        (entries.len() == n && entries.iter().all(|r| r.len() == n))
            .then_some(PairwiseMatrix { members, entries })
    }

    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Tfn {
        self.entries[i][j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Tfn]> {
        self.entries.iter().map(Vec::as_slice)
    }

    /// Mean of `|m_ij + m_jk - m_ik - 0.5|` over all ordered index triples;
    /// zero for an additively consistent matrix and for `n < 3`.
    pub fn additive_inconsistency(&self) -> f64 {
        let n = self.size();
        if n < 3 {
            return 0.0;
        }
        let m = |i: usize, j: usize| self.entries[i][j].modal();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    total += (m(i, j) + m(j, k) - m(i, k) - 0.5).abs();
                }
            }
        }
        total / (n * n * n) as f64
    }
}

/// Build the matrix for `set` from the answers that belong to it.
pub fn build_matrix(
    set: &ComparisonSet,
    answers: &[&Answer],
    table: &ScaleTable,
) -> Result<PairwiseMatrix, JudgmentError> {
    let n = set.members.len();
    let mut matrix = PairwiseMatrix::uniform(set.members.clone());
    let mut filled = vec![vec![false; n]; n];
    for answer in answers {
        let index = |id: &NodeId| {
            set.position(id).ok_or_else(|| JudgmentError::ForeignNode {
                set: answer.set,
                node: id.clone(),
            })
        };
        let (i, j) = (index(&answer.first)?, index(&answer.second)?);
        if i == j {
            return Err(JudgmentError::SameNode(answer.first.clone()));
        }
        if filled[i][j] {
            return Err(JudgmentError::Duplicate {
                set: answer.set,
                pair: answer.pair(),
            });
        }
        let (forward, backward) = answer.entries(table);
        matrix.entries[i][j] = forward;
        matrix.entries[j][i] = backward;
        filled[i][j] = true;
        filled[j][i] = true;
    }
    let set_index = answers.first().map_or(0, |a| a.set);
    let missing: Vec<PairRef> = set
        .pairs()
        .filter(|(a, b)| {
            let (i, j) = (set.position(a).unwrap(), set.position(b).unwrap());
            !filled[i][j]
        })
        .map(|(a, b)| PairRef {
            set: set_index,
            first: a.clone(),
            second: b.clone(),
        })
        .collect();
    if !missing.is_empty() {
        return Err(JudgmentError::Missing(missing));
    }
    Ok(matrix)
}

impl ResponseSheet {
    pub fn new(decision_maker_id: impl Into<String>, hierarchy_ref: impl Into<String>) -> Self {
        ResponseSheet {
            decision_maker_id: decision_maker_id.into(),
            hierarchy_ref: hierarchy_ref.into(),
            answers: Vec::new(),
        }
    }

    pub fn check_hierarchy(&self, h: &Hierarchy) -> Result<(), JudgmentError> {
        if h.matches_ref(&self.hierarchy_ref) {
            Ok(())
        } else {
            Err(JudgmentError::HierarchyMismatch {
                expected: h.content_hash(),
                found: self.hierarchy_ref.clone(),
            })
        }
    }

    pub fn find(&self, pair: &PairRef) -> Option<&Answer> {
        self.answers.iter().find(|a| a.pair().same_pair(pair))
    }

    /// Structural problems in the answers, one message per problem.
    pub fn issues(&self, sets: &[ComparisonSet]) -> Vec<JudgmentError> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for answer in &self.answers {
            let Some(set) = sets.get(answer.set) else {
                out.push(JudgmentError::UnknownSet(answer.set));
                continue;
            };
            for node in [&answer.first, &answer.second] {
                if set.position(node).is_none() {
                    out.push(JudgmentError::ForeignNode {
                        set: answer.set,
                        node: node.clone(),
                    });
                }
            }
            if answer.first == answer.second {
                out.push(JudgmentError::SameNode(answer.first.clone()));
            }
            if !seen.insert(answer.pair().key()) {
                out.push(JudgmentError::Duplicate {
                    set: answer.set,
                    pair: answer.pair(),
                });
            }
        }
        out
    }

    /// Validate and append one answer.
    pub fn record(&mut self, answer: Answer, sets: &[ComparisonSet]) -> Result<(), JudgmentError> {
        let set = sets
            .get(answer.set)
            .ok_or(JudgmentError::UnknownSet(answer.set))?;
        for node in [&answer.first, &answer.second] {
            if set.position(node).is_none() {
                return Err(JudgmentError::ForeignNode {
                    set: answer.set,
                    node: node.clone(),
                });
            }
        }
        if answer.first == answer.second {
            return Err(JudgmentError::SameNode(answer.first));
        }
        if self.find(&answer.pair()).is_some() {
            return Err(JudgmentError::Duplicate {
                set: answer.set,
                pair: answer.pair(),
            });
        }
        self.answers.push(answer);
        Ok(())
    }

    pub fn completeness(&self, h: &Hierarchy) -> Result<Completeness, JudgmentError> {
        self.check_hierarchy(h)?;
        let sets = h.comparison_sets()?;
        let mut answered = 0;
        let mut unanswered = Vec::new();
        for (index, set) in sets.iter().enumerate() {
            for (a, b) in set.pairs() {
                let pair = PairRef {
                    set: index,
                    first: a.clone(),
                    second: b.clone(),
                };
                if self.find(&pair).is_some() {
                    answered += 1;
                } else {
                    unanswered.push(pair);
                }
            }
        }
        let total = answered + unanswered.len();
        let fraction = if total == 0 {
            1.0
        } else {
            answered as f64 / total as f64
        };
        Ok(Completeness {
            answered,
            total,
            fraction,
            unanswered,
        })
    }

    /// One matrix per comparison set of `h`, in set order. Fails with every
    /// missing pair listed when the sheet is incomplete.
    pub fn matrices(
        &self,
        h: &Hierarchy,
        table: &ScaleTable,
    ) -> Result<Vec<PairwiseMatrix>, JudgmentError> {
        self.check_hierarchy(h)?;
        let sets = h.comparison_sets()?;
        if let Some(issue) = self.issues(&sets).into_iter().next() {
            return Err(issue);
        }
        let mut missing = Vec::new();
        let mut out = Vec::with_capacity(sets.len());
        for (index, set) in sets.iter().enumerate() {
            let answers: Vec<&Answer> = self.answers.iter().filter(|a| a.set == index).collect();
            match build_matrix(set, &answers, table) {
                Ok(m) => out.push(m),
                Err(JudgmentError::Missing(pairs)) => {
                    missing.extend(pairs.into_iter().map(|p| PairRef { set: index, ..p }))
                }
                Err(e) => return Err(e),
            }
        }
        if missing.is_empty() {
            Ok(out)
        } else {
            Err(JudgmentError::Missing(missing))
        }
    }
}

/// Sheet as written by hand: terms and sides are plain strings so every
/// problem can be reported at once.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct LooseSheet {
    decision_maker_id: String,
    hierarchy_ref: String,
    answers: Vec<LooseAnswer>,
}

#[derive(Debug, Deserialize)]
struct LooseAnswer {
    set: usize,
    first: NodeId,
    second: NodeId,
    favored: String,
    term: String,
}

impl ResponseSheet {
    /// Parse a sheet from JSON, collecting every unknown term or side
    /// instead of stopping at the first.
    pub fn parse_lenient(value: serde_json::Value) -> Result<ResponseSheet, Vec<String>> {
        let loose: LooseSheet =
            serde_json::from_value(value).map_err(|e| vec![format!("schema error: {e}")])?;
        let mut problems = Vec::new();
        let mut answers = Vec::with_capacity(loose.answers.len());
        for (i, a) in loose.answers.into_iter().enumerate() {
            let term = a.term.parse::<LinguisticTerm>();
            let favored = match a.favored.to_ascii_lowercase().as_str() {
                "first" => Some(Favored::First),
                "second" => Some(Favored::Second),
                _ => None,
            };
            if let Err(e) = &term {
                problems.push(format!("answer {i}: {e}"));
            }
            if favored.is_none() {
                problems.push(format!(
                    "answer {i}: favored must be \"first\" or \"second\", got {:?}",
                    a.favored
                ));
            }
            if let (Ok(term), Some(favored)) = (term, favored) {
                answers.push(Answer {
                    set: a.set,
                    first: a.first,
                    second: a.second,
                    favored,
                    term,
                });
            }
        }
        if problems.is_empty() {
            Ok(ResponseSheet {
                decision_maker_id: loose.decision_maker_id,
                hierarchy_ref: loose.hierarchy_ref,
                answers,
            })
        } else {
            Err(problems)
        }
    }
}
