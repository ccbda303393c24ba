//! Priority derivation: row geometric means per mode, hierarchical
//! synthesis, and arithmetic-mean aggregation across decision makers.
//!
//! Each of the three modes (lower, modal, upper component) is carried
//! through the pipeline as its own crisp computation and normalized by its
//! own sum. Normalized weights of different modes are therefore not ordered:
//! a node's pessimistic weight can exceed its optimistic weight. The
//! geometric means are taken over the entries of one matrix row; combining
//! decision makers happens only at the end, by arithmetic mean.

use std::fmt;
use std::ops::{Index, IndexMut};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{ScaleTable, Tfn};
use crate::hierarchy::{Hierarchy, HierarchyError, NodeId};
use crate::judgment::{JudgmentError, PairwiseMatrix, ResponseSheet};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("nonpositive value {value} at position {index}")]
    NonPositive { index: usize, value: f64 },
    #[error("cannot aggregate an empty panel")]
    EmptyPanel,
    #[error("scorecards disagree on the hierarchy: {0}")]
    HierarchyMismatch(String),
    #[error("no local weights for comparison set {0}")]
    MissingContext(usize),
    #[error("decision maker {decision_maker_id}: {source}")]
    Sheet {
        decision_maker_id: String,
        #[source]
        source: JudgmentError,
    },
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Lower components.
    Pessimistic,
    /// Modal components.
    Normal,
    /// Upper components.
    Optimistic,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Pessimistic, Mode::Normal, Mode::Optimistic];

    pub fn component(self, t: &Tfn) -> f64 {
        match self {
            Mode::Pessimistic => t.lower(),
            Mode::Normal => t.modal(),
            Mode::Optimistic => t.upper(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Pessimistic => "pessimistic",
            Mode::Normal => "normal",
            Mode::Optimistic => "optimistic",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Mode::Pessimistic => "Pessimistic",
            Mode::Normal => "Normal",
            Mode::Optimistic => "Optimistic",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One value per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerMode<T> {
    pub pessimistic: T,
    pub normal: T,
    pub optimistic: T,
}

impl<T> PerMode<T> {
    pub fn from_fn(mut f: impl FnMut(Mode) -> T) -> Self {
        PerMode {
            pessimistic: f(Mode::Pessimistic),
            normal: f(Mode::Normal),
            optimistic: f(Mode::Optimistic),
        }
    }

    pub fn try_from_fn<E>(mut f: impl FnMut(Mode) -> Result<T, E>) -> Result<Self, E> {
        Ok(PerMode {
            pessimistic: f(Mode::Pessimistic)?,
            normal: f(Mode::Normal)?,
            optimistic: f(Mode::Optimistic)?,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mode, &T)> {
        Mode::ALL.into_iter().map(move |m| (m, &self[m]))
    }
}

impl<T> Index<Mode> for PerMode<T> {
    type Output = T;

    fn index(&self, mode: Mode) -> &T {
        match mode {
            Mode::Pessimistic => &self.pessimistic,
            Mode::Normal => &self.normal,
            Mode::Optimistic => &self.optimistic,
        }
    }
}

impl<T> IndexMut<Mode> for PerMode<T> {
    fn index_mut(&mut self, mode: Mode) -> &mut T {
        match mode {
            Mode::Pessimistic => &mut self.pessimistic,
            Mode::Normal => &mut self.normal,
            Mode::Optimistic => &mut self.optimistic,
        }
    }
}

/// Weights keyed by node, in hierarchy declaration order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(IndexMap<NodeId, f64>);

impl WeightVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (NodeId, f64)>) -> Self {
        WeightVector(pairs.into_iter().collect())
    }

    pub fn get(&self, id: &NodeId) -> Option<f64> {
        self.0.get(id).copied()
    }

    pub fn insert(&mut self, id: NodeId, weight: f64) {
        self.0.insert(id, weight);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, f64)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn ids(&self) -> impl Iterator<Item = &NodeId> {
        self.0.keys()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.values().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values().sum()
    }

    /// Node ids by descending weight; equal weights keep declaration order.
    pub fn ranking(&self) -> Vec<NodeId> {
        let mut entries: Vec<(&NodeId, f64)> = self.iter().collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1));
        entries.into_iter().map(|(id, _)| id.clone()).collect()
    }

    fn same_keys(&self, other: &WeightVector) -> bool {
        self.0.len() == other.0.len() && self.0.keys().zip(other.0.keys()).all(|(a, b)| a == b)
    }

    fn mean(vectors: &[&WeightVector]) -> WeightVector {
        let n = vectors.len() as f64;
        let mut out = vectors[0].clone();
        for (id, slot) in out.0.iter_mut() {
            let total: f64 = vectors.iter().map(|v| v.0[id]).sum();
            *slot = total / n;
        }
        out
    }
}

/// `g_i = (prod_j a_ij)^(1/n)` over the selected component of row `i`.
pub fn row_geometric_means(mx: &PairwiseMatrix, mode: Mode) -> Result<Vec<f64>, EngineError> {
    let n = mx.size();
    mx.rows()
        .enumerate()
        .map(|(i, row)| {
            let mut log_sum = 0.0;
            for (j, entry) in row.iter().enumerate() {
                let value = mode.component(entry);
                if value <= 0.0 {
                    return Err(EngineError::NonPositive {
                        index: i * n + j,
                        value,
                    });
                }
                log_sum += value.ln();
            }
            Ok((log_sum / n as f64).exp())
        })
        .collect()
}

/// Scale positive values so they sum to one.
pub fn normalize_weights(values: &[f64]) -> Result<Vec<f64>, EngineError> {
    if let Some((index, &value)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| v.is_nan() || **v <= 0.0)
    {
        return Err(EngineError::NonPositive { index, value });
    }
    let total: f64 = values.iter().sum();
    Ok(values.iter().map(|v| v / total).collect())
}

/// Local weights of the matrix members in each mode.
pub fn local_weights(mx: &PairwiseMatrix) -> Result<PerMode<WeightVector>, EngineError> {
    PerMode::try_from_fn(|mode| {
        let weights = if mx.size() == 1 {
            vec![1.0]
        } else {
            normalize_weights(&row_geometric_means(mx, mode)?)?
        };
        Ok(WeightVector::from_pairs(
            mx.members().iter().cloned().zip(weights),
        ))
    })
}

/// Weights at every level of the hierarchy for one respondent (or for the
/// panel mean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Synthesis {
    pub criteria_weights: PerMode<WeightVector>,
    /// Sub-criteria weights relative to their parent criterion.
    pub local_sub_weights: IndexMap<NodeId, PerMode<WeightVector>>,
    pub global_sub_weights: PerMode<WeightVector>,
    pub alternative_scores: PerMode<WeightVector>,
    pub rankings: PerMode<Vec<NodeId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Scorecard {
    pub decision_maker_id: String,
    #[serde(flatten)]
    pub synthesis: Synthesis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PanelReport {
    pub per_decision_maker: Vec<Scorecard>,
    pub aggregate: Synthesis,
}

impl PanelReport {
    pub fn panel_size(&self) -> usize {
        self.per_decision_maker.len()
    }
}

/// Combine local weights down the hierarchy.
///
/// `locals` holds one entry per comparison set of `h`, in
/// [`Hierarchy::comparison_sets`] order.
pub fn synthesize(
    h: &Hierarchy,
    locals: &[PerMode<WeightVector>],
) -> Result<Synthesis, EngineError> {
    let sets = h.comparison_sets()?;
    for (index, set) in sets.iter().enumerate() {
        let local = locals
            .get(index)
            .ok_or(EngineError::MissingContext(index))?;
        let matches = Mode::ALL.iter().all(|&m| {
            local[m].len() == set.members.len()
                && local[m].ids().zip(&set.members).all(|(a, b)| a == b)
        });
        if !matches {
            return Err(EngineError::MissingContext(index));
        }
    }

    let criteria_weights = locals[0].clone();
    let mut local_sub_weights = IndexMap::new();
    for (offset, c) in h.criteria.iter().enumerate() {
        local_sub_weights.insert(c.id.clone(), locals[1 + offset].clone());
    }
    let alt_offset = 1 + h.criteria.len();

    let global_sub_weights = PerMode::from_fn(|mode| {
        WeightVector::from_pairs(h.all_sub_criteria().map(|(parent, sub)| {
            let parent_weight = criteria_weights[mode]
                .get(parent)
                .expect("criterion weight");
            let local = local_sub_weights[parent][mode]
                .get(&sub.id)
                .expect("local weight");
            (sub.id.clone(), parent_weight * local)
        }))
    });

    let alternative_scores = PerMode::from_fn(|mode| {
        let mut scores =
            WeightVector::from_pairs(h.alternatives.iter().map(|a| (a.id.clone(), 0.0)));
        for (k, (_, sub)) in h.all_sub_criteria().enumerate() {
            let global = global_sub_weights[mode]
                .get(&sub.id)
                .expect("global weight");
            for (alt, local) in locals[alt_offset + k][mode].iter() {
                let slot = scores.0.get_mut(alt).expect("alternative");
                *slot += global * local;
            }
        }
        scores
    });

    let rankings = PerMode::from_fn(|mode| alternative_scores[mode].ranking());
    Ok(Synthesis {
        criteria_weights,
        local_sub_weights,
        global_sub_weights,
        alternative_scores,
        rankings,
    })
}

impl Synthesis {
    fn compatible(&self, other: &Synthesis) -> bool {
        let per_mode = |a: &PerMode<WeightVector>, b: &PerMode<WeightVector>| {
            Mode::ALL.iter().all(|&m| a[m].same_keys(&b[m]))
        };
        per_mode(&self.criteria_weights, &other.criteria_weights)
            && per_mode(&self.global_sub_weights, &other.global_sub_weights)
            && per_mode(&self.alternative_scores, &other.alternative_scores)
            && self.local_sub_weights.len() == other.local_sub_weights.len()
            && self
                .local_sub_weights
                .iter()
                .zip(&other.local_sub_weights)
                .all(|((ka, a), (kb, b))| ka == kb && per_mode(a, b))
    }

    /// Component-wise arithmetic mean of every weight vector.
    fn mean(items: &[&Synthesis]) -> Synthesis {
        let mean_modes = |pick: &dyn Fn(&Synthesis) -> &PerMode<WeightVector>| {
            PerMode::from_fn(|mode| {
                let vs: Vec<&WeightVector> = items.iter().map(|s| &pick(s)[mode]).collect();
                WeightVector::mean(&vs)
            })
        };
        let criteria_weights = mean_modes(&|s| &s.criteria_weights);
        let global_sub_weights = mean_modes(&|s| &s.global_sub_weights);
        let alternative_scores = mean_modes(&|s| &s.alternative_scores);
        let local_sub_weights = items[0]
            .local_sub_weights
            .keys()
            .map(|k| (k.clone(), mean_modes(&|s| &s.local_sub_weights[k])))
            .collect();
        let rankings = PerMode::from_fn(|mode| alternative_scores[mode].ranking());
        Synthesis {
            criteria_weights,
            local_sub_weights,
            global_sub_weights,
            alternative_scores,
            rankings,
        }
    }
}

/// Average every weight vector over the panel, in list order.
pub fn aggregate_panel(cards: Vec<Scorecard>) -> Result<PanelReport, EngineError> {
    let first = cards.first().ok_or(EngineError::EmptyPanel)?;
    if let Some(odd) = cards
        .iter()
        .find(|c| !first.synthesis.compatible(&c.synthesis))
    {
        return Err(EngineError::HierarchyMismatch(format!(
            "{} and {} cover different nodes",
            first.decision_maker_id, odd.decision_maker_id
        )));
    }
    let parts: Vec<&Synthesis> = cards.iter().map(|c| &c.synthesis).collect();
    let aggregate = Synthesis::mean(&parts);
    Ok(PanelReport {
        per_decision_maker: cards,
        aggregate,
    })
}

/// Scorecard for one complete response sheet.
pub fn score_sheet(
    h: &Hierarchy,
    sheet: &ResponseSheet,
    table: &ScaleTable,
) -> Result<Scorecard, EngineError> {
    let tag = |source| EngineError::Sheet {
        decision_maker_id: sheet.decision_maker_id.clone(),
        source,
    };
    let matrices = sheet.matrices(h, table).map_err(tag)?;
    let locals = matrices
        .iter()
        .map(local_weights)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Scorecard {
        decision_maker_id: sheet.decision_maker_id.clone(),
        synthesis: synthesize(h, &locals)?,
    })
}

/// Full pipeline over a panel using the canonical scale table.
pub fn evaluate(h: &Hierarchy, sheets: &[ResponseSheet]) -> Result<PanelReport, EngineError> {
    evaluate_with(h, sheets, ScaleTable::canonical())
}

pub fn evaluate_with(
    h: &Hierarchy,
    sheets: &[ResponseSheet],
    table: &ScaleTable,
) -> Result<PanelReport, EngineError> {
    let cards = sheets
        .iter()
        .map(|s| score_sheet(h, s, table))
        .collect::<Result<Vec<_>, _>>()?;
    aggregate_panel(cards)
}
