#![allow(dead_code)]

pub mod oracle;

use fuzzy_mcdm::hierarchy::EGOV_PRESET;
use std::collections::HashMap;

use fuzzy_mcdm::hierarchy::{Context, Node};
use fuzzy_mcdm::workspace::Workspace;
use fuzzy_mcdm::{Answer, Favored, Hierarchy, LinguisticTerm, NodeId, ResponseSheet};
use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;
use tempfile::TempDir;

/// Every question answered with the same term and side.
pub fn uniform_sheet(
    h: &Hierarchy,
    dm: &str,
    term: LinguisticTerm,
    favored: Favored,
) -> ResponseSheet {
    let mut s = ResponseSheet::new(dm, h.content_hash());
    s.answers = h
        .questions()
        .unwrap()
        .into_iter()
        .map(|q| Answer {
            set: q.set,
            first: q.first.id,
            second: q.second.id,
            favored,
            term,
        })
        .collect();
    s
}

/// Random terms and sides; about half the answers name the pair in reverse
/// order and the answer list is shuffled.
pub fn random_sheet<R: Rng>(h: &Hierarchy, dm: &str, rng: &mut R) -> ResponseSheet {
    let mut s = ResponseSheet::new(dm, h.content_hash());
    if *h == Hierarchy::preset_egov() && rng.gen_bool(0.5) {
        s.hierarchy_ref = EGOV_PRESET.to_string();
    }
    s.answers = h
        .questions()
        .unwrap()
        .into_iter()
        .map(|q| {
            let term = *LinguisticTerm::ALL.choose(rng).unwrap();
            let favored = if rng.gen_bool(0.5) {
                Favored::First
            } else {
                Favored::Second
            };
            if rng.gen_bool(0.5) {
                Answer {
                    set: q.set,
                    first: q.first.id,
                    second: q.second.id,
                    favored,
                    term,
                }
            } else {
                let flipped = match favored {
                    Favored::First => Favored::Second,
                    Favored::Second => Favored::First,
                };
                Answer {
                    set: q.set,
                    first: q.second.id,
                    second: q.first.id,
                    favored: flipped,
                    term,
                }
            }
        })
        .collect();
    s.answers.shuffle(rng);
    s
}

/// A fresh preset workspace holding `sheets`.
pub fn preset_workspace(sheets: &[ResponseSheet]) -> (TempDir, Workspace) {
    let dir = TempDir::new().unwrap();
    let ws = Workspace::init(dir.path().join("ws"), Hierarchy::preset_egov()).unwrap();
    {
        let lock = ws.lock().unwrap();
        for s in sheets {
            ws.save_sheet(&lock, s).unwrap();
        }
    }
    (dir, ws)
}

fn label<R: Rng>(rng: &mut R) -> String {
    const WORDS: [&str; 8] = [
        "Access", "Audit", "Budget", "Cloud", "Data", "Policy", "Risk", "Staff",
    ];
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// A valid hierarchy with 2 to 4 criteria, 1 to 4 sub-criteria each and
/// 2 to 4 alternatives.
pub fn random_hierarchy<R: Rng>(rng: &mut R) -> Hierarchy {
    let criteria: Vec<Node> = (0..rng.gen_range(2..=4))
        .map(|i| Node::new(&format!("C{i}"), &label(rng)))
        .collect();
    let mut sub_criteria = IndexMap::new();
    for (i, c) in criteria.iter().enumerate() {
        let subs = (0..rng.gen_range(1..=4))
            .map(|j| Node::new(&format!("C{i}.{j}"), &label(rng)))
            .collect();
        sub_criteria.insert(c.id.clone(), subs);
    }
    let alternatives = (0..rng.gen_range(2..=4))
        .map(|k| Node::new(&format!("A{k}"), &label(rng)))
        .collect();
    Hierarchy {
        goal: label(rng),
        criteria,
        sub_criteria,
        alternatives,
    }
}

/// The same decision problem under new ids and a new declaration order at
/// every level. Returns the relabeled hierarchy and sheets plus the id map.
pub fn relabel<R: Rng>(
    h: &Hierarchy,
    sheets: &[ResponseSheet],
    rng: &mut R,
) -> (Hierarchy, Vec<ResponseSheet>, HashMap<NodeId, NodeId>) {
    let mut names: Vec<usize> = (0..1000).collect();
    names.shuffle(rng);
    let mut names = names.into_iter();
    let mut map = HashMap::new();
    let mut rename = |n: &Node| {
        let id = NodeId::new(format!("N{:03}", names.next().unwrap()));
        map.insert(n.id.clone(), id.clone());
        Node {
            id,
            label: n.label.clone(),
        }
    };
    let mut criteria: Vec<Node> = h.criteria.iter().map(&mut rename).collect();
    let mut sub_criteria: Vec<(NodeId, Vec<Node>)> = h
        .criteria
        .iter()
        .zip(&criteria)
        .map(|(old, new)| {
            let mut subs: Vec<Node> = h.children(&old.id).iter().map(&mut rename).collect();
            subs.shuffle(rng);
            (new.id.clone(), subs)
        })
        .collect();
    let mut alternatives: Vec<Node> = h.alternatives.iter().map(&mut rename).collect();
    criteria.shuffle(rng);
    sub_criteria.shuffle(rng);
    alternatives.shuffle(rng);
    let relabeled = Hierarchy {
        goal: h.goal.clone(),
        criteria,
        sub_criteria: sub_criteria.into_iter().collect(),
        alternatives,
    };

    let old_sets = h.comparison_sets().unwrap();
    let new_sets = relabeled.comparison_sets().unwrap();
    let set_map: Vec<usize> = old_sets
        .iter()
        .map(|old| {
            let context = match &old.context {
                Context::Goal => Context::Goal,
                Context::Node(id) => Context::Node(map[id].clone()),
            };
            new_sets
                .iter()
                .position(|s| s.context == context && s.level == old.level)
                .unwrap()
        })
        .collect();
    let sheets = sheets
        .iter()
        .map(|s| {
            let mut out = ResponseSheet::new(s.decision_maker_id.clone(), relabeled.content_hash());
            out.answers = s
                .answers
                .iter()
                .map(|a| Answer {
                    set: set_map[a.set],
                    first: map[&a.first].clone(),
                    second: map[&a.second].clone(),
                    favored: a.favored,
                    term: a.term,
                })
                .collect();
            out
        })
        .collect();
    (relabeled, sheets, map)
}

fn vector_diff(
    a: &fuzzy_mcdm::PerMode<fuzzy_mcdm::WeightVector>,
    b: &fuzzy_mcdm::PerMode<fuzzy_mcdm::WeightVector>,
    map: &HashMap<NodeId, NodeId>,
) -> f64 {
    let mut worst = 0.0f64;
    for ((_, va), (_, vb)) in a.iter().zip(b.iter()) {
        assert_eq!(va.len(), vb.len());
        for (id, w) in va.iter() {
            let other = vb.get(&map[id]).expect("relabeled node present");
            worst = worst.max((w - other).abs());
        }
    }
    worst
}

fn synthesis_diff(
    a: &fuzzy_mcdm::Synthesis,
    b: &fuzzy_mcdm::Synthesis,
    map: &HashMap<NodeId, NodeId>,
) -> f64 {
    let mut worst = vector_diff(&a.criteria_weights, &b.criteria_weights, map)
        .max(vector_diff(
            &a.global_sub_weights,
            &b.global_sub_weights,
            map,
        ))
        .max(vector_diff(
            &a.alternative_scores,
            &b.alternative_scores,
            map,
        ));
    assert_eq!(a.local_sub_weights.len(), b.local_sub_weights.len());
    for (criterion, local) in &a.local_sub_weights {
        worst = worst.max(vector_diff(
            local,
            &b.local_sub_weights[&map[criterion]],
            map,
        ));
    }
    worst
}

/// Largest absolute difference between `a` and the un-relabeled `b`, over
/// every weight of every decision maker and of the aggregate.
pub fn relabel_diff(
    a: &fuzzy_mcdm::PanelReport,
    b: &fuzzy_mcdm::PanelReport,
    map: &HashMap<NodeId, NodeId>,
) -> f64 {
    let mut worst = synthesis_diff(&a.aggregate, &b.aggregate, map);
    assert_eq!(a.per_decision_maker.len(), b.per_decision_maker.len());
    for card in &a.per_decision_maker {
        let other = b
            .per_decision_maker
            .iter()
            .find(|c| c.decision_maker_id == card.decision_maker_id)
            .unwrap();
        worst = worst.max(synthesis_diff(&card.synthesis, &other.synthesis, map));
    }
    worst
}

/// Largest absolute difference between the engine report and the oracle
/// over every criteria, global sub-criteria and alternative weight.
pub fn oracle_diff(report: &fuzzy_mcdm::PanelReport, oracle: &oracle::OracleReport) -> f64 {
    let levels = |s: &fuzzy_mcdm::Synthesis| {
        [
            ("criteria", s.criteria_weights.clone()),
            ("subcriteria", s.global_sub_weights.clone()),
            ("alternatives", s.alternative_scores.clone()),
        ]
    };
    let mut pairs = vec![(&report.aggregate, &oracle.aggregate)];
    for card in &report.per_decision_maker {
        pairs.push((
            &card.synthesis,
            &oracle.per_decision_maker[&card.decision_maker_id],
        ));
    }
    assert_eq!(
        oracle.per_decision_maker.len(),
        report.per_decision_maker.len()
    );
    let mut worst = 0.0f64;
    for (s, o) in pairs {
        let mut compared = 0;
        for (level, per_mode) in levels(s) {
            for (mode, v) in per_mode.iter() {
                for (id, w) in v.iter() {
                    let want = o[&(level.to_string(), mode.as_str().to_string(), id.to_string())];
                    worst = worst.max((w - want).abs());
                    compared += 1;
                }
            }
        }
        assert_eq!(compared, o.len());
    }
    worst
}
