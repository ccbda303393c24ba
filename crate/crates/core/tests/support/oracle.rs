//! Brute-force re-computation of panel weights straight from the JSON files
//! in a workspace. Shares no code with the library: it reads raw JSON,
//! carries its own copy of the linguistic scale and evaluates every formula
//! in the most literal way.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::Value;

const TABLE: [(&str, [f64; 3], [f64; 3]); 5] = [
    ("equally important", [0.5, 0.5, 0.55], [0.45, 0.5, 0.5]),
    ("slightly important", [0.55, 0.6, 0.65], [0.35, 0.4, 0.45]),
    ("important", [0.65, 0.7, 0.75], [0.25, 0.3, 0.35]),
    ("very important", [0.75, 0.8, 0.85], [0.15, 0.2, 0.25]),
    ("absolutely important", [0.85, 0.9, 0.9], [0.1, 0.1, 0.15]),
];

pub const MODES: [&str; 3] = ["pessimistic", "normal", "optimistic"];

/// `(level, mode, node) -> weight` with levels `criteria`, `subcriteria`
/// (global) and `alternatives`.
pub type Weights = BTreeMap<(String, String, String), f64>;

#[derive(Debug)]
pub struct OracleReport {
    pub per_decision_maker: BTreeMap<String, Weights>,
    pub aggregate: Weights,
}

struct Tree {
    criteria: Vec<String>,
    subs: Vec<Vec<String>>,
    alternatives: Vec<String>,
}

fn ids(v: &Value) -> Vec<String> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|n| n["id"].as_str().unwrap().to_string())
        .collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn read_tree(root: &Path) -> Tree {
    let h = read_json(&root.join("hierarchy.json"));
    let criteria = ids(&h["criteria"]);
    let subs = criteria
        .iter()
        .map(|c| ids(&h["subCriteria"][c.as_str()]))
        .collect();
    Tree {
        criteria,
        subs,
        alternatives: ids(&h["alternatives"]),
    }
}

fn lookup(term: &str) -> ([f64; 3], [f64; 3]) {
    let t = TABLE
        .iter()
        .find(|(name, _, _)| name.eq_ignore_ascii_case(term))
        .expect("known term");
    (t.1, t.2)
}

/// Local weights for one set, per mode: product of each row, n-th root,
/// divided by the column total.
fn local(members: &[String], answers: &[&Value]) -> [Vec<f64>; 3] {
    let n = members.len();
    let pos = |id: &str| members.iter().position(|m| m == id).unwrap();
    let mut m = vec![vec![[0.5, 0.5, 0.5]; n]; n];
    for a in answers {
        let i = pos(a["first"].as_str().unwrap());
        let j = pos(a["second"].as_str().unwrap());
        let (scale, recip) = lookup(a["term"].as_str().unwrap());
        if a["favored"].as_str().unwrap().eq_ignore_ascii_case("first") {
            m[i][j] = scale;
            m[j][i] = recip;
        } else {
            m[i][j] = recip;
            m[j][i] = scale;
        }
    }
    let mut out: [Vec<f64>; 3] = Default::default();
    for (k, weights) in out.iter_mut().enumerate() {
        let mut g = Vec::new();
        for row in &m {
            let mut product = 1.0;
            for cell in row {
                product *= cell[k];
            }
            g.push(product.powf(1.0 / n as f64));
        }
        let total: f64 = g.iter().sum();
        *weights = g.iter().map(|x| x / total).collect();
    }
    out
}

fn score(tree: &Tree, sheet: &Value) -> Weights {
    let answers = sheet["answers"].as_array().unwrap();
    let in_set = |k: usize| -> Vec<&Value> {
        answers
            .iter()
            .filter(|a| a["set"].as_u64() == Some(k as u64))
            .collect()
    };
    let mut set = 0;
    let crit = local(&tree.criteria, &in_set(set));
    let mut sub_local = Vec::new();
    for subs in &tree.subs {
        set += 1;
        sub_local.push(local(subs, &in_set(set)));
    }
    let mut alt_local = Vec::new();
    for subs in &tree.subs {
        for _ in subs {
            set += 1;
            alt_local.push(local(&tree.alternatives, &in_set(set)));
        }
    }

    let mut w = Weights::new();
    for (k, mode) in MODES.iter().enumerate() {
        let mut flat = 0;
        let mut alt_scores = vec![0.0; tree.alternatives.len()];
        for (ci, c) in tree.criteria.iter().enumerate() {
            let wc = crit[k][ci];
            w.insert(("criteria".into(), mode.to_string(), c.clone()), wc);
            for (si, s) in tree.subs[ci].iter().enumerate() {
                let global = wc * sub_local[ci][k][si];
                w.insert(("subcriteria".into(), mode.to_string(), s.clone()), global);
                for (ai, score) in alt_scores.iter_mut().enumerate() {
                    *score += global * alt_local[flat][k][ai];
                }
                flat += 1;
            }
        }
        for (a, s) in tree.alternatives.iter().zip(alt_scores) {
            w.insert(("alternatives".into(), mode.to_string(), a.clone()), s);
        }
    }
    w
}

/// Evaluate every sheet file in `<root>/sheets` and average the results.
pub fn evaluate_workspace(root: &Path) -> OracleReport {
    let tree = read_tree(root);
    let mut per_decision_maker = BTreeMap::new();
    for entry in fs::read_dir(root.join("sheets")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let sheet = read_json(&path);
        let dm = sheet["decisionMakerId"].as_str().unwrap().to_string();
        per_decision_maker.insert(dm, score(&tree, &sheet));
    }
    let n = per_decision_maker.len() as f64;
    let mut aggregate = Weights::new();
    for weights in per_decision_maker.values() {
        for (key, w) in weights {
            *aggregate.entry(key.clone()).or_insert(0.0) += w / n;
        }
    }
    OracleReport {
        per_decision_maker,
        aggregate,
    }
}
