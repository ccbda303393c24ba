//! Report documents and their JSON, CSV and Markdown renderings.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{Mode, PanelReport, PerMode, Synthesis, WeightVector};
use crate::workspace::{Versioned, WorkspaceError};

pub const CSV_HEADER: &str = "level,node,mode,decision_maker,weight";
pub const AGGREGATE: &str = "AGGREGATE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportMetadata {
    pub id: String,
    /// RFC 3339 creation time.
    pub created_at: String,
    pub hierarchy_hash: String,
    pub panel_size: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportDocument {
    pub metadata: ReportMetadata,
    pub mode_labels: PerMode<String>,
    pub report: PanelReport,
}

impl ReportDocument {
    pub fn new(
        id: impl Into<String>,
        created_at: impl Into<String>,
        hierarchy_hash: impl Into<String>,
        report: PanelReport,
        warnings: Vec<String>,
    ) -> Self {
        ReportDocument {
            metadata: ReportMetadata {
                id: id.into(),
                created_at: created_at.into(),
                hierarchy_hash: hierarchy_hash.into(),
                panel_size: report.panel_size(),
                warnings,
            },
            mode_labels: default_mode_labels(),
            report,
        }
    }
}

pub fn default_mode_labels() -> PerMode<String> {
    PerMode {
        pessimistic: "Pessimistic (lower)".into(),
        normal: "Normal (medium)".into(),
        optimistic: "Optimistic (upper)".into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = WorkspaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            _ => Err(WorkspaceError::UnsupportedFormat(s.to_string())),
        }
    }
}

/// The three levels reported in flat outputs; each sums to one per mode.
pub const LEVELS: [&str; 3] = ["criteria", "subcriteria", "alternatives"];

fn level_vectors(s: &Synthesis) -> [&PerMode<WeightVector>; 3] {
    [
        &s.criteria_weights,
        &s.global_sub_weights,
        &s.alternative_scores,
    ]
}

pub fn render(doc: &ReportDocument, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out =
                serde_json::to_vec_pretty(&Versioned::new(doc)).expect("report serializes");
            out.push(b'\n');
            out
        }
        ReportFormat::Csv => render_csv(&doc.report).into_bytes(),
        ReportFormat::Markdown => render_markdown(doc).into_bytes(),
    }
}

/// One row per (level, node, mode, respondent); respondents first in panel
/// order, then the aggregate.
pub fn render_csv(report: &PanelReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let sources = report
        .per_decision_maker
        .iter()
        .map(|c| (c.decision_maker_id.as_str(), &c.synthesis))
        .chain(std::iter::once((AGGREGATE, &report.aggregate)));
    for (who, synthesis) in sources {
        for (level, vectors) in LEVELS.iter().zip(level_vectors(synthesis)) {
            for (mode, weights) in vectors.iter() {
                for (node, w) in weights.iter() {
                    let _ = writeln!(out, "{level},{node},{mode},{who},{w}");
                }
            }
        }
    }
    out
}

pub fn render_markdown(doc: &ReportDocument) -> String {
    let mut out = String::new();
    let meta = &doc.metadata;
    let _ = writeln!(out, "# Decision report {}\n", meta.id);
    let _ = writeln!(out, "- Created: {}", meta.created_at);
    let _ = writeln!(out, "- Hierarchy: `{}`", meta.hierarchy_hash);
    let _ = writeln!(out, "- Decision makers: {}", meta.panel_size);
    for w in &meta.warnings {
        let _ = writeln!(out, "- Warning: {w}");
    }
    let titles = ["Criteria", "Sub-criteria (global)", "Alternatives"];
    let agg = &doc.report.aggregate;
    for (title, vectors) in titles.iter().zip(level_vectors(agg)) {
        let _ = writeln!(out, "\n## {title}\n");
        let _ = writeln!(
            out,
            "| Node | {} | {} | {} |",
            doc.mode_labels.pessimistic, doc.mode_labels.normal, doc.mode_labels.optimistic
        );
        out.push_str("|---|---:|---:|---:|\n");
        for id in vectors.normal.ids() {
            let cell = |m: Mode| {
                vectors[m]
                    .get(id)
                    .map_or(String::new(), |w| format!("{w:.6}"))
            };
            let _ = writeln!(
                out,
                "| {id} | {} | {} | {} |",
                cell(Mode::Pessimistic),
                cell(Mode::Normal),
                cell(Mode::Optimistic)
            );
        }
    }
    out.push_str("\n## Rankings\n\n");
    for (mode, ranking) in agg.rankings.iter() {
        let list: Vec<&str> = ranking.iter().map(|n| n.as_str()).collect();
        let _ = writeln!(out, "- {}: {}", doc.mode_labels[mode], list.join(" > "));
    }
    if doc.report.per_decision_maker.len() > 1 {
        out.push_str("\n## Alternative scores by decision maker (normal mode)\n\n");
        let alts: Vec<_> = agg.alternative_scores.normal.ids().cloned().collect();
        let header: Vec<&str> = alts.iter().map(|a| a.as_str()).collect();
        let _ = writeln!(out, "| Decision maker | {} |", header.join(" | "));
        let _ = writeln!(out, "|---|{}", "---:|".repeat(alts.len()));
        for card in &doc.report.per_decision_maker {
            let cells: Vec<String> = alts
                .iter()
                .map(|a| {
                    card.synthesis
                        .alternative_scores
                        .normal
                        .get(a)
                        .map_or(String::new(), |w| format!("{w:.6}"))
                })
                .collect();
            let _ = writeln!(
                out,
                "| {} | {} |",
                card.decision_maker_id,
                cells.join(" | ")
            );
        }
    }
    out
}
