//! The `fmcdm` command line.
//!
//! Data goes to standard output, diagnostics to standard error. Exit codes:
//! 0 success, 2 validation, 3 filesystem precondition, 4 integrity,
//! 5 insufficient data, 6 network.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::fuzzy::{LinguisticTerm, ScaleTable};
use crate::hierarchy::{Hierarchy, Level, Node, Question};
use crate::judgment::{build_matrix, Answer, JudgmentError, ResponseSheet};
use crate::report::{self, ReportFormat};
use crate::service::{self, AppState};
use crate::workspace::{self, Workspace, WorkspaceError};

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_FILESYSTEM: u8 = 3;
pub const EXIT_INTEGRITY: u8 = 4;
pub const EXIT_INSUFFICIENT: u8 = 5;
pub const EXIT_NETWORK: u8 = 6;

#[derive(Debug, Parser)]
#[command(
    name = "fmcdm",
    version,
    about = "Fuzzy multi-criteria group decision workspace"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct WorkspaceArg {
    /// Workspace directory.
    #[arg(long, env = "FMCDM_WORKSPACE")]
    pub workspace: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a workspace from a hierarchy file or a built-in preset.
    Init {
        #[command(flatten)]
        ws: WorkspaceArg,
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        hierarchy: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
    },
    /// Print the questionnaire.
    Questions {
        #[command(flatten)]
        ws: WorkspaceArg,
        #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
        format: String,
    },
    /// Validate and store response sheets.
    Import {
        #[command(flatten)]
        ws: WorkspaceArg,
        #[arg(long, required = true, num_args = 1..)]
        sheet: Vec<PathBuf>,
    },
    /// Evaluate all complete sheets and save a report.
    Compute {
        #[command(flatten)]
        ws: WorkspaceArg,
    },
    /// Render a saved report (the latest unless --id is given).
    Report {
        #[command(flatten)]
        ws: WorkspaceArg,
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        id: Option<String>,
    },
    /// Run the HTTP service.
    Serve {
        #[command(flatten)]
        ws: WorkspaceArg,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

/// A failed command: exit code plus the lines to print on stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub messages: Vec<String>,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            messages: vec![message.into()],
        }
    }
}

pub fn exit_code(e: &WorkspaceError) -> u8 {
    match e {
        WorkspaceError::Io { .. } | WorkspaceError::NotEmpty(_) | WorkspaceError::Locked(_) => {
            EXIT_FILESYSTEM
        }
        WorkspaceError::HashMismatch { .. } => EXIT_INTEGRITY,
        WorkspaceError::NoCompleteSheets | WorkspaceError::NoReports => EXIT_INSUFFICIENT,
        _ => EXIT_VALIDATION,
    }
}

impl From<WorkspaceError> for Failure {
    fn from(e: WorkspaceError) -> Self {
        let messages = match &e {
            WorkspaceError::InvalidHierarchy(v) => v.iter().map(ToString::to_string).collect(),
            _ => vec![e.to_string()],
        };
        Failure {
            code: exit_code(&e),
            messages,
        }
    }
}

type CmdResult = Result<(), Failure>;

/// Parse arguments, run the command and map the outcome to an exit code.
pub fn main() -> ExitCode {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .try_init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            for m in &f.messages {
                eprintln!("error: {m}");
            }
            ExitCode::from(f.code)
        }
    }
}

pub fn run(cli: Cli) -> CmdResult {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Init {
            ws,
            hierarchy,
            preset,
        } => init(&mut out, &ws.workspace, hierarchy, preset),
        Command::Questions { ws, format } => questions(&mut out, &ws.workspace, &format),
        Command::Import { ws, sheet } => import(&mut out, &ws.workspace, &sheet),
        Command::Compute { ws } => compute(&mut out, &ws.workspace),
        Command::Report {
            ws,
            format,
            out: file,
            id,
        } => report_cmd(
            &mut out,
            &ws.workspace,
            &format,
            file.as_deref(),
            id.as_deref(),
        ),
        Command::Serve { ws, listen, ui_dir } => serve(&ws.workspace, &listen, ui_dir),
    }
}

fn write_out(out: &mut impl Write, bytes: &[u8]) -> CmdResult {
    out.write_all(bytes)
        .and_then(|_| out.flush())
        .map_err(|e| Failure::new(EXIT_FILESYSTEM, format!("stdout: {e}")))
}

/// Open an existing workspace; anything unreadable is a validation error.
fn open(root: &Path) -> Result<Workspace, Failure> {
    Workspace::open(root).map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))
}

fn init(
    out: &mut impl Write,
    root: &Path,
    file: Option<PathBuf>,
    preset: Option<String>,
) -> CmdResult {
    let h = match (file, preset) {
        (Some(path), _) => workspace::load_hierarchy_input(&path).map_err(|e| {
            let mut f = Failure::from(e);
            f.code = EXIT_VALIDATION;
            f
        })?,
        (None, Some(name)) => {
            Hierarchy::preset(&name).map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))?
        }
        (None, None) => {
            return Err(Failure::new(
                EXIT_VALIDATION,
                "--hierarchy or --preset is required",
            ))
        }
    };
    let ws = Workspace::init(root, h)?;
    let h = ws.hierarchy();
    let sets = h
        .comparison_sets()
        .map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))?;
    let questions = h
        .question_count()
        .map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))?;
    log::info!(
        "initialized {} (hierarchy {})",
        root.display(),
        ws.hierarchy_hash()
    );
    write_out(
        out,
        format!("{} comparison sets, {questions} questions\n", sets.len()).as_bytes(),
    )
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct QuestionRow<'a> {
    index: usize,
    set: usize,
    level: Level,
    context_node: &'a str,
    context_label: &'a str,
    first_node: &'a Node,
    second_node: &'a Node,
    prompt_text: String,
    options: [&'static str; 5],
}

impl<'a> From<&'a Question> for QuestionRow<'a> {
    fn from(q: &'a Question) -> Self {
        QuestionRow {
            index: q.index,
            set: q.set,
            level: q.level,
            context_node: q.context.key(),
            context_label: &q.context_label,
            first_node: &q.first,
            second_node: &q.second,
            prompt_text: q.prompt(),
            options: LinguisticTerm::ALL.map(LinguisticTerm::label),
        }
    }
}

fn level_name(level: Level) -> &'static str {
    match level {
        Level::Criteria => "criteria",
        Level::SubCriteria => "subCriteria",
        Level::Alternatives => "alternatives",
    }
}

fn questions(out: &mut impl Write, root: &Path, format: &str) -> CmdResult {
    let ws = open(root)?;
    let qs = ws
        .hierarchy()
        .questions()
        .map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))?;
    let bytes = match format {
        "csv" => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io_fail = |e: csv::Error| Failure::new(EXIT_FILESYSTEM, e.to_string());
            w.write_record([
                "index",
                "set",
                "level",
                "context",
                "first",
                "second",
                "first_label",
                "second_label",
                "prompt",
                "options",
            ])
            .map_err(io_fail)?;
            let options = LinguisticTerm::ALL.map(LinguisticTerm::label).join("|");
            for q in &qs {
                w.write_record([
                    q.index.to_string().as_str(),
                    &q.set.to_string(),
                    level_name(q.level),
                    q.context.key(),
                    q.first.id.as_str(),
                    q.second.id.as_str(),
                    &q.first.label,
                    &q.second.label,
                    &q.prompt(),
                    &options,
                ])
                .map_err(io_fail)?;
            }
            w.into_inner()
                .map_err(|e| Failure::new(EXIT_FILESYSTEM, e.to_string()))?
        }
        _ => {
            let rows: Vec<QuestionRow> = qs.iter().map(QuestionRow::from).collect();
            let mut v = serde_json::to_vec_pretty(&rows).expect("questions serialize");
            v.push(b'\n');
            v
        }
    };
    write_out(out, &bytes)
}

/// A sheet that passed validation, with its diagnostics line.
struct Checked {
    sheet: ResponseSheet,
    summary: String,
}

fn check_sheet(ws: &Workspace, path: &Path) -> Result<Checked, Failure> {
    let name = path.display();
    let value = workspace::read_input(path).map_err(|e| {
        let code = if matches!(e, WorkspaceError::Io { .. }) {
            EXIT_FILESYSTEM
        } else {
            EXIT_VALIDATION
        };
        Failure::new(code, e.to_string())
    })?;
    let h = ws.hierarchy();
    if let Some(reference) = value.get("hierarchyRef").and_then(|v| v.as_str()) {
        if !h.matches_ref(reference) {
            return Err(Failure::new(
                EXIT_INTEGRITY,
                format!(
                    "{name}: made for hierarchy {reference}, workspace hierarchy is {}",
                    ws.hierarchy_hash()
                ),
            ));
        }
    }
    let sheet = ResponseSheet::parse_lenient(value).map_err(|problems| Failure {
        code: EXIT_VALIDATION,
        messages: problems
            .into_iter()
            .map(|p| format!("{name}: {p}"))
            .collect(),
    })?;
    if !workspace::is_valid_dm_id(&sheet.decision_maker_id) {
        return Err(Failure::new(
            EXIT_VALIDATION,
            format!(
                "{name}: invalid decision maker id {:?}",
                sheet.decision_maker_id
            ),
        ));
    }
    let sets = h
        .comparison_sets()
        .map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))?;
    let issues = sheet.issues(&sets);
    if !issues.is_empty() {
        return Err(Failure {
            code: EXIT_VALIDATION,
            messages: issues.iter().map(|i| format!("{name}: {i}")).collect(),
        });
    }
    let c = sheet
        .completeness(h)
        .map_err(|e| Failure::new(EXIT_VALIDATION, format!("{name}: {e}")))?;
    let mut summary = format!(
        "{}: {}/{} {}\n",
        sheet.decision_maker_id,
        c.answered,
        c.total,
        if c.is_complete() {
            "complete"
        } else {
            "incomplete"
        }
    );
    let table = ScaleTable::canonical();
    let mut scored = Vec::new();
    for (index, set) in sets.iter().enumerate() {
        if set.members.len() < 3 {
            continue;
        }
        let answers: Vec<&Answer> = sheet.answers.iter().filter(|a| a.set == index).collect();
        match build_matrix(set, &answers, table) {
            Ok(m) => scored.push((index, m.additive_inconsistency())),
            Err(JudgmentError::Missing(_)) => {}
            Err(e) => return Err(Failure::new(EXIT_VALIDATION, format!("{name}: {e}"))),
        }
    }
    if let Some(&(worst, max)) = scored.iter().max_by(|a, b| a.1.total_cmp(&b.1)) {
        let mean = scored.iter().map(|s| s.1).sum::<f64>() / scored.len() as f64;
        summary.push_str(&format!(
            "  additive inconsistency over {} sets: mean {mean:.4}, max {max:.4} (set {worst})\n",
            scored.len()
        ));
    }
    Ok(Checked { sheet, summary })
}

fn import(out: &mut impl Write, root: &Path, paths: &[PathBuf]) -> CmdResult {
    let ws = open(root)?;
    let mut checked = Vec::new();
    let mut failures = Vec::new();
    for path in paths {
        match check_sheet(&ws, path) {
            Ok(c) => checked.push(c),
            Err(f) => failures.push(f),
        }
    }
    if !failures.is_empty() {
        let code = failures
            .iter()
            .map(|f| f.code)
            .max()
            .unwrap_or(EXIT_VALIDATION);
        let messages = failures.into_iter().flat_map(|f| f.messages).collect();
        return Err(Failure { code, messages });
    }
    let lock = ws.lock()?;
    let mut text = String::new();
    for c in &checked {
        let path = ws.save_sheet(&lock, &c.sheet)?;
        log::info!("stored {}", path.display());
        text.push_str(&c.summary);
    }
    write_out(out, text.as_bytes())
}

fn compute(out: &mut impl Write, root: &Path) -> CmdResult {
    let ws = open(root)?;
    let lock = ws.lock()?;
    let mut doc = ws.compute()?;
    for w in &doc.metadata.warnings {
        log::warn!("{w}");
    }
    let path = ws.save_report(&lock, &mut doc)?;
    write_out(
        out,
        format!(
            "report {}: {} decision makers\n{}\n",
            doc.metadata.id,
            doc.metadata.panel_size,
            path.display()
        )
        .as_bytes(),
    )
}

fn report_cmd(
    out: &mut impl Write,
    root: &Path,
    format: &str,
    file: Option<&Path>,
    id: Option<&str>,
) -> CmdResult {
    let format: ReportFormat = format.parse()?;
    let ws = open(root)?;
    let doc = ws.load_report(id)?;
    let bytes = report::render(&doc, format);
    match file {
        Some(path) => fs::write(path, &bytes)
            .map_err(|e| Failure::new(EXIT_FILESYSTEM, format!("{}: {e}", path.display()))),
        None => write_out(out, &bytes),
    }
}

fn serve(root: &Path, listen: &str, ui_dir: Option<PathBuf>) -> CmdResult {
    let ws = open(root)?;
    if let Some(dir) = &ui_dir {
        if !dir.is_dir() {
            return Err(Failure::new(
                EXIT_FILESYSTEM,
                format!("{}: not a directory", dir.display()),
            ));
        }
    }
    let runtime = tokio::runtime::Runtime::new()
        .map_err(|e| Failure::new(EXIT_NETWORK, format!("runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(listen)
            .await
            .map_err(|e| Failure::new(EXIT_NETWORK, format!("cannot listen on {listen}: {e}")))?;
        let addr = listener
            .local_addr()
            .map(|a| a.to_string())
            .unwrap_or_else(|_| listen.to_string());
        log::info!("listening on http://{addr}");
        service::serve(listener, AppState::new(ws), ui_dir)
            .await
            .map_err(|e| Failure::new(EXIT_NETWORK, e.to_string()))
    })
}
