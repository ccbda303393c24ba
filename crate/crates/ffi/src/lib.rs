//! C ABI for the fuzzy decision engine.
//!
//! Every function returns an [`FmStatus`]; results come back through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`fm_last_error`]. Strings returned through out pointers are owned by the
//! caller and must be released with [`fm_string_free`]; handles are released
//! with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fuzzy_mcdm::engine::EngineError;
use fuzzy_mcdm::fuzzy::{self, FuzzyError};
use fuzzy_mcdm::report;
use fuzzy_mcdm::workspace;
use fuzzy_mcdm::{Hierarchy, Mode, NodeId, PanelReport, ResponseSheet, Synthesis, Tfn};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseError = 4,
    Validation = 5,
    Integrity = 6,
    InsufficientData = 7,
    NotFound = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmTfn {
    pub lower: f64,
    pub modal: f64,
    pub upper: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmMode {
    Pessimistic = 0,
    Normal = 1,
    Optimistic = 2,
}

/// Weight levels; sub-criteria weights are global.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmLevel {
    Criteria = 0,
    SubCriteria = 1,
    Alternatives = 2,
}

/// Opaque hierarchy handle.
pub struct FmHierarchy {
    inner: Hierarchy,
}

/// Opaque panel under construction: a hierarchy and the sheets added so far.
pub struct FmPanel {
    hierarchy: Hierarchy,
    sheets: Vec<ResponseSheet>,
}

/// Opaque evaluation result.
pub struct FmReport {
    inner: PanelReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(FmStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn fail<T>(status: FmStatus, msg: impl Into<String>) -> FfiResult<T> {
    Err(Failure(status, msg.into()))
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> FmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FmStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FmStatus::Panic
        }
    }
}

fn nn<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    // SAFETY: callers pass pointers obtained from this library or valid C objects.
    unsafe { p.as_ref() }.ok_or_else(|| Failure(FmStatus::NullPointer, format!("{what} is null")))
}

fn nn_mut<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    // SAFETY: as for `nn`.
    unsafe { p.as_mut() }.ok_or_else(|| Failure(FmStatus::NullPointer, format!("{what} is null")))
}

fn out<T>(p: *mut T, value: T) -> FfiResult<()> {
    if p.is_null() {
        return fail(FmStatus::NullPointer, "out pointer is null");
    }
    // SAFETY: non-null and supplied by the caller for writing.
    unsafe { p.write(value) };
    Ok(())
}

fn text<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return fail(FmStatus::NullPointer, format!("{what} is null"));
    }
    // SAFETY: non-null, NUL-terminated by contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(FmStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn out_string(p: *mut *mut c_char, s: String) -> FfiResult<()> {
    let c = CString::new(s)
        .map_err(|_| Failure(FmStatus::InvalidArgument, "string contains NUL".into()))?;
    out(p, c.into_raw())
}

fn out_box<T>(p: *mut *mut T, value: T) -> FfiResult<()> {
    out(p, Box::into_raw(Box::new(value)))
}

impl From<Tfn> for FmTfn {
    fn from(t: Tfn) -> Self {
        FmTfn {
            lower: t.lower(),
            modal: t.modal(),
            upper: t.upper(),
        }
    }
}

fn fuzzy_failure(e: FuzzyError) -> Failure {
    let status = match e {
        FuzzyError::UnknownTerm(_) => FmStatus::NotFound,
        _ => FmStatus::InvalidArgument,
    };
    Failure(status, e.to_string())
}

fn tfn(t: FmTfn) -> FfiResult<Tfn> {
    Tfn::new(t.lower, t.modal, t.upper).map_err(fuzzy_failure)
}

fn engine_failure(e: EngineError) -> Failure {
    let status = match e {
        EngineError::EmptyPanel => FmStatus::InsufficientData,
        EngineError::HierarchyMismatch(_) => FmStatus::Integrity,
        _ => FmStatus::Validation,
    };
    Failure(status, e.to_string())
}

fn mode_of(m: FmMode) -> Mode {
    match m {
        FmMode::Pessimistic => Mode::Pessimistic,
        FmMode::Normal => Mode::Normal,
        FmMode::Optimistic => Mode::Optimistic,
    }
}

/// Message for the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Validate a triangular fuzzy number (finite, lower <= modal <= upper).
///
/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_tfn_new(
    lower: f64,
    modal: f64,
    upper: f64,
    result: *mut FmTfn,
) -> FmStatus {
    guard(|| {
        out(
            result,
            Tfn::new(lower, modal, upper).map_err(fuzzy_failure)?.into(),
        )
    })
}

fn binary(
    a: FmTfn,
    b: FmTfn,
    result: *mut FmTfn,
    op: fn(&Tfn, &Tfn) -> Result<Tfn, FuzzyError>,
) -> FmStatus {
    guard(|| {
        let (a, b) = (tfn(a)?, tfn(b)?);
        out(result, op(&a, &b).map_err(fuzzy_failure)?.into())
    })
}

/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_tfn_add(a: FmTfn, b: FmTfn, result: *mut FmTfn) -> FmStatus {
    binary(a, b, result, |a, b| Ok(a.add(b)))
}

/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_tfn_sub(a: FmTfn, b: FmTfn, result: *mut FmTfn) -> FmStatus {
    binary(a, b, result, |a, b| Ok(a.sub(b)))
}

/// Requires non-negative operands.
///
/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_tfn_mul(a: FmTfn, b: FmTfn, result: *mut FmTfn) -> FmStatus {
    binary(a, b, result, Tfn::mul)
}

/// Requires a non-negative dividend and a strictly positive divisor.
///
/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_tfn_div(a: FmTfn, b: FmTfn, result: *mut FmTfn) -> FmStatus {
    binary(a, b, result, Tfn::div)
}

/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_tfn_reciprocal(a: FmTfn, result: *mut FmTfn) -> FmStatus {
    guard(|| out(result, tfn(a)?.reciprocal().map_err(fuzzy_failure)?.into()))
}

/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_tfn_complement(a: FmTfn, result: *mut FmTfn) -> FmStatus {
    guard(|| out(result, tfn(a)?.complement().map_err(fuzzy_failure)?.into()))
}

/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_tfn_membership(a: FmTfn, x: f64, result: *mut f64) -> FmStatus {
    guard(|| out(result, tfn(a)?.membership(x)))
}

/// Look up a linguistic term (case-insensitive) in the canonical scale.
///
/// # Safety
/// `term` must be a NUL-terminated string; `scale` and `reciprocal` writable.
#[no_mangle]
pub unsafe extern "C" fn fm_scale_of(
    term: *const c_char,
    scale: *mut FmTfn,
    reciprocal: *mut FmTfn,
) -> FmStatus {
    guard(|| {
        let (s, r) = fuzzy::scale_of(text(term, "term")?).map_err(fuzzy_failure)?;
        out(scale, s.into())?;
        out(reciprocal, r.into())
    })
}

fn hierarchy_out(h: Hierarchy, result: *mut *mut FmHierarchy) -> FfiResult<()> {
    let violations = h.violations();
    if !violations.is_empty() {
        let msg = violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        return fail(FmStatus::Validation, msg);
    }
    out_box(result, FmHierarchy { inner: h })
}

/// Create a hierarchy from a built-in preset name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `result` writable.
#[no_mangle]
pub unsafe extern "C" fn fm_hierarchy_preset(
    name: *const c_char,
    result: *mut *mut FmHierarchy,
) -> FmStatus {
    guard(|| {
        let h = Hierarchy::preset(text(name, "name")?)
            .map_err(|e| Failure(FmStatus::NotFound, e.to_string()))?;
        hierarchy_out(h, result)
    })
}

/// Parse and validate a hierarchy from JSON (`schemaVersion` optional).
///
/// # Safety
/// `json` must be a NUL-terminated string; `result` writable.
#[no_mangle]
pub unsafe extern "C" fn fm_hierarchy_from_json(
    json: *const c_char,
    result: *mut *mut FmHierarchy,
) -> FmStatus {
    guard(|| {
        let bytes = text(json, "json")?.as_bytes();
        let value = workspace::versioned_value(Path::new("<hierarchy>"), bytes, false)
            .map_err(|e| Failure(FmStatus::ParseError, e.to_string()))?;
        let h: Hierarchy = serde_json::from_value(value)
            .map_err(|e| Failure(FmStatus::ParseError, e.to_string()))?;
        hierarchy_out(h, result)
    })
}

/// # Safety
/// `h` must come from this library and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn fm_hierarchy_free(h: *mut FmHierarchy) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle; `result` writable.
#[no_mangle]
pub unsafe extern "C" fn fm_hierarchy_set_count(
    h: *const FmHierarchy,
    result: *mut usize,
) -> FmStatus {
    guard(|| {
        let sets = nn(h, "hierarchy")?.inner.comparison_sets();
        out(
            result,
            sets.map_err(|e| Failure(FmStatus::Validation, e.to_string()))?
                .len(),
        )
    })
}

/// # Safety
/// `h` must be a live handle; `result` writable.
#[no_mangle]
pub unsafe extern "C" fn fm_hierarchy_question_count(
    h: *const FmHierarchy,
    result: *mut usize,
) -> FmStatus {
    guard(|| {
        let n = nn(h, "hierarchy")?.inner.question_count();
        out(
            result,
            n.map_err(|e| Failure(FmStatus::Validation, e.to_string()))?,
        )
    })
}

/// SHA-256 content hash (lowercase hex). Free with `fm_string_free`.
///
/// # Safety
/// `h` must be a live handle; `result` writable.
#[no_mangle]
pub unsafe extern "C" fn fm_hierarchy_hash(
    h: *const FmHierarchy,
    result: *mut *mut c_char,
) -> FmStatus {
    guard(|| out_string(result, nn(h, "hierarchy")?.inner.content_hash()))
}

/// Start a panel for a hierarchy; the hierarchy is copied.
///
/// # Safety
/// `h` must be a live handle; `result` writable.
#[no_mangle]
pub unsafe extern "C" fn fm_panel_new(
    h: *const FmHierarchy,
    result: *mut *mut FmPanel,
) -> FmStatus {
    guard(|| {
        let hierarchy = nn(h, "hierarchy")?.inner.clone();
        out_box(
            result,
            FmPanel {
                hierarchy,
                sheets: Vec::new(),
            },
        )
    })
}

/// Add one response sheet given as JSON. Every problem in the sheet is
/// reported in the error message.
///
/// # Safety
/// `panel` must be a live handle; `json` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fm_panel_add_sheet_json(
    panel: *mut FmPanel,
    json: *const c_char,
) -> FmStatus {
    guard(|| {
        let panel = nn_mut(panel, "panel")?;
        let bytes = text(json, "json")?.as_bytes();
        let value = workspace::versioned_value(Path::new("<sheet>"), bytes, false)
            .map_err(|e| Failure(FmStatus::ParseError, e.to_string()))?;
        let sheet = ResponseSheet::parse_lenient(value)
            .map_err(|problems| Failure(FmStatus::Validation, problems.join("; ")))?;
        sheet
            .check_hierarchy(&panel.hierarchy)
            .map_err(|e| Failure(FmStatus::Integrity, e.to_string()))?;
        let sets = panel
            .hierarchy
            .comparison_sets()
            .map_err(|e| Failure(FmStatus::Validation, e.to_string()))?;
        let issues = sheet.issues(&sets);
        if !issues.is_empty() {
            let msg = issues
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; ");
            return fail(FmStatus::Validation, msg);
        }
        panel.sheets.push(sheet);
        Ok(())
    })
}

/// # Safety
/// `panel` must be a live handle; `result` writable.
#[no_mangle]
pub unsafe extern "C" fn fm_panel_size(panel: *const FmPanel, result: *mut usize) -> FmStatus {
    guard(|| out(result, nn(panel, "panel")?.sheets.len()))
}

/// Evaluate every sheet added so far. All sheets must be complete.
///
/// # Safety
/// `panel` must be a live handle; `result` writable.
#[no_mangle]
pub unsafe extern "C" fn fm_panel_evaluate(
    panel: *const FmPanel,
    result: *mut *mut FmReport,
) -> FmStatus {
    guard(|| {
        let panel = nn(panel, "panel")?;
        let report =
            fuzzy_mcdm::evaluate(&panel.hierarchy, &panel.sheets).map_err(engine_failure)?;
        out_box(result, FmReport { inner: report })
    })
}

/// # Safety
/// `panel` must come from this library and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn fm_panel_free(panel: *mut FmPanel) {
    if !panel.is_null() {
        drop(Box::from_raw(panel));
    }
}

/// Report as JSON. Free with `fm_string_free`.
///
/// # Safety
/// `r` must be a live handle; `result` writable.
#[no_mangle]
pub unsafe extern "C" fn fm_report_to_json(
    r: *const FmReport,
    result: *mut *mut c_char,
) -> FmStatus {
    guard(|| {
        let json = serde_json::to_string(&nn(r, "report")?.inner)
            .map_err(|e| Failure(FmStatus::InvalidArgument, e.to_string()))?;
        out_string(result, json)
    })
}

/// Report as CSV (`level,node,mode,decision_maker,weight`). Free with
/// `fm_string_free`.
///
/// # Safety
/// `r` must be a live handle; `result` writable.
#[no_mangle]
pub unsafe extern "C" fn fm_report_to_csv(
    r: *const FmReport,
    result: *mut *mut c_char,
) -> FmStatus {
    guard(|| out_string(result, report::render_csv(&nn(r, "report")?.inner)))
}

/// # Safety
/// `r` must be a live handle; `result` writable.
#[no_mangle]
pub unsafe extern "C" fn fm_report_panel_size(r: *const FmReport, result: *mut usize) -> FmStatus {
    guard(|| out(result, nn(r, "report")?.inner.panel_size()))
}

/// One weight from the report. `decision_maker` NULL selects the panel
/// aggregate.
///
/// # Safety
/// `r` must be a live handle; strings NUL-terminated or NULL where allowed;
/// `result` writable.
#[no_mangle]
pub unsafe extern "C" fn fm_report_weight(
    r: *const FmReport,
    decision_maker: *const c_char,
    level: FmLevel,
    mode: FmMode,
    node: *const c_char,
    result: *mut f64,
) -> FmStatus {
    guard(|| {
        let report = &nn(r, "report")?.inner;
        let synthesis: &Synthesis = if decision_maker.is_null() {
            &report.aggregate
        } else {
            let dm = text(decision_maker, "decision_maker")?;
            &report
                .per_decision_maker
                .iter()
                .find(|c| c.decision_maker_id == dm)
                .ok_or_else(|| Failure(FmStatus::NotFound, format!("no decision maker {dm:?}")))?
                .synthesis
        };
        let vectors = match level {
            FmLevel::Criteria => &synthesis.criteria_weights,
            FmLevel::SubCriteria => &synthesis.global_sub_weights,
            FmLevel::Alternatives => &synthesis.alternative_scores,
        };
        let id = NodeId::from(text(node, "node")?);
        let w = vectors[mode_of(mode)].get(&id).ok_or_else(|| {
            Failure(
                FmStatus::NotFound,
                format!("no node {id} at {level:?} level"),
            )
        })?;
        out(result, w)
    })
}

/// # Safety
/// `r` must come from this library and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn fm_report_free(r: *mut FmReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
