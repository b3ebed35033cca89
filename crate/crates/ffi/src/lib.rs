//! C ABI over `dyadic-core`.
//!
//! Handles are opaque and owned by the caller: everything returned through an
//! `out` pointer must be released with the matching `*_free` function.
//! Every function returns a [`DyadicStatus`]; on failure the message is
//! available from [`dyadic_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dyadic_core::chase::{run_chase, ChaseBudget, ChaseResult};
use dyadic_core::decomposition::DecompositionError;
use dyadic_core::model::{ConjunctiveQuery, Constant};
use dyadic_core::parser::{
    parse_program_with, parse_query, serialize_program, ParseOptions, Program,
};
use dyadic_core::qa::{
    cert_eval_dyadic, certain_answers_dyadic, BoundedChaseReasoner, CReasoner, QaError,
    TerminatingChaseReasoner,
};
use dyadic_core::recognizers::{classify_all, has_termination_certificate, recognize, ClassName};
use serde_json::{json, Map, Value};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DyadicStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    UnsupportedClass = 4,
    NotInDyadicClass = 5,
    ReasonerInexact = 6,
    NotADyadicPair = 7,
    NoTerminationCertificate = 8,
    InvalidQuery = 9,
    Other = 10,
    Panic = 11,
}

/// Certain-answer oracle used by [`dyadic_answer`] and [`dyadic_check`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DyadicOracle {
    /// Chase without budget; only for chase-terminating classes.
    Chase = 0,
    /// Chase within the budget; fails with `REASONER_INEXACT` when it runs out.
    Bounded = 1,
}

/// Chase limits. A zero field means no limit on that dimension.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DyadicBudget {
    pub max_atoms: usize,
    pub max_level: u32,
}

/// A parsed program: facts, rules and queries.
pub struct DyadicProgram(Program);

/// A finished chase run.
pub struct DyadicChase(ChaseResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(DyadicStatus, String);

impl Failure {
    fn new(status: DyadicStatus, msg: impl ToString) -> Self {
        Failure(status, msg.to_string())
    }
}

impl From<QaError> for Failure {
    fn from(e: QaError) -> Self {
        let status = match &e {
            QaError::ReasonerInexact(_) => DyadicStatus::ReasonerInexact,
            QaError::UnsupportedClass { .. } => DyadicStatus::UnsupportedClass,
            QaError::NotADyadicPair { .. } => DyadicStatus::NotADyadicPair,
            QaError::NotInDyadicClass(_) => DyadicStatus::NotInDyadicClass,
            QaError::Decomposition(DecompositionError::NotInDyadicClass(_)) => {
                DyadicStatus::NotInDyadicClass
            }
            QaError::ReservedPredicateInQuery(_) | QaError::ArityMismatch { .. } => {
                DyadicStatus::InvalidQuery
            }
            QaError::Decomposition(_) => DyadicStatus::Other,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DyadicStatus {
    set_last_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DyadicStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            DyadicStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(
            DyadicStatus::NullArgument,
            format!("{what} is null"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(DyadicStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(DyadicStatus::NullArgument, format!("{what} is null")))
}

/// Builds the value only once `out` is known to be writable, so nothing
/// allocated for the caller leaks.
unsafe fn write_out<T>(out: *mut T, value: impl FnOnce() -> T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(DyadicStatus::NullArgument, "out is null"));
    }
    out.write(value());
    Ok(())
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .unwrap_or_default()
        .into_raw()
}

fn to_budget(b: DyadicBudget) -> ChaseBudget {
    ChaseBudget {
        max_atoms: (b.max_atoms > 0).then_some(b.max_atoms),
        max_level: (b.max_level > 0).then_some(b.max_level),
    }
}

fn class_arg(name: &str) -> Result<ClassName, Failure> {
    name.parse::<ClassName>().map_err(|e| {
        Failure::new(
            DyadicStatus::UnsupportedClass,
            format!("unsupported class {}", e.0),
        )
    })
}

/// A query index into the program's queries, or an inline query.
fn query_arg(program: &Program, text: &str) -> Result<ConjunctiveQuery, Failure> {
    if let Ok(i) = text.trim().parse::<usize>() {
        return program.queries.get(i).cloned().ok_or_else(|| {
            Failure::new(
                DyadicStatus::InvalidQuery,
                format!(
                    "query index {i} out of range ({} queries)",
                    program.queries.len()
                ),
            )
        });
    }
    parse_query(text).map_err(|e| Failure::new(DyadicStatus::InvalidQuery, e))
}

fn reasoner(oracle: DyadicOracle, budget: DyadicBudget) -> Box<dyn CReasoner> {
    match oracle {
        DyadicOracle::Chase => Box::new(TerminatingChaseReasoner),
        DyadicOracle::Bounded => Box::new(BoundedChaseReasoner {
            budget: to_budget(budget),
        }),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dyadic_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dyadic_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// The default budget: 100000 atoms, 64 levels.
#[no_mangle]
pub extern "C" fn dyadic_budget_default() -> DyadicBudget {
    DyadicBudget {
        max_atoms: ChaseBudget::DEFAULT_MAX_ATOMS,
        max_level: ChaseBudget::DEFAULT_MAX_LEVEL,
    }
}

/// Parses a program. `allow_reserved` accepts `__`-prefixed predicates.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dyadic_program_parse(
    text: *const c_char,
    allow_reserved: bool,
    out: *mut *mut DyadicProgram,
) -> DyadicStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let program = parse_program_with(text, ParseOptions { allow_reserved })
            .map_err(|e| Failure::new(DyadicStatus::ParseError, e))?;
        write_out(out, || Box::into_raw(Box::new(DyadicProgram(program))))
    })
}

/// # Safety
/// `program` must come from [`dyadic_program_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn dyadic_program_free(program: *mut DyadicProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// # Safety
/// `program` must be a live handle or null (gives 0).
#[no_mangle]
pub unsafe extern "C" fn dyadic_program_num_facts(program: *const DyadicProgram) -> usize {
    program.as_ref().map_or(0, |p| p.0.database.len())
}

/// # Safety
/// `program` must be a live handle or null (gives 0).
#[no_mangle]
pub unsafe extern "C" fn dyadic_program_num_rules(program: *const DyadicProgram) -> usize {
    program.as_ref().map_or(0, |p| p.0.ontology.len())
}

/// # Safety
/// `program` must be a live handle or null (gives 0).
#[no_mangle]
pub unsafe extern "C" fn dyadic_program_num_queries(program: *const DyadicProgram) -> usize {
    program.as_ref().map_or(0, |p| p.0.queries.len())
}

/// Canonical text of the program. Free with [`dyadic_string_free`].
///
/// # Safety
/// `program` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dyadic_program_to_string(
    program: *const DyadicProgram,
    out: *mut *mut c_char,
) -> DyadicStatus {
    guard(|| {
        let p = ref_arg(program, "program")?;
        write_out(out, || c_string(serialize_program(&p.0)))
    })
}

/// Membership in every class as a JSON object keyed by class name, each
/// value `{"member": bool, "witness": string|null}`.
///
/// # Safety
/// `program` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dyadic_classify_json(
    program: *const DyadicProgram,
    out: *mut *mut c_char,
) -> DyadicStatus {
    guard(|| {
        let p = ref_arg(program, "program")?;
        let classes: Map<String, Value> = classify_all(&p.0.ontology)
            .into_iter()
            .map(|(c, v)| {
                (
                    c.to_string(),
                    json!({"member": v.member, "witness": v.witness}),
                )
            })
            .collect();
        write_out(out, || c_string(Value::Object(classes).to_string()))
    })
}

/// Membership in one class, e.g. `"Guarded"` or `"Dyadic-Shy"`.
///
/// # Safety
/// `program` must be a live handle, `class` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dyadic_is_member(
    program: *const DyadicProgram,
    class: *const c_char,
    out: *mut bool,
) -> DyadicStatus {
    guard(|| {
        let p = ref_arg(program, "program")?;
        let class = class_arg(str_arg(class, "class")?)?;
        write_out(out, || recognize(&p.0.ontology, class).member)
    })
}

/// Chases the program's facts with its rules. A budget with both fields zero
/// needs a termination certificate.
///
/// # Safety
/// `program` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dyadic_chase(
    program: *const DyadicProgram,
    budget: DyadicBudget,
    out: *mut *mut DyadicChase,
) -> DyadicStatus {
    guard(|| {
        let p = ref_arg(program, "program")?;
        let budget = to_budget(budget);
        if budget == ChaseBudget::unlimited() && !has_termination_certificate(&p.0.ontology) {
            return Err(Failure::new(
                DyadicStatus::NoTerminationCertificate,
                "no termination certificate for an unlimited chase",
            ));
        }
        let result = run_chase(&p.0.database, &p.0.ontology, budget);
        write_out(out, || Box::into_raw(Box::new(DyadicChase(result))))
    })
}

/// # Safety
/// `chase` must come from [`dyadic_chase`] or be null.
#[no_mangle]
pub unsafe extern "C" fn dyadic_chase_free(chase: *mut DyadicChase) {
    if !chase.is_null() {
        drop(Box::from_raw(chase));
    }
}

/// Number of atoms; 0 for null.
///
/// # Safety
/// `chase` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dyadic_chase_len(chase: *const DyadicChase) -> usize {
    chase.as_ref().map_or(0, |c| c.0.instance().len())
}

/// Whether the run reached a fixpoint; false for null.
///
/// # Safety
/// `chase` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dyadic_chase_is_complete(chase: *const DyadicChase) -> bool {
    chase.as_ref().is_some_and(|c| c.0.is_complete())
}

/// Atoms in derivation order, one `atom.` per line.
///
/// # Safety
/// `chase` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dyadic_chase_to_string(
    chase: *const DyadicChase,
    out: *mut *mut c_char,
) -> DyadicStatus {
    guard(|| {
        let c = ref_arg(chase, "chase")?;
        let text: String = c.0.instance().iter().map(|a| format!("{a}.\n")).collect();
        write_out(out, || c_string(text))
    })
}

/// Certain answers through the dyadic decomposition for `class` (a base
/// class name; a `Dyadic-` prefix is accepted). `query` is a 0-based index
/// into the program's queries or an inline query. The result has one
/// comma-separated tuple per line, or `true`/`false` for a Boolean query.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dyadic_answer(
    program: *const DyadicProgram,
    query: *const c_char,
    class: *const c_char,
    oracle: DyadicOracle,
    budget: DyadicBudget,
    out: *mut *mut c_char,
) -> DyadicStatus {
    guard(|| {
        let p = ref_arg(program, "program")?;
        let q = query_arg(&p.0, str_arg(query, "query")?)?;
        let class = class_arg(str_arg(class, "class")?)?.base();
        let r = reasoner(oracle, budget);
        let answers = certain_answers_dyadic(&q, &p.0.database, &p.0.ontology, class, r.as_ref())?;
        let text = if q.is_boolean() {
            format!("{}\n", answers.holds())
        } else {
            answers.to_string()
        };
        write_out(out, || c_string(text))
    })
}

/// Decides whether the comma-separated `tuple` is a certain answer.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dyadic_check(
    program: *const DyadicProgram,
    query: *const c_char,
    class: *const c_char,
    tuple: *const c_char,
    oracle: DyadicOracle,
    budget: DyadicBudget,
    out: *mut bool,
) -> DyadicStatus {
    guard(|| {
        let p = ref_arg(program, "program")?;
        let q = query_arg(&p.0, str_arg(query, "query")?)?;
        let class = class_arg(str_arg(class, "class")?)?.base();
        let tuple: Vec<Constant> = str_arg(tuple, "tuple")?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| Constant::new(s.trim_matches('"')))
            .collect();
        let r = reasoner(oracle, budget);
        let verdict: bool =
            cert_eval_dyadic(&q, &p.0.database, &p.0.ontology, &tuple, class, r.as_ref())?;
        write_out(out, || verdict)
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn dyadic_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
