//! C interface to `sfcplace`.
//!
//! Scenarios and embeddings cross the boundary as opaque handles. Every
//! fallible call returns an [`SfcpStatus`]; on failure a description is
//! available from [`sfcp_last_error`] on the same thread. Strings returned
//! by the library are owned by the caller and released with
//! [`sfcp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;

use sfcplace::costs::{LatencyModel, SotaParams};
use sfcplace::embedding::{validate, Embedding};
use sfcplace::hca::{self, HcaConfig, HcaStatus};
use sfcplace::ilp::{self, BigM, ExactError, ExactLimits};
use sfcplace::{fixtures, Catalog, PhysicalNetwork, Scenario};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfcpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed or inconsistent input document or argument.
    InvalidInput = 3,
    /// No embedding satisfies the constraints.
    Infeasible = 4,
    /// The embedding violates at least one constraint.
    Rejected = 5,
    /// The instance exceeds the exhaustive solver's limits.
    TooLarge = 6,
    /// A panic was caught at the boundary.
    Internal = 7,
}

/// Values accepted wherever a latency model is expected.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfcpMode {
    Sharing = 0,
    Sota = 1,
}

pub struct SfcpScenario(Scenario);

pub struct SfcpEmbedding(Embedding);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(SfcpStatus, String);

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Failure(SfcpStatus::InvalidInput, e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> Outcome<()>) -> SfcpStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfcpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SfcpStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return Err(Failure(SfcpStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(SfcpStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn optional_text<'a>(p: *const c_char, what: &str) -> Outcome<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Outcome<&'a T> {
    p.as_ref().ok_or_else(|| Failure(SfcpStatus::NullPointer, format!("{what} is null")))
}

fn out<T>(p: *mut T, what: &str) -> Outcome<()> {
    if p.is_null() {
        Err(Failure(SfcpStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn model(mode: u32) -> Outcome<LatencyModel> {
    match mode {
        m if m == SfcpMode::Sharing as u32 => Ok(LatencyModel::Sharing),
        m if m == SfcpMode::Sota as u32 => Ok(LatencyModel::Sota(SotaParams::default())),
        m => Err(Failure(SfcpStatus::InvalidInput, format!("unknown mode {m}"))),
    }
}

fn owned_string(s: String) -> Outcome<*mut c_char> {
    CString::new(s).map(CString::into_raw).map_err(Failure::input)
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sfcp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sfcp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a scenario. A null `topology` or `catalog` selects the bundled
/// Internet2 topology or default catalog.
///
/// # Safety
/// String arguments must be null or nul-terminated; `out_scenario` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sfcp_scenario_new(
    topology: *const c_char,
    catalog: *const c_char,
    scenario: *const c_char,
    out_scenario: *mut *mut SfcpScenario,
) -> SfcpStatus {
    guard(|| {
        out(out_scenario, "out_scenario")?;
        let net = match optional_text(topology, "topology")? {
            Some(t) => PhysicalNetwork::from_toml(t).map_err(Failure::input)?,
            None => fixtures::internet2(),
        };
        let cat = Catalog::from_toml(optional_text(catalog, "catalog")?.unwrap_or(fixtures::CATALOG_TOML))
            .map_err(Failure::input)?;
        let s = Scenario::from_toml(net, cat, text(scenario, "scenario")?).map_err(Failure::input)?;
        *out_scenario = Box::into_raw(Box::new(SfcpScenario(s)));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from [`sfcp_scenario_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sfcp_scenario_free(s: *mut SfcpScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of VNF requests over all SFCs; 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn sfcp_scenario_request_count(s: *const SfcpScenario) -> usize {
    s.as_ref().map_or(0, |s| s.0.request_count())
}

/// Runs the greedy embedder. Returns `Infeasible` and leaves `out_embedding`
/// untouched when some SFC cannot be embedded.
///
/// # Safety
/// `s` must be a live scenario handle and `out_embedding` writable.
#[no_mangle]
pub unsafe extern "C" fn sfcp_solve(
    s: *const SfcpScenario,
    mode: u32,
    k_max: usize,
    out_embedding: *mut *mut SfcpEmbedding,
) -> SfcpStatus {
    guard(|| {
        let s = &deref(s, "scenario")?.0;
        out(out_embedding, "out_embedding")?;
        if k_max == 0 {
            return Err(Failure(SfcpStatus::InvalidInput, "k_max must be at least 1".into()));
        }
        let config = HcaConfig { mode: model(mode)?, k_max, ..HcaConfig::default() };
        let outcome = hca::run(s, &config);
        if let HcaStatus::Infeasible(id) = outcome.status {
            return Err(Failure(SfcpStatus::Infeasible, format!("sfc {id} could not be embedded")));
        }
        *out_embedding = Box::into_raw(Box::new(SfcpEmbedding(outcome.embedding)));
        Ok(())
    })
}

/// Minimum number of active nodes found by exhaustive search. Limited to
/// small instances with unconstrained links.
///
/// # Safety
/// `s` must be a live scenario handle and `out_active` writable.
#[no_mangle]
pub unsafe extern "C" fn sfcp_solve_exact(s: *const SfcpScenario, out_active: *mut usize) -> SfcpStatus {
    guard(|| {
        let s = &deref(s, "scenario")?.0;
        out(out_active, "out_active")?;
        let sol = ilp::solve_exact(s, &ExactLimits::default()).map_err(|e| match e {
            ExactError::LimitExceeded { .. } => Failure(SfcpStatus::TooLarge, e.to_string()),
            e => Failure::input(e),
        })?;
        let active = sol.objective.ok_or_else(|| Failure(SfcpStatus::Infeasible, "no feasible embedding".into()))?;
        *out_active = active;
        Ok(())
    })
}

/// Parses an embedding document against `s`.
///
/// # Safety
/// `s` must be a live scenario handle, `doc` nul-terminated and
/// `out_embedding` writable.
#[no_mangle]
pub unsafe extern "C" fn sfcp_embedding_from_toml(
    s: *const SfcpScenario,
    doc: *const c_char,
    out_embedding: *mut *mut SfcpEmbedding,
) -> SfcpStatus {
    guard(|| {
        let s = &deref(s, "scenario")?.0;
        out(out_embedding, "out_embedding")?;
        let emb = Embedding::from_toml(text(doc, "doc")?, s).map_err(Failure::input)?;
        *out_embedding = Box::into_raw(Box::new(SfcpEmbedding(emb)));
        Ok(())
    })
}

/// Serializes an embedding; free the result with [`sfcp_string_free`].
///
/// # Safety
/// Both handles must be live and `out_doc` writable.
#[no_mangle]
pub unsafe extern "C" fn sfcp_embedding_to_toml(
    s: *const SfcpScenario,
    e: *const SfcpEmbedding,
    out_doc: *mut *mut c_char,
) -> SfcpStatus {
    guard(|| {
        let s = &deref(s, "scenario")?.0;
        let e = &deref(e, "embedding")?.0;
        out(out_doc, "out_doc")?;
        *out_doc = owned_string(e.to_toml(s))?;
        Ok(())
    })
}

/// Number of active nodes; 0 for a null handle.
///
/// # Safety
/// `e` must be null or a live embedding handle.
#[no_mangle]
pub unsafe extern "C" fn sfcp_embedding_active_nodes(e: *const SfcpEmbedding) -> usize {
    e.as_ref().map_or(0, |e| e.0.active_count())
}

/// # Safety
/// `e` must be null or an embedding handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sfcp_embedding_free(e: *mut SfcpEmbedding) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Checks every constraint family. Returns `Rejected` when violations are
/// found; their count is written to `out_violations` either way.
///
/// # Safety
/// Both handles must be live and `out_violations` writable.
#[no_mangle]
pub unsafe extern "C" fn sfcp_validate(
    s: *const SfcpScenario,
    e: *const SfcpEmbedding,
    mode: u32,
    out_violations: *mut usize,
) -> SfcpStatus {
    guard(|| {
        let s = &deref(s, "scenario")?.0;
        let e = &deref(e, "embedding")?.0;
        out(out_violations, "out_violations")?;
        let report = validate(e, s, &model(mode)?);
        *out_violations = report.violations.len();
        match report.violations.first() {
            None => Ok(()),
            Some(v) => {
                Err(Failure(SfcpStatus::Rejected, format!("{} violations, first: {v}", report.violations.len())))
            }
        }
    })
}

/// Writes the placement model in LP format; free the result with
/// [`sfcp_string_free`].
///
/// # Safety
/// `s` must be a live scenario handle and `out_lp` writable.
#[no_mangle]
pub unsafe extern "C" fn sfcp_export_lp(s: *const SfcpScenario, out_lp: *mut *mut c_char) -> SfcpStatus {
    guard(|| {
        let s = &deref(s, "scenario")?.0;
        out(out_lp, "out_lp")?;
        let m = ilp::build_model(s, &BigM::for_scenario(s)).map_err(Failure::input)?;
        let mut buf = Vec::new();
        ilp::export_lp(&m, &mut buf).map_err(Failure::input)?;
        *out_lp = owned_string(String::from_utf8(buf).map_err(Failure::input)?)?;
        Ok(())
    })
}
