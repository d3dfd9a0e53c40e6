//! C ABI over the engine.
//!
//! Objects are opaque heap handles released by their `_free` function.
//! Every fallible call returns a [`QhamStatus`]; on failure the message is
//! available from [`qham_last_error`] until the next failing call on the
//! same thread. Strings returned through `char **` are owned by the caller
//! and released with [`qham_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qham_forge::cob::{self, CobMorphism};
use qham_forge::lie::LieGroupModel;
use qham_forge::multivector::psi_identity_residual;
use qham_forge::quiver::{self, Quiver};
use qham_forge::QhamError;

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QhamStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    UnsupportedModel = 3,
    Parse = 4,
    InvalidQuiver = 5,
    InvalidMorphism = 6,
    OutOfRange = 7,
    Numerical = 8,
    Panic = 9,
}

/// Opaque group model.
pub struct QhamModel(LieGroupModel);

/// Opaque quiver.
pub struct QhamQuiver(Quiver);

/// Opaque cobordism morphism.
pub struct QhamMorphism(CobMorphism);

/// Combinatorial invariants of a valid quiver.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QhamQuiverInvariants {
    pub n_edges: usize,
    pub n_interior: usize,
    pub n_incoming: usize,
    pub n_outgoing: usize,
    pub genus: i64,
    /// dim of the moduli space divided by dim G.
    pub dim_units: i64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &QhamError) -> QhamStatus {
    match e {
        QhamError::UnsupportedModel(_) => QhamStatus::UnsupportedModel,
        QhamError::Parse { .. } => QhamStatus::Parse,
        QhamError::InvalidQuiver(_) => QhamStatus::InvalidQuiver,
        QhamError::InvalidMorphism(_) => QhamStatus::InvalidMorphism,
        QhamError::DimensionMismatch { .. } => QhamStatus::OutOfRange,
        _ => QhamStatus::Numerical,
    }
}

struct Fail(QhamStatus, String);

impl From<QhamError> for Fail {
    fn from(e: QhamError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QhamStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QhamStatus::Ok,
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            QhamStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(QhamStatus::NullPointer, format!("null pointer: {what}"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(QhamStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Message of the last failing call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qham_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qham_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a group model from an id such as `su2`, `torus:3` or `prod:su2,so3`.
///
/// # Safety
/// `id` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qham_model_new(id: *const c_char, out: *mut *mut QhamModel) -> QhamStatus {
    guard(|| {
        let id = str_arg(id, "id")?;
        let m = LieGroupModel::from_id(id)?;
        put(out, Box::into_raw(Box::new(QhamModel(m))), "out")
    })
}

/// # Safety
/// `m` must come from [`qham_model_new`] and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qham_model_free(m: *mut QhamModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live model; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qham_model_dim(m: *const QhamModel, out: *mut usize) -> QhamStatus {
    guard(|| put(out, obj(m, "model")?.0.dim(), "out"))
}

/// Structure constant f_ij^k in the model's orthonormal basis.
///
/// # Safety
/// `m` must be a live model; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qham_model_structure_constant(
    m: *const QhamModel,
    i: usize,
    j: usize,
    k: usize,
    out: *mut f64,
) -> QhamStatus {
    guard(|| {
        let m = &obj(m, "model")?.0;
        let d = m.dim();
        if i >= d || j >= d || k >= d {
            return Err(Fail(QhamStatus::OutOfRange, format!("index out of range for dim {d}")));
        }
        put(out, m.f(i, j, k), "out")
    })
}

/// Frobenius norm of the residual of the Cartan trivector identity.
///
/// # Safety
/// `m` must be a live model; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qham_psi_residual(m: *const QhamModel, out: *mut f64) -> QhamStatus {
    guard(|| {
        let r = psi_identity_residual(&obj(m, "model")?.0)?;
        put(out, r, "out")
    })
}

/// Parses a quiver from JSON and checks its structure.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qham_quiver_from_json(json: *const c_char, out: *mut *mut QhamQuiver) -> QhamStatus {
    guard(|| {
        let q = Quiver::from_json(str_arg(json, "json")?)?;
        put(out, Box::into_raw(Box::new(QhamQuiver(q))), "out")
    })
}

/// # Safety
/// `q` must come from this library and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qham_quiver_free(q: *mut QhamQuiver) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Validates the quiver and reports its invariants.
///
/// # Safety
/// `q` must be a live quiver; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qham_quiver_invariants(q: *const QhamQuiver, out: *mut QhamQuiverInvariants) -> QhamStatus {
    guard(|| {
        let inv = obj(q, "quiver")?.0.validate()?;
        let v = QhamQuiverInvariants {
            n_edges: inv.n_edges,
            n_interior: inv.n_interior,
            n_incoming: inv.m,
            n_outgoing: inv.n,
            genus: inv.genus,
            dim_units: inv.dim_units,
        };
        put(out, v, "out")
    })
}

/// Contracts interior edges until none is contractible. `steps` may be NULL.
///
/// # Safety
/// `q` must be a live quiver; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qham_quiver_normalize(
    q: *const QhamQuiver,
    out: *mut *mut QhamQuiver,
    steps: *mut usize,
) -> QhamStatus {
    guard(|| {
        let (n, k) = quiver::normalize(&obj(q, "quiver")?.0)?;
        if !steps.is_null() {
            steps.write(k);
        }
        put(out, Box::into_raw(Box::new(QhamQuiver(n))), "out")
    })
}

/// # Safety
/// `q` must be a live quiver; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qham_quiver_to_json(q: *const QhamQuiver, out: *mut *mut c_char) -> QhamStatus {
    guard(|| {
        let s = obj(q, "quiver")?.0.to_json();
        put(out, owned_string(s), "out")
    })
}

/// Parses a cobordism expression such as `copants ; pants`.
///
/// # Safety
/// `expr` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qham_cob_parse(expr: *const c_char, out: *mut *mut QhamMorphism) -> QhamStatus {
    guard(|| {
        let m = cob::parse_expression(str_arg(expr, "expr")?)?;
        put(out, Box::into_raw(Box::new(QhamMorphism(m))), "out")
    })
}

/// # Safety
/// `m` must come from [`qham_cob_parse`] and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qham_cob_free(m: *mut QhamMorphism) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of source circles, target circles and connected components.
///
/// # Safety
/// `m` must be a live morphism; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn qham_cob_shape(
    m: *const QhamMorphism,
    source: *mut usize,
    target: *mut usize,
    components: *mut usize,
) -> QhamStatus {
    guard(|| {
        let m = &obj(m, "morphism")?.0;
        put(source, m.source, "source")?;
        put(target, m.target, "target")?;
        put(components, m.components.len(), "components")
    })
}

/// Image of the morphism under the quasi-Hamiltonian functor, as JSON.
///
/// # Safety
/// `m` and `model` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qham_cob_functor_json(
    m: *const QhamMorphism,
    model: *const QhamModel,
    out: *mut *mut c_char,
) -> QhamStatus {
    guard(|| {
        let rec = cob::n_functor(&obj(m, "morphism")?.0, &obj(model, "model")?.0);
        let s = serde_json::to_string(&rec).map_err(|e| Fail(QhamStatus::Numerical, e.to_string()))?;
        put(out, owned_string(s), "out")
    })
}
