//! Return codes and the thread-local last-error slot.

use std::cell::RefCell;
use std::ffi::{c_char, CString};

pub const EDGECRIT_OK: i32 = 0;
pub const EDGECRIT_ERR_NULL_POINTER: i32 = -1;
pub const EDGECRIT_ERR_INVALID_ARGUMENT: i32 = -2;
pub const EDGECRIT_ERR_COMPUTATION: i32 = -3;
pub const EDGECRIT_ERR_PRECISION: i32 = -4;
pub const EDGECRIT_ERR_PANIC: i32 = -5;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

pub(crate) fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    let c = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

pub(crate) fn clear() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

pub(crate) fn code_for(err: &edgecrit::Error) -> i32 {
    use edgecrit::Error as E;
    match err {
        E::Config(_) | E::InvalidFamily(_) | E::OutOfRange { .. } | E::DegenerateInterval(_) => {
            EDGECRIT_ERR_INVALID_ARGUMENT
        }
        E::PrecisionExhausted(_) | E::NonPositiveNorm(_) => EDGECRIT_ERR_PRECISION,
        _ => EDGECRIT_ERR_COMPUTATION,
    }
}

/// Message for the most recent failure on this thread, or NULL.
///
/// The pointer stays valid until the next edgecrit call on the same thread.
#[no_mangle]
pub extern "C" fn edgecrit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn edgecrit_clear_error() {
    clear();
}
